use crate::config::{Command, Coords, RuleKind, RunConfig};

/// Relative error budget of the Monte Carlo runs on SL(3, R).
pub const MC_TOLERANCE: f64 = 5e-2;
/// Sample variance at larger radii is too heavy-tailed to trust 3 sigma.
pub const MC_COMPARE_RADIUS: f64 = 1.5;

/// The runs of `all`, labelled, with the settings of the acceptance suite.
/// The seed, thread count and output path of `base` carry over; every
/// other key takes the command default.
pub fn suite_configs(base: &RunConfig) -> Vec<(String, RunConfig)> {
    let mk = |command: Command, edit: &dyn Fn(&mut RunConfig)| {
        let mut c = RunConfig::defaults_for(command);
        c.seed = base.seed;
        c.threads = base.threads;
        c.out = base.out.clone();
        edit(&mut c);
        c
    };
    let none = |_: &mut RunConfig| {};
    let mut runs: Vec<(String, RunConfig)> = vec![
        ("phi-eval".into(), mk(Command::PhiEval, &|c| {
            c.lambda = Coords::Rho(0.5);
            c.cache = false;
        })),
        ("phi-const-rho".into(), mk(Command::PhiConstRho, &none)),
        ("functional-eq".into(), mk(Command::FunctionalEq, &none)),
        ("npp-scan-sl2-zero".into(), mk(Command::NppScan, &none)),
        ("npp-scan-sl2-half-rho".into(), mk(Command::NppScan, &|c| c.lambda = Coords::Rho(0.5))),
        ("npp-scan-sl3-zero".into(), mk(Command::NppScan, &|c| {
            c.group = "sl(3,R)".into();
            c.rule = RuleKind::MonteCarlo;
            c.grid_radii = 12;
            c.tolerance = MC_TOLERANCE;
        })),
        ("compare-rho-half-rho".into(), mk(Command::Compare, &none)),
        ("compare-a1".into(), mk(Command::Compare, &|c| {
            c.group = "A1".into();
            c.pairs = 200;
        })),
        ("compare-a2".into(), mk(Command::Compare, &|c| {
            c.group = "A2".into();
            c.pairs = 200;
            c.rule = RuleKind::MonteCarlo;
            c.tolerance = MC_TOLERANCE;
            c.grid_radius = MC_COMPARE_RADIUS;
        })),
    ];
    for g in ["A1", "A2", "B2"] {
        runs.push((
            format!("hull-{}", g.to_lowercase()),
            mk(Command::Hull, &|c| c.group = g.into()),
        ));
    }
    runs.extend([
        ("hermitean".into(), mk(Command::Hermitean, &none)),
        ("minimal-lambda".into(), mk(Command::MinimalLambda, &none)),
        ("critical-q-sl2".into(), mk(Command::CriticalQ, &none)),
        ("critical-q-sl3".into(), mk(Command::CriticalQ, &|c| c.group = "sl(3,R)".into())),
        ("rms".into(), mk(Command::Rms, &none)),
        ("conv-submult".into(), mk(Command::ConvSubmult, &none)),
        ("norm-lambda".into(), mk(Command::NormLambda, &none)),
        ("star-norm".into(), mk(Command::StarNorm, &none)),
        ("eigenfunction".into(), mk(Command::Eigenfunction, &none)),
        ("rep-unitarity".into(), mk(Command::RepUnitarity, &none)),
        ("rep-phi-lock".into(), mk(Command::RepPhiLock, &none)),
        ("thmB-kfinite".into(), mk(Command::ThmBKfinite, &none)),
        ("thmB-rms".into(), mk(Command::ThmBRms, &none)),
    ]);
    runs
}
