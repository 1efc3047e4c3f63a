//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs the same configurations as `phibench all`, then re-reads the report
//! tables and applies the acceptance tolerances to them directly.
//! Set `PHIBENCH_BLESS=1` to rewrite the NPP band baseline.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use phibench_cli::commands::{run_single, suite_configs};
use phibench_cli::config::{Command as Cmd, RunConfig};
use phibench_cli::report::{Outcome, Status, Table};

type Verdict = Result<String, String>;

fn scratch() -> PathBuf {
    std::env::temp_dir().join(format!("phibench-acceptance-{}", std::process::id()))
}

fn suite(label: &str) -> RunConfig {
    let base = RunConfig::defaults_for(Cmd::All);
    suite_configs(&base)
        .into_iter()
        .find(|(l, _)| l == label)
        .unwrap_or_else(|| panic!("no suite run {label}"))
        .1
}

fn run(cfg: &RunConfig) -> Result<Outcome, String> {
    let o = run_single(cfg, &scratch().join("cache")).map_err(|e| format!("{} error: {e}", cfg.command))?;
    if o.status() != Status::Pass {
        let bad: Vec<_> = o
            .checks
            .iter()
            .filter(|c| !c.passed || c.flagged)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        return Err(format!("{} {:?}: {}", cfg.command, o.status(), bad.join("; ")));
    }
    Ok(o)
}

fn table<'a>(o: &'a Outcome, name: &str) -> Result<&'a Table, String> {
    o.table(name).ok_or_else(|| format!("{} has no {name} table", o.command))
}

fn strings<'a>(t: &'a Table, col: &str) -> Vec<&'a str> {
    let j = t.column(col).unwrap_or_else(|| panic!("no column {col}"));
    t.rows.iter().map(|r| r[j].as_str()).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn phi_rho() -> Verdict {
    let o = run(&suite("phi-const-rho"))?;
    let t = table(&o, "points")?;
    let radius = t.floats("radius");
    let dev: Vec<f64> = t.floats("phi").iter().map(|p| (p - 1.0).abs()).collect();
    ensure(t.rows.len() == 51, || format!("{} points", t.rows.len()))?;
    ensure(min(&radius) == 0.0 && (max(&radius) - 5.0).abs() < 1e-12, || "grid is not [0, 5]".into())?;
    ensure(max(&dev) < 1e-6, || format!("max |phi - 1| = {:e}", max(&dev)))?;
    Ok(format!("51 points on [0, 5], max |phi - 1| = {:.1e}", max(&dev)))
}

fn functional_equation() -> Verdict {
    let o = run(&suite("functional-eq"))?;
    let t = table(&o, "residuals")?;
    let params: BTreeSet<&str> = strings(t, "lambda").into_iter().collect();
    ensure(params == BTreeSet::from(["0", "rho*0.4", "i*1"]), || format!("parameters {params:?}"))?;
    ensure(t.rows.len() == 300, || format!("{} rows", t.rows.len()))?;
    let radii = [t.floats("x_radius"), t.floats("y_radius")].concat();
    ensure(max(&radii) <= 3.0, || "points beyond radius 3".into())?;
    let r = max(&t.floats("residual"));
    ensure(r < 1e-5, || format!("max residual {r:e}"))?;
    Ok(format!("100 pairs x 3 parameters, max residual {r:.1e}"))
}

fn baseline_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/baselines/npp_band.csv")
}

fn npp() -> Verdict {
    let mut lines = vec!["run,min_ratio,max_ratio".to_string()];
    for label in ["npp-scan-sl2-zero", "npp-scan-sl2-half-rho"] {
        let o = run(&suite(label))?;
        let rows = table(&o, "rows")?;
        let radius = rows.floats("radius");
        let inner = radius.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        ensure(inner <= 0.1 && max(&radius) >= 6.0 - 1e-12, || format!("{label}: scan misses [0.1, 6]"))?;
        let band = table(&o, "band")?;
        let (lo, hi) = (band.floats("min_ratio")[0], band.floats("max_ratio")[0]);
        ensure(lo.is_finite() && hi.is_finite() && lo > 0.0, || format!("{label}: band [{lo}, {hi}]"))?;
        let near = band.floats("near_origin_deviation")[0];
        ensure(near < 1e-3, || format!("{label}: ratio at the origin off by {near:e}"))?;
        lines.push(format!("{label},{lo:.9e},{hi:.9e}"));
    }
    let text = lines.join("\n") + "\n";
    let path = baseline_path();
    if std::env::var_os("PHIBENCH_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        fs::write(&path, &text).map_err(|e| e.to_string())?;
    }
    let stored = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    for (now, then) in text.lines().zip(stored.lines()).skip(1) {
        let parse = |l: &str| -> Vec<f64> { l.split(',').skip(1).map(|x| x.parse().unwrap()).collect() };
        let (a, b) = (parse(now), parse(then));
        for (x, y) in a.iter().zip(&b) {
            ensure((x - y).abs() <= 1e-8 * y.abs(), || format!("band drifted from baseline: {now} vs {then}"))?;
        }
    }
    ensure(text.lines().count() == stored.lines().count(), || "baseline has other runs".into())?;

    let o = run(&suite("npp-scan-sl3-zero"))?;
    let band = table(&o, "band")?;
    Ok(format!(
        "SL(2) bands match baseline; SL(3) Monte Carlo band [{:.3}, {:.3}] positive within 3 sigma",
        band.floats("min_ratio")[0],
        band.floats("max_ratio")[0]
    ))
}

fn compare() -> Verdict {
    let o = run(&suite("compare-rho-half-rho"))?;
    let v = table(&o, "verdict")?;
    ensure(strings(v, "hull_member") == ["false"], || "rho in hull of W(rho/2)".into())?;
    ensure(strings(v, "witness_point") != ["none"], || "no witness for rho vs rho/2".into())?;
    let mut detail = Vec::new();
    for label in ["compare-a1", "compare-a2"] {
        let o = run(&suite(label))?;
        let t = table(&o, "pairs")?;
        ensure(t.rows.len() == 200, || format!("{label}: {} pairs", t.rows.len()))?;
        let decisive = strings(t, "decisive");
        let consistent = strings(t, "consistent");
        let n = decisive.iter().filter(|d| **d == "true").count();
        let bad = decisive.iter().zip(&consistent).filter(|(d, c)| **d == "true" && **c != "true").count();
        ensure(bad == 0, || format!("{label}: {bad} decisive pairs disagree with the hull"))?;
        detail.push(format!("{label} {n}/200 decisive"));
    }
    for label in ["hull-a1", "hull-a2"] {
        let o = run(&suite(label))?;
        let t = table(&o, "pairs")?;
        ensure(t.rows.len() == 1000, || format!("{label}: {} pairs", t.rows.len()))?;
        ensure(strings(t, "fast") == strings(t, "brute"), || format!("{label}: fast != brute"))?;
    }
    Ok(format!("{}; fast = brute on 2 x 1000 pairs", detail.join(", ")))
}

fn weyl_hermitean() -> Verdict {
    let o = run(&suite("hermitean"))?;
    let w = table(&o, "weyl")?;
    ensure(strings(w, "group") == ["A1", "A2", "B2"], || "groups".into())?;
    ensure(strings(w, "order") == ["2", "6", "8"], || format!("orders {:?}", strings(w, "order")))?;
    ensure(strings(w, "minus_identity") == ["true", "false", "true"], || "-I membership".into())?;
    let c = table(&o, "classification")?;
    ensure(c.rows.len() == 100, || format!("{} parameters", c.rows.len()))?;
    for (kind, herm) in strings(c, "kind").iter().zip(strings(c, "hermitean")) {
        let want = match *kind {
            "root-line" => "true",
            "near-line" => "false",
            _ => continue,
        };
        ensure(herm == want, || format!("{kind} classified {herm}"))?;
    }
    ensure(strings(c, "hermitean") == strings(c, "expected"), || "generic parameters misclassified".into())?;
    Ok("|W| = 2, 6, 8; -I in A1, B2 only; 100 A2 parameters classified".into())
}

fn critical_q() -> Verdict {
    let mut n = 0;
    for label in ["critical-q-sl2", "critical-q-sl3"] {
        let o = run(&suite(label))?;
        let t = table(&o, "exponents")?;
        let params = strings(t, "lambda");
        let q = t.floats("q");
        for want in [0.0, 0.25, 0.5, 2.0 / 3.0] {
            let i = params
                .iter()
                .position(|p| p.strip_prefix("rho*").and_then(|x| x.parse::<f64>().ok()) == Some(want))
                .ok_or_else(|| format!("{label}: t = {want} missing"))?;
            let exact = 2.0 / (1.0 - want);
            ensure((q[i] - exact).abs() <= 1e-12 * exact, || format!("{label}: q({want}) = {}", q[i]))?;
            n += 1;
        }
    }
    Ok(format!("{n} exponents equal 2/(1-t)"))
}

fn submultiplicativity() -> Verdict {
    let cfg = suite("conv-submult");
    ensure(cfg.samples >= 100_000, || format!("{} samples", cfg.samples))?;
    let o = run(&cfg)?;
    let p = table(&o, "points")?;
    let n = table(&o, "norms")?;
    ensure(p.rows.len() == 5 * 50 && n.rows.len() == 5, || "expected 5 pairs x 50 points".into())?;
    // margins already include the 3 sigma allowance
    let (pm, nm) = (min(&p.floats("margin")), min(&n.floats("margin")));
    ensure(pm >= 0.0, || format!("pointwise margin {pm:e}"))?;
    ensure(nm >= 0.0, || format!("norm margin {nm:e}"))?;
    Ok(format!("5 pairs x 50 points, worst margins {pm:.2e} (points), {nm:.2e} (norms)"))
}

fn norm_axioms() -> Verdict {
    let mut rows = 0;
    for label in ["norm-lambda", "star-norm"] {
        let o = run(&suite(label))?;
        let t = table(&o, "properties")?;
        let m = min(&t.floats("margin"));
        ensure(m >= 0.0, || format!("{label}: margin {m:e}"))?;
        rows += t.rows.len();
    }
    Ok(format!("{rows} property checks, all within tolerance"))
}

fn eigenfunction() -> Verdict {
    let o = run(&suite("eigenfunction"))?;
    let t = table(&o, "residuals")?;
    let params: BTreeSet<&str> = strings(t, "lambda").into_iter().collect();
    ensure(params == BTreeSet::from(["0", "rho*0.5", "rho"]), || format!("parameters {params:?}"))?;
    ensure(max(&t.floats("radius")) <= 2.0, || "points beyond radius 2".into())?;
    let r = max(&t.floats("residual"));
    ensure(r < 1e-4, || format!("max residual {r:e}"))?;
    Ok(format!("{} residuals, max {r:.1e}", t.rows.len()))
}

fn principal_series() -> Verdict {
    let o = run(&suite("rep-unitarity"))?;
    let t = table(&o, "pairs")?;
    ensure(t.rows.len() == 100, || format!("{} pairs", t.rows.len()))?;
    let u = max(&[t.floats("norm_defect"), t.floats("inner_defect")].concat());
    ensure(u <= 1e-6, || format!("unitarity defect {u:e}"))?;

    let o = run(&suite("rep-phi-lock"))?;
    let lock = max(&table(&o, "points")?.floats("residual"));
    ensure(lock <= 1e-6, || format!("convention lock residual {lock:e}"))?;

    let cfg = suite("thmB-kfinite");
    ensure(cfg.k_grid == 8 && cfg.grid_radius == 4.0 && cfg.tolerance == 1e-6, || "K-finite settings".into())?;
    let o = run(&cfg)?;
    let k = table(&o, "bound")?;
    let modes: BTreeSet<(&str, &str)> = strings(k, "m").into_iter().zip(strings(k, "n")).collect();
    ensure(
        modes == BTreeSet::from([("0", "0"), ("0", "2"), ("2", "2"), ("0", "4")]),
        || format!("modes {modes:?}"),
    )?;
    let over = k
        .floats("coeff_abs")
        .iter()
        .zip(k.floats("bound"))
        .map(|(c, b)| c - b)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(over <= 1e-6, || format!("K-finite coefficient exceeds phi_0 by {over:e}"))?;

    let o = run(&suite("thmB-rms"))?;
    let r = table(&o, "bound")?;
    let pairs: BTreeSet<&str> = strings(r, "pair").into_iter().collect();
    ensure(pairs.len() == 10, || format!("{} pairs", pairs.len()))?;
    let m = min(&r.floats("margin"));
    ensure(m >= 0.0, || format!("RMS margin {m:e}"))?;
    Ok(format!(
        "unitarity {u:.1e}, lock {lock:.1e}, K-finite excess {over:.1e}, RMS margin {m:.2e}"
    ))
}

fn list_files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect())
        .unwrap_or_default();
    out.sort();
    out
}

fn full_suite() -> Verdict {
    let dirs = [scratch().join("all-1"), scratch().join("all-2")];
    for (dir, threads) in dirs.iter().zip(["1", "2"]) {
        let _ = fs::remove_dir_all(dir);
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_phibench"))
            .args(["all", "--seed", "0x5EED", "--out"])
            .arg(dir)
            .env("PHIBENCH_THREADS", threads)
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.code() == Some(0), || format!("all exited with {status}"))?;
        ensure(start.elapsed() < Duration::from_secs(30 * 60), || "all took over 30 min".into())?;
    }
    let (a, b) = (list_files(&dirs[0]), list_files(&dirs[1]));
    ensure(!a.is_empty(), || "no reports written".into())?;
    let names = |v: &[PathBuf]| v.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    ensure(names(&a) == names(&b), || "report sets differ".into())?;
    for (x, y) in a.iter().zip(&b) {
        ensure(fs::read(x).ok() == fs::read(y).ok(), || format!("{} differs", x.display()))?;
    }
    Ok(format!("exit 0 twice, {} reports byte-identical across 1 and 2 threads", a.len()))
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let min = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion { name: "phi_rho = 1 on SL(2)", limit: Duration::from_secs(5), run: phi_rho },
        Criterion { name: "functional equation", limit: min(2), run: functional_equation },
        Criterion { name: "NPP envelope", limit: min(5), run: npp },
        Criterion { name: "phi comparison vs Weyl hull", limit: min(5), run: compare },
        Criterion { name: "Weyl groups and hermitean set", limit: Duration::from_secs(10), run: weyl_hermitean },
        Criterion { name: "critical exponent", limit: Duration::from_secs(1), run: critical_q },
        Criterion { name: "convolution submultiplicativity", limit: min(10), run: submultiplicativity },
        Criterion { name: "norm axioms", limit: min(3), run: norm_axioms },
        Criterion { name: "eigenfunction identity", limit: min(2), run: eigenfunction },
        Criterion { name: "principal series", limit: min(5), run: principal_series },
        Criterion { name: "full suite reproducibility", limit: min(60), run: full_suite },
    ];
    let _ = fs::remove_dir_all(scratch());
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = (c.run)();
        let took = start.elapsed();
        let verdict = match verdict {
            Ok(d) if took > c.limit => Err(format!("{d}; over the {:.0} s limit", c.limit.as_secs_f64())),
            v => v,
        };
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += verdict.is_err() as usize;
        println!("{tag} {:>2} {} ({:.1} s): {detail}", i + 1, c.name, took.as_secs_f64());
    }
    let _ = fs::remove_dir_all(scratch());
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
