use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hyperbox::estimators::coarse_grained_paths;
use hyperbox::exec::{threads_from_env, with_threads};
use hyperbox::sampler::DEFAULT_Z_MAX;
use hyperbox::{
    estimate_cov_curve, estimate_variance_growth, fit_rv_exponent, Exec, LimitKernel, ModelDescriptor, RV2DParams,
    RunOptions, SeedSpec,
};
use serde_json::{json, Map, Value};

use crate::config::{
    self, CompareConfig, Family, OneOrMany, SimulateConfig, TheoryConfig, DEFAULT_A_VALUES, LATTICE_RADIUS,
};
use crate::output::{field, num, sha256_hex, Csv, RunOutput, SIDECAR};
use crate::CliError;

const DEFAULT_FIT_N: f64 = 4096.0;
const DEFAULT_SIGMAS: f64 = 3.0;
const SE_FLOOR: f64 = 1e-12;

fn default_model() -> ModelDescriptor {
    ModelDescriptor::Mixture { d: 2, a: Some(0.5), weights: None }
}

fn check_a(a: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(CliError::Config(format!("a must lie in [0, 1], got {a}")))
    }
}

/// Resolves `family`, `d`, `a` and `model` to kernels (one per `a`).
fn kernels(
    family: Family,
    d: Option<usize>,
    a: Option<Vec<f64>>,
    model: Option<&ModelDescriptor>,
    fit_n: Option<f64>,
) -> Result<Vec<(Option<f64>, LimitKernel)>, CliError> {
    match family {
        Family::Integrable => {
            if a.is_some() {
                return Err(CliError::Config("`a` does not apply to the integrable family".into()));
            }
            let d = d.unwrap_or(1);
            if !(1..=2).contains(&d) {
                return Err(CliError::Config(format!("integrable family supports d = 1 or 2, got {d}")));
            }
            Ok(vec![(None, LimitKernel::Integrable { d })])
        }
        Family::Rv1d => {
            if d.is_some_and(|d| d != 1) {
                return Err(CliError::Config("rv1d is one-dimensional".into()));
            }
            let list = a.unwrap_or_else(|| DEFAULT_A_VALUES.to_vec());
            if list.is_empty() {
                return Err(CliError::Config("`a` is empty".into()));
            }
            list.iter().map(|&a| check_a(a).map(|_| (Some(a), LimitKernel::Rv1d { a }))).collect()
        }
        Family::Rv2d => {
            if d.is_some_and(|d| d != 2) {
                return Err(CliError::Config("rv2d is two-dimensional".into()));
            }
            if a.is_some() {
                return Err(CliError::Config("rv2d exponents come from `model`, not `a`".into()));
            }
            let fit_n = fit_n.unwrap_or(DEFAULT_FIT_N);
            if !(fit_n > 1.0 && fit_n.is_finite()) {
                return Err(CliError::Config(format!("fit_n must be finite and > 1, got {fit_n}")));
            }
            let model = model.cloned().unwrap_or_else(default_model).build()?;
            let params = RV2DParams::fit(&model, fit_n)?;
            Ok(vec![(None, LimitKernel::Rv2d(params))])
        }
    }
}

fn rv2d_summary(k: &LimitKernel) -> Option<Value> {
    match k {
        LimitKernel::Rv2d(p) => Some(json!({ "a_plus": p.a_plus, "a_minus": p.a_minus, "k_plus": p.k_plus })),
        _ => None,
    }
}

fn resolve_threads(config: Option<usize>) -> Result<Option<usize>, CliError> {
    if config == Some(0) {
        return Err(CliError::Config("threads must be >= 1".into()));
    }
    Ok(threads_from_env().or(config))
}

fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn z_header(d: usize) -> Vec<&'static str> {
    if d == 1 {
        vec!["z1"]
    } else {
        vec!["z1", "z2"]
    }
}

pub fn theory(raw: Value) -> Result<u8, CliError> {
    let cfg: TheoryConfig = config::parse(raw)?;
    let a = cfg.a.as_ref().map(OneOrMany::to_vec);
    let ks = kernels(cfg.family, cfg.d, a, cfg.model.as_ref(), cfg.fit_n)?;
    let d = ks[0].1.d();
    let axis: Vec<f64> = match (&cfg.zgrid, cfg.zgrid_lattice.unwrap_or(false)) {
        (Some(_), true) => return Err(CliError::Config("use either zgrid or zgrid_lattice".into())),
        (None, false) => return Err(CliError::Config("a zgrid or zgrid_lattice is required".into())),
        (Some(g), false) => g.values()?,
        (None, true) => (-LATTICE_RADIUS..=LATTICE_RADIUS).map(|i| i as f64).collect(),
    };
    let grid: Vec<Vec<f64>> = if d == 1 {
        axis.iter().map(|&z| vec![z]).collect()
    } else {
        axis.iter().flat_map(|&z1| axis.iter().map(move |&z2| vec![z1, z2])).collect()
    };
    let threads = resolve_threads(cfg.threads)?;
    let family = serde_json::to_value(cfg.family).expect("enum serializes");
    let family = family.as_str().expect("unit variant").to_string();

    let mut csv = Csv::new(&[&["family", "d", "a"][..], &z_header(d), &["cov"]].concat());
    for (a, kernel) in &ks {
        let values: Vec<f64> = with_threads(threads, || {
            hyperbox::exec::map_indexed(Exec::Parallel, grid.len(), |i| kernel.cov(&grid[i]))
        })
        .into_iter()
        .collect::<hyperbox::Result<_>>()?;
        for (z, c) in grid.iter().zip(values) {
            let mut row = vec![family.clone(), d.to_string(), a.map(num).unwrap_or_default()];
            row.extend(z.iter().map(|&v| num(v)));
            row.push(num(c));
            csv.row(row);
        }
    }
    let mut extra = Map::new();
    if let Some(s) = rv2d_summary(&ks[0].1) {
        extra.insert("rv2d".into(), s);
    }
    let run = RunOutput {
        command: "theory",
        seed: None,
        config: serde_json::to_value(&cfg).expect("config serializes"),
        files: vec![("cov_theory.csv", csv.into_bytes())],
        extra,
    };
    run.write(&out_dir(&cfg.out))?;
    Ok(0)
}

pub fn simulate(raw: Value) -> Result<u8, CliError> {
    let cfg: SimulateConfig = config::parse(raw)?;
    let process = cfg.process.build()?;
    let d = process.d;
    let z_max = cfg.z_max.unwrap_or(DEFAULT_Z_MAX);
    let shifts: Option<Vec<Vec<f64>>> = match (&cfg.zgrid, &cfg.shifts) {
        (Some(_), Some(_)) => return Err(CliError::Config("use either zgrid or shifts".into())),
        (Some(g), None) => Some(
            g.values()?
                .into_iter()
                .map(|z| {
                    let mut v = vec![0.0; d];
                    v[0] = z;
                    v
                })
                .collect(),
        ),
        (None, Some(s)) => {
            if s.is_empty() || s.iter().any(|v| v.len() != d) {
                return Err(CliError::Config(format!("shifts must be a non-empty list of {d}-vectors")));
            }
            Some(s.clone())
        }
        (None, None) => None,
    };
    if shifts.is_some() && cfg.n.is_none() {
        return Err(CliError::Config("a covariance curve needs `n`".into()));
    }
    if shifts.is_none() && cfg.n_grid.is_none() {
        return Err(CliError::Config("nothing to do: give n with zgrid/shifts, or n_grid".into()));
    }
    let n_paths = cfg.paths.unwrap_or(0);
    if n_paths > 0 && (cfg.zgrid.is_none() || cfg.n.is_none()) {
        return Err(CliError::Config("paths need `n` and `zgrid`".into()));
    }
    let threads = resolve_threads(cfg.threads)?;
    let seed = SeedSpec::new(cfg.seed);
    let opts = RunOptions { z_max, ..RunOptions::default() };
    let mut files = Vec::new();
    let mut extra = Map::new();

    with_threads(threads, || -> Result<(), CliError> {
        let mut var_ref = cfg.path_var;
        if let (Some(shifts), Some(n)) = (&shifts, cfg.n) {
            let curve = estimate_cov_curve(&process, n, shifts, cfg.replicas, seed, &opts)?;
            let mut csv = Csv::new(
                &[&["process", "d", "n", "R"][..], &z_header(d), &["cov_hat", "se", "cov_theory"]].concat(),
            );
            for i in 0..curve.shifts.len() {
                let mut row = vec![field(&curve.process), d.to_string(), num(n), curve.replicas.to_string()];
                row.extend(curve.shifts[i].iter().map(|&v| num(v)));
                row.push(num(curve.cov_hat[i]));
                row.push(num(curve.se[i]));
                row.push(curve.cov_theory.as_ref().map(|t| num(t[i])).unwrap_or_default());
                csv.row(row);
            }
            files.push(("cov_curve.csv", csv.into_bytes()));
            extra.insert("var_hat".into(), json!(curve.var_hat));
            extra.insert("var_se".into(), json!(curve.var_se));
            var_ref = var_ref.or(Some(curve.var_hat));
        }
        if let Some(grid) = &cfg.n_grid {
            let table = estimate_variance_growth(&process, grid, cfg.replicas, seed, &opts)?;
            let mut csv = Csv::new(&["n", "var_hat", "se"]);
            for r in &table.rows {
                csv.row([num(r.n), num(r.var_hat), num(r.se)]);
            }
            files.push(("var_growth.csv", csv.into_bytes()));
            let fit = match fit_rv_exponent(&table) {
                Ok(f) => json!({
                    "a_hat": f.a_hat,
                    "interval": [f.interval.0, f.interval.1],
                    "reduced_chi2": f.reduced_chi2,
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            extra.insert("fit".into(), fit);
        }
        if n_paths > 0 {
            let zs = shifts.as_ref().expect("checked above");
            let n = cfg.n.expect("checked above");
            let paths = coarse_grained_paths(&process, n, zs, seed, 0..n_paths, var_ref, &opts)?;
            let mut csv = Csv::new(&["replica", "z", "value"]);
            for (p, path) in paths.iter().enumerate() {
                for (z, v) in zs.iter().zip(path) {
                    csv.row([p.to_string(), num(z[0]), num(*v)]);
                }
            }
            files.push(("paths.csv", csv.into_bytes()));
            extra.insert("path_var".into(), json!(var_ref));
        }
        Ok(())
    })?;

    let run = RunOutput {
        command: "simulate",
        seed: Some(cfg.seed),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        files,
        extra,
    };
    run.write(&out_dir(&cfg.out))?;
    Ok(0)
}

struct CurveRow {
    z: Vec<f64>,
    cov_hat: f64,
    se: f64,
}

fn parse_curve(bytes: &[u8]) -> Result<(usize, Vec<CurveRow>), CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Compare("cov_curve is not UTF-8".into()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Compare("cov_curve is empty".into()))?;
    let d = match header {
        "process,d,n,R,z1,cov_hat,se,cov_theory" => 1,
        "process,d,n,R,z1,z2,cov_hat,se,cov_theory" => 2,
        h => return Err(CliError::Compare(format!("unexpected cov_curve header `{h}`"))),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        // The process name may be quoted and contain commas; the numeric
        // columns are the last 3 + d + 3.
        let cells: Vec<&str> = line.rsplitn(d + 7, ',').collect();
        if cells.len() != d + 7 {
            return Err(CliError::Compare(format!("row {} has too few columns", i + 2)));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| CliError::Compare(format!("row {}: `{s}` is not a number", i + 2)))
        };
        // reversed: cov_theory, se, cov_hat, z_d..z_1, R, n, d, process
        let se = parse(cells[1])?;
        let cov_hat = parse(cells[2])?;
        let mut z = (0..d).map(|k| parse(cells[3 + k])).collect::<Result<Vec<_>, _>>()?;
        z.reverse();
        rows.push(CurveRow { z, cov_hat, se });
    }
    if rows.is_empty() {
        return Err(CliError::Compare("cov_curve has no rows".into()));
    }
    Ok((d, rows))
}

/// Checks the run sidecar next to the curve. Returns a problem, if any.
fn sidecar_problem(curve: &Path, bytes: &[u8], expect: Option<&str>) -> Option<String> {
    let name = curve.file_name()?.to_string_lossy().to_string();
    let side = curve.parent().unwrap_or(Path::new(".")).join(SIDECAR);
    let v: Value = match std::fs::read_to_string(&side).map(|t| serde_json::from_str(&t)) {
        Ok(Ok(v)) => v,
        _ => return Some(format!("no readable {SIDECAR} next to {}", curve.display())),
    };
    match v["files"][&name].as_str() {
        Some(h) if h == sha256_hex(bytes) => {}
        Some(_) => return Some(format!("{name} does not match the digest in {SIDECAR}")),
        None => return Some(format!("{SIDECAR} does not list {name}")),
    }
    if let Some(e) = expect {
        let got = v["config_hash"].as_str().unwrap_or("");
        if got != e {
            return Some(format!("config hash {got} differs from the expected {e}"));
        }
    }
    None
}

pub fn compare(raw: Value) -> Result<u8, CliError> {
    let cfg: CompareConfig = config::parse(raw)?;
    let sigmas = cfg.sigmas.unwrap_or(DEFAULT_SIGMAS);
    let abs_tol = cfg.abs_tol.unwrap_or(0.0);
    if !(sigmas >= 0.0 && abs_tol >= 0.0) {
        return Err(CliError::Config("sigmas and abs_tol must be >= 0".into()));
    }
    let mut ks = kernels(cfg.family, cfg.d, cfg.a.map(|a| vec![a]), cfg.model.as_ref(), cfg.fit_n)?;
    let (a, kernel) = ks.remove(0);
    let path = &cfg.cov_curve;
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let force = cfg.force.unwrap_or(false);
    let mut warnings = Vec::new();
    if let Some(p) = sidecar_problem(&cfg.cov_curve, &bytes, cfg.expect_config_hash.as_deref()) {
        if !force {
            return Err(CliError::Compare(format!("{p} (use --force to compare anyway)")));
        }
        warnings.push(p);
    }
    let (d, rows) = parse_curve(&bytes)?;
    if d != kernel.d() {
        return Err(CliError::Compare(format!("cov_curve is {d}-dimensional, kernel is {}-dimensional", kernel.d())));
    }

    let mut report_rows = Vec::new();
    let mut max_dev = 0.0f64;
    let mut pass = true;
    for r in &rows {
        let theory = kernel.cov(&r.z)?;
        let diff = r.cov_hat - theory;
        let dev = diff.abs() / r.se.max(SE_FLOOR);
        let ok = diff.abs() <= (sigmas * r.se).max(abs_tol) + SE_FLOOR;
        max_dev = max_dev.max(dev);
        pass &= ok;
        let theory = theory + 0.0;
        report_rows.push(json!({
            "z": r.z, "cov_hat": r.cov_hat, "se": r.se, "cov_kernel": theory, "deviation": dev, "pass": ok,
        }));
    }
    let family = serde_json::to_value(cfg.family).expect("enum serializes");
    let mut report: BTreeMap<&str, Value> = BTreeMap::new();
    report.insert("cov_curve", json!(cfg.cov_curve));
    report.insert("family", family);
    report.insert("d", json!(d));
    report.insert("a", json!(a));
    if let Some(s) = rv2d_summary(&kernel) {
        report.insert("rv2d", s);
    }
    report.insert("sigmas", json!(sigmas));
    report.insert("abs_tol", json!(abs_tol));
    report.insert("rows", Value::Array(report_rows));
    report.insert("max_deviation", json!(max_dev));
    report.insert("pass", json!(pass));
    report.insert("warnings", json!(warnings));
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    if let Some(out) = &cfg.out {
        let tmp = out.with_extension(format!("{}.tmp", std::process::id()));
        std::fs::write(&tmp, &text)
            .and_then(|_| std::fs::rename(&tmp, out))
            .map_err(|e| {
                let _ = std::fs::remove_file(&tmp);
                CliError::Io(format!("{}: {e}", out.display()))
            })?;
    }
    print!("{text}");
    Ok(if pass { 0 } else { 1 })
}
