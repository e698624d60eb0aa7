use std::path::Path;

use qesdirac::implicit::{constraint_residual, relative_constraint_max, DEFAULT_TAIL_FRACTION};
use qesdirac::solver::sign_change_brackets;
use qesdirac::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::gridspec::{GridSpec, ENV_VAR};
use crate::output::*;

/// Largest shooting deviation accepted as agreement.
const SHOOT_TOLERANCE: f64 = 1e-6;
/// Doublet consistency thresholds for `verified`.
const ORACLE_TOLERANCE: f64 = 1e-12;
const MISMATCH_TOLERANCE: f64 = 1e-10;

pub fn run(cli: &Cli) -> CliResult<()> {
    let env = std::env::var(ENV_VAR).ok();
    let g = &cli.grid;
    let spec = || GridSpec::resolve(env.as_deref(), g.rmin, g.rmax, g.nodes, g.scheme.as_deref());
    match &cli.command {
        Command::Screened(a) => screened(a, spec()?),
        Command::Implicit(a) => implicit(a, spec()?),
        Command::Doublet(a) => doublet(a, spec()?),
        Command::Verify(a) => verify(a),
        Command::Scan(a) => scan(a, spec),
    }
}

fn report(
    command: &str,
    inputs: &impl Serialize,
    grid: &GridSpec,
    outputs: &[&Path],
    results: Value,
    residual_norms: Value,
    verified: bool,
) -> CliResult<Value> {
    Ok(json!({
        "tool": "qesdirac",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": serde_json::to_value(inputs)?,
        "grid": grid,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "results": results,
        "residual_norms": residual_norms,
        "verified": verified,
    }))
}

fn centrifugal(m: &ModelArgs) -> CliResult<CentrifugalTerm> {
    match (m.kappa, m.ell) {
        (Some(k), _) => Ok(CentrifugalTerm::new(k)),
        (None, Some(ell)) => {
            let q = m.qabs.ok_or_else(|| CliError::input("--ell needs --qabs"))?;
            let sign = Sign::from_int(m.sign.unwrap_or(1))?;
            if ell == -1 {
                Ok(CentrifugalTerm::marginal(q, sign)?)
            } else {
                Ok(kappa_from_quantum_numbers(ell, q, sign)?)
            }
        }
        (None, None) => Err(CliError::input("one of --kappa or --ell/--qabs is required")),
    }
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::input(format!("missing --{flag}")))
}

fn build_model(m: &ModelArgs, grid: &GridRef) -> CliResult<ScreenedModel> {
    let eps = Sign::from_int(required(m.eps, "eps")?)?;
    let kappa = centrifugal(m)?;
    Ok(screened_model(
        eps,
        required(m.t, "t")?,
        required(m.lambda, "lambda")?,
        required(m.h, "h")?,
        required(m.mu, "mu")?,
        &kappa,
        grid,
    )?)
}

/// Shooting check of the level at `e`. Systems with negative mass are
/// shot through their negated image.
fn shoot(system: &DiracSystem, e: f64) -> Value {
    let (sys, target, sign) = if system.m < 0.0 {
        (system.negated(), -e, -1.0)
    } else {
        (system.clone(), e, 1.0)
    };
    let m = sys.m;
    if !(target.abs() < m) {
        return json!({
            "status": "skipped",
            "reason": format!("E = {e} lies outside (-|M|, |M|)"),
        });
    }
    let w = 0.1 * (m - target.abs());
    match find_eigenvalue(&sys, &ShootingConfig::new(target - w, target + w)) {
        Ok(x) => {
            let found = sign * x;
            json!({
                "status": "ok",
                "energy": found,
                "deviation": (found - e).abs(),
                "agrees": (found - e).abs() <= SHOOT_TOLERANCE,
            })
        }
        Err(err) => json!({ "status": "failed", "reason": err.to_string() }),
    }
}

fn agrees(shooting: &Value) -> bool {
    shooting["agrees"] == Value::Bool(true)
}

fn screened(a: &ScreenedArgs, spec: GridSpec) -> CliResult<()> {
    let grid = spec.build()?;
    let model = build_model(&a.model, &grid)?;
    let c = model.couplings;
    let log_f = RadialFunction::from_fn(&grid, |r| c.log_derivative_at(r));
    let logs = LogColumns::new(log_f.clone(), log_f);
    let csv = path_with(&a.out, ".csv");
    let json_path = path_with(&a.out, ".json");
    write_profile(&csv, &model.system, &model.solution, &logs)?;

    let residual = residual_norm(&model.system, &model.solution)?;
    let shooting = shoot(&model.system, model.solution.e);
    let verified = agrees(&shooting);
    let results = json!({
        "E": model.solution.e,
        "M": model.system.m,
        "couplings": {
            "eps": c.eps.value::<f64>(),
            "t": c.t,
            "lambda": c.lambda,
            "h": c.h,
            "mu": c.mu,
            "kappa": c.kappa,
            "alpha": c.alpha,
            "beta": c.beta,
            "alpha_s": c.alpha_s,
            "beta_s": c.beta_s,
        },
        "amplitude_ratio": c.amplitude_ratio(),
        "normalizable": model.solution.is_normalizable(),
        "shooting": shooting,
    });
    let norms = json!({ "radial_equation": residual });
    let r = report("screened", a, &spec, &[&csv, &json_path], results, norms, verified)?;
    write_json(&json_path, &r)
}

fn implicit(a: &ImplicitArgs, spec: GridSpec) -> CliResult<()> {
    let grid = spec.build()?;
    let kappa_term;
    let expr_term;
    let u: &dyn RadialProfile<f64> = match (a.kappa, &a.u) {
        (Some(k), None) => {
            kappa_term = CentrifugalTerm::new(k);
            &kappa_term
        }
        (None, Some(text)) => {
            expr_term = parse(text)?;
            &expr_term
        }
        _ => return Err(CliError::input("exactly one of --kappa or --U is required")),
    };
    let split = match (a.e, a.m) {
        (Some(e), Some(m)) => EnergySplit::Given { e, m },
        _ => EnergySplit::Tail {
            fraction: a.tail_fraction.unwrap_or(DEFAULT_TAIL_FRACTION),
        },
    };
    let text = |v: &Option<String>, flag: &str| -> CliResult<Expression> {
        let t = v
            .as_deref()
            .ok_or_else(|| CliError::input(format!("--mode {} needs --{flag}", mode_name(a.mode))))?;
        Ok(parse(t)?)
    };
    let reject = |present: bool, flag: &str| -> CliResult<()> {
        if present {
            Err(CliError::input(format!(
                "--{flag} does not apply to --mode {}",
                mode_name(a.mode)
            )))
        } else {
            Ok(())
        }
    };
    let result = match a.mode {
        Mode::Trig => {
            reject(a.s.is_some(), "S")?;
            reject(a.t.is_some(), "T")?;
            reject(a.xi0.is_some(), "xi0")?;
            let p = TrigParametrization {
                a: text(&a.a, "A")?,
                b: text(&a.b, "B")?,
            };
            trig_pipeline(&p, u, &grid, split)?
        }
        Mode::Hyp => {
            reject(a.a.is_some(), "A")?;
            reject(a.b.is_some(), "B")?;
            let p = HyperbolicParametrization {
                s: text(&a.s, "S")?,
                t: text(&a.t, "T")?,
                xi0: a.xi0.unwrap_or(0.0),
            };
            hyperbolic_pipeline(&p, u, &grid, split)?
        }
    };

    let csv = path_with(&a.out, ".csv");
    let json_path = path_with(&a.out, ".json");
    write_profile(
        &csv,
        &result.system,
        &result.solution,
        &LogColumns::from_logs(&result.logs),
    )?;
    let d = result.diagnostics;
    let shooting = shoot(&result.system, result.solution.e);
    let verified = agrees(&shooting);
    let results = json!({
        "E": result.solution.e,
        "M": result.system.m,
        "split": split,
        "tail_deviation": { "E_plus_V": d.tail_deviation_e, "M_plus_W": d.tail_deviation_m },
        "normalizable": d.normalizable,
        "xi0": result.logs.xi0,
        "xi": result.logs.xi.values(),
        "shooting": shooting,
    });
    let norms = json!({
        "radial_equation": d.residual_norm,
        "constraint_max": d.constraint_max,
        "constraint_relative_max": d.constraint_relative_max,
    });
    let r = report("implicit", a, &spec, &[&csv, &json_path], results, norms, verified)?;
    write_json(&json_path, &r)
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Trig => "trig",
        Mode::Hyp => "hyp",
    }
}

fn doublet(a: &DoubletArgs, spec: GridSpec) -> CliResult<()> {
    let grid = spec.build()?;
    let shape = DoubletShape {
        a: parse(&a.a)?,
        b: parse(&a.b)?,
        delta: a.delta,
        e1: a.e1,
        m: a.m,
    };
    let u = CentrifugalTerm::new(a.kappa).sample(&grid);
    let res = doublet_systems(&shape, &u, &grid)?;
    let e2 = a.e1 + a.delta;
    let (v2, w2) = reconstruct_potentials(&res.logs2, &u, e2, a.m)?;
    let dv = res.system.v.sub(&v2)?;
    let dw = res.system.w.sub(&w2)?;

    let shared = path_with(&a.out, "_shared.csv");
    let state1 = path_with(&a.out, "_state1.csv");
    let state2 = path_with(&a.out, "_state2.csv");
    let json_path = path_with(&a.out, ".json");
    write_table(
        &shared,
        &["r", "U", "V", "W", "dV", "dW"],
        &[
            grid.nodes(),
            u.values(),
            res.system.v.values(),
            res.system.w.values(),
            dv.values(),
            dw.values(),
        ],
    )?;
    write_profile(&state1, &res.system, &res.sol1, &LogColumns::from_logs(&res.logs1))?;
    write_profile(&state2, &res.system, &res.sol2, &LogColumns::from_logs(&res.logs2))?;

    let d = res.diagnostics;
    let level = |normalizable: bool, e: f64| {
        if normalizable {
            shoot(&res.system, e)
        } else {
            json!({ "status": "skipped", "reason": "state is not normalizable on the grid" })
        }
    };
    let shoot1 = level(d.normalizable_1, a.e1);
    let shoot2 = level(d.normalizable_2, e2);
    let ran_ok = |s: &Value| s["status"] == "skipped" || agrees(s);
    let verified = d.oracle_agreement <= ORACLE_TOLERANCE
        && d.mismatch_relative <= MISMATCH_TOLERANCE
        && ran_ok(&shoot1)
        && ran_ok(&shoot2);
    let results = json!({
        "E1": a.e1,
        "E2": e2,
        "M": a.m,
        "mismatch": d.mismatch,
        "mismatch_relative": d.mismatch_relative,
        "oracle_agreement": d.oracle_agreement,
        "normalizable": [d.normalizable_1, d.normalizable_2],
        "shooting": [shoot1, shoot2],
    });
    let norms = json!({
        "radial_equation": [d.residual_norm_1, d.residual_norm_2],
        "constraint_relative_max": [d.constraint_relative_max_1, d.constraint_relative_max_2],
    });
    let r = report(
        "doublet",
        a,
        &spec,
        &[&shared, &state1, &state2, &json_path],
        results,
        norms,
        verified,
    )?;
    write_json(&json_path, &r)
}

/// System read from CSV columns `r, U, V, W`.
fn read_system(path: &Path, m: f64) -> CliResult<(GridSpec, DiracSystem, Vec<f64>)> {
    let t = read_table(path)?;
    let r = column(&t, "r", path)?.to_vec();
    let (spec, grid) = GridSpec::infer(&r)?;
    let mk = |name: &str| -> CliResult<RadialFunction> {
        let v = column(&t, name, path)?.to_vec();
        RadialFunction::new(grid.clone(), v).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    };
    let system = DiracSystem::new(mk("U")?, mk("V")?, mk("W")?, m)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    for (name, f) in [("U", &system.u), ("V", &system.v), ("W", &system.w)] {
        if !f.non_finite_nodes().is_empty() {
            return Err(CliError::input(format!(
                "{}: column {name} is not finite",
                path.display()
            )));
        }
    }
    Ok((spec, system, r))
}

fn verify(a: &VerifyArgs) -> CliResult<()> {
    let (spec, system, r) = read_system(&a.system, a.m)?;
    let t = read_table(&a.spinor)?;
    if column(&t, "r", &a.spinor)? != r.as_slice() {
        return Err(CliError::input("system and spinor files have different r columns"));
    }
    let grid = system.grid().clone();
    let mk = |name: &str| -> CliResult<RadialFunction> {
        let v = column(&t, name, &a.spinor)?.to_vec();
        RadialFunction::new(grid.clone(), v).map_err(|e| CliError::input(e.to_string()))
    };
    let sol = SpinorSolution::new(mk("f")?, mk("g")?, a.e).map_err(|e| CliError::input(e.to_string()))?;
    let residual = residual_norm(&system, &sol)?;
    let (row1, row2) = system.residual_rows(&sol)?;
    let n = r.len();
    let row_max = (1..n - 1).fold(0.0f64, |acc, i| acc.max(row1.at(i).abs() + row2.at(i).abs()));

    let logs_part = match log_derivatives(&sol) {
        Ok(logs) => {
            let constraint = constraint_residual(&system, a.e, &logs)?.max_abs();
            let relative = relative_constraint_max(&system, a.e, &logs)?;
            let reconstruction = match reconstruct_potentials(&logs, &system.u, a.e, a.m) {
                Ok((v, w)) => json!({
                    "V": v.sub(&system.v)?.max_abs(),
                    "W": w.sub(&system.w)?.max_abs(),
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            json!({
                "constraint_max": constraint,
                "constraint_relative_max": relative,
                "reconstruction_mismatch": reconstruction,
            })
        }
        Err(e) => json!({
            "constraint_max": null,
            "constraint_relative_max": null,
            "reconstruction_mismatch": { "error": e.to_string() },
        }),
    };
    let verified = residual <= a.tol;
    let results = json!({
        "E": a.e,
        "M": a.m,
        "residual_max": row_max,
        "spinor_scale": sol.f.max_abs().max(sol.g.max_abs()),
        "normalizable": sol.is_normalizable(),
        "logarithmic": logs_part,
    });
    let norms = json!({ "radial_equation": residual });
    let outputs: Vec<&Path> = a.out.iter().map(|p| p.as_path()).collect();
    let r = report("verify", a, &spec, &outputs, results, norms, verified)?;
    match &a.out {
        Some(path) => write_json(path, &r),
        None => {
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(())
        }
    }
}

fn scan(a: &ScanArgs, spec: impl Fn() -> CliResult<GridSpec>) -> CliResult<()> {
    let (spec, system) = match &a.system {
        Some(path) => {
            let m = a.m.ok_or_else(|| CliError::input("--system needs --M"))?;
            let (spec, system, _) = read_system(path, m)?;
            (spec, system)
        }
        None => {
            let spec = spec()?;
            (spec, build_model(&a.model, &spec.build()?)?.system)
        }
    };
    let m = system.m.abs();
    let lo = a.emin.unwrap_or(-m * (1.0 - 1e-9));
    let hi = a.emax.unwrap_or(m * (1.0 - 1e-9));
    if !(lo < hi) {
        return Err(CliError::input(format!("--emin {lo} must be below --emax {hi}")));
    }
    let energies: Vec<f64> = match a.points {
        0 => Vec::new(),
        1 => vec![lo],
        k => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    };
    let match_point = a.match_node.map_or(MatchPoint::Auto, MatchPoint::Node);
    let mut scanned = Vec::new();
    if !energies.is_empty() {
        if !(-m < lo && hi < m) {
            return Err(CliError::Numerical(format!(
                "scan range [{lo}, {hi}] must lie inside (-{m}, {m})"
            )));
        }
        let cfg = ShootingConfig::new(lo, hi).with_match(match_point);
        scanned = energy_scan(&system, &energies, &cfg)?;
        if let Some(err) = scanned.iter().find_map(|(_, d)| d.as_ref().err()) {
            if scanned.iter().all(|(_, d)| d.is_err()) {
                return Err(err.clone().into());
            }
        }
    }
    let d: Vec<f64> = scanned.iter().map(|(_, d)| *d.as_ref().unwrap_or(&f64::NAN)).collect();
    let csv = path_with(&a.out, ".csv");
    let json_path = path_with(&a.out, ".json");
    write_table(&csv, &["E", "D"], &[&energies, &d])?;

    let roots: Vec<Value> = sign_change_brackets(&scanned)
        .into_iter()
        .map(|(blo, bhi)| {
            let cfg = ShootingConfig::new(blo, bhi).with_match(match_point);
            match find_eigenvalue(&system, &cfg) {
                Ok(e) => json!({ "bracket": [blo, bhi], "energy": e }),
                Err(err) => json!({ "bracket": [blo, bhi], "error": err.to_string() }),
            }
        })
        .collect();
    let failed: Vec<Value> = scanned
        .iter()
        .filter_map(|(e, d)| d.as_ref().err().map(|err| json!({ "E": e, "error": err.to_string() })))
        .collect();
    let verified = !roots.is_empty() && roots.iter().all(|r| r.get("energy").is_some());
    let results = json!({
        "M": system.m,
        "range": [lo, hi],
        "points": a.points,
        "roots": roots,
        "failed_points": failed,
    });
    let r = report("scan", a, &spec, &[&csv, &json_path], results, json!({}), verified)?;
    write_json(&json_path, &r)
}
