use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use aroc_core::aroc::{
    bb_aroc, covariate_threshold, empirical_auc, fpf_grid, placement_values, pooled_roc_bb, pooled_roc_emp,
    BootstrapOptions, CurveEstimate, ScalarEstimate,
};
use aroc_core::data::Dataset;
use aroc_core::ddp::{gibbs_fit, FitResult, GibbsConfig, PriorSpec};
use aroc_core::kernelaroc::{kernel_aroc, KernelOptions};
use aroc_core::modelcrit::{posterior_predictive_stats, waic, Statistic};
use aroc_core::randkit::RngStream;
use aroc_core::simlab::{
    coverage_study_with_truth, generate_scenario, true_aroc_curve, true_aroc_curve_cached, EstimatorConfig,
    SampleSizes, Scenario, StudyConfig, DESK_NBURN, DESK_NSIM, DESK_REPLICATES, PAPER_NBURN, PAPER_NSIM,
    PAPER_REPLICATES,
};
use aroc_core::splines::{quantile_sorted, Design};
use serde_json::{json, Map, Value};

use crate::config::{
    BandArgs, Command, DataArgs, EstimatorKind, FitArgs, GenerateArgs, KernelArgs, McmcArgs, OutputArgs, PooledArgs,
    PpcArgs, SimulateArgs, ThresholdArgs,
};
use crate::formula::{parse_formula, Formula};
use crate::input::{read_dataset, write_dataset, Layout};
use crate::{CliError, FORMAT_VERSION};

pub const DEFAULT_COMPONENTS: usize = 10;

pub struct Globals {
    pub threads: Option<usize>,
    pub report_runtime: bool,
}

/// Replaces `replay` by the configuration it points to.
pub fn resolve(command: &Command) -> Result<Command, CliError> {
    let Command::Replay(args) = command else {
        return Ok(command.clone());
    };
    let text = fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.config.display())))?;
    let config = match value.get("config") {
        Some(c) if c.is_object() => c.clone(),
        _ => value,
    };
    serde_json::from_value(config)
        .map_err(|e| CliError::Data(format!("{}: not a run configuration: {e}", args.config.display())))
}

pub fn execute(command: &Command, globals: &Globals) -> Result<(), CliError> {
    let run = || dispatch(command, globals);
    match globals.threads {
        None => run(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(run),
    }
}

fn dispatch(command: &Command, globals: &Globals) -> Result<(), CliError> {
    let start = Instant::now();
    let (seed, result) = match command {
        Command::FitBnp(a) => (a.mcmc.seed, fit_regression(a, false)?),
        Command::FitBsp(a) => (a.mcmc.seed, fit_regression(a, true)?),
        Command::FitKernel(a) => (a.seed, fit_kernel(a)?),
        Command::Pooled(a) => (a.seed, pooled(a)?),
        Command::Thresholds(a) => (a.mcmc.seed, thresholds(a)?),
        Command::Ppc(a) => (a.mcmc.seed, ppc(a)?),
        Command::Simulate(a) => (a.seed, simulate(a)?),
        Command::Generate(a) => return generate(a),
        Command::Replay(_) => return execute(&resolve(command)?, globals),
    };
    let mut env = Map::new();
    env.insert("format_version".into(), json!(FORMAT_VERSION));
    env.insert("command".into(), json!(command.name()));
    env.insert("seed".into(), json!(seed));
    env.insert("config".into(), to_value(command)?);
    match result {
        Value::Object(m) => env.extend(m),
        other => {
            env.insert("result".into(), other);
        }
    }
    if globals.report_runtime {
        env.insert("runtime_seconds".into(), json!(start.elapsed().as_secs_f64()));
    }
    write_json(command.json_output(), &Value::Object(env))
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn write_json(path: Option<&PathBuf>, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn curve_csv(curve: &CurveEstimate) -> String {
    let mut out = String::from("t,mean,lower,upper\n");
    for k in 0..curve.grid.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            curve.grid[k], curve.mean[k], curve.lower[k], curve.upper[k]
        ));
    }
    out
}

fn write_curve(output: &OutputArgs, curve: &CurveEstimate) -> Result<(), CliError> {
    match &output.curve_csv {
        Some(p) => write_text(Some(p), &curve_csv(curve)),
        None => Ok(()),
    }
}

fn formula(src: &str) -> Result<Formula, CliError> {
    parse_formula(src).map_err(|e| CliError::Usage(format!("formula `{src}`: {e}")))
}

fn load(data: &DataArgs, response: &str, covariates: &[String]) -> Result<Dataset, CliError> {
    read_dataset(
        &data.input,
        &Layout {
            response,
            status: &data.status,
            tag: &data.tag,
            covariates,
        },
    )
}

fn grid(band: &BandArgs) -> Result<Vec<f64>, CliError> {
    if band.grid < 2 {
        return Err(CliError::Usage("--grid needs at least two points".into()));
    }
    Ok(fpf_grid(band.grid))
}

fn sample_sizes(data: &Dataset) -> Value {
    json!({ "nondiseased": data.nondiseased().len(), "diseased": data.diseased().len() })
}

/// Fits the nondiseased-group model of `f` with `components` mixture components.
fn fit_model(data: &Dataset, f: &Formula, mcmc: &McmcArgs, components: usize) -> Result<FitResult, CliError> {
    if components == 0 {
        return Err(CliError::Usage("--components must be at least 1".into()));
    }
    let q = Design::fit(&f.spec, data.schema(), data.nondiseased())?.dim();
    let prior = PriorSpec {
        alpha: mcmc.alpha,
        ..PriorSpec::standard(q, components)
    };
    prior.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let gibbs = GibbsConfig::new(mcmc.nsim, mcmc.nburn);
    let mut rng = RngStream::new(mcmc.seed, 0);
    Ok(gibbs_fit(data, &f.spec, &prior, &gibbs, &mut rng)?)
}

/// Basis conventions and knot placement of a fit, for output metadata.
fn design_meta(fit: &FitResult, data: &Dataset) -> Result<Value, CliError> {
    let (_, clamped) = fit.design.rows(data.diseased())?;
    Ok(json!({
        "dimension": fit.design.dim(),
        "knots": fit.design.knot_sets(),
        "basis": "cubic B-spline, boundary knots repeated 4 times, first column dropped",
        "out_of_range": "covariates outside the nondiseased range are clamped to the boundary",
        "clamped_diseased_rows": clamped,
    }))
}

fn bnp_components(mcmc: &McmcArgs) -> usize {
    mcmc.components.unwrap_or(DEFAULT_COMPONENTS)
}

fn fit_regression(a: &FitArgs, parametric: bool) -> Result<Value, CliError> {
    let f = formula(&a.formula)?;
    let components = if parametric {
        if !f.spec.is_parametric() {
            return Err(CliError::Usage(format!(
                "fit-bsp needs a formula without smooth terms, got `{}`",
                a.formula
            )));
        }
        match a.mcmc.components {
            None | Some(1) => 1,
            Some(l) => {
                return Err(CliError::Usage(format!(
                    "fit-bsp uses one component, got --components {l}"
                )))
            }
        }
    } else {
        bnp_components(&a.mcmc)
    };
    let grid = grid(&a.band)?;
    let data = load(&a.data, &f.response, &f.covariates())?;
    let fit = fit_model(&data, &f, &a.mcmc, components)?;
    let u = placement_values(&fit, data.diseased())?;
    let options = BootstrapOptions {
        level: a.band.level,
        t0: a.t0.clone(),
        keep_ensemble: false,
    };
    // the bootstrap continues on its own stream so it does not depend on the chain length
    let est = bb_aroc(&u, &grid, &options, &mut RngStream::new(a.mcmc.seed, 1))?;
    let crit = waic(&fit, data.nondiseased())?;
    write_curve(&a.output, &est.curve)?;
    Ok(json!({
        "sample_sizes": sample_sizes(&data),
        "components": components,
        "retained_draws": fit.n_draws(),
        "design": design_meta(&fit, &data)?,
        "aroc": est,
        "criteria": {
            "waic": crit.waic,
            "lpml": crit.lpml,
            "lppd": crit.lppd,
            "rho_waic": crit.rho_waic,
            "degenerate_cpo": crit.degenerate,
        },
        "diagnostics": fit.diagnostics,
    }))
}

fn fit_kernel(a: &KernelArgs) -> Result<Value, CliError> {
    let grid = grid(&a.band)?;
    let data = load(&a.data, &a.response, std::slice::from_ref(&a.covariate))?;
    let options = KernelOptions {
        resamples: a.resamples,
        level: a.band.level,
    };
    let est = kernel_aroc(&data, &grid, &options, &mut RngStream::new(a.seed, 0))?;
    write_curve(&a.output, &est.curve)?;
    Ok(json!({ "sample_sizes": sample_sizes(&data), "aroc": est }))
}

fn pooled(a: &PooledArgs) -> Result<Value, CliError> {
    let grid = grid(&a.band)?;
    let data = load(&a.data, &a.response, &[])?;
    let (y0, y1) = (data.nondiseased().y(), data.diseased().y());
    let bb = pooled_roc_bb(
        y0,
        y1,
        &grid,
        a.iterations,
        a.band.level,
        &mut RngStream::new(a.seed, 0),
    )?;
    let emp = pooled_roc_emp(y0, y1, &grid)?;
    let auc = empirical_auc(y0, y1)?;
    write_curve(&a.output, &bb.curve)?;
    Ok(json!({
        "sample_sizes": sample_sizes(&data),
        "bayesian_bootstrap": bb,
        "empirical": { "curve": emp, "auc": auc },
    }))
}

fn parse_at(items: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    items
        .iter()
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--at expects name=value, got `{item}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--at {name}: `{value}` is not a number")))?;
            Ok((name.trim().to_string(), v))
        })
        .collect()
}

fn thresholds(a: &ThresholdArgs) -> Result<Value, CliError> {
    let f = formula(&a.formula)?;
    let names = f.covariates();
    let factors = f.factors();
    let Some(j) = names.iter().position(|n| *n == a.covariate) else {
        return Err(CliError::Usage(format!(
            "covariate `{}` is not in the formula (covariates: {})",
            a.covariate,
            names.join(", ")
        )));
    };
    if a.fpf.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::Usage("--fpf values must lie in [0, 1]".into()));
    }
    let at = parse_at(&a.at)?;
    for (n, _) in &at {
        if !names.contains(n) {
            return Err(CliError::Usage(format!("--at names unknown covariate `{n}`")));
        }
    }
    let data = load(&a.data, &f.response, &names)?;
    let h = data.nondiseased();
    let mut record = Vec::with_capacity(names.len());
    for (k, n) in names.iter().enumerate() {
        let v = match at.iter().rev().find(|(m, _)| m == n) {
            Some(&(_, v)) => v,
            None if factors.contains(n) => 0.0,
            None => {
                let mut col = h.column(k).to_vec();
                col.sort_by(f64::total_cmp);
                quantile_sorted(&col, 0.5)
            }
        };
        record.push(v);
    }
    let xs: Vec<f64> = if factors.contains(&a.covariate) {
        vec![0.0, 1.0]
    } else {
        if a.points < 2 {
            return Err(CliError::Usage("--points needs at least two values".into()));
        }
        let col = h.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..a.points)
            .map(|i| lo + (hi - lo) * i as f64 / (a.points - 1) as f64)
            .collect()
    };
    let fit = fit_model(&data, &f, &a.mcmc, bnp_components(&a.mcmc))?;
    let mut rows = Vec::new();
    let mut csv = format!("{},fpf,mean,lower,upper\n", a.covariate);
    for &x in &xs {
        record[j] = x;
        for &t in &a.fpf {
            let est: ScalarEstimate = covariate_threshold(&fit, &record, t, a.level)?;
            csv.push_str(&format!("{x},{t},{},{},{}\n", est.mean, est.lower, est.upper));
            rows.push(json!({ "value": x, "fpf": t, "threshold": est }));
        }
    }
    if let Some(p) = &a.output.curve_csv {
        write_text(Some(p), &csv)?;
    }
    let fixed: Map<String, Value> = names
        .iter()
        .zip(&record)
        .filter(|(n, _)| **n != a.covariate)
        .map(|(n, v)| (n.clone(), json!(v)))
        .collect();
    Ok(json!({
        "sample_sizes": sample_sizes(&data),
        "covariate": a.covariate,
        "fixed_covariates": fixed,
        "design": design_meta(&fit, &data)?,
        "thresholds": rows,
        "diagnostics": fit.diagnostics,
    }))
}

fn ppc(a: &PpcArgs) -> Result<Value, CliError> {
    let f = formula(&a.formula)?;
    let data = load(&a.data, &f.response, &f.covariates())?;
    let fit = fit_model(&data, &f, &a.mcmc, bnp_components(&a.mcmc))?;
    let stats = [Statistic::Skewness, Statistic::Kurtosis];
    let pp = posterior_predictive_stats(
        &fit,
        data.nondiseased(),
        a.replicates,
        &stats,
        &mut RngStream::new(a.mcmc.seed, 1),
    )?;
    let mut summary = Map::new();
    for (k, (st, &obs)) in stats.iter().zip(&pp.observed).enumerate() {
        let column: Vec<f64> = pp.values.iter().map(|r| r[k]).collect();
        let exceed = column.iter().filter(|&&v| v >= obs).count() as f64 / column.len() as f64;
        let name = to_value(st)?.as_str().unwrap_or_default().to_string();
        summary.insert(
            name,
            json!({
                "observed": obs,
                "replicated": ScalarEstimate::from_ensemble(&column, 0.95)?,
                "p_value": exceed,
            }),
        );
    }
    if let Some(p) = &a.csv {
        let mut csv = String::from("replicate,skewness,kurtosis\n");
        for (r, row) in pp.values.iter().enumerate() {
            csv.push_str(&format!("{r},{},{}\n", row[0], row[1]));
        }
        write_text(Some(p), &csv)?;
    }
    Ok(json!({
        "sample_sizes": sample_sizes(&data),
        "replicates": a.replicates,
        "design": design_meta(&fit, &data)?,
        "kurtosis_convention": pp.kurtosis_convention,
        "statistics": summary,
    }))
}

fn scenario(label: &str) -> Result<Scenario, CliError> {
    Scenario::from_str(label).map_err(|e| CliError::Usage(e.to_string()))
}

fn sizes(v: &[usize]) -> Result<SampleSizes, CliError> {
    match v {
        [n0, n1] if *n0 > 0 && *n1 > 0 => Ok(SampleSizes::new(*n0, *n1)),
        _ => Err(CliError::Usage(format!("--sizes needs two positive counts, got {v:?}"))),
    }
}

fn simulate(a: &SimulateArgs) -> Result<Value, CliError> {
    let sc = scenario(&a.scenario)?;
    let (nsim, nburn, replicates) = if a.paper_scale {
        (PAPER_NSIM, PAPER_NBURN, PAPER_REPLICATES)
    } else {
        (DESK_NSIM, DESK_NBURN, DESK_REPLICATES)
    };
    let nsim = a.nsim.unwrap_or(nsim);
    let nburn = a.nburn.unwrap_or(nburn);
    let estimator = match a.estimator {
        EstimatorKind::Bnp => EstimatorConfig::Bnp {
            knots: a.knots,
            components: a.components,
            nsim,
            nburn,
        },
        EstimatorKind::Bsp => EstimatorConfig::Bsp { nsim, nburn },
        EstimatorKind::Kernel => EstimatorConfig::Kernel { resamples: a.resamples },
        EstimatorKind::Pooled => EstimatorConfig::Pooled {
            iterations: a.iterations,
        },
    };
    let config = StudyConfig {
        scenario: sc,
        sizes: sizes(&a.sizes)?,
        estimator,
        replicates: a.replicates.unwrap_or(replicates),
        seed: a.seed,
        grid_points: a.band.grid,
        level: a.band.level,
    };
    let grid = grid(&a.band)?;
    let truth = match &a.truth_cache {
        Some(dir) => true_aroc_curve_cached(sc, &grid, dir)?,
        None => true_aroc_curve(sc, &grid)?,
    };
    let report = coverage_study_with_truth(&config, &truth)?;
    if let Some(p) = &a.csv {
        write_text(Some(p), &report.to_csv())?;
    }
    Ok(json!({
        "study": config,
        "summary": report.summary,
        "failures": report.failures,
    }))
}

fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    let sc = scenario(&a.scenario)?;
    let data = generate_scenario(sc, sizes(&a.sizes)?, &mut RngStream::new(a.seed, 0))?;
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(a.output.as_ref(), &text)
}
