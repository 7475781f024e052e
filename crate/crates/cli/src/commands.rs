use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use civqr_core::diagnostics::{
    center_from_fit, rank_condition_check, relevance_check, support_check, RankOptions,
};
use civqr_core::inference::{bootstrap, fit};
use civqr_core::moment::kernel_registry;
use civqr_core::optim::OptimConfig;
use civqr_core::simlab::{design_registry, jtpa_like_rows, run_monte_carlo, SimDesign};
use civqr_core::{FitConfig, QuantileLevel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BootstrapArgs, DiagnoseArgs, FitArgs, SimulateArgs, SynthArgs};
use crate::data::load_csv;
use crate::report::RunReport;

fn level(u: f64) -> Result<QuantileLevel> {
    Ok(QuantileLevel::new(u)?)
}

fn fit_config(u: f64, optim: OptimConfig, kernel: &str) -> Result<FitConfig> {
    kernel_registry().get(kernel)?;
    let mut cfg = FitConfig::new(level(u)?, optim);
    cfg.kernel = kernel.to_string();
    Ok(cfg)
}

/// One row of a quantile sweep: estimates and intervals per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub u: f64,
    pub estimate: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub objective_value: f64,
    pub clipping_fired: bool,
}

pub fn cmd_fit(args: &FitArgs) -> Result<RunReport> {
    let start = Instant::now();
    let spec = args.data.column_spec();
    let data = load_csv(&args.data.data, &spec)?;
    let names = spec.coefficient_names();
    let optim = args.search.optim(args.seed);

    let Some(levels) = &args.quantiles else {
        let cfg = fit_config(args.u, optim, &args.search.kernel)?;
        let result = fit(&data, &cfg)?;
        if result.clipping_fired {
            log::warn!("survival floor was hit; weights of some rows are capped");
        }
        let mut extra = json!({ "coefficients": names });
        if args.boot_b > 0 {
            let boot = bootstrap(&data, &cfg, args.boot_b, args.level, args.seed)?;
            extra["ci_lower"] = json!(boot.ci_lower);
            extra["ci_upper"] = json!(boot.ci_upper);
        }
        if args.plot_data.is_some() {
            bail!("--plot-data needs --quantiles");
        }
        return Ok(RunReport::new("fit", args.seed, args, &result, start).with_extra(extra));
    };

    if levels.is_empty() {
        bail!("--quantiles is empty");
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &u in levels {
        let cfg = fit_config(u, optim.clone(), &args.search.kernel)?;
        let r = fit(&data, &cfg).with_context(|| format!("fit at u = {u}"))?;
        let (lower, upper) = if args.boot_b > 0 {
            let b = bootstrap(&data, &cfg, args.boot_b, args.level, args.seed)
                .with_context(|| format!("bootstrap at u = {u}"))?;
            (Some(b.ci_lower), Some(b.ci_upper))
        } else {
            (None, None)
        };
        rows.push(SweepRow {
            u,
            estimate: r.beta_hat,
            lower,
            upper,
            objective_value: r.objective_value,
            clipping_fired: r.clipping_fired,
        });
    }
    if let Some(path) = &args.plot_data {
        if args.boot_b == 0 {
            bail!("--plot-data needs --boot-b > 0 for the interval columns");
        }
        write_plot_data(path, &names, &rows)?;
    }
    let result = json!({ "coefficients": names, "rows": rows });
    Ok(RunReport::new("fit", args.seed, args, &result, start))
}

/// `u, coefficient, estimate, lower, upper`; one line per level and coefficient.
pub fn write_plot_data(path: &Path, names: &[String], rows: &[SweepRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    wtr.write_record(["u", "coefficient", "estimate", "lower", "upper"])?;
    for row in rows {
        let (lower, upper) = match (&row.lower, &row.upper) {
            (Some(l), Some(h)) => (l, h),
            _ => bail!("row at u = {} has no interval", row.u),
        };
        for (c, name) in names.iter().enumerate() {
            wtr.write_record([
                row.u.to_string(),
                name.clone(),
                row.estimate[c].to_string(),
                lower[c].to_string(),
                upper[c].to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn cmd_bootstrap(args: &BootstrapArgs) -> Result<RunReport> {
    let start = Instant::now();
    let spec = args.data.column_spec();
    let data = load_csv(&args.data.data, &spec)?;
    let cfg = fit_config(args.u, args.search.optim(args.seed), &args.search.kernel)?;
    let result = bootstrap(&data, &cfg, args.boot_b, args.level, args.seed)?;
    Ok(RunReport::new("bootstrap", args.seed, args, &result, start)
        .with_extra(json!({ "coefficients": spec.coefficient_names() })))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunReport> {
    let start = Instant::now();
    design_registry().get(&args.design.to_string())?;
    let design = SimDesign {
        design_id: args.design,
        lambda: args.lambda,
        n: args.n,
        u: level(args.u)?,
        seed: args.seed,
    };
    let mut optim = OptimConfig::new(args.box_lower.clone(), args.box_upper.clone(), args.seed);
    optim.n_starts = args.starts;
    optim.max_iters = args.max_iters;
    optim.f_tol = args.f_tol;
    optim.x_tol = args.x_tol;
    let cfg = fit_config(args.u, optim, &args.kernel)?;
    let metrics = run_monte_carlo(&design, args.reps, &cfg)?;
    Ok(
        RunReport::new("simulate", args.seed, args, &metrics.record(&design), start).with_extra(
            json!({
                "n_reps_used": metrics.n_reps,
                "n_failed": metrics.n_failed,
                "true_beta": design.true_beta(),
            }),
        ),
    )
}

fn position(names: &[String], wanted: &str, flag: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == wanted)
        .ok_or_else(|| anyhow!("{flag} '{wanted}' is not among {names:?}"))
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<RunReport> {
    let start = Instant::now();
    let spec = args.data.column_spec();
    let data = load_csv(&args.data.data, &spec)?;
    let cfg = fit_config(args.u, args.search.optim(args.seed), &args.search.kernel)?;
    let fitted = fit(&data, &cfg)?;
    let support = support_check(&fitted, &data)?;
    let mut result = json!({
        "fit": { "beta_hat": fitted.beta_hat, "objective_value": fitted.objective_value },
        "support": support,
    });
    match (&args.treat, &args.instr) {
        (Some(t), Some(i)) => {
            let treat_col = position(&spec.coefficient_names(), t, "--treat")?;
            let instr_col = position(&spec.instrument_names(), i, "--instr")?;
            result["relevance"] = json!(relevance_check(&data, treat_col, instr_col)?);
            let mut opts = RankOptions::new(
                treat_col,
                instr_col,
                center_from_fit(&fitted, &data, treat_col),
            );
            opts.radius = args.radius;
            opts.steps = args.steps;
            let rank = rank_condition_check(&data, cfg.u, &opts)?;
            for w in &rank.warnings {
                log::warn!("{w}");
            }
            result["rank"] = serde_json::to_value(rank)?;
        }
        (None, None) => {}
        _ => bail!("--treat and --instr go together"),
    }
    Ok(RunReport::new("diagnose", args.seed, args, &result, start))
}

pub fn cmd_synth_jtpa(args: &SynthArgs) -> Result<RunReport> {
    let start = Instant::now();
    let rows = jtpa_like_rows(args.n, args.seed);
    let mut wtr = csv::Writer::from_path(&args.csv)
        .with_context(|| format!("cannot create {}", args.csv.display()))?;
    for r in &rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    let censored = rows.iter().filter(|r| r.employed == 0).count();
    let result = json!({
        "synthetic": true,
        "rows": rows.len(),
        "censored_fraction": censored as f64 / rows.len().max(1) as f64,
        "path": args.csv,
    });
    Ok(RunReport::new(
        "synth-jtpa",
        args.seed,
        args,
        &result,
        start,
    ))
}

pub fn cmd_list() -> Value {
    let kernels = kernel_registry();
    let designs = design_registry();
    json!({
        "kernels": kernels
            .names()
            .into_iter()
            .map(|n| json!({ "name": n, "description": kernels.get(n).map(|k| k.description()).unwrap_or_default() }))
            .collect::<Vec<_>>(),
        "designs": designs
            .names()
            .into_iter()
            .map(|n| json!({ "name": n, "description": designs.get(n).map(|d| d.description()).unwrap_or_default() }))
            .collect::<Vec<_>>(),
    })
}
