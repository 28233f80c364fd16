use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aspp_core::config::{parse_config, ExperimentConfig, ExperimentKind};
use aspp_core::cycle::{
    fit_c0, regime_comparison, run_ensemble, run_path, EnsembleStats, FitTarget,
};
use aspp_core::output::{
    ensure_dir, read_series_csv, write_ensemble_csv, write_histograms_csv, write_json,
    write_ode_csv, write_path_csv, Manifest,
};
use aspp_core::ponzi::{
    classical_ponzi_solve, collapse_time, critical_exponent, speculative_ponzi_solve,
    steady_state_rate, SpecPonziParams,
};
use aspp_core::risk::{annualize, return_stats, theoretical_return};
use aspp_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "aspp",
    version,
    about = "Price-pump market simulations and Ponzi-scheme models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-investment pump ensemble.
    Simulate(Common),
    /// Investment, zero-flow and withdrawal ensembles side by side.
    Regimes(Common),
    /// Full investment cycle with investor ledger and hazards.
    Cycle(Common),
    /// Solve a classical or speculative Ponzi model.
    Ponzi {
        #[command(flatten)]
        common: Common,
        /// Model to solve when no config file is given.
        #[arg(long, value_enum, default_value_t = Model::Speculative)]
        model: Model,
    },
    /// Fit the market-impact coefficient to a cycle ensemble.
    FitC0(Common),
    /// Return statistics of a series file or of a fresh pump ensemble.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Series CSV to analyse instead of simulating.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Column of the input holding prices.
        #[arg(long)]
        column: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Classical,
    Speculative,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<PathBuf> {
    let (common, accepted, fallback) = match &command {
        Command::Simulate(c) => (c, &[ExperimentKind::Aspp][..], ExperimentKind::Aspp),
        Command::Regimes(c) => (c, &[ExperimentKind::Regimes][..], ExperimentKind::Regimes),
        Command::Cycle(c) => (c, &[ExperimentKind::Cycle][..], ExperimentKind::Cycle),
        Command::FitC0(c) => (c, &[ExperimentKind::FitC0][..], ExperimentKind::FitC0),
        Command::Stats { common, .. } => {
            (common, &[ExperimentKind::Stats][..], ExperimentKind::Stats)
        }
        Command::Ponzi { common, model } => (
            common,
            &[
                ExperimentKind::PonziClassical,
                ExperimentKind::PonziSpeculative,
            ][..],
            match model {
                Model::Classical => ExperimentKind::PonziClassical,
                Model::Speculative => ExperimentKind::PonziSpeculative,
            },
        ),
    };

    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::new(fallback),
    };
    if !accepted.contains(&cfg.kind) {
        return Err(Error::config(
            "kind",
            format!("`{}` cannot be run by this command", cfg.kind.name()),
        ));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.paths {
        cfg.set_paths(n);
    }
    if let Command::Stats { input, column, .. } = &command {
        if input.is_some() {
            cfg.stats.input = input.clone();
        }
        if let Some(c) = column {
            cfg.stats.column = c.clone();
        }
    }
    cfg.validate()?;

    if let Some(n) = common.threads {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }

    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    ensure_dir(&out)?;

    let mut manifest = Manifest::new(&cfg);
    match cfg.kind {
        ExperimentKind::Aspp => run_aspp(&cfg, &out, &mut manifest)?,
        ExperimentKind::Regimes => run_regimes(&cfg, &out, &mut manifest)?,
        ExperimentKind::Cycle => run_cycle(&cfg, &out, &mut manifest)?,
        ExperimentKind::PonziClassical => run_classical(&cfg, &out, &mut manifest)?,
        ExperimentKind::PonziSpeculative => run_speculative(&cfg, &out, &mut manifest)?,
        ExperimentKind::FitC0 => run_fit(&cfg, &out, &mut manifest)?,
        ExperimentKind::Stats => run_stats(&cfg, &out, &mut manifest)?,
    }
    write_json(&cfg, &out.join("config.json"))?;
    manifest.files.push("config.json".into());
    manifest.files.sort();
    write_json(&manifest, &out.join("manifest.json"))?;
    Ok(out)
}

fn emit_ensemble(
    stats: &EnsembleStats,
    out: &Path,
    prefix: &str,
    manifest: &mut Manifest,
) -> Result<()> {
    let ens = format!("{prefix}ensemble.csv");
    let hist = format!("{prefix}histograms.csv");
    write_ensemble_csv(stats, &out.join(&ens))?;
    write_histograms_csv(&stats.histograms, &out.join(&hist))?;
    manifest.files.extend([ens, hist]);
    manifest.clamp_count += stats.clamp_count;
    manifest.failure_count += stats.failures.len();
    Ok(())
}

fn ensemble_summary(stats: &EnsembleStats) -> serde_json::Value {
    let last = stats.time.len() - 1;
    let end = |c| {
        let b = stats.band(c);
        json!({ "mean": b.mean[last], "p10": b.p10[last], "p50": b.p50[last], "p90": b.p90[last] })
    };
    use aspp_core::cycle::Column;
    json!({
        "paths": stats.n_paths,
        "survivors": stats.survivors(),
        "failures": stats.failures,
        "horizon": stats.time[last],
        "log_price": end(Column::LogPrice),
        "Ha": end(Column::Ha),
        "Hp": end(Column::Hp),
        "returns": stats.returns,
    })
}

fn run_aspp(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let cycle = cfg.aspp_config();
    let stats = run_ensemble(&cycle)?;
    emit_ensemble(&stats, out, "", manifest)?;
    write_path_csv(&run_path(&cycle, 0)?, &out.join("path_0000.csv"))?;
    manifest.files.push("path_0000.csv".into());
    let (gamma, beta) = cycle.market.greed_fear.median_factors();
    let (r_star, _) = theoretical_return(
        gamma,
        beta,
        cycle.market.n_agents,
        cycle.market.m_active,
        1.0,
    );
    manifest.summary = json!({
        "ensemble": ensemble_summary(&stats),
        "theoretical_daily_log_return": r_star.ln(),
        "theoretical_annual_rate": cycle.market.annual_pump_rate(),
    });
    Ok(())
}

fn run_regimes(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let cmp = regime_comparison(&cfg.regime_config())?;
    let mut summary = serde_json::Map::new();
    for (name, stats) in [
        ("investment", &cmp.investment),
        ("zero", &cmp.zero),
        ("withdrawal", &cmp.withdrawal),
    ] {
        emit_ensemble(stats, out, &format!("{name}_"), manifest)?;
        summary.insert(name.into(), ensemble_summary(stats));
    }
    manifest.summary = summary.into();
    Ok(())
}

fn run_cycle(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let cycle = cfg.cycle_config();
    let stats = run_ensemble(&cycle)?;
    emit_ensemble(&stats, out, "", manifest)?;
    write_path_csv(&run_path(&cycle, 0)?, &out.join("path_0000.csv"))?;
    manifest.files.push("path_0000.csv".into());
    let net_inflow: f64 = stats.band(aspp_core::cycle::Column::Xin).mean.iter().sum();
    manifest.summary = json!({
        "ensemble": ensemble_summary(&stats),
        "withdrawal_rate": cycle.withdrawal_rate(),
        "net_inflow": net_inflow,
    });
    Ok(())
}

fn run_classical(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let b = &cfg.ponzi_classical;
    let sol = classical_ponzi_solve(&b.params, &b.schedule, b.horizon, b.dt)?;
    write_ode_csv(&sol, &out.join("ode.csv"))?;
    manifest.files.push("ode.csv".into());
    let critical = if b.critical_exponent {
        Some(critical_exponent(&b.params, b.critical_horizon, 1e-3)?)
    } else {
        None
    };
    manifest.summary = json!({
        "collapse_time": collapse_time(&sol),
        "critical_exponent": critical,
    });
    Ok(())
}

fn run_speculative(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let b = &cfg.ponzi_speculative;
    let sol = speculative_ponzi_solve(&b.params, &b.schedule, b.horizon, b.dt)?;
    write_ode_csv(&sol, &out.join("ode.csv"))?;
    manifest.files.push("ode.csv".into());
    let steady = if b.horizon >= 2.0 * b.steady_window {
        Some(steady_state_rate(&sol, b.steady_window)?)
    } else {
        None
    };
    let (peak_i, peak) =
        sol.s.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    manifest.summary = json!({
        "max_s": peak,
        "max_s_time": sol.grid[peak_i],
        "steady_state": steady,
        "payoff_ratio": steady.map(|s| b.params.r_w / (b.params.r_w - s.rate)),
    });
    Ok(())
}

fn run_fit(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let cycle = cfg.cycle_config();
    let stats = run_ensemble(&cycle)?;
    emit_ensemble(&stats, out, "", manifest)?;
    let target = FitTarget::from_ensemble(&stats, cycle.pre_phase);
    let bracket = (cfg.fit_c0.bracket_low, cfg.fit_c0.bracket_high);
    let fit = fit_c0(
        &target,
        &cycle.schedule,
        cycle.withdrawal_rate(),
        cycle.t_m,
        bracket,
    )?;

    let params = SpecPonziParams {
        c0: fit.c0,
        r_w: cycle.withdrawal_rate(),
        t_m: cycle.t_m,
        s0: target.value[0],
        ..SpecPonziParams::default()
    };
    let dt = cycle.market.dt();
    let horizon = dt * (target.time.len() - 1) as f64;
    let model = speculative_ponzi_solve(&params, &cycle.schedule, horizon, dt)?;
    write_ode_csv(&model, &out.join("fitted_ode.csv"))?;
    manifest.files.push("fitted_ode.csv".into());
    manifest.summary = json!({ "fit": fit, "ensemble": ensemble_summary(&stats) });
    Ok(())
}

fn run_stats(cfg: &ExperimentConfig, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let stats = match &cfg.stats.input {
        Some(path) => {
            let table = read_series_csv(path)?;
            let prices = table.column(&cfg.stats.column).ok_or_else(|| {
                Error::config(
                    "stats.column",
                    format!("`{}` not found in {}", cfg.stats.column, path.display()),
                )
            })?;
            return_stats(&prices)?
        }
        None => {
            let ens = run_ensemble(&cfg.aspp_config())?;
            manifest.clamp_count += ens.clamp_count;
            manifest.failure_count += ens.failures.len();
            ens.returns
                .ok_or_else(|| Error::Domain("ensemble too short for return statistics".into()))?
        }
    };
    let (gamma, beta) = cfg.market.greed_fear.median_factors();
    let (r_star, _) =
        theoretical_return(gamma, beta, cfg.market.n_agents, cfg.market.m_active, 1.0);
    let dpy = f64::from(cfg.market.days_per_year);
    let report = json!({
        "returns": stats,
        "annualized_geometric_return": annualize(stats.geometric_mean_return, dpy),
        "theoretical_daily_log_return": r_star.ln(),
        "theoretical_annualized": annualize(r_star, dpy),
    });
    write_json(&report, &out.join("stats.json"))?;
    manifest.files.push("stats.json".into());
    manifest.summary = report;
    Ok(())
}
