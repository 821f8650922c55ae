//! Command-line front end. Exit codes: 0 success, 1 I/O or internal
//! failure, 2 invalid configuration, 3 numerical abort, 4 resource bound.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::artifacts::{self, write_diagnostics, write_text, write_trajectory};
use crate::config::{hex, RunConfig, RunMode};
use crate::dynamics::{EquationParams, Model, ResonantTables};
use crate::error::{Error, Result};
use crate::experiments::{compare_actions, conservation_suite, epsilon_ladder, ConservationReport, LadderConfig, Tolerances};
use crate::integrators::{integrate_effective, integrate_full, residual_y, DiagnosticsConfig, RunKind, Trajectory};
use crate::resonance::{ResonanceTable, TableCache, DEFAULT_TUPLE_BUDGET};
use crate::spectral::Lattice;

#[derive(Debug, Parser)]
#[command(name = "cgl", version, about = "Resonant averaging experiments for weakly nonlinear CGL/NLS")]
pub struct Cli {
    /// Directory for cached resonance tables.
    #[arg(long, global = true, env = "CGL_CACHE_DIR", default_value = ".cgl-cache")]
    pub cache: PathBuf,
    /// Directory receiving output artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overwrite artifacts produced by a different configuration.
    #[arg(long, global = true)]
    pub force: bool,
    /// Tuple budget for building resonance tables.
    #[arg(long, global = true, default_value_t = DEFAULT_TUPLE_BUDGET)]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build (or load from cache) resonance tables and report their statistics.
    Resonances {
        #[arg(long, conflicts_with_all = ["dim", "cutoff", "degree"])]
        config: Option<PathBuf>,
        #[arg(long, requires_all = ["cutoff", "degree"])]
        dim: Option<usize>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Integrate the full and/or effective system from a configured datum.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an epsilon ladder comparing actions of full and effective runs.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Measure drifts of conserved and monotone quantities.
    Conserve {
        #[arg(long)]
        config: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::LatticeMismatch { .. }
        | Error::GridTooSmall { .. } => 2,
        Error::NumericalAbort { .. } | Error::StepUnderflow(_) => 3,
        Error::Resource { .. } => 4,
        Error::TableFile { .. } | Error::Io(_) | Error::Json(_) => 1,
    }
}

/// Parses `args`, runs the command and maps errors onto exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        // a second initialization (e.g. repeated in-process runs) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let cache = TableCache::new(&cli.cache).with_budget(cli.budget);
    match &cli.command {
        Command::Resonances {
            config,
            dim,
            cutoff,
            degree,
        } => resonances(cli, &cache, config.as_deref(), *dim, *cutoff, *degree),
        Command::Simulate { config } => simulate(cli, &cache, &RunConfig::load(config)?),
        Command::Compare { config } => compare(cli, &cache, &RunConfig::load(config)?),
        Command::Conserve { config } => conserve(cli, &cache, &RunConfig::load(config)?),
    }
}

fn load_table(cache: &TableCache, lattice: &Lattice, n: usize) -> Result<Arc<ResonanceTable>> {
    let (table, outcome) = cache.get_or_build(lattice, n)?;
    if let crate::resonance::CacheOutcome::Rebuilt(reason) = &outcome {
        eprintln!("warning: rebuilt cached table for n={n}: {reason}");
    }
    Ok(Arc::new(table))
}

fn build_model(cache: &TableCache, lattice: &Arc<Lattice>, params: EquationParams, tables: bool) -> Result<Model> {
    let model = Model::new(lattice.clone(), params)?;
    if !tables {
        return Ok(model);
    }
    let p = load_table(cache, lattice, params.p as usize)?;
    let q = if params.q == params.p {
        p.clone()
    } else {
        load_table(cache, lattice, params.q as usize)?
    };
    model.with_tables(ResonantTables::new(p, q))
}

fn resonances(
    cli: &Cli,
    cache: &TableCache,
    config: Option<&Path>,
    dim: Option<usize>,
    cutoff: Option<usize>,
    degree: Option<usize>,
) -> Result<()> {
    let (lattice, degrees, hash) = match (config, dim, cutoff, degree) {
        (Some(path), ..) => {
            let cfg = RunConfig::load(path)?;
            let mut degrees = vec![cfg.params.p as usize, cfg.params.q as usize];
            degrees.dedup();
            (cfg.lattice()?, degrees, cfg.hash())
        }
        (None, Some(d), Some(k), Some(n)) => {
            let lattice = Lattice::new(d, k).map_err(|e| Error::Config(e.to_string()))?;
            if n == 0 {
                return Err(Error::Config("--degree must be positive".into()));
            }
            let canonical = json!({ "d": d, "K": k, "n": n }).to_string();
            (Arc::new(lattice), vec![n], hex(&Sha256::digest(canonical)))
        }
        _ => return Err(Error::Config("give --config or all of --dim, --cutoff, --degree".into())),
    };
    let mut entries = Vec::new();
    for n in degrees {
        let (table, outcome) = cache.get_or_build(&lattice, n)?;
        let div = table.divisor();
        println!(
            "d={} K={} n={n}: {} resonant tuples, divisor gap {}, max divisor {} ({:?})",
            lattice.dim(),
            lattice.cutoff(),
            table.total(),
            div.gap.map_or("none".to_string(), |g| g.to_string()),
            div.max_freq,
            outcome
        );
        entries.push(json!({
            "n": n,
            "total": table.total(),
            "counts": table.counts(),
            "gap": div.gap,
            "max_freq": div.max_freq,
            "cache_file": cache.path_for(&lattice, n),
        }));
    }
    let doc = json!({
        "config_hash": hash,
        "code_version": artifacts::CODE_VERSION,
        "lattice": lattice.descriptor(),
        "tables": entries,
    });
    write_text(
        &cli.out.join("resonances.json"),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
        &hash,
        cli.force,
    )
}

fn kind_name(kind: RunKind) -> &'static str {
    match kind {
        RunKind::Full => "full",
        RunKind::Effective => "effective",
    }
}

fn save_run(cli: &Cli, hash: &str, result: Result<Trajectory>) -> Result<Trajectory> {
    match result {
        Ok(traj) => {
            let name = kind_name(traj.kind);
            write_trajectory(&cli.out.join(format!("trajectory_{name}.ndjson")), &traj, hash, None, cli.force)?;
            write_diagnostics(&cli.out.join(format!("diagnostics_{name}.csv")), &traj, hash, cli.force)?;
            Ok(traj)
        }
        Err(Error::NumericalAbort {
            tau,
            reason,
            partial: Some(partial),
        }) => {
            let name = kind_name(partial.kind);
            write_trajectory(
                &cli.out.join(format!("trajectory_{name}.ndjson")),
                &partial,
                hash,
                Some((tau, &reason)),
                cli.force,
            )?;
            write_diagnostics(&cli.out.join(format!("diagnostics_{name}.csv")), &partial, hash, cli.force)?;
            Err(Error::NumericalAbort {
                tau,
                reason,
                partial: None,
            })
        }
        Err(e) => Err(e),
    }
}

fn simulate(cli: &Cli, cache: &TableCache, cfg: &RunConfig) -> Result<()> {
    let lattice = cfg.lattice()?;
    let params = cfg.params()?;
    let run = cfg.run_section()?;
    let v0 = cfg.datum(&lattice)?;
    let control = cfg.step_control(run.horizon);
    let diag = cfg.diagnostics();
    let need_tables = run.mode != RunMode::Full || diag.hamiltonian;
    let model = build_model(cache, &lattice, params, need_tables)?;
    let hash = cfg.hash();

    let full = match run.mode {
        RunMode::Full | RunMode::Both => Some(save_run(
            cli,
            &hash,
            integrate_full(&v0, run.horizon, &model, &control, &diag),
        )?),
        RunMode::Effective => None,
    };
    let effective = match run.mode {
        RunMode::Effective | RunMode::Both => Some(save_run(
            cli,
            &hash,
            integrate_effective(&v0, run.horizon, &model, &control, &diag),
        )?),
        RunMode::Full => None,
    };
    for traj in full.iter().chain(&effective) {
        println!(
            "{}: {} steps of {:e}, {} checkpoints, final |v|_s {:?}",
            kind_name(traj.kind),
            traj.stats.steps,
            traj.stats.dtau,
            traj.checkpoints.len(),
            traj.last().diagnostics.norms
        );
    }
    if let (Some(f), Some(e)) = (&full, &effective) {
        let report = compare_actions(f, e, run.s1)?;
        println!("sup action distance (s1={}): {:e}", run.s1, report.sup);
    }
    if cfg.toggles.residual {
        if let Some(f) = &full {
            let report = residual_y(f, &model, run.s1)?;
            if !report.reliable {
                eprintln!("warning: checkpoints too coarse for the residual quadrature; increase control.checkpoints");
            }
            println!("sup residual (s1={}): {:e}, resolved {}", run.s1, report.sup, report.reliable);
            write_text(
                &cli.out.join("residual.csv"),
                &artifacts::residual_csv(&report, &hash),
                &hash,
                cli.force,
            )?;
        }
    }
    if cfg.toggles.conservation {
        let reports: Vec<ConservationReport> = full
            .iter()
            .chain(&effective)
            .map(|t| conservation_suite(t, &Tolerances::default()))
            .collect();
        print_conservation(&reports);
        write_conservation(cli, &hash, &lattice, &params, &reports)?;
    }
    Ok(())
}

fn print_conservation(reports: &[ConservationReport]) {
    for r in reports {
        if r.checks.is_empty() {
            println!("{}: no conserved or monotone quantity applies to these parameters", kind_name(r.kind));
        }
        for c in &r.checks {
            println!(
                "{}: {} {:?} value {:e} (tol {:e}) {}",
                kind_name(r.kind),
                c.quantity,
                c.kind,
                c.value,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
    }
}

fn write_conservation(
    cli: &Cli,
    hash: &str,
    lattice: &Lattice,
    params: &EquationParams,
    reports: &[ConservationReport],
) -> Result<()> {
    let doc = json!({
        "config_hash": hash,
        "code_version": artifacts::CODE_VERSION,
        "lattice": lattice.descriptor(),
        "params": params,
        "tolerances": Tolerances::default(),
        "reports": reports,
    });
    write_text(
        &cli.out.join("conservation.json"),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
        hash,
        cli.force,
    )
}

fn compare(cli: &Cli, cache: &TableCache, cfg: &RunConfig) -> Result<()> {
    let lattice = cfg.lattice()?;
    let run = cfg.run_section()?;
    let v0 = cfg.datum(&lattice)?;
    let hash = cfg.hash();
    let control = cfg.step_control(run.horizon);
    let diag = cfg.diagnostics();
    let Some(epsilons) = cfg.params.epsilons.clone() else {
        // single epsilon: one paired comparison, no fit
        let model = build_model(cache, &lattice, cfg.params()?, true)?;
        let full = integrate_full(&v0, run.horizon, &model, &control, &diag)?;
        let effective = integrate_effective(&v0, run.horizon, &model, &control, &diag)?;
        let report = compare_actions(&full, &effective, run.s1)?;
        write_text(
            &cli.out.join("compare.ndjson"),
            &artifacts::comparison_ndjson(&report, &full, &hash, lattice.descriptor())?,
            &hash,
            cli.force,
        )?;
        println!("eps={:e} sup_error={:e} (single epsilon: no exponent fit)", report.epsilon, report.sup);
        return Ok(());
    };
    if epsilons.len() < 3 {
        return Err(Error::Config("params.epsilons needs at least three values".into()));
    }
    let model = build_model(cache, &lattice, cfg.params_at(epsilons[0])?, true)?;
    let ladder_cfg = LadderConfig {
        horizon: run.horizon,
        s1: run.s1,
        control,
        diagnostics: diag,
    };
    let ladder = epsilon_ladder(&v0, &epsilons, &model, &ladder_cfg)?;
    write_text(&cli.out.join("ladder.csv"), &artifacts::ladder_csv(&ladder, &hash), &hash, cli.force)?;
    write_text(
        &cli.out.join("plot_data.csv"),
        &artifacts::plot_data_csv(&ladder, &hash),
        &hash,
        cli.force,
    )?;
    write_text(
        &cli.out.join("compare.ndjson"),
        &artifacts::compare_ndjson(&ladder, &hash, lattice.descriptor())?,
        &hash,
        cli.force,
    )?;
    for (e, s) in ladder.epsilons.iter().zip(&ladder.sups) {
        println!("eps={e:e} sup_error={s:e}");
    }
    for (e, reason) in &ladder.aborted {
        println!("eps={e:e} {reason}");
    }
    match ladder.fitted_exponent {
        Some(x) => println!("fitted exponent {x:.4}"),
        None if ladder.degenerate => {
            println!("degenerate ladder: all errors below {:e}", crate::experiments::DEGENERATE_SUP)
        }
        None => println!("too few completed rungs for an exponent fit"),
    }
    println!(
        "monotone decay: {}; max/min of sup/sqrt(eps) = {:.4} ({})",
        ladder.monotone,
        ladder.sqrt_ratio_spread,
        if ladder.sqrt_ratio_spread < 4.0 { "bounded" } else { "not bounded by 4" }
    );
    if !ladder.complete() {
        let (eps, reason) = &ladder.aborted[0];
        return Err(Error::NumericalAbort {
            tau: f64::NAN,
            reason: format!("incomplete ladder; eps={eps:e} {reason}"),
            partial: None,
        });
    }
    Ok(())
}

fn conserve(cli: &Cli, cache: &TableCache, cfg: &RunConfig) -> Result<()> {
    let lattice = cfg.lattice()?;
    let params = cfg.params()?;
    let run = cfg.run_section()?;
    let v0 = cfg.datum(&lattice)?;
    let model = build_model(cache, &lattice, params, true)?;
    let control = cfg.step_control(run.horizon);
    let diag = DiagnosticsConfig {
        hamiltonian: true,
        energy: true,
        energy_per_step: true,
        ..cfg.diagnostics()
    };
    let reports = vec![
        conservation_suite(&integrate_full(&v0, run.horizon, &model, &control, &diag)?, &Tolerances::default()),
        conservation_suite(
            &integrate_effective(&v0, run.horizon, &model, &control, &diag)?,
            &Tolerances::default(),
        ),
    ];
    print_conservation(&reports);
    write_conservation(cli, &cfg.hash(), &lattice, &params, &reports)
}
