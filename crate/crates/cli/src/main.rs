//! `acmm`: drive the Allen–Cahn mountain-pass pipeline from the shell.
//!
//! Exit codes: 0 success, 1 certification failure, 2 usage/config error,
//! 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ac_core::config::ExperimentConfig;
use ac_core::diagnostics::{de_giorgi_check, vanishing_volume_check};
use ac_core::energy::{energy_report, EnergyReport};
use ac_core::error::AcError;
use ac_core::experiment::{report, run_experiment};
use ac_core::io::{fmt_g17, read_acf1, write_acf1, write_csv};
use ac_core::minmax::c_epsilon;
use ac_core::spectrum::lowest_eigenpairs;
use ac_core::sweepout::build_sweepout_path;

#[derive(Parser)]
#[command(name = "acmm", about = "Mountain-pass Allen-Cahn pipeline on flat tori")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed override (defaults to the config's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (must not change results).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one epsilon: sweepout path, relaxation, certified saddle.
    Solve {
        #[arg(long)]
        eps: f64,
        /// Also dump the relaxed path nodes as path_###.acf1.
        #[arg(long)]
        dump_path: bool,
    },
    /// Build and dump a sweepout path without solving.
    Sweepout {
        #[arg(long, default_value = "band")]
        family: String,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 33)]
        nodes: usize,
    },
    /// Lowest eigenvalues and Morse index of a stored solution.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
    },
    /// Re-run the point-level diagnostics on stored solutions.
    Diagnose {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Full pipeline over the configured epsilon ladder.
    Run,
    /// Summarize a finished run directory.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .is_err()
        {
            eprintln!("error: thread pool already initialized");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &AcError) -> u8 {
    match e {
        AcError::Io(_) | AcError::MissingFiles(_) | AcError::ParseFormat { .. } => 3,
        AcError::Config(_) | AcError::InvalidParams(_) | AcError::InvalidDomain(_) => 2,
        _ => 1,
    }
}

fn load_config(global: &Global) -> Result<ExperimentConfig, AcError> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<ExitCode, AcError> {
    match &cli.command {
        Command::Run => {
            let cfg = load_config(&cli.global)?;
            let manifest = run_experiment(&cfg, &cli.global.out)?;
            for r in &manifest.rungs {
                match (&r.failure, r.morse_index) {
                    (Some(msg), _) => println!("eps {:<9} FAILED: {msg}", r.eps),
                    (None, idx) => println!(
                        "eps {:<9} c/(2s) {:.8} index {:?} diag {}/{}",
                        r.eps,
                        r.c_eps / (2.0 * manifest.sigma),
                        idx,
                        r.diag_pass,
                        r.diag_total
                    ),
                }
            }
            Ok(if manifest.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Report => {
            let text = report(&cli.global.out)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { eps, dump_path } => {
            let cfg = load_config(&cli.global)?;
            let domain = cfg.domain()?;
            let well = cfg.well()?;
            let profile = cfg.profile(&well)?;
            let params = cfg.solver_params();
            let delta = (cfg.delta_factor * eps).min(domain.min_length() / 4.0);
            let (path, _) = build_sweepout_path(
                &domain,
                &cfg.sweepout_spec(),
                &well,
                &profile,
                *eps,
                delta,
                cfg.path_nodes,
            )?;
            let ce = c_epsilon(&[path], &well, &params)?;
            std::fs::create_dir_all(&cli.global.out)?;
            write_acf1(&cli.global.out.join("solution.acf1"), &ce.point.u, *eps)?;
            let rep = energy_report(&ce.point.u, &well, *eps)?;
            write_csv(
                &cli.global.out.join("report.csv"),
                EnergyReport::CSV_HEADER,
                &[rep.csv_row()],
            )?;
            if *dump_path {
                for (i, node) in ce.best_path.nodes().iter().enumerate() {
                    write_acf1(
                        &cli.global.out.join(format!("path_{i:03}.acf1")),
                        node,
                        *eps,
                    )?;
                }
            }
            println!(
                "certified: energy {:.10}, residual {:.3e}, c_eps estimate {:.10}",
                ce.point.energy, ce.point.residual, ce.estimate
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweepout {
            family,
            axis,
            eps,
            delta,
            nodes,
        } => {
            if family != "band" {
                return Err(AcError::Config(format!("unknown family `{family}`")));
            }
            let cfg = load_config(&cli.global)?;
            let domain = cfg.domain()?;
            let well = cfg.well()?;
            let profile = cfg.profile(&well)?;
            let spec = ac_core::sweepout::SweepoutSpec::band(
                *axis,
                domain.length(*axis.min(&(domain.dim() - 1))) / 2.0,
            );
            let delta = delta.unwrap_or((cfg.delta_factor * eps).min(domain.min_length() / 4.0));
            let (path, rep) =
                build_sweepout_path(&domain, &spec, &well, &profile, *eps, delta, *nodes)?;
            std::fs::create_dir_all(&cli.global.out)?;
            let mut rows = Vec::new();
            for (i, node) in path.nodes().iter().enumerate() {
                write_acf1(&cli.global.out.join(format!("path_{i:03}.acf1")), node, *eps)?;
                let t = i as f64 / (path.len() - 1) as f64;
                let e = ac_core::energy::energy(node, &well, *eps)?;
                rows.push(vec![
                    fmt_g17(t),
                    fmt_g17(spec.slice_measure(&domain, t)),
                    fmt_g17(e),
                ]);
            }
            write_csv(
                &cli.global.out.join("sweepout.csv"),
                "t,slice_measure,node_energy",
                &rows,
            )?;
            println!(
                "max node energy {:.10} (bound pieces: F {}, tail {:.3e}, eta {:.3e})",
                rep.max_node_energy, rep.max_slice_measure, rep.tail_bound, rep.eta
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum { input, k } => {
            let cfg = load_config(&cli.global)?;
            let well = cfg.well()?;
            let (u, eps) = read_acf1(input)?;
            if eps <= 0.0 {
                return Err(AcError::Config(
                    "stored field carries no epsilon".into(),
                ));
            }
            let rep = lowest_eigenpairs(&u, &well, eps, *k, cfg.seed)?;
            let header: Vec<String> = (0..*k).map(|i| format!("lambda_{i}")).collect();
            println!("{},index", header.join(","));
            let cells: Vec<String> = rep.eigenvalues.iter().map(|&l| fmt_g17(l)).collect();
            println!("{},{}", cells.join(","), rep.morse_index);
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { input } => {
            let cfg = load_config(&cli.global)?;
            let well = cfg.well()?;
            let sigma = well.sigma();
            let mut entries: Vec<_> = std::fs::read_dir(input)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| {
                    p.extension().map(|x| x == "acf1").unwrap_or(false)
                        && p.file_name()
                            .map(|n| n.to_string_lossy().contains("solution"))
                            .unwrap_or(false)
                })
                .collect();
            entries.sort();
            if entries.is_empty() {
                return Err(AcError::MissingFiles(vec!["*solution*.acf1".into()]));
            }
            let mut rows = Vec::new();
            for p in entries {
                let (u, eps) = read_acf1(&p)?;
                let rep = energy_report(&u, &well, eps)?;
                let name = p.file_name().unwrap().to_string_lossy().to_string();
                let mass_gap = (rep.total / (2.0 * sigma) - rep.varifold_mass).abs();
                let mass_bound = (rep.discrepancy_l1 + rep.equipartition_l1) / (2.0 * sigma);
                rows.push(vec![
                    format!("{name}:mass_comparison"),
                    fmt_g17(mass_gap),
                    fmt_g17(mass_bound),
                    fmt_g17(mass_bound - mass_gap),
                    ((mass_gap <= mass_bound + 1e-14) as u8).to_string(),
                ]);
                if let Ok(dg) = de_giorgi_check(&u, -0.5, 0.5) {
                    rows.push(vec![
                        format!("{name}:de_giorgi"),
                        fmt_g17(dg.lhs),
                        fmt_g17(dg.rhs),
                        fmt_g17(dg.rhs - dg.lhs),
                        (dg.satisfied as u8).to_string(),
                    ]);
                }
                if let Ok(v) = vanishing_volume_check(&u, &well, eps, 0.5, rep.total) {
                    rows.push(vec![
                        format!("{name}:vanishing_volume"),
                        fmt_g17(v.measured),
                        fmt_g17(v.bound),
                        fmt_g17(v.bound - v.measured),
                        (v.satisfied as u8).to_string(),
                    ]);
                }
            }
            let all_pass = rows.iter().all(|r| r[4] == "1");
            write_csv(
                &input.join("diagnostics.csv"),
                "check,lhs,rhs,margin,pass",
                &rows,
            )?;
            println!("{} checks written to diagnostics.csv", rows.len());
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
