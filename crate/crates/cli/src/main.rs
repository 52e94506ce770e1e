use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use fewboson::Exec;
use fewboson_cli::analyze::{analyze_run_dir, analyze_scan, write_scan_analysis};
use fewboson_cli::config::{Mode, RunConfig};
use fewboson_cli::output::{resolve_out_dir, staged, write_series, Manifest};
use fewboson_cli::scan::{run_into, run_scan, ScanManifest, SCAN_MANIFEST};
use fewboson_cli::{load_config, preset, presets, simulate, CliError};

/// Few-boson lattice dynamics under multiple interaction quenches.
#[derive(Debug, Parser)]
#[command(name = "fewboson", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named preset (see `fewboson presets`).
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,
    /// Output directory; overrides the environment and the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Single worker, sequential kernels: bitwise reproducible series.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads for scans and parallel kernels.
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground state at g_in: energy, density, momentum profile.
    Ground,
    /// Propagate through the pulse schedule and export observables.
    Evolve,
    /// One run per value of the configured scan axis, plus aggregate spectra.
    Scan,
    /// Spectra of an exported run or scan directory.
    Analyze {
        /// Run or scan directory.
        dir: PathBuf,
    },
    /// Mean-field (single-orbital) propagation.
    Mf,
    /// List presets, or print one as TOML with --preset.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Refused(_) => eprintln!("status: refused\n{e}"),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.status() as u8)
        }
    }
}

fn config_and_name(cli: &Cli) -> Result<(RunConfig, String), CliError> {
    let (mut cfg, name) = match (&cli.config, &cli.preset) {
        (Some(p), _) => (
            load_config(p)?,
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into()),
        ),
        (None, Some(n)) => (
            preset(n).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown preset {n}; available: {}",
                    presets::names().join(", ")
                ))
            })?,
            n.clone(),
        ),
        (None, None) => return Err(CliError::Usage("give --config PATH or --preset NAME".into())),
    };
    if cli.deterministic {
        cfg.engine.deterministic = true;
    }
    Ok((cfg, name))
}

fn workers(cli: &Cli, cfg: &RunConfig) -> usize {
    if cfg.engine.deterministic {
        1
    } else {
        cli.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

fn exec(cfg: &RunConfig, workers: usize) -> Exec {
    if cfg.engine.deterministic || workers == 1 {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Presets => {
            match &cli.preset {
                Some(n) => {
                    let c = preset(n).ok_or_else(|| CliError::Usage(format!("unknown preset {n}")))?;
                    print!("{}", c.to_toml());
                }
                None => {
                    for n in presets::names() {
                        println!("{n}");
                    }
                }
            }
            Ok(())
        }
        Command::Analyze { dir } => analyze(&cli, dir),
        Command::Ground | Command::Evolve | Command::Mf | Command::Scan => {
            let (mut cfg, name) = config_and_name(&cli)?;
            let command = match cli.command {
                Command::Ground => "ground",
                Command::Evolve => "evolve",
                Command::Mf => {
                    cfg.engine.mode = Mode::Meanfield;
                    cfg.outputs
                        .observables
                        .retain(|o| matches!(o.name(), "fidelity" | "bands" | "momentum"));
                    cfg.outputs.checkpoint = false;
                    "mf"
                }
                _ => "scan",
            };
            cfg.validate()?;
            let workers = workers(&cli, &cfg);
            if workers > 1 {
                // kernels share the global pool; a second initialization is harmless
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global();
            }
            let out = resolve_out_dir(cli.out.as_deref(), &cfg, &format!("{name}-{command}"));
            match command {
                "ground" => ground(&out, &cfg, exec(&cfg, workers), workers),
                "scan" => {
                    let r = run_scan(&out, &cfg, workers)?;
                    report_scan(&out, &r.manifest);
                    if let Some(Some(Ok(fit))) = r.analysis.as_ref().map(|a| a.fit.clone()) {
                        println!(
                            "omega1 = {:.4} g_f^{:.4} + {:.4} (rms {:.3e})",
                            fit.a, fit.b, fit.c, fit.rms
                        );
                    }
                    Ok(())
                }
                _ => {
                    let (_, m) = run_into(&out, command, &cfg, exec(&cfg, workers), workers)?;
                    report(&out, &m);
                    Ok(())
                }
            }
        }
    }
}

fn ground(out: &Path, cfg: &RunConfig, exec: Exec, workers: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let m = staged(out, |stage| {
        let res = simulate::ground(cfg, exec)?;
        let mut m = Manifest::new("ground", cfg, workers);
        m.files = write_series(stage, &res)?;
        m.summary = res.summary;
        m.wall_seconds = start.elapsed().as_secs_f64();
        m.save(stage)?;
        Ok(m)
    })?;
    report(out, &m);
    Ok(())
}

fn report(out: &Path, m: &Manifest) {
    println!("wrote {} files to {}", m.files.len() + 1, out.display());
    for (k, v) in &m.summary {
        println!("  {k} = {v}");
    }
    for n in &m.notes {
        println!("  note: {n}");
    }
}

fn report_scan(out: &Path, m: &ScanManifest) {
    println!("scan over {} written to {}", m.axis, out.display());
    for r in &m.runs {
        match &r.message {
            Some(msg) => println!("  {} = {}: {} ({msg})", m.axis, r.value, r.status),
            None => println!("  {} = {}: {} ({:.1} s)", m.axis, r.value, r.status, r.wall_seconds),
        }
    }
    if let Some(a) = &m.analysis {
        println!("  {a}");
    }
}

fn analyze(cli: &Cli, dir: &Path) -> Result<(), CliError> {
    let explicit = match (&cli.config, &cli.preset) {
        (None, None) => None,
        _ => Some(config_and_name(cli)?.0),
    };
    let out = cli.out.clone().unwrap_or_else(|| dir.to_path_buf());
    if dir.join(SCAN_MANIFEST).exists() {
        let sm = ScanManifest::load(dir)?;
        let a = explicit.map(|c| c.analysis).unwrap_or(sm.config.analysis.clone());
        let mut runs = Vec::new();
        for r in sm.runs.iter().filter(|r| r.status == "ok") {
            let path = dir.join(&r.directory).join(format!("{}.tsv", a.series));
            runs.push((r.value, fewboson::io::Series::load(&path)?));
        }
        let sa = analyze_scan(&sm.axis, &runs, &a)?;
        std::fs::create_dir_all(&out)?;
        write_scan_analysis(&out, &sm.axis, &sa, &a)?;
        for (v, p) in &sa.dominant {
            match p {
                Some(p) => println!("{} = {v}: omega = {:.4}", sm.axis, p.frequency),
                None => println!("{} = {v}: no peak", sm.axis),
            }
        }
        match &sa.fit {
            Some(Ok(f)) => println!("omega1 = {:.4} g_f^{:.4} + {:.4} (rms {:.3e})", f.a, f.b, f.c, f.rms),
            Some(Err(e)) => println!("power law: {e}"),
            None => {}
        }
    } else {
        let m = Manifest::load(dir)?;
        let a = explicit.map(|c| c.analysis).unwrap_or(m.config.analysis);
        let c = analyze_run_dir(dir, &out, &a)?;
        match c.dominant {
            Some(p) => println!(
                "{}: dominant frequency {:.4} (bin {:.4})",
                c.spectrum.label,
                p.frequency,
                c.spectrum.bin()
            ),
            None => println!("{}: no peak above the noise floor", c.spectrum.label),
        }
    }
    Ok(())
}
