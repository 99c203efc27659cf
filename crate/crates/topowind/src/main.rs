//! Pipeline driver: generate winding datasets, train the autoencoder,
//! extract compressed feature maps, probe them for the winding number, and
//! emit plot-ready tables.
//!
//! Every command prints the fully resolved configuration it runs with, and
//! identical config + seeds reproduce every output file byte-for-byte.
//! Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

use clap::{Parser, Subcommand};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use topowind::ae::{self, input_tensor, Autoencoder};
use topowind::checkpoint::{Checkpoint, TrainMeta};
use topowind::config::RunConfig;
use topowind::dataset::{self, DatasetRecord};
use topowind::net::Tensor;
use topowind::probe::{self, Probe, CLASSES};
use topowind::report;
use topowind::topo;
use topowind::windgen::{enumerate_patterns, generate_dataset, Split};

#[derive(Parser)]
#[command(
    name = "topowind",
    version,
    about = "Winding-number dataset generation, convolutional autoencoder \
             training, and probing of the compressed feature maps"
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides io.out_dir).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed override applied to the data, ae, and probe sections alike.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Config override, section.key=value; repeatable, wins over the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the train and test datasets.
    Gen {
        /// Also export CSV copies next to the NDJSON files.
        #[arg(long)]
        csv: bool,
    },
    /// Validate datasets: winding labels against the lattice oracle.
    Check {
        /// Single dataset file to check; default checks train and test.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Train the autoencoder; writes final and best checkpoints plus the
    /// loss log.
    TrainAe,
    /// Extract feature maps for both splits using the best checkpoint.
    Extract,
    /// Train the probe on the training feature maps.
    TrainProbe,
    /// Rank the true winding class on the test feature maps.
    Eval,
    /// Train one probe per filter count 1..=4 and emit the rank-rate table.
    Sweep,
    /// Aggregate the figure tables from previously produced artifacts.
    Report,
}

/// Failures carry their exit code class.
enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn rt(e: impl Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set).map_err(usage)?;
    if let Some(seed) = cli.seed {
        cfg.data.seed = seed;
        cfg.ae.seed = seed;
        cfg.probe.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.io.out_dir = out.display().to_string();
    }
    println!("# resolved configuration");
    print!("{}", cfg.render());
    println!("# end configuration");

    match cli.command {
        Cmd::Gen { csv } => cmd_gen(&cfg, csv),
        Cmd::Check { data } => cmd_check(&cfg, data.as_deref()),
        Cmd::TrainAe => cmd_train_ae(&cfg),
        Cmd::Extract => cmd_extract(&cfg),
        Cmd::TrainProbe => cmd_train_probe(&cfg),
        Cmd::Eval => cmd_eval(&cfg),
        Cmd::Sweep => cmd_sweep(&cfg),
        Cmd::Report => cmd_report(&cfg),
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.io.out_dir)
        .map_err(|e| rt(format!("cannot create {}: {e}", cfg.io.out_dir)))
}

fn load_records(path: &Path) -> Result<Vec<DatasetRecord>, Failure> {
    dataset::read_records(path).map_err(|e| rt(format!("{}: {e}", path.display())))
}

fn load_features(path: &Path) -> Result<Vec<ae::FeatureMap>, Failure> {
    report::read_features(path).map_err(|e| rt(format!("{}: {e}", path.display())))
}

fn tensors(records: &[DatasetRecord]) -> Result<Vec<Tensor>, Failure> {
    records.iter().map(|r| input_tensor(r).map_err(rt)).collect()
}

fn cmd_gen(cfg: &RunConfig, csv: bool) -> Result<(), Failure> {
    ensure_out_dir(cfg)?;
    let params = cfg.data.gen_params();
    let patterns = enumerate_patterns(params.max_segments);
    let (train, test) = generate_dataset(&params).map_err(rt)?;
    let train_recs: Vec<DatasetRecord> = train
        .iter()
        .enumerate()
        .map(|(i, s)| DatasetRecord::from_sample(i as u64, Split::Train, s))
        .collect();
    let offset = train_recs.len() as u64;
    let test_recs: Vec<DatasetRecord> = test
        .iter()
        .enumerate()
        .map(|(i, s)| DatasetRecord::from_sample(offset + i as u64, Split::Test, s))
        .collect();

    let train_path = cfg.io.resolve(&cfg.io.train_data);
    let test_path = cfg.io.resolve(&cfg.io.test_data);
    dataset::write_records(&train_path, &train_recs)
        .map_err(|e| rt(format!("{}: {e}", train_path.display())))?;
    dataset::write_records(&test_path, &test_recs)
        .map_err(|e| rt(format!("{}: {e}", test_path.display())))?;
    println!("patterns: {}", patterns.len());
    println!("train samples: {} -> {}", train_recs.len(), train_path.display());
    println!("test samples: {} -> {}", test_recs.len(), test_path.display());

    if csv {
        for (recs, path) in [(&train_recs, &train_path), (&test_recs, &test_path)] {
            let csv_path = path.with_extension("csv");
            dataset::write_csv(&csv_path, recs.iter())
                .map_err(|e| rt(format!("{}: {e}", csv_path.display())))?;
            println!("csv copy -> {}", csv_path.display());
        }
    }
    Ok(())
}

fn cmd_check(cfg: &RunConfig, data: Option<&Path>) -> Result<(), Failure> {
    let paths: Vec<PathBuf> = match data {
        Some(p) => vec![p.to_path_buf()],
        None => vec![
            cfg.io.resolve(&cfg.io.train_data),
            cfg.io.resolve(&cfg.io.test_data),
        ],
    };
    for path in paths {
        let records = load_records(&path)?;
        let mut agree = 0usize;
        let mut residual_sum = 0.0;
        let mut residual_max = 0.0f64;
        for r in &records {
            let w = topo::winding_number(&r.re, &r.im)
                .map_err(|e| rt(format!("{}: sample {}: {e}", path.display(), r.id)))?;
            if w.n == r.n_w {
                agree += 1;
            }
            let residual = (w.raw - w.raw.round()).abs();
            residual_sum += residual;
            residual_max = residual_max.max(residual);
        }
        let n = records.len();
        println!(
            "{}: {} records, label agreement {:.2}% ({}/{}), residual mean {:.3e} max {:.3e}",
            path.display(),
            n,
            100.0 * agree as f64 / n as f64,
            agree,
            n,
            residual_sum / n as f64,
            residual_max
        );
    }
    Ok(())
}

fn ae_meta(cfg: &RunConfig) -> TrainMeta {
    TrainMeta {
        seed: cfg.ae.seed,
        learning_rate: cfg.ae.lr,
        batch_size: cfg.ae.batch,
        epochs_completed: cfg.ae.epochs,
    }
}

fn cmd_train_ae(cfg: &RunConfig) -> Result<(), Failure> {
    let train_records = load_records(&cfg.io.resolve(&cfg.io.train_data))?;
    let test_records = load_records(&cfg.io.resolve(&cfg.io.test_data))?;
    let train_x = tensors(&train_records)?;
    let test_x = tensors(&test_records)?;
    let result = ae::train(&train_x, &test_x, &cfg.ae.train_config()).map_err(rt)?;

    ensure_out_dir(cfg)?;
    let final_path = cfg.io.resolve(&cfg.io.ae_final);
    let best_path = cfg.io.resolve(&cfg.io.ae_best);
    let log_path = cfg.io.resolve(&cfg.io.loss_log);
    result
        .final_model
        .to_checkpoint(ae_meta(cfg))
        .save(&final_path)
        .map_err(rt)?;
    result
        .best_model
        .to_checkpoint(ae_meta(cfg))
        .save(&best_path)
        .map_err(rt)?;
    report::write_loss_log(&log_path, &result.log).map_err(rt)?;

    println!(
        "trained {} epochs on {} samples ({} test)",
        cfg.ae.epochs,
        train_x.len(),
        test_x.len()
    );
    if let Some(last) = result.log.last() {
        println!(
            "final train loss {:.6}, test loss {:.6} ({:.1}s)",
            last.train_loss, last.test_loss, last.wall_time
        );
    }
    println!("best epoch: {}", result.best_epoch);
    println!("final checkpoint -> {}", final_path.display());
    println!("best checkpoint -> {}", best_path.display());
    println!("loss log -> {}", log_path.display());
    Ok(())
}

fn load_autoencoder(path: &Path) -> Result<Autoencoder, Failure> {
    let ck = Checkpoint::load(path).map_err(|e| rt(format!("{}: {e}", path.display())))?;
    Autoencoder::from_checkpoint(&ck).map_err(|e| rt(format!("{}: {e}", path.display())))
}

fn cmd_extract(cfg: &RunConfig) -> Result<(), Failure> {
    let model = load_autoencoder(&cfg.io.resolve(&cfg.io.ae_best))?;
    ensure_out_dir(cfg)?;
    for (data_name, feat_name) in [
        (&cfg.io.train_data, &cfg.io.train_features),
        (&cfg.io.test_data, &cfg.io.test_features),
    ] {
        let records = load_records(&cfg.io.resolve(data_name))?;
        let maps = ae::extract_features(&model, &records).map_err(rt)?;
        let path = cfg.io.resolve(feat_name);
        report::write_features(&path, &maps)
            .map_err(|e| rt(format!("{}: {e}", path.display())))?;
        println!("{} feature maps -> {}", maps.len(), path.display());
    }
    Ok(())
}

fn probe_meta(cfg: &RunConfig) -> TrainMeta {
    TrainMeta {
        seed: cfg.probe.seed,
        learning_rate: cfg.probe.lr,
        batch_size: cfg.probe.batch,
        epochs_completed: cfg.probe.epochs,
    }
}

fn cmd_train_probe(cfg: &RunConfig) -> Result<(), Failure> {
    let maps = load_features(&cfg.io.resolve(&cfg.io.train_features))?;
    let trained = probe::train_probe(&maps, &cfg.probe.train_config()).map_err(rt)?;
    ensure_out_dir(cfg)?;
    let path = cfg.io.resolve(&cfg.io.probe);
    trained.to_checkpoint(probe_meta(cfg)).save(&path).map_err(rt)?;
    let hist = probe::evaluate(&trained, &maps).map_err(rt)?;
    println!(
        "trained {} epochs on {} feature maps ({} filters)",
        cfg.probe.epochs,
        maps.len(),
        cfg.probe.filters_used
    );
    println!("train rank-1 rate: {:.4}", hist.rank1_rate());
    println!("probe checkpoint -> {}", path.display());
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> Result<(), Failure> {
    let path = cfg.io.resolve(&cfg.io.probe);
    let ck = Checkpoint::load(&path).map_err(|e| rt(format!("{}: {e}", path.display())))?;
    let trained = Probe::from_checkpoint(&ck).map_err(rt)?;
    let maps = load_features(&cfg.io.resolve(&cfg.io.test_features))?;
    let hist = probe::evaluate(&trained, &maps).map_err(rt)?;
    println!("rank histogram over {} test samples:", hist.total);
    for rank in 1..=CLASSES {
        println!(
            "  rank {rank:>2}: {:.4} ({})",
            hist.rate(rank),
            hist.counts[rank - 1]
        );
    }
    println!("rank-1 rate: {:.4}", hist.rank1_rate());
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let train_maps = load_features(&cfg.io.resolve(&cfg.io.train_features))?;
    let test_maps = load_features(&cfg.io.resolve(&cfg.io.test_features))?;
    let rows = probe::filter_sweep(&train_maps, &test_maps, &cfg.probe.train_config())
        .map_err(rt)?;
    ensure_out_dir(cfg)?;
    let path = cfg.io.resolve(&cfg.io.fig5);
    report::write_fig5_csv(&path, &rows).map_err(rt)?;
    for k in 1..=ae::DEEP_FILTERS {
        let rank1 = rows
            .iter()
            .find(|r| r.filters_used == k && r.rank == 1)
            .map(|r| r.rate)
            .unwrap_or(0.0);
        println!("filters {k}: rank-1 rate {rank1:.4}");
    }
    println!("rank table -> {}", path.display());
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<(), Failure> {
    let features_path = cfg.io.resolve(&cfg.io.test_features);
    let log_path = cfg.io.resolve(&cfg.io.loss_log);
    let fig5_path = cfg.io.resolve(&cfg.io.fig5);
    let missing = report::missing_inputs(&[
        ("test features", &features_path),
        ("loss log", &log_path),
        ("rank table", &fig5_path),
    ]);
    if !missing.is_empty() {
        return Err(rt(format!("missing inputs: {}", missing.join(", "))));
    }

    let maps = load_features(&features_path)?;
    let averages = ae::pattern_averaged_features(&maps).map_err(rt)?;
    let log = report::read_loss_log(&log_path)
        .map_err(|e| rt(format!("{}: {e}", log_path.display())))?;
    let rows = report::read_fig5_csv(&fig5_path)
        .map_err(|e| rt(format!("{}: {e}", fig5_path.display())))?;

    ensure_out_dir(cfg)?;
    let fig3_path = cfg.io.resolve(&cfg.io.fig3);
    let fig7_path = cfg.io.resolve(&cfg.io.fig7);
    report::write_fig3_csv(&fig3_path, &averages).map_err(rt)?;
    report::write_fig7_csv(&fig7_path, &log).map_err(rt)?;
    println!(
        "pattern-averaged features: {} patterns -> {}",
        averages.len(),
        fig3_path.display()
    );
    println!("loss curve: {} points -> {}", log.len(), fig7_path.display());
    println!("rank table: {} rows validated at {}", rows.len(), fig5_path.display());
    Ok(())
}
