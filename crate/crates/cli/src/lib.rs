//! Command-line surface: synth, refine, eval, ablate. Exit codes: 0 success,
//! 2 config/schema error, 3 I/O error, 4 training/runtime error.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use refineloc_core::dataio::{generate_synthetic, DatasetManifest, LoadedDataset, Split};
use refineloc_core::evalkit::{default_thresholds, evaluate, EvalReport};
use refineloc_core::pseudogen::GeneratorKind;
use refineloc_core::refine::{ablation_grid, refine_loop};
use refineloc_core::segpred::SegmentPrediction;
use refineloc_core::CoreError;

use config::{parse_config, FileConfig};

#[derive(Parser)]
#[command(name = "refineloc", about = "Weakly-supervised temporal action localization with iterative pseudo-label refinement")]
struct Cli {
    /// Worker threads for per-video forward fan-out.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (manifest + feature files).
    Synth {
        config: PathBuf,
        out_dir: PathBuf,
    },
    /// Run the iterative refinement loop on a dataset directory.
    Refine {
        config: PathBuf,
        data_dir: PathBuf,
        out_dir: PathBuf,
        /// Overrides the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a predictions file against a manifest.
    Eval {
        predictions: PathBuf,
        manifest: PathBuf,
        /// Where to write report.json.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Run the (generator, beta) ablation grid and write grid.csv.
    Ablate {
        config: PathBuf,
        data_dir: PathBuf,
        out_dir: PathBuf,
        /// Overrides the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Io { .. } => 3,
        CoreError::Training(_) => 4,
        _ => 2,
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 1 {
        // per-video work is independent and merged in input order, so the
        // pool size never affects results
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Synth { config, out_dir } => cmd_synth(&config, &out_dir),
        Command::Refine { config, data_dir, out_dir, seed } => {
            cmd_refine(&config, &data_dir, &out_dir, seed)
        }
        Command::Eval { predictions, manifest, out } => cmd_eval(&predictions, &manifest, &out),
        Command::Ablate { config, data_dir, out_dir, seed } => {
            cmd_ablate(&config, &data_dir, &out_dir, seed)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn load_config(path: &Path) -> Result<FileConfig, CoreError> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    parse_config(&text)
}

pub fn cmd_synth(config_path: &Path, out_dir: &Path) -> Result<(), CoreError> {
    let cfg = load_config(config_path)?.synth.to_core();
    let manifest = generate_synthetic(&cfg, out_dir)?;
    let total_snippets: usize = manifest.videos.iter().map(|v| v.num_snippets).sum();
    let fg_snippets: usize = manifest
        .videos
        .iter()
        .flat_map(|v| &v.gt_segments)
        .map(|g| g.end - g.start + 1)
        .sum();
    let fg_fraction = fg_snippets as f64 / total_snippets.max(1) as f64;
    println!(
        "wrote {} videos, {} classes, foreground fraction {:.4} -> {}",
        manifest.videos.len(),
        manifest.num_classes,
        fg_fraction,
        out_dir.display()
    );
    let counts = |s: Split| manifest.split.values().filter(|&&v| v == s).count();
    println!(
        "split: {} train / {} val / {} test",
        counts(Split::Train),
        counts(Split::Val),
        counts(Split::Test)
    );
    Ok(())
}

pub fn cmd_refine(
    config_path: &Path,
    data_dir: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<(), CoreError> {
    let file_cfg = load_config(config_path)?;
    let dataset = LoadedDataset::load(data_dir)?;
    let mut cfg = file_cfg.refine_config(dataset.manifest.feature_dim, dataset.manifest.num_classes);
    if let Some(seed) = seed_override {
        cfg.seed = seed;
        cfg.model.init_seed = seed;
    }
    let (reports, _) = refine_loop(&dataset, &cfg, Some(out_dir))?;
    for r in &reports {
        println!(
            "eta={} val_loss={:.6} map@0.5={:.6} avg_map={:.6}",
            r.eta,
            r.val_loss,
            r.eval.map_at(0.5).unwrap_or(f64::NAN),
            r.eval.average_map
        );
    }
    Ok(())
}

pub fn load_predictions(path: &Path) -> Result<Vec<SegmentPrediction>, CoreError> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: SegmentPrediction = serde_json::from_str(line).map_err(|e| {
            CoreError::Format(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(p);
    }
    Ok(out)
}

fn print_report(report: &EvalReport) {
    println!("threshold  mAP");
    for (thr, map) in &report.map_per_threshold {
        println!("{thr}       {map:.4}");
    }
    println!("average mAP {:.4}", report.average_map);
    let b = &report.error_breakdown;
    println!(
        "errors@0.5: tp={} loc={} conf={} bg={} dd={}",
        b.true_positive, b.localization, b.confusion, b.background, b.double_detection
    );
}

pub fn cmd_eval(predictions_path: &Path, manifest_path: &Path, out: &Path) -> Result<(), CoreError> {
    let predictions = load_predictions(predictions_path)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    manifest.validate(None)?;
    let report = evaluate(&predictions, &manifest, &default_thresholds())?;
    print_report(&report);
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(out, json).map_err(|e| CoreError::io(out.display().to_string(), e))?;
    let mut csv = String::from("threshold,mAP\n");
    for (thr, map) in &report.map_per_threshold {
        csv.push_str(&format!("{thr},{map:.6}\n"));
    }
    let summary = out.with_file_name("summary.csv");
    fs::write(&summary, csv).map_err(|e| CoreError::io(summary.display().to_string(), e))?;
    Ok(())
}

fn generator_name(kind: &GeneratorKind) -> &'static str {
    match kind {
        GeneratorKind::UniformRandom => "uniform_random",
        GeneratorKind::DistributionAware { .. } => "distribution_aware",
        GeneratorKind::ClassActivation { .. } => "class_activation",
        GeneratorKind::Attention { .. } => "attention",
        GeneratorKind::SegmentPrediction => "segment_prediction",
    }
}

pub fn cmd_ablate(
    config_path: &Path,
    data_dir: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<(), CoreError> {
    let file_cfg = load_config(config_path)?;
    let dataset = LoadedDataset::load(data_dir)?;
    let mut cfg = file_cfg.refine_config(dataset.manifest.feature_dim, dataset.manifest.num_classes);
    if let Some(seed) = seed_override {
        cfg.seed = seed;
        cfg.model.init_seed = seed;
    }
    let cells = ablation_grid(&dataset, &file_cfg.refine.generators, &file_cfg.refine.betas, &cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| CoreError::io(out_dir.display().to_string(), e))?;
    let mut csv = String::from("generator,beta,best_avg_map,best_eta\n");
    for cell in &cells {
        csv.push_str(&format!(
            "{},{},{:.6},{}\n",
            generator_name(&cell.generator),
            cell.beta,
            cell.best_avg_map,
            cell.best_eta
        ));
        println!(
            "generator={} beta={} best_avg_map={:.4} best_eta={}",
            generator_name(&cell.generator),
            cell.beta,
            cell.best_avg_map,
            cell.best_eta
        );
    }
    let path = out_dir.join("grid.csv");
    fs::write(&path, csv).map_err(|e| CoreError::io(path.display().to_string(), e))
}
