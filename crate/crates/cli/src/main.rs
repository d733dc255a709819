use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ord_core::dataset::{load_csv, load_ternary_csv, write_csv_file, Schema, TabularDataset, UnseenCategory, ORD_LABEL_COLUMN};
use ord_core::experiments::{
    ablate_augmentation, ablate_before_after, ablate_overlap_removal, bench_overlap, boundary_shift, classifier_seed,
    emit_plot_data, emit_report, rebuild_report, run_efficacy, shift_grid, sweep_tau_efficacy, toy_plot_run, EvalReport,
    PipelineConfig,
};
use ord_core::generators::{fit_generator, GeneratorConfig, GeneratorKind};
use ord_core::oracle_toy::{make_blobs, BlobWorld};
use ord_core::overlap::{score_majority, select_tau_from_scores, OverlapConfig, TAU_GRID};
use ord_core::seed::derive_seed;

#[derive(Parser, Debug)]
#[command(name = "ord", version, about = "Overlap region detection for imbalanced tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct OverlapArgs {
    /// Confidence threshold; majority rows with confidence <= 1 - tau are flagged.
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
    /// Number of majority folds.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    trees: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Flag rows with confidence < 1 - tau instead of <=.
    #[arg(long)]
    strict: bool,
}

impl OverlapArgs {
    fn config(&self) -> OverlapConfig {
        OverlapConfig {
            tau: self.tau,
            k_folds: self.k,
            n_trees: self.trees,
            seed: self.seed,
            strict: self.strict,
            ..OverlapConfig::default()
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Ablation {
    Removal,
    BeforeAfter,
    Augment,
    BoundaryShift,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relabel majority rows near the class boundary as class 2.
    Detect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        overlap: OverlapArgs,
        /// Pick tau from the grid so |D01| is closest to min(|D1|, r% of |D0|).
        #[arg(long)]
        r_percent: Option<f64>,
        /// Ternary CSV; a JSON sidecar with confidences is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a class-conditional generator and sample rows per label.
    Generate {
        /// Training CSV; uses the ord_label column when present, else the target.
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        labels: Vec<u8>,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value = "gmm")]
        generator: String,
        /// Synthetic CSV for the bridge generator.
        #[arg(long)]
        bridge_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a Gaussian blob world.
    Toy {
        /// blobs1, blobs2 or a world JSON file.
        #[arg(long, default_value = "blobs1")]
        world: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw this many rows per class instead of the world's counts.
        #[arg(long)]
        balanced: Option<usize>,
        /// Directory (gets toy.csv and schema.json) or a .csv path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the efficacy grid of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one ablation protocol.
    Ablate {
        #[arg(long, value_enum)]
        which: Ablation,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Overlap counts over a tau grid from one scoring pass; with --config, ORD efficacy per tau.
    SweepTau {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[command(flatten)]
        overlap: OverlapArgs,
        #[arg(long)]
        r_percent: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time overlap detection on synthetic 95/5 Gaussian data.
    Bench {
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trees: usize,
        /// Append the result as a JSON line to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild report.md from cells.csv (and synthesis.csv) in a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Defaults to <dir>/report.md.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Point clouds for the toy visualization panels.
    PlotData {
        #[arg(long, default_value = "blobs1")]
        world: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        tau: f64,
        #[arg(long, default_value_t = 50)]
        trees: usize,
        #[arg(long, default_value = "gmm")]
        generator: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Loads a CSV, reading ord_label when the file carries it.
fn load_any(path: &Path, schema_path: &Path) -> Result<TabularDataset> {
    let header = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .next()
        .unwrap_or("")
        .to_string();
    if header.split(',').any(|h| h.trim_matches('"') == ORD_LABEL_COLUMN) {
        let schema = Schema::from_json_file(schema_path)?;
        Ok(load_ternary_csv(path, &schema, UnseenCategory::Append)?)
    } else {
        Ok(load_csv(path, schema_path)?)
    }
}

/// Seeds consumed by each cell of a config, by stage name.
fn seed_log(cfg: &PipelineConfig) -> serde_json::Value {
    let cells: serde_json::Map<String, serde_json::Value> = cfg
        .seeds
        .iter()
        .map(|&s| {
            let mut stages = serde_json::Map::new();
            for name in ["split", "overlap", "generator-fit", "generator-sample", "augment-majority", "validation"] {
                stages.insert(name.into(), json!(derive_seed(s, name, 0)));
            }
            for &k in &cfg.classifiers {
                stages.insert(format!("classifier-{}", k.name()), json!(classifier_seed(s, k)));
            }
            (s.to_string(), serde_json::Value::Object(stages))
        })
        .collect();
    serde_json::Value::Object(cells)
}

fn write_run_outputs(cfg: &PipelineConfig, report: &EvalReport, out: &Path) -> Result<()> {
    emit_report(report, out)?;
    write_json(&out.join("config.resolved.json"), &cfg.resolved())?;
    write_json(&out.join("seeds.json"), &seed_log(cfg))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            data,
            schema,
            overlap,
            r_percent,
            out,
        } => {
            let d = load_csv(&data, &schema)?;
            let mut cfg = overlap.config();
            let scores = score_majority(&d, &cfg)?;
            let selection = match r_percent {
                Some(r) => {
                    let sel = select_tau_from_scores(&scores, cfg.strict, &TAU_GRID, r)?;
                    cfg.tau = sel.tau;
                    Some(sel)
                }
                None => None,
            };
            let result = scores.assign(cfg.tau, cfg.strict);
            let ternary = ord_core::overlap::relabel(&d, &result)?;
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            write_csv_file(&ternary, &out)?;
            write_json(
                &sidecar_path(&out),
                &json!({ "config": cfg, "tau_selection": selection, "result": result }),
            )?;
            log::info!("{} of {} majority rows flagged", result.n_overlap, result.n_overlap + result.n_clear);
        }
        Command::Generate {
            fit,
            schema,
            labels,
            n,
            generator,
            bridge_file,
            seed,
            out,
        } => {
            if labels.len() != n.len() {
                bail!("--labels and --n need the same number of entries");
            }
            let d = load_any(&fit, &schema)?;
            let cfg = GeneratorConfig {
                kind: generator.parse::<GeneratorKind>()?,
                bridge_file,
                ..GeneratorConfig::default()
            };
            let g = fit_generator(&cfg, &d, derive_seed(seed, "generator-fit", 0))?;
            let sample_seed = derive_seed(seed, "generator-sample", 0);
            let mut parts = vec![];
            for (&l, &count) in labels.iter().zip(&n) {
                let b = g.sample(l, count, sample_seed)?;
                for w in &b.warnings {
                    log::warn!("{w}");
                }
                parts.push(b.data);
            }
            let refs: Vec<&TabularDataset> = parts.iter().collect();
            let all = TabularDataset::concat(&refs)?;
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            write_csv_file(&all, &out)?;
            write_json(
                &sidecar_path(&out),
                &json!({ "generator": cfg, "seed": seed, "labels": labels, "n": n }),
            )?;
        }
        Command::Toy { world, seed, balanced, out } => {
            let mut w = BlobWorld::by_name(&world)?;
            if let Some(per_class) = balanced {
                w = w.balanced(per_class);
            }
            let d = make_blobs(&w, seed)?;
            let (csv_path, schema_path, world_path) = if out.extension().is_some_and(|e| e == "csv") {
                if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                    create_dir(dir)?;
                }
                (out.clone(), out.with_extension("schema.json"), out.with_extension("world.json"))
            } else {
                create_dir(&out)?;
                (out.join("toy.csv"), out.join("schema.json"), out.join("world.json"))
            };
            write_csv_file(&d, &csv_path)?;
            fs::write(&schema_path, d.schema().to_json()? + "\n")?;
            write_json(&world_path, &json!({ "world": w, "seed": seed }))?;
        }
        Command::Run { config, out } => {
            let cfg = PipelineConfig::from_file(&config)?;
            let loaded = cfg.load_data()?;
            create_dir(&out)?;
            let report = run_efficacy(&cfg, &loaded)?;
            write_run_outputs(&cfg, &report, &out)?;
        }
        Command::Ablate { which, config, out } => {
            let cfg = PipelineConfig::from_file(&config)?;
            let loaded = cfg.load_data()?;
            create_dir(&out)?;
            let report = match which {
                Ablation::Removal => ablate_overlap_removal(&cfg, &loaded)?,
                Ablation::BeforeAfter => ablate_before_after(&cfg, &loaded)?,
                Ablation::Augment => ablate_augmentation(&cfg, &loaded)?,
                Ablation::BoundaryShift => {
                    let b = boundary_shift(&cfg, &loaded, &shift_grid())?;
                    write_json(&out.join("thresholds.json"), &b.thresholds)?;
                    b.report
                }
            };
            write_run_outputs(&cfg, &report, &out)?;
        }
        Command::SweepTau {
            data,
            schema,
            config,
            grid,
            overlap,
            r_percent,
            out,
        } => {
            let grid = grid.unwrap_or_else(|| TAU_GRID.to_vec());
            create_dir(&out)?;
            if let Some(config) = config {
                let cfg = PipelineConfig::from_file(&config)?;
                let loaded = cfg.load_data()?;
                let report = sweep_tau_efficacy(&cfg, &loaded, &grid)?;
                write_run_outputs(&cfg, &report, &out)?;
            } else {
                let (Some(data), Some(schema)) = (data, schema) else {
                    bail!("sweep-tau needs --config, or --data with --schema");
                };
                let d = load_csv(&data, &schema)?;
                let cfg = overlap.config();
                let scores = score_majority(&d, &cfg)?;
                let mut f = fs::File::create(out.join("counts.csv"))?;
                writeln!(f, "tau,n_overlap,n_clear")?;
                for &t in &grid {
                    let n = scores.count_overlap(t, cfg.strict);
                    writeln!(f, "{t},{n},{}", scores.majority.len() - n)?;
                }
                let selection = match r_percent {
                    Some(r) => Some(select_tau_from_scores(&scores, cfg.strict, &grid, r)?),
                    None => None,
                };
                write_json(&out.join("sweep.json"), &json!({ "config": cfg, "grid": grid, "tau_selection": selection }))?;
            }
        }
        Command::Bench {
            samples,
            features,
            seed,
            trees,
            out,
        } => {
            let cfg = OverlapConfig {
                n_trees: trees,
                seed,
                ..OverlapConfig::default()
            };
            let r = bench_overlap(samples, features, seed, &cfg)?;
            let line = serde_json::to_string(&r)?;
            println!("{line}");
            if let Some(path) = out {
                let mut f = fs::OpenOptions::new().create(true).append(true).open(&path)?;
                writeln!(f, "{line}")?;
            }
        }
        Command::Report { dir, out } => {
            let md = rebuild_report(&dir)?;
            let path = out.unwrap_or_else(|| dir.join("report.md"));
            fs::write(&path, md).with_context(|| format!("writing {}", path.display()))?;
        }
        Command::PlotData {
            world,
            seed,
            tau,
            trees,
            generator,
            out,
        } => {
            let w = BlobWorld::by_name(&world)?;
            let ocfg = OverlapConfig {
                tau,
                n_trees: trees,
                ..OverlapConfig::default()
            };
            let gcfg = GeneratorConfig {
                kind: generator.parse::<GeneratorKind>()?,
                ..GeneratorConfig::default()
            };
            let (real, synth) = toy_plot_run(&w, seed, &ocfg, &gcfg)?;
            emit_plot_data(&out, &real, &synth, &w)?;
            write_json(&out.join("plot.json"), &json!({ "world": w, "seed": seed, "overlap": ocfg, "generator": gcfg }))?;
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ORD_THREADS") {
        let n: usize = v.parse().with_context(|| format!("ORD_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

/// The cause chain joined by ": ", skipping causes whose text the message already shows.
fn error_chain(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if msg.contains(&text) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&text);
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads().and_then(|_| run(cli)) {
        eprintln!("error: {}", error_chain(&e));
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
