//! Command-line front end for the full pipeline.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::alignment::{self, AnchorMeta, AnchorPairSet, CollectionMode, FitOptions, LatentMap, MapKind};
use crate::anchors;
use crate::env::{GridDriveConfig, OBS_DIM};
use crate::error::{Error, Result};
use crate::harness::{self, BundleLibrary, TableConfig};
use crate::io::{read_matrix, write_matrix};
use crate::numerics::Matrix;
use crate::policy::{PolicyBundle, PolicyNet};
use crate::training::{self, log_to_csv, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "saps", version, about = "Latent-space policy stitching toolkit")]
pub struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AnchorMode {
    State,
    Pixel,
}

impl From<AnchorMode> for CollectionMode {
    fn from(m: AnchorMode) -> Self {
        match m {
            AnchorMode::State => CollectionMode::State,
            AnchorMode::Pixel => CollectionMode::Pixel,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy bundle with the cross-entropy method.
    Train {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the training config.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-iteration training log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Roll out a policy and record paired raw observations.
    CollectAnchors {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long = "env-u")]
        env_u: PathBuf,
        #[arg(long = "env-v")]
        env_v: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        mode: AnchorMode,
        #[arg(long)]
        seed: u64,
        #[arg(long = "out-u")]
        out_u: PathBuf,
        #[arg(long = "out-v")]
        out_v: PathBuf,
    },
    /// Encode observations into latents.
    Embed {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a latent map from paired anchors.
    Estimate {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        method: MapKind,
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        scale: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Join an encoder and a controller into a new bundle.
    Stitch {
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy evaluation over seeded tracks.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-stitch every bundle in a directory.
    Table {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cosine histogram and PCA projections of mapped latents.
    Analyze {
        #[arg(long = "anchors-u")]
        anchors_u: PathBuf,
        #[arg(long = "anchors-v")]
        anchors_v: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        bins: usize,
        #[arg(long = "out-prefix")]
        out_prefix: String,
    },
}

fn parse_kind(s: &str) -> std::result::Result<MapKind, String> {
    s.parse::<MapKind>().map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EvalReport<'a> {
    env: &'a GridDriveConfig,
    episodes: usize,
    seed: u64,
    mean: f64,
    std: f64,
    returns: &'a [f64],
}

#[derive(Serialize)]
struct AnalyzeSummary {
    anchors: usize,
    mean_aligned: f64,
    mean_naive: f64,
    pca_centroid_distance_aligned: f64,
    pca_centroid_distance_raw: f64,
}

/// Prefixes I/O failures with the offending path.
fn at<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn read_text(path: &Path) -> Result<String> {
    at(path, std::fs::read_to_string(path).map_err(Error::from))
}

fn load_bundle(path: &Path) -> Result<PolicyBundle> {
    at(path, PolicyBundle::load(path))
}

fn load_map(path: &Path) -> Result<LatentMap> {
    at(path, LatentMap::load(path))
}

fn load_matrix(path: &Path) -> Result<Matrix> {
    at(path, read_matrix(path))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let log = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Train {
            env,
            train,
            out,
            seed,
            log: log_path,
        } => {
            let env_cfg = GridDriveConfig::from_json(&read_text(env)?)?;
            let mut cfg = TrainConfig::from_json(&read_text(train)?)?;
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            let template = PolicyNet::default_architecture(OBS_DIM, env_cfg.n_actions());
            log(format!(
                "training {} parameters for {} iterations",
                template.param_count(),
                cfg.iterations
            ));
            let outcome = training::train(&env_cfg, &template, &cfg)?;
            outcome.bundle.save(out)?;
            if let Some(p) = log_path {
                std::fs::write(p, log_to_csv(&outcome.log))?;
            }
            log(format!(
                "{}: mean return {}",
                outcome.bundle.id(),
                outcome.bundle.meta.mean_return.unwrap_or(f64::NAN)
            ));
        }
        Command::CollectAnchors {
            policy,
            env_u,
            env_v,
            n,
            mode,
            seed,
            out_u,
            out_v,
        } => {
            let bundle = load_bundle(policy)?;
            let cfg_u = GridDriveConfig::from_json(&read_text(env_u)?)?;
            let cfg_v = GridDriveConfig::from_json(&read_text(env_v)?)?;
            let (x_u, x_v) = match mode {
                AnchorMode::State => anchors::collect_state_anchors(&bundle, &cfg_u, &cfg_v, *n, *seed)?,
                AnchorMode::Pixel => {
                    let (obs, _) = anchors::collect_state_anchors(&bundle, &cfg_u, &cfg_u, *n, *seed)?;
                    anchors::collect_pixel_anchors(&obs, cfg_u.visual, cfg_v.visual)?
                }
            };
            write_matrix(out_u, &x_u)?;
            write_matrix(out_v, &x_v)?;
            log(format!("wrote {n} anchor pairs"));
        }
        Command::Embed { policy, obs, out } => {
            let bundle = load_bundle(policy)?;
            let latents = bundle.net.encode_batch(&load_matrix(obs)?)?;
            write_matrix(out, &latents)?;
            log(format!("embedded {} observations", latents.rows()));
        }
        Command::Estimate {
            src,
            dst,
            method,
            scale,
            out,
        } => {
            let set = AnchorPairSet::new(load_matrix(src)?, load_matrix(dst)?, AnchorMeta::default())?;
            let map = alignment::estimate(&set, *method, FitOptions::scaled(*scale))?;
            map.save(out)?;
            log(format!(
                "{} map, residual {}",
                method.as_str(),
                map.meta.residual
            ));
            for w in &map.meta.flags.warnings {
                log(format!("warning: {w}"));
            }
        }
        Command::Stitch {
            encoder,
            controller,
            map,
            out,
        } => {
            let enc = load_bundle(encoder)?;
            let ctrl = load_bundle(controller)?;
            let map = map.as_deref().map(load_map).transpose()?;
            let stitched = harness::stitch(&enc, &ctrl, map)?.to_bundle()?;
            stitched.save(out)?;
            log(format!("stitched {} -> {}", enc.id(), ctrl.id()));
        }
        Command::Eval {
            policy,
            env,
            episodes,
            seed,
            out,
        } => {
            let bundle = load_bundle(policy)?;
            let cfg = GridDriveConfig::from_json(&read_text(env)?)?;
            let stats = training::evaluate(&bundle, &cfg, *episodes, *seed)?;
            let report = EvalReport {
                env: &cfg,
                episodes: *episodes,
                seed: *seed,
                mean: stats.mean,
                std: stats.std,
                returns: &stats.returns,
            };
            std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
            log(format!("mean return {} (std {})", stats.mean, stats.std));
        }
        Command::Table {
            library,
            config,
            out,
        } => {
            let cfg = TableConfig::from_json(&read_text(config)?)?;
            let lib = BundleLibrary::load_dir(library)?;
            log(format!("loaded {} bundles", lib.len()));
            let report = harness::run_stitching_table(&lib, &cfg)?;
            std::fs::write(out, report.to_csv())?;
            log(format!("wrote {} cells", report.cells.len()));
        }
        Command::Analyze {
            anchors_u,
            anchors_v,
            map,
            bins,
            out_prefix,
        } => {
            let set = AnchorPairSet::new(load_matrix(anchors_u)?, load_matrix(anchors_v)?, AnchorMeta::default())?;
            let map = load_map(map)?;
            let cos = harness::analyze_cosine(&set, &map, *bins, format!("{out_prefix}_cosine.csv"))?;
            let k = 2.min(set.target_dim()).min(2 * set.len());
            let pca = harness::analyze_pca(set.x_u(), set.x_v(), &map, k, out_prefix)?;
            let summary = AnalyzeSummary {
                anchors: set.len(),
                mean_aligned: cos.mean_aligned,
                mean_naive: cos.mean_naive,
                pca_centroid_distance_aligned: pca.aligned.centroid_distance(),
                pca_centroid_distance_raw: pca.raw.centroid_distance(),
            };
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}
