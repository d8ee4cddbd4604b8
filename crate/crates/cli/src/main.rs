use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fftg_core::annotate::Label;
use fftg_core::blend::make_mixed_forgery;
use fftg_core::evaluate::Averaging;
use fftg_core::pipeline::{analyze, evaluate_records, ingest, read_records, run_batch, PipelineConfig};
use fftg_core::refine::{build_prompt_bundle, build_visual_prompt, RefineClient};
use fftg_core::region::{
    extract_forgery_regions, generate_mask, partition_regions, region_means, select_region, Landmarks, RegionName,
};
use fftg_core::synth::write_fixture;
use fftg_core::vision::{io, RgbImage};
use serde_json::json;

/// Mask-guided textual annotation of face forgeries.
#[derive(Parser)]
#[command(name = "fftg", version)]
struct Cli {
    /// TOML configuration; defaults apply for anything left out
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured global seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for batch runs
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Output file or directory, depending on the subcommand
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    fake: PathBuf,
    #[arg(long)]
    landmarks: Option<PathBuf>,
}

impl PairArgs {
    fn load(&self) -> Result<(RgbImage, RgbImage)> {
        let real = io::load_rgb(&self.real).with_context(|| format!("reading {}", self.real.display()))?;
        let fake = io::load_rgb(&self.fake).with_context(|| format!("reading {}", self.fake.display()))?;
        Ok((real, fake))
    }

    fn landmarks(&self) -> Result<Landmarks> {
        let path = self.landmarks.as_ref().context("--landmarks is required for this subcommand")?;
        Ok(Landmarks::load(path)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the forgery mask of a pair as an 8-bit PNG (--out)
    Mask(PairArgs),
    /// Print per-region mask means and the extracted region list
    Regions(PairArgs),
    /// Print regions, detector evidence and the raw annotation
    Annotate(PairArgs),
    /// Refine the raw annotation through the configured chat service
    Refine {
        #[command(flatten)]
        pair: PairArgs,
        /// Caption count; defaults to the configured k for the label
        #[arg(long)]
        k: Option<usize>,
    },
    /// Blend the fake region into the real image (--out PNG)
    Blend {
        #[command(flatten)]
        pair: PairArgs,
        /// Region to blend; drawn from the extracted list when omitted
        #[arg(long)]
        region: Option<RegionName>,
    },
    /// Score a records file against its mask-derived regions
    Eval {
        records: PathBuf,
        /// Score refined captions instead of raw text
        #[arg(long)]
        refined: bool,
        /// Macro-average over records instead of pooling counts
        #[arg(long = "macro")]
        macro_avg: bool,
    },
    /// Run the whole pipeline over a dataset directory (--out directory)
    Run { dataset: PathBuf },
    /// Write a deterministic synthetic dataset (--out directory)
    MakeFixture {
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 128)]
        size: usize,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn require_out(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().context("--out is required for this subcommand")
}

fn emit(cli: &Cli, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match &cli.out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    if cli.workers == 0 {
        bail!("--workers must be at least 1");
    }

    match &cli.command {
        Command::Mask(pair) => {
            let (real, fake) = pair.load()?;
            let out = require_out(&cli)?;
            generate_mask(&real, &fake)?.save_png(out)?;
        }
        Command::Regions(pair) => {
            let (real, fake) = pair.load()?;
            let mask = generate_mask(&real, &fake)?;
            let map = partition_regions(&pair.landmarks()?, real.width(), real.height())?;
            let means = region_means(&mask, &map)?;
            let list = extract_forgery_regions(&mask, &map, cfg.theta)?;
            emit(&cli, &json!({"means": means, "regions": list}))?;
        }
        Command::Annotate(pair) => {
            let (real, fake) = pair.load()?;
            let analysis = analyze(&real, &fake, &pair.landmarks()?, &cfg)?;
            emit(&cli, &serde_json::to_value(&analysis)?)?;
        }
        Command::Refine { pair, k } => {
            let (real, fake) = pair.load()?;
            let analysis = analyze(&real, &fake, &pair.landmarks()?, &cfg)?;
            let k = k.unwrap_or(match analysis.label {
                Label::Fake => cfg.annotate.k_fake,
                Label::Real => cfg.annotate.k_real,
            });
            let client = RefineClient::new(cfg.service.clone())?;
            let bundle = build_prompt_bundle(
                build_visual_prompt(&real, &fake),
                &analysis.raw,
                &analysis.evidence,
                k,
                cfg.annotate.variant,
            )?;
            emit(&cli, &serde_json::to_value(client.refine(&bundle))?)?;
        }
        Command::Blend { pair, region } => {
            let (real, fake) = pair.load()?;
            let out = require_out(&cli)?;
            let map = partition_regions(&pair.landmarks()?, real.width(), real.height())?;
            let region = match region {
                Some(r) => *r,
                None => {
                    let list = extract_forgery_regions(&generate_mask(&real, &fake)?, &map, cfg.theta)?;
                    select_region(&list, cfg.seed).context("no region passes the threshold; pass --region")?
                }
            };
            let mixed = make_mixed_forgery(&real, &fake, map.get(region), &cfg.blend, cfg.seed)?;
            io::save_rgb(&mixed.image, out)?;
            println!(
                "{}",
                json!({"region": region, "kind": mixed.kind, "draw": mixed.draw, "converged": mixed.converged})
            );
        }
        Command::Eval { records, refined, macro_avg } => {
            let records = read_records(records)?;
            let averaging = if *macro_avg { Averaging::Macro } else { cfg.evaluation.averaging };
            let report = evaluate_records(&records, &cfg.lexicon()?, averaging, *refined)?;
            print!("{}", report.to_table());
            if let Some(path) = &cli.out {
                fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Run { dataset } => {
            let out = require_out(&cli)?;
            let ingested = ingest(dataset)?;
            for s in &ingested.skipped {
                eprintln!("skipped {}: missing {}", s.pair_id, s.missing.join(", "));
            }
            let client = if cfg.refine_enabled { Some(RefineClient::new(cfg.service.clone())?) } else { None };
            let summary = run_batch(&ingested.manifests, &cfg, cli.workers, out, client.as_ref())?;
            let text = summary.to_text();
            fs::write(out.join("summary.txt"), &text).with_context(|| format!("writing summary in {}", out.display()))?;
            print!("{text}");
            if summary.errors > 0 {
                eprintln!("{} pair(s) failed; see the error field in the records", summary.errors);
            }
        }
        Command::MakeFixture { pairs, size } => {
            let out = require_out(&cli)?;
            let written = write_fixture(out, *pairs, *size, cfg.seed)?;
            println!("wrote {} pairs to {}", written.len(), out.display());
        }
    }
    Ok(())
}
