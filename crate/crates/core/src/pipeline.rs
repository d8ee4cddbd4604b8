//! Dataset ingestion, per-pair orchestration, JSONL persistence and batch
//! execution.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{build_raw_annotation, Label, PhraseVariant, RawAnnotation, RegionEvidence};
use crate::blend::{make_mixed_forgery, BlendConfig, BlendKind};
use crate::detectors::{decide_types, DetectorThresholds, ForgeryType};
use crate::error::{Error, Result};
use crate::evaluate::{score_annotations, Averaging, EvalReport, RegionLexicon};
use crate::refine::{build_prompt_bundle, build_visual_prompt, CaptionSource, RefineClient, RefinedAnnotation, ServiceConfig};
use crate::region::{
    extract_forgery_regions, filter_means, generate_mask, partition_regions, region_means, select_region,
    ForgeryRegionList, Landmarks, RegionMean, RegionName, DEFAULT_THETA,
};
use crate::vision::{io, RgbImage};

pub const TOOL_VERSION: &str = concat!("fftg ", env!("CARGO_PKG_VERSION"));
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairManifest {
    /// `<method>/<stem>`; unique within a dataset.
    pub pair_id: String,
    pub real_path: PathBuf,
    pub fake_path: PathBuf,
    pub landmark_path: PathBuf,
    pub method: String,
    pub frame_index: u32,
}

/// A pair that could not be assembled during ingestion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub pair_id: String,
    pub missing: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingested {
    pub manifests: Vec<PairManifest>,
    pub skipped: Vec<SkippedPair>,
}

/// Frame number from a trailing `_NNN` in the file stem, else 0.
pub fn frame_index(stem: &str) -> u32 {
    stem.rsplit_once('_').and_then(|(_, n)| n.parse().ok()).unwrap_or(0)
}

/// Sorted `*.png` stems in `dir`; a missing directory yields nothing.
fn png_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(Error::io(dir, e)),
    };
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string());
            }
        }
    }
    Ok(out)
}

/// Walk `root/real`, `root/fake/<method>` and `root/landmarks`. Fakes drive
/// the manifest; a fake missing its real image or landmarks is skipped and
/// reported. Output is sorted by pair id.
pub fn ingest(root: impl AsRef<Path>) -> Result<Ingested> {
    let root = root.as_ref();
    let fake_root = root.join("fake");
    let mut methods = Vec::new();
    if let Ok(entries) = fs::read_dir(&fake_root) {
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&fake_root, e))?.path();
            if path.is_dir() {
                if let Some(name) = path.file_name().and_then(|s| s.to_str()) {
                    methods.push(name.to_string());
                }
            }
        }
    }
    methods.sort();

    let mut out = Ingested::default();
    for method in methods {
        for stem in png_stems(&fake_root.join(&method))? {
            let pair_id = format!("{method}/{stem}");
            let real_path = root.join("real").join(format!("{stem}.png"));
            let landmark_path = root.join("landmarks").join(format!("{stem}.json"));
            let missing: Vec<String> = [("real", &real_path), ("landmarks", &landmark_path)]
                .into_iter()
                .filter(|(_, p)| !p.is_file())
                .map(|(what, _)| what.to_string())
                .collect();
            if !missing.is_empty() {
                log::warn!("skipping {pair_id}: missing {}", missing.join(", "));
                out.skipped.push(SkippedPair { pair_id, missing });
                continue;
            }
            out.manifests.push(PairManifest {
                fake_path: fake_root.join(&method).join(format!("{stem}.png")),
                frame_index: frame_index(&stem),
                pair_id,
                real_path,
                landmark_path,
                method: method.clone(),
            });
        }
    }
    if out.manifests.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    out.manifests.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    out.skipped.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    Ok(out)
}

/// Closest annotated frame to `target`; ties go to the earlier frame.
pub fn nearest_annotated_frame(annotated: &[u32], target: u32) -> Option<u32> {
    annotated.iter().copied().min_by_key(|&f| (f.abs_diff(target), f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateOptions {
    pub k_fake: usize,
    pub k_real: usize,
    pub variant: PhraseVariant,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        Self {
            k_fake: 3,
            k_real: 1,
            variant: PhraseVariant::Face,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationOptions {
    pub averaging: Averaging,
    /// JSON lexicon; the built-in one is used when absent.
    pub lexicon: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub theta: f64,
    pub blend_enabled: bool,
    pub refine_enabled: bool,
    pub detectors: DetectorThresholds,
    pub blend: BlendConfig,
    pub annotate: AnnotateOptions,
    pub service: ServiceConfig,
    pub evaluation: EvaluationOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            theta: DEFAULT_THETA,
            blend_enabled: false,
            refine_enabled: false,
            detectors: DetectorThresholds::default(),
            blend: BlendConfig::default(),
            annotate: AnnotateOptions::default(),
            service: ServiceConfig::default(),
            evaluation: EvaluationOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidThreshold { name: "theta", value: self.theta });
        }
        if self.annotate.k_fake == 0 || self.annotate.k_real == 0 {
            return Err(Error::Config("annotate.k_fake and annotate.k_real must be at least 1".into()));
        }
        self.detectors.validate()?;
        self.blend.validate()?;
        self.service.validate()
    }

    /// SHA-256 of the canonical JSON serialization (fields in declaration order).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes to JSON");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn lexicon(&self) -> Result<RegionLexicon> {
        match &self.evaluation.lexicon {
            Some(p) => RegionLexicon::load(p),
            None => Ok(RegionLexicon::default()),
        }
    }
}

/// Per-pair seed: first 8 bytes of SHA-256(pair id), XOR the global seed.
pub fn pair_seed(pair_id: &str, global: u64) -> u64 {
    let h = Sha256::digest(pair_id.as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes")) ^ global
}

/// Detector and annotation output for one real/fake comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub label: Label,
    pub region_means: Vec<RegionMean>,
    pub regions: ForgeryRegionList,
    pub evidence: Vec<RegionEvidence>,
    pub raw: RawAnnotation,
}

/// Mask, regions, detectors and raw text for an in-memory pair. The label is
/// fake iff at least one region passes `theta`.
pub fn analyze(real: &RgbImage, fake: &RgbImage, landmarks: &Landmarks, cfg: &PipelineConfig) -> Result<Analysis> {
    let mask = generate_mask(real, fake)?;
    let map = partition_regions(landmarks, real.width(), real.height())?;
    let means = region_means(&mask, &map)?;
    let regions = extract_forgery_regions(&mask, &map, cfg.theta)?;
    let evidence: Vec<RegionEvidence> = regions
        .regions()
        .map(|r| RegionEvidence {
            region: r,
            evidence: decide_types(real, fake, map.get(r), &mask, &cfg.detectors),
        })
        .collect();
    let label = if regions.is_empty() { Label::Real } else { Label::Fake };
    let raw = build_raw_annotation(&regions, &evidence, label, cfg.annotate.variant);
    Ok(Analysis {
        label,
        region_means: means,
        regions,
        evidence,
        raw,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendRecord {
    pub kind: BlendKind,
    pub region: RegionName,
    pub draw: f64,
    /// Relative to the output directory.
    pub path: Option<String>,
    pub converged: Option<bool>,
    /// Annotation of the blended image against the real one, restricted to
    /// the blended region.
    pub analysis: Analysis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub method: String,
    pub frame_index: u32,
    pub real_path: PathBuf,
    pub fake_path: PathBuf,
    pub landmark_path: PathBuf,
    pub seed: u64,
    /// Relative to the output directory.
    pub mask_path: Option<String>,
    pub analysis: Option<Analysis>,
    pub refined: Option<RefinedAnnotation>,
    pub blend: Option<BlendRecord>,
    pub config_digest: String,
    pub tool_version: String,
    /// First stage failure; later stages are then absent.
    pub error: Option<String>,
}

impl AnnotationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }

    /// Annotation text with the regions it should mention.
    pub fn scoring_pair(&self) -> Option<(String, BTreeSet<RegionName>)> {
        let a = self.analysis.as_ref()?;
        Some((a.raw.full_text.clone(), a.regions.regions().collect()))
    }
}

/// Things shared by every pair of one run.
#[derive(Clone, Copy, Default)]
pub struct RunContext<'a> {
    /// Where masks and blends are written; nothing is written when `None`.
    pub out_dir: Option<&'a Path>,
    pub client: Option<&'a RefineClient>,
}

fn blend_stage(
    real: &RgbImage,
    fake: &RgbImage,
    landmarks: &Landmarks,
    analysis: &Analysis,
    cfg: &PipelineConfig,
    pair_id: &str,
    ctx: RunContext<'_>,
) -> Result<Option<BlendRecord>> {
    if analysis.regions.is_empty() {
        return Ok(None);
    }
    let seed = pair_seed(pair_id, cfg.seed);
    let region = select_region(&analysis.regions, seed)?;
    let map = partition_regions(landmarks, real.width(), real.height())?;
    let mixed = make_mixed_forgery(real, fake, map.get(region), &cfg.blend, seed)?;

    let mask = generate_mask(real, &mixed.image)?;
    let means: Vec<RegionMean> = region_means(&mask, &map)?.into_iter().filter(|m| m.region == region).collect();
    let regions = filter_means(&means, cfg.theta);
    let mut evidence: Vec<RegionEvidence> = regions
        .regions()
        .map(|r| RegionEvidence {
            region: r,
            evidence: decide_types(real, &mixed.image, map.get(r), &mask, &cfg.detectors),
        })
        .collect();
    // Alpha blending leaves a boundary by construction.
    for re in &mut evidence {
        for ev in &mut re.evidence {
            if mixed.implied_types.contains(&ev.forgery_type) && !ev.triggered {
                ev.triggered = true;
                ev.note = Some("implied by alpha blending".into());
            }
        }
    }
    let label = if regions.is_empty() { Label::Real } else { Label::Fake };
    let raw = build_raw_annotation(&regions, &evidence, label, cfg.annotate.variant);

    let path = match ctx.out_dir {
        Some(dir) => {
            let rel = format!("blend/{pair_id}.png");
            io::save_rgb(&mixed.image, dir.join(&rel))?;
            Some(rel)
        }
        None => None,
    };
    Ok(Some(BlendRecord {
        kind: mixed.kind,
        region,
        draw: mixed.draw,
        path,
        converged: mixed.converged,
        analysis: Analysis {
            label,
            region_means: means,
            regions,
            evidence,
            raw,
        },
    }))
}

/// Runs every stage for one pair. Stage failures land in `error`; this never
/// fails.
pub fn run_pair(m: &PairManifest, cfg: &PipelineConfig, ctx: RunContext<'_>) -> AnnotationRecord {
    let seed = pair_seed(&m.pair_id, cfg.seed);
    let mut record = AnnotationRecord {
        pair_id: m.pair_id.clone(),
        method: m.method.clone(),
        frame_index: m.frame_index,
        real_path: m.real_path.clone(),
        fake_path: m.fake_path.clone(),
        landmark_path: m.landmark_path.clone(),
        seed,
        mask_path: None,
        analysis: None,
        refined: None,
        blend: None,
        config_digest: cfg.digest(),
        tool_version: TOOL_VERSION.to_string(),
        error: None,
    };
    if let Err(e) = run_stages(m, cfg, ctx, &mut record) {
        log::warn!("{}: {e}", m.pair_id);
        record.error = Some(e.to_string());
    }
    record
}

fn run_stages(
    m: &PairManifest,
    cfg: &PipelineConfig,
    ctx: RunContext<'_>,
    record: &mut AnnotationRecord,
) -> Result<()> {
    let real = io::load_rgb(&m.real_path)?;
    let fake = io::load_rgb(&m.fake_path)?;
    let landmarks = Landmarks::load(&m.landmark_path)?;
    let analysis = analyze(&real, &fake, &landmarks, cfg)?;

    if let Some(dir) = ctx.out_dir {
        let rel = format!("masks/{}.png", m.pair_id);
        generate_mask(&real, &fake)?.save_png(dir.join(&rel))?;
        record.mask_path = Some(rel);
    }
    if cfg.refine_enabled {
        if let Some(client) = ctx.client {
            let k = match analysis.label {
                Label::Fake => cfg.annotate.k_fake,
                Label::Real => cfg.annotate.k_real,
            };
            let visual = build_visual_prompt(&real, &fake);
            let bundle = build_prompt_bundle(visual, &analysis.raw, &analysis.evidence, k, cfg.annotate.variant)?;
            record.refined = Some(client.refine(&bundle));
        }
    }
    record.analysis = Some(analysis);
    if cfg.blend_enabled {
        let analysis = record.analysis.as_ref().expect("set above");
        record.blend = blend_stage(&real, &fake, &landmarks, analysis, cfg, &m.pair_id, ctx)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub pairs: usize,
    pub errors: usize,
    pub fake: usize,
    pub real: usize,
    pub low_evidence: usize,
    pub regions: BTreeMap<RegionName, usize>,
    pub types: BTreeMap<ForgeryType, usize>,
    pub refined_remote: usize,
    pub refined_fallback: usize,
    pub blends: BTreeMap<BlendKind, usize>,
}

impl BatchSummary {
    pub fn add(&mut self, r: &AnnotationRecord) {
        self.pairs += 1;
        if r.error.is_some() {
            self.errors += 1;
        }
        if let Some(a) = &r.analysis {
            match a.label {
                Label::Fake => self.fake += 1,
                Label::Real => self.real += 1,
            }
            if a.raw.low_evidence {
                self.low_evidence += 1;
            }
            for region in a.regions.regions() {
                *self.regions.entry(region).or_default() += 1;
            }
            for s in &a.raw.statements {
                *self.types.entry(s.forgery_type).or_default() += 1;
            }
        }
        if let Some(refined) = &r.refined {
            match refined.source {
                CaptionSource::Remote => self.refined_remote += 1,
                CaptionSource::FallbackRaw => self.refined_fallback += 1,
            }
        }
        if let Some(b) = &r.blend {
            *self.blends.entry(b.kind).or_default() += 1;
        }
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>) -> Self {
        let mut s = Self::default();
        for r in records {
            s.add(r);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "pairs: {}\nerrors: {}\nfake: {}\nreal: {}\nlow evidence: {}\n",
            self.pairs, self.errors, self.fake, self.real, self.low_evidence
        );
        for (r, n) in &self.regions {
            out.push_str(&format!("region {r}: {n}\n"));
        }
        for (t, n) in &self.types {
            out.push_str(&format!("type {t}: {n}\n"));
        }
        for (k, n) in &self.blends {
            out.push_str(&format!("blend {}: {n}\n", serde_json::to_string(k).expect("enum").trim_matches('"')));
        }
        out.push_str(&format!(
            "refined remote: {}\nrefined fallback: {}\n",
            self.refined_remote, self.refined_fallback
        ));
        out
    }
}

/// Runs all manifests on a pool of `workers` threads and writes
/// `out/records.jsonl` in manifest order.
pub fn run_batch(
    manifests: &[PairManifest],
    cfg: &PipelineConfig,
    workers: usize,
    out: &Path,
    client: Option<&RefineClient>,
) -> Result<BatchSummary> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ctx = RunContext {
        out_dir: Some(out),
        client,
    };
    let records: Vec<AnnotationRecord> = pool.install(|| {
        use rayon::prelude::*;
        manifests.par_iter().map(|m| run_pair(m, cfg, ctx)).collect()
    });

    let path = out.join(RECORDS_FILE);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for r in &records {
        writeln!(w, "{}", r.to_json_line()).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(BatchSummary::from_records(&records))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(AnnotationRecord::from_json_line).collect()
}

/// Scores records that completed analysis; `refined` uses every refined
/// caption as its own entry instead of the raw text.
pub fn evaluate_records(
    records: &[AnnotationRecord],
    lexicon: &RegionLexicon,
    averaging: Averaging,
    refined: bool,
) -> Result<EvalReport> {
    let mut pairs = Vec::new();
    for r in records {
        let Some((raw_text, truth)) = r.scoring_pair() else { continue };
        match (&r.refined, refined) {
            (Some(refined), true) => {
                pairs.extend(refined.captions.iter().map(|c| (c.clone(), truth.clone())));
            }
            _ => pairs.push((raw_text, truth)),
        }
    }
    score_annotations(&pairs, lexicon, averaging)
}
