//! Four-part refinement prompt and a chat-completion client that turns a raw
//! annotation into `k` validated captions, falling back to the raw text when
//! the service cannot deliver.

use std::fmt::Write as _;
use std::io::Cursor;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::annotate::{mandatory_phrase, Label, PhraseVariant, RawAnnotation, RegionEvidence};
use crate::detectors::{ForgeryType, TypeEvidence};
use crate::error::{Error, Result};
use crate::vision::RgbImage;

pub const SEPARATOR_WIDTH: usize = 8;
const SEPARATOR_GRAY: u8 = 128;

/// Environment variable holding the service credential.
pub const API_KEY_ENV: &str = "FFTG_API_KEY";

/// Nearest-neighbour resize to `new_w x new_h`.
fn resize_nearest(img: &RgbImage, new_w: usize, new_h: usize) -> RgbImage {
    let (w, h) = img.dimensions();
    RgbImage::from_fn(new_w, new_h, |x, y| img.pixel(x * w / new_w, y * h / new_h)).expect("non-zero target size")
}

/// `[fake | gray separator | real]`. The fake is resized (nearest neighbour,
/// aspect preserved) when the heights differ.
pub fn build_visual_prompt(real: &RgbImage, fake: &RgbImage) -> RgbImage {
    let h = real.height();
    let fake = if fake.height() == h {
        fake.clone()
    } else {
        let w = ((fake.width() * h) as f64 / fake.height() as f64).round().max(1.0) as usize;
        resize_nearest(fake, w, h)
    };
    let fw = fake.width();
    let total = fw + SEPARATOR_WIDTH + real.width();
    RgbImage::from_fn(total, h, |x, y| {
        if x < fw {
            fake.pixel(x, y)
        } else if x < fw + SEPARATOR_WIDTH {
            [SEPARATOR_GRAY; 3]
        } else {
            real.pixel(x - fw - SEPARATOR_WIDTH, y)
        }
    })
    .expect("composite has non-zero size")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTexts {
    pub guide: String,
    pub task: String,
    pub predefined: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    pub visual: RgbImage,
    pub texts: PromptTexts,
    pub label: Label,
    pub variant: PhraseVariant,
    pub k: usize,
    pub raw_text: String,
}

fn fmt_metric(ev: &TypeEvidence, name: &str) -> String {
    ev.metric(name).map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

fn derivation_line(region: &str, ev: &TypeEvidence) -> String {
    match ev.forgery_type {
        ForgeryType::ColorDifference => format!(
            "- Color inconsistency in the {region} was identified by comparing channel-wise means and standard \
             deviations in Lab color space (mean distance {}, standard deviation distance {}).",
            fmt_metric(ev, "m"),
            fmt_metric(ev, "s")
        ),
        ForgeryType::Blur => format!(
            "- Blur in the {region} was identified because the variance of the Laplacian response is {} in the \
             real image but only {} in the fake image.",
            fmt_metric(ev, "r_var"),
            fmt_metric(ev, "f_var")
        ),
        ForgeryType::StructureAbnormal => format!(
            "- Structural deformation in the {region} was determined through SSIM comparison between the real and \
             fake regions (SSIM = {}).",
            fmt_metric(ev, "ssim")
        ),
        ForgeryType::TextureAbnormal => format!(
            "- Texture abnormality in the {region} was identified using GLCM analysis: the co-occurrence contrast \
             is {} in the real image and {} in the fake image.",
            fmt_metric(ev, "c_d_real"),
            fmt_metric(ev, "c_d_fake")
        ),
        ForgeryType::BlendBoundary => format!(
            "- Blending artifacts around the {region} were identified from the boundary of the manipulated area: \
             gradient jump {}, edge density {}, high/low DCT frequency ratio {}.",
            fmt_metric(ev, "s_g"),
            fmt_metric(ev, "s_e"),
            fmt_metric(ev, "s_f")
        ),
    }
}

fn guide_text(raw: &RawAnnotation, evidence: &[RegionEvidence]) -> String {
    let mut g = String::new();
    g.push_str(
        "The attached image shows two faces side by side, separated by a gray bar: the LEFT face is the \
         manipulated (fake) image and the RIGHT face is the original (real) image.\n\n",
    );
    let _ = writeln!(g, "Raw annotation: {}\n", raw.full_text);
    g.push_str(
        "How the raw annotation was produced: a forgery mask was computed as the normalized absolute pixel \
         difference between the two images, its mean was measured over the mouth, nose, eyes and face areas \
         located with facial landmarks, and areas above a threshold were analyzed with handcrafted criteria.\n",
    );
    let mut lines = Vec::new();
    for s in &raw.statements {
        let ev = evidence
            .iter()
            .find(|e| e.region == s.region)
            .and_then(|e| e.evidence.iter().find(|t| t.forgery_type == s.forgery_type));
        if let Some(ev) = ev {
            lines.push(derivation_line(s.region.as_str(), ev));
        }
    }
    if raw.label == Label::Real || lines.is_empty() {
        g.push_str(
            "- The image pair showed no triggered forgery artifacts: no region exceeded the mask threshold or no \
             criterion fired.\n",
        );
    } else {
        for l in lines {
            g.push_str(&l);
            g.push('\n');
        }
    }
    g
}

fn task_text() -> String {
    "You are an expert in face forgery detection and digital image forensics. Analyze the image pair step by \
     step: (1) compare the fake face on the left with the real face on the right region by region (eyes, nose, \
     mouth, overall face); (2) verify each finding of the raw annotation against the visible differences; \
     (3) describe the manipulation artifacts you can confirm, such as color inconsistencies, blur, structural \
     distortion, unnatural texture and blending boundaries; (4) write fluent, diverse descriptions grounded \
     only in this evidence. Do not describe artifacts in regions the raw annotation does not mention."
        .to_string()
}

fn predefined_text(label: Label, variant: PhraseVariant, k: usize) -> String {
    let phrase = mandatory_phrase(label, variant);
    format!(
        "Output format: reply with a single JSON object and nothing else, following the schema \
         {{\"is_fake\": <boolean>, \"captions\": [<string>, ...]}}. Set \"is_fake\" to {}. Provide exactly {k} \
         caption(s). Every caption must begin with the exact phrase \"{phrase}\" and then describe the evidence. \
         Keep each caption to one or two sentences.",
        label == Label::Fake
    )
}

/// Assemble the visual, guide, task and pre-defined prompts.
pub fn build_prompt_bundle(
    visual: RgbImage,
    raw: &RawAnnotation,
    evidence: &[RegionEvidence],
    k: usize,
    variant: PhraseVariant,
) -> Result<PromptBundle> {
    if k == 0 {
        return Err(Error::Config("caption count k must be at least 1".into()));
    }
    Ok(PromptBundle {
        visual,
        texts: PromptTexts {
            guide: guide_text(raw, evidence),
            task: task_text(),
            predefined: predefined_text(raw.label, variant, k),
        },
        label: raw.label,
        variant,
        k,
        raw_text: raw.full_text.clone(),
    })
}

impl PromptBundle {
    pub fn visual_png(&self) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        image::write_buffer_with_format(
            &mut buf,
            self.visual.data(),
            self.visual.width() as u32,
            self.visual.height() as u32,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )
        .expect("in-memory PNG encoding");
        buf.into_inner()
    }

    /// SHA-256 over the model name, prompt texts and composite pixels.
    pub fn request_digest(&self, model: &str) -> String {
        let mut h = Sha256::new();
        for part in [model, &self.texts.task, &self.texts.guide, &self.texts.predefined] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        h.update((self.visual.width() as u64).to_le_bytes());
        h.update((self.visual.height() as u64).to_le_bytes());
        h.update(self.visual.data());
        hex::encode(h.finalize())
    }

    /// Initial chat messages: one user turn with the three texts and the
    /// composite as a base64 data URL.
    pub fn messages(&self) -> Vec<Value> {
        let b64 = base64::engine::general_purpose::STANDARD.encode(self.visual_png());
        vec![json!({
            "role": "user",
            "content": [
                {"type": "text", "text": self.texts.task},
                {"type": "text", "text": self.texts.guide},
                {"type": "text", "text": self.texts.predefined},
                {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}}
            ]
        })]
    }
}

/// Why a response body was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaIssue {
    NoJsonObject,
    MissingIsFake,
    MissingCaptions,
    LabelMismatch,
    CaptionCount,
    MissingMandatoryPhrase,
}

impl SchemaIssue {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaIssue::NoJsonObject => "no_json_object",
            SchemaIssue::MissingIsFake => "missing_is_fake",
            SchemaIssue::MissingCaptions => "missing_captions",
            SchemaIssue::LabelMismatch => "label_mismatch",
            SchemaIssue::CaptionCount => "caption_count",
            SchemaIssue::MissingMandatoryPhrase => "missing_mandatory_phrase",
        }
    }
}

#[derive(thiserror::Error, Debug, Clone, Copy, PartialEq, Eq)]
#[error("schema error: {}", .0.as_str())]
pub struct SchemaError(pub SchemaIssue);

/// First parseable JSON object in `body`; prose and code fences around it are ignored.
fn first_json_object(body: &str) -> Option<serde_json::Map<String, Value>> {
    body.match_indices('{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&body[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => Some(map),
            _ => None,
        }
    })
}

/// Extract captions and check label, count and mandatory phrase.
pub fn parse_and_validate_response(
    body: &str,
    label: Label,
    k: usize,
    variant: PhraseVariant,
) -> std::result::Result<Vec<String>, SchemaError> {
    let obj = first_json_object(body).ok_or(SchemaError(SchemaIssue::NoJsonObject))?;
    let is_fake = obj
        .get("is_fake")
        .and_then(Value::as_bool)
        .ok_or(SchemaError(SchemaIssue::MissingIsFake))?;
    let captions: Vec<String> = obj
        .get("captions")
        .and_then(Value::as_array)
        .ok_or(SchemaError(SchemaIssue::MissingCaptions))?
        .iter()
        .map(|c| c.as_str().map(str::to_string))
        .collect::<Option<_>>()
        .ok_or(SchemaError(SchemaIssue::MissingCaptions))?;
    if is_fake != (label == Label::Fake) {
        return Err(SchemaError(SchemaIssue::LabelMismatch));
    }
    if captions.len() != k {
        return Err(SchemaError(SchemaIssue::CaptionCount));
    }
    let phrase = mandatory_phrase(label, variant).to_lowercase();
    if captions.iter().any(|c| !c.to_lowercase().contains(&phrase)) {
        return Err(SchemaError(SchemaIssue::MissingMandatoryPhrase));
    }
    Ok(captions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable carrying the bearer token.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_concurrent: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-4o-mini".to_string(),
            api_key_env: API_KEY_ENV.to_string(),
            timeout_secs: 60.0,
            retries: 3,
            backoff_ms: 500,
            max_concurrent: 4,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_concurrent == 0 {
            return Err(Error::Config("service.max_concurrent must be at least 1".into()));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(Error::Config("service.timeout_secs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionSource {
    Remote,
    FallbackRaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedAnnotation {
    pub captions: Vec<String>,
    pub source: CaptionSource,
    pub model_id: String,
    pub request_digest: String,
    /// HTTP requests issued, retries included.
    pub attempts: u32,
    pub repaired: bool,
    /// Reason for falling back, when it happened.
    pub failure: Option<String>,
    pub prompts: PromptTexts,
}

/// Counting semaphore bounding in-flight requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

struct PermitGuard<'a>(&'a Permits);

impl Permits {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().expect("permit lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("permit lock");
        }
        *free -= 1;
        PermitGuard(self)
    }
}

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("permit lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
enum RequestError {
    Auth(u16),
    Timeout,
    Transport(String),
    Status(u16),
    Body(String),
}

impl RequestError {
    fn retryable(&self) -> bool {
        match self {
            RequestError::Timeout | RequestError::Transport(_) => true,
            RequestError::Status(s) => *s == 429 || *s >= 500,
            RequestError::Auth(_) | RequestError::Body(_) => false,
        }
    }

    fn reason(&self) -> String {
        match self {
            RequestError::Auth(s) => format!("auth_error: HTTP {s}"),
            RequestError::Timeout => "timeout".to_string(),
            RequestError::Transport(e) => format!("transport: {e}"),
            RequestError::Status(s) => format!("http_status: {s}"),
            RequestError::Body(e) => format!("bad_response: {e}"),
        }
    }
}

/// Shareable chat-completion client. Every call returns a
/// [`RefinedAnnotation`]; failures turn into the raw-text fallback.
pub struct RefineClient {
    cfg: ServiceConfig,
    http: reqwest::blocking::Client,
    api_key: Option<String>,
    permits: Permits,
}

impl RefineClient {
    pub fn new(cfg: ServiceConfig) -> Result<Self> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_api_key(cfg, api_key)
    }

    pub fn with_api_key(cfg: ServiceConfig, api_key: Option<String>) -> Result<Self> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self {
            permits: Permits::new(cfg.max_concurrent),
            cfg,
            http,
            api_key,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    fn post_once(&self, messages: &[Value]) -> std::result::Result<String, RequestError> {
        let body = json!({"model": self.cfg.model, "messages": messages});
        let mut req = self.http.post(&self.cfg.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let _permit = self.permits.acquire();
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                RequestError::Timeout
            } else {
                RequestError::Transport(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(RequestError::Auth(status));
        }
        if !resp.status().is_success() {
            return Err(RequestError::Status(status));
        }
        let v: Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                RequestError::Timeout
            } else {
                RequestError::Body(e.to_string())
            }
        })?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| RequestError::Body("missing choices[0].message.content".into()))
    }

    /// Posts with exponential backoff on retryable failures.
    fn post(&self, messages: &[Value], attempts: &mut u32) -> std::result::Result<String, RequestError> {
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let mut tries_left = self.cfg.retries;
        loop {
            *attempts += 1;
            match self.post_once(messages) {
                Ok(content) => return Ok(content),
                Err(e) if e.retryable() && tries_left > 0 => {
                    log::debug!("refine request failed ({}), retrying in {delay:?}", e.reason());
                    tries_left -= 1;
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub fn refine(&self, bundle: &PromptBundle) -> RefinedAnnotation {
        let digest = bundle.request_digest(&self.cfg.model);
        let mut attempts = 0;
        let mut repaired = false;
        let mut messages = bundle.messages();

        let failure = loop {
            let content = match self.post(&messages, &mut attempts) {
                Ok(c) => c,
                Err(e) => break e.reason(),
            };
            match parse_and_validate_response(&content, bundle.label, bundle.k, bundle.variant) {
                Ok(captions) => {
                    return RefinedAnnotation {
                        captions,
                        source: CaptionSource::Remote,
                        model_id: self.cfg.model.clone(),
                        request_digest: digest,
                        attempts,
                        repaired,
                        failure: None,
                        prompts: bundle.texts.clone(),
                    };
                }
                Err(SchemaError(issue)) if !repaired => {
                    repaired = true;
                    messages.push(json!({"role": "assistant", "content": content}));
                    messages.push(json!({
                        "role": "user",
                        "content": format!(
                            "Your reply was rejected ({}). Answer again with only the JSON object described \
                             above, with exactly {} caption(s), each containing \"{}\".",
                            issue.as_str(),
                            bundle.k,
                            mandatory_phrase(bundle.label, bundle.variant)
                        )
                    }));
                }
                Err(SchemaError(issue)) => break format!("schema_error: {}", issue.as_str()),
            }
        };
        log::warn!("refinement fell back to the raw annotation: {failure}");
        fallback(bundle, &self.cfg.model, digest, attempts, repaired, failure)
    }
}

fn fallback(
    bundle: &PromptBundle,
    model: &str,
    digest: String,
    attempts: u32,
    repaired: bool,
    failure: String,
) -> RefinedAnnotation {
    RefinedAnnotation {
        captions: vec![bundle.raw_text.clone()],
        source: CaptionSource::FallbackRaw,
        model_id: model.to_string(),
        request_digest: digest,
        attempts,
        repaired,
        failure: Some(failure),
        prompts: bundle.texts.clone(),
    }
}

/// Convenience wrapper matching the one-shot call shape.
pub fn refine_annotation(bundle: &PromptBundle, client: &RefineClient) -> RefinedAnnotation {
    client.refine(bundle)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::annotate::{build_raw_annotation, Statement};
    use crate::region::{ForgeryRegionList, RegionName};

    fn texture_raw() -> (RawAnnotation, Vec<RegionEvidence>) {
        let ev = TypeEvidence {
            forgery_type: ForgeryType::TextureAbnormal,
            triggered: true,
            metrics: BTreeMap::from([("c_d_real".to_string(), 0.9), ("c_d_fake".to_string(), 0.1)]),
            cues: vec![],
            note: None,
        };
        let raw = RawAnnotation {
            label: Label::Fake,
            statements: vec![Statement {
                region: RegionName::Mouth,
                forgery_type: ForgeryType::TextureAbnormal,
                phrase: "the mouth lacks natural texture".into(),
            }],
            full_text: "This is a fake face, the mouth lacks natural texture.".into(),
            low_evidence: false,
        };
        (raw, vec![RegionEvidence { region: RegionName::Mouth, evidence: vec![ev] }])
    }

    #[test]
    fn composite_layout() {
        let real = RgbImage::filled(5, 4, [10, 20, 30]).unwrap();
        let fake = RgbImage::filled(5, 4, [200, 100, 0]).unwrap();
        let c = build_visual_prompt(&real, &fake);
        assert_eq!(c.dimensions(), (2 * 5 + 8, 4));
        assert_eq!(c.pixel(0, 0), [200, 100, 0]);
        assert_eq!(c.pixel(4, 3), [200, 100, 0]);
        assert_eq!(c.pixel(5, 0), [128; 3]);
        assert_eq!(c.pixel(13, 2), [10, 20, 30]);
    }

    #[test]
    fn fake_resized_to_real_height() {
        let real = RgbImage::filled(3, 4, [1, 1, 1]).unwrap();
        let fake = RgbImage::from_fn(2, 2, |x, y| [(10 * x + 100 * y) as u8, 0, 0]).unwrap();
        let c = build_visual_prompt(&real, &fake);
        // 2x2 -> 4x4 nearest neighbour: each source pixel becomes a 2x2 block.
        assert_eq!(c.dimensions(), (4 + 8 + 3, 4));
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(c.pixel(x, y)[0], (10 * (x / 2) + 100 * (y / 2)) as u8);
            }
        }
    }

    #[test]
    fn bundle_contents() {
        let (raw, evidence) = texture_raw();
        let visual = RgbImage::filled(2, 2, [0; 3]).unwrap();
        let b = build_prompt_bundle(visual.clone(), &raw, &evidence, 3, PhraseVariant::Face).unwrap();
        assert!(b.texts.guide.contains(&raw.full_text));
        assert!(b.texts.guide.contains("GLCM"));
        assert!(b.texts.predefined.contains("exactly 3 caption"));
        assert!(b.texts.predefined.contains("\"This is a fake face\""));
        assert_eq!(b.request_digest("m"), b.clone().request_digest("m"));
        assert_ne!(b.request_digest("m"), b.request_digest("n"));

        let real_raw = build_raw_annotation(&ForgeryRegionList::default(), &[], Label::Real, PhraseVariant::Face);
        let rb = build_prompt_bundle(visual.clone(), &real_raw, &[], 1, PhraseVariant::Face).unwrap();
        assert!(rb.texts.guide.contains("no triggered forgery artifacts"));
        assert!(rb.texts.predefined.contains("\"This is a real face\""));
        assert!(build_prompt_bundle(visual, &real_raw, &[], 0, PhraseVariant::Face).is_err());
    }

    #[test]
    fn validation_rules() {
        let ok = r#"{"is_fake": true, "captions": ["This is a fake face, a.", "This is a fake face, b."]}"#;
        assert_eq!(parse_and_validate_response(ok, Label::Fake, 2, PhraseVariant::Face).unwrap().len(), 2);

        let fenced = format!("Sure! Here it is:\n```json\n{ok}\n```\nHope that {{helps}}.");
        assert_eq!(
            parse_and_validate_response(&fenced, Label::Fake, 2, PhraseVariant::Face).unwrap(),
            vec!["This is a fake face, a.".to_string(), "This is a fake face, b.".to_string()]
        );

        let err = |body: &str, label, k| parse_and_validate_response(body, label, k, PhraseVariant::Face).unwrap_err().0;
        assert_eq!(err(ok, Label::Real, 2), SchemaIssue::LabelMismatch);
        assert_eq!(err(ok, Label::Fake, 3), SchemaIssue::CaptionCount);
        assert_eq!(err("no json here", Label::Fake, 1), SchemaIssue::NoJsonObject);
        assert_eq!(err(r#"{"captions": []}"#, Label::Fake, 0), SchemaIssue::MissingIsFake);
        assert_eq!(err(r#"{"is_fake": true, "captions": ["looks odd"]}"#, Label::Fake, 1), SchemaIssue::MissingMandatoryPhrase);
        assert_eq!(SchemaError(SchemaIssue::LabelMismatch).to_string(), "schema error: label_mismatch");
    }

    #[test]
    fn unreachable_endpoint_falls_back() {
        let (raw, evidence) = texture_raw();
        let b = build_prompt_bundle(RgbImage::filled(2, 2, [0; 3]).unwrap(), &raw, &evidence, 3, PhraseVariant::Face).unwrap();
        let cfg = ServiceConfig {
            endpoint: "http://127.0.0.1:1/v1/chat/completions".into(),
            retries: 0,
            timeout_secs: 2.0,
            ..Default::default()
        };
        let client = RefineClient::with_api_key(cfg, None).unwrap();
        let r = refine_annotation(&b, &client);
        assert_eq!(r.source, CaptionSource::FallbackRaw);
        assert_eq!(r.captions, vec![raw.full_text]);
        assert_eq!(r.attempts, 1);
    }
}
