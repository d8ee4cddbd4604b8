//! Scores annotation text against mask-derived region truth, and response
//! classification accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::Label;
use crate::error::{Error, Result};
use crate::region::RegionName;

/// Match terms per region. Terms are lowercase and pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionLexicon {
    terms: BTreeMap<RegionName, BTreeSet<String>>,
}

impl Default for RegionLexicon {
    fn default() -> Self {
        let table: [(RegionName, &[&str]); 4] = [
            (RegionName::Mouth, &["mouth", "lip", "lips", "lipcolor", "teeth"]),
            (RegionName::Nose, &["nose", "nostril", "nostrils"]),
            (RegionName::Eyes, &["eye", "eyes", "eyebrow", "eyebrows", "eyelid", "eyelids"]),
            (
                RegionName::Face,
                &["face", "facial", "cheek", "cheeks", "skin", "jaw", "forehead", "chin"],
            ),
        ];
        Self {
            terms: table
                .into_iter()
                .map(|(r, ts)| (r, ts.iter().map(|t| t.to_string()).collect()))
                .collect(),
        }
    }
}

impl RegionLexicon {
    pub fn new(terms: BTreeMap<RegionName, BTreeSet<String>>) -> Result<Self> {
        let terms: BTreeMap<RegionName, BTreeSet<String>> = terms
            .into_iter()
            .map(|(r, ts)| (r, ts.into_iter().map(|t| t.to_lowercase()).collect()))
            .collect();
        let mut seen: BTreeMap<&str, RegionName> = BTreeMap::new();
        for (&region, ts) in &terms {
            for t in ts {
                if let Some(prev) = seen.insert(t.as_str(), region) {
                    return Err(Error::LexiconOverlap {
                        term: t.clone(),
                        first: prev.to_string(),
                        second: region.to_string(),
                    });
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<RegionName, BTreeSet<String>> = serde_json::from_str(text)?;
        Self::new(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn terms(&self, region: RegionName) -> impl Iterator<Item = &str> {
        self.terms.get(&region).into_iter().flatten().map(String::as_str)
    }
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty())
}

/// Removes the label phrase ("this is a real/fake face/person") so its noun
/// does not count as a region mention.
fn strip_mandatory_phrases(text: &str) -> String {
    let mut lower = text.to_lowercase();
    for label in ["real", "fake"] {
        for noun in ["face", "person"] {
            lower = lower.replace(&format!("this is a {label} {noun}"), " ");
        }
    }
    lower
}

/// Case-insensitive whole-word lexicon matching.
pub fn extract_region_mentions(text: &str, lexicon: &RegionLexicon) -> BTreeSet<RegionName> {
    let cleaned = strip_mandatory_phrases(text);
    let present: BTreeSet<&str> = words(&cleaned).collect();
    RegionName::ALL
        .into_iter()
        .filter(|&r| lexicon.terms(r).any(|t| present.contains(t)))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }

    pub fn scores(&self) -> Scores {
        Scores::from_counts(self.tp, self.fp, self.fn_)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    /// Zero denominators give zero.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Micro,
    Macro,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub mentioned: BTreeSet<RegionName>,
    pub truth: BTreeSet<RegionName>,
    pub counts: Counts,
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub averaging: Averaging,
    pub aggregate: Scores,
    pub totals: Counts,
    pub per_region: BTreeMap<RegionName, Counts>,
    pub records: Vec<RecordScore>,
}

impl EvalReport {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}", "region", "TP", "FP", "FN", "precision", "recall", "F1");
        for (region, c) in &self.per_region {
            let s = c.scores();
            let _ = writeln!(
                out,
                "{:<8} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}",
                region.as_str(),
                c.tp,
                c.fp,
                c.fn_,
                s.precision,
                s.recall,
                s.f1
            );
        }
        let a = &self.aggregate;
        let label = match self.averaging {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
        };
        let _ = writeln!(
            out,
            "{:<8} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}",
            label, self.totals.tp, self.totals.fp, self.totals.fn_, a.precision, a.recall, a.f1
        );
        out
    }
}

/// Precision/recall/F1 over region instances. Micro pools all counts; macro
/// averages the per-record scores.
pub fn score_annotations(
    records: &[(String, BTreeSet<RegionName>)],
    lexicon: &RegionLexicon,
    averaging: Averaging,
) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut totals = Counts::default();
    let mut per_region: BTreeMap<RegionName, Counts> = RegionName::ALL.iter().map(|&r| (r, Counts::default())).collect();
    let mut scored = Vec::with_capacity(records.len());
    for (text, truth) in records {
        let mentioned = extract_region_mentions(text, lexicon);
        let mut counts = Counts::default();
        for r in RegionName::ALL {
            let c = Counts {
                tp: usize::from(mentioned.contains(&r) && truth.contains(&r)),
                fp: usize::from(mentioned.contains(&r) && !truth.contains(&r)),
                fn_: usize::from(!mentioned.contains(&r) && truth.contains(&r)),
            };
            counts.add(c);
            per_region.get_mut(&r).expect("all regions present").add(c);
        }
        totals.add(counts);
        scored.push(RecordScore {
            mentioned,
            truth: truth.clone(),
            counts,
            scores: counts.scores(),
        });
    }
    let aggregate = match averaging {
        Averaging::Micro => totals.scores(),
        Averaging::Macro => {
            let n = scored.len() as f64;
            let precision = scored.iter().map(|r| r.scores.precision).sum::<f64>() / n;
            let recall = scored.iter().map(|r| r.scores.recall).sum::<f64>() / n;
            Scores {
                precision,
                recall,
                f1: f1(precision, recall),
            }
        }
    };
    Ok(EvalReport {
        averaging,
        aggregate,
        totals,
        per_region,
        records: scored,
    })
}

/// Label decided by the first whole-word "real" or "fake", if any.
pub fn response_label(response: &str) -> Option<Label> {
    let lower = response.to_lowercase();
    let decisive = words(&lower).find_map(|w| match w {
        "real" => Some(Label::Real),
        "fake" => Some(Label::Fake),
        _ => None,
    });
    decisive
}

/// Fraction of responses whose first decisive word equals the label.
pub fn response_accuracy(responses: &[String], labels: &[Label]) -> Result<f64> {
    if responses.len() != labels.len() {
        return Err(Error::LengthMismatch(responses.len(), labels.len()));
    }
    if responses.is_empty() {
        return Err(Error::EmptyInput);
    }
    let correct = responses
        .iter()
        .zip(labels)
        .filter(|(r, &l)| response_label(r) == Some(l))
        .count();
    Ok(correct as f64 / responses.len() as f64)
}
