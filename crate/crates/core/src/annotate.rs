//! Deterministic raw-annotation text from extracted regions and triggered
//! forgery types.

use serde::{Deserialize, Serialize};

use crate::detectors::{BoundaryCue, ForgeryType, TypeEvidence};
use crate::region::{ForgeryRegionList, RegionName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }

    pub fn opposite(self) -> Label {
        match self {
            Label::Real => Label::Fake,
            Label::Fake => Label::Real,
        }
    }
}

/// Subject noun of the mandatory phrase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhraseVariant {
    #[default]
    Face,
    Person,
}

impl PhraseVariant {
    pub fn noun(self) -> &'static str {
        match self {
            PhraseVariant::Face => "face",
            PhraseVariant::Person => "person",
        }
    }
}

/// `"This is a real face"` / `"This is a fake face"` (or `person`).
pub fn mandatory_phrase(label: Label, variant: PhraseVariant) -> String {
    format!("This is a {} {}", label.as_str(), variant.noun())
}

pub fn cue_clause(cue: BoundaryCue) -> &'static str {
    match cue {
        BoundaryCue::Gradient => "sharp changes in image gradients at the boundaries",
        BoundaryCue::Edge => "unnatural edge patterns",
        BoundaryCue::Frequency => "unusual frequency patterns at the boundaries",
    }
}

fn join_clauses(clauses: &[&str]) -> String {
    match clauses {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Connective phrase for one (region, type) statement. Blend boundaries list
/// the cues that fired.
pub fn phrase_for(region: RegionName, forgery_type: ForgeryType, cues: &[BoundaryCue]) -> String {
    match forgery_type {
        ForgeryType::ColorDifference => format!("the {region} has inconsistent colors"),
        ForgeryType::Blur => format!("the {region} appears blurry compared to natural faces"),
        ForgeryType::TextureAbnormal => format!("the {region} lacks natural texture"),
        ForgeryType::StructureAbnormal => {
            format!("the {region} shows structural distortion deviating from natural appearance")
        }
        ForgeryType::BlendBoundary => {
            let clauses: Vec<&str> = cues.iter().map(|&c| cue_clause(c)).collect();
            if clauses.is_empty() {
                format!("the {region} shows blending artifacts")
            } else {
                format!("the {region} shows blending artifacts characterized by {}", join_clauses(&clauses))
            }
        }
    }
}

/// Parse a type name then render its phrase.
pub fn phrase_for_name(region: RegionName, type_name: &str, cues: &[BoundaryCue]) -> crate::Result<String> {
    Ok(phrase_for(region, type_name.parse()?, cues))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub region: RegionName,
    pub forgery_type: ForgeryType,
    pub phrase: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub label: Label,
    pub statements: Vec<Statement>,
    pub full_text: String,
    /// Fake label with no triggered type in any extracted region.
    pub low_evidence: bool,
}

impl RawAnnotation {
    /// Regions named by at least one statement, in first-mention order.
    pub fn mentioned_regions(&self) -> Vec<RegionName> {
        let mut out = Vec::new();
        for s in &self.statements {
            if !out.contains(&s.region) {
                out.push(s.region);
            }
        }
        out
    }
}

/// Evidence for one extracted region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEvidence {
    pub region: RegionName,
    pub evidence: Vec<TypeEvidence>,
}

/// Renders statements region-major in list order, types in detector order.
/// Regions absent from `regions` are ignored.
pub fn build_raw_annotation(
    regions: &ForgeryRegionList,
    evidence: &[RegionEvidence],
    label: Label,
    variant: PhraseVariant,
) -> RawAnnotation {
    if label == Label::Real {
        return RawAnnotation {
            label,
            statements: Vec::new(),
            full_text: format!("{}.", mandatory_phrase(Label::Real, variant)),
            low_evidence: false,
        };
    }

    let mut statements = Vec::new();
    for region in regions.regions() {
        let Some(found) = evidence.iter().find(|e| e.region == region) else {
            continue;
        };
        for t in ForgeryType::ALL {
            if let Some(ev) = found.evidence.iter().find(|e| e.forgery_type == t && e.triggered) {
                statements.push(Statement {
                    region,
                    forgery_type: t,
                    phrase: phrase_for(region, t, &ev.cues),
                });
            }
        }
    }

    let head = mandatory_phrase(Label::Fake, variant);
    let full_text = if statements.is_empty() {
        format!("{head}.")
    } else {
        let body: Vec<&str> = statements.iter().map(|s| s.phrase.as_str()).collect();
        format!("{head}, {}.", body.join("; "))
    };
    RawAnnotation {
        label,
        low_evidence: statements.is_empty(),
        statements,
        full_text,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::region::{filter_means, RegionMean};

    fn ev(t: ForgeryType, triggered: bool, cues: Vec<BoundaryCue>) -> TypeEvidence {
        TypeEvidence {
            forgery_type: t,
            triggered,
            metrics: BTreeMap::new(),
            cues,
            note: None,
        }
    }

    #[test]
    fn connective_phrases() {
        assert_eq!(
            phrase_for(RegionName::Mouth, ForgeryType::TextureAbnormal, &[]),
            "the mouth lacks natural texture"
        );
        assert_eq!(
            phrase_for(RegionName::Eyes, ForgeryType::Blur, &[]),
            "the eyes appears blurry compared to natural faces"
        );
        assert_eq!(
            phrase_for(RegionName::Nose, ForgeryType::BlendBoundary, &[BoundaryCue::Gradient]),
            "the nose shows blending artifacts characterized by sharp changes in image gradients at the boundaries"
        );
        assert_eq!(
            phrase_for(
                RegionName::Face,
                ForgeryType::BlendBoundary,
                &[BoundaryCue::Gradient, BoundaryCue::Edge, BoundaryCue::Frequency]
            ),
            "the face shows blending artifacts characterized by sharp changes in image gradients at the \
             boundaries, unnatural edge patterns and unusual frequency patterns at the boundaries"
        );
        assert!(phrase_for_name(RegionName::Face, "Sparkle", &[]).is_err());
    }

    #[test]
    fn real_label_text() {
        let raw = build_raw_annotation(&ForgeryRegionList::default(), &[], Label::Real, PhraseVariant::Face);
        assert_eq!(raw.full_text, "This is a real face.");
        assert!(raw.statements.is_empty());
    }

    #[test]
    fn single_texture_statement() {
        let list = filter_means(&[RegionMean { region: RegionName::Mouth, mean: 0.3 }], 0.05);
        let evidence = vec![RegionEvidence {
            region: RegionName::Mouth,
            evidence: ForgeryType::ALL
                .iter()
                .map(|&t| ev(t, t == ForgeryType::TextureAbnormal, vec![]))
                .collect(),
        }];
        let raw = build_raw_annotation(&list, &evidence, Label::Fake, PhraseVariant::Face);
        assert_eq!(raw.full_text, "This is a fake face, the mouth lacks natural texture.");
        assert!(!raw.low_evidence);
    }

    #[test]
    fn region_major_order_and_low_evidence() {
        let list = filter_means(
            &[
                RegionMean { region: RegionName::Mouth, mean: 0.2 },
                RegionMean { region: RegionName::Eyes, mean: 0.4 },
            ],
            0.05,
        );
        let evidence = vec![
            RegionEvidence {
                region: RegionName::Mouth,
                evidence: vec![ev(ForgeryType::Blur, true, vec![]), ev(ForgeryType::ColorDifference, true, vec![])],
            },
            RegionEvidence {
                region: RegionName::Eyes,
                evidence: vec![ev(ForgeryType::StructureAbnormal, true, vec![])],
            },
        ];
        let raw = build_raw_annotation(&list, &evidence, Label::Fake, PhraseVariant::Face);
        assert_eq!(
            raw.full_text,
            "This is a fake face, the eyes shows structural distortion deviating from natural appearance; \
             the mouth has inconsistent colors; the mouth appears blurry compared to natural faces."
        );
        assert_eq!(raw.mentioned_regions(), vec![RegionName::Eyes, RegionName::Mouth]);

        let none = build_raw_annotation(&list, &[], Label::Fake, PhraseVariant::Person);
        assert_eq!(none.full_text, "This is a fake person.");
        assert!(none.low_evidence);
    }
}
