//! Measurable nuclear attributes grouped into pathology concepts.

mod glcm;
mod shape;
mod spacing;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use glcm::{glcm_attributes, glcm_matrix, GlcmParams, GlcmStats};
pub use shape::{
    boundary_trace, convex_hull, ellipse_mask, moment_axes, shape_attributes, ShapeStats,
    MIN_PERIMETER,
};
pub use spacing::{assign_spacing, spacing_attributes, SpacingStats};

pub const AREA: &str = "area";
pub const PERIMETER: &str = "perimeter";
pub const ROUGHNESS: &str = "roughness";
pub const ECCENTRICITY: &str = "eccentricity";
pub const CIRCULARITY: &str = "circularity";
pub const SHAPE_FACTOR: &str = "shape_factor";
pub const MEAN_SPACING: &str = "mean_spacing";
pub const STD_SPACING: &str = "std_spacing";
pub const GLCM_DISSIMILARITY: &str = "glcm_dissimilarity";
pub const GLCM_CONTRAST: &str = "glcm_contrast";
pub const GLCM_HOMOGENEITY: &str = "glcm_homogeneity";
pub const GLCM_ASM: &str = "glcm_asm";
pub const GLCM_ENTROPY: &str = "glcm_entropy";
pub const GLCM_VARIANCE: &str = "glcm_variance";

/// One segmented nucleus: its binary mask, the quantized grayscale crop
/// under it and the centroid in image pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct NucleusObservation {
    pub mask: Array2<bool>,
    pub crop: Array2<u8>,
    pub centroid: [f64; 2],
}

impl NucleusObservation {
    pub fn new(mask: Array2<bool>, crop: Array2<u8>, centroid: [f64; 2]) -> Result<Self> {
        if mask.dim() != crop.dim() {
            return Err(Error::shape(
                format!("crop of shape {:?}", mask.dim()),
                format!("{:?}", crop.dim()),
            ));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidInput("nucleus mask has no set pixel".into()));
        }
        Ok(Self {
            mask,
            crop,
            centroid,
        })
    }

    pub fn area(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// A named concept and the attributes that measure it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    pub attributes: Vec<String>,
}

/// Ordered concepts, each owning a disjoint list of attribute keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Concept>", into = "Vec<Concept>")]
pub struct ConceptSchema {
    concepts: Vec<Concept>,
}

impl ConceptSchema {
    pub fn new(concepts: Vec<Concept>) -> Result<Self> {
        if concepts.is_empty() {
            return Err(Error::Schema("no concepts".into()));
        }
        let mut seen = BTreeMap::new();
        for c in &concepts {
            if c.attributes.is_empty() {
                return Err(Error::Schema(format!(
                    "concept `{}` has no attributes",
                    c.name
                )));
            }
            for a in &c.attributes {
                if let Some(prev) = seen.insert(a.clone(), c.name.clone()) {
                    return Err(Error::Schema(format!(
                        "attribute `{a}` listed under both `{prev}` and `{}`",
                        c.name
                    )));
                }
            }
        }
        let mut names: Vec<_> = concepts.iter().map(|c| &c.name).collect();
        names.sort();
        names.dedup();
        if names.len() != concepts.len() {
            return Err(Error::Schema("duplicate concept name".into()));
        }
        Ok(Self { concepts })
    }

    /// Size, shape, shape variation, spacing and chromaticity with all
    /// fourteen measured attributes.
    pub fn standard() -> Self {
        let group = |name: &str, attrs: &[&str]| Concept {
            name: name.into(),
            attributes: attrs.iter().map(|s| s.to_string()).collect(),
        };
        Self::new(vec![
            group("size", &[AREA]),
            group("shape", &[PERIMETER, ROUGHNESS, ECCENTRICITY, CIRCULARITY]),
            group("shape_variation", &[SHAPE_FACTOR]),
            group("spacing", &[MEAN_SPACING, STD_SPACING]),
            group(
                "chromaticity",
                &[
                    GLCM_DISSIMILARITY,
                    GLCM_CONTRAST,
                    GLCM_HOMOGENEITY,
                    GLCM_ASM,
                    GLCM_ENTROPY,
                    GLCM_VARIANCE,
                ],
            ),
        ])
        .expect("standard schema is valid")
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.concepts.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, concept: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c.name == concept)
    }

    pub fn concept_of(&self, attribute: &str) -> Option<&str> {
        self.concepts
            .iter()
            .find(|c| c.attributes.iter().any(|a| a == attribute))
            .map(|c| c.name.as_str())
    }

    /// Every attribute key, concept by concept.
    pub fn attributes(&self) -> Vec<&str> {
        self.concepts
            .iter()
            .flat_map(|c| c.attributes.iter().map(String::as_str))
            .collect()
    }
}

impl Default for ConceptSchema {
    fn default() -> Self {
        Self::standard()
    }
}

impl TryFrom<Vec<Concept>> for ConceptSchema {
    type Error = Error;

    fn try_from(v: Vec<Concept>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ConceptSchema> for Vec<Concept> {
    fn from(s: ConceptSchema) -> Self {
        s.concepts
    }
}

/// Shape and texture attributes of one nucleus (everything except spacing,
/// which needs the surrounding nuclei). Warnings are returned, not logged.
pub fn nucleus_attributes(
    obs: &NucleusObservation,
    glcm: &GlcmParams,
) -> Result<(BTreeMap<String, f64>, Vec<String>)> {
    let mut warnings = Vec::new();
    let (s, w) = shape_attributes(obs);
    warnings.extend(w);
    let (g, w) = glcm_attributes(obs, glcm)?;
    warnings.extend(w);
    let out = [
        (AREA, s.area),
        (PERIMETER, s.perimeter),
        (ROUGHNESS, s.roughness),
        (ECCENTRICITY, s.eccentricity),
        (CIRCULARITY, s.circularity),
        (SHAPE_FACTOR, s.shape_factor),
        (GLCM_DISSIMILARITY, g.dissimilarity),
        (GLCM_CONTRAST, g.contrast),
        (GLCM_HOMOGENEITY, g.homogeneity),
        (GLCM_ASM, g.asm),
        (GLCM_ENTROPY, g.entropy),
        (GLCM_VARIANCE, g.variance),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Ok((out, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_schema_partitions_attributes() {
        let s = ConceptSchema::standard();
        assert_eq!(
            s.names(),
            [
                "size",
                "shape",
                "shape_variation",
                "spacing",
                "chromaticity"
            ]
        );
        assert_eq!(s.attributes().len(), 14);
        assert_eq!(s.concept_of(GLCM_ASM), Some("chromaticity"));
        assert_eq!(s.concept_of("nope"), None);
    }

    #[test]
    fn overlapping_concepts_rejected() {
        let c = |n: &str, a: &str| Concept {
            name: n.into(),
            attributes: vec![a.into()],
        };
        assert!(ConceptSchema::new(vec![c("a", "x"), c("b", "x")]).is_err());
        assert!(ConceptSchema::new(vec![c("a", "x"), c("a", "y")]).is_err());
        assert!(ConceptSchema::new(vec![]).is_err());
    }

    #[test]
    fn schema_json_round_trip() {
        let s = ConceptSchema::standard();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ConceptSchema>(&text).unwrap(), s);
    }

    #[test]
    fn observation_validation() {
        let m = Array2::from_elem((2, 2), false);
        assert!(NucleusObservation::new(m.clone(), Array2::zeros((2, 2)), [0.0; 2]).is_err());
        let mut m2 = m;
        m2[[0, 0]] = true;
        assert!(NucleusObservation::new(m2.clone(), Array2::zeros((3, 2)), [0.0; 2]).is_err());
        assert_eq!(
            NucleusObservation::new(m2, Array2::zeros((2, 2)), [0.0; 2])
                .unwrap()
                .area(),
            1
        );
    }
}
