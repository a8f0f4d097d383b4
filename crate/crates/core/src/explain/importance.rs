use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The explainers this crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainerKind {
    GnnExplainer,
    GraphGradCam,
    GraphGradCamPp,
    GraphLrp,
    Random,
}

impl ExplainerKind {
    pub const ALL: [ExplainerKind; 5] = [
        ExplainerKind::GnnExplainer,
        ExplainerKind::GraphGradCam,
        ExplainerKind::GraphGradCamPp,
        ExplainerKind::GraphLrp,
        ExplainerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExplainerKind::GnnExplainer => "gnn_explainer",
            ExplainerKind::GraphGradCam => "graph_grad_cam",
            ExplainerKind::GraphGradCamPp => "graph_grad_cam_pp",
            ExplainerKind::GraphLrp => "graph_lrp",
            ExplainerKind::Random => "random",
        }
    }
}

impl fmt::Display for ExplainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExplainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .replace("++", "pp")
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "gnnexplainer" => Ok(ExplainerKind::GnnExplainer),
            "graphgradcam" | "gradcam" => Ok(ExplainerKind::GraphGradCam),
            "graphgradcampp" | "gradcampp" | "graphgradcamplusplus" => {
                Ok(ExplainerKind::GraphGradCamPp)
            }
            "graphlrp" | "lrp" => Ok(ExplainerKind::GraphLrp),
            "random" => Ok(ExplainerKind::Random),
            _ => Err(Error::InvalidInput(format!("unknown explainer `{s}`"))),
        }
    }
}

/// Per-node importance produced by one explainer for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMap {
    pub values: Vec<f64>,
    pub explainer: ExplainerKind,
    pub normalized: bool,
}

impl ImportanceMap {
    pub fn raw(explainer: ExplainerKind, values: Vec<f64>) -> Self {
        Self {
            values,
            explainer,
            normalized: false,
        }
    }
}

/// Min-max scales a raw map to `[0, 1]`.
///
/// A constant map becomes all zeros and the second tuple element carries the
/// warning text. Non-finite raw values are an explainer error.
pub fn normalize_importance(map: &ImportanceMap) -> Result<(ImportanceMap, Option<String>)> {
    if let Some(i) = map.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Explainer {
            explainer: map.explainer.to_string(),
            reason: format!("non-finite importance {} at node {i}", map.values[i]),
        });
    }
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut warning = None;
    let values = if hi > lo {
        map.values
            .iter()
            .map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    } else {
        let msg = format!(
            "{}: constant importance map ({} nodes); mapped to 0",
            map.explainer,
            map.values.len()
        );
        log::warn!("{msg}");
        warning = Some(msg);
        vec![0.0; map.values.len()]
    };
    Ok((
        ImportanceMap {
            values,
            explainer: map.explainer,
            normalized: true,
        },
        warning,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(v: &[f64]) -> ImportanceMap {
        ImportanceMap::raw(ExplainerKind::GraphLrp, v.to_vec())
    }

    #[test]
    fn affine_endpoints() {
        let (m, w) = normalize_importance(&raw(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(m.values, vec![0.0, 0.5, 1.0]);
        assert!(m.normalized && w.is_none());
    }

    #[test]
    fn constant_map_warns() {
        let (m, w) = normalize_importance(&raw(&[3.0; 4])).unwrap();
        assert_eq!(m.values, vec![0.0; 4]);
        assert!(w.is_some());
    }

    #[test]
    fn nan_is_explainer_error() {
        let err = normalize_importance(&raw(&[1.0, f64::NAN])).unwrap_err();
        assert!(matches!(err, Error::Explainer { ref explainer, .. } if explainer == "graph_lrp"));
    }

    #[test]
    fn names_parse_back() {
        for k in ExplainerKind::ALL {
            assert_eq!(k.name().parse::<ExplainerKind>().unwrap(), k);
        }
        assert_eq!(
            "GraphGrad-CAM++".parse::<ExplainerKind>().unwrap(),
            ExplainerKind::GraphGradCamPp
        );
        assert!("saliency".parse::<ExplainerKind>().is_err());
    }
}
