//! Synthetic cell graphs with a planted, class-specific change on a known
//! subset of nuclei.
//!
//! Every nucleus is an ellipse rasterised into a mask with a textured crop, so
//! its attributes come from the same code that measures real data. Nodes are
//! placed on a jittered grid, which fixes the spacing distribution per class.

use std::collections::BTreeMap;

use graphxq::concepts::{ellipse_mask, nucleus_attributes, GlcmParams, NucleusObservation};
use graphxq::graph::{EntityGraph, NodeRecord};
use ndarray::Array2;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SPLITS;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: &str) -> usize {
        match split {
            "train" => self.train,
            "val" => self.val,
            "test" => self.test,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Graphs generated per class and split.
    pub per_class: SplitCounts,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    /// Standard deviation of the Gaussian feature noise.
    #[serde(default = "one")]
    pub feature_noise: f64,
    /// Image size in pixels; every graph is placed inside it.
    #[serde(default = "default_roi")]
    pub roi: [f64; 2],
    pub classes: Vec<ClassSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    /// Inclusive node-count range.
    #[serde(default = "default_nodes")]
    pub nodes: [usize; 2],
    /// Mean and standard deviation of the ellipse semi-major axis (px).
    #[serde(default = "default_semi_major")]
    pub semi_major: [f64; 2],
    /// Range of the minor/major axis ratio.
    #[serde(default = "default_axis_ratio")]
    pub axis_ratio: [f64; 2],
    /// Mean grey level of the crop, in quantised levels.
    #[serde(default = "default_texture_mean")]
    pub texture_mean: f64,
    #[serde(default = "one")]
    pub texture_noise: f64,
    /// Grid pitch of the node layout (px).
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub planted: PlantedShift,
}

/// Changes carried by the planted nodes of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedShift {
    /// Share of nodes per graph that are planted.
    pub fraction: f64,
    /// Semi-major axis shift in units of its standard deviation.
    pub size_shift: f64,
    /// Added to feature `feature_index` of planted nodes.
    pub feature_offset: f64,
    pub feature_index: usize,
    pub axis_ratio: Option<[f64; 2]>,
    pub texture_noise: Option<f64>,
}

impl Default for PlantedShift {
    fn default() -> Self {
        Self {
            fraction: 0.2,
            size_shift: 0.0,
            feature_offset: 0.0,
            feature_index: 0,
            axis_ratio: None,
            texture_noise: None,
        }
    }
}

fn default_feature_dim() -> usize {
    8
}
fn one() -> f64 {
    1.0
}
fn default_roi() -> [f64; 2] {
    [512.0, 512.0]
}
fn default_nodes() -> [usize; 2] {
    [20, 40]
}
fn default_semi_major() -> [f64; 2] {
    [6.0, 1.0]
}
fn default_axis_ratio() -> [f64; 2] {
    [0.6, 1.0]
}
fn default_texture_mean() -> f64 {
    3.5
}
fn default_spacing() -> f64 {
    24.0
}

fn bad(msg: String) -> CliError {
    CliError::usage(format!("[synth] {msg}"))
}

fn check_ratio(r: [f64; 2], who: &str) -> CliResult<()> {
    if !(r[0] > 0.0 && r[0] <= r[1] && r[1] <= 1.0) {
        return Err(bad(format!(
            "{who}: axis_ratio must satisfy 0 < lo <= hi <= 1"
        )));
    }
    Ok(())
}

impl SynthSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.classes.len() < 2 {
            return Err(bad("needs at least two classes".into()));
        }
        if SPLITS.iter().any(|s| self.per_class.get(s) == 0) {
            return Err(bad("every split needs at least one graph per class".into()));
        }
        if self.feature_dim == 0 || !(self.feature_noise >= 0.0) {
            return Err(bad(
                "feature_dim must be positive, feature_noise >= 0".into()
            ));
        }
        if !(self.roi[0] > 0.0 && self.roi[1] > 0.0) {
            return Err(bad("roi must be positive".into()));
        }
        for c in &self.classes {
            let who = &c.name;
            let p = &c.planted;
            if c.nodes[0] == 0 || c.nodes[0] > c.nodes[1] {
                return Err(bad(format!("{who}: empty node range {:?}", c.nodes)));
            }
            if !(p.fraction > 0.0 && p.fraction <= 1.0) {
                return Err(bad(format!("{who}: planted fraction must lie in (0, 1]")));
            }
            if p.feature_index >= self.feature_dim {
                return Err(bad(format!("{who}: feature_index outside feature_dim")));
            }
            if !(c.semi_major[0] > 0.0 && c.semi_major[1] >= 0.0) {
                return Err(bad(format!("{who}: semi_major needs mean > 0, std >= 0")));
            }
            check_ratio(c.axis_ratio, who)?;
            if let Some(r) = p.axis_ratio {
                check_ratio(r, who)?;
            }
            let noise_ok = |n: f64| n >= 0.0 && n.is_finite();
            if !noise_ok(c.texture_noise) || !p.texture_noise.is_none_or(noise_ok) {
                return Err(bad(format!("{who}: texture noise must be >= 0")));
            }
            if !(c.spacing > 0.0) || !p.size_shift.is_finite() || !p.feature_offset.is_finite() {
                return Err(bad(format!("{who}: invalid spacing or shift")));
            }
            let side = (c.nodes[1] as f64).sqrt().ceil() * c.spacing;
            if side > self.roi[0] || side > self.roi[1] {
                return Err(bad(format!(
                    "{who}: {} nodes at spacing {} do not fit the roi",
                    c.nodes[1], c.spacing
                )));
            }
        }
        Ok(())
    }
}

/// Generated splits plus, per graph, the indices of planted nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub splits: BTreeMap<String, Vec<EntityGraph>>,
    pub planted: BTreeMap<String, Vec<Vec<usize>>>,
    pub warnings: Vec<String>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn textured_crop(
    rng: &mut ChaCha8Rng,
    dim: (usize, usize),
    mean: f64,
    noise: f64,
    levels: usize,
) -> Array2<u8> {
    let top = (levels - 1) as f64;
    Array2::from_shape_simple_fn(dim, || {
        (mean + noise * normal(rng)).round().clamp(0.0, top) as u8
    })
}

fn synth_graph(
    spec: &SynthSpec,
    class: usize,
    glcm: &GlcmParams,
    rng: &mut ChaCha8Rng,
) -> CliResult<(EntityGraph, Vec<usize>, Vec<String>)> {
    let c = &spec.classes[class];
    let p = &c.planted;
    let n = rng.random_range(c.nodes[0]..=c.nodes[1]);
    let n_planted = ((p.fraction * n as f64).round() as usize).clamp(1, n);
    let mut planted = sample(rng, n, n_planted).into_vec();
    planted.sort_unstable();
    let mut is_planted = vec![false; n];
    for &i in &planted {
        is_planted[i] = true;
    }

    let m = (n as f64).sqrt().ceil() as usize;
    let side = m as f64 * c.spacing;
    let origin = [
        rng.random_range(0.0..=spec.roi[0] - side),
        rng.random_range(0.0..=spec.roi[1] - side),
    ];
    let mut cells: Vec<usize> = (0..m * m).collect();
    cells.shuffle(rng);

    let mut warnings = Vec::new();
    let mut nodes = Vec::with_capacity(n);
    for (v, &cell) in cells.iter().take(n).enumerate() {
        let (row, col) = (cell / m, cell % m);
        let position = [
            origin[0] + (col as f64 + rng.random_range(0.25..0.75)) * c.spacing,
            origin[1] + (row as f64 + rng.random_range(0.25..0.75)) * c.spacing,
        ];
        let (shift, ratio, texture_noise) = if is_planted[v] {
            (
                p.size_shift,
                p.axis_ratio.unwrap_or(c.axis_ratio),
                p.texture_noise.unwrap_or(c.texture_noise),
            )
        } else {
            (0.0, c.axis_ratio, c.texture_noise)
        };
        let [mu, sd] = c.semi_major;
        let a = (mu + sd * (normal(rng) + shift)).max(1.0);
        let b = a * rng.random_range(ratio[0]..=ratio[1]);
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let mask = ellipse_mask(a, b, angle);
        let crop = textured_crop(rng, mask.dim(), c.texture_mean, texture_noise, glcm.levels);
        let obs = NucleusObservation::new(mask, crop, position)?;
        let (attributes, w) = nucleus_attributes(&obs, glcm)?;
        warnings.extend(w.into_iter().map(|w| format!("node {v}: {w}")));

        let mut features: Vec<f64> = (0..spec.feature_dim)
            .map(|_| spec.feature_noise * normal(rng))
            .collect();
        if is_planted[v] {
            features[p.feature_index] += p.feature_offset;
        }
        let mut node = NodeRecord::new(position, features);
        node.attributes = attributes;
        nodes.push(node);
    }
    let graph = EntityGraph::new(nodes, [], Some(class))?;
    Ok((graph, planted, warnings))
}

/// Generates every split. Each graph draws from its own ChaCha stream keyed
/// by (split, class, index), so output does not depend on thread count.
pub fn synthesize(spec: &SynthSpec, glcm: &GlcmParams, seed: u64) -> CliResult<SynthOutput> {
    spec.validate()?;
    let mut out = SynthOutput {
        splits: BTreeMap::new(),
        planted: BTreeMap::new(),
        warnings: Vec::new(),
    };
    for (si, split) in SPLITS.iter().enumerate() {
        let count = spec.per_class.get(split);
        let jobs: Vec<(usize, usize)> = (0..spec.classes.len())
            .flat_map(|c| (0..count).map(move |i| (c, i)))
            .collect();
        let made = jobs
            .par_iter()
            .map(|&(c, i)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((si as u64) << 48) | ((c as u64) << 32) | i as u64);
                synth_graph(spec, c, glcm, &mut rng).map_err(|e| match e {
                    CliError::Core(e) => CliError::Core(graphxq::Error::InvalidInput(format!(
                        "{split} graph {i} of class {c}: {e}"
                    ))),
                    e => e,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut graphs = Vec::with_capacity(made.len());
        let mut planted = Vec::with_capacity(made.len());
        for (gi, (g, p, w)) in made.into_iter().enumerate() {
            out.warnings
                .extend(w.into_iter().map(|w| format!("{split} graph {gi}: {w}")));
            graphs.push(g);
            planted.push(p);
        }
        out.splits.insert(split.to_string(), graphs);
        out.planted.insert(split.to_string(), planted);
    }
    Ok(out)
}
