use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::NucleusObservation;
use crate::error::{Error, Result};

/// Grey levels and pixel offsets for the co-occurrence matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcmParams {
    pub levels: usize,
    /// `(d_row, d_col)` offsets; each pair is also counted in reverse.
    pub offsets: Vec<(isize, isize)>,
}

impl Default for GlcmParams {
    fn default() -> Self {
        Self {
            levels: 8,
            offsets: vec![(0, 1), (1, 0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlcmStats {
    pub dissimilarity: f64,
    pub contrast: f64,
    pub homogeneity: f64,
    pub asm: f64,
    pub entropy: f64,
    pub variance: f64,
}

impl GlcmStats {
    /// The six statistics of a normalized co-occurrence matrix.
    pub fn from_matrix(p: &Array2<f64>) -> Self {
        let mu: f64 = p.indexed_iter().map(|((i, _), &v)| i as f64 * v).sum();
        let mut s = Self::default();
        for ((i, j), &v) in p.indexed_iter() {
            if v == 0.0 {
                continue;
            }
            let d = i as f64 - j as f64;
            s.dissimilarity += d.abs() * v;
            s.contrast += d * d * v;
            s.homogeneity += v / (1.0 + d * d);
            s.asm += v * v;
            s.entropy -= v * v.ln();
            s.variance += (i as f64 - mu).powi(2) * v;
        }
        s
    }
}

/// Symmetric, normalized co-occurrence matrix over pixel pairs that both lie
/// inside the mask. `Ok(None)` when no such pair exists.
pub fn glcm_matrix(obs: &NucleusObservation, params: &GlcmParams) -> Result<Option<Array2<f64>>> {
    let g = params.levels;
    if g == 0 {
        return Err(Error::InvalidInput("GLCM needs at least one level".into()));
    }
    if let Some(&bad) = obs.crop.iter().find(|&&v| v as usize >= g) {
        return Err(Error::InvalidInput(format!(
            "crop level {bad} outside {g} quantization levels"
        )));
    }
    let (h, w) = obs.mask.dim();
    let mut counts = Array2::<f64>::zeros((g, g));
    let mut total = 0.0;
    for ((r, c), &m) in obs.mask.indexed_iter() {
        if !m {
            continue;
        }
        for &(dr, dc) in &params.offsets {
            let (r2, c2) = (r as isize + dr, c as isize + dc);
            if r2 < 0 || c2 < 0 || r2 as usize >= h || c2 as usize >= w {
                continue;
            }
            let (r2, c2) = (r2 as usize, c2 as usize);
            if !obs.mask[[r2, c2]] {
                continue;
            }
            let a = obs.crop[[r, c]] as usize;
            let b = obs.crop[[r2, c2]] as usize;
            counts[[a, b]] += 1.0;
            counts[[b, a]] += 1.0;
            total += 2.0;
        }
    }
    if total == 0.0 {
        return Ok(None);
    }
    Ok(Some(counts / total))
}

/// Texture statistics of the crop under the mask. Nuclei too small to hold a
/// single pixel pair get all-zero statistics and a warning.
pub fn glcm_attributes(
    obs: &NucleusObservation,
    params: &GlcmParams,
) -> Result<(GlcmStats, Vec<String>)> {
    Ok(match glcm_matrix(obs, params)? {
        Some(p) => (GlcmStats::from_matrix(&p), Vec::new()),
        None => (
            GlcmStats::default(),
            vec![format!(
                "nucleus of {} px has no in-mask pixel pairs; texture set to 0",
                obs.area()
            )],
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn full(crop: Array2<u8>) -> NucleusObservation {
        NucleusObservation::new(Array2::from_elem(crop.dim(), true), crop, [0.0; 2]).unwrap()
    }

    #[test]
    fn constant_crop() {
        let (s, w) =
            glcm_attributes(&full(Array2::from_elem((5, 5), 3)), &GlcmParams::default()).unwrap();
        assert!(w.is_empty());
        assert_eq!(s.asm, 1.0);
        assert_eq!(s.entropy, 0.0);
        assert_eq!(s.contrast, 0.0);
        assert_eq!(s.dissimilarity, 0.0);
        assert_eq!(s.homogeneity, 1.0);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn checkerboard_horizontal_offset() {
        let crop = Array2::from_shape_fn((6, 6), |(r, c)| ((r + c) % 2) as u8);
        let params = GlcmParams {
            levels: 2,
            offsets: vec![(0, 1)],
        };
        let (s, _) = glcm_attributes(&full(crop), &params).unwrap();
        assert!((s.contrast - 1.0).abs() < 1e-15);
        assert!((s.dissimilarity - 1.0).abs() < 1e-15);
        assert!((s.homogeneity - 0.5).abs() < 1e-15);
        assert!((s.asm - 0.5).abs() < 1e-15);
        assert!((s.entropy - LN_2).abs() < 1e-15);
    }

    #[test]
    fn pairs_leaving_the_mask_are_ignored() {
        let mut mask = Array2::from_elem((3, 3), false);
        mask[[1, 1]] = true;
        let crop = Array2::from_shape_fn((3, 3), |(r, c)| (r * 3 + c) as u8);
        let obs = NucleusObservation::new(mask, crop, [0.0; 2]).unwrap();
        let params = GlcmParams {
            levels: 9,
            ..GlcmParams::default()
        };
        assert!(glcm_matrix(&obs, &params).unwrap().is_none());
        let (s, w) = glcm_attributes(&obs, &params).unwrap();
        assert_eq!(s, GlcmStats::default());
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn out_of_range_level_rejected() {
        assert!(glcm_matrix(&full(Array2::from_elem((2, 2), 8)), &GlcmParams::default()).is_err());
    }

    #[test]
    fn matrix_is_symmetric_distribution() {
        let crop = Array2::from_shape_fn((7, 5), |(r, c)| ((r * 5 + c * 3) % 8) as u8);
        let p = glcm_matrix(&full(crop), &GlcmParams::default())
            .unwrap()
            .unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-12);
        assert_eq!(p, p.t());
    }
}
