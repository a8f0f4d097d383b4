use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of one class pair's separability row against its prior row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStatistics {
    pub s_max: f64,
    pub s_avg: f64,
    pub s_corr: f64,
}

/// Sums of the per-pair statistics, unweighted and risk-weighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    #[serde(rename = "S_max")]
    pub s_max: f64,
    #[serde(rename = "S_avg")]
    pub s_avg: f64,
    #[serde(rename = "S_corr")]
    pub s_corr: f64,
    #[serde(rename = "S_max_R")]
    pub s_max_r: f64,
    #[serde(rename = "S_avg_R")]
    pub s_avg_r: f64,
    #[serde(rename = "S_corr_R")]
    pub s_corr_r: f64,
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if a.is_empty() || constant(a) || constant(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Max, mean and correlation with the prior for one row of `S`.
pub fn row_statistics(s: &[f64], prior: &[f64]) -> Result<(PairStatistics, Option<String>)> {
    if s.len() != prior.len() || s.is_empty() {
        return Err(Error::shape(
            format!("prior row of length {}", s.len()),
            prior.len(),
        ));
    }
    let s_max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s_avg = s.iter().sum::<f64>() / s.len() as f64;
    let (s_corr, warning) = match pearson(s, prior) {
        Some(r) => (r, None),
        None => (
            0.0,
            Some("zero-variance separability or prior row; correlation set to 0".to_string()),
        ),
    };
    Ok((
        PairStatistics {
            s_max,
            s_avg,
            s_corr,
        },
        warning,
    ))
}

/// Row-wise statistics of `S` against the prior `P` (same shape).
pub fn statistics(
    s: &Array2<f64>,
    prior: &Array2<f64>,
) -> Result<(Vec<PairStatistics>, Vec<String>)> {
    if s.dim() != prior.dim() {
        return Err(Error::shape(
            format!("prior of shape {:?}", s.dim()),
            format!("{:?}", prior.dim()),
        ));
    }
    let mut warnings = Vec::new();
    let stats = s
        .rows()
        .into_iter()
        .zip(prior.rows())
        .enumerate()
        .map(|(i, (a, b))| {
            let (st, w) = row_statistics(&a.to_vec(), &b.to_vec())?;
            warnings.extend(w.map(|w| format!("pair {i}: {w}")));
            Ok(st)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((stats, warnings))
}

/// Sums over class pairs, plain and weighted by the pair risk.
pub fn aggregate(stats: &[PairStatistics], risk: &[f64]) -> Result<Aggregates> {
    if stats.len() != risk.len() {
        return Err(Error::shape(
            format!("{} risk weights", stats.len()),
            risk.len(),
        ));
    }
    let mut out = Aggregates {
        s_max: 0.0,
        s_avg: 0.0,
        s_corr: 0.0,
        s_max_r: 0.0,
        s_avg_r: 0.0,
        s_corr_r: 0.0,
    };
    for (s, &r) in stats.iter().zip(risk) {
        out.s_max += s.s_max;
        out.s_avg += s.s_avg;
        out.s_corr += s.s_corr;
        out.s_max_r += s.s_max * r;
        out.s_avg_r += s.s_avg * r;
        out.s_corr_r += s.s_corr * r;
    }
    Ok(out)
}
