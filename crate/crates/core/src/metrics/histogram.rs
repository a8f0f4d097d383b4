use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability mass over a uniform grid of bins covering `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeHistogram {
    pub bin_step: f64,
    pub densities: Vec<f64>,
}

/// Number of bins for a step that divides `[0, 1]` evenly.
pub fn bin_count(bin_step: f64) -> Result<usize> {
    let n = (1.0 / bin_step).round();
    if !(bin_step > 0.0 && bin_step <= 1.0) || ((1.0 / bin_step) - n).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "bin step {bin_step} does not divide [0, 1] evenly"
        )));
    }
    Ok(n as usize)
}

impl AttributeHistogram {
    /// Histogram of values in `[0, 1]`; `1.0` falls into the last bin.
    pub fn from_values(values: &[f64], bin_step: f64) -> Result<Self> {
        let n = bin_count(bin_step)?;
        if values.is_empty() {
            return Err(Error::InvalidInput("histogram of no values".into()));
        }
        let mut counts = vec![0usize; n];
        for &v in values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "value {v} outside the normalized range [0, 1]"
                )));
            }
            counts[((v * n as f64).floor() as usize).min(n - 1)] += 1;
        }
        let total = values.len() as f64;
        Ok(Self {
            bin_step,
            densities: counts.into_iter().map(|c| c as f64 / total).collect(),
        })
    }

    pub fn num_bins(&self) -> usize {
        self.densities.len()
    }
}

/// First Wasserstein distance between two histograms on the same grid,
/// `sum |CDF1 - CDF2| * bin_width`.
pub fn wasserstein_1d(a: &AttributeHistogram, b: &AttributeHistogram) -> Result<f64> {
    if a.num_bins() != b.num_bins() || a.bin_step != b.bin_step {
        return Err(Error::shape(
            format!("{} bins of width {}", a.num_bins(), a.bin_step),
            format!("{} bins of width {}", b.num_bins(), b.bin_step),
        ));
    }
    let mut cdf = 0.0;
    let mut total = 0.0;
    for (p, q) in a.densities.iter().zip(&b.densities) {
        cdf += p - q;
        total += cdf.abs();
    }
    Ok(total * a.bin_step)
}
