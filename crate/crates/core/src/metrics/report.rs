use std::collections::BTreeMap;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::separability::SeparabilityMatrix;
use super::statistics::{aggregate, statistics, Aggregates, PairStatistics};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub s_max: f64,
    pub s_avg: f64,
    pub s_corr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

/// Everything reported for one explainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerReport {
    pub per_pair: BTreeMap<String, PairReport>,
    pub aggregates: Aggregates,
    /// pair -> concept -> separability.
    pub per_concept: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Explainer name -> report.
pub type Report = BTreeMap<String, ExplainerReport>;

/// Statistics, aggregates and the raw matrix of one explainer. `accuracy`
/// holds per-pair classifier accuracy in pair order when available.
pub fn explainer_report(
    sep: &SeparabilityMatrix,
    prior: &Array2<f64>,
    risk: &[f64],
    accuracy: Option<&[f64]>,
) -> Result<(ExplainerReport, Vec<String>)> {
    let (stats, warnings) = statistics(&sep.values, prior)?;
    let aggregates = aggregate(&stats, risk)?;
    if let Some(acc) = accuracy {
        if acc.len() != stats.len() {
            return Err(Error::shape(
                format!("{} accuracies", stats.len()),
                acc.len(),
            ));
        }
    }
    let per_pair = stats
        .iter()
        .enumerate()
        .map(|(i, s): (usize, &PairStatistics)| {
            (
                sep.pair_keys[i].clone(),
                PairReport {
                    s_max: s.s_max,
                    s_avg: s.s_avg,
                    s_corr: s.s_corr,
                    accuracy: accuracy.map(|a| a[i]),
                },
            )
        })
        .collect();
    let per_concept = sep
        .pair_keys
        .iter()
        .zip(sep.values.rows())
        .map(|(k, row)| {
            (
                k.clone(),
                sep.concepts
                    .iter()
                    .cloned()
                    .zip(row.iter().copied())
                    .collect(),
            )
        })
        .collect();
    let warnings = warnings
        .into_iter()
        .map(|w| {
            // statistics() numbers pairs; swap in readable keys
            match w.strip_prefix("pair ").and_then(|r| r.split_once(':')) {
                Some((i, rest)) => match i.parse::<usize>() {
                    Ok(i) => format!("pair {}:{rest}", sep.pair_keys[i]),
                    Err(_) => w,
                },
                None => w,
            }
        })
        .collect();
    Ok((
        ExplainerReport {
            per_pair,
            aggregates,
            per_concept,
        },
        warnings,
    ))
}

/// Writes `explainer,pair,concept,k,score` rows of the threshold curves.
pub fn write_curves<'a>(
    writer: impl Write,
    matrices: impl IntoIterator<Item = (&'a str, &'a SeparabilityMatrix)>,
) -> Result<()> {
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["explainer", "pair", "concept", "k", "score"])
        .map_err(csv_err)?;
    for (name, sep) in matrices {
        for (p, pair) in sep.pair_keys.iter().enumerate() {
            for (c, concept) in sep.concepts.iter().enumerate() {
                for (ki, k) in sep.thresholds.iter().enumerate() {
                    w.write_record([
                        name,
                        pair,
                        concept,
                        &k.to_string(),
                        &sep.curves[[p, c, ki]].to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    fn matrix() -> SeparabilityMatrix {
        SeparabilityMatrix {
            pairs: vec![(0, 1)],
            pair_keys: vec!["a-b".into()],
            concepts: vec!["size".into(), "shape".into()],
            thresholds: vec![5, 10],
            values: array![[0.4, 0.2]],
            curves: Array3::from_elem((1, 2, 2), 0.3),
        }
    }

    #[test]
    fn report_fields() {
        let (r, w) =
            explainer_report(&matrix(), &array![[1.0, 0.0]], &[2.0], Some(&[0.9])).unwrap();
        assert!(w.is_empty());
        let pair = &r.per_pair["a-b"];
        assert_eq!(pair.s_max, 0.4);
        assert!((pair.s_avg - 0.3).abs() < 1e-15);
        assert!((pair.s_corr - 1.0).abs() < 1e-12);
        assert_eq!(pair.accuracy, Some(0.9));
        assert_eq!(r.aggregates.s_max_r, 0.8);
        assert_eq!(r.per_concept["a-b"]["shape"], 0.2);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["aggregates"]["S_corr_R"].is_number());
    }

    #[test]
    fn zero_variance_warning_names_pair() {
        let (_, w) = explainer_report(&matrix(), &array![[0.5, 0.5]], &[1.0], None).unwrap();
        assert!(w[0].starts_with("pair a-b:"), "{w:?}");
    }

    #[test]
    fn curves_csv_rows() {
        let mut buf = Vec::new();
        let m = matrix();
        write_curves(&mut buf, [("random", &m)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("random,a-b,size,5,"));
    }
}
