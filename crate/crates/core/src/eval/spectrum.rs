use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::subspace::{autocorrelation_spectrum, normalize_columns};

/// Eigenvalue curves of every class word subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub classes: Vec<String>,
    /// Per class, all `p` eigenvalues divided by the largest.
    pub normalized: Vec<Vec<f64>>,
    /// Per class, fraction of the eigenvalue total held by the first `k`.
    pub cumulative: Vec<Vec<f64>>,
    pub mean_normalized: Vec<f64>,
    pub std_normalized: Vec<f64>,
    pub mean_cumulative: Vec<f64>,
    pub std_cumulative: Vec<f64>,
}

/// Spectrum of the uncentered autocorrelation matrix of each class's
/// distinct in-vocabulary words. Standard deviations across classes use
/// the `n − 1` denominator.
pub fn spectrum_report(corpus: &Corpus, embeddings: &EmbeddingTable, normalize_vectors: bool) -> Result<SpectrumReport> {
    let spectra = (0..corpus.classes().len())
        .into_par_iter()
        .map(|c| {
            let lookup = embeddings.lookup_all(corpus.class_tokens(c));
            if lookup.is_empty() {
                return Err(Error::EmptyClass(corpus.classes()[c].clone()));
            }
            let x = if normalize_vectors {
                normalize_columns(&lookup.vectors)?
            } else {
                lookup.vectors
            };
            autocorrelation_spectrum(&x)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut normalized = Vec::with_capacity(spectra.len());
    let mut cumulative = Vec::with_capacity(spectra.len());
    for values in &spectra {
        let largest = values[0];
        let total: f64 = values.iter().sum();
        normalized.push(values.iter().map(|v| v / largest).collect::<Vec<_>>());
        let mut running = 0.0;
        cumulative.push(
            values
                .iter()
                .map(|v| {
                    running += v;
                    (running / total).min(1.0)
                })
                .collect::<Vec<_>>(),
        );
    }
    let (mean_normalized, std_normalized) = column_stats(&normalized);
    let (mean_cumulative, std_cumulative) = column_stats(&cumulative);
    Ok(SpectrumReport {
        classes: corpus.classes().to_vec(),
        normalized,
        cumulative,
        mean_normalized,
        std_normalized,
        mean_cumulative,
        std_cumulative,
    })
}

fn column_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let len = rows[0].len();
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for k in 0..len {
        let m = rows.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        mean[k] = m;
        if n > 1 {
            std[k] = (rows.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        }
    }
    (mean, std)
}

impl SpectrumReport {
    /// Mean cumulative variance fraction over classes at `k` dimensions.
    pub fn mean_cumulative_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.mean_cumulative.get(i)).copied()
    }

    /// Tab-separated table, one row per eigenvalue index `k` (from 1).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\tmean_normalized\tstd_normalized\tmean_cumulative\tstd_cumulative");
        for c in &self.classes {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
        for k in 0..self.mean_normalized.len() {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                k + 1,
                self.mean_normalized[k],
                self.std_normalized[k],
                self.mean_cumulative[k],
                self.std_cumulative[k]
            );
            for curve in &self.normalized {
                let _ = write!(out, "\t{}", curve[k]);
            }
            out.push('\n');
        }
        out
    }
}
