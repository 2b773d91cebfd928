//! SMOTE oversampling: synthetic minority-class samples by interpolating
//! between a class member and one of its k nearest same-class neighbors.
//!
//! Neighbor search is exact brute force under Euclidean distance with ties
//! broken by smaller row index. Interpolation draws the source point, the
//! neighbor, and the coefficient lambda ~ U[0,1] from a seeded stream (one
//! substream per class), so resampling is reproducible from the seed.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::Rng;

use crate::data::{class_counts, ClassDistribution, Dataset};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Oversampling target: raise every class to the majority count, or to a
/// fixed count (classes already at or above it are left unchanged).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoteTarget {
    NotMajority,
    ToCount(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteParams {
    /// Neighbor count for the same-class search (capped at class size - 1).
    pub k: usize,
    pub target: SmoteTarget,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self {
            k: 5,
            target: SmoteTarget::NotMajority,
            seed: 0,
        }
    }
}

/// Indices of the `min(k, |class_rows|-1)` members of `class_rows` (excluding
/// `query`) nearest to row `query`, nearest first, distance ties broken by
/// smaller row index.
pub fn knn_within_class(
    x: &Array2<f64>,
    class_rows: &[usize],
    query: usize,
    k: usize,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Config("neighbor count k must be >= 1".into()));
    }
    if class_rows.len() < 2 {
        return Err(Error::Data("class too small for neighbor search".into()));
    }
    if !class_rows.contains(&query) {
        return Err(Error::Data(format!("query row {query} is not in the class")));
    }
    let q = x.row(query);
    // squared distance preserves the Euclidean ordering exactly
    let mut scored: Vec<(f64, usize)> = class_rows
        .iter()
        .filter(|&&r| r != query)
        .map(|&r| {
            let d2 = x
                .row(r)
                .iter()
                .zip(q.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (d2, r)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.truncate(k.min(class_rows.len() - 1));
    Ok(scored.into_iter().map(|(_, r)| r).collect())
}

// Convex form keeps coordinates non-negative and inside the endpoint range.
fn interpolate(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&ai, &bi)| (1.0 - lambda) * ai + lambda * bi)
        .collect()
}

/// Oversample `train` per `params`. The output starts with every original row
/// unchanged, in the original order, followed by synthetic rows class by
/// class. A class of size one is duplicated rather than interpolated.
pub fn smote(train: &Dataset, params: &SmoteParams) -> Result<Dataset> {
    if params.k == 0 {
        return Err(Error::Config("neighbor count k must be >= 1".into()));
    }
    let dist = class_counts(train);
    let counts = dist.counts();
    let majority = *counts.iter().max().expect("at least 2 classes");
    let target_for = |c: usize| -> usize {
        match params.target {
            SmoteTarget::NotMajority => majority,
            SmoteTarget::ToCount(n) => n.max(counts[c]),
        }
    };

    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); train.n_classes()];
    for (i, &l) in train.labels().iter().enumerate() {
        per_class[l].push(i);
    }

    let d = train.n_features();
    let mut synthetic: Vec<f64> = Vec::new();
    let mut synth_labels: Vec<usize> = Vec::new();
    for (class, rows) in per_class.iter().enumerate() {
        let need = target_for(class) - counts[class];
        if need == 0 {
            continue;
        }
        if rows.is_empty() {
            return Err(Error::Data(format!(
                "class '{}' is empty and cannot be oversampled",
                train.class_names()[class]
            )));
        }
        let mut rng = substream(params.seed, class as u64);
        if rows.len() == 1 {
            let row = train.row(rows[0]);
            for _ in 0..need {
                synthetic.extend(row.iter());
                synth_labels.push(class);
            }
            continue;
        }
        let neighbors: Vec<Vec<usize>> = rows
            .iter()
            .map(|&r| knn_within_class(train.features(), rows, r, params.k))
            .collect::<Result<_>>()?;
        for _ in 0..need {
            let i = rng.gen_range(0..rows.len());
            let nn = neighbors[i][rng.gen_range(0..neighbors[i].len())];
            let lambda: f64 = rng.gen();
            let row = interpolate(
                train.row(rows[i]).to_slice().expect("contiguous row"),
                train.row(nn).to_slice().expect("contiguous row"),
                lambda,
            );
            synthetic.extend(row);
            synth_labels.push(class);
        }
    }

    let m_out = train.n_samples() + synth_labels.len();
    let mut features = Array2::zeros((m_out, d));
    features
        .slice_mut(ndarray::s![..train.n_samples(), ..])
        .assign(train.features());
    for (i, chunk) in synthetic.chunks(d).enumerate() {
        for (j, &v) in chunk.iter().enumerate() {
            features[[train.n_samples() + i, j]] = v;
        }
    }
    let mut labels = train.labels().to_vec();
    labels.extend(synth_labels);
    Dataset::new(features, labels, train.class_names().to_vec())
}

/// Per-class before/after counts with synthetic deltas, as an aligned table.
pub fn resample_counts_report(before: &ClassDistribution, after: &ClassDistribution) -> Result<String> {
    if before.n_classes() != after.n_classes() {
        return Err(Error::Data(format!(
            "class count mismatch: {} before vs {} after",
            before.n_classes(),
            after.n_classes()
        )));
    }
    let mut out = String::from("class  before  after  synthetic\n");
    for (c, (&b, &a)) in before.counts().iter().zip(after.counts()).enumerate() {
        let _ = writeln!(out, "{c:<5}  {b:<6}  {a:<5}  +{}", a.saturating_sub(b));
    }
    let _ = writeln!(
        out,
        "total  {:<6}  {:<5}  +{}",
        before.total(),
        after.total(),
        after.total().saturating_sub(before.total())
    );
    Ok(out)
}
