//! Learned per-robot hardware embeddings.
//!
//! Each robot id owns one learnable row with its own Adam moments; rows
//! are read as immutable snapshots during an episode and updated from
//! loss gradients during optimization. Unknown ids are an error during
//! training; fine-tuning explicitly creates fresh rows for new robots
//! while the network weights are reused.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::fmath;
use crate::nn::{adam_step, AdamConfig, NetParams};
use crate::rng::Rng;

/// Row initialization half-width: rows start uniform in [-0.1, 0.1].
pub const ROW_INIT: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    pub learning_rate: f64,
    ids: Vec<String>,
    rows: Vec<NetParams>,
    index: BTreeMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, learning_rate: f64) -> EmbeddingTable {
        EmbeddingTable {
            dim,
            learning_rate,
            ids: Vec::new(),
            rows: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Create a row for every robot id, uniform in [-ROW_INIT, ROW_INIT].
    pub fn init_rows<'a>(&mut self, ids: impl IntoIterator<Item = &'a str>, rng: &mut Rng) {
        for id in ids {
            self.ensure_row(id, rng);
        }
    }

    /// Row index for an id, creating a fresh random row if missing.
    pub fn ensure_row(&mut self, id: &str, rng: &mut Rng) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let mut row = NetParams::zeros(self.dim);
        for v in &mut row.values {
            *v = rng.uniform(-ROW_INIT, ROW_INIT);
        }
        let i = self.rows.len();
        self.rows.push(row);
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    pub fn row_index(&self, id: &str) -> CoreResult<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| CoreError::Lookup(format!("no embedding row for robot `{id}`")))
    }

    /// Current row values for a robot id.
    pub fn lookup(&self, id: &str) -> CoreResult<&[f64]> {
        Ok(self.rows[self.row_index(id)?].values.as_slice())
    }

    pub fn row(&self, idx: usize) -> &NetParams {
        &self.rows[idx]
    }

    pub fn row_mut(&mut self, idx: usize) -> &mut NetParams {
        &mut self.rows[idx]
    }

    /// Per-row Adam update from accumulated gradients keyed by row
    /// index. Rows without gradients are untouched.
    pub fn apply_gradients(&mut self, grads: &BTreeMap<usize, Vec<f64>>) -> CoreResult<()> {
        let cfg = AdamConfig::new(self.learning_rate);
        for (&idx, g) in grads {
            if g.len() != self.dim {
                return Err(CoreError::Dimension(format!(
                    "embedding grad dim {} != {}",
                    g.len(),
                    self.dim
                )));
            }
            let row = &mut self.rows[idx];
            row.grads.copy_from_slice(g);
            adam_step(row, &cfg);
        }
        Ok(())
    }

    /// Same, keyed by robot id.
    pub fn apply_gradients_by_id(&mut self, grads: &BTreeMap<String, Vec<f64>>) -> CoreResult<()> {
        let mut by_idx = BTreeMap::new();
        for (id, g) in grads {
            by_idx.insert(self.row_index(id)?, g.clone());
        }
        self.apply_gradients(&by_idx)
    }

    /// Rows exported as (id, values) pairs in insertion order.
    pub fn export(&self) -> Vec<(String, Vec<f64>)> {
        self.ids
            .iter()
            .cloned()
            .zip(self.rows.iter().map(|r| r.values.clone()))
            .collect()
    }
}

/// Spearman rank correlation with average ranks for ties. Returns None
/// when either input is constant (correlation undefined).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut out = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / fmath::sqrt(sxx * syy))
}

/// Smoothness summary: Spearman correlation between pairwise embedding
/// distances and pairwise differences of a physical parameter.
pub fn smoothness_correlation(rows: &[(String, Vec<f64>)], params: &[f64]) -> Option<f64> {
    if rows.len() != params.len() || rows.len() < 3 {
        return None;
    }
    let mut dists = Vec::new();
    let mut diffs = Vec::new();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let d: f64 = rows[i]
                .1
                .iter()
                .zip(&rows[j].1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            dists.push(fmath::sqrt(d));
            diffs.push((params[i] - params[j]).abs());
        }
    }
    spearman(&dists, &diffs)
}
