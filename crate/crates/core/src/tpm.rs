//! State-by-state transition probability matrices over binary elements.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::state::{NodeSubset, SystemState, MAX_ELEMENTS};

/// Input rows may deviate from 1 by this much and are renormalized.
pub const INPUT_ROW_TOLERANCE: f64 = 1e-6;
/// Internal stochasticity checks.
pub const ROW_TOLERANCE: f64 = 1e-9;
/// Default element limit for constructed TPMs (a 2^12 x 2^12 dense matrix).
pub const DEFAULT_ELEMENT_LIMIT: usize = 12;

pub const CONVENTION: &str = "little-endian";

/// Row-stochastic one-step transition matrix, `rows[s][s'] = p(next = s' | current = s)`.
#[derive(Debug, Clone)]
pub struct Tpm {
    n: usize,
    data: Vec<f64>,
    labels: Option<Vec<String>>,
    // p(element j is 1 at t+1 | current state s), laid out [s * n + j]
    node_on: OnceLock<Vec<f64>>,
}

impl PartialEq for Tpm {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.data == other.data && self.labels == other.labels
    }
}

impl Tpm {
    /// Validates a raw matrix; rows within [`INPUT_ROW_TOLERANCE`] of 1 are renormalized.
    pub fn validate(raw: &[Vec<f64>], n: usize) -> Result<Self> {
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements { n, limit: MAX_ELEMENTS });
        }
        let dim = 1usize << n;
        if raw.len() != dim {
            return Err(Error::DimensionMismatch {
                n,
                expected: dim,
                found: format!("{} rows", raw.len()),
            });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in raw.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    n,
                    expected: dim,
                    found: format!("row {r} with {} entries", row.len()),
                });
            }
            let mut sum = 0.0;
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry { row: r, col: c });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row: r, col: c, value: v });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > INPUT_ROW_TOLERANCE {
                return Err(Error::RowNotStochastic { row: r, sum });
            }
            data.extend(row.iter().map(|v| v / sum));
        }
        Ok(Self::from_data_unchecked(n, data))
    }

    /// Builds from a flat row-major buffer, checking stochasticity at the internal tolerance.
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements { n, limit: MAX_ELEMENTS });
        }
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                n,
                expected: dim,
                found: format!("{} entries", data.len()),
            });
        }
        for (r, row) in data.chunks(dim).enumerate() {
            let sum: f64 = row.iter().sum();
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEntry { row: r, col: c });
            }
            if let Some(c) = row.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeEntry { row: r, col: c, value: row[c] });
            }
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::RowNotStochastic { row: r, sum });
            }
        }
        Ok(Self::from_data_unchecked(n, data))
    }

    pub(crate) fn from_data_unchecked(n: usize, data: Vec<f64>) -> Self {
        Tpm { n, data, labels: None, node_on: OnceLock::new() }
    }

    /// Deterministic TPM from a next-state function.
    pub fn from_fn<F: Fn(u32) -> u32>(n: usize, next: F) -> Result<Self> {
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements { n, limit: MAX_ELEMENTS });
        }
        let dim = 1usize << n;
        let mut data = vec![0.0; dim * dim];
        for s in 0..dim {
            let t = next(s as u32) as usize;
            if t >= dim {
                return Err(Error::StateOutOfRange { index: t as u32, n });
            }
            data[s * dim + t] = 1.0;
        }
        Ok(Self::from_data_unchecked(n, data))
    }

    /// TPM whose elements update independently; `on(s, j)` is p(element j = 1 next | s).
    pub fn from_node_probs<F: Fn(u32, usize) -> f64>(n: usize, on: F) -> Result<Self> {
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements { n, limit: MAX_ELEMENTS });
        }
        let dim = 1usize << n;
        let mut data = vec![0.0; dim * dim];
        for s in 0..dim {
            let p: Vec<f64> = (0..n).map(|j| on(s as u32, j)).collect();
            if let Some(j) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidDistribution(format!(
                    "p(element {j} on | state {s}) = {}",
                    p[j]
                )));
            }
            for t in 0..dim {
                data[s * dim + t] = (0..n)
                    .map(|j| if t >> j & 1 == 1 { p[j] } else { 1.0 - p[j] })
                    .product();
            }
        }
        Tpm::from_flat(n, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |s| s)
    }

    /// Every row uniform: each element is a fair coin regardless of input.
    pub fn uniform_noise(n: usize) -> Result<Self> {
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements { n, limit: MAX_ELEMENTS });
        }
        let dim = 1usize << n;
        Ok(Self::from_data_unchecked(n, vec![1.0 / dim as f64; dim * dim]))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LabelCount { n: self.n, found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let d = self.dim();
        &self.data[s * d..(s + 1) * d]
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.dim() + to]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim()).map(|r| r.to_vec()).collect()
    }

    pub fn all_elements(&self) -> NodeSubset {
        NodeSubset::full(self.n)
    }

    /// p(element `j` is on at the next step | current state `s`).
    pub fn node_on(&self, s: usize, j: usize) -> f64 {
        self.node_table()[s * self.n + j]
    }

    fn node_table(&self) -> &[f64] {
        self.node_on.get_or_init(|| {
            let n = self.n;
            let dim = self.dim();
            let mut table = vec![0.0; dim * n];
            for s in 0..dim {
                let row = self.row(s);
                for (t, &p) in row.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        if t >> j & 1 == 1 {
                            table[s * n + j] += p;
                        }
                    }
                }
            }
            table
        })
    }

    pub fn check_subset(&self, subset: NodeSubset) -> Result<NodeSubset> {
        subset.check(self.n)
    }

    pub fn check_state(&self, state: SystemState) -> Result<SystemState> {
        state.check(self.n)
    }

    /// Relabels elements: old element `i` becomes new element `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Tpm> {
        let n = self.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::NotAPartition(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        let dim = self.dim();
        let map = |s: usize| -> usize {
            (0..n).fold(0, |acc, i| acc | ((s >> i & 1) << perm[i]))
        };
        let mut data = vec![0.0; dim * dim];
        for s in 0..dim {
            let ns = map(s);
            for t in 0..dim {
                data[ns * dim + map(t)] = self.get(s, t);
            }
        }
        let mut out = Tpm::from_data_unchecked(n, data);
        if let Some(labels) = &self.labels {
            let mut new_labels = labels.clone();
            for (i, l) in labels.iter().enumerate() {
                new_labels[perm[i]] = l.clone();
            }
            out.labels = Some(new_labels);
        }
        Ok(out)
    }

    /// Maximum absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Tpm) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> TpmFile {
        TpmFile {
            n: self.n,
            convention: CONVENTION.to_string(),
            tpm: self.rows(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TpmFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("tpm json: {e}")))?;
        file.into_tpm()
    }
}

/// Validates a raw matrix as a TPM over `n` elements.
pub fn validate_tpm(raw: &[Vec<f64>], n: usize) -> Result<Tpm> {
    Tpm::validate(raw, n)
}

/// On-disk TPM layout.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TpmFile {
    pub n: usize,
    pub convention: String,
    pub tpm: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl TpmFile {
    pub fn into_tpm(self) -> Result<Tpm> {
        if self.convention != CONVENTION {
            return Err(Error::UnknownConvention(self.convention));
        }
        let tpm = Tpm::validate(&self.tpm, self.n)?;
        match self.labels {
            Some(labels) => tpm.with_labels(labels),
            None => Ok(tpm),
        }
    }
}
