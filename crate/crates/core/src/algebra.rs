//! Tensor products of TPMs and approximate factorization into independent groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{compress, NodeSubset};
use crate::tpm::{Tpm, DEFAULT_ELEMENT_LIMIT};

/// Default tolerance for exact-product detection.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Suggested tolerance for TPMs estimated from samples.
pub const NOISY_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    /// Disjoint groups covering all elements, ordered by smallest element.
    pub groups: Vec<NodeSubset>,
    /// Group-marginal TPM per group, elements renumbered in ascending order.
    #[serde(skip)]
    pub factors: Vec<Tpm>,
    /// Max over rows of the total-variation distance to the product of factors.
    pub residual: f64,
}

impl Factorization {
    pub fn is_trivial(&self) -> bool {
        self.groups.len() <= 1
    }
}

/// `t1 ⊗ t2`; `t1`'s elements occupy the low bits.
pub fn tensor_product(t1: &Tpm, t2: &Tpm) -> Result<Tpm> {
    tensor_product_with_limit(t1, t2, DEFAULT_ELEMENT_LIMIT)
}

pub fn tensor_product_with_limit(t1: &Tpm, t2: &Tpm, limit: usize) -> Result<Tpm> {
    let n = t1.n() + t2.n();
    if n > limit {
        return Err(Error::TooManyElements { n, limit });
    }
    let (d1, d2) = (t1.dim(), t2.dim());
    let dim = d1 * d2;
    let mut data = vec![0.0; dim * dim];
    for (s, row) in data.chunks_mut(dim).enumerate() {
        let (lo, hi) = (s % d1, s / d1);
        let r1 = t1.row(lo);
        let r2 = t2.row(hi);
        for (t, v) in row.iter_mut().enumerate() {
            *v = r1[t % d1] * r2[t / d1];
        }
    }
    Ok(Tpm::from_data_unchecked(n, data))
}

/// Marginal TPM of `group`: other groups' inputs averaged uniformly, their
/// outputs summed out.
pub fn group_marginal(tpm: &Tpm, group: NodeSubset) -> Result<Tpm> {
    tpm.check_subset(group)?;
    let k = group.len();
    let gd = 1usize << k;
    let mut data = vec![0.0; gd * gd];
    let inputs = 1usize << (tpm.n() - k);
    for s in 0..tpm.dim() {
        let g = compress(s as u32, group.0) as usize;
        for (t, &p) in tpm.row(s).iter().enumerate() {
            if p != 0.0 {
                data[g * gd + compress(t as u32, group.0) as usize] += p;
            }
        }
    }
    data.iter_mut().for_each(|v| *v /= inputs as f64);
    Ok(Tpm::from_data_unchecked(k, data))
}

pub(crate) fn check_partition(n: usize, groups: &[NodeSubset]) -> Result<()> {
    let mut seen = 0u32;
    for g in groups {
        g.check(n)?;
        if g.is_empty() {
            return Err(Error::NotAPartition("empty group".into()));
        }
        if g.0 & seen != 0 {
            return Err(Error::NotAPartition(format!("group {g:?} overlaps another group")));
        }
        seen |= g.0;
    }
    if seen != NodeSubset::full(n).0 {
        return Err(Error::NotAPartition(format!(
            "groups cover {:?}, not all {n} elements",
            NodeSubset(seen)
        )));
    }
    Ok(())
}

/// Max over rows of the total-variation distance between `tpm` and the
/// product of its group marginals.
pub fn product_residual(tpm: &Tpm, groups: &[NodeSubset]) -> Result<f64> {
    check_partition(tpm.n(), groups)?;
    let marginals: Vec<Tpm> = groups.iter().map(|&g| group_marginal(tpm, g)).collect::<Result<_>>()?;
    Ok(residual_against(tpm, groups, &marginals))
}

fn residual_against(tpm: &Tpm, groups: &[NodeSubset], marginals: &[Tpm]) -> f64 {
    (0..tpm.dim())
        .into_par_iter()
        .map(|s| {
            let rows: Vec<&[f64]> = groups
                .iter()
                .zip(marginals)
                .map(|(g, m)| m.row(compress(s as u32, g.0) as usize))
                .collect();
            let tv: f64 = tpm
                .row(s)
                .iter()
                .enumerate()
                .map(|(t, &p)| {
                    let q: f64 = groups
                        .iter()
                        .zip(&rows)
                        .map(|(g, r)| r[compress(t as u32, g.0) as usize])
                        .product();
                    (p - q).abs()
                })
                .sum();
            0.5 * tv
        })
        .reduce(|| 0.0, f64::max)
}

/// Finest grouping whose product of group marginals reproduces `tpm` within `epsilon`.
///
/// Elements are linked when their pairwise marginal fails to split within
/// `epsilon`; linked components form the candidate groups. If the candidate
/// fails the full residual check, groups are merged greedily (smallest
/// resulting residual first) until it passes.
pub fn factorize(tpm: &Tpm, epsilon: f64) -> Result<Factorization> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} must be >= 0")));
    }
    let n = tpm.n();
    if n <= 1 {
        let groups = if n == 0 { vec![] } else { vec![NodeSubset::full(1)] };
        let factors = groups.iter().map(|_| tpm.clone()).collect();
        return Ok(Factorization { groups, factors, residual: 0.0 });
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let linked: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let pair = group_marginal(tpm, NodeSubset::from_elements([i, j]))?;
            Ok(product_residual(&pair, &[NodeSubset(1), NodeSubset(2)])? > epsilon)
        })
        .collect::<Result<_>>()?;

    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for (&(i, j), &l) in pairs.iter().zip(&linked) {
        if l {
            let (a, b) = (find(&mut root, i), find(&mut root, j));
            root[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<NodeSubset> = Vec::new();
    for i in 0..n {
        let r = find(&mut root, i);
        match groups.iter_mut().find(|g| g.elements().next() == Some(r)) {
            Some(g) => *g = g.union(NodeSubset::singleton(i)),
            None => groups.push(NodeSubset::singleton(i)),
        }
    }

    let mut residual = product_residual(tpm, &groups)?;
    while residual > epsilon && groups.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let merged = merge(&groups, a, b);
                let r = product_residual(tpm, &merged)?;
                if best.is_none_or(|(br, _, _)| r < br) {
                    best = Some((r, a, b));
                }
            }
        }
        let (r, a, b) = best.expect("at least two groups");
        groups = merge(&groups, a, b);
        residual = r;
    }
    if groups.len() == 1 {
        residual = 0.0;
    }
    let factors = groups.iter().map(|&g| group_marginal(tpm, g)).collect::<Result<_>>()?;
    Ok(Factorization { groups, factors, residual })
}

fn merge(groups: &[NodeSubset], a: usize, b: usize) -> Vec<NodeSubset> {
    let mut out: Vec<NodeSubset> = groups
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != b)
        .map(|(k, g)| if k == a { g.union(groups[b]) } else { *g })
        .collect();
    out.sort_by_key(|g| g.0.trailing_zeros());
    out
}

/// Product of the factors laid out over the original element positions.
pub fn reassemble(factorization: &Factorization, n: usize) -> Result<Tpm> {
    check_partition(n, &factorization.groups)?;
    let dim = 1usize << n;
    let mut data = vec![0.0; dim * dim];
    for s in 0..dim {
        for t in 0..dim {
            data[s * dim + t] = factorization
                .groups
                .iter()
                .zip(&factorization.factors)
                .map(|(g, f)| f.get(compress(s as u32, g.0) as usize, compress(t as u32, g.0) as usize))
                .product();
        }
    }
    Ok(Tpm::from_data_unchecked(n, data))
}

/// Whether no nontrivial grouping reproduces `tpm` within `epsilon`.
pub fn is_entangled(tpm: &Tpm, epsilon: f64) -> Result<bool> {
    Ok(tpm.n() > 1 && factorize(tpm, epsilon)?.is_trivial())
}
