//! Coarse-graining over elements, states and updates, and the search for
//! grains with maximal cause-effect power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::check_partition;
use crate::error::{Error, Result};
use crate::state::{set_partitions, NodeSubset, SystemState};
use crate::system::{find_complexes, PhiConfig};
use crate::tpm::{Tpm, DEFAULT_ELEMENT_LIMIT};

/// Grains whose macro big phi lies within this of the maximum are kept.
pub const COEXISTENCE_TOL: f64 = 1e-9;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 100_000;

/// Micro elements grouped into macro elements; a macro element is on when at
/// least `threshold` of its micro elements are on. `stride` micro updates make
/// one macro update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GrainFile", try_from = "GrainFile")]
pub struct CoarseGraining {
    groups: Vec<NodeSubset>,
    thresholds: Vec<usize>,
    stride: usize,
}

/// On-disk grain layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrainFile {
    pub groups: Vec<Vec<usize>>,
    pub thresholds: Vec<usize>,
    pub stride: usize,
}

impl From<CoarseGraining> for GrainFile {
    fn from(g: CoarseGraining) -> Self {
        GrainFile {
            groups: g.groups.iter().map(|s| s.elements().collect()).collect(),
            thresholds: g.thresholds,
            stride: g.stride,
        }
    }
}

impl TryFrom<GrainFile> for CoarseGraining {
    type Error = Error;

    fn try_from(f: GrainFile) -> Result<Self> {
        let groups = f
            .groups
            .iter()
            .map(|g| {
                if g.iter().any(|&i| i >= crate::state::MAX_ELEMENTS) {
                    return Err(Error::InvalidGrain(format!("element id out of range in {g:?}")));
                }
                let s = NodeSubset::from_elements(g.iter().copied());
                if s.len() != g.len() {
                    return Err(Error::InvalidGrain(format!("repeated element in {g:?}")));
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        CoarseGraining::new(groups, f.thresholds, f.stride)
    }
}

impl CoarseGraining {
    pub fn new(groups: Vec<NodeSubset>, thresholds: Vec<usize>, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidGrain("stride must be >= 1".into()));
        }
        if groups.len() != thresholds.len() {
            return Err(Error::InvalidGrain(format!(
                "{} groups but {} thresholds",
                groups.len(),
                thresholds.len()
            )));
        }
        let mut seen = 0u32;
        for (g, &t) in groups.iter().zip(&thresholds) {
            if g.is_empty() || g.0 & seen != 0 {
                return Err(Error::InvalidGrain(format!("group {g:?} is empty or overlaps")));
            }
            seen |= g.0;
            // thresholds outside 1..=|g| would map every micro state to one value
            if t == 0 || t > g.len() {
                return Err(Error::InvalidGrain(format!(
                    "threshold {t} not surjective for group of size {}",
                    g.len()
                )));
            }
        }
        Ok(CoarseGraining { groups, thresholds, stride })
    }

    /// Singleton groups, identity maps, stride 1.
    pub fn trivial(n: usize) -> Self {
        CoarseGraining {
            groups: (0..n).map(NodeSubset::singleton).collect(),
            thresholds: vec![1; n],
            stride: 1,
        }
    }

    /// Groups with majority-style thresholds `ceil(|g| / 2)`.
    pub fn with_default_thresholds(groups: Vec<NodeSubset>, stride: usize) -> Result<Self> {
        let thresholds = groups.iter().map(|g| g.len().div_ceil(2)).collect();
        Self::new(groups, thresholds, stride)
    }

    pub fn groups(&self) -> &[NodeSubset] {
        &self.groups
    }

    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn macro_elements(&self) -> usize {
        self.groups.len()
    }

    pub fn check(&self, n: usize) -> Result<()> {
        check_partition(n, &self.groups).map_err(|e| Error::InvalidGrain(e.to_string()))
    }

    pub fn macro_state(&self, micro: u32) -> u32 {
        self.groups
            .iter()
            .zip(&self.thresholds)
            .enumerate()
            .fold(0, |acc, (k, (g, &t))| {
                acc | (((micro & g.0).count_ones() as usize >= t) as u32) << k
            })
    }

    /// Compact label, e.g. `{0,1}>=1|{2}>=1@2`.
    pub fn label(&self) -> String {
        let groups: Vec<String> = self
            .groups
            .iter()
            .zip(&self.thresholds)
            .map(|(g, t)| format!("{g:?}>={t}"))
            .collect();
        format!("{}@{}", groups.join("|"), self.stride)
    }
}

fn matmul(a: &Tpm, b: &Tpm) -> Tpm {
    let d = a.dim();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        let row = &mut out[i * d..(i + 1) * d];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Tpm::from_data_unchecked(a.n(), out)
}

/// The `k`-step TPM.
pub fn temporal_grain(tpm: &Tpm, k: usize) -> Result<Tpm> {
    if k == 0 {
        return Err(Error::InvalidGrain("temporal stride must be >= 1".into()));
    }
    if tpm.n() > DEFAULT_ELEMENT_LIMIT {
        return Err(Error::TooManyElements { n: tpm.n(), limit: DEFAULT_ELEMENT_LIMIT });
    }
    let mut result = tpm.clone();
    for _ in 1..k {
        result = matmul(&result, tpm);
    }
    Ok(result)
}

/// Stationary distribution by power iteration on the lazy chain `(I + T) / 2`.
pub fn stationary_distribution(tpm: &Tpm) -> Result<Vec<f64>> {
    let d = tpm.dim();
    let mut pi = vec![1.0 / d as f64; d];
    let mut next = vec![0.0; d];
    for _ in 0..STATIONARY_MAX_ITER {
        next.iter_mut().zip(&pi).for_each(|(n, p)| *n = 0.5 * p);
        for (s, &p) in pi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (n, &t) in next.iter_mut().zip(tpm.row(s)) {
                *n += 0.5 * p * t;
            }
        }
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < STATIONARY_TOL {
            return Ok(pi);
        }
    }
    Err(Error::StationaryNotConverged(STATIONARY_MAX_ITER))
}

/// Macro TPM under `grain`; micro states within a macro state are weighted by
/// `weights` (uniform when `None`).
pub fn coarse_grain(tpm: &Tpm, grain: &CoarseGraining, weights: Option<&[f64]>) -> Result<Tpm> {
    grain.check(tpm.n())?;
    if let Some(w) = weights {
        if w.len() != tpm.dim() || w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights must be {} non-negative numbers",
                tpm.dim()
            )));
        }
    }
    let stepped = temporal_grain(tpm, grain.stride())?;
    let m = grain.macro_elements();
    let md = 1usize << m;
    let map: Vec<usize> = (0..tpm.dim()).map(|s| grain.macro_state(s as u32) as usize).collect();
    let mut data = vec![0.0; md * md];
    let mut mass = vec![0.0; md];
    for (s, &ms) in map.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[s]);
        if w == 0.0 {
            continue;
        }
        mass[ms] += w;
        for (t, &p) in stepped.row(s).iter().enumerate() {
            data[ms * md + map[t]] += w * p;
        }
    }
    for (ms, &total) in mass.iter().enumerate() {
        if total <= 0.0 {
            return Err(Error::ZeroWeightMacroState(ms));
        }
        data[ms * md..(ms + 1) * md].iter_mut().for_each(|v| *v /= total);
    }
    Tpm::from_flat(m, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainBudget {
    /// Largest micro system searched exhaustively.
    pub max_elements: usize,
    /// Cap on the number of grains evaluated.
    pub max_grains: usize,
    pub strides: Vec<usize>,
}

impl Default for GrainBudget {
    fn default() -> Self {
        GrainBudget { max_elements: 8, max_grains: 100_000, strides: vec![1, 2, 4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainResult {
    pub grain: CoarseGraining,
    /// Largest complex big phi of the macro system in the mapped state.
    pub big_phi: f64,
    /// Position in the canonical enumeration.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrainSearch {
    /// Every evaluated grain, canonical order.
    pub evaluated: Vec<GrainResult>,
    /// Grains within [`COEXISTENCE_TOL`] of the maximum, by descending big phi.
    pub maximal: Vec<GrainResult>,
    /// Set when the budget stopped enumeration early.
    pub partial: bool,
}

/// Grains in canonical order: set partitions (restricted growth order), then
/// thresholds (odometer, first group slowest), then strides as listed.
pub fn enumerate_grains(n: usize, strides: &[usize], limit: usize) -> (Vec<CoarseGraining>, bool) {
    let mut out = Vec::new();
    for groups in set_partitions(n) {
        let sizes: Vec<usize> = groups.iter().map(|g| g.len()).collect();
        let mut thresholds = vec![1usize; groups.len()];
        loop {
            for &stride in strides {
                if out.len() >= limit {
                    return (out, true);
                }
                out.push(CoarseGraining { groups: groups.clone(), thresholds: thresholds.clone(), stride });
            }
            // odometer, last group fastest
            let mut k = thresholds.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if thresholds[k] < sizes[k] {
                    thresholds[k] += 1;
                    thresholds[k + 1..].iter_mut().for_each(|t| *t = 1);
                    break;
                }
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX || thresholds.is_empty() {
                break;
            }
        }
    }
    (out, false)
}

pub fn grain_search(tpm: &Tpm, state: SystemState, budget: &GrainBudget, config: &PhiConfig) -> Result<GrainSearch> {
    tpm.check_state(state)?;
    if tpm.n() > budget.max_elements {
        return Err(Error::TooManyElements { n: tpm.n(), limit: budget.max_elements });
    }
    if budget.strides.is_empty() || budget.strides.contains(&0) {
        return Err(Error::InvalidConfig("strides must be non-empty and >= 1".into()));
    }
    let (grains, partial) = enumerate_grains(tpm.n(), &budget.strides, budget.max_grains);
    let evaluated: Vec<GrainResult> = grains
        .into_par_iter()
        .enumerate()
        .map(|(index, grain)| {
            let macro_tpm = coarse_grain(tpm, &grain, None)?;
            let macro_state = SystemState(grain.macro_state(state.0));
            let search = find_complexes(&macro_tpm, macro_state, config)?;
            Ok(GrainResult { grain, big_phi: search.max_phi(), index })
        })
        .collect::<Result<_>>()?;
    let best = evaluated.iter().map(|r| r.big_phi).fold(f64::NEG_INFINITY, f64::max);
    let mut maximal: Vec<GrainResult> = evaluated
        .iter()
        .filter(|r| r.big_phi >= best - COEXISTENCE_TOL)
        .cloned()
        .collect();
    maximal.sort_by(|a, b| b.big_phi.total_cmp(&a.big_phi).then(a.index.cmp(&b.index)));
    Ok(GrainSearch { evaluated, maximal, partial })
}
