//! Mechanism-level integration: cuts, small phi, core purviews, distinctions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::repertoire::{Direction, Repertoire, Subsystem};
use crate::state::{NodeSubset, SystemState};
use crate::tpm::Tpm;
use crate::{TIE_TOL, ZERO_TOL};

/// A set of severed (mechanism element, purview element) links.
///
/// Cuts produced by [`admissible_cuts`] also record the bipartition they came
/// from: `parts = (mechanism part, purview part)` stay connected to each
/// other, as do their complements; all cross links are severed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismCut {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<(NodeSubset, NodeSubset)>,
    severed: Vec<(usize, usize)>,
}

impl MechanismCut {
    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let set: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        MechanismCut { parts: None, severed: set.into_iter().collect() }
    }

    /// The cut that keeps `mech_part` with `purview_part` and the complements together.
    pub fn bipartition(
        mechanism: NodeSubset,
        purview: NodeSubset,
        mech_part: NodeSubset,
        purview_part: NodeSubset,
    ) -> Self {
        let mech_rest = mechanism.difference(mech_part);
        let purview_rest = purview.difference(purview_part);
        let mut pairs = BTreeSet::new();
        for m in mech_part.elements() {
            pairs.extend(purview_rest.elements().map(|p| (m, p)));
        }
        for m in mech_rest.elements() {
            pairs.extend(purview_part.elements().map(|p| (m, p)));
        }
        MechanismCut { parts: Some((mech_part, purview_part)), severed: pairs.into_iter().collect() }
    }

    pub fn null() -> Self {
        MechanismCut { parts: None, severed: Vec::new() }
    }

    /// Every mechanism-purview link severed.
    pub fn full(mechanism: NodeSubset, purview: NodeSubset) -> Self {
        Self::bipartition(mechanism, purview, NodeSubset::EMPTY, purview)
    }

    pub fn severed(&self) -> &[(usize, usize)] {
        &self.severed
    }

    pub fn is_null(&self) -> bool {
        self.severed.is_empty()
    }

    pub fn severs(&self, mechanism_elem: usize, purview_elem: usize) -> bool {
        self.severed.binary_search(&(mechanism_elem, purview_elem)).is_ok()
    }

    pub fn check_within(&self, mechanism: NodeSubset, purview: NodeSubset) -> Result<()> {
        match self
            .severed
            .iter()
            .find(|(m, p)| !mechanism.contains(*m) || !purview.contains(*p))
        {
            Some(&(m, p)) => Err(Error::CutPairOutside { mechanism: m, purview: p }),
            None => Ok(()),
        }
    }
}

/// Non-null bipartition cuts of `mechanism x purview`, in canonical order:
/// mechanism part ascending, then purview part ascending, first occurrence of
/// each distinct severed set kept.
pub fn admissible_cuts(mechanism: NodeSubset, purview: NodeSubset) -> Vec<MechanismCut> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mp in mechanism.subsets() {
        for pp in purview.subsets() {
            let cut = MechanismCut::bipartition(mechanism, purview, mp, pp);
            if cut.is_null() || !seen.insert(cut.severed.clone()) {
                continue;
            }
            out.push(cut);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallPhi {
    pub phi: f64,
    /// `None` when no admissible cut exists (empty mechanism).
    pub cut: Option<MechanismCut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorePurview {
    pub direction: Direction,
    pub purview: NodeSubset,
    pub phi: f64,
    pub repertoire: Repertoire,
    pub cut: Option<MechanismCut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distinction {
    pub mechanism: NodeSubset,
    pub cause: CorePurview,
    pub effect: CorePurview,
    pub phi: f64,
}

impl Distinction {
    pub fn side(&self, direction: Direction) -> &CorePurview {
        match direction {
            Direction::Cause => &self.cause,
            Direction::Effect => &self.effect,
        }
    }
}

impl Subsystem<'_> {
    pub fn small_phi(
        &self,
        direction: Direction,
        mechanism: NodeSubset,
        purview: NodeSubset,
    ) -> Result<SmallPhi> {
        if purview.is_empty() {
            return Err(Error::EmptySubset("small_phi purview"));
        }
        let cuts = admissible_cuts(mechanism, purview);
        let intact = match self.repertoire(direction, mechanism, purview) {
            Ok(r) => r,
            Err(Error::UnreachableState) => {
                return Ok(SmallPhi { phi: 0.0, cut: cuts.into_iter().next() })
            }
            Err(e) => return Err(e),
        };
        let mut values = Vec::with_capacity(cuts.len());
        for cut in &cuts {
            let partitioned = self.cut_repertoire(direction, mechanism, purview, Some(cut))?;
            values.push(intact.distance(&partitioned, self.metric()));
        }
        Ok(match pick_min(&values) {
            Some(k) => SmallPhi { phi: values[k].max(0.0), cut: Some(cuts[k].clone()) },
            None => SmallPhi { phi: 0.0, cut: None },
        })
    }

    /// The purview maximizing small phi; `None` if every purview has phi = 0.
    pub fn core_purview(&self, direction: Direction, mechanism: NodeSubset) -> Result<Option<CorePurview>> {
        if mechanism.is_empty() {
            return Err(Error::EmptySubset("core_purview mechanism"));
        }
        let candidates = self.elements().nonempty_subsets_by_size();
        let mut phis = Vec::with_capacity(candidates.len());
        for &p in &candidates {
            phis.push(self.small_phi(direction, mechanism, p)?);
        }
        let values: Vec<f64> = phis.iter().map(|s| s.phi).collect();
        let Some(k) = pick_max(&values) else { return Ok(None) };
        if values[k] <= ZERO_TOL {
            return Ok(None);
        }
        let purview = candidates[k];
        let repertoire = self.repertoire(direction, mechanism, purview)?;
        let best = phis.swap_remove(k);
        Ok(Some(CorePurview { direction, purview, phi: best.phi, repertoire, cut: best.cut }))
    }

    /// Core cause and core effect of `mechanism`; `None` if either side is reducible.
    pub fn distinction(&self, mechanism: NodeSubset) -> Result<Option<Distinction>> {
        let Some(cause) = self.core_purview(Direction::Cause, mechanism)? else {
            return Ok(None);
        };
        let Some(effect) = self.core_purview(Direction::Effect, mechanism)? else {
            return Ok(None);
        };
        let phi = cause.phi.min(effect.phi);
        Ok(Some(Distinction { mechanism, cause, effect, phi }))
    }
}

/// First index whose value is within [`TIE_TOL`] of the minimum.
pub(crate) fn pick_min(values: &[f64]) -> Option<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v <= min + TIE_TOL)
}

/// First index whose value is within [`TIE_TOL`] of the maximum.
pub(crate) fn pick_max(values: &[f64]) -> Option<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v >= max - TIE_TOL)
}

pub fn apply_cut(
    tpm: &Tpm,
    mechanism: NodeSubset,
    mech_state: SystemState,
    purview: NodeSubset,
    direction: Direction,
    cut: &MechanismCut,
) -> Result<Repertoire> {
    Subsystem::whole(tpm, mech_state)?.cut_repertoire(direction, mechanism, purview, Some(cut))
}

pub fn small_phi(
    tpm: &Tpm,
    mechanism: NodeSubset,
    mech_state: SystemState,
    purview: NodeSubset,
    direction: Direction,
    metric: Metric,
) -> Result<SmallPhi> {
    Subsystem::whole(tpm, mech_state)?
        .with_metric(metric)
        .small_phi(direction, mechanism, purview)
}

pub fn core_purview(
    tpm: &Tpm,
    mechanism: NodeSubset,
    mech_state: SystemState,
    direction: Direction,
    metric: Metric,
) -> Result<Option<CorePurview>> {
    Subsystem::whole(tpm, mech_state)?
        .with_metric(metric)
        .core_purview(direction, mechanism)
}

pub fn distinction(
    tpm: &Tpm,
    mechanism: NodeSubset,
    state: SystemState,
    metric: Metric,
) -> Result<Option<Distinction>> {
    Subsystem::whole(tpm, state)?.with_metric(metric).distinction(mechanism)
}
