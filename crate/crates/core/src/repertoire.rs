//! Cause and effect repertoires under the factorized-element convention.
//!
//! Effect repertoires are products of single-purview-element repertoires;
//! cause repertoires are products of single-mechanism-element likelihoods over
//! past purview states, renormalized under a uniform prior. Inputs that are
//! not conditioned on are averaged uniformly. A [`Subsystem`] additionally
//! freezes the elements outside its candidate set at their current state when
//! computing effects.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::mechanism::MechanismCut;
use crate::metric::{emd_product, Metric};
use crate::state::{compress, expand, NodeSubset, SystemState};
use crate::system::SystemCut;
use crate::tpm::Tpm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Cause,
    Effect,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Cause, Direction::Effect];
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Cause => "cause",
            Direction::Effect => "effect",
        })
    }
}

/// Distribution over the `2^|purview|` states of a purview; index bit `k` is
/// the `k`-th purview element in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repertoire {
    pub purview: NodeSubset,
    pub probs: Vec<f64>,
    // per-element on-probabilities when the repertoire is a product distribution
    #[serde(skip)]
    on_probs: Option<Vec<f64>>,
}

impl Repertoire {
    pub fn new(purview: NodeSubset, probs: Vec<f64>) -> Self {
        Repertoire { purview, probs, on_probs: None }
    }

    fn product(purview: NodeSubset, on: Vec<f64>) -> Self {
        let k = on.len();
        let probs = (0..1usize << k)
            .map(|z| {
                on.iter()
                    .enumerate()
                    .map(|(b, &p)| if z >> b & 1 == 1 { p } else { 1.0 - p })
                    .product()
            })
            .collect();
        Repertoire { purview, probs, on_probs: Some(on) }
    }

    pub fn uniform(purview: NodeSubset) -> Self {
        let k = purview.len();
        let on = vec![0.5; k];
        Repertoire::product(purview, on)
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Distance from `self` (intact) to `other` (partitioned) under `metric`.
    pub fn distance(&self, other: &Repertoire, metric: Metric) -> f64 {
        debug_assert_eq!(self.purview, other.purview);
        match (metric, &self.on_probs, &other.on_probs) {
            (Metric::Emd, Some(a), Some(b)) => emd_product(a, b),
            _ => metric.distance(&self.probs, &other.probs),
        }
    }
}

/// A candidate system: the TPM, the full current state, the candidate element
/// set, and an optional system cut applied to every repertoire.
#[derive(Debug, Clone)]
pub struct Subsystem<'a> {
    tpm: &'a Tpm,
    elements: NodeSubset,
    state: SystemState,
    metric: Metric,
    cut: Option<SystemCut>,
}

impl<'a> Subsystem<'a> {
    pub fn new(tpm: &'a Tpm, elements: NodeSubset, state: SystemState) -> Result<Self> {
        tpm.check_subset(elements)?;
        tpm.check_state(state)?;
        Ok(Subsystem { tpm, elements, state, metric: Metric::Emd, cut: None })
    }

    /// The whole system: nothing is frozen.
    pub fn whole(tpm: &'a Tpm, state: SystemState) -> Result<Self> {
        Self::new(tpm, tpm.all_elements(), state)
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_cut(mut self, cut: Option<SystemCut>) -> Self {
        self.cut = cut;
        self
    }

    pub fn tpm(&self) -> &'a Tpm {
        self.tpm
    }

    pub fn elements(&self) -> NodeSubset {
        self.elements
    }

    pub fn state(&self) -> SystemState {
        self.state
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn cut(&self) -> Option<&SystemCut> {
        self.cut.as_ref()
    }

    fn background(&self) -> NodeSubset {
        self.tpm.all_elements().difference(self.elements)
    }

    fn check_inside(&self, mask: NodeSubset) -> Result<()> {
        self.tpm.check_subset(mask)?;
        if !mask.is_subset_of(self.elements) {
            return Err(Error::MaskOutOfRange { mask: mask.0, n: self.tpm.n() });
        }
        Ok(())
    }

    fn system_severs(&self, direction: Direction, mech: usize, purview: usize) -> bool {
        self.cut.as_ref().is_some_and(|c| c.severs(direction, mech, purview))
    }

    pub fn repertoire(
        &self,
        direction: Direction,
        mechanism: NodeSubset,
        purview: NodeSubset,
    ) -> Result<Repertoire> {
        self.cut_repertoire(direction, mechanism, purview, None)
    }

    pub fn effect_repertoire(&self, mechanism: NodeSubset, purview: NodeSubset) -> Result<Repertoire> {
        self.repertoire(Direction::Effect, mechanism, purview)
    }

    pub fn cause_repertoire(&self, mechanism: NodeSubset, purview: NodeSubset) -> Result<Repertoire> {
        self.repertoire(Direction::Cause, mechanism, purview)
    }

    /// Repertoire with an empty mechanism.
    pub fn unconstrained_repertoire(&self, direction: Direction, purview: NodeSubset) -> Result<Repertoire> {
        self.repertoire(direction, NodeSubset::EMPTY, purview)
    }

    /// Repertoire with the links of `cut` (and of the subsystem's own cut, if any) noised.
    pub fn cut_repertoire(
        &self,
        direction: Direction,
        mechanism: NodeSubset,
        purview: NodeSubset,
        cut: Option<&MechanismCut>,
    ) -> Result<Repertoire> {
        self.check_inside(mechanism)?;
        self.check_inside(purview)?;
        if let Some(c) = cut {
            c.check_within(mechanism, purview)?;
        }
        let severed = |m: usize, p: usize| {
            cut.is_some_and(|c| c.severs(m, p)) || self.system_severs(direction, m, p)
        };
        match direction {
            Direction::Effect => Ok(self.effect_kernel(mechanism, purview, &severed)),
            Direction::Cause => self.cause_kernel(mechanism, purview, &severed),
        }
    }

    fn effect_kernel(
        &self,
        mechanism: NodeSubset,
        purview: NodeSubset,
        severed: &dyn Fn(usize, usize) -> bool,
    ) -> Repertoire {
        let all = self.tpm.all_elements();
        let background = self.background();
        let on: Vec<f64> = purview
            .elements()
            .map(|j| {
                let intact = NodeSubset::from_elements(mechanism.elements().filter(|&i| !severed(i, j)));
                let fixed = intact.union(background);
                average_node(self.tpm, j, true, fixed, self.state.0 & fixed.0, all.difference(fixed))
            })
            .collect();
        Repertoire::product(purview, on)
    }

    fn cause_kernel(
        &self,
        mechanism: NodeSubset,
        purview: NodeSubset,
        severed: &dyn Fn(usize, usize) -> bool,
    ) -> Result<Repertoire> {
        let all = self.tpm.all_elements();
        let size = 1usize << purview.len();
        let mut probs = vec![1.0; size];
        for i in mechanism.elements() {
            let on = self.state.bit(i);
            let cond = NodeSubset::from_elements(purview.elements().filter(|&j| !severed(i, j)));
            let free = all.difference(cond);
            // likelihood of element i's current value, per past state of its intact inputs
            let table: Vec<f64> = (0..1u32 << cond.len())
                .map(|c| average_node(self.tpm, i, on, cond, expand(c, cond.0), free))
                .collect();
            for (z, p) in probs.iter_mut().enumerate() {
                let past = expand(z as u32, purview.0);
                *p *= table[compress(past, cond.0) as usize];
            }
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::UnreachableState);
        }
        probs.iter_mut().for_each(|p| *p /= total);
        let mut rep = Repertoire::new(purview, probs);
        if mechanism.is_empty() {
            rep.on_probs = Some(vec![0.5; purview.len()]);
        }
        Ok(rep)
    }
}

/// Mean over the free bits of p(element `j` next = `on` | state), with the
/// bits in `fixed` set as in `fixed_bits`.
fn average_node(tpm: &Tpm, j: usize, on: bool, fixed: NodeSubset, fixed_bits: u32, free: NodeSubset) -> f64 {
    debug_assert_eq!(fixed.0 & free.0, 0);
    let base = fixed_bits & fixed.0;
    let mut acc = 0.0;
    let mut count = 0usize;
    for sub in free.subsets() {
        let p = tpm.node_on((base | sub.0) as usize, j);
        acc += if on { p } else { 1.0 - p };
        count += 1;
    }
    acc / count as f64
}

/// Effect repertoire of `mechanism` (in `mech_state`) over `purview` in the whole system.
pub fn effect_repertoire(
    tpm: &Tpm,
    mechanism: NodeSubset,
    mech_state: SystemState,
    purview: NodeSubset,
) -> Result<Repertoire> {
    Subsystem::whole(tpm, mech_state)?.effect_repertoire(mechanism, purview)
}

/// Cause repertoire of `mechanism` (in `mech_state`) over `purview` in the whole system.
pub fn cause_repertoire(
    tpm: &Tpm,
    mechanism: NodeSubset,
    mech_state: SystemState,
    purview: NodeSubset,
) -> Result<Repertoire> {
    Subsystem::whole(tpm, mech_state)?.cause_repertoire(mechanism, purview)
}

pub fn unconstrained_repertoire(tpm: &Tpm, purview: NodeSubset, direction: Direction) -> Result<Repertoire> {
    if purview.is_empty() {
        return Err(Error::EmptySubset("unconstrained_repertoire"));
    }
    Subsystem::whole(tpm, SystemState(0))?.unconstrained_repertoire(direction, purview)
}
