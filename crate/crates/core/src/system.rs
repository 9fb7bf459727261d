//! System-level integration: directed system cuts, big phi, complexes and
//! cause-effect structures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mechanism::{pick_min, Distinction};
use crate::metric::Metric;
use crate::repertoire::{Direction, Subsystem};
use crate::state::{NodeSubset, SystemState};
use crate::tpm::Tpm;
use crate::{TIE_TOL, ZERO_TOL};

/// Directed system cut: every dependency of a `to` element's next state on a
/// `from` element's current state is noised. A singleton candidate uses
/// `from == to`, which severs the element's self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemCut {
    pub from: NodeSubset,
    pub to: NodeSubset,
}

impl SystemCut {
    /// Whether the (mechanism element, purview element) link is noised in `direction`.
    ///
    /// Effects run current mechanism -> next purview; causes run past purview ->
    /// current mechanism.
    pub fn severs(&self, direction: Direction, mechanism_elem: usize, purview_elem: usize) -> bool {
        match direction {
            Direction::Effect => self.from.contains(mechanism_elem) && self.to.contains(purview_elem),
            Direction::Cause => self.from.contains(purview_elem) && self.to.contains(mechanism_elem),
        }
    }

    /// Maximum entropy in bits of the smaller side.
    pub fn normalization(&self) -> f64 {
        self.from.len().min(self.to.len()).max(1) as f64
    }
}

/// All directed bipartitions of `subset` in ascending order of the `from` mask.
pub fn directed_cuts(subset: NodeSubset) -> Vec<SystemCut> {
    if subset.len() == 1 {
        return vec![SystemCut { from: subset, to: subset }];
    }
    subset
        .subsets()
        .filter(|a| !a.is_empty() && *a != subset)
        .map(|a| SystemCut { from: a, to: subset.difference(a) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PhiMode {
    /// Distance between intact and cut whole-candidate repertoires.
    #[default]
    #[serde(rename = "mip")]
    Mip,
    /// Summed loss of distinction phi under the cut.
    #[serde(rename = "sum-distinctions")]
    SumDistinctions,
}

impl PhiMode {
    pub fn name(self) -> &'static str {
        match self {
            PhiMode::Mip => "mip",
            PhiMode::SumDistinctions => "sum-distinctions",
        }
    }
}

impl fmt::Display for PhiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mip" => Ok(PhiMode::Mip),
            "sum-distinctions" => Ok(PhiMode::SumDistinctions),
            other => Err(Error::InvalidConfig(format!("unknown phi mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiConfig {
    pub metric: Metric,
    pub mode: PhiMode,
    /// Largest relation order computed (2 or 3).
    pub relations_order: usize,
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig { metric: Metric::Emd, mode: PhiMode::Mip, relations_order: 2 }
    }
}

impl PhiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.relations_order) {
            return Err(Error::InvalidConfig(format!(
                "relations order {} outside 2..=3",
                self.relations_order
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemPhi {
    pub subset: NodeSubset,
    pub big_phi: f64,
    pub cut: SystemCut,
}

pub fn system_phi(tpm: &Tpm, subset: NodeSubset, state: SystemState, config: &PhiConfig) -> Result<SystemPhi> {
    if subset.is_empty() {
        return Err(Error::EmptySubset("system_phi"));
    }
    let sub = Subsystem::new(tpm, subset, state)?.with_metric(config.metric);
    let cuts = directed_cuts(subset);
    let values = match config.mode {
        PhiMode::Mip => mip_values(&sub, &cuts)?,
        PhiMode::SumDistinctions => distinction_loss_values(&sub, &cuts)?,
    };
    let k = pick_min(&values).expect("at least one cut");
    Ok(SystemPhi { subset, big_phi: values[k].max(0.0), cut: cuts[k] })
}

fn mip_values(sub: &Subsystem<'_>, cuts: &[SystemCut]) -> Result<Vec<f64>> {
    let s = sub.elements();
    let intact_effect = sub.effect_repertoire(s, s)?;
    let intact_cause = match sub.cause_repertoire(s, s) {
        Ok(r) => r,
        // no cause for the current state: nothing to integrate
        Err(Error::UnreachableState) => return Ok(vec![0.0; cuts.len()]),
        Err(e) => return Err(e),
    };
    cuts.iter()
        .map(|cut| {
            let cs = sub.clone().with_cut(Some(*cut));
            let effect = intact_effect.distance(&cs.effect_repertoire(s, s)?, sub.metric());
            let cause = intact_cause.distance(&cs.cause_repertoire(s, s)?, sub.metric());
            Ok(cause.min(effect) / cut.normalization())
        })
        .collect()
}

fn distinction_loss_values(sub: &Subsystem<'_>, cuts: &[SystemCut]) -> Result<Vec<f64>> {
    let mechanisms = sub.elements().nonempty_subsets_by_size();
    let phis = |s: &Subsystem<'_>| -> Result<Vec<f64>> {
        mechanisms
            .par_iter()
            .map(|&m| Ok(s.distinction(m)?.map_or(0.0, |d| d.phi)))
            .collect()
    };
    let intact = phis(sub)?;
    cuts.iter()
        .map(|cut| {
            let cut_phis = phis(&sub.clone().with_cut(Some(*cut)))?;
            let loss: f64 = intact.iter().zip(&cut_phis).map(|(a, b)| (a - b).max(0.0)).sum();
            Ok(loss / cut.normalization())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub elements: NodeSubset,
    pub big_phi: f64,
    /// Current state of the complex's elements, packed in ascending element order.
    pub state: u32,
    pub cut: SystemCut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSearch {
    /// Big phi of every non-empty subset, ascending mask order.
    pub evaluated: Vec<SystemPhi>,
    /// Every local maximum with positive big phi, by descending big phi.
    pub complexes: Vec<Complex>,
    /// Greedy non-overlapping selection from `complexes`.
    pub exclusive: Vec<Complex>,
}

impl ComplexSearch {
    pub fn max_phi(&self) -> f64 {
        self.complexes.first().map_or(0.0, |c| c.big_phi)
    }
}

/// Local maxima of big phi over all candidate subsets.
///
/// A subset qualifies when its big phi is positive and no strict subset or
/// strict superset exceeds it.
pub fn find_complexes(tpm: &Tpm, state: SystemState, config: &PhiConfig) -> Result<ComplexSearch> {
    tpm.check_state(state)?;
    let subsets: Vec<NodeSubset> = tpm.all_elements().subsets().filter(|s| !s.is_empty()).collect();
    let evaluated: Vec<SystemPhi> = subsets
        .par_iter()
        .map(|&s| system_phi(tpm, s, state, config))
        .collect::<Result<_>>()?;

    let mut complexes: Vec<Complex> = evaluated
        .iter()
        .filter(|e| e.big_phi > ZERO_TOL)
        .filter(|e| {
            evaluated.iter().all(|o| {
                let comparable = o.subset != e.subset
                    && (o.subset.is_subset_of(e.subset) || e.subset.is_subset_of(o.subset));
                !comparable || e.big_phi >= o.big_phi - TIE_TOL
            })
        })
        .map(|e| Complex {
            elements: e.subset,
            big_phi: e.big_phi,
            state: state.restrict(e.subset),
            cut: e.cut,
        })
        .collect();
    complexes.sort_by(|a, b| {
        b.big_phi
            .total_cmp(&a.big_phi)
            .then(a.elements.len().cmp(&b.elements.len()))
            .then(a.elements.cmp(&b.elements))
    });

    let mut exclusive: Vec<Complex> = Vec::new();
    for c in &complexes {
        if exclusive.iter().all(|x| !x.elements.intersects(c.elements)) {
            exclusive.push(c.clone());
        }
    }
    Ok(ComplexSearch { evaluated, complexes, exclusive })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    /// Indices into the structure's distinction list.
    pub members: Vec<usize>,
    /// Which side of each member takes part.
    pub faces: Vec<Direction>,
    pub overlap: NodeSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseEffectStructure {
    pub elements: NodeSubset,
    pub distinctions: Vec<Distinction>,
    /// Mechanisms with no distinction (phi = 0 on some side).
    pub reducible: Vec<NodeSubset>,
    pub relations: Vec<Relation>,
    pub sum_phi: f64,
}

pub fn cause_effect_structure(
    tpm: &Tpm,
    complex: NodeSubset,
    state: SystemState,
    config: &PhiConfig,
) -> Result<CauseEffectStructure> {
    config.validate()?;
    let sub = Subsystem::new(tpm, complex, state)?.with_metric(config.metric);
    let mechanisms = complex.nonempty_subsets_by_size();
    let found: Vec<Option<Distinction>> = mechanisms
        .par_iter()
        .map(|&m| sub.distinction(m))
        .collect::<Result<_>>()?;
    let mut distinctions = Vec::new();
    let mut reducible = Vec::new();
    for (m, d) in mechanisms.into_iter().zip(found) {
        match d {
            Some(d) => distinctions.push(d),
            None => reducible.push(m),
        }
    }
    let relations = relations(&distinctions, config.relations_order);
    let sum_phi = distinctions.iter().map(|d| d.phi).sum();
    Ok(CauseEffectStructure { elements: complex, distinctions, reducible, relations, sum_phi })
}

/// Purview overlaps among 2..=`max_order` distinctions, one face per member.
pub fn relations(distinctions: &[Distinction], max_order: usize) -> Vec<Relation> {
    let mut out = Vec::new();
    let count = distinctions.len();
    for order in 2..=max_order.min(count) {
        for members in combinations(count, order) {
            for face_bits in 0..1u32 << order {
                let faces: Vec<Direction> = (0..order)
                    .map(|k| if face_bits >> k & 1 == 1 { Direction::Effect } else { Direction::Cause })
                    .collect();
                let overlap = members
                    .iter()
                    .zip(&faces)
                    .map(|(&d, &f)| distinctions[d].side(f).purview)
                    .reduce(NodeSubset::intersection)
                    .unwrap_or_default();
                if !overlap.is_empty() {
                    out.push(Relation { members: members.clone(), faces, overlap });
                }
            }
        }
    }
    out
}

/// k-combinations of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
