//! Lattice imaginary-time particle trajectories, the kinetic action ledger and
//! spin-event reading, empirical TPM estimation, and the work bookkeeping of
//! event reading.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tpm::{Tpm, DEFAULT_ELEMENT_LIMIT};

/// Relative slack when deciding whether the action has reached the next
/// multiple of `ln 2`; absorbs rounding in `hops * per_hop`.
const CROSSING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Periodic 1-D lattice with `lattice_size` sites.
    #[default]
    Ring,
    /// Periodic `lattice_size` x `lattice_size` lattice; site = y * L + x.
    Grid2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_particles: usize,
    pub lattice_size: usize,
    pub topology: Topology,
    pub steps: usize,
    pub d_tau: f64,
    pub mass: f64,
    pub hop_prob: f64,
    /// Attraction strength; 0 makes the particles independent.
    pub coupling: f64,
    pub seed: u64,
    pub area_tn: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_particles: 2,
            lattice_size: 4,
            topology: Topology::Ring,
            steps: 100_000,
            d_tau: 1.0,
            mass: 1.0,
            hop_prob: 0.5,
            coupling: 0.0,
            seed: 0,
            area_tn: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_particles == 0 || self.lattice_size == 0 || self.steps == 0 {
            return bad("num_particles, lattice_size and steps must be >= 1".into());
        }
        if !(self.d_tau.is_finite() && self.d_tau > 0.0) {
            return bad(format!("d_tau must be positive, got {}", self.d_tau));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return bad(format!("mass must be non-negative, got {}", self.mass));
        }
        if !(0.0..=1.0).contains(&self.hop_prob) {
            return bad(format!("hop_prob must lie in [0, 1], got {}", self.hop_prob));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return bad(format!("coupling must be non-negative, got {}", self.coupling));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        match self.topology {
            Topology::Ring => self.lattice_size,
            Topology::Grid2d => self.lattice_size * self.lattice_size,
        }
    }

    /// Kinetic action of one unit hop: `(m / 2) (a / d_tau)^2 d_tau` with `a = 1`.
    pub fn action_per_hop(&self) -> f64 {
        self.mass / (2.0 * self.d_tau)
    }
}

/// Site sequences, one per particle, each of length `steps + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrajectoryEnsemble {
    pub paths: Vec<Vec<usize>>,
}

impl TrajectoryEnsemble {
    pub fn num_steps(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len().saturating_sub(1))
    }

    /// Joint configuration at time `t`.
    pub fn configuration(&self, t: usize) -> Vec<usize> {
        self.paths.iter().map(|p| p[t]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinEvent {
    pub step: usize,
    pub particle: usize,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionLedger {
    pub s_e0: f64,
    /// Whole bits read so far; always equals `events.len()`.
    pub bits: u64,
    pub events: Vec<SpinEvent>,
}

/// Acquired information for an action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoBits {
    pub bits: f64,
    pub events: u64,
}

pub fn info_bits(s_e0: f64) -> Result<InfoBits> {
    if !s_e0.is_finite() || s_e0 < 0.0 {
        return Err(Error::NegativeAction(s_e0));
    }
    let bits = s_e0 / LN_2;
    let nearest = bits.round();
    let events = if (bits - nearest).abs() <= CROSSING_TOL * nearest.max(1.0) {
        nearest
    } else {
        bits.floor()
    };
    Ok(InfoBits { bits, events: events as u64 })
}

/// Step-by-step simulator; [`simulate`] runs it to completion.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    rng: ChaCha8Rng,
    positions: Vec<usize>,
    paths: Vec<Vec<usize>>,
    hops: u64,
    ledger: ActionLedger,
    step: usize,
}

impl Simulator {
    /// Particles start evenly spread along the lattice.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let sites = config.num_sites();
        let positions: Vec<usize> = (0..config.num_particles)
            .map(|p| p * sites / config.num_particles)
            .collect();
        let paths = positions
            .iter()
            .map(|&s| {
                let mut v = Vec::with_capacity(config.steps + 1);
                v.push(s);
                v
            })
            .collect();
        Ok(Simulator {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            positions,
            paths,
            hops: 0,
            ledger: ActionLedger::default(),
            step: 0,
        })
    }

    pub fn ledger(&self) -> &ActionLedger {
        &self.ledger
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.config.steps
    }

    /// Advances every particle by one imaginary-time step (simultaneous update).
    pub fn step(&mut self) {
        if self.is_done() {
            return;
        }
        self.step += 1;
        let old = self.positions.clone();
        let per_hop = self.config.action_per_hop();
        for p in 0..old.len() {
            // two draws per particle per step, hop or not, keep streams aligned
            let hop: f64 = self.rng.gen();
            let pick: f64 = self.rng.gen();
            if hop >= self.config.hop_prob || self.config.hop_prob == 0.0 {
                continue;
            }
            let moves = self.neighbours(old[p]);
            let weights = self.move_weights(p, &old, &moves);
            let total: f64 = weights.iter().sum();
            let mut target = pick * total;
            let mut chosen = moves[moves.len() - 1];
            for (&m, &w) in moves.iter().zip(&weights) {
                if target < w {
                    chosen = m;
                    break;
                }
                target -= w;
            }
            self.positions[p] = chosen;
            self.hops += 1;
            self.ledger.s_e0 = self.hops as f64 * per_hop;
            let reached = info_bits(self.ledger.s_e0).expect("non-negative action").events;
            while self.ledger.bits < reached {
                self.ledger.bits += 1;
                self.ledger.events.push(SpinEvent { step: self.step, particle: p, site: chosen });
            }
        }
        for (path, &s) in self.paths.iter_mut().zip(&self.positions) {
            path.push(s);
        }
    }

    pub fn run(mut self) -> (TrajectoryEnsemble, ActionLedger) {
        while !self.is_done() {
            self.step();
        }
        (TrajectoryEnsemble { paths: self.paths }, self.ledger)
    }

    fn neighbours(&self, site: usize) -> Vec<usize> {
        let l = self.config.lattice_size;
        match self.config.topology {
            Topology::Ring => vec![(site + l - 1) % l, (site + 1) % l],
            Topology::Grid2d => {
                let (x, y) = (site % l, site / l);
                vec![
                    y * l + (x + l - 1) % l,
                    y * l + (x + 1) % l,
                    ((y + l - 1) % l) * l + x,
                    ((y + 1) % l) * l + x,
                ]
            }
        }
    }

    /// Moves that bring particle `p` closer to its nearest other particle get
    /// weight `1 + g`, the rest weight 1.
    fn move_weights(&self, p: usize, old: &[usize], moves: &[usize]) -> Vec<f64> {
        let g = self.config.coupling;
        let nearest = (0..old.len())
            .filter(|&q| q != p)
            .min_by_key(|&q| (self.distance(old[p], old[q]), q));
        match nearest {
            Some(q) if g > 0.0 => {
                let d = self.distance(old[p], old[q]);
                moves
                    .iter()
                    .map(|&m| if self.distance(m, old[q]) < d { 1.0 + g } else { 1.0 })
                    .collect()
            }
            _ => vec![1.0; moves.len()],
        }
    }

    fn distance(&self, a: usize, b: usize) -> usize {
        let l = self.config.lattice_size;
        let ring = |a: usize, b: usize| {
            let d = a.abs_diff(b);
            d.min(l - d)
        };
        match self.config.topology {
            Topology::Ring => ring(a, b),
            Topology::Grid2d => ring(a % l, b % l) + ring(a / l, b / l),
        }
    }
}

pub fn simulate(config: &SimConfig) -> Result<(TrajectoryEnsemble, ActionLedger)> {
    Ok(Simulator::new(config.clone())?.run())
}

/// One bit per particle: 1 when the particle sits in the upper half of the
/// lattice (`x >= L / 2` along the first axis).
pub fn half_ring_encoder(config: &SimConfig) -> impl Fn(&[usize]) -> Option<u32> {
    let l = config.lattice_size;
    let sites = config.num_sites();
    move |conf: &[usize]| {
        conf.iter().enumerate().try_fold(0u32, |acc, (p, &s)| {
            if s >= sites || p >= 32 {
                return None;
            }
            Some(acc | (((s % l) >= l / 2) as u32) << p)
        })
    }
}

/// Counts transitions between encoded consecutive configurations, adds
/// `smoothing` to every cell and normalizes each row. Rows that were never
/// visited and received no smoothing mass are uniform.
pub fn empirical_tpm<F>(ensemble: &TrajectoryEnsemble, n: usize, encoder: F, smoothing: f64) -> Result<Tpm>
where
    F: Fn(&[usize]) -> Option<u32>,
{
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::InvalidConfig(format!("smoothing must be non-negative, got {smoothing}")));
    }
    if n == 0 || n > DEFAULT_ELEMENT_LIMIT {
        return Err(Error::TooManyElements { n, limit: DEFAULT_ELEMENT_LIMIT });
    }
    let dim = 1usize << n;
    let encode = |t: usize| -> Result<usize> {
        match encoder(&ensemble.configuration(t)) {
            Some(s) if (s as usize) < dim => Ok(s as usize),
            _ => Err(Error::EncoderNotTotal { step: t }),
        }
    };
    let mut counts = vec![smoothing; dim * dim];
    let steps = ensemble.num_steps();
    if steps > 0 {
        let mut prev = encode(0)?;
        for t in 1..=steps {
            let next = encode(t)?;
            counts[prev * dim + next] += 1.0;
            prev = next;
        }
    }
    for row in counts.chunks_mut(dim) {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|c| *c /= total);
        } else {
            row.iter_mut().for_each(|c| *c = 1.0 / dim as f64);
        }
    }
    Tpm::from_flat(n, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Lorentzian,
    Euclidean,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Lorentzian => "lorentzian",
            Regime::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorentzian" => Ok(Regime::Lorentzian),
            "euclidean" => Ok(Regime::Euclidean),
            other => Err(Error::InvalidConfig(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Work {
    pub work: f64,
    /// Whether physicality accompanies the experience (work > 0).
    pub physicality: bool,
}

/// Work done by event reading. Only a Lorentzian reading whose system differs
/// from its measuring apparatus pays `k_b_t`.
pub fn physicality(regime: Regime, s_equals_m: bool, k_b_t: f64) -> Result<Work> {
    if !(k_b_t.is_finite() && k_b_t >= 0.0) {
        return Err(Error::InvalidConfig(format!("k_b_t must be non-negative, got {k_b_t}")));
    }
    let work = match (regime, s_equals_m) {
        (Regime::Lorentzian, false) => k_b_t,
        _ => 0.0,
    };
    Ok(Work { work, physicality: work > 0.0 })
}

/// Entropy in bits of a boundary of discretized area `area_tn`.
pub fn hologram_entropy(area_tn: u64) -> f64 {
    area_tn as f64
}

/// Trajectory file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub config: SimConfig,
    pub paths: Vec<Vec<usize>>,
    pub ledger: ActionLedger,
}

impl TrajectoryFile {
    pub fn new(config: SimConfig, ensemble: TrajectoryEnsemble, ledger: ActionLedger) -> Self {
        TrajectoryFile { config, paths: ensemble.paths, ledger }
    }

    pub fn ensemble(&self) -> TrajectoryEnsemble {
        TrajectoryEnsemble { paths: self.paths.clone() }
    }
}
