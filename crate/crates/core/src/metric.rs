//! Distances between repertoires over binary purview states.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Mass below this is treated as already transported.
const FLOW_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Metric {
    /// Earth-mover distance with the Hamming ground metric on purview states.
    #[default]
    #[serde(rename = "emd")]
    Emd,
    /// Intrinsic difference: `max_s p(s) log2(p(s) / q(s))`.
    #[serde(rename = "id")]
    IntrinsicDifference,
}

impl Metric {
    /// Distance from the intact repertoire `p` to the partitioned repertoire `q`.
    pub fn distance(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::Emd => emd_hamming(p, q),
            Metric::IntrinsicDifference => intrinsic_difference(p, q),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Emd => "emd",
            Metric::IntrinsicDifference => "id",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emd" => Ok(Metric::Emd),
            "id" => Ok(Metric::IntrinsicDifference),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

/// Earth-mover distance between two distributions over `{0,1}^k`, ground metric = Hamming.
///
/// Solved as an uncapacitated min-cost flow on the hypercube graph (unit edge
/// costs) with successive shortest paths. Hamming distance is the graph's
/// shortest-path metric, so the optimal flow cost equals the transport cost.
///
/// Panics if the lengths differ or are not a power of two.
pub fn emd_hamming(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different state spaces");
    let v = p.len();
    assert!(v.is_power_of_two(), "state space size {v} is not a power of two");
    let k = v.trailing_zeros() as usize;
    if k == 0 {
        return 0.0;
    }
    if k == 1 {
        return (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
    }

    let mut excess: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
    // flow[u * k + b]: mass moved along the arc u -> u ^ (1 << b)
    let mut flow = vec![0.0f64; v * k];
    let mut dist = vec![0i64; v];
    let mut parent = vec![usize::MAX; v];
    let mut in_queue = vec![false; v];
    let mut queue = std::collections::VecDeque::with_capacity(v);

    loop {
        let has_supply = excess.iter().any(|&e| e > FLOW_EPS);
        let has_demand = excess.iter().any(|&e| e < -FLOW_EPS);
        if !has_supply || !has_demand {
            break;
        }

        // Bellman-Ford (queue based) from every supply node at distance 0.
        dist.iter_mut().for_each(|d| *d = i64::MAX);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        queue.clear();
        for u in 0..v {
            if excess[u] > FLOW_EPS {
                dist[u] = 0;
                queue.push_back(u);
                in_queue[u] = true;
            }
        }
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for b in 0..k {
                let w = u ^ (1 << b);
                let cost = if flow[w * k + b] > FLOW_EPS { -1 } else { 1 };
                let nd = dist[u] + cost;
                if nd < dist[w] {
                    dist[w] = nd;
                    parent[w] = u;
                    if !in_queue[w] {
                        in_queue[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }

        let sink = (0..v)
            .filter(|&u| excess[u] < -FLOW_EPS)
            .min_by_key(|&u| (dist[u], u))
            .expect("demand node exists");

        // bottleneck along the path back to its source
        let mut amount = -excess[sink];
        let mut node = sink;
        while parent[node] != usize::MAX {
            let prev = parent[node];
            let b = (prev ^ node).trailing_zeros() as usize;
            let back = flow[node * k + b];
            if back > FLOW_EPS {
                amount = amount.min(back);
            }
            node = prev;
        }
        let source = node;
        amount = amount.min(excess[source]);

        let mut node = sink;
        while parent[node] != usize::MAX {
            let prev = parent[node];
            let b = (prev ^ node).trailing_zeros() as usize;
            let back = &mut flow[node * k + b];
            if *back > FLOW_EPS {
                *back -= amount;
                if *back <= FLOW_EPS {
                    *back = 0.0;
                }
            } else {
                flow[prev * k + b] += amount;
            }
            node = prev;
        }
        excess[source] -= amount;
        excess[sink] += amount;
        if excess[source].abs() <= FLOW_EPS {
            excess[source] = 0.0;
        }
        if excess[sink].abs() <= FLOW_EPS {
            excess[sink] = 0.0;
        }
    }

    flow.iter().sum()
}

/// EMD between two product distributions over `{0,1}^k` given each element's
/// probability of being on. Exact: per-coordinate optimal couplings compose.
pub fn emd_product(p_on: &[f64], q_on: &[f64]) -> f64 {
    assert_eq!(p_on.len(), q_on.len());
    p_on.iter().zip(q_on).map(|(a, b)| (a - b).abs()).sum()
}

/// `max_s p(s) log2(p(s) / q(s))` over states with `p(s) > 0`.
pub fn intrinsic_difference(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different state spaces");
    let mut best = 0.0f64;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        best = best.max(a * (a / b).log2());
    }
    best
}

/// Checks that `p` is a probability vector within `tol`.
pub fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < -tol) {
        return Err(Error::InvalidDistribution(format!("entry {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}
