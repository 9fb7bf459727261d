//! Brute-force reference implementations. Everything here works on explicit
//! bit vectors and full-state enumeration, and shares no code with the
//! library beyond reading TPM rows.

#![allow(dead_code)]

use cee_core::Tpm;

pub type Bits = Vec<bool>;

pub fn bits_of(index: usize, n: usize) -> Bits {
    (0..n).map(|i| index >> i & 1 == 1).collect()
}

pub fn index_of(bits: &[bool]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

pub fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// p(element j on at t+1 | full state x at t).
fn p_on(tpm: &Tpm, x: &[bool], j: usize) -> f64 {
    let n = tpm.n();
    (0..1usize << n)
        .filter(|&y| bits_of(y, n)[j])
        .map(|y| tpm.get(index_of(x), y))
        .sum()
}

/// Mean of p(element j = value) over every full state agreeing with `fixed`.
fn avg_node(tpm: &Tpm, j: usize, value: bool, fixed: &[(usize, bool)]) -> f64 {
    let n = tpm.n();
    let mut acc = 0.0;
    let mut count = 0.0;
    for x in 0..1usize << n {
        let xb = bits_of(x, n);
        if fixed.iter().all(|&(i, v)| xb[i] == v) {
            let p = p_on(tpm, &xb, j);
            acc += if value { p } else { 1.0 - p };
            count += 1.0;
        }
    }
    acc / count
}

/// Which (mechanism element, purview element) links are noised.
pub type Severed<'a> = &'a dyn Fn(usize, usize) -> bool;

pub struct Setting<'a> {
    pub tpm: &'a Tpm,
    /// Candidate system; everything else is background.
    pub system: Vec<usize>,
    pub state: Bits,
}

impl Setting<'_> {
    fn background(&self) -> Vec<usize> {
        (0..self.tpm.n()).filter(|i| !self.system.contains(i)).collect()
    }

    /// Joint distribution over purview states (purview elements in ascending order).
    pub fn effect(&self, mech: &[usize], purview: &[usize], severed: Severed<'_>) -> Vec<f64> {
        let per: Vec<f64> = purview
            .iter()
            .map(|&j| {
                let mut fixed: Vec<(usize, bool)> = mech
                    .iter()
                    .filter(|&&i| !severed(i, j))
                    .map(|&i| (i, self.state[i]))
                    .collect();
                fixed.extend(self.background().into_iter().map(|i| (i, self.state[i])));
                avg_node(self.tpm, j, true, &fixed)
            })
            .collect();
        (0..1usize << purview.len())
            .map(|z| {
                let zb = bits_of(z, purview.len());
                per.iter().zip(&zb).map(|(&p, &b)| if b { p } else { 1.0 - p }).product()
            })
            .collect()
    }

    /// `None` when the mechanism state has no possible cause.
    pub fn cause(&self, mech: &[usize], purview: &[usize], severed: Severed<'_>) -> Option<Vec<f64>> {
        let mut probs: Vec<f64> = (0..1usize << purview.len())
            .map(|z| {
                let zb = bits_of(z, purview.len());
                mech.iter()
                    .map(|&i| {
                        let fixed: Vec<(usize, bool)> = purview
                            .iter()
                            .zip(&zb)
                            .filter(|(&j, _)| !severed(i, j))
                            .map(|(&j, &b)| (j, b))
                            .collect();
                        avg_node(self.tpm, i, self.state[i], &fixed)
                    })
                    .product()
            })
            .collect();
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return None;
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Some(probs)
    }

    pub fn repertoire(&self, cause: bool, mech: &[usize], purview: &[usize], severed: Severed<'_>) -> Option<Vec<f64>> {
        if cause {
            self.cause(mech, purview, severed)
        } else {
            Some(self.effect(mech, purview, severed))
        }
    }
}

// ---------------------------------------------------------------------------
// metrics

/// Earth mover's distance with Hamming ground cost, solved as a dense
/// transportation LP by two-phase simplex with Bland's rule.
pub fn emd(p: &[f64], q: &[f64]) -> f64 {
    let k = p.len();
    assert_eq!(k, q.len());
    let cost: Vec<f64> = (0..k * k).map(|c| ((c / k) ^ (c % k)).count_ones() as f64).collect();
    let mut a = vec![vec![0.0; k * k]; 2 * k];
    for i in 0..k {
        for j in 0..k {
            a[i][i * k + j] = 1.0;
            a[k + j][i * k + j] = 1.0;
        }
    }
    let b: Vec<f64> = p.iter().chain(q).copied().collect();
    simplex_min(&a, &b, &cost)
}

/// min c.x subject to A x = b, x >= 0, with b >= 0.
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    const EPS: f64 = 1e-12;
    let m = a.len();
    let nv = c.len();
    let width = nv + m + 1;
    // tableau rows: constraints with one artificial each, rhs last
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row = vec![0.0; width];
            row[..nv].copy_from_slice(&a[r]);
            row[nv + r] = 1.0;
            row[width - 1] = b[r];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let pv = t[r][col];
        t[r].iter_mut().for_each(|v| *v /= pv);
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col].abs() > 0.0 {
                let f = row[col];
                row.iter_mut().zip(&pr).for_each(|(v, &p)| *v -= f * p);
            }
        }
        basis[r] = col;
    };

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, obj: &[f64], allowed: usize| loop {
        // reduced costs
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let rc = obj[j] - (0..m).map(|r| obj[basis[r]] * t[r][j]).sum::<f64>();
            rc < -1e-11
        });
        let Some(col) = entering else { return };
        let mut best: Option<(f64, usize)> = None;
        for r in 0..m {
            if t[r][col] > EPS {
                let ratio = t[r][width - 1] / t[r][col];
                let better = match best {
                    None => true,
                    Some((br, bi)) => ratio < br - 1e-15 || (ratio <= br + 1e-15 && basis[r] < basis[bi]),
                };
                if better {
                    best = Some((ratio, r));
                }
            }
        }
        let Some((_, r)) = best else { panic!("unbounded transport LP") };
        pivot(t, basis, r, col);
    };

    // phase 1: minimise the artificials
    let mut phase1 = vec![0.0; nv + m];
    phase1[nv..].iter_mut().for_each(|v| *v = 1.0);
    run(&mut t, &mut basis, &phase1, nv + m);
    // drive leftover (zero-valued) artificials out of the basis where possible
    for r in 0..m {
        if basis[r] >= nv {
            if let Some(col) = (0..nv).find(|&j| t[r][j].abs() > 1e-9 && !basis.contains(&j)) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }
    // phase 2 over original columns only; redundant rows keep a zero artificial
    let mut phase2 = vec![0.0; nv + m];
    phase2[..nv].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, nv);
    (0..m).map(|r| phase2[basis[r]] * t[r][width - 1]).sum()
}

pub fn intrinsic_difference(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).log2()
            }
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// mechanism level

pub struct OracleCore {
    pub purview: u32,
    pub phi: f64,
}

/// Small phi over every bipartition of mechanism x purview (duplicates and
/// the empty cut included or skipped as they come; only the minimum matters).
pub fn small_phi(s: &Setting<'_>, cause: bool, mech: u32, purview: u32, dist: fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = s.tpm.n();
    let m = members(mech, n);
    let p = members(purview, n);
    let none = |_: usize, _: usize| false;
    let Some(intact) = s.repertoire(cause, &m, &p, &none) else { return 0.0 };
    let mut best = f64::INFINITY;
    for mp in 0..1u32 << m.len() {
        for pp in 0..1u32 << p.len() {
            let in_mp = |i: usize| mp >> m.iter().position(|&x| x == i).unwrap() & 1 == 1;
            let in_pp = |j: usize| pp >> p.iter().position(|&x| x == j).unwrap() & 1 == 1;
            let severed = |i: usize, j: usize| in_mp(i) != in_pp(j);
            let any = m.iter().any(|&i| p.iter().any(|&j| severed(i, j)));
            if !any {
                continue;
            }
            let cut = s.repertoire(cause, &m, &p, &severed).expect("cutting only removes constraints");
            best = best.min(dist(&intact, &cut));
        }
    }
    if best.is_finite() {
        best.max(0.0)
    } else {
        0.0
    }
}

/// Best purview by (phi desc, size asc, mask asc), `None` when max phi is ~0.
pub fn core(s: &Setting<'_>, cause: bool, mech: u32, dist: fn(&[f64], &[f64]) -> f64) -> Option<OracleCore> {
    let system_mask: u32 = s.system.iter().map(|&i| 1u32 << i).sum();
    let mut cands: Vec<u32> = (1..=system_mask).filter(|&p| p & !system_mask == 0).collect();
    cands.sort_by_key(|&p| (p.count_ones(), p));
    let phis: Vec<f64> = cands.iter().map(|&p| small_phi(s, cause, mech, p, dist)).collect();
    let max = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 1e-10 {
        return None;
    }
    let k = phis.iter().position(|&v| v >= max - 1e-10).unwrap();
    Some(OracleCore { purview: cands[k], phi: phis[k] })
}

// ---------------------------------------------------------------------------
// system level

/// Big phi: minimum over directed cuts of min(cause loss, effect loss) / min(|A|, |B|).
pub fn big_phi(tpm: &Tpm, subset: u32, state: usize) -> f64 {
    let n = tpm.n();
    let s = Setting { tpm, system: members(subset, n), state: bits_of(state, n) };
    let elems = s.system.clone();
    let none = |_: usize, _: usize| false;
    let Some(intact_cause) = s.cause(&elems, &elems, &none) else { return 0.0 };
    let intact_effect = s.effect(&elems, &elems, &none);
    let mut cuts: Vec<(u32, u32)> = Vec::new();
    if elems.len() == 1 {
        cuts.push((subset, subset));
    } else {
        for a in 1..subset {
            if a & !subset == 0 {
                cuts.push((a, subset & !a));
            }
        }
    }
    let mut best = f64::INFINITY;
    for (from, to) in cuts {
        let has = |m: u32, i: usize| m >> i & 1 == 1;
        // effect: current i in `from` no longer informs next j in `to`
        let eff = |i: usize, j: usize| has(from, i) && has(to, j);
        // cause: past j in `from` no longer informs current i in `to`
        let cau = |i: usize, j: usize| has(from, j) && has(to, i);
        let ce = s.effect(&elems, &elems, &eff);
        let cc = s.cause(&elems, &elems, &cau).expect("cut cause exists");
        let norm = from.count_ones().min(to.count_ones()).max(1) as f64;
        let v = emd(&intact_cause, &cc).min(emd(&intact_effect, &ce)) / norm;
        best = best.min(v);
    }
    best.max(0.0)
}

/// (mask, big phi) of every local maximum with positive big phi.
pub fn complexes(tpm: &Tpm, state: usize) -> Vec<(u32, f64)> {
    let full = (1u32 << tpm.n()) - 1;
    let phis: Vec<(u32, f64)> = (1..=full).map(|s| (s, big_phi(tpm, s, state))).collect();
    let mut out: Vec<(u32, f64)> = phis
        .iter()
        .filter(|(s, v)| {
            *v > 1e-10
                && phis.iter().all(|(o, w)| {
                    let comparable = o != s && (o & s == *o || o & s == *s);
                    !comparable || *v >= w - 1e-10
                })
        })
        .copied()
        .collect();
    out.sort_by_key(|(s, _)| *s);
    out
}

// ---------------------------------------------------------------------------
// factorization

/// Max over rows of TV between the TPM and the product of its group marginals,
/// each marginal averaging the other groups' inputs uniformly.
pub fn residual(tpm: &Tpm, groups: &[Vec<usize>]) -> f64 {
    let n = tpm.n();
    let dim = 1usize << n;
    let restrict = |x: usize, g: &[usize]| -> Vec<bool> { g.iter().map(|&i| x >> i & 1 == 1).collect() };
    let marginal = |g: &[usize], x: usize, y: usize| -> f64 {
        let gx = restrict(x, g);
        let gy = restrict(y, g);
        let mut acc = 0.0;
        let mut count = 0.0;
        for x2 in 0..dim {
            if restrict(x2, g) != gx {
                continue;
            }
            count += 1.0;
            for y2 in 0..dim {
                if restrict(y2, g) == gy {
                    acc += tpm.get(x2, y2);
                }
            }
        }
        acc / count
    };
    (0..dim)
        .map(|x| {
            0.5 * (0..dim)
                .map(|y| {
                    let q: f64 = groups.iter().map(|g| marginal(g, x, y)).product();
                    (tpm.get(x, y) - q).abs()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// All set partitions of 0..n, by recursive insertion.
pub fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in partitions(n - 1) {
        for k in 0..p.len() {
            let mut q = p.clone();
            q[k].push(n - 1);
            out.push(q);
        }
        let mut q = p.clone();
        q.push(vec![n - 1]);
        out.push(q);
    }
    out
}

/// Every partition with the largest number of groups among those passing `epsilon`.
pub fn finest_partitions(tpm: &Tpm, epsilon: f64) -> Vec<Vec<Vec<usize>>> {
    let valid: Vec<Vec<Vec<usize>>> =
        partitions(tpm.n()).into_iter().filter(|p| residual(tpm, p) <= epsilon).collect();
    let most = valid.iter().map(|p| p.len()).max().unwrap_or(1);
    valid.into_iter().filter(|p| p.len() == most).collect()
}

/// Partition as sorted masks, for comparison.
pub fn canonical(groups: &[Vec<usize>]) -> Vec<u32> {
    let mut m: Vec<u32> = groups.iter().map(|g| g.iter().map(|&i| 1u32 << i).sum()).collect();
    m.sort();
    m
}

// ---------------------------------------------------------------------------
// coarse-graining

/// Macro TPM: `stride`-step micro TPM, lumped by threshold maps with every
/// micro state weighted equally.
pub fn macro_tpm(tpm: &Tpm, groups: &[Vec<usize>], thresholds: &[usize], stride: usize) -> Tpm {
    let dim = tpm.dim();
    let mut power: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _ in 0..stride {
        power = (0..dim)
            .map(|i| (0..dim).map(|j| (0..dim).map(|k| power[i][k] * tpm.get(k, j)).sum()).collect())
            .collect();
    }
    let lump = |x: usize| -> usize {
        groups
            .iter()
            .zip(thresholds)
            .enumerate()
            .map(|(k, (g, &t))| ((g.iter().filter(|&&i| x >> i & 1 == 1).count() >= t) as usize) << k)
            .sum()
    };
    let md = 1usize << groups.len();
    let mut rows = vec![vec![0.0; md]; md];
    let mut sizes = vec![0.0; md];
    for x in 0..dim {
        sizes[lump(x)] += 1.0;
        for y in 0..dim {
            rows[lump(x)][lump(y)] += power[x][y];
        }
    }
    for (row, size) in rows.iter_mut().zip(&sizes) {
        row.iter_mut().for_each(|v| *v /= size);
    }
    Tpm::validate(&rows, groups.len()).expect("macro rows are stochastic")
}

pub fn macro_state(state: usize, groups: &[Vec<usize>], thresholds: &[usize]) -> usize {
    groups
        .iter()
        .zip(thresholds)
        .enumerate()
        .map(|(k, (g, &t))| ((g.iter().filter(|&&i| state >> i & 1 == 1).count() >= t) as usize) << k)
        .sum()
}
