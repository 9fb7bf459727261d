//! Bitmask types for element subsets and binary system states.
//!
//! Element `i` of an `n`-element system is bit `i` of both a [`NodeSubset`]
//! mask and a [`SystemState`] index (little-endian: element 0 is the
//! least-significant bit).

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Hard ceiling on element counts; masks are `u32`.
pub const MAX_ELEMENTS: usize = 24;

/// A subset of system elements stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSubset(pub u32);

impl NodeSubset {
    pub const EMPTY: NodeSubset = NodeSubset(0);

    pub fn full(n: usize) -> Self {
        NodeSubset(full_mask(n))
    }

    pub fn singleton(i: usize) -> Self {
        NodeSubset(1 << i)
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(elements: I) -> Self {
        NodeSubset(elements.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_subset_of(self, other: NodeSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: NodeSubset) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: NodeSubset) -> Self {
        NodeSubset(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSubset) -> Self {
        NodeSubset(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSubset) -> Self {
        NodeSubset(self.0 & !other.0)
    }

    /// Element indices in ascending order.
    pub fn elements(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }

    pub fn check(self, n: usize) -> Result<Self> {
        if self.0 & !full_mask(n) != 0 {
            Err(Error::MaskOutOfRange { mask: self.0, n })
        } else {
            Ok(self)
        }
    }

    /// All subsets of `self` (including empty and `self`) in ascending mask order.
    pub fn subsets(self) -> Subsets {
        Subsets { universe: self.0, next: Some(0) }
    }

    /// Non-empty subsets ordered by cardinality, then mask value.
    pub fn nonempty_subsets_by_size(self) -> Vec<NodeSubset> {
        let mut out: Vec<NodeSubset> = self.subsets().filter(|s| !s.is_empty()).collect();
        out.sort_by_key(|s| (s.len(), s.0));
        out
    }
}

impl fmt::Debug for NodeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.elements().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Iterator over the submasks of a mask, ascending.
pub struct Subsets {
    universe: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = NodeSubset;

    fn next(&mut self) -> Option<NodeSubset> {
        let cur = self.next?;
        // (cur - universe) & universe enumerates submasks in increasing order
        let succ = cur.wrapping_sub(self.universe) & self.universe;
        self.next = if succ == 0 { None } else { Some(succ) };
        Some(NodeSubset(cur))
    }
}

/// A binary assignment to all `n` elements, stored as its state index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemState(pub u32);

impl SystemState {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bit(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        SystemState(
            bits.iter()
                .enumerate()
                .fold(0, |acc, (i, &b)| acc | ((b as u32) << i)),
        )
    }

    pub fn to_bits(self, n: usize) -> Vec<bool> {
        (0..n).map(|i| self.bit(i)).collect()
    }

    pub fn check(self, n: usize) -> Result<Self> {
        if self.0 & !full_mask(n) != 0 {
            Err(Error::StateOutOfRange { index: self.0, n })
        } else {
            Ok(self)
        }
    }

    /// Parses a bit string such as `"101"`, where the first character is element 0.
    pub fn parse_bits(s: &str, n: usize) -> Result<Self> {
        let s = s.trim();
        if s.chars().count() != n {
            return Err(Error::InvalidStateString(format!(
                "expected {n} bits, found {:?}",
                s
            )));
        }
        let mut bits = Vec::with_capacity(n);
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::InvalidStateString(format!(
                        "unexpected character {other:?}"
                    )))
                }
            }
        }
        Ok(Self::from_bits(&bits))
    }

    /// Bit string with element 0 first.
    pub fn to_bit_string(self, n: usize) -> String {
        (0..n).map(|i| if self.bit(i) { '1' } else { '0' }).collect()
    }

    /// Bits of the elements in `subset`, packed densely in ascending element order.
    pub fn restrict(self, subset: NodeSubset) -> u32 {
        compress(self.0, subset.0)
    }
}

impl fmt::Debug for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SystemState({:#b})", self.0)
    }
}

pub fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Packs the bits of `value` selected by `mask` into the low bits (parallel extract).
pub fn compress(value: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let i = m.trailing_zeros();
        out |= (value >> i & 1) << k;
        k += 1;
        m &= m - 1;
    }
    out
}

/// Inverse of [`compress`]: spreads the low bits of `packed` over the set bits of `mask`.
pub fn expand(packed: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let i = m.trailing_zeros();
        out |= (packed >> k & 1) << i;
        k += 1;
        m &= m - 1;
    }
    out
}

/// All set partitions of elements `0..n`, in lexicographic order of their
/// restricted growth strings. Groups are ordered by their smallest element.
pub fn set_partitions(n: usize) -> Vec<Vec<NodeSubset>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut labels = vec![0usize; n];
    loop {
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut groups = vec![NodeSubset::EMPTY; count];
        for (i, &l) in labels.iter().enumerate() {
            groups[l] = groups[l].union(NodeSubset::singleton(i));
        }
        out.push(groups);

        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let prefix_max = labels[..i].iter().copied().max().unwrap_or(0);
            if labels[i] <= prefix_max {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
            i -= 1;
        }
    }
}
