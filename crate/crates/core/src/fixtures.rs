//! Small reference systems used by tests, examples and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tpm::Tpm;

/// One element that inverts itself every step.
pub fn not_gate() -> Tpm {
    Tpm::from_fn(1, |s| s ^ 1).expect("valid")
}

/// Two independent NOT elements.
pub fn not_not() -> Tpm {
    Tpm::from_fn(2, |s| s ^ 0b11).expect("valid")
}

/// Element 0 <- OR(0, 1), element 1 <- AND(0, 1).
pub fn and_system() -> Tpm {
    Tpm::from_fn(2, |s| {
        let (a, b) = (s & 1, s >> 1 & 1);
        (a | b) | (a & b) << 1
    })
    .expect("valid")
}

/// Element 0 keeps its value, element 1 copies element 0.
pub fn copy_system() -> Tpm {
    Tpm::from_fn(2, |s| (s & 1) | (s & 1) << 1).expect("valid")
}

/// Element 0 keeps its value, element 1 <- XOR(0, 1).
pub fn xor_pair() -> Tpm {
    Tpm::from_fn(2, |s| (s & 1) | ((s & 1) ^ (s >> 1 & 1)) << 1).expect("valid")
}

/// Three elements, each becoming the majority of the current state.
pub fn majority3() -> Tpm {
    Tpm::from_fn(3, |s| if s.count_ones() >= 2 { 0b111 } else { 0 }).expect("valid")
}

/// Two copies of a NOT element: both become NOT(element 0).
pub fn not_copies() -> Tpm {
    Tpm::from_fn(2, |s| if s & 1 == 1 { 0 } else { 0b11 }).expect("valid")
}

/// Pairs {0,1} and {2,3}; within a pair both elements become NOR of the pair.
pub fn correlated_not_pairs() -> Tpm {
    Tpm::from_fn(4, |s| {
        let a = if s & 0b0011 == 0 { 0b0011 } else { 0 };
        let b = if s & 0b1100 == 0 { 0b1100 } else { 0 };
        a | b
    })
    .expect("valid")
}

/// Dense TPM with independent uniformly drawn rows, deterministic in `seed`.
pub fn random_tpm(n: usize, seed: u64) -> Tpm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n;
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim {
        let row: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let sum: f64 = row.iter().sum();
        data.extend(row.iter().map(|v| v / sum));
    }
    Tpm::from_data_unchecked(n, data)
}

/// Random TPM whose elements update independently given the current state.
pub fn random_node_tpm(n: usize, seed: u64) -> Tpm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n;
    let table: Vec<f64> = (0..dim * n).map(|_| rng.gen::<f64>()).collect();
    Tpm::from_node_probs(n, |s, j| table[s as usize * n + j]).expect("valid")
}
