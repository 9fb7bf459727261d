use cee_core::algebra::{factorize, product_residual, reassemble, tensor_product};
use cee_core::fixtures;
use cee_core::metric::Metric;
use cee_core::sim::{empirical_tpm, half_ring_encoder, simulate, SimConfig};
use cee_core::system::{cause_effect_structure, find_complexes, system_phi, PhiConfig, PhiMode};
use cee_core::{NodeSubset, SystemState, Tpm};
use proptest::prelude::*;

fn full(tpm: &Tpm) -> NodeSubset {
    NodeSubset::full(tpm.n())
}

fn id_config() -> PhiConfig {
    PhiConfig { metric: Metric::IntrinsicDifference, ..PhiConfig::default() }
}

fn relabel_mask(mask: NodeSubset, perm: &[usize]) -> NodeSubset {
    NodeSubset::from_elements(mask.elements().map(|i| perm[i]))
}

fn relabel_state(state: u32, perm: &[usize]) -> u32 {
    (0..perm.len()).filter(|&i| state >> i & 1 == 1).fold(0, |acc, i| acc | 1 << perm[i])
}

#[test]
fn not_element_under_intrinsic_difference() {
    let tpm = fixtures::not_gate();
    for s in 0..2 {
        let phi = system_phi(&tpm, full(&tpm), SystemState(s), &id_config()).unwrap();
        assert!((phi.big_phi - 1.0).abs() < 1e-12, "state {s}: {}", phi.big_phi);
    }
}

#[test]
fn not_element_under_emd() {
    let tpm = fixtures::not_gate();
    let phi = system_phi(&tpm, full(&tpm), SystemState(1), &PhiConfig::default()).unwrap();
    assert!((phi.big_phi - 0.5).abs() < 1e-12);
}

#[test]
fn factors_of_an_exact_product_are_complexes() {
    let cases = [
        fixtures::not_not(),
        tensor_product(&fixtures::not_gate(), &fixtures::majority3()).unwrap(),
        tensor_product(&fixtures::xor_pair(), &fixtures::not_gate()).unwrap(),
    ];
    for tpm in &cases {
        let f = factorize(tpm, 1e-9).unwrap();
        assert!(f.groups.len() >= 2);
        for s in 0..tpm.dim() as u32 {
            let search = find_complexes(tpm, SystemState(s), &PhiConfig::default()).unwrap();
            for g in &f.groups {
                let phi = system_phi(tpm, *g, SystemState(s), &PhiConfig::default()).unwrap().big_phi;
                if phi > 0.0 && g.subsets().all(|sub| {
                    sub.is_empty() || sub == *g || {
                        system_phi(tpm, sub, SystemState(s), &PhiConfig::default()).unwrap().big_phi <= phi + 1e-10
                    }
                }) {
                    assert!(
                        search.complexes.iter().any(|c| c.elements == *g),
                        "factor {:?} in state {s} missing from complexes",
                        g
                    );
                }
            }
            for c in &search.complexes {
                assert!(f.groups.iter().any(|g| c.elements.is_subset_of(*g)), "complex straddles factors");
            }
        }
    }
}

#[test]
fn coupling_raises_median_residual() {
    let grid = [0.0, 0.25, 0.5, 1.0];
    let medians: Vec<f64> = grid
        .iter()
        .map(|&g| {
            let mut residuals: Vec<f64> = (0..10)
                .map(|seed| {
                    let cfg = SimConfig { coupling: g, seed, ..SimConfig::default() };
                    let (ens, _) = simulate(&cfg).unwrap();
                    let tpm = empirical_tpm(&ens, 2, half_ring_encoder(&cfg), 1.0).unwrap();
                    product_residual(&tpm, &[NodeSubset::singleton(0), NodeSubset::singleton(1)]).unwrap()
                })
                .collect();
            residuals.sort_by(f64::total_cmp);
            (residuals[4] + residuals[5]) / 2.0
        })
        .collect();
    for w in medians.windows(2) {
        assert!(w[0] <= w[1], "medians not monotone: {medians:?}");
    }
}

#[test]
fn sum_distinctions_mode_on_product_is_zero() {
    let tpm = fixtures::not_not();
    let cfg = PhiConfig { mode: PhiMode::SumDistinctions, ..PhiConfig::default() };
    for s in 0..4 {
        assert_eq!(system_phi(&tpm, full(&tpm), SystemState(s), &cfg).unwrap().big_phi, 0.0);
    }
}

fn small_tpm() -> impl Strategy<Value = Tpm> {
    (1usize..=3, any::<u64>()).prop_map(|(n, seed)| fixtures::random_node_tpm(n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_phi_is_sum_of_distinctions(tpm in small_tpm(), s in any::<u32>()) {
        let state = SystemState(s % tpm.dim() as u32);
        let ces = cause_effect_structure(&tpm, full(&tpm), state, &PhiConfig::default()).unwrap();
        let total: f64 = ces.distinctions.iter().map(|d| d.phi).sum();
        prop_assert_eq!(ces.sum_phi, total);
        prop_assert_eq!(ces.distinctions.len() + ces.reducible.len(), (1usize << tpm.n()) - 1);
        for r in &ces.relations {
            prop_assert!(!r.overlap.is_empty());
        }
    }

    #[test]
    fn complexes_are_relabeling_equivariant(tpm in small_tpm(), s in any::<u32>(), rot in 0usize..3) {
        let n = tpm.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let state = s % tpm.dim() as u32;
        let moved = tpm.permute(&perm).unwrap();
        let cfg = PhiConfig::default();
        let a = find_complexes(&tpm, SystemState(state), &cfg).unwrap();
        let b = find_complexes(&moved, SystemState(relabel_state(state, &perm)), &cfg).unwrap();
        for e in &a.evaluated {
            let other = b.evaluated.iter().find(|x| x.subset == relabel_mask(e.subset, &perm)).unwrap();
            prop_assert!((e.big_phi - other.big_phi).abs() < 1e-9);
        }
        let mut left: Vec<u32> = a.complexes.iter().map(|c| relabel_mask(c.elements, &perm).mask()).collect();
        let mut right: Vec<u32> = b.complexes.iter().map(|c| c.elements.mask()).collect();
        left.sort_unstable();
        right.sort_unstable();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn straddling_subsets_of_products_have_zero_phi(
        na in 1usize..=2, nb in 1usize..=2, sa in any::<u64>(), sb in any::<u64>(), s in any::<u32>()
    ) {
        let tpm = tensor_product(&fixtures::random_node_tpm(na, sa), &fixtures::random_node_tpm(nb, sb)).unwrap();
        let a = NodeSubset((1u32 << na) - 1);
        let state = SystemState(s % tpm.dim() as u32);
        for sub in full(&tpm).subsets() {
            if sub.intersects(a) && !sub.difference(a).is_empty() {
                prop_assert_eq!(system_phi(&tpm, sub, state, &PhiConfig::default()).unwrap().big_phi, 0.0);
            }
        }
    }

    #[test]
    fn factorization_is_self_consistent(tpm in (1usize..=4, any::<u64>()).prop_map(|(n, s)| fixtures::random_tpm(n, s))) {
        let f = factorize(&tpm, 1e-6).unwrap();
        prop_assert!(product_residual(&tpm, &f.groups).unwrap() <= f.residual + 1e-12);
        prop_assert_eq!(f.groups.iter().fold(0, |acc, g| acc | g.mask()), full(&tpm).mask());
        let rebuilt = reassemble(&f, tpm.n()).unwrap();
        prop_assert!(rebuilt.max_abs_diff(&tpm) <= 2.0 * f.residual + 1e-9);
    }

    #[test]
    fn tensor_product_is_associative(sa in any::<u64>(), sb in any::<u64>(), sc in any::<u64>()) {
        let (a, b, c) = (
            fixtures::random_tpm(1, sa),
            fixtures::random_tpm(2, sb),
            fixtures::random_tpm(1, sc),
        );
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
        let groups = [NodeSubset(0b0001), NodeSubset(0b0110), NodeSubset(0b1000)];
        prop_assert!(product_residual(&left, &groups).unwrap() < 1e-12);
    }
}
