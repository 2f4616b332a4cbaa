use pmlab_core::matching::{
    brute_force_min_matching, certificate_violation, decompose_symmetric_difference, is_permutation,
    solve_min_matching,
};
use pmlab_core::model::PlantedInstance;
use pmlab_core::simulate;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_matches_brute_force(n in 2usize..=8, lambda in 0.05f64..8.0, seed in any::<u64>()) {
        let inst = PlantedInstance::<f64>::generate(n, lambda, seed).unwrap();
        let fast = solve_min_matching(&inst);
        let slow = brute_force_min_matching(&inst).unwrap();
        prop_assert!(is_permutation(&fast.assignment));
        prop_assert_eq!(fast.weight, slow.weight);
        prop_assert_eq!(&fast.assignment, &slow.assignment);
        prop_assert!(certificate_violation(&inst, &fast).unwrap() < 1e-12);
    }

    #[test]
    fn symmetric_difference_is_augmenting_cycles(n in 2usize..=40, lambda in 0.2f64..3.0, seed in any::<u64>()) {
        let inst = PlantedInstance::<f64>::generate(n, lambda, seed).unwrap();
        let m = solve_min_matching(&inst);
        let cycles = decompose_symmetric_difference(&inst, &m.assignment);
        prop_assert_eq!(&cycles, &m.cycles);
        let total: usize = cycles.iter().map(|c| 2 * c.len_half()).sum();
        prop_assert_eq!(total, m.sym_diff_size());
        for c in &cycles {
            prop_assert!(c.len_half() >= 2);
            // Flipping a cycle of an optimum back to the planted edges cannot help.
            prop_assert!(c.planted_weight >= c.unplanted_weight);
        }
    }
}

#[test]
fn f32_instances_solve() {
    let inst = PlantedInstance::<f32>::generate(6, 1.0, 3).unwrap();
    let fast = solve_min_matching(&inst);
    let slow = brute_force_min_matching(&inst).unwrap();
    assert_eq!(fast.weight, slow.weight);
}

#[test]
fn instance_text_round_trip() {
    let inst = PlantedInstance::<f64>::generate(5, 2.5, 17).unwrap();
    let back = PlantedInstance::<f64>::read_from(inst.to_text().as_bytes()).unwrap();
    assert_eq!(inst, back);
}

#[test]
fn identity_wins_at_large_lambda() {
    // Planted weights of order 1e-3 against un-planted weights of order n.
    let outcomes = simulate::run_trials(50, 1000.0, 5, 1).unwrap();
    assert!(outcomes.iter().all(|o| o.overlap == 1.0 && o.sym_diff == 0));
}
