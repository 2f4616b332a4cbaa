use pmlab_core::bounds::{
    erlang_exceed_bound, erlang_exceed_mc, overlap_lower_bound_small_lambda, sym_diff_expectation_bound,
    ErlangBoundQuery,
};
use pmlab_core::rng::{open_unit, stream};
use pmlab_core::simulate::{run_trials, Summary};

#[test]
fn erlang_bound_dominates_simulation() {
    let mut r = stream(99, 0);
    for _ in 0..12 {
        let t = 1 + (open_unit(&mut r) * 6.0) as u32;
        let lambda2 = 0.2 + 2.0 * open_unit(&mut r);
        let ratio = 1.1 + 18.9 * open_unit(&mut r);
        let q = ErlangBoundQuery::new(t, ratio * lambda2, lambda2).unwrap();
        let bound = erlang_exceed_bound(q).unwrap();
        let mc = erlang_exceed_mc(q, 100_000, &mut r).unwrap();
        let sigma = mc.stderr.max(1.0 / 100_000f64);
        assert!(mc.mean <= bound + 4.0 * sigma, "{q:?}: {} vs {bound}", mc.mean);
    }
    let q = ErlangBoundQuery::new(3, 4.0, 0.5).unwrap();
    let mc = erlang_exceed_mc(q, 1_000_000, &mut r).unwrap();
    assert!(mc.mean <= erlang_exceed_bound(q).unwrap());
}

#[test]
fn sym_diff_bound_dominates_small_simulations() {
    for lambda in [4.0, 5.0, 6.0] {
        let s = Summary::of(&run_trials(200, lambda, 20, 3).unwrap());
        let bound = sym_diff_expectation_bound(lambda, 200).unwrap();
        assert!(s.sym_diff.mean <= bound + 4.0 * s.sym_diff.stderr, "λ={lambda}");
    }
}

#[test]
fn overlap_lower_bound_holds_in_simulation() {
    for lambda in [1.0, 2.0, 3.0] {
        let s = Summary::of(&run_trials(300, lambda, 5, 4).unwrap());
        let lb = overlap_lower_bound_small_lambda(lambda).unwrap();
        assert!(lb <= s.overlap.mean + 4.0 * s.overlap.stderr, "λ={lambda}");
    }
}
