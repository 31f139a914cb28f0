use proptest::prelude::*;
use qprivamp::divergence::{renyi_divergence, DivergenceParams};
use qprivamp::entropy::{
    club_sandwiched, coarse_grain_entropy_check, conditional_entropy, le_cond_entropy, vn_cond_entropy,
    EntropyKind, EntropyQuery, SolverOptions,
};
use qprivamp::exponent::Exponent;
use qprivamp::linalg::{
    eigh_cluster, matrix_function, max_abs, partial_trace, pinch, schatten_norm, FnMode, MatrixFn, Subsystem,
    CLUSTER_TOL, C64,
};
use qprivamp::pa::{apply_hash, fidelity_to_ideal, HashFunction};
use qprivamp::parallel::Execution;
use qprivamp::states::{
    marginal_e, random_cq, random_density, random_hermitian, seeded_rng, uniform_product, CQState,
};
use qprivamp::symmetric::{dominance_check, universal_state};

fn cq_state(seed: u64, x: usize, e: usize) -> CQState {
    random_cq(&mut seeded_rng(seed), x, e)
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigh_reconstructs(seed: u64, d in 1usize..=5) {
        let a = random_hermitian(&mut seeded_rng(seed), d);
        let spec = a.eigh();
        prop_assert!(max_abs(&(spec.reconstruct() - a.matrix())) <= 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn log_exp_round_trip(seed: u64, d in 1usize..=4) {
        let rho = random_density(&mut seeded_rng(seed), d);
        let log = matrix_function(rho.op(), MatrixFn::Log, FnMode::OnSupport).unwrap();
        let back = matrix_function(&log, MatrixFn::Exp, FnMode::Full).unwrap();
        prop_assert!(back.max_abs_diff(rho.op()) <= 1e-9);
    }

    #[test]
    fn pinching_dominates(seed: u64, d in 2usize..=4) {
        let mut rng = seeded_rng(seed);
        let omega = random_density(&mut rng, d);
        let rho = random_density(&mut rng, d);
        let (_, proj) = eigh_cluster(omega.op(), CLUSTER_TOL);
        let p = pinch(rho.op(), &proj).unwrap();
        let gap = qprivamp::linalg::Hermitian::new(p.matrix() * C64::new(proj.len() as f64, 0.0) - rho.matrix()).unwrap();
        prop_assert!(gap.min_eigenvalue() >= -1e-10);
        prop_assert!(pinch(&p, &proj).unwrap().max_abs_diff(&p) <= 1e-12);
    }

    #[test]
    fn schatten_monotone(seed: u64, d in 1usize..=4, p in 1.0f64..6.0, dp in 0.0f64..4.0) {
        let a = random_hermitian(&mut seeded_rng(seed), d);
        let lo = schatten_norm(a.matrix(), p).unwrap();
        let hi = schatten_norm(a.matrix(), p + dp).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
    }

    #[test]
    fn sandwiched_data_processing(seed: u64, alpha in 0.5f64..0.99) {
        let mut rng = seeded_rng(seed);
        let rho = random_density(&mut rng, 4).with_dims(vec![2, 2]).unwrap();
        let sigma = random_density(&mut rng, 4).with_dims(vec![2, 2]).unwrap();
        let reduce = |s: &qprivamp::states::DensityOperator| {
            qprivamp::states::DensityOperator::from_hermitian(partial_trace(s.op(), 2, 2, Subsystem::A).unwrap()).unwrap()
        };
        let p = DivergenceParams::sandwiched(alpha);
        let full = renyi_divergence(&rho, &sigma, p).unwrap().to_f64();
        let part = renyi_divergence(&reduce(&rho), &reduce(&sigma), p).unwrap().to_f64();
        prop_assert!(part <= full + 1e-9);
    }

    #[test]
    fn club_between_vn_and_down(seed: u64, x in 2usize..=3, e in 2usize..=3, alpha in 0.5f64..0.99) {
        let st = cq_state(seed, x, e);
        let club = club_sandwiched(&st, alpha, None, &opts()).unwrap().value;
        let down = conditional_entropy(&st, &EntropyQuery::new(EntropyKind::SandwichedDown, alpha), &opts()).unwrap().value;
        prop_assert!(club >= vn_cond_entropy(&st) - 1e-6);
        prop_assert!(club <= down + 1e-9);
    }

    #[test]
    fn le_below_club(seed: u64, x in 2usize..=3, e in 2usize..=3, alpha in 0.55f64..0.95) {
        let st = cq_state(seed, x, e);
        let club = club_sandwiched(&st, alpha, None, &opts()).unwrap().value;
        let le = le_cond_entropy(&st, alpha, None, &opts()).unwrap().value;
        prop_assert!(le <= club + 1e-6);
    }

    #[test]
    fn uniform_product_all_kinds(seed: u64, x in 2usize..=4, alpha in 0.55f64..0.95) {
        let st = uniform_product(x, &random_density(&mut seeded_rng(seed), 2));
        let opts = SolverOptions { classical_shortcut: false, ..Default::default() };
        for kind in [EntropyKind::Club, EntropyKind::SandwichedDown, EntropyKind::SandwichedUp,
                     EntropyKind::PetzDown, EntropyKind::PetzUp, EntropyKind::Le] {
            let v = conditional_entropy(&st, &EntropyQuery::new(kind, alpha), &opts).unwrap().value;
            prop_assert!((v - (x as f64).ln()).abs() <= 1e-8, "{} gave {}", kind.name(), v);
        }
    }

    #[test]
    fn coarse_graining_reduces(seed: u64, table in proptest::collection::vec(0usize..2, 3), alpha in 0.5f64..0.95) {
        let st = cq_state(seed, 3, 2);
        let h = HashFunction::new(1, 3, 2, table).unwrap();
        let (before, after) = coarse_grain_entropy_check(&st, &h, alpha, None, &opts()).unwrap();
        prop_assert!(after <= before + 1e-8);
    }

    #[test]
    fn exponent_shape(seed: u64, r1 in 0.0f64..1.5, dr in 0.0f64..0.5) {
        let st = cq_state(seed, 2, 2);
        let e = Exponent::new(&st, opts());
        let a = e.epa(r1).unwrap().value;
        let b = e.epa(r1 + dr).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a - 1e-9);
        prop_assert!(b - a <= dr + 1e-7);
        if r1 <= vn_cond_entropy(&st) {
            prop_assert!(a <= 1e-9);
        }
    }

    #[test]
    fn hashing_keeps_marginal(seed: u64, n in 1usize..=2, idx in 0u64..16) {
        let st = cq_state(seed, 2, 2);
        let count = HashFunction::count(n, 2, 2).unwrap();
        let h = HashFunction::from_index(n, 2, 2, idx % count).unwrap();
        let hashed = apply_hash(&st, n, &h).unwrap();
        let target = marginal_e(&st.tensor_power(n));
        prop_assert!(marginal_e(&hashed).op().max_abs_diff(target.op()) <= 1e-12);
        let swapped = h.relabel(&[1, 0]).unwrap();
        let f = fidelity_to_ideal(&hashed, 2, &target).unwrap();
        let g = fidelity_to_ideal(&apply_hash(&st, n, &swapped).unwrap(), 2, &target).unwrap();
        prop_assert!((f - g).abs() <= 1e-12);
    }

    #[test]
    fn universal_dominates_powers(seed: u64, n in 2usize..=3) {
        let rho = random_density(&mut seeded_rng(seed), 2);
        let mut tau = rho.clone();
        for _ in 1..n {
            tau = tau.tensor(&rho);
        }
        let u = universal_state(n, 2).unwrap();
        prop_assert!(dominance_check(&tau, &u).unwrap() >= -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn curve_independent_of_execution(seed: u64) {
        let st = cq_state(seed, 2, 2);
        let seq = Exponent::new(&st, opts()).curve(0.0, 1.4, 15, Execution::Sequential).unwrap();
        let par = Exponent::new(&st, opts()).curve(0.0, 1.4, 15, Execution::Parallel).unwrap();
        prop_assert_eq!(seq.values, par.values);
        prop_assert_eq!(seq.alpha_star, par.alpha_star);
    }
}
