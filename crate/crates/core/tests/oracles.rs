//! Closed-form values and frozen reference values.

use approx::assert_abs_diff_eq;
use qprivamp::divergence::{fidelity, renyi_divergence, umegaki, DivergenceParams};
use qprivamp::entropy::{
    classical_club_closed_form, conditional_entropy, EntropyKind, EntropyQuery,
    SolverOptions,
};
use qprivamp::exponent::{comparison_bounds, g_variational, Exponent};
use qprivamp::pa::{apply_hash, best_hash_exhaustive, fidelity_to_ideal, HashFunction};
use qprivamp::parallel::Execution;
use qprivamp::states::{
    embed, fig1_state, marginal_e, random_classical, random_cq_seeded, random_density_seeded, seeded_rng,
    uniform_product, DensityOperator,
};
use qprivamp::symmetric::universal_state;

const LN2: f64 = std::f64::consts::LN_2;

fn bits(x: f64) -> f64 {
    x / LN2
}

fn entropy(st: &qprivamp::states::CQState, kind: EntropyKind, alpha: f64) -> f64 {
    conditional_entropy(st, &EntropyQuery::new(kind, alpha), &SolverOptions::default())
        .unwrap()
        .value
}

#[test]
fn fig1_marginals_and_embedding() {
    let f = fig1_state();
    let e = marginal_e(&f).diagonal();
    assert_abs_diff_eq!(e[0], 0.8, epsilon = 1e-15);
    assert_abs_diff_eq!(e[1], 0.2, epsilon = 1e-15);
    let joint = embed(&f).diagonal();
    for (a, b) in joint.iter().zip([0.1, 0.1, 0.7, 0.1]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
    }
}

#[test]
fn binary_divergences() {
    let rho = DensityOperator::from_diagonal(&[0.3, 0.7]).unwrap();
    let mixed = DensityOperator::maximally_mixed(2);
    assert_abs_diff_eq!(bits(umegaki(&rho, &mixed).unwrap().to_f64()), 0.118709, epsilon = 5e-7);
    let expect = 1.16f64.log2();
    assert_abs_diff_eq!(expect, 0.21413, epsilon = 1e-5);
    for p in [
        DivergenceParams::sandwiched(2.0),
        DivergenceParams::petz(2.0),
        DivergenceParams::alpha_z(2.0, 1.5),
    ] {
        assert_abs_diff_eq!(bits(renyi_divergence(&rho, &mixed, p).unwrap().to_f64()), expect, epsilon = 1e-12);
    }
}

#[test]
fn fig1_fidelity_to_ideal() {
    let f = fig1_state();
    let ideal = uniform_product(2, &marginal_e(&f));
    let fid = fidelity(&embed(&f), &embed(&ideal)).unwrap();
    assert_abs_diff_eq!(fid, 0.863320, epsilon = 5e-7);
    let id = HashFunction::identity(1, 2).unwrap();
    let hashed_f = fidelity_to_ideal(&apply_hash(&f, 1, &id).unwrap(), 2, &marginal_e(&f)).unwrap();
    assert_abs_diff_eq!(hashed_f, fid, epsilon = 1e-12);
}

#[test]
fn fig1_best_hashes() {
    let f = fig1_state();
    let opts = SolverOptions::default();
    let rep = best_hash_exhaustive(&f, 1, 2, &opts, Execution::Sequential).unwrap();
    assert_abs_diff_eq!(rep.best_fidelity, 0.863320, epsilon = 5e-7);
    assert_ne!(rep.best_hash.table()[0], rep.best_hash.table()[1]);
    let c = HashFunction::constant(1, 2, 2).unwrap();
    let fc = fidelity_to_ideal(&apply_hash(&f, 1, &c).unwrap(), 2, &marginal_e(&f)).unwrap();
    assert_abs_diff_eq!(fc, 0.5, epsilon = 1e-12);
    let one = best_hash_exhaustive(&f, 2, 1, &opts, Execution::Sequential).unwrap();
    assert_abs_diff_eq!(one.best_fidelity, 1.0, epsilon = 1e-12);
    let two = best_hash_exhaustive(&f, 2, 2, &opts, Execution::Sequential).unwrap();
    assert!(two.pass);
}

#[test]
fn universal_state_two_qubits() {
    let u = universal_state(2, 2).unwrap();
    let ev = u.omega.op().eigenvalues();
    for (i, v) in ev.iter().enumerate() {
        let expect = if i < 3 { 1.0 / 6.0 } else { 0.5 };
        assert_abs_diff_eq!(*v, expect, epsilon = 1e-12);
    }
    assert_eq!(u.g, 27.0);
    assert_eq!(u.g_tight, 6.0);
}

#[test]
fn fig1_entropies_frozen() {
    let f = fig1_state();
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::Vn, 1.0)), 0.634852, epsilon = 1e-6);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::Club, 0.5)), 0.787968, epsilon = 1e-6);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::Club, 0.7)), 0.719134542235, epsilon = 1e-9);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::Le, 0.7)), 0.719134542235, epsilon = 1e-9);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::SandwichedDown, 0.7)), 0.719741565000, epsilon = 1e-9);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::PetzDown, 0.7)), 0.719741565000, epsilon = 1e-9);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::SandwichedUp, 0.7)), 0.720661431241, epsilon = 1e-9);
    assert_abs_diff_eq!(bits(entropy(&f, EntropyKind::PetzUp, 0.7)), 0.720661431241, epsilon = 1e-9);
}

#[test]
fn fig1_exponent_frozen() {
    let f = fig1_state();
    let e = Exponent::new(&f, SolverOptions::default());
    assert_abs_diff_eq!(bits(e.critical_rate().unwrap()), 0.880369660846, epsilon = 1e-7);
    let v = e.epa(0.75 * LN2).unwrap();
    assert_abs_diff_eq!(bits(v.value), 0.015692798146, epsilon = 1e-9);
    assert_abs_diff_eq!(v.alpha_star, 0.771385925149, epsilon = 1e-5);
    assert_eq!(e.epa(0.5 * LN2).unwrap().value, 0.0);
    let zero = e.epa(0.0).unwrap();
    assert_eq!(zero.value, 0.0);
    assert_abs_diff_eq!(zero.alpha_star, 1.0, epsilon = 1e-5);
}

#[test]
fn quantum_state_frozen() {
    let q = random_cq_seeded(1, 2, 2);
    let cases = [
        (EntropyKind::Vn, 0.782436379426),
        (EntropyKind::Club, 0.831325543260),
        (EntropyKind::PetzDown, 0.830044224320),
        (EntropyKind::PetzUp, 0.830772173542),
        (EntropyKind::SandwichedUp, 0.832711752034),
        (EntropyKind::SandwichedDown, 0.831932419724),
        (EntropyKind::Le, 0.826129786002),
    ];
    for (kind, v) in cases {
        assert_abs_diff_eq!(bits(entropy(&q, kind, 0.75)), v, epsilon = 1e-8);
    }
    let opts = SolverOptions::default();
    let e = Exponent::new(&q, opts);
    assert_abs_diff_eq!(bits(e.critical_rate().unwrap()), 0.943836707696, epsilon = 1e-7);
    assert_abs_diff_eq!(bits(e.epa(LN2).unwrap().value), 0.113398213407, epsilon = 1e-8);
    assert_abs_diff_eq!(bits(g_variational(&q, LN2, &opts).unwrap()), 0.122583763061, epsilon = 1e-6);
    let b = comparison_bounds(&q, LN2, &opts).unwrap();
    assert_abs_diff_eq!(bits(b.petz_lower), 0.059798044686, epsilon = 1e-6);
    assert_abs_diff_eq!(bits(b.arrow_up), 0.111296387761, epsilon = 1e-6);
}

#[test]
fn uniform_product_landmarks() {
    let sigma = random_density_seeded(11, 2);
    let st = uniform_product(3, &sigma);
    let log_x = 3f64.ln();
    let opts = SolverOptions::default();
    let e = Exponent::new(&st, opts);
    assert_abs_diff_eq!(e.critical_rate().unwrap(), log_x, epsilon = 1e-6);
    for rate in [0.5, log_x + 0.2] {
        let expect = (rate - log_x).max(0.0);
        assert_abs_diff_eq!(e.epa(rate).unwrap().value, expect, epsilon = 1e-8);
        assert_abs_diff_eq!(g_variational(&st, rate, &opts).unwrap(), expect, epsilon = 1e-6);
        let b = comparison_bounds(&st, rate, &opts).unwrap();
        assert_abs_diff_eq!(b.arrow_up, expect, epsilon = 1e-6);
    }
}

#[test]
fn random_classical_3x3_at_0_7() {
    let cq = random_classical(&mut seeded_rng(77), 3, 3);
    let opts = SolverOptions {
        classical_shortcut: false,
        ..Default::default()
    };
    let m = conditional_entropy(&cq, &EntropyQuery::new(EntropyKind::Club, 0.7), &opts).unwrap();
    let c = classical_club_closed_form(&cq.joint_table().unwrap(), 0.7).unwrap();
    assert!((m.value - c).abs() <= 1e-5);
}
