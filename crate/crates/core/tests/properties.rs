use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eur_core::entropy::{
    conditional_entropy, cq_state, fano_bound, h_r_given_b, h_r_given_rb, joint_distribution,
};
use eur_core::optimize::{closed_form_terms, minimize_state, THETA_GRID_POINTS};
use eur_core::qmath::{hermitian_eig, ComplexMatrix, partial_trace, tensor_product, Subsystem};
use eur_core::random;
use eur_core::states::{
    apply_white_noise, fidelity_with_pure, linear_basis, schmidt_state, tangle, MeasurementBasis,
    NoiseModel, SchmidtParams,
};
use eur_core::tomography::{mle_from_projectors, overcomplete_settings, simulate_counts, CountMode};
use eur_core::uncertainty::{evaluate_berta, witness, Verdict};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = random::hermitian2(&mut g);
        let b = ComplexMatrix::ket(&random::pure_ket(&mut g, 2)).unwrap();
        let c = ComplexMatrix::ket(&random::pure_ket(&mut g, 2)).unwrap().adjoint();
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>()) {
        let rho = random::mixed_two_qubit_state(&mut rng(seed));
        let t = rho.matrix().trace();
        for keep in [Subsystem::A, Subsystem::B] {
            let red = partial_trace(rho.matrix(), keep).unwrap();
            prop_assert!((red.trace() - t).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_trace_and_determinant(seed in any::<u64>()) {
        let h = random::hermitian2(&mut rng(seed));
        let spec = hermitian_eig(&h).unwrap();
        let (l0, l1) = (spec.eigenvalues[0], spec.eigenvalues[1]);
        let det = (h.get(0, 0) * h.get(1, 1) - h.get(0, 1) * h.get(1, 0)).re;
        prop_assert!((l0 + l1 - h.trace().re).abs() < 1e-10);
        prop_assert!((l0 * l1 - det).abs() < 1e-8);
        prop_assert!(spec.reconstruct().max_abs_diff(&h) < 1e-10);
    }

    #[test]
    fn density_matrix_spectrum_is_nonnegative(seed in any::<u64>()) {
        let rho = random::mixed_two_qubit_state(&mut rng(seed));
        let spec = hermitian_eig(rho.matrix()).unwrap();
        prop_assert!(spec.eigenvalues.iter().all(|&l| l >= -1e-10));
        prop_assert!((spec.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schmidt_tangle_is_local_unitary_invariant(zeta in 0.0..FRAC_PI_4, theta in 0.0..PI, phi in 0.0..(2.0 * PI)) {
        let params = SchmidtParams::new(zeta, theta, phi).unwrap();
        let expected = (2.0 * zeta).sin().powi(2);
        prop_assert!((tangle(&schmidt_state(&params)).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn white_noise_fidelity(seed in any::<u64>(), p in 0.0..=1.0f64) {
        let sigma = random::pure_state(&mut rng(seed), 4);
        let noisy = apply_white_noise(&sigma, NoiseModel::new(p).unwrap());
        prop_assert!(noisy.matrix().hermiticity_defect() < 1e-12);
        prop_assert!((noisy.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(noisy.eigenvalues().iter().all(|&l| l >= -1e-10));
        prop_assert!((fidelity_with_pure(&noisy, &sigma).unwrap() - (p + (1.0 - p) / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn data_processing_chain(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rho = random::mixed_two_qubit_state(&mut g);
        let (a, b) = (random::basis(&mut g), random::basis(&mut g));
        let tomo = h_r_given_b(&rho, &a).unwrap();
        let dist = joint_distribution(&rho, &a, &b).unwrap();
        let meas = h_r_given_rb(&dist);
        prop_assert!(tomo <= meas + 1e-9);
        prop_assert!(meas <= fano_bound(dist.mismatch()).unwrap() + 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&tomo));
    }

    #[test]
    fn three_term_formula_matches_cq_state(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rho = random::mixed_two_qubit_state(&mut g);
        let basis = random::basis(&mut g);
        let direct = h_r_given_b(&rho, &basis).unwrap();
        let via_cq = conditional_entropy(&cq_state(&rho, &basis).unwrap()).unwrap();
        prop_assert!((direct - via_cq).abs() < 1e-9);
    }

    #[test]
    fn conditional_entropy_at_least_minus_one(seed in any::<u64>()) {
        let rho = random::pure_state(&mut rng(seed), 4);
        prop_assert!(conditional_entropy(&rho).unwrap() >= -1.0 - 1e-12);
    }

    #[test]
    fn entropies_ignore_outcome_relabeling(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rho = random::mixed_two_qubit_state(&mut g);
        let (r, s) = (random::basis(&mut g), random::basis(&mut g));
        let (br, bs) = (random::basis(&mut g), random::basis(&mut g));
        let a = evaluate_berta(&rho, &r, &s, &br, &bs).unwrap();
        let b = evaluate_berta(&rho, &r.swapped(), &s.swapped(), &br.swapped(), &bs.swapped()).unwrap();
        prop_assert!((a.lhs_tomographic - b.lhs_tomographic).abs() < 1e-9);
        prop_assert!((a.lhs_measurement - b.lhs_measurement).abs() < 1e-9);
        prop_assert!((a.lhs_fano - b.lhs_fano).abs() < 1e-9);
        prop_assert!((a.rhs_raw - b.rhs_raw).abs() < 1e-9);
    }

    #[test]
    fn report_ordering_always_holds(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rho = random::mixed_two_qubit_state(&mut g);
        let (r, s) = (random::basis(&mut g), random::basis(&mut g));
        let rep = evaluate_berta(&rho, &r, &s, &r, &s).unwrap();
        prop_assert!(rep.ordering_holds(1e-9));
        prop_assert!(rep.berta_slack() >= -1e-8);
    }

    #[test]
    fn separable_states_never_fire(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rho = random::separable_two_qubit_state(&mut g, 4);
        let (r, s) = (random::basis(&mut g), random::basis(&mut g));
        let (br, bs) = (random::basis(&mut g), random::basis(&mut g));
        let rep = evaluate_berta(&rho, &r, &s, &br, &bs).unwrap();
        for lhs in [rep.lhs_tomographic, rep.lhs_measurement, rep.lhs_fano] {
            prop_assert_eq!(witness(lhs, rep.log_inv_c), Verdict::Inconclusive);
        }
    }

    #[test]
    fn conjugate_aligned_states_saturate(zeta in 0.0..=FRAC_PI_4) {
        let rho = schmidt_state(&SchmidtParams::new(zeta, 0.0, 0.0).unwrap());
        let (x, z) = (MeasurementBasis::x(), MeasurementBasis::z());
        let rep = evaluate_berta(&rho, &x, &z, &x, &z).unwrap();
        prop_assert!((rep.lhs_tomographic - rep.rhs_raw).abs() < 1e-9);
    }

    #[test]
    fn phase_pi_reflects_theta(zeta in 0.0..=FRAC_PI_4, theta in 0.0..PI, omega in 0.0..=FRAC_PI_2) {
        let a = closed_form_terms(&SchmidtParams::new(zeta, theta, PI).unwrap(), omega);
        let b = closed_form_terms(&SchmidtParams::new(zeta, PI - theta, 0.0).unwrap(), omega);
        prop_assert!((a.lhs() - b.lhs()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_pipeline(zeta in 0.0..=FRAC_PI_4, theta in 0.0..PI, phi in 0.0..(2.0 * PI), omega in 0.0..=FRAC_PI_2) {
        let params = SchmidtParams::new(zeta, theta, phi).unwrap();
        let cf = closed_form_terms(&params, omega);
        let rho = schmidt_state(&params);
        let (r, z) = (linear_basis(omega), MeasurementBasis::z());
        let rep = evaluate_berta(&rho, &r, &z, &r, &z).unwrap();
        prop_assert!((cf.lhs() - rep.lhs_tomographic).abs() < 1e-9);
        prop_assert!((cf.rhs() - rep.rhs_raw).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minimizer_dominates_grid(zeta in 0.0..=FRAC_PI_4, omega in 0.0..=FRAC_PI_4) {
        let m = minimize_state(zeta, omega).unwrap();
        for phi in [0.0, PI] {
            for i in 0..THETA_GRID_POINTS {
                let theta = PI * i as f64 / (THETA_GRID_POINTS - 1) as f64;
                let v = closed_form_terms(&SchmidtParams::new(zeta, theta.min(PI - 1e-15), phi).unwrap(), omega).lhs();
                prop_assert!(m.min_sum <= v + 1e-12);
            }
        }
    }

    #[test]
    fn mle_output_is_a_state_for_any_counts(counts in proptest::collection::vec(0u32..50, 144)) {
        let projectors: Vec<_> = overcomplete_settings()
            .iter()
            .flat_map(|s| (0..4).map(move |j| s.projector(j)))
            .collect();
        let counts: Vec<f64> = counts.into_iter().map(f64::from).collect();
        prop_assume!(counts.iter().sum::<f64>() > 0.0);
        let fit = mle_from_projectors(&projectors, &counts).unwrap();
        let m = fit.rho_hat.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(fit.rho_hat.eigenvalues().iter().all(|&l| l >= -1e-10));
        for w in fit.loglik_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn simulated_totals_are_exact(seed in any::<u64>(), shots in 1u64..5000) {
        let rho = random::mixed_two_qubit_state(&mut rng(seed));
        for mode in [CountMode::Multinomial, CountMode::Exact] {
            let table = simulate_counts(&rho, &overcomplete_settings(), shots, seed, mode).unwrap();
            for row in &table.rows {
                prop_assert!((row.counts.iter().sum::<f64>() - shots as f64).abs() < 1e-9);
            }
        }
    }
}
