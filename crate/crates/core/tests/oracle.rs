//! Gaussian integrator against the exact Fock-space reference.

mod common;

use common::{compare_with_fock as compare, expectation, fock_correlation, fock_velocity_operator};
use feedback_skin::fock::{fock_apply_jump, fock_entropy, fock_from_slater, fock_mode_occupation};
use feedback_skin::model::{build_jump_modes, BoundaryCondition, FeedbackVariant};
use feedback_skin::observables::particle_velocity;
use feedback_skin::trajectory::{apply_jump, mode_occupation};
use feedback_skin::{ModelParams, SlaterState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn trajectories_match_fock_space() {
    for sites in [4, 6, 8] {
        for tilt in [0.0, 0.6] {
            let p = ModelParams::new(sites).with_tilt(tilt);
            let (fid, obs, jumps) = compare(&p, 100, 11 + sites as u64);
            assert!(jumps > 0, "L={sites}: tape produced no jumps");
            assert!(fid < 1e-6, "L={sites} Δ={tilt}: fidelity loss {fid:e}");
            assert!(obs < 1e-8, "L={sites} Δ={tilt}: observable deviation {obs:e}");
        }
    }
}

#[test]
fn periodic_variants_match_fock_space() {
    for feedback in [FeedbackVariant::Bulk, FeedbackVariant::Edge] {
        let p = ModelParams::new(6)
            .with_boundary(BoundaryCondition::Pbc)
            .with_feedback(feedback)
            .with_tilt(0.6)
            .with_theta(0.6 * std::f64::consts::PI);
        let (fid, obs, _) = compare(&p, 100, 5);
        assert!(fid < 1e-6, "{feedback:?}: fidelity loss {fid:e}");
        assert!(obs < 1e-8, "{feedback:?}: observable deviation {obs:e}");
    }
}

#[test]
fn single_jumps_match_fock_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for theta in [std::f64::consts::PI, 0.8 * std::f64::consts::PI, 0.3] {
        let p = ModelParams::new(8).with_theta(theta);
        let state = SlaterState::random(8, 4, &mut rng).unwrap();
        let psi = fock_from_slater(&state).unwrap();
        for mode in build_jump_modes(&p).unwrap() {
            let occ = mode_occupation(&state, &mode);
            assert!((occ - fock_mode_occupation(&psi, &mode)).abs() < 1e-12);
            let out = fock_from_slater(&apply_jump(&state, &mode, theta).unwrap()).unwrap();
            let expected = fock_apply_jump(&psi, &mode, theta).unwrap();
            assert!(1.0 - out.inner(&expected).norm_sqr() < 1e-9);
        }
    }
}

#[test]
fn entropy_matches_reduced_density_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (l, n) in [(4, 2), (6, 3), (8, 4), (8, 3)] {
        let state = SlaterState::random(l, n, &mut rng).unwrap();
        let psi = fock_from_slater(&state).unwrap();
        let c = state.correlation_matrix();
        for sub in [vec![0], vec![0, 1], vec![1, 3], (0..l / 2).collect::<Vec<_>>()] {
            let s = feedback_skin::observables::entanglement_entropy(&c, &sub);
            assert!((s - fock_entropy(&psi, &sub)).abs() < 1e-8, "L={l} {sub:?}");
        }
        let fc = fock_correlation(&psi);
        assert!(common::max_abs(&(&fc.entries - &c.entries)) < 1e-12);
    }
}

#[test]
fn velocity_matches_lindblad_drift() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (tilt, theta, bc) in [
        (0.0, std::f64::consts::PI, BoundaryCondition::Obc),
        (0.6, 0.6 * std::f64::consts::PI, BoundaryCondition::Obc),
        (0.6, std::f64::consts::PI, BoundaryCondition::Pbc),
    ] {
        let p = ModelParams::new(6).with_tilt(tilt).with_theta(theta).with_boundary(bc);
        let op = fock_velocity_operator(&p);
        for _ in 0..4 {
            let state = SlaterState::random(6, 3, &mut rng).unwrap();
            let v = particle_velocity(&state, &p).unwrap();
            let oracle = expectation(&fock_from_slater(&state).unwrap(), &op);
            assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
        }
    }
}
