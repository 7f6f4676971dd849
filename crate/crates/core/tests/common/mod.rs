#![allow(dead_code)]

use feedback_skin::fock::{fock_entropy, fock_from_slater, quadratic_operator, FockEngine, FockVector};
use feedback_skin::model::{build_hamiltonian, build_jump_modes, ModelParams};
use feedback_skin::observables::{cross_block_norm, default_mutual_info_regions};
use feedback_skin::state::{domain_wall_state, CorrelationMatrix, Side};
use feedback_skin::{Engine, ObservableSet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn unit(sites: usize, k: usize) -> Vec<Complex64> {
    let mut e = vec![ZERO; sites];
    e[k] = Complex64::new(1.0, 0.0);
    e
}

/// `C_ij = ⟨c†_i c_j⟩ = ⟨c_i ψ | c_j ψ⟩`.
pub fn fock_correlation(psi: &FockVector) -> CorrelationMatrix {
    let l = psi.sites;
    let phi: Vec<FockVector> = (0..l).map(|j| psi.annihilate(&unit(l, j))).collect();
    CorrelationMatrix {
        entries: DMatrix::from_fn(l, l, |i, j| phi[i].inner(&phi[j])),
    }
}

/// Adjoint Lindblad generator applied to `x/N`: the operator whose
/// expectation value is the drift of the mean position per particle.
pub fn fock_velocity_operator(params: &ModelParams) -> DMatrix<Complex64> {
    let l = params.sites;
    let dim = 1usize << l;
    let h = quadratic_operator(&build_hamiltonian(params).unwrap().entries).unwrap();
    let x = DMatrix::from_fn(dim, dim, |a, b| {
        if a != b {
            return ZERO;
        }
        let pos: f64 = (0..l).filter(|s| a & (1 << s) != 0).map(|s| (s + 1) as f64).sum();
        Complex64::new(pos / params.particles as f64, 0.0)
    });
    let i = Complex64::new(0.0, 1.0);
    let mut k = (&h * &x - &x * &h) * i;
    let phase = Complex64::from_polar(1.0, params.theta);
    for mode in build_jump_modes(params).unwrap() {
        let dd = quadratic_operator(&mode.projector()).unwrap();
        let f = DMatrix::from_fn(dim, dim, |a, b| {
            if a != b {
                ZERO
            } else if a & (1 << mode.feedback_site) != 0 {
                phase
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        let jump = &f * &dd;
        let ldl = jump.adjoint() * &jump;
        let term = jump.adjoint() * &x * &jump - (&ldl * &x + &x * &ldl) * Complex64::new(0.5, 0.0);
        k += term * Complex64::new(params.gamma, 0.0);
    }
    k
}

pub fn expectation(psi: &FockVector, op: &DMatrix<Complex64>) -> f64 {
    psi.amplitudes.dotc(&(op * &psi.amplitudes)).re
}

/// Shared sequence of uniforms consumed by both integrators.
pub struct Tape {
    values: Vec<f64>,
    pos: usize,
}

impl Tape {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            values: (0..len).map(|_| rng.random::<f64>()).collect(),
            pos: 0,
        }
    }

    pub fn next(&mut self) -> f64 {
        let v = self.values[self.pos];
        self.pos += 1;
        v
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Runs both integrators on one tape and returns the worst fidelity loss
/// and the worst observable deviation.
pub fn compare_with_fock(params: &ModelParams, steps: usize, seed: u64) -> (f64, f64, usize) {
    let engine = Engine::new(params, ObservableSet::all()).unwrap();
    let fock = FockEngine::new(
        &engine.effective.entries,
        &engine.modes,
        params.gamma,
        params.dt,
        params.theta,
    )
    .unwrap();
    let mut state = engine.initial_state().unwrap();
    let mut psi = fock_from_slater(&state).unwrap();
    let velocity_op = fock_velocity_operator(params);
    let reference = fock_from_slater(&domain_wall_state(params.sites, Side::Left).unwrap()).unwrap();
    let half: Vec<usize> = (0..params.sites / 2).collect();
    let (a, b) = default_mutual_info_regions(params.sites);
    let ab: Vec<usize> = a.iter().chain(&b).copied().collect();

    let mut tape_g = Tape::new(steps * params.sites, seed);
    let mut tape_f = Tape::new(steps * params.sites, seed);
    let mut worst_fid = 0.0f64;
    let mut worst_obs = 0.0f64;
    let mut jumps = 0;
    for step in 1..=steps {
        let rg = engine.step(&mut state, false, || tape_g.next()).unwrap();
        let rf = fock.step(&mut psi, false, || tape_f.next()).unwrap();
        assert_eq!(rg.jumps, rf, "jump decisions diverged at step {step}");
        jumps += rf.len();

        let overlap = fock_from_slater(&state).unwrap().inner(&psi);
        worst_fid = worst_fid.max(1.0 - overlap.norm_sqr());

        let rec = engine.observables.record(&state, step as f64 * params.dt);
        let c = fock_correlation(&psi);
        let density: Vec<f64> = (0..params.sites).map(|i| c.entries[(i, i)].re).collect();
        let mut dev: Vec<f64> = rec.density.iter().zip(&density).map(|(x, y)| (x - y).abs()).collect();
        dev.push((rec.entropy_half - fock_entropy(&psi, &half)).abs());
        let mi = fock_entropy(&psi, &a) + fock_entropy(&psi, &b) - fock_entropy(&psi, &ab);
        dev.push((rec.mutual_info - mi).abs());
        dev.push((rec.skin_fidelity - reference.inner(&psi).norm_sqr()).abs());
        dev.push((rec.cross_block_norm - cross_block_norm(&c)).abs());
        dev.push((rec.velocity - expectation(&psi, &velocity_op)).abs());
        worst_obs = dev.into_iter().fold(worst_obs, f64::max);
    }
    assert_eq!(tape_g.position(), tape_f.position());
    (worst_fid, worst_obs, jumps)
}
