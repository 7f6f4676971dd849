//! Exact reference on the full `2^L` Fock space, for `L <= 10`.
//!
//! Basis index bit `l` is the occupation of site `l`, so site 0 is the least
//! significant bit. Basis states are
//! `|n⟩ = (c†_0)^{n_0} (c†_1)^{n_1} ⋯ (c†_{L-1})^{n_{L-1}} |0⟩`, which gives
//! `c†_j` the Jordan-Wigner sign `(−1)^{Σ_{i<j} n_i}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::BondMode;
use crate::state::SlaterState;

pub const MAX_SITES: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub amplitudes: DVector<Complex64>,
    pub sites: usize,
}

fn check_sites(sites: usize) -> Result<()> {
    if sites > MAX_SITES {
        return Err(Error::SystemTooLarge {
            l: sites,
            max: MAX_SITES,
        });
    }
    Ok(())
}

#[inline]
fn jw_sign(basis: usize, site: usize) -> f64 {
    if (basis & ((1 << site) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl FockVector {
    pub fn vacuum(sites: usize) -> Result<Self> {
        check_sites(sites)?;
        let mut amplitudes = DVector::from_element(1 << sites, ZERO);
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, sites })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Option<Self> {
        let norm = self.norm();
        if !(norm > 1e-300) {
            return None;
        }
        self.amplitudes /= Complex64::new(norm, 0.0);
        Some(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `Σ_l u_l c†_l` applied to the state.
    pub fn create(&self, orbital: &[Complex64]) -> Self {
        let mut out = DVector::from_element(self.amplitudes.len(), ZERO);
        for (basis, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (site, &u) in orbital.iter().enumerate() {
                if basis & (1 << site) == 0 && u != ZERO {
                    out[basis | (1 << site)] += a * u * jw_sign(basis, site);
                }
            }
        }
        Self {
            amplitudes: out,
            sites: self.sites,
        }
    }

    /// `Σ_l w_l c_l` applied to the state.
    pub fn annihilate(&self, mode: &[Complex64]) -> Self {
        let mut out = DVector::from_element(self.amplitudes.len(), ZERO);
        for (basis, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (site, &w) in mode.iter().enumerate() {
                if basis & (1 << site) != 0 && w != ZERO {
                    out[basis & !(1 << site)] += a * w * jw_sign(basis, site);
                }
            }
        }
        Self {
            amplitudes: out,
            sites: self.sites,
        }
    }

    /// `⟨n_l⟩` per site.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.amplitudes.norm_squared();
        (0..self.sites)
            .map(|site| {
                self.amplitudes
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| b & (1 << site) != 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum::<f64>()
                    / norm
            })
            .collect()
    }
}

/// Literal expansion of `Π_n (Σ_l U_ln c†_l) |0⟩`.
pub fn fock_from_slater(state: &SlaterState) -> Result<FockVector> {
    let sites = state.sites();
    let mut psi = FockVector::vacuum(sites)?;
    let u = state.orbitals();
    for n in (0..state.particles()).rev() {
        let orbital: Vec<Complex64> = u.column(n).iter().copied().collect();
        psi = psi.create(&orbital);
    }
    Ok(psi)
}

/// Many-body matrix of `Σ_ij h_ij c†_i c_j`.
pub fn quadratic_operator(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let sites = h.nrows();
    check_sites(sites)?;
    let dim = 1 << sites;
    let mut op = DMatrix::from_element(dim, dim, ZERO);
    for basis in 0..dim {
        for j in 0..sites {
            if basis & (1 << j) == 0 {
                continue;
            }
            let removed = basis & !(1 << j);
            let s1 = jw_sign(basis, j);
            for i in 0..sites {
                let hij = h[(i, j)];
                if hij == ZERO || removed & (1 << i) != 0 {
                    continue;
                }
                let target = removed | (1 << i);
                op[(target, basis)] += hij * s1 * jw_sign(removed, i);
            }
        }
    }
    Ok(op)
}

/// `exp(−i H dt)` on the Fock space.
#[derive(Clone, Debug)]
pub struct FockPropagator {
    pub matrix: DMatrix<Complex64>,
}

pub fn many_body_propagator(h_many_body: &DMatrix<Complex64>, dt: f64) -> FockPropagator {
    FockPropagator {
        matrix: (h_many_body * Complex64::new(0.0, -dt)).exp(),
    }
}

/// Normalized non-Hermitian drift.
pub fn fock_evolve_step(psi: &FockVector, propagator: &FockPropagator) -> Result<FockVector> {
    FockVector {
        amplitudes: &propagator.matrix * &psi.amplitudes,
        sites: psi.sites,
    }
    .normalized()
    .ok_or(Error::ZeroNorm { bond: usize::MAX })
}

/// `‖d_l ψ‖² = ⟨d†_l d_l⟩` for a normalized state.
pub fn fock_mode_occupation(psi: &FockVector, mode: &BondMode) -> f64 {
    let w: Vec<Complex64> = mode.amplitudes.iter().copied().collect();
    psi.annihilate(&w).amplitudes.norm_squared()
}

/// `e^{iθ n_f} d†_l d_l ψ`, normalized.
pub fn fock_apply_jump(psi: &FockVector, mode: &BondMode, theta: f64) -> Result<FockVector> {
    let w: Vec<Complex64> = mode.amplitudes.iter().copied().collect();
    let w_conj: Vec<Complex64> = w.iter().map(|z| z.conj()).collect();
    let mut out = psi.annihilate(&w).create(&w_conj);
    let phase = Complex64::from_polar(1.0, theta);
    for (basis, a) in out.amplitudes.iter_mut().enumerate() {
        if basis & (1 << mode.feedback_site) != 0 {
            *a *= phase;
        }
    }
    out.normalized().ok_or(Error::ZeroNorm { bond: mode.bond })
}

/// Von Neumann entropy (natural log) of the reduced density matrix on
/// `subsystem`. Modes are reordered with their fermionic sign so that the
/// subsystem comes first before the partial trace.
pub fn fock_entropy(psi: &FockVector, subsystem: &[usize]) -> f64 {
    let sites = psi.sites;
    let rest: Vec<usize> = (0..sites).filter(|s| !subsystem.contains(s)).collect();
    let dim_a = 1 << subsystem.len();
    let dim_b = 1 << rest.len();
    let mut m = DMatrix::from_element(dim_a, dim_b, ZERO);
    for (basis, &amp) in psi.amplitudes.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let mut ia = 0;
        for (k, &s) in subsystem.iter().enumerate() {
            if basis & (1 << s) != 0 {
                ia |= 1 << k;
            }
        }
        let mut ib = 0;
        for (k, &s) in rest.iter().enumerate() {
            if basis & (1 << s) != 0 {
                ib |= 1 << k;
            }
        }
        let mut swaps = 0;
        for &j in subsystem.iter().filter(|&&j| basis & (1 << j) != 0) {
            swaps += rest
                .iter()
                .filter(|&&i| i < j && basis & (1 << i) != 0)
                .count();
        }
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        m[(ia, ib)] += amp * sign;
    }
    let rho = &m * m.adjoint();
    let trace = rho.trace().re;
    rho.symmetric_eigenvalues()
        .iter()
        .map(|&mu| mu / trace)
        .filter(|&mu| mu > 1e-15)
        .map(|mu| -mu * mu.ln())
        .sum()
}

/// Jump trajectory on the Fock space mirroring [`crate::trajectory::Engine`].
#[derive(Clone, Debug)]
pub struct FockEngine {
    pub propagator: FockPropagator,
    pub modes: Vec<BondMode>,
    pub gamma: f64,
    pub dt: f64,
    pub theta: f64,
}

impl FockEngine {
    pub fn new(effective: &DMatrix<Complex64>, modes: &[BondMode], gamma: f64, dt: f64, theta: f64) -> Result<Self> {
        let h_mb = quadratic_operator(effective)?;
        Ok(Self {
            propagator: many_body_propagator(&h_mb, dt),
            modes: modes.to_vec(),
            gamma,
            dt,
            theta,
        })
    }

    /// Same sampling contract as the Gaussian engine: one uniform per bond,
    /// probabilities from the drifted state, jumps in ascending order.
    pub fn step<F: FnMut() -> f64>(&self, psi: &mut FockVector, no_click: bool, mut uniforms: F) -> Result<Vec<usize>> {
        *psi = fock_evolve_step(psi, &self.propagator)?;
        let mut jumps = Vec::new();
        if no_click || self.gamma == 0.0 {
            return Ok(jumps);
        }
        let probabilities: Vec<f64> = self
            .modes
            .iter()
            .map(|m| self.gamma * self.dt * fock_mode_occupation(psi, m))
            .collect();
        for (mode, p) in self.modes.iter().zip(&probabilities) {
            if uniforms() < *p {
                jumps.push(mode.bond);
            }
        }
        for mode in self.modes.iter().filter(|m| jumps.contains(&m.bond)) {
            *psi = fock_apply_jump(psi, mode, self.theta)?;
        }
        Ok(jumps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_jump_modes, ModelParams};
    use crate::state::neel_state;
    use approx::assert_abs_diff_eq;

    #[test]
    fn neel_is_single_basis_state() {
        let psi = fock_from_slater(&neel_state(4).unwrap()).unwrap();
        // Sites 2 and 4 (0-based 1 and 3) occupied: bits 0b1010.
        assert_abs_diff_eq!(psi.amplitudes[0b1010].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fock_entropy(&psi, &[0, 1]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn too_many_sites() {
        assert!(matches!(FockVector::vacuum(11), Err(Error::SystemTooLarge { .. })));
    }

    #[test]
    fn two_site_jump() {
        let p = ModelParams::new(2);
        let modes = build_jump_modes(&p).unwrap();
        let psi = fock_from_slater(&SlaterState::product(2, &[1]).unwrap()).unwrap();
        let out = fock_apply_jump(&psi, &modes[0], std::f64::consts::PI).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // Orbital (i, −1)/√2: amplitude i/√2 on |10⟩ (bit 0) and −1/√2 on |01⟩.
        let expected = [Complex64::new(0.0, h), Complex64::new(-h, 0.0)];
        let phase = out.amplitudes[0b01] / expected[0];
        assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-14);
        assert!((out.amplitudes[0b10] - expected[1] * phase).norm() < 1e-14);
    }

    #[test]
    fn jump_on_empty_bond_has_zero_norm() {
        let p = ModelParams::new(4);
        let modes = build_jump_modes(&p).unwrap();
        let psi = fock_from_slater(&SlaterState::product(4, &[0, 1]).unwrap()).unwrap();
        assert!(matches!(fock_apply_jump(&psi, &modes[2], 0.0), Err(Error::ZeroNorm { bond: 2 })));
    }

    #[test]
    fn number_operator_is_diagonal() {
        let h = DMatrix::from_diagonal(&DVector::from_element(3, Complex64::new(1.0, 0.0)));
        let op = quadratic_operator(&h).unwrap();
        for b in 0..8usize {
            assert_abs_diff_eq!(op[(b, b)].re, b.count_ones() as f64, epsilon = 1e-15);
        }
    }
}
