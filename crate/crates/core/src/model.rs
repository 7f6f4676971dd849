//! Single-particle description of the tilted, monitored chain.
//!
//! Every quadratic operator `Σ_ij h_ij c†_i c_j` is stored as its `L × L`
//! coefficient matrix `h`. Sites are 0-based in code; the tilt uses the
//! physical 1-based label, so site `i` carries the potential `Δ·(i+1)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Obc,
    Pbc,
}

/// Which bonds carry a monitored jump.
///
/// `Bulk` monitors bonds `1..L-1` only (under PBC the wrap bond has hopping
/// but neither a jump nor a dissipator). `Edge` adds the wrap bond `(L, 1)`
/// with feedback on site 1 and is only defined for PBC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackVariant {
    Bulk,
    Edge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// `|0101…01⟩`: even physical sites 2, 4, …, L occupied.
    Neel,
    /// `|1010…10⟩`: odd physical sites occupied.
    AntiNeel,
    /// Left half filled; the ideal skin state.
    DomainWallLeft,
    /// Right half filled; the reverse skin state.
    DomainWallRight,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "obc" | "open" => Ok(Self::Obc),
            "pbc" | "periodic" => Ok(Self::Pbc),
            other => Err(format!("unknown boundary condition '{other}' (obc, pbc)")),
        }
    }
}

impl std::str::FromStr for FeedbackVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bulk" => Ok(Self::Bulk),
            "edge" => Ok(Self::Edge),
            other => Err(format!("unknown feedback variant '{other}' (bulk, edge)")),
        }
    }
}

impl std::str::FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "neel" => Ok(Self::Neel),
            "anti-neel" => Ok(Self::AntiNeel),
            "domain-wall-left" => Ok(Self::DomainWallLeft),
            "domain-wall-right" => Ok(Self::DomainWallRight),
            other => Err(format!(
                "unknown initial state '{other}' (neel, anti-neel, domain-wall-left, domain-wall-right)"
            )),
        }
    }
}

/// Physical and protocol configuration of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chain length `L`.
    pub sites: usize,
    /// Particle number `N`.
    pub particles: usize,
    /// Hopping amplitude `J`.
    pub hopping: f64,
    /// Tilt gradient `Δ`.
    pub tilt: f64,
    /// Monitoring rate `γ`.
    pub gamma: f64,
    /// Feedback phase `θ` in radians.
    pub theta: f64,
    pub boundary: BoundaryCondition,
    pub feedback: FeedbackVariant,
    /// Integration step in units of `1/J`.
    pub dt: f64,
    /// Final time in units of `τ`.
    pub t_max_over_tau: f64,
    /// Time scale `τ`; `None` means `L/|J|`.
    pub tau: Option<f64>,
    pub initial: InitialState,
}

impl ModelParams {
    /// Half-filled OBC chain with `J = 1`, `γ = 0.5`, `θ = π`, `dt = 0.05`,
    /// starting from the Néel state.
    pub fn new(sites: usize) -> Self {
        Self {
            sites,
            particles: sites / 2,
            hopping: 1.0,
            tilt: 0.0,
            gamma: 0.5,
            theta: std::f64::consts::PI,
            boundary: BoundaryCondition::Obc,
            feedback: FeedbackVariant::Bulk,
            dt: 0.05,
            t_max_over_tau: 3.0,
            tau: None,
            initial: InitialState::Neel,
        }
    }

    pub fn with_tilt(mut self, tilt: f64) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundaryCondition) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_feedback(mut self, feedback: FeedbackVariant) -> Self {
        self.feedback = feedback;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_max(mut self, t_max_over_tau: f64) -> Self {
        self.t_max_over_tau = t_max_over_tau;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(self.sites as f64 / self.hopping.abs())
    }

    pub fn t_max(&self) -> f64 {
        self.t_max_over_tau * self.tau()
    }

    /// Checks the lattice part of the configuration: everything the
    /// single-particle builders need.
    pub fn validate_lattice(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let l = self.sites;
        if l < 2 {
            return bad(format!("L must be at least 2, got {l}"));
        }
        for (name, value) in [
            ("J", self.hopping),
            ("Delta", self.tilt),
            ("gamma", self.gamma),
            ("theta", self.theta),
        ] {
            if !value.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.tilt < 0.0 {
            return bad(format!("Delta must be >= 0, got {}", self.tilt));
        }
        if self.gamma < 0.0 {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if self.boundary == BoundaryCondition::Pbc && l < 3 {
            return bad("PBC needs L >= 3".into());
        }
        if self.feedback == FeedbackVariant::Edge && self.boundary != BoundaryCondition::Pbc {
            return bad("edge feedback is only defined with PBC".into());
        }
        Ok(())
    }

    /// Full check, including particle number, time grid and initial state.
    pub fn validate(&self) -> Result<()> {
        self.validate_lattice()?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let l = self.sites;
        if self.particles == 0 || self.particles > l {
            return bad(format!("N must lie in 1..=L, got N = {}", self.particles));
        }
        // Every built-in initial state is half filled.
        if !l.is_multiple_of(2) {
            return bad(format!("L must be even for a half-filled initial state, got {l}"));
        }
        if self.particles != l / 2 {
            return bad(format!(
                "initial state {:?} has N = L/2 = {}, got N = {}",
                self.initial,
                l / 2,
                self.particles
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be finite and > 0, got {}", self.dt));
        }
        if !(self.t_max_over_tau > 0.0 && self.t_max_over_tau.is_finite()) {
            return bad(format!(
                "t_max_over_tau must be finite and > 0, got {}",
                self.t_max_over_tau
            ));
        }
        match self.tau {
            Some(tau) if !(tau > 0.0 && tau.is_finite()) => {
                return bad(format!("tau must be finite and > 0, got {tau}"));
            }
            None if self.hopping == 0.0 => {
                return bad("tau must be given explicitly when J = 0".into());
            }
            _ => {}
        }
        if self.gamma * self.dt >= 1.0 {
            return bad(format!(
                "gamma * dt = {} makes jump probabilities exceed 1",
                self.gamma * self.dt
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixRole {
    HermitianHamiltonian,
    EffectiveHamiltonian,
    Propagator,
}

/// Coefficient matrix of a quadratic operator together with its role.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleParticleMatrix {
    pub entries: DMatrix<Complex64>,
    pub role: MatrixRole,
}

impl SingleParticleMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Hermitian part `(h + h†)/2`.
    pub fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// The Hermitian matrix `(i/2)(h − h†)`; negative semidefinite for a
    /// dissipative effective Hamiltonian.
    pub fn dissipative_part(&self) -> DMatrix<Complex64> {
        (&self.entries - self.entries.adjoint()) * Complex64::new(0.0, 0.5)
    }
}

/// Quasimode `d_l = (c_a + i c_b)/√2` on bond `(a, b)` and the site that
/// receives the feedback phase after a jump.
#[derive(Clone, Debug, PartialEq)]
pub struct BondMode {
    pub bond: usize,
    /// Site carrying amplitude `1/√2`.
    pub left: usize,
    /// Site carrying amplitude `i/√2`.
    pub right: usize,
    pub feedback_site: usize,
    pub amplitudes: DVector<Complex64>,
}

impl BondMode {
    fn new(sites: usize, bond: usize, left: usize, right: usize, feedback_site: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amplitudes = DVector::from_element(sites, ZERO);
        amplitudes[left] = Complex64::new(s, 0.0);
        amplitudes[right] = Complex64::new(0.0, s);
        Self {
            bond,
            left,
            right,
            feedback_site,
            amplitudes,
        }
    }

    /// `d·u = Σ_j w_j u_j` for a column of orbital amplitudes.
    #[inline]
    pub fn apply(&self, column: &[Complex64]) -> Complex64 {
        self.amplitudes[self.left] * column[self.left]
            + self.amplitudes[self.right] * column[self.right]
    }

    /// Single-particle matrix of `d†d`, i.e. `conj(w) wᵀ`.
    pub fn projector(&self) -> DMatrix<Complex64> {
        self.amplitudes.conjugate() * self.amplitudes.transpose()
    }
}

/// `H = Σ_l J (c†_l c_{l+1} + h.c.) + Δ Σ_l l n_l`.
pub fn build_hamiltonian(params: &ModelParams) -> Result<SingleParticleMatrix> {
    params.validate_lattice()?;
    let l = params.sites;
    let j = Complex64::new(params.hopping, 0.0);
    let mut h = DMatrix::from_element(l, l, ZERO);
    for site in 0..l {
        h[(site, site)] = Complex64::new(params.tilt * (site + 1) as f64, 0.0);
    }
    for site in 0..l - 1 {
        h[(site, site + 1)] = j;
        h[(site + 1, site)] = j;
    }
    if params.boundary == BoundaryCondition::Pbc {
        h[(l - 1, 0)] += j;
        h[(0, l - 1)] += j;
    }
    Ok(SingleParticleMatrix {
        entries: h,
        role: MatrixRole::HermitianHamiltonian,
    })
}

/// Monitored bonds in ascending order.
pub fn build_jump_modes(params: &ModelParams) -> Result<Vec<BondMode>> {
    params.validate_lattice()?;
    let l = params.sites;
    let mut modes: Vec<BondMode> = (0..l - 1)
        .map(|b| BondMode::new(l, b, b, b + 1, b + 1))
        .collect();
    if params.feedback == FeedbackVariant::Edge {
        modes.push(BondMode::new(l, l - 1, l - 1, 0, 0));
    }
    Ok(modes)
}

/// Closed form of `H_eff`: every monitored bond `(a, b)` adds `+γ/4` to the
/// `c†_a c_b` hopping, `−γ/4` to `c†_b c_a` and `−iγ/4` to both diagonals.
pub fn build_effective_hamiltonian(params: &ModelParams) -> Result<SingleParticleMatrix> {
    let mut h = build_hamiltonian(params)?.entries;
    let q = params.gamma / 4.0;
    for mode in build_jump_modes(params)? {
        let (a, b) = (mode.left, mode.right);
        h[(a, b)] += Complex64::new(q, 0.0);
        h[(b, a)] -= Complex64::new(q, 0.0);
        h[(a, a)] -= I * q;
        h[(b, b)] -= I * q;
    }
    Ok(SingleParticleMatrix {
        entries: h,
        role: MatrixRole::EffectiveHamiltonian,
    })
}

/// `H − (iγ/2) Σ_l d†_l d_l` assembled from the bond projectors.
pub fn effective_hamiltonian_from_projectors(params: &ModelParams) -> Result<SingleParticleMatrix> {
    let mut h = build_hamiltonian(params)?.entries;
    let scale = Complex64::new(0.0, -params.gamma / 2.0);
    for mode in build_jump_modes(params)? {
        h += mode.projector() * scale;
    }
    Ok(SingleParticleMatrix {
        entries: h,
        role: MatrixRole::EffectiveHamiltonian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_site_hamiltonian() {
        let h = build_hamiltonian(&ModelParams::new(2)).unwrap().entries;
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]));
    }

    #[test]
    fn tilt_uses_one_based_sites() {
        let p = ModelParams::new(3).with_tilt(0.6);
        let h = build_hamiltonian(&p).unwrap().entries;
        for (i, d) in [0.6, 1.2, 1.8].iter().enumerate() {
            assert_abs_diff_eq!(h[(i, i)].re, *d, epsilon = 1e-15);
        }
        assert_eq!(h[(0, 1)], c(1., 0.));
        assert_eq!(h[(2, 1)], c(1., 0.));
        assert_eq!(h[(0, 2)], c(0., 0.));
    }

    #[test]
    fn periodic_wrap() {
        let p = ModelParams::new(4).with_boundary(BoundaryCondition::Pbc);
        let h = build_hamiltonian(&p).unwrap().entries;
        assert_eq!(h[(3, 0)], c(1., 0.));
        assert_eq!(h[(0, 3)], c(1., 0.));
    }

    #[test]
    fn obc_modes() {
        let modes = build_jump_modes(&ModelParams::new(4)).unwrap();
        assert_eq!(modes.len(), 3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let first: Vec<_> = modes[0].amplitudes.iter().copied().collect();
        assert_eq!(first, vec![c(s, 0.), c(0., s), c(0., 0.), c(0., 0.)]);
        assert_eq!(modes[0].feedback_site, 1);
    }

    #[test]
    fn edge_feedback_adds_wrap_bond() {
        let p = ModelParams::new(4)
            .with_boundary(BoundaryCondition::Pbc)
            .with_feedback(FeedbackVariant::Edge);
        let modes = build_jump_modes(&p).unwrap();
        assert_eq!(modes.len(), 4);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let last: Vec<_> = modes[3].amplitudes.iter().copied().collect();
        assert_eq!(last, vec![c(0., s), c(0., 0.), c(0., 0.), c(s, 0.)]);
        assert_eq!(modes[3].feedback_site, 0);

        let bulk = ModelParams::new(4).with_boundary(BoundaryCondition::Pbc);
        assert_eq!(build_jump_modes(&bulk).unwrap().len(), 3);
    }

    #[test]
    fn edge_feedback_requires_pbc() {
        let p = ModelParams::new(4).with_feedback(FeedbackVariant::Edge);
        assert!(matches!(build_jump_modes(&p), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn zero_gamma_effective_equals_hamiltonian() {
        let p = ModelParams::new(6).with_gamma(0.0).with_tilt(0.3);
        assert_eq!(
            build_effective_hamiltonian(&p).unwrap().entries,
            build_hamiltonian(&p).unwrap().entries
        );
    }

    #[test]
    fn effective_hamiltonian_three_sites() {
        let h = build_effective_hamiltonian(&ModelParams::new(3)).unwrap().entries;
        assert_abs_diff_eq!(h[(0, 1)].re, 1.125, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 0)].re, 0.875, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 2)].re, 1.125, epsilon = 1e-15);
        let diag: Vec<_> = (0..3).map(|i| h[(i, i)]).collect();
        assert_eq!(diag, vec![c(0., -0.125), c(0., -0.25), c(0., -0.125)]);

        let oracle = effective_hamiltonian_from_projectors(&ModelParams::new(3)).unwrap();
        assert!((&h - &oracle.entries).camax() < 1e-12);
    }

    #[test]
    fn projector_is_rank_one_trace_one() {
        let p = ModelParams::new(6)
            .with_boundary(BoundaryCondition::Pbc)
            .with_feedback(FeedbackVariant::Edge);
        for mode in build_jump_modes(&p).unwrap() {
            let d = mode.projector();
            assert_abs_diff_eq!(d.trace().re, 1.0, epsilon = 1e-12);
            assert!((&d * &d - &d).camax() < 1e-12);
            assert_abs_diff_eq!(mode.amplitudes.norm(), 1.0, epsilon = 1e-12);
            assert_eq!(mode.amplitudes.iter().filter(|a| a.norm() > 0.0).count(), 2);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(5).validate().is_err());
        assert!(ModelParams::new(4).with_dt(0.0).validate().is_err());
        assert!(ModelParams::new(4).with_tilt(-1.0).validate().is_err());
        assert!(ModelParams::new(4).with_gamma(30.0).validate().is_err());
    }
}
