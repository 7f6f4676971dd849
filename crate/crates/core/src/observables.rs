//! Observables extracted from a Slater state or its correlation matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_effective_hamiltonian, build_jump_modes, BondMode, ModelParams, SingleParticleMatrix};
use crate::state::{domain_wall_state, CorrelationMatrix, Side, SlaterState};

/// Eigenvalue clamp for the entanglement entropy.
pub const ENTROPY_EPS: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which of the costlier observables to evaluate. The density profile is
/// always recorded; disabled scalars are stored as `NaN`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub entropy: bool,
    pub mutual_info: bool,
    pub skin_fidelity: bool,
    pub cross_block_norm: bool,
    pub velocity: bool,
}

impl ObservableSet {
    pub fn all() -> Self {
        Self {
            entropy: true,
            mutual_info: true,
            skin_fidelity: true,
            cross_block_norm: true,
            velocity: true,
        }
    }

    pub fn density_only() -> Self {
        Self {
            entropy: false,
            mutual_info: false,
            skin_fidelity: false,
            cross_block_norm: false,
            velocity: false,
        }
    }

    pub fn entropy_only() -> Self {
        Self {
            entropy: true,
            ..Self::density_only()
        }
    }

    fn needs_correlations(&self) -> bool {
        self.entropy || self.mutual_info || self.cross_block_norm || self.velocity
    }
}

impl Default for ObservableSet {
    fn default() -> Self {
        Self::all()
    }
}

/// Scalar observables tracked per record; `Density` is handled separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    EntropyHalf,
    MutualInfo,
    SkinFidelity,
    CrossBlockNorm,
    Velocity,
    /// `⟨x⟩ = Σ_l l ⟨n_l⟩ / N` with 1-based `l`.
    Position,
    /// Fraction of the particles in the left half.
    LeftFilling,
}

impl Observable {
    pub const ALL: [Observable; 7] = [
        Observable::EntropyHalf,
        Observable::MutualInfo,
        Observable::SkinFidelity,
        Observable::CrossBlockNorm,
        Observable::Velocity,
        Observable::Position,
        Observable::LeftFilling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::EntropyHalf => "entropy_half",
            Observable::MutualInfo => "mutual_info",
            Observable::SkinFidelity => "skin_fidelity",
            Observable::CrossBlockNorm => "cross_block_norm",
            Observable::Velocity => "velocity",
            Observable::Position => "position",
            Observable::LeftFilling => "left_filling",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }

    pub fn enabled_in(self, set: &ObservableSet) -> bool {
        match self {
            Observable::EntropyHalf => set.entropy,
            Observable::MutualInfo => set.mutual_info,
            Observable::SkinFidelity => set.skin_fidelity,
            Observable::CrossBlockNorm => set.cross_block_norm,
            Observable::Velocity => set.velocity,
            Observable::Position | Observable::LeftFilling => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub time: f64,
    pub rescaled_time: f64,
    pub density: Vec<f64>,
    pub entropy_half: f64,
    pub mutual_info: f64,
    pub skin_fidelity: f64,
    pub cross_block_norm: f64,
    pub velocity: f64,
    pub position: f64,
    pub left_filling: f64,
}

impl ObservableRecord {
    pub fn get(&self, observable: Observable) -> f64 {
        match observable {
            Observable::EntropyHalf => self.entropy_half,
            Observable::MutualInfo => self.mutual_info,
            Observable::SkinFidelity => self.skin_fidelity,
            Observable::CrossBlockNorm => self.cross_block_norm,
            Observable::Velocity => self.velocity,
            Observable::Position => self.position,
            Observable::LeftFilling => self.left_filling,
        }
    }
}

pub fn density_profile(c: &CorrelationMatrix) -> Vec<f64> {
    (0..c.sites()).map(|i| c.entries[(i, i)].re).collect()
}

/// `−Σ [λ log λ + (1−λ) log(1−λ)]` over the eigenvalues of `C` restricted
/// to `sites` (natural log).
pub fn entanglement_entropy(c: &CorrelationMatrix, sites: &[usize]) -> f64 {
    if sites.is_empty() {
        return 0.0;
    }
    let block = c.block(sites);
    block
        .symmetric_eigenvalues()
        .iter()
        .map(|&lambda| binary_entropy(lambda))
        .sum()
}

fn binary_entropy(lambda: f64) -> f64 {
    if lambda <= ENTROPY_EPS || lambda >= 1.0 - ENTROPY_EPS {
        return 0.0;
    }
    -(lambda * lambda.ln() + (1.0 - lambda) * (1.0 - lambda).ln())
}

/// Default subsystems: `A = [1, L/8]`, `B = [L/2 + 1, L/2 + L/8]`
/// (1-based, inclusive), each at least one site.
pub fn default_mutual_info_regions(sites: usize) -> (Vec<usize>, Vec<usize>) {
    let size = (sites / 8).max(1);
    let a = (0..size).collect();
    let b = (sites / 2..sites / 2 + size).collect();
    (a, b)
}

/// `I_AB = S_A + S_B − S_{A∪B}`.
pub fn mutual_information(c: &CorrelationMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.iter().any(|s| b.contains(s)) {
        return Err(Error::InvalidConfig("mutual information regions overlap".into()));
    }
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    Ok(entanglement_entropy(c, a) + entanglement_entropy(c, b) - entanglement_entropy(c, &ab))
}

/// `|det(U_ref† U)|²`.
pub fn skin_fidelity(state: &SlaterState, reference: &SlaterState) -> Result<f64> {
    Ok(reference.overlap(state)?.norm_sqr())
}

/// Frobenius norm of `C` restricted to rows `L/2+1..L` and columns `1..L/2`.
pub fn cross_block_norm(c: &CorrelationMatrix) -> f64 {
    let l = c.sites();
    let half = l / 2;
    let mut sum = 0.0;
    for j in 0..half {
        for i in half..l {
            sum += c.entries[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

/// `⟨x⟩` with 1-based site labels.
pub fn mean_position(density: &[f64], particles: usize) -> f64 {
    density
        .iter()
        .enumerate()
        .map(|(i, n)| (i + 1) as f64 * n)
        .sum::<f64>()
        / particles as f64
}

/// Fraction of the particles in the left half of the chain.
pub fn left_filling(density: &[f64], particles: usize) -> f64 {
    density[..density.len() / 2].iter().sum::<f64>() / particles as f64
}

/// Expected drift of `⟨x⟩` per particle along the jump unraveling,
/// evaluated with Wick's theorem from `G = U U† = Cᵀ`.
///
/// Per site the rate `d⟨n_l⟩/dt` collects the coherent drift
/// `[−i h G + i G h†]_ll`, the normalization `−i [G (h† − h) G]_ll`, the
/// jump gain `γ Σ_m |w_m,l|² ⟨d†_m d_m⟩` and the jump coherence
/// `−γ Σ_m |⟨d†_m c_l⟩|²`.
#[derive(Clone, Debug)]
pub struct VelocityKernel {
    /// Nonzero entries `(i, j, h_ij)` of `H_eff`.
    entries: Vec<(usize, usize, Complex64)>,
    /// Nonzero entries `(j, k, a_jk)` of `h† − h`.
    anti: Vec<(usize, usize, Complex64)>,
    modes: Vec<BondMode>,
    gamma: f64,
}

impl VelocityKernel {
    pub fn new(effective: &SingleParticleMatrix, modes: &[BondMode], gamma: f64) -> Self {
        let h = &effective.entries;
        let l = h.nrows();
        let mut entries = Vec::new();
        let mut anti = Vec::new();
        for j in 0..l {
            for i in 0..l {
                if h[(i, j)] != Complex64::new(0.0, 0.0) {
                    entries.push((i, j, h[(i, j)]));
                }
                let a = h[(j, i)].conj() - h[(i, j)];
                if a != Complex64::new(0.0, 0.0) {
                    anti.push((i, j, a));
                }
            }
        }
        Self {
            entries,
            anti,
            modes: modes.to_vec(),
            gamma,
        }
    }

    /// `d⟨n_l⟩/dt` for every site, from the projector `G = U U†`.
    pub fn density_rates(&self, g: &DMatrix<Complex64>) -> Vec<f64> {
        let l = g.nrows();
        let mut rate = vec![Complex64::new(0.0, 0.0); l];
        // Coherent drift: −i (hG)_ll + i (G h†)_ll.
        for &(i, j, h) in &self.entries {
            rate[i] += -I * h * g[(j, i)];
            rate[i] += I * g[(i, j)] * h.conj();
        }
        // Normalization: −i Σ_jk G_lj a_jk G_kl.
        for &(j, k, a) in &self.anti {
            for (site, r) in rate.iter_mut().enumerate() {
                *r += -I * g[(site, j)] * a * g[(k, site)];
            }
        }
        let mut rates: Vec<f64> = rate.iter().map(|z| z.re).collect();
        // Jumps: gain minus coherence, via v = G conj(w).
        for mode in &self.modes {
            let wl = mode.amplitudes[mode.left];
            let wr = mode.amplitudes[mode.right];
            let v: Vec<Complex64> = (0..l)
                .map(|site| g[(site, mode.left)] * wl.conj() + g[(site, mode.right)] * wr.conj())
                .collect();
            let occupation = (wl * v[mode.left] + wr * v[mode.right]).re;
            for (site, r) in rates.iter_mut().enumerate() {
                let weight = mode.amplitudes[site].norm_sqr();
                *r += self.gamma * (weight * occupation - v[site].norm_sqr());
            }
        }
        rates
    }

    pub fn velocity_from_projector(&self, g: &DMatrix<Complex64>, particles: usize) -> f64 {
        self.density_rates(g)
            .iter()
            .enumerate()
            .map(|(i, r)| (i + 1) as f64 * r)
            .sum::<f64>()
            / particles as f64
    }

    pub fn velocity(&self, state: &SlaterState) -> f64 {
        let u = state.orbitals();
        let g = u * u.adjoint();
        self.velocity_from_projector(&g, state.particles())
    }
}

/// Average velocity per particle for `state` under `params`.
pub fn particle_velocity(state: &SlaterState, params: &ModelParams) -> Result<f64> {
    let effective = build_effective_hamiltonian(params)?;
    let modes = build_jump_modes(params)?;
    Ok(VelocityKernel::new(&effective, &modes, params.gamma).velocity(state))
}

/// Precomputed pieces for recording observables along a trajectory.
#[derive(Clone, Debug)]
pub struct ObservableContext {
    pub set: ObservableSet,
    pub sites: usize,
    pub particles: usize,
    pub tau: f64,
    pub half: Vec<usize>,
    pub region_a: Vec<usize>,
    pub region_b: Vec<usize>,
    pub skin_reference: SlaterState,
    pub velocity: VelocityKernel,
}

impl ObservableContext {
    pub fn new(
        params: &ModelParams,
        effective: &SingleParticleMatrix,
        modes: &[BondMode],
        set: ObservableSet,
    ) -> Result<Self> {
        let (region_a, region_b) = default_mutual_info_regions(params.sites);
        Ok(Self {
            set,
            sites: params.sites,
            particles: params.particles,
            tau: params.tau(),
            half: (0..params.sites / 2).collect(),
            region_a,
            region_b,
            skin_reference: domain_wall_state(params.sites, Side::Left)?,
            velocity: VelocityKernel::new(effective, modes, params.gamma),
        })
    }

    pub fn with_regions(mut self, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.iter().any(|s| b.contains(s)) || a.iter().chain(&b).any(|&s| s >= self.sites) {
            return Err(Error::InvalidConfig("invalid mutual information regions".into()));
        }
        self.region_a = a;
        self.region_b = b;
        Ok(self)
    }

    pub fn record(&self, state: &SlaterState, time: f64) -> ObservableRecord {
        let set = &self.set;
        let density = state.density();
        let mut rec = ObservableRecord {
            time,
            rescaled_time: time / self.tau,
            position: mean_position(&density, self.particles),
            left_filling: left_filling(&density, self.particles),
            density,
            entropy_half: f64::NAN,
            mutual_info: f64::NAN,
            skin_fidelity: f64::NAN,
            cross_block_norm: f64::NAN,
            velocity: f64::NAN,
        };
        if set.skin_fidelity {
            rec.skin_fidelity = self
                .skin_reference
                .overlap(state)
                .map(|z| z.norm_sqr())
                .unwrap_or(f64::NAN);
        }
        if set.needs_correlations() {
            let u = state.orbitals();
            let g = u * u.adjoint();
            let c = CorrelationMatrix {
                entries: g.transpose(),
            };
            if set.entropy {
                rec.entropy_half = entanglement_entropy(&c, &self.half);
            }
            if set.mutual_info {
                rec.mutual_info = mutual_information(&c, &self.region_a, &self.region_b).unwrap_or(f64::NAN);
            }
            if set.cross_block_norm {
                rec.cross_block_norm = cross_block_norm(&c);
            }
            if set.velocity {
                rec.velocity = self.velocity.velocity_from_projector(&g, self.particles);
            }
        }
        rec
    }
}
