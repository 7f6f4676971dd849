//! Slater-determinant states and their correlation matrices.
//!
//! A state of `N` fermions on `L` sites is the `L × N` orbital matrix `U`
//! with `|ψ⟩ = Π_n (Σ_l U_ln c†_l) |0⟩`. Right-multiplying `U` by an
//! invertible `N × N` matrix only changes the norm and global phase, so every
//! observable here is invariant under that gauge.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::InitialState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Smallest admissible `|R_nn|` in the QR factorization.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlaterState {
    orbitals: DMatrix<Complex64>,
}

/// `C_ij = ⟨c†_i c_j⟩ = [U U†]ᵀ_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: DMatrix<Complex64>,
}

impl SlaterState {
    /// Wraps an orbital matrix. Columns need not be orthonormal; call
    /// [`SlaterState::orthonormalize`] before extracting observables.
    pub fn new(orbitals: DMatrix<Complex64>) -> Result<Self> {
        let (l, n) = orbitals.shape();
        if n == 0 || n > l {
            return Err(Error::ShapeMismatch(format!(
                "orbital matrix must be L x N with 1 <= N <= L, got {l} x {n}"
            )));
        }
        if orbitals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { orbitals })
    }

    /// Product state with the listed (0-based) sites occupied, in order.
    pub fn product(sites: usize, occupied: &[usize]) -> Result<Self> {
        let mut u = DMatrix::from_element(sites, occupied.len(), ZERO);
        for (col, &site) in occupied.iter().enumerate() {
            if site >= sites {
                return Err(Error::ShapeMismatch(format!("site {site} outside chain of {sites}")));
            }
            u[(site, col)] = ONE;
        }
        Self::new(u)
    }

    /// Random orthonormal state, for tests and benchmarks.
    pub fn random<R: Rng + ?Sized>(sites: usize, particles: usize, rng: &mut R) -> Result<Self> {
        let u = DMatrix::from_fn(sites, particles, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        Self::new(u)?.orthonormalize()
    }

    pub fn from_initial(initial: InitialState, sites: usize) -> Result<Self> {
        match initial {
            InitialState::Neel => neel_state(sites),
            InitialState::AntiNeel => {
                require_even(sites)?;
                Self::product(sites, &(0..sites).step_by(2).collect::<Vec<_>>())
            }
            InitialState::DomainWallLeft => domain_wall_state(sites, Side::Left),
            InitialState::DomainWallRight => domain_wall_state(sites, Side::Right),
        }
    }

    pub fn sites(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn particles(&self) -> usize {
        self.orbitals.ncols()
    }

    pub fn orbitals(&self) -> &DMatrix<Complex64> {
        &self.orbitals
    }

    pub(crate) fn orbitals_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.orbitals
    }

    pub fn into_orbitals(self) -> DMatrix<Complex64> {
        self.orbitals
    }

    /// QR orthonormalization; keeps the column space.
    pub fn orthonormalize(mut self) -> Result<Self> {
        orthonormalize_columns(&mut self.orbitals)?;
        Ok(self)
    }

    /// `‖U†U − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.particles();
        (self.orbitals.adjoint() * &self.orbitals - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        CorrelationMatrix {
            entries: self.orbitals.conjugate() * self.orbitals.transpose(),
        }
    }

    /// `⟨n_l⟩ = Σ_n |U_ln|²`, without forming `C`.
    pub fn density(&self) -> Vec<f64> {
        let (l, n) = self.orbitals.shape();
        let mut rho = vec![0.0; l];
        for col in 0..n {
            for (site, z) in self.orbitals.column(col).iter().enumerate() {
                rho[site] += z.norm_sqr();
            }
        }
        rho
    }

    /// `det(U_a† U_b) = ⟨ψ_a|ψ_b⟩`.
    pub fn overlap(&self, other: &SlaterState) -> Result<Complex64> {
        if self.orbitals.shape() != other.orbitals.shape() {
            return Err(Error::ShapeMismatch(format!(
                "overlap of {:?} and {:?} states",
                self.orbitals.shape(),
                other.orbitals.shape()
            )));
        }
        Ok((self.orbitals.adjoint() * &other.orbitals).determinant())
    }
}

impl CorrelationMatrix {
    pub fn sites(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Principal submatrix on the given sites.
    pub fn block(&self, sites: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(sites.len(), sites.len(), |i, j| self.entries[(sites[i], sites[j])])
    }

    /// Eigenvalues of `C` (Hermitian), ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn require_even(sites: usize) -> Result<()> {
    if sites == 0 || !sites.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("L must be even and positive, got {sites}")));
    }
    Ok(())
}

/// `|0101…01⟩`: physical sites 2, 4, …, L (0-based 1, 3, …) occupied.
pub fn neel_state(sites: usize) -> Result<SlaterState> {
    require_even(sites)?;
    SlaterState::product(sites, &(1..sites).step_by(2).collect::<Vec<_>>())
}

pub fn domain_wall_state(sites: usize, side: Side) -> Result<SlaterState> {
    require_even(sites)?;
    let half = sites / 2;
    let occupied: Vec<usize> = match side {
        Side::Left => (0..half).collect(),
        Side::Right => (half..sites).collect(),
    };
    SlaterState::product(sites, &occupied)
}

pub fn orthonormalize(state: SlaterState) -> Result<SlaterState> {
    state.orthonormalize()
}

pub fn correlation_matrix(state: &SlaterState) -> CorrelationMatrix {
    state.correlation_matrix()
}

pub fn overlap(a: &SlaterState, b: &SlaterState) -> Result<Complex64> {
    a.overlap(b)
}

/// In-place QR orthonormalization by classical Gram-Schmidt with one
/// reorthogonalization pass. On return the columns are the `Q` factor;
/// the final column norms are `|R_nn|`.
pub(crate) fn orthonormalize_columns(u: &mut DMatrix<Complex64>) -> Result<()> {
    let (l, n) = u.shape();
    let data = u.as_mut_slice();
    let mut coeff = vec![ZERO; n];
    let mut min_diag = f64::INFINITY;
    for j in 0..n {
        let (done, rest) = data.split_at_mut(j * l);
        let v = &mut rest[..l];
        for _pass in 0..2 {
            for (i, c) in coeff.iter_mut().enumerate().take(j) {
                *c = dot_conj(&done[i * l..(i + 1) * l], v);
            }
            for (i, c) in coeff.iter().enumerate().take(j) {
                axpy_neg(*c, &done[i * l..(i + 1) * l], v);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        min_diag = min_diag.min(norm);
        if !(norm >= RANK_TOLERANCE) {
            return Err(Error::RankDeficient { min_diag: norm });
        }
        let inv = 1.0 / norm;
        v.iter_mut().for_each(|z| *z *= inv);
    }
    debug_assert!(min_diag >= RANK_TOLERANCE);
    Ok(())
}

/// `Σ conj(a_i) b_i`.
#[inline]
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// `y -= c x`.
#[inline]
fn axpy_neg(c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (xi, yi) in x.iter().zip(y.iter_mut()) {
        yi.re -= c.re * xi.re - c.im * xi.im;
        yi.im -= c.re * xi.im + c.im * xi.re;
    }
}
