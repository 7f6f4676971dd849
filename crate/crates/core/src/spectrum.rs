//! Eigenmodes of the non-Hermitian effective Hamiltonian.
//!
//! Without jumps the drift `e^{-iH_eff t}` damps every right eigenmode at
//! the rate `−Im λ`, so a Slater state relaxes onto the `N` modes with the
//! largest `Im λ`. These routines go through a complex Schur form and are
//! independent of the propagator used by the integrator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SingleParticleMatrix;
use crate::state::SlaterState;

/// Right eigenpairs `(λ_k, x_k)` of a general complex matrix, with unit
/// norm eigenvectors stored as columns.
pub fn eigensystem(matrix: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::ShapeMismatch("eigensystem needs a square matrix".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Analysis("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let scale = t.camax().max(f64::MIN_POSITIVE);
    let values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let mut vectors = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (k, &lambda) in values.iter().enumerate() {
        let mut y = DVector::from_element(n, Complex64::new(0.0, 0.0));
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < f64::EPSILON * scale {
                denom = Complex64::new(f64::EPSILON * scale, 0.0);
            }
            y[i] = -acc / denom;
        }
        let x = &q * y;
        let norm = x.norm();
        vectors.set_column(k, &(x / Complex64::new(norm, 0.0)));
    }
    Ok((values, vectors))
}

/// Slater state built from the `particles` eigenmodes of `H_eff` with the
/// smallest loss rate (largest `Im λ`), together with those eigenvalues.
pub fn least_lossy_state(
    effective: &SingleParticleMatrix,
    particles: usize,
) -> Result<(SlaterState, Vec<Complex64>)> {
    let (values, vectors) = eigensystem(&effective.entries)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].im.total_cmp(&values[a].im));
    let chosen = &order[..particles];
    let u = DMatrix::from_fn(vectors.nrows(), particles, |i, k| vectors[(i, chosen[k])]);
    let state = SlaterState::new(u)?.orthonormalize()?;
    Ok((state, chosen.iter().map(|&k| values[k]).collect()))
}

/// Loss-rate gap `Im λ_N − Im λ_{N+1}` between the slowest-decaying `N`
/// modes and the rest; sets the relaxation time of no-click dynamics.
pub fn loss_gap(effective: &SingleParticleMatrix, particles: usize) -> Result<f64> {
    let (values, _) = eigensystem(&effective.entries)?;
    let mut im: Vec<f64> = values.iter().map(|z| z.im).collect();
    im.sort_by(|a, b| b.total_cmp(a));
    if particles >= im.len() {
        return Ok(f64::INFINITY);
    }
    Ok(im[particles - 1] - im[particles])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_effective_hamiltonian, ModelParams};

    #[test]
    fn eigenpairs_satisfy_definition() {
        let p = ModelParams::new(10).with_tilt(0.6);
        let h = build_effective_hamiltonian(&p).unwrap().entries;
        let (values, vectors) = eigensystem(&h).unwrap();
        for (k, lambda) in values.iter().enumerate() {
            let x = vectors.column(k);
            let residual = &h * x - x * *lambda;
            assert!(residual.camax() < 1e-10, "residual {}", residual.camax());
        }
    }

    #[test]
    fn dissipative_spectrum() {
        let p = ModelParams::new(12);
        let h = build_effective_hamiltonian(&p).unwrap().entries;
        let (values, _) = eigensystem(&h).unwrap();
        assert!(values.iter().all(|z| z.im <= 1e-12));
    }

    #[test]
    fn lossless_modes_skin_to_the_left() {
        let p = ModelParams::new(16);
        let h = build_effective_hamiltonian(&p).unwrap();
        let (state, _) = least_lossy_state(&h, 8).unwrap();
        let rho = state.density();
        assert!(rho[..8].iter().sum::<f64>() > rho[8..].iter().sum::<f64>());
        assert!(loss_gap(&h, 8).unwrap() > 0.0);
    }
}
