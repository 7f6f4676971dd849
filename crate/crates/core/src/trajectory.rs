//! Quantum-jump integration of the stochastic Schrödinger equation.
//!
//! Each step applies the normalized non-Hermitian drift `e^{-iH_eff dt}`,
//! evaluates the jump probabilities `p_l = γ dt ⟨d†_l d_l⟩` on the drifted
//! state, samples one Bernoulli decision per monitored bond and applies the
//! sampled jumps `L_l = e^{iθ n_f} d†_l d_l` in ascending bond order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_effective_hamiltonian, build_hamiltonian, build_jump_modes, BondMode, ModelParams,
    SingleParticleMatrix,
};
use crate::observables::{ObservableContext, ObservableRecord, ObservableSet};
use crate::state::{orthonormalize_columns, SlaterState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Propagator entries at or below this magnitude are skipped when the
/// propagator is applied; `e^{-iH dt}` is numerically banded for small `dt`.
pub const PROPAGATOR_CUTOFF: f64 = 1e-18;

/// Jump probabilities at or above this value trigger a warning.
pub const PROBABILITY_WARNING: f64 = 0.1;

/// Smallest `|d·U_n|` accepted as a jump pivot.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Propagator {
    pub matrix: DMatrix<Complex64>,
    pub dt: f64,
    /// Row ranges `[start, end)` of significant entries, per column.
    segments: Vec<Vec<(usize, usize)>>,
}

impl Propagator {
    /// `out = P · u`.
    pub fn apply_into(&self, u: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let l = self.matrix.nrows();
        let n = u.ncols();
        debug_assert_eq!(u.nrows(), l);
        if out.shape() != (l, n) {
            *out = DMatrix::from_element(l, n, ZERO);
        }
        let p = self.matrix.as_slice();
        let src = u.as_slice();
        let dst = out.as_mut_slice();
        for c in 0..n {
            let o = &mut dst[c * l..(c + 1) * l];
            o.fill(ZERO);
            for (k, segs) in self.segments.iter().enumerate() {
                let a = src[c * l + k];
                if a == ZERO {
                    continue;
                }
                let col = &p[k * l..(k + 1) * l];
                for &(start, end) in segs {
                    for (oi, pi) in o[start..end].iter_mut().zip(&col[start..end]) {
                        oi.re += pi.re * a.re - pi.im * a.im;
                        oi.im += pi.re * a.im + pi.im * a.re;
                    }
                }
            }
        }
    }

    pub fn apply(&self, u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(u.nrows(), u.ncols(), ZERO);
        self.apply_into(u, &mut out);
        out
    }
}

/// `P = exp(−i H_eff dt)` by scaling and squaring with a Padé approximant.
pub fn make_propagator(h_eff: &SingleParticleMatrix, dt: f64) -> Result<Propagator> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("dt must be finite and > 0, got {dt}")));
    }
    let generator = &h_eff.entries * Complex64::new(0.0, -dt);
    if generator.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let matrix = generator.exp();
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let l = matrix.nrows();
    let segments = (0..l)
        .map(|k| {
            let mut segs = Vec::new();
            let mut start = None;
            for i in 0..=l {
                let significant = i < l && matrix[(i, k)].norm() > PROPAGATOR_CUTOFF;
                match (significant, start) {
                    (true, None) => start = Some(i),
                    (false, Some(s)) => {
                        segs.push((s, i));
                        start = None;
                    }
                    _ => {}
                }
            }
            segs
        })
        .collect();
    Ok(Propagator {
        matrix,
        dt,
        segments,
    })
}

/// Step count, recording cadence and sampling mode of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySchedule {
    pub n_steps: usize,
    pub record_every: usize,
    /// Suppress every jump: pure non-Hermitian evolution.
    pub no_click: bool,
    pub seed: u64,
    /// ChaCha stream; the ensemble runner uses the trajectory index.
    pub stream: u64,
}

impl TrajectorySchedule {
    /// Covers `[0, t_max]` with roughly `records` recorded points.
    pub fn for_params(params: &ModelParams, records: usize, seed: u64) -> Self {
        let n_steps = ((params.t_max() / params.dt).round() as usize).max(1);
        let record_every = (n_steps / records.max(1)).max(1);
        Self {
            n_steps,
            record_every,
            no_click: false,
            seed,
            stream: 0,
        }
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn with_no_click(mut self, no_click: bool) -> Self {
        self.no_click = no_click;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    /// Recorded step indices: every `record_every`-th step plus the last.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let every = self.record_every.max(1);
        let mut steps: Vec<usize> = (0..=self.n_steps).step_by(every).collect();
        if steps.last() != Some(&self.n_steps) {
            steps.push(self.n_steps);
        }
        steps
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidConfig(
                "schedule needs n_steps >= 1 and record_every >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// `U ← orthonormalize(P U)`.
pub fn nonhermitian_step(state: &SlaterState, propagator: &Propagator) -> Result<SlaterState> {
    SlaterState::new(propagator.apply(state.orbitals()))?.orthonormalize()
}

/// `⟨d†_l d_l⟩ = Σ_n |d·U_n|²` for an orthonormal state.
pub fn mode_occupation(state: &SlaterState, mode: &BondMode) -> f64 {
    let u = state.orbitals();
    let l = u.nrows();
    u.as_slice()
        .chunks_exact(l)
        .map(|col| mode.apply(col).norm_sqr())
        .sum()
}

/// `p_l = γ dt ⟨d†_l d_l⟩` for every mode.
pub fn jump_probabilities(
    state: &SlaterState,
    modes: &[BondMode],
    gamma: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    modes
        .iter()
        .map(|mode| {
            let p = gamma * dt * mode_occupation(state, mode);
            if !(p < 1.0) {
                return Err(Error::StepTooLarge {
                    bond: mode.bond,
                    probability: p,
                });
            }
            Ok(p.max(0.0))
        })
        .collect()
}

/// `|ψ⟩ → L_l|ψ⟩ / ‖L_l|ψ⟩‖` with `L_l = e^{iθ n_f} d†_l d_l`.
pub fn apply_jump(state: &SlaterState, mode: &BondMode, theta: f64) -> Result<SlaterState> {
    let mut u = state.orbitals().clone();
    apply_jump_in_place(&mut u, mode, theta)?;
    SlaterState::new(u)?.orthonormalize()
}

/// Jump without the final orthonormalization. The columns still span the
/// post-jump Slater determinant, so further jumps can follow directly.
pub(crate) fn apply_jump_in_place(
    u: &mut DMatrix<Complex64>,
    mode: &BondMode,
    theta: f64,
) -> Result<()> {
    let l = u.nrows();
    let n = u.ncols();
    let overlaps: Vec<Complex64> = u
        .as_slice()
        .chunks_exact(l)
        .map(|col| mode.apply(col))
        .collect();
    let (pivot, pivot_overlap) = overlaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, z)| (i, *z))
        .expect("state has at least one orbital");
    if !(pivot_overlap.norm() > PIVOT_TOLERANCE) {
        return Err(Error::InvalidJump { bond: mode.bond });
    }
    u.swap_columns(0, pivot);
    let mut overlaps = overlaps;
    overlaps.swap(0, pivot);

    // Remove the d-component from the other orbitals; the determinant is
    // unchanged by adding multiples of the pivot column.
    let data = u.as_mut_slice();
    let (first, rest) = data.split_at_mut(l);
    for (col, ov) in rest.chunks_exact_mut(l).zip(&overlaps[1..]) {
        let ratio = *ov / pivot_overlap;
        if ratio == ZERO {
            continue;
        }
        for (x, p) in col.iter_mut().zip(first.iter()) {
            *x -= ratio * p;
        }
    }
    // d† creates the orbital conj(w).
    first.fill(ZERO);
    first[mode.left] = mode.amplitudes[mode.left].conj();
    first[mode.right] = mode.amplitudes[mode.right].conj();

    let phase = Complex64::from_polar(1.0, theta);
    for c in 0..n {
        data[c * l + mode.feedback_site] *= phase;
    }
    Ok(())
}

/// Everything needed to integrate trajectories for one parameter set.
/// Shared read-only between worker threads.
#[derive(Clone, Debug)]
pub struct Engine {
    pub params: ModelParams,
    pub hamiltonian: SingleParticleMatrix,
    pub effective: SingleParticleMatrix,
    pub modes: Vec<BondMode>,
    pub propagator: Propagator,
    pub observables: ObservableContext,
}

/// Outcome of one integration step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Bonds that jumped, ascending.
    pub jumps: Vec<usize>,
    /// Largest jump probability of the step.
    pub max_probability: f64,
}

/// Per-trajectory time series.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub records: Vec<ObservableRecord>,
    pub jumps: usize,
    /// Set when the trajectory aborted; `records` then holds the prefix.
    pub failure: Option<String>,
}

impl Engine {
    pub fn new(params: &ModelParams, set: ObservableSet) -> Result<Self> {
        params.validate()?;
        let hamiltonian = build_hamiltonian(params)?;
        let effective = build_effective_hamiltonian(params)?;
        let modes = build_jump_modes(params)?;
        let propagator = make_propagator(&effective, params.dt)?;
        let observables = ObservableContext::new(params, &effective, &modes, set)?;
        Ok(Self {
            params: params.clone(),
            hamiltonian,
            effective,
            modes,
            propagator,
            observables,
        })
    }

    pub fn initial_state(&self) -> Result<SlaterState> {
        SlaterState::from_initial(self.params.initial, self.params.sites)
    }

    /// One step driven by caller-supplied uniforms in `[0, 1)`, one per
    /// monitored bond. `uniforms` is not called in no-click mode.
    pub fn step<F>(&self, state: &mut SlaterState, no_click: bool, mut uniforms: F) -> Result<StepReport>
    where
        F: FnMut() -> f64,
    {
        let mut drifted = DMatrix::from_element(state.sites(), state.particles(), ZERO);
        self.propagator.apply_into(state.orbitals(), &mut drifted);
        orthonormalize_columns(&mut drifted)?;
        *state.orbitals_mut() = drifted;

        let mut report = StepReport::default();
        if no_click || self.params.gamma == 0.0 {
            return Ok(report);
        }
        let probabilities = jump_probabilities(state, &self.modes, self.params.gamma, self.params.dt)?;
        for (mode, p) in self.modes.iter().zip(&probabilities) {
            report.max_probability = report.max_probability.max(*p);
            if uniforms() < *p {
                report.jumps.push(mode.bond);
            }
        }
        if !report.jumps.is_empty() {
            let u = state.orbitals_mut();
            for mode in self.modes.iter().filter(|m| report.jumps.contains(&m.bond)) {
                apply_jump_in_place(u, mode, self.params.theta)?;
            }
            orthonormalize_columns(u)?;
        }
        Ok(report)
    }

    /// Integrates one trajectory from `initial`. Deterministic given the
    /// schedule's seed and stream.
    pub fn evolve(&self, initial: SlaterState, schedule: &TrajectorySchedule) -> Result<ObservableSeries> {
        schedule.validate()?;
        if initial.sites() != self.params.sites {
            return Err(Error::ShapeMismatch(format!(
                "initial state has {} sites, model has {}",
                initial.sites(),
                self.params.sites
            )));
        }
        let mut rng = schedule.rng();
        let mut state = initial.orthonormalize()?;
        let record_every = schedule.record_every;
        let mut series = ObservableSeries {
            records: Vec::with_capacity(schedule.n_steps / record_every + 2),
            jumps: 0,
            failure: None,
        };
        let mut warned = false;
        series.records.push(self.observables.record(&state, 0.0));
        for step in 1..=schedule.n_steps {
            let report = match self.step(&mut state, schedule.no_click, || rng.random::<f64>()) {
                Ok(r) => r,
                Err(e) => {
                    series.failure = Some(format!("step {step}: {e}"));
                    break;
                }
            };
            if report.max_probability >= PROBABILITY_WARNING && !warned {
                log::warn!(
                    "jump probability {:.3} exceeds {PROBABILITY_WARNING}; consider a smaller dt",
                    report.max_probability
                );
                warned = true;
            }
            series.jumps += report.jumps.len();
            if step % record_every == 0 || step == schedule.n_steps {
                let t = step as f64 * self.params.dt;
                series.records.push(self.observables.record(&state, t));
            }
        }
        Ok(series)
    }
}

/// Builds the engine for `params` and integrates one trajectory.
pub fn evolve_trajectory(
    initial: SlaterState,
    params: &ModelParams,
    schedule: &TrajectorySchedule,
    set: ObservableSet,
) -> Result<ObservableSeries> {
    Engine::new(params, set)?.evolve(initial, schedule)
}
