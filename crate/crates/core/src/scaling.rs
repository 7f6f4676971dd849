//! Finite-size analysis of ensemble curves: log-law fits, transition times
//! from curve crossings, and data collapse in `t − (t_c/τ)·L^α`.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleStatistics;
use crate::error::{Error, Result};
use crate::observables::Observable;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Clone, Debug)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() || n < 2 {
            return Err(Error::Analysis(
                "interpolation needs at least two (x, y) pairs".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Analysis("abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value at `x`; outside the data range the end values are held.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

// Three-point end slope, limited to keep the interpolant monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLawFit {
    /// Slope `a` of `value = a ln L + b`.
    pub a: f64,
    pub b: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Standard error of `a` (zero for three points lying on a line).
    pub a_stderr: f64,
    pub b_stderr: f64,
}

/// Least-squares fit of `value = a ln L + b` over `(L, value)` pairs.
pub fn fit_log_law(points: &[(f64, f64)]) -> Result<LogLawFit> {
    if points.len() < 3 {
        return Err(Error::Analysis(format!(
            "log-law fit needs at least 3 sizes, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(l, v)| !(l > 0.0) || !v.is_finite()) {
        return Err(Error::Analysis("log-law fit needs L > 0 and finite values".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx <= 0.0 {
        return Err(Error::Analysis("log-law fit needs at least two distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let a = sxy / sxx;
    let b = ym - a * xm;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    let sigma2 = ss / (n - 2.0);
    Ok(LogLawFit {
        a,
        b,
        residual: (ss / n).sqrt(),
        a_stderr: (sigma2 / sxx).sqrt(),
        b_stderr: (sigma2 * (1.0 / n + xm * xm / sxx)).sqrt(),
    })
}

/// One system size's curve of a scalar observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeCurve {
    pub sites: usize,
    pub tau: f64,
    pub rescaled_times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SizeCurve {
    pub fn new(sites: usize, tau: f64, rescaled_times: Vec<f64>, values: Vec<f64>) -> Self {
        let stderr = vec![0.0; values.len()];
        Self {
            sites,
            tau,
            rescaled_times,
            values,
            stderr,
        }
    }

    pub fn interpolant(&self) -> Result<Pchip> {
        Pchip::new(&self.rescaled_times, &self.values)
    }

    /// Rescaled time of the global maximum.
    pub fn peak_time(&self) -> f64 {
        let k = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.rescaled_times[k]
    }
}

/// Curves of one observable at several sizes, sorted by `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSweep {
    pub observable: Observable,
    pub curves: Vec<SizeCurve>,
}

impl SizeSweep {
    pub fn new(observable: Observable, mut curves: Vec<SizeCurve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Analysis("empty size sweep".into()));
        }
        curves.sort_by_key(|c| c.sites);
        if curves.windows(2).any(|w| w[0].sites == w[1].sites) {
            return Err(Error::Analysis("duplicate system size in sweep".into()));
        }
        for c in &curves {
            let n = c.values.len();
            if c.rescaled_times.len() != n || c.stderr.len() != n || n < 2 {
                return Err(Error::Analysis(format!(
                    "curve for L={} needs matching times, values and errors (at least two)",
                    c.sites
                )));
            }
        }
        Ok(Self { observable, curves })
    }

    /// Builds a sweep from ensembles that differ only in `L` (and `N = L/2`).
    pub fn from_ensembles(stats: &[EnsembleStatistics], observable: Observable) -> Result<Self> {
        let first = stats.first().ok_or_else(|| Error::Analysis("no ensembles".into()))?;
        let mut curves = Vec::with_capacity(stats.len());
        for s in stats {
            let mut p = s.params.clone();
            p.sites = first.params.sites;
            p.particles = first.params.particles;
            if p != first.params {
                return Err(Error::Analysis(format!(
                    "ensemble at L={} differs from L={} in more than the size",
                    s.params.sites, first.params.sites
                )));
            }
            let series = s.scalar(observable).ok_or_else(|| {
                Error::Analysis(format!(
                    "observable {} missing at L={}",
                    observable.name(),
                    s.params.sites
                ))
            })?;
            curves.push(SizeCurve {
                sites: s.params.sites,
                tau: s.params.tau(),
                rescaled_times: s.rescaled_times.clone(),
                values: series.mean.clone(),
                stderr: series.stderr.clone(),
            });
        }
        Self::new(observable, curves)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.curves.iter().map(|c| c.sites).collect()
    }

    /// Interpolated value of every curve at rescaled time `s`.
    pub fn values_at(&self, s: f64) -> Result<Vec<(f64, f64)>> {
        self.curves
            .iter()
            .map(|c| Ok((c.sites as f64, c.interpolant()?.eval(s))))
            .collect()
    }

    /// Fits `a ln L + b` to the curves at rescaled time `s`.
    pub fn log_law_at(&self, s: f64) -> Result<LogLawFit> {
        fit_log_law(&self.values_at(s)?)
    }

    /// Common rescaled-time grid over the overlap of all curves, spaced by
    /// the finest sampling among them.
    pub fn common_grid(&self) -> Result<Vec<f64>> {
        let lo = self
            .curves
            .iter()
            .map(|c| c.rescaled_times[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = self
            .curves
            .iter()
            .map(|c| c.rescaled_times[c.rescaled_times.len() - 1])
            .fold(f64::INFINITY, f64::min);
        let step = self
            .curves
            .iter()
            .flat_map(|c| c.rescaled_times.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min);
        if !(hi > lo) || !(step > 0.0) {
            return Err(Error::Analysis("curves share no common time range".into()));
        }
        let n = ((hi - lo) / step).round() as usize;
        Ok((0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionMethod {
    Crossing,
    Collapse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionEstimate {
    Transition {
        method: TransitionMethod,
        t_c_over_tau: f64,
        uncertainty: f64,
        /// Per-pair crossing times (crossing method only).
        estimates: Vec<f64>,
    },
    NoTransition {
        method: TransitionMethod,
        reason: String,
    },
}

impl TransitionEstimate {
    pub fn t_c_over_tau(&self) -> Option<f64> {
        match self {
            Self::Transition { t_c_over_tau, .. } => Some(*t_c_over_tau),
            Self::NoTransition { .. } => None,
        }
    }

    pub fn uncertainty(&self) -> Option<f64> {
        match self {
            Self::Transition { uncertainty, .. } => Some(*uncertainty),
            Self::NoTransition { .. } => None,
        }
    }
}

pub fn estimate_transition_time(
    sweep: &SizeSweep,
    method: TransitionMethod,
) -> Result<TransitionEstimate> {
    match method {
        TransitionMethod::Crossing => crossing_estimate(sweep),
        TransitionMethod::Collapse => collapse_estimate(sweep),
    }
}

/// Separation, in combined standard errors, that a pair of curves must
/// reach in the decaying window before a sign change counts as a crossing.
pub const CROSSING_SEPARATION: f64 = 3.0;

fn linear_at(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[ys.len() - 1];
    }
    let f = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + f * (ys[k] - ys[k - 1])
}

/// First rescaled time after both peaks at which the two curves cross,
/// located by linear interpolation of their difference on `grid`.
///
/// Sign changes are only accepted once the curves have been apart by more
/// than [`CROSSING_SEPARATION`] combined standard errors; curves that are
/// statistically indistinguishable throughout never cross.
pub fn first_crossing(a: &SizeCurve, b: &SizeCurve, grid: &[f64]) -> Result<Option<f64>> {
    let fa = a.interpolant()?;
    let fb = b.interpolant()?;
    let start = a.peak_time().max(b.peak_time());
    let window: Vec<f64> = grid.iter().copied().filter(|&s| s >= start).collect();
    let diff: Vec<f64> = window.iter().map(|&s| fa.eval(s) - fb.eval(s)).collect();
    let sigma: Vec<f64> = window
        .iter()
        .map(|&s| {
            let ea = linear_at(&a.rescaled_times, &a.stderr, s);
            let eb = linear_at(&b.rescaled_times, &b.stderr, s);
            ea.hypot(eb)
        })
        .collect();
    let mut separated = false;
    for k in 0..diff.len().saturating_sub(1) {
        let (d0, d1) = (diff[k], diff[k + 1]);
        separated |= d0.abs() > CROSSING_SEPARATION * sigma[k];
        if !separated {
            continue;
        }
        if d0 == 0.0 {
            return Ok(Some(window[k]));
        }
        if d0 * d1 < 0.0 {
            let f = d0 / (d0 - d1);
            return Ok(Some(window[k] + f * (window[k + 1] - window[k])));
        }
    }
    Ok(None)
}

fn crossing_estimate(sweep: &SizeSweep) -> Result<TransitionEstimate> {
    if sweep.curves.len() < 2 {
        return Err(Error::Analysis(
            "crossing estimate needs at least two system sizes".into(),
        ));
    }
    let grid = sweep.common_grid()?;
    let resolution = grid[1] - grid[0];
    let mut estimates = Vec::new();
    for i in 0..sweep.curves.len() {
        for j in i + 1..sweep.curves.len() {
            if let Some(s) = first_crossing(&sweep.curves[i], &sweep.curves[j], &grid)? {
                estimates.push(s);
            }
        }
    }
    if estimates.is_empty() {
        return Ok(TransitionEstimate::NoTransition {
            method: TransitionMethod::Crossing,
            reason: "no pair of curves separates and then crosses after its peak".into(),
        });
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let spread = if estimates.len() > 1 {
        (estimates.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(TransitionEstimate::Transition {
        method: TransitionMethod::Crossing,
        t_c_over_tau: mean,
        uncertainty: spread.max(resolution),
        estimates,
    })
}

/// Number of abscissa points used by [`collapse_cost`].
pub const COLLAPSE_GRID: usize = 400;

/// Mean squared pairwise deviation between the curves after shifting each
/// to the abscissa `t − (t_c/τ)·L^α`, over the window where all shifted
/// curves are defined.
pub fn collapse_cost(sweep: &SizeSweep, t_c_over_tau: f64, alpha: f64) -> Result<f64> {
    if sweep.curves.len() < 2 {
        return Err(Error::Analysis("collapse needs at least two system sizes".into()));
    }
    let mut shifted = Vec::with_capacity(sweep.curves.len());
    for c in &sweep.curves {
        let shift = t_c_over_tau * (c.sites as f64).powf(alpha);
        let xs: Vec<f64> = c.rescaled_times.iter().map(|s| s * c.tau - shift).collect();
        shifted.push(Pchip::new(&xs, &c.values)?);
    }
    let lo = shifted.iter().map(|p| p.domain().0).fold(f64::NEG_INFINITY, f64::max);
    let hi = shifted.iter().map(|p| p.domain().1).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::Analysis(format!(
            "shifted curves do not overlap at t_c/τ = {t_c_over_tau}"
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..shifted.len() {
        for j in i + 1..shifted.len() {
            let mut acc = 0.0;
            for k in 0..COLLAPSE_GRID {
                let x = lo + (hi - lo) * k as f64 / (COLLAPSE_GRID - 1) as f64;
                acc += (shifted[i].eval(x) - shifted[j].eval(x)).powi(2);
            }
            total += acc / COLLAPSE_GRID as f64;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

fn collapse_estimate(sweep: &SizeSweep) -> Result<TransitionEstimate> {
    if sweep.curves.len() < 3 {
        return Err(Error::Analysis(
            "collapse estimate needs at least three system sizes".into(),
        ));
    }
    let grid = sweep.common_grid()?;
    let resolution = grid[1] - grid[0];
    let (s_lo, s_hi) = (grid[0], grid[grid.len() - 1]);
    let mut scan = Vec::new();
    let mut s = s_lo;
    while s <= s_hi {
        if let Ok(cost) = collapse_cost(sweep, s, 1.0) {
            scan.push((s, cost));
        }
        s += resolution;
    }
    let &(best_s, _) = scan
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Analysis("no shift gives overlapping curves".into()))?;
    // Golden-section refinement inside the bracketing grid cells.
    let cost = |t: f64| collapse_cost(sweep, t, 1.0).unwrap_or(f64::INFINITY);
    let (mut a, mut b) = (best_s - resolution, best_s + resolution);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..60 {
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let t_c = 0.5 * (a + b);
    let min_cost = cost(t_c);
    // Half-width of the region within a factor two of the minimum cost.
    let tolerance = 2.0 * min_cost + 1e-12;
    let within: Vec<f64> = scan.iter().filter(|p| p.1 <= tolerance).map(|p| p.0).collect();
    let width = match (within.first(), within.last()) {
        (Some(lo), Some(hi)) => 0.5 * (hi - lo),
        _ => 0.0,
    };
    if (t_c - s_lo).abs() < resolution || (s_hi - t_c).abs() < resolution {
        return Ok(TransitionEstimate::NoTransition {
            method: TransitionMethod::Collapse,
            reason: "collapse cost is minimized at the edge of the time window".into(),
        });
    }
    Ok(TransitionEstimate::Transition {
        method: TransitionMethod::Collapse,
        t_c_over_tau: t_c,
        uncertainty: width.max(resolution),
        estimates: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_linear_data() {
        let xs = [0.0, 1.0, 2.5, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let p = Pchip::new(&xs, &ys).unwrap();
        for x in [0.3, 1.7, 2.9] {
            assert!((p.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn pchip_does_not_overshoot_a_step() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 0.0, 1.0, 1.0, 1.0];
        let p = Pchip::new(&xs, &ys).unwrap();
        for k in 0..=400 {
            let v = p.eval(k as f64 * 0.01);
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
    }

    #[test]
    fn log_law_recovers_exact_coefficients() {
        let pts: Vec<(f64, f64)> = [32.0, 48.0, 64.0, 96.0]
            .iter()
            .map(|&l: &f64| (l, 0.33 * l.ln() + 0.7))
            .collect();
        let fit = fit_log_law(&pts).unwrap();
        assert!((fit.a - 0.33).abs() < 1e-10);
        assert!((fit.b - 0.7).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn log_law_needs_three_points() {
        assert!(fit_log_law(&[(32.0, 1.0), (64.0, 1.2)]).is_err());
    }

    #[test]
    fn identical_curves_have_zero_cost() {
        let ts: Vec<f64> = (0..50).map(|k| k as f64 * 0.06).collect();
        let vs: Vec<f64> = ts.iter().map(|t| (-t).exp()).collect();
        let curves = [32usize, 64]
            .iter()
            .map(|&l| SizeCurve::new(l, l as f64, ts.clone(), vs.clone()))
            .collect();
        let sweep = SizeSweep::new(Observable::EntropyHalf, curves).unwrap();
        // zero shift, unscaled times: the two curves differ in absolute t
        let cost = collapse_cost(&sweep, 0.0, 0.0).unwrap();
        assert!(cost > 0.0);
        let same = SizeSweep::new(
            Observable::EntropyHalf,
            vec![
                SizeCurve::new(32, 1.0, ts.clone(), vs.clone()),
                SizeCurve::new(64, 1.0, ts.clone(), vs.clone()),
            ],
        )
        .unwrap();
        assert!(collapse_cost(&same, 0.0, 1.0).unwrap() < 1e-24);
    }

    #[test]
    fn single_size_crossing_is_an_error() {
        let ts: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let sweep = SizeSweep::new(
            Observable::EntropyHalf,
            vec![SizeCurve::new(32, 32.0, ts.clone(), ts.clone())],
        )
        .unwrap();
        assert!(estimate_transition_time(&sweep, TransitionMethod::Crossing).is_err());
    }
}
