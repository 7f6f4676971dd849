//! Transition-time and collapse estimators on synthetic families with a
//! planted crossing.

use feedback_skin::scaling::{
    collapse_cost, estimate_transition_time, fit_log_law, SizeCurve, SizeSweep,
    TransitionEstimate, TransitionMethod,
};
use feedback_skin::Observable;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIZES: [usize; 3] = [32, 48, 64];

/// `S(s; L) = f(L (s − c)) + g(s) ln L` with a decreasing step `f`; every
/// pair of curves meets at `s = c`, where `g` vanishes.
fn planted(c: f64, log_weight: f64) -> SizeSweep {
    let curves = SIZES
        .iter()
        .map(|&l| {
            let lf = l as f64;
            // slightly different sampling per size, like real ensembles
            let ds = 0.9 / lf;
            let n = (3.0 / ds) as usize;
            let ts: Vec<f64> = (0..=n).map(|k| k as f64 * ds).collect();
            let vs = ts
                .iter()
                .map(|&s| {
                    let f = 0.8 + 0.5 * (1.0 - ((s - c) * lf / 6.0).tanh());
                    let g = log_weight * (1.0 - s / c).max(0.0).powi(2);
                    f + g * lf.ln()
                })
                .collect();
            SizeCurve::new(l, lf, ts, vs)
        })
        .collect();
    SizeSweep::new(Observable::EntropyHalf, curves).unwrap()
}

fn resolution(sweep: &SizeSweep) -> f64 {
    let g = sweep.common_grid().unwrap();
    g[1] - g[0]
}

#[test]
fn crossing_recovers_planted_time() {
    for c in [0.79, 1.1, 1.45] {
        let sweep = planted(c, 0.3);
        let est = estimate_transition_time(&sweep, TransitionMethod::Crossing).unwrap();
        let t = est.t_c_over_tau().unwrap();
        assert!((t - c).abs() <= resolution(&sweep), "{t} vs {c}");
    }
}

#[test]
fn collapse_recovers_planted_time() {
    for c in [0.79, 1.45] {
        let sweep = planted(c, 0.0);
        let est = estimate_transition_time(&sweep, TransitionMethod::Collapse).unwrap();
        let t = est.t_c_over_tau().unwrap();
        assert!((t - c).abs() <= resolution(&sweep), "{t} vs {c}");
        assert!(collapse_cost(&sweep, c, 1.0).unwrap() < 1e-8);
    }
}

#[test]
fn methods_agree_within_uncertainty() {
    let sweep = planted(0.9, 0.0);
    let a = estimate_transition_time(&sweep, TransitionMethod::Crossing).unwrap();
    let b = estimate_transition_time(&sweep, TransitionMethod::Collapse).unwrap();
    let gap = (a.t_c_over_tau().unwrap() - b.t_c_over_tau().unwrap()).abs();
    assert!(gap <= a.uncertainty().unwrap() + b.uncertainty().unwrap());
}

#[test]
fn wrong_exponent_collapses_worse() {
    let sweep = planted(0.79, 0.0);
    let best = |alpha: f64| {
        (1..300)
            .map(|k| k as f64 * 0.01)
            .filter_map(|t| collapse_cost(&sweep, t * 64f64.powf(1.0 - alpha), alpha).ok())
            .fold(f64::INFINITY, f64::min)
    };
    let linear = best(1.0);
    for alpha in [0.7, 1.3] {
        assert!(best(alpha) > linear + 1e-6, "α = {alpha}");
    }
}

#[test]
fn collapse_cost_is_zero_only_for_coincident_curves() {
    let sweep = planted(0.79, 0.0);
    assert!(collapse_cost(&sweep, 0.5, 1.0).unwrap() > 1e-4);
    let ts: Vec<f64> = (0..100).map(|k| k as f64 * 0.03).collect();
    let vs: Vec<f64> = ts.iter().map(|s| (-s).exp()).collect();
    let same = SizeSweep::new(
        Observable::EntropyHalf,
        vec![
            SizeCurve::new(32, 1.0, ts.clone(), vs.clone()),
            SizeCurve::new(48, 1.0, ts.clone(), vs.clone()),
        ],
    )
    .unwrap();
    assert!(collapse_cost(&same, 0.0, 1.0).unwrap() < 1e-24);
    assert!(collapse_cost(&same, 1e3, 1.0).is_err());
}

#[test]
fn separated_curves_report_no_transition() {
    let curves = SIZES
        .iter()
        .map(|&l| {
            let ts: Vec<f64> = (0..200).map(|k| k as f64 * 0.015).collect();
            let vs = ts.iter().map(|s| (1.0 + 0.2 * (l as f64).ln()) * (-s).exp()).collect();
            SizeCurve::new(l, l as f64, ts, vs)
        })
        .collect();
    let sweep = SizeSweep::new(Observable::EntropyHalf, curves).unwrap();
    let est = estimate_transition_time(&sweep, TransitionMethod::Crossing).unwrap();
    assert!(matches!(est, TransitionEstimate::NoTransition { .. }));
}

/// Adds uniform noise of half-width `noise` and attaches `stderr` to every
/// point, mimicking a finite ensemble.
fn with_noise(sweep: SizeSweep, noise: f64, stderr: f64, seed: u64) -> SizeSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = sweep
        .curves
        .into_iter()
        .map(|mut c| {
            for v in &mut c.values {
                *v += rng.random_range(-noise..noise);
            }
            c.stderr = vec![stderr; c.values.len()];
            c
        })
        .collect();
    SizeSweep::new(sweep.observable, curves).unwrap()
}

#[test]
fn noisy_plateaus_report_no_transition() {
    let curves = SIZES
        .iter()
        .map(|&l| {
            let ts: Vec<f64> = (0..200).map(|k| k as f64 * 0.015).collect();
            let vs = ts.iter().map(|s| 0.7 * (1.0 - (-s / 0.1).exp())).collect();
            SizeCurve::new(l, l as f64, ts, vs)
        })
        .collect();
    let flat = SizeSweep::new(Observable::EntropyHalf, curves).unwrap();
    for seed in 0..5 {
        let sweep = with_noise(flat.clone(), 0.05, 0.03, seed);
        let est = estimate_transition_time(&sweep, TransitionMethod::Crossing).unwrap();
        assert!(matches!(est, TransitionEstimate::NoTransition { .. }), "seed {seed}: {est:?}");
    }
}

#[test]
fn noisy_planted_crossing_is_still_found() {
    for c in [0.79, 1.45] {
        let sweep = with_noise(planted(c, 0.3), 0.002, 0.002, 3);
        let t = estimate_transition_time(&sweep, TransitionMethod::Crossing)
            .unwrap()
            .t_c_over_tau()
            .unwrap();
        assert!((t - c).abs() < 0.05, "{t} vs {c}");
    }
}

#[test]
fn sweep_rejects_bad_input() {
    let ts = vec![0.0, 0.1, 0.2];
    let c = SizeCurve::new(32, 32.0, ts.clone(), ts.clone());
    assert!(SizeSweep::new(Observable::EntropyHalf, vec![c.clone(), c.clone()]).is_err());
    assert!(SizeSweep::new(Observable::EntropyHalf, vec![]).is_err());
    let one = SizeSweep::new(Observable::EntropyHalf, vec![c]).unwrap();
    assert!(estimate_transition_time(&one, TransitionMethod::Crossing).is_err());
    assert!(estimate_transition_time(&one, TransitionMethod::Collapse).is_err());
}

proptest! {
    #[test]
    fn log_fit_ignores_input_order(
        a in -1.0f64..1.0,
        b in -2.0f64..2.0,
        noise in prop::collection::vec(-0.05f64..0.05, 5),
        perm in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle(),
    ) {
        let sizes = [16.0, 24.0, 32.0, 48.0, 64.0f64];
        let pts: Vec<(f64, f64)> = sizes.iter().zip(&noise).map(|(&l, e)| (l, a * l.ln() + b + e)).collect();
        let shuffled: Vec<(f64, f64)> = perm.iter().map(|&k| pts[k]).collect();
        let f1 = fit_log_law(&pts).unwrap();
        let f2 = fit_log_law(&shuffled).unwrap();
        prop_assert_eq!(f1, f2);
        let exact: Vec<(f64, f64)> = sizes.iter().map(|&l| (l, a * l.ln() + b)).collect();
        let f = fit_log_law(&exact).unwrap();
        prop_assert!((f.a - a).abs() < 1e-10 && (f.b - b).abs() < 1e-10);
    }
}
