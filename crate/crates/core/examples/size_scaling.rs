//! Small-size version of the scaling analysis: ensembles at three chain
//! lengths, log-law fits of the half-chain entropy and the transition time
//! from curve crossings and from data collapse.
//!
//! Sizes are kept small so this finishes in well under a minute; the
//! numbers are only indicative at these lengths.

use feedback_skin::ensemble::run_ensemble_for;
use feedback_skin::scaling::{estimate_transition_time, SizeSweep, TransitionMethod};
use feedback_skin::{ModelParams, Observable, ObservableSet, TrajectorySchedule};

fn main() -> feedback_skin::Result<()> {
    let mut runs = Vec::new();
    for sites in [16, 24, 32] {
        let p = ModelParams::new(sites).with_t_max(3.0);
        let sched = TrajectorySchedule::for_params(&p, 120, 0);
        runs.push(run_ensemble_for(&p, ObservableSet::entropy_only(), &sched, 96, 5, 0)?);
        println!("L = {sites} done");
    }
    let sweep = SizeSweep::from_ensembles(&runs, Observable::EntropyHalf)?;

    for s in [0.5, 1.8] {
        let fit = sweep.log_law_at(s)?;
        println!(
            "t/τ = {s}: S = ({:.3} ± {:.3}) ln L + {:.3}",
            fit.a, fit.a_stderr, fit.b
        );
    }
    for method in [TransitionMethod::Crossing, TransitionMethod::Collapse] {
        let est = estimate_transition_time(&sweep, method)?;
        println!("{method:?}: {}", serde_json::to_string(&est).unwrap());
    }
    Ok(())
}
