//! Periodic chains: without a tilt the density stays uniform, with a tilt
//! the potential step between the last and first site acts as an edge and
//! the particles pile up on the left anyway.

use feedback_skin::ensemble::run_ensemble_for;
use feedback_skin::{
    BoundaryCondition, FeedbackVariant, ModelParams, Observable, ObservableSet, TrajectorySchedule,
};

fn main() -> feedback_skin::Result<()> {
    let cases = [
        ("OBC  Δ=0.6", BoundaryCondition::Obc, FeedbackVariant::Bulk, 0.6),
        ("PBC  Δ=0  ", BoundaryCondition::Pbc, FeedbackVariant::Bulk, 0.0),
        ("PBC  Δ=0.6", BoundaryCondition::Pbc, FeedbackVariant::Bulk, 0.6),
        ("PBC  Δ=0.6 edge feedback", BoundaryCondition::Pbc, FeedbackVariant::Edge, 0.6),
    ];
    for (label, bc, fb, tilt) in cases {
        let p = ModelParams::new(32)
            .with_boundary(bc)
            .with_feedback(fb)
            .with_tilt(tilt)
            .with_t_max(3.0);
        let sched = TrajectorySchedule::for_params(&p, 6, 0);
        let stats = run_ensemble_for(&p, ObservableSet::density_only(), &sched, 64, 1, 0)?;
        let fill = stats.scalar(Observable::LeftFilling).unwrap();
        let row: Vec<String> = fill
            .mean
            .iter()
            .zip(&fill.stderr)
            .map(|(m, e)| format!("{m:.3}±{e:.3}"))
            .collect();
        println!("{label:<26} left filling at t/τ = 0, 0.5, …, 3: {}", row.join(" "));
    }
    Ok(())
}
