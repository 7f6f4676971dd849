//! A trajectory ensemble with mean ± standard error, written to disk in the
//! same layout as `feedback-skin run`.
//!
//! cargo run --release --example ensemble_run -- /tmp/ensemble

use std::path::PathBuf;
use std::time::Instant;

use feedback_skin::ensemble::run_ensemble;
use feedback_skin::io::write_run;
use feedback_skin::{Engine, ModelParams, Observable, ObservableSet, TrajectorySchedule};

fn main() -> feedback_skin::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "ensemble-out".into()).into();
    let params = ModelParams::new(24).with_tilt(0.6).with_t_max(3.0);
    let engine = Engine::new(&params, ObservableSet::all())?;
    let schedule = TrajectorySchedule::for_params(&params, 40, 0);

    let start = Instant::now();
    let stats = run_ensemble(&engine, &schedule, 64, 11, 0)?;
    let wall = start.elapsed().as_secs_f64();

    let s = stats.scalar(Observable::EntropyHalf).unwrap();
    let fill = stats.scalar(Observable::LeftFilling).unwrap();
    println!("{:>7} {:>16} {:>16}", "t/τ", "S_half", "left filling");
    for i in (0..stats.times.len()).step_by(4) {
        println!(
            "{:>7.2} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4}",
            stats.rescaled_times[i], s.mean[i], s.stderr[i], fill.mean[i], fill.stderr[i]
        );
    }
    println!("{:.1} jumps per trajectory, {} failures", stats.mean_jumps, stats.failures);

    let manifest = write_run(&out, &stats, wall)?;
    println!("wrote {:?} to {} in {wall:.1}s", manifest.outputs, out.display());
    Ok(())
}
