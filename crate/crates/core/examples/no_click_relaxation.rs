//! Conditioned no-click evolution: with every jump suppressed the state
//! flows into the N least lossy eigenmodes of the effective Hamiltonian,
//! which sit on the left edge.
//!
//! cargo run --release --example no_click_relaxation -- 16

use feedback_skin::spectrum::{least_lossy_state, loss_gap};
use feedback_skin::observables::left_filling;
use feedback_skin::{Engine, ModelParams, ObservableSet};

fn main() -> feedback_skin::Result<()> {
    let sites: usize = std::env::args().nth(1).map_or(16, |s| s.parse().expect("L"));
    let p = ModelParams::new(sites);
    let engine = Engine::new(&p, ObservableSet::density_only())?;
    let gap = loss_gap(&engine.effective, p.particles)?;
    let (target, _) = least_lossy_state(&engine.effective, p.particles)?;
    println!("L = {sites}, loss gap = {gap:.5}, relaxation time ≈ {:.1} τ", 1.0 / gap / p.tau());

    let mut state = engine.initial_state()?;
    let horizon = 14.0 / gap;
    let steps = (horizon / p.dt).ceil() as usize;
    let every = (steps / 12).max(1);
    println!("{:>10} {:>14} {:>12}", "t/τ", "1 − overlap", "left fill");
    for k in 1..=steps {
        engine.step(&mut state, true, || unreachable!())?;
        if k % every == 0 || k == steps {
            let f = target.overlap(&state)?.norm_sqr();
            let fill = left_filling(&state.density(), p.particles);
            println!("{:>10.2} {:>14.3e} {:>12.4}", k as f64 * p.dt / p.tau(), 1.0 - f, fill);
        }
    }
    Ok(())
}
