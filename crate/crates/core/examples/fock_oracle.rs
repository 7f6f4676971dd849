//! Drive the Gaussian engine and the exact 2^L Fock-space engine with the
//! same uniforms and watch them agree jump for jump.

use feedback_skin::fock::{fock_entropy, fock_from_slater, FockEngine};
use feedback_skin::{Engine, ModelParams, ObservableSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> feedback_skin::Result<()> {
    let params = ModelParams::new(8).with_tilt(0.6);
    let engine = Engine::new(&params, ObservableSet::all())?;
    let fock = FockEngine::new(&engine.effective.entries, &engine.modes, params.gamma, params.dt, params.theta)?;

    let mut state = engine.initial_state()?;
    let mut psi = fock_from_slater(&state)?;
    // one tape, replayed into both engines
    let tape: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..200 * params.sites).map(|_| rng.random()).collect()
    };
    let (mut a, mut b) = (tape.iter().copied(), tape.iter().copied());
    let half: Vec<usize> = (0..params.sites / 2).collect();
    let mut jumps = 0;

    println!("{:>5} {:>7} {:>14} {:>12}", "step", "jumps", "1 − fidelity", "|ΔS_half|");
    for step in 1..=200 {
        let g = engine.step(&mut state, false, || a.next().unwrap())?;
        let f = fock.step(&mut psi, false, || b.next().unwrap())?;
        assert_eq!(g.jumps, f);
        jumps += f.len();
        if step % 20 == 0 {
            let fid = fock_from_slater(&state)?.inner(&psi).norm_sqr();
            let s = engine.observables.record(&state, 0.0).entropy_half;
            println!(
                "{step:>5} {jumps:>7} {:>14.2e} {:>12.2e}",
                1.0 - fid,
                (s - fock_entropy(&psi, &half)).abs()
            );
        }
    }
    Ok(())
}
