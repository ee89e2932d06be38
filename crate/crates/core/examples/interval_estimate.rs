//! Linearized interval estimate: the Krawczyk box and its midpoint.

use hullstate::cases;
use hullstate::estimator::estimate;
use hullstate::measurement::{corrupt, synthesize};
use hullstate::network::{solve_power_flow, DEFAULT_PF_MAX_ITER, DEFAULT_PF_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = cases::IEEE34.network()?;
    let truth = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER)?;
    let ms = corrupt(&synthesize(&cases::IEEE34.placement()?, &net, &truth)?, 1);
    let est = estimate(&net, &ms)?;
    let enc = &est.enclosure;
    println!(
        "β = {:.3e}, α = {:.3}, {} iterations, {} rows",
        enc.beta, enc.alpha, enc.iterations, enc.rows
    );
    let n = net.bus_count();
    let states = enc.states();
    let t = truth.states();
    println!(" bus        V_r box                 V_x box         |err r|   |err x|");
    for k in 0..n {
        println!(
            "{:>4} [{:.5}, {:.5}] [{:+.5}, {:+.5}] {:.2e} {:.2e}",
            net.bus_id(k),
            states[k].lo(),
            states[k].hi(),
            states[n + k].lo(),
            states[n + k].hi(),
            (est.state.vr[k] - t.vr[k]).abs(),
            (est.state.vx[k] - t.vx[k]).abs()
        );
    }
    let (er, ex) = est.state.max_abs_error(&t);
    println!("max error: real {er:.3e}  imag {ex:.3e}");
    println!(
        "time: build {:?}, solve {:?}",
        est.timing.build, est.timing.solve
    );
    Ok(())
}
