//! Newton-Raphson power flow on the bundled 34-bus feeder.

use hullstate::cases;
use hullstate::network::{solve_power_flow, DEFAULT_PF_MAX_ITER, DEFAULT_PF_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = cases::IEEE34.network()?;
    let sol = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER)?;
    println!(
        "{} buses, converged in {} iterations",
        net.bus_count(),
        sol.iterations
    );
    for (k, v) in sol.voltages.iter().enumerate() {
        println!(
            "{:>4}  |V| {:.5}  angle {:+.4}°",
            net.bus_id(k),
            v.norm(),
            v.arg().to_degrees()
        );
    }
    let loss = sol.total_losses();
    println!("losses {:.5} + j{:.5} pu", loss.re, loss.im);
    Ok(())
}
