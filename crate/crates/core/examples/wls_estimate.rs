//! One Gauss-Newton WLS estimate from noisy measurements.

use hullstate::cases;
use hullstate::measurement::{corrupt, synthesize};
use hullstate::network::{solve_power_flow, DEFAULT_PF_MAX_ITER, DEFAULT_PF_TOL};
use hullstate::wls::{gauss_newton, WlsProblem, DEFAULT_WLS_MAX_ITER, DEFAULT_WLS_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = cases::IEEE34.network()?;
    let truth = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER)?;
    let ms = corrupt(&synthesize(&cases::IEEE34.placement()?, &net, &truth)?, 7);
    let res = gauss_newton(
        &WlsProblem::new(&net, &ms),
        DEFAULT_WLS_TOL,
        DEFAULT_WLS_MAX_ITER,
    )?;
    println!(
        "{} measurements, {} iterations, J = {:.3}, {} step halvings",
        ms.len(),
        res.iterations,
        res.objective,
        res.halvings
    );
    let (er, ex) = res.x_hat.max_abs_error(&truth.states());
    println!("max error: real {er:.3e}  imag {ex:.3e}");
    Ok(())
}
