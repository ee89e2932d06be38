//! WLS campaign against a single interval estimate, with the timing ratio.
//!
//! `cargo run --release --example monte_carlo_compare -- 1000`

use hullstate::bench::{compare, Scenario};
use hullstate::cases;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let sc = Scenario::bundled(cases::IEEE34)
        .with_trials(trials)
        .with_seed(1);
    let rep = compare(&sc)?;
    let rmse = rep.wls.max_rmse.unwrap_or_default();
    println!("WLS, {trials} trials");
    println!(
        "  max RMSE        real {:.3e}  imag {:.3e}",
        rmse.real, rmse.imag
    );
    println!(
        "  worst trial MAE real {:.3e}  imag {:.3e}",
        rep.wls.mae.real, rep.wls.mae.imag
    );
    println!("interval, seed {}", sc.base_seed);
    println!(
        "  MAE             real {:.3e}  imag {:.3e}",
        rep.interval.mae.real, rep.interval.mae.imag
    );
    println!(
        "time: interval {:.3} ms (median of {}), WLS {:.3} ms (mean of {}), ratio {:.2}",
        rep.interval_seconds * 1e3,
        rep.interval.timing.repeats,
        rep.mean_wls_trial_seconds * 1e3,
        rep.wls_timing.repeats,
        rep.ratio
    );
    Ok(())
}
