//! Heavier loading and higher measurement redundancy.

use hullstate::bench::{find_load_scale, run_interval_once, Scenario};
use hullstate::cases;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = cases::IEEE34.network()?;
    let scale = find_load_scale(&net, 0.90, 1e-6)?;
    println!("load scale for a 0.90 pu minimum voltage: {scale:.4}");
    let runs = [
        ("base", Scenario::bundled(cases::IEEE34)),
        (
            "0.90-0.95 profile",
            Scenario::bundled(cases::IEEE34).with_load_scale(Some(scale)),
        ),
        ("redundancy 1.221", Scenario::bundled(cases::IEEE34_R1221)),
        ("redundancy 1.265", Scenario::bundled(cases::IEEE34_R1265)),
    ];
    println!(
        "{:<18} {:>7} {:>10} {:>10} {:>9} {:>5}",
        "scenario", "m/n", "real", "imag", "β", "iter"
    );
    for (name, sc) in runs {
        let rep = run_interval_once(&sc.with_seed(1))?;
        let enc = rep.enclosure.as_ref().expect("interval report");
        println!(
            "{name:<18} {:>7.3} {:>10.3e} {:>10.3e} {:>9.2e} {:>5}",
            rep.redundancy, rep.mae.real, rep.mae.imag, enc.beta, enc.iterations
        );
    }
    Ok(())
}
