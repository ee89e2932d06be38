//! Writes a comparison report as JSON and long-format CSV, then reads the
//! JSON back.

use hullstate::bench::{compare, emit_report, Format, Report, Scenario};
use hullstate::cases;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("hullstate-report");
    std::fs::create_dir_all(&dir)?;
    let sc = Scenario::bundled(cases::SIX_BUS)
        .with_trials(100)
        .with_seed(3);
    let rep = Report::Comparison(compare(&sc)?);
    let json = dir.join("six_bus.json");
    let csv = dir.join("six_bus.csv");
    emit_report(&rep, Format::Json, &json)?;
    emit_report(&rep, Format::Csv, &csv)?;
    let back = Report::from_json(&std::fs::read_to_string(&json)?)?;
    println!("scenario {}", sc.hash());
    println!("wrote {} and {}", json.display(), csv.display());
    println!("round trip identical: {}", back == rep);
    for line in std::fs::read_to_string(&csv)?.lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
