//! Reads a TOML instance, solves it and writes the normalized document back.
use rdball::cli::InstanceFile;
use rdball::{maxmin_solve, RobustOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/instances/asymmetric.toml").to_string());
    let file = InstanceFile::read(path.as_ref())?;
    let sol = maxmin_solve(&file.problem, &RobustOptions::default())?;
    println!("source symbols {:?}", file.source_labels);
    println!("reproduction   {:?}", file.repro_labels);
    println!("robust rate {:.9} nats ({:?})", sol.rate, sol.regime);
    println!("\n{}", file.to_toml());
    Ok(())
}
