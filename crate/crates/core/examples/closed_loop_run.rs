// Slow approach to the tilted surface under the constant force setpoint,
// summarised with the post-settling metrics.

use uam_contact::harness::{metrics, run, Scenario};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario { duration: 8.0, ..Scenario::exp1_slow() };
    let log = run(&sc)?;
    for e in &log.events {
        println!("{:.3}s {:?} {}", e.t, e.kind, e.detail);
    }
    print!("{}", metrics(&log, 3.0).to_key_values());
    let dir = std::env::temp_dir().join("uam-contact-example");
    log.save(&dir)?;
    println!("log written to {}", dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
