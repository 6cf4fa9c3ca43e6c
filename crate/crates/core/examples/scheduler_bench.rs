// Grid search against the explicit regions at a few resolutions.

use uam_contact::harness::{bench_scheduler, fit_scaling_exponent};
use uam_contact::scheduler::{GainBox, RegionParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = RegionParams::with_env(200.0, 0.5, 4.0);
    let rows = bench_scheduler(&[50, 100, 150], 5, &p, &GainBox::default());
    for r in &rows {
        println!("N={:>3} grid={:.2e}s explicit={:.2e}s ×{:.0}", r.n, r.grid_median_s, r.explicit_median_s, r.ratio);
    }
    println!("grid exponent ≈ {:.2}", fit_scaling_exponent(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
