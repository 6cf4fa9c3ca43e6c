// Identify wall stiffness and damping from a noise-free oscillating
// penetration.

use uam_contact::estimator::{rlse_update, EnvEstimate, RlseConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (k_e, b_e) = (200.0, 0.5);
    let cfg = RlseConfig::default();
    let mut est = EnvEstimate::initial(&cfg);
    let dt = 0.002;
    for i in 0..5000 {
        let t = i as f64 * dt;
        let w = 2.0 * std::f64::consts::PI * 1.3;
        let pen = 0.02 + 0.01 * (w * t).sin();
        let vel = 0.01 * w * (w * t).cos();
        let f = -k_e * pen - b_e * vel;
        est = rlse_update(&est, pen, vel, f, 0.0, &cfg, dt)?;
        if i % 1000 == 0 {
            println!("t={t:.1} k={:.2} b={:.3} λmax(P)={:.1}", est.k_hat, est.b_hat, est.lambda_max());
        }
    }
    println!("final k={:.3} b={:.4}", est.k_hat, est.b_hat);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
