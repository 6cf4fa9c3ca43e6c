// Free-motion approach reference, switch to contact, then force reference
// settling toward -6 N with the admittance-consistent position.

use uam_contact::estimator::{EnvEstimate, RlseConfig};
use uam_contact::reference::{contact_step, free_step, switch_mode, RefMode, ReferenceState};
use uam_contact::Vec2;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let est = EnvEstimate { k_hat: 200.0, b_hat: 0.5, ..EnvEstimate::initial(&RlseConfig::default()) };
    let dt = 0.002;
    let mut r = ReferenceState::at(0.0, Vec2::zeros());
    for _ in 0..250 {
        r = free_step(&r, 0.1, &Vec2::zeros(), 10.0, dt);
    }
    println!("free: x_fr={:.4} v={:.4}", r.x_fr, r.x_fr_dot);

    r = switch_mode(&r, RefMode::Contact, -0.2);
    let x0 = r.x_fr;
    for _ in 0..1500 {
        r = contact_step(&r, -6.0, &Vec2::zeros(), &est, 10.0, dt);
    }
    println!("contact: f_fr={:.4} x_fr-x0={:.5} (expect {:.5})", r.f_fr, r.x_fr - x0, (6.0 - 0.2) / 200.0);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
