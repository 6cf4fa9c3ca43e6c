// Drop the end-effector onto a 30° surface with hover thrust and level
// attitude, and print the contact force as it settles.

use uam_contact::plant::{self, contact_force, PlantConfig, PlantState, SurfaceModel};
use uam_contact::Vec3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let surface = SurfaceModel::tilted(30f64.to_radians(), Vec3::new(1.0, 0.0, 1.5), 200.0, 0.5);
    let cfg = PlantConfig::default();
    let mut state = PlantState::at_rest(surface.p_s - surface.b_f * 0.01, &surface);
    state.v_e = surface.b_f * 0.2;

    // hover thrust plus a small push along the normal
    let thrust = cfg.m_t * cfg.g;
    let level = Vec3::zeros();
    let mut peak: f64 = 0.0;
    for i in 0..500 {
        state = plant::step(&state, thrust, &level, &surface, &cfg)?;
        let (x_f, _) = surface.decompose(&state.p_e);
        let f = contact_force(x_f, surface.b_f.dot(&state.v_e), &surface);
        peak = peak.min(f);
        if i % 100 == 0 {
            println!("t={:.3} pen={:+.5} f={:+.3} contact={}", state.t, surface.penetration(&state.p_e), f, state.in_contact);
        }
    }
    println!("peak force {peak:.3} N");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
