// Observer tracking a constant unmodelled force on a free point mass, and
// the thrust/attitude that realise a commanded force.

use uam_contact::controller::{dob_update, extract_inputs, extract_inputs_steady, DobState, GainSet};
use uam_contact::plant::{thrust_direction, Measurement, SurfaceModel};
use uam_contact::{Vec2, Vec3};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let surface = SurfaceModel::vertical(Vec3::new(1.0, 0.0, 0.0), 200.0, 0.5);
    let gains = GainSet::default();
    let m = gains.m_bar;
    // force direction is horizontal, so gravity does not enter it
    let (delta, u_f, dt) = (0.8, 0.0, 0.002);
    let mut dob = DobState::default();
    let mut v = 0.0;
    for i in 0..=1000 {
        let meas = Measurement { x_f: 0.0, x_f_dot: v, x_m: Vec2::zeros(), x_m_dot: Vec2::zeros(), f_f: 0.0 };
        let (next, est, _) = dob_update(&dob, &meas, u_f, &Vec2::zeros(), &gains, &surface, false, dt);
        dob = next;
        if i % 250 == 0 {
            println!("t={:.2} Δ̂_f={est:.5} (true {delta})", i as f64 * dt);
        }
        v += (u_f + delta) / m * dt;
    }

    let u = Vec3::new(3.0, -1.0, m * gains.g_bar);
    let st = extract_inputs_steady(&u, 0.0)?;
    let phi = Vec3::new(st.phi_xr, st.phi_yr, 0.0);
    let out = extract_inputs(&u, &phi, 2.0 * m * gains.g_bar)?;
    let err = (thrust_direction(&phi) * out.thrust - u).norm();
    println!("T={:.3} roll={:.4} pitch={:.4} residual={err:.2e}", out.thrust, out.phi_xr, out.phi_yr);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
