// Scheduled force gains as the stiffness estimate sweeps the admissible
// range, and the rate-limited gains the controller would see.

use uam_contact::scheduler::{schedule, GainBox, GainSlew, RegionParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gb = GainBox::default();
    let mut slew: Option<GainSlew> = None;
    for k_e in [50.0, 100.0, 200.0, 350.0, 500.0] {
        let s = schedule(&RegionParams::with_env(k_e, 0.5, 4.0), &gb)?;
        let sl = slew.get_or_insert_with(|| GainSlew::new(s.k_f, s.b_f));
        // one scheduler period at 10 Hz
        let (k, b) = sl.advance(s.k_f, s.b_f, 0.1);
        println!(
            "k_e={k_e:>5} -> k_f={:.3} b_f={:.2} [{}] slewed=({k:.3}, {b:.2})",
            s.k_f,
            s.b_f,
            s.provenance.label()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
