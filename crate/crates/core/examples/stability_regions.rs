// No-switching regions for a soft and a stiff wall, checked against the
// raw inequalities on a 125-grid, plus the cycle contraction at one point.

use uam_contact::scheduler::region::{compare_with_grid, rasterize, region_grid, regions_explicit};
use uam_contact::scheduler::{lambda_pair, GainBox, RegionParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gb = GainBox::default();
    for (k_e, b_e) in [(50.0, 1.0), (200.0, 0.5), (500.0, 0.1)] {
        let p = RegionParams::with_env(k_e, b_e, 4.0);
        println!("k_e={k_e} b_e={b_e}");
        for r in regions_explicit(&p, &gb)? {
            let cmp = compare_with_grid(&rasterize(&r, &gb, 125), &region_grid(r.condition, &p, &gb, 125));
            println!(
                "  {} area={:.3} vertices={} false_cert={} interior_agreement={:.4}",
                r.condition,
                r.area,
                r.vertices.len(),
                cmp.false_certifications,
                cmp.interior_agreement()
            );
        }
        let lp = lambda_pair(&p.switched(0.5, 25.0))?;
        println!("  Λ1={:.4} Λ2={:.4} Λ1Λ2={:.4}", lp.lambda1, lp.lambda2, lp.product);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
