//! Entanglement criterion on the two-mode squeezed source model.
//!
//! Run with: cargo run --example spdc_criterion

use mubtriple::entangle::{evaluate_criterion_from_state, GlobalName, Sign};
use mubtriple::spdc::{
    analytic_variances, correlation_coefficient, spdc_state, OpticalScaling, SpdcParams,
};

const SIGMA_MINUS: f64 = 0.5;
const RATIOS: [f64; 6] = [1.0, 1.5, 2.0, 4.0, 10.0, 50.0];

fn main() -> mubtriple::Result<()> {
    // 1. Product of the three minus variances against the bound 1.
    //    Equal widths give a separable product state; every larger width
    //    ratio is entangled, with C = ratio in each plane.
    println!(
        "{:>8}  {:>12}  {:>12}  {:>10}",
        "ratio", "product", "C", "entangled"
    );
    for ratio in RATIOS {
        let params = SpdcParams::new(SIGMA_MINUS * ratio, SIGMA_MINUS)?;
        let state = spdc_state(&params)?;
        let report = evaluate_criterion_from_state(&state, Sign::Minus)?;
        let c = correlation_coefficient(&params, GlobalName::X)?;
        println!(
            "{ratio:>8.1}  {:>12.6}  {:>12.4}  {:>10}",
            report.product, c, report.entangled_verdict
        );
    }
    let vacuum = spdc_state(&SpdcParams::new(1.0, 1.0)?)?;
    let saturated = evaluate_criterion_from_state(&vacuum, Sign::Minus)?;
    println!("both widths 1 (vacuum): product {:.6}, saturates the bound", saturated.product);

    // 2. The full variance table for one strongly correlated source.
    let params = SpdcParams::new(2.0, 0.5)?;
    let table = analytic_variances(&params)?;
    println!("\nvariances for widths (2.0, 0.5):");
    for name in [GlobalName::X, GlobalName::U, GlobalName::V] {
        println!(
            "  {name}: minus {:.6}, plus {:.6}",
            table.get(name, Sign::Minus),
            table.get(name, Sign::Plus)
        );
    }

    // 3. Detector positions map to dimensionless quadratures through the
    //    optical scaling d = sqrt(f sin(angle) lambda / 2 pi).
    let scaling = OpticalScaling::new(0.4, 650e-9, std::f64::consts::FRAC_PI_3)?;
    println!(
        "\nscaling d = {:.4} um; a detector at 1 mm sits at w = {:.3}",
        scaling.d_m * 1e6,
        scaling.to_dimensionless(1e-3)
    );
    Ok(())
}
