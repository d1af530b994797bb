//! Overlap magnitudes between rotated quadrature eigenbases.
//!
//! Run with: cargo run --example mub_overlaps

use std::f64::consts::PI;

use mubtriple::quadrature::{frft_kernel, mub_overlap_magnitude, MubTriple};

const SAMPLES: usize = 12;

fn main() -> mubtriple::Result<()> {
    // 1. |<q_theta | q'_0>| depends only on the angle between the axes.
    println!("{:>10}  {:>12}", "delta", "|overlap|");
    for k in 1..SAMPLES {
        let delta = PI * k as f64 / SAMPLES as f64;
        let m = mub_overlap_magnitude(0.0, delta)?;
        println!("{delta:>10.4}  {m:>12.8}");
    }

    // 2. At 120 degrees the overlap is flat in both arguments: the bases
    //    are mutually unbiased, every pair of eigenstates equally likely.
    let delta = 2.0 * PI / 3.0;
    let expected = mub_overlap_magnitude(0.0, delta)?;
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let q = -2.0 + i as f64;
            let qp = -2.0 + j as f64;
            let mag = frft_kernel(delta, q, qp)?.norm();
            worst = worst.max((mag - expected).abs());
        }
    }
    println!("\nat 120 degrees: |kernel| = {expected:.8} everywhere (worst dev {worst:.2e})");

    // 3. Equally spaced triples are unbiased only at 60 or 120 degree
    //    spacing; those two describe the same three axes up to reversal.
    println!("\n{:>10}  {:>6}", "spacing", "MUB?");
    for k in 1..6 {
        let spacing = PI * k as f64 / 6.0;
        let triple = MubTriple::new([0.0, spacing, 2.0 * spacing]);
        println!("{spacing:>10.4}  {:>6}", triple.is_mub_triple());
    }
    Ok(())
}
