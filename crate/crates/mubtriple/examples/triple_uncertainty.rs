//! Triple uncertainty products for single-mode Gaussian states.
//!
//! Run with: cargo run --example triple_uncertainty

use mubtriple::gaussian::GaussianState;
use mubtriple::quadrature::MubTriple;
use mubtriple::uncertainty::{
    check_pairwise, check_schrodinger_robertson, intermediate_bound, minimize_g, triple_product,
};

const SQUEEZE_FACTORS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, 8.0];

fn main() -> mubtriple::Result<()> {
    let triple = MubTriple::canonical();

    // 1. The vacuum saturates the triple bound 1/8.
    let vacuum = GaussianState::vacuum(1);
    let tp = triple_product(&vacuum, &triple)?;
    println!("vacuum triple product   {tp:.15}  (bound 0.125)");

    // 2. Squeezing raises the product even though one factor shrinks.
    println!("\n{:>8}  {:>12}  {:>12}", "eta", "product", "intermediate");
    for s in SQUEEZE_FACTORS {
        // Var(x) = s/2, Var(p) = 1/(2s): a pure squeezed state.
        let state = GaussianState::from_diag(&[0.5 * s, 0.5 / s])?;
        let tp = triple_product(&state, &triple)?;
        let mid = intermediate_bound(&state)?;
        println!("{s:>8.2}  {tp:>12.6}  {mid:>12.6}");
    }

    // 3. The chain product >= intermediate >= 1/8 holds pairwise too.
    let state = GaussianState::from_diag(&[1.0, 0.3])?;
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        let report = check_pairwise(&state, triple.angles[a], triple.angles[b])?;
        println!(
            "\npair ({a},{b}): lhs {:.6} bound {:.6} margin {:+.3e}",
            report.lhs, report.bound, report.margin
        );
    }
    let sr = check_schrodinger_robertson(&state)?;
    println!("covariance-aware check: margin {:+.3e}", sr.margin);

    // 4. The bound constant comes from minimizing g over the unit square.
    let opt = minimize_g();
    println!(
        "\ng minimum: g({:.6}, {:.6}) = {:.9} after {} iterations (converged: {})",
        opt.eta, opt.xi, opt.g_min, opt.iterations, opt.converged
    );
    Ok(())
}
