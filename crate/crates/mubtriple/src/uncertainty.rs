//! Uncertainty-relation bounds for rotated quadratures of a single mode:
//! pairwise products, the Schrodinger-Robertson relation, the triple
//! variance product with its 1/8 bound, and the constrained minimization
//! that produces that bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, LinearObservable};
use crate::quadrature::MubTriple;

/// Margins within this absolute tolerance of zero still count as satisfied;
/// bounds and variances are O(1) in the dimensionless convention.
pub const MARGIN_TOL: f64 = 1e-9;

/// Outcome of a single uncertainty-relation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UrReport {
    pub name: String,
    pub lhs: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// lhs - bound; satisfied iff margin >= -MARGIN_TOL.
    pub margin: f64,
}

impl UrReport {
    pub(crate) fn new(name: impl Into<String>, lhs: f64, bound: f64) -> Self {
        let margin = lhs - bound;
        Self {
            name: name.into(),
            lhs,
            bound,
            satisfied: margin >= -MARGIN_TOL,
            margin,
        }
    }
}

/// Result of minimizing g over the physical region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerResult {
    /// (Dx)^2 at the minimum.
    pub eta: f64,
    /// (Dp)^2 at the minimum.
    pub xi: f64,
    pub g_min: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn require_single_mode(state: &GaussianState) -> Result<()> {
    if state.n_modes() != 1 {
        return Err(Error::invalid(format!(
            "uncertainty checks need a single-mode state, got {} modes",
            state.n_modes()
        )));
    }
    Ok(())
}

/// Lower bound on Dq_A * Dq_B: half the commutator magnitude, (1/2)|sin(dtheta)|.
pub fn pairwise_bound(theta_a: f64, theta_b: f64) -> f64 {
    0.5 * (theta_b - theta_a).sin().abs()
}

/// Dq_A * Dq_B >= (1/2)|sin(theta_B - theta_A)| for a single-mode state.
pub fn check_pairwise(state: &GaussianState, theta_a: f64, theta_b: f64) -> Result<UrReport> {
    require_single_mode(state)?;
    let va = state.observable_variance(&LinearObservable::quadrature(theta_a))?;
    let vb = state.observable_variance(&LinearObservable::quadrature(theta_b))?;
    Ok(UrReport::new(
        format!("pairwise({theta_a:.6}, {theta_b:.6})"),
        (va * vb).sqrt(),
        pairwise_bound(theta_a, theta_b),
    ))
}

/// Schrodinger-Robertson: (Dx)^2 (Dp)^2 >= 1/4 + (1/4)(<{x,p}> - 2<x><p>)^2.
/// The cross term is twice the covariance-matrix off-diagonal entry.
pub fn check_schrodinger_robertson(state: &GaussianState) -> Result<UrReport> {
    require_single_mode(state)?;
    let cov = state.cov();
    let cross = 2.0 * cov[(0, 1)];
    Ok(UrReport::new(
        "schrodinger-robertson",
        cov[(0, 0)] * cov[(1, 1)],
        0.25 + 0.25 * cross * cross,
    ))
}

/// Product of the three variances along the triple's axes,
/// (Dq_t0)^2 (Dq_t1)^2 (Dq_t2)^2. Bounded below by 1/8 for the canonical
/// 120-degree triple; saturated exactly by coherent states.
pub fn triple_product(state: &GaussianState, triple: &MubTriple) -> Result<f64> {
    require_single_mode(state)?;
    let mut product = 1.0;
    for theta in triple.angles {
        product *= state.observable_variance(&LinearObservable::quadrature(theta))?;
    }
    Ok(product)
}

/// Cross-term-free intermediate bound on the triple product:
/// (Dx)^2 * (3 + ((Dx)^2 - 3 (Dp)^2)^2) / 16.
/// Chain: triple_product >= intermediate_bound >= 1/8 for physical states.
pub fn intermediate_bound(state: &GaussianState) -> Result<f64> {
    require_single_mode(state)?;
    let cov = state.cov();
    let (eta, xi) = (cov[(0, 0)], cov[(1, 1)]);
    Ok(g(eta, xi).expect("diagonal entries are positive"))
}

/// g(eta, xi) = (eta/16) * [3 + (eta - 3 xi)^2], the triple-product lower
/// bound as a function of eta = (Dx)^2 and xi = (Dp)^2.
pub fn g(eta: f64, xi: f64) -> Result<f64> {
    if eta <= 0.0 || xi <= 0.0 {
        return Err(Error::invalid(format!(
            "g requires positive variances, got eta = {eta}, xi = {xi}"
        )));
    }
    Ok(eta / 16.0 * (3.0 + (eta - 3.0 * xi).powi(2)))
}

/// g restricted to the Heisenberg boundary xi = 1/(4 eta).
pub fn g_on_boundary(eta: f64) -> Result<f64> {
    g(eta, 1.0 / (4.0 * eta))
}

/* d/deta of g(eta, 1/(4 eta)) = (3/256)(16 eta^2 - 3/eta^2 + 8). */
fn g_sat_derivative(eta: f64) -> f64 {
    3.0 / 256.0 * (16.0 * eta * eta - 3.0 / (eta * eta) + 8.0)
}

/* Second derivative 9/(128 eta^3) + 3 eta / 8; positive for eta > 0. */
fn g_sat_second_derivative(eta: f64) -> f64 {
    9.0 / (128.0 * eta.powi(3)) + 3.0 * eta / 8.0
}

/// Minimize g over the physical region eta, xi > 0, eta*xi >= 1/4 from the
/// default starting point.
pub fn minimize_g() -> OptimizerResult {
    minimize_g_from(1.0)
}

/// Minimize g starting from a given boundary coordinate eta.
///
/// The interior of the region has no stationary points (dg/dxi = 0 forces
/// eta = 3 xi, where dg/deta > 0), so the minimum lies on the boundary
/// xi = 1/(4 eta). There the problem is one-dimensional: a safeguarded
/// Newton iteration on the derivative root, falling back to bisection when
/// a step leaves the bracket. Convergence is verified against the second
/// derivative to confirm a minimum rather than a saddle.
pub fn minimize_g_from(eta0: f64) -> OptimizerResult {
    // The derivative is negative at small eta and positive at large eta;
    // this bracket holds its single sign change.
    let (mut lo, mut hi) = (1e-6, 1e6);
    let mut eta = eta0.clamp(lo, hi);
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..200 {
        iterations += 1;
        let f = g_sat_derivative(eta);
        if f > 0.0 {
            hi = eta;
        } else {
            lo = eta;
        }
        let step = f / g_sat_second_derivative(eta);
        let mut next = eta - step;
        if !(lo..=hi).contains(&next) {
            next = 0.5 * (lo + hi);
        }
        if (next - eta).abs() <= 1e-14 * eta.max(1.0) {
            eta = next;
            converged = true;
            break;
        }
        eta = next;
    }
    converged = converged && g_sat_second_derivative(eta) > 0.0;
    let xi = 1.0 / (4.0 * eta);
    OptimizerResult {
        eta,
        xi,
        g_min: g(eta, xi).expect("eta positive"),
        iterations,
        converged,
    }
}
