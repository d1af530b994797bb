//! Data pipeline for coincidence scans: project a grid onto the sum or
//! difference coordinate, fit a Gaussian with Poisson weights, extract
//! variances with uncertainties, and assemble certification reports.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::entangle::{evaluate_criterion, CriterionReport, MeasuredVariance, Sign};
use crate::error::{Error, Result};
use crate::expsim::CoincidenceGrid;

const MAX_FIT_ITERATIONS: usize = 200;
const MIN_NONEMPTY_BINS: usize = 8;

/// Histogram of a sum or difference coordinate w = w1 +/- w2.
///
/// Errors are sqrt(counts) with a floor of 1 so empty bins keep finite
/// least-squares weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalHistogram {
    pub bin_centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub errors: Vec<f64>,
}

impl MarginalHistogram {
    pub fn new(bin_centers: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if bin_centers.len() != counts.len() {
            return Err(Error::invalid("bin centers and counts differ in length"));
        }
        if bin_centers.len() < 2 {
            return Err(Error::invalid("histogram needs at least 2 bins"));
        }
        let pitch = bin_centers[1] - bin_centers[0];
        if !(pitch > 0.0) {
            return Err(Error::invalid("bin centers must increase"));
        }
        for k in 1..bin_centers.len() {
            let step = bin_centers[k] - bin_centers[k - 1];
            if (step - pitch).abs() > 1e-9 * pitch {
                return Err(Error::invalid(format!("bins are not uniform at index {k}")));
            }
        }
        if counts.iter().any(|&c| !(c.is_finite() && c >= 0.0)) {
            return Err(Error::invalid("counts must be non-negative and finite"));
        }
        let errors = counts.iter().map(|&c| c.sqrt().max(1.0)).collect();
        Ok(Self { bin_centers, counts, errors })
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn non_empty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0.0).count()
    }
}

/// Projects the grid onto w = w1 + w2 or w = w1 - w2.
///
/// Both sums and differences of the two identical axis lattices land on a
/// lattice of the same pitch with 2n-1 sites, so every cell maps to exactly
/// one bin and the total count is conserved exactly.
pub fn marginalize(grid: &CoincidenceGrid, sign: Sign) -> Result<MarginalHistogram> {
    let n = grid.n();
    if n < 2 {
        return Err(Error::invalid("grid needs at least 2 bins per axis"));
    }
    let pitch = grid.axis1_w[1] - grid.axis1_w[0];
    let m = 2 * n - 1;
    let centers: Vec<f64> = (0..m).map(|k| (k as f64 - (n as f64 - 1.0)) * pitch).collect();
    let mut counts = vec![0.0f64; m];
    for i in 0..n {
        for j in 0..n {
            let k = match sign {
                Sign::Plus => i + j,
                Sign::Minus => i + (n - 1) - j,
            };
            counts[k] += grid.counts[i][j] as f64;
        }
    }
    MarginalHistogram::new(centers, counts)
}

/// Best-fit parameters of the model A exp(-(w-mu)^2 / 2 sigma^2) + B with
/// standard errors from the normal-equations curvature at the optimum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianFitResult {
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub mean: f64,
    pub mean_err: f64,
    pub sigma: f64,
    pub sigma_err: f64,
    pub background: f64,
    pub background_err: f64,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
}

impl GaussianFitResult {
    /// sigma^2 with first-order propagated uncertainty 2 sigma dsigma.
    pub fn variance(&self) -> MeasuredVariance {
        MeasuredVariance::new(self.sigma * self.sigma, 2.0 * self.sigma * self.sigma_err)
    }
}

fn model(params: &Vector4<f64>, w: f64) -> f64 {
    let (a, mu, sigma, b) = (params[0], params[1], params[2], params[3]);
    let z = (w - mu) / sigma;
    a * (-0.5 * z * z).exp() + b
}

fn chi2_of(params: &Vector4<f64>, hist: &MarginalHistogram) -> f64 {
    hist.bin_centers
        .iter()
        .zip(&hist.counts)
        .zip(&hist.errors)
        .map(|((&w, &c), &e)| {
            let r = (model(params, w) - c) / e;
            r * r
        })
        .sum()
}

/* Jacobian-based normal matrix J^T J and gradient J^T r of the weighted
   residuals r_k = (model(w_k) - c_k) / err_k. */
fn normal_equations(
    params: &Vector4<f64>,
    hist: &MarginalHistogram,
) -> (Matrix4<f64>, Vector4<f64>) {
    let (a, mu, sigma, _) = (params[0], params[1], params[2], params[3]);
    let mut n = Matrix4::zeros();
    let mut g = Vector4::zeros();
    for ((&w, &c), &e) in hist.bin_centers.iter().zip(&hist.counts).zip(&hist.errors) {
        let z = (w - mu) / sigma;
        let ex = (-0.5 * z * z).exp();
        let r = (a * ex + params[3] - c) / e;
        let j = Vector4::new(ex / e, a * ex * z / (sigma * e), a * ex * z * z / (sigma * e), 1.0 / e);
        n += j * j.transpose();
        g += j * r;
    }
    (n, g)
}

fn result_from(params: &Vector4<f64>, errs: [f64; 4], chi2: f64, dof: usize, converged: bool) -> GaussianFitResult {
    GaussianFitResult {
        amplitude: params[0],
        amplitude_err: errs[0],
        mean: params[1],
        mean_err: errs[1],
        // The model is even in sigma; report the positive branch and clamp
        // tiny negative background optima on noiseless data to zero.
        sigma: params[2].abs(),
        sigma_err: errs[2],
        background: params[3].max(0.0),
        background_err: errs[3],
        chi2,
        dof,
        converged,
    }
}

struct LmOutcome {
    params: Vector4<f64>,
    chi2: f64,
    converged: bool,
    iterations: usize,
}

fn lm_minimize(hist: &MarginalHistogram, init: Vector4<f64>) -> LmOutcome {
    let mut params = init;
    let mut chi2 = chi2_of(&params, hist);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_FIT_ITERATIONS {
        iterations += 1;
        let (n_mat, g) = normal_equations(&params, hist);
        let mut damped = n_mat;
        let floor = 1e-12 * (n_mat.trace().abs() + 1e-300);
        for k in 0..4 {
            damped[(k, k)] += lambda * n_mat[(k, k)].max(floor);
        }
        let Some(inv) = damped.try_inverse() else {
            break;
        };
        let step = -(inv * g);
        let candidate = params + step;
        let trial = if candidate[2].abs() > 1e-300 && candidate.iter().all(|v| v.is_finite()) {
            chi2_of(&candidate, hist)
        } else {
            f64::INFINITY
        };
        if trial <= chi2 {
            let small_step = (0..4).all(|k| step[k].abs() <= 1e-10 * (params[k].abs() + 1e-10));
            let small_drop = chi2 - trial <= 1e-12 * chi2.max(1.0);
            params = candidate;
            chi2 = trial;
            lambda = (lambda / 10.0).max(1e-12);
            if small_step || small_drop {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    LmOutcome { params, chi2, converged, iterations }
}

/// Weighted Levenberg-Marquardt fit of a Gaussian plus constant background.
///
/// The primary start takes A and B from the count extrema and mu, sigma from
/// the background-subtracted sample moments. A second start anchored on the
/// maximum bin with a pitch-scale width guards against broad contamination
/// skewing the moments; the converged start with the lower chi-squared wins.
/// Standard errors are the square roots of the inverse normal matrix
/// diagonal, inflated by sqrt(chi2/dof) when chi2/dof exceeds one.
pub fn fit_gaussian(hist: &MarginalHistogram) -> Result<GaussianFitResult> {
    if hist.non_empty_bins() < MIN_NONEMPTY_BINS {
        return Err(Error::invalid(format!(
            "need at least {MIN_NONEMPTY_BINS} non-empty bins, got {}",
            hist.non_empty_bins()
        )));
    }
    let n_bins = hist.counts.len();
    let dof = n_bins.saturating_sub(4);
    if dof == 0 {
        return Err(Error::invalid("too few bins for a four-parameter fit"));
    }

    let b0 = hist.counts.iter().cloned().fold(f64::INFINITY, f64::min);
    let peak = hist.counts.iter().cloned().fold(0.0f64, f64::max);
    let a0 = (peak - b0).max(1e-12);
    let mut wsum = 0.0;
    let mut m1 = 0.0;
    for (&w, &c) in hist.bin_centers.iter().zip(&hist.counts) {
        let excess = (c - b0).max(0.0);
        wsum += excess;
        m1 += excess * w;
    }
    let span = hist.bin_centers[n_bins - 1] - hist.bin_centers[0];
    let (mu0, sigma0) = if wsum > 0.0 {
        let mean = m1 / wsum;
        let mut m2 = 0.0;
        for (&w, &c) in hist.bin_centers.iter().zip(&hist.counts) {
            m2 += (c - b0).max(0.0) * (w - mean) * (w - mean);
        }
        let s = (m2 / wsum).sqrt();
        (mean, if s > 0.0 { s } else { span / 8.0 })
    } else {
        ((hist.bin_centers[0] + hist.bin_centers[n_bins - 1]) / 2.0, span / 8.0)
    };
    let pitch = hist.bin_centers[1] - hist.bin_centers[0];
    let peak_center = hist
        .counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| hist.bin_centers[k])
        .unwrap_or(mu0);

    let starts = [
        Vector4::new(a0, mu0, sigma0, b0),
        Vector4::new(a0, peak_center, 2.0 * pitch, b0),
    ];
    let mut best: Option<LmOutcome> = None;
    for init in starts {
        let outcome = lm_minimize(hist, init);
        let better = match &best {
            None => true,
            Some(cur) => {
                (outcome.converged && !cur.converged)
                    || (outcome.converged == cur.converged && outcome.chi2 < cur.chi2)
            }
        };
        if better {
            best = Some(outcome);
        }
    }
    let LmOutcome { params, chi2, converged, iterations } = best.expect("two starts attempted");

    let (n_mat, _) = normal_equations(&params, hist);
    let errs = match n_mat.try_inverse() {
        Some(cov) => {
            let inflation = if dof > 0 && chi2 / dof as f64 > 1.0 {
                (chi2 / dof as f64).sqrt()
            } else {
                1.0
            };
            [0, 1, 2, 3].map(|k| cov[(k, k)].max(0.0).sqrt() * inflation)
        }
        None => {
            let last = result_from(&params, [f64::NAN; 4], chi2, dof, false);
            return Err(Error::FitFailure { iterations, chi2, last: Box::new(last) });
        }
    };
    let result = result_from(&params, errs, chi2, dof, converged);
    if !converged {
        return Err(Error::FitFailure { iterations, chi2, last: Box::new(result) });
    }
    Ok(result)
}

/// Marginalizes the grid with the given sign and fits the histogram,
/// returning the fitted variance sigma^2 with uncertainty 2 sigma dsigma.
pub fn analyze_plane(grid: &CoincidenceGrid, sign: Sign) -> Result<MeasuredVariance> {
    Ok(fit_gaussian(&marginalize(grid, sign)?)?.variance())
}

/// Fit summary of one measurement plane: both global variances and the
/// correlation coefficient C = (plus spread) / (minus spread).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneAnalysis {
    pub plane: String,
    pub theta1_rad: f64,
    pub theta2_rad: f64,
    pub var_minus: MeasuredVariance,
    pub var_plus: MeasuredVariance,
    pub correlation: MeasuredVariance,
}

/// Full certification output: per-plane variances and correlations plus the
/// product-criterion report for the requested sign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyReport {
    pub sign: Sign,
    pub planes: Vec<PlaneAnalysis>,
    pub criterion: CriterionReport,
}

/// Analyzes both signs of one grid and forms the correlation coefficient
/// C = sqrt(var_plus / var_minus) with first-order error propagation.
pub fn analyze_grid(grid: &CoincidenceGrid, plane: &str) -> Result<PlaneAnalysis> {
    let var_minus = analyze_plane(grid, Sign::Minus)?;
    let var_plus = analyze_plane(grid, Sign::Plus)?;
    let c = (var_plus.value / var_minus.value).sqrt();
    let rel = 0.5
        * ((var_plus.uncertainty / var_plus.value).powi(2)
            + (var_minus.uncertainty / var_minus.value).powi(2))
        .sqrt();
    Ok(PlaneAnalysis {
        plane: plane.to_string(),
        theta1_rad: grid.config.theta1_rad,
        theta2_rad: grid.config.theta2_rad,
        var_minus,
        var_plus,
        correlation: MeasuredVariance::new(c, c * rel),
    })
}

/// Certifies entanglement from the three measured planes, ordered as the
/// X, U, V global variables (arm angles (0,0), (2pi/3, 4pi/3), (4pi/3, 2pi/3)).
///
/// All grids must share the same scaling length d. The criterion product uses
/// the requested sign's variances; correlations always use both signs.
pub fn certify(
    x_grid: &CoincidenceGrid,
    u_grid: &CoincidenceGrid,
    v_grid: &CoincidenceGrid,
    sign: Sign,
) -> Result<CertifyReport> {
    let d0 = x_grid.config.scaling.d_m;
    for (label, grid) in [("U", u_grid), ("V", v_grid)] {
        let d = grid.config.scaling.d_m;
        if (d - d0).abs() > 1e-9 * d0.abs() {
            return Err(Error::invalid(format!(
                "scaling length of plane {label} ({d} m) does not match plane X ({d0} m)"
            )));
        }
    }
    let planes = vec![
        analyze_grid(x_grid, "X")?,
        analyze_grid(u_grid, "U")?,
        analyze_grid(v_grid, "V")?,
    ];
    let pick = |p: &PlaneAnalysis| match sign {
        Sign::Plus => p.var_plus,
        Sign::Minus => p.var_minus,
    };
    let criterion = evaluate_criterion([pick(&planes[0]), pick(&planes[1]), pick(&planes[2])], sign)?;
    Ok(CertifyReport { sign, planes, criterion })
}
