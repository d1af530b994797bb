//! Gaussian-state covariance engine: exact first and second moments of
//! arbitrary quadrature combinations, mode rotations, Wigner-function
//! sampling, and seeded random physical states for property sweeps.
//!
//! Conventions (inherited by every other module): hbar = 1, [x, p] = i,
//! vacuum variances 1/2. Mode ordering is interleaved (x1, p1, x2, p2, ...),
//! so a mode rotation is a contiguous 2x2 block. cov[i][j] = (1/2)<{dz_i, dz_j}>.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physicality tolerance: eigenvalues of cov + (i/2)*Omega may be this far
/// below zero before a state is declared unphysical.
pub const PHYSICALITY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-10;

/// Standard symplectic form for n modes in interleaved ordering:
/// block-diagonal copies of [[0, 1], [-1, 0]].
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// A real linear combination of the mode quadratures, sum_i coeffs[i] * z_i
/// with z = (x1, p1, x2, p2, ...). Container for rotated quadratures q_theta
/// and for the two-mode global operators.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObservable {
    pub coeffs: DVector<f64>,
    pub label: String,
}

impl LinearObservable {
    pub fn new(coeffs: DVector<f64>, label: impl Into<String>) -> Result<Self> {
        if coeffs.iter().all(|c| *c == 0.0) {
            return Err(Error::invalid("observable coefficients are all zero"));
        }
        if coeffs.len() % 2 != 0 {
            return Err(Error::invalid(
                "observable coefficient vector must have even length (x, p per mode)",
            ));
        }
        Ok(Self {
            coeffs,
            label: label.into(),
        })
    }

    /// Single-mode rotated quadrature q_theta = cos(theta) x + sin(theta) p.
    pub fn quadrature(theta: f64) -> Self {
        Self {
            coeffs: DVector::from_vec(vec![theta.cos(), theta.sin()]),
            label: format!("q({theta:.6})"),
        }
    }

    /// q_theta acting on one mode of an n-mode system, zero elsewhere.
    pub fn quadrature_of_mode(n_modes: usize, mode: usize, theta: f64) -> Result<Self> {
        if mode >= n_modes {
            return Err(Error::invalid(format!(
                "mode index {mode} out of range for {n_modes} modes"
            )));
        }
        let mut coeffs = DVector::zeros(2 * n_modes);
        coeffs[2 * mode] = theta.cos();
        coeffs[2 * mode + 1] = theta.sin();
        Ok(Self {
            coeffs,
            label: format!("q({theta:.6})@{mode}"),
        })
    }
}

/// A Gaussian state given by its mean vector and covariance matrix.
///
/// The validating constructor `new` enforces physicality; `from_raw_moments`
/// only checks shape and symmetry, so that partial transposes and hand-edited
/// input files (which may be deliberately unphysical) can still be represented
/// and then interrogated through `is_physical`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianStateRepr {
    n_modes: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl Serialize for GaussianState {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = GaussianStateRepr {
            n_modes: self.n_modes,
            mean: self.mean.iter().copied().collect(),
            cov: (0..2 * self.n_modes)
                .map(|i| self.cov.row(i).iter().copied().collect())
                .collect(),
        };
        repr.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GaussianState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = GaussianStateRepr::deserialize(de)?;
        let dim = 2 * repr.n_modes;
        if repr.mean.len() != dim {
            return Err(serde::de::Error::custom(format!(
                "mean has length {}, expected {dim}",
                repr.mean.len()
            )));
        }
        if repr.cov.len() != dim || repr.cov.iter().any(|row| row.len() != dim) {
            return Err(serde::de::Error::custom(format!("cov must be {dim}x{dim}")));
        }
        let mean = DVector::from_vec(repr.mean);
        let cov = DMatrix::from_fn(dim, dim, |i, j| repr.cov[i][j]);
        // Shape/symmetry validation only: files may legitimately describe
        // unphysical moments that downstream checks are meant to flag.
        GaussianState::from_raw_moments(mean, cov).map_err(serde::de::Error::custom)
    }
}

impl GaussianState {
    /// Validating constructor: symmetry, positive diagonal, and physicality.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::from_raw_moments(mean, cov)?;
        if !state.is_physical() {
            return Err(Error::NonPhysical(format!(
                "minimum eigenvalue of cov + (i/2) Omega is {:.3e}, below -{PHYSICALITY_TOL:e}",
                state.min_physicality_eigenvalue()
            )));
        }
        Ok(state)
    }

    /// Shape/symmetry-validating constructor that deliberately skips the
    /// physicality check (partial transposes, file ingestion).
    pub fn from_raw_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.len() % 2 != 0 || mean.is_empty() {
            return Err(Error::invalid("mean length must be 2 * n_modes"));
        }
        let n_modes = mean.len() / 2;
        if cov.nrows() != 2 * n_modes || cov.ncols() != 2 * n_modes {
            return Err(Error::invalid(format!(
                "cov must be {0}x{0} to match the mean",
                2 * n_modes
            )));
        }
        for i in 0..2 * n_modes {
            if cov[(i, i)] <= 0.0 {
                return Err(Error::invalid(format!(
                    "cov diagonal entry {i} is {} (must be > 0)",
                    cov[(i, i)]
                )));
            }
            for j in (i + 1)..2 * n_modes {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!(
                        "cov is not symmetric at ({i},{j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { n_modes, mean, cov })
    }

    /// n-mode vacuum: zero mean, cov = diag(1/2).
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    /// Zero-mean state with diagonal covariance (x1 var, p1 var, x2 var, ...).
    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mean = DVector::zeros(diag.len());
        let cov = DMatrix::from_diagonal(&DVector::from_row_slice(diag));
        Self::from_raw_moments(mean, cov)
    }

    /// Replace the mean, keeping the covariance.
    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != 2 * self.n_modes {
            return Err(Error::invalid("mean length must be 2 * n_modes"));
        }
        self.mean = mean;
        Ok(self)
    }

    /// Tensor product (direct sum of means and covariances).
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.n_modes + other.n_modes;
        let mut mean = DVector::zeros(2 * n);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        mean.rows_mut(0, 2 * self.n_modes).copy_from(&self.mean);
        mean.rows_mut(2 * self.n_modes, 2 * other.n_modes)
            .copy_from(&other.mean);
        cov.view_mut((0, 0), (2 * self.n_modes, 2 * self.n_modes))
            .copy_from(&self.cov);
        cov.view_mut(
            (2 * self.n_modes, 2 * self.n_modes),
            (2 * other.n_modes, 2 * other.n_modes),
        )
        .copy_from(&other.cov);
        Self {
            n_modes: n,
            mean,
            cov,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_obs(&self, obs: &LinearObservable) -> Result<()> {
        if obs.coeffs.len() != 2 * self.n_modes {
            return Err(Error::invalid(format!(
                "observable '{}' has {} coefficients, state has {} modes",
                obs.label,
                obs.coeffs.len(),
                self.n_modes
            )));
        }
        Ok(())
    }

    /// <obs> = coeffs . mean.
    pub fn observable_mean(&self, obs: &LinearObservable) -> Result<f64> {
        self.check_obs(obs)?;
        Ok(obs.coeffs.dot(&self.mean))
    }

    /// Var(obs) = c^T cov c.
    pub fn observable_variance(&self, obs: &LinearObservable) -> Result<f64> {
        self.check_obs(obs)?;
        Ok((&self.cov * &obs.coeffs).dot(&obs.coeffs))
    }

    /// Symmetrized covariance of two observables, a^T cov b.
    pub fn observable_covariance(&self, a: &LinearObservable, b: &LinearObservable) -> Result<f64> {
        self.check_obs(a)?;
        self.check_obs(b)?;
        Ok((&self.cov * &b.coeffs).dot(&a.coeffs))
    }

    /// Heisenberg-picture rotation of one mode: after rotating by theta, the
    /// new x quadrature of that mode measures the old q_theta. Physicality is
    /// preserved (the map is symplectic).
    pub fn rotate_mode(&self, mode: usize, theta: f64) -> Result<Self> {
        if mode >= self.n_modes {
            return Err(Error::invalid(format!(
                "mode index {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        let (c, s) = (theta.cos(), theta.sin());
        let mut rot = DMatrix::identity(2 * self.n_modes, 2 * self.n_modes);
        rot[(2 * mode, 2 * mode)] = c;
        rot[(2 * mode, 2 * mode + 1)] = s;
        rot[(2 * mode + 1, 2 * mode)] = -s;
        rot[(2 * mode + 1, 2 * mode + 1)] = c;
        Ok(Self {
            n_modes: self.n_modes,
            mean: &rot * &self.mean,
            cov: &rot * &self.cov * rot.transpose(),
        })
    }

    fn min_physicality_eigenvalue(&self) -> f64 {
        let dim = 2 * self.n_modes;
        let omega = symplectic_form(self.n_modes);
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            Complex64::new(self.cov[(i, j)], 0.5 * omega[(i, j)])
        });
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Physicality: every eigenvalue of the Hermitian matrix cov + (i/2)Omega
    /// is >= -PHYSICALITY_TOL (equivalently, symplectic eigenvalues >= 1/2).
    pub fn is_physical(&self) -> bool {
        self.min_physicality_eigenvalue() >= -PHYSICALITY_TOL
    }

    /// Symplectic eigenvalues: moduli of the eigenvalues of Omega * cov,
    /// which come in pairs +-(i nu); returns the n ascending nu values.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let prod = symplectic_form(self.n_modes) * &self.cov;
        let mut moduli: Vec<f64> = prod.complex_eigenvalues().iter().map(|l| l.norm()).collect();
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Each nu appears twice; average the adjacent pair to cancel rounding.
        (0..self.n_modes)
            .map(|k| 0.5 * (moduli[2 * k] + moduli[2 * k + 1]))
            .collect()
    }

    /// Draw phase-space points from the state's Wigner function (a genuine
    /// multivariate normal for any physical Gaussian state). Returns a matrix
    /// with one sample per row. Deterministic for a fixed seed.
    pub fn sample_wigner(&self, n_samples: usize, seed: u64) -> Result<DMatrix<f64>> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples must be >= 1"));
        }
        if !self.is_physical() {
            return Err(Error::invalid(
                "cannot sample the Wigner function of a non-physical state",
            ));
        }
        let chol = nalgebra::Cholesky::new(self.cov.clone()).ok_or_else(|| {
            Error::NonPhysical("covariance is not positive definite".to_string())
        })?;
        let l = chol.l();
        let dim = 2 * self.n_modes;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = DMatrix::zeros(n_samples, dim);
        let mut z = DVector::zeros(dim);
        for row in 0..n_samples {
            for k in 0..dim {
                z[k] = StandardNormal.sample(&mut rng);
            }
            let point = &self.mean + &l * &z;
            out.row_mut(row).tr_copy_from(&point);
        }
        Ok(out)
    }
}

/// Random physical state with default squeeze range ln 2 and thermal spread
/// up to nu = 2. Built as S D S^T with D >= I/2 diagonal and S symplectic,
/// so physicality holds by construction.
pub fn random_physical_state(n_modes: usize, seed: u64) -> GaussianState {
    random_physical_state_with(n_modes, seed, std::f64::consts::LN_2, 1.5)
}

/// As `random_physical_state` with explicit squeeze magnitude bound and
/// thermal spread (nu drawn uniformly from [1/2, 1/2 + thermal_spread]).
/// max_squeeze = 0 and a single mode yields a thermal-like diagonal state.
pub fn random_physical_state_with(
    n_modes: usize,
    seed: u64,
    max_squeeze: f64,
    thermal_spread: f64,
) -> GaussianState {
    assert!(n_modes >= 1, "need at least one mode");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dim = 2 * n_modes;

    let mut d = DMatrix::zeros(dim, dim);
    for m in 0..n_modes {
        let nu = 0.5 + thermal_spread * rng.random::<f64>();
        d[(2 * m, 2 * m)] = nu;
        d[(2 * m + 1, 2 * m + 1)] = nu;
    }

    let mut s = DMatrix::identity(dim, dim);
    for _layer in 0..2 {
        for m in 0..n_modes {
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let r = max_squeeze * (2.0 * rng.random::<f64>() - 1.0);
            let mut step = DMatrix::identity(dim, dim);
            let (c, sn) = (phi.cos(), phi.sin());
            // Rotation followed by a squeeze on this mode's block.
            let rot = nalgebra::Matrix2::new(c, sn, -sn, c);
            let sq = nalgebra::Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp());
            let block = sq * rot;
            step.view_mut((2 * m, 2 * m), (2, 2)).copy_from(&block);
            s = step * s;
        }
        // Passive mixing between neighboring modes.
        for m in 0..n_modes.saturating_sub(1) {
            let tau = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let (c, sn) = (tau.cos(), tau.sin());
            let mut step = DMatrix::identity(dim, dim);
            for k in 0..2 {
                step[(2 * m + k, 2 * m + k)] = c;
                step[(2 * m + k, 2 * m + 2 + k)] = sn;
                step[(2 * m + 2 + k, 2 * m + k)] = -sn;
                step[(2 * m + 2 + k, 2 * m + 2 + k)] = c;
            }
            s = step * s;
        }
    }

    let cov = &s * d * s.transpose();
    // Symmetrize away the last bits of rounding so the invariant check holds.
    let cov = 0.5 * (&cov + cov.transpose());
    let mean = DVector::from_fn(dim, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    GaussianState::from_raw_moments(mean, cov).expect("construction is shape-valid")
}
