//! Double-Gaussian two-photon model: covariance construction, closed-form
//! variances of the global observables, correlation coefficients, and the
//! optical scaling that maps detector positions to dimensionless quadratures.
//!
//! The model is parametrized by the widths of the sum and difference
//! coordinates: Var(x1 +- x2) = sigma_pm^2 and Var(p1 +- p2) = 1/sigma_pm^2,
//! an EPR pair in each sign. The state is pure for every parameter choice and
//! entangled exactly when the two widths differ.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::entangle::{GlobalName, Sign};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

/// Widths of the sum (plus) and difference (minus) coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdcParams {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

impl SpdcParams {
    pub fn new(sigma_plus: f64, sigma_minus: f64) -> Result<Self> {
        let params = Self {
            sigma_plus,
            sigma_minus,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [("sigma_plus", self.sigma_plus), ("sigma_minus", self.sigma_minus)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{label} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Two-mode zero-mean Gaussian state of the double-Gaussian wavefunction.
///
/// The covariance is written down in closed form (every quantity of interest
/// is a second moment, so nothing is lost by never materializing the
/// wavefunction or its normalization). Physicality holds by construction:
/// both symplectic eigenvalues are exactly 1/2.
pub fn spdc_state(params: &SpdcParams) -> Result<GaussianState> {
    params.validate()?;
    let a = params.sigma_plus * params.sigma_plus;
    let b = params.sigma_minus * params.sigma_minus;
    let vx = (a + b) / 4.0;
    let cx = (a - b) / 4.0;
    let vp = (1.0 / a + 1.0 / b) / 4.0;
    let cp = (1.0 / a - 1.0 / b) / 4.0;
    GaussianState::from_raw_moments(
        nalgebra::dvector![0.0, 0.0, 0.0, 0.0],
        nalgebra::dmatrix![
            vx, 0.0, cx, 0.0;
            0.0, vp, 0.0, cp;
            cx, 0.0, vx, 0.0;
            0.0, cp, 0.0, vp
        ],
    )
}

/// Closed-form variances of the six global observables for one sign.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignVariances {
    pub x: f64,
    pub p: f64,
    pub r: f64,
    pub s: f64,
    pub u: f64,
    pub v: f64,
}

impl SignVariances {
    pub fn get(&self, name: GlobalName) -> f64 {
        match name {
            GlobalName::X => self.x,
            GlobalName::P => self.p,
            GlobalName::R => self.r,
            GlobalName::S => self.s,
            GlobalName::U => self.u,
            GlobalName::V => self.v,
        }
    }
}

/// Variances of all twelve global observables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VarianceTable {
    pub plus: SignVariances,
    pub minus: SignVariances,
}

impl VarianceTable {
    pub fn get(&self, name: GlobalName, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.plus.get(name),
            Sign::Minus => self.minus.get(name),
        }
    }
}

/// Evaluates the closed forms. X and P of a sign carry the bare widths; R and
/// S mix X and P of the same sign at the 120-degree axes; U and V mix X with
/// P of the opposite sign, e.g. (DU-)^2 = sigma_minus^2/4 + (3/4)/sigma_plus^2.
pub fn analytic_variances(params: &SpdcParams) -> Result<VarianceTable> {
    params.validate()?;
    let a = params.sigma_plus * params.sigma_plus;
    let b = params.sigma_minus * params.sigma_minus;
    let sign_table = |x: f64, p_same: f64, p_opp: f64| SignVariances {
        x,
        p: p_same,
        r: 0.25 * x + 0.75 * p_same,
        s: 0.25 * x + 0.75 * p_same,
        u: 0.25 * x + 0.75 * p_opp,
        v: 0.25 * x + 0.75 * p_opp,
    };
    Ok(VarianceTable {
        plus: sign_table(a, 1.0 / a, 1.0 / b),
        minus: sign_table(b, 1.0 / b, 1.0 / a),
    })
}

/// Ratio DW+/DW- for W in {X, U, V}; equal to sigma_plus/sigma_minus for all
/// three, which is what makes the ratio measurable in any one of the bases.
pub fn correlation_coefficient(params: &SpdcParams, which: GlobalName) -> Result<f64> {
    if !matches!(which, GlobalName::X | GlobalName::U | GlobalName::V) {
        return Err(Error::invalid(format!(
            "correlation coefficient is defined for X, U, V; got {which}"
        )));
    }
    let table = analytic_variances(params)?;
    let ratio = (table.get(which, Sign::Plus) / table.get(which, Sign::Minus)).sqrt();
    let expected = params.sigma_plus / params.sigma_minus;
    if (ratio - expected).abs() > 1e-12 * expected {
        return Err(Error::invalid(format!(
            "correlation ratio for {which} came out {ratio}, expected {expected}"
        )));
    }
    Ok(ratio)
}

/// d = sqrt(f * sin(angle) * lambda / (2 pi)), the length that maps detector
/// positions after the optical rotation onto dimensionless quadratures.
pub fn scaling_factor(focal_length_m: f64, wavelength_m: f64, angle_rad: f64) -> Result<f64> {
    if !(focal_length_m.is_finite() && focal_length_m > 0.0) {
        return Err(Error::invalid(format!(
            "focal length must be positive, got {focal_length_m}"
        )));
    }
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(Error::invalid(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    let s = angle_rad.sin();
    if !(s > crate::quadrature::MIN_SIN) {
        return Err(Error::invalid(format!(
            "rotation angle must have positive sine, got sin({angle_rad}) = {s}"
        )));
    }
    Ok((focal_length_m * s * wavelength_m / (2.0 * PI)).sqrt())
}

/// Optical geometry and its derived scaling length.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OpticalScaling {
    pub focal_length_m: f64,
    pub wavelength_m: f64,
    pub rotation_angle_rad: f64,
    /// Derived: scaling_factor of the three fields above.
    pub d_m: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticalScalingInput {
    focal_length_m: f64,
    wavelength_m: f64,
    rotation_angle_rad: f64,
    #[serde(default)]
    d_m: Option<f64>,
}

impl<'de> Deserialize<'de> for OpticalScaling {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let input = OpticalScalingInput::deserialize(deserializer)?;
        let scaling = OpticalScaling::new(
            input.focal_length_m,
            input.wavelength_m,
            input.rotation_angle_rad,
        )
        .map_err(serde::de::Error::custom)?;
        if let Some(d) = input.d_m {
            if (d - scaling.d_m).abs() > 1e-9 * scaling.d_m {
                return Err(serde::de::Error::custom(format!(
                    "d_m = {d} does not match the geometry (expected {})",
                    scaling.d_m
                )));
            }
        }
        Ok(scaling)
    }
}

impl OpticalScaling {
    pub fn new(focal_length_m: f64, wavelength_m: f64, rotation_angle_rad: f64) -> Result<Self> {
        Ok(Self {
            focal_length_m,
            wavelength_m,
            rotation_angle_rad,
            d_m: scaling_factor(focal_length_m, wavelength_m, rotation_angle_rad)?,
        })
    }

    /// Detector position in meters to the dimensionless quadrature w = pos/d.
    pub fn to_dimensionless(&self, position_m: f64) -> f64 {
        position_m / self.d_m
    }

    /// Dimensionless quadrature back to a detector position in meters.
    pub fn from_dimensionless(&self, w: f64) -> f64 {
        w * self.d_m
    }
}
