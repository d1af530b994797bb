//! Rotated quadrature axes and the kernel connecting their eigenbases.
//!
//! Conventions: hbar = 1, [x, p] = i. A quadrature axis at angle theta is
//! q_theta = cos(theta) x + sin(theta) p, so theta = 0 is position and
//! theta = pi/2 is momentum.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Angle differences with |sin| below this are treated as parallel or
/// anti-parallel axes: the continuous overlap diverges there.
pub const MIN_SIN: f64 = 1e-12;

/// One rotated quadrature axis, q_theta = cos(theta) x + sin(theta) p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureAxis {
    pub theta: f64,
}

impl QuadratureAxis {
    pub fn new(theta: f64) -> Self {
        Self { theta }
    }

    /// Coefficients (cos theta, sin theta) of the axis in the (x, p) plane.
    pub fn coefficients(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }
}

/// Coefficients of q_theta in the (x, p) plane.
pub fn axis_coefficients(theta: f64) -> (f64, f64) {
    (theta.cos(), theta.sin())
}

/// |[q_a, q_b]| = |sin(theta_b - theta_a)|; the commutator itself is
/// i sin(theta_b - theta_a).
pub fn commutator_magnitude(theta_a: f64, theta_b: f64) -> f64 {
    (theta_b - theta_a).sin().abs()
}

/// Magnitude of the eigenbasis overlap |<q_b | q_a>| = 1/sqrt(2 pi |sin dtheta|).
///
/// Constant in the eigenvalues; it depends only on the angle between the axes.
pub fn mub_overlap_magnitude(theta_a: f64, theta_b: f64) -> Result<f64> {
    let s = (theta_b - theta_a).sin().abs();
    if s < MIN_SIN {
        return Err(Error::DegenerateAxes {
            theta_d: theta_b - theta_a,
            min_sin: MIN_SIN,
        });
    }
    Ok(1.0 / (2.0 * PI * s).sqrt())
}

/// Overlap kernel between eigenbases separated by theta_d:
///
/// <q'_theta_d | q_0> = sqrt(i e^{i theta_d} / (2 pi |sin theta_d|))
///                      * exp[i (cot(theta_d)/2)(q^2 + q'^2) - i q q'/sin(theta_d)]
///
/// The complex square root takes the principal branch; only the magnitude is
/// consumed elsewhere in the crate, the phase is provided as documented.
pub fn frft_kernel(theta_d: f64, q: f64, q_prime: f64) -> Result<Complex64> {
    let s = theta_d.sin();
    if s.abs() < MIN_SIN {
        return Err(Error::DegenerateAxes {
            theta_d,
            min_sin: MIN_SIN,
        });
    }
    let prefactor = (Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, theta_d)
        / (2.0 * PI * s.abs()))
    .sqrt();
    let cot = theta_d.cos() / s;
    let phase = 0.5 * cot * (q * q + q_prime * q_prime) - q * q_prime / s;
    Ok(prefactor * Complex64::from_polar(1.0, phase))
}

/// Three quadrature axes intended to be pairwise mutually unbiased.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MubTriple {
    pub angles: [f64; 3],
}

impl MubTriple {
    /// The canonical triple (0, 2 pi/3, 4 pi/3): position plus two axes
    /// rotated by +-120 degrees, written (x, r, s).
    pub fn canonical() -> Self {
        Self {
            angles: [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
        }
    }

    pub fn new(angles: [f64; 3]) -> Self {
        Self { angles }
    }

    pub fn axis(&self, i: usize) -> QuadratureAxis {
        QuadratureAxis::new(self.angles[i])
    }

    /// Pairwise difference angles (t1 - t0, t2 - t1, t0 - t2).
    pub fn difference_angles(&self) -> [f64; 3] {
        let [a, b, c] = self.angles;
        [b - a, c - b, a - c]
    }

    /// True iff all three pairwise overlap magnitudes are defined and equal
    /// within 1e-12, i.e. no pair is (anti-)parallel and no pair is singled
    /// out by a larger overlap than the others.
    pub fn is_mub_triple(&self) -> bool {
        let mut mags = [0.0; 3];
        for (k, d) in self.difference_angles().iter().enumerate() {
            match mub_overlap_magnitude(0.0, *d) {
                Ok(m) => mags[k] = m,
                Err(_) => return false,
            }
        }
        (mags[0] - mags[1]).abs() < 1e-12 && (mags[1] - mags[2]).abs() < 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_coefficients_at_mub_angles() {
        let (c, s) = axis_coefficients(0.0);
        assert_eq!((c, s), (1.0, 0.0));
        let (c, s) = axis_coefficients(2.0 * PI / 3.0);
        assert_relative_eq!(c, -0.5, max_relative = 1e-15);
        assert_relative_eq!(s, 3f64.sqrt() / 2.0, max_relative = 1e-15);
        let (c, s) = axis_coefficients(4.0 * PI / 3.0);
        assert_relative_eq!(c, -0.5, max_relative = 1e-14);
        assert_relative_eq!(s, -(3f64.sqrt()) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn commutator_magnitudes() {
        assert_relative_eq!(
            commutator_magnitude(0.0, PI / 2.0),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            commutator_magnitude(0.0, 2.0 * PI / 3.0),
            3f64.sqrt() / 2.0,
            max_relative = 1e-15
        );
        // Antisymmetric in magnitude: |sin| is even under swap.
        assert_eq!(
            commutator_magnitude(0.3, 1.7),
            commutator_magnitude(1.7, 0.3)
        );
    }

    #[test]
    fn overlap_x_p_is_plane_wave_magnitude() {
        let m = mub_overlap_magnitude(0.0, PI / 2.0).unwrap();
        assert_relative_eq!(m, 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(m, 0.3989422804014327, max_relative = 1e-12);
    }

    #[test]
    fn overlap_between_mub_axes() {
        // 1/sqrt(2 pi sin(2 pi/3)) = 1/sqrt(pi sqrt(3)).
        let m = mub_overlap_magnitude(0.0, 2.0 * PI / 3.0).unwrap();
        assert_relative_eq!(m, 1.0 / (PI * 3f64.sqrt()).sqrt(), max_relative = 1e-14);
        // Larger than the x-p overlap: the MUB axes are "closer" than conjugate ones.
        assert!(m > mub_overlap_magnitude(0.0, PI / 2.0).unwrap());
    }

    #[test]
    fn overlap_degenerate_pair_errors() {
        assert!(mub_overlap_magnitude(0.0, 0.0).is_err());
        assert!(mub_overlap_magnitude(0.3, 0.3 + PI).is_err());
        assert!(mub_overlap_magnitude(0.0, 2.0 * PI).is_err());
    }

    #[test]
    fn kernel_magnitude_matches_overlap() {
        for &theta in &[0.1, PI / 6.0, PI / 2.0, 2.0 * PI / 3.0, 3.0, 4.0] {
            let k = frft_kernel(theta, 0.7, -1.3).unwrap();
            let m = mub_overlap_magnitude(0.0, theta).unwrap();
            assert_relative_eq!(k.norm(), m, max_relative = 1e-12);
        }
    }

    #[test]
    fn kernel_at_quarter_turn_origin() {
        // sqrt(i * e^{i pi/2} / 2pi) = sqrt(-1/2pi) = i/sqrt(2pi) on the
        // principal branch.
        let k = frft_kernel(PI / 2.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(k.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(k.im, 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn kernel_magnitude_at_pi_over_six() {
        let k = frft_kernel(PI / 6.0, 2.0, -0.4).unwrap();
        assert_relative_eq!(k.norm(), 1.0 / PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(k.norm(), 0.5641895835477563, max_relative = 1e-12);
    }

    #[test]
    fn kernel_symmetric_in_arguments() {
        let a = frft_kernel(1.1, 0.4, 2.2).unwrap();
        let b = frft_kernel(1.1, 2.2, 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_degenerate_angle_errors() {
        assert!(frft_kernel(0.0, 1.0, 1.0).is_err());
        assert!(frft_kernel(PI, 1.0, 1.0).is_err());
    }

    #[test]
    fn canonical_triple_is_mub() {
        assert!(MubTriple::canonical().is_mub_triple());
    }

    #[test]
    fn equal_spacing_by_pi_thirds_is_also_unbiased() {
        // Differences pi/3, pi/3, -2pi/3 share |sin| = sqrt(3)/2.
        assert!(MubTriple::new([0.0, PI / 3.0, 2.0 * PI / 3.0]).is_mub_triple());
    }

    #[test]
    fn triples_with_degenerate_or_unequal_overlaps_are_rejected() {
        assert!(!MubTriple::new([0.0, PI / 2.0, PI]).is_mub_triple());
        assert!(!MubTriple::new([0.0, PI / 2.0, 5.0 * PI / 4.0]).is_mub_triple());
    }

    #[test]
    fn overlap_larger_than_conjugate_pair_for_all_mub_triples() {
        // Any unbiased triple overlap is at most 120 degrees apart pairwise,
        // so its overlap exceeds the x-p value 1/sqrt(2 pi).
        let xp = mub_overlap_magnitude(0.0, PI / 2.0).unwrap();
        let triple = MubTriple::canonical();
        for d in triple.difference_angles() {
            assert!(mub_overlap_magnitude(0.0, d).unwrap() > xp);
        }
    }
}
