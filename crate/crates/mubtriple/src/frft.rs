//! Fractional Fourier transform on sampled one-dimensional wavefunctions.
//!
//! States live on the self-dual grid q_k = (k - n/2)*dq with dq = sqrt(2*pi/n),
//! the spacing for which a quarter turn is exactly the centered unitary DFT.
//! The transform family F_theta rotates phase space by theta; F_{pi/2} is the
//! forward Fourier transform, F_pi is parity, and angles compose additively
//! mod 2*pi. An arbitrary angle is evaluated by peeling integer quarter turns
//! (exact FFT branches) and handling the residual angle in [pi/4, 3*pi/4),
//! where |sin| >= sqrt(2)/2, with a chirp-multiply / FFT-convolve /
//! chirp-multiply pass. This keeps every chirp frequency bounded, so the
//! scheme is uniformly accurate in the angle, including near 0 and pi where
//! the raw kernel is singular.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Smallest grid any transform accepts.
pub const MIN_GRID: usize = 64;

/// Tolerance on the L2 norm of imported sample vectors.
pub const NORM_TOL: f64 = 1e-8;

/// Grid spacing that makes the discrete quarter turn exactly the centered DFT.
pub fn self_dual_spacing(n: usize) -> f64 {
    (2.0 * PI / n as f64).sqrt()
}

/// A wavefunction sampled on the centered self-dual grid.
#[derive(Debug, Clone)]
pub struct SampledWavefunction {
    amplitudes: Vec<Complex64>,
    dq: f64,
}

fn check_grid_size(n: usize) -> Result<()> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::invalid(format!(
            "grid size must be a power of two >= 2, got {n}"
        )));
    }
    Ok(())
}

impl SampledWavefunction {
    /// Wraps raw samples; the vector must already be normalized so that
    /// sum |psi_k|^2 dq = 1 within NORM_TOL.
    pub fn from_samples(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_grid_size(amplitudes.len())?;
        let dq = self_dual_spacing(amplitudes.len());
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dq;
        if !norm2.is_finite() || (norm2.sqrt() - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!(
                "samples are not normalized: L2 norm {}",
                norm2.sqrt()
            )));
        }
        Ok(Self { amplitudes, dq })
    }

    /// Samples a function on the grid and normalizes it.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid_size(n)?;
        let dq = self_dual_spacing(n);
        let mut amplitudes: Vec<Complex64> = (0..n)
            .map(|k| f((k as f64 - n as f64 / 2.0) * dq))
            .collect();
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dq;
        if !norm2.is_finite() || norm2 <= 0.0 {
            return Err(Error::invalid(format!(
                "sampled function has non-normalizable norm^2 = {norm2}"
            )));
        }
        let scale = norm2.sqrt().recip();
        for a in &mut amplitudes {
            *a *= scale;
        }
        Ok(Self { amplitudes, dq })
    }

    /// Ground state exp(-q^2/2)/pi^(1/4): position and momentum variance 1/2.
    pub fn ground_state(n: usize) -> Result<Self> {
        Self::from_fn(n, |q| Complex64::new((-0.5 * q * q).exp(), 0.0))
    }

    /// Ground state displaced to mean position q0 and mean momentum p0.
    pub fn displaced_ground(n: usize, q0: f64, p0: f64) -> Result<Self> {
        Self::from_fn(n, |q| {
            Complex64::from_polar((-0.5 * (q - q0) * (q - q0)).exp(), p0 * q)
        })
    }

    /// Squeezed vacuum with position variance eta (momentum variance 1/(4 eta)).
    pub fn squeezed(n: usize, eta: f64) -> Result<Self> {
        if eta <= 0.0 {
            return Err(Error::invalid(format!("squeezed needs eta > 0, got {eta}")));
        }
        Self::from_fn(n, |q| Complex64::new((-q * q / (4.0 * eta)).exp(), 0.0))
    }

    /// m-th oscillator eigenstate; position variance m + 1/2.
    pub fn fock(n: usize, m: usize) -> Result<Self> {
        Self::from_fn(n, |q| Complex64::new(hermite_function(m, q), 0.0))
    }

    /// Normalized superposition sum_m coeffs[m] |m> of oscillator eigenstates.
    pub fn fock_superposition(n: usize, coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(Error::invalid("fock_superposition needs nonzero coefficients"));
        }
        Self::from_fn(n, |q| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * hermite_function(m, q))
                .sum()
        })
    }

    pub fn n(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Grid coordinate of sample k.
    pub fn q(&self, k: usize) -> f64 {
        (k as f64 - self.n() as f64 / 2.0) * self.dq
    }

    /// L2 norm of the sampled state.
    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dq).sqrt()
    }
}

/// Normalized oscillator eigenfunction phi_m(q) by upward recurrence.
pub fn hermite_function(m: usize, q: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = (PI).powf(-0.25) * (-0.5 * q * q).exp();
    for k in 0..m {
        let next = q * (2.0 / (k as f64 + 1.0)).sqrt() * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

const ANGLE_SNAP: f64 = 1e-12;

/* Reduces theta to [0, 2*pi), snapping to exact quarter multiples. */
fn reduce_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    for k in 0..=4 {
        let target = k as f64 * PI / 2.0;
        if (t - target).abs() < ANGLE_SNAP {
            t = target;
        }
    }
    if t >= 2.0 * PI {
        t = 0.0;
    }
    t
}

/* Centered unitary DFT: out_j = n^(-1/2) (-1)^j sum_k e^(-+2*pi*i*j*k/n) (-1)^k in_k.
   Quarter turn of the self-dual grid; `forward` false gives the inverse turn. */
fn centered_dft(values: &[Complex64], forward: bool) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    };
    fft.process(&mut buf);
    let scale = (n as f64).sqrt().recip();
    buf.iter_mut().enumerate().for_each(|(j, v)| {
        *v *= scale;
        if j % 2 == 1 {
            *v = -*v;
        }
    });
    buf
}

/* Index reversal mod n: the parity operator on the periodic grid. */
fn parity(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    (0..n).map(|j| values[(n - j) % n]).collect()
}

fn quarter_turns(values: &[Complex64], k: usize) -> Vec<Complex64> {
    match k % 4 {
        0 => values.to_vec(),
        1 => centered_dft(values, true),
        2 => parity(values),
        _ => centered_dft(values, false),
    }
}

/* Kernel prefactor 1/sqrt(pi*(1 - e^(-2*i*theta))), principal branch.
   Re(1 - e^(-2*i*theta)) = 1 - cos(2*theta) >= 0, so the argument never
   crosses the branch cut. */
fn kernel_prefactor(theta: f64) -> Complex64 {
    let rho2 = Complex64::from_polar(1.0, -2.0 * theta);
    (PI * (Complex64::new(1.0, 0.0) - rho2)).sqrt().inv()
}

/* Residual transform for theta in [pi/4, 3*pi/4): chirp, convolve, chirp.
   out_j = P(theta) dq e^(-i tan(theta/2) x_j^2 / 2)
           sum_k e^(i (x_j - x_k)^2 / (2 sin theta)) e^(-i tan(theta/2) x_k^2 / 2) in_k */
fn bluestein(values: &[Complex64], dq: f64, theta: f64) -> Vec<Complex64> {
    let n = values.len();
    let half_tan = 0.5 * (0.5 * theta).tan();
    let inv_sin = (theta.sin()).recip();
    let x = |k: usize| (k as f64 - n as f64 / 2.0) * dq;

    let chirped: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -half_tan * x(k) * x(k)))
        .collect();

    // Linear convolution with c_d = e^(i (d*dq)^2 / (2 sin theta)) via a
    // zero-padded cyclic FFT of length >= 2n - 1.
    let len = (2 * n).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    a[..n].copy_from_slice(&chirped);
    let mut c = vec![Complex64::new(0.0, 0.0); len];
    for d in 0..n {
        let phase = 0.5 * inv_sin * (d as f64 * dq) * (d as f64 * dq);
        let val = Complex64::from_polar(1.0, phase);
        c[d] = val;
        if d > 0 {
            c[len - d] = val;
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    let ifft = planner.plan_fft_inverse(len);
    fft.process(&mut a);
    fft.process(&mut c);
    for (ai, ci) in a.iter_mut().zip(&c) {
        *ai *= ci;
    }
    ifft.process(&mut a);
    let inv_len = (len as f64).recip();

    let pref = kernel_prefactor(theta) * dq;
    (0..n)
        .map(|j| pref * Complex64::from_polar(1.0, -half_tan * x(j) * x(j)) * a[j] * inv_len)
        .collect()
}

/// Applies the fractional Fourier transform of angle theta.
pub fn frft(psi: &SampledWavefunction, theta: f64) -> Result<SampledWavefunction> {
    let n = psi.n();
    if n < MIN_GRID {
        return Err(Error::invalid(format!(
            "transform needs a grid of at least {MIN_GRID} points, got {n}"
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::invalid(format!(
            "input wavefunction is not normalized: L2 norm {norm}"
        )));
    }
    let t = reduce_angle(theta);
    let quarter = t / (PI / 2.0);
    let amplitudes = if (quarter - quarter.round()).abs() < 1e-15 && quarter.round() >= 0.0 {
        quarter_turns(&psi.amplitudes, quarter.round() as usize)
    } else {
        // Peel whole quarter turns so the residual lands in [pi/4, 3*pi/4).
        let k = ((t - PI / 4.0) / (PI / 2.0)).floor() as i64;
        let residual = t - k as f64 * PI / 2.0;
        let turned = quarter_turns(&psi.amplitudes, k.rem_euclid(4) as usize);
        bluestein(&turned, psi.dq, residual)
    };
    Ok(SampledWavefunction {
        amplitudes,
        dq: psi.dq,
    })
}

/// Mean position by midpoint sum.
pub fn position_mean(psi: &SampledWavefunction) -> f64 {
    let dq = psi.dq();
    (0..psi.n())
        .map(|k| psi.q(k) * psi.amplitudes[k].norm_sqr())
        .sum::<f64>()
        * dq
}

/// Position variance by midpoint sums.
pub fn position_variance(psi: &SampledWavefunction) -> f64 {
    let dq = psi.dq();
    let mean = position_mean(psi);
    (0..psi.n())
        .map(|k| {
            let d = psi.q(k) - mean;
            d * d * psi.amplitudes[k].norm_sqr()
        })
        .sum::<f64>()
        * dq
}

/// Variance of the rotated quadrature q_theta = cos(theta) x + sin(theta) p.
///
/// F_theta maps position onto q_theta (F_theta^dag x F_theta = q_theta), so
/// the variance is the position variance after transforming by +theta. The
/// theta = pi/2 case is the momentum variance via the forward transform.
pub fn rotated_variance(psi: &SampledWavefunction, theta: f64) -> Result<f64> {
    Ok(position_variance(&frft(psi, theta)?))
}

/// Product of the quadrature variances along the three axes at 0, 2*pi/3 and
/// 4*pi/3; bounded below by 1/8.
pub fn triple_product_numeric(psi: &SampledWavefunction) -> Result<f64> {
    let mut product = position_variance(psi);
    for theta in [2.0 * PI / 3.0, 4.0 * PI / 3.0] {
        product *= rotated_variance(psi, theta)?;
    }
    Ok(product)
}

/// Writes the sampled wavefunction as CSV rows (q, re, im).
pub fn write_wavefunction_csv<W: Write>(psi: &SampledWavefunction, mut out: W) -> Result<()> {
    writeln!(out, "q,re,im")?;
    for (k, a) in psi.amplitudes().iter().enumerate() {
        writeln!(out, "{},{},{}", psi.q(k), a.re, a.im)?;
    }
    Ok(())
}

/// Reads a wavefunction from CSV rows (q, re, im) on the self-dual grid.
pub fn read_wavefunction_csv<R: BufRead>(input: R) -> Result<SampledWavefunction> {
    let mut rows: Vec<(f64, Complex64)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.starts_with('q') {
            continue; // header
        }
        let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 comma-separated fields, got {}", parts.len()),
            });
        }
        let mut vals = [0.0f64; 3];
        for (slot, part) in vals.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad float {part:?}: {e}"),
            })?;
        }
        rows.push((vals[0], Complex64::new(vals[1], vals[2])));
    }
    let n = rows.len();
    check_grid_size(n).map_err(|_| {
        Error::invalid(format!("CSV holds {n} samples; need a power of two >= 2"))
    })?;
    let dq = self_dual_spacing(n);
    for (k, (q, _)) in rows.iter().enumerate() {
        let expected = (k as f64 - n as f64 / 2.0) * dq;
        if (q - expected).abs() > 1e-6 * dq.max(1.0) {
            return Err(Error::invalid(format!(
                "sample {k} at q = {q} is off the self-dual grid (expected {expected})"
            )));
        }
    }
    SampledWavefunction::from_samples(rows.into_iter().map(|(_, a)| a).collect())
}
