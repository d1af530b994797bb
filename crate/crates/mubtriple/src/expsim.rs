//! Synthetic coincidence-scan experiment: slit positions on a uniform grid,
//! expected counts proportional to the rotated joint density, Poisson noise,
//! and an optional fluorescence-like background. Counts are reproducible for
//! a fixed seed regardless of thread count: every grid row draws from its own
//! counter-mode substream selected by (seed, row).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::gaussian::LinearObservable;
use crate::spdc::{spdc_state, OpticalScaling, SpdcParams};

const DEFAULT_BINS: usize = 150;
const DEFAULT_ROI_M: f64 = 12e-3;
const DEFAULT_SLIT_M: f64 = 80e-6;
const DEFAULT_DWELL_S: f64 = 3.0;
// Peak expected counts of a few hundred for the canonical widths (2, 1/2),
// matching visibly noisy but well-resolved scans.
const DEFAULT_PAIR_RATE_HZ: f64 = 3000.0;

fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_roi() -> f64 {
    DEFAULT_ROI_M
}
fn default_slit() -> f64 {
    DEFAULT_SLIT_M
}
fn default_dwell() -> f64 {
    DEFAULT_DWELL_S
}
fn default_pair_rate() -> f64 {
    DEFAULT_PAIR_RATE_HZ
}
fn default_zero() -> f64 {
    0.0
}
fn default_seed() -> u64 {
    0
}
fn default_scaling() -> OpticalScaling {
    OpticalScaling::new(0.4, 650e-9, std::f64::consts::FRAC_PI_3)
        .expect("reference geometry is valid")
}

/// Geometry, rates, per-arm rotation angles and the RNG seed of one scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_bins")]
    pub n_bins_per_axis: usize,
    #[serde(default = "default_roi")]
    pub roi_m: f64,
    #[serde(default = "default_slit")]
    pub slit_width_m: f64,
    #[serde(default = "default_dwell")]
    pub dwell_time_s: f64,
    /// Calibration constant: expected coincidences per second at unit joint
    /// density and unit slit area.
    #[serde(default = "default_pair_rate")]
    pub pair_rate_hz: f64,
    /// Uniform background per bin, counts per second.
    #[serde(default = "default_zero")]
    pub background_rate_hz: f64,
    #[serde(default = "default_zero")]
    pub theta1_rad: f64,
    #[serde(default = "default_zero")]
    pub theta2_rad: f64,
    #[serde(default = "default_scaling")]
    pub scaling: OpticalScaling,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_bins_per_axis: DEFAULT_BINS,
            roi_m: DEFAULT_ROI_M,
            slit_width_m: DEFAULT_SLIT_M,
            dwell_time_s: DEFAULT_DWELL_S,
            pair_rate_hz: DEFAULT_PAIR_RATE_HZ,
            background_rate_hz: 0.0,
            theta1_rad: 0.0,
            theta2_rad: 0.0,
            scaling: default_scaling(),
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins_per_axis < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 bins per axis, got {}",
                self.n_bins_per_axis
            )));
        }
        if !(self.roi_m.is_finite() && self.roi_m > 0.0) {
            return Err(Error::invalid(format!("roi_m must be positive, got {}", self.roi_m)));
        }
        if !(self.slit_width_m.is_finite() && self.slit_width_m > 0.0) {
            return Err(Error::invalid(format!(
                "slit_width_m must be positive, got {}",
                self.slit_width_m
            )));
        }
        for (label, v) in [
            ("dwell_time_s", self.dwell_time_s),
            ("pair_rate_hz", self.pair_rate_hz),
            ("background_rate_hz", self.background_rate_hz),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{label} must be non-negative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Distance between neighboring bin centers, meters.
    pub fn pitch_m(&self) -> f64 {
        self.roi_m / self.n_bins_per_axis as f64
    }

    /// Bin-center position of index i, meters; centers straddle zero.
    pub fn bin_center_m(&self, i: usize) -> f64 {
        (i as f64 - (self.n_bins_per_axis as f64 - 1.0) / 2.0) * self.pitch_m()
    }
}

/// One simulated coincidence scan with its axes and configuration echo.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceGrid {
    pub config: ScanConfig,
    /// Bin centers of arm 1 and arm 2 in meters.
    pub axis1_m: Vec<f64>,
    pub axis2_m: Vec<f64>,
    /// The same axes divided by the scaling length d.
    pub axis1_w: Vec<f64>,
    pub axis2_w: Vec<f64>,
    /// counts[i][j] observed at (axis1[i], axis2[j]).
    pub counts: Vec<Vec<u64>>,
}

impl CoincidenceGrid {
    pub fn n(&self) -> usize {
        self.axis1_m.len()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Shape and axis-monotonicity check for grids read from files.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.config.n_bins_per_axis;
        for (label, axis) in [
            ("axis1_m", &self.axis1_m),
            ("axis2_m", &self.axis2_m),
            ("axis1_w", &self.axis1_w),
            ("axis2_w", &self.axis2_w),
        ] {
            if axis.len() != n {
                return Err(Error::invalid(format!(
                    "{label} has {} entries, expected {n}",
                    axis.len()
                )));
            }
            let pitch = axis[1] - axis[0];
            for k in 1..n {
                let step = axis[k] - axis[k - 1];
                if !(step > 0.0) || (step - pitch).abs() > 1e-9 * pitch.abs().max(1e-300) {
                    return Err(Error::invalid(format!(
                        "{label} is not uniformly increasing at index {k}"
                    )));
                }
            }
        }
        if self.counts.len() != n || self.counts.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("counts matrix shape does not match the axes"));
        }
        Ok(())
    }
}

/// Covariance data of the bivariate normal seen by the two rotated slits.
#[derive(Debug, Clone, Copy)]
pub struct PlaneDensity {
    pub var1: f64,
    pub var2: f64,
    pub cov: f64,
}

impl PlaneDensity {
    pub fn new(params: &SpdcParams, theta1: f64, theta2: f64) -> Result<Self> {
        let state = spdc_state(params)?;
        let q1 = LinearObservable::quadrature_of_mode(2, 0, theta1)?;
        let q2 = LinearObservable::quadrature_of_mode(2, 1, theta2)?;
        Ok(Self {
            var1: state.observable_variance(&q1)?,
            var2: state.observable_variance(&q2)?,
            cov: state.observable_covariance(&q1, &q2)?,
        })
    }

    pub fn correlation(&self) -> f64 {
        self.cov / (self.var1 * self.var2).sqrt()
    }

    /// Zero-mean bivariate normal density at (w1, w2).
    pub fn density(&self, w1: f64, w2: f64) -> f64 {
        let det = self.var1 * self.var2 - self.cov * self.cov;
        let quad = (self.var2 * w1 * w1 - 2.0 * self.cov * w1 * w2 + self.var1 * w2 * w2) / det;
        (-0.5 * quad).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    }
}

/// Joint density of the two rotated slit coordinates (dimensionless).
pub fn joint_density(
    params: &SpdcParams,
    theta1: f64,
    theta2: f64,
    w1: f64,
    w2: f64,
) -> Result<f64> {
    Ok(PlaneDensity::new(params, theta1, theta2)?.density(w1, w2))
}

/* Poisson sampling pinned for cross-run stability: cumulative inversion with
   a single uniform below mean 30, rounded normal approximation above. */
pub(crate) fn sample_poisson(rng: &mut ChaCha12Rng, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    if mu < 30.0 {
        let u: f64 = rand::RngExt::random(rng);
        let mut k = 0u64;
        let mut p = (-mu).exp();
        let mut cum = p;
        while u > cum {
            k += 1;
            p *= mu / k as f64;
            cum += p;
            if k > 1000 {
                break; // unreachable for mu < 30; guards float pathologies
            }
        }
        k
    } else {
        let z: f64 = StandardNormal.sample(rng);
        let v = mu + mu.sqrt() * z;
        if v < 0.0 {
            0
        } else {
            v.round() as u64
        }
    }
}

/// Simulates one coincidence scan of the state over the configured plane.
///
/// Expected counts at bin (i, j) are
/// pair_rate * dwell * density(w1_i, w2_j) * (slit_width/d)^2
/// + background_rate * dwell;
/// the slit factor treats the scan as point sampling of the density, valid
/// while the slit is much narrower than any density feature.
pub fn simulate_scan(params: &SpdcParams, config: &ScanConfig) -> Result<CoincidenceGrid> {
    config.validate()?;
    let plane = PlaneDensity::new(params, config.theta1_rad, config.theta2_rad)?;
    let n = config.n_bins_per_axis;
    let d = config.scaling.d_m;
    let axis_m: Vec<f64> = (0..n).map(|i| config.bin_center_m(i)).collect();
    let axis_w: Vec<f64> = axis_m.iter().map(|&x| x / d).collect();
    let slit_factor = (config.slit_width_m / d) * (config.slit_width_m / d);
    let signal_scale = config.pair_rate_hz * config.dwell_time_s * slit_factor;
    let background = config.background_rate_hz * config.dwell_time_s;

    let counts: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let w1 = axis_w[i];
            (0..n)
                .map(|j| {
                    let mu = signal_scale * plane.density(w1, axis_w[j]) + background;
                    sample_poisson(&mut rng, mu)
                })
                .collect()
        })
        .collect();

    Ok(CoincidenceGrid {
        config: config.clone(),
        axis1_m: axis_m.clone(),
        axis2_m: axis_m,
        axis1_w: axis_w.clone(),
        axis2_w: axis_w,
        counts,
    })
}

/// Adds background counts with a broad product-Gaussian envelope in the
/// dimensionless coordinates, independent of the signal. The envelope is
/// normalized so the expected total added is rate * dwell * n^2.
pub fn add_fluorescence_background(
    grid: &CoincidenceGrid,
    profile_width: f64,
    rate_hz: f64,
    seed: u64,
) -> Result<CoincidenceGrid> {
    if !(rate_hz.is_finite() && rate_hz >= 0.0) {
        return Err(Error::invalid(format!(
            "background rate must be non-negative, got {rate_hz}"
        )));
    }
    let mut out = grid.clone();
    if rate_hz == 0.0 {
        return Ok(out);
    }
    if !(profile_width.is_finite() && profile_width > 0.0) {
        return Err(Error::invalid(format!(
            "profile width must be positive, got {profile_width}"
        )));
    }
    let n = grid.n();
    let envelope = |w: f64| (-0.5 * w * w / (profile_width * profile_width)).exp();
    let weight_sum: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| envelope(grid.axis1_w[i]) * envelope(grid.axis2_w[j]))
        .sum();
    let total_expected = rate_hz * grid.config.dwell_time_s * (n * n) as f64;
    let rows: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let e1 = envelope(grid.axis1_w[i]);
            (0..n)
                .map(|j| {
                    let mu = total_expected * e1 * envelope(grid.axis2_w[j]) / weight_sum;
                    sample_poisson(&mut rng, mu)
                })
                .collect()
        })
        .collect();
    for (row, extra) in out.counts.iter_mut().zip(rows) {
        for (c, e) in row.iter_mut().zip(extra) {
            *c += e;
        }
    }
    Ok(out)
}

/// Writes the grid as CSV: '#' metadata lines (including the full config as
/// JSON), a column header, then one row per bin.
pub fn write_grid_csv<W: Write>(grid: &CoincidenceGrid, mut out: W) -> Result<()> {
    writeln!(out, "# coincidence grid v1")?;
    writeln!(out, "# config: {}", serde_json::to_string(&grid.config)?)?;
    writeln!(out, "# scaling_d_m: {}", grid.config.scaling.d_m)?;
    writeln!(
        out,
        "# plane: theta1_rad={} theta2_rad={}",
        grid.config.theta1_rad, grid.config.theta2_rad
    )?;
    writeln!(out, "# total_counts: {}", grid.total_counts())?;
    writeln!(out, "w1_index,w2_index,position1_m,position2_m,counts")?;
    for i in 0..grid.n() {
        for j in 0..grid.n() {
            writeln!(
                out,
                "{i},{j},{},{},{}",
                grid.axis1_m[i], grid.axis2_m[j], grid.counts[i][j]
            )?;
        }
    }
    Ok(())
}

/// Reads a grid written by `write_grid_csv`.
pub fn read_grid_csv<R: BufRead>(input: R) -> Result<CoincidenceGrid> {
    let mut config: Option<ScanConfig> = None;
    let mut cells: Vec<(usize, usize, f64, f64, u64)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(json) = rest.trim().strip_prefix("config:") {
                config = Some(serde_json::from_str(json.trim()).map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad config JSON: {e}"),
                })?);
            }
            continue;
        }
        if trimmed.starts_with("w1_index") {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 5 fields, got {}", parts.len()),
            });
        }
        let parse_err = |what: &str, e: &dyn std::fmt::Display| Error::Parse {
            line: lineno,
            message: format!("bad {what}: {e}"),
        };
        cells.push((
            parts[0].parse().map_err(|e| parse_err("w1_index", &e))?,
            parts[1].parse().map_err(|e| parse_err("w2_index", &e))?,
            parts[2].parse().map_err(|e| parse_err("position1_m", &e))?,
            parts[3].parse().map_err(|e| parse_err("position2_m", &e))?,
            parts[4].parse().map_err(|e| parse_err("counts", &e))?,
        ));
    }
    let config = config.ok_or_else(|| Error::invalid("CSV is missing the '# config:' line"))?;
    let n = config.n_bins_per_axis;
    if cells.len() != n * n {
        return Err(Error::invalid(format!(
            "CSV holds {} rows, expected {}",
            cells.len(),
            n * n
        )));
    }
    let d = config.scaling.d_m;
    let axis_m: Vec<f64> = (0..n).map(|i| config.bin_center_m(i)).collect();
    let axis_w: Vec<f64> = axis_m.iter().map(|&x| x / d).collect();
    let mut counts = vec![vec![0u64; n]; n];
    let mut seen = vec![vec![false; n]; n];
    for (i, j, p1, p2, c) in cells {
        if i >= n || j >= n {
            return Err(Error::invalid(format!("cell index ({i}, {j}) out of range")));
        }
        if (p1 - axis_m[i]).abs() > 1e-9 * axis_m[i].abs().max(1.0)
            || (p2 - axis_m[j]).abs() > 1e-9 * axis_m[j].abs().max(1.0)
        {
            return Err(Error::invalid(format!(
                "cell ({i}, {j}) positions ({p1}, {p2}) disagree with the config grid"
            )));
        }
        if seen[i][j] {
            return Err(Error::invalid(format!("duplicate cell ({i}, {j})")));
        }
        seen[i][j] = true;
        counts[i][j] = c;
    }
    let grid = CoincidenceGrid {
        config,
        axis1_m: axis_m.clone(),
        axis2_m: axis_m,
        axis1_w: axis_w.clone(),
        axis2_w: axis_w,
        counts,
    };
    grid.validate()?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn canonical() -> SpdcParams {
        SpdcParams::new(2.0, 0.5).unwrap()
    }

    fn small_config(seed: u64) -> ScanConfig {
        ScanConfig {
            n_bins_per_axis: 40,
            pair_rate_hz: 20_000.0,
            seed,
            ..ScanConfig::default()
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let plane = PlaneDensity::new(&canonical(), 0.0, 0.0).unwrap();
        let h = 0.05;
        let mut total = 0.0;
        let mut k = -400;
        while k <= 400 {
            let mut l = -400;
            while l <= 400 {
                total += plane.density(k as f64 * h, l as f64 * h) * h * h;
                l += 1;
            }
            k += 1;
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn density_correlation_signs() {
        let params = canonical();
        let near = PlaneDensity::new(&params, 0.0, 0.0).unwrap();
        // (a - b) / (a + b) with a = 4, b = 1/4.
        assert_relative_eq!(near.correlation(), 15.0 / 17.0, max_relative = 1e-12);
        let rotated = PlaneDensity::new(&params, 2.0 * PI / 3.0, 4.0 * PI / 3.0).unwrap();
        assert!(rotated.correlation() > 0.0);
        let mirrored = PlaneDensity::new(&params, 4.0 * PI / 3.0, 2.0 * PI / 3.0).unwrap();
        assert!(mirrored.correlation() > 0.0);
        let momentum = PlaneDensity::new(&params, PI / 2.0, PI / 2.0).unwrap();
        assert!(momentum.correlation() < 0.0);
    }

    #[test]
    fn joint_density_peak_value() {
        // Peak of the near-field density: 1/(2 pi sqrt(det)), det = 1/4.
        let v = joint_density(&canonical(), 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(v, 1.0 / std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn zero_rates_give_empty_grid() {
        let config = ScanConfig {
            pair_rate_hz: 0.0,
            background_rate_hz: 0.0,
            n_bins_per_axis: 16,
            ..ScanConfig::default()
        };
        let grid = simulate_scan(&canonical(), &config).unwrap();
        assert_eq!(grid.total_counts(), 0);
    }

    #[test]
    fn fixed_seed_reproduces_grid() {
        let config = small_config(99);
        let a = simulate_scan(&canonical(), &config).unwrap();
        let b = simulate_scan(&canonical(), &config).unwrap();
        assert_eq!(a.counts, b.counts);
        let c = simulate_scan(&canonical(), &ScanConfig { seed: 100, ..config }).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let config = small_config(7);
        let default_pool = simulate_scan(&canonical(), &config).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_scan(&canonical(), &config).unwrap());
        assert_eq!(default_pool.counts, single.counts);
    }

    #[test]
    fn poisson_sampler_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for mu in [0.5, 4.0, 20.0, 80.0] {
            let n = 200_000;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let k = sample_poisson(&mut rng, mu) as f64;
                sum += k;
                sum2 += k * k;
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            let se = (mu / n as f64).sqrt();
            assert!((mean - mu).abs() < 5.0 * se, "mu {mu}: mean {mean}");
            // Poisson variance equals the mean.
            assert!((var - mu).abs() < 0.05 * mu + 5.0 * se, "mu {mu}: var {var}");
        }
        assert_eq!(sample_poisson(&mut rng, 0.0), 0);
    }

    #[test]
    fn totals_scale_linearly_with_pair_rate() {
        let config1 = small_config(3);
        let config2 = ScanConfig {
            pair_rate_hz: config1.pair_rate_hz * 2.0,
            ..config1.clone()
        };
        let t1 = simulate_scan(&canonical(), &config1).unwrap().total_counts() as f64;
        let t2 = simulate_scan(&canonical(), &config2).unwrap().total_counts() as f64;
        let sigma = (t2 + 4.0 * t1).sqrt();
        assert!((t2 - 2.0 * t1).abs() < 3.0 * sigma, "t1 {t1} t2 {t2}");
    }

    #[test]
    fn all_three_planes_show_positive_correlation() {
        let params = canonical();
        for (t1, t2) in [(0.0, 0.0), (2.0 * PI / 3.0, 4.0 * PI / 3.0), (4.0 * PI / 3.0, 2.0 * PI / 3.0)] {
            let config = ScanConfig {
                theta1_rad: t1,
                theta2_rad: t2,
                ..small_config(11)
            };
            let grid = simulate_scan(&params, &config).unwrap();
            let mut sw = 0.0;
            let (mut m1, mut m2) = (0.0, 0.0);
            for i in 0..grid.n() {
                for j in 0..grid.n() {
                    let c = grid.counts[i][j] as f64;
                    sw += c;
                    m1 += c * grid.axis1_w[i];
                    m2 += c * grid.axis2_w[j];
                }
            }
            m1 /= sw;
            m2 /= sw;
            let (mut c11, mut c22, mut c12) = (0.0, 0.0, 0.0);
            for i in 0..grid.n() {
                for j in 0..grid.n() {
                    let c = grid.counts[i][j] as f64;
                    let d1 = grid.axis1_w[i] - m1;
                    let d2 = grid.axis2_w[j] - m2;
                    c11 += c * d1 * d1;
                    c22 += c * d2 * d2;
                    c12 += c * d1 * d2;
                }
            }
            let pearson = c12 / (c11 * c22).sqrt();
            assert!(pearson > 0.2, "plane ({t1}, {t2}): pearson {pearson}");
        }
    }

    #[test]
    fn minus_marginal_variance_matches_analytic() {
        // Width ratio 4 at high rate: the count-weighted variance of w1 - w2
        // estimates Var(x1 - x2) = sigma_minus^2. Needs the full bin count;
        // coarser grids alias the narrow ridge.
        let params = canonical();
        let config = ScanConfig {
            pair_rate_hz: 60_000.0,
            seed: 21,
            ..ScanConfig::default()
        };
        let grid = simulate_scan(&params, &config).unwrap();
        let mut sw = 0.0;
        let mut mean = 0.0;
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                let c = grid.counts[i][j] as f64;
                sw += c;
                mean += c * (grid.axis1_w[i] - grid.axis2_w[j]);
            }
        }
        mean /= sw;
        let mut var = 0.0;
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                let c = grid.counts[i][j] as f64;
                let dm = grid.axis1_w[i] - grid.axis2_w[j] - mean;
                var += c * dm * dm;
            }
        }
        var /= sw;
        assert!((var - 0.25).abs() < 0.05 * 0.25, "var = {var}");
    }

    #[test]
    fn background_rate_adds_uniform_floor() {
        let config = ScanConfig {
            pair_rate_hz: 0.0,
            background_rate_hz: 10.0,
            n_bins_per_axis: 30,
            ..ScanConfig::default()
        };
        let grid = simulate_scan(&canonical(), &config).unwrap();
        let expected = 10.0 * config.dwell_time_s * 900.0;
        let total = grid.total_counts() as f64;
        assert!((total - expected).abs() < 5.0 * expected.sqrt(), "total {total}");
    }

    #[test]
    fn fluorescence_zero_rate_is_identity() {
        let grid = simulate_scan(&canonical(), &small_config(31)).unwrap();
        let same = add_fluorescence_background(&grid, 5.0, 0.0, 1).unwrap();
        assert_eq!(grid.counts, same.counts);
    }

    #[test]
    fn fluorescence_total_and_shape() {
        let config = ScanConfig {
            pair_rate_hz: 0.0,
            n_bins_per_axis: 50,
            ..ScanConfig::default()
        };
        let empty = simulate_scan(&canonical(), &config).unwrap();
        let rate = 20.0;
        let with_bg = add_fluorescence_background(&empty, 6.0, rate, 77).unwrap();
        let total = with_bg.total_counts() as f64;
        let expected = rate * config.dwell_time_s * 2500.0;
        assert!(
            (total - expected).abs() < 5.0 * expected.sqrt(),
            "total {total}, expected {expected}"
        );
        // The envelope concentrates counts toward the center.
        let n = with_bg.n();
        let center: u64 = (n / 2 - 5..n / 2 + 5)
            .map(|i| (n / 2 - 5..n / 2 + 5).map(|j| with_bg.counts[i][j]).sum::<u64>())
            .sum();
        let corner: u64 = (0..10)
            .map(|i| (0..10).map(|j| with_bg.counts[i][j]).sum::<u64>())
            .sum();
        assert!(center > 2 * corner, "center {center}, corner {corner}");
        // Determinism of the added layer.
        let again = add_fluorescence_background(&empty, 6.0, rate, 77).unwrap();
        assert_eq!(with_bg.counts, again.counts);
    }

    #[test]
    fn config_validation() {
        let mut config = ScanConfig::default();
        config.n_bins_per_axis = 1;
        assert!(config.validate().is_err());
        config = ScanConfig::default();
        config.pair_rate_hz = -1.0;
        assert!(config.validate().is_err());
        config = ScanConfig::default();
        config.dwell_time_s = f64::NAN;
        assert!(config.validate().is_err());
        assert!(ScanConfig::default().validate().is_ok());
    }

    #[test]
    fn config_serde_defaults_and_unknown_fields() {
        let partial: ScanConfig = serde_json::from_str(r#"{"seed": 5}"#).unwrap();
        assert_eq!(partial.n_bins_per_axis, 150);
        assert_eq!(partial.seed, 5);
        assert_relative_eq!(partial.roi_m, 12e-3, max_relative = 1e-15);
        assert!(serde_json::from_str::<ScanConfig>(r#"{"bins": 10}"#).is_err());
    }

    #[test]
    fn grid_csv_round_trip_and_stability() {
        let grid = simulate_scan(&canonical(), &ScanConfig {
            n_bins_per_axis: 12,
            ..small_config(55)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&grid, &mut buf).unwrap();
        let mut buf2 = Vec::new();
        write_grid_csv(&grid, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
        let back = read_grid_csv(buf.as_slice()).unwrap();
        assert_eq!(back.counts, grid.counts);
        assert_eq!(back.config.seed, grid.config.seed);
        assert_eq!(back.axis1_m, grid.axis1_m);
    }

    #[test]
    fn grid_csv_rejects_corruption() {
        let grid = simulate_scan(&canonical(), &ScanConfig {
            n_bins_per_axis: 8,
            ..small_config(56)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let no_config: String = text
            .lines()
            .filter(|l| !l.starts_with("# config"))
            .collect::<Vec<_>>()
            .join("\n");
        assert!(read_grid_csv(no_config.as_bytes()).is_err());
        let truncated: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(read_grid_csv(truncated.as_bytes()).is_err());
        let corrupt = text.replacen("0,0,", "0,xyz,", 1);
        assert!(read_grid_csv(corrupt.as_bytes()).is_err());
    }

    #[test]
    fn grid_json_round_trip() {
        let grid = simulate_scan(&canonical(), &ScanConfig {
            n_bins_per_axis: 10,
            ..small_config(57)
        })
        .unwrap();
        let json = serde_json::to_string(&grid).unwrap();
        let back: CoincidenceGrid = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.counts, grid.counts);
    }
}
