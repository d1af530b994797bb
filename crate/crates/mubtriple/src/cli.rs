//! Command-line front end: uncertainty checks, the bound optimizer, scan
//! simulation, certification, fractional transforms, and per-plane analysis.
//!
//! Every command is deterministic given its inputs and flags. Machine
//! output (JSON, or CSV for `frft`) goes to stdout; human-oriented progress
//! notes go to stderr. Exit codes: 0 success, 1 usage or input error, 2 a
//! violated uncertainty bound (`ur` only).

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{analyze_grid, analyze_plane, certify};
use crate::entangle::{check_global_ur, Sign};
use crate::error::{Error, Result};
use crate::expsim::{
    add_fluorescence_background, read_grid_csv, simulate_scan, write_grid_csv, CoincidenceGrid,
    ScanConfig,
};
use crate::frft::{frft, position_variance, read_wavefunction_csv, write_wavefunction_csv};
use crate::gaussian::GaussianState;
use crate::quadrature::MubTriple;
use crate::spdc::{spdc_state, SpdcParams};
use crate::uncertainty::{
    check_pairwise, check_schrodinger_robertson, g_on_boundary, minimize_g, triple_product,
    UrReport,
};

pub const SCHEMA_VERSION: u32 = 1;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_spdc() -> SpdcParams {
    SpdcParams::new(2.0, 0.5).expect("reference widths are valid")
}

/// Extra background applied to the near-field plane after simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluorescenceConfig {
    /// Envelope width in the dimensionless slit coordinate.
    pub profile_width: f64,
    /// Expected added counts per second per bin, before the envelope shape.
    pub rate_hz: f64,
    pub seed: u64,
}

/// Top-level run configuration shared by the subcommands.
///
/// `scan.theta1_rad`, `scan.theta2_rad` and `scan.seed` are overridden by
/// `simulate`, which pins the three measured planes and derives one seed per
/// plane from the base seed. The optional fluorescence block is applied to
/// the near-field (x) plane only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default = "default_spdc")]
    pub spdc: SpdcParams,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub fluorescence: Option<FluorescenceConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            spdc: default_spdc(),
            scan: ScanConfig::default(),
            fluorescence: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                config.schema_version
            )));
        }
        config.spdc.validate()?;
        config.scan.validate()?;
        Ok(config)
    }
}

/// The three measured planes and their arm rotation angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlaneId {
    X,
    U,
    V,
}

impl PlaneId {
    pub const ALL: [PlaneId; 3] = [PlaneId::X, PlaneId::U, PlaneId::V];

    pub fn angles(self) -> (f64, f64) {
        let third = 2.0 * std::f64::consts::PI / 3.0;
        match self {
            PlaneId::X => (0.0, 0.0),
            PlaneId::U => (third, 2.0 * third),
            PlaneId::V => (2.0 * third, third),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlaneId::X => "x",
            PlaneId::U => "u",
            PlaneId::V => "v",
        }
    }

    fn index(self) -> u64 {
        match self {
            PlaneId::X => 0,
            PlaneId::U => 1,
            PlaneId::V => 2,
        }
    }
}

/// Per-plane seed derived from the base seed; plane x keeps the base seed
/// so single-plane runs match the configured value, and the other planes get
/// decorrelated values via a fixed odd multiplier.
pub fn plane_seed(base: u64, plane: PlaneId) -> u64 {
    base ^ plane.index().wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
    Both,
}

impl SignArg {
    fn single(self) -> Option<Sign> {
        match self {
            SignArg::Plus => Some(Sign::Plus),
            SignArg::Minus => Some(Sign::Minus),
            SignArg::Both => None,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "mubtriple",
    version,
    about = "Triple uncertainty products and entanglement certification for two-mode Gaussian scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check uncertainty bounds of a state (exit 2 when any is violated).
    Ur {
        /// Gaussian state JSON file; one mode gets the rotated-quadrature
        /// checks, two modes the sum/difference checks.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Run configuration; its two-mode source state is checked when no
        /// state file is given.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Minimize the triple-product bound function over physical variances.
    Optimize {
        /// Also print the bound along the saturation boundary on a grid.
        #[arg(long)]
        grid_scan: bool,
    },
    /// Simulate coincidence scans of the three measured planes.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the grid CSV files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Base seed; overrides the configured scan seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Subset of planes to simulate, e.g. --planes x,u.
        #[arg(long, value_delimiter = ',')]
        planes: Option<Vec<PlaneId>>,
    },
    /// Certify entanglement from three measured plane grids (x u v order).
    Certify {
        /// Grid files for the x, u and v planes (CSV or JSON).
        #[arg(num_args = 3)]
        grids: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        sign: SignArg,
        /// Also write the report JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the fractional transform to a sampled wavefunction CSV.
    Frft {
        input: PathBuf,
        /// Rotation angle in radians.
        #[arg(long)]
        theta: f64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report the position variance of the transformed state.
        #[arg(long)]
        report_variance: bool,
    },
    /// Extract marginal variances from one grid file.
    Analyze {
        grid: PathBuf,
        /// Plane label for the report; inferred from the angles when omitted.
        #[arg(long)]
        plane: Option<String>,
        #[arg(long, value_enum, default_value = "both")]
        sign: SignArg,
    },
}

/// Parses process arguments and runs the selected command.
pub fn run() -> ExitCode {
    run_from(std::env::args_os())
}

/// Testable entry point over an explicit argument list.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            let code = if err.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Ur { state, config } => cmd_ur(state.as_deref(), config.as_deref()),
        Command::Optimize { grid_scan } => cmd_optimize(grid_scan),
        Command::Simulate { config, out, seed, planes } => {
            cmd_simulate(config.as_deref(), &out, seed, planes)
        }
        Command::Certify { grids, sign, out } => cmd_certify(&grids, sign, out.as_deref()),
        Command::Frft { input, theta, out, report_variance } => {
            cmd_frft(&input, theta, out.as_deref(), report_variance)
        }
        Command::Analyze { grid, plane, sign } => cmd_analyze(&grid, plane.as_deref(), sign),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/* A consumer closing stdout early (e.g. piping into head) is not a failure
   of this process; swallow the broken pipe instead of panicking. */
fn write_stdout(bytes: &[u8]) -> Result<()> {
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_stdout(text.as_bytes())
}

fn load_grid(path: &Path) -> Result<CoincidenceGrid> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let grid = if is_json {
        let grid: CoincidenceGrid = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        grid.validate()?;
        grid
    } else {
        read_grid_csv(BufReader::new(fs::File::open(path)?))?
    };
    Ok(grid)
}

#[derive(Serialize)]
struct UrBatch {
    all_satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    triple_product: Option<f64>,
    reports: Vec<UrReport>,
}

fn cmd_ur(state_path: Option<&Path>, config_path: Option<&Path>) -> Result<u8> {
    let state: GaussianState = match (state_path, config_path) {
        (Some(path), _) => serde_json::from_str(&fs::read_to_string(path)?)?,
        (None, Some(path)) => spdc_state(&RunConfig::load(path)?.spdc)?,
        (None, None) => return Err(Error::invalid("provide --state or --config")),
    };
    let mut triple = None;
    let reports = match state.n_modes() {
        1 => {
            let angles = MubTriple::canonical().angles;
            let tp = triple_product(&state, &MubTriple::canonical())?;
            triple = Some(tp);
            vec![
                check_pairwise(&state, angles[0], angles[1])?,
                check_pairwise(&state, angles[0], angles[2])?,
                check_pairwise(&state, angles[1], angles[2])?,
                check_schrodinger_robertson(&state)?,
                UrReport::new("triple_product", tp, 0.125),
            ]
        }
        2 => vec![
            check_global_ur(&state, Sign::Plus)?,
            check_global_ur(&state, Sign::Minus)?,
        ],
        n => {
            return Err(Error::invalid(format!(
                "uncertainty checks support 1 or 2 modes, got {n}"
            )))
        }
    };
    let all_satisfied = reports.iter().all(|r| r.satisfied);
    print_json(&UrBatch { all_satisfied, triple_product: triple, reports })?;
    Ok(if all_satisfied { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_optimize(grid_scan: bool) -> Result<u8> {
    let result = minimize_g();
    if grid_scan {
        let grid: Vec<serde_json::Value> = (2..=20)
            .map(|k| {
                let eta = k as f64 * 0.05;
                let g = g_on_boundary(eta).expect("grid is inside the physical region");
                json!({ "eta": eta, "g": g })
            })
            .collect();
        print_json(&json!({ "result": result, "grid": grid }))?;
    } else {
        print_json(&result)?;
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(
    config_path: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
    planes: Option<Vec<PlaneId>>,
) -> Result<u8> {
    let config = match config_path {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let base_seed = seed.unwrap_or(config.scan.seed);
    let planes = planes.unwrap_or_else(|| PlaneId::ALL.to_vec());
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for plane in planes {
        let (theta1, theta2) = plane.angles();
        let scan = ScanConfig {
            theta1_rad: theta1,
            theta2_rad: theta2,
            seed: plane_seed(base_seed, plane),
            ..config.scan.clone()
        };
        let mut grid = simulate_scan(&config.spdc, &scan)?;
        if plane == PlaneId::X {
            if let Some(f) = &config.fluorescence {
                grid = add_fluorescence_background(&grid, f.profile_width, f.rate_hz, f.seed)?;
            }
        }
        let path = out_dir.join(format!("scan_{}.csv", plane.label()));
        let mut buf = Vec::new();
        write_grid_csv(&grid, &mut buf)?;
        write_atomic(&path, &buf)?;
        eprintln!(
            "plane {}: {} counts -> {}",
            plane.label(),
            grid.total_counts(),
            path.display()
        );
        written.push(path.display().to_string());
    }
    print_json(&json!({ "seed": base_seed, "written": written }))?;
    Ok(EXIT_OK)
}

fn cmd_certify(grid_paths: &[PathBuf], sign: SignArg, out: Option<&Path>) -> Result<u8> {
    if grid_paths.len() != 3 {
        return Err(Error::invalid("certify needs three grid files: x u v"));
    }
    let x = load_grid(&grid_paths[0])?;
    let u = load_grid(&grid_paths[1])?;
    let v = load_grid(&grid_paths[2])?;
    let mut criteria = serde_json::Map::new();
    let mut planes_json = None;
    let signs: Vec<Sign> = match sign.single() {
        Some(s) => vec![s],
        None => Sign::BOTH.to_vec(),
    };
    for s in signs {
        let report = certify(&x, &u, &v, s)?;
        let verdict = if report.criterion.entangled_verdict { "entangled" } else { "not detected" };
        let sigma = report
            .criterion
            .sigma_level
            .map(|v| format!(", {v:.1} sigma"))
            .unwrap_or_default();
        eprintln!(
            "sign {}: product {:.6} +/- {:.6} vs 1 -> {verdict}{sigma}",
            report.criterion.sign, report.criterion.product, report.criterion.product_uncertainty
        );
        if planes_json.is_none() {
            planes_json = Some(serde_json::to_value(&report.planes)?);
        }
        criteria.insert(
            report.criterion.sign.to_string(),
            serde_json::to_value(&report.criterion)?,
        );
    }
    let output = json!({
        "planes": planes_json.expect("at least one sign analyzed"),
        "criteria": criteria,
    });
    print_json(&output)?;
    if let Some(path) = out {
        write_atomic(path, format!("{}\n", serde_json::to_string_pretty(&output)?).as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn cmd_frft(input: &Path, theta: f64, out: Option<&Path>, report_variance: bool) -> Result<u8> {
    let psi = read_wavefunction_csv(BufReader::new(fs::File::open(input)?))?;
    let rotated = frft(&psi, theta)?;
    let mut buf = Vec::new();
    writeln!(buf, "# frft theta_rad={theta}")?;
    if report_variance {
        let variance = position_variance(&rotated);
        writeln!(buf, "# rotated_variance={variance}")?;
        eprintln!("rotated variance: {variance}");
    }
    write_wavefunction_csv(&rotated, &mut buf)?;
    match out {
        Some(path) => write_atomic(path, &buf)?,
        None => write_stdout(&buf)?,
    }
    Ok(EXIT_OK)
}

/// Matches the grid's configured angles to a canonical plane label.
fn infer_plane_label(theta1: f64, theta2: f64) -> String {
    let tau = 2.0 * std::f64::consts::PI;
    for plane in PlaneId::ALL {
        let (t1, t2) = plane.angles();
        let close = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(tau);
            d < 1e-9 || tau - d < 1e-9
        };
        if close(theta1, t1) && close(theta2, t2) {
            return plane.label().to_uppercase();
        }
    }
    "custom".to_string()
}

fn cmd_analyze(grid_path: &Path, plane: Option<&str>, sign: SignArg) -> Result<u8> {
    let grid = load_grid(grid_path)?;
    let label = plane
        .map(str::to_string)
        .unwrap_or_else(|| infer_plane_label(grid.config.theta1_rad, grid.config.theta2_rad));
    match sign.single() {
        None => print_json(&analyze_grid(&grid, &label)?)?,
        Some(s) => {
            let variance = analyze_plane(&grid, s)?;
            print_json(&json!({
                "plane": label,
                "sign": s,
                "variance": variance,
            }))?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_seeds_are_distinct_and_x_keeps_base() {
        assert_eq!(plane_seed(42, PlaneId::X), 42);
        let seeds = [
            plane_seed(42, PlaneId::X),
            plane_seed(42, PlaneId::U),
            plane_seed(42, PlaneId::V),
        ];
        assert_ne!(seeds[0], seeds[1]);
        assert_ne!(seeds[0], seeds[2]);
        assert_ne!(seeds[1], seeds[2]);
    }

    #[test]
    fn run_config_parses_partial_json() {
        let config: RunConfig = serde_json::from_str(
            r#"{"schema_version": 1, "spdc": {"sigma_plus": 3.0, "sigma_minus": 0.4}}"#,
        )
        .unwrap();
        assert_eq!(config.schema_version, 1);
        assert_eq!(config.spdc.sigma_plus, 3.0);
        assert_eq!(config.scan.n_bins_per_axis, 150);
        assert!(config.fluorescence.is_none());
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"schema_version": 1, "extra": 1}"#).is_err());
    }

    #[test]
    fn plane_labels_infer_from_angles() {
        let third = 2.0 * std::f64::consts::PI / 3.0;
        assert_eq!(infer_plane_label(0.0, 0.0), "X");
        assert_eq!(infer_plane_label(third, 2.0 * third), "U");
        assert_eq!(infer_plane_label(2.0 * third, third), "V");
        assert_eq!(infer_plane_label(0.3, 0.3), "custom");
        // Angle comparison wraps around a full turn.
        let tau = 2.0 * std::f64::consts::PI;
        assert_eq!(infer_plane_label(tau, tau), "X");
    }

    #[test]
    fn default_config_round_trips() {
        let config = RunConfig::default();
        let json = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.schema_version, SCHEMA_VERSION);
        assert_eq!(back.scan.seed, config.scan.seed);
    }
}
