//! Continuous-variable entanglement detection with a triple of mutually
//! unbiased quadrature bases.
//!
//! Three quadrature axes spaced 120 degrees apart in phase space (x, r, s)
//! are pairwise mutually unbiased, and the product of their variances obeys
//! a state-independent bound. Summing the axes across the two modes of a
//! bipartite state turns that bound into an entanglement criterion that
//! needs only three measured variances, one per plane. This crate carries
//! the whole chain from the single-mode bound to a simulated coincidence
//! experiment and its certification.
//!
//! Check the bound on a single mode:
//!
//! ```
//! use mubtriple::gaussian::GaussianState;
//! use mubtriple::quadrature::MubTriple;
//! use mubtriple::uncertainty::triple_product;
//!
//! let tp = triple_product(&GaussianState::vacuum(1), &MubTriple::canonical())?;
//! assert!((tp - 0.125).abs() < 1e-12);
//! # Ok::<(), mubtriple::Error>(())
//! ```
//!
//! Apply the two-mode criterion to a correlated source:
//!
//! ```
//! use mubtriple::entangle::{evaluate_criterion_from_state, Sign};
//! use mubtriple::spdc::{spdc_state, SpdcParams};
//!
//! let state = spdc_state(&SpdcParams::new(2.0, 0.5)?)?;
//! let report = evaluate_criterion_from_state(&state, Sign::Minus)?;
//! assert!(report.entangled_verdict);
//! assert!((report.product - 0.015625).abs() < 1e-12);
//! # Ok::<(), mubtriple::Error>(())
//! ```
//!
//! Simulate a scan and certify it from the fitted marginals:
//!
//! ```no_run
//! use mubtriple::analysis::certify;
//! use mubtriple::entangle::Sign;
//! use mubtriple::expsim::{simulate_scan, ScanConfig};
//! use mubtriple::spdc::SpdcParams;
//! use std::f64::consts::PI;
//!
//! let params = SpdcParams::new(2.0, 0.5)?;
//! let mut grids = Vec::new();
//! for (k, (t1, t2)) in [(0.0, 0.0), (2.0 * PI / 3.0, 4.0 * PI / 3.0), (4.0 * PI / 3.0, 2.0 * PI / 3.0)].into_iter().enumerate() {
//!     let config = ScanConfig { theta1_rad: t1, theta2_rad: t2, seed: k as u64, ..ScanConfig::default() };
//!     grids.push(simulate_scan(&params, &config)?);
//! }
//! let report = certify(&grids[0], &grids[1], &grids[2], Sign::Minus)?;
//! println!("product {} entangled {}", report.criterion.product, report.criterion.entangled_verdict);
//! # Ok::<(), mubtriple::Error>(())
//! ```
//!
//! Module map:
//!
//! - [`quadrature`]: rotated axes, overlap magnitudes, the MUB triple.
//! - [`gaussian`]: Gaussian states, linear observables, Wigner sampling.
//! - [`uncertainty`]: pairwise and triple variance bounds, the g optimizer.
//! - [`entangle`]: two-mode global observables and the criterion verdict.
//! - [`frft`]: fractional Fourier rotation of sampled wavefunctions.
//! - [`spdc`]: the two-mode squeezed source model and optical scaling.
//! - [`expsim`]: seeded coincidence-scan simulation on a detector grid.
//! - [`analysis`]: marginals, Gaussian fits, certification reports.
//! - [`cli`]: the `mubtriple` command-line front end.
//!
//! The runnable examples under `examples/` walk each capability end to end.
//! Conventions throughout: hbar = 1, vacuum quadrature variances 1/2, mode
//! ordering (x1, p1, x2, p2).

pub mod analysis;
pub mod cli;
pub mod entangle;
pub mod error;
pub mod expsim;
pub mod frft;
pub mod gaussian;
pub mod quadrature;
pub mod spdc;
pub mod uncertainty;

pub use error::{Error, Result};
