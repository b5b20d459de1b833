//! Maximum-likelihood MIMO detection over square-QAM constellations.
//!
//! The crate provides two real-valued lattice views of a complex flat-fading
//! channel (the usual stacked form and an interleaved form in which every
//! complex symbol occupies two adjacent, mutually orthogonal columns), three
//! detectors that operate on the QR-reduced problem, and a Monte Carlo
//! harness that measures error rates and operation counts.
//!
//! ```
//! use latsd::lattice::{build_problem, RadiusPolicy, Representation};
//! use latsd::detectors::{sd_proposed, KBestSchedule};
//! use latsd::modem::Constellation;
//! use latsd::numkit::ComplexMatrix;
//! use num_complex::Complex64 as C;
//!
//! let h = ComplexMatrix::from_rows(&[
//!     vec![C::new(0.9, -0.3), C::new(0.2, 0.4)],
//!     vec![C::new(-0.5, 0.1), C::new(1.1, 0.6)],
//! ]).unwrap();
//! let s = [C::new(1.0, -3.0), C::new(-1.0, 1.0)];
//! let y = h.mul_vec(&s).unwrap();
//! let policy = RadiusPolicy::default();
//! let problem = build_problem(&h, &y, 0.1, Representation::Interleaved, &policy).unwrap();
//! let qam16 = Constellation::new(16).unwrap();
//! let out = sd_proposed(&problem, &qam16, &policy, &KBestSchedule::none()).unwrap();
//! assert_eq!(out.x_hat.as_slice(), &[1, -3, -1, 1]);
//! ```

pub mod detectors;
pub mod error;
pub mod lattice;
pub mod metrics;
pub mod modem;
pub mod numkit;
pub mod simkit;

pub use error::{Error, Result};
