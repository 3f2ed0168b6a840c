//! Region-counting bounds and exact fixed-point enumeration for
//! piecewise-linear (PWL) networks.
//!
//! The crate has two halves that validate each other:
//!
//! * **Counting**: exact arbitrary-precision evaluation of region-count
//!   formulas for hyperplane arrangements built from pencils of parallel
//!   hyperplanes, together with the derived bounds on linear regions and
//!   (stable) fixed points of PWL networks.
//! * **Enumeration**: brute-force enumeration of arrangement regions,
//!   network linear regions (cells) and fixed points at desk scale, driven
//!   by a max-slack feasibility LP. Every closed-form count can be checked
//!   against an exhaustive enumeration on small instances.
//!
//! Modules follow that split: [`combinatorics`] holds the exact formulas,
//! [`polyhedra`] the feasibility oracle, [`arrangements`] the pencil
//! arrangements, [`network`] the PWL network machinery, [`sawtooth`] a
//! deep ReLU construction whose stable fixed-point count grows
//! exponentially with depth, and [`audit`] the randomized cross-validation
//! suites. [`io`] defines the JSON file formats consumed by the CLI.
//!
//! # Example
//!
//! The map `f(x) = 2 phi(2 x)` with hard tanh has three fixed points,
//! two of them stable:
//!
//! ```
//! use pwl_fixpoints::linalg::Matrix;
//! use pwl_fixpoints::network::fixed_points::fixed_points;
//! use pwl_fixpoints::network::{OneHiddenNetwork, PwlActivation};
//!
//! let w = Matrix::from_rows(&[vec![2.0]]).unwrap();
//! let net = OneHiddenNetwork::tied(w, PwlActivation::hard_tanh()).unwrap();
//! let records = fixed_points(&net.to_layered()).unwrap();
//! assert_eq!(records.len(), 3);
//! assert_eq!(records.iter().filter(|r| r.is_stable()).count(), 2);
//! ```

pub mod arrangements;
pub mod audit;
pub mod combinatorics;
pub mod io;
pub mod linalg;
pub mod network;
pub mod polyhedra;
pub mod rng;
pub mod sawtooth;
