//! Counting bounds and saturation conditions for PWL networks.
//!
//! `region_product_bound` multiplies the per-layer pencil region counts,
//! with the effective dimension of each layer capped by the smallest
//! weight rank seen so far. The one-hidden-layer analysis checks the
//! conditions under which every stable fixed point must have all hidden
//! pre-activations saturated, in which case the stable count is bounded
//! by the outer-region count of a two-offset arrangement.

use super::{LayeredNetwork, NetworkError, OneHiddenNetwork, PwlActivation, BREAKPOINT_TOL};
use crate::arrangements::{enumerate_outer_regions, Arrangement, ParallelPencil, Region};
use crate::combinatorics::{outer_region_bound, parallel_regions_count, CountValue};
use crate::linalg::{rank, spectral_norm, svd, Vector};
use num_bigint::BigUint;
use num_traits::One;

/// Rank tolerance for the effective layer dimension.
const RANK_TOL: f64 = 1e-8;

/// Product upper bound on the number of linear regions:
/// `prod_v r_{d_v}(n_v, k)` with `d_v` the minimum weight rank among
/// layers 1..=v. A rank-0 layer makes every later factor 1 (a constant
/// image has a single region).
pub fn region_product_bound(net: &LayeredNetwork) -> Result<CountValue, NetworkError> {
    let k = net.activation().breakpoint_count() as u64;
    if k == 0 {
        return Err(NetworkError::Contract(
            "region bound needs an activation with at least one breakpoint".into(),
        ));
    }
    let mut bound = BigUint::one();
    let mut min_rank = usize::MAX;
    for layer in net.layers() {
        min_rank = min_rank.min(rank(&layer.weights, RANK_TOL));
        if min_rank == 0 {
            continue;
        }
        bound *= parallel_regions_count(layer.out_dim() as u64, k, min_rank as u64);
    }
    Ok(bound)
}

/// Outcome of the stable-count bound conditions for a one-hidden-layer
/// hard-tanh network.
#[derive(Debug, Clone)]
pub struct StableBoundReport {
    /// Weights tied (W = V^T within 1e-12) with every column norm >= 1.
    pub tied_case: bool,
    /// min_j ||nu_j|| * sum_k sigma_k^2 q_k(j)^2 >= 1 (row norm to the
    /// first power).
    pub gain_condition_literal: bool,
    /// Same with the row norm squared, matching the Jacobian lower bound
    /// the condition feeds into. Both readings are reported; only the
    /// tied case is relied on for asserted bounds.
    pub gain_condition_squared: bool,
    /// Outer-region bound on the number of stable fixed points.
    pub bound: CountValue,
}

/// Evaluate the saturation conditions under which
/// `|stable fixed points| <= outer_region_bound(n, d)`.
pub fn stable_bound_report(net: &OneHiddenNetwork) -> Result<StableBoundReport, NetworkError> {
    if net.activation() != &PwlActivation::hard_tanh() {
        return Err(NetworkError::Contract(
            "stable-count bound conditions are stated for hard tanh".into(),
        ));
    }
    let d = net.dim();
    let n = net.hidden();
    if n < d {
        return Err(NetworkError::Contract(format!(
            "needs hidden width >= dimension, got n = {n} < d = {d}"
        )));
    }

    let wt = net.w().transpose();
    let tied_weights = (0..n).all(|i| {
        (0..d).all(|j| (wt.get(i, j) - net.v().get(i, j)).abs() <= 1e-12)
    });
    let columns_large = (0..n).all(|j| net.w().column(j).norm() >= 1.0 - 1e-12);
    let tied_case = tied_weights && columns_large;

    // Per-row gain sum_k sigma_k^2 q_k(j)^2 from the SVD of W.
    let f = svd(net.w());
    let gains: Vec<f64> = (0..n)
        .map(|j| {
            (0..f.sigma.len())
                .map(|k| {
                    let q = f.v.get(j, k);
                    f.sigma[k] * f.sigma[k] * q * q
                })
                .sum()
        })
        .collect();
    let mut literal = f64::INFINITY;
    let mut squared = f64::INFINITY;
    for (j, gain) in gains.iter().enumerate() {
        let row_norm = net.v().row_vector(j).norm();
        literal = literal.min(row_norm * gain);
        squared = squared.min(row_norm * row_norm * gain);
    }

    Ok(StableBoundReport {
        tied_case,
        gain_condition_literal: literal >= 1.0,
        gain_condition_squared: squared >= 1.0,
        bound: outer_region_bound(n as u64, d as u64),
    })
}

/// Regions that can contain a stable fixed point: per hidden neuron j the
/// pre-activation `nu_j . x + u_j` must fall below `lower_j` or above
/// `upper_j`, so candidates are the outer regions of the two-offset
/// arrangement with pencil normals `nu_j` and offsets
/// `{lower_j - u_j, upper_j - u_j}` (the bias only shifts the pencil).
pub fn stable_candidate_regions(
    net: &OneHiddenNetwork,
    lower: &Vector,
    upper: &Vector,
) -> Result<Vec<Region>, NetworkError> {
    let n = net.hidden();
    if lower.len() != n || upper.len() != n {
        return Err(NetworkError::DimensionMismatch(format!(
            "thresholds must have length {n}"
        )));
    }
    let mut pencils = Vec::with_capacity(n);
    for j in 0..n {
        if lower[j] >= upper[j] {
            return Err(NetworkError::Contract(format!(
                "neuron {j}: lower threshold {} must be below upper {}",
                lower[j], upper[j]
            )));
        }
        let nu = net.v().row_vector(j);
        if nu.norm() == 0.0 {
            return Err(NetworkError::DegenerateNormal(j));
        }
        let offsets = vec![lower[j] - net.u()[j], upper[j] - net.u()[j]];
        pencils.push(ParallelPencil::new(nu, offsets)?);
    }
    let arr = Arrangement::new(net.dim(), pencils)?;
    Ok(enumerate_outer_regions(&arr)?)
}

/// Saturation thresholds of hard tanh, one per hidden neuron.
pub fn hard_tanh_thresholds(n: usize) -> (Vector, Vector) {
    (
        Vector::new(vec![-1.0; n]).expect("finite"),
        Vector::new(vec![1.0; n]).expect("finite"),
    )
}

/// Per-direction lower-bound diagnostic for the Jacobian norm of a
/// one-hidden-layer network at `x`.
#[derive(Debug, Clone)]
pub struct SpectralDiagnostic {
    /// ||J_f(x)||.
    pub jacobian_norm: f64,
    /// ||J r_j|| for the normalized rows r_j = nu_j / ||nu_j||; always at
    /// most the Jacobian norm.
    pub rayleigh: Vec<f64>,
    /// |phi'(nu_j . x + u_j)| * ||nu_j|| * sqrt(sum_k sigma_k^2 q_k(j)^2).
    /// Reported for inspection only, never asserted against the norm: the
    /// derivation behind it drops cross terms.
    pub slope_bounds: Vec<f64>,
}

pub fn jacobian_rayleigh_diagnostic(
    net: &OneHiddenNetwork,
    x: &Vector,
) -> Result<SpectralDiagnostic, NetworkError> {
    let jac = net.jacobian(x)?;
    let jacobian_norm = spectral_norm(&jac);
    let f = svd(net.w());
    let n = net.hidden();
    let mut rayleigh = Vec::with_capacity(n);
    let mut slope_bounds = Vec::with_capacity(n);
    for j in 0..n {
        let nu = net.v().row_vector(j);
        let nu_norm = nu.norm();
        if nu_norm == 0.0 {
            return Err(NetworkError::DegenerateNormal(j));
        }
        let r = nu.scale(1.0 / nu_norm);
        rayleigh.push(jac.matvec(&r).norm());
        let pre = nu.dot(x) + net.u()[j];
        debug_assert!(net.activation().near_breakpoint(pre, BREAKPOINT_TOL).is_none());
        let slope = net.activation().slope_at(pre);
        let gain: f64 = (0..f.sigma.len())
            .map(|k| {
                let q = f.v.get(j, k);
                f.sigma[k] * f.sigma[k] * q * q
            })
            .sum();
        slope_bounds.push(slope.abs() * nu_norm * gain.sqrt());
    }
    Ok(SpectralDiagnostic { jacobian_norm, rayleigh, slope_bounds })
}
