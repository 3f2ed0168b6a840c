//! A deep ReLU network on [0, 1] whose stable fixed-point count grows
//! exponentially with depth.
//!
//! The construction composes tent-shaped layers: each layer's units are
//! shifted ReLUs whose alternating-sign combination sweeps [0, 1] up and
//! down, so after `L - 1` activated layers the composition is a sawtooth
//! with `(2n)^(L-1)` linear pieces. A final scaling layer flattens the
//! slopes to +-1/2, an offset centers the sawtooth around zero, and a
//! residual bypass turns every descending zero crossing into a stable
//! fixed point of `f(x) = z(x) + x`: exactly `(2n)^(L-1) / 2` of them, at
//! `x = (4j - 1) / (2 (2n)^(L-1))`.
//!
//! The centering offset is a quarter of the piece height (half the
//! sawtooth's peak), which is what places the zeros mid-flank; centering
//! by the full peak would leave zeros only at the kinks, where no stable
//! fixed point can sit. Output metadata records the offset used.

use crate::linalg::{Matrix, Vector};
use crate::network::fixed_points::ScalarPwl;
use crate::network::{Layer, LayeredNetwork, NetworkError, PwlActivation};
use thiserror::Error;

/// Hard cap on the number of linear pieces a spec may generate.
pub const MAX_PIECES: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum SawtoothError {
    #[error("spec needs n >= 1 and layers >= 2, got n = {n}, layers = {layers}")]
    BadSpec { n: u64, layers: u64 },
    #[error("spec generates {0} linear pieces, cap is {MAX_PIECES}")]
    TooManyPieces(u128),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Shape of the construction: `2n` units per layer, `layers` layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SawtoothSpec {
    /// Half the layer width; the per-layer sawtooth has `n` teeth.
    pub n: u64,
    /// Network depth, at least 2.
    pub layers: u64,
}

impl SawtoothSpec {
    pub fn new(n: u64, layers: u64) -> Result<Self, SawtoothError> {
        if n < 1 || layers < 2 {
            return Err(SawtoothError::BadSpec { n, layers });
        }
        let spec = Self { n, layers };
        spec.pieces()?;
        Ok(spec)
    }

    /// Number of linear pieces of the final map on [0, 1]:
    /// `(2n)^(layers-1)`.
    pub fn pieces(&self) -> Result<u64, SawtoothError> {
        let base = 2u128 * self.n as u128;
        let mut p: u128 = 1;
        for _ in 0..(self.layers - 1) {
            p = p.saturating_mul(base);
            if p > MAX_PIECES as u128 {
                return Err(SawtoothError::TooManyPieces(p));
            }
        }
        Ok(p as u64)
    }

    /// Centering offset subtracted in the last layer.
    pub fn offset(&self) -> f64 {
        let pieces = (2.0 * self.n as f64).powi(self.layers as i32 - 1);
        0.25 / pieces
    }
}

/// Exact piecewise form of `f(x) = z(x) + x` on [0, 1]: breakpoints at
/// `i / pieces`, slopes alternating 3/2 and 1/2 starting with 3/2, and
/// `f(0) = -offset`.
pub fn build_sawtooth_scalar(spec: &SawtoothSpec) -> Result<ScalarPwl, SawtoothError> {
    let pieces = spec.pieces()?;
    let pf = pieces as f64;
    // Breakpoints as exact integer ratios, each rounded once.
    let breakpoints: Vec<f64> = (1..pieces).map(|i| i as f64 / pf).collect();
    let slopes: Vec<f64> = (0..pieces).map(|i| if i % 2 == 0 { 1.5 } else { 0.5 }).collect();
    let left_value = -spec.offset();
    Ok(ScalarPwl::on_unit_interval(breakpoints, slopes, left_value)?)
}

/// The stable fixed-point locations `(4j - 1) / (2 * pieces)` for
/// `j = 1 ..= pieces / 2`, ascending: the mid-flank zeros of the
/// descending pieces.
pub fn expected_stable_points(spec: &SawtoothSpec) -> Result<Vec<f64>, SawtoothError> {
    let pieces = spec.pieces()?;
    let denom = 2.0 * pieces as f64;
    Ok((1..=pieces / 2).map(|j| (4 * j - 1) as f64 / denom).collect())
}

/// ReLU network form: width `2n`, depth `layers`, linear last layer and a
/// residual bypass. Agrees with [`build_sawtooth_scalar`] pointwise on
/// [0, 1] up to floating-point roundoff.
pub fn build_sawtooth_network(spec: &SawtoothSpec) -> Result<LayeredNetwork, SawtoothError> {
    spec.pieces()?;
    let width = (2 * spec.n) as usize;
    let l = spec.layers as usize;

    // Unit shifts: unit k (1-based) activates above (k-1)/(2n).
    let shifts: Vec<f64> = (0..width).map(|k| k as f64 / (2.0 * spec.n as f64)).collect();

    // Tent coefficients: partial sums alternate +-2n, so the combined
    // layer output sweeps [0, 1] with slopes +-2n.
    let tent = alternating_coefficients(width, 2.0 * spec.n as f64);
    // Last-layer coefficients: partial sums alternate +-1/(2 (2n)^(L-2)).
    let flatten_target = 0.5 / (2.0 * spec.n as f64).powi(l as i32 - 2);
    let flatten = alternating_coefficients(width, flatten_target);

    let mut layers = Vec::with_capacity(l);
    layers.push(Layer::new(
        Matrix::new(width, 1, vec![1.0; width]).expect("finite"),
        Vector::new(shifts.iter().map(|s| -s).collect()).expect("finite"),
    )?);
    for _ in 1..(l - 1) {
        let mut w = Matrix::zeros(width, width);
        for i in 0..width {
            for (j, &coeff) in tent.iter().enumerate() {
                w.set(i, j, coeff);
            }
        }
        layers.push(Layer::new(
            w,
            Vector::new(shifts.iter().map(|s| -s).collect()).expect("finite"),
        )?);
    }
    layers.push(Layer::new(
        Matrix::new(1, width, flatten.clone()).expect("finite"),
        Vector::new(vec![-spec.offset()]).expect("finite"),
    )?);

    Ok(LayeredNetwork::new(layers, PwlActivation::relu(), false, true)?)
}

/// Coefficients whose partial sums alternate `+target, -target, ...`.
fn alternating_coefficients(count: usize, target: f64) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(count);
    let mut partial = 0.0;
    for j in 0..count {
        let want = if j % 2 == 0 { target } else { -target };
        coeffs.push(want - partial);
        partial = want;
    }
    coeffs
}
