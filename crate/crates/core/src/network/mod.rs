//! Piecewise-linear networks: activations, layered and one-hidden-layer
//! forms, exact forward evaluation and Jacobians.
//!
//! A network is affine on each cell of a finite partition of the input
//! space; [`cells`] enumerates that partition exhaustively, and
//! [`fixed_points`] solves one linear system per cell to find every fixed
//! point. [`analysis`] evaluates the counting bounds and the saturation
//! conditions for one-hidden-layer hard-tanh networks.

pub mod analysis;
pub mod cells;
pub mod fixed_points;

use crate::arrangements::ArrangementError;
use crate::linalg::{LinalgError, Matrix, Vector};
use crate::polyhedra::PolyhedraError;
use thiserror::Error;

/// Pre-activations closer than this to a breakpoint make a point
/// non-differentiable for Jacobian purposes.
pub const BREAKPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid activation: {0}")]
    BadActivation(String),
    #[error("not differentiable: layer {layer} neuron {neuron} pre-activation {value} is within {BREAKPOINT_TOL} of a breakpoint")]
    NonDifferentiable { layer: usize, neuron: usize, value: f64 },
    #[error("pattern space has {patterns} candidates, cap is {cap}")]
    TooManyPatterns { patterns: u128, cap: u128 },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("neuron {0} has a zero input row, its band is degenerate")]
    DegenerateNormal(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lp(#[from] PolyhedraError),
    #[error(transparent)]
    Arrangement(#[from] ArrangementError),
}

/// Continuous piecewise-linear scalar activation, stored as breakpoints
/// plus a slope per maximal piece; values are pinned down by the value at
/// zero, so continuity holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlActivation {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    value_at_zero: f64,
    /// Activation value at each breakpoint (derived).
    breakpoint_values: Vec<f64>,
}

impl PwlActivation {
    pub fn new(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        value_at_zero: f64,
    ) -> Result<Self, NetworkError> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(NetworkError::BadActivation(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.iter().any(|x| !x.is_finite())
            || slopes.iter().any(|x| !x.is_finite())
            || !value_at_zero.is_finite()
        {
            return Err(NetworkError::BadActivation("non-finite parameter".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NetworkError::BadActivation(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        // Maximal pieces: a breakpoint where the slope does not change is
        // not a breakpoint.
        if slopes.windows(2).any(|w| w[0] == w[1]) {
            return Err(NetworkError::BadActivation(
                "adjacent pieces must have different slopes".into(),
            ));
        }
        let breakpoint_values = breakpoint_values(&breakpoints, &slopes, 0.0, value_at_zero);
        Ok(Self { breakpoints, slopes, value_at_zero, breakpoint_values })
    }

    /// ReLU: max(0, x).
    pub fn relu() -> Self {
        Self::new(vec![0.0], vec![0.0, 1.0], 0.0).expect("valid by construction")
    }

    /// Hard tanh: -1 below -1, identity on [-1, 1], +1 above 1.
    pub fn hard_tanh() -> Self {
        Self::new(vec![-1.0, 1.0], vec![0.0, 1.0, 0.0], 0.0).expect("valid by construction")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// Number of breakpoints (one less than the number of pieces).
    pub fn breakpoint_count(&self) -> usize {
        self.breakpoints.len()
    }

    /// Index of the piece containing `z` (breakpoints belong to the upper
    /// piece; the value is continuous either way).
    pub fn piece_index(&self, z: f64) -> usize {
        self.breakpoints.iter().take_while(|&&b| b <= z).count()
    }

    pub fn slope_at(&self, z: f64) -> f64 {
        self.slopes[self.piece_index(z)]
    }

    /// Some(breakpoint index) if `z` is within `tol` of a breakpoint.
    pub fn near_breakpoint(&self, z: f64, tol: f64) -> Option<usize> {
        self.breakpoints.iter().position(|&b| (z - b).abs() <= tol)
    }

    pub fn eval(&self, z: f64) -> f64 {
        let p = self.piece_index(z);
        let (x0, y0) = self.piece_anchor(p);
        y0 + self.slopes[p] * (z - x0)
    }

    /// A point (x0, phi(x0)) lying on piece `p` (or its closure).
    fn piece_anchor(&self, p: usize) -> (f64, f64) {
        if self.breakpoints.is_empty() {
            (0.0, self.value_at_zero)
        } else if p == 0 {
            (self.breakpoints[0], self.breakpoint_values[0])
        } else {
            (self.breakpoints[p - 1], self.breakpoint_values[p - 1])
        }
    }

    /// Intercept c of piece `p`, so that phi(z) = slope * z + c there.
    pub fn piece_intercept(&self, p: usize) -> f64 {
        let (x0, y0) = self.piece_anchor(p);
        y0 - self.slopes[p] * x0
    }
}

/// Activation values at the breakpoints, obtained by integrating the
/// slopes away from an anchor point.
pub(crate) fn breakpoint_values(
    breakpoints: &[f64],
    slopes: &[f64],
    x0: f64,
    y0: f64,
) -> Vec<f64> {
    let k = breakpoints.len();
    let mut vals = vec![0.0; k];
    if k == 0 {
        return vals;
    }
    let p0 = breakpoints.iter().take_while(|&&b| b <= x0).count();
    // Walk right from the anchor.
    let mut x = x0;
    let mut y = y0;
    for i in p0..k {
        y += slopes[i] * (breakpoints[i] - x);
        x = breakpoints[i];
        vals[i] = y;
    }
    // Walk left from the anchor.
    let mut x = x0;
    let mut y = y0;
    for i in (0..p0).rev() {
        y += slopes[i + 1] * (breakpoints[i] - x);
        x = breakpoints[i];
        vals[i] = y;
    }
    vals
}

/// One affine layer `x -> W x + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vector,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vector) -> Result<Self, NetworkError> {
        if weights.rows() != bias.len() {
            return Err(NetworkError::DimensionMismatch(format!(
                "layer weights are {}x{} but bias has length {}",
                weights.rows(),
                weights.cols(),
                bias.len()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Multi-layer network: the composition of affine layers with the
/// activation applied component-wise after each one.
///
/// Two flags widen the family beyond the textbook form: the activation on
/// the final layer can be skipped, and the raw input can be added back to
/// the output (a residual bypass). Both are needed to express the deep
/// sawtooth construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNetwork {
    layers: Vec<Layer>,
    activation: PwlActivation,
    apply_activation_on_last: bool,
    residual_input_to_output: bool,
}

impl LayeredNetwork {
    pub fn new(
        layers: Vec<Layer>,
        activation: PwlActivation,
        apply_activation_on_last: bool,
        residual_input_to_output: bool,
    ) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::DimensionMismatch("network has no layers".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(NetworkError::DimensionMismatch(format!(
                    "layer output {} feeds layer input {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        let net = Self { layers, activation, apply_activation_on_last, residual_input_to_output };
        if net.residual_input_to_output && net.input_dim() != net.output_dim() {
            return Err(NetworkError::DimensionMismatch(
                "residual bypass needs matching input and output dimensions".into(),
            ));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> &PwlActivation {
        &self.activation
    }

    pub fn apply_activation_on_last(&self) -> bool {
        self.apply_activation_on_last
    }

    pub fn residual_input_to_output(&self) -> bool {
        self.residual_input_to_output
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Whether the activation is applied after layer `idx`.
    pub(crate) fn activated(&self, idx: usize) -> bool {
        idx + 1 < self.layers.len() || self.apply_activation_on_last
    }

    /// Exact forward pass.
    pub fn evaluate(&self, x: &Vector) -> Result<Vector, NetworkError> {
        if x.len() != self.input_dim() {
            return Err(NetworkError::DimensionMismatch(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cur = x.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let pre = layer.weights.matvec(&cur).add(&layer.bias);
            cur = if self.activated(idx) {
                Vector::new(pre.as_slice().iter().map(|&z| self.activation.eval(z)).collect())?
            } else {
                pre
            };
        }
        if self.residual_input_to_output {
            cur = cur.add(x);
        }
        Ok(cur)
    }

    /// Jacobian at `x`: the product of the layer weights and the diagonal
    /// slope matrices along the forward pass. Errors if any pre-activation
    /// sits within [`BREAKPOINT_TOL`] of a breakpoint.
    pub fn jacobian(&self, x: &Vector) -> Result<Matrix, NetworkError> {
        if x.len() != self.input_dim() {
            return Err(NetworkError::DimensionMismatch(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cur = x.clone();
        let mut jac = Matrix::identity(self.input_dim());
        for (idx, layer) in self.layers.iter().enumerate() {
            let pre = layer.weights.matvec(&cur).add(&layer.bias);
            jac = layer.weights.matmul(&jac);
            if self.activated(idx) {
                let mut post = Vec::with_capacity(pre.len());
                for (i, &z) in pre.as_slice().iter().enumerate() {
                    if self.activation.near_breakpoint(z, BREAKPOINT_TOL).is_some() {
                        return Err(NetworkError::NonDifferentiable {
                            layer: idx,
                            neuron: i,
                            value: z,
                        });
                    }
                    let s = self.activation.slope_at(z);
                    for j in 0..jac.cols() {
                        jac.set(i, j, s * jac.get(i, j));
                    }
                    post.push(self.activation.eval(z));
                }
                cur = Vector::new(post)?;
            } else {
                cur = pre;
            }
        }
        if self.residual_input_to_output {
            jac = jac.add(&Matrix::identity(self.input_dim()));
        }
        Ok(jac)
    }
}

/// One-hidden-layer network `f(x) = W phi(V x + u) + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHiddenNetwork {
    w: Matrix,
    v: Matrix,
    u: Vector,
    z: Vector,
    activation: PwlActivation,
}

impl OneHiddenNetwork {
    pub fn new(
        w: Matrix,
        v: Matrix,
        u: Vector,
        z: Vector,
        activation: PwlActivation,
    ) -> Result<Self, NetworkError> {
        let d = w.rows();
        let n = w.cols();
        if v.rows() != n || v.cols() != d || u.len() != n || z.len() != d {
            return Err(NetworkError::DimensionMismatch(format!(
                "W is {d}x{n}, so V must be {n}x{d} (got {}x{}), u length {n} (got {}), z length {d} (got {})",
                v.rows(),
                v.cols(),
                u.len(),
                z.len()
            )));
        }
        Ok(Self { w, v, u, z, activation })
    }

    /// The weight-tied special case `f(x) = W phi(W^T x)`.
    pub fn tied(w: Matrix, activation: PwlActivation) -> Result<Self, NetworkError> {
        let v = w.transpose();
        let n = w.cols();
        let d = w.rows();
        Self::new(w, v, Vector::zeros(n), Vector::zeros(d), activation)
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn u(&self) -> &Vector {
        &self.u
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }

    pub fn activation(&self) -> &PwlActivation {
        &self.activation
    }

    /// Input/output dimension d.
    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    /// Hidden width n.
    pub fn hidden(&self) -> usize {
        self.w.cols()
    }

    pub fn evaluate(&self, x: &Vector) -> Result<Vector, NetworkError> {
        self.to_layered().evaluate(x)
    }

    pub fn jacobian(&self, x: &Vector) -> Result<Matrix, NetworkError> {
        self.to_layered().jacobian(x)
    }

    /// Equivalent two-layer form (activation only after the first layer).
    pub fn to_layered(&self) -> LayeredNetwork {
        LayeredNetwork::new(
            vec![
                Layer::new(self.v.clone(), self.u.clone()).expect("validated dims"),
                Layer::new(self.w.clone(), self.z.clone()).expect("validated dims"),
            ],
            self.activation.clone(),
            false,
            false,
        )
        .expect("validated dims")
    }
}
