//! Exhaustive enumeration of a network's linear regions (cells) by
//! depth-first pattern refinement.
//!
//! A branch carries the affine map of the partial composition and the
//! half-space system accumulated in input space. At each neuron the
//! branch splits over the activation pieces; each split adds the piece's
//! breakpoint inequalities pulled back through the current affine map and
//! survives only if the system still has an interior point. Leaves are
//! cells, emitted in lexicographic pattern order.

use super::{LayeredNetwork, NetworkError};
use crate::linalg::{Matrix, Vector};
use crate::polyhedra::{interior_feasible, HalfSpaceSystem, Sense};

/// Default cap on the number of candidate activation patterns (3^12).
pub const DEFAULT_PATTERN_CAP: u128 = 531_441;

/// Rows with smaller norm than this (relative to the layer scale) are
/// treated as exactly-constant pre-activations instead of constraints.
const ZERO_ROW_TOL: f64 = 1e-14;

/// One linear region of the network: the activation pattern that selects
/// it, its open polyhedron in input space, and the affine map
/// `f(x) = matrix * x + offset` the network realizes there.
#[derive(Debug, Clone)]
pub struct LinearCell {
    /// Piece index per activated layer, per neuron.
    pub pattern: Vec<Vec<usize>>,
    pub polyhedron: HalfSpaceSystem,
    pub matrix: Matrix,
    pub offset: Vector,
    /// Interior point of the cell (max-slack witness).
    pub witness: Vector,
}

/// Enumerate all nonempty cells with the default pattern cap.
pub fn enumerate_cells(net: &LayeredNetwork) -> Result<Vec<LinearCell>, NetworkError> {
    enumerate_cells_with_cap(net, DEFAULT_PATTERN_CAP)
}

/// Enumerate all nonempty cells, refusing upfront if the full pattern
/// space exceeds `cap`.
pub fn enumerate_cells_with_cap(
    net: &LayeredNetwork,
    cap: u128,
) -> Result<Vec<LinearCell>, NetworkError> {
    let d = net.input_dim();
    let pieces = (net.activation().breakpoint_count() + 1) as u128;
    let mut patterns: u128 = 1;
    for (idx, layer) in net.layers().iter().enumerate() {
        if !net.activated(idx) {
            continue;
        }
        for _ in 0..layer.out_dim() {
            patterns = patterns.saturating_mul(pieces);
        }
    }
    if patterns > cap {
        return Err(NetworkError::TooManyPatterns { patterns, cap });
    }

    let mut cells = Vec::new();
    let mut pattern: Vec<Vec<usize>> = Vec::new();
    refine_layer(
        net,
        0,
        &Matrix::identity(d),
        &Vector::zeros(d),
        &HalfSpaceSystem::new(d),
        &mut pattern,
        &mut cells,
    )?;
    Ok(cells)
}

fn refine_layer(
    net: &LayeredNetwork,
    idx: usize,
    cur_a: &Matrix,
    cur_b: &Vector,
    sys: &HalfSpaceSystem,
    pattern: &mut Vec<Vec<usize>>,
    cells: &mut Vec<LinearCell>,
) -> Result<(), NetworkError> {
    if idx == net.depth() {
        let mut matrix = cur_a.clone();
        let offset = cur_b.clone();
        if net.residual_input_to_output() {
            matrix = matrix.add(&Matrix::identity(net.input_dim()));
        }
        // Re-solve for a max-slack witness of the completed system (also
        // covers networks that never added a constraint).
        let res = interior_feasible(sys)?;
        let witness = res
            .witness
            .expect("every kept branch was feasible when its last constraint was added");
        cells.push(LinearCell {
            pattern: pattern.clone(),
            polyhedron: sys.clone(),
            matrix,
            offset,
            witness,
        });
        return Ok(());
    }

    let layer = &net.layers()[idx];
    let pre_a = layer.weights.matmul(cur_a);
    let pre_b = layer.weights.matvec(cur_b).add(&layer.bias);

    if !net.activated(idx) {
        // Final affine layer: no new pattern entries or constraints.
        return refine_layer(net, idx + 1, &pre_a, &pre_b, sys, pattern, cells);
    }

    let mut pieces: Vec<usize> = Vec::with_capacity(layer.out_dim());
    refine_neuron(net, idx, 0, &pre_a, &pre_b, sys, &mut pieces, pattern, cells)
}

#[allow(clippy::too_many_arguments)]
fn refine_neuron(
    net: &LayeredNetwork,
    idx: usize,
    neuron: usize,
    pre_a: &Matrix,
    pre_b: &Vector,
    sys: &HalfSpaceSystem,
    pieces: &mut Vec<usize>,
    pattern: &mut Vec<Vec<usize>>,
    cells: &mut Vec<LinearCell>,
) -> Result<(), NetworkError> {
    let layer = &net.layers()[idx];
    let act = net.activation();
    if neuron == layer.out_dim() {
        // All neurons of this layer assigned: compose the activation's
        // per-piece affine maps and descend.
        let mut post_a = Matrix::zeros(layer.out_dim(), net.input_dim());
        let mut post_b = Vec::with_capacity(layer.out_dim());
        for (i, &p) in pieces.iter().enumerate() {
            let s = act.slopes()[p];
            for j in 0..net.input_dim() {
                post_a.set(i, j, s * pre_a.get(i, j));
            }
            post_b.push(s * pre_b[i] + act.piece_intercept(p));
        }
        let post_b = Vector::new(post_b)?;
        pattern.push(pieces.clone());
        let out = refine_layer(net, idx + 1, &post_a, &post_b, sys, pattern, cells);
        pattern.pop();
        return out;
    }

    let row = pre_a.row(neuron);
    let row_norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    let q = pre_b[neuron];
    let scale = 1.0 + pre_a.max_abs() + q.abs();

    if row_norm <= ZERO_ROW_TOL * scale {
        // Constant pre-activation: the neuron sits in exactly one piece
        // everywhere on the branch, and the slope multiplies a zero row,
        // so the piece choice at an exact breakpoint is immaterial.
        let p = act.piece_index(q);
        pieces.push(p);
        let out = refine_neuron(net, idx, neuron + 1, pre_a, pre_b, sys, pieces, pattern, cells);
        pieces.pop();
        return out;
    }

    let breaks = act.breakpoints();
    for p in 0..=breaks.len() {
        let mut branch_sys = sys.clone();
        if p > 0 {
            // row . x + q > breaks[p-1]
            let normal = Vector::new(row.iter().map(|x| -x).collect())?;
            branch_sys.push(normal, q - breaks[p - 1], Sense::StrictLess)?;
        }
        if p < breaks.len() {
            // row . x + q < breaks[p]
            let normal = Vector::new(row.to_vec())?;
            branch_sys.push(normal, breaks[p] - q, Sense::StrictLess)?;
        }
        if interior_feasible(&branch_sys)?.feasible {
            pieces.push(p);
            refine_neuron(net, idx, neuron + 1, pre_a, pre_b, &branch_sys, pieces, pattern, cells)?;
            pieces.pop();
        }
    }
    Ok(())
}

/// Number of maximal segments of `x1 + t (x2 - x1)`, `t` in [0, 1], on
/// which the activation pattern is constant.
///
/// Crossing parameters are collected layer by layer along the forward
/// refinement of the segment; crossings closer than 1e-10 are merged.
pub fn segment_region_count(
    net: &LayeredNetwork,
    x1: &Vector,
    x2: &Vector,
) -> Result<usize, NetworkError> {
    if x1.len() != net.input_dim() || x2.len() != net.input_dim() {
        return Err(NetworkError::DimensionMismatch(
            "segment endpoints must match the input dimension".into(),
        ));
    }
    if x1.sub(x2).norm() == 0.0 {
        return Err(NetworkError::Contract("segment endpoints must differ".into()));
    }
    let mut crossings: Vec<f64> = Vec::new();
    let lin = x2.sub(x1);
    collect_crossings(net, 0, 0.0, 1.0, x1, &lin, &mut crossings)?;
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut count = 1usize;
    let mut last: Option<f64> = None;
    for t in crossings {
        if last.is_none_or(|prev| t - prev > 1e-10) {
            count += 1;
            last = Some(t);
        }
    }
    Ok(count)
}

/// `cst + t * lin` is the input of layer `idx` along the segment, valid
/// for t in (t_lo, t_hi); record where any pre-activation of this or a
/// deeper layer crosses a breakpoint.
fn collect_crossings(
    net: &LayeredNetwork,
    idx: usize,
    t_lo: f64,
    t_hi: f64,
    cst: &Vector,
    lin: &Vector,
    crossings: &mut Vec<f64>,
) -> Result<(), NetworkError> {
    if idx == net.depth() {
        return Ok(());
    }
    let layer = &net.layers()[idx];
    let pre_cst = layer.weights.matvec(cst).add(&layer.bias);
    let pre_lin = layer.weights.matvec(lin);
    if !net.activated(idx) {
        return Ok(());
    }
    let act = net.activation();

    let mut ts: Vec<f64> = Vec::new();
    for i in 0..layer.out_dim() {
        let slope = pre_lin[i];
        if slope.abs() <= 1e-14 * (1.0 + pre_cst[i].abs()) {
            continue;
        }
        for &b in act.breakpoints() {
            let t = (b - pre_cst[i]) / slope;
            if t > t_lo + 1e-12 && t < t_hi - 1e-12 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut bounds = vec![t_lo];
    bounds.extend(ts.iter().cloned());
    bounds.push(t_hi);
    for w in bounds.windows(2) {
        let (s_lo, s_hi) = (w[0], w[1]);
        if s_hi - s_lo <= 1e-13 {
            continue;
        }
        let t_mid = 0.5 * (s_lo + s_hi);
        let mut post_cst = Vec::with_capacity(layer.out_dim());
        let mut post_lin = Vec::with_capacity(layer.out_dim());
        for i in 0..layer.out_dim() {
            let p = act.piece_index(pre_cst[i] + t_mid * pre_lin[i]);
            let s = act.slopes()[p];
            post_cst.push(s * pre_cst[i] + act.piece_intercept(p));
            post_lin.push(s * pre_lin[i]);
        }
        collect_crossings(
            net,
            idx + 1,
            s_lo,
            s_hi,
            &Vector::new(post_cst)?,
            &Vector::new(post_lin)?,
            crossings,
        )?;
    }
    crossings.extend(ts);
    Ok(())
}
