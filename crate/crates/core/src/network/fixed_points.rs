//! Exact fixed-point enumeration: one linear solve per cell, plus a 1-d
//! specialization for scalar piecewise-linear maps.
//!
//! On a cell with map `f(x) = A x + b`, fixed points solve
//! `(I - A) x = b`. A unique solution is kept if it lies in the cell
//! (interior points get a stability classification, boundary points are
//! left undetermined since the map need not be differentiable there). A
//! singular-but-consistent system means the cell's fixed set is an affine
//! continuum; it is reported when it meets the cell's interior.

use super::cells::{enumerate_cells_with_cap, LinearCell, DEFAULT_PATTERN_CAP};
use super::{LayeredNetwork, NetworkError};
use crate::linalg::{solve_linear, spectral_norm, LinearSolve, Matrix, Vector};
use crate::polyhedra::{contains, interior_feasible, HalfSpaceSystem, Membership, Sense};

/// Guard band around spectral norm 1: strictly inside is stable/unstable,
/// the band itself is marginal.
pub const STABILITY_GUARD: f64 = 1e-9;

/// Isolated fixed points closer than this across adjacent cell closures
/// are merged into one record.
pub const DEDUP_RADIUS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Isolated,
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
    /// On a cell boundary, where the map need not be differentiable.
    BoundaryUndetermined,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::Marginal => "marginal",
            Classification::BoundaryUndetermined => "boundary-undetermined",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointRecord {
    pub kind: FixedPointKind,
    /// The fixed point itself, or a point of the continuum.
    pub location: Vector,
    /// Directions spanning the continuum (empty for isolated points).
    pub continuum_basis: Vec<Vector>,
    /// Activation pattern of the cell the record came from.
    pub pattern: Vec<Vec<usize>>,
    /// Spectral norm of the cell's Jacobian; absent on cell boundaries.
    pub jacobian_norm: Option<f64>,
    pub classification: Classification,
}

impl FixedPointRecord {
    pub fn is_stable(&self) -> bool {
        self.classification == Classification::Stable
    }
}

fn classify(norm: f64) -> Classification {
    if norm < 1.0 - STABILITY_GUARD {
        Classification::Stable
    } else if norm <= 1.0 + STABILITY_GUARD {
        Classification::Marginal
    } else {
        Classification::Unstable
    }
}

/// Every fixed point of the network, by exhaustive per-cell solves.
pub fn fixed_points(net: &LayeredNetwork) -> Result<Vec<FixedPointRecord>, NetworkError> {
    fixed_points_with_cap(net, DEFAULT_PATTERN_CAP)
}

pub fn fixed_points_with_cap(
    net: &LayeredNetwork,
    cap: u128,
) -> Result<Vec<FixedPointRecord>, NetworkError> {
    if net.input_dim() != net.output_dim() {
        return Err(NetworkError::DimensionMismatch(
            "fixed points need matching input and output dimensions".into(),
        ));
    }
    let cells = enumerate_cells_with_cap(net, cap)?;
    let mut records: Vec<FixedPointRecord> = Vec::new();
    for cell in &cells {
        if let Some(rec) = cell_fixed_point(cell)? {
            push_deduplicated(&mut records, rec);
        }
    }
    Ok(records)
}

fn cell_fixed_point(cell: &LinearCell) -> Result<Option<FixedPointRecord>, NetworkError> {
    let d = cell.matrix.rows();
    let residual_matrix = Matrix::identity(d).sub(&cell.matrix);
    match solve_linear(&residual_matrix, &cell.offset)? {
        LinearSolve::Unique(x) => {
            let rec = match contains(&cell.polyhedron, &x, 1e-9) {
                Membership::Interior => {
                    let norm = spectral_norm(&cell.matrix);
                    FixedPointRecord {
                        kind: FixedPointKind::Isolated,
                        location: x,
                        continuum_basis: vec![],
                        pattern: cell.pattern.clone(),
                        jacobian_norm: Some(norm),
                        classification: classify(norm),
                    }
                }
                Membership::Boundary => FixedPointRecord {
                    kind: FixedPointKind::Isolated,
                    location: x,
                    continuum_basis: vec![],
                    pattern: cell.pattern.clone(),
                    jacobian_norm: None,
                    classification: Classification::BoundaryUndetermined,
                },
                Membership::Outside => return Ok(None),
            };
            Ok(Some(rec))
        }
        LinearSolve::Singular { consistent: false, .. } => Ok(None),
        LinearSolve::Singular { consistent: true, least_squares, nullspace } => {
            continuum_in_cell(cell, least_squares, nullspace)
        }
    }
}

/// Intersect the affine fixed set `point + span(basis)` with the open
/// cell; report a continuum record if the intersection has interior.
fn continuum_in_cell(
    cell: &LinearCell,
    point: Vector,
    basis: Vec<Vector>,
) -> Result<Option<FixedPointRecord>, NetworkError> {
    let r = basis.len();
    let mut reduced = HalfSpaceSystem::new(r);
    for c in cell.polyhedron.constraints() {
        let coeffs: Vec<f64> = basis.iter().map(|n| c.normal.dot(n)).collect();
        let coeff_norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rest = c.bound - c.normal.dot(&point);
        let scale = c.normal.norm();
        if coeff_norm <= 1e-10 * scale {
            // Constraint parallel to the fixed set: either always strictly
            // satisfied or the set misses the open cell.
            if rest / scale <= 1e-9 {
                return Ok(None);
            }
            continue;
        }
        reduced.push(Vector::new(coeffs)?, rest, Sense::StrictLess)?;
    }
    let res = interior_feasible(&reduced)?;
    let Some(y) = res.witness else { return Ok(None) };
    let mut loc = point;
    for (coeff, dir) in y.as_slice().iter().zip(&basis) {
        loc = loc.add(&dir.scale(*coeff));
    }
    let norm = spectral_norm(&cell.matrix);
    Ok(Some(FixedPointRecord {
        kind: FixedPointKind::Continuum,
        location: loc,
        continuum_basis: basis,
        pattern: cell.pattern.clone(),
        jacobian_norm: Some(norm),
        classification: classify(norm),
    }))
}

/// Merge isolated records that name the same point from adjacent cell
/// closures, preferring the interior-classified record when there is one.
fn push_deduplicated(records: &mut Vec<FixedPointRecord>, rec: FixedPointRecord) {
    if rec.kind == FixedPointKind::Isolated {
        for kept in records.iter_mut() {
            if kept.kind != FixedPointKind::Isolated {
                continue;
            }
            if kept.location.distance(&rec.location) < DEDUP_RADIUS {
                let kept_boundary = kept.classification == Classification::BoundaryUndetermined;
                let rec_interior = rec.classification != Classification::BoundaryUndetermined;
                if kept_boundary && rec_interior {
                    *kept = rec;
                }
                return;
            }
        }
    }
    records.push(rec);
}

/// Scalar piecewise-linear function on an interval (possibly the whole
/// line): interior breakpoints, one slope per piece, and an anchor value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPwl {
    domain: (f64, f64),
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    anchor_x: f64,
    anchor_y: f64,
    breakpoint_values: Vec<f64>,
}

impl ScalarPwl {
    pub fn new(
        domain: (f64, f64),
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        anchor: (f64, f64),
    ) -> Result<Self, NetworkError> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(NetworkError::BadActivation(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if domain.0.partial_cmp(&domain.1) != Some(std::cmp::Ordering::Less) {
            return Err(NetworkError::BadActivation("empty domain".into()));
        }
        if breakpoints.iter().any(|x| !x.is_finite())
            || slopes.iter().any(|x| !x.is_finite())
            || !anchor.0.is_finite()
            || !anchor.1.is_finite()
        {
            return Err(NetworkError::BadActivation("non-finite parameter".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NetworkError::BadActivation(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().any(|&b| b <= domain.0 || b >= domain.1) {
            return Err(NetworkError::BadActivation(
                "breakpoints must lie strictly inside the domain".into(),
            ));
        }
        let breakpoint_values =
            super::breakpoint_values(&breakpoints, &slopes, anchor.0, anchor.1);
        Ok(Self {
            domain,
            breakpoints,
            slopes,
            anchor_x: anchor.0,
            anchor_y: anchor.1,
            breakpoint_values,
        })
    }

    /// Function on the whole real line.
    pub fn full_line(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        anchor: (f64, f64),
    ) -> Result<Self, NetworkError> {
        Self::new((f64::NEG_INFINITY, f64::INFINITY), breakpoints, slopes, anchor)
    }

    /// Function on [0, 1] anchored at its left endpoint value.
    pub fn on_unit_interval(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        left_value: f64,
    ) -> Result<Self, NetworkError> {
        Self::new((0.0, 1.0), breakpoints, slopes, (0.0, left_value))
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Value at the lower domain endpoint (for finite domains).
    pub fn left_value(&self) -> f64 {
        self.eval(self.domain.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = self.piece_index(x);
        let (x0, y0) = self.piece_anchor(p);
        y0 + self.slopes[p] * (x - x0)
    }

    fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.iter().take_while(|&&b| b <= x).count()
    }

    fn piece_anchor(&self, p: usize) -> (f64, f64) {
        if self.breakpoints.is_empty() {
            (self.anchor_x, self.anchor_y)
        } else if p == 0 {
            (self.breakpoints[0], self.breakpoint_values[0])
        } else {
            (self.breakpoints[p - 1], self.breakpoint_values[p - 1])
        }
    }

    fn piece_intercept(&self, p: usize) -> f64 {
        let (x0, y0) = self.piece_anchor(p);
        y0 - self.slopes[p] * x0
    }

    /// Closed bounds of piece `p` clipped to the domain.
    fn piece_bounds(&self, p: usize) -> (f64, f64) {
        let lo = if p == 0 { self.domain.0 } else { self.breakpoints[p - 1] };
        let hi = if p == self.breakpoints.len() { self.domain.1 } else { self.breakpoints[p] };
        (lo, hi)
    }
}

const SLOPE_ONE_TOL: f64 = 1e-12;
const ROOT_MERGE: f64 = 1e-9;

/// All fixed points of a scalar piecewise-linear map: per piece solve
/// `x = s x + c`, classify by |s|, and give fixed points that land exactly
/// on a breakpoint the boundary treatment (stable only if both one-sided
/// slopes have magnitude below 1).
pub fn fixed_points_1d(pwl: &ScalarPwl) -> Vec<FixedPointRecord> {
    let mut records: Vec<FixedPointRecord> = Vec::new();
    let mut candidates: Vec<(usize, f64)> = Vec::new();

    for p in 0..pwl.slopes.len() {
        let (lo, hi) = pwl.piece_bounds(p);
        let s = pwl.slopes[p];
        let c = pwl.piece_intercept(p);
        if (s - 1.0).abs() <= SLOPE_ONE_TOL {
            if c.abs() <= SLOPE_ONE_TOL {
                // Identity piece: a continuum of fixed points.
                let loc = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else if lo.is_finite() {
                    lo + 1.0
                } else if hi.is_finite() {
                    hi - 1.0
                } else {
                    0.0
                };
                records.push(FixedPointRecord {
                    kind: FixedPointKind::Continuum,
                    location: Vector::new(vec![loc]).expect("finite"),
                    continuum_basis: vec![Vector::new(vec![1.0]).expect("finite")],
                    pattern: vec![vec![p]],
                    jacobian_norm: Some(1.0),
                    classification: Classification::Marginal,
                });
            }
            continue;
        }
        let root = c / (1.0 - s);
        let tol = ROOT_MERGE * (1.0 + root.abs());
        if root >= lo - tol && root <= hi + tol {
            candidates.push((p, root));
        }
    }

    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut i = 0;
    while i < candidates.len() {
        let (piece, x) = candidates[i];
        // Merge duplicates found from both sides of a shared breakpoint.
        let mut j = i + 1;
        while j < candidates.len() && candidates[j].1 - x <= ROOT_MERGE * (1.0 + x.abs()) {
            j += 1;
        }
        let at_breakpoint = pwl
            .breakpoints
            .iter()
            .position(|&b| (x - b).abs() <= ROOT_MERGE * (1.0 + b.abs()));
        let rec = match at_breakpoint {
            Some(bi) => {
                let (s_left, s_right) = (pwl.slopes[bi], pwl.slopes[bi + 1]);
                if s_left.abs() < 1.0 - STABILITY_GUARD && s_right.abs() < 1.0 - STABILITY_GUARD {
                    FixedPointRecord {
                        kind: FixedPointKind::Isolated,
                        location: Vector::new(vec![x]).expect("finite"),
                        continuum_basis: vec![],
                        pattern: vec![vec![bi]],
                        jacobian_norm: Some(s_left.abs().max(s_right.abs())),
                        classification: Classification::Stable,
                    }
                } else {
                    FixedPointRecord {
                        kind: FixedPointKind::Isolated,
                        location: Vector::new(vec![x]).expect("finite"),
                        continuum_basis: vec![],
                        pattern: vec![vec![bi]],
                        jacobian_norm: None,
                        classification: Classification::BoundaryUndetermined,
                    }
                }
            }
            None => {
                let s = pwl.slopes[piece].abs();
                FixedPointRecord {
                    kind: FixedPointKind::Isolated,
                    location: Vector::new(vec![x]).expect("finite"),
                    continuum_basis: vec![],
                    pattern: vec![vec![piece]],
                    jacobian_norm: Some(s),
                    classification: classify(s),
                }
            }
        };
        records.push(rec);
        i = j;
    }

    records.sort_by(|a, b| a.location[0].partial_cmp(&b.location[0]).unwrap());
    records
}
