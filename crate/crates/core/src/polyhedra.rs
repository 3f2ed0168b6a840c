//! Half-space systems with strict inequalities and an interior-feasibility
//! oracle.
//!
//! Regions and cells are open sets, so "is this sign pattern realized"
//! means "does the open polyhedron have an interior point". That is
//! decided by a max-slack linear program: after scaling every normal to
//! unit length, maximize `t` subject to `a_i . x + t <= b_i` and `t <= 1`.
//! The slack cap keeps the LP bounded even for unbounded regions, so no
//! artificial bounding box is ever introduced. The system is declared
//! feasible iff the optimum exceeds 1e-9.
//!
//! Pivoting is deterministic: Dantzig's rule first, with a switch to
//! Bland's rule if the iteration count suggests cycling, and an explicit
//! `Indeterminate` error (never a guess) if the cap is exhausted.

use crate::linalg::Vector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyhedraError {
    #[error("constraint normal must be nonzero")]
    ZeroNormal,
    #[error("constraint has dimension {got}, system has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feasibility LP unresolved after {0} iterations")]
    Indeterminate(usize),
}

/// Inequality sense of a constraint `a.x (sense) b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    StrictLess,
    LessOrEqual,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub normal: Vector,
    pub bound: f64,
    pub sense: Sense,
}

/// Finite list of half-space constraints in a fixed dimension.
#[derive(Debug, Clone)]
pub struct HalfSpaceSystem {
    dim: usize,
    constraints: Vec<Constraint>,
}

impl HalfSpaceSystem {
    pub fn new(dim: usize) -> Self {
        Self { dim, constraints: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Add the constraint `normal . x (sense) bound`.
    pub fn push(
        &mut self,
        normal: Vector,
        bound: f64,
        sense: Sense,
    ) -> Result<(), PolyhedraError> {
        if normal.len() != self.dim {
            return Err(PolyhedraError::DimensionMismatch {
                expected: self.dim,
                got: normal.len(),
            });
        }
        if normal.norm() == 0.0 {
            return Err(PolyhedraError::ZeroNormal);
        }
        self.constraints.push(Constraint { normal, bound, sense });
        Ok(())
    }

    /// Unit-scaled margins `b_i - a_i . x` (positive inside).
    fn margins(&self, x: &Vector) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                let scale = c.normal.norm();
                (c.bound - c.normal.dot(x)) / scale
            })
            .collect()
    }
}

/// Location of a point relative to a half-space system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

/// Membership test with unit-scaled margins: interior if every margin
/// exceeds `tol`, outside if some margin is below `-tol`, boundary
/// otherwise.
pub fn contains(sys: &HalfSpaceSystem, x: &Vector, tol: f64) -> Membership {
    assert!(tol > 0.0, "membership tolerance must be positive");
    assert_eq!(sys.dim(), x.len(), "point dimension mismatch");
    let mut min_margin = f64::INFINITY;
    for m in sys.margins(x) {
        min_margin = min_margin.min(m);
    }
    if sys.is_empty() || min_margin > tol {
        Membership::Interior
    } else if min_margin < -tol {
        Membership::Outside
    } else {
        Membership::Boundary
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// Max-slack point, present iff feasible.
    pub witness: Option<Vector>,
    /// Optimal slack `t*`; at the witness every unit-scaled margin is at
    /// least this large (up to LP arithmetic error).
    pub slack: f64,
}

const FEASIBLE_SLACK: f64 = 1e-9;

/// Decide whether the open polyhedron has an interior point, via the
/// max-slack LP described in the module docs.
pub fn interior_feasible(sys: &HalfSpaceSystem) -> Result<FeasibilityResult, PolyhedraError> {
    let d = sys.dim();
    if sys.is_empty() {
        return Ok(FeasibilityResult {
            feasible: true,
            witness: Some(Vector::zeros(d)),
            slack: 1.0,
        });
    }

    // Unit-scale the rows.
    let m = sys.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    for c in sys.constraints() {
        let scale = c.normal.norm();
        rows.push(c.normal.as_slice().iter().map(|a| a / scale).collect());
        rhs.push(c.bound / scale);
    }

    // Shift t = tau + t_low with t_low = min(rhs, 1) so the slack basis is
    // feasible and tau >= 0 costs nothing (t = t_low is always feasible).
    let t_low = rhs.iter().cloned().fold(1.0_f64, f64::min);

    // Columns: x+ (d), x- (d), tau. Rows: m constraints plus the tau cap.
    let n_struct = 2 * d + 1;
    let n_rows = m + 1;
    let n_cols = n_struct + n_rows; // plus slack per row; rhs kept separately
    let mut tab = vec![vec![0.0; n_cols + 1]; n_rows + 1];
    for i in 0..m {
        for j in 0..d {
            tab[i][j] = rows[i][j];
            tab[i][d + j] = -rows[i][j];
        }
        tab[i][2 * d] = 1.0;
        tab[i][n_struct + i] = 1.0;
        tab[i][n_cols] = rhs[i] - t_low;
    }
    tab[m][2 * d] = 1.0;
    tab[m][n_struct + m] = 1.0;
    tab[m][n_cols] = 1.0 - t_low;
    // Objective row: maximize tau.
    tab[n_rows][2 * d] = 1.0;

    let mut basis: Vec<usize> = (0..n_rows).map(|i| n_struct + i).collect();

    const ENTER_EPS: f64 = 1e-10;
    const PIVOT_EPS: f64 = 1e-11;
    let cap = 10 * (m + d) * (m + d) + 50;

    let mut iterations = 0usize;
    loop {
        if iterations > cap {
            return Err(PolyhedraError::Indeterminate(iterations));
        }
        let blands = iterations > cap / 2;

        // Entering column.
        let mut enter: Option<usize> = None;
        let mut best = ENTER_EPS;
        for (j, &rc) in tab[n_rows].iter().enumerate().take(n_cols) {
            if rc > ENTER_EPS {
                if blands {
                    enter = Some(j);
                    break;
                }
                if rc > best {
                    best = rc;
                    enter = Some(j);
                }
            }
        }
        let Some(enter) = enter else { break };

        // Ratio test; ties broken by smallest basic variable index.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (i, row) in tab.iter().enumerate().take(n_rows) {
            let a = row[enter];
            if a > PIVOT_EPS {
                let ratio = row[n_cols] / a;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.is_none_or(|l| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        // A bounded LP never lacks a leaving row; reaching this means the
        // arithmetic has broken down.
        let Some(leave) = leave else {
            return Err(PolyhedraError::Indeterminate(iterations));
        };

        // Pivot.
        let piv = tab[leave][enter];
        for v in tab[leave].iter_mut() {
            *v /= piv;
        }
        let pivot_row = tab[leave].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i == leave {
                continue;
            }
            let factor = row[enter];
            if factor == 0.0 {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
        }
        basis[leave] = enter;
        iterations += 1;
    }

    // Read the solution off the basis.
    let mut values = vec![0.0; n_cols];
    for (i, &b) in basis.iter().enumerate() {
        values[b] = tab[i][n_cols];
    }
    let tau = values[2 * d];
    let slack = tau + t_low;
    if slack > FEASIBLE_SLACK {
        let x = Vector::new((0..d).map(|j| values[j] - values[d + j]).collect())
            .map_err(|_| PolyhedraError::Indeterminate(iterations))?;
        Ok(FeasibilityResult { feasible: true, witness: Some(x), slack })
    } else {
        Ok(FeasibilityResult { feasible: false, witness: None, slack })
    }
}
