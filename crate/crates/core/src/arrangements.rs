//! Arrangements of parallel pencils: groups of parallel, pairwise
//! distinct hyperplanes sharing one normal, with hyperplanes from distinct
//! pencils in general position.
//!
//! Regions are labeled by per-pencil interval indices rather than raw
//! per-hyperplane signs: parallelism forces the signs within a pencil to
//! be monotone, so an index in `0..=k` per pencil is exactly the set of
//! realizable sign vectors. This shrinks the candidate space from
//! `2^(n*k)` to `(k+1)^n` without losing any region.

use crate::combinatorics::CountValue;
use crate::linalg::{rank, Matrix, Vector};
use crate::polyhedra::{interior_feasible, HalfSpaceSystem, PolyhedraError, Sense};
use crate::rng::seeded_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Total hyperplane budget for exhaustive region enumeration.
pub const ENUMERATION_CAP: usize = 24;

#[derive(Debug, Error)]
pub enum ArrangementError {
    #[error("pencil normal must be nonzero and finite")]
    BadNormal,
    #[error("pencil offsets must be finite and strictly increasing")]
    BadOffsets,
    #[error("pencil normal has dimension {got}, arrangement has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("arrangement has {got} hyperplanes, enumeration cap is {cap}")]
    TooLarge { got: usize, cap: usize },
    #[error("operation requires exactly two offsets per pencil, pencil {0} has {1}")]
    NotTwoOffsets(usize, usize),
    #[error("no arrangement in general position found after {0} attempts")]
    SamplingFailed(usize),
    #[error(transparent)]
    Lp(#[from] PolyhedraError),
}

/// A pencil of parallel hyperplanes `normal . x = offset`, one per offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPencil {
    normal: Vector,
    offsets: Vec<f64>,
}

impl ParallelPencil {
    /// Degenerate inputs (zero normal, non-increasing offsets) are
    /// rejected here, not silently fixed.
    pub fn new(normal: Vector, offsets: Vec<f64>) -> Result<Self, ArrangementError> {
        if normal.norm() == 0.0 {
            return Err(ArrangementError::BadNormal);
        }
        if offsets.is_empty()
            || offsets.iter().any(|x| !x.is_finite())
            || offsets.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ArrangementError::BadOffsets);
        }
        Ok(Self { normal, offsets })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Number of hyperplanes in the pencil.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    dim: usize,
    pencils: Vec<ParallelPencil>,
}

impl Arrangement {
    pub fn new(dim: usize, pencils: Vec<ParallelPencil>) -> Result<Self, ArrangementError> {
        for p in &pencils {
            if p.normal.len() != dim {
                return Err(ArrangementError::DimensionMismatch {
                    expected: dim,
                    got: p.normal.len(),
                });
            }
        }
        Ok(Self { dim, pencils })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pencils(&self) -> &[ParallelPencil] {
        &self.pencils
    }

    pub fn hyperplane_count(&self) -> usize {
        self.pencils.iter().map(|p| p.len()).sum()
    }
}

/// Side of a single hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Below,
    Above,
}

/// Canonical region label: one interval index per pencil, `0..=k_l`.
///
/// Index `m` means the region lies above the first `m` offsets of the
/// pencil and below the rest, which is the monotone sign structure
/// parallelism forces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SignVector {
    intervals: Vec<usize>,
}

impl SignVector {
    pub fn intervals(&self) -> &[usize] {
        &self.intervals
    }

    /// Sign with respect to hyperplane `offset_idx` of pencil `pencil`.
    pub fn sign(&self, pencil: usize, offset_idx: usize) -> Sign {
        if self.intervals[pencil] > offset_idx {
            Sign::Above
        } else {
            Sign::Below
        }
    }
}

/// A nonempty open region together with an interior point.
#[derive(Debug, Clone)]
pub struct Region {
    pub sign: SignVector,
    pub witness: Vector,
}

/// The open half-space system selecting the region labeled by `sign`.
pub fn region_system(arr: &Arrangement, sign: &SignVector) -> HalfSpaceSystem {
    let mut sys = HalfSpaceSystem::new(arr.dim());
    for (pencil, &m) in arr.pencils().iter().zip(sign.intervals()) {
        if m > 0 {
            // normal . x > offsets[m-1]
            sys.push(pencil.normal.scale(-1.0), -pencil.offsets[m - 1], Sense::StrictLess)
                .expect("pencil normals are validated nonzero");
        }
        if m < pencil.len() {
            sys.push(pencil.normal.clone(), pencil.offsets[m], Sense::StrictLess)
                .expect("pencil normals are validated nonzero");
        }
    }
    sys
}

/// Check general position modulo parallel hyperplanes:
///
/// (a) each pencil's offsets are strictly increasing (parallel, not equal);
/// (b) every r <= dim normals from distinct pencils have rank r;
/// (c) every dim+1 hyperplanes from dim+1 distinct pencils have empty
///     intersection.
pub fn is_general_position(arr: &Arrangement, tol: f64) -> bool {
    assert!(tol > 0.0, "tolerance must be positive");
    let d = arr.dim();
    let n = arr.pencils().len();

    for p in arr.pencils() {
        if p.offsets.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
    }

    // (b): rank of every normal subset of size r <= d.
    for r in 2..=n.min(d) {
        for subset in combinations(n, r) {
            let rows: Vec<Vec<f64>> = subset
                .iter()
                .map(|&l| arr.pencils()[l].normal.as_slice().to_vec())
                .collect();
            let mat = Matrix::from_rows(&rows).expect("validated normals");
            if rank(&mat, tol) < r {
                return false;
            }
        }
    }

    // (c): no d+1 hyperplanes from distinct pencils meet.
    if n > d {
        for subset in combinations(n, d + 1) {
            let rows: Vec<Vec<f64>> = subset
                .iter()
                .map(|&l| arr.pencils()[l].normal.as_slice().to_vec())
                .collect();
            let mut offset_choice = vec![0usize; d + 1];
            loop {
                // Consistency of the (d+1) x d affine system: the stacked
                // [normal | offset] matrix must have rank d+1.
                let aug: Vec<Vec<f64>> = subset
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| {
                        let mut row = rows[i].clone();
                        row.push(arr.pencils()[l].offsets[offset_choice[i]]);
                        row
                    })
                    .collect();
                let aug = Matrix::from_rows(&aug).expect("validated normals");
                if rank(&aug, tol) <= d {
                    return false;
                }
                // Next offset combination.
                let mut carry = true;
                for (i, &l) in subset.iter().enumerate() {
                    if !carry {
                        break;
                    }
                    offset_choice[i] += 1;
                    if offset_choice[i] == arr.pencils()[l].len() {
                        offset_choice[i] = 0;
                    } else {
                        carry = false;
                    }
                }
                if carry {
                    break;
                }
            }
        }
    }

    true
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    go(0, n, r, &mut cur, &mut out);
    out
}

/// Enumerate every nonempty open region by testing all `(k_l + 1)^n`
/// interval-index tuples for interior feasibility. Output is sorted
/// lexicographically by the tuple (the generation order).
pub fn enumerate_regions(arr: &Arrangement) -> Result<Vec<Region>, ArrangementError> {
    let total = arr.hyperplane_count();
    if total > ENUMERATION_CAP {
        return Err(ArrangementError::TooLarge { got: total, cap: ENUMERATION_CAP });
    }
    let n = arr.pencils().len();
    let mut intervals = vec![0usize; n];
    let mut out = Vec::new();
    loop {
        let sign = SignVector { intervals: intervals.clone() };
        let sys = region_system(arr, &sign);
        let res = interior_feasible(&sys)?;
        if res.feasible {
            out.push(Region {
                sign,
                witness: res.witness.expect("feasible result carries a witness"),
            });
        }
        // Next tuple in lexicographic order (last pencil fastest would be
        // colex; increment from the end so the FIRST index is most
        // significant).
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            intervals[i] += 1;
            if intervals[i] <= arr.pencils()[i].len() {
                break;
            }
            intervals[i] = 0;
        }
    }
}

/// Enumerate the outer regions of a two-offset arrangement: regions whose
/// interval index is 0 (below both hyperplanes) or 2 (above both) in every
/// pencil, never the middle band.
pub fn enumerate_outer_regions(arr: &Arrangement) -> Result<Vec<Region>, ArrangementError> {
    for (i, p) in arr.pencils().iter().enumerate() {
        if p.len() != 2 {
            return Err(ArrangementError::NotTwoOffsets(i, p.len()));
        }
    }
    Ok(enumerate_regions(arr)?
        .into_iter()
        .filter(|r| r.sign.intervals().iter().all(|&m| m != 1))
        .collect())
}

/// Exact region count an arrangement should have if it is in general
/// position modulo parallelism, from the pencil sizes alone.
pub fn expected_region_count(arr: &Arrangement) -> CountValue {
    let ks: Vec<u64> = arr.pencils().iter().map(|p| p.len() as u64).collect();
    crate::combinatorics::parallel_regions_count_mixed(&ks, arr.dim() as u64)
}

/// Sample an arrangement of `n` pencils with `k` offsets each: normals
/// uniform on the sphere, offsets sorted uniform(-1, 1) samples, resampled
/// (up to 100 attempts) until general position holds at tolerance 1e-8.
/// Deterministic in `seed`.
pub fn random_arrangement(
    dim: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Arrangement, ArrangementError> {
    assert!(dim >= 1 && n >= 1 && k >= 1);
    let mut rng = seeded_rng(seed);
    const ATTEMPTS: usize = 100;
    for _ in 0..ATTEMPTS {
        let mut pencils = Vec::with_capacity(n);
        let mut ok = true;
        for _ in 0..n {
            let mut raw: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                ok = false;
                break;
            }
            for x in raw.iter_mut() {
                *x /= norm;
            }
            let mut offsets: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
            match ParallelPencil::new(Vector::new(raw).expect("finite normal"), offsets) {
                Ok(p) => pencils.push(p),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let arr = Arrangement::new(dim, pencils)?;
        if is_general_position(&arr, 1e-8) {
            return Ok(arr);
        }
    }
    Err(ArrangementError::SamplingFailed(ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::parallel_regions_count;
    use crate::polyhedra::{contains, Membership};
    use num_bigint::BigUint;

    fn pencil(normal: Vec<f64>, offsets: Vec<f64>) -> ParallelPencil {
        ParallelPencil::new(Vector::new(normal).unwrap(), offsets).unwrap()
    }

    #[test]
    fn axis_pencils_are_general_position() {
        let arr = Arrangement::new(
            2,
            vec![pencil(vec![1.0, 0.0], vec![0.0]), pencil(vec![0.0, 1.0], vec![0.0])],
        )
        .unwrap();
        assert!(is_general_position(&arr, 1e-8));
    }

    #[test]
    fn concurrent_lines_fail_general_position() {
        // Three lines through the origin: the triple intersection is
        // nonempty, so d+1 = 3 hyperplanes meet.
        let arr = Arrangement::new(
            2,
            vec![
                pencil(vec![1.0, 0.0], vec![0.0]),
                pencil(vec![0.0, 1.0], vec![0.0]),
                pencil(vec![1.0, 1.0], vec![0.0]),
            ],
        )
        .unwrap();
        assert!(!is_general_position(&arr, 1e-8));
    }

    #[test]
    fn parallel_normals_fail_general_position() {
        let arr = Arrangement::new(
            2,
            vec![pencil(vec![1.0, 0.0], vec![0.0]), pencil(vec![2.0, 0.0], vec![1.0])],
        )
        .unwrap();
        assert!(!is_general_position(&arr, 1e-8));
    }

    #[test]
    fn degenerate_pencils_rejected_at_construction() {
        // Equal offsets would mean equal hyperplanes.
        let err = ParallelPencil::new(Vector::new(vec![1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(err, Err(ArrangementError::BadOffsets)));
        let err = ParallelPencil::new(Vector::new(vec![0.0, 0.0]).unwrap(), vec![0.0]);
        assert!(matches!(err, Err(ArrangementError::BadNormal)));
    }

    #[test]
    fn single_hyperplane_two_regions() {
        let arr =
            Arrangement::new(2, vec![pencil(vec![1.0, 0.0], vec![0.0])]).unwrap();
        assert_eq!(enumerate_regions(&arr).unwrap().len(), 2);
    }

    #[test]
    fn three_intervals_on_the_line() {
        let arr = Arrangement::new(1, vec![pencil(vec![1.0], vec![-1.0, 1.0])]).unwrap();
        let regions = enumerate_regions(&arr).unwrap();
        assert_eq!(regions.len(), 3);
        // Lexicographic by interval index.
        let idx: Vec<usize> = regions.iter().map(|r| r.sign.intervals()[0]).collect();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn grid_of_nine() {
        let arr = Arrangement::new(
            2,
            vec![
                pencil(vec![1.0, 0.0], vec![0.0, 1.0]),
                pencil(vec![0.0, 1.0], vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        let regions = enumerate_regions(&arr).unwrap();
        assert_eq!(BigUint::from(regions.len()), parallel_regions_count(2, 2, 2));
    }

    #[test]
    fn sign_accessor_is_monotone() {
        let sv = SignVector { intervals: vec![2, 0] };
        assert_eq!(sv.sign(0, 0), Sign::Above);
        assert_eq!(sv.sign(0, 1), Sign::Above);
        assert_eq!(sv.sign(1, 0), Sign::Below);
        assert_eq!(sv.sign(1, 1), Sign::Below);
    }

    #[test]
    fn outer_regions_on_the_line() {
        let arr = Arrangement::new(1, vec![pencil(vec![1.0], vec![-1.0, 1.0])]).unwrap();
        let outer = enumerate_outer_regions(&arr).unwrap();
        assert_eq!(outer.len(), 2);

        // Disjoint bands: bound met with equality (3 = 3).
        let arr = Arrangement::new(
            1,
            vec![pencil(vec![1.0], vec![-1.0, 1.0]), pencil(vec![1.0], vec![2.0, 4.0])],
        )
        .unwrap();
        assert_eq!(enumerate_outer_regions(&arr).unwrap().len(), 3);

        // Nested bands: strict inequality (2 < 3).
        let arr = Arrangement::new(
            1,
            vec![pencil(vec![1.0], vec![-1.0, 1.0]), pencil(vec![1.0], vec![-3.0, 3.0])],
        )
        .unwrap();
        assert_eq!(enumerate_outer_regions(&arr).unwrap().len(), 2);
    }

    #[test]
    fn outer_regions_need_two_offsets() {
        let arr = Arrangement::new(1, vec![pencil(vec![1.0], vec![0.0])]).unwrap();
        assert!(matches!(
            enumerate_outer_regions(&arr),
            Err(ArrangementError::NotTwoOffsets(0, 1))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let pencils: Vec<ParallelPencil> = (0..13)
            .map(|i| pencil(vec![1.0, 0.1 * (i as f64 + 1.0)], vec![0.0, 1.0]))
            .collect();
        let arr = Arrangement::new(2, pencils).unwrap();
        assert!(matches!(
            enumerate_regions(&arr),
            Err(ArrangementError::TooLarge { got: 26, cap: 24 })
        ));
    }

    #[test]
    fn sampler_is_deterministic_and_valid() {
        let a = random_arrangement(2, 3, 2, 1).unwrap();
        let b = random_arrangement(2, 3, 2, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pencils().len(), 3);
        assert!(a.pencils().iter().all(|p| p.len() == 2));
        assert!(is_general_position(&a, 1e-8));

        let line = random_arrangement(1, 2, 2, 7).unwrap();
        assert_eq!(line.hyperplane_count(), 4);
        assert!(is_general_position(&line, 1e-8));
    }

    #[test]
    fn sampled_counts_match_formula() {
        let mut checked = 0;
        for (seed, (d, n, k)) in
            [(1, (1, 3, 2)), (2, (2, 3, 2)), (3, (2, 4, 3)), (4, (3, 4, 2)), (5, (3, 5, 1))]
        {
            let arr = random_arrangement(d, n, k, seed).unwrap();
            let regions = enumerate_regions(&arr).unwrap();
            assert_eq!(
                BigUint::from(regions.len()),
                parallel_regions_count(n as u64, k as u64, d as u64),
                "seed {seed} (d={d}, n={n}, k={k})"
            );
            for r in &regions {
                let sys = region_system(&arr, &r.sign);
                assert_eq!(contains(&sys, &r.witness, 1e-10), Membership::Interior);
            }
            checked += regions.len();
        }
        assert!(checked > 0);
    }

    #[test]
    fn outer_count_within_bound() {
        for seed in 0..10u64 {
            let arr = random_arrangement(2, 3, 2, seed).unwrap();
            let outer = enumerate_outer_regions(&arr).unwrap();
            let bound = crate::combinatorics::outer_region_bound(3, 2);
            assert!(BigUint::from(outer.len()) <= bound);
        }
    }

    #[test]
    fn removing_a_pencil_never_increases_count() {
        for seed in 0..6u64 {
            let arr = random_arrangement(2, 4, 2, seed).unwrap();
            let full = enumerate_regions(&arr).unwrap().len();
            for drop in 0..arr.pencils().len() {
                let rest: Vec<ParallelPencil> = arr
                    .pencils()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, p)| p.clone())
                    .collect();
                let sub = Arrangement::new(2, rest).unwrap();
                assert!(enumerate_regions(&sub).unwrap().len() <= full);
            }
        }
    }
}
