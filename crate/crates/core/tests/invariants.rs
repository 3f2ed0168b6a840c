//! Cross-module invariants on seeded random instances: properties that
//! tie the network machinery to the linear algebra and the arrangement
//! counting.

use pwl_fixpoints::audit;
use pwl_fixpoints::linalg::{spectral_norm, Matrix, Vector};
use pwl_fixpoints::network::analysis::{hard_tanh_thresholds, stable_candidate_regions};
use pwl_fixpoints::network::cells::{enumerate_cells, DEFAULT_PATTERN_CAP};
use pwl_fixpoints::network::fixed_points::{fixed_points, FixedPointKind};
use pwl_fixpoints::network::{Layer, LayeredNetwork, PwlActivation};
use pwl_fixpoints::polyhedra::{contains, Membership};
use pwl_fixpoints::rng::stream_rng;
use rand::Rng;

/// Power iteration on a symmetric matrix: converges to the eigenvalue of
/// largest magnitude. Independent of the SVD route.
fn dominant_eigenvalue_magnitude(m: &Matrix, iters: usize) -> f64 {
    let n = m.rows();
    let mut v = Vector::new((0..n).map(|i| 1.0 + 0.41 * i as f64).collect()).unwrap();
    let mut lambda = 0.0f64;
    for _ in 0..iters {
        let w = m.matvec(&v);
        let nrm = w.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        v = w.scale(1.0 / nrm);
        lambda = v.dot(&m.matvec(&v));
    }
    lambda.abs()
}

#[test]
fn tied_jacobians_are_symmetric_with_eigenvalue_norm() {
    let mut rng = stream_rng(7, 50);
    let mut checked = 0;
    for net in audit::random_tied_nets(7, 10) {
        let d = net.dim();
        let mut attempts = 0;
        while attempts < 200 {
            attempts += 1;
            let x =
                Vector::new((0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let Ok(jac) = net.jacobian(&x) else { continue };
            // Symmetry of W D W^T.
            for i in 0..d {
                for j in 0..d {
                    assert!(
                        (jac.get(i, j) - jac.get(j, i)).abs() <= 1e-10,
                        "asymmetric tied jacobian"
                    );
                }
            }
            let norm = spectral_norm(&jac);
            let eig = dominant_eigenvalue_magnitude(&jac, 5000);
            assert!(
                (norm - eig).abs() <= 1e-9 * norm.max(1.0),
                "spectral norm {norm} vs dominant eigenvalue {eig}"
            );
            checked += 1;
            break;
        }
    }
    assert!(checked >= 8, "too few differentiable samples");
}

#[test]
fn stable_points_lie_in_a_candidate_region() {
    for net in audit::random_tied_nets(3, 10) {
        let audited = audit::audit_network(&net.to_layered(), DEFAULT_PATTERN_CAP).unwrap();
        let stable = audited.stable_locations();
        if stable.is_empty() {
            continue;
        }
        let (lo, hi) = hard_tanh_thresholds(net.hidden());
        let regions = stable_candidate_regions(&net, &lo, &hi).unwrap();
        for x in &stable {
            // The interval tuple of x must be outer (0 or 2 per pencil)
            // and must appear among the returned candidate regions.
            let intervals: Vec<usize> = (0..net.hidden())
                .map(|j| {
                    let pre = net.v().row_vector(j).dot(x) + net.u()[j];
                    if pre < -1.0 {
                        0
                    } else if pre > 1.0 {
                        2
                    } else {
                        1
                    }
                })
                .collect();
            assert!(intervals.iter().all(|&m| m != 1), "stable point in a middle band");
            assert!(
                regions.iter().any(|r| r.sign.intervals() == intervals.as_slice()),
                "stable point's region {:?} missing from candidates",
                intervals
            );
        }
    }
}

#[test]
fn cell_maps_match_forward_pass_on_random_nets() {
    let mut rng = stream_rng(9, 51);
    for net in audit::random_layered_nets(9, 6) {
        let cells = enumerate_cells(&net).unwrap();
        for cell in cells.iter().take(10) {
            let mut sampled = 0;
            let mut tries = 0;
            while sampled < 100 && tries < 4000 {
                tries += 1;
                let step: Vec<f64> = (0..net.input_dim())
                    .map(|_| rng.random_range(-0.3..0.3))
                    .collect();
                let x = cell.witness.add(&Vector::new(step).unwrap());
                if contains(&cell.polyhedron, &x, 1e-9) != Membership::Interior {
                    continue;
                }
                sampled += 1;
                let by_net = net.evaluate(&x).unwrap();
                let by_map = cell.matrix.matvec(&x).add(&cell.offset);
                let err = by_net.sub(&by_map).norm();
                assert!(err <= 1e-9 * (1.0 + by_net.norm()), "cell map off by {err}");
            }
            assert!(sampled > 0);
        }
    }
}

#[test]
fn continuum_fixed_sets_are_convex() {
    // Hard tanh wired as the identity has the whole middle square as its
    // fixed set; midpoints of random continuum points are fixed again.
    let net = LayeredNetwork::new(
        vec![Layer::new(Matrix::identity(2), Vector::zeros(2)).unwrap()],
        PwlActivation::hard_tanh(),
        true,
        false,
    )
    .unwrap();
    let cells = enumerate_cells(&net).unwrap();
    let records = fixed_points(&net).unwrap();
    let continua: Vec<_> =
        records.iter().filter(|r| r.kind == FixedPointKind::Continuum).collect();
    assert!(!continua.is_empty());
    let mut rng = stream_rng(11, 52);
    for rec in continua {
        let cell = cells
            .iter()
            .find(|c| c.pattern == rec.pattern)
            .expect("record pattern names a cell");
        let mut pairs = 0;
        let mut tries = 0;
        while pairs < 25 && tries < 5000 {
            tries += 1;
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut p = rec.location.clone();
                for dir in &rec.continuum_basis {
                    p = p.add(&dir.scale(rng.random_range(-1.0..1.0)));
                }
                p
            };
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let mid = a.add(&b).scale(0.5);
            if contains(&cell.polyhedron, &mid, 1e-9) != Membership::Interior {
                continue;
            }
            pairs += 1;
            let fx = net.evaluate(&mid).unwrap();
            assert!(fx.sub(&mid).norm() <= 1e-8 * (1.0 + mid.norm()));
        }
        assert!(pairs > 0);
    }
}

/// Dynamic completeness oracle: iterate the network from many starts;
/// every numerically convergent limit must be (near) an enumerated
/// record. A convergent point far from all records would mean the
/// per-cell enumeration missed a fixed point.
#[test]
fn iteration_limits_are_enumerated_fixed_points() {
    let mut rng = stream_rng(31, 53);
    let mut converged_total = 0;
    for net in audit::random_tied_nets(31, 8) {
        let layered = net.to_layered();
        let audited = audit::audit_network(&layered, DEFAULT_PATTERN_CAP).unwrap();
        let d = net.dim();
        for _ in 0..40 {
            let mut x =
                Vector::new((0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let mut settled = 0;
            for _ in 0..500 {
                let next = layered.evaluate(&x).unwrap();
                let step = next.sub(&x).norm();
                x = next;
                if step <= 1e-13 * (1.0 + x.norm()) {
                    settled += 1;
                    if settled >= 3 {
                        break;
                    }
                } else {
                    settled = 0;
                }
            }
            if settled < 3 {
                continue; // cycling or slow orbit; not a convergence witness
            }
            converged_total += 1;
            let near_record = audited.records.iter().any(|r| {
                let delta = x.sub(&r.location);
                if r.continuum_basis.is_empty() {
                    delta.norm() <= 1e-6
                } else {
                    // Distance to the affine set: remove the components
                    // along the (orthonormal) continuum directions.
                    let mut d2 = delta.dot(&delta);
                    for b in &r.continuum_basis {
                        let c = b.dot(&delta);
                        d2 -= c * c;
                    }
                    d2.max(0.0).sqrt() <= 1e-6
                }
            });
            assert!(
                near_record,
                "iteration converged to {:?}, which is not among the {} enumerated records",
                x.as_slice(),
                audited.records.len()
            );
        }
    }
    assert!(converged_total >= 20, "only {converged_total} convergent runs");
}

/// Dual-route check in one dimension: build the exact scalar piecewise
/// form of a one-hidden net by hand (breakpoints from the pre-activation
/// crossings, slopes from the chain rule at piece midpoints) and compare
/// its fixed points against the per-cell LP enumeration.
#[test]
fn scalar_route_agrees_with_cell_enumeration_in_1d() {
    use pwl_fixpoints::network::fixed_points::{fixed_points_1d, Classification, ScalarPwl};
    use pwl_fixpoints::network::{OneHiddenNetwork, PwlActivation};

    let mut rng = stream_rng(17, 54);
    let mut compared = 0;
    for _ in 0..25 {
        let n = rng.random_range(1..=4usize);
        let w = Matrix::new(1, n, (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .unwrap();
        let v = Matrix::new(n, 1, (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .unwrap();
        let u = Vector::new((0..n).map(|_| rng.random_range(-0.5..0.5)).collect()).unwrap();
        let z = Vector::new(vec![rng.random_range(-1.0..1.0)]).unwrap();
        let Ok(net) =
            OneHiddenNetwork::new(w, v, u, z, PwlActivation::hard_tanh())
        else {
            continue;
        };

        // Scalar form: pre-activation v_j x + u_j crosses -1 and 1 at
        // x = (c - u_j) / v_j.
        let mut brs: Vec<f64> = Vec::new();
        for j in 0..n {
            let vj = net.v().get(j, 0);
            if vj.abs() < 1e-9 {
                continue;
            }
            for c in [-1.0, 1.0] {
                brs.push((c - net.u()[j]) / vj);
            }
        }
        brs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        brs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let eval = |x: f64| net.evaluate(&Vector::new(vec![x]).unwrap()).unwrap()[0];
        let slope_at = |x: f64| {
            (0..n)
                .map(|j| {
                    let vj = net.v().get(j, 0);
                    let pre = vj * x + net.u()[j];
                    net.w().get(0, j) * net.activation().slope_at(pre) * vj
                })
                .sum::<f64>()
        };
        let mut slopes = Vec::with_capacity(brs.len() + 1);
        for p in 0..=brs.len() {
            let probe = if brs.is_empty() {
                0.0
            } else if p == 0 {
                brs[0] - 1.0
            } else if p == brs.len() {
                brs[p - 1] + 1.0
            } else {
                0.5 * (brs[p - 1] + brs[p])
            };
            slopes.push(slope_at(probe));
        }
        let anchor_x = brs.first().map_or(0.0, |b| b - 1.0);
        let scalar =
            ScalarPwl::full_line(brs, slopes, (anchor_x, eval(anchor_x))).unwrap();

        let by_scalar = fixed_points_1d(&scalar);
        let by_cells = fixed_points(&net.to_layered()).unwrap();

        // Compare multisets of locations; skip nets with continuum
        // records or boundary-sitting points, whose bookkeeping differs
        // legitimately between the two routes.
        let degenerate = by_scalar.iter().chain(by_cells.iter()).any(|r| {
            r.kind == FixedPointKind::Continuum
                || r.classification == Classification::BoundaryUndetermined
        });
        if degenerate {
            continue;
        }
        let mut a: Vec<f64> = by_scalar.iter().map(|r| r.location[0]).collect();
        let mut b: Vec<f64> = by_cells.iter().map(|r| r.location[0]).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a.len(), b.len(), "route disagreement: {a:?} vs {b:?}");
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-7, "route disagreement: {a:?} vs {b:?}");
        }
        let stable_a = by_scalar.iter().filter(|r| r.is_stable()).count();
        let stable_b = by_cells.iter().filter(|r| r.is_stable()).count();
        assert_eq!(stable_a, stable_b);
        compared += 1;
    }
    assert!(compared >= 15, "only {compared} non-degenerate draws");
}

#[test]
fn fixed_point_records_satisfy_the_equation() {
    for net in audit::random_layered_nets(21, 8) {
        let audited = audit::audit_network(&net, DEFAULT_PATTERN_CAP).unwrap();
        for rec in &audited.records {
            if rec.kind == FixedPointKind::Isolated
                && rec.jacobian_norm.is_some()
            {
                let fx = net.evaluate(&rec.location).unwrap();
                let err = fx.sub(&rec.location).norm();
                assert!(
                    err <= 1e-8 * (1.0 + rec.location.norm()),
                    "fixed-point equation off by {err}"
                );
            }
        }
    }
}
