//! Randomized cross-validation: every counting formula and bound checked
//! against brute-force enumeration on seeded samples.
//!
//! The generators and the per-instance checks are public so the CLI's
//! audit command and the acceptance suite run the exact same instances
//! for a given seed. A failed check produces a counterexample dump (the
//! offending arrangement or network as JSON) rather than just a boolean.

use crate::arrangements::{
    enumerate_outer_regions, enumerate_regions, random_arrangement, Arrangement,
};
use crate::combinatorics::{outer_region_bound, parallel_regions_count, CountValue};
use crate::io;
use crate::linalg::{Matrix, Vector};
use crate::network::analysis::{region_product_bound, stable_bound_report};
use crate::network::cells::{enumerate_cells_with_cap, segment_region_count, DEFAULT_PATTERN_CAP};
use crate::network::fixed_points::{fixed_points_with_cap, FixedPointRecord};
use crate::network::{Layer, LayeredNetwork, NetworkError, OneHiddenNetwork, PwlActivation};
use crate::rng::stream_rng;
use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Sub-stream ids, one per generator family.
pub const STREAM_ARRANGEMENTS: u64 = 1;
pub const STREAM_OUTER: u64 = 2;
pub const STREAM_NETS: u64 = 3;
pub const STREAM_TIED: u64 = 4;

/// Result of one audit suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub passes: usize,
    /// One counterexample dump per failed trial.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Deterministic arrangement sample: dimension cycles 1..=3, pencil count
/// up to 5, pencil size up to 3 (or pinned for two-offset audits).
pub fn arrangement_trials(
    seed: u64,
    stream: u64,
    count: usize,
    fixed_k: Option<usize>,
) -> Vec<(usize, usize, usize, Arrangement)> {
    let mut rng = stream_rng(seed, stream);
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let d = 1 + t % 3;
        let n = rng.random_range(1..=5usize);
        let k = fixed_k.unwrap_or_else(|| rng.random_range(1..=3usize));
        let sub_seed: u64 = rng.random();
        let arr = random_arrangement(d, n, k, sub_seed)
            .expect("sampler finds a general-position arrangement");
        out.push((d, n, k, arr));
    }
    out
}

fn random_weights(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect(),
    )
    .expect("finite entries")
}

/// Seeded small layered networks: dimension up to 2, hidden widths up to
/// 4, up to 3 layers, alternating ReLU / hard tanh.
pub fn random_layered_nets(seed: u64, count: usize) -> Vec<LayeredNetwork> {
    let mut rng = stream_rng(seed, STREAM_NETS);
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let d = 1 + t % 2;
        let depth = rng.random_range(1..=3usize);
        let activation =
            if t % 2 == 0 { PwlActivation::relu() } else { PwlActivation::hard_tanh() };
        let mut widths = vec![d];
        for _ in 1..depth {
            widths.push(rng.random_range(1..=4usize));
        }
        widths.push(d);
        let layers = (0..depth)
            .map(|j| {
                let w = random_weights(&mut rng, widths[j + 1], widths[j], 1.5);
                let b = Vector::new(
                    (0..widths[j + 1]).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .expect("finite");
                Layer::new(w, b).expect("consistent dims")
            })
            .collect();
        out.push(
            LayeredNetwork::new(layers, activation, true, false).expect("consistent dims"),
        );
    }
    out
}

/// Seeded weight-tied hard-tanh networks with every tied column norm at
/// least 1.05, so the saturation conditions hold by construction.
pub fn random_tied_nets(seed: u64, count: usize) -> Vec<OneHiddenNetwork> {
    let mut rng = stream_rng(seed, STREAM_TIED);
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let d = 1 + t % 3;
        let n = rng.random_range(d..=10usize);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            loop {
                let raw: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-3 {
                    continue;
                }
                let target = rng.random_range(1.05..2.0);
                rows.push(raw.into_iter().map(|x| x * target / norm).collect::<Vec<f64>>());
                break;
            }
        }
        let v = Matrix::from_rows(&rows).expect("finite");
        let w = v.transpose();
        let u = Vector::new((0..n).map(|_| rng.random_range(-0.3..0.3)).collect())
            .expect("finite");
        let z = Vector::new((0..d).map(|_| rng.random_range(-0.5..0.5)).collect())
            .expect("finite");
        out.push(
            OneHiddenNetwork::new(w, v, u, z, PwlActivation::hard_tanh())
                .expect("consistent dims"),
        );
    }
    out
}

/// Everything the bound checks need from one network.
#[derive(Debug, Clone)]
pub struct NetworkAudit {
    pub cell_count: usize,
    pub region_bound: CountValue,
    pub records: Vec<FixedPointRecord>,
}

impl NetworkAudit {
    pub fn stable_locations(&self) -> Vec<Vector> {
        self.records
            .iter()
            .filter(|r| r.is_stable())
            .map(|r| r.location.clone())
            .collect()
    }
}

pub fn audit_network(net: &LayeredNetwork, cap: u128) -> Result<NetworkAudit, NetworkError> {
    Ok(NetworkAudit {
        cell_count: enumerate_cells_with_cap(net, cap)?.len(),
        region_bound: region_product_bound(net)?,
        records: fixed_points_with_cap(net, cap)?,
    })
}

/// Pre-activation saturation required of a stable fixed point of a
/// one-hidden hard-tanh network: `|nu_j . x + u_j| >= 1 - 1e-9` for all j.
pub fn saturation_holds(net: &OneHiddenNetwork, x: &Vector) -> bool {
    (0..net.hidden()).all(|j| {
        let pre = net.v().row_vector(j).dot(x) + net.u()[j];
        pre.abs() >= 1.0 - 1e-9
    })
}

/// Suite 1: enumerated region counts equal the closed-form pencil count.
pub fn arrangement_count_suite(trials: usize, seed: u64) -> Result<SuiteReport, NetworkError> {
    let mut failures = Vec::new();
    let cases = arrangement_trials(seed, STREAM_ARRANGEMENTS, trials, None);
    for (d, n, k, arr) in &cases {
        let got = enumerate_regions(arr)?.len();
        let want = parallel_regions_count(*n as u64, *k as u64, *d as u64);
        if BigUint::from(got) != want {
            failures.push(format!(
                "region count {got} != formula {want} for d={d} n={n} k={k}\n{}",
                io::arrangement_to_json(arr)
            ));
        }
    }
    Ok(SuiteReport {
        name: "arrangement-counts",
        trials,
        passes: trials - failures.len(),
        failures,
    })
}

/// Suite 2: outer-region counts never exceed the outer-region bound.
pub fn outer_bound_suite(trials: usize, seed: u64) -> Result<SuiteReport, NetworkError> {
    let mut failures = Vec::new();
    let cases = arrangement_trials(seed, STREAM_OUTER, trials, Some(2));
    for (d, n, _, arr) in &cases {
        let got = enumerate_outer_regions(arr)?.len();
        let bound = outer_region_bound(*n as u64, *d as u64);
        if BigUint::from(got) > bound {
            failures.push(format!(
                "outer regions {got} > bound {bound} for d={d} n={n}\n{}",
                io::arrangement_to_json(arr)
            ));
        }
    }
    Ok(SuiteReport { name: "outer-bound", trials, passes: trials - failures.len(), failures })
}

/// Suite 3: cell counts within the product bound, and the counting chain
/// stable <= fixed-point records <= cells.
pub fn network_bounds_suite(
    trials: usize,
    seed: u64,
    cap: u128,
) -> Result<SuiteReport, NetworkError> {
    let mut failures = Vec::new();
    for net in random_layered_nets(seed, trials) {
        let audit = audit_network(&net, cap)?;
        let stable = audit.stable_locations().len();
        let chain_ok = stable <= audit.records.len() && audit.records.len() <= audit.cell_count;
        let bound_ok = BigUint::from(audit.cell_count) <= audit.region_bound;
        if !(chain_ok && bound_ok) {
            failures.push(format!(
                "cells={} bound={} records={} stable={}\n{}",
                audit.cell_count,
                audit.region_bound,
                audit.records.len(),
                stable,
                io::network_to_json(&io::NetworkDoc::Layered(net.clone()))
            ));
        }
    }
    Ok(SuiteReport { name: "network-bounds", trials, passes: trials - failures.len(), failures })
}

/// Suite 4: on tied saturating nets, every stable fixed point is fully
/// saturated and the stable count respects the outer-region bound.
pub fn saturation_suite(trials: usize, seed: u64, cap: u128) -> Result<SuiteReport, NetworkError> {
    let mut failures = Vec::new();
    for net in random_tied_nets(seed, trials) {
        let report = stable_bound_report(&net)?;
        let audit = audit_network(&net.to_layered(), cap)?;
        let stable = audit.stable_locations();
        let mut bad = Vec::new();
        if !report.tied_case {
            bad.push("generator produced a non-tied case".to_string());
        }
        for x in &stable {
            if !saturation_holds(&net, x) {
                bad.push(format!("unsaturated stable point {:?}", x.as_slice()));
            }
        }
        if BigUint::from(stable.len()) > report.bound {
            bad.push(format!("stable count {} > bound {}", stable.len(), report.bound));
        }
        if !bad.is_empty() {
            failures.push(format!(
                "{}\n{}",
                bad.join("; "),
                io::network_to_json(&io::NetworkDoc::OneHidden(net.clone()))
            ));
        }
    }
    Ok(SuiteReport { name: "saturation-necessity", trials, passes: trials - failures.len(), failures })
}

/// Suite 5: segments between distinct stable fixed points cross at least
/// three linear regions. Runs over the same nets as suites 3 and 4.
pub fn segment_suite(trials: usize, seed: u64, cap: u128) -> Result<SuiteReport, NetworkError> {
    let mut failures = Vec::new();
    let mut nets: Vec<LayeredNetwork> = random_layered_nets(seed, trials);
    nets.extend(random_tied_nets(seed, trials).iter().map(|n| n.to_layered()));
    let total = nets.len();
    for net in nets {
        let audit = audit_network(&net, cap)?;
        let stable = audit.stable_locations();
        let mut bad = Vec::new();
        for i in 0..stable.len() {
            for j in (i + 1)..stable.len() {
                let count = segment_region_count(&net, &stable[i], &stable[j])?;
                if count < 3 {
                    bad.push(format!(
                        "segment {:?} -> {:?} crosses only {count} regions",
                        stable[i].as_slice(),
                        stable[j].as_slice()
                    ));
                }
            }
        }
        if !bad.is_empty() {
            failures.push(format!(
                "{}\n{}",
                bad.join("; "),
                io::network_to_json(&io::NetworkDoc::Layered(net.clone()))
            ));
        }
    }
    Ok(SuiteReport { name: "segment-counts", trials: total, passes: total - failures.len(), failures })
}

/// Run all five suites with `trials` instances each.
pub fn run_all_suites(
    trials: usize,
    seed: u64,
    cap: u128,
) -> Result<Vec<SuiteReport>, NetworkError> {
    Ok(vec![
        arrangement_count_suite(trials, seed)?,
        outer_bound_suite(trials, seed)?,
        network_bounds_suite(trials, seed, cap)?,
        saturation_suite(trials, seed, cap)?,
        segment_suite(trials, seed, cap)?,
    ])
}

/// Default pattern cap re-exported for CLI flag handling.
pub fn default_pattern_cap() -> u128 {
    DEFAULT_PATTERN_CAP
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_audit_passes() {
        for report in run_all_suites(4, 1, DEFAULT_PATTERN_CAP).unwrap() {
            assert!(report.passed(), "{}: {:?}", report.name, report.failures);
            assert_eq!(report.passes, report.trials);
        }
    }

    #[test]
    fn zero_trials_is_vacuous() {
        for report in run_all_suites(0, 9, DEFAULT_PATTERN_CAP).unwrap() {
            assert_eq!(report.trials, 0);
            assert!(report.passed());
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_layered_nets(5, 3), random_layered_nets(5, 3));
        assert_eq!(random_tied_nets(5, 3), random_tied_nets(5, 3));
        let a = arrangement_trials(5, STREAM_ARRANGEMENTS, 3, None);
        let b = arrangement_trials(5, STREAM_ARRANGEMENTS, 3, None);
        assert_eq!(a.iter().map(|t| &t.3).collect::<Vec<_>>(), b.iter().map(|t| &t.3).collect::<Vec<_>>());
    }

    #[test]
    fn tied_nets_satisfy_case_conditions() {
        for net in random_tied_nets(11, 5) {
            let report = stable_bound_report(&net).unwrap();
            assert!(report.tied_case);
        }
    }

    #[test]
    fn stable_points_never_have_expanding_aligned_gain() {
        // For tied hard-tanh nets, a point with slope(omega_j . x) *
        // ||omega_j||^2 >= 1 for some j cannot be classified stable.
        for net in random_tied_nets(13, 5) {
            let audit = audit_network(&net.to_layered(), DEFAULT_PATTERN_CAP).unwrap();
            for x in audit.stable_locations() {
                for j in 0..net.hidden() {
                    let omega = net.w().column(j);
                    let pre = omega.dot(&x) + net.u()[j];
                    let slope = net.activation().slope_at(pre);
                    let gain = slope * omega.norm() * omega.norm();
                    assert!(gain < 1.0, "stable point with aligned gain {gain}");
                }
            }
        }
    }

    #[test]
    fn cap_violations_propagate() {
        let nets = random_layered_nets(1, 2);
        let err = audit_network(&nets[0], 1);
        assert!(matches!(err, Err(NetworkError::TooManyPatterns { .. })));
    }
}
