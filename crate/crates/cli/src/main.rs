//! Command-line front end: bounds, the ratio table, network/arrangement
//! enumeration, the sawtooth verification and the randomized audit.
//!
//! Exit codes: 0 success, 1 usage or parse failure, 2 property violation,
//! 3 enumeration size cap exceeded. All randomness is derived from the
//! --seed flag, so identical invocations produce byte-identical output.

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use pwl_fixpoints::arrangements::{
    enumerate_regions, expected_region_count, is_general_position, ArrangementError,
};
use pwl_fixpoints::audit;
use pwl_fixpoints::combinatorics::{
    eta_ratio, gamma_argmax_estimate, gamma_ratio, outer_region_bound, parallel_regions_count,
    zaslavsky_bound, ExactRatio,
};
use pwl_fixpoints::io::{self, NetworkDoc};
use pwl_fixpoints::linalg::Vector;
use pwl_fixpoints::network::analysis::stable_bound_report;
use pwl_fixpoints::network::fixed_points::fixed_points_1d;
use pwl_fixpoints::network::NetworkError;
use pwl_fixpoints::sawtooth::{
    build_sawtooth_network, build_sawtooth_scalar, expected_stable_points, SawtoothError,
    SawtoothSpec,
};
use serde_json::json;
use std::fmt::Write as _;
use std::path::PathBuf;

const EXIT_USAGE: i32 = 1;
const EXIT_VIOLATION: i32 = 2;
const EXIT_SIZE: i32 = 3;

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn violation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VIOLATION, message: message.into() }
    }

    fn size(message: impl Into<String>) -> Self {
        Self { code: EXIT_SIZE, message: message.into() }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::TooManyPatterns { .. } => CliError::size(e.to_string()),
            NetworkError::Arrangement(ArrangementError::TooLarge { .. }) => {
                CliError::size(e.to_string())
            }
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<ArrangementError> for CliError {
    fn from(e: ArrangementError) -> Self {
        match e {
            ArrangementError::TooLarge { .. } => CliError::size(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<SawtoothError> for CliError {
    fn from(e: SawtoothError) -> Self {
        match e {
            SawtoothError::TooManyPieces(_) => CliError::size(e.to_string()),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "pwlfp",
    about = "Region-count bounds and exact fixed-point enumeration for piecewise-linear networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the counting bounds and ratio quantities for one (n, k, d).
    Bounds {
        /// Number of pencils (hidden neurons).
        #[arg(long)]
        n: u64,
        /// Hyperplanes per pencil (activation breakpoints).
        #[arg(long)]
        k: u64,
        /// Ambient dimension.
        #[arg(long)]
        d: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV of log10 gamma and eta over a grid of n, k, d.
    RatioTable {
        /// Dimensions, comma separated.
        #[arg(long = "d-list", value_delimiter = ',', required = true)]
        d_list: Vec<u64>,
        /// Pencil sizes, comma separated.
        #[arg(long = "k-list", value_delimiter = ',', required = true)]
        k_list: Vec<u64>,
        /// Largest n; rows run n = 1..=n-max.
        #[arg(long = "n-max")]
        n_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate cells and fixed points of a network file.
    Enumerate {
        /// Network JSON file.
        network: PathBuf,
        /// Override the activation-pattern cap.
        #[arg(long = "cap-patterns")]
        cap_patterns: Option<u128>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the deep sawtooth network and verify its stable fixed points.
    Sawtooth {
        /// Half the layer width.
        #[arg(long = "N")]
        n: u64,
        /// Network depth.
        #[arg(long = "L")]
        layers: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check general position and the region-count formula on a file.
    VerifyArrangement {
        /// Arrangement JSON file.
        arrangement: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized cross-validation suites.
    RandomAudit {
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long = "cap-patterns")]
        cap_patterns: Option<u128>,
        /// Feed a known-degenerate arrangement through validation first.
        #[arg(long = "inject-degenerate")]
        inject_degenerate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code conventions differ; ours is 1 for any
            // usage problem (--help/--version count as plain success).
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Bounds { n, k, d, format, out } => cmd_bounds(n, k, d, format, &out),
        Command::RatioTable { d_list, k_list, n_max, out } => {
            cmd_ratio_table(&d_list, &k_list, n_max, &out)
        }
        Command::Enumerate { network, cap_patterns, out } => {
            cmd_enumerate(&network, cap_patterns, &out)
        }
        Command::Sawtooth { n, layers, out } => cmd_sawtooth(n, layers, &out),
        Command::VerifyArrangement { arrangement, out } => {
            cmd_verify_arrangement(&arrangement, &out)
        }
        Command::RandomAudit { trials, seed, cap_patterns, inject_degenerate, out } => {
            cmd_random_audit(trials, seed, cap_patterns, inject_degenerate, &out)
        }
    }
}

fn ratio_json(r: &ExactRatio) -> serde_json::Value {
    json!({
        "numerator": r.numerator.to_string(),
        "denominator": r.denominator.to_string(),
        "log10": r.log10,
    })
}

fn cmd_bounds(
    n: u64,
    k: u64,
    d: u64,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if n < 1 || k < 1 || d < 1 {
        return Err(CliError::usage("bounds requires n >= 1, k >= 1, d >= 1"));
    }
    let zas = zaslavsky_bound(n * k, d);
    let pencil = parallel_regions_count(n, k, d);
    let outer = outer_region_bound(n, d);
    let gamma = gamma_ratio(n, k, d);
    let eta = eta_ratio(n, d);
    let content = match format {
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "bounds for n={n} k={k} d={d}");
            let _ = writeln!(s, "zaslavsky(n*k,d)={zas}");
            let _ = writeln!(s, "r_d(n,k)={pencil}");
            let _ = writeln!(s, "rpm_bound(n,d)={outer}");
            let _ = writeln!(
                s,
                "gamma={}/{} log10={:.12}",
                gamma.numerator, gamma.denominator, gamma.log10
            );
            let _ = writeln!(s, "eta={}/{} log10={:.12}", eta.numerator, eta.denominator, eta.log10);
            s
        }
        Format::Json => {
            let v = json!({
                "n": n, "k": k, "d": d,
                "zaslavsky_nk": zas.to_string(),
                "pencil_regions": pencil.to_string(),
                "rpm_bound": outer.to_string(),
                "gamma": ratio_json(&gamma),
                "eta": ratio_json(&eta),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable"))
        }
    };
    emit(out, &content)
}

fn cmd_ratio_table(
    d_list: &[u64],
    k_list: &[u64],
    n_max: u64,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if d_list.is_empty() || k_list.is_empty() || n_max < 1 {
        return Err(CliError::usage("ratio-table requires nonempty lists and n-max >= 1"));
    }
    if d_list.iter().chain(k_list).any(|&v| v < 1) {
        return Err(CliError::usage("d and k values must be at least 1"));
    }
    let mut csv = String::from("quantity,n,k,d,log10_value,exact_num,exact_den,argmax_estimate\n");
    for &d in d_list {
        for &k in k_list {
            let estimate = gamma_argmax_estimate(d, k).ok();
            for n in 1..=n_max {
                let g = gamma_ratio(n, k, d);
                let est = estimate.map(|e| format!("{e:.6}")).unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "gamma,{n},{k},{d},{:.12},{},{},{est}",
                    g.log10, g.numerator, g.denominator
                );
            }
        }
    }
    for &d in d_list {
        for n in 1..=n_max {
            let e = eta_ratio(n, d);
            let _ = writeln!(csv, "eta,{n},,{d},{:.12},{},{},", e.log10, e.numerator, e.denominator);
        }
    }
    emit(out, &csv)
}

fn cmd_enumerate(
    network: &PathBuf,
    cap_patterns: Option<u128>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cap = cap_patterns.unwrap_or_else(audit::default_pattern_cap);
    let doc = io::parse_network(&read_file(network)?)?;
    let layered = doc.to_layered();
    let result = audit::audit_network(&layered, cap)?;
    let stable = result.stable_locations().len();
    let cells_ok = BigUint::from(result.cell_count) <= result.region_bound;
    let chain_ok = stable <= result.records.len() && result.records.len() <= result.cell_count;

    let mut report = json!({
        "cells": result.cell_count,
        "region_bound": result.region_bound.to_string(),
        "stable_count": stable,
        "fixed_points": io::fixed_point_report(&result.records),
        "bounds_satisfied": {
            "cells_within_region_bound": cells_ok,
            "stable_within_records_within_cells": chain_ok,
        },
    });

    if let NetworkDoc::OneHidden(net) = &doc {
        if net.activation() == &pwl_fixpoints::network::PwlActivation::hard_tanh()
            && net.hidden() >= net.dim()
        {
            let cond = stable_bound_report(net).map_err(CliError::from)?;
            let stable_ok = !cond.tied_case || BigUint::from(stable) <= cond.bound;
            report["stable_bound"] = json!({
                "tied_case": cond.tied_case,
                "gain_condition_literal": cond.gain_condition_literal,
                "gain_condition_squared": cond.gain_condition_squared,
                "rpm_bound": cond.bound.to_string(),
                "stable_within_rpm_bound": stable_ok,
            });
            if !stable_ok {
                emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
                return Err(CliError::violation("stable count exceeds the outer-region bound"));
            }
        }
    }

    emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
    if !(cells_ok && chain_ok) {
        return Err(CliError::violation("counting chain violated"));
    }
    Ok(())
}

fn cmd_sawtooth(n: u64, layers: u64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let spec = SawtoothSpec::new(n, layers)?;
    let scalar = build_sawtooth_scalar(&spec)?;
    let network = build_sawtooth_network(&spec)?;
    let expected = expected_stable_points(&spec)?;

    let stable: Vec<f64> = fixed_points_1d(&scalar)
        .into_iter()
        .filter(|r| r.is_stable())
        .map(|r| r.location[0])
        .collect();

    let mut per_point = Vec::new();
    let mut max_dev: f64 = 0.0;
    let count_ok = stable.len() == expected.len();
    let mut locations_ok = count_ok;
    for (i, want) in expected.iter().enumerate() {
        let got = stable.get(i).copied();
        let dev = got.map(|g| (g - want).abs());
        if let Some(dev) = dev {
            max_dev = max_dev.max(dev);
            if dev > 1e-9 {
                locations_ok = false;
            }
        }
        per_point.push(json!({
            "expected": want,
            "got": got,
            "deviation": dev,
            "pass": dev.map(|d| d <= 1e-9).unwrap_or(false),
        }));
    }

    // Agreement between the network and the exact scalar form.
    let mut network_dev: f64 = 0.0;
    for i in 0..=1000u32 {
        let x = f64::from(i) / 1000.0;
        let by_net = network
            .evaluate(&Vector::new(vec![x]).expect("finite"))
            .map_err(CliError::from)?[0];
        network_dev = network_dev.max((by_net - scalar.eval(x)).abs());
    }
    let network_ok = network_dev <= 1e-9;
    let pass = count_ok && locations_ok && network_ok;

    let report = json!({
        "n": n,
        "layers": layers,
        "pieces": spec.pieces().map_err(CliError::from)?,
        "offset": spec.offset(),
        "expected_stable_count": expected.len(),
        "stable_count": stable.len(),
        "locations": stable,
        "per_point": per_point,
        "max_deviation": max_dev,
        "network_agreement_max_deviation": network_dev,
        "pass": pass,
        "scalar": io::scalar_pwl_json(&scalar),
        "network": serde_json::from_str::<serde_json::Value>(&io::network_to_json(
            &NetworkDoc::Layered(network)
        )).expect("valid json"),
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
    if !pass {
        return Err(CliError::violation("sawtooth verification failed"));
    }
    Ok(())
}

fn cmd_verify_arrangement(path: &PathBuf, out: &Option<PathBuf>) -> Result<(), CliError> {
    let arr = io::parse_arrangement(&read_file(path)?)?;
    let general = is_general_position(&arr, 1e-8);
    let regions = enumerate_regions(&arr).map_err(CliError::from)?;
    let expected = expected_region_count(&arr);
    let matches = general && BigUint::from(regions.len()) == expected;
    let report = json!({
        "dim": arr.dim(),
        "pencils": arr.pencils().len(),
        "hyperplanes": arr.hyperplane_count(),
        "general_position": general,
        "region_count": regions.len(),
        "expected_regions": expected.to_string(),
        "count_matches_formula": matches,
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
    if general && !matches {
        return Err(CliError::violation(
            "general-position arrangement disagrees with the region-count formula",
        ));
    }
    Ok(())
}

fn cmd_random_audit(
    trials: usize,
    seed: u64,
    cap_patterns: Option<u128>,
    inject_degenerate: bool,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cap = cap_patterns.unwrap_or_else(audit::default_pattern_cap);
    let mut text = String::new();

    if inject_degenerate {
        // Duplicate offsets must be rejected at validation; rejection is
        // the correct behavior, not a violation.
        let bad = pwl_fixpoints::arrangements::ParallelPencil::new(
            Vector::new(vec![1.0]).expect("finite"),
            vec![0.0, 0.0],
        );
        match bad {
            Err(e) => {
                let _ = writeln!(text, "inject-degenerate: rejected at validation ({e})");
            }
            Ok(_) => {
                emit(out, &text)?;
                return Err(CliError::violation(
                    "degenerate arrangement was accepted by validation",
                ));
            }
        }
    }

    let reports = audit::run_all_suites(trials, seed, cap).map_err(CliError::from)?;
    let mut all_passed = true;
    for r in &reports {
        let _ = writeln!(text, "suite {}: {}/{} passed", r.name, r.passes, r.trials);
        if !r.passed() {
            all_passed = false;
            for f in &r.failures {
                let _ = writeln!(text, "counterexample:\n{f}");
            }
        }
    }
    let _ = writeln!(text, "result: {}", if all_passed { "pass" } else { "FAIL" });
    emit(out, &text)?;
    if !all_passed {
        return Err(CliError::violation("audit found a counterexample"));
    }
    Ok(())
}
