//! JSON file formats: networks, arrangements, fixed-point reports and
//! scalar piecewise-linear functions.
//!
//! Parsing goes through serde into plain DTO structs and then through the
//! domain constructors, so every file-level validation error is the same
//! one the API raises. serde_json error messages carry line/column info.

use crate::arrangements::{Arrangement, ArrangementError, ParallelPencil};
use crate::linalg::{LinalgError, Matrix, Vector};
use crate::network::fixed_points::{FixedPointKind, FixedPointRecord, ScalarPwl};
use crate::network::{Layer, LayeredNetwork, NetworkError, OneHiddenNetwork, PwlActivation};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid file: {0}")]
    Validation(String),
}

impl From<NetworkError> for IoError {
    fn from(e: NetworkError) -> Self {
        IoError::Validation(e.to_string())
    }
}

impl From<ArrangementError> for IoError {
    fn from(e: ArrangementError) -> Self {
        IoError::Validation(e.to_string())
    }
}

impl From<LinalgError> for IoError {
    fn from(e: LinalgError) -> Self {
        IoError::Validation(e.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ActivationJson {
    Named { name: String },
    Custom { breakpoints: Vec<f64>, slopes: Vec<f64>, value_at_zero: f64 },
}

impl ActivationJson {
    fn to_domain(&self) -> Result<PwlActivation, IoError> {
        match self {
            ActivationJson::Named { name } => match name.as_str() {
                "relu" => Ok(PwlActivation::relu()),
                "hard_tanh" => Ok(PwlActivation::hard_tanh()),
                other => Err(IoError::Validation(format!(
                    "unknown activation name {other:?} (expected \"relu\" or \"hard_tanh\")"
                ))),
            },
            ActivationJson::Custom { breakpoints, slopes, value_at_zero } => {
                Ok(PwlActivation::new(breakpoints.clone(), slopes.clone(), *value_at_zero)?)
            }
        }
    }

    fn from_domain(act: &PwlActivation) -> Self {
        if act == &PwlActivation::relu() {
            ActivationJson::Named { name: "relu".into() }
        } else if act == &PwlActivation::hard_tanh() {
            ActivationJson::Named { name: "hard_tanh".into() }
        } else {
            ActivationJson::Custom {
                breakpoints: act.breakpoints().to_vec(),
                slopes: act.slopes().to_vec(),
                value_at_zero: act.value_at_zero(),
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerJson {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
enum NetworkJson {
    #[serde(rename = "layered")]
    Layered {
        activation: ActivationJson,
        layers: Vec<LayerJson>,
        #[serde(default = "default_true")]
        apply_activation_on_last: bool,
        #[serde(default)]
        residual: bool,
    },
    #[serde(rename = "one_hidden")]
    OneHidden {
        activation: ActivationJson,
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        #[serde(rename = "V")]
        v: Vec<Vec<f64>>,
        u: Vec<f64>,
        z: Vec<f64>,
    },
}

/// A parsed network file, keeping the one-hidden form distinct so its
/// dedicated analyses stay available.
#[derive(Debug, Clone)]
pub enum NetworkDoc {
    Layered(LayeredNetwork),
    OneHidden(OneHiddenNetwork),
}

impl NetworkDoc {
    pub fn to_layered(&self) -> LayeredNetwork {
        match self {
            NetworkDoc::Layered(net) => net.clone(),
            NetworkDoc::OneHidden(net) => net.to_layered(),
        }
    }
}

pub fn parse_network(text: &str) -> Result<NetworkDoc, IoError> {
    let dto: NetworkJson = serde_json::from_str(text)?;
    match dto {
        NetworkJson::Layered { activation, layers, apply_activation_on_last, residual } => {
            let act = activation.to_domain()?;
            let layers = layers
                .into_iter()
                .map(|l| Ok(Layer::new(Matrix::from_rows(&l.weights)?, Vector::new(l.bias)?)?))
                .collect::<Result<Vec<_>, IoError>>()?;
            Ok(NetworkDoc::Layered(LayeredNetwork::new(
                layers,
                act,
                apply_activation_on_last,
                residual,
            )?))
        }
        NetworkJson::OneHidden { activation, w, v, u, z } => {
            let act = activation.to_domain()?;
            Ok(NetworkDoc::OneHidden(OneHiddenNetwork::new(
                Matrix::from_rows(&w)?,
                Matrix::from_rows(&v)?,
                Vector::new(u)?,
                Vector::new(z)?,
                act,
            )?))
        }
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn network_to_json(doc: &NetworkDoc) -> String {
    let dto = match doc {
        NetworkDoc::Layered(net) => NetworkJson::Layered {
            activation: ActivationJson::from_domain(net.activation()),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerJson {
                    weights: matrix_rows(&l.weights),
                    bias: l.bias.as_slice().to_vec(),
                })
                .collect(),
            apply_activation_on_last: net.apply_activation_on_last(),
            residual: net.residual_input_to_output(),
        },
        NetworkDoc::OneHidden(net) => NetworkJson::OneHidden {
            activation: ActivationJson::from_domain(net.activation()),
            w: matrix_rows(net.w()),
            v: matrix_rows(net.v()),
            u: net.u().as_slice().to_vec(),
            z: net.z().as_slice().to_vec(),
        },
    };
    serde_json::to_string_pretty(&dto).expect("serializable")
}

#[derive(Debug, Serialize, Deserialize)]
struct PencilJson {
    normal: Vec<f64>,
    offsets: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArrangementJson {
    dim: usize,
    pencils: Vec<PencilJson>,
}

pub fn parse_arrangement(text: &str) -> Result<Arrangement, IoError> {
    let dto: ArrangementJson = serde_json::from_str(text)?;
    let pencils = dto
        .pencils
        .into_iter()
        .map(|p| Ok(ParallelPencil::new(Vector::new(p.normal)?, p.offsets)?))
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Arrangement::new(dto.dim, pencils)?)
}

pub fn arrangement_to_json(arr: &Arrangement) -> String {
    let dto = ArrangementJson {
        dim: arr.dim(),
        pencils: arr
            .pencils()
            .iter()
            .map(|p| PencilJson {
                normal: p.normal().as_slice().to_vec(),
                offsets: p.offsets().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serializable")
}

/// Fixed-point records as a JSON array. Continuum records carry their
/// spanning directions alongside the witness location.
pub fn fixed_point_report(records: &[FixedPointRecord]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|r| {
                let mut obj = json!({
                    "kind": match r.kind {
                        FixedPointKind::Isolated => "isolated",
                        FixedPointKind::Continuum => "continuum",
                    },
                    "location": r.location.as_slice(),
                    "pattern": r.pattern,
                    "jacobian_norm": r.jacobian_norm,
                    "classification": r.classification.as_str(),
                });
                if r.kind == FixedPointKind::Continuum {
                    obj["basis"] = json!(r
                        .continuum_basis
                        .iter()
                        .map(|v| v.as_slice().to_vec())
                        .collect::<Vec<_>>());
                }
                obj
            })
            .collect(),
    )
}

/// Scalar piecewise-linear JSON: breakpoints, value at the left end of
/// the domain, per-piece slopes.
pub fn scalar_pwl_json(pwl: &ScalarPwl) -> Value {
    json!({
        "breakpoints": pwl.breakpoints(),
        "left_value": pwl.left_value(),
        "slopes": pwl.slopes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangements::random_arrangement;
    use proptest::prelude::*;

    #[test]
    fn network_round_trip_layered() {
        let text = r#"{
            "kind": "layered",
            "activation": {"name": "relu"},
            "layers": [{"weights": [[1.0], [0.5]], "bias": [0.0, -0.25]},
                       {"weights": [[1.0, -1.0]], "bias": [0.1]}],
            "apply_activation_on_last": false,
            "residual": true
        }"#;
        let doc = parse_network(text).unwrap();
        let json = network_to_json(&doc);
        let doc2 = parse_network(&json).unwrap();
        match (&doc, &doc2) {
            (NetworkDoc::Layered(a), NetworkDoc::Layered(b)) => assert_eq!(a, b),
            _ => panic!("expected layered"),
        }
    }

    #[test]
    fn network_round_trip_one_hidden_custom_activation() {
        let text = r#"{
            "kind": "one_hidden",
            "activation": {"breakpoints": [-0.5, 0.5], "slopes": [0.0, 2.0, 0.0], "value_at_zero": 0.0},
            "W": [[2.0, 0.0]],
            "V": [[1.0], [-1.0]],
            "u": [0.0, 0.1],
            "z": [0.5]
        }"#;
        let doc = parse_network(text).unwrap();
        let json = network_to_json(&doc);
        let doc2 = parse_network(&json).unwrap();
        match (&doc, &doc2) {
            (NetworkDoc::OneHidden(a), NetworkDoc::OneHidden(b)) => assert_eq!(a, b),
            _ => panic!("expected one_hidden"),
        }
    }

    #[test]
    fn layered_defaults() {
        let text = r#"{
            "kind": "layered",
            "activation": {"name": "hard_tanh"},
            "layers": [{"weights": [[2.0]], "bias": [0.0]}]
        }"#;
        match parse_network(text).unwrap() {
            NetworkDoc::Layered(net) => {
                assert!(net.apply_activation_on_last());
                assert!(!net.residual_input_to_output());
            }
            _ => panic!("expected layered"),
        }
    }

    #[test]
    fn parse_errors_carry_line_info() {
        let err = parse_network("{\n  \"kind\": \"layered\",\n  broken\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "missing line info: {msg}");
    }

    #[test]
    fn bad_activation_name_rejected() {
        let text = r#"{
            "kind": "layered",
            "activation": {"name": "sigmoid"},
            "layers": [{"weights": [[1.0]], "bias": [0.0]}]
        }"#;
        assert!(matches!(parse_network(text), Err(IoError::Validation(_))));
    }

    #[test]
    fn ragged_weights_rejected() {
        let text = r#"{
            "kind": "layered",
            "activation": {"name": "relu"},
            "layers": [{"weights": [[1.0, 2.0], [3.0]], "bias": [0.0, 0.0]}]
        }"#;
        assert!(parse_network(text).is_err());
    }

    #[test]
    fn arrangement_duplicate_offsets_rejected() {
        let text = r#"{"dim": 1, "pencils": [{"normal": [1.0], "offsets": [0.0, 0.0]}]}"#;
        assert!(matches!(parse_arrangement(text), Err(IoError::Validation(_))));
    }

    #[test]
    fn report_shape() {
        let net = {
            let w = Matrix::from_rows(&[vec![2.0]]).unwrap();
            OneHiddenNetwork::tied(w, PwlActivation::hard_tanh()).unwrap().to_layered()
        };
        let records = crate::network::fixed_points::fixed_points(&net).unwrap();
        let report = fixed_point_report(&records);
        let arr = report.as_array().unwrap();
        assert_eq!(arr.len(), 3);
        for rec in arr {
            assert!(rec.get("kind").is_some());
            assert!(rec.get("location").is_some());
            assert!(rec.get("pattern").is_some());
            assert!(rec.get("classification").is_some());
        }
    }

    #[test]
    fn scalar_pwl_fields() {
        let spec = crate::sawtooth::SawtoothSpec::new(1, 3).unwrap();
        let pwl = crate::sawtooth::build_sawtooth_scalar(&spec).unwrap();
        let v = scalar_pwl_json(&pwl);
        assert_eq!(v["breakpoints"].as_array().unwrap().len(), 3);
        assert_eq!(v["slopes"].as_array().unwrap().len(), 4);
        assert!(v["left_value"].as_f64().unwrap() < 0.0);
    }

    proptest! {
        #[test]
        fn arrangement_round_trip(seed in 0u64..50) {
            let arr = random_arrangement(2, 3, 2, seed).unwrap();
            let json = arrangement_to_json(&arr);
            let back = parse_arrangement(&json).unwrap();
            prop_assert_eq!(arr, back);
        }
    }
}
