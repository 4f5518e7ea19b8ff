//! Structured-text profile document.
//!
//! ```json
//! { "channels": 1, "half_width": 1.0,
//!   "left_tail":  {"g": [[1]], "v": [[0]]},
//!   "right_tail": {"g": [[1]], "v": [[0]]},
//!   "layers": [ {"kind": "constant", "z": [-1, 1], "g": [[1]], "v": [[10]]} ] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{Coefficients, Layer, LayerKind, MediumProfile, SampleNode};
use crate::num::{RMat, Real};

/// Row-major list of rows.
pub type MatrixDoc = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailDoc {
    pub g: MatrixDoc,
    pub v: MatrixDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub z: f64,
    pub g: MatrixDoc,
    pub v: MatrixDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerDoc {
    Constant { z: [f64; 2], g: MatrixDoc, v: MatrixDoc },
    Sampled { nodes: Vec<NodeDoc> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub channels: usize,
    pub half_width: f64,
    pub left_tail: TailDoc,
    pub right_tail: TailDoc,
    pub layers: Vec<LayerDoc>,
}

fn to_matrix<T: Real>(rows: &MatrixDoc, what: &str) -> Result<RMat<T>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what}: ragged matrix rows")));
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| T::lit(rows[i][j])))
}

fn from_matrix<T: Real>(m: &RMat<T>) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].as_f64()).collect())
        .collect()
}

impl ProfileDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn to_profile<T: Real>(&self) -> Result<MediumProfile<T>> {
        let tail = |t: &TailDoc, what: &str| -> Result<Coefficients<T>> {
            Ok(Coefficients {
                g: to_matrix(&t.g, &format!("{what}.g"))?,
                v: to_matrix(&t.v, &format!("{what}.v"))?,
            })
        };
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| -> Result<Layer<T>> {
                match l {
                    LayerDoc::Constant { z, g, v } => Ok(Layer::constant(
                        T::lit(z[0]),
                        T::lit(z[1]),
                        to_matrix(g, &format!("layers[{i}].g"))?,
                        to_matrix(v, &format!("layers[{i}].v"))?,
                    )),
                    LayerDoc::Sampled { nodes } => Ok(Layer::sampled(
                        nodes
                            .iter()
                            .enumerate()
                            .map(|(k, n)| {
                                Ok(SampleNode {
                                    z: T::lit(n.z),
                                    g: to_matrix(&n.g, &format!("layers[{i}].nodes[{k}].g"))?,
                                    v: to_matrix(&n.v, &format!("layers[{i}].nodes[{k}].v"))?,
                                })
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MediumProfile {
            channels: self.channels,
            half_width: T::lit(self.half_width),
            layers,
            left_tail: tail(&self.left_tail, "left_tail")?,
            right_tail: tail(&self.right_tail, "right_tail")?,
        })
    }

    pub fn from_profile<T: Real>(p: &MediumProfile<T>) -> Self {
        let tail = |c: &Coefficients<T>| TailDoc {
            g: from_matrix(&c.g),
            v: from_matrix(&c.v),
        };
        Self {
            channels: p.channels,
            half_width: p.half_width.as_f64(),
            left_tail: tail(&p.left_tail),
            right_tail: tail(&p.right_tail),
            layers: p
                .layers
                .iter()
                .map(|l| match &l.kind {
                    LayerKind::Constant(c) => LayerDoc::Constant {
                        z: [l.z_lo.as_f64(), l.z_hi.as_f64()],
                        g: from_matrix(&c.g),
                        v: from_matrix(&c.v),
                    },
                    LayerKind::Sampled(nodes) => LayerDoc::Sampled {
                        nodes: nodes
                            .iter()
                            .map(|n| NodeDoc {
                                z: n.z.as_f64(),
                                g: from_matrix(&n.g),
                                v: from_matrix(&n.v),
                            })
                            .collect(),
                    },
                })
                .collect(),
        }
    }
}

/// Reads and parses a profile document from disk.
pub fn load_profile<T: Real>(path: &Path) -> Result<MediumProfile<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ProfileDoc::from_json(&text)?.to_profile()
}

#[cfg(test)]
mod tests {
    use super::*;

    const WELL: &str = r#"{
        "channels": 1, "half_width": 1.0,
        "left_tail": {"g": [[1]], "v": [[0]]},
        "right_tail": {"g": [[1]], "v": [[0]]},
        "layers": [
            {"kind": "constant", "z": [-1, 0], "g": [[1]], "v": [[10]]},
            {"kind": "sampled", "nodes": [
                {"z": 0, "g": [[1]], "v": [[10]]},
                {"z": 1, "g": [[1]], "v": [[8]]}
            ]}
        ]
    }"#;

    #[test]
    fn parses_both_layer_kinds() {
        let p: MediumProfile<f64> = ProfileDoc::from_json(WELL).unwrap().to_profile().unwrap();
        assert_eq!(p.layers.len(), 2);
        assert!(p.layers[0].is_constant());
        assert_eq!(p.layers[1].z_lo, 0.0);
        assert_eq!(p.layers[1].z_hi, 1.0);
        let back = ProfileDoc::from_profile(&p);
        assert_eq!(back, ProfileDoc::from_json(WELL).unwrap());
    }

    #[test]
    fn ragged_matrix_rejected() {
        let bad = WELL.replace(r#""right_tail": {"g": [[1]]"#, r#""right_tail": {"g": [[1, 0], [1]]"#);
        let doc = ProfileDoc::from_json(&bad).unwrap();
        assert!(matches!(doc.to_profile::<f64>(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_kind_rejected() {
        let bad = WELL.replace("\"constant\"", "\"linear\"");
        assert!(ProfileDoc::from_json(&bad).is_err());
    }
}
