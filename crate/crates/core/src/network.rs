//! Feed-forward fully-connected networks with ReLU or identity activations.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Per-layer activation. Only the two functions the counting algorithms
/// need; anything else is rejected at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

/// One affine layer followed by an element-wise activation.
///
/// `weights` is row-major: `weights[i]` holds the incoming weights of output
/// unit `i`, so the row count equals the bias length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        let layer = Layer { weights, biases, activation };
        layer.validate(None)?;
        Ok(layer)
    }

    pub fn out_dim(&self) -> usize {
        self.biases.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn validate(&self, index: Option<usize>) -> Result<()> {
        let at = |msg: String| match index {
            Some(i) => Error::InvalidNetwork(format!("layer {i}: {msg}")),
            None => Error::InvalidNetwork(msg),
        };
        if self.weights.len() != self.biases.len() {
            return Err(at(format!(
                "{} weight rows but {} biases",
                self.weights.len(),
                self.biases.len()
            )));
        }
        if self.weights.is_empty() {
            return Err(at("empty layer".into()));
        }
        let in_dim = self.weights[0].len();
        for (r, row) in self.weights.iter().enumerate() {
            if row.len() != in_dim {
                return Err(at(format!("weight row {r} has {} entries, expected {in_dim}", row.len())));
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(at(format!("non-finite weight in row {r}")));
            }
        }
        if self.biases.iter().any(|b| !b.is_finite()) {
            return Err(at("non-finite bias".into()));
        }
        Ok(())
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.iter().zip(&self.biases) {
            let pre: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
            out.push(self.activation.apply(pre));
        }
    }
}

/// An ordered stack of layers. Immutable after construction; safe to share
/// across worker threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            layer.validate(Some(i))?;
        }
        for i in 1..layers.len() {
            if layers[i].in_dim() != layers[i - 1].out_dim() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    layers[i].in_dim(),
                    i - 1,
                    layers[i - 1].out_dim()
                )));
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Deterministic forward propagation: per layer `a = act(W v + b)`.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: input.len() });
        }
        let mut cur = input.to_vec();
        let mut next = Vec::with_capacity(self.layers[0].out_dim());
        for layer in &self.layers {
            layer.forward(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }
}

/// On-disk JSON form. `version` is fixed at 1; activations are lowercase
/// strings so hand-written model files stay readable.
#[derive(Serialize, Deserialize)]
struct NetworkFile {
    version: u32,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    activation: String,
}

pub fn load_json(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_json(&text)
}

pub fn parse_json(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text)
        .map_err(|e| Error::Schema { path: format!("$ (line {})", e.line()), msg: e.to_string() })?;
    if file.version != 1 {
        return Err(Error::Schema {
            path: "$.version".into(),
            msg: format!("unsupported version {}", file.version),
        });
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, lf) in file.layers.into_iter().enumerate() {
        let activation = match lf.activation.as_str() {
            "relu" => Activation::Relu,
            "identity" => Activation::Identity,
            other => return Err(Error::UnsupportedActivation(other.to_string())),
        };
        if lf.weights.len() != lf.biases.len() {
            return Err(Error::Schema {
                path: format!("$.layers[{i}]"),
                msg: format!("{} weight rows but {} biases", lf.weights.len(), lf.biases.len()),
            });
        }
        layers.push(Layer { weights: lf.weights, biases: lf.biases, activation });
    }
    Network::new(layers)
}

pub fn save_json(net: &Network, path: &Path) -> Result<()> {
    let text = to_json(net);
    std::fs::write(path, text)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn to_json(net: &Network) -> String {
    let file = NetworkFile {
        version: 1,
        layers: net
            .layers
            .iter()
            .map(|l| LayerFile {
                weights: l.weights.clone(),
                biases: l.biases.clone(),
                activation: match l.activation {
                    Activation::Relu => "relu".into(),
                    Activation::Identity => "identity".into(),
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

/// The two-layer running-example network: hidden weights
/// [[5,-1],[-1,3]] with ReLU, output weights [-1,3], all biases zero.
pub fn example_network() -> Network {
    Network::new(vec![
        Layer {
            weights: vec![vec![5.0, -1.0], vec![-1.0, 3.0]],
            biases: vec![0.0, 0.0],
            activation: Activation::Relu,
        },
        Layer {
            weights: vec![vec![-1.0, 3.0]],
            biases: vec![0.0],
            activation: Activation::Identity,
        },
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_forward_is_minus_five() {
        let net = example_network();
        assert_eq!(net.forward(&[1.0, 0.0]).unwrap(), vec![-5.0]);
    }

    #[test]
    fn example_forward_zero_one() {
        // 3*relu(3) + (-1)*relu(-1) = 9
        let net = example_network();
        assert_eq!(net.forward(&[0.0, 1.0]).unwrap(), vec![9.0]);
    }

    #[test]
    fn identity_layer_passes_through() {
        let net = Network::new(vec![Layer {
            weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            biases: vec![0.0, 0.0],
            activation: Activation::Identity,
        }])
        .unwrap();
        assert_eq!(net.forward(&[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = example_network();
        assert!(matches!(net.forward(&[1.0]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn mismatched_bias_length_names_layer() {
        let text = r#"{"version":1,"layers":[{"weights":[[1.0]],"biases":[0.0,0.0],"activation":"identity"}]}"#;
        let err = parse_json(text).unwrap_err();
        assert!(err.to_string().contains("layers[0]"), "{err}");
    }

    #[test]
    fn unknown_activation_rejected() {
        let text = r#"{"version":1,"layers":[{"weights":[[1.0]],"biases":[0.0],"activation":"tanh"}]}"#;
        assert!(matches!(parse_json(text), Err(Error::UnsupportedActivation(_))));
    }

    #[test]
    fn json_round_trip_preserves_forward_exactly() {
        let net = example_network();
        let reloaded = parse_json(&to_json(&net)).unwrap();
        for x in [[1.0, 0.0], [0.0, 1.0], [0.25, 0.75], [0.123, 0.456]] {
            assert_eq!(net.forward(&x).unwrap(), reloaded.forward(&x).unwrap());
        }
    }
}
