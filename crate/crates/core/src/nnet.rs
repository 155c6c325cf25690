//! Parser for the NNet plain-text network format (the ACAS Xu convention).
//!
//! Layout after the leading `//` comment block:
//! 1. numLayers, inputSize, outputSize, maxLayerSize
//! 2. layer sizes (numLayers + 1 values)
//! 3. an unused flag
//! 4. per-input minimums
//! 5. per-input maximums
//! 6. normalization means (inputSize + 1 values, last one for the output)
//! 7. normalization ranges (same shape)
//! 8. per layer: weight rows, then one bias per line
//!
//! Every layer is ReLU-activated except the last, which is affine.
//! Normalization constants are recorded but *not* applied; properties in
//! this crate are stated over raw inputs unless the caller explicitly folds
//! the normalization in with [`apply_normalization`].

use crate::error::{Error, Result};
use crate::network::{Activation, Layer, Network};
use std::path::Path;

/// Input/output normalization constants carried by an NNet file.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    /// Means for each input plus one trailing entry for the outputs.
    pub means: Vec<f64>,
    /// Ranges for each input plus one trailing entry for the outputs.
    pub ranges: Vec<f64>,
}

pub fn load_nnet(path: &Path) -> Result<(Network, Normalization)> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_nnet(&text)
}

/// Token stream over the non-comment lines, tracking line numbers for
/// error reporting.
struct Tokens<'a> {
    lines: Vec<(usize, &'a str)>,
    cursor: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with("//"))
            .collect();
        Tokens { lines, cursor: 0 }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        let item = self.lines.get(self.cursor).copied().ok_or(Error::Parse {
            line: self.lines.last().map_or(0, |(n, _)| *n),
            msg: "unexpected end of file".into(),
        })?;
        self.cursor += 1;
        Ok(item)
    }

    fn next_numbers(&mut self, expected: Option<usize>) -> Result<Vec<f64>> {
        let (line, text) = self.next_line()?;
        let mut out = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("non-numeric token {tok:?}"),
            })?;
            out.push(v);
        }
        if let Some(n) = expected {
            if out.len() != n {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {n} values, found {}", out.len()),
                });
            }
        }
        Ok(out)
    }
}

pub fn parse_nnet(text: &str) -> Result<(Network, Normalization)> {
    let mut toks = Tokens::new(text);

    let header = toks.next_numbers(None)?;
    if header.len() < 3 {
        return Err(Error::Parse { line: 1, msg: "header needs at least 3 values".into() });
    }
    let num_layers = header[0] as usize;
    let input_size = header[1] as usize;
    let output_size = header[2] as usize;
    if num_layers == 0 || input_size == 0 || output_size == 0 {
        return Err(Error::Parse { line: 1, msg: "degenerate header sizes".into() });
    }

    let sizes_f = toks.next_numbers(Some(num_layers + 1))?;
    let sizes: Vec<usize> = sizes_f.iter().map(|v| *v as usize).collect();
    if sizes[0] != input_size || sizes[num_layers] != output_size {
        return Err(Error::Parse {
            line: 2,
            msg: format!("layer sizes {sizes:?} disagree with header"),
        });
    }

    toks.next_line()?; // unused flag
    let input_min = toks.next_numbers(Some(input_size))?;
    let input_max = toks.next_numbers(Some(input_size))?;
    let means = toks.next_numbers(Some(input_size + 1))?;
    let ranges = toks.next_numbers(Some(input_size + 1))?;

    let mut layers = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let (in_dim, out_dim) = (sizes[l], sizes[l + 1]);
        let mut weights = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            weights.push(toks.next_numbers(Some(in_dim))?);
        }
        let mut biases = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            biases.push(toks.next_numbers(Some(1))?[0]);
        }
        let activation =
            if l + 1 == num_layers { Activation::Identity } else { Activation::Relu };
        layers.push(Layer { weights, biases, activation });
    }

    let net = Network::new(layers)?;
    Ok((net, Normalization { input_min, input_max, means, ranges }))
}

/// Fold the NNet normalization into the network's first and last affine
/// layers, so the returned network accepts raw inputs and emits raw outputs:
/// inputs are mapped through `(x - mean) / range` and the output is scaled
/// back by `y * range_out + mean_out`.
pub fn apply_normalization(net: &Network, norm: &Normalization) -> Result<Network> {
    let d = net.input_dim();
    if norm.means.len() != d + 1 || norm.ranges.len() != d + 1 {
        return Err(Error::InvalidNetwork("normalization shape mismatch".into()));
    }
    let mut layers = net.layers().to_vec();

    {
        let first = &mut layers[0];
        for (row, bias) in first.weights.iter_mut().zip(first.biases.iter_mut()) {
            let mut shift = 0.0;
            for (j, w) in row.iter_mut().enumerate() {
                shift += *w * norm.means[j] / norm.ranges[j];
                *w /= norm.ranges[j];
            }
            *bias -= shift;
        }
    }
    {
        let (out_mean, out_range) = (norm.means[d], norm.ranges[d]);
        let last = layers.last_mut().unwrap();
        if last.activation != Activation::Identity {
            return Err(Error::InvalidNetwork(
                "cannot denormalize a ReLU-activated output layer".into(),
            ));
        }
        for (row, bias) in last.weights.iter_mut().zip(last.biases.iter_mut()) {
            for w in row.iter_mut() {
                *w *= out_range;
            }
            *bias = *bias * out_range + out_mean;
        }
    }
    Network::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
// two-input toy network
2,2,1,2,
2,2,1,
0,
0.0,0.0,
1.0,1.0,
0.0,0.0,0.0,
1.0,1.0,1.0,
5.0,-1.0,
-1.0,3.0,
0.0,
0.0,
-1.0,3.0,
0.0,
";

    #[test]
    fn parses_example_and_forward_matches() {
        let (net, _) = parse_nnet(EXAMPLE).unwrap();
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.forward(&[1.0, 0.0]).unwrap(), vec![-5.0]);
    }

    #[test]
    fn empty_file_is_parse_error() {
        assert!(matches!(parse_nnet(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn non_numeric_token_named_in_error() {
        let bad = EXAMPLE.replace("5.0,-1.0", "5.0,oops");
        match parse_nnet(&bad) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("oops"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_weights_rejected() {
        let mut lines: Vec<&str> = EXAMPLE.lines().collect();
        lines.truncate(lines.len() - 3);
        assert!(parse_nnet(&lines.join("\n")).is_err());
    }

    #[test]
    fn identity_normalization_is_a_no_op() {
        let (net, norm) = parse_nnet(EXAMPLE).unwrap();
        let folded = apply_normalization(&net, &norm).unwrap();
        for x in [[1.0, 0.0], [0.3, 0.9]] {
            assert_eq!(net.forward(&x).unwrap(), folded.forward(&x).unwrap());
        }
    }

    #[test]
    fn folded_normalization_matches_manual() {
        let (net, _) = parse_nnet(EXAMPLE).unwrap();
        let norm = Normalization {
            input_min: vec![0.0, 0.0],
            input_max: vec![2.0, 2.0],
            means: vec![1.0, 0.5, 2.0],
            ranges: vec![2.0, 4.0, 3.0],
        };
        let folded = apply_normalization(&net, &norm).unwrap();
        let x = [1.7, 0.2];
        let manual = {
            let z = [(x[0] - 1.0) / 2.0, (x[1] - 0.5) / 4.0];
            net.forward(&z).unwrap()[0] * 3.0 + 2.0
        };
        let got = folded.forward(&x).unwrap()[0];
        assert!((got - manual).abs() < 1e-12, "{got} vs {manual}");
    }
}
