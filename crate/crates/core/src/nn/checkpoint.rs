//! Plain-text network checkpoints.
//!
//! ```text
//! mlp v1
//! activation tanh identity
//! layers 2
//! layer 16 31
//! <16*31 weights, row-major, space separated>
//! <16 biases>
//! layer 4 16
//! ...
//! ```
//!
//! Floats are written in shortest round-trip exponent form, so a reload is
//! bitwise identical.

use std::fmt::Write as _;

use super::matrix::Matrix;
use super::mlp::{Activation, Dense, MlpNetwork};
use crate::error::{Error, Result};

const MAGIC: &str = "mlp v1";

fn push_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:e}").expect("writing to a String");
    }
    out.push('\n');
}

pub fn write_mlp(net: &MlpNetwork, out: &mut String) {
    out.push_str(MAGIC);
    out.push('\n');
    writeln!(
        out,
        "activation {} {}",
        net.hidden_activation().name(),
        net.output_activation().name()
    )
    .expect("writing to a String");
    writeln!(out, "layers {}", net.layers().len()).expect("writing to a String");
    for l in net.layers() {
        writeln!(out, "layer {} {}", l.out_dim(), l.in_dim()).expect("writing to a String");
        push_values(out, l.weight.as_slice());
        push_values(out, &l.bias);
    }
}

pub fn mlp_to_string(net: &MlpNetwork) -> String {
    let mut s = String::new();
    write_mlp(net, &mut s);
    s
}

/// Line cursor shared by the network and model checkpoint readers.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Data("checkpoint truncated".into()))
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    pub(crate) fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next_line()?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(key) {
            return Err(Error::Data(format!("checkpoint line {n}: expected `{key}`")));
        }
        Ok((n, fields.collect()))
    }
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Data(format!("checkpoint line {line}: bad integer `{s}`")))
}

fn parse_values(lines: &mut Lines<'_>, expect: usize) -> Result<Vec<f64>> {
    let (n, line) = lines.next_line()?;
    let vals = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Data(format!("checkpoint line {n}: bad number `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != expect {
        return Err(Error::Data(format!(
            "checkpoint line {n}: {} values, expected {expect}",
            vals.len()
        )));
    }
    Ok(vals)
}

pub(crate) fn read_mlp_from(lines: &mut Lines<'_>) -> Result<MlpNetwork> {
    let (n, magic) = lines.next_line()?;
    if magic.trim() != MAGIC {
        return Err(Error::Data(format!("checkpoint line {n}: expected `{MAGIC}`")));
    }
    let (n, act) = lines.keyed("activation")?;
    let parse_act = |s: Option<&&str>| {
        s.and_then(|s| Activation::parse(s))
            .ok_or_else(|| Error::Data(format!("checkpoint line {n}: bad activation")))
    };
    let hidden = parse_act(act.first())?;
    let output = parse_act(act.get(1))?;
    let (n, count) = lines.keyed("layers")?;
    let count = parse_usize(count.first().copied().unwrap_or(""), n)?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, dims) = lines.keyed("layer")?;
        if dims.len() != 2 {
            return Err(Error::Data(format!("checkpoint line {n}: expected `layer OUT IN`")));
        }
        let (rows, cols) = (parse_usize(dims[0], n)?, parse_usize(dims[1], n)?);
        let weight = Matrix::from_vec(rows, cols, parse_values(lines, rows * cols)?)?;
        let bias = parse_values(lines, rows)?;
        layers.push(Dense { weight, bias });
    }
    MlpNetwork::new(layers, hidden, output)
}

pub fn mlp_from_str(text: &str) -> Result<MlpNetwork> {
    read_mlp_from(&mut Lines::new(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::RngStream;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bitwise(seed in any::<u64>(), hidden in 1usize..6, depth in 1usize..4) {
            let mut rng = RngStream::new(seed);
            let mut dims = vec![3];
            dims.extend(std::iter::repeat_n(hidden, depth));
            dims.push(2);
            let mut net = MlpNetwork::init(&dims, Activation::Relu, Activation::Identity, &mut rng).unwrap();
            for b in net.layers_mut().iter_mut().flat_map(|l| l.bias.iter_mut()) {
                *b = rng.normal() * 1e-3;
            }
            let back = mlp_from_str(&mlp_to_string(&net)).unwrap();
            for (a, b) in net.params().iter().zip(back.params()) {
                let bits_a: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(bits_a, bits_b);
            }
            prop_assert_eq!(back.hidden_activation(), Activation::Relu);
        }
    }

    #[test]
    fn truncated_checkpoint_errors() {
        let mut rng = RngStream::new(1);
        let net = MlpNetwork::init(&[2, 3, 1], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let text = mlp_to_string(&net);
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(mlp_from_str(&cut).is_err());
    }
}
