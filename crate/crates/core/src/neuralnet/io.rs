//! Plain-text model files.
//!
//! ```text
//! mlp-format 1
//! widths 6 15 39 100
//! hidden relu
//! output sigmoid
//! latent 2
//! layer 0 6 15
//! <6 lines of 15 weights>
//! bias <15 values>
//! ...
//! ```
//!
//! Values carry 17 significant digits, so a written model reads back
//! bit-identical.

use std::io::{BufRead, Write};

use super::{HiddenActivation, Layer, MlpConfig, MlpParams, NetError, OutputActivation};
use crate::linalg::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_model<W: Write>(params: &MlpParams, mut w: W) -> std::io::Result<()> {
    let c = &params.config;
    writeln!(w, "mlp-format {MODEL_FORMAT_VERSION}")?;
    let widths: Vec<String> = c.widths.iter().map(usize::to_string).collect();
    writeln!(w, "widths {}", widths.join(" "))?;
    writeln!(w, "hidden {}", c.hidden_activation.name())?;
    writeln!(w, "output {}", c.output_activation.name())?;
    writeln!(w, "latent {}", c.latent_index)?;
    for (l, layer) in params.layers.iter().enumerate() {
        writeln!(w, "layer {l} {} {}", layer.weights.rows(), layer.weights.cols())?;
        for r in 0..layer.weights.rows() {
            writeln!(w, "{}", join(layer.weights.row(r)))?;
        }
        writeln!(w, "bias {}", join(&layer.bias))?;
    }
    Ok(())
}

fn bad(line: usize, msg: &str) -> NetError {
    NetError::Format(format!("line {line}: {msg}"))
}

struct Lines<I> {
    inner: I,
}

impl<I: Iterator<Item = (usize, std::io::Result<String>)>> Lines<I> {
    fn next(&mut self, what: &str) -> Result<(usize, String), NetError> {
        match self.inner.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(e))) => Err(NetError::Io(e)),
            None => Err(NetError::Format(format!("unexpected end of file, expected {what}"))),
        }
    }

    /// Next line, which must read `key rest`; returns `rest`.
    fn keyed(&mut self, key: &str) -> Result<(usize, String), NetError> {
        let (n, l) = self.next(key)?;
        let rest = l
            .strip_prefix(key)
            .and_then(|s| s.strip_prefix(' '))
            .ok_or_else(|| bad(n, &format!("expected `{key} ...`")))?;
        Ok((n, rest.to_string()))
    }
}

pub fn read_model<R: BufRead>(r: R) -> Result<MlpParams, NetError> {
    let mut lines = Lines { inner: r.lines().enumerate() };
    let (n, version) = lines.keyed("mlp-format")?;
    if version.trim() != MODEL_FORMAT_VERSION.to_string() {
        return Err(bad(n, &format!("unsupported format version {version:?}")));
    }
    let (n, widths) = lines.keyed("widths")?;
    let widths: Vec<usize> = widths
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(n, "bad width")))
        .collect::<Result<_, _>>()?;
    let (n, hidden) = lines.keyed("hidden")?;
    let hidden_activation =
        HiddenActivation::parse(hidden.trim()).ok_or_else(|| bad(n, "unknown hidden activation"))?;
    let (n, output) = lines.keyed("output")?;
    let output_activation =
        OutputActivation::parse(output.trim()).ok_or_else(|| bad(n, "unknown output activation"))?;
    let (n, latent) = lines.keyed("latent")?;
    let latent_index = latent.trim().parse().map_err(|_| bad(n, "bad latent index"))?;
    let config = MlpConfig { widths, hidden_activation, output_activation, latent_index };
    config.validate()?;

    let parse_row = |n: usize, s: &str, len: usize| -> Result<Vec<f64>, NetError> {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(n, &format!("bad value {t:?}"))))
            .collect::<Result<_, _>>()?;
        if v.len() != len {
            return Err(bad(n, &format!("expected {len} values, found {}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad(n, "non-finite value"));
        }
        Ok(v)
    };

    let mut layers = Vec::with_capacity(config.num_layers());
    for (l, w) in config.widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let (n, head) = lines.keyed("layer")?;
        if head.split_whitespace().collect::<Vec<_>>() != [l.to_string(), fan_in.to_string(), fan_out.to_string()] {
            return Err(bad(n, &format!("expected `layer {l} {fan_in} {fan_out}`")));
        }
        let mut data = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in {
            let (n, row) = lines.next("weight row")?;
            data.extend(parse_row(n, &row, fan_out)?);
        }
        let (n, bias) = lines.keyed("bias")?;
        let bias = parse_row(n, &bias, fan_out)?;
        let weights = Matrix::from_vec(fan_in, fan_out, data).expect("checked finite");
        layers.push(Layer { weights, bias });
    }
    Ok(MlpParams { config, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::init_params;

    #[test]
    fn model_round_trip_is_exact() {
        let c = MlpConfig::new(vec![3, 5, 2, 4], OutputActivation::Sigmoid, 2).unwrap();
        let mut p = init_params(&c, 42).unwrap();
        p.layers[1].bias[0] = -1.0 / 3.0;
        let mut buf = Vec::new();
        write_model(&p, &mut buf).unwrap();
        let back = read_model(&buf[..]).unwrap();
        assert_eq!(back, p);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mlp-format 1\nwidths 3 5 2 4\nhidden relu\noutput sigmoid\nlatent 2\n"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let c = MlpConfig::new(vec![2, 2, 1], OutputActivation::Linear, 1).unwrap();
        let mut buf = Vec::new();
        write_model(&init_params(&c, 1).unwrap(), &mut buf).unwrap();
        buf.truncate(buf.len() - 30);
        assert!(matches!(read_model(&buf[..]), Err(NetError::Format(_))));
    }
}
