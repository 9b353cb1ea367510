//! Plain-text model files.
//!
//! ```text
//! RISKCAST-MODEL v1
//! kind hybrid
//! dims window=20 market=5 sentiment=4 statics=10
//! config conv_width=3 conv_channels=8 hidden=32 dropout=0.2
//! meta <key> <value>
//! param conv.kernels 8 3 4
//! <values, space separated>
//! ...
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so loading restores every
//! parameter bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::layers::{Conv1DLayer, DenseLayer, DropoutSpec, LstmCell};
use crate::models::{HybridDims, HybridModel, LinearDims, LinearRegressionModel, Model, Regressor};
use crate::tensor::Tensor;

pub const MODEL_MAGIC: &str = "RISKCAST-MODEL v1";

/// A model plus free-form single-line metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub meta: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            meta: BTreeMap::new(),
        }
    }
}

fn write_params(out: &mut String, params: Vec<(&'static str, &Tensor)>) {
    for (name, t) in params {
        let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "param {name} {}", dims.join(" "));
        let vals: Vec<String> = t.data().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
}

pub fn model_to_string(file: &ModelFile) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    match &file.model {
        Model::Hybrid(m) => {
            let d = m.dims;
            let c = m.config();
            let _ = writeln!(out, "kind hybrid");
            let _ = writeln!(
                out,
                "dims window={} market={} sentiment={} statics={}",
                d.window, d.market, d.sentiment, d.statics
            );
            let _ = writeln!(
                out,
                "config conv_width={} conv_channels={} hidden={} dropout={}",
                c.conv_width, c.conv_channels, c.hidden, c.dropout
            );
        }
        Model::Linear(m) => {
            let d = m.dims;
            let _ = writeln!(out, "kind linreg");
            let _ = writeln!(
                out,
                "dims window={} seq_features={} statics={}",
                d.window, d.seq_features, d.statics
            );
            let _ = writeln!(out, "config ridge={}", m.ridge);
        }
    }
    for (k, v) in &file.meta {
        if k.is_empty() || k.contains(char::is_whitespace) || v.contains('\n') {
            return Err(Error::ModelFormat(format!("metadata key `{k}` or its value is not single-line")));
        }
        let _ = writeln!(out, "meta {k} {v}");
    }
    write_params(&mut out, file.model.parameters());
    let _ = writeln!(out, "end");
    Ok(out)
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    fs::write(path, model_to_string(file)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, expecting: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::ModelFormat(format!("truncated file: expected {expecting}")))
    }
}

fn fields(line: &str, tag: &str, lineno: usize) -> Result<BTreeMap<String, String>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::ModelFormat(format!("line {lineno}: expected `{tag}` line, found `{line}`")));
    }
    parts
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::ModelFormat(format!("line {lineno}: malformed field `{kv}`")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, lineno: usize) -> Result<T> {
    map.get(key)
        .ok_or_else(|| Error::ModelFormat(format!("line {lineno}: missing `{key}`")))?
        .parse()
        .map_err(|_| Error::ModelFormat(format!("line {lineno}: bad value for `{key}`")))
}

pub fn model_from_str(text: &str) -> Result<ModelFile> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, magic) = lines.next("header")?;
    if magic != MODEL_MAGIC {
        return Err(if magic.starts_with("RISKCAST-MODEL") {
            Error::ModelFormat(format!("unsupported version `{magic}`, this build reads `{MODEL_MAGIC}`"))
        } else {
            Error::ModelFormat("not a model file (bad magic line)".into())
        });
    }
    let (n, kind_line) = lines.next("kind line")?;
    let kind = kind_line
        .strip_prefix("kind ")
        .ok_or_else(|| Error::ModelFormat(format!("line {n}: expected `kind`")))?
        .trim()
        .to_string();
    let (dn, dims_line) = lines.next("dims line")?;
    let dims = fields(dims_line, "dims", dn)?;
    let (cn, cfg_line) = lines.next("config line")?;
    let cfg = fields(cfg_line, "config", cn)?;

    let mut meta = BTreeMap::new();
    let mut params: Vec<(String, Tensor)> = Vec::new();
    loop {
        let (n, line) = lines.next("`end` marker")?;
        if line == "end" {
            break;
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.insert(k.to_string(), v.to_string());
            continue;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("param") {
            return Err(Error::ModelFormat(format!("line {n}: unexpected `{line}`")));
        }
        let name = parts.next().ok_or_else(|| Error::ModelFormat(format!("line {n}: missing parameter name")))?;
        let shape = parts
            .map(|p| p.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::ModelFormat(format!("line {n}: bad shape for {name}")))?;
        let (vn, values_line) = lines.next(&format!("values of {name}"))?;
        let values = values_line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::ModelFormat(format!("line {vn}: bad number in {name}")))?;
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::ModelFormat(format!(
                "line {vn}: {name} has {} values, shape {shape:?} needs {expected} (truncated?)",
                values.len()
            )));
        }
        let tensor = Tensor::new(&shape, values).map_err(|e| Error::ModelFormat(format!("line {n}: {e}")))?;
        params.push((name.to_string(), tensor));
    }

    let mut take = |name: &str| -> Result<Tensor> {
        let idx = params
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::ModelFormat(format!("missing parameter `{name}`")))?;
        Ok(params.remove(idx).1)
    };
    let model = match kind.as_str() {
        "hybrid" => {
            let d = HybridDims {
                window: field(&dims, "window", dn)?,
                market: field(&dims, "market", dn)?,
                sentiment: field(&dims, "sentiment", dn)?,
                statics: field(&dims, "statics", dn)?,
            };
            let dropout = DropoutSpec::new(field(&cfg, "dropout", cn)?)?;
            let conv = Conv1DLayer::new(take("conv.kernels")?, take("conv.bias")?)?;
            let lstm = LstmCell::new(take("lstm.w_x")?, take("lstm.w_h")?, take("lstm.b")?)?;
            let head = DenseLayer::new(take("head.weights")?, take("head.bias")?)?;
            let m = HybridModel::from_parts(d, conv, lstm, head, dropout)?;
            let c = m.config();
            if c.conv_width != field::<usize>(&cfg, "conv_width", cn)?
                || c.conv_channels != field::<usize>(&cfg, "conv_channels", cn)?
                || c.hidden != field::<usize>(&cfg, "hidden", cn)?
            {
                return Err(Error::ModelFormat("config line disagrees with parameter shapes".into()));
            }
            Model::Hybrid(m)
        }
        "linreg" => {
            let d = LinearDims {
                window: field(&dims, "window", dn)?,
                seq_features: field(&dims, "seq_features", dn)?,
                statics: field(&dims, "statics", dn)?,
            };
            let weights = take("linear.weights")?;
            let bias = take("linear.bias")?;
            if bias.len() != 1 {
                return Err(Error::ModelFormat("linear.bias must hold one value".into()));
            }
            let mut m = LinearRegressionModel::new(d, weights, 0.0, field(&cfg, "ridge", cn)?)?;
            m.parameters_mut()[1].data_mut()[0] = bias.data()[0];
            Model::Linear(m)
        }
        other => return Err(Error::ModelFormat(format!("unknown model kind `{other}`"))),
    };
    if let Some((name, _)) = params.first() {
        return Err(Error::ModelFormat(format!("unexpected parameter `{name}`")));
    }
    Ok(ModelFile { model, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::HybridConfig;
    use crate::tensor::SeededRng;

    fn hybrid() -> ModelFile {
        let mut rng = SeededRng::new(3);
        let dims = HybridDims {
            window: 5,
            market: 3,
            sentiment: 4,
            statics: 2,
        };
        let mut f = ModelFile::new(Model::Hybrid(HybridModel::new(dims, &HybridConfig::default(), &mut rng).unwrap()));
        f.meta.insert("note".into(), "{\"a\": 1}".into());
        f
    }

    #[test]
    fn hybrid_round_trip_is_bit_exact() {
        let f = hybrid();
        let text = model_to_string(&f).unwrap();
        let g = model_from_str(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(model_to_string(&g).unwrap(), text);
    }

    #[test]
    fn linear_round_trip() {
        let dims = LinearDims {
            window: 2,
            seq_features: 2,
            statics: 1,
        };
        let m = LinearRegressionModel::new(dims, Tensor::from_vec(vec![0.1, -1e-300, 3.0, f64::MIN_POSITIVE, 7.5]).unwrap(), -0.25, 1e-8).unwrap();
        let f = ModelFile::new(Model::Linear(m));
        assert_eq!(model_from_str(&model_to_string(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn truncation_detected() {
        let text = model_to_string(&hybrid()).unwrap();
        let cut = &text[..text.len() / 2];
        match model_from_str(cut) {
            Err(Error::ModelFormat(msg)) => assert!(msg.contains("truncated"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let no_end = text.trim_end().trim_end_matches("end");
        assert!(matches!(model_from_str(no_end), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn version_mismatch_detected() {
        let text = model_to_string(&hybrid()).unwrap().replacen("v1", "v2", 1);
        match model_from_str(&text) {
            Err(Error::ModelFormat(msg)) => assert!(msg.contains("version"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(model_from_str("hello\n").is_err());
    }
}
