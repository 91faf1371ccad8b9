//! Weight-file persistence: a structured-text header followed by the flat
//! parameter arrays as little-endian 64-bit floats, row-major per layer
//! (w_1, b_1, w_2, b_2, ...). Save/load round-trips bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::mlp::{Activation, MlpSurrogate};
use super::SurrogateError;

const FORMAT: &str = "hnh-mlp-v1";

/// Metadata carried in the header next to the shape fields.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsHeader {
    pub train_seed: u64,
    pub dataset_hash: String,
}

pub fn save_surrogate(
    net: &MlpSurrogate,
    train_seed: u64,
    dataset_hash: &str,
    path: &Path,
) -> Result<(), SurrogateError> {
    net.validate()?;
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "format {FORMAT}")?;
    writeln!(out, "input_dim {}", net.input_dim)?;
    writeln!(out, "hidden_layers {}", net.hidden_layers)?;
    writeln!(out, "width {}", net.width)?;
    writeln!(out, "activation {}", net.activation.name())?;
    writeln!(out, "dropout_rate {:e}", net.dropout_rate)?;
    writeln!(out, "train_seed {train_seed}")?;
    writeln!(out, "dataset_hash {dataset_hash}")?;
    writeln!(out, "params {}", net.parameter_count())?;
    for (w, b) in net.weights.iter().zip(&net.biases) {
        for v in w.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in b.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_surrogate(path: &Path) -> Result<(MlpSurrogate, WeightsHeader), SurrogateError> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);

    let mut header_fields = std::collections::HashMap::new();
    loop {
        let line = read_line(&mut reader)?;
        let mut parts = line.splitn(2, ' ');
        let key = parts
            .next()
            .ok_or_else(|| SurrogateError::Format("empty header line".into()))?
            .to_string();
        let value = parts
            .next()
            .ok_or_else(|| SurrogateError::Format(format!("header line {line:?} has no value")))?
            .to_string();
        let done = key == "params";
        header_fields.insert(key, value);
        if done {
            break;
        }
    }

    let get = |key: &str| -> Result<&String, SurrogateError> {
        header_fields
            .get(key)
            .ok_or_else(|| SurrogateError::Format(format!("missing header field {key:?}")))
    };
    if get("format")? != FORMAT {
        return Err(SurrogateError::Format(format!(
            "unsupported format {:?}",
            get("format")?
        )));
    }
    let parse_usize = |key: &str| -> Result<usize, SurrogateError> {
        get(key)?
            .parse()
            .map_err(|e| SurrogateError::Format(format!("field {key:?}: {e}")))
    };
    let input_dim = parse_usize("input_dim")?;
    let hidden_layers = parse_usize("hidden_layers")?;
    let width = parse_usize("width")?;
    let params = parse_usize("params")?;
    let activation = Activation::from_name(get("activation")?)?;
    let dropout_rate: f64 = get("dropout_rate")?
        .parse()
        .map_err(|e| SurrogateError::Format(format!("dropout_rate: {e}")))?;
    let train_seed: u64 = get("train_seed")?
        .parse()
        .map_err(|e| SurrogateError::Format(format!("train_seed: {e}")))?;
    let dataset_hash = get("dataset_hash")?.clone();

    let mut net = MlpSurrogate::zeros(input_dim, hidden_layers, width);
    net.activation = activation;
    net.dropout_rate = dropout_rate;
    if net.parameter_count() != params {
        return Err(SurrogateError::Format(format!(
            "declared {} parameters but shapes imply {}",
            params,
            net.parameter_count()
        )));
    }

    let mut buf = [0u8; 8];
    for layer in 0..net.weights.len() {
        for v in net.weights[layer].iter_mut() {
            reader.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        for v in net.biases[layer].iter_mut() {
            reader.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    if reader.bytes().next().is_some() {
        return Err(SurrogateError::Format("trailing bytes after parameters".into()));
    }
    net.validate()?;
    Ok((
        net,
        WeightsHeader {
            train_seed,
            dataset_hash,
        },
    ))
}

fn read_line(reader: &mut impl Read) -> Result<String, SurrogateError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        reader.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(SurrogateError::Format("header line too long".into()));
        }
    }
    String::from_utf8(line).map_err(|e| SurrogateError::Format(format!("header not UTF-8: {e}")))
}
