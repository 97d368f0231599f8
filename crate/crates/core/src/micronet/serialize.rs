//! Model files: `CFKM`, u32 LE header length, JSON header, then one `CFKT`
//! tensor per weight, bias and Adam moment in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::net::{MicroNetParams, Weights};
use super::scalar::Scalar;
use super::{MicroNetConfig, Strategy};
use crate::error::{Error, Result};
use crate::io::{TensorData, TensorFile};

pub const MODEL_MAGIC: &[u8; 4] = b"CFKM";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    strategy: Strategy,
    config: MicroNetConfig,
    adam_step: u64,
    /// Shape of every tensor that follows; weights, then first and second moments.
    tensors: Vec<TensorShape>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct TensorShape {
    name: String,
    dims: Vec<usize>,
}

fn shapes(config: &MicroNetConfig) -> Vec<TensorShape> {
    let mut specs: Vec<(String, super::ConvSpec)> =
        config.layers.iter().enumerate().map(|(i, s)| (format!("trunk.{i}"), *s)).collect();
    if let Some(h) = config.head_spec() {
        for kind in crate::cfa::CfaKind::ALL {
            specs.push((format!("head.{kind}"), h));
        }
    }
    let mut out = Vec::new();
    for group in ["param", "adam_m", "adam_v"] {
        for (name, s) in &specs {
            out.push(TensorShape {
                name: format!("{group}.{name}.weight"),
                dims: vec![s.out_channels, s.in_channels, s.kernel, s.kernel],
            });
            out.push(TensorShape { name: format!("{group}.{name}.bias"), dims: vec![s.out_channels] });
        }
    }
    out
}

fn to_tensor<T: Scalar>(dims: Vec<usize>, v: &[T]) -> Result<TensorFile> {
    let data = if std::mem::size_of::<T>() == 4 {
        TensorData::F32(v.iter().map(|x| x.as_f64() as f32).collect())
    } else {
        TensorData::F64(v.iter().map(|x| x.as_f64()).collect())
    };
    TensorFile::new(dims, data)
}

pub fn model_to_bytes<T: Scalar>(params: &MicroNetParams<T>, config: &MicroNetConfig) -> Result<Vec<u8>> {
    config.validate()?;
    let header = Header {
        version: 1,
        strategy: config.strategy,
        config: config.clone(),
        adam_step: params.adam.step,
        tensors: shapes(config),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let all = params.weights.tensors().into_iter().chain(params.adam.m.tensors()).chain(params.adam.v.tensors());
    for (shape, t) in header.tensors.into_iter().zip(all) {
        if shape.dims.iter().product::<usize>() != t.len() {
            return Err(Error::dims(format!("{} does not match the configuration", shape.name)));
        }
        out.extend(to_tensor(shape.dims, t)?.to_bytes());
    }
    Ok(out)
}

pub fn model_from_bytes<T: Scalar>(bytes: &[u8]) -> Result<(MicroNetParams<T>, MicroNetConfig)> {
    if bytes.len() < 8 || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::Format("missing CFKM magic".into()));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let json = bytes.get(8..8 + hlen).ok_or_else(|| Error::Format("truncated model header".into()))?;
    let header: Header = serde_json::from_slice(json)?;
    if header.version != 1 {
        return Err(Error::Format(format!("unsupported model version {}", header.version)));
    }
    if header.strategy != header.config.strategy {
        return Err(Error::Format("header strategy disagrees with its config".into()));
    }
    header.config.validate()?;
    if header.tensors != shapes(&header.config) {
        return Err(Error::Format("tensor list does not match the configuration".into()));
    }
    let config = header.config;
    let mut weights = Weights::<T>::zeros(&config);
    let mut m = weights.clone();
    let mut v = weights.clone();
    let mut pos = 8 + hlen;
    let slots = weights.tensors_mut().into_iter().chain(m.tensors_mut()).chain(v.tensors_mut());
    for (shape, slot) in header.tensors.iter().zip(slots) {
        let (t, used) = TensorFile::parse(&bytes[pos..])?;
        pos += used;
        if t.dims() != shape.dims.as_slice() {
            return Err(Error::Format(format!("{} has dims {:?}, expected {:?}", shape.name, t.dims(), shape.dims)));
        }
        for (dst, src) in slot.iter_mut().zip(t.data().to_f64()) {
            *dst = T::of(src);
        }
    }
    if pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes in model file", bytes.len() - pos)));
    }
    let params = MicroNetParams { weights, adam: AdamState { m, v, step: header.adam_step } };
    Ok((params, config))
}

pub fn write_model<T: Scalar>(params: &MicroNetParams<T>, config: &MicroNetConfig, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(params, config)?)?;
    Ok(())
}

pub fn read_model<T: Scalar>(path: impl AsRef<Path>) -> Result<(MicroNetParams<T>, MicroNetConfig)> {
    model_from_bytes(&fs::read(path)?)
}
