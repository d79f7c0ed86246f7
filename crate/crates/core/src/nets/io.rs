//! Model files: an `STSW1` weight file whose header is the network spec text
//! block plus the input channel means.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nets::model::{build_network, InputMeans, Model};
use crate::nets::spec::{NetworkSpec, Variant, WidthScale};
use crate::tensor::Real;
use crate::weights;

pub const MODEL_VERSION: u32 = 1;

fn header_text(model: &Model<impl Real>) -> String {
    let fmt3 = |m: &[f32; 3]| format!("{} {} {}", m[0], m[1], m[2]);
    format!(
        "{}appearance_mean = {}\nflow_mean = {}\n",
        model.spec.to_text(),
        fmt3(&model.means.appearance),
        fmt3(&model.means.flow)
    )
}

/// Exact size in bytes of the file [`save_model`] writes for `model`.
pub fn model_file_len(model: &Model<impl Real>) -> usize {
    let params = model.params();
    weights::encoded_len(&header_text(model), params.iter().map(|(n, t)| (n.as_str(), t.dims())))
}

pub fn save_model<T: Real>(model: &Model<T>, path: &Path) -> Result<()> {
    let params = model.params();
    weights::write_file(path, &header_text(model), params.iter().map(|(n, t)| (n.as_str(), *t)))
}

pub fn model_bytes<T: Real>(model: &Model<T>) -> Vec<u8> {
    let params = model.params();
    weights::encode(&header_text(model), params.iter().map(|(n, t)| (n.as_str(), *t)))
}

fn parse_header(text: &str, path: &Path) -> Result<(NetworkSpec, InputMeans)> {
    let bad = |msg: String| Error::format(path, msg);
    let mut version = None;
    let mut variant = None;
    let mut fusion = None;
    let mut scale = None;
    let mut size = None;
    let mut means = InputMeans::default();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| bad(format!("malformed header line {line:?}")))?;
        let triple = |v: &str| -> Result<[f32; 3]> {
            let vals: Vec<f32> = v
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad(format!("bad mean value {x:?}"))))
                .collect::<Result<_>>()?;
            vals.try_into().map_err(|_| bad(format!("{k} needs 3 values")))
        };
        match k {
            "version" => version = Some(v.parse::<u32>().map_err(|_| bad(format!("bad version {v:?}")))?),
            "variant" => variant = Some(v.parse::<Variant>()?),
            "fusion_layer" => {
                fusion = Some(v.parse::<usize>().map_err(|_| bad(format!("bad fusion_layer {v:?}")))?)
            }
            "width_scale" => scale = Some(v.parse::<WidthScale>()?),
            "input_size" => {
                let (w, h) = v.split_once('x').ok_or_else(|| bad(format!("bad input_size {v:?}")))?;
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad input_size {v:?}")));
                size = Some((p(w)?, p(h)?));
            }
            "appearance_mean" => means.appearance = triple(v)?,
            "flow_mean" => means.flow = triple(v)?,
            _ => return Err(bad(format!("unknown header key {k:?}"))),
        }
    }
    match version {
        Some(MODEL_VERSION) => {}
        Some(v) => return Err(bad(format!("unsupported model version {v}, expected {MODEL_VERSION}"))),
        None => return Err(bad("missing model version".into())),
    }
    let missing = |k: &str| bad(format!("header lacks {k}"));
    let (w, h) = size.ok_or_else(|| missing("input_size"))?;
    let spec = NetworkSpec::new(variant.ok_or_else(|| missing("variant"))?)
        .with_fusion_layer(fusion.ok_or_else(|| missing("fusion_layer"))?)
        .with_width_scale(scale.ok_or_else(|| missing("width_scale"))?)
        .with_input_size(w, h);
    Ok((spec, means))
}

pub fn decode_model(buf: &[u8], path: &Path) -> Result<Model<f32>> {
    let (header, records) = weights::decode(buf, path)?;
    let (spec, means) = parse_header(&header, path)?;
    let mut model: Model<f32> = build_network(&spec, 0)?;
    model.means = means;
    let names: Vec<(String, Vec<usize>)> =
        model.params().iter().map(|(n, t)| (n.clone(), t.dims().to_vec())).collect();
    if records.len() < names.len() {
        return Err(Error::format(
            path,
            format!("truncated: {} of {} parameter records present", records.len(), names.len()),
        ));
    }
    if records.len() > names.len() {
        return Err(Error::format(path, format!("{} unexpected extra records", records.len() - names.len())));
    }
    for (((name, dims), slot), rec) in names.iter().zip(model.params_mut()).zip(records) {
        if &rec.name != name || rec.tensor.dims() != dims.as_slice() {
            return Err(Error::format(
                path,
                format!("record {} {:?} where {name} {dims:?} expected", rec.name, rec.tensor.dims()),
            ));
        }
        *slot = rec.tensor;
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<Model<f32>> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&buf, path)
}
