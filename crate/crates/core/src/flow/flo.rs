//! Middlebury `.flo` files: f32 tag 202021.25, i32 width, i32 height, then
//! row-major interleaved `(u, v)` f32 pairs, all little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;

pub const FLO_TAG: f32 = 202021.25;

pub fn encode_flo(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * field.u().len());
    out.extend_from_slice(&FLO_TAG.to_le_bytes());
    out.extend_from_slice(&(field.width() as i32).to_le_bytes());
    out.extend_from_slice(&(field.height() as i32).to_le_bytes());
    for (u, v) in field.u().iter().zip(field.v()) {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_flo(buf: &[u8], path: &Path) -> Result<FlowField> {
    if buf.len() < 12 {
        return Err(Error::format(path, "truncated .flo header"));
    }
    let word = |i: usize| [buf[4 * i], buf[4 * i + 1], buf[4 * i + 2], buf[4 * i + 3]];
    let tag = f32::from_le_bytes(word(0));
    if tag != FLO_TAG {
        return Err(Error::format(path, format!("bad .flo tag {tag}, expected {FLO_TAG}")));
    }
    let (w, h) = (i32::from_le_bytes(word(1)), i32::from_le_bytes(word(2)));
    if w <= 0 || h <= 0 {
        return Err(Error::format(path, format!("invalid .flo size {w}x{h}")));
    }
    let n = w as usize * h as usize;
    if buf.len() != 12 + 8 * n {
        return Err(Error::format(
            path,
            format!("{w}x{h} .flo needs {} bytes, file has {}", 12 + 8 * n, buf.len()),
        ));
    }
    let (mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for pair in buf[12..].chunks_exact(8) {
        u.push(f32::from_le_bytes([pair[0], pair[1], pair[2], pair[3]]));
        v.push(f32::from_le_bytes([pair[4], pair[5], pair[6], pair[7]]));
    }
    FlowField::new(w as usize, h as usize, u, v)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_flo(field: &FlowField, path: &Path) -> Result<()> {
    std::fs::write(path, encode_flo(field)).map_err(|e| Error::io(path, e))
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&buf, path)
}
