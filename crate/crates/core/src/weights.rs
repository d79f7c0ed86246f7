//! `STSW1` weight files.
//!
//! Layout, all integers 32-bit little-endian unsigned:
//!
//! ```text
//! "STSW1"
//! header_len, header bytes (UTF-8 text block, may be empty)
//! repeated until EOF:
//!     name_len, name bytes, rank, dims[rank], data (f32 LE, product(dims) values)
//! ```
//!
//! Records appear in parameter declaration order.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

pub const MAGIC: &[u8; 5] = b"STSW1";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRecord {
    pub name: String,
    pub tensor: Tensor<f32>,
}

/// Exact byte size of a file with this header and these parameter shapes.
pub fn encoded_len<'a>(header: &str, records: impl IntoIterator<Item = (&'a str, &'a [usize])>) -> usize {
    let body: usize = records
        .into_iter()
        .map(|(name, dims)| 4 + name.len() + 4 + 4 * dims.len() + 4 * dims.iter().product::<usize>())
        .sum();
    MAGIC.len() + 4 + header.len() + body
}

pub fn encode<'a, T: Real>(
    header: &str,
    records: impl IntoIterator<Item = (&'a str, &'a Tensor<T>)>,
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for (name, t) in records {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v.f64() as f32).to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.path,
                format!("truncated while reading {what} at byte {}", self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn string(&mut self, n: usize, what: &str) -> Result<String> {
        let b = self.take(n, what)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::format(self.path, format!("{what} is not UTF-8")))
    }
}

/// Parses a weight file image; `path` is only used in error messages.
pub fn decode(buf: &[u8], path: &Path) -> Result<(String, Vec<WeightRecord>)> {
    if buf.len() < MAGIC.len() || &buf[..MAGIC.len()] != MAGIC {
        return Err(Error::format(path, "bad magic: not an STSW1 weight file"));
    }
    let mut cur = Cursor { buf, pos: MAGIC.len(), path };
    let hlen = cur.u32("header length")?;
    let header = cur.string(hlen, "header")?;
    let mut records = Vec::new();
    while cur.pos < buf.len() {
        let nlen = cur.u32("name length")?;
        let name = cur.string(nlen, "parameter name")?;
        let rank = cur.u32("rank")?;
        if rank == 0 || rank > 8 {
            return Err(Error::format(path, format!("parameter {name}: unsupported rank {rank}")));
        }
        let dims = (0..rank).map(|_| cur.u32("dims")).collect::<Result<Vec<_>>>()?;
        let count: usize = dims.iter().product();
        let raw = cur.take(4 * count, &format!("data of {name}"))?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let tensor = Tensor::from_vec(&dims, data)
            .map_err(|e| Error::format(path, format!("parameter {name}: {e}")))?;
        records.push(WeightRecord { name, tensor });
    }
    Ok((header, records))
}

pub fn write_file<'a, T: Real>(
    path: &Path,
    header: &str,
    records: impl IntoIterator<Item = (&'a str, &'a Tensor<T>)>,
) -> Result<()> {
    let bytes = encode(header, records);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<(String, Vec<WeightRecord>)> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_length() {
        let a = Tensor::<f32>::from_fn(&[2, 3, 1, 1], |i| i as f32 * 0.25 - 1.0);
        let b = Tensor::<f32>::from_vec(&[2], vec![f32::MIN_POSITIVE, -0.0]).unwrap();
        let bytes = encode("variant = X\n", [("a.weight", &a), ("a.bias", &b)]);
        assert_eq!(
            bytes.len(),
            encoded_len("variant = X\n", [("a.weight", a.dims()), ("a.bias", b.dims())])
        );
        let (h, recs) = decode(&bytes, Path::new("mem")).unwrap();
        assert_eq!(h, "variant = X\n");
        assert_eq!(recs[0].tensor, a);
        assert_eq!(recs[1].tensor.data()[1].to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode::<f32>("", []);
        bytes[4] = b'2';
        assert!(matches!(decode(&bytes, Path::new("m")), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated() {
        let a = Tensor::<f32>::zeros(&[4]);
        let bytes = encode("", [("a", &a)]);
        let err = decode(&bytes[..bytes.len() - 1], Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }
}
