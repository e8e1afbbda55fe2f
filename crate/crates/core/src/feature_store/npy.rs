//! Minimal npy v1.0 reader/writer for 2-D little-endian float arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

/// Loads a feature matrix from an npy file.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_npy(BufReader::new(file)).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Saves a feature matrix as `<f8` npy v1.0.
pub fn save_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_npy(m, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_npy<R: Read>(mut r: R) -> Result<FeatureMatrix> {
    let io = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated npy file".into())
        } else {
            Error::io("<npy stream>", e)
        }
    };

    let mut preamble = [0u8; 10];
    r.read_exact(&mut preamble).map_err(io)?;
    if &preamble[..6] != MAGIC {
        return Err(Error::Format("missing npy magic string".into()));
    }
    if preamble[6] != 1 || preamble[7] != 0 {
        return Err(Error::Format(format!(
            "unsupported npy version {}.{} (only 1.0)",
            preamble[6], preamble[7]
        )));
    }
    let header_len = u16::from_le_bytes([preamble[8], preamble[9]]) as usize;
    let mut raw = vec![0u8; header_len];
    r.read_exact(&mut raw).map_err(io)?;
    let text = std::str::from_utf8(&raw)
        .map_err(|_| Error::Format("npy header is not ASCII".into()))?;
    let header = parse_header(text)?;

    if header.shape.len() != 2 {
        return Err(Error::Format(format!(
            "expected a 2-D array, found shape {:?}",
            header.shape
        )));
    }
    let (n, dim) = (header.shape[0], header.shape[1]);
    let count = n
        .checked_mul(dim)
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    let mut payload = vec![0u8; count * header.dtype.size()];
    r.read_exact(&mut payload).map_err(io)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(io)? != 0 {
        return Err(Error::Format("trailing bytes after array payload".into()));
    }

    let data: Vec<f64> = match header.dtype {
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
    };
    FeatureMatrix::new(data, n, dim)
}

pub fn write_npy<W: Write>(m: &FeatureMatrix, w: &mut W) -> std::io::Result<()> {
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        m.n(),
        m.dim()
    );
    // magic(6) + version(2) + len(2) + header + '\n' is padded to ALIGN
    let unpadded = 10 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat(' ').take(pad));
    header.push('\n');

    w.write_all(MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&(header.len() as u16).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn parse_header(text: &str) -> Result<Header> {
    let body = text.trim();
    let body = body
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or_else(|| Error::Format(format!("header is not a dict: {body:?}")))?;

    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let (key, after) = take_quoted(rest)?;
        let after = after
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| Error::Format(format!("expected ':' after key '{key}'")))?
            .trim_start();
        let after = match key {
            "descr" => {
                let (v, a) = take_quoted(after)?;
                descr = Some(v.to_string());
                a
            }
            "fortran_order" => {
                if let Some(a) = after.strip_prefix("False") {
                    fortran = Some(false);
                    a
                } else if let Some(a) = after.strip_prefix("True") {
                    fortran = Some(true);
                    a
                } else {
                    return Err(Error::Format("fortran_order must be True or False".into()));
                }
            }
            "shape" => {
                let (dims, a) = take_tuple(after)?;
                shape = Some(dims);
                a
            }
            other => return Err(Error::Format(format!("unexpected header key '{other}'"))),
        };
        let after = after.trim_start();
        rest = after.strip_prefix(',').unwrap_or(after).trim_start();
    }

    let descr = descr.ok_or_else(|| Error::Format("header lacks 'descr'".into()))?;
    let dtype = match descr.as_str() {
        "<f8" => Dtype::F8,
        "<f4" => Dtype::F4,
        other => {
            return Err(Error::Format(format!(
                "unsupported dtype '{other}' (expected '<f4' or '<f8')"
            )))
        }
    };
    match fortran {
        Some(false) => {}
        Some(true) => return Err(Error::Format("fortran_order arrays are not supported".into())),
        None => return Err(Error::Format("header lacks 'fortran_order'".into())),
    }
    let shape = shape.ok_or_else(|| Error::Format("header lacks 'shape'".into()))?;
    Ok(Header { dtype, shape })
}

fn take_quoted(s: &str) -> Result<(&str, &str)> {
    let quote = s
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| Error::Format(format!("expected quoted string at {s:?}")))?;
    let inner = &s[1..];
    let end = inner
        .find(quote)
        .ok_or_else(|| Error::Format("unterminated string in header".into()))?;
    Ok((&inner[..end], &inner[end + 1..]))
}

fn take_tuple(s: &str) -> Result<(Vec<usize>, &str)> {
    let inner = s
        .strip_prefix('(')
        .ok_or_else(|| Error::Format("shape must be a tuple".into()))?;
    let end = inner
        .find(')')
        .ok_or_else(|| Error::Format("unterminated shape tuple".into()))?;
    let dims = inner[..end]
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape entry '{p}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dims, &inner[end + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npy_bytes(descr: &str, shape: &str, payload: &[u8]) -> Vec<u8> {
        let mut header =
            format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape}, }}");
        let pad = (64 - (11 + header.len()) % 64) % 64;
        header.push_str(&" ".repeat(pad));
        header.push('\n');
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    fn f8(vals: &[f64]) -> Vec<u8> {
        vals.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn reads_small_f8() {
        let bytes = npy_bytes("<f8", "(2, 2)", &f8(&[1.0, 2.0, 3.0, 4.0]));
        let m = read_npy(&bytes[..]).unwrap();
        assert_eq!((m.n(), m.dim()), (2, 2));
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn widens_f4() {
        let payload: Vec<u8> = [0.5f32, -1.25].iter().flat_map(|v| v.to_le_bytes()).collect();
        let m = read_npy(&npy_bytes("<f4", "(1, 2)", &payload)[..]).unwrap();
        assert_eq!(m.row(0), &[0.5, -1.25]);
    }

    #[test]
    fn rejects_three_dims() {
        let bytes = npy_bytes("<f8", "(2, 2, 2)", &f8(&[0.0; 8]));
        assert!(matches!(read_npy(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_int_dtype() {
        let bytes = npy_bytes("<i8", "(1, 1)", &[0u8; 8]);
        assert!(matches!(read_npy(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_big_endian_and_fortran() {
        let bytes = npy_bytes(">f8", "(1, 1)", &[0u8; 8]);
        assert!(matches!(read_npy(&bytes[..]), Err(Error::Format(_))));
        let mut bytes = npy_bytes("<f8", "(1, 1)", &f8(&[0.0]));
        let pos = bytes.windows(5).position(|w| w == b"False").unwrap();
        bytes[pos..pos + 5].copy_from_slice(b"True ");
        assert!(matches!(read_npy(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn nan_reports_position() {
        let bytes = npy_bytes("<f8", "(1, 2)", &f8(&[0.0, f64::NAN]));
        assert!(matches!(
            read_npy(&bytes[..]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn truncated_and_garbage() {
        let bytes = npy_bytes("<f8", "(2, 2)", &f8(&[1.0, 2.0, 3.0]));
        assert!(matches!(read_npy(&bytes[..]), Err(Error::Format(_))));
        assert!(matches!(read_npy(&b"PK\x03\x04 not npy"[..]), Err(Error::Format(_))));
        let mut long = npy_bytes("<f8", "(1, 1)", &f8(&[1.0]));
        long.push(0);
        assert!(matches!(read_npy(&long[..]), Err(Error::Format(_))));
    }

    #[test]
    fn written_header_is_aligned() {
        let m = FeatureMatrix::from_rows(&[[1.5]]).unwrap();
        let mut out = Vec::new();
        write_npy(&m, &mut out).unwrap();
        let hlen = u16::from_le_bytes([out[8], out[9]]) as usize;
        assert_eq!((10 + hlen) % 64, 0);
        assert_eq!(out[10 + hlen - 1], b'\n');
        assert_eq!(read_npy(&out[..]).unwrap(), m);
    }
}
