//! NRRD with attached or detached header, raw, gzip or ascii payload.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use csd_core::{Dims, Spacing};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{decode, encode, VoxelGrid, VoxelType};
use crate::atomic::write_bytes;
use crate::error::{FormatError, Result};

fn parse_type(s: &str) -> Result<VoxelType> {
    let ty = match s.trim() {
        "signed char" | "int8" | "int8_t" => VoxelType::I8,
        "uchar" | "unsigned char" | "uint8" | "uint8_t" => VoxelType::U8,
        "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => VoxelType::I16,
        "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => VoxelType::U16,
        "int" | "signed int" | "int32" | "int32_t" => VoxelType::I32,
        "uint" | "unsigned int" | "uint32" | "uint32_t" => VoxelType::U32,
        other => return Err(FormatError::UnsupportedType(other.to_string())),
    };
    Ok(ty)
}

fn type_name(ty: VoxelType) -> Result<&'static str> {
    Ok(match ty {
        VoxelType::I8 => "int8",
        VoxelType::U8 => "uint8",
        VoxelType::I16 => "int16",
        VoxelType::U16 => "uint16",
        VoxelType::I32 => "int32",
        VoxelType::U32 => "uint32",
        VoxelType::Bit => return Err(FormatError::UnsupportedType("bit".into())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Raw,
    Gzip,
    Ascii,
}

#[derive(Debug)]
struct Header {
    fields: BTreeMap<String, String>,
    /// Byte offset of the payload in an attached file.
    data_offset: usize,
}

impl Header {
    fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| FormatError::header(key, "missing"))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut next_line = || -> Option<&[u8]> {
        if pos >= bytes.len() {
            return None;
        }
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        let line = &bytes[pos..end];
        pos = (end + 1).min(bytes.len() + 1);
        Some(line.strip_suffix(b"\r").unwrap_or(line))
    };
    let magic = next_line().ok_or_else(|| FormatError::header("magic", "empty file"))?;
    if !magic.starts_with(b"NRRD000") {
        return Err(FormatError::header("magic", "not an NRRD file"));
    }
    let mut fields = BTreeMap::new();
    loop {
        let Some(line) = next_line() else { break };
        if line.is_empty() {
            break;
        }
        let line = std::str::from_utf8(line).map_err(|_| FormatError::header("header", "not UTF-8"))?;
        if line.starts_with('#') || line.contains(":=") {
            continue;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| FormatError::header(line, "expected `field: value`"))?;
        fields.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(Header {
        fields,
        data_offset: pos.min(bytes.len()),
    })
}

fn parse_sizes(h: &Header) -> Result<Dims> {
    let dim: usize = h
        .require("dimension")?
        .parse()
        .map_err(|_| FormatError::header("dimension", "not an integer"))?;
    if dim != 3 {
        return Err(FormatError::header("dimension", format!("{dim}, expected 3")));
    }
    let sizes: Vec<usize> = h
        .require("sizes")?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| FormatError::header("sizes", format!("bad size `{s}`"))))
        .collect::<Result<_>>()?;
    if sizes.len() != 3 || sizes.contains(&0) {
        return Err(FormatError::header("sizes", "expected three positive sizes"));
    }
    Ok(Dims::new(sizes[0], sizes[1], sizes[2]))
}

fn parse_spacing(h: &Header) -> Result<Spacing> {
    if let Some(s) = h.get("spacings") {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| FormatError::header("spacings", format!("bad value `{t}`"))))
            .collect::<Result<_>>()?;
        if v.len() != 3 {
            return Err(FormatError::header("spacings", "expected three values"));
        }
        let fix = |x: f64| if x.is_nan() { 1.0 } else { x.abs() };
        return Ok(Spacing::new(fix(v[0]), fix(v[1]), fix(v[2])));
    }
    if let Some(s) = h.get("space directions") {
        let mut out = Vec::new();
        for vec in s.split_whitespace() {
            if vec == "none" {
                out.push(1.0);
                continue;
            }
            let inner = vec
                .strip_prefix('(')
                .and_then(|v| v.strip_suffix(')'))
                .ok_or_else(|| FormatError::header("space directions", format!("bad vector `{vec}`")))?;
            let comps: Vec<f64> = inner
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| FormatError::header("space directions", format!("bad value `{t}`")))
                })
                .collect::<Result<_>>()?;
            out.push(comps.iter().map(|c| c * c).sum::<f64>().sqrt());
        }
        if out.len() != 3 {
            return Err(FormatError::header("space directions", "expected three vectors"));
        }
        return Ok(Spacing::new(out[0], out[1], out[2]));
    }
    Ok(Spacing::UNIT)
}

fn parse_encoding(h: &Header) -> Result<Encoding> {
    match h.require("encoding")? {
        "raw" => Ok(Encoding::Raw),
        "gzip" | "gz" => Ok(Encoding::Gzip),
        "ascii" | "text" | "txt" => Ok(Encoding::Ascii),
        other => Err(FormatError::header("encoding", format!("unsupported `{other}`"))),
    }
}

fn big_endian(h: &Header, ty: VoxelType, enc: Encoding) -> Result<bool> {
    match h.get("endian") {
        Some("little") => Ok(false),
        Some("big") => Ok(true),
        Some(other) => Err(FormatError::header("endian", format!("unknown `{other}`"))),
        None if ty.bytes() > 1 && enc != Encoding::Ascii => Err(FormatError::header("endian", "missing")),
        None => Ok(false),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| FormatError::io(path, e))
}

pub fn read(path: &Path) -> Result<VoxelGrid> {
    let bytes = read_file(path)?;
    let h = parse_header(&bytes)?;
    let dims = parse_sizes(&h)?;
    let spacing = parse_spacing(&h)?;
    let ty = parse_type(h.require("type")?)?;
    let enc = parse_encoding(&h)?;
    let be = big_endian(&h, ty, enc)?;
    let data_file = h.get("data file").or_else(|| h.get("datafile"));
    let stored: Vec<u8> = match data_file {
        Some(name) if name.starts_with("LIST") || name.contains('%') => {
            return Err(FormatError::header("data file", "multi-file data is not supported"))
        }
        Some(name) => {
            let p = resolve(path, name);
            read_file(&p)?
        }
        None => bytes[h.data_offset..].to_vec(),
    };
    let line_skip: usize = h
        .get("line skip")
        .unwrap_or("0")
        .parse()
        .map_err(|_| FormatError::header("line skip", "not a nonnegative integer"))?;
    let mut stored = &stored[..];
    for _ in 0..line_skip {
        let i = stored
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| FormatError::header("line skip", "past end of data"))?;
        stored = &stored[i + 1..];
    }
    let mut payload = match enc {
        Encoding::Raw | Encoding::Ascii => stored.to_vec(),
        Encoding::Gzip => {
            let mut out = Vec::new();
            GzDecoder::new(stored)
                .read_to_end(&mut out)
                .map_err(|e| FormatError::header("encoding", format!("gzip: {e}")))?;
            out
        }
    };
    let n = dims.len();
    if enc == Encoding::Ascii {
        let text = std::str::from_utf8(&payload).map_err(|_| FormatError::header("encoding", "ascii data not UTF-8"))?;
        let values: Vec<u32> = text
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| FormatError::header("encoding", format!("bad ascii value `{t}`"))))
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(FormatError::SizeMismatch {
                expected: n,
                actual: values.len(),
            });
        }
        return Ok(VoxelGrid { dims, spacing, values });
    }
    let skip: i64 = h
        .get("byte skip")
        .unwrap_or("0")
        .parse()
        .map_err(|_| FormatError::header("byte skip", "not an integer"))?;
    let want = ty.payload_len(n);
    if skip == -1 {
        if payload.len() < want {
            return Err(FormatError::SizeMismatch {
                expected: want,
                actual: payload.len(),
            });
        }
        payload.drain(..payload.len() - want);
    } else if skip >= 0 {
        let skip = (skip as usize).min(payload.len());
        payload.drain(..skip);
    } else {
        return Err(FormatError::header("byte skip", "must be -1 or nonnegative"));
    }
    let values = decode(&payload, ty, n, be)?;
    Ok(VoxelGrid { dims, spacing, values })
}

fn resolve(header: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        header.parent().unwrap_or(Path::new("")).join(p)
    }
}

fn payload(grid: &VoxelGrid, ty: VoxelType, gzip: bool) -> Result<Vec<u8>> {
    let raw = encode(&grid.values, ty);
    if !gzip {
        return Ok(raw);
    }
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&raw)
        .and_then(|_| enc.finish())
        .map_err(|e| FormatError::header("encoding", format!("gzip: {e}")))
}

fn header_text(grid: &VoxelGrid, ty: VoxelType, gzip: bool, data_file: Option<&str>) -> Result<String> {
    let d = grid.dims;
    let s = grid.spacing;
    let mut h = format!(
        "NRRD0004\ntype: {}\ndimension: 3\nsizes: {} {} {}\nspacings: {} {} {}\nencoding: {}\n",
        type_name(ty)?,
        d.nx,
        d.ny,
        d.nz,
        s.sx,
        s.sy,
        s.sz,
        if gzip { "gzip" } else { "raw" }
    );
    if ty.bytes() > 1 {
        h.push_str("endian: little\n");
    }
    if let Some(f) = data_file {
        h.push_str(&format!("data file: {f}\n"));
    }
    Ok(h)
}

/// Writes `grid` as `ty`. A detached header names a sibling data file
/// `<stem>.raw` or `<stem>.raw.gz`.
pub fn write(path: &Path, grid: &VoxelGrid, ty: VoxelType, gzip: bool, detached: bool) -> Result<()> {
    let data = payload(grid, ty, gzip)?;
    if detached {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("volume");
        let name = if gzip { format!("{stem}.raw.gz") } else { format!("{stem}.raw") };
        write_bytes(&path.with_file_name(&name), &data)?;
        let text = header_text(grid, ty, gzip, Some(&name))?;
        return write_bytes(path, text.as_bytes());
    }
    let mut out = header_text(grid, ty, gzip, None)?.into_bytes();
    out.push(b'\n');
    out.extend_from_slice(&data);
    write_bytes(path, &out)
}
