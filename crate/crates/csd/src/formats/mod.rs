//! Volume and mesh files.
//!
//! Volumes are chosen by extension: `.nrrd` (attached header), `.nhdr`
//! (detached header next to a data file) and `.json`/`.raw` (raw buffer
//! with a JSON sidecar of the same stem).

pub mod mesh;
pub mod nrrd;
pub mod rawjson;

use std::path::Path;

use csd_core::volume::Grid;
use csd_core::{BinaryVolume, Dims, LabelVolume, Spacing};

use crate::error::{FormatError, Result};

/// Stored scalar type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelType {
    /// One bit per voxel, least significant bit first (raw+json only).
    Bit,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl VoxelType {
    pub fn bytes(self) -> usize {
        match self {
            VoxelType::Bit | VoxelType::I8 | VoxelType::U8 => 1,
            VoxelType::I16 | VoxelType::U16 => 2,
            VoxelType::I32 | VoxelType::U32 => 4,
        }
    }

    /// Payload size for `n` voxels.
    pub fn payload_len(self, n: usize) -> usize {
        match self {
            VoxelType::Bit => n.div_ceil(8),
            t => n * t.bytes(),
        }
    }

    /// Narrowest unsigned type holding `max`.
    pub fn for_max(max: u32) -> VoxelType {
        if max <= u8::MAX as u32 {
            VoxelType::U8
        } else if max <= u16::MAX as u32 {
            VoxelType::U16
        } else {
            VoxelType::U32
        }
    }
}

/// Decoded voxels before they become a binary or label volume.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub dims: Dims,
    pub spacing: Spacing,
    pub values: Vec<u32>,
}

impl VoxelGrid {
    pub fn into_binary(self) -> Result<BinaryVolume> {
        let data = self.values.iter().map(|&v| v != 0).collect();
        Ok(BinaryVolume::new(self.dims, self.spacing, data)?)
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        Ok(LabelVolume::new(self.dims, self.spacing, self.values)?)
    }

    pub fn from_binary(v: &BinaryVolume) -> Self {
        VoxelGrid {
            dims: v.dims(),
            spacing: v.spacing(),
            values: v.data().iter().map(|&b| b as u32).collect(),
        }
    }

    pub fn from_labels(v: &LabelVolume) -> Self {
        VoxelGrid {
            dims: v.dims(),
            spacing: v.spacing(),
            values: v.data().to_vec(),
        }
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// Little- or big-endian decoding of a payload into `u32` values.
pub(crate) fn decode(bytes: &[u8], ty: VoxelType, n: usize, big_endian: bool) -> Result<Vec<u32>> {
    let expected = ty.payload_len(n);
    if bytes.len() != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let neg = |v: i64| -> Result<u32> {
        u32::try_from(v).map_err(|_| FormatError::header("type", format!("negative voxel value {v}")))
    };
    let out = match ty {
        VoxelType::Bit => (0..n).map(|i| ((bytes[i / 8] >> (i % 8)) & 1) as u32).collect(),
        VoxelType::U8 => bytes.iter().map(|&b| b as u32).collect(),
        VoxelType::I8 => bytes.iter().map(|&b| neg(b as i8 as i64)).collect::<Result<_>>()?,
        VoxelType::U16 | VoxelType::I16 => bytes
            .chunks_exact(2)
            .map(|c| {
                let raw = [c[0], c[1]];
                let u = if big_endian { u16::from_be_bytes(raw) } else { u16::from_le_bytes(raw) };
                if ty == VoxelType::I16 {
                    neg(u as i16 as i64)
                } else {
                    Ok(u as u32)
                }
            })
            .collect::<Result<_>>()?,
        VoxelType::U32 | VoxelType::I32 => bytes
            .chunks_exact(4)
            .map(|c| {
                let raw = [c[0], c[1], c[2], c[3]];
                let u = if big_endian { u32::from_be_bytes(raw) } else { u32::from_le_bytes(raw) };
                if ty == VoxelType::I32 {
                    neg(u as i32 as i64)
                } else {
                    Ok(u)
                }
            })
            .collect::<Result<_>>()?,
    };
    Ok(out)
}

/// Little-endian encoding; values must fit `ty`.
pub(crate) fn encode(values: &[u32], ty: VoxelType) -> Vec<u8> {
    match ty {
        VoxelType::Bit => {
            let mut out = vec![0u8; values.len().div_ceil(8)];
            for (i, &v) in values.iter().enumerate() {
                if v != 0 {
                    out[i / 8] |= 1 << (i % 8);
                }
            }
            out
        }
        VoxelType::U8 | VoxelType::I8 => values.iter().map(|&v| v as u8).collect(),
        VoxelType::U16 | VoxelType::I16 => values.iter().flat_map(|&v| (v as u16).to_le_bytes()).collect(),
        VoxelType::U32 | VoxelType::I32 => values.iter().flat_map(|&v| v.to_le_bytes()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeFormat {
    Nrrd,
    NrrdDetached,
    RawJson,
}

impl VolumeFormat {
    pub fn from_path(path: &Path) -> Result<VolumeFormat> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("nrrd") => Ok(VolumeFormat::Nrrd),
            Some("nhdr") => Ok(VolumeFormat::NrrdDetached),
            Some("json") | Some("raw") => Ok(VolumeFormat::RawJson),
            _ => Err(FormatError::UnknownExtension(path.to_path_buf())),
        }
    }
}

/// Write settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteOptions {
    /// Gzip the NRRD payload (ignored for raw+json).
    pub gzip: bool,
}

pub fn read_grid(path: &Path) -> Result<VoxelGrid> {
    match VolumeFormat::from_path(path)? {
        VolumeFormat::Nrrd | VolumeFormat::NrrdDetached => nrrd::read(path),
        VolumeFormat::RawJson => rawjson::read(path),
    }
}

pub fn write_grid(path: &Path, grid: &VoxelGrid, ty: VoxelType, opts: WriteOptions) -> Result<()> {
    match VolumeFormat::from_path(path)? {
        VolumeFormat::Nrrd => nrrd::write(path, grid, ty, opts.gzip, false),
        VolumeFormat::NrrdDetached => nrrd::write(path, grid, ty, opts.gzip, true),
        VolumeFormat::RawJson => rawjson::write(path, grid, ty),
    }
}

/// Nonzero voxels become foreground.
pub fn load_binary(path: &Path) -> Result<BinaryVolume> {
    read_grid(path)?.into_binary()
}

pub fn load_labels(path: &Path) -> Result<LabelVolume> {
    read_grid(path)?.into_labels()
}

pub fn save_binary(path: &Path, vol: &BinaryVolume, opts: WriteOptions) -> Result<()> {
    write_grid(path, &VoxelGrid::from_binary(vol), VoxelType::U8, opts)
}

pub fn save_labels(path: &Path, vol: &LabelVolume, opts: WriteOptions) -> Result<()> {
    let grid = VoxelGrid::from_labels(vol);
    let ty = VoxelType::for_max(grid.max());
    write_grid(path, &grid, ty, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_every_type() {
        for (ty, vals) in [
            (VoxelType::Bit, vec![1, 0, 1, 1, 0, 0, 0, 1, 1]),
            (VoxelType::U8, vec![0, 255, 7]),
            (VoxelType::U16, vec![0, 65535, 300]),
            (VoxelType::U32, vec![0, u32::MAX, 70000]),
        ] {
            let b = encode(&vals, ty);
            assert_eq!(b.len(), ty.payload_len(vals.len()));
            assert_eq!(decode(&b, ty, vals.len(), false).unwrap(), vals);
        }
    }

    #[test]
    fn signed_and_big_endian() {
        assert_eq!(decode(&[0, 1, 1, 0], VoxelType::U16, 2, true).unwrap(), vec![1, 256]);
        assert!(decode(&[0xff], VoxelType::I8, 1, false).is_err());
        assert_eq!(decode(&[5], VoxelType::I8, 1, false).unwrap(), vec![5]);
    }

    #[test]
    fn short_payload_is_a_size_mismatch() {
        let e = decode(&[0; 63], VoxelType::U8, 64, false).unwrap_err();
        assert!(matches!(e, FormatError::SizeMismatch { expected: 64, actual: 63 }));
    }
}
