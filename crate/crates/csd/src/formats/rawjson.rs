//! Raw little-endian buffer `<stem>.raw` with sidecar `<stem>.json`:
//! `{"dims": [x, y, z], "spacing": [sx, sy, sz], "dtype": "u8"}`.

use std::fs;
use std::path::{Path, PathBuf};

use csd_core::{Dims, Spacing};
use serde::{Deserialize, Serialize};

use super::{decode, encode, VoxelGrid, VoxelType};
use crate::atomic::{read_json, write_bytes, write_json};
use crate::error::{FormatError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dims: [usize; 3],
    #[serde(default = "unit")]
    pub spacing: [f64; 3],
    pub dtype: String,
}

fn unit() -> [f64; 3] {
    [1.0; 3]
}

fn dtype(s: &str) -> Result<VoxelType> {
    Ok(match s {
        "u1" | "bit" => VoxelType::Bit,
        "u8" => VoxelType::U8,
        "u16" => VoxelType::U16,
        "u32" => VoxelType::U32,
        other => return Err(FormatError::UnsupportedType(other.to_string())),
    })
}

fn dtype_name(ty: VoxelType) -> Result<&'static str> {
    Ok(match ty {
        VoxelType::Bit => "u1",
        VoxelType::U8 => "u8",
        VoxelType::U16 => "u16",
        VoxelType::U32 => "u32",
        other => return Err(FormatError::UnsupportedType(format!("{other:?}"))),
    })
}

/// `(sidecar, data)` paths for either member of the pair.
pub fn paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("raw"))
}

pub fn read(path: &Path) -> Result<VoxelGrid> {
    let (meta_path, data_path) = paths(path);
    let meta: Sidecar = read_json(&meta_path)?;
    let [x, y, z] = meta.dims;
    if x == 0 || y == 0 || z == 0 {
        return Err(FormatError::header("dims", format!("{:?} has a zero extent", meta.dims)));
    }
    if !meta.spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
        return Err(FormatError::header("spacing", format!("{:?} is not positive", meta.spacing)));
    }
    let ty = dtype(&meta.dtype)?;
    let bytes = fs::read(&data_path).map_err(|e| FormatError::io(&data_path, e))?;
    let dims = Dims::new(x, y, z);
    let values = decode(&bytes, ty, dims.len(), false)?;
    Ok(VoxelGrid {
        dims,
        spacing: Spacing::new(meta.spacing[0], meta.spacing[1], meta.spacing[2]),
        values,
    })
}

pub fn write(path: &Path, grid: &VoxelGrid, ty: VoxelType) -> Result<()> {
    let (meta_path, data_path) = paths(path);
    let meta = Sidecar {
        dims: grid.dims.to_array(),
        spacing: grid.spacing.to_array(),
        dtype: dtype_name(ty)?.to_string(),
    };
    write_bytes(&data_path, &encode(&grid.values, ty))?;
    write_json(&meta_path, &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_voxel_at_origin() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        fs::write(&p, [1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        fs::write(dir.path().join("v.json"), r#"{"dims":[2,2,2],"dtype":"u8"}"#).unwrap();
        let g = read(&p).unwrap();
        assert_eq!(g.spacing, Spacing::UNIT);
        let vol = g.into_binary().unwrap();
        assert_eq!(vol.count(), 1);
        assert!(vol.at(0, 0, 0));
    }

    #[test]
    fn size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.json");
        fs::write(dir.path().join("v.raw"), [0u8; 63]).unwrap();
        fs::write(&p, r#"{"dims":[4,4,4],"spacing":[1,1,1],"dtype":"u8"}"#).unwrap();
        assert!(matches!(read(&p), Err(FormatError::SizeMismatch { expected: 64, actual: 63 })));
    }

    #[test]
    fn round_trip_bits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.json");
        let g = VoxelGrid {
            dims: Dims::new(3, 3, 1),
            spacing: Spacing::new(1.0, 2.0, 3.0),
            values: vec![1, 0, 1, 0, 0, 1, 1, 1, 0],
        };
        write(&p, &g, VoxelType::Bit).unwrap();
        assert_eq!(fs::read(dir.path().join("b.raw")).unwrap().len(), 2);
        assert_eq!(read(&p).unwrap(), g);
    }
}
