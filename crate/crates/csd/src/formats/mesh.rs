//! Wavefront OBJ and binary STL export.

use std::io::Write;
use std::path::Path;

use csd_core::{TriangleMesh, Vec3};

use crate::atomic::write_atomic;
use crate::error::{FormatError, Result};

/// OBJ text; `lines` are extra polylines written as `l` elements after the
/// mesh (used to overlay a skeleton on its surface).
pub fn write_obj_to(w: &mut dyn Write, mesh: &TriangleMesh, lines: &[Vec<Vec3>]) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    let mut base = mesh.vertices.len() + 1;
    for line in lines {
        if line.len() < 2 {
            continue;
        }
        for p in line {
            writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
        }
        let idx: Vec<String> = (base..base + line.len()).map(|i| i.to_string()).collect();
        writeln!(w, "l {}", idx.join(" "))?;
        base += line.len();
    }
    Ok(())
}

pub fn write_obj(path: &Path, mesh: &TriangleMesh, lines: &[Vec<Vec3>]) -> Result<()> {
    write_atomic(path, |w| write_obj_to(w, mesh, lines))
}

pub fn write_stl_to(w: &mut dyn Write, mesh: &TriangleMesh) -> std::io::Result<()> {
    let mut header = [0u8; 80];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    w.write_all(&header)?;
    let count = u32::try_from(mesh.triangles.len()).map_err(std::io::Error::other)?;
    w.write_all(&count.to_le_bytes())?;
    let put = |w: &mut dyn Write, v: Vec3| -> std::io::Result<()> {
        for c in [v.x, v.y, v.z] {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
        Ok(())
    };
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
        let n = (b - a).cross(c - a).try_normalize(0.0).unwrap_or(Vec3::ZERO);
        put(w, n)?;
        put(w, a)?;
        put(w, b)?;
        put(w, c)?;
        w.write_all(&[0, 0])?;
    }
    Ok(())
}

pub fn write_stl(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    write_atomic(path, |w| write_stl_to(w, mesh))
}

/// Triangles of a binary STL as vertex triplets (no vertex sharing).
pub fn read_stl(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>> {
    if bytes.len() < 84 {
        return Err(FormatError::SizeMismatch {
            expected: 84,
            actual: bytes.len(),
        });
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + 50 * n;
    if bytes.len() != expected {
        return Err(FormatError::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    let v = |o: usize| Vec3::new(f(o), f(o + 4), f(o + 8));
    Ok((0..n)
        .map(|i| {
            let o = 84 + 50 * i + 12;
            [v(o), v(o + 12), v(o + 24)]
        })
        .collect())
}

/// Writes OBJ or STL by extension.
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("obj") => write_obj(path, mesh, &[]),
        Some("stl") => write_stl(path, mesh),
        _ => Err(FormatError::UnknownExtension(path.to_path_buf())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tet() -> TriangleMesh {
        TriangleMesh {
            vertices: vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::Z],
            triangles: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        }
    }

    #[test]
    fn stl_round_trip() {
        let mut buf = Vec::new();
        write_stl_to(&mut buf, &tet()).unwrap();
        assert_eq!(buf.len(), 84 + 4 * 50);
        let tris = read_stl(&buf).unwrap();
        assert_eq!(tris[3], [Vec3::X, Vec3::Y, Vec3::Z]);
    }

    #[test]
    fn obj_indices_are_one_based() {
        let mut buf = Vec::new();
        write_obj_to(&mut buf, &tet(), &[vec![Vec3::ZERO, Vec3::X]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("f 1 3 2\n"));
        assert!(text.ends_with("l 5 6\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 6);
    }
}
