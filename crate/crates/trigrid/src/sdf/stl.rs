//! STL reading (binary and ASCII) with vertex welding, plus a binary writer.

use super::TriangleSurface;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use std::io::Write;
use std::path::Path;

/// Reads an STL file, auto-detecting the binary and ASCII variants.
pub fn read_stl_file(path: impl AsRef<Path>) -> Result<TriangleSurface> {
    let bytes = std::fs::read(path)?;
    read_stl(&bytes)
}

/// Parses STL bytes. Coincident vertices are welded with a tolerance of
/// `1e-6` times the bounding-box diagonal.
pub fn read_stl(bytes: &[u8]) -> Result<TriangleSurface> {
    let raw = if is_binary(bytes) { parse_binary(bytes)? } else { parse_ascii(bytes)? };
    weld(raw)
}

fn is_binary(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() == 84 + 50 * count {
        return true;
    }
    !bytes.starts_with(b"solid")
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>> {
    if bytes.len() < 84 {
        return Err(Error::InvalidSurface("binary STL shorter than header".into()));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() < 84 + 50 * count {
        return Err(Error::InvalidSurface(format!(
            "binary STL truncated: {} bytes for {count} triangles",
            bytes.len()
        )));
    }
    let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    let mut tris = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + 50 * t + 12; // skip the stored normal
        let mut v = [Vec3::zeros(); 3];
        for (k, vk) in v.iter_mut().enumerate() {
            let off = base + 12 * k;
            *vk = Vec3::new(f(off), f(off + 4), f(off + 8));
        }
        tris.push(v);
    }
    Ok(tris)
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::InvalidSurface("ASCII STL is not valid UTF-8".into()))?;
    let mut tris = Vec::new();
    let mut current: Vec<Vec3> = Vec::with_capacity(3);
    let mut in_solid = false;
    for (lineno, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("solid") => in_solid = true,
            Some("endsolid") => in_solid = false,
            Some("facet") | Some("outer") | Some("endloop") => {}
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(Error::InvalidSurface(format!(
                        "facet ending on line {} has {} vertices",
                        lineno + 1,
                        current.len()
                    )));
                }
                tris.push([current[0], current[1], current[2]]);
                current.clear();
            }
            Some("vertex") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| Error::InvalidSurface(format!("bad vertex on line {}", lineno + 1)))?;
                }
                current.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            _ => {}
        }
    }
    if in_solid {
        return Err(Error::InvalidSurface("missing endsolid".into()));
    }
    if tris.is_empty() {
        return Err(Error::InvalidSurface("ASCII STL contains no facets".into()));
    }
    Ok(tris)
}

fn weld(tris: Vec<[Vec3; 3]>) -> Result<TriangleSurface> {
    let mut bbox: Option<Aabb> = None;
    for t in &tris {
        let b = Aabb::from_points(t.iter()).unwrap();
        bbox = Some(match bbox {
            Some(acc) => acc.union(&b),
            None => b,
        });
    }
    let bbox = bbox.ok_or_else(|| Error::InvalidSurface("empty STL".into()))?;
    let tol = 1e-6 * bbox.diagonal();
    let inv = if tol > 0.0 { 1.0 / tol } else { 0.0 };
    let mut map: std::collections::HashMap<(i64, i64, i64), u32> = std::collections::HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut idx = [0u32; 3];
        for (k, v) in t.iter().enumerate() {
            let key = (
                (v.x * inv).round() as i64,
                (v.y * inv).round() as i64,
                (v.z * inv).round() as i64,
            );
            idx[k] = *map.entry(key).or_insert_with(|| {
                vertices.push(*v);
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(idx);
    }
    TriangleSurface::new(vertices, triangles)
}

/// Writes the surface as binary STL.
pub fn write_binary_stl(surface: &TriangleSurface, mut out: impl Write) -> Result<()> {
    let mut header = [0u8; 80];
    header[..7].copy_from_slice(b"trigrid");
    out.write_all(&header)?;
    out.write_all(&(surface.triangles.len() as u32).to_le_bytes())?;
    for t in 0..surface.triangles.len() {
        let n = surface.normals[t];
        let v = surface.triangle_vertices(t);
        let mut record = [0.0f64; 12];
        record[..3].copy_from_slice(&[n.x, n.y, n.z]);
        for k in 0..3 {
            record[3 + 3 * k..6 + 3 * k].copy_from_slice(&[v[k].x, v[k].y, v[k].z]);
        }
        for value in record {
            out.write_all(&(value as f32).to_le_bytes())?;
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}
