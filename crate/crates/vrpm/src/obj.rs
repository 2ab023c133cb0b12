//! Minimal Wavefront OBJ reader and writer (`v` and `f` records only).

use std::fmt::Write as _;

use vrpm_core::{GridSpec, HalfEdgeMesh, RawMesh, VertexId};

#[derive(Debug, thiserror::Error)]
pub enum ObjError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: vertex index {index} out of range for {count} vertices")]
    Index {
        line: usize,
        index: i64,
        count: usize,
    },
}

/// Parsed file plus the number of records that were skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjMesh {
    pub mesh: RawMesh,
    /// Records other than `v`/`f` (normals, UVs, groups, materials, ...).
    pub ignored: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> ObjError {
    ObjError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses ASCII OBJ. Polygons are fan-triangulated around their first corner;
/// `v/vt/vn` corner syntax and negative (relative) indices are accepted.
pub fn load_obj(bytes: &[u8]) -> Result<ObjMesh, ObjError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        parse_err(line, "not valid UTF-8")
    })?;
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    // Face corners as resolved 0-based indices, checked once all vertices are known.
    let mut pending: Vec<(usize, i64, usize)> = Vec::new();
    let mut ignored = 0;

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        let mut parts = content.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" => {
                let mut p = [0.0; 3];
                for slot in &mut p {
                    let s = parts
                        .next()
                        .ok_or_else(|| parse_err(line, "vertex needs three coordinates"))?;
                    *slot = s
                        .parse::<f64>()
                        .map_err(|_| parse_err(line, format!("bad coordinate {s:?}")))?;
                }
                positions.push(p);
            }
            "f" => {
                let mut corners = Vec::new();
                for tok in parts {
                    let idx = tok.split('/').next().unwrap_or("");
                    let n: i64 = idx
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad face index {tok:?}")))?;
                    let resolved = match n {
                        0 => {
                            return Err(ObjError::Index {
                                line,
                                index: 0,
                                count: positions.len(),
                            })
                        }
                        n if n > 0 => n - 1,
                        n => positions.len() as i64 + n,
                    };
                    if resolved < 0 {
                        return Err(ObjError::Index {
                            line,
                            index: n,
                            count: positions.len(),
                        });
                    }
                    pending.push((line, n, resolved as usize));
                    corners.push(resolved as usize);
                }
                if corners.len() < 3 {
                    return Err(parse_err(line, "face needs at least three vertices"));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => ignored += 1,
        }
    }
    if let Some(&(line, index, _)) = pending.iter().find(|&&(_, _, r)| r >= positions.len()) {
        return Err(ObjError::Index {
            line,
            index,
            count: positions.len(),
        });
    }
    Ok(ObjMesh {
        mesh: RawMesh::new(positions, faces),
        ignored,
    })
}

/// Writes `mesh` with vertices at their bin centers under `grid`.
pub fn save_obj(mesh: &HalfEdgeMesh, grid: &GridSpec) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "# vrpm n_bins={}", grid.n_bins);
    let ids: Vec<VertexId> = mesh.vertex_ids().collect();
    for &v in &ids {
        let [x, y, z] = grid.dequantize(mesh.coord(v).expect("live vertex"));
        let _ = writeln!(out, "v {x} {y} {z}");
    }
    let index = |v: VertexId| ids.binary_search(&v).expect("live vertex") + 1;
    for tri in mesh.face_list() {
        let [a, b, c] = tri.map(index);
        let _ = writeln!(out, "f {a} {b} {c}");
    }
    out.into_bytes()
}

/// Writes a float mesh as-is.
pub fn save_raw_obj(mesh: &RawMesh) -> Vec<u8> {
    let mut out = String::new();
    for [x, y, z] in &mesh.positions {
        let _ = writeln!(out, "v {x} {y} {z}");
    }
    for [a, b, c] in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out.into_bytes()
}
