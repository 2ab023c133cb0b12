//! Normalization onto the `N^3` grid and welding of quantized vertices.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::manifold::{validate_faces, ManifoldReport};
use crate::mesh::{Coord, HalfEdgeMesh, MeshError};

/// Largest grid resolution whose token vocabulary (`N + 4`) fits in a `u16`.
pub const MAX_BINS: u32 = u16::MAX as u32 - 3;

pub const DEFAULT_BINS: u32 = 128;

/// Float triangle mesh as read from disk: positions plus 0-based triangles.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawMesh {
    pub positions: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl RawMesh {
    pub fn new(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Self {
        Self { positions, faces }
    }

    /// Copy uniformly scaled and translated so its longest axis spans `[0, 1]`.
    pub fn normalized(&self) -> RawMesh {
        let grid = GridSpec::fit(&self.positions, DEFAULT_BINS);
        RawMesh {
            positions: self.positions.iter().map(|&p| grid.normalize(p)).collect(),
            faces: self.faces.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantizeError {
    #[error("mesh has no faces")]
    Empty,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("face {face} references vertex {index} but only {len} exist")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        len: usize,
    },
    #[error("grid resolution {0} outside [2, {MAX_BINS}]")]
    BadResolution(u32),
    #[error("grid scale must be positive and finite")]
    BadScale,
    #[error("every face collapsed to a degenerate triangle after quantization")]
    AllFacesDegenerate,
    #[error("non-manifold after quantization: {0}")]
    NonManifoldAfterQuantization(ManifoldReport),
}

impl From<MeshError> for QuantizeError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::NonManifold(r) => QuantizeError::NonManifoldAfterQuantization(r),
            other => unreachable!("validated faces failed to build: {other}"),
        }
    }
}

/// Resolution plus the affine map between model space and the unit cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n_bins: u32,
    pub origin: [f64; 3],
    pub scale: f64,
}

impl GridSpec {
    pub fn new(n_bins: u32, origin: [f64; 3], scale: f64) -> Result<Self, QuantizeError> {
        if !(2..=MAX_BINS).contains(&n_bins) {
            return Err(QuantizeError::BadResolution(n_bins));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(QuantizeError::BadScale);
        }
        Ok(Self {
            n_bins,
            origin,
            scale,
        })
    }

    /// Identity placement: grid cell centers land inside the unit cube.
    pub fn unit(n_bins: u32) -> Self {
        Self {
            n_bins,
            origin: [0.0; 3],
            scale: 1.0,
        }
    }

    /// Bounding-box fit: longest axis maps to `[0, 1]`, aspect ratio kept.
    pub fn fit(positions: &[[f64; 3]], n_bins: u32) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if positions.is_empty() {
            return Self::unit(n_bins);
        }
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        Self {
            n_bins,
            origin: lo,
            scale: if extent > 0.0 { extent } else { 1.0 },
        }
    }

    pub fn normalize(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| (p[k] - self.origin[k]) / self.scale)
    }

    /// Bin index `floor(c * N)` clamped to `[0, N - 1]`.
    pub fn quantize_scalar(&self, c: f64) -> u16 {
        let bin = libm::floor(c * self.n_bins as f64);
        bin.clamp(0.0, (self.n_bins - 1) as f64) as u16
    }

    pub fn quantize(&self, p: [f64; 3]) -> Coord {
        let [x, y, z] = self.normalize(p).map(|c| self.quantize_scalar(c));
        Coord::new(x, y, z)
    }

    /// Bin center in model space.
    pub fn dequantize(&self, c: Coord) -> [f64; 3] {
        let n = self.n_bins as f64;
        let u = c.to_f64();
        [0, 1, 2].map(|k| self.origin[k] + (u[k] + 0.5) / n * self.scale)
    }
}

/// Fits a grid to `raw` and quantizes it; see [`quantize_with`].
pub fn normalize_quantize(
    raw: &RawMesh,
    n_bins: u32,
) -> Result<(HalfEdgeMesh, GridSpec), QuantizeError> {
    if !(2..=MAX_BINS).contains(&n_bins) {
        return Err(QuantizeError::BadResolution(n_bins));
    }
    check_raw(raw)?;
    let grid = GridSpec::fit(&raw.positions, n_bins);
    let mesh = quantize_with(raw, &grid)?;
    Ok((mesh, grid))
}

/// Quantizes `raw` on an existing grid, welds vertices sharing a cell, drops
/// faces that became degenerate, and rejects the result if it is not manifold.
/// Vertices no surviving face references are discarded.
pub fn quantize_with(raw: &RawMesh, grid: &GridSpec) -> Result<HalfEdgeMesh, QuantizeError> {
    check_raw(raw)?;
    let cells: Vec<Coord> = raw.positions.iter().map(|&p| grid.quantize(p)).collect();

    let mut slot_of: BTreeMap<Coord, u32> = BTreeMap::new();
    let mut coords = Vec::new();
    let mut faces = Vec::with_capacity(raw.faces.len());
    for f in &raw.faces {
        let tri = f.map(|i| cells[i]);
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            continue;
        }
        faces.push(tri.map(|c| {
            *slot_of.entry(c).or_insert_with(|| {
                coords.push(c);
                coords.len() as u32 - 1
            })
        }));
    }
    if faces.is_empty() {
        return Err(QuantizeError::AllFacesDegenerate);
    }
    let report = validate_faces(coords.len(), &faces);
    if !report.is_valid() {
        return Err(QuantizeError::NonManifoldAfterQuantization(report));
    }
    Ok(HalfEdgeMesh::from_faces(&coords, &faces)?)
}

fn check_raw(raw: &RawMesh) -> Result<(), QuantizeError> {
    if raw.faces.is_empty() {
        return Err(QuantizeError::Empty);
    }
    if let Some(i) = raw
        .positions
        .iter()
        .position(|p| p.iter().any(|c| !c.is_finite()))
    {
        return Err(QuantizeError::NonFinite(i));
    }
    for (face, f) in raw.faces.iter().enumerate() {
        if let Some(&index) = f.iter().find(|&&i| i >= raw.positions.len()) {
            return Err(QuantizeError::IndexOutOfRange {
                face,
                index,
                len: raw.positions.len(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_interval_endpoints() {
        let g = GridSpec::unit(128);
        assert_eq!(g.quantize_scalar(0.0), 0);
        assert_eq!(g.quantize_scalar(1.0), 127);
        assert_eq!(g.quantize_scalar(-0.25), 0);
        assert_eq!(g.quantize_scalar(0.5), 64);
    }

    #[test]
    fn longest_axis_fits_unit_interval() {
        let raw = RawMesh::new(
            vec![[1.0, 2.0, 3.0], [5.0, 2.0, 3.0], [1.0, 4.0, 3.0]],
            vec![[0, 1, 2]],
        );
        let (mesh, grid) = normalize_quantize(&raw, 128).unwrap();
        assert_eq!(grid.scale, 4.0);
        let coords: Vec<Coord> = mesh.ranked_coords();
        assert_eq!(
            coords,
            vec![
                Coord::new(0, 0, 0),
                Coord::new(127, 0, 0),
                Coord::new(0, 64, 0)
            ]
        );
    }

    #[test]
    fn near_duplicates_weld_and_drop_their_face() {
        // Quad (0,1,2),(1,3,2) plus a sliver (1,4,3) whose vertex 4 sits 1e-9
        // from vertex 3. Welding 4 into 3 leaves the quad: 4 vertices, 2 faces.
        let raw = RawMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.7, 0.7, 0.0],
                [0.7 + 1e-9, 0.7, 0.0],
            ],
            vec![[0, 1, 2], [1, 3, 2], [1, 4, 3]],
        );
        let (mesh, _) = normalize_quantize(&raw, 128).unwrap();
        assert_eq!(mesh.vertex_count(), 4);
        assert_eq!(mesh.face_count(), 2);
        assert!(mesh.validate().is_valid());
    }

    #[test]
    fn welding_into_non_manifold_is_rejected() {
        // Two triangles whose far corners weld together: they then share a
        // single vertex, producing a two-fan vertex.
        let raw = RawMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
                [1.0, 1.0, 1e-9],
                [0.5, 1.0, 1.0],
            ],
            vec![[0, 1, 3], [4, 2, 5]],
        );
        let err = normalize_quantize(&raw, 16).unwrap_err();
        assert!(matches!(
            err,
            QuantizeError::NonManifoldAfterQuantization(_)
        ));
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(
            normalize_quantize(&RawMesh::default(), 128).unwrap_err(),
            QuantizeError::Empty
        );
        let raw = RawMesh::new(vec![[0.0, f64::NAN, 0.0]; 3], vec![[0, 1, 2]]);
        assert_eq!(
            normalize_quantize(&raw, 128).unwrap_err(),
            QuantizeError::NonFinite(0)
        );
        let raw = RawMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2]]);
        assert_eq!(
            normalize_quantize(&raw, 128).unwrap_err(),
            QuantizeError::AllFacesDegenerate
        );
        assert_eq!(
            normalize_quantize(&raw, 1).unwrap_err(),
            QuantizeError::BadResolution(1)
        );
    }

    proptest! {
        #[test]
        fn quantize_dequantize_is_stable(
            p in prop::array::uniform3(-50.0f64..50.0),
            n in 2u32..2048,
            origin in prop::array::uniform3(-10.0f64..10.0),
            scale in 0.01f64..100.0,
        ) {
            let grid = GridSpec::new(n, origin, scale).unwrap();
            let c = grid.quantize(p);
            prop_assert!(c.max_component() < n as u16);
            prop_assert_eq!(grid.quantize(grid.dequantize(c)), c);
        }
    }
}
