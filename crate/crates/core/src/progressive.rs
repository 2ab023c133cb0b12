//! Vertex-split records and progressive reconstruction.

use alloc::vec::Vec;

use crate::grid::GridSpec;
use crate::mesh::{Coord, FaceId, HalfEdgeMesh, MeshError, VertexId};

/// Inverse of one edge collapse: split `s` to reintroduce `t`, restoring the
/// faces `(s, l, t)` and `(r, s, t)` that exist on each non-`None` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VSplitRecord {
    pub s: Coord,
    pub l: Option<Coord>,
    pub r: Option<Coord>,
    pub t: Coord,
}

impl VSplitRecord {
    /// True when one side is `None`, i.e. the split adds a single face.
    pub fn is_boundary(&self) -> bool {
        self.l.is_none() || self.r.is_none()
    }

    /// Faces this split adds.
    pub fn added_faces(&self) -> usize {
        self.l.is_some() as usize + self.r.is_some() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    S,
    L,
    R,
    T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("split vertex {0} does not exist")]
    UnknownSource(Coord),
    #[error("{side:?} = {coord} is not a neighbor of the split vertex")]
    NotANeighbor { side: Side, coord: Coord },
    #[error("both sides of the split are NIL")]
    BothNil,
    #[error("NIL side at interior vertex {0}")]
    NilAtInterior(Coord),
    #[error("both sides name the same vertex {0}")]
    SameSides(Coord),
    #[error("new vertex {0} collides with an existing vertex")]
    Collision(Coord),
    #[error("split vertex {0} has no single ordered fan")]
    NonManifoldRing(Coord),
    #[error("level {k} requested but only {available} splits exist")]
    LevelOutOfRange { k: usize, available: usize },
    #[error("mesh update failed: {0}")]
    Mesh(MeshError),
}

impl From<MeshError> for SplitError {
    fn from(e: MeshError) -> Self {
        SplitError::Mesh(e)
    }
}

/// How a split divides the one-ring of `s`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RingPartition {
    /// Neighbors that stay attached to `s` only.
    pub stay: Vec<VertexId>,
    /// Neighbors that end up attached to `t` only.
    pub moved: Vec<VertexId>,
    /// Faces of `s` that are re-homed onto `t`.
    pub moved_faces: Vec<FaceId>,
}

/// Splits the ring of `s` at `l` and `r`.
///
/// Walking the ring in its stored order from `r` to `l`, the faces passed
/// move to `t`. `None` stands for the gap of an open ring.
pub fn partition_ring(
    mesh: &HalfEdgeMesh,
    s: VertexId,
    l: Option<VertexId>,
    r: Option<VertexId>,
) -> Result<RingPartition, SplitError> {
    let sc = mesh.coord(s)?;
    if l.is_none() && r.is_none() {
        return Err(SplitError::BothNil);
    }
    if let Some(l) = l.filter(|&l| Some(l) == r) {
        return Err(SplitError::SameSides(mesh.coord(l)?));
    }
    let ring = mesh.ring(s).map_err(|_| SplitError::NonManifoldRing(sc))?;
    let n = ring.neighbors.len();
    let len = if ring.closed { n } else { n + 1 };
    let pos = |v: Option<VertexId>, side: Side| -> Result<usize, SplitError> {
        match v {
            Some(v) => ring.position(v).ok_or(SplitError::NotANeighbor {
                side,
                coord: mesh.coord(v).unwrap_or_default(),
            }),
            None if ring.closed => Err(SplitError::NilAtInterior(sc)),
            None => Ok(n),
        }
    };
    let a = pos(l, Side::L)?;
    let b = pos(r, Side::R)?;

    let mut part = RingPartition::default();
    let mut i = b;
    while i != a {
        if i < ring.faces.len() {
            part.moved_faces.push(ring.faces[i]);
        }
        i = (i + 1) % len;
        if i != a && i < n {
            part.moved.push(ring.neighbors[i]);
        }
    }
    let mut i = (a + 1) % len;
    while i != b {
        if i < n {
            part.stay.push(ring.neighbors[i]);
        }
        i = (i + 1) % len;
    }
    Ok(part)
}

/// Applies one split in place and returns the new vertex. On error the mesh is
/// left unchanged.
pub fn vsplit_apply(mesh: &mut HalfEdgeMesh, rec: &VSplitRecord) -> Result<VertexId, SplitError> {
    let s = mesh
        .vertex_at(rec.s)
        .ok_or(SplitError::UnknownSource(rec.s))?;
    let side = |c: Option<Coord>, side: Side| -> Result<Option<VertexId>, SplitError> {
        c.map(|c| {
            mesh.vertex_at(c)
                .ok_or(SplitError::NotANeighbor { side, coord: c })
        })
        .transpose()
    };
    let l = side(rec.l, Side::L)?;
    let r = side(rec.r, Side::R)?;
    if mesh.vertex_at(rec.t).is_some() {
        return Err(SplitError::Collision(rec.t));
    }
    let part = partition_ring(mesh, s, l, r)?;

    let mut removed = Vec::with_capacity(part.moved_faces.len());
    for &f in &part.moved_faces {
        removed.push(mesh.remove_face(f)?);
    }
    let t = mesh.add_vertex(rec.t)?;
    let mut added = Vec::with_capacity(removed.len() + 2);
    let mut tris: Vec<[VertexId; 3]> = removed
        .iter()
        .map(|tri| tri.map(|v| if v == s { t } else { v }))
        .collect();
    if let Some(l) = l {
        tris.push([s, l, t]);
    }
    if let Some(r) = r {
        tris.push([r, s, t]);
    }
    for tri in tris {
        match mesh.add_face(tri) {
            Ok(f) => added.push(f),
            Err(e) => {
                for f in added {
                    mesh.remove_face(f).expect("face just added");
                }
                mesh.remove_vertex(t).expect("vertex just added");
                for tri in removed {
                    mesh.add_face(tri).expect("restoring removed face");
                }
                return Err(e.into());
            }
        }
    }
    Ok(t)
}

/// Base mesh plus the splits that rebuild the full mesh, coarse to fine.
#[derive(Clone, Debug)]
pub struct ProgressiveMesh {
    pub base: HalfEdgeMesh,
    pub records: Vec<VSplitRecord>,
    pub grid: GridSpec,
}

impl ProgressiveMesh {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn interior_splits(&self) -> usize {
        self.records.iter().filter(|r| !r.is_boundary()).count()
    }

    pub fn boundary_splits(&self) -> usize {
        self.records.iter().filter(|r| r.is_boundary()).count()
    }

    /// Face count of the fully refined mesh.
    pub fn final_face_count(&self) -> usize {
        self.base.face_count() + self.records.iter().map(|r| r.added_faces()).sum::<usize>()
    }

    /// `M_k`: the base mesh with the first `k` splits applied.
    pub fn reconstruct(&self, k: usize) -> Result<HalfEdgeMesh, SplitError> {
        reconstruct(self, k)
    }

    /// Visits `M_0, M_1, ..., M_n` in order.
    pub fn replay(
        &self,
        mut visit: impl FnMut(usize, &HalfEdgeMesh),
    ) -> Result<HalfEdgeMesh, SplitError> {
        let mut mesh = self.base.clone();
        visit(0, &mesh);
        for (i, rec) in self.records.iter().enumerate() {
            vsplit_apply(&mut mesh, rec)?;
            visit(i + 1, &mesh);
        }
        Ok(mesh)
    }
}

pub fn reconstruct(pm: &ProgressiveMesh, k: usize) -> Result<HalfEdgeMesh, SplitError> {
    if k > pm.records.len() {
        return Err(SplitError::LevelOutOfRange {
            k,
            available: pm.records.len(),
        });
    }
    let mut mesh = pm.base.clone();
    for rec in &pm.records[..k] {
        vsplit_apply(&mut mesh, rec)?;
    }
    Ok(mesh)
}
