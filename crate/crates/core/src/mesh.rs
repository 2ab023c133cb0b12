//! Half-edge triangle mesh over quantized grid coordinates.
//!
//! Every face slot owns three consecutive half-edges (`3f`, `3f + 1`, `3f + 2`),
//! so `next` is implicit in the layout but still stored on each [`HalfEdge`].
//! Deleted faces and vertices are tombstoned and their ids go on a free-list,
//! which keeps surviving ids stable across long collapse/split sequences.
//!
//! Vertices are welded by coordinate: the mesh refuses two live vertices on the
//! same grid cell, and keeps a coordinate index ordered by `(x, y, z)` so that
//! callers can run prefix queries over it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Bound;

use crate::manifold::{validate_faces_with, ManifoldReport};

/// A vertex position on the `N^3` quantization grid.
///
/// The derived ordering is `(x, y, z)` lexicographic, which is the order tokens
/// are emitted in. Sorting for canonical face order uses [`Coord::zyx`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub x: u16,
    pub y: u16,
    pub z: u16,
}

impl Coord {
    pub const fn new(x: u16, y: u16, z: u16) -> Self {
        Self { x, y, z }
    }

    /// Rank key: z-major, then y, then x.
    pub const fn zyx(self) -> (u16, u16, u16) {
        (self.z, self.y, self.x)
    }

    pub const fn to_array(self) -> [u16; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }

    pub fn max_component(self) -> u16 {
        self.x.max(self.y).max(self.z)
    }
}

impl From<[u16; 3]> for Coord {
    fn from(c: [u16; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub const fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Slot index of a vertex.
    VertexId
);
id_type!(
    /// Slot index of a half-edge.
    HalfEdgeId
);
id_type!(
    /// Slot index of a face.
    FaceId
);

/// One directed edge of a face, stored counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfEdge {
    pub origin: VertexId,
    pub next: HalfEdgeId,
    /// `None` on a boundary edge.
    pub twin: Option<HalfEdgeId>,
    pub face: FaceId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeshError {
    #[error("vertex {0} is not active")]
    InactiveVertex(VertexId),
    #[error("face {0} is not active")]
    InactiveFace(FaceId),
    #[error("vertices {0} and {1} do not share an edge")]
    NotAnEdge(VertexId, VertexId),
    #[error("face repeats a vertex: {0:?}")]
    DegenerateFace([VertexId; 3]),
    #[error("half-edge {0}->{1} already exists (edge-manifold or orientation violation)")]
    DuplicateHalfEdge(VertexId, VertexId),
    #[error("a vertex already occupies {0}")]
    CoordinateCollision(Coord),
    #[error("vertex {0} still has incident faces")]
    VertexInUse(VertexId),
    #[error("vertex {0} has more than one fan")]
    NonManifoldVertex(VertexId),
    #[error("face index {index} out of range for {len} vertices")]
    IndexOutOfRange { index: u32, len: usize },
    #[error("mesh is not manifold: {0}")]
    NonManifold(ManifoldReport),
}

/// Ordered one-ring of a vertex `v`.
///
/// Face `i` is the oriented triangle `(neighbors[i], v, neighbors[i + 1])`
/// (indices wrap when the ring is closed). The order is the one produced by
/// repeatedly stepping to `twin(next(h))` from an incoming half-edge `h`; an
/// open ring starts at the incoming half-edge that has no twin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    pub neighbors: Vec<VertexId>,
    pub faces: Vec<FaceId>,
    pub closed: bool,
}

impl Ring {
    pub fn position(&self, v: VertexId) -> Option<usize> {
        self.neighbors.iter().position(|&n| n == v)
    }
}

#[derive(Clone, Debug, Default)]
pub struct HalfEdgeMesh {
    vertices: Vec<Option<Coord>>,
    half_edges: Vec<HalfEdge>,
    faces: Vec<Option<HalfEdgeId>>,
    free_vertices: Vec<VertexId>,
    free_faces: Vec<FaceId>,
    edge_index: BTreeMap<(VertexId, VertexId), HalfEdgeId>,
    coord_index: BTreeMap<Coord, VertexId>,
    live_faces: usize,
}

impl HalfEdgeMesh {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a mesh from an indexed triangle list after checking it is manifold.
    /// Vertex `i` of `coords` receives id `VertexId(i)`.
    pub fn from_faces(coords: &[Coord], faces: &[[u32; 3]]) -> Result<Self, MeshError> {
        for tri in faces {
            for &i in tri {
                if i as usize >= coords.len() {
                    return Err(MeshError::IndexOutOfRange {
                        index: i,
                        len: coords.len(),
                    });
                }
            }
        }
        let report = validate_faces_with(coords.len(), faces, |_| true);
        if !report.is_valid() {
            return Err(MeshError::NonManifold(report));
        }
        let mut mesh = Self::new();
        for &c in coords {
            mesh.add_vertex(c)?;
        }
        for tri in faces {
            mesh.add_face([VertexId(tri[0]), VertexId(tri[1]), VertexId(tri[2])])?;
        }
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.coord_index.len()
    }

    pub fn face_count(&self) -> usize {
        self.live_faces
    }

    pub fn half_edge_count(&self) -> usize {
        self.edge_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live_faces == 0
    }

    /// Number of vertex slots, live or tombstoned.
    pub fn vertex_slots(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        matches!(self.vertices.get(v.index()), Some(Some(_)))
    }

    pub fn is_face_active(&self, f: FaceId) -> bool {
        matches!(self.faces.get(f.index()), Some(Some(_)))
    }

    pub fn coord(&self, v: VertexId) -> Result<Coord, MeshError> {
        self.vertices
            .get(v.index())
            .copied()
            .flatten()
            .ok_or(MeshError::InactiveVertex(v))
    }

    pub fn vertex_at(&self, c: Coord) -> Option<VertexId> {
        self.coord_index.get(&c).copied()
    }

    /// Live vertex ids in ascending slot order.
    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_some())
            .map(|(i, _)| VertexId(i as u32))
    }

    /// Live face ids in ascending slot order.
    pub fn face_ids(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_some())
            .map(|(i, _)| FaceId(i as u32))
    }

    /// Live vertices ordered by coordinate `(x, y, z)`.
    pub fn coords(&self) -> impl Iterator<Item = (Coord, VertexId)> + '_ {
        self.coord_index.iter().map(|(&c, &v)| (c, v))
    }

    /// Live vertices whose coordinate starts with the given `x` (and `y`, if set).
    pub fn coords_with_prefix(
        &self,
        x: u16,
        y: Option<u16>,
    ) -> impl Iterator<Item = (Coord, VertexId)> + '_ {
        let (lo, hi) = match y {
            Some(y) => (Coord::new(x, y, 0), Coord::new(x, y, u16::MAX)),
            None => (Coord::new(x, 0, 0), Coord::new(x, u16::MAX, u16::MAX)),
        };
        self.coord_index
            .range((Bound::Included(lo), Bound::Included(hi)))
            .map(|(&c, &v)| (c, v))
    }

    pub fn half_edge(&self, h: HalfEdgeId) -> &HalfEdge {
        &self.half_edges[h.index()]
    }

    pub fn next(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.half_edges[h.index()].next
    }

    pub fn prev(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.next(self.next(h))
    }

    pub fn twin(&self, h: HalfEdgeId) -> Option<HalfEdgeId> {
        self.half_edges[h.index()].twin
    }

    pub fn origin(&self, h: HalfEdgeId) -> VertexId {
        self.half_edges[h.index()].origin
    }

    pub fn dest(&self, h: HalfEdgeId) -> VertexId {
        self.origin(self.next(h))
    }

    pub fn face_of(&self, h: HalfEdgeId) -> FaceId {
        self.half_edges[h.index()].face
    }

    pub fn find_half_edge(&self, from: VertexId, to: VertexId) -> Option<HalfEdgeId> {
        self.edge_index.get(&(from, to)).copied()
    }

    pub fn face_half_edge(&self, f: FaceId) -> Result<HalfEdgeId, MeshError> {
        self.faces
            .get(f.index())
            .copied()
            .flatten()
            .ok_or(MeshError::InactiveFace(f))
    }

    pub fn face_vertices(&self, f: FaceId) -> Result<[VertexId; 3], MeshError> {
        let h0 = self.face_half_edge(f)?;
        let h1 = self.next(h0);
        let h2 = self.next(h1);
        Ok([self.origin(h0), self.origin(h1), self.origin(h2)])
    }

    pub fn face_coords(&self, f: FaceId) -> Result<[Coord; 3], MeshError> {
        let [a, b, c] = self.face_vertices(f)?;
        Ok([self.coord(a)?, self.coord(b)?, self.coord(c)?])
    }

    /// Outgoing half-edges of `v`, ordered by destination id.
    pub fn outgoing(&self, v: VertexId) -> impl Iterator<Item = HalfEdgeId> + '_ {
        self.edge_index
            .range((v, VertexId(0))..=(v, VertexId(u32::MAX)))
            .map(|(_, &h)| h)
    }

    pub fn incident_faces(&self, v: VertexId) -> Vec<FaceId> {
        self.outgoing(v).map(|h| self.face_of(h)).collect()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.outgoing(v).count()
    }

    pub fn add_vertex(&mut self, c: Coord) -> Result<VertexId, MeshError> {
        if self.coord_index.contains_key(&c) {
            return Err(MeshError::CoordinateCollision(c));
        }
        let v = match self.free_vertices.pop() {
            Some(v) => {
                self.vertices[v.index()] = Some(c);
                v
            }
            None => {
                self.vertices.push(Some(c));
                VertexId(self.vertices.len() as u32 - 1)
            }
        };
        self.coord_index.insert(c, v);
        Ok(v)
    }

    /// Removes an isolated vertex.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<(), MeshError> {
        let c = self.coord(v)?;
        if self.outgoing(v).next().is_some() {
            return Err(MeshError::VertexInUse(v));
        }
        self.vertices[v.index()] = None;
        self.coord_index.remove(&c);
        self.free_vertices.push(v);
        Ok(())
    }

    /// Adds the counter-clockwise triangle `tri`, linking twins with existing faces.
    pub fn add_face(&mut self, tri: [VertexId; 3]) -> Result<FaceId, MeshError> {
        for &v in &tri {
            self.coord(v)?;
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(MeshError::DegenerateFace(tri));
        }
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            if self.edge_index.contains_key(&(a, b)) {
                return Err(MeshError::DuplicateHalfEdge(a, b));
            }
        }
        let f = match self.free_faces.pop() {
            Some(f) => f,
            None => {
                self.faces.push(None);
                let f = FaceId(self.faces.len() as u32 - 1);
                let base = 3 * f.0;
                for i in 0..3 {
                    self.half_edges.push(HalfEdge {
                        origin: VertexId(0),
                        next: HalfEdgeId(base + (i + 1) % 3),
                        twin: None,
                        face: f,
                    });
                }
                f
            }
        };
        let base = 3 * f.0;
        for i in 0..3u32 {
            let h = HalfEdgeId(base + i);
            let (a, b) = (tri[i as usize], tri[((i + 1) % 3) as usize]);
            let twin = self.edge_index.get(&(b, a)).copied();
            self.half_edges[h.index()] = HalfEdge {
                origin: a,
                next: HalfEdgeId(base + (i + 1) % 3),
                twin,
                face: f,
            };
            if let Some(t) = twin {
                self.half_edges[t.index()].twin = Some(h);
            }
            self.edge_index.insert((a, b), h);
        }
        self.faces[f.index()] = Some(HalfEdgeId(base));
        self.live_faces += 1;
        Ok(f)
    }

    /// Removes a face and returns its vertices. Vertices are left in place.
    pub fn remove_face(&mut self, f: FaceId) -> Result<[VertexId; 3], MeshError> {
        let tri = self.face_vertices(f)?;
        let base = 3 * f.0;
        for i in 0..3u32 {
            let h = HalfEdgeId(base + i);
            if let Some(t) = self.half_edges[h.index()].twin.take() {
                self.half_edges[t.index()].twin = None;
            }
            let (a, b) = (tri[i as usize], tri[((i + 1) % 3) as usize]);
            self.edge_index.remove(&(a, b));
        }
        self.faces[f.index()] = None;
        self.free_faces.push(f);
        self.live_faces -= 1;
        Ok(tri)
    }

    /// Vertices sharing an edge with `v`, ascending by id.
    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>, MeshError> {
        self.coord(v)?;
        let mut set = BTreeSet::new();
        for h in self.outgoing(v) {
            set.insert(self.dest(h));
            set.insert(self.origin(self.prev(h)));
        }
        Ok(set.into_iter().collect())
    }

    pub fn is_boundary_edge(&self, a: VertexId, b: VertexId) -> Result<bool, MeshError> {
        self.coord(a)?;
        self.coord(b)?;
        match (self.find_half_edge(a, b), self.find_half_edge(b, a)) {
            (None, None) => Err(MeshError::NotAnEdge(a, b)),
            (Some(_), Some(_)) => Ok(false),
            _ => Ok(true),
        }
    }

    /// True when some edge at `v` has a single incident face.
    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.outgoing(v).any(|h| self.twin(h).is_none())
            || self.outgoing(v).any(|h| self.twin(self.prev(h)).is_none())
    }

    /// Ordered one-ring of a manifold vertex.
    pub fn ring(&self, v: VertexId) -> Result<Ring, MeshError> {
        self.coord(v)?;
        let incident = self.degree(v);
        let first = self
            .outgoing(v)
            .next()
            .ok_or(MeshError::NonManifoldVertex(v))?;
        let h0 = self.prev(first);

        // Back up to the start of the fan: the incoming half-edge with no twin,
        // or `h0` itself when the fan closes.
        let mut start = h0;
        let mut steps = 0;
        while let Some(t) = self.twin(start) {
            let g = self.prev(t);
            if g == h0 {
                break;
            }
            start = g;
            steps += 1;
            if steps > incident {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }

        let mut neighbors = vec![self.origin(start)];
        let mut faces = Vec::with_capacity(incident);
        let mut closed = false;
        let mut h = start;
        loop {
            faces.push(self.face_of(h));
            let n = self.next(h);
            let w = self.dest(n);
            match self.twin(n) {
                None => {
                    neighbors.push(w);
                    break;
                }
                Some(g) if g == start => {
                    closed = true;
                    break;
                }
                Some(g) => {
                    neighbors.push(w);
                    h = g;
                }
            }
            if faces.len() > incident {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }
        if faces.len() != incident {
            return Err(MeshError::NonManifoldVertex(v));
        }
        Ok(Ring {
            neighbors,
            faces,
            closed,
        })
    }

    /// Live faces as vertex-id triples, in face-slot order.
    pub fn face_list(&self) -> Vec<[VertexId; 3]> {
        self.face_ids()
            .map(|f| self.face_vertices(f).expect("live face"))
            .collect()
    }

    pub fn validate(&self) -> ManifoldReport {
        let faces: Vec<[u32; 3]> = self
            .face_list()
            .into_iter()
            .map(|t| [t[0].0, t[1].0, t[2].0])
            .collect();
        validate_faces_with(self.vertices.len(), &faces, |v| self.is_active(VertexId(v)))
    }

    /// Canonical face listing: vertices ranked by `(z, y, x)`, each face rotated
    /// so its lowest-ranked vertex leads (winding kept), faces sorted by the
    /// rotated rank triples.
    pub fn canonical_faces(&self) -> Vec<[VertexId; 3]> {
        let mut keyed: Vec<_> = self
            .face_list()
            .into_iter()
            .map(|tri| {
                let key = |v: VertexId| self.vertices[v.index()].expect("live vertex").zyx();
                let lead = (0..3).min_by_key(|&i| key(tri[i])).expect("three vertices");
                let rot = [tri[lead], tri[(lead + 1) % 3], tri[(lead + 2) % 3]];
                ([key(rot[0]), key(rot[1]), key(rot[2])], rot)
            })
            .collect();
        keyed.sort_unstable_by_key(|k| k.0);
        keyed.into_iter().map(|(_, tri)| tri).collect()
    }

    pub fn canonical_face_coords(&self) -> Vec<[Coord; 3]> {
        self.canonical_faces()
            .into_iter()
            .map(|t| t.map(|v| self.vertices[v.index()].expect("live vertex")))
            .collect()
    }

    /// Live vertex coordinates sorted by rank `(z, y, x)`.
    pub fn ranked_coords(&self) -> Vec<Coord> {
        let mut cs: Vec<Coord> = self.coord_index.keys().copied().collect();
        cs.sort_unstable_by_key(|c| c.zyx());
        cs
    }

    pub fn coord_set(&self) -> BTreeSet<Coord> {
        self.coord_index.keys().copied().collect()
    }

    /// Faces as coordinate triples rotated to a canonical start; identical for
    /// meshes with the same geometry and winding regardless of id assignment.
    pub fn face_set(&self) -> BTreeSet<[Coord; 3]> {
        self.canonical_face_coords().into_iter().collect()
    }

    /// Same vertex coordinates and same oriented faces.
    pub fn same_geometry(&self, other: &Self) -> bool {
        self.vertex_count() == other.vertex_count()
            && self.face_count() == other.face_count()
            && self.coord_set() == other.coord_set()
            && self.face_set() == other.face_set()
    }

    /// Checks the structural invariants of the half-edge arrays and indices.
    pub fn check_structure(&self) -> Result<(), &'static str> {
        let mut live_half_edges = 0;
        for f in self.face_ids() {
            let h0 = self.faces[f.index()].expect("live face");
            let mut h = h0;
            for _ in 0..3 {
                let he = &self.half_edges[h.index()];
                if he.face != f {
                    return Err("half-edge face pointer mismatch");
                }
                if !self.is_active(he.origin) {
                    return Err("half-edge starts at inactive vertex");
                }
                if let Some(t) = he.twin {
                    if self.half_edges[t.index()].twin != Some(h) {
                        return Err("twin is not an involution");
                    }
                    if self.origin(t) != self.dest(h) {
                        return Err("twin origin differs from next origin");
                    }
                    if !self.is_face_active(self.face_of(t)) {
                        return Err("twin lives in a deleted face");
                    }
                } else if self.find_half_edge(self.dest(h), he.origin).is_some() {
                    return Err("unlinked twin");
                }
                if self.edge_index.get(&(he.origin, self.dest(h))) != Some(&h) {
                    return Err("edge index out of sync");
                }
                live_half_edges += 1;
                h = he.next;
            }
            if h != h0 {
                return Err("next is not a 3-cycle");
            }
        }
        if live_half_edges != self.edge_index.len() || live_half_edges != 3 * self.live_faces {
            return Err("half-edge count mismatch");
        }
        for (&c, &v) in &self.coord_index {
            if self.vertices.get(v.index()).copied().flatten() != Some(c) {
                return Err("coordinate index out of sync");
            }
        }
        if self.vertices.iter().filter(|c| c.is_some()).count() != self.coord_index.len() {
            return Err("coordinate index misses a vertex");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn brute_neighbors(mesh: &HalfEdgeMesh, v: VertexId) -> Vec<VertexId> {
        let mut set = BTreeSet::new();
        for tri in mesh.face_list() {
            if tri.contains(&v) {
                set.extend(tri.iter().copied().filter(|&u| u != v));
            }
        }
        set.into_iter().collect()
    }

    #[test]
    fn tetrahedron_neighbors_are_complete() {
        let m = shapes::tetrahedron();
        for v in m.vertex_ids() {
            let n = m.neighbors(v).unwrap();
            assert_eq!(n.len(), 3);
            assert!(!n.contains(&v));
        }
    }

    #[test]
    fn pyramid_neighbors_match_face_scan() {
        let (m, p) = shapes::pyramid();
        assert_eq!(m.neighbors(p.apex).unwrap(), {
            let mut v = p.base.to_vec();
            v.sort();
            v
        });
        let mut expected = vec![p.base[1], p.base[2], p.base[3], p.apex];
        expected.sort();
        assert_eq!(m.neighbors(p.base[0]).unwrap(), expected);
        for v in m.vertex_ids() {
            assert_eq!(m.neighbors(v).unwrap(), brute_neighbors(&m, v));
        }
    }

    #[test]
    fn neighbors_of_inactive_vertex_is_an_error() {
        let mut m = shapes::tetrahedron();
        assert!(matches!(
            m.neighbors(VertexId(99)),
            Err(MeshError::InactiveVertex(_))
        ));
        let v = m.add_vertex(Coord::new(9, 9, 9)).unwrap();
        m.remove_vertex(v).unwrap();
        assert!(m.neighbors(v).is_err());
    }

    #[test]
    fn boundary_edges() {
        let tet = shapes::tetrahedron();
        for tri in tet.face_list() {
            assert!(!tet.is_boundary_edge(tri[0], tri[1]).unwrap());
        }
        let c = [
            Coord::new(0, 0, 0),
            Coord::new(4, 0, 0),
            Coord::new(0, 4, 0),
        ];
        let tri = HalfEdgeMesh::from_faces(&c, &[[0, 1, 2]]).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            assert!(tri.is_boundary_edge(VertexId(a), VertexId(b)).unwrap());
        }

        // Two triangles sharing (1, 2): only the shared edge is interior.
        let c = [
            Coord::new(0, 0, 0),
            Coord::new(4, 0, 0),
            Coord::new(0, 4, 0),
            Coord::new(4, 4, 0),
        ];
        let quad = HalfEdgeMesh::from_faces(&c, &[[0, 1, 2], [1, 3, 2]]).unwrap();
        let v = VertexId;
        assert!(!quad.is_boundary_edge(v(1), v(2)).unwrap());
        let rim = [(0, 1), (1, 3), (3, 2), (2, 0)];
        for (a, b) in rim {
            assert!(quad.is_boundary_edge(v(a), v(b)).unwrap());
            assert!(quad.is_boundary_edge(v(b), v(a)).unwrap());
        }
        assert!(matches!(
            quad.is_boundary_edge(v(0), v(3)),
            Err(MeshError::NotAnEdge(..))
        ));
    }

    #[test]
    fn ring_of_pyramid_apex_is_closed_and_clockwise() {
        let (m, p) = shapes::pyramid();
        let ring = m.ring(p.apex).unwrap();
        assert!(ring.closed);
        assert_eq!(ring.neighbors.len(), 4);
        for (i, &f) in ring.faces.iter().enumerate() {
            let u = ring.neighbors[i];
            let w = ring.neighbors[(i + 1) % 4];
            let h = m.find_half_edge(u, p.apex).unwrap();
            assert_eq!(m.face_of(h), f);
            assert_eq!(m.dest(m.next(h)), w);
        }
    }

    #[test]
    fn ring_of_open_fan_starts_at_boundary() {
        let c = [
            Coord::new(0, 0, 0),
            Coord::new(4, 0, 0),
            Coord::new(0, 4, 0),
            Coord::new(4, 4, 0),
        ];
        let quad = HalfEdgeMesh::from_faces(&c, &[[0, 1, 2], [1, 3, 2]]).unwrap();
        let ring = quad.ring(VertexId(1)).unwrap();
        assert!(!ring.closed);
        assert_eq!(ring.neighbors, vec![VertexId(0), VertexId(2), VertexId(3)]);
        assert_eq!(ring.neighbors.len(), ring.faces.len() + 1);
        let h = quad.find_half_edge(ring.neighbors[0], VertexId(1)).unwrap();
        assert!(quad.twin(h).is_none());
    }

    #[test]
    fn add_face_rejects_orientation_conflicts() {
        let mut m = shapes::tetrahedron();
        let tri = m.face_list()[0];
        assert!(matches!(
            m.add_face(tri),
            Err(MeshError::DuplicateHalfEdge(..))
        ));
        assert!(matches!(
            m.add_face([tri[0], tri[0], tri[1]]),
            Err(MeshError::DegenerateFace(_))
        ));
        m.check_structure().unwrap();
    }

    #[test]
    fn remove_and_readd_keeps_structure() {
        let (mut m, _) = shapes::pyramid();
        let f = m.face_ids().nth(2).unwrap();
        let tri = m.remove_face(f).unwrap();
        m.check_structure().unwrap();
        assert_eq!(m.face_count(), 5);
        let g = m.add_face(tri).unwrap();
        assert_eq!(g, f, "free-list reuses the slot");
        m.check_structure().unwrap();
        assert!(m.validate().is_valid());
    }

    #[test]
    fn canonical_rotation_never_reverses() {
        let c = [
            Coord::new(0, 0, 0),
            Coord::new(0, 0, 1),
            Coord::new(0, 0, 2),
        ];
        // v0 < v1 < v2 by z; face given as (v2, v0, v1).
        let m = HalfEdgeMesh::from_faces(&c, &[[2, 0, 1]]).unwrap();
        assert_eq!(
            m.canonical_faces(),
            vec![[VertexId(0), VertexId(1), VertexId(2)]]
        );
        let m = HalfEdgeMesh::from_faces(&c, &[[2, 1, 0]]).unwrap();
        assert_eq!(
            m.canonical_faces(),
            vec![[VertexId(0), VertexId(2), VertexId(1)]]
        );
    }

    #[test]
    fn z_dominates_rank() {
        let lo = Coord::new(100, 100, 1);
        let hi = Coord::new(0, 0, 2);
        assert!(lo.zyx() < hi.zyx());
        assert!(lo > hi, "token order is x-major");
    }

    #[test]
    fn pyramid_canonical_listing_is_golden() {
        let (m, _) = shapes::pyramid();
        let listing: Vec<[[u16; 3]; 3]> = m
            .canonical_face_coords()
            .into_iter()
            .map(|t| t.map(Coord::to_array))
            .collect();
        // Ranks: b1=(0,0,0) < b2=(100,0,0) < b4=(0,100,0) < b3=(100,100,0) < a.
        let golden = [
            [[0, 0, 0], [100, 0, 0], [50, 50, 80]],
            [[0, 0, 0], [0, 100, 0], [100, 100, 0]],
            [[0, 0, 0], [100, 100, 0], [100, 0, 0]],
            [[0, 0, 0], [50, 50, 80], [0, 100, 0]],
            [[100, 0, 0], [100, 100, 0], [50, 50, 80]],
            [[0, 100, 0], [50, 50, 80], [100, 100, 0]],
        ];
        assert_eq!(listing, golden);
    }
}
