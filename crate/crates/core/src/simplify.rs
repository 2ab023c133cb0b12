//! Quadric-error half-edge collapse decimation.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::grid::GridSpec;
use crate::manifold::ManifoldReport;
use crate::mesh::{Coord, HalfEdgeMesh, MeshError, VertexId};
use crate::progressive::{ProgressiveMesh, VSplitRecord};
use crate::quadric::{dot, edge_constraint, face_normal, face_quadric, norm, Quadric};

/// Boundary-edge constraint planes get this multiple of their face's area.
pub const BOUNDARY_WEIGHT: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CollapseRejection {
    #[error("collapse endpoints coincide")]
    SameVertex,
    #[error("vertices are not joined by an edge")]
    NotAnEdge,
    #[error("link condition fails: endpoints share {shared} neighbors, expected {expected}")]
    LinkCondition { shared: usize, expected: usize },
    #[error("interior edge joins two boundary vertices")]
    BoundaryBridge,
    #[error("collapse would leave vertex {0} without faces")]
    DanglingVertex(VertexId),
    #[error("collapse flips the normal of a face around the removed vertex")]
    NormalFlip,
    #[error("component would drop below {min} faces")]
    TooFewFaces { min: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimplifyError {
    #[error("input is not manifold: {0}")]
    NonManifold(ManifoldReport),
    #[error("collapse rejected: {0}")]
    Rejected(CollapseRejection),
    #[error("mesh update failed: {0}")]
    Mesh(#[from] MeshError),
}

/// Quadric cost of removing `t` into `s`, evaluated at `s`.
pub fn collapse_cost(qs: &Quadric, qt: &Quadric, s: Coord) -> f64 {
    (*qs + *qt).evaluate(s.to_f64()).max(0.0)
}

/// Per-vertex quadrics indexed by vertex slot: area-weighted face planes plus
/// heavily weighted planes that pin boundary edges.
pub fn vertex_quadrics(mesh: &HalfEdgeMesh) -> Vec<Quadric> {
    let mut qs = vec![Quadric::default(); mesh.vertex_slots()];
    for f in mesh.face_ids() {
        let tri = mesh.face_vertices(f).expect("live face");
        let p = tri.map(|v| mesh.coord(v).expect("live vertex").to_f64());
        let Ok(q) = face_quadric(p) else { continue };
        for v in tri {
            qs[v.index()] += q;
        }
        let n = face_normal(p);
        let area2 = norm(n);
        let unit = n.map(|c| c / area2);
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            if mesh.find_half_edge(b, a).is_some() {
                continue;
            }
            let w = BOUNDARY_WEIGHT * 0.5 * area2;
            if let Some(c) = edge_constraint(p[i], p[(i + 1) % 3], unit, w) {
                qs[a.index()] += c;
                qs[b.index()] += c;
            }
        }
    }
    qs
}

/// Checks whether `t` can be collapsed into `s`.
pub fn is_collapse_valid(
    mesh: &HalfEdgeMesh,
    s: VertexId,
    t: VertexId,
) -> Result<(), CollapseRejection> {
    let comp = ComponentInfo::compute(mesh);
    comp.check(mesh, s, t)
}

/// Collapses `t` into `s` after validating it, returning the inverse split.
pub fn ecol(
    mesh: &mut HalfEdgeMesh,
    s: VertexId,
    t: VertexId,
) -> Result<VSplitRecord, SimplifyError> {
    is_collapse_valid(mesh, s, t).map_err(SimplifyError::Rejected)?;
    collapse_unchecked(mesh, s, t)
}

/// Collapse sides: `l` opposite `t -> s`, `r` opposite `s -> t`.
fn sides(mesh: &HalfEdgeMesh, s: VertexId, t: VertexId) -> (Option<VertexId>, Option<VertexId>) {
    let third = |from, to| {
        mesh.find_half_edge(from, to)
            .map(|h| mesh.dest(mesh.next(h)))
    };
    (third(t, s), third(s, t))
}

fn collapse_unchecked(
    mesh: &mut HalfEdgeMesh,
    s: VertexId,
    t: VertexId,
) -> Result<VSplitRecord, SimplifyError> {
    let (l, r) = sides(mesh, s, t);
    let coord = |v: VertexId| mesh.coord(v);
    let rec = VSplitRecord {
        s: coord(s)?,
        l: l.map(coord).transpose()?,
        r: r.map(coord).transpose()?,
        t: coord(t)?,
    };
    let mut rehome = Vec::new();
    for f in mesh.incident_faces(t) {
        let tri = mesh.remove_face(f)?;
        if !tri.contains(&s) {
            rehome.push(tri.map(|v| if v == t { s } else { v }));
        }
    }
    mesh.remove_vertex(t)?;
    for tri in rehome {
        mesh.add_face(tri)?;
    }
    Ok(rec)
}

/// Connected components with their face counts and whether they are closed.
struct ComponentInfo {
    of_vertex: Vec<usize>,
    faces: Vec<usize>,
    closed: Vec<bool>,
}

impl ComponentInfo {
    fn compute(mesh: &HalfEdgeMesh) -> Self {
        let n = mesh.vertex_slots();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for f in mesh.face_ids() {
            let [a, b, c] = mesh.face_vertices(f).expect("live face");
            for (x, y) in [(a, b), (b, c)] {
                let (rx, ry) = (find(&mut parent, x.index()), find(&mut parent, y.index()));
                if rx != ry {
                    parent[rx] = ry;
                }
            }
        }
        let of_vertex: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        let mut faces = vec![0; n];
        let mut closed = vec![true; n];
        for f in mesh.face_ids() {
            let tri = mesh.face_vertices(f).expect("live face");
            let c = of_vertex[tri[0].index()];
            faces[c] += 1;
            for i in 0..3 {
                if mesh.find_half_edge(tri[(i + 1) % 3], tri[i]).is_none() {
                    closed[c] = false;
                }
            }
        }
        Self {
            of_vertex,
            faces,
            closed,
        }
    }

    fn check(
        &self,
        mesh: &HalfEdgeMesh,
        s: VertexId,
        t: VertexId,
    ) -> Result<(), CollapseRejection> {
        if s == t {
            return Err(CollapseRejection::SameVertex);
        }
        if !mesh.is_active(s) || !mesh.is_active(t) {
            return Err(CollapseRejection::NotAnEdge);
        }
        if mesh.find_half_edge(s, t).is_none() && mesh.find_half_edge(t, s).is_none() {
            return Err(CollapseRejection::NotAnEdge);
        }
        let (l, r) = sides(mesh, s, t);
        let expected: BTreeSet<VertexId> = l.into_iter().chain(r).collect();
        let ns = mesh
            .neighbors(s)
            .map_err(|_| CollapseRejection::NotAnEdge)?;
        let nt: BTreeSet<VertexId> = mesh
            .neighbors(t)
            .map_err(|_| CollapseRejection::NotAnEdge)?
            .into_iter()
            .collect();
        let shared = ns.iter().filter(|v| nt.contains(v)).count();
        if l.is_some() && l == r
            || shared != expected.len()
            || !expected.iter().all(|v| nt.contains(v))
        {
            return Err(CollapseRejection::LinkCondition {
                shared,
                expected: expected.len(),
            });
        }
        let boundary_edge = l.is_none() || r.is_none();
        if !boundary_edge && mesh.is_boundary_vertex(s) && mesh.is_boundary_vertex(t) {
            return Err(CollapseRejection::BoundaryBridge);
        }
        // A vanishing face whose other two edges are both open would strand its
        // third vertex.
        if let Some(l) = l {
            if mesh.find_half_edge(l, s).is_none() && mesh.find_half_edge(t, l).is_none() {
                return Err(CollapseRejection::DanglingVertex(l));
            }
        }
        if let Some(r) = r {
            if mesh.find_half_edge(r, t).is_none() && mesh.find_half_edge(s, r).is_none() {
                return Err(CollapseRejection::DanglingVertex(r));
            }
        }
        let c = self.of_vertex[s.index()];
        let min = if self.closed[c] { 4 } else { 1 };
        if self.faces[c] < min + expected.len() {
            return Err(CollapseRejection::TooFewFaces { min });
        }
        let ps = mesh.coord(s).expect("active").to_f64();
        for f in mesh.incident_faces(t) {
            let tri = mesh.face_vertices(f).expect("live face");
            if tri.contains(&s) {
                continue;
            }
            let before = tri.map(|v| mesh.coord(v).expect("live vertex").to_f64());
            let after = tri.map(|v| {
                if v == t {
                    ps
                } else {
                    mesh.coord(v).expect("live").to_f64()
                }
            });
            if dot(face_normal(before), face_normal(after)) <= 0.0 {
                return Err(CollapseRejection::NormalFlip);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    cost: f64,
    s: VertexId,
    t: VertexId,
    s_key: (u16, u16, u16),
    t_key: (u16, u16, u16),
    stamp_s: u32,
    stamp_t: u32,
}

impl Candidate {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.s_key.cmp(&other.s_key))
            .then(self.t_key.cmp(&other.t_key))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest candidate first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key_cmp(self)
            .then(other.stamp_s.cmp(&self.stamp_s))
            .then(other.stamp_t.cmp(&self.stamp_t))
    }
}

struct Decimator {
    mesh: HalfEdgeMesh,
    quadrics: Vec<Quadric>,
    stamps: Vec<u32>,
    comp: ComponentInfo,
    heap: BinaryHeap<Candidate>,
}

impl Decimator {
    fn push(&mut self, s: VertexId, t: VertexId) {
        let (cs, ct) = (
            self.mesh.coord(s).expect("live vertex"),
            self.mesh.coord(t).expect("live vertex"),
        );
        self.heap.push(Candidate {
            cost: collapse_cost(&self.quadrics[s.index()], &self.quadrics[t.index()], cs),
            s,
            t,
            s_key: cs.zyx(),
            t_key: ct.zyx(),
            stamp_s: self.stamps[s.index()],
            stamp_t: self.stamps[t.index()],
        });
    }

    fn push_around(&mut self, v: VertexId) {
        for w in self.mesh.neighbors(v).expect("live vertex") {
            self.push(v, w);
            self.push(w, v);
        }
    }

    fn is_fresh(&self, c: &Candidate) -> bool {
        self.mesh.is_active(c.s)
            && self.mesh.is_active(c.t)
            && self.stamps[c.s.index()] == c.stamp_s
            && self.stamps[c.t.index()] == c.stamp_t
    }
}

/// Decimates `mesh` greedily by quadric error until no valid collapse remains,
/// and returns the base mesh with its splits ordered coarse to fine.
///
/// Candidates are ordered by cost, then by the `(z, y, x)` rank of the kept
/// and removed vertices, so the result is deterministic.
pub fn decimate_to_pm(
    mesh: &HalfEdgeMesh,
    grid: GridSpec,
) -> Result<ProgressiveMesh, SimplifyError> {
    let report = mesh.validate();
    if !report.is_valid() {
        return Err(SimplifyError::NonManifold(report));
    }
    let mut d = Decimator {
        mesh: mesh.clone(),
        quadrics: vertex_quadrics(mesh),
        stamps: vec![0; mesh.vertex_slots()],
        comp: ComponentInfo::compute(mesh),
        heap: BinaryHeap::new(),
    };
    let vertices: Vec<VertexId> = d.mesh.vertex_ids().collect();
    for v in vertices {
        for w in d.mesh.neighbors(v)? {
            d.push(v, w);
        }
    }

    let mut records = Vec::new();
    while let Some(c) = d.heap.pop() {
        if !d.is_fresh(&c) {
            continue;
        }
        if d.comp.check(&d.mesh, c.s, c.t).is_err() {
            continue;
        }
        let removed = {
            let (l, r) = sides(&d.mesh, c.s, c.t);
            l.is_some() as usize + r.is_some() as usize
        };
        records.push(collapse_unchecked(&mut d.mesh, c.s, c.t)?);
        let comp = d.comp.of_vertex[c.s.index()];
        d.comp.faces[comp] -= removed;
        let qt = d.quadrics[c.t.index()];
        d.quadrics[c.s.index()] += qt;
        d.stamps[c.t.index()] += 1;

        let mut touched = d.mesh.neighbors(c.s)?;
        touched.push(c.s);
        for &v in &touched {
            d.stamps[v.index()] += 1;
        }
        for v in touched {
            d.push_around(v);
        }
    }
    records.reverse();
    Ok(ProgressiveMesh {
        base: d.mesh,
        records,
        grid,
    })
}
