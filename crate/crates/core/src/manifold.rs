//! Manifold validation over an indexed triangle list.
//!
//! Works on raw index triples rather than on [`HalfEdgeMesh`](crate::HalfEdgeMesh)
//! because several violations (three faces on an edge, two same-direction
//! half-edges) cannot be represented in the half-edge structure at all.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DegenerateFace { face: usize },
    DuplicateFace { face: usize, first: usize },
    NonManifoldEdge { a: u32, b: u32, faces: usize },
    InconsistentOrientation { from: u32, to: u32 },
    DisconnectedFan { vertex: u32, fans: usize },
    IsolatedVertex { vertex: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::DegenerateFace { face } => {
                write!(f, "degenerate face: face {face} repeats a vertex")
            }
            Violation::DuplicateFace { face, first } => {
                write!(f, "duplicate face: face {face} repeats face {first}")
            }
            Violation::NonManifoldEdge { a, b, faces } => {
                write!(f, "edge-manifold violation: edge {a}-{b} has {faces} faces")
            }
            Violation::InconsistentOrientation { from, to } => write!(
                f,
                "orientation violation: half-edge {from}->{to} used by two faces"
            ),
            Violation::DisconnectedFan { vertex, fans } => write!(
                f,
                "vertex-fan violation: vertex {vertex} has {fans} disconnected fans"
            ),
            Violation::IsolatedVertex { vertex } => {
                write!(f, "isolated vertex: vertex {vertex} has no faces")
            }
        }
    }
}

/// Result of [`validate_faces`]; empty means the mesh is an oriented 2-manifold
/// (possibly with boundary).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ManifoldReport {
    pub violations: Vec<Violation>,
}

impl ManifoldReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_edge_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::NonManifoldEdge { .. }))
    }

    pub fn has_fan_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::DisconnectedFan { .. }))
    }
}

impl fmt::Display for ManifoldReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("manifold");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Validates a triangle soup over vertices `0..vertex_count`, all of which are
/// expected to be referenced.
pub fn validate_faces(vertex_count: usize, faces: &[[u32; 3]]) -> ManifoldReport {
    validate_faces_with(vertex_count, faces, |_| true)
}

/// Like [`validate_faces`], but only slots for which `is_live` holds must be
/// referenced by some face.
pub fn validate_faces_with(
    vertex_slots: usize,
    faces: &[[u32; 3]],
    is_live: impl Fn(u32) -> bool,
) -> ManifoldReport {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<[u32; 3], usize> = BTreeMap::new();
    let mut undirected: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut directed: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut links: Vec<Vec<(u32, u32)>> = vec![Vec::new(); vertex_slots];

    for (i, &[a, b, c]) in faces.iter().enumerate() {
        if a == b || b == c || a == c {
            violations.push(Violation::DegenerateFace { face: i });
            continue;
        }
        let mut key = [a, b, c];
        key.sort_unstable();
        if let Some(&first) = seen.get(&key) {
            violations.push(Violation::DuplicateFace { face: i, first });
        } else {
            seen.insert(key, i);
        }
        for (u, v) in [(a, b), (b, c), (c, a)] {
            *undirected.entry((u.min(v), u.max(v))).or_default() += 1;
            *directed.entry((u, v)).or_default() += 1;
        }
        for (v, l0, l1) in [(a, b, c), (b, c, a), (c, a, b)] {
            if let Some(link) = links.get_mut(v as usize) {
                link.push((l0, l1));
            }
        }
    }

    for (&(a, b), &count) in &undirected {
        if count > 2 {
            violations.push(Violation::NonManifoldEdge { a, b, faces: count });
        } else {
            for (from, to) in [(a, b), (b, a)] {
                if directed.get(&(from, to)).copied().unwrap_or(0) > 1 {
                    violations.push(Violation::InconsistentOrientation { from, to });
                }
            }
        }
    }

    for (v, link) in links.iter().enumerate() {
        let v = v as u32;
        if link.is_empty() {
            if is_live(v) {
                violations.push(Violation::IsolatedVertex { vertex: v });
            }
            continue;
        }
        let fans = link_components(link);
        if fans > 1 {
            violations.push(Violation::DisconnectedFan { vertex: v, fans });
        }
    }

    ManifoldReport { violations }
}

/// Connected components of a vertex link, given as its edge list.
fn link_components(link: &[(u32, u32)]) -> usize {
    let mut nodes: Vec<u32> = link.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let idx = |n: u32| nodes.binary_search(&n).expect("link node");
    for &(a, b) in link {
        let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..nodes.len())
        .filter(|&i| find(&mut parent, i) == i)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use alloc::string::ToString;

    #[test]
    fn icosphere_is_clean() {
        let ico = shapes::icosphere(2);
        let faces: Vec<[u32; 3]> = ico.faces.iter().map(|f| f.map(|i| i as u32)).collect();
        assert!(validate_faces(ico.positions.len(), &faces).is_valid());
    }

    #[test]
    fn three_faces_on_one_edge() {
        let faces = [[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let report = validate_faces(5, &faces);
        assert!(report.has_edge_violation(), "{report}");
        assert!(report.to_string().contains("edge-manifold violation"));
    }

    #[test]
    fn flipped_neighbor_is_an_orientation_violation() {
        let report = validate_faces(4, &[[0, 1, 2], [0, 1, 3]]);
        assert_eq!(
            report.violations,
            vec![Violation::InconsistentOrientation { from: 0, to: 1 }]
        );
    }

    #[test]
    fn two_cones_touching_at_apex() {
        // Apex 0; cone A over ring 1,2,3 and cone B over ring 4,5,6, each closed
        // by a base triangle. Only vertex 0 is shared.
        let faces = [
            [0, 1, 2],
            [0, 2, 3],
            [0, 3, 1],
            [1, 3, 2],
            [0, 4, 5],
            [0, 5, 6],
            [0, 6, 4],
            [4, 6, 5],
        ];
        // Fan-count oracle: the apex link is two disjoint triangles 1-2-3 and 4-5-6.
        let mut link: Vec<(u32, u32)> = Vec::new();
        for f in &faces {
            if let Some(p) = f.iter().position(|&v| v == 0) {
                link.push((f[(p + 1) % 3], f[(p + 2) % 3]));
            }
        }
        assert_eq!(link_components(&link), 2);
        let report = validate_faces(7, &faces);
        assert_eq!(
            report.violations,
            vec![Violation::DisconnectedFan { vertex: 0, fans: 2 }]
        );
    }

    #[test]
    fn duplicate_degenerate_and_isolated() {
        let report = validate_faces(5, &[[0, 1, 2], [0, 2, 1], [3, 3, 1]]);
        assert!(report
            .violations
            .contains(&Violation::DuplicateFace { face: 1, first: 0 }));
        assert!(report
            .violations
            .contains(&Violation::DegenerateFace { face: 2 }));
        assert!(report
            .violations
            .contains(&Violation::IsolatedVertex { vertex: 4 }));
    }
}
