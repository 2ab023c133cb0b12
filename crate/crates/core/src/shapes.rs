//! Procedural meshes used by tests, benchmarks and the corpus generator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::RawMesh;
use crate::mesh::{Coord, HalfEdgeMesh, VertexId};

/// Tetrahedron on the grid with outward-facing triangles.
pub fn tetrahedron() -> HalfEdgeMesh {
    let coords = [
        Coord::new(0, 0, 0),
        Coord::new(100, 0, 0),
        Coord::new(0, 100, 0),
        Coord::new(0, 0, 100),
    ];
    HalfEdgeMesh::from_faces(&coords, &[[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
        .expect("tetrahedron is manifold")
}

pub struct PyramidIds {
    pub apex: VertexId,
    /// `b1..b4` counter-clockwise seen from above.
    pub base: [VertexId; 4],
}

const PYRAMID: [Coord; 5] = [
    Coord::new(0, 0, 0),
    Coord::new(100, 0, 0),
    Coord::new(100, 100, 0),
    Coord::new(0, 100, 0),
    Coord::new(50, 50, 80),
];

/// Square pyramid: four sides plus a base split along `b1-b3`.
pub fn pyramid() -> (HalfEdgeMesh, PyramidIds) {
    let faces = [
        [0, 1, 4],
        [1, 2, 4],
        [2, 3, 4],
        [3, 0, 4],
        [0, 3, 2],
        [0, 2, 1],
    ];
    let mesh = HalfEdgeMesh::from_faces(&PYRAMID, &faces).expect("pyramid is manifold");
    let ids = PyramidIds {
        apex: VertexId(4),
        base: [VertexId(0), VertexId(1), VertexId(2), VertexId(3)],
    };
    (mesh, ids)
}

/// The pyramid after collapsing `b2` into `b1`.
pub fn tetra_from_pyramid() -> HalfEdgeMesh {
    let coords = [PYRAMID[0], PYRAMID[2], PYRAMID[3], PYRAMID[4]];
    HalfEdgeMesh::from_faces(&coords, &[[0, 1, 3], [1, 2, 3], [2, 0, 3], [0, 2, 1]])
        .expect("tetrahedron is manifold")
}

/// Unit icosphere; level 0 is the icosahedron (20 faces), each level quadruples.
pub fn icosphere(level: u32) -> RawMesh {
    let t = (1.0 + libm::sqrt(5.0)) / 2.0;
    let mut positions: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(unit)
    .collect();
    let mut faces: Vec<[usize; 3]> = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, positions: &mut Vec<[f64; 3]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (positions[a], positions[b]);
                positions.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                positions.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut positions);
            let bc = midpoint(b, c, &mut positions);
            let ca = midpoint(c, a, &mut positions);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    RawMesh::new(positions, faces)
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = libm::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    p.map(|c| c / n)
}

/// Torus around the z axis with `major x minor` quads, each split in two.
pub fn torus(major: usize, minor: usize, radius: f64, tube: f64) -> RawMesh {
    let mut positions = Vec::with_capacity(major * minor);
    for i in 0..major {
        let u = 2.0 * PI * i as f64 / major as f64;
        for j in 0..minor {
            let v = 2.0 * PI * j as f64 / minor as f64;
            let r = radius + tube * libm::cos(v);
            positions.push([r * libm::cos(u), r * libm::sin(u), tube * libm::sin(v)]);
        }
    }
    let idx = |i: usize, j: usize| (i % major) * minor + (j % minor);
    let mut faces = Vec::with_capacity(2 * major * minor);
    for i in 0..major {
        for j in 0..minor {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    RawMesh::new(positions, faces)
}

/// Unit cube with each side split into `n x n` quads, vertices jittered by up
/// to `noise` grid spacings.
pub fn noised_cube(n: usize, noise: f64, seed: u64) -> RawMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut index: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    let mut lattice: Vec<[usize; 3]> = Vec::new();
    let mut faces = Vec::new();
    let mut vertex = |p: [usize; 3]| {
        *index.entry(p).or_insert_with(|| {
            lattice.push(p);
            lattice.len() - 1
        })
    };
    // (fixed axis, side, in-plane axes) with the in-plane pair ordered so that
    // `u x v` points outwards.
    for axis in 0..3 {
        for side in [0, n] {
            let (mut u, mut v) = ((axis + 1) % 3, (axis + 2) % 3);
            if side == 0 {
                core::mem::swap(&mut u, &mut v);
            }
            for i in 0..n {
                for j in 0..n {
                    let at = |di: usize, dj: usize| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[v] = j + dj;
                        p
                    };
                    let (a, b, c, d) = (
                        vertex(at(0, 0)),
                        vertex(at(1, 0)),
                        vertex(at(1, 1)),
                        vertex(at(0, 1)),
                    );
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                }
            }
        }
    }
    let h = 1.0 / n as f64;
    let positions = lattice
        .iter()
        .map(|p| p.map(|c| c as f64 * h + noise * h * (rng.random::<f64>() - 0.5)))
        .collect();
    RawMesh::new(positions, faces)
}

/// Open `nx x ny` quad grid over the unit square with random heights up to
/// `amplitude`.
pub fn height_patch(nx: usize, ny: usize, amplitude: f64, seed: u64) -> RawMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let (x, y) = (i as f64 / nx as f64, j as f64 / ny as f64);
            let z = amplitude * (libm::sin(3.0 * x + y) * 0.5 + rng.random::<f64>() * 0.5);
            positions.push([x, y * ny as f64 / nx as f64, z]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    RawMesh::new(positions, faces)
}

/// Ribbon of `n` quads along a helix-like curve, two triangles per quad.
pub fn strip(n: usize, twist: f64) -> RawMesh {
    let mut positions = Vec::with_capacity(2 * (n + 1));
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let a = twist * s;
        let center = [s * 4.0, libm::sin(2.0 * s) * 0.6, 0.0];
        let off = [0.0, 0.5 * libm::cos(a), 0.5 * libm::sin(a)];
        positions.push([center[0], center[1] - off[1], -off[2]]);
        positions.push([center[0], center[1] + off[1], off[2]]);
    }
    let mut faces = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
        faces.push([a, b, c]);
        faces.push([a, c, d]);
    }
    RawMesh::new(positions, faces)
}

/// Applies a random rotation.
pub fn rotate(raw: &RawMesh, rng: &mut impl Rng) -> RawMesh {
    // Uniform unit quaternion.
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = (libm::sqrt(1.0 - u1), libm::sqrt(u1));
    let q = [
        a * libm::sin(2.0 * PI * u2),
        a * libm::cos(2.0 * PI * u2),
        b * libm::sin(2.0 * PI * u3),
        b * libm::cos(2.0 * PI * u3),
    ];
    let [x, y, z, w] = q;
    let m = [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ];
    let positions = raw
        .positions
        .iter()
        .map(|p| [0, 1, 2].map(|r| m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2]))
        .collect();
    RawMesh::new(positions, raw.faces.clone())
}

/// Test corpus of 105 named meshes: icospheres at three levels, tori, noised
/// subdivided cubes, and open strips and patches.
pub fn corpus(seed: u64) -> Vec<(String, RawMesh)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for level in 1..=3 {
        for k in 0..10 {
            out.push((
                format!("icosphere-l{level}-{k}"),
                rotate(&icosphere(level), &mut rng),
            ));
        }
    }
    for k in 0..25 {
        let major = 12 + (k % 5) * 2;
        let minor = 6 + (k % 3) * 2;
        let tube = 0.25 + 0.05 * (k % 4) as f64;
        out.push((
            format!("torus-{major}x{minor}-{k}"),
            rotate(&torus(major, minor, 1.0, tube), &mut rng),
        ));
    }
    for k in 0..25 {
        let n = 2 + k % 4;
        let seed = rng.random();
        out.push((
            format!("cube-n{n}-{k}"),
            rotate(&noised_cube(n, 0.3, seed), &mut rng),
        ));
    }
    for k in 0..13 {
        let n = 6 + k;
        out.push((format!("strip-{n}-{k}"), strip(n, 0.3 * k as f64)));
    }
    for k in 0..12 {
        let (nx, ny) = (3 + k % 5, 2 + k % 4);
        let seed = rng.random();
        out.push((
            format!("patch-{nx}x{ny}-{k}"),
            height_patch(nx, ny, 0.3, seed),
        ));
    }
    out
}
