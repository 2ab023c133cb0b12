//! Point-cloud metrics: Chamfer distance, COV, MMD, 1-NNA and JSD.
//!
//! Set-level metrics take precomputed distance matrices so callers can fill
//! them however they like (the CLI does it in parallel).

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::grid::RawMesh;
use crate::quadric::{face_normal, norm};

pub type Point = [f64; 3];

fn dist2(a: &Point, b: &Point) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Area-weighted uniform samples on the surface of `mesh`. Returns an empty
/// cloud when the mesh has no area.
pub fn sample_points(mesh: &RawMesh, n: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in &mesh.faces {
        let p = f.map(|i| mesh.positions[i]);
        total += 0.5 * norm(face_normal(p));
        cumulative.push(total);
    }
    if total.is_nan() || total <= 0.0 {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * total;
            let i = cumulative
                .partition_point(|&c| c <= x)
                .min(mesh.faces.len() - 1);
            let [a, b, c] = mesh.faces[i].map(|k| mesh.positions[k]);
            let r1 = libm::sqrt(rng.random::<f64>());
            let r2 = rng.random::<f64>();
            let (wa, wb, wc) = (1.0 - r1, r1 * (1.0 - r2), r1 * r2);
            [0, 1, 2].map(|k| wa * a[k] + wb * b[k] + wc * c[k])
        })
        .collect()
}

/// Static 3-d tree for nearest-neighbor queries.
pub struct KdTree {
    points: Vec<Point>,
    // Implicit balanced tree: node `[lo, hi)` has its split point at the middle.
    axis: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let mut points = points.to_vec();
        let mut axis = vec![0u8; points.len()];
        build(&mut points, &mut axis, 0);
        Self { points, axis }
    }

    /// Squared distance from `q` to the closest point; infinite for an empty tree.
    pub fn nearest_dist2(&self, q: &Point) -> f64 {
        let mut best = f64::INFINITY;
        self.search(0, self.points.len(), q, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, q: &Point, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[mid];
        *best = best.min(dist2(p, q));
        let ax = self.axis[mid] as usize;
        let diff = q[ax] - p[ax];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, q, best);
        if diff * diff < *best {
            self.search(far.0, far.1, q, best);
        }
    }
}

fn build(points: &mut [Point], axis: &mut [u8], depth: usize) {
    if points.len() <= 1 {
        if let Some(a) = axis.first_mut() {
            *a = (depth % 3) as u8;
        }
        return;
    }
    // Split on the widest axis.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points.iter() {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let ax = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = points.len() / 2;
    points.select_nth_unstable_by(mid, |a, b| a[ax].total_cmp(&b[ax]));
    axis[mid] = ax as u8;
    let (left, rest) = points.split_at_mut(mid);
    let (laxis, raxis) = axis.split_at_mut(mid);
    build(left, laxis, depth + 1);
    build(&mut rest[1..], &mut raxis[1..], depth + 1);
}

/// Mean squared nearest-neighbor distance from every point of `a` to the
/// cloud held by `tree`; the directed half of [`chamfer`].
pub fn mean_nearest_dist2(a: &[Point], tree: &KdTree) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().map(|p| tree.nearest_dist2(p)).sum::<f64>() / a.len() as f64
}

/// Chamfer distance: mean squared nearest-neighbor distance from `a` to `b`
/// plus the same from `b` to `a`.
pub fn chamfer(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    mean_nearest_dist2(a, &KdTree::new(b)) + mean_nearest_dist2(b, &KdTree::new(a))
}

/// Dense row-major matrix of distances between two sets of clouds.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// Pairwise Chamfer distances, sequentially.
pub fn chamfer_matrix(a: &[Vec<Point>], b: &[Vec<Point>]) -> DistanceMatrix {
    let trees_a: Vec<KdTree> = a.iter().map(|c| KdTree::new(c)).collect();
    let trees_b: Vec<KdTree> = b.iter().map(|c| KdTree::new(c)).collect();
    DistanceMatrix::from_fn(a.len(), b.len(), |i, j| {
        mean_nearest_dist2(&a[i], &trees_b[j]) + mean_nearest_dist2(&b[j], &trees_a[i])
    })
}

fn argmin(it: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    it.fold(None, |best, (i, d)| match best {
        Some((_, bd)) if d.total_cmp(&bd) != Ordering::Less => best,
        _ => Some((i, d)),
    })
}

/// Coverage in percent: share of reference clouds that are the nearest
/// reference of at least one generated cloud. `d_gr` is generated x reference.
pub fn cov(d_gr: &DistanceMatrix) -> f64 {
    if d_gr.cols == 0 {
        return 0.0;
    }
    let mut hit = vec![false; d_gr.cols];
    for i in 0..d_gr.rows {
        if let Some((j, _)) = argmin((0..d_gr.cols).map(|j| (j, d_gr.get(i, j)))) {
            hit[j] = true;
        }
    }
    100.0 * hit.iter().filter(|&&h| h).count() as f64 / d_gr.cols as f64
}

/// Minimum matching distance: mean over reference clouds of the distance to
/// the closest generated cloud. `d_gr` is generated x reference.
pub fn mmd(d_gr: &DistanceMatrix) -> f64 {
    if d_gr.cols == 0 || d_gr.rows == 0 {
        return 0.0;
    }
    (0..d_gr.cols)
        .map(|j| {
            argmin((0..d_gr.rows).map(|i| (i, d_gr.get(i, j))))
                .expect("non-empty")
                .1
        })
        .sum::<f64>()
        / d_gr.cols as f64
}

/// 1-nearest-neighbor accuracy in percent over the union of generated and
/// reference clouds, leaving each cloud out of its own search. Ties go to the
/// earlier cloud, generated ones first.
pub fn one_nna(d_gg: &DistanceMatrix, d_rr: &DistanceMatrix, d_gr: &DistanceMatrix) -> f64 {
    let (ng, nr) = (d_gg.rows, d_rr.rows);
    let n = ng + nr;
    if n < 2 {
        return 0.0;
    }
    // Distance between union members `a` and `b`.
    let d = |a: usize, b: usize| match (a < ng, b < ng) {
        (true, true) => d_gg.get(a, b),
        (true, false) => d_gr.get(a, b - ng),
        (false, true) => d_gr.get(b, a - ng),
        (false, false) => d_rr.get(a - ng, b - ng),
    };
    let correct = (0..n)
        .filter(|&a| {
            let (b, _) = argmin((0..n).filter(|&b| b != a).map(|b| (b, d(a, b)))).expect("n >= 2");
            (a < ng) == (b < ng)
        })
        .count();
    100.0 * correct as f64 / n as f64
}

/// Jensen-Shannon divergence (base 2) between the voxel occupancy
/// distributions of two sets of clouds on a `resolution^3` grid over `[0, 1]^3`.
/// Points outside the cube are clamped to its border cells.
pub fn jsd(a: &[Vec<Point>], b: &[Vec<Point>], resolution: usize) -> f64 {
    let p = voxel_histogram(a, resolution);
    let q = voxel_histogram(b, resolution);
    jsd_histograms(&p, &q)
}

pub fn voxel_histogram(clouds: &[Vec<Point>], resolution: usize) -> Vec<f64> {
    let r = resolution.max(1);
    let mut counts = vec![0.0; r * r * r];
    let cell = |c: f64| ((libm::floor(c * r as f64)).clamp(0.0, (r - 1) as f64)) as usize;
    for p in clouds.iter().flatten() {
        let [x, y, z] = p.map(cell);
        counts[(x * r + y) * r + z] += 1.0;
    }
    counts
}

/// JSD of two unnormalized histograms; 0 if either is empty.
pub fn jsd_histograms(p: &[f64], q: &[f64]) -> f64 {
    let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
    if sp == 0.0 || sq == 0.0 {
        return 0.0;
    }
    let h = |v: f64| if v > 0.0 { -v * libm::log2(v) } else { 0.0 };
    let (mut hm, mut hp, mut hq) = (0.0, 0.0, 0.0);
    for (&x, &y) in p.iter().zip(q) {
        let (x, y) = (x / sp, y / sq);
        hm += h(0.5 * (x + y));
        hp += h(x);
        hq += h(y);
    }
    (hm - 0.5 * (hp + hq)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_rng;
    use crate::shapes;

    fn brute_chamfer(a: &[Point], b: &[Point]) -> f64 {
        let side = |x: &[Point], y: &[Point]| {
            x.iter()
                .map(|p| y.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / x.len() as f64
        };
        side(a, b) + side(b, a)
    }

    fn cloud(rng: &mut impl Rng, n: usize) -> Vec<Point> {
        (0..n)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect()
    }

    #[test]
    fn kd_chamfer_matches_brute_force() {
        let mut rng = sample_rng(9, 0);
        for n in [1, 2, 3, 17, 100] {
            let a = cloud(&mut rng, n);
            let b = cloud(&mut rng, n + 5);
            assert!((chamfer(&a, &b) - brute_chamfer(&a, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn chamfer_of_shifted_point() {
        let a = [[0.0, 0.0, 0.0]];
        let b = [[3.0, 4.0, 0.0]];
        assert_eq!(chamfer(&a, &b), 50.0);
        assert_eq!(chamfer(&a, &a), 0.0);
    }

    #[test]
    fn two_voxel_jsd() {
        // P all in one voxel; Q split evenly over two.
        let p = [1.0, 0.0];
        let q = [1.0, 1.0];
        assert!((jsd_histograms(&p, &q) - 0.311_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(jsd_histograms(&p, &p), 0.0);
        assert!((jsd_histograms(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn set_metrics_on_identical_sets() {
        let mut rng = sample_rng(2, 0);
        let set: Vec<Vec<Point>> = (0..6).map(|_| cloud(&mut rng, 40)).collect();
        let d = chamfer_matrix(&set, &set);
        assert_eq!(cov(&d), 100.0);
        assert_eq!(mmd(&d), 0.0);
        assert_eq!(jsd(&set, &set, 28), 0.0);
        // Every cloud's nearest other cloud is its twin in the other set.
        assert_eq!(one_nna(&d, &d, &d), 0.0);
    }

    #[test]
    fn one_nna_separates_far_apart_sets() {
        let mut rng = sample_rng(4, 0);
        let near: Vec<Vec<Point>> = (0..5).map(|_| cloud(&mut rng, 30)).collect();
        let far: Vec<Vec<Point>> = near
            .iter()
            .map(|c| c.iter().map(|p| p.map(|x| x + 10.0)).collect())
            .collect();
        let (d_gg, d_rr) = (chamfer_matrix(&near, &near), chamfer_matrix(&far, &far));
        let d_gr = chamfer_matrix(&near, &far);
        assert_eq!(one_nna(&d_gg, &d_rr, &d_gr), 100.0);
    }

    #[test]
    fn cov_counts_distinct_matches() {
        // Three generated clouds all nearest to reference 0.
        let d = DistanceMatrix::from_fn(3, 2, |_, j| if j == 0 { 1.0 } else { 2.0 });
        assert_eq!(cov(&d), 50.0);
        assert_eq!(mmd(&d), 1.5);
    }

    #[test]
    fn samples_lie_on_the_surface() {
        let raw = shapes::icosphere(2);
        let pts = sample_points(&raw, 500, &mut sample_rng(1, 0));
        assert_eq!(pts.len(), 500);
        for p in pts {
            let r = libm::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            assert!(r <= 1.0 + 1e-12 && r > 0.95, "radius {r}");
        }
        assert!(sample_points(&RawMesh::default(), 10, &mut sample_rng(1, 0)).is_empty());
    }

    #[test]
    fn area_weighting() {
        // Two triangles, the second three times the area of the first.
        let raw = RawMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 5.0],
                [3.0, 0.0, 5.0],
                [0.0, 1.0, 5.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        );
        let pts = sample_points(&raw, 20_000, &mut sample_rng(4, 0));
        let upper = pts.iter().filter(|p| p[2] > 2.5).count() as f64 / pts.len() as f64;
        assert!((upper - 0.75).abs() < 0.02, "{upper}");
    }
}
