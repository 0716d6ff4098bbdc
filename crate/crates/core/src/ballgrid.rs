//! Uniform Cartesian grids restricted to the open unit ball.
//!
//! Nodes are the lattice points `k * h` with `|k * h| < 1`. For every node and
//! every stencil direction the grid records either the neighboring node one
//! step away or, when that neighbor falls outside the open ball, the exact
//! fractional distance `theta` to the sphere along that direction
//! (Shortley-Weller data). Directions cover the coordinate axes and the
//! face diagonals `e_i +- e_j`; the latter carry the mixed second derivatives.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A lattice offset. Components beyond `dim` are zero.
pub type Offset = [i64; 3];

/// Where a single step from a node along a direction lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reach {
    /// The full-step neighbor is an interior node.
    Node(usize),
    /// The step leaves the open ball; the sphere is hit at `theta * step`.
    Boundary { theta: f64, point: usize },
}

impl Reach {
    /// Fraction of the full step travelled before reaching data.
    pub fn theta(&self) -> f64 {
        match *self {
            Reach::Node(_) => 1.0,
            Reach::Boundary { theta, .. } => theta,
        }
    }
}

/// Point on the sphere where a stencil arm terminates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub coords: [f64; 3],
    /// Interior node the arm starts from.
    pub node: usize,
    /// Index of the arm direction in [`Grid::directions`].
    pub direction: usize,
}

/// The discretized unit ball. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    spacing: f64,
    lattice: Vec<Offset>,
    coords: Vec<[f64; 3]>,
    directions: Vec<Offset>,
    reach: Vec<Reach>,
    boundary: Vec<BoundaryPoint>,
    lookup: HashMap<Offset, usize>,
}

/// Weights of a second-derivative stencil at one node.
///
/// The weighted sum of interior node values plus boundary values approximates
/// the requested second derivative. Boundary weights are reported even though
/// homogeneous Dirichlet data makes their contribution vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilWeights {
    pub interior: Vec<(usize, f64)>,
    pub boundary: Vec<(usize, f64)>,
}

impl StencilWeights {
    /// Applies the stencil to interior values and boundary values.
    pub fn apply(&self, interior: &[f64], boundary: &[f64]) -> f64 {
        let a: f64 = self.interior.iter().map(|&(i, w)| w * interior[i]).sum();
        let b: f64 = self.boundary.iter().map(|&(i, w)| w * boundary[i]).sum();
        a + b
    }

    fn push_interior(&mut self, node: usize, w: f64) {
        match self.interior.iter_mut().find(|(i, _)| *i == node) {
            Some(entry) => entry.1 += w,
            None => self.interior.push((node, w)),
        }
    }
}

fn norm_sq(x: &[f64; 3]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
}

fn lattice_point(k: &Offset, h: f64) -> [f64; 3] {
    [k[0] as f64 * h, k[1] as f64 * h, k[2] as f64 * h]
}

/// Positive root of `|x + theta * step|^2 = 1` for `|x| < 1`.
pub fn sphere_hit(x: &[f64; 3], step: &[f64; 3]) -> f64 {
    let a = norm_sq(step);
    let b = x[0] * step[0] + x[1] * step[1] + x[2] * step[2];
    let c = norm_sq(x) - 1.0;
    let disc = (b * b - a * c).sqrt();
    // c < 0, so the two forms agree; pick the one without cancellation.
    if b > 0.0 {
        -c / (b + disc)
    } else {
        (disc - b) / a
    }
}

/// Axis directions first (`+e_0, -e_0, +e_1, ...`), then for each pair `i < j`
/// the diagonals `+(e_i+e_j), -(e_i+e_j), +(e_i-e_j), -(e_i-e_j)`.
fn direction_table(dim: usize) -> Vec<Offset> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        let mut e = [0; 3];
        e[i] = 1;
        dirs.push(e);
        e[i] = -1;
        dirs.push(e);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut plus = [0; 3];
            plus[i] = 1;
            plus[j] = 1;
            let mut minus = [0; 3];
            minus[i] = 1;
            minus[j] = -1;
            dirs.push(plus);
            dirs.push(plus.map(|c| -c));
            dirs.push(minus);
            dirs.push(minus.map(|c| -c));
        }
    }
    dirs
}

/// Builds the grid `{ k h : k in Z^dim, |k h| < 1 }` with boundary data.
pub fn build_ball_grid(dim: usize, h: f64) -> Result<Grid> {
    if dim != 2 && dim != 3 {
        return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
    }
    if !(h.is_finite() && h > 0.0 && h <= 0.5) {
        return Err(Error::Config(format!("grid spacing must lie in (0, 1/2], got {h}")));
    }
    let kmax = (1.0 / h).ceil() as i64 + 1;
    let inside = |k: &Offset| norm_sq(&lattice_point(k, h)) < 1.0;

    let mut lattice = Vec::new();
    let range = -kmax..=kmax;
    let third: Vec<i64> = if dim == 3 { range.clone().collect() } else { vec![0] };
    for k0 in range.clone() {
        for k1 in range.clone() {
            for &k2 in &third {
                let k = [k0, k1, k2];
                if inside(&k) {
                    lattice.push(k);
                }
            }
        }
    }
    let lookup: HashMap<Offset, usize> = lattice.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let coords: Vec<[f64; 3]> = lattice.iter().map(|k| lattice_point(k, h)).collect();
    let directions = direction_table(dim);

    let mut reach = Vec::with_capacity(lattice.len() * directions.len());
    let mut boundary = Vec::new();
    for (node, k) in lattice.iter().enumerate() {
        for (d, dir) in directions.iter().enumerate() {
            let nb = [k[0] + dir[0], k[1] + dir[1], k[2] + dir[2]];
            if let Some(&idx) = lookup.get(&nb) {
                reach.push(Reach::Node(idx));
                continue;
            }
            let x = coords[node];
            let step = lattice_point(dir, h);
            let theta = sphere_hit(&x, &step).min(1.0);
            let p = [x[0] + theta * step[0], x[1] + theta * step[1], x[2] + theta * step[2]];
            reach.push(Reach::Boundary { theta, point: boundary.len() });
            boundary.push(BoundaryPoint { coords: p, node, direction: d });
        }
    }

    Ok(Grid { dim, spacing: h, lattice, coords, directions, reach, boundary, lookup })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinates of node `i`; unused trailing components are zero.
    pub fn coords(&self, i: usize) -> [f64; 3] {
        self.coords[i]
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn lattice_index(&self, i: usize) -> Offset {
        self.lattice[i]
    }

    /// Node at lattice position `k`, if interior.
    pub fn find(&self, k: Offset) -> Option<usize> {
        self.lookup.get(&k).copied()
    }

    pub fn directions(&self) -> &[Offset] {
        &self.directions
    }

    /// Index of `dir` in the direction table.
    pub fn direction_index(&self, dir: Offset) -> Option<usize> {
        self.directions.iter().position(|d| *d == dir)
    }

    pub fn reach(&self, node: usize, direction: usize) -> Reach {
        self.reach[node * self.directions.len() + direction]
    }

    pub fn boundary_points(&self) -> &[BoundaryPoint] {
        &self.boundary
    }

    /// Samples `f` at every interior node.
    pub fn sample(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.coords.iter().map(f).collect()
    }

    /// Samples `f` at every boundary point.
    pub fn sample_boundary(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.boundary.iter().map(|b| f(&b.coords)).collect()
    }

    /// Three-point Shortley-Weller approximation of `d^T D^2u d` along the
    /// lattice direction `d = directions[dir]`, accumulated into `out` with
    /// multiplier `scale`.
    fn directional_second(&self, node: usize, dir: usize, scale: f64, out: &mut StencilWeights) {
        // Directions come in (+d, -d) pairs at even/odd positions.
        let (fwd, bwd) = if dir.is_multiple_of(2) { (dir, dir + 1) } else { (dir, dir - 1) };
        let h2 = self.spacing * self.spacing;
        let rf = self.reach(node, fwd);
        let rb = self.reach(node, bwd);
        let (tf, tb) = (rf.theta(), rb.theta());
        let wf = 2.0 / (h2 * tf * (tf + tb));
        let wb = 2.0 / (h2 * tb * (tf + tb));
        let wc = -2.0 / (h2 * tf * tb);
        out.push_interior(node, scale * wc);
        for (r, w) in [(rf, wf), (rb, wb)] {
            match r {
                Reach::Node(j) => out.push_interior(j, scale * w),
                Reach::Boundary { point, .. } => out.boundary.push((point, scale * w)),
            }
        }
    }

    /// Stencil approximating `d^2 u / dx_i dx_j` at `node`.
    ///
    /// Pure derivatives use the (Shortley-Weller corrected) three-point
    /// stencil. Mixed derivatives use `(D_{e_i+e_j} - D_{e_i-e_j}) / 4` with
    /// both diagonal second differences Shortley-Weller corrected; in the
    /// interior this is the standard four-point cross stencil.
    pub fn second_derivative_stencil(&self, node: usize, i: usize, j: usize) -> StencilWeights {
        assert!(i < self.dim && j < self.dim, "axis out of range");
        let mut out = StencilWeights { interior: Vec::new(), boundary: Vec::new() };
        if i == j {
            self.directional_second(node, 2 * i, 1.0, &mut out);
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            let base = self.diagonal_base(a, b);
            self.directional_second(node, base, 0.25, &mut out);
            self.directional_second(node, base + 2, -0.25, &mut out);
        }
        out
    }

    /// Position of `+(e_a+e_b)` in the direction table, `a < b`.
    pub(crate) fn diagonal_base(&self, a: usize, b: usize) -> usize {
        let mut pair = 0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (i, j) == (a, b) {
                    return 2 * self.dim + 4 * pair;
                }
                pair += 1;
            }
        }
        unreachable!("axis pair ({a}, {b}) not in table")
    }

    /// Raw directional second difference used by the operator kernels:
    /// returns `d^T D^2 u d` for direction index `dir` (even entries only).
    pub(crate) fn directional_value(&self, node: usize, dir: usize, u: &[f64], bc: &[f64]) -> f64 {
        let h2 = self.spacing * self.spacing;
        let rf = self.reach(node, dir);
        let rb = self.reach(node, dir + 1);
        let value = |r: Reach| match r {
            Reach::Node(j) => u[j],
            Reach::Boundary { point, .. } => bc[point],
        };
        let (tf, tb) = (rf.theta(), rb.theta());
        let uf = value(rf);
        let ub = value(rb);
        let uc = u[node];
        2.0 / (h2 * (tf + tb)) * ((uf - uc) / tf - (uc - ub) / tb)
    }

    /// Visits the interior-node weights of the directional second difference
    /// for direction `dir` (even entries only); boundary arms are skipped.
    pub(crate) fn directional_weights(&self, node: usize, dir: usize, mut visit: impl FnMut(usize, f64)) {
        let h2 = self.spacing * self.spacing;
        let rf = self.reach(node, dir);
        let rb = self.reach(node, dir + 1);
        let (tf, tb) = (rf.theta(), rb.theta());
        visit(node, -2.0 / (h2 * tf * tb));
        if let Reach::Node(j) = rf {
            visit(j, 2.0 / (h2 * tf * (tf + tb)));
        }
        if let Reach::Node(j) = rb {
            visit(j, 2.0 / (h2 * tb * (tf + tb)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find_node(grid: &Grid, x: [f64; 3]) -> usize {
        (0..grid.len())
            .find(|&i| {
                let c = grid.coords(i);
                (0..3).all(|k| (c[k] - x[k]).abs() < 1e-12)
            })
            .expect("node present")
    }

    #[test]
    fn coarse_disk_has_nine_nodes() {
        let g = build_ball_grid(2, 0.5).unwrap();
        assert_eq!(g.len(), 9);
        let mut brute = 0;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                let (x, y) = (a as f64 * 0.5, b as f64 * 0.5);
                if x * x + y * y < 1.0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(brute, 9);
        for x in [[0.0, 0.0], [0.5, 0.0], [-0.5, 0.5], [0.5, -0.5], [0.0, -0.5]] {
            find_node(&g, [x[0], x[1], 0.0]);
        }
    }

    #[test]
    fn axis_hit_on_sphere_is_full_step() {
        let g = build_ball_grid(2, 0.5).unwrap();
        let n = find_node(&g, [0.5, 0.0, 0.0]);
        let d = g.direction_index([1, 0, 0]).unwrap();
        match g.reach(n, d) {
            Reach::Boundary { theta, point } => {
                assert_eq!(theta, 1.0);
                assert_eq!(g.boundary_points()[point].coords, [1.0, 0.0, 0.0]);
            }
            r => panic!("expected boundary hit, got {r:?}"),
        }
    }

    #[test]
    fn corner_hit_in_three_dimensions() {
        let g = build_ball_grid(3, 0.5).unwrap();
        let n = find_node(&g, [0.5, 0.5, 0.5]);
        let d = g.direction_index([1, 0, 0]).unwrap();
        let theta = g.reach(n, d).theta();
        let expected = 2.0 * (0.5f64.sqrt() - 0.5);
        assert!((theta - expected).abs() < 1e-15, "{theta} vs {expected}");
        assert!((theta - 0.41421).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(build_ball_grid(4, 0.25).is_err());
        assert!(build_ball_grid(2, 0.0).is_err());
        assert!(build_ball_grid(3, -0.1).is_err());
        assert!(build_ball_grid(2, f64::NAN).is_err());
    }

    #[test]
    fn central_stencil_away_from_boundary() {
        let h = 0.125;
        let g = build_ball_grid(2, h).unwrap();
        let n = g.find([0, 0, 0]).unwrap();
        let s = g.second_derivative_stencil(n, 0, 0);
        assert!(s.boundary.is_empty());
        let mut w: Vec<f64> = s.interior.iter().map(|&(_, w)| w * h * h).collect();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(w, vec![-2.0, 1.0, 1.0]);
    }

    #[test]
    fn shortley_weller_with_unit_theta_is_central() {
        let h = 0.5;
        let g = build_ball_grid(2, h).unwrap();
        let n = find_node(&g, [0.5, 0.0, 0.0]);
        let s = g.second_derivative_stencil(n, 0, 0);
        assert_eq!(s.boundary.len(), 1);
        assert_eq!(s.boundary[0].1 * h * h, 1.0);
        let centre = s.interior.iter().find(|e| e.0 == n).unwrap().1;
        assert_eq!(centre * h * h, -2.0);
        assert_eq!(s.interior.len(), 2);
    }

    fn check_quadratic_exactness(dim: usize, h: f64) {
        let g = build_ball_grid(dim, h).unwrap();
        // q(x) = 1/2 x^T A x + b.x + c with a fixed non-diagonal A.
        let a = [[1.3, -0.7, 0.4], [-0.7, 2.1, 0.9], [0.4, 0.9, -1.6]];
        let b = [0.3, -1.1, 0.8];
        let q = |x: &[f64; 3]| {
            let mut s = 0.7;
            for i in 0..dim {
                s += b[i] * x[i];
                for j in 0..dim {
                    s += 0.5 * a[i][j] * x[i] * x[j];
                }
            }
            s
        };
        let u = g.sample(q);
        let bc = g.sample_boundary(q);
        for n in 0..g.len() {
            for i in 0..dim {
                for j in 0..dim {
                    let v = g.second_derivative_stencil(n, i, j).apply(&u, &bc);
                    assert!(
                        (v - a[i][j]).abs() <= 1e-12 * a[i][j].abs().max(1.0),
                        "node {n} ({i},{j}): {v} vs {}",
                        a[i][j]
                    );
                }
            }
        }
        // r^2 with homogeneous check: d^2/dx_i dx_j r^2 = 2 delta_ij
        let r2 = g.sample(norm_sq);
        let r2b = g.sample_boundary(norm_sq);
        for n in 0..g.len() {
            for i in 0..dim {
                for j in 0..dim {
                    let v = g.second_derivative_stencil(n, i, j).apply(&r2, &r2b);
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-11, "{v} vs {want}");
                }
            }
        }
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        check_quadratic_exactness(2, 0.5);
        check_quadratic_exactness(2, 0.1);
        check_quadratic_exactness(3, 0.5);
        check_quadratic_exactness(3, 0.125);
    }

    #[test]
    fn node_counts_grow_with_refinement() {
        for (dim, factor) in [(2, 3usize), (3, 5usize)] {
            let mut prev = build_ball_grid(dim, 0.5).unwrap().len();
            for h in [0.25, 0.125, 0.0625] {
                let n = build_ball_grid(dim, h).unwrap().len();
                assert!(n >= factor * prev, "dim {dim} h {h}: {n} < {factor} * {prev}");
                prev = n;
            }
        }
    }

    #[test]
    fn builds_are_deterministic_and_lexicographic() {
        let a = build_ball_grid(3, 0.2).unwrap();
        let b = build_ball_grid(3, 0.2).unwrap();
        assert_eq!(a.nodes().len(), b.nodes().len());
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert_eq!(x.map(f64::to_bits), y.map(f64::to_bits));
        }
        for w in a.nodes().windows(2) {
            assert!(w[0].partial_cmp(&w[1]) == Some(std::cmp::Ordering::Less));
        }
    }

    #[test]
    fn every_arm_lands_on_node_or_sphere() {
        let g = build_ball_grid(3, 0.25).unwrap();
        for n in 0..g.len() {
            assert!(norm_sq(&g.coords(n)) < 1.0);
            for (d, dir) in g.directions().iter().enumerate() {
                match g.reach(n, d) {
                    Reach::Node(j) => {
                        let k = g.lattice_index(n);
                        assert_eq!(g.lattice_index(j), [k[0] + dir[0], k[1] + dir[1], k[2] + dir[2]]);
                    }
                    Reach::Boundary { theta, point } => {
                        assert!(theta > 0.0 && theta <= 1.0);
                        let p = g.boundary_points()[point].coords;
                        assert!((norm_sq(&p) - 1.0).abs() < 1e-14);
                    }
                }
            }
        }
    }
}
