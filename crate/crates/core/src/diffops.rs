//! The operator `G[u] = det(D^2 u) + sigma * Laplace(u)` on a ball grid, its
//! exact linearization, and per-node monitors.
//!
//! The linearization is `w -> tr(cof(D^2 u) D^2 w) + sigma * Laplace(w)`,
//! assembled with the adjugate so that singular Hessians are handled.

use crate::ballgrid::Grid;
use crate::linsolve::SparseOperator;
use crate::smallmat::SymMat;

/// One value per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField { values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        ScalarField { values: grid.sample(f) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_i |self_i - other_i|`.
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A symmetric `d x d` matrix per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrixField {
    pub matrices: Vec<SymMat>,
}

/// Extremal per-node quantities over the interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorReport {
    /// `min_x lambda_min(D^2 u)`.
    pub min_hessian_eig: f64,
    pub max_hessian_eig: f64,
    /// `min_x min_{i<j} (lambda_i lambda_j - 1)`.
    pub min_pair_product: f64,
    /// `min_x (det(D^2 u) - Laplace(u))`.
    pub min_cone_gap: f64,
    /// `min_x lambda_min(cof(D^2 u) + sigma I)`.
    pub min_ellipticity: f64,
    /// `max_x |G[u] - rhs|`.
    pub residual_sup: f64,
}

/// Discrete operator for a fixed grid, sign `sigma` and Dirichlet data.
#[derive(Debug, Clone)]
pub struct Operator<'g> {
    grid: &'g Grid,
    sigma: f64,
    boundary: Vec<f64>,
}

impl<'g> Operator<'g> {
    /// Operator with homogeneous Dirichlet data.
    pub fn new(grid: &'g Grid, sigma: f64) -> Self {
        Operator { grid, sigma, boundary: vec![0.0; grid.boundary_points().len()] }
    }

    /// Operator with Dirichlet values given at every boundary point of the grid.
    pub fn with_boundary(grid: &'g Grid, sigma: f64, boundary: Vec<f64>) -> Self {
        assert_eq!(boundary.len(), grid.boundary_points().len());
        Operator { grid, sigma, boundary }
    }

    pub fn grid(&self) -> &'g Grid {
        self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    fn hessian_at(&self, node: usize, u: &[f64]) -> SymMat {
        let g = self.grid;
        let d = g.dim();
        let mut m = SymMat::zeros(d);
        for i in 0..d {
            m.a[i][i] = g.directional_value(node, 2 * i, u, &self.boundary);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let base = g.diagonal_base(i, j);
                let plus = g.directional_value(node, base, u, &self.boundary);
                let minus = g.directional_value(node, base + 2, u, &self.boundary);
                let v = 0.25 * (plus - minus);
                m.a[i][j] = v;
                m.a[j][i] = v;
            }
        }
        m
    }

    pub fn hessian(&self, u: &ScalarField) -> SymMatrixField {
        assert_eq!(u.len(), self.grid.len());
        SymMatrixField { matrices: (0..self.grid.len()).map(|n| self.hessian_at(n, &u.values)).collect() }
    }

    /// `det(H) + sigma * tr(H)` per node.
    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        assert_eq!(u.len(), self.grid.len());
        let values = (0..self.grid.len())
            .map(|n| {
                let h = self.hessian_at(n, &u.values);
                h.det() + self.sigma * h.trace()
            })
            .collect();
        ScalarField { values }
    }

    /// Sparse matrix of `w -> tr(cof(D^2 u) D^2 w) + sigma Laplace(w)` with
    /// `w = 0` on the boundary.
    pub fn linearization(&self, u: &ScalarField) -> SparseOperator {
        let g = self.grid;
        let d = g.dim();
        let rows = (0..g.len())
            .map(|n| {
                let h = self.hessian_at(n, &u.values);
                let coeff = h.cofactor().add(&SymMat::scaled_identity(d, self.sigma));
                let mut row = Vec::with_capacity(1 + 2 * d * d);
                for i in 0..d {
                    let c = coeff.a[i][i];
                    g.directional_weights(n, 2 * i, |j, w| row.push((j, c * w)));
                }
                for i in 0..d {
                    for j in (i + 1)..d {
                        // coefficient 2 M_ij on H_ij = (D_+ - D_-) / 4
                        let c = 0.5 * coeff.a[i][j];
                        if c == 0.0 {
                            continue;
                        }
                        let base = g.diagonal_base(i, j);
                        g.directional_weights(n, base, |k, w| row.push((k, c * w)));
                        g.directional_weights(n, base + 2, |k, w| row.push((k, -c * w)));
                    }
                }
                row
            })
            .collect();
        SparseOperator::from_rows(rows)
    }

    /// Minimum over nodes of `lambda_min(cof(D^2 u) + sigma I)`.
    pub fn min_ellipticity(&self, u: &ScalarField) -> f64 {
        let d = self.grid.dim();
        (0..self.grid.len())
            .map(|n| {
                let h = self.hessian_at(n, &u.values);
                h.cofactor().add(&SymMat::scaled_identity(d, self.sigma)).eigenvalues()[0]
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn monitors(&self, u: &ScalarField, rhs: &ScalarField) -> MonitorReport {
        let d = self.grid.dim();
        let mut r = MonitorReport {
            min_hessian_eig: f64::INFINITY,
            max_hessian_eig: f64::NEG_INFINITY,
            min_pair_product: f64::INFINITY,
            min_cone_gap: f64::INFINITY,
            min_ellipticity: f64::INFINITY,
            residual_sup: 0.0,
        };
        for n in 0..self.grid.len() {
            let h = self.hessian_at(n, &u.values);
            let eig = h.eigenvalues();
            r.min_hessian_eig = r.min_hessian_eig.min(eig[0]);
            r.max_hessian_eig = r.max_hessian_eig.max(eig[d - 1]);
            for i in 0..d {
                for j in (i + 1)..d {
                    r.min_pair_product = r.min_pair_product.min(eig[i] * eig[j] - 1.0);
                }
            }
            let det = h.det();
            let tr = h.trace();
            r.min_cone_gap = r.min_cone_gap.min(det - tr);
            let ell = h.cofactor().add(&SymMat::scaled_identity(d, self.sigma)).eigenvalues()[0];
            r.min_ellipticity = r.min_ellipticity.min(ell);
            r.residual_sup = r.residual_sup.max((det + self.sigma * tr - rhs.values[n]).abs());
        }
        r
    }
}

pub fn hessian(grid: &Grid, u: &ScalarField) -> SymMatrixField {
    Operator::new(grid, 0.0).hessian(u)
}

pub fn ma_operator(grid: &Grid, u: &ScalarField, sigma: f64) -> ScalarField {
    Operator::new(grid, sigma).apply(u)
}

pub fn assemble_linearization(grid: &Grid, u: &ScalarField, sigma: f64) -> SparseOperator {
    Operator::new(grid, sigma).linearization(u)
}

pub fn monitors(grid: &Grid, u: &ScalarField, sigma: f64, rhs: &ScalarField) -> MonitorReport {
    Operator::new(grid, sigma).monitors(u, rhs)
}
