//! Dense symmetric matrices of order 2 or 3 stored in a fixed 3x3 array.
//!
//! Eigenvalues use the closed form for order 2 and the trigonometric solution
//! of the characteristic cubic for order 3, switching to cyclic Jacobi
//! rotations when two roots nearly coincide.

pub type Mat3 = [[f64; 3]; 3];

/// Symmetric matrix of order `n` (2 or 3); entries outside `n x n` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    pub n: usize,
    pub a: Mat3,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat { n, a: [[0.0; 3]; 3] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::identity(n);
        for i in 0..n {
            m.a[i][i] = s;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.n {
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Adjugate (transposed cofactor matrix); `cof(A) A = det(A) I` for
    /// every `A`, singular or not.
    pub fn cofactor(&self) -> SymMat {
        let a = &self.a;
        let mut c = SymMat::zeros(self.n);
        match self.n {
            2 => {
                c.a[0][0] = a[1][1];
                c.a[1][1] = a[0][0];
                c.a[0][1] = -a[0][1];
                c.a[1][0] = -a[1][0];
            }
            _ => {
                c.a[0][0] = a[1][1] * a[2][2] - a[1][2] * a[2][1];
                c.a[0][1] = a[0][2] * a[2][1] - a[0][1] * a[2][2];
                c.a[0][2] = a[0][1] * a[1][2] - a[0][2] * a[1][1];
                c.a[1][0] = a[1][2] * a[2][0] - a[1][0] * a[2][2];
                c.a[1][1] = a[0][0] * a[2][2] - a[0][2] * a[2][0];
                c.a[1][2] = a[0][2] * a[1][0] - a[0][0] * a[1][2];
                c.a[2][0] = a[1][0] * a[2][1] - a[1][1] * a[2][0];
                c.a[2][1] = a[0][1] * a[2][0] - a[0][0] * a[2][1];
                c.a[2][2] = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            }
        }
        c
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    pub fn mul(&self, other: &SymMat) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.n {
            for j in 0..self.n {
                m[i][j] = (0..self.n).map(|k| self.a[i][k] * other.a[k][j]).sum();
            }
        }
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.n {
            2 => {
                let a = &self.a;
                let mean = 0.5 * (a[0][0] + a[1][1]);
                let half = 0.5 * (a[0][0] - a[1][1]);
                let r = half.hypot(a[0][1]);
                vec![mean - r, mean + r]
            }
            _ => eigen3(&self.a),
        }
    }
}

fn eigen3(a: &Mat3) -> Vec<f64> {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let scale = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| a[i][j].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return vec![0.0; 3];
    }
    if p1 <= (1e-300f64).max(scale * scale * 1e-32) {
        let mut d = vec![a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = *a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = SymMat { n: 3, a: b }.det() / 2.0;
    // acos is ill-conditioned near +-1, i.e. when two roots nearly coincide.
    if r.abs() > 1.0 - 1e-6 {
        let mut e = jacobi_eigenvalues(3, &a.iter().flatten().copied().collect::<Vec<_>>());
        e.sort_by(f64::total_cmp);
        return e;
    }
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    vec![lo, mid, hi]
}

/// Eigenvalues of a dense real symmetric `n x n` matrix (row-major) by cyclic
/// Jacobi rotations. Order is unspecified.
pub fn jacobi_eigenvalues(n: usize, m: &[f64]) -> Vec<f64> {
    assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-34 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMat {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-3.0..3.0);
                m.a[i][j] = v;
                m.a[j][i] = v;
            }
        }
        m
    }

    #[test]
    fn cofactor_identity_holds_even_when_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3] {
            for k in 0..200 {
                let mut m = random_sym(&mut rng, n);
                if k % 4 == 0 {
                    // rank-deficient: duplicate a row/column
                    for j in 0..n {
                        m.a[n - 1][j] = m.a[0][j];
                    }
                    for i in 0..n {
                        m.a[i][n - 1] = m.a[i][0];
                    }
                    m.a[n - 1][n - 1] = m.a[0][0];
                }
                let prod = m.cofactor().mul(&m);
                let d = m.det();
                let s = m.max_abs().powi(n as i32).max(1e-300);
                for i in 0..n {
                    for j in 0..n {
                        let want = if i == j { d } else { 0.0 };
                        assert!((prod[i][j] - want).abs() <= 1e-12 * s);
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalues_match_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3] {
            for _ in 0..500 {
                let m = random_sym(&mut rng, n);
                let flat: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m.a[i][j]).collect();
                let mut want = jacobi_eigenvalues(n, &flat);
                want.sort_by(f64::total_cmp);
                let got = m.eigenvalues();
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-10 * m.max_abs().max(1.0), "{got:?} vs {want:?}");
                }
                let s: f64 = got.iter().sum();
                assert!((s - m.trace()).abs() < 1e-10 * m.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn repeated_roots() {
        let m = SymMat::scaled_identity(3, 3.0);
        assert_eq!(m.eigenvalues(), vec![3.0, 3.0, 3.0]);
        // r^2 I + 2 x x^T at x = (0.3, 0.4, 0): eigenvalues r^2, r^2, 3 r^2
        let mut q = SymMat::scaled_identity(3, 0.25);
        let x = [0.3, 0.4, 0.0];
        for i in 0..3 {
            for j in 0..3 {
                q.a[i][j] += 2.0 * x[i] * x[j];
            }
        }
        let e = q.eigenvalues();
        for (g, w) in e.iter().zip([0.25, 0.25, 0.75]) {
            assert!((g - w).abs() < 1e-13, "{e:?}");
        }
    }
}
