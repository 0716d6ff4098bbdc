//! Pointwise algebra behind the structural claims: mixed determinants of
//! Hermitian matrices, the n = 2 and n = 3 reduction identities, and the
//! concavity/ellipticity forms of the transformed operator.
//!
//! The transform is `F(x) = int_36^x exp(-t^2/2) dt`. For `x >= 36` the factor
//! `exp(-x^2/2)` underflows, so every form here is returned with that positive
//! factor divided out; signs are unaffected.
//!
//! Mixed determinants are normalized by `M(A, ..., A) = det A`; wedge-product
//! constants (factorials, volume forms) are absorbed into that convention.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::smallmat::jacobi_eigenvalues;

type CMat = [[Complex64; 3]; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Hermitian matrix of order 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    a: CMat,
}

impl HermitianMatrix {
    /// Validates order, finiteness and `M = M*` to `1e-14` (relative to the
    /// largest entry). Entries outside the leading `n x n` block are ignored.
    pub fn new(n: usize, entries: CMat) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::Config(format!("Hermitian matrix order must be 2 or 3, got {n}")));
        }
        let mut a = [[ZERO; 3]; 3];
        let mut big: f64 = 1.0;
        for i in 0..n {
            for j in 0..n {
                let z = entries[i][j];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::Domain(format!("non-finite entry at ({i}, {j})")));
                }
                a[i][j] = z;
                big = big.max(z.norm());
            }
        }
        for i in 0..n {
            for j in 0..n {
                if (a[i][j] - a[j][i].conj()).norm() > 1e-14 * big {
                    return Err(Error::Domain(format!("matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(HermitianMatrix { n, a })
    }

    /// Exactly Hermitian part `(M + M*)/2` of an arbitrary complex matrix.
    fn hermitian_part(n: usize, m: &CMat) -> Self {
        let mut a = [[ZERO; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = 0.5 * (m[i][j] + m[j][i].conj());
            }
        }
        HermitianMatrix { n, a }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { n, a: [[ZERO; 3]; 3] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self::diagonal(&vec![s; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.a[i][i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.a[i][j]
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for row in m.a.iter_mut() {
            for z in row.iter_mut() {
                *z *= s;
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i].re).sum()
    }

    pub fn det(&self) -> f64 {
        cdet(self.n, &self.a).re
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues in ascending order, from the real symmetric embedding
    /// `[[Re, -Im], [Im, Re]]` (each eigenvalue appears twice there).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let mut emb = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = self.a[i][j];
                emb[i * m + j] = z.re;
                emb[i * m + n + j] = -z.im;
                emb[(n + i) * m + j] = z.im;
                emb[(n + i) * m + n + j] = z.re;
            }
        }
        let mut e = jacobi_eigenvalues(m, &emb);
        e.sort_by(f64::total_cmp);
        e.into_iter().step_by(2).collect()
    }

    /// Spectral norm.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Inverse, refused when the Frobenius condition estimate exceeds `1e12`.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let d = cdet(n, &self.a);
        let adj = cadjugate(n, &self.a);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return Err(Error::Domain("matrix is singular".into()));
        }
        let mut inv = [[ZERO; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                inv[i][j] = adj[i][j] / d;
            }
        }
        let inv = Self::hermitian_part(n, &inv);
        let cond = self.norm() * inv.norm();
        if !(cond <= 1e12) {
            return Err(Error::Domain(format!("matrix is numerically singular (condition estimate {cond:e})")));
        }
        Ok(inv)
    }

    fn mat(&self) -> &CMat {
        &self.a
    }
}

fn cdet(n: usize, a: &CMat) -> Complex64 {
    match n {
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }
}

fn cadjugate(n: usize, a: &CMat) -> CMat {
    let mut c = [[ZERO; 3]; 3];
    match n {
        2 => {
            c[0][0] = a[1][1];
            c[1][1] = a[0][0];
            c[0][1] = -a[0][1];
            c[1][0] = -a[1][0];
        }
        _ => {
            c[0][0] = a[1][1] * a[2][2] - a[1][2] * a[2][1];
            c[0][1] = a[0][2] * a[2][1] - a[0][1] * a[2][2];
            c[0][2] = a[0][1] * a[1][2] - a[0][2] * a[1][1];
            c[1][0] = a[1][2] * a[2][0] - a[1][0] * a[2][2];
            c[1][1] = a[0][0] * a[2][2] - a[0][2] * a[2][0];
            c[1][2] = a[0][2] * a[1][0] - a[0][0] * a[1][2];
            c[2][0] = a[1][0] * a[2][1] - a[1][1] * a[2][0];
            c[2][1] = a[0][1] * a[2][0] - a[0][0] * a[2][1];
            c[2][2] = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        }
    }
    c
}

fn cmul(n: usize, x: &CMat, y: &CMat) -> CMat {
    let mut m = [[ZERO; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                m[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    m
}

fn ctrace(n: usize, m: &CMat) -> f64 {
    (0..n).map(|i| m[i][i].re).sum()
}

/// Mixed determinant by inclusion-exclusion over subsets:
/// `M(A_1..A_n) = (1/n!) sum_S (-1)^(n-|S|) det(sum_{i in S} A_i)`.
pub fn mixed_det(matrices: &[HermitianMatrix]) -> Result<f64> {
    let n = matrices.first().map(|m| m.n).unwrap_or(0);
    if !(2..=3).contains(&n) || matrices.len() != n || matrices.iter().any(|m| m.n != n) {
        return Err(Error::Config(format!(
            "mixed determinant needs n matrices of order n, got {} of orders {:?}",
            matrices.len(),
            matrices.iter().map(|m| m.n).collect::<Vec<_>>()
        )));
    }
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut s = HermitianMatrix::zeros(n);
        for (i, m) in matrices.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s = s.add(m);
            }
        }
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * s.det();
    }
    let fact = (1..=n).product::<usize>() as f64;
    Ok(total / fact)
}

fn md2(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    mixed_det(&[*a, *b]).expect("order checked by caller")
}

fn md3(a: &HermitianMatrix, b: &HermitianMatrix, c: &HermitianMatrix) -> f64 {
    mixed_det(&[*a, *b, *c]).expect("order checked by caller")
}

fn require_order(n: usize, ms: &[&HermitianMatrix]) -> Result<()> {
    if ms.iter().any(|m| m.n != n) {
        return Err(Error::Config(format!("all matrices must have order {n}")));
    }
    Ok(())
}

/// Both sides of an identity plus the magnitude of its largest term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityEvaluation {
    pub lhs: f64,
    pub rhs: f64,
    pub largest_term: f64,
}

impl IdentityEvaluation {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn relative_residual(&self) -> f64 {
        if self.largest_term == 0.0 {
            self.residual().abs()
        } else {
            self.residual().abs() / self.largest_term
        }
    }
}

/// Completing the square for `n = 2`. With `E = omega + ddc_phi` and
/// `eta = M(E,E) + M(alpha1,E) + alpha2`, compares `det(E + alpha1/2)` with
/// `eta - alpha2 + M(alpha1,alpha1)/4`.
pub fn evaluate_n2_identity(
    omega: &HermitianMatrix,
    alpha1: &HermitianMatrix,
    alpha2: f64,
    ddc_phi: &HermitianMatrix,
) -> Result<IdentityEvaluation> {
    require_order(2, &[omega, alpha1, ddc_phi])?;
    let e = omega.add(ddc_phi);
    let ee = md2(&e, &e);
    let ae = md2(alpha1, &e);
    let aa = md2(alpha1, alpha1);
    let eta = ee + ae + alpha2;
    let lhs = e.add(&alpha1.scale(0.5)).det();
    let rhs = eta - alpha2 + 0.25 * aa;
    let largest_term = [lhs, ee, ae, alpha2, 0.25 * aa].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(IdentityEvaluation { lhs, rhs, largest_term })
}

/// Residual of [`evaluate_n2_identity`].
pub fn check_n2_identity(
    omega: &HermitianMatrix,
    alpha1: &HermitianMatrix,
    alpha2: f64,
    ddc_phi: &HermitianMatrix,
) -> Result<f64> {
    Ok(evaluate_n2_identity(omega, alpha1, alpha2, ddc_phi)?.residual())
}

/// The `n = 3` reduction. The (2,2)-form `alpha2` acts on (1,1)-forms as
/// `X -> tr(alpha2 X)`, so with `E = omega + ddc_phi` and `G = E + alpha1/3`:
///
/// `eta = M(E,E,E) + M(alpha1,E,E) + tr(alpha2 E)`,
/// lhs `= det G + tr(alpha2 G) - M(alpha1,alpha1,G)/3`,
/// rhs `= eta - 2 det(alpha1)/27 + tr(alpha2 alpha1)/3`.
pub fn evaluate_n3_reduction(
    omega: &HermitianMatrix,
    alpha1: &HermitianMatrix,
    alpha2: &HermitianMatrix,
    ddc_phi: &HermitianMatrix,
) -> Result<IdentityEvaluation> {
    require_order(3, &[omega, alpha1, alpha2, ddc_phi])?;
    let e = omega.add(ddc_phi);
    let g = e.add(&alpha1.scale(1.0 / 3.0));
    let tr_s = |x: &HermitianMatrix| ctrace(3, &cmul(3, alpha2.mat(), x.mat()));
    let eee = md3(&e, &e, &e);
    let aee = md3(alpha1, &e, &e);
    let se = tr_s(&e);
    let eta = eee + aee + se;
    let det_g = g.det();
    let sg = tr_s(&g);
    let aag = md3(alpha1, alpha1, &g) / 3.0;
    let det_a = 2.0 * alpha1.det() / 27.0;
    let sa = tr_s(alpha1) / 3.0;
    let lhs = det_g + sg - aag;
    let rhs = eta - det_a + sa;
    let largest_term = [det_g, sg, aag, eee, aee, se, det_a, sa].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(IdentityEvaluation { lhs, rhs, largest_term })
}

/// Residual of [`evaluate_n3_reduction`].
pub fn check_n3_reduction(
    omega: &HermitianMatrix,
    alpha1: &HermitianMatrix,
    alpha2: &HermitianMatrix,
    ddc_phi: &HermitianMatrix,
) -> Result<f64> {
    Ok(evaluate_n3_reduction(omega, alpha1, alpha2, ddc_phi)?.residual())
}

/// A concavity form with the factor `exp(-x^2/2)` divided out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledHessForm {
    pub value: f64,
    pub x: f64,
}

/// `s_i = 1 + l1 l2 l3 / l_i`, computed without dividing.
fn pair_products(l: &[f64; 3]) -> [f64; 3] {
    [1.0 + l[1] * l[2], 1.0 + l[0] * l[2], 1.0 + l[0] * l[1]]
}

/// Negated Hessian of `g(l) = F(sum l + prod l)` along `v`, scaled:
/// `x (sum v_i s_i)^2 - 2 (v1 v2 l3 + v2 v3 l1 + v3 v1 l2)`.
/// Nonnegative values certify concavity of `g` at `l` in direction `v`.
pub fn concavity_form_real(lambda: [f64; 3], v: [f64; 3]) -> ScaledHessForm {
    let l = lambda;
    let x = l[0] + l[1] + l[2] + l[0] * l[1] * l[2];
    let s = pair_products(&l);
    let inner = v[0] * s[0] + v[1] * s[1] + v[2] * s[2];
    let cross = v[0] * v[1] * l[2] + v[1] * v[2] * l[0] + v[2] * v[0] * l[1];
    ScaledHessForm { value: x * inner * inner - 2.0 * cross, x }
}

/// Magnitude against which roundoff in [`concavity_form_real`] is judged.
pub fn concavity_scale_real(lambda: [f64; 3], v: [f64; 3]) -> f64 {
    let l = lambda;
    let x = l[0] + l[1] + l[2] + l[0] * l[1] * l[2];
    let s = pair_products(&l);
    let inner: f64 = (0..3).map(|i| v[i].abs() * s[i]).sum();
    x * inner * inner
        + 2.0 * (v[0] * v[1] * l[2]).abs()
        + 2.0 * (v[1] * v[2] * l[0]).abs()
        + 2.0 * (v[2] * v[0] * l[1]).abs()
}

/// Second derivative of `g(A) = F(det A + tr(B^-1 A))` along `V`, scaled:
/// `-x (det A tr(A^-1 V) + tr(B^-1 V))^2 + det A ((tr A^-1 V)^2 - tr((A^-1 V)^2))`.
/// Nonpositive values certify concavity.
pub fn concavity_form_complex(a: &HermitianMatrix, b: &HermitianMatrix, v: &HermitianMatrix) -> Result<ScaledHessForm> {
    require_order(3, &[a, b, v])?;
    let a_inv = a.inverse()?;
    let b_inv = b.inverse()?;
    let det_a = a.det();
    let x = det_a + ctrace(3, &cmul(3, b_inv.mat(), a.mat()));
    let av = cmul(3, a_inv.mat(), v.mat());
    let t = ctrace(3, &av);
    let t2 = ctrace(3, &cmul(3, &av, &av));
    let first = det_a * t + ctrace(3, &cmul(3, b_inv.mat(), v.mat()));
    Ok(ScaledHessForm { value: -x * first * first + det_a * (t * t - t2), x })
}

/// `x (det A ||A^-1|| ||V|| + ||B^-1|| ||V||)^2` in spectral norms.
pub fn concavity_scale_complex(a: &HermitianMatrix, b: &HermitianMatrix, v: &HermitianMatrix) -> Result<f64> {
    let a_inv = a.inverse()?;
    let b_inv = b.inverse()?;
    let x = a.det() + ctrace(3, &cmul(3, b_inv.mat(), a.mat()));
    let nv = v.spectral_norm();
    let inner = a.det() * a_inv.spectral_norm() * nv + b_inv.spectral_norm() * nv;
    Ok(x * inner * inner)
}

/// Gradient bounds of `g(l) = F(sum l + prod l)` in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityBounds {
    pub min_s: f64,
    pub max_s: f64,
    pub x: f64,
    /// `log s_i - x^2/2 > -x^2/2`, i.e. every `s_i > 1`.
    pub lower_holds: bool,
    /// `log s_i - x^2/2 < log(1 + 3x)` for every `i`.
    pub upper_holds: bool,
}

pub fn ellipticity_bounds_real(lambda: [f64; 3]) -> EllipticityBounds {
    let s = pair_products(&lambda);
    let x = lambda.iter().sum::<f64>() + lambda[0] * lambda[1] * lambda[2];
    let min_s = s.iter().copied().fold(f64::INFINITY, f64::min);
    let max_s = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EllipticityBounds {
        min_s,
        max_s,
        x,
        lower_holds: min_s.ln() > 0.0,
        upper_holds: max_s.ln() - 0.5 * x * x < (1.0 + 3.0 * x).ln(),
    }
}

/// `F(x) = int_36^x exp(-t^2/2) dt`, so `F(36) = 0` and `F' = exp(-x^2/2)`.
/// Documented transform only; solver data never passes through it.
pub fn transform_f(x: f64) -> f64 {
    use statrs::function::erf::erfc;
    let c = (std::f64::consts::PI / 2.0).sqrt();
    c * (erfc(36.0 / std::f64::consts::SQRT_2) - erfc(x / std::f64::consts::SQRT_2))
}

/// `int_a^b exp(-t^2/2) dt` by 5-point Gauss-Legendre; accurate for the short
/// intervals used in finite-difference oracles and free of cancellation.
fn gauss_integral(a: f64, b: f64) -> f64 {
    const NODES: [f64; 5] =
        [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * NODES.iter().zip(WEIGHTS).map(|(t, w)| w * (-(m + r * t).powi(2) / 2.0).exp()).sum::<f64>()
}

/// Second derivative at `s = 0` of `s -> F(arg(s))` from central differences
/// at steps `h` and `2h`, Richardson-combined to fourth order. Differences of
/// `F` are integrated directly, so nothing cancels before the final combine.
fn fd_second_derivative(arg: impl Fn(f64) -> f64, h: f64) -> f64 {
    let x0 = arg(0.0);
    let central = |k: f64| (gauss_integral(x0, arg(k * h)) - gauss_integral(arg(-k * h), x0)) / (k * h * k * h);
    (4.0 * central(1.0) - central(2.0)) / 3.0
}

/// Finite-difference oracle for `-v^T D^2 g(l) v` with `g = F(sum l + prod l)`.
pub fn concavity_real_fd(lambda: [f64; 3], v: [f64; 3], step: f64) -> f64 {
    let arg = |t: f64| {
        let l: Vec<f64> = (0..3).map(|i| lambda[i] + t * v[i]).collect();
        l.iter().sum::<f64>() + l[0] * l[1] * l[2]
    };
    -fd_second_derivative(arg, step)
}

/// Finite-difference oracle for `d^2/ds^2 g(A + sV)` with
/// `g(A) = F(det A + tr(B^-1 A))`.
pub fn concavity_complex_fd(a: &HermitianMatrix, b: &HermitianMatrix, v: &HermitianMatrix, step: f64) -> Result<f64> {
    let b_inv = b.inverse()?;
    let arg = |t: f64| {
        let m = a.add(&v.scale(t));
        m.det() + ctrace(3, &cmul(3, b_inv.mat(), m.mat()))
    };
    Ok(fd_second_derivative(arg, step))
}

/// Runs `f(i)` for `i in 0..samples` on all cores; results in index order.
fn par_map<T: Send>(samples: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(samples.max(1));
    let chunk = samples.div_ceil(workers.max(1)).max(1);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..samples)
            .step_by(chunk)
            .map(|start| scope.spawn(move || (start..(start + chunk).min(samples)).map(f).collect::<Vec<T>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sampler worker panicked")).collect()
    })
}

/// Independent stream per sample, so results do not depend on scheduling.
fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, amplitude: f64) -> HermitianMatrix {
    let mut m = HermitianMatrix::zeros(n);
    for i in 0..n {
        m.a[i][i] = Complex64::new(amplitude * rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..n {
            let z = amplitude * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m.a[i][j] = z;
            m.a[j][i] = z.conj();
        }
    }
    m
}

/// `G G* + shift I` with `G` having uniform entries in the unit square.
pub fn random_positive(rng: &mut impl Rng, n: usize, shift: f64) -> HermitianMatrix {
    let mut g = [[ZERO; 3]; 3];
    for row in g.iter_mut().take(n) {
        for z in row.iter_mut().take(n) {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut m = [[ZERO; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                m[i][j] += g[i][k] * g[j][k].conj();
            }
        }
    }
    HermitianMatrix::hermitian_part(n, &m).add(&HermitianMatrix::scaled_identity(n, shift))
}

/// Random unitary matrix by Gram-Schmidt on random columns.
fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    loop {
        let mut q = [[ZERO; 3]; 3];
        let mut ok = true;
        for c in 0..n {
            let mut col: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            for p in 0..c {
                let dot: Complex64 = (0..n).map(|r| q[r][p].conj() * col[r]).sum();
                for (r, z) in col.iter_mut().enumerate() {
                    *z -= dot * q[r][p];
                }
            }
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                ok = false;
                break;
            }
            for r in 0..n {
                q[r][c] = col[r] / norm;
            }
        }
        if ok {
            return q;
        }
    }
}

/// Summary of a sampled certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub samples: usize,
    pub violations: usize,
    /// Worst normalized value `value / scale` in the direction the claim
    /// forbids (most negative for the real form, most positive for the
    /// complex form).
    pub worst_normalized: f64,
    /// Up to ten violating samples, formatted for reports.
    pub counterexamples: Vec<String>,
}

const MAX_COUNTEREXAMPLES: usize = 10;

fn collect_counterexamples(rows: impl Iterator<Item = Option<String>>) -> Vec<String> {
    rows.flatten().take(MAX_COUNTEREXAMPLES).collect()
}

/// Samples `l in (3, 50]^3`, `v in [-1, 1]^3` and checks
/// `concavity_form_real >= -1e-10 scale`.
pub fn sample_concavity_real(samples: usize, seed: u64) -> CertificateReport {
    let vals = par_map(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let l = [0; 3].map(|_| 50.0 - rng.gen_range(0.0..47.0));
        let v = [0; 3].map(|_| rng.gen_range(-1.0..=1.0));
        let form = concavity_form_real(l, v);
        let scale = concavity_scale_real(l, v);
        let r = if scale == 0.0 { 0.0 } else { form.value / scale };
        (r, (r < -1e-10).then(|| format!("sample {i}: lambda={l:?} v={v:?} value={}", form.value)))
    });
    CertificateReport {
        samples,
        violations: vals.iter().filter(|p| p.1.is_some()).count(),
        worst_normalized: vals.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        counterexamples: collect_counterexamples(vals.into_iter().map(|p| p.1)),
    }
}

/// A point where the real concavity form is negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealWitness {
    pub lambda: [f64; 3],
    pub v: [f64; 3],
    pub value: f64,
}

/// Looks for `concavity_form_real < 0` with `min l_i < 1`. Eigenvalues are
/// log-uniform in `[0.01, 1.5]`; half of the directions are projected
/// orthogonal to `s`, which removes the positive square term. Returns the
/// most negative normalized witness.
pub fn search_real_witness(samples: usize, seed: u64) -> Option<RealWitness> {
    let found = par_map(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let l = [0; 3].map(|_| (rng.gen_range(0.01f64.ln()..1.5f64.ln())).exp());
        let mut v = [0; 3].map(|_| rng.gen_range(-1.0..=1.0));
        if i % 2 == 1 {
            let s = pair_products(&l);
            let ss: f64 = s.iter().map(|x| x * x).sum();
            let vs: f64 = (0..3).map(|k| v[k] * s[k]).sum();
            for k in 0..3 {
                v[k] -= vs / ss * s[k];
            }
        }
        let form = concavity_form_real(l, v);
        let min_l = l.iter().copied().fold(f64::INFINITY, f64::min);
        (form.value < 0.0 && min_l < 1.0)
            .then(|| (form.value / concavity_scale_real(l, v), RealWitness { lambda: l, v, value: form.value }))
    });
    found.into_iter().flatten().min_by(|a, b| a.0.total_cmp(&b.0)).map(|(_, w)| w)
}

/// Draws `(A, B, V)` with `B = G G* + 0.1 I`, `A = P diag(a) P*` for a random
/// unitary `P`, `A >= margin lambda_max(B) I`, scaled up until
/// `det A > 3 tr(B^-1 A)`.
pub fn sample_complex_triple(
    rng: &mut impl Rng,
    margin: f64,
) -> Result<(HermitianMatrix, HermitianMatrix, HermitianMatrix)> {
    let b = random_positive(rng, 3, 0.1);
    let floor = margin * b.eigenvalues()[2];
    let p = random_unitary(rng, 3);
    let diag: Vec<f64> = (0..3).map(|_| floor * rng.gen_range(1.0..3.0)).collect();
    let mut m = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, d) in diag.iter().enumerate() {
                m[i][j] += p[i][k] * *d * p[j][k].conj();
            }
        }
    }
    let mut a = HermitianMatrix::hermitian_part(3, &m);
    let b_inv = b.inverse()?;
    let mut guard = 0;
    while a.det() <= 3.0 * ctrace(3, &cmul(3, b_inv.mat(), a.mat())) {
        a = a.scale(1.5);
        guard += 1;
        if guard > 200 {
            return Err(Error::Domain("could not reach det A > 3 tr(B^-1 A)".into()));
        }
    }
    let v = random_hermitian(rng, 3, 1.0);
    Ok((a, b, v))
}

/// Checks `concavity_form_complex <= 1e-10 scale` on sampled triples.
pub fn sample_concavity_complex(samples: usize, seed: u64, margin: f64) -> Result<CertificateReport> {
    let vals = par_map(samples, |i| -> Result<(f64, Option<String>)> {
        let mut rng = sample_rng(seed, i);
        let (a, b, v) = sample_complex_triple(&mut rng, margin)?;
        let form = concavity_form_complex(&a, &b, &v)?;
        let scale = concavity_scale_complex(&a, &b, &v)?;
        let r = if scale == 0.0 { 0.0 } else { form.value / scale };
        Ok((r, (r > 1e-10).then(|| format!("sample {i}: A={a:?} B={b:?} V={v:?} value={}", form.value))))
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CertificateReport {
        samples,
        violations: vals.iter().filter(|p| p.1.is_some()).count(),
        worst_normalized: vals.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        counterexamples: collect_counterexamples(vals.into_iter().map(|p| p.1)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    pub max_relative_residual: f64,
}

/// Random tuple: `omega` positive definite, the others arbitrary Hermitian.
fn random_tuple(rng: &mut impl Rng, n: usize) -> [HermitianMatrix; 4] {
    [
        random_positive(rng, n, 0.5),
        random_hermitian(rng, n, 2.0),
        random_hermitian(rng, n, 2.0),
        random_hermitian(rng, n, 2.0),
    ]
}

pub fn sample_n2_identity(samples: usize, seed: u64) -> IdentityReport {
    let rel = par_map(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let [omega, alpha1, ddc, _] = random_tuple(&mut rng, 2);
        let alpha2 = rng.gen_range(-4.0..4.0);
        evaluate_n2_identity(&omega, &alpha1, alpha2, &ddc).expect("order 2").relative_residual()
    });
    IdentityReport { samples, max_relative_residual: rel.into_iter().fold(0.0, f64::max) }
}

pub fn sample_n3_reduction(samples: usize, seed: u64) -> IdentityReport {
    let rel = par_map(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let [omega, alpha1, ddc, alpha2] = random_tuple(&mut rng, 3);
        evaluate_n3_reduction(&omega, &alpha1, &alpha2, &ddc).expect("order 3").relative_residual()
    });
    IdentityReport { samples, max_relative_residual: rel.into_iter().fold(0.0, f64::max) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn construction_checks() {
        let mut e = [[ZERO; 3]; 3];
        e[0][1] = c(1.0, 2.0);
        e[1][0] = c(1.0, -2.0);
        assert!(HermitianMatrix::new(2, e).is_ok());
        e[1][0] = c(1.0, 2.0);
        assert!(matches!(HermitianMatrix::new(2, e), Err(Error::Domain(_))));
        assert!(matches!(HermitianMatrix::new(4, e), Err(Error::Config(_))));
        e[1][0] = c(f64::NAN, 0.0);
        assert!(HermitianMatrix::new(2, e).is_err());
    }

    #[test]
    fn mixed_det_examples() {
        let i2 = HermitianMatrix::identity(2);
        assert_eq!(mixed_det(&[i2, i2]).unwrap(), 1.0);
        let a = HermitianMatrix::diagonal(&[2.0, 3.0]);
        let b = HermitianMatrix::diagonal(&[5.0, 7.0]);
        assert!((mixed_det(&[a, b]).unwrap() - 14.5).abs() < 1e-14);
        assert!(matches!(mixed_det(&[a]), Err(Error::Config(_))));
        assert!(matches!(mixed_det(&[]), Err(Error::Config(_))));
        assert!(mixed_det(&[a, HermitianMatrix::identity(3)]).is_err());
    }

    #[test]
    fn mixed_det_polarization_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_hermitian(&mut rng, 3, 2.0);
            let b = random_hermitian(&mut rng, 3, 2.0);
            let cc = random_hermitian(&mut rng, 3, 2.0);
            let d = random_hermitian(&mut rng, 3, 2.0);
            let scale = 8.0f64.max(a.det().abs());
            assert!((mixed_det(&[a, a, a]).unwrap() - a.det()).abs() < 1e-12 * scale);
            let m = mixed_det(&[a, b, cc]).unwrap();
            for perm in [[b, a, cc], [cc, b, a], [a, cc, b]] {
                assert!((mixed_det(&perm).unwrap() - m).abs() < 1e-12 * 64.0);
            }
            let s = 0.7;
            let lin = mixed_det(&[a.add(&d.scale(s)), b, cc]).unwrap();
            let want = m + s * mixed_det(&[d, b, cc]).unwrap();
            assert!((lin - want).abs() < 1e-12 * 64.0);
        }
    }

    #[test]
    fn mixed_det_positive_on_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3] {
            for _ in 0..300 {
                let ms: Vec<_> = (0..n).map(|_| random_positive(&mut rng, n, 0.01)).collect();
                assert!(mixed_det(&ms).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn n2_identity_examples() {
        let z = HermitianMatrix::zeros(2);
        assert_eq!(check_n2_identity(&z, &z, 0.0, &z).unwrap(), 0.0);
        let ev =
            evaluate_n2_identity(&HermitianMatrix::identity(2), &HermitianMatrix::scaled_identity(2, 2.0), 0.0, &z)
                .unwrap();
        assert_eq!(ev.lhs, 4.0);
        assert_eq!(ev.rhs, 4.0);
        assert!(check_n2_identity(&HermitianMatrix::identity(3), &z, 0.0, &z).is_err());
    }

    #[test]
    fn n3_reduction_examples() {
        let z = HermitianMatrix::zeros(3);
        assert_eq!(check_n3_reduction(&z, &z, &z, &z).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let [omega, _, ddc, alpha2] = random_tuple(&mut rng, 3);
            let ev = evaluate_n3_reduction(&omega, &z, &alpha2, &ddc).unwrap();
            assert!(ev.relative_residual() < 1e-13);
        }
    }

    #[test]
    fn identity_samplers() {
        assert!(sample_n2_identity(1000, 1).max_relative_residual < 1e-12);
        assert!(sample_n3_reduction(1000, 1).max_relative_residual < 1e-12);
    }

    #[test]
    fn real_form_examples() {
        assert_eq!(concavity_form_real([4.0, 4.0, 4.0], [0.0; 3]).value, 0.0);
        let f = concavity_form_real([4.0, 4.0, 4.0], [1.0, 1.0, 1.0]);
        assert_eq!((f.x, f.value), (76.0, 197652.0));
        assert_eq!(concavity_form_real([4.0, 4.0, 4.0], [1.0, -1.0, 0.0]).value, 8.0);
    }

    #[test]
    fn complex_form_examples() {
        let a = HermitianMatrix::scaled_identity(3, 5.0);
        let b = HermitianMatrix::identity(3);
        let f = concavity_form_complex(&a, &b, &a).unwrap();
        assert_eq!(f.x, 140.0);
        assert!((f.value + 21_293_250.0).abs() < 1e-6);
        assert_eq!(concavity_form_complex(&a, &b, &HermitianMatrix::zeros(3)).unwrap().value, 0.0);
        let singular = HermitianMatrix::diagonal(&[1.0, 1.0, 1e-14]);
        assert!(matches!(concavity_form_complex(&singular, &b, &a), Err(Error::Domain(_))));
        assert!(matches!(concavity_form_complex(&a, &singular, &a), Err(Error::Domain(_))));
    }

    #[test]
    fn ellipticity_examples() {
        let e = ellipticity_bounds_real([3.0, 3.0, 3.0]);
        assert_eq!((e.min_s, e.max_s, e.x), (10.0, 10.0, 36.0));
        assert!(e.lower_holds && e.upper_holds);
        let e = ellipticity_bounds_real([1.0, 1.0, 1.0]);
        assert_eq!((e.min_s, e.x), (2.0, 4.0));
        let e = ellipticity_bounds_real([4.0, 5.0, 6.0]);
        assert_eq!((e.min_s, e.max_s, e.x), (21.0, 31.0, 135.0));
    }

    #[test]
    fn transform_anchor() {
        assert_eq!(transform_f(36.0), 0.0);
        assert!(transform_f(30.0) < 0.0);
        // F(0) = -int_0^36 exp(-t^2/2) dt = -sqrt(pi/2) to double precision
        assert!((transform_f(0.0) + (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-15);
        let x = 1.3;
        let d = (transform_f(x + 1e-5) - transform_f(x - 1e-5)) / 2e-5;
        assert!((d - (-x * x / 2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn real_form_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let l = [0; 3].map(|_| rng.gen_range(1.0..1.6));
            let v = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
            let f = concavity_form_real(l, v);
            assert!(f.x < 30.0);
            let scaled = f.value * (-f.x * f.x / 2.0).exp();
            let fd = concavity_real_fd(l, v, 1e-4);
            let tol = 1e-6 * concavity_scale_real(l, v) * (-f.x * f.x / 2.0).exp();
            assert!((scaled - fd).abs() <= tol, "{scaled} vs {fd}");
        }
    }

    #[test]
    fn complex_form_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let a = random_positive(&mut rng, 3, 0.3).scale(0.5);
            let b = random_positive(&mut rng, 3, 0.5);
            let v = random_hermitian(&mut rng, 3, 1.0);
            let f = concavity_form_complex(&a, &b, &v).unwrap();
            assert!(f.x < 30.0);
            let w = (-f.x * f.x / 2.0).exp();
            let fd = concavity_complex_fd(&a, &b, &v, 1e-4).unwrap();
            let tol = 1e-6 * concavity_scale_complex(&a, &b, &v).unwrap() * w;
            assert!((f.value * w - fd).abs() <= tol, "{} vs {fd}", f.value * w);
        }
    }

    #[test]
    fn real_certificate_and_witness() {
        let rep = sample_concavity_real(2000, 5);
        assert_eq!(rep.violations, 0, "{rep:?}");
        let w = search_real_witness(2000, 5).expect("witness");
        assert!(w.value < 0.0 && w.lambda.iter().any(|&l| l < 1.0));
        assert_eq!(concavity_form_real(w.lambda, w.v).value, w.value);
    }

    #[test]
    fn complex_certificate() {
        let rep = sample_concavity_complex(2000, 5, 3.01).unwrap();
        assert_eq!(rep.violations, 0, "{rep:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b, _) = sample_complex_triple(&mut rng, 3.01).unwrap();
        let floor = 3.01 * b.eigenvalues()[2];
        assert!(a.eigenvalues()[0] >= floor * (1.0 - 1e-12));
        let b_inv = b.inverse().unwrap();
        assert!(a.det() > 3.0 * ctrace(3, &cmul(3, b_inv.mat(), a.mat())));
    }

    #[test]
    fn samplers_are_reproducible() {
        assert_eq!(sample_concavity_real(300, 9), sample_concavity_real(300, 9));
        assert_eq!(search_real_witness(300, 9), search_real_witness(300, 9));
        assert_eq!(sample_n3_reduction(100, 2), sample_n3_reduction(100, 2));
    }

    #[test]
    fn hermitian_eigenvalues_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let a = random_positive(&mut rng, 3, 0.2);
            let e = a.eigenvalues();
            assert!((e.iter().sum::<f64>() - a.trace()).abs() < 1e-12 * a.norm());
            assert!((e.iter().product::<f64>() - a.det()).abs() < 1e-10 * a.det().abs().max(1.0));
            let inv = a.inverse().unwrap();
            let p = cmul(3, a.mat(), inv.mat());
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p[i][j] - c(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}
