//! Dense complex linear algebra: matrices, Hermitian eigendecomposition,
//! Cholesky solves and Gaussian sampling.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;

/// Column vector.
pub type CVector = Vec<C64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("Jacobi sweeps did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// `n x 1` matrix holding `v`.
    pub fn column(v: &[C64]) -> Self {
        CMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// `v vᴴ`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, j: usize) -> CVector {
        (0..self.rows).map(|r| self[(r, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Matrix product. Panics on incompatible shapes.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let orow = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> CVector {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `Aᴴ v`.
    pub fn adjoint_mul_vec(&self, v: &[C64]) -> CVector {
        assert_eq!(self.rows, v.len(), "adjoint_mul_vec shape mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for r in 0..self.rows {
            let x = v[r];
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.data[r * self.cols + c].conj() * x;
            }
        }
        out
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &CMatrix, s: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// `self += s * v vᴴ`
    pub fn add_outer(&mut self, v: &[C64], s: f64) {
        assert!(self.rows == v.len() && self.cols == v.len());
        let n = v.len();
        for r in 0..n {
            let vr = v[r] * s;
            for c in 0..n {
                self.data[r * n + c] += vr * v[c].conj();
            }
        }
    }

    pub fn scaled(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn real_trace(&self) -> f64 {
        self.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `max |A - Aᴴ|` over entries.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.is_square() && self.hermitian_asymmetry() <= rel_tol * self.max_abs()
    }

    /// `(A + Aᴴ) / 2`
    pub fn hermitian_part(&self) -> CMatrix {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    /// `Re(aᴴ A a)`
    pub fn quad_form(&self, a: &[C64]) -> f64 {
        assert!(self.rows == a.len() && self.cols == a.len());
        let n = a.len();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..n {
            let row: C64 = self.data[r * n..(r + 1) * n]
                .iter()
                .zip(a)
                .map(|(x, y)| x * y)
                .sum();
            acc += a[r].conj() * row;
        }
        acc.re
    }

    /// `Re Tr(A B)` without forming the product.
    pub fn trace_product_re(&self, other: &CMatrix) -> f64 {
        assert!(self.rows == other.cols && self.cols == other.rows);
        let mut acc = 0.0;
        for a in 0..self.rows {
            for b in 0..self.cols {
                let x = self.data[a * self.cols + b];
                let y = other.data[b * other.cols + a];
                acc += x.re * y.re - x.im * y.im;
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// `aᴴ b`
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

pub fn scale_vec(a: &[C64], s: f64) -> CVector {
    a.iter().map(|x| x * s).collect()
}

/// Eigenvalues in descending order with matching unit-norm eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenPair {
    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.col(i)
    }

    /// `U diag(values) Uᴴ`
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(self.vectors.rows(), self.vectors.rows());
        for i in 0..n {
            out.add_outer(&self.vector(i), self.values[i]);
        }
        out
    }
}

const HERMITIAN_TOL: f64 = 1e-10;

fn check_hermitian(a: &CMatrix) -> Result<(), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let asym = a.hermitian_asymmetry();
    if asym > HERMITIAN_TOL * a.max_abs() {
        return Err(LinalgError::NotHermitian(asym));
    }
    Ok(())
}

/// Cyclic complex Jacobi. Works on the Hermitian part of `a`.
fn jacobi(a: &CMatrix, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>), LinalgError> {
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = if vectors { Some(CMatrix::identity(n)) } else { None };
    let scale = m.frobenius_norm();
    if scale == 0.0 || n <= 1 {
        let d = (0..n).map(|i| m[(i, i)].re).collect();
        return Ok((d, v));
    }
    let max_sweeps = 100 * n;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                if r < 1e-18 * scale && r < 1e-3 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    m[(p, q)] = C64::new(0.0, 0.0);
                    m[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s], [-s d, c d]] with d = conj(apq)/|apq|
                let d = apq.conj() / r;
                rotate_cols(&mut m, p, q, c, s, d);
                rotate_rows(&mut m, p, q, c, s, d);
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                if let Some(v) = v.as_mut() {
                    rotate_cols(v, p, q, c, s, d);
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence(max_sweeps));
    }
    Ok(((0..n).map(|i| m[(i, i)].re).collect(), v))
}

fn rotate_cols(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, d: C64) {
    for r in 0..m.rows() {
        let x = m[(r, p)];
        let y = m[(r, q)];
        m[(r, p)] = x * c - y * d * s;
        m[(r, q)] = x * s + y * d * c;
    }
}

fn rotate_rows(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, d: C64) {
    let dc = d.conj();
    for col in 0..m.cols() {
        let x = m[(p, col)];
        let y = m[(q, col)];
        m[(p, col)] = x * c - y * dc * s;
        m[(q, col)] = x * s + y * dc * c;
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// Each eigenvector is rotated so that its first entry of non-negligible
/// magnitude is real and non-negative.
pub fn hermitian_eig(a: &CMatrix) -> Result<EigenPair, LinalgError> {
    check_hermitian(a)?;
    let (vals, vecs) = jacobi(a, true)?;
    let vecs = vecs.expect("vectors requested");
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(vals[src]);
        let mut col = vecs.col(src);
        if let Some(lead) = col.iter().find(|x| x.norm() > 1e-12) {
            let ph = lead.conj() / lead.norm();
            for x in col.iter_mut() {
                *x *= ph;
            }
        }
        for r in 0..n {
            vectors[(r, dst)] = col[r];
        }
    }
    Ok(EigenPair { values, vectors })
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    check_hermitian(a)?;
    let (mut vals, _) = jacobi(a, false)?;
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Lower-triangular Cholesky factor `A = L Lᴴ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    /// Factorizes `a`, failing when a pivot falls to `pivot_floor` or below.
    pub fn factor(a: &CMatrix, pivot_floor: f64) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > pivot_floor) {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = C64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[C64]) -> CVector {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        y
    }

    /// Solves `Lᴴ x = y`.
    pub fn backward(&self, y: &[C64]) -> CVector {
        let n = self.l.rows();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    pub fn solve_vec(&self, b: &[C64]) -> CVector {
        self.backward(&self.forward(b))
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        for c in 0..b.cols() {
            let x = self.solve_vec(&b.col(c));
            for r in 0..b.rows() {
                out[(r, c)] = x[r];
            }
        }
        out
    }

    pub fn inverse(&self) -> CMatrix {
        let inv = self.solve(&CMatrix::identity(self.l.rows()));
        inv.hermitian_part()
    }

    /// `L⁻¹ B L⁻ᴴ` for Hermitian `B`.
    pub fn congruence_inv(&self, b: &CMatrix) -> CMatrix {
        let n = self.l.rows();
        // columns of L⁻¹ B
        let mut t = CMatrix::zeros(n, n);
        for c in 0..n {
            let x = self.forward(&b.col(c));
            for r in 0..n {
                t[(r, c)] = x[r];
            }
        }
        // (L⁻¹ (L⁻¹ B)ᴴ)ᴴ
        let th = t.adjoint();
        let mut out = CMatrix::zeros(n, n);
        for c in 0..n {
            let x = self.forward(&th.col(c));
            for r in 0..n {
                out[(c, r)] = x[r].conj();
            }
        }
        out.hermitian_part()
    }
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_hermitian(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_hermitian(a)?;
    if b.rows() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: b.rows(),
        });
    }
    let n = a.rows().max(1);
    let floor = 1e-14 * a.real_trace().abs() / n as f64;
    let chol = Cholesky::factor(a, floor)?;
    Ok(chol.solve(b))
}

/// Scaled dominant eigenvector `√λ₁ v₁` and the ratio `λ₂/λ₁`.
///
/// A zero (or numerically negative) matrix gives the zero vector and ratio 0.
pub fn principal_component(w: &CMatrix) -> Result<(CVector, f64), LinalgError> {
    let eig = hermitian_eig(w)?;
    let n = eig.values.len();
    let l1 = eig.values.first().copied().unwrap_or(0.0);
    if !(l1 > 0.0) {
        return Ok((vec![C64::new(0.0, 0.0); n], 0.0));
    }
    let l2 = eig.values.get(1).copied().unwrap_or(0.0).max(0.0);
    let v = scale_vec(&eig.vector(0), l1.sqrt());
    Ok((v, l2 / l1))
}

/// i.i.d. `CN(0, 1)` entries.
pub fn sample_gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * s, im * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| sample_gaussian_vector(1, rng)[0]);
        (&g + &g.adjoint()).scaled(0.5)
    }

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| sample_gaussian_vector(1, rng)[0]);
        let mut a = g.matmul(&g.adjoint());
        a.add_scaled(&CMatrix::identity(n), 0.1);
        a
    }

    #[test]
    fn eig_identity() {
        let e = hermitian_eig(&CMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let u = &e.vectors;
        let g = u.adjoint().matmul(u);
        assert!((&g - &CMatrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn eig_diagonal() {
        let e = hermitian_eig(&CMatrix::diag_real(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert!((e.vector(0)[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e.vector(1)[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eig_residuals_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 4, 8, 16] {
            let a = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&a).unwrap();
            let scale = a.frobenius_norm();
            for i in 0..n {
                let v = e.vector(i);
                let av = a.mul_vec(&v);
                let res: f64 = av
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| (x - y * e.values[i]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res < 1e-9 * scale, "residual {res}");
                assert!((norm(&v) - 1.0).abs() < 1e-12);
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let rec = e.reconstruct();
            assert!((&rec - &a).frobenius_norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = CMatrix::identity(2);
        a[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(hermitian_eig(&a), Err(LinalgError::NotHermitian(_))));
    }

    #[test]
    fn eig_phase_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(5, &mut rng);
        let e = hermitian_eig(&a).unwrap();
        for i in 0..5 {
            let lead = e.vector(i).into_iter().find(|x| x.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = CMatrix::column(&[c(1.0, 2.0), c(-3.0, 0.5)]);
        let x = solve_hermitian(&CMatrix::identity(2), &b).unwrap();
        assert!((&x - &b).max_abs() < 1e-15);
        let x = solve_hermitian(
            &CMatrix::diag_real(&[2.0, 4.0]),
            &CMatrix::column(&[c(2.0, 0.0), c(4.0, 0.0)]),
        )
        .unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 3, 8] {
            let a = random_pd(n, &mut rng);
            let x0 = CMatrix::from_fn(n, 2, |_, _| sample_gaussian_vector(1, &mut rng)[0]);
            let b = a.matmul(&x0);
            let x = solve_hermitian(&a, &b).unwrap();
            assert!((&x - &x0).max_abs() < 1e-8);
        }
    }

    #[test]
    fn solve_rejects_indefinite() {
        let a = CMatrix::diag_real(&[1.0, -1.0]);
        let b = CMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            solve_hermitian(&a, &b),
            Err(LinalgError::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn principal_component_rank_one() {
        let w = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let (v, ratio) = principal_component(&CMatrix::outer(&w)).unwrap();
        assert!(ratio.abs() < 1e-14);
        let overlap = dot(&v, &w).norm();
        assert!((overlap - norm(&v) * norm(&w)).abs() < 1e-9);
        assert!((norm_sqr(&v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn principal_component_identity_and_zero() {
        let (_, ratio) = principal_component(&CMatrix::identity(2)).unwrap();
        assert!((ratio - 1.0).abs() < 1e-15);
        let (v, ratio) = principal_component(&CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(ratio, 0.0);
        assert!(v.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn principal_component_three_outer_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut w = CMatrix::zeros(4, 4);
        for _ in 0..3 {
            w.add_outer(&sample_gaussian_vector(4, &mut rng), 1.0);
        }
        // oracle: power iteration for λ₁, deflation for λ₂
        let power = |m: &CMatrix| {
            let mut x = vec![c(1.0, 0.3); 4];
            let mut lam = 0.0;
            for _ in 0..5000 {
                let y = m.mul_vec(&x);
                lam = norm(&y) / norm(&x);
                x = scale_vec(&y, 1.0 / norm(&y));
            }
            (lam, x)
        };
        let (l1, v1) = power(&w);
        let mut defl = w.clone();
        defl.add_outer(&v1, -l1);
        let (l2, _) = power(&defl);
        let (_, ratio) = principal_component(&w).unwrap();
        assert!((ratio - l2 / l1).abs() < 1e-8, "{ratio} vs {}", l2 / l1);
    }

    #[test]
    fn gaussian_determinism_and_moments() {
        let a = sample_gaussian_vector(4, &mut ChaCha8Rng::seed_from_u64(1));
        let b = sample_gaussian_vector(4, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut pow = 0.0;
        let mut mean = c(0.0, 0.0);
        for _ in 0..n {
            let x = sample_gaussian_vector(1, &mut rng)[0];
            pow += x.norm_sqr();
            mean += x;
        }
        assert!((pow / n as f64 - 1.0).abs() < 0.05);
        assert!((mean / n as f64).norm() < 0.02);
    }

    #[test]
    fn congruence_matches_explicit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_pd(5, &mut rng);
        let b = random_hermitian(5, &mut rng);
        let ch = Cholesky::factor(&a, 0.0).unwrap();
        let got = ch.congruence_inv(&b);
        let l = ch.l();
        let rec = l.matmul(&got).matmul(&l.adjoint());
        assert!((&rec - &b).max_abs() < 1e-10);
    }
}
