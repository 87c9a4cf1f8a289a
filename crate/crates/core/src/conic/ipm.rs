//! Infeasible-start primal-dual path following (HKM direction, Mehrotra
//! predictor-corrector) for
//!
//! ```text
//! min  Σ Tr(C_j X_j) + cᵀx   s.t.  Σ Tr(A_ij X_j) + (Bx)_i = b_i,  X_j ⪰ 0, x ≥ 0
//! ```

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::ConicError;
use crate::numerics::{hermitian_eigenvalues, CMatrix, Cholesky};

pub(crate) struct Block {
    pub dim: usize,
    pub c: CMatrix,
    /// `(row, A_ij)` for every row with a nonzero coefficient on this block.
    pub entries: Vec<(usize, CMatrix)>,
}

pub(crate) struct StandardForm {
    pub blocks: Vec<Block>,
    pub m: usize,
    pub p: usize,
    /// Dense `m x p`, row-major.
    pub lin: Vec<f64>,
    pub c_lin: Vec<f64>,
    pub b: Vec<f64>,
}

pub(crate) struct IpmResult {
    pub x_blocks: Vec<CMatrix>,
    pub x_lin: Vec<f64>,
    pub y: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub primal_objective: f64,
}

struct Iterate {
    x: Vec<CMatrix>,
    xl: Vec<f64>,
    y: Vec<f64>,
    z: Vec<CMatrix>,
    zl: Vec<f64>,
}

struct Direction {
    dx: Vec<CMatrix>,
    dxl: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<CMatrix>,
    dzl: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl StandardForm {
    fn apply_a(&self, x: &[CMatrix], xl: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, xj) in self.blocks.iter().zip(x) {
            for (i, a) in &blk.entries {
                out[*i] += a.trace_product_re(xj);
            }
        }
        for i in 0..self.m {
            out[i] += dot(&self.lin[i * self.p..(i + 1) * self.p], xl);
        }
        out
    }

    /// `Σ_i y_i A_ij` for every block and `Bᵀy`.
    fn apply_at(&self, y: &[f64]) -> (Vec<CMatrix>, Vec<f64>) {
        let mats = self
            .blocks
            .iter()
            .map(|blk| {
                let mut s = CMatrix::zeros(blk.dim, blk.dim);
                for (i, a) in &blk.entries {
                    if y[*i] != 0.0 {
                        s.add_scaled(a, y[*i]);
                    }
                }
                s
            })
            .collect();
        let mut lin = vec![0.0; self.p];
        for i in 0..self.m {
            if y[i] == 0.0 {
                continue;
            }
            for k in 0..self.p {
                lin[k] += self.lin[i * self.p + k] * y[i];
            }
        }
        (mats, lin)
    }

    fn nu(&self) -> f64 {
        (self.blocks.iter().map(|b| b.dim).sum::<usize>() + self.p) as f64
    }
}

fn chol_real(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    true
}

fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Largest `t ≤ cap` with `X + t dX ⪰ 0`, given `X = L Lᴴ`.
fn max_step_psd(chol: &Cholesky, d: &CMatrix) -> Option<f64> {
    let e = chol.congruence_inv(d);
    let ev = hermitian_eigenvalues(&e).ok()?;
    let lmin = ev.last().copied().unwrap_or(0.0);
    Some(if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY })
}

fn max_step_lin(x: &[f64], d: &[f64]) -> f64 {
    x.iter()
        .zip(d)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

struct Factors {
    chol_x: Vec<Cholesky>,
    chol_z: Vec<Cholesky>,
    zinv: Vec<CMatrix>,
    schur: Vec<f64>,
}

fn initial_point(f: &StandardForm) -> Iterate {
    let mut x = Vec::with_capacity(f.blocks.len());
    let mut z = Vec::with_capacity(f.blocks.len());
    for blk in &f.blocks {
        let n = blk.dim as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt()).max(blk.c.frobenius_norm());
        for (i, a) in &blk.entries {
            let na = a.frobenius_norm();
            xi = xi.max(n * (1.0 + f.b[*i].abs()) / (1.0 + na));
            eta = eta.max(na);
        }
        x.push(CMatrix::identity(blk.dim).scaled(xi));
        z.push(CMatrix::identity(blk.dim).scaled(eta));
    }
    let bmax = f.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lmax = f.lin.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cmax = f.c_lin.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xi = 10f64.max(1.0 + bmax);
    let eta = 10f64.max(lmax).max(cmax);
    Iterate {
        x,
        xl: vec![xi; f.p],
        y: vec![0.0; f.m],
        z,
        zl: vec![eta; f.p],
    }
}

fn factorize(f: &StandardForm, it: &Iterate, iteration: usize) -> Result<Factors, ConicError> {
    let mut chol_x = Vec::with_capacity(f.blocks.len());
    let mut chol_z = Vec::with_capacity(f.blocks.len());
    let mut zinv = Vec::with_capacity(f.blocks.len());
    let breakdown = |reason| ConicError::NumericalBreakdown { iteration, reason };
    for (xj, zj) in it.x.iter().zip(&it.z) {
        chol_x.push(Cholesky::factor(xj, 0.0).map_err(|_| breakdown("primal block lost definiteness"))?);
        let cz = Cholesky::factor(zj, 0.0).map_err(|_| breakdown("dual block lost definiteness"))?;
        zinv.push(cz.inverse());
        chol_z.push(cz);
    }
    let m = f.m;
    let mut schur = vec![0.0; m * m];
    for ((blk, xj), zi) in f.blocks.iter().zip(&it.x).zip(&zinv) {
        for (ia, (i, ai)) in blk.entries.iter().enumerate() {
            let g = xj.matmul(ai).matmul(zi);
            for (k, ak) in &blk.entries[..=ia] {
                let v = ak.trace_product_re(&g);
                schur[i * m + k] += v;
                if i != k {
                    schur[k * m + i] += v;
                }
            }
        }
    }
    if f.p > 0 {
        let d: Vec<f64> = it.xl.iter().zip(&it.zl).map(|(x, z)| x / z).collect();
        for i in 0..m {
            let ri = &f.lin[i * f.p..(i + 1) * f.p];
            for k in 0..=i {
                let rk = &f.lin[k * f.p..(k + 1) * f.p];
                let v: f64 = (0..f.p).map(|c| ri[c] * d[c] * rk[c]).sum();
                schur[i * m + k] += v;
                if i != k {
                    schur[k * m + i] += v;
                }
            }
        }
    }
    let maxdiag = (0..m).map(|i| schur[i * m + i]).fold(0.0f64, f64::max);
    let mut reg = 0.0;
    for attempt in 0..8 {
        let mut a = schur.clone();
        for i in 0..m {
            a[i * m + i] += reg;
        }
        if chol_real(&mut a, m) {
            return Ok(Factors {
                chol_x,
                chol_z,
                zinv,
                schur: a,
            });
        }
        reg = maxdiag.max(f64::MIN_POSITIVE) * 1e-14 * 10f64.powi(attempt);
    }
    Err(breakdown("Schur complement not positive definite"))
}

struct Residuals {
    rp: Vec<f64>,
    rd: Vec<CMatrix>,
    rdl: Vec<f64>,
}

type Correction<'a> = Option<&'a Direction>;

fn direction(
    f: &StandardForm,
    it: &Iterate,
    fac: &Factors,
    res: &Residuals,
    sigma_mu: f64,
    corr: Correction,
) -> Direction {
    // K = σμ Z⁻¹ - X - X R_d Z⁻¹ - dXa dZa Z⁻¹
    let mut kx = Vec::with_capacity(f.blocks.len());
    for j in 0..f.blocks.len() {
        let zi = &fac.zinv[j];
        let mut t = it.x[j].matmul(&res.rd[j]);
        if let Some(c) = corr {
            t.add_scaled(&c.dx[j].matmul(&c.dz[j]), 1.0);
        }
        let mut k = zi.scaled(sigma_mu);
        k.add_scaled(&it.x[j], -1.0);
        k.add_scaled(&t.matmul(zi), -1.0);
        kx.push(k);
    }
    let kl: Vec<f64> = (0..f.p)
        .map(|c| {
            let (x, z) = (it.xl[c], it.zl[c]);
            let mut v = sigma_mu / z - x - x / z * res.rdl[c];
            if let Some(cr) = corr {
                v -= cr.dxl[c] * cr.dzl[c] / z;
            }
            v
        })
        .collect();
    let mut rhs = res.rp.clone();
    for (blk, k) in f.blocks.iter().zip(&kx) {
        for (i, a) in &blk.entries {
            rhs[*i] -= a.trace_product_re(k);
        }
    }
    for i in 0..f.m {
        rhs[i] -= dot(&f.lin[i * f.p..(i + 1) * f.p], &kl);
    }
    let dy = chol_solve(&fac.schur, f.m, &rhs);
    let (aty, btdy) = f.apply_at(&dy);
    let mut dz = Vec::with_capacity(f.blocks.len());
    let mut dx = Vec::with_capacity(f.blocks.len());
    for j in 0..f.blocks.len() {
        let d = &res.rd[j] - &aty[j];
        // dX = σμZ⁻¹ - X - dXa dZa Z⁻¹ - X dZ Z⁻¹
        let mut t = it.x[j].matmul(&d);
        if let Some(c) = corr {
            t.add_scaled(&c.dx[j].matmul(&c.dz[j]), 1.0);
        }
        let mut step = fac.zinv[j].scaled(sigma_mu);
        step.add_scaled(&it.x[j], -1.0);
        step.add_scaled(&t.matmul(&fac.zinv[j]), -1.0);
        dx.push(step.hermitian_part());
        dz.push(d);
    }
    let dzl: Vec<f64> = (0..f.p).map(|c| res.rdl[c] - btdy[c]).collect();
    let dxl: Vec<f64> = (0..f.p)
        .map(|c| {
            let (x, z) = (it.xl[c], it.zl[c]);
            let mut v = sigma_mu - x * z - x * dzl[c];
            if let Some(cr) = corr {
                v -= cr.dxl[c] * cr.dzl[c];
            }
            v / z
        })
        .collect();
    Direction {
        dx,
        dxl,
        dy,
        dz,
        dzl,
    }
}

fn step_lengths(it: &Iterate, fac: &Factors, d: &Direction) -> (f64, f64) {
    let mut ap = max_step_lin(&it.xl, &d.dxl);
    let mut ad = max_step_lin(&it.zl, &d.dzl);
    for j in 0..it.x.len() {
        ap = ap.min(max_step_psd(&fac.chol_x[j], &d.dx[j]).unwrap_or(0.0));
        ad = ad.min(max_step_psd(&fac.chol_z[j], &d.dz[j]).unwrap_or(0.0));
    }
    (ap, ad)
}

fn complementarity(it: &Iterate) -> f64 {
    let mut g = dot(&it.xl, &it.zl);
    for (x, z) in it.x.iter().zip(&it.z) {
        g += x.trace_product_re(z);
    }
    g
}

fn trial_complementarity(it: &Iterate, d: &Direction, ap: f64, ad: f64) -> f64 {
    let mut g = 0.0;
    for c in 0..it.xl.len() {
        g += (it.xl[c] + ap * d.dxl[c]) * (it.zl[c] + ad * d.dzl[c]);
    }
    for j in 0..it.x.len() {
        let mut x = it.x[j].clone();
        x.add_scaled(&d.dx[j], ap);
        let mut z = it.z[j].clone();
        z.add_scaled(&d.dz[j], ad);
        g += x.trace_product_re(&z);
    }
    g
}

fn residuals(f: &StandardForm, it: &Iterate) -> Residuals {
    let ax = f.apply_a(&it.x, &it.xl);
    let rp: Vec<f64> = f.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let (aty, bty) = f.apply_at(&it.y);
    let rd = f
        .blocks
        .iter()
        .enumerate()
        .map(|(j, blk)| {
            let mut r = blk.c.clone();
            r.add_scaled(&aty[j], -1.0);
            r.add_scaled(&it.z[j], -1.0);
            r.hermitian_part()
        })
        .collect();
    let rdl = (0..f.p).map(|c| f.c_lin[c] - bty[c] - it.zl[c]).collect();
    Residuals { rp, rd, rdl }
}

fn primal_objective(f: &StandardForm, it: &Iterate) -> f64 {
    let mut v = dot(&f.c_lin, &it.xl);
    for (blk, x) in f.blocks.iter().zip(&it.x) {
        v += blk.c.trace_product_re(x);
    }
    v
}

pub(crate) fn solve(f: &StandardForm, tol: f64, max_iter: usize) -> Result<IpmResult, ConicError> {
    let nu = f.nu();
    let mut it = initial_point(f);
    let bnorm = norm(&f.b);
    let cnorm = (f
        .blocks
        .iter()
        .map(|b| b.c.frobenius_norm().powi(2))
        .sum::<f64>()
        + dot(&f.c_lin, &f.c_lin))
    .sqrt();
    let mut converged = false;
    let mut iterations = 0;
    let mut tiny_steps = 0;
    let mut pinf_hist: Vec<f64> = Vec::new();
    for iter in 0..max_iter {
        iterations = iter;
        let res = residuals(f, &it);
        let pobj = primal_objective(f, &it);
        let dobj = dot(&f.b, &it.y);
        let gap = complementarity(&it);
        let mu = gap / nu;
        let pinf = norm(&res.rp) / (1.0 + bnorm);
        let dinf = (res.rd.iter().map(|r| r.frobenius_norm().powi(2)).sum::<f64>()
            + dot(&res.rdl, &res.rdl))
        .sqrt()
            / (1.0 + cnorm);
        let relgap = gap.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
        if pinf <= tol && dinf <= tol && relgap <= tol {
            converged = true;
            break;
        }
        let xnorm: f64 = it.x.iter().map(|x| x.real_trace()).sum::<f64>() + it.xl.iter().sum::<f64>();
        if !xnorm.is_finite() || xnorm > 1e14 || norm(&it.y) > 1e14 {
            break;
        }
        pinf_hist.push(pinf);
        if iter >= 60 {
            let old = pinf_hist[iter - 30];
            if pinf > 100.0 * tol && pinf > 0.5 * old {
                break;
            }
        }
        let fac = match factorize(f, &it, iter) {
            Ok(fac) => fac,
            Err(e) => {
                if pinf <= 10.0 * tol && dinf <= 10.0 * tol && relgap <= 10.0 * tol {
                    break;
                }
                return Err(e);
            }
        };
        let pred = direction(f, &it, &fac, &res, 0.0, None);
        let (ap, ad) = step_lengths(&it, &fac, &pred);
        let (ap1, ad1) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = trial_complementarity(&it, &pred, ap1, ad1) / nu;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let expon = if ap1.min(ad1) > 0.3 { 3 } else { 1 };
        let sigma = ratio.powi(expon).clamp(0.0, 1.0);
        let corr = direction(f, &it, &fac, &res, sigma * mu, Some(&pred));
        let (ap, ad) = step_lengths(&it, &fac, &corr);
        let gamma = 0.9 + 0.09 * ap1.min(ad1);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-8 && ad < 1e-8 {
            tiny_steps += 1;
            if tiny_steps >= 3 {
                break;
            }
        } else {
            tiny_steps = 0;
        }
        for j in 0..it.x.len() {
            it.x[j].add_scaled(&corr.dx[j], ap);
            it.z[j].add_scaled(&corr.dz[j], ad);
        }
        for c in 0..f.p {
            it.xl[c] += ap * corr.dxl[c];
            it.zl[c] += ad * corr.dzl[c];
        }
        for i in 0..f.m {
            it.y[i] += ad * corr.dy[i];
        }
        iterations = iter + 1;
    }
    let primal_objective = primal_objective(f, &it);
    Ok(IpmResult {
        x_blocks: it.x,
        x_lin: it.xl,
        y: it.y,
        converged,
        iterations,
        primal_objective,
    })
}

/// Minimum total residual `Σ|v|` of `A(X) + Bx + v = b` over the ball
/// `Σ Tr X_j + Σ x ≤ big_m`.
pub(crate) fn phase_one(f: &StandardForm, big_m: f64, tol: f64, max_iter: usize) -> Result<f64, ConicError> {
    let m = f.m;
    let p = f.p + 2 * m + 1;
    let mut lin = vec![0.0; (m + 1) * p];
    for i in 0..m {
        for k in 0..f.p {
            lin[i * p + k] = f.lin[i * f.p + k];
        }
        lin[i * p + f.p + i] = 1.0;
        lin[i * p + f.p + m + i] = -1.0;
    }
    let nb = f.blocks.iter().map(|b| b.dim).sum::<usize>() as f64;
    let bound_norm = (nb + f.p as f64 + 1.0).sqrt();
    for k in 0..f.p {
        lin[m * p + k] = 1.0 / bound_norm;
    }
    lin[m * p + p - 1] = 1.0 / bound_norm;
    let mut c_lin = vec![0.0; p];
    for c in c_lin.iter_mut().skip(f.p).take(2 * m) {
        *c = 1.0;
    }
    let blocks = f
        .blocks
        .iter()
        .map(|blk| {
            let mut entries = blk.entries.clone();
            entries.push((m, CMatrix::identity(blk.dim).scaled(1.0 / bound_norm)));
            Block {
                dim: blk.dim,
                c: CMatrix::zeros(blk.dim, blk.dim),
                entries,
            }
        })
        .collect();
    let mut b = f.b.clone();
    b.push(big_m / bound_norm);
    let aux = StandardForm {
        blocks,
        m: m + 1,
        p,
        lin,
        c_lin,
        b,
    };
    let res = solve(&aux, tol, max_iter)?;
    Ok(res.primal_objective.max(0.0))
}
