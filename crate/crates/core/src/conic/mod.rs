//! Small dense conic solver over Hermitian PSD blocks and bounded scalars.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    Σ_j Tr(C_j X_j) + Σ_i c_i y_i
//! subject to  Σ_j Tr(A_kj X_j) + Σ_i a_ki y_i  {≤, =, ≥}  r_k
//!             X_j ⪰ 0,  l_i ≤ y_i ≤ u_i
//! ```
//!
//! and solved with a primal-dual infeasible-start interior-point method.

mod cuts;
mod ipm;
#[cfg(test)]
mod tests;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::{hermitian_eigenvalues, CMatrix, C64};

pub use cuts::{log_secant_cuts, log_tangent_cuts, min_of_cuts, TangentCut};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coefficient matrix of `{0}` is not Hermitian")]
    NotHermitian(String),
    #[error("tolerance {0:e} outside [1e-10, 1e-3]")]
    InvalidTolerance(f64),
    #[error("numerical breakdown at iteration {iteration}: {reason}")]
    NumericalBreakdown { iteration: usize, reason: &'static str },
    #[error("invalid anchor {0}")]
    InvalidAnchor(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub name: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVar {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    /// One entry per PSD block; `None` is a zero coefficient.
    pub coeff_matrices: Vec<Option<CMatrix>>,
    /// One entry per scalar variable.
    pub scalar_coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    /// Adds `coef · a aᴴ` to the coefficient of `block`.
    pub fn add_outer(&mut self, block: usize, a: &[C64], coef: f64) {
        if coef == 0.0 {
            return;
        }
        let m = self.coeff_matrices[block].get_or_insert_with(|| CMatrix::zeros(a.len(), a.len()));
        m.add_outer(a, coef);
    }

    pub fn add_matrix(&mut self, block: usize, a: &CMatrix, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let m = self.coeff_matrices[block].get_or_insert_with(|| CMatrix::zeros(a.rows(), a.cols()));
        m.add_scaled(a, coef);
    }

    pub fn add_scalar(&mut self, var: usize, coef: f64) {
        self.scalar_coeffs[var] += coef;
    }

    pub fn lhs(&self, blocks: &[CMatrix], scalars: &[f64]) -> f64 {
        let mut v = 0.0;
        for (a, x) in self.coeff_matrices.iter().zip(blocks) {
            if let Some(a) = a {
                v += a.trace_product_re(x);
            }
        }
        v + self
            .scalar_coeffs
            .iter()
            .zip(scalars)
            .map(|(a, y)| a * y)
            .sum::<f64>()
    }

    /// Amount by which the constraint is violated (0 when satisfied).
    pub fn violation(&self, blocks: &[CMatrix], scalars: &[f64]) -> f64 {
        let d = self.lhs(blocks, scalars) - self.rhs;
        match self.sense {
            Sense::Le => d.max(0.0),
            Sense::Ge => (-d).max(0.0),
            Sense::Eq => d.abs(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProblem {
    pub psd_blocks: Vec<PsdBlock>,
    pub scalar_vars: Vec<ScalarVar>,
    pub objective_matrices: Vec<Option<CMatrix>>,
    pub objective_scalars: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_psd_block(&mut self, name: impl Into<String>, dim: usize) -> usize {
        self.psd_blocks.push(PsdBlock {
            name: name.into(),
            dim,
        });
        self.objective_matrices.push(None);
        for c in &mut self.constraints {
            c.coeff_matrices.push(None);
        }
        self.psd_blocks.len() - 1
    }

    pub fn add_scalar(
        &mut self,
        name: impl Into<String>,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> usize {
        self.scalar_vars.push(ScalarVar {
            name: name.into(),
            lower,
            upper,
        });
        self.objective_scalars.push(0.0);
        for c in &mut self.constraints {
            c.scalar_coeffs.push(0.0);
        }
        self.scalar_vars.len() - 1
    }

    pub fn set_objective_matrix(&mut self, block: usize, c: CMatrix) {
        self.objective_matrices[block] = Some(c);
    }

    pub fn set_objective_scalar(&mut self, var: usize, c: f64) {
        self.objective_scalars[var] = c;
    }

    /// Empty constraint sized for the current variables; add it with [`push`](Self::push).
    pub fn constraint(&self, name: impl Into<String>, sense: Sense, rhs: f64) -> LinearConstraint {
        LinearConstraint {
            name: name.into(),
            coeff_matrices: vec![None; self.psd_blocks.len()],
            scalar_coeffs: vec![0.0; self.scalar_vars.len()],
            sense,
            rhs,
        }
    }

    pub fn push(&mut self, c: LinearConstraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.psd_blocks.iter().position(|b| b.name == name)
    }

    pub fn scalar_index(&self, name: &str) -> Option<usize> {
        self.scalar_vars.iter().position(|s| s.name == name)
    }

    pub fn objective(&self, blocks: &[CMatrix], scalars: &[f64]) -> f64 {
        let mut v = 0.0;
        for (c, x) in self.objective_matrices.iter().zip(blocks) {
            if let Some(c) = c {
                v += c.trace_product_re(x);
            }
        }
        v + self
            .objective_scalars
            .iter()
            .zip(scalars)
            .map(|(a, y)| a * y)
            .sum::<f64>()
    }

    /// Largest violation over constraints and bounds, each relative to `1 + |rhs|`.
    pub fn max_violation(&self, blocks: &[CMatrix], scalars: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            worst = worst.max(c.violation(blocks, scalars) / (1.0 + c.rhs.abs()));
        }
        for (v, &y) in self.scalar_vars.iter().zip(scalars) {
            if let Some(l) = v.lower {
                worst = worst.max((l - y).max(0.0) / (1.0 + l.abs()));
            }
            if let Some(u) = v.upper {
                worst = worst.max((y - u).max(0.0) / (1.0 + u.abs()));
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let nb = self.psd_blocks.len();
        let ns = self.scalar_vars.len();
        if self.objective_matrices.len() != nb || self.objective_scalars.len() != ns {
            return Err(ConicError::DimensionMismatch("objective".into()));
        }
        let check = |name: &str, mats: &[Option<CMatrix>]| -> Result<(), ConicError> {
            for (m, blk) in mats.iter().zip(&self.psd_blocks) {
                if let Some(m) = m {
                    if m.rows() != blk.dim || m.cols() != blk.dim {
                        return Err(ConicError::DimensionMismatch(format!(
                            "`{name}` on block `{}`: {}x{} vs {}",
                            blk.name,
                            m.rows(),
                            m.cols(),
                            blk.dim
                        )));
                    }
                    if m.hermitian_asymmetry() > 1e-10 * m.max_abs().max(f64::MIN_POSITIVE) {
                        return Err(ConicError::NotHermitian(name.into()));
                    }
                }
            }
            Ok(())
        };
        check("objective", &self.objective_matrices)?;
        for c in &self.constraints {
            if c.coeff_matrices.len() != nb || c.scalar_coeffs.len() != ns {
                return Err(ConicError::DimensionMismatch(format!(
                    "constraint `{}` sized for {} blocks/{} scalars",
                    c.name,
                    c.coeff_matrices.len(),
                    c.scalar_coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.scalar_coeffs.iter().any(|x| !x.is_finite()) {
                return Err(ConicError::DimensionMismatch(format!(
                    "constraint `{}` has non-finite data",
                    c.name
                )));
            }
            check(&c.name, &c.coeff_matrices)?;
        }
        for v in &self.scalar_vars {
            if let (Some(l), Some(u)) = (v.lower, v.upper) {
                if l > u {
                    return Err(ConicError::DimensionMismatch(format!(
                        "scalar `{}` has empty bounds",
                        v.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text listing: one `block`/`scalar` line per variable, then each
    /// constraint as `name sense rhs` followed by `block row col re im`
    /// triplets (upper triangle) and `scalar index coef` entries.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for b in &self.psd_blocks {
            let _ = writeln!(s, "block {} {}", b.name, b.dim);
        }
        for v in &self.scalar_vars {
            let fmt_bound = |b: Option<f64>| b.map_or_else(|| String::from("none"), |x| format!("{x:e}"));
            let _ = writeln!(s, "scalar {} {} {}", v.name, fmt_bound(v.lower), fmt_bound(v.upper));
        }
        let write_mats = |s: &mut String, mats: &[Option<CMatrix>]| {
            for (j, m) in mats.iter().enumerate() {
                if let Some(m) = m {
                    for r in 0..m.rows() {
                        for c in r..m.cols() {
                            let x = m[(r, c)];
                            if x.re != 0.0 || x.im != 0.0 {
                                let _ = writeln!(s, "  {j} {r} {c} {:e} {:e}", x.re, x.im);
                            }
                        }
                    }
                }
            }
        };
        let _ = writeln!(s, "objective");
        write_mats(&mut s, &self.objective_matrices);
        for (i, c) in self.objective_scalars.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(s, "  scalar {i} {c:e}");
            }
        }
        for c in &self.constraints {
            let _ = writeln!(s, "constraint {} {} {:e}", c.name, c.sense.symbol(), c.rhs);
            write_mats(&mut s, &c.coeff_matrices);
            for (i, a) in c.scalar_coeffs.iter().enumerate() {
                if *a != 0.0 {
                    let _ = writeln!(s, "  scalar {i} {a:e}");
                }
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub psd_values: Vec<(String, CMatrix)>,
    pub scalar_values: Vec<(String, f64)>,
    pub objective_value: f64,
    pub status: SolveStatus,
    /// Worst constraint or bound violation relative to `1 + |rhs|`.
    pub max_constraint_violation: f64,
    pub iterations: usize,
    /// Residual infeasibility reported by the phase-one problem, when it ran.
    pub phase_one_residual: Option<f64>,
    /// Multipliers of the constraints, in problem order and original units.
    pub duals: Vec<f64>,
}

impl ConicSolution {
    pub fn psd(&self, name: &str) -> Option<&CMatrix> {
        self.psd_values.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalar_values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn blocks(&self) -> Vec<CMatrix> {
        self.psd_values.iter().map(|(_, m)| m.clone()).collect()
    }

    pub fn scalars(&self) -> Vec<f64> {
        self.scalar_values.iter().map(|(_, v)| *v).collect()
    }

    /// Smallest eigenvalue of each PSD block relative to `1 + trace`.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        self.psd_values
            .iter()
            .filter_map(|(_, m)| {
                let ev = hermitian_eigenvalues(m).ok()?;
                Some(ev.last().copied().unwrap_or(0.0) / (1.0 + m.real_trace().abs()))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-7,
            max_iter: 200,
        }
    }
}

/// Affine image of a user scalar in standard-form variables.
#[derive(Clone, Debug)]
struct ScalarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

struct Conversion {
    form: ipm::StandardForm,
    maps: Vec<ScalarMap>,
    /// Equality row of each user constraint and its scaling.
    row_of: Vec<Option<(usize, f64)>>,
    obj_scale: f64,
    infeasible_row: Option<usize>,
}

fn row_norm(mats: &[(usize, CMatrix)], lin: &[(usize, f64)]) -> f64 {
    let a: f64 = mats.iter().map(|(_, m)| m.frobenius_norm().powi(2)).sum();
    let b: f64 = lin.iter().map(|(_, x)| x * x).sum();
    (a + b).sqrt()
}

fn convert(p: &ConicProblem) -> Conversion {
    let mut n_lin = 0usize;
    let mut maps = Vec::with_capacity(p.scalar_vars.len());
    // rows carrying upper bounds: (standard var, bound)
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for v in &p.scalar_vars {
        let map = match (v.lower, v.upper) {
            (Some(l), u) => {
                let k = n_lin;
                n_lin += 1;
                if let Some(u) = u {
                    bound_rows.push((k, u - l));
                }
                ScalarMap {
                    offset: l,
                    terms: vec![(k, 1.0)],
                }
            }
            (None, Some(u)) => {
                let k = n_lin;
                n_lin += 1;
                ScalarMap {
                    offset: u,
                    terms: vec![(k, -1.0)],
                }
            }
            (None, None) => {
                let k = n_lin;
                n_lin += 2;
                ScalarMap {
                    offset: 0.0,
                    terms: vec![(k, 1.0), (k + 1, -1.0)],
                }
            }
        };
        maps.push(map);
    }

    struct Row {
        mats: Vec<(usize, CMatrix)>,
        lin: Vec<(usize, f64)>,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut row_of = Vec::with_capacity(p.constraints.len());
    let mut infeasible_row = None;
    for (ci, c) in p.constraints.iter().enumerate() {
        let mats: Vec<(usize, CMatrix)> = c
            .coeff_matrices
            .iter()
            .enumerate()
            .filter_map(|(j, m)| m.as_ref().filter(|m| m.max_abs() > 0.0).map(|m| (j, m.hermitian_part())))
            .collect();
        let mut lin_dense = vec![0.0; n_lin];
        let mut rhs = c.rhs;
        for (i, &a) in c.scalar_coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            rhs -= a * maps[i].offset;
            for &(k, coef) in &maps[i].terms {
                lin_dense[k] += a * coef;
            }
        }
        let mut lin: Vec<(usize, f64)> = lin_dense
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(k, x)| (k, *x))
            .collect();
        let norm = row_norm(&mats, &lin);
        if norm == 0.0 {
            let ok = match c.sense {
                Sense::Le => rhs >= 0.0,
                Sense::Ge => rhs <= 0.0,
                Sense::Eq => rhs == 0.0,
            };
            if !ok && infeasible_row.is_none() {
                infeasible_row = Some(ci);
            }
            row_of.push(None);
            continue;
        }
        match c.sense {
            Sense::Le => {
                lin.push((n_lin, 1.0));
                n_lin += 1;
            }
            Sense::Ge => {
                lin.push((n_lin, -1.0));
                n_lin += 1;
            }
            Sense::Eq => {}
        }
        row_of.push(Some((rows.len(), 1.0 / norm)));
        rows.push(Row { mats, lin, rhs });
    }
    for (k, ub) in bound_rows {
        rows.push(Row {
            mats: Vec::new(),
            lin: vec![(k, 1.0), (n_lin, 1.0)],
            rhs: ub,
        });
        n_lin += 1;
    }

    // objective
    let mut c_lin = vec![0.0; n_lin];
    for (i, &c) in p.objective_scalars.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for &(k, coef) in &maps[i].terms {
            c_lin[k] += c * coef;
        }
    }
    let c_blocks: Vec<CMatrix> = p
        .psd_blocks
        .iter()
        .zip(&p.objective_matrices)
        .map(|(b, c)| c.as_ref().map_or_else(|| CMatrix::zeros(b.dim, b.dim), |c| c.hermitian_part()))
        .collect();
    let obj_norm = c_blocks
        .iter()
        .map(|c| c.frobenius_norm().powi(2))
        .chain(c_lin.iter().map(|x| x * x))
        .sum::<f64>()
        .sqrt();
    let obj_scale = if obj_norm > 0.0 { 1.0 / obj_norm } else { 1.0 };

    let m = rows.len();
    let mut blocks: Vec<ipm::Block> = p
        .psd_blocks
        .iter()
        .zip(c_blocks)
        .map(|(b, c)| ipm::Block {
            dim: b.dim,
            c: c.scaled(obj_scale),
            entries: Vec::new(),
        })
        .collect();
    let mut lin = vec![0.0; m * n_lin];
    let mut b = vec![0.0; m];
    for (i, row) in rows.into_iter().enumerate() {
        let s = 1.0 / row_norm(&row.mats, &row.lin);
        for (j, a) in row.mats {
            blocks[j].entries.push((i, a.scaled(s)));
        }
        for (k, x) in row.lin {
            lin[i * n_lin + k] += x * s;
        }
        b[i] = row.rhs * s;
    }
    Conversion {
        form: ipm::StandardForm {
            blocks,
            m,
            p: n_lin,
            lin,
            c_lin: c_lin.iter().map(|x| x * obj_scale).collect(),
            b,
        },
        maps,
        row_of,
        obj_scale,
        infeasible_row,
    }
}

/// Solves `problem` to relative accuracy `tol`.
///
/// `Optimal` means primal residual, dual residual and relative duality gap
/// are all below `tol` on the equilibrated problem. When the main iteration
/// does not converge a phase-one problem (minimum constraint residual inside
/// a trace ball of radius `1e4·max(1, max |rhs|)`) decides between
/// `Infeasible` and `MaxIterations`.
pub fn solve(problem: &ConicProblem, tol: f64, max_iter: usize) -> Result<ConicSolution, ConicError> {
    if !(1e-10..=1e-3).contains(&tol) {
        return Err(ConicError::InvalidTolerance(tol));
    }
    problem.validate()?;
    let conv = convert(problem);
    let big_m = 1e4
        * problem
            .constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(1.0, f64::max);
    if conv.infeasible_row.is_some() {
        return Ok(finish(problem, &conv, None, SolveStatus::Infeasible, 0, Some(f64::INFINITY)));
    }
    let res = ipm::solve(&conv.form, tol, max_iter)?;
    if res.converged {
        let iters = res.iterations;
        return Ok(finish(problem, &conv, Some(res), SolveStatus::Optimal, iters, None));
    }
    let iters = res.iterations;
    let residual = ipm::phase_one(&conv.form, big_m, tol, max_iter)?;
    let feas_tol = 1e-6 * (1.0 + conv.form.b.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    let status = if residual > feas_tol {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIterations
    };
    Ok(finish(problem, &conv, Some(res), status, iters, Some(residual)))
}

fn finish(
    p: &ConicProblem,
    conv: &Conversion,
    res: Option<ipm::IpmResult>,
    status: SolveStatus,
    iterations: usize,
    phase_one_residual: Option<f64>,
) -> ConicSolution {
    let (blocks, scalars, duals) = match &res {
        Some(r) => {
            let scalars: Vec<f64> = conv
                .maps
                .iter()
                .map(|m| m.offset + m.terms.iter().map(|&(k, c)| c * r.x_lin[k]).sum::<f64>())
                .collect();
            let duals = conv
                .row_of
                .iter()
                .map(|ro| ro.map_or(0.0, |(i, s)| r.y[i] * s / conv.obj_scale))
                .collect();
            (r.x_blocks.clone(), scalars, duals)
        }
        None => (
            p.psd_blocks.iter().map(|b| CMatrix::zeros(b.dim, b.dim)).collect(),
            conv.maps.iter().map(|m| m.offset).collect(),
            vec![0.0; p.constraints.len()],
        ),
    };
    ConicSolution {
        objective_value: p.objective(&blocks, &scalars),
        max_constraint_violation: p.max_violation(&blocks, &scalars),
        psd_values: p
            .psd_blocks
            .iter()
            .zip(blocks)
            .map(|(b, m)| (b.name.clone(), m))
            .collect(),
        scalar_values: p
            .scalar_vars
            .iter()
            .zip(scalars)
            .map(|(v, y)| (v.name.clone(), y))
            .collect(),
        status,
        iterations,
        phase_one_residual,
        duals,
    }
}
