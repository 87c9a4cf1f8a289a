//! Transmit-side subproblem: a semidefinite relaxation in the beam
//! covariances with linearized rate constraints, followed by rank-one
//! recovery.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::benchmarks::MultipleAccess;
use crate::channel::ChannelSet;
use crate::conic::{self, log_secant_cuts, ConicProblem, ConicSolution, LinearConstraint, Sense, SolveStatus};
use crate::numerics::{hermitian_eig, principal_component, sample_gaussian_vector, CMatrix, CVector, C64};
use crate::system::{BeamformingSolution, SystemConfig};

use super::budget::{LinkBudget, Targets};
use super::{AoError, AoState, Anchors};

/// How the user rate constraints enter the relaxation.
#[derive(Clone, Copy, Debug)]
pub enum RateModel<'a> {
    /// Difference-of-logs rate rows expanded around the given anchors.
    Sca(&'a Anchors),
    /// Private SINR rows at the rate target with no common stream; used to
    /// find a starting point.
    PrivateSinr,
}

/// A built relaxation and where each variable lives in it.
#[derive(Clone, Debug)]
pub struct TransmitSdp {
    pub problem: ConicProblem,
    /// Block values are transmit covariances divided by this power (W).
    pub power_unit: f64,
    pub common_block: Option<usize>,
    pub private_blocks: Vec<usize>,
    pub sensing_block: Option<usize>,
    pub share_vars: Vec<usize>,
}

impl TransmitSdp {
    fn all_blocks(&self) -> Vec<usize> {
        self.common_block
            .iter()
            .chain(&self.private_blocks)
            .chain(&self.sensing_block)
            .copied()
            .collect()
    }
}

/// Sum of `coef · Tr(a aᴴ X_block)` terms.
#[derive(Clone, Debug, Default)]
struct Expr {
    terms: Vec<(usize, CVector, f64)>,
}

impl Expr {
    fn add(&mut self, block: Option<usize>, a: &[C64], coef: f64) {
        if let Some(b) = block {
            if coef != 0.0 {
                self.terms.push((b, a.to_vec(), coef));
            }
        }
    }

    fn add_all(&mut self, blocks: &[usize], a: &[C64], coef: f64) {
        for &b in blocks {
            self.add(Some(b), a, coef);
        }
    }

    fn emit(&self, row: &mut LinearConstraint, scale: f64) {
        for (b, a, c) in &self.terms {
            row.add_outer(*b, a, c * scale);
        }
    }
}

struct UserExprs {
    private_signal: Expr,
    private_rest: Expr,
    common_signal: Expr,
    common_rest: Expr,
}

fn user_exprs(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, sdp: &TransmitSdp, l: usize) -> UserExprs {
    let all = sdp.all_blocks();
    let f = &ch.f[l];
    let noma = cfg.scheme.toggles().multiple_access == MultipleAccess::Noma;
    let mut base = Expr::default();
    base.add(sdp.sensing_block, f, cfg.sic_sensing);
    for (k, h) in ch.h[l].iter().enumerate() {
        base.add_all(&all, h, sol.alpha[k]);
    }
    let mut private_rest = base.clone();
    let mut common_rest = base;
    for (j, &b) in sdp.private_blocks.iter().enumerate() {
        common_rest.add(Some(b), f, 1.0);
        let coef = match (noma, j.cmp(&l)) {
            (_, core::cmp::Ordering::Equal) => 0.0,
            (true, core::cmp::Ordering::Less) => cfg.sic_private,
            _ => 1.0,
        };
        private_rest.add(Some(b), f, coef);
    }
    private_rest.add(sdp.common_block, f, if noma { 1.0 } else { cfg.sic_common });
    let mut private_signal = Expr::default();
    private_signal.add(sdp.private_blocks.get(l).copied(), f, 1.0);
    let mut common_signal = Expr::default();
    common_signal.add(sdp.common_block, f, 1.0);
    UserExprs {
        private_signal,
        private_rest,
        common_signal,
        common_rest,
    }
}

/// Anchors for secant cuts of `log₂ τ` around an incumbent value `tau ≥ 1`.
fn secant_points(tau: f64) -> Vec<f64> {
    let mut pts = alloc::vec![1.0];
    for f in [1.0 / 16.0, 0.25, 0.5, 1.0, 2.0, 4.0, 16.0] {
        let x = tau * f;
        if x > 1.0 {
            pts.push(x);
        }
    }
    pts
}

/// Adds `hypo ≤ log₂(1 + (signal + rest)/σ²)` as secant cuts.
fn add_log_cuts(
    p: &mut ConicProblem,
    name: &str,
    hypo: usize,
    total: &[&Expr],
    tau: f64,
    coef_scale: f64,
) -> Result<(), AoError> {
    for (j, cut) in log_secant_cuts(&secant_points(tau.max(1.0)), 0.0)?.iter().enumerate() {
        let mut row = p.constraint(format!("{name}_cut{j}"), Sense::Le, cut.slope + cut.intercept);
        row.add_scalar(hypo, 1.0);
        for e in total {
            e.emit(&mut row, -cut.slope * coef_scale);
        }
        p.push(row);
    }
    Ok(())
}

/// Builds the relaxation at the receive filters and reflection coefficients
/// of `sol`.
pub fn build_transmit_sdp(
    ch: &ChannelSet,
    sol: &BeamformingSolution,
    rates: RateModel<'_>,
    cfg: &SystemConfig,
    power_unit: f64,
) -> Result<TransmitSdp, AoError> {
    let toggles = cfg.scheme.toggles();
    let targets = Targets::from_config(cfg);
    let (m, users, tags) = (ch.tx_antennas(), ch.users(), ch.tags());
    let sigma2 = cfg.noise_power();
    let sca = match rates {
        RateModel::Sca(a) => {
            let n = users;
            if a.private_total.len() != n || a.private_rest.len() != n || a.common_total.len() != n || a.common_rest.len() != n {
                return Err(AoError::MissingAnchors);
            }
            Some(a)
        }
        RateModel::PrivateSinr => None,
    };
    let use_common = toggles.has_common_stream && sca.is_some() && users > 0;

    let mut p = ConicProblem::new();
    let common_block = use_common.then(|| p.add_psd_block("Wc", m));
    let private_blocks: Vec<usize> = if toggles.has_private_streams() {
        (0..users).map(|l| p.add_psd_block(format!("W{l}"), m)).collect()
    } else {
        Vec::new()
    };
    let sensing_block = toggles.has_sensing_covariance.then(|| p.add_psd_block("S", m));
    let share_vars: Vec<usize> = if use_common {
        (0..users).map(|l| p.add_scalar(format!("C{l}"), Some(0.0), None)).collect()
    } else {
        Vec::new()
    };
    let mut sdp = TransmitSdp {
        problem: ConicProblem::new(),
        power_unit,
        common_block,
        private_blocks,
        sensing_block,
        share_vars,
    };
    let all = sdp.all_blocks();
    for &b in &all {
        p.set_objective_matrix(b, CMatrix::identity(m));
    }
    let pu = power_unit;

    if let Some(g) = targets.sensing {
        for k in 0..tags {
            let u = &sol.u[k];
            let mut e = Expr::default();
            let echo = |i: usize| sol.alpha[i] * crate::numerics::dot(u, &ch.g_b[i]).norm_sqr();
            e.add_all(&all, &ch.g_f[k], echo(k));
            for i in (0..tags).filter(|&i| i != k) {
                e.add_all(&all, &ch.g_f[i], -g * echo(i));
            }
            e.add_all(&all, &ch.g_si.mul_vec(u), -g * cfg.si_residual);
            let mut row = p.constraint(format!("sensing{k}"), Sense::Ge, g * crate::numerics::norm_sqr(u));
            e.emit(&mut row, pu / sigma2);
            p.push(row);
        }
    }
    if let Some(g) = targets.tag {
        for k in 0..tags {
            let mut e = Expr::default();
            e.add_all(&all, &ch.h_tag[k], sol.alpha[k]);
            for i in (0..tags).filter(|&i| i != k) {
                e.add_all(&all, &ch.h_tag[i], -g * sol.alpha[i]);
            }
            e.add(sdp.common_block, &ch.f0, -g * cfg.sic_common);
            for &b in &sdp.private_blocks {
                e.add(Some(b), &ch.f0, -g * cfg.sic_private);
            }
            e.add(sdp.sensing_block, &ch.f0, -g * cfg.sic_sensing);
            let mut row = p.constraint(format!("tag{k}"), Sense::Ge, g);
            e.emit(&mut row, pu / sigma2);
            p.push(row);
        }
    }
    for k in 0..tags {
        let mut e = Expr::default();
        e.add_all(&all, &ch.g_f[k], 1.0 - sol.alpha[k]);
        let mut row = p.constraint(format!("eh{k}"), Sense::Ge, 1.0);
        e.emit(&mut row, pu / targets.eh_input);
        p.push(row);
    }

    if let Some(rp) = targets.private_rate {
        let gp = 2f64.powf(rp) - 1.0;
        for l in 0..users {
            let ex = user_exprs(ch, sol, cfg, &sdp, l);
            match sca {
                None => {
                    let mut row = p.constraint(format!("private{l}"), Sense::Ge, gp);
                    ex.private_signal.emit(&mut row, pu / sigma2);
                    ex.private_rest.emit(&mut row, -gp * pu / sigma2);
                    p.push(row);
                }
                Some(a) => {
                    let rho = p.add_scalar(format!("rho{l}"), Some(0.0), None);
                    let b = a.private_rest[l].max(1.0);
                    let mut row = p.constraint(
                        format!("rate_p{l}"),
                        Sense::Ge,
                        rp + b.log2() + (1.0 - b) / (b * LN_2),
                    );
                    row.add_scalar(rho, 1.0);
                    if let Some(&c) = sdp.share_vars.get(l) {
                        row.add_scalar(c, 1.0);
                    }
                    ex.private_rest.emit(&mut row, -pu / (sigma2 * b * LN_2));
                    p.push(row);
                    add_log_cuts(
                        &mut p,
                        &format!("rho{l}"),
                        rho,
                        &[&ex.private_signal, &ex.private_rest],
                        a.private_total[l],
                        pu / sigma2,
                    )?;
                }
            }
            if let (Some(a), true) = (sca, use_common) {
                let kappa = p.add_scalar(format!("kappa{l}"), Some(0.0), None);
                let i0 = a.common_rest[l].max(1.0);
                let mut row = p.constraint(
                    format!("rate_c{l}"),
                    Sense::Le,
                    -i0.log2() - (1.0 - i0) / (i0 * LN_2),
                );
                for &c in &sdp.share_vars {
                    row.add_scalar(c, 1.0);
                }
                row.add_scalar(kappa, -1.0);
                ex.common_rest.emit(&mut row, pu / (sigma2 * i0 * LN_2));
                p.push(row);
                add_log_cuts(
                    &mut p,
                    &format!("kappa{l}"),
                    kappa,
                    &[&ex.common_signal, &ex.common_rest],
                    a.common_total[l],
                    pu / sigma2,
                )?;
            }
        }
    }
    sdp.problem = p;
    Ok(sdp)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransmitOutcome {
    /// Every beam covariance was rank one.
    RankOne,
    /// Gaussian randomization produced the update.
    Randomized { trials: usize, rank_ratio: f64 },
    /// The incumbent was kept.
    Retained,
    /// A feasible update was found but raised the power.
    Rejected,
}

impl TransmitOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            TransmitOutcome::RankOne => "rank_one",
            TransmitOutcome::Randomized { .. } => "randomized",
            TransmitOutcome::Retained => "retained",
            TransmitOutcome::Rejected => "rejected",
        }
    }
}

fn psd_projection(a: &CMatrix) -> CMatrix {
    let Ok(eig) = hermitian_eig(&a.hermitian_part()) else {
        return a.hermitian_part();
    };
    let n = a.rows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &l) in eig.values.iter().enumerate() {
        if l > 0.0 {
            out.add_outer(&eig.vector(i), l);
        }
    }
    out
}

/// Eigen-factor `U Λ^{1/2}` columns of a PSD matrix, dropping negligible modes.
fn factor(w: &CMatrix) -> Vec<CVector> {
    let Ok(eig) = hermitian_eig(&w.hermitian_part()) else {
        return Vec::new();
    };
    let top = eig.values.first().copied().unwrap_or(0.0);
    eig.values
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l > 1e-12 * top && l > 0.0)
        .map(|(i, &l)| eig.vector(i).iter().map(|x| x * l.sqrt()).collect())
        .collect()
}

fn draw<R: Rng + ?Sized>(cols: &[CVector], m: usize, rng: &mut R) -> CVector {
    let r = sample_gaussian_vector(cols.len(), rng);
    let mut w = alloc::vec![C64::new(0.0, 0.0); m];
    for (c, ri) in cols.iter().zip(&r) {
        for (wi, ci) in w.iter_mut().zip(c) {
            *wi += ci * ri;
        }
    }
    w
}

/// Rescales `sol` to the least power meeting every constraint and assigns
/// common-rate shares; returns `None` if no scale works.
pub(crate) fn restore(ch: &ChannelSet, mut sol: BeamformingSolution, cfg: &SystemConfig) -> Option<BeamformingSolution> {
    let targets = Targets::from_config(cfg);
    let budget = LinkBudget::new(ch, &sol, cfg);
    let s = budget.min_scale(&targets)?;
    let shares = budget.shares_at(s, &targets)?;
    if !(s > 0.0) || !(s * budget.power <= cfg.power_cap_w) {
        return None;
    }
    sol.scale_power(s);
    sol.common_shares = shares;
    Some(sol)
}

fn cheaper(a: Option<BeamformingSolution>, b: Option<BeamformingSolution>) -> Option<BeamformingSolution> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.total_power() < a.total_power() { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Turns relaxation output into beamformers: principal components when
/// every beam covariance is rank one, otherwise the cheapest feasible
/// Gaussian-randomized candidate.
pub fn recover_beamformers<R: Rng + ?Sized>(
    ch: &ChannelSet,
    base: &BeamformingSolution,
    sdp: &TransmitSdp,
    out: &ConicSolution,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<(BeamformingSolution, TransmitOutcome), AoError> {
    let m = ch.tx_antennas();
    let value = |b: usize| out.psd_values[b].1.scaled(sdp.power_unit);
    let mut skeleton = base.clone();
    skeleton.s = sdp
        .sensing_block
        .map_or_else(|| CMatrix::zeros(m, m), |b| psd_projection(&value(b)));
    skeleton.w_c = alloc::vec![C64::new(0.0, 0.0); m];

    let beams: Vec<(Option<usize>, CMatrix)> = sdp
        .common_block
        .map(|b| (None, value(b)))
        .into_iter()
        .chain(sdp.private_blocks.iter().enumerate().map(|(l, &b)| (Some(l), value(b))))
        .collect();
    let mut principal = skeleton.clone();
    let mut worst_ratio = 0.0f64;
    for (slot, w) in &beams {
        let (v, ratio) = principal_component(w).map_err(|_| AoError::NoFeasibleRandomization)?;
        worst_ratio = worst_ratio.max(ratio);
        match slot {
            None => principal.w_c = v,
            Some(l) => principal.w[*l] = v,
        }
    }

    let mut best = restore(ch, principal, cfg);
    if sdp.sensing_block.is_some() {
        // same total covariance, leftover beam power carried by S
        let mut folded = skeleton.clone();
        let mut s = folded.s.clone();
        for (slot, w) in &beams {
            let v = match slot {
                Some(l) => {
                    let wf = w.mul_vec(&ch.f[*l]);
                    let g = w.quad_form(&ch.f[*l]);
                    if g > 0.0 { wf.iter().map(|x| x / g.sqrt()).collect() } else { alloc::vec![C64::new(0.0, 0.0); m] }
                }
                None => principal_component(w).map(|p| p.0).unwrap_or_else(|_| alloc::vec![C64::new(0.0, 0.0); m]),
            };
            s.add_scaled(w, 1.0);
            s.add_outer(&v, -1.0);
            match slot {
                None => folded.w_c = v,
                Some(l) => folded.w[*l] = v,
            }
        }
        folded.s = psd_projection(&s);
        best = cheaper(best, restore(ch, folded, cfg));
    }
    if worst_ratio <= 1e-6 {
        return best.map(|s| (s, TransmitOutcome::RankOne)).ok_or(AoError::NoFeasibleRandomization);
    }

    let factors: Vec<(Option<usize>, Vec<CVector>)> = beams.iter().map(|(s, w)| (*s, factor(w))).collect();
    for _ in 0..cfg.randomization_trials {
        let mut cand = skeleton.clone();
        for (slot, cols) in &factors {
            let w = draw(cols, m, rng);
            match slot {
                None => cand.w_c = w,
                Some(l) => cand.w[*l] = w,
            }
        }
        best = cheaper(best, restore(ch, cand, cfg));
    }
    best.map(|b| {
        (
            b,
            TransmitOutcome::Randomized {
                trials: cfg.randomization_trials,
                rank_ratio: worst_ratio,
            },
        )
    })
    .ok_or(AoError::NoFeasibleRandomization)
}

/// One transmit update around the state's incumbent. Solver failures and
/// unrecoverable relaxations keep the incumbent.
pub fn solve_transmit_subproblem<R: Rng + ?Sized>(
    ch: &ChannelSet,
    state: &AoState,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<(BeamformingSolution, TransmitOutcome, Option<SolveStatus>), AoError> {
    let unit = (state.objective / 4.0).max(1e-12);
    let sdp = build_transmit_sdp(ch, &state.solution, RateModel::Sca(&state.anchors), cfg, unit)?;
    let keep = || state.solution.clone();
    let out = match conic::solve(&sdp.problem, cfg.solver_tol, cfg.solver_max_iter) {
        Ok(o) => o,
        Err(e) => {
            log::warn!("transmit relaxation failed: {e}");
            return Ok((keep(), TransmitOutcome::Retained, None));
        }
    };
    if out.status != SolveStatus::Optimal {
        log::warn!(
            "transmit relaxation ended {:?} (violation {:e})",
            out.status,
            out.max_constraint_violation
        );
        return Ok((keep(), TransmitOutcome::Retained, Some(out.status)));
    }
    match recover_beamformers(ch, &state.solution, &sdp, &out, cfg, rng) {
        Ok((sol, outcome)) => {
            log::debug!(
                "relaxation bound {:.4e} W, recovered {:.4e} W ({})",
                out.objective_value * unit,
                sol.total_power(),
                outcome.label()
            );
            Ok((sol, outcome, Some(out.status)))
        }
        Err(AoError::NoFeasibleRandomization) => {
            log::warn!("no feasible candidate recovered; keeping the incumbent");
            Ok((keep(), TransmitOutcome::Retained, Some(out.status)))
        }
        Err(e) => Err(e),
    }
}
