//! Reflection-coefficient update: a small LP that widens the tags' SINR and
//! energy margins at fixed beams.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::ChannelSet;
use crate::conic::{self, ConicProblem, Sense, SolveStatus};
use crate::numerics::dot;
use crate::system::{covariance_rx, BeamformingSolution, SystemConfig};

use super::budget::{LinkBudget, Targets};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReflectionOutcome {
    /// LP solved; `step` is the fraction of the move kept after the exact
    /// feasibility check.
    Updated { tag_margin: f64, eh_margin: f64, step: f64 },
    /// LP failed or no move kept feasibility; coefficients unchanged.
    Retained,
}

impl ReflectionOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            ReflectionOutcome::Updated { .. } => "updated",
            ReflectionOutcome::Retained => "retained",
        }
    }
}

/// `Σ coeffs_i·α_i ≥ constant`.
struct AffineRow {
    coeffs: Vec<f64>,
    constant: f64,
}

/// Pushes `row` divided by `scale`, with `- slack` on the left when given.
fn push_row(
    p: &mut ConicProblem,
    name: alloc::string::String,
    alpha: &[usize],
    row: &AffineRow,
    scale: f64,
    slack: Option<usize>,
) {
    let scale = scale.abs().max(1e-300);
    let mut c = p.constraint(name, Sense::Ge, row.constant / scale);
    for (&v, &a) in alpha.iter().zip(&row.coeffs) {
        c.add_scalar(v, a / scale);
    }
    if let Some(t) = slack {
        c.add_scalar(t, -1.0);
    }
    p.push(c);
}

/// Solves the margin LP at fixed beams, receive filters and shares, then
/// moves `sol.alpha` toward its solution as far as exact constraints allow.
pub fn optimize_reflection_coefficients(
    ch: &ChannelSet,
    sol: &mut BeamformingSolution,
    cfg: &SystemConfig,
) -> ReflectionOutcome {
    let tags = ch.tags();
    if tags == 0 {
        return ReflectionOutcome::Retained;
    }
    let targets = Targets::from_config(cfg);
    let sigma2 = cfg.noise_power();
    let r = covariance_rx(sol);
    let eps = cfg.alpha_floor;

    let mut p = ConicProblem::new();
    let alpha: Vec<usize> = (0..tags)
        .map(|k| p.add_scalar(format!("alpha{k}"), Some(eps), Some(1.0 - eps)))
        .collect();
    let t1 = targets.tag.map(|_| p.add_scalar("t1", Some(0.0), None));
    let t2 = p.add_scalar("t2", Some(0.0), None);
    if let Some(t1) = t1 {
        p.set_objective_scalar(t1, -cfg.lambda1);
    }
    p.set_objective_scalar(t2, -cfg.lambda2);

    let incident: Vec<f64> = ch.g_f.iter().map(|g| r.quad_form(g)).collect();

    if let Some(g) = targets.sensing {
        for k in 0..tags {
            let u = &sol.u[k];
            let coeffs: Vec<f64> = (0..tags)
                .map(|i| {
                    let e = dot(u, &ch.g_b[i]).norm_sqr() * incident[i];
                    if i == k { e } else { -g * e }
                })
                .collect();
            let si = cfg.si_residual * r.quad_form(&ch.g_si.mul_vec(u));
            let need = g * (si + sigma2 * crate::numerics::norm_sqr(u));
            let row = AffineRow { coeffs, constant: need };
            push_row(&mut p, format!("sensing{k}"), &alpha, &row, need, None);
        }
    }
    if let Some(g) = targets.tag {
        let back: Vec<f64> = ch.h_tag.iter().map(|h| r.quad_form(h)).collect();
        let f0 = &ch.f0;
        let direct = cfg.sic_common * dot(f0, &sol.w_c).norm_sqr()
            + cfg.sic_private * sol.w.iter().map(|w| dot(f0, w).norm_sqr()).sum::<f64>()
            + cfg.sic_sensing * sol.s.quad_form(f0);
        let need = g * (direct + sigma2);
        for k in 0..tags {
            let coeffs = (0..tags).map(|i| if i == k { back[i] } else { -g * back[i] }).collect();
            let row = AffineRow { coeffs, constant: need };
            push_row(&mut p, format!("tag{k}"), &alpha, &row, need, t1);
        }
    }
    let th = targets.eh_input;
    for k in 0..tags {
        let mut coeffs = alloc::vec![0.0; tags];
        coeffs[k] = -incident[k];
        let row = AffineRow { coeffs, constant: th - incident[k] };
        push_row(&mut p, format!("eh{k}"), &alpha, &row, th, Some(t2));
    }

    if let Some(rp) = targets.private_rate {
        let budget = LinkBudget::new(ch, sol, cfg);
        let sum_shares: f64 = sol.common_shares.iter().sum();
        for l in 0..ch.users() {
            let leak: Vec<f64> = ch.h[l].iter().map(|h| r.quad_form(h)).collect();
            let current: f64 = leak.iter().zip(&sol.alpha).map(|(a, b)| a * b).sum();
            let share = sol.common_shares.get(l).copied().unwrap_or(0.0);
            // signal ≥ γ·(rest + Σ α_k leak_k + σ²)
            let mut protect = |name: alloc::string::String, link: super::budget::Link, gamma: f64| {
                if gamma > 0.0 {
                    let row = AffineRow {
                        coeffs: leak.iter().map(|x| -gamma * x).collect(),
                        constant: gamma * (link.interference - current + link.noise) - link.signal,
                    };
                    push_row(&mut p, name, &alpha, &row, link.signal, None);
                }
            };
            protect(format!("private{l}"), budget.private[l], 2f64.powf(rp - share) - 1.0);
            if targets.common {
                protect(format!("common{l}"), budget.common[l], 2f64.powf(sum_shares) - 1.0);
            }
        }
    }

    let out = match conic::solve(&p, cfg.solver_tol, cfg.solver_max_iter) {
        Ok(o) if o.status == SolveStatus::Optimal => o,
        Ok(o) => {
            log::debug!("reflection LP ended {:?}", o.status);
            return ReflectionOutcome::Retained;
        }
        Err(e) => {
            log::debug!("reflection LP failed: {e}");
            return ReflectionOutcome::Retained;
        }
    };
    let target: Vec<f64> = alpha
        .iter()
        .map(|&i| out.scalar_values[i].1.clamp(eps, 1.0 - eps))
        .collect();
    let old = sol.alpha.clone();
    let shares = sol.common_shares.clone();
    let mut step = 1.0;
    for _ in 0..40 {
        let mut trial = sol.clone();
        trial.alpha = old.iter().zip(&target).map(|(a, b)| a + step * (b - a)).collect();
        let b = LinkBudget::new(ch, &trial, cfg);
        if b.satisfied_with_shares(1.0, &targets, &shares) {
            sol.alpha = trial.alpha;
            return ReflectionOutcome::Updated {
                tag_margin: t1.map_or(0.0, |t| out.scalar_values[t].1),
                eh_margin: out.scalar_values[t2].1,
                step,
            };
        }
        step *= 0.5;
    }
    ReflectionOutcome::Retained
}
