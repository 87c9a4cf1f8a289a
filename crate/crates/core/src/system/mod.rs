//! SINR, rate and energy-harvesting evaluation at a fixed beamforming
//! solution. All powers are in watts.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::benchmarks::MultipleAccess;
use crate::channel::ChannelSet;
use crate::numerics::{dot, norm, CMatrix, CVector, C64};

mod config;

pub use config::{
    db_to_linear, linear_to_db, watts_to_dbm, EhModel, Fading, Geometry, PathLoss, SystemConfig,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("negative SINR {0}")]
    NegativeSinr(f64),
    #[error("users are not sorted by descending channel gain (position {0})")]
    UnsortedUsers(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
}

/// Transmit beamformers, sensing covariance, receive filters, reflection
/// coefficients and common-rate shares.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingSolution {
    pub w_c: CVector,
    pub w: Vec<CVector>,
    pub s: CMatrix,
    pub u: Vec<CVector>,
    pub alpha: Vec<f64>,
    pub common_shares: Vec<f64>,
}

impl BeamformingSolution {
    /// All-zero transmit side, first-axis receive filters, α = 1/2.
    pub fn zeros(m: usize, n: usize, users: usize, tags: usize) -> Self {
        let mut e1 = alloc::vec![C64::new(0.0, 0.0); n];
        if n > 0 {
            e1[0] = C64::new(1.0, 0.0);
        }
        BeamformingSolution {
            w_c: alloc::vec![C64::new(0.0, 0.0); m],
            w: alloc::vec![alloc::vec![C64::new(0.0, 0.0); m]; users],
            s: CMatrix::zeros(m, m),
            u: alloc::vec![e1; tags],
            alpha: alloc::vec![0.5; tags],
            common_shares: alloc::vec![0.0; users],
        }
    }

    pub fn total_power(&self) -> f64 {
        covariance_rx(self).real_trace()
    }

    /// Uniformly scales every transmit component's power by `factor`.
    pub fn scale_power(&mut self, factor: f64) {
        let a = factor.sqrt();
        self.w_c.iter_mut().for_each(|x| *x *= a);
        for w in &mut self.w {
            w.iter_mut().for_each(|x| *x *= a);
        }
        self.s = self.s.scaled(factor);
    }

    pub fn validate(&self, alpha_floor: f64) -> Result<(), SystemError> {
        for (k, u) in self.u.iter().enumerate() {
            if (norm(u) - 1.0).abs() > 1e-9 {
                return Err(SystemError::InvalidSolution(format!("u[{k}] is not unit norm")));
            }
        }
        for (k, &a) in self.alpha.iter().enumerate() {
            if !(a >= alpha_floor && a <= 1.0 - alpha_floor) {
                return Err(SystemError::InvalidSolution(format!("alpha[{k}] = {a}")));
            }
        }
        if self.common_shares.iter().any(|&c| !(c >= 0.0)) {
            return Err(SystemError::InvalidSolution("negative common share".into()));
        }
        let ev = crate::numerics::hermitian_eigenvalues(&self.s)
            .map_err(|e| SystemError::InvalidSolution(format!("{e}")))?;
        let scale = self.s.max_abs().max(1e-300);
        if ev.last().is_some_and(|&l| l < -1e-9 * scale) {
            return Err(SystemError::InvalidSolution("S is not PSD".into()));
        }
        Ok(())
    }
}

pub fn covariance_rx(sol: &BeamformingSolution) -> CMatrix {
    let mut r = sol.s.hermitian_part();
    r.add_outer(&sol.w_c, 1.0);
    for w in &sol.w {
        r.add_outer(w, 1.0);
    }
    r
}

fn gain(a: &[C64], w: &[C64]) -> f64 {
    dot(a, w).norm_sqr()
}

fn private_gains(a: &[C64], sol: &BeamformingSolution) -> Vec<f64> {
    sol.w.iter().map(|w| gain(a, w)).collect()
}

/// Tag-scattered power reaching user `l`: `Σ_k α_k h_lkᴴ R_x h_lk`.
fn backscatter_at_user(ch: &ChannelSet, sol: &BeamformingSolution, r: &CMatrix, l: usize) -> f64 {
    ch.h[l]
        .iter()
        .zip(&sol.alpha)
        .map(|(h, &a)| a * r.quad_form(h))
        .sum()
}

pub fn sinr_common(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, l: usize) -> f64 {
    let r = covariance_rx(sol);
    let f = &ch.f[l];
    let num = gain(f, &sol.w_c);
    let den = private_gains(f, sol).iter().sum::<f64>()
        + cfg.sic_sensing * sol.s.quad_form(f)
        + backscatter_at_user(ch, sol, &r, l)
        + cfg.noise_power();
    num / den
}

pub fn sinr_private(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, l: usize) -> f64 {
    let r = covariance_rx(sol);
    let f = &ch.f[l];
    let g = private_gains(f, sol);
    let others: f64 = g.iter().enumerate().filter(|&(j, _)| j != l).map(|(_, x)| x).sum();
    let den = cfg.sic_common * gain(f, &sol.w_c)
        + others
        + cfg.sic_sensing * sol.s.quad_form(f)
        + backscatter_at_user(ch, sol, &r, l)
        + cfg.noise_power();
    g[l] / den
}

/// Private-stream SINR under power-domain NOMA. User `l` cancels users
/// `0..l` with residual `δ_p` and treats `l+1..` as interference.
pub fn noma_sinr(
    ch: &ChannelSet,
    sol: &BeamformingSolution,
    cfg: &SystemConfig,
    l: usize,
) -> Result<f64, SystemError> {
    if let Some(i) = (1..ch.users()).find(|&i| {
        crate::numerics::norm_sqr(&ch.f[i - 1]) < crate::numerics::norm_sqr(&ch.f[i])
    }) {
        return Err(SystemError::UnsortedUsers(i));
    }
    let r = covariance_rx(sol);
    let f = &ch.f[l];
    let g = private_gains(f, sol);
    let decoded: f64 = g[..l].iter().sum();
    let pending: f64 = g[l + 1..].iter().sum();
    let den = cfg.sic_private * decoded
        + pending
        + gain(f, &sol.w_c)
        + cfg.sic_sensing * sol.s.quad_form(f)
        + backscatter_at_user(ch, sol, &r, l)
        + cfg.noise_power();
    Ok(g[l] / den)
}

pub fn sinr_tag(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, k: usize) -> f64 {
    let r = covariance_rx(sol);
    let num = sol.alpha[k] * r.quad_form(&ch.h_tag[k]);
    let f0 = &ch.f0;
    let others: f64 = (0..ch.tags())
        .filter(|&i| i != k)
        .map(|i| sol.alpha[i] * r.quad_form(&ch.h_tag[i]))
        .sum();
    let den = cfg.sic_common * gain(f0, &sol.w_c)
        + cfg.sic_private * private_gains(f0, sol).iter().sum::<f64>()
        + cfg.sic_sensing * sol.s.quad_form(f0)
        + others
        + cfg.noise_power();
    num / den
}

/// Echo power of tag `i` through receive filter `u`:
/// `α_i |uᴴ g_b,i|² g_f,iᴴ R_x g_f,i`.
pub(crate) fn echo_power(ch: &ChannelSet, r: &CMatrix, alpha: f64, u: &[C64], i: usize) -> f64 {
    alpha * gain(u, &ch.g_b[i]) * r.quad_form(&ch.g_f[i])
}

/// Sensing SINR of tag `k` with receive filter `u` and covariance `r`.
pub fn sensing_sinr_with(
    ch: &ChannelSet,
    r: &CMatrix,
    alpha: &[f64],
    cfg: &SystemConfig,
    u: &[C64],
    k: usize,
) -> f64 {
    let num = echo_power(ch, r, alpha[k], u, k);
    let clutter: f64 = (0..ch.tags())
        .filter(|&i| i != k)
        .map(|i| echo_power(ch, r, alpha[i], u, i))
        .sum();
    let si = cfg.si_residual * r.quad_form(&ch.g_si.mul_vec(u));
    num / (clutter + si + cfg.noise_power() * crate::numerics::norm_sqr(u))
}

pub fn sinr_sensing(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, k: usize) -> f64 {
    sensing_sinr_with(ch, &covariance_rx(sol), &sol.alpha, cfg, &sol.u[k], k)
}

pub fn rate(sinr: f64) -> Result<f64, SystemError> {
    if sinr < 0.0 || sinr.is_nan() {
        return Err(SystemError::NegativeSinr(sinr));
    }
    Ok((1.0 + sinr).log2())
}

/// RF power incident on tag `k`: `g_f,kᴴ R_x g_f,k`.
pub fn incident_power(ch: &ChannelSet, sol: &BeamformingSolution, k: usize) -> f64 {
    covariance_rx(sol).quad_form(&ch.g_f[k])
}

pub fn harvested_power(p_in: f64, alpha: f64, cfg: &SystemConfig) -> f64 {
    cfg.eh_model.harvest((1.0 - alpha) * p_in)
}

/// Whether tag `k` stays active, with margin `(1-α)p_in - Φ⁻¹(p_b)` in W.
pub fn eh_feasible(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, k: usize) -> (bool, f64) {
    let margin = (1.0 - sol.alpha[k]) * incident_power(ch, sol, k) - cfg.eh_input_threshold();
    (margin >= 0.0, margin)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SinrReport {
    pub gamma_c: Vec<f64>,
    pub gamma_p: Vec<f64>,
    pub gamma_t: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub r_c: f64,
    pub r_p_total: Vec<f64>,
    pub r_t: Vec<f64>,
    pub r_s: Vec<f64>,
    pub p_in: Vec<f64>,
    pub p_harv: Vec<f64>,
    pub total_tx_power: f64,
}

impl SinrReport {
    /// Flat `(column, value)` pairs in a fixed order.
    pub fn fields(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let mut push = |name: &str, v: &[f64]| {
            for (i, x) in v.iter().enumerate() {
                out.push((format!("{name}_{i}"), *x));
            }
        };
        push("gamma_c", &self.gamma_c);
        push("gamma_p", &self.gamma_p);
        push("gamma_t", &self.gamma_t);
        push("upsilon", &self.upsilon);
        push("r_p_total", &self.r_p_total);
        push("r_t", &self.r_t);
        push("r_s", &self.r_s);
        push("p_in", &self.p_in);
        push("p_harv", &self.p_harv);
        out.push(("r_c".into(), self.r_c));
        out.push(("total_tx_power".into(), self.total_tx_power));
        out
    }

    pub fn mean_user_rate(&self) -> f64 {
        if self.r_p_total.is_empty() {
            0.0
        } else {
            self.r_p_total.iter().sum::<f64>() / self.r_p_total.len() as f64
        }
    }
}

fn rate_or_zero(s: f64) -> f64 {
    rate(s.max(0.0)).unwrap_or(0.0)
}

pub fn evaluate(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig) -> SinrReport {
    let users = ch.users();
    let tags = ch.tags();
    let noma = cfg.scheme.toggles().multiple_access == MultipleAccess::Noma;
    let gamma_c: Vec<f64> = (0..users).map(|l| sinr_common(ch, sol, cfg, l)).collect();
    let gamma_p: Vec<f64> = (0..users)
        .map(|l| {
            if noma {
                noma_sinr(ch, sol, cfg, l).unwrap_or(0.0)
            } else {
                sinr_private(ch, sol, cfg, l)
            }
        })
        .collect();
    let gamma_t: Vec<f64> = (0..tags).map(|k| sinr_tag(ch, sol, cfg, k)).collect();
    let upsilon: Vec<f64> = (0..tags).map(|k| sinr_sensing(ch, sol, cfg, k)).collect();
    let r_c = gamma_c
        .iter()
        .map(|&g| rate_or_zero(g))
        .fold(f64::INFINITY, f64::min);
    let r_c = if r_c.is_finite() { r_c } else { 0.0 };
    let r_p_total = gamma_p
        .iter()
        .enumerate()
        .map(|(l, &g)| sol.common_shares.get(l).copied().unwrap_or(0.0) + rate_or_zero(g))
        .collect();
    let p_in: Vec<f64> = (0..tags).map(|k| incident_power(ch, sol, k)).collect();
    let p_harv = p_in
        .iter()
        .zip(&sol.alpha)
        .map(|(&p, &a)| harvested_power(p, a, cfg))
        .collect();
    SinrReport {
        r_c,
        r_p_total,
        r_t: gamma_t.iter().map(|&g| rate_or_zero(g)).collect(),
        r_s: upsilon.iter().map(|&g| rate_or_zero(g)).collect(),
        gamma_c,
        gamma_p,
        gamma_t,
        upsilon,
        p_in,
        p_harv,
        total_tx_power: sol.total_power(),
    }
}
