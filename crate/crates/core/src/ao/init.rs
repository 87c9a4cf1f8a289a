use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::conic::{self, SolveStatus};
use crate::numerics::{norm, norm_sqr, CMatrix, C64};
use crate::system::{BeamformingSolution, SystemConfig};

use super::budget::Targets;
use super::receive::mmse_filter;
use super::transmit::{build_transmit_sdp, recover_beamformers, restore, RateModel};
use super::AoError;

/// Tags share one reader, so summing the tag SINR constraints gives
/// `X(1 - Γ(K-1)) ≥ Γ·K·σ²` for the total backscattered power `X`; no
/// transmit strategy helps once `Γ(K-1) ≥ 1`.
pub fn structural_check(cfg: &SystemConfig) -> Result<(), AoError> {
    let Some(g) = Targets::from_config(cfg).tag else {
        return Ok(());
    };
    if cfg.tags >= 2 && g * (cfg.tags - 1) as f64 >= 1.0 {
        return Err(AoError::StructurallyInfeasible { target: g, tags: cfg.tags });
    }
    Ok(())
}

const ALPHA_TRIES: [f64; 5] = [0.5, 0.3, 0.7, 0.15, 0.85];
const ELASTIC_ROUNDS: usize = 30;

/// Private-SINR relaxation with a shared, penalized slack on the sensing
/// rows. Returns the slack, which is zero when the filters in `base` admit
/// a feasible covariance.
fn elastic_relaxation(
    ch: &ChannelSet,
    base: &BeamformingSolution,
    cfg: &SystemConfig,
    probe: f64,
) -> Option<(super::TransmitSdp, conic::ConicSolution, f64)> {
    let mut sdp = build_transmit_sdp(ch, base, RateModel::PrivateSinr, cfg, probe).ok()?;
    let p = &mut sdp.problem;
    let elastic = p.constraints.iter().any(|c| c.name.starts_with("sensing"));
    let slack = elastic.then(|| {
        let v = p.add_scalar("sensing_slack", Some(0.0), None);
        p.set_objective_scalar(v, cfg.power_cap_w / probe);
        for c in p.constraints.iter_mut().filter(|c| c.name.starts_with("sensing")) {
            c.add_scalar(v, 1.0);
        }
        v
    });
    let out = match conic::solve(p, cfg.solver_tol, cfg.solver_max_iter) {
        Ok(o) if o.status == SolveStatus::Optimal => o,
        Ok(o) => {
            log::debug!("elastic start relaxation ended {:?}", o.status);
            return None;
        }
        Err(e) => {
            log::debug!("elastic start relaxation failed: {e}");
            return None;
        }
    };
    let v = slack.map_or(0.0, |i| out.scalar_values[i].1.max(0.0));
    Some((sdp, out, v))
}

fn with_filters(ch: &ChannelSet, cfg: &SystemConfig, alpha: f64, probe_power: f64) -> Result<BeamformingSolution, AoError> {
    let (m, n) = (ch.tx_antennas(), ch.rx_antennas());
    let mut sol = BeamformingSolution::zeros(m, n, ch.users(), ch.tags());
    sol.alpha = alloc::vec![alpha.clamp(cfg.alpha_floor, 1.0 - cfg.alpha_floor); ch.tags()];
    let iso = CMatrix::identity(m).scaled(probe_power / m as f64);
    for k in 0..ch.tags() {
        sol.u[k] = mmse_filter(ch, &iso, &sol.alpha, cfg, k)?;
    }
    Ok(sol)
}

/// Matched-filter beams toward users and tags, each with unit power.
fn matched_directions(ch: &ChannelSet, cfg: &SystemConfig, sol: &mut BeamformingSolution) {
    let t = cfg.scheme.toggles();
    let m = ch.tx_antennas();
    let unit = |v: &[C64]| -> Vec<C64> {
        let n = norm(v);
        if n > 0.0 { v.iter().map(|x| x / n).collect() } else { v.to_vec() }
    };
    if t.has_private_streams() {
        for (w, f) in sol.w.iter_mut().zip(&ch.f) {
            *w = unit(f);
        }
    }
    if t.has_common_stream && ch.users() > 0 {
        let mut sum = alloc::vec![C64::new(0.0, 0.0); m];
        for f in &ch.f {
            let fu = unit(f);
            sum.iter_mut().zip(&fu).for_each(|(s, x)| *s += x);
        }
        sol.w_c = unit(&sum);
    }
    if t.has_sensing_covariance {
        let mut s = CMatrix::zeros(m, m);
        for g in &ch.g_f {
            s.add_outer(g, 1.0 / norm_sqr(g).max(1e-300));
        }
        let tr = s.real_trace();
        sol.s = if tr > 0.0 { s.scaled(1.0 / tr) } else { CMatrix::identity(m).scaled(1.0 / m as f64) };
    }
}

/// Feasible starting point: the cheapest of matched-filter directions with
/// the least uniform power and, for each of a few reflection coefficients,
/// a private-SINR relaxation whose sensing rows are made elastic and driven
/// to zero slack by alternating with the receive filters.
pub fn initialize_feasible<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<BeamformingSolution, AoError> {
    structural_check(cfg)?;
    let th = cfg.eh_input_threshold();
    let min_gain = ch.g_f.iter().map(|g| norm_sqr(g)).fold(f64::INFINITY, f64::min);
    let probe = if min_gain.is_finite() && min_gain > 0.0 { 2.0 * th / min_gain } else { 1.0 };

    let mut mf = with_filters(ch, cfg, 0.5, probe)?;
    matched_directions(ch, cfg, &mut mf);
    let mut best = restore(ch, mf.clone(), cfg);
    if let Some(sol) = &best {
        log::debug!("matched-filter start at {:.3e} W", sol.total_power());
    }

    for &alpha in &ALPHA_TRIES {
        let mut base = with_filters(ch, cfg, alpha, probe)?;
        let m = ch.tx_antennas();
        let mut r_mf = crate::system::covariance_rx(&mf);
        r_mf = r_mf.scaled(probe / r_mf.real_trace().max(1e-300));
        for k in 0..ch.tags() {
            base.u[k] = mmse_filter(ch, &r_mf, &base.alpha, cfg, k)?;
        }
        for round in 0..ELASTIC_ROUNDS {
            let Some((sdp, out, slack)) = elastic_relaxation(ch, &base, cfg, probe) else {
                break;
            };
            if slack <= 1e-9 {
                if let Ok((sol, _)) = recover_beamformers(ch, &base, &sdp, &out, cfg, rng) {
                    log::debug!("relaxation start at alpha {alpha} after {round} rounds, {:.3e} W", sol.total_power());
                    if best.as_ref().map_or(true, |b| sol.total_power() < b.total_power()) {
                        best = Some(sol);
                    }
                    break;
                }
            }
            let mut r = CMatrix::zeros(m, m);
            for (_, x) in &out.psd_values {
                r.add_scaled(x, probe);
            }
            let mut moved = 0.0f64;
            for k in 0..ch.tags() {
                let u = mmse_filter(ch, &r, &base.alpha, cfg, k)?;
                moved = moved.max(1.0 - crate::numerics::dot(&u, &base.u[k]).norm());
                base.u[k] = u;
            }
            log::trace!("alpha {alpha} round {round}: sensing slack {slack:.3e}, filter move {moved:.1e}");
            if slack > 1e-9 && moved < 1e-10 {
                break;
            }
        }
    }
    best.ok_or(AoError::InfeasibleAtCap { cap_w: cfg.power_cap_w })
}
