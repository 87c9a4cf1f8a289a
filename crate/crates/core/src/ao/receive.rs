use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::ChannelSet;
use crate::numerics::{norm, Cholesky, CMatrix, CVector};
use crate::system::{covariance_rx, sensing_sinr_with, BeamformingSolution, SystemConfig};

use super::AoError;

/// Interference-plus-noise matrix seen by tag `k`'s receive filter.
fn interference_matrix(ch: &ChannelSet, r: &CMatrix, alpha: &[f64], cfg: &SystemConfig, k: usize) -> CMatrix {
    let n = ch.rx_antennas();
    let mut q = CMatrix::identity(n).scaled(cfg.noise_power());
    for i in (0..ch.tags()).filter(|&i| i != k) {
        q.add_outer(&ch.g_b[i], alpha[i] * r.quad_form(&ch.g_f[i]));
    }
    if cfg.si_residual > 0.0 {
        let si = ch.g_si.adjoint().matmul(r).matmul(&ch.g_si);
        q.add_scaled(&si, cfg.si_residual);
    }
    q.hermitian_part()
}

/// Unit-norm maximizer of tag `k`'s sensing SINR, `Q⁻¹g_b / ‖Q⁻¹g_b‖`.
///
/// The echo of tag `k` always arrives along `g_b,k`, so the generalized
/// Rayleigh quotient has a rank-one numerator and this is its exact maximizer.
pub fn mmse_filter(
    ch: &ChannelSet,
    r: &CMatrix,
    alpha: &[f64],
    cfg: &SystemConfig,
    k: usize,
) -> Result<CVector, AoError> {
    let q = interference_matrix(ch, r, alpha, cfg, k);
    let floor = 1e-14 * q.real_trace() / q.rows() as f64;
    let chol = Cholesky::factor(&q, floor).map_err(|_| AoError::SingularQ(k))?;
    let x = chol.solve_vec(&ch.g_b[k]);
    let nx = norm(&x);
    if !(nx > 0.0) || !nx.is_finite() {
        return Err(AoError::SingularQ(k));
    }
    Ok(x.iter().map(|v| v / nx).collect())
}

/// Replaces every receive filter with its MMSE solution unless that would
/// lower the tag's sensing SINR by more than rounding.
pub fn optimize_receive_beamformers(
    ch: &ChannelSet,
    sol: &mut BeamformingSolution,
    cfg: &SystemConfig,
) -> Result<(), AoError> {
    let r = covariance_rx(sol);
    let fresh: Vec<CVector> = (0..ch.tags())
        .map(|k| mmse_filter(ch, &r, &sol.alpha, cfg, k))
        .collect::<Result<_, _>>()?;
    for (k, u) in fresh.into_iter().enumerate() {
        let old = sensing_sinr_with(ch, &r, &sol.alpha, cfg, &sol.u[k], k);
        let new = sensing_sinr_with(ch, &r, &sol.alpha, cfg, &u, k);
        if new >= old * (1.0 - 1e-12) {
            sol.u[k] = u;
        }
    }
    Ok(())
}
