//! Transmit, receive and composite beampatterns over angle.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::{steering_vector, ChannelSet};
use crate::numerics::{dot, norm_sqr};
use crate::system::{covariance_rx, BeamformingSolution, SystemConfig};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatternSweep {
    pub angles_deg: Vec<f64>,
    /// Expected transmit power toward each angle, `bᴴ R_x b`.
    pub p1: Vec<f64>,
    /// Receive sensitivity of the tag's filter, `|uᴴ b_N|²`.
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub tag_index: usize,
}

/// −90° to 90° in 0.5° steps.
pub fn default_grid() -> Vec<f64> {
    (0..=360).map(|i| -90.0 + 0.5 * i as f64).collect()
}

/// Patterns for tag `tag` on the default grid.
pub fn sweep(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig, tag: usize) -> PatternSweep {
    sweep_on(ch, sol, cfg, tag, default_grid())
}

/// Patterns on a caller-chosen grid. The steering vectors carry the BS-tag
/// path gain of `tag`, so `p1` at the tag's angle is its incident power.
pub fn sweep_on(
    ch: &ChannelSet,
    sol: &BeamformingSolution,
    _cfg: &SystemConfig,
    tag: usize,
    angles_deg: Vec<f64>,
) -> PatternSweep {
    let r = covariance_rx(sol);
    let (m, n) = (ch.tx_antennas(), ch.rx_antennas());
    let zeta = ch.g_f.get(tag).map_or(1.0, |g| norm_sqr(g));
    let u = sol.u.get(tag);
    let mut p1 = Vec::with_capacity(angles_deg.len());
    let mut p2 = Vec::with_capacity(angles_deg.len());
    for &deg in &angles_deg {
        let theta = deg.to_radians();
        let b = steering_vector(theta, m, zeta);
        p1.push(r.quad_form(&b).max(0.0));
        let rx = u.map_or(0.0, |u| dot(u, &steering_vector(theta, n, zeta)).norm_sqr());
        p2.push(rx);
    }
    let p3 = p1.iter().zip(&p2).map(|(a, b)| a * b).collect();
    PatternSweep {
        angles_deg,
        p1,
        p2,
        p3,
        tag_index: tag,
    }
}

impl PatternSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,p1,p2,p3,tag_index\n");
        for i in 0..self.angles_deg.len() {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                self.angles_deg[i], self.p1[i], self.p2[i], self.p3[i], self.tag_index
            );
        }
        out
    }

    /// Interior local maxima of `values` as grid indices; plateaus count once.
    pub fn local_maxima(values: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        let n = values.len();
        let mut i = 1;
        while i + 1 < n {
            if values[i] > values[i - 1] {
                let mut j = i;
                while j + 1 < n && values[j + 1] == values[i] {
                    j += 1;
                }
                if j + 1 < n && values[j + 1] < values[i] {
                    out.push(i);
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    }

    /// Whether `p1` peaks within `tol_deg` of `angle_deg`.
    pub fn p1_peaks_near(&self, angle_deg: f64, tol_deg: f64) -> bool {
        Self::local_maxima(&self.p1)
            .iter()
            .any(|&i| (self.angles_deg[i] - angle_deg).abs() <= tol_deg)
    }

    /// `p2` at the grid point nearest `angle_deg` over the peak of `p2`, in dB.
    pub fn p2_null_to_peak_db(&self, angle_deg: f64) -> f64 {
        let peak = self.p2.iter().copied().fold(0.0, f64::max);
        let i = self
            .angles_deg
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - angle_deg).abs().total_cmp(&(b.1 - angle_deg).abs()))
            .map_or(0, |(i, _)| i);
        10.0 * (self.p2[i].max(1e-300) / peak.max(1e-300)).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_channel_set, place_nodes};
    use crate::numerics::{norm, sample_gaussian_vector, CMatrix, C64};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (ChannelSet, BeamformingSolution, SystemConfig) {
        let cfg = SystemConfig::default();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let topo = place_nodes(&cfg, &mut r);
        let ch = build_channel_set(&topo, &cfg, &mut r).unwrap();
        let mut sol = BeamformingSolution::zeros(8, 8, cfg.users, cfg.tags);
        sol.w_c = sample_gaussian_vector(8, &mut r);
        let a = CMatrix::from_fn(8, 2, |_, _| sample_gaussian_vector(1, &mut r)[0]);
        sol.s = a.matmul(&a.adjoint());
        for u in &mut sol.u {
            let x = sample_gaussian_vector(8, &mut r);
            *u = x.iter().map(|v| v / norm(&x)).collect();
        }
        (ch, sol, cfg)
    }

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 361);
        assert_eq!(g[0], -90.0);
        assert_eq!(g[360], 90.0);
    }

    #[test]
    fn matched_filter_peaks_at_its_angle() {
        let (ch, mut sol, cfg) = setup(1);
        let theta0: f64 = 23.5;
        let b = steering_vector(theta0.to_radians(), 8, 1.0);
        sol.u[0] = b.iter().map(|x| x / norm(&b)).collect();
        let p = sweep(&ch, &sol, &cfg, 0);
        let best = p.p2.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(p.angles_deg[best], theta0);
        assert!(p.p2_null_to_peak_db(theta0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_covariance_is_flat() {
        let (ch, mut sol, cfg) = setup(2);
        sol.w_c = std::vec![C64::new(0.0, 0.0); 8];
        sol.s = CMatrix::identity(8).scaled(0.3);
        let p = sweep(&ch, &sol, &cfg, 1);
        let zeta = norm_sqr(&ch.g_f[1]);
        for v in &p.p1 {
            assert!((v - 0.3 * zeta).abs() <= 1e-12 * zeta);
        }
    }

    #[test]
    fn p1_at_tag_angle_is_incident_power() {
        let (ch, sol, cfg) = setup(3);
        for k in 0..ch.tags() {
            let deg = ch.topology.tag_angles[k].to_degrees();
            let p = sweep_on(&ch, &sol, &cfg, k, std::vec![deg]);
            let inc = crate::system::incident_power(&ch, &sol, k);
            assert!((p.p1[0] - inc).abs() <= 1e-10 * inc);
        }
    }

    #[test]
    fn local_maxima_cases() {
        assert_eq!(PatternSweep::local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0]), std::vec![1, 3]);
        assert!(PatternSweep::local_maxima(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn csv_rows() {
        let (ch, sol, cfg) = setup(4);
        let csv = sweep(&ch, &sol, &cfg, 0).to_csv();
        assert_eq!(csv.lines().count(), 362);
        assert!(csv.starts_with("angle_deg,p1,p2,p3,tag_index"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn patterns_nonnegative_and_factored(seed in 0u64..500) {
            let (ch, sol, cfg) = setup(seed);
            let p = sweep(&ch, &sol, &cfg, (seed % 2) as usize);
            for i in 0..p.angles_deg.len() {
                prop_assert!(p.p1[i] >= 0.0 && p.p2[i] >= 0.0 && p.p3[i] >= 0.0);
                prop_assert!((p.p3[i] - p.p1[i] * p.p2[i]).abs() <= 1e-10 * p.p3[i].abs().max(1e-300));
            }
        }

        #[test]
        fn filter_phase_does_not_matter(seed in 0u64..500, phi in 0.0f64..6.3) {
            let (ch, mut sol, cfg) = setup(seed);
            let a = sweep(&ch, &sol, &cfg, 0);
            let rot = C64::from_polar(1.0, phi);
            sol.u[0] = sol.u[0].iter().map(|x| x * rot).collect();
            let b = sweep(&ch, &sol, &cfg, 0);
            for (x, y) in a.p2.iter().zip(&b.p2) {
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
            }
        }
    }
}
