//! Per-link signal and interference powers of a fixed set of beam
//! directions. Every SINR of the model has the form `s·a / (s·b + σ²)` under
//! a uniform power scale `s`, which makes the smallest feasible scale cheap
//! to find.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::benchmarks::MultipleAccess;
use crate::channel::ChannelSet;
use crate::numerics::{dot, norm_sqr, C64};
use crate::system::{BeamformingSolution, SystemConfig};

/// Power of one probe direction split by signal component.
#[derive(Clone, Debug)]
struct Gains {
    sensing: f64,
    common: f64,
    private: Vec<f64>,
}

impl Gains {
    fn of(a: &[C64], sol: &BeamformingSolution) -> Self {
        Gains {
            sensing: sol.s.quad_form(a),
            common: dot(a, &sol.w_c).norm_sqr(),
            private: sol.w.iter().map(|w| dot(a, w).norm_sqr()).collect(),
        }
    }

    fn total(&self) -> f64 {
        self.sensing + self.common + self.private.iter().sum::<f64>()
    }
}

/// Signal and interference (noise excluded) at unit scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub signal: f64,
    pub interference: f64,
    pub noise: f64,
}

impl Link {
    pub fn sinr(&self, scale: f64) -> f64 {
        scale * self.signal / (scale * self.interference + self.noise)
    }

    /// Smallest scale with `sinr ≥ target`, `None` if none exists.
    fn min_scale(&self, target: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        let margin = self.signal - target * self.interference;
        if margin <= 0.0 {
            return None;
        }
        Some(target * self.noise / margin)
    }
}

/// Constraint thresholds active under a scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Targets {
    pub sensing: Option<f64>,
    pub tag: Option<f64>,
    pub eh_input: f64,
    pub private_rate: Option<f64>,
    pub common: bool,
}

impl Targets {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        let t = cfg.scheme.toggles();
        Targets {
            sensing: t.sensing_constraints.then(|| cfg.sensing_sinr_min()),
            tag: t.tag_rate_constraints.then(|| cfg.tag_sinr_min()),
            eh_input: cfg.eh_input_threshold(),
            private_rate: t.has_private_streams().then_some(cfg.private_rate_min),
            common: t.has_common_stream,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinkBudget {
    pub sensing: Vec<Link>,
    pub tag: Vec<Link>,
    /// Post-split power `(1-α_k)p_in` at unit scale.
    pub eh: Vec<f64>,
    pub common: Vec<Link>,
    pub private: Vec<Link>,
    pub power: f64,
}

fn log2p1(x: f64) -> f64 {
    (1.0 + x).log2()
}

impl LinkBudget {
    pub fn new(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig) -> Self {
        let sigma2 = cfg.noise_power();
        let (users, tags) = (ch.users(), ch.tags());
        let alpha = &sol.alpha;
        let incident: Vec<f64> = ch.g_f.iter().map(|g| Gains::of(g, sol).total()).collect();

        let sensing = (0..tags)
            .map(|k| {
                let u = &sol.u[k];
                let echo = |i: usize| alpha[i] * dot(u, &ch.g_b[i]).norm_sqr() * incident[i];
                let clutter: f64 = (0..tags).filter(|&i| i != k).map(echo).sum();
                let si = Gains::of(&ch.g_si.mul_vec(u), sol).total();
                Link {
                    signal: echo(k),
                    interference: clutter + cfg.si_residual * si,
                    noise: sigma2 * norm_sqr(u),
                }
            })
            .collect();

        let backscatter: Vec<f64> = (0..tags)
            .map(|k| alpha[k] * Gains::of(&ch.h_tag[k], sol).total())
            .collect();
        let direct = Gains::of(&ch.f0, sol);
        let residual = cfg.sic_common * direct.common
            + cfg.sic_private * direct.private.iter().sum::<f64>()
            + cfg.sic_sensing * direct.sensing;
        let total_backscatter: f64 = backscatter.iter().sum();
        let tag = (0..tags)
            .map(|k| Link {
                signal: backscatter[k],
                interference: residual + total_backscatter - backscatter[k],
                noise: sigma2,
            })
            .collect();

        let eh = (0..tags).map(|k| (1.0 - alpha[k]) * incident[k]).collect();

        let noma = cfg.scheme.toggles().multiple_access == MultipleAccess::Noma;
        let mut common = Vec::with_capacity(users);
        let mut private = Vec::with_capacity(users);
        for l in 0..users {
            let g = Gains::of(&ch.f[l], sol);
            let leak: f64 = (0..tags)
                .map(|k| alpha[k] * Gains::of(&ch.h[l][k], sol).total())
                .sum();
            let base = cfg.sic_sensing * g.sensing + leak;
            let all_private: f64 = g.private.iter().sum();
            common.push(Link {
                signal: g.common,
                interference: all_private + base,
                noise: sigma2,
            });
            let interference = if noma {
                cfg.sic_private * g.private[..l].iter().sum::<f64>()
                    + g.private[l + 1..].iter().sum::<f64>()
                    + g.common
                    + base
            } else {
                cfg.sic_common * g.common + all_private - g.private[l] + base
            };
            private.push(Link {
                signal: g.private[l],
                interference,
                noise: sigma2,
            });
        }

        LinkBudget {
            sensing,
            tag,
            eh,
            common,
            private,
            power: sol.total_power(),
        }
    }

    /// Common-rate shares at `scale`: each user's shortfall below the
    /// private-rate target, with leftover common capacity split evenly.
    /// `None` when the common stream cannot carry the shortfalls.
    pub fn shares_at(&self, scale: f64, t: &Targets) -> Option<Vec<f64>> {
        let users = self.private.len();
        let Some(rp) = t.private_rate else {
            return Some(alloc::vec![0.0; users]);
        };
        let need: Vec<f64> = self
            .private
            .iter()
            .map(|p| (rp - log2p1(p.sinr(scale))).max(0.0))
            .collect();
        if !t.common {
            return need.iter().all(|&n| n == 0.0).then(|| alloc::vec![0.0; users]);
        }
        let cap = self
            .common
            .iter()
            .map(|c| log2p1(c.sinr(scale)))
            .fold(f64::INFINITY, f64::min);
        let total: f64 = need.iter().sum();
        if total > cap {
            return None;
        }
        let spare = (cap - total) * (1.0 - 1e-9) / users.max(1) as f64;
        Some(need.into_iter().map(|n| n + spare).collect())
    }

    /// All non-rate constraints hold at `scale`.
    fn links_ok(&self, scale: f64, t: &Targets) -> bool {
        let ok = |links: &[Link], target: Option<f64>| {
            target.map_or(true, |g| links.iter().all(|l| l.sinr(scale) >= g))
        };
        ok(&self.sensing, t.sensing)
            && ok(&self.tag, t.tag)
            && self.eh.iter().all(|&p| scale * p >= t.eh_input)
    }

    /// Whether every constraint holds at `scale` with the given shares.
    pub fn satisfied_with_shares(&self, scale: f64, t: &Targets, shares: &[f64]) -> bool {
        if !self.links_ok(scale, t) {
            return false;
        }
        if let Some(rp) = t.private_rate {
            for (p, c) in self.private.iter().zip(shares) {
                if c + log2p1(p.sinr(scale)) < rp {
                    return false;
                }
            }
            if t.common {
                let sum: f64 = shares.iter().sum();
                if self.common.iter().any(|c| log2p1(c.sinr(scale)) < sum) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest uniform scale meeting every constraint, slightly inflated so
    /// the result satisfies them strictly.
    pub fn min_scale(&self, t: &Targets) -> Option<f64> {
        let mut lo = 0.0f64;
        for &p in &self.eh {
            if p <= 0.0 {
                return None;
            }
            lo = lo.max(t.eh_input / p);
        }
        let mut bound = |x: Option<f64>| -> bool {
            match x {
                Some(v) => {
                    lo = lo.max(v);
                    true
                }
                None => false,
            }
        };
        if let Some(g) = t.sensing {
            if !self.sensing.iter().all(|l| bound(l.min_scale(g))) {
                return None;
            }
        }
        if let Some(g) = t.tag {
            if !self.tag.iter().all(|l| bound(l.min_scale(g))) {
                return None;
            }
        }
        if t.private_rate.is_some() && !t.common {
            let g = 2f64.powf(t.private_rate.unwrap_or(0.0)) - 1.0;
            if !self.private.iter().all(|l| bound(l.min_scale(g))) {
                return None;
            }
        }
        let lo = lo * (1.0 + 1e-9);
        if !(lo > 0.0) || !lo.is_finite() {
            return if lo == 0.0 && self.shares_at(0.0, t).is_some() { Some(0.0) } else { None };
        }
        if self.shares_at(lo, t).is_some() {
            return Some(lo);
        }
        // coupled common/private rates: monotone in the scale, bisect
        let mut hi = lo * 2.0;
        while self.shares_at(hi, t).is_none() {
            hi *= 8.0;
            if hi > lo * 1e15 {
                return None;
            }
        }
        let mut a = lo;
        while hi / a > 1.0 + 1e-12 {
            let mid = (a * hi).sqrt();
            if self.shares_at(mid, t).is_some() {
                hi = mid;
            } else {
                a = mid;
            }
        }
        Some(hi * (1.0 + 1e-9))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::Scheme;
    use crate::channel::{build_channel_set, place_nodes};
    use crate::numerics::{sample_gaussian_vector, CMatrix};
    use crate::system::{self, evaluate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64, scheme: Scheme) -> (ChannelSet, BeamformingSolution, SystemConfig) {
        let cfg = SystemConfig { scheme, ..SystemConfig::default() };
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let topo = place_nodes(&cfg, &mut r);
        let ch = build_channel_set(&topo, &cfg, &mut r).unwrap();
        let mut sol = BeamformingSolution::zeros(8, 8, cfg.users, cfg.tags);
        sol.w_c = sample_gaussian_vector(8, &mut r);
        for w in &mut sol.w {
            *w = sample_gaussian_vector(8, &mut r);
        }
        sol.s = CMatrix::outer(&sample_gaussian_vector(8, &mut r)).scaled(0.1);
        for u in &mut sol.u {
            let x = sample_gaussian_vector(8, &mut r);
            let n = norm_sqr(&x).sqrt();
            *u = x.iter().map(|v| v / n).collect();
        }
        sol.alpha = alloc::vec![0.3, 0.6];
        (ch, sol, cfg)
    }

    #[test]
    fn budget_matches_system_evaluation() {
        for scheme in [Scheme::RsmaIsabc, Scheme::NomaIsabc] {
            let (ch, sol, cfg) = setup(3, scheme);
            let b = LinkBudget::new(&ch, &sol, &cfg);
            let rep = evaluate(&ch, &sol, &cfg);
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs());
            for k in 0..cfg.tags {
                assert!(rel(b.sensing[k].sinr(1.0), rep.upsilon[k]));
                assert!(rel(b.tag[k].sinr(1.0), rep.gamma_t[k]));
                assert!(rel(b.eh[k], (1.0 - sol.alpha[k]) * rep.p_in[k]));
            }
            for l in 0..cfg.users {
                assert!(rel(b.common[l].sinr(1.0), rep.gamma_c[l]));
                assert!(rel(b.private[l].sinr(1.0), rep.gamma_p[l]));
            }
            assert!(rel(b.power, rep.total_tx_power));
        }
    }

    #[test]
    fn scaling_matches_scaled_solution() {
        let (ch, mut sol, cfg) = setup(5, Scheme::RsmaIsabc);
        let b = LinkBudget::new(&ch, &sol, &cfg);
        sol.scale_power(3.7);
        for l in 0..cfg.users {
            let g = system::sinr_private(&ch, &sol, &cfg, l);
            assert!((b.private[l].sinr(3.7) - g).abs() <= 1e-10 * g);
        }
    }

    #[test]
    fn min_scale_is_tight() {
        let loose = |scheme| {
            let (ch, sol, mut cfg) = setup(7, scheme);
            cfg.tag_rate_min = 0.1;
            cfg.sensing_rate_min = 0.1;
            cfg.private_rate_min = 0.5;
            (ch, sol, cfg)
        };
        for scheme in [Scheme::RsmaIsabc, Scheme::ConvIsabc, Scheme::SensingOnly] {
            let (ch, sol, cfg) = loose(scheme);
            let t = Targets::from_config(&cfg);
            let b = LinkBudget::new(&ch, &sol, &cfg);
            let Some(s) = b.min_scale(&t) else { continue };
            let shares = b.shares_at(s, &t).unwrap();
            assert!(b.satisfied_with_shares(s, &t, &shares));
            let below = s * (1.0 - 1e-6);
            let ok_below = b.shares_at(below, &t).is_some_and(|sh| b.satisfied_with_shares(below, &t, &sh));
            assert!(!ok_below, "{scheme}: scale {s} is not minimal");
        }
    }
}
