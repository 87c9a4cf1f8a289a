//! Node placement, path loss and small-scale channel realizations.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::numerics::{norm_sqr, sample_gaussian_vector, CMatrix, CVector, C64};
use crate::system::{Fading, SystemConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("distance {0} m is below the path-loss model's validity range")]
    DistanceTooSmall(f64),
    #[error("channel dimensions do not match the configuration: {0}")]
    Shape(&'static str),
}

pub type Point = (f64, f64);

fn dist(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub bs_position: Point,
    pub reader_position: Point,
    pub user_positions: Vec<Point>,
    pub tag_positions: Vec<Point>,
    /// Angle of each tag seen from the BS array, broadside along +x.
    pub tag_angles: Vec<f64>,
}

impl Topology {
    pub fn from_positions(
        bs: Point,
        reader: Point,
        users: Vec<Point>,
        tags: Vec<Point>,
    ) -> Self {
        let tag_angles = tags
            .iter()
            .map(|t| (t.1 - bs.1).atan2(t.0 - bs.0))
            .collect();
        Topology {
            bs_position: bs,
            reader_position: reader,
            user_positions: users,
            tag_positions: tags,
            tag_angles,
        }
    }
}

const PLACEMENT_ATTEMPTS: usize = 1000;

fn uniform_in_disc<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    (center.0 + r * phi.cos(), center.1 + r * phi.sin())
}

fn place_group<R: Rng + ?Sized>(
    count: usize,
    center: Point,
    radius: f64,
    placed: &mut Vec<Point>,
    min_gap: f64,
    rng: &mut R,
) -> Vec<Point> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut p = uniform_in_disc(center, radius, rng);
        let mut tries = 1;
        while tries < PLACEMENT_ATTEMPTS && placed.iter().any(|&q| dist(p, q) <= min_gap) {
            p = uniform_in_disc(center, radius, rng);
            tries += 1;
        }
        if tries == PLACEMENT_ATTEMPTS {
            log::warn!("could not keep {min_gap} m spacing around ({:.2}, {:.2})", p.0, p.1);
        }
        placed.push(p);
        out.push(p);
    }
    out
}

/// Draws tag then user positions, resampling any point closer than the
/// path-loss validity distance to a node already placed.
pub fn place_nodes<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Topology {
    let g = &cfg.geometry;
    let gap = cfg.path_loss.min_distance_m;
    let mut placed = alloc::vec![g.bs, g.reader];
    let tags = place_group(cfg.tags, g.tag_center, g.tag_radius, &mut placed, gap, rng);
    let users = place_group(cfg.users, g.user_center, g.user_radius, &mut placed, gap, rng);
    Topology::from_positions(g.bs, g.reader, users, tags)
}

pub fn pathloss_db(distance_m: f64, cfg: &SystemConfig) -> Result<f64, ChannelError> {
    let pl = &cfg.path_loss;
    if !(distance_m >= pl.min_distance_m) {
        return Err(ChannelError::DistanceTooSmall(distance_m));
    }
    Ok(pl.slope_db * distance_m.log10()
        + pl.intercept_db
        + pl.freq_slope_db * (cfg.carrier_hz / 1e9).log10())
}

/// Linear power gain `10^(-PL/10)`.
pub fn pathloss_gain(distance_m: f64, cfg: &SystemConfig) -> Result<f64, ChannelError> {
    Ok(10f64.powf(-pathloss_db(distance_m, cfg)? / 10.0))
}

/// Half-wavelength ULA response with squared norm `gain`.
pub fn steering_vector(theta: f64, count: usize, gain: f64) -> CVector {
    let amp = (gain / count as f64).sqrt();
    let s = theta.sin();
    (0..count)
        .map(|n| C64::from_polar(amp, PI * n as f64 * s))
        .collect()
}

pub fn gen_rayleigh<R: Rng + ?Sized>(dim: usize, zeta: f64, rng: &mut R) -> CVector {
    let amp = zeta.sqrt();
    let mut a = sample_gaussian_vector(dim, rng);
    a.iter_mut().for_each(|x| *x *= amp);
    a
}

/// `√(κ/(κ+1))·los + √(1/(κ+1))·nlos` with `nlos` Rayleigh of gain `zeta`.
/// `los` must already carry the large-scale gain.
pub fn gen_rician<R: Rng + ?Sized>(
    dim: usize,
    zeta: f64,
    kappa: f64,
    los: &[C64],
    rng: &mut R,
) -> CVector {
    debug_assert_eq!(los.len(), dim);
    let nlos = gen_rayleigh(dim, zeta, rng);
    let (a, b) = ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt());
    los.iter().zip(&nlos).map(|(l, n)| l * a + n * b).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub topology: Topology,
    pub f0: CVector,
    pub f: Vec<CVector>,
    pub g_f: Vec<CVector>,
    pub g_b: Vec<CVector>,
    /// `v[l][k]`: tag k to user l.
    pub v: Vec<Vec<C64>>,
    pub q: Vec<C64>,
    /// M×N self-interference channel; the BS receives `G_SIᴴ x`.
    pub g_si: CMatrix,
    /// `h[l][k] = g_f[k]·v[l][k]`.
    pub h: Vec<Vec<CVector>>,
    /// `h_tag[k] = g_f[k]·q[k]`.
    pub h_tag: Vec<CVector>,
}

impl ChannelSet {
    /// Assembles the cascaded channels from the primitive links.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        topology: Topology,
        f0: CVector,
        f: Vec<CVector>,
        g_f: Vec<CVector>,
        g_b: Vec<CVector>,
        v: Vec<Vec<C64>>,
        q: Vec<C64>,
        g_si: CMatrix,
    ) -> Result<Self, ChannelError> {
        let m = f0.len();
        let k = g_f.len();
        if f.iter().chain(&g_f).any(|x| x.len() != m) {
            return Err(ChannelError::Shape("transmit-side vectors differ in length"));
        }
        if g_b.len() != k || q.len() != k || v.len() != f.len() || v.iter().any(|r| r.len() != k) {
            return Err(ChannelError::Shape("per-tag link counts differ"));
        }
        let n = g_b.first().map_or(g_si.cols(), |g| g.len());
        if g_b.iter().any(|g| g.len() != n) || g_si.rows() != m || g_si.cols() != n {
            return Err(ChannelError::Shape("receive-side dimensions differ"));
        }
        let cascade = |g: &CVector, s: C64| -> CVector { g.iter().map(|x| x * s).collect() };
        let h = v
            .iter()
            .map(|row| row.iter().zip(&g_f).map(|(&s, g)| cascade(g, s)).collect())
            .collect();
        let h_tag = q.iter().zip(&g_f).map(|(&s, g)| cascade(g, s)).collect();
        Ok(ChannelSet {
            topology,
            f0,
            f,
            g_f,
            g_b,
            v,
            q,
            g_si,
            h,
            h_tag,
        })
    }

    pub fn tx_antennas(&self) -> usize {
        self.f0.len()
    }

    pub fn rx_antennas(&self) -> usize {
        self.g_si.cols()
    }

    pub fn users(&self) -> usize {
        self.f.len()
    }

    pub fn tags(&self) -> usize {
        self.g_f.len()
    }

    /// Reorders users by a permutation (`order[new] = old`).
    pub fn permute_users(&mut self, order: &[usize]) {
        let pick = |src: &Vec<CVector>| order.iter().map(|&i| src[i].clone()).collect();
        self.f = pick(&self.f);
        self.v = order.iter().map(|&i| self.v[i].clone()).collect();
        self.h = order.iter().map(|&i| self.h[i].clone()).collect();
        self.topology.user_positions = order
            .iter()
            .map(|&i| self.topology.user_positions[i])
            .collect();
    }

    pub fn users_sorted(&self) -> bool {
        self.f
            .windows(2)
            .all(|w| norm_sqr(&w[0]) >= norm_sqr(&w[1]))
    }
}

fn link<R: Rng + ?Sized>(
    dim: usize,
    zeta: f64,
    los_dir: impl FnOnce() -> CVector,
    fading: Fading,
    rng: &mut R,
) -> CVector {
    match fading {
        Fading::Rayleigh => gen_rayleigh(dim, zeta, rng),
        Fading::Rician { kappa } => gen_rician(dim, zeta, kappa, &los_dir(), rng),
    }
}

/// Draws every link for one trial and sorts users by descending `‖f_l‖²`.
///
/// Draw order is fixed (f0, users, tag-user, tag-reader, SI) so matched
/// seeds share the scattered components across fading models.
pub fn build_channel_set<R: Rng + ?Sized>(
    topo: &Topology,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelSet, ChannelError> {
    let (m, n) = (cfg.tx_antennas, cfg.rx_antennas);
    let bs = topo.bs_position;
    let lambda = cfg.wavelength();
    let fading = cfg.link_fading;
    let angle_from_bs = |p: Point| (p.1 - bs.1).atan2(p.0 - bs.0);
    let scalar_los = |zeta: f64, d: f64| {
        alloc::vec![C64::from_polar(zeta.sqrt(), -2.0 * PI * d / lambda)]
    };

    let d0 = dist(bs, topo.reader_position);
    let z0 = pathloss_gain(d0, cfg)?;
    let f0 = link(m, z0, || steering_vector(angle_from_bs(topo.reader_position), m, z0 * m as f64), fading, rng);

    let mut f = Vec::with_capacity(topo.user_positions.len());
    for &u in &topo.user_positions {
        let z = pathloss_gain(dist(bs, u), cfg)?;
        f.push(link(m, z, || steering_vector(angle_from_bs(u), m, z * m as f64), fading, rng));
    }

    let mut g_f = Vec::with_capacity(topo.tag_positions.len());
    let mut g_b = Vec::with_capacity(topo.tag_positions.len());
    for (&t, &theta) in topo.tag_positions.iter().zip(&topo.tag_angles) {
        let zb = pathloss_gain(dist(bs, t), cfg)?;
        g_f.push(steering_vector(theta, m, zb));
        g_b.push(steering_vector(theta, n, zb));
    }

    let mut v = Vec::with_capacity(topo.user_positions.len());
    for &u in &topo.user_positions {
        let mut row = Vec::with_capacity(topo.tag_positions.len());
        for &t in &topo.tag_positions {
            let d = dist(t, u);
            let z = pathloss_gain(d, cfg)?;
            row.push(link(1, z, || scalar_los(z, d), fading, rng)[0]);
        }
        v.push(row);
    }
    let mut q = Vec::with_capacity(topo.tag_positions.len());
    for &t in &topo.tag_positions {
        let d = dist(t, topo.reader_position);
        let z = pathloss_gain(d, cfg)?;
        q.push(link(1, z, || scalar_los(z, d), fading, rng)[0]);
    }

    let ksi = cfg.si_rician_factor();
    let los = alloc::vec![C64::new(1.0, 0.0); m * n];
    let si = gen_rician(m * n, 1.0, ksi, &los, rng);
    let g_si = CMatrix::from_vec(m, n, si).expect("m*n entries");

    let mut ch = ChannelSet::from_parts(topo.clone(), f0, f, g_f, g_b, v, q, g_si)?;
    let mut order: Vec<usize> = (0..ch.users()).collect();
    order.sort_by(|&a, &b| norm_sqr(&ch.f[b]).total_cmp(&norm_sqr(&ch.f[a])));
    ch.permute_users(&order);
    Ok(ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Geometry;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn default_positions() {
        let cfg = SystemConfig::default();
        let t = place_nodes(&cfg, &mut rng(1));
        assert_eq!(t.bs_position, (0.0, 0.0));
        assert_eq!(t.reader_position, (12.0, 0.0));
        assert_eq!(t.tag_positions.len(), cfg.tags);
        for &(x, y) in &t.tag_positions {
            assert!(dist((x, y), (6.0, -4.0)) <= 3.0 + 1e-12);
        }
        for &(x, y) in &t.user_positions {
            assert!(dist((x, y), (55.0, 0.0)) <= 5.0 + 1e-12);
        }
        for a in &t.tag_angles {
            assert!(a.abs() < PI / 2.0);
        }
    }

    #[test]
    fn degenerate_tag_disc() {
        let cfg = SystemConfig {
            tags: 1,
            geometry: Geometry {
                tag_radius: 0.0,
                ..Geometry::default()
            },
            ..SystemConfig::default()
        };
        let t = place_nodes(&cfg, &mut rng(3));
        assert_eq!(t.tag_positions[0], (6.0, -4.0));
        assert_eq!(t.tag_angles[0], (-4.0f64).atan2(6.0));
    }

    #[test]
    fn placement_is_deterministic() {
        let cfg = SystemConfig::default();
        assert_eq!(place_nodes(&cfg, &mut rng(9)), place_nodes(&cfg, &mut rng(9)));
    }

    #[test]
    fn pathloss_values() {
        let cfg = SystemConfig::default();
        let pl1 = pathloss_db(1.0, &cfg).unwrap();
        assert!((pl1 - (28.0 + 20.0 * 3f64.log10())).abs() < 1e-12);
        assert!((pl1 - 37.54).abs() < 5e-3);
        let step = pathloss_db(8.0, &cfg).unwrap() - pathloss_db(4.0, &cfg).unwrap();
        assert!((step - 22.0 * 2f64.log10()).abs() < 1e-12);
        assert!((step - 6.62).abs() < 5e-3);
        assert!(pathloss_db(10.0, &cfg).unwrap() > pathloss_db(5.0, &cfg).unwrap());
        assert_eq!(pathloss_db(0.2, &cfg), Err(ChannelError::DistanceTooSmall(0.2)));
    }

    #[test]
    fn steering_examples() {
        let b = steering_vector(0.0, 4, 2.0);
        for x in &b {
            assert!((x - C64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
        }
        let b = steering_vector(PI / 2.0, 2, 3.0);
        let a = 1.5f64.sqrt();
        assert!((b[0] - C64::new(a, 0.0)).norm() < 1e-15);
        assert!((b[1] - C64::new(-a, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rayleigh_moments() {
        assert!(gen_rayleigh(5, 0.0, &mut rng(0)).iter().all(|x| x.norm() == 0.0));
        let mut r = rng(42);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| gen_rayleigh(1, 2.0, &mut r)[0].norm_sqr()).sum::<f64>() / n as f64;
        assert!((1.9..=2.1).contains(&mean), "{mean}");
        assert_eq!(gen_rayleigh(4, 1.0, &mut rng(5)), gen_rayleigh(4, 1.0, &mut rng(5)));
    }

    #[test]
    fn rician_limits_and_split() {
        let los = steering_vector(0.3, 4, 4.0);
        let a = gen_rician(4, 1.0, 1e9, &los, &mut rng(1));
        for (x, y) in a.iter().zip(&los) {
            assert!((x - y).norm() <= 1e-4 * y.norm());
        }
        // κ = 0 draws exactly the scattered part
        assert_eq!(gen_rician(4, 1.0, 0.0, &los, &mut rng(8)), gen_rayleigh(4, 1.0, &mut rng(8)));

        let kappa = 10f64.powf(0.3);
        let los1 = [C64::new(1.0, 0.0)];
        let mut r = rng(77);
        let n = 100_000;
        let mut mean = C64::new(0.0, 0.0);
        let mut power = 0.0;
        for _ in 0..n {
            let x = gen_rician(1, 1.0, kappa, &los1, &mut r)[0];
            mean += x;
            power += x.norm_sqr();
        }
        mean /= n as f64;
        power /= n as f64;
        let frac = mean.norm_sqr() / power;
        let expect = kappa / (kappa + 1.0);
        assert!((frac - expect).abs() <= 0.02 * expect, "{frac} vs {expect}");
    }

    #[test]
    fn channel_set_structure() {
        let cfg = SystemConfig::default();
        let topo = place_nodes(&cfg, &mut rng(11));
        let ch = build_channel_set(&topo, &cfg, &mut rng(12)).unwrap();
        assert_eq!(ch.tx_antennas(), 8);
        assert_eq!(ch.rx_antennas(), 8);
        assert!(ch.users_sorted());
        for k in 0..cfg.tags {
            let d = dist(topo.bs_position, topo.tag_positions[k]);
            let zb = pathloss_gain(d, &cfg).unwrap();
            assert!((norm_sqr(&ch.g_f[k]) - zb).abs() <= 1e-12 * zb);
            assert!((norm_sqr(&ch.g_b[k]) - zb).abs() <= 1e-12 * zb);
            for l in 0..cfg.users {
                for (x, g) in ch.h[l][k].iter().zip(&ch.g_f[k]) {
                    assert_eq!(*x, g * ch.v[l][k]);
                }
            }
            for (x, g) in ch.h_tag[k].iter().zip(&ch.g_f[k]) {
                assert_eq!(*x, g * ch.q[k]);
            }
        }
    }

    #[test]
    fn zero_radius_channels_reproducible() {
        let cfg = SystemConfig {
            geometry: Geometry {
                tag_radius: 0.0,
                user_radius: 0.0,
                ..Geometry::default()
            },
            tags: 1,
            users: 1,
            ..SystemConfig::default()
        };
        let build = || {
            let mut r = rng(21);
            let topo = place_nodes(&cfg, &mut r);
            build_channel_set(&topo, &cfg, &mut r).unwrap()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn user_positions_follow_sort() {
        let cfg = SystemConfig {
            users: 4,
            ..SystemConfig::default()
        };
        let topo = place_nodes(&cfg, &mut rng(31));
        let ch = build_channel_set(&topo, &cfg, &mut rng(32)).unwrap();
        let mut a = ch.topology.user_positions.clone();
        let mut b = topo.user_positions.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn steering_norm(theta in -PI..PI, gain in 1e-9f64..10.0) {
            let b = steering_vector(theta, 8, gain);
            prop_assert!((norm_sqr(&b) - gain).abs() <= 1e-12 * gain.max(1.0));
        }

        #[test]
        fn pathloss_monotone(d in 0.5f64..1e3, step in 1e-3f64..100.0) {
            let cfg = SystemConfig::default();
            prop_assert!(pathloss_db(d + step, &cfg).unwrap() > pathloss_db(d, &cfg).unwrap());
        }

        #[test]
        fn realizations_finite(seed in any::<u64>()) {
            let cfg = SystemConfig {
                link_fading: Fading::Rician { kappa: 2.0 },
                ..SystemConfig::default()
            };
            let mut r = rng(seed);
            let topo = place_nodes(&cfg, &mut r);
            let ch = build_channel_set(&topo, &cfg, &mut r).unwrap();
            let finite = |v: &[C64]| v.iter().all(|x| x.re.is_finite() && x.im.is_finite());
            prop_assert!(finite(&ch.f0) && ch.f.iter().all(|x| finite(x)));
            prop_assert!(finite(ch.g_si.as_slice()) && ch.h_tag.iter().all(|x| finite(x)));
        }
    }
}
