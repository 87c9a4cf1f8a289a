//! `key = value` settings with unit-suffixed names.
//!
//! Blank lines and text after `#` are ignored. Keys are case-insensitive.

use isabc_core::benchmarks::Scheme;
use isabc_core::system::{db_to_linear, EhModel, Fading, SystemConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigFileError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
}

/// Every system key with a one-line description.
pub const SYSTEM_KEYS: &[(&str, &str)] = &[
    ("antennas", "M = N, transmit and receive antennas"),
    ("tx_antennas", "M, BS transmit antennas"),
    ("rx_antennas", "N, BS receive antennas"),
    ("users", "L, downlink users"),
    ("tags", "K, backscatter tags"),
    ("fc_ghz", "carrier frequency, GHz"),
    ("bandwidth_mhz", "bandwidth, MHz"),
    ("noise_figure_db", "receiver noise figure, dB"),
    ("k_si_db", "Rician factor of the self-interference channel, dB"),
    ("beta_db", "residual self-interference after cancellation, dB"),
    ("delta_db", "all three SIC residuals, dB"),
    ("delta_c_db", "common-stream SIC residual, dB"),
    ("delta_p_db", "private-stream SIC residual, dB"),
    ("delta_s_db", "sensing-signal SIC residual, dB"),
    ("p_b_w", "tag activation threshold on harvested power, W"),
    ("eh_model", "`nonlinear` or `linear`"),
    ("eh_saturation_w", "sigmoid saturation power, W"),
    ("eh_slope_per_w", "sigmoid steepness, 1/W"),
    ("eh_knee_w", "sigmoid turn-on power, W"),
    ("eh_efficiency", "linear conversion efficiency"),
    ("rs_min_bps_hz", "sensing rate target, bit/s/Hz"),
    ("rt_min_bps_hz", "backscatter rate target, bit/s/Hz"),
    ("rp_min_bps_hz", "per-user rate target, bit/s/Hz"),
    ("lambda1", "weight of the backscatter margin in the reflection update"),
    ("lambda2", "weight of the energy margin in the reflection update"),
    ("epsilon", "relative power change that ends the loop"),
    ("max_iterations", "iteration cap of the loop"),
    ("alpha_floor", "reflection coefficients stay in [floor, 1 - floor]"),
    ("randomization_trials", "Gaussian draws per rank-one recovery"),
    ("solver_tol", "interior-point tolerance"),
    ("solver_max_iter", "interior-point iteration cap"),
    ("power_cap_w", "largest start power tried, W"),
    ("bs_x_m", "BS position x, m"),
    ("bs_y_m", "BS position y, m"),
    ("reader_x_m", "reader position x, m"),
    ("reader_y_m", "reader position y, m"),
    ("tag_center_x_m", "tag disc center x, m"),
    ("tag_center_y_m", "tag disc center y, m"),
    ("tag_radius_m", "tag disc radius, m"),
    ("user_center_x_m", "user disc center x, m"),
    ("user_center_y_m", "user disc center y, m"),
    ("user_radius_m", "user disc radius, m"),
    ("pl_slope_db", "path-loss distance slope, dB/decade"),
    ("pl_intercept_db", "path-loss intercept, dB"),
    ("pl_freq_slope_db", "path-loss carrier slope, dB/decade of GHz"),
    ("min_distance_m", "smallest node separation, m"),
    ("fading", "`rayleigh` or `rician`"),
    ("kappa", "Rician factor of the link channels (linear, 0 = Rayleigh)"),
    ("scheme", "scheme name, e.g. `rsma_isabc`"),
    ("seed", "base seed"),
];

fn num(value: &str) -> Result<f64, String> {
    let v: f64 = value.trim().parse().map_err(|_| "not a number".to_string())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("not finite".into())
    }
}

fn count(value: &str) -> Result<usize, String> {
    value.trim().parse().map_err(|_| "not a non-negative integer".to_string())
}

fn kappa_fading(k: f64) -> Result<Fading, String> {
    if k < 0.0 {
        Err("must be non-negative".into())
    } else if k == 0.0 {
        Ok(Fading::Rayleigh)
    } else {
        Ok(Fading::Rician { kappa: k })
    }
}

/// Applies one setting. `Ok(false)` means the key is not a system key.
pub fn apply_setting(cfg: &mut SystemConfig, key: &str, value: &str) -> Result<bool, String> {
    let key = key.trim().to_ascii_lowercase();
    let g = &mut cfg.geometry;
    match key.as_str() {
        "antennas" => {
            let n = count(value)?;
            cfg.tx_antennas = n;
            cfg.rx_antennas = n;
        }
        "tx_antennas" => cfg.tx_antennas = count(value)?,
        "rx_antennas" => cfg.rx_antennas = count(value)?,
        "users" => cfg.users = count(value)?,
        "tags" => cfg.tags = count(value)?,
        "fc_ghz" => cfg.carrier_hz = num(value)? * 1e9,
        "bandwidth_mhz" => cfg.bandwidth_hz = num(value)? * 1e6,
        "noise_figure_db" => cfg.noise_figure_db = num(value)?,
        "k_si_db" => cfg.si_rician_db = num(value)?,
        "beta_db" => cfg.si_residual = db_to_linear(num(value)?),
        "delta_db" => *cfg = cfg.clone().with_sic(db_to_linear(num(value)?)),
        "delta_c_db" => cfg.sic_common = db_to_linear(num(value)?),
        "delta_p_db" => cfg.sic_private = db_to_linear(num(value)?),
        "delta_s_db" => cfg.sic_sensing = db_to_linear(num(value)?),
        "p_b_w" => cfg.activation_power_w = num(value)?,
        "eh_model" => {
            cfg.eh_model = match value.trim().to_ascii_lowercase().as_str() {
                "nonlinear" | "sigmoid" => EhModel::default(),
                "linear" => EhModel::Linear { efficiency: 0.5 },
                _ => return Err("expected `nonlinear` or `linear`".into()),
            }
        }
        "eh_saturation_w" | "eh_slope_per_w" | "eh_knee_w" => {
            let v = num(value)?;
            let EhModel::Nonlinear {
                saturation_w,
                slope,
                knee_w,
            } = cfg.eh_model
            else {
                return Err("the EH model is linear".into());
            };
            cfg.eh_model = match key.as_str() {
                "eh_saturation_w" => EhModel::Nonlinear { saturation_w: v, slope, knee_w },
                "eh_slope_per_w" => EhModel::Nonlinear { saturation_w, slope: v, knee_w },
                _ => EhModel::Nonlinear { saturation_w, slope, knee_w: v },
            };
        }
        "eh_efficiency" => cfg.eh_model = EhModel::Linear { efficiency: num(value)? },
        "rs_min_bps_hz" => cfg.sensing_rate_min = num(value)?,
        "rt_min_bps_hz" => cfg.tag_rate_min = num(value)?,
        "rp_min_bps_hz" => cfg.private_rate_min = num(value)?,
        "lambda1" => cfg.lambda1 = num(value)?,
        "lambda2" => cfg.lambda2 = num(value)?,
        "epsilon" => cfg.epsilon = num(value)?,
        "max_iterations" => cfg.max_ao_iterations = count(value)?,
        "alpha_floor" => cfg.alpha_floor = num(value)?,
        "randomization_trials" => cfg.randomization_trials = count(value)?,
        "solver_tol" => cfg.solver_tol = num(value)?,
        "solver_max_iter" => cfg.solver_max_iter = count(value)?,
        "power_cap_w" => cfg.power_cap_w = num(value)?,
        "bs_x_m" => g.bs.0 = num(value)?,
        "bs_y_m" => g.bs.1 = num(value)?,
        "reader_x_m" => g.reader.0 = num(value)?,
        "reader_y_m" => g.reader.1 = num(value)?,
        "tag_center_x_m" => g.tag_center.0 = num(value)?,
        "tag_center_y_m" => g.tag_center.1 = num(value)?,
        "tag_radius_m" => g.tag_radius = num(value)?,
        "user_center_x_m" => g.user_center.0 = num(value)?,
        "user_center_y_m" => g.user_center.1 = num(value)?,
        "user_radius_m" => g.user_radius = num(value)?,
        "pl_slope_db" => cfg.path_loss.slope_db = num(value)?,
        "pl_intercept_db" => cfg.path_loss.intercept_db = num(value)?,
        "pl_freq_slope_db" => cfg.path_loss.freq_slope_db = num(value)?,
        "min_distance_m" => cfg.path_loss.min_distance_m = num(value)?,
        "fading" => {
            cfg.link_fading = match value.trim().to_ascii_lowercase().as_str() {
                "rayleigh" => Fading::Rayleigh,
                "rician" => match cfg.link_fading {
                    Fading::Rician { kappa } => Fading::Rician { kappa },
                    Fading::Rayleigh => Fading::Rician { kappa: 1.0 },
                },
                _ => return Err("expected `rayleigh` or `rician`".into()),
            }
        }
        "kappa" => cfg.link_fading = kappa_fading(num(value)?)?,
        "scheme" => cfg.scheme = value.trim().parse::<Scheme>().map_err(|e| e.to_string())?,
        "seed" => cfg.seed = value.trim().parse().map_err(|_| "not an unsigned integer".to_string())?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Splits text into `(line number, key, value)` triples.
pub fn entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or(ConfigFileError::Syntax { line: i + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigFileError::Syntax { line: i + 1 });
        }
        out.push((i + 1, k.to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(out)
}

/// Applies a whole text of system settings on top of `base`.
pub fn parse_system(text: &str, mut base: SystemConfig) -> Result<SystemConfig, ConfigFileError> {
    for (line, key, value) in entries(text)? {
        match apply_setting(&mut base, &key, &value) {
            Ok(true) => {}
            Ok(false) => return Err(ConfigFileError::UnknownKey { line, key }),
            Err(reason) => {
                return Err(ConfigFileError::BadValue {
                    line,
                    key,
                    value,
                    reason,
                })
            }
        }
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_are_converted() {
        let cfg = parse_system(
            "fc_ghz = 2.4\nbandwidth_mhz = 20 # comment\n\nbeta_db = -100\ndelta_db = -20\nantennas = 10",
            SystemConfig::default(),
        )
        .unwrap();
        assert_eq!(cfg.carrier_hz, 2.4e9);
        assert_eq!(cfg.bandwidth_hz, 20e6);
        assert!((cfg.si_residual - 1e-10).abs() < 1e-24);
        assert!((cfg.sic_private - 0.01).abs() < 1e-15);
        assert_eq!(cfg.sic_common, cfg.sic_sensing);
        assert_eq!((cfg.tx_antennas, cfg.rx_antennas), (10, 10));
    }

    #[test]
    fn every_documented_key_is_accepted() {
        for (key, _) in SYSTEM_KEYS {
            let value = match *key {
                "eh_model" => "nonlinear",
                "fading" => "rician",
                "scheme" => "conv_isabc",
                "delta_db" | "delta_c_db" | "delta_p_db" | "delta_s_db" | "beta_db" => "-10",
                _ => "3",
            };
            let mut cfg = SystemConfig::default();
            assert_eq!(apply_setting(&mut cfg, key, value), Ok(true), "{key}");
        }
    }

    #[test]
    fn kappa_zero_is_rayleigh() {
        let cfg = parse_system("kappa = 0", SystemConfig::default()).unwrap();
        assert_eq!(cfg.link_fading, Fading::Rayleigh);
        let cfg = parse_system("kappa = 5", SystemConfig::default()).unwrap();
        assert_eq!(cfg.link_fading, Fading::Rician { kappa: 5.0 });
    }

    #[test]
    fn errors_carry_line_numbers() {
        let d = SystemConfig::default();
        assert_eq!(parse_system("users 3", d.clone()), Err(ConfigFileError::Syntax { line: 1 }));
        assert!(matches!(
            parse_system("\nwidth = 3", d.clone()),
            Err(ConfigFileError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            parse_system("users = many", d),
            Err(ConfigFileError::BadValue { line: 1, .. })
        ));
    }
}
