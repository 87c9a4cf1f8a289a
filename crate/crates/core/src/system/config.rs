use alloc::string::String;
#[allow(unused_imports)]
use num_traits::Float;

use crate::benchmarks::Scheme;

use super::SystemError;

/// Energy-harvesting conversion model.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EhModel {
    Linear {
        efficiency: f64,
    },
    /// Normalized logistic curve with saturation `saturation_w`, steepness
    /// `slope` (1/W) and turn-on point `knee_w`.
    Nonlinear {
        saturation_w: f64,
        slope: f64,
        knee_w: f64,
    },
}

impl Default for EhModel {
    fn default() -> Self {
        EhModel::Nonlinear {
            saturation_w: 0.024,
            slope: 150.0,
            knee_w: 0.014,
        }
    }
}

impl EhModel {
    /// Harvested DC power for an input (post-split) RF power.
    pub fn harvest(&self, input_w: f64) -> f64 {
        match *self {
            EhModel::Linear { efficiency } => efficiency * input_w.max(0.0),
            EhModel::Nonlinear {
                saturation_w,
                slope,
                knee_w,
            } => {
                let omega = 1.0 / (1.0 + (slope * knee_w).exp());
                let logistic = saturation_w / (1.0 + (-slope * (input_w.max(0.0) - knee_w)).exp());
                ((logistic - saturation_w * omega) / (1.0 - omega)).max(0.0)
            }
        }
    }

    /// RF input needed to harvest `output_w`; `None` when the output is out
    /// of the model's range.
    pub fn required_input(&self, output_w: f64) -> Option<f64> {
        if output_w < 0.0 {
            return None;
        }
        match *self {
            EhModel::Linear { efficiency } => Some(output_w / efficiency),
            EhModel::Nonlinear {
                saturation_w,
                slope,
                knee_w,
            } => {
                if output_w >= saturation_w {
                    return None;
                }
                let omega = 1.0 / (1.0 + (slope * knee_w).exp());
                let denom = output_w * (1.0 - omega) + saturation_w * omega;
                Some(knee_w - (saturation_w / denom - 1.0).ln() / slope)
            }
        }
    }

    fn validate(&self) -> Result<(), SystemError> {
        match *self {
            EhModel::Linear { efficiency } if !(efficiency > 0.0 && efficiency <= 1.0) => {
                Err(SystemError::InvalidConfig("EH efficiency must lie in (0, 1]".into()))
            }
            EhModel::Nonlinear {
                saturation_w,
                slope,
                knee_w,
            } if !(saturation_w > 0.0 && slope > 0.0 && knee_w >= 0.0) => Err(
                SystemError::InvalidConfig("sigmoid EH parameters must be positive".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Node placement: fixed BS and reader, tags and users uniform in discs.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Geometry {
    pub bs: (f64, f64),
    pub reader: (f64, f64),
    pub tag_center: (f64, f64),
    pub tag_radius: f64,
    pub user_center: (f64, f64),
    pub user_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            bs: (0.0, 0.0),
            reader: (12.0, 0.0),
            tag_center: (6.0, -4.0),
            tag_radius: 3.0,
            user_center: (55.0, 0.0),
            user_radius: 5.0,
        }
    }
}

/// `PL(dB) = slope·log10(d) + intercept + freq_slope·log10(fc / 1 GHz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathLoss {
    pub slope_db: f64,
    pub intercept_db: f64,
    pub freq_slope_db: f64,
    pub min_distance_m: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            slope_db: 22.0,
            intercept_db: 28.0,
            freq_slope_db: 20.0,
            min_distance_m: 0.5,
        }
    }
}

/// Small-scale fading of the BS-reader, BS-user, tag-user and tag-reader links.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Fading {
    Rayleigh,
    Rician { kappa: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemConfig {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub users: usize,
    pub tags: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Rician factor of the self-interference channel, dB.
    pub si_rician_db: f64,
    /// Residual self-interference fraction after cancellation (linear).
    pub si_residual: f64,
    pub sic_common: f64,
    pub sic_private: f64,
    pub sic_sensing: f64,
    /// Tag activation threshold on harvested power, W.
    pub activation_power_w: f64,
    pub eh_model: EhModel,
    pub sensing_rate_min: f64,
    pub tag_rate_min: f64,
    pub private_rate_min: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub epsilon: f64,
    pub max_ao_iterations: usize,
    pub alpha_floor: f64,
    pub randomization_trials: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Largest transmit power the initializer will try, W.
    pub power_cap_w: f64,
    pub geometry: Geometry,
    pub path_loss: PathLoss,
    pub link_fading: Fading,
    pub scheme: Scheme,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            tx_antennas: 8,
            rx_antennas: 8,
            users: 3,
            tags: 2,
            carrier_hz: 3e9,
            bandwidth_hz: 10e6,
            noise_figure_db: 10.0,
            si_rician_db: 3.0,
            si_residual: db_to_linear(-90.0),
            sic_common: db_to_linear(-10.0),
            sic_private: db_to_linear(-10.0),
            sic_sensing: db_to_linear(-10.0),
            activation_power_w: 1e-5,
            eh_model: EhModel::default(),
            sensing_rate_min: 1.0,
            tag_rate_min: 1.0,
            private_rate_min: 2.0,
            lambda1: 1.0,
            lambda2: 1.0,
            epsilon: 1e-3,
            max_ao_iterations: 20,
            alpha_floor: 1e-4,
            randomization_trials: 10_000,
            solver_tol: 1e-7,
            solver_max_iter: 200,
            power_cap_w: 1e3,
            geometry: Geometry::default(),
            path_loss: PathLoss::default(),
            link_fading: Fading::Rayleigh,
            scheme: Scheme::RsmaIsabc,
            seed: 0,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl SystemConfig {
    /// Thermal noise power in W: `-174 dBm/Hz + 10log10(B) + NF`.
    pub fn noise_power(&self) -> f64 {
        db_to_linear(-174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db - 30.0)
    }

    pub fn sensing_sinr_min(&self) -> f64 {
        2f64.powf(self.sensing_rate_min) - 1.0
    }

    pub fn tag_sinr_min(&self) -> f64 {
        2f64.powf(self.tag_rate_min) - 1.0
    }

    pub fn private_sinr_min(&self) -> f64 {
        2f64.powf(self.private_rate_min) - 1.0
    }

    pub fn si_rician_factor(&self) -> f64 {
        db_to_linear(self.si_rician_db)
    }

    pub fn wavelength(&self) -> f64 {
        299_792_458.0 / self.carrier_hz
    }

    /// Minimum post-split RF input a tag needs to stay active.
    pub fn eh_input_threshold(&self) -> f64 {
        self.eh_model
            .required_input(self.activation_power_w)
            .unwrap_or(f64::INFINITY)
    }

    /// Set all three SIC residuals at once.
    pub fn with_sic(mut self, delta: f64) -> Self {
        self.sic_common = delta;
        self.sic_private = delta;
        self.sic_sensing = delta;
        self
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        let bad = |msg: &str| Err(SystemError::InvalidConfig(String::from(msg)));
        if self.tx_antennas == 0 || self.rx_antennas == 0 {
            return bad("antenna counts must be at least 1");
        }
        if !(self.carrier_hz > 0.0 && self.bandwidth_hz > 0.0) {
            return bad("carrier and bandwidth must be positive");
        }
        for d in [
            self.si_residual,
            self.sic_common,
            self.sic_private,
            self.sic_sensing,
        ] {
            if !(0.0..=1.0).contains(&d) {
                return bad("SIC and SI residuals must lie in [0, 1]");
            }
        }
        for t in [
            self.sensing_rate_min,
            self.tag_rate_min,
            self.private_rate_min,
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return bad("rate thresholds must be positive");
            }
        }
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return bad("margin weights must be positive");
        }
        if !(self.alpha_floor > 0.0 && self.alpha_floor < 0.5) {
            return bad("alpha floor must lie in (0, 0.5)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.activation_power_w <= 0.0 || !self.eh_input_threshold().is_finite() {
            return bad("activation threshold must be reachable by the EH model");
        }
        if let Fading::Rician { kappa } = self.link_fading {
            if !(kappa >= 0.0) {
                return bad("Rician factor must be nonnegative");
            }
        }
        self.eh_model.validate()
    }
}
