//! Alternating minimization of transmit power: receive filters, transmit
//! beamformers with a sensing covariance, then tag reflection coefficients.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::conic::{ConicError, SolveStatus};
use crate::system::{evaluate, BeamformingSolution, SystemConfig, SystemError};

pub mod budget;
mod init;
mod receive;
mod reflection;
mod transmit;

pub use budget::{LinkBudget, Targets};
pub use init::{initialize_feasible, structural_check};
pub use receive::{mmse_filter, optimize_receive_beamformers};
pub use reflection::{optimize_reflection_coefficients, ReflectionOutcome};
pub use transmit::{
    build_transmit_sdp, recover_beamformers, solve_transmit_subproblem, RateModel, TransmitOutcome,
    TransmitSdp,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AoError {
    #[error("tag SINR target {target} cannot be met by {tags} tags sharing the reader")]
    StructurallyInfeasible { target: f64, tags: usize },
    #[error("no feasible starting point at or below {cap_w} W")]
    InfeasibleAtCap { cap_w: f64 },
    #[error("interference-plus-noise matrix of tag {0} is singular")]
    SingularQ(usize),
    #[error("rate anchors missing or sized for a different problem")]
    MissingAnchors,
    #[error("transmit subproblem infeasible (residual {residual:e})")]
    SdpInfeasible { residual: f64 },
    #[error("no randomized candidate could be made feasible")]
    NoFeasibleRandomization,
    #[error("iteration {iteration}: {source}")]
    Iteration { iteration: usize, source: alloc::boxed::Box<AoError> },
    #[error(transparent)]
    Solver(#[from] ConicError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Expansion points of the rate constraints, in units of the noise power.
#[derive(Clone, Debug, PartialEq)]
pub struct Anchors {
    /// Received power at each user when decoding its private stream.
    pub private_total: Vec<f64>,
    /// Same, minus the desired private signal.
    pub private_rest: Vec<f64>,
    /// Received power at each user when decoding the common stream.
    pub common_total: Vec<f64>,
    pub common_rest: Vec<f64>,
}

impl Anchors {
    pub fn at(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig) -> Self {
        let b = LinkBudget::new(ch, sol, cfg);
        let s2 = cfg.noise_power();
        let total = |l: &budget::Link| (l.signal + l.interference + l.noise) / s2;
        let rest = |l: &budget::Link| (l.interference + l.noise) / s2;
        Anchors {
            private_total: b.private.iter().map(total).collect(),
            private_rest: b.private.iter().map(rest).collect(),
            common_total: b.common.iter().map(total).collect(),
            common_rest: b.common.iter().map(rest).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective_w: f64,
    pub max_violation: f64,
    pub relative_change: f64,
    pub sdp_status: Option<SolveStatus>,
    pub transmit: TransmitOutcome,
    pub reflection: ReflectionOutcome,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub initial_objective_w: f64,
    pub records: Vec<IterationRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Objective before the first iteration followed by each iteration's.
    pub fn objectives(&self) -> Vec<f64> {
        let mut v = alloc::vec![self.initial_objective_w];
        v.extend(self.records.iter().map(|r| r.objective_w));
        v
    }

    /// First iteration whose relative change fell below `eps`.
    pub fn settled_at(&self, eps: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.relative_change < eps)
            .map(|r| r.iteration)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,objective_W,max_violation,relative_change,sdp_status,transmit,reflection,wall_time_s\n",
        );
        let _ = writeln!(out, "0,{:e},0,,,init,,0", self.initial_objective_w);
        for r in &self.records {
            let status = r.sdp_status.map_or(String::from("none"), |s| format!("{s:?}"));
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{},{},{},{:.6}",
                r.iteration,
                r.objective_w,
                r.max_violation,
                r.relative_change,
                status,
                r.transmit.label(),
                r.reflection.label(),
                r.wall_time_s
            );
        }
        out
    }
}

/// Wall-clock source; the core crate has no timer of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct AoState {
    pub solution: BeamformingSolution,
    pub iteration: usize,
    pub objective: f64,
    pub trace: ConvergenceTrace,
    pub anchors: Anchors,
}

impl AoState {
    pub fn new(ch: &ChannelSet, solution: BeamformingSolution, cfg: &SystemConfig) -> Self {
        let objective = solution.total_power();
        AoState {
            anchors: Anchors::at(ch, &solution, cfg),
            solution,
            iteration: 0,
            objective,
            trace: ConvergenceTrace {
                initial_objective_w: objective,
                records: Vec::new(),
            },
        }
    }
}

/// Worst normalized constraint violation of a solution.
///
/// Ratio constraints are measured relative to their threshold, rate
/// constraints in bit/s/Hz and the energy constraint relative to the
/// required input power. Zero means every constraint holds.
pub fn max_violation(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig) -> f64 {
    FeasibilityReport::new(ch, sol, cfg).worst()
}

/// Per-constraint residuals of a solution under the configured scheme.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub sensing: Vec<f64>,
    pub tag: Vec<f64>,
    pub private: Vec<f64>,
    pub common: f64,
    /// `(1-α)p_in - Φ⁻¹(p_b)` in W; negative is a violation.
    pub eh_margin_w: Vec<f64>,
    pub eh_threshold_w: f64,
    pub unit_norm: f64,
    pub alpha_box: f64,
}

impl FeasibilityReport {
    pub fn new(ch: &ChannelSet, sol: &BeamformingSolution, cfg: &SystemConfig) -> Self {
        let t = cfg.scheme.toggles();
        let rep = evaluate(ch, sol, cfg);
        let rel = |target: f64, v: f64| ((target - v) / target).max(0.0);
        let mut out = FeasibilityReport {
            eh_threshold_w: cfg.eh_input_threshold(),
            ..Default::default()
        };
        if t.sensing_constraints {
            let g = cfg.sensing_sinr_min();
            out.sensing = rep.upsilon.iter().map(|&v| rel(g, v)).collect();
        }
        if t.tag_rate_constraints {
            let g = cfg.tag_sinr_min();
            out.tag = rep.gamma_t.iter().map(|&v| rel(g, v)).collect();
        }
        if t.has_private_streams() {
            out.private = rep
                .r_p_total
                .iter()
                .map(|&r| (cfg.private_rate_min - r).max(0.0))
                .collect();
        }
        if t.has_common_stream {
            let sum: f64 = sol.common_shares.iter().sum();
            out.common = (sum - rep.r_c).max(0.0);
        }
        out.eh_margin_w = rep
            .p_in
            .iter()
            .zip(&sol.alpha)
            .map(|(&p, &a)| (1.0 - a) * p - out.eh_threshold_w)
            .collect();
        out.unit_norm = sol
            .u
            .iter()
            .map(|u| (crate::numerics::norm(u) - 1.0).abs())
            .fold(0.0, f64::max);
        let lo = cfg.alpha_floor;
        out.alpha_box = sol
            .alpha
            .iter()
            .map(|&a| (lo - a).max(a - (1.0 - lo)).max(0.0))
            .fold(0.0, f64::max);
        out
    }

    pub fn worst(&self) -> f64 {
        let eh = self
            .eh_margin_w
            .iter()
            .map(|&m| (-m / self.eh_threshold_w).max(0.0))
            .fold(0.0, f64::max);
        self.sensing
            .iter()
            .chain(&self.tag)
            .chain(&self.private)
            .copied()
            .chain([self.common, eh, self.unit_norm, self.alpha_box])
            .fold(0.0, f64::max)
    }

    /// Acceptance tolerances for a returned solution.
    pub fn passes(&self) -> bool {
        self.sensing.iter().chain(&self.tag).all(|&v| v <= 1e-5)
            && self.private.iter().all(|&v| v <= 1e-4)
            && self.common <= 1e-4
            && self.eh_margin_w.iter().all(|&m| m >= -1e-9)
            && self.unit_norm <= 1e-9
            && self.alpha_box == 0.0
    }
}

pub fn run_ao<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<(BeamformingSolution, ConvergenceTrace), AoError> {
    run_ao_with_clock(ch, cfg, rng, &NoClock)
}

/// Runs the loop from a feasible start until the power reduction of an
/// iteration, relative to the previous power, drops below `epsilon`.
pub fn run_ao_with_clock<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut R,
    clock: &dyn Clock,
) -> Result<(BeamformingSolution, ConvergenceTrace), AoError> {
    cfg.validate()?;
    let start = initialize_feasible(ch, cfg, rng)?;
    let mut state = AoState::new(ch, start, cfg);
    let wrap = |iteration: usize| {
        move |e: AoError| AoError::Iteration { iteration, source: alloc::boxed::Box::new(e) }
    };
    while state.iteration < cfg.max_ao_iterations {
        let t0 = clock.seconds();
        let it = state.iteration + 1;
        let previous = state.objective;

        optimize_receive_beamformers(ch, &mut state.solution, cfg).map_err(wrap(it))?;
        state.anchors = Anchors::at(ch, &state.solution, cfg);
        let (candidate, mut transmit, status) =
            solve_transmit_subproblem(ch, &state, cfg, rng).map_err(wrap(it))?;
        if candidate.total_power() <= previous {
            state.solution = candidate;
        } else {
            log::debug!("iteration {it}: transmit update rejected by the monotonicity guard");
            transmit = TransmitOutcome::Rejected;
        }
        let reflection = optimize_reflection_coefficients(ch, &mut state.solution, cfg);

        state.objective = state.solution.total_power();
        state.anchors = Anchors::at(ch, &state.solution, cfg);
        state.iteration = it;
        let change = if previous > 0.0 {
            (previous - state.objective) / previous
        } else {
            0.0
        };
        state.trace.records.push(IterationRecord {
            iteration: it,
            objective_w: state.objective,
            max_violation: max_violation(ch, &state.solution, cfg),
            relative_change: change,
            sdp_status: status,
            transmit,
            reflection,
            wall_time_s: clock.seconds() - t0,
        });
        if change < cfg.epsilon {
            break;
        }
    }
    Ok((state.solution, state.trace))
}
