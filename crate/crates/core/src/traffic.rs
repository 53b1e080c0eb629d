//! Multi-slot queue evolution under the four access-control schemes.
//!
//! Each device's backlog is approximated as Poisson with intensity
//! `mu_cum`; a slot's non-empty probability `A` and non-restrict probability
//! `R` set the active-contender density fed to the single-slot formulas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{rach_success_single_slot, AnalyticParams, GroupSlotInput, SlotSuccess};
use crate::error::{Error, Result};
use crate::geometry::{CeGroup, CeGroupLayout, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Baseline,
    Acb,
    Bo,
    AcbBo,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Baseline, Scheme::Acb, Scheme::Bo, Scheme::AcbBo];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Baseline => "baseline",
            Scheme::Acb => "acb",
            Scheme::Bo => "bo",
            Scheme::AcbBo => "acb_bo",
        }
    }

    pub fn uses_acb(self) -> bool {
        matches!(self, Scheme::Acb | Scheme::AcbBo)
    }

    pub fn uses_backoff(self) -> bool {
        matches!(self, Scheme::Bo | Scheme::AcbBo)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['&', '-'], "_").as_str() {
            "baseline" | "bl" => Ok(Scheme::Baseline),
            "acb" => Ok(Scheme::Acb),
            "bo" | "backoff" => Ok(Scheme::Bo),
            "acb_bo" | "acbbo" => Ok(Scheme::AcbBo),
            _ => Err(Error::Config(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    /// New packets per device per slot.
    pub mu_new: f64,
    pub scheme: Scheme,
    pub q_acb: f64,
    /// Backoff window, slots.
    pub t_bo: u32,
    /// Number of slots.
    pub horizon: usize,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { mu_new: 0.1, scheme: Scheme::Baseline, q_acb: 0.6, t_bo: 2, horizon: 1 }
    }
}

impl TrafficConfig {
    /// Per-slot intensity from the slot timing and the per-second arrival rate.
    pub fn mu_from_arrivals(t_r: f64, t_g: f64, eps_new: f64) -> f64 {
        (t_r + t_g) * eps_new
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Self {
        TrafficConfig { scheme, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_new >= 0.0 && self.mu_new.is_finite()) {
            return Err(Error::Config(format!("mu_new must be >= 0, got {}", self.mu_new)));
        }
        if !(0.0..=1.0).contains(&self.q_acb) {
            return Err(Error::Config(format!("q_acb must lie in [0, 1], got {}", self.q_acb)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        Ok(())
    }
}

/// `A` for a fresh queue.
pub fn nonempty_initial(mu_new: f64) -> f64 {
    -(-mu_new).exp_m1()
}

/// Queue state of one group in one slot, before its success probability is
/// known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotState {
    pub a: f64,
    pub r: f64,
    pub mu_cum: f64,
    /// `mu_cum` came out negative and was set to zero.
    pub mu_clamped: bool,
    /// `R` left `[0, 1]` and was clamped.
    pub r_clamped: bool,
}

/// Per-slot history of one group. Index 0 is slot 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTrace {
    pub group: CeGroup,
    /// Thinning probability of the group.
    pub g: f64,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub mu_cum: Vec<f64>,
    pub p: Vec<f64>,
    pub success: Vec<SlotSuccess>,
    pub mu_clamps: usize,
    pub r_clamps: usize,
}

impl GroupTrace {
    pub fn new(group: CeGroup, g: f64) -> Self {
        GroupTrace {
            group,
            g,
            a: Vec::new(),
            r: Vec::new(),
            mu_cum: Vec::new(),
            p: Vec::new(),
            success: Vec::new(),
            mu_clamps: 0,
            r_clamps: 0,
        }
    }

    /// Slots recorded so far.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Appends a slot state and its success probability.
    pub fn push(&mut self, state: SlotState, p: f64) {
        self.a.push(state.a);
        self.r.push(state.r);
        self.mu_cum.push(state.mu_cum);
        self.p.push(p);
        self.mu_clamps += state.mu_clamped as usize;
        self.r_clamps += state.r_clamped as usize;
    }

    fn last(&self) -> (f64, f64, f64, f64) {
        let t = self.len() - 1;
        (self.a[t], self.r[t], self.mu_cum[t], self.p[t])
    }
}

fn first_slot(mu_new: f64, r: f64) -> SlotState {
    SlotState { a: nonempty_initial(mu_new), r, mu_cum: 0.0, mu_clamped: false, r_clamped: false }
}

/// Backlog update shared by all schemes: arrivals minus expected departures.
fn advance_queue(mu_new: f64, mu_prev: f64, departure: f64) -> (f64, f64, bool) {
    let raw = mu_new + mu_prev - departure;
    let clamped = raw < 0.0;
    let mu_cum = raw.max(0.0);
    (mu_cum, 1.0 - (-mu_new - mu_cum).exp(), clamped)
}

fn require_history(trace: &GroupTrace) -> Result<()> {
    if trace.is_empty() {
        Err(Error::domain("traffic step", "slot t >= 2 needs the previous slot"))
    } else {
        Ok(())
    }
}

pub fn step_baseline(trace: &GroupTrace, mu_new: f64) -> Result<SlotState> {
    step_acb(trace, mu_new, 1.0)
}

/// Every non-empty device passes the barring check with probability `q`.
pub fn step_acb(trace: &GroupTrace, mu_new: f64, q: f64) -> Result<SlotState> {
    require_history(trace)?;
    let (a, _, mu_prev, p) = trace.last();
    let (mu_cum, a_t, mu_clamped) = advance_queue(mu_new, mu_prev, trace.g * q * p * a);
    Ok(SlotState { a: a_t, r: q, mu_cum, mu_clamped, r_clamped: false })
}

pub fn step_bo(trace: &GroupTrace, mu_new: f64, t_bo: u32) -> Result<SlotState> {
    step_acbbo(trace, mu_new, 1.0, t_bo)
}

/// Devices whose attempt failed within the last `t_bo` slots stay silent;
/// `q` scales the success weight of past attempts and the departures.
pub fn step_acbbo(trace: &GroupTrace, mu_new: f64, q: f64, t_bo: u32) -> Result<SlotState> {
    require_history(trace)?;
    let (a, r, mu_prev, p) = trace.last();
    let g = trace.g;
    let (mu_cum, a_t, mu_clamped) = advance_queue(mu_new, mu_prev, g * q * p * a * r);
    let t = trace.len();
    let window = (t_bo as usize).min(t);
    let deferred: f64 = (1..=window)
        .map(|s| {
            let i = t - s;
            (1.0 - g * q * trace.p[i]) * trace.a[i] * trace.r[i]
        })
        .sum();
    let raw = if a_t > 0.0 { 1.0 - deferred / a_t } else { 1.0 };
    let r_clamped = !(0.0..=1.0).contains(&raw);
    Ok(SlotState { a: a_t, r: raw.clamp(0.0, 1.0), mu_cum, mu_clamped, r_clamped })
}

/// Slot-1 state and the step rule of a scheme.
pub fn next_state(trace: &GroupTrace, traffic: &TrafficConfig) -> Result<SlotState> {
    let mu = traffic.mu_new;
    if trace.is_empty() {
        let r = if traffic.scheme == Scheme::Acb { traffic.q_acb } else { 1.0 };
        return Ok(first_slot(mu, r));
    }
    match traffic.scheme {
        Scheme::Baseline => step_baseline(trace, mu),
        Scheme::Acb => step_acb(trace, mu, traffic.q_acb),
        Scheme::Bo => step_bo(trace, mu, traffic.t_bo),
        Scheme::AcbBo => step_acbbo(trace, mu, traffic.q_acb, traffic.t_bo),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueTrace {
    pub scheme: Scheme,
    pub groups: Vec<GroupTrace>,
}

impl QueueTrace {
    pub fn group(&self, group: CeGroup) -> Option<&GroupTrace> {
        self.groups.iter().find(|g| g.group == group)
    }

    pub fn clamp_counts(&self) -> (usize, usize) {
        self.groups.iter().fold((0, 0), |(m, r), g| (m + g.mu_clamps, r + g.r_clamps))
    }
}

/// Runs the queue recursion of one group for `traffic.horizon` slots.
pub fn run_multislot_group(
    cfg: &NetworkConfig,
    layout: &CeGroupLayout,
    traffic: &TrafficConfig,
    params: &AnalyticParams,
    group: CeGroup,
) -> Result<GroupTrace> {
    traffic.validate()?;
    let mut trace = GroupTrace::new(group, layout.thinning[group.index()]);
    for _ in 0..traffic.horizon {
        let state = next_state(&trace, traffic)?;
        let input = GroupSlotInput::for_group(layout, cfg, group, state.a, state.r);
        let success = rach_success_single_slot(&input, layout, params, cfg)?;
        trace.push(state, success.p);
        trace.success.push(success);
    }
    Ok(trace)
}

/// Runs the queue recursion for `traffic.horizon` slots, evaluating the
/// single-slot success probability of every group in every slot.
pub fn run_multislot(
    cfg: &NetworkConfig,
    layout: &CeGroupLayout,
    traffic: &TrafficConfig,
    params: &AnalyticParams,
) -> Result<QueueTrace> {
    let groups = layout
        .groups()
        .iter()
        .map(|&g| run_multislot_group(cfg, layout, traffic, params, g))
        .collect::<Result<_>>()?;
    Ok(QueueTrace { scheme: traffic.scheme, groups })
}
