//! Slot-level Monte Carlo of random access over Poisson deployments.
//!
//! Every trial samples base stations and devices, then runs the slots in
//! order: arrivals, barring and backoff, preamble choice, per-symbol SINR
//! with fresh Rayleigh fading for each repetition, and same-cell collision
//! resolution. Statistics are kept only for devices whose serving base
//! station lies in the inner guard disc.

mod stats;

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_deployment, CeGroup, CeGroupLayout, Deployment, NetworkConfig};
use crate::seeding::{derive_seed, purpose, stream_rng};
use crate::traffic::TrafficConfig;
pub use stats::{McEstimate, Z95};

/// Symbol groups per preamble repetition.
pub const SYMBOL_GROUPS: usize = 4;

/// Fraction of the disc radius inside which serving base stations are
/// measured.
pub const DEFAULT_GUARD_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contention {
    /// Interference from all same-preamble devices and same-cell collisions.
    Full,
    /// Each attempt sees only thermal noise and never collides.
    NoiseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub guard_fraction: f64,
    pub contention: Contention,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { guard_fraction: DEFAULT_GUARD_FRACTION, contention: Contention::Full }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub buffer: u32,
    pub bo_remaining: u32,
    pub group: Option<CeGroup>,
    pub serving_bs: usize,
    pub dist: f64,
    pub tx_power: f64,
    /// Serving base station is inside the guard disc.
    pub measured: bool,
}

pub fn init_states(dep: &Deployment, layout: &CeGroupLayout, cfg: &NetworkConfig, opts: &SimOptions) -> Vec<DeviceState> {
    (0..dep.num_devices())
        .map(|j| {
            let group = dep.group[j];
            let dist = dep.dist[j];
            DeviceState {
                buffer: 0,
                bo_remaining: 0,
                group,
                serving_bs: dep.assoc[j],
                dist,
                tx_power: group.map_or(0.0, |g| layout.tx_power(cfg, g, dist)),
                measured: dep.in_guard_zone(j, cfg.area_radius, opts.guard_fraction),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub attempts: u64,
    /// Preamble received at the serving base station.
    pub received: u64,
    /// Received but lost to a same-cell collision.
    pub collisions: u64,
    pub successes: u64,
}

impl GroupCounts {
    fn add(&mut self, o: &GroupCounts) {
        self.attempts += o.attempts;
        self.received += o.received;
        self.collisions += o.collisions;
        self.successes += o.successes;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub device: usize,
    pub preamble: u32,
    pub received: bool,
    pub success: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    /// Tallies over measured devices, by group.
    pub groups: [GroupCounts; 3],
    /// Every attempt in the slot, in device order.
    pub attempts: Vec<Attempt>,
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u32
}

/// Whether any of `k` repetitions clears `gamma` on all symbol groups.
fn preamble_received<R: Rng>(
    rng: &mut R,
    signal: f64,
    interferers: &[f64],
    sigma2: f64,
    gamma: f64,
    k: u32,
) -> bool {
    'rep: for _ in 0..k {
        for _ in 0..SYMBOL_GROUPS {
            let s: f64 = Exp1.sample(rng);
            let mut i = 0.0;
            for &p in interferers {
                let h: f64 = Exp1.sample(rng);
                i += p * h;
            }
            if signal * s < gamma * (i + sigma2) {
                continue 'rep;
            }
        }
        return true;
    }
    false
}

/// Arrivals, barring and backoff; returns the active devices with their
/// global preamble indices, in device order.
pub fn select_active(
    states: &mut [DeviceState],
    layout: &CeGroupLayout,
    traffic: &TrafficConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, u32)> {
    let scheme = traffic.scheme;
    let mut chosen = Vec::new();
    for (j, st) in states.iter_mut().enumerate() {
        let Some(group) = st.group else { continue };
        st.buffer += poisson(rng, traffic.mu_new);
        if st.buffer == 0 {
            continue;
        }
        if scheme.uses_backoff() && st.bo_remaining > 0 {
            st.bo_remaining -= 1;
            continue;
        }
        if scheme.uses_acb() && rng.random::<f64>() >= traffic.q_acb {
            continue;
        }
        let pre = layout.preamble_offset(group) + rng.random_range(0..layout.subcarriers[group.index()]);
        chosen.push((j, pre));
    }
    chosen
}

/// SINR test and same-cell collision resolution for the given attempts.
pub fn resolve_attempts(
    dep: &Deployment,
    states: &[DeviceState],
    layout: &CeGroupLayout,
    cfg: &NetworkConfig,
    opts: &SimOptions,
    chosen: &[(usize, u32)],
    rng: &mut ChaCha8Rng,
) -> Vec<Attempt> {
    let n_pre = layout.total_preambles() as usize;
    let mut by_preamble: Vec<Vec<usize>> = vec![Vec::new(); n_pre];
    for &(j, pre) in chosen {
        by_preamble[pre as usize].push(j);
    }
    let alpha = cfg.alpha;
    let mut attempts = Vec::with_capacity(chosen.len());
    let mut interferers = Vec::new();
    for &(j, pre) in chosen {
        let st = &states[j];
        let group = st.group.expect("only grouped devices attempt");
        let bs = &dep.bs_points[st.serving_bs];
        let signal = st.tx_power * st.dist.powf(-alpha);
        interferers.clear();
        if opts.contention == Contention::Full {
            for &m in &by_preamble[pre as usize] {
                if m != j {
                    let d = dep.device_points[m].dist(bs);
                    interferers.push(states[m].tx_power * d.powf(-alpha));
                }
            }
        }
        let k = layout.repetitions[group.index()];
        let received = preamble_received(rng, signal, &interferers, cfg.sigma2, cfg.gamma_th, k);
        attempts.push(Attempt { device: j, preamble: pre, received, success: false });
    }

    if opts.contention == Contention::Full {
        // a received preamble succeeds only if no other device of the cell
        // got the same preamble through
        let mut received_in_cell: HashMap<(usize, u32), u32> = HashMap::new();
        for a in attempts.iter().filter(|a| a.received) {
            *received_in_cell.entry((states[a.device].serving_bs, a.preamble)).or_default() += 1;
        }
        for a in attempts.iter_mut() {
            a.success = a.received && received_in_cell[&(states[a.device].serving_bs, a.preamble)] == 1;
        }
    } else {
        for a in attempts.iter_mut() {
            a.success = a.received;
        }
    }
    attempts
}

/// Advances every device by one slot and resolves the random access.
pub fn run_slot(
    dep: &Deployment,
    states: &mut [DeviceState],
    layout: &CeGroupLayout,
    cfg: &NetworkConfig,
    traffic: &TrafficConfig,
    opts: &SimOptions,
    rng: &mut ChaCha8Rng,
) -> SlotOutcome {
    assert_eq!(states.len(), dep.num_devices(), "state vector does not match the deployment");
    let chosen = select_active(states, layout, traffic, rng);
    let attempts = resolve_attempts(dep, states, layout, cfg, opts, &chosen, rng);
    let mut groups = [GroupCounts::default(); 3];
    for a in &attempts {
        let st = &mut states[a.device];
        if a.success {
            st.buffer -= 1;
        } else if traffic.scheme.uses_backoff() {
            st.bo_remaining = traffic.t_bo;
        }
        if st.measured {
            let c = &mut groups[st.group.expect("grouped").index()];
            c.attempts += 1;
            c.received += a.received as u64;
            c.collisions += (a.received && !a.success) as u64;
            c.successes += a.success as u64;
        }
    }
    SlotOutcome { groups, attempts }
}

/// Counts pooled over trials, indexed by slot then group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCounts {
    pub trials: usize,
    pub slots: Vec<[GroupCounts; 3]>,
}

impl McCounts {
    fn zero(slots: usize) -> Self {
        McCounts { trials: 0, slots: vec![[GroupCounts::default(); 3]; slots] }
    }

    fn merge(mut self, other: McCounts) -> Self {
        self.trials += other.trials;
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            for g in 0..3 {
                a[g].add(&b[g]);
            }
        }
        self
    }

    /// Success rate of `group` in `slot` (1-based); `None` without attempts.
    pub fn estimate(&self, slot: usize, group: CeGroup) -> Option<McEstimate> {
        let c = &self.slots[slot - 1][group.index()];
        McEstimate::wilson(c.successes, c.attempts, self.trials)
    }
}

fn check_run(trials: usize, slots: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if slots == 0 {
        return Err(Error::Config("slots must be >= 1".into()));
    }
    Ok(())
}

/// Simulates one trial for `slots` slots.
pub fn run_trial(
    cfg: &NetworkConfig,
    layout: &CeGroupLayout,
    traffic: &TrafficConfig,
    slots: usize,
    master_seed: u64,
    trial: u64,
    opts: &SimOptions,
) -> Result<McCounts> {
    let dep = sample_deployment(cfg, layout, derive_seed(master_seed, &[trial]))?;
    let mut states = init_states(&dep, layout, cfg, opts);
    let mut counts = McCounts::zero(slots);
    counts.trials = 1;
    for slot in 0..slots {
        let mut rng = stream_rng(master_seed, &[trial, purpose::SLOT, slot as u64]);
        let out = run_slot(&dep, &mut states, layout, cfg, traffic, opts, &mut rng);
        counts.slots[slot] = out.groups;
    }
    Ok(counts)
}

/// Runs `trials` independent deployments in parallel and pools the counts.
/// The result depends only on the inputs, never on thread scheduling.
pub fn estimate_success(
    cfg: &NetworkConfig,
    layout: &CeGroupLayout,
    traffic: &TrafficConfig,
    slots: usize,
    trials: usize,
    master_seed: u64,
    opts: &SimOptions,
) -> Result<McCounts> {
    check_run(trials, slots)?;
    traffic.validate()?;
    let per_trial: Vec<McCounts> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, layout, traffic, slots, master_seed, t, opts))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().fold(McCounts::zero(slots), McCounts::merge))
}

/// Histogram of other active same-cell, same-preamble devices seen by a
/// measured active device, per group. `activity[i]` is the probability that
/// a group-`i` device is active (`A * R`).
pub fn empirical_interferer_pmf(
    cfg: &NetworkConfig,
    layout: &CeGroupLayout,
    activity: [f64; 3],
    trials: usize,
    seed: u64,
) -> Result<[Vec<f64>; 3]> {
    check_run(trials, 1)?;
    let opts = SimOptions::default();
    let hists: Vec<[Vec<u64>; 3]> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<[Vec<u64>; 3]> {
            let dep = sample_deployment(cfg, layout, derive_seed(seed, &[t]))?;
            let mut rng = stream_rng(seed, &[t, purpose::PMF]);
            let mut cell_count: HashMap<(usize, u32), u64> = HashMap::new();
            let mut active = Vec::new();
            for j in 0..dep.num_devices() {
                let Some(g) = dep.group[j] else { continue };
                if rng.random::<f64>() >= activity[g.index()] {
                    continue;
                }
                let pre = layout.preamble_offset(g) + rng.random_range(0..layout.subcarriers[g.index()]);
                *cell_count.entry((dep.assoc[j], pre)).or_default() += 1;
                active.push((j, g, pre));
            }
            let mut hist: [Vec<u64>; 3] = Default::default();
            for (j, g, pre) in active {
                if !dep.in_guard_zone(j, cfg.area_radius, opts.guard_fraction) {
                    continue;
                }
                let n = (cell_count[&(dep.assoc[j], pre)] - 1) as usize;
                let h = &mut hist[g.index()];
                if h.len() <= n {
                    h.resize(n + 1, 0);
                }
                h[n] += 1;
            }
            Ok(hist)
        })
        .collect::<Result<_>>()?;
    let mut total: [Vec<u64>; 3] = Default::default();
    for h in hists {
        for g in 0..3 {
            if total[g].len() < h[g].len() {
                total[g].resize(h[g].len(), 0);
            }
            for (a, b) in total[g].iter_mut().zip(&h[g]) {
                *a += b;
            }
        }
    }
    Ok(total.map(|h| {
        let n: u64 = h.iter().sum();
        if n == 0 {
            vec![1.0]
        } else {
            h.iter().map(|&c| c as f64 / n as f64).collect()
        }
    }))
}

/// Total-variation distance between two PMFs on `0..`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let covered: f64 = (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum();
    // mass beyond the longer support
    let tail = (1.0 - p.iter().sum::<f64>()).max(0.0) + (1.0 - q.iter().sum::<f64>()).max(0.0);
    0.5 * (covered + tail)
}

#[cfg(test)]
mod tests;
