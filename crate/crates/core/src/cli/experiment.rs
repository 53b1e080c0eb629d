//! Experiment registry and sweep execution.

use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Modes, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{CeGroup, CeGroupLayout, GroupCase, SinglePower};
use crate::simulator::{estimate_success, McCounts};
use crate::traffic::{run_multislot_group, GroupTrace, Scheme};

/// Sweep variable whose values are the slots of a single multi-slot run.
pub const SLOT_SWEEP: &str = "slot";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentName {
    SinrSweep,
    SingleVsThree,
    DensitySweep,
    Timeseries,
    AcbSweep,
    BoSweep,
    Custom,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::SinrSweep,
        ExperimentName::SingleVsThree,
        ExperimentName::DensitySweep,
        ExperimentName::Timeseries,
        ExperimentName::AcbSweep,
        ExperimentName::BoSweep,
        ExperimentName::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::SinrSweep => "fig3_sinr_sweep",
            ExperimentName::SingleVsThree => "fig4_single_vs_three",
            ExperimentName::DensitySweep => "fig5_density_sweep",
            ExperimentName::Timeseries => "fig6_timeseries",
            ExperimentName::AcbSweep => "fig7_acb_sweep",
            ExperimentName::BoSweep => "fig8_bo_sweep",
            ExperimentName::Custom => "custom",
        }
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.name() == s || e.name().split('_').next() == Some(s.as_str()))
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentName::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!("unknown experiment {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

/// Cell configuration evaluated at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Three(GroupCase),
    Single(SinglePower),
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Three(case) => case.name(),
            Variant::Single(SinglePower::Inversion) => "single_pc",
            Variant::Single(SinglePower::Fixed) => "single_fixed",
        }
    }

    pub fn groups(self) -> &'static [CeGroup] {
        match self {
            Variant::Three(_) => &CeGroup::ALL,
            Variant::Single(_) => &CeGroup::ALL[..1],
        }
    }

    pub fn layout(self, cfg: &RunConfig) -> Result<CeGroupLayout> {
        match self {
            Variant::Three(case) => cfg.layout_for(case),
            Variant::Single(power) => CeGroupLayout::single_group(&cfg.network, power, cfg.single_repetition),
        }
    }
}

/// Which slots of each run become result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Report {
    AllSlots,
    LastSlot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// A configuration key (with optional unit suffix) or [`SLOT_SWEEP`].
    pub sweep_var: String,
    pub grid: Vec<f64>,
    pub variants: Vec<Variant>,
    pub schemes: Vec<Scheme>,
    pub slots: usize,
    pub report: Report,
    pub modes: Modes,
    pub trials: usize,
    pub master_seed: u64,
    pub base: RunConfig,
    /// Print one line per finished job to standard error.
    pub progress: bool,
}

impl ExperimentSpec {
    /// Builds a registered experiment on top of `base`. Settings present in
    /// `base` (modes, slots, schemes, sweep grid) override the defaults.
    pub fn named(name: ExperimentName, base: RunConfig) -> Result<Self> {
        use ExperimentName as E;
        let case = base.case;
        let scheme = base.traffic.scheme;
        let (sweep_var, grid, variants, schemes, slots, report): (&str, Vec<f64>, _, _, usize, _) = match name {
            E::SinrSweep => (
                "gamma_th_db",
                vec![0.0, 5.0, 10.0, 15.0, 20.0],
                vec![Variant::Three(GroupCase::Case1), Variant::Three(GroupCase::Case2)],
                vec![scheme],
                1,
                Report::LastSlot,
            ),
            E::SingleVsThree => (
                "gamma_th_db",
                vec![0.0, 5.0, 10.0, 15.0, 20.0],
                vec![
                    Variant::Three(case),
                    Variant::Single(SinglePower::Inversion),
                    Variant::Single(SinglePower::Fixed),
                ],
                vec![scheme],
                1,
                Report::LastSlot,
            ),
            E::DensitySweep => (
                "density_ratio",
                vec![10.0, 50.0, 100.0, 500.0, 1000.0],
                vec![Variant::Three(case)],
                vec![scheme],
                1,
                Report::LastSlot,
            ),
            E::Timeseries => (SLOT_SWEEP, Vec::new(), vec![Variant::Three(case)], Scheme::ALL.to_vec(), 10, Report::AllSlots),
            E::AcbSweep => (
                "q_acb",
                vec![1.0, 0.8, 0.6, 0.4, 0.2],
                vec![Variant::Three(case)],
                vec![Scheme::Acb],
                5,
                Report::LastSlot,
            ),
            E::BoSweep => (
                "t_bo",
                vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
                vec![Variant::Three(case)],
                vec![Scheme::Bo],
                5,
                Report::LastSlot,
            ),
            E::Custom => {
                let var = base
                    .sweep_var
                    .clone()
                    .ok_or_else(|| Error::Config("custom experiment needs sweep_var".into()))?;
                let report = if var == SLOT_SWEEP { Report::AllSlots } else { Report::LastSlot };
                let mut spec = ExperimentSpec {
                    name,
                    sweep_var: var,
                    grid: base.sweep_grid.clone(),
                    variants: vec![Variant::Three(case)],
                    schemes: if base.schemes.is_empty() { vec![scheme] } else { base.schemes.clone() },
                    slots: base.slots.unwrap_or(1),
                    report,
                    modes: base.modes.unwrap_or(Modes { analytic: false, sim: false }),
                    trials: base.trials,
                    master_seed: base.seed,
                    base,
                    progress: true,
                };
                spec.fill_slot_grid();
                spec.validate()?;
                return Ok(spec);
            }
        };
        let mut spec = ExperimentSpec {
            name,
            sweep_var: sweep_var.to_string(),
            grid: if base.sweep_grid.is_empty() { grid } else { base.sweep_grid.clone() },
            variants,
            schemes: if base.schemes.is_empty() { schemes } else { base.schemes.clone() },
            slots: base.slots.unwrap_or(slots),
            report,
            modes: base.modes.unwrap_or(Modes::ANALYTIC),
            trials: base.trials,
            master_seed: base.seed,
            base,
            progress: true,
        };
        spec.fill_slot_grid();
        spec.validate()?;
        Ok(spec)
    }

    /// Changes the horizon, keeping a slot sweep's grid in step.
    pub fn with_slots(mut self, slots: usize) -> Result<Self> {
        self.slots = slots;
        if self.sweep_var == SLOT_SWEEP {
            self.grid.clear();
            self.fill_slot_grid();
        }
        self.validate()?;
        Ok(self)
    }

    fn fill_slot_grid(&mut self) {
        if self.sweep_var == SLOT_SWEEP && self.grid.is_empty() {
            self.grid = (1..=self.slots).map(|s| s as f64).collect();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Config(format!("{}: no modes requested", self.name)));
        }
        if self.grid.is_empty() {
            return Err(Error::Config(format!("{}: sweep grid is empty", self.name)));
        }
        let up = self.grid.windows(2).all(|w| w[0] < w[1]);
        let down = self.grid.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::Config(format!("{}: sweep grid must be strictly sorted", self.name)));
        }
        if self.slots == 0 {
            return Err(Error::Config("slots must be >= 1".into()));
        }
        if self.modes.sim && self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.variants.is_empty() || self.schemes.is_empty() {
            return Err(Error::Config(format!("{}: no variants or schemes", self.name)));
        }
        if self.sweep_var == SLOT_SWEEP {
            let ok = self.grid.iter().all(|&s| s >= 1.0 && s.fract() == 0.0 && s as usize <= self.slots);
            if !ok {
                return Err(Error::Config(format!("slot grid must hold whole slots in 1..={}", self.slots)));
            }
        } else {
            self.base.clone().apply(&self.sweep_var, self.grid[0])?;
        }
        Ok(())
    }

    fn points(&self) -> Vec<Option<f64>> {
        if self.sweep_var == SLOT_SWEEP {
            vec![None]
        } else {
            self.grid.iter().map(|&v| Some(v)).collect()
        }
    }

    fn reported_slots(&self, point: Option<f64>) -> Vec<(usize, f64)> {
        match (point, self.report) {
            (None, _) => self.grid.iter().map(|&s| (s as usize, s)).collect(),
            (Some(v), Report::LastSlot) => vec![(self.slots, v)],
            (Some(v), Report::AllSlots) => (1..=self.slots).map(|s| (s, v)).collect(),
        }
    }
}

/// One line of output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub slot: usize,
    pub group: usize,
    pub case: String,
    pub scheme: String,
    pub mode: String,
    pub p_analytic: Option<f64>,
    pub p_mc: Option<f64>,
    pub ci_half: Option<f64>,
    pub diag: String,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.diag.starts_with("failed")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }
}

/// Rounds to the ten significant digits used in every output format.
pub fn round_sig10(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.9e}").parse().unwrap_or(x)
    } else {
        x
    }
}

struct Job {
    point: Option<f64>,
    variant: Variant,
    scheme: Scheme,
}

fn analytic_diag(trace: &GroupTrace, slot: usize) -> String {
    let s = &trace.success[slot - 1];
    format!(
        "terms={};tail={:.3e};truncated={};cancel={:.3e};mu_clamps={};r_clamps={}",
        s.terms, s.tail_mass, s.truncated, s.cancellation, trace.mu_clamps, trace.r_clamps
    )
}

fn run_job(spec: &ExperimentSpec, job: &Job) -> Vec<ResultRow> {
    let mut cfg = spec.base.clone();
    let prepared = match job.point {
        Some(v) => cfg.apply(&spec.sweep_var, v).and_then(|_| cfg.resolve()),
        None => cfg.resolve(),
    };
    let setup = prepared.and_then(|cfg| {
        let layout = job.variant.layout(&cfg)?;
        let mut traffic = cfg.traffic.with_scheme(job.scheme);
        traffic.horizon = spec.slots;
        Ok((cfg, layout, traffic))
    });

    let groups = job.variant.groups();
    let mut analytic: Vec<Result<GroupTrace>> = Vec::new();
    let mut sim: Option<Result<McCounts>> = None;
    let mut setup_err = None;
    match &setup {
        Ok((cfg, layout, traffic)) => {
            if spec.modes.analytic {
                analytic = groups
                    .iter()
                    .map(|&g| run_multislot_group(&cfg.network, layout, traffic, &cfg.analytic, g))
                    .collect();
            }
            if spec.modes.sim {
                sim = Some(estimate_success(
                    &cfg.network,
                    layout,
                    traffic,
                    spec.slots,
                    spec.trials,
                    spec.master_seed,
                    &cfg.sim,
                ));
            }
        }
        Err(e) => setup_err = Some(format!("failed: {e}")),
    }

    let mut rows = Vec::new();
    for (slot, sweep_value) in spec.reported_slots(job.point) {
        for (gi, &group) in groups.iter().enumerate() {
            let row = |mode: &str, p_analytic, p_mc, ci_half, diag| ResultRow {
                sweep_var: spec.sweep_var.clone(),
                sweep_value: round_sig10(sweep_value),
                slot,
                group: group.index(),
                case: job.variant.label().to_string(),
                scheme: job.scheme.name().to_string(),
                mode: mode.to_string(),
                p_analytic,
                p_mc,
                ci_half,
                diag,
            };
            if spec.modes.analytic {
                let r = match (&setup_err, analytic.get(gi)) {
                    (Some(e), _) => row("analytic", None, None, None, e.clone()),
                    (None, Some(Ok(trace))) => {
                        row("analytic", Some(round_sig10(trace.p[slot - 1])), None, None, analytic_diag(trace, slot))
                    }
                    (None, Some(Err(e))) => row("analytic", None, None, None, format!("failed: {e}")),
                    (None, None) => unreachable!("analytic results cover every group"),
                };
                rows.push(r);
            }
            if spec.modes.sim {
                let r = match (&setup_err, &sim) {
                    (Some(e), _) => row("sim", None, None, None, e.clone()),
                    (None, Some(Ok(counts))) => match counts.estimate(slot, group) {
                        Some(est) => row(
                            "sim",
                            None,
                            Some(round_sig10(est.mean)),
                            Some(round_sig10(est.ci_half)),
                            format!("trials={};attempts={};successes={}", est.trials, est.attempts, est.successes),
                        ),
                        None => row("sim", None, None, None, format!("trials={};attempts=0", counts.trials)),
                    },
                    (None, Some(Err(e))) => row("sim", None, None, None, format!("failed: {e}")),
                    (None, None) => unreachable!("simulation was requested"),
                };
                rows.push(r);
            }
        }
    }
    rows
}

/// Runs every (sweep point, variant, scheme) combination in parallel. Rows
/// come back in a fixed order and failures are recorded per row, so a
/// failing point never stops the sweep.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for point in spec.points() {
        for &variant in &spec.variants {
            for &scheme in &spec.schemes {
                jobs.push(Job { point, variant, scheme });
            }
        }
    }
    let done = AtomicUsize::new(0);
    let total = jobs.len();
    let per_job: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|job| {
            let rows = run_job(spec, job);
            if spec.progress {
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                let at = job.point.map(|v| format!(" {} = {v}", spec.sweep_var)).unwrap_or_default();
                let failed = rows.iter().filter(|r| r.failed()).count();
                eprintln!(
                    "[{n}/{total}] {}{at} {} {}{}",
                    spec.name,
                    job.variant.label(),
                    job.scheme,
                    if failed > 0 { format!(" ({failed} failed rows)") } else { String::new() }
                );
            }
            rows
        })
        .collect();
    Ok(ExperimentResult { experiment: spec.name.to_string(), rows: per_job.into_iter().flatten().collect() })
}
