//! Closed-form single-slot RACH success probabilities.
//!
//! A tagged device succeeds when some repetition clears the SINR threshold on
//! all four symbol groups and no other same-cell device on the same preamble
//! gets through. The preamble success probability `Θ` is an inclusion–exclusion
//! sum over repetitions of Laplace transforms of the aggregate interference;
//! the collision part averages `(1 - Θ)^n` over the Voronoi-cell PMF of the
//! number of same-preamble contenders.

pub mod quad;
pub mod special;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CeGroup, CeGroupLayout, DistanceLaw, NetworkConfig, PowerModel};
use quad::{integrate, QuadOptions};
pub use special::lower_incomplete_gamma;
use special::{binomial_row, ln_gamma_fn};

/// Shape constant of the gamma approximation to the Voronoi cell area.
pub const VORONOI_C: f64 = 3.575;

/// Repetition counts from which the inclusion–exclusion sum is accumulated
/// with compensated summation.
pub const COMPENSATED_SUM_FROM_K: u32 = 64;

/// Slack allowed outside `[0, 1]` before a probability is reported as a
/// numerical inconsistency.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// Lower limit of the interference integral for fixed-power groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionRule {
    /// Outer radius of the group's annulus (`D_i`), or `D_1` for the
    /// Voronoi-tail law of group 2 in case 2.
    AsPrinted,
    /// Inner radius of the group's annulus (`D_{i-1}`).
    InnerEdge,
}

pub const DEFAULT_EXCLUSION: ExclusionRule = ExclusionRule::AsPrinted;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub c: f64,
    pub quad_rel_tol: f64,
    pub series_tail_tol: f64,
    pub n_max_cap: usize,
    pub exclusion: ExclusionRule,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        AnalyticParams {
            c: VORONOI_C,
            quad_rel_tol: 1e-9,
            series_tail_tol: 1e-8,
            n_max_cap: 2000,
            exclusion: DEFAULT_EXCLUSION,
        }
    }
}

impl AnalyticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol < 1.0) {
            return Err(Error::Config(format!("quad_rel_tol must be in (0, 1), got {}", self.quad_rel_tol)));
        }
        if !(self.series_tail_tol > 0.0 && self.series_tail_tol < 1.0) {
            return Err(Error::Config(format!("series_tail_tol must be in (0, 1), got {}", self.series_tail_tol)));
        }
        if self.n_max_cap < 1 {
            return Err(Error::Config("n_max_cap must be >= 1".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be > 0, got {}", self.c)));
        }
        Ok(())
    }
}

/// Per-group, per-slot inputs to the single-slot formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSlotInput {
    pub group: CeGroup,
    /// Non-empty probability.
    pub a: f64,
    /// Non-restrict probability.
    pub r: f64,
    /// Density of group devices on one preamble, per m².
    pub lambda_a: f64,
    /// Repetition value.
    pub k: u32,
}

impl GroupSlotInput {
    /// Input for `group` with the layout's density and repetition.
    pub fn for_group(layout: &CeGroupLayout, cfg: &NetworkConfig, group: CeGroup, a: f64, r: f64) -> Self {
        GroupSlotInput {
            group,
            a,
            r,
            lambda_a: layout.per_preamble_density(cfg, group),
            k: layout.repetitions[group.index()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) || !(0.0..=1.0).contains(&self.r) {
            return Err(Error::domain("GroupSlotInput", format!("A = {}, R = {} must lie in [0, 1]", self.a, self.r)));
        }
        if !(self.lambda_a >= 0.0 && self.lambda_a.is_finite()) {
            return Err(Error::domain("GroupSlotInput", format!("lambda_a = {} must be >= 0", self.lambda_a)));
        }
        if self.k == 0 || self.k > 128 {
            return Err(Error::domain("GroupSlotInput", format!("K = {} must be in 1..=128", self.k)));
        }
        Ok(())
    }

    /// Density of active contenders on the tagged preamble.
    pub fn active_density(&self) -> f64 {
        self.a * self.r * self.lambda_a
    }
}

/// `E[P^{2/alpha}]` of truncated path-loss-inversion transmit powers.
pub fn power_moment(rho: f64, p_ul: f64, alpha: f64, lambda_b: f64) -> Result<f64> {
    if !(rho > 0.0 && p_ul > 0.0 && lambda_b > 0.0) {
        return Err(Error::domain("power_moment", "rho, P and lambda_B must be positive"));
    }
    if !(alpha > 2.0) {
        return Err(Error::domain("power_moment", format!("alpha must be > 2, got {alpha}")));
    }
    if p_ul <= rho {
        return Err(Error::domain("power_moment", format!("need P > rho, got P = {p_ul}, rho = {rho}")));
    }
    let x = PI * lambda_b * (p_ul / rho).powf(2.0 / alpha);
    let g2 = lower_incomplete_gamma(2.0, x)?;
    Ok(rho.powf(2.0 / alpha) * g2 / (PI * lambda_b * -(-x).exp_m1()))
}

/// `1 - (1 + x)^{-l}` without cancellation for small `x`.
#[inline]
fn outage_kernel(x: f64, l: f64) -> f64 {
    -(-l * x.ln_1p()).exp_m1()
}

/// `∫_{u0}^∞ [1 - (1 + coeff u^{-α})^{-l}] u du`.
///
/// Split at the natural scale `s = coeff^{1/α}`; the unbounded piece is
/// mapped onto `(0, 1]` with `u = s' / v`.
fn tail_integral(u0: f64, coeff: f64, l: f64, alpha: f64, rel_tol: f64) -> Result<f64> {
    let g = |u: f64| outage_kernel(coeff * u.powf(-alpha), l) * u;
    let s = coeff.powf(1.0 / alpha);
    let opts = QuadOptions::relative(rel_tol);
    let (start, near) = if u0 >= s {
        (u0, 0.0)
    } else {
        (s, integrate(g, u0, s, &opts)?.value)
    };
    let far = integrate(
        |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let u = start / v;
            g(u) * start / (v * v)
        },
        0.0,
        1.0,
        &opts,
    )?
    .value;
    Ok(near + far)
}

fn check_alpha(func: &'static str, alpha: f64) -> Result<()> {
    if alpha > 2.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("interference integral diverges for alpha = {alpha} <= 2")))
    }
}

fn check_l(func: &'static str, l: u32) -> Result<()> {
    if l >= 4 && l % 4 == 0 {
        Ok(())
    } else {
        Err(Error::domain(func, format!("l = {l} must be a positive multiple of 4")))
    }
}

/// Interference integral for the path-loss-inversion group,
/// `∫_{γ^{-1/α}}^∞ [1 - (1 + y^{-α})^{-l}] y dy`.
pub fn cal_f0(gamma_th: f64, l0: u32, alpha: f64, rel_tol: f64) -> Result<f64> {
    check_alpha("cal_f0", alpha)?;
    check_l("cal_f0", l0)?;
    if !(gamma_th > 0.0) {
        return Err(Error::domain("cal_f0", "gamma_th must be > 0"));
    }
    tail_integral(gamma_th.powf(-1.0 / alpha), 1.0, l0 as f64, alpha, rel_tol)
}

/// Interference integral for fixed-power groups,
/// `∫_{D}^∞ [1 - (1 + γ r^α y^{-α})^{-l}] y dy`, evaluated as
/// `r² ∫_{D/r}^∞ [1 - (1 + γ u^{-α})^{-l}] u du`.
pub fn cal_fi(gamma_th: f64, l: u32, alpha: f64, r: f64, d_lower: f64, rel_tol: f64) -> Result<f64> {
    check_alpha("cal_fi", alpha)?;
    check_l("cal_fi", l)?;
    if !(gamma_th > 0.0 && d_lower >= 0.0) {
        return Err(Error::domain("cal_fi", "gamma_th must be > 0 and D >= 0"));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    Ok(r * r * tail_integral(d_lower / r, gamma_th, l as f64, alpha, rel_tol)?)
}

/// Probability that the tagged device's cell holds `n` other active
/// contenders on its preamble; `mu` is the mean active contenders per BS.
pub fn interferer_count_pmf(n: u64, mu: f64, c: f64) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    let ln_p = (c + 1.0) * c.ln() + ln_gamma_fn(nf + c + 1.0) + nf * mu.ln()
        - ln_gamma_fn(c + 1.0)
        - ln_gamma_fn(nf + 1.0)
        - (nf + c + 1.0) * (mu + c).ln();
    ln_p.exp()
}

/// Preamble success probability with its cancellation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreambleSuccess {
    pub value: f64,
    /// Largest inclusion–exclusion term over the result; large values mean
    /// significant digits were lost.
    pub cancellation: f64,
    /// Absolute error bound of the repetition sum.
    pub error_bound: f64,
}

/// Largest tolerated absolute error of an inclusion–exclusion sum.
pub const CANCELLATION_TOL: f64 = 1e-6;

/// One inclusion–exclusion term `q_k = exp(-noise - interference)`.
struct RepetitionTerm {
    noise: f64,
    interference: f64,
    /// Relative accuracy of the interference exponent.
    rel_err: f64,
}

impl RepetitionTerm {
    fn value(&self) -> f64 {
        (-self.noise - self.interference).exp()
    }

    /// Relative error of `value()` from the exponent's error and rounding.
    fn value_err(&self) -> f64 {
        self.interference * self.rel_err + 4.0 * f64::EPSILON * (1.0 + self.noise + self.interference)
    }
}

struct SumOutcome {
    value: f64,
    max_term: f64,
    bound: f64,
}

/// Alternating sum `Σ_k (-1)^{k+1} C(K,k) q_k` with its largest term and an
/// absolute error bound.
struct InclusionExclusion {
    binom: Vec<f64>,
    compensated: bool,
}

impl InclusionExclusion {
    fn new(k: u32) -> Self {
        InclusionExclusion { binom: binomial_row(k), compensated: k >= COMPENSATED_SUM_FROM_K }
    }

    fn k(&self) -> u32 {
        (self.binom.len() - 1) as u32
    }

    /// `q(k)` is called for `k = 1..=K` in order; returning `None` means the
    /// term and every later one is zero.
    fn sum(&self, mut q: impl FnMut(u32) -> Result<Option<RepetitionTerm>>) -> Result<SumOutcome> {
        let mut sum = 0.0;
        let mut comp = 0.0;
        let mut max_term = 0.0f64;
        let mut bound = 0.0;
        for k in 1..=self.k() {
            let Some(rt) = q(k)? else { break };
            let term = self.binom[k as usize] * rt.value();
            max_term = max_term.max(term);
            bound += term * (rt.value_err() + 2.0 * f64::EPSILON);
            let signed = if k % 2 == 1 { term } else { -term };
            if self.compensated {
                // Neumaier
                let t = sum + signed;
                if sum.abs() >= signed.abs() {
                    comp += (sum - t) + signed;
                } else {
                    comp += (signed - t) + sum;
                }
                sum = t;
            } else {
                sum += signed;
            }
        }
        if bound > CANCELLATION_TOL {
            return Err(Error::Cancellation { k: self.k(), bound, max_term });
        }
        Ok(SumOutcome { value: sum + comp, max_term, bound })
    }
}

/// Tolerance for the interference integrals inside the repetition sum; the
/// alternating sum amplifies their error by up to `C(K, K/2)`.
fn inner_tol(params: &AnalyticParams) -> f64 {
    (params.quad_rel_tol * 1e-3).max(1e-13)
}

fn finish_probability(what: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() || value < -PROBABILITY_SLACK || value > 1.0 + PROBABILITY_SLACK {
        return Err(Error::Consistency { what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn cancellation_ratio(max_term: f64, value: f64) -> f64 {
    if max_term == 0.0 {
        1.0
    } else if value.abs() > 0.0 {
        max_term / value.abs()
    } else {
        f64::INFINITY
    }
}

// exp(-745) underflows to zero
const EXP_UNDERFLOW: f64 = 745.0;

/// `Θ` for a path-loss-inversion group (group 0 or the single group with
/// power control).
pub fn preamble_success_group0(
    input: &GroupSlotInput,
    layout: &CeGroupLayout,
    params: &AnalyticParams,
    cfg: &NetworkConfig,
) -> Result<PreambleSuccess> {
    input.validate()?;
    if layout.power_model(input.group) != PowerModel::Inversion {
        return Err(Error::domain("preamble_success_group0", format!("{:?} is not power-controlled", input.group)));
    }
    let alpha = cfg.alpha;
    let gamma = cfg.gamma_th;
    let noise_per_symbol = gamma * cfg.sigma2 / cfg.rho;
    let density = input.active_density();
    let interference_scale = if density > 0.0 {
        2.0 * PI * density * (gamma / cfg.rho).powf(2.0 / alpha) * power_moment(cfg.rho, cfg.p_ul, alpha, cfg.lambda_b)?
    } else {
        0.0
    };
    let tol = inner_tol(params);
    let ie = InclusionExclusion::new(input.k);
    let out = ie.sum(|k| {
        let l = 4 * k;
        let noise = l as f64 * noise_per_symbol;
        if noise > EXP_UNDERFLOW {
            return Ok(None);
        }
        let interference = if interference_scale > 0.0 {
            interference_scale * cal_f0(gamma, l, alpha, tol)?
        } else {
            0.0
        };
        Ok(Some(RepetitionTerm { noise, interference, rel_err: tol }))
    })?;
    Ok(PreambleSuccess {
        value: finish_probability("preamble success (inversion group)", out.value)?,
        cancellation: cancellation_ratio(out.max_term, out.value),
        error_bound: out.bound,
    })
}

/// Lower limit of the interference integral for a fixed-power group.
pub fn exclusion_radius(law: &DistanceLaw, rule: ExclusionRule) -> f64 {
    match (law, rule) {
        (DistanceLaw::Annulus { outer, .. }, ExclusionRule::AsPrinted) => *outer,
        (DistanceLaw::Annulus { inner, .. }, ExclusionRule::InnerEdge) => *inner,
        (DistanceLaw::VoronoiTail { inner, .. }, _) => *inner,
    }
}

/// `Θ` for a fixed-power group: the repetition sum averaged over the
/// serving-distance law of the group.
pub fn preamble_success_groupi(
    input: &GroupSlotInput,
    layout: &CeGroupLayout,
    params: &AnalyticParams,
    cfg: &NetworkConfig,
) -> Result<PreambleSuccess> {
    input.validate()?;
    if layout.power_model(input.group) != PowerModel::Fixed {
        return Err(Error::domain("preamble_success_groupi", format!("{:?} is not a fixed-power group", input.group)));
    }
    let law = layout.distance_law(cfg, input.group);
    let d_excl = exclusion_radius(&law, params.exclusion);
    let alpha = cfg.alpha;
    let gamma = cfg.gamma_th;
    let noise_coeff = gamma * cfg.sigma2 / cfg.p_ul;
    let interference_scale = 2.0 * PI * input.active_density();
    let tol = inner_tol(params);
    let ie = InclusionExclusion::new(input.k);
    let mut max_term = 0.0f64;
    let mut max_bound = 0.0f64;
    let mut failure: Option<Error> = None;

    // Σ_k (-1)^{k+1} C(K,k) P(first k repetitions all succeed | r)
    let mut conditional = |r: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        let per_symbol = noise_coeff * r.powf(alpha);
        let res = ie.sum(|k| {
            let l = 4 * k;
            let noise = l as f64 * per_symbol;
            if noise > EXP_UNDERFLOW {
                return Ok(None);
            }
            let interference = if interference_scale > 0.0 {
                interference_scale * cal_fi(gamma, l, alpha, r, d_excl, tol)?
            } else {
                0.0
            };
            Ok(Some(RepetitionTerm { noise, interference, rel_err: tol }))
        });
        match res {
            Ok(out) => {
                max_term = max_term.max(out.max_term);
                max_bound = max_bound.max(out.bound);
                out.value
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };

    let opts = QuadOptions::relative(params.quad_rel_tol).with_abs(1e-300);
    let value = match law {
        DistanceLaw::Annulus { inner, outer } => {
            let q = integrate(|r| conditional(r) * law.pdf(r), inner, outer, &opts);
            q?.value
        }
        DistanceLaw::VoronoiTail { inner, lambda_b } => {
            // t = exp(-lambda_B pi (r² - D_1²)) turns f_R(r) dr into dt on (0, 1]
            let q = integrate(
                |t| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    let r = (inner * inner - t.ln() / (PI * lambda_b)).sqrt();
                    conditional(r)
                },
                0.0,
                1.0,
                &opts,
            );
            q?.value
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(PreambleSuccess {
        value: finish_probability("preamble success (fixed-power group)", value)?,
        cancellation: cancellation_ratio(max_term, value),
        error_bound: max_bound,
    })
}

/// `Θ` dispatched on the group's power model.
pub fn preamble_success(
    input: &GroupSlotInput,
    layout: &CeGroupLayout,
    params: &AnalyticParams,
    cfg: &NetworkConfig,
) -> Result<PreambleSuccess> {
    match layout.power_model(input.group) {
        PowerModel::Inversion => preamble_success_group0(input, layout, params, cfg),
        PowerModel::Fixed => preamble_success_groupi(input, layout, params, cfg),
    }
}

/// Result of the collision-averaged series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotSuccess {
    /// RACH success probability.
    pub p: f64,
    /// Preamble success probability `Θ`.
    pub theta: f64,
    pub cancellation: f64,
    /// Number of series terms summed.
    pub terms: usize,
    /// PMF mass not covered by the summed terms; bounds the truncation error.
    pub tail_mass: f64,
    /// The cap was reached with tail mass still above tolerance.
    pub truncated: bool,
}

/// `Σ_n O[n] Θ (1 - Θ)^n`, truncated once the PMF mass reaches
/// `1 - series_tail_tol` or at `n_max_cap` terms.
pub fn collision_series(theta: f64, mu: f64, params: &AnalyticParams) -> (f64, usize, f64, bool) {
    let c = params.c;
    let target = 1.0 - params.series_tail_tol;
    let mut cum = 0.0;
    let mut sum = 0.0;
    let mut ln_pmf = (c + 1.0) * (c / (mu + c)).ln();
    let ln_ratio = if mu > 0.0 { (mu / (mu + c)).ln() } else { f64::NEG_INFINITY };
    let survive = 1.0 - theta;
    let mut power = 1.0;
    let mut n = 0usize;
    loop {
        let pmf = ln_pmf.exp();
        cum += pmf;
        sum += pmf * theta * power;
        n += 1;
        if cum >= target || n >= params.n_max_cap || mu <= 0.0 {
            break;
        }
        let nf = (n - 1) as f64;
        ln_pmf += ((nf + c + 1.0) / (nf + 1.0)).ln() + ln_ratio;
        power *= survive;
    }
    let tail = (1.0 - cum).max(0.0);
    (sum, n, tail, tail > params.series_tail_tol)
}

/// Single-slot RACH success probability of a random active device.
pub fn rach_success_single_slot(
    input: &GroupSlotInput,
    layout: &CeGroupLayout,
    params: &AnalyticParams,
    cfg: &NetworkConfig,
) -> Result<SlotSuccess> {
    params.validate()?;
    let theta = preamble_success(input, layout, params, cfg)?;
    let mu = input.active_density() / cfg.lambda_b;
    let (p, terms, tail_mass, truncated) = collision_series(theta.value, mu, params);
    Ok(SlotSuccess {
        p: finish_probability("RACH success", p)?,
        theta: theta.value,
        cancellation: theta.cancellation,
        terms,
        tail_mass,
        truncated,
    })
}

#[cfg(test)]
mod tests;
