//! Plain-text run configuration.
//!
//! One `key = value [unit]` pair per line, `#` starts a comment. Units may be
//! given as a trailing token or as a key suffix (`sigma2_dbm = -116.4`).
//! Values without a unit are SI: watts, linear ratios, per m², metres.
//!
//! | key | unit choices | default |
//! |-----|--------------|---------|
//! | `lambda_b`, `lambda_d` | `per_km2`, `per_m2` | 0.1, 10 per km² |
//! | `density_ratio` | | overrides `lambda_d` as a multiple of `lambda_b` |
//! | `area_radius` | `m`, `km` | radius of a 2000 km² disc |
//! | `area` | `km2`, `m2` | 2000 km² |
//! | `alpha` | | 4 |
//! | `p_dl`, `p_ul`, `rho`, `sigma2`, `omega` | `dbm`, `w` | 35, 22, -120, -116.4, -135.3 dBm |
//! | `delta_1`, `delta_2`, `gamma_th` | `db`, `linear` | 35, 30, 10 dB |
//! | `s`, `k` | three integers | 12, 12, 24 and 2, 4, 16 |
//! | `k_single` | | 4 |
//! | `case` | `case1`, `case2` | case2 |
//! | `mu_new` or `t_r`, `t_g`, `eps_new` | | 0.1 |
//! | `scheme` | `baseline`, `acb`, `bo`, `acb_bo` | baseline |
//! | `q_acb`, `t_bo`, `slots` | | 0.6, 2, experiment default |
//! | `c`, `quad_rel_tol`, `series_tail_tol`, `n_max_cap`, `exclusion` | | 3.575, 1e-9, 1e-8, 2000, as_printed |
//! | `trials`, `seed`, `guard_fraction` | | 200, 1, 0.5 |
//! | `experiment`, `sweep_var`, `sweep_grid`, `modes`, `schemes` | | custom sweeps |

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticParams, ExclusionRule};
use crate::error::{Error, Result};
use crate::geometry::{CeGroupLayout, GroupCase, NetworkConfig, SinglePower};
use crate::simulator::SimOptions;
use crate::traffic::{Scheme, TrafficConfig};
use crate::units::{db_to_linear, dbm_to_watts, per_km2_to_per_m2};

/// Which estimators a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub analytic: bool,
    pub sim: bool,
}

impl Modes {
    pub const ANALYTIC: Modes = Modes { analytic: true, sim: false };
    pub const SIM: Modes = Modes { analytic: false, sim: true };
    pub const BOTH: Modes = Modes { analytic: true, sim: true };

    pub fn is_empty(&self) -> bool {
        !self.analytic && !self.sim
    }
}

impl std::str::FromStr for Modes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut m = Modes { analytic: false, sim: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "analytic" => m.analytic = true,
                "sim" | "simulation" | "mc" => m.sim = true,
                "both" => m = Modes::BOTH,
                other => return Err(Error::Config(format!("unknown mode {other:?}"))),
            }
        }
        Ok(m)
    }
}

/// Everything a run needs, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub subcarriers: [u32; 3],
    pub repetitions: [u32; 3],
    /// Repetition value of the single-group comparison layouts.
    pub single_repetition: u32,
    pub case: GroupCase,
    pub traffic: TrafficConfig,
    pub analytic: AnalyticParams,
    pub sim: SimOptions,
    pub trials: usize,
    pub seed: u64,
    pub density_ratio: Option<f64>,
    pub arrivals: Option<[f64; 3]>,
    pub experiment: Option<String>,
    pub sweep_var: Option<String>,
    pub sweep_grid: Vec<f64>,
    pub modes: Option<Modes>,
    pub schemes: Vec<Scheme>,
    pub slots: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: NetworkConfig::default(),
            subcarriers: [12, 12, 24],
            repetitions: [2, 4, 16],
            single_repetition: 4,
            case: GroupCase::Case2,
            traffic: TrafficConfig::default(),
            analytic: AnalyticParams::default(),
            sim: SimOptions::default(),
            trials: 200,
            seed: 1,
            density_ratio: None,
            arrivals: None,
            experiment: None,
            sweep_var: None,
            sweep_grid: Vec::new(),
            modes: None,
            schemes: Vec::new(),
            slots: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Unit {
    Si,
    Dbm,
    Db,
    PerKm2,
    Km,
    Km2,
}

fn parse_unit(s: &str) -> Option<Unit> {
    Some(match s.to_ascii_lowercase().as_str() {
        "w" | "linear" | "per_m2" | "m" | "m2" => Unit::Si,
        "dbm" => Unit::Dbm,
        "db" => Unit::Db,
        "per_km2" => Unit::PerKm2,
        "km" => Unit::Km,
        "km2" => Unit::Km2,
        _ => return None,
    })
}

const KEY_SUFFIXES: [(&str, Unit); 6] = [
    ("_dbm", Unit::Dbm),
    ("_db", Unit::Db),
    ("_per_km2", Unit::PerKm2),
    ("_km2", Unit::Km2),
    ("_km", Unit::Km),
    ("_m", Unit::Si),
];

#[derive(Debug, Clone, Copy)]
enum Quantity {
    Density,
    Length,
    Area,
    Power,
    Ratio,
}

impl Quantity {
    fn convert(self, x: f64, unit: Unit) -> Option<f64> {
        match (self, unit) {
            (_, Unit::Si) => Some(x),
            (Quantity::Density, Unit::PerKm2) => Some(per_km2_to_per_m2(x)),
            (Quantity::Length, Unit::Km) => Some(x * 1e3),
            (Quantity::Area, Unit::Km2) => Some(x * 1e6),
            (Quantity::Power, Unit::Dbm) => Some(dbm_to_watts(x)),
            (Quantity::Ratio, Unit::Db) => Some(db_to_linear(x)),
            _ => None,
        }
    }
}

fn split_key(key: &str) -> (&str, Option<Unit>) {
    for (suffix, unit) in KEY_SUFFIXES {
        if let Some(base) = key.strip_suffix(suffix) {
            if !base.is_empty() {
                return (base, Some(unit));
            }
        }
    }
    (key, None)
}

fn number(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("expected a number, got {s:?}")).and_then(|x| {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("expected a finite number, got {s:?}"))
        }
    })
}

fn integer<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().parse::<T>().map_err(|_| format!("expected a non-negative integer, got {s:?}"))
}

fn list<T>(s: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split([',', ' ']).map(str::trim).filter(|p| !p.is_empty()).map(f).collect()
}

fn triple(s: &str) -> std::result::Result<[u32; 3], String> {
    let v = list(s, integer::<u32>)?;
    v.try_into().map_err(|v: Vec<u32>| format!("expected three integers, got {}", v.len()))
}

impl RunConfig {
    /// Sets one key from its textual value, converting units to SI.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim().to_ascii_lowercase();
        let (base, key_unit) = split_key(&key);
        let mut value = value.trim();
        let mut unit = key_unit;
        if let Some((head, last)) = value.rsplit_once(char::is_whitespace) {
            if let Some(u) = parse_unit(last) {
                if key_unit.is_some_and(|k| k != u) {
                    return Err(format!("unit {last:?} contradicts the key suffix of `{key}`"));
                }
                unit = Some(u);
                value = head.trim();
            }
        }
        let unit = unit.unwrap_or(Unit::Si);
        let quantity = |q: Quantity| -> std::result::Result<f64, String> {
            q.convert(number(value)?, unit).ok_or_else(|| format!("unit not valid for `{base}`"))
        };
        let plain = || -> std::result::Result<f64, String> {
            if unit != Unit::Si {
                return Err(format!("`{base}` takes no unit"));
            }
            number(value)
        };
        let net = &mut self.network;
        match base {
            "lambda_b" => net.lambda_b = quantity(Quantity::Density)?,
            "lambda_d" => net.lambda_d = quantity(Quantity::Density)?,
            "density_ratio" => self.density_ratio = Some(plain()?),
            "area_radius" => net.area_radius = quantity(Quantity::Length)?,
            "area" => net.area_radius = (quantity(Quantity::Area)? / PI).sqrt(),
            "alpha" => net.alpha = plain()?,
            "p_dl" => net.p_dl = quantity(Quantity::Power)?,
            "omega" => net.omega = quantity(Quantity::Power)?,
            "rho" => net.rho = quantity(Quantity::Power)?,
            "p_ul" => net.p_ul = quantity(Quantity::Power)?,
            "sigma2" => net.sigma2 = quantity(Quantity::Power)?,
            "delta_1" => net.delta_1 = quantity(Quantity::Ratio)?,
            "delta_2" => net.delta_2 = quantity(Quantity::Ratio)?,
            "gamma_th" => net.gamma_th = quantity(Quantity::Ratio)?,
            "s" => self.subcarriers = triple(value)?,
            "k" => self.repetitions = triple(value)?,
            "k_single" => self.single_repetition = integer(value)?,
            "case" => {
                self.case = match value.to_ascii_lowercase().as_str() {
                    "case1" | "1" => GroupCase::Case1,
                    "case2" | "2" => GroupCase::Case2,
                    other => return Err(format!("case must be case1 or case2, got {other:?}")),
                }
            }
            "mu_new" => self.traffic.mu_new = plain()?,
            "t_r" | "t_g" | "eps_new" => {
                let slot = ["t_r", "t_g", "eps_new"].iter().position(|k| *k == base).unwrap();
                let mut a = self.arrivals.unwrap_or([f64::NAN; 3]);
                a[slot] = plain()?;
                self.arrivals = Some(a);
            }
            "scheme" => self.traffic.scheme = value.parse().map_err(|e: Error| e.to_string())?,
            "q_acb" => self.traffic.q_acb = plain()?,
            "t_bo" => self.traffic.t_bo = whole(plain()?)?,
            "slots" => self.slots = Some(integer(value)?),
            "c" => self.analytic.c = plain()?,
            "quad_rel_tol" => self.analytic.quad_rel_tol = plain()?,
            "series_tail_tol" => self.analytic.series_tail_tol = plain()?,
            "n_max_cap" => self.analytic.n_max_cap = integer(value)?,
            "exclusion" => {
                self.analytic.exclusion = match value.to_ascii_lowercase().as_str() {
                    "as_printed" => ExclusionRule::AsPrinted,
                    "inner_edge" => ExclusionRule::InnerEdge,
                    other => return Err(format!("exclusion must be as_printed or inner_edge, got {other:?}")),
                }
            }
            "trials" => self.trials = integer(value)?,
            "seed" => self.seed = integer(value)?,
            "guard_fraction" => self.sim.guard_fraction = plain()?,
            "experiment" => self.experiment = Some(value.to_string()),
            "sweep_var" => self.sweep_var = Some(value.to_ascii_lowercase()),
            "sweep_grid" => self.sweep_grid = list(value, number)?,
            "modes" => self.modes = Some(value.parse().map_err(|e: Error| e.to_string())?),
            "schemes" => self.schemes = list(value, |p| p.parse::<Scheme>().map_err(|e| e.to_string()))?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies a numeric sweep value to `key` (which may carry a unit suffix).
    pub fn apply(&mut self, key: &str, value: f64) -> Result<()> {
        self.set(key, &format!("{value:?}")).map_err(|msg| Error::Config(format!("sweep `{key}`: {msg}")))
    }

    /// Resolves derived settings and checks every invariant.
    pub fn resolve(mut self) -> Result<Self> {
        if let Some(ratio) = self.density_ratio {
            self.network.lambda_d = ratio * self.network.lambda_b;
        }
        if let Some([t_r, t_g, eps]) = self.arrivals {
            if [t_r, t_g, eps].iter().any(|x| x.is_nan()) {
                return Err(Error::Config("t_r, t_g and eps_new must be given together".into()));
            }
            self.traffic.mu_new = TrafficConfig::mu_from_arrivals(t_r, t_g, eps);
        }
        self.network.validate()?;
        self.traffic.validate()?;
        self.analytic.validate()?;
        if !(self.sim.guard_fraction > 0.0 && self.sim.guard_fraction <= 1.0) {
            return Err(Error::Config(format!("guard_fraction must be in (0, 1], got {}", self.sim.guard_fraction)));
        }
        self.layout()?;
        CeGroupLayout::single_group(&self.network, SinglePower::Inversion, self.single_repetition)?;
        Ok(self)
    }

    /// The three-group layout for the configured case.
    pub fn layout(&self) -> Result<CeGroupLayout> {
        self.layout_for(self.case)
    }

    pub fn layout_for(&self, case: GroupCase) -> Result<CeGroupLayout> {
        CeGroupLayout::three_groups(&self.network, self.subcarriers, self.repetitions, case)
    }
}

fn whole(x: f64) -> std::result::Result<u32, String> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as u32)
    } else {
        Err(format!("expected a non-negative integer, got {x}"))
    }
}

/// Parses configuration text. `origin` names the source in error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { path: origin.to_string(), msg: format!("line {}: {msg}", n + 1) };
        let (key, value) = line.split_once('=').ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
        cfg.set(key, value).map_err(parse_err)?;
    }
    cfg.resolve()
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, &path.display().to_string())
}
