//! Spatial model: coverage-enhancement radii, group thinning, distance laws
//! and Poisson deployments of base stations and devices.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{purpose, stream_rng};
use crate::units::{db_to_linear, dbm_to_watts, per_km2_to_per_m2};

/// Total NPRACH subcarriers available in a cell.
pub const MAX_SUBCARRIERS: u32 = 48;
pub const SUBCARRIER_CHOICES: [u32; 3] = [12, 24, 48];
pub const K0_CHOICES: [u32; 2] = [1, 2];
pub const K12_CHOICES: [u32; 6] = [4, 8, 16, 32, 64, 128];

/// Physical and deployment parameters, strictly SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Base-station density, per m².
    pub lambda_b: f64,
    /// Device density, per m².
    pub lambda_d: f64,
    /// Radius of the simulated disc, m.
    pub area_radius: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Downlink transmit power, W.
    pub p_dl: f64,
    /// Downlink noise power, W.
    pub omega: f64,
    /// Downlink SNR threshold separating groups 0 and 1 (linear).
    pub delta_1: f64,
    /// Downlink SNR threshold separating groups 1 and 2 (linear).
    pub delta_2: f64,
    /// Uplink power-control receive target for group 0, W.
    pub rho: f64,
    /// Fixed uplink transmit power for groups 1 and 2, W.
    pub p_ul: f64,
    /// Uplink noise power at the base station, W.
    pub sigma2: f64,
    /// SINR decoding threshold (linear).
    pub gamma_th: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let area_m2 = 2000.0e6;
        NetworkConfig {
            lambda_b: per_km2_to_per_m2(0.1),
            lambda_d: per_km2_to_per_m2(10.0),
            area_radius: (area_m2 / PI).sqrt(),
            alpha: 4.0,
            p_dl: dbm_to_watts(35.0),
            omega: dbm_to_watts(-135.3),
            delta_1: db_to_linear(35.0),
            delta_2: db_to_linear(30.0),
            rho: dbm_to_watts(-120.0),
            p_ul: dbm_to_watts(22.0),
            sigma2: dbm_to_watts(-116.4),
            gamma_th: db_to_linear(10.0),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_B", self.lambda_b),
            ("area_radius", self.area_radius),
            ("P_DL", self.p_dl),
            ("omega", self.omega),
            ("delta_1", self.delta_1),
            ("delta_2", self.delta_2),
            ("rho", self.rho),
            ("P_ul", self.p_ul),
            ("sigma2", self.sigma2),
            ("gamma_th", self.gamma_th),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        // an empty device process is allowed; it degenerates every statistic
        if !(self.lambda_d.is_finite() && self.lambda_d >= 0.0) {
            return Err(Error::Config(format!("lambda_D must be finite and >= 0, got {}", self.lambda_d)));
        }
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::Config(format!("alpha must be > 2, got {}", self.alpha)));
        }
        if self.delta_1 <= self.delta_2 {
            return Err(Error::Config(format!(
                "delta_1 ({}) must exceed delta_2 ({})",
                self.delta_1, self.delta_2
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        PI * self.area_radius * self.area_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CeGroup {
    G0,
    G1,
    G2,
}

impl CeGroup {
    pub const ALL: [CeGroup; 3] = [CeGroup::G0, CeGroup::G1, CeGroup::G2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<CeGroup> {
        CeGroup::ALL.get(i).copied()
    }
}

/// How the outer boundary of group 2 is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupCase {
    /// Group 2 ends at the fixed radius `D_2`.
    Case1,
    /// Group 2 extends to the edge of the Voronoi cell.
    Case2,
}

impl GroupCase {
    pub fn name(self) -> &'static str {
        match self {
            GroupCase::Case1 => "case1",
            GroupCase::Case2 => "case2",
        }
    }
}

/// Uplink power rule of a single-group network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SinglePower {
    /// Path-loss inversion to the target `rho`.
    Inversion,
    /// Fixed transmit power `P_ul`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupingMode {
    ThreeGroups,
    /// One group covering the whole cell with all 48 subcarriers.
    Single(SinglePower),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerModel {
    /// `rho * r^alpha`.
    Inversion,
    /// Constant `P_ul`.
    Fixed,
}

/// Distribution of the distance between a random device of a group and its
/// serving base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceLaw {
    /// `2r / (outer² - inner²)` on `[inner, outer]`.
    Annulus { inner: f64, outer: f64 },
    /// `2 pi lambda_B r exp(-lambda_B pi (r² - inner²))` on `[inner, inf)`.
    VoronoiTail { inner: f64, lambda_b: f64 },
}

impl DistanceLaw {
    pub fn pdf(&self, r: f64) -> f64 {
        match *self {
            DistanceLaw::Annulus { inner, outer } => {
                if r < inner || r > outer {
                    0.0
                } else {
                    2.0 * r / (outer * outer - inner * inner)
                }
            }
            DistanceLaw::VoronoiTail { inner, lambda_b } => {
                if r < inner {
                    0.0
                } else {
                    2.0 * PI * lambda_b * r * (-lambda_b * PI * (r * r - inner * inner)).exp()
                }
            }
        }
    }

    pub fn inner(&self) -> f64 {
        match *self {
            DistanceLaw::Annulus { inner, .. } | DistanceLaw::VoronoiTail { inner, .. } => inner,
        }
    }

    /// Outer edge of the support (`inf` for the Voronoi tail).
    pub fn outer(&self) -> f64 {
        match *self {
            DistanceLaw::Annulus { outer, .. } => outer,
            DistanceLaw::VoronoiTail { .. } => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Maximum distances for groups 0 and 1 from the downlink SNR thresholds, and
/// the mean cell radius `1/sqrt(pi lambda_B)` used as the outer edge of group 2.
pub fn compute_radii(cfg: &NetworkConfig) -> Radii {
    let inv_alpha = -1.0 / cfg.alpha;
    Radii {
        d0: (cfg.delta_1 * cfg.omega / cfg.p_dl).powf(inv_alpha),
        d1: (cfg.delta_2 * cfg.omega / cfg.p_dl).powf(inv_alpha),
        d2: 1.0 / (PI * cfg.lambda_b).sqrt(),
    }
}

/// Probability that a device falls into each group, from the void
/// probabilities of the base-station process.
pub fn thinning_probabilities(lambda_b: f64, radii: &Radii, case: GroupCase) -> Result<[f64; 3]> {
    let Radii { d0, d1, d2 } = *radii;
    if !(d0 > 0.0 && d0 < d1) {
        return Err(Error::Config(format!("need 0 < D_0 < D_1, got D_0 = {d0}, D_1 = {d1}")));
    }
    let void = |d: f64| (-lambda_b * PI * d * d).exp();
    let g0 = -(-lambda_b * PI * d0 * d0).exp_m1();
    let g1 = void(d0) - void(d1);
    let g2 = match case {
        GroupCase::Case1 => {
            if d2 <= d1 {
                return Err(Error::Case1Infeasible { d0, d1, d2 });
            }
            void(d1) - void(d2)
        }
        GroupCase::Case2 => void(d1),
    };
    Ok([g0, g1, g2])
}

/// Density of devices contending on one particular preamble of a group.
pub fn effective_density(lambda_i: f64, subcarriers: u32) -> f64 {
    debug_assert!(subcarriers >= 1);
    lambda_i / subcarriers as f64
}

/// Group radii, subcarrier split, repetitions and thinning for one cell
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeGroupLayout {
    pub radii: Radii,
    pub subcarriers: [u32; 3],
    pub repetitions: [u32; 3],
    pub case: GroupCase,
    pub thinning: [f64; 3],
    pub mode: GroupingMode,
}

impl CeGroupLayout {
    pub fn three_groups(
        cfg: &NetworkConfig,
        subcarriers: [u32; 3],
        repetitions: [u32; 3],
        case: GroupCase,
    ) -> Result<Self> {
        cfg.validate()?;
        for (i, s) in subcarriers.iter().enumerate() {
            if !SUBCARRIER_CHOICES.contains(s) {
                return Err(Error::Config(format!("S_{i} must be one of 12, 24, 48, got {s}")));
            }
        }
        let total: u32 = subcarriers.iter().sum();
        if total > MAX_SUBCARRIERS {
            return Err(Error::Config(format!("S_0 + S_1 + S_2 = {total} exceeds {MAX_SUBCARRIERS}")));
        }
        let [k0, k1, k2] = repetitions;
        if !K0_CHOICES.contains(&k0) {
            return Err(Error::Config(format!("K_0 must be 1 or 2, got {k0}")));
        }
        for (i, k) in [(1, k1), (2, k2)] {
            if !K12_CHOICES.contains(&k) {
                return Err(Error::Config(format!("K_{i} must be one of 4..128 (powers of two), got {k}")));
            }
        }
        if !(k0 < k1 && k1 < k2) {
            return Err(Error::Config(format!("need K_0 < K_1 < K_2, got {k0}, {k1}, {k2}")));
        }
        let radii = compute_radii(cfg);
        let thinning = thinning_probabilities(cfg.lambda_b, &radii, case)?;
        Ok(CeGroupLayout { radii, subcarriers, repetitions, case, thinning, mode: GroupingMode::ThreeGroups })
    }

    /// A single group spanning the whole cell on all 48 subcarriers.
    pub fn single_group(cfg: &NetworkConfig, power: SinglePower, repetition: u32) -> Result<Self> {
        cfg.validate()?;
        if !(K0_CHOICES.contains(&repetition) || K12_CHOICES.contains(&repetition)) {
            return Err(Error::Config(format!("repetition must be 1, 2, 4, ..., 128, got {repetition}")));
        }
        Ok(CeGroupLayout {
            radii: compute_radii(cfg),
            subcarriers: [MAX_SUBCARRIERS, 0, 0],
            repetitions: [repetition, 0, 0],
            case: GroupCase::Case2,
            thinning: [1.0, 0.0, 0.0],
            mode: GroupingMode::Single(power),
        })
    }

    /// Same geometry with different repetition values.
    pub fn with_repetitions(&self, repetitions: [u32; 3]) -> Self {
        CeGroupLayout { repetitions, ..self.clone() }
    }

    pub fn groups(&self) -> &'static [CeGroup] {
        match self.mode {
            GroupingMode::ThreeGroups => &CeGroup::ALL,
            GroupingMode::Single(_) => &CeGroup::ALL[..1],
        }
    }

    pub fn is_single(&self) -> bool {
        matches!(self.mode, GroupingMode::Single(_))
    }

    /// Label written to result tables for this layout's group-2 model.
    pub fn case_label(&self) -> &'static str {
        match self.mode {
            GroupingMode::ThreeGroups => self.case.name(),
            GroupingMode::Single(SinglePower::Inversion) => "single_pc",
            GroupingMode::Single(SinglePower::Fixed) => "single_fixed",
        }
    }

    pub fn power_model(&self, group: CeGroup) -> PowerModel {
        match (self.mode, group) {
            (GroupingMode::ThreeGroups, CeGroup::G0) => PowerModel::Inversion,
            (GroupingMode::ThreeGroups, _) => PowerModel::Fixed,
            (GroupingMode::Single(SinglePower::Inversion), _) => PowerModel::Inversion,
            (GroupingMode::Single(SinglePower::Fixed), _) => PowerModel::Fixed,
        }
    }

    /// Transmit power of a device of `group` at distance `dist` from its
    /// serving base station. Inversion is capped at the fixed maximum `P_ul`.
    pub fn tx_power(&self, cfg: &NetworkConfig, group: CeGroup, dist: f64) -> f64 {
        match self.power_model(group) {
            PowerModel::Inversion => (cfg.rho * dist.powf(cfg.alpha)).min(cfg.p_ul),
            PowerModel::Fixed => cfg.p_ul,
        }
    }

    /// Group membership from the distance to the serving base station.
    /// `None` means the device is outside every group (beyond `D_2` in case 1).
    pub fn classify(&self, dist: f64) -> Option<CeGroup> {
        match self.mode {
            GroupingMode::Single(_) => Some(CeGroup::G0),
            GroupingMode::ThreeGroups => {
                let Radii { d0, d1, d2 } = self.radii;
                if dist <= d0 {
                    Some(CeGroup::G0)
                } else if dist <= d1 {
                    Some(CeGroup::G1)
                } else {
                    match self.case {
                        GroupCase::Case2 => Some(CeGroup::G2),
                        GroupCase::Case1 if dist <= d2 => Some(CeGroup::G2),
                        GroupCase::Case1 => None,
                    }
                }
            }
        }
    }

    pub fn group_density(&self, cfg: &NetworkConfig, group: CeGroup) -> f64 {
        self.thinning[group.index()] * cfg.lambda_d
    }

    /// `lambda_i^a`: density of group devices on one given preamble.
    pub fn per_preamble_density(&self, cfg: &NetworkConfig, group: CeGroup) -> f64 {
        effective_density(self.group_density(cfg, group), self.subcarriers[group.index()])
    }

    /// First global preamble index of the group's subcarrier range.
    pub fn preamble_offset(&self, group: CeGroup) -> u32 {
        self.subcarriers[..group.index()].iter().sum()
    }

    pub fn total_preambles(&self) -> u32 {
        self.groups().iter().map(|g| self.subcarriers[g.index()]).sum()
    }

    pub fn distance_law(&self, cfg: &NetworkConfig, group: CeGroup) -> DistanceLaw {
        distance_pdf(self, cfg, group)
    }
}

/// Serving-distance law of a random device in `group`: uniform on the group's
/// annulus, or the truncated nearest-neighbour law for group 2 in case 2.
pub fn distance_pdf(layout: &CeGroupLayout, cfg: &NetworkConfig, group: CeGroup) -> DistanceLaw {
    let Radii { d0, d1, d2 } = layout.radii;
    match layout.mode {
        GroupingMode::Single(_) => DistanceLaw::Annulus { inner: 0.0, outer: d2 },
        GroupingMode::ThreeGroups => match group {
            CeGroup::G0 => DistanceLaw::Annulus { inner: 0.0, outer: d0 },
            CeGroup::G1 => DistanceLaw::Annulus { inner: d0, outer: d1 },
            CeGroup::G2 => match layout.case {
                GroupCase::Case1 => DistanceLaw::Annulus { inner: d1, outer: d2 },
                GroupCase::Case2 => DistanceLaw::VoronoiTail { inner: d1, lambda_b: cfg.lambda_b },
            },
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, o: &Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.dist2(o).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// One realization of base stations and devices with nearest-BS association.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub bs_points: Vec<Point>,
    pub device_points: Vec<Point>,
    pub assoc: Vec<usize>,
    pub dist: Vec<f64>,
    pub group: Vec<Option<CeGroup>>,
}

impl Deployment {
    /// Builds the association and group labels for given point sets.
    pub fn from_points(layout: &CeGroupLayout, bs_points: Vec<Point>, device_points: Vec<Point>) -> Self {
        let index = GridIndex::new(&bs_points);
        let mut assoc = Vec::with_capacity(device_points.len());
        let mut dist = Vec::with_capacity(device_points.len());
        for p in &device_points {
            let (b, d) = index.nearest(&bs_points, p);
            assoc.push(b);
            dist.push(d);
        }
        let group = dist.iter().map(|&d| layout.classify(d)).collect();
        Deployment { bs_points, device_points, assoc, dist, group }
    }

    pub fn num_devices(&self) -> usize {
        self.device_points.len()
    }

    /// Whether the device's serving base station lies within `fraction` of
    /// the disc radius, i.e. the device is counted in statistics.
    pub fn in_guard_zone(&self, device: usize, area_radius: f64, fraction: f64) -> bool {
        self.bs_points[self.assoc[device]].norm() <= fraction * area_radius
    }
}

/// Bound on resampling when a realization has no base station.
pub const MAX_BS_RESAMPLE: u32 = 64;

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as usize
}

fn uniform_in_disc<R: Rng>(rng: &mut R, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let th = 2.0 * PI * rng.random::<f64>();
    Point::new(r * th.cos(), r * th.sin())
}

/// Samples independent Poisson processes of base stations and devices on the
/// configured disc. Deterministic in `seed`.
pub fn sample_deployment(cfg: &NetworkConfig, layout: &CeGroupLayout, seed: u64) -> Result<Deployment> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, &[purpose::DEPLOYMENT]);
    let area = cfg.area();
    let mut bs_points = Vec::new();
    let mut attempts = 0;
    while bs_points.is_empty() {
        if attempts == MAX_BS_RESAMPLE {
            return Err(Error::NoBaseStations { attempts });
        }
        attempts += 1;
        let n = poisson_count(&mut rng, cfg.lambda_b * area);
        bs_points = (0..n).map(|_| uniform_in_disc(&mut rng, cfg.area_radius)).collect();
    }
    let n_dev = poisson_count(&mut rng, cfg.lambda_d * area);
    let device_points = (0..n_dev).map(|_| uniform_in_disc(&mut rng, cfg.area_radius)).collect();
    Ok(Deployment::from_points(layout, bs_points, device_points))
}

/// Uniform bucket grid for nearest-point queries over a fixed point set.
struct GridIndex {
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl GridIndex {
    fn new(points: &[Point]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        if points.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 1.0, 1.0);
        }
        let w = (max_x - min_x).max(1e-9);
        let h = (max_y - min_y).max(1e-9);
        // about two points per bucket
        let per_side = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let cell = (w.max(h) / per_side as f64).max(1e-9);
        let nx = ((w / cell).floor() as usize + 1).max(1);
        let ny = ((h / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x - min_x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - min_y) / cell) as usize).min(ny - 1);
            buckets[cy * nx + cx].push(i as u32);
        }
        GridIndex { min_x, min_y, cell, nx, ny, buckets }
    }

    fn nearest(&self, points: &[Point], q: &Point) -> (usize, f64) {
        let fx = ((q.x - self.min_x) / self.cell).floor();
        let fy = ((q.y - self.min_y) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as i64;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as i64;
        // distance from q to the boundary of its (clamped) home cell region
        let outside = {
            let bx0 = self.min_x + cx as f64 * self.cell;
            let by0 = self.min_y + cy as f64 * self.cell;
            let dx = (bx0 - q.x).max(q.x - (bx0 + self.cell)).max(0.0);
            let dy = (by0 - q.y).max(q.y - (by0 + self.cell)).max(0.0);
            dx.max(dy)
        };
        let mut best = (usize::MAX, f64::INFINITY);
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            for gy in (cy - ring)..=(cy + ring) {
                if gy < 0 || gy >= self.ny as i64 {
                    continue;
                }
                let edge_row = gy == cy - ring || gy == cy + ring;
                let step = if edge_row { 1 } else { (2 * ring).max(1) };
                let mut gx = cx - ring;
                while gx <= cx + ring {
                    if gx >= 0 && gx < self.nx as i64 {
                        for &i in &self.buckets[gy as usize * self.nx + gx as usize] {
                            let d2 = points[i as usize].dist2(q);
                            if d2 < best.1 || (d2 == best.1 && (i as usize) < best.0) {
                                best = (i as usize, d2);
                            }
                        }
                    }
                    gx += step;
                }
            }
            // any cell in ring + 1 is at least ring * cell + outside away
            let reach = ring as f64 * self.cell + outside;
            if best.0 != usize::MAX && best.1.sqrt() <= reach {
                break;
            }
        }
        (best.0, best.1.sqrt())
    }
}
