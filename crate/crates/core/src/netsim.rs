//! LTE-like physical layer.
//!
//! Each network is a hexagonal grid of base stations, optionally shifted by
//! a per-network offset. A UE is served by the base station it receives most
//! strongly; every other base station of the same network interferes at full
//! power. Capacity follows a capped Shannon map and is shared equally between
//! the UEs attached to the serving base station.
//!
//! Pathloss is log-distance, `PL(dB) = 128.1 + 37.6 log10(d / 1 km)`, with
//! the distance floored at 35 m. Noise is -101 dBm per 10 MHz.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
    pub min_distance_m: f64,
}

impl Default for PathlossModel {
    fn default() -> Self {
        Self {
            intercept_db: 128.1,
            slope_db: 37.6,
            min_distance_m: 35.0,
        }
    }
}

impl PathlossModel {
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        let d_km = distance_m.max(self.min_distance_m) / 1000.0;
        self.intercept_db + self.slope_db * d_km.log10()
    }
}

/// Radio constants shared by every network in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    #[serde(default)]
    pub pathloss: PathlossModel,
    /// Thermal noise plus noise figure over 10 MHz.
    #[serde(default = "default_noise")]
    pub noise_dbm_per_10mhz: f64,
    /// Spectral-efficiency ceiling in bit/s/Hz.
    #[serde(default = "default_cap")]
    pub efficiency_cap: f64,
}

fn default_noise() -> f64 {
    -101.0
}

fn default_cap() -> f64 {
    6.0
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            pathloss: PathlossModel::default(),
            noise_dbm_per_10mhz: default_noise(),
            efficiency_cap: default_cap(),
        }
    }
}

impl RadioParams {
    pub fn noise_dbm(&self, bandwidth_hz: f64) -> f64 {
        self.noise_dbm_per_10mhz + 10.0 * (bandwidth_hz / 10e6).log10()
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Axial hex coordinates of ring `r` around the origin, walking
/// counter-clockwise from the +x direction.
fn hex_ring(r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(0, 0)];
    }
    // axial directions, counter-clockwise
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let mut out = Vec::with_capacity(6 * r as usize);
    let (mut q, mut s) = (r, 0);
    for dir in DIRS.iter().cycle().skip(2).take(6) {
        for _ in 0..r {
            out.push((q, s));
            q += dir.0;
            s += dir.1;
        }
    }
    out
}

/// Base-station sites of a hexagonal layout with cell radius `radius_m`.
///
/// Sites fill rings outward from the center (1, 7, 19, 37, ... sites for
/// complete rings); a partial outer ring is filled counter-clockwise from +x.
/// The whole layout is translated by `offset * radius_m`.
pub fn hex_layout(count: usize, radius_m: f64, offset: (f64, f64)) -> Vec<Point> {
    let spacing = 3f64.sqrt() * radius_m;
    let shift = Point::new(offset.0 * radius_m, offset.1 * radius_m);
    let mut sites = Vec::with_capacity(count);
    let mut ring = 0;
    while sites.len() < count {
        for (q, s) in hex_ring(ring) {
            if sites.len() == count {
                break;
            }
            let x = spacing * (q as f64 + s as f64 / 2.0);
            let y = spacing * (s as f64 * 3f64.sqrt() / 2.0);
            sites.push(Point::new(x + shift.x, y + shift.y));
        }
        ring += 1;
    }
    sites
}

/// One operator's radio access network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub bs_positions: Vec<Point>,
    pub tx_power_dbm: Vec<f64>,
    pub bandwidth_hz: f64,
    pub cell_radius_m: f64,
    pub grid_offset: (f64, f64),
    /// Background UEs attached per base station.
    pub attached: Vec<u32>,
}

/// Serving cell and link quality at a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkQuality {
    pub serving_bs: usize,
    pub sinr: f64,
}

impl NetworkModel {
    pub fn hexagonal(
        count: usize,
        radius_m: f64,
        offset: (f64, f64),
        power_dbm: f64,
        bandwidth_hz: f64,
    ) -> Self {
        let bs_positions = hex_layout(count, radius_m, offset);
        let n = bs_positions.len();
        Self {
            bs_positions,
            tx_power_dbm: vec![power_dbm; n],
            bandwidth_hz,
            cell_radius_m: radius_m,
            grid_offset: offset,
            attached: vec![0; n],
        }
    }

    /// Scales site positions about the first (central) site so the farthest
    /// site lies `grid_radius_m` away. Single-site layouts are unchanged.
    pub fn rescale_grid(&mut self, grid_radius_m: f64) {
        let Some(&center) = self.bs_positions.first() else {
            return;
        };
        let reach = self
            .bs_positions
            .iter()
            .map(|p| p.distance(&center))
            .fold(0.0, f64::max);
        if reach == 0.0 {
            return;
        }
        let k = grid_radius_m / reach;
        for p in &mut self.bs_positions {
            *p = Point::new(
                center.x + k * (p.x - center.x),
                center.y + k * (p.y - center.y),
            );
        }
    }

    pub fn bs_count(&self) -> usize {
        self.bs_positions.len()
    }

    fn received_mw(&self, pos: &Point, pathloss: &PathlossModel) -> Vec<f64> {
        self.bs_positions
            .iter()
            .zip(&self.tx_power_dbm)
            .map(|(bs, p)| dbm_to_mw(p - pathloss.loss_db(pos.distance(bs))))
            .collect()
    }

    /// Strongest base station and its SINR against the rest of this network.
    pub fn link(&self, pos: &Point, noise_dbm: f64, pathloss: &PathlossModel) -> LinkQuality {
        assert!(
            !self.bs_positions.is_empty(),
            "network has no base stations"
        );
        let rx = self.received_mw(pos, pathloss);
        let (serving_bs, signal) =
            rx.iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, p)| {
                    if p > best.1 {
                        (i, p)
                    } else {
                        best
                    }
                });
        let interference: f64 = rx
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != serving_bs)
            .map(|(_, p)| p)
            .sum();
        LinkQuality {
            serving_bs,
            sinr: signal / (dbm_to_mw(noise_dbm) + interference),
        }
    }

    pub fn serving_bs(&self, pos: &Point, pathloss: &PathlossModel) -> usize {
        self.link(pos, f64::NEG_INFINITY, pathloss).serving_bs
    }

    /// Attaches each background UE to its strongest base station.
    pub fn attach_background(&mut self, ues: &[Point], pathloss: &PathlossModel) {
        self.attached = vec![0; self.bs_count()];
        for ue in ues {
            let bs = self.serving_bs(ue, pathloss);
            self.attached[bs] += 1;
        }
    }
}

/// Linear SINR at `ue_pos` with the default pathloss model.
pub fn sinr(ue_pos: &Point, net: &NetworkModel, noise_dbm: f64) -> f64 {
    net.link(ue_pos, noise_dbm, &PathlossModel::default()).sinr
}

/// Per-UE throughput in Mbps: capped Shannon capacity split `n_attached` ways.
pub fn max_throughput(
    sinr_linear: f64,
    bandwidth_hz: f64,
    n_attached: u32,
    efficiency_cap: f64,
) -> f64 {
    assert!(
        n_attached >= 1,
        "throughput share needs at least one attached UE"
    );
    let efficiency = (1.0 + sinr_linear.max(0.0)).log2().min(efficiency_cap);
    bandwidth_hz * efficiency / f64::from(n_attached) / 1e6
}

/// Straight-line walk at a fixed heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityState {
    pub position: Point,
    pub angle_rad: f64,
    pub walk_length_m: f64,
}

impl MobilityState {
    pub fn new(position: Point, angle_rad: f64, walk_length_m: f64) -> Self {
        debug_assert!((0.0..2.0 * PI).contains(&angle_rad));
        Self {
            position,
            angle_rad,
            walk_length_m,
        }
    }
}

pub fn mobility_step(m: MobilityState) -> MobilityState {
    MobilityState {
        position: Point::new(
            m.position.x + m.walk_length_m * m.angle_rad.cos(),
            m.position.y + m.walk_length_m * m.angle_rad.sin(),
        ),
        ..m
    }
}

/// Uniform point in a disc of `radius` around `center`.
pub fn uniform_in_disc<R: rand::Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}
