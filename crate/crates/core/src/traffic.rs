//! Vehicle traffic: window-level density maps, per-slot vehicle populations
//! with channel gains, and Poisson task arrivals.
//!
//! Densities come either from a synthetic diurnal pattern or from a CSV
//! trace with header `window,region,density`. Within a window, vehicles are
//! redrawn every slot from the window's density.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::domain::{Point, SliceSpec, Topology};
use crate::error::{Error, Result};

/// Mean vehicle count per region for one planning window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMap {
    pub window: usize,
    pub density: Vec<f64>,
}

impl DensityMap {
    pub fn uniform(window: usize, regions: usize, level: f64) -> Self {
        DensityMap {
            window,
            density: vec![level; regions],
        }
    }

    pub fn total(&self) -> f64 {
        self.density.iter().sum()
    }
}

/// `max(0, base + amplitude * sin(2 pi w / period + phase) + noise)` per region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPattern {
    pub base: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    /// In windows.
    pub period: f64,
    pub noise_std: f64,
}

impl DensityPattern {
    pub fn constant(regions: usize, level: f64) -> Self {
        DensityPattern {
            base: vec![level; regions],
            amplitude: vec![0.0; regions],
            phase: vec![0.0; regions],
            period: 1.0,
            noise_std: 0.0,
        }
    }

    pub fn num_regions(&self) -> usize {
        self.base.len()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.base.len();
        if self.amplitude.len() != j || self.phase.len() != j {
            return Err(Error::Config(
                "density pattern: base, amplitude and phase must have equal length".into(),
            ));
        }
        if !(self.period > 0.0) {
            return Err(Error::Config(format!(
                "density pattern: period must be positive, got {}",
                self.period
            )));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("density pattern: negative noise scale".into()));
        }
        Ok(())
    }

    /// Largest density the pattern can produce without noise.
    pub fn peak(&self) -> f64 {
        self.base
            .iter()
            .zip(&self.amplitude)
            .map(|(b, a)| b + a.abs())
            .fold(0.0, f64::max)
    }
}

pub fn gen_density<R: Rng + ?Sized>(
    window: usize,
    pattern: &DensityPattern,
    rng: &mut R,
) -> Result<DensityMap> {
    pattern.validate()?;
    let noise = if pattern.noise_std > 0.0 {
        Some(Normal::new(0.0, pattern.noise_std).expect("positive std"))
    } else {
        None
    };
    let angle = 2.0 * PI * window as f64 / pattern.period;
    let density = (0..pattern.num_regions())
        .map(|j| {
            let eps = noise.as_ref().map_or(0.0, |n| n.sample(rng));
            (pattern.base[j] + pattern.amplitude[j] * (angle + pattern.phase[j]).sin() + eps).max(0.0)
        })
        .collect();
    Ok(DensityMap { window, density })
}

#[derive(Deserialize)]
struct TraceRow {
    window: usize,
    region: usize,
    density: f64,
}

/// Reads a `window,region,density` CSV into one map per window, in window
/// order. Every window must list each of the `regions` regions exactly once.
pub fn load_trace(path: impl AsRef<Path>, regions: usize) -> Result<Vec<DensityMap>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let trace_err = |line: usize, message: String| Error::Trace {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["window", "region", "density"] {
        return Err(trace_err(1, "expected header `window,region,density`".into()));
    }

    let mut windows: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for (i, row) in reader.deserialize::<TraceRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| trace_err(line, format!("malformed row: {e}")))?;
        if !row.density.is_finite() || row.density < 0.0 {
            return Err(trace_err(line, format!("invalid density {}", row.density)));
        }
        if row.region >= regions {
            return Err(trace_err(
                line,
                format!("region {} out of range (J = {regions})", row.region),
            ));
        }
        let cells = windows.entry(row.window).or_insert_with(|| vec![None; regions]);
        if cells[row.region].replace(row.density).is_some() {
            return Err(trace_err(
                line,
                format!("duplicate cell (window {}, region {})", row.window, row.region),
            ));
        }
    }

    windows
        .into_iter()
        .map(|(window, cells)| {
            let density = cells
                .into_iter()
                .enumerate()
                .map(|(j, v)| {
                    v.ok_or_else(|| {
                        trace_err(0, format!("incomplete window {window}: region {j} missing"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(DensityMap { window, density })
        })
        .collect()
}

/// Log-distance path loss `128.1 + 37.6 log10(d / 1 km)` dB plus zero-mean
/// log-normal shadowing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    pub shadowing_std_db: f64,
    /// Distances below this are clamped, meters.
    pub min_distance: f64,
}

impl Default for PropagationModel {
    fn default() -> Self {
        PropagationModel {
            shadowing_std_db: 8.0,
            min_distance: 1.0,
        }
    }
}

impl PropagationModel {
    pub fn path_loss_db(&self, distance: f64) -> f64 {
        let d = distance.max(self.min_distance);
        128.1 + 37.6 * (d / 1000.0).log10()
    }
}

/// Linear power gain of the link between a vehicle and a station.
pub fn channel_gain<R: Rng + ?Sized>(
    vehicle: &Point,
    station: &Point,
    model: &PropagationModel,
    rng: &mut R,
) -> f64 {
    let shadow = if model.shadowing_std_db > 0.0 {
        Normal::new(0.0, model.shadowing_std_db)
            .expect("positive std")
            .sample(rng)
    } else {
        0.0
    };
    10f64.powf(-(model.path_loss_db(vehicle.distance(station)) + shadow) / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: usize,
    pub position: Point,
    /// Nearest covering station.
    pub associated_bs: usize,
    /// Linear gain towards every station, indexed by station id.
    pub gains: Vec<f64>,
}

impl Vehicle {
    pub fn channel_gain(&self) -> f64 {
        self.gains[self.associated_bs]
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u32
}

/// Draws `Poisson(density_j)` vehicles uniformly inside each region and
/// associates each one with its nearest covering station.
pub fn spawn_vehicles<R: Rng + ?Sized>(
    density: &DensityMap,
    topo: &Topology,
    model: &PropagationModel,
    rng: &mut R,
) -> Vec<Vehicle> {
    let mut vehicles = Vec::new();
    for (j, &lambda) in density.density.iter().enumerate() {
        let rect = topo.region_rect(j);
        for _ in 0..poisson(lambda, rng) {
            let position = Point::new(
                rect.x0 + rng.random::<f64>() * (rect.x1 - rect.x0),
                rect.y0 + rng.random::<f64>() * (rect.y1 - rect.y0),
            );
            let gains = topo
                .stations()
                .iter()
                .map(|s| channel_gain(&position, &s.position, model, rng))
                .collect();
            vehicles.push(Vehicle {
                id: vehicles.len(),
                position,
                associated_bs: topo.associate(&position),
                gains,
            });
        }
    }
    vehicles
}

/// Task counts per vehicle and their per-station aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrivals {
    /// `[slice][vehicle]`.
    pub per_vehicle: Vec<Vec<u32>>,
    /// `[slice][station]`, summed over each station's associated vehicles.
    pub per_station: Vec<Vec<u32>>,
}

pub fn sample_arrivals<R: Rng + ?Sized>(
    vehicles: &[Vehicle],
    slices: &[SliceSpec],
    num_stations: usize,
    rng: &mut R,
) -> Arrivals {
    let per_vehicle: Vec<Vec<u32>> = slices
        .iter()
        .map(|s| vehicles.iter().map(|_| poisson(s.arrival_rate, rng)).collect())
        .collect();
    let per_station = aggregate(vehicles, &per_vehicle, num_stations);
    Arrivals {
        per_vehicle,
        per_station,
    }
}

pub fn aggregate(vehicles: &[Vehicle], per_vehicle: &[Vec<u32>], num_stations: usize) -> Vec<Vec<u32>> {
    per_vehicle
        .iter()
        .map(|counts| {
            let mut agg = vec![0u32; num_stations];
            for (v, &a) in vehicles.iter().zip(counts) {
                agg[v.associated_bs] += a;
            }
            agg
        })
        .collect()
}

/// Everything the operation stage sees in one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotObservation {
    pub slot: usize,
    pub vehicles: Vec<Vehicle>,
    /// Vehicle indices per station (physical association).
    pub members: Vec<Vec<usize>>,
    pub arrivals: Arrivals,
    /// Backbone round-trip time in this slot, seconds.
    pub backbone_rtt: f64,
}

impl SlotObservation {
    pub fn new(slot: usize, vehicles: Vec<Vehicle>, arrivals: Arrivals, backbone_rtt: f64, num_stations: usize) -> Self {
        let mut members = vec![Vec::new(); num_stations];
        for (i, v) in vehicles.iter().enumerate() {
            members[v.associated_bs].push(i);
        }
        SlotObservation {
            slot,
            vehicles,
            members,
            arrivals,
            backbone_rtt,
        }
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn total_tasks(&self, slice: usize) -> u64 {
        self.arrivals.per_station[slice].iter().map(|&a| a as u64).sum()
    }
}

/// Per-slot randomness shared by every window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    pub propagation: PropagationModel,
    /// Mean backbone round trip, seconds.
    pub backbone_rtt: f64,
    /// Standard deviation of per-slot round-trip jitter; zero disables it.
    pub rtt_jitter: f64,
}

impl Default for TrafficModel {
    fn default() -> Self {
        TrafficModel {
            propagation: PropagationModel::default(),
            backbone_rtt: 0.15,
            rtt_jitter: 0.0,
        }
    }
}

pub fn sample_slot<R: Rng + ?Sized>(
    slot: usize,
    density: &DensityMap,
    topo: &Topology,
    slices: &[SliceSpec],
    model: &TrafficModel,
    rng: &mut R,
) -> SlotObservation {
    let vehicles = spawn_vehicles(density, topo, &model.propagation, rng);
    let arrivals = sample_arrivals(&vehicles, slices, topo.num_stations(), rng);
    let rtt = if model.rtt_jitter > 0.0 {
        let jitter = Normal::new(0.0, model.rtt_jitter).expect("positive std").sample(rng);
        (model.backbone_rtt + jitter).max(0.0)
    } else {
        model.backbone_rtt
    };
    SlotObservation::new(slot, vehicles, arrivals, rtt, topo.num_stations())
}

/// `slots` consecutive observations drawn from one window's density.
pub fn sample_window<R: Rng + ?Sized>(
    density: &DensityMap,
    slots: usize,
    topo: &Topology,
    slices: &[SliceSpec],
    model: &TrafficModel,
    rng: &mut R,
) -> Vec<SlotObservation> {
    (0..slots)
        .map(|t| sample_slot(t, density, topo, slices, model, rng))
        .collect()
}
