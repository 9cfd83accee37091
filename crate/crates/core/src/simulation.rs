//! Synthetic routes and noisy sampled tracks.
//!
//! A route is the shortest path between two random nodes. A vehicle drives it
//! with a per-edge speed drawn around the speed limit, is sampled at uniform or
//! exponentially distributed intervals, and each position gets isotropic
//! Gaussian noise.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{exponential, normal_pair};
use crate::road_network::{RoadNetwork, RoadPoint, RoutePath};
use crate::single_track::{Sample, Track};

const MAX_ROUTE_ATTEMPTS: usize = 10_000;
const SPEED_JITTER: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uniform,
    Exponential,
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "exponential" => Ok(Distribution::Exponential),
            _ => Err(Error::InvalidInput(format!("unknown sampling distribution {s:?}"))),
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Noise standard deviation per axis, meters.
    pub sigma: f64,
    /// Sampling period (uniform) or mean inter-arrival time (exponential), seconds.
    pub tau: f64,
    pub distribution: Distribution,
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput("sigma must be finite and nonnegative".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruePosition {
    pub t: f64,
    pub point: RoadPoint,
    pub location: Point,
    /// Distance driven since the start of the route.
    pub arc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub route: RoutePath,
    /// Driving speed on each route entry, m/s.
    pub speeds: Vec<f64>,
    pub positions: Vec<TruePosition>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth is serializable")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Shortest route between two uniformly drawn distinct nodes, redrawn until its
/// length falls in `[min_len, max_len]`.
pub fn generate_route<R: Rng + ?Sized>(net: &RoadNetwork, rng: &mut R, min_len: f64, max_len: f64) -> Result<RoutePath> {
    if !(min_len <= max_len) || net.node_count() < 2 {
        return Err(Error::RouteRejected { min: min_len, max: max_len, attempts: 0 });
    }
    for _ in 0..MAX_ROUTE_ATTEMPTS {
        let a = rng.gen_range(0..net.node_count());
        let b = rng.gen_range(0..net.node_count());
        if a == b {
            continue;
        }
        let Ok(route) = net.shortest_route(net.node_point(a)?, net.node_point(b)?) else {
            continue;
        };
        if (min_len..=max_len).contains(&route.total_length()) {
            return Ok(route);
        }
    }
    Err(Error::RouteRejected { min: min_len, max: max_len, attempts: MAX_ROUTE_ATTEMPTS })
}

/// Sampling instants in `(0, duration]`.
pub fn generate_timestamps<R: Rng + ?Sized>(duration: f64, cfg: &SamplingConfig, rng: &mut R) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(duration > 0.0) {
        return Err(Error::InvalidInput("duration must be positive".into()));
    }
    let mut out = Vec::new();
    match cfg.distribution {
        Distribution::Uniform => {
            let mut k = 1.0;
            while k * cfg.tau <= duration {
                out.push(k * cfg.tau);
                k += 1.0;
            }
        }
        Distribution::Exponential => {
            let mut t = exponential(rng, cfg.tau);
            while t <= duration {
                // Consecutive draws can collide only through rounding; keep timestamps strict.
                if out.last().is_none_or(|&last| t > last) {
                    out.push(t);
                }
                t += exponential(rng, cfg.tau);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoTimestamps { duration });
    }
    Ok(out)
}

fn position_on_entry(net: &RoadNetwork, route: &RoutePath, entry: usize, s: f64) -> RoadPoint {
    let e = route.entries()[entry];
    let s = s.clamp(0.0, e.len());
    let offset = if e.forward { e.lo + s } else { e.hi - s };
    net.road_point(e.edge, offset.clamp(0.0, net.edge(e.edge).length)).expect("offset lies on the edge")
}

/// Drives `route`, samples it and adds noise.
pub fn generate_track<R: Rng + ?Sized>(
    net: &RoadNetwork,
    route: &RoutePath,
    cfg: &SamplingConfig,
    rng: &mut R,
) -> Result<(Track, GroundTruth)> {
    cfg.validate()?;
    if route.is_point() {
        return Err(Error::InvalidInput("route has zero length".into()));
    }
    let speeds: Vec<f64> = route
        .entries()
        .iter()
        .map(|e| {
            let v = net.edge(e.edge).speed_limit;
            rng.gen_range(v * (1.0 - SPEED_JITTER)..=v * (1.0 + SPEED_JITTER))
        })
        .collect();
    // Time at which each entry is entered, plus the arrival time.
    let mut enter = Vec::with_capacity(speeds.len() + 1);
    let mut clock = 0.0;
    enter.push(0.0);
    for (e, v) in route.entries().iter().zip(&speeds) {
        clock += e.len() / v;
        enter.push(clock);
    }
    let timestamps = generate_timestamps(clock, cfg, rng)?;

    let mut positions = Vec::with_capacity(timestamps.len());
    let mut samples = Vec::with_capacity(timestamps.len());
    let mut entry = 0;
    let mut arc_before = 0.0;
    for t in timestamps {
        while entry + 1 < speeds.len() && t > enter[entry + 1] {
            arc_before += route.entries()[entry].len();
            entry += 1;
        }
        let within = speeds[entry] * (t - enter[entry]);
        let point = position_on_entry(net, route, entry, within);
        let location = net.location(point);
        let (gx, gy) = normal_pair(rng);
        let noisy = Point::new(location.x + cfg.sigma * gx, location.y + cfg.sigma * gy);
        positions.push(TruePosition { t, point, location, arc: arc_before + within.min(route.entries()[entry].len()) });
        samples.push(Sample { t, loc: noisy });
    }
    Ok((Track::new(samples)?, GroundTruth { route: route.clone(), speeds, positions }))
}
