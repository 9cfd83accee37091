//! Path similarity, trimmed statistics and the parameter sweep harness.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_track::{match_multi, BoostConfig, Method, MultiConfig, ScaleRule, TrackSet};
use crate::parallel::{self, Execution};
use crate::rng::{substream, substream_seed};
use crate::road_network::{generate_grid_network, traversal_measure, GridSpec, RoadNetwork, RoutePath};
use crate::simulation::{generate_route, generate_track, Distribution, SamplingConfig};
use crate::single_track::{match_track, MatchConfig, Track};

const ROUTE_STREAM: u64 = 0x52_4f55_5445;
const BOOST_STREAM: u64 = 0x42_4f4f_5354;

/// Length of the road shared by both paths over the length covered by either,
/// ignoring driving direction.
pub fn similarity(a: &RoutePath, b: &RoutePath) -> Result<f64> {
    let (ma, mb) = (traversal_measure(a), traversal_measure(b));
    let total = |m: &BTreeMap<usize, _>| m.values().map(crate::road_network::IntervalSet::measure).sum::<f64>();
    let inter: f64 = ma.iter().filter_map(|(e, s)| mb.get(e).map(|t| s.intersection_measure(t))).sum();
    let union = total(&ma) + total(&mb) - inter;
    if union <= 0.0 {
        return Err(Error::ZeroLengthPaths);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Mean after dropping `floor(trim * n)` values from each end of the sorted input.
pub fn trimmed_mean(values: &[f64], trim: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::InvalidInput("trim fraction must lie in [0, 0.5)".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = (trim * v.len() as f64).floor() as usize;
    let kept = &v[k..v.len() - k];
    if kept.is_empty() {
        return Err(Error::InvalidInput("no values left after trimming".into()));
    }
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Matcher evaluated in a sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SweepMethod {
    /// Every track matched on its own; the row reports their mean similarity.
    Single,
    Multi(Method),
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::Single => "single",
            SweepMethod::Multi(m) => m.name(),
        }
    }
}

impl std::fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "single" {
            Ok(SweepMethod::Single)
        } else {
            s.parse().map(SweepMethod::Multi)
        }
    }
}

impl TryFrom<String> for SweepMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SweepMethod> for String {
    fn from(m: SweepMethod) -> String {
        m.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub sigmas: Vec<f64>,
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub methods: Vec<SweepMethod>,
    /// Tracks per route, `s`.
    pub track_counts: Vec<usize>,
    pub routes: usize,
    pub instances: usize,
    pub base_seed: u64,
    pub trim: f64,
    pub distribution: Distribution,
    /// Accepted route lengths, meters.
    pub route_length: (f64, f64),
    pub grid: GridSpec,
    /// Matcher settings; `lambda` is overridden per row.
    pub matching: MatchConfig,
    /// Boosting settings; `seed` is overridden per row.
    pub boost: BoostConfig,
    pub max_rounds: usize,
    pub scale: ScaleRule,
    /// Wall-clock timings make the results file differ between runs, so they are opt-in.
    pub record_runtime: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            sigmas: vec![20.0],
            taus: vec![60.0],
            lambdas: vec![1e-6, 1e-4, 1e-2, 1.0, 1e2],
            methods: vec![SweepMethod::Single],
            track_counts: vec![1],
            routes: 25,
            instances: 1,
            base_seed: 1,
            trim: 0.1,
            distribution: Distribution::Uniform,
            route_length: (3000.0, 15_000.0),
            grid: GridSpec::default(),
            matching: MatchConfig::default(),
            boost: BoostConfig::default(),
            max_rounds: 20,
            scale: ScaleRule::Median,
            record_runtime: false,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("sigmas", self.sigmas.is_empty()),
            ("taus", self.taus.is_empty()),
            ("lambdas", self.lambdas.is_empty()),
            ("methods", self.methods.is_empty()),
            ("track_counts", self.track_counts.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidInput(format!("sweep grid {name} is empty")));
        }
        if self.routes == 0 || self.instances == 0 {
            return Err(Error::InvalidInput("sweep needs at least one route and one instance".into()));
        }
        if self.track_counts.contains(&0) {
            return Err(Error::InvalidInput("track counts must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.trim) {
            return Err(Error::InvalidInput("trim fraction must lie in [0, 0.5)".into()));
        }
        for &sigma in &self.sigmas {
            for &tau in &self.taus {
                SamplingConfig { sigma, tau, distribution: self.distribution }.validate()?;
            }
        }
        for &l in &self.lambdas {
            self.matching.with_lambda(l).validate()?;
        }
        self.boost.validate()
    }

    pub fn network(&self) -> Result<RoadNetwork> {
        generate_grid_network(&self.grid)
    }

    pub fn row_count(&self) -> usize {
        self.sigmas.len()
            * self.taus.len()
            * self.lambdas.len()
            * self.methods.len()
            * self.track_counts.len()
            * self.routes
            * self.instances
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sigma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub method: String,
    pub s: usize,
    pub route: usize,
    pub instance: usize,
    /// `NaN` when the row failed.
    pub similarity: f64,
    pub runtime_ms: Option<f64>,
    /// Error code of a failed row.
    pub error: Option<String>,
}

type RowKey = (u64, u64, u64, String, usize, usize, usize);

impl ResultRow {
    fn key(&self) -> RowKey {
        (
            self.sigma.to_bits(),
            self.tau.to_bits(),
            self.lambda.to_bits(),
            self.method.clone(),
            self.s,
            self.route,
            self.instance,
        )
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["sigma", "tau", "lambda", "method", "s", "route", "instance", "similarity", "runtime_ms", "error"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn results_to_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// One (route, instance, sigma, tau) unit: data is generated once and shared by
/// every lambda, method and track count.
#[derive(Debug, Clone, Copy)]
struct Task {
    sigma_i: usize,
    tau_i: usize,
    route: usize,
    instance: usize,
}

/// (lambda, method, track count) index triples of a task's rows.
fn cell_rows(spec: &SweepSpec) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for l in 0..spec.lambdas.len() {
        for m in 0..spec.methods.len() {
            for s in 0..spec.track_counts.len() {
                out.push((l, m, s));
            }
        }
    }
    out
}

fn mean_single(net: &RoadNetwork, tracks: &[Track], truth: &RoutePath, cfg: &MatchConfig) -> Result<f64> {
    let mut sims = Vec::with_capacity(tracks.len());
    let mut last_err = None;
    for t in tracks {
        match match_track(net, t, cfg).and_then(|r| similarity(&r.path, truth)) {
            Ok(s) => sims.push(s),
            Err(e) => last_err = Some(e),
        }
    }
    if sims.is_empty() {
        return Err(last_err.unwrap_or(Error::InvalidInput("no tracks".into())));
    }
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}

fn run_task(
    net: &RoadNetwork,
    spec: &SweepSpec,
    routes: &[Result<RoutePath, String>],
    task: Task,
    wanted: &HashSet<RowKey>,
) -> Vec<ResultRow> {
    let sigma = spec.sigmas[task.sigma_i];
    let tau = spec.taus[task.tau_i];
    let mut rows = Vec::new();
    let make = |l: usize, m: usize, s: usize| ResultRow {
        sigma,
        tau,
        lambda: spec.lambdas[l],
        method: spec.methods[m].name().to_string(),
        s: spec.track_counts[s],
        route: task.route,
        instance: task.instance,
        similarity: f64::NAN,
        runtime_ms: None,
        error: None,
    };
    let pending: Vec<_> = cell_rows(spec)
        .into_iter()
        .map(|(l, m, s)| make(l, m, s))
        .filter(|r| wanted.contains(&r.key()))
        .collect();
    if pending.is_empty() {
        return rows;
    }
    let route = match &routes[task.route] {
        Ok(r) => r,
        Err(code) => {
            return pending.into_iter().map(|r| ResultRow { error: Some(code.clone()), ..r }).collect();
        }
    };
    let s_max = *spec.track_counts.iter().max().expect("validated");
    let cfg = SamplingConfig { sigma, tau, distribution: spec.distribution };
    let mut tracks: Vec<Option<Track>> = Vec::with_capacity(s_max);
    for k in 0..s_max {
        let coords = [task.route as u64, task.instance as u64, sigma.to_bits(), tau.to_bits(), k as u64];
        let mut rng = substream(spec.base_seed, &coords);
        match generate_track(net, route, &cfg, &mut rng) {
            Ok((t, _)) => tracks.push(Some(t)),
            Err(e) => {
                log::debug!("route {} instance {} track {k}: {e}", task.route, task.instance);
                tracks.push(None);
            }
        }
    }

    for row in pending {
        let start = Instant::now();
        let available: Vec<Track> = tracks[..row.s].iter().flatten().cloned().collect();
        let matching = spec.matching.with_lambda(row.lambda);
        let outcome = if available.is_empty() {
            Err(Error::NoTimestamps { duration: 0.0 })
        } else {
            match row.method.parse::<SweepMethod>().expect("method names come from the spec") {
                SweepMethod::Single => mean_single(net, &available, route, &matching),
                SweepMethod::Multi(method) => {
                    let coords =
                        [task.route as u64, task.instance as u64, sigma.to_bits(), tau.to_bits(), row.s as u64];
                    let cfg = MultiConfig {
                        matching,
                        boost: BoostConfig { seed: substream_seed(spec.base_seed ^ BOOST_STREAM, &coords), ..spec.boost },
                        max_rounds: spec.max_rounds,
                        scale: spec.scale,
                    };
                    TrackSet::new(available)
                        .and_then(|ts| match_multi(net, &ts, method, &cfg))
                        .and_then(|r| similarity(&r.path, route))
                }
            }
        };
        let runtime_ms = spec.record_runtime.then(|| start.elapsed().as_secs_f64() * 1e3);
        rows.push(match outcome {
            Ok(sim) => ResultRow { similarity: sim, runtime_ms, ..row },
            Err(e) => ResultRow { runtime_ms, error: Some(e.code().to_string()), ..row },
        });
    }
    rows
}

/// Runs every row of the sweep.
pub fn run_sweep(net: &RoadNetwork, spec: &SweepSpec, exec: Execution) -> Result<Vec<ResultRow>> {
    resume_sweep(net, spec, exec, Vec::new())
}

/// Runs the rows of the sweep not present in `existing` and returns the full
/// table in canonical order. Existing rows outside the spec are discarded.
pub fn resume_sweep(net: &RoadNetwork, spec: &SweepSpec, exec: Execution, existing: Vec<ResultRow>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut have: HashMap<RowKey, ResultRow> = existing.into_iter().map(|r| (r.key(), r)).collect();

    let mut tasks = Vec::new();
    let mut canonical = Vec::with_capacity(spec.row_count());
    for (sigma_i, &sigma) in spec.sigmas.iter().enumerate() {
        for (tau_i, &tau) in spec.taus.iter().enumerate() {
            for route in 0..spec.routes {
                for instance in 0..spec.instances {
                    tasks.push(Task { sigma_i, tau_i, route, instance });
                }
            }
            for &lambda in &spec.lambdas {
                for m in &spec.methods {
                    for &s in &spec.track_counts {
                        for route in 0..spec.routes {
                            for instance in 0..spec.instances {
                                canonical.push((
                                    sigma.to_bits(),
                                    tau.to_bits(),
                                    lambda.to_bits(),
                                    m.name().to_string(),
                                    s,
                                    route,
                                    instance,
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    let wanted: HashSet<RowKey> = canonical.iter().filter(|k| !have.contains_key(*k)).cloned().collect();
    if !wanted.is_empty() {
        log::info!("sweep: {} of {} rows to compute", wanted.len(), canonical.len());
    }

    let new_rows = parallel::run(exec, || {
        let route_ids: Vec<usize> = if wanted.is_empty() { Vec::new() } else { (0..spec.routes).collect() };
        let routes: Vec<Result<RoutePath, String>> = parallel::map(&route_ids, |&r| {
            let mut rng = substream(spec.base_seed, &[ROUTE_STREAM, r as u64]);
            generate_route(net, &mut rng, spec.route_length.0, spec.route_length.1).map_err(|e| e.code().to_string())
        });
        parallel::map(&tasks, |&t| run_task(net, spec, &routes, t, &wanted))
    });
    for r in new_rows.into_iter().flatten() {
        have.insert(r.key(), r);
    }
    Ok(canonical.into_iter().map(|k| have.remove(&k).expect("every row computed")).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub sigma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub method: String,
    pub s: usize,
    /// Trimmed mean over successful rows; `None` when too few succeeded.
    pub similarity: Option<f64>,
    pub rows: usize,
    pub errors: usize,
}

/// Trimmed-mean similarity per (sigma, tau, lambda, method, s), in first-seen order.
pub fn summarize(rows: &[ResultRow], trim: f64) -> Vec<CellSummary> {
    let mut order: Vec<(u64, u64, u64, String, usize)> = Vec::new();
    let mut groups: HashMap<(u64, u64, u64, String, usize), Vec<&ResultRow>> = HashMap::new();
    for r in rows {
        let k = (r.sigma.to_bits(), r.tau.to_bits(), r.lambda.to_bits(), r.method.clone(), r.s);
        groups
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let g = &groups[&k];
            let ok: Vec<f64> = g.iter().filter(|r| !r.is_error()).map(|r| r.similarity).collect();
            CellSummary {
                sigma: g[0].sigma,
                tau: g[0].tau,
                lambda: g[0].lambda,
                method: g[0].method.clone(),
                s: g[0].s,
                similarity: trimmed_mean(&ok, trim).ok(),
                rows: g.len(),
                errors: g.len() - ok.len(),
            }
        })
        .collect()
}

/// Lambda with the highest summarized similarity for the given cell; the first
/// lambda in table order wins ties.
pub fn best_lambda(summaries: &[CellSummary], sigma: f64, tau: f64, method: &str, s: usize) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for c in summaries.iter().filter(|c| c.sigma == sigma && c.tau == tau && c.method == method && c.s == s) {
        if let Some(v) = c.similarity {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, c.lambda));
            }
        }
    }
    best.map(|(_, l)| l)
}
