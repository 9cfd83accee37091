//! Regularized single-track matching.
//!
//! A track is matched by choosing one road point per sample so that
//!
//! ```text
//! cost = sum_j |x_j - sample_j|^2 + lambda * sum_j drive(x_j, x_{j+1})^2
//! ```
//!
//! is minimal over a pruned candidate set, then stitching consecutive choices
//! with shortest routes. Small `lambda` follows the samples closely; large
//! `lambda` favours short paths.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, distance_sq, Point};
use crate::road_network::{RoadNetwork, RoadPoint, RoutePath};

/// Candidates closer than this to an already kept one are dropped.
const DEDUP_RADIUS_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds.
    pub t: f64,
    pub loc: Point,
}

/// Time-ordered samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    samples: Vec<Sample>,
}

impl Track {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("track has no samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || !s.loc.is_finite() {
                return Err(Error::InvalidInput(format!("sample {i} is not finite")));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidInput(format!("timestamps not increasing at sample {}", i + 1)));
        }
        Ok(Track { samples })
    }

    /// Track whose timestamps are the ordinal ranks 0, 1, 2, ...
    pub fn from_ordered_points(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        Track::new(points.into_iter().enumerate().map(|(i, loc)| Sample { t: i as f64, loc }).collect())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.samples.iter().map(|s| s.loc).collect()
    }

    /// Sum of straight-line gaps between consecutive samples.
    pub fn polyline_length(&self) -> f64 {
        self.samples.windows(2).map(|w| distance(w[0].loc, w[1].loc)).sum()
    }

    /// Parses `t,x,y` rows. A first line that does not parse as numbers is a header;
    /// blank lines and lines starting with `#` are ignored.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        let mut first = true;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 3 => samples.push(Sample { t: v[0], loc: Point::new(v[1], v[2]) }),
                _ if first => {}
                _ => return Err(Error::Parse(format!("line {}: expected t,x,y", lineno + 1))),
            }
            first = false;
        }
        Track::new(samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y\n");
        for s in &self.samples {
            writeln!(out, "{},{},{}", s.t, s.loc.x, s.loc.y).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Weight of the squared driving distance between consecutive matches.
    pub lambda: f64,
    /// Meters around each sample searched for road segments.
    pub radius: f64,
    /// Evenly spaced extra candidates per segment, besides the nearest point.
    pub extra_candidates: usize,
    pub max_candidates_per_sample: usize,
    /// How many times the radius may double when a sample has no candidates.
    pub radius_growth_cap: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            lambda: 1e-2,
            radius: 200.0,
            extra_candidates: 3,
            max_candidates_per_sample: 40,
            radius_growth_cap: 3,
        }
    }
}

impl MatchConfig {
    pub fn with_lambda(&self, lambda: f64) -> Self {
        MatchConfig { lambda, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput("lambda must be finite and nonnegative".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput("candidate radius must be positive".into()));
        }
        if self.max_candidates_per_sample == 0 {
            return Err(Error::InvalidInput("max candidates per sample must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub point: RoadPoint,
    pub location: Point,
    /// Squared distance to the sample.
    pub data_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub chosen: Vec<RoadPoint>,
    pub path: RoutePath,
    pub total_cost: f64,
    pub data_cost: f64,
    pub model_cost: f64,
}

impl MatchResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("match result is serializable")
    }
}

fn candidates_at_radius(net: &RoadNetwork, sample: Point, radius: f64, cfg: &MatchConfig) -> Vec<Candidate> {
    let mut all = Vec::new();
    for edge_id in net.edges_within_radius(sample, radius) {
        let edge = net.edge(edge_id);
        let nearest = edge.geometry.nearest_linear(sample);
        let mut push = |offset: f64, location: Point| {
            let point = net.road_point(edge_id, offset).expect("offset within edge");
            all.push(Candidate { point, location, data_cost: distance_sq(sample, location) });
        };
        push(nearest.arc_offset, nearest.foot);
        let n = cfg.extra_candidates;
        for i in 0..n {
            let offset = (i as f64 + 0.5) * edge.length / n as f64;
            push(offset, edge.geometry.point_at(offset));
        }
    }
    all.sort_by(|a, b| {
        a.data_cost
            .total_cmp(&b.data_cost)
            .then(a.point.edge.cmp(&b.point.edge))
            .then(a.point.offset.total_cmp(&b.point.offset))
    });
    let mut kept: Vec<Candidate> = Vec::with_capacity(all.len());
    for c in all {
        if kept.iter().all(|k| distance(k.location, c.location) >= DEDUP_RADIUS_M) {
            kept.push(c);
            if kept.len() == cfg.max_candidates_per_sample {
                break;
            }
        }
    }
    kept
}

/// Match candidates for one sample, ascending by data cost.
///
/// Each road segment within the radius contributes its nearest point plus
/// `extra_candidates` points at the midpoints of equal subdivisions. An empty
/// result doubles the radius, up to `radius_growth_cap` times.
pub fn generate_candidates(net: &RoadNetwork, sample: Point, cfg: &MatchConfig) -> Result<Vec<Candidate>> {
    candidates_for(net, sample, 0, cfg)
}

fn candidates_for(net: &RoadNetwork, sample: Point, index: usize, cfg: &MatchConfig) -> Result<Vec<Candidate>> {
    let mut radius = cfg.radius;
    for _ in 0..=cfg.radius_growth_cap {
        let found = candidates_at_radius(net, sample, radius, cfg);
        if !found.is_empty() {
            return Ok(found);
        }
        radius *= 2.0;
    }
    Err(Error::NoCandidates { sample: index })
}

/// Concatenates shortest routes between consecutive road points.
pub fn stitch_path(net: &RoadNetwork, chosen: &[RoadPoint]) -> Result<RoutePath> {
    let first = *chosen
        .first()
        .ok_or_else(|| Error::InvalidInput("no road points to stitch".into()))?;
    let mut path = RoutePath::point(first);
    for w in chosen.windows(2) {
        path.extend(net.shortest_route(w[0], w[1])?);
    }
    Ok(path)
}

/// Minimizes the regularized cost over the candidate lattice by dynamic programming.
pub fn match_track(net: &RoadNetwork, track: &Track, cfg: &MatchConfig) -> Result<MatchResult> {
    match_points(net, &track.points(), cfg)
}

/// [`match_track`] on bare points taken in the given order.
pub fn match_points(net: &RoadNetwork, points: &[Point], cfg: &MatchConfig) -> Result<MatchResult> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidInput("nothing to match".into()));
    }
    let layers: Vec<Vec<Candidate>> = points
        .iter()
        .enumerate()
        .map(|(i, &p)| candidates_for(net, p, i, cfg))
        .collect::<Result<_>>()?;
    let lambda = cfg.lambda;

    let mut cost: Vec<f64> = layers[0].iter().map(|c| c.data_cost).collect();
    // back[j][b] = index in layer j-1 of the predecessor of candidate b in layer j.
    let mut back: Vec<Vec<usize>> = vec![Vec::new()];
    for j in 1..layers.len() {
        let prev = &layers[j - 1];
        let cur = &layers[j];
        let targets: Vec<RoadPoint> = cur.iter().map(|c| c.point).collect();
        let mut next = vec![f64::INFINITY; cur.len()];
        let mut arg = vec![usize::MAX; cur.len()];
        for (a, src) in prev.iter().enumerate() {
            if !cost[a].is_finite() {
                continue;
            }
            let dists = net.one_to_many_distances(src.point, &targets);
            for (b, d) in dists.into_iter().enumerate() {
                let Some(d) = d else { continue };
                let c = cost[a] + lambda * (d * d) + cur[b].data_cost;
                if c < next[b] {
                    next[b] = c;
                    arg[b] = a;
                }
            }
        }
        if next.iter().all(|c| c.is_infinite()) {
            return Err(Error::NoFeasibleChain { sample: j });
        }
        cost = next;
        back.push(arg);
    }

    let (mut idx, _) = cost
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("layers are nonempty");
    let mut picks = vec![0usize; layers.len()];
    for j in (0..layers.len()).rev() {
        picks[j] = idx;
        if j > 0 {
            idx = back[j][idx];
        }
    }
    let chosen: Vec<RoadPoint> = picks.iter().zip(&layers).map(|(&i, l)| l[i].point).collect();
    let data_cost: f64 = picks.iter().zip(&layers).map(|(&i, l)| l[i].data_cost).sum();
    let mut model_cost = 0.0;
    let mut path = RoutePath::point(chosen[0]);
    for w in chosen.windows(2) {
        let leg = net.one_to_many_distances(w[0], &[w[1]])[0].expect("chain is feasible");
        model_cost += leg * leg;
        path.extend(net.shortest_route(w[0], w[1])?);
    }
    Ok(MatchResult { chosen, path, total_cost: data_cost + lambda * model_cost, data_cost, model_cost })
}

/// Regularization weight `c * (n * sigma / length)^(4/3)`.
pub fn optimal_lambda(n: usize, sigma: f64, length: f64, calibration: f64) -> f64 {
    calibration * (n as f64 * sigma / length).powf(4.0 / 3.0)
}

/// Per-fold outcome of [`estimate_sigma_folds`].
#[derive(Debug, Clone, PartialEq)]
pub struct FoldEstimate {
    /// Zero-based sample indices held out in this fold.
    pub held_out: Vec<usize>,
    /// Held-out samples actually scored (those inside the training time span).
    pub scored: usize,
    pub sigma: Option<f64>,
}

/// Zero-based members of fold `i` (one-based) out of `m` folds over `n` samples.
pub fn fold_members(n: usize, m: usize, i: usize) -> Vec<usize> {
    (i - 1..n).step_by(m).collect()
}

/// Cross-validated noise level.
///
/// With `m = floor(sqrt(n))`, fold `i` holds out every `m`-th sample starting at
/// sample `i`. The rest is matched with `lambda = 1`; held-out samples lying
/// between the first and last training samples are projected onto the matched
/// path and `sigma_i = sqrt(mean squared residual / 2)`. The estimate is the
/// mean over folds that produced a value.
pub fn estimate_sigma(net: &RoadNetwork, track: &Track, cfg: &MatchConfig) -> Result<f64> {
    let folds = estimate_sigma_folds(net, track, cfg)?;
    let vals: Vec<f64> = folds.iter().filter_map(|f| f.sigma).collect();
    if vals.is_empty() {
        return Err(Error::AllFoldsSkipped);
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn estimate_sigma_folds(net: &RoadNetwork, track: &Track, cfg: &MatchConfig) -> Result<Vec<FoldEstimate>> {
    let n = track.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!("sigma estimation needs at least 4 samples, got {n}")));
    }
    let m = (n as f64).sqrt().floor() as usize;
    let inner = cfg.with_lambda(1.0);
    let pts = track.points();
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        let held_out = fold_members(n, m, i);
        let mut is_held = vec![false; n];
        for &k in &held_out {
            is_held[k] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&k| !is_held[k]).collect();
        let sigma = match match_points(net, &train.iter().map(|&k| pts[k]).collect::<Vec<_>>(), &inner) {
            Ok(result) => {
                let shape = result.path.shape(net);
                let (lo, hi) = (train[0], *train.last().unwrap());
                let residuals: Vec<f64> = held_out
                    .iter()
                    .filter(|&&k| k > lo && k < hi)
                    .map(|&k| shape.nearest(pts[k]).dist.powi(2))
                    .collect();
                let scored = residuals.len();
                let sigma = (scored > 0).then(|| (residuals.iter().sum::<f64>() / scored as f64 / 2.0).sqrt());
                out.push(FoldEstimate { held_out, scored, sigma });
                continue;
            }
            Err(e) => {
                log::debug!("fold {i} skipped: {e}");
                None
            }
        };
        out.push(FoldEstimate { held_out, scored: 0, sigma });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road_network::{generate_grid_network, load_network, GridSpec, NetworkFile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lone_edge(len: f64) -> RoadNetwork {
        let file = NetworkFile {
            crs: None,
            nodes: vec![
                crate::road_network::NodeRecord { id: 0, x: 0.0, y: 0.0 },
                crate::road_network::NodeRecord { id: 1, x: len, y: 0.0 },
            ],
            edges: vec![crate::road_network::EdgeRecord {
                id: 0,
                from: 0,
                to: 1,
                speed_limit: 10.0,
                oneway: false,
                geometry: None,
            }],
        };
        load_network(file).unwrap()
    }

    fn grid4() -> RoadNetwork {
        generate_grid_network(&GridSpec {
            rows: 4,
            cols: 4,
            spacing: 200.0,
            perturbation: 30.0,
            removal_prob: 0.0,
            speed_range: (10.0, 12.0),
            seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn track_validation_and_csv() {
        assert!(Track::new(vec![]).is_err());
        let s = |t: f64| Sample { t, loc: Point::new(t, 0.0) };
        assert!(Track::new(vec![s(1.0), s(1.0)]).is_err());
        let tr = Track::new(vec![s(1.0), s(2.5)]).unwrap();
        assert_eq!(Track::parse_csv(&tr.to_csv()).unwrap(), tr);
        let no_header = Track::parse_csv("0,1,2\n5,3,4\n").unwrap();
        assert_eq!(no_header.len(), 2);
        assert!(Track::parse_csv("t,x,y\n0,1,2\nfoo,1,2\n").is_err());
    }

    #[test]
    fn candidates_on_lone_edge() {
        let net = lone_edge(90.0);
        let cfg = MatchConfig::default();
        let cands = generate_candidates(&net, Point::new(30.0, 10.0), &cfg).unwrap();
        let mut offsets: Vec<f64> = cands.iter().map(|c| c.point.offset).collect();
        offsets.sort_by(f64::total_cmp);
        assert_eq!(offsets, vec![15.0, 30.0, 45.0, 75.0]);
        assert_eq!(cands[0].point.offset, 30.0);
        assert!(cands.iter().all(|c| (c.data_cost - distance_sq(Point::new(30.0, 10.0), c.location)).abs() < 1e-9));

        let none_extra = MatchConfig { extra_candidates: 0, ..cfg };
        let cands = generate_candidates(&net, Point::new(30.0, 10.0), &none_extra).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].point.offset, 30.0);
    }

    #[test]
    fn candidates_deduplicate_and_cap() {
        let net = lone_edge(90.0);
        // Nearest point at 45.4 duplicates the midpoint candidate at 45.
        let cands = generate_candidates(&net, Point::new(45.4, 3.0), &MatchConfig::default()).unwrap();
        assert_eq!(cands.len(), 3);
        let capped = MatchConfig { max_candidates_per_sample: 2, ..MatchConfig::default() };
        assert_eq!(generate_candidates(&net, Point::new(45.4, 3.0), &capped).unwrap().len(), 2);
    }

    #[test]
    fn radius_growth() {
        let net = lone_edge(90.0);
        let far = Point::new(45.0, 300.0);
        let cfg = MatchConfig { radius_growth_cap: 2, ..MatchConfig::default() };
        assert!(!generate_candidates(&net, far, &cfg).unwrap().is_empty());
        let tight = MatchConfig { radius_growth_cap: 0, ..MatchConfig::default() };
        assert!(matches!(generate_candidates(&net, far, &tight), Err(Error::NoCandidates { .. })));
        let very_far = Point::new(45.0, 900.0);
        assert!(generate_candidates(&net, very_far, &cfg).is_err());
    }

    #[test]
    fn single_sample_picks_nearest() {
        let net = grid4();
        let p = Point::new(110.0, 25.0);
        let res = match_points(&net, &[p], &MatchConfig::default()).unwrap();
        let best = generate_candidates(&net, p, &MatchConfig::default()).unwrap()[0];
        assert_eq!(res.chosen, vec![best.point]);
        assert_eq!(res.model_cost, 0.0);
        assert!(res.path.is_point());
    }

    #[test]
    fn zero_lambda_decouples_samples() {
        let net = grid4();
        let cfg = MatchConfig::default().with_lambda(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let pts: Vec<Point> =
                (0..6).map(|_| Point::new(rng.gen_range(0.0..600.0), rng.gen_range(0.0..600.0))).collect();
            let res = match_points(&net, &pts, &cfg).unwrap();
            for (p, chosen) in pts.iter().zip(&res.chosen) {
                let nearest = generate_candidates(&net, *p, &cfg).unwrap()[0];
                assert!((nearest.data_cost - distance_sq(*p, net.location(*chosen))).abs() < 1e-6);
            }
        }
    }

    /// Product-space oracle: cost of every candidate chain.
    fn brute_force(net: &RoadNetwork, pts: &[Point], cfg: &MatchConfig) -> f64 {
        let layers: Vec<Vec<Candidate>> = pts.iter().map(|&p| generate_candidates(net, p, cfg).unwrap()).collect();
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; layers.len()];
        loop {
            let chain: Vec<&Candidate> = idx.iter().zip(&layers).map(|(&i, l)| &l[i]).collect();
            let data: f64 = chain.iter().map(|c| c.data_cost).sum();
            let mut model = 0.0;
            let mut ok = true;
            for w in chain.windows(2) {
                match net.one_to_many_distances(w[0].point, &[w[1].point])[0] {
                    Some(d) => model += d * d,
                    None => ok = false,
                }
            }
            if ok {
                best = best.min(data + cfg.lambda * model);
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < layers[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn dp_equals_exhaustive_on_small_grid() {
        let net = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = MatchConfig { max_candidates_per_sample: 5, ..MatchConfig::default() };
        for round in 0..40 {
            let lambda = [0.0, 1e-4, 1e-2, 1.0, 100.0][round % 5];
            let cfg = cfg.with_lambda(lambda);
            let pts: Vec<Point> =
                (0..3).map(|_| Point::new(rng.gen_range(0.0..600.0), rng.gen_range(0.0..600.0))).collect();
            let res = match_points(&net, &pts, &cfg).unwrap();
            assert_eq!(res.total_cost, brute_force(&net, &pts, &cfg), "round {round}");
            assert_eq!(res.total_cost, res.data_cost + lambda * res.model_cost);
        }
    }

    #[test]
    fn cost_nonincreasing_in_candidate_cap() {
        let net = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let pts: Vec<Point> =
                (0..5).map(|_| Point::new(rng.gen_range(0.0..600.0), rng.gen_range(0.0..600.0))).collect();
            let mut last = f64::INFINITY;
            for cap in [1, 2, 4, 8, 16, 40] {
                let cfg = MatchConfig { max_candidates_per_sample: cap, lambda: 0.05, ..MatchConfig::default() };
                let c = match_points(&net, &pts, &cfg).unwrap().total_cost;
                assert!(c <= last * (1.0 + 1e-12));
                last = c;
            }
        }
    }

    #[test]
    fn huge_lambda_minimizes_driving_distance() {
        let net = grid4();
        let pts = [Point::new(90.0, 20.0), Point::new(330.0, 180.0)];
        let cfg = MatchConfig::default().with_lambda(1e12);
        let res = match_points(&net, &pts, &cfg).unwrap();
        let c1 = generate_candidates(&net, pts[0], &cfg).unwrap();
        let c2 = generate_candidates(&net, pts[1], &cfg).unwrap();
        let mut min_d = f64::INFINITY;
        for a in &c1 {
            for b in &c2 {
                min_d = min_d.min(net.driving_distance(a.point, b.point).unwrap());
            }
        }
        assert!((res.model_cost.sqrt() - min_d).abs() < 1e-6);
    }

    #[test]
    fn stitch_examples() {
        let net = grid4();
        let p = net.road_point(3, 20.0).unwrap();
        assert!(stitch_path(&net, &[p]).unwrap().is_point());
        let q = net.road_point(3, 70.0).unwrap();
        let path = stitch_path(&net, &[p, q]).unwrap();
        assert_eq!(path.entries().len(), 1);
        assert_eq!(path.total_length(), 50.0);

        let pts = [p, net.road_point(10, 5.0).unwrap(), net.road_point(20, 100.0).unwrap(), q];
        let path = stitch_path(&net, &pts).unwrap();
        let expected: f64 = pts.windows(2).map(|w| net.driving_distance(w[0], w[1]).unwrap()).sum();
        assert!((path.total_length() - expected).abs() < 1e-9);
        assert!(path.is_connected(&net));
    }

    #[test]
    fn optimal_lambda_examples() {
        assert_eq!(optimal_lambda(100, 0.0, 10_000.0, 1.0), 0.0);
        assert!((optimal_lambda(100, 20.0, 10_000.0, 1.0) - 0.116_960).abs() < 1e-5);
        let r = optimal_lambda(50, 40.0, 7000.0, 0.3) / optimal_lambda(50, 20.0, 7000.0, 0.3);
        assert!((r - 2f64.powf(4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn fold_construction() {
        assert_eq!(fold_members(9, 3, 1), vec![0, 3, 6]);
        assert_eq!(fold_members(10, 3, 3), vec![2, 5, 8]);
    }

    #[test]
    fn sigma_of_noiseless_straight_road() {
        let net = lone_edge(2000.0);
        let track = Track::from_ordered_points((0..30).map(|i| Point::new(20.0 + 60.0 * i as f64, 0.0))).unwrap();
        // Only the foot of each sample is a candidate, so the matched path is the road itself.
        let cfg = MatchConfig { extra_candidates: 0, ..MatchConfig::default() };
        let folds = estimate_sigma_folds(&net, &track, &cfg).unwrap();
        assert_eq!(folds.len(), 5);
        assert!(folds.iter().all(|f| f.sigma.unwrap() < 1e-9));
        let s = estimate_sigma(&net, &track, &cfg).unwrap();
        let again = estimate_sigma(&net, &track, &cfg).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn sigma_needs_four_samples() {
        let net = lone_edge(100.0);
        let track = Track::from_ordered_points((0..3).map(|i| Point::new(10.0 * i as f64, 0.0))).unwrap();
        assert!(estimate_sigma(&net, &track, &MatchConfig::default()).is_err());
    }
}
