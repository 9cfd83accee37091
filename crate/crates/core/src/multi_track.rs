//! Matching several tracks recorded along the same route.
//!
//! All samples are pooled and put into one global order, either by iterated
//! projection onto a matched path or by spectral seriation of a pairwise
//! distance matrix. The ordered samples are then matched as a single track.
//! Boosting orders random subsamples and merges the orders by a local-search
//! consensus, which lets outlying samples drop out.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Shape};
use crate::parallel;
use crate::rng::substream;
use crate::road_network::RoadNetwork;
use crate::single_track::{match_points, match_track, MatchConfig, MatchResult, Track};

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOLERANCE: f64 = 1e-10;

/// Subset of pooled sample indices in a chosen order.
pub type Ordering = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledSample {
    pub index: usize,
    pub track: usize,
    /// Position within its own track.
    pub rank: usize,
    pub loc: Point,
}

/// Tracks assumed to follow one route, with their samples pooled track by track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    tracks: Vec<Track>,
    pooled: Vec<PooledSample>,
}

impl TrackSet {
    pub fn new(tracks: Vec<Track>) -> Result<Self> {
        if tracks.is_empty() {
            return Err(Error::InvalidInput("track set is empty".into()));
        }
        let mut pooled = Vec::new();
        for (k, t) in tracks.iter().enumerate() {
            for (rank, s) in t.samples().iter().enumerate() {
                pooled.push(PooledSample { index: pooled.len(), track: k, rank, loc: s.loc });
            }
        }
        Ok(TrackSet { tracks, pooled })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn pooled(&self) -> &[PooledSample] {
        &self.pooled
    }

    pub fn len(&self) -> usize {
        self.pooled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pooled.is_empty()
    }

    /// Subset indices grouped by track in rank order; empty groups are omitted.
    fn groups(&self, subset: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for i in sorted {
            let k = self.pooled[i].track;
            match out.last_mut() {
                Some((last, g)) if *last == k => g.push(i),
                _ => out.push((k, vec![i])),
            }
        }
        out
    }

    fn locs(&self, idx: &[usize]) -> Vec<Point> {
        idx.iter().map(|&i| self.pooled[i].loc).collect()
    }

    /// Parses tracks separated by lines starting with `#`.
    pub fn parse_sections(text: &str) -> Result<Self> {
        let mut sections = vec![String::new()];
        for line in text.lines() {
            if line.trim_start().starts_with('#') {
                sections.push(String::new());
            } else {
                let cur = sections.last_mut().unwrap();
                cur.push_str(line);
                cur.push('\n');
            }
        }
        let tracks = sections
            .iter()
            .filter(|s| !s.trim().is_empty())
            .enumerate()
            .map(|(i, s)| {
                Track::parse_csv(s).map_err(|e| Error::Parse(format!("track section {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        TrackSet::new(tracks)
    }

    pub fn to_sections(&self) -> String {
        self.tracks
            .iter()
            .enumerate()
            .map(|(i, t)| format!("# track {i}\n{}", t.to_csv()))
            .collect()
    }

    /// Reads a multi-section file, or every `*.csv` file of a directory in name order.
    pub fn read(path: &Path) -> Result<Self> {
        if path.is_dir() {
            let mut files: Vec<_> = std::fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            let tracks = files
                .iter()
                .map(|f| Track::parse_csv(&std::fs::read_to_string(f)?))
                .collect::<Result<Vec<_>>>()?;
            TrackSet::new(tracks)
        } else {
            TrackSet::parse_sections(&std::fs::read_to_string(path)?)
        }
    }
}

/// Symmetric nonnegative matrix with zero diagonal, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!("expected {} entries, got {}", n * n, data.len())));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = data[i * n + j];
                if !(v >= 0.0 && v.is_finite()) || v != data[j * n + i] {
                    return Err(Error::InvalidInput(format!("entry ({i},{j}) is not a symmetric distance")));
                }
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    /// Builds the matrix from the upper triangle `f(i, j)`, `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DistanceMatrix::new(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Decay constant of the exponential affinity `exp(-c * D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ScaleRule {
    /// `c = ln 2 / median` of the positive distances.
    #[default]
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseMethod {
    Iterative,
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Iterative,
    Laplacian,
    IterativeBoosted,
    LaplacianBoosted,
}

impl Method {
    pub const ALL: [Method; 4] =
        [Method::Iterative, Method::Laplacian, Method::IterativeBoosted, Method::LaplacianBoosted];

    pub fn base(self) -> BaseMethod {
        match self {
            Method::Iterative | Method::IterativeBoosted => BaseMethod::Iterative,
            Method::Laplacian | Method::LaplacianBoosted => BaseMethod::Laplacian,
        }
    }

    pub fn boosted(self) -> bool {
        matches!(self, Method::IterativeBoosted | Method::LaplacianBoosted)
    }

    pub fn with_boost(base: BaseMethod, boost: bool) -> Method {
        match (base, boost) {
            (BaseMethod::Iterative, false) => Method::Iterative,
            (BaseMethod::Laplacian, false) => Method::Laplacian,
            (BaseMethod::Iterative, true) => Method::IterativeBoosted,
            (BaseMethod::Laplacian, true) => Method::LaplacianBoosted,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Iterative => "iterative",
            Method::Laplacian => "laplacian",
            Method::IterativeBoosted => "iterative_boosted",
            Method::LaplacianBoosted => "laplacian_boosted",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub subsamples: usize,
    pub inclusion_prob: f64,
    /// Local-search restarts during aggregation.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig { subsamples: 10, inclusion_prob: 0.5, restarts: 100, seed: 0 }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsamples == 0 || self.restarts == 0 {
            return Err(Error::InvalidInput("boosting needs at least one subsample and one restart".into()));
        }
        if !(self.inclusion_prob > 0.0 && self.inclusion_prob <= 1.0) {
            return Err(Error::InvalidInput("inclusion probability must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiConfig {
    pub matching: MatchConfig,
    pub boost: BoostConfig,
    pub max_rounds: usize,
    pub scale: ScaleRule,
}

impl Default for MultiConfig {
    fn default() -> Self {
        MultiConfig { matching: MatchConfig::default(), boost: BoostConfig::default(), max_rounds: 20, scale: ScaleRule::Median }
    }
}

fn initial_group(groups: &[Vec<Point>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, g) in groups.iter().enumerate() {
        let shape = Shape::from_points(g.clone()).expect("groups are nonempty");
        let cost: f64 = groups
            .iter()
            .enumerate()
            .filter(|&(h, _)| h != k)
            .flat_map(|(_, h)| h.iter())
            .map(|&p| shape.nearest(p).dist)
            .sum();
        if cost < best.0 {
            best = (cost, k);
        }
    }
    best.1
}

/// Track whose sample polyline is closest, in summed distance, to the samples of all other tracks.
pub fn select_initial_track(tracks: &[Track]) -> usize {
    let groups: Vec<Vec<Point>> = tracks.iter().map(Track::points).collect();
    initial_group(&groups)
}

/// Sort key along a path: arc offset, extended past the ends by the distance
/// to the end, so samples beyond an end still sort among themselves.
fn along_path_key(shape: &Shape, p: Point) -> f64 {
    let proj = shape.nearest(p);
    if proj.arc_offset <= 0.0 {
        -proj.dist
    } else if proj.arc_offset >= shape.length() {
        shape.length() + proj.dist
    } else {
        proj.arc_offset
    }
}

fn iterative_subset(
    net: &RoadNetwork,
    ts: &TrackSet,
    subset: &[usize],
    cfg: &MatchConfig,
    max_rounds: usize,
) -> Result<Ordering> {
    let groups = ts.groups(subset);
    if groups.len() == 1 {
        return Ok(groups.into_iter().next().unwrap().1);
    }
    let points: Vec<Vec<Point>> = groups.iter().map(|(_, g)| ts.locs(g)).collect();
    let k0 = initial_group(&points);
    let mut result = match_points(net, &points[k0], cfg)
        .map_err(|e| Error::TrackMatch { track: groups[k0].0, source: Box::new(e) })?;
    let mut previous: Option<Ordering> = None;
    let rounds = max_rounds.max(1);
    for round in 1..=rounds {
        let shape = result.path.shape(net);
        let mut keyed: Vec<(f64, usize)> =
            subset.iter().map(|&i| (along_path_key(&shape, ts.pooled[i].loc), i)).collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let order: Ordering = keyed.into_iter().map(|(_, i)| i).collect();
        if previous.as_ref() == Some(&order) || round == rounds {
            log::debug!("iterative projection stopped after {round} rounds");
            return Ok(order);
        }
        result = match_points(net, &ts.locs(&order), cfg)?;
        previous = Some(order);
    }
    unreachable!("the last round always returns")
}

/// Orders all pooled samples by repeatedly projecting them onto the current
/// matched path and re-matching in the projected order.
pub fn iterative_projection_order(
    net: &RoadNetwork,
    ts: &TrackSet,
    cfg: &MatchConfig,
    max_rounds: usize,
) -> Result<Ordering> {
    let all: Vec<usize> = (0..ts.len()).collect();
    iterative_subset(net, ts, &all, cfg, max_rounds)
}

fn distance_matrix_subset(net: &RoadNetwork, ts: &TrackSet, subset: &[usize], cfg: &MatchConfig) -> Result<DistanceMatrix> {
    let groups = ts.groups(subset);
    let mut shapes = Vec::with_capacity(groups.len());
    let mut group_of = std::collections::HashMap::new();
    for (g, (k, idx)) in groups.iter().enumerate() {
        let result =
            match_points(net, &ts.locs(idx), cfg).map_err(|e| Error::TrackMatch { track: *k, source: Box::new(e) })?;
        shapes.push(result.path.shape(net));
        for &i in idx {
            group_of.insert(i, g);
        }
    }
    // Residual and arc offset of every sample on every matched path.
    let proj: Vec<Vec<(f64, f64)>> = subset
        .iter()
        .map(|&i| {
            shapes
                .iter()
                .map(|s| {
                    let p = s.nearest(ts.pooled[i].loc);
                    (p.dist, p.arc_offset)
                })
                .collect()
        })
        .collect();
    let along = |a: usize, b: usize, k: usize| proj[a][k].0 + proj[b][k].0 + (proj[a][k].1 - proj[b][k].1).abs();
    DistanceMatrix::from_fn(subset.len(), |a, b| {
        let (k, l) = (group_of[&subset[a]], group_of[&subset[b]]);
        0.5 * (along(a, b, k) + along(a, b, l))
    })
}

/// Pairwise sample distances through the individually matched paths of their tracks.
///
/// For samples `i` on track `k` and `j` on track `l`, each path contributes the
/// two projection residuals plus the distance along the path between the feet;
/// the entry averages the contributions of paths `k` and `l`.
pub fn build_distance_matrix(net: &RoadNetwork, ts: &TrackSet, cfg: &MatchConfig) -> Result<DistanceMatrix> {
    let all: Vec<usize> = (0..ts.len()).collect();
    distance_matrix_subset(net, ts, &all, cfg)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Weighted Laplacian `L = diag(W 1) - W` with `W_ij = exp(-c D_ij)`, row-major.
pub fn laplacian(d: &DistanceMatrix, scale: ScaleRule) -> Vec<f64> {
    let n = d.n();
    let c = match scale {
        ScaleRule::Fixed(c) => c,
        ScaleRule::Median => {
            let positive: Vec<f64> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d.get(i, j)).filter(|&v| v > 0.0).collect();
            median(positive).map_or(1.0, |m| std::f64::consts::LN_2 / m)
        }
    };
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                let w = (-c * d.get(i, j)).exp();
                l[i * n + j] = -w;
                row += w;
            }
        }
        l[i * n + i] = row;
    }
    l
}

/// Eigen-decomposition of a symmetric row-major matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues and the eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen(m: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tol = JACOBI_TOLERANCE * a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off_norm(&a) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok(((0..n).map(|i| a[i * n + i]).collect(), v))
}

/// Unit eigenvector of the second-smallest eigenvalue, orthogonal to the ones
/// vector, signed so its first nonzero component is positive.
pub fn fiedler_vector(l: &[f64], n: usize) -> Result<(f64, Vec<f64>)> {
    if n < 2 || l.len() != n * n {
        return Err(Error::InvalidInput("Fiedler vector needs a square matrix of size 2 or more".into()));
    }
    let (values, vectors) = symmetric_eigen(l, n)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let col = idx[1];
    let mut v: Vec<f64> = (0..n).map(|i| vectors[i * n + col]).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-9 * scale) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok((values[col], v))
}

/// Spectral seriation: indices `0..n` sorted by descending Fiedler component, ties by index.
pub fn laplacian_order(d: &DistanceMatrix, scale: ScaleRule) -> Result<Ordering> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidInput("seriation needs at least two samples".into()));
    }
    let (_, v) = fiedler_vector(&laplacian(d, scale), n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    Ok(order)
}

fn laplacian_subset(
    net: &RoadNetwork,
    ts: &TrackSet,
    subset: &[usize],
    cfg: &MatchConfig,
    scale: ScaleRule,
) -> Result<Ordering> {
    if subset.len() < 2 {
        return Ok(subset.to_vec());
    }
    let d = distance_matrix_subset(net, ts, subset, cfg)?;
    let order: Ordering = laplacian_order(&d, scale)?.into_iter().map(|k| subset[k]).collect();
    Ok(orient_by_time(ts, order))
}

/// Reverses `order` when it disagrees with the within-track time order on more
/// pairs than it agrees with. The spectral order has no inherent direction.
fn orient_by_time(ts: &TrackSet, mut order: Ordering) -> Ordering {
    let mut seen: Vec<Vec<usize>> = vec![Vec::new(); ts.tracks.len()];
    for &i in &order {
        seen[ts.pooled[i].track].push(ts.pooled[i].rank);
    }
    let agreement: i64 = seen
        .iter_mut()
        .map(|ranks| {
            let c = ranks.len() as i64;
            c * (c - 1) / 2 - 2 * count_inversions(ranks, &mut Vec::new()) as i64
        })
        .sum();
    if agreement < 0 {
        order.reverse();
    }
    order
}

fn count_inversions(v: &mut [usize], buf: &mut Vec<usize>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf.push(v[i]);
            i += 1;
        } else {
            inv += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..]);
    v.copy_from_slice(buf);
    inv
}

/// Pairs ordered alike in `a` and `b` minus pairs ordered oppositely, over their common elements.
pub fn consistency_score(a: &[usize], b: &[usize]) -> i64 {
    let pos_b: std::collections::HashMap<usize, usize> = b.iter().enumerate().map(|(p, &x)| (x, p)).collect();
    let mut seq: Vec<usize> = a.iter().filter_map(|x| pos_b.get(x).copied()).collect();
    let c = seq.len() as i64;
    let inv = count_inversions(&mut seq, &mut Vec::new()) as i64;
    c * (c - 1) / 2 - 2 * inv
}

/// Pairwise preference counts over the union of the orders' elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    /// Union support, ascending.
    pub elements: Vec<usize>,
    n: usize,
    m: Vec<i64>,
}

impl ScoreMatrix {
    pub fn new(orders: &[Ordering]) -> Self {
        let mut elements: Vec<usize> = orders.iter().flatten().copied().collect();
        elements.sort_unstable();
        elements.dedup();
        let n = elements.len();
        let local: std::collections::HashMap<usize, usize> = elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut m = vec![0i64; n * n];
        for order in orders {
            let ids: Vec<usize> = order.iter().map(|e| local[e]).collect();
            for p in 0..ids.len() {
                for q in p + 1..ids.len() {
                    m[ids[p] * n + ids[q]] += 1;
                    m[ids[q] * n + ids[p]] -= 1;
                }
            }
        }
        ScoreMatrix { elements, n, m }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Entry for local indices.
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.m[i * self.n + j]
    }

    /// Total consistency of a permutation of local indices with the inputs.
    pub fn score(&self, perm: &[usize]) -> i64 {
        let mut s = 0;
        for p in 0..perm.len() {
            for q in p + 1..perm.len() {
                s += self.get(perm[p], perm[q]);
            }
        }
        s
    }

    fn swap_gain(&self, perm: &[usize], p: usize, q: usize) -> i64 {
        let (a, b) = (perm[p], perm[q]);
        let mut before = self.get(a, b);
        for &c in &perm[p + 1..q] {
            before += self.get(a, c) + self.get(c, b);
        }
        -2 * before
    }

    /// First-improvement pairwise swaps until no swap raises the score.
    pub fn local_search(&self, perm: &mut [usize]) {
        loop {
            let mut improved = false;
            for p in 0..perm.len() {
                for q in p + 1..perm.len() {
                    if self.swap_gain(perm, p, q) > 0 {
                        perm.swap(p, q);
                        improved = true;
                    }
                }
            }
            if !improved {
                return;
            }
        }
    }

    /// Heaviest path in the DAG over `perm` with an edge from earlier to later
    /// elements wherever the score is positive.
    pub fn heaviest_chain(&self, perm: &[usize]) -> Vec<usize> {
        let n = perm.len();
        if n == 0 {
            return Vec::new();
        }
        let mut best = vec![0i64; n];
        let mut prev = vec![usize::MAX; n];
        for j in 0..n {
            for i in 0..j {
                let w = self.get(perm[i], perm[j]);
                if w > 0 && best[i] + w > best[j] {
                    best[j] = best[i] + w;
                    prev[j] = i;
                }
            }
        }
        let mut end = 0;
        for j in 1..n {
            if best[j] > best[end] {
                end = j;
            }
        }
        let mut chain = vec![perm[end]];
        while prev[end] != usize::MAX {
            end = prev[end];
            chain.push(perm[end]);
        }
        chain.reverse();
        chain
    }
}

/// Consensus of several partial orders.
///
/// Local search runs from each input (missing elements appended in ascending
/// order) and from `restarts - orders.len()` random permutations; the best
/// permutation is reduced to its heaviest consistent chain, so elements the
/// inputs disagree on can be left out.
pub fn aggregate_orders<R: Rng + ?Sized>(orders: &[Ordering], restarts: usize, rng: &mut R) -> Result<Ordering> {
    if orders.is_empty() {
        return Err(Error::InvalidInput("no orders to aggregate".into()));
    }
    let sm = ScoreMatrix::new(orders);
    let perm = consensus_permutation(&sm, orders, restarts, rng);
    Ok(sm.heaviest_chain(&perm).into_iter().map(|i| sm.elements[i]).collect())
}

/// Inputs as permutations of local indices, missing elements appended in ascending order.
fn input_starts(sm: &ScoreMatrix, orders: &[Ordering]) -> Vec<Vec<usize>> {
    let n = sm.len();
    let local: std::collections::HashMap<usize, usize> = sm.elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    orders
        .iter()
        .map(|o| {
            let mut seen = vec![false; n];
            let mut perm: Vec<usize> = o.iter().map(|e| local[e]).collect();
            perm.iter().for_each(|&i| seen[i] = true);
            perm.extend((0..n).filter(|&i| !seen[i]));
            perm
        })
        .collect()
}

/// Best locally optimal permutation over starts from every input plus random restarts.
fn consensus_permutation<R: Rng + ?Sized>(sm: &ScoreMatrix, orders: &[Ordering], restarts: usize, rng: &mut R) -> Vec<usize> {
    let mut starts = input_starts(sm, orders);
    for _ in orders.len()..restarts {
        let mut perm: Vec<usize> = (0..sm.len()).collect();
        perm.shuffle(rng);
        starts.push(perm);
    }
    let mut best: Option<(i64, Vec<usize>)> = None;
    for mut perm in starts {
        sm.local_search(&mut perm);
        let s = sm.score(&perm);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, perm));
        }
    }
    best.expect("at least one start").1
}

/// Bernoulli subsamples of `0..n`, each redrawn until it has at least two elements.
pub fn draw_subsamples<R: Rng + ?Sized>(n: usize, cfg: &BoostConfig, rng: &mut R) -> Vec<Vec<usize>> {
    (0..cfg.subsamples)
        .map(|_| loop {
            let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(cfg.inclusion_prob)).collect();
            if s.len() >= 2 || n < 2 {
                break s;
            }
        })
        .collect()
}

fn base_order(net: &RoadNetwork, ts: &TrackSet, subset: &[usize], base: BaseMethod, cfg: &MultiConfig) -> Result<Ordering> {
    match base {
        BaseMethod::Iterative => iterative_subset(net, ts, subset, &cfg.matching, cfg.max_rounds),
        BaseMethod::Laplacian => laplacian_subset(net, ts, subset, &cfg.matching, cfg.scale),
    }
}

/// Orders random subsamples with the base method and aggregates the results.
pub fn boost(net: &RoadNetwork, ts: &TrackSet, base: BaseMethod, cfg: &MultiConfig) -> Result<Ordering> {
    cfg.boost.validate()?;
    if ts.len() < 2 {
        return Ok((0..ts.len()).collect());
    }
    let subsets = draw_subsamples(ts.len(), &cfg.boost, &mut substream(cfg.boost.seed, &[1]));
    let results = parallel::map(&subsets, |s| base_order(net, ts, s, base, cfg));
    let orders: Vec<Ordering> = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map_err(|e| log::debug!("subsample {i} skipped: {e}")).ok())
        .collect();
    if orders.is_empty() {
        return Err(Error::AllSubsamplesFailed);
    }
    aggregate_orders(&orders, cfg.boost.restarts, &mut substream(cfg.boost.seed, &[2]))
}

/// Global order of the pooled samples under `method`.
pub fn order_samples(net: &RoadNetwork, ts: &TrackSet, method: Method, cfg: &MultiConfig) -> Result<Ordering> {
    let all: Vec<usize> = (0..ts.len()).collect();
    if method.boosted() {
        boost(net, ts, method.base(), cfg)
    } else {
        base_order(net, ts, &all, method.base(), cfg)
    }
}

/// Matches the pooled samples of all tracks as one track taken in the inferred order.
pub fn match_multi(net: &RoadNetwork, ts: &TrackSet, method: Method, cfg: &MultiConfig) -> Result<MatchResult> {
    if ts.tracks().len() == 1 {
        return match_track(net, &ts.tracks()[0], &cfg.matching);
    }
    let order = order_samples(net, ts, method, cfg)?;
    let merged = Track::from_ordered_points(ts.locs(&order))?;
    match_track(net, &merged, &cfg.matching)
}

#[cfg(test)]
mod tests;
