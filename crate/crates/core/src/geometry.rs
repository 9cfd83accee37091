//! Planar primitives, polyline projection and a segment quad-tree.
//!
//! Everything is expressed in planar meters. Inputs in longitude/latitude are
//! converted once at ingestion with [`equirectangular`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation, `t = 0` gives `self`.
    pub fn lerp(&self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

/// Euclidean distance.
pub fn distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

pub fn distance_sq(p: Point, q: Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    dx * dx + dy * dy
}

/// Closest point of a segment to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProjection {
    pub foot: Point,
    /// Distance from `a` to `foot` along the segment.
    pub offset: f64,
    pub dist: f64,
}

/// Projects `p` onto the segment `ab`. A degenerate segment behaves as the point `a`.
pub fn project_to_segment(p: Point, a: Point, b: Point) -> SegmentProjection {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return SegmentProjection { foot: a, offset: 0.0, dist: distance(p, a) };
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq).clamp(0.0, 1.0);
    let foot = if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a.lerp(b, t)
    };
    SegmentProjection { foot, offset: t * len_sq.sqrt(), dist: distance(p, foot) }
}

/// Distance from `p` to the segment `ab`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    project_to_segment(p, a, b).dist
}

/// Converts longitude/latitude degrees to planar meters about `origin` (lon, lat).
pub fn equirectangular(lon: f64, lat: f64, origin: (f64, f64)) -> Point {
    let (lon0, lat0) = origin;
    let x = EARTH_RADIUS_M * (lon - lon0).to_radians() * lat0.to_radians().cos();
    let y = EARTH_RADIUS_M * (lat - lat0).to_radians();
    Point::new(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of_segment(a: Point, b: Point) -> Self {
        BBox {
            min: Point::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.min.x <= other.min.x
            && self.min.y <= other.min.y
            && self.max.x >= other.max.x
            && self.max.y >= other.max.y
    }

    /// Distance from `p` to the box (zero inside).
    pub fn distance_to(&self, p: Point) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    fn quadrants(&self) -> [BBox; 4] {
        let c = self.min.lerp(self.max, 0.5);
        [
            BBox { min: self.min, max: c },
            BBox { min: Point::new(c.x, self.min.y), max: Point::new(self.max.x, c.y) },
            BBox { min: Point::new(self.min.x, c.y), max: Point::new(c.x, self.max.y) },
            BBox { min: c, max: self.max },
        ]
    }
}

/// A segment stored in the quad-tree together with the id of whatever owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexedSegment {
    pub a: Point,
    pub b: Point,
    pub owner: usize,
}

#[derive(Debug, Clone)]
struct QuadNode {
    bbox: BBox,
    items: Vec<usize>,
    children: Option<Box<[QuadNode; 4]>>,
    depth: usize,
}

/// Result of a nearest-segment query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestSegment {
    /// Position of the segment in insertion order.
    pub segment: usize,
    pub owner: usize,
    pub projection: SegmentProjection,
}

/// Region quad-tree over line segments.
///
/// A segment lives in the deepest node whose box fully contains its bounding
/// box, so segments crossing a split line stay in the parent.
#[derive(Debug, Clone)]
pub struct QuadTree {
    root: QuadNode,
    segments: Vec<IndexedSegment>,
    capacity: usize,
    max_depth: usize,
}

impl QuadTree {
    pub const DEFAULT_CAPACITY: usize = 16;
    pub const DEFAULT_MAX_DEPTH: usize = 20;

    pub fn new(bbox: BBox) -> Self {
        Self::with_params(bbox, Self::DEFAULT_CAPACITY, Self::DEFAULT_MAX_DEPTH)
    }

    pub fn with_params(bbox: BBox, capacity: usize, max_depth: usize) -> Self {
        QuadTree {
            root: QuadNode { bbox, items: Vec::new(), children: None, depth: 0 },
            segments: Vec::new(),
            capacity: capacity.max(1),
            max_depth,
        }
    }

    /// Builds a tree sized to the given segments.
    pub fn from_segments(segments: impl IntoIterator<Item = IndexedSegment>) -> Self {
        let segments: Vec<IndexedSegment> = segments.into_iter().collect();
        let bbox = segments
            .iter()
            .map(|s| BBox::of_segment(s.a, s.b))
            .reduce(|acc, b| acc.union(&b))
            .unwrap_or(BBox { min: Point::new(0.0, 0.0), max: Point::new(1.0, 1.0) });
        // Square, slightly padded root so splits stay well conditioned.
        let side = (bbox.max.x - bbox.min.x).max(bbox.max.y - bbox.min.y).max(1.0) * 1.01;
        let c = bbox.min.lerp(bbox.max, 0.5);
        let half = side / 2.0;
        let root = BBox { min: Point::new(c.x - half, c.y - half), max: Point::new(c.x + half, c.y + half) };
        let mut tree = QuadTree::new(root);
        for s in segments {
            tree.insert(s);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[IndexedSegment] {
        &self.segments
    }

    pub fn insert(&mut self, seg: IndexedSegment) {
        let id = self.segments.len();
        self.segments.push(seg);
        let bbox = BBox::of_segment(seg.a, seg.b);
        if !self.root.bbox.contains(&bbox) {
            self.grow_to(&bbox);
        }
        let (capacity, max_depth) = (self.capacity, self.max_depth);
        Self::insert_into(&mut self.root, id, &bbox, &self.segments, capacity, max_depth);
    }

    fn grow_to(&mut self, bbox: &BBox) {
        // Rebuild with a box covering everything; only hit for trees built with `new`.
        let all = self.root.bbox.union(bbox);
        let side = (all.max.x - all.min.x).max(all.max.y - all.min.y) * 1.5;
        let c = all.min.lerp(all.max, 0.5);
        let half = side / 2.0;
        self.root = QuadNode {
            bbox: BBox { min: Point::new(c.x - half, c.y - half), max: Point::new(c.x + half, c.y + half) },
            items: Vec::new(),
            children: None,
            depth: 0,
        };
        let (capacity, max_depth) = (self.capacity, self.max_depth);
        for id in 0..self.segments.len() - 1 {
            let s = self.segments[id];
            let b = BBox::of_segment(s.a, s.b);
            Self::insert_into(&mut self.root, id, &b, &self.segments, capacity, max_depth);
        }
    }

    fn insert_into(
        node: &mut QuadNode,
        id: usize,
        bbox: &BBox,
        segments: &[IndexedSegment],
        capacity: usize,
        max_depth: usize,
    ) {
        if let Some(children) = node.children.as_mut() {
            if let Some(child) = children.iter_mut().find(|c| c.bbox.contains(bbox)) {
                Self::insert_into(child, id, bbox, segments, capacity, max_depth);
                return;
            }
            node.items.push(id);
            return;
        }
        node.items.push(id);
        if node.items.len() > capacity && node.depth < max_depth {
            let quads = node.bbox.quadrants();
            let depth = node.depth + 1;
            node.children = Some(Box::new(quads.map(|q| QuadNode {
                bbox: q,
                items: Vec::new(),
                children: None,
                depth,
            })));
            let items = std::mem::take(&mut node.items);
            for item in items {
                let s = segments[item];
                let b = BBox::of_segment(s.a, s.b);
                Self::insert_into(node, item, &b, segments, capacity, max_depth);
            }
        }
    }

    /// Nearest segment to `p`. Ties resolve to the lowest insertion index.
    pub fn nearest(&self, p: Point) -> Option<NearestSegment> {
        struct Entry<'a> {
            dist: f64,
            node: &'a QuadNode,
        }
        impl PartialEq for Entry<'_> {
            fn eq(&self, other: &Self) -> bool {
                self.dist == other.dist
            }
        }
        impl Eq for Entry<'_> {}
        impl PartialOrd for Entry<'_> {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry<'_> {
            fn cmp(&self, other: &Self) -> Ordering {
                other.dist.total_cmp(&self.dist)
            }
        }

        let mut best: Option<NearestSegment> = None;
        let mut heap = BinaryHeap::new();
        heap.push(Entry { dist: self.root.bbox.distance_to(p), node: &self.root });
        while let Some(Entry { dist, node }) = heap.pop() {
            if let Some(b) = &best {
                if dist > b.projection.dist {
                    break;
                }
            }
            for &id in &node.items {
                let s = &self.segments[id];
                let proj = project_to_segment(p, s.a, s.b);
                let better = match &best {
                    None => true,
                    Some(b) => proj.dist < b.projection.dist || (proj.dist == b.projection.dist && id < b.segment),
                };
                if better {
                    best = Some(NearestSegment { segment: id, owner: s.owner, projection: proj });
                }
            }
            if let Some(children) = &node.children {
                for c in children.iter() {
                    heap.push(Entry { dist: c.bbox.distance_to(p), node: c });
                }
            }
        }
        best
    }

    /// Insertion indices of all segments within `r` of `p`, ascending.
    pub fn within(&self, p: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if node.bbox.distance_to(p) > r {
                continue;
            }
            for &id in &node.items {
                let s = &self.segments[id];
                if segment_distance(p, s.a, s.b) <= r {
                    out.push(id);
                }
            }
            if let Some(children) = &node.children {
                stack.extend(children.iter());
            }
        }
        out.sort_unstable();
        out
    }
}

/// Nearest point on a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    pub foot: Point,
    pub arc_offset: f64,
    pub dist: f64,
    /// Index of the segment holding `foot`.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polyline {
    vertices: Vec<Point>,
    cum_length: Vec<f64>,
}

impl TryFrom<Vec<Point>> for Polyline {
    type Error = Error;

    fn try_from(vertices: Vec<Point>) -> Result<Self> {
        Polyline::new(vertices)
    }
}

impl From<Polyline> for Vec<Point> {
    fn from(pl: Polyline) -> Self {
        pl.vertices
    }
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("polyline needs at least two vertices".into()));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite polyline vertex {p:?}")));
        }
        let mut cum_length = Vec::with_capacity(vertices.len());
        cum_length.push(0.0);
        for w in vertices.windows(2) {
            let last = *cum_length.last().unwrap();
            cum_length.push(last + distance(w[0], w[1]));
        }
        if *cum_length.last().unwrap() <= 0.0 {
            return Err(Error::InvalidInput("polyline has zero length".into()));
        }
        Ok(Polyline { vertices, cum_length })
    }

    /// Builds a polyline, dropping consecutive duplicate vertices first.
    pub fn from_points_dedup(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut vertices: Vec<Point> = Vec::new();
        for p in points {
            if vertices.last().is_none_or(|&q| q != p) {
                vertices.push(p);
            }
        }
        Polyline::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cum_length(&self) -> &[f64] {
        &self.cum_length
    }

    pub fn length(&self) -> f64 {
        *self.cum_length.last().unwrap()
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().unwrap()
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[i + 1])
    }

    /// Point at arc offset `s`, clamped to the polyline.
    pub fn point_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.length());
        let i = match self.cum_length.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return self.vertices[i],
            Err(i) => i - 1,
        };
        let seg = self.cum_length[i + 1] - self.cum_length[i];
        self.vertices[i].lerp(self.vertices[i + 1], (s - self.cum_length[i]) / seg)
    }

    /// Vertices of the sub-polyline between arc offsets `lo <= hi`.
    pub fn sub_points(&self, lo: f64, hi: f64) -> Vec<Point> {
        let mut out = vec![self.point_at(lo)];
        for (i, &c) in self.cum_length.iter().enumerate() {
            if c > lo && c < hi {
                out.push(self.vertices[i]);
            }
        }
        out.push(self.point_at(hi));
        out
    }

    /// Segment quad-tree owned by this polyline; owners are segment indices.
    pub fn build_index(&self) -> QuadTree {
        QuadTree::from_segments(
            self.vertices
                .windows(2)
                .enumerate()
                .map(|(i, w)| IndexedSegment { a: w[0], b: w[1], owner: i }),
        )
    }

    fn projection_on(&self, p: Point, segment: usize) -> PolylineProjection {
        let (a, b) = self.segment(segment);
        let proj = project_to_segment(p, a, b);
        // Clamped ends land exactly on the cumulative vertex offsets.
        let arc_offset = if proj.foot == b {
            self.cum_length[segment + 1]
        } else {
            self.cum_length[segment] + proj.offset
        };
        PolylineProjection { foot: proj.foot, arc_offset, dist: proj.dist, segment }
    }

    /// Nearest point by scanning every segment; ties go to the earliest segment.
    pub fn nearest_linear(&self, p: Point) -> PolylineProjection {
        let mut best = self.projection_on(p, 0);
        for i in 1..self.segment_count() {
            let cand = self.projection_on(p, i);
            if cand.dist < best.dist {
                best = cand;
            }
        }
        best
    }

    /// Nearest point using a quad-tree built by [`Polyline::build_index`].
    pub fn nearest_with_index(&self, p: Point, index: &QuadTree) -> Result<PolylineProjection> {
        let hit = index
            .nearest(p)
            .ok_or_else(|| Error::InvalidInput("empty polyline index".into()))?;
        if hit.owner >= self.segment_count() {
            return Err(Error::InvalidInput("index does not belong to this polyline".into()));
        }
        Ok(self.projection_on(p, hit.owner))
    }

    /// Length along the polyline between arc offsets `s` and `t`.
    pub fn arc_length_between(&self, s: f64, t: f64) -> Result<f64> {
        let total = self.length();
        for v in [s, t] {
            if !(0.0..=total).contains(&v) {
                return Err(Error::InvalidInput(format!("arc offset {v} outside [0, {total}]")));
            }
        }
        Ok((t - s).abs())
    }
}

/// Polyline bundled with its segment index.
#[derive(Debug, Clone)]
pub struct IndexedPolyline {
    polyline: Polyline,
    index: QuadTree,
}

impl IndexedPolyline {
    pub fn new(polyline: Polyline) -> Self {
        let index = polyline.build_index();
        IndexedPolyline { polyline, index }
    }

    pub fn polyline(&self) -> &Polyline {
        &self.polyline
    }

    pub fn nearest(&self, p: Point) -> PolylineProjection {
        self.polyline
            .nearest_with_index(p, &self.index)
            .expect("index built from this polyline")
    }
}

/// Shape onto which samples are projected: a polyline, or a single point when the
/// underlying path has zero length.
#[derive(Debug, Clone)]
pub enum Shape {
    Point(Point),
    Line(IndexedPolyline),
}

impl Shape {
    pub fn from_points(points: Vec<Point>) -> Result<Shape> {
        let first = *points
            .first()
            .ok_or_else(|| Error::InvalidInput("shape needs at least one point".into()))?;
        match Polyline::from_points_dedup(points) {
            Ok(pl) => Ok(Shape::Line(IndexedPolyline::new(pl))),
            Err(_) => Ok(Shape::Point(first)),
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Shape::Point(_) => 0.0,
            Shape::Line(l) => l.polyline.length(),
        }
    }

    pub fn nearest(&self, p: Point) -> PolylineProjection {
        match self {
            Shape::Point(q) => PolylineProjection { foot: *q, arc_offset: 0.0, dist: distance(p, *q), segment: 0 },
            Shape::Line(l) => l.nearest(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn l_shape() -> Polyline {
        Polyline::new(vec![p(0.0, 0.0), p(10.0, 0.0), p(10.0, 10.0)]).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(p(0.0, 0.0), p(3.0, 4.0)), 5.0);
        assert_eq!(distance(p(1.0, 1.0), p(1.0, 1.0)), 0.0);
        assert_eq!(distance(p(-2.0, 0.0), p(2.0, 0.0)), 4.0);
    }

    #[test]
    fn segment_projection_examples() {
        let r = project_to_segment(p(1.0, 1.0), p(0.0, 0.0), p(2.0, 0.0));
        assert_eq!(r.foot, p(1.0, 0.0));
        assert_eq!(r.offset, 1.0);
        assert_eq!(r.dist, 1.0);

        let r = project_to_segment(p(-1.0, 1.0), p(0.0, 0.0), p(2.0, 0.0));
        assert_eq!(r.foot, p(0.0, 0.0));
        assert_eq!(r.offset, 0.0);
        assert!((r.dist - 2f64.sqrt()).abs() < 1e-12);

        let r = project_to_segment(p(0.5, 0.0), p(0.0, 0.0), p(2.0, 0.0));
        assert_eq!(r.foot, p(0.5, 0.0));
        assert_eq!(r.dist, 0.0);

        let r = project_to_segment(p(3.0, 4.0), p(0.0, 0.0), p(0.0, 0.0));
        assert_eq!((r.offset, r.dist), (0.0, 5.0));
    }

    #[test]
    fn polyline_nearest_examples() {
        let pl = l_shape();
        let idx = pl.build_index();
        let r = pl.nearest_with_index(p(10.0, 0.0), &idx).unwrap();
        assert_eq!((r.foot, r.dist), (p(10.0, 0.0), 0.0));

        let r = pl.nearest_with_index(p(11.0, 5.0), &idx).unwrap();
        assert_eq!(r.foot, p(10.0, 5.0));
        assert_eq!(r.arc_offset, 15.0);
        assert_eq!(r.dist, 1.0);
    }

    #[test]
    fn empty_polyline_is_rejected() {
        assert!(Polyline::new(vec![]).is_err());
        assert!(Polyline::new(vec![p(1.0, 1.0)]).is_err());
        assert!(Polyline::new(vec![p(1.0, 1.0), p(1.0, 1.0)]).is_err());
        let empty = QuadTree::from_segments(Vec::new());
        assert!(l_shape().nearest_with_index(p(0.0, 0.0), &empty).is_err());
    }

    #[test]
    fn arc_length_examples() {
        let pl = l_shape();
        assert_eq!(pl.arc_length_between(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(pl.arc_length_between(0.0, pl.length()).unwrap(), 20.0);
        assert_eq!(pl.arc_length_between(5.0, 15.0).unwrap(), 10.0);
        assert!(pl.arc_length_between(-1.0, 3.0).is_err());
        assert!(pl.arc_length_between(0.0, 20.5).is_err());
    }

    #[test]
    fn point_at_and_sub_points() {
        let pl = l_shape();
        assert_eq!(pl.point_at(15.0), p(10.0, 5.0));
        assert_eq!(pl.point_at(10.0), p(10.0, 0.0));
        assert_eq!(pl.sub_points(5.0, 15.0), vec![p(5.0, 0.0), p(10.0, 0.0), p(10.0, 5.0)]);
    }

    fn random_polyline(rng: &mut ChaCha8Rng) -> Polyline {
        let n = rng.gen_range(2..40);
        let mut pts = vec![p(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0))];
        for _ in 1..n {
            let last = *pts.last().unwrap();
            pts.push(p(last.x + rng.gen_range(-80.0..80.0), last.y + rng.gen_range(-80.0..80.0)));
        }
        Polyline::from_points_dedup(pts).unwrap()
    }

    #[test]
    fn indexed_nearest_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let pl = random_polyline(&mut rng);
            let idx = pl.build_index();
            let q = p(rng.gen_range(-900.0..900.0), rng.gen_range(-900.0..900.0));
            let fast = pl.nearest_with_index(q, &idx).unwrap();
            // Oracle: every segment projected independently.
            let mut best = f64::INFINITY;
            for i in 0..pl.segment_count() {
                let (a, b) = pl.segment(i);
                best = best.min(project_to_segment(q, a, b).dist);
            }
            assert_eq!(fast.dist, best);
            assert_eq!(fast, pl.nearest_linear(q));
            assert!(fast.arc_offset >= 0.0 && fast.arc_offset <= pl.length());
        }
    }

    #[test]
    fn quadtree_round_trips_every_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let segs: Vec<IndexedSegment> = (0..600)
            .map(|i| {
                let a = p(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0));
                let b = p(a.x + rng.gen_range(-20.0..20.0), a.y + rng.gen_range(-20.0..20.0));
                IndexedSegment { a, b, owner: i }
            })
            .collect();
        let tree = QuadTree::from_segments(segs.clone());
        for (i, s) in segs.iter().enumerate() {
            let mid = s.a.lerp(s.b, 0.5);
            assert!(tree.within(mid, 1e-9).contains(&i));
            assert!(tree.nearest(mid).unwrap().projection.dist < 1e-9);
        }
        let q = p(500.0, 500.0);
        let brute: Vec<usize> =
            (0..segs.len()).filter(|&i| segment_distance(q, segs[i].a, segs[i].b) <= 120.0).collect();
        assert_eq!(tree.within(q, 120.0), brute);
    }

    #[test]
    fn quadtree_grows_for_outside_inserts() {
        let mut tree = QuadTree::new(BBox { min: p(0.0, 0.0), max: p(1.0, 1.0) });
        for i in 0..50 {
            let x = i as f64 * 10.0;
            tree.insert(IndexedSegment { a: p(x, 0.0), b: p(x + 1.0, 1.0), owner: i });
        }
        for i in 0..50 {
            let x = i as f64 * 10.0;
            assert_eq!(tree.nearest(p(x + 0.5, 0.5)).unwrap().owner, i);
        }
    }

    #[test]
    fn equirectangular_origin_maps_to_zero() {
        let o = equirectangular(-122.3, 47.6, (-122.3, 47.6));
        assert_eq!(o, p(0.0, 0.0));
        let north = equirectangular(-122.3, 47.601, (-122.3, 47.6));
        assert!((north.y - 111.2).abs() < 0.5);
    }

    proptest! {
        #[test]
        fn triangle_inequality(ax in -1e4..1e4f64, ay in -1e4..1e4f64, bx in -1e4..1e4f64,
                               by in -1e4..1e4f64, cx in -1e4..1e4f64, cy in -1e4..1e4f64) {
            let (a, b, c) = (p(ax, ay), p(bx, by), p(cx, cy));
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
            prop_assert_eq!(distance(a, b), distance(b, a));
        }
    }
}
