use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RoadNetwork, RoadPoint};
use crate::error::{Error, Result};
use crate::geometry::{Point, Shape};

/// A traversed interval of one edge. `lo <= hi` are offsets from the edge's
/// `from` node; `forward` says which way the interval was driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub edge: usize,
    pub lo: f64,
    pub hi: f64,
    pub forward: bool,
}

impl PathEntry {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn start(&self) -> RoadPoint {
        RoadPoint { edge: self.edge, offset: if self.forward { self.lo } else { self.hi } }
    }

    pub fn end(&self) -> RoadPoint {
        RoadPoint { edge: self.edge, offset: if self.forward { self.hi } else { self.lo } }
    }
}

/// A connected drivable path. A single degenerate entry encodes a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePath {
    entries: Vec<PathEntry>,
    total_length: f64,
}

impl RoutePath {
    /// Zero-length path sitting at `p`.
    pub fn point(p: RoadPoint) -> Self {
        RoutePath {
            entries: vec![PathEntry { edge: p.edge, lo: p.offset, hi: p.offset, forward: true }],
            total_length: 0.0,
        }
    }

    /// Drops degenerate pieces; falls back to a point path at `start`.
    pub(crate) fn from_pieces(pieces: Vec<PathEntry>, start: RoadPoint) -> Self {
        let entries: Vec<PathEntry> = pieces.into_iter().filter(|p| p.hi > p.lo).collect();
        if entries.is_empty() {
            return RoutePath::point(start);
        }
        let total_length = entries.iter().map(PathEntry::len).sum();
        RoutePath { entries, total_length }
    }

    /// Checked constructor for paths read from files.
    pub fn from_entries(net: &RoadNetwork, entries: Vec<PathEntry>) -> Result<Self> {
        let first = *entries
            .first()
            .ok_or_else(|| Error::InvalidInput("path has no entries".into()))?;
        for e in &entries {
            if e.edge >= net.edge_count() {
                return Err(Error::InvalidInput(format!("path references missing edge {}", e.edge)));
            }
            let len = net.edge(e.edge).length;
            if !(e.lo >= 0.0 && e.lo <= e.hi && e.hi <= len + 1e-6) {
                return Err(Error::InvalidInput(format!("bad interval [{}, {}] on edge {}", e.lo, e.hi, e.edge)));
            }
        }
        Ok(RoutePath::from_pieces(entries, first.start()))
    }

    pub fn entries(&self) -> &[PathEntry] {
        &self.entries
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn is_point(&self) -> bool {
        self.total_length == 0.0
    }

    pub fn start(&self) -> RoadPoint {
        self.entries[0].start()
    }

    pub fn end(&self) -> RoadPoint {
        self.entries.last().expect("nonempty").end()
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn extend(&mut self, other: RoutePath) {
        if other.is_point() {
            return;
        }
        if self.is_point() {
            *self = other;
            return;
        }
        self.total_length += other.total_length;
        let mut rest = other.entries.into_iter();
        if let Some(first) = rest.next() {
            let last = self.entries.last_mut().expect("nonempty");
            match (last.edge == first.edge && last.forward == first.forward, first.forward) {
                (true, true) if last.hi == first.lo => last.hi = first.hi,
                (true, false) if last.lo == first.hi => last.lo = first.lo,
                _ => self.entries.push(first),
            }
        }
        self.entries.extend(rest);
    }

    /// True when consecutive entries meet at a shared node or edge position.
    pub fn is_connected(&self, net: &RoadNetwork) -> bool {
        self.entries.windows(2).all(|w| {
            let a = w[0].end();
            let b = w[1].start();
            net.location(a) == net.location(b) || crate::geometry::distance(net.location(a), net.location(b)) < 1e-6
        })
    }

    /// Vertices of the driven geometry, in driving order.
    pub fn points(&self, net: &RoadNetwork) -> Vec<Point> {
        if self.is_point() {
            return vec![net.location(self.start())];
        }
        let mut out: Vec<Point> = Vec::new();
        for e in &self.entries {
            let mut pts = net.edge(e.edge).geometry.sub_points(e.lo, e.hi);
            if !e.forward {
                pts.reverse();
            }
            for p in pts {
                if out.last() != Some(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Projection target for this path.
    pub fn shape(&self, net: &RoadNetwork) -> Shape {
        Shape::from_points(self.points(net)).expect("path has at least one point")
    }
}

/// Disjoint, sorted, closed intervals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    spans: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    pub fn insert(&mut self, lo: f64, hi: f64) {
        if hi <= lo {
            return;
        }
        let mut merged = Vec::with_capacity(self.spans.len() + 1);
        let (mut lo, mut hi) = (lo, hi);
        let mut placed = false;
        for &(a, b) in &self.spans {
            if b < lo {
                merged.push((a, b));
            } else if a > hi {
                if !placed {
                    merged.push((lo, hi));
                    placed = true;
                }
                merged.push((a, b));
            } else {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if !placed {
            merged.push((lo, hi));
        }
        self.spans = merged;
    }

    pub fn measure(&self) -> f64 {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    pub fn intersection_measure(&self, other: &IntervalSet) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < self.spans.len() && j < other.spans.len() {
            let (a0, a1) = self.spans[i];
            let (b0, b1) = other.spans[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                total += hi - lo;
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    pub fn union_measure(&self, other: &IntervalSet) -> f64 {
        self.measure() + other.measure() - self.intersection_measure(other)
    }
}

/// Traversed measure of a path: merged intervals per (undirected) edge id.
pub fn traversal_measure(path: &RoutePath) -> BTreeMap<usize, IntervalSet> {
    let mut out: BTreeMap<usize, IntervalSet> = BTreeMap::new();
    for e in path.entries() {
        if e.hi > e.lo {
            out.entry(e.edge).or_default().insert(e.lo, e.hi);
        }
    }
    out
}
