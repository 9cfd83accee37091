//! Uniform-cost searches between road points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::path::{PathEntry, RoutePath};
use super::{RoadNetwork, RoadPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// How a search tree reached a node.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Link {
    Unseen,
    /// Directly from the road point; `forward` tells which way along its edge.
    Seed { forward: bool },
    /// Through an arc: the neighbouring node, the edge and its direction of travel.
    Arc { node: usize, edge: usize, forward: bool },
}

/// Nodes a point can leave through, with the cost of getting there.
fn exits(net: &RoadNetwork, p: RoadPoint) -> Vec<(usize, f64, bool)> {
    let e = net.edge(p.edge);
    let mut out = vec![(e.to, e.length - p.offset, true)];
    if !e.oneway || p.offset == 0.0 {
        out.push((e.from, p.offset, false));
    }
    out
}

/// Nodes a point can be entered from, with the remaining cost.
fn entries(net: &RoadNetwork, p: RoadPoint) -> Vec<(usize, f64, bool)> {
    let e = net.edge(p.edge);
    let mut out = vec![(e.from, p.offset, true)];
    if !e.oneway || p.offset == e.length {
        out.push((e.to, e.length - p.offset, false));
    }
    out
}

/// Distance when both points share an edge and the edge can be followed directly.
fn same_edge(net: &RoadNetwork, a: RoadPoint, b: RoadPoint) -> Option<f64> {
    if a.edge != b.edge {
        return None;
    }
    if b.offset >= a.offset {
        Some(b.offset - a.offset)
    } else if !net.edge(a.edge).oneway {
        Some(a.offset - b.offset)
    } else {
        None
    }
}

struct Tree {
    dist: Vec<f64>,
    link: Vec<Link>,
    settled: Vec<bool>,
    heap: BinaryHeap<State>,
}

impl Tree {
    fn new(n: usize, seeds: &[(usize, f64, bool)]) -> Self {
        let mut t = Tree {
            dist: vec![f64::INFINITY; n],
            link: vec![Link::Unseen; n],
            settled: vec![false; n],
            heap: BinaryHeap::new(),
        };
        for &(node, cost, forward) in seeds {
            if cost < t.dist[node] {
                t.dist[node] = cost;
                t.link[node] = Link::Seed { forward };
                t.heap.push(State { cost, node });
            }
        }
        t
    }

    fn peek(&mut self) -> f64 {
        while let Some(s) = self.heap.peek() {
            if self.settled[s.node] || s.cost > self.dist[s.node] {
                self.heap.pop();
            } else {
                return s.cost;
            }
        }
        f64::INFINITY
    }
}

fn entry_of(net: &RoadNetwork, edge: usize, forward: bool) -> PathEntry {
    PathEntry { edge, lo: 0.0, hi: net.edge(edge).length, forward }
}

/// Bidirectional uniform-cost search. Returns the distance and the route.
pub(super) fn shortest(net: &RoadNetwork, a: RoadPoint, b: RoadPoint) -> Result<(f64, RoutePath)> {
    let n = net.node_count();
    let direct = same_edge(net, a, b);
    let src = exits(net, a);
    let dst = entries(net, b);
    let mut fwd = Tree::new(n, &src);
    let mut bwd = Tree::new(n, &dst);

    let mut best = direct.unwrap_or(f64::INFINITY);
    let mut meet: Option<usize> = None;
    for &(node, c, _) in &src {
        if bwd.dist[node] + c < best {
            best = bwd.dist[node] + c;
            meet = Some(node);
        }
    }

    loop {
        let tf = fwd.peek();
        let tb = bwd.peek();
        if tf + tb >= best || (tf.is_infinite() && tb.is_infinite()) {
            break;
        }
        let forward_step = tf <= tb;
        let (this, other) = if forward_step { (&mut fwd, &bwd) } else { (&mut bwd, &fwd) };
        let State { cost, node } = this.heap.pop().expect("peeked");
        this.settled[node] = true;
        let arcs = if forward_step { net.out_arcs(node) } else { net.in_arcs(node) };
        for arc in arcs {
            let nc = cost + net.edge(arc.edge).length;
            if nc < this.dist[arc.node] {
                this.dist[arc.node] = nc;
                this.link[arc.node] = Link::Arc { node, edge: arc.edge, forward: arc.forward };
                this.heap.push(State { cost: nc, node: arc.node });
            }
            let through = this.dist[arc.node] + other.dist[arc.node];
            if through < best {
                best = through;
                meet = Some(arc.node);
            }
        }
    }

    if best.is_infinite() {
        return Err(Error::Unreachable { from: format!("{a:?}"), to: format!("{b:?}") });
    }
    let Some(m) = meet else {
        return Ok((best, direct_path(a, b)));
    };
    if direct.is_some_and(|d| d <= best) {
        return Ok((best, direct_path(a, b)));
    }

    // Walk the forward tree back to the source, then the backward tree on to the target.
    let mut middle = Vec::new();
    let mut cur = m;
    let src_forward = loop {
        match fwd.link[cur] {
            Link::Seed { forward } => break forward,
            Link::Arc { node, edge, forward } => {
                middle.push(entry_of(net, edge, forward));
                cur = node;
            }
            Link::Unseen => unreachable!("meeting node is in the forward tree"),
        }
    };
    middle.reverse();
    let mut cur = m;
    let dst_forward = loop {
        match bwd.link[cur] {
            Link::Seed { forward } => break forward,
            Link::Arc { node, edge, forward } => {
                middle.push(entry_of(net, edge, forward));
                cur = node;
            }
            Link::Unseen => unreachable!("meeting node is in the backward tree"),
        }
    };

    let ea = net.edge(a.edge);
    let eb = net.edge(b.edge);
    let mut pieces = Vec::with_capacity(middle.len() + 2);
    pieces.push(if src_forward {
        PathEntry { edge: a.edge, lo: a.offset, hi: ea.length, forward: true }
    } else {
        PathEntry { edge: a.edge, lo: 0.0, hi: a.offset, forward: false }
    });
    pieces.extend(middle);
    pieces.push(if dst_forward {
        PathEntry { edge: b.edge, lo: 0.0, hi: b.offset, forward: true }
    } else {
        PathEntry { edge: b.edge, lo: b.offset, hi: eb.length, forward: false }
    });
    let path = RoutePath::from_pieces(pieces, a);
    Ok((best, path))
}

fn direct_path(a: RoadPoint, b: RoadPoint) -> RoutePath {
    let piece = if b.offset >= a.offset {
        PathEntry { edge: a.edge, lo: a.offset, hi: b.offset, forward: true }
    } else {
        PathEntry { edge: a.edge, lo: b.offset, hi: a.offset, forward: false }
    };
    RoutePath::from_pieces(vec![piece], a)
}

/// One uniform-cost search from `a`, stopped once every target's entry nodes are settled.
pub(super) fn one_to_many(net: &RoadNetwork, a: RoadPoint, targets: &[RoadPoint]) -> Vec<Option<f64>> {
    if targets.is_empty() {
        return Vec::new();
    }
    let n = net.node_count();
    let mut tree = Tree::new(n, &exits(net, a));
    let target_entries: Vec<Vec<(usize, f64, bool)>> = targets.iter().map(|&t| entries(net, t)).collect();
    let mut pending = vec![false; n];
    let mut remaining = 0usize;
    for es in &target_entries {
        for &(node, _, _) in es {
            if !pending[node] {
                pending[node] = true;
                remaining += 1;
            }
        }
    }
    while remaining > 0 {
        if tree.peek().is_infinite() {
            break;
        }
        let State { cost, node } = tree.heap.pop().expect("peeked");
        tree.settled[node] = true;
        if pending[node] {
            pending[node] = false;
            remaining -= 1;
        }
        for arc in net.out_arcs(node) {
            let nc = cost + net.edge(arc.edge).length;
            if nc < tree.dist[arc.node] {
                tree.dist[arc.node] = nc;
                tree.link[arc.node] = Link::Arc { node, edge: arc.edge, forward: arc.forward };
                tree.heap.push(State { cost: nc, node: arc.node });
            }
        }
    }
    targets
        .iter()
        .zip(&target_entries)
        .map(|(&t, es)| {
            let via = es.iter().map(|&(node, c, _)| tree.dist[node] + c).fold(f64::INFINITY, f64::min);
            let d = same_edge(net, a, t).map_or(via, |d| d.min(via));
            d.is_finite().then_some(d)
        })
        .collect()
}
