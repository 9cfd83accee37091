//! Road graph, driving-distance queries and path representations.

mod file;
mod grid;
mod path;
mod routing;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{distance, IndexedSegment, Point, Polyline, QuadTree};

pub use file::{load_network, read_network, EdgeRecord, NetworkFile, NodeRecord};
pub use grid::{generate_grid_network, GridSpec};
pub use path::{traversal_measure, IntervalSet, PathEntry, RoutePath};

/// Offsets this close to an edge end are treated as lying on the node.
pub const SNAP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub geometry: Polyline,
    pub length: f64,
    /// Meters per second.
    pub speed_limit: f64,
    pub oneway: bool,
}

/// One way of leaving a node along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Arc {
    pub edge: usize,
    /// Node at the other end.
    pub node: usize,
    /// True when the edge is traversed from `from` to `to`.
    pub forward: bool,
}

/// A position on an edge, `offset` meters from the edge's `from` node.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoadPoint {
    pub edge: usize,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_arcs: Vec<Vec<Arc>>,
    in_arcs: Vec<Vec<Arc>>,
    index: QuadTree,
}

impl RoadNetwork {
    /// Builds a network from dense nodes and edges, validating every invariant.
    ///
    /// Connectivity is not enforced here; [`load_network`] and the grid
    /// generator take care of that.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::InvalidInput(format!("node ids must be dense, found {} at {i}", n.id)));
            }
            if !n.location.is_finite() {
                return Err(Error::InvalidInput(format!("node {i} has non-finite location")));
            }
        }
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(Error::InvalidInput(format!("edge ids must be dense, found {} at {i}", e.id)));
            }
            if e.from >= nodes.len() || e.to >= nodes.len() {
                return Err(Error::InvalidInput(format!("edge {i} references a missing node")));
            }
            if !(e.speed_limit > 0.0 && e.speed_limit.is_finite()) {
                return Err(Error::InvalidInput(format!("edge {i} needs a positive speed limit")));
            }
            if (e.length - e.geometry.length()).abs() > 1e-9 * e.length.max(1.0) || e.length <= 0.0 {
                return Err(Error::InvalidInput(format!("edge {i} length disagrees with its geometry")));
            }
            if distance(e.geometry.start(), nodes[e.from].location) > 1e-6
                || distance(e.geometry.end(), nodes[e.to].location) > 1e-6
            {
                return Err(Error::InvalidInput(format!("edge {i} geometry does not meet its nodes")));
            }
            out_arcs[e.from].push(Arc { edge: i, node: e.to, forward: true });
            in_arcs[e.to].push(Arc { edge: i, node: e.from, forward: true });
            if !e.oneway {
                out_arcs[e.to].push(Arc { edge: i, node: e.from, forward: false });
                in_arcs[e.from].push(Arc { edge: i, node: e.to, forward: false });
            }
        }
        let index = QuadTree::from_segments(edges.iter().flat_map(|e| {
            e.geometry
                .vertices()
                .windows(2)
                .map(move |w| IndexedSegment { a: w[0], b: w[1], owner: e.id })
        }));
        Ok(RoadNetwork { nodes, edges, out_arcs, in_arcs, index })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub(crate) fn out_arcs(&self, node: usize) -> &[Arc] {
        &self.out_arcs[node]
    }

    pub(crate) fn in_arcs(&self, node: usize) -> &[Arc] {
        &self.in_arcs[node]
    }

    /// Validated road point with offsets near the ends snapped onto the node.
    pub fn road_point(&self, edge: usize, offset: f64) -> Result<RoadPoint> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::InvalidInput(format!("no edge {edge}")))?;
        if !offset.is_finite() || offset < -SNAP_EPS || offset > e.length + SNAP_EPS {
            return Err(Error::InvalidInput(format!("offset {offset} outside edge {edge} of length {}", e.length)));
        }
        let offset = if offset <= SNAP_EPS {
            0.0
        } else if offset >= e.length - SNAP_EPS {
            e.length
        } else {
            offset
        };
        Ok(RoadPoint { edge, offset })
    }

    /// A road point sitting on `node`.
    pub fn node_point(&self, node: usize) -> Result<RoadPoint> {
        if let Some(a) = self.out_arcs[node].first().or_else(|| self.in_arcs[node].first()) {
            let e = &self.edges[a.edge];
            let offset = if e.from == node { 0.0 } else { e.length };
            return Ok(RoadPoint { edge: a.edge, offset });
        }
        Err(Error::InvalidInput(format!("node {node} has no incident edge")))
    }

    pub fn location(&self, p: RoadPoint) -> Point {
        self.edges[p.edge].geometry.point_at(p.offset)
    }

    /// Ids of all edges whose geometry comes within `r` of `p`, ascending.
    pub fn edges_within_radius(&self, p: Point, r: f64) -> Vec<usize> {
        let segs = self.index.segments();
        let ids: BTreeSet<usize> = self.index.within(p, r).into_iter().map(|i| segs[i].owner).collect();
        ids.into_iter().collect()
    }

    pub fn driving_distance(&self, a: RoadPoint, b: RoadPoint) -> Result<f64> {
        routing::shortest(self, a, b).map(|(d, _)| d)
    }

    pub fn shortest_route(&self, a: RoadPoint, b: RoadPoint) -> Result<RoutePath> {
        let (_, path) = routing::shortest(self, a, b)?;
        Ok(path)
    }

    /// Driving distance from `a` to every target; `None` marks an unreachable target.
    pub fn one_to_many_distances(&self, a: RoadPoint, targets: &[RoadPoint]) -> Vec<Option<f64>> {
        routing::one_to_many(self, a, targets)
    }

    /// Converts back to the on-disk representation.
    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            crs: None,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord { id: n.id as u64, x: n.location.x, y: n.location.y })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id as u64,
                    from: e.from as u64,
                    to: e.to as u64,
                    speed_limit: e.speed_limit,
                    oneway: e.oneway,
                    geometry: (e.geometry.vertices().len() > 2)
                        .then(|| e.geometry.vertices().iter().map(|p| [p.x, p.y]).collect()),
                })
                .collect(),
        }
    }
}
