use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, Node, RoadNetwork};
use crate::error::{Error, Result};
use crate::geometry::{distance, equirectangular, Point, Polyline};

/// Endpoint mismatch tolerated between an edge's geometry and its nodes.
const ENDPOINT_TOLERANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: u64,
    pub from: u64,
    pub to: u64,
    pub speed_limit: f64,
    #[serde(default)]
    pub oneway: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<[f64; 2]>>,
}

/// On-disk network. With `crs: "wgs84"` node and vertex coordinates are
/// longitude (`x`) and latitude (`y`) in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs: Option<String>,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl NetworkFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network file is always serializable")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

pub fn read_network(path: &Path) -> Result<RoadNetwork> {
    let text = std::fs::read_to_string(path)?;
    let file: NetworkFile = serde_json::from_str(&text)?;
    load_network(file)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Builds a network from a parsed file, keeping only the largest connected
/// component (edges treated as undirected). Ids are renumbered densely in file order.
pub fn load_network(file: NetworkFile) -> Result<RoadNetwork> {
    let wgs84 = match file.crs.as_deref() {
        None | Some("planar") | Some("meters") => false,
        Some(c) if c.eq_ignore_ascii_case("wgs84") => true,
        Some(other) => return Err(Error::Parse(format!("unknown crs {other:?}"))),
    };
    if file.nodes.is_empty() || file.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let origin = if wgs84 {
        let n = file.nodes.len() as f64;
        let lon = file.nodes.iter().map(|r| r.x).sum::<f64>() / n;
        let lat = file.nodes.iter().map(|r| r.y).sum::<f64>() / n;
        Some((lon, lat))
    } else {
        None
    };
    let convert = |x: f64, y: f64| match origin {
        Some(o) => equirectangular(x, y, o),
        None => Point::new(x, y),
    };

    let mut slot: HashMap<u64, usize> = HashMap::with_capacity(file.nodes.len());
    let mut locations = Vec::with_capacity(file.nodes.len());
    for r in &file.nodes {
        if slot.insert(r.id, locations.len()).is_some() {
            return Err(Error::Parse(format!("duplicate node id {}", r.id)));
        }
        let p = convert(r.x, r.y);
        if !p.is_finite() {
            return Err(Error::Parse(format!("node {} has non-finite coordinates", r.id)));
        }
        locations.push(p);
    }

    struct Raw {
        from: usize,
        to: usize,
        geometry: Polyline,
        speed_limit: f64,
        oneway: bool,
    }
    let mut seen_edges = HashMap::new();
    let mut raw = Vec::with_capacity(file.edges.len());
    for r in &file.edges {
        if seen_edges.insert(r.id, ()).is_some() {
            return Err(Error::Parse(format!("duplicate edge id {}", r.id)));
        }
        let lookup = |id: u64| {
            slot.get(&id)
                .copied()
                .ok_or_else(|| Error::Parse(format!("edge {} references unknown node {id}", r.id)))
        };
        let (from, to) = (lookup(r.from)?, lookup(r.to)?);
        if !(r.speed_limit > 0.0 && r.speed_limit.is_finite()) {
            return Err(Error::Parse(format!("edge {} needs a positive speed limit", r.id)));
        }
        let mut pts: Vec<Point> = match &r.geometry {
            Some(v) if v.len() >= 2 => v.iter().map(|c| convert(c[0], c[1])).collect(),
            Some(_) => return Err(Error::Parse(format!("edge {} geometry needs two or more vertices", r.id))),
            None => vec![locations[from], locations[to]],
        };
        let (first, last) = (pts[0], *pts.last().unwrap());
        if distance(first, locations[from]) > ENDPOINT_TOLERANCE_M
            || distance(last, locations[to]) > ENDPOINT_TOLERANCE_M
        {
            return Err(Error::Parse(format!("edge {} geometry does not meet its nodes", r.id)));
        }
        let n = pts.len();
        pts[0] = locations[from];
        pts[n - 1] = locations[to];
        let geometry = Polyline::from_points_dedup(pts)
            .map_err(|e| Error::Parse(format!("edge {}: {e}", r.id)))?;
        raw.push(Raw { from, to, geometry, speed_limit: r.speed_limit, oneway: r.oneway });
    }

    let mut parent: Vec<usize> = (0..locations.len()).collect();
    for e in &raw {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut size = vec![0usize; locations.len()];
    for e in &raw {
        let root = find(&mut parent, e.from);
        size[root] += 1;
    }
    let keep_root = (0..locations.len())
        .filter(|&i| size[i] > 0)
        .max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a)))
        .ok_or(Error::EmptyGraph)?;

    let mut remap = vec![usize::MAX; locations.len()];
    let mut nodes = Vec::new();
    for (i, &loc) in locations.iter().enumerate() {
        if find(&mut parent, i) == keep_root {
            remap[i] = nodes.len();
            nodes.push(Node { id: nodes.len(), location: loc });
        }
    }
    let dropped = locations.len() - nodes.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} node(s) outside the largest connected component");
    }
    let edges: Vec<Edge> = raw
        .into_iter()
        .filter(|e| remap[e.from] != usize::MAX)
        .enumerate()
        .map(|(id, e)| Edge {
            id,
            from: remap[e.from],
            to: remap[e.to],
            length: e.geometry.length(),
            geometry: e.geometry,
            speed_limit: e.speed_limit,
            oneway: e.oneway,
        })
        .collect();
    RoadNetwork::from_parts(nodes, edges)
}
