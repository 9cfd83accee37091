use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, Node, RoadNetwork};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polyline};

/// Parameters of a synthetic street grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Meters between neighbouring intersections.
    pub spacing: f64,
    /// Each intersection is jittered uniformly by up to this much per axis.
    pub perturbation: f64,
    /// Probability of removing each street, subject to keeping the grid connected.
    pub removal_prob: f64,
    /// Speed limits are drawn uniformly from this range (m/s).
    pub speed_range: (f64, f64),
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            rows: 20,
            cols: 20,
            spacing: 500.0,
            perturbation: 60.0,
            removal_prob: 0.1,
            speed_range: (10.0, 16.0),
            seed: 7,
        }
    }
}

fn connected(n: usize, edges: &[(usize, usize)], alive: &[bool]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        if alive[i] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Generates a jittered two-way grid. Deterministic for a fixed seed.
pub fn generate_grid_network(spec: &GridSpec) -> Result<RoadNetwork> {
    let GridSpec { rows, cols, spacing, perturbation, removal_prob, speed_range, seed } = *spec;
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 rows and 2 columns".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidInput("grid spacing must be positive".into()));
    }
    if !(0.0..spacing / 2.0).contains(&perturbation) {
        return Err(Error::InvalidInput("perturbation must lie in [0, spacing/2)".into()));
    }
    if !(0.0..=1.0).contains(&removal_prob) {
        return Err(Error::InvalidInput("removal probability must lie in [0, 1]".into()));
    }
    let (vmin, vmax) = speed_range;
    if !(vmin > 0.0 && vmin <= vmax && vmax.is_finite()) {
        return Err(Error::InvalidInput("speed range must satisfy 0 < min <= max".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = |rng: &mut ChaCha8Rng| {
        if perturbation > 0.0 {
            rng.gen_range(-perturbation..perturbation)
        } else {
            0.0
        }
    };
    let nodes: Vec<Node> = (0..rows * cols)
        .map(|id| {
            let (r, c) = (id / cols, id % cols);
            let x = c as f64 * spacing + jitter(&mut rng);
            let y = r as f64 * spacing + jitter(&mut rng);
            Node { id, location: Point::new(x, y) }
        })
        .collect();

    let mut pairs = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols - 1 {
            pairs.push((r * cols + c, r * cols + c + 1));
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols {
            pairs.push((r * cols + c, (r + 1) * cols + c));
        }
    }
    let speeds: Vec<f64> =
        pairs.iter().map(|_| if vmax > vmin { rng.gen_range(vmin..vmax) } else { vmin }).collect();

    let mut alive = vec![true; pairs.len()];
    if removal_prob > 0.0 {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng);
        for i in order {
            if rng.gen::<f64>() < removal_prob {
                alive[i] = false;
                if !connected(nodes.len(), &pairs, &alive) {
                    alive[i] = true;
                }
            }
        }
    }

    let edges: Vec<Edge> = pairs
        .iter()
        .zip(&speeds)
        .zip(&alive)
        .filter(|(_, &a)| a)
        .enumerate()
        .map(|(id, ((&(from, to), &speed_limit), _))| {
            let geometry = Polyline::new(vec![nodes[from].location, nodes[to].location])
                .expect("jitter keeps grid nodes apart");
            Edge { id, from, to, length: geometry.length(), geometry, speed_limit, oneway: false }
        })
        .collect();
    RoadNetwork::from_parts(nodes, edges)
}
