use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::domain::{CompiledDomain, Domain};
use crate::combing::DirectionSpec;
use crate::environment::Environment;
use crate::error::{FppError, Result};
use crate::group::{Element, GroupModel};

/// Default cap on edge relaxations per query.
pub const DEFAULT_RELAXATION_BUDGET: u64 = 50_000_000;

/// Relative gap under which two competing path lengths count as tied.
pub const NEAR_TIE_REL: f64 = 1e-12;

/// Outcome of a first-passage query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassageResult {
    /// Sum of the weights along `path`, accumulated from the source.
    pub time: f64,
    /// Vertices of the ω-geodesic from source to target (a single vertex
    /// when they coincide).
    #[serde(skip)]
    pub path: Vec<Element>,
    pub relaxations: u64,
    /// Some vertex on the path had a competing predecessor within
    /// [`NEAR_TIE_REL`]; the path choice then follows the search order.
    pub near_tie: bool,
}

impl PassageResult {
    /// Number of edges on the path, `ℓ(Υ)`.
    pub fn n_edges(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    v: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (dist, v)
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path tree state of one search.
pub struct SearchTree {
    pub dist: Vec<f64>,
    pub pred: Vec<u32>,
    pub tie: Vec<bool>,
    pub relaxations: u64,
}

impl CompiledDomain {
    /// Dijkstra from `src`, stopping once `stop` is settled (if given).
    /// Equal keys are popped in vertex-index order and a predecessor is only
    /// replaced by a strictly shorter path, so the result is deterministic.
    pub fn search(&self, env: &Environment, src: usize, stop: Option<usize>, budget: u64) -> Result<SearchTree> {
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![u32::MAX; n];
        let mut tie = vec![false; n];
        let mut done = vec![false; n];
        let mut relaxations = 0u64;
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Entry { dist: 0.0, v: src as u32 });
        while let Some(Entry { dist: d, v }) = heap.pop() {
            let u = v as usize;
            if done[u] {
                continue;
            }
            done[u] = true;
            if Some(u) == stop {
                break;
            }
            let (lo, hi) = (self.offsets[u] as usize, self.offsets[u + 1] as usize);
            relaxations += (hi - lo) as u64;
            if relaxations > budget {
                return Err(FppError::resource("edge relaxations", budget));
            }
            for e in lo..hi {
                let t = self.targets[e] as usize;
                if done[t] {
                    continue;
                }
                let nd = d + env.weight_of_key(self.keys[e]);
                let old = dist[t];
                let close = old.is_finite() && (nd - old).abs() <= NEAR_TIE_REL * nd.max(old);
                if nd < old {
                    dist[t] = nd;
                    pred[t] = v;
                    tie[t] = close;
                    heap.push(Entry { dist: nd, v: t as u32 });
                } else if close {
                    tie[t] = true;
                }
            }
        }
        Ok(SearchTree {
            dist,
            pred,
            tie,
            relaxations,
        })
    }

    /// First-passage time between two members of the domain.
    pub fn passage(&self, env: &Environment, x: &Element, y: &Element, budget: u64) -> Result<PassageResult> {
        let src = self
            .index_of(x)
            .ok_or_else(|| FppError::domain(format!("source {x} is outside the domain")))?;
        let dst = self
            .index_of(y)
            .ok_or_else(|| FppError::domain(format!("target {y} is outside the domain")))?;
        let tree = self.search(env, src, Some(dst), budget)?;
        if !tree.dist[dst].is_finite() {
            return Err(FppError::Unreachable(format!("{y} from {x}")));
        }
        let mut idx = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = tree.pred[cur] as usize;
            idx.push(cur);
        }
        idx.reverse();
        let near_tie = idx.iter().any(|&i| tree.tie[i]);
        Ok(PassageResult {
            time: tree.dist[dst],
            path: idx.into_iter().map(|i| self.vertices[i].clone()).collect(),
            relaxations: tree.relaxations,
            near_tie,
        })
    }

    /// Passage times from `x` to every target, from a single search.
    pub fn passage_many(&self, env: &Environment, x: &Element, ys: &[Element], budget: u64) -> Result<Vec<f64>> {
        let src = self
            .index_of(x)
            .ok_or_else(|| FppError::domain(format!("source {x} is outside the domain")))?;
        let tree = self.search(env, src, None, budget)?;
        ys.iter()
            .map(|y| {
                let i = self
                    .index_of(y)
                    .ok_or_else(|| FppError::domain(format!("target {y} is outside the domain")))?;
                let d = tree.dist[i];
                if d.is_finite() {
                    Ok(d)
                } else {
                    Err(FppError::Unreachable(format!("{y} from {x}")))
                }
            })
            .collect()
    }
}

/// Re-sums the weights along a path in order from its start.
pub fn path_weight(model: &GroupModel, env: &Environment, path: &[Element]) -> Result<f64> {
    let mut t = 0.0;
    for w in path.windows(2) {
        t += env.weight(&model.canonical_edge(&w[0], &w[1])?);
    }
    Ok(t)
}

/// `T(x, y)` restricted to paths inside `domain`.
pub fn passage_time(
    model: &GroupModel,
    env: &Environment,
    x: &Element,
    y: &Element,
    domain: &Domain,
    budget: u64,
) -> Result<PassageResult> {
    CompiledDomain::compile(model, domain)?.passage(env, x, y, budget)
}

/// `T_B(x, y)`: passage time inside the cylinder `N_B([x, y])`.
pub fn restricted_passage_time(
    model: &GroupModel,
    env: &Environment,
    x: &Element,
    y: &Element,
    b: u64,
    budget: u64,
) -> Result<PassageResult> {
    passage_time(model, env, x, y, &Domain::cylinder_around(model, x, y, b)?, budget)
}

/// Finite-horizon surrogate for the ω-geodesic ray from `o` towards `ω`:
/// the ω-geodesic from `o` to `x_n` inside the cylinder of radius `b`
/// around the word geodesic `[o, x_n]`.
pub fn omega_geodesic_ray(
    model: &GroupModel,
    env: &Environment,
    o: &Element,
    direction: &DirectionSpec,
    n: usize,
    b: u64,
    budget: u64,
) -> Result<PassageResult> {
    let ray = direction.realize(model, n)?;
    restricted_passage_time(model, env, o, ray.endpoint(), b, budget)
}

/// Per-pair ω-geodesic statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicRecord {
    pub word_distance: u64,
    pub geodesic_edges: usize,
    pub time: f64,
    /// `ℓ(Υ) / d(x, y)` (1 when `x = y`).
    pub ratio: f64,
}

pub fn geodesic_stats(
    model: &GroupModel,
    env: &Environment,
    pairs: &[(Element, Element)],
    b: u64,
    budget: u64,
) -> Result<Vec<GeodesicRecord>> {
    pairs
        .iter()
        .map(|(x, y)| {
            let d = model.distance(x, y)?;
            let r = restricted_passage_time(model, env, x, y, b, budget)?;
            Ok(GeodesicRecord {
                word_distance: d,
                geodesic_edges: r.n_edges(),
                time: r.time,
                ratio: if d == 0 { 1.0 } else { r.n_edges() as f64 / d as f64 },
            })
        })
        .collect()
}
