use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::error::{FppError, Result};
use crate::geometry::project_to_ray;
use crate::group::{Element, GroupModel};

/// Membership test for [`Domain::Custom`].
pub type Predicate = Arc<dyn Fn(&Element) -> bool + Send + Sync>;

/// A finite vertex set in which passage times are computed. The induced
/// subgraph is searched, so a path never leaves the domain.
#[derive(Clone)]
pub enum Domain {
    WholeBall { center: Element, radius: u64 },
    /// `N_B(base)`: vertices within distance `radius` of the base path.
    Cylinder { radius: u64, base: Vec<Element> },
    /// Vertices within `radius` of the ray segment `x_i..x_{i+d}` whose
    /// nearest-point projection onto the ray lies in `[i, i+d]`.
    Region { ray: Vec<Element>, i: usize, d: usize, radius: u64 },
    /// Members of `ball(center, radius)` accepted by the predicate.
    Custom { predicate: Predicate, center: Element, radius: u64 },
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::WholeBall { center, radius } => write!(f, "WholeBall({center}, {radius})"),
            Domain::Cylinder { radius, base } => write!(f, "Cylinder(B={radius}, |base|={})", base.len()),
            Domain::Region { i, d, radius, .. } => write!(f, "Region(i={i}, D={d}, R={radius})"),
            Domain::Custom { center, radius, .. } => write!(f, "Custom(ball({center}, {radius}))"),
        }
    }
}

impl Domain {
    pub fn cylinder(radius: u64, base: Vec<Element>) -> Self {
        Domain::Cylinder { radius, base }
    }

    /// The cylinder `N_B([x, y])` around the canonical word geodesic.
    pub fn cylinder_around(model: &GroupModel, x: &Element, y: &Element, radius: u64) -> Result<Self> {
        Ok(Domain::Cylinder {
            radius,
            base: model.word_geodesic(x, y)?,
        })
    }
}

/// A domain materialized as an indexed graph: vertex list, reverse index
/// and CSR adjacency carrying each edge's environment key.
#[derive(Clone, Debug)]
pub struct CompiledDomain {
    pub(crate) vertices: Vec<Element>,
    pub(crate) index: FxHashMap<Element, u32>,
    pub(crate) offsets: Vec<u32>,
    pub(crate) targets: Vec<u32>,
    pub(crate) keys: Vec<u64>,
}

/// Multi-source BFS to depth `radius`.
fn bfs_from(model: &GroupModel, sources: &[Element], radius: u64) -> Result<Vec<Element>> {
    let mut seen: FxHashMap<Element, u64> = FxHashMap::default();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for s in sources {
        if !seen.contains_key(s) {
            seen.insert(s.clone(), 0);
            order.push(s.clone());
            queue.push_back(s.clone());
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = seen[&v];
        if d == radius {
            continue;
        }
        for (_, w) in model.neighbors(&v) {
            if !seen.contains_key(&w) {
                if seen.len() as u64 >= model.vertex_cap() {
                    return Err(FppError::resource("domain vertices", model.vertex_cap()));
                }
                seen.insert(w.clone(), d + 1);
                order.push(w.clone());
                queue.push_back(w);
            }
        }
    }
    Ok(order)
}

impl CompiledDomain {
    pub fn compile(model: &GroupModel, domain: &Domain) -> Result<Self> {
        let vertices = match domain {
            Domain::WholeBall { center, radius } => bfs_from(model, std::slice::from_ref(center), *radius)?,
            Domain::Cylinder { radius, base } => {
                if base.is_empty() {
                    return Err(FppError::domain("cylinder base path is empty"));
                }
                bfs_from(model, base, *radius)?
            }
            Domain::Region { ray, i, d, radius } => {
                if i + d >= ray.len() {
                    return Err(FppError::domain(format!(
                        "region [{i}, {}] exceeds the realized ray (length {})",
                        i + d,
                        ray.len() - 1
                    )));
                }
                let seg = &ray[*i..=i + d];
                let mut out = Vec::new();
                for v in bfs_from(model, seg, *radius)? {
                    let proj = project_to_ray(model, &v, ray)?;
                    if proj.iter().any(|p| (*i..=i + d).contains(p)) {
                        out.push(v);
                    }
                }
                out
            }
            Domain::Custom { predicate, center, radius } => bfs_from(model, std::slice::from_ref(center), *radius)?
                .into_iter()
                .filter(|v| predicate(v))
                .collect(),
        };
        Ok(Self::from_vertices(model, vertices))
    }

    /// Induced subgraph on an explicit vertex list.
    pub fn from_vertices(model: &GroupModel, vertices: Vec<Element>) -> Self {
        let index: FxHashMap<Element, u32> = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect();
        let mut offsets = Vec::with_capacity(vertices.len() + 1);
        let mut targets = Vec::new();
        let mut keys = Vec::new();
        offsets.push(0);
        for v in &vertices {
            for s in 0..model.generators().len() {
                let w = model.step(v, s);
                if let Some(&j) = index.get(&w) {
                    targets.push(j);
                    keys.push(model.edge_from_step(v, s).key());
                }
            }
            offsets.push(targets.len() as u32);
        }
        CompiledDomain {
            vertices,
            index,
            offsets,
            targets,
            keys,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, x: &Element) -> bool {
        self.index.contains_key(x)
    }

    pub fn vertices(&self) -> &[Element] {
        &self.vertices
    }

    pub fn index_of(&self, x: &Element) -> Option<usize> {
        self.index.get(x).map(|&i| i as usize)
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }
}
