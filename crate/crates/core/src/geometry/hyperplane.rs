use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use super::triangles::{distance_to_path, project_to_ray};
use crate::error::{FppError, Result};
use crate::group::{Element, GroupModel};

/// Which side of a hyperplane a vertex lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
    On,
}

/// The hyperplane `H_i` of a realized ray, materialized in a working ball
/// `ball(x_i, radius)`: its elementary set (vertices whose distance to the
/// ray is attained at `x_i`) and the `2δ`-thickening of that set.
#[derive(Clone, Debug)]
pub struct Hyperplane {
    pub ray: Vec<Element>,
    pub index: usize,
    pub radius: u64,
    pub delta: u64,
    pub elementary: Vec<Element>,
    pub thickened: FxHashSet<Element>,
    working: FxHashMap<Element, Vec<usize>>,
}

impl Hyperplane {
    pub fn working_ball(&self) -> impl Iterator<Item = &Element> {
        self.working.keys()
    }

    pub fn contains(&self, x: &Element) -> bool {
        self.working.contains_key(x)
    }

    /// Nearest-point projection indices of a working-ball vertex.
    pub fn projection(&self, x: &Element) -> Option<&[usize]> {
        self.working.get(x).map(Vec::as_slice)
    }
}

/// Builds `H_i`. The ray must extend at least `radius` past `x_i` in both
/// directions available (so projections of working-ball vertices are not
/// distorted by the truncation at the far end).
pub fn hyperplane(model: &GroupModel, ray: &[Element], i: usize, radius: u64, delta: u64) -> Result<Hyperplane> {
    if i >= ray.len() {
        return Err(FppError::domain(format!("index {i} beyond the realized ray")));
    }
    if ((ray.len() - 1 - i) as u64) < 2 * radius {
        return Err(FppError::domain(format!(
            "ray of length {} too short for a working ball of radius {radius} at index {i}",
            ray.len() - 1
        )));
    }
    let mut working = FxHashMap::default();
    let mut elementary = Vec::new();
    for (x, _) in model.ball(&ray[i], radius)? {
        let proj = project_to_ray(model, &x, ray)?;
        if proj.contains(&i) {
            elementary.push(x.clone());
        }
        working.insert(x, proj);
    }
    let mut thickened = FxHashSet::default();
    for x in &elementary {
        for (y, _) in model.ball(x, 2 * delta)? {
            if working.contains_key(&y) {
                thickened.insert(y);
            }
        }
    }
    Ok(Hyperplane {
        ray: ray.to_vec(),
        index: i,
        radius,
        delta,
        elementary,
        thickened,
        working,
    })
}

/// Side of `x` relative to `h`: on the thickened hyperplane, or by whether
/// its projection onto the ray falls beyond (`plus`) or before (`minus`)
/// index `i`.
pub fn half_space_side(h: &Hyperplane, x: &Element) -> Result<Side> {
    let proj = h
        .projection(x)
        .ok_or_else(|| FppError::domain(format!("{x} is outside the working ball")))?;
    if h.thickened.contains(x) {
        return Ok(Side::On);
    }
    let (lo, hi) = (proj[0], *proj.last().unwrap());
    Ok(if lo > h.index {
        Side::Plus
    } else if hi < h.index {
        Side::Minus
    } else {
        Side::On
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub plus: usize,
    pub minus: usize,
    pub on: usize,
    /// Components of `working ball ∖ thickened` containing both sides.
    pub mixed_components: usize,
}

impl SeparationReport {
    pub fn separates(&self) -> bool {
        self.mixed_components == 0
    }
}

/// Checks that removing the thickened hyperplane from the working ball
/// leaves no component meeting both half-spaces, i.e. every path inside the
/// ball from a plus vertex to a minus vertex meets the thickened set.
pub fn separation_check(model: &GroupModel, h: &Hyperplane) -> Result<SeparationReport> {
    let mut side: FxHashMap<&Element, Side> = FxHashMap::default();
    for x in h.working_ball() {
        side.insert(x, half_space_side(h, x)?);
    }
    let count = |s: Side| side.values().filter(|&&v| v == s).count();
    let mut seen: FxHashSet<&Element> = FxHashSet::default();
    let mut mixed = 0;
    for start in h.working_ball() {
        if side[start] == Side::On || seen.contains(start) {
            continue;
        }
        seen.insert(start);
        let mut queue = VecDeque::from([start.clone()]);
        let (mut has_plus, mut has_minus) = (false, false);
        while let Some(v) = queue.pop_front() {
            match side[&v] {
                Side::Plus => has_plus = true,
                Side::Minus => has_minus = true,
                Side::On => unreachable!(),
            }
            for (_, w) in model.neighbors(&v) {
                if let Some((key, &s)) = side.get_key_value(&w) {
                    if s != Side::On && seen.insert(*key) {
                        queue.push_back(w);
                    }
                }
            }
        }
        if has_plus && has_minus {
            mixed += 1;
        }
    }
    Ok(SeparationReport {
        plus: count(Side::Plus),
        minus: count(Side::Minus),
        on: count(Side::On),
        mixed_components: mixed,
    })
}

/// Smallest `k ≤ k_max` such that for every `k' ∈ [k, k_max]` all
/// elementary vertices of `H_{i+k'}` inside the working ball of `H_i`
/// classify as plus. `None` if even `k_max` fails.
pub fn nesting_threshold(
    model: &GroupModel,
    ray: &[Element],
    i: usize,
    radius: u64,
    delta: u64,
    k_max: usize,
) -> Result<Option<usize>> {
    let h = hyperplane(model, ray, i, radius, delta)?;
    let mut threshold = None;
    for k in (1..=k_max).rev() {
        let j = i + k;
        let ok = h.working_ball().all(|x| {
            let proj = h.projection(x).unwrap();
            !proj.contains(&j) || half_space_side(&h, x).map(|s| s == Side::Plus).unwrap_or(false)
        });
        if !ok {
            break;
        }
        threshold = Some(k);
    }
    Ok(threshold)
}

/// Outcome of a divergence search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Divergence {
    /// Length of the shortest avoiding path found.
    Found { length: u64 },
    /// The avoiding region inside the working domain has no such path.
    Disconnected,
    /// Search stopped at the vertex budget; the length is at least this.
    AtLeast { length: u64 },
}

/// Shortest path from `H_i` to `H_{i+d}` that avoids the open
/// `r`-neighbourhood of the ray, searched by BFS inside the
/// `working_radius`-neighbourhood of the segment `x_i..x_{i+d}`.
pub fn divergence_profile(
    model: &GroupModel,
    ray: &[Element],
    i: usize,
    d: usize,
    r: u64,
    working_radius: u64,
    budget: u64,
) -> Result<Divergence> {
    if i + d >= ray.len() {
        return Err(FppError::domain("segment exceeds the realized ray"));
    }
    let segment = &ray[i..=i + d];
    let allowed = |x: &Element| -> Result<bool> {
        Ok(distance_to_path(model, x, ray)? >= r && distance_to_path(model, x, segment)? <= working_radius)
    };
    let in_plane = |x: &Element, j: usize| -> Result<bool> { Ok(project_to_ray(model, x, ray)?.contains(&j)) };

    let mut dist: FxHashMap<Element, u64> = FxHashMap::default();
    let mut queue = VecDeque::new();
    for (x, _) in model.ball(&ray[i], working_radius)? {
        if allowed(&x)? && in_plane(&x, i)? {
            dist.insert(x.clone(), 0);
            queue.push_back(x);
        }
    }
    while let Some(v) = queue.pop_front() {
        let dv = dist[&v];
        if in_plane(&v, i + d)? {
            return Ok(Divergence::Found { length: dv });
        }
        for (_, w) in model.neighbors(&v) {
            if dist.contains_key(&w) || !allowed(&w)? {
                continue;
            }
            if dist.len() as u64 >= budget {
                return Ok(Divergence::AtLeast { length: dv + 1 });
            }
            dist.insert(w.clone(), dv + 1);
            queue.push_back(w);
        }
    }
    Ok(Divergence::Disconnected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combing::DirectionSpec;

    fn ray(model: &GroupModel, spec: &str, n: usize) -> Vec<Element> {
        spec.parse::<DirectionSpec>().unwrap().realize(model, n).unwrap().vertices
    }

    #[test]
    fn on_ray_ordering() {
        let f2 = GroupModel::free(2);
        let r = ray(&f2, "pole:ab", 30);
        let h = hyperplane(&f2, &r, 8, 6, 0).unwrap();
        assert!(h.elementary.contains(&r[8]));
        assert_eq!(half_space_side(&h, &r[13]).unwrap(), Side::Plus);
        assert_eq!(half_space_side(&h, &r[3]).unwrap(), Side::Minus);
        assert_eq!(half_space_side(&h, &r[8]).unwrap(), Side::On);
        let far = f2.parse_element("b^-10").unwrap();
        assert!(half_space_side(&h, &far).is_err());
    }

    #[test]
    fn antisymmetric_classification() {
        let f2 = GroupModel::free(2);
        let r = ray(&f2, "pole:a", 30);
        let h = hyperplane(&f2, &r, 10, 6, 0).unwrap();
        for k in 1..=6 {
            assert_eq!(half_space_side(&h, &r[10 + k]).unwrap(), Side::Plus);
            assert_eq!(half_space_side(&h, &r[10 - k]).unwrap(), Side::Minus);
        }
    }

    #[test]
    fn tree_separation_and_nesting() {
        let f2 = GroupModel::free(2);
        let r = ray(&f2, "pole:ab", 40);
        let h = hyperplane(&f2, &r, 6, 6, 0).unwrap();
        assert!(separation_check(&f2, &h).unwrap().separates());
        assert_eq!(nesting_threshold(&f2, &r, 6, 6, 0, 5).unwrap(), Some(1));
    }

    #[test]
    fn divergence_disconnects_on_trees_and_line() {
        let f2 = GroupModel::free(2);
        let r = ray(&f2, "pole:a", 20);
        assert_eq!(divergence_profile(&f2, &r, 2, 4, 1, 4, 100_000).unwrap(), Divergence::Disconnected);
        let z = GroupModel::cyclic_multi(2);
        let r = ray(&z, "pole:1", 20);
        assert_eq!(divergence_profile(&z, &r, 2, 4, 2, 6, 100_000).unwrap(), Divergence::Disconnected);
        // R = 0 avoids nothing: the path along the ray has length D
        assert_eq!(
            divergence_profile(&f2, &ray(&f2, "pole:a", 20), 2, 4, 0, 4, 100_000).unwrap(),
            Divergence::Found { length: 4 }
        );
    }
}
