use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::group::{Element, GroupModel};

/// `⟨x, y⟩_o = ½(d(x,o) + d(y,o) − d(x,y))`, a half-integer.
pub fn gromov_product(model: &GroupModel, x: &Element, y: &Element, o: &Element) -> Result<f64> {
    let dxo = model.distance(x, o)? as f64;
    let dyo = model.distance(y, o)? as f64;
    let dxy = model.distance(x, y)? as f64;
    Ok(0.5 * (dxo + dyo - dxy))
}

/// `d(x, path)` over the path's vertices.
pub fn distance_to_path(model: &GroupModel, x: &Element, path: &[Element]) -> Result<u64> {
    let mut best = u64::MAX;
    for v in path {
        best = best.min(model.distance(x, v)?);
        if best == 0 {
            break;
        }
    }
    Ok(best)
}

/// All indices `j` minimizing `d(x, ray[j])`.
pub fn project_to_ray(model: &GroupModel, x: &Element, ray: &[Element]) -> Result<Vec<usize>> {
    let mut best = u64::MAX;
    let mut out = Vec::new();
    for (j, v) in ray.iter().enumerate() {
        let d = model.distance(x, v)?;
        if d < best {
            best = d;
            out.clear();
        }
        if d == best {
            out.push(j);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    pub delta: u64,
    pub radius: u64,
    pub triangles: u64,
    pub exhaustive: bool,
}

/// Slack of the side `[x, y]` against the other two sides.
fn side_slack(model: &GroupModel, side: &[Element], a: &[Element], b: &[Element]) -> Result<u64> {
    let mut worst = 0;
    for p in side {
        let d = distance_to_path(model, p, a)?.min(distance_to_path(model, p, b)?);
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Thin-triangle constant over triangles `(x, y, 1)` with `x, y` in the
/// ball of the given radius, using canonical word geodesics as sides. By
/// left-invariance one vertex can be fixed at the identity. All pairs are
/// checked when there are at most `samples` of them, otherwise `samples`
/// random pairs.
pub fn delta_estimate(model: &GroupModel, radius: u64, samples: u64, seed: u64) -> Result<DeltaReport> {
    let ball: Vec<Element> = model
        .ball(&Element::identity(), radius)?
        .into_iter()
        .map(|(g, _)| g)
        .collect();
    let n = ball.len() as u64;
    let exhaustive = n * n <= samples;
    let pairs: Vec<(usize, usize)> = if exhaustive {
        (0..ball.len()).flat_map(|i| (0..ball.len()).map(move |j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx: Vec<usize> = (0..ball.len()).collect();
        (0..samples)
            .map(|_| (*idx.choose(&mut rng).unwrap(), *idx.choose(&mut rng).unwrap()))
            .collect()
    };
    let one = Element::identity();
    let mut delta = 0;
    for &(i, j) in &pairs {
        let (x, y) = (&ball[i], &ball[j]);
        let xy = model.word_geodesic(x, y)?;
        let x1 = model.word_geodesic(x, &one)?;
        let y1 = model.word_geodesic(y, &one)?;
        delta = delta
            .max(side_slack(model, &xy, &x1, &y1)?)
            .max(side_slack(model, &x1, &xy, &y1)?)
            .max(side_slack(model, &y1, &xy, &x1)?);
    }
    Ok(DeltaReport {
        delta,
        radius,
        triangles: pairs.len() as u64,
        exhaustive,
    })
}
