use rustc_hash::FxHashSet;
use serde_json::json;

use super::stats::{mean, Estimate};
use super::{Context, ExperimentKind, ExperimentOutput, Gate, Table};
use crate::error::{FppError, Result};
use crate::geometry::{distance_to_path, gromov_product};
use crate::group::{Element, GroupModel};
use crate::metric::CompiledDomain;

/// Fellow-travelling of an ω-geodesic path with itself from `o`: over pairs
/// of vertices in the second half of the path, the largest defect
/// `min(|v|, |v'|) − ⟨v, v'⟩_o` and the smallest Gromov product.
fn tail_statistics(model: &GroupModel, path: &[Element], o: &Element) -> Result<(f64, f64)> {
    let half = path.len() / 2;
    let tail = &path[half..];
    // long paths are thinned to keep the pair count near 10^4
    let stride = (tail.len() / 100).max(1);
    let picked: Vec<&Element> = tail.iter().step_by(stride).collect();
    let lens: Vec<f64> = picked.iter().map(|v| model.distance(o, v).map(|d| d as f64)).collect::<Result<_>>()?;
    let mut kappa = 0.0f64;
    let mut min_gp = f64::INFINITY;
    for i in 0..picked.len() {
        for j in i + 1..picked.len() {
            let gp = gromov_product(model, picked[i], picked[j], o)?;
            kappa = kappa.max(lens[i].min(lens[j]) - gp);
            min_gp = min_gp.min(gp);
        }
    }
    if picked.len() < 2 {
        min_gp = lens.first().copied().unwrap_or(0.0);
    }
    Ok((kappa, min_gp))
}

/// Tail fellow-travelling of ω-geodesics towards each direction and, with
/// two directions, the distance from `o` of the ω-geodesic between them.
pub(super) fn direction(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let ns = ctx.n_grid()?;
    let n_max = *ns.last().expect("nonempty grid");
    let dirs = ctx.directions();
    let b = e.b;
    let c = e.c.unwrap_or(1);
    let budget = ctx.budget();
    let one = Element::identity();

    let rays = dirs.iter().map(|d| ctx.realize(d, n_max)).collect::<Result<Vec<_>>>()?;
    let mut ray_targets: Vec<(usize, usize, CompiledDomain)> = Vec::new();
    for (di, ray) in rays.iter().enumerate() {
        for &n in &ns {
            ray_targets.push((di, n, ctx.cylinder(&ray.vertices[..=n], b)?));
        }
    }
    let mut mid_targets: Vec<(usize, CompiledDomain, Element, Element)> = Vec::new();
    if rays.len() >= 2 {
        for &n in &ns {
            let (x, y) = (rays[0].vertices[n].clone(), rays[1].vertices[n].clone());
            let g = ctx.model.word_geodesic(&x, &y)?;
            let dist = distance_to_path(&ctx.model, &one, &g)?;
            if dist > c {
                return Err(FppError::domain(format!(
                    "word geodesic between x_{n} and y_{n} passes at distance {dist} > C = {c} from the identity"
                )));
            }
            mid_targets.push((n, ctx.cylinder(&g, b)?, x, y));
        }
    }

    let model = &ctx.model;
    let per_rep = ctx.replicate(|_, env| {
        let mut rows = Vec::new();
        for (di, n, dom) in &ray_targets {
            let res = dom.passage(env, &one, &rays[*di].vertices[*n], budget)?;
            let (kappa, min_gp) = tail_statistics(model, &res.path, &one)?;
            rows.push((res.n_edges(), kappa, min_gp, f64::NAN));
        }
        for (_, dom, x, y) in &mid_targets {
            let res = dom.passage(env, x, y, budget)?;
            let r = distance_to_path(model, &one, &res.path)? as f64;
            rows.push((res.n_edges(), f64::NAN, f64::NAN, r));
        }
        Ok(rows)
    })?;

    let mut table = Table::new(&[
        "replication",
        "test",
        "direction",
        "n",
        "path_edges",
        "tail_defect",
        "tail_min_gromov",
        "midpoint_distance",
    ]);
    for (r, rows) in per_rep.iter().enumerate() {
        for (i, (edges, kappa, gp, mid)) in rows.iter().enumerate() {
            let (test, dir, n) = match ray_targets.get(i) {
                Some((di, n, _)) => ("ray", dirs[*di].to_string(), *n),
                None => {
                    let (n, ..) = &mid_targets[i - ray_targets.len()];
                    ("midpoint", format!("{}~{}", dirs[0], dirs[1]), *n)
                }
            };
            table.rows.push(vec![
                r.into(),
                test.into(),
                dir.into(),
                n.into(),
                (*edges).into(),
                (*kappa).into(),
                (*gp).into(),
                (*mid).into(),
            ]);
        }
    }

    let mut ray_summary = Vec::new();
    for (i, (di, n, _)) in ray_targets.iter().enumerate() {
        let kappas: Vec<f64> = per_rep.iter().map(|rows| rows[i].1).collect();
        let gps: Vec<f64> = per_rep.iter().map(|rows| rows[i].2 / (*n as f64 / 2.0)).collect();
        ray_summary.push(json!({
            "direction": dirs[*di].to_string(),
            "n": n,
            "tail_defect_mean": mean(&kappas),
            "tail_defect_max": kappas.iter().cloned().fold(0.0, f64::max),
            "tail_min_gromov_over_half_n": Estimate::of(&gps),
        }));
    }
    let mut mid_summary = Vec::new();
    let mut worst_mid = 0.0f64;
    for (j, (n, ..)) in mid_targets.iter().enumerate() {
        let i = ray_targets.len() + j;
        let rs: Vec<f64> = per_rep.iter().map(|rows| rows[i].3).collect();
        let max = rs.iter().cloned().fold(0.0, f64::max);
        worst_mid = worst_mid.max(max);
        let mut hist = std::collections::BTreeMap::new();
        for r in &rs {
            *hist.entry(*r as u64).or_insert(0usize) += 1;
        }
        mid_summary.push(json!({ "n": n, "mean": mean(&rs), "max": max, "histogram": hist }));
    }
    let mut gates = Vec::new();
    if let (Some(limit), false) = (e.gate, mid_targets.is_empty()) {
        gates.push(Gate::new(
            "midpoint_distance_bounded",
            worst_mid <= limit,
            format!("largest distance {worst_mid} against {limit}"),
        ));
    }
    Ok(ExperimentOutput {
        kind: ExperimentKind::Direction,
        table,
        summary: json!({ "b": b, "c": c, "rays": ray_summary, "midpoints": mid_summary }),
        gates,
        notes: Vec::new(),
    })
}

fn edge_keys(model: &GroupModel, path: &[Element]) -> Result<FxHashSet<u64>> {
    path.windows(2).map(|w| Ok(model.canonical_edge(&w[0], &w[1])?.key())).collect()
}

struct Meeting {
    /// Index on the first path of the first vertex shared with the second.
    index: Option<usize>,
    distance_from_o1: Option<u64>,
    suffix_identical: bool,
}

fn meeting(model: &GroupModel, p1: &[Element], p2: &[Element], o1: &Element) -> Result<Meeting> {
    let on2: rustc_hash::FxHashMap<&Element, usize> = p2.iter().enumerate().map(|(i, v)| (v, i)).collect();
    for (i, v) in p1.iter().enumerate() {
        if let Some(&j) = on2.get(v) {
            return Ok(Meeting {
                index: Some(i),
                distance_from_o1: Some(model.distance(o1, v)?),
                suffix_identical: p1[i..] == p2[j..],
            });
        }
    }
    Ok(Meeting { index: None, distance_from_o1: None, suffix_identical: false })
}

/// Coalescence of ω-geodesics from two basepoints towards a common
/// direction, at finite horizon: both paths run to `x_{2n}` inside the
/// cylinder around the union of their word geodesics, and they coalesce if
/// they meet within distance `n` of the first basepoint and agree afterwards.
pub(super) fn coalescence(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let ns = ctx.n_grid()?;
    let n_max = *ns.last().expect("nonempty grid");
    let dir = ctx.directions()[0].clone();
    let model = &ctx.model;
    let basepoints: Vec<Element> = if e.basepoints.is_empty() {
        let second = if model.is_cyclic() { "1" } else { "b" };
        vec![Element::identity(), model.parse_element(second)?]
    } else {
        e.basepoints.iter().map(|s| model.parse_element(s)).collect::<Result<_>>()?
    };
    if basepoints.len() != 2 {
        return Err(FppError::Config("coalescence needs exactly two basepoints".into()));
    }
    let (o1, o2) = (&basepoints[0], &basepoints[1]);
    let block = e.block.unwrap_or(10).max(1);
    let need = (3 * block).div_ceil(5);
    let ray = ctx.realize(&dir, 2 * n_max)?;
    let ray_edges: Vec<u64> = ray
        .vertices
        .windows(2)
        .map(|w| Ok(model.canonical_edge(&w[0], &w[1])?.key()))
        .collect::<Result<_>>()?;

    let mut domains = Vec::new();
    for &n in &ns {
        let target = &ray.vertices[2 * n];
        let mut base = model.word_geodesic(o1, target)?;
        base.extend(model.word_geodesic(o2, target)?);
        domains.push(ctx.cylinder(&base, e.b)?);
    }
    let budget = ctx.budget();
    let per_rep = ctx.replicate(|_, env| {
        let mut out = Vec::new();
        for (i, &n) in ns.iter().enumerate() {
            let target = &ray.vertices[2 * n];
            let p1 = domains[i].passage(env, o1, target, budget)?;
            let p2 = domains[i].passage(env, o2, target, budget)?;
            let m = meeting(model, &p1.path, &p2.path, o1)?;
            let coalesced = m.suffix_identical && m.distance_from_o1.is_some_and(|d| d <= n as u64);
            let (k1, k2) = (edge_keys(model, &p1.path)?, edge_keys(model, &p2.path)?);
            let mut hits = 0usize;
            let mut blocks = 0usize;
            for chunk in ray_edges[..2 * n].chunks(block) {
                blocks += 1;
                let c1 = chunk.iter().filter(|k| k1.contains(k)).count();
                let c2 = chunk.iter().filter(|k| k2.contains(k)).count();
                if c1 >= need && c2 >= need {
                    hits += 1;
                }
            }
            out.push((m, coalesced, hits, blocks));
        }
        Ok(out)
    })?;

    let mut table = Table::new(&[
        "replication",
        "n",
        "meeting_index",
        "meeting_distance",
        "suffix_identical",
        "coalesced",
        "block_hits",
        "blocks",
    ]);
    for (r, rows) in per_rep.iter().enumerate() {
        for (i, (m, coalesced, hits, blocks)) in rows.iter().enumerate() {
            table.rows.push(vec![
                r.into(),
                ns[i].into(),
                m.index.map_or(-1, |v| v as i64).into(),
                m.distance_from_o1.map_or(-1, |v| v as i64).into(),
                m.suffix_identical.into(),
                (*coalesced).into(),
                (*hits).into(),
                (*blocks).into(),
            ]);
        }
    }
    let reps = per_rep.len() as f64;
    let fractions: Vec<f64> = (0..ns.len())
        .map(|i| per_rep.iter().filter(|rows| rows[i].1).count() as f64 / reps)
        .collect();
    let per_n: Vec<_> = ns
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let f = fractions[i];
            let hit_share: Vec<f64> = per_rep.iter().map(|rows| rows[i].2 as f64 / rows[i].3.max(1) as f64).collect();
            json!({
                "n": n,
                "coalesced_fraction": f,
                "se": (f * (1.0 - f) / reps).sqrt(),
                "block_hit_share": Estimate::of(&hit_share),
            })
        })
        .collect();
    let gate = e.gate.unwrap_or(0.95);
    let last = *fractions.last().expect("nonempty grid");
    let gates = vec![
        Gate::new("coalesced_fraction", last >= gate, format!("{last} at n = {n_max} against {gate}")),
        Gate::new(
            "fraction_nondecreasing",
            fractions.windows(2).all(|w| w[1] >= w[0]),
            format!("{fractions:?}"),
        ),
    ];
    Ok(ExperimentOutput {
        kind: ExperimentKind::Coalescence,
        table,
        summary: json!({
            "direction": dir.to_string(),
            "basepoints": [model.format_element(o1), model.format_element(o2)],
            "b": e.b,
            "block": block,
            "block_threshold": need,
            "gate": gate,
            "per_n": per_n,
        }),
        gates,
        notes: Vec::new(),
    })
}
