use serde_json::json;

use super::stats::Estimate;
use super::{distribution_json, Cell, Context, ExperimentKind, ExperimentOutput, Gate, Table};
use crate::combing::{analyze, builtin_automaton, k_tuple_chain, predicted_frequency, sample_ray, AnalysisOptions, DirectionSpec};
use crate::error::{FppError, Result};
use crate::group::Element;
use crate::metric::CompiledDomain;

/// `E T_B(1, x_n) / n` along each configured direction.
pub(super) fn velocity(ctx: &Context) -> Result<ExperimentOutput> {
    let ns = ctx.n_grid()?;
    let n_max = *ns.last().expect("nonempty grid");
    let dirs = ctx.directions();
    let b = ctx.cfg.experiment.b;
    let budget = ctx.budget();

    let mut targets: Vec<(usize, usize, CompiledDomain, Element)> = Vec::new();
    for (di, d) in dirs.iter().enumerate() {
        let ray = ctx.realize(d, n_max)?;
        for &n in &ns {
            targets.push((di, n, ctx.cylinder(&ray.vertices[..=n], b)?, ray.vertices[n].clone()));
        }
    }
    let one = Element::identity();
    let per_rep = ctx.replicate(|_, env| {
        targets
            .iter()
            .map(|(_, _, dom, t)| dom.passage(env, &one, t, budget))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut table = Table::new(&["replication", "direction", "n", "time", "velocity", "path_edges", "near_tie"]);
    for (r, results) in per_rep.iter().enumerate() {
        for ((di, n, _, _), res) in targets.iter().zip(results) {
            table.rows.push(vec![
                r.into(),
                dirs[*di].to_string().into(),
                (*n).into(),
                res.time.into(),
                (res.time / *n as f64).into(),
                res.n_edges().into(),
                res.near_tie.into(),
            ]);
        }
    }

    let mut by_dir = Vec::new();
    let mut at_max = Vec::new();
    for (di, d) in dirs.iter().enumerate() {
        let mut rows = Vec::new();
        for (ti, (tdi, n, _, _)) in targets.iter().enumerate() {
            if *tdi != di {
                continue;
            }
            let v: Vec<f64> = per_rep.iter().map(|res| res[ti].time / *n as f64).collect();
            let est = Estimate::of(&v);
            if *n == n_max {
                at_max.push((d.to_string(), est));
            }
            rows.push(json!({ "n": n, "velocity": est }));
        }
        let trend: Vec<f64> = rows
            .windows(2)
            .map(|w| w[1]["velocity"]["mean"].as_f64().unwrap_or(f64::NAN) - w[0]["velocity"]["mean"].as_f64().unwrap_or(f64::NAN))
            .collect();
        by_dir.push(json!({ "direction": d.to_string(), "estimates": rows, "successive_differences": trend }));
    }
    let means: Vec<f64> = at_max.iter().map(|(_, e)| e.mean).collect();
    let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - means.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut gates = Vec::new();
    if let Some(expect) = ctx.cfg.experiment.expect {
        for (d, est) in &at_max {
            let dev = (est.mean - expect).abs();
            gates.push(Gate::new(
                format!("velocity_{d}"),
                dev <= 3.0 * est.se,
                format!("|{:.6} - {expect}| = {dev:.6}, 3 SE = {:.6} at n = {n_max}", est.mean, 3.0 * est.se),
            ));
        }
    }
    Ok(ExperimentOutput {
        kind: ExperimentKind::Velocity,
        table,
        summary: json!({
            "b": b,
            "distribution": distribution_json(&ctx.dist),
            "directions": by_dir,
            "spread_at_max_n": spread,
        }),
        gates,
        notes: Vec::new(),
    })
}

/// Largest cylinder radius, starting from `from`, whose cylinder around
/// `path` stays under the configured vertex cap.
fn largest_feasible_radius(ctx: &Context, path: &[Element], from: u64) -> Result<u64> {
    let cap = ctx.cfg.experiment.max_domain_vertices;
    let mut best = None;
    let mut b = from;
    loop {
        match ctx.cylinder(path, b) {
            Ok(_) => best = Some(b),
            Err(FppError::Resource { .. }) => break,
            Err(e) => return Err(e),
        }
        b += 1;
        if b > from + 64 {
            break;
        }
    }
    best.ok_or_else(|| FppError::resource(format!("cylinder of radius {from}"), cap as u64))
}

/// `T_B` over a grid of radii together with a reference passage time on the
/// largest feasible domain.
pub(super) fn b_velocity(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let ns = ctx.n_grid()?;
    let n_max = *ns.last().expect("nonempty grid");
    let dir = ctx.directions()[0].clone();
    let ray = ctx.realize(&dir, n_max)?;
    let mut grid = if e.b_grid.is_empty() { vec![e.b] } else { e.b_grid.clone() };
    if !grid.contains(&e.b) {
        grid.push(e.b);
        grid.sort_unstable();
    }
    let b_top = *grid.last().expect("nonempty grid");
    let b_ref = match e.b_ref {
        Some(r) => r,
        None => largest_feasible_radius(ctx, &ray.vertices, b_top)?,
    };
    if b_ref < b_top {
        return Err(FppError::Config(format!("b_ref = {b_ref} is below the largest grid radius {b_top}")));
    }

    // domains[i][j]: n = ns[i], radius grid[j]; the last column is the reference
    let mut radii = grid.clone();
    radii.push(b_ref);
    let mut domains = Vec::new();
    for &n in &ns {
        let path = &ray.vertices[..=n];
        domains.push(radii.iter().map(|&b| ctx.cylinder(path, b)).collect::<Result<Vec<_>>>()?);
    }
    let one = Element::identity();
    let budget = ctx.budget();
    let per_rep = ctx.replicate(|_, env| {
        let mut out = Vec::new();
        for (i, &n) in ns.iter().enumerate() {
            let t = ray.vertices[n].clone();
            let row = domains[i]
                .iter()
                .map(|d| Ok(d.passage(env, &one, &t, budget)?.time))
                .collect::<Result<Vec<f64>>>()?;
            out.push(row);
        }
        Ok(out)
    })?;

    let mut table = Table::new(&["replication", "n", "b", "is_reference", "time", "velocity"]);
    for (r, per_n) in per_rep.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            for (j, &b) in radii.iter().enumerate() {
                let t = per_n[i][j];
                table.rows.push(vec![r.into(), n.into(), b.into(), (j == grid.len()).into(), t.into(), (t / n as f64).into()]);
            }
        }
    }

    let j_b = grid.iter().position(|&b| b == e.b).expect("b is in the grid");
    let mut monotone_violations = 0usize;
    let mut per_n = Vec::new();
    let mut fractions = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        for per in &per_rep {
            for j in 1..radii.len() {
                // a larger cylinder can only lower the passage time
                if per[i][j] > per[i][j - 1] * (1.0 + 1e-12) {
                    monotone_violations += 1;
                }
            }
        }
        let ests: Vec<_> = radii
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                let v: Vec<f64> = per_rep.iter().map(|p| p[i][j] / n as f64).collect();
                json!({ "b": b, "velocity": Estimate::of(&v) })
            })
            .collect();
        let mut entry = json!({ "n": n, "by_radius": ests });
        if let Some(eps) = e.epsilon {
            let exceed = per_rep
                .iter()
                .filter(|p| p[i][j_b] >= p[i][grid.len()] + eps * n as f64)
                .count();
            let f = exceed as f64 / per_rep.len() as f64;
            fractions.push(f);
            entry["fraction_exceeding"] = json!(f);
        }
        per_n.push(entry);
    }

    let mut gates = vec![Gate::new(
        "monotone_in_b",
        monotone_violations == 0,
        format!("{monotone_violations} increases of T_B with B"),
    )];
    if let Some(eps) = e.epsilon {
        let nonincreasing = fractions.windows(2).all(|w| w[1] <= w[0]);
        gates.push(Gate::new(
            "fraction_nonincreasing",
            nonincreasing,
            format!("P(T_{} ≥ T_ref + {eps}·n) over n: {fractions:?}", e.b),
        ));
        let limit = e.gate.unwrap_or(0.05);
        let last = *fractions.last().expect("nonempty grid");
        gates.push(Gate::new(
            "fraction_at_max_n",
            last <= limit,
            format!("{last} at n = {n_max} against {limit}"),
        ));
    }
    Ok(ExperimentOutput {
        kind: ExperimentKind::BVelocity,
        table,
        summary: json!({
            "direction": dir.to_string(),
            "b": e.b,
            "b_grid": grid,
            "b_ref": b_ref,
            "reference_vertices": domains.last().and_then(|d| d.last()).map(|d| d.len()),
            "per_n": per_n,
            "monotone_violations": monotone_violations,
        }),
        gates,
        notes: vec![format!(
            "reference passage time uses the cylinder of radius {b_ref}, the largest fitting in {} vertices",
            e.max_domain_vertices
        )],
    })
}

/// Cesàro averages of `T_B` over consecutive `k`-segments of a ray, against
/// the frequency-weighted prediction `Σ_w f_w · E T_B(1, e(w))`.
pub(super) fn coarse_grain(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let analysis = analyze(&builtin_automaton(&ctx.model)?, &AnalysisOptions::default())?;
    let period = analysis.spectral.period;
    let k = e.scale.unwrap_or(period as usize);
    if k == 0 || !k.is_multiple_of(period as usize) {
        return Err(FppError::Config(format!("scale {k} must be a positive multiple of the period {period}")));
    }
    let segments = e.length.unwrap_or(20);
    let dir = ctx.directions()[0].clone();
    let resample = matches!(dir, DirectionSpec::Sampled(_));
    let chain = k_tuple_chain(&analysis, k)?;
    let start = analysis.automaton.initial();

    // admissible k-words with their predicted frequencies
    let mut words: Vec<(Vec<usize>, f64)> = Vec::new();
    for t in 0..chain.tuples.len() {
        let w = chain.word(&analysis, t);
        if words.iter().any(|(x, _)| *x == w) {
            continue;
        }
        let f = predicted_frequency(&analysis, &chain, &w, start)?;
        if f > 0.0 {
            words.push((w, f));
        }
    }
    let b = e.b;
    let word_domains: Vec<(CompiledDomain, Element)> = words
        .iter()
        .map(|(w, _)| {
            let mut path = vec![Element::identity()];
            for &s in w {
                let next = ctx.model.step(path.last().expect("nonempty"), s);
                path.push(next);
            }
            let end = path.last().expect("nonempty").clone();
            Ok((ctx.cylinder(&path, b)?, end))
        })
        .collect::<Result<_>>()?;

    let fixed_ray = if resample { None } else { Some(ctx.realize(&dir, k * segments)?) };
    let seed = ctx.seed();
    let budget = ctx.budget();
    let one = Element::identity();
    let per_rep = ctx.replicate(|r, env| {
        let labels = match (&fixed_ray, &dir) {
            (Some(ray), _) => ray.labels.clone(),
            (None, DirectionSpec::Sampled(s)) => {
                sample_ray(&analysis, super::replication_seed(*s ^ seed, r), k * segments)?.labels
            }
            (None, _) => unreachable!("only sampled directions are resampled"),
        };
        let mut seg_times = Vec::with_capacity(segments);
        let mut start = Element::identity();
        for seg in labels.chunks_exact(k) {
            let mut path = vec![start.clone()];
            for &s in seg {
                let next = ctx.model.step(path.last().expect("nonempty"), s);
                path.push(next);
            }
            let dom = ctx.cylinder(&path, b)?;
            let end = path.last().expect("nonempty").clone();
            seg_times.push(dom.passage(env, &start, &end, budget)?.time);
            start = end;
        }
        let word_times = word_domains
            .iter()
            .map(|(d, t)| Ok(d.passage(env, &one, t, budget)?.time))
            .collect::<Result<Vec<f64>>>()?;
        Ok((labels, seg_times, word_times))
    })?;

    let mut table = Table::new(&["replication", "segment", "time", "cesaro"]);
    let mut finals = Vec::new();
    let mut freq_weighted = Vec::new();
    for (r, (labels, seg, wt)) in per_rep.iter().enumerate() {
        let mut acc = 0.0;
        for (i, t) in seg.iter().enumerate() {
            acc += t;
            table.rows.push(vec![r.into(), (i + 1).into(), Cell::from(*t), (acc / (i + 1) as f64).into()]);
        }
        finals.push(acc / seg.len() as f64);
        let emp = crate::combing::block_frequencies(labels, k);
        freq_weighted.push(words.iter().zip(wt).map(|((w, _), t)| emp.get(w).copied().unwrap_or(0.0) * t).sum::<f64>());
    }
    let cesaro = Estimate::of(&finals);
    let mut predicted = 0.0;
    let mut pred_var = 0.0;
    let mut word_summary = Vec::new();
    for (i, (w, f)) in words.iter().enumerate() {
        let ts: Vec<f64> = per_rep.iter().map(|(_, _, wt)| wt[i]).collect();
        let est = Estimate::of(&ts);
        predicted += f * est.mean;
        pred_var += f * f * est.se * est.se;
        let label: Vec<&str> = w.iter().map(|&s| ctx.model.generators().label(s)).collect();
        word_summary.push(json!({ "word": label.join(" "), "frequency": f, "time": est }));
    }
    let pred_se = pred_var.sqrt();
    let combined = (cesaro.se * cesaro.se + pred_se * pred_se).sqrt();
    let diff = (cesaro.mean - predicted).abs();
    let gates = vec![Gate::new(
        "cesaro_matches_prediction",
        diff <= 2.0 * combined,
        format!("|{:.6} - {predicted:.6}| = {diff:.6}, 2 SE = {:.6}", cesaro.mean, 2.0 * combined),
    )];
    Ok(ExperimentOutput {
        kind: ExperimentKind::CoarseGrain,
        table,
        summary: json!({
            "direction": dir.to_string(),
            "resampled_per_replication": resample,
            "scale": k,
            "segments": segments,
            "b": b,
            "cesaro": cesaro,
            "predicted": predicted,
            "predicted_se": pred_se,
            "frequency_weighted_along_ray": Estimate::of(&freq_weighted),
            "words": word_summary,
        }),
        gates,
        notes: Vec::new(),
    })
}
