use serde_json::json;

use super::stats::{
    anderson_darling, bootstrap_variance_ci, kurtosis, linear_fit, mean, skewness, variance as sample_variance,
    Estimate, AD_CRITICAL_1PCT,
};
use super::{replication_seed, Context, ExperimentKind, ExperimentOutput, Gate, Table};
use crate::combing::DirectionSpec;
use crate::error::Result;
use crate::group::Element;

/// `(time, path edges)` of `T_B(1, x_n)` for every replication and every
/// `n` of the grid, along the first configured direction.
type Passages = (Vec<usize>, DirectionSpec, Vec<Vec<(f64, usize)>>);

fn passages(ctx: &Context) -> Result<Passages> {
    let ns = ctx.n_grid()?;
    let n_max = *ns.last().expect("nonempty grid");
    let dir = ctx.directions()[0].clone();
    let ray = ctx.realize(&dir, n_max)?;
    let domains = ns
        .iter()
        .map(|&n| ctx.cylinder(&ray.vertices[..=n], ctx.cfg.experiment.b))
        .collect::<Result<Vec<_>>>()?;
    let one = Element::identity();
    let budget = ctx.budget();
    let per_rep = ctx.replicate(|_, env| {
        ns.iter()
            .zip(&domains)
            .map(|(&n, d)| {
                let res = d.passage(env, &one, &ray.vertices[n], budget)?;
                Ok((res.time, res.n_edges()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((ns, dir, per_rep))
}

fn column<T>(per_rep: &[Vec<(f64, usize)>], i: usize, f: impl Fn(&(f64, usize)) -> T) -> Vec<T> {
    per_rep.iter().map(|row| f(&row[i])).collect()
}

/// `Var T_B(1, x_n)` over `n`, with a linear fit and the ratio to the mean
/// ω-geodesic length.
pub(super) fn variance(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let (ns, dir, per_rep) = passages(ctx)?;
    let mut table = Table::new(&["replication", "n", "time", "path_edges"]);
    for (r, row) in per_rep.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            table.rows.push(vec![r.into(), n.into(), row[i].0.into(), row[i].1.into()]);
        }
    }

    let mut vars = Vec::new();
    let mut per_n = Vec::new();
    let mut kesten = 0.0f64;
    let mut per_step_gates = Vec::new();
    let tol = e.gate.unwrap_or(0.15);
    for (i, &n) in ns.iter().enumerate() {
        let times = column(&per_rep, i, |p| p.0);
        let lens = column(&per_rep, i, |p| p.1 as f64);
        let v = sample_variance(&times);
        let (lo, hi) = bootstrap_variance_ci(&times, e.bootstrap, replication_seed(e.seed ^ 0x626f_6f74, i));
        let el = mean(&lens);
        kesten = kesten.max(v / el);
        vars.push(v);
        per_n.push(json!({
            "n": n,
            "mean_time": Estimate::of(&times),
            "variance": v,
            "variance_ci": [lo, hi],
            "variance_per_n": v / n as f64,
            "mean_path_edges": el,
            "variance_over_mean_edges": v / el,
        }));
        if let Some(expect) = e.expect {
            let rel = (v / n as f64 - expect).abs() / expect;
            per_step_gates.push(Gate::new(
                format!("variance_per_n_{n}"),
                rel <= tol,
                format!("Var/n = {:.6} against {expect} (relative error {rel:.4}, tolerance {tol})", v / n as f64),
            ));
        }
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut gates = per_step_gates;
    let fit = (ns.len() >= 2).then(|| linear_fit(&xs, &vars));
    if let (Some(fit), true) = (fit, ns.len() >= 3) {
        gates.push(Gate::new(
            "linear_fit",
            fit.r2 >= e.r2_min && fit.slope > 0.0,
            format!("slope {:.6}, R² {:.5} against {}", fit.slope, fit.r2, e.r2_min),
        ));
    }
    gates.push(Gate::new(
        "kesten_constant_finite",
        kesten.is_finite() && kesten > 0.0,
        format!("C = max Var/E ℓ = {kesten:.6}"),
    ));
    Ok(ExperimentOutput {
        kind: ExperimentKind::Variance,
        table,
        summary: json!({
            "direction": dir.to_string(),
            "b": e.b,
            "per_n": per_n,
            "fit": fit,
            "kesten_constant": kesten,
        }),
        gates,
        notes: Vec::new(),
    })
}

/// Lower-tail frequencies `P(T ≤ εn)` and long-geodesic frequencies
/// `P(ℓ(Υ)/n ≥ c)`, with their exponential decay rates in `n`.
pub(super) fn concentration(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let eps = e.epsilon.unwrap_or(0.05);
    let thr = e.ratio_threshold.unwrap_or(1.5);
    let (ns, dir, per_rep) = passages(ctx)?;
    let mut table = Table::new(&["replication", "n", "time", "path_edges", "edge_ratio"]);
    for (r, row) in per_rep.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            let (t, l) = row[i];
            table.rows.push(vec![r.into(), n.into(), t.into(), l.into(), (l as f64 / n as f64).into()]);
        }
    }
    let reps = per_rep.len() as f64;
    let mut low = Vec::new();
    let mut long = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        low.push(per_rep.iter().filter(|row| row[i].0 <= eps * n as f64).count() as f64 / reps);
        long.push(per_rep.iter().filter(|row| row[i].1 as f64 >= thr * n as f64).count() as f64 / reps);
    }
    let rate = |freqs: &[f64]| {
        let pts: Vec<(f64, f64)> = ns.iter().zip(freqs).filter(|(_, f)| **f > 0.0).map(|(&n, f)| (n as f64, f.ln())).collect();
        (pts.len() >= 2).then(|| {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            -linear_fit(&x, &y).slope
        })
    };
    Ok(ExperimentOutput {
        kind: ExperimentKind::Concentration,
        table,
        summary: json!({
            "direction": dir.to_string(),
            "epsilon": eps,
            "ratio_threshold": thr,
            "n": ns,
            "lower_tail_frequency": low,
            "lower_tail_decay_rate": rate(&low),
            "long_geodesic_frequency": long,
            "long_geodesic_decay_rate": rate(&long),
        }),
        gates: Vec::new(),
        notes: Vec::new(),
    })
}

/// Standardized passage times with moment and normality diagnostics.
pub(super) fn clt(ctx: &Context) -> Result<ExperimentOutput> {
    let (ns, dir, per_rep) = passages(ctx)?;
    let mut z = vec![Vec::new(); ns.len()];
    let mut per_n = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let times = column(&per_rep, i, |p| p.0);
        let (m, s) = (mean(&times), sample_variance(&times).sqrt());
        z[i] = times.iter().map(|t| (t - m) / s).collect();
        let ad = anderson_darling(&times);
        per_n.push(json!({
            "n": n,
            "mean": m,
            "sd": s,
            "skewness": skewness(&times),
            "excess_kurtosis": kurtosis(&times),
            "anderson_darling": ad,
            "normal_at_1pct": ad < AD_CRITICAL_1PCT,
        }));
    }
    let mut table = Table::new(&["replication", "n", "time", "z"]);
    for (r, row) in per_rep.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            table.rows.push(vec![r.into(), n.into(), row[i].0.into(), z[i][r].into()]);
        }
    }
    Ok(ExperimentOutput {
        kind: ExperimentKind::Clt,
        table,
        summary: json!({ "direction": dir.to_string(), "per_n": per_n, "ad_critical_1pct": AD_CRITICAL_1PCT }),
        gates: Vec::new(),
        notes: Vec::new(),
    })
}
