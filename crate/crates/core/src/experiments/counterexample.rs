use serde_json::json;

use super::stats::{expected_min_one_vs_two, Estimate};
use super::{Context, ExperimentKind, ExperimentOutput, Gate, Table};
use crate::combing::DirectionSpec;
use crate::error::Result;
use crate::group::{Element, GroupModel};
use crate::metric::{path_weight, CompiledDomain, Domain};

const QUADRATURE_GRID: usize = 4000;

/// Per replication: times on ℤ, times on mixed F2 (a then b per n),
/// alternation checkpoint times, largest bridge-identity gap.
type Replication = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

/// Velocity defects away from trees:
/// (a) on `ℤ` with generators `{±1, ±2}` the velocity along `2n` falls
///     below the mean weight, bounded by `E min(X, Y₁ + Y₂)`;
/// (b) on `F₂` with `{a^{±1}, b^{±1}, b^{±2}}` the `a`-edges are bridges, so
///     `v(a^∞)` is the mean weight, while `v(b^∞)` falls below it;
/// (c) along `a^2 b^4 a^8 b^16 …` the running ratio `T/|prefix|` swings
///     between the two directional velocities.
pub(super) fn counterexample(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let ns = ctx.n_grid()?;
    let n_max = *ns.last().expect("nonempty grid");
    let dist = ctx.dist;
    let mu = dist.mean();
    let b = e.b;
    let budget = ctx.budget();
    let one = Element::identity();

    let z2 = GroupModel::cyclic_multi(2);
    let mixed = GroupModel::mixed_f2();
    let cyl = |model: &GroupModel, path: Vec<Element>| -> Result<CompiledDomain> {
        CompiledDomain::compile(model, &Domain::cylinder(b, path))
    };

    // (a) targets 2n on ℤ
    let z_targets = ns
        .iter()
        .map(|&n| {
            let x = z2.parse_element(&(2 * n).to_string())?;
            Ok((cyl(&z2, z2.word_geodesic(&one, &x)?)?, x))
        })
        .collect::<Result<Vec<_>>>()?;
    // (b) a^n and x_n towards b^∞
    let ray_a = DirectionSpec::Pole("a".into()).realize(&mixed, n_max)?;
    let ray_b = DirectionSpec::Pole("b".into()).realize(&mixed, n_max)?;
    let mut f_targets = Vec::new();
    for &n in &ns {
        f_targets.push((cyl(&mixed, ray_a.vertices[..=n].to_vec())?, ray_a.vertices[n].clone()));
        f_targets.push((cyl(&mixed, ray_b.vertices[..=n].to_vec())?, ray_b.vertices[n].clone()));
    }
    // (c) alternating syllables of doubling length
    let levels = e.alternation_levels.unwrap_or(5);
    let mut word = Element::identity();
    let mut checkpoints = Vec::new();
    for k in 0..levels {
        word = word.mul(&Element::power((k % 2) as u8, 1 << (k + 1)));
        checkpoints.push(word.clone());
    }
    let alt_path = if levels > 0 { mixed.word_geodesic(&one, &word)? } else { vec![one.clone()] };
    let alt_domain = cyl(&mixed, alt_path)?;
    let checkpoint_lengths: Vec<u64> = checkpoints.iter().map(|c| mixed.word_length(c)).collect::<Result<_>>()?;

    let per_rep = ctx.replicate(|_, env| {
        let a: Vec<f64> = z_targets
            .iter()
            .map(|(d, x)| Ok(d.passage(env, &one, x, budget)?.time))
            .collect::<Result<_>>()?;
        let mut f = Vec::new();
        let mut bridge_gap = 0.0f64;
        for (i, (d, x)) in f_targets.iter().enumerate() {
            let res = d.passage(env, &one, x, budget)?;
            if i % 2 == 0 {
                let n = ns[i / 2];
                let bridge = path_weight(&mixed, env, &ray_a.vertices[..=n])?;
                bridge_gap = bridge_gap.max((res.time - bridge).abs());
            }
            f.push(res.time);
        }
        let alt = alt_domain.passage_many(env, &one, &checkpoints, budget)?;
        Ok((a, f, alt, bridge_gap))
    })?;

    let mut table = Table::new(&["part", "replication", "n", "time", "velocity"]);
    for (r, (a, f, alt, _)) in per_rep.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate() {
            table.rows.push(vec!["z-2n".into(), r.into(), n.into(), a[i].into(), (a[i] / n as f64).into()]);
        }
        for (i, &n) in ns.iter().enumerate() {
            for (j, part) in ["mixed-a", "mixed-b"].iter().enumerate() {
                let t = f[2 * i + j];
                table.rows.push(vec![(*part).into(), r.into(), n.into(), t.into(), (t / n as f64).into()]);
            }
        }
        for (t, &len) in alt.iter().zip(&checkpoint_lengths) {
            table.rows.push(vec!["alternation".into(), r.into(), len.into(), (*t).into(), (t / len as f64).into()]);
        }
    }

    let est = |pick: &dyn Fn(&Replication) -> f64| -> Estimate {
        Estimate::of(&per_rep.iter().map(pick).collect::<Vec<_>>())
    };
    let last = ns.len() - 1;
    let n_f = n_max as f64;
    let v_z = est(&|p| p.0[last] / n_f);
    let v_a = est(&|p| p.1[2 * last] / n_f);
    let v_b = est(&|p| p.1[2 * last + 1] / n_f);
    let bridge_gap = per_rep.iter().map(|p| p.3).fold(0.0, f64::max);
    let precondition = 2.0 * dist.lower_bound() < dist.upper_bound();
    let bound = expected_min_one_vs_two(&dist, QUADRATURE_GRID);

    let mut gates = vec![
        Gate::new(
            "bridge_identity",
            bridge_gap <= 1e-10,
            format!("largest |T(1, a^n) - Σ bridge weights| = {bridge_gap:e}"),
        ),
        Gate::new(
            "a_velocity_is_mean",
            (v_a.mean - mu).abs() <= 2.0 * v_a.se,
            format!("v(a) = {:.6} ± {:.6} against {mu}", v_a.mean, v_a.se),
        ),
        Gate::new(
            "b_velocity_below_mean",
            v_b.mean < mu - 3.0 * v_b.se,
            format!("v(b) = {:.6} ± {:.6} against {mu}", v_b.mean, v_b.se),
        ),
    ];
    let mut notes = Vec::new();
    if precondition {
        gates.push(Gate::new(
            "z_velocity_below_mean",
            v_z.mean < mu - 3.0 * v_z.se,
            format!("v = {:.6} ± {:.6} against {mu}", v_z.mean, v_z.se),
        ));
        gates.push(Gate::new(
            "z_velocity_below_bound",
            v_z.mean <= bound + 3.0 * v_z.se,
            format!("v = {:.6} ± {:.6} against E min(X, Y1 + Y2) = {bound:.6}", v_z.mean, v_z.se),
        ));
    } else {
        notes.push(format!(
            "support lower end {} is not below half the upper end {}; the strict defect on ℤ is not guaranteed",
            dist.lower_bound(),
            dist.upper_bound()
        ));
    }
    let alternation: Vec<_> = checkpoint_lengths
        .iter()
        .enumerate()
        .map(|(i, len)| {
            json!({
                "syllable": i + 1,
                "prefix_length": len,
                "ratio": est(&|p| p.2[i] / *len as f64),
            })
        })
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Counterexample,
        table,
        summary: json!({
            "n": n_max,
            "b": b,
            "mean_weight": mu,
            "z_velocity": v_z,
            "min_one_vs_two_bound": bound,
            "precondition_two_a_below_b": precondition,
            "a_velocity": v_a,
            "b_velocity": v_b,
            "bridge_max_gap": bridge_gap,
            "alternation": alternation,
        }),
        gates,
        notes,
    })
}
