use serde_json::json;

use super::stats::Estimate;
use super::{replication_seed, Context, ExperimentKind, ExperimentOutput, Gate, Table};
use crate::combing::{analyze, block_frequencies, builtin_automaton, k_tuple_chain, predicted_frequency, sample_ray, AnalysisOptions};
use crate::error::{FppError, Result};
use crate::group::GroupModel;

/// Parses a label word: whitespace-separated labels, or a run of labels
/// matched greedily by longest prefix (`"ab^-1"`).
pub(crate) fn parse_label_word(model: &GroupModel, s: &str) -> Result<Vec<usize>> {
    let gens = model.generators();
    let mut out = Vec::new();
    for token in s.split_whitespace() {
        if let Ok(i) = gens.index_of(token) {
            out.push(i);
            continue;
        }
        let mut rest = token;
        while !rest.is_empty() {
            let best = (0..gens.len())
                .filter(|&i| rest.starts_with(gens.label(i)))
                .max_by_key(|&i| gens.label(i).len())
                .ok_or_else(|| FppError::UnknownLabel(rest.to_string()))?;
            out.push(best);
            rest = &rest[gens.label(best).len()..];
        }
    }
    if out.is_empty() {
        return Err(FppError::Parse(format!("empty word {s:?}")));
    }
    Ok(out)
}

/// Empirical block frequencies along ν-sampled rays against the stationary
/// prediction of the k-tuple chain.
pub(super) fn frequency(ctx: &Context) -> Result<ExperimentOutput> {
    let e = &ctx.cfg.experiment;
    let analysis = analyze(&builtin_automaton(&ctx.model)?, &AnalysisOptions::default())?;
    let period = analysis.spectral.period as usize;
    let length = e.length.unwrap_or(100_000);
    let start = analysis.automaton.initial();

    let mut words: Vec<Vec<usize>> = Vec::new();
    if e.words.is_empty() {
        let k_max = e.scale.unwrap_or(2);
        for k in (1..=k_max).filter(|k| k % period == 0) {
            let chain = k_tuple_chain(&analysis, k)?;
            for t in 0..chain.tuples.len() {
                let w = chain.word(&analysis, t);
                if !words.contains(&w) {
                    words.push(w);
                }
            }
        }
        if words.is_empty() {
            return Err(FppError::Config(format!("no block length ≤ {k_max} is a multiple of the period {period}")));
        }
    } else {
        for s in &e.words {
            words.push(parse_label_word(&ctx.model, s)?);
        }
    }
    words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let mut predicted = Vec::with_capacity(words.len());
    let mut chains = std::collections::BTreeMap::new();
    for w in &words {
        if w.len() % period != 0 {
            return Err(FppError::Config(format!(
                "word length {} is not a multiple of the period {period}",
                w.len()
            )));
        }
        if let std::collections::btree_map::Entry::Vacant(e) = chains.entry(w.len()) {
            e.insert(k_tuple_chain(&analysis, w.len())?);
        }
        predicted.push(predicted_frequency(&analysis, &chains[&w.len()], w, start)?);
    }

    let seed = ctx.seed();
    let per_rep = ctx.replicate(|r, _| {
        let ray = sample_ray(&analysis, replication_seed(seed, r), length)?;
        let mut by_k = std::collections::BTreeMap::new();
        Ok(words
            .iter()
            .map(|w| {
                let freqs = by_k.entry(w.len()).or_insert_with(|| block_frequencies(&ray.labels, w.len()));
                freqs.get(w).copied().unwrap_or(0.0)
            })
            .collect::<Vec<f64>>())
    })?;

    let names: Vec<String> = words
        .iter()
        .map(|w| w.iter().map(|&s| ctx.model.generators().label(s)).collect::<Vec<_>>().join(" "))
        .collect();
    let mut table = Table::new(&["replication", "word", "k", "empirical", "predicted"]);
    for (r, emp) in per_rep.iter().enumerate() {
        for (i, w) in words.iter().enumerate() {
            table.rows.push(vec![r.into(), names[i].clone().into(), w.len().into(), emp[i].into(), predicted[i].into()]);
        }
    }
    let mut worst = 0.0f64;
    let mut summary = Vec::new();
    for i in 0..words.len() {
        let xs: Vec<f64> = per_rep.iter().map(|e| e[i]).collect();
        let dev = xs.iter().map(|x| (x - predicted[i]).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        summary.push(json!({
            "word": names[i],
            "predicted": predicted[i],
            "empirical": Estimate::of(&xs),
            "max_abs_deviation": dev,
        }));
    }
    let tol = e.gate.unwrap_or(0.02);
    Ok(ExperimentOutput {
        kind: ExperimentKind::Frequency,
        table,
        summary: json!({ "ray_length": length, "period": period, "words": summary, "max_abs_deviation": worst }),
        gates: vec![Gate::new(
            "frequencies_within_tolerance",
            worst <= tol,
            format!("largest deviation {worst:.5} against {tol}"),
        )],
        notes: Vec::new(),
    })
}
