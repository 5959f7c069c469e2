use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;

use super::spectral::CombingAnalysis;
use crate::error::{FppError, Result};
use crate::group::{Element, GroupModel};

/// Cap on the number of admissible tuples in [`k_tuple_chain`].
pub const MAX_TUPLES: usize = 200_000;

/// Measure of the cone of `g`: the probability that a ν-random ray starts
/// with the accepted word of `g`, i.e. the product of the per-label
/// transition probabilities along that word.
pub fn cone_measure(analysis: &CombingAnalysis, model: &GroupModel, g: &Element) -> Result<f64> {
    let word = analysis
        .automaton
        .accepted_word(model, g)?
        .ok_or_else(|| FppError::domain(format!("{g} has no accepted word")))?;
    let mut p = 1.0;
    let mut state = analysis.automaton.initial();
    for (label, next) in word {
        p *= analysis.markov.label_prob[state][label];
        state = next;
    }
    Ok(p)
}

/// A closed class of the k-tuple chain.
#[derive(Clone, Debug, Serialize)]
pub struct RecurrentClass {
    /// Tuple indices, ascending.
    pub members: Vec<usize>,
    /// Stationary probabilities aligned with `members`.
    pub stationary: Vec<f64>,
    /// `‖πP − π‖₁`.
    pub residual: f64,
}

/// The Markov chain on admissible k-tuples of automaton states inside
/// maximal components, moving one block of `k` steps at a time.
#[derive(Clone, Debug)]
pub struct TupleChain {
    pub k: usize,
    pub tuples: Vec<Vec<usize>>,
    /// Sparse rows `(target tuple, probability)`.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub recurrent: Vec<RecurrentClass>,
}

impl TupleChain {
    /// The label word spelled by a tuple.
    pub fn word(&self, analysis: &CombingAnalysis, t: usize) -> Vec<usize> {
        self.tuples[t]
            .iter()
            .map(|&s| analysis.incoming[s].expect("tuple states have incoming labels"))
            .collect()
    }
}

fn period_of(rows: &[Vec<(usize, f64)>], members: &[usize], local: &FxHashMap<usize, usize>) -> u64 {
    let mut level = vec![u64::MAX; members.len()];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut g = 0u64;
    while let Some(i) = queue.pop_front() {
        for &(t, _) in &rows[members[i]] {
            let Some(&j) = local.get(&t) else { continue };
            if level[j] == u64::MAX {
                level[j] = level[i] + 1;
                queue.push_back(j);
            } else {
                let d = (level[i] + 1).abs_diff(level[j]);
                g = gcd(g, d);
            }
        }
    }
    g
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn stationary(rows: &[Vec<(usize, f64)>], members: &[usize]) -> Result<(Vec<f64>, f64)> {
    let n = members.len();
    let local: FxHashMap<usize, usize> = members.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let apply = |pi: &[f64]| {
        let mut out = vec![0.0; n];
        for (i, &t) in members.iter().enumerate() {
            for &(u, p) in &rows[t] {
                out[local[&u]] += pi[i] * p;
            }
        }
        out
    };
    let pi: Vec<f64> = if n <= 800 {
        // Solve (Pᵀ − I)π = 0 with the last equation replaced by Σπ = 1.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, &t) in members.iter().enumerate() {
            for &(u, p) in &rows[t] {
                a[(local[&u], i)] += p;
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let sol = a.lu().solve(&b).ok_or(FppError::Numeric {
            msg: "singular stationary system".into(),
            residual: f64::NAN,
        })?;
        sol.iter().copied().collect()
    } else {
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..1_000_000 {
            let next = apply(&pi);
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        pi
    };
    let next = apply(&pi);
    let residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
    Ok((pi, residual))
}

/// Builds the k-tuple chain. `k` must be a positive multiple of the period
/// of the maximal components, which makes every recurrent class aperiodic.
pub fn k_tuple_chain(analysis: &CombingAnalysis, k: usize) -> Result<TupleChain> {
    let d = analysis.spectral.period as usize;
    if k == 0 || !k.is_multiple_of(d) {
        return Err(FppError::domain(format!("k = {k} is not a positive multiple of the period {d}")));
    }
    let aut = &analysis.automaton;
    let nmat = &analysis.markov.n;
    let in_max: Vec<bool> = (0..aut.n_states()).map(|s| analysis.is_in_maximal(s)).collect();
    let succ: Vec<Vec<usize>> = (0..aut.n_states())
        .map(|p| {
            let mut v: Vec<usize> = aut.transitions(p).map(|(_, q)| q).filter(|&q| in_max[q] && nmat[p][q] > 0.0).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();

    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut inner: Vec<f64> = Vec::new();
    fn extend(
        cur: &mut Vec<usize>,
        prob: f64,
        k: usize,
        succ: &[Vec<usize>],
        nmat: &[Vec<f64>],
        tuples: &mut Vec<Vec<usize>>,
        inner: &mut Vec<f64>,
    ) -> Result<()> {
        if cur.len() == k {
            if tuples.len() >= MAX_TUPLES {
                return Err(FppError::resource("admissible k-tuples", MAX_TUPLES as u64));
            }
            tuples.push(cur.clone());
            inner.push(prob);
            return Ok(());
        }
        let last = *cur.last().unwrap();
        for &q in &succ[last] {
            cur.push(q);
            extend(cur, prob * nmat[last][q], k, succ, nmat, tuples, inner)?;
            cur.pop();
        }
        Ok(())
    }
    for s in (0..aut.n_states()).filter(|&s| in_max[s]) {
        extend(&mut vec![s], 1.0, k, &succ, nmat, &mut tuples, &mut inner)?;
    }

    let mut by_first: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
    for (i, t) in tuples.iter().enumerate() {
        by_first.entry(t[0]).or_default().push(i);
    }
    let transitions: Vec<Vec<(usize, f64)>> = tuples
        .iter()
        .map(|t| {
            let last = t[k - 1];
            let mut row = Vec::new();
            for &q in &succ[last] {
                for &u in by_first.get(&q).map(Vec::as_slice).unwrap_or(&[]) {
                    row.push((u, nmat[last][q] * inner[u]));
                }
            }
            row
        })
        .collect();

    let mut g: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..tuples.len()).map(|_| g.add_node(())).collect();
    for (i, row) in transitions.iter().enumerate() {
        for &(u, _) in row {
            g.add_edge(nodes[i], nodes[u], ());
        }
    }
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    sccs.sort_by_key(|c| c[0]);
    let mut recurrent = Vec::new();
    for members in sccs {
        let local: FxHashMap<usize, usize> = members.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let closed = members.iter().all(|&t| transitions[t].iter().all(|(u, _)| local.contains_key(u)));
        if !closed {
            continue;
        }
        let period = period_of(&transitions, &members, &local);
        if period != 1 {
            return Err(FppError::domain(format!(
                "recurrent tuple class has period {period}; k = {k} must be a multiple of the period"
            )));
        }
        let (pi, residual) = stationary(&transitions, &members)?;
        if residual > 1e-12 {
            return Err(FppError::Numeric {
                msg: "stationary distribution residual".into(),
                residual,
            });
        }
        recurrent.push(RecurrentClass {
            members,
            stationary: pi,
            residual,
        });
    }
    Ok(TupleChain {
        k,
        tuples,
        transitions,
        recurrent,
    })
}

/// Expected long-run block frequency of the word `w` (|w| = k) along a
/// ν-random ray started from `start_state`: the boundary-state distribution
/// is pushed through `N^k` until it has left the transient states, then each
/// recurrent class contributes its absorption mass times the stationary mass
/// of the tuples spelling `w`.
pub fn predicted_frequency(
    analysis: &CombingAnalysis,
    chain: &TupleChain,
    word: &[usize],
    start_state: usize,
) -> Result<f64> {
    if word.len() != chain.k {
        return Err(FppError::domain(format!(
            "word length {} differs from the chain block length {}",
            word.len(),
            chain.k
        )));
    }
    let n = analysis.automaton.n_states();
    if start_state >= n {
        return Err(FppError::domain(format!("state {start_state} out of range")));
    }
    let nmat = &analysis.markov.n;
    let r = &analysis.spectral.r;
    let mut b = vec![0.0; n];
    b[start_state] = 1.0;
    let transient_mass =
        |b: &[f64]| -> f64 { (0..n).filter(|&s| r[s] > 0.0 && !analysis.is_in_maximal(s)).map(|s| b[s]).sum() };
    let mut iters = 0;
    while transient_mass(&b) > 1e-15 {
        for _ in 0..chain.k {
            let mut next = vec![0.0; n];
            for p in 0..n {
                if b[p] != 0.0 {
                    for q in 0..n {
                        next[q] += b[p] * nmat[p][q];
                    }
                }
            }
            b = next;
        }
        iters += 1;
        if iters > 1_000_000 {
            return Err(FppError::Numeric {
                msg: "absorption into maximal components did not converge".into(),
                residual: transient_mass(&b),
            });
        }
    }
    let mut f = 0.0;
    for class in &chain.recurrent {
        let mut lasts: Vec<usize> = class.members.iter().map(|&t| chain.tuples[t][chain.k - 1]).collect();
        lasts.sort_unstable();
        lasts.dedup();
        let mass: f64 = lasts.iter().map(|&s| b[s]).sum();
        if mass == 0.0 {
            continue;
        }
        let hit: f64 = class
            .members
            .iter()
            .zip(&class.stationary)
            .filter(|(&t, _)| chain.word(analysis, t) == word)
            .map(|(_, p)| p)
            .sum();
        f += mass * hit;
    }
    Ok(f)
}

/// Empirical frequency of each length-`k` block along a label sequence
/// (disjoint consecutive blocks; a trailing partial block is ignored).
pub fn block_frequencies(labels: &[usize], k: usize) -> FxHashMap<Vec<usize>, f64> {
    let blocks = labels.len() / k;
    let mut counts: FxHashMap<Vec<usize>, f64> = FxHashMap::default();
    for b in labels.chunks_exact(k) {
        *counts.entry(b.to_vec()).or_default() += 1.0;
    }
    for v in counts.values_mut() {
        *v /= blocks as f64;
    }
    counts
}

/// A ν-random ray prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampledRay {
    pub labels: Vec<usize>,
    /// Automaton states after each label.
    pub states: Vec<usize>,
}

/// Samples the first `n` labels of a ν-random ray, deterministically from
/// `seed`.
pub fn sample_ray(analysis: &CombingAnalysis, seed: u64, n: usize) -> Result<SampledRay> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let aut = &analysis.automaton;
    let mut state = aut.initial();
    let mut labels = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for i in 0..n {
        if analysis.spectral.r[state] == 0.0 {
            return Err(FppError::Sampling(format!("dead-end state {state} reached after {i} steps")));
        }
        let u: f64 = rng.gen();
        let probs = &analysis.markov.label_prob[state];
        let mut acc = 0.0;
        let mut chosen = None;
        for (l, q) in aut.transitions(state) {
            if probs[l] <= 0.0 {
                continue;
            }
            acc += probs[l];
            chosen = Some((l, q));
            if u < acc {
                break;
            }
        }
        let (l, q) = chosen.ok_or_else(|| FppError::Sampling(format!("no live transition from state {state}")))?;
        labels.push(l);
        states.push(q);
        state = q;
    }
    Ok(SampledRay { labels, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combing::{analyze, builtin_automaton, AnalysisOptions};

    fn analysis(model: &GroupModel) -> CombingAnalysis {
        analyze(&builtin_automaton(model).unwrap(), &AnalysisOptions::default()).unwrap()
    }

    #[test]
    fn f2_cone_measures() {
        let f2 = GroupModel::free(2);
        let a = analysis(&f2);
        let c = |s: &str| cone_measure(&a, &f2, &f2.parse_element(s).unwrap()).unwrap();
        assert!((c("a") - 0.25).abs() < 1e-12);
        assert!((c("ab") - 1.0 / 12.0).abs() < 1e-12);
        assert!((c("1") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cone_additivity_mixed() {
        // ν(cone(g)) splits over the one-letter extensions of g's accepted word
        let m = GroupModel::mixed_f2();
        let a = analysis(&m);
        for (g, _) in m.ball(&Element::identity(), 3).unwrap() {
            let word = a.automaton.accepted_word(&m, &g).unwrap().unwrap();
            let state = word.last().map_or(a.automaton.initial(), |&(_, q)| q);
            let parent = cone_measure(&a, &m, &g).unwrap();
            let children: f64 = a
                .automaton
                .transitions(state)
                .map(|(s, _)| cone_measure(&a, &m, &m.step(&g, s)).unwrap())
                .sum();
            if a.spectral.r[state] > 0.0 {
                assert!((parent - children).abs() < 1e-12, "{g}: {parent} vs {children}");
            }
        }
    }

    #[test]
    fn f2_pair_chain() {
        let a = analysis(&GroupModel::free(2));
        let chain = k_tuple_chain(&a, 2).unwrap();
        assert_eq!(chain.tuples.len(), 12);
        assert_eq!(chain.recurrent.len(), 1);
        for p in &chain.recurrent[0].stationary {
            assert!((p - 1.0 / 12.0).abs() < 1e-12);
        }
        for row in &chain.transitions {
            let s: f64 = row.iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let ab = [0usize, 2];
        let f = predicted_frequency(&a, &chain, &ab, a.automaton.initial()).unwrap();
        assert!((f - 1.0 / 12.0).abs() < 1e-12);
        let aa_inv = [0usize, 1];
        assert_eq!(predicted_frequency(&a, &chain, &aa_inv, a.automaton.initial()).unwrap(), 0.0);
    }

    #[test]
    fn k_must_respect_period() {
        let z = GroupModel::free(1);
        let aut =
            crate::combing::load_automaton("states 3 initial 1\n1 a 2\n2 a 3\n3 a 2\n", z.generators()).unwrap();
        let a = analyze(&aut, &AnalysisOptions::default()).unwrap();
        assert!(k_tuple_chain(&a, 1).is_err());
        let chain = k_tuple_chain(&a, 2).unwrap();
        assert_eq!(chain.recurrent.len(), 2);
    }

    #[test]
    fn sampling_is_deterministic_and_accepted() {
        let m = GroupModel::mixed_f2();
        let a = analysis(&m);
        let r1 = sample_ray(&a, 7, 500).unwrap();
        let r2 = sample_ray(&a, 7, 500).unwrap();
        assert_eq!(r1, r2);
        assert_ne!(r1, sample_ray(&a, 8, 500).unwrap());
        assert!(a.automaton.accepts(&r1.labels));
        let g = m.evaluate(&r1.labels);
        assert_eq!(m.word_length(&g).unwrap(), 500);
    }

    #[test]
    fn sampling_from_dead_end_fails() {
        let z = GroupModel::cyclic_multi(2);
        let a = analysis(&z);
        // the live part of the ℤ automaton never enters a dead end, so
        // sampled rays are pure ±2 steps
        let r = sample_ray(&a, 1, 50).unwrap();
        let first = r.labels[0];
        assert!(r.labels.iter().all(|&l| l == first));
    }

    #[test]
    fn mixed_single_letter_frequencies_sum_to_one() {
        let m = GroupModel::mixed_f2();
        let a = analysis(&m);
        let chain = k_tuple_chain(&a, 1).unwrap();
        let total: f64 = (0..m.generators().len())
            .map(|l| predicted_frequency(&a, &chain, &[l], a.automaton.initial()).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
