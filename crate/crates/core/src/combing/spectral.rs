use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::automaton::GeodesicAutomaton;
use crate::error::{FppError, Result};

/// Tolerances for [`analyze`].
#[derive(Clone, Copy, Debug)]
pub struct AnalysisOptions {
    /// Relative tolerance for calling a component maximal.
    pub maximal_rel_tol: f64,
    /// Convergence tolerance for eigenvalue and projection iterations.
    pub tol: f64,
    /// Iteration cap for every iterative step.
    pub max_iterations: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            maximal_rel_tol: 1e-9,
            tol: 1e-14,
            max_iterations: 1_000_000,
        }
    }
}

/// A strongly connected component of the automaton graph.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub states: Vec<usize>,
    /// Single state without a self-loop.
    pub trivial: bool,
    /// Spectral radius of the transition matrix restricted to the component.
    pub lambda: f64,
    /// Gcd of cycle lengths (0 for trivial components).
    pub period: u64,
    pub maximal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    pub lambda: f64,
    /// Lcm of the periods of maximal components.
    pub period: u64,
    /// Right projection `r(v_u)` of the all-ones vector.
    pub r: Vec<f64>,
    /// Left projection `l(v_i)` of the initial-state indicator.
    pub l: Vec<f64>,
    pub r_residual: f64,
    pub l_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovData {
    /// Row-stochastic matrix on automaton states.
    pub n: Vec<Vec<f64>>,
    /// Stationary vector `μ ∝ r ⊙ l`.
    pub mu: Vec<f64>,
    /// Probability of each `(state, label)` transition, `r_q / (λ r_p)`.
    /// Dead-end states (zero `r`) have all zeros here.
    pub label_prob: Vec<Vec<f64>>,
    pub max_row_sum_error: f64,
}

/// Everything derived from a geodesic automaton: components, the growth
/// rate `λ`, the Perron projections and the induced Markov chain.
#[derive(Clone, Debug)]
pub struct CombingAnalysis {
    /// The analysed automaton, refined so each state has a unique incoming
    /// label (unchanged for the built-in automata).
    pub automaton: GeodesicAutomaton,
    pub components: Vec<Component>,
    /// Component index of each state.
    pub component_of: Vec<usize>,
    pub spectral: SpectralData,
    pub markov: MarkovData,
    /// Incoming label of each state (`None` only for the initial state).
    pub incoming: Vec<Option<usize>>,
}

impl CombingAnalysis {
    pub fn lambda(&self) -> f64 {
        self.spectral.lambda
    }

    pub fn is_in_maximal(&self, state: usize) -> bool {
        self.components[self.component_of[state]].maximal
    }
}

/// Dense `f64` transition-count matrix of an automaton.
pub fn count_matrix(aut: &GeodesicAutomaton) -> Vec<Vec<f64>> {
    aut.transition_counts()
        .into_iter()
        .map(|row| row.into_iter().map(f64::from).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (vi, row) in v.iter().zip(m) {
        if *vi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += vi * a;
            }
        }
    }
    out
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        a.max(b)
    } else {
        a / gcd(a, b) * b
    }
}

/// Strongly connected components in a deterministic order (sorted by their
/// smallest state).
pub fn strongly_connected_components(aut: &GeodesicAutomaton) -> Vec<Vec<usize>> {
    let mut g: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..aut.n_states()).map(|_| g.add_node(())).collect();
    for p in 0..aut.n_states() {
        for (_, q) in aut.transitions(p) {
            g.add_edge(nodes[p], nodes[q], ());
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Spectral radius of a nonnegative irreducible matrix via power iteration
/// on `A + I` (primitive, so the iteration converges) with Collatz–Wielandt
/// bounds `min (Ax)_i/x_i ≤ ρ ≤ max (Ax)_i/x_i` as the stopping rule.
pub fn perron_root(a: &[Vec<f64>], opts: &AnalysisOptions) -> Result<f64> {
    let n = a.len();
    let mut x = vec![1.0; n];
    let mut gap = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let ax = mat_vec(a, &x);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let ratio = (ax[i] + x[i]) / x[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        gap = hi - lo;
        if gap <= opts.tol * hi {
            return Ok(0.5 * (lo + hi) - 1.0);
        }
        let norm = sup_norm(&ax).max(sup_norm(&x));
        x = ax.iter().zip(&x).map(|(a, b)| (a + b) / norm).collect();
    }
    Err(FppError::Numeric {
        msg: "Perron root iteration did not converge".into(),
        residual: gap,
    })
}

fn component_period(aut: &GeodesicAutomaton, comp: &[usize], member: &[bool]) -> u64 {
    let n = aut.n_states();
    let mut level = vec![u64::MAX; n];
    level[comp[0]] = 0;
    let mut queue = std::collections::VecDeque::from([comp[0]]);
    let mut g = 0;
    while let Some(p) = queue.pop_front() {
        for (_, q) in aut.transitions(p) {
            if !member[q] {
                continue;
            }
            if level[q] == u64::MAX {
                level[q] = level[p] + 1;
                queue.push_back(q);
            } else {
                g = gcd(g, (level[p] + 1).abs_diff(level[q]));
            }
        }
    }
    g
}

/// Plain Cesàro average `(1/n) Σ_{i<n} λ^{-i} M^i v` (right) or with `Mᵀ`
/// (left). Converges at rate `O(1/n)`; kept as a reference for the
/// windowed variant used by [`analyze`].
pub fn cesaro_projection(m: &[Vec<f64>], lambda: f64, v: &[f64], n: usize, left: bool) -> Vec<f64> {
    let mut acc = vec![0.0; v.len()];
    let mut cur = v.to_vec();
    for _ in 0..n {
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += c;
        }
        let next = if left { vec_mat(&cur, m) } else { mat_vec(m, &cur) };
        cur = next.into_iter().map(|x| x / lambda).collect();
    }
    acc.into_iter().map(|a| a / n as f64).collect()
}

/// Cesàro limit computed from a tail window: the averages of
/// `λ^{-i} M^i v` over consecutive windows whose length is a multiple of
/// every maximal period. Periodic parts cancel exactly over each window and
/// the rest decays geometrically, so successive window averages converge to
/// the same limit as the plain Cesàro mean, only much faster.
fn windowed_projection(
    m: &[Vec<f64>],
    lambda: f64,
    v: &[f64],
    window: usize,
    left: bool,
    opts: &AnalysisOptions,
) -> Result<Vec<f64>> {
    let mut cur = v.to_vec();
    let mut prev: Option<Vec<f64>> = None;
    let mut diff = f64::INFINITY;
    let mut steps = 0usize;
    while steps < opts.max_iterations {
        let mut acc = vec![0.0; v.len()];
        for _ in 0..window {
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c;
            }
            let next = if left { vec_mat(&cur, m) } else { mat_vec(m, &cur) };
            cur = next.into_iter().map(|x| x / lambda).collect();
        }
        steps += window;
        let avg: Vec<f64> = acc.into_iter().map(|a| a / window as f64).collect();
        if let Some(p) = &prev {
            let scale = sup_norm(&avg).max(f64::MIN_POSITIVE);
            diff = p.iter().zip(&avg).fold(0.0f64, |d, (a, b)| d.max((a - b).abs())) / scale;
            if diff <= opts.tol {
                return Ok(avg);
            }
        }
        prev = Some(avg);
    }
    Err(FppError::Numeric {
        msg: "Cesàro projection did not converge".into(),
        residual: diff,
    })
}

fn reach(adj: &[Vec<usize>], sources: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack: Vec<usize> = sources.into_iter().collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(p) = stack.pop() {
        for &q in &adj[p] {
            if !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    seen
}

/// Full analysis of a geodesic automaton.
pub fn analyze(aut: &GeodesicAutomaton, opts: &AnalysisOptions) -> Result<CombingAnalysis> {
    let aut = aut.refine_by_incoming_label();
    let n = aut.n_states();
    let m = count_matrix(&aut);

    let comps = strongly_connected_components(&aut);
    let mut component_of = vec![0; n];
    for (ci, c) in comps.iter().enumerate() {
        for &s in c {
            component_of[s] = ci;
        }
    }
    let mut components = Vec::with_capacity(comps.len());
    for c in &comps {
        let trivial = c.len() == 1 && m[c[0]][c[0]] == 0.0;
        let (lambda, period) = if trivial {
            (0.0, 0)
        } else {
            let sub: Vec<Vec<f64>> = c.iter().map(|&p| c.iter().map(|&q| m[p][q]).collect()).collect();
            let mut member = vec![false; n];
            for &s in c {
                member[s] = true;
            }
            (perron_root(&sub, opts)?, component_period(&aut, c, &member))
        };
        components.push(Component {
            states: c.clone(),
            trivial,
            lambda,
            period,
            maximal: false,
        });
    }
    let lambda = components.iter().fold(0.0f64, |a, c| a.max(c.lambda));
    if lambda < 1.0 - opts.maximal_rel_tol {
        return Err(FppError::domain(format!(
            "automaton accepts a finite language (λ = {lambda})"
        )));
    }
    let mut period = 0;
    for c in &mut components {
        c.maximal = !c.trivial && (c.lambda - lambda).abs() <= opts.maximal_rel_tol * lambda;
        if c.maximal {
            period = lcm(period, c.period);
        }
    }

    // structural support of the projections
    let adj: Vec<Vec<usize>> = (0..n).map(|p| aut.transitions(p).map(|(_, q)| q).collect()).collect();
    let mut radj = vec![Vec::new(); n];
    for (p, qs) in adj.iter().enumerate() {
        for &q in qs {
            radj[q].push(p);
        }
    }
    let maximal_states: Vec<usize> = (0..n).filter(|&s| components[component_of[s]].maximal).collect();
    let reaches_maximal = reach(&radj, maximal_states.iter().copied());
    let from_init = reach(&adj, [aut.initial()]);
    let live_maximal = maximal_states.iter().copied().filter(|&s| from_init[s]);
    let after_live_maximal = reach(&adj, live_maximal);

    let window = (period.max(1) as usize) * 8;
    let mut r = windowed_projection(&m, lambda, &vec![1.0; n], window, false, opts)?;
    let mut e_init = vec![0.0; n];
    e_init[aut.initial()] = 1.0;
    let mut l = windowed_projection(&m, lambda, &e_init, window, true, opts)?;
    for s in 0..n {
        if !reaches_maximal[s] {
            r[s] = 0.0;
        }
        if !after_live_maximal[s] {
            l[s] = 0.0;
        }
    }
    let residual = |v: &[f64], mv: Vec<f64>| {
        let scale = sup_norm(v).max(f64::MIN_POSITIVE);
        v.iter().zip(mv).fold(0.0f64, |d, (a, b)| d.max((lambda * a - b).abs())) / scale
    };
    let r_residual = residual(&r, mat_vec(&m, &r));
    let l_residual = residual(&l, vec_mat(&l, &m));
    let check = 1e3 * opts.tol.max(1e-15);
    if r_residual > check || l_residual > check {
        return Err(FppError::Numeric {
            msg: "eigenprojection residual too large".into(),
            residual: r_residual.max(l_residual),
        });
    }

    let mut label_prob = vec![vec![0.0; aut.n_labels()]; n];
    let mut nmat = vec![vec![0.0; n]; n];
    let mut max_row_sum_error = 0.0f64;
    for p in 0..n {
        if r[p] > 0.0 {
            for (lab, q) in aut.transitions(p) {
                let pr = r[q] / (lambda * r[p]);
                label_prob[p][lab] = pr;
                nmat[p][q] += pr;
            }
        } else {
            nmat[p][p] = 1.0;
        }
        let row: f64 = nmat[p].iter().sum();
        max_row_sum_error = max_row_sum_error.max((row - 1.0).abs());
    }
    if max_row_sum_error > 1e-9 {
        return Err(FppError::Numeric {
            msg: "transition matrix rows do not sum to one".into(),
            residual: max_row_sum_error,
        });
    }
    let total: f64 = r.iter().zip(&l).map(|(a, b)| a * b).sum();
    if total <= 0.0 {
        return Err(FppError::Numeric {
            msg: "left and right projections are orthogonal".into(),
            residual: 0.0,
        });
    }
    let mu = r.iter().zip(&l).map(|(a, b)| a * b / total).collect();

    let incoming = {
        let mut inc = aut.incoming_labels();
        inc[aut.initial()] = None;
        inc
    };
    Ok(CombingAnalysis {
        automaton: aut,
        components,
        component_of,
        spectral: SpectralData {
            lambda,
            period: period.max(1),
            r,
            l,
            r_residual,
            l_residual,
        },
        markov: MarkovData {
            n: nmat,
            mu,
            label_prob,
            max_row_sum_error,
        },
        incoming,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combing::builtin_automaton;
    use crate::group::GroupModel;

    fn analysis(model: &GroupModel) -> CombingAnalysis {
        analyze(&builtin_automaton(model).unwrap(), &AnalysisOptions::default()).unwrap()
    }

    #[test]
    fn free_group_growth_rate() {
        for k in 1..=4usize {
            let a = analysis(&GroupModel::free(k));
            assert!((a.lambda() - (2 * k - 1) as f64).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn f2_markov_chain() {
        let a = analysis(&GroupModel::free(2));
        assert_eq!(a.spectral.period, 1);
        let maximal: Vec<_> = a.components.iter().filter(|c| c.maximal).collect();
        assert_eq!(maximal.len(), 1);
        assert_eq!(maximal[0].states.len(), 4);
        let init = a.automaton.initial();
        for p in 0..a.automaton.n_states() {
            if p == init {
                continue;
            }
            for (_, q) in a.automaton.transitions(p) {
                assert!((a.markov.n[p][q] - 1.0 / 3.0).abs() < 1e-12);
            }
            assert!((a.markov.mu[p] - 0.25).abs() < 1e-12);
        }
        assert!(a.markov.mu[init].abs() < 1e-15);
        for (_, q) in a.automaton.transitions(init) {
            assert!((a.markov.n[init][q] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_growth_rate_is_one() {
        let a = analysis(&GroupModel::cyclic_multi(2));
        assert!((a.lambda() - 1.0).abs() < 1e-12);
        // dead-end remainder states have N_pp = 1
        for p in 0..a.automaton.n_states() {
            if a.spectral.r[p] == 0.0 {
                assert_eq!(a.markov.n[p][p], 1.0);
            }
        }
        assert!(a.spectral.r.contains(&0.0));
    }

    #[test]
    fn mixed_f2_growth_rate() {
        // Counting words by last syllable type (a-letter x, full b-power y,
        // remainder b z) gives x' = x + 4y, y' = 2x + y, so λ = 1 + 2√2.
        let m = GroupModel::mixed_f2();
        let a = analysis(&m);
        assert!((a.lambda() - (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-9, "{}", a.lambda());
        assert!(a.spectral.r_residual < 1e-10);
        let s7 = m.sphere(7).unwrap().len() as f64;
        let s8 = m.sphere(8).unwrap().len() as f64;
        assert!((a.lambda() - s8 / s7).abs() < 2e-2);
    }

    #[test]
    fn windowed_agrees_with_plain_cesaro() {
        let aut = builtin_automaton(&GroupModel::mixed_f2()).unwrap();
        let a = analyze(&aut, &AnalysisOptions::default()).unwrap();
        let m = count_matrix(&a.automaton);
        let ones = vec![1.0; m.len()];
        let plain = cesaro_projection(&m, a.lambda(), &ones, 20_000, false);
        for (x, y) in plain.iter().zip(&a.spectral.r) {
            assert!((x - y).abs() < 1e-3 * y.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn periodic_automaton() {
        // a two-cycle p -> q -> p: period 2, λ = 1
        let z = GroupModel::free(1);
        let aut =
            crate::combing::load_automaton("states 3 initial 1\n1 a 2\n2 a 3\n3 a 2\n", z.generators()).unwrap();
        let a = analyze(&aut, &AnalysisOptions::default()).unwrap();
        assert_eq!(a.spectral.period, 2);
        assert!((a.lambda() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_language_is_rejected() {
        let z = GroupModel::free(1);
        let aut = crate::combing::load_automaton("states 2 initial 1\n1 a 2\n", z.generators()).unwrap();
        assert!(matches!(analyze(&aut, &AnalysisOptions::default()), Err(FppError::Domain(_))));
    }
}
