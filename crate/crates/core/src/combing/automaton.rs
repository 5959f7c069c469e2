use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{FppError, Result};
use crate::group::{Element, GeneratorSet, GroupModel};

/// A deterministic finite automaton over the generator labels whose accepted
/// language (every state accepts, so the language is prefix-closed) is meant
/// to be a geodesic combing of the Cayley graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeodesicAutomaton {
    labels: Vec<String>,
    initial: usize,
    /// `delta[state][label]`
    delta: Vec<Vec<Option<usize>>>,
}

impl GeodesicAutomaton {
    /// Builds an automaton from explicit 0-based transitions, validating
    /// determinism and reachability.
    pub fn new(
        gens: &GeneratorSet,
        n_states: usize,
        initial: usize,
        transitions: &[(usize, usize, usize)],
    ) -> Result<Self> {
        if initial >= n_states {
            return Err(FppError::Format {
                line: 0,
                msg: format!("initial state {} out of range 1..={n_states}", initial + 1),
            });
        }
        let mut delta = vec![vec![None; gens.len()]; n_states];
        for &(from, label, to) in transitions {
            if from >= n_states || to >= n_states {
                return Err(FppError::Format {
                    line: 0,
                    msg: format!("state out of range in transition {} -> {}", from + 1, to + 1),
                });
            }
            if label >= gens.len() {
                return Err(FppError::UnknownLabel(format!("#{label}")));
            }
            if delta[from][label].is_some() {
                return Err(FppError::Format {
                    line: 0,
                    msg: format!(
                        "nondeterministic: state {} has two `{}` transitions",
                        from + 1,
                        gens.label(label)
                    ),
                });
            }
            delta[from][label] = Some(to);
        }
        let aut = GeodesicAutomaton {
            labels: gens.labels().to_vec(),
            initial,
            delta,
        };
        let reach = aut.reachable_from(initial);
        if let Some(s) = reach.iter().position(|r| !r) {
            return Err(FppError::Format {
                line: 0,
                msg: format!("state {} is not reachable from the initial state", s + 1),
            });
        }
        Ok(aut)
    }

    pub fn n_states(&self) -> usize {
        self.delta.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn next(&self, state: usize, label: usize) -> Option<usize> {
        self.delta[state][label]
    }

    /// Outgoing `(label, target)` pairs in label order.
    pub fn transitions(&self, state: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.delta[state]
            .iter()
            .enumerate()
            .filter_map(|(l, t)| t.map(|t| (l, t)))
    }

    /// Runs a word from the initial state; `None` if rejected.
    pub fn run(&self, word: &[usize]) -> Option<usize> {
        word.iter()
            .try_fold(self.initial, |q, &s| self.delta[q][s])
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        self.run(word).is_some()
    }

    /// Checks that the automaton's labels are exactly the model's generators.
    pub fn check_labels(&self, gens: &GeneratorSet) -> Result<()> {
        if self.labels != gens.labels() {
            return Err(FppError::Format {
                line: 0,
                msg: format!(
                    "automaton labels {:?} do not match generators {:?}",
                    self.labels,
                    gens.labels()
                ),
            });
        }
        Ok(())
    }

    /// Transition multiplicity matrix: `m[p][q]` counts labels from `p` to `q`.
    pub fn transition_counts(&self) -> Vec<Vec<u32>> {
        let n = self.n_states();
        let mut m = vec![vec![0u32; n]; n];
        for (p, row) in m.iter_mut().enumerate() {
            for (_, q) in self.transitions(p) {
                row[q] += 1;
            }
        }
        m
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n_states()];
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(p) = q.pop_front() {
            for (_, t) in self.transitions(p) {
                if !seen[t] {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
        seen
    }

    /// Label on every edge entering each state, if unique (`None` for a state
    /// with no incoming edge or with several distinct incoming labels).
    pub fn incoming_labels(&self) -> Vec<Option<usize>> {
        let mut inc: Vec<Option<Option<usize>>> = vec![None; self.n_states()];
        for p in 0..self.n_states() {
            for (l, q) in self.transitions(p) {
                inc[q] = match inc[q] {
                    None => Some(Some(l)),
                    Some(Some(prev)) if prev == l => Some(Some(l)),
                    _ => Some(None),
                };
            }
        }
        inc.into_iter().map(|x| x.flatten()).collect()
    }

    /// True when every non-initial state has a unique incoming label and the
    /// initial state has no incoming edges, so a state sequence determines
    /// its word.
    pub fn is_label_determined(&self) -> bool {
        let inc = self.incoming_labels();
        let has_incoming = {
            let mut h = vec![false; self.n_states()];
            for p in 0..self.n_states() {
                for (_, q) in self.transitions(p) {
                    h[q] = true;
                }
            }
            h
        };
        (0..self.n_states()).all(|q| {
            if q == self.initial {
                !has_incoming[q]
            } else {
                inc[q].is_some()
            }
        })
    }

    /// Equivalent automaton (same language) whose states are pairs
    /// `(state, last label)`, so that every state has a unique incoming label.
    /// Returns a clone when the automaton already has that property.
    pub fn refine_by_incoming_label(&self) -> GeodesicAutomaton {
        if self.is_label_determined() {
            return self.clone();
        }
        let mut index: FxHashMap<(usize, Option<usize>), usize> = FxHashMap::default();
        let mut order = vec![(self.initial, None)];
        index.insert((self.initial, None), 0);
        let mut delta: Vec<Vec<Option<usize>>> = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let (q, _) = order[i];
            let mut row = vec![None; self.n_labels()];
            for (l, t) in self.transitions(q) {
                let key = (t, Some(l));
                let id = *index.entry(key).or_insert_with(|| {
                    order.push(key);
                    order.len() - 1
                });
                row[l] = Some(id);
            }
            delta.push(row);
            i += 1;
        }
        GeodesicAutomaton {
            labels: self.labels.clone(),
            initial: 0,
            delta,
        }
    }

    /// Serializes to the line-oriented text format (1-based states).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "states {} initial {}", self.n_states(), self.initial + 1);
        for p in 0..self.n_states() {
            for (l, q) in self.transitions(p) {
                let _ = writeln!(s, "{} {} {}", p + 1, self.labels[l], q + 1);
            }
        }
        s
    }

    /// The unique accepted word evaluating to `g`, as `(label, state)` steps,
    /// found by depth-first search that only follows geodesic prefixes.
    pub fn accepted_word(&self, model: &GroupModel, g: &Element) -> Result<Option<Vec<(usize, usize)>>> {
        let len = model.word_length(g)?;
        let mut steps: Vec<(usize, usize)> = Vec::with_capacity(len as usize);
        fn dfs(
            aut: &GeodesicAutomaton,
            model: &GroupModel,
            g: &Element,
            state: usize,
            v: &Element,
            remaining: u64,
            steps: &mut Vec<(usize, usize)>,
        ) -> Result<bool> {
            if remaining == 0 {
                return Ok(v == g);
            }
            for (l, q) in aut.transitions(state) {
                let w = model.step(v, l);
                if model.distance(&w, g)? + 1 == remaining {
                    steps.push((l, q));
                    if dfs(aut, model, g, q, &w, remaining - 1, steps)? {
                        return Ok(true);
                    }
                    steps.pop();
                }
            }
            Ok(false)
        }
        let found = dfs(self, model, g, self.initial, &Element::identity(), len, &mut steps)?;
        Ok(found.then_some(steps))
    }
}

/// Parses the line-oriented automaton format:
///
/// ```text
/// # comment
/// states 5 initial 1
/// 1 a 2
/// 2 b 4
/// ```
pub fn load_automaton(text: &str, gens: &GeneratorSet) -> Result<GeodesicAutomaton> {
    let mut header: Option<(usize, usize)> = None;
    let mut transitions = Vec::new();
    let mut seen: FxHashMap<(usize, usize), usize> = FxHashMap::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let fmt_err = |msg: String| FppError::Format { line: line_no, msg };
        match header {
            None => {
                if tok.len() != 4 || tok[0] != "states" || tok[2] != "initial" {
                    return Err(fmt_err("expected header `states N initial I`".into()));
                }
                let n: usize = tok[1]
                    .parse()
                    .map_err(|_| fmt_err(format!("bad state count `{}`", tok[1])))?;
                let i: usize = tok[3]
                    .parse()
                    .map_err(|_| fmt_err(format!("bad initial state `{}`", tok[3])))?;
                if n == 0 || i == 0 || i > n {
                    return Err(fmt_err(format!("initial state {i} out of range 1..={n}")));
                }
                header = Some((n, i - 1));
            }
            Some((n, _)) => {
                if tok.len() != 3 {
                    return Err(fmt_err("expected `from label to`".into()));
                }
                let parse_state = |t: &str| -> Result<usize> {
                    let v: usize = t
                        .parse()
                        .map_err(|_| fmt_err(format!("bad state `{t}`")))?;
                    if v == 0 || v > n {
                        return Err(fmt_err(format!("state {v} out of range 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let from = parse_state(tok[0])?;
                let to = parse_state(tok[2])?;
                let label = gens.index_of(tok[1]).map_err(|_| {
                    fmt_err(format!("unknown label `{}` (generators: {:?})", tok[1], gens.labels()))
                })?;
                if let Some(prev) = seen.insert((from, label), line_no) {
                    return Err(fmt_err(format!(
                        "nondeterministic: state {} already has a `{}` transition (line {prev})",
                        from + 1,
                        tok[1]
                    )));
                }
                transitions.push((from, label, to));
            }
        }
    }
    let (n, initial) = header.ok_or(FppError::Format {
        line: 0,
        msg: "missing `states N initial I` header".into(),
    })?;
    GeodesicAutomaton::new(gens, n, initial, &transitions)
}

pub fn load_automaton_file(path: impl AsRef<Path>, gens: &GeneratorSet) -> Result<GeodesicAutomaton> {
    let p = path.as_ref();
    let text = std::fs::read_to_string(p).map_err(|e| FppError::io(p.display().to_string(), e))?;
    load_automaton(&text, gens)
}

/// The built-in combing of a power-generator model: every syllable `x^e`
/// is spelled `(x^{±m})^q x^{±r}` with `|e| = qm + r`, `0 ≤ r < m`. States
/// are the initial state plus, per letter and sign, a "full power" state and
/// (when `m > 1`) a "remainder" state after which the syllable must end.
pub fn builtin_automaton(model: &GroupModel) -> Result<GeodesicAutomaton> {
    if let Some(aut) = model.supplied_automaton() {
        return Ok(aut.clone());
    }
    let gens = model.generators();
    let powers = model.powers();
    // state ids
    let mut full = vec![[0usize; 2]; powers.len()];
    let mut partial = vec![[None::<usize>; 2]; powers.len()];
    let mut n = 1;
    for (x, &m) in powers.iter().enumerate() {
        for sign in 0..2 {
            full[x][sign] = n;
            n += 1;
            if m > 1 {
                partial[x][sign] = Some(n);
                n += 1;
            }
        }
    }
    let mut transitions = Vec::new();
    // `current`: letter of the syllable in progress and whether it may continue
    let mut add_from = |from: usize, current: Option<(usize, usize, bool)>| {
        for (l, g) in gens.generators().iter().enumerate() {
            let x = g.letter as usize;
            let sign = usize::from(g.power < 0);
            let m = powers[x] as i32;
            let is_full = g.power.abs() == m;
            if let Some((cx, csign, can_continue)) = current {
                if cx == x && !(can_continue && csign == sign) {
                    continue;
                }
            }
            let to = if is_full {
                full[x][sign]
            } else {
                partial[x][sign].expect("partial state exists when m > 1")
            };
            transitions.push((from, l, to));
        }
    };
    add_from(0, None);
    for (x, &m) in powers.iter().enumerate() {
        for sign in 0..2 {
            add_from(full[x][sign], Some((x, sign, true)));
            if m > 1 {
                add_from(partial[x][sign].unwrap(), Some((x, sign, false)));
            }
        }
    }
    GeodesicAutomaton::new(gens, n, 0, &transitions)
}

/// One failure found by [`verify_geodesic_language`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// An accepted word whose value is closer to the identity than its length.
    NonGeodesic { word: Vec<String>, element: String, distance: u64 },
    /// Two accepted words with the same value.
    NonInjective { element: String, words: Vec<Vec<String>> },
    /// An element of the ball with no accepted representative.
    NotSurjective { element: String, distance: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub radius: u64,
    pub words_checked: u64,
    pub ball_size: u64,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively compares the accepted words of length `≤ radius` with the
/// BFS ball: every accepted word must be geodesic, and evaluation must be a
/// bijection onto `ball(1, radius)`.
pub fn verify_geodesic_language(
    aut: &GeodesicAutomaton,
    model: &GroupModel,
    radius: u64,
) -> Result<VerificationReport> {
    let gens = model.generators();
    let spell = |w: &[usize]| w.iter().map(|&l| gens.label(l).to_string()).collect::<Vec<_>>();
    let mut violations = Vec::new();
    let mut hit: FxHashMap<Element, Vec<usize>> = FxHashMap::default();
    let mut words_checked = 0u64;
    // explicit DFS stack of (state, element, word)
    let mut stack: Vec<(usize, Element, Vec<usize>)> = vec![(aut.initial(), Element::identity(), vec![])];
    while let Some((q, v, word)) = stack.pop() {
        words_checked += 1;
        if words_checked > model.vertex_cap() {
            return Err(FppError::resource("accepted words enumerated", model.vertex_cap()));
        }
        let d = model.word_length(&v)?;
        if d != word.len() as u64 {
            violations.push(Violation::NonGeodesic {
                word: spell(&word),
                element: model.format_element(&v),
                distance: d,
            });
        }
        if let Some(prev) = hit.get(&v) {
            violations.push(Violation::NonInjective {
                element: model.format_element(&v),
                words: vec![spell(prev), spell(&word)],
            });
        } else {
            hit.insert(v.clone(), word.clone());
        }
        if (word.len() as u64) < radius {
            let next: Vec<_> = aut.transitions(q).collect();
            for (l, t) in next.into_iter().rev() {
                let mut w = word.clone();
                w.push(l);
                stack.push((t, model.step(&v, l), w));
            }
        }
    }
    let ball = model.ball(&Element::identity(), radius)?;
    for (g, d) in &ball {
        if !hit.contains_key(g) {
            violations.push(Violation::NotSurjective {
                element: model.format_element(g),
                distance: *d,
            });
        }
    }
    Ok(VerificationReport {
        radius,
        words_checked,
        ball_size: ball.len() as u64,
        violations,
    })
}
