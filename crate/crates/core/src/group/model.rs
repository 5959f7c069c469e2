use std::collections::VecDeque;
use std::fmt;
use std::hash::Hasher;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;

use super::element::Element;
use crate::combing::GeodesicAutomaton;
use crate::error::{FppError, Result};

/// Default cap on the number of vertices any single BFS enumeration may touch.
pub const DEFAULT_VERTEX_CAP: u64 = 5_000_000;

/// One generator `letter^power` of the symmetric generating set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub letter: u8,
    pub power: i32,
}

/// The symmetric generating set `S`, in canonical tie-break order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    gens: Vec<Generator>,
    labels: Vec<String>,
    inverse: Vec<usize>,
}

impl GeneratorSet {
    /// Power generators `x^{±1}, …, x^{±m_x}` for each letter `x`. Within a
    /// letter, higher powers come first and the positive sign precedes the
    /// negative one; the resulting order is the global tie-break order.
    fn from_powers(powers: &[u32], cyclic_labels: bool) -> Self {
        let mut gens = Vec::new();
        for (letter, &m) in powers.iter().enumerate() {
            for p in (1..=m as i32).rev() {
                gens.push(Generator {
                    letter: letter as u8,
                    power: p,
                });
                gens.push(Generator {
                    letter: letter as u8,
                    power: -p,
                });
            }
        }
        let labels = gens
            .iter()
            .map(|g| generator_label(*g, cyclic_labels))
            .collect();
        let inverse = gens
            .iter()
            .map(|g| {
                gens.iter()
                    .position(|h| h.letter == g.letter && h.power == -g.power)
                    .expect("generating set is symmetric")
            })
            .collect();
        GeneratorSet {
            gens,
            labels,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generator(&self, idx: usize) -> Generator {
        self.gens[idx]
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn inverse(&self, idx: usize) -> usize {
        self.inverse[idx]
    }

    /// Displacement of the generator in the underlying free basis.
    pub fn step_weight(&self, idx: usize) -> u32 {
        self.gens[idx].power.unsigned_abs()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| FppError::UnknownLabel(label.to_string()))
    }

    pub fn index_of_generator(&self, g: Generator) -> Option<usize> {
        self.gens.iter().position(|h| *h == g)
    }
}

fn generator_label(g: Generator, cyclic: bool) -> String {
    if cyclic {
        return format!("{:+}", g.power);
    }
    let c = (b'a' + g.letter) as char;
    if g.power == 1 {
        c.to_string()
    } else {
        format!("{c}^{}", g.power)
    }
}

/// Which family of Cayley graph a model is.
#[derive(Clone, Debug)]
pub enum ModelKind {
    /// Free group of the given rank with the standard basis.
    Free { rank: usize },
    /// ℤ with generators `±1, …, ±max_step`.
    CyclicMulti { max_step: u32 },
    /// Free group with power generators; `powers[x]` is the largest power of
    /// letter `x` in `S` (all smaller powers are included).
    FreeMixed { powers: Vec<u32> },
    /// A power-generator model whose combing is supplied as an automaton
    /// instead of the built-in one. The Cayley graph (and so the metric) is
    /// that of the base model.
    Automatic {
        powers: Vec<u32>,
        automaton: Arc<GeodesicAutomaton>,
    },
}

/// A Cayley graph `Γ(G, S)` for a group with a solvable word problem:
/// free products of infinite cyclic groups, each carrying the contiguous
/// power generators `x^{±1..±m_x}`.
#[derive(Clone, Debug)]
pub struct GroupModel {
    kind: ModelKind,
    powers: Vec<u32>,
    generators: GeneratorSet,
    vertex_cap: u64,
}

impl GroupModel {
    pub fn free(rank: usize) -> Self {
        Self::build(ModelKind::Free { rank }, vec![1; rank])
    }

    pub fn cyclic_multi(max_step: u32) -> Self {
        Self::build(ModelKind::CyclicMulti { max_step }, vec![max_step])
    }

    pub fn free_mixed(powers: Vec<u32>) -> Self {
        Self::build(
            ModelKind::FreeMixed {
                powers: powers.clone(),
            },
            powers,
        )
    }

    /// The free group `⟨a, b⟩` with `S = {a^{±1}, b^{±1}, b^{±2}}`.
    pub fn mixed_f2() -> Self {
        Self::free_mixed(vec![1, 2])
    }

    pub fn automatic(powers: Vec<u32>, automaton: GeodesicAutomaton) -> Result<Self> {
        let model = Self::build(
            ModelKind::Automatic {
                powers: powers.clone(),
                automaton: Arc::new(automaton),
            },
            powers,
        );
        if let ModelKind::Automatic { automaton, .. } = &model.kind {
            automaton.check_labels(&model.generators)?;
        }
        Ok(model)
    }

    fn build(kind: ModelKind, powers: Vec<u32>) -> Self {
        assert!(!powers.is_empty(), "a model needs at least one letter");
        assert!(powers.len() <= 26, "at most 26 letters are supported");
        assert!(powers.iter().all(|&m| m >= 1), "powers must be >= 1");
        let cyclic = matches!(kind, ModelKind::CyclicMulti { .. });
        let generators = GeneratorSet::from_powers(&powers, cyclic);
        GroupModel {
            kind,
            powers,
            generators,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }

    pub fn with_vertex_cap(mut self, cap: u64) -> Self {
        self.vertex_cap = cap;
        self
    }

    pub fn vertex_cap(&self) -> u64 {
        self.vertex_cap
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(self.kind, ModelKind::CyclicMulti { .. })
    }

    /// True when the Cayley graph is a tree (free basis, no power generators).
    pub fn is_tree(&self) -> bool {
        matches!(self.kind, ModelKind::Free { .. })
            || (matches!(self.kind, ModelKind::CyclicMulti { max_step: 1 }))
            || (matches!(self.kind, ModelKind::FreeMixed { .. })
                && self.powers.iter().all(|&m| m == 1))
    }

    /// The supplied automaton, for automatic models.
    pub fn supplied_automaton(&self) -> Option<&GeodesicAutomaton> {
        match &self.kind {
            ModelKind::Automatic { automaton, .. } => Some(automaton),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ModelKind::Free { rank } => format!("free(rank={rank})"),
            ModelKind::CyclicMulti { max_step } => format!("cyclic-multi(±1..±{max_step})"),
            ModelKind::FreeMixed { powers } => format!("free-mixed(powers={powers:?})"),
            ModelKind::Automatic { powers, .. } => format!("automatic(powers={powers:?})"),
        }
    }

    pub fn generator_element(&self, idx: usize) -> Element {
        let g = self.generators.generator(idx);
        Element::power(g.letter, g.power)
    }

    /// `x · s` for the generator with the given label.
    pub fn multiply(&self, x: &Element, label: &str) -> Result<Element> {
        let idx = self.generators.index_of(label)?;
        Ok(self.step(x, idx))
    }

    /// `x · s_idx`.
    pub fn step(&self, x: &Element, idx: usize) -> Element {
        let g = self.generators.generator(idx);
        x.times_power(g.letter, g.power)
    }

    /// Applies a sequence of generator indices starting at the identity.
    pub fn evaluate(&self, word: &[usize]) -> Element {
        let mut e = Element::identity();
        for &s in word {
            let g = self.generators.generator(s);
            e.push(g.letter, g.power);
        }
        e
    }

    /// `|g|_S` by the closed form: in a free product of cyclic groups the
    /// word length is the sum of the factor lengths of the syllables, and a
    /// syllable `x^e` with generators `x^{±1..±m}` has length `⌈|e|/m⌉`.
    pub fn closed_form_length(&self, g: &Element) -> u64 {
        g.syllables()
            .iter()
            .map(|s| {
                let m = self.powers[s.letter as usize] as u64;
                (s.exp.unsigned_abs() as u64).div_ceil(m)
            })
            .sum()
    }

    /// Word length `d(1, g)`.
    pub fn word_length(&self, g: &Element) -> Result<u64> {
        Ok(self.closed_form_length(g))
    }

    /// The S-word metric `d(x, y) = |x⁻¹y|`.
    pub fn distance(&self, x: &Element, y: &Element) -> Result<u64> {
        self.word_length(&x.inverse().mul(y))
    }

    /// Bidirectional breadth-first search from the identity towards `g`.
    pub fn bfs_length(&self, g: &Element) -> Result<u64> {
        if g.is_identity() {
            return Ok(0);
        }
        let mut fwd: FxHashMap<Element, u64> = FxHashMap::default();
        let mut bwd: FxHashMap<Element, u64> = FxHashMap::default();
        fwd.insert(Element::identity(), 0);
        bwd.insert(g.clone(), 0);
        let mut fwd_frontier = vec![Element::identity()];
        let mut bwd_frontier = vec![g.clone()];
        let (mut df, mut db) = (0u64, 0u64);
        loop {
            if fwd.len() as u64 + bwd.len() as u64 > self.vertex_cap {
                return Err(FppError::resource("BFS vertex budget", self.vertex_cap));
            }
            let expand_fwd = fwd_frontier.len() <= bwd_frontier.len();
            let (frontier, seen, other, depth) = if expand_fwd {
                (&mut fwd_frontier, &mut fwd, &bwd, &mut df)
            } else {
                (&mut bwd_frontier, &mut bwd, &fwd, &mut db)
            };
            *depth += 1;
            let mut next = Vec::new();
            let mut best: Option<u64> = None;
            for v in frontier.iter() {
                for s in 0..self.generators.len() {
                    let w = self.step(v, s);
                    if seen.contains_key(&w) {
                        continue;
                    }
                    if let Some(&o) = other.get(&w) {
                        let total = *depth + o;
                        best = Some(best.map_or(total, |b| b.min(total)));
                    }
                    seen.insert(w.clone(), *depth);
                    next.push(w);
                }
            }
            if let Some(b) = best {
                return Ok(b);
            }
            if next.is_empty() {
                return Err(FppError::Unreachable(format!("{g} from identity")));
            }
            *frontier = next;
        }
    }

    /// Neighbors of `x` in generator order.
    pub fn neighbors<'a>(&'a self, x: &'a Element) -> impl Iterator<Item = (usize, Element)> + 'a {
        (0..self.generators.len()).map(move |s| (s, self.step(x, s)))
    }

    /// Exact ball `B(center, radius)` by BFS, in BFS order with distances.
    pub fn ball(&self, center: &Element, radius: u64) -> Result<Vec<(Element, u64)>> {
        let mut seen: FxHashSet<Element> = FxHashSet::default();
        let mut out = vec![(center.clone(), 0u64)];
        seen.insert(center.clone());
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let (v, d) = out[i].clone();
            if d == radius {
                continue;
            }
            for (_, w) in self.neighbors(&v) {
                if seen.insert(w.clone()) {
                    if seen.len() as u64 > self.vertex_cap {
                        return Err(FppError::resource(
                            format!("ball of radius {radius}"),
                            self.vertex_cap,
                        ));
                    }
                    out.push((w, d + 1));
                    queue.push_back(out.len() - 1);
                }
            }
        }
        Ok(out)
    }

    /// The sphere `G_n = ball(1, n) ∖ ball(1, n−1)`.
    pub fn sphere(&self, n: u64) -> Result<Vec<Element>> {
        Ok(self
            .ball(&Element::identity(), n)?
            .into_iter()
            .filter(|(_, d)| *d == n)
            .map(|(e, _)| e)
            .collect())
    }

    /// The canonical word geodesic from `x` to `y` as a vertex list (a single
    /// vertex when `x == y`). At each step the first generator, in canonical
    /// order, that decreases the distance to `y` is taken.
    pub fn word_geodesic(&self, x: &Element, y: &Element) -> Result<Vec<Element>> {
        let labels = self.geodesic_word(&x.inverse().mul(y))?;
        let mut path = Vec::with_capacity(labels.len() + 1);
        let mut v = x.clone();
        path.push(v.clone());
        for s in labels {
            v = self.step(&v, s);
            path.push(v.clone());
        }
        Ok(path)
    }

    /// Generator indices of the canonical geodesic word for `g`.
    pub fn geodesic_word(&self, g: &Element) -> Result<Vec<usize>> {
        let mut remaining = self.word_length(g)?;
        let mut word = Vec::with_capacity(remaining as usize);
        let mut v = Element::identity();
        while remaining > 0 {
            let mut advanced = false;
            for s in 0..self.generators.len() {
                let w = self.step(&v, s);
                if self.distance(&w, g)? + 1 == remaining {
                    word.push(s);
                    v = w;
                    remaining -= 1;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                return Err(FppError::domain(format!("no geodesic step found towards {g}")));
            }
        }
        Ok(word)
    }

    /// Canonical id of the edge joining adjacent `x` and `y`.
    pub fn canonical_edge(&self, x: &Element, y: &Element) -> Result<EdgeId> {
        let g = x.inverse().mul(y);
        let s = (0..self.generators.len())
            .find(|&s| self.generator_element(s) == g)
            .ok_or_else(|| FppError::domain(format!("{x} and {y} are not adjacent")))?;
        Ok(self.edge_from_step(x, s))
    }

    /// Canonical id of the edge `{x, x·s}`.
    pub fn edge_from_step(&self, x: &Element, s: usize) -> EdgeId {
        let y = self.step(x, s);
        if *x < y {
            EdgeId {
                lo: x.clone(),
                label: s as u16,
            }
        } else {
            EdgeId {
                lo: y,
                label: self.generators.inverse(s) as u16,
            }
        }
    }

    /// Parses an element: an integer for cyclic models, otherwise a word
    /// such as `a^3b^-1`, `abA` (upper case is the inverse letter) or `1`.
    pub fn parse_element(&self, text: &str) -> Result<Element> {
        let t = text.trim();
        if self.is_cyclic() {
            let n: i32 = t
                .parse()
                .map_err(|_| FppError::Parse(format!("expected an integer, got `{t}`")))?;
            return Ok(Element::power(0, n));
        }
        parse_word(t, self.rank())
    }

    pub fn format_element(&self, g: &Element) -> String {
        if self.is_cyclic() {
            g.syllables().first().map_or(0, |s| s.exp).to_string()
        } else {
            g.to_string()
        }
    }
}

/// Parses a free-basis word over `rank` letters.
pub fn parse_word(text: &str, rank: usize) -> Result<Element> {
    let t = text.trim();
    let mut e = Element::identity();
    if t.is_empty() || t == "1" || t == "e" {
        return Ok(e);
    }
    let chars: Vec<char> = t.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '*' || c == '.' {
            i += 1;
            continue;
        }
        if !c.is_ascii_alphabetic() {
            return Err(FppError::Parse(format!("unexpected `{c}` in word `{t}`")));
        }
        let (letter, mut sign) = if c.is_ascii_lowercase() {
            (c as u8 - b'a', 1)
        } else {
            (c as u8 - b'A', -1)
        };
        if letter as usize >= rank {
            return Err(FppError::Parse(format!(
                "letter `{c}` out of range for rank {rank}"
            )));
        }
        i += 1;
        let mut exp = 1i32;
        if i < chars.len() && chars[i] == '^' {
            i += 1;
            let start = i;
            if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let num: String = chars[start..i].iter().collect();
            exp = num
                .parse()
                .map_err(|_| FppError::Parse(format!("bad exponent `{num}` in `{t}`")))?;
        }
        if exp < 0 {
            sign = -sign;
            exp = -exp;
        }
        e.push(letter, sign * exp);
    }
    Ok(e)
}

/// Canonical unordered edge: the smaller endpoint plus the label leading
/// away from it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeId {
    pub lo: Element,
    pub label: u16,
}

const EDGE_KEY_K0: u64 = 0x6670_705f_6564_6765;
const EDGE_KEY_K1: u64 = 0x6361_7965_6c65_7921;

impl EdgeId {
    pub fn hi(&self, model: &GroupModel) -> Element {
        model.step(&self.lo, self.label as usize)
    }

    /// Canonical byte encoding of the edge.
    pub fn bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(32);
        self.lo.encode_into(&mut buf);
        buf.extend_from_slice(&self.label.to_le_bytes());
        buf
    }

    /// Fixed 64-bit digest of the canonical bytes (SipHash-1-3, constant key).
    pub fn key(&self) -> u64 {
        let mut h = SipHasher13::new_with_keys(EDGE_KEY_K0, EDGE_KEY_K1);
        h.write(&self.bytes());
        h.finish()
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, #{})", self.lo, self.label)
    }
}

/// `[model]` section of a config file.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub kind: String,
    #[serde(default)]
    pub rank: Option<usize>,
    /// Largest step `m` of a `cyclic-multi` model (generators `±1..±m`).
    #[serde(default)]
    pub max_step: Option<u32>,
    #[serde(default)]
    pub powers: Option<Vec<u32>>,
    /// Optional explicit generator list, e.g. `["a", "a^-1", "b", "b^-1",
    /// "b^2", "b^-2"]`; must agree with the generating set implied by the
    /// other fields.
    #[serde(default)]
    pub generators: Option<Vec<String>>,
    /// Automaton file, for `kind = "automatic"`.
    #[serde(default)]
    pub automaton: Option<String>,
    #[serde(default)]
    pub vertex_cap: Option<u64>,
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<GroupModel> {
        let powers_from_gens = match &self.generators {
            Some(g) => Some(powers_from_labels(g)?),
            None => None,
        };
        let model = match self.kind.as_str() {
            "free" => {
                let rank = self
                    .rank
                    .or(powers_from_gens.as_ref().map(|p| p.len()))
                    .ok_or_else(|| FppError::Config("free model needs `rank`".into()))?;
                if rank == 0 {
                    return Err(FppError::Config("rank must be >= 1".into()));
                }
                GroupModel::free(rank)
            }
            "cyclic-multi" => {
                let m = self
                    .max_step
                    .ok_or_else(|| FppError::Config("cyclic-multi model needs `max_step`".into()))?;
                if m == 0 {
                    return Err(FppError::Config("max_step must be >= 1".into()));
                }
                GroupModel::cyclic_multi(m)
            }
            "free-mixed" | "automatic" => {
                let powers = self
                    .powers
                    .clone()
                    .or(powers_from_gens.clone())
                    .or(self.rank.map(|r| vec![1; r]))
                    .ok_or_else(|| FppError::Config("model needs `powers`".into()))?;
                if powers.is_empty() || powers.contains(&0) {
                    return Err(FppError::Config("powers must be non-empty and >= 1".into()));
                }
                if self.kind == "automatic" {
                    let path = self.automaton.as_ref().ok_or_else(|| {
                        FppError::Config("automatic model needs `automaton` file".into())
                    })?;
                    let probe = GroupModel::free_mixed(powers.clone());
                    let aut = crate::combing::load_automaton_file(path, probe.generators())?;
                    GroupModel::automatic(powers, aut)?
                } else {
                    GroupModel::free_mixed(powers)
                }
            }
            other => {
                return Err(FppError::Config(format!(
                    "unknown model kind `{other}` (expected free, cyclic-multi, free-mixed, automatic)"
                )))
            }
        };
        if let Some(labels) = &self.generators {
            let mut want: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            let mut have: Vec<&str> = model.generators().labels().iter().map(|s| s.as_str()).collect();
            want.sort_unstable();
            have.sort_unstable();
            if want != have {
                return Err(FppError::Config(format!(
                    "generator list {labels:?} does not match model generators {:?}",
                    model.generators().labels()
                )));
            }
        }
        Ok(match self.vertex_cap {
            Some(c) => model.with_vertex_cap(c),
            None => model,
        })
    }
}

/// Recovers per-letter maximal powers from an explicit generator list and
/// checks that it is symmetric and power-contiguous.
fn powers_from_labels(labels: &[String]) -> Result<Vec<u32>> {
    let mut seen: FxHashSet<(u8, i32)> = FxHashSet::default();
    for l in labels {
        let e = parse_word(l, 26)?;
        let syl = e.syllables();
        if syl.len() != 1 {
            return Err(FppError::Config(format!("generator `{l}` is not a letter power")));
        }
        seen.insert((syl[0].letter, syl[0].exp));
    }
    let rank = seen.iter().map(|&(l, _)| l as usize + 1).max().unwrap_or(0);
    let mut powers = vec![0u32; rank];
    for &(l, p) in &seen {
        if !seen.contains(&(l, -p)) {
            return Err(FppError::Config(format!(
                "generator list is not symmetric: missing inverse of letter {} power {p}",
                (b'a' + l) as char
            )));
        }
        powers[l as usize] = powers[l as usize].max(p.unsigned_abs());
    }
    for (l, &m) in powers.iter().enumerate() {
        for p in 1..=m as i32 {
            if !seen.contains(&(l as u8, p)) {
                return Err(FppError::Config(format!(
                    "power generators of `{}` must be contiguous from 1 to {m}",
                    (b'a' + l as u8) as char
                )));
            }
        }
        if m == 0 {
            return Err(FppError::Config("every letter below the rank needs a generator".into()));
        }
    }
    Ok(powers)
}
