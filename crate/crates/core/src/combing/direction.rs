use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::automaton::builtin_automaton;
use super::markov::sample_ray;
use super::spectral::{analyze, AnalysisOptions};
use crate::error::{FppError, Result};
use crate::group::{Element, GroupModel};

/// A direction `ω ∈ ∂G`, described by something that determines a word
/// geodesic ray from the identity.
///
/// Text forms: `pole:b` (the attracting pole `w^∞`), `periodic:a|ab`
/// (`u·w^∞`), `explicit:a^3b^5` (a finite prefix) and `sampled:42` (a
/// ν-random ray drawn with the given seed).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DirectionSpec {
    Pole(String),
    EventuallyPeriodic { prefix: String, period: String },
    Explicit(String),
    Sampled(u64),
}

/// The first `n` steps of a word geodesic ray.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ray {
    pub labels: Vec<usize>,
    /// `x_0 = 1, x_1, …, x_n`.
    pub vertices: Vec<Element>,
}

impl Ray {
    fn from_labels(model: &GroupModel, labels: Vec<usize>) -> Ray {
        let mut vertices = Vec::with_capacity(labels.len() + 1);
        let mut v = Element::identity();
        vertices.push(v.clone());
        for &s in &labels {
            v = model.step(&v, s);
            vertices.push(v.clone());
        }
        Ray { labels, vertices }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The vertex `x_n`.
    pub fn endpoint(&self) -> &Element {
        self.vertices.last().expect("a ray has at least one vertex")
    }

    /// The ray translated to start at `o`.
    pub fn translated(&self, o: &Element) -> Vec<Element> {
        self.vertices.iter().map(|v| o.mul(v)).collect()
    }
}

impl DirectionSpec {
    /// Realizes the first `n` steps as the canonical word geodesic.
    pub fn realize(&self, model: &GroupModel, n: usize) -> Result<Ray> {
        let labels = match self {
            DirectionSpec::Pole(w) => periodic_prefix(model, &Element::identity(), &model.parse_element(w)?, n)?,
            DirectionSpec::EventuallyPeriodic { prefix, period } => {
                periodic_prefix(model, &model.parse_element(prefix)?, &model.parse_element(period)?, n)?
            }
            DirectionSpec::Explicit(w) => {
                let g = model.parse_element(w)?;
                let word = model.geodesic_word(&g)?;
                if word.len() < n {
                    return Err(FppError::domain(format!(
                        "explicit direction {w} has length {} < {n}",
                        word.len()
                    )));
                }
                word[..n].to_vec()
            }
            DirectionSpec::Sampled(seed) => {
                let a = analyze(&builtin_automaton(model)?, &AnalysisOptions::default())?;
                let ray = sample_ray(&a, *seed, n)?;
                // the analysed automaton may be a refinement; labels are shared
                ray.labels
            }
        };
        Ok(Ray::from_labels(model, labels))
    }
}

/// First `n` labels of the canonical geodesic to `u·w^m` for `m` large
/// enough that the prefix has stabilised.
fn periodic_prefix(model: &GroupModel, u: &Element, w: &Element, n: usize) -> Result<Vec<usize>> {
    if w.is_identity() {
        return Err(FppError::domain("periodic part of a direction must be nontrivial"));
    }
    let wl = model.word_length(w)? as usize;
    let target_len = n + 2 * wl + model.word_length(u)? as usize + 2;
    let mut g = u.clone();
    let mut m = 0usize;
    while (model.word_length(&g)? as usize) < target_len {
        g = g.mul(w);
        m += 1;
        if m > 4 * target_len + 8 {
            return Err(FppError::domain(format!("{w} has finite order or does not translate")));
        }
    }
    let word = model.geodesic_word(&g)?;
    Ok(word[..n].to_vec())
}

impl FromStr for DirectionSpec {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| FppError::Parse(format!("direction `{s}` must look like kind:value")))?;
        let rest = rest.trim();
        match kind.trim() {
            "pole" => Ok(DirectionSpec::Pole(rest.into())),
            "periodic" => {
                let (prefix, period) = rest
                    .split_once('|')
                    .ok_or_else(|| FppError::Parse(format!("periodic direction `{s}` needs prefix|period")))?;
                Ok(DirectionSpec::EventuallyPeriodic {
                    prefix: prefix.trim().into(),
                    period: period.trim().into(),
                })
            }
            "explicit" => Ok(DirectionSpec::Explicit(rest.into())),
            "sampled" => rest
                .parse()
                .map(DirectionSpec::Sampled)
                .map_err(|_| FppError::Parse(format!("bad seed in `{s}`"))),
            other => Err(FppError::Parse(format!("unknown direction kind `{other}`"))),
        }
    }
}

impl TryFrom<String> for DirectionSpec {
    type Error = FppError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DirectionSpec> for String {
    fn from(d: DirectionSpec) -> String {
        d.to_string()
    }
}

impl fmt::Display for DirectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionSpec::Pole(w) => write!(f, "pole:{w}"),
            DirectionSpec::EventuallyPeriodic { prefix, period } => write!(f, "periodic:{prefix}|{period}"),
            DirectionSpec::Explicit(w) => write!(f, "explicit:{w}"),
            DirectionSpec::Sampled(seed) => write!(f, "sampled:{seed}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_pole_in_mixed_f2_uses_squares() {
        let m = GroupModel::mixed_f2();
        let ray = DirectionSpec::Pole("b".into()).realize(&m, 10).unwrap();
        assert!(ray.labels.iter().all(|&l| m.generators().label(l) == "b^2"));
        assert_eq!(*ray.endpoint(), m.parse_element("b^20").unwrap());
    }

    #[test]
    fn rays_are_geodesic_and_accepted() {
        let m = GroupModel::mixed_f2();
        let aut = builtin_automaton(&m).unwrap();
        for spec in ["pole:a", "pole:ab", "periodic:b^-1|ab^2", "explicit:a^3b^5a", "sampled:3"] {
            let d: DirectionSpec = spec.parse().unwrap();
            let n = if spec.starts_with("explicit") { 6 } else { 25 };
            let ray = d.realize(&m, n).unwrap();
            assert_eq!(ray.vertices.len(), n + 1);
            for (i, v) in ray.vertices.iter().enumerate() {
                assert_eq!(m.word_length(v).unwrap() as usize, i, "{spec}");
            }
            assert!(aut.accepts(&ray.labels), "{spec}");
            assert_eq!(d.to_string(), spec);
        }
    }

    #[test]
    fn explicit_too_short() {
        let f2 = GroupModel::free(2);
        assert!(DirectionSpec::Explicit("ab".into()).realize(&f2, 3).is_err());
        assert!(DirectionSpec::Pole("1".into()).realize(&f2, 3).is_err());
        assert!("bogus".parse::<DirectionSpec>().is_err());
    }
}
