use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

/// A maximal power `x^exp` of one free-basis letter inside a reduced word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub letter: u8,
    pub exp: i32,
}

/// A group element stored as its freely reduced word over the free basis,
/// in syllable form. Adjacent syllables always carry different letters and
/// no exponent is zero, so structural equality is group equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Element {
    syllables: SmallVec<[Syllable; 6]>,
}

impl Element {
    pub fn identity() -> Self {
        Element::default()
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    /// `letter^exp` as an element.
    pub fn power(letter: u8, exp: i32) -> Self {
        let mut e = Element::identity();
        e.push(letter, exp);
        e
    }

    /// Builds an element from an arbitrary (not necessarily reduced)
    /// sequence of syllables.
    pub fn from_syllables<I: IntoIterator<Item = (u8, i32)>>(it: I) -> Self {
        let mut e = Element::identity();
        for (l, x) in it {
            e.push(l, x);
        }
        e
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    /// Right-multiplies in place by `letter^exp`, keeping the word reduced.
    pub fn push(&mut self, letter: u8, exp: i32) {
        if exp == 0 {
            return;
        }
        match self.syllables.last_mut() {
            Some(last) if last.letter == letter => {
                last.exp += exp;
                if last.exp == 0 {
                    self.syllables.pop();
                }
            }
            _ => self.syllables.push(Syllable { letter, exp }),
        }
    }

    pub fn times_power(&self, letter: u8, exp: i32) -> Self {
        let mut out = self.clone();
        out.push(letter, exp);
        out
    }

    pub fn mul(&self, rhs: &Element) -> Element {
        let mut out = self.clone();
        for s in &rhs.syllables {
            out.push(s.letter, s.exp);
        }
        out
    }

    pub fn inverse(&self) -> Element {
        Element {
            syllables: self
                .syllables
                .iter()
                .rev()
                .map(|s| Syllable {
                    letter: s.letter,
                    exp: -s.exp,
                })
                .collect(),
        }
    }

    /// Length of the reduced word over the free basis.
    pub fn free_length(&self) -> u64 {
        self.syllables.iter().map(|s| s.exp.unsigned_abs() as u64).sum()
    }

    /// Canonical byte encoding (letter, exponent little-endian) used for
    /// keyed hashing of edges.
    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        buf.push(self.syllables.len() as u8);
        for s in &self.syllables {
            buf.push(s.letter);
            buf.extend_from_slice(&s.exp.to_le_bytes());
        }
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shorter free words first, then lexicographic on syllables. A total order
/// used only for edge canonicalization and deterministic reports.
impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.free_length()
            .cmp(&other.free_length())
            .then_with(|| self.syllables.as_slice().cmp(other.syllables.as_slice()))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "1");
        }
        for s in &self.syllables {
            let c = (b'a' + s.letter) as char;
            if s.exp == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}^{}", s.exp)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_reduction() {
        let ab = Element::from_syllables([(0, 1), (1, 1)]);
        let a = ab.times_power(1, -1);
        assert_eq!(a, Element::power(0, 1));
        assert_eq!(ab.mul(&ab.inverse()), Element::identity());
    }

    #[test]
    fn cancellation_cascades() {
        let w = Element::from_syllables([(0, 2), (1, 1), (1, -1), (0, -2)]);
        assert!(w.is_identity());
    }

    #[test]
    fn display() {
        let w = Element::from_syllables([(0, 3), (1, -1)]);
        assert_eq!(w.to_string(), "a^3b^-1");
        assert_eq!(Element::identity().to_string(), "1");
    }
}
