//! Groups, elements, generating sets and the implicit Cayley graph.
//!
//! Every model is a free product of infinite cyclic groups `⟨x⟩`, each with
//! generators `x^{±1}, …, x^{±m_x}`. This covers the standard free groups
//! (`m_x = 1`), `ℤ` with `{±1, …, ±m}` (rank one) and free groups with
//! power generators such as `{a^{±1}, b^{±1}, b^{±2}}`. Elements are
//! reduced words over the free basis; the S-word metric has a closed form.

mod element;
mod model;

pub use element::{Element, Syllable};
pub use model::{
    parse_word, EdgeId, Generator, GeneratorSet, GroupModel, ModelDescriptor, ModelKind,
    DEFAULT_VERTEX_CAP,
};
