//! First-passage times: domains, exact shortest paths and ω-geodesics.
//!
//! Passage times are computed inside finite domains. Whole balls grow
//! exponentially in non-elementary groups, so the workhorse is the cylinder
//! `N_B([x, y])` around a word geodesic.

mod domain;
mod passage;

pub use domain::{CompiledDomain, Domain, Predicate};
pub use passage::{
    geodesic_stats, omega_geodesic_ray, passage_time, path_weight, restricted_passage_time, GeodesicRecord,
    PassageResult, SearchTree, DEFAULT_RELAXATION_BUDGET, NEAR_TIE_REL,
};
