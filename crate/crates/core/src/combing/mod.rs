//! Geodesic automata (combings), their spectral analysis, the Markov chain
//! they induce, the Patterson–Sullivan type boundary measure and boundary
//! directions.

mod automaton;
mod counting;
mod direction;
mod markov;
mod spectral;

pub use automaton::{
    builtin_automaton, load_automaton, load_automaton_file, verify_geodesic_language, GeodesicAutomaton,
    VerificationReport, Violation,
};
pub use counting::{growth_check, sphere_count, GrowthReport};
pub use direction::{DirectionSpec, Ray};
pub use markov::{
    block_frequencies, cone_measure, k_tuple_chain, predicted_frequency, sample_ray, RecurrentClass, SampledRay,
    TupleChain, MAX_TUPLES,
};
pub use spectral::{
    analyze, cesaro_projection, count_matrix, perron_root, strongly_connected_components, AnalysisOptions,
    CombingAnalysis, Component, MarkovData, SpectralData,
};
