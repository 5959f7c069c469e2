//! Coarse hyperbolic geometry on the Cayley graph: Gromov products, thin
//! triangles, projections to rays, hyperplanes and half-spaces, and
//! divergence of paths that avoid a ray.

mod hyperplane;
mod triangles;

pub use hyperplane::{
    divergence_profile, half_space_side, hyperplane, nesting_threshold, separation_check, Divergence, Hyperplane,
    SeparationReport, Side,
};
pub use triangles::{delta_estimate, distance_to_path, gromov_product, project_to_ray, DeltaReport};
