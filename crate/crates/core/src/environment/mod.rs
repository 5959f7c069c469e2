//! Random environments: i.i.d. edge weights with a catalog of admissible
//! laws and the truncation transform.

mod distribution;
mod env;

pub use distribution::{DistributionDescriptor, WeightDistribution};
pub use env::{truncated_tail_check, Environment};
