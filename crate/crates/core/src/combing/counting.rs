use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::automaton::GeodesicAutomaton;

/// Number of accepted words of length exactly `n`, which is `|G_n|` when the
/// language is a geodesic combing.
pub fn sphere_count(aut: &GeodesicAutomaton, n: u64) -> BigUint {
    let mut v = vec![BigUint::zero(); aut.n_states()];
    v[aut.initial()] = BigUint::from(1u32);
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); aut.n_states()];
        for (p, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (_, q) in aut.transitions(p) {
                next[q] += c;
            }
        }
        v = next;
    }
    v.into_iter().sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub lambda: f64,
    /// `|G_n| / λ^n` for `n = 1..=n_max`.
    pub ratios: Vec<f64>,
    pub sup: f64,
    pub inf: f64,
}

/// Tabulates `|G_n| / λ^n`, which stays within constant bounds for a
/// hyperbolic group.
pub fn growth_check(aut: &GeodesicAutomaton, lambda: f64, n_max: u64) -> GrowthReport {
    let ratios: Vec<f64> = (1..=n_max)
        .map(|n| {
            let c = sphere_count(aut, n);
            // log-space to avoid overflow for large n
            let bits = c.bits();
            let shift = bits.saturating_sub(60);
            let mantissa = (&c >> shift).to_f64().unwrap_or(f64::NAN);
            (mantissa.ln() + shift as f64 * std::f64::consts::LN_2 - n as f64 * lambda.ln()).exp()
        })
        .collect();
    let sup = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    GrowthReport {
        lambda,
        ratios,
        sup,
        inf,
    }
}
