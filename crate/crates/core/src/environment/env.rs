use std::hash::Hasher;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siphasher::sip::SipHasher13;

use super::distribution::WeightDistribution;
use crate::error::{FppError, Result};
use crate::group::EdgeId;

const SEED_TWEAK: u64 = 0x5745_4947_4854_5321;

/// An i.i.d. weight environment `ω`. Weights are a pure function of the
/// seed and the canonical edge id: the edge key is hashed by a keyed PRF and
/// the resulting uniform variate is pushed through the quantile function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Environment {
    seed: u64,
    dist: WeightDistribution,
    clamp: Option<(f64, f64)>,
}

impl Environment {
    pub fn new(seed: u64, dist: WeightDistribution) -> Self {
        Environment { seed, dist, clamp: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> &WeightDistribution {
        &self.dist
    }

    /// `[ε′, M]` bounds when the environment is truncated.
    pub fn clamp(&self) -> Option<(f64, f64)> {
        self.clamp
    }

    /// Uniform variate in the open interval `(0, 1)` for an edge key.
    pub fn uniform_of_key(&self, key: u64) -> f64 {
        let mut h = SipHasher13::new_with_keys(self.seed, SEED_TWEAK);
        h.write_u64(key);
        let bits = h.finish() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Weight of the edge with the given 64-bit key (see [`EdgeId::key`]).
    pub fn weight_of_key(&self, key: u64) -> f64 {
        let w = self.dist.inverse_cdf(self.uniform_of_key(key));
        match self.clamp {
            Some((lo, hi)) => w.clamp(lo, hi),
            None => w,
        }
    }

    pub fn weight(&self, e: &EdgeId) -> f64 {
        self.weight_of_key(e.key())
    }

    /// The truncated environment `ω′`: weights below `ε′` are raised to
    /// `ε′`, weights above `M` lowered to `M`, others kept.
    pub fn truncate(&self, eps_prime: f64, m: f64) -> Result<Environment> {
        if !(eps_prime > 0.0 && eps_prime < m) {
            return Err(FppError::domain(format!(
                "truncation needs 0 < ε′ < M, got ε′ = {eps_prime}, M = {m}"
            )));
        }
        let (lo, hi) = match self.clamp {
            Some((l, h)) => (eps_prime.max(l), m.min(h)),
            None => (eps_prime, m),
        };
        Ok(Environment {
            clamp: Some((lo, hi)),
            ..*self
        })
    }

    /// The same environment with a different seed.
    pub fn with_seed(&self, seed: u64) -> Environment {
        Environment { seed, ..*self }
    }
}

/// Monte Carlo estimate of `P(Σ_{i≤n} (X_i − M)_+ ≥ εn)` for i.i.d. `X_i ~ ρ`.
pub fn truncated_tail_check(
    dist: &WeightDistribution,
    m: f64,
    eps: f64,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 || replications == 0 {
        return Err(FppError::domain("n and replications must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = eps * n as f64;
    let mut hits = 0usize;
    for _ in 0..replications {
        let mut s = 0.0;
        for _ in 0..n {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            s += (dist.inverse_cdf(u) - m).max(0.0);
        }
        if s >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / replications as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Element, GroupModel};

    fn uniform01() -> WeightDistribution {
        WeightDistribution::Uniform { a: 0.0, b: 1.0 }
    }

    #[test]
    fn weights_are_deterministic_and_canonical() {
        let m = GroupModel::mixed_f2();
        let env = Environment::new(42, uniform01());
        let x = m.parse_element("ab^2").unwrap();
        for s in 0..m.generators().len() {
            let y = m.step(&x, s);
            let e1 = m.canonical_edge(&x, &y).unwrap();
            let e2 = m.canonical_edge(&y, &x).unwrap();
            assert_eq!(env.weight(&e1), env.weight(&e2));
            assert_eq!(env.weight(&e1), Environment::new(42, uniform01()).weight(&e1));
            assert_ne!(env.weight(&e1), env.with_seed(43).weight(&e1));
        }
    }

    #[test]
    fn ks_statistic_uniform() {
        // distinct edges (a^i, a^{i+1}) of F2
        let f2 = GroupModel::free(2);
        let env = Environment::new(7, uniform01());
        let n = 100_000;
        let mut w: Vec<f64> = (0..n)
            .map(|i| env.weight(&f2.edge_from_step(&Element::power(0, i), 0)))
            .collect();
        w.sort_by(f64::total_cmp);
        let ks = w
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
            .fold(0.0, f64::max);
        assert!(ks <= 0.006, "KS = {ks}");
    }

    #[test]
    fn truncation_cases() {
        let env = Environment::new(1, WeightDistribution::Exponential { rate: 1.0 });
        let t = env.truncate(0.01, 5.0).unwrap();
        assert!(env.truncate(5.0, 5.0).is_err());
        assert!(env.truncate(0.0, 5.0).is_err());
        let f2 = GroupModel::free(2);
        let (mut low, mut high, mut mid) = (false, false, false);
        for i in 0..100_000 {
            let e = f2.edge_from_step(&Element::power(1, i), 0);
            let (w, wt) = (env.weight(&e), t.weight(&e));
            assert!((0.01..=5.0).contains(&wt));
            if w < 0.01 {
                assert_eq!(wt, 0.01);
                low = true;
            } else if w > 5.0 {
                assert_eq!(wt, 5.0);
                high = true;
            } else {
                assert_eq!(wt, w);
                mid = true;
            }
        }
        assert!(low && high && mid);
    }

    #[test]
    fn tail_check_examples() {
        let ba = WeightDistribution::BoundedAway { a: 1.0, b: 2.0 };
        assert_eq!(truncated_tail_check(&ba, 2.0, 0.1, 50, 1000, 1).unwrap(), 0.0);
        let u = uniform01();
        assert!(truncated_tail_check(&u, 0.9, 0.2, 100, 10_000, 2).unwrap() <= 1e-3);
        let g = WeightDistribution::TruncatedGaussian { mean: 1.0, sd: 1.0 };
        assert!(truncated_tail_check(&g, 6.0, 0.1, 200, 2_000, 3).unwrap() <= 1e-3);
        assert!(truncated_tail_check(&u, 0.5, 0.0, 0, 1, 1).is_err());
    }

    #[test]
    fn sample_means_within_four_se() {
        let f2 = GroupModel::free(2);
        let n = 1_000_000;
        for dist in [
            uniform01(),
            WeightDistribution::BoundedAway { a: 1.0, b: 2.0 },
            WeightDistribution::Exponential { rate: 0.5 },
            WeightDistribution::TruncatedGaussian { mean: 1.0, sd: 1.0 },
        ] {
            let env = Environment::new(99, dist);
            let sum: f64 = (0..n).map(|i| env.weight(&f2.edge_from_step(&Element::power(0, i), 0))).sum();
            let mean = sum / n as f64;
            let se = (dist.variance() / n as f64).sqrt();
            assert!((mean - dist.mean()).abs() < 4.0 * se, "{dist}: {mean} vs {}", dist.mean());
        }
    }
}
