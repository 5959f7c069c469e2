use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::environment::WeightDistribution;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n − 1` denominator); 0 for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean with standard error and a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: usize,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Estimate {
        let m = mean(xs);
        let se = std_error(xs);
        Estimate {
            mean: m,
            se,
            ci_low: m - 1.96 * se,
            ci_high: m + 1.96 * se,
            count: xs.len(),
        }
    }
}

/// Percentile bootstrap interval (95%) for the unbiased variance.
pub fn bootstrap_variance_ci(xs: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    if xs.len() < 2 || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; xs.len()];
    let mut vars: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.gen_range(0..xs.len())];
            }
            variance(&buf)
        })
        .collect();
    vars.sort_by(f64::total_cmp);
    let q = |p: f64| vars[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (q(0.025), q(0.975))
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Slope of the fit through the origin, `Σxy / Σx²`.
    pub slope_through_origin: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let origin = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    LinearFit {
        slope,
        intercept,
        r2,
        slope_through_origin: origin,
    }
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Excess kurtosis.
pub fn kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// 1% critical value of the adjusted Anderson–Darling statistic for
/// normality with estimated mean and variance.
pub const AD_CRITICAL_1PCT: f64 = 1.035;

/// Anderson–Darling statistic for normality with estimated parameters,
/// with the small-sample adjustment `A²(1 + 0.75/n + 2.25/n²)`.
pub fn anderson_darling(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = mean(xs);
    let s = variance(xs).sqrt();
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / s).collect();
    z.sort_by(f64::total_cmp);
    let norm = Normal::new(0.0, 1.0).expect("standard normal");
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let fi = norm.cdf(z[i]).clamp(1e-300, 1.0 - 1e-16);
        let fj = norm.cdf(z[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
        acc += (2 * i + 1) as f64 * (fi.ln() + (1.0 - fj).ln());
    }
    let a2 = -nf - acc / nf;
    a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf))
}

/// `E[min(X, Y₁ + Y₂)]` for i.i.d. `X, Y₁, Y₂ ~ ρ`, by quadrature of
/// `∫₀^∞ P(X > t) P(Y₁ + Y₂ > t) dt` with
/// `P(Y₁ + Y₂ ≤ t) = ∫₀¹ F(t − F⁻¹(u)) du`.
pub fn expected_min_one_vs_two(dist: &WeightDistribution, grid: usize) -> f64 {
    let upper = if dist.upper_bound().is_finite() {
        dist.upper_bound()
    } else {
        dist.inverse_cdf(1.0 - 1e-13)
    };
    let quantiles: Vec<f64> = (0..grid).map(|i| dist.inverse_cdf((i as f64 + 0.5) / grid as f64)).collect();
    // Simpson's rule over [0, upper] on an even number of panels
    let panels = 2 * grid;
    let h2 = upper / panels as f64;
    let f = |t: f64| {
        let g: f64 = quantiles.iter().map(|q| dist.cdf(t - q)).sum::<f64>() / grid as f64;
        (1.0 - dist.cdf(t)) * (1.0 - g)
    };
    let mut acc = f(0.0) + f(upper);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(k as f64 * h2);
    }
    acc * h2 / 3.0
}
