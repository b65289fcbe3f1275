use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_OBSERVATIONS: usize = 50;
pub const DEFAULT_REPLICATES: usize = 1000;
const ALPHA_LO: f64 = 1.0 + 1e-6;
const ALPHA_HI: f64 = 50.0;
/// Survival values tabulated for exact sampling before switching to the
/// continuous approximation.
const SAMPLER_TABLE: usize = 20_000;

/// Bernoulli numbers B2..B14 divided by (2j)!.
const EM_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
];

/// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (q + k)^(-s) for s > 1, q > 0, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const N: usize = 12;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + N as f64;
    let a_s = a.powf(-s);
    sum += a * a_s / (s - 1.0) + 0.5 * a_s;
    // rising factorial s (s+1) .. (s+2j-2) times a^(-s-2j+1)
    let mut fact = s;
    let mut term = a_s / a;
    for (j, c) in EM_COEFFS.iter().enumerate() {
        sum += c * fact * term;
        let j = j as f64;
        fact *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
        term /= a * a;
    }
    sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: u64,
    pub p_value: f64,
    pub n_tail: usize,
    pub n: usize,
    pub ks: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Distinct values with their counts, ascending.
#[derive(Debug, Clone)]
struct Histogram {
    values: Vec<u64>,
    counts: Vec<usize>,
}

impl Histogram {
    fn new(data: &[u64]) -> Self {
        let mut sorted = data.to_vec();
        sorted.sort_unstable();
        let mut values = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for x in sorted {
            if values.last() == Some(&x) {
                *counts.last_mut().expect("parallel vectors") += 1;
            } else {
                values.push(x);
                counts.push(1);
            }
        }
        Histogram { values, counts }
    }
}

#[derive(Debug, Clone, Copy)]
struct TailFit {
    alpha: f64,
    x_min: u64,
    n_tail: usize,
    ks: f64,
}

/// Maximizer of the discrete power-law log-likelihood per observation,
/// -ln ζ(α, x_min) - α · mean_log, by golden-section search.
fn mle_alpha(x_min: u64, mean_log: f64) -> f64 {
    let f = |a: f64| hurwitz_zeta(a, x_min as f64).ln() + a * mean_log;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (ALPHA_LO, ALPHA_HI);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-9 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// KS distance between the empirical tail CDF (values[start..]) and the
/// fitted discrete power law, checked at every integer of the tail range.
/// The fitted CDF is accumulated term by term across small gaps and taken
/// from the zeta function across large ones.
fn ks_distance(h: &Histogram, start: usize, n_tail: usize, alpha: f64) -> f64 {
    const DIRECT_GAP: u64 = 32;
    let x_min = h.values[start];
    let z = hurwitz_zeta(alpha, x_min as f64);
    let mut mass = 0.0; // Σ_{k = x_min}^{prev} k^-α
    let mut prev = x_min - 1;
    let mut cum = 0usize;
    let mut d: f64 = 0.0;
    for i in start..h.values.len() {
        let v = h.values[i];
        let mass_v = if v - prev <= DIRECT_GAP {
            (prev + 1..=v).fold(mass, |m, k| m + (k as f64).powf(-alpha))
        } else {
            z - hurwitz_zeta(alpha, (v + 1) as f64)
        };
        if v > x_min {
            // just below v the empirical CDF still has its previous value
            let below = (mass_v - (v as f64).powf(-alpha)) / z;
            d = d.max((below - cum as f64 / n_tail as f64).abs());
        }
        cum += h.counts[i];
        d = d.max((mass_v / z - cum as f64 / n_tail as f64).abs());
        mass = mass_v;
        prev = v;
    }
    d
}

/// Best tail over all candidate x_min values that leave at least two
/// distinct values in the tail.
fn best_tail(h: &Histogram) -> Option<TailFit> {
    let k = h.values.len();
    if k < 2 {
        return None;
    }
    let mut suffix_n = vec![0usize; k + 1];
    let mut suffix_log = vec![0.0f64; k + 1];
    for i in (0..k).rev() {
        suffix_n[i] = suffix_n[i + 1] + h.counts[i];
        suffix_log[i] = suffix_log[i + 1] + h.counts[i] as f64 * (h.values[i] as f64).ln();
    }
    let mut best: Option<TailFit> = None;
    for start in 0..k - 1 {
        let n_tail = suffix_n[start];
        let alpha = mle_alpha(h.values[start], suffix_log[start] / n_tail as f64);
        let ks = ks_distance(h, start, n_tail, alpha);
        if best.is_none_or(|b| ks < b.ks) {
            best = Some(TailFit {
                alpha,
                x_min: h.values[start],
                n_tail,
                ks,
            });
        }
    }
    best
}

/// Inverse-CDF sampler for the discrete power law above x_min.
struct TailSampler {
    x_min: u64,
    alpha: f64,
    /// survival[i] = P(X >= x_min + i)
    survival: Vec<f64>,
}

impl TailSampler {
    fn new(alpha: f64, x_min: u64) -> Self {
        let z = hurwitz_zeta(alpha, x_min as f64);
        let mut survival = Vec::with_capacity(SAMPLER_TABLE);
        let mut s = 1.0;
        for i in 0..SAMPLER_TABLE {
            survival.push(s);
            s -= (x_min as f64 + i as f64).powf(-alpha) / z;
        }
        TailSampler { x_min, alpha, survival }
    }

    fn sample(&self, rng: &mut impl Rng) -> u64 {
        let r: f64 = 1.0 - rng.random::<f64>();
        let last = *self.survival.last().expect("table is non-empty");
        if r >= last {
            // largest i with survival[i] >= r
            let i = self.survival.partition_point(|&s| s >= r) - 1;
            return self.x_min + i as u64;
        }
        // far tail: continuous approximation conditioned on exceeding the table
        let top = (self.x_min + SAMPLER_TABLE as u64) as f64 - 0.5;
        let x = top * (r / last).powf(-1.0 / (self.alpha - 1.0)) + 0.5;
        x.floor().max(top + 0.5) as u64
    }
}

fn validate(data: &[u64]) -> Result<Histogram> {
    if data.len() < MIN_OBSERVATIONS {
        return Err(Error::invalid(format!(
            "power-law fit needs at least {MIN_OBSERVATIONS} observations, got {}",
            data.len()
        )));
    }
    if data.contains(&0) {
        return Err(Error::invalid("power-law fit needs positive values"));
    }
    let h = Histogram::new(data);
    if h.values.len() < 2 {
        return Err(Error::Numerical("all observations are equal".into()));
    }
    Ok(h)
}

/// α and x_min by discrete maximum likelihood with x_min minimizing the KS
/// distance; no goodness-of-fit test.
pub fn estimate_power_law(data: &[u64]) -> Result<(f64, u64, f64, usize)> {
    let h = validate(data)?;
    let t = best_tail(&h).ok_or_else(|| Error::Numerical("no tail to fit".into()))?;
    Ok((t.alpha, t.x_min, t.ks, t.n_tail))
}

/// Fit plus a semi-parametric bootstrap p-value: each replicate draws from
/// the fitted power law above x_min and resamples the observed body below it,
/// then refits; p is the share of replicates fitting worse than the data.
/// Replicate r uses stream r of a generator seeded with `seed`.
pub fn fit_power_law(data: &[u64], replicates: usize, seed: u64) -> Result<PowerLawFit> {
    let h = validate(data)?;
    let t = best_tail(&h).ok_or_else(|| Error::Numerical("no tail to fit".into()))?;
    let body: Vec<u64> = data.iter().copied().filter(|&x| x < t.x_min).collect();
    let n = data.len();
    let p_tail = t.n_tail as f64 / n as f64;
    let sampler = TailSampler::new(t.alpha, t.x_min);
    let worse = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let synthetic: Vec<u64> = (0..n)
                .map(|_| {
                    if body.is_empty() || rng.random::<f64>() < p_tail {
                        sampler.sample(&mut rng)
                    } else {
                        body[rng.random_range(0..body.len())]
                    }
                })
                .collect();
            match best_tail(&Histogram::new(&synthetic)) {
                Some(fit) => fit.ks >= t.ks,
                None => false,
            }
        })
        .filter(|&w| w)
        .count();
    Ok(PowerLawFit {
        alpha: t.alpha,
        x_min: t.x_min,
        p_value: if replicates == 0 { f64::NAN } else { worse as f64 / replicates as f64 },
        n_tail: t.n_tail,
        n,
        ks: t.ks,
        replicates,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Zeta};
    use std::f64::consts::PI;

    #[test]
    fn zeta_known_values() {
        let cases = [
            (2.0, 1.0, PI * PI / 6.0),
            (4.0, 1.0, PI.powi(4) / 90.0),
            (3.0, 1.0, 1.2020569031595942),
            (2.0, 2.0, PI * PI / 6.0 - 1.0),
            (2.0, 0.5, PI * PI / 2.0),
            (1.5, 1.0, 2.612375348685488),
        ];
        for (s, q, want) in cases {
            let got = hurwitz_zeta(s, q);
            assert!(((got - want) / want).abs() < 1e-13, "zeta({s},{q}) = {got}, want {want}");
        }
    }

    #[test]
    fn zeta_against_direct_sum() {
        // the tail after 10^6 terms is below 1e-12 for s = 3
        for q in [1.0, 7.0, 150.0] {
            let direct: f64 = (0..1_000_000).map(|k| (q + k as f64).powf(-3.0)).sum::<f64>();
            let tail = (q + 1e6).powf(-2.0) / 2.0;
            let want = direct + tail;
            assert!(((hurwitz_zeta(3.0, q) - want) / want).abs() < 1e-10);
        }
    }

    fn zeta_sample(alpha: f64, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Zeta::new(alpha).unwrap();
        (0..n).map(|_| d.sample(&mut rng) as u64).collect()
    }

    #[test]
    fn recovers_alpha() {
        let (alpha, _, _, _) = estimate_power_law(&zeta_sample(2.5, 10_000, 1)).unwrap();
        assert!((alpha - 2.5).abs() < 0.1, "{alpha}");
    }

    #[test]
    fn duplicating_data_changes_nothing() {
        let data = zeta_sample(2.2, 2_000, 4);
        let doubled: Vec<u64> = data.iter().chain(&data).copied().collect();
        let a = estimate_power_law(&data).unwrap();
        let b = estimate_power_law(&doubled).unwrap();
        assert_eq!((a.0, a.1, a.2), (b.0, b.1, b.2));
        assert_eq!(a.3 * 2, b.3);
    }

    #[test]
    fn degenerate_and_small_inputs() {
        assert!(estimate_power_law(&[3; 100]).is_err());
        assert!(estimate_power_law(&[1, 2, 3]).is_err());
        let mut with_zero = zeta_sample(2.5, 100, 2);
        with_zero[0] = 0;
        assert!(estimate_power_law(&with_zero).is_err());
    }

    #[test]
    fn sampler_matches_pmf() {
        let s = TailSampler::new(2.5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 200_000;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            let x = s.sample(&mut rng);
            assert!(x >= 3);
            if x < 6 {
                hits[(x - 3) as usize] += 1;
            }
        }
        let z = hurwitz_zeta(2.5, 3.0);
        for (i, h) in hits.iter().enumerate() {
            let p = (3.0 + i as f64).powf(-2.5) / z;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*h as f64 / n as f64 - p).abs() < 5.0 * sd);
        }
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data = zeta_sample(2.5, 500, 3);
        let a = fit_power_law(&data, 50, 9).unwrap();
        let b = fit_power_law(&data, 50, 9).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.p_value));
    }
}
