//! Per-pixel count samplers.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma, Normal};

use super::{Sampler, SpadConfig};

/// Below this mean the event-by-event loop is cheaper than the gamma bridge.
const EVENT_LOOP_MAX_MEAN: f64 = 32.0;

/// Draws a count with the sampler selected in `config`.
pub fn sample_count<R: Rng + ?Sized>(phi: f64, config: &SpadConfig, rng: &mut R) -> u64 {
    match config.sampler {
        Sampler::Exact => sample_count_exact(phi, config, rng),
        Sampler::Gaussian => sample_count_gaussian(phi, config, rng),
    }
}

/// Direct simulation of the renewal process: exponential gaps of rate `q phi`,
/// each detection followed by a dead interval.
pub fn sample_count_event_by_event<R: Rng + ?Sized>(
    phi: f64,
    config: &SpadConfig,
    rng: &mut R,
) -> u64 {
    let rate = config.quantum_efficiency * phi;
    if !(rate > 0.0) {
        return 0;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let (exposure, dead) = (config.exposure_time, config.dead_time);
    let mut clock = 0.0;
    let mut count = 0;
    loop {
        clock += gap.sample(rng);
        if clock > exposure {
            return count;
        }
        count += 1;
        clock += dead;
    }
}

/// Exact renewal-process count.
///
/// Detection `n` happens at `G_n + (n - 1) tau`, where `G_n` is the sum of
/// `n` exponential gaps, so the count is the largest `n` with
/// `G_n + (n - 1) tau <= T`. For small means the gaps are drawn one by one.
/// Otherwise `G_hi ~ Gamma(hi)` is drawn for an upper bracket and the
/// bracket is bisected, filling in `G_mid` from the gamma bridge
/// `G_lo + (G_hi - G_lo) * Beta(mid - lo, hi - mid)`. Both paths have the
/// same distribution; the bridge needs O(log N) draws instead of O(N).
pub fn sample_count_exact<R: Rng + ?Sized>(phi: f64, config: &SpadConfig, rng: &mut R) -> u64 {
    let rate = config.quantum_efficiency * phi;
    if !(rate > 0.0) {
        return 0;
    }
    let mean = config.expected_count(phi);
    if mean < EVENT_LOOP_MAX_MEAN {
        return sample_count_event_by_event(phi, config, rng);
    }
    let (exposure, dead) = (config.exposure_time, config.dead_time);
    let scale = 1.0 / rate;
    let detected = |n: u64, g: f64| g + (n - 1) as f64 * dead <= exposure;
    let gamma = |k: u64, rng: &mut R| {
        Gamma::new(k as f64, scale)
            .expect("positive shape")
            .sample(rng)
    };

    // Bracket: `lo` satisfies the detection condition (0 trivially), `hi` fails it.
    let sd = config.count_variance(phi).sqrt();
    let mut lo: u64 = 0;
    let mut g_lo = 0.0;
    let mut hi = (mean + 10.0 * sd + 10.0).ceil() as u64;
    if let Some(cap) = config.max_count() {
        hi = hi.min(cap + 1);
    }
    let mut g_hi = gamma(hi, rng);
    while detected(hi, g_hi) {
        let step = hi.max(16);
        lo = hi;
        g_lo = g_hi;
        hi += step;
        g_hi = g_lo + gamma(step, rng);
    }

    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let frac = Beta::new((mid - lo) as f64, (hi - mid) as f64)
            .expect("positive shapes")
            .sample(rng);
        let g_mid = g_lo + (g_hi - g_lo) * frac;
        if detected(mid, g_mid) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    lo
}

/// Normal draw with the closed-form mean and variance, rounded and clamped to
/// `[0, floor(T / tau) + 1]`.
pub fn sample_count_gaussian<R: Rng + ?Sized>(phi: f64, config: &SpadConfig, rng: &mut R) -> u64 {
    let mean = config.expected_count(phi);
    if !(mean > 0.0) {
        return 0;
    }
    let sd = config.count_variance(phi).sqrt();
    let x = Normal::new(mean, sd)
        .expect("finite moments")
        .sample(rng)
        .round();
    let x = x.max(0.0) as u64;
    match config.max_count() {
        Some(cap) => x.min(cap),
        None => x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(q: f64, exposure: f64, dead: f64) -> SpadConfig {
        SpadConfig {
            quantum_efficiency: q,
            dead_time: dead,
            exposure_time: exposure,
            ..Default::default()
        }
    }

    fn moments(xs: &[u64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_flux_never_draws() {
        let c = cfg(1.0, 1e-3, 150e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let before = rng.clone();
        assert_eq!(sample_count_exact(0.0, &c, &mut rng), 0);
        assert_eq!(sample_count_gaussian(0.0, &c, &mut rng), 0);
        assert_eq!(sample_count_event_by_event(0.0, &c, &mut rng), 0);
        assert_eq!(rng, before);
    }

    #[test]
    fn dead_time_equal_to_exposure_allows_one_detection() {
        let c = cfg(1.0, 150e-9, 150e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for phi in [1e6, 1e8, 1e10, 1e12] {
            for _ in 0..2000 {
                assert!(sample_count_exact(phi, &c, &mut rng) <= 1);
                assert!(sample_count_gaussian(phi, &c, &mut rng) <= 2);
            }
        }
    }

    #[test]
    fn draws_respect_hard_ceiling() {
        let c = cfg(1.0, 1e-5, 150e-9);
        let cap = c.max_count().unwrap();
        assert_eq!(cap, 67);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20_000 {
            assert!(sample_count_exact(1e12, &c, &mut rng) <= cap);
            assert!(sample_count_gaussian(1e12, &c, &mut rng) <= cap);
        }
    }

    #[test]
    fn bridge_matches_event_loop_moments() {
        // Both exact routes at a mean where the bridge is active.
        let c = cfg(0.4, 1e-4, 150e-9);
        let phi = 1e7;
        assert!(c.expected_count(phi) > EVENT_LOOP_MAX_MEAN);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<u64> = (0..40_000)
            .map(|_| sample_count_exact(phi, &c, &mut rng))
            .collect();
        let b: Vec<u64> = (0..40_000)
            .map(|_| sample_count_event_by_event(phi, &c, &mut rng))
            .collect();
        let (ma, va) = moments(&a);
        let (mb, vb) = moments(&b);
        let (m, v) = (c.expected_count(phi), c.count_variance(phi));
        assert!(((ma - m) / m).abs() < 0.01, "{ma} vs {m}");
        assert!(((mb - m) / m).abs() < 0.01, "{mb} vs {m}");
        assert!(((va - v) / v).abs() < 0.05, "{va} vs {v}");
        assert!(((vb - v) / v).abs() < 0.05, "{vb} vs {v}");
    }

    #[test]
    fn gaussian_without_dead_time_is_unclamped() {
        let c = cfg(1.0, 1e-3, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<u64> = (0..10_000)
            .map(|_| sample_count_gaussian(1e7, &c, &mut rng))
            .collect();
        let (m, _) = moments(&x);
        assert!((m - 1e4).abs() < 10.0);
    }
}
