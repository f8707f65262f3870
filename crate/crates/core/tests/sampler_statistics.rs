use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use spadsim::radiometry::FluxField;
use spadsim::spad::{
    sample_count_event_by_event, sample_count_exact, sample_count_gaussian, simulate_frame,
    FrameAccumulator, Sampler, SpadConfig,
};

fn config(q: f64, exposure: f64, dead: f64) -> SpadConfig {
    SpadConfig {
        quantum_efficiency: q,
        dead_time: dead,
        exposure_time: exposure,
        sampler: Sampler::Exact,
        ..Default::default()
    }
}

fn moments(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sample Kolmogorov-Smirnov statistic for integer samples.
fn ks_statistic(a: &mut [u64], b: &mut [u64]) -> f64 {
    a.sort_unstable();
    b.sort_unstable();
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[test]
fn bridge_and_event_loop_agree_in_distribution() {
    // Mean around 450, so the exact sampler takes the gamma-bridge path.
    let c = config(0.4, 1e-3, 150e-9);
    let phi = 1.5e6;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 20_000;
    let mut a: Vec<u64> = (0..n)
        .map(|_| sample_count_exact(phi, &c, &mut rng))
        .collect();
    let mut b: Vec<u64> = (0..n)
        .map(|_| sample_count_event_by_event(phi, &c, &mut rng))
        .collect();
    let d = ks_statistic(&mut a, &mut b);
    // alpha = 0.01 critical value; conservative for discrete data.
    let crit = 1.628 * ((2 * n) as f64 / (n as f64 * n as f64)).sqrt();
    assert!(d < crit, "KS D = {d}, critical {crit}");
}

fn poisson_gof(mean_target: f64, seed: u64) -> (f64, f64) {
    let c = config(0.4, 1e-3, 0.0);
    let phi = mean_target / (c.quantum_efficiency * c.exposure_time);
    let lambda = c.quantum_efficiency * phi * c.exposure_time;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 100_000;
    let draws: Vec<u64> = (0..n)
        .map(|_| sample_count_exact(phi, &c, &mut rng))
        .collect();

    // Bins with expected frequency >= 5; tails pooled into the end bins.
    let pois = Poisson::new(lambda).unwrap();
    let mut lo = 0u64;
    while n as f64 * pois.cdf(lo) < 5.0 {
        lo += 1;
    }
    let mut hi = lambda.ceil() as u64;
    while n as f64 * pois.sf(hi) >= 5.0 {
        hi += 1;
    }
    let mut observed = vec![0u64; (hi - lo + 1) as usize];
    for &k in &draws {
        observed[(k.clamp(lo, hi) - lo) as usize] += 1;
    }
    let mut chi2 = 0.0;
    for (i, &o) in observed.iter().enumerate() {
        let k = lo + i as u64;
        let p = if k == lo {
            pois.cdf(lo)
        } else if k == hi {
            pois.sf(hi - 1)
        } else {
            pois.pmf(k)
        };
        let e = n as f64 * p;
        chi2 += (o as f64 - e).powi(2) / e;
    }
    let dof = (observed.len() - 1) as f64;
    (chi2, ChiSquared::new(dof).unwrap().inverse_cdf(0.99))
}

#[test]
fn zero_dead_time_is_poisson_event_loop() {
    let (chi2, crit) = poisson_gof(12.0, 5);
    assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
}

#[test]
fn zero_dead_time_is_poisson_bridge() {
    let (chi2, crit) = poisson_gof(300.0, 6);
    assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
}

#[test]
fn exact_moments_across_regimes() {
    let c = config(0.4, 1e-3, 150e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for phi in [1e4, 1e6, 1e7, 1e8] {
        let xs: Vec<u64> = (0..20_000)
            .map(|_| sample_count_exact(phi, &c, &mut rng))
            .collect();
        let (m, v) = moments(&xs);
        let (em, ev) = (c.expected_count(phi), c.count_variance(phi));
        assert!(((m - em) / em).abs() < 0.01, "phi {phi}: mean {m} vs {em}");
        assert!(((v - ev) / ev).abs() < 0.05, "phi {phi}: var {v} vs {ev}");
    }
}

#[test]
fn gaussian_moments_and_clamp() {
    let c = SpadConfig {
        sampler: Sampler::Gaussian,
        ..config(0.4, 1e-3, 150e-9)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for phi in [1e5, 1e7, 1e9] {
        let xs: Vec<u64> = (0..20_000)
            .map(|_| sample_count_gaussian(phi, &c, &mut rng))
            .collect();
        let (m, v) = moments(&xs);
        let (em, ev) = (c.expected_count(phi), c.count_variance(phi));
        assert!(((m - em) / em).abs() < 0.01);
        // Rounding adds 1/12 to the variance.
        assert!(
            ((v - ev - 1.0 / 12.0) / ev).abs() < 0.05,
            "phi {phi}: {v} vs {ev}"
        );
        assert!(xs.iter().all(|&x| x <= c.max_count().unwrap()));
    }
}

#[test]
fn soft_saturation_approaches_ceiling() {
    let c = config(0.4, 1e-3, 150e-9);
    let cap = c.max_count().unwrap();
    assert_eq!(cap, 6667);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let xs: Vec<u64> = (0..20_000)
        .map(|_| sample_count_exact(1e10, &c, &mut rng))
        .collect();
    assert!(xs.iter().all(|&x| x <= cap));
    let (m, _) = moments(&xs);
    assert!(m >= 0.99 * c.exposure_time / c.dead_time);
}

#[test]
fn averaging_divides_variance() {
    let c = SpadConfig {
        sampler: Sampler::Exact,
        seed: 77,
        ..config(0.4, 1e-3, 150e-9)
    };
    let (w, h) = (128, 128);
    let phi = 2.5e6;
    let flux = FluxField {
        width: w,
        height: h,
        phi: vec![phi; w * h],
    };
    let mut acc = FrameAccumulator::new(w, h);
    for f in 0..4 {
        acc.add(&simulate_frame(&flux, &c, f)).unwrap();
    }
    let mean = acc.mean().unwrap();
    let n = mean.counts.len() as f64;
    let m = mean.counts.iter().sum::<f64>() / n;
    let v = mean.counts.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let want = c.count_variance(phi) / 4.0;
    assert!(((v - want) / want).abs() < 0.1, "{v} vs {want}");
}
