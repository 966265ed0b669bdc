use srdae_core::bernstein::BernsteinFunction;
use srdae_core::correlation::CorrelationMeasure;
use srdae_core::fit::mean_se;
use srdae_core::grid::GridSpec;
use srdae_core::rational::{q, qi};
use srdae_core::stochastics::{
    calibrate_exact, calibrate_noise, sample_sbm, sample_stable_subordinator,
    sample_subordinator_general, standard_stable, NoiseSynth, Purpose, RngSpec,
};

const PATHS: usize = 100_000;

fn within(empirical: &[f64], theory: f64, slack: f64) -> (bool, f64, f64) {
    let (m, se) = mean_se(empirical);
    ((m - theory).abs() <= 3.0 * se + slack, m, se)
}

#[test]
fn stable_laplace_identity() {
    let grid = [0.0, 0.5, 1.0];
    for (i, &beta) in [0.3, 0.5, 0.8].iter().enumerate() {
        let mut rng = RngSpec::new(11).stream(i as u64, Purpose::Subordinator);
        let s1: Vec<f64> = (0..PATHS)
            .map(|_| sample_stable_subordinator(beta, &grid, &mut rng).unwrap().terminal())
            .collect();
        for &lambda in &[0.5f64, 1.0, 2.0, 4.0] {
            let samples: Vec<f64> = s1.iter().map(|s| (-lambda * s).exp()).collect();
            let theory = (-lambda.powf(beta)).exp();
            let (ok, m, se) = within(&samples, theory, 0.0);
            assert!(ok, "β={beta} λ={lambda}: {m} vs {theory} (se {se})");
        }
    }
}

#[test]
fn stable_half_at_half_time() {
    // E e^{−4 S_{1/2}} = e^{−1/2 · 2} for β = 1/2
    let mut rng = RngSpec::new(5).stream(0, Purpose::Subordinator);
    let samples: Vec<f64> = (0..PATHS)
        .map(|_| {
            let s = sample_stable_subordinator(0.5, &[0.0, 0.5], &mut rng).unwrap().terminal();
            (-4.0 * s).exp()
        })
        .collect();
    let (ok, m, se) = within(&samples, (-1.0f64).exp(), 0.0);
    assert!(ok, "{m} ± {se}");
}

#[test]
fn general_sampler_stable_sum() {
    let phi = BernsteinFunction::stable_sum(0.3, 0.7).unwrap();
    let grid = [0.0, 1.0];
    let spec = RngSpec::new(21);
    let mut rng = spec.stream(0, Purpose::Subordinator);
    let mut last = None;
    let general: Vec<f64> = (0..PATHS / 2)
        .map(|_| {
            let s = sample_subordinator_general(&phi, &grid, &mut rng, 1e-3).unwrap();
            let t = s.path.terminal();
            last = Some(s);
            t
        })
        .collect();
    let sample = last.unwrap();
    // oracle: independent exact samplers for the two components
    let mut rng_a = spec.stream(1, Purpose::Subordinator);
    let mut rng_b = spec.stream(2, Purpose::Subordinator);
    let oracle: Vec<f64> = (0..PATHS / 2)
        .map(|_| standard_stable(0.3, &mut rng_a) + standard_stable(0.7, &mut rng_b))
        .collect();
    for &lambda in &[0.5, 1.0, 2.0] {
        let theory = (-phi.eval(lambda).unwrap()).exp();
        let bias = sample.laplace_bias(&phi, lambda, 1.0);
        let g: Vec<f64> = general.iter().map(|s| (-lambda * s).exp()).collect();
        let o: Vec<f64> = oracle.iter().map(|s| (-lambda * s).exp()).collect();
        let (ok, m, se) = within(&g, theory, bias);
        assert!(ok, "λ={lambda}: {m} vs {theory} (se {se}, bias {bias})");
        let (ok, m, se) = within(&o, theory, 0.0);
        assert!(ok, "oracle λ={lambda}: {m} vs {theory} (se {se})");
    }
}

fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn general_sampler_matches_exact_in_distribution() {
    let n = 10_000;
    let phi = BernsteinFunction::stable(0.5).unwrap();
    let spec = RngSpec::new(33);
    let mut rng = spec.stream(0, Purpose::Subordinator);
    let mut general: Vec<f64> = (0..n)
        .map(|_| {
            sample_subordinator_general(&phi, &[0.0, 1.0], &mut rng, 1e-4)
                .unwrap()
                .path
                .terminal()
        })
        .collect();
    let mut rng = spec.stream(1, Purpose::Subordinator);
    let mut exact: Vec<f64> = (0..n)
        .map(|_| sample_stable_subordinator(0.5, &[0.0, 1.0], &mut rng).unwrap().terminal())
        .collect();
    let d = ks_statistic(&mut general, &mut exact);
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    assert!(d < critical, "KS {d} ≥ {critical}");
}

#[test]
fn truncation_bias_shrinks_with_cutoff() {
    let phi = BernsteinFunction::stable_sum(0.3, 0.7).unwrap();
    let mut rng = RngSpec::new(2).stream(0, Purpose::Subordinator);
    let mut prev = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let s = sample_subordinator_general(&phi, &[0.0, 1.0], &mut rng, eps).unwrap();
        let bias = s.laplace_bias(&phi, 2.0, 1.0);
        assert!(bias < prev, "{eps}: {bias}");
        prev = bias;
    }
}

#[test]
fn relativistic_general_sampler() {
    let phi = BernsteinFunction::relativistic(0.5, 1.0).unwrap();
    let mut rng = RngSpec::new(9).stream(0, Purpose::Subordinator);
    let mut last = None;
    let s: Vec<f64> = (0..40_000)
        .map(|_| {
            let g = sample_subordinator_general(&phi, &[0.0, 1.0], &mut rng, 1e-4).unwrap();
            let t = g.path.terminal();
            last = Some(g);
            t
        })
        .collect();
    let sample = last.unwrap();
    for &lambda in &[0.5, 3.0] {
        let theory = (-phi.eval(lambda).unwrap()).exp();
        let v: Vec<f64> = s.iter().map(|x| (-lambda * x).exp()).collect();
        let (ok, m, se) = within(&v, theory, sample.laplace_bias(&phi, lambda, 1.0));
        assert!(ok, "λ={lambda}: {m} vs {theory} ± {se}");
    }
}

#[test]
fn sbm_characteristic_function() {
    let phi = BernsteinFunction::stable(0.5).unwrap();
    let spec = RngSpec::new(44);
    let mut sub = spec.stream(0, Purpose::Subordinator);
    let mut bm = spec.stream(0, Purpose::Brownian);
    let x1: Vec<f64> = (0..PATHS)
        .map(|_| sample_sbm(&phi, 1, &[0.0, 0.5, 1.0], &mut sub, &mut bm).unwrap().positions[2][0])
        .collect();
    for &xi in &[0.5f64, 1.0, 2.0, 4.0] {
        let c: Vec<f64> = x1.iter().map(|x| (xi * x).cos()).collect();
        let (ok, m, se) = within(&c, (-xi.abs()).exp(), 0.0);
        assert!(ok, "ξ={xi}: {m} vs {} ± {se}", (-xi).exp());
    }
    let ones: Vec<f64> = x1.iter().map(|x| (0.0 * x).cos()).collect();
    assert!(ones.iter().all(|v| *v == 1.0));
    // the Cauchy law has no mean; check symmetry through the sign instead
    let signs: Vec<f64> = x1.iter().map(|x| x.signum()).collect();
    let (ok, m, se) = within(&signs, 0.0, 0.0);
    assert!(ok, "{m} ± {se}");
}

#[test]
fn sbm_mean_zero_with_finite_moments() {
    // relativistic subordinator has all moments; E X_t = 0
    let phi = BernsteinFunction::relativistic(0.5, 1.0).unwrap();
    let spec = RngSpec::new(45);
    let mut sub = spec.stream(0, Purpose::Subordinator);
    let mut bm = spec.stream(0, Purpose::Brownian);
    let x: Vec<f64> = (0..20_000)
        .map(|_| sample_sbm(&phi, 2, &[0.0, 1.0], &mut sub, &mut bm).unwrap().positions[1][1])
        .collect();
    let (ok, m, se) = within(&x, 0.0, 0.0);
    assert!(ok, "{m} ± {se}");
}

#[test]
fn gaussian_noise_covariance() {
    let grid = GridSpec::new(1, 128, 20.0).unwrap();
    let pi = CorrelationMeasure::gaussian(qi(1)).unwrap();
    let synth = NoiseSynth::new(&pi, grid).unwrap();
    let kappa = calibrate_exact(&synth);
    let mut rng = RngSpec::new(3).stream(0, Purpose::Noise);
    let samples: Vec<Vec<f64>> = (0..400).map(|_| synth.increment(&mut rng, 1.0, kappa)).collect();
    for lag in [0i64, 3, 6, 10] {
        let h = lag as f64 * grid.dx();
        let per: Vec<f64> = samples
            .iter()
            .map(|z| (0..z.len()).map(|i| z[i] * z[grid.shifted(i, &[lag])]).sum::<f64>() / z.len() as f64)
            .collect();
        let theory = (-0.5 * h * h).exp();
        let (ok, m, se) = within(&per, theory, 0.0);
        assert!(ok, "lag {h}: {m} vs {theory} ± {se}");
    }
}

#[test]
fn white_noise_is_white_in_space_and_time() {
    let grid = GridSpec::new(1, 64, 1.0).unwrap();
    let synth = NoiseSynth::new(&CorrelationMeasure::dirac(), grid).unwrap();
    let kappa = calibrate_exact(&synth);
    let dt = 0.01;
    let mut rng = RngSpec::new(4).stream(0, Purpose::Noise);
    let mut var0 = Vec::new();
    let mut var1 = Vec::new();
    let mut cross = Vec::new();
    for _ in 0..500 {
        let a = synth.increment(&mut rng, dt, kappa);
        let b = synth.increment(&mut rng, dt, kappa);
        let n = a.len() as f64;
        var0.push(a.iter().map(|x| x * x).sum::<f64>() / n);
        var1.push((0..a.len()).map(|i| a[i] * a[(i + 1) % a.len()]).sum::<f64>() / n);
        cross.push(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n);
    }
    let target = dt / grid.dx();
    assert!(within(&var0, target, 0.0).0);
    assert!(within(&var1, 0.0, 0.0).0);
    assert!(within(&cross, 0.0, 0.0).0);
}

#[test]
fn calibration_is_stable_under_more_samples() {
    let grid = GridSpec::new(1, 128, 8.0).unwrap();
    let pi = CorrelationMeasure::riesz(q(1, 3)).unwrap();
    let spec = RngSpec::new(8);
    let a = calibrate_noise(&pi, grid, 200, &mut spec.stream(0, Purpose::Calibration)).unwrap();
    let b = calibrate_noise(&pi, grid, 400, &mut spec.stream(1, Purpose::Calibration)).unwrap();
    let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
    assert!((a.constant - b.constant).abs() < 2.0 * se + 1e-12, "{a:?} {b:?}");
    let exact = calibrate_exact(&NoiseSynth::new(&pi, grid).unwrap());
    assert!((b.constant - exact).abs() < 3.0 * b.standard_error, "{} vs {exact}", b.constant);

    // a very wide gaussian leaves almost only the zero mode; still finite
    let wide = CorrelationMeasure::gaussian(qi(100)).unwrap();
    let c = calibrate_noise(&wide, grid, 50, &mut spec.stream(2, Purpose::Calibration)).unwrap();
    assert!(c.constant.is_finite() && c.constant > 0.0);
}
