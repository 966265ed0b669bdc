use std::f64::consts::PI;

use srdae_core::bernstein::BernsteinFunction;
use srdae_core::correlation::CorrelationMeasure;
use srdae_core::fit::mean_se;
use srdae_core::grid::{lp_norm, GridSpec, SymbolKind};
use srdae_core::rational::q;
use srdae_core::solver::{
    mass_probe, nonnegativity_probe, run, semigroup_apply, InitialCondition, ModelSpec,
    NoiseCoupling, Nonlinearity, RunOptions, Stepper, FieldState,
};
use srdae_core::stochastics::{NoiseSynth, RngSpec};

fn catalog() -> Vec<BernsteinFunction> {
    vec![
        BernsteinFunction::stable(0.5).unwrap(),
        BernsteinFunction::stable(1.0).unwrap(),
        BernsteinFunction::stable_sum(0.3, 0.7).unwrap(),
        BernsteinFunction::stable_log(0.5, 0.3).unwrap(),
        BernsteinFunction::relativistic(0.5, 1.0).unwrap(),
        BernsteinFunction::conjugate_geometric(1.0).unwrap(),
    ]
}

fn linear_model(phi: BernsteinFunction, u0: InitialCondition) -> ModelSpec {
    ModelSpec {
        phi,
        pi: CorrelationMeasure::dirac(),
        gamma: 0.25,
        zeta: 1.0,
        xi: 0.0,
        drift: vec![0.0],
        nonlinearity: Nonlinearity::off(),
        m: 10.0,
        u0,
        coupling: NoiseCoupling::Multiplicative,
        symbol: SymbolKind::Lattice,
    }
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn semigroup_identity_mode_and_contraction() {
    let grid = GridSpec::new(1, 64, 2.0 * PI).unwrap();
    let phi = BernsteinFunction::stable(0.5).unwrap();
    let field: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
    for kind in [SymbolKind::Continuous, SymbolKind::Lattice] {
        assert_eq!(semigroup_apply(&phi, 0.0, &field, &grid, kind).unwrap(), field);
        let mut prev = lp_norm(&grid, &field, 2.0);
        let mean0: f64 = field.iter().sum();
        for t in [0.01, 0.1, 1.0, 10.0] {
            let v = semigroup_apply(&phi, t, &field, &grid, kind).unwrap();
            let norm = lp_norm(&grid, &v, 2.0);
            assert!(norm <= prev + 1e-12);
            prev = norm;
            assert!((v.iter().sum::<f64>() - mean0).abs() < 1e-9 * mean0);
        }
    }
    // cos(3x) is an eigenfunction with eigenvalue φ(9) = 3
    let mode: Vec<f64> = (0..64).map(|i| (3.0 * grid.position(i)[0]).cos()).collect();
    let out = semigroup_apply(&phi, 0.2, &mode, &grid, SymbolKind::Continuous).unwrap();
    let factor = (-0.2f64 * 3.0).exp();
    for (o, m) in out.iter().zip(&mode) {
        assert!((o - factor * m).abs() < 1e-13);
    }
    assert!(semigroup_apply(&phi, -1.0, &mode, &grid, SymbolKind::Lattice).is_err());
}

#[test]
fn linear_stepping_matches_one_shot() {
    let grid = GridSpec::new(1, 256, 16.0).unwrap();
    let steps = 200;
    let dt = 1.0 / 256.0;
    for phi in catalog() {
        for kind in [SymbolKind::Lattice, SymbolKind::Continuous] {
            let mut model = linear_model(phi.clone(), InitialCondition::Bump { amplitude: 1.0, width: 1.0 });
            model.symbol = kind;
            let stepper = Stepper::new(model.clone(), grid, dt, 0.0, 1e6).unwrap();
            let u0 = model.u0.build(&grid).unwrap();
            let mut state = FieldState { values: u0.clone(), time: 0.0 };
            let mut rng = RngSpec::new(0).stream(0, srdae_core::stochastics::Purpose::Noise);
            for s in 1..=steps {
                state = stepper.step(&state, s, &mut rng).unwrap();
            }
            let exact = semigroup_apply(&phi, steps as f64 * dt, &u0, &grid, kind).unwrap();
            let err = max_rel_diff(&state.values, &exact);
            assert!(err < 1e-10, "{phi} {kind:?}: {err}");
        }
    }
}

#[test]
fn lattice_flow_preserves_positivity() {
    let grid = GridSpec::new(1, 256, 16.0).unwrap();
    for phi in catalog() {
        let model = linear_model(phi, InitialCondition::Bump { amplitude: 1.0, width: 0.5 });
        let mut options = RunOptions::new(1.0, 1.0 / 64.0, 1);
        options.calibration = Some(1.0);
        let recs = run(&model, grid, &RngSpec::new(1), &options).unwrap();
        let summary = nonnegativity_probe(&recs).unwrap();
        assert!(summary.global_min >= -1e-12, "{}", summary.global_min);
    }
}

#[test]
fn reaction_matches_ode_on_constant_data() {
    // u' = −ζ u² from u₀ = 2, exact u = 2/(1 + 2ζt)
    let grid = GridSpec::new(1, 16, 1.0).unwrap();
    let mut model = linear_model(BernsteinFunction::stable(0.5).unwrap(), InitialCondition::Constant(2.0));
    model.zeta = 1.5;
    model.nonlinearity = Nonlinearity { lambda_sd: 1.0, c_sd: 1.0, ..Nonlinearity::off() };
    let dt = 1e-4;
    let mut options = RunOptions::new(0.5, dt, 1);
    options.probe_points = vec![3];
    options.calibration = Some(1.0);
    let rec = &run(&model, grid, &RngSpec::new(1), &options).unwrap()[0];
    let series: Vec<f64> = rec.probe_values.iter().map(|r| r[0]).collect();
    assert!(series.windows(2).all(|w| w[1] < w[0]));
    let exact = 2.0 / (1.0 + 2.0 * 1.5 * 0.5);
    assert!((series.last().unwrap() - exact).abs() < 1e-3, "{}", series.last().unwrap());
    // deterministic dissipative flow: L¹ mass nonincreasing
    assert!(rec.diagnostics.windows(2).all(|w| w[1].mass <= w[0].mass + 1e-15));
}

#[test]
fn mass_nonincreasing_with_dissipation() {
    let grid = GridSpec::new(1, 128, 16.0).unwrap();
    let mut model = linear_model(
        BernsteinFunction::stable(0.75).unwrap(),
        InitialCondition::Bump { amplitude: 3.0, width: 1.5 },
    );
    model.nonlinearity = Nonlinearity { lambda_sd: 1.0, c_sd: 1.0, ..Nonlinearity::off() };
    let mut options = RunOptions::new(1.0, 1.0 / 256.0, 1);
    options.calibration = Some(1.0);
    let rec = &run(&model, grid, &RngSpec::new(2), &options).unwrap()[0];
    let masses: Vec<f64> = rec.diagnostics.iter().map(|d| d.mass).collect();
    assert!(masses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let probe = mass_probe(std::slice::from_ref(rec)).unwrap();
    assert!(probe.per_path[0].dissipation > 0.0);

    // doubling u₀ doubles the mass of the linear part
    let mut lin = linear_model(model.phi.clone(), InitialCondition::Bump { amplitude: 3.0, width: 1.5 });
    let a = &run(&lin, grid, &RngSpec::new(2), &options).unwrap()[0];
    lin.u0 = InitialCondition::Bump { amplitude: 6.0, width: 1.5 };
    let b = &run(&lin, grid, &RngSpec::new(2), &options).unwrap()[0];
    let (ma, mb) = (a.diagnostics.last().unwrap().mass, b.diagnostics.last().unwrap().mass);
    assert!((mb - 2.0 * ma).abs() < 1e-12 * mb);
}

#[test]
fn zero_initial_data_stays_zero() {
    let grid = GridSpec::new(1, 64, 8.0).unwrap();
    let mut model = linear_model(BernsteinFunction::stable(0.5).unwrap(), InitialCondition::Constant(0.0));
    model.xi = 1.0;
    model.pi = CorrelationMeasure::riesz(q(1, 3)).unwrap();
    model.nonlinearity = Nonlinearity {
        lambda_sd: 1.0,
        lambda_sm: 0.125,
        c_sd: 1.0,
        c_sm: 1.0,
        ..Nonlinearity::off()
    };
    let options = RunOptions::new(0.25, 1.0 / 256.0, 3);
    for rec in run(&model, grid, &RngSpec::new(3), &options).unwrap() {
        assert!(rec.diagnostics.iter().all(|d| d.sup == 0.0));
    }
}

#[test]
fn guard_trips_without_dissipation() {
    let grid = GridSpec::new(1, 64, 8.0).unwrap();
    let mut model = linear_model(
        BernsteinFunction::stable(0.5).unwrap(),
        InitialCondition::Bump { amplitude: 1.0, width: 1.0 },
    );
    model.xi = 1.0;
    model.m = 1e9;
    model.pi = CorrelationMeasure::dirac();
    model.nonlinearity = Nonlinearity { lambda_sm: 1.0, c_sm: 200.0, ..Nonlinearity::off() };
    let options = RunOptions::new(1.0, 1.0 / 256.0, 8);
    let recs = run(&model, grid, &RngSpec::new(4), &options).unwrap();
    let trips = recs.iter().filter(|r| r.blowup.is_some()).count();
    assert!(trips > 0);
}

#[test]
fn additive_variance_matches_spectral_sum() {
    let grid = GridSpec::new(1, 128, 8.0).unwrap();
    let phi = BernsteinFunction::stable(0.5).unwrap();
    let mut model = linear_model(phi.clone(), InitialCondition::Constant(0.0));
    model.pi = CorrelationMeasure::riesz(q(1, 3)).unwrap();
    model.xi = 1.0;
    model.coupling = NoiseCoupling::Additive(1.0);
    let dt = 1.0 / 128.0;
    let steps = 64;
    let mut options = RunOptions::new(steps as f64 * dt, dt, 200);
    options.calibration_samples = 128;
    let recs = run(&model, grid, &RngSpec::new(5), &options).unwrap();
    let kappa = recs[0].calibration;
    let synth = NoiseSynth::new(&model.pi, grid).unwrap();
    let symbols: Vec<f64> = grid
        .xi_squared(SymbolKind::Lattice)
        .into_iter()
        .map(|x| phi.symbol(x))
        .collect();
    let theory: f64 = synth
        .weights()
        .iter()
        .zip(&symbols)
        .map(|(w, s)| w * (1..=steps).map(|m| (-2.0 * m as f64 * dt * s).exp()).sum::<f64>())
        .sum::<f64>()
        * kappa
        * dt
        / grid.len() as f64;
    // re-run with snapshots to read the final field
    options.snapshot_every = Some(steps);
    let recs = run(&model, grid, &RngSpec::new(5), &options).unwrap();
    let per_path: Vec<f64> = recs
        .iter()
        .map(|r| {
            let u = &r.snapshots.last().unwrap().values;
            u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64
        })
        .collect();
    let (m, se) = mean_se(&per_path);
    assert!((m - theory).abs() <= 3.0 * se, "{m} vs {theory} ± {se}");
}

#[test]
fn runs_are_deterministic_and_cutoff_consistent() {
    let grid = GridSpec::new(1, 64, 8.0).unwrap();
    let mut model = linear_model(
        BernsteinFunction::stable(1.0).unwrap(),
        InitialCondition::Bump { amplitude: 1.0, width: 1.0 },
    );
    model.xi = 1.0;
    model.pi = CorrelationMeasure::riesz(q(1, 3)).unwrap();
    model.nonlinearity = Nonlinearity {
        lambda_sd: 1.0,
        lambda_sm: 0.125,
        c_sd: 1.0,
        c_sm: 0.5,
        ..Nonlinearity::off()
    };
    let mut options = RunOptions::new(0.25, 1.0 / 512.0, 4);
    options.probe_points = vec![10, 32];
    let a = run(&model, grid, &RngSpec::new(6), &options).unwrap();
    let b = run(&model, grid, &RngSpec::new(6), &options).unwrap();
    assert_eq!(a, b);
    let max_sup = a
        .iter()
        .flat_map(|r| r.diagnostics.iter().map(|d| d.sup))
        .fold(0.0, f64::max);
    assert!(max_sup < model.m);
    model.m *= 2.0;
    let c = run(&model, grid, &RngSpec::new(6), &options).unwrap();
    assert_eq!(a, c);
}

#[test]
fn probe_refuses_signed_data() {
    let grid = GridSpec::new(1, 16, 1.0).unwrap();
    let model = linear_model(BernsteinFunction::stable(1.0).unwrap(), InitialCondition::Constant(1.0));
    let mut options = RunOptions::new(0.1, 0.05, 1);
    options.calibration = Some(1.0);
    let mut recs = run(&model, grid, &RngSpec::new(1), &options).unwrap();
    recs[0].initial_min = -0.5;
    assert!(nonnegativity_probe(&recs).is_err());
    let mut signed = model.clone();
    signed.u0 = InitialCondition::Constant(-1.0);
    assert!(run(&signed, grid, &RngSpec::new(1), &options).is_err());
}
