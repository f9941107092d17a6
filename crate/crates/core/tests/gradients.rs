//! Analytic gradients against central finite differences, for every
//! architecture and normalisation wrapper.

use lintsf::analysis::suite::random_model;
use lintsf::linalg::Matrix;
use lintsf::models::{
    init_model, ArchKind, ForecastModel, LinearLayer, ModelSpec, NormKind, Normalization,
    RevinAffine,
};
use lintsf::training::{gradients, mse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;

fn batch_loss(model: &ForecastModel, x: &Matrix, y: &Matrix) -> f64 {
    let pred = Matrix::from_rows(
        &(0..x.rows())
            .map(|i| model.forward(x.row(i)).unwrap())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    mse(&pred, y).unwrap()
}

/// Largest relative error between the analytic gradient and a central
/// difference, relative to the larger of the two magnitudes (floored so that
/// near-zero components compare absolutely).
fn max_relative_error(model: &ForecastModel, x: &Matrix, y: &Matrix) -> f64 {
    let analytic = gradients(model, x, y).unwrap();
    let base = model.params();
    let scale = analytic
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()))
        .max(1e-3);
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + STEP;
        probe.set_params(&p).unwrap();
        let up = batch_loss(&probe, x, y);
        p[k] = base[k] - STEP;
        probe.set_params(&p).unwrap();
        let down = batch_loss(&probe, x, y);
        let numeric = (up - down) / (2.0 * STEP);
        let denom = analytic[k].abs().max(numeric.abs()).max(1e-2 * scale);
        worst = worst.max((analytic[k] - numeric).abs() / denom);
    }
    worst
}

fn random_batch(l: usize, t: usize, rows: usize, rng: &mut ChaCha8Rng) -> (Matrix, Matrix) {
    let x = Matrix::from_fn(rows, l, |_, _| rng.random_range(-2.0..2.0));
    let y = Matrix::from_fn(rows, t, |_, _| rng.random_range(-2.0..2.0));
    (x, y)
}

fn check_spec(spec: ModelSpec, l: usize, t: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..10 {
        let model = random_model(spec, l, t, &mut rng).unwrap();
        let (x, y) = random_batch(l, t, 5, &mut rng);
        let err = max_relative_error(&model, &x, &y);
        assert!(err < 1e-4, "{spec} trial {trial}: relative error {err}");
    }
}

#[test]
fn linear_family() {
    for spec in [
        ModelSpec::LINEAR,
        ModelSpec::NLINEAR,
        ModelSpec::LINEAR_IN,
        ModelSpec::RLINEAR,
    ] {
        check_spec(spec, 8, 4);
    }
}

#[test]
fn dlinear_family() {
    for norm in [
        NormKind::None,
        NormKind::InstanceNorm,
        NormKind::RevIn,
        NormKind::NowNorm,
    ] {
        let spec = ModelSpec {
            arch: ArchKind::DLinear { kernel_size: 5 },
            norm,
        };
        check_spec(spec, 8, 4);
    }
}

#[test]
fn fits_family() {
    for norm in [
        NormKind::None,
        NormKind::InstanceNorm,
        NormKind::RevIn,
        NormKind::NowNorm,
    ] {
        let spec = ModelSpec {
            arch: ArchKind::Fits,
            norm,
        };
        check_spec(spec, 8, 4);
        check_spec(spec, 6, 8);
    }
}

#[test]
fn per_position_revin() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (l, t) = (8, 4);
    for _ in 0..10 {
        let base = random_model(ModelSpec::LINEAR, l, t, &mut rng).unwrap();
        let mut draw = |n: usize, lo: f64, hi: f64| {
            (0..n).map(|_| rng.random_range(lo..hi)).collect::<Vec<_>>()
        };
        let affine = RevinAffine::PerPosition {
            alpha_in: draw(l, 0.5, 1.5),
            beta_in: draw(l, -0.5, 0.5),
            alpha_out: draw(t, 0.5, 1.5),
            beta_out: draw(t, -0.5, 0.5),
        };
        let model =
            ForecastModel::new(base.arch, Normalization::RevIn { eps: 1e-5, affine }).unwrap();
        let (x, y) = random_batch(l, t, 5, &mut rng);
        let err = max_relative_error(&model, &x, &y);
        assert!(err < 1e-4, "relative error {err}");
    }
}

#[test]
fn linear_gradient_matches_closed_form() {
    // dW = 2/(B·T)·Eᵀ X, db = 2/(B·T)·Σ_rows E with E = XWᵀ + b − Y
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (l, t, b) = (6, 3, 7);
    let model = random_model(ModelSpec::LINEAR, l, t, &mut rng).unwrap();
    let (x, y) = random_batch(l, t, b, &mut rng);
    let g = gradients(&model, &x, &y).unwrap();
    let p = model.params();
    let w = Matrix::from_vec(t, l, p[..t * l].to_vec()).unwrap();
    let bias = &p[t * l..];
    let mut e = x.matmul_t(&w).unwrap().sub(&y).unwrap();
    for i in 0..b {
        e.row_mut(i).iter_mut().zip(bias).for_each(|(v, c)| *v += c);
    }
    let c = 2.0 / (b * t) as f64;
    let dw = e.t_matmul(&x).unwrap().scale(c);
    for (k, v) in dw.as_slice().iter().enumerate() {
        assert!((g[k] - v).abs() < 1e-12);
    }
    for j in 0..t {
        let db: f64 = (0..b).map(|i| e[(i, j)]).sum::<f64>() * c;
        assert!((g[t * l + j] - db).abs() < 1e-12);
    }
}

#[test]
fn gradient_vanishes_at_a_realizable_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (l, t) = (8, 4);
    let truth = init_model(ModelSpec::LINEAR, l, t, 11).unwrap();
    let x = Matrix::from_fn(20, l, |_, _| rng.random_range(-1.0..1.0));
    let y = Matrix::from_rows(
        &(0..20)
            .map(|i| truth.forward(x.row(i)).unwrap())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let g = gradients(&truth, &x, &y).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-9));
    let zero = ForecastModel::linear(LinearLayer::zeros(l, t));
    assert!(gradients(&zero, &x, &y)
        .unwrap()
        .iter()
        .any(|v| v.abs() > 1e-3));
}
