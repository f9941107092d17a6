//! Closed-form solvers checked against iterative optimisers on the same
//! convex objectives, plus optimality certificates and recovery tests.

use lintsf::data::synth_affine;
use lintsf::linalg::{population_std, singular_values, Matrix};
use lintsf::models::{ForecastModel, LinearLayer, Normalization};
use lintsf::solvers::{
    solve_ols, solve_rowsum1, solve_sigma_bias, ClosedFormSolution, DesignPair, SolutionClass,
};
use lintsf::training::gradients;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const N: usize = 100;
const L: usize = 8;
const T: usize = 4;

fn noisy_design(seed: u64) -> DesignPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Matrix::from_fn(N, L, |_, _| rng.sample::<f64, _>(StandardNormal) + 0.3);
    let y = Matrix::from_fn(N, T, |i, t| {
        0.5 * x[(i, L - 1 - t)] - 0.2 * x[(i, 0)] + 0.7 + rng.sample::<f64, _>(StandardNormal)
    });
    DesignPair::new(x, y).unwrap()
}

/// Features `[X | extra]` where `extra` is either the constant 1 or σ(x).
fn features(d: &DesignPair, sigma: bool) -> Matrix {
    Matrix::from_fn(N, L + 1, |i, j| {
        if j < L {
            d.x[(i, j)]
        } else if sigma {
            population_std(d.x.row(i))
        } else {
            1.0
        }
    })
}

fn objective(f: &Matrix, theta: &Matrix, y: &Matrix) -> f64 {
    let r = f.matmul(theta).unwrap().sub(y).unwrap();
    r.as_slice().iter().map(|v| v * v).sum::<f64>() / (y.rows() * y.cols()) as f64
}

fn objective_gradient(f: &Matrix, theta: &Matrix, y: &Matrix) -> Matrix {
    let r = f.matmul(theta).unwrap().sub(y).unwrap();
    f.t_matmul(&r)
        .unwrap()
        .scale(2.0 / (y.rows() * y.cols()) as f64)
}

/// Removes the mean of the first `L` coefficients in every column, i.e.
/// projects onto the tangent space of "context weights sum to one".
fn project_tangent(g: &mut Matrix) {
    for t in 0..g.cols() {
        let m = (0..L).map(|j| g[(j, t)]).sum::<f64>() / L as f64;
        for j in 0..L {
            g[(j, t)] -= m;
        }
    }
}

/// Full-batch (projected) gradient descent with step `1/Lipschitz`.
fn gradient_descent(f: &Matrix, y: &Matrix, constrained: bool, steps: usize) -> Matrix {
    let smax = singular_values(f).unwrap()[0];
    let lr = (y.rows() * y.cols()) as f64 / (2.0 * smax * smax);
    let mut theta = Matrix::zeros(f.cols(), y.cols());
    if constrained {
        for t in 0..y.cols() {
            for j in 0..L {
                theta[(j, t)] = 1.0 / L as f64;
            }
        }
    }
    for _ in 0..steps {
        let mut g = objective_gradient(f, &theta, y);
        if constrained {
            project_tangent(&mut g);
        }
        theta = theta.sub(&g.scale(lr)).unwrap();
    }
    theta
}

fn stacked(s: &ClosedFormSolution) -> Matrix {
    Matrix::from_fn(
        L + 1,
        T,
        |j, t| if j < L { s.weight[(t, j)] } else { s.bias[t] },
    )
}

#[test]
fn ols_matches_gradient_descent_and_is_stationary() {
    let d = noisy_design(1);
    let f = features(&d, false);
    let s = solve_ols(&d).unwrap();
    let theta = gradient_descent(&f, &d.y, false, 20_000);
    let (closed, iterative) = (s.mse(&d).unwrap(), objective(&f, &theta, &d.y));
    assert!(closed <= iterative + 1e-9, "{closed} vs {iterative}");
    assert!((closed - iterative).abs() < 1e-6);
    let g = objective_gradient(&f, &stacked(&s), &d.y);
    assert!(g.max_abs() < 1e-6, "stationarity residual {}", g.max_abs());
}

#[test]
fn rowsum1_matches_projected_gradient_descent() {
    let d = noisy_design(2);
    let f = features(&d, false);
    let s = solve_rowsum1(&d).unwrap();
    assert_eq!(s.class, SolutionClass::RowSumOne);
    let theta = gradient_descent(&f, &d.y, true, 40_000);
    let (closed, iterative) = (s.mse(&d).unwrap(), objective(&f, &theta, &d.y));
    assert!((closed - iterative).abs() < 1e-7, "{closed} vs {iterative}");
    let mut g = objective_gradient(&f, &stacked(&s), &d.y);
    project_tangent(&mut g);
    assert!(g.max_abs() < 1e-6, "projected residual {}", g.max_abs());
    for r in 0..T {
        assert!((s.weight.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn sigma_bias_matches_projected_gradient_descent() {
    let d = noisy_design(3);
    let f = features(&d, true);
    let s = solve_sigma_bias(&d).unwrap();
    let theta = gradient_descent(&f, &d.y, true, 40_000);
    let (closed, iterative) = (s.mse(&d).unwrap(), objective(&f, &theta, &d.y));
    assert!((closed - iterative).abs() < 1e-6, "{closed} vs {iterative}");
    let mut g = objective_gradient(&f, &stacked(&s), &d.y);
    project_tangent(&mut g);
    assert!(g.max_abs() < 1e-6, "projected residual {}", g.max_abs());
}

#[test]
fn sigma_bias_matches_trained_linear_with_instance_norm() {
    // full-batch gradient descent on the native Linear+IN parameters
    let d = noisy_design(4);
    let eps = 1e-12;
    let centred = Matrix::from_fn(N, L + 1, |i, j| {
        let row = d.x.row(i);
        if j < L {
            row[j] - row.iter().sum::<f64>() / L as f64
        } else {
            population_std(row)
        }
    });
    let smax = singular_values(&centred).unwrap()[0];
    let lr = (N * T) as f64 / (2.0 * smax * smax);
    let mut model = ForecastModel::linear_in(LinearLayer::zeros(L, T), eps).unwrap();
    let mut p = model.params();
    for _ in 0..40_000 {
        let g = gradients(&model, &d.x, &d.y).unwrap();
        p.iter_mut().zip(&g).for_each(|(a, b)| *a -= lr * b);
        model.set_params(&p).unwrap();
    }
    let mut trained = 0.0;
    for i in 0..N {
        let out = model.forward(d.x.row(i)).unwrap();
        trained += out
            .iter()
            .zip(d.y.row(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    trained /= (N * T) as f64;
    let closed = solve_sigma_bias(&d).unwrap().mse(&d).unwrap();
    assert!((closed - trained).abs() < 1e-6, "{closed} vs {trained}");
}

#[test]
fn rowsum1_mse_is_invariant_under_row_centring() {
    let d = noisy_design(5);
    let s = solve_rowsum1(&d).unwrap();
    let mu: Vec<f64> = (0..N)
        .map(|i| d.x.row(i).iter().sum::<f64>() / L as f64)
        .collect();
    let xc = Matrix::from_fn(N, L, |i, j| d.x[(i, j)] - mu[i]);
    let yc = Matrix::from_fn(N, T, |i, t| d.y[(i, t)] - mu[i]);
    let centred = DesignPair::new(xc, yc).unwrap();
    assert!((s.mse(&d).unwrap() - s.mse(&centred).unwrap()).abs() < 1e-10);
}

#[test]
fn unconstrained_class_is_never_worse() {
    for seed in 10..15 {
        let d = noisy_design(seed);
        let ols = solve_ols(&d).unwrap().mse(&d).unwrap();
        let nn = solve_rowsum1(&d).unwrap().mse(&d).unwrap();
        assert!(ols <= nn + 1e-12);
    }
}

fn row_sum_one_matrix(rng: &mut ChaCha8Rng) -> Matrix {
    let mut a = Matrix::from_fn(T, L, |_, _| rng.random_range(-1.0..1.0));
    for t in 0..T {
        let shift = (1.0 - a.row(t).iter().sum::<f64>()) / L as f64;
        a.row_mut(t).iter_mut().for_each(|v| *v += shift);
    }
    a
}

#[test]
fn realizable_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = Matrix::from_fn(N, L, |_, _| rng.sample::<f64, _>(StandardNormal));
    let a = row_sum_one_matrix(&mut rng);
    let b: Vec<f64> = (0..T).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dot = |r: &[f64], t: usize| a.row(t).iter().zip(r).map(|(p, q)| p * q).sum::<f64>();

    let y = Matrix::from_fn(N, T, |i, t| dot(x.row(i), t) + b[t]);
    let s = solve_rowsum1(&DesignPair::new(x.clone(), y).unwrap()).unwrap();
    assert!(s.weight.max_abs_diff(&a) < 1e-7);
    assert!(s.bias.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-7));

    let y = Matrix::from_fn(N, T, |i, t| {
        let row = x.row(i);
        dot(row, t) + b[t] * population_std(row)
    });
    let s = solve_sigma_bias(&DesignPair::new(x, y).unwrap()).unwrap();
    assert!(s.weight.max_abs_diff(&a) < 1e-7);
    assert!(s.bias.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-7));
    let constant = s.predict(&[2.5; L]).unwrap();
    assert!(constant.iter().all(|v| (v - 2.5).abs() < 1e-12));
}

#[test]
fn noiseless_affine_data_is_recovered() {
    let s = synth_affine(16, 8, 200, 0.0, 3).unwrap();
    let sol = solve_ols(&s.data).unwrap();
    assert!(sol.weight.max_abs_diff(&s.a) < 1e-8);
    assert!(sol.bias.iter().zip(&s.b).all(|(p, q)| (p - q).abs() < 1e-8));
}

#[test]
fn noisy_recovery_matches_estimator_spread() {
    // The OLS coefficient error has standard deviation ≈ noise/√N for
    // standard normal inputs; compare against the spread over repeated draws.
    let (l, t, n, noise) = (4, 2, 10_000, 0.1);
    let predicted = noise / (n as f64).sqrt();
    let trials = 20;
    let mut errors = Vec::new();
    for seed in 0..trials {
        let s = synth_affine(l, t, n, noise, 100 + seed).unwrap();
        let sol = solve_ols(&s.data).unwrap();
        let e = sol.weight.sub(&s.a).unwrap();
        assert!(
            e.max_abs() < 5.0 * predicted,
            "error {} vs scale {predicted}",
            e.max_abs()
        );
        errors.extend_from_slice(e.as_slice());
    }
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    assert!(
        (rms / predicted - 1.0).abs() < 0.25,
        "rms {rms} vs {predicted}"
    );
}

#[test]
fn predictions_match_equivalent_native_models() {
    let d = noisy_design(7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let probes: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..L).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let check = |s: &ClosedFormSolution, m: &ForecastModel| {
        for x in &probes {
            let (p, q) = (s.predict(x).unwrap(), m.forward(x).unwrap());
            assert!(
                p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9),
                "{}",
                m.name()
            );
        }
    };
    let layer =
        |s: &ClosedFormSolution| LinearLayer::new(s.weight.clone(), s.bias.clone()).unwrap();

    let s = solve_ols(&d).unwrap();
    check(&s, &ForecastModel::linear(layer(&s)));
    let s = solve_rowsum1(&d).unwrap();
    check(&s, &ForecastModel::nlinear(layer(&s)));
    let s = solve_sigma_bias(&d).unwrap();
    let m = ForecastModel::new(
        lintsf::models::Architecture::Linear(layer(&s)),
        Normalization::InstanceNorm { eps: 1e-14 },
    )
    .unwrap();
    check(&s, &m);
}
