mod common;

use common::{max_abs, random_complex, random_samples};
use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::Eigh;
use rkhm::dynamics::{prediction_error_sweep, standardize_channels};
use rkhm::{
    delay_embed, gen_interacting, invariant_term, modal_decompose, perturb, pf_fit, predict_error, prediction_coords,
    BlockMatrix, Error, GaussianStream, InteractingSpec, ModalDecomposition, ScalarKernelSpec, StructuredSample, C64,
};

fn laplacian(a: f64, b: f64) -> f64 {
    (-(a - b).abs()).exp()
}

fn min_eigenvalue(b: &rkhm::Block) -> f64 {
    let mut f = Array2::zeros(b.matrix().raw_dim().set_f(true));
    f.assign(&b.hermitian_part().into_matrix());
    f.eigh(ndarray_linalg::UPLO::Lower).unwrap().0[0]
}

fn linear_series(perturb_seed: u64) -> Vec<StructuredSample> {
    let mut x = [1.0, 2.3];
    let mut xs = Vec::new();
    for _ in 0..=10 {
        xs.push(StructuredSample::from_scalars(&x).unwrap());
        x = [0.9 * x[0], 0.9 * x[1]];
    }
    perturb(&xs, 1e-6, perturb_seed).unwrap()
}

#[test]
fn in_sample_steps_are_interpolated() {
    let spec = ScalarKernelSpec::default();
    for seed in 0..3 {
        let xs = linear_series(seed);
        let model = pf_fit(&spec, &xs, 0.0).unwrap();
        assert_eq!(model.horizon(), 10);
        for t in 0..model.horizon() - 1 {
            let err = predict_error(&model, &xs[t], &xs[t + 1]).unwrap();
            assert!(err.trace().re <= 1e-6, "t = {t}: trace {}", err.trace().re);
        }
        let last = predict_error(&model, &xs[9], &xs[10]).unwrap();
        assert!(min_eigenvalue(&last) >= -1e-10);
    }
}

fn random_model(rng: &mut GaussianStream, k: usize) -> (Vec<StructuredSample>, rkhm::PfModel) {
    let t = 1 + k % 10;
    let m = 1 + k % 4;
    let d = 1 + k % 2;
    let xs = random_samples(rng, t + 1, m, d, 1.0);
    let eps = [0.0, 1e-3, 1e-1][k % 3];
    let model = pf_fit(&ScalarKernelSpec::default(), &xs, eps).unwrap();
    (xs, model)
}

#[test]
fn error_diagonal_matches_scalar_expansion() {
    let mut rng = GaussianStream::new(40);
    for k in 0..50 {
        let (_, model) = random_model(&mut rng, k);
        let m = model.m();
        let d = model.training[0].d();
        let q = random_samples(&mut rng, 2, m, d, 1.0);
        let err = predict_error(&model, &q[0], &q[1]).unwrap();
        let c = prediction_coords(&model, &q[0]).unwrap();
        let basis = model.basis();
        let kern = |a: &StructuredSample, i: usize, b: &StructuredSample, j: usize| {
            let (ea, eb) = (a.element(i), b.element(j));
            (-ea.iter().zip(eb.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>()).exp()
        };
        for j in 0..m {
            // ‖Σ_t Σ_i (c_t)_{i,j} φ̃(x_{t,i}) − φ̃(x_{S,j})‖²
            let mut total = C64::new(kern(&q[1], j, &q[1], j), 0.0);
            for (t, xt) in basis.iter().enumerate() {
                let ct = c.block(t);
                for i in 0..m {
                    total -= ct[(i, j)] * kern(xt, i, &q[1], j) * 2.0;
                    for (u, xu) in basis.iter().enumerate() {
                        let cu = c.block(u);
                        for l in 0..m {
                            total += ct[(i, j)].conj() * cu[(l, j)] * kern(xt, i, xu, l);
                        }
                    }
                }
            }
            let got = err[(j, j)];
            assert!(total.im.abs() < 1e-8);
            assert!((got.re - total.re).abs() <= 1e-8 * (1.0 + total.re.abs()), "model {k}, element {j}: {} vs {}", got.re, total.re);
        }
    }
}

#[test]
fn errors_are_hermitian_psd() {
    let mut rng = GaussianStream::new(41);
    for k in 0..20 {
        let (_, model) = random_model(&mut rng, k);
        let q = random_samples(&mut rng, 2, model.m(), model.training[0].d(), 1.0);
        let err = predict_error(&model, &q[0], &q[1]).unwrap();
        assert!(err.hermitian_deviation() == 0.0);
        assert!(min_eigenvalue(&err) >= -1e-10 * (1.0 + err.op_norm()));
    }
}

#[test]
fn larger_epsilon_lowers_the_rank() {
    let xs = gen_interacting(&InteractingSpec::new(10, 21, 0.01, 3)).unwrap();
    let spec = ScalarKernelSpec::default();
    let fine = pf_fit(&spec, &xs, 1e-4).unwrap();
    let coarse = pf_fit(&spec, &xs, 1e-1).unwrap();
    assert!(coarse.qr.total_rank() < fine.qr.total_rank());
}

#[test]
fn sweep_agrees_with_separate_fits() {
    let xs = gen_interacting(&InteractingSpec::new(6, 16, 0.01, 4)).unwrap();
    let spec = ScalarKernelSpec::default().with_jitter(1e-7, 9);
    let horizons: Vec<usize> = (1..=8).collect();
    for eps in [1e-4, 0.1] {
        let swept = prediction_error_sweep(&spec, &xs, eps, &horizons, &xs[14], &xs[15]).unwrap();
        for (&t, got) in horizons.iter().zip(&swept) {
            let model = pf_fit(&spec, &xs[..=t], eps).unwrap();
            let want = predict_error(&model, &xs[14], &xs[15]).unwrap();
            let got = got.as_ref().unwrap();
            assert!((got - &want).max_abs() <= 1e-8 * (1.0 + want.max_abs()), "T = {t}");
        }
    }
    assert!(prediction_error_sweep(&spec, &xs, 0.1, &[0], &xs[0], &xs[1]).is_err());
    assert!(prediction_error_sweep(&spec, &xs, 0.1, &[16], &xs[0], &xs[1]).is_err());
}

#[test]
fn out_of_sample_error_decreases_with_more_data() {
    let spec = ScalarKernelSpec::default();
    for seed in 0..3 {
        let xs = gen_interacting(&InteractingSpec::new(5, 46, 1e-3, seed)).unwrap();
        let traces: Vec<f64> = [5usize, 10, 20, 40]
            .iter()
            .map(|&t| {
                let model = pf_fit(&spec, &xs[..=t], 0.0).unwrap();
                predict_error(&model, &xs[44], &xs[45]).unwrap().trace().re
            })
            .collect();
        for w in traces.windows(2) {
            assert!(w[1] <= 1.1 * w[0], "seed {seed}: {traces:?}");
        }
    }
}

fn check_modal(model: &rkhm::PfModel, md: &ModalDecomposition) {
    let k = model.k_matrix.flat();
    let k_norm = model.k_matrix.op_norm().unwrap().max(1.0);
    for (t, lam) in md.eigenvalues.iter().enumerate() {
        let v = md.eigvec_matrix.column(t);
        let resid = k.dot(&v) - v.mapv(|z| z * lam);
        let rn = resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(rn <= 1e-8 * vn * k_norm, "eigenpair {t}: residual {rn}");
    }
    // the solve is backward stable, so the residual is small relative to ‖V‖·‖C‖;
    // relative to the target it is 1e-8 only for well-conditioned eigenvectors
    let resid = max_abs(&(md.reconstruct_target() - &md.target));
    let target_norm = max_abs(&md.target).max(1.0);
    let size = md.eigenvalues.len() as f64;
    assert!(resid <= 1e-13 * size * max_abs(&md.coeff_rows).max(1.0), "residual {resid}");
    if md.condition <= 1e6 {
        assert!(resid <= 1e-8 * target_norm, "residual {resid}");
    }
    assert!(md.eigenvalues.windows(2).all(|w| w[0].norm() >= w[1].norm()));
}

#[test]
fn modal_decomposition_of_random_models() {
    let mut rng = GaussianStream::new(42);
    let mut checked = 0;
    for k in 0..30 {
        let t = 1 + k % 6;
        let m = 1 + k % 3;
        let xs = random_samples(&mut rng, t + 1, m, 1, 1.0);
        let eps = [0.0, 0.05][k % 2];
        let model = pf_fit(&ScalarKernelSpec::default(), &xs, eps).unwrap();
        match modal_decompose(&model) {
            Ok(md) => {
                check_modal(&model, &md);
                checked += 1;
            }
            Err(Error::SingularEigvecMatrix { condition }) => assert!(condition > 1e12),
            Err(e) => panic!("{e:?}"),
        }
    }
    assert!(checked >= 20, "only {checked} decompositions succeeded");
}

#[test]
fn modal_decomposition_with_truncated_directions() {
    let xs = gen_interacting(&InteractingSpec::new(10, 21, 0.01, 0)).unwrap();
    let model = pf_fit(&ScalarKernelSpec::default(), &xs, 0.3).unwrap();
    assert!(model.qr.total_rank() < 200);
    let md = modal_decompose(&model).unwrap();
    check_modal(&model, &md);
}

#[test]
fn diagonal_operator_has_coordinate_eigenvectors() {
    let xs = random_samples(&mut GaussianStream::new(43), 4, 1, 1, 1.0);
    let mut model = pf_fit(&ScalarKernelSpec::default(), &xs, 0.0).unwrap();
    let diag = [0.3, 0.9, -0.5];
    model.k_matrix = BlockMatrix::from_fn(3, 3, 1, |i, j| {
        rkhm::Block::diag(&[C64::new(if i == j { diag[i] } else { 0.0 }, 0.0)])
    })
    .unwrap();
    let md = modal_decompose(&model).unwrap();
    let order = [1usize, 2, 0];
    for (t, &i) in order.iter().enumerate() {
        assert!((md.eigenvalues[t] - C64::new(diag[i], 0.0)).norm() < 1e-14);
        let v = md.eigvec_matrix.column(t);
        assert!((v[i].norm() - 1.0).abs() < 1e-14);
        // C = M up to the phase of the eigenvector
        assert!((md.coeff_rows[[t, 0]] * v[i] - md.target[[i, 0]]).norm() < 1e-12);
    }
}

/// `Σ_{t∈band} c_t*·(a_t*)^s·⟨v_t, v_t⟩·a_t^s·c_t` with explicit m×m blocks.
fn explicit_band_sum(md: &ModalDecomposition, s: i32, delta: f64) -> Array2<C64> {
    let m = md.coeff_rows.ncols();
    let mut acc = Array2::<C64>::zeros((m, m));
    for t in 0..md.eigenvalues.len() {
        if (md.eigenvalues[t].norm() - 1.0).abs() > delta {
            continue;
        }
        let mut a = Array2::<C64>::zeros((m, m));
        a[[0, 0]] = md.eigenvalues[t].powi(s);
        let mut vv = Array2::<C64>::zeros((m, m));
        vv[[0, 0]] = md.eigvec_matrix.column(t).iter().map(|z| z.conj() * z).sum();
        let mut c = Array2::<C64>::zeros((m, m));
        c.row_mut(0).assign(&md.coeff_rows.row(t));
        let c_h = c.t().mapv(|z| z.conj());
        let a_h = a.t().mapv(|z| z.conj());
        acc = acc + c_h.dot(&a_h).dot(&vv).dot(&a).dot(&c);
    }
    acc
}

#[test]
fn invariant_term_is_the_unit_band_sum() {
    let mut rng = GaussianStream::new(44);
    let n = 6;
    let m = 3;
    let angles = [0.0, 0.4, -1.3];
    let mut eigenvalues: Vec<C64> = angles.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    eigenvalues.extend([C64::new(0.5, 0.1), C64::new(-0.3, 0.0), C64::new(0.0, 0.0)]);
    let md = ModalDecomposition {
        eigenvalues,
        eigvec_matrix: random_complex(&mut rng, n, n),
        coeff_rows: random_complex(&mut rng, n, m),
        target: Array2::zeros((n, m)),
        condition: 1.0,
    };
    let c_inv = invariant_term(&md, 0.01).unwrap();
    for s in 0..=5 {
        let sum = explicit_band_sum(&md, s, 0.01);
        assert!(max_abs(&(sum - c_inv.matrix())) < 1e-12, "s = {s}");
    }
    assert!(c_inv.hermitian_deviation() < 1e-14);
    assert!(min_eigenvalue(&c_inv) >= -1e-12);
}

#[test]
fn invariant_term_of_a_fitted_model_is_psd() {
    let xs = gen_interacting(&InteractingSpec::new(10, 21, 0.01, 1)).unwrap();
    let model = pf_fit(&ScalarKernelSpec::default(), &xs, 0.1).unwrap();
    let md = modal_decompose(&model).unwrap();
    let c_inv = invariant_term(&md, 0.01).unwrap();
    assert!(!md.unit_band(0.01).is_empty());
    assert!(c_inv.hermitian_deviation() < 1e-10 * c_inv.max_abs());
    assert!(min_eigenvalue(&c_inv) >= -1e-10 * c_inv.op_norm());
    let s0 = explicit_band_sum(&md, 0, 0.01);
    assert!(max_abs(&(s0 - c_inv.matrix())) < 1e-10 * c_inv.max_abs());
}

#[test]
fn temperature_style_pipeline() {
    let mut rng = GaussianStream::new(45);
    let mut raw: Vec<Vec<f64>> = (0..169)
        .map(|t| {
            let day = (t as f64 * 2.0 * std::f64::consts::PI / 24.0).sin();
            vec![20.0 + 2.0 * day + rng.next_normal(0.1), 10.0 + 6.0 * day + rng.next_normal(0.5)]
        })
        .collect();
    let noisy: Vec<Vec<f64>> = perturb(
        &raw.iter().map(|y| StructuredSample::from_scalars(y).unwrap()).collect::<Vec<_>>(),
        0.2,
        7,
    )
    .unwrap()
    .iter()
    .map(|x| x.to_flat())
    .collect();
    raw = noisy;
    standardize_channels(&mut raw).unwrap();
    let xs = delay_embed(&raw, 10).unwrap();
    assert_eq!(xs.len(), 160);
    assert_eq!(xs[0].m(), 20);
    let model = pf_fit(&ScalarKernelSpec::default(), &xs[..151], 0.5).unwrap();
    assert_eq!(model.horizon(), 150);
    let md = modal_decompose(&model).unwrap();
    let c_inv = invariant_term(&md, 0.01).unwrap();
    assert_eq!(c_inv.dim(), 20);
    assert!(c_inv.hermitian_deviation() <= 1e-10 * c_inv.max_abs().max(1e-300));
    assert!(min_eigenvalue(&c_inv) >= -1e-10 * c_inv.op_norm().max(1.0));
}

#[test]
fn series_helpers() {
    let ys: Vec<Vec<f64>> = (0..5).map(|t| vec![t as f64, -(t as f64)]).collect();
    let xs = delay_embed(&ys, 2).unwrap();
    assert_eq!(xs.len(), 4);
    assert_eq!(xs[3].to_flat(), vec![3.0, -3.0, 4.0, -4.0]);
    let p1 = perturb(&xs, 0.1, 3).unwrap();
    assert_eq!(p1, perturb(&xs, 0.1, 3).unwrap());
    let flat = p1.iter().flat_map(|x| x.to_flat()).collect::<Vec<_>>();
    let mut sorted = flat.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(sorted.windows(2).all(|w| w[0] < w[1]));
    let mut constant = vec![vec![1.0], vec![1.0]];
    assert!(standardize_channels(&mut constant).is_err());
    let _ = laplacian(0.0, 1.0);
}
