//! Perron-Frobenius operator estimation for interacting dynamical systems.
//!
//! Given observations `x_0, …, x_T`, the basis `φ(x_0), …, φ(x_{T−1})` is
//! orthonormalized (`Q_T = W_T·R_inv`) and the operator is represented by
//! `K_T = Q_T*·[φ(x_1), …, φ(x_T)]·R_inv = R_inv*·G_shift·R_inv` with
//! `G_shift[u][t] = k(x_u, x_{t+1})`. Predictions, matrix-valued errors and
//! the modal decomposition are all computed from blocks.

use ndarray::{concatenate, s, Array2, Axis};
use ndarray_linalg::{Eig, Factorize, Solve, QR, SVD};

use crate::algebra::{adjoint, herm_eig_flat, lapack_copy, spectral_apply, unflatten, Block, BlockMatrix, BlockVector, C64};
use crate::datagen::GaussianStream;
use crate::error::{Error, Result};
use crate::kernel::{
    cross_gram, gram, kernel_column, matrix_kernel_eval, GramMatrix, ScalarKernelSpec,
    StructuredSample,
};
use crate::orthonorm::{rkhm_qr, QrFactors};

/// Negative eigenvalues of a prediction error down to `−PSD_TOL·(1 + λ_max)` are clamped.
pub const PSD_TOL: f64 = 1e-10;
/// Largest accepted condition number of the eigenvector matrix.
pub const MAX_EIGVEC_CONDITION: f64 = 1e12;
/// Default half-width of the band around the unit circle.
pub const DEFAULT_UNIT_BAND: f64 = 0.01;

/// Fitted operator `K_T` with the factorization it was built from.
#[derive(Debug, Clone)]
pub struct PfModel {
    pub k_matrix: BlockMatrix,
    pub qr: QrFactors,
    /// Gram matrix of `x_0, …, x_{T−1}`.
    pub gram: GramMatrix,
    /// `x_0, …, x_T`.
    pub training: Vec<StructuredSample>,
    pub spec: ScalarKernelSpec,
    pub epsilon: f64,
}

impl PfModel {
    /// Number of transitions T.
    pub fn horizon(&self) -> usize {
        self.training.len() - 1
    }

    pub fn m(&self) -> usize {
        self.gram.m()
    }

    /// The basis samples `x_0, …, x_{T−1}`.
    pub fn basis(&self) -> &[StructuredSample] {
        &self.training[..self.horizon()]
    }

    fn check_sample(&self, x: &StructuredSample) -> Result<()> {
        let x0 = &self.training[0];
        if x.m() != x0.m() || x.d() != x0.d() {
            return Err(Error::DimensionMismatch(format!(
                "sample of shape ({}, {}) for a model of shape ({}, {})",
                x.m(),
                x.d(),
                x0.m(),
                x0.d()
            )));
        }
        Ok(())
    }
}

pub fn pf_fit(spec: &ScalarKernelSpec, series: &[StructuredSample], epsilon: f64) -> Result<PfModel> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two observations, got {}",
            series.len()
        )));
    }
    let t_len = series.len() - 1;
    let basis = &series[..t_len];
    let g = gram(spec, basis)?;
    let qr = rkhm_qr(&g, epsilon)?;
    let g_shift = cross_gram(spec, basis, &series[1..])?;
    // With F the retained eigenvectors of the normalized blocks, R_inv = F·Z* for
    // Z = R_inv*·F, so K_T = Z·(F*·G_shift·F)·Z* costs O((mT)²·rank).
    let kept = basis_columns(&qr, true);
    let z = adjoint(&qr.r_inv.flat().view()).dot(&kept);
    let core = adjoint(&kept.view()).dot(&g_shift.flat().dot(&kept));
    let k_matrix = unflatten(&z.dot(&core).dot(&adjoint(&z.view())), qr.m())?;
    if !k_matrix.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(PfModel {
        k_matrix,
        qr,
        gram: g,
        training: series.to_vec(),
        spec: *spec,
        epsilon,
    })
}

/// Coefficients `c` with `Q_T·K_T·Q_T*·φ(x_prev) = Σ_t φ(x_t)·c_t`, namely
/// `c = R_inv·K_T·R_inv*·W_T*φ(x_prev)`.
pub fn prediction_coords(model: &PfModel, x_prev: &StructuredSample) -> Result<BlockVector> {
    model.check_sample(x_prev)?;
    let g_prev = kernel_column(&model.spec, model.basis(), x_prev)?;
    let q_coords = model.qr.r_inv.adjoint().dot_vec(&g_prev)?;
    let evolved = model.k_matrix.dot_vec(&q_coords)?;
    model.qr.r_inv.dot_vec(&evolved)
}

/// Symmetrizes and clamps small negative eigenvalues of an error block.
fn clamp_psd(a: &Block) -> Result<Block> {
    let h = a.hermitian_part();
    let eig = herm_eig_flat(&h.view())?;
    let tol = PSD_TOL * (1.0 + eig.values[0].max(0.0));
    if !eig.values.iter().any(|&l| l < 0.0 && l >= -tol) {
        return Ok(h);
    }
    let clamped = spectral_apply(&eig.vectors.view(), &eig.values, |_, l| {
        if l < 0.0 && l >= -tol {
            0.0
        } else {
            l
        }
    });
    Block::from_array(clamped)
}

/// `k(x_now, x_now) − c*ḡ − ḡ*c + c*·G·c`, symmetrized and clamped.
fn error_from_coords(k_now: &Block, c: &BlockVector, g_now: &BlockVector, g: &BlockMatrix) -> Result<Block> {
    let cross = c.inner(g_now)?;
    let quad = c.inner(&g.dot_vec(c)?)?;
    let err = &(&(k_now - &cross) - &cross.adjoint()) + &quad;
    if !err.is_finite() {
        return Err(Error::NonFinite);
    }
    clamp_psd(&err)
}

/// Matrix-valued prediction error `|φ(x_now) − Q_T·K_T·Q_T*·φ(x_prev)|²`.
///
/// Its (j, j) entry is the scalar-kernel prediction error of element j.
pub fn predict_error(model: &PfModel, x_prev: &StructuredSample, x_now: &StructuredSample) -> Result<Block> {
    model.check_sample(x_now)?;
    let c = prediction_coords(model, x_prev)?;
    let g_now = kernel_column(&model.spec, model.basis(), x_now)?;
    let k_now = matrix_kernel_eval(&model.spec, x_now, x_now)?;
    error_from_coords(&k_now, &c, &g_now, &model.gram.g)
}

fn leading_blocks(v: &BlockVector, n: usize) -> Result<BlockVector> {
    let m = v.block_dim();
    BlockVector::from_flat(v.flat().slice(s![..n * m, ..]).to_owned(), m)
}

/// Prediction errors of the models fitted on `x_0, …, x_T` for every T in `horizons`.
///
/// The factorization of a prefix is the leading part of the factorization of
/// the whole series, so one decomposition serves all horizons. If it fails,
/// each horizon is fitted on its own and failures are reported per horizon.
pub fn prediction_error_sweep(
    spec: &ScalarKernelSpec,
    series: &[StructuredSample],
    epsilon: f64,
    horizons: &[usize],
    x_prev: &StructuredSample,
    x_now: &StructuredSample,
) -> Result<Vec<Result<Block>>> {
    let t_max = match horizons.iter().max() {
        Some(&t) => t,
        None => return Ok(Vec::new()),
    };
    if horizons.contains(&0) || series.len() <= t_max {
        return Err(Error::InsufficientData(format!(
            "horizons up to {} need {} observations and must be positive, got {}",
            t_max,
            t_max + 1,
            series.len()
        )));
    }
    let basis = &series[..t_max];
    let g = gram(spec, basis)?;
    let qr = match rkhm_qr(&g, epsilon) {
        Ok(qr) => qr,
        Err(_) => {
            return Ok(horizons
                .iter()
                .map(|&t| pf_fit(spec, &series[..=t], epsilon).and_then(|model| predict_error(&model, x_prev, x_now)))
                .collect())
        }
    };
    let g_shift = cross_gram(spec, basis, &series[1..=t_max])?;
    let g_prev = kernel_column(spec, basis, x_prev)?;
    let g_now = kernel_column(spec, basis, x_now)?;
    let k_now = matrix_kernel_eval(spec, x_now, x_now)?;
    Ok(horizons
        .iter()
        .map(|&t| {
            let r_inv = qr.r_inv.leading(t, t)?;
            let r_inv_h = r_inv.adjoint();
            let q_coords = r_inv_h.dot_vec(&leading_blocks(&g_prev, t)?)?;
            let shifted = g_shift.leading(t, t)?.dot_vec(&r_inv.dot_vec(&q_coords)?)?;
            let c = r_inv.dot_vec(&r_inv_h.dot_vec(&shifted)?)?;
            error_from_coords(&k_now, &c, &leading_blocks(&g_now, t)?, &g.g.leading(t, t)?)
        })
        .collect())
}

/// Eigen-structure of `K_T` together with the expansion of `Q_T*·φ(x_0)`.
#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    /// Sorted by descending modulus, then by argument.
    pub eigenvalues: Vec<C64>,
    /// mT×mT; column t is the unit eigenvector `v_t`.
    pub eigvec_matrix: Array2<C64>,
    /// mT×m; row t is the first row of `c_t` (the other rows of `c_t` are zero).
    pub coeff_rows: Array2<C64>,
    /// `Q_T*·φ(x_0)` flattened to mT×m.
    pub target: Array2<C64>,
    /// Condition number of the nonsingular part of the eigenvector matrix.
    pub condition: f64,
}

fn orthonormal_columns(a: Array2<C64>) -> Result<Array2<C64>> {
    if a.ncols() == 0 {
        return Ok(a);
    }
    let (q, _) = lapack_copy(&a.view()).qr()?;
    Ok(q)
}

/// Block-diagonal matrix of selected columns of the per-step eigenbases.
fn basis_columns(qr: &QrFactors, retained: bool) -> Array2<C64> {
    let m = qr.m();
    let widths: Vec<usize> = qr
        .ranks
        .iter()
        .map(|&r| if retained { r } else { m - r })
        .collect();
    let total: usize = widths.iter().sum();
    let mut out = Array2::zeros((qr.n() * m, total));
    let mut col = 0;
    for (t, basis) in qr.bases.iter().enumerate() {
        let range = if retained { 0..qr.ranks[t] } else { qr.ranks[t]..m };
        let w = widths[t];
        out.slice_mut(s![t * m..(t + 1) * m, col..col + w])
            .assign(&basis.matrix().slice(s![.., range]));
        col += w;
    }
    out
}

fn condition_number(a: &Array2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(1.0);
    }
    let (_, sv, _) = lapack_copy(&a.view()).svd(false, false)?;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

fn solve_columns(a: &Array2<C64>, rhs: &Array2<C64>) -> Result<Array2<C64>> {
    let lu = lapack_copy(&a.view()).factorize()?;
    let mut out = Array2::zeros(rhs.raw_dim());
    for (j, col) in rhs.axis_iter(Axis(1)).enumerate() {
        let x = lu.solve(&col.to_owned())?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Eigen-decomposes `K_T` and solves `V·C = Q_T*·φ(x_0)`.
///
/// Directions truncated during orthonormalization form an exact null space
/// of `K_T`: with E the dropped eigenvectors of the normalized blocks,
/// `B̂·E = 0` and `(R − B)·B̂·E = 0`, so `R_inv·E = 0`. The columns of E are
/// orthonormal and orthogonal to the range of `R_inv*`, which contains the
/// range of `K_T`. Only the restriction of `K_T` to that range goes through
/// the general eigensolver; the zero eigenvalues get the columns of E.
pub fn modal_decompose(model: &PfModel) -> Result<ModalDecomposition> {
    let qr = &model.qr;
    let size = qr.n() * qr.m();
    let m = qr.m();
    let k = model.k_matrix.flat();
    let g0 = BlockVector::from_flat(model.gram.g.flat().slice(s![.., ..m]).to_owned(), m)?;
    let target = qr.r_inv.adjoint().dot_vec(&g0)?.flat().clone();

    let rank = qr.total_rank();
    let (range_basis, null_basis) = if rank == size {
        (None, Array2::zeros((size, 0)))
    } else {
        let kept = basis_columns(qr, true);
        let range = orthonormal_columns(adjoint(&qr.r_inv.flat().view()).dot(&kept))?;
        (Some(range), basis_columns(qr, false))
    };

    let reduced = match &range_basis {
        None => k.clone(),
        Some(u) => adjoint(&u.view()).dot(k).dot(u),
    };
    let (values, vectors) = if reduced.is_empty() {
        (Vec::new(), Array2::zeros((0, 0)))
    } else {
        let (vals, vecs) = lapack_copy(&reduced.view()).eig()?;
        (vals.to_vec(), vecs)
    };
    let condition = condition_number(&vectors)?;
    if !(condition <= MAX_EIGVEC_CONDITION) {
        return Err(Error::SingularEigvecMatrix { condition });
    }

    let (eigvecs, coeffs) = match &range_basis {
        None => (vectors.clone(), solve_columns(&vectors, &target)?),
        Some(u) => {
            let projected = adjoint(&u.view()).dot(&target);
            let top = if vectors.is_empty() {
                Array2::zeros((0, m))
            } else {
                solve_columns(&vectors, &projected)?
            };
            let bottom = adjoint(&null_basis.view()).dot(&target);
            let v = concatenate![Axis(1), u.dot(&vectors), null_basis];
            let c = concatenate![Axis(0), top, bottom];
            (v, c)
        }
    };
    let mut all_values = values;
    all_values.resize(size, C64::new(0.0, 0.0));

    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (all_values[a], all_values[b]);
        zb.norm()
            .partial_cmp(&za.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(za.arg().partial_cmp(&zb.arg()).unwrap_or(std::cmp::Ordering::Equal))
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&i| all_values[i]).collect();
    let eigvec_matrix = eigvecs.select(Axis(1), &order);
    let coeff_rows = coeffs.select(Axis(0), &order);
    Ok(ModalDecomposition {
        eigenvalues,
        eigvec_matrix,
        coeff_rows,
        target,
        condition,
    })
}

impl ModalDecomposition {
    /// Indices of eigenvalues with `||λ| − 1| ≤ delta`.
    pub fn unit_band(&self, delta: f64) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, z)| (z.norm() - 1.0).abs() <= delta)
            .map(|(t, _)| t)
            .collect()
    }

    /// `V·C`, which should reproduce `Q_T*·φ(x_0)`.
    pub fn reconstruct_target(&self) -> Array2<C64> {
        self.eigvec_matrix.dot(&self.coeff_rows)
    }
}

/// Time-invariant term `c_inv = Σ_{t∈T} c_t*·⟨v_t, v_t⟩·c_t` over the
/// eigenvalues in the band `||λ_t| − 1| ≤ delta`.
///
/// With `⟨v_t, v_t⟩ = diag(v_t*v_t, 0, …, 0)` and `c_t` nonzero only in its
/// first row, each term is `(v_t*v_t)·row_t*·row_t`. An empty band gives the
/// zero block.
pub fn invariant_term(md: &ModalDecomposition, delta: f64) -> Result<Block> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("unit band must be positive, got {delta}")));
    }
    let m = md.coeff_rows.ncols();
    let mut acc = Array2::<C64>::zeros((m, m));
    for t in md.unit_band(delta) {
        let v = md.eigvec_matrix.column(t);
        let weight: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let row = md.coeff_rows.row(t);
        for i in 0..m {
            for j in 0..m {
                acc[[i, j]] += row[i].conj() * row[j] * weight;
            }
        }
    }
    Block::from_array(acc)
}

/// Stacks `window` consecutive multichannel observations into one sample.
///
/// Sample t has m = p·window scalar elements ordered by lag, then channel:
/// `[y_t^1, …, y_t^p, y_{t+1}^1, …, y_{t+window−1}^p]`.
pub fn delay_embed(series: &[Vec<f64>], window: usize) -> Result<Vec<StructuredSample>> {
    if window == 0 {
        return Err(Error::InvalidParameter("embedding window must be positive".into()));
    }
    if series.len() < window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window,
        });
    }
    let p = series[0].len();
    if p == 0 || series.iter().any(|y| y.len() != p) {
        return Err(Error::DimensionMismatch("observations must share a nonzero channel count".into()));
    }
    (0..=series.len() - window)
        .map(|t| {
            let values: Vec<f64> = series[t..t + window].iter().flatten().cloned().collect();
            StructuredSample::from_scalars(&values)
        })
        .collect()
}

fn all_elements_distinct(samples: &[StructuredSample]) -> bool {
    let mut keys: Vec<Vec<u64>> = samples
        .iter()
        .flat_map(|x| {
            (0..x.m()).map(move |i| x.element(i).iter().map(|v| (v + 0.0).to_bits()).collect())
        })
        .collect();
    keys.sort_unstable();
    keys.windows(2).all(|w| w[0] != w[1])
}

/// Adds i.i.d. N(0, σ²) noise to every scalar, retrying with a new stream
/// (up to three times) if any two elements coincide afterwards.
pub fn perturb(samples: &[StructuredSample], sigma: f64, seed: u64) -> Result<Vec<StructuredSample>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(samples.to_vec());
    }
    let mut out = Vec::new();
    for attempt in 0..4u64 {
        let mut noise = GaussianStream::new(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        out = samples.to_vec();
        for x in out.iter_mut() {
            x.elements_mut().mapv_inplace(|v| v + noise.next_normal(sigma));
        }
        if all_elements_distinct(&out) {
            break;
        }
    }
    Ok(out)
}

/// Rescales each column of a multichannel series to mean 0 and standard deviation 1.
pub fn standardize_channels(series: &mut [Vec<f64>]) -> Result<()> {
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let p = series[0].len();
    for ch in 0..p {
        let mean = series.iter().map(|y| y[ch]).sum::<f64>() / n as f64;
        let var = series.iter().map(|y| (y[ch] - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(Error::InvalidParameter(format!("channel {ch} is constant")));
        }
        for y in series.iter_mut() {
            y[ch] = (y[ch] - mean) / std;
        }
    }
    Ok(())
}
