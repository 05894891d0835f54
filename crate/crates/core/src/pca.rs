//! Kernel PCA with matrix-valued inner products.
//!
//! The block Gram matrix is decomposed as an mn×mn Hermitian matrix,
//! `G = V·Σ·V*`, keeping the eigenvalues above [`RANK_CUTOFF`]. The s-th
//! principal axis is `p_s = σ_s^{-1/2}·W·[v_s, 0, …, 0]`, where
//! `[v_s, 0, …, 0]` is the n-tuple of blocks whose flattened form has `v_s` as
//! its first column and zeros elsewhere. The principal component coefficient
//! of a query `φ(x)` is the m×m block `⟨p_s, φ(x)⟩`, nonzero only in its first row.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::algebra::{adjoint, herm_eig_flat, Block, BlockVector, C64};
use crate::error::{Error, Result};
use crate::kernel::{center_gram, CenteringStats, GramMatrix};

/// Eigenvalues at or below `RANK_CUTOFF * max(σ_1, 1)` are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PcaModel {
    /// Retained eigenvalues, descending.
    pub sigma: Vec<f64>,
    /// mn×l; column s is the unit eigenvector `v_s`.
    pub axes: Array2<C64>,
    pub centered: bool,
    /// The Gram matrix that was decomposed (centered when `centered`).
    pub gram: GramMatrix,
    /// Statistics of the uncentered training Gram, for centering query columns.
    pub centering: Option<CenteringStats>,
}

/// Rotates each column so its largest-magnitude entry is real and positive.
pub(crate) fn fix_phases(vectors: &mut Array2<C64>) {
    for mut col in vectors.axis_iter_mut(Axis(1)) {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (k, z) in col.iter().enumerate() {
            if z.norm() > best_abs * (1.0 + 1e-12) {
                best = k;
                best_abs = z.norm();
            }
        }
        if best_abs > 0.0 {
            let phase = col[best].conj() / best_abs;
            col.mapv_inplace(|z| z * phase);
            col[best] = C64::new(col[best].re, 0.0);
        }
    }
}

pub fn pca_fit(g: &GramMatrix, centered: bool) -> Result<PcaModel> {
    let (gram, centering) = if centered {
        (center_gram(g), Some(CenteringStats::from_gram(g)))
    } else {
        (g.clone(), None)
    };
    let eig = herm_eig_flat(&gram.g.flat().view())?;
    let cutoff = RANK_CUTOFF * eig.values[0].max(1.0);
    let l = eig.values.iter().take_while(|&&v| v > cutoff).count();
    if l == 0 {
        return Err(Error::AllZeroGram);
    }
    let sigma = eig.values[..l].to_vec();
    let mut axes = eig.vectors.slice(s![.., ..l]).to_owned();
    fix_phases(&mut axes);
    Ok(PcaModel {
        sigma,
        axes,
        centered,
        gram,
        centering,
    })
}

impl PcaModel {
    pub fn m(&self) -> usize {
        self.gram.m()
    }

    pub fn n(&self) -> usize {
        self.gram.n()
    }

    pub fn n_axes(&self) -> usize {
        self.sigma.len()
    }

    fn check_axis(&self, s: usize) -> Result<()> {
        if s >= self.n_axes() {
            return Err(Error::AxisOutOfRange {
                index: s,
                available: self.n_axes(),
            });
        }
        Ok(())
    }

    pub fn axis(&self, s: usize) -> ArrayView1<'_, C64> {
        self.axes.column(s)
    }

    /// `σ_s^{-1/2}·[v_s, 0, …, 0]`, the coordinates of `p_s` in terms of the samples.
    pub fn axis_coordinates(&self, s: usize) -> Result<BlockVector> {
        self.check_axis(s)?;
        let m = self.m();
        let mut flat = Array2::<C64>::zeros((self.n() * m, m));
        let scale = 1.0 / self.sigma[s].sqrt();
        flat.column_mut(0).assign(&self.axis(s).mapv(|z| z * scale));
        BlockVector::from_flat(flat, m)
    }

    /// Centers a raw query column when the model was fitted on centered data.
    pub fn prepare_column(&self, g_col: &BlockVector) -> Result<BlockVector> {
        if g_col.len() != self.n() || g_col.block_dim() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "query column of {} {}-blocks for a model of {} {}-blocks",
                g_col.len(),
                g_col.block_dim(),
                self.n(),
                self.m()
            )));
        }
        match &self.centering {
            Some(stats) => stats.center_column(g_col),
            None => Ok(g_col.clone()),
        }
    }
}

/// `⟨p_s, φ(x)⟩` for `g_col[t] = k(x_t, x)` (0-based axis index `s`).
///
/// For centered models the column is centered with the training statistics first.
pub fn pc_coefficient(model: &PcaModel, s: usize, g_col: &BlockVector) -> Result<Block> {
    let coords = model.axis_coordinates(s)?;
    let col = model.prepare_column(g_col)?;
    coords.inner(&col)
}

/// The nonzero first row of a principal component coefficient, as a vector in C^m.
pub fn coefficient_first_row(c: &Block) -> Vec<C64> {
    c.row(0)
}

/// `tr Σ_t |w_t − Σ_{j<s} p_j⟨p_j, w_t⟩|²` computed from coefficients.
///
/// The projected coordinates of all samples are `A·A*·G` with
/// `A = [a_1, …, a_s]` the axis coordinates; the residual coordinates are
/// `I − A·A*·G` and the error is `tr((I − AA*G)*·G·(I − AA*G))`.
pub fn reconstruction_error_trace(model: &PcaModel, s: usize) -> Result<f64> {
    if s > model.n_axes() {
        return Err(Error::AxisOutOfRange {
            index: s,
            available: model.n_axes(),
        });
    }
    let g = model.gram.g.flat();
    let size = g.nrows();
    let m = model.m();
    let mut a = Array2::<C64>::zeros((size, s * m));
    for j in 0..s {
        let coords = model.axis_coordinates(j)?;
        a.slice_mut(s![.., j * m..(j + 1) * m]).assign(coords.flat());
    }
    let projector = a.dot(&adjoint(&a.view())).dot(g);
    let residual = Array2::<C64>::eye(size) - projector;
    let err = adjoint(&residual.view()).dot(g).dot(&residual);
    Ok(err.diag().iter().map(|z| z.re).sum())
}

/// `⟨p_s, p_j⟩`; for s = j a rank-one projection `diag(1, 0, …, 0)`.
pub fn axis_inner(model: &PcaModel, s: usize, j: usize) -> Result<Block> {
    let ps = model.axis_coordinates(s)?;
    let pj = model.axis_coordinates(j)?;
    let g_pj = model.gram.g.dot_vec(&pj)?;
    ps.inner(&g_pj)
}

pub fn axis_self_inner(model: &PcaModel, s: usize) -> Result<Block> {
    axis_inner(model, s, s)
}

/// First principal component scores of real vectors under ordinary PCA.
///
/// Used to embed the first rows of coefficient blocks in the plane. The sign
/// is fixed so the largest-magnitude loading is positive.
pub fn first_component_scores(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let dim = rows[0].len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch("rows must share a nonzero length".into()));
    }
    let data = Array2::from_shape_fn((n, dim), |(i, j)| rows[i][j]);
    let mean: Array1<f64> = data.mean_axis(Axis(0)).expect("nonempty");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / n as f64;
    let eig = herm_eig_flat(&cov.mapv(|x| C64::new(x, 0.0)).view())?;
    let mut top = eig.vectors.slice(s![.., ..1]).to_owned();
    fix_phases(&mut top);
    let loading: Array1<f64> = top.column(0).mapv(|z| z.re);
    Ok(centered.dot(&loading).to_vec())
}
