//! ε-thresholded normalization, Gram-Schmidt orthonormalization and QR
//! decomposition of kernel feature vectors.
//!
//! Feature vectors `w_t = φ(x_t)` are never formed. Everything is expressed
//! through Gram blocks `⟨w_s, w_t⟩` and coefficient matrices acting on
//! n-tuples of blocks: the orthonormal system is `Q = W·R_inv` and
//! `‖W − Q·R‖ ≤ ε`.

use ndarray::{s, Array2};

use crate::algebra::{
    adjoint, herm_eig, spectral_apply, strict_upper_inverse, Block, BlockMatrix, BlockVector,
};
use crate::error::{Error, Result};
use crate::kernel::GramMatrix;

/// Outcome of normalizing one vector `q̂` given `⟨q̂, q̂⟩`.
///
/// With `⟨q̂, q̂⟩ = u·diag(λ)·u*` and `m′ = #{j : λ_j > ε²}`:
/// `b_hat = u·diag(λ^{-1/2}, …, 0)·u*` and `b = u·diag(λ^{1/2}, …, 0)·u*`.
/// Then `q = q̂·b_hat` is normalized and `‖q̂ − q·b‖ ≤ ε`.
#[derive(Debug, Clone)]
pub struct NormalizationResult {
    pub b_hat: Block,
    pub b: Block,
    pub retained_rank: usize,
    /// Eigenvalues of `⟨q̂, q̂⟩`, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors of `⟨q̂, q̂⟩`; the first `retained_rank` columns span the kept subspace.
    pub eigenvectors: Block,
}

impl NormalizationResult {
    /// `b_hat · b`, the projection onto the retained eigenspace.
    pub fn projection(&self) -> Block {
        self.b_hat.dot(&self.b)
    }
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon.is_infinite() {
        return Err(Error::NonFinite);
    }
    if epsilon < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon));
    }
    Ok(())
}

pub fn normalize_block(gram_qq: &Block, epsilon: f64) -> Result<NormalizationResult> {
    validate_epsilon(epsilon)?;
    normalize_above(gram_qq, epsilon * epsilon)
}

/// Normalization keeping the eigenvalues strictly above `threshold`.
fn normalize_above(gram_qq: &Block, threshold: f64) -> Result<NormalizationResult> {
    let eig = herm_eig(gram_qq)?;
    let rank = eig.values.iter().take_while(|&&l| l > threshold).count();
    let vecs = eig.vectors.view();
    let b_hat = spectral_apply(&vecs, &eig.values, |j, l| if j < rank { 1.0 / l.sqrt() } else { 0.0 });
    let b = spectral_apply(&vecs, &eig.values, |j, l| if j < rank { l.sqrt() } else { 0.0 });
    Ok(NormalizationResult {
        b_hat: Block::from_array(b_hat)?,
        b: Block::from_array(b)?,
        retained_rank: rank,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

/// Factors of the QR decomposition `Q = W·R_inv`, `‖W − Q·R‖ ≤ ε`.
#[derive(Debug, Clone)]
pub struct QrFactors {
    /// Block upper triangular; `r[s][t] = ⟨q_s, w_t⟩` for s < t and `r[t][t] = b_t`.
    pub r: BlockMatrix,
    /// `B̂·(I + (R − B)·B̂)^{-1}`.
    pub r_inv: BlockMatrix,
    pub b: BlockMatrix,
    pub b_hat: BlockMatrix,
    /// Retained rank `m′_t` of each normalized vector.
    pub ranks: Vec<usize>,
    pub epsilon: f64,
    /// Eigenbases of the `⟨q̂_t, q̂_t⟩`; the first `ranks[t]` columns are retained.
    pub bases: Vec<Block>,
}

impl QrFactors {
    pub fn n(&self) -> usize {
        self.r.n_rows()
    }

    pub fn m(&self) -> usize {
        self.r.block_dim()
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// `Q*Q = R_inv*·G·R_inv`, which is block diagonal with projection blocks.
    pub fn q_adjoint_q(&self, g: &GramMatrix) -> Result<BlockMatrix> {
        self.r_inv.adjoint().dot(&g.g)?.dot(&self.r_inv)
    }
}

/// Residual eigenvalues at or below `ROUNDOFF_RANK_TOL·‖G[i][i]‖` are
/// indistinguishable from rounding and are truncated even when ε = 0.
pub const ROUNDOFF_RANK_TOL: f64 = 1e-12;

/// Gram-Schmidt QR decomposition computed from the Gram matrix alone.
///
/// Rows of `R` are produced in order; for each i:
/// `d_i = G[i][i] − Σ_{j<i} r_{j,i}*·r_{j,i}` is normalized, `r_{i,i} = b_i`, and
/// `r_{i,t} = b̂_i·(G[i][t] − Σ_{j<i} r_{j,i}*·r_{j,t})` for t > i.
/// Eigenvalues of `d_i` are kept when above `max(ε², ROUNDOFF_RANK_TOL·‖G[i][i]‖)`.
pub fn rkhm_qr(g: &GramMatrix, epsilon: f64) -> Result<QrFactors> {
    validate_epsilon(epsilon)?;
    let n = g.n();
    let m = g.m();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let gf = g.g.flat();
    let mut r = Array2::zeros((n * m, n * m));
    let mut b_blocks = Vec::with_capacity(n);
    let mut b_hat_blocks = Vec::with_capacity(n);
    let mut ranks = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(n);

    for i in 0..n {
        let lo = i * m;
        let hi = lo + m;
        // column i of R above the diagonal, and its adjoint
        let above = r.slice(s![..lo, lo..hi]).to_owned();
        let above_h = adjoint(&above.view());

        let mut d = gf.slice(s![lo..hi, lo..hi]).to_owned();
        if i > 0 {
            d -= &above_h.dot(&above);
        }
        // Hermitian by construction; remove the round-off asymmetry
        let d = Block::from_array(d)?.hermitian_part();
        if !d.is_finite() {
            return Err(Error::NonFinite);
        }
        let scale = Block::from_array(gf.slice(s![lo..hi, lo..hi]).to_owned())?.op_norm();
        let norm = normalize_above(&d, (epsilon * epsilon).max(ROUNDOFF_RANK_TOL * scale))?;

        r.slice_mut(s![lo..hi, lo..hi]).assign(norm.b.matrix());
        if hi < n * m {
            let mut rest = gf.slice(s![lo..hi, hi..]).to_owned();
            if i > 0 {
                rest -= &above_h.dot(&r.slice(s![..lo, hi..]));
            }
            let row = norm.b_hat.matrix().dot(&rest);
            r.slice_mut(s![lo..hi, hi..]).assign(&row);
        }
        ranks.push(norm.retained_rank);
        bases.push(norm.eigenvectors.clone());
        b_blocks.push(norm.b);
        b_hat_blocks.push(norm.b_hat);
    }

    let r = crate::algebra::unflatten(&r, m)?;
    // (R − B)·B̂ is strictly block upper triangular
    let nilpotent = r.strict_upper().mul_block_diag(&b_hat_blocks)?.strict_upper();
    let r_inv = BlockMatrix::block_diag_mul(&b_hat_blocks, &strict_upper_inverse(&nilpotent)?)?;
    let b = BlockMatrix::block_diag(&b_blocks)?;
    let b_hat = BlockMatrix::block_diag(&b_hat_blocks)?;
    if !r_inv.is_finite() {
        return Err(Error::NonFinite);
    }

    Ok(QrFactors {
        r,
        r_inv,
        b,
        b_hat,
        ranks,
        epsilon,
        bases,
    })
}

/// Coordinates `Q*v = R_inv*·(W*v)` of the projection of `v` onto the span of
/// the orthonormal system, given `g_col[t] = ⟨w_t, v⟩`.
pub fn project_coeffs(qr: &QrFactors, g_col: &BlockVector) -> Result<BlockVector> {
    if g_col.len() != qr.n() || g_col.block_dim() != qr.m() {
        return Err(Error::DimensionMismatch(format!(
            "column of {} {}-blocks for a factorization of {} {}-blocks",
            g_col.len(),
            g_col.block_dim(),
            qr.n(),
            qr.m()
        )));
    }
    qr.r_inv.adjoint().dot_vec(g_col)
}
