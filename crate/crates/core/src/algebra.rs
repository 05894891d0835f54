//! Dense linear algebra over the matrix algebra of m×m complex matrices.
//!
//! A [`Block`] is one element of the algebra. [`BlockMatrix`] and
//! [`BlockVector`] are arrays of blocks that act on n-tuples of blocks; both
//! keep their entries in a single flat complex array laid out by block
//! placement, so [`flatten`] and [`unflatten`] are exact copies and block
//! products are ordinary flat products.

use std::ops::{Add, Index, Mul, Neg, Sub};

use ndarray::{s, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance of the Hermitian input check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues of magnitude below `PSD_CLAMP_TOL * max(λ_max, 1)` are set to zero.
pub const PSD_CLAMP_TOL: f64 = 1e-12;
/// Magnitude above which a block on or below the diagonal counts as nonzero.
pub const STRICT_UPPER_TOL: f64 = 1e-14;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Conjugate transpose of a flat complex matrix.
pub fn adjoint(a: &ArrayView2<'_, C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub(crate) fn all_finite(a: &ArrayView2<'_, C64>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn max_abs(a: &ArrayView2<'_, C64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest elementwise deviation `|a_ij − conj(a_ji)|`.
pub fn hermitian_deviation(a: &ArrayView2<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    dev
}

/// `(a + a*) / 2`.
pub fn hermitian_part(a: &ArrayView2<'_, C64>) -> Array2<C64> {
    let n = a.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| (a[[i, j]] + a[[j, i]].conj()) * 0.5)
}

/// Spectral (operator 2-) norm of a flat complex matrix.
/// Column-major copy with unit strides, which every LAPACK driver accepts.
pub(crate) fn lapack_copy(a: &ArrayView2<'_, C64>) -> Array2<C64> {
    let mut out = Array2::zeros(a.raw_dim().set_f(true));
    out.assign(a);
    out
}

pub fn spectral_norm(a: &ArrayView2<'_, C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    if !all_finite(a) {
        return Err(Error::NonFinite);
    }
    let (_, sv, _) = lapack_copy(a).svd(false, false)?;
    Ok(sv.iter().cloned().fold(0.0, f64::max))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct FlatHermEig {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: Array2<C64>,
}

/// Hermitian eigensolver shared by blocks and flattened block matrices.
///
/// Checks the input is Hermitian to [`HERMITIAN_TOL`] relative, symmetrizes,
/// decomposes, sorts descending and clamps round-off eigenvalues to zero.
pub fn herm_eig_flat(a: &ArrayView2<'_, C64>) -> Result<FlatHermEig> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !all_finite(a) {
        return Err(Error::NonFinite);
    }
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOL * (1.0 + max_abs(a)) {
        return Err(Error::NonHermitianInput { deviation });
    }
    let (vals, vecs) = lapack_copy(&hermitian_part(a).view()).eigh(UPLO::Lower)?;
    // eigh returns ascending order
    let mut values: Vec<f64> = vals.iter().rev().cloned().collect();
    let mut vectors = vecs;
    vectors.invert_axis(Axis(1));
    let vectors = vectors.as_standard_layout().to_owned();

    let tol = PSD_CLAMP_TOL * values[0].max(1.0);
    for v in values.iter_mut() {
        if v.abs() < tol {
            *v = 0.0;
        }
    }
    Ok(FlatHermEig { values, vectors })
}

/// Rebuilds `u · diag(f(λ)) · u*` from an eigendecomposition.
pub(crate) fn spectral_apply(
    vectors: &ArrayView2<'_, C64>,
    values: &[f64],
    f: impl Fn(usize, f64) -> f64,
) -> Array2<C64> {
    let mut scaled = vectors.to_owned();
    for (j, mut col) in scaled.axis_iter_mut(Axis(1)).enumerate() {
        let w = f(j, values[j]);
        col.mapv_inplace(|z| z * w);
    }
    scaled.dot(&adjoint(vectors))
}

/// One element of the algebra of m×m complex matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Block(Array2<C64>);

impl Block {
    pub fn zeros(m: usize) -> Self {
        Block(Array2::zeros((m, m)))
    }

    pub fn identity(m: usize) -> Self {
        Block(Array2::eye(m))
    }

    pub fn from_array(a: Array2<C64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "a block must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Block(a))
    }

    pub fn from_real(a: &Array2<f64>) -> Result<Self> {
        Block::from_array(a.mapv(|x| C64::new(x, 0.0)))
    }

    pub fn from_fn(m: usize, f: impl FnMut((usize, usize)) -> C64) -> Self {
        Block(Array2::from_shape_fn((m, m), f))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let m = entries.len();
        Block::from_fn(m, |(i, j)| if i == j { entries[i] } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.0.view()
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Block {
        Block(adjoint(&self.0.view()))
    }

    pub fn dot(&self, other: &Block) -> Block {
        Block(self.0.dot(&other.0))
    }

    pub fn scale(&self, c: f64) -> Block {
        Block(self.0.mapv(|z| z * c))
    }

    pub fn scale_complex(&self, c: C64) -> Block {
        Block(self.0.mapv(|z| z * c))
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0.view())
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.0.view())
    }

    /// Operator norm, i.e. the largest singular value.
    pub fn op_norm(&self) -> f64 {
        spectral_norm(&self.0.view()).unwrap_or(f64::NAN)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.0.view())
    }

    pub fn hermitian_part(&self) -> Block {
        Block(hermitian_part(&self.0.view()))
    }

    /// Row `i` as a vector.
    pub fn row(&self, i: usize) -> Vec<C64> {
        self.0.row(i).to_vec()
    }
}

impl Index<(usize, usize)> for Block {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[[idx.0, idx.1]]
    }
}

impl Add for &Block {
    type Output = Block;
    fn add(self, rhs: &Block) -> Block {
        Block(&self.0 + &rhs.0)
    }
}

impl Sub for &Block {
    type Output = Block;
    fn sub(self, rhs: &Block) -> Block {
        Block(&self.0 - &rhs.0)
    }
}

impl Mul for &Block {
    type Output = Block;
    fn mul(self, rhs: &Block) -> Block {
        self.dot(rhs)
    }
}

impl Neg for &Block {
    type Output = Block;
    fn neg(self) -> Block {
        Block(self.0.mapv(|z| -z))
    }
}

/// Eigendecomposition of a Hermitian block: `h = u · diag(λ) · u*`.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Descending, with round-off values clamped to zero.
    pub values: Vec<f64>,
    /// Unitary; column j pairs with `values[j]`.
    pub vectors: Block,
}

impl HermEig {
    pub fn reconstruct(&self) -> Block {
        Block(spectral_apply(&self.vectors.view(), &self.values, |_, l| l))
    }
}

pub fn herm_eig(h: &Block) -> Result<HermEig> {
    let FlatHermEig { values, vectors } = herm_eig_flat(&h.view())?;
    Ok(HermEig {
        values,
        vectors: Block(vectors),
    })
}

/// An n_rows × n_cols array of m×m blocks, stored flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    m: usize,
    rows: usize,
    cols: usize,
    data: Array2<C64>,
}

impl BlockMatrix {
    pub fn zeros(rows: usize, cols: usize, m: usize) -> Self {
        BlockMatrix {
            m,
            rows,
            cols,
            data: Array2::zeros((rows * m, cols * m)),
        }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        BlockMatrix {
            m,
            rows: n,
            cols: n,
            data: Array2::eye(n * m),
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        m: usize,
        mut f: impl FnMut(usize, usize) -> Block,
    ) -> Result<Self> {
        let mut out = BlockMatrix::zeros(rows, cols, m);
        for i in 0..rows {
            for j in 0..cols {
                out.set_block(i, j, &f(i, j))?;
            }
        }
        Ok(out)
    }

    pub fn from_blocks(blocks: &[Vec<Block>]) -> Result<Self> {
        let rows = blocks.len();
        if rows == 0 || blocks[0].is_empty() {
            return Err(Error::EmptyInput);
        }
        let cols = blocks[0].len();
        let m = blocks[0][0].dim();
        if blocks.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged block rows".into()));
        }
        BlockMatrix::from_fn(rows, cols, m, |i, j| blocks[i][j].clone())
    }

    pub fn block_diag(diag: &[Block]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyInput);
        }
        let m = diag[0].dim();
        let n = diag.len();
        let mut out = BlockMatrix::zeros(n, n, m);
        for (t, b) in diag.iter().enumerate() {
            out.set_block(t, t, b)?;
        }
        Ok(out)
    }

    pub fn block_dim(&self) -> usize {
        self.m
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn block_view(&self, i: usize, j: usize) -> ArrayView2<'_, C64> {
        let m = self.m;
        self.data.slice(s![i * m..(i + 1) * m, j * m..(j + 1) * m])
    }

    pub fn block(&self, i: usize, j: usize) -> Block {
        Block(self.block_view(i, j).to_owned())
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: &Block) -> Result<()> {
        if b.dim() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "block of dimension {} in a matrix of {}-blocks",
                b.dim(),
                self.m
            )));
        }
        let m = self.m;
        self.data
            .slice_mut(s![i * m..(i + 1) * m, j * m..(j + 1) * m])
            .assign(&b.0);
        Ok(())
    }

    /// The flattened (m·n_rows)×(m·n_cols) matrix, borrowed.
    pub fn flat(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn adjoint(&self) -> BlockMatrix {
        BlockMatrix {
            m: self.m,
            rows: self.cols,
            cols: self.rows,
            data: adjoint(&self.data.view()),
        }
    }

    pub fn dot(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        if self.m != other.m || self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{} block matrices ({}- and {}-blocks)",
                self.rows, self.cols, other.rows, other.cols, self.m, other.m
            )));
        }
        Ok(BlockMatrix {
            m: self.m,
            rows: self.rows,
            cols: other.cols,
            data: self.data.dot(&other.data),
        })
    }

    pub fn dot_vec(&self, v: &BlockVector) -> Result<BlockVector> {
        if self.m != v.m || self.cols != v.n {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply a {}x{} block matrix to a vector of length {}",
                self.rows, self.cols, v.n
            )));
        }
        Ok(BlockVector {
            m: self.m,
            n: self.rows,
            data: self.data.dot(&v.data),
        })
    }

    fn zip_with(&self, other: &BlockMatrix, f: impl Fn(C64, C64) -> C64) -> Result<BlockMatrix> {
        if self.m != other.m || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("block matrix shapes differ".into()));
        }
        let mut data = self.data.clone();
        data.zip_mut_with(&other.data, |a, &b| *a = f(*a, b));
        Ok(BlockMatrix { data, ..*self })
    }

    pub fn add(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Keeps the blocks strictly above the block diagonal, zeroing the rest.
    /// `self · diag(blocks)` without forming the block-diagonal matrix.
    pub fn mul_block_diag(&self, blocks: &[Block]) -> Result<BlockMatrix> {
        if blocks.len() != self.cols || blocks.iter().any(|b| b.dim() != self.m) {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal blocks for {} block columns",
                blocks.len(),
                self.cols
            )));
        }
        let m = self.m;
        let mut out = self.clone();
        for (t, b) in blocks.iter().enumerate() {
            let cols = s![.., t * m..(t + 1) * m];
            let prod = self.data.slice(cols).dot(b.matrix());
            out.data.slice_mut(cols).assign(&prod);
        }
        Ok(out)
    }

    /// `diag(blocks) · self` without forming the block-diagonal matrix.
    pub fn block_diag_mul(blocks: &[Block], other: &BlockMatrix) -> Result<BlockMatrix> {
        if blocks.len() != other.rows || blocks.iter().any(|b| b.dim() != other.m) {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal blocks for {} block rows",
                blocks.len(),
                other.rows
            )));
        }
        let m = other.m;
        let mut out = other.clone();
        for (t, b) in blocks.iter().enumerate() {
            let rows = s![t * m..(t + 1) * m, ..];
            let prod = b.matrix().dot(&other.data.slice(rows));
            out.data.slice_mut(rows).assign(&prod);
        }
        Ok(out)
    }

    /// The leading `rows`×`cols` blocks.
    pub fn leading(&self, rows: usize, cols: usize) -> Result<BlockMatrix> {
        if rows > self.rows || cols > self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot take {}x{} leading blocks of a {}x{} block matrix",
                rows, cols, self.rows, self.cols
            )));
        }
        let m = self.m;
        Ok(BlockMatrix {
            m,
            rows,
            cols,
            data: self.data.slice(s![..rows * m, ..cols * m]).to_owned(),
        })
    }

    pub fn strict_upper(&self) -> BlockMatrix {
        let mut out = self.clone();
        let m = self.m;
        for i in 0..self.rows {
            for j in 0..self.cols.min(i + 1) {
                out.data
                    .slice_mut(s![i * m..(i + 1) * m, j * m..(j + 1) * m])
                    .fill(ZERO);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data.view())
    }

    /// Operator norm of the flattened matrix.
    pub fn op_norm(&self) -> Result<f64> {
        spectral_norm(&self.data.view())
    }
}

/// An element of the n-fold direct sum of the algebra, as an (n·m)×m column of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    m: usize,
    n: usize,
    data: Array2<C64>,
}

impl BlockVector {
    pub fn zeros(n: usize, m: usize) -> Self {
        BlockVector {
            m,
            n,
            data: Array2::zeros((n * m, m)),
        }
    }

    pub fn from_blocks(blocks: &[Block]) -> Result<Self> {
        let n = blocks.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let m = blocks[0].dim();
        let mut out = BlockVector::zeros(n, m);
        for (t, b) in blocks.iter().enumerate() {
            out.set_block(t, b)?;
        }
        Ok(out)
    }

    /// Wraps a flat (n·m)×m matrix.
    pub fn from_flat(data: Array2<C64>, m: usize) -> Result<Self> {
        if m == 0 || data.ncols() != m || data.nrows() % m != 0 {
            return Err(Error::DimensionMismatch(format!(
                "a {}x{} matrix is not a column of {}-blocks",
                data.nrows(),
                data.ncols(),
                m
            )));
        }
        Ok(BlockVector {
            m,
            n: data.nrows() / m,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn block_dim(&self) -> usize {
        self.m
    }

    pub fn block(&self, t: usize) -> Block {
        let m = self.m;
        Block(self.data.slice(s![t * m..(t + 1) * m, ..]).to_owned())
    }

    pub fn set_block(&mut self, t: usize, b: &Block) -> Result<()> {
        if b.dim() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "block of dimension {} in a vector of {}-blocks",
                b.dim(),
                self.m
            )));
        }
        let m = self.m;
        self.data.slice_mut(s![t * m..(t + 1) * m, ..]).assign(&b.0);
        Ok(())
    }

    pub fn flat(&self) -> &Array2<C64> {
        &self.data
    }

    /// The algebra-valued inner product `⟨self, other⟩ = self* · other`.
    pub fn inner(&self, other: &BlockVector) -> Result<Block> {
        if self.m != other.m || self.n != other.n {
            return Err(Error::DimensionMismatch("block vector shapes differ".into()));
        }
        Ok(Block(adjoint(&self.data.view()).dot(&other.data)))
    }
}

/// Copies a block matrix into its flat (m·n_rows)×(m·n_cols) complex form.
pub fn flatten(bm: &BlockMatrix) -> Array2<C64> {
    bm.data.clone()
}

/// Splits a flat complex matrix into m×m blocks.
pub fn unflatten(cm: &Array2<C64>, m: usize) -> Result<BlockMatrix> {
    if m == 0 || cm.nrows() % m != 0 || cm.ncols() % m != 0 {
        return Err(Error::DimensionMismatch(format!(
            "a {}x{} matrix cannot be split into {}x{} blocks",
            cm.nrows(),
            cm.ncols(),
            m,
            m
        )));
    }
    Ok(BlockMatrix {
        m,
        rows: cm.nrows() / m,
        cols: cm.ncols() / m,
        data: cm.clone(),
    })
}

/// Computes `(I + N)^{-1}` for a strictly block upper triangular `N` by block
/// back-substitution. The result is block upper triangular with identity
/// diagonal blocks.
pub fn strict_upper_inverse(nilpotent_part: &BlockMatrix) -> Result<BlockMatrix> {
    let n = nilpotent_part.rows;
    let m = nilpotent_part.m;
    if nilpotent_part.cols != n {
        return Err(Error::DimensionMismatch(format!(
            "expected a square block matrix, got {}x{}",
            n, nilpotent_part.cols
        )));
    }
    if !nilpotent_part.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut deviation = 0.0_f64;
    for i in 0..n {
        for j in 0..=i {
            deviation = deviation.max(max_abs(&nilpotent_part.block_view(i, j)));
        }
    }
    if deviation > STRICT_UPPER_TOL {
        return Err(Error::NotStrictlyUpper { deviation });
    }

    // Row i of X only depends on rows i+1.. of X:
    //   X[i, :] = E_i − N[i, i+1..] · X[i+1.., :]
    let flat = &nilpotent_part.data;
    let mut x = Array2::<C64>::zeros((n * m, n * m));
    for i in (0..n).rev() {
        let lo = i * m;
        let hi = (i + 1) * m;
        let mut row = Array2::<C64>::zeros((m, n * m));
        for k in 0..m {
            row[[k, lo + k]] = ONE;
        }
        if i + 1 < n {
            let coupling = flat.slice(s![lo..hi, hi..]);
            let below = x.slice(s![hi.., hi..]);
            let update = coupling.dot(&below);
            let mut tail = row.slice_mut(s![.., hi..]);
            tail -= &update;
        }
        x.slice_mut(s![lo..hi, ..]).assign(&row);
    }
    Ok(BlockMatrix {
        m,
        rows: n,
        cols: n,
        data: x,
    })
}
