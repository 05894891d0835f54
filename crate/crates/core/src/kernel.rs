//! Scalar kernels on R^d, the matrix-valued kernel built from them, and
//! block Gram matrices.
//!
//! For samples `x = [x_1, …, x_m]` and `y = [y_1, …, y_m]` the matrix-valued
//! kernel is `k(x, y)[i][j] = k̃(x_i, y_j)`.

use ndarray::{Array2, ArrayView1};

use crate::algebra::{Block, BlockMatrix, BlockVector, C64};
use crate::error::{Error, Result};

/// One structured data point: m elements, each a vector in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSample {
    /// Row i is element i.
    elements: Array2<f64>,
}

impl StructuredSample {
    pub fn new(elements: Array2<f64>) -> Result<Self> {
        if elements.nrows() == 0 || elements.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if elements.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(StructuredSample { elements })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(
                "all elements of a sample must share one dimension".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
        let elements = Array2::from_shape_vec((m, d), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        StructuredSample::new(elements)
    }

    /// Sample of m scalar elements (d = 1).
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let elements = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        StructuredSample::new(elements)
    }

    /// Element-major flat layout: element 1's d coordinates, then element 2's, …
    pub fn from_flat(values: &[f64], m: usize) -> Result<Self> {
        if m == 0 || values.is_empty() || values.len() % m != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot be split into {} elements",
                values.len(),
                m
            )));
        }
        let d = values.len() / m;
        let elements = Array2::from_shape_vec((m, d), values.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        StructuredSample::new(elements)
    }

    pub fn m(&self) -> usize {
        self.elements.nrows()
    }

    pub fn d(&self) -> usize {
        self.elements.ncols()
    }

    pub fn element(&self, i: usize) -> ArrayView1<'_, f64> {
        self.elements.row(i)
    }

    pub fn elements(&self) -> &Array2<f64> {
        &self.elements
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.elements.iter().cloned().collect()
    }

    pub(crate) fn elements_mut(&mut self) -> &mut Array2<f64> {
        &mut self.elements
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `exp(−γ‖x − y‖₁)`
    Laplacian,
    /// `exp(−γ‖x − y‖²)`
    Gaussian,
}

/// Deterministic multiplicative perturbation of kernel values, used to
/// emulate reduced-precision arithmetic: `k̃'(x, y) = k̃(x, y)·(1 + relative·u)`
/// with `u ∈ [−1, 1]` a symmetric hash of `(x, y, seed)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelJitter {
    pub relative: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarKernelSpec {
    pub family: KernelFamily,
    pub gamma: f64,
    pub jitter: Option<KernelJitter>,
}

impl Default for ScalarKernelSpec {
    fn default() -> Self {
        ScalarKernelSpec::laplacian(1.0)
    }
}

impl ScalarKernelSpec {
    pub fn laplacian(gamma: f64) -> Self {
        ScalarKernelSpec {
            family: KernelFamily::Laplacian,
            gamma,
            jitter: None,
        }
    }

    pub fn gaussian(gamma: f64) -> Self {
        ScalarKernelSpec {
            family: KernelFamily::Gaussian,
            gamma,
            jitter: None,
        }
    }

    pub fn with_jitter(mut self, relative: f64, seed: u64) -> Self {
        self.jitter = Some(KernelJitter { relative, seed });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel bandwidth must be positive, got {}",
                self.gamma
            )));
        }
        if let Some(j) = self.jitter {
            if !(j.relative >= 0.0 && j.relative.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "jitter must be non-negative, got {}",
                    j.relative
                )));
            }
        }
        Ok(())
    }

    fn eval_unchecked(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        let dist = match self.family {
            KernelFamily::Laplacian => x.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            KernelFamily::Gaussian => x
                .iter()
                .zip(y.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>(),
        };
        let value = (-self.gamma * dist).exp();
        match self.jitter {
            Some(j) if j.relative > 0.0 => value * (1.0 + j.relative * symmetric_unit_hash(x, y, j.seed)),
            _ => value,
        }
    }
}

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn hash_point(x: ArrayView1<'_, f64>) -> u64 {
    x.iter()
        .fold(0x9e3779b97f4a7c15_u64, |h, v| mix64(h ^ v.to_bits()))
}

/// Value in [−1, 1] that depends on the unordered pair {x, y}.
fn symmetric_unit_hash(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, seed: u64) -> f64 {
    let (a, b) = {
        let hx = hash_point(x);
        let hy = hash_point(y);
        if hx <= hy {
            (hx, hy)
        } else {
            (hy, hx)
        }
    };
    let h = mix64(mix64(a ^ seed) ^ b.rotate_left(17));
    ((h >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
}

pub fn scalar_kernel_eval(
    spec: &ScalarKernelSpec,
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    spec.validate()?;
    Ok(spec.eval_unchecked(x, y))
}

fn check_compatible(x1: &StructuredSample, x2: &StructuredSample) -> Result<()> {
    if x1.m() != x2.m() || x1.d() != x2.d() {
        return Err(Error::DimensionMismatch(format!(
            "samples of shape ({}, {}) and ({}, {})",
            x1.m(),
            x1.d(),
            x2.m(),
            x2.d()
        )));
    }
    Ok(())
}

fn matrix_kernel_unchecked(spec: &ScalarKernelSpec, x1: &StructuredSample, x2: &StructuredSample) -> Block {
    Block::from_fn(x1.m(), |(i, j)| {
        C64::new(spec.eval_unchecked(x1.element(i), x2.element(j)), 0.0)
    })
}

/// The m×m matrix `k(x1, x2)` with entries `k̃(x1_i, x2_j)`.
pub fn matrix_kernel_eval(
    spec: &ScalarKernelSpec,
    x1: &StructuredSample,
    x2: &StructuredSample,
) -> Result<Block> {
    spec.validate()?;
    check_compatible(x1, x2)?;
    Ok(matrix_kernel_unchecked(spec, x1, x2))
}

fn check_uniform(samples: &[StructuredSample]) -> Result<()> {
    let first = samples.first().ok_or(Error::EmptyInput)?;
    samples.iter().try_for_each(|s| check_compatible(first, s))
}

/// Block Gram matrix `G[s][t] = k(x_s, x_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub g: BlockMatrix,
    /// FNV-1a hash of the generating samples (zero for derived matrices).
    pub samples_fingerprint: u64,
}

impl GramMatrix {
    /// Wraps an existing block matrix, which must be square and block-Hermitian.
    pub fn from_block_matrix(g: BlockMatrix) -> Result<Self> {
        if g.n_rows() != g.n_cols() {
            return Err(Error::DimensionMismatch("Gram matrix must be square".into()));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = crate::algebra::hermitian_deviation(&g.flat().view());
        let scale = 1.0 + crate::algebra::max_abs(&g.flat().view());
        if deviation > crate::algebra::HERMITIAN_TOL * scale {
            return Err(Error::NonHermitianInput { deviation });
        }
        Ok(GramMatrix {
            g,
            samples_fingerprint: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.g.block_dim()
    }

    pub fn n(&self) -> usize {
        self.g.n_rows()
    }

    pub fn block(&self, s: usize, t: usize) -> Block {
        self.g.block(s, t)
    }
}

pub fn samples_fingerprint(samples: &[StructuredSample]) -> u64 {
    const PRIME: u64 = 0x100000001b3;
    let mut h = 0xcbf29ce484222325_u64;
    let mut eat = |word: u64| {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    for s in samples {
        eat(s.m() as u64);
        eat(s.d() as u64);
        for v in s.elements().iter() {
            eat(v.to_bits());
        }
    }
    h
}

pub fn gram(spec: &ScalarKernelSpec, samples: &[StructuredSample]) -> Result<GramMatrix> {
    spec.validate()?;
    check_uniform(samples)?;
    let n = samples.len();
    let m = samples[0].m();
    let mut g = BlockMatrix::zeros(n, n, m);
    for s in 0..n {
        for t in s..n {
            let block = if s == t {
                // entries (i, j) and (j, i) must agree exactly
                let raw = matrix_kernel_unchecked(spec, &samples[s], &samples[s]);
                Block::from_fn(m, |(i, j)| if i <= j { raw[(i, j)] } else { raw[(j, i)].conj() })
            } else {
                matrix_kernel_unchecked(spec, &samples[s], &samples[t])
            };
            g.set_block(s, t, &block)?;
            if s != t {
                g.set_block(t, s, &block.adjoint())?;
            }
        }
    }
    Ok(GramMatrix {
        g,
        samples_fingerprint: samples_fingerprint(samples),
    })
}

/// Rectangular block kernel matrix `K[s][t] = k(rows[s], cols[t])`.
pub fn cross_gram(
    spec: &ScalarKernelSpec,
    rows: &[StructuredSample],
    cols: &[StructuredSample],
) -> Result<BlockMatrix> {
    spec.validate()?;
    check_uniform(rows)?;
    check_uniform(cols)?;
    check_compatible(&rows[0], &cols[0])?;
    BlockMatrix::from_fn(rows.len(), cols.len(), rows[0].m(), |s, t| {
        matrix_kernel_unchecked(spec, &rows[s], &cols[t])
    })
}

/// Column `[k(x_1, x), …, k(x_n, x)]`, i.e. the coordinates `W*φ(x)`.
pub fn kernel_column(
    spec: &ScalarKernelSpec,
    samples: &[StructuredSample],
    x: &StructuredSample,
) -> Result<BlockVector> {
    spec.validate()?;
    check_uniform(samples)?;
    check_compatible(&samples[0], x)?;
    let blocks: Vec<Block> = samples
        .iter()
        .map(|xt| matrix_kernel_unchecked(spec, xt, x))
        .collect();
    BlockVector::from_blocks(&blocks)
}

/// Block means used to center Gram matrices and query columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringStats {
    /// `(1/n) Σ_j G[s][j]` for each s.
    pub row_means: Vec<Block>,
    /// `(1/n²) Σ_{i,j} G[i][j]`.
    pub grand_mean: Block,
}

impl CenteringStats {
    pub fn from_gram(g: &GramMatrix) -> Self {
        let n = g.n();
        let m = g.m();
        let inv = 1.0 / n as f64;
        let row_means: Vec<Block> = (0..n)
            .map(|s| {
                (0..n)
                    .fold(Block::zeros(m), |acc, j| &acc + &g.block(s, j))
                    .scale(inv)
            })
            .collect();
        let grand_mean = row_means
            .iter()
            .fold(Block::zeros(m), |acc, b| &acc + b)
            .scale(inv);
        CenteringStats {
            row_means,
            grand_mean,
        }
    }

    /// Centers a query column `g[t] = k(x_t, x)`:
    /// `g_c[t] = g[t] − (1/n)Σ_j g[j] − (1/n)Σ_j G[t][j] + (1/n²)Σ_{i,j} G[i][j]`.
    pub fn center_column(&self, g_col: &BlockVector) -> Result<BlockVector> {
        let n = self.row_means.len();
        if g_col.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "query column has length {}, expected {}",
                g_col.len(),
                n
            )));
        }
        let m = g_col.block_dim();
        let col_mean = (0..n)
            .fold(Block::zeros(m), |acc, j| &acc + &g_col.block(j))
            .scale(1.0 / n as f64);
        let blocks: Vec<Block> = (0..n)
            .map(|t| &(&(&g_col.block(t) - &col_mean) - &self.row_means[t]) + &self.grand_mean)
            .collect();
        BlockVector::from_blocks(&blocks)
    }
}

/// Gram matrix of the mean-centered features `φ(x_t) − (1/n)Σ_j φ(x_j)`.
pub fn center_gram(g: &GramMatrix) -> GramMatrix {
    let n = g.n();
    let m = g.m();
    let stats = CenteringStats::from_gram(g);
    // column means are adjoints of row means since G is block-Hermitian
    let col_means: Vec<Block> = stats.row_means.iter().map(Block::adjoint).collect();
    let mut out = BlockMatrix::zeros(n, n, m);
    for s in 0..n {
        for t in s..n {
            let b = &(&(&g.block(s, t) - &col_means[t]) - &stats.row_means[s]) + &stats.grand_mean;
            let b = if s == t { b.hermitian_part() } else { b };
            out.set_block(s, t, &b).expect("uniform block size");
            if s != t {
                out.set_block(t, s, &b.adjoint()).expect("uniform block size");
            }
        }
    }
    GramMatrix {
        g: out,
        samples_fingerprint: g.samples_fingerprint,
    }
}
