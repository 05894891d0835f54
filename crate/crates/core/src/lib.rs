//! Data analysis in reproducing kernel Hilbert C*-modules over m×m complex
//! matrices.
//!
//! Each sample is a structured object of m elements. A scalar kernel on the
//! elements induces an m×m matrix-valued kernel, and every inner product in
//! the module is an m×m block. On top of that this crate provides
//! ε-thresholded orthonormalization, kernel PCA with block-valued
//! coefficients, and Perron-Frobenius operator estimation for interacting
//! dynamical systems.

pub mod algebra;
pub mod datagen;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod orthonorm;
pub mod pca;

pub use algebra::{flatten, strict_upper_inverse, unflatten, Block, BlockMatrix, BlockVector, HermEig, C64};
pub use datagen::{gen_clusters, gen_interacting, ClusterSpec, GaussianStream, GeneratorSpec, InteractingSpec};
pub use dynamics::{
    delay_embed, invariant_term, modal_decompose, perturb, pf_fit, predict_error, prediction_coords, prediction_error_sweep,
    standardize_channels, ModalDecomposition, PfModel,
};
pub use error::{Error, Result};
pub use kernel::{
    center_gram, cross_gram, gram, kernel_column, matrix_kernel_eval, scalar_kernel_eval, CenteringStats,
    GramMatrix, KernelFamily, KernelJitter, ScalarKernelSpec, StructuredSample,
};
pub use orthonorm::{normalize_block, project_coeffs, rkhm_qr, NormalizationResult, QrFactors};
pub use pca::{
    axis_inner, axis_self_inner, coefficient_first_row, first_component_scores, pc_coefficient, pca_fit,
    reconstruction_error_trace, PcaModel,
};
