use rkhm::{gram, rkhm_qr, BlockMatrix};
use serde::Serialize;

use super::epsilon_from_eps2;
use crate::args::QrArgs;
use crate::error::Result;
use crate::io::{read_samples, write_json};

#[derive(Debug, Serialize)]
struct QrReport {
    n: usize,
    m: usize,
    eps2: f64,
    ranks: Vec<usize>,
    total_rank: usize,
    /// Largest operator norm of an off-diagonal block of Q*Q.
    max_offdiag_norm: f64,
    /// Largest ‖P² − P‖ over the diagonal blocks P of Q*Q.
    max_idempotency_residual: f64,
    /// Largest ‖P − P*‖ over the diagonal blocks of Q*Q.
    max_hermitian_residual: f64,
    /// ‖G − R*·Q*Q·R‖^{1/2}.
    reconstruction_residual: f64,
    /// ε·(2‖G‖^{1/2} + ε).
    reconstruction_bound: f64,
}

pub fn run_qr(args: &QrArgs) -> Result<()> {
    let epsilon = epsilon_from_eps2(args.eps2)?;
    let samples = read_samples(&args.samples.input, args.samples.m, args.samples.d)?;
    let g = gram(&args.kernel.spec(), &samples)?;
    let qr = rkhm_qr(&g, epsilon)?;
    let qq = qr.q_adjoint_q(&g)?;
    let n = qr.n();
    let mut max_offdiag_norm: f64 = 0.0;
    let mut max_idempotency_residual: f64 = 0.0;
    let mut max_hermitian_residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let b = qq.block(i, j);
            if i == j {
                let sq = b.dot(&b);
                let diff = rkhm::Block::from_array(sq.matrix() - b.matrix())?;
                max_idempotency_residual = max_idempotency_residual.max(diff.op_norm());
                let herm = rkhm::Block::from_array(b.matrix() - b.adjoint().matrix())?;
                max_hermitian_residual = max_hermitian_residual.max(herm.op_norm());
            } else {
                max_offdiag_norm = max_offdiag_norm.max(b.op_norm());
            }
        }
    }
    let rebuilt: BlockMatrix = qr.r.adjoint().dot(&qq)?.dot(&qr.r)?;
    let reconstruction_residual = g.g.sub(&rebuilt)?.op_norm()?.sqrt();
    let reconstruction_bound = epsilon * (2.0 * g.g.op_norm()?.sqrt() + epsilon);
    let report = QrReport {
        n,
        m: qr.m(),
        eps2: args.eps2,
        total_rank: qr.total_rank(),
        ranks: qr.ranks.clone(),
        max_offdiag_norm,
        max_idempotency_residual,
        max_hermitian_residual,
        reconstruction_residual,
        reconstruction_bound,
    };
    write_json(&args.output, &report)
}
