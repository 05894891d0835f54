//! Seeded synthetic data: the interacting dynamical system and the
//! four-cluster structured samples.
//!
//! Gaussian variates come from [`GaussianStream`]: Box-Muller on a ChaCha20
//! stream seeded with `ChaCha20Rng::seed_from_u64`. Given a seed the output
//! is bit-identical across runs and platforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::kernel::StructuredSample;

/// Standard normal variates via the Box-Muller transform.
///
/// Each pair of uniforms `(u1, u2)`, with `u1 ∈ (0, 1]` and `u2 ∈ [0, 1)`
/// taken from the top 53 bits of consecutive `next_u64` draws, yields
/// `sqrt(−2 ln u1)·cos(2πu2)` followed by `sqrt(−2 ln u1)·sin(2πu2)`.
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn next_normal(&mut self, sigma: f64) -> f64 {
        sigma * self.next_standard()
    }
}

/// Parameters of the interacting system
/// `x_{t+1,i} = 1 + (1/m)·Σ_j (x_{t,i} − x_{t,j}) + ξ_{t,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractingSpec {
    pub m: usize,
    /// Number of time steps returned, including `x_0`.
    pub steps: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Defaults to `x_{0,i} = i/m` for i = 1…m.
    pub initial: Option<Vec<f64>>,
}

impl InteractingSpec {
    pub fn new(m: usize, steps: usize, noise_sigma: f64, seed: u64) -> Self {
        InteractingSpec {
            m,
            steps,
            noise_sigma,
            seed,
            initial: None,
        }
    }
}

/// Parameters of the four-cluster data set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    /// Samples per cluster.
    pub count: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// One center per cluster; each center is m elements in R^d.
    pub centers: Vec<Vec<Vec<f64>>>,
}

impl ClusterSpec {
    /// The default centers: all-zero, and `[1, 1]` placed in element 1, 2 or 3.
    pub fn new(count: usize, noise_sigma: f64, seed: u64) -> Self {
        let z = vec![0.0, 0.0];
        let o = vec![1.0, 1.0];
        ClusterSpec {
            count,
            noise_sigma,
            seed,
            centers: vec![
                vec![z.clone(), z.clone(), z.clone()],
                vec![o.clone(), z.clone(), z.clone()],
                vec![z.clone(), o.clone(), z.clone()],
                vec![z.clone(), z, o],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Interacting(InteractingSpec),
    Clusters(ClusterSpec),
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation must be non-negative, got {sigma}"
        )));
    }
    Ok(())
}

/// Time series `x_0, …, x_{steps−1}` of the interacting system (d = 1).
///
/// Noise is drawn per element per step, in order t = 0, 1, … and i = 1…m
/// within each step.
pub fn gen_interacting(spec: &InteractingSpec) -> Result<Vec<StructuredSample>> {
    if spec.m == 0 || spec.steps == 0 {
        return Err(Error::InvalidParameter("m and the number of steps must be positive".into()));
    }
    check_sigma(spec.noise_sigma)?;
    let m = spec.m;
    let mut x: Vec<f64> = match &spec.initial {
        Some(init) if init.len() != m => {
            return Err(Error::DimensionMismatch(format!(
                "initial condition has {} entries, expected {}",
                init.len(),
                m
            )))
        }
        Some(init) => init.clone(),
        None => (1..=m).map(|i| i as f64 / m as f64).collect(),
    };
    let mut noise = GaussianStream::new(spec.seed);
    let mut out = Vec::with_capacity(spec.steps);
    out.push(StructuredSample::from_scalars(&x)?);
    for _ in 1..spec.steps {
        let mean = x.iter().sum::<f64>() / m as f64;
        x = x
            .iter()
            .map(|&xi| 1.0 + (xi - mean) + noise.next_normal(spec.noise_sigma))
            .collect();
        out.push(StructuredSample::from_scalars(&x)?);
    }
    Ok(out)
}

/// Noisy copies of each cluster center, `count` per cluster, with cluster labels.
pub fn gen_clusters(spec: &ClusterSpec) -> Result<(Vec<StructuredSample>, Vec<usize>)> {
    if spec.count == 0 || spec.centers.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample and one center".into()));
    }
    check_sigma(spec.noise_sigma)?;
    let mut noise = GaussianStream::new(spec.seed);
    let mut samples = Vec::with_capacity(spec.count * spec.centers.len());
    let mut labels = Vec::with_capacity(samples.capacity());
    for (label, center) in spec.centers.iter().enumerate() {
        for _ in 0..spec.count {
            let rows: Vec<Vec<f64>> = center
                .iter()
                .map(|e| e.iter().map(|&v| v + noise.next_normal(spec.noise_sigma)).collect())
                .collect();
            samples.push(StructuredSample::from_rows(&rows)?);
            labels.push(label);
        }
    }
    Ok((samples, labels))
}
