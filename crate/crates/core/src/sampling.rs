//! Seeded sampling of alignment variables and full interaction vectors.
//!
//! The fidelity W ~ p_{κ,d} is drawn with Wood's rejection scheme, whose
//! envelope is a Möbius transform of a symmetric Beta((d-1)/2, (d-1)/2)
//! variate. The orthogonal coordinates X_i ~ p_{0,d-1} need no rejection:
//! X = 1 - 2B with B ~ Beta((d-2)/2, (d-2)/2).
//!
//! Every stream is a ChaCha8 generator keyed by `seed` with `stream_id` as
//! the ChaCha stream number, so draws depend only on (seed, stream_id).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::directional::{Precision, SphereDim};
use crate::error::{Error, Result};

/// Rejection budget per draw of W.
pub const MAX_REJECTIONS: u64 = 1_000_000;
/// Largest recommendation set handled by the samplers.
pub const MAX_SET_SIZE: usize = 1_000_000;

/// Counter-based random stream; one per replication.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// One replication of the scalar alignment variables.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentSample {
    /// Message fidelity W = ⟨h, m⟩.
    pub w: f64,
    /// (W_i, X_i) for each recommendation.
    pub pairs: Vec<(f64, f64)>,
}

impl AlignmentSample {
    /// ⟨h, θ_i⟩ reconstructed from the scalar decomposition.
    pub fn utilities(&self) -> impl Iterator<Item = f64> + '_ {
        let s = (1.0 - self.w * self.w).max(0.0).sqrt();
        self.pairs
            .iter()
            .map(move |&(wi, xi)| self.w * wi + s * (1.0 - wi * wi).max(0.0).sqrt() * xi)
    }
}

/// Full d-dimensional draw: preference, message and recommendations.
#[derive(Clone, Debug, PartialEq)]
pub struct FullInteraction {
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

/// Exact sampler for the alignment marginal p_{κ,d}; internally `d ≥ 2`.
#[derive(Clone, Debug)]
pub(crate) struct FidelitySampler {
    kappa: f64,
    /// d - 1
    order: f64,
    b: f64,
    x0: f64,
    c: f64,
    beta: Beta<f64>,
}

impl FidelitySampler {
    pub(crate) fn new(kappa: f64, d: usize) -> Self {
        debug_assert!(d >= 2);
        let order = (d - 1) as f64;
        // b = (-2κ + √(4κ² + (d-1)²)) / (d-1), written without cancellation
        let b = order / (2.0 * kappa + (4.0 * kappa * kappa + order * order).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        // log(1 - x0²) = log(4b) - 2 log(1+b)
        let c = kappa * x0 + order * ((4.0 * b).ln() - 2.0 * b.ln_1p());
        let half = order / 2.0;
        FidelitySampler {
            kappa,
            order,
            b,
            x0,
            c,
            beta: Beta::new(half, half).expect("beta parameters are positive"),
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if self.kappa == 0.0 {
            return Ok(1.0 - 2.0 * self.beta.sample(rng));
        }
        for _ in 0..MAX_REJECTIONS {
            let z = self.beta.sample(rng);
            let w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z);
            let u: f64 = rng.random();
            let accept = self.kappa * w + self.order * (1.0 - self.x0 * w).ln() - self.c;
            if accept >= u.ln() {
                return Ok(w);
            }
        }
        Err(Error::Sampler {
            iterations: MAX_REJECTIONS,
            replication: None,
        })
    }
}

/// Streams W followed by (W_i, X_i) pairs in the fixed order used by every
/// Monte Carlo estimator in the crate.
#[derive(Clone, Debug)]
pub struct AlignmentSampler {
    fidelity: FidelitySampler,
    orthogonal: FidelitySampler,
}

impl AlignmentSampler {
    pub fn new(kappa: Precision, dim: SphereDim) -> Self {
        AlignmentSampler {
            fidelity: FidelitySampler::new(kappa.get(), dim.get()),
            orthogonal: FidelitySampler::new(0.0, dim.get() - 1),
        }
    }

    pub fn fidelity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.fidelity.sample(rng)
    }

    pub fn pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let wi = self.fidelity.sample(rng)?;
        let xi = self.orthogonal.sample(rng)?;
        Ok((wi, xi))
    }
}

/// Draw W ~ p_{κ,d}.
pub fn sample_w(kappa: Precision, dim: SphereDim, rng: &mut RngStream) -> Result<f64> {
    FidelitySampler::new(kappa.get(), dim.get()).sample(rng)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Uniform draw on S^{d-1} from a normalized Gaussian vector.
pub fn sample_uniform_sphere(dim: SphereDim, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..dim.get()).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&g);
        if n > 1e-12 {
            g.iter_mut().for_each(|x| *x /= n);
            return g;
        }
    }
}

/// Uniform draw on the unit sphere orthogonal to the unit vector `m`.
pub fn sample_orthogonal_uniform(m: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    let mn = norm(m);
    if (mn - 1.0).abs() > 1e-9 {
        return Err(Error::domain("|m|", mn, "message must be a unit vector"));
    }
    if m.len() < 2 {
        return Err(Error::domain(
            "len(m)",
            m.len() as f64,
            "need at least two coordinates",
        ));
    }
    loop {
        let mut y: Vec<f64> = (0..m.len()).map(|_| rng.sample(StandardNormal)).collect();
        // two projection passes keep ⟨m, y⟩ at rounding level
        for _ in 0..2 {
            let p = dot(&y, m);
            y.iter_mut().zip(m).for_each(|(yi, mi)| *yi -= p * mi);
        }
        let n = norm(&y);
        if n < 1e-12 {
            continue;
        }
        y.iter_mut().for_each(|x| *x /= n);
        return Ok(y);
    }
}

fn check_set_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SET_SIZE {
        return Err(Error::domain("n", n as f64, "must be in [1, 1e6]"));
    }
    Ok(())
}

/// Draw W and n i.i.d. pairs (W_i, X_i).
pub fn sample_alignment_tuple(
    kappa: Precision,
    dim: SphereDim,
    n: usize,
    rng: &mut RngStream,
) -> Result<AlignmentSample> {
    check_set_size(n)?;
    let sampler = AlignmentSampler::new(kappa, dim);
    let w = sampler.fidelity(rng)?;
    let pairs = (0..n)
        .map(|_| sampler.pair(rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignmentSample { w, pairs })
}

/// v·m + √(1 - v²)·y, for unit m and unit y ⟂ m.
fn combine(v: f64, m: &[f64], y: &[f64]) -> Vec<f64> {
    let s = (1.0 - v * v).max(0.0).sqrt();
    m.iter().zip(y).map(|(mi, yi)| v * mi + s * yi).collect()
}

/// Draw h uniform, m ~ vMF(h, κ) and n posterior recommendations θ_i ~ vMF(m, κ).
pub fn sample_full_interaction(
    kappa: Precision,
    dim: SphereDim,
    n: usize,
    rng: &mut RngStream,
) -> Result<FullInteraction> {
    check_set_size(n)?;
    let fidelity = FidelitySampler::new(kappa.get(), dim.get());
    let h = sample_uniform_sphere(dim, rng);
    let w_msg = fidelity.sample(rng)?;
    let y_msg = sample_orthogonal_uniform(&h, rng)?;
    let m = combine(w_msg, &h, &y_msg);
    let thetas = (0..n)
        .map(|_| {
            let wi = fidelity.sample(rng)?;
            let yi = sample_orthogonal_uniform(&m, rng)?;
            Ok(combine(wi, &m, &yi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FullInteraction { h, m, thetas })
}

impl FullInteraction {
    /// Recover (W, [(W_i, X_i)]) from the vectors: W = ⟨h,m⟩, W_i = ⟨θ_i,m⟩ and
    /// X_i the inner product of the normalized components orthogonal to m.
    pub fn alignment(&self) -> AlignmentSample {
        let w = dot(&self.h, &self.m);
        let perp = |v: &[f64], c: f64| -> Vec<f64> {
            let s = (1.0 - c * c).max(0.0).sqrt();
            v.iter()
                .zip(&self.m)
                .map(|(vi, mi)| (vi - c * mi) / s)
                .collect()
        };
        let y = perp(&self.h, w);
        let pairs = self
            .thetas
            .iter()
            .map(|t| {
                let wi = dot(t, &self.m);
                let yi = perp(t, wi);
                (wi, dot(&y, &yi))
            })
            .collect();
        AlignmentSample { w, pairs }
    }

    /// Direct inner products ⟨h, θ_i⟩.
    pub fn utilities(&self) -> Vec<f64> {
        self.thetas.iter().map(|t| dot(&self.h, t)).collect()
    }
}
