//! Synthetic low-tubal-rank series: an f-diagonal AR(3) core series mapped
//! through random column-orthogonal factors, plus scaled Gaussian noise.
//!
//! Randomness comes from one ChaCha20 generator per component, all seeded
//! with `seed` and separated by stream id: 1 = core innovations, 2 = left
//! factor, 3 = right factor, 4 = observation noise. ChaCha output and the
//! ziggurat normal sampler are platform independent, so a seed names the
//! same data everywhere.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::orthonormalize_fourier_slices;
use crate::tensor::{
    fourier_product, ifft_mode3_real, is_self_conjugate, CMat, Dims, FourierTensor3, Tensor3,
    fft_mode3,
};

use super::TensorSeries;

pub const STREAM_CORE: u64 = 1;
pub const STREAM_LEFT: u64 = 2;
pub const STREAM_RIGHT: u64 = 3;
pub const STREAM_NOISE: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynConfig {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub r: usize,
    pub len: usize,
    pub ar_coeffs: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
    pub burn_in: usize,
}

impl Default for SynConfig {
    fn default() -> Self {
        SynConfig {
            n1: 100,
            n2: 100,
            n3: 10,
            r: 4,
            len: 1000,
            ar_coeffs: vec![0.5, -0.3, 0.1],
            rho: 0.01,
            seed: 0,
            burn_in: 200,
        }
    }
}

impl SynConfig {
    pub fn validate(&self) -> Result<Dims> {
        let dims = Dims::new(self.n1, self.n2, self.n3)?;
        if self.r == 0 || self.r > self.n1.min(self.n2) {
            return Err(Error::RankOutOfRange { rank: self.r, max: self.n1.min(self.n2) });
        }
        if self.len == 0 {
            return Err(Error::InvalidConfig("series length must be positive".into()));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::InvalidConfig(format!("noise level {} must be >= 0", self.rho)));
        }
        if self.ar_coeffs.is_empty() || self.ar_coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("generator AR coefficients must be finite".into()));
        }
        Ok(dims)
    }
}

/// Everything the generator drew, for oracle comparisons.
#[derive(Debug, Clone)]
pub struct SynGroundTruth {
    pub u: Tensor3,
    pub v: Tensor3,
    /// Real-domain f-diagonal cores, `r x r x n3` each.
    pub cores: Vec<Tensor3>,
    pub ar_coeffs: Vec<f64>,
}

impl SynGroundTruth {
    /// Noise-free observation `u * S_t * v^H`.
    pub fn signal(&self, t: usize) -> Result<Tensor3> {
        let uh = fft_mode3(&self.u);
        let vh = fft_mode3(&self.v);
        signal_from_fourier(&uh, &vh, &self.cores[t])
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Column-orthogonal real factor built from Gaussian Fourier slices.
fn random_factor(rng: &mut ChaCha20Rng, n: usize, r: usize, n3: usize) -> Result<Tensor3> {
    let half = n3 / 2 + 1;
    let mut slices = Vec::with_capacity(n3);
    for k in 0..n3 {
        if k < half.min(n3) {
            let self_conj = is_self_conjugate(k, n3);
            slices.push(CMat::from_fn(n, r, |_, _| {
                let re = normal(rng);
                let im = if self_conj { 0.0 } else { normal(rng) };
                Complex64::new(re, im)
            }));
        } else {
            let mirror = slices[n3 - k].map(|z: Complex64| z.conj());
            slices.push(mirror);
        }
    }
    let q = orthonormalize_fourier_slices(&slices, true);
    ifft_mode3_real(&FourierTensor3::from_slices(q)?)
}

fn signal_from_fourier(uh: &FourierTensor3, vh: &FourierTensor3, core: &Tensor3) -> Result<Tensor3> {
    let sh = fft_mode3(core);
    let us = fourier_product(uh, &sh)?;
    let slices: Vec<CMat> = us.slices().iter().zip(vh.slices()).map(|(a, v)| a * v.adjoint()).collect();
    ifft_mode3_real(&FourierTensor3::from_slices(slices)?)
}

/// Draws a synthetic series `X_t = U * S_t * V^H + rho ‖S_t‖_F E_t`.
pub fn generate_syn(config: &SynConfig) -> Result<(TensorSeries, SynGroundTruth)> {
    let dims = config.validate()?;
    let (r, n3, len) = (config.r, config.n3, config.len);

    // Core diagonals: one AR recurrence per (j, k), driven by N(0, 1).
    let mut core_rng = stream(config.seed, STREAM_CORE);
    let p = config.ar_coeffs.len();
    let tubes = r * n3;
    let total = config.burn_in + len;
    let mut path = vec![vec![0.0f64; tubes]; total];
    for t in 0..total {
        let (past, rest) = path.split_at_mut(t);
        for (c, out) in rest[0].iter_mut().enumerate() {
            let mut v = normal(&mut core_rng);
            for (i, a) in config.ar_coeffs.iter().enumerate().take(p) {
                if t > i {
                    v += a * past[t - 1 - i][c];
                }
            }
            *out = v;
        }
    }
    let core_dims = Dims::new(r, r, n3)?;
    let cores: Vec<Tensor3> = path[config.burn_in..]
        .iter()
        .map(|diag| {
            let mut values = vec![0.0; core_dims.len()];
            for k in 0..n3 {
                for j in 0..r {
                    values[k * r * r + j * r + j] = diag[k * r + j];
                }
            }
            Tensor3::from_real(core_dims, values)
        })
        .collect::<Result<_>>()?;

    let u = random_factor(&mut stream(config.seed, STREAM_LEFT), config.n1, r, n3)?;
    let v = random_factor(&mut stream(config.seed, STREAM_RIGHT), config.n2, r, n3)?;
    let uh = fft_mode3(&u);
    let vh = fft_mode3(&v);

    let mut noise_rng = stream(config.seed, STREAM_NOISE);
    let mut slices = Vec::with_capacity(len);
    for core in &cores {
        let signal = signal_from_fourier(&uh, &vh, core)?;
        if config.rho == 0.0 {
            slices.push(signal);
            continue;
        }
        let scale = config.rho * core.fro_norm();
        let mut values = signal.real_part().to_vec();
        for v in values.iter_mut() {
            *v += scale * normal(&mut noise_rng);
        }
        slices.push(Tensor3::from_real(dims, values)?);
    }
    let series = TensorSeries::new(slices)?;
    Ok((series, SynGroundTruth { u, v, cores, ar_coeffs: config.ar_coeffs.clone() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{conj_transpose, identity_tensor, t_product};
    use crate::tsvd::{truncated_tsvd, tubal_rank};

    fn small(rho: f64, seed: u64) -> SynConfig {
        SynConfig { n1: 12, n2: 10, n3: 5, r: 3, len: 20, rho, seed, ..SynConfig::default() }
    }

    #[test]
    fn factors_are_column_orthogonal() {
        let (_, truth) = generate_syn(&small(0.0, 1)).unwrap();
        let i = identity_tensor(3, 5).unwrap();
        for f in [&truth.u, &truth.v] {
            assert!(f.is_real());
            let g = t_product(&conj_transpose(f), f).unwrap();
            assert!(g.sub(&i).unwrap().fro_norm() < 1e-10);
        }
    }

    #[test]
    fn noiseless_slices_have_tubal_rank_r() {
        let (series, truth) = generate_syn(&small(0.0, 2)).unwrap();
        for (t, x) in series.slices().iter().enumerate() {
            assert_eq!(tubal_rank(x, 1e-8), 3);
            // ‖S_t‖_F = ‖U * S_t * V^H‖_F
            assert!((x.fro_norm() - truth.cores[t].fro_norm()).abs() < 1e-8 * x.fro_norm());
            let d = truncated_tsvd(x, 3).unwrap();
            let rec = d.reconstruct().unwrap();
            assert!(rec.sub(x).unwrap().fro_norm() < 1e-8 * x.fro_norm());
        }
    }

    #[test]
    fn cores_are_f_diagonal_and_follow_recurrence_statistics() {
        let (_, truth) = generate_syn(&small(0.0, 3)).unwrap();
        for c in &truth.cores {
            for k in 0..5 {
                let s = c.frontal_slice(k);
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            assert_eq!(s[(i, j)].re, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn noise_ratio_matches_recipe() {
        // E‖ρ‖S‖E‖/‖S‖ = ρ E‖E‖ ≈ ρ sqrt(n1 n2 n3)
        let cfg = SynConfig { len: 100, ..small(0.01, 4) };
        let (series, truth) = generate_syn(&cfg).unwrap();
        let mut ratio = 0.0;
        for t in 0..cfg.len {
            let noise = series.get(t).sub(&truth.signal(t).unwrap()).unwrap();
            ratio += noise.fro_norm() / truth.cores[t].fro_norm();
        }
        ratio /= cfg.len as f64;
        let expect = cfg.rho * ((12 * 10 * 5) as f64).sqrt();
        assert!((ratio / expect - 1.0).abs() < 0.05, "ratio {ratio} expect {expect}");
    }

    #[test]
    fn same_seed_same_data() {
        let (a, _) = generate_syn(&small(0.01, 5)).unwrap();
        let (b, _) = generate_syn(&small(0.01, 5)).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_syn(&small(0.01, 6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs() {
        assert!(generate_syn(&SynConfig { r: 11, ..small(0.0, 1) }).is_err());
        assert!(generate_syn(&SynConfig { len: 0, ..small(0.0, 1) }).is_err());
        assert!(generate_syn(&SynConfig { rho: -1.0, ..small(0.0, 1) }).is_err());
        assert!(generate_syn(&SynConfig { n3: 0, ..small(0.0, 1) }).is_err());
    }
}
