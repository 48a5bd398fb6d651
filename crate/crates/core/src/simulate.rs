//! System-identification experiments: an AR(1) input drives a fixed FIR
//! system, generalized-Gaussian noise is added at a calibrated SNR, and a
//! filter's misalignment `|w_t - h|^2 / |h|^2` is recorded after every sample.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::filters::{init_state, FilterConfig};
use crate::linalg::{dot, norm_sq};
use crate::noise::NoiseModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// True impulse response.
    pub h: Vec<f64>,
    /// AR(1) coefficient in `x_t = -a x_{t-1} + u_t`.
    pub a: f64,
    /// Innovation variance of the AR(1) input.
    pub v_u: f64,
    /// Output SNR in dB; `+inf` gives a noiseless output.
    pub snr_db: f64,
    /// Shape of the generated measurement noise.
    pub beta_star: f64,
    pub horizon: usize,
    pub realizations: usize,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_ar(self.a)?;
        // v_u = 0 is accepted as the degenerate all-zero input
        if !(self.v_u >= 0.0) || !self.v_u.is_finite() {
            return Err(invalid("v_u", "must be finite and >= 0"));
        }
        if self.h.is_empty() || !(norm_sq(&self.h) > 0.0) {
            return Err(invalid(
                "h",
                "impulse response must be non-empty with nonzero norm",
            ));
        }
        if self.horizon < 1 {
            return Err(invalid("T", "horizon must be at least 1"));
        }
        if self.realizations < 1 {
            return Err(invalid("N", "need at least one realization"));
        }
        if self.snr_db.is_nan() {
            return Err(invalid("snr_db", "must not be NaN"));
        }
        if !(self.beta_star > 0.0 && self.beta_star <= 2.0) {
            return Err(invalid("beta_star", "must lie in (0, 2]"));
        }
        Ok(())
    }

    /// Variance `v*_eta` of the generated noise.
    pub fn noise_variance(&self) -> Result<f64> {
        noise_variance_for_snr(&self.h, self.a, self.v_u, self.snr_db)
    }

    /// Generated-noise model, or `None` when the output is noiseless.
    pub fn noise_model(&self) -> Result<Option<NoiseModel>> {
        let v = self.noise_variance()?;
        if v > 0.0 {
            NoiseModel::new(self.beta_star, libm::sqrt(v)).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Filter-side noise model with shape `beta` and the true noise variance.
    /// Falls back to unit variance for a noiseless scenario.
    pub fn assumed_noise(&self, beta: f64) -> Result<NoiseModel> {
        let v = self.noise_variance()?;
        NoiseModel::new(beta, if v > 0.0 { libm::sqrt(v) } else { 1.0 })
    }
}

/// Misalignment trajectory; entry `t` is measured after processing sample `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub misalignment: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.misalignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.misalignment.is_empty()
    }

    /// `10 log10(m_t)`; zero misalignment maps to `-inf`.
    pub fn db(&self) -> Vec<f64> {
        self.misalignment.iter().map(|&m| to_db(m)).collect()
    }

    /// Mean of equally long trajectories, summed in iteration order.
    pub fn mean<'a, I>(trajectories: I) -> Result<Trajectory>
    where
        I: IntoIterator<Item = &'a Trajectory>,
    {
        let mut acc: Option<EnsembleMean> = None;
        for t in trajectories {
            acc.get_or_insert_with(|| EnsembleMean::new(t.len()))
                .add(t)?;
        }
        acc.ok_or(invalid("N", "need at least one trajectory"))?
            .finish()
    }
}

/// Running ensemble sum. Adding trajectories in the same order always yields
/// bitwise-identical means.
#[derive(Debug, Clone)]
pub struct EnsembleMean {
    sum: Vec<f64>,
    count: usize,
}

impl EnsembleMean {
    pub fn new(len: usize) -> Self {
        Self {
            sum: alloc::vec![0.0; len],
            count: 0,
        }
    }

    pub fn add(&mut self, t: &Trajectory) -> Result<()> {
        if t.len() != self.sum.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sum.len(),
                actual: t.len(),
            });
        }
        for (s, m) in self.sum.iter_mut().zip(&t.misalignment) {
            *s += m;
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<Trajectory> {
        if self.count == 0 {
            return Err(invalid("N", "need at least one trajectory"));
        }
        let n = self.count as f64;
        Ok(Trajectory {
            misalignment: self.sum.into_iter().map(|s| s / n).collect(),
        })
    }
}

pub fn to_db(m: f64) -> f64 {
    10.0 * libm::log10(m)
}

fn check_ar(a: f64) -> Result<()> {
    if !(libm::fabs(a) < 1.0) {
        return Err(invalid("a", "AR(1) coefficient must satisfy |a| < 1"));
    }
    Ok(())
}

/// `x_t = -a x_{t-1} + u_t` with Gaussian `u_t` of variance `v_u`, started
/// from the stationary distribution.
pub fn generate_ar1(a: f64, v_u: f64, len: usize, seed: u64) -> Result<Vec<f64>> {
    check_ar(a)?;
    if !(v_u >= 0.0) || !v_u.is_finite() {
        return Err(invalid("v_u", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd_u = libm::sqrt(v_u);
    let sd_x = libm::sqrt(v_u / (1.0 - a * a));
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return Ok(out);
    }
    let z: f64 = StandardNormal.sample(&mut rng);
    let mut prev = sd_x * z;
    out.push(prev);
    for _ in 1..len {
        let z: f64 = StandardNormal.sample(&mut rng);
        prev = -a * prev + sd_u * z;
        out.push(prev);
    }
    Ok(out)
}

/// `E[(x_t' h)^2] = h' R h` with `R_ij = v_x (-a)^|i-j|`, `v_x = v_u / (1 - a^2)`.
pub fn analytic_signal_power(h: &[f64], a: f64, v_u: f64) -> Result<f64> {
    check_ar(a)?;
    let v_x = v_u / (1.0 - a * a);
    let m = h.len();
    // lag-k autocorrelation sum: sum_i h_i h_{i+k}
    let mut power = 0.0;
    let mut rho = 1.0;
    for k in 0..m {
        let lag: f64 = h[..m - k].iter().zip(&h[k..]).map(|(p, q)| p * q).sum();
        power += if k == 0 { lag } else { 2.0 * rho * lag };
        rho *= -a;
    }
    Ok(v_x * power)
}

/// Noise variance giving the requested output SNR.
pub fn noise_variance_for_snr(h: &[f64], a: f64, v_u: f64, snr_db: f64) -> Result<f64> {
    let power = analytic_signal_power(h, a, v_u)?;
    Ok(power / libm::pow(10.0, snr_db / 10.0))
}

/// Gaussian taps under an exponential envelope `exp(-m / decay)`, scaled to
/// unit norm. An infinite `decay` removes the envelope.
pub fn synthetic_impulse_response(m: usize, decay: f64, seed: u64) -> Result<Vec<f64>> {
    if m < 1 {
        return Err(invalid("M", "filter length must be at least 1"));
    }
    if !(decay > 0.0) {
        return Err(invalid("decay", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h: Vec<f64> = (0..m)
        .map(|i| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * libm::exp(-(i as f64) / decay)
        })
        .collect();
    let norm = libm::sqrt(norm_sq(&h));
    if !(norm > 0.0) {
        return Err(invalid("h", "degenerate impulse response"));
    }
    for v in &mut h {
        *v /= norm;
    }
    Ok(h)
}

pub fn misalignment(w: &[f64], h: &[f64]) -> f64 {
    let num: f64 = w.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum();
    num / norm_sq(h)
}

/// Independent seeds for the input and noise streams of one trial.
pub fn stream_seeds(trial_seed: u64) -> (u64, u64) {
    let base = trial_seed.wrapping_mul(2);
    (base, base.wrapping_add(1))
}

/// Input samples and noisy outputs of one realization.
pub fn realization(scenario: &Scenario, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    scenario.validate()?;
    let (input_seed, noise_seed) = stream_seeds(seed);
    let len = scenario.horizon;
    let input = generate_ar1(scenario.a, scenario.v_u, len, input_seed)?;
    let noise = match scenario.noise_model()? {
        Some(model) => model.sample(noise_seed, len),
        None => alloc::vec![0.0; len],
    };
    let mut regressor = alloc::vec![0.0; scenario.dim()];
    let outputs = input
        .iter()
        .zip(&noise)
        .map(|(&x, &eta)| {
            push_regressor(&mut regressor, x);
            dot(&regressor, &scenario.h) + eta
        })
        .collect();
    Ok((input, outputs))
}

fn push_regressor(regressor: &mut [f64], sample: f64) {
    let m = regressor.len();
    regressor.copy_within(0..m - 1, 1);
    regressor[0] = sample;
}

/// Runs one realization; the regressor `[x_t, ..., x_{t-M+1}]` starts from
/// zero pre-history.
pub fn run_trial(scenario: &Scenario, config: &FilterConfig, seed: u64) -> Result<Trajectory> {
    let (input, outputs) = realization(scenario, seed)?;
    let mut state = init_state(config, scenario.dim())?;
    let mut regressor = alloc::vec![0.0; scenario.dim()];
    let mut misalign = Vec::with_capacity(scenario.horizon);
    let h_energy = norm_sq(&scenario.h);
    for (&x, &y) in input.iter().zip(&outputs) {
        push_regressor(&mut regressor, x);
        state.advance(config, &regressor, y)?;
        let err: f64 = state
            .w
            .iter()
            .zip(&scenario.h)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        misalign.push(err / h_energy);
    }
    Ok(Trajectory {
        misalignment: misalign,
    })
}

/// Seed of trial `i` in an ensemble.
pub fn trial_seed(base_seed: u64, i: usize) -> u64 {
    base_seed.wrapping_add(i as u64)
}

/// Mean trajectory over `scenario.realizations` trials seeded `base_seed + i`.
pub fn run_ensemble(
    scenario: &Scenario,
    config: &FilterConfig,
    base_seed: u64,
) -> Result<Trajectory> {
    scenario.validate()?;
    let mut acc = EnsembleMean::new(scenario.horizon);
    for i in 0..scenario.realizations {
        acc.add(&run_trial(scenario, config, trial_seed(base_seed, i))?)?;
    }
    acc.finish()
}
