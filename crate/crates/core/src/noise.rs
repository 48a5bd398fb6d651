//! Generalized-Gaussian measurement noise.
//!
//! The density is proportional to `exp(-(|e| / c)^beta)` with scale
//! `c = sigma * kappa(beta)`, so that `sigma` is the standard deviation for
//! every shape. `beta = 2` is Gaussian, `beta = 1` is Laplace and `beta < 1`
//! is heavy-tailed.
//!
//! The log-likelihood `ell(e) = -(|e| / c)^beta` is minorized at an anchor
//! `e_a` by the quadratic
//!
//! ```text
//! q(e) = -h(e_a) e^2 / 2 + C_q,   h(e_a) = |e_a|^(beta-2) / tau,
//! C_q = (|e_a| / c)^beta (beta/2 - 1),   tau = c^beta / beta,
//! ```
//!
//! which touches `ell` at `e_a` (value and slope) and lies below it for
//! `beta` in `[1, 2]`. Normalization constants of the density are dropped.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Error, Result};

/// Errors smaller than this are treated as exactly zero when `beta < 2`.
pub const SINGULAR_FLOOR: f64 = 1e-30;

/// `sqrt(Gamma(1/beta) / Gamma(3/beta))`: ratio between the scale `c` and the
/// standard deviation of a generalized-Gaussian variable.
pub fn kappa(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta", "must be positive and finite"));
    }
    // Work in log space; Gamma(3/beta) overflows for beta below ~0.02.
    let log_ratio = libm::lgamma(1.0 / beta) - libm::lgamma(3.0 / beta);
    Ok(libm::exp(0.5 * log_ratio))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    beta: f64,
    sigma: f64,
    c: f64,
    tau: f64,
}

impl NoiseModel {
    /// Noise with shape `beta` in `(0, 2]` and standard deviation `sigma > 0`.
    pub fn new(beta: f64, sigma: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", "must be positive and finite"));
        }
        let c = sigma * kappa(beta)?;
        Ok(Self {
            beta,
            sigma,
            c,
            tau: libm::pow(c, beta) / beta,
        })
    }

    /// Noise given by its scale parameter `c` instead of its standard deviation.
    pub fn from_scale(beta: f64, c: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("c", "must be positive and finite"));
        }
        Ok(Self {
            beta,
            sigma: c / kappa(beta)?,
            c,
            tau: libm::pow(c, beta) / beta,
        })
    }

    /// Noise whose `tau = c^beta / beta` takes the given value.
    pub fn from_tau(beta: f64, tau: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(invalid("tau", "must be positive and finite"));
        }
        let c = libm::pow(beta * tau, 1.0 / beta);
        Ok(Self {
            beta,
            sigma: c / kappa(beta)?,
            c,
            tau,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Log-density up to an additive constant: `-(|e| / c)^beta`.
    pub fn ell(&self, e: f64) -> f64 {
        -libm::pow(libm::fabs(e) / self.c, self.beta)
    }

    /// Curvature `h(e) = |e|^(beta-2) / tau` of the minorizing quadratic.
    ///
    /// Constant (`1 / sigma^2`) for the Gaussian case. For `beta < 2` it
    /// diverges at zero and [`Error::SingularAnchor`] is returned below
    /// [`SINGULAR_FLOOR`].
    pub fn h_coeff(&self, e: f64) -> Result<f64> {
        if self.is_gaussian() {
            return Ok(1.0 / self.tau);
        }
        let abs_e = libm::fabs(e);
        if abs_e < SINGULAR_FLOOR {
            return Err(Error::SingularAnchor);
        }
        Ok(libm::pow(abs_e, self.beta - 2.0) / self.tau)
    }

    /// Quadratic minorizer of [`ell`](Self::ell) anchored at `e_anchor`,
    /// evaluated at `e`. The constant `C_q` is kept so that the surrogate
    /// touches `ell` at the anchor.
    pub fn surrogate_q(&self, e: f64, e_anchor: f64) -> Result<f64> {
        let h = self.h_coeff(e_anchor)?;
        let c_q = libm::pow(libm::fabs(e_anchor) / self.c, self.beta) * (0.5 * self.beta - 1.0);
        Ok(-0.5 * h * e * e + c_q)
    }

    pub fn is_gaussian(&self) -> bool {
        self.beta == 2.0
    }

    /// `count` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    /// Gamma-power method: `G ~ Gamma(1/beta, 1)`, `e = +-c * G^(1/beta)`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        // shape 1/beta and scale 1 are always valid here
        let gamma = Gamma::new(1.0 / self.beta, 1.0).expect("valid gamma parameters");
        let inv_beta = 1.0 / self.beta;
        (0..count)
            .map(|_| {
                let g: f64 = gamma.sample(rng);
                let magnitude = self.c * libm::pow(g, inv_beta);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(invalid("beta", "must lie in (0, 2]"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::{gamma, ln_gamma};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn kappa_closed_forms() {
        assert!((kappa(2.0).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((kappa(1.0).unwrap() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn kappa_matches_gamma_oracle() {
        for &beta in &[0.2, 0.5, 0.8, 1.0, 1.3, 1.7, 2.0] {
            let oracle = (gamma(1.0 / beta) / gamma(3.0 / beta)).sqrt();
            let got = kappa(beta).unwrap();
            assert!(
                (got - oracle).abs() <= 1e-12 * oracle,
                "beta={beta}: {got} vs {oracle}"
            );
        }
        // frozen from the oracle: sqrt(Gamma(5)/Gamma(15))
        assert!((kappa(0.2).unwrap() - 1.659_210_337_315_656e-5).abs() < 1e-17);
    }

    #[test]
    fn kappa_rejects_non_positive() {
        assert!(kappa(0.0).is_err());
        assert!(kappa(-1.0).is_err());
        assert!(kappa(f64::NAN).is_err());
    }

    #[test]
    fn derived_scale_and_tau() {
        let g = NoiseModel::new(2.0, 1.5).unwrap();
        assert!((g.tau() - 2.25).abs() < 1e-14);
        let l = NoiseModel::new(1.0, 1.0).unwrap();
        assert!((l.c() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((l.tau() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let t = NoiseModel::from_tau(1.5, 0.3).unwrap();
        assert!((t.tau() - 0.3).abs() < 1e-15);
        let back = NoiseModel::new(1.5, t.sigma()).unwrap();
        assert!((back.tau() - 0.3).abs() < 1e-14);
        assert!(NoiseModel::new(2.5, 1.0).is_err());
        assert!(NoiseModel::new(1.0, 0.0).is_err());
    }

    #[test]
    fn ell_examples() {
        let lap = NoiseModel::from_scale(1.0, 1.0).unwrap();
        assert_eq!(lap.ell(1.5), -1.5);
        let g = NoiseModel::new(2.0, 1.0).unwrap();
        assert_eq!(g.ell(0.0), 0.0);
        assert!((g.ell(1.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn h_examples() {
        let g = NoiseModel::new(2.0, 1.0).unwrap();
        for &e in &[0.0, 0.3, -4.0, 1e9] {
            assert!((g.h_coeff(e).unwrap() - 1.0).abs() < 1e-15);
        }
        let l = NoiseModel::new(1.0, 1.0).unwrap();
        assert!((l.h_coeff(1.0).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-14);
        let lap = NoiseModel::from_scale(1.0, 1.0).unwrap();
        assert!((lap.h_coeff(1.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(lap.h_coeff(0.0), Err(Error::SingularAnchor));
        assert_eq!(lap.surrogate_q(1.0, 1e-31), Err(Error::SingularAnchor));
    }

    #[test]
    fn surrogate_examples() {
        let lap = NoiseModel::from_scale(1.0, 1.0).unwrap();
        for &e in &[-2.0, 0.0, 0.7, 1.5, 3.0] {
            let q = lap.surrogate_q(e, 1.5).unwrap();
            assert!((q - (-e * e / 3.0 - 0.75)).abs() < 1e-14);
        }
        assert!((lap.surrogate_q(1.5, 1.5).unwrap() + 1.5).abs() < 1e-14);
        assert!((lap.surrogate_q(3.0, 1.5).unwrap() + 3.75).abs() < 1e-14);
        assert_eq!(lap.ell(3.0), -3.0);

        let g = NoiseModel::new(2.0, 0.7).unwrap();
        for &(e, a) in &[(0.3, 2.0), (-1.0, 0.0), (5.0, -3.0)] {
            assert!((g.surrogate_q(e, a).unwrap() - g.ell(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_h_is_inverse_variance() {
        for &sigma in &[0.01, 0.5, 1.0, 3.0, 40.0] {
            let g = NoiseModel::new(2.0, sigma).unwrap();
            let want = 1.0 / (sigma * sigma);
            for &e in &[-10.0, 0.0, 1e-3, 2.5] {
                assert!((g.h_coeff(e).unwrap() - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn sample_empty() {
        assert!(NoiseModel::new(1.0, 1.0).unwrap().sample(3, 0).is_empty());
    }

    #[test]
    fn sample_is_deterministic() {
        let m = NoiseModel::new(0.2, 2.0).unwrap();
        assert_eq!(m.sample(11, 100), m.sample(11, 100));
        assert_ne!(m.sample(11, 100), m.sample(12, 100));
    }

    #[test]
    fn gaussian_sample_variance() {
        let d = NoiseModel::new(2.0, 1.0).unwrap().sample(7, 1_000_000);
        let n = d.len() as f64;
        let var = d.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((0.99..=1.01).contains(&var), "variance {var}");
    }

    #[test]
    fn laplace_sample_kurtosis() {
        let d = NoiseModel::new(1.0, 1.0).unwrap().sample(8, 1_000_000);
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let m2 = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = d.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let kurt = m4 / (m2 * m2);
        assert!((kurt - 6.0).abs() < 0.3, "kurtosis {kurt}");
    }

    fn theoretical_kurtosis(beta: f64) -> f64 {
        (ln_gamma(5.0 / beta) + ln_gamma(1.0 / beta) - 2.0 * ln_gamma(3.0 / beta)).exp()
    }

    #[test]
    fn sampler_moments_across_shapes() {
        let n = 200_000;
        for (i, &beta) in [0.2, 0.5, 1.0, 1.5, 2.0].iter().enumerate() {
            let sigma = 1.7;
            let d = NoiseModel::new(beta, sigma)
                .unwrap()
                .sample(100 + i as u64, n);
            let nf = n as f64;
            let mean = d.iter().sum::<f64>() / nf;
            assert!(
                mean.abs() < 5.0 * sigma / nf.sqrt(),
                "beta={beta}: mean {mean}"
            );
            let var = d.iter().map(|x| x * x).sum::<f64>() / nf;
            let v = sigma * sigma;
            let se = v * ((theoretical_kurtosis(beta) - 1.0) / nf).sqrt();
            assert!(
                (var - v).abs() < 3.0 * se,
                "beta={beta}: var {var} vs {v} (se {se})"
            );
        }
    }

    #[test]
    fn heavy_tail_kappa_gives_unit_variance() {
        let d = NoiseModel::new(0.2, 1.0).unwrap().sample(5, 1_000_000);
        let nf = d.len() as f64;
        let var = d.iter().map(|x| x * x).sum::<f64>() / nf;
        let se = ((theoretical_kurtosis(0.2) - 1.0) / nf).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var {var}, se {se}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn surrogate_minorizes(
            beta in 1.0f64..=2.0,
            c in 1e-3f64..=10.0,
            anchor in prop_oneof![-50.0f64..-1e-3, 1e-3f64..50.0],
            e in -100.0f64..100.0,
        ) {
            let m = NoiseModel::from_scale(beta, c).unwrap();
            let q = m.surrogate_q(e, anchor).unwrap();
            let l = m.ell(e);
            prop_assert!(q <= l + 1e-12 * l.abs().max(1.0), "q={} ell={}", q, l);
            let qa = m.surrogate_q(anchor, anchor).unwrap();
            let la = m.ell(anchor);
            prop_assert!((qa - la).abs() <= 1e-12 * la.abs().max(1.0));
        }

        #[test]
        fn surrogate_slope_matches(
            beta in 1.0f64..=2.0,
            c in 1e-2f64..=10.0,
            anchor in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0],
        ) {
            let m = NoiseModel::from_scale(beta, c).unwrap();
            let d = 1e-6 * anchor.abs();
            let dq = (m.surrogate_q(anchor + d, anchor).unwrap()
                - m.surrogate_q(anchor - d, anchor).unwrap()) / (2.0 * d);
            let dl = (m.ell(anchor + d) - m.ell(anchor - d)) / (2.0 * d);
            prop_assert!(close(dq, dl, 1e-6), "dq={} dl={}", dq, dl);
        }
    }
}
