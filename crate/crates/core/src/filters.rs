//! The adaptive-filter family as one approximate Kalman recursion.
//!
//! Each step predicts the state covariance (`V + eps I`), forms the preliminary
//! gain `kappa = Vbar x` and the predictor moment `s = x' kappa`, and then
//! updates the mean with `w = w_prev + kappa * alpha * e` where the gain
//! multiplier `alpha = 1 / (tau |e|^(2-beta) + s)` comes from the quadratic
//! minorizer of the noise log-likelihood. The covariance representation
//! selects the variant:
//!
//! | variant | covariance kept            | knob      |
//! |---------|----------------------------|-----------|
//! | KF      | full matrix                | `epsilon` |
//! | vKF     | diagonal                   | `epsilon` |
//! | sKF     | one shared variance        | `epsilon` |
//! | fKF     | frozen, folded into `reg`  | `reg`     |
//! | SG      | none (gradient step)       | `mu`      |
//!
//! For `beta < 2` the multiplier can be refined by re-anchoring the minorizer
//! at the updated error (`refine_iters` extra passes). The innovation applied
//! is always the error at the prior mean, so every pass maximizes a minorizer
//! of the same posterior objective and the objective never decreases.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_solve, dot, mat_vec, norm_sq};
use crate::noise::{NoiseModel, SINGULAR_FLOOR};

/// Relative change in `alpha` below which refinement stops early.
pub const REFINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Kf,
    Vkf,
    Skf,
    Fkf,
    Sg,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Kf,
        Variant::Vkf,
        Variant::Skf,
        Variant::Fkf,
        Variant::Sg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Kf => "KF",
            Variant::Vkf => "vKF",
            Variant::Skf => "sKF",
            Variant::Fkf => "fKF",
            Variant::Sg => "SG",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("variant", "expected one of KF, vKF, sKF, fKF, SG"))
    }
}

/// Covariance of the state estimate.
///
/// `Full` is row-major `M x M`. `Fixed` is never updated; the fKF and SG
/// variants store `1.0` there and carry their scale in `reg` / `mu`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceRepr {
    Full(Vec<f64>),
    Vector(Vec<f64>),
    Scalar(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub variant: Variant,
    /// Assumed measurement noise; `beta` must lie in `[1, 2]`.
    pub noise: NoiseModel,
    /// Process-noise variance per state element (KF, vKF, sKF).
    pub epsilon: f64,
    /// Extra gain-multiplier refinement passes.
    pub refine_iters: usize,
    /// Prior variance of the initial state elements (KF, vKF, sKF).
    pub v0: f64,
    /// Adaptation step (SG).
    pub mu: f64,
    /// Regularization `tau / vbar` (fKF).
    pub reg: f64,
}

impl FilterConfig {
    fn with_variant(variant: Variant, noise: NoiseModel) -> Self {
        Self {
            variant,
            noise,
            epsilon: 0.0,
            refine_iters: 0,
            v0: 1.0,
            mu: 0.0,
            reg: 0.0,
        }
    }

    pub fn kf(noise: NoiseModel, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::with_variant(Variant::Kf, noise)
        }
    }

    pub fn vkf(noise: NoiseModel, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::with_variant(Variant::Vkf, noise)
        }
    }

    pub fn skf(noise: NoiseModel, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::with_variant(Variant::Skf, noise)
        }
    }

    pub fn fkf(noise: NoiseModel, reg: f64) -> Self {
        Self {
            reg,
            ..Self::with_variant(Variant::Fkf, noise)
        }
    }

    pub fn sg(noise: NoiseModel, mu: f64) -> Self {
        Self {
            mu,
            ..Self::with_variant(Variant::Sg, noise)
        }
    }

    /// Builds a config for `variant` with its single knob set to `knob`.
    pub fn for_variant(variant: Variant, noise: NoiseModel, knob: f64) -> Self {
        match variant {
            Variant::Kf => Self::kf(noise, knob),
            Variant::Vkf => Self::vkf(noise, knob),
            Variant::Skf => Self::skf(noise, knob),
            Variant::Fkf => Self::fkf(noise, knob),
            Variant::Sg => Self::sg(noise, knob),
        }
    }

    pub fn with_refine(mut self, iters: usize) -> Self {
        self.refine_iters = iters;
        self
    }

    pub fn with_v0(mut self, v0: f64) -> Self {
        self.v0 = v0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let beta = self.noise.beta();
        if !(1.0..=2.0).contains(&beta) {
            return Err(invalid("beta", "filters require beta in [1, 2]"));
        }
        match self.variant {
            Variant::Kf | Variant::Vkf | Variant::Skf => {
                if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
                    return Err(invalid("epsilon", "must be finite and >= 0"));
                }
                if !(self.v0 > 0.0) || !self.v0.is_finite() {
                    return Err(invalid("v0", "must be finite and > 0"));
                }
            }
            Variant::Fkf => {
                if !(self.reg > 0.0) || !self.reg.is_finite() {
                    return Err(invalid("reg", "must be finite and > 0"));
                }
            }
            Variant::Sg => {
                if !(self.mu > 0.0) || !self.mu.is_finite() {
                    return Err(invalid("mu", "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }

    /// `tau` entering the gain multiplier. For fKF the fixed variance is
    /// folded in, leaving `tau / vbar = reg` with `vbar = 1`.
    fn gain_tau(&self) -> f64 {
        match self.variant {
            Variant::Fkf => self.reg,
            _ => self.noise.tau(),
        }
    }

    /// Noise model whose surrogate drives the recursion. Equal to `noise`
    /// except for fKF, where `tau` is replaced by `reg` (see [`CovarianceRepr`]).
    pub fn likelihood(&self) -> Result<NoiseModel> {
        match self.variant {
            Variant::Fkf => NoiseModel::from_tau(self.noise.beta(), self.reg),
            _ => Ok(self.noise),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub w: Vec<f64>,
    pub cov: CovarianceRepr,
    pub t: u64,
}

impl FilterState {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// In-place version of [`step`]. Inputs are validated before anything is
    /// touched; if the update itself overflows, `NonFinite` is returned and
    /// the state must be discarded.
    pub fn advance(&mut self, config: &FilterConfig, x: &[f64], y: f64) -> Result<StepRecord> {
        check_inputs(self, x, y)?;
        let record = if config.variant == Variant::Sg {
            sg_update(&mut self.w, config, x, y)
        } else {
            let (kappa, s) = predict_in_place(&mut self.cov, config, x);
            let outcome = refine(&self.w, &kappa, s, x, y, config, |_| {});
            self.w = outcome.w;
            update_covariance(&mut self.cov, &kappa, x, s, outcome.alpha);
            StepRecord {
                e: outcome.e0,
                s,
                h: outcome.h,
                alpha: outcome.alpha,
                iters_used: outcome.iters_used,
            }
        };
        self.t += 1;
        if !self.is_finite() {
            return Err(Error::NonFinite("filter state"));
        }
        Ok(record)
    }

    pub fn is_finite(&self) -> bool {
        let cov_ok = match &self.cov {
            CovarianceRepr::Full(v) | CovarianceRepr::Vector(v) => v.iter().all(|x| x.is_finite()),
            CovarianceRepr::Scalar(v) | CovarianceRepr::Fixed(v) => v.is_finite(),
        };
        cov_ok && self.w.iter().all(|x| x.is_finite())
    }
}

/// Per-sample diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Prediction error at the prior mean.
    pub e: f64,
    /// Second moment of the predictor under the predicted covariance.
    pub s: f64,
    /// Surrogate curvature at the final anchor; `None` for the zero-error
    /// limit form (and for SG, which has no gain multiplier).
    pub h: Option<f64>,
    pub alpha: f64,
    /// Refinement passes performed beyond the first gain evaluation.
    pub iters_used: usize,
}

/// Predicted covariance together with the preliminary gain and `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub cov: CovarianceRepr,
    pub kappa: Vec<f64>,
    pub s: f64,
}

pub fn init_state(config: &FilterConfig, m: usize) -> Result<FilterState> {
    if m < 1 {
        return Err(invalid("M", "filter length must be at least 1"));
    }
    config.validate()?;
    let v0 = config.v0;
    let cov = match config.variant {
        Variant::Kf => {
            let mut v = alloc::vec![0.0; m * m];
            for i in 0..m {
                v[i * m + i] = v0;
            }
            CovarianceRepr::Full(v)
        }
        Variant::Vkf => CovarianceRepr::Vector(alloc::vec![v0; m]),
        Variant::Skf => CovarianceRepr::Scalar(v0),
        Variant::Fkf | Variant::Sg => CovarianceRepr::Fixed(1.0),
    };
    Ok(FilterState {
        w: alloc::vec![0.0; m],
        cov,
        t: 0,
    })
}

pub fn predict(state: &FilterState, config: &FilterConfig, x: &[f64]) -> Result<Prediction> {
    check_dims(state, x)?;
    let mut cov = state.cov.clone();
    let (kappa, s) = predict_in_place(&mut cov, config, x);
    Ok(Prediction { cov, kappa, s })
}

/// `1 / (tau |e|^(2-beta) + s)`, with the limit `1 / s` (or 0 when `s = 0`)
/// for a vanishing error and `beta < 2`.
pub fn gain_multiplier(noise: &NoiseModel, e: f64, s: f64) -> f64 {
    gain_with_tau(noise.beta(), noise.tau(), e, s)
}

fn gain_with_tau(beta: f64, tau: f64, e: f64, s: f64) -> f64 {
    let abs_e = libm::fabs(e);
    if beta < 2.0 && abs_e < SINGULAR_FLOOR {
        return if s > 0.0 { 1.0 / s } else { 0.0 };
    }
    1.0 / (tau * libm::pow(abs_e, 2.0 - beta) + s)
}

/// One filter step as a pure transition.
pub fn step(
    state: &FilterState,
    config: &FilterConfig,
    x: &[f64],
    y: f64,
) -> Result<(FilterState, StepRecord)> {
    let mut next = state.clone();
    let record = next.advance(config, x, y)?;
    Ok((next, record))
}

/// The sequence `w_{t,0} = w_{t-1}, w_{t,1}, ..., w_{t,I'+1}` visited by the
/// refinement loop (`I'` is the number of passes actually performed), along
/// with the prediction it used. SG has no refinement and yields its single
/// update.
pub fn refinement_path(
    state: &FilterState,
    config: &FilterConfig,
    x: &[f64],
    y: f64,
) -> Result<(Prediction, Vec<Vec<f64>>)> {
    check_inputs(state, x, y)?;
    let mut path = alloc::vec![state.w.clone()];
    if config.variant == Variant::Sg {
        let mut w = state.w.clone();
        sg_update(&mut w, config, x, y);
        path.push(w);
        let pred = predict(state, config, x)?;
        return Ok((pred, path));
    }
    let pred = predict(state, config, x)?;
    refine(&state.w, &pred.kappa, pred.s, x, y, config, |w| {
        path.push(w.to_vec())
    });
    Ok((pred, path))
}

/// `ell(y - x'w) - (w - w_prev)' Vbar^{-1} (w - w_prev) / 2`, dropping the
/// normalization of the Gaussian prior.
pub fn posterior_objective(
    w_prev: &[f64],
    cov_pred: &CovarianceRepr,
    noise: &NoiseModel,
    x: &[f64],
    y: f64,
    w: &[f64],
) -> Result<f64> {
    let m = w_prev.len();
    if x.len() != m || w.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: if x.len() != m { x.len() } else { w.len() },
        });
    }
    let d: Vec<f64> = w.iter().zip(w_prev).map(|(a, b)| a - b).collect();
    let quad = match cov_pred {
        CovarianceRepr::Full(v) => {
            if v.len() != m * m {
                return Err(Error::DimensionMismatch {
                    expected: m * m,
                    actual: v.len(),
                });
            }
            let z = cholesky_solve(v, &d).ok_or(Error::SingularCovariance)?;
            dot(&d, &z)
        }
        CovarianceRepr::Vector(v) => {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: v.len(),
                });
            }
            if v.iter().any(|&vi| !(vi > 0.0)) {
                return Err(Error::SingularCovariance);
            }
            d.iter().zip(v).map(|(di, vi)| di * di / vi).sum()
        }
        CovarianceRepr::Scalar(v) | CovarianceRepr::Fixed(v) => {
            if !(*v > 0.0) {
                return Err(Error::SingularCovariance);
            }
            norm_sq(&d) / v
        }
    };
    Ok(noise.ell(y - dot(x, w)) - 0.5 * quad)
}

/// Closed-form updates as printed for the classical special cases. These are
/// written independently of [`step`] and serve as cross-checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceForm {
    /// `w + mu x e`
    Lms { mu: f64 },
    /// `w + x e / |x|^2`
    Nlms,
    /// `w + x e / (v_eta / vbar + |x|^2)`
    RegularizedNlms { noise_var: f64, vbar: f64 },
    /// `w + x e / (v_eta / vbar_t + |x|^2)` with `vbar_t = v_prev + eps` and
    /// `v_t = vbar_t (1 - |x|^2 / (M (v_eta / vbar_t + |x|^2)))`.
    BroadbandKalman {
        noise_var: f64,
        v_prev: f64,
        epsilon: f64,
    },
    /// `w + x e / (|e|^(2-beta) tau / vbar + |x|^2)`
    RobustFkf { beta: f64, tau: f64, vbar: f64 },
    /// Robust sKF: as `RobustFkf` with `vbar_t = v_prev + eps`, plus
    /// `v_t = vbar_t (1 - |x|^2 / (M (|e|^(2-beta) tau / vbar_t + |x|^2)))`.
    RobustSkf {
        beta: f64,
        tau: f64,
        v_prev: f64,
        epsilon: f64,
    },
    /// `w + mu x sign(e)`
    SignLms { mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOutput {
    pub w: Vec<f64>,
    /// Updated shared variance, for the forms that carry one.
    pub v: Option<f64>,
}

pub fn reference_update(
    form: ReferenceForm,
    w: &[f64],
    x: &[f64],
    y: f64,
) -> Result<ReferenceOutput> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: x.len(),
        });
    }
    let m = w.len() as f64;
    let e = y - dot(x, w);
    let xx = norm_sq(x);
    let axpy = |g: f64| {
        w.iter()
            .zip(x)
            .map(|(wi, xi)| wi + g * xi)
            .collect::<Vec<f64>>()
    };
    let nonzero = |den: f64, what: &'static str| {
        if den == 0.0 {
            Err(Error::DivisionByZero(what))
        } else {
            Ok(den)
        }
    };
    let out = match form {
        ReferenceForm::Lms { mu } => ReferenceOutput {
            w: axpy(mu * e),
            v: None,
        },
        ReferenceForm::Nlms => {
            let den = nonzero(xx, "NLMS normalization")?;
            ReferenceOutput {
                w: axpy(e / den),
                v: None,
            }
        }
        ReferenceForm::RegularizedNlms { noise_var, vbar } => {
            let den = nonzero(noise_var / vbar + xx, "regularized NLMS")?;
            ReferenceOutput {
                w: axpy(e / den),
                v: None,
            }
        }
        ReferenceForm::BroadbandKalman {
            noise_var,
            v_prev,
            epsilon,
        } => {
            let vbar = v_prev + epsilon;
            let den = nonzero(noise_var / vbar + xx, "broadband Kalman")?;
            ReferenceOutput {
                w: axpy(e / den),
                v: Some(vbar * (1.0 - xx / (m * den))),
            }
        }
        ReferenceForm::RobustFkf { beta, tau, vbar } => {
            let den = nonzero(
                libm::pow(libm::fabs(e), 2.0 - beta) * tau / vbar + xx,
                "robust fKF",
            )?;
            ReferenceOutput {
                w: axpy(e / den),
                v: None,
            }
        }
        ReferenceForm::RobustSkf {
            beta,
            tau,
            v_prev,
            epsilon,
        } => {
            let vbar = v_prev + epsilon;
            let den = nonzero(
                libm::pow(libm::fabs(e), 2.0 - beta) * tau / vbar + xx,
                "robust sKF",
            )?;
            ReferenceOutput {
                w: axpy(e / den),
                v: Some(vbar * (1.0 - xx / (m * den))),
            }
        }
        ReferenceForm::SignLms { mu } => ReferenceOutput {
            w: axpy(mu * sign(e)),
            v: None,
        },
    };
    Ok(out)
}

fn sign(e: f64) -> f64 {
    if e > 0.0 {
        1.0
    } else if e < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_dims(state: &FilterState, x: &[f64]) -> Result<()> {
    if x.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

fn check_inputs(state: &FilterState, x: &[f64], y: f64) -> Result<()> {
    check_dims(state, x)?;
    if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input"));
    }
    Ok(())
}

fn predict_in_place(cov: &mut CovarianceRepr, config: &FilterConfig, x: &[f64]) -> (Vec<f64>, f64) {
    let m = x.len();
    let eps = config.epsilon;
    let mut kappa = alloc::vec![0.0; m];
    let s = match cov {
        CovarianceRepr::Full(v) => {
            for i in 0..m {
                v[i * m + i] += eps;
            }
            mat_vec(v, x, &mut kappa);
            dot(x, &kappa)
        }
        CovarianceRepr::Vector(v) => {
            for ((k, vi), xi) in kappa.iter_mut().zip(v.iter_mut()).zip(x) {
                *vi += eps;
                *k = *vi * xi;
            }
            dot(x, &kappa)
        }
        CovarianceRepr::Scalar(v) => {
            *v += eps;
            scale_into(&mut kappa, *v, x);
            *v * norm_sq(x)
        }
        CovarianceRepr::Fixed(v) => {
            scale_into(&mut kappa, *v, x);
            *v * norm_sq(x)
        }
    };
    (kappa, s.max(0.0))
}

fn scale_into(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o = a * xi;
    }
}

struct Refined {
    w: Vec<f64>,
    e0: f64,
    alpha: f64,
    h: Option<f64>,
    iters_used: usize,
}

fn refine(
    w_prev: &[f64],
    kappa: &[f64],
    s: f64,
    x: &[f64],
    y: f64,
    config: &FilterConfig,
    mut visit: impl FnMut(&[f64]),
) -> Refined {
    let beta = config.noise.beta();
    let tau = config.gain_tau();
    let e0 = y - dot(x, w_prev);
    let mut e = e0;
    let mut alpha = gain_with_tau(beta, tau, e, s);
    let mut w: Vec<f64> = w_prev
        .iter()
        .zip(kappa)
        .map(|(wi, ki)| wi + ki * alpha * e0)
        .collect();
    visit(&w);
    let mut iters_used = 0;
    for _ in 0..config.refine_iters {
        e = y - dot(x, &w);
        let next = gain_with_tau(beta, tau, e, s);
        let converged = libm::fabs(next - alpha) <= REFINE_TOL * alpha;
        alpha = next;
        for ((wi, wp), ki) in w.iter_mut().zip(w_prev).zip(kappa) {
            *wi = wp + ki * alpha * e0;
        }
        iters_used += 1;
        visit(&w);
        if converged {
            break;
        }
    }
    let h = if beta < 2.0 && libm::fabs(e) < SINGULAR_FLOOR {
        None
    } else {
        Some(libm::pow(libm::fabs(e), beta - 2.0) / tau)
    };
    Refined {
        w,
        e0,
        alpha,
        h,
        iters_used,
    }
}

fn update_covariance(cov: &mut CovarianceRepr, kappa: &[f64], x: &[f64], s: f64, alpha: f64) {
    let m = x.len();
    match cov {
        CovarianceRepr::Full(v) => {
            // Vbar (I - x kappa' alpha) = Vbar - alpha kappa kappa'
            for i in 0..m {
                let ak = alpha * kappa[i];
                for j in 0..m {
                    v[i * m + j] -= ak * kappa[j];
                }
            }
            for i in 0..m {
                for j in i + 1..m {
                    let avg = 0.5 * (v[i * m + j] + v[j * m + i]);
                    v[i * m + j] = avg;
                    v[j * m + i] = avg;
                }
            }
        }
        CovarianceRepr::Vector(v) => {
            for ((vi, ki), xi) in v.iter_mut().zip(kappa).zip(x) {
                *vi *= 1.0 - ki * xi * alpha;
            }
        }
        CovarianceRepr::Scalar(v) => {
            *v *= 1.0 - s * alpha / m as f64;
        }
        CovarianceRepr::Fixed(_) => {}
    }
}

fn sg_update(w: &mut [f64], config: &FilterConfig, x: &[f64], y: f64) -> StepRecord {
    let beta = config.noise.beta();
    let e = y - dot(x, w);
    let g = config.mu * libm::pow(libm::fabs(e), beta - 1.0) * sign(e);
    for (wi, xi) in w.iter_mut().zip(x) {
        *wi += g * xi;
    }
    StepRecord {
        e,
        s: 0.0,
        h: None,
        alpha: 0.0,
        iters_used: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn gauss(sigma: f64) -> NoiseModel {
        NoiseModel::new(2.0, sigma).unwrap()
    }

    fn laplace(sigma: f64) -> NoiseModel {
        NoiseModel::new(1.0, sigma).unwrap()
    }

    #[test]
    fn init_kf_identity_prior() {
        let st = init_state(&FilterConfig::kf(gauss(1.0), 0.0), 2).unwrap();
        assert_eq!(st.w, [0.0, 0.0]);
        assert_eq!(
            st.cov,
            CovarianceRepr::Full(alloc::vec![1.0, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn init_skf_and_errors() {
        let st = init_state(&FilterConfig::skf(gauss(1.0), 0.0), 128).unwrap();
        assert_eq!(st.w.len(), 128);
        assert!(st.w.iter().all(|&v| v == 0.0));
        assert_eq!(st.cov, CovarianceRepr::Scalar(1.0));
        assert!(init_state(&FilterConfig::skf(gauss(1.0), 0.0), 0).is_err());
        assert!(init_state(&FilterConfig::sg(gauss(1.0), 0.0), 4).is_err());
        assert!(init_state(&FilterConfig::fkf(gauss(1.0), -1.0), 4).is_err());
        let heavy = NoiseModel::new(0.5, 1.0).unwrap();
        assert!(init_state(&FilterConfig::kf(heavy, 0.0), 4).is_err());
    }

    #[test]
    fn predict_examples() {
        let cfg = FilterConfig::skf(gauss(1.0), 0.0);
        let st = init_state(&cfg, 1).unwrap();
        let p = predict(&st, &cfg, &[1.0]).unwrap();
        assert_eq!(p.cov, CovarianceRepr::Scalar(1.0));
        assert_eq!(p.kappa, [1.0]);
        assert_eq!(p.s, 1.0);

        let cfg = FilterConfig::kf(gauss(1.0), 0.5);
        let st = init_state(&cfg, 2).unwrap();
        let p = predict(&st, &cfg, &[1.0, 1.0]).unwrap();
        assert_eq!(p.cov, CovarianceRepr::Full(alloc::vec![1.5, 0.0, 0.0, 1.5]));
        assert_eq!(p.kappa, [1.5, 1.5]);
        assert_eq!(p.s, 3.0);

        let cfg = FilterConfig::vkf(gauss(1.0), 0.0);
        let st = FilterState {
            w: alloc::vec![0.0, 0.0],
            cov: CovarianceRepr::Vector(alloc::vec![1.0, 2.0]),
            t: 0,
        };
        let p = predict(&st, &cfg, &[1.0, -1.0]).unwrap();
        assert_eq!(p.kappa, [1.0, -2.0]);
        assert_eq!(p.s, 3.0);

        assert_eq!(
            predict(&st, &cfg, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn gain_multiplier_examples() {
        assert!((gain_multiplier(&gauss(1.0), 123.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((gain_multiplier(&gauss(1.0), 0.0, 1.0) - 0.5).abs() < 1e-15);
        let want = 1.0 / (FRAC_1_SQRT_2 + 1.0);
        assert!((gain_multiplier(&laplace(1.0), 1.0, 1.0) - want).abs() < 1e-15);
        assert_eq!(gain_multiplier(&laplace(1.0), 0.0, 2.0), 0.5);
        assert_eq!(gain_multiplier(&laplace(1.0), 1e-31, 2.0), 0.5);
        assert_eq!(gain_multiplier(&laplace(1.0), 0.0, 0.0), 0.0);
        // Gaussian form h / (1 + h s)
        let g = gauss(0.3);
        let h = 1.0 / 0.09;
        assert!((gain_multiplier(&g, 0.7, 2.0) - h / (1.0 + 2.0 * h)).abs() < 1e-14);
    }

    #[test]
    fn kf_scalar_hand_example() {
        let cfg = FilterConfig::kf(gauss(1.0), 0.0);
        let st = init_state(&cfg, 1).unwrap();
        let (next, rec) = step(&st, &cfg, &[1.0], 1.0).unwrap();
        assert_eq!(rec.e, 1.0);
        assert!((rec.h.unwrap() - 1.0).abs() < 1e-15);
        assert!((rec.alpha - 0.5).abs() < 1e-15);
        assert!((next.w[0] - 0.5).abs() < 1e-15);
        match next.cov {
            CovarianceRepr::Full(v) => assert!((v[0] - 0.5).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert_eq!(next.t, 1);
    }

    #[test]
    fn skf_laplace_hand_example() {
        let cfg = FilterConfig::skf(laplace(1.0), 0.0);
        let st = init_state(&cfg, 1).unwrap();
        let (next, rec) = step(&st, &cfg, &[1.0], 1.0).unwrap();
        let alpha = 1.0 / (1.0 + FRAC_1_SQRT_2);
        assert!((rec.alpha - alpha).abs() < 1e-15);
        assert!((next.w[0] - 0.585_786_437_626_905).abs() < 1e-12);
        match next.cov {
            CovarianceRepr::Scalar(v) => assert!((v - (SQRT_2 - 1.0)).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sg_sign_error_direction() {
        let mu = 2.7e-5;
        let cfg = FilterConfig::sg(laplace(1.0), mu);
        let mut st = init_state(&cfg, 3).unwrap();
        st.w = alloc::vec![0.2, -0.1, 0.4];
        let x = [1.0, -2.0, 0.5];
        let y = dot(&x, &st.w) - 3.0;
        let (next, rec) = step(&st, &cfg, &x, y).unwrap();
        assert!(rec.e < 0.0);
        for ((wn, w), xi) in next.w.iter().zip(&st.w).zip(&x) {
            assert!((wn - (w - mu * xi)).abs() < 1e-18);
        }
        // zero innovation, zero update
        let (same, _) = step(&st, &cfg, &x, dot(&x, &st.w)).unwrap();
        assert_eq!(same.w, st.w);
    }

    #[test]
    fn refinement_is_inert_for_gaussian() {
        let cfg = FilterConfig::skf(gauss(0.5), 1e-3).with_refine(3);
        let mut st = init_state(&cfg, 2).unwrap();
        st.w = alloc::vec![0.1, 0.3];
        let (pred, path) = refinement_path(&st, &cfg, &[0.4, -1.2], 0.9).unwrap();
        assert!(pred.s > 0.0);
        // first refinement pass reproduces alpha exactly and stops
        assert_eq!(path.len(), 3);
        assert_eq!(path[1], path[2]);
        let (_, rec) = step(&st, &cfg, &[0.4, -1.2], 0.9).unwrap();
        assert_eq!(rec.iters_used, 1);
    }

    #[test]
    fn refinement_changes_laplace_gain() {
        let cfg = FilterConfig::kf(laplace(0.5), 0.0).with_refine(2);
        let st = init_state(&cfg, 2).unwrap();
        let (_, rec0) = step(
            &st,
            &FilterConfig {
                refine_iters: 0,
                ..cfg
            },
            &[1.0, 0.5],
            2.0,
        )
        .unwrap();
        let (_, rec2) = step(&st, &cfg, &[1.0, 0.5], 2.0).unwrap();
        assert_eq!(rec2.iters_used, 2);
        assert!(rec2.alpha > rec0.alpha);
    }

    #[test]
    fn step_rejects_non_finite_input() {
        let cfg = FilterConfig::skf(gauss(1.0), 0.0);
        let st = init_state(&cfg, 2).unwrap();
        assert_eq!(
            step(&st, &cfg, &[f64::NAN, 0.0], 1.0).unwrap_err(),
            Error::NonFinite("input")
        );
        assert_eq!(
            step(&st, &cfg, &[1.0, 0.0], f64::INFINITY).unwrap_err(),
            Error::NonFinite("input")
        );
    }

    #[test]
    fn zero_regressor_leaves_state() {
        for cfg in [
            FilterConfig::kf(laplace(1.0), 0.1),
            FilterConfig::skf(laplace(1.0), 0.1),
            FilterConfig::fkf(laplace(1.0), 10.0),
            FilterConfig::sg(laplace(1.0), 0.1),
        ] {
            let mut st = init_state(&cfg, 3).unwrap();
            st.w = alloc::vec![1.0, 2.0, 3.0];
            let (next, _) = step(&st, &cfg, &[0.0; 3], 5.0).unwrap();
            assert_eq!(next.w, st.w, "{}", cfg.variant);
        }
    }

    #[test]
    fn objective_examples() {
        let noise = gauss(1.0);
        let cov = CovarianceRepr::Full(alloc::vec![1.0]);
        let at_prev = posterior_objective(&[0.0], &cov, &noise, &[1.0], 1.0, &[0.0]).unwrap();
        assert!((at_prev - noise.ell(1.0)).abs() < 1e-15);
        assert!((at_prev + 0.5).abs() < 1e-15);
        let at_half = posterior_objective(&[0.0], &cov, &noise, &[1.0], 1.0, &[0.5]).unwrap();
        assert!((at_half + 0.25).abs() < 1e-15);
        assert!(at_half > at_prev);
        let singular = CovarianceRepr::Full(alloc::vec![0.0]);
        assert_eq!(
            posterior_objective(&[0.0], &singular, &noise, &[1.0], 1.0, &[0.5]),
            Err(Error::SingularCovariance)
        );
    }

    #[test]
    fn reference_division_by_zero() {
        assert!(matches!(
            reference_update(ReferenceForm::Nlms, &[0.0, 0.0], &[0.0, 0.0], 1.0),
            Err(Error::DivisionByZero(_))
        ));
        let out = reference_update(ReferenceForm::Lms { mu: 0.1 }, &[0.0], &[2.0], 1.0).unwrap();
        assert!((out.w[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("RLS".parse::<Variant>().is_err());
    }
}
