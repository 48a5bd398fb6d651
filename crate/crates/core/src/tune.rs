//! Grid tuning: pick, per algorithm, the knob value whose steady-state
//! misalignment hits a target level, so that convergence speed can be
//! compared at equal accuracy.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::filters::{FilterConfig, Variant};
use crate::simulate::{run_ensemble, to_db, Scenario, Trajectory};

pub const DEFAULT_TAIL_FRAC: f64 = 0.2;
pub const DEFAULT_TOL_DB: f64 = 1.0;
/// Margin above the target that a trajectory must stay under to count as
/// converged.
pub const CONVERGENCE_MARGIN_DB: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Knob {
    Mu,
    Reg,
    Epsilon,
}

impl Knob {
    pub fn name(self) -> &'static str {
        match self {
            Knob::Mu => "mu",
            Knob::Reg => "reg",
            Knob::Epsilon => "epsilon",
        }
    }

    /// The knob tuned for `variant`.
    pub fn for_variant(variant: Variant) -> Knob {
        match variant {
            Variant::Sg => Knob::Mu,
            Variant::Fkf => Knob::Reg,
            Variant::Kf | Variant::Vkf | Variant::Skf => Knob::Epsilon,
        }
    }

    pub fn get(self, config: &FilterConfig) -> f64 {
        match self {
            Knob::Mu => config.mu,
            Knob::Reg => config.reg,
            Knob::Epsilon => config.epsilon,
        }
    }

    /// Copy of `config` with this knob set; fails if the variant does not
    /// use the knob.
    pub fn apply(self, config: &FilterConfig, value: f64) -> Result<FilterConfig> {
        if Knob::for_variant(config.variant) != self {
            return Err(invalid("param", "knob does not match the filter variant"));
        }
        let mut c = *config;
        match self {
            Knob::Mu => c.mu = value,
            Knob::Reg => c.reg = value,
            Knob::Epsilon => c.epsilon = value,
        }
        Ok(c)
    }
}

impl fmt::Display for Knob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Knob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(Knob::Mu),
            "reg" => Ok(Knob::Reg),
            "epsilon" => Ok(Knob::Epsilon),
            _ => Err(invalid("param", "expected one of mu, reg, epsilon")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSpec {
    pub knob: Knob,
    pub grid: Vec<f64>,
    pub target_db: f64,
    pub tol_db: f64,
    pub tail_frac: f64,
}

impl TuneSpec {
    pub fn new(knob: Knob, grid: Vec<f64>, target_db: f64) -> Self {
        Self {
            knob,
            grid,
            target_db,
            tol_db: DEFAULT_TOL_DB,
            tail_frac: DEFAULT_TAIL_FRAC,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid", "values must be finite"));
        }
        if !(self.tail_frac > 0.0 && self.tail_frac <= 0.5) {
            return Err(invalid("tail_frac", "must lie in (0, 0.5]"));
        }
        if !(self.tol_db >= 0.0) {
            return Err(invalid("tol_db", "must be >= 0"));
        }
        Ok(())
    }
}

/// `points` values from `lo` to `hi`, equally spaced in log scale.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(invalid("grid", "need 0 < lo <= hi and at least one point"));
    }
    if points == 1 {
        return Ok(alloc::vec![lo]);
    }
    let (l, h) = (libm::log10(lo), libm::log10(hi));
    let step = (h - l) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| libm::pow(10.0, l + step * i as f64))
        .collect())
}

/// Mean misalignment over the last `ceil(tail_frac * T)` samples, in dB.
pub fn steady_state_level(traj: &Trajectory, tail_frac: f64) -> Result<f64> {
    if !(tail_frac > 0.0 && tail_frac <= 1.0) {
        return Err(invalid("tail_frac", "must lie in (0, 1]"));
    }
    let len = traj.len();
    let needed = libm::ceil(1.0 / tail_frac) as usize;
    if len < needed {
        return Err(Error::TrajectoryTooShort { len, needed });
    }
    let tail = (libm::ceil(tail_frac * len as f64) as usize).clamp(1, len);
    let mean = traj.misalignment[len - tail..].iter().sum::<f64>() / tail as f64;
    Ok(to_db(mean))
}

/// First index from which the misalignment stays at or below
/// `target_db + 1 dB` for the rest of the trajectory.
pub fn convergence_time(traj: &Trajectory, target_db: f64) -> Option<usize> {
    let threshold = target_db + CONVERGENCE_MARGIN_DB;
    match traj
        .misalignment
        .iter()
        .rposition(|&m| !(to_db(m) <= threshold))
    {
        None => Some(0),
        Some(i) if i + 1 < traj.len() => Some(i + 1),
        Some(_) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    pub level_db: f64,
    pub convergence: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub value: f64,
    pub level_db: f64,
    pub convergence: Option<usize>,
    /// `false` when no grid point landed within `tol_db` of the target and
    /// the closest one was returned instead.
    pub on_target: bool,
    /// Every evaluated point, in increasing knob order.
    pub points: Vec<GridPoint>,
}

/// Picks the in-band point with the fastest convergence, or the point whose
/// level is closest to the target when none is in band.
pub fn select(mut points: Vec<GridPoint>, spec: &TuneSpec) -> Result<TuneResult> {
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    let distance = |p: &GridPoint| {
        let d = libm::fabs(p.level_db - spec.target_db);
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    };
    let in_band = points.iter().filter(|p| distance(p) <= spec.tol_db);
    let best_in_band = in_band.min_by(|a, b| {
        let ta = a.convergence.unwrap_or(usize::MAX);
        let tb = b.convergence.unwrap_or(usize::MAX);
        ta.cmp(&tb)
            .then(distance(a).total_cmp(&distance(b)))
            .then(a.value.total_cmp(&b.value))
    });
    let (chosen, on_target) = match best_in_band {
        Some(p) => (*p, true),
        None => {
            let p = points
                .iter()
                .min_by(|a, b| {
                    distance(a)
                        .total_cmp(&distance(b))
                        .then(a.value.total_cmp(&b.value))
                })
                .expect("non-empty");
            (*p, false)
        }
    };
    Ok(TuneResult {
        value: chosen.value,
        level_db: chosen.level_db,
        convergence: chosen.convergence,
        on_target,
        points,
    })
}

/// Scores one trajectory against the spec.
pub fn score(value: f64, traj: &Trajectory, spec: &TuneSpec) -> Result<GridPoint> {
    Ok(GridPoint {
        value,
        level_db: steady_state_level(traj, spec.tail_frac)?,
        convergence: convergence_time(traj, spec.target_db),
    })
}

/// Grid search with a caller-supplied evaluator (knob value -> mean trajectory).
pub fn grid_search_with<F>(spec: &TuneSpec, mut evaluate: F) -> Result<TuneResult>
where
    F: FnMut(f64) -> Result<Trajectory>,
{
    spec.validate()?;
    let mut grid = spec.grid.clone();
    grid.sort_by(f64::total_cmp);
    let points = grid
        .into_iter()
        .map(|v| score(v, &evaluate(v)?, spec))
        .collect::<Result<Vec<_>>>()?;
    select(points, spec)
}

/// Evaluates the ensemble-mean trajectory of `template` at every grid value.
pub fn grid_search(
    scenario: &Scenario,
    template: &FilterConfig,
    spec: &TuneSpec,
    base_seed: u64,
) -> Result<TuneResult> {
    spec.knob.apply(template, 1.0)?;
    grid_search_with(spec, |v| {
        run_ensemble(scenario, &spec.knob.apply(template, v)?, base_seed)
    })
}
