//! Built-in experiments: `fig3` (conventional vs robust filters at -20 dB)
//! and `fig5` (robust filters at -15/-20/-25 dB, with and without one
//! refinement pass).

use std::f64::consts::PI;

use bayesaf_core::simulate::{synthetic_impulse_response, Scenario};
use bayesaf_core::tune::{Knob, TuneSpec};
use bayesaf_core::{FilterConfig, Result, Variant};

use crate::config::scaled;

pub const BASE_M: usize = 128;
pub const BASE_N: usize = 100;
pub const AR_COEFF: f64 = 0.9;
pub const SNR_DB: f64 = 5.0;
pub const BETA_STAR: f64 = 0.2;
pub const IR_SEED: u64 = 1;
pub const DEFAULT_SEED: u64 = 1000;

pub const SOURCE: [f64; 3] = [1.0, 2.5, 2.0];
pub const RECEIVER: [f64; 3] = [1.0, 1.5, 1.0];

/// Half-width of the retuning grid around the tabulated value, in decades.
pub const RETUNE_SPAN_DECADES: f64 = 1.5;
pub const RETUNE_POINTS_PER_DECADE: usize = 20;

/// Free-field amplitude `1 / (4 pi d)` of the direct path between the source
/// and receiver positions. The synthetic response is scaled to this norm so
/// the tabulated absolute knob values land near their stated targets.
pub fn direct_path_gain() -> f64 {
    let d: f64 = SOURCE
        .iter()
        .zip(RECEIVER)
        .map(|(s, r)| (s - r) * (s - r))
        .sum::<f64>()
        .sqrt();
    1.0 / (4.0 * PI * d)
}

/// Synthetic decaying response with `M` taps, envelope constant `M / 4`,
/// norm [`direct_path_gain`].
pub fn impulse_response(m: usize) -> Result<Vec<f64>> {
    let g = direct_path_gain();
    Ok(synthetic_impulse_response(m, m as f64 / 4.0, IR_SEED)?
        .into_iter()
        .map(|v| v * g)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig3,
    Fig5,
}

impl std::str::FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fig3" => Ok(Figure::Fig3),
            "fig5" => Ok(Figure::Fig5),
            _ => Err(format!("unknown figure {s:?} (expected fig3 or fig5)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinAlgorithm {
    pub label: String,
    pub variant: Variant,
    pub beta: f64,
    pub refine: usize,
    /// Reference knob value, valid at `M = 128`.
    pub table_value: f64,
}

impl BuiltinAlgorithm {
    fn new(label: &str, variant: Variant, beta: f64, refine: usize, table_value: f64) -> Self {
        Self {
            label: label.into(),
            variant,
            beta,
            refine,
            table_value,
        }
    }

    pub fn knob(&self) -> Knob {
        Knob::for_variant(self.variant)
    }

    /// Filter config for `scenario`, knob at the tabulated value and the
    /// prior variance set to `|h|^2`.
    pub fn config(&self, scenario: &Scenario) -> Result<FilterConfig> {
        let noise = scenario.assumed_noise(self.beta)?;
        let v0 = scenario.h.iter().map(|v| v * v).sum();
        let cfg = FilterConfig::for_variant(self.variant, noise, self.table_value)
            .with_refine(self.refine)
            .with_v0(v0);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Log grid of `RETUNE_POINTS_PER_DECADE` points per decade spanning
    /// `RETUNE_SPAN_DECADES` on either side of the tabulated value.
    pub fn retune_spec(&self, target_db: f64) -> TuneSpec {
        let per = RETUNE_POINTS_PER_DECADE as f64;
        let half = (RETUNE_SPAN_DECADES * per).round() as i32;
        let grid = (-half..=half)
            .map(|k| self.table_value * 10f64.powf(k as f64 / per))
            .collect();
        TuneSpec::new(self.knob(), grid, target_db)
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    /// Output file stem, e.g. `fig3a`.
    pub name: &'static str,
    pub target_db: f64,
    /// Horizon at full scale.
    pub base_horizon: usize,
    pub algorithms: Vec<BuiltinAlgorithm>,
}

impl Panel {
    pub fn scenario(&self, scale: f64) -> Result<Scenario> {
        let sc = Scenario {
            h: impulse_response(scaled(BASE_M, scale))?,
            a: AR_COEFF,
            v_u: 1.0,
            snr_db: SNR_DB,
            beta_star: BETA_STAR,
            horizon: scaled(self.base_horizon, scale),
            realizations: scaled(BASE_N, scale),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn algorithm(&self, label: &str) -> Option<&BuiltinAlgorithm> {
        self.algorithms.iter().find(|a| a.label == label)
    }
}

fn four(beta: f64, mu: f64, reg: f64, eps_s: f64, eps_k: f64) -> Vec<BuiltinAlgorithm> {
    vec![
        BuiltinAlgorithm::new("SG", Variant::Sg, beta, 0, mu),
        BuiltinAlgorithm::new("fKF", Variant::Fkf, beta, 0, reg),
        BuiltinAlgorithm::new("sKF", Variant::Skf, beta, 0, eps_s),
        BuiltinAlgorithm::new("KF", Variant::Kf, beta, 0, eps_k),
    ]
}

// (mu, [reg I=0, I=1], [sKF eps I=0, I=1], [KF eps I=0, I=1])
type Row = (f64, [f64; 2], [f64; 2], [f64; 2]);

fn fig5_panel(name: &'static str, target_db: f64, base_horizon: usize, row: Row) -> Panel {
    let (mu, reg, eps_s, eps_k) = row;
    let mut algorithms = vec![BuiltinAlgorithm::new("SG", Variant::Sg, 1.0, 0, mu)];
    for (label, variant, vals) in [
        ("fKF", Variant::Fkf, reg),
        ("sKF", Variant::Skf, eps_s),
        ("KF", Variant::Kf, eps_k),
    ] {
        algorithms.push(BuiltinAlgorithm::new(label, variant, 1.0, 0, vals[0]));
        algorithms.push(BuiltinAlgorithm::new(
            &format!("{label}-I1"),
            variant,
            1.0,
            1,
            vals[1],
        ));
    }
    Panel {
        name,
        target_db,
        base_horizon,
        algorithms,
    }
}

pub fn panels(fig: Figure) -> Vec<Panel> {
    match fig {
        Figure::Fig3 => vec![
            Panel {
                name: "fig3a",
                target_db: -20.0,
                base_horizon: 400_000,
                algorithms: four(2.0, 1.1e-4, 8.2e3, 3.2e-10, 3.6e-11),
            },
            Panel {
                name: "fig3b",
                target_db: -20.0,
                base_horizon: 40_000,
                algorithms: four(1.0, 2.7e-5, 1.1e4, 2.7e-8, 2.2e-8),
            },
        ],
        Figure::Fig5 => vec![
            fig5_panel(
                "fig5a",
                -15.0,
                20_000,
                (5.4e-5, [3.5e3, 5.0e3], [1.0e-7, 7.1e-8], [7.3e-8, 6.0e-8]),
            ),
            fig5_panel(
                "fig5b",
                -20.0,
                40_000,
                (2.7e-5, [1.1e4, 1.6e4], [2.7e-8, 2.2e-8], [2.2e-8, 2.2e-8]),
            ),
            fig5_panel(
                "fig5c",
                -25.0,
                80_000,
                (1.4e-5, [3.4e4, 4.3e4], [7.7e-9, 6.6e-9], [6.0e-9, 6.0e-9]),
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_from_geometry() {
        assert!((direct_path_gain() - 1.0 / (4.0 * PI * 2f64.sqrt())).abs() < 1e-15);
        let h = impulse_response(128).unwrap();
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - direct_path_gain()).abs() < 1e-12);
    }

    #[test]
    fn scaled_scenario() {
        let p = &panels(Figure::Fig3)[1];
        let sc = p.scenario(0.25).unwrap();
        assert_eq!((sc.dim(), sc.realizations, sc.horizon), (32, 25, 10_000));
        let full = p.scenario(1.0).unwrap();
        assert_eq!(
            (full.dim(), full.realizations, full.horizon),
            (128, 100, 40_000)
        );
    }

    #[test]
    fn tables_are_complete() {
        assert_eq!(
            panels(Figure::Fig3)
                .iter()
                .map(|p| p.algorithms.len())
                .sum::<usize>(),
            8
        );
        let f5 = panels(Figure::Fig5);
        assert!(f5.iter().all(|p| p.algorithms.len() == 7));
        assert_eq!(f5[2].algorithm("fKF-I1").unwrap().table_value, 4.3e4);
    }

    #[test]
    fn retune_grid_is_centered() {
        let a = &panels(Figure::Fig3)[1].algorithms[1];
        let spec = a.retune_spec(-20.0);
        assert_eq!(spec.grid.len(), 61);
        assert!((spec.grid[30] - 1.1e4).abs() < 1e-9);
        assert!((spec.grid[0] * 10f64.powf(1.5) / 1.1e4 - 1.0).abs() < 1e-12);
    }
}
