//! Curated configs behind `dynsamp repro`.

use std::collections::BTreeMap;
use std::str::FromStr;

use dynsamp_core::numkit;

use crate::config::{cplx_list, Cplx, ExperimentConfig, OperatorSpec, PerturbationConfig, WeightsConfig};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    AldroubiDiagonal,
    ShiftOrbit,
    CirculantZModel,
    PerturbationGallery,
    VacuitySearch,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::AldroubiDiagonal,
        Preset::ShiftOrbit,
        Preset::CirculantZModel,
        Preset::PerturbationGallery,
        Preset::VacuitySearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::AldroubiDiagonal => "aldroubi-diagonal",
            Preset::ShiftOrbit => "shift-orbit",
            Preset::CirculantZModel => "circulant-zmodel",
            Preset::PerturbationGallery => "perturbation-gallery",
            Preset::VacuitySearch => "vacuity-search",
        }
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown preset '{s}'")))
    }
}

fn real(x: f64) -> Cplx {
    Cplx(numkit::real(x))
}

fn unit(d: usize, k: usize) -> Vec<Cplx> {
    (0..d).map(|i| real(if i == k { 1.0 } else { 0.0 })).collect()
}

fn base(dimension: usize, operator: OperatorSpec, horizon: usize, checks: &[&str], seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dimension,
        operator,
        generators: Vec::new(),
        weights: None,
        horizon,
        checks: checks.iter().map(|c| c.to_string()).collect(),
        tolerances: BTreeMap::new(),
        seed,
        period: None,
        horizons: None,
        trials: None,
        perturbation: None,
    }
}

/// Config for a preset; `dim` and `seed` override the defaults.
pub fn preset_config(preset: Preset, dim: Option<usize>, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let seed = seed.unwrap_or(0);
    if dim == Some(0) {
        return Err(CliError::Config("--dim must be at least 1".into()));
    }
    Ok(match preset {
        Preset::AldroubiDiagonal => {
            let d = dim.unwrap_or(16);
            let diag: Vec<f64> = (1..=d).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
            let b: Vec<f64> = diag.iter().map(|l| (1.0 - l * l).sqrt()).collect();
            let mut c = base(
                d,
                OperatorSpec::Diagonal(cplx_list(&diag.iter().map(|&x| numkit::real(x)).collect::<Vec<_>>())),
                4 * d,
                &["repro-aldroubi", "aldroubi-sweep", "orbit-bounds"],
                seed,
            );
            c.generators = vec![b.into_iter().map(real).collect()];
            c
        }
        Preset::ShiftOrbit => {
            let d = dim.unwrap_or(3);
            let mut c = base(
                d,
                OperatorSpec::NilpotentShift(None),
                d,
                &[
                    "orbit-bounds",
                    "stein",
                    "surjectivity",
                    "ratio-bound",
                    "kernel-invariance",
                    "representation",
                    "riesz-profile",
                ],
                seed,
            );
            c.generators = vec![unit(d, 0)];
            c.weights = Some(WeightsConfig::Geometric(0.5));
            c
        }
        Preset::CirculantZModel => {
            let d = dim.unwrap_or(3);
            if d < 2 {
                return Err(CliError::Config("circulant-zmodel needs --dim of at least 2".into()));
            }
            let mut row = vec![real(0.0); d];
            row[d - 1] = real(1.0);
            let mut c = base(d, OperatorSpec::Circulant(row), d, &["periodic", "nogo-proxy", "orbit-bounds"], seed);
            let mut phi = unit(d, 0);
            phi[1] = real(1.0);
            c.generators = vec![phi];
            c.period = Some(d);
            c
        }
        Preset::PerturbationGallery => {
            let mut c = base(
                1,
                OperatorSpec::Diagonal(vec![real(0.5)]),
                60,
                &["perturbation-gallery", "perturbation:two_operator_sum", "perturbation:two_operator_frame"],
                seed,
            );
            c.generators = vec![vec![real(1.0)]];
            c.perturbation = Some(PerturbationConfig {
                second_operator: Some(OperatorSpec::Diagonal(vec![real(0.25)])),
                ..PerturbationConfig::default()
            });
            c
        }
        Preset::VacuitySearch => {
            let mut c = base(
                1,
                OperatorSpec::Diagonal(vec![real(0.5)]),
                1,
                &[
                    "satisfiability:multi_generator_riesz",
                    "satisfiability:two_operator_frame",
                    "satisfiability:riesz_orbit_perturbation",
                ],
                seed,
            );
            c.trials = Some(1000);
            c
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            preset_config(p, None, Some(3)).unwrap().validate().unwrap();
        }
        assert!("nope".parse::<Preset>().is_err());
        assert!(preset_config(Preset::CirculantZModel, Some(1), None).is_err());
    }
}
