//! Experiment configuration.
//!
//! Config files are flat TOML: one `key = value` per line, lists as
//! `[a, b, c]`, `#` comments. Recognized keys:
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `kind` | `table1_sweep`, `cspr_sweep`, `decision_phase_sweep`, `single_run` | from the subcommand |
//! | `profile` | `reduced`, `paper`, `custom` | `reduced` |
//! | `samples_per_if_period`, `if_periods_per_symbol` | integer | profile; required for `custom` |
//! | `n_s` | list of numbers | per kind |
//! | `cspr_db` | list of numbers | per kind |
//! | `decision_index` | list of integers | per kind (centered) |
//! | `symbols` | integer >= 400 | 2000 (reduced), 40000 (paper) |
//! | `seed` | integer | 1 |
//! | `out` | path | `kkq-out` |
//! | `svg` | bool | false |
//! | `confirm_paper_scale` | bool | false |
//! | `k` | number | 1 |
//! | `r` | number | 2 |
//!
//! Command-line flags override file keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::signal_model::SamplingGrid;

/// Smallest symbol count accepted for any statistics output (100 per cluster).
pub const MIN_SYMBOLS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Table1Sweep,
    CsprSweep,
    DecisionPhaseSweep,
    SingleRun,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Table1Sweep => "table1_sweep",
            ExperimentKind::CsprSweep => "cspr_sweep",
            ExperimentKind::DecisionPhaseSweep => "decision_phase_sweep",
            ExperimentKind::SingleRun => "single_run",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridProfile {
    Paper,
    Reduced,
    Custom,
}

/// Raw, partially specified config as read from a file or built from flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<ExperimentKind>,
    pub profile: Option<GridProfile>,
    pub samples_per_if_period: Option<usize>,
    pub if_periods_per_symbol: Option<usize>,
    pub n_s: Option<Vec<f64>>,
    pub cspr_db: Option<Vec<f64>>,
    pub decision_index: Option<Vec<usize>>,
    pub symbols: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    pub confirm_paper_scale: Option<bool>,
    pub k: Option<f64>,
    pub r: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ExperimentError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Keys set in `other` replace keys set here.
    pub fn merged(mut self, other: ConfigFile) -> Self {
        macro_rules! take {
            ($($field:ident),*) => { $( if other.$field.is_some() { self.$field = other.$field; } )* };
        }
        take!(
            kind,
            profile,
            samples_per_if_period,
            if_periods_per_symbol,
            n_s,
            cspr_db,
            decision_index,
            symbols,
            seed,
            out,
            svg,
            confirm_paper_scale,
            k,
            r
        );
        self
    }
}

/// Fully resolved, validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub profile: GridProfile,
    pub samples_per_if_period: usize,
    pub if_periods_per_symbol: usize,
    pub n_s: Vec<f64>,
    pub cspr_db: Vec<f64>,
    pub decision_index: Vec<usize>,
    pub symbols: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
    pub confirm_paper_scale: bool,
    pub k: f64,
    pub r: f64,
}

impl ExperimentConfig {
    /// Applies per-kind and per-profile defaults, then validates.
    pub fn resolve(raw: ConfigFile) -> Result<Self, ExperimentError> {
        let kind = raw
            .kind
            .ok_or_else(|| ExperimentError::Config("experiment kind is not set".into()))?;
        let profile = raw.profile.unwrap_or(GridProfile::Reduced);
        let (spp, periods) = match profile {
            GridProfile::Custom => {
                match (raw.samples_per_if_period, raw.if_periods_per_symbol) {
                    (Some(s), Some(p)) => (s, p),
                    _ => return Err(ExperimentError::Config(
                        "profile = custom needs samples_per_if_period and if_periods_per_symbol"
                            .into(),
                    )),
                }
            }
            fixed => {
                if raw.samples_per_if_period.is_some() || raw.if_periods_per_symbol.is_some() {
                    return Err(ExperimentError::Config(
                        "grid fields can only be set with profile = custom".into(),
                    ));
                }
                let grid = if fixed == GridProfile::Paper {
                    SamplingGrid::paper()
                } else {
                    SamplingGrid::reduced()
                };
                (grid.samples_per_if_period, grid.if_periods_per_symbol)
            }
        };
        let centered =
            SamplingGrid::new(spp, periods).map_err(|e| ExperimentError::Config(e.to_string()))?;

        let default_n_s = match kind {
            ExperimentKind::Table1Sweep => (1..=10).map(|i| 20.0 * i as f64).collect(),
            _ => vec![100.0],
        };
        let default_cspr = match kind {
            ExperimentKind::CsprSweep => vec![5.0, 10.0, 15.0, 20.0],
            ExperimentKind::DecisionPhaseSweep => vec![30.0],
            _ => vec![10.0],
        };
        let default_decision = match kind {
            ExperimentKind::DecisionPhaseSweep => decision_phase_indices(&centered)?,
            _ => vec![centered.decision_index],
        };
        let default_symbols = if profile == GridProfile::Paper {
            40_000
        } else {
            2000
        };

        let config = Self {
            kind,
            profile,
            samples_per_if_period: spp,
            if_periods_per_symbol: periods,
            n_s: raw.n_s.unwrap_or(default_n_s),
            cspr_db: raw.cspr_db.unwrap_or(default_cspr),
            decision_index: raw.decision_index.unwrap_or(default_decision),
            symbols: raw.symbols.unwrap_or(default_symbols),
            seed: raw.seed.unwrap_or(1),
            out: raw.out.unwrap_or_else(|| PathBuf::from("kkq-out")),
            svg: raw.svg.unwrap_or(false),
            confirm_paper_scale: raw.confirm_paper_scale.unwrap_or(false),
            k: raw.k.unwrap_or(1.0),
            r: raw.r.unwrap_or(2.0),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.n_s.is_empty() {
            return bad("n_s list is empty".into());
        }
        if self.cspr_db.is_empty() {
            return bad("cspr_db list is empty".into());
        }
        if self.decision_index.is_empty() {
            return bad("decision_index list is empty".into());
        }
        if let Some(v) = self.n_s.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return bad(format!("n_s values must be positive, got {v}"));
        }
        if let Some(v) = self.cspr_db.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return bad(format!("cspr_db values must be positive, got {v}"));
        }
        if self.symbols < MIN_SYMBOLS {
            return bad(format!(
                "symbols = {} is below the minimum of {MIN_SYMBOLS}",
                self.symbols
            ));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return bad(format!("r must be non-negative, got {}", self.r));
        }
        for grid in self.grids() {
            grid?;
        }
        if self.profile == GridProfile::Paper && !self.confirm_paper_scale {
            return bad(
                "paper-scale runs take hours; pass --confirm-paper-scale (or confirm_paper_scale = true)"
                    .into(),
            );
        }
        Ok(())
    }

    /// One grid per configured decision index.
    pub fn grids(&self) -> impl Iterator<Item = Result<SamplingGrid, ExperimentError>> + '_ {
        self.decision_index.iter().map(|&l| {
            SamplingGrid::with_decision_index(
                self.samples_per_if_period,
                self.if_periods_per_symbol,
                l,
            )
            .map_err(|e| ExperimentError::Config(e.to_string()))
        })
    }

    /// The config in file form, suitable for writing back out.
    pub fn to_file(&self) -> ConfigFile {
        let custom = self.profile == GridProfile::Custom;
        ConfigFile {
            kind: Some(self.kind),
            profile: Some(self.profile),
            samples_per_if_period: custom.then_some(self.samples_per_if_period),
            if_periods_per_symbol: custom.then_some(self.if_periods_per_symbol),
            n_s: Some(self.n_s.clone()),
            cspr_db: Some(self.cspr_db.clone()),
            decision_index: Some(self.decision_index.clone()),
            symbols: Some(self.symbols),
            seed: Some(self.seed),
            out: Some(self.out.clone()),
            svg: Some(self.svg),
            confirm_paper_scale: Some(self.confirm_paper_scale),
            k: Some(self.k),
            r: Some(self.r),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}

/// Decision indices realizing IF phases 3pi/2, 7pi/4, 0, pi/4 around the
/// centered index (as axes: pi/2, 3pi/4, 0, pi/4).
///
/// On the paper grid these are samples 99500, 99750, 100000 and 100250.
pub fn decision_phase_indices(centered: &SamplingGrid) -> Result<Vec<usize>, ExperimentError> {
    let spp = centered.samples_per_if_period;
    if !spp.is_multiple_of(8) || !centered.decision_index.is_multiple_of(spp) {
        return Err(ExperimentError::Config(format!(
            "decision phase sweep needs samples_per_if_period divisible by 8 and a centered \
             decision index on a period boundary (spp = {spp}, l = {})",
            centered.decision_index
        )));
    }
    let l = centered.decision_index;
    Ok(vec![l - spp / 4, l - spp / 8, l, l + spp / 8])
}
