use super::{ChiParams, MultiDirParams, Reaction, DEFAULT_DELTA0};
use crate::error::Result;
use serde::{Deserialize, Serialize};

/// Reaction description as it appears in experiment configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSpec {
    Cubic {
        #[serde(default = "one")]
        dimension: usize,
    },
    #[serde(rename = "family_1d")]
    Family1d {
        tau: f64,
        sigma: f64,
        period_length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta0: Option<f64>,
    },
    FamilyMultidir {
        tau: Vec<f64>,
        sigma: f64,
        directions: Vec<Vec<f64>>,
        lattice_lengths: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period_lengths: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta0: Option<f64>,
    },
    Stacked {
        components: Vec<ReactionSpec>,
    },
    Rescaled {
        nu: f64,
        inner: Box<ReactionSpec>,
    },
    Mirrored {
        inner: Box<ReactionSpec>,
    },
    Flipped {
        inner: Box<ReactionSpec>,
    },
}

fn one() -> usize {
    1
}

impl ReactionSpec {
    pub fn build(&self) -> Result<Reaction> {
        match self {
            ReactionSpec::Cubic { dimension } => Reaction::cubic(*dimension),
            ReactionSpec::Family1d {
                tau,
                sigma,
                period_length,
                delta0,
            } => Reaction::family_1d_with(
                *tau,
                *sigma,
                ChiParams::new(*period_length, delta0.unwrap_or(DEFAULT_DELTA0))?,
            ),
            ReactionSpec::FamilyMultidir {
                tau,
                sigma,
                directions,
                lattice_lengths,
                period_lengths,
                delta0,
            } => Reaction::family_multidir(MultiDirParams {
                tau: tau.clone(),
                sigma: *sigma,
                directions: directions.clone(),
                lattice: lattice_lengths.clone(),
                periods: period_lengths.clone(),
                delta0: delta0.unwrap_or(DEFAULT_DELTA0),
            }),
            ReactionSpec::Stacked { components } => {
                let built = components.iter().map(|c| c.build()).collect::<Result<Vec<_>>>()?;
                Reaction::stack(built)
            }
            ReactionSpec::Rescaled { nu, inner } => inner.build()?.rescale(*nu),
            ReactionSpec::Mirrored { inner } => Ok(inner.build()?.mirror()),
            ReactionSpec::Flipped { inner } => Ok(inner.build()?.flip()),
        }
    }
}
