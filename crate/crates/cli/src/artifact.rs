//! The `state` file a fit leaves behind: everything the reporting
//! subcommands need, without the corpus and without any timing, so
//! identical configurations write identical bytes.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use probit_ctm::corpus::Vocabulary;
use probit_ctm::model::{FitReport, Hyperparams, ModelState};
use serde::{Deserialize, Serialize};

pub const ARTIFACT_VERSION: u32 = 1;

/// A fitted model ready for reporting: the final sampler state plus the
/// retained-draw summaries from its [`FitReport`] (the per-iteration
/// trace lives in `fit.csv`, not here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateArtifact {
    pub version: u32,
    pub hyper: Hyperparams,
    pub vocab: Vocabulary,
    pub state: ModelState,
    /// Mean of the retained score draws (D x K).
    pub eta_mean: DMatrix<f64>,
    /// Mean of the retained score-prior mean draws.
    pub mu_mean: DVector<f64>,
    /// Mean of the retained score-prior covariance draws.
    pub sigma_mean: DMatrix<f64>,
    /// Mean of the retained topic-word rows (K x V).
    pub phi_mean: DMatrix<f64>,
    /// The retained covariance draws, for the correlation report.
    pub sigma_samples: Vec<DMatrix<f64>>,
    /// Number of retained draws behind the means.
    pub retained: usize,
}

impl StateArtifact {
    pub fn from_fit(
        hyper: &Hyperparams,
        vocab: &Vocabulary,
        state: &ModelState,
        report: &FitReport,
    ) -> Self {
        StateArtifact {
            version: ARTIFACT_VERSION,
            hyper: hyper.clone(),
            vocab: vocab.clone(),
            state: state.clone(),
            eta_mean: report.eta_mean.clone(),
            mu_mean: report.mu_mean.clone(),
            sigma_mean: report.sigma_mean.clone(),
            phi_mean: report.phi_mean.clone(),
            sigma_samples: report.sigma_samples.clone(),
            retained: report.retained,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)
            .with_context(|| format!("creating state file {}", path.display()))?;
        serde_json::to_writer(BufWriter::new(file), self)
            .with_context(|| format!("writing state file {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path)
            .with_context(|| format!("opening state file {}", path.display()))?;
        let artifact: StateArtifact = serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("reading state file {}", path.display()))?;
        ensure!(
            artifact.version == ARTIFACT_VERSION,
            "state file {} has version {}, this build reads {}",
            path.display(),
            artifact.version,
            ARTIFACT_VERSION
        );
        Ok(artifact)
    }
}
