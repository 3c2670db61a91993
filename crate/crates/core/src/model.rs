//! Model configuration and sampler state: hyperparameters, the mutable
//! Gibbs state, the per-run report, and the resumable checkpoint
//! container.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

/// Priors and run-length settings for one fit.
///
/// The topic scores `eta_d` get a `MVN(mu, sigma)` prior whose parameters
/// carry a normal-inverse-Wishart hyperprior `NIW(mu0, kappa0, psi0, nu0)`;
/// topic-word distributions get a symmetric Dirichlet with per-term
/// concentration `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub k: usize,
    pub beta: f64,
    pub mu0: DVector<f64>,
    pub kappa0: f64,
    pub psi0: DMatrix<f64>,
    pub nu0: f64,
    pub n_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Hyperparams {
    /// Weakly informative defaults for `k` topics: `beta = 0.01`,
    /// `mu0 = 0`, `kappa0 = 1`, `psi0 = I`, `nu0 = k + 2`, 1000 sweeps
    /// with the first half burned in, no thinning.
    pub fn new(k: usize) -> Self {
        Hyperparams {
            k,
            beta: 0.01,
            mu0: DVector::zeros(k),
            kappa0: 1.0,
            psi0: DMatrix::identity(k, k),
            nu0: k as f64 + 2.0,
            n_iters: 1000,
            burn_in: 500,
            thin: 1,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("K must be >= 2, got {}", self.k)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.kappa0 > 0.0) {
            return Err(Error::invalid(format!(
                "kappa0 must be > 0, got {}",
                self.kappa0
            )));
        }
        if !(self.nu0 > self.k as f64 - 1.0) {
            return Err(Error::invalid(format!(
                "nu0 must exceed K - 1 = {}, got {}",
                self.k - 1,
                self.nu0
            )));
        }
        if self.mu0.len() != self.k {
            return Err(Error::invalid(format!(
                "mu0 has {} entries for K = {}",
                self.mu0.len(),
                self.k
            )));
        }
        if self.psi0.nrows() != self.k || self.psi0.ncols() != self.k {
            return Err(Error::invalid(format!(
                "psi0 is {}x{} for K = {}",
                self.psi0.nrows(),
                self.psi0.ncols(),
                self.k
            )));
        }
        if Cholesky::new(self.psi0.clone()).is_none() {
            return Err(Error::NotPositiveDefinite("psi0"));
        }
        if self.burn_in >= self.n_iters {
            return Err(Error::invalid(format!(
                "burn_in {} must be below n_iters {}",
                self.burn_in, self.n_iters
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be >= 1"));
        }
        Ok(())
    }

    /// Covariance used to seed `sigma` and draw initial/simulated `eta`:
    /// the prior mean of the inverse-Wishart when it exists
    /// (`nu0 > K + 1`), identity otherwise.
    pub fn prior_sigma(&self) -> DMatrix<f64> {
        let k = self.k as f64;
        if self.nu0 > k + 1.0 {
            &self.psi0 / (self.nu0 - k - 1.0)
        } else {
            DMatrix::identity(self.k, self.k)
        }
    }
}

/// The mutable state of the Gibbs sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    /// Topic label per word, `z[d][n]`.
    pub z: Vec<Vec<usize>>,
    /// Document scores, row `d` = `eta_d` (D x K).
    pub eta: DMatrix<f64>,
    /// Current prior mean over document scores.
    pub mu: DVector<f64>,
    /// Current prior covariance over document scores.
    pub sigma: DMatrix<f64>,
    /// `C_k^v`: occurrences of term `v` assigned to topic `k` (K x V).
    pub topic_word_counts: DMatrix<u32>,
    /// Row sums of `topic_word_counts`.
    pub topic_totals: Vec<u32>,
}

impl ModelState {
    pub fn n_docs(&self) -> usize {
        self.z.len()
    }

    pub fn n_topics(&self) -> usize {
        self.topic_word_counts.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.topic_word_counts.ncols()
    }

    /// Tally `topic_word_counts` and `topic_totals` from scratch.
    pub fn tally_counts(z: &[Vec<usize>], corpus: &Corpus, k: usize) -> (DMatrix<u32>, Vec<u32>) {
        let mut counts = DMatrix::zeros(k, corpus.n_terms());
        let mut totals = vec![0u32; k];
        for (doc, labels) in corpus.docs.iter().zip(z) {
            for (&w, &topic) in doc.iter().zip(labels) {
                counts[(topic, w as usize)] += 1;
                totals[topic] += 1;
            }
        }
        (counts, totals)
    }

    /// Exact count-consistency check against a corpus: the incremental
    /// updates of the z sweep must always equal a fresh tally.
    pub fn counts_are_consistent(&self, corpus: &Corpus) -> bool {
        let (counts, totals) = Self::tally_counts(&self.z, corpus, self.n_topics());
        counts == self.topic_word_counts && totals == self.topic_totals
    }

    /// Posterior-mean topic-word probability
    /// `(C_k^v + beta) / (total_k + V beta)`.
    pub fn phi_hat(&self, k: usize, v: usize, beta: f64) -> f64 {
        let vocab = self.n_terms() as f64;
        (self.topic_word_counts[(k, v)] as f64 + beta)
            / (self.topic_totals[k] as f64 + vocab * beta)
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStat {
    /// 1-based sweep index.
    pub iteration: usize,
    pub loglik: f64,
    pub wall_seconds: f64,
}

/// Accumulated output of a fit: the iteration trace plus running means of
/// the retained (post burn-in, thinned) draws and the retained `sigma`
/// samples for correlation reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: Vec<IterationStat>,
    /// Mean of retained `eta` draws (D x K); zero until the first
    /// retained sample.
    pub eta_mean: DMatrix<f64>,
    /// Mean of retained `mu` draws.
    pub mu_mean: DVector<f64>,
    /// Mean of retained `sigma` draws.
    pub sigma_mean: DMatrix<f64>,
    /// Mean of the retained draws' posterior-mean topic-word rows (K x V).
    pub phi_mean: DMatrix<f64>,
    /// The retained `sigma` draws themselves.
    pub sigma_samples: Vec<DMatrix<f64>>,
    /// Number of retained draws folded into the means.
    pub retained: usize,
}

impl FitReport {
    pub fn new(n_docs: usize, k: usize, v: usize) -> Self {
        FitReport {
            iterations: Vec::new(),
            eta_mean: DMatrix::zeros(n_docs, k),
            mu_mean: DVector::zeros(k),
            sigma_mean: DMatrix::zeros(k, k),
            phi_mean: DMatrix::zeros(k, v),
            sigma_samples: Vec::new(),
            retained: 0,
        }
    }

    /// Fold one retained draw into the running means.
    pub fn absorb(&mut self, state: &ModelState, beta: f64) {
        self.retained += 1;
        let w = 1.0 / self.retained as f64;
        self.eta_mean += (&state.eta - &self.eta_mean) * w;
        self.mu_mean += (&state.mu - &self.mu_mean) * w;
        self.sigma_mean += (&state.sigma - &self.sigma_mean) * w;
        let phi = DMatrix::from_fn(self.phi_mean.nrows(), self.phi_mean.ncols(), |k, v| {
            state.phi_hat(k, v, beta)
        });
        self.phi_mean += (phi - &self.phi_mean) * w;
        self.sigma_samples.push(state.sigma.clone());
    }

    /// CSV trace: `iteration,loglik,wall_seconds`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "iteration,loglik,wall_seconds").map_err(|e| Error::io(path, e))?;
        for row in &self.iterations {
            writeln!(out, "{},{},{}", row.iteration, row.loglik, row.wall_seconds)
                .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Everything needed to resume a run, in one versioned JSON file.
///
/// No generator state is stored: every random draw is derived from
/// `(seed, iteration, phase, unit)`, so the resumable state is just the
/// data plus the number of completed sweeps, and a resumed run replays
/// exactly the draws an uninterrupted one would have made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub hyper: Hyperparams,
    pub corpus: Corpus,
    pub state: ModelState,
    pub report: FitReport,
    pub completed_iters: usize,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let out = BufWriter::new(file);
        serde_json::to_writer(out, self)
            .map_err(|e| Error::Checkpoint(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Checkpoint(format!("read {}: {e}", path.display())))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: version {} unsupported (expected {})",
                path.display(),
                ck.version,
                CHECKPOINT_VERSION
            )));
        }
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn tiny_corpus() -> Corpus {
        Corpus {
            vocab: Vocabulary {
                terms: vec!["a".into(), "b".into(), "c".into()],
                doc_freq: vec![1, 2, 1],
                corpus_freq: vec![2, 2, 1],
            },
            docs: vec![vec![0, 0, 1], vec![1, 2]],
            doc_ids: vec!["1".into(), "2".into()],
        }
    }

    #[test]
    fn default_hyperparams_validate() {
        for k in [2usize, 5, 40] {
            Hyperparams::new(k).validate().unwrap();
        }
    }

    #[test]
    fn validation_catches_each_field() {
        let good = Hyperparams::new(3);
        let mut h = good.clone();
        h.beta = 0.0;
        assert!(h.validate().is_err());
        let mut h = good.clone();
        h.kappa0 = -1.0;
        assert!(h.validate().is_err());
        let mut h = good.clone();
        h.nu0 = 1.5;
        assert!(h.validate().is_err());
        let mut h = good.clone();
        h.burn_in = h.n_iters;
        assert!(h.validate().is_err());
        let mut h = good.clone();
        h.thin = 0;
        assert!(h.validate().is_err());
        let mut h = good.clone();
        h.mu0 = DVector::zeros(2);
        assert!(h.validate().is_err());
        let mut h = good.clone();
        h.psi0 = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(h.validate().is_err());
    }

    #[test]
    fn prior_sigma_uses_iw_mean_when_defined() {
        let mut h = Hyperparams::new(2);
        h.nu0 = 5.0; // mean = psi0 / (5 - 3)
        h.psi0 = DMatrix::identity(2, 2) * 4.0;
        assert!((h.prior_sigma() - DMatrix::identity(2, 2) * 2.0).amax() < 1e-15);
        h.nu0 = 2.5; // mean undefined; falls back to identity
        assert_eq!(h.prior_sigma(), DMatrix::identity(2, 2));
    }

    #[test]
    fn tally_and_consistency_check() {
        let corpus = tiny_corpus();
        let z = vec![vec![0, 1, 0], vec![1, 1]];
        let (counts, totals) = ModelState::tally_counts(&z, &corpus, 2);
        assert_eq!(counts[(0, 0)], 1); // doc0: a->0, a->1, b->0
        assert_eq!(counts[(1, 0)], 1);
        assert_eq!(counts[(0, 1)], 1);
        assert_eq!(counts[(1, 1)], 1);
        assert_eq!(counts[(1, 2)], 1);
        assert_eq!(totals, vec![2, 3]);

        let state = ModelState {
            z,
            eta: DMatrix::zeros(2, 2),
            mu: DVector::zeros(2),
            sigma: DMatrix::identity(2, 2),
            topic_word_counts: counts,
            topic_totals: totals,
        };
        assert!(state.counts_are_consistent(&corpus));
        let mut broken = state.clone();
        broken.topic_totals[0] += 1;
        assert!(!broken.counts_are_consistent(&corpus));
    }

    #[test]
    fn phi_hat_normalizes_over_vocabulary() {
        let corpus = tiny_corpus();
        let z = vec![vec![0, 0, 0], vec![0, 0]];
        let (counts, totals) = ModelState::tally_counts(&z, &corpus, 2);
        let state = ModelState {
            z,
            eta: DMatrix::zeros(2, 2),
            mu: DVector::zeros(2),
            sigma: DMatrix::identity(2, 2),
            topic_word_counts: counts,
            topic_totals: totals,
        };
        for k in 0..2 {
            let total: f64 = (0..3).map(|v| state.phi_hat(k, v, 0.5)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        // Empty topic 1 falls back to the uniform Dirichlet mean.
        assert!((state.phi_hat(1, 0, 0.5) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_means_are_draw_averages() {
        let corpus = tiny_corpus();
        let mut report = FitReport::new(2, 2, 3);
        let labelings = [
            vec![vec![0, 1, 0], vec![1, 1]],
            vec![vec![1, 0, 1], vec![0, 0]],
        ];
        let mut want_phi00 = 0.0;
        for (i, z) in labelings.iter().enumerate() {
            let (counts, totals) = ModelState::tally_counts(z, &corpus, 2);
            let state = ModelState {
                z: z.clone(),
                eta: DMatrix::from_element(2, 2, (i + 1) as f64),
                mu: DVector::from_element(2, 2.0 * i as f64),
                sigma: DMatrix::identity(2, 2) * (1.0 + 2.0 * i as f64),
                topic_word_counts: counts,
                topic_totals: totals,
            };
            want_phi00 += state.phi_hat(0, 0, 0.5) / 2.0;
            report.absorb(&state, 0.5);
        }
        assert_eq!(report.retained, 2);
        assert!((report.eta_mean[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((report.mu_mean[0] - 1.0).abs() < 1e-15);
        assert!((report.sigma_mean[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((report.phi_mean[(0, 0)] - want_phi00).abs() < 1e-15);
        assert_eq!(report.sigma_samples.len(), 2);
    }

    #[test]
    fn checkpoint_round_trips_and_rejects_bad_version() {
        let corpus = tiny_corpus();
        let z = vec![vec![0, 1, 0], vec![1, 1]];
        let (counts, totals) = ModelState::tally_counts(&z, &corpus, 2);
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            hyper: Hyperparams::new(2),
            corpus,
            state: ModelState {
                z,
                eta: DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.3, 0.4]),
                mu: DVector::zeros(2),
                sigma: DMatrix::identity(2, 2),
                topic_word_counts: counts,
                topic_totals: totals,
            },
            report: FitReport::new(2, 2, 3),
            completed_iters: 7,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        ck.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ck);

        let mut stale = ck;
        stale.version = 99;
        stale.save(&path).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn fit_report_csv_layout() {
        let mut report = FitReport::new(1, 2, 3);
        report.iterations.push(IterationStat {
            iteration: 1,
            loglik: -10.5,
            wall_seconds: 0.25,
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.csv");
        report.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "iteration,loglik,wall_seconds\n1,-10.5,0.25\n");
    }
}
