//! The full Gibbs sampler: auxiliary/score sweeps, collapsed topic
//! assignments, the normal-inverse-Wishart update for the score prior,
//! and the matching generative simulator.
//!
//! Each sweep visits three blocks in a fixed scan order:
//!
//! 1. per document, `Y_d | eta_d, z_d` then `eta_d | Y_d, mu, sigma`
//!    (document-parallel; the conditionals are independent given the
//!    shared prior),
//! 2. per word, the collapsed assignment draw
//!    `P(z_dn = k | ..) ∝ (C_k^{w,¬n} + beta) / (C_k^{·,¬n} + V beta) · theta_d^k`
//!    with the word's own count excluded (single-threaded: it mutates the
//!    shared count matrix),
//! 3. the conjugate `(mu, sigma)` draw from the normal-inverse-Wishart
//!    posterior over all document scores.
//!
//! Every random draw comes from a substream derived from
//! `(seed, phase, iteration, step, unit)`, so runs are reproducible
//! bit-for-bit across thread counts and across interrupt/resume.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{tally_vocabulary, Corpus};
use crate::diagnostics;
use crate::distributions::{
    sample_categorical, sample_inverse_wishart, sample_mvn_prechol, MvnParams,
};
use crate::do_probit::{do_theta, sample_aux, update_eta};
use crate::model::{
    Checkpoint, FitReport, Hyperparams, IterationStat, ModelState, CHECKPOINT_VERSION,
};
use crate::par::*;
use crate::rng::RngStream;
use crate::{Error, Result};

/// Stream-phase tags; see the module docs for the derivation scheme.
const PHASE_INIT: u64 = 0;
const PHASE_ITER: u64 = 1;
const STEP_ETA: u64 = 0;
const STEP_Z: u64 = 1;
const STEP_NIW: u64 = 2;
const DOC_AUX: u64 = 0;
const DOC_ETA: u64 = 1;
const INIT_Z: u64 = 0;
const INIT_WARM: u64 = 1;

/// Warm-up passes in [`init_state`] and the flat pseudo-count they use.
const WARM_PASSES: u64 = 20;
const WARM_ALPHA: f64 = 1.0;

/// Root stream of a run; all sweeps derive from it.
fn base_stream(hyper: &Hyperparams) -> RngStream {
    RngStream::new(hyper.seed, 0)
}

/// Draw the starting state: uniform random topic labels organized by a
/// short collapsed warm-up, scores at the prior mean, and `(mu, sigma)`
/// at the prior center.
///
/// The warm-up resamples labels from `(C_kw + β)/(tot_k + Vβ) · (n_dk + α)`
/// with a flat per-document pseudo-count α — the count field plus a
/// document-level coupling, with the scores held out of play. Without it
/// the first score sweeps polarize documents onto whatever topics the
/// random labels happened to seed, and the chain starts deep in a
/// single-membership basin; the warm-up lets co-occurrence organize the
/// counts first, which is the standard warm start for correlated topic
/// samplers.
pub fn init_state(corpus: &Corpus, hyper: &Hyperparams, stream: RngStream) -> Result<ModelState> {
    hyper.validate()?;
    if corpus.n_docs() == 0 {
        return Err(Error::EmptyCorpus("no documents to fit".into()));
    }
    let k = hyper.k;
    let d = corpus.n_docs();

    let mut z = Vec::with_capacity(d);
    for (doc_idx, doc) in corpus.docs.iter().enumerate() {
        let mut z_rng = stream.child(doc_idx as u64).child(INIT_Z).rng();
        z.push(
            (0..doc.len())
                .map(|_| z_rng.gen_range(0..k))
                .collect::<Vec<_>>(),
        );
    }
    let (mut counts, mut totals) = ModelState::tally_counts(&z, corpus, k);

    let v_beta = corpus.n_terms() as f64 * hyper.beta;
    let mut weights = vec![0.0; k];
    let mut doc_topics = vec![0u32; k];
    for pass in 0..WARM_PASSES {
        for (doc_idx, doc) in corpus.docs.iter().enumerate() {
            let mut rng = stream.child(doc_idx as u64).child(INIT_WARM + pass).rng();
            doc_topics.iter_mut().for_each(|c| *c = 0);
            for &t in &z[doc_idx] {
                doc_topics[t] += 1;
            }
            for (n, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = z[doc_idx][n];
                counts[(old, w)] -= 1;
                totals[old] -= 1;
                doc_topics[old] -= 1;
                for (t, slot) in weights.iter_mut().enumerate() {
                    *slot = (counts[(t, w)] as f64 + hyper.beta) / (totals[t] as f64 + v_beta)
                        * (doc_topics[t] as f64 + WARM_ALPHA);
                }
                let new = sample_categorical(&weights, &mut rng)?;
                counts[(new, w)] += 1;
                totals[new] += 1;
                doc_topics[new] += 1;
                z[doc_idx][n] = new;
            }
        }
    }

    let mut eta = DMatrix::zeros(d, k);
    for doc_idx in 0..d {
        eta.row_mut(doc_idx).copy_from(&hyper.mu0.transpose());
    }
    Ok(ModelState {
        z,
        eta,
        mu: hyper.mu0.clone(),
        sigma: hyper.prior_sigma(),
        topic_word_counts: counts,
        topic_totals: totals,
    })
}

/// One document's share of the score sweep: draw the auxiliary matrix
/// given the current score and labels, then the new score given the
/// auxiliaries and the shared prior.
fn eta_step(
    doc_idx: usize,
    z_d: &[usize],
    eta_d: DVector<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    step_stream: RngStream,
) -> Result<DVector<f64>> {
    let ds = step_stream.child(doc_idx as u64);
    let aux = sample_aux(&eta_d, z_d, ds.child(DOC_AUX));
    update_eta(&aux, mu, sigma, &mut ds.child(DOC_ETA).rng())
}

/// Resample every document's score (auxiliary draw + conjugate update),
/// fanning documents across the thread pool when the `parallel` feature
/// is on. Identical to [`sweep_eta_seq`] in every case: each document's
/// draws come from its own substream.
pub fn sweep_eta(state: &mut ModelState, _corpus: &Corpus, stream: RngStream) -> Result<()> {
    let mu = state.mu.clone();
    let sigma = state.sigma.clone();
    let z = &state.z;
    let eta = &state.eta;
    let rows: Result<Vec<DVector<f64>>> = (0..state.z.len())
        .into_par_iter()
        .map(|d| eta_step(d, &z[d], eta.row(d).transpose(), &mu, &sigma, stream))
        .collect();
    for (d, row) in rows?.into_iter().enumerate() {
        state.eta.row_mut(d).copy_from(&row.transpose());
    }
    Ok(())
}

/// Single-threaded reference path for [`sweep_eta`]; used by tests and
/// benchmarks to pin down the parallel path's equivalence and speedup.
pub fn sweep_eta_seq(state: &mut ModelState, _corpus: &Corpus, stream: RngStream) -> Result<()> {
    for d in 0..state.z.len() {
        let row = eta_step(
            d,
            &state.z[d],
            state.eta.row(d).transpose(),
            &state.mu,
            &state.sigma,
            stream,
        )?;
        state.eta.row_mut(d).copy_from(&row.transpose());
    }
    Ok(())
}

/// Collapsed-assignment weights for one word, writing into `weights`.
/// `counts` and `totals` must already exclude the word itself.
fn z_weights(
    weights: &mut [f64],
    theta: &DVector<f64>,
    counts: &DMatrix<u32>,
    totals: &[u32],
    w: usize,
    beta: f64,
    v_beta: f64,
) {
    for (k, slot) in weights.iter_mut().enumerate() {
        *slot = (counts[(k, w)] as f64 + beta) / (totals[k] as f64 + v_beta) * theta[k];
    }
}

/// Resample every topic assignment from its collapsed conditional,
/// maintaining the count matrix incrementally. Runs single-threaded: each
/// draw must see every earlier draw's counts.
pub fn sweep_z(
    state: &mut ModelState,
    corpus: &Corpus,
    hyper: &Hyperparams,
    stream: RngStream,
) -> Result<()> {
    let k = hyper.k;
    let v_beta = corpus.n_terms() as f64 * hyper.beta;
    let mut weights = vec![0.0; k];
    for (d, doc) in corpus.docs.iter().enumerate() {
        let theta = do_theta(&state.eta.row(d).transpose())?.probs;
        let mut rng = stream.child(d as u64).rng();
        for (n, &w) in doc.iter().enumerate() {
            let w = w as usize;
            let old = state.z[d][n];
            state.topic_word_counts[(old, w)] -= 1;
            state.topic_totals[old] -= 1;
            z_weights(
                &mut weights,
                &theta,
                &state.topic_word_counts,
                &state.topic_totals,
                w,
                hyper.beta,
                v_beta,
            );
            let new = sample_categorical(&weights, &mut rng)?;
            state.topic_word_counts[(new, w)] += 1;
            state.topic_totals[new] += 1;
            state.z[d][n] = new;
        }
    }
    Ok(())
}

/// Approximate document-partitioned variant of [`sweep_z`]: each
/// partition resamples its documents against a frozen snapshot of the
/// counts plus its own deltas, and the deltas merge at sweep end. Draws
/// use the same per-document substreams as the exact sweep. Off by
/// default; the exact sweep is the reference semantics.
pub fn sweep_z_partitioned(
    state: &mut ModelState,
    corpus: &Corpus,
    hyper: &Hyperparams,
    stream: RngStream,
    partitions: usize,
) -> Result<()> {
    let partitions = partitions.max(1).min(corpus.n_docs().max(1));
    let k = hyper.k;
    let v = corpus.n_terms();
    let v_beta = v as f64 * hyper.beta;
    let snapshot_counts = state.topic_word_counts.clone();
    let snapshot_totals = state.topic_totals.clone();

    let chunk = corpus.n_docs().div_ceil(partitions);
    let ranges: Vec<std::ops::Range<usize>> = (0..partitions)
        .map(|p| (p * chunk).min(corpus.n_docs())..((p + 1) * chunk).min(corpus.n_docs()))
        .filter(|r| !r.is_empty())
        .collect();

    struct PartitionResult {
        range: std::ops::Range<usize>,
        z: Vec<Vec<usize>>,
        count_delta: DMatrix<i64>,
        total_delta: Vec<i64>,
    }

    let eta = &state.eta;
    let z_snapshot = &state.z;
    let parts: Result<Vec<PartitionResult>> = ranges
        .into_par_iter()
        .map(|range| {
            let mut counts = snapshot_counts.clone();
            let mut totals = snapshot_totals.clone();
            let mut weights = vec![0.0; k];
            let mut z_out = Vec::with_capacity(range.len());
            for d in range.clone() {
                let theta = do_theta(&eta.row(d).transpose())?.probs;
                let mut rng = stream.child(d as u64).rng();
                let mut labels = z_snapshot[d].clone();
                for (n, &w) in corpus.docs[d].iter().enumerate() {
                    let w = w as usize;
                    let old = labels[n];
                    counts[(old, w)] -= 1;
                    totals[old] -= 1;
                    z_weights(
                        &mut weights,
                        &theta,
                        &counts,
                        &totals,
                        w,
                        hyper.beta,
                        v_beta,
                    );
                    let new = sample_categorical(&weights, &mut rng)?;
                    counts[(new, w)] += 1;
                    totals[new] += 1;
                    labels[n] = new;
                }
                z_out.push(labels);
            }
            let count_delta = DMatrix::from_fn(k, v, |r, c| {
                counts[(r, c)] as i64 - snapshot_counts[(r, c)] as i64
            });
            let total_delta = (0..k)
                .map(|r| totals[r] as i64 - snapshot_totals[r] as i64)
                .collect();
            Ok(PartitionResult {
                range,
                z: z_out,
                count_delta,
                total_delta,
            })
        })
        .collect();

    for part in parts? {
        for (offset, labels) in part.z.into_iter().enumerate() {
            state.z[part.range.start + offset] = labels;
        }
        for r in 0..k {
            for c in 0..v {
                let merged = state.topic_word_counts[(r, c)] as i64 + part.count_delta[(r, c)];
                state.topic_word_counts[(r, c)] =
                    u32::try_from(merged).expect("partition merge produced a negative count");
            }
            let merged = state.topic_totals[r] as i64 + part.total_delta[r];
            state.topic_totals[r] =
                u32::try_from(merged).expect("partition merge produced a negative total");
        }
    }
    Ok(())
}

/// Normal-inverse-Wishart posterior over `(mu, sigma)` given all
/// document scores.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPosterior {
    pub mu_prime: DVector<f64>,
    pub kappa_prime: f64,
    pub nu_prime: f64,
    pub psi_prime: DMatrix<f64>,
}

/// Conjugate pooling of the score rows:
/// `kappa' = kappa0 + D`, `nu' = nu0 + D`,
/// `mu' = (D etabar + kappa0 mu0) / (D + kappa0)`,
/// `psi' = psi0 + Q + kappa0 D / (kappa0 + D) (etabar - mu0)(etabar - mu0)^T`
/// with `Q` the centered scatter of the rows.
pub fn niw_posterior(eta: &DMatrix<f64>, hyper: &Hyperparams) -> Result<NiwPosterior> {
    let d = eta.nrows();
    if d == 0 {
        return Err(Error::invalid("NIW update needs at least one document"));
    }
    if eta.ncols() != hyper.k {
        return Err(Error::invalid(format!(
            "eta has {} columns for K = {}",
            eta.ncols(),
            hyper.k
        )));
    }
    let df = d as f64;
    let eta_bar = DVector::from_fn(hyper.k, |j, _| eta.column(j).mean());
    let mut q = DMatrix::zeros(hyper.k, hyper.k);
    for r in 0..d {
        let dev = eta.row(r).transpose() - &eta_bar;
        q += &dev * dev.transpose();
    }
    let pull = eta_bar.clone() - &hyper.mu0;
    let psi_prime =
        &hyper.psi0 + q + (hyper.kappa0 * df / (hyper.kappa0 + df)) * &pull * pull.transpose();
    let psi_prime = 0.5 * (&psi_prime + psi_prime.transpose());
    Ok(NiwPosterior {
        mu_prime: (df * eta_bar + hyper.kappa0 * &hyper.mu0) / (df + hyper.kappa0),
        kappa_prime: hyper.kappa0 + df,
        nu_prime: hyper.nu0 + df,
        psi_prime,
    })
}

/// Draw `(mu, sigma)` from the posterior: `sigma ~ IW(psi', nu')` then
/// `mu ~ MVN(mu', sigma / kappa')`.
pub fn update_niw<R: Rng + ?Sized>(
    eta: &DMatrix<f64>,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let post = niw_posterior(eta, hyper)?;
    let sigma = sample_inverse_wishart(&post.psi_prime, post.nu_prime, rng)?;
    let mu_params = MvnParams::new(post.mu_prime, &sigma / post.kappa_prime)?;
    let mu = crate::distributions::sample_mvn(&mu_params, rng)?;
    Ok((mu, sigma))
}

/// Side-effect knobs for [`run`] and [`resume`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Where to write periodic checkpoints; `None` disables them.
    pub checkpoint_path: Option<PathBuf>,
    /// Checkpoint cadence in sweeps.
    pub checkpoint_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checkpoint_path: None,
            checkpoint_every: 100,
        }
    }
}

/// Whether 1-based sweep `iteration` is retained under the burn-in/thin
/// policy: sweeps after `burn_in`, every `thin`-th, starting with the
/// first post-burn-in sweep.
fn retained(iteration: usize, hyper: &Hyperparams) -> bool {
    iteration > hyper.burn_in && (iteration - hyper.burn_in - 1).is_multiple_of(hyper.thin)
}

fn run_loop(
    corpus: &Corpus,
    hyper: &Hyperparams,
    mut state: ModelState,
    mut report: FitReport,
    start_iter: usize,
    options: &RunOptions,
    on_iter: &mut dyn FnMut(&IterationStat),
) -> Result<(ModelState, FitReport)> {
    let base = base_stream(hyper).child(PHASE_ITER);
    for iter in start_iter..hyper.n_iters {
        let t0 = Instant::now();
        let sweep = base.child(iter as u64);
        sweep_eta(&mut state, corpus, sweep.child(STEP_ETA))?;
        sweep_z(&mut state, corpus, hyper, sweep.child(STEP_Z))?;
        let (mu, sigma) = update_niw(&state.eta, hyper, &mut sweep.child(STEP_NIW).rng())?;
        state.mu = mu;
        state.sigma = sigma;

        let iteration = iter + 1;
        if retained(iteration, hyper) {
            report.absorb(&state, hyper.beta);
        }
        let stat = IterationStat {
            iteration,
            loglik: diagnostics::loglikelihood(&state, corpus, hyper)?,
            wall_seconds: t0.elapsed().as_secs_f64(),
        };
        report.iterations.push(stat.clone());
        on_iter(&stat);

        if let Some(path) = &options.checkpoint_path {
            if iteration % options.checkpoint_every == 0 || iteration == hyper.n_iters {
                Checkpoint {
                    version: CHECKPOINT_VERSION,
                    hyper: hyper.clone(),
                    corpus: corpus.clone(),
                    state: state.clone(),
                    report: report.clone(),
                    completed_iters: iteration,
                }
                .save(path)?;
            }
        }
    }
    Ok((state, report))
}

/// Fit the model: initialize from the prior and run `n_iters` full
/// sweeps, reporting each iteration through `on_iter`.
pub fn run(
    corpus: &Corpus,
    hyper: &Hyperparams,
    options: &RunOptions,
    on_iter: &mut dyn FnMut(&IterationStat),
) -> Result<(ModelState, FitReport)> {
    hyper.validate()?;
    let state = init_state(corpus, hyper, base_stream(hyper).child(PHASE_INIT))?;
    let report = FitReport::new(corpus.n_docs(), hyper.k, corpus.n_terms());
    run_loop(corpus, hyper, state, report, 0, options, on_iter)
}

/// Continue an interrupted run from its checkpoint. Because streams are
/// derived per iteration, the completed run equals the uninterrupted one
/// draw for draw.
pub fn resume(
    checkpoint: Checkpoint,
    options: &RunOptions,
    on_iter: &mut dyn FnMut(&IterationStat),
) -> Result<(Corpus, ModelState, FitReport)> {
    let Checkpoint {
        hyper,
        corpus,
        state,
        report,
        completed_iters,
        ..
    } = checkpoint;
    hyper.validate()?;
    let (state, report) = run_loop(
        &corpus,
        &hyper,
        state,
        report,
        completed_iters,
        options,
        on_iter,
    )?;
    Ok((corpus, state, report))
}

/// Ground truth retained by [`simulate_corpus`] for recovery tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    /// Scores actually drawn, row per document (D x K).
    pub eta: DMatrix<f64>,
    /// True topic label per word.
    pub z: Vec<Vec<usize>>,
    /// The topic-word distributions words were drawn from (K x V).
    pub topic_word: DMatrix<f64>,
}

/// Draw a synthetic corpus from the generative process: per document,
/// scores from the prior, proportions via the orthant map, then topic and
/// word draws per position.
pub fn simulate_corpus(
    hyper: &Hyperparams,
    topic_word: &DMatrix<f64>,
    n_docs: usize,
    doc_len: usize,
    stream: RngStream,
) -> Result<(Corpus, SimTruth)> {
    hyper.validate()?;
    if topic_word.nrows() != hyper.k {
        return Err(Error::invalid(format!(
            "topic_word has {} rows for K = {}",
            topic_word.nrows(),
            hyper.k
        )));
    }
    let v = topic_word.ncols();
    if v < 2 {
        return Err(Error::invalid("topic_word needs V >= 2 columns"));
    }
    for k in 0..hyper.k {
        let row = topic_word.row(k);
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (row.sum() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "topic_word row {k} is not a probability distribution"
            )));
        }
    }
    if n_docs == 0 || doc_len == 0 {
        return Err(Error::invalid("need n_docs >= 1 and doc_len >= 1"));
    }

    let chol = Cholesky::new(hyper.prior_sigma())
        .ok_or(Error::NotPositiveDefinite("simulation prior sigma"))?;
    let phi_rows: Vec<Vec<f64>> = (0..hyper.k)
        .map(|k| topic_word.row(k).iter().copied().collect())
        .collect();

    let mut docs = Vec::with_capacity(n_docs);
    let mut doc_ids = Vec::with_capacity(n_docs);
    let mut eta = DMatrix::zeros(n_docs, hyper.k);
    let mut z = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let mut rng = stream.child(d as u64).rng();
        let eta_d = sample_mvn_prechol(&hyper.mu0, &chol, &mut rng);
        let theta = do_theta(&eta_d)?.probs;
        let theta: Vec<f64> = theta.iter().copied().collect();
        let mut labels = Vec::with_capacity(doc_len);
        let mut tokens = Vec::with_capacity(doc_len);
        for _ in 0..doc_len {
            let topic = sample_categorical(&theta, &mut rng)?;
            let word = sample_categorical(&phi_rows[topic], &mut rng)?;
            labels.push(topic);
            tokens.push(word as u32);
        }
        eta.row_mut(d).copy_from(&eta_d.transpose());
        z.push(labels);
        docs.push(tokens);
        doc_ids.push((d + 1).to_string());
    }

    let width = (v - 1).to_string().len();
    let terms: Vec<String> = (0..v).map(|i| format!("w{i:0width$}")).collect();
    let vocab = tally_vocabulary(terms, &docs);
    Ok((
        Corpus {
            vocab,
            docs,
            doc_ids,
        },
        SimTruth {
            eta,
            z,
            topic_word: topic_word.clone(),
        },
    ))
}
