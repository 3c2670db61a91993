//! Model-quality outputs over a fitted state: predictive log-likelihood,
//! ranked topic-word reports, the topic correlation matrix, and the
//! model-selection sweep over topic counts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::{Corpus, Vocabulary};
use crate::do_probit::do_theta;
use crate::gibbs::{self, RunOptions};
use crate::model::{Hyperparams, IterationStat, ModelState};
use crate::{Error, Result};

/// In-sample per-word predictive log-likelihood from point estimates:
/// `sum_dn log sum_k theta_d^k phi_k^{w_dn}` with `theta_d` mapped from
/// the given score rows and `phi` the posterior-mean topic-word
/// probabilities. Always <= 0 up to rounding; higher is better.
pub fn loglikelihood_for_eta(
    eta: &DMatrix<f64>,
    state: &ModelState,
    corpus: &Corpus,
    hyper: &Hyperparams,
) -> Result<f64> {
    if eta.nrows() != corpus.n_docs()
        || eta.ncols() != hyper.k
        || state.n_terms() != corpus.n_terms()
        || state.n_topics() != hyper.k
    {
        return Err(Error::invalid(
            "state/corpus/hyperparameter dimensions disagree; was this state fitted to this corpus?",
        ));
    }
    let v = corpus.n_terms();
    let phi = DMatrix::from_fn(hyper.k, v, |k, w| state.phi_hat(k, w, hyper.beta));
    let mut total = 0.0;
    for (d, doc) in corpus.docs.iter().enumerate() {
        let theta = do_theta(&eta.row(d).transpose())?.probs;
        for &w in doc {
            let p: f64 = (0..hyper.k).map(|k| theta[k] * phi[(k, w as usize)]).sum();
            total += p.ln();
        }
    }
    Ok(total)
}

/// Log-likelihood at the state's current scores.
pub fn loglikelihood(state: &ModelState, corpus: &Corpus, hyper: &Hyperparams) -> Result<f64> {
    loglikelihood_for_eta(&state.eta, state, corpus, hyper)
}

/// Per-topic ranked term lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicReport {
    /// `top_terms[k]` is the top-M list for topic `k`, probabilities
    /// nonincreasing, ties broken by term id ascending.
    pub top_terms: Vec<Vec<(String, f64)>>,
}

impl TopicReport {
    /// TSV rows `topic<TAB>rank<TAB>term<TAB>prob`, rank 1-based.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "topic\trank\tterm\tprob").map_err(|e| Error::io(path, e))?;
        for (k, terms) in self.top_terms.iter().enumerate() {
            for (rank, (term, prob)) in terms.iter().enumerate() {
                writeln!(out, "{k}\t{}\t{term}\t{prob}", rank + 1)
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Rank each topic's posterior-mean word distribution and keep the top
/// `m` terms.
pub fn top_words(
    state: &ModelState,
    vocab: &Vocabulary,
    m: usize,
    beta: f64,
) -> Result<TopicReport> {
    let v = state.n_terms();
    if vocab.len() != v {
        return Err(Error::invalid(format!(
            "vocabulary has {} terms, state has {}",
            vocab.len(),
            v
        )));
    }
    if m > v {
        return Err(Error::invalid(format!("top-M {m} exceeds V = {v}")));
    }
    let mut top_terms = Vec::with_capacity(state.n_topics());
    for k in 0..state.n_topics() {
        let mut ranked: Vec<(usize, f64)> =
            (0..v).map(|w| (w, state.phi_hat(k, w, beta))).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        top_terms.push(
            ranked
                .into_iter()
                .take(m)
                .map(|(w, p)| (vocab.term(w as u32).to_owned(), p))
                .collect(),
        );
    }
    Ok(TopicReport { top_terms })
}

/// Correlation matrix derived from the averaged posterior `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub r: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Off-diagonal pairs `(i, j, r)` with `i < j` and `|r| >=
    /// threshold`, for graph rendering.
    pub fn edges(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let k = self.r.nrows();
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                if self.r[(i, j)].abs() >= threshold {
                    edges.push((i, j, self.r[(i, j)]));
                }
            }
        }
        edges
    }

    /// Dense CSV with a header row of topic indices.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let k = self.r.nrows();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let header: Vec<String> = (0..k).map(|j| format!("topic{j}")).collect();
        writeln!(out, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
        for i in 0..k {
            let row: Vec<String> = (0..k).map(|j| self.r[(i, j)].to_string()).collect();
            writeln!(out, "{}", row.join(",")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Edge-list CSV `i,j,r`.
    pub fn write_edges_csv(&self, path: &Path, threshold: f64) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "i,j,r").map_err(|e| Error::io(path, e))?;
        for (i, j, r) in self.edges(threshold) {
            writeln!(out, "{i},{j},{r}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Average the retained `sigma` draws and convert to correlations
/// `R_ij = S_ij / sqrt(S_ii S_jj)`. The mean of positive-definite draws
/// is positive definite; should rounding still produce a nonpositive
/// eigenvalue, the spectrum is clamped at a tiny positive floor before
/// normalizing.
pub fn topic_correlations(sigma_samples: &[DMatrix<f64>]) -> Result<CorrelationMatrix> {
    let Some(first) = sigma_samples.first() else {
        return Err(Error::invalid("no sigma samples retained"));
    };
    let k = first.nrows();
    let mut mean = DMatrix::zeros(k, k);
    for s in sigma_samples {
        if s.nrows() != k || s.ncols() != k {
            return Err(Error::invalid("sigma samples have mixed dimensions"));
        }
        mean += s;
    }
    mean /= sigma_samples.len() as f64;
    let mean = 0.5 * (&mean + mean.transpose());

    let mean = if mean.diagonal().iter().all(|&d| d > 0.0) {
        mean
    } else {
        let eig = nalgebra::SymmetricEigen::new(mean);
        let floor = 1e-12 * eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let clamped = DVector::from_fn(k, |i, _| eig.eigenvalues[i].max(floor));
        &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
    };

    let mut r = DMatrix::identity(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let val = mean[(i, j)] / (mean[(i, i)] * mean[(j, j)]).sqrt();
            let val = val.clamp(-1.0, 1.0);
            r[(i, j)] = val;
            r[(j, i)] = val;
        }
    }
    Ok(CorrelationMatrix { r })
}

/// One row of the model-selection sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    /// Document-completion log-likelihood of the held-out token
    /// positions (see [`sweep_k`]); higher is better.
    pub loglik: f64,
    pub seconds: f64,
}

/// Result of [`sweep_k`]: the curve data plus the argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub best_k: usize,
}

impl SweepReport {
    /// CSV `K,loglik,seconds`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "K,loglik,seconds").map_err(|e| Error::io(path, e))?;
        for row in &self.rows {
            writeln!(out, "{},{},{}", row.k, row.loglik, row.seconds)
                .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Build the hyperparameters for one sweep point: dimension-dependent
/// fields take their defaults for `k`, scalar knobs carry over from the
/// template (including the seed — every K sees the same stream policy).
pub fn hyper_for_k(template: &Hyperparams, k: usize) -> Hyperparams {
    let mut hyper = Hyperparams::new(k);
    hyper.beta = template.beta;
    hyper.kappa0 = template.kappa0;
    hyper.n_iters = template.n_iters;
    hyper.burn_in = template.burn_in;
    hyper.thin = template.thin;
    hyper.seed = template.seed;
    hyper
}

/// Split for the document-completion score: even token positions train,
/// odd positions are held out. Deterministic, balanced within every
/// document, and never empties a document (position 0 always trains).
fn completion_split(corpus: &Corpus) -> (Corpus, Vec<Vec<u32>>) {
    let mut train = corpus.clone();
    let mut held = Vec::with_capacity(corpus.n_docs());
    for (d, doc) in corpus.docs.iter().enumerate() {
        let mut keep = Vec::with_capacity(doc.len().div_ceil(2));
        let mut out = Vec::with_capacity(doc.len() / 2);
        for (n, &w) in doc.iter().enumerate() {
            if n % 2 == 1 {
                out.push(w);
            } else {
                keep.push(w);
            }
        }
        train.docs[d] = keep;
        held.push(out);
    }
    (train, held)
}

/// Fit once per candidate topic count and report the model-selection
/// curve with its argmax.
///
/// Each candidate is scored by document completion: the fit sees only the
/// even token positions, and the row's `loglik` is the predictive
/// log-likelihood of the held-out odd positions under the retained-mean
/// scores and topic-word rows. In-sample scores grow with K almost
/// unconditionally — extra topics absorb sampling noise — so the argmax
/// of an in-sample curve is just the largest candidate; holding out half
/// of every document prices that capacity and puts the peak at the
/// supported topic count. Corpora too small to hold anything out
/// (single-token documents throughout) fall back to the in-sample score.
pub fn sweep_k(
    corpus: &Corpus,
    template: &Hyperparams,
    k_list: &[usize],
    on_iter: &mut dyn FnMut(usize, &IterationStat),
) -> Result<SweepReport> {
    if k_list.is_empty() {
        return Err(Error::invalid("empty K list"));
    }
    let (train, held) = completion_split(corpus);
    let n_held: usize = held.iter().map(Vec::len).sum();
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let hyper = hyper_for_k(template, k);
        let t0 = std::time::Instant::now();
        let (state, report) = gibbs::run(&train, &hyper, &RunOptions::default(), &mut |stat| {
            on_iter(k, stat)
        })?;
        let eta = if report.retained > 0 {
            &report.eta_mean
        } else {
            &state.eta
        };
        let loglik = if n_held == 0 {
            loglikelihood_for_eta(eta, &state, corpus, &hyper)?
        } else {
            let phi = if report.retained > 0 {
                report.phi_mean.clone()
            } else {
                DMatrix::from_fn(hyper.k, train.n_terms(), |t, w| {
                    state.phi_hat(t, w, hyper.beta)
                })
            };
            let mut total = 0.0;
            for (d, out) in held.iter().enumerate() {
                let theta = do_theta(&eta.row(d).transpose())?.probs;
                for &w in out {
                    let p: f64 = (0..hyper.k).map(|t| theta[t] * phi[(t, w as usize)]).sum();
                    total += p.ln();
                }
            }
            total
        };
        rows.push(SweepRow {
            k,
            loglik,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    let best_k = rows
        .iter()
        .max_by(|a, b| a.loglik.partial_cmp(&b.loglik).unwrap())
        .map(|row| row.k)
        .unwrap();
    Ok(SweepReport { rows, best_k })
}
