//! The traditional multinomial-probit machinery the diagonal-orthant
//! scheme replaces, kept as a faithful baseline for the efficiency
//! comparison.
//!
//! Two pieces: the relaxed (identity-covariance) choice probability
//!
//! ```text
//! theta_k = E_{v ~ N(0,1)} [ prod_{j != k} Phi(v + eta_k - eta_j) ]
//! ```
//!
//! estimated by Monte Carlo at O(mc_samples x K^2) per document, and the
//! max-condition auxiliary sampler that redraws `Y ~ MVN(eta, I)` until
//! the assigned component is the largest — which can fail outright when
//! the assigned component's score is low, so failure is a reported
//! outcome here, not an exception. [`bench_compare`] times both against
//! the orthant versions.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::distributions::{sample_categorical, std_normal_cdf};
use crate::do_probit::{do_theta, sample_aux, Eta};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Knobs for the baseline: Monte Carlo draws per probability estimate,
/// and the attempt cap plus wall-clock guard on every rejection loop.
#[derive(Debug, Clone)]
pub struct MnpConfig {
    pub mc_samples: usize,
    pub max_attempts: usize,
    pub timeout: Duration,
}

impl Default for MnpConfig {
    fn default() -> Self {
        MnpConfig {
            mc_samples: 1000,
            max_attempts: 10_000,
            timeout: Duration::from_secs(30),
        }
    }
}

impl MnpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mc_samples < 100 {
            return Err(Error::invalid(format!(
                "mc_samples must be >= 100, got {}",
                self.mc_samples
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be >= 1"));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of the relaxed choice probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MnpTheta {
    /// Normalized estimates.
    pub probs: DVector<f64>,
    /// Raw per-component Monte Carlo means (the unnormalized choice
    /// probabilities; they sum to 1 only in expectation).
    pub raw: DVector<f64>,
    /// Standard errors of the raw means.
    pub stderr: DVector<f64>,
}

/// Estimate the topic proportions by Monte Carlo over the shared shift
/// `v`: each sample draws one `v` and evaluates every component's
/// product, O(mc_samples x K^2) in total.
pub fn mnp_theta(eta: &Eta, config: &MnpConfig, stream: RngStream) -> Result<MnpTheta> {
    config.validate()?;
    let k = eta.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "topic distribution needs K >= 2, got K = {k}"
        )));
    }
    if eta.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("eta has a non-finite component"));
    }

    let s = config.mc_samples;
    let mut rng = stream.rng();
    let mut sum = vec![0.0f64; k];
    let mut sum_sq = vec![0.0f64; k];
    for _ in 0..s {
        let v: f64 = rng.sample(StandardNormal);
        for i in 0..k {
            let mut product = 1.0;
            for j in 0..k {
                if j != i {
                    product *= std_normal_cdf(v + eta[i] - eta[j]);
                }
            }
            sum[i] += product;
            sum_sq[i] += product * product;
        }
    }

    let raw = DVector::from_fn(k, |i, _| sum[i] / s as f64);
    let stderr = DVector::from_fn(k, |i, _| {
        let var = (sum_sq[i] / s as f64 - raw[i] * raw[i]).max(0.0);
        (var / s as f64).sqrt()
    });
    let total = raw.sum();
    if !(total > 0.0) {
        return Err(Error::invalid(
            "all Monte Carlo choice probabilities underflowed to zero",
        ));
    }
    Ok(MnpTheta {
        probs: &raw / total,
        raw,
        stderr,
    })
}

/// Result of the max-condition rejection sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum RejectionOutcome {
    /// A draw with `sample[label] = max(sample)`, and how many attempts
    /// it took.
    Accepted {
        sample: DVector<f64>,
        attempts: usize,
    },
    /// The attempt cap or the wall-clock guard fired first.
    Failed { attempts: usize, elapsed: Duration },
}

impl RejectionOutcome {
    pub fn is_failure(&self) -> bool {
        matches!(self, RejectionOutcome::Failed { .. })
    }
}

/// Draw `Y ~ MVN(eta, I)` until component `label` is the maximum. The
/// wall-clock guard is checked every 256 attempts, so a zero timeout
/// fails before the first draw.
pub fn mnp_sample_aux_rejection(
    eta: &Eta,
    label: usize,
    config: &MnpConfig,
    stream: RngStream,
) -> Result<RejectionOutcome> {
    config.validate()?;
    let k = eta.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "auxiliary draw needs K >= 2, got K = {k}"
        )));
    }
    if label >= k {
        return Err(Error::invalid(format!(
            "label {label} out of range for K = {k}"
        )));
    }

    let start = Instant::now();
    let mut rng = stream.rng();
    let mut sample = DVector::zeros(k);
    let mut attempts = 0usize;
    while attempts < config.max_attempts {
        if attempts.is_multiple_of(256) && start.elapsed() >= config.timeout {
            return Ok(RejectionOutcome::Failed {
                attempts,
                elapsed: start.elapsed(),
            });
        }
        attempts += 1;
        for i in 0..k {
            sample[i] = eta[i] + rng.sample::<f64, _>(StandardNormal);
        }
        let accepted = (0..k).all(|i| i == label || sample[i] < sample[label]);
        if accepted {
            return Ok(RejectionOutcome::Accepted { sample, attempts });
        }
    }
    Ok(RejectionOutcome::Failed {
        attempts,
        elapsed: start.elapsed(),
    })
}

/// One timing row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    /// `theta`, `aux`, or `aux_adversarial`.
    pub task: &'static str,
    /// `do` or `mnp`.
    pub method: &'static str,
    /// Total wall seconds across all repetitions.
    pub seconds: f64,
    /// Rejection-sampler failures observed while timing.
    pub failures: usize,
}

/// The full comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub words_per_doc: usize,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "words/doc = {}, repetitions = {}",
            self.words_per_doc, self.repetitions
        )
        .unwrap();
        writeln!(
            out,
            "{:>4} {:<16} {:<6} {:>12} {:>9}",
            "K", "task", "method", "seconds", "failures"
        )
        .unwrap();
        for row in &self.rows {
            writeln!(
                out,
                "{:>4} {:<16} {:<6} {:>12.6} {:>9}",
                row.k, row.task, row.method, row.seconds, row.failures
            )
            .unwrap();
        }
        out
    }

    /// CSV `K,task,method,seconds,failures`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "K,task,method,seconds,failures").map_err(|e| Error::io(path, e))?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.k, row.task, row.method, row.seconds, row.failures
            )
            .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn find(&self, k: usize, task: &str, method: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.task == task && r.method == method)
    }
}

/// Per-document inputs for one benchmark repetition: a score vector with
/// standard-normal entries, labels drawn from its orthant proportions
/// (steady-state-like), and the adversarial label (the smallest score).
struct BenchCase {
    eta: Eta,
    labels: Vec<usize>,
    adversarial: usize,
}

fn bench_cases(
    k: usize,
    words_per_doc: usize,
    repetitions: usize,
    stream: RngStream,
) -> Result<Vec<BenchCase>> {
    (0..repetitions)
        .map(|rep| {
            let mut rng = stream.child(rep as u64).rng();
            let eta = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let theta = do_theta(&eta)?.probs;
            let weights: Vec<f64> = theta.iter().copied().collect();
            let labels = (0..words_per_doc)
                .map(|_| sample_categorical(&weights, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let adversarial = eta.imin();
            Ok(BenchCase {
                eta,
                labels,
                adversarial,
            })
        })
        .collect()
}

/// Time one-document workloads for both methods at each topic count:
/// the proportion computation (`theta`), auxiliary sampling for a whole
/// document (`aux`), and the rejection sampler against its worst label
/// (`aux_adversarial`, where the orthant sampler has no counterpart —
/// its cost is label-independent). Timing loops are single-threaded and
/// exclude input generation.
pub fn bench_compare(
    k_list: &[usize],
    words_per_doc: usize,
    repetitions: usize,
    config: &MnpConfig,
    stream: RngStream,
) -> Result<BenchTable> {
    if k_list.is_empty() {
        return Err(Error::invalid("empty K list"));
    }
    if words_per_doc == 0 || repetitions == 0 {
        return Err(Error::invalid(
            "need words_per_doc >= 1 and repetitions >= 1",
        ));
    }
    config.validate()?;

    let mut rows = Vec::new();
    for (ki, &k) in k_list.iter().enumerate() {
        let case_stream = stream.child(ki as u64);
        let cases = bench_cases(k, words_per_doc, repetitions, case_stream.child(0))?;

        let t0 = Instant::now();
        for case in &cases {
            std::hint::black_box(do_theta(&case.eta)?);
        }
        rows.push(BenchRow {
            k,
            task: "theta",
            method: "do",
            seconds: t0.elapsed().as_secs_f64(),
            failures: 0,
        });

        let mnp_stream = case_stream.child(1);
        let t0 = Instant::now();
        for (rep, case) in cases.iter().enumerate() {
            std::hint::black_box(mnp_theta(&case.eta, config, mnp_stream.child(rep as u64))?);
        }
        rows.push(BenchRow {
            k,
            task: "theta",
            method: "mnp",
            seconds: t0.elapsed().as_secs_f64(),
            failures: 0,
        });

        let aux_stream = case_stream.child(2);
        let t0 = Instant::now();
        for (rep, case) in cases.iter().enumerate() {
            std::hint::black_box(sample_aux(
                &case.eta,
                &case.labels,
                aux_stream.child(rep as u64),
            ));
        }
        rows.push(BenchRow {
            k,
            task: "aux",
            method: "do",
            seconds: t0.elapsed().as_secs_f64(),
            failures: 0,
        });

        let rej_stream = case_stream.child(3);
        let mut failures = 0usize;
        let t0 = Instant::now();
        for (rep, case) in cases.iter().enumerate() {
            let word_stream = rej_stream.child(rep as u64);
            for (w, &label) in case.labels.iter().enumerate() {
                let outcome = mnp_sample_aux_rejection(
                    &case.eta,
                    label,
                    config,
                    word_stream.child(w as u64),
                )?;
                failures += outcome.is_failure() as usize;
                std::hint::black_box(outcome);
            }
        }
        rows.push(BenchRow {
            k,
            task: "aux",
            method: "mnp",
            seconds: t0.elapsed().as_secs_f64(),
            failures,
        });

        let adv_stream = case_stream.child(4);
        let mut failures = 0usize;
        let t0 = Instant::now();
        for (rep, case) in cases.iter().enumerate() {
            let word_stream = adv_stream.child(rep as u64);
            for w in 0..words_per_doc {
                let outcome = mnp_sample_aux_rejection(
                    &case.eta,
                    case.adversarial,
                    config,
                    word_stream.child(w as u64),
                )?;
                failures += outcome.is_failure() as usize;
                std::hint::black_box(outcome);
            }
        }
        rows.push(BenchRow {
            k,
            task: "aux_adversarial",
            method: "mnp",
            seconds: t0.elapsed().as_secs_f64(),
            failures,
        });
    }
    Ok(BenchTable {
        words_per_doc,
        repetitions,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eta_from(values: &[f64]) -> Eta {
        DVector::from_row_slice(values)
    }

    fn fast_config(mc: usize) -> MnpConfig {
        MnpConfig {
            mc_samples: mc,
            ..MnpConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(fast_config(99).validate().is_err());
        assert!(fast_config(100).validate().is_ok());
        let bad = MnpConfig {
            max_attempts: 0,
            ..MnpConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_eta_is_uniform_within_error() {
        let theta = mnp_theta(
            &DVector::zeros(4),
            &fast_config(20_000),
            RngStream::new(50, 0),
        )
        .unwrap();
        for i in 0..4 {
            assert!(
                (theta.raw[i] - 0.25).abs() < 3.0 * theta.stderr[i].max(1e-4),
                "component {i}: {} +- {}",
                theta.raw[i],
                theta.stderr[i]
            );
        }
        assert!((theta.probs.sum() - 1.0).abs() < 1e-12);
    }

    /// For K=2 the relaxed probability has the closed form
    /// `E[Phi(v + c)] = Phi(c / sqrt(2))`.
    #[test]
    fn two_topic_closed_form() {
        let theta = mnp_theta(
            &eta_from(&[1.0, 0.0]),
            &fast_config(200_000),
            RngStream::new(51, 0),
        )
        .unwrap();
        let exact = std_normal_cdf(1.0 / std::f64::consts::SQRT_2);
        assert!(
            (theta.raw[0] - exact).abs() < 3.0 * theta.stderr[0],
            "{} vs {exact} (stderr {})",
            theta.raw[0],
            theta.stderr[0]
        );
    }

    /// The estimator depends on eta only through differences, so a
    /// constant shift changes nothing. With a shared stream the only
    /// residual is rounding in `v + eta_i - eta_j` (last-ulp), far below
    /// Monte Carlo error.
    #[test]
    fn shift_invariance_for_matched_streams() {
        let s = RngStream::new(52, 0);
        let config = fast_config(5_000);
        let base = mnp_theta(&eta_from(&[0.3, -0.7, 1.1]), &config, s).unwrap();
        let shifted = mnp_theta(&eta_from(&[10.3, 9.3, 11.1]), &config, s).unwrap();
        assert!((base.probs - shifted.probs).amax() < 1e-12);
        assert!((base.raw - shifted.raw).amax() < 1e-12);
    }

    /// Standard errors follow the 1/sqrt(S) law: quadrupling the sample
    /// count halves them (within sampling noise of the estimate itself).
    #[test]
    fn stderr_scales_as_inverse_sqrt_samples() {
        let eta = eta_from(&[0.5, -0.5, 0.0]);
        let small = mnp_theta(&eta, &fast_config(4_000), RngStream::new(53, 0)).unwrap();
        let large = mnp_theta(&eta, &fast_config(16_000), RngStream::new(53, 1)).unwrap();
        for i in 0..3 {
            let ratio = small.stderr[i] / large.stderr[i];
            assert!((1.6..=2.4).contains(&ratio), "component {i}: ratio {ratio}");
        }
    }

    #[test]
    fn rejection_respects_max_condition() {
        let eta = eta_from(&[0.5, -0.5, 0.2]);
        for label in 0..3 {
            match mnp_sample_aux_rejection(
                &eta,
                label,
                &MnpConfig::default(),
                RngStream::new(54, label as u64),
            )
            .unwrap()
            {
                RejectionOutcome::Accepted { sample, attempts } => {
                    assert!(attempts >= 1);
                    assert_eq!(sample.imax(), label);
                }
                RejectionOutcome::Failed { .. } => panic!("easy case failed"),
            }
        }
    }

    /// With max_attempts = 1 the acceptance frequency is the acceptance
    /// probability, which must match the Monte Carlo choice probability:
    /// both are P(component `label` is the maximum).
    #[test]
    fn acceptance_rate_matches_choice_probability() {
        let eta = eta_from(&[0.8, -0.4, 0.1]);
        let theta = mnp_theta(&eta, &fast_config(200_000), RngStream::new(55, 0)).unwrap();
        let single = MnpConfig {
            max_attempts: 1,
            ..MnpConfig::default()
        };
        let trials = 100_000;
        for label in 0..3 {
            let stream = RngStream::new(55, 1 + label as u64);
            let accepted = (0..trials)
                .filter(|&t| {
                    !mnp_sample_aux_rejection(&eta, label, &single, stream.child(t))
                        .unwrap()
                        .is_failure()
                })
                .count();
            let rate = accepted as f64 / trials as f64;
            let p = theta.raw[label];
            let sd = (p * (1.0 - p) / trials as f64).sqrt() + theta.stderr[label];
            assert!(
                (rate - p).abs() < 4.0 * sd,
                "label {label}: rate {rate} vs p {p} (sd {sd})"
            );
        }
    }

    #[test]
    fn symmetric_two_topic_acceptance_is_half() {
        let single = MnpConfig {
            max_attempts: 1,
            ..MnpConfig::default()
        };
        let trials = 40_000;
        let stream = RngStream::new(56, 0);
        let accepted = (0..trials)
            .filter(|&t| {
                !mnp_sample_aux_rejection(&eta_from(&[0.0, 0.0]), 0, &single, stream.child(t))
                    .unwrap()
                    .is_failure()
            })
            .count();
        let rate = accepted as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.01, "{rate}");
    }

    /// The headline failure mode: at K = 40 with the label forced to the
    /// smallest score, the max condition is essentially never satisfied
    /// within a 10^4-attempt cap.
    #[test]
    fn adversarial_high_k_rejection_fails() {
        let k = 40;
        let mut rng = RngStream::new(57, 0).rng();
        let eta = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let label = eta.imin();
        let config = MnpConfig {
            max_attempts: 10_000,
            ..MnpConfig::default()
        };
        let trials = 20usize;
        let stream = RngStream::new(57, 1);
        let failures = (0..trials)
            .filter(|&t| {
                mnp_sample_aux_rejection(&eta, label, &config, stream.child(t as u64))
                    .unwrap()
                    .is_failure()
            })
            .count();
        assert!(
            failures * 2 > trials,
            "only {failures}/{trials} runs failed"
        );
    }

    #[test]
    fn zero_timeout_fails_immediately() {
        let config = MnpConfig {
            timeout: Duration::ZERO,
            ..MnpConfig::default()
        };
        let outcome =
            mnp_sample_aux_rejection(&eta_from(&[0.0, 0.0]), 0, &config, RngStream::new(58, 0))
                .unwrap();
        match outcome {
            RejectionOutcome::Failed { attempts, .. } => assert_eq!(attempts, 0),
            other => panic!("expected immediate failure, got {other:?}"),
        }
    }

    #[test]
    fn bench_table_has_expected_rows() {
        let config = MnpConfig {
            mc_samples: 100,
            max_attempts: 100,
            ..MnpConfig::default()
        };
        let table = bench_compare(&[2, 3], 5, 2, &config, RngStream::new(59, 0)).unwrap();
        assert_eq!(table.rows.len(), 10);
        for &k in &[2usize, 3] {
            assert!(table.find(k, "theta", "do").is_some());
            assert!(table.find(k, "theta", "mnp").is_some());
            assert!(table.find(k, "aux", "do").is_some());
            assert!(table.find(k, "aux", "mnp").is_some());
            assert!(table.find(k, "aux_adversarial", "mnp").is_some());
        }
        assert!(table.rows.iter().all(|r| r.seconds >= 0.0));
        let text = table.to_text();
        assert!(text.contains("theta") && text.contains("mnp"));
    }

    #[test]
    fn bench_csv_layout() {
        let config = MnpConfig {
            mc_samples: 100,
            max_attempts: 50,
            ..MnpConfig::default()
        };
        let table = bench_compare(&[2], 3, 1, &config, RngStream::new(60, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        table.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("K,task,method,seconds,failures"));
        assert_eq!(lines.count(), 5);
    }
}
