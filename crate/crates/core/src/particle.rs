//! Trial-by-trial simulation where every run ends in one definite outcome.
//!
//! A trial carries the full normalized state between detector banks and only
//! samples when a bank is reached. Each sampling decision consumes at most one
//! uniform variate, produced by [`variate`] from `(seed, trial, stage)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{enumerate_outcomes, OutcomeDistribution};
use crate::apparatus::{Apparatus, Stage, UNDETECTED};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::state::{norm_sqr, Amplitude};
use crate::stats::{chi_square, EXCLUDE_BELOW};

/// Outcomes at least this likely are taken without consuming a variate.
pub const FORCED_THRESHOLD: f64 = 1.0 - 1e-12;

const DEGENERATE: f64 = 1e-12;

/// Uniform variate in `[0, 1)` for one sampling decision.
///
/// ChaCha8 keyed by `seed`, with `trial` as the stream id and the 0-based
/// `stage` index selecting the 64-bit word position. Any variate can be
/// computed directly without generating the ones before it.
pub fn variate(seed: u64, trial: u64, stage: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos(u128::from(stage) * 2);
    rng.gen::<f64>()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialEvent {
    DetectorFired(String),
    /// 0-based ordinal of the bank among the apparatus' banks.
    PassedBank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// `(ordering_time, event)` in the order they happened.
    pub events: Vec<(u64, TrialEvent)>,
    pub terminal_outcome: String,
}

impl TrialRecord {
    pub fn detector_firings(&self) -> usize {
        self.events
            .iter()
            .filter(|(_, e)| matches!(e, TrialEvent::DetectorFired(_)))
            .count()
    }
}

fn renormalize(amps: &mut [Amplitude], weight: f64) {
    let s = weight.sqrt();
    for z in amps.iter_mut() {
        *z /= s;
    }
}

/// Runs one trial. Identical `(apparatus, seed, trial_index)` give identical records.
pub fn sample_trial(a: &Apparatus, seed: u64, trial_index: u64) -> Result<TrialRecord> {
    run_trial(a, &a.embedded_operators(), seed, trial_index)
}

fn run_trial(a: &Apparatus, operators: &[Option<Matrix>], seed: u64, trial_index: u64) -> Result<TrialRecord> {
    let mut state: Vec<Amplitude> = a.source().amplitudes().to_vec();
    let mut events = Vec::new();
    let mut bank_ordinal = 0;

    for (index, stage) in a.stages().iter().enumerate() {
        let time = Apparatus::ordering_time(index);
        match stage {
            Stage::Device(_) => {
                let op = operators[index].as_ref().expect("device stage");
                let mut next = op.apply(&state)?;
                let kept = norm_sqr(&next);
                if kept > 1.0 + 1e-9 {
                    return Err(Error::NormIncrease {
                        stage: time as usize,
                        weight: kept,
                    });
                }
                // a norm-losing device absorbs the particle with probability 1 - kept
                let lost = 1.0 - kept;
                if lost >= FORCED_THRESHOLD
                    || (lost > DEGENERATE && variate(seed, trial_index, index as u64) < lost)
                {
                    return Ok(TrialRecord {
                        trial_index,
                        events,
                        terminal_outcome: UNDETECTED.to_owned(),
                    });
                }
                if lost > DEGENERATE {
                    renormalize(&mut next, kept);
                }
                state = next;
            }
            Stage::Detect(bank) => {
                let probs: Vec<f64> = bank
                    .detectors()
                    .iter()
                    .map(|d| d.modes.iter().map(|&m| state[m].norm_sqr()).sum())
                    .collect();
                let mut residual = state.clone();
                for m in bank.covered_modes() {
                    residual[m] = Amplitude::new(0.0, 0.0);
                }
                let cont = norm_sqr(&residual);

                let choice = if let Some(k) = probs.iter().position(|&p| p >= FORCED_THRESHOLD) {
                    Some(k)
                } else if cont >= FORCED_THRESHOLD {
                    None
                } else {
                    let u = variate(seed, trial_index, index as u64);
                    let mut cum = 0.0;
                    let mut picked = None;
                    for (k, p) in probs.iter().enumerate() {
                        cum += p;
                        if u < cum {
                            picked = Some(k);
                            break;
                        }
                    }
                    if picked.is_none() && cont < DEGENERATE {
                        picked = probs
                            .iter()
                            .enumerate()
                            .max_by(|x, y| x.1.total_cmp(y.1))
                            .map(|(k, _)| k);
                    }
                    picked
                };

                match choice {
                    Some(k) => {
                        let label = bank.detectors()[k].label.clone();
                        events.push((time, TrialEvent::DetectorFired(label.clone())));
                        return Ok(TrialRecord {
                            trial_index,
                            events,
                            terminal_outcome: label,
                        });
                    }
                    None => {
                        renormalize(&mut residual, cont);
                        state = residual;
                        events.push((time, TrialEvent::PassedBank(bank_ordinal)));
                    }
                }
                bank_ordinal += 1;
            }
        }
    }

    Ok(TrialRecord {
        trial_index,
        events,
        terminal_outcome: UNDETECTED.to_owned(),
    })
}

/// Aggregated trial outcomes with the analytic prediction alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub n_trials: u64,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
    pub frequencies: BTreeMap<String, f64>,
    pub predicted: OutcomeDistribution,
    pub chi_square: f64,
    pub dof: usize,
}

impl EnsembleReport {
    /// Builds a report from raw counts.
    pub fn from_counts(
        mut counts: BTreeMap<String, u64>,
        seed: u64,
        predicted: OutcomeDistribution,
    ) -> Result<Self> {
        for label in predicted.labels() {
            counts.entry(label.to_owned()).or_insert(0);
        }
        let n_trials: u64 = counts.values().sum();
        if n_trials == 0 {
            return Err(Error::Domain("an ensemble needs at least one trial".into()));
        }
        let frequencies = counts
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64 / n_trials as f64))
            .collect();
        let expected: BTreeMap<String, f64> = predicted
            .iter()
            .filter(|(_, p)| *p > EXCLUDE_BELOW)
            .map(|(k, p)| (k.to_owned(), p))
            .collect();
        let (chi_square, dof) = chi_square(&counts, &expected, n_trials)?;
        Ok(Self {
            n_trials,
            seed,
            counts,
            frequencies,
            predicted,
            chi_square,
            dof,
        })
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn frequency(&self, label: &str) -> f64 {
        self.frequencies.get(label).copied().unwrap_or(0.0)
    }
}

pub fn run_ensemble(a: &Apparatus, n_trials: u64, seed: u64) -> Result<EnsembleReport> {
    if n_trials == 0 {
        return Err(Error::Domain("n_trials must be at least 1".into()));
    }
    let (predicted, _) = enumerate_outcomes(a)?;
    let operators = a.embedded_operators();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for trial in 0..n_trials {
        let record = run_trial(a, &operators, seed, trial)?;
        *counts.entry(record.terminal_outcome).or_insert(0) += 1;
    }
    EnsembleReport::from_counts(counts, seed, predicted)
}

/// `sum_o value(o) * frequency(o)` over the outcomes seen in the ensemble.
pub fn ensemble_expectation(report: &EnsembleReport, values: &BTreeMap<String, f64>) -> Result<f64> {
    let mut total = 0.0;
    for (label, &freq) in &report.frequencies {
        match values.get(label) {
            Some(v) => total += v * freq,
            None if report.count(label) == 0 => {}
            None => return Err(Error::MissingValue(label.clone())),
        }
    }
    Ok(total)
}
