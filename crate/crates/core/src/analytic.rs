//! Exact propagation of probability states through an apparatus.
//!
//! The source is carried as a single unnormalized branch. Every detector
//! bank splits off one leaf per detector and continues with the residual
//! amplitudes (detected modes zeroed, no renormalization), so a leaf's
//! probability is simply its squared norm.

use std::collections::BTreeMap;

use crate::apparatus::{Apparatus, Stage, UNDETECTED};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::state::{norm_sqr, Amplitude, BranchAmplitude, Observable, ProbabilityState, TensorSplit};

/// Residual branches lighter than this are no longer propagated.
pub const PRUNE_WEIGHT: f64 = 1e-15;

/// An UNDETECTED mass at or below this is reported as absent.
pub const UNDETECTED_EPS: f64 = 1e-12;

const WEIGHT_SLACK: f64 = 1e-9;

/// Exact probability per outcome label, sorted by label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeDistribution {
    entries: BTreeMap<String, f64>,
}

impl OutcomeDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self {
            entries: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn add(&mut self, label: &str, p: f64) {
        *self.entries.entry(label.to_owned()).or_insert(0.0) += p;
    }

    /// Probability of `label`, zero when absent.
    pub fn get(&self, label: &str) -> f64 {
        self.entries.get(label).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.contains_key(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Edge {
    Source,
    /// The particle passed the bank at this stage undetected.
    Passed { stage: usize },
    Detected { label: String },
    Undetected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchNode {
    pub parent: Option<usize>,
    pub ordering_time: u64,
    pub edge: Edge,
    pub amplitude: BranchAmplitude,
    /// Probability of the terminal outcome, set on leaves only.
    pub leaf_probability: Option<f64>,
    /// Norm lost at device stages between the parent and this node.
    pub device_loss: f64,
    pub pruned: bool,
}

impl BranchNode {
    pub fn is_leaf(&self) -> bool {
        self.leaf_probability.is_some()
    }
}

/// Detection history of the source: one residual spine with detector leaves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchTree {
    pub nodes: Vec<BranchNode>,
}

impl BranchTree {
    pub fn leaves(&self) -> impl Iterator<Item = &BranchNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_total(&self) -> f64 {
        self.leaves().filter_map(|n| n.leaf_probability).sum()
    }

    /// Node indices from the root down to `node`.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// True when any device stage changed the branch norm.
    pub fn has_device_loss(&self) -> bool {
        self.nodes.iter().any(|n| n.device_loss.abs() > PRUNE_WEIGHT)
    }

    fn push(&mut self, node: BranchNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }
}

/// Linear propagation: `out[j] = sum_i U[i][j] * psi[i]`.
pub fn apply(op: &Matrix, s: &BranchAmplitude) -> Result<BranchAmplitude> {
    Ok(BranchAmplitude::new(op.apply(&s.amplitudes)?))
}

/// Born probabilities `|psi_i|^2` per mode.
pub fn born(s: &ProbabilityState) -> Vec<f64> {
    s.amplitudes().iter().map(|z| z.norm_sqr()).collect()
}

pub fn expectation(obs: &Observable, s: &ProbabilityState) -> Result<f64> {
    if obs.values.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: obs.values.len(),
        });
    }
    Ok(obs.values.iter().zip(born(s)).map(|(r, p)| r * p).sum())
}

/// Branch enumeration over every detector event of the apparatus.
pub fn enumerate_outcomes(a: &Apparatus) -> Result<(OutcomeDistribution, BranchTree)> {
    let mut dist = OutcomeDistribution::new();
    for label in a.detector_labels() {
        dist.add(&label, 0.0);
    }

    let mut tree = BranchTree::default();
    let mut branch = BranchAmplitude::from(a.source());
    let mut spine = tree.push(BranchNode {
        parent: None,
        ordering_time: 0,
        edge: Edge::Source,
        amplitude: branch.clone(),
        leaf_probability: None,
        device_loss: 0.0,
        pruned: false,
    });
    let mut pending_loss = 0.0;
    let mut total_loss = 0.0;
    let mut pruned = false;

    let operators = a.embedded_operators();
    for (index, stage) in a.stages().iter().enumerate() {
        let time = Apparatus::ordering_time(index);
        match stage {
            Stage::Device(_) => {
                if pruned {
                    continue;
                }
                let op = operators[index].as_ref().expect("device stage");
                let next = apply(op, &branch)?;
                if next.weight > branch.weight + WEIGHT_SLACK {
                    return Err(Error::NormIncrease {
                        stage: time as usize,
                        weight: next.weight,
                    });
                }
                pending_loss += branch.weight - next.weight;
                branch = next;
            }
            Stage::Detect(bank) => {
                if pruned {
                    continue;
                }
                let mut residual = branch.amplitudes.clone();
                for det in bank.detectors() {
                    let mut projected = vec![Amplitude::new(0.0, 0.0); branch.dim()];
                    for &m in &det.modes {
                        projected[m] = branch.amplitudes[m];
                        residual[m] = Amplitude::new(0.0, 0.0);
                    }
                    let leaf = BranchAmplitude::new(projected);
                    dist.add(&det.label, leaf.weight);
                    tree.push(BranchNode {
                        parent: Some(spine),
                        ordering_time: time,
                        edge: Edge::Detected {
                            label: det.label.clone(),
                        },
                        leaf_probability: Some(leaf.weight),
                        amplitude: leaf,
                        device_loss: pending_loss,
                        pruned: false,
                    });
                }
                branch = BranchAmplitude::new(residual);
                pruned = branch.weight < PRUNE_WEIGHT;
                spine = tree.push(BranchNode {
                    parent: Some(spine),
                    ordering_time: time,
                    edge: Edge::Passed { stage: index },
                    amplitude: branch.clone(),
                    leaf_probability: None,
                    device_loss: pending_loss,
                    pruned,
                });
                total_loss += pending_loss;
                pending_loss = 0.0;
            }
        }
    }
    total_loss += pending_loss;

    let final_bank_covers_all = matches!(
        a.stages().last(),
        Some(Stage::Detect(bank)) if bank.covered_modes().len() == a.n_modes()
    );
    let mut undetected = branch.weight + total_loss;
    if final_bank_covers_all && total_loss.abs() <= UNDETECTED_EPS {
        undetected = 0.0;
    }
    tree.push(BranchNode {
        parent: Some(spine),
        ordering_time: Apparatus::ordering_time(a.stages().len()),
        edge: Edge::Undetected,
        amplitude: branch,
        leaf_probability: Some(undetected),
        device_loss: pending_loss,
        pruned,
    });
    if undetected > UNDETECTED_EPS {
        dist.add(UNDETECTED, undetected);
    }
    Ok((dist, tree))
}

/// Born distribution of one factor after observing `outcome` on the other.
///
/// Labels of the returned distribution are the basis indices of the
/// unmeasured factor.
pub fn conditional_distribution(
    s: &ProbabilityState,
    split: &TensorSplit,
    measured_factor: usize,
    outcome: usize,
) -> Result<OutcomeDistribution> {
    let (d1, d2) = split.two_factors(s.dim())?;
    let (measured_dim, other_dim) = match measured_factor {
        0 => (d1, d2),
        1 => (d2, d1),
        _ => return Err(Error::Domain(format!("factor {measured_factor} of a two-factor split"))),
    };
    if outcome >= measured_dim {
        return Err(Error::ModeOutOfRange {
            mode: outcome,
            n_modes: measured_dim,
        });
    }
    let index = |other: usize| match measured_factor {
        0 => outcome * d2 + other,
        _ => other * d2 + outcome,
    };
    let projected: Vec<Amplitude> = (0..other_dim).map(|k| s.amplitudes()[index(k)]).collect();
    let marginal = norm_sqr(&projected);
    if marginal <= 1e-12 {
        return Err(Error::ZeroProbability(marginal));
    }
    Ok(OutcomeDistribution::from_entries(
        projected
            .iter()
            .enumerate()
            .map(|(k, z)| (k.to_string(), z.norm_sqr() / marginal)),
    ))
}

/// Product of the stage operators in stage order, for a detector-free apparatus.
pub fn composed_operator(a: &Apparatus) -> Result<Matrix> {
    if a.has_detectors() {
        return Err(Error::PathSum("an apparatus without detector stages"));
    }
    Ok(a
        .embedded_operators()
        .into_iter()
        .flatten()
        .fold(Matrix::identity(a.n_modes()), |acc, m| &acc * &m))
}

/// Each classical mode path from the source to `final_mode` with its amplitude.
///
/// Paths whose running product is exactly zero are cut early.
pub fn path_contributions(a: &Apparatus, final_mode: usize) -> Result<Vec<(Vec<usize>, Amplitude)>> {
    if a.has_detectors() {
        return Err(Error::PathSum("an apparatus without detector stages"));
    }
    let start = a
        .source()
        .basis_mode()
        .ok_or(Error::PathSum("a basis-state source"))?;
    if final_mode >= a.n_modes() {
        return Err(Error::ModeOutOfRange {
            mode: final_mode,
            n_modes: a.n_modes(),
        });
    }
    let ops: Vec<Matrix> = a.embedded_operators().into_iter().flatten().collect();
    let mut out = Vec::new();
    let mut path = vec![start];
    walk(&ops, final_mode, &mut path, Amplitude::new(1.0, 0.0), &mut out);
    Ok(out)
}

fn walk(
    ops: &[Matrix],
    final_mode: usize,
    path: &mut Vec<usize>,
    amp: Amplitude,
    out: &mut Vec<(Vec<usize>, Amplitude)>,
) {
    let depth = path.len() - 1;
    let cur = path[depth];
    if depth == ops.len() {
        if cur == final_mode {
            out.push((path.clone(), amp));
        }
        return;
    }
    let op = &ops[depth];
    for next in 0..op.dim() {
        let u = op[(cur, next)];
        if u.re == 0.0 && u.im == 0.0 {
            continue;
        }
        path.push(next);
        walk(ops, final_mode, path, amp * u, out);
        path.pop();
    }
}

/// Sum over all classical paths of the product of per-stage amplitudes.
pub fn path_sum_amplitude(a: &Apparatus, final_mode: usize) -> Result<Amplitude> {
    Ok(path_contributions(a, final_mode)?.into_iter().map(|(_, z)| z).sum())
}
