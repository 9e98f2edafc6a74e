//! Apparatus: a source state followed by an ordered list of stages.

use std::collections::BTreeSet;

use crate::device::{embed, DeviceOp};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::state::ProbabilityState;

/// Reserved outcome label for probability never absorbed by a detector.
pub const UNDETECTED: &str = "UNDETECTED";

/// `[A-Za-z_][A-Za-z0-9_-]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detector {
    pub label: String,
    pub modes: BTreeSet<usize>,
}

impl Detector {
    pub fn new(label: impl Into<String>, modes: impl IntoIterator<Item = usize>) -> Self {
        Self {
            label: label.into(),
            modes: modes.into_iter().collect(),
        }
    }
}

/// Detectors that fire as one projective, absorptive event. Kept sorted by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorBank {
    detectors: Vec<Detector>,
}

impl DetectorBank {
    pub fn new(mut detectors: Vec<Detector>) -> Result<Self> {
        if detectors.is_empty() {
            return Err(Error::InvalidBank("a bank needs at least one detector".into()));
        }
        detectors.sort_by(|a, b| a.label.cmp(&b.label));
        for (i, d) in detectors.iter().enumerate() {
            if !is_identifier(&d.label) || d.label == UNDETECTED {
                return Err(Error::InvalidBank(format!("invalid detector label {:?}", d.label)));
            }
            if d.modes.is_empty() {
                return Err(Error::InvalidBank(format!("detector {} watches no modes", d.label)));
            }
            if i > 0 && detectors[i - 1].label == d.label {
                return Err(Error::InvalidBank(format!("duplicate detector label {}", d.label)));
            }
            for other in &detectors[..i] {
                if let Some(m) = other.modes.intersection(&d.modes).next() {
                    return Err(Error::InvalidBank(format!(
                        "detectors {} and {} share mode {m}",
                        other.label, d.label
                    )));
                }
            }
        }
        Ok(Self { detectors })
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    pub fn covered_modes(&self) -> BTreeSet<usize> {
        self.detectors.iter().flat_map(|d| d.modes.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Device(DeviceOp),
    Detect(DetectorBank),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    n_modes: usize,
    source: ProbabilityState,
    stages: Vec<Stage>,
}

impl Apparatus {
    pub fn new(n_modes: usize, source: ProbabilityState, stages: Vec<Stage>) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Domain("an apparatus needs at least one mode".into()));
        }
        if source.dim() != n_modes {
            return Err(Error::DimensionMismatch {
                expected: n_modes,
                found: source.dim(),
            });
        }
        for stage in &stages {
            check_stage(stage, n_modes)?;
        }
        Ok(Self {
            n_modes,
            source,
            stages,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn source(&self) -> &ProbabilityState {
        &self.source
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Ordering time of the stage at `index`: its 1-based position.
    pub fn ordering_time(index: usize) -> u64 {
        index as u64 + 1
    }

    pub fn with_source(&self, source: ProbabilityState) -> Result<Self> {
        Self::new(self.n_modes, source, self.stages.clone())
    }

    /// Returns a copy with `stage` inserted so it sits at 0-based `index`.
    pub fn with_stage_inserted(&self, index: usize, stage: Stage) -> Result<Self> {
        if index > self.stages.len() {
            return Err(Error::Domain(format!(
                "stage index {index} beyond {} stages",
                self.stages.len()
            )));
        }
        let mut stages = self.stages.clone();
        stages.insert(index, stage);
        Self::new(self.n_modes, self.source.clone(), stages)
    }

    /// Returns a copy with the stage at 0-based `index` replaced.
    pub fn with_stage_replaced(&self, index: usize, stage: Stage) -> Result<Self> {
        if index >= self.stages.len() {
            return Err(Error::Domain(format!("no stage at index {index}")));
        }
        let mut stages = self.stages.clone();
        stages[index] = stage;
        Self::new(self.n_modes, self.source.clone(), stages)
    }

    /// Every detector label, sorted and deduplicated.
    pub fn detector_labels(&self) -> Vec<String> {
        let labels: BTreeSet<&str> = self
            .stages
            .iter()
            .filter_map(|s| match s {
                Stage::Detect(bank) => Some(bank.detectors()),
                Stage::Device(_) => None,
            })
            .flatten()
            .map(|d| d.label.as_str())
            .collect();
        labels.into_iter().map(str::to_owned).collect()
    }

    pub fn has_detectors(&self) -> bool {
        self.stages.iter().any(|s| matches!(s, Stage::Detect(_)))
    }

    /// Full-space operators for every device stage, `None` at detector stages.
    pub fn embedded_operators(&self) -> Vec<Option<Matrix>> {
        self.stages
            .iter()
            .map(|s| match s {
                Stage::Device(op) => Some(embed(op, self.n_modes).expect("validated apparatus")),
                Stage::Detect(_) => None,
            })
            .collect()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.stages
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Stage::Device(op) => op
                    .validation_warning()
                    .map(|w| format!("stage {}: {w}", Self::ordering_time(i))),
                Stage::Detect(_) => None,
            })
            .collect()
    }
}

fn check_stage(stage: &Stage, n_modes: usize) -> Result<()> {
    match stage {
        Stage::Device(op) => embed(op, n_modes).map(|_| ()),
        Stage::Detect(bank) => match bank.covered_modes().into_iter().find(|&m| m >= n_modes) {
            Some(mode) => Err(Error::ModeOutOfRange { mode, n_modes }),
            None => Ok(()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{beam_splitter, reflector, HALF_SILVERED};

    #[test]
    fn identifiers() {
        assert!(is_identifier("D1"));
        assert!(is_identifier("_a-b_2"));
        assert!(!is_identifier("1D"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a b"));
        assert!(!is_identifier("a@0"));
    }

    #[test]
    fn bank_is_sorted_and_validated() {
        let bank = DetectorBank::new(vec![Detector::new("B", [1]), Detector::new("A", [0])]).unwrap();
        let labels: Vec<_> = bank.detectors().iter().map(|d| d.label.as_str()).collect();
        assert_eq!(labels, ["A", "B"]);

        assert!(DetectorBank::new(vec![]).is_err());
        assert!(DetectorBank::new(vec![Detector::new("A", [0]), Detector::new("A", [1])]).is_err());
        assert!(DetectorBank::new(vec![Detector::new("A", [0, 1]), Detector::new("B", [1])]).is_err());
        assert!(DetectorBank::new(vec![Detector::new(UNDETECTED, [0])]).is_err());
        assert!(DetectorBank::new(vec![Detector::new("A", [])]).is_err());
    }

    #[test]
    fn apparatus_validation() {
        let src = ProbabilityState::basis(2, 0).unwrap();
        let ok = Apparatus::new(
            2,
            src.clone(),
            vec![Stage::Device(beam_splitter(HALF_SILVERED).unwrap())],
        );
        assert!(ok.is_ok());
        let bad_mode = Apparatus::new(2, src.clone(), vec![Stage::Device(reflector().on(&[1, 2]).unwrap())]);
        assert!(matches!(bad_mode, Err(Error::ModeOutOfRange { mode: 2, .. })));
        let bad_bank = Apparatus::new(
            2,
            src.clone(),
            vec![Stage::Detect(DetectorBank::new(vec![Detector::new("D", [5])]).unwrap())],
        );
        assert!(bad_bank.is_err());
        assert!(Apparatus::new(3, src.clone(), vec![]).is_err());
        assert!(Apparatus::new(0, src, vec![]).is_err());
    }

    #[test]
    fn stage_editing() {
        let src = ProbabilityState::basis(2, 0).unwrap();
        let a = Apparatus::new(2, src, vec![Stage::Device(reflector())]).unwrap();
        let b = a.with_stage_inserted(0, Stage::Device(reflector())).unwrap();
        assert_eq!(b.stages().len(), 2);
        assert!(a.with_stage_inserted(2, Stage::Device(reflector())).is_err());
        assert!(a.with_stage_replaced(1, Stage::Device(reflector())).is_err());
        assert_eq!(Apparatus::ordering_time(0), 1);
    }
}
