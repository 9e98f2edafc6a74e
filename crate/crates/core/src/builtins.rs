//! The canonical experiments, built in code.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::apparatus::{Apparatus, Detector, DetectorBank, Stage};
use crate::device::{beam_splitter, reflector, HALF_SILVERED};
use crate::dsl::ExperimentDoc;
use crate::error::{Error, Result};
use crate::state::{Amplitude, ProbabilityState, TensorSplit};

pub const BUILTIN_NAMES: [&str; 4] = ["h-detectors", "mach-zehnder", "ev-bomb", "bell"];

/// Factor structure of the `bell` source: particle A (modes 0..2) x particle B.
pub fn bell_split() -> TensorSplit {
    TensorSplit::pair(2, 2)
}

fn h() -> Stage {
    Stage::Device(beam_splitter(HALF_SILVERED).expect("valid transmission"))
}

fn r() -> Stage {
    Stage::Device(reflector())
}

fn bank(entries: &[(&str, &[usize])]) -> Stage {
    let detectors = entries
        .iter()
        .map(|(label, modes)| Detector::new(*label, modes.iter().copied()))
        .collect();
    Stage::Detect(DetectorBank::new(detectors).expect("valid bank"))
}

fn doc(name: &str, n_modes: usize, source: ProbabilityState, stages: Vec<Stage>) -> ExperimentDoc {
    ExperimentDoc {
        name: name.to_owned(),
        apparatus: Apparatus::new(n_modes, source, stages).expect("valid builtin"),
    }
}

/// Half-silvered mirror and reflector feeding two detectors.
pub fn h_detectors() -> ExperimentDoc {
    let src = ProbabilityState::basis(2, 0).expect("mode 0");
    doc("h-detectors", 2, src, vec![h(), r(), bank(&[("D1", &[1]), ("D2", &[0])])])
}

/// Two half-silvered mirrors around a reflector; detector D2 always fires.
pub fn mach_zehnder() -> ExperimentDoc {
    let src = ProbabilityState::basis(2, 0).expect("mode 0");
    doc("mach-zehnder", 2, src, vec![h(), r(), h(), bank(&[("D2", &[0]), ("D1", &[1])])])
}

/// The interferometer with a third detector (the bomb) on the vertical arm.
pub fn ev_bomb() -> ExperimentDoc {
    let src = ProbabilityState::basis(2, 0).expect("mode 0");
    doc(
        "ev-bomb",
        2,
        src,
        vec![h(), bank(&[("D3", &[1])]), r(), h(), bank(&[("D2", &[0]), ("D1", &[1])])],
    )
}

/// Two particles with opposite momenta, measured on particle A.
pub fn bell() -> ExperimentDoc {
    let zero = Amplitude::new(0.0, 0.0);
    let half = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    let src = ProbabilityState::new(vec![zero, half, half, zero]).expect("normalized");
    doc("bell", 4, src, vec![bank(&[("A0", &[0, 1]), ("A1", &[2, 3])])])
}

pub fn builtin(name: &str) -> Result<ExperimentDoc> {
    match name {
        "h-detectors" => Ok(h_detectors()),
        "mach-zehnder" => Ok(mach_zehnder()),
        "ev-bomb" => Ok(ev_bomb()),
        "bell" => Ok(bell()),
        other => Err(Error::Domain(format!(
            "unknown builtin `{other}`; valid names: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
