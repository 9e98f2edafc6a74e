use std::fmt::Write as _;

use crate::apparatus::Stage;
use crate::device::{DeviceKind, DeviceOp, HALF_SILVERED};
use crate::format::float17;
use crate::state::Amplitude;

use super::ExperimentDoc;

fn complex(z: Amplitude) -> String {
    format!("({},{})", float17(z.re), float17(z.im))
}

fn modes(op: &DeviceOp) -> String {
    op.target_modes()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn device_line(op: &DeviceOp) -> String {
    match op.kind() {
        DeviceKind::Cross => format!("X {}", modes(op)),
        DeviceKind::Reflector => format!("R {}", modes(op)),
        DeviceKind::BeamSplitter { t } if t == HALF_SILVERED => format!("H {}", modes(op)),
        DeviceKind::BeamSplitter { t } => format!("H {} t={}", modes(op), float17(t)),
        DeviceKind::Phase { phi } => format!("PHASE {} phi={}", modes(op), float17(phi)),
        DeviceKind::Custom => {
            let entries: Vec<String> = op.matrix().entries().iter().map(|z| complex(*z)).collect();
            format!("OP {} {}", modes(op), entries.join(" "))
        }
    }
}

/// Canonical text: single spaces, 17 significant digits, `\n` line ends.
pub fn serialize(doc: &ExperimentDoc) -> String {
    let a = &doc.apparatus;
    let mut out = String::new();
    writeln!(out, "experiment {}", doc.name).unwrap();
    writeln!(out, "modes {}", a.n_modes()).unwrap();
    match a.source().basis_mode() {
        Some(m) => writeln!(out, "source mode {m}").unwrap(),
        None => {
            let amps: Vec<String> = a.source().amplitudes().iter().map(|z| complex(*z)).collect();
            writeln!(out, "source amps {}", amps.join(" ")).unwrap();
        }
    }
    for stage in a.stages() {
        match stage {
            Stage::Device(op) => writeln!(out, "{}", device_line(op)).unwrap(),
            Stage::Detect(bank) => {
                let entries: Vec<String> = bank
                    .detectors()
                    .iter()
                    .map(|d| {
                        let m: Vec<String> = d.modes.iter().map(usize::to_string).collect();
                        format!("{}@{}", d.label, m.join(","))
                    })
                    .collect();
                writeln!(out, "DETECT {}", entries.join(" ")).unwrap();
            }
        }
    }
    out
}
