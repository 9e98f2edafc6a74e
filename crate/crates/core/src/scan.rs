//! Parameter sweeps computed from the apparatus alone.

use std::f64::consts::PI;

use crate::analytic::{enumerate_outcomes, OutcomeDistribution};
use crate::apparatus::{Apparatus, Stage};
use crate::device::{DeviceKind, DeviceOp};
use crate::error::{Error, Result};

/// Distribution at `phi = 2 pi k / points`, `k = 0..points`.
///
/// `stage` is a 1-based ordering time. A phase device already at that stage
/// is swept; otherwise a two-mode phase on modes (0, 1) is inserted there.
pub fn phase_scan(a: &Apparatus, stage: usize, points: usize) -> Result<Vec<(f64, OutcomeDistribution)>> {
    if points < 2 {
        return Err(Error::Domain(format!("a scan needs at least 2 points, got {points}")));
    }
    if stage == 0 || stage > a.stages().len() + 1 {
        return Err(Error::Domain(format!(
            "stage {stage} outside 1..={} for this apparatus",
            a.stages().len() + 1
        )));
    }
    let index = stage - 1;
    let existing = match a.stages().get(index) {
        Some(Stage::Device(op)) if matches!(op.kind(), DeviceKind::Phase { .. }) => Some(op.target_modes().to_vec()),
        _ => None,
    };
    if existing.is_none() && a.n_modes() < 2 {
        return Err(Error::Domain("inserting a phase stage needs at least two modes".into()));
    }
    (0..points)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / points as f64;
            let swept = match &existing {
                Some(targets) if targets.len() == 1 => {
                    a.with_stage_replaced(index, Stage::Device(DeviceOp::phase_shift(targets[0], phi)?))?
                }
                Some(targets) => a.with_stage_replaced(index, Stage::Device(DeviceOp::phase(phi)?.on(targets)?))?,
                None => a.with_stage_inserted(index, Stage::Device(DeviceOp::phase(phi)?))?,
            };
            Ok((phi, enumerate_outcomes(&swept)?.0))
        })
        .collect()
}

/// Distribution as both splitters of an interferometer take transmission
/// `t = k / (points - 1)`, optionally with a detector watching the vertical arm.
pub fn splitter_sweep(points: usize, which_way: bool) -> Result<Vec<(f64, OutcomeDistribution)>> {
    use crate::apparatus::{Detector, DetectorBank};
    use crate::state::ProbabilityState;

    if points < 2 {
        return Err(Error::Domain(format!("a sweep needs at least 2 points, got {points}")));
    }
    (0..points)
        .map(|k| {
            let t = k as f64 / (points - 1) as f64;
            let mut stages = vec![Stage::Device(DeviceOp::beam_splitter(t)?)];
            if which_way {
                stages.push(Stage::Detect(DetectorBank::new(vec![Detector::new("W", [1])])?));
            }
            stages.push(Stage::Device(DeviceOp::reflector()));
            stages.push(Stage::Device(DeviceOp::beam_splitter(t)?));
            stages.push(Stage::Detect(DetectorBank::new(vec![
                Detector::new("D1", [1]),
                Detector::new("D2", [0]),
            ])?));
            let a = Apparatus::new(2, ProbabilityState::basis(2, 0)?, stages)?;
            Ok((t, enumerate_outcomes(&a)?.0))
        })
        .collect()
}
