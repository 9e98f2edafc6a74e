//! Optical devices as linear maps on a few modes.
//!
//! Mode 0 is horizontal motion, mode 1 is vertical motion. A device built by
//! one of the constructors acts on modes `(0, 1)` until retargeted with
//! [`DeviceOp::on`].

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::state::Amplitude;

/// Custom operators further than this from unitary produce a warning.
pub const UNITARITY_WARN_THRESHOLD: f64 = 1e-6;

/// Transmission amplitude of a half-silvered mirror.
pub const HALF_SILVERED: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceKind {
    Cross,
    Reflector,
    BeamSplitter { t: f64 },
    Phase { phi: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceOp {
    kind: DeviceKind,
    matrix: Matrix,
    target_modes: Vec<usize>,
}

fn c(re: f64, im: f64) -> Amplitude {
    Amplitude::new(re, im)
}

impl DeviceOp {
    fn two_mode(kind: DeviceKind, entries: [Amplitude; 4]) -> Self {
        Self {
            kind,
            matrix: Matrix::from_rows(2, entries.to_vec()).expect("finite 2x2 entries"),
            target_modes: vec![0, 1],
        }
    }

    /// The identity on two crossing lines.
    pub fn cross() -> Self {
        Self::two_mode(DeviceKind::Cross, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    /// Mirror pair swapping the two lines with a factor `i`.
    pub fn reflector() -> Self {
        Self::two_mode(DeviceKind::Reflector, [c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    /// Beam splitter `[[t, i r], [i r, t]]` with `r = sqrt(1 - t^2)`.
    pub fn beam_splitter(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("transmission {t} outside [0, 1]")));
        }
        let r = (1.0 - t * t).sqrt();
        Ok(Self::two_mode(
            DeviceKind::BeamSplitter { t },
            [c(t, 0.0), c(0.0, r), c(0.0, r), c(t, 0.0)],
        ))
    }

    /// `diag(1, e^{i phi})` on two modes.
    pub fn phase(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::Domain(format!("phase {phi} is not finite")));
        }
        Ok(Self::two_mode(
            DeviceKind::Phase { phi },
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Amplitude::from_polar(1.0, phi)],
        ))
    }

    /// `e^{i phi}` on the single mode `mode`.
    pub fn phase_shift(mode: usize, phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::Domain(format!("phase {phi} is not finite")));
        }
        Ok(Self {
            kind: DeviceKind::Phase { phi },
            matrix: Matrix::from_rows(1, vec![Amplitude::from_polar(1.0, phi)])?,
            target_modes: vec![mode],
        })
    }

    /// Arbitrary linear map; it need not be unitary or invertible.
    pub fn custom(matrix: Matrix, target_modes: Vec<usize>) -> Result<Self> {
        if matrix.dim() != target_modes.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.dim(),
                found: target_modes.len(),
            });
        }
        check_distinct(&target_modes)?;
        Ok(Self {
            kind: DeviceKind::Custom,
            matrix,
            target_modes,
        })
    }

    /// Places the device on the given modes.
    pub fn on(mut self, target_modes: &[usize]) -> Result<Self> {
        if target_modes.len() != self.matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.dim(),
                found: target_modes.len(),
            });
        }
        check_distinct(target_modes)?;
        self.target_modes = target_modes.to_vec();
        Ok(self)
    }

    pub fn kind(&self) -> DeviceKind {
        self.kind
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn target_modes(&self) -> &[usize] {
        &self.target_modes
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.unitarity_defect()
    }

    /// A warning message for noticeably non-unitary custom devices.
    pub fn validation_warning(&self) -> Option<String> {
        let defect = self.unitarity_defect();
        (self.kind == DeviceKind::Custom && defect > UNITARITY_WARN_THRESHOLD).then(|| {
            format!(
                "custom device on modes {:?} is not unitary (max |U'U - I| = {defect:.3e})",
                self.target_modes
            )
        })
    }
}

fn check_distinct(modes: &[usize]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::DuplicateMode(*m));
        }
    }
    Ok(())
}

pub fn cross() -> DeviceOp {
    DeviceOp::cross()
}

pub fn reflector() -> DeviceOp {
    DeviceOp::reflector()
}

pub fn beam_splitter(t: f64) -> Result<DeviceOp> {
    DeviceOp::beam_splitter(t)
}

pub fn phase(phi: f64) -> Result<DeviceOp> {
    DeviceOp::phase(phi)
}

/// Lifts a device to the full `n_modes` space, identity on untouched modes.
pub fn embed(op: &DeviceOp, n_modes: usize) -> Result<Matrix> {
    check_distinct(&op.target_modes)?;
    if let Some(&mode) = op.target_modes.iter().find(|&&m| m >= n_modes) {
        return Err(Error::ModeOutOfRange { mode, n_modes });
    }
    let mut full = Matrix::identity(n_modes);
    for (a, &ta) in op.target_modes.iter().enumerate() {
        for (b, &tb) in op.target_modes.iter().enumerate() {
            full[(ta, tb)] = op.matrix[(a, b)];
        }
    }
    Ok(full)
}
