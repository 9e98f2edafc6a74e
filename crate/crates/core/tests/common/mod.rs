#![allow(dead_code)]

use std::f64::consts::PI;

use mzsim_core::{Amplitude, Apparatus, Detector, DetectorBank, DeviceOp, Matrix, ProbabilityState, Stage};
use proptest::prelude::*;

pub fn c(re: f64, im: f64) -> Amplitude {
    Amplitude::new(re, im)
}

/// Random 2x2 unitary `e^{i g} [[a, b], [-b*, a*]]`.
pub fn unitary2(theta: f64, alpha: f64, beta: f64, g: f64) -> Matrix {
    let a = Amplitude::from_polar(theta.cos(), alpha);
    let b = Amplitude::from_polar(theta.sin(), beta);
    let w = Amplitude::from_polar(1.0, g);
    Matrix::from_rows(2, vec![a * w, b * w, -b.conj() * w, a.conj() * w]).unwrap()
}

fn pair(n: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..n, 1..n).prop_map(move |(a, off)| (a, (a + off) % n))
}

fn entry() -> impl Strategy<Value = Amplitude> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c(re, im))
}

/// A device on `n` modes. `unitary` restricts to norm-preserving kinds.
pub fn device(n: usize, unitary: bool) -> BoxedStrategy<DeviceOp> {
    let single = (0..n, -PI..PI).prop_map(|(m, phi)| DeviceOp::phase_shift(m, phi).unwrap());
    if n == 1 {
        return single.boxed();
    }
    let angles = (0.0f64..PI / 2.0, -PI..PI, -PI..PI, -PI..PI);
    let mut choices = vec![
        single.boxed(),
        pair(n).prop_map(|(a, b)| DeviceOp::cross().on(&[a, b]).unwrap()).boxed(),
        pair(n).prop_map(|(a, b)| DeviceOp::reflector().on(&[a, b]).unwrap()).boxed(),
        (pair(n), 0.0f64..=1.0)
            .prop_map(|((a, b), t)| DeviceOp::beam_splitter(t).unwrap().on(&[a, b]).unwrap())
            .boxed(),
        (pair(n), -PI..PI)
            .prop_map(|((a, b), phi)| DeviceOp::phase(phi).unwrap().on(&[a, b]).unwrap())
            .boxed(),
        (pair(n), angles)
            .prop_map(|((a, b), (t, al, be, g))| DeviceOp::custom(unitary2(t, al, be, g), vec![a, b]).unwrap())
            .boxed(),
    ];
    if !unitary {
        choices.push(
            (pair(n), prop::collection::vec(entry(), 4))
                .prop_map(|((a, b), e)| DeviceOp::custom(Matrix::from_rows(2, e).unwrap(), vec![a, b]).unwrap())
                .boxed(),
        );
    }
    prop::strategy::Union::new(choices).boxed()
}

/// A bank over a random subset of modes, each watched mode in its own detector
/// or merged with the next one.
pub fn bank(n: usize) -> impl Strategy<Value = DetectorBank> {
    (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)).prop_filter_map(
        "at least one watched mode",
        move |(watch, merge)| {
            let mut detectors: Vec<Detector> = Vec::new();
            for m in (0..n).filter(|&m| watch[m]) {
                match detectors.last_mut() {
                    Some(d) if merge[m] => {
                        d.modes.insert(m);
                    }
                    _ => detectors.push(Detector::new(format!("D{m}"), [m])),
                }
            }
            DetectorBank::new(detectors).ok()
        },
    )
}

pub fn source(n: usize) -> impl Strategy<Value = ProbabilityState> {
    prop::collection::vec(entry(), n)
        .prop_filter("non-zero", |v| v.iter().any(|z| z.norm() > 1e-3))
        .prop_map(|v| ProbabilityState::normalized(v).unwrap())
}

pub fn basis_source(n: usize) -> impl Strategy<Value = ProbabilityState> {
    (0..n).prop_map(move |m| ProbabilityState::basis(n, m).unwrap())
}

/// Apparatus with detector banks and norm-preserving devices.
pub fn apparatus(max_modes: usize, max_stages: usize) -> impl Strategy<Value = Apparatus> {
    (1..=max_modes).prop_flat_map(move |n| {
        let stage = prop_oneof![
            3 => device(n, true).prop_map(Stage::Device),
            1 => bank(n).prop_map(Stage::Detect),
        ];
        (source(n), prop::collection::vec(stage, 0..=max_stages))
            .prop_map(move |(src, stages)| Apparatus::new(n, src, stages).unwrap())
    })
}

/// Detector-free apparatus from a basis state, devices not necessarily unitary.
pub fn device_only(max_modes: usize, max_stages: usize) -> impl Strategy<Value = Apparatus> {
    (1..=max_modes).prop_flat_map(move |n| {
        (basis_source(n), prop::collection::vec(device(n, false).prop_map(Stage::Device), 1..=max_stages))
            .prop_map(move |(src, stages)| Apparatus::new(n, src, stages).unwrap())
    })
}
