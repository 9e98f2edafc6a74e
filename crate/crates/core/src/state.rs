//! Probability states, unnormalized branches and tensor-product structure.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Tolerance on the squared norm of a probability state.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Absolute tolerance used for the rank-one test.
pub const MINOR_TOLERANCE: f64 = 1e-9;

fn check_finite(amps: &[Amplitude]) -> Result<()> {
    match amps.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn norm_sqr(amps: &[Amplitude]) -> f64 {
    amps.iter().map(|z| z.norm_sqr()).sum()
}

/// A normalized vector of amplitudes over labeled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityState {
    amplitudes: Vec<Amplitude>,
}

impl ProbabilityState {
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Domain("a state needs at least one mode".into()));
        }
        check_finite(&amplitudes)?;
        let n = norm_sqr(&amplitudes);
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a non-zero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Amplitude>) -> Result<Self> {
        check_finite(&amplitudes)?;
        let n = norm_sqr(&amplitudes);
        if n <= 0.0 {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let s = n.sqrt();
        Self::new(amplitudes.into_iter().map(|z| z / s).collect())
    }

    /// The classical state in which the particle definitely occupies `mode`.
    pub fn basis(n_modes: usize, mode: usize) -> Result<Self> {
        if mode >= n_modes {
            return Err(Error::ModeOutOfRange { mode, n_modes });
        }
        let mut amps = vec![Amplitude::new(0.0, 0.0); n_modes];
        amps[mode] = Amplitude::new(1.0, 0.0);
        Ok(Self { amplitudes: amps })
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Returns `Some(mode)` if this is exactly a basis state with amplitude 1.
    pub fn basis_mode(&self) -> Option<usize> {
        let one = Amplitude::new(1.0, 0.0);
        let mut found = None;
        for (i, z) in self.amplitudes.iter().enumerate() {
            if *z == one && found.is_none() {
                found = Some(i);
            } else if z.re != 0.0 || z.im != 0.0 {
                return None;
            }
        }
        found
    }

    /// Multiplies every amplitude by `e^{i phi}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let w = Amplitude::from_polar(1.0, phi);
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * w).collect(),
        }
    }
}

/// An unnormalized conditional amplitude vector carried through a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchAmplitude {
    pub amplitudes: Vec<Amplitude>,
    pub weight: f64,
}

impl BranchAmplitude {
    pub fn new(amplitudes: Vec<Amplitude>) -> Self {
        let weight = norm_sqr(&amplitudes);
        Self { amplitudes, weight }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

impl From<&ProbabilityState> for BranchAmplitude {
    fn from(s: &ProbabilityState) -> Self {
        BranchAmplitude::new(s.amplitudes.clone())
    }
}

/// Real observable values `r_i`, one per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub values: Vec<f64>,
}

impl Observable {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// Factor dimensions of a composite state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSplit {
    pub factor_dims: Vec<usize>,
}

impl TensorSplit {
    pub fn new(factor_dims: Vec<usize>) -> Self {
        Self { factor_dims }
    }

    pub fn pair(d1: usize, d2: usize) -> Self {
        Self::new(vec![d1, d2])
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        let ok = !self.factor_dims.is_empty()
            && self.factor_dims.iter().all(|&d| d > 0)
            && self.factor_dims.iter().product::<usize>() == dim;
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleSplit {
                factors: self.factor_dims.clone(),
                dim,
            })
        }
    }

    pub(crate) fn two_factors(&self, dim: usize) -> Result<(usize, usize)> {
        self.check(dim)?;
        match self.factor_dims[..] {
            [d1, d2] => Ok((d1, d2)),
            _ => Err(Error::IncompatibleSplit {
                factors: self.factor_dims.clone(),
                dim,
            }),
        }
    }
}

/// Composite state of two independent systems; index `i * dim(b) + j`.
pub fn tensor(a: &ProbabilityState, b: &ProbabilityState) -> ProbabilityState {
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    ProbabilityState { amplitudes }
}

/// True when the `d1 x d2` coefficient matrix has rank one.
pub fn is_product(s: &ProbabilityState, split: &TensorSplit) -> Result<bool> {
    let (d1, d2) = split.two_factors(s.dim())?;
    let c = |i: usize, j: usize| s.amplitudes[i * d2 + j];
    for i in 0..d1 {
        for k in i + 1..d1 {
            for j in 0..d2 {
                for l in j + 1..d2 {
                    let minor = c(i, j) * c(k, l) - c(i, l) * c(k, j);
                    if minor.norm() > MINOR_TOLERANCE {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}
