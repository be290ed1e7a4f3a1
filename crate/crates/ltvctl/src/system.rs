//! Discrete-time linear time-varying SISO systems over a finite index
//! window, with optional periodic extension, and their simulation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::{dot, vec_add, vec_scale, Matrix};
use crate::scalar::{Scalar, ScalarMode};

/// One time step of system data: `x_{k+1} = A x_k + b u_k`, `y_k = c x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTriple {
    pub a: Matrix,
    pub b: Vec<Scalar>,
    pub c: Vec<Scalar>,
}

impl StepTriple {
    pub fn new(a: Matrix, b: Vec<Scalar>, c: Vec<Scalar>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "b has length {}, c has length {}, expected {n}",
                b.len(),
                c.len()
            )));
        }
        Ok(StepTriple { a, b, c })
    }
}

/// How index lookups outside the window behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Lookups outside `[k_min, k_max]` are errors.
    None,
    /// Lookups at any integer resolve to `k_min + (k - k_min) mod p`.
    Periodic(i64),
}

/// Finite window of `(A_k, b_k, c_k)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct LtvSystem {
    n: usize,
    k_min: i64,
    k_max: i64,
    steps: BTreeMap<i64, StepTriple>,
    extension: Extension,
    mode: ScalarMode,
}

impl LtvSystem {
    pub fn new(
        n: usize,
        k_min: i64,
        k_max: i64,
        steps: BTreeMap<i64, StepTriple>,
        extension: Extension,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSystem("state dimension must be positive".into()));
        }
        if k_min > k_max {
            return Err(Error::InvalidSystem(format!("k_min = {k_min} exceeds k_max = {k_max}")));
        }
        let window = k_max - k_min + 1;
        if let Extension::Periodic(p) = extension {
            if p <= 0 {
                return Err(Error::InvalidSystem(format!("period must be positive, got {p}")));
            }
            if p > window {
                return Err(Error::InvalidSystem(format!(
                    "period {p} exceeds the window length {window}"
                )));
            }
        }
        let mut mode = None;
        for k in k_min..=k_max {
            let step = steps
                .get(&k)
                .ok_or_else(|| Error::InvalidSystem(format!("missing step data for k = {k}")))?;
            if step.a.nrows() != n || step.b.len() != n || step.c.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "step k = {k} has dimension {} but the system declares n = {n}",
                    step.a.nrows()
                )));
            }
            let m = step.a.mode();
            if step.b.iter().chain(step.c.iter()).any(|s| s.mode() != m)
                || *mode.get_or_insert(m) != m
            {
                return Err(Error::InvalidSystem(format!(
                    "step k = {k} mixes scalar modes"
                )));
            }
        }
        if steps.keys().any(|k| *k < k_min || *k > k_max) {
            return Err(Error::InvalidSystem("step index outside the declared window".into()));
        }
        Ok(LtvSystem { n, k_min, k_max, steps, extension, mode: mode.unwrap() })
    }

    /// Time-invariant system as a period-1 window.
    pub fn time_invariant(a: Matrix, b: Vec<Scalar>, c: Vec<Scalar>) -> Result<Self> {
        let mut steps = BTreeMap::new();
        steps.insert(0, StepTriple::new(a, b, c)?);
        LtvSystem::new(steps[&0].b.len(), 0, 0, steps, Extension::Periodic(1))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    /// Map an arbitrary index to the stored window, or fail.
    pub fn resolve(&self, k: i64) -> Result<i64> {
        if k >= self.k_min && k <= self.k_max {
            if let Extension::Periodic(p) = self.extension {
                return Ok(self.k_min + (k - self.k_min).rem_euclid(p));
            }
            return Ok(k);
        }
        match self.extension {
            Extension::Periodic(p) => Ok(self.k_min + (k - self.k_min).rem_euclid(p)),
            Extension::None => {
                Err(Error::IndexOutOfRange { k, k_min: self.k_min, k_max: self.k_max })
            }
        }
    }

    pub fn is_resolvable(&self, k: i64) -> bool {
        self.resolve(k).is_ok()
    }

    pub fn step(&self, k: i64) -> Result<&StepTriple> {
        let k = self.resolve(k)?;
        Ok(&self.steps[&k])
    }

    pub fn a(&self, k: i64) -> Result<&Matrix> {
        Ok(&self.step(k)?.a)
    }

    pub fn b(&self, k: i64) -> Result<&[Scalar]> {
        Ok(&self.step(k)?.b)
    }

    pub fn c(&self, k: i64) -> Result<&[Scalar]> {
        Ok(&self.step(k)?.c)
    }

    pub fn steps(&self) -> &BTreeMap<i64, StepTriple> {
        &self.steps
    }

    pub fn to_float_mode(&self) -> LtvSystem {
        let steps = self
            .steps
            .iter()
            .map(|(k, s)| {
                (*k, StepTriple {
                    a: s.a.to_float_mode(),
                    b: s.b.iter().map(Scalar::to_float_mode).collect(),
                    c: s.c.iter().map(Scalar::to_float_mode).collect(),
                })
            })
            .collect();
        LtvSystem {
            n: self.n,
            k_min: self.k_min,
            k_max: self.k_max,
            steps,
            extension: self.extension,
            mode: ScalarMode::Float,
        }
    }
}

/// A finite run of memoryless output-feedback gains: `u_k = F_k y_k` for
/// `k_start <= k < k_start + gains.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSchedule {
    pub k_start: i64,
    pub gains: Vec<Scalar>,
}

impl FeedbackSchedule {
    pub fn new(k_start: i64, gains: Vec<Scalar>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidSystem("feedback schedule must have at least one gain".into()));
        }
        Ok(FeedbackSchedule { k_start, gains })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gain(&self, k: i64) -> Option<&Scalar> {
        let off = k.checked_sub(self.k_start)?;
        if off < 0 {
            return None;
        }
        self.gains.get(off as usize)
    }
}

/// Input applied during simulation.
#[derive(Debug, Clone)]
pub enum SimInput {
    /// Explicit control values, one per step.
    Controls(Vec<Scalar>),
    /// Closed loop under a feedback schedule; stepping uses the matrix
    /// `A_k + F_k b_k c_k` so the route is independent of the explicit
    /// control path.
    Feedback(FeedbackSchedule),
    /// Zero input for a fixed number of steps.
    Free { steps: usize },
}

/// Simulation result. `outputs[i] = c_{k+i} x_{k+i}` is recorded for every
/// step taken (indices `0..states.len()-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub k_start: i64,
    pub states: Vec<Vec<Scalar>>,
    pub outputs: Vec<Scalar>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[Scalar] {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn len_steps(&self) -> usize {
        self.states.len() - 1
    }

    /// Output at the final state, when `c` is still resolvable there.
    pub fn final_output(&self, sys: &LtvSystem) -> Option<Scalar> {
        let k = self.k_start + self.len_steps() as i64;
        sys.c(k).ok().map(|c| dot(c, self.final_state()))
    }
}

/// Run the recursion `x_{k+1} = A_k x_k + b_k u_k` from `(k0, x0)`.
pub fn simulate(sys: &LtvSystem, k0: i64, x0: &[Scalar], input: &SimInput) -> Result<Trajectory> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dimension {}, system has {}",
            x0.len(),
            sys.dim()
        )));
    }
    let steps = match input {
        SimInput::Controls(u) => u.len(),
        SimInput::Feedback(f) => {
            if k0 < f.k_start {
                return Err(Error::InvalidSystem(format!(
                    "simulation starts at k = {k0} before the schedule start {}",
                    f.k_start
                )));
            }
            (f.k_start + f.gains.len() as i64 - k0).max(0) as usize
        }
        SimInput::Free { steps } => *steps,
    };
    let mut states = Vec::with_capacity(steps + 1);
    let mut outputs = Vec::with_capacity(steps);
    states.push(x0.to_vec());
    for i in 0..steps {
        let k = k0 + i as i64;
        let step = sys.step(k)?;
        let x = states.last().unwrap();
        let y = dot(&step.c, x);
        let next = match input {
            SimInput::Controls(u) => {
                vec_add(&step.a.mat_vec(x), &vec_scale(&step.b, &u[i]))
            }
            SimInput::Feedback(f) => {
                let gain = f.gain(k).expect("step count bounded by schedule length");
                let closed = step.a.add(&Matrix::outer(&step.b, &step.c).scale(gain));
                closed.mat_vec(x)
            }
            SimInput::Free { .. } => step.a.mat_vec(x),
        };
        outputs.push(y);
        states.push(next);
    }
    Ok(Trajectory { k_start: k0, states, outputs })
}
