//! Dormand–Prince 5(4) stepper with its 4th-order continuous extension.

// Stage nodes are not needed: all flows handled here are autonomous.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b5 - b4
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous representation of the flow over one accepted step.
pub trait DenseOutput {
    fn t_start(&self) -> f64;
    fn t_end(&self) -> f64;
    fn dimension(&self) -> usize;
    /// Evaluates the interpolant at `t ∈ [t_start, t_end]`.
    fn eval(&self, t: f64, out: &mut [f64]);
}

/// One accepted Dormand–Prince step together with its interpolation data.
#[derive(Debug, Clone)]
pub struct DenseStep {
    t0: f64,
    h: f64,
    r1: Vec<f64>,
    r2: Vec<f64>,
    r3: Vec<f64>,
    r4: Vec<f64>,
    r5: Vec<f64>,
}

impl DenseStep {
    fn with_dimension(n: usize) -> Self {
        Self {
            t0: 0.0,
            h: 0.0,
            r1: vec![0.0; n],
            r2: vec![0.0; n],
            r3: vec![0.0; n],
            r4: vec![0.0; n],
            r5: vec![0.0; n],
        }
    }

    /// Builds the interpolant from the stage derivatives of a completed step.
    fn fill(&mut self, t0: f64, h: f64, y0: &[f64], y1: &[f64], k: &Stages) {
        self.t0 = t0;
        self.h = h;
        for i in 0..y0.len() {
            let dy = y1[i] - y0[i];
            let bspl = h * k.k1[i] - dy;
            self.r1[i] = y0[i];
            self.r2[i] = dy;
            self.r3[i] = bspl;
            self.r4[i] = dy - h * k.k7[i] - bspl;
            self.r5[i] = h * (D1 * k.k1[i] + D3 * k.k3[i] + D4 * k.k4[i] + D5 * k.k5[i] + D6 * k.k6[i] + D7 * k.k7[i]);
        }
    }
}

impl DenseOutput for DenseStep {
    fn t_start(&self) -> f64 {
        self.t0
    }

    fn t_end(&self) -> f64 {
        self.t0 + self.h
    }

    fn dimension(&self) -> usize {
        self.r1.len()
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let theta1 = 1.0 - theta;
        for i in 0..self.r1.len() {
            out[i] =
                self.r1[i] + theta * (self.r2[i] + theta1 * (self.r3[i] + theta * (self.r4[i] + theta1 * self.r5[i])));
        }
    }
}

#[derive(Debug, Clone)]
struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    k7: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            k5: vec![0.0; n],
            k6: vec![0.0; n],
            k7: vec![0.0; n],
        }
    }
}

/// Outcome of a single trial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Weighted RMS error estimate; the step is acceptable when `≤ 1`.
    pub error: f64,
    /// Suggested size for the next attempt.
    pub next_h: f64,
}

/// Adaptive Dormand–Prince integrator working on caller-provided buffers.
///
/// The stepper is FSAL: after an accepted step, the last stage is reused as
/// the first stage of the next one. Call [`Dopri5::reset`] whenever the state
/// changes discontinuously (e.g. after a jump).
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    stages: Stages,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    dense: DenseStep,
    fsal_valid: bool,
}

impl Dopri5 {
    pub fn new(dimension: usize, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            stages: Stages::new(dimension),
            tmp: vec![0.0; dimension],
            y_new: vec![0.0; dimension],
            err: vec![0.0; dimension],
            dense: DenseStep::with_dimension(dimension),
            fsal_valid: false,
        }
    }

    pub fn reset(&mut self) {
        self.fsal_valid = false;
    }

    /// The derivative at the current point (valid after [`Dopri5::try_step`]).
    pub fn derivative(&self) -> &[f64] {
        &self.stages.k1
    }

    /// Proposed end state of the last attempted step.
    pub fn proposed(&self) -> &[f64] {
        &self.y_new
    }

    /// Interpolant of the last accepted step.
    pub fn dense(&self) -> &DenseStep {
        &self.dense
    }

    /// Attempts a step of size `h` from `y` (the flow is autonomous). On acceptance
    /// (`outcome.error ≤ 1`) the caller must invoke [`Dopri5::accept`].
    pub fn try_step<F>(&mut self, f: &F, y: &[f64], h: f64) -> StepOutcome
    where
        F: Fn(&[f64], &mut [f64]) + ?Sized,
    {
        let n = y.len();
        let s = &mut self.stages;
        if !self.fsal_valid {
            f(y, &mut s.k1);
            self.fsal_valid = true;
        }
        for i in 0..n {
            self.tmp[i] = y[i] + h * A21 * s.k1[i];
        }
        f(&self.tmp, &mut s.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + h * (A31 * s.k1[i] + A32 * s.k2[i]);
        }
        f(&self.tmp, &mut s.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * (A41 * s.k1[i] + A42 * s.k2[i] + A43 * s.k3[i]);
        }
        f(&self.tmp, &mut s.k4);
        for i in 0..n {
            self.tmp[i] = y[i] + h * (A51 * s.k1[i] + A52 * s.k2[i] + A53 * s.k3[i] + A54 * s.k4[i]);
        }
        f(&self.tmp, &mut s.k5);
        for i in 0..n {
            self.tmp[i] = y[i] + h * (A61 * s.k1[i] + A62 * s.k2[i] + A63 * s.k3[i] + A64 * s.k4[i] + A65 * s.k5[i]);
        }
        f(&self.tmp, &mut s.k6);
        for i in 0..n {
            self.y_new[i] = y[i] + h * (A71 * s.k1[i] + A73 * s.k3[i] + A74 * s.k4[i] + A75 * s.k5[i] + A76 * s.k6[i]);
        }
        f(&self.y_new, &mut s.k7);

        let mut acc = 0.0;
        for i in 0..n {
            self.err[i] = h * (E1 * s.k1[i] + E3 * s.k3[i] + E4 * s.k4[i] + E5 * s.k5[i] + E6 * s.k6[i] + E7 * s.k7[i]);
            let scale = self.abs_tol + self.rel_tol * y[i].abs().max(self.y_new[i].abs());
            let r = self.err[i] / scale;
            acc += r * r;
        }
        let error = (acc / n as f64).sqrt();
        let factor = if error == 0.0 {
            5.0
        } else {
            (0.9 * error.powf(-0.2)).clamp(0.2, 5.0)
        };
        StepOutcome {
            error,
            next_h: h * factor,
        }
    }

    /// Commits the last trial step: builds its dense output and shifts the
    /// FSAL stage. Returns the new state.
    pub fn accept(&mut self, t: f64, y: &[f64], h: f64) -> &[f64] {
        self.dense.fill(t, h, y, &self.y_new, &self.stages);
        std::mem::swap(&mut self.stages.k1, &mut self.stages.k7);
        &self.y_new
    }
}
