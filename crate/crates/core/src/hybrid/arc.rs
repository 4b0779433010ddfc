//! Hybrid arcs: trajectories over hybrid time `(t, j)`.

/// Borrowed view of one stored sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<'a> {
    pub t: f64,
    pub j: usize,
    pub state: &'a [f64],
}

/// One executed jump.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub t: f64,
    /// Jump counter before the jump; the post-jump state lives at `j + 1`.
    pub j: usize,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    /// Index of the jump condition that fired.
    pub condition: usize,
}

/// A solution of a hybrid system.
///
/// Samples are stored flat. Every jump contributes a pre-jump sample at
/// `(t, j)` and a post-jump sample at `(t, j + 1)`, so piecewise quantities
/// can be integrated exactly across jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc {
    dimension: usize,
    times: Vec<f64>,
    jumps: Vec<usize>,
    states: Vec<f64>,
    records: Vec<JumpRecord>,
}

impl HybridArc {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            times: Vec::new(),
            jumps: Vec::new(),
            states: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, j: usize, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dimension);
        self.times.push(t);
        self.jumps.push(j);
        self.states.extend_from_slice(state);
    }

    pub fn push_jump(&mut self, record: JumpRecord) {
        self.records.push(record);
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            t: self.times[i],
            j: self.jumps[i],
            state: &self.states[i * self.dimension..(i + 1) * self.dimension],
        }
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn jump_records(&self) -> &[JumpRecord] {
        &self.records
    }

    pub fn jump_count(&self) -> usize {
        self.records.len()
    }

    pub fn first(&self) -> Option<Sample<'_>> {
        (!self.is_empty()).then(|| self.sample(0))
    }

    pub fn last(&self) -> Option<Sample<'_>> {
        (!self.is_empty()).then(|| self.sample(self.len() - 1))
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Value of `f(state)` at time `t`, interpolated linearly between the
    /// bracketing samples. At a jump instant the post-jump value is used.
    pub fn value_at(&self, t: f64, f: impl Fn(&[f64]) -> f64) -> Option<f64> {
        if self.is_empty() || t < self.times[0] || t > self.final_time() {
            return None;
        }
        // last index with time ≤ t
        let hi = self.times.partition_point(|&s| s <= t);
        let i = hi - 1;
        let a = self.sample(i);
        if a.t == t || i + 1 == self.len() {
            return Some(f(a.state));
        }
        let b = self.sample(i + 1);
        let w = (t - a.t) / (b.t - a.t);
        Some(f(a.state) + w * (f(b.state) - f(a.state)))
    }

    /// Time average of `f(state)` over `[t0, t1]` by the trapezoidal rule on
    /// the stored samples, jumps included as zero-width segments.
    pub fn time_average(&self, t0: f64, t1: f64, f: impl Fn(&[f64]) -> f64) -> Option<f64> {
        if t1 <= t0 {
            return None;
        }
        let start = self.value_at(t0, &f)?;
        let end = self.value_at(t1, &f)?;
        let mut area = 0.0;
        let mut prev_t = t0;
        let mut prev_v = start;
        let first = self.times.partition_point(|&s| s <= t0);
        for i in first..self.len() {
            let s = self.sample(i);
            if s.t >= t1 {
                break;
            }
            let v = f(s.state);
            area += 0.5 * (prev_v + v) * (s.t - prev_t);
            prev_t = s.t;
            prev_v = v;
        }
        area += 0.5 * (prev_v + end) * (t1 - prev_t);
        Some(area / (t1 - t0))
    }
}
