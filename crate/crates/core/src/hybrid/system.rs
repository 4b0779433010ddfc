//! System definitions: flow map, flow guards and jump conditions.

/// A hybrid system `ẋ = f(x), x ∈ C` / `x⁺ = g_k(x), x ∈ D_k` over a real state vector.
///
/// Sign conventions used throughout the crate:
///
/// * the flow set is `C = { x : flow_guard_k(x) ≤ 0 for every k }`;
/// * jump condition `k` is enabled on `D_k = { x : jump_guard_k(x) ≥ 0 }`.
///
/// By default the flow guards are the jump guards themselves, i.e. each
/// `C_k` is the closure of the complement of `D_k`. Systems whose flow set is
/// not of that form override [`flow_guard_count`](Self::flow_guard_count) and
/// [`flow_guard`](Self::flow_guard).
///
/// Implementations must be deterministic and free of interior mutability so
/// that one system can be shared by concurrent `solve` calls.
pub trait HybridSystem: Sync {
    fn name(&self) -> &str {
        "hybrid-system"
    }

    fn dimension(&self) -> usize;

    /// Writes `f(x)` into `dx`.
    fn flow(&self, x: &[f64], dx: &mut [f64]);

    fn jump_condition_count(&self) -> usize;

    /// Jump condition `k` is enabled when this is `≥ 0`.
    fn jump_guard(&self, k: usize, x: &[f64]) -> f64;

    /// Writes the post-jump state of condition `k` into `out`.
    fn jump(&self, k: usize, x: &[f64], out: &mut [f64]);

    fn flow_guard_count(&self) -> usize {
        self.jump_condition_count()
    }

    /// Flow is allowed while every flow guard is `≤ 0`.
    fn flow_guard(&self, k: usize, x: &[f64]) -> f64 {
        self.jump_guard(k, x)
    }

    /// Optional state-dependent cap on the integrator step, e.g. while a fast
    /// mode is active.
    fn step_limit(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

type FlowFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type GuardFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ResetFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A [`HybridSystem`] assembled from closures. Handy for small systems and tests.
///
/// ```
/// use neurotherm::hybrid::FnSystem;
///
/// // ẋ = 1, reset to 0 when x reaches 1.
/// let sawtooth = FnSystem::new("sawtooth", 1, |_x, dx| dx[0] = 1.0)
///     .with_jump(|x| x[0] - 1.0, |_x, out| out[0] = 0.0);
/// assert_eq!(neurotherm::hybrid::HybridSystem::jump_condition_count(&sawtooth), 1);
/// ```
pub struct FnSystem {
    name: String,
    dimension: usize,
    flow: FlowFn,
    flow_guards: Vec<GuardFn>,
    jumps: Vec<(GuardFn, ResetFn)>,
    explicit_flow_guards: bool,
}

impl FnSystem {
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        flow: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        assert!(dimension > 0, "state dimension must be positive");
        Self {
            name: name.into(),
            dimension,
            flow: Box::new(flow),
            flow_guards: Vec::new(),
            jumps: Vec::new(),
            explicit_flow_guards: false,
        }
    }

    pub fn with_jump(
        mut self,
        guard: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        reset: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.jumps.push((Box::new(guard), Box::new(reset)));
        self
    }

    /// Adds an explicit flow guard. Once any is added, the jump guards no
    /// longer double as flow guards.
    pub fn with_flow_guard(mut self, guard: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.flow_guards.push(Box::new(guard));
        self.explicit_flow_guards = true;
        self
    }
}

impl HybridSystem for FnSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn flow(&self, x: &[f64], dx: &mut [f64]) {
        (self.flow)(x, dx)
    }

    fn jump_condition_count(&self) -> usize {
        self.jumps.len()
    }

    fn jump_guard(&self, k: usize, x: &[f64]) -> f64 {
        (self.jumps[k].0)(x)
    }

    fn jump(&self, k: usize, x: &[f64], out: &mut [f64]) {
        (self.jumps[k].1)(x, out)
    }

    fn flow_guard_count(&self) -> usize {
        if self.explicit_flow_guards {
            self.flow_guards.len()
        } else {
            self.jumps.len()
        }
    }

    fn flow_guard(&self, k: usize, x: &[f64]) -> f64 {
        if self.explicit_flow_guards {
            (self.flow_guards[k])(x)
        } else {
            (self.jumps[k].0)(x)
        }
    }
}
