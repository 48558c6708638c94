//! Random-walk Metropolis kernels and path functionals.
//!
//! Hitting times follow the infimum-over-`t >= 0` convention: a chain that
//! starts inside the target set has `tau = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::interval::IntervalUnion;
use crate::metastability::partition::Partition;
use crate::rng::{RandomStream, StreamId};
use crate::target::Target;

/// A chain state together with its cached log target density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub log_f: f64,
}

/// A Metropolis kernel with Gaussian random-walk proposals.
pub trait MarkovKernel: Sync {
    /// Proposal standard deviation.
    fn step_sigma(&self) -> f64;

    /// The distribution the kernel is reversible with respect to.
    fn stationary(&self) -> &Target;

    /// Set the chain lives on.
    fn support(&self) -> IntervalUnion;

    /// Log density used for the acceptance test (any normalization).
    fn log_target(&self, x: f64) -> f64;

    /// One transition from a state whose `log_f` equals `log_target(x)`.
    fn advance(&self, state: State, rng: &mut RandomStream) -> State;

    fn label(&self) -> String;

    fn state(&self, x: f64) -> State {
        State {
            x,
            log_f: self.log_target(x),
        }
    }

    fn step(&self, x: f64, rng: &mut RandomStream) -> f64 {
        self.advance(self.state(x), rng).x
    }
}

/// `X' = X + eps` with probability `min(1, f(X+eps)/f(X))`, `eps ~ N(0, sigma^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwmKernel {
    step_sigma: f64,
    target: Target,
}

impl RwmKernel {
    pub fn new(step_sigma: f64, target: Target) -> Result<Self> {
        if !(step_sigma > 0.0 && step_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {step_sigma}"
            )));
        }
        Ok(Self { step_sigma, target })
    }

    /// The kernel `K_sigma`: step size `sigma` against the mixture of width `sigma`.
    pub fn mixture(sigma: f64) -> Result<Self> {
        Self::new(sigma, Target::mixture(sigma)?)
    }

    pub fn target(&self) -> &Target {
        &self.target
    }
}

impl MarkovKernel for RwmKernel {
    fn step_sigma(&self) -> f64 {
        self.step_sigma
    }

    fn stationary(&self) -> &Target {
        &self.target
    }

    fn support(&self) -> IntervalUnion {
        self.target.support()
    }

    fn log_target(&self, x: f64) -> f64 {
        self.target.log_density(x)
    }

    fn advance(&self, state: State, rng: &mut RandomStream) -> State {
        // Both draws are always consumed so streams stay aligned across kernels.
        let y = state.x + self.step_sigma * rng.normal();
        let u = rng.uniform();
        let log_fy = self.target.log_density(y);
        let log_ratio = log_fy - state.log_f;
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            State {
                x: y,
                log_f: log_fy,
            }
        } else {
            state
        }
    }

    fn label(&self) -> String {
        format!("rwm(step={})", self.step_sigma)
    }
}

/// Metropolis–Hastings with proposal `inner` and target `pi|_support`.
///
/// Since the inner kernel is reversible with respect to the unrestricted
/// target, this equals running one full inner step and rejecting any result
/// that leaves `support`; that is how [`MarkovKernel::advance`] implements it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedKernel {
    inner: RwmKernel,
    support: IntervalUnion,
    restricted: Target,
}

impl RestrictedKernel {
    pub fn new(inner: RwmKernel, support: IntervalUnion) -> Result<Self> {
        let restricted = inner.target.restrict(&support)?;
        Ok(Self {
            inner,
            support,
            restricted,
        })
    }

    pub fn inner(&self) -> &RwmKernel {
        &self.inner
    }

    /// Checked single step.
    pub fn restricted_step(&self, x: f64, rng: &mut RandomStream) -> Result<f64> {
        if !self.support.contains(x) {
            return Err(Error::OutsideSupport {
                x,
                support: self.support.to_string(),
            });
        }
        Ok(self.step(x, rng))
    }
}

impl MarkovKernel for RestrictedKernel {
    fn step_sigma(&self) -> f64 {
        self.inner.step_sigma
    }

    fn stationary(&self) -> &Target {
        &self.restricted
    }

    fn support(&self) -> IntervalUnion {
        self.support.clone()
    }

    fn log_target(&self, x: f64) -> f64 {
        self.inner.log_target(x)
    }

    fn advance(&self, state: State, rng: &mut RandomStream) -> State {
        let next = self.inner.advance(state, rng);
        if self.support.contains(next.x) {
            next
        } else {
            state
        }
    }

    fn label(&self) -> String {
        format!("restricted({}, {})", self.inner.label(), self.support)
    }
}

/// A simulated path `X_0, X_1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<f64>,
    pub start_index: u64,
    pub kernel_id: String,
    pub stream: StreamId,
    /// Original time stamps when this is a trace; `None` means `0, 1, 2, ...`.
    pub times: Option<Vec<u64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> u64 {
        match &self.times {
            Some(t) => t[k],
            None => self.start_index + k as u64,
        }
    }
}

fn check_start<K: MarkovKernel + ?Sized>(kernel: &K, x0: f64) -> Result<()> {
    let support = kernel.support();
    if support.contains(x0) {
        Ok(())
    } else {
        Err(Error::OutsideSupport {
            x: x0,
            support: support.to_string(),
        })
    }
}

/// Run `steps` transitions from `x0`; the result has `steps + 1` states.
pub fn simulate<K: MarkovKernel + ?Sized>(
    kernel: &K,
    x0: f64,
    steps: usize,
    rng: &mut RandomStream,
) -> Result<Trajectory> {
    check_start(kernel, x0)?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut state = kernel.state(x0);
    states.push(x0);
    for _ in 0..steps {
        state = kernel.advance(state, rng);
        states.push(state.x);
    }
    Ok(Trajectory {
        states,
        start_index: 0,
        kernel_id: kernel.label(),
        stream: rng.id(),
        times: None,
    })
}

/// Outcome of a capped hitting-time simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingResult {
    /// `None` when the set was not entered by `cap`.
    pub tau: Option<u64>,
    pub cap: u64,
    /// State at time `tau`.
    pub exit_state: Option<f64>,
}

impl HittingResult {
    pub fn is_censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// `tau = inf { t >= 0 : X_t in set }`, censored at `cap`.
pub fn hitting_time<K: MarkovKernel + ?Sized>(
    kernel: &K,
    x0: f64,
    set: &IntervalUnion,
    cap: u64,
    rng: &mut RandomStream,
) -> Result<HittingResult> {
    check_start(kernel, x0)?;
    if set.contains(x0) {
        return Ok(HittingResult {
            tau: Some(0),
            cap,
            exit_state: Some(x0),
        });
    }
    if set.is_empty() {
        return Ok(HittingResult {
            tau: None,
            cap,
            exit_state: None,
        });
    }
    let mut state = kernel.state(x0);
    for t in 1..=cap {
        state = kernel.advance(state, rng);
        if set.contains(state.x) {
            return Ok(HittingResult {
                tau: Some(t),
                cap,
                exit_state: Some(state.x),
            });
        }
    }
    Ok(HittingResult {
        tau: None,
        cap,
        exit_state: None,
    })
}

/// The trace of a path on `set`: the visits to `set`, in order, with their
/// original time stamps kept in [`Trajectory::times`]. The first trace index
/// is the first visit, even when `X_0` lies outside `set`.
pub fn trace_chain(traj: &Trajectory, set: &IntervalUnion) -> Trajectory {
    let mut states = Vec::new();
    let mut times = Vec::new();
    for (k, &x) in traj.states.iter().enumerate() {
        if set.contains(x) {
            states.push(x);
            times.push(traj.time(k));
        }
    }
    let start_index = times.first().copied().unwrap_or(traj.start_index);
    Trajectory {
        states,
        start_index,
        kernel_id: format!("trace({}, {})", traj.kernel_id, set),
        stream: traj.stream,
        times: Some(times),
    }
}

/// Run `replicas` independent jobs on streams `base.with_replica(r)`.
/// Results come back in replica order regardless of the thread count.
pub fn replicate<T, F>(base: StreamId, replicas: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RandomStream) -> T + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RandomStream::new(base.with_replica(r));
            job(r, &mut rng)
        })
        .collect()
}

/// Destination-mode tally for first exits from one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTally {
    pub home: usize,
    pub counts: Vec<u64>,
    pub censored: u64,
    pub replicas: u64,
}

impl ExitTally {
    pub fn frequency(&self, mode: usize) -> Estimate {
        let mut e = Estimate::proportion(self.counts[mode], self.replicas);
        e.censored = self.censored;
        e
    }
}

/// Run `replicas` chains from `x0` until they first leave mode `home`, and
/// tally which mode each lands in.
pub fn exit_distribution<K: MarkovKernel + ?Sized>(
    kernel: &K,
    x0: f64,
    home: usize,
    partition: &Partition,
    cap: u64,
    stream: StreamId,
    replicas: u64,
) -> Result<ExitTally> {
    let home_set = &partition.modes()[home].set;
    if !home_set.contains(x0) {
        return Err(Error::OutsideSupport {
            x: x0,
            support: home_set.to_string(),
        });
    }
    let exit_set = home_set.complement();
    let results = replicate(stream, replicas, |_, rng| {
        hitting_time(kernel, x0, &exit_set, cap, rng)
    });
    let mut counts = vec![0u64; partition.len()];
    let mut censored = 0;
    for r in results {
        match r?.exit_state {
            Some(x) => {
                if let Some(j) = partition.mode_of(x) {
                    counts[j] += 1;
                }
            }
            None => censored += 1,
        }
    }
    Ok(ExitTally {
        home,
        counts,
        censored,
        replicas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Integrator;
    use crate::special::normal_pdf;

    fn k(sigma: f64) -> RwmKernel {
        RwmKernel::mixture(sigma).unwrap()
    }

    #[test]
    fn uphill_proposals_always_accepted() {
        let kernel = k(0.3);
        // from deep in the trough every proposal toward a mode is uphill
        let mut rng = RandomStream::from_seed(1);
        for _ in 0..10_000 {
            let x = -3.0;
            let mut probe = rng.clone();
            let eps = 0.3 * probe.normal();
            let y = kernel.step(x, &mut rng);
            if eps > 0.0 {
                assert_eq!(y, x + eps);
            }
        }
    }

    #[test]
    fn acceptance_rate_at_mode_matches_quadrature() {
        let s = 0.2;
        let kernel = k(s);
        let f = kernel.target().clone();
        let lfx = f.log_density(-1.0);
        // oracle: integral of phi(eps) min(1, f(x+eps)/f(x))
        let oracle = Integrator::default()
            .integrate_with_breaks(
                |e: f64| normal_pdf(e, s) * (f.log_density(-1.0 + e) - lfx).min(0.0).exp(),
                -12.0 * s,
                12.0 * s,
                &[0.0],
            )
            .unwrap()
            .value;
        assert!((0.5..=0.9).contains(&oracle));
        let n = 100_000;
        let mut rng = RandomStream::from_seed(2);
        let moved = (0..n)
            .filter(|_| kernel.step(-1.0, &mut rng) != -1.0)
            .count() as f64
            / n as f64;
        let se = (oracle * (1.0 - oracle) / n as f64).sqrt();
        assert!((moved - oracle).abs() < 4.0 * se, "{moved} vs {oracle}");
    }

    #[test]
    fn one_step_law_is_mirror_symmetric() {
        let kernel = k(0.2);
        let n = 100_000;
        let mut r1 = RandomStream::from_seed(3);
        let mut r2 = RandomStream::from_seed(4);
        let mut a: Vec<f64> = (0..n).map(|_| kernel.step(-1.0, &mut r1)).collect();
        let mut b: Vec<f64> = (0..n).map(|_| -kernel.step(1.0, &mut r2)).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        // two-sample KS statistic; rejections put an atom at the start, so
        // ties are consumed from both samples at once
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < n {
            let v = a[i].min(b[j]);
            while i < n && a[i] == v {
                i += 1;
            }
            while j < n && b[j] == v {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        let ks_95 = 1.36 * (2.0 / n as f64).sqrt();
        assert!(d < 4.0 * ks_95, "KS {d}");
    }

    #[test]
    fn restricted_step_on_full_line_equals_rwm() {
        let inner = k(0.3);
        let restricted = RestrictedKernel::new(inner.clone(), IntervalUnion::full()).unwrap();
        let mut r1 = RandomStream::from_seed(9);
        let mut r2 = RandomStream::from_seed(9);
        let mut x = -1.0;
        for _ in 0..1000 {
            let a = inner.step(x, &mut r1);
            let b = restricted.restricted_step(x, &mut r2).unwrap();
            assert_eq!(a, b);
            x = a;
        }
    }

    #[test]
    fn restricted_step_never_leaves_support() {
        let s = 0.3;
        let restricted = RestrictedKernel::new(k(s), IntervalUnion::below(0.0)).unwrap();
        let mut rng = RandomStream::from_seed(10);
        for _ in 0..100_000 {
            assert!(restricted.restricted_step(-s / 10.0, &mut rng).unwrap() < 0.0);
        }
        assert!(matches!(
            restricted.restricted_step(0.5, &mut rng),
            Err(Error::OutsideSupport { .. })
        ));
    }

    #[test]
    fn simulate_zero_steps_and_replay() {
        let kernel = k(0.3);
        let t = simulate(&kernel, -1.0, 0, &mut RandomStream::from_seed(1)).unwrap();
        assert_eq!(t.states, vec![-1.0]);
        let a = simulate(&kernel, -1.0, 5000, &mut RandomStream::from_seed(42)).unwrap();
        let b = simulate(&kernel, -1.0, 5000, &mut RandomStream::from_seed(42)).unwrap();
        assert_eq!(a, b);
        assert!(a
            .states
            .iter()
            .zip(&b.states)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn hitting_time_edge_cases() {
        let kernel = k(0.3);
        let mut rng = RandomStream::from_seed(1);
        let inside =
            hitting_time(&kernel, 0.5, &IntervalUnion::at_least(0.0), 10, &mut rng).unwrap();
        assert_eq!(inside.tau, Some(0));
        assert_eq!(inside.exit_state, Some(0.5));
        let never = hitting_time(&kernel, -1.0, &IntervalUnion::empty(), 1_000, &mut rng).unwrap();
        assert!(never.is_censored());
        // boundary point belongs to [0, inf)
        let zero = hitting_time(&kernel, 0.0, &IntervalUnion::at_least(0.0), 10, &mut rng).unwrap();
        assert_eq!(zero.tau, Some(0));
    }

    #[test]
    fn raising_cap_never_loses_hits() {
        let kernel = k(0.35);
        let set = IntervalUnion::at_least(0.0);
        let base = StreamId::new(5, 0, 0, 0);
        let hits = |cap: u64| {
            replicate(base, 64, |_, rng| {
                hitting_time(&kernel, -1.0, &set, cap, rng).unwrap()
            })
            .into_iter()
            .filter(|h| !h.is_censored())
            .count()
        };
        let mut last = 0;
        for cap in [0, 10, 50, 100, 500, 2000] {
            let now = hits(cap);
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn trace_examples() {
        let t = Trajectory {
            states: vec![-1.0, 0.5, -2.0, 0.7],
            start_index: 0,
            kernel_id: "test".into(),
            stream: StreamId::new(0, 0, 0, 0),
            times: None,
        };
        let tr = trace_chain(&t, &IntervalUnion::below(0.0));
        assert_eq!(tr.states, vec![-1.0, -2.0]);
        assert_eq!(tr.times, Some(vec![0, 2]));
        let full = trace_chain(&t, &IntervalUnion::full());
        assert_eq!(full.states, t.states);
        let again = trace_chain(&tr, &IntervalUnion::below(0.0));
        assert_eq!(again.states, tr.states);
        assert_eq!(again.times, tr.times);
        let none = trace_chain(&t, &IntervalUnion::below(-5.0));
        assert!(none.is_empty());
    }

    #[test]
    fn replicate_order_is_stable() {
        let base = StreamId::new(1, 2, 3, 0);
        let a = replicate(base, 50, |_, rng| rng.next_u64());
        let b: Vec<u64> = (0..50)
            .map(|r| RandomStream::new(base.with_replica(r)).next_u64())
            .collect();
        assert_eq!(a, b);
    }
}
