//! Numerical checks of the metastability assumptions at a fixed `sigma`.
//!
//! Every clause becomes one [`ClauseRecord`]. Monte-Carlo clauses compare a
//! 95% Clopper–Pearson interval with the bound: PASS when the upper end is
//! below it, FAIL when the lower end is above it, INCONCLUSIVE otherwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conductance::{conductance_quadrature, move_probability, Method};
use super::drift::{drift_check, DriftProblem, DEFAULT_ALPHAS};
use super::partition::{Mode, Partition};
use crate::discretize::{build_grid_kernel, total_variation, Grid, GridOptions};
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::kernel::{exit_distribution, hitting_time, replicate, RestrictedKernel, RwmKernel};
use crate::quadrature::Integrator;
use crate::rng::StreamId;
use crate::special::{binomial_lower_95, binomial_upper_95};
use crate::target::DEFAULT_TAIL_RADIUS;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const DISCLAIMER: &str =
    "These checks evaluate finite-sigma numerical surrogates of statements that are \
asymptotic in 1/sigma. A PASS is evidence at the tested sigma, not a proof.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn worst(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        items.into_iter().max().unwrap_or(Verdict::Pass)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Clause identifiers used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    SmallConductance,
    RapidMixing,
    NeverStuck,
    NeverHitting,
    ModeMetastability,
    LyapunovTails,
    NoEscape,
    StayProbability,
    EntryMass,
    Connectedness,
}

impl Clause {
    pub fn id(&self) -> &'static str {
        match self {
            Clause::SmallConductance => "small-conductance",
            Clause::RapidMixing => "rapid-mixing",
            Clause::NeverStuck => "never-stuck",
            Clause::NeverHitting => "never-hitting",
            Clause::ModeMetastability => "mode-metastability",
            Clause::LyapunovTails => "lyapunov-tails",
            Clause::NoEscape => "no-escape",
            Clause::StayProbability => "stay-probability",
            Clause::EntryMass => "entry-mass",
            Clause::Connectedness => "connectedness",
        }
    }

    /// Clauses whose bound is a fourth power of the conductance.
    pub fn is_fourth_power_bounded(&self) -> bool {
        matches!(
            self,
            Clause::NeverHitting | Clause::NoEscape | Clause::EntryMass
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseRecord {
    pub clause: Clause,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    pub quantity: String,
    pub relation: Relation,
    pub required: f64,
    pub achieved: f64,
    pub stderr: f64,
    /// One-sided 95% upper confidence bound for Monte-Carlo probabilities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_95: Option<f64>,
    pub method: Method,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<ClauseRecord>,
}

impl ClauseRecord {
    /// Whether this record, or any part of it, is INCONCLUSIVE only for
    /// reasons traceable to fourth-power bounds.
    pub fn inconclusive_from_fourth_power(&self) -> bool {
        if self.verdict != Verdict::Inconclusive {
            return true;
        }
        if self.parts.is_empty() {
            return self.clause.is_fourth_power_bounded();
        }
        self.parts
            .iter()
            .all(|p| p.inconclusive_from_fourth_power())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub schema_version: u32,
    pub sigma: f64,
    pub disclaimer: String,
    pub partition: Partition,
    pub records: Vec<ClauseRecord>,
    pub verdict: Verdict,
}

impl AssumptionReport {
    pub fn record(&self, clause: Clause) -> Option<&ClauseRecord> {
        self.records.iter().find(|r| r.clause == clause)
    }
}

/// Exponents, budgets and knobs for the checks. Polynomial rates `r_k` are
/// `sigma^-exp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditOptions {
    pub mixing_steps_exp: f64,
    pub stuck_steps_exp: f64,
    pub drift_rate_exp: f64,
    pub drift_constant_exp: f64,
    pub exit_frequency_exp: f64,
    /// `l` in the drift constant `sigma^-a e^{l / sigma}`; must be below `inner_radius`.
    pub ell: f64,
    /// Radius `m` of the ball that the interiors must cover.
    pub inner_radius: f64,
    /// Radius `M` of the ball that must hold every buffer.
    pub outer_radius: f64,
    /// Multipliers of `sigma` for the decay-rate fit.
    pub sweep: Vec<f64>,
    pub min_decay_rate: f64,
    pub min_r_squared: f64,
    pub conductance_tol: f64,
    pub cells_per_sigma: f64,
    pub starts: usize,
    pub max_stuck_replicas: u64,
    pub never_hitting_replicas: u64,
    pub escape_replicas: u64,
    pub escape_horizon_cap: u64,
    pub drift_points: usize,
    pub stay_floor: f64,
    pub stay_points: usize,
    pub exit_replicas: u64,
    pub exit_cap_factor: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            mixing_steps_exp: 6.0,
            stuck_steps_exp: 4.0,
            drift_rate_exp: 4.0,
            drift_constant_exp: 2.0,
            exit_frequency_exp: 2.0,
            ell: 0.45,
            inner_radius: 0.5,
            outer_radius: 4.0,
            sweep: vec![1.0, 0.9, 0.8, 0.7],
            min_decay_rate: 0.5,
            min_r_squared: 0.99,
            conductance_tol: 1e-9,
            cells_per_sigma: 40.0,
            starts: 5,
            max_stuck_replicas: 1_000_000,
            never_hitting_replicas: 2000,
            escape_replicas: 50,
            escape_horizon_cap: 10_000_000,
            drift_points: 2000,
            stay_floor: 0.01,
            stay_points: 400,
            exit_replicas: 200,
            exit_cap_factor: 100.0,
        }
    }
}

fn mc_verdict(k: u64, n: u64, bound: f64) -> (Verdict, f64, f64) {
    let upper = binomial_upper_95(k, n);
    let lower = binomial_lower_95(k, n);
    let v = if upper <= bound {
        Verdict::Pass
    } else if lower > bound {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    (v, upper, lower)
}

/// `count` points at the length quantiles `(k + 1/2) / count` of `set`
/// clipped to `window`.
fn spread(set: &IntervalUnion, window: (f64, f64), count: usize) -> Vec<f64> {
    let clipped = set.clip(window.0, window.1);
    let total = clipped.length();
    if total <= 0.0 || count == 0 {
        return Vec::new();
    }
    (0..count)
        .filter_map(|k| {
            let mut t = (k as f64 + 0.5) / count as f64 * total;
            for piece in clipped.intervals() {
                if t <= piece.length() {
                    return Some(piece.lo + t);
                }
                t -= piece.length();
            }
            None
        })
        .collect()
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        0.0
    };
    (slope, intercept, r2)
}

/// `Phi(S)` at `sigma * f` for each sweep multiplier `f`, as `(beta, Phi)`.
pub fn conductance_sweep(
    sigma: f64,
    set: &IntervalUnion,
    opts: &AuditOptions,
) -> Result<Vec<(f64, f64)>> {
    opts.sweep
        .iter()
        .map(|f| {
            let s = sigma * f;
            let phi =
                conductance_quadrature(&RwmKernel::mixture(s)?, set, opts.conductance_tol)?.phi;
            Ok((1.0 / s, phi))
        })
        .collect()
}

/// Raw measurements for one mode. Verdicts are formed later against bounds
/// that depend on which conductance is plugged in.
struct ModeMeasurements {
    tv: f64,
    grid_cells: usize,
    stuck: Vec<(u64, u64)>,
    stuck_horizon: u64,
    hitting: Vec<(u64, u64)>,
    hitting_horizon: u64,
}

fn decay_record(mode: Option<usize>, sweep: &[(f64, f64)], opts: &AuditOptions) -> ClauseRecord {
    let betas: Vec<f64> = sweep.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = sweep.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = least_squares(&betas, &logs);
    let rate = -slope;
    let pass = slope < 0.0 && r2 > opts.min_r_squared && rate >= opts.min_decay_rate;
    ClauseRecord {
        clause: Clause::SmallConductance,
        mode,
        quantity: "fitted c in Phi <= exp(-c/sigma)".into(),
        relation: Relation::AtLeast,
        required: opts.min_decay_rate,
        achieved: rate,
        stderr: 0.0,
        upper_95: None,
        method: Method::Quadrature,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        note: format!(
            "log Phi = {intercept:.4} {slope:+.4} beta over {} sigmas, R^2 = {r2:.6}",
            sweep.len()
        ),
        parts: Vec::new(),
    }
}

fn measure_mode(
    kernel: &RwmKernel,
    mode: &Mode,
    phi_floor: f64,
    opts: &AuditOptions,
    stream: StreamId,
) -> Result<ModeMeasurements> {
    let sigma = kernel.target().sigma();
    let beta = 1.0 / sigma;
    let window = kernel.target().window(DEFAULT_TAIL_RADIUS);
    let r1 = sigma.powf(-opts.mixing_steps_exp).ceil() as u64;
    let r2 = sigma.powf(-opts.stuck_steps_exp).ceil() as u64;

    // mixing of the restricted chain, on a grid covering the mode
    let restricted = RestrictedKernel::new(kernel.clone(), mode.set.clone())?;
    let span = mode.set.clip(window.0, window.1);
    if span.intervals().len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "mixing check needs a mode that is one interval near the mass, got {}",
            mode.set
        )));
    }
    let piece = span.intervals()[0];
    let cells = ((opts.cells_per_sigma * piece.length() / sigma).ceil() as usize).max(2);
    let grid = Grid::new(piece.lo, piece.hi, cells)?;
    let dk = build_grid_kernel(&restricted, &grid, &GridOptions::default())?;
    let power = dk.power(r1);
    let n = dk.n();
    let tv = (0..n)
        .filter(|&i| mode.good.contains(grid.center(i)))
        .map(|i| total_variation(&power[i * n..(i + 1) * n], dk.stationary()))
        .fold(0.0, f64::max);

    // leaving the shell: P[tau_{good ∪ S^c} > r2] from starts in cover \ good
    let shell_bound = beta.powi(-2) * phi_floor;
    let stuck_replicas = ((6.0 / shell_bound).ceil() as u64).clamp(1, opts.max_stuck_replicas);
    let target_set = mode.good.union(&mode.set.complement());
    let stuck = spread(&mode.shell(), window, opts.starts)
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let outcomes = replicate(
                stream.with_task(100 + k as u64),
                stuck_replicas,
                |_, rng| hitting_time(kernel, x, &target_set, r2, rng).map(|h| h.is_censored()),
            );
            let stuck = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
            Ok((stuck.iter().filter(|&&s| s).count() as u64, stuck_replicas))
        })
        .collect::<Result<Vec<_>>>()?;

    // reaching the tail before leaving the mode, from starts in good
    let horizon = r1 + r2 + 1;
    let outside_cover = mode.cover.complement();
    let mut starts = spread(&mode.good, window, opts.starts);
    starts.push(mode.privileged_point);
    let hitting = starts
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let outcomes = replicate(
                stream.with_task(200 + k as u64),
                opts.never_hitting_replicas,
                |_, rng| {
                    hitting_time(kernel, x, &outside_cover, horizon - 1, rng)
                        .map(|h| h.exit_state.is_some_and(|y| mode.set.contains(y)))
                },
            );
            let hits = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
            Ok((
                hits.iter().filter(|&&h| h).count() as u64,
                opts.never_hitting_replicas,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ModeMeasurements {
        tv,
        grid_cells: n,
        stuck,
        stuck_horizon: r2,
        hitting,
        hitting_horizon: horizon,
    })
}

fn mc_record(
    clause: Clause,
    mode: Option<usize>,
    quantity: String,
    counts: &[(u64, u64)],
    bound: f64,
    note: String,
) -> ClauseRecord {
    if counts.is_empty() {
        return ClauseRecord {
            clause,
            mode,
            quantity,
            relation: Relation::AtMost,
            required: bound,
            achieved: 0.0,
            stderr: 0.0,
            upper_95: Some(0.0),
            method: Method::MonteCarlo,
            verdict: Verdict::Pass,
            note: "no starting points: vacuous supremum".into(),
            parts: Vec::new(),
        };
    }
    let mut verdicts = Vec::new();
    let mut worst_upper: f64 = 0.0;
    let mut worst = (0.0, 0.0);
    for &(k, n) in counts {
        let (v, upper, _) = mc_verdict(k, n, bound);
        verdicts.push(v);
        worst_upper = worst_upper.max(upper);
        let p = k as f64 / n as f64;
        if p >= worst.0 {
            worst = (p, (p * (1.0 - p) / n as f64).sqrt());
        }
    }
    ClauseRecord {
        clause,
        mode,
        quantity,
        relation: Relation::AtMost,
        required: bound,
        achieved: worst.0,
        stderr: worst.1,
        upper_95: Some(worst_upper),
        method: Method::MonteCarlo,
        verdict: Verdict::worst(verdicts),
        note,
        parts: Vec::new(),
    }
}

fn mode_records(
    mode_index: usize,
    m: &ModeMeasurements,
    sigma: f64,
    decay: ClauseRecord,
    phi: f64,
) -> Vec<ClauseRecord> {
    let beta = 1.0 / sigma;
    let bound = beta.powi(-2) * phi;
    let replicas = |c: &[(u64, u64)]| c.first().map_or(0, |p| p.1);
    vec![
        decay,
        ClauseRecord {
            clause: Clause::RapidMixing,
            mode: Some(mode_index),
            quantity: "sup over good of TV(restricted chain after r1 steps, pi|S)".into(),
            relation: Relation::AtMost,
            required: bound,
            achieved: m.tv,
            stderr: 0.0,
            upper_95: None,
            method: Method::Grid,
            verdict: if m.tv <= bound {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: format!("{} grid cells", m.grid_cells),
            parts: Vec::new(),
        },
        mc_record(
            Clause::NeverStuck,
            Some(mode_index),
            "sup over cover\\good of P[not in good or out of S by r2]".into(),
            &m.stuck,
            bound,
            format!(
                "r2 = {}, {} replicas per start",
                m.stuck_horizon,
                replicas(&m.stuck)
            ),
        ),
        mc_record(
            Clause::NeverHitting,
            Some(mode_index),
            "sup over good of P[tail before min(r1 + r2 + 1, exit)]".into(),
            &m.hitting,
            phi.powi(4),
            format!(
                "horizon {}, {} replicas per start",
                m.hitting_horizon,
                replicas(&m.hitting)
            ),
        ),
    ]
}

/// The four single-mode clauses for `mode`, with its own conductance.
pub fn check_assumptions_1(
    kernel: &RwmKernel,
    mode: &Mode,
    mode_index: usize,
    opts: &AuditOptions,
    stream: StreamId,
) -> Result<Vec<ClauseRecord>> {
    mode.validate()?;
    let sigma = kernel.target().sigma();
    let sweep = conductance_sweep(sigma, &mode.set, opts)?;
    let phi = conductance_quadrature(kernel, &mode.set, opts.conductance_tol)?.phi;
    let m = measure_mode(kernel, mode, phi, opts, stream.with_task(mode_index as u64))?;
    Ok(mode_records(
        mode_index,
        &m,
        sigma,
        decay_record(Some(mode_index), &sweep, opts),
        phi,
    ))
}

fn aggregate(clause: Clause, parts: Vec<ClauseRecord>) -> ClauseRecord {
    let verdict = Verdict::worst(parts.iter().map(|p| p.verdict));
    let first = &parts[0];
    let worst = parts
        .iter()
        .max_by(|a, b| {
            let key = |r: &ClauseRecord| match r.relation {
                Relation::AtMost => r.achieved - r.required,
                Relation::AtLeast => r.required - r.achieved,
            };
            (a.verdict, key(a))
                .partial_cmp(&(b.verdict, key(b)))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(first);
    ClauseRecord {
        clause,
        mode: None,
        quantity: worst.quantity.clone(),
        relation: worst.relation,
        required: worst.required,
        achieved: worst.achieved,
        stderr: worst.stderr,
        upper_95: worst.upper_95,
        method: worst.method,
        verdict,
        note: format!("worst of {} modes", parts.len()),
        parts,
    }
}

/// Every clause of both assumption sets for `partition` at the kernel's sigma.
pub fn check_assumptions_2(
    kernel: &RwmKernel,
    partition: &Partition,
    opts: &AuditOptions,
    stream: StreamId,
) -> Result<AssumptionReport> {
    let k = partition.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two modes, got {k}"
        )));
    }
    let target = kernel.target();
    let sigma = target.sigma();
    let window = target.window(DEFAULT_TAIL_RADIUS);
    let modes = partition.modes();

    let phis: Vec<f64> = modes
        .iter()
        .map(|m| Ok(conductance_quadrature(kernel, &m.set, opts.conductance_tol)?.phi))
        .collect::<Result<_>>()?;
    let phi_min = phis.iter().copied().fold(f64::INFINITY, f64::min);
    let sweeps: Vec<Vec<(f64, f64)>> = modes
        .iter()
        .map(|m| conductance_sweep(sigma, &m.set, opts))
        .collect::<Result<_>>()?;
    let max_sweep: Vec<(f64, f64)> = (0..opts.sweep.len())
        .map(|j| {
            (
                sweeps[0][j].0,
                sweeps.iter().map(|s| s[j].1).fold(0.0, f64::max),
            )
        })
        .collect();

    // single-mode clauses with each mode's own conductance, and again with
    // the substitutions (max for the decay fit, min for the rest)
    let mut own: Vec<Vec<ClauseRecord>> = Vec::new();
    let mut substituted: Vec<ClauseRecord> = Vec::new();
    for (i, mode) in modes.iter().enumerate() {
        let m = measure_mode(kernel, mode, phi_min, opts, stream.with_task(i as u64))?;
        own.push(mode_records(
            i,
            &m,
            sigma,
            decay_record(Some(i), &sweeps[i], opts),
            phis[i],
        ));
        substituted.extend(mode_records(
            i,
            &m,
            sigma,
            decay_record(Some(i), &max_sweep, opts),
            phi_min,
        ));
    }
    let mut records = Vec::new();
    for c in 0..4 {
        let parts: Vec<ClauseRecord> = own.iter().map(|r| r[c].clone()).collect();
        records.push(aggregate(parts[0].clause, parts));
    }
    let mut meta = aggregate(Clause::ModeMetastability, substituted);
    meta.note = format!("single-mode clauses per mode with Phi_max = {:e} in the decay fit and Phi_min = {phi_min:e} elsewhere", max_sweep[0].1);
    records.push(meta);

    records.push(lyapunov_record(kernel, partition, opts)?);
    records.push(no_escape_record(
        kernel,
        partition,
        phi_min,
        opts,
        stream.with_task(300),
    )?);
    records.push(stay_record(kernel, partition, window, opts)?);
    records.push(entry_record(kernel, partition, window, phi_min, opts)?);
    records.push(connectedness_record(
        kernel,
        partition,
        &phis,
        sigma,
        opts,
        stream.with_task(400),
    )?);

    let verdict = Verdict::worst(records.iter().map(|r| r.verdict));
    Ok(AssumptionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        sigma,
        disclaimer: DISCLAIMER.into(),
        partition: partition.clone(),
        records,
        verdict,
    })
}

fn lyapunov_record(
    kernel: &RwmKernel,
    partition: &Partition,
    opts: &AuditOptions,
) -> Result<ClauseRecord> {
    let sigma = kernel.target().sigma();
    let beta = 1.0 / sigma;
    let ball = |r: f64| IntervalUnion::from(Interval::open(-r, r));
    let outer_ok = partition
        .cover_union()
        .is_subset_of(&ball(opts.outer_radius));
    let inner_ok = ball(opts.inner_radius).is_subset_of(&partition.good_union());
    let ell_ok = opts.ell >= 0.0 && opts.ell < opts.inner_radius;
    let min_alpha = sigma.powf(opts.drift_rate_exp);
    let c_cap = sigma.powf(-opts.drift_constant_exp) * (opts.ell * beta).exp();
    let mut alphas: Vec<f64> = DEFAULT_ALPHAS
        .iter()
        .copied()
        .filter(|&a| a > min_alpha)
        .collect();
    alphas.push(min_alpha);
    let (lo, hi) = kernel.target().window(DEFAULT_TAIL_RADIUS);
    let problem = DriftProblem {
        v_scale: beta,
        centers: partition
            .modes()
            .iter()
            .map(|m| m.privileged_point)
            .collect(),
        region: Interval::closed(lo, hi).into(),
        alphas,
        x_points: opts.drift_points,
        c_cap,
    };
    let geometry =
        format!("covers inside B_M: {outer_ok}, B_m inside interiors: {inner_ok}, l < m: {ell_ok}");
    Ok(match drift_check(kernel, &problem) {
        Ok(cert) => ClauseRecord {
            clause: Clause::LyapunovTails,
            mode: None,
            quantity: "drift rate alpha with C within sigma^-a e^{l/sigma}".into(),
            relation: Relation::AtLeast,
            required: min_alpha,
            achieved: cert.alpha,
            stderr: 0.0,
            upper_95: None,
            method: Method::Quadrature,
            verdict: if outer_ok && inner_ok && ell_ok && cert.alpha >= min_alpha {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: format!(
                "C = {:.4e} (cap {c_cap:.4e}) on {}; {geometry}",
                cert.c, cert.region
            ),
            parts: Vec::new(),
        },
        Err(Error::DriftNotCertified {
            best_alpha,
            best_margin,
        }) => ClauseRecord {
            clause: Clause::LyapunovTails,
            mode: None,
            quantity: "drift rate alpha with C within sigma^-a e^{l/sigma}".into(),
            relation: Relation::AtLeast,
            required: min_alpha,
            achieved: 0.0,
            stderr: 0.0,
            upper_95: None,
            method: Method::Quadrature,
            verdict: Verdict::Fail,
            note: format!(
                "no rate certified; best alpha {best_alpha} misses the cap by {:.4e}; {geometry}",
                -best_margin
            ),
            parts: Vec::new(),
        },
        Err(e) => return Err(e),
    })
}

fn no_escape_record(
    kernel: &RwmKernel,
    partition: &Partition,
    phi_min: f64,
    opts: &AuditOptions,
    stream: StreamId,
) -> Result<ClauseRecord> {
    let window = kernel.target().window(DEFAULT_TAIL_RADIUS);
    let wanted = phi_min.powi(-2).ceil();
    let capped = wanted > opts.escape_horizon_cap as f64;
    let horizon = if capped {
        opts.escape_horizon_cap
    } else {
        wanted as u64
    };
    let outside = partition.cover_union().complement();
    let mut starts = Vec::new();
    for m in partition.modes() {
        starts.extend(spread(&m.good, window, opts.starts));
        starts.push(m.privileged_point);
    }
    let counts = starts
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let outcomes = replicate(
                stream.with_task(300 + k as u64),
                opts.escape_replicas,
                |_, rng| {
                    hitting_time(kernel, x, &outside, horizon.saturating_sub(1), rng)
                        .map(|h| !h.is_censored())
                },
            );
            let hits = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
            Ok((
                hits.iter().filter(|&&h| h).count() as u64,
                opts.escape_replicas,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let note = if capped {
        format!(
            "horizon capped at {horizon} (wanted {wanted:e}); {} replicas per start",
            opts.escape_replicas
        )
    } else {
        format!(
            "horizon {horizon}; {} replicas per start",
            opts.escape_replicas
        )
    };
    Ok(mc_record(
        Clause::NoEscape,
        None,
        "sup over interiors of P[leave all covers before Phi_min^-2]".into(),
        &counts,
        phi_min.powi(4),
        note,
    ))
}

/// Grid over `set` within `window`, denser towards its finite endpoints.
fn probe_points(set: &IntervalUnion, window: (f64, f64), count: usize, sigma: f64) -> Vec<f64> {
    let clipped = set.clip(window.0, window.1);
    let mut xs = spread(&clipped, window, count);
    for piece in set.intervals() {
        for (end, inward) in [(piece.lo, 1.0), (piece.hi, -1.0)] {
            if end.is_finite() {
                for d in [0.0, 1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5] {
                    let x = end + inward * d * sigma;
                    if set.contains(x) {
                        xs.push(x);
                    }
                }
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn stay_record(
    kernel: &RwmKernel,
    partition: &Partition,
    window: (f64, f64),
    opts: &AuditOptions,
) -> Result<ClauseRecord> {
    let sigma = kernel.target().sigma();
    let integrator = Integrator::new(1e-12, 1e-9);
    let mut parts = Vec::new();
    for (i, m) in partition.modes().iter().enumerate() {
        let outside = m.set.complement();
        let xs = probe_points(&m.set, window, opts.stay_points, sigma);
        let stays = xs
            .par_iter()
            .map(|&x| Ok(1.0 - move_probability(kernel, x, &outside, &integrator)?))
            .collect::<Result<Vec<f64>>>()?;
        let lowest = stays.iter().copied().fold(f64::INFINITY, f64::min);
        parts.push(ClauseRecord {
            clause: Clause::StayProbability,
            mode: Some(i),
            quantity: "inf over the mode of the one-step stay probability".into(),
            relation: Relation::AtLeast,
            required: opts.stay_floor,
            achieved: lowest,
            stderr: 0.0,
            upper_95: None,
            method: Method::Quadrature,
            verdict: if lowest >= opts.stay_floor {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: format!("{} points", xs.len()),
            parts: Vec::new(),
        });
    }
    Ok(aggregate(Clause::StayProbability, parts))
}

fn entry_record(
    kernel: &RwmKernel,
    partition: &Partition,
    window: (f64, f64),
    phi_min: f64,
    opts: &AuditOptions,
) -> Result<ClauseRecord> {
    let sigma = kernel.target().sigma();
    let bound = phi_min.powi(4);
    let integrator = Integrator::new(1e-3 * bound, 1e-6);
    let modes = partition.modes();
    let mut parts = Vec::new();
    for (i, mi) in modes.iter().enumerate() {
        let xs = probe_points(&mi.set, window, opts.stay_points, sigma);
        for (j, mj) in modes.iter().enumerate() {
            if i == j {
                continue;
            }
            let tail = mj.set.difference(&mj.good);
            let masses = xs
                .par_iter()
                .map(|&x| move_probability(kernel, x, &tail, &integrator))
                .collect::<Result<Vec<f64>>>()?;
            let sup = masses.iter().copied().fold(0.0, f64::max);
            parts.push(ClauseRecord {
                clause: Clause::EntryMass,
                mode: Some(i),
                quantity: format!(
                    "sup over mode {i} of the one-step mass into mode {j} outside its interior"
                ),
                relation: Relation::AtMost,
                required: bound,
                achieved: sup,
                stderr: 1e-3 * bound,
                upper_95: None,
                method: Method::Quadrature,
                verdict: if sup < bound {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                note: format!("{} points", xs.len()),
                parts: Vec::new(),
            });
        }
    }
    Ok(aggregate(Clause::EntryMass, parts))
}

/// Largest `t` such that edges with weight `>= t` connect all `k` vertices.
fn bottleneck(k: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut sorted = edges.to_vec();
    sorted.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut joined = 1;
    for (a, b, w) in sorted {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            joined += 1;
            if joined == k {
                return w;
            }
        }
    }
    if k <= 1 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn connectedness_record(
    kernel: &RwmKernel,
    partition: &Partition,
    phis: &[f64],
    sigma: f64,
    opts: &AuditOptions,
    stream: StreamId,
) -> Result<ClauseRecord> {
    let k = partition.len();
    let threshold = sigma.powf(opts.exit_frequency_exp);
    let mut tallies = Vec::new();
    for (i, m) in partition.modes().iter().enumerate() {
        let cap = (opts.exit_cap_factor / phis[i]).ceil() as u64;
        tallies.push(exit_distribution(
            kernel,
            m.privileged_point,
            i,
            partition,
            cap,
            stream.with_task(400 + i as u64),
            opts.exit_replicas,
        )?);
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut point = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let (a, b) = (&tallies[i], &tallies[j]);
            let lo = binomial_lower_95(a.counts[j], a.replicas)
                .min(binomial_lower_95(b.counts[i], b.replicas));
            let hi = binomial_upper_95(a.counts[j], a.replicas)
                .min(binomial_upper_95(b.counts[i], b.replicas));
            let p = (a.counts[j] as f64 / a.replicas as f64)
                .min(b.counts[i] as f64 / b.replicas as f64);
            lower.push((i, j, lo));
            upper.push((i, j, hi));
            point.push((i, j, p));
        }
    }
    let certain = bottleneck(k, &lower);
    let possible = bottleneck(k, &upper);
    let verdict = if certain >= threshold {
        Verdict::Pass
    } else if possible < threshold {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    let censored: u64 = tallies.iter().map(|t| t.censored).sum();
    Ok(ClauseRecord {
        clause: Clause::Connectedness,
        mode: None,
        quantity: "bottleneck exit frequency of the mode graph".into(),
        relation: Relation::AtLeast,
        required: threshold,
        achieved: bottleneck(k, &point),
        stderr: 0.0,
        upper_95: None,
        method: Method::MonteCarlo,
        verdict,
        note: format!(
            "exits from each privileged point, {} replicas per mode, {censored} censored; lower 95% bottleneck {certain:.4}",
            opts.exit_replicas
        ),
        parts: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_ordering() {
        assert_eq!(
            Verdict::worst([Verdict::Pass, Verdict::Inconclusive]),
            Verdict::Inconclusive
        );
        assert_eq!(
            Verdict::worst([Verdict::Fail, Verdict::Inconclusive]),
            Verdict::Fail
        );
        assert_eq!(Verdict::worst([]), Verdict::Pass);
    }

    #[test]
    fn mc_verdict_uses_both_ends() {
        assert_eq!(mc_verdict(0, 10_000, 1e-3).0, Verdict::Pass);
        assert_eq!(mc_verdict(0, 100, 1e-3).0, Verdict::Inconclusive);
        assert_eq!(mc_verdict(50, 100, 1e-3).0, Verdict::Fail);
    }

    #[test]
    fn bottleneck_of_path_and_disconnected_graphs() {
        assert_eq!(bottleneck(3, &[(0, 1, 0.5), (1, 2, 0.2), (0, 2, 0.1)]), 0.2);
        assert_eq!(bottleneck(3, &[(0, 1, 0.5)]), 0.0);
        assert_eq!(bottleneck(2, &[(0, 1, 0.9)]), 0.9);
    }

    #[test]
    fn spread_stays_inside() {
        let set: IntervalUnion = "(-4, -3] U [3, 4)".parse().unwrap();
        let xs = spread(&set, (-10.0, 10.0), 4);
        assert_eq!(xs, vec![-3.75, -3.25, 3.25, 3.75]);
        assert!(spread(&IntervalUnion::empty(), (-1.0, 1.0), 3).is_empty());
    }

    #[test]
    fn least_squares_on_a_line() {
        let (slope, intercept, r2) = least_squares(&[1.0, 2.0, 3.0], &[-1.0, -3.0, -5.0]);
        assert!(
            (slope + 2.0).abs() < 1e-12
                && (intercept - 1.0).abs() < 1e-12
                && (r2 - 1.0).abs() < 1e-12
        );
    }

    #[test]
    fn one_mode_partition_is_rejected() {
        let kernel = RwmKernel::mixture(0.3).unwrap();
        let single = Partition::new(vec![Mode {
            set: IntervalUnion::full(),
            good: "(-3, 3)".parse().unwrap(),
            cover: "(-4, 4)".parse().unwrap(),
            privileged_point: -1.0,
        }])
        .unwrap();
        let r = check_assumptions_2(
            &kernel,
            &single,
            &AuditOptions::default(),
            StreamId::new(0, 0, 0, 0),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn empty_shell_is_vacuous() {
        let r = mc_record(
            Clause::NeverStuck,
            Some(0),
            "q".into(),
            &[],
            1e-3,
            String::new(),
        );
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.achieved, 0.0);
    }
}
