use std::path::PathBuf;
use std::time::Instant;

use metastable_core::metastability::Relation;
use metastable_core::{
    build_grid_kernel, check_assumptions_2, cheeger_check, conductance_mc, conductance_quadrature,
    hitting_time, metastability_ratios, replicate, spectral_gap_with_tolerance,
    threshold_conductance, AssumptionReport, DiscreteKernel, Grid, GridOptions, RwmKernel,
    SpectrumResult, StreamId, ThresholdCut, Verdict,
};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, Format};
use crate::error::{CliError, Result};
use crate::output::{write_json, ResultRow, RowSink, CSV_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub verdict: Verdict,
    pub note: String,
}

/// Whether `|-2 sigma^2 log Phi - 1|` never grows as sigma decreases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub monotone: bool,
    /// `(sigma, distance)` in decreasing sigma.
    pub distances: Vec<(f64, f64)>,
    /// First sigma at which the distance went up.
    pub first_increase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub summaries: Vec<SigmaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<Trend>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub assumption_reports: Vec<AssumptionReport>,
    pub verdict: Verdict,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    /// 0 = all PASS, 1 = any FAIL, 3 = INCONCLUSIVE and nothing worse.
    pub fn exit_code(&self) -> i32 {
        exit_code(self.report.verdict)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} (seed {})\n",
            self.report.experiment, self.report.config.seed
        );
        for m in &self.report.summaries {
            s += &format!(
                "  sigma {:<6} {:<13} {}\n",
                m.sigma,
                m.verdict.as_str(),
                m.note
            );
        }
        if let Some(t) = &self.report.trend {
            match t.first_increase {
                None => s += "  distance to 1 is non-increasing as sigma decreases\n",
                Some(at) => s += &format!("  distance to 1 increases at sigma {at}\n"),
            }
        }
        for r in &self.report.assumption_reports {
            s += &format!("  assumption audit at sigma {}:\n", r.sigma);
            for rec in &r.records {
                let rel = match rec.relation {
                    Relation::AtMost => "<=",
                    Relation::AtLeast => ">=",
                };
                s += &format!(
                    "    {:<20} {:<13} {:.4e} {rel} {:.4e}\n",
                    rec.clause.id(),
                    rec.verdict.as_str(),
                    rec.achieved,
                    rec.required
                );
            }
        }
        s += &format!("verdict: {}\n", self.report.verdict.as_str());
        for f in &self.files {
            s += &format!("wrote {}\n", f.display());
        }
        s
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 3,
    }
}

/// Run on a pool of `workers` threads, or on the global pool for `None`.
pub fn run_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<Outcome> {
    match workers {
        None => run(config),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {k} workers: {e}")))?;
            pool.install(|| run(config))
        }
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = config.experiment.name();
    let mut files = Vec::new();
    let mut sink = match config.format {
        Format::Csv => {
            let path = dir.join(format!("{name}.csv"));
            files.push(path.clone());
            RowSink::csv(&path)?
        }
        Format::Json => RowSink::memory(),
    };
    let mut ctx = Context {
        config,
        sink: &mut sink,
        summaries: Vec::new(),
        files: Vec::new(),
    };
    let mut trend = None;
    let mut reports = Vec::new();
    match config.experiment {
        Experiment::ConductanceSweep => trend = Some(conductance_sweep(&mut ctx)?),
        Experiment::GapSweep => grid_sweep(&mut ctx, true)?,
        Experiment::CheegerAudit => grid_sweep(&mut ctx, false)?,
        Experiment::HittingTimes => hitting_times(&mut ctx)?,
        Experiment::VerifyAssumptions => reports = verify_assumptions(&mut ctx)?,
    }
    let Context {
        summaries,
        files: extra,
        ..
    } = ctx;
    files.extend(extra);

    let mut verdict = Verdict::worst(summaries.iter().map(|s| s.verdict));
    if trend.as_ref().is_some_and(|t: &Trend| !t.monotone) {
        verdict = Verdict::Fail;
    }
    let mut echoed = config.clone();
    // keep reports independent of where they are written
    echoed.output_dir = PathBuf::new();
    let report = RunReport {
        schema_version: CSV_SCHEMA_VERSION,
        experiment: config.experiment,
        config: echoed,
        summaries,
        trend,
        assumption_reports: reports,
        verdict,
        rows: sink.into_rows(),
    };
    match config.format {
        Format::Json => {
            let path = dir.join(format!("{name}.json"));
            write_json(&path, &report)?;
            files.push(path);
        }
        Format::Csv if !report.assumption_reports.is_empty() => {
            let path = dir.join(format!("{name}-report.json"));
            write_json(&path, &report.assumption_reports)?;
            files.push(path);
        }
        Format::Csv => {}
    }
    Ok(Outcome { report, files })
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    sink: &'a mut RowSink,
    summaries: Vec<SigmaSummary>,
    files: Vec<PathBuf>,
}

/// Rows for one sigma, pushed only once the sigma has finished.
struct Rows<'a> {
    config: &'a ExperimentConfig,
    sigma: f64,
    started: Instant,
    rows: Vec<ResultRow>,
}

impl<'a> Rows<'a> {
    fn new(config: &'a ExperimentConfig, sigma: f64) -> Self {
        Self {
            config,
            sigma,
            started: Instant::now(),
            rows: Vec::new(),
        }
    }

    fn add(&mut self, quantity: &str, value: f64, stderr: Option<f64>, method: &str) {
        let wall_time_ms = self
            .config
            .timing
            .then(|| self.started.elapsed().as_millis() as u64);
        self.rows.push(ResultRow {
            schema_version: CSV_SCHEMA_VERSION,
            experiment: self.config.experiment.name().to_string(),
            sigma: self.sigma,
            quantity: quantity.to_string(),
            value,
            stderr,
            method: method.to_string(),
            seed: self.config.seed,
            wall_time_ms,
        });
    }
}

impl Context<'_> {
    /// Compute one sigma. A core error turns into a single `aborted` row and
    /// a FAIL summary; configuration and IO errors stop the run.
    fn sigma_row<F>(&mut self, sigma: f64, body: F) -> Result<()>
    where
        F: FnOnce(&mut Rows, &mut Vec<PathBuf>) -> Result<(Verdict, String)>,
    {
        let mut rows = Rows::new(self.config, sigma);
        let mut files = Vec::new();
        let (verdict, note) = match body(&mut rows, &mut files) {
            Ok(v) => v,
            Err(CliError::Core(e)) => {
                rows.rows.clear();
                rows.add("aborted", f64::NAN, None, "error");
                (Verdict::Fail, format!("aborted: {e}"))
            }
            Err(e) => return Err(e),
        };
        for r in rows.rows {
            self.sink.push(r)?;
        }
        self.files.extend(files);
        self.summaries.push(SigmaSummary {
            sigma,
            verdict,
            note,
        });
        Ok(())
    }
}

fn stream(config: &ExperimentConfig, sigma_index: usize) -> StreamId {
    StreamId::new(
        config.seed,
        config.experiment.stream_code(),
        sigma_index as u64,
        0,
    )
}

pub fn bracket(sigma: f64) -> (f64, f64) {
    let t = sigma * sigma * sigma.ln();
    (1.0 + 9.0 * t, 1.0 - 61.0 * t)
}

fn conductance_sweep(ctx: &mut Context) -> Result<Trend> {
    let config = ctx.config;
    let samples = config.replicas();
    let mut distances = Vec::new();
    for (idx, &sigma) in config.sigmas.iter().enumerate() {
        let mut distance = None;
        ctx.sigma_row(sigma, |rows, _| {
            let kernel = RwmKernel::mixture(sigma)?;
            let quad = conductance_quadrature(&kernel, &config.set, config.tolerances.quadrature)?;
            let stat = -2.0 * sigma * sigma * quad.phi.ln();
            let (lo, hi) = bracket(sigma);
            let inside = lo <= stat && stat <= hi;
            rows.add("phi", quad.phi, Some(0.0), "quadrature");
            rows.add("statistic", stat, None, "quadrature");
            rows.add("bracket_lower", lo, None, "bound");
            rows.add("bracket_upper", hi, None, "bound");
            rows.add("in_bracket", inside as u8 as f64, None, "check");
            rows.add("distance_to_one", (stat - 1.0).abs(), None, "quadrature");
            let mut note = format!(
                "phi {:.6e}, statistic {stat:.6} in [{lo:.4}, {hi:.4}]",
                quad.phi
            );
            if samples > 0 {
                let mc = conductance_mc(&kernel, &config.set, samples, stream(config, idx))?;
                rows.add("phi", mc.phi, Some(mc.stderr), "monte_carlo");
                let z = if mc.stderr > 0.0 {
                    (mc.phi - quad.phi) / mc.stderr
                } else {
                    f64::NAN
                };
                rows.add("mc_deviation_in_stderr", z, None, "monte_carlo");
                note += &format!(", MC {:.6e} ± {:.1e}", mc.phi, mc.stderr);
            }
            distance = Some((stat - 1.0).abs());
            let v = if inside { Verdict::Pass } else { Verdict::Fail };
            Ok((v, note))
        })?;
        if let Some(d) = distance {
            distances.push((sigma, d));
        }
    }
    distances.sort_by(|a, b| b.0.total_cmp(&a.0));
    let first_increase = distances
        .windows(2)
        .find(|w| w[1].1 > w[0].1)
        .map(|w| w[1].0);
    Ok(Trend {
        monotone: first_increase.is_none(),
        distances,
        first_increase,
    })
}

/// Grid chain, spectrum and threshold cut at one sigma.
pub struct GridAnalysis {
    pub chain: DiscreteKernel,
    pub spectrum: SpectrumResult,
    pub cut: ThresholdCut,
}

pub fn grid_for(config: &ExperimentConfig, sigma: f64) -> Result<Grid> {
    let default = Grid::default_for(sigma, config.sigma_max())?;
    Ok(match config.grid_n {
        Some(n) => Grid::new(default.lo(), default.hi(), n)?,
        None => default,
    })
}

pub fn analyse_grid(config: &ExperimentConfig, sigma: f64, grid: &Grid) -> Result<GridAnalysis> {
    let kernel = RwmKernel::mixture(sigma)?;
    let opts = GridOptions {
        detailed_balance_bound: config.tolerances.detailed_balance,
        ..GridOptions::default()
    };
    let chain = build_grid_kernel(&kernel, grid, &opts)?;
    let spectrum = spectral_gap_with_tolerance(&chain, config.tolerances.eigen)?;
    let cut = threshold_conductance(&chain)?;
    Ok(GridAnalysis {
        chain,
        spectrum,
        cut,
    })
}

fn grid_sweep(ctx: &mut Context, with_ratios: bool) -> Result<()> {
    let config = ctx.config;
    for &sigma in &config.sigmas {
        ctx.sigma_row(sigma, |rows, files| {
            let grid = grid_for(config, sigma)?;
            let a = analyse_grid(config, sigma, &grid)?;
            let gap = a.spectrum.gap;
            let cheeger = cheeger_check(gap, a.cut.phi);
            rows.add("grid_cells", grid.n() as f64, None, "grid");
            rows.add(
                "detailed_balance_residual",
                a.chain.detailed_balance_residual(),
                None,
                "grid",
            );
            rows.add("spectral_gap", gap, None, "grid");
            rows.add("lambda2", a.spectrum.lambda2, None, "grid");
            rows.add("lambda_min", a.spectrum.lambda_min, None, "grid");
            rows.add("threshold_phi", a.cut.phi, None, "grid");
            rows.add("cheeger_lower_margin", cheeger.lower_margin, None, "grid");
            rows.add("cheeger_upper_margin", cheeger.upper_margin, None, "grid");
            rows.add("cheeger_pass", cheeger.pass as u8 as f64, None, "check");
            let mut note = format!(
                "n {}, gap {gap:.6e}, threshold phi {:.6e}, Cheeger {}",
                grid.n(),
                a.cut.phi,
                if cheeger.pass { "holds" } else { "violated" }
            );
            if with_ratios {
                let kernel = RwmKernel::mixture(sigma)?;
                let phi =
                    conductance_quadrature(&kernel, &config.set, config.tolerances.quadrature)?.phi;
                rows.add("phi", phi, Some(0.0), "quadrature");
                let ratio =
                    metastability_ratios(gap, phi, &[], phi, config.ratio_epsilon)?.gap_ratio;
                rows.add(
                    "log_spectral_gap_over_log_phi",
                    ratio,
                    None,
                    "grid+quadrature",
                );
                note += &format!(", log ratio {ratio:.4}");
                if config.refine {
                    let fine = Grid::new(grid.lo(), grid.hi(), 2 * grid.n())?;
                    let fine_gap = analyse_grid(config, sigma, &fine)?.spectrum.gap;
                    rows.add("spectral_gap_refined", fine_gap, None, "grid");
                    rows.add(
                        "refinement_change",
                        (fine_gap - gap).abs() / fine_gap,
                        None,
                        "grid",
                    );
                }
            }
            if config.dump_matrix {
                let path = config.output_dir.join(format!(
                    "{}-matrix-sigma{sigma}.txt",
                    config.experiment.name()
                ));
                let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                a.chain
                    .write_dense(std::io::BufWriter::new(file))
                    .map_err(|e| CliError::io(&path, e))?;
                files.push(path);
            }
            let v = if cheeger.pass {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok((v, note))
        })?;
    }
    Ok(())
}

fn hitting_times(ctx: &mut Context) -> Result<()> {
    let config = ctx.config;
    let replicas = config.replicas();
    let target_set = config.set.complement();
    for (idx, &sigma) in config.sigmas.iter().enumerate() {
        ctx.sigma_row(sigma, |rows, _| {
            let kernel = RwmKernel::mixture(sigma)?;
            let phi =
                conductance_quadrature(&kernel, &config.set, config.tolerances.quadrature)?.phi;
            let cap = config.hitting_cap.unwrap_or((100.0 / phi).ceil() as u64);
            let results = replicate(stream(config, idx), replicas, |_, rng| {
                hitting_time(&kernel, config.start, &target_set, cap, rng)
            });
            let results = results
                .into_iter()
                .collect::<metastable_core::Result<Vec<_>>>()?;
            let uncensored: Vec<Option<u64>> = results
                .iter()
                .filter(|r| !r.is_censored())
                .map(|r| r.tau)
                .collect();
            let censored = results.len() - uncensored.len();
            let diag = metastability_ratios(phi, phi, &uncensored, phi, config.ratio_epsilon)?;
            let mut ratios = diag.hitting_ratios.iter();
            for r in &results {
                match r.tau {
                    Some(t) => {
                        rows.add("tau", t as f64, None, "monte_carlo");
                        rows.add(
                            "log_tau_over_log_phi",
                            *ratios.next().expect("one ratio per tau"),
                            None,
                            "monte_carlo",
                        );
                    }
                    None => rows.add("tau", f64::NAN, None, "censored"),
                }
            }
            let censored_fraction = censored as f64 / replicas as f64;
            rows.add("phi", phi, Some(0.0), "quadrature");
            rows.add("cap", cap as f64, None, "config");
            rows.add("censored_fraction", censored_fraction, None, "monte_carlo");
            rows.add(
                "median_log_ratio",
                diag.median_hitting_ratio,
                None,
                "monte_carlo",
            );
            rows.add(
                "fraction_ratio_above",
                diag.fraction_above,
                None,
                "monte_carlo",
            );
            let logs: Vec<f64> = uncensored
                .iter()
                .flatten()
                .map(|&t| (t.max(1) as f64).ln())
                .collect();
            if !logs.is_empty() {
                let gm = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
                rows.add(
                    "geometric_mean_tau_times_phi",
                    gm * phi,
                    None,
                    "monte_carlo",
                );
            }
            let ok = (0.8..=1.2).contains(&diag.median_hitting_ratio)
                && diag.fraction_above < 0.1
                && censored_fraction < 0.01;
            let note = format!(
                "median ratio {:.4}, above {:.2}: {:.3}, censored {censored}/{replicas}",
                diag.median_hitting_ratio,
                1.0 + config.ratio_epsilon,
                diag.fraction_above
            );
            Ok((if ok { Verdict::Pass } else { Verdict::Fail }, note))
        })?;
    }
    Ok(())
}

fn verify_assumptions(ctx: &mut Context) -> Result<Vec<AssumptionReport>> {
    let config = ctx.config;
    let partition = config.partition()?;
    let mut reports = Vec::new();
    for (idx, &sigma) in config.sigmas.iter().enumerate() {
        ctx.sigma_row(sigma, |rows, _| {
            let kernel = RwmKernel::mixture(sigma)?;
            let report =
                check_assumptions_2(&kernel, &partition, &config.audit, stream(config, idx))?;
            for rec in &report.records {
                let id = rec.clause.id();
                let stderr =
                    (rec.method == metastable_core::Method::MonteCarlo).then_some(rec.stderr);
                rows.add(id, rec.achieved, stderr, rec.method.as_str());
                rows.add(&format!("{id}:required"), rec.required, None, "bound");
                rows.add(
                    &format!("{id}:verdict"),
                    verdict_code(rec.verdict),
                    None,
                    "check",
                );
            }
            let counts = |v: Verdict| report.records.iter().filter(|r| r.verdict == v).count();
            let note = format!(
                "{} pass, {} inconclusive, {} fail",
                counts(Verdict::Pass),
                counts(Verdict::Inconclusive),
                counts(Verdict::Fail)
            );
            let v = report.verdict;
            reports.push(report);
            Ok((v, note))
        })?;
    }
    Ok(reports)
}

/// 0 PASS, 1 INCONCLUSIVE, 2 FAIL
pub fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Pass => 0.0,
        Verdict::Inconclusive => 1.0,
        Verdict::Fail => 2.0,
    }
}
