//! Experiment plumbing: JSON run configs, tolerance sweeps, CSV tables, rate fits and traces.

use std::io::{Read, Write};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::adapt::{adapt, AdaptConfig, Mode, Refinement, RunResult, Termination};
use crate::error::{Error, Result};
use crate::estimator::{DeltaOutcome, DeltaSolverConfig};
use crate::galerkin::{PicardConfig, Scheme};
use crate::problem::{exponential, linear, power_square, Problem};

/// Column order of the sweep table.
pub const CSV_HEADER: [&str; 9] = [
    "tol_star",
    "M",
    "dofs",
    "T",
    "blowup_err",
    "delta_hat",
    "best_effectivity",
    "wall_time_s",
    "aborted",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// Built-in problem selected by name: `power2`, `exp` or `linear`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    /// Defaults to 1 (a single component for `linear`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<InitialValue>,
    /// Only meaningful for `linear`; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl ProblemSpec {
    pub fn named(name: &str) -> Self {
        ProblemSpec { name: name.to_string(), u0: None, lambda: None }
    }

    pub fn build(&self) -> Result<Problem> {
        let scalar = || match &self.u0 {
            None => Ok(1.0),
            Some(InitialValue::Scalar(x)) => Ok(*x),
            Some(InitialValue::Vector(_)) => {
                Err(Error::invalid(format!("problem `{}` takes a scalar u0", self.name)))
            }
        };
        if self.lambda.is_some() && self.name != "linear" {
            return Err(Error::invalid(format!("problem `{}` has no parameter `lambda`", self.name)));
        }
        match self.name.as_str() {
            "power2" => power_square(scalar()?),
            "exp" => exponential(scalar()?),
            "linear" => {
                let u0 = match &self.u0 {
                    None => vec![1.0],
                    Some(InitialValue::Scalar(x)) => vec![*x],
                    Some(InitialValue::Vector(v)) => v.clone(),
                };
                linear(self.lambda.unwrap_or(1.0), u0)
            }
            other => Err(Error::invalid(format!(
                "unknown problem `{other}` (expected power2, exp or linear)"
            ))),
        }
    }
}

/// Optional knobs shared by run configs and sweep specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub r_max: usize,
    pub theta_star: f64,
    pub k_min: f64,
    pub max_intervals: usize,
    pub picard: PicardConfig,
    pub delta: DeltaSolverConfig,
    pub track_effectivity: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let base = AdaptConfig::new(Scheme::Cg, Mode::H, 1, 1.0, 1.0);
        Settings {
            r_max: base.r_max,
            theta_star: base.theta_star,
            k_min: base.k_min,
            max_intervals: base.max_intervals,
            picard: base.picard,
            delta: base.delta,
            track_effectivity: base.track_effectivity,
        }
    }
}

impl Settings {
    fn adapt_config(&self, scheme: Scheme, mode: Mode, r: usize, k_init: f64, tol_star: f64) -> AdaptConfig {
        AdaptConfig {
            r_max: self.r_max,
            theta_star: self.theta_star,
            k_min: self.k_min,
            max_intervals: self.max_intervals,
            picard: self.picard,
            delta: self.delta,
            track_effectivity: self.track_effectivity,
            ..AdaptConfig::new(scheme, mode, r, k_init, tol_star)
        }
    }
}

/// A single adaptive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub scheme: Scheme,
    pub mode: Mode,
    /// Fixed degree in h mode, starting degree in hp mode.
    #[serde(alias = "r_init")]
    pub r: usize,
    pub k_init: f64,
    pub tol_star: f64,
    #[serde(default)]
    pub settings: Settings,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::invalid(format!("run config: {e}")))?;
        cfg.adapt_config().validate()?;
        cfg.problem.build()?;
        Ok(cfg)
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        self.settings.adapt_config(self.scheme, self.mode, self.r, self.k_init, self.tol_star)
    }
}

/// A tolerance sweep: one run per entry of `tol_list`, everything else fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub problem: ProblemSpec,
    pub scheme: Scheme,
    pub mode: Mode,
    #[serde(alias = "r_init")]
    pub r: usize,
    pub k_init: f64,
    pub tol_list: Vec<f64>,
    #[serde(default)]
    pub settings: Settings,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol_list.is_empty() {
            return Err(Error::invalid("tol_list must not be empty"));
        }
        if self.tol_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("tol_list entries must be positive and finite"));
        }
        if self.tol_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("tol_list must be strictly decreasing"));
        }
        self.problem.build()?;
        self.run_config(self.tol_list[0]).adapt_config().validate()
    }

    pub fn run_config(&self, tol_star: f64) -> RunConfig {
        RunConfig {
            problem: self.problem.clone(),
            scheme: self.scheme,
            mode: self.mode,
            r: self.r,
            k_init: self.k_init,
            tol_star,
            settings: self.settings.clone(),
        }
    }
}

/// Per-interval data kept in a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTrace {
    pub t_start: f64,
    pub t_end: f64,
    pub k: f64,
    pub r: usize,
    pub eta_res: f64,
    pub psi: f64,
    pub delta: Option<f64>,
    pub delta_hat: f64,
    pub bound: Option<f64>,
    pub tol: f64,
    pub theta: Option<f64>,
    pub recon_error: Option<f64>,
    pub effectivity: Option<f64>,
    pub picard_iters: usize,
    pub refinements: Vec<Refinement>,
}

/// Everything needed to reproduce and inspect a run; contains no timing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub termination: Termination,
    pub t_final: f64,
    pub t_blowup: Option<f64>,
    pub blowup_err: Option<f64>,
    #[serde(rename = "M")]
    pub m: usize,
    pub dofs: usize,
    pub delta_hat: f64,
    pub final_tol: f64,
    pub best_effectivity: Option<f64>,
    pub attempts: usize,
    pub last_delta_search: Option<DeltaOutcome>,
    pub intervals: Vec<IntervalTrace>,
}

impl RunReport {
    pub fn aborted(&self) -> bool {
        self.termination == Termination::KMinReached
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::State(format!("report serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("run report: {e}")))
    }
}

// JSON has no infinities; an infinite effectivity (zero observed error) becomes null.
fn finite(x: Option<f64>) -> Option<f64> {
    x.filter(|v| v.is_finite())
}

fn report(cfg: &RunConfig, p: &Problem, res: &RunResult) -> RunReport {
    let intervals = res
        .intervals
        .iter()
        .map(|rec| IntervalTrace {
            t_start: rec.interval.start(),
            t_end: rec.interval.end(),
            k: rec.interval.len(),
            r: rec.r,
            eta_res: rec.estimate.eta_res,
            psi: rec.estimate.psi,
            delta: rec.estimate.delta,
            delta_hat: rec.estimate.delta_hat,
            bound: rec.estimate.bound,
            tol: rec.tol,
            theta: rec.theta,
            recon_error: rec.recon_error,
            effectivity: finite(rec.estimate.effectivity),
            picard_iters: rec.picard_iters,
            refinements: rec.refinements.clone(),
        })
        .collect();
    let last_delta_search = match res.last_delta_search {
        Some(DeltaOutcome::NotFound { min_phi, argmin }) if !min_phi.is_finite() => {
            Some(DeltaOutcome::NotFound { min_phi: f64::MAX, argmin })
        }
        other => other,
    };
    RunReport {
        config: cfg.clone(),
        termination: res.termination,
        t_final: res.t_final,
        t_blowup: p.t_blowup(),
        blowup_err: p.t_blowup().map(|tb| (res.t_final - tb).abs()),
        m: res.m(),
        dofs: res.dofs(),
        delta_hat: res.delta_hat(),
        final_tol: res.final_tol,
        best_effectivity: finite(res.best_effectivity()),
        attempts: res.attempts,
        last_delta_search,
        intervals,
    }
}

/// Runs one configuration and returns the raw result alongside its report.
pub fn execute(cfg: &RunConfig) -> Result<(RunResult, RunReport)> {
    let p = cfg.problem.build()?;
    let res = adapt(&p, &cfg.adapt_config())?;
    let rep = report(cfg, &p, &res);
    Ok((res, rep))
}

pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    execute(cfg).map(|(_, rep)| rep)
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tol_star: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub dofs: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub blowup_err: Option<f64>,
    pub delta_hat: f64,
    pub best_effectivity: Option<f64>,
    pub wall_time_s: f64,
    pub aborted: bool,
}

impl SweepRow {
    pub fn from_report(rep: &RunReport, wall_time_s: f64) -> Self {
        SweepRow {
            tol_star: rep.config.tol_star,
            m: rep.m,
            dofs: rep.dofs,
            t: rep.t_final,
            blowup_err: rep.blowup_err,
            delta_hat: rep.delta_hat,
            best_effectivity: rep.best_effectivity,
            wall_time_s,
            aborted: rep.aborted(),
        }
    }
}

/// A finished sweep point: the table row plus the full run it came from.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub row: SweepRow,
    pub result: RunResult,
    pub report: RunReport,
}

/// Runs every tolerance of the spec, concurrently; output keeps spec order.
pub fn sweep_full(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let outcomes: Vec<Result<SweepPoint>> = std::thread::scope(|s| {
        let handles: Vec<_> = spec
            .tol_list
            .iter()
            .map(|&tol| {
                s.spawn(move || {
                    let cfg = spec.run_config(tol);
                    let start = Instant::now();
                    let (result, report) = execute(&cfg)?;
                    let row = SweepRow::from_report(&report, start.elapsed().as_secs_f64());
                    info!(
                        "tol* {tol:e}: M {} dofs {} T {} ({:?})",
                        row.m, row.dofs, row.t, report.termination
                    );
                    Ok(SweepPoint { row, result, report })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::State("sweep worker panicked".into()))))
            .collect()
    });
    outcomes.into_iter().collect()
}

pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    Ok(sweep_full(spec)?.into_iter().map(|p| p.row).collect())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

/// Writes rows with the fixed header; floats carry 17 significant digits.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.tol_star),
            r.m.to_string(),
            r.dofs.to_string(),
            fmt_f64(r.t),
            fmt_opt(r.blowup_err),
            fmt_f64(r.delta_hat),
            fmt_opt(r.best_effectivity),
            fmt_f64(r.wall_time_s),
            r.aborted.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::State(format!("csv flush: {e}")))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::invalid(format!(
            "sweep table header must be `{}`",
            CSV_HEADER.join(",")
        )));
    }
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// `log err` against `log dofs`.
    Algebraic,
    /// `log err` against `sqrt(dofs)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `slope^2` for the exponential model when the slope is negative.
    pub b: Option<f64>,
    pub points: usize,
}

/// Ordinary least squares `y = intercept + slope x`, with R².
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("least squares needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return Err(Error::invalid("least squares needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A constant column is fitted exactly.
    let r2 = if syy <= 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// Fits the blow-up error of the usable rows (not aborted, positive error).
pub fn fit(rows: &[SweepRow], model: FitModel) -> Result<FitResult> {
    let used: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.aborted)
        .filter_map(|r| r.blowup_err.filter(|e| *e > 0.0).map(|e| (r.dofs as f64, e)))
        .collect();
    if used.len() < 3 {
        return Err(Error::invalid(format!(
            "fit needs at least 3 non-aborted rows with positive blowup_err, got {}",
            used.len()
        )));
    }
    let x: Vec<f64> = used
        .iter()
        .map(|(d, _)| match model {
            FitModel::Algebraic => d.ln(),
            FitModel::Exponential => d.sqrt(),
        })
        .collect();
    let y: Vec<f64> = used.iter().map(|(_, e)| e.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y)?;
    let b = match model {
        FitModel::Exponential if slope < 0.0 => Some(slope * slope),
        _ => None,
    };
    Ok(FitResult { model, slope, intercept, r_squared, b, points: used.len() })
}

/// One point of the growth-factor and effectivity series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// `1 / |t_m - T_inf|`.
    pub inv_eps: f64,
    pub delta_hat: f64,
    pub effectivity: Option<f64>,
}

pub fn trace(rep: &RunReport) -> Result<Vec<TracePoint>> {
    let tb = rep
        .t_blowup
        .ok_or_else(|| Error::invalid("trace needs a problem with known blow-up time"))?;
    Ok(rep
        .intervals
        .iter()
        .filter(|iv| iv.t_end != tb)
        .map(|iv| TracePoint {
            inv_eps: 1.0 / (iv.t_end - tb).abs(),
            delta_hat: iv.delta_hat,
            effectivity: iv.effectivity,
        })
        .collect())
}

/// Log-log slope of `delta_hat` against `inv_eps` over the last `last` points.
pub fn growth_slope(points: &[TracePoint], last: usize) -> Result<FitResult> {
    let tail = &points[points.len().saturating_sub(last)..];
    let x: Vec<f64> = tail.iter().map(|p| p.inv_eps.ln()).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.delta_hat.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y)?;
    Ok(FitResult { model: FitModel::Algebraic, slope, intercept, r_squared, b: None, points: tail.len() })
}

pub fn write_trace_csv<W: Write>(points: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["inv_eps", "delta_hat", "effectivity"]).map_err(csv_err)?;
    for p in points {
        w.write_record([fmt_f64(p.inv_eps), fmt_f64(p.delta_hat), fmt_opt(p.effectivity)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::State(format!("csv flush: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(dofs: usize, err: f64) -> SweepRow {
        SweepRow {
            tol_star: 1e-3,
            m: 1,
            dofs,
            t: 0.5,
            blowup_err: Some(err),
            delta_hat: 1.0,
            best_effectivity: None,
            wall_time_s: 0.0,
            aborted: false,
        }
    }

    #[test]
    fn algebraic_fit_of_exact_power_law() {
        let rows: Vec<_> = [10, 20, 40, 80].iter().map(|&d| row(d, (d as f64).powi(-2))).collect();
        let f = fit(&rows, FitModel::Algebraic).unwrap();
        assert_relative_eq!(f.slope, -2.0, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_fit_of_exact_law() {
        let rows: Vec<_> = [4, 9, 16, 25].iter().map(|&d| row(d, (-3.0 * (d as f64).sqrt()).exp())).collect();
        let f = fit(&rows, FitModel::Exponential).unwrap();
        assert_relative_eq!(f.slope, -3.0, epsilon = 1e-12);
        assert_relative_eq!(f.b.unwrap(), 9.0, epsilon = 1e-10);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_error_has_zero_slope() {
        let rows: Vec<_> = [10, 20, 40].iter().map(|&d| row(d, 0.25)).collect();
        assert_eq!(fit(&rows, FitModel::Algebraic).unwrap().slope, 0.0);
    }

    #[test]
    fn fit_needs_three_usable_rows() {
        let mut rows = vec![row(10, 0.1), row(20, 0.01), row(40, 0.001)];
        rows[1].aborted = true;
        let msg = fit(&rows, FitModel::Algebraic).unwrap_err().to_string();
        assert!(msg.contains("at least 3"), "{msg}");
    }

    #[test]
    fn unknown_problem_is_rejected() {
        let msg = ProblemSpec::named("cubic").build().unwrap_err().to_string();
        assert!(msg.contains("unknown problem"), "{msg}");
    }

    #[test]
    fn config_errors_name_the_key() {
        let bad = r#"{"problem":{"name":"power2"},"scheme":"cg","mode":"h","r":1,"k_init":0.1,"tol_star":1e-3,"tolerance":1}"#;
        let msg = RunConfig::from_json(bad).unwrap_err().to_string();
        assert!(msg.contains("tolerance"), "{msg}");
        let missing = r#"{"problem":{"name":"power2"},"scheme":"cg","mode":"h","r":1,"tol_star":1e-3}"#;
        assert!(RunConfig::from_json(missing).unwrap_err().to_string().contains("k_init"));
    }

    #[test]
    fn tol_list_must_decrease() {
        let spec = |tols: &str| {
            format!(
                r#"{{"problem":{{"name":"exp"}},"scheme":"dg","mode":"h","r":0,"k_init":0.1,"tol_list":{tols}}}"#
            )
        };
        assert!(SweepSpec::from_json(&spec("[1e-2, 1e-3]")).is_ok());
        assert!(SweepSpec::from_json(&spec("[1e-3, 1e-2]")).is_err());
        assert!(SweepSpec::from_json(&spec("[1e-3, 1e-3]")).is_err());
        assert!(SweepSpec::from_json(&spec("[]")).is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut rows = vec![row(12, 0.1 + 0.2), row(30, std::f64::consts::PI * 1e-7)];
        rows[1].best_effectivity = Some(1.0 / 3.0);
        rows[1].blowup_err = None;
        rows[0].aborted = true;
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tol_star,M,dofs,T,blowup_err,delta_hat,best_effectivity,wall_time_s,aborted\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn run_reports_are_reproducible() {
        let cfg = RunConfig {
            problem: ProblemSpec::named("power2"),
            scheme: Scheme::Cg,
            mode: Mode::H,
            r: 1,
            k_init: 0.1,
            tol_star: 1e-3,
            settings: Settings::default(),
        };
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.termination, Termination::DeltaNotFound);
        assert!(rep.t_final > 0.0 && rep.t_final < 1.0);
        let text = rep.to_json().unwrap();
        let again = run(&RunReport::from_json(&text).unwrap().config).unwrap();
        assert_eq!(again.to_json().unwrap(), text);
    }

    #[test]
    fn trace_needs_blowup_time() {
        let cfg = RunConfig {
            problem: ProblemSpec { name: "linear".into(), u0: None, lambda: Some(0.0) },
            scheme: Scheme::Dg,
            mode: Mode::H,
            r: 0,
            k_init: 0.5,
            tol_star: 1e-3,
            settings: Settings { max_intervals: 4, ..Settings::default() },
        };
        let rep = run(&cfg).unwrap();
        assert!(rep.intervals.iter().all(|iv| iv.delta == Some(1.0)));
        assert!(trace(&rep).is_err());
    }
}
