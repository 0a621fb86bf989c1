//! JSON scenario configs and the report-producing commands behind the
//! `regen-verify` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    check_hypotheses, convergence_sweep, gate, quantile_test_functions, sample_joint, HypothesisCheck, Schedule,
    ScheduleSpec, SweepOptions, SweepReport, GAP_FLOOR,
};
use crate::engine::{
    default_burn_in, renewal_reward_estimate, time_average_estimate, z_difference, RatioEstimate, RegenModel, TestFn,
    TimeAverage,
};
use crate::error::{Error, Result};
use crate::models::{pi_closed_form, ModelSpec};
use crate::numerics::order_free_mean;
use crate::random::{spawn_stream, stream_index, Purpose};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A z-score within this bound counts as agreement.
pub const Z_BOUND: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    /// Defaults to `v_i(t) = t`, or to the observation times of a Jackson
    /// network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub replications: usize,
    pub t_grid: Vec<f64>,
    /// Cycles for renewal-reward estimates.
    pub n_cycles: usize,
    /// Burn-in time for stationary draws; default `max(1e3, 100 max mu)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    /// Horizon of time-average estimates.
    pub horizon: f64,
    pub allow_hypothesis_fail: bool,
    /// Coordinate and test function of the `stationary` command.
    pub coordinate: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<TestFn>,
    /// Explicit test-function tuples; default is quantile indicators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_functions: Option<Vec<Vec<TestFn>>>,
    /// State component read by the default indicators.
    pub component: usize,
    pub quantile_levels: Vec<f64>,
    pub quantile_prepass: usize,
    pub bootstrap_resamples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            replications: 100_000,
            t_grid: vec![10.0, 100.0, 1000.0],
            n_cycles: 100_000,
            burn_in: None,
            horizon: 100_000.0,
            allow_hypothesis_fail: false,
            coordinate: 0,
            g: None,
            test_functions: None,
            component: 0,
            quantile_levels: crate::asymptotics::DEFAULT_QUANTILE_LEVELS.to_vec(),
            quantile_prepass: crate::asymptotics::DEFAULT_QUANTILE_DRAWS,
            bootstrap_resamples: crate::asymptotics::DEFAULT_BOOTSTRAP_RESAMPLES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("regen-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl ScenarioConfig {
    /// Parses JSON; type errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn validate_run(run: &RunConfig) -> Result<()> {
    if run.t_grid.is_empty() {
        return Err(Error::config("t_grid", "must not be empty"));
    }
    for (k, t) in run.t_grid.iter().enumerate() {
        if !(t.is_finite() && *t > 0.0) {
            return Err(Error::config(format!("t_grid[{k}]"), "must be finite and > 0"));
        }
    }
    if run.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("t_grid", "must be strictly increasing"));
    }
    if run.replications == 0 {
        return Err(Error::config("replications", "must be >= 1"));
    }
    if run.n_cycles == 0 {
        return Err(Error::config("n_cycles", "must be >= 1"));
    }
    if let Some(b) = run.burn_in {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::config("burn_in", "must be finite and > 0"));
        }
    }
    if !(run.horizon.is_finite() && run.horizon > 0.0) {
        return Err(Error::config("horizon", "must be finite and > 0"));
    }
    for (k, p) in run.quantile_levels.iter().enumerate() {
        if !(*p > 0.0 && *p < 1.0) {
            return Err(Error::config(format!("quantile_levels[{k}]"), "must lie in (0, 1)"));
        }
    }
    if run.quantile_levels.is_empty() {
        return Err(Error::config("quantile_levels", "must not be empty"));
    }
    if run.quantile_prepass == 0 {
        return Err(Error::config("quantile_prepass", "must be >= 1"));
    }
    if run.bootstrap_resamples < 2 {
        return Err(Error::config("bootstrap_resamples", "must be >= 2"));
    }
    Ok(())
}

/// A validated config with its model built.
pub struct Scenario {
    config: ScenarioConfig,
    model: Arc<dyn RegenModel>,
    schedule: ScheduleSpec,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("model", &self.model.name())
            .field("schedule", &self.schedule)
            .field("run", &self.config.run)
            .finish()
    }
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let model = config.model.build()?;
        let m = model.coordinates();
        let schedule = match (&config.schedule, &config.model) {
            (Some(s), _) => s.clone(),
            (None, ModelSpec::Jackson(j)) => {
                ScheduleSpec::new(j.observations.iter().map(|o| Schedule::affine(o.alpha, o.beta)).collect())
            }
            (None, _) => ScheduleSpec::identity(m),
        };
        schedule.validate().map_err(|e| e.under("schedule"))?;
        if schedule.len() != m {
            return Err(Error::config(
                "schedule",
                format!("has {} entries but the model has {m} coordinates", schedule.len()),
            ));
        }
        validate_run(&config.run).map_err(|e| e.under("run"))?;
        let run = &config.run;
        if run.coordinate >= m {
            return Err(Error::config("run.coordinate", format!("model has {m} coordinates")));
        }
        if let Some(g) = &run.g {
            g.validate(model.state_dim()).map_err(|e| e.under("run.g"))?;
        }
        if run.component >= model.state_dim() {
            return Err(Error::config("run.component", format!("state has {} components", model.state_dim())));
        }
        if let Some(tuples) = &run.test_functions {
            for (k, tuple) in tuples.iter().enumerate() {
                if tuple.len() != m {
                    return Err(Error::config(
                        format!("run.test_functions[{k}]"),
                        format!("needs {m} entries, one per coordinate"),
                    ));
                }
                for (i, f) in tuple.iter().enumerate() {
                    f.validate(model.state_dim()).map_err(|e| e.under(&format!("run.test_functions[{k}][{i}]")))?;
                }
            }
        }
        if config.output.formats.is_empty() {
            return Err(Error::config("output.formats", "must not be empty"));
        }
        Ok(Self { config, model, schedule })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(ScenarioConfig::from_json(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut ScenarioConfig {
        &mut self.config
    }

    pub fn model(&self) -> &dyn RegenModel {
        self.model.as_ref()
    }

    pub fn schedule(&self) -> &ScheduleSpec {
        &self.schedule
    }

    pub fn warnings(&self) -> Vec<String> {
        self.model.warnings()
    }

    fn burn_in(&self) -> f64 {
        self.config.run.burn_in.unwrap_or_else(|| default_burn_in(&self.model.cycle_means()))
    }

    fn wants(&self, f: Format) -> bool {
        self.config.output.formats.contains(&f)
    }

    /// Product-form gap sweep over `run.t_grid`.
    pub fn verify_independence(&self) -> Result<IndependenceReport> {
        let run = &self.config.run;
        let model = self.model();
        gate(model, &self.schedule, run.allow_hypothesis_fail)?;
        let tuples = match &run.test_functions {
            Some(t) => t.clone(),
            None => quantile_test_functions(
                model,
                run.component,
                &run.quantile_levels,
                run.quantile_prepass,
                run.burn_in,
                run.seed,
            )?,
        };
        let opts = SweepOptions {
            replications: run.replications,
            seed: run.seed,
            bootstrap_resamples: run.bootstrap_resamples,
            allow_hypothesis_fail: run.allow_hypothesis_fail,
        };
        let sweep = convergence_sweep(model, &self.schedule, &run.t_grid, &tuples, &opts)?;
        Ok(IndependenceReport { seed: run.seed, test_functions: tuples, sweep })
    }

    /// Simulated probability that every status source is up to date, against
    /// the product closed form.
    pub fn status_pi(&self) -> Result<StatusPiReport> {
        let ModelSpec::Status(spec) = &self.config.model else {
            return Err(Error::config("model.kind", "status-pi needs a status model"));
        };
        let run = &self.config.run;
        let model = self.model();
        let hypothesis = gate(model, &self.schedule, run.allow_hypothesis_fail)?;
        let closed = pi_closed_form(spec).map_err(|e| e.under("model"))?;
        let t = self.burn_in();
        let floor = 100.0 * model.cycle_means().iter().fold(0.0f64, |a, b| a.max(*b));
        if !(t >= floor) {
            return Err(Error::config("run.burn_in", format!("must be >= 100 * max mean cycle length = {floor}")));
        }
        let fs = vec![TestFn::updated(); model.coordinates()];
        let samples = sample_joint(model, &self.schedule, t, &fs, run.replications, run.seed)?;
        let simulated = order_free_mean(&samples.row_products());
        let n = run.replications as f64;
        let se = (closed * (1.0 - closed) / n).sqrt();
        let z = z_difference(simulated, se, closed, 0.0);
        Ok(StatusPiReport {
            pi_closed_form: closed,
            pi_simulated: simulated,
            se,
            z_score: z,
            replications: run.replications,
            burn_in: t,
            hypothesis,
            seed: run.seed,
            version: VERSION.to_string(),
        })
    }

    /// Renewal-reward against time-average estimate of `E g(X_i(inf))`.
    pub fn stationary(&self) -> Result<StationaryReport> {
        let run = &self.config.run;
        let g =
            run.g.clone().ok_or_else(|| Error::config("run.g", "the stationary command needs a test function g"))?;
        let model = self.model();
        let i = run.coordinate;
        let rr = renewal_reward_estimate(
            model,
            i,
            &g,
            run.n_cycles,
            spawn_stream(run.seed, stream_index(Purpose::RenewalReward, 0)),
        )?;
        let ta = time_average_estimate(
            model,
            i,
            &g,
            run.horizon,
            spawn_stream(run.seed, stream_index(Purpose::TimeAverage, 0)),
        )?;
        let z = z_difference(rr.estimate, rr.se, ta.estimate, ta.se);
        Ok(StationaryReport { coordinate: i, g, renewal_reward: rr, time_average: ta, z, seed: run.seed })
    }

    /// Hypothesis check of the configured schedule against the model means.
    pub fn hypothesis(&self) -> Result<HypothesisCheck> {
        check_hypotheses(&self.schedule, &self.model.cycle_means())
    }

    pub fn write_independence(&self, report: &IndependenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if self.wants(Format::Csv) {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["t", "f_tuple_id", "gap", "se", "n"]).map_err(csv_error)?;
            for row in &report.sweep.rows {
                w.write_record([
                    float(row.t),
                    row.tuple.to_string(),
                    float(row.estimate.gap),
                    float(row.estimate.se),
                    row.estimate.n.to_string(),
                ])
                .map_err(csv_error)?;
            }
            written.push(write_csv(dir.join("gap.csv"), w, report.seed)?);
        }
        if self.wants(Format::Json) {
            written.push(write_json(dir.join("verdict.json"), &report.verdict_json())?);
        }
        Ok(written)
    }

    pub fn write_status_pi(&self, report: &StatusPiReport, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if self.wants(Format::Json) {
            written.push(write_json(dir.join("status_pi.json"), report)?);
        }
        if self.wants(Format::Csv) {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["pi_closed_form", "pi_simulated", "se", "z_score", "n"]).map_err(csv_error)?;
            w.write_record([
                float(report.pi_closed_form),
                float(report.pi_simulated),
                float(report.se),
                float(report.z_score),
                report.replications.to_string(),
            ])
            .map_err(csv_error)?;
            written.push(write_csv(dir.join("status_pi.csv"), w, report.seed)?);
        }
        Ok(written)
    }

    pub fn write_stationary(&self, report: &StationaryReport, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if self.wants(Format::Csv) {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "coordinate",
                "g",
                "renewal_reward",
                "renewal_reward_se",
                "time_average",
                "time_average_se",
                "z",
            ])
            .map_err(csv_error)?;
            w.write_record([
                report.coordinate.to_string(),
                serde_json::to_string(&report.g)?,
                float(report.renewal_reward.estimate),
                float(report.renewal_reward.se),
                float(report.time_average.estimate),
                float(report.time_average.se),
                float(report.z),
            ])
            .map_err(csv_error)?;
            written.push(write_csv(dir.join("stationary.csv"), w, report.seed)?);
        }
        if self.wants(Format::Json) {
            written.push(write_json(dir.join("stationary.json"), report)?);
        }
        Ok(written)
    }
}

/// 17 significant digits.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_csv(path: PathBuf, w: csv::Writer<Vec<u8>>, seed: u64) -> Result<PathBuf> {
    let mut bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    writeln!(bytes, "# seed={seed}, version={VERSION}")?;
    fs::write(&path, bytes)?;
    Ok(path)
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

#[derive(Clone, Debug)]
pub struct IndependenceReport {
    pub seed: u64,
    pub test_functions: Vec<Vec<TestFn>>,
    pub sweep: SweepReport,
}

#[derive(Serialize)]
struct FinalGap {
    f_tuple_id: usize,
    gap: f64,
    se: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerdictJson<'a> {
    verdict: &'static str,
    hypothesis: &'a HypothesisCheck,
    final_t: f64,
    threshold_floor: f64,
    final_gaps: Vec<FinalGap>,
    spearman_trends: &'a [f64],
    test_functions: &'a [Vec<TestFn>],
    replications: usize,
    seed: u64,
    version: &'static str,
}

impl IndependenceReport {
    pub fn passed(&self) -> bool {
        self.sweep.final_pass
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            3
        }
    }

    fn verdict_json(&self) -> VerdictJson<'_> {
        let final_rows: Vec<_> = self.sweep.final_rows().collect();
        VerdictJson {
            verdict: if self.passed() { "PASS" } else { "FAIL" },
            hypothesis: &self.sweep.hypothesis,
            final_t: final_rows.first().map_or(f64::NAN, |r| r.t),
            threshold_floor: GAP_FLOOR,
            final_gaps: final_rows
                .iter()
                .map(|r| FinalGap {
                    f_tuple_id: r.tuple,
                    gap: r.estimate.gap,
                    se: r.estimate.se,
                    threshold: r.estimate.threshold(GAP_FLOOR),
                    pass: r.estimate.passes(GAP_FLOOR),
                })
                .collect(),
            spearman_trends: &self.sweep.trends,
            test_functions: &self.test_functions,
            replications: final_rows.first().map_or(0, |r| r.estimate.n),
            seed: self.seed,
            version: VERSION,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StatusPiReport {
    pub pi_closed_form: f64,
    pub pi_simulated: f64,
    /// Standard error of the simulated value under the closed form.
    pub se: f64,
    pub z_score: f64,
    pub replications: usize,
    pub burn_in: f64,
    pub hypothesis: HypothesisCheck,
    pub seed: u64,
    pub version: String,
}

impl StatusPiReport {
    pub fn exit_code(&self) -> i32 {
        if self.z_score.abs() <= Z_BOUND {
            0
        } else {
            3
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryReport {
    pub coordinate: usize,
    pub g: TestFn,
    pub renewal_reward: RatioEstimate,
    pub time_average: TimeAverage,
    pub z: f64,
    pub seed: u64,
}

impl StationaryReport {
    pub fn exit_code(&self) -> i32 {
        if self.z.abs() <= Z_BOUND {
            0
        } else {
            3
        }
    }
}

/// A rayon pool sized by `REGEN_VERIFY_THREADS`, if set.
pub fn thread_pool_from_env() -> Result<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var("REGEN_VERIFY_THREADS") else {
        return Ok(None);
    };
    let threads: usize =
        raw.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
            Error::config("REGEN_VERIFY_THREADS", format!("expected a positive integer, got {raw:?}"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}
