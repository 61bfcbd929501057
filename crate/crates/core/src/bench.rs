//! Seeded experiment harness.
//!
//! An [`ExperimentConfig`] names a base setting, a list of seeds and at most
//! one sweep. For every (sweep point, seed) a scenario is drawn and each
//! method is run under each rate model. Metrics are per-user means,
//! normalized to the Device-Only run of the same scenario.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::cost::{ComputeParams, CostBreakdown, Problem, Weights};
use crate::error::{Error, Result};
use crate::ligd::{self, OptimizerConfig, SolveResult};
use crate::oracle::{self, OracleGrid};
use crate::profile::ModelProfile;
use crate::radio::{Allocation, RateModel};
use crate::scenario::{Fading, Layout, RadioParams, Scenario};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDim {
    NUsers,
    Subchannels,
    Workload,
}

impl SweepDim {
    pub fn name(self) -> &'static str {
        match self {
            SweepDim::NUsers => "n_users",
            SweepDim::Subchannels => "subchannels",
            SweepDim::Workload => "workload",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub dim: SweepDim,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Li-GD with warm starts.
    Ecc,
    DeviceOnly,
    /// Full offload with radio and compute optimized at `s = 0`.
    EdgeOnly,
    LatencyMin,
    ColdGd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ecc,
        Method::DeviceOnly,
        Method::EdgeOnly,
        Method::LatencyMin,
        Method::ColdGd,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Built-in name, `synthetic-<depth>` or path to a profile JSON.
    pub profile: String,
    pub n_aps: usize,
    pub n_users: usize,
    pub area_side: f64,
    pub fading: Fading,
    pub radio: RadioParams,
    pub compute: ComputeParams,
    pub weights: Weights,
    /// Multiplier applied to every layer's work.
    pub workload: f64,
    pub optimizer: OptimizerConfig,
    pub sweep: Option<Sweep>,
    pub models: Vec<RateModel>,
    pub methods: Vec<Method>,
    pub oracle: OracleGrid,
    /// Output directory for the CSV files.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: (0..5).collect(),
            profile: "nin9".into(),
            n_aps: 2,
            n_users: 8,
            area_side: 200.0,
            fading: Fading::Rayleigh,
            radio: RadioParams {
                num_subchannels: 4,
                ..RadioParams::default()
            },
            compute: ComputeParams::default(),
            weights: Weights::default(),
            workload: 1.0,
            optimizer: OptimizerConfig::default(),
            sweep: None,
            models: vec![RateModel::Noma, RateModel::Oma],
            methods: Method::ALL.to_vec(),
            oracle: OracleGrid::default(),
            output: None,
        }
    }
}

/// One point of the experiment grid after applying the sweep.
#[derive(Debug, Clone)]
pub struct Setting {
    pub sweep_value: f64,
    pub layout: Layout,
    pub radio: RadioParams,
    pub profile: ModelProfile,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("config", "no seeds"));
        }
        if self.models.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("config", "need at least one model and one method"));
        }
        if !(self.workload > 0.0) {
            return Err(Error::invalid("config", "workload must be positive"));
        }
        self.radio.validate()?;
        self.compute.validate()?;
        self.weights.validate()?;
        self.optimizer.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::invalid("sweep", "no values"));
            }
            let integral = matches!(sweep.dim, SweepDim::NUsers | SweepDim::Subchannels);
            for &v in &sweep.values {
                if !(v > 0.0 && v.is_finite()) || (integral && v.fract() != 0.0) {
                    return Err(Error::invalid("sweep", format!("bad {} value {v}", sweep.dim.name())));
                }
            }
        }
        self.settings().map(|_| ())
    }

    pub fn sweep_dim_name(&self) -> &'static str {
        self.sweep.as_ref().map_or("none", |s| s.dim.name())
    }

    /// Every sweep point in order; a single point without a sweep.
    pub fn settings(&self) -> Result<Vec<Setting>> {
        let base = ModelProfile::resolve(&self.profile)?;
        let make = |value: f64, dim: Option<SweepDim>| {
            let mut layout = Layout {
                n_aps: self.n_aps,
                n_users: self.n_users,
                area_side: self.area_side,
            };
            let mut radio = self.radio.clone();
            let mut workload = self.workload;
            match dim {
                Some(SweepDim::NUsers) => layout.n_users = value as usize,
                Some(SweepDim::Subchannels) => radio.num_subchannels = value as usize,
                Some(SweepDim::Workload) => workload = value,
                None => {}
            }
            Setting {
                sweep_value: value,
                layout,
                radio,
                profile: base.with_workload(workload),
            }
        };
        Ok(match &self.sweep {
            Some(s) => s.values.iter().map(|&v| make(v, Some(s.dim))).collect(),
            None => vec![make(0.0, None)],
        })
    }

    pub fn problem(&self, setting: &Setting, seed: u64) -> Result<Problem> {
        let scenario = Scenario::generate_with_fading(seed, &setting.layout, &setting.radio, self.fading)?;
        Problem::new(setting.profile.clone(), scenario, self.compute.clone(), self.weights)
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub seed: u64,
    pub model: RateModel,
    pub method: Method,
    pub sweep_dim: String,
    pub sweep_value: f64,
    pub latency_s: f64,
    pub energy_j: f64,
    pub utility: f64,
    pub latency_speedup: f64,
    pub energy_reduction: f64,
    pub iterations: usize,
}

impl Row {
    /// Rows of infeasible runs carry NaN metrics.
    pub fn is_feasible(&self) -> bool {
        !self.utility.is_nan()
    }
}

/// One point of a utility trace, for convergence plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub seed: u64,
    pub model: RateModel,
    pub method: Method,
    pub sweep_dim: String,
    pub sweep_value: f64,
    pub split: usize,
    pub iteration: usize,
    pub utility: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub traces: Vec<TraceRow>,
}

struct Means {
    latency: f64,
    energy: f64,
    utility: f64,
}

fn means(costs: &[CostBreakdown]) -> Means {
    let n = costs.len() as f64;
    Means {
        latency: costs.iter().map(|c| c.total_t).sum::<f64>() / n,
        energy: costs.iter().map(|c| c.total_e).sum::<f64>() / n,
        utility: costs.iter().map(|c| c.utility).sum::<f64>() / n,
    }
}

/// Edge-only with its radio and compute variables optimized at `s = 0`,
/// rounded and polished like Li-GD.
pub fn edge_only_optimized(problem: &Problem, config: &OptimizerConfig) -> Result<(Allocation, usize)> {
    let start = Allocation::uniform(&problem.scenario, problem.params.r_box(), 0);
    let layer = ligd::gd_solve_layer(problem, 0, start, config)?;
    let alloc = ligd::round_and_repair(&layer.alloc, &problem.scenario, config.rounding)?;
    if !config.polish {
        return Ok((alloc, layer.iterations));
    }
    Ok((ligd::polish(problem, 0, alloc, config)?.alloc, layer.iterations))
}

enum Outcome {
    Done(Vec<CostBreakdown>, usize, Option<SolveResult>),
    Infeasible,
}

fn solved(problem: &Problem, res: Result<SolveResult>) -> Result<Outcome> {
    match res {
        Ok(r) => Ok(Outcome::Done(
            problem.system_breakdowns(&r.best_alloc, r.best_split),
            r.total_iterations,
            Some(r),
        )),
        Err(e) => infeasible(e),
    }
}

fn infeasible(e: Error) -> Result<Outcome> {
    match e {
        Error::Infeasible { .. } | Error::NonFiniteUtility(_) => {
            log::warn!("run flagged infeasible: {e}");
            Ok(Outcome::Infeasible)
        }
        e => Err(e),
    }
}

fn run_one(config: &ExperimentConfig, setting: &Setting, seed: u64) -> Result<RunOutput> {
    let base = config.problem(setting, seed)?;
    let device = means(&baselines::device_only(&base));
    let dim = config.sweep_dim_name().to_string();
    let mut out = RunOutput::default();

    for &model in &config.models {
        let problem = base.clone().with_rate_model(model);
        for &method in &config.methods {
            let outcome = match method {
                Method::Ecc => solved(&problem, ligd::li_gd(&problem, &config.optimizer))?,
                Method::ColdGd => solved(&problem, ligd::cold_gd(&problem, &config.optimizer))?,
                Method::DeviceOnly => Outcome::Done(baselines::device_only(&problem), 0, None),
                Method::EdgeOnly => match edge_only_optimized(&problem, &config.optimizer) {
                    Ok((alloc, iters)) => Outcome::Done(baselines::edge_only(&problem, &alloc), iters, None),
                    Err(e) => infeasible(e)?,
                },
                Method::LatencyMin => Outcome::Done(baselines::latency_min(&problem).1, 0, None),
            };
            let row = |m: Means, iterations| Row {
                seed,
                model,
                method,
                sweep_dim: dim.clone(),
                sweep_value: setting.sweep_value,
                latency_s: m.latency,
                energy_j: m.energy,
                utility: m.utility,
                latency_speedup: device.latency / m.latency,
                energy_reduction: device.energy / m.energy,
                iterations,
            };
            match outcome {
                Outcome::Done(costs, iterations, solve) => {
                    out.rows.push(row(means(&costs), iterations));
                    if let Some(solve) = solve {
                        out.traces.extend(solve.trace_rows().map(|(split, iteration, utility)| TraceRow {
                            seed,
                            model,
                            method,
                            sweep_dim: dim.clone(),
                            sweep_value: setting.sweep_value,
                            split,
                            iteration,
                            utility,
                        }));
                    }
                }
                Outcome::Infeasible => out.rows.push(row(
                    Means {
                        latency: f64::NAN,
                        energy: f64::NAN,
                        utility: f64::NAN,
                    },
                    0,
                )),
            }
        }
    }
    Ok(out)
}

/// Runs every (sweep point, seed) pair, possibly in parallel. Rows come out
/// ordered by sweep point, seed, model and method.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let settings = config.settings()?;
    let jobs: Vec<(&Setting, u64)> = settings
        .iter()
        .flat_map(|s| config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let parts: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(setting, seed)| run_one(config, setting, seed))
        .collect::<Result<_>>()?;
    let mut out = RunOutput::default();
    for p in parts {
        out.rows.extend(p.rows);
        out.traces.extend(p.traces);
    }
    Ok(out)
}

/// Mean and population standard deviation of one metric column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_dim: String,
    pub sweep_value: f64,
    pub model: RateModel,
    pub method: Method,
    pub runs: usize,
    pub infeasible: usize,
    pub latency_s_mean: f64,
    pub latency_s_std: f64,
    pub energy_j_mean: f64,
    pub energy_j_std: f64,
    pub utility_mean: f64,
    pub utility_std: f64,
    pub latency_speedup_mean: f64,
    pub latency_speedup_std: f64,
    pub energy_reduction_mean: f64,
    pub energy_reduction_std: f64,
    pub iterations_mean: f64,
    pub iterations_std: f64,
}

/// Aggregates rows over seeds per (sweep point, model, method), in order of
/// first appearance. Infeasible rows are counted but not averaged.
pub fn summarize(rows: &[Row]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64, RateModel, Method)> = Vec::new();
    for r in rows {
        let k = (r.sweep_dim.clone(), r.sweep_value, r.model, r.method);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dim, value, model, method)| {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| r.sweep_dim == dim && r.sweep_value == value && r.model == model && r.method == method)
                .collect();
            let ok: Vec<&Row> = group.iter().copied().filter(|r| r.is_feasible()).collect();
            let stat = |f: fn(&Row) -> f64| Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (lat, en, ut, sp, red, it) = (
                stat(|r| r.latency_s),
                stat(|r| r.energy_j),
                stat(|r| r.utility),
                stat(|r| r.latency_speedup),
                stat(|r| r.energy_reduction),
                stat(|r| r.iterations as f64),
            );
            SummaryRow {
                sweep_dim: dim,
                sweep_value: value,
                model,
                method,
                runs: group.len(),
                infeasible: group.len() - ok.len(),
                latency_s_mean: lat.mean,
                latency_s_std: lat.std,
                energy_j_mean: en.mean,
                energy_j_std: en.std,
                utility_mean: ut.mean,
                utility_std: ut.std,
                latency_speedup_mean: sp.mean,
                latency_speedup_std: sp.std,
                energy_reduction_mean: red.mean,
                energy_reduction_std: red.std,
                iterations_mean: it.mean,
                iterations_std: it.std,
            }
        })
        .collect()
}

/// Serializes records to CSV; the header is written even without records.
pub fn to_csv<T: Serialize>(records: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const RESULTS_HEADER: [&str; 11] = [
    "seed",
    "model",
    "method",
    "sweep_dim",
    "sweep_value",
    "latency_s",
    "energy_j",
    "utility",
    "latency_speedup",
    "energy_reduction",
    "iterations",
];

pub const SUMMARY_HEADER: [&str; 18] = [
    "sweep_dim",
    "sweep_value",
    "model",
    "method",
    "runs",
    "infeasible",
    "latency_s_mean",
    "latency_s_std",
    "energy_j_mean",
    "energy_j_std",
    "utility_mean",
    "utility_std",
    "latency_speedup_mean",
    "latency_speedup_std",
    "energy_reduction_mean",
    "energy_reduction_std",
    "iterations_mean",
    "iterations_std",
];

pub const TRACE_HEADER: [&str; 8] = [
    "seed",
    "model",
    "method",
    "sweep_dim",
    "sweep_value",
    "split",
    "iteration",
    "utility",
];

pub fn results_csv(rows: &[Row]) -> Result<String> {
    to_csv(rows, &RESULTS_HEADER)
}

pub fn summary_csv(rows: &[Row]) -> Result<String> {
    to_csv(&summarize(rows), &SUMMARY_HEADER)
}

pub fn convergence_csv(traces: &[TraceRow]) -> Result<String> {
    to_csv(traces, &TRACE_HEADER)
}

/// Writes results, summary and convergence CSVs into `dir`.
pub fn write_report(dir: &Path, output: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(RESULTS_FILE), results_csv(&output.rows)?)?;
    fs::write(dir.join(SUMMARY_FILE), summary_csv(&output.rows)?)?;
    fs::write(dir.join(CONVERGENCE_FILE), convergence_csv(&output.traces)?)?;
    Ok(())
}

/// Li-GD against the grid oracle on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub seed: u64,
    pub ligd_split: usize,
    pub oracle_split: usize,
    pub ligd_utility: f64,
    pub oracle_utility: f64,
    /// Li-GD rounded `Γ` over oracle `Γ*`.
    pub ratio: f64,
}

/// Runs Li-GD (first configured rate model) and the oracle on every seed of
/// the first sweep point.
pub fn oracle_check(config: &ExperimentConfig) -> Result<Vec<OracleCheck>> {
    config.validate()?;
    let setting = config.settings()?.swap_remove(0);
    let model = config.models[0];
    config
        .seeds
        .par_iter()
        .map(|&seed| {
            let problem = config.problem(&setting, seed)?.with_rate_model(model);
            let solved = ligd::li_gd(&problem, &config.optimizer)?;
            let best = oracle::brute_force(&problem, &config.oracle)?;
            Ok(OracleCheck {
                seed,
                ligd_split: solved.best_split,
                oracle_split: best.split,
                ligd_utility: solved.rounded_utility,
                oracle_utility: best.utility,
                ratio: solved.rounded_utility / best.utility,
            })
        })
        .collect()
}

/// Analytic gradient against central finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub points: usize,
    pub components: usize,
    pub max_rel_error: f64,
}

/// Relative step of the central difference stencil.
pub const FD_STEP: f64 = 1e-6;

/// Draws `points` random interior points of a 2-user, 2-AP, 2-subchannel,
/// 3-layer problem (both rate models alternately) and compares every
/// gradient component with a central difference.
///
/// The error of a component is `|a - n| / max(|a|, |n|, floor)` where the
/// floor is `1e-6` of the largest analytic component in the same variable
/// group; below it the difference is round-off noise.
pub fn gradient_check(seed: u64, points: usize) -> Result<GradientReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radio = RadioParams {
        num_subchannels: 2,
        ..RadioParams::default()
    };
    let layout = Layout {
        n_aps: 2,
        n_users: 2,
        area_side: 150.0,
    };
    let mut worst: f64 = 0.0;
    let mut components = 0;
    for k in 0..points {
        let scenario = Scenario::generate(rng.random(), &layout, &radio)?;
        let model = if k % 2 == 0 { RateModel::Noma } else { RateModel::Oma };
        let w_t = rng.random_range(0.1..0.9);
        let problem = Problem::new(
            ModelProfile::synthetic(3),
            scenario,
            ComputeParams::default(),
            Weights::new(w_t, 1.0 - w_t)?,
        )?
        .with_rate_model(model);
        let s = rng.random_range(0..3);
        let alloc = random_interior(&problem, &mut rng, s);
        let g = problem.gradient(&alloc, s);
        let (numeric, groups) = numeric_gradient(&problem, &alloc, s);
        let analytic: Vec<f64> = g.components().collect();
        for range in groups {
            let scale = analytic[range.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for c in range {
                let (a, n) = (analytic[c], numeric[c]);
                let err = (a - n).abs() / a.abs().max(n.abs()).max(1e-6 * scale).max(f64::MIN_POSITIVE);
                worst = worst.max(err);
                components += 1;
            }
        }
    }
    Ok(GradientReport {
        points,
        components,
        max_rel_error: worst,
    })
}

/// Random point strictly inside every box and simplex.
pub fn random_interior(problem: &Problem, rng: &mut impl Rng, split: usize) -> Allocation {
    let radio = &problem.scenario.radio;
    let (r_lo, r_hi) = problem.params.r_box();
    let mut alloc = Allocation::uniform(&problem.scenario, (r_lo, r_hi), split);
    let simplex = |rng: &mut dyn rand::RngCore, m: usize| {
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect::<Vec<_>>()
    };
    let between = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| lo + (hi - lo) * rng.random_range(0.05..0.95);
    let m = problem.scenario.num_subchannels();
    for u in &mut alloc.users {
        u.beta_up = simplex(rng, m);
        u.beta_down = simplex(rng, m);
        u.p_up = between(rng, radio.p_min, radio.p_max);
        u.p_down = between(rng, radio.pd_min, radio.pd_max);
        u.r = between(rng, r_lo, r_hi);
    }
    alloc
}

/// Central differences of `Γ_s` in the component order of
/// [`crate::cost::AllocGradient::components`], with the index ranges of the
/// five variable groups.
pub fn numeric_gradient(
    problem: &Problem,
    alloc: &Allocation,
    s: usize,
) -> (Vec<f64>, Vec<std::ops::Range<usize>>) {
    let (u, m) = (problem.num_users(), problem.scenario.num_subchannels());
    // Differences are taken per cost term so that the large constant parts
    // of the utility do not swamp them in round-off.
    let diff = |set: &dyn Fn(&mut Allocation, f64), x: f64| {
        let h = FD_STEP * x.abs().max(1e-3);
        let mut plus = alloc.clone();
        set(&mut plus, x + h);
        let mut minus = alloc.clone();
        set(&mut minus, x - h);
        let (bp, bm) = (problem.system_breakdowns(&plus, s), problem.system_breakdowns(&minus, s));
        bp.iter()
            .zip(&bm)
            .zip(&problem.weights)
            .map(|((p, q), w)| {
                let dt = (p.t_server - q.t_server) + (p.t_up - q.t_up) + (p.t_down - q.t_down);
                let de = (p.e_edge - q.e_edge) + (p.e_up - q.e_up) + (p.e_down - q.e_down);
                w.w_t * dt + w.w_e * de
            })
            .sum::<f64>()
            / (2.0 * h)
    };
    let mut out = Vec::with_capacity(2 * u * m + 3 * u);
    for up in [true, false] {
        for i in 0..u {
            for k in 0..m {
                let x = if up { alloc.users[i].beta_up[k] } else { alloc.users[i].beta_down[k] };
                out.push(diff(
                    &|a: &mut Allocation, v| {
                        if up {
                            a.users[i].beta_up[k] = v
                        } else {
                            a.users[i].beta_down[k] = v
                        }
                    },
                    x,
                ));
            }
        }
    }
    for i in 0..u {
        out.push(diff(&|a: &mut Allocation, v| a.users[i].p_up = v, alloc.users[i].p_up));
    }
    for i in 0..u {
        out.push(diff(&|a: &mut Allocation, v| a.users[i].p_down = v, alloc.users[i].p_down));
    }
    for i in 0..u {
        out.push(diff(&|a: &mut Allocation, v| a.users[i].r = v, alloc.users[i].r));
    }
    let b = u * m;
    let groups = vec![0..b, b..2 * b, 2 * b..2 * b + u, 2 * b + u..2 * b + 2 * u, 2 * b + 2 * u..2 * b + 3 * u];
    (out, groups)
}
