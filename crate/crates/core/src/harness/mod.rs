//! Seeded Monte-Carlo experiments over a matrix of SA and PA schemes.
//!
//! A run is described by an [`ExperimentConfig`] (TOML, see `README.md` for
//! the grammar). For every trial the harness draws one set of channels,
//! reuses it across all chunk sizes and SNR points, runs each configured
//! scheme and emits one [`ResultRow`] per (chunk size, SNR point, trial,
//! scheme, user group). Trials run in parallel; rows are merged back into
//! that order so the output does not depend on scheduling.

mod config;
mod output;
mod summary;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{
    DesiredSignalKind, ExperimentConfig, MulticellConfig, OracleConfig, PaKind, SaKind, ScenarioKind, SchemePair,
};
pub use output::{format_float, write_csv, write_rows, CSV_HEADER};
pub use summary::{Summary, SummaryKey, SummaryRow};

use crate::assignment::{chunk_rates, exhaustive_sa_oracle, proposed_sa, shen_sa, static_sa, Assignment, ChunkGrid};
use crate::channel::{NoiseModel, ResponseEngine};
use crate::error::{Error, Result};
use crate::metrics::{normalize_vs_oracle, TrialMetrics};
use crate::multicell::{multicell_sa, reuse1_baseline, CellScenario, Group, GroupWeights, SaScheme};
use crate::power::{exact_pa_oracle, proposed_pa, uniform_pa, PowerAllocation};
use crate::rng::{substream, Purpose, StreamId};

/// One output record.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: ScenarioKind,
    pub scheme: SchemePair,
    pub chunk_size: usize,
    /// `None` outside SNR sweeps.
    pub snr_db: Option<f64>,
    pub trial: u32,
    pub seed: u64,
    /// `None` in single-cell runs, where all users form one group.
    pub group: Option<Group>,
    pub rates: Vec<f64>,
    pub metrics: Option<TrialMetrics>,
    pub norm_sum_rate: Option<f64>,
    pub norm_min_weighted_rate: Option<f64>,
    pub wall_time_us: Option<u64>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn group_label(&self) -> &'static str {
        self.group.map_or("all", Group::label)
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

/// Runs every trial on a pool of `threads` workers (`None`: rayon default).
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<Keyed>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(config, trial))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut keyed: Vec<Keyed> = per_trial.into_iter().flatten().collect();
    keyed.sort_by_key(|k| (k.chunk_index, k.point_index, k.row.trial));
    let rows: Vec<ResultRow> = keyed.into_iter().map(|k| k.row).collect();
    let summary = Summary::from_rows(&rows);
    Ok(ExperimentOutput { rows, summary })
}

struct Keyed {
    chunk_index: usize,
    point_index: usize,
    row: ResultRow,
}

fn run_trial(config: &ExperimentConfig, trial: u32) -> Result<Vec<Keyed>> {
    let mut out = if config.scenario.is_multicell() {
        multicell_trial(config, trial)?
    } else {
        single_cell_trial(config, trial)?
    };
    attach_normalization(config, &mut out);
    Ok(out)
}

/// Fresh `|H|^2` for each user of a single-cell trial.
fn unit_gains(config: &ExperimentConfig, trial: u32) -> Result<Vec<Vec<f64>>> {
    let engine = ResponseEngine::new(config.subcarriers)?;
    config
        .taps
        .iter()
        .enumerate()
        .map(|(k, &taps)| {
            let mut rng = substream(config.seed, StreamId::new(trial, 1, k as u16), Purpose::Channel);
            crate::channel::ChannelRealization::draw(taps, &engine, 1.0, &mut rng).map(|c| c.gains)
        })
        .collect()
}

fn noise_points(config: &ExperimentConfig) -> Result<Vec<(Option<f64>, f64)>> {
    if config.snr_db.is_empty() {
        let noise = config.noise_power.expect("validated");
        return Ok(vec![(None, noise)]);
    }
    config
        .snr_db
        .iter()
        .map(|&snr| {
            NoiseModel::for_snr_db(snr, config.subcarriers, config.total_power).map(|m| (Some(snr), m.noise_power))
        })
        .collect()
}

fn single_cell_trial(config: &ExperimentConfig, trial: u32) -> Result<Vec<Keyed>> {
    let unit = unit_gains(config, trial)?;
    let points = noise_points(config)?;
    let weights = config.weights();
    let mut out = Vec::new();
    for (chunk_index, &l) in config.chunk_sizes.iter().enumerate() {
        let grid = ChunkGrid::new(config.subcarriers, l)?;
        for (point_index, &(snr_db, noise)) in points.iter().enumerate() {
            let gains: Vec<Vec<f64>> = unit.iter().map(|g| g.iter().map(|x| x / noise).collect()).collect();
            let ctx = SingleCell {
                grid: &grid,
                gains: &gains,
                weights: &weights,
                total_power: config.total_power,
                oracle_cap: config.oracle.max_candidates,
            };
            let mut sa_cache: Vec<(SaKind, RowResult<Assignment>)> = Vec::new();
            for &scheme in &config.schemes {
                let started = Instant::now();
                let result = ctx.run(scheme, &mut sa_cache);
                let elapsed = started.elapsed();
                let mut row = ResultRow {
                    scenario: config.scenario,
                    scheme,
                    chunk_size: l,
                    snr_db,
                    trial,
                    seed: config.seed,
                    group: None,
                    rates: Vec::new(),
                    metrics: None,
                    norm_sum_rate: None,
                    norm_min_weighted_rate: None,
                    wall_time_us: config.record_timing.then(|| elapsed.as_micros() as u64),
                    error: None,
                };
                fill(&mut row, result.map(|r| (r, weights.clone())));
                out.push(Keyed {
                    chunk_index,
                    point_index,
                    row,
                });
            }
        }
    }
    Ok(out)
}

struct SingleCell<'a> {
    grid: &'a ChunkGrid,
    gains: &'a [Vec<f64>],
    weights: &'a [f64],
    total_power: f64,
    oracle_cap: u64,
}

impl SingleCell<'_> {
    fn allocate(&self, pa: PaKind, assignment: &Assignment) -> Result<PowerAllocation> {
        match pa {
            PaKind::Proposed => proposed_pa(assignment, self.grid, self.gains, self.weights, self.total_power),
            PaKind::Uniform => Ok(uniform_pa(assignment, self.grid, self.total_power)),
            PaKind::Exact => exact_pa_oracle(assignment, self.grid, self.gains, self.weights, self.total_power),
        }
    }

    fn rates_under(&self, pa: PaKind, assignment: &Assignment) -> Result<Vec<f64>> {
        let allocation = self.allocate(pa, assignment)?;
        debug_assert!(assignment.check_partition(self.grid).is_ok());
        Ok(allocation.user_rates(assignment, self.grid, self.gains))
    }

    /// Heuristic SAs see only the uniform-power rate table and are computed
    /// once per SA for all PAs. The exhaustive SA searches under the PA it is
    /// paired with.
    fn assignment(&self, sa: SaKind, cache: &mut Vec<(SaKind, RowResult<Assignment>)>) -> RowResult<Assignment> {
        if let Some((_, a)) = cache.iter().find(|(s, _)| *s == sa) {
            return a.clone();
        }
        let users = self.gains.len();
        let a = (|| {
            let table = chunk_rates(self.gains, self.grid, self.total_power / self.grid.total_subcarriers() as f64)?;
            match sa {
                SaKind::Proposed => Ok(proposed_sa(&table, self.weights)?.assignment),
                SaKind::Shen => Ok(shen_sa(&table, self.weights)?.assignment),
                SaKind::Static => static_sa(users, self.grid),
                SaKind::Exhaustive => unreachable!("exhaustive SA depends on the PA"),
            }
        })()
        .map_err(|e: Error| e.to_string());
        cache.push((sa, a.clone()));
        a
    }

    fn run(&self, scheme: SchemePair, cache: &mut Vec<(SaKind, RowResult<Assignment>)>) -> RowResult<Vec<f64>> {
        if scheme.sa == SaKind::Exhaustive {
            let users = self.gains.len();
            return exhaustive_sa_oracle(users, self.grid.chunk_count(), self.weights, self.oracle_cap, |a| {
                self.rates_under(scheme.pa, a)
            })
            .map(|o| o.rates)
            .map_err(|e| e.to_string());
        }
        let assignment = self.assignment(scheme.sa, cache)?;
        self.rates_under(scheme.pa, &assignment).map_err(|e| e.to_string())
    }
}

type RowResult<T> = std::result::Result<T, String>;

fn fill(row: &mut ResultRow, result: RowResult<(Vec<f64>, Vec<f64>)>) {
    let evaluated = result.and_then(|(rates, weights)| {
        TrialMetrics::evaluate(&rates, &weights)
            .map(|m| (rates, m))
            .map_err(|e| e.to_string())
    });
    match evaluated {
        Ok((rates, metrics)) => {
            row.rates = rates;
            row.metrics = Some(metrics);
        }
        Err(e) => row.error = Some(e),
    }
}

fn sa_scheme(sa: SaKind) -> SaScheme {
    match sa {
        SaKind::Proposed => SaScheme::Proposed,
        SaKind::Shen => SaScheme::Shen,
        SaKind::Static => SaScheme::Static,
        SaKind::Exhaustive => SaScheme::Exhaustive,
    }
}

fn multicell_trial(config: &ExperimentConfig, trial: u32) -> Result<Vec<Keyed>> {
    let params = config.multicell_params();
    let weights = GroupWeights {
        centre: config.weights(),
        edge: config.edge_weights(),
    };
    let cap = config.oracle.max_candidates;
    let mut out = Vec::new();
    for (chunk_index, &l) in config.chunk_sizes.iter().enumerate() {
        let scenario = CellScenario::draw(&params, l, config.seed, trial)?;
        for &scheme in &config.schemes {
            let started = Instant::now();
            let per_group: Vec<(Group, RowResult<(Vec<f64>, Vec<f64>)>)> = match config.scenario {
                ScenarioKind::MultiCell => match multicell_sa(&scenario, &weights, sa_scheme(scheme.sa), cap) {
                    Ok(alloc) => [Group::Centre, Group::Edge]
                        .into_iter()
                        .map(|g| {
                            let r = alloc
                                .group(g)
                                .map(|a| (a.rates.clone(), a.weights.clone()))
                                .ok_or_else(|| format!("no {} users", g.label()));
                            (g, r)
                        })
                        .collect(),
                    Err(e) => both_groups_failed(e),
                },
                _ => match reuse1_baseline(&scenario, &weights, sa_scheme(scheme.sa), cap) {
                    Ok(alloc) => [Group::Centre, Group::Edge]
                        .into_iter()
                        .map(|g| {
                            let members = scenario.group_members(g);
                            let r = if members.is_empty() {
                                Err(format!("no {} users", g.label()))
                            } else {
                                Ok((
                                    members.iter().map(|&k| alloc.rates[k]).collect(),
                                    members.iter().map(|&k| alloc.weights[k]).collect(),
                                ))
                            };
                            (g, r)
                        })
                        .collect(),
                    Err(e) => both_groups_failed(e),
                },
            };
            let elapsed = started.elapsed();
            for (group, result) in per_group {
                let mut row = ResultRow {
                    scenario: config.scenario,
                    scheme,
                    chunk_size: l,
                    snr_db: None,
                    trial,
                    seed: config.seed,
                    group: Some(group),
                    rates: Vec::new(),
                    metrics: None,
                    norm_sum_rate: None,
                    norm_min_weighted_rate: None,
                    wall_time_us: config.record_timing.then(|| elapsed.as_micros() as u64),
                    error: None,
                };
                fill(&mut row, result);
                out.push(Keyed {
                    chunk_index,
                    point_index: 0,
                    row,
                });
            }
        }
    }
    Ok(out)
}

fn both_groups_failed(e: Error) -> Vec<(Group, RowResult<(Vec<f64>, Vec<f64>)>)> {
    let msg = e.to_string();
    vec![(Group::Centre, Err(msg.clone())), (Group::Edge, Err(msg))]
}

/// The reference for normalized columns: exhaustive SA with exact PA in
/// single-cell runs, exhaustive SA with uniform PA in multi-cell runs.
fn reference_scheme(scenario: ScenarioKind) -> SchemePair {
    SchemePair {
        sa: SaKind::Exhaustive,
        pa: if scenario.is_multicell() {
            PaKind::Uniform
        } else {
            PaKind::Exact
        },
    }
}

fn attach_normalization(config: &ExperimentConfig, rows: &mut [Keyed]) {
    let reference = reference_scheme(config.scenario);
    let refs: Vec<(usize, usize, Option<Group>, TrialMetrics)> = rows
        .iter()
        .filter(|k| k.row.scheme == reference)
        .filter_map(|k| {
            k.row
                .metrics
                .clone()
                .map(|m| (k.chunk_index, k.point_index, k.row.group, m))
        })
        .collect();
    for k in rows.iter_mut() {
        let Some(m) = &k.row.metrics else { continue };
        let Some((_, _, _, r)) = refs
            .iter()
            .find(|(c, p, g, _)| *c == k.chunk_index && *p == k.point_index && *g == k.row.group)
        else {
            continue;
        };
        k.row.norm_sum_rate = normalize_vs_oracle(m.sum_rate, r.sum_rate).ok();
        k.row.norm_min_weighted_rate = normalize_vs_oracle(m.min_weighted_rate, r.min_weighted_rate).ok();
    }
}

/// Config of the three-row golden fixture.
pub const GOLDEN_CONFIG: &str = r#"
scenario = "single-cell"
subcarriers = 16
chunk_sizes = [2]
users = 2
taps = [2, 4]
weights = [1, 2]
snr_db = [0]
trials = 1
seed = 20240601
schemes = [
  { sa = "proposed", pa = "proposed" },
  { sa = "shen", pa = "uniform" },
  { sa = "exhaustive", pa = "exact" },
]
"#;

/// Runs the golden fixture config and renders its CSV.
pub fn golden_csv() -> Result<String> {
    let config = ExperimentConfig::from_toml(GOLDEN_CONFIG)?;
    let output = run_experiment(&config, Some(1))?;
    let mut buf = Vec::new();
    write_rows(&mut buf, &output.rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}
