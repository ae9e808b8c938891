use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Summary;
use super::{evaluate, max_stabilized_angle, AngleSearch, LtiController};
use crate::plant::{PhysicalParams, SensorSpec, SensorTier};
use crate::rl::{policy_sha256, save_policy, train, write_curve_csv, PolicyController, SacConfig, TrainConfig};
use crate::rng::derive_seed;
use crate::synthesis::{
    build_generalized_plant, default_epsilon, hinf_synthesize, validate_controller, ControllerArtifact,
    SynthesisOptions,
};
use crate::sysid::{collect_budget, dataset_hash, identify, SysidMethod, DEFAULT_ARX_ORDER, DEFAULT_MODEL_ORDER};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Rl,
    HinfArxhk,
    HinfFullstate,
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rl => "rl",
            Self::HinfArxhk => "hinf_arxhk",
            Self::HinfFullstate => "hinf_fullstate",
        }
    }

    fn sysid(self) -> Option<SysidMethod> {
        match self {
            Self::Rl => None,
            Self::HinfArxhk => Some(SysidMethod::Arxhk),
            Self::HinfFullstate => Some(SysidMethod::FullState),
        }
    }
}

/// SAC settings used by RL sweeps; the temperature follows the sensor tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlSettings {
    pub max_episodes: usize,
    pub history_len: usize,
    pub hidden_widths: Vec<usize>,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub buffer_capacity: usize,
}

impl Default for RlSettings {
    fn default() -> Self {
        let sac = SacConfig::default();
        Self {
            max_episodes: TrainConfig::default().max_episodes,
            history_len: sac.history_len,
            hidden_widths: sac.hidden_widths,
            batch_size: sac.batch_size,
            warmup_steps: sac.warmup_steps,
            buffer_capacity: sac.buffer_capacity,
        }
    }
}

impl RlSettings {
    pub fn sac_config(&self, tier: SensorTier, seed: u64) -> SacConfig {
        SacConfig {
            history_len: self.history_len,
            hidden_widths: self.hidden_widths.clone(),
            batch_size: self.batch_size,
            warmup_steps: self.warmup_steps,
            buffer_capacity: self.buffer_capacity,
            seed,
            ..SacConfig::for_tier(tier)
        }
    }
}

/// One experiment grid: every fixation x tier x budget x repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub fixations: Vec<f64>,
    pub tiers: Vec<SensorTier>,
    pub method: SweepMethod,
    /// Identification budgets in samples (ignored for RL).
    pub budgets: Vec<usize>,
    pub n_eval_episodes: usize,
    /// Defaults to 7 for control sweeps and 5 for RL.
    pub n_repeats: Option<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub order_p: usize,
    pub order_n: usize,
    /// Control-effort weight; per-tier default when absent.
    pub epsilon: Option<f64>,
    pub angle_search: AngleSearch,
    pub compute_max_angle: bool,
    pub save_artifacts: bool,
    pub rl: RlSettings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            fixations: vec![1.0, 0.9, 0.8, 0.7],
            tiers: SensorTier::ALL.to_vec(),
            method: SweepMethod::HinfArxhk,
            budgets: vec![100, 1000, 5000, 10000, 15000, 20000],
            n_eval_episodes: 100,
            n_repeats: None,
            seed: 0,
            output_dir: PathBuf::from("sweep_out"),
            order_p: DEFAULT_ARX_ORDER,
            order_n: DEFAULT_MODEL_ORDER,
            epsilon: None,
            angle_search: AngleSearch::default(),
            compute_max_angle: true,
            save_artifacts: true,
            rl: RlSettings::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn repeats(&self) -> usize {
        self.n_repeats
            .unwrap_or(if self.method == SweepMethod::Rl { 5 } else { 7 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.fixations.is_empty() || self.tiers.is_empty() {
            return bad("fixations and tiers must be non-empty".into());
        }
        for &f in &self.fixations {
            PhysicalParams::with_fixation(f)?;
        }
        if self.method != SweepMethod::Rl && (self.budgets.is_empty() || self.budgets.contains(&0)) {
            return bad("control sweeps need positive budgets".into());
        }
        if self.n_eval_episodes == 0 || self.repeats() == 0 {
            return bad("n_eval_episodes and n_repeats must be positive".into());
        }
        if let Some(e) = self.epsilon {
            if e.is_nan() || e <= 0.0 {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        Ok(())
    }

    fn jobs(&self) -> Vec<Job> {
        let budgets: Vec<Option<usize>> = if self.method == SweepMethod::Rl {
            vec![None]
        } else {
            self.budgets.iter().map(|&b| Some(b)).collect()
        };
        let mut jobs = Vec::new();
        for &fixation in &self.fixations {
            for &tier in &self.tiers {
                for &budget in &budgets {
                    for repeat in 0..self.repeats() {
                        jobs.push(Job {
                            fixation,
                            tier,
                            budget,
                            repeat,
                            seed: derive_seed(self.seed, "repeat", repeat as u64),
                        });
                    }
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    fixation: f64,
    tier: SensorTier,
    budget: Option<usize>,
    repeat: usize,
    seed: u64,
}

impl Job {
    fn tag(&self, method: SweepMethod) -> String {
        let budget = self.budget.map_or(String::new(), |b| format!("_b{b}"));
        format!(
            "{}_l{}_{}{budget}_r{}",
            method.name(),
            self.fixation,
            self.tier,
            self.repeat
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Infeasible,
    Error,
}

/// One row of `cells.csv`, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub method: SweepMethod,
    pub fixation: f64,
    pub tier: SensorTier,
    pub budget: Option<usize>,
    pub repeat: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub error: Option<String>,
    pub dataset_sha256: Option<String>,
    pub controller_sha256: Option<String>,
    pub gamma: Option<f64>,
    pub internally_stable: Option<bool>,
    pub spectral_radius: Option<f64>,
    pub t_norm: Option<f64>,
    pub bound: Option<f64>,
    pub bound_respected: Option<bool>,
    pub max_angle_deg: Option<f64>,
    pub non_monotone: Option<bool>,
    pub avg_reward: Option<f64>,
    pub success_rate: Option<f64>,
    pub final_running_reward: Option<f64>,
    pub episodes_trained: Option<usize>,
}

impl CellRecord {
    fn empty(method: SweepMethod, job: &Job) -> Self {
        Self {
            method,
            fixation: job.fixation,
            tier: job.tier,
            budget: job.budget,
            repeat: job.repeat,
            seed: job.seed,
            status: CellStatus::Ok,
            error: None,
            dataset_sha256: None,
            controller_sha256: None,
            gamma: None,
            internally_stable: None,
            spectral_radius: None,
            t_norm: None,
            bound: None,
            bound_respected: None,
            max_angle_deg: None,
            non_monotone: None,
            avg_reward: None,
            success_rate: None,
            final_running_reward: None,
            episodes_trained: None,
        }
    }
}

/// Learning curve of one RL cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub fixation: f64,
    pub tier: SensorTier,
    pub repeat: usize,
    pub episode: usize,
    pub running_reward: f64,
    pub steps_cumulative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAngleRow {
    pub fixation: f64,
    pub tier: SensorTier,
    pub budget: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRow {
    pub fixation: f64,
    pub tier: SensorTier,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: SweepMethod,
    pub fixation: f64,
    pub tier: SensorTier,
    pub avg_reward: f64,
    pub success_rate: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<CellRecord>,
    pub max_angle: Vec<MaxAngleRow>,
    pub reward: Vec<RewardRow>,
    pub summary: Vec<SummaryRow>,
    pub curves: Vec<CurveRow>,
}

impl SweepResult {
    pub fn cells_for(
        &self,
        fixation: f64,
        tier: SensorTier,
        budget: Option<usize>,
    ) -> impl Iterator<Item = &CellRecord> {
        self.cells
            .iter()
            .filter(move |c| c.fixation == fixation && c.tier == tier && c.budget == budget)
    }

    pub fn max_angle_row(&self, fixation: f64, tier: SensorTier, budget: usize) -> Option<&MaxAngleRow> {
        self.max_angle
            .iter()
            .find(|r| r.fixation == fixation && r.tier == tier && r.budget == budget)
    }
}

fn hinf_cell(spec: &ExperimentSpec, job: &Job, method: SysidMethod, artifacts: Option<&Path>) -> Result<CellRecord> {
    let mut rec = CellRecord::empty(spec.method, job);
    let params = PhysicalParams::with_fixation(job.fixation)?;
    let sensor = SensorSpec::for_params(job.tier, &params);
    let budget = job.budget.expect("control cells have a budget");
    let data = collect_budget(&params, &sensor, budget, job.seed)?;
    let hash = dataset_hash(&data)?;
    rec.dataset_sha256 = Some(hash.clone());
    let model = identify(&data, method, &params, spec.order_p, spec.order_n)?;
    let epsilon = spec.epsilon.unwrap_or_else(|| default_epsilon(job.tier));
    let synth = hinf_synthesize(&build_generalized_plant(&model, epsilon)?, &SynthesisOptions::default())?;
    if !synth.feasible {
        rec.status = CellStatus::Infeasible;
        rec.error = synth.diagnostics.failure.map(|f| format!("{f:?}"));
        rec.max_angle_deg = Some(0.0);
        return Ok(rec);
    }
    let artifact = ControllerArtifact::from_synthesis(&synth, Some(hash))?;
    rec.controller_sha256 = Some(artifact.sha256()?);
    rec.gamma = Some(synth.gamma_achieved);
    if let Some(dir) = artifacts {
        artifact.write(&dir.join(format!("{}.json", job.tag(spec.method))))?;
    }
    let search = AngleSearch {
        seed: derive_seed(job.seed, "angle", 0),
        max_deg: if spec.compute_max_angle {
            spec.angle_search.max_deg
        } else {
            0.0
        },
        ..spec.angle_search
    };
    let report = validate_controller(&artifact.controller, &params, &sensor, &search)?;
    rec.internally_stable = Some(report.internally_stable);
    rec.spectral_radius = Some(report.spectral_radius);
    rec.t_norm = report.t_norm;
    rec.bound = Some(report.bound);
    rec.bound_respected = report.bound_respected;
    if spec.compute_max_angle {
        rec.max_angle_deg = Some(report.max_angle.degrees);
        rec.non_monotone = Some(report.max_angle.non_monotone);
    }
    let mut k = LtiController::new(artifact.controller)?;
    let ev = evaluate(
        &mut k,
        &params,
        &sensor,
        spec.n_eval_episodes,
        derive_seed(job.seed, "eval", 0),
    )?;
    rec.avg_reward = Some(ev.avg_reward);
    rec.success_rate = Some(ev.success_rate);
    Ok(rec)
}

fn rl_cell(spec: &ExperimentSpec, job: &Job, artifacts: Option<&Path>) -> Result<(CellRecord, Vec<CurveRow>)> {
    let mut rec = CellRecord::empty(spec.method, job);
    let params = PhysicalParams::with_fixation(job.fixation)?;
    let sensor = SensorSpec::for_params(job.tier, &params);
    let sac = spec.rl.sac_config(job.tier, job.seed);
    let cfg = TrainConfig {
        max_episodes: spec.rl.max_episodes,
        ..TrainConfig::default()
    };
    let out = train(&params, &sensor, &sac, &cfg, |_| {})?;
    rec.final_running_reward = Some(out.final_running_reward());
    rec.episodes_trained = Some(out.curve.len());
    rec.controller_sha256 = Some(policy_sha256(&out.agent.policy));
    if let Some(dir) = artifacts {
        let tag = job.tag(spec.method);
        save_policy(&dir.join(format!("{tag}.json")), &out.agent.policy, &sac)?;
        write_curve_csv(&dir.join(format!("{tag}_curve.csv")), &out.curve)?;
    }
    let mut k = PolicyController::new(out.agent.policy.clone(), sac.history_len);
    if spec.compute_max_angle {
        let search = AngleSearch {
            seed: derive_seed(job.seed, "angle", 0),
            ..spec.angle_search
        };
        let m = max_stabilized_angle(&mut k, &params, &sensor, &search)?;
        rec.max_angle_deg = Some(m.degrees);
        rec.non_monotone = Some(m.non_monotone);
    }
    let ev = evaluate(
        &mut k,
        &params,
        &sensor,
        spec.n_eval_episodes,
        derive_seed(job.seed, "eval", 0),
    )?;
    rec.avg_reward = Some(ev.avg_reward);
    rec.success_rate = Some(ev.success_rate);
    let curve = out
        .curve
        .iter()
        .map(|p| CurveRow {
            fixation: job.fixation,
            tier: job.tier,
            repeat: job.repeat,
            episode: p.episode,
            running_reward: p.running_reward,
            steps_cumulative: p.steps_cumulative,
        })
        .collect();
    Ok((rec, curve))
}

fn run_job(spec: &ExperimentSpec, job: &Job, artifacts: Option<&Path>) -> (CellRecord, Vec<CurveRow>) {
    let result = match spec.method.sysid() {
        Some(m) => hinf_cell(spec, job, m, artifacts).map(|r| (r, Vec::new())),
        None => rl_cell(spec, job, artifacts),
    };
    result.unwrap_or_else(|e| {
        let mut rec = CellRecord::empty(spec.method, job);
        rec.status = CellStatus::Error;
        rec.error = Some(e.to_string());
        (rec, Vec::new())
    })
}

fn summarize(spec: &ExperimentSpec, cells: &[CellRecord]) -> (Vec<MaxAngleRow>, Vec<RewardRow>, Vec<SummaryRow>) {
    let mut max_angle = Vec::new();
    let mut reward = Vec::new();
    let mut summary = Vec::new();
    let top_budget = spec.budgets.iter().copied().max();
    for &fixation in &spec.fixations {
        for &tier in &spec.tiers {
            let in_cell = |b: Option<usize>| {
                cells
                    .iter()
                    .filter(move |c| c.fixation == fixation && c.tier == tier && c.budget == b)
            };
            if spec.method != SweepMethod::Rl {
                for &b in &spec.budgets {
                    let angles: Vec<f64> = in_cell(Some(b)).filter_map(|c| c.max_angle_deg).collect();
                    if let Some(s) = Summary::of(&angles) {
                        max_angle.push(MaxAngleRow {
                            fixation,
                            tier,
                            budget: b,
                            median: s.median,
                            q25: s.q25,
                            q75: s.q75,
                            n: s.n,
                        });
                    }
                }
            }
            let final_budget = if spec.method == SweepMethod::Rl {
                None
            } else {
                top_budget
            };
            let evaluated: Vec<&CellRecord> = in_cell(final_budget).filter(|c| c.avg_reward.is_some()).collect();
            let rewards: Vec<f64> = evaluated.iter().filter_map(|c| c.avg_reward).collect();
            if let Some(s) = Summary::of(&rewards) {
                reward.push(RewardRow {
                    fixation,
                    tier,
                    median: s.median,
                    q25: s.q25,
                    q75: s.q75,
                    n: s.n,
                });
                let n = evaluated.len() as f64;
                summary.push(SummaryRow {
                    method: spec.method,
                    fixation,
                    tier,
                    avg_reward: rewards.iter().sum::<f64>() / n,
                    success_rate: evaluated.iter().filter_map(|c| c.success_rate).sum::<f64>() / n,
                    n: evaluated.len(),
                });
            }
        }
    }
    (max_angle, reward, summary)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the grid on `jobs` worker threads and writes the result tables into
/// `spec.output_dir`. Failed cells are recorded and do not stop the sweep.
pub fn run_sweep(spec: &ExperimentSpec, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    fs::create_dir_all(&spec.output_dir)?;
    let artifacts = spec.output_dir.join("artifacts");
    if spec.save_artifacts {
        fs::create_dir_all(&artifacts)?;
    }
    let artifacts = spec.save_artifacts.then_some(artifacts.as_path());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let grid = spec.jobs();
    let results: Vec<(CellRecord, Vec<CurveRow>)> =
        pool.install(|| grid.par_iter().map(|job| run_job(spec, job, artifacts)).collect());
    let (cells, curves): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let curves: Vec<CurveRow> = curves.into_iter().flatten().collect();
    let (max_angle, reward, summary) = summarize(spec, &cells);

    let dir = &spec.output_dir;
    fs::write(dir.join("spec.json"), serde_json::to_string_pretty(spec)?)?;
    write_csv(&dir.join("cells.csv"), &cells)?;
    write_csv(&dir.join("reward_by_fixation.csv"), &reward)?;
    write_csv(&dir.join("reward_summary.csv"), &summary)?;
    if spec.method == SweepMethod::Rl {
        write_csv(&dir.join("rl_curves.csv"), &curves)?;
    } else {
        write_csv(&dir.join("max_angle_by_budget.csv"), &max_angle)?;
    }
    Ok(SweepResult {
        cells,
        max_angle,
        reward,
        summary,
        curves,
    })
}
