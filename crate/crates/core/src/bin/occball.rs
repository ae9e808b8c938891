use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use occball::harness::{
    evaluate, max_stabilized_angle, run_sweep, AngleSearch, Controller, ExperimentSpec, LtiController, MaxAngle,
    ZeroController,
};
use occball::limits::fixation_limits;
use occball::plant::{run_episode, write_episode_metadata, write_trajectory_csv, EpisodeConfig, EpisodeMetadata};
use occball::rl::{load_policy, save_policy, train, write_curve_csv, PolicyController, SacConfig, TrainConfig};
use occball::synthesis::{
    build_generalized_plant, default_epsilon, hinf_synthesize, validate_controller, ControllerArtifact,
    SynthesisOptions,
};
use occball::sysid::{
    collect_budget, write_dataset, ModelArtifact, SysidMethod, DEFAULT_ARX_ORDER, DEFAULT_MODEL_ORDER,
};
use occball::{Error, PhysicalParams, Result, SensorSpec, SensorTier, SimState};

#[derive(Parser)]
#[command(
    name = "occball",
    version,
    about = "Occluded cartpole: limits, identification, synthesis and RL"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for outputs without an explicit path.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unstable pole, zero and sensitivity bound per fixation point (CSV).
    Limits {
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.9,0.8,0.7")]
        fixations: Vec<f64>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one episode and write its trajectory.
    Simulate {
        #[command(flatten)]
        target: Target,
        /// Initial tilt in degrees (other states zero); random start otherwise.
        #[arg(long)]
        theta0: Option<f64>,
        /// Trajectory CSV; a JSON sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect excitation data and identify a linear model.
    Sysid {
        #[arg(long, default_value_t = 1.0)]
        fixation: f64,
        #[arg(long, default_value = "true_z", value_parser = parse_tier)]
        sensor: SensorTier,
        #[arg(long, default_value_t = 20000)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_ARX_ORDER)]
        order_p: usize,
        #[arg(long, default_value_t = DEFAULT_MODEL_ORDER)]
        order_n: usize,
        #[arg(long, default_value = "arxhk", value_parser = parse_method)]
        method: SysidMethod,
        /// Also persist the dataset (CSV per trajectory plus manifest).
        #[arg(long)]
        save_data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// H-infinity synthesis on an identified model.
    Synth {
        #[arg(long)]
        model_in: PathBuf,
        /// Control-effort weight; defaults per sensor tier.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip validation against the true plant.
        #[arg(long)]
        no_validate: bool,
    },
    /// Train a SAC policy.
    TrainRl {
        #[arg(long, default_value_t = 1.0)]
        fixation: f64,
        #[arg(long, default_value = "true_z", value_parser = parse_tier)]
        sensor: SensorTier,
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        #[arg(long)]
        history_len: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        warmup_steps: Option<usize>,
        /// Entropy temperature; defaults per sensor tier.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Average reward, success rate and optionally the max stabilized angle.
    Eval {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long)]
        max_angle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid described by a JSON spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
}

/// Plant, sensor and controller an episode runs with.
#[derive(Args)]
struct Target {
    #[arg(long, default_value_t = 1.0)]
    fixation: f64,
    #[arg(long, default_value = "true_z", value_parser = parse_tier)]
    sensor: SensorTier,
    /// Controller artifact from `synth`.
    #[arg(long, conflicts_with = "policy")]
    controller: Option<PathBuf>,
    /// Policy checkpoint from `train-rl`.
    #[arg(long)]
    policy: Option<PathBuf>,
}

impl Target {
    fn plant(&self) -> Result<(PhysicalParams, SensorSpec)> {
        let params = PhysicalParams::with_fixation(self.fixation)?;
        Ok((params, SensorSpec::for_params(self.sensor, &params)))
    }

    fn controller(&self) -> Result<(Box<dyn Controller>, String)> {
        if let Some(path) = &self.controller {
            let art = ControllerArtifact::read(path)?;
            return Ok((
                Box::new(LtiController::new(art.controller)?),
                path.display().to_string(),
            ));
        }
        if let Some(path) = &self.policy {
            let (policy, cfg) = load_policy(path)?;
            return Ok((
                Box::new(PolicyController::new(policy, cfg.history_len)),
                path.display().to_string(),
            ));
        }
        Ok((Box::new(ZeroController), "zero".into()))
    }
}

fn parse_tier(s: &str) -> std::result::Result<SensorTier, String> {
    SensorTier::parse(s).ok_or_else(|| format!("unknown sensor '{s}' (true_z, depth, rgb)"))
}

fn parse_method(s: &str) -> std::result::Result<SysidMethod, String> {
    SysidMethod::parse(s).ok_or_else(|| format!("unknown method '{s}' (arxhk, fullstate)"))
}

fn output(out: Option<PathBuf>, out_dir: &Path, default: &str) -> Result<PathBuf> {
    let path = out.unwrap_or_else(|| out_dir.join(default));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    controller: String,
    fixation: f64,
    sensor: SensorTier,
    seed: u64,
    episodes: usize,
    avg_reward: f64,
    success_rate: f64,
    max_angle: Option<MaxAngle>,
    rewards: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_path();
    match cli.command {
        Command::Limits { fixations, out } => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["ell0", "pole", "zero", "bound"])?;
            for f in fixations {
                let row = fixation_limits(&PhysicalParams::with_fixation(f)?)?;
                w.write_record([
                    row.ell0.to_string(),
                    row.pole.to_string(),
                    row.zero.map_or(String::new(), |z| z.to_string()),
                    row.bound.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
            match out {
                Some(p) => fs::write(output(Some(p), out_dir, "")?, bytes)?,
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
        }
        Command::Simulate { target, theta0, out } => {
            let (params, sensor) = target.plant()?;
            let (mut k, name) = target.controller()?;
            let mut cfg = EpisodeConfig::with_seed(cli.seed);
            if let Some(deg) = theta0 {
                cfg = cfg.starting_at(SimState::upright_with_angle(deg.to_radians()));
            }
            let (result, traj) = run_episode(&params, &cfg, k.as_mut(), &sensor)?;
            let path = output(out, out_dir, "trajectory.csv")?;
            write_trajectory_csv(&path, &traj)?;
            let meta = EpisodeMetadata {
                params,
                sensor,
                config: cfg,
                result: Some(result),
                controller: Some(name),
            };
            write_episode_metadata(&path.with_extension("json"), &meta)?;
            println!(
                "reward {} success {} -> {}",
                result.reward(),
                result.success,
                path.display()
            );
        }
        Command::Sysid {
            fixation,
            sensor,
            budget,
            order_p,
            order_n,
            method,
            save_data,
            out,
        } => {
            let params = PhysicalParams::with_fixation(fixation)?;
            let spec = SensorSpec::for_params(sensor, &params);
            let data = collect_budget(&params, &spec, budget, cli.seed)?;
            if let Some(dir) = save_data {
                write_dataset(&dir, &data, cli.seed, &params, &spec)?;
            }
            let art = ModelArtifact::identify(&data, method, &params, &spec, cli.seed, order_p, order_n)?;
            let path = output(out, out_dir, "model.json")?;
            art.write(&path)?;
            println!(
                "{} model of order {} from {} samples -> {}",
                format!("{method:?}").to_lowercase(),
                art.model.n_states(),
                art.budget,
                path.display()
            );
        }
        Command::Synth {
            model_in,
            epsilon,
            out,
            no_validate,
        } => {
            let model = ModelArtifact::read(&model_in)?;
            let eps = epsilon.unwrap_or_else(|| default_epsilon(model.sensor.tier));
            let synth = hinf_synthesize(
                &build_generalized_plant(&model.model, eps)?,
                &SynthesisOptions::default(),
            )?;
            if !synth.feasible {
                return Err(Error::Numerical(format!(
                    "synthesis infeasible: {:?}",
                    synth.diagnostics.failure
                )));
            }
            let art = ControllerArtifact::from_synthesis(&synth, Some(model.dataset_sha256.clone()))?;
            let path = output(out, out_dir, "controller.json")?;
            art.write(&path)?;
            println!(
                "gamma {} certified {} -> {}",
                art.gamma,
                art.certified_norm,
                path.display()
            );
            if !no_validate {
                let search = AngleSearch {
                    seed: cli.seed,
                    ..AngleSearch::default()
                };
                let report = validate_controller(&art.controller, &model.params, &model.sensor, &search)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
        }
        Command::TrainRl {
            fixation,
            sensor,
            episodes,
            history_len,
            hidden,
            batch_size,
            warmup_steps,
            alpha,
        } => {
            let params = PhysicalParams::with_fixation(fixation)?;
            let spec = SensorSpec::for_params(sensor, &params);
            let base = SacConfig::for_tier(sensor);
            let sac = SacConfig {
                history_len: history_len.unwrap_or(base.history_len),
                hidden_widths: hidden.unwrap_or(base.hidden_widths.clone()),
                batch_size: batch_size.unwrap_or(base.batch_size),
                warmup_steps: warmup_steps.unwrap_or(base.warmup_steps),
                alpha: alpha.unwrap_or(base.alpha),
                seed: cli.seed,
                ..base
            };
            let cfg = TrainConfig {
                max_episodes: episodes,
                ..TrainConfig::default()
            };
            let outcome = train(&params, &spec, &sac, &cfg, |p| {
                if (p.episode + 1) % 50 == 0 {
                    eprintln!("episode {} running reward {:.1}", p.episode + 1, p.running_reward);
                }
            })?;
            fs::create_dir_all(out_dir)?;
            save_policy(&out_dir.join("policy.json"), &outcome.agent.policy, &sac)?;
            write_curve_csv(&out_dir.join("curve.csv"), &outcome.curve)?;
            println!(
                "{} episodes, stop {:?}, final running reward {:.2}",
                outcome.curve.len(),
                outcome.stop,
                outcome.final_running_reward()
            );
        }
        Command::Eval {
            target,
            episodes,
            max_angle,
            out,
        } => {
            let (params, sensor) = target.plant()?;
            let (mut k, name) = target.controller()?;
            let ev = evaluate(k.as_mut(), &params, &sensor, episodes, cli.seed)?;
            let angle = if max_angle {
                let search = AngleSearch {
                    seed: cli.seed,
                    ..AngleSearch::default()
                };
                Some(max_stabilized_angle(k.as_mut(), &params, &sensor, &search)?)
            } else {
                None
            };
            let report = EvalReport {
                controller: name,
                fixation: target.fixation,
                sensor: target.sensor,
                seed: cli.seed,
                episodes: ev.episodes.len(),
                avg_reward: ev.avg_reward,
                success_rate: ev.success_rate,
                max_angle: angle,
                rewards: ev.episodes.iter().map(|e| e.reward()).collect(),
            };
            let path = output(out, out_dir, "eval.json")?;
            write_json(&path, &report)?;
            println!(
                "avg_reward {} success_rate {} -> {}",
                report.avg_reward,
                report.success_rate,
                path.display()
            );
        }
        Command::Sweep { spec } => {
            let mut s = ExperimentSpec::from_json_file(&spec)?;
            if cli.seed != 0 {
                s.seed = cli.seed;
            }
            if out_dir != Path::new(".") {
                s.output_dir = out_dir.to_path_buf();
            }
            let jobs = if cli.jobs == 0 {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            } else {
                cli.jobs
            };
            let result = run_sweep(&s, jobs)?;
            let failed = result.cells.iter().filter(|c| c.error.is_some()).count();
            println!(
                "{} cells ({failed} not ok) -> {}",
                result.cells.len(),
                s.output_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
