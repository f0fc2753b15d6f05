//! World stepping, termination rules, the built-in scenarios and seeded
//! batch execution.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig, AgentMode, ReplanStatus, Snapshot, Telemetry};
use crate::belief::BeliefBias;
use crate::dynamics::{clamp_control, step};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::RandomSource;
use crate::state::{PedestrianState, TrackFrame, HALF_WIDTH, SIDEWALK_LENGTH};

pub const SCENARIO_NAMES: [&str; 5] = [
    "symmetric",
    "different_sides",
    "different_risk_thresholds",
    "same_belief_bias",
    "different_belief_bias",
];

/// First recorded step at which A is past B along the sidewalk.
pub fn passing_step(rows: &[TraceRow]) -> Option<usize> {
    rows.iter()
        .find(|r| r.peds[0].state.y > r.peds[1].state.y)
        .map(|r| r.step)
}

/// Pedestrian A starts at `y = 0` walking towards `+y`; B starts at the far end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub a: AgentConfig,
    pub b: AgentConfig,
}

pub fn make_scenario(name: &str) -> Result<Scenario> {
    let even = AgentConfig::default();
    let (a, b) = match name {
        "symmetric" => (even, even),
        "different_sides" => (
            AgentConfig { x_offset: 0.1, ..even },
            AgentConfig { x_offset: -0.1, ..even },
        ),
        "different_risk_thresholds" => (AgentConfig { rho: 0.6, ..even }, AgentConfig { rho: 0.7, ..even }),
        // both expect the other to pass on their own left
        "same_belief_bias" => (
            AgentConfig { bias: BeliefBias::PASS_LEFT, ..even },
            AgentConfig { bias: BeliefBias::PASS_LEFT, ..even },
        ),
        "different_belief_bias" => (
            AgentConfig { bias: BeliefBias::PASS_RIGHT, ..even },
            AgentConfig { bias: BeliefBias::PASS_LEFT, ..even },
        ),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Ok(Scenario {
        name: name.to_string(),
        a,
        b,
    })
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (who, cfg) in [("a", &self.a), ("b", &self.b)] {
            if !(cfg.rho > 0.0 && cfg.rho <= 1.0) {
                return Err(Error::invalid(&format!("scenario.{who}.rho"), "must lie in (0, 1]"));
            }
            if !(cfg.bias.left > 0.0 && cfg.bias.right > 0.0) {
                return Err(Error::invalid(&format!("scenario.{who}.bias"), "multipliers must be positive"));
            }
            if !(cfg.x_offset.abs() < HALF_WIDTH) {
                return Err(Error::invalid(&format!("scenario.{who}.x_offset"), "must start on the sidewalk"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndState {
    Finished,
    Collision,
    OutOfBounds,
    Timeout,
}

/// One pedestrian at one step, in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianRow {
    pub state: PedestrianState,
    pub risk: f64,
    pub risk_argmax: usize,
    pub threshold: f64,
    pub replan_cap: Option<f64>,
    pub replan_status: Option<ReplanStatus>,
    pub iterations: usize,
    pub mode: AgentMode,
    pub plan_mean_x: f64,
    pub sample: bool,
}

impl PedestrianRow {
    pub fn replanned(&self) -> bool {
        self.replan_status.is_some()
    }
}

/// States at the start of a step and the decisions taken during it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub peds: [PedestrianRow; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub pedestrian: usize,
    pub step: usize,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: String,
    pub seed: u64,
    pub end_state: EndState,
    pub rows: Vec<TraceRow>,
    /// World states after the last step.
    pub final_states: [PedestrianState; 2],
    pub passing_step: Option<usize>,
    pub snapshots: Vec<SnapshotRecord>,
}

impl TrialResult {
    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    /// First step at which pedestrian `ped` replanned.
    pub fn first_replan_step(&self, ped: usize) -> Option<usize> {
        self.rows.iter().find(|r| r.peds[ped].replanned()).map(|r| r.step)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub snapshots: bool,
}

const FRAMES: [TrackFrame; 2] = [TrackFrame::Forward, TrackFrame::Reverse];

/// Start state of a pedestrian in its own frame.
fn start_state(cfg: &AgentConfig, frame: TrackFrame, p: &ModelParams) -> PedestrianState {
    let world_start = match frame {
        TrackFrame::Forward => PedestrianState::new(cfg.x_offset, 0.0, FRAC_PI_2, p.v_init),
        TrackFrame::Reverse => PedestrianState::new(cfg.x_offset, SIDEWALK_LENGTH, -FRAC_PI_2, p.v_init),
    };
    frame.from_world(&world_start)
}

pub fn run_trial(scenario: &Scenario, seed: u64, p: &ModelParams, opts: TrialOptions) -> TrialResult {
    let configs = [scenario.a, scenario.b];
    let mut states = [
        start_state(&configs[0], FRAMES[0], p),
        start_state(&configs[1], FRAMES[1], p),
    ];
    let mut agents: Vec<Agent> = (0..2)
        .map(|i| {
            let other = FRAMES[i].view(FRAMES[1 - i], &states[1 - i]);
            Agent::new(configs[i], &states[i], Some(&other), RandomSource::for_pedestrian(seed, i as u64), p)
                .with_snapshots(opts.snapshots)
        })
        .collect();

    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut end_state = EndState::Timeout;
    for k in 0..p.max_steps() {
        let time = k as f64 * p.dt_sim;
        let frozen = states;
        let mut telemetry: [Option<Telemetry>; 2] = [None, None];
        for i in 0..2 {
            let other = FRAMES[i].view(FRAMES[1 - i], &frozen[1 - i]);
            let (u, mut t) = agents[i].tick(&frozen[i], Some(&other), time, p);
            states[i] = step(&frozen[i], &clamp_control(u), p.dt_sim);
            if let Some(snapshot) = t.snapshot.take() {
                snapshots.push(SnapshotRecord {
                    pedestrian: i,
                    step: k,
                    snapshot: *snapshot,
                });
            }
            telemetry[i] = Some(t);
        }
        let [ta, tb] = telemetry.map(|t| t.expect("both agents ticked"));
        rows.push(TraceRow {
            step: k,
            time,
            peds: [
                row(&frozen[0], FRAMES[0], &ta),
                row(&frozen[1], FRAMES[1], &tb),
            ],
        });

        if let Some(end) = termination(&states, p) {
            end_state = end;
            break;
        }
    }

    let final_states = [FRAMES[0].to_world(&states[0]), FRAMES[1].to_world(&states[1])];
    let passing_step = passing_step(&rows);
    TrialResult {
        scenario: scenario.name.clone(),
        seed,
        end_state,
        rows,
        final_states,
        passing_step,
        snapshots,
    }
}

fn row(own: &PedestrianState, frame: TrackFrame, t: &Telemetry) -> PedestrianRow {
    let world = frame.to_world(own);
    let plan_mean_x = match frame {
        TrackFrame::Forward => t.plan_mean_x,
        TrackFrame::Reverse => -t.plan_mean_x,
    };
    PedestrianRow {
        state: world,
        risk: t.risk,
        risk_argmax: t.risk_argmax,
        threshold: t.threshold,
        replan_cap: t.replan.map(|e| e.cap),
        replan_status: t.replan.map(|e| e.status),
        iterations: t.replan.map_or(0, |e| e.iterations),
        mode: t.mode,
        plan_mean_x,
        sample: t.sample,
    }
}

/// States are in each pedestrian's own frame.
fn termination(states: &[PedestrianState; 2], p: &ModelParams) -> Option<EndState> {
    let world = [FRAMES[0].to_world(&states[0]), FRAMES[1].to_world(&states[1])];
    if world[0].distance_to(&world[1]) < p.r_collision {
        Some(EndState::Collision)
    } else if world.iter().any(|s| s.x.abs() > HALF_WIDTH) {
        Some(EndState::OutOfBounds)
    } else if states.iter().any(|s| s.y > SIDEWALK_LENGTH) {
        Some(EndState::Finished)
    } else {
        None
    }
}

/// Trials with seeds `base_seed .. base_seed + n_trials`, in seed order.
pub fn run_batch(
    scenario: &Scenario,
    n_trials: usize,
    base_seed: u64,
    p: &ModelParams,
    opts: TrialOptions,
) -> Vec<TrialResult> {
    (0..n_trials as u64)
        .into_par_iter()
        .map(|i| run_trial(scenario, base_seed.wrapping_add(i), p, opts))
        .collect()
}

pub fn run_batch_serial(
    scenario: &Scenario,
    n_trials: usize,
    base_seed: u64,
    p: &ModelParams,
    opts: TrialOptions,
) -> Vec<TrialResult> {
    (0..n_trials as u64)
        .map(|i| run_trial(scenario, base_seed.wrapping_add(i), p, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoloWalk {
    pub end_state: EndState,
    pub steps: usize,
    pub states: Vec<PedestrianState>,
}

/// A single pedestrian on an empty sidewalk.
pub fn run_solo_walk(cfg: AgentConfig, seed: u64, p: &ModelParams) -> SoloWalk {
    let mut state = start_state(&cfg, TrackFrame::Forward, p);
    let mut agent = Agent::new(cfg, &state, None, RandomSource::for_pedestrian(seed, 0), p);
    let mut states = vec![state];
    let mut end_state = EndState::Timeout;
    for k in 0..p.max_steps() {
        let (u, _) = agent.tick(&state, None, k as f64 * p.dt_sim, p);
        state = step(&state, &clamp_control(u), p.dt_sim);
        states.push(state);
        if state.x.abs() > HALF_WIDTH {
            end_state = EndState::OutOfBounds;
            break;
        }
        if state.y > SIDEWALK_LENGTH {
            end_state = EndState::Finished;
            break;
        }
    }
    SoloWalk {
        end_state,
        steps: states.len() - 1,
        states,
    }
}
