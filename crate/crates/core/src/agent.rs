//! Per-pedestrian interaction loop: observe, build a belief, evaluate the
//! perceived risk of the current plan, replan when it exceeds the personal
//! threshold, and fall back to braking when no plan meets the cap.

use serde::{Deserialize, Serialize};

use crate::belief::{build_belief_with_lead, BeliefBias, BeliefComponent, BeliefPoint};
use crate::params::{ModelParams, PlanRefresh, PlanShiftMode};
use crate::perception::{init_observation, update_observation, Observation};
use crate::planner::{
    advance_plan, initial_plan, replan, shifted_emergency_plan, Plan, PlanOutcome, ReplanContext,
};
use crate::risk::perceived_risk;
use crate::rng::RandomSource;
use crate::state::{ControlInput, PedestrianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Personal risk threshold in (0, 1].
    pub rho: f64,
    pub bias: BeliefBias,
    /// Lateral start offset in the world frame (m).
    pub x_offset: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            rho: 0.65,
            bias: BeliefBias::NONE,
            x_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    #[default]
    Normal,
    /// The last replan was infeasible; the next one uses the looser cap.
    Recovering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanStatus {
    Success,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplanEvent {
    pub cap: f64,
    pub status: ReplanStatus,
    pub iterations: usize,
}

/// Plan and belief at a replan, for offline inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub plan: Plan,
    pub belief: Vec<BeliefPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub time: f64,
    /// Perceived risk of the plan held at the start of the step.
    pub risk: f64,
    /// Horizon point (0-based) carrying the maximum risk.
    pub risk_argmax: usize,
    pub threshold: f64,
    pub replan: Option<ReplanEvent>,
    /// Mode after this step's decisions.
    pub mode: AgentMode,
    /// Mean planned lateral position of the plan in force, own frame.
    pub plan_mean_x: f64,
    /// Whether this step falls on the planning cadence.
    pub sample: bool,
    #[serde(skip)]
    pub snapshot: Option<Box<Snapshot>>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    cfg: AgentConfig,
    initial_heading: f64,
    initial_speed: f64,
    mode: AgentMode,
    obs: Option<Observation>,
    plan: Plan,
    rng: RandomSource,
    held: usize,
    steps: usize,
    capture: bool,
}

impl Agent {
    pub fn new(
        cfg: AgentConfig,
        start: &PedestrianState,
        other: Option<&PedestrianState>,
        rng: RandomSource,
        p: &ModelParams,
    ) -> Self {
        Self {
            cfg,
            initial_heading: start.heading,
            initial_speed: start.v_forw,
            mode: AgentMode::Normal,
            obs: other.map(init_observation),
            plan: initial_plan(start, p),
            rng,
            held: 0,
            steps: 0,
            capture: false,
        }
    }

    /// Record plan and belief snapshots at every replan.
    pub fn with_snapshots(mut self, capture: bool) -> Self {
        self.capture = capture;
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn observation(&self) -> Option<&Observation> {
        self.obs.as_ref()
    }

    /// One 20 Hz step. `other` is the other pedestrian's true state in this
    /// agent's frame, frozen at the start of the step.
    pub fn tick(
        &mut self,
        ego: &PedestrianState,
        other: Option<&PedestrianState>,
        time: f64,
        p: &ModelParams,
    ) -> (ControlInput, Telemetry) {
        let lead = match (p.plan_shift_mode, p.plan_refresh) {
            (PlanShiftMode::PerPlanStep, PlanRefresh::SimStepAligned) => {
                (p.steps_per_plan() - self.held) as f64 * p.dt_sim
            }
            _ => p.dt_plan,
        };
        if self.held == 0 || p.plan_refresh != PlanRefresh::PlanStep {
            self.plan.rebase_with_lead(ego, lead, p.dt_plan);
        }

        if let (Some(truth), Some(obs)) = (other, self.obs.as_ref()) {
            self.obs = Some(update_observation(obs, truth, &mut self.rng, p));
        }
        let belief_at = |lead: f64| match self.obs.as_ref().filter(|_| other.is_some()) {
            Some(obs) => build_belief_with_lead(ego, self.initial_heading, obs, p, self.cfg.bias, lead),
            None => empty_belief(p),
        };
        let held_belief = belief_at(lead);
        let breakdown = perceived_risk(&self.plan.waypoints, &held_belief, p);
        let risk = breakdown.max_total;

        let cap = match self.mode {
            AgentMode::Recovering => Some(p.retry_factor * self.cfg.rho),
            AgentMode::Normal if risk > self.cfg.rho => Some(p.replan_factor * self.cfg.rho),
            AgentMode::Normal => None,
        };

        let mut event = None;
        let mut snapshot = None;
        if let Some(cap) = cap {
            let ctx = ReplanContext {
                initial_v: self.initial_speed,
                initial_heading: self.initial_heading,
                now: time,
            };
            // A new plan starts its first control now.
            let belief = if lead == p.dt_plan {
                held_belief
            } else {
                belief_at(p.dt_plan)
            };
            let report = replan(ego, &belief, cap, &self.plan, ctx, p);
            let status = match report.outcome {
                PlanOutcome::Success(plan) => {
                    self.plan = plan;
                    self.mode = AgentMode::Normal;
                    ReplanStatus::Success
                }
                PlanOutcome::Infeasible => {
                    self.plan = shifted_emergency_plan(ego, p, time);
                    self.mode = AgentMode::Recovering;
                    ReplanStatus::Infeasible
                }
            };
            self.held = 0;
            event = Some(ReplanEvent {
                cap,
                status,
                iterations: report.iterations,
            });
            if self.capture {
                snapshot = Some(Box::new(Snapshot {
                    time,
                    plan: self.plan.clone(),
                    belief: belief.clone(),
                }));
            }
        }

        let control = self.plan.first_control();
        let telemetry = Telemetry {
            time,
            risk,
            risk_argmax: breakdown.argmax_index,
            threshold: self.cfg.rho,
            replan: event,
            mode: self.mode,
            plan_mean_x: self.plan.mean_x(),
            sample: self.steps.is_multiple_of(p.steps_per_plan()),
            snapshot,
        };

        match p.plan_shift_mode {
            PlanShiftMode::PerPlanStep => {
                self.held += 1;
                if self.held >= p.steps_per_plan() {
                    self.plan = advance_plan(&self.plan, 1);
                    self.held = 0;
                }
            }
            PlanShiftMode::PerSimStep => self.plan = advance_plan(&self.plan, 1),
        }
        self.steps += 1;
        (control, telemetry)
    }
}

/// Belief points carrying no probability mass, used when nobody else is around.
fn empty_belief(p: &ModelParams) -> Vec<BeliefPoint> {
    let none = BeliefComponent {
        mean: 0.0,
        std: 1.0,
        weight: 0.0,
    };
    (1..=p.n_plan())
        .map(|k| BeliefPoint {
            t: k as f64 * p.dt_plan,
            y: 0.0,
            components: [none; 3],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn walker() -> PedestrianState {
        PedestrianState::new(0.0, 0.0, FRAC_PI_2, 1.3)
    }

    fn quiet() -> ModelParams {
        ModelParams {
            beta: 0.0,
            ..ModelParams::default()
        }
    }

    #[test]
    fn far_stationary_other_never_triggers() {
        let p = quiet();
        let other = PedestrianState::new(0.0, 40.0, -FRAC_PI_2, 0.0);
        let mut ego = walker();
        let mut agent = Agent::new(AgentConfig { rho: 0.1, ..Default::default() }, &ego, Some(&other), RandomSource::new(1), &p);
        for k in 0..200 {
            let (u, t) = agent.tick(&ego, Some(&other), k as f64 * p.dt_sim, &p);
            assert!(t.replan.is_none());
            assert!(t.risk < 0.1);
            assert_eq!(u, ControlInput::ZERO);
            ego = crate::dynamics::step(&ego, &u, p.dt_sim);
        }
        assert!(ego.x.abs() < 1e-12);
    }

    #[test]
    fn low_risk_keeps_plan() {
        let p = quiet();
        let other = PedestrianState::new(0.0, 15.0, -FRAC_PI_2, 1.3);
        let ego = walker();
        let mut agent = Agent::new(AgentConfig::default(), &ego, Some(&other), RandomSource::new(1), &p);
        let before = agent.plan().controls.clone();
        let (_, t) = agent.tick(&ego, Some(&other), 0.0, &p);
        assert!(t.risk < 0.65, "{}", t.risk);
        assert!(t.replan.is_none());
        assert_eq!(agent.plan().controls, before);
        assert!(t.sample);
    }

    #[test]
    fn high_risk_replans_with_tight_cap() {
        let p = quiet();
        let other = PedestrianState::new(0.0, 5.0, -FRAC_PI_2, 1.3);
        let ego = walker();
        let mut agent = Agent::new(AgentConfig::default(), &ego, Some(&other), RandomSource::new(1), &p);
        let (_, t) = agent.tick(&ego, Some(&other), 0.0, &p);
        assert!(t.risk > 0.65, "{}", t.risk);
        let event = t.replan.expect("replan");
        assert!((event.cap - 0.4875).abs() < 1e-12);
    }

    fn held_waypoints(refresh: PlanRefresh) -> Vec<Vec<PedestrianState>> {
        let p = ModelParams {
            plan_refresh: refresh,
            ..quiet()
        };
        let other = PedestrianState::new(0.0, 15.0, -FRAC_PI_2, 1.3);
        let mut ego = PedestrianState {
            omega: 0.2,
            ..walker()
        };
        let mut agent = Agent::new(AgentConfig::default(), &ego, Some(&other), RandomSource::new(1), &p);
        let mut out = vec![];
        // the last tick of the interval drops the head control
        for k in 0..p.steps_per_plan() - 1 {
            let (u, t) = agent.tick(&ego, Some(&other), k as f64 * p.dt_sim, &p);
            assert!(t.replan.is_none());
            out.push(agent.plan().waypoints.clone());
            ego = crate::dynamics::step(&ego, &u, p.dt_sim);
        }
        out
    }

    #[test]
    fn plan_step_refresh_keeps_waypoints_during_the_hold() {
        let w = held_waypoints(PlanRefresh::PlanStep);
        assert!(w.windows(2).all(|pair| pair[0] == pair[1]));
    }

    #[test]
    fn sim_step_refresh_recomputes_waypoints_every_tick() {
        let w = held_waypoints(PlanRefresh::SimStep);
        assert_ne!(w[0], w[1]);
        let aligned = held_waypoints(PlanRefresh::SimStepAligned);
        // the aligned rollout reproduces where the held plan actually goes
        let end = |w: &[PedestrianState]| w.last().copied().unwrap();
        assert!((end(&aligned[3]).x - end(&aligned[0]).x).abs() < (end(&w[3]).x - end(&w[0]).x).abs());
    }

    #[test]
    fn infeasible_replan_brakes_then_retries_looser() {
        let p = quiet();
        // the other pedestrian is nearly on top of the ego
        let other = PedestrianState::new(0.0, 0.6, -FRAC_PI_2, 1.3);
        let mut ego = walker();
        let mut agent = Agent::new(AgentConfig::default(), &ego, Some(&other), RandomSource::new(1), &p);
        let (u, t) = agent.tick(&ego, Some(&other), 0.0, &p);
        let event = t.replan.expect("replan");
        assert_eq!(event.status, ReplanStatus::Infeasible);
        assert_eq!(t.mode, AgentMode::Recovering);
        assert!((u.a_forw + 2.0).abs() < 1e-12, "braking clamped at the limit: {u:?}");

        ego = crate::dynamics::step(&ego, &u, p.dt_sim);
        let (_, t) = agent.tick(&ego, Some(&other), p.dt_sim, &p);
        let event = t.replan.expect("retry");
        assert!((event.cap - 0.585).abs() < 1e-12);
    }

    #[test]
    fn snapshots_only_when_enabled() {
        let p = quiet();
        let other = PedestrianState::new(0.0, 5.0, -FRAC_PI_2, 1.3);
        let ego = walker();
        let mut plain = Agent::new(AgentConfig::default(), &ego, Some(&other), RandomSource::new(1), &p);
        assert!(plain.tick(&ego, Some(&other), 0.0, &p).1.snapshot.is_none());
        let mut capturing = plain.clone().with_snapshots(true);
        let mut fresh = Agent::new(AgentConfig::default(), &ego, Some(&other), RandomSource::new(1), &p).with_snapshots(true);
        let snap = fresh.tick(&ego, Some(&other), 0.0, &p).1.snapshot.expect("snapshot");
        assert_eq!(snap.belief.len(), 28);
        assert_eq!(snap.plan.len(), 28);
        let _ = capturing.tick(&ego, Some(&other), 0.05, &p);
    }
}
