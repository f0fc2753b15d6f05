//! Deterministic plans: cost, risk-constrained replanning, emergency braking
//! and consumption of the plan head.

pub mod optimizer;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefPoint;
use crate::dynamics::{clamp_control, rollout_into, rollout_lead_into, step};
use crate::params::{ModelParams, RiskConstraint};
use crate::risk::{max_risk, point_risk_grad};
use crate::state::{ControlInput, PedestrianState, MAX_A_FORW, MAX_A_ORTH, MAX_OMEGA_DOT};

use optimizer::{Problem, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub controls: Vec<ControlInput>,
    /// `waypoints[k]` is the state after `k + 1` controls from `origin`.
    pub waypoints: Vec<PedestrianState>,
    pub origin: PedestrianState,
    pub created_at: f64,
}

impl Plan {
    pub fn from_controls(origin: PedestrianState, controls: Vec<ControlInput>, dt: f64, created_at: f64) -> Self {
        let mut waypoints = Vec::with_capacity(controls.len());
        rollout_into(&origin, &controls, dt, &mut waypoints);
        Self {
            controls,
            waypoints,
            origin,
            created_at,
        }
    }

    /// Recomputes the waypoints from a new origin with the same controls.
    pub fn rebase(&mut self, origin: &PedestrianState, dt: f64) {
        self.origin = *origin;
        rollout_into(origin, &self.controls, dt, &mut self.waypoints);
    }

    /// Like [`Plan::rebase`] when the first control has only `lead` seconds left.
    pub fn rebase_with_lead(&mut self, origin: &PedestrianState, lead: f64, dt: f64) {
        self.origin = *origin;
        rollout_lead_into(origin, &self.controls, lead, dt, &mut self.waypoints);
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn first_control(&self) -> ControlInput {
        self.controls.first().copied().unwrap_or(ControlInput::ZERO)
    }

    /// Mean planned lateral position over all waypoints.
    pub fn mean_x(&self) -> f64 {
        self.waypoints.iter().map(|w| w.x).sum::<f64>() / self.waypoints.len() as f64
    }
}

/// Drops the first `steps` entries and repeats the final control/waypoint pair
/// to keep the length. Waypoints are stale until the next [`Plan::rebase`].
pub fn advance_plan(plan: &Plan, steps: usize) -> Plan {
    let mut out = plan.clone();
    let n = plan.len();
    if n == 0 || steps == 0 {
        return out;
    }
    let steps = steps.min(n);
    let last_u = plan.controls[n - 1];
    let last_w = plan.waypoints[n - 1];
    out.controls.drain(..steps);
    out.waypoints.drain(..steps);
    out.controls.resize(n, last_u);
    out.waypoints.resize(n, last_w);
    out
}

/// Quadratic cost of a plan. Accelerations are normalized by their limits.
pub fn plan_cost(plan: &Plan, initial_v: f64, initial_heading: f64, p: &ModelParams) -> f64 {
    let l = p.lambdas();
    plan.controls
        .iter()
        .zip(&plan.waypoints)
        .map(|(u, s)| {
            let backwards = s.v_forw.min(0.0);
            l[0] * (s.v_forw - initial_v).powi(2)
                + l[1] * backwards * backwards
                + l[2] * s.v_orth * s.v_orth
                + l[3] * (s.heading - initial_heading).powi(2)
                + l[4] * (u.omega_dot / MAX_OMEGA_DOT).powi(2)
                + l[5] * (u.a_forw / MAX_A_FORW).powi(2)
                + l[6] * (u.a_orth / MAX_A_ORTH).powi(2)
        })
        .sum()
}

/// The unconstrained optimum: keep walking at the initial speed and heading.
pub fn initial_plan(s0: &PedestrianState, p: &ModelParams) -> Plan {
    Plan::from_controls(*s0, vec![ControlInput::ZERO; p.n_plan()], p.dt_plan, 0.0)
}

/// Brakes every velocity component with `a = -2 v`, re-evaluated per plan step
/// and clamped to the input limits.
pub fn shifted_emergency_plan(s: &PedestrianState, p: &ModelParams, now: f64) -> Plan {
    let mut controls = Vec::with_capacity(p.n_plan());
    let mut current = *s;
    for _ in 0..p.n_plan() {
        let u = clamp_control(ControlInput::new(
            -2.0 * current.v_forw,
            -2.0 * current.v_orth,
            -2.0 * current.omega,
        ));
        current = step(&current, &u, p.dt_plan);
        controls.push(u);
    }
    Plan::from_controls(*s, controls, p.dt_plan, now)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanOutcome {
    Success(Plan),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanReport {
    pub outcome: PlanOutcome,
    pub iterations: usize,
    pub max_violation: f64,
}

/// Where a replan starts from and what it aims for.
#[derive(Debug, Clone, Copy)]
pub struct ReplanContext {
    pub initial_v: f64,
    pub initial_heading: f64,
    pub now: f64,
}

/// Minimizes the plan cost subject to the perceived risk staying below
/// `risk_cap` at every horizon point, warm-started from `warm_start`.
pub fn replan(
    s: &PedestrianState,
    belief: &[BeliefPoint],
    risk_cap: f64,
    warm_start: &Plan,
    ctx: ReplanContext,
    p: &ModelParams,
) -> ReplanReport {
    let n = p.n_plan();
    assert_eq!(belief.len(), n, "belief must cover the plan horizon");
    let mut problem = PlanProblem::new(*s, belief, risk_cap, ctx, p);
    let start: Vec<f64> = warm_start
        .controls
        .iter()
        .chain(std::iter::repeat(&ControlInput::ZERO))
        .take(n)
        .flat_map(to_unit)
        .collect();
    let opts = SolverOptions {
        max_iterations: p.max_iterations,
        constraint_tol: p.constraint_tol,
        ..SolverOptions::default()
    };
    let sol = optimizer::solve(&mut problem, &start, &opts);
    let outcome = match sol.feasible {
        Some(z) => PlanOutcome::Success(Plan::from_controls(*s, from_unit(&z), p.dt_plan, ctx.now)),
        None => PlanOutcome::Infeasible,
    };
    ReplanReport {
        outcome,
        iterations: sol.iterations,
        max_violation: sol.max_violation,
    }
}

/// Maximum perceived risk of `plan` against `belief`.
pub fn plan_risk(plan: &Plan, belief: &[BeliefPoint], p: &ModelParams) -> f64 {
    max_risk(&plan.waypoints, belief, p)
}

const SCALE: [f64; 3] = [MAX_A_FORW, MAX_A_ORTH, MAX_OMEGA_DOT];

fn to_unit(u: &ControlInput) -> [f64; 3] {
    [u.a_forw / SCALE[0], u.a_orth / SCALE[1], u.omega_dot / SCALE[2]]
}

fn from_unit(z: &[f64]) -> Vec<ControlInput> {
    z.chunks_exact(3)
        .map(|c| ControlInput::new(c[0] * SCALE[0], c[1] * SCALE[1], c[2] * SCALE[2]))
        .collect()
}

/// Plan optimization over normalized controls. The risk constraint is either
/// the maximum over the horizon or one constraint per point. The gradient is
/// propagated backwards through the rollout.
pub struct PlanProblem<'a> {
    start: PedestrianState,
    belief: &'a [BeliefPoint],
    cap: f64,
    ctx: ReplanContext,
    p: &'a ModelParams,
    controls: Vec<ControlInput>,
    states: Vec<PedestrianState>,
    risk_dx: Vec<f64>,
    risk_dy: Vec<f64>,
    argmax: usize,
}

impl<'a> PlanProblem<'a> {
    pub fn new(
        start: PedestrianState,
        belief: &'a [BeliefPoint],
        cap: f64,
        ctx: ReplanContext,
        p: &'a ModelParams,
    ) -> Self {
        let n = p.n_plan();
        Self {
            start,
            belief,
            cap,
            ctx,
            p,
            controls: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            risk_dx: vec![0.0; n],
            risk_dy: vec![0.0; n],
            argmax: 0,
        }
    }
}

impl Problem for PlanProblem<'_> {
    fn dim(&self) -> usize {
        3 * self.p.n_plan()
    }

    fn n_constraints(&self) -> usize {
        match self.p.risk_constraint {
            RiskConstraint::Max => 1,
            RiskConstraint::PerPoint => self.p.n_plan(),
        }
    }

    fn forward(&mut self, z: &[f64], g: &mut [f64]) -> f64 {
        let p = self.p;
        self.controls.clear();
        self.controls.extend(from_unit(z));
        rollout_into(&self.start, &self.controls, p.dt_plan, &mut self.states);
        let l = p.lambdas();
        let mut cost = 0.0;
        let per_point = self.p.risk_constraint == RiskConstraint::PerPoint;
        let mut worst = f64::NEG_INFINITY;
        for (k, (u, s)) in self.controls.iter().zip(&self.states).enumerate() {
            let backwards = s.v_forw.min(0.0);
            cost += l[0] * (s.v_forw - self.ctx.initial_v).powi(2)
                + l[1] * backwards * backwards
                + l[2] * s.v_orth * s.v_orth
                + l[3] * (s.heading - self.ctx.initial_heading).powi(2)
                + l[4] * (u.omega_dot / MAX_OMEGA_DOT).powi(2)
                + l[5] * (u.a_forw / MAX_A_FORW).powi(2)
                + l[6] * (u.a_orth / MAX_A_ORTH).powi(2);
            let r = point_risk_grad(s.x, s.y, &self.belief[k], p);
            if per_point {
                g[k] = r.total - self.cap;
            } else if r.total > worst {
                worst = r.total;
                self.argmax = k;
            }
            self.risk_dx[k] = r.d_x;
            self.risk_dy[k] = r.d_y;
        }
        if !per_point {
            g[0] = worst - self.cap;
        }
        cost
    }

    fn backward(&mut self, w: &[f64], grad: &mut [f64]) {
        let p = self.p;
        let l = p.lambdas();
        let dt = p.dt_plan;
        let weight = |k: usize| match p.risk_constraint {
            RiskConstraint::PerPoint => w[k],
            RiskConstraint::Max if k == self.argmax => w[0],
            RiskConstraint::Max => 0.0,
        };
        // adjoint of the state after step k, carried from step k + 1
        let (mut ax, mut ay, mut ah, mut avf, mut avo, mut aw) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for k in (0..self.states.len()).rev() {
            let s = &self.states[k];
            let u = &self.controls[k];
            let wk = weight(k);
            let gx = ax + wk * self.risk_dx[k];
            let gy = ay + wk * self.risk_dy[k];
            let gh = ah + 2.0 * l[3] * (s.heading - self.ctx.initial_heading);
            let gvf = avf + 2.0 * l[0] * (s.v_forw - self.ctx.initial_v) + 2.0 * l[1] * s.v_forw.min(0.0);
            let gvo = avo + 2.0 * l[2] * s.v_orth;
            let gw = aw;

            let (sin, cos) = s.heading.sin_cos();
            let h_bar = gh + gx * dt * (-s.v_forw * sin - s.v_orth * cos) + gy * dt * (s.v_forw * cos - s.v_orth * sin);
            let vf_bar = gvf + dt * (gx * cos + gy * sin);
            let vo_bar = gvo + dt * (-gx * sin + gy * cos);
            let w_bar = gw + h_bar * dt;

            let du_f = vf_bar * dt + 2.0 * l[5] * u.a_forw / (MAX_A_FORW * MAX_A_FORW);
            let du_o = vo_bar * dt + 2.0 * l[6] * u.a_orth / (MAX_A_ORTH * MAX_A_ORTH);
            let du_w = w_bar * dt + 2.0 * l[4] * u.omega_dot / (PI * PI);
            grad[3 * k] = du_f * SCALE[0];
            grad[3 * k + 1] = du_o * SCALE[1];
            grad[3 * k + 2] = du_w * SCALE[2];

            ax = gx;
            ay = gy;
            ah = h_bar;
            avf = vf_bar;
            avo = vo_bar;
            aw = w_bar;
        }
    }
}
