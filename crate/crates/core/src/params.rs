//! Model parameters and their text representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// When the head of a plan is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlanShiftMode {
    /// Hold the first control for one planning interval, then drop it.
    #[default]
    PerPlanStep,
    /// Drop the first control after every simulation step.
    PerSimStep,
}

/// When a held plan's waypoints are recomputed from the current state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlanRefresh {
    /// Once per planning interval, when the head control is dropped; in
    /// between, risk is checked against the stored waypoints.
    #[default]
    PlanStep,
    /// Every simulation step, treating the held control as if it had just
    /// started.
    SimStep,
    /// Every simulation step, running the held control only for the time it
    /// has left.
    SimStepAligned,
}

/// How the replanner constrains the perceived risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RiskConstraint {
    /// One constraint on the maximum over the horizon.
    #[default]
    Max,
    /// One constraint per horizon point.
    PerPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Simulation step (s).
    pub dt_sim: f64,
    /// Spacing of plan and belief points (s).
    pub dt_plan: f64,
    /// Planning horizon (s).
    pub horizon: f64,
    /// Initial and preferred forward speed (m/s).
    pub v_init: f64,
    /// Comfortable lateral range (m).
    pub r_com: f64,
    /// Expected lateral acceleration of the other pedestrian (m/s^2).
    pub a_e: f64,
    /// Observation update rate per simulation step.
    pub alpha: f64,
    /// Observation noise scale. Zero disables noise.
    pub beta: f64,
    /// Weight of the "continue" belief component.
    pub gamma_c: f64,
    /// Longitudinal scaling of the bearing in the side weights.
    pub zeta: f64,
    /// Steepness of the bound sigmoids (1/m).
    pub eta: f64,
    /// Inward shift of the bound sigmoid midpoints (m).
    pub delta_x: f64,
    /// Center distance below which the pedestrians collide (m).
    pub r_collision: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub lambda_3: f64,
    pub lambda_4: f64,
    pub lambda_5: f64,
    pub lambda_6: f64,
    pub lambda_7: f64,
    /// Risk cap of a triggered replan, as a fraction of the threshold.
    pub replan_factor: f64,
    /// Risk cap of a retry after an infeasible replan.
    pub retry_factor: f64,
    /// Maximum simulated time per trial (s).
    pub timeout: f64,
    /// Denominator of the longitudinal proximity factor (m^2).
    pub fy_denominator: f64,
    /// Lower bound on every belief standard deviation (m).
    pub sigma_floor: f64,
    /// Rescale biased side weights so all weights sum to one.
    pub renormalize_bias: bool,
    pub plan_shift_mode: PlanShiftMode,
    pub plan_refresh: PlanRefresh,
    /// Half width of the strategy-switch dead band (m).
    pub dead_band: f64,
    /// Gradient iterations available to one replan.
    pub max_iterations: usize,
    /// Allowed risk excess of an accepted plan.
    pub constraint_tol: f64,
    pub risk_constraint: RiskConstraint,
}

impl Default for ModelParams {
    fn default() -> Self {
        let dt_sim = 0.05;
        Self {
            dt_sim,
            dt_plan: 0.25,
            horizon: 7.0,
            v_init: 1.3,
            r_com: 0.3,
            a_e: 0.2,
            alpha: 2.0 * dt_sim,
            beta: 0.03,
            gamma_c: 0.5,
            zeta: 0.25,
            eta: 10.0,
            delta_x: 0.15,
            r_collision: 0.25,
            lambda_1: 1.0,
            lambda_2: 100.0,
            lambda_3: 2.0,
            lambda_4: 5.0,
            lambda_5: 1.0,
            lambda_6: 1.0,
            lambda_7: 1.0,
            replan_factor: 0.75,
            retry_factor: 0.9,
            timeout: 60.0,
            fy_denominator: 0.36,
            sigma_floor: 1e-4,
            renormalize_bias: true,
            plan_shift_mode: PlanShiftMode::PerPlanStep,
            plan_refresh: PlanRefresh::PlanStep,
            risk_constraint: RiskConstraint::Max,
            dead_band: 0.2,
            max_iterations: 200,
            constraint_tol: 1e-3,
        }
    }
}

impl ModelParams {
    /// Number of plan (and belief) points over the horizon.
    pub fn n_plan(&self) -> usize {
        (self.horizon / self.dt_plan).round() as usize
    }

    /// Simulation steps per planning interval.
    pub fn steps_per_plan(&self) -> usize {
        (self.dt_plan / self.dt_sim).round() as usize
    }

    pub fn max_steps(&self) -> usize {
        (self.timeout / self.dt_sim).round() as usize
    }

    pub fn lambdas(&self) -> [f64; 7] {
        [
            self.lambda_1,
            self.lambda_2,
            self.lambda_3,
            self.lambda_4,
            self.lambda_5,
            self.lambda_6,
            self.lambda_7,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_sim", self.dt_sim),
            ("dt_plan", self.dt_plan),
            ("horizon", self.horizon),
            ("v_init", self.v_init),
            ("r_com", self.r_com),
            ("a_e", self.a_e),
            ("alpha", self.alpha),
            ("gamma_c", self.gamma_c),
            ("zeta", self.zeta),
            ("eta", self.eta),
            ("delta_x", self.delta_x),
            ("r_collision", self.r_collision),
            ("lambda_1", self.lambda_1),
            ("lambda_2", self.lambda_2),
            ("lambda_3", self.lambda_3),
            ("lambda_4", self.lambda_4),
            ("lambda_5", self.lambda_5),
            ("lambda_6", self.lambda_6),
            ("lambda_7", self.lambda_7),
            ("replan_factor", self.replan_factor),
            ("retry_factor", self.retry_factor),
            ("timeout", self.timeout),
            ("fy_denominator", self.fy_denominator),
            ("sigma_floor", self.sigma_floor),
            ("dead_band", self.dead_band),
            ("constraint_tol", self.constraint_tol),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(key, format!("must be positive, got {value}")));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid("beta", "must be non-negative"));
        }
        if self.alpha > 1.0 {
            return Err(Error::invalid("alpha", "must not exceed 1"));
        }
        if self.gamma_c >= 1.0 {
            return Err(Error::invalid("gamma_c", "must lie in (0, 1)"));
        }
        if !(self.replan_factor < self.retry_factor && self.retry_factor < 1.0) {
            return Err(Error::invalid(
                "retry_factor",
                "need replan_factor < retry_factor < 1",
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        let ratio = |a: f64, b: f64| {
            let r = a / b;
            r >= 1.0 && (r - r.round()).abs() < 1e-9
        };
        if !ratio(self.horizon, self.dt_plan) {
            return Err(Error::invalid("horizon", "must be a multiple of dt_plan"));
        }
        if !ratio(self.dt_plan, self.dt_sim) {
            return Err(Error::invalid("dt_plan", "must be a multiple of dt_sim"));
        }
        if !ratio(self.timeout, self.dt_sim) {
            return Err(Error::invalid("timeout", "must be a multiple of dt_sim"));
        }
        Ok(())
    }

    /// Applies one `key = value` override. The value uses the config file syntax;
    /// bare words are read as strings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut table = toml::Table::try_from(&*self)?;
        if !table.contains_key(key) {
            return Err(Error::UnknownParam(key.to_string()));
        }
        let parsed = parse_value(value);
        table.insert(key.to_string(), parsed);
        let updated: ModelParams = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::invalid(key, e.message().to_string()))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    /// Parses and applies a `key=value` override string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = split_override(assignment)?;
        self.set(key, value)
    }
}

/// Splits `key=value`, trimming whitespace around both halves.
pub fn split_override(assignment: &str) -> Result<(&str, &str)> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::MalformedOverride(assignment.to_string()))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() || value.is_empty() {
        return Err(Error::MalformedOverride(assignment.to_string()));
    }
    Ok((key, value))
}

fn parse_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrapper {
        v: toml::Value,
    }
    toml::from_str::<Wrapper>(&format!("v = {raw}"))
        .map(|w| w.v)
        .unwrap_or_else(|_| toml::Value::String(raw.to_string()))
}
