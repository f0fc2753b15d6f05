//! Belief over the other pedestrian's future lateral position.
//!
//! Each belief point sits at a future time and an extrapolated longitudinal
//! position, and holds a three-component Gaussian mixture over the lateral
//! position: continue on the current heading, pass on the ego's left, pass on
//! the ego's right. Left and right are always taken from the ego's point of
//! view at its initial heading.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::perception::Observation;
use crate::state::{PedestrianState, HALF_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefComponent {
    pub mean: f64,
    pub std: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefPoint {
    /// Time ahead of now (s).
    pub t: f64,
    /// Extrapolated longitudinal position of the other pedestrian (m).
    pub y: f64,
    /// Ordered continue, left, right.
    pub components: [BeliefComponent; 3],
}

impl BeliefPoint {
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

/// Multipliers on the side weights modelling a passing norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefBias {
    pub left: f64,
    pub right: f64,
}

impl Default for BeliefBias {
    fn default() -> Self {
        Self::NONE
    }
}

impl BeliefBias {
    pub const NONE: BeliefBias = BeliefBias { left: 1.0, right: 1.0 };
    /// Expects others to pass on the ego's left.
    pub const PASS_LEFT: BeliefBias = BeliefBias { left: 1.3, right: 0.7 };
    /// Expects others to pass on the ego's right.
    pub const PASS_RIGHT: BeliefBias = BeliefBias { left: 0.7, right: 1.3 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideWeights {
    pub cont: f64,
    pub left: f64,
    pub right: f64,
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// x-component of the ego's left unit vector at its initial heading, as a sign.
pub(crate) fn left_sign(initial_heading: f64) -> f64 {
    if initial_heading.sin() >= 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `(t, y)` of each belief point under constant observed world y-velocity.
/// The first point sits `lead` seconds ahead, the rest follow at the plan rate.
pub fn belief_longitudes(obs: &Observation, lead: f64, p: &ModelParams) -> Vec<(f64, f64)> {
    let (_, vy) = obs.world_velocity();
    (0..p.n_plan())
        .map(|k| {
            let t = lead + k as f64 * p.dt_plan;
            (t, obs.y + vy * t)
        })
        .collect()
}

pub fn continue_component(obs: &Observation, t: f64, p: &ModelParams) -> BeliefComponent {
    let (vx, _) = obs.world_velocity();
    BeliefComponent {
        mean: obs.x + vx * t,
        std: (0.5 * (p.a_e / 3.0) * t * t).max(p.sigma_floor),
        weight: p.gamma_c,
    }
}

/// Weights of the continue, left and right components.
///
/// The bearing of the other pedestrian is measured from the ego's initial
/// heading, positive towards the ego's left, with the longitudinal distance
/// scaled by `zeta`. The observed side-step velocity, projected on the ego's
/// left axis, adds directly.
pub fn side_weights(
    ego: &PedestrianState,
    initial_heading: f64,
    obs: &Observation,
    p: &ModelParams,
    bias: BeliefBias,
) -> SideWeights {
    let side_total = 1.0 - p.gamma_c;
    let (dx, dy) = (obs.x - ego.x, obs.y - ego.y);
    let raw_left = if dx == 0.0 && dy == 0.0 {
        0.5 * side_total
    } else {
        let (sin0, cos0) = initial_heading.sin_cos();
        let along = dx * cos0 + dy * sin0;
        let lateral = -dx * sin0 + dy * cos0;
        let bearing = lateral.atan2(p.zeta * along.abs());
        // other's left axis dotted with the ego's left axis
        let axis_alignment = (obs.heading - initial_heading).cos();
        let sidestep = obs.v_orth * axis_alignment;
        side_total * (0.5 + bearing / PI + sidestep)
    };
    let left = raw_left.clamp(0.0, side_total);
    let right = 1.0 - p.gamma_c - left;
    let (mut left, mut right) = (bias.left * left, bias.right * right);
    if p.renormalize_bias {
        let sum = left + right;
        if sum > 0.0 {
            left *= side_total / sum;
            right *= side_total / sum;
        }
    }
    SideWeights {
        cont: p.gamma_c,
        left,
        right,
    }
}

/// Side component with weight left at zero; the caller fills in the weight.
pub fn side_component(
    ego: &PedestrianState,
    initial_heading: f64,
    obs: &Observation,
    t: f64,
    side: Side,
    p: &ModelParams,
) -> BeliefComponent {
    let extrapolated = continue_component(obs, t, p).mean;
    let left_x = left_sign(initial_heading);
    let outward = match side {
        Side::Left => left_x,
        Side::Right => -left_x,
    };
    let mean = if (extrapolated - ego.x).abs() < p.r_com {
        ego.x + outward * p.r_com
    } else {
        extrapolated
    };
    let bound = outward * HALF_WIDTH;
    let room = (bound - ego.x).abs();
    BeliefComponent {
        mean,
        std: ((room - p.r_com) / 6.0).max(p.sigma_floor),
        weight: 0.0,
    }
}

pub fn build_belief(
    ego: &PedestrianState,
    initial_heading: f64,
    obs: &Observation,
    p: &ModelParams,
    bias: BeliefBias,
) -> Vec<BeliefPoint> {
    build_belief_with_lead(ego, initial_heading, obs, p, bias, p.dt_plan)
}

/// Belief points at the times of a plan whose first control has `lead`
/// seconds left to run.
pub fn build_belief_with_lead(
    ego: &PedestrianState,
    initial_heading: f64,
    obs: &Observation,
    p: &ModelParams,
    bias: BeliefBias,
    lead: f64,
) -> Vec<BeliefPoint> {
    let weights = side_weights(ego, initial_heading, obs, p, bias);
    belief_longitudes(obs, lead, p)
        .into_iter()
        .map(|(t, y)| {
            let cont = continue_component(obs, t, p);
            let mut left = side_component(ego, initial_heading, obs, t, Side::Left, p);
            let mut right = side_component(ego, initial_heading, obs, t, Side::Right, p);
            left.weight = weights.left;
            right.weight = weights.right;
            BeliefPoint {
                t,
                y,
                components: [cont, left, right],
            }
        })
        .collect()
}

/// Believed probability that the lateral position lies in `(lo, hi)`.
pub fn prob_in_interval(bp: &BeliefPoint, lo: f64, hi: f64) -> f64 {
    bp.components
        .iter()
        .map(|c| c.weight * (normal_cdf((hi - c.mean) / c.std) - normal_cdf((lo - c.mean) / c.std)))
        .sum()
}
