//! Perceived risk of a plan against a belief: proximity to the other
//! pedestrian plus the risk of leaving the sidewalk, maximized over the
//! horizon points.

use serde::{Deserialize, Serialize};

use crate::belief::{normal_cdf, normal_pdf, prob_in_interval, BeliefPoint};
use crate::params::ModelParams;
use crate::state::{PedestrianState, HALF_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRisk {
    pub close: f64,
    pub bounds: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub per_point: Vec<PointRisk>,
    pub max_total: f64,
    pub argmax_index: usize,
}

/// Risk and its gradient with respect to the planned position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRiskGrad {
    pub total: f64,
    pub d_x: f64,
    pub d_y: f64,
}

fn longitudinal_factor(dy: f64, p: &ModelParams) -> f64 {
    (-dy * dy / p.fy_denominator).exp()
}

pub fn proximity_risk(x: f64, y: f64, bp: &BeliefPoint, p: &ModelParams) -> f64 {
    longitudinal_factor(y - bp.y, p) * prob_in_interval(bp, x - p.r_com, x + p.r_com)
}

// 1/(1 + e^{2z}) == (1 - tanh z)/2, without cancellation for large z
fn lower_sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (2.0 * z).exp())
}

/// Two steep sigmoids whose midpoints sit `delta_x` inside each bound, so the
/// risk is close to one at the bound itself. Discounted by `exp(-t/T)`.
pub fn bounds_risk(x: f64, t: f64, p: &ModelParams) -> f64 {
    let left = lower_sigmoid(p.eta * (x - (-HALF_WIDTH + p.delta_x)));
    let right = lower_sigmoid(-p.eta * (x - (HALF_WIDTH - p.delta_x)));
    (-t / p.horizon).exp() * (left + right)
}

pub fn point_risk(x: f64, y: f64, bp: &BeliefPoint, p: &ModelParams) -> PointRisk {
    let close = proximity_risk(x, y, bp, p);
    let bounds = bounds_risk(x, bp.t, p);
    PointRisk {
        close,
        bounds,
        total: close + bounds,
    }
}

pub fn point_risk_grad(x: f64, y: f64, bp: &BeliefPoint, p: &ModelParams) -> PointRiskGrad {
    let dy = y - bp.y;
    let f_y = longitudinal_factor(dy, p);
    let (mut prob, mut d_prob) = (0.0, 0.0);
    for c in &bp.components {
        if c.weight == 0.0 {
            continue;
        }
        let hi = (x + p.r_com - c.mean) / c.std;
        let lo = (x - p.r_com - c.mean) / c.std;
        prob += c.weight * (normal_cdf(hi) - normal_cdf(lo));
        d_prob += c.weight * (normal_pdf(hi) - normal_pdf(lo)) / c.std;
    }
    let close = f_y * prob;

    let f_t = (-bp.t / p.horizon).exp();
    let left = lower_sigmoid(p.eta * (x - (-HALF_WIDTH + p.delta_x)));
    let right = lower_sigmoid(-p.eta * (x - (HALF_WIDTH - p.delta_x)));
    let bounds = f_t * (left + right);
    let d_bounds = f_t * 2.0 * p.eta * (right * (1.0 - right) - left * (1.0 - left));

    PointRiskGrad {
        total: close + bounds,
        d_x: f_y * d_prob + d_bounds,
        d_y: close * (-2.0 * dy / p.fy_denominator),
    }
}

/// Pairs plan waypoint `k` with belief point `k`.
///
/// # Panics
/// If the plan and belief differ in length.
pub fn perceived_risk(
    waypoints: &[PedestrianState],
    belief: &[BeliefPoint],
    p: &ModelParams,
) -> RiskBreakdown {
    assert_eq!(
        waypoints.len(),
        belief.len(),
        "plan and belief must cover the same horizon points"
    );
    let per_point: Vec<PointRisk> = waypoints
        .iter()
        .zip(belief)
        .map(|(w, bp)| point_risk(w.x, w.y, bp, p))
        .collect();
    let (argmax_index, max_total) = per_point
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| {
            if r.total > best.1 {
                (i, r.total)
            } else {
                best
            }
        });
    RiskBreakdown {
        per_point,
        max_total: if max_total.is_finite() { max_total } else { 0.0 },
        argmax_index,
    }
}

/// Maximum risk over the horizon; zero for an empty belief.
pub fn max_risk(waypoints: &[PedestrianState], belief: &[BeliefPoint], p: &ModelParams) -> f64 {
    waypoints
        .iter()
        .zip(belief)
        .map(|(w, bp)| point_risk(w.x, w.y, bp, p).total)
        .fold(0.0, f64::max)
}
