//! Body-frame acceleration model with side-stepping, integrated with
//! semi-implicit Euler: velocities first, then heading, then position.

use crate::state::{ControlInput, PedestrianState, MAX_A_FORW, MAX_A_ORTH, MAX_OMEGA_DOT};

pub fn clamp_control(u: ControlInput) -> ControlInput {
    ControlInput {
        a_forw: u.a_forw.clamp(-MAX_A_FORW, MAX_A_FORW),
        a_orth: u.a_orth.clamp(-MAX_A_ORTH, MAX_A_ORTH),
        omega_dot: u.omega_dot.clamp(-MAX_OMEGA_DOT, MAX_OMEGA_DOT),
    }
}

pub fn step(s: &PedestrianState, u: &ControlInput, dt: f64) -> PedestrianState {
    let v_forw = s.v_forw + u.a_forw * dt;
    let v_orth = s.v_orth + u.a_orth * dt;
    let omega = s.omega + u.omega_dot * dt;
    let heading = s.heading + omega * dt;
    let (sin, cos) = heading.sin_cos();
    PedestrianState {
        x: s.x + dt * (v_forw * cos - v_orth * sin),
        y: s.y + dt * (v_forw * sin + v_orth * cos),
        heading,
        v_forw,
        v_orth,
        omega,
    }
}

/// States after each control; `out[k]` is the state after `k + 1` steps.
pub fn rollout(s0: &PedestrianState, controls: &[ControlInput], dt: f64) -> Vec<PedestrianState> {
    let mut out = Vec::with_capacity(controls.len());
    rollout_into(s0, controls, dt, &mut out);
    out
}

pub fn rollout_into(
    s0: &PedestrianState,
    controls: &[ControlInput],
    dt: f64,
    out: &mut Vec<PedestrianState>,
) {
    rollout_lead_into(s0, controls, dt, dt, out);
}

/// Like [`rollout_into`], but the first control only acts for `lead` seconds.
pub fn rollout_lead_into(
    s0: &PedestrianState,
    controls: &[ControlInput],
    lead: f64,
    dt: f64,
    out: &mut Vec<PedestrianState>,
) {
    out.clear();
    let mut s = *s0;
    for (k, u) in controls.iter().enumerate() {
        s = step(&s, u, if k == 0 { lead } else { dt });
        out.push(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    use proptest::prelude::*;

    fn walker() -> PedestrianState {
        PedestrianState::new(0.0, 0.0, FRAC_PI_2, 1.3)
    }

    #[test]
    fn short_lead_only_shortens_the_first_step() {
        let u = ControlInput {
            a_forw: -0.5,
            a_orth: 0.3,
            omega_dot: 0.2,
        };
        let controls = [u; 4];
        let mut out = Vec::new();
        rollout_lead_into(&walker(), &controls, 0.1, 0.25, &mut out);
        let first = step(&walker(), &u, 0.1);
        assert_eq!(out[0], first);
        assert_eq!(out[1..], rollout(&first, &controls[1..], 0.25)[..]);
        rollout_lead_into(&walker(), &controls, 0.25, 0.25, &mut out);
        assert_eq!(out, rollout(&walker(), &controls, 0.25));
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_control(ControlInput::ZERO), ControlInput::ZERO);
        assert_eq!(
            clamp_control(ControlInput::new(3.0, -2.0, 4.0)),
            ControlInput::new(2.0, -1.0, PI)
        );
        let edge = ControlInput::new(2.0, 1.0, PI);
        assert_eq!(clamp_control(edge), edge);
    }

    #[test]
    fn zero_input_walks_straight() {
        let s = step(&walker(), &ControlInput::ZERO, 0.05);
        assert!((s.y - 0.065).abs() < 1e-15);
        assert!(s.x.abs() < 1e-15);
        assert_eq!((s.heading, s.v_forw, s.v_orth, s.omega), (FRAC_PI_2, 1.3, 0.0, 0.0));
    }

    #[test]
    fn side_step_moves_left() {
        let s = step(&walker(), &ControlInput::new(0.0, 1.0, 0.0), 0.05);
        assert!((s.v_orth - 0.05).abs() < 1e-15);
        assert!((s.x + 0.0025).abs() < 1e-15);
    }

    #[test]
    fn angular_acceleration() {
        let s = step(&walker(), &ControlInput::new(0.0, 0.0, PI), 0.05);
        assert!((s.omega - 0.05 * PI).abs() < 1e-15);
        assert!((s.heading - (FRAC_PI_2 + 0.05 * 0.05 * PI)).abs() < 1e-15);
    }

    #[test]
    fn straight_rollout_over_horizon() {
        let states = rollout(&walker(), &[ControlInput::ZERO; 28], 0.25);
        assert_eq!(states.len(), 28);
        assert!((states[27].y - 9.1).abs() < 1e-12);
        assert!(states.iter().all(|s| s.x.abs() < 1e-12));
    }

    #[test]
    fn single_control_equals_step() {
        let u = ControlInput::new(0.3, -0.2, 0.1);
        assert_eq!(rollout(&walker(), &[u], 0.25)[0], step(&walker(), &u, 0.25));
    }

    #[test]
    fn sim_rate_agrees_with_plan_rate() {
        // the two rates differ by about 0.4 * |a| * dt_plan^2 in position
        let fast = PedestrianState { v_forw: 2.0, ..walker() };
        let gentle = ControlInput::new(0.2, 0.1, 0.1);
        let fine = rollout(&fast, &[gentle; 5], 0.05);
        let gap = fine.last().unwrap().distance_to(&step(&fast, &gentle, 0.25));
        assert!(gap < 0.01, "{gap}");

        let hard = ControlInput::new(2.0, 1.0, 0.0);
        let fine = rollout(&fast, &[hard; 5], 0.05);
        let gap = fine.last().unwrap().distance_to(&step(&fast, &hard, 0.25));
        assert!(gap < 0.4 * 5f64.sqrt() * 0.0625 + 1e-9, "{gap}");
    }

    fn arb_control() -> impl Strategy<Value = ControlInput> {
        (-2.0..2.0f64, -1.0..1.0f64, -PI..PI).prop_map(|(a, b, c)| ControlInput::new(a, b, c))
    }

    fn arb_state() -> impl Strategy<Value = PedestrianState> {
        (-1.2..1.2f64, 0.0..15.0f64, -PI..PI, -0.5..2.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(
            |(x, y, heading, v_forw, v_orth, omega)| PedestrianState {
                x,
                y,
                heading,
                v_forw,
                v_orth,
                omega,
            },
        )
    }

    proptest! {
        #[test]
        fn rollout_composes(s in arb_state(), u in prop::collection::vec(arb_control(), 1..10),
                            w in prop::collection::vec(arb_control(), 1..10)) {
            let joined: Vec<_> = u.iter().chain(w.iter()).copied().collect();
            let all = rollout(&s, &joined, 0.25);
            let first = rollout(&s, &u, 0.25);
            let second = rollout(first.last().unwrap(), &w, 0.25);
            prop_assert_eq!(&all[u.len()..], &second[..]);
            prop_assert_eq!(&all[..u.len()], &first[..]);
        }

        #[test]
        fn zero_input_preserves_velocities(s in arb_state(), dt in 0.01..0.5f64) {
            let s = PedestrianState { omega: 0.0, ..s };
            let n = step(&s, &ControlInput::ZERO, dt);
            prop_assert_eq!((n.v_forw, n.v_orth, n.omega, n.heading), (s.v_forw, s.v_orth, s.omega, s.heading));
        }

        #[test]
        fn velocity_change_is_bounded(s in arb_state(), a in -10.0..10.0f64, b in -10.0..10.0f64,
                                      c in -10.0..10.0f64, dt in 0.01..0.5f64) {
            let u = clamp_control(ControlInput::new(a, b, c));
            let n = step(&s, &u, dt);
            prop_assert!((n.v_forw - s.v_forw).abs() <= 2.0 * dt + 1e-12);
            prop_assert!((n.v_orth - s.v_orth).abs() <= 1.0 * dt + 1e-12);
            prop_assert!((n.omega - s.omega).abs() <= PI * dt + 1e-12);
        }

        #[test]
        fn step_is_deterministic(s in arb_state(), u in arb_control()) {
            prop_assert_eq!(step(&s, &u, 0.05), step(&s, &u, 0.05));
        }
    }
}
