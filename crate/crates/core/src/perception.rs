//! Delayed, noisy observation of the other pedestrian.
//!
//! Position is observed exactly. Forward velocity, orthogonal velocity and
//! heading follow the truth with a first-order lag plus Brownian noise.

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::rng::RandomSource;
use crate::state::{body_to_world, PedestrianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
    pub v_forw: f64,
    pub v_orth: f64,
    pub heading: f64,
}

impl Observation {
    pub fn world_velocity(&self) -> (f64, f64) {
        body_to_world(self.heading, self.v_forw, self.v_orth)
    }
}

pub fn init_observation(truth: &PedestrianState) -> Observation {
    Observation {
        x: truth.x,
        y: truth.y,
        v_forw: truth.v_forw.max(0.0),
        v_orth: truth.v_orth,
        heading: truth.heading,
    }
}

/// One observation update. Draws exactly three normals, in the order
/// forward velocity, orthogonal velocity, heading.
pub fn update_observation(
    obs: &Observation,
    truth: &PedestrianState,
    rng: &mut RandomSource,
    p: &ModelParams,
) -> Observation {
    let noise = p.beta * p.dt_sim.sqrt();
    let e1 = rng.normal();
    let e2 = rng.normal();
    let e3 = rng.normal();
    let v_forw = obs.v_forw + p.alpha * (truth.v_forw - obs.v_forw) + noise * e1;
    let v_orth = obs.v_orth + p.alpha * (truth.v_orth - obs.v_orth) + noise * e2;
    let heading = obs.heading + p.alpha * (truth.heading - obs.heading) + noise * e3;
    debug_assert!(
        heading.abs() <= std::f64::consts::PI + 0.5,
        "observed heading {heading} left the unwrapped range"
    );
    Observation {
        x: truth.x,
        y: truth.y,
        v_forw: v_forw.max(0.0),
        v_orth,
        heading,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    use proptest::prelude::*;

    fn noiseless() -> ModelParams {
        ModelParams {
            beta: 0.0,
            ..ModelParams::default()
        }
    }

    fn oncoming() -> PedestrianState {
        PedestrianState::new(0.0, 15.0, -FRAC_PI_2, 1.3)
    }

    #[test]
    fn init_copies_truth() {
        let truth = oncoming();
        let obs = init_observation(&truth);
        assert_eq!((obs.x, obs.y, obs.v_forw, obs.v_orth, obs.heading), (0.0, 15.0, 1.3, 0.0, -FRAC_PI_2));
        let backwards = PedestrianState { v_forw: -0.4, ..truth };
        assert_eq!(init_observation(&backwards).v_forw, 0.0);
    }

    #[test]
    fn noiseless_fixed_point() {
        let truth = oncoming();
        let obs = init_observation(&truth);
        let mut rng = RandomSource::new(1);
        assert_eq!(update_observation(&obs, &truth, &mut rng, &noiseless()), obs);
    }

    #[test]
    fn lag_step() {
        let truth = oncoming();
        let obs = Observation { v_forw: 1.0, ..init_observation(&truth) };
        let mut rng = RandomSource::new(1);
        let next = update_observation(&obs, &truth, &mut rng, &noiseless());
        assert!((next.v_forw - 1.03).abs() < 1e-12);
    }

    #[test]
    fn error_decays_geometrically() {
        let p = noiseless();
        let truth = PedestrianState { v_orth: 0.2, ..oncoming() };
        let mut obs = Observation { v_forw: 0.5, v_orth: -0.3, heading: -1.2, ..init_observation(&truth) };
        let initial = [truth.v_forw - obs.v_forw, truth.v_orth - obs.v_orth, truth.heading - obs.heading];
        let mut rng = RandomSource::new(3);
        let mut prev = initial.map(f64::abs);
        for k in 1..=50 {
            obs = update_observation(&obs, &truth, &mut rng, &p);
            let err = [truth.v_forw - obs.v_forw, truth.v_orth - obs.v_orth, truth.heading - obs.heading];
            for i in 0..3 {
                let expected = initial[i] * (1.0 - p.alpha).powi(k);
                assert!((err[i] - expected).abs() < 1e-12);
                assert!(err[i].abs() <= prev[i]);
                prev[i] = err[i].abs();
            }
        }
        // 2.5 s at 20 Hz
        for i in 0..3 {
            assert!(prev[i] < 0.01 * initial[i].abs());
        }
    }

    #[test]
    fn stationary_noise_increment() {
        let p = ModelParams::default();
        let truth = oncoming();
        let mut rng = RandomSource::new(99);
        let n = 20_000;
        let mut increments = Vec::with_capacity(n);
        for _ in 0..n {
            let obs = init_observation(&truth);
            let next = update_observation(&obs, &truth, &mut rng, &p);
            increments.push(next.v_orth - obs.v_orth);
        }
        let sd = (increments.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
        let expected = 0.03 * 0.05f64.sqrt();
        assert!((sd - expected).abs() < 0.03 * expected, "sd {sd} vs {expected}");
    }

    proptest! {
        #[test]
        fn forward_speed_never_negative(v in -3.0..3.0f64, o in 0.0..3.0f64, seed: u64) {
            let truth = PedestrianState { v_forw: v, ..oncoming() };
            let obs = Observation { v_forw: o, ..init_observation(&oncoming()) };
            let mut rng = RandomSource::new(seed);
            let next = update_observation(&obs, &truth, &mut rng, &ModelParams::default());
            prop_assert!(next.v_forw >= 0.0);
            prop_assert_eq!((next.x, next.y), (truth.x, truth.y));
        }
    }
}
