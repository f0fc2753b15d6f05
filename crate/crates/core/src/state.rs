//! Kinematic state, control input and the sidewalk geometry.
//!
//! World frame: `x` is lateral with the sidewalk centerline at `x = 0`, `y` is
//! longitudinal from `0` to [`SIDEWALK_LENGTH`]. Headings are measured
//! counterclockwise from `+x`. The body frame has its orthogonal axis pointing
//! to the pedestrian's left.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub const SIDEWALK_WIDTH: f64 = 2.5;
pub const SIDEWALK_LENGTH: f64 = 15.0;
pub const HALF_WIDTH: f64 = SIDEWALK_WIDTH / 2.0;

pub const MAX_A_FORW: f64 = 2.0;
pub const MAX_A_ORTH: f64 = 1.0;
pub const MAX_OMEGA_DOT: f64 = PI;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PedestrianState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v_forw: f64,
    pub v_orth: f64,
    pub omega: f64,
}

impl PedestrianState {
    pub fn new(x: f64, y: f64, heading: f64, v_forw: f64) -> Self {
        Self {
            x,
            y,
            heading,
            v_forw,
            ..Default::default()
        }
    }

    /// World-frame velocity `(vx, vy)`.
    pub fn world_velocity(&self) -> (f64, f64) {
        body_to_world(self.heading, self.v_forw, self.v_orth)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.heading, self.v_forw, self.v_orth, self.omega]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn distance_to(&self, other: &PedestrianState) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rotates a body-frame velocity (forward, left) into the world frame.
pub fn body_to_world(heading: f64, v_forw: f64, v_orth: f64) -> (f64, f64) {
    let (s, c) = heading.sin_cos();
    (v_forw * c - v_orth * s, v_forw * s + v_orth * c)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub a_forw: f64,
    pub a_orth: f64,
    pub omega_dot: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        a_forw: 0.0,
        a_orth: 0.0,
        omega_dot: 0.0,
    };

    pub fn new(a_forw: f64, a_orth: f64, omega_dot: f64) -> Self {
        Self {
            a_forw,
            a_orth,
            omega_dot,
        }
    }

    pub fn within_limits(&self) -> bool {
        self.a_forw.abs() <= MAX_A_FORW
            && self.a_orth.abs() <= MAX_A_ORTH
            && self.omega_dot.abs() <= MAX_OMEGA_DOT
    }
}

/// Coordinate frame a pedestrian stores its own state in.
///
/// Each pedestrian reasons in a frame where it walks towards `+y` from `y = 0`.
/// For the pedestrian starting at the far end that frame is the world frame
/// turned by half a revolution about the sidewalk center. The half turn is an
/// involution, so both pedestrians see each other through the same function
/// and a point-symmetric encounter stays bitwise symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackFrame {
    Forward,
    Reverse,
}

impl TrackFrame {
    pub fn to_world(self, s: &PedestrianState) -> PedestrianState {
        match self {
            TrackFrame::Forward => *s,
            TrackFrame::Reverse => half_turn(s),
        }
    }

    pub fn from_world(self, s: &PedestrianState) -> PedestrianState {
        self.to_world(s)
    }

    /// Re-expresses `s`, stored in `other` frame, in this frame.
    pub fn view(self, other: TrackFrame, s: &PedestrianState) -> PedestrianState {
        if self == other {
            *s
        } else {
            half_turn(s)
        }
    }
}

/// Rotation by pi about the sidewalk center. Body-frame velocities are unchanged.
pub fn half_turn(s: &PedestrianState) -> PedestrianState {
    PedestrianState {
        x: -s.x,
        y: SIDEWALK_LENGTH - s.y,
        heading: turn_heading(s.heading),
        ..*s
    }
}

fn turn_heading(h: f64) -> f64 {
    if h > 0.0 {
        h - PI
    } else {
        h + PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn half_turn_maps_start_poses() {
        let a = PedestrianState::new(0.1, 0.0, FRAC_PI_2, 1.3);
        let b = half_turn(&a);
        assert_eq!(b.x, -0.1);
        assert_eq!(b.y, SIDEWALK_LENGTH);
        assert_eq!(b.heading, -FRAC_PI_2);
        assert_eq!(half_turn(&b).heading, FRAC_PI_2);
    }

    #[test]
    fn left_axis_of_northbound_points_west() {
        let (vx, vy) = body_to_world(FRAC_PI_2, 0.0, 1.0);
        assert!((vx + 1.0).abs() < 1e-15 && vy.abs() < 1e-15);
    }
}
