//! Seeded 2-D rover world for the parking experiment.
//!
//! Kinematic unicycle with turn-in-place. Drive and turn primitives carry a
//! multiplicative actuation error; the pose estimate handed to the controller is
//! the true pose plus odometry drift.

mod config;
mod expert;
mod parking;

use std::f64::consts::PI;

use crate::gauss::{self, GaussianParams, RngStream};
use crate::gbn::{Direction, Gbn, GbnNode, MotionType};

pub use config::{WorldConfig, DEFAULT_WORLD};
pub use expert::{gen_expert_traces, MIN_ATTEMPTS};
pub use parking::{
    count_motion_blocks, path_to_csv, run_parking, ParkingReport, PathPoint, MIN_STEP,
    PARKING_PROGRAM,
};

/// Map an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Unit vector along the heading.
    pub fn heading(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }

    /// Move `d` along the heading (negative reverses).
    pub fn advanced(&self, d: f64) -> Self {
        let [c, s] = self.heading();
        Self::new(self.x + d * c, self.y + d * s, self.theta)
    }

    pub fn rotated(&self, a: f64) -> Self {
        Self::new(self.x, self.y, self.theta + a)
    }

    /// This pose expressed in `frame`'s coordinates.
    pub fn relative_to(&self, frame: &Pose) -> Pose {
        let (dx, dy) = (self.x - frame.x, self.y - frame.y);
        let (c, s) = (frame.theta.cos(), frame.theta.sin());
        Pose::new(c * dx + s * dy, -s * dx + c * dy, self.theta - frame.theta)
    }
}

/// `dot(target - start, target - current)`: positive before the goal line,
/// zero on it, negative once past it, whatever the lateral deviation.
pub fn overshoot_metric(start: [f64; 2], target: [f64; 2], current: [f64; 2]) -> f64 {
    (target[0] - start[0]) * (target[0] - current[0]) + (target[1] - start[1]) * (target[1] - current[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub motion: MotionType,
    pub direction: Direction,
    /// Distance in meters or angle in radians, in the primitive's own direction.
    pub magnitude: f64,
}

impl Primitive {
    pub fn drive(direction: Direction, magnitude: f64) -> Self {
        Self {
            motion: MotionType::Drive,
            direction,
            magnitude,
        }
    }

    pub fn turn(direction: Direction, magnitude: f64) -> Self {
        Self {
            motion: MotionType::Turn,
            direction,
            magnitude,
        }
    }

    /// Magnitude with the direction applied. Forward turns are counter-clockwise.
    pub fn signed(&self) -> f64 {
        self.direction.sign() * self.magnitude
    }

    /// Noise-free execution from `p`.
    pub fn apply(&self, p: &Pose) -> Pose {
        match self.motion {
            MotionType::Drive => p.advanced(self.signed()),
            MotionType::Turn => p.rotated(self.signed()),
        }
    }
}

/// Ordered motion primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct Maneuver(pub Vec<Primitive>);

impl Maneuver {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.0.iter().map(|p| p.magnitude).collect()
    }

    /// Same primitive types and directions with new magnitudes.
    pub fn with_magnitudes(&self, m: &[f64]) -> Maneuver {
        Maneuver(
            self.0
                .iter()
                .zip(m)
                .map(|(p, &magnitude)| Primitive { magnitude, ..*p })
                .collect(),
        )
    }

    /// Closed-form dead reckoning.
    pub fn endpoint(&self, start: &Pose) -> Pose {
        self.0.iter().fold(*start, |p, prim| prim.apply(&p))
    }

    /// Labels in chain order: l1, alpha1, l2, ...
    pub fn labels(&self) -> Vec<String> {
        let (mut drives, mut turns) = (0, 0);
        self.0
            .iter()
            .map(|p| match p.motion {
                MotionType::Drive => {
                    drives += 1;
                    format!("l{drives}")
                }
                MotionType::Turn => {
                    turns += 1;
                    format!("alpha{turns}")
                }
            })
            .collect()
    }

    /// Primitive layout of a model.
    pub fn from_model(g: &Gbn) -> Maneuver {
        Maneuver(
            g.nodes()
                .iter()
                .map(|n| Primitive {
                    motion: n.motion,
                    direction: n.direction,
                    magnitude: n.mean,
                })
                .collect(),
        )
    }

    /// Chain model with this maneuver's layout and means.
    pub fn to_model(&self, variances: &[f64], coefficients: &[f64]) -> Result<Gbn, crate::error::GbnError> {
        let labels = self.labels();
        let nodes = self
            .0
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let node = GbnNode::new(&labels[i], p.motion, p.direction, p.magnitude, variances[i]);
                if i == 0 {
                    node
                } else {
                    node.with_parent(i - 1, coefficients[i - 1])
                }
            })
            .collect();
        Gbn::new(nodes)
    }
}

/// Target rectangle for the rover centre plus a heading tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spot {
    pub center: Pose,
    /// Extent along the spot heading.
    pub length: f64,
    pub width: f64,
    pub heading_tolerance: f64,
}

impl Spot {
    pub fn contains(&self, p: &Pose) -> bool {
        let r = p.relative_to(&self.center);
        r.x.abs() <= self.length / 2.0 && r.y.abs() <= self.width / 2.0 && r.theta.abs() <= self.heading_tolerance
    }
}

/// Noise variances. Sensor terms are per meter (or radian) travelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Relative actuation error of a drive.
    pub drive: f64,
    /// Relative actuation error of a turn.
    pub turn: f64,
    /// Odometry drift of the distance estimate.
    pub progress: f64,
    /// Drift of the heading estimate.
    pub angle: f64,
    /// Scales actuation and odometry noise by `(1 + slip)` and enables heading drift.
    pub slip: f64,
    /// Heading drift per meter driven at `slip = 1`.
    pub slip_drift: f64,
}

impl NoiseModel {
    pub const ZERO: NoiseModel = NoiseModel {
        drive: 0.0,
        turn: 0.0,
        progress: 0.0,
        angle: 0.0,
        slip: 0.0,
        slip_drift: 0.0,
    };

    fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("drive_noise", self.drive),
            ("turn_noise", self.turn),
            ("progress_noise", self.progress),
            ("angle_noise", self.angle),
            ("slip", self.slip),
            ("slip_drift", self.slip_drift),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    fn scaled(&self, variance: f64) -> f64 {
        variance * (1.0 + self.slip).powi(2)
    }
}

/// Rover, noise and random stream.
#[derive(Debug, Clone)]
pub struct World {
    pub rover: Pose,
    pub noise: NoiseModel,
    pub rng: RngStream,
}

impl World {
    pub fn new(rover: Pose, noise: NoiseModel, rng: RngStream) -> Result<Self, crate::error::SimError> {
        noise.validate().map_err(crate::error::SimError::InvalidWorld)?;
        Ok(Self { rover, noise, rng })
    }

    fn draw(&mut self, variance: f64) -> f64 {
        gauss::sample(GaussianParams { mean: 0.0, variance }, &mut self.rng)
    }

    /// Actuation factor `1 + xi` for one drive.
    pub fn drive_factor(&mut self) -> f64 {
        1.0 + self.draw(self.noise.scaled(self.noise.drive))
    }

    pub fn turn_factor(&mut self) -> f64 {
        1.0 + self.draw(self.noise.scaled(self.noise.turn))
    }

    /// Drive `distance` with a fresh actuation error; returns the distance covered.
    pub fn step_drive(&mut self, distance: f64) -> f64 {
        let f = self.drive_factor();
        self.move_by(distance * f);
        distance * f
    }

    /// Turn in place by `angle` with a fresh actuation error; returns the angle turned.
    pub fn step_turn(&mut self, angle: f64) -> f64 {
        let f = self.turn_factor();
        self.rover = self.rover.rotated(angle * f);
        angle * f
    }

    /// Exact displacement plus slip-induced heading drift.
    pub fn move_by(&mut self, actual: f64) {
        let drift = self.draw(self.noise.slip * self.noise.slip_drift * actual.abs());
        self.rover = self.rover.advanced(actual).rotated(drift);
    }

    pub fn rotate_by(&mut self, actual: f64) {
        self.rover = self.rover.rotated(actual);
    }

    /// Odometry error accumulated over a drive of length `d`.
    pub fn progress_drift(&mut self, d: f64) -> f64 {
        self.draw(self.noise.scaled(self.noise.progress) * d.abs())
    }

    pub fn angle_drift(&mut self, a: f64) -> f64 {
        self.draw(self.noise.scaled(self.noise.angle) * a.abs())
    }
}
