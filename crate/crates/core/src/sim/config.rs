//! Key-value world description.
//!
//! One `key = value` per line, `#` starts a comment. Keys:
//!
//! | key | value |
//! |-----|-------|
//! | `start` | `x y theta` of the rover |
//! | `primitive` | `drive|turn forward|backward magnitude [jitter [coupling]]`, repeated in order |
//! | `spot_center` | `x y theta`; defaults to the nominal endpoint |
//! | `spot_length`, `spot_width`, `heading_tolerance` | spot geometry |
//! | `drive_noise`, `turn_noise` | relative actuation variances |
//! | `progress_noise`, `angle_noise` | odometry variance per meter / radian |
//! | `slip`, `slip_drift` | slip factor and heading drift per meter at slip 1 |
//! | `substeps` | sub-steps per primitive |
//! | `guard_scale` | guard variance as a fraction of the model variance |
//!
//! `jitter` and `coupling` only matter for synthetic expert traces.

use std::str::FromStr;

use crate::error::SimError;
use crate::gbn::{Direction, MotionType};

use super::{Maneuver, NoiseModel, Pose, Primitive, Spot};

/// Shipped parking world. Maneuver magnitudes are repository defaults; the
/// expert jitter and coupling use the reference parking-chain variances and
/// dependence coefficients; sensor drift uses the wheel-velocity and
/// angular-velocity variances of the rover's sensors.
pub const DEFAULT_WORLD: &str = include_str!("default_world.cfg");

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub start: Pose,
    pub nominal: Maneuver,
    pub jitter: Vec<f64>,
    /// `coupling[i]` scales primitive i-1's deviation into primitive i; `coupling[0]` is unused.
    pub coupling: Vec<f64>,
    pub spot: Spot,
    pub noise: NoiseModel,
    pub substeps: usize,
    pub guard_scale: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_WORLD, "<default world>").expect("shipped world parses")
    }
}

fn err(path: &str, line: usize, message: impl Into<String>) -> SimError {
    SimError::Config {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn numbers(path: &str, line: usize, key: &str, value: &str, count: usize) -> Result<Vec<f64>, SimError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != count {
        return Err(err(path, line, format!("`{key}` takes {count} number(s)")));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err(path, line, format!("`{key}`: `{p}` is not a finite number"))),
        })
        .collect()
}

impl WorldConfig {
    /// `source` names the input in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self, SimError> {
        let mut start = Pose::origin();
        let mut prims = Vec::new();
        let mut jitter = Vec::new();
        let mut coupling = Vec::new();
        let mut center = None;
        let (mut length, mut width, mut tol) = (0.5, 0.3, 0.35);
        let mut noise = NoiseModel::ZERO;
        let mut substeps = 100usize;
        let mut guard_scale = 0.01;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(source, line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let one = |k: &str| numbers(source, line, k, value, 1).map(|v| v[0]);
            match key {
                "start" => {
                    let v = numbers(source, line, key, value, 3)?;
                    start = Pose::new(v[0], v[1], v[2]);
                }
                "spot_center" => {
                    let v = numbers(source, line, key, value, 3)?;
                    center = Some(Pose::new(v[0], v[1], v[2]));
                }
                "primitive" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if !(3..=5).contains(&parts.len()) {
                        return Err(err(
                            source,
                            line,
                            "`primitive` takes: type direction magnitude [jitter [coupling]]",
                        ));
                    }
                    let motion = MotionType::from_str(parts[0]).map_err(|m| err(source, line, m))?;
                    let direction = Direction::from_str(parts[1]).map_err(|m| err(source, line, m))?;
                    let rest = numbers(source, line, key, &parts[2..].join(" "), parts.len() - 2)?;
                    let j = rest.get(1).copied().unwrap_or(0.0);
                    if j < 0.0 {
                        return Err(err(source, line, "jitter variance must be >= 0"));
                    }
                    prims.push(Primitive {
                        motion,
                        direction,
                        magnitude: rest[0],
                    });
                    jitter.push(j);
                    coupling.push(rest.get(2).copied().unwrap_or(0.0));
                }
                "spot_length" => length = one(key)?,
                "spot_width" => width = one(key)?,
                "heading_tolerance" => tol = one(key)?,
                "drive_noise" => noise.drive = one(key)?,
                "turn_noise" => noise.turn = one(key)?,
                "progress_noise" => noise.progress = one(key)?,
                "angle_noise" => noise.angle = one(key)?,
                "slip" => noise.slip = one(key)?,
                "slip_drift" => noise.slip_drift = one(key)?,
                "guard_scale" => guard_scale = one(key)?,
                "substeps" => {
                    let v = one(key)?;
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(err(source, line, "`substeps` must be a positive integer"));
                    }
                    substeps = v as usize;
                }
                other => return Err(err(source, line, format!("unknown key `{other}`"))),
            }
        }
        let nominal = Maneuver(prims);
        let cfg = Self {
            start,
            spot: Spot {
                center: center.unwrap_or_else(|| nominal.endpoint(&start)),
                length,
                width,
                heading_tolerance: tol,
            },
            nominal,
            jitter,
            coupling,
            noise,
            substeps,
            guard_scale,
        };
        cfg.validate().map_err(|m| err(source, 0, m))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), 0, e.to_string()))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn validate(&self) -> Result<(), String> {
        if self.nominal.is_empty() {
            return Err("at least one `primitive` is required".into());
        }
        if !(self.spot.length > 0.0 && self.spot.width > 0.0 && self.spot.heading_tolerance >= 0.0) {
            return Err("spot length and width must be > 0 and heading_tolerance >= 0".into());
        }
        if !(self.guard_scale >= 0.0) {
            return Err("guard_scale must be >= 0".into());
        }
        self.noise.validate()
    }

    /// Same geometry with every noise source and the expert jitter switched off.
    pub fn noiseless(&self) -> Self {
        Self {
            noise: NoiseModel::ZERO,
            jitter: vec![0.0; self.jitter.len()],
            ..self.clone()
        }
    }

    pub fn with_slip(&self, slip: f64) -> Self {
        let mut c = self.clone();
        c.noise.slip = slip;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_world_is_a_seven_step_chain() {
        let w = WorldConfig::default();
        assert_eq!(w.nominal.len(), 7);
        assert_eq!(w.nominal.labels(), ["l1", "alpha1", "l2", "alpha2", "l3", "alpha3", "l4"]);
        assert_eq!(w.spot.center, w.nominal.endpoint(&w.start));
        assert_eq!(w.substeps, 100);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = WorldConfig::parse("primitive = drive backward 0.5\nslip = fast\n", "w.cfg").unwrap_err();
        assert!(matches!(e, SimError::Config { line: 2, .. }), "{e}");
        let e = WorldConfig::parse("\n\nwheels = 4\n", "w.cfg").unwrap_err();
        assert!(matches!(e, SimError::Config { line: 3, .. }), "{e}");
        let e = WorldConfig::parse("primitive = hover up 1\n", "w.cfg").unwrap_err();
        assert!(matches!(e, SimError::Config { line: 1, .. }), "{e}");
        assert!(WorldConfig::parse("slip = 0\n", "w.cfg").is_err());
        assert!(WorldConfig::parse("primitive = drive forward 1\nprogress_noise = -1\n", "w").is_err());
    }

    #[test]
    fn noiseless_clears_every_source() {
        let w = WorldConfig::default().noiseless();
        assert_eq!(w.noise, NoiseModel::ZERO);
        assert!(w.jitter.iter().all(|&j| j == 0.0));
    }
}
