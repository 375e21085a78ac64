//! Closed-loop execution of a parking program against the simulated rover.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::SimError;
use crate::gauss::RngStream;
use crate::gbn::{format_number, Gbn, MotionType};
use crate::lang::{Env, GuardEvent, Stmt, Store};

use super::{overshoot_metric, Pose, World, WorldConfig};

/// Seven-block parking program, one `nwhile` per node of the parking chain.
pub const PARKING_PROGRAM: &str = include_str!("parking.np");

/// Smallest commanded sub-step, so a loop that has not yet stopped still moves.
pub const MIN_STEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    /// Sub-step counter.
    pub t: usize,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParkingReport {
    pub seed: u64,
    pub final_pose: Pose,
    pub success: bool,
    /// Magnitude of each executed primitive as reported by the pose estimate.
    pub commands: Vec<f64>,
    pub guard_log: Vec<GuardEvent>,
    pub path: Vec<PathPoint>,
}

/// Number of `nwhile` loops, i.e. motion primitives, in a program.
pub fn count_motion_blocks(program: &Stmt) -> usize {
    program
        .guards()
        .iter()
        .filter(|s| matches!(s, Stmt::Nwhile { .. }))
        .count()
}

pub fn path_to_csv(path: &[PathPoint]) -> String {
    let mut out = String::from("t,x,y,theta\n");
    for p in path {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.t,
            format_number(p.pose.x),
            format_number(p.pose.y),
            format_number(p.pose.theta)
        ));
    }
    out
}

struct Run {
    world: World,
    rng: RngStream,
    model: Gbn,
    substeps: usize,
    guard_scale: f64,
    k: usize,
    targets: Vec<f64>,
    achieved: Vec<f64>,
    start: Pose,
    /// Accumulated turn of the current primitive.
    turned: f64,
    odometry_error: f64,
    reading: f64,
    factor: Option<f64>,
    path: Vec<PathPoint>,
}

impl Run {
    fn expect(&self, motion: MotionType, host: &str) -> Result<(), String> {
        let node = self.model.nodes().get(self.k).ok_or("no primitive left")?;
        if node.motion != motion {
            return Err(format!(
                "{host} called during primitive {} ({})",
                self.k + 1,
                node.motion.as_str()
            ));
        }
        Ok(())
    }

    fn sign(&self) -> f64 {
        self.model.node(self.k).direction.sign()
    }

    /// Commanded sub-step: approach the target in at most `substeps` steps.
    fn wheel_step(&self) -> f64 {
        let target = self.targets[self.k];
        let full = (target.abs() / self.substeps as f64).max(MIN_STEP);
        (target - self.reading).clamp(MIN_STEP, full)
    }

    fn record(&mut self) {
        let t = self.path.len();
        self.path.push(PathPoint {
            t,
            pose: self.world.rover,
        });
    }

    fn moving(&mut self) -> Result<f64, String> {
        self.expect(MotionType::Drive, "moving()")?;
        let f = match self.factor {
            Some(f) => f,
            None => *self.factor.insert(self.world.drive_factor()),
        };
        let wheel = self.wheel_step();
        self.world.move_by(self.sign() * wheel * f);
        self.odometry_error += self.world.progress_drift(wheel);
        self.record();
        Ok(0.0)
    }

    fn turning(&mut self) -> Result<f64, String> {
        self.expect(MotionType::Turn, "turning()")?;
        let f = match self.factor {
            Some(f) => f,
            None => *self.factor.insert(self.world.turn_factor()),
        };
        let wheel = self.wheel_step();
        self.world.rotate_by(self.sign() * wheel * f);
        self.turned += wheel * f;
        self.odometry_error += self.world.angle_drift(wheel);
        self.record();
        Ok(0.0)
    }

    /// Estimated distance covered along the commanded direction.
    fn get_pose(&mut self) -> Result<f64, String> {
        self.expect(MotionType::Drive, "getPose()")?;
        let [c, s] = self.start.heading();
        let u = [self.sign() * c, self.sign() * s];
        let start = self.start.position();
        let now = self.world.rover.position();
        let progress = match self.targets[self.k] {
            l if l > 0.0 => {
                let target = [start[0] + l * u[0], start[1] + l * u[1]];
                l - overshoot_metric(start, target, now) / l
            }
            _ => (now[0] - start[0]) * u[0] + (now[1] - start[1]) * u[1],
        };
        self.reading = progress + self.odometry_error;
        Ok(self.reading)
    }

    fn get_angle(&mut self) -> Result<f64, String> {
        self.expect(MotionType::Turn, "getAngle()")?;
        self.reading = self.turned + self.odometry_error;
        Ok(self.reading)
    }

    fn publish(&self, store: &mut Store) {
        for j in self.k..self.targets.len() {
            store.set(&format!("targetLocation{}", j + 1), self.targets[j]);
            store.set(&format!("sigma{}", j + 1), self.guard_scale * self.model.node(j).variance);
        }
        store.set("currentDistance", 0.0);
        store.set("currentAngle", 0.0);
    }

    /// Close the current primitive and resample the remaining commands given
    /// what was actually achieved.
    fn update_targets(&mut self, store: &mut Store) -> Result<f64, String> {
        if self.k + 1 >= self.model.len() {
            return Err("no primitive left".into());
        }
        self.achieved.push(self.reading);
        self.k += 1;
        self.targets = self.model.sample_given(&self.achieved, &mut self.rng);
        self.start = self.world.rover;
        self.turned = 0.0;
        self.odometry_error = 0.0;
        self.reading = 0.0;
        self.factor = None;
        self.publish(store);
        Ok(0.0)
    }
}

/// Execute `program` with the parking host functions bound. The model supplies
/// commands, guard variances and primitive directions; `world` supplies start,
/// spot and noise. Randomness for guards, commands and the world comes from
/// three streams of `seed`.
pub fn run_parking(program: &Stmt, model: &Gbn, world: &WorldConfig, seed: u64) -> Result<ParkingReport, SimError> {
    let blocks = count_motion_blocks(program);
    if blocks != model.len() {
        return Err(SimError::ModelMismatch {
            program: blocks,
            model: model.len(),
        });
    }
    let mut rng = RngStream::for_trial(seed, 1);
    let targets = model.sample_commands(&mut rng);
    let sim = World::new(world.start, world.noise, RngStream::for_trial(seed, 2))?;
    let mut run = Run {
        world: sim,
        rng,
        model: model.clone(),
        substeps: world.substeps,
        guard_scale: world.guard_scale,
        k: 0,
        targets,
        achieved: Vec::new(),
        start: world.start,
        turned: 0.0,
        odometry_error: 0.0,
        reading: 0.0,
        factor: None,
        path: Vec::new(),
    };
    run.record();
    let mut store = Store::new();
    run.publish(&mut store);

    let run = Rc::new(RefCell::new(run));
    let mut env = Env::with_rng(RngStream::for_trial(seed, 0)).with_store(store).recording();
    let r = Rc::clone(&run);
    env.bind_host("moving", move |_, _| r.borrow_mut().moving())?;
    let r = Rc::clone(&run);
    env.bind_host("turning", move |_, _| r.borrow_mut().turning())?;
    let r = Rc::clone(&run);
    env.bind_host("getPose", move |_, _| r.borrow_mut().get_pose())?;
    let r = Rc::clone(&run);
    env.bind_host("getAngle", move |_, _| r.borrow_mut().get_angle())?;
    let r = Rc::clone(&run);
    env.bind_host("updateTargetLocations", move |_, store| r.borrow_mut().update_targets(store))?;

    env.exec(program)?;
    let guard_log = env.take_events();
    drop(env);
    let mut run = Rc::try_unwrap(run).ok().expect("host closures dropped").into_inner();
    run.achieved.push(run.reading);
    let final_pose = run.world.rover;
    Ok(ParkingReport {
        seed,
        final_pose,
        success: world.spot.contains(&final_pose),
        commands: run.achieved,
        guard_log,
        path: run.path,
    })
}
