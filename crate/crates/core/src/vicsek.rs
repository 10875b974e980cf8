//! Vicsek collective-motion model.
//!
//! `n` agents move at constant speed `v0` in a periodic square of side `ℓ`.
//! Each step an agent takes the average heading of every agent within
//! distance `R` of it (itself included), adds uniform noise of width `η`,
//! and moves `v0·dt` along the new heading.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metric::{wrapped_difference, MetricKind, PointCloud, TimeVaryingPointCloud};

/// How neighbor headings are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingRule {
    /// `atan2(mean sin θ, mean cos θ)`.
    #[default]
    CircularMean,
    /// Plain mean of the raw angles in `[0, 2π)`.
    ArithmeticMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VicsekParams {
    pub n: usize,
    pub box_length: f64,
    pub speed: f64,
    pub noise: f64,
    pub radius: f64,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub heading_rule: HeadingRule,
}

impl Default for VicsekParams {
    /// `ℓ = 25`, `n = 300`, `v0 = 0.03`, `R = dt = 1`, 2000 steps.
    fn default() -> Self {
        Self {
            n: 300,
            box_length: 25.0,
            speed: 0.03,
            noise: 0.1,
            radius: 1.0,
            dt: 1.0,
            steps: 2000,
            seed: 0,
            heading_rule: HeadingRule::CircularMean,
        }
    }
}

impl VicsekParams {
    /// Agent density `n / ℓ²`.
    pub fn density(&self) -> f64 {
        self.n as f64 / (self.box_length * self.box_length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("Vicsek model needs at least one agent");
        }
        if !(self.box_length > 0.0 && self.speed > 0.0 && self.radius > 0.0 && self.dt > 0.0) {
            return invalid("box length, speed, radius and dt must be positive");
        }
        if !(self.noise >= 0.0) {
            return invalid("noise must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

pub type Frame = Vec<AgentState>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub params: VicsekParams,
    /// `frames[t]` holds every agent at step `t`; agent identity is the index.
    pub frames: Vec<Frame>,
}

/// Reduces `v` into `[0, period)`, guarding against `rem_euclid` rounding up
/// to `period` for tiny negative inputs.
fn wrap(v: f64, period: f64) -> f64 {
    let w = v.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}

pub fn init_state<R: Rng>(params: &VicsekParams, rng: &mut R) -> Result<Frame> {
    params.validate()?;
    let l = params.box_length;
    Ok((0..params.n)
        .map(|_| AgentState {
            x: wrap(rng.gen::<f64>() * l, l),
            y: wrap(rng.gen::<f64>() * l, l),
            theta: wrap(rng.gen::<f64>() * TAU, TAU),
        })
        .collect())
}

/// Uniform cell grid over the periodic box with cells at least `R` wide.
struct CellGrid {
    cells_per_side: usize,
    cell_side: f64,
    cells: Vec<Vec<usize>>,
}

impl CellGrid {
    fn new(frame: &[AgentState], box_length: f64, radius: f64) -> Self {
        let cells_per_side = ((box_length / radius).floor() as usize).max(1);
        let cell_side = box_length / cells_per_side as f64;
        let mut cells = vec![Vec::new(); cells_per_side * cells_per_side];
        for (i, a) in frame.iter().enumerate() {
            let (cx, cy) = Self::coords(a, cell_side, cells_per_side);
            cells[cy * cells_per_side + cx].push(i);
        }
        Self {
            cells_per_side,
            cell_side,
            cells,
        }
    }

    fn coords(a: &AgentState, side: f64, per_side: usize) -> (usize, usize) {
        let cx = ((a.x / side) as usize).min(per_side - 1);
        let cy = ((a.y / side) as usize).min(per_side - 1);
        (cx, cy)
    }

    /// Candidate neighbor indices of `a`, each listed once.
    fn candidates(&self, a: &AgentState, out: &mut Vec<usize>) {
        out.clear();
        let m = self.cells_per_side;
        if m < 3 {
            out.extend(self.cells.iter().flatten());
            return;
        }
        let (cx, cy) = Self::coords(a, self.cell_side, m);
        for dy in [m - 1, 0, 1] {
            for dx in [m - 1, 0, 1] {
                let x = (cx + dx) % m;
                let y = (cy + dy) % m;
                out.extend(&self.cells[y * m + x]);
            }
        }
    }
}

fn within_radius(a: &AgentState, b: &AgentState, l: f64, r: f64) -> bool {
    let dx = wrapped_difference(a.x, b.x, l);
    let dy = wrapped_difference(a.y, b.y, l);
    dx * dx + dy * dy <= r * r
}

fn average_heading(frame: &[AgentState], neighbors: &[usize], rule: HeadingRule) -> f64 {
    match rule {
        HeadingRule::CircularMean => {
            let (s, c) = neighbors.iter().fold((0.0, 0.0), |(s, c), &j| {
                (s + frame[j].theta.sin(), c + frame[j].theta.cos())
            });
            s.atan2(c)
        }
        HeadingRule::ArithmeticMean => {
            neighbors.iter().map(|&j| frame[j].theta).sum::<f64>() / neighbors.len() as f64
        }
    }
}

#[derive(Clone, Copy)]
enum NeighborSearch {
    Grid,
    BruteForce,
}

fn step_with<R: Rng>(
    frame: &[AgentState],
    params: &VicsekParams,
    rng: &mut R,
    search: NeighborSearch,
) -> Frame {
    let l = params.box_length;
    let r = params.radius;
    let grid = match search {
        NeighborSearch::Grid => Some(CellGrid::new(frame, l, r)),
        NeighborSearch::BruteForce => None,
    };
    let mut candidates = Vec::new();
    let mut neighbors = Vec::new();
    frame
        .iter()
        .map(|a| {
            match &grid {
                Some(g) => g.candidates(a, &mut candidates),
                None => {
                    candidates.clear();
                    candidates.extend(0..frame.len());
                }
            }
            neighbors.clear();
            neighbors.extend(
                candidates
                    .iter()
                    .copied()
                    .filter(|&j| within_radius(a, &frame[j], l, r)),
            );
            // summation order must not depend on the search structure
            neighbors.sort_unstable();
            let mean = average_heading(frame, &neighbors, params.heading_rule);
            let noise = params.noise * (rng.gen::<f64>() - 0.5);
            let theta = wrap(mean + noise, TAU);
            AgentState {
                x: wrap(a.x + params.speed * theta.cos() * params.dt, l),
                y: wrap(a.y + params.speed * theta.sin() * params.dt, l),
                theta,
            }
        })
        .collect()
}

/// Advances every agent by one time step. Noise is drawn once per agent in
/// index order.
pub fn step<R: Rng>(frame: &[AgentState], params: &VicsekParams, rng: &mut R) -> Frame {
    step_with(frame, params, rng, NeighborSearch::Grid)
}

/// Same update as [`step`] with an all-pairs neighbor scan.
pub fn step_brute_force<R: Rng>(frame: &[AgentState], params: &VicsekParams, rng: &mut R) -> Frame {
    step_with(frame, params, rng, NeighborSearch::BruteForce)
}

pub fn simulate(params: &VicsekParams) -> Result<SimulationTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let first = init_state(params, &mut rng)?;
    simulate_from(params, first, &mut rng)
}

/// Runs the dynamics from a caller-supplied initial frame.
pub fn simulate_from<R: Rng>(
    params: &VicsekParams,
    initial: Frame,
    rng: &mut R,
) -> Result<SimulationTrace> {
    params.validate()?;
    if initial.len() != params.n {
        return invalid(format!(
            "initial frame has {} agents, expected {}",
            initial.len(),
            params.n
        ));
    }
    let mut frames = Vec::with_capacity(params.steps + 1);
    frames.push(initial);
    for t in 0..params.steps {
        let next = step(&frames[t], params, rng);
        frames.push(next);
    }
    Ok(SimulationTrace {
        params: params.clone(),
        frames,
    })
}

/// Alignment order parameter of one frame: the norm of the mean unit heading.
pub fn frame_order_parameter(frame: &[AgentState]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    let (s, c) = frame
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.theta.sin(), c + a.theta.cos()));
    (s.hypot(c) / frame.len() as f64).min(1.0)
}

pub fn order_parameter(trace: &SimulationTrace) -> Vec<f64> {
    trace.frames.iter().map(|f| frame_order_parameter(f)).collect()
}

/// Metric used on the scaled `(x/ℓ, y/ℓ, θ/2π)` clouds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudMetric {
    #[default]
    Euclidean,
    Toroidal,
}

fn unit_scale(v: f64, period: f64) -> f64 {
    let s = v / period;
    if s >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        s
    }
}

/// Converts every `subsample_step`-th frame into a point cloud in `[0,1)³`.
/// Time stamps are frame indices times `dt`.
pub fn to_point_clouds(
    trace: &SimulationTrace,
    subsample_step: usize,
    metric: CloudMetric,
) -> Result<TimeVaryingPointCloud> {
    if subsample_step == 0 {
        return invalid("subsample step must be at least 1");
    }
    let l = trace.params.box_length;
    let metric_kind = match metric {
        CloudMetric::Euclidean => MetricKind::Euclidean,
        CloudMetric::Toroidal => MetricKind::Toroidal(vec![1.0; 3]),
    };
    let mut times = Vec::new();
    let mut clouds = Vec::new();
    for (t, frame) in trace.frames.iter().enumerate().step_by(subsample_step) {
        let points = frame
            .iter()
            .map(|a| {
                vec![
                    unit_scale(a.x, l),
                    unit_scale(a.y, l),
                    unit_scale(a.theta, TAU),
                ]
            })
            .collect();
        times.push(t as f64 * trace.params.dt);
        clouds.push(PointCloud::new(points, metric_kind.clone())?);
    }
    TimeVaryingPointCloud::new(times, clouds)
}
