//! Double-integrator swarm in the plane: sensing, observations, contact
//! forces, collisions and the episode lifecycle.

use std::path::Path;

use log::{debug, trace};
use rand::seq::{IndexedRandom, index};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{self, BehaviorSpec, LocalView, NeighborView};
use crate::geometry::{Rect, Vec2};
use crate::region::{self, GridRegion, OccupancyMap, RegionError};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error("shape library is empty")]
    EmptyLibrary,
    #[error("shape {name:?} cannot hold {n_robot} robots of radius {r_avoid}")]
    Capacity {
        name: String,
        n_robot: usize,
        r_avoid: f64,
    },
    #[error("no collision-free start placement found after {0} attempts")]
    Placement(usize),
    #[error("shape {name:?}: {source}")]
    Shape {
        name: String,
        #[source]
        source: RegionError,
    },
    #[error("reading shape library {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Spec(#[from] behavior::SpecError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub p: Vec2,
    pub v: Vec2,
    pub m: f64,
}

impl RobotState {
    pub fn at_rest(p: Vec2) -> Self {
        Self { p, v: Vec2::ZERO, m: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub robots: Vec<RobotState>,
}

impl SwarmState {
    pub fn positions(&self) -> Vec<Vec2> {
        self.robots.iter().map(|r| r.p).collect()
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }
}

/// Environment parameters. Defaults are the 30-robot task setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub n_robot: usize,
    pub r_sense: f64,
    pub r_avoid: f64,
    pub n_hn: usize,
    pub n_hc: usize,
    pub dt: f64,
    pub f_max: f64,
    pub v_max: f64,
    pub mass: f64,
    pub k_contact: f64,
    pub episode_length: usize,
    /// Meters per grid cell for loaded shapes.
    pub scale: f64,
    /// Spacing of the start lattice.
    pub spawn_spacing: f64,
    /// Gap between the region's lower edge and the first lattice row.
    pub spawn_gap: f64,
    /// Free space around the region and start lattice before the arena wall.
    pub arena_margin: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_robot: 30,
            r_sense: 0.4,
            r_avoid: 0.1,
            n_hn: 6,
            n_hc: 80,
            dt: 0.05,
            f_max: 1.0,
            v_max: 1.0,
            mass: 1.0,
            k_contact: 50.0,
            episode_length: 200,
            scale: 0.1,
            spawn_spacing: 0.3,
            spawn_gap: 0.2,
            arena_margin: 0.5,
        }
    }
}

impl EnvConfig {
    pub fn obs_dim(&self) -> usize {
        observation_dim(self.n_hn, self.n_hc)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |m: &str| Err(EnvError::Config(m.to_string()));
        if !(self.r_avoid > 0.0 && self.r_sense > 2.0 * self.r_avoid) {
            return fail("need r_sense > 2 r_avoid > 0");
        }
        if self.n_hn == 0 || self.n_hc == 0 {
            return fail("n_hn and n_hc must be at least 1");
        }
        if !(self.dt > 0.0 && self.f_max > 0.0 && self.v_max > 0.0 && self.mass > 0.0) {
            return fail("dt, f_max, v_max and mass must be positive");
        }
        if !(self.k_contact >= 0.0) {
            return fail("k_contact must be non-negative");
        }
        if self.spawn_spacing <= 2.0 * self.r_avoid {
            return fail("spawn_spacing must exceed 2 r_avoid");
        }
        if self.spawn_gap < self.r_avoid || self.arena_margin < self.r_avoid {
            return fail("spawn_gap and arena_margin must be at least r_avoid");
        }
        Ok(())
    }
}

/// `6 + 4 n_hn + 2 n_hc`
pub fn observation_dim(n_hn: usize, n_hc: usize) -> usize {
    6 + 4 * n_hn + 2 * n_hc
}

/// Flat per-robot observation:
/// `[p, v]`, `n_hn` blocks of `[Δp, Δv]`, the target offset, then `n_hc`
/// cell offsets. Unused slots are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn from_view(view: &LocalView, n_hn: usize, n_hc: usize) -> Self {
        let mut o = Vec::with_capacity(observation_dim(n_hn, n_hc));
        let s = &view.state;
        o.extend_from_slice(&[s.p.x, s.p.y, s.v.x, s.v.y]);
        for k in 0..n_hn {
            match view.neighbors.get(k) {
                Some(n) => o.extend_from_slice(&[n.rel_p.x, n.rel_p.y, n.rel_v.x, n.rel_v.y]),
                None => o.extend_from_slice(&[0.0; 4]),
            }
        }
        o.extend_from_slice(&[view.target.x, view.target.y]);
        for k in 0..n_hc {
            match view.cells.get(k) {
                Some(c) => o.extend_from_slice(&[c.x, c.y]),
                None => o.extend_from_slice(&[0.0; 2]),
            }
        }
        Observation(o)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Robots strictly within `r_sense` of robot `i`, nearest first (ties to the
/// lower id), truncated to `n_hn`.
pub fn sense_neighbors(i: usize, swarm: &SwarmState, cfg: &EnvConfig) -> Vec<usize> {
    let pi = swarm.robots[i].p;
    let mut found: Vec<(f64, usize)> = swarm
        .robots
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, r)| ((r.p - pi).norm(), j))
        .filter(|&(d, _)| d < cfg.r_sense)
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    found.truncate(cfg.n_hn);
    found.into_iter().map(|(_, j)| j).collect()
}

/// Unoccupied cells whose centers lie strictly within `r_sense` of `p`. When
/// more than `n_hc` qualify a uniform subsample is drawn from `rng`; the
/// result is ordered nearest first (ties to the lower cell index).
pub fn sense_cells<R: Rng + ?Sized>(
    p: Vec2,
    region: &GridRegion,
    occupancy: &OccupancyMap,
    cfg: &EnvConfig,
    rng: &mut R,
) -> Vec<usize> {
    let mut visible: Vec<usize> = region
        .cell_centers()
        .iter()
        .enumerate()
        .filter(|&(k, &c)| !occupancy.occupied[k] && (c - p).norm() < cfg.r_sense)
        .map(|(k, _)| k)
        .collect();
    if visible.len() > cfg.n_hc {
        let picks = index::sample(rng, visible.len(), cfg.n_hc);
        visible = picks.into_iter().map(|k| visible[k]).collect();
    }
    let centers = region.cell_centers();
    visible.sort_by(|&a, &b| {
        (centers[a] - p)
            .norm_sq()
            .total_cmp(&(centers[b] - p).norm_sq())
            .then(a.cmp(&b))
    });
    visible
}

/// Center of the nearest unoccupied cell to `p`, or of the nearest cell when
/// all are occupied. Ties go to the lowest cell index.
pub fn select_target_cell(p: Vec2, region: &GridRegion, occupancy: &OccupancyMap) -> Vec2 {
    let nearest = |free_only: bool| {
        let mut best: Option<(usize, f64)> = None;
        for (k, &c) in region.cell_centers().iter().enumerate() {
            if free_only && occupancy.occupied[k] {
                continue;
            }
            let d2 = (c - p).norm_sq();
            if best.is_none_or(|(_, bd)| d2 < bd) {
                best = Some((k, d2));
            }
        }
        best.map(|(k, _)| region.cell_centers()[k])
    };
    nearest(true)
        .or_else(|| nearest(false))
        .expect("regions are never empty")
}

/// Builds the structured view of robot `i`.
pub fn build_view<R: Rng + ?Sized>(
    i: usize,
    swarm: &SwarmState,
    region: &GridRegion,
    occupancy: &OccupancyMap,
    cfg: &EnvConfig,
    rng: &mut R,
) -> LocalView {
    let me = swarm.robots[i];
    let neighbor_ids = sense_neighbors(i, swarm, cfg);
    let neighbors: Vec<NeighborView> = neighbor_ids
        .iter()
        .map(|&j| NeighborView {
            rel_p: swarm.robots[j].p - me.p,
            rel_v: swarm.robots[j].v - me.v,
        })
        .collect();
    let min_neighbor_distance = neighbors
        .first()
        .map_or(cfg.r_sense, |n| n.rel_p.norm().min(cfg.r_sense));
    let cells = sense_cells(me.p, region, occupancy, cfg, rng)
        .into_iter()
        .map(|k| region.cell_centers()[k] - me.p)
        .collect();
    LocalView {
        state: me,
        inside_region: region.contains(me.p),
        min_neighbor_distance,
        neighbors,
        target: select_target_cell(me.p, region, occupancy) - me.p,
        cells,
        r_sense: cfg.r_sense,
        r_avoid: cfg.r_avoid,
        f_max: cfg.f_max,
    }
}

pub fn build_observation<R: Rng + ?Sized>(
    i: usize,
    swarm: &SwarmState,
    region: &GridRegion,
    occupancy: &OccupancyMap,
    cfg: &EnvConfig,
    rng: &mut R,
) -> Observation {
    let view = build_view(i, swarm, region, occupancy, cfg, rng);
    Observation::from_view(&view, cfg.n_hn, cfg.n_hc)
}

/// Hooke contact force on robot `i` from overlapping robots and the arena wall.
pub fn passive_force(i: usize, swarm: &SwarmState, arena: Rect, cfg: &EnvConfig) -> Vec2 {
    inter_robot_force(i, swarm, cfg) + wall_force(swarm.robots[i].p, arena, cfg)
}

/// Spring repulsion between disks of radius `r_avoid`. Exactly coincident
/// robots are pushed apart along x, the lower id toward -x.
pub fn inter_robot_force(i: usize, swarm: &SwarmState, cfg: &EnvConfig) -> Vec2 {
    let contact = 2.0 * cfg.r_avoid;
    let pi = swarm.robots[i].p;
    let mut f = Vec2::ZERO;
    for (j, r) in swarm.robots.iter().enumerate() {
        if j == i {
            continue;
        }
        let delta = pi - r.p;
        let d = delta.norm();
        if d >= contact {
            continue;
        }
        let dir = if d > 0.0 {
            delta / d
        } else if i < j {
            Vec2::new(-1.0, 0.0)
        } else {
            Vec2::new(1.0, 0.0)
        };
        f += dir * (cfg.k_contact * (contact - d));
    }
    f
}

fn wall_force(p: Vec2, arena: Rect, cfg: &EnvConfig) -> Vec2 {
    let r = cfg.r_avoid;
    let k = cfg.k_contact;
    let mut f = Vec2::ZERO;
    let left = p.x - arena.min.x;
    if left < r {
        f.x += k * (r - left);
    }
    let right = arena.max.x - p.x;
    if right < r {
        f.x -= k * (r - right);
    }
    let bottom = p.y - arena.min.y;
    if bottom < r {
        f.y += k * (r - bottom);
    }
    let top = arena.max.y - p.y;
    if top < r {
        f.y -= k * (r - top);
    }
    f
}

/// Unordered pairs `(i, j)`, `i < j`, closer than `2 r_avoid`.
pub fn collision_pairs(positions: &[Vec2], r_avoid: f64) -> Vec<(usize, usize)> {
    let contact = 2.0 * r_avoid;
    let mut pairs = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if (positions[i] - positions[j]).norm() < contact {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Which reward the environment hands out.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardFn {
    Spec(BehaviorSpec),
    Mdr,
}

impl RewardFn {
    pub fn evaluate(&self, view: &LocalView) -> Result<f64, behavior::SpecError> {
        match self {
            RewardFn::Spec(spec) => behavior::spec_reward(view, spec),
            RewardFn::Mdr => Ok(behavior::mdr_reward(view)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub observations: Vec<Observation>,
    pub views: Vec<LocalView>,
    pub rewards: Vec<f64>,
    pub collisions: Vec<(usize, usize)>,
    pub done: bool,
}

/// Named target shapes for randomized episodes.
#[derive(Clone, Debug)]
pub struct ShapeLibrary {
    shapes: Vec<(String, GridRegion)>,
}

impl ShapeLibrary {
    pub fn new(shapes: Vec<(String, GridRegion)>) -> Result<Self, EnvError> {
        if shapes.is_empty() {
            return Err(EnvError::EmptyLibrary);
        }
        Ok(Self { shapes })
    }

    pub fn single(name: &str, region: GridRegion) -> Self {
        Self {
            shapes: vec![(name.to_string(), region)],
        }
    }

    /// Loads every shape file in `dir` (or the single file `dir`), sorted by
    /// file name.
    pub fn load(dir: &Path, scale: f64) -> Result<Self, EnvError> {
        let io_err = |source| EnvError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths = if dir.is_file() {
            vec![dir.to_path_buf()]
        } else {
            let mut v = Vec::new();
            for entry in std::fs::read_dir(dir).map_err(io_err)? {
                let path = entry.map_err(io_err)?.path();
                if path.is_file() {
                    v.push(path);
                }
            }
            v
        };
        paths.sort();
        let mut shapes = Vec::new();
        for path in paths {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let region = GridRegion::load(&path, scale).map_err(|source| EnvError::Shape {
                name: name.clone(),
                source,
            })?;
            shapes.push((name, region));
        }
        Self::new(shapes)
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GridRegion)> {
        self.shapes.iter().map(|(n, r)| (n.as_str(), r))
    }

    pub fn get(&self, idx: usize) -> (&str, &GridRegion) {
        let (n, r) = &self.shapes[idx];
        (n, r)
    }

    /// Fails on the first shape that cannot hold the swarm.
    pub fn check_capacity(&self, cfg: &EnvConfig) -> Result<(), EnvError> {
        for (name, region) in &self.shapes {
            if !region::capacity_check(cfg.n_robot, cfg.r_avoid, region) {
                return Err(EnvError::Capacity {
                    name: name.clone(),
                    n_robot: cfg.n_robot,
                    r_avoid: cfg.r_avoid,
                });
            }
        }
        Ok(())
    }
}

const PLACEMENT_ATTEMPTS: usize = 100;

/// Start lattice below the region: rows of robots `spawn_spacing` apart,
/// centered under the region, each jittered by up to a quarter of the free
/// gap between disks.
pub fn spawn_positions<R: Rng + ?Sized>(
    region: &GridRegion,
    cfg: &EnvConfig,
    rng: &mut R,
) -> Result<Vec<Vec2>, EnvError> {
    let bounds = region.bounds();
    let s = cfg.spawn_spacing;
    let per_row = ((bounds.width() / s).floor() as usize + 1).max(1);
    let jitter = 0.25 * (s - 2.0 * cfg.r_avoid);
    let cx = bounds.center().x;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut out = Vec::with_capacity(cfg.n_robot);
        for k in 0..cfg.n_robot {
            let row = k / per_row;
            let col = k % per_row;
            let in_row = (cfg.n_robot - row * per_row).min(per_row);
            let x = cx + (col as f64 - (in_row as f64 - 1.0) / 2.0) * s;
            let y = bounds.min.y - cfg.spawn_gap - jitter - row as f64 * s;
            let j = Vec2::new(rng.random_range(-jitter..=jitter), rng.random_range(-jitter..=jitter));
            out.push(Vec2::new(x, y) + j);
        }
        let clear_of_cells = out.iter().all(|&p| {
            region
                .cell_centers()
                .iter()
                .all(|&c| (c - p).norm() >= cfg.r_avoid)
        });
        if clear_of_cells && collision_pairs(&out, cfg.r_avoid).is_empty() {
            return Ok(out);
        }
    }
    Err(EnvError::Placement(PLACEMENT_ATTEMPTS))
}

/// Arena enclosing the region and the start lattice.
pub fn arena_for(region: &GridRegion, cfg: &EnvConfig) -> Rect {
    let b = region.bounds();
    let per_row = ((b.width() / cfg.spawn_spacing).floor() as usize + 1).max(1);
    let rows = cfg.n_robot.div_ceil(per_row).max(1);
    let lattice_depth = cfg.spawn_gap + cfg.spawn_spacing * rows as f64;
    let half_row = 0.5 * (per_row.saturating_sub(1)) as f64 * cfg.spawn_spacing;
    let min_x = b.min.x.min(b.center().x - half_row);
    let max_x = b.max.x.max(b.center().x + half_row);
    Rect::new(
        Vec2::new(min_x, b.min.y - lattice_depth) - Vec2::new(cfg.arena_margin, cfg.arena_margin),
        Vec2::new(max_x, b.max.y) + Vec2::new(cfg.arena_margin, cfg.arena_margin),
    )
}

/// One environment instance; owns its state and RNG stream.
pub struct SwarmEnv<R> {
    cfg: EnvConfig,
    library: ShapeLibrary,
    reward: RewardFn,
    rng: R,
    region: GridRegion,
    shape_name: String,
    arena: Rect,
    swarm: SwarmState,
    occupancy: OccupancyMap,
    t: usize,
    clamp_events: usize,
}

impl<R: RngCore> SwarmEnv<R> {
    pub fn new(cfg: EnvConfig, library: ShapeLibrary, reward: RewardFn, rng: R) -> Result<Self, EnvError> {
        cfg.validate()?;
        library.check_capacity(&cfg)?;
        if let RewardFn::Spec(spec) = &reward {
            if spec.kind() != behavior::SpecKind::Reward {
                return Err(behavior::SpecError::KindMismatch {
                    expected: behavior::SpecKind::Reward,
                    actual: spec.kind(),
                }
                .into());
            }
        }
        let (name, region) = library.get(0);
        let (name, region) = (name.to_string(), region.clone());
        let arena = arena_for(&region, &cfg);
        let occupancy = region::compute_occupancy(&region, &[], cfg.r_avoid);
        Ok(Self {
            cfg,
            library,
            reward,
            rng,
            region,
            shape_name: name,
            arena,
            swarm: SwarmState { robots: vec![] },
            occupancy,
            t: 0,
            clamp_events: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn region(&self) -> &GridRegion {
        &self.region
    }

    pub fn shape_name(&self) -> &str {
        &self.shape_name
    }

    pub fn arena(&self) -> Rect {
        self.arena
    }

    pub fn swarm(&self) -> &SwarmState {
        &self.swarm
    }

    pub fn occupancy(&self) -> &OccupancyMap {
        &self.occupancy
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// Number of action or velocity clamps applied so far.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    /// Draws a shape uniformly from the library and lines the robots up below it.
    pub fn reset(&mut self) -> Result<Vec<LocalView>, EnvError> {
        let idx = self.rng.random_range(0..self.library.len());
        self.reset_with_shape(idx)
    }

    pub fn reset_with_shape(&mut self, idx: usize) -> Result<Vec<LocalView>, EnvError> {
        let (name, region) = self.library.get(idx);
        self.shape_name = name.to_string();
        self.region = region.clone();
        self.arena = arena_for(&self.region, &self.cfg);
        let positions = spawn_positions(&self.region, &self.cfg, &mut self.rng)?;
        self.swarm = SwarmState {
            robots: positions
                .into_iter()
                .map(|p| RobotState {
                    p,
                    v: Vec2::ZERO,
                    m: self.cfg.mass,
                })
                .collect(),
        };
        self.t = 0;
        self.occupancy = region::compute_occupancy(&self.region, &self.swarm.positions(), self.cfg.r_avoid);
        Ok(self.views())
    }

    /// Places the swarm explicitly (tests, replays).
    pub fn set_state(&mut self, swarm: SwarmState) {
        self.swarm = swarm;
        self.occupancy = region::compute_occupancy(&self.region, &self.swarm.positions(), self.cfg.r_avoid);
    }

    /// Fresh views of every robot; consumes RNG only when cells are subsampled.
    pub fn views(&mut self) -> Vec<LocalView> {
        (0..self.swarm.len())
            .map(|i| build_view(i, &self.swarm, &self.region, &self.occupancy, &self.cfg, &mut self.rng))
            .collect()
    }

    /// Advances one step with per-robot active forces.
    pub fn step(&mut self, actions: &[Vec2]) -> Result<StepResult, EnvError> {
        assert_eq!(actions.len(), self.swarm.len(), "one action per robot");
        let cfg = &self.cfg;
        let passive: Vec<Vec2> = (0..self.swarm.len())
            .map(|i| passive_force(i, &self.swarm, self.arena, cfg))
            .collect();
        let mut clamps = 0;
        for (i, robot) in self.swarm.robots.iter_mut().enumerate() {
            let finite = |x: f64| if x.is_finite() { x } else { 0.0 };
            let fa = Vec2::new(finite(actions[i].x), finite(actions[i].y)).clamp_components(cfg.f_max);
            if fa != actions[i] {
                clamps += 1;
            }
            robot.v += (fa + passive[i]) * (cfg.dt / robot.m);
            if robot.v.norm() > cfg.v_max {
                robot.v = robot.v.clamp_norm(cfg.v_max);
                clamps += 1;
            }
            robot.p += robot.v * cfg.dt;
        }
        if clamps > 0 {
            trace!("step {}: {clamps} action/velocity clamps", self.t);
            self.clamp_events += clamps;
        }
        self.t += 1;
        let positions = self.swarm.positions();
        self.occupancy = region::compute_occupancy(&self.region, &positions, self.cfg.r_avoid);
        let collisions = collision_pairs(&positions, self.cfg.r_avoid);
        let views = self.views();
        let rewards = views
            .iter()
            .map(|v| self.reward.evaluate(v))
            .collect::<Result<Vec<_>, _>>()?;
        let observations = views
            .iter()
            .map(|v| Observation::from_view(v, self.cfg.n_hn, self.cfg.n_hc))
            .collect();
        let done = self.t >= self.cfg.episode_length;
        if done {
            debug!("episode on {:?} finished after {} steps", self.shape_name, self.t);
        }
        Ok(StepResult {
            observations,
            views,
            rewards,
            collisions,
            done,
        })
    }

    /// Coverage rate of the current configuration.
    pub fn coverage(&self) -> f64 {
        self.occupancy.n_occupied() as f64 / self.region.n_cell() as f64
    }

    /// Uniformity of the current configuration.
    pub fn uniformity(&self) -> Result<f64, RegionError> {
        region::uniformity(&self.region, &self.swarm.positions())
    }
}

/// Picks `k` distinct shapes (or all) for evaluation in library order.
pub fn choose_shapes<'a, R: Rng + ?Sized>(lib: &'a ShapeLibrary, k: usize, rng: &mut R) -> Vec<&'a str> {
    let names: Vec<&str> = lib.iter().map(|(n, _)| n).collect();
    if k >= names.len() {
        return names;
    }
    let mut picked: Vec<&str> = names.choose_multiple(rng, k).copied().collect();
    picked.sort_unstable();
    picked
}
