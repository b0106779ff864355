//! Monte-Carlo occupancy estimates of forward orbits, backward orbits and
//! control sets on a bounded window of `G`.
//!
//! Each trajectory draws its own control from a ChaCha stream keyed by
//! `(seed, trajectory index)`, so results do not depend on how trajectories
//! are distributed over workers, and grids merge by adding counts.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::TAU;
use std::io::{self, Write};

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, segment_exact, ControlInput};
use crate::error::{LcsError, Result};
use crate::group::{wrap_angle, CoverElement, GroupElement};
use crate::larc::{ControlSystem, DRIFT_ZERO_TOL};

/// Binned region: full circles in `θ` and `φ`, a rectangle in `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub v_min: [f64; 2],
    pub v_max: [f64; 2],
    pub theta_bins: usize,
    pub v_bins: usize,
    pub phi_bins: usize,
}

impl Default for Window {
    fn default() -> Self {
        Self {
            v_min: [-3.0, -3.0],
            v_max: [3.0, 3.0],
            theta_bins: 16,
            v_bins: 40,
            phi_bins: 16,
        }
    }
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        let finite = self.v_min.iter().chain(&self.v_max).all(|x| x.is_finite());
        if !finite || self.v_min[0] >= self.v_max[0] || self.v_min[1] >= self.v_max[1] {
            return Err(LcsError::InvalidWindow(format!(
                "need v_min < v_max componentwise, got {:?} and {:?}",
                self.v_min, self.v_max
            )));
        }
        if self.theta_bins < 2 || self.v_bins < 2 || self.phi_bins < 2 {
            return Err(LcsError::InvalidWindow(
                "every bin count must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.theta_bins * self.v_bins * self.v_bins * self.phi_bins
    }

    pub fn base_cell_count(&self) -> usize {
        self.theta_bins * self.v_bins * self.v_bins
    }

    /// Index of the `(θ, vx, vy)` part of a cell.
    pub fn base_index(&self, c: &Cell) -> usize {
        (c.theta * self.v_bins + c.vx) * self.v_bins + c.vy
    }

    fn circle_bin(x: f64, bins: usize) -> usize {
        ((wrap_angle(x) / TAU * bins as f64) as usize).min(bins - 1)
    }

    fn v_bin(&self, x: f64, axis: usize) -> Option<usize> {
        let (lo, hi) = (self.v_min[axis], self.v_max[axis]);
        if !(x >= lo && x < hi) {
            return None;
        }
        Some((((x - lo) / (hi - lo) * self.v_bins as f64) as usize).min(self.v_bins - 1))
    }

    /// Cell `(θ, vx, vy, φ)` of a cover state, `None` outside the `v` window.
    pub fn cell_of(&self, s: &CoverElement) -> Option<Cell> {
        Some(Cell {
            theta: Self::circle_bin(s.theta, self.theta_bins),
            vx: self.v_bin(s.v.x, 0)?,
            vy: self.v_bin(s.v.y, 1)?,
            phi: Self::circle_bin(s.phi, self.phi_bins),
        })
    }

    pub fn index(&self, c: &Cell) -> usize {
        ((c.theta * self.v_bins + c.vx) * self.v_bins + c.vy) * self.phi_bins + c.phi
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let phi = index % self.phi_bins;
        let rest = index / self.phi_bins;
        let vy = rest % self.v_bins;
        let rest = rest / self.v_bins;
        Cell {
            theta: rest / self.v_bins,
            vx: rest % self.v_bins,
            vy,
            phi,
        }
    }

    /// Center of a cell in coordinates `(θ, vx, vy, φ)`.
    pub fn center(&self, c: &Cell) -> [f64; 4] {
        let dv = |axis: usize| (self.v_max[axis] - self.v_min[axis]) / self.v_bins as f64;
        [
            (c.theta as f64 + 0.5) * TAU / self.theta_bins as f64,
            self.v_min[0] + (c.vx as f64 + 0.5) * dv(0),
            self.v_min[1] + (c.vy as f64 + 0.5) * dv(1),
            (c.phi as f64 + 0.5) * TAU / self.phi_bins as f64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub theta: usize,
    pub vx: usize,
    pub vy: usize,
    pub phi: usize,
}

/// Base cell `(θ, vx, vy)` of the fiber bundle `G → SE(2)`.
pub type BaseCell = (usize, usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachConfig {
    pub window: Window,
    pub horizon: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    pub segment_duration_range: [f64; 2],
    pub samples_per_segment: usize,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub values: ValueLaw,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self {
            window: Window::default(),
            horizon: 10.0,
            n_trajectories: 10_000,
            seed: 42,
            segment_duration_range: [0.1, 1.0],
            samples_per_segment: 8,
            sampler: SamplerKind::Walk,
            values: ValueLaw::Uniform,
        }
    }
}

impl ReachConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        let [d_min, d_max] = self.segment_duration_range;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(LcsError::InvalidConfig(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
            return Err(LcsError::InvalidConfig(format!(
                "segment duration range [{d_min}, {d_max}] must satisfy 0 < d_min <= d_max"
            )));
        }
        if self.samples_per_segment == 0 {
            return Err(LcsError::InvalidConfig(
                "samples_per_segment must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Visit counts per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub window: Window,
    pub counts: Vec<u64>,
    pub total_samples: u64,
}

impl OccupancyGrid {
    pub fn empty(window: Window) -> Self {
        Self {
            window,
            counts: vec![0; window.cell_count()],
            total_samples: 0,
        }
    }

    /// Records one sampled state; states outside the window are skipped.
    pub fn record(&mut self, s: &CoverElement) {
        self.total_samples += 1;
        if let Some(cell) = self.window.cell_of(s) {
            let i = self.window.index(&cell);
            self.counts[i] += 1;
        }
    }

    pub fn merge(mut self, other: &OccupancyGrid) -> Result<Self> {
        if self.window != other.window {
            return Err(LcsError::InvalidWindow(
                "cannot merge grids over different windows".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_samples += other.total_samples;
        Ok(self)
    }

    pub fn is_occupied(&self, c: &Cell) -> bool {
        self.counts[self.window.index(c)] > 0
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, n)| **n > 0)
            .map(|(i, _)| self.window.cell_at(i))
    }

    pub fn occupied_count(&self) -> usize {
        self.counts.iter().filter(|n| **n > 0).count()
    }

    pub fn occupancy_fraction(&self) -> f64 {
        self.occupied_count() as f64 / self.counts.len() as f64
    }

    /// Cellwise minimum of the two occupancy indicators.
    pub fn intersect(&self, other: &OccupancyGrid) -> Result<Self> {
        if self.window != other.window {
            return Err(LcsError::InvalidWindow(
                "cannot intersect grids over different windows".into(),
            ));
        }
        let counts: Vec<u64> = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| u64::from(*a > 0 && *b > 0))
            .collect();
        Ok(Self {
            window: self.window,
            total_samples: counts.iter().sum(),
            counts,
        })
    }

    /// Size of the largest face-connected set of occupied cells; `θ` and `φ`
    /// neighbours wrap around.
    pub fn largest_component(&self) -> usize {
        let w = &self.window;
        let mut seen = vec![false; self.counts.len()];
        let mut best = 0;
        for start in 0..self.counts.len() {
            if seen[start] || self.counts[start] == 0 {
                continue;
            }
            seen[start] = true;
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                size += 1;
                let c = w.cell_at(i);
                for n in neighbours(w, &c) {
                    let j = w.index(&n);
                    if !seen[j] && self.counts[j] > 0 {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            best = best.max(size);
        }
        best
    }

    pub fn write_json<W: Write>(&self, out: W, meta: &GridMeta) -> io::Result<()> {
        let export = GridExport {
            meta,
            window: &self.window,
            total_samples: self.total_samples,
            occupied_cells: self.occupied_count(),
            occupancy: &self.counts,
        };
        serde_json::to_writer(out, &export).map_err(io::Error::other)
    }

    /// CSV of occupied-cell centers with their counts.
    pub fn write_cells_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta,vx,vy,phi,count")?;
        for c in self.occupied_cells() {
            let [t, x, y, p] = self.window.center(&c);
            writeln!(
                out,
                "{t},{x},{y},{p},{}",
                self.counts[self.window.index(&c)]
            )?;
        }
        Ok(())
    }
}

fn neighbours(w: &Window, c: &Cell) -> Vec<Cell> {
    let wrap = |x: usize, n: usize, up: bool| if up { (x + 1) % n } else { (x + n - 1) % n };
    let mut out = Vec::with_capacity(8);
    for up in [true, false] {
        out.push(Cell {
            theta: wrap(c.theta, w.theta_bins, up),
            ..*c
        });
        out.push(Cell {
            phi: wrap(c.phi, w.phi_bins, up),
            ..*c
        });
    }
    if c.vx + 1 < w.v_bins {
        out.push(Cell { vx: c.vx + 1, ..*c });
    }
    if c.vx > 0 {
        out.push(Cell { vx: c.vx - 1, ..*c });
    }
    if c.vy + 1 < w.v_bins {
        out.push(Cell { vy: c.vy + 1, ..*c });
    }
    if c.vy > 0 {
        out.push(Cell { vy: c.vy - 1, ..*c });
    }
    out
}

/// Run metadata carried in the JSON export header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMeta {
    pub kind: String,
    pub config: ReachConfig,
    pub control_law: String,
}

#[derive(Serialize)]
struct GridExport<'a> {
    #[serde(flatten)]
    meta: &'a GridMeta,
    window: &'a Window,
    total_samples: u64,
    occupied_cells: usize,
    occupancy: &'a [u64],
}

/// Description of the control sampling law, recorded in exports.
pub fn control_law_description(cfg: &ReachConfig) -> String {
    let [d_min, d_max] = cfg.segment_duration_range;
    let values = match cfg.values {
        ValueLaw::Uniform => "values uniform in Omega",
        ValueLaw::BangBang => "values u- or u+ with probability 1/2 each",
    };
    let walk = match cfg.sampler {
        SamplerKind::Walk => String::new(),
        SamplerKind::Branching => format!(
            "; a segment ending outside the viable region is discarded, and after {BRANCH_RETRIES} consecutive \
             discards the walk backs up one segment; total integrated time bounded by the horizon"
        ),
    };
    format!("piecewise constant; durations uniform in [{d_min}, {d_max}]; {values}{walk}; ChaCha8 stream per trajectory")
}

/// Distribution of the control value on each segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueLaw {
    /// Uniform in `Ω`.
    #[default]
    Uniform,
    /// An endpoint of `Ω`. Orbit boundaries are traced by extremal controls,
    /// so this law reaches the rim of a bounded orbit far more often.
    BangBang,
}

impl ValueLaw {
    pub const ALL: [ValueLaw; 2] = [ValueLaw::Uniform, ValueLaw::BangBang];

    pub fn name(self) -> &'static str {
        match self {
            ValueLaw::Uniform => "uniform",
            ValueLaw::BangBang => "bang-bang",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Explores the orbit of one start point along one trajectory's random stream.
pub trait TrajectorySampler: Send + Sync {
    fn name(&self) -> &'static str;

    /// Visits every recorded state, starting with `start` at `τ = 0`.
    /// `viable` marks the states worth continuing from; samplers may ignore it.
    fn trace(
        &self,
        sys: &ControlSystem,
        start: &CoverElement,
        cfg: &ReachConfig,
        viable: &dyn Fn(&CoverElement) -> bool,
        rng: &mut ChaCha8Rng,
        visit: &mut dyn FnMut(&CoverElement),
    );
}

fn draw_segment(sys: &ControlSystem, cfg: &ReachConfig, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (lo, hi) = sys.omega();
    let [d_min, d_max] = cfg.segment_duration_range;
    let d = if d_min < d_max {
        rng.random_range(d_min..=d_max)
    } else {
        d_min
    };
    let u = match cfg.values {
        ValueLaw::Uniform => rng.random_range(lo..=hi),
        ValueLaw::BangBang => {
            if rng.random_bool(0.5) {
                lo
            } else {
                hi
            }
        }
    };
    (d, u)
}

/// Samples `n` evenly spaced states of one segment, skipping those with
/// `used + τ` past the horizon. Returns the segment end, or `None` once the
/// horizon cuts the segment short.
fn run_segment(
    sys: &ControlSystem,
    state: &CoverElement,
    (d, u): (f64, f64),
    used: f64,
    cfg: &ReachConfig,
    visit: &mut dyn FnMut(&CoverElement),
) -> Option<CoverElement> {
    let n = cfg.samples_per_segment;
    let mut end = None;
    for k in 1..=n {
        let dt = d * k as f64 / n as f64;
        if used + dt > cfg.horizon {
            return None;
        }
        let s = segment_exact(sys, u, dt, state).expect("sampled control lies in Omega");
        visit(&s);
        if k == n {
            end = Some(s);
        }
    }
    end
}

/// One random piecewise-constant control followed up to the horizon.
pub struct WalkSampler;

impl TrajectorySampler for WalkSampler {
    fn name(&self) -> &'static str {
        "walk"
    }

    fn trace(
        &self,
        sys: &ControlSystem,
        start: &CoverElement,
        cfg: &ReachConfig,
        _: &dyn Fn(&CoverElement) -> bool,
        rng: &mut ChaCha8Rng,
        visit: &mut dyn FnMut(&CoverElement),
    ) {
        let mut state = *start;
        let mut t0 = 0.0;
        visit(&state);
        while t0 < cfg.horizon {
            let seg = draw_segment(sys, cfg, rng);
            match run_segment(sys, &state, seg, t0, cfg, visit) {
                Some(end) => state = end,
                None => return,
            }
            t0 += seg.0;
        }
    }
}

/// Failed extensions tolerated before the branching walk backs up one segment.
pub const BRANCH_RETRIES: usize = 2;

/// Depth-first walk: a segment ending at a non-viable state is recorded but
/// not continued from, and after [`BRANCH_RETRIES`] consecutive failures the
/// walk backs up one segment. Every visited state is reached from `start` by a
/// piecewise-constant control, so all samples lie in the orbit; the integrated
/// time, summed over discarded segments too, is bounded by the horizon.
///
/// With an unstable drift a plain walk leaves the window within a few time
/// units, long before the phase has had time to wind.
pub struct BranchingSampler;

impl TrajectorySampler for BranchingSampler {
    fn name(&self) -> &'static str {
        "branching"
    }

    fn trace(
        &self,
        sys: &ControlSystem,
        start: &CoverElement,
        cfg: &ReachConfig,
        viable: &dyn Fn(&CoverElement) -> bool,
        rng: &mut ChaCha8Rng,
        visit: &mut dyn FnMut(&CoverElement),
    ) {
        let mut path = vec![*start];
        let mut failures = 0;
        let mut used = 0.0;
        visit(start);
        while used < cfg.horizon {
            let state = *path.last().expect("path keeps the start");
            let seg = draw_segment(sys, cfg, rng);
            let Some(end) = run_segment(sys, &state, seg, used, cfg, visit) else {
                return;
            };
            used += seg.0;
            if viable(&end) {
                path.push(end);
                failures = 0;
            } else {
                failures += 1;
                if failures >= BRANCH_RETRIES && path.len() > 1 {
                    path.pop();
                    failures = 0;
                }
            }
        }
    }
}

/// Registered trajectory samplers, selectable through [`ReachConfig::sampler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Walk,
    Branching,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 2] = [SamplerKind::Walk, SamplerKind::Branching];

    pub fn build(self) -> Box<dyn TrajectorySampler> {
        match self {
            SamplerKind::Walk => Box::new(WalkSampler),
            SamplerKind::Branching => Box::new(BranchingSampler),
        }
    }

    pub fn name(self) -> &'static str {
        self.build().name()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn trace(
    sys: &ControlSystem,
    start: &CoverElement,
    cfg: &ReachConfig,
    index: u64,
    region: Option<&[bool]>,
    mut visit: impl FnMut(&CoverElement),
) {
    let mut rng = trajectory_rng(cfg.seed, index);
    let w = &cfg.window;
    let viable = |s: &CoverElement| match w.cell_of(s) {
        None => false,
        Some(c) => region.is_none_or(|r| r[w.base_index(&c)]),
    };
    cfg.sampler
        .build()
        .trace(sys, start, cfg, &viable, &mut rng, &mut visit);
}

fn oriented(sys: &ControlSystem, direction: Direction) -> ControlSystem {
    match direction {
        Direction::Forward => *sys,
        Direction::Backward => sys.time_reversed(),
    }
}

/// Replays the recorded samples of one trajectory.
pub fn replay_trajectory(
    sys: &ControlSystem,
    start: &GroupElement,
    cfg: &ReachConfig,
    direction: Direction,
    index: u64,
) -> Vec<CoverElement> {
    let sys = oriented(sys, direction);
    let mut out = Vec::new();
    trace(&sys, &start.lift(), cfg, index, None, |s| out.push(*s));
    out
}

/// Occupancy of sampled forward (or backward) orbit points of `start`.
pub fn sample_reach(
    sys: &ControlSystem,
    start: &GroupElement,
    cfg: &ReachConfig,
    direction: Direction,
) -> Result<OccupancyGrid> {
    sample_reach_within(sys, start, cfg, direction, None)
}

fn sample_reach_within(
    sys: &ControlSystem,
    start: &GroupElement,
    cfg: &ReachConfig,
    direction: Direction,
    region: Option<&[bool]>,
) -> Result<OccupancyGrid> {
    cfg.validate()?;
    let sys = oriented(sys, direction);
    let s0 = start.lift();
    let window = cfg.window;
    let grid = (0..cfg.n_trajectories as u64)
        .into_par_iter()
        .fold(
            || OccupancyGrid::empty(window),
            |mut grid, i| {
                trace(&sys, &s0, cfg, i, region, |s| grid.record(s));
                grid
            },
        )
        .reduce(
            || OccupancyGrid::empty(window),
            |a, b| a.merge(&b).expect("grids share a window"),
        );
    Ok(grid)
}

/// Forward ∩ backward occupancy around `start`, the numerical surrogate of the
/// control set containing it.
///
/// With the branching sampler the forward walks only continue from states
/// whose base cell the backward grid occupies: a forward orbit that leaves the
/// backward orbit of `start` cannot come back to the control set.
pub fn estimate_control_set(
    sys: &ControlSystem,
    start: &GroupElement,
    cfg: &ReachConfig,
) -> Result<OccupancyGrid> {
    let backward = sample_reach(sys, start, cfg, Direction::Backward)?;
    let forward = match cfg.sampler {
        SamplerKind::Walk => sample_reach(sys, start, cfg, Direction::Forward)?,
        SamplerKind::Branching => {
            let w = &cfg.window;
            let mut region = vec![false; w.base_cell_count()];
            for c in backward.occupied_cells() {
                region[w.base_index(&c)] = true;
            }
            sample_reach_within(sys, start, cfg, Direction::Forward, Some(&region))?
        }
    };
    forward.intersect(&backward)
}

/// Fraction of occupied phase bins over every base cell with any occupancy.
pub fn fiber_coverage(grid: &OccupancyGrid) -> BTreeMap<BaseCell, f64> {
    let mut hits: BTreeMap<BaseCell, usize> = BTreeMap::new();
    for c in grid.occupied_cells() {
        *hits.entry((c.theta, c.vx, c.vy)).or_default() += 1;
    }
    let bins = grid.window.phi_bins as f64;
    hits.into_iter()
        .map(|(k, n)| (k, n as f64 / bins))
        .collect()
}

/// Sup-norm gap in `(θ, v)` between the full trajectory and the projected
/// `SE(2)` trajectory driven by the same input.
pub fn check_semiconjugacy(
    sys: &ControlSystem,
    start: &CoverElement,
    input: &ControlInput,
) -> Result<f64> {
    const SAMPLES: usize = 8;
    let full = propagate(sys, input, start, SAMPLES)?;
    let projected = crate::dynamics::propagate_se2(sys, input, start.theta, &start.v, SAMPLES)?;
    Ok(full
        .states
        .iter()
        .zip(&projected.states)
        .map(|(a, b)| (a.theta - b.theta).abs().max((a.v - b.v).amax()))
        .fold(0.0, f64::max))
}

/// Drift tolerance used on the singular locus.
pub const SINGULAR_TOL: f64 = 1e-14;

/// For `A = 0`, checks that the drift vanishes on `{θ = 0}` at 100 random points.
pub fn singular_locus_check(sys: &ControlSystem) -> Result<bool> {
    if sys.drift.a_block.det() > DRIFT_ZERO_TOL {
        return Err(LcsError::PreconditionViolated(format!(
            "singular locus check needs A = 0, got p = {}, q = {}",
            sys.drift.p(),
            sys.drift.q()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    Ok((0..100).all(|_| {
        let g = CoverElement {
            theta: 0.0,
            v: Vector2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)),
            phi: rng.random_range(0.0..TAU),
        };
        sys.drift.eval(&g).amax() <= SINGULAR_TOL
    }))
}

/// `true` when the drift is identically zero (`A = 0`, `ξ = 0`, `a = 0`), so
/// every point of `G` is singular.
pub fn drift_is_trivial(sys: &ControlSystem) -> bool {
    let x = &sys.drift;
    x.p() == 0.0 && x.q() == 0.0 && x.xi == Vector2::zeros() && x.a == 0.0
}
