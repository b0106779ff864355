//! Trajectories of `ġ = 𝒳(g) + uY(g)` under piecewise-constant controls.
//!
//! The exact propagator works in complex coordinates: with `c = p + iq` and
//! `ω = uα`, one control segment of length `t` gives
//!
//! ```text
//! θ(t) = θ₀ + ωt
//! φ(t) = φ₀ + aθ₀t + ½aωt² + uβt
//! v(t) = e^{ct}v₀ + iξ·I₀(t) + (uη − iξ)e^{iθ₀}·I₁(t)
//! I₀(t) = ∫₀ᵗ e^{c(t−s)} ds,   I₁(t) = ∫₀ᵗ e^{c(t−s)} e^{iωs} ds
//! ```
//!
//! Both integrals are written as `t·e^{·}·φ₁(·)`, which stays accurate at and
//! near resonance (`iω = c`). A fixed-step RK4 integrator is kept alongside as
//! an independent check.

use std::io::{self, Write};

use nalgebra::{Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex::{phi1, to_complex, to_vector};
use crate::error::{LcsError, Result};
use crate::fields::{InvariantField, LinearField};
use crate::group::{wrap_angle, CoverElement};
use crate::larc::ControlSystem;

/// Header of the trajectory CSV export.
pub const CSV_HEADER: &str = "t,theta,vx,vy,phi,theta_wrapped,phi_wrapped";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub u: f64,
}

/// Piecewise-constant control: consecutive `(duration, u)` pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    segments: Vec<Segment>,
}

impl ControlInput {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if let Some(bad) = segments
            .iter()
            .find(|s| !(s.duration > 0.0 && s.duration.is_finite()))
        {
            return Err(LcsError::InvalidInput(format!(
                "segment duration {} is not a positive finite number",
                bad.duration
            )));
        }
        Ok(Self { segments })
    }

    pub fn constant(u: f64, duration: f64) -> Result<Self> {
        Self::new(vec![Segment { duration, u }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn check_against(&self, sys: &ControlSystem) -> Result<()> {
        self.segments
            .iter()
            .try_for_each(|s| sys.check_control(s.u))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CoverElement>,
}

impl Trajectory {
    fn start(s0: CoverElement) -> Self {
        Self {
            times: vec![0.0],
            states: vec![s0],
        }
    }

    fn push(&mut self, t: f64, s: CoverElement) {
        self.times.push(t);
        self.states.push(s);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&CoverElement> {
        self.states.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t,
                s.theta,
                s.v.x,
                s.v.y,
                s.phi,
                wrap_angle(s.theta),
                wrap_angle(s.phi)
            )?;
        }
        Ok(())
    }

    /// Sup-norm coordinate deviation between two trajectories sampled at the
    /// same times.
    pub fn max_deviation(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

/// `(θ, v)` after time `t` for the projected `SE(2)` system. Does not read `a`
/// or `β`.
pub fn se2_segment(
    drift: &LinearField,
    control: &InvariantField,
    u: f64,
    t: f64,
    theta0: f64,
    v0: &Vector2<f64>,
) -> (f64, Vector2<f64>) {
    let i = Complex64::i();
    let c = drift.eigenvalue();
    let omega = u * control.alpha;
    let xi = to_complex(&drift.xi);
    let eta = to_complex(&control.eta);

    let growth = (c * t).exp();
    let i0 = phi1(c * t) * t;
    let detuning = Complex64::new(0.0, omega) - c;
    let i1 = growth * phi1(detuning * t) * t;
    let rotated = Complex64::from_polar(1.0, theta0);

    let v = growth * to_complex(v0) + i * xi * i0 + (eta * u - i * xi) * rotated * i1;
    (theta0 + omega * t, to_vector(v))
}

fn segment_unchecked(sys: &ControlSystem, u: f64, t: f64, s0: &CoverElement) -> CoverElement {
    if u == 0.0 {
        return sys.drift.flow(t, s0);
    }
    let (theta, v) = se2_segment(&sys.drift, &sys.control, u, t, s0.theta, &s0.v);
    let a = sys.drift.a;
    let omega = u * sys.control.alpha;
    let phi = s0.phi + a * s0.theta * t + 0.5 * a * omega * t * t + u * sys.control.beta * t;
    CoverElement { theta, v, phi }
}

/// Exact state after holding control `u` for time `t ≥ 0`.
pub fn segment_exact(
    sys: &ControlSystem,
    u: f64,
    t: f64,
    s0: &CoverElement,
) -> Result<CoverElement> {
    sys.check_control(u)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(LcsError::InvalidInput(format!(
            "segment time {t} must be non-negative"
        )));
    }
    Ok(segment_unchecked(sys, u, t, s0))
}

/// Chains exact segments, recording `samples_per_segment` uniformly spaced
/// states per segment (segment end included).
pub fn propagate(
    sys: &ControlSystem,
    input: &ControlInput,
    s0: &CoverElement,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    if samples_per_segment == 0 {
        return Err(LcsError::InvalidInput(
            "samples_per_segment must be at least 1".into(),
        ));
    }
    input.check_against(sys)?;
    let mut traj = Trajectory::start(*s0);
    let mut t0 = 0.0;
    let mut state = *s0;
    for seg in input.segments() {
        let n = samples_per_segment;
        for k in 1..n {
            let dt = seg.duration * k as f64 / n as f64;
            traj.push(t0 + dt, segment_unchecked(sys, seg.u, dt, &state));
        }
        state = segment_unchecked(sys, seg.u, seg.duration, &state);
        t0 += seg.duration;
        traj.push(t0, state);
    }
    Ok(traj)
}

/// Projected `SE(2)` trajectory `(θ, v)` for the same input, sampled like
/// [`propagate`]. The phase coordinate of the returned states is zero.
pub fn propagate_se2(
    sys: &ControlSystem,
    input: &ControlInput,
    theta0: f64,
    v0: &Vector2<f64>,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    if samples_per_segment == 0 {
        return Err(LcsError::InvalidInput(
            "samples_per_segment must be at least 1".into(),
        ));
    }
    input.check_against(sys)?;
    let to_state = |(theta, v): (f64, Vector2<f64>)| CoverElement { theta, v, phi: 0.0 };
    let mut traj = Trajectory::start(to_state((theta0, *v0)));
    let (mut theta, mut v) = (theta0, *v0);
    let mut t0 = 0.0;
    for seg in input.segments() {
        let n = samples_per_segment;
        for k in 1..n {
            let dt = seg.duration * k as f64 / n as f64;
            traj.push(
                t0 + dt,
                to_state(se2_segment(&sys.drift, &sys.control, seg.u, dt, theta, &v)),
            );
        }
        (theta, v) = se2_segment(&sys.drift, &sys.control, seg.u, seg.duration, theta, &v);
        t0 += seg.duration;
        traj.push(t0, to_state((theta, v)));
    }
    Ok(traj)
}

/// Exact states at arbitrary non-decreasing `times` within the input's horizon.
pub fn exact_at_times(
    sys: &ControlSystem,
    input: &ControlInput,
    s0: &CoverElement,
    times: &[f64],
) -> Result<Vec<CoverElement>> {
    input.check_against(sys)?;
    let segments = input.segments();
    let mut out = Vec::with_capacity(times.len());
    let mut idx = 0;
    let mut seg_start = 0.0;
    let mut state = *s0;
    for &t in times {
        while idx < segments.len() && t > seg_start + segments[idx].duration {
            state = segment_unchecked(sys, segments[idx].u, segments[idx].duration, &state);
            seg_start += segments[idx].duration;
            idx += 1;
        }
        let out_state = if idx < segments.len() {
            segment_unchecked(sys, segments[idx].u, (t - seg_start).max(0.0), &state)
        } else {
            state
        };
        out.push(out_state);
    }
    Ok(out)
}

fn rhs(sys: &ControlSystem, u: f64, s: &Vector4<f64>) -> Vector4<f64> {
    let g = CoverElement::from_vector(s);
    sys.drift.eval(&g) + sys.control.eval(&g) * u
}

/// Classical fixed-step RK4. Each segment is split into `ceil(duration/step)`
/// equal steps so segment boundaries are hit exactly.
pub fn integrate_rk4(
    sys: &ControlSystem,
    input: &ControlInput,
    step: f64,
    s0: &CoverElement,
) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(LcsError::InvalidInput(format!(
            "step {step} must be positive"
        )));
    }
    input.check_against(sys)?;
    let mut traj = Trajectory::start(*s0);
    let mut x = s0.to_vector();
    let mut t0 = 0.0;
    for seg in input.segments() {
        let n = ((seg.duration / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = seg.duration / n as f64;
        let u = seg.u;
        for k in 1..=n {
            let k1 = rhs(sys, u, &x);
            let k2 = rhs(sys, u, &(x + k1 * (0.5 * h)));
            let k3 = rhs(sys, u, &(x + k2 * (0.5 * h)));
            let k4 = rhs(sys, u, &(x + k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let t = if k == n {
                t0 + seg.duration
            } else {
                t0 + h * k as f64
            };
            traj.push(t, CoverElement::from_vector(&x));
        }
        t0 += seg.duration;
    }
    Ok(traj)
}

/// Sup-norm gap between the RK4 trajectory with `step` and the exact solution
/// at the RK4 sample times.
pub fn rk4_discrepancy(
    sys: &ControlSystem,
    input: &ControlInput,
    s0: &CoverElement,
    step: f64,
) -> Result<f64> {
    let rk = integrate_rk4(sys, input, step, s0)?;
    let exact = exact_at_times(sys, input, s0, &rk.times)?;
    Ok(rk
        .states
        .iter()
        .zip(&exact)
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max))
}

/// A trajectory generator selectable by name.
pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Propagates `input` from `s0`; `resolution` is the sampling interval for
    /// sampled methods and the step size for stepping methods.
    fn run(
        &self,
        sys: &ControlSystem,
        input: &ControlInput,
        s0: &CoverElement,
        resolution: f64,
    ) -> Result<Trajectory>;
}

/// Closed-form segment propagation sampled every `resolution` time units.
pub struct ExactPropagator;

impl Propagator for ExactPropagator {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn run(
        &self,
        sys: &ControlSystem,
        input: &ControlInput,
        s0: &CoverElement,
        resolution: f64,
    ) -> Result<Trajectory> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(LcsError::InvalidInput(format!(
                "resolution {resolution} must be positive"
            )));
        }
        input.check_against(sys)?;
        let mut traj = Trajectory::start(*s0);
        let mut state = *s0;
        let mut t0 = 0.0;
        for seg in input.segments() {
            let n = ((seg.duration / resolution) * (1.0 - 1e-12))
                .ceil()
                .max(1.0) as usize;
            let part = ControlInput::constant(seg.u, seg.duration)?;
            let sub = propagate(sys, &part, &state, n)?;
            for (t, s) in sub.times.iter().zip(&sub.states).skip(1) {
                traj.push(t0 + t, *s);
            }
            state = *sub.last().expect("non-empty trajectory");
            t0 += seg.duration;
        }
        Ok(traj)
    }
}

pub struct Rk4Propagator;

impl Propagator for Rk4Propagator {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn run(
        &self,
        sys: &ControlSystem,
        input: &ControlInput,
        s0: &CoverElement,
        resolution: f64,
    ) -> Result<Trajectory> {
        integrate_rk4(sys, input, resolution, s0)
    }
}

/// All registered propagators.
pub fn propagators() -> Vec<Box<dyn Propagator>> {
    vec![Box::new(ExactPropagator), Box::new(Rk4Propagator)]
}

pub fn propagator(name: &str) -> Option<Box<dyn Propagator>> {
    propagators().into_iter().find(|p| p.name() == name)
}
