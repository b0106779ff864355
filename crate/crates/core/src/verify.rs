//! Named randomized property suites, one per module, selectable at runtime.
//!
//! Every property draws from its own ChaCha stream derived from the run seed,
//! reports the largest error it observed, and passes iff that error is within
//! the property's tolerance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{self, AlgebraElement};
use crate::dynamics::{self, propagate, ControlInput};
use crate::fields;
use crate::group::{self, exp_cover, log_map, CoverElement, GroupLaw};
use crate::larc::{self, ControlSystem};
use crate::linalg;
use crate::sampling;

pub type BracketFn = fn(&AlgebraElement, &AlgebraElement) -> AlgebraElement;

/// Outcome of one property.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub suite: &'static str,
    pub property: &'static str,
    pub trials: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub struct VerifyContext {
    pub trials: usize,
    pub seed: u64,
    /// Bracket used by the algebra-law properties; replaceable to self-test
    /// the harness.
    pub bracket: BracketFn,
}

impl VerifyContext {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            bracket: algebra::bracket,
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

pub trait PropertySuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &VerifyContext) -> Vec<PropertyReport>;
}

/// Collects reports for one suite.
struct Recorder<'a> {
    suite: &'static str,
    ctx: &'a VerifyContext,
    stream: u64,
    reports: Vec<PropertyReport>,
}

impl<'a> Recorder<'a> {
    fn new(suite: &'static str, ctx: &'a VerifyContext) -> Self {
        Self {
            suite,
            ctx,
            stream: 0,
            reports: Vec::new(),
        }
    }

    /// Runs `trial` `trials` times and records the worst error.
    fn check(
        &mut self,
        property: &'static str,
        trials: usize,
        tolerance: f64,
        mut trial: impl FnMut(&mut ChaCha8Rng) -> f64,
    ) {
        self.stream += 1;
        let mut rng = self.ctx.rng(self.stream);
        let max_error = (0..trials).map(|_| trial(&mut rng)).fold(0.0, worst);
        self.reports.push(PropertyReport {
            suite: self.suite,
            property,
            trials,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        });
    }

    /// A deterministic property evaluated once whenever any trials are requested.
    fn check_once(&mut self, property: &'static str, tolerance: f64, error: impl FnOnce() -> f64) {
        let trials = usize::from(self.ctx.trials > 0);
        let max_error = if trials > 0 { error() } else { 0.0 };
        self.reports.push(PropertyReport {
            suite: self.suite,
            property,
            trials,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        });
    }

    fn finish(self) -> Vec<PropertyReport> {
        self.reports
    }
}

/// NaN-propagating max.
fn worst(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

pub struct AlgebraSuite;

impl PropertySuite for AlgebraSuite {
    fn name(&self) -> &'static str {
        "algebra"
    }

    fn run(&self, ctx: &VerifyContext) -> Vec<PropertyReport> {
        let br = ctx.bracket;
        let n = ctx.trials;
        let mut r = Recorder::new(self.name(), ctx);
        r.check_once("structure constants", 0.0, || {
            use AlgebraElement as E;
            let basis = E::basis();
            let mut err = 0.0_f64;
            for (i, x) in basis.iter().enumerate() {
                for (j, y) in basis.iter().enumerate() {
                    let expected = match (i, j) {
                        (0, 1) => E::E3,
                        (1, 0) => -E::E3,
                        (0, 2) => -E::E2,
                        (2, 0) => E::E2,
                        _ => E::ZERO,
                    };
                    err = err.max((br(x, y) - expected).max_abs());
                }
            }
            err
        });
        r.check("antisymmetry", n, 0.0, |rng| {
            let (x, y) = (sampling::element(rng, 2.0), sampling::element(rng, 2.0));
            (br(&x, &y) + br(&y, &x)).max_abs()
        });
        r.check("jacobi", n, 1e-12, |rng| {
            let (x, y, z) = (
                sampling::element(rng, 2.0),
                sampling::element(rng, 2.0),
                sampling::element(rng, 2.0),
            );
            (br(&x, &br(&y, &z)) + br(&y, &br(&z, &x)) + br(&z, &br(&x, &y))).max_abs()
        });
        r.check("center is RE4", n, 0.0, |rng| {
            let x = sampling::element(rng, 2.0);
            br(&AlgebraElement::E4, &x).max_abs()
        });
        r.check("derivations satisfy Leibniz", n, 1e-12, |rng| {
            algebra::leibniz_defect(&sampling::derivation(rng).matrix())
        });
        r.check("automorphisms preserve brackets", n, 1e-12, |rng| {
            let m = sampling::algebra_automorphism(rng).matrix();
            algebra::morphism_defect(&m).max(flag(linalg::matrix_rank(&m) == 4))
        });
        r.check("Der(g) closed under commutator", n, 1e-12, |rng| {
            let (a, b) = (
                sampling::derivation(rng).matrix(),
                sampling::derivation(rng).matrix(),
            );
            algebra::leibniz_defect(&(a * b - b * a))
        });
        r.check_once("derived series [4, 2, 0]", 0.0, || {
            flag(algebra::derived_series() == [4, 2, 0])
        });
        r.check_once("lower central series stabilizes at 2", 0.0, || {
            flag(algebra::lower_central_series().last() == Some(&2))
        });
        r.check_once("char poly of ad(E1) is λ⁴ + λ²", 1e-12, || {
            let c = linalg::characteristic_polynomial(&algebra::ad_matrix(&AlgebraElement::E1));
            let expected = [0.0, 0.0, 1.0, 0.0, 1.0];
            c.iter()
                .zip(expected)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        r.finish()
    }
}

pub struct GroupSuite;

impl PropertySuite for GroupSuite {
    fn name(&self) -> &'static str {
        "group"
    }

    fn run(&self, ctx: &VerifyContext) -> Vec<PropertyReport> {
        let n = ctx.trials;
        let mut r = Recorder::new(self.name(), ctx);
        r.check("associativity (cover)", n, 1e-12, |rng| {
            let [a, b, c] = [0; 3].map(|_| sampling::cover_element(rng, 3.0));
            a.multiply(&b)
                .multiply(&c)
                .distance(&a.multiply(&b.multiply(&c)))
        });
        r.check("associativity (G)", n, 1e-12, |rng| {
            let [a, b, c] = [0; 3].map(|_| sampling::cover_element(rng, 7.0).project());
            a.multiply(&b)
                .multiply(&c)
                .distance(&a.multiply(&b.multiply(&c)))
        });
        r.check("identity and inverse", n, 1e-12, |rng| {
            let g = sampling::cover_element(rng, 3.0);
            let e = CoverElement::identity();
            g.multiply(&g.inverse())
                .distance(&e)
                .max(g.inverse().multiply(&g).distance(&e))
                .max(e.multiply(&g).distance(&g))
        });
        r.check("one-parameter subgroups", n, 1e-10, |rng| {
            let x = sampling::element(rng, 1.0);
            let (t, s) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            exp_cover(&(t * x))
                .multiply(&exp_cover(&(s * x)))
                .distance(&exp_cover(&((t + s) * x)))
        });
        r.check("log inverts exp", n, 1e-10, |rng| {
            let mut x = sampling::element(rng, 3.0);
            x.alpha = rng.random_range(-3.1..3.1);
            x.beta = rng.random_range(-3.1..3.1);
            (log_map(&group::exp_map(&x)) - x).max_abs()
        });
        r.check("projection is a homomorphism", n, 1e-12, |rng| {
            let (a, b) = (
                sampling::cover_element(rng, 7.0),
                sampling::cover_element(rng, 7.0),
            );
            a.multiply(&b)
                .project()
                .distance(&a.project().multiply(&b.project()))
        });
        r.check("automorphisms are homomorphisms", n, 1e-12, |rng| {
            let f = sampling::group_automorphism(rng);
            let (a, b) = (
                sampling::cover_element(rng, 3.0),
                sampling::cover_element(rng, 3.0),
            );
            f.apply(&a.multiply(&b))
                .distance(&f.apply(&a).multiply(&f.apply(&b)))
        });
        r.check("phase translations compose", n, 1e-12, |rng| {
            let g = sampling::cover_element(rng, 3.0).project();
            let (p1, p2) = (rng.random_range(0.0..7.0), rng.random_range(0.0..7.0));
            group::translate_phase(&group::translate_phase(&g, p1), p2)
                .distance(&group::translate_phase(&g, p1 + p2))
        });
        r.finish()
    }
}

pub struct FieldsSuite;

impl PropertySuite for FieldsSuite {
    fn name(&self) -> &'static str {
        "fields"
    }

    fn run(&self, ctx: &VerifyContext) -> Vec<PropertyReport> {
        let n = ctx.trials;
        let mut r = Recorder::new(self.name(), ctx);
        r.check("flow is a one-parameter group", n, 1e-10, |rng| {
            let x = sampling::linear_field(rng);
            let g = sampling::cover_element(rng, 2.0);
            let (t1, t2) = (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            x.flow(t1 + t2, &g).distance(&x.flow(t1, &x.flow(t2, &g)))
        });
        r.check("flow acts by automorphisms", n, 1e-10, |rng| {
            let x = sampling::linear_field(rng);
            let (a, b) = (
                sampling::cover_element(rng, 2.0),
                sampling::cover_element(rng, 2.0),
            );
            let tau = rng.random_range(-1.5..1.5);
            x.flow(tau, &a.multiply(&b))
                .distance(&x.flow(tau, &a).multiply(&x.flow(tau, &b)))
        });
        r.check("flow(exp x) = exp(e^{tD} x)", n, 1e-9, |rng| {
            let x = sampling::linear_field(rng);
            let mut y = sampling::element(rng, 1.5);
            y.alpha = rng.random_range(-3.1..3.1);
            let t = rng.random_range(-1.5..1.5);
            let moved = fields::flow_differential_at_identity(&x, t) * y.to_vector();
            x.flow(t, &exp_cover(&y))
                .distance(&exp_cover(&AlgebraElement::from_vector(&moved)))
        });
        r.check("(dφ_t)_e = e^{tD}", n, 1e-6, |rng| {
            let x = sampling::linear_field(rng);
            let t = rng.random_range(-1.5..1.5);
            let fd = fields::fd_jacobian(
                |s| x.flow(t, &CoverElement::from_vector(s)).to_vector(),
                &nalgebra::Vector4::zeros(),
                1e-5,
            );
            (fd - fields::flow_differential_at_identity(&x, t)).amax()
        });
        r.check("[X, Y](e) = D Y", n, 1e-5, |rng| {
            let x = sampling::linear_field(rng);
            let y = sampling::invariant_field(rng);
            let fd = fields::fd_bracket(&x, &y, &CoverElement::IDENTITY, 1e-5);
            (fd - x.derivation().apply(&y.as_element()).to_vector()).amax()
        });
        r.check("linear field vanishes at identity", n, 0.0, |rng| {
            sampling::linear_field(rng)
                .eval(&CoverElement::IDENTITY)
                .amax()
        });
        r.check("associated derivation is a derivation", n, 1e-12, |rng| {
            algebra::leibniz_defect(&sampling::linear_field(rng).derivation().matrix())
        });
        r.finish()
    }
}

pub struct LarcSuite;

impl PropertySuite for LarcSuite {
    fn name(&self) -> &'static str {
        "larc"
    }

    fn run(&self, ctx: &VerifyContext) -> Vec<PropertyReport> {
        let n = ctx.trials;
        let mut r = Recorder::new(self.name(), ctx);
        r.check("closure rank = projected rank and a ≠ 0", n, 0.0, |rng| {
            let sys = sampling::system(rng, 0.2);
            flag(larc::larc_holds(&sys) == larc::larc_from_projection(&sys))
        });
        r.check("closure is invariant and bracket-closed", n, 0.0, |rng| {
            let sys = sampling::system(rng, 0.2);
            let d = sys.drift.derivation();
            let sub = larc::invariant_subalgebra(&d, &sys.control.as_element());
            flag(larc::is_closed(&d, &sub))
        });
        r.check(
            "category invariant under scaling Y and Omega",
            n,
            0.0,
            |rng| {
                let sys = sampling::system(rng, 0.2);
                let lambda =
                    rng.random_range(0.1..5.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let scaled = ControlSystem::new(sys.drift, sys.control.scaled(lambda), -1.0, 1.0)
                    .and_then(|s| {
                        s.with_control_range(
                            -rng.random_range(0.1..4.0),
                            rng.random_range(0.1..4.0),
                        )
                    })
                    .expect("valid scaled system");
                flag(larc::classify(&sys).category == larc::classify(&scaled).category)
            },
        );
        r.check("det A = 0 forces A = 0", n, 0.0, |rng| {
            let sys = sampling::system(rng, 0.5);
            let a = sys.drift.a_block;
            flag(a.det() >= 1e-24 || (a.p == 0.0 && a.q == 0.0))
        });
        r.finish()
    }
}

pub struct DynamicsSuite;

/// Integrator runs are costlier; the RK4 comparison uses a tenth of the trials.
fn rk4_trials(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (n / 10).max(1)
    }
}

impl PropertySuite for DynamicsSuite {
    fn name(&self) -> &'static str {
        "dynamics"
    }

    fn run(&self, ctx: &VerifyContext) -> Vec<PropertyReport> {
        let n = ctx.trials;
        let mut r = Recorder::new(self.name(), ctx);
        r.check(
            "exact vs RK4 (step 1e-3, t ≤ 5)",
            rk4_trials(n),
            1e-8,
            |rng| {
                let sys = sampling::system(rng, 0.1);
                let input = sampling::control_input(rng, &sys, 5.0, 4);
                let s0 = sampling::cover_element(rng, 1.0);
                dynamics::rk4_discrepancy(&sys, &input, &s0, 1e-3).unwrap_or(f64::INFINITY)
            },
        );
        r.check("cocycle", n, 1e-10, |rng| {
            let sys = sampling::system(rng, 0.1);
            let s0 = sampling::cover_element(rng, 1.0);
            let (t1, t2) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
            let u = rng.random_range(-1.0..1.0);
            let whole =
                propagate(&sys, &ControlInput::constant(u, t1 + t2).unwrap(), &s0, 1).unwrap();
            let split = ControlInput::new(vec![
                dynamics::Segment { duration: t1, u },
                dynamics::Segment { duration: t2, u },
            ])
            .unwrap();
            let parts = propagate(&sys, &split, &s0, 1).unwrap();
            whole.last().unwrap().distance(parts.last().unwrap())
        });
        r.check("zero control keeps the identity fixed", n, 0.0, |rng| {
            let sys = sampling::system(rng, 0.1);
            let t = rng.random_range(0.1..5.0);
            let out = dynamics::segment_exact(&sys, 0.0, t, &CoverElement::IDENTITY).unwrap();
            out.distance(&CoverElement::IDENTITY)
        });
        r.check("zero control follows the drift flow", n, 1e-10, |rng| {
            let sys = sampling::system(rng, 0.1);
            let s0 = sampling::cover_element(rng, 1.5);
            let t = rng.random_range(0.1..3.0);
            let out = dynamics::segment_exact(&sys, 0.0, t, &s0).unwrap();
            out.distance(&sys.drift.flow(t, &s0))
        });
        r.check("(θ, v) independent of initial phase", n, 0.0, |rng| {
            let sys = sampling::system(rng, 0.1);
            let input = sampling::control_input(rng, &sys, 3.0, 3);
            let s0 = sampling::cover_element(rng, 1.0);
            let s1 = CoverElement {
                phi: s0.phi + rng.random_range(-5.0..5.0),
                ..s0
            };
            let (a, b) = (
                propagate(&sys, &input, &s0, 4).unwrap(),
                propagate(&sys, &input, &s1, 4).unwrap(),
            );
            let same = a
                .states
                .iter()
                .zip(&b.states)
                .all(|(x, y)| x.theta == y.theta && x.v == y.v);
            flag(same)
        });
        r.check("projection to SE(2) is a conjugation", n, 1e-12, |rng| {
            let sys = sampling::system(rng, 0.1);
            let input = sampling::control_input(rng, &sys, 3.0, 3);
            let s0 = sampling::cover_element(rng, 1.0);
            crate::reachability::check_semiconjugacy(&sys, &s0, &input).unwrap_or(f64::INFINITY)
        });
        r.check(
            "phase translations commute with the flow",
            n,
            1e-12,
            |rng| {
                let sys = sampling::system(rng, 0.1);
                let input = sampling::control_input(rng, &sys, 3.0, 3);
                phase_equivariance_error(&sys, &input, rng)
            },
        );
        r.finish()
    }
}

/// `f_φ₁(Φ(τ, x, u))` against `Φ(τ, f_φ₁(x), u)`, compared on `G`.
pub fn phase_equivariance_error<R: Rng>(
    sys: &ControlSystem,
    input: &ControlInput,
    rng: &mut R,
) -> f64 {
    let s0 = sampling::cover_element(rng, 1.0).project();
    let phi1 = rng.random_range(0.0..2.0 * PI);
    let moved_start = group::translate_phase(&s0, phi1).lift();
    let a = propagate(sys, input, &s0.lift(), 4).unwrap();
    let b = propagate(sys, input, &moved_start, 4).unwrap();
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| group::translate_phase(&x.project(), phi1).distance(&y.project()))
        .fold(0.0, f64::max)
}

/// All registered suites, in dependency order.
pub fn suites() -> Vec<Box<dyn PropertySuite>> {
    vec![
        Box::new(AlgebraSuite),
        Box::new(GroupSuite),
        Box::new(FieldsSuite),
        Box::new(LarcSuite),
        Box::new(DynamicsSuite),
    ]
}

/// Looks up a suite by name; `"all"` is handled by [`select_suites`].
pub fn suite(name: &str) -> Option<Box<dyn PropertySuite>> {
    suites().into_iter().find(|s| s.name() == name)
}

pub fn select_suites(name: &str) -> Option<Vec<Box<dyn PropertySuite>>> {
    if name == "all" {
        Some(suites())
    } else {
        suite(name).map(|s| vec![s])
    }
}

/// Bracket with the sign of its second term negated, so it symmetrizes
/// instead of antisymmetrizing; used to check that the harness catches a
/// broken bracket. Negating the whole bracket would not do: `−[·,·]` is still a
/// Lie bracket and passes the Jacobi check.
pub fn faulty_bracket(x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let j = linalg::j_matrix();
    AlgebraElement {
        alpha: 0.0,
        eta: j * y.eta * x.alpha + j * x.eta * y.alpha,
        beta: 0.0,
    }
}

/// Named bracket implementations available to the harness.
pub fn bracket_variant(name: &str) -> Option<BracketFn> {
    match name {
        "standard" => Some(algebra::bracket),
        "negated-bracket" => Some(faulty_bracket),
        _ => None,
    }
}

pub fn run(suites: &[Box<dyn PropertySuite>], ctx: &VerifyContext) -> Vec<PropertyReport> {
    suites.iter().flat_map(|s| s.run(ctx)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_on_small_run() {
        let ctx = VerifyContext::new(50, 1);
        let reports = run(&suites(), &ctx);
        let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn faulty_bracket_breaks_jacobi() {
        let ctx = VerifyContext {
            bracket: bracket_variant("negated-bracket").unwrap(),
            ..VerifyContext::new(20, 3)
        };
        let reports = AlgebraSuite.run(&ctx);
        let jacobi = reports.iter().find(|r| r.property == "jacobi").unwrap();
        assert!(!jacobi.passed);
    }

    #[test]
    fn zero_trials_pass_trivially() {
        let reports = run(&suites(), &VerifyContext::new(0, 0));
        assert!(reports.iter().all(|r| r.passed && r.trials == 0));
    }

    #[test]
    fn lookup() {
        assert_eq!(select_suites("all").unwrap().len(), 5);
        assert_eq!(select_suites("larc").unwrap()[0].name(), "larc");
        assert!(select_suites("nope").is_none());
        assert!(bracket_variant("nope").is_none());
    }
}
