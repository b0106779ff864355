//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lie_lcs::algebra::{self, ad_matrix, bracket, derived_series, is_automorphism, is_derivation};
use lie_lcs::dynamics::{rk4_discrepancy, Segment};
use lie_lcs::fields::{derivation_of, fd_bracket, fd_jacobian, flow_differential_at_identity};
use lie_lcs::group::multiply;
use lie_lcs::larc::{classify, larc_analytic, larc_from_projection, larc_holds};
use lie_lcs::linalg::characteristic_polynomial;
use lie_lcs::reachability::{
    check_semiconjugacy, estimate_control_set, fiber_coverage, sample_reach, singular_locus_check,
    SamplerKind, ValueLaw,
};
use lie_lcs::verify::phase_equivariance_error;
use lie_lcs::GroupLaw;
use lie_lcs::{sampling, AlgebraElement, Category, ControlInput, ControlSystem, CoverElement};
use lie_lcs::{Direction, GroupElement, InvariantField, LinearField, ReachConfig};
use nalgebra::{Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(20_241_014);
    r.set_stream(stream);
    r
}

fn spec_system(p: f64, q: f64) -> ControlSystem {
    ControlSystem::new(
        LinearField::new(Vector2::new(1.0, 0.0), p, q, 1.0),
        InvariantField::new(1.0, 1.0, 0.0, 0.0),
        -1.0,
        1.0,
    )
    .unwrap()
}

fn structure_constants() -> Outcome {
    let [e1, e2, e3, e4] = AlgebraElement::basis();
    let mut ok = bracket(&e1, &e2) == e3 && bracket(&e1, &e3) == -e2;
    let basis = [e1, e2, e3, e4];
    for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            let listed = matches!((i, j), (0, 1) | (1, 0) | (0, 2) | (2, 0));
            if !listed {
                ok &= bracket(x, y) == AlgebraElement::ZERO;
            }
        }
    }
    ok &= bracket(&e2, &e1) == -e3 && bracket(&e3, &e1) == e2;
    outcome(ok, "16 basis brackets checked exactly")
}

fn solvability_profile() -> Outcome {
    let series = derived_series();
    let poly = characteristic_polynomial(&ad_matrix(&AlgebraElement::basis()[0]));
    let expected = [0.0, 0.0, 1.0, 0.0, 1.0];
    let err = poly
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // λ² + 1 factor gives the non-real pair ±i.
    let eig = ad_matrix(&AlgebraElement::basis()[0]).complex_eigenvalues();
    let nonreal = eig.iter().filter(|z| z.im.abs() > 0.5).count();
    outcome(
        series == [4, 2, 0] && err <= 1e-12 && nonreal == 2,
        format!(
            "derived series {series:?}, char poly error {err:e}, {nonreal} non-real eigenvalues"
        ),
    )
}

/// Entries that every derivation and automorphism leave zero, plus the
/// orientation entry for automorphisms.
const OFF_PATTERN: [(usize, usize); 7] = [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (3, 1), (3, 2)];

fn perturb(rng: &mut ChaCha8Rng, m: &Matrix4<f64>, extra: &[(usize, usize)]) -> Matrix4<f64> {
    let slots: Vec<(usize, usize)> = OFF_PATTERN.iter().chain(extra).copied().collect();
    let (i, j) = slots[rng.random_range(0..slots.len())];
    let size = rng.random_range(1e-3..1.0);
    let mut out = *m;
    out[(i, j)] += if rng.random_bool(0.5) { size } else { -size };
    out
}

fn der_aut_membership() -> Outcome {
    let mut r = rng(3);
    let n = 1000;
    let mut bad_members = 0;
    let mut missed = 0;
    for _ in 0..n {
        let d = sampling::derivation(&mut r).matrix();
        bad_members += usize::from(!is_derivation(&d, 1e-12));
        missed += usize::from(is_derivation(&perturb(&mut r, &d, &[(0, 0)]), 1e-12));
        let f = sampling::algebra_automorphism(&mut r).matrix();
        bad_members += usize::from(!is_automorphism(&f, 1e-12));
        missed += usize::from(is_automorphism(&perturb(&mut r, &f, &[(0, 0)]), 1e-12));
    }
    outcome(
        bad_members == 0 && missed == 0,
        format!("{n} of each kind: {bad_members} members rejected, {missed} perturbed accepted"),
    )
}

fn flow_laws() -> Outcome {
    let mut r = rng(4);
    let n = 1000;
    let (mut group_err, mut aut_err, mut diff_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let x = sampling::linear_field(&mut r);
        let g = sampling::cover_element(&mut r, 2.0);
        let h = sampling::cover_element(&mut r, 2.0);
        let (s, t) = (r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
        group_err = group_err.max(x.flow(s + t, &g).distance(&x.flow(s, &x.flow(t, &g))));
        let lhs = x.flow(t, &multiply(&g, &h));
        let rhs = multiply(&x.flow(t, &g), &x.flow(t, &h));
        aut_err = aut_err.max(lhs.distance(&rhs));
        let jac = fd_jacobian(
            |v| x.flow(t, &CoverElement::from_vector(v)).to_vector(),
            &CoverElement::IDENTITY.to_vector(),
            1e-5,
        );
        diff_err = diff_err.max((jac - flow_differential_at_identity(&x, t)).amax());
    }
    outcome(
        group_err <= 1e-10 && aut_err <= 1e-10 && diff_err <= 1e-6,
        format!("{n} draws: group law {group_err:e}, automorphism {aut_err:e}, differential {diff_err:e}"),
    )
}

fn derivation_extraction() -> Outcome {
    let mut r = rng(5);
    let n = 500;
    let mut err = 0.0f64;
    for _ in 0..n {
        let x = sampling::linear_field(&mut r);
        let y = sampling::invariant_field(&mut r);
        let fd = fd_bracket(&x, &y, &CoverElement::IDENTITY, 1e-5);
        let exact = algebra::apply_derivation(&derivation_of(&x), &y.as_element()).to_vector();
        err = err.max((fd - exact).amax());
    }
    outcome(err <= 1e-5, format!("{n} draws, max error {err:e}"))
}

fn larc_equivalence() -> Outcome {
    let mut r = rng(6);
    let n = 1000;
    let (mut disagree, mut disagree_corrected, mut central_only) = (0, 0, 0);
    for _ in 0..n {
        let mut sys = sampling::system(&mut r, 0.2);
        if r.random_bool(0.1) {
            sys.control.eta = Vector2::zeros();
        }
        if r.random_bool(0.1) {
            sys.control.alpha = 0.0;
        }
        let holds = larc_holds(&sys);
        if holds != larc_analytic(&sys) {
            disagree += 1;
            if sys.drift.a == 0.0 && sys.control.beta != 0.0 {
                central_only += 1;
            }
        }
        disagree_corrected += usize::from(holds != larc_from_projection(&sys));
    }
    println!(
        "INFO  6 rank test with `a ≠ 0` in place of `a² + β² ≠ 0`: {} of {n} agree",
        n - disagree_corrected
    );
    outcome(
        disagree == 0,
        format!(
            "{} of {n} agree; {central_only} of the {disagree} disagreements have a = 0, β ≠ 0, \
             where the closure has no E4 direction",
            n - disagree
        ),
    )
}

fn resonant_system(r: &mut ChaCha8Rng, offset: f64) -> (ControlSystem, ControlInput) {
    let alpha = r.random_range(0.5..1.5);
    let u = r.random_range(0.3..1.0);
    let x = LinearField::new(
        Vector2::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
        0.0,
        u * alpha + offset,
        r.random_range(-1.0..1.0),
    );
    let y = InvariantField::new(
        alpha,
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
    );
    let sys = ControlSystem::new(x, y, -1.0, 1.0).unwrap();
    (sys, ControlInput::constant(u, 5.0).unwrap())
}

fn integrator_cross_validation() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let (sys, input) = match k % 4 {
            0 => resonant_system(&mut r, [0.0, 1e-9, 1e-6][(k / 4) % 3]),
            _ => {
                let sys = sampling::system(&mut r, 0.1);
                let input = sampling::control_input(&mut r, &sys, 5.0, 4);
                (sys, input)
            }
        };
        let s0 = sampling::cover_element(&mut r, 1.0);
        worst = worst.max(rk4_discrepancy(&sys, &input, &s0, 1e-3).unwrap());
    }
    let sys = spec_system(0.3, 1.0);
    let input = ControlInput::new(vec![
        Segment {
            duration: 2.0,
            u: 0.7,
        },
        Segment {
            duration: 1.5,
            u: -1.0,
        },
        Segment {
            duration: 1.5,
            u: 0.2,
        },
    ])
    .unwrap();
    let s0 = CoverElement::new(0.4, 0.3, -0.2, 0.1);
    let coarse = rk4_discrepancy(&sys, &input, &s0, 0.05).unwrap();
    let fine = rk4_discrepancy(&sys, &input, &s0, 0.025).unwrap();
    let ratio = coarse / fine;
    outcome(
        worst < 1e-8 && (12.0..=20.0).contains(&ratio),
        format!("100 systems (25 resonant), max error {worst:e}; Richardson ratio {ratio:.3}"),
    )
}

fn conjugation_identities() -> Outcome {
    let mut r = rng(8);
    let n = 1000;
    let (mut semi, mut equi) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let sys = sampling::system(&mut r, 0.1);
        let input = sampling::control_input(&mut r, &sys, 3.0, 3);
        let s0 = sampling::cover_element(&mut r, 1.0);
        semi = semi.max(check_semiconjugacy(&sys, &s0, &input).unwrap());
        equi = equi.max(phase_equivariance_error(&sys, &input, &mut r));
    }
    outcome(
        semi < 1e-12 && equi < 1e-12,
        format!("{n} runs: semiconjugacy {semi:e}, phase equivariance {equi:e}"),
    )
}

fn controllable_regime() -> Outcome {
    let cfg = ReachConfig {
        horizon: 30.0,
        n_trajectories: 200_000,
        seed: 42,
        ..ReachConfig::default()
    };
    let grid = sample_reach(
        &spec_system(0.0, 1.0),
        &GroupElement::identity(),
        &cfg,
        Direction::Forward,
    )
    .unwrap();
    let f = grid.occupancy_fraction();
    outcome(f >= 0.99, format!("forward occupancy {f:.6}"))
}

fn fiber_structure() -> Outcome {
    let cfg = ReachConfig {
        horizon: 30.0,
        n_trajectories: 200_000,
        seed: 42,
        sampler: SamplerKind::Branching,
        values: ValueLaw::BangBang,
        ..ReachConfig::default()
    };
    let sys = spec_system(1.0, 1.0);
    let category = classify(&sys).category;
    let grid = estimate_control_set(&sys, &GroupElement::identity(), &cfg).unwrap();
    let component = grid.largest_component();
    let coverage = fiber_coverage(&grid);
    let full = coverage.values().filter(|&&c| c >= 15.0 / 16.0).count();
    let share = full as f64 / coverage.len().max(1) as f64;
    outcome(
        category == Category::UniqueControlSet && component >= 50 && share >= 0.9,
        format!(
            "{} cells, largest component {component}, {full} of {} base cells with full fibers ({share:.4})",
            grid.occupied_count(),
            coverage.len()
        ),
    )
}

fn degenerate_regime() -> Outcome {
    let sys = spec_system(0.0, 0.0);
    let singular = singular_locus_check(&sys).unwrap();
    let category = classify(&sys).category;
    outcome(
        singular && category == Category::EmptyInteriorControlSets,
        format!("singular locus {singular}, category {}", category.as_str()),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let criteria: [Criterion; 11] = [
        (1, "structure constants", s(1), structure_constants),
        (2, "solvability profile", s(1), solvability_profile),
        (3, "Der/Aut membership", s(5), der_aut_membership),
        (4, "flow laws", s(10), flow_laws),
        (5, "derivation extraction", s(5), derivation_extraction),
        (6, "LARC equivalence", s(10), larc_equivalence),
        (
            7,
            "integrator cross-validation",
            s(60),
            integrator_cross_validation,
        ),
        (8, "conjugation identities", s(10), conjugation_identities),
        (9, "controllable regime", s(300), controllable_regime),
        (10, "fiber structure", s(300), fiber_structure),
        (11, "degenerate regime", s(1), degenerate_regime),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let passed = out.passed && took <= budget;
        failed += usize::from(!passed);
        println!(
            "{} {id:>2} {name}: {} ({:.2} s, budget {} s)",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
