use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wigner_ldp::mde::{mde_wig_gap, solve_mde, solve_mde_from, wig_pastur_check, MdeKind};
use wigner_ldp::measure::quantile_discretize;
use wigner_ldp::{MdeProblem, Measure};

type C = Complex<f64>;

fn problem(d: Vec<f64>, z: C, kind: MdeKind) -> MdeProblem {
    MdeProblem::new(d, z, kind, 1e-13).unwrap()
}

/// Every root of the two-entry exact system reachable by Newton from a grid of starts.
fn two_by_two_roots(d: [f64; 2], z: C) -> Vec<[C; 2]> {
    let f = |m: [C; 2]| -> [C; 2] {
        let mean = (m[0] + m[1]) / 2.0;
        [1.0 + (z - d[0] + mean + m[0] / 2.0) * m[0], 1.0 + (z - d[1] + mean + m[1] / 2.0) * m[1]]
    };
    let mut roots: Vec<[C; 2]> = Vec::new();
    let axis = [-2.0, -0.7, 0.0, 0.7, 2.0];
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                for &e in &axis {
                    let mut m = [C::new(a, b), C::new(c, e)];
                    for _ in 0..200 {
                        let mean = (m[0] + m[1]) / 2.0;
                        let j00 = z - d[0] + mean + m[0] / 2.0 + m[0];
                        let j01 = m[0] / 2.0;
                        let j10 = m[1] / 2.0;
                        let j11 = z - d[1] + mean + m[1] / 2.0 + m[1];
                        let det = j00 * j11 - j01 * j10;
                        let r = f(m);
                        m = [m[0] - (j11 * r[0] - j01 * r[1]) / det, m[1] - (j00 * r[1] - j10 * r[0]) / det];
                    }
                    let r = f(m);
                    if r[0].norm() + r[1].norm() < 1e-12
                        && m.iter().all(|v| v.is_finite())
                        && !roots.iter().any(|q| (q[0] - m[0]).norm() + (q[1] - m[1]).norm() < 1e-8)
                    {
                        roots.push(m);
                    }
                }
            }
        }
    }
    roots
}

#[test]
fn two_by_two_solution_is_the_unique_herglotz_root() {
    for (d, z) in [([-1.0, 1.0], C::new(0.3, 0.5)), ([0.0, 2.5], C::new(1.2, 0.05)), ([0.4, 0.4], C::new(-2.0, 1.0))] {
        let roots = two_by_two_roots(d, z);
        let herglotz: Vec<_> = roots.iter().filter(|m| m[0].im > 0.0 && m[1].im > 0.0).collect();
        assert_eq!(herglotz.len(), 1, "roots {roots:?}");
        let solved = solve_mde(&problem(d.to_vec(), z, MdeKind::Mde)).unwrap();
        for (got, want) in solved.m.iter().zip(herglotz[0]) {
            assert!((got - want).norm() < 1e-10);
        }
    }
}

#[test]
fn single_entry_reduces_to_a_quadratic() {
    let z = C::new(0.4, 0.3);
    let d = 0.25;
    for (kind, leading) in [(MdeKind::Wig, 1.0), (MdeKind::Mde, 2.0)] {
        let b = z - d;
        let disc = (b * b - 4.0 * leading).sqrt();
        let roots = [(-b + disc) / (2.0 * leading), (-b - disc) / (2.0 * leading)];
        let want = roots.into_iter().find(|r| r.im > 0.0).unwrap();
        let got = solve_mde(&problem(vec![d], z, kind)).unwrap();
        assert!((got.m[0] - want).norm() < 1e-12);
    }
}

#[test]
fn solution_does_not_depend_on_the_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d: Vec<f64> = (0..40).map(|_| rng.random_range(-1.5..1.5)).collect();
    let p = problem(d, C::new(0.2, 0.2), MdeKind::Mde);
    let reference = solve_mde(&p).unwrap();
    for _ in 0..10 {
        let start: Vec<C> = (0..40).map(|_| C::new(rng.random_range(-3.0..3.0), rng.random_range(0.01..3.0))).collect();
        let other = solve_mde_from(&p, &start).unwrap();
        let worst = other.m.iter().zip(&reference.m).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "worst {worst}");
    }
}

#[test]
fn wigner_trace_matches_semicircle_free_convolution() {
    let d = quantile_discretize(&Measure::semicircle(1.0).unwrap(), 200, None).unwrap();
    let z = C::new(0.3, 0.1);
    let trace = solve_mde(&problem(d, z, MdeKind::Wig)).unwrap().normalized_trace;
    // ρ_sc ⊞ ρ_sc has variance 2.
    let root = (z * z - 8.0).sqrt();
    let g = [(z - root) / 4.0, (z + root) / 4.0].into_iter().find(|g| g.im < 0.0).unwrap();
    assert!((-trace - g).norm() < 5e-3, "{}", (-trace - g).norm());
}

#[test]
fn trace_gap_shrinks_with_dimension() {
    let two_point = Measure::two_point(1.0).unwrap();
    let z = C::new(0.0, 1.0);
    let gaps: Vec<_> =
        [50, 100, 200, 400].into_iter().map(|n| mde_wig_gap(&quantile_discretize(&two_point, n, None).unwrap(), z).unwrap()).collect();
    for gap in &gaps {
        assert!(gap.gap <= gap.budget);
    }
    for w in gaps.windows(2) {
        assert!(w[1].gap < w[0].gap);
    }
}

#[test]
fn rejects_real_spectral_parameter() {
    assert!(MdeProblem::new(vec![0.0], C::new(1.0, 0.0), MdeKind::Wig, 1e-13).is_err());
    let p = problem(vec![0.0, 1.0], C::new(0.0, 1.0), MdeKind::Wig);
    assert!(solve_mde_from(&p, &[C::new(0.0, 1.0), C::new(0.0, -1.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn wigner_trace_matches_pastur(d in prop::collection::vec(-2.0..2.0f64, 1..60), re in -3.0..3.0f64, im in 0.05..2.0f64) {
        prop_assert!(wig_pastur_check(&d, C::new(re, im)).unwrap() < 1e-10);
    }

    #[test]
    fn solutions_lie_in_the_upper_half_plane(d in prop::collection::vec(-2.0..2.0f64, 1..60), re in -3.0..3.0f64, im in 0.02..2.0f64) {
        for kind in [MdeKind::Mde, MdeKind::Wig] {
            let solved = solve_mde(&problem(d.clone(), C::new(re, im), kind)).unwrap();
            prop_assert!(solved.m.iter().all(|m| m.im > 0.0 && m.norm() <= 1.0 / im + 1e-12));
            prop_assert!(solved.residual <= 1e-13);
        }
    }
}
