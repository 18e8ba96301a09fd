use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_complex::Complex;
use proptest::prelude::*;
use wigner_ldp::measure::{dudley_distance, dudley_distance_default, levy_distance, quantile_discretize};
use wigner_ldp::Measure;

fn atomic() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64), 1..7).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        atoms.into_iter().map(|(l, w)| (l, w / total)).collect()
    })
}

fn measure(atoms: &[(f64, f64)]) -> Measure {
    Measure::from_atoms(atoms).unwrap()
}

/// Bounded-Lipschitz distance of two atomic measures as a linear program over
/// the values of the test function at the atoms.
fn dudley_lp(mu: &[(f64, f64)], nu: &[(f64, f64)]) -> f64 {
    let mut points: Vec<(f64, f64)> = mu.iter().copied().chain(nu.iter().map(|&(l, w)| (l, -w))).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let sup = problem.add_var(0.0, (0.0, 1.0));
    let lip = problem.add_var(0.0, (0.0, 1.0));
    let values: Vec<_> = points.iter().map(|p| problem.add_var(p.1, (-1.0, 1.0))).collect();
    problem.add_constraint([(sup, 1.0), (lip, 1.0)], ComparisonOp::Le, 1.0);
    for &v in &values {
        problem.add_constraint([(v, 1.0), (sup, -1.0)], ComparisonOp::Le, 0.0);
        problem.add_constraint([(v, -1.0), (sup, -1.0)], ComparisonOp::Le, 0.0);
    }
    for k in 1..points.len() {
        let gap = points[k].0 - points[k - 1].0;
        problem.add_constraint([(values[k], 1.0), (values[k - 1], -1.0), (lip, -gap)], ComparisonOp::Le, 0.0);
        problem.add_constraint([(values[k], -1.0), (values[k - 1], 1.0), (lip, -gap)], ComparisonOp::Le, 0.0);
    }
    problem.solve().unwrap().into_solution().unwrap().objective()
}

type Atoms = &'static [(f64, f64)];

#[test]
fn dudley_matches_linear_program() {
    let cases: [(Atoms, Atoms); 4] = [
        (&[(0.0, 1.0)], &[(0.3, 1.0)]),
        (&[(0.0, 1.0)], &[(5.0, 1.0)]),
        (&[(-1.0, 0.5), (1.0, 0.5)], &[(-0.5, 0.25), (0.2, 0.25), (1.5, 0.5)]),
        (&[(-2.0, 0.1), (0.0, 0.6), (0.7, 0.3)], &[(-1.0, 0.4), (0.4, 0.4), (2.2, 0.2)]),
    ];
    for (a, b) in cases {
        let want = dudley_lp(a, b);
        let got = dudley_distance(&measure(a), &measure(b), 1e-3).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn levy_distance_of_shifted_point_masses() {
    let d = levy_distance(&Measure::point_mass(0.0), &Measure::point_mass(0.25));
    assert!((d - 0.25).abs() < 1e-9);
    let d = levy_distance(&Measure::point_mass(0.0), &Measure::point_mass(3.0));
    assert!((d - 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cdf_is_a_distribution_function(atoms in atomic(), xs in prop::collection::vec(-4.0..4.0f64, 2..10)) {
        let mu = measure(&atoms);
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let values: Vec<f64> = xs.iter().map(|&x| mu.cdf(x)).collect();
        for w in values.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-15);
        }
        prop_assert!(values.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        prop_assert!((mu.cdf(mu.right_edge()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stieltjes_bounds_and_inverse(atoms in atomic(), offset in 0.01..5.0f64) {
        let mu = measure(&atoms);
        let (l, r) = (mu.left_edge(), mu.right_edge());
        let x = r + offset;
        let g = mu.stieltjes_real(x).unwrap();
        prop_assert!(g >= 1.0 / (x - l) - 1e-14 && g <= 1.0 / (x - r) + 1e-14);
        let back = mu.inverse_stieltjes(g).unwrap();
        prop_assert!((back - x).abs() < 1e-9 * (1.0 + x.abs()));
        let reflected = mu.reflect();
        prop_assert!((reflected.stieltjes_real(-x).unwrap() + g).abs() < 1e-13);
        let lp = mu.log_potential(x).unwrap();
        prop_assert!(lp >= (x - r).ln() - 1e-12 && lp <= (x - l).ln() + 1e-12);
    }

    #[test]
    fn stieltjes_maps_upper_to_lower_half_plane(atoms in atomic(), re in -4.0..4.0f64, im in 1e-3..3.0f64) {
        let mu = measure(&atoms);
        let g = mu.stieltjes_complex(Complex::new(re, im));
        prop_assert!(g.im < 0.0);
        prop_assert!(g.norm() <= 1.0 / im + 1e-12);
    }

    #[test]
    fn quantiles_are_sorted_and_reach_the_edge(atoms in atomic(), n in 1usize..60) {
        let mu = measure(&atoms);
        let q = quantile_discretize(&mu, n, None).unwrap();
        prop_assert_eq!(q.len(), n);
        for w in q.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!((q[n - 1] - mu.right_edge()).abs() < 1e-12);
    }

    #[test]
    fn dudley_is_a_metric(a in atomic(), b in atomic(), c in atomic()) {
        let (a, b, c) = (measure(&a), measure(&b), measure(&c));
        let ab = dudley_distance_default(&a, &b).unwrap();
        let ba = dudley_distance_default(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(dudley_distance_default(&a, &a).unwrap() < 1e-12);
        let step = 1e-3;
        let ab = dudley_distance(&a, &b, step).unwrap();
        let bc = dudley_distance(&b, &c, step).unwrap();
        let ac = dudley_distance(&a, &c, step).unwrap();
        prop_assert!(ac <= ab + bc + 1e-4);
        prop_assert!((0.0..=2.0).contains(&ab));
    }
}
