use num_complex::Complex;
use wigner_ldp::freeconv::FreeConvolution;
use wigner_ldp::mde::{solve_mde, MdeKind, MdeProblem};
use wigner_ldp::measure::{quantile_discretize, Measure};
use wigner_ldp::rate::{RateBranch, RateContext};

#[test]
fn two_point_pipeline_in_single_precision() {
    let mu = Measure::<f32>::two_point(1.0).unwrap();
    let fc = FreeConvolution::new(mu.clone()).unwrap();
    assert!((fc.right_edge() - 1.5 * 3f32.sqrt()).abs() < 1e-4);
    let ctx = RateContext::new(fc, 1).unwrap();
    let point = ctx.rate(3.0).unwrap();
    assert_eq!(point.branch, RateBranch::Subcritical);
    assert!((point.theta_x - 0.826_351_8).abs() < 1e-4);

    let wide = RateContext::from_measure(Measure::<f64>::two_point(1.0).unwrap(), 1).unwrap();
    assert!((f64::from(point.value_beta1) - wide.rate(3.0).unwrap().value_beta1).abs() < 1e-4);

    let d = quantile_discretize(&mu, 40, None).unwrap();
    let problem = MdeProblem::new(d, Complex::new(0.5f32, 0.5), MdeKind::Wig, 1e-5).unwrap();
    let solved = solve_mde(&problem).unwrap();
    assert!(solved.residual <= 1e-5);
    assert!(solved.m.iter().all(|m| m.im > 0.0));
}

#[test]
fn semicircle_edge_in_single_precision() {
    let fc = FreeConvolution::new(Measure::<f32>::semicircle(1.0).unwrap()).unwrap();
    assert!((fc.right_edge() - 8f32.sqrt()).abs() < 1e-5);
    let ctx = RateContext::new(fc, 2).unwrap();
    assert!((ctx.x_c() - 3.0).abs() < 1e-4);
}
