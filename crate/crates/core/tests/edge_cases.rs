use cdo_bounds::bounds::{compile_report, ReportOptions};
use cdo_bounds::cdo::{expected_loss_bracketed, expected_loss_exact, TrancheSpec};
use cdo_bounds::dependence::PortfolioModel;

#[test]
fn single_name_portfolio() {
    let m = PortfolioModel::independent(vec![0.3]).unwrap();
    let r = compile_report(&m, &ReportOptions::default()).unwrap();
    let best = r.best.unwrap();
    assert_eq!(best.value, 0.0);
    for e in &r.entries {
        if let (Some(v), Some(d)) = (e.value, e.exact_dsl) {
            assert!(d <= v + 1e-12, "{}", e.name);
        }
    }
}

#[test]
fn high_probability_marginals() {
    let m = PortfolioModel::independent(vec![0.9, 0.85, 0.92, 0.88, 0.95]).unwrap();
    let r = compile_report(&m, &ReportOptions::default()).unwrap();
    for e in &r.entries {
        if let (true, Some(v), Some(d)) = (e.certified, e.value, e.exact_dsl) {
            assert!(v.is_finite());
            assert!(d <= v + 1e-12, "{}: {d} > {v}", e.name);
        }
    }
    let t = TrancheSpec::new(0.0, 0.99, "deep").unwrap();
    let exact = expected_loss_exact(&m, &t).unwrap();
    let b = expected_loss_bracketed(&m, &t, &r).unwrap();
    assert!(exact >= b.approx - b.half_width - 1e-12 && exact <= b.approx + b.half_width + 1e-12);
}

#[test]
fn latent_single_and_pair() {
    for n in [1usize, 2] {
        let m = PortfolioModel::latent_one_dependent(vec![0.2; n], 0.9).unwrap();
        let pmf = m.exact_loss_pmf(None).unwrap();
        let total: f64 = pmf.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-11);
        let r = compile_report(&m, &ReportOptions::default()).unwrap();
        assert!(r.best.is_some());
    }
}

#[test]
fn tranche_beyond_support_prices_to_zero() {
    let m = PortfolioModel::independent(vec![0.1; 8]).unwrap();
    let r = compile_report(&m, &ReportOptions::default()).unwrap();
    let t = TrancheSpec::new(0.5, 0.6, "outer").unwrap(); // z = 9.6 > 8
    assert_eq!(expected_loss_exact(&m, &t).unwrap(), 0.0);
    let b = expected_loss_bracketed(&m, &t, &r).unwrap();
    assert_eq!(b.approx, 0.0);
    assert!(b.lower() == 0.0);
}
