use proptest::prelude::*;
use wetsim::eh::*;

fn models() -> Vec<EhModel> {
    vec![
        EhModel::ideal(0.3).unwrap(),
        EhModel::reference_piecewise(),
        EhModel::piecewise(1.0, 0.0, 1e30).unwrap(),
        EhModel::reference_logistic(),
    ]
}

proptest! {
    #[test]
    fn harvest_is_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, scale in -6i32..3) {
        let (x, y) = (a.min(b) * 10f64.powi(scale), a.max(b) * 10f64.powi(scale));
        for m in models() {
            prop_assert!(m.harvest(x).unwrap() <= m.harvest(y).unwrap(), "{m:?} at {x}, {y}");
        }
    }

    #[test]
    fn wide_piecewise_is_ideal(x in 0.0f64..1e20, eta in 0.0f64..=1.0) {
        let pw = EhModel::piecewise(eta, 0.0, 1e30).unwrap();
        let id = EhModel::ideal(eta).unwrap();
        prop_assert_eq!(pw.harvest(x).unwrap(), id.harvest(x).unwrap());
    }

    #[test]
    fn dbm_round_trip(dbm in -100.0f64..60.0) {
        prop_assert!((linear_to_dbm(dbm_to_linear(dbm)) - dbm).abs() < 1e-10);
    }
}

#[test]
fn piecewise_regions() {
    let m = EhModel::piecewise(0.5, 1.0, 4.0).unwrap();
    assert_eq!(m.harvest(0.999).unwrap(), 0.0);
    assert_eq!(m.harvest(1.0).unwrap(), 0.5);
    assert_eq!(m.harvest(3.0).unwrap(), 1.5);
    assert_eq!(m.harvest(4.0).unwrap(), 2.0);
    assert_eq!(m.harvest(1e9).unwrap(), 2.0);
}

#[test]
fn logistic_limits() {
    let EhModel::Logistic { p1, p2, p3 } = EhModel::reference_logistic() else { unreachable!() };
    let m = EhModel::reference_logistic();
    assert_eq!(m.harvest(0.0).unwrap(), 0.0);
    // mW in, µW internally
    let far = (p2 + 2000.0 / p1) * 1e-3;
    assert!((m.harvest(far).unwrap() * 1e3 - p3).abs() < 1e-6);
}

#[test]
fn invalid_inputs() {
    assert!(EhModel::ideal(1.5).is_err());
    assert!(EhModel::piecewise(0.5, 2.0, 1.0).is_err());
    assert!(EhModel::logistic(0.0, 1.0, 1.0).is_err());
    assert!(EhModel::ideal(0.5).unwrap().harvest(-1.0).is_err());
    assert!(EhModel::ideal(0.5).unwrap().harvest(f64::NAN).is_err());
}

#[test]
fn reference_constants() {
    let EhModel::Piecewise { eta, w1, w2 } = EhModel::reference_piecewise() else { unreachable!() };
    assert_eq!(eta, 0.25);
    assert!((linear_to_dbm(w1) + 22.0).abs() < 1e-12);
    assert!((linear_to_dbm(w2) + 4.8).abs() < 1e-12);
}
