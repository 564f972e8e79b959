mod common;

use common::{params, rng};
use logspiral::dirac::{integrate, mfold_orbit, Atom, DiracConfig, DiracEvent, DiracOptions};
use logspiral::kernel::Kernel;
use rand::Rng;

#[test]
fn mfold_orbit_agrees_with_integration() {
    for m in 1..=3 {
        for beta in [0.5, 2.0] {
            let p = params(beta, m);
            let cfg = DiracConfig::new(p, vec![Atom::new(0.8, 0.4)]).unwrap();
            let traj = integrate(&cfg, 5.0, &DiracOptions::default()).unwrap();
            let kp0 = Kernel::new(p).boundary().kp0;
            let t_end = if kp0 * 0.8 > 0.0 { 0.9 / (2.0 * kp0 * 0.8) } else { 5.0 };
            for t in [0.3, 1.0, 0.99 * t_end.min(traj.final_time())] {
                let (i, shift) = mfold_orbit(p, 0.8, t).unwrap();
                let y = traj.eval(t).unwrap();
                assert!((y[0] - i).abs() < 1e-8 * i.abs());
                assert!((y[1] - 0.4 - shift).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn intensity_rate_equals_dissipation_quadrature() {
    let mut r = rng(17);
    for _ in 0..10 {
        let p = params(r.gen_range(0.2..3.0), r.gen_range(1..3));
        let atoms = (0..3)
            .map(|j| Atom::new(r.gen_range(-1.0..1.0), (j as f64 + r.gen_range(0.1..0.9)) * p.period() / 3.0))
            .collect();
        let cfg = DiracConfig::new(p, atoms).unwrap();
        let rate = cfg.total_intensity_rate();
        let quad = cfg.dissipation_quadrature(1e-13);
        assert!((rate.direct - rate.identity).abs() < 1e-12 * rate.direct.abs().max(1.0));
        assert!((rate.dissipation_integral - quad).abs() < 1e-10 * quad.max(1e-12));
    }
}

#[test]
fn negative_total_blows_up_positive_does_not() {
    let p = params(1.0, 1);
    let neg = DiracConfig::new(p, vec![Atom::new(0.3, 0.0), Atom::new(-0.9, 2.0), Atom::new(0.2, 4.0)]).unwrap();
    let tr = integrate(&neg, 1e3, &DiracOptions::default()).unwrap();
    assert!(tr.event.is_some_and(|e| e.is_singular()));
    assert!(tr.blowup_time.is_some());
    let pos = DiracConfig::new(p, vec![Atom::new(0.3, 0.0), Atom::new(0.9, 2.0), Atom::new(0.2, 4.0)]).unwrap();
    let tr = integrate(&pos, 20.0, &DiracOptions::default()).unwrap();
    assert!(tr.event.is_none());
    let s: Vec<f64> = (0..tr.times.len()).map(|k| tr.sum_intensity(k)).collect();
    assert!(s.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn collision_is_reported() {
    // positive atoms drift together; a coarse gap tolerance catches it early
    let p = params(1.0, 1);
    let cfg = DiracConfig::new(p, vec![Atom::new(1.0, 0.0), Atom::new(0.5, 0.3)]).unwrap();
    let tr = integrate(&cfg, 100.0, &DiracOptions { gap_tol: 5e-2, ..Default::default() }).unwrap();
    match tr.event {
        Some(DiracEvent::Collision { t, i: 0, j: 1, gap }) => {
            assert!(gap < 5e-2 && t == tr.final_time());
            assert!(tr.event.unwrap().is_singular());
        }
        other => panic!("{other:?}"),
    }
}
