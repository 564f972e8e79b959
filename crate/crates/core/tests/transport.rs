mod common;

use common::{params, random_smooth, rng};
use logspiral::field::{hminus_norm, AngularField};
use logspiral::transport::{
    classify_longtime, run, ClassifyTolerances, EvolutionConfig, LongTimeClass, Method, Outcome,
};
use std::f64::consts::PI;

#[test]
fn intensity_decreases_at_the_dissipation_rate() {
    let mut r = rng(3);
    for _ in 0..3 {
        let h = random_smooth(params(1.0, 1), 256, 6, &mut r);
        let cfg = EvolutionConfig { t_end: 1.0, dt: 0.01, method: Method::SpectralRk4, ..Default::default() };
        let traj = run(&h, &cfg).unwrap();
        for w in traj.times.windows(2).zip(traj.diag.windows(2)) {
            let ((t0, t1), (d0, d1)) = ((w.0[0], w.0[1]), (&w.1[0], &w.1[1]));
            let dt = t1 - t0;
            assert!(d1.intensity < d0.intensity);
            let predicted = -0.5 * dt * (d0.dissipation + d1.dissipation);
            assert!((d1.intensity - d0.intensity - predicted).abs() <= 1e-5 * dt);
        }
    }
}

#[test]
fn negative_beta_increases_intensity() {
    let h = random_smooth(params(-1.0, 1), 128, 4, &mut rng(8));
    let traj = run(&h, &EvolutionConfig { t_end: 0.5, ..Default::default() }).unwrap();
    assert!(traj.diag.windows(2).all(|w| w[1].intensity > w[0].intensity));
}

#[test]
fn schemes_agree_on_smooth_data() {
    let h = random_smooth(params(0.7, 2), 512, 5, &mut rng(13));
    let cfg = EvolutionConfig { t_end: 0.5, dt: 0.005, ..Default::default() };
    let sl = run(&h, &cfg).unwrap();
    let rk = run(&h, &EvolutionConfig { method: Method::SpectralRk4, ..cfg }).unwrap();
    let (a, b) = (sl.final_state(), rk.final_state());
    let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // the slope limiter is first order at extrema
    assert!(diff < 1e-3 * h.sup_norm(), "{diff}");
}

#[test]
fn symmetry_is_preserved() {
    // an m = 2 field evolved on the full circle stays π-periodic
    let h2 = random_smooth(params(1.0, 2), 128, 4, &mut rng(1));
    let full = AngularField::new(params(1.0, 1), [h2.values(), h2.values()].concat()).unwrap();
    let cfg = EvolutionConfig { t_end: 0.3, dt: 0.01, ..Default::default() };
    let a = run(&h2, &cfg).unwrap();
    let b = run(&full, &cfg).unwrap();
    let (a, b) = (a.final_state().values(), b.final_state().values());
    for i in 0..128 {
        assert!((a[i] - b[i]).abs() < 1e-6 && (b[i] - b[i + 128]).abs() < 1e-12);
    }
}

#[test]
fn cosine_data_does_not_settle_by_t_100() {
    // the intensity decays like 1/t, so the run is classified as undecided
    let h = AngularField::from_fn(params(1.0, 1), 256, f64::cos).unwrap();
    let cfg = EvolutionConfig { t_end: 100.0, dt: 0.5, record_every: 10.0, ..Default::default() };
    let traj = run(&h, &cfg).unwrap();
    assert_eq!(traj.outcome, Outcome::Completed);
    let i90 = traj.diag[traj.times.iter().position(|&t| t >= 90.0).unwrap()].intensity;
    let i100 = traj.diag.last().unwrap().intensity;
    assert!((i100 - i90).abs() > 1e-3);
    assert!(i100 > -2.0 * PI && i100 < 0.0);
    assert_eq!(classify_longtime(&traj, &ClassifyTolerances::default()).unwrap(), LongTimeClass::Undecided);
    let last = traj.final_state();
    assert!(hminus_norm(&last.map(|v| v - i100 / (2.0 * PI)).unwrap(), 1.0).unwrap() > 1e-2);
}

#[test]
fn constant_data_is_homogenized_immediately() {
    let h = AngularField::constant(params(2.0, 1), 64, 0.3).unwrap();
    let traj = run(&h, &EvolutionConfig::default()).unwrap();
    assert_eq!(traj.outcome, Outcome::Homogenized);
    let c = classify_longtime(&traj, &ClassifyTolerances::default()).unwrap();
    assert!(matches!(c, LongTimeClass::Converged { i_plus } if (i_plus - 0.6 * PI).abs() < 1e-12));
}
