mod common;

use common::params;
use logspiral::dirac::{Atom, DiracConfig};
use logspiral::sheet_limit::{convergence_study, mollify, support_length, MollifierShape, MollifierSpec, StudyOptions};
use logspiral::transport::{run, EvolutionConfig};
use std::f64::consts::PI;

#[test]
fn mass_bookkeeping_and_window_tracking() {
    let cfg =
        DiracConfig::new(params(1.0, 1), vec![Atom::new(0.8, 0.5), Atom::new(-0.3, 2.5), Atom::new(0.4, 4.5)]).unwrap();
    let opts = StudyOptions { n: 2048, sample_every: 0.1, ..Default::default() };
    let rep = convergence_study(&cfg, &[0.1, 0.05], 0.3, &opts).unwrap();
    for run in &rep.runs {
        assert_eq!(run.samples.len(), 4);
        for s in &run.samples {
            assert!(s.mass_defect.abs() < 1e-10, "{}", s.mass_defect);
        }
    }
    assert!(rep.monotone(0.2));
}

#[test]
fn resolution_guard_rejects_coarse_grids() {
    let cfg = DiracConfig::new(params(1.0, 1), vec![Atom::new(1.0, 1.0), Atom::new(0.5, 3.5)]).unwrap();
    let opts = StudyOptions { n: 1024, ..Default::default() };
    assert!(convergence_study(&cfg, &[0.1, 0.05], 0.1, &opts).is_err());
    assert!(convergence_study(&cfg, &[0.05, 0.1], 0.1, &StudyOptions::default()).is_err());
}

#[test]
fn mollified_blowup_spreads_and_grows_in_l1() {
    // I₀ < 0 with K'(0) < 0 blows up at T* = 2 tanh(π) for the sheet
    let p = params(1.0, 1);
    let t_star = 2.0 * PI.tanh();
    let cfg = DiracConfig::new(p, vec![Atom::new(-1.0, 1.0)]).unwrap();
    let mut l1 = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let h0 = mollify(&cfg, &MollifierSpec::new(MollifierShape::Patch, eps).unwrap(), 2048).unwrap();
        let tr = run(&h0, &EvolutionConfig { t_end: t_star, ..Default::default() }).unwrap();
        let end = tr.final_state();
        assert!(support_length(end, 1e-3 / eps) > 2.0 * support_length(&h0, 1e-3 / eps));
        l1.push(end.lp_norm(1.0));
    }
    assert!(l1.windows(2).all(|w| w[1] > 1.2 * w[0]), "{l1:?}");
}
