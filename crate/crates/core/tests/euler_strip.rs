use std::f64::consts::PI;

use rlab_core::certify::Status;
use rlab_core::euler2d::{certify_euler_symmetric, evolve_strip, EulerGrid, EvolveOptions, SteadyStateEuler, VorticityField};
use rlab_core::grid::RectGrid;

#[test]
fn perturbed_shear_run_certifies_every_sample() {
    let g = RectGrid::new(1.0, 1.0, 128, 128).unwrap();
    let q = SteadyStateEuler::shear(&g, |y| (1.0 - y).max(0.0)).unwrap();
    let v = g.values(|x, y| (1.0 - y) + 0.05 * (2.0 * PI * x).sin() * (PI * y).sin());
    let w_in = VorticityField::new(EulerGrid::Rect(g.clone()), v).unwrap();
    let tr = evolve_strip(&w_in, 1.0, 2e-3, EvolveOptions { sample_every: 50, cfl_max: 0.8 }).unwrap();
    let a_in = w_in.as_atoms();
    for s in &tr.samples {
        let wt = s.clamped(&tr.grid).as_atoms();
        let c = certify_euler_symmetric(&a_in, &wt, &q).unwrap();
        assert_eq!(c.status, Status::Holds, "t = {}: {}", s.t, c.to_json());
        assert!(s.mass_drift < 1e-5 && s.momentum_drift < 1e-5);
    }
}
