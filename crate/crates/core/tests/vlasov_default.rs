use std::sync::Arc;

use rlab_core::certify::Status;
use rlab_core::rng::{bump_values, random_function, FunctionFamily, SeedSequencer};
use rlab_core::vlasov::{
    build_steady_vp, certify_vp_global, certify_vp_h3, certify_vp_z2, interpolation_diag, solve_potential, SteadyStateVP,
};
use rlab_core::{sigma_rearrange, SigmaField, SigmaSpec};

fn transported(ss: &SteadyStateVP, seed: u64, strength: f64) -> rlab_core::AtomicFunction {
    let carrier = Arc::clone(ss.f0.carrier());
    let mut rng = SeedSequencer::new(seed).stream(0);
    let b = bump_values(&mut rng, &carrier);
    let vals: Vec<f64> = ss.a_e0.values().iter().zip(&b).map(|(s, b)| s + strength * b).collect();
    let sig = SigmaField::build(SigmaSpec::Empirical { values: vals }, &carrier).unwrap();
    sigma_rearrange(&ss.f0, &sig).unwrap()
}

#[test]
fn default_polytrope_energy_and_certificates() {
    let ss = build_steady_vp(1.5, 1.0, -1.0).unwrap();

    // virial: 𝓗(f₀) = −T on a dense solve
    let dense = solve_potential(ss.profile, 8192, 1.25, 1e-10).unwrap();
    let oracle = -dense.kinetic_energy();
    assert!((ss.hamiltonian0 - oracle).abs() < 1e-4 * oracle.abs(), "{} vs {oracle}", ss.hamiltonian0);

    let carrier = Arc::clone(ss.f0.carrier());
    let seq = SeedSequencer::new(3);
    for i in 0..4u64 {
        let fam = FunctionFamily::AdditivePerturbationOf { base: ss.f0.clone(), amplitude: 0.02 * (i + 1) as f64 };
        let f = random_function(&mut seq.stream(i), &carrier, &fam).unwrap();
        assert_ne!(certify_vp_global(&f, &ss).unwrap().status, Status::Violated);
        assert_ne!(certify_vp_h3(&f, &ss).unwrap().status, Status::Violated);
    }

    // equimeasurable transport of f₀: the rearranged distance vanishes
    let f = transported(&ss, 5, 0.1);
    let g = certify_vp_global(&f, &ss).unwrap();
    assert_eq!(g.status, Status::Holds, "{}", g.to_json());
    assert!(g.components["l1_rearranged"].abs() < 1e-12 * ss.f0.integral());
    let z = certify_vp_z2(&f, &ss).unwrap();
    assert_ne!(z.status, Status::Violated, "{}", z.to_json());
}

#[test]
fn interpolation_ratio_is_bounded_and_scale_free() {
    let ss = build_steady_vp(1.5, 1.0, -1.0).unwrap();
    let d0 = interpolation_diag(&ss.f0).unwrap();
    assert!(d0.ratio.is_finite() && d0.ratio > 0.0);
    let d1 = interpolation_diag(&ss.f0.scaled(3.0).unwrap()).unwrap();
    assert!((d0.ratio - d1.ratio).abs() < 1e-10 * d0.ratio);
    let d2 = interpolation_diag(&transported(&ss, 9, 0.2)).unwrap();
    assert!(d2.ratio.is_finite() && d2.ratio > 0.0);
}
