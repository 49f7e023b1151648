use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SteadyStateVP;
use crate::certify::{sigma_caveats, Certificate, InequalityId, Relation};
use crate::error::{Result, RlabError};
use crate::measure::{l1_distance, rearranged_l1_distance, AtomicFunction};
use crate::sigma::{sigma_rearrange, SigmaField, SigmaSpec};

/// Terms shared by the global control and its squared intermediate form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpTerms {
    /// `‖f − f₀‖₁`.
    pub l1: f64,
    /// `‖f* − f₀*‖₁`.
    pub l1_rearranged: f64,
    pub hamiltonian: f64,
    /// `𝓗(f) − 𝓗(f₀)`.
    pub hamiltonian_gap: f64,
    /// `‖∇φ_f − ∇φ₀‖₂²`.
    pub gradient_gap_sq: f64,
    /// `|φ₀(0)|`.
    pub phi0_abs: f64,
}

pub fn vp_terms(f: &AtomicFunction, ss: &SteadyStateVP) -> Result<VpTerms> {
    if !Arc::ptr_eq(f.carrier().root(), ss.f0.carrier()) {
        return Err(RlabError::NotCoAtomic);
    }
    let masses = ss.model.shell_masses(f)?;
    let field = ss.model.field(&masses);
    let hamiltonian = ss.model.kinetic_energy(f)? - 0.5 * field.gradient_sq;
    let diff: Vec<f64> = masses.iter().zip(&ss.field0.shell_mass).map(|(a, b)| a - b).collect();
    Ok(VpTerms {
        l1: l1_distance(f, &ss.f0)?,
        l1_rearranged: rearranged_l1_distance(f, &ss.f0),
        hamiltonian,
        hamiltonian_gap: hamiltonian - ss.hamiltonian0,
        gradient_gap_sq: ss.model.field(&diff).gradient_sq,
        phi0_abs: ss.phi_at_zero().abs(),
    })
}

fn h3_sides(t: &VpTerms, k: f64) -> (f64, f64) {
    let a = (t.l1 - t.l1_rearranged).max(0.0);
    (a * a, k * (t.hamiltonian_gap + 0.5 * t.gradient_gap_sq + 2.0 * t.phi0_abs * t.l1_rearranged))
}

/// Global control `‖f−f₀‖₁ ≤ ‖f*−f₀*‖₁ + K₀ [𝓗(f)−𝓗(f₀) + 2|φ₀(0)|‖f*−f₀*‖₁ + ‖∇φ_f−∇φ₀‖₂²]^{1/2}`
/// with `K₀ = K^{1/2}`.
pub fn certify_vp_global(f: &AtomicFunction, ss: &SteadyStateVP) -> Result<Certificate> {
    let t = vp_terms(f, ss)?;
    let c = ss.stability_constant()?;
    let k0 = c.used.sqrt();
    let bracket = t.hamiltonian_gap + 2.0 * t.phi0_abs * t.l1_rearranged + t.gradient_gap_sq;
    let rhs = t.l1_rearranged + k0 * bracket.max(0.0).sqrt();
    let (h3_lhs, h3_rhs) = h3_sides(&t, c.used);
    let h3 = Certificate::assess(InequalityId::Thm12H3, Relation::Le, h3_lhs, h3_rhs);
    let mut cert = Certificate::assess(InequalityId::Thm12Global, Relation::Le, t.l1, rhs)
        .with("K", c.used)
        .with("K_computed", c.computed.value)
        .with("K_bound", c.bound)
        .with("K0", k0)
        .with("l1_f_minus_f0", t.l1)
        .with("l1_rearranged", t.l1_rearranged)
        .with("hamiltonian_f", t.hamiltonian)
        .with("hamiltonian_f0", ss.hamiltonian0)
        .with("hamiltonian_gap", t.hamiltonian_gap)
        .with("phi0_abs", t.phi0_abs)
        .with("gradient_gap_sq", t.gradient_gap_sq)
        .with("bracket", bracket)
        .with("h3_lhs", h3_lhs)
        .with("h3_rhs", h3_rhs)
        .with("h3_slack", h3.slack)
        .with("h3_holds", if h3.holds() { 1.0 } else { 0.0 });
    if !c.computed.is_finite() {
        cert = cert.caveat("K(f0*, e0) unavailable; K taken from the a' upper bound");
    }
    if bracket < 0.0 {
        cert = cert.caveat(format!("energy bracket negative ({bracket:e}); its square root taken as 0"));
    }
    Ok(sigma_caveats(cert, &ss.a_e0))
}

/// `(‖f−f₀‖₁ − ‖f*−f₀*‖₁)² ≤ K [𝓗(f)−𝓗(f₀) + ½‖∇φ_f−∇φ₀‖₂² + 2|φ₀(0)|‖f*−f₀*‖₁]`.
pub fn certify_vp_h3(f: &AtomicFunction, ss: &SteadyStateVP) -> Result<Certificate> {
    let t = vp_terms(f, ss)?;
    let c = ss.stability_constant()?;
    let (lhs, rhs) = h3_sides(&t, c.used);
    let cert = Certificate::assess(InequalityId::Thm12H3, Relation::Le, lhs, rhs)
        .with("K", c.used)
        .with("hamiltonian_gap", t.hamiltonian_gap)
        .with("gradient_gap_sq", t.gradient_gap_sq)
        .with("l1_f_minus_f0", t.l1)
        .with("l1_rearranged", t.l1_rearranged)
        .with("phi0_abs", t.phi0_abs);
    Ok(sigma_caveats(cert, &ss.a_e0))
}

/// `𝒥(φ) = ∫ e_φ f₀^{*e_φ} + ½‖∇φ‖₂²`, `e_φ = |v|²/2 + φ + ‖φ‖∞`, for the
/// shell field of `masses`. Returns `(𝒥, ‖φ‖∞, e_φ, f₀^{*e_φ})`.
fn j_functional(ss: &SteadyStateVP, masses: &[f64]) -> Result<(f64, f64, SigmaField, AtomicFunction)> {
    let field = ss.model.field(masses);
    let c = field.phi_at_zero.abs();
    let e: Vec<f64> = ss.model.energy_values(&field).into_iter().map(|x| x + c).collect();
    let sigma = SigmaField::build(SigmaSpec::Empirical { values: e }, ss.f0.carrier())?;
    let r = sigma_rearrange(&ss.f0, &sigma)?;
    let j = sigma.integrate_against(&r)? + 0.5 * field.gradient_sq;
    Ok((j, c, sigma, r))
}

/// `𝓗(f) − 𝓗(f₀) ≥ −c‖f*−f₀*‖₁ + 𝒥(φ_f) − 𝒥(φ₀) − (‖φ_f‖∞ − ‖φ₀‖∞)‖f₀‖₁`.
///
/// The last term accounts for the different additive constants in `e_{φ_f}`
/// and `e_{φ₀}`. `c` is `‖φ_f‖∞` when the rearranged supports stay below
/// `e_φ = 2‖φ_f‖∞`, and the larger energy excess otherwise (finite phase box).
pub fn certify_vp_z2(f: &AtomicFunction, ss: &SteadyStateVP) -> Result<Certificate> {
    let t = vp_terms(f, ss)?;
    let masses = ss.model.shell_masses(f)?;
    let (j_f, c, sigma_f, f0_star) = j_functional(ss, &masses)?;
    let (j_0, c0, _, _) = j_functional(ss, &ss.field0.shell_mass)?;
    let f_star = sigma_rearrange(f, &sigma_f)?;
    let mut e_top = 0.0f64;
    for g in [&f_star, &f0_star] {
        let sv = sigma_f.values_on(g.carrier())?;
        for (v, s) in g.values().iter().zip(&sv) {
            if *v > 0.0 {
                e_top = e_top.max(*s);
            }
        }
    }
    let c_eff = c.max(e_top - c);
    let m0 = ss.f0.integral();
    let rhs = -c_eff * t.l1_rearranged + j_f - j_0 - (c - c0) * m0;
    let mut cert = Certificate::assess(InequalityId::Z2, Relation::Ge, t.hamiltonian_gap, rhs)
        .with("phi_sup", c)
        .with("phi0_sup", c0)
        .with("c_effective", c_eff)
        .with("J_f", j_f)
        .with("J_0", j_0)
        .with("constant_shift", (c - c0) * m0)
        .with("l1_rearranged", t.l1_rearranged);
    if c_eff > c {
        cert = cert.caveat(format!("rearranged supports reach e_φ = {e_top:e} > 2‖φ‖∞; bound uses {c_eff:e}"));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::super::tests::small;
    use super::*;
    use crate::certify::Status;
    use crate::rng::{random_function, FunctionFamily, SeedSequencer};

    #[test]
    fn identity_and_scaling() {
        let ss = small();
        let c = certify_vp_global(&ss.f0, &ss).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs.abs() < 1e-9, "{c:?}");
        assert!(c.holds());
        let f = ss.f0.scaled(1.05).unwrap();
        let c = certify_vp_global(&f, &ss).unwrap();
        assert!(c.holds(), "{}", c.to_json());
        assert!(c.components.values().all(|v| v.is_finite()));
        assert!(certify_vp_h3(&f, &ss).unwrap().holds());
        assert!(certify_vp_z2(&f, &ss).unwrap().holds());
    }

    #[test]
    fn perturbations_hold() {
        let ss = small();
        let seq = SeedSequencer::new(11);
        let carrier = Arc::clone(ss.f0.carrier());
        let scale = ss.f0.max_value();
        for i in 0..12 {
            let mut rng = seq.stream(i);
            let fam = FunctionFamily::AdditivePerturbationOf { base: ss.f0.clone(), amplitude: 0.02 * scale };
            let f = random_function(&mut rng, &carrier, &fam).unwrap();
            let g = certify_vp_global(&f, &ss).unwrap();
            assert_ne!(g.status, Status::Violated, "{}", g.to_json());
            let h = certify_vp_h3(&f, &ss).unwrap();
            assert_ne!(h.status, Status::Violated, "{}", h.to_json());
            let z = certify_vp_z2(&f, &ss).unwrap();
            assert_ne!(z.status, Status::Violated, "{}", z.to_json());
        }
    }
}
