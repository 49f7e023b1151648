use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{kinetic_energy, EulerGrid, SteadyKind, SteadyStateEuler, VorticityField};
use crate::certify::{sigma_caveats, sigma_energy_gap, thm1_terms, Certificate, InequalityId, Relation};
use crate::convexity::{b_sigma_curve, ConvexCurve, ConvexityReport};
use crate::error::{Result, RlabError};
use crate::measure::{
    integrate_profiles, l1_distance, mu_of, positive_difference, rearranged_l1_distance, support_end, AtomicFunction,
};
use crate::numeric::exact_sum;
use crate::sigma::{SigmaField, SigmaSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psi0Options {
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Psi0Options {
    fn default() -> Self {
        Self { relaxation: 0.5, tol: 1e-8, max_iter: 2000 }
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Damped Picard iteration `ψ ← (1−θ)ψ + θ G F(ψ)` from `ψ = 0` for `−Δψ₀ = F(ψ₀)`.
pub fn build_psi0<F: Fn(f64) -> f64>(f: F, grid: EulerGrid, opts: Psi0Options) -> Result<SteadyStateEuler> {
    let f0 = f(0.0);
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(RlabError::InvalidProfile(format!("F(0) = {f0}; the steady state needs F(0) > 0")));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(RlabError::OutOfRange(format!("relaxation {} outside (0, 1]", opts.relaxation)));
    }
    let solver = grid.solver();
    let eval = |psi: &[f64]| -> Result<Vec<f64>> {
        psi.iter()
            .map(|&p| {
                let v = f(p);
                if v.is_finite() && v >= 0.0 {
                    Ok(v)
                } else {
                    Err(RlabError::InvalidProfile(format!("F({p}) = {v} is not a nonnegative number")))
                }
            })
            .collect()
    };
    let theta = opts.relaxation;
    let mut psi = vec![0.0; grid.len()];
    let mut history = Vec::new();
    loop {
        let target = eval(&psi)?;
        let residual = sup_diff(&solver.apply(&psi), &target);
        history.push(residual);
        if residual < opts.tol {
            break;
        }
        if history.len() > opts.max_iter {
            let tail: Vec<String> = history.iter().rev().take(5).rev().map(|r| format!("{r:.3e}")).collect();
            return Err(RlabError::NoConvergence(format!(
                "build_psi0: residual {residual:.3e} after {} iterations (last: {})",
                opts.max_iter,
                tail.join(", ")
            )));
        }
        let next = solver.solve(&target);
        for (p, n) in psi.iter_mut().zip(next) {
            *p = (1.0 - theta) * *p + theta * n;
        }
    }
    let omega0 = eval(&psi)?;
    // ψ₀ = G ω₀ exactly, so the energy identity holds to roundoff
    let psi0 = solver.solve(&omega0);
    let mut order: Vec<usize> = (0..psi0.len()).collect();
    order.sort_by(|&a, &b| psi0[a].total_cmp(&psi0[b]));
    if order.windows(2).any(|w| psi0[w[1]] > psi0[w[0]] && omega0[w[1]] > omega0[w[0]]) {
        return Err(RlabError::InvalidProfile("F must be nonincreasing: ω₀ increases with ψ₀".into()));
    }
    if let Some(i) = psi0.iter().position(|&p| p < 0.0) {
        return Err(RlabError::InvalidProfile(format!("ψ₀ negative at cell {i}: {}", psi0[i])));
    }
    let field = VorticityField::new(grid, omega0)?;
    Ok(SteadyStateEuler { kind: SteadyKind::StreamMonotone { psi0, residual_history: history }, field })
}

fn stream_sigma(ss: &SteadyStateEuler) -> Result<(SigmaField, &[f64])> {
    let psi0 = ss.psi0().ok_or_else(|| RlabError::Unsupported("needs a stream-monotone steady state".into()))?;
    let carrier = ss.field.grid().carrier();
    let atoms = AtomicFunction::new(Arc::clone(carrier), psi0.to_vec())?;
    Ok((SigmaField::build(SigmaSpec::StreamFunction { psi0: atoms }, carrier)?, psi0))
}

/// `Ψ₀(μ) = ∫₀^μ ψ₀^♯(meas(Ω) − s) ds` and its convexity report.
#[derive(Clone, Debug)]
pub struct Psi0Curve {
    pub curve: ConvexCurve,
    pub report: ConvexityReport,
}

pub fn psi0_curve(ss: &SteadyStateEuler) -> Result<Psi0Curve> {
    let (sigma, _) = stream_sigma(ss)?;
    let curve = b_sigma_curve(&sigma)?;
    let report = curve.convexity();
    Ok(Psi0Curve { curve, report })
}

/// Energy-Casimir stability estimate for `ω₀ = F(ψ₀)`, certified with the
/// gradient coefficient `½`; the coefficient-1 variant is reported in the components.
pub fn certify_euler_domain(omega: &AtomicFunction, ss: &SteadyStateEuler) -> Result<Certificate> {
    let grid = ss.field.grid();
    let carrier = grid.carrier();
    if !Arc::ptr_eq(omega.carrier(), carrier) {
        return Err(RlabError::NotCoAtomic);
    }
    let (sigma, psi0) = stream_sigma(ss)?;
    let solver = grid.solver();
    let w = carrier.weights();
    let omega0 = ss.field.as_atoms();
    let (h, psi) = kinetic_energy(solver.as_ref(), w, omega.values());
    let h0 = exact_sum(psi0.iter().zip(w).zip(omega0.values()).map(|((p, w), v)| 0.5 * p * w * v));
    let dpsi: Vec<f64> = psi.iter().zip(psi0).map(|(a, b)| a - b).collect();
    let grad = solver.dirichlet_energy(&dpsi);
    let t = thm1_terms(omega, &omega0, &sigma)?;
    let psi_sup = sigma.e_max();
    let l1_rearr = rearranged_l1_distance(omega, &omega0);
    let dh = h - h0;
    let lhs = dh + psi_sup * l1_rearr;
    let rhs = 0.5 * grad + t.convexity_term;
    let rhs_one = grad + t.convexity_term;
    let identity = dh - t.sigma_energy - 0.5 * grad;
    let scale = dh.abs().max(t.sigma_energy.abs()).max(grad).max(f64::MIN_POSITIVE);
    let curve = b_sigma_curve(&sigma)?.convexity();
    let one = Certificate::assess(InequalityId::Thm14Domain, Relation::Ge, lhs, rhs_one);
    let mut cert = Certificate::assess(InequalityId::Thm14Domain, Relation::Ge, lhs, rhs)
        .with("c_grad", 0.5)
        .with("energy_gap", dh)
        .with("psi0_sup", psi_sup)
        .with("l1_rearranged", l1_rearr)
        .with("grad_norm_sq", grad)
        .with("psi0_term", t.convexity_term)
        .with("sigma_energy", t.sigma_energy)
        .with("energy_identity_residual", identity)
        .with("energy_identity_relative", identity.abs() / scale)
        .with("q_star_defect", t.l1_f_qstar - l1_distance(omega, &omega0)?)
        .with("rhs_c_grad_one", rhs_one)
        .with("slack_c_grad_one", one.slack)
        .with("holds_c_grad_one", if one.holds() { 1.0 } else { 0.0 })
        .with("psi0_min_slope_increment", curve.min_slope_increment);
    if !curve.strictly_convex {
        cert = cert.caveat("Ψ₀ is not strictly convex on the carrier; the estimate is non-strict");
    }
    Ok(sigma_caveats(cert, &sigma))
}

struct SymmetricTerms {
    sigma: SigmaField,
    constant: f64,
    coef: f64,
    /// `4‖q‖∞` as displayed for the rectangle; `None` on the disc.
    literal_constant: Option<f64>,
    energy: f64,
    lhs: f64,
    q_sup: f64,
    q_defect: f64,
}

fn symmetric_terms(omega_in: &AtomicFunction, omega_t: &AtomicFunction, q: &SteadyStateEuler) -> Result<SymmetricTerms> {
    let qa = q.field.as_atoms();
    let carrier = q.field.grid().carrier();
    if !Arc::ptr_eq(omega_in.carrier(), carrier) || !Arc::ptr_eq(omega_t.carrier(), carrier) {
        return Err(RlabError::NotCoAtomic);
    }
    let q_sup = qa.max_value();
    let (sigma, constant, coef, literal) = match (&q.kind, q.field.grid()) {
        (SteadyKind::Radial, EulerGrid::Disc(_)) => {
            (SigmaField::build(SigmaSpec::RadiusSquared, carrier)?, 4.0 * PI * q_sup, 2.0 / PI, None)
        }
        (SteadyKind::Shear, EulerGrid::Rect(g)) => (
            SigmaField::build(SigmaSpec::CoordX2, carrier)?,
            4.0 * g.l1 * q_sup,
            2.0 / g.l1,
            Some(4.0 * q_sup),
        ),
        _ => {
            return Err(RlabError::Unsupported(
                "symmetric certificate needs a radial state on a disc or a shear state on a strip".into(),
            ))
        }
    };
    let q_star = crate::sigma::sigma_rearrange(&qa, &sigma)?;
    let q_defect = l1_distance(&q_star, &qa).unwrap_or(f64::NAN);
    let energy = sigma_energy_gap(&sigma, omega_in, &qa)?;
    let a = l1_distance(omega_t, &qa)? + qa.integral() - omega_in.integral();
    Ok(SymmetricTerms { sigma, constant, coef, literal_constant: literal, energy, lhs: a * a, q_sup, q_defect })
}

fn finish(mut cert: Certificate, t: &SymmetricTerms, bracket: f64) -> Certificate {
    cert = cert
        .with("constant", t.constant)
        .with("q_sup", t.q_sup)
        .with("sigma_energy", t.energy)
        .with("bracket", bracket)
        .with("q_rearrangement_defect", t.q_defect);
    if let Some(lit) = t.literal_constant {
        let alt = Certificate::assess(cert.inequality_id, Relation::Le, cert.lhs, lit * bracket);
        cert = cert
            .with("constant_literal", lit)
            .with("rhs_literal", alt.rhs)
            .with("holds_literal", if alt.holds() { 1.0 } else { 0.0 });
    }
    sigma_caveats(cert, &t.sigma)
}

/// Stability of radial (disc) or shear (strip) steady states, with the
/// `μ_q·β` integral evaluated exactly.
pub fn certify_euler_symmetric(
    omega_in: &AtomicFunction,
    omega_t: &AtomicFunction,
    q: &SteadyStateEuler,
) -> Result<Certificate> {
    let t = symmetric_terms(omega_in, omega_t, q)?;
    let qa = q.field.as_atoms();
    let mu_q = mu_of(&qa);
    let beta = positive_difference(&mu_q, &mu_of(omega_in));
    let upper = support_end(&[&mu_q, &beta]);
    let mixed = integrate_profiles(&[&mu_q, &beta], upper, |v| v[0] * v[1]);
    let bracket = t.energy + t.coef * mixed;
    let id = if t.literal_constant.is_some() { InequalityId::Thm13Rectangular } else { InequalityId::Thm13Radial };
    let cert = Certificate::assess(id, Relation::Le, t.lhs, t.constant * bracket).with("mu_q_beta_integral", mixed);
    Ok(finish(cert, &t, bracket))
}

/// Variant with `∫μ_q β` replaced by `meas(Supp q)·‖ω_in* − q*‖₁`.
pub fn certify_euler_symmetric_compact(
    omega_in: &AtomicFunction,
    omega_t: &AtomicFunction,
    q: &SteadyStateEuler,
) -> Result<Certificate> {
    let t = symmetric_terms(omega_in, omega_t, q)?;
    let qa = q.field.as_atoms();
    let supp = exact_sum(qa.values().iter().zip(qa.weights()).map(|(v, w)| if *v > 0.0 { *w } else { 0.0 }));
    let dist = rearranged_l1_distance(omega_in, &qa);
    let bracket = t.energy + t.coef * supp * dist;
    let id = if t.literal_constant.is_some() {
        InequalityId::Thm13RectangularCompact
    } else {
        InequalityId::Thm13RadialCompact
    };
    let cert = Certificate::assess(id, Relation::Le, t.lhs, t.constant * bracket)
        .with("support_measure", supp)
        .with("l1_rearranged", dist);
    Ok(finish(cert, &t, bracket))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::Status;
    use crate::grid::{DiscGrid, RectGrid};
    use crate::rng::{random_function, FunctionFamily, SeedSequencer};

    /// `I₀` by its power series.
    fn bessel_i0(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= (x / 2.0) * (x / 2.0) / (k * k) as f64;
            sum += term;
        }
        sum
    }

    fn disc_state(nr: usize, nt: usize) -> SteadyStateEuler {
        let g = DiscGrid::new(1.0, nr, nt).unwrap();
        build_psi0(|p| (1.0 - p).max(0.0), EulerGrid::Disc(g), Psi0Options::default()).unwrap()
    }

    #[test]
    fn constant_f_gives_the_parabola() {
        let g = DiscGrid::new(1.0, 16, 8).unwrap();
        let ss = build_psi0(|_| 3.0, EulerGrid::Disc(g.clone()), Psi0Options::default()).unwrap();
        let exact = g.radial_values(|r| 3.0 * (1.0 - r * r) / 4.0);
        assert!(sup_diff(ss.psi0().unwrap(), &exact) < 1e-12);
        assert!(ss.field.values().iter().all(|&v| v == 3.0));
        assert!(build_psi0(|p| p, EulerGrid::Disc(g), Psi0Options::default()).is_err());
    }

    #[test]
    fn fixed_point_matches_bessel_solution() {
        let ss = disc_state(200, 4);
        let SteadyKind::StreamMonotone { residual_history, .. } = &ss.kind else { panic!() };
        assert!(*residual_history.last().unwrap() < 1e-8);
        let EulerGrid::Disc(g) = ss.field.grid() else { panic!() };
        // ψ = 1 − I₀(r)/I₀(1) solves −Δψ = 1 − ψ with ψ(1) = 0
        let exact = g.radial_values(|r| 1.0 - bessel_i0(r) / bessel_i0(1.0));
        assert!(sup_diff(ss.psi0().unwrap(), &exact) < 1e-4);
        let c = psi0_curve(&ss).unwrap();
        assert!(c.report.strictly_convex, "{:?}", c.report);
    }

    #[test]
    fn domain_certificate_on_identity_worst_case_and_shuffles() {
        let ss = disc_state(24, 16);
        let w0 = ss.field.as_atoms();
        let c = certify_euler_domain(&w0, &ss).unwrap();
        assert!(c.lhs.abs() < 1e-12 && c.rhs.abs() < 1e-12, "{}", c.to_json());
        // ω₀ re-sorted to increase with ψ₀
        let psi0 = ss.psi0().unwrap();
        let mut slots: Vec<usize> = (0..psi0.len()).collect();
        slots.sort_by(|&a, &b| psi0[a].total_cmp(&psi0[b]).then(a.cmp(&b)));
        let mut vals = w0.values().to_vec();
        vals.sort_by(|a, b| a.total_cmp(b));
        let mut worst = vec![0.0; vals.len()];
        for (s, v) in slots.iter().zip(vals) {
            worst[*s] = v;
        }
        let worst = w0.with_values(worst).unwrap();
        let c = certify_euler_domain(&worst, &ss).unwrap();
        assert_eq!(c.status, Status::Holds, "{}", c.to_json());
        assert!(c.components["psi0_term"] > 0.0);
        assert!(c.components["energy_identity_relative"] < 1e-6);
        let seq = SeedSequencer::new(11);
        for i in 0..10 {
            let mut rng = seq.stream(i);
            let fam = FunctionFamily::EquimeasurableShuffleOf(w0.clone());
            let om = random_function(&mut rng, w0.carrier(), &fam).unwrap();
            let c = certify_euler_domain(&om, &ss).unwrap();
            assert_eq!(c.status, Status::Holds, "{}", c.to_json());
            assert!(c.components["energy_identity_relative"] < 1e-6);
        }
    }

    #[test]
    fn radial_certificate_uses_four_pi() {
        let g = DiscGrid::new(1.0, 32, 8).unwrap();
        let q = SteadyStateEuler::radial(&g, |r| (1.0 - r * r).max(0.0)).unwrap();
        let qa = q.field.as_atoms();
        let c = certify_euler_symmetric(&qa, &qa, &q).unwrap();
        assert_eq!((c.lhs, c.rhs, c.status), (0.0, 0.0, Status::Holds));
        // ‖q‖∞ is the innermost ring value 1 − r₀², close to 1
        let qs = c.components["q_sup"];
        assert!((qs - 1.0).abs() < 1.0 / 32.0);
        assert!((c.components["constant"] - 4.0 * PI * qs).abs() < 1e-14);
        let bumped = qa.with_values(g.radial_values(|r| (1.0 - r * r).max(0.0) + 0.3 * (-20.0 * (r - 0.6).powi(2)).exp())).unwrap();
        let c = certify_euler_symmetric(&bumped, &bumped, &q).unwrap();
        assert_eq!(c.status, Status::Holds, "{}", c.to_json());
        let cc = certify_euler_symmetric_compact(&bumped, &bumped, &q).unwrap();
        assert_eq!(cc.status, Status::Holds);
        assert!(cc.rhs >= c.rhs);
    }

    #[test]
    fn rectangular_certificate_records_both_constants() {
        let g = RectGrid::new(2.0, 1.0, 8, 16).unwrap();
        let q = SteadyStateEuler::shear(&g, |y| (1.0 - y).max(0.0)).unwrap();
        let qa = q.field.as_atoms();
        let f = qa.with_values(g.values(|x, y| (1.0 - y) * (1.0 + 0.3 * (PI * x).sin()))).unwrap();
        let c = certify_euler_symmetric(&f, &f, &q).unwrap();
        assert_eq!(c.inequality_id, InequalityId::Thm13Rectangular);
        assert_eq!(c.status, Status::Holds, "{}", c.to_json());
        let qs = c.components["q_sup"];
        assert!((c.components["constant"] - 8.0 * qs).abs() < 1e-14);
        assert!((c.components["constant_literal"] - 4.0 * qs).abs() < 1e-14);
        let d = DiscGrid::new(1.0, 4, 4).unwrap();
        let wrong = SteadyStateEuler::radial(&d, |_| 1.0).unwrap();
        assert!(certify_euler_symmetric(&f, &f, &wrong).is_err());
    }
}
