//! Certificates for the refined Hardy-Littlewood inequalities, plus an
//! independent per-level enumeration used to cross-check them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::convexity::{k_constant, KConstant, KMethod};
use crate::error::{Result, RlabError};
use crate::measure::{
    align, beta_of, integrate_profiles, l1_distance, mu_of, sharp_of, support_end, AtomicFunction, StepProfile,
};
use crate::numeric::ExactSum;
use crate::sigma::{sigma_rearrange, unit_ball_volume, SigmaField, SigmaSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    Thm1Ineq1,
    Thm1Ineq2,
    Remark3Ineq11,
    Corollary1,
    HlClassic,
    HlTheta,
    Thm13Radial,
    Thm13Rectangular,
    Thm13RadialCompact,
    Thm13RectangularCompact,
    Thm14Domain,
    Thm12Global,
    Thm12H3,
    Z2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Violated,
    Inconclusive,
}

/// Direction of the certified inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs <= rhs`, slack `rhs - lhs`.
    Le,
    /// `lhs >= rhs`, slack `lhs - rhs`.
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub inequality_id: InequalityId,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub status: Status,
    pub components: BTreeMap<String, f64>,
    pub caveats: Vec<String>,
}

/// Relative tolerance of the status decision.
pub const STATUS_TOL: f64 = 1e-9;

impl Certificate {
    pub fn assess(id: InequalityId, relation: Relation, lhs: f64, rhs: f64) -> Self {
        let slack = match relation {
            Relation::Le => rhs - lhs,
            Relation::Ge => lhs - rhs,
        };
        let tol = STATUS_TOL * lhs.abs().max(rhs.abs()).max(1.0);
        let status = if !slack.is_finite() {
            Status::Inconclusive
        } else if slack >= -tol {
            Status::Holds
        } else {
            Status::Violated
        };
        Self { inequality_id: id, relation, lhs, rhs, slack, status, components: BTreeMap::new(), caveats: Vec::new() }
    }

    pub fn inconclusive(id: InequalityId, relation: Relation, lhs: f64, reason: &str) -> Self {
        let mut c = Self::assess(id, relation, lhs, f64::NAN);
        c.status = Status::Inconclusive;
        c.caveats.push(reason.to_string());
        c
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.components.insert(name.to_string(), value);
        self
    }

    pub fn caveat(mut self, text: impl Into<String>) -> Self {
        self.caveats.push(text.into());
        self
    }

    /// Records the mass of the input discarded by a domain cutoff.
    pub fn with_truncation(self, mass: f64) -> Self {
        self.with("truncated_mass", mass).caveat(format!("domain truncated; discarded tail mass {mass:e}"))
    }

    /// Re-decides the status with relative tolerance `tol` in place of [`STATUS_TOL`].
    /// Inconclusive certificates stay inconclusive.
    pub fn with_status_tolerance(mut self, tol: f64) -> Self {
        if self.status == Status::Inconclusive || !self.slack.is_finite() {
            return self;
        }
        let scale = self.lhs.abs().max(self.rhs.abs()).max(1.0);
        self.status = if self.slack >= -tol * scale { Status::Holds } else { Status::Violated };
        self
    }

    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

pub(crate) fn sigma_caveats(cert: Certificate, sigma: &SigmaField) -> Certificate {
    let ties = sigma.ties();
    let mut cert = cert.with("sigma_tie_mass", ties.tie_mass);
    if ties.flagged {
        cert = cert.caveat(format!(
            "σ level sets carry measure: tie mass {:e} over {} levels",
            ties.tie_mass, ties.tied_levels
        ));
    }
    if sigma.carrier().domain().truncated {
        cert = cert.caveat("domain truncated at a finite cutoff");
    }
    cert
}

/// `∫σ f − ∫σ g` as one exactly rounded sum.
pub fn sigma_energy_gap(sigma: &SigmaField, f: &AtomicFunction, g: &AtomicFunction) -> Result<f64> {
    let mut acc = ExactSum::new();
    let sf = sigma.values_on(f.carrier())?;
    for ((v, w), s) in f.values().iter().zip(f.weights()).zip(&sf) {
        acc.add(s * w * v);
    }
    let sg = sigma.values_on(g.carrier())?;
    for ((v, w), s) in g.values().iter().zip(g.weights()).zip(&sg) {
        acc.add(-(s * w * v));
    }
    Ok(acc.value())
}

/// Bookkeeping shared by the refined Hardy-Littlewood certificates.
#[derive(Clone, Debug)]
pub struct Thm1Terms {
    pub q_star: AtomicFunction,
    pub mu_q: StepProfile,
    pub mu_f: StepProfile,
    /// `β_{f, q*σ}(s) = meas{f ≤ s < q*σ}`.
    pub beta: StepProfile,
    pub sigma_energy: f64,
    pub l1_f_qstar: f64,
    pub norm_f: f64,
    pub norm_q: f64,
    /// `∫ β_{f*,q*} b(2μ_q)`.
    pub mixed_plus: f64,
    /// `∫ β_{q*,f*} b(μ_q)`.
    pub mixed_minus: f64,
    /// `∫ [B(μ_q+β) + B(μ_q−β) − 2B(μ_q)]`.
    pub convexity_term: f64,
    /// True when `2μ_q` leaves the carrier measure where `β_{f*,q*} > 0`.
    pub range_exceeded: bool,
}

pub fn thm1_terms(f: &AtomicFunction, q: &AtomicFunction, sigma: &SigmaField) -> Result<Thm1Terms> {
    align(f, q)?;
    let q_star = sigma_rearrange(q, sigma)?;
    let mu_q = mu_of(q);
    let mu_f = mu_of(f);
    let beta = beta_of(f, &q_star)?;
    let sigma_energy = sigma_energy_gap(sigma, f, &q_star)?;
    let l1_f_qstar = l1_distance(f, &q_star)?;
    let total = sigma.total_measure();
    let upper = support_end(&[&mu_q, &mu_f, &beta]);
    let mut range_exceeded = false;
    let mixed_plus = integrate_profiles(&[&mu_q, &mu_f], upper, |v| {
        let d = (v[0] - v[1]).max(0.0);
        if d > 0.0 && 2.0 * v[0] > total {
            range_exceeded = true;
        }
        if d > 0.0 {
            d * sigma.b(2.0 * v[0])
        } else {
            0.0
        }
    });
    let mixed_minus = integrate_profiles(&[&mu_q, &mu_f], upper, |v| {
        let d = (v[1] - v[0]).max(0.0);
        if d > 0.0 {
            d * sigma.b(v[0])
        } else {
            0.0
        }
    });
    let convexity_term = integrate_profiles(&[&mu_q, &beta], upper, |v| {
        let (m, b) = (v[0], v[1]);
        if b == 0.0 {
            0.0
        } else {
            sigma.big_b(m + b) + sigma.big_b(m - b) - 2.0 * sigma.big_b(m)
        }
    });
    Ok(Thm1Terms {
        q_star,
        mu_q,
        mu_f,
        beta,
        sigma_energy,
        l1_f_qstar,
        norm_f: f.integral(),
        norm_q: q.integral(),
        mixed_plus,
        mixed_minus,
        convexity_term,
        range_exceeded,
    })
}

fn k_components(cert: Certificate, k: &KConstant) -> Certificate {
    let method = match k.method {
        KMethod::ClosedForm => 0.0,
        KMethod::PiecewiseExact => 1.0,
        KMethod::Inconclusive => 2.0,
    };
    cert.with("K", k.value).with("K_method", method).with("H_floor", k.h_floor)
}

/// Main refined Hardy-Littlewood inequality for a pair `(f, q)`.
pub fn certify_thm1(f: &AtomicFunction, q: &AtomicFunction, sigma: &SigmaField) -> Result<Certificate> {
    let t = thm1_terms(f, q, sigma)?;
    let k = k_constant(q, sigma)?;
    let a = t.l1_f_qstar + t.norm_q - t.norm_f;
    let lhs = a * a;
    let bracket = t.sigma_energy + t.mixed_plus - t.mixed_minus;
    let mut cert = if k.is_finite() {
        Certificate::assess(InequalityId::Thm1Ineq1, Relation::Le, lhs, k.value * bracket)
    } else {
        Certificate::inconclusive(
            InequalityId::Thm1Ineq1,
            Relation::Le,
            lhs,
            "H_σ vanishes on the carrier; use the K-free estimate (remark3_ineq11)",
        )
    };
    cert = k_components(cert, &k)
        .with("l1_f_minus_qstar", t.l1_f_qstar)
        .with("norm_f", t.norm_f)
        .with("norm_q", t.norm_q)
        .with("sigma_energy", t.sigma_energy)
        .with("mixed_plus", t.mixed_plus)
        .with("mixed_minus", t.mixed_minus)
        .with("bracket", bracket);
    if t.range_exceeded {
        cert = cert.caveat("2μ_q exceeds the carrier measure where β_{f*,q*} > 0; b_σ extended by its last level");
    }
    Ok(sigma_caveats(cert, sigma))
}

/// Refined inequality `‖f − f*σ‖₁² ≤ K(f*, σ) ∫σ(f − f*σ)`.
pub fn certify_refined(f: &AtomicFunction, sigma: &SigmaField) -> Result<Certificate> {
    let f_star = sigma_rearrange(f, sigma)?;
    let k = k_constant(f, sigma)?;
    let d = l1_distance(f, &f_star)?;
    let energy = sigma_energy_gap(sigma, f, &f_star)?;
    let lhs = d * d;
    let cert = if k.is_finite() {
        Certificate::assess(InequalityId::Thm1Ineq2, Relation::Le, lhs, k.value * energy)
    } else {
        Certificate::inconclusive(InequalityId::Thm1Ineq2, Relation::Le, lhs, "H_σ vanishes on the carrier")
    };
    let cert = k_components(cert, &k).with("l1_f_minus_fstar", d).with("sigma_energy", energy);
    Ok(sigma_caveats(cert, sigma))
}

/// K-free estimate: convexity term plus mixed terms bounded by `∫σ(f − q*σ)`.
pub fn certify_remark3(f: &AtomicFunction, q: &AtomicFunction, sigma: &SigmaField) -> Result<Certificate> {
    let t = thm1_terms(f, q, sigma)?;
    let lhs = t.convexity_term + t.mixed_minus - t.mixed_plus;
    let mut cert = Certificate::assess(InequalityId::Remark3Ineq11, Relation::Le, lhs, t.sigma_energy)
        .with("convexity_term", t.convexity_term)
        .with("mixed_plus", t.mixed_plus)
        .with("mixed_minus", t.mixed_minus)
        .with("sigma_energy", t.sigma_energy);
    if t.range_exceeded {
        cert = cert.caveat("2μ_q exceeds the carrier measure where β_{f*,q*} > 0; b_σ extended by its last level");
    }
    Ok(sigma_caveats(cert, sigma))
}

/// Quantitative bathtub inequality for `σ = |x|^m` on a disc (d = 2).
pub fn certify_corollary1(u: &AtomicFunction, m: f64) -> Result<Certificate> {
    if !u.domain().is_disc() {
        return Err(RlabError::Unsupported("the quantitative bathtub inequality needs a disc domain".into()));
    }
    if !(m > 0.0 && m <= 2.0) {
        return Err(RlabError::OutOfRange(format!("m = {m} outside (0, 2]")));
    }
    let d = 2u32;
    let sigma = SigmaField::build(SigmaSpec::PowerLaw { m }, u.carrier().root())?;
    let u_star = sigma_rearrange(u, &sigma)?;
    let lhs = sigma_energy_gap(&sigma, u, &u_star)?;
    let dist = l1_distance(u, &u_star)?;
    let (n1, ninf) = (u.integral(), u.max_value());
    let r = m / d as f64;
    let c = if ninf > 0.0 {
        m / (4.0 * d as f64) * unit_ball_volume(d).powf(-r) * n1.powf(-1.0 + r) * ninf.powf(-r)
    } else {
        0.0
    };
    let cert = Certificate::assess(InequalityId::Corollary1, Relation::Ge, lhs, c * dist * dist)
        .with("m", m)
        .with("constant", c)
        .with("l1_u_minus_ustar", dist)
        .with("norm_u_l1", n1)
        .with("norm_u_linf", ninf);
    Ok(sigma_caveats(cert, &sigma))
}

/// `∫ f g ≤ ∫ f^♯ g^♯`.
pub fn hl_classic(f: &AtomicFunction, g: &AtomicFunction) -> Result<Certificate> {
    let (c, fv, gv) = align(f, g)?;
    let mut acc = ExactSum::new();
    for ((a, b), w) in fv.iter().zip(gv.iter()).zip(c.weights()) {
        acc.add(a * b * w);
    }
    let lhs = acc.value();
    let (fs, gs) = (sharp_of(&mu_of(f))?, sharp_of(&mu_of(g))?);
    let upper = c.total_weight();
    let rhs = integrate_profiles(&[&fs, &gs], upper, |v| v[0] * v[1]);
    Ok(Certificate::assess(InequalityId::HlClassic, Relation::Le, lhs, rhs))
}

/// `∫ σ (f − f*σ) ≥ 0`.
pub fn hl_theta(f: &AtomicFunction, sigma: &SigmaField) -> Result<Certificate> {
    let f_star = sigma_rearrange(f, sigma)?;
    let gap = sigma_energy_gap(sigma, f, &f_star)?;
    Ok(sigma_caveats(Certificate::assess(InequalityId::HlTheta, Relation::Ge, gap, 0.0), sigma))
}

/// Per-level enumeration of the sets `D1(t) = {q*σ ≤ t < f}` and
/// `D2(t) = {f ≤ t < q*σ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCakeOracle {
    /// `∫[B(μ_q+α) + B(μ_q−β) − 2B(μ_q)]`: lower bound for `∫σ(f − q*σ)`.
    pub base_lower_bound: f64,
    /// Convexity plus mixed terms of the K-free estimate.
    pub remark3_lhs: f64,
    pub sigma_energy: f64,
    pub int_alpha: f64,
    pub int_beta: f64,
    pub l1_f_qstar: f64,
    /// Largest levelwise `|β − α − (μ_q − μ_f)|`.
    pub alpha_beta_residual: f64,
    pub levels: usize,
}

/// `B_σ` rebuilt from scratch: fill measure `mu` with the atoms of lowest σ.
struct SortedFill {
    sigma: Vec<f64>,
    prefix_w: Vec<f64>,
    prefix_sw: Vec<f64>,
}

impl SortedFill {
    fn new(sigma: &[f64], w: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..sigma.len()).collect();
        idx.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
        let mut prefix_w = vec![0.0];
        let mut prefix_sw = vec![0.0];
        let (mut aw, mut asw) = (ExactSum::new(), ExactSum::new());
        let mut s = Vec::with_capacity(idx.len());
        for &i in &idx {
            aw.add(w[i]);
            asw.add(w[i] * sigma[i]);
            prefix_w.push(aw.value());
            prefix_sw.push(asw.value());
            s.push(sigma[i]);
        }
        Self { sigma: s, prefix_w, prefix_sw }
    }

    fn big_b(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        let n = self.sigma.len();
        let k = (self.prefix_w.partition_point(|&x| x <= mu) - 1).min(n);
        let slope = self.sigma[k.min(n - 1)];
        self.prefix_sw[k] + slope * (mu - self.prefix_w[k])
    }

    fn b(&self, mu: f64) -> f64 {
        let n = self.sigma.len();
        let k = self.prefix_w.partition_point(|&x| x <= mu).saturating_sub(1);
        self.sigma[k.min(n - 1)]
    }
}

/// Independent evaluation of the layer-cake quantities by direct enumeration
/// of atoms at every level. Quadratic cost; meant for small carriers.
pub fn oracle_layer_cake(f: &AtomicFunction, q: &AtomicFunction, sigma: &SigmaField) -> Result<LayerCakeOracle> {
    align(f, q)?;
    let q_star = sigma_rearrange(q, sigma)?;
    let (c, fv, qv) = align(f, &q_star)?;
    let w = c.weights();
    let sv = sigma.values_on(&c)?;
    let root_sigma = sigma.values();
    let fill = SortedFill::new(root_sigma, sigma.carrier().weights());

    let mut levels: Vec<f64> = fv.iter().chain(qv.iter()).copied().chain(std::iter::once(0.0)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let (mut base, mut rem3, mut ia, mut ib) = (ExactSum::new(), ExactSum::new(), ExactSum::new(), ExactSum::new());
    let mut resid: f64 = 0.0;
    for k in 0..levels.len().saturating_sub(1) {
        let t = levels[k];
        let dt = levels[k + 1] - t;
        let (mut mq, mut mf, mut al, mut be) = (ExactSum::new(), ExactSum::new(), ExactSum::new(), ExactSum::new());
        for i in 0..w.len() {
            let (fi, qi) = (fv[i], qv[i]);
            if qi > t {
                mq.add(w[i]);
            }
            if fi > t {
                mf.add(w[i]);
            }
            if qi <= t && t < fi {
                al.add(w[i]);
            }
            if fi <= t && t < qi {
                be.add(w[i]);
            }
        }
        let (mq, mf, al, be) = (mq.value(), mf.value(), al.value(), be.value());
        resid = resid.max((be - al - (mq - mf)).abs());
        let b0 = fill.big_b(mq);
        base.add(dt * (fill.big_b(mq + al) + fill.big_b(mq - be) - 2.0 * b0));
        let conv = if be > 0.0 { fill.big_b(mq + be) + fill.big_b(mq - be) - 2.0 * b0 } else { 0.0 };
        let plus = (mq - mf).max(0.0);
        let minus = (mf - mq).max(0.0);
        let mixed_minus = if minus > 0.0 { minus * fill.b(mq) } else { 0.0 };
        let mixed_plus = if plus > 0.0 { plus * fill.b(2.0 * mq) } else { 0.0 };
        rem3.add(dt * (conv + mixed_minus - mixed_plus));
        ia.add(dt * al);
        ib.add(dt * be);
    }
    let mut energy = ExactSum::new();
    let mut l1 = ExactSum::new();
    for i in 0..w.len() {
        energy.add(sv[i] * w[i] * (fv[i] - qv[i]));
        l1.add(w[i] * (fv[i] - qv[i]).abs());
    }
    Ok(LayerCakeOracle {
        base_lower_bound: base.value(),
        remark3_lhs: rem3.value(),
        sigma_energy: energy.value(),
        int_alpha: ia.value(),
        int_beta: ib.value(),
        l1_f_qstar: l1.value(),
        alpha_beta_residual: resid,
        levels: levels.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiscGrid;
    use crate::measure::{Carrier, Domain};
    use std::f64::consts::PI;

    fn strip_example() -> (AtomicFunction, SigmaField) {
        let d = Domain::rectangle(1.0, 2.0).unwrap();
        let pos = vec![0.5, 0.25, 0.5, 0.75, 0.5, 1.25, 0.5, 1.75];
        let c = Carrier::new(d, 2, pos, vec![0.5; 4]).unwrap();
        let s = SigmaField::build(SigmaSpec::CoordX2, &c).unwrap();
        (AtomicFunction::new(c, vec![1.0, 3.0, 0.0, 2.0]).unwrap(), s)
    }

    #[test]
    fn worked_example_nine_le_fifteen() {
        let (f, s) = strip_example();
        let c = certify_refined(&f, &s).unwrap();
        assert_eq!(c.lhs, 9.0);
        assert_eq!(c.rhs, 15.0);
        assert_eq!(c.components["K"], 12.0);
        assert_eq!(c.components["sigma_energy"], 1.25);
        assert!(c.holds());
        let c1 = certify_thm1(&f, &f, &s).unwrap();
        assert_eq!((c1.lhs, c1.rhs), (9.0, 15.0));
    }

    #[test]
    fn fixed_point_gives_zero_sides() {
        let (f, s) = strip_example();
        let fs = sigma_rearrange(&f, &s).unwrap();
        let c = certify_refined(&fs, &s).unwrap();
        assert_eq!((c.lhs, c.rhs, c.slack), (0.0, 0.0, 0.0));
        let c = certify_thm1(&fs, &f, &s).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs >= 0.0);
        let r = certify_remark3(&f, &f, &s).unwrap();
        assert!(r.holds());
    }

    #[test]
    fn oracle_on_worked_example() {
        let (f, s) = strip_example();
        let o = oracle_layer_cake(&f, &f, &s).unwrap();
        assert_eq!(o.int_alpha + o.int_beta, 3.0);
        assert_eq!(o.l1_f_qstar, 3.0);
        assert_eq!(o.alpha_beta_residual, 0.0);
        assert!(o.sigma_energy >= o.base_lower_bound);
        let r = certify_remark3(&f, &f, &s).unwrap();
        assert!((r.lhs - o.remark3_lhs).abs() < 1e-12);
        let fs = sigma_rearrange(&f, &s).unwrap();
        let z = oracle_layer_cake(&fs, &fs, &s).unwrap();
        assert_eq!((z.int_alpha, z.int_beta, z.base_lower_bound), (0.0, 0.0, 0.0));
    }

    #[test]
    fn corollary_constant_for_m_equal_d() {
        let g = DiscGrid::new(1.0, 8, 8).unwrap();
        let u = AtomicFunction::new(g.carrier.clone(), g.radial_values(|r| 2.0 * (1.0 - r))).unwrap();
        let c = certify_corollary1(&u, 2.0).unwrap();
        assert_eq!((c.lhs, c.rhs, c.slack), (0.0, 0.0, 0.0));
        let expect = 0.25 / PI / u.max_value();
        assert!((c.components["constant"] - expect).abs() < 1e-15);
        assert!(certify_corollary1(&u, 2.5).is_err());
    }

    #[test]
    fn classic_hl_on_example() {
        let (f, _) = strip_example();
        let g = f.with_values(vec![3.0, 2.0, 1.0, 0.0]).unwrap();
        let c = hl_classic(&f, &g).unwrap();
        assert_eq!(c.lhs, 0.5 * (3.0 + 6.0 + 0.0 + 0.0));
        assert_eq!(c.rhs, 0.5 * (9.0 + 4.0 + 1.0));
        assert!(c.holds());
    }

    #[test]
    fn certificate_json_shape() {
        let (f, s) = strip_example();
        let c = certify_refined(&f, &s).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["inequality_id"], "thm1_ineq2");
        assert_eq!(v["status"], "holds");
        assert_eq!(v["relation"], "le");
        assert!(v["components"]["K"].is_number());
    }
}
