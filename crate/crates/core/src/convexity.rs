//! `B_σ`, its convexity modulus `H_σ`, and the constant `K(q*, σ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RlabError};
use crate::measure::{mu_of, AtomicFunction};
use crate::sigma::{unit_ball_volume, SigmaField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    Forbidden,
    Linear,
}

/// Piecewise-linear convex function given by its knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Slope on `[xs[k], xs[k+1])`; the last entry continues past the last knot.
    slopes: Vec<f64>,
    extension: Extension,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Smallest `slope[k+1] - slope[k]`.
    pub min_slope_increment: f64,
    /// Smallest second difference across consecutive knot triples, scaled by the local magnitude.
    pub min_scaled_second_difference: f64,
    pub convex: bool,
    pub strictly_convex: bool,
}

impl ConvexCurve {
    /// Knots plus the slope used beyond the last one.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, tail_slope: Option<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(RlabError::InvalidProfile("curve needs at least two matching knots".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RlabError::InvalidProfile("curve knots must be strictly increasing".into()));
        }
        let mut slopes: Vec<f64> = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
        let extension = match tail_slope {
            Some(s) => {
                slopes.push(s);
                Extension::Linear
            }
            None => {
                slopes.push(*slopes.last().unwrap());
                Extension::Forbidden
            }
        };
        Ok(Self { xs, ys, slopes, extension })
    }

    /// Knots with known segment slopes (`slopes.len() == xs.len()`, the last
    /// one continuing past the final knot). Avoids recovering slopes from
    /// differences of nearly equal ordinates.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() != slopes.len() || xs.len() < 2 {
            return Err(RlabError::InvalidProfile("curve needs at least two matching knots and slopes".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RlabError::InvalidProfile("curve knots must be strictly increasing".into()));
        }
        Ok(Self { xs, ys, slopes, extension: Extension::Linear })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn domain_end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Value at `x`; NaN past the last knot when extension is forbidden.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x > self.xs[last] && self.extension == Extension::Forbidden {
            return f64::NAN;
        }
        let k = self.xs.partition_point(|&t| t <= x).saturating_sub(1);
        let k = k.min(last);
        self.ys[k] + self.slopes[k] * (x - self.xs[k])
    }

    pub fn convexity(&self) -> ConvexityReport {
        let n = self.xs.len();
        let mut min_inc = f64::INFINITY;
        let mut min_sd = f64::INFINITY;
        for k in 0..n.saturating_sub(2) {
            min_inc = min_inc.min(self.slopes[k + 1] - self.slopes[k]);
            let sd = self.slopes[k + 1] - self.slopes[k];
            let scale = self.slopes[k].abs().max(self.slopes[k + 1].abs()).max(f64::MIN_POSITIVE);
            min_sd = min_sd.min(sd / scale);
        }
        ConvexityReport {
            min_slope_increment: min_inc,
            min_scaled_second_difference: min_sd,
            convex: min_sd >= -1e-12,
            strictly_convex: min_inc > 1e-12,
        }
    }
}

/// Piecewise-linear `B_σ = ∫ b_σ` with a knot at every breakpoint of `b_σ`.
///
/// Exact for the step function `b_σ` of the carrier; beyond the carrier
/// measure it continues with the last level of `b_σ`.
pub fn b_sigma_curve(sigma: &SigmaField) -> Result<ConvexCurve> {
    let xs = sigma.cumulative().to_vec();
    let ys = sigma.knot_values().to_vec();
    if xs.len() < 2 {
        return Err(RlabError::InvalidProfile("σ field has no levels".into()));
    }
    // b_σ equals levels[k] on (cumulative[k], cumulative[k+1]]
    let mut slopes = sigma.levels().to_vec();
    slopes.push(*slopes.last().unwrap());
    ConvexCurve::with_slopes(xs, ys, slopes)
}

fn quotient<F: Fn(f64) -> f64>(big_b: &F, mu: f64, s: f64) -> f64 {
    (big_b(mu + s) + big_b(mu - s) - 2.0 * big_b(mu)) / (s * s)
}

/// `inf_{s_min <= s <= mu}` of the symmetric second difference quotient of the
/// empirical `B_σ`, over a 64-point geometric grid and every knot offset.
///
/// On a truncated domain `B_σ` is unknown past the cutoff, so `s` also stays
/// below `meas - mu`.
pub fn h_sigma_empirical(sigma: &SigmaField, mu: f64, s_min: f64) -> f64 {
    let bb = |x: f64| sigma.big_b(x);
    let s_max = if sigma.carrier().domain().truncated { mu.min(sigma.total_measure() - mu) } else { mu };
    let s_max = s_max.max(f64::MIN_POSITIVE);
    let s_min = s_min.clamp(f64::MIN_POSITIVE, s_max);
    let mut best = f64::INFINITY;
    let n = 64;
    let ratio = (s_max / s_min).ln();
    for k in 0..n {
        let s = s_min * (ratio * k as f64 / (n - 1) as f64).exp();
        best = best.min(quotient(&bb, mu, s.min(s_max)));
        if best <= 1e-14 {
            return best;
        }
    }
    for &c in sigma.cumulative() {
        let s = (c - mu).abs();
        if s >= s_min && s <= s_max {
            best = best.min(quotient(&bb, mu, s));
        }
    }
    best
}

/// `H_σ(mu)`: closed form when the family has one, otherwise the empirical infimum
/// from `mu * 1e-6` to `mu`.
pub fn h_sigma(sigma: &SigmaField, mu: f64) -> Result<f64> {
    let total = sigma.total_measure();
    if !(mu > 0.0 && mu <= total * (1.0 + 1e-12)) {
        return Err(RlabError::OutOfRange(format!("mu = {mu} outside (0, {total}]")));
    }
    if let Some(h) = sigma.jacobian().and_then(|j| j.h(mu)) {
        return Ok(h);
    }
    Ok(h_sigma_empirical(sigma, mu, mu * 1e-6))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMethod {
    ClosedForm,
    PiecewiseExact,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KConstant {
    pub value: f64,
    pub method: KMethod,
    pub h_floor: f64,
}

impl KConstant {
    pub fn is_finite(&self) -> bool {
        self.method != KMethod::Inconclusive && self.value.is_finite()
    }
}

/// `K(q*, σ) = 4 ∫_0^{‖q‖∞} dt / H_σ(μ_q(t))`, summed exactly over the plateaus of `μ_q`.
pub fn k_constant(q: &AtomicFunction, sigma: &SigmaField) -> Result<KConstant> {
    let qmax = q.max_value();
    if qmax <= 0.0 {
        return Err(RlabError::InvalidFunction("K needs a nonzero function".into()));
    }
    let mu = mu_of(q);
    let closed = sigma.jacobian().map(|j| j.h_is_closed_form());
    let mut method = match closed {
        Some(true) => KMethod::ClosedForm,
        _ => KMethod::PiecewiseExact,
    };
    let mut total = 0.0;
    let mut h_floor = f64::INFINITY;
    let mut lo = 0.0;
    for (k, &b) in mu.breakpoints().iter().enumerate() {
        if b <= 0.0 {
            continue;
        }
        let m = mu.values()[k];
        if m > 0.0 {
            let h = h_sigma(sigma, m)?;
            h_floor = h_floor.min(h);
            if h <= 1e-14 {
                method = KMethod::Inconclusive;
                break;
            }
            total += (b - lo) / h;
        }
        lo = b;
        if b >= qmax {
            break;
        }
    }
    if method == KMethod::Inconclusive {
        return Ok(KConstant { value: f64::INFINITY, method, h_floor });
    }
    Ok(KConstant { value: 4.0 * total, method, h_floor })
}

/// `4 (d/m) K_d^{m/d} ‖q‖∞^{m/d} ‖q‖₁^{1-m/d}`: Jensen upper bound on `K` for `σ = |x|^m`.
pub fn power_law_k_bound(q: &AtomicFunction, m: f64, d: u32) -> f64 {
    let df = d as f64;
    let r = m / df;
    4.0 / r * unit_ball_volume(d).powf(r) * q.max_value().powf(r) * q.integral().powf(1.0 - r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DiscGrid, RectGrid};
    use crate::sigma::SigmaSpec;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_k_on_disc_and_strip() {
        let g = DiscGrid::new(1.0, 32, 16).unwrap();
        let s = SigmaField::build(SigmaSpec::RadiusSquared, &g.carrier).unwrap();
        let q = AtomicFunction::new(g.carrier.clone(), g.radial_values(|r| (1.0 - r * r).max(0.0))).unwrap();
        let k = k_constant(&q, &s).unwrap();
        assert_eq!(k.method, KMethod::ClosedForm);
        assert!((k.value - 4.0 * PI * q.max_value()).abs() < 1e-12 * k.value);
        let r = RectGrid::new(2.5, 1.0, 8, 16).unwrap();
        let s = SigmaField::build(SigmaSpec::CoordX2, &r.carrier).unwrap();
        let q = AtomicFunction::new(r.carrier.clone(), r.values(|_, y| 3.0 * (1.0 - y))).unwrap();
        let k = k_constant(&q, &s).unwrap();
        assert!((k.value - 4.0 * 2.5 * q.max_value()).abs() < 1e-12 * k.value);
    }

    #[test]
    fn worked_rectangle_k_is_twelve() {
        let d = crate::measure::Domain::rectangle(1.0, 2.0).unwrap();
        let pos = vec![0.5, 0.25, 0.5, 0.75, 0.5, 1.25, 0.5, 1.75];
        let c = crate::measure::Carrier::new(d, 2, pos, vec![0.5; 4]).unwrap();
        let s = SigmaField::build(SigmaSpec::CoordX2, &c).unwrap();
        let f = AtomicFunction::new(c, vec![1.0, 3.0, 0.0, 2.0]).unwrap();
        assert_eq!(k_constant(&f, &s).unwrap().value, 12.0);
        assert!(k_constant(&f.scaled(0.0).unwrap(), &s).is_err());
    }

    #[test]
    fn b_sigma_curve_is_convex_and_matches_closed_form() {
        let g = DiscGrid::new(1.0, 64, 4).unwrap();
        let s = SigmaField::build(SigmaSpec::RadiusSquared, &g.carrier).unwrap();
        let c = b_sigma_curve(&s).unwrap();
        assert!(c.convexity().convex);
        assert!(c.convexity().strictly_convex);
        assert_eq!(c.eval(0.0), 0.0);
        let (xs, ys) = c.knots();
        for (x, y) in xs.iter().zip(ys) {
            assert!((y - x * x / (2.0 * PI)).abs() < 1e-13);
        }
    }

    #[test]
    fn empirical_h_tracks_power_law_closed_form() {
        let g = DiscGrid::truncated_plane(1.0, 400, 1).unwrap();
        for m in [0.5, 1.0, 2.0] {
            let s = SigmaField::build(SigmaSpec::PowerLaw { m }, &g.carrier).unwrap();
            let cf = s.closed_form().unwrap();
            let total = s.total_measure();
            let spacing = total / 400.0;
            for frac in [0.1, 0.5, 0.9] {
                let mu = frac * total;
                let emp = h_sigma_empirical(&s, mu, 8.0 * spacing);
                let exact = crate::sigma::Jacobian::h(&cf, mu).unwrap();
                assert!((emp - exact).abs() < 0.02 * exact, "m={m} mu={mu}: {emp} vs {exact}");
            }
            // strict empirical infimum drops to zero inside a linear segment
            let strict = h_sigma(&SigmaField::build(SigmaSpec::Empirical { values: s.values().to_vec() }, &g.carrier).unwrap(), 0.37 * total + 0.3 * spacing).unwrap();
            assert!(strict <= 1e-14);
        }
    }

    #[test]
    fn jensen_bound_dominates_k() {
        let g = DiscGrid::new(1.0, 48, 24).unwrap();
        for m in [0.5, 1.0, 2.0] {
            let s = SigmaField::build(SigmaSpec::PowerLaw { m }, &g.carrier).unwrap();
            let q = AtomicFunction::new(g.carrier.clone(), g.radial_values(|r| (1.0 - r).max(0.0).powi(2) + 0.1)).unwrap();
            let k = k_constant(&q, &s).unwrap();
            assert!(k.value <= power_law_k_bound(&q, m, 2) * (1.0 + 1e-9));
        }
    }
}
