use std::f64::consts::PI;

use super::potential::RadialPotential;
use crate::error::{Result, RlabError};
use crate::numeric::bisect;
use crate::sigma::Jacobian;

const GL4_X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Radial quadrature of `a_{e₀}(s) = meas{e₀ < s}` inside the phase box `r ≤ r_max`, `|v| ≤ v_max`.
#[derive(Clone, Debug)]
pub struct EnergyQuadrature {
    /// `(4πr² dr weight, φ(r) − φ(0))` at every Gauss node.
    nodes: Vec<(f64, f64)>,
    v_max: f64,
}

impl EnergyQuadrature {
    pub fn new(pot: &RadialPotential, r_max: f64, v_max: f64) -> Self {
        let mut nodes = Vec::with_capacity(4 * pot.r_grid.len());
        let mut edges: Vec<f64> = pot.r_grid.iter().copied().filter(|&r| r < r_max).collect();
        edges.push(r_max);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for k in 0..4 {
                let r = mid + half * GL4_X[k];
                nodes.push((4.0 * PI * r * r * half * GL4_W[k], pot.eval(r) - pot.phi_at_zero));
            }
        }
        Self { nodes, v_max }
    }

    pub fn a(&self, s: f64) -> f64 {
        let vm3 = self.v_max.powi(3);
        let mut acc = 0.0;
        for &(w, d) in &self.nodes {
            if s > d {
                let v3 = (2.0 * (s - d)).powf(1.5);
                acc += w * v3.min(vm3);
            }
        }
        4.0 * PI / 3.0 * acc
    }

    /// `a'(s)`, the area of the energy surface `{e₀ = s}` inside the box.
    pub fn a_prime(&self, s: f64) -> f64 {
        let vm2 = self.v_max * self.v_max;
        let mut acc = 0.0;
        for &(w, d) in &self.nodes {
            let v2 = 2.0 * (s - d);
            if v2 > 0.0 && v2 < vm2 {
                acc += w * v2.sqrt();
            }
        }
        4.0 * PI * acc
    }

    /// Smallest `s` with `a(s) ≥ mu`.
    pub fn inverse(&self, mu: f64, s_top: f64) -> f64 {
        bisect(|s| self.a(s) - mu, 0.0, s_top, 1e-15 * s_top, 200)
    }
}

/// Tabulated Jacobian of the microscopic energy on the phase box.
///
/// `a` is interpolated linearly between quadrature values, so `b` is
/// piecewise linear and `B` piecewise quadratic; `H` is the infimum of the
/// second-difference quotient of that `B`, tabulated on a log grid in `μ`.
#[derive(Clone, Debug)]
pub struct MicroEnergyTable {
    s: Vec<f64>,
    a: Vec<f64>,
    /// `B` at the knots `a[i]`.
    big_b_knots: Vec<f64>,
    h_mu: Vec<f64>,
    h_val: Vec<f64>,
}

impl MicroEnergyTable {
    pub fn new(quad: &EnergyQuadrature, s_top: f64, points: usize, h_floor_mu: f64) -> Result<Self> {
        if points < 16 || !(s_top > 0.0) {
            return Err(RlabError::OutOfRange("energy table needs ≥ 16 points and positive range".into()));
        }
        let n = points - 1;
        let s: Vec<f64> = (0..=n).map(|i| s_top * (i as f64 / n as f64).powi(2)).collect();
        let mut a: Vec<f64> = s.iter().map(|&x| quad.a(x)).collect();
        a[0] = 0.0;
        for i in 1..a.len() {
            if a[i] < a[i - 1] {
                a[i] = a[i - 1];
            }
        }
        let mut big_b_knots = vec![0.0];
        for i in 0..n {
            let last = *big_b_knots.last().unwrap();
            big_b_knots.push(last + 0.5 * (a[i + 1] - a[i]) * (s[i] + s[i + 1]));
        }
        let mut t = Self { s, a, big_b_knots, h_mu: Vec::new(), h_val: Vec::new() };
        let top = t.measure();
        let lo = h_floor_mu.max(top * 1e-14);
        let m = 512;
        let ratio = (top / lo).ln();
        for j in 0..m {
            let mu = lo * (ratio * j as f64 / (m - 1) as f64).exp();
            t.h_mu.push(mu);
            t.h_val.push(t.h_scan(mu));
        }
        Ok(t)
    }

    /// `inf_{0 < s ≤ μ}` of the quotient over a geometric grid plus every knot offset.
    fn h_scan(&self, mu: f64) -> f64 {
        let q = |s: f64| (self.big_b(mu + s) + self.big_b(mu - s) - 2.0 * self.big_b(mu)) / (s * s);
        let mut best = f64::INFINITY;
        let n = 160;
        let s_min = mu * 1e-6;
        let ratio = (mu / s_min).ln();
        for k in 0..n {
            best = best.min(q(s_min * (ratio * k as f64 / (n - 1) as f64).exp()));
        }
        let lo = self.a.partition_point(|&x| x < 0.0);
        for &c in &self.a[lo..] {
            let s = (c - mu).abs();
            if s > s_min && s <= mu {
                best = best.min(q(s));
            }
        }
        best
    }

    pub fn s_top(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.s, &self.a)
    }
}

impl Jacobian for MicroEnergyTable {
    fn a(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        if e >= self.s_top() {
            return self.measure();
        }
        let i = self.s.partition_point(|&x| x <= e) - 1;
        let t = (e - self.s[i]) / (self.s[i + 1] - self.s[i]);
        self.a[i] + t * (self.a[i + 1] - self.a[i])
    }

    fn b(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        if mu >= self.measure() {
            return self.s_top();
        }
        // first knot with a > mu
        let j = self.a.partition_point(|&x| x <= mu);
        let i = j - 1;
        let da = self.a[j] - self.a[i];
        self.s[i] + (self.s[j] - self.s[i]) * (mu - self.a[i]) / da
    }

    fn big_b(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        let top = self.measure();
        if mu >= top {
            return *self.big_b_knots.last().unwrap() + self.s_top() * (mu - top);
        }
        let j = self.a.partition_point(|&x| x <= mu);
        let i = j - 1;
        let bm = self.b(mu);
        self.big_b_knots[i] + 0.5 * (mu - self.a[i]) * (self.s[i] + bm)
    }

    fn h(&self, mu: f64) -> Option<f64> {
        if !(mu > 0.0) || mu > self.measure() * (1.0 + 1e-12) || self.h_mu.is_empty() {
            return None;
        }
        if mu <= self.h_mu[0] {
            return Some(self.h_val[0]);
        }
        let j = self.h_mu.partition_point(|&x| x < mu).min(self.h_mu.len() - 1);
        // the smaller neighbour, so the lookup never overstates H
        Some(self.h_val[j - 1].min(self.h_val[j]))
    }

    fn measure(&self) -> f64 {
        *self.a.last().unwrap()
    }

    fn h_is_closed_form(&self) -> bool {
        false
    }
}
