use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{Result, RlabError};
use crate::numeric::gauss_legendre;

/// Polytropic profile `F(e) = κ (e₀ − e)₊^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytrope {
    pub k: f64,
    pub kappa: f64,
    pub e0: f64,
}

impl Polytrope {
    pub fn new(k: f64, kappa: f64, e0: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if !(k > 1.0 && k.is_finite()) {
            bad.push(format!("k = {k} (need k > 1)"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            bad.push(format!("kappa = {kappa} (need κ > 0)"));
        }
        if !(e0 < 0.0 && e0.is_finite()) {
            bad.push(format!("e0 = {e0} (need e₀ < 0)"));
        }
        if bad.is_empty() {
            Ok(Self { k, kappa, e0 })
        } else {
            Err(RlabError::OutOfRange(bad.join("; ")))
        }
    }

    pub fn f(&self, e: f64) -> f64 {
        self.kappa * (self.e0 - e).max(0.0).powf(self.k)
    }

    /// `4√2π·B(k+1, 3/2)`, so that `∫F(|v|²/2 + u) dv = c_k κ (e₀ − u)₊^{k+3/2}`.
    pub fn c_k(&self) -> f64 {
        4.0 * 2f64.sqrt() * PI * beta(self.k + 1.0, 1.5)
    }

    /// Mass density at potential value `phi`.
    pub fn density(&self, phi: f64) -> f64 {
        self.c_k() * self.kappa * (self.e0 - phi).max(0.0).powf(self.k + 1.5)
    }

    /// `∫|v|²/2 F(|v|²/2 + φ) dv`, the kinetic energy density.
    pub fn kinetic_density(&self, phi: f64) -> f64 {
        4.0 * 2f64.sqrt() * PI * beta(2.5, self.k + 1.0) * self.kappa * (self.e0 - phi).max(0.0).powf(self.k + 2.5)
    }
}

/// Self-consistent radial potential `Δφ = ρ(φ)` with `φ → 0` at infinity.
///
/// Stored as values and enclosed masses on `r_grid` (starting at 0);
/// between nodes `φ` is the cubic Hermite interpolant, outside
/// the table it is the exterior `−M/(4πr)`.
#[derive(Clone, Debug)]
pub struct RadialPotential {
    pub profile: Polytrope,
    pub r_grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// `m(r) = 4πr²φ'(r)`.
    pub enclosed_mass: Vec<f64>,
    pub phi_at_zero: f64,
    pub support_radius: f64,
    pub mass: f64,
    /// `max |m(r) − 4π∫₀^r ρ s² ds| / M` over the grid.
    pub poisson_residual: f64,
    /// Exterior matching mismatch `|e₀ + M/(4π r_s)|` at convergence.
    pub shooting_residual: f64,
}

/// Integration state `(φ, m)`.
type State = (f64, f64);

struct Shooter {
    profile: Polytrope,
    /// Fixed step of the outward integration.
    h: f64,
}

struct Shot {
    edge: f64,
    mass: f64,
    /// States at the requested stops inside the support.
    samples: Vec<State>,
}

impl Shooter {
    fn rhs(&self, r: f64, s: State) -> State {
        (s.1 / (4.0 * PI * r * r), 4.0 * PI * r * r * self.profile.density(s.0))
    }

    fn rk4(&self, r: f64, s: State, h: f64) -> State {
        let k1 = self.rhs(r, s);
        let k2 = self.rhs(r + 0.5 * h, (s.0 + 0.5 * h * k1.0, s.1 + 0.5 * h * k1.1));
        let k3 = self.rhs(r + 0.5 * h, (s.0 + 0.5 * h * k2.0, s.1 + 0.5 * h * k2.1));
        let k4 = self.rhs(r + h, (s.0 + h * k3.0, s.1 + h * k3.1));
        (
            s.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            s.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }

    /// Outward integration from the centre value `phi_c` until `φ = e₀`.
    fn shoot(&self, phi_c: f64, stops: &[f64]) -> Result<Shot> {
        let e0 = self.profile.e0;
        let rho_c = self.profile.density(phi_c);
        // series start: φ = φ_c + ρ_c r²/6, m = 4π ρ_c r³/3
        let r0 = 1e-3 * self.h;
        let mut r = r0;
        let mut s = (phi_c + rho_c * r0 * r0 / 6.0, 4.0 * PI * rho_c * r0.powi(3) / 3.0);
        let mut samples = Vec::with_capacity(stops.len());
        let mut next = 0;
        while next < stops.len() && stops[next] <= r {
            samples.push((phi_c + rho_c * stops[next].powi(2) / 6.0, 4.0 * PI * rho_c * stops[next].powi(3) / 3.0));
            next += 1;
        }
        let max_steps = (1e7 as usize).max(stops.len() * 4);
        for _ in 0..max_steps {
            let target = if next < stops.len() { stops[next].min(r + self.h) } else { r + self.h };
            let step = target - r;
            let t = self.rk4(r, s, step);
            if t.0 >= e0 {
                let (mut lo, mut hi) = (0.0, step);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.rk4(r, s, mid).0 >= e0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let edge_state = self.rk4(r, s, hi);
                return Ok(Shot { edge: r + hi, mass: edge_state.1, samples });
            }
            r = target;
            s = t;
            if next < stops.len() && r >= stops[next] {
                samples.push(s);
                next += 1;
            }
        }
        Err(RlabError::NoConvergence("potential never reached the cutoff energy".into()))
    }
}

/// Shooting on the central value `φ(0)` until the support edge `φ(r_s) = e₀`
/// matches the exterior solution, i.e. `e₀ = −M/(4π r_s)`.
///
/// The profile is scale-free, so the step is tied to the core radius
/// `(ψ_c/ρ_c)^{1/2}` of each trial and the matching defect is affine in `ψ_c`.
pub fn solve_potential(profile: Polytrope, grid_points: usize, r_max_factor: f64, tol: f64) -> Result<RadialPotential> {
    if grid_points < 8 || !(r_max_factor > 1.0) {
        return Err(RlabError::OutOfRange("need at least 8 radial points and r_max factor > 1".into()));
    }
    let e0 = profile.e0;
    let shooter_for = |psi_c: f64| {
        let rho_c = profile.density(e0 - psi_c);
        Shooter { profile, h: 2e-4 * (psi_c / rho_c).sqrt() }
    };
    let defect = |psi_c: f64| -> Result<(f64, Shot)> {
        let shot = shooter_for(psi_c).shoot(e0 - psi_c, &[])?;
        Ok((e0 + shot.mass / (4.0 * PI * shot.edge), shot))
    };
    let scale = e0.abs();
    let (mut x0, mut x1) = (scale, 4.0 * scale);
    let (mut g0, _) = defect(x0)?;
    let (mut g1, _) = defect(x1)?;
    let mut converged = None;
    for _ in 0..60 {
        if g1.abs() <= tol * scale {
            converged = Some(x1);
            break;
        }
        if g1 == g0 {
            break;
        }
        let x2 = (x1 - g1 * (x1 - x0) / (g1 - g0)).max(1e-3 * x1);
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = defect(x1)?.0;
    }
    let psi_c = converged.ok_or_else(|| RlabError::NoConvergence("central potential shooting".into()))?;
    let shooter = shooter_for(psi_c);
    let (g, shot) = defect(psi_c)?;
    let (r_s, mass) = (shot.edge, shot.mass);

    let r_max = r_max_factor * r_s;
    let r_min = 1e-4 * r_s;
    let n_log = grid_points - 1;
    let mut r_grid = vec![0.0];
    let ratio = (r_max / r_min).ln();
    for i in 0..n_log {
        r_grid.push(r_min * (ratio * i as f64 / (n_log - 1) as f64).exp());
    }
    *r_grid.last_mut().unwrap() = r_max;
    let inside: Vec<f64> = r_grid[1..].iter().copied().filter(|&r| r < r_s).collect();
    let shot = shooter.shoot(e0 - psi_c, &inside)?;
    let mut phi = vec![e0 - psi_c];
    let mut enclosed_mass = vec![0.0];
    for (i, &r) in r_grid[1..].iter().enumerate() {
        if let Some(s) = shot.samples.get(i) {
            phi.push(s.0);
            enclosed_mass.push(s.1);
        } else {
            phi.push(-mass / (4.0 * PI * r));
            enclosed_mass.push(mass);
        }
    }
    let mut pot = RadialPotential {
        profile,
        r_grid,
        phi,
        enclosed_mass,
        phi_at_zero: e0 - psi_c,
        support_radius: r_s,
        mass,
        poisson_residual: 0.0,
        shooting_residual: g.abs(),
    };
    pot.poisson_residual = pot.integral_residual();
    Ok(pot)
}

impl RadialPotential {
    fn node_slope(&self, i: usize) -> f64 {
        let r = self.r_grid[i];
        if r == 0.0 {
            0.0
        } else {
            self.enclosed_mass[i] / (4.0 * PI * r * r)
        }
    }

    fn locate(&self, r: f64) -> Option<(usize, f64, f64)> {
        let n = self.r_grid.len();
        if r >= self.r_grid[n - 1] {
            return None;
        }
        let i = self.r_grid.partition_point(|&x| x <= r).saturating_sub(1).min(n - 2);
        let h = self.r_grid[i + 1] - self.r_grid[i];
        Some((i, h, (r - self.r_grid[i]) / h))
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match self.locate(r) {
            None => -self.mass / (4.0 * PI * r),
            Some((i, h, t)) => {
                let (p0, p1) = (self.phi[i], self.phi[i + 1]);
                let (d0, d1) = (self.node_slope(i) * h, self.node_slope(i + 1) * h);
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * d1
            }
        }
    }

    /// `φ'(r)`, the derivative of the interpolant.
    pub fn gradient(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match self.locate(r) {
            None => self.mass / (4.0 * PI * r * r),
            Some((i, h, t)) => {
                let (p0, p1) = (self.phi[i], self.phi[i + 1]);
                let (d0, d1) = (self.node_slope(i) * h, self.node_slope(i + 1) * h);
                let t2 = t * t;
                ((6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * d1)
                    / h
            }
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        self.profile.density(self.eval(r))
    }

    fn integral_residual(&self) -> f64 {
        let mut acc = 0.0;
        let mut worst = 0.0f64;
        for i in 0..self.r_grid.len() - 1 {
            let (a, b) = (self.r_grid[i], self.r_grid[i + 1]);
            if a < self.support_radius {
                let hi = b.min(self.support_radius);
                acc += gauss_legendre(|r| 4.0 * PI * r * r * self.density(r), a, hi, 2);
            }
            worst = worst.max((acc - self.enclosed_mass[i + 1]).abs());
        }
        worst / self.mass
    }

    /// `(1/4π)∫ m(r)²/r² dr = ∫|∇φ|²`: interior by quadrature, exterior exactly.
    pub fn field_energy(&self) -> f64 {
        let r_s = self.support_radius;
        let mut acc = 0.0;
        for i in 0..self.r_grid.len() - 1 {
            let (a, b) = (self.r_grid[i], self.r_grid[i + 1].min(r_s));
            if a >= r_s {
                break;
            }
            acc += gauss_legendre(
                |r| {
                    let g = self.gradient(r);
                    4.0 * PI * r * r * g * g
                },
                a,
                b,
                2,
            );
        }
        acc + self.mass * self.mass / (4.0 * PI * r_s)
    }

    /// `∫|v|²/2 f₀ dx dv` from the closed-form kinetic density.
    pub fn kinetic_energy(&self) -> f64 {
        let r_s = self.support_radius;
        let mut acc = 0.0;
        for i in 0..self.r_grid.len() - 1 {
            let (a, b) = (self.r_grid[i], self.r_grid[i + 1].min(r_s));
            if a >= r_s {
                break;
            }
            acc += gauss_legendre(|r| 4.0 * PI * r * r * self.profile.kinetic_density(self.eval(r)), a, b, 2);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::simpson;

    #[test]
    fn c_k_matches_velocity_quadrature() {
        for &k in &[1.5, 2.0, 3.7] {
            let p = Polytrope::new(k, 1.3, -0.8).unwrap();
            let u = -1.9;
            let vmax = (2.0 * (p.e0 - u)).sqrt();
            let direct = simpson(|v| 4.0 * PI * v * v * p.f(0.5 * v * v + u), 0.0, vmax, 20000);
            assert!((direct - p.density(u)).abs() < 1e-8 * direct, "k = {k}");
            let kin = simpson(|v| 4.0 * PI * v * v * 0.5 * v * v * p.f(0.5 * v * v + u), 0.0, vmax, 20000);
            assert!((kin - p.kinetic_density(u)).abs() < 1e-8 * kin);
        }
        assert!(Polytrope::new(1.0, 1.0, -1.0).is_err());
        assert!(Polytrope::new(1.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn doubling_kappa_doubles_density() {
        let p = Polytrope::new(1.5, 1.0, -1.0).unwrap();
        let q = Polytrope { kappa: 2.0, ..p };
        for &phi in &[-3.0, -1.5, -1.0, -0.2] {
            assert_eq!(q.density(phi), 2.0 * p.density(phi));
        }
    }

    /// First zero `ξ₁` of the index-3 Lane-Emden solution and `ξ₁²|θ'(ξ₁)|`,
    /// by fixed-step RK4 from the series start.
    fn lane_emden_index_three() -> (f64, f64) {
        let rhs = |x: f64, t: f64, dt: f64| -> (f64, f64) { (dt, -t.max(0.0).powi(3) - 2.0 * dt / x) };
        let h = 1e-4;
        let mut x = 1e-3;
        let (mut t, mut dt) = (1.0 - x * x / 6.0, -x / 3.0);
        loop {
            let k1 = rhs(x, t, dt);
            let k2 = rhs(x + h / 2.0, t + h / 2.0 * k1.0, dt + h / 2.0 * k1.1);
            let k3 = rhs(x + h / 2.0, t + h / 2.0 * k2.0, dt + h / 2.0 * k2.1);
            let k4 = rhs(x + h, t + h * k3.0, dt + h * k3.1);
            let tn = t + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            let dn = dt + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if tn <= 0.0 {
                // θ is nearly linear across the final step
                let s = t / (t - tn);
                let xi = x + s * h;
                let d = dt + s * (dn - dt);
                return (xi, xi * xi * d.abs());
            }
            (x, t, dt) = (x + h, tn, dn);
        }
    }

    #[test]
    fn index_three_polytrope_matches_lane_emden() {
        let (xi1, w) = lane_emden_index_three();
        assert!((xi1 - 6.896_849).abs() < 1e-5 && (w - 2.018_236).abs() < 1e-5, "ξ₁ = {xi1}, w = {w}");
        let p = Polytrope::new(1.5, 1.0, -1.0).unwrap();
        let pot = solve_potential(p, 2048, 1.25, 1e-10).unwrap();
        let psi_c = p.e0.abs() * xi1 / w;
        assert!((pot.phi_at_zero - (p.e0 - psi_c)).abs() < 1e-6 * psi_c, "φ(0) = {}", pot.phi_at_zero);
        let alpha = 1.0 / (p.c_k() * p.kappa * psi_c * psi_c).sqrt();
        assert!((pot.support_radius - alpha * xi1).abs() < 1e-6 * alpha * xi1);
        assert!(pot.poisson_residual < 1e-6, "residual {}", pot.poisson_residual);
        assert!(pot.shooting_residual < 1e-10);
        assert!(pot.phi.windows(2).all(|w| w[0] <= w[1]) && pot.phi.iter().all(|&x| x < 0.0));
        // virial: 2T = ½∫|∇φ|²
        let (t, w2) = (pot.kinetic_energy(), pot.field_energy());
        assert!((2.0 * t - 0.5 * w2).abs() < 1e-7 * t, "T = {t}, W = {w2}");
    }
}
