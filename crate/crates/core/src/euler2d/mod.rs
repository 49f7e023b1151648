//! 2D Euler in vorticity form: steady states, momentum functionals, strip
//! evolution and stability certificates.

mod poisson;
mod stability;
mod strip;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RlabError};
use crate::grid::{DiscGrid, RectGrid};
use crate::measure::{AtomicFunction, Carrier, Cell};
use crate::numeric::ExactSum;

pub use poisson::{poisson_disc_radial, poisson_rect, DiscPoisson, PoissonSolver, RadialProfile, RadialStream, SpectralStrip, StreamField};
pub use stability::{
    build_psi0, certify_euler_domain, certify_euler_symmetric, certify_euler_symmetric_compact, psi0_curve,
    Psi0Curve, Psi0Options,
};
pub use strip::{evolve_strip, EvolveOptions, Trajectory, TrajectorySample};

/// Grid carrying a vorticity field.
#[derive(Clone, Debug)]
pub enum EulerGrid {
    Rect(RectGrid),
    Disc(DiscGrid),
}

impl EulerGrid {
    pub fn carrier(&self) -> &Arc<Carrier> {
        match self {
            EulerGrid::Rect(g) => &g.carrier,
            EulerGrid::Disc(g) => &g.carrier,
        }
    }

    pub fn len(&self) -> usize {
        self.carrier().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Discrete `(−Δ)^{-1}` with homogeneous Dirichlet data (periodic in `x1` on rectangles).
    pub fn solver(&self) -> Box<dyn PoissonSolver> {
        match self {
            EulerGrid::Rect(g) => Box::new(SpectralStrip::new(g)),
            EulerGrid::Disc(g) => Box::new(DiscPoisson::new(g)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VorticityField {
    grid: EulerGrid,
    values: Vec<f64>,
}

impl VorticityField {
    pub fn new(grid: EulerGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(RlabError::InvalidFunction(format!("{} values for {} cells", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(RlabError::InvalidFunction(format!("vorticity at cell {i} is {}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn from_atoms(grid: EulerGrid, f: &AtomicFunction) -> Result<Self> {
        if !Arc::ptr_eq(f.carrier(), grid.carrier()) {
            return Err(RlabError::NotCoAtomic);
        }
        Self::new(grid, f.values().to_vec())
    }

    pub fn grid(&self) -> &EulerGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn as_atoms(&self) -> AtomicFunction {
        AtomicFunction::new(Arc::clone(self.grid.carrier()), self.values.clone()).expect("validated on construction")
    }
}

#[derive(Clone, Debug)]
pub enum SteadyKind {
    /// `ω₀ = G(|x|)` with `G` nonincreasing.
    Radial,
    /// `ω₀ = F(x₂)` with `F` nonincreasing.
    Shear,
    /// `ω₀ = F(ψ₀)`, `−Δψ₀ = ω₀`.
    StreamMonotone { psi0: Vec<f64>, residual_history: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct SteadyStateEuler {
    pub kind: SteadyKind,
    pub field: VorticityField,
}

impl SteadyStateEuler {
    pub fn radial<G: Fn(f64) -> f64>(grid: &DiscGrid, g: G) -> Result<Self> {
        let profile: Vec<f64> = grid.nodes.iter().map(|&r| g(r)).collect();
        if profile.windows(2).any(|w| w[1] > w[0]) {
            return Err(RlabError::InvalidProfile("radial profile must be nonincreasing in |x|".into()));
        }
        let field = VorticityField::new(EulerGrid::Disc(grid.clone()), grid.radial_values(g))?;
        Ok(Self { kind: SteadyKind::Radial, field })
    }

    pub fn shear<F: Fn(f64) -> f64>(grid: &RectGrid, f: F) -> Result<Self> {
        let profile: Vec<f64> = (0..grid.n2).map(|j| f(grid.x2(j))).collect();
        if profile.windows(2).any(|w| w[1] > w[0]) {
            return Err(RlabError::InvalidProfile("shear profile must be nonincreasing in x2".into()));
        }
        let field = VorticityField::new(EulerGrid::Rect(grid.clone()), grid.values(|_, y| f(y)))?;
        Ok(Self { kind: SteadyKind::Shear, field })
    }

    pub fn psi0(&self) -> Option<&[f64]> {
        match &self.kind {
            SteadyKind::StreamMonotone { psi0, .. } => Some(psi0),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    /// `∫|x|² ω`.
    pub a: f64,
    /// `∫x₂ ω`.
    pub b: f64,
    /// `½∫ψω`.
    pub h: f64,
    /// `½∫|∇ψ|²` from the discrete Dirichlet form.
    pub h_gradient: f64,
}

impl Momentum {
    pub fn h_mismatch(&self) -> f64 {
        (self.h - self.h_gradient).abs() / self.h.abs().max(f64::MIN_POSITIVE)
    }
}

/// Cell averages of `|x|²` and `x₂`.
pub(crate) fn cell_moments(cell: &Cell) -> (f64, f64) {
    match *cell {
        Cell::Polar { r0, r1, t0, t1 } => {
            let r2 = 0.5 * (r0 * r0 + r1 * r1);
            let x2 = 2.0 / 3.0 * (r1.powi(3) - r0.powi(3)) * (t0.cos() - t1.cos()) / ((r1 * r1 - r0 * r0) * (t1 - t0));
            (r2, x2)
        }
        Cell::Rect { x0, x1, y0, y1 } => {
            let sq = |a: f64, b: f64| (a * a + a * b + b * b) / 3.0;
            (sq(x0, x1) + sq(y0, y1), 0.5 * (y0 + y1))
        }
        Cell::Shell { r0, r1, .. } => {
            let r2 = 0.6 * (r1.powi(5) - r0.powi(5)) / (r1.powi(3) - r0.powi(3));
            (r2, 0.0)
        }
    }
}

pub fn momentum_functionals(omega: &VorticityField) -> Result<Momentum> {
    let carrier = omega.grid.carrier();
    let cells = carrier.cells().ok_or_else(|| RlabError::Unsupported("momentum needs cell geometry".into()))?;
    let (mut a, mut b) = (ExactSum::new(), ExactSum::new());
    for ((c, w), v) in cells.iter().zip(carrier.weights()).zip(&omega.values) {
        let (r2, x2) = cell_moments(c);
        a.add(r2 * w * v);
        b.add(x2 * w * v);
    }
    let solver = omega.grid.solver();
    let psi = solver.solve(&omega.values);
    let mut h = ExactSum::new();
    for ((p, w), v) in psi.iter().zip(carrier.weights()).zip(&omega.values) {
        h.add(0.5 * p * w * v);
    }
    Ok(Momentum { a: a.value(), b: b.value(), h: h.value(), h_gradient: 0.5 * solver.dirichlet_energy(&psi) })
}

/// `½∫ψω` for a field given on the solver's grid.
pub(crate) fn kinetic_energy(solver: &dyn PoissonSolver, weights: &[f64], omega: &[f64]) -> (f64, Vec<f64>) {
    let psi = solver.solve(omega);
    let mut h = ExactSum::new();
    for ((p, w), v) in psi.iter().zip(weights).zip(omega) {
        h.add(0.5 * p * w * v);
    }
    (h.value(), psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::mu_of;
    use std::f64::consts::PI;

    #[test]
    fn disc_momentum_matches_distribution_identity() {
        let g = DiscGrid::new(1.0, 64, 64).unwrap();
        let q = SteadyStateEuler::radial(&g, |r| (1.0 - r * r).max(0.0)).unwrap();
        let m = momentum_functionals(&q.field).unwrap();
        assert!((m.a - PI / 6.0).abs() < 5e-3 * PI / 6.0, "A = {}", m.a);
        let mu = mu_of(&q.field.as_atoms());
        let int_mu2 = crate::measure::integrate_profiles(&[&mu], 1.0, |v| v[0] * v[0]);
        assert!((int_mu2 - PI * PI / 3.0).abs() < 5e-3 * PI * PI / 3.0);
        assert!((m.a - int_mu2 / (2.0 * PI)).abs() < 5e-3 * m.a);
        assert!(m.h_mismatch() < 1e-6);
    }

    #[test]
    fn shear_momentum_and_zero_field() {
        let g = RectGrid::new(1.0, 1.0, 16, 64).unwrap();
        let q = SteadyStateEuler::shear(&g, |y| (1.0 - y).max(0.0)).unwrap();
        let m = momentum_functionals(&q.field).unwrap();
        // midpoint rule on x2(1 − x2) is off by h²/12 · ∫1
        assert!((m.b - 1.0 / 6.0).abs() < 1e-4);
        assert!(m.h_mismatch() < 1e-6);
        let z = VorticityField::new(EulerGrid::Rect(g), vec![0.0; 16 * 64]).unwrap();
        let mz = momentum_functionals(&z).unwrap();
        assert_eq!((mz.a, mz.b, mz.h), (0.0, 0.0, 0.0));
    }

    #[test]
    fn increasing_profiles_are_rejected() {
        let g = DiscGrid::new(1.0, 4, 4).unwrap();
        assert!(SteadyStateEuler::radial(&g, |r| r).is_err());
        let r = RectGrid::new(1.0, 1.0, 4, 4).unwrap();
        assert!(SteadyStateEuler::shear(&r, |y| y).is_err());
        assert!(VorticityField::new(EulerGrid::Rect(r), vec![-1.0; 16]).is_err());
    }
}
