use serde::{Deserialize, Serialize};

use super::poisson::SpectralStrip;
use super::{momentum_functionals, EulerGrid, VorticityField};
use crate::error::{Result, RlabError};
use crate::measure::rearranged_l1_distance;
use crate::numeric::exact_sum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Record a sample every this many steps (the initial and final states are always kept).
    pub sample_every: usize,
    /// Abort when `dt·(max|u₁|/h₁ + max|u₂|/h₂)` exceeds this.
    pub cfl_max: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { sample_every: 25, cfl_max: 0.8 }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub t: f64,
    /// Raw state of the scheme; may carry small negative undershoots.
    pub values: Vec<f64>,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    /// `‖ω(t)* − ω(0)*‖₁ / ‖ω(0)‖₁`.
    pub distribution_drift: f64,
    /// Measure-weighted mass of the negative part.
    pub negative_mass: f64,
    pub cfl: f64,
}

impl TrajectorySample {
    /// Nonnegative field from the sample, undershoots clamped to zero.
    pub fn clamped(&self, grid: &EulerGrid) -> VorticityField {
        VorticityField::new(grid.clone(), self.values.iter().map(|v| v.max(0.0)).collect())
            .expect("clamped sample is nonnegative")
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: EulerGrid,
    pub dt: f64,
    pub steps: usize,
    pub max_cfl: f64,
    pub samples: Vec<TrajectorySample>,
}

fn weighted_sum(w: &[f64], v: &[f64], g: impl Fn(usize) -> f64) -> f64 {
    exact_sum(w.iter().zip(v).enumerate().map(|(i, (w, v))| g(i) * w * v))
}

/// Pseudo-spectral RK4 integration of `∂ₜω + ∇^⊥ψ·∇ω = 0` on the periodic strip.
pub fn evolve_strip(omega0: &VorticityField, t_final: f64, dt: f64, opts: EvolveOptions) -> Result<Trajectory> {
    let grid = match omega0.grid() {
        EulerGrid::Rect(g) => g.clone(),
        EulerGrid::Disc(_) => return Err(RlabError::Unsupported("time evolution is provided on the strip only".into())),
    };
    if !(t_final >= 0.0 && dt > 0.0 && t_final.is_finite()) || opts.sample_every == 0 {
        return Err(RlabError::OutOfRange("need T ≥ 0, dt > 0, sample_every ≥ 1".into()));
    }
    let steps = (t_final / dt).ceil() as usize;
    let dt = if steps == 0 { dt } else { t_final / steps as f64 };
    let solver = SpectralStrip::new(&grid);
    let w = grid.carrier.weights().to_vec();
    let x2: Vec<f64> = (0..grid.len()).map(|i| grid.x2(i / grid.n1)).collect();
    let m0 = weighted_sum(&w, omega0.values(), |_| 1.0);
    let b0 = momentum_functionals(omega0)?.b;
    let start = omega0.as_atoms();
    let rel = |x: f64, x0: f64| (x - x0).abs() / x0.abs().max(f64::MIN_POSITIVE);

    let sample = |t: f64, v: &[f64], cfl: f64| -> Result<TrajectorySample> {
        let mass = weighted_sum(&w, v, |_| 1.0);
        let b = weighted_sum(&w, v, |i| x2[i]);
        let negative_mass = exact_sum(w.iter().zip(v).map(|(w, v)| w * (-v).max(0.0)));
        let clamped = VorticityField::new(EulerGrid::Rect(grid.clone()), v.iter().map(|x| x.max(0.0)).collect())?;
        let dd = rearranged_l1_distance(&clamped.as_atoms(), &start) / m0.abs().max(f64::MIN_POSITIVE);
        Ok(TrajectorySample {
            t,
            values: v.to_vec(),
            mass_drift: rel(mass, m0),
            momentum_drift: rel(b, b0),
            distribution_drift: dd,
            negative_mass,
            cfl,
        })
    };

    let mut state = omega0.values().to_vec();
    let (_, c0) = solver.advective_tendency(&state);
    let mut samples = vec![sample(0.0, &state, c0 * dt)?];
    let mut max_cfl = c0 * dt;
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + s * y).collect() };
    for step in 1..=steps {
        let (k1, c) = solver.advective_tendency(&state);
        let cfl = c * dt;
        max_cfl = max_cfl.max(cfl);
        if cfl > opts.cfl_max {
            return Err(RlabError::OutOfRange(format!(
                "CFL number {cfl:.3} exceeds {} at t = {:.4}; reduce dt",
                opts.cfl_max,
                (step - 1) as f64 * dt
            )));
        }
        let (k2, _) = solver.advective_tendency(&axpy(&state, &k1, 0.5 * dt));
        let (k3, _) = solver.advective_tendency(&axpy(&state, &k2, 0.5 * dt));
        let (k4, _) = solver.advective_tendency(&axpy(&state, &k3, dt));
        for i in 0..state.len() {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % opts.sample_every == 0 || step == steps {
            samples.push(sample(step as f64 * dt, &state, cfl)?);
        }
    }
    Ok(Trajectory { grid: EulerGrid::Rect(grid), dt, steps, max_cfl, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler2d::SteadyStateEuler;
    use crate::grid::RectGrid;
    use std::f64::consts::PI;

    #[test]
    fn shear_and_constant_states_stay_put() {
        let g = RectGrid::new(1.0, 1.0, 32, 32).unwrap();
        let q = SteadyStateEuler::shear(&g, |y| (1.0 - y).max(0.0)).unwrap();
        let tr = evolve_strip(&q.field, 0.2, 0.01, EvolveOptions { sample_every: 5, cfl_max: 0.8 }).unwrap();
        let last = tr.samples.last().unwrap();
        let scale = q.field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in last.values.iter().zip(q.field.values()) {
            assert!((a - b).abs() < 1e-8 * scale);
        }
        let c = VorticityField::new(q.field.grid().clone(), vec![0.7; 32 * 32]).unwrap();
        let tr = evolve_strip(&c, 0.1, 0.01, EvolveOptions::default()).unwrap();
        assert!(tr.samples.last().unwrap().values.iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn perturbed_shear_conserves_mass_and_momentum() {
        let g = RectGrid::new(1.0, 1.0, 32, 32).unwrap();
        let v = g.values(|x, y| (1.0 - y) + 0.05 * (2.0 * PI * x).sin() * (PI * y).sin());
        let f = VorticityField::new(EulerGrid::Rect(g), v).unwrap();
        let tr = evolve_strip(&f, 0.25, 0.01, EvolveOptions { sample_every: 5, cfl_max: 0.8 }).unwrap();
        for s in &tr.samples {
            assert!(s.mass_drift < 1e-12, "mass drift {}", s.mass_drift);
            assert!(s.momentum_drift < 1e-5, "momentum drift {}", s.momentum_drift);
        }
        assert!(evolve_strip(&f, 0.1, 0.2, EvolveOptions::default()).is_err());
    }
}
