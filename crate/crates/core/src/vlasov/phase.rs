use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RlabError};
use crate::measure::{AtomicFunction, Carrier, Cell};

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gl8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for k in 0..8 {
        s += GL8_W[k] * f(mid + half * GL8_X[k]);
    }
    half * s
}

/// Geometry of a radial phase-space carrier: radial shells and per-atom
/// velocity moments.
#[derive(Clone, Debug)]
pub struct PhaseModel {
    root: Arc<Carrier>,
    pub r_edges: Vec<f64>,
    /// Radial shell of every root atom.
    shell: Vec<u32>,
    /// Cell average of `|v|²/2` (weight `v²`) for every root atom.
    kinetic: Vec<f64>,
}

/// Potential of a radial density that is constant on every shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellField {
    pub shell_mass: Vec<f64>,
    /// Shell average of `φ` with weight `r²`.
    pub shell_phi: Vec<f64>,
    pub phi_at_zero: f64,
    /// `∫|∇φ|²` over all of `R³`, exterior included.
    pub gradient_sq: f64,
}

impl PhaseModel {
    pub fn new(carrier: &Arc<Carrier>) -> Result<Self> {
        let root = Arc::clone(carrier.root());
        let cells = root.cells().ok_or_else(|| RlabError::Unsupported("phase model needs shell cells".into()))?;
        let mut shells: Vec<(f64, f64)> = Vec::new();
        let mut kinetic = Vec::with_capacity(cells.len());
        for c in cells {
            match *c {
                Cell::Shell { r0, r1, v0, v1 } => {
                    shells.push((r0, r1));
                    let d3 = v1.powi(3) - v0.powi(3);
                    kinetic.push(0.3 * (v1.powi(5) - v0.powi(5)) / d3);
                }
                _ => return Err(RlabError::Unsupported("phase model needs shell cells".into())),
            }
        }
        let mut edges: Vec<(f64, f64)> = shells.clone();
        edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        edges.dedup();
        if edges.windows(2).any(|w| w[0].1 != w[1].0) {
            return Err(RlabError::InvalidDomain("radial shells must tile an interval".into()));
        }
        let mut r_edges: Vec<f64> = edges.iter().map(|e| e.0).collect();
        r_edges.push(edges.last().map(|e| e.1).unwrap_or(0.0));
        let shell = shells
            .iter()
            .map(|s| r_edges.partition_point(|&x| x < s.0) as u32)
            .collect();
        Ok(Self { root, r_edges, shell, kinetic })
    }

    pub fn nr(&self) -> usize {
        self.r_edges.len() - 1
    }

    pub fn shell_of(&self, atom: usize) -> usize {
        self.shell[atom] as usize
    }

    pub fn root(&self) -> &Arc<Carrier> {
        &self.root
    }

    fn check(&self, f: &AtomicFunction) -> Result<()> {
        if Arc::ptr_eq(f.carrier().root(), &self.root) {
            Ok(())
        } else {
            Err(RlabError::NotCoAtomic)
        }
    }

    fn per_atom<G: Fn(usize) -> f64>(&self, f: &AtomicFunction, g: G) -> f64 {
        let w = f.weights();
        match f.carrier().parent_index() {
            None => f.values().iter().zip(w).enumerate().map(|(i, (v, w))| v * w * g(i)).sum(),
            Some(p) => f.values().iter().zip(w).zip(p).map(|((v, w), &i)| v * w * g(i as usize)).sum(),
        }
    }

    /// `∫|v|²/2 f`.
    pub fn kinetic_energy(&self, f: &AtomicFunction) -> Result<f64> {
        self.check(f)?;
        Ok(self.per_atom(f, |i| self.kinetic[i]))
    }

    /// Mass of `f` in every radial shell.
    pub fn shell_masses(&self, f: &AtomicFunction) -> Result<Vec<f64>> {
        self.check(f)?;
        let mut m = vec![0.0; self.nr()];
        let w = f.weights();
        match f.carrier().parent_index() {
            None => {
                for (i, (v, w)) in f.values().iter().zip(w).enumerate() {
                    m[self.shell[i] as usize] += v * w;
                }
            }
            Some(p) => {
                for ((v, w), &i) in f.values().iter().zip(w).zip(p) {
                    m[self.shell[i as usize] as usize] += v * w;
                }
            }
        }
        Ok(m)
    }

    /// Potential `Δφ = ρ`, `φ → 0` at infinity, for shell masses `mass`
    /// (signed masses are allowed).
    pub fn field(&self, mass: &[f64]) -> ShellField {
        let e = &self.r_edges;
        let n = self.nr();
        let mut m_in = vec![0.0; n + 1];
        for i in 0..n {
            m_in[i + 1] = m_in[i] + mass[i];
        }
        let total = m_in[n];
        let r_out = e[n];
        let m_at = |i: usize, r: f64| -> f64 {
            let (a, b) = (e[i], e[i + 1]);
            m_in[i] + mass[i] * (r.powi(3) - a.powi(3)) / (b.powi(3) - a.powi(3))
        };
        let mut edge_phi = vec![0.0; n + 1];
        edge_phi[n] = -total / (4.0 * PI * r_out);
        let mut shell_phi = vec![0.0; n];
        let mut grad = total * total / (4.0 * PI * r_out);
        for i in (0..n).rev() {
            let (a, b) = (e[i], e[i + 1]);
            let slope = |r: f64| m_at(i, r) / (4.0 * PI * r * r);
            let rise = gl8(slope, a, b);
            edge_phi[i] = edge_phi[i + 1] - rise;
            let vol = (b.powi(3) - a.powi(3)) / 3.0;
            // ∫_a^b r² φ = φ(a)·vol + ∫_a^b φ'(s)(b³ − s³)/3 ds
            let inner = gl8(|s| slope(s) * (b.powi(3) - s.powi(3)) / 3.0, a, b);
            shell_phi[i] = edge_phi[i] + inner / vol;
            grad += gl8(|r| m_at(i, r).powi(2) / (4.0 * PI * r * r), a, b);
        }
        ShellField { shell_mass: mass.to_vec(), shell_phi, phi_at_zero: edge_phi[0], gradient_sq: grad }
    }

    pub fn field_of(&self, f: &AtomicFunction) -> Result<ShellField> {
        Ok(self.field(&self.shell_masses(f)?))
    }

    /// `∫|v|²/2 f − ½∫|∇φ_f|²`.
    pub fn hamiltonian(&self, f: &AtomicFunction) -> Result<f64> {
        let field = self.field_of(f)?;
        Ok(self.kinetic_energy(f)? - 0.5 * field.gradient_sq)
    }

    /// `|v|²/2 + φ(r)` per root atom, with `φ` the shell average of `field`.
    pub fn energy_values(&self, field: &ShellField) -> Vec<f64> {
        self.kinetic.iter().zip(&self.shell).map(|(k, &s)| k + field.shell_phi[s as usize]).collect()
    }
}

/// `∫|v|²/2 f − ½∫|∇φ_f|²` with the field of the shell-constant density of `f`.
pub fn hamiltonian_vp(f: &AtomicFunction) -> Result<f64> {
    PhaseModel::new(f.carrier())?.hamiltonian(f)
}

/// `‖∇φ_f‖₂` next to `‖|v|²f‖₁^{1/2} ‖f‖₁^{7/6} ‖f‖∞^{1/3}`.
///
/// Under `f → λf` the product scales like `λ²`, as does `‖∇φ_f‖₂²`, so the
/// scale-free ratio uses the squared gradient norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub gradient_l2: f64,
    pub gradient_l2_sq: f64,
    pub product: f64,
    /// `‖∇φ_f‖₂² / product`, zero for `f ≡ 0`.
    pub ratio: f64,
    /// `‖∇φ_f‖₂ / product`, not scale-free.
    pub ratio_unsquared: f64,
}

pub fn interpolation_diag(f: &AtomicFunction) -> Result<InterpolationReport> {
    let model = PhaseModel::new(f.carrier())?;
    let g2 = model.field_of(f)?.gradient_sq.max(0.0);
    let kin2 = 2.0 * model.kinetic_energy(f)?;
    let product = kin2.sqrt() * f.integral().powf(7.0 / 6.0) * f.max_value().cbrt();
    let div = |x: f64| if product > 0.0 { x / product } else { 0.0 };
    Ok(InterpolationReport { gradient_l2: g2.sqrt(), gradient_l2_sq: g2, product, ratio: div(g2), ratio_unsquared: div(g2.sqrt()) })
}
