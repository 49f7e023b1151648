use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{EulerGrid, VorticityField};
use crate::error::{Result, RlabError};
use crate::grid::{DiscGrid, RectGrid};
use crate::numeric::{solve_tridiagonal, ExactSum};

/// A discrete inverse Laplacian `G` with `W·G` symmetric, `W` the cell weights.
pub trait PoissonSolver: Send + Sync {
    /// `ψ = G ω`.
    fn solve(&self, omega: &[f64]) -> Vec<f64>;
    /// `−Δ_h ψ`, the inverse of [`PoissonSolver::solve`].
    fn apply(&self, psi: &[f64]) -> Vec<f64>;
    /// Discrete `∫|∇ψ|²`, equal to `⟨ψ, −Δ_h ψ⟩_W`.
    fn dirichlet_energy(&self, psi: &[f64]) -> f64;
}

fn signed(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Fourier (periodic `x1`) by sine (Dirichlet `x2`) solver on a cell-centred
/// rectangle grid, built on the doubled grid `n1 × 2n2` with the odd extension
/// in `x2`. Extended index `j * n1 + i`; row `j ≥ n2` mirrors row `2n2 − 1 − j`.
pub struct SpectralStrip {
    pub(crate) n1: usize,
    pub(crate) n2: usize,
    pub(crate) h1: f64,
    pub(crate) h2: f64,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    /// Wavenumbers for the Laplacian symbol.
    k1: Vec<f64>,
    k2: Vec<f64>,
    /// Derivative wavenumbers, zero at Nyquist.
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// 2/3-rule mask on the extended spectrum.
    pub(crate) keep1: Vec<bool>,
    pub(crate) keep2: Vec<bool>,
}

impl SpectralStrip {
    pub fn new(grid: &RectGrid) -> Self {
        let (n1, n2) = (grid.n1, grid.n2);
        let m2 = 2 * n2;
        let mut planner = FftPlanner::new();
        let wave = |n: usize, len: f64| -> (Vec<f64>, Vec<f64>, Vec<bool>) {
            let mut k = Vec::with_capacity(n);
            let mut d = Vec::with_capacity(n);
            let mut keep = Vec::with_capacity(n);
            for i in 0..n {
                let s = signed(i, n);
                k.push(2.0 * PI * s / len);
                d.push(if n.is_multiple_of(2) && 2 * i == n { 0.0 } else { 2.0 * PI * s / len });
                keep.push(3.0 * s.abs() <= n as f64);
            }
            (k, d, keep)
        };
        let (k1, d1, keep1) = wave(n1, grid.l1);
        let (k2, d2, keep2) = wave(m2, 2.0 * grid.l2);
        let (h1, h2) = grid.h();
        Self {
            n1,
            n2,
            h1,
            h2,
            fwd1: planner.plan_fft_forward(n1),
            inv1: planner.plan_fft_inverse(n1),
            fwd2: planner.plan_fft_forward(m2),
            inv2: planner.plan_fft_inverse(m2),
            k1,
            k2,
            d1,
            d2,
            keep1,
            keep2,
        }
    }

    pub(crate) fn extended_len(&self) -> usize {
        2 * self.n1 * self.n2
    }

    fn mirror(&self, j: usize) -> usize {
        2 * self.n2 - 1 - j
    }

    /// Odd (`sign = −1`) or even (`sign = 1`) extension in `x2`.
    pub(crate) fn extend(&self, phys: &[f64], sign: f64) -> Vec<Complex64> {
        let n1 = self.n1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.extended_len()];
        for j in 0..self.n2 {
            let jm = self.mirror(j);
            for i in 0..n1 {
                let v = phys[j * n1 + i];
                out[j * n1 + i] = Complex64::new(v, 0.0);
                out[jm * n1 + i] = Complex64::new(sign * v, 0.0);
            }
        }
        out
    }

    pub(crate) fn restrict(&self, ext: &[Complex64]) -> Vec<f64> {
        ext[..self.n1 * self.n2].iter().map(|c| c.re).collect()
    }

    pub(crate) fn restrict_real(&self, ext: &[f64]) -> Vec<f64> {
        ext[..self.n1 * self.n2].to_vec()
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (n1, m2) = (self.n1, 2 * self.n2);
        let (f1, f2) = if inverse { (&self.inv1, &self.inv2) } else { (&self.fwd1, &self.fwd2) };
        f1.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); m2];
        for i in 0..n1 {
            for j in 0..m2 {
                col[j] = data[j * n1 + i];
            }
            f2.process(&mut col);
            for j in 0..m2 {
                data[j * n1 + i] = col[j];
            }
        }
        if inverse {
            let s = 1.0 / (n1 * m2) as f64;
            data.iter_mut().for_each(|c| *c *= s);
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    fn kk(&self, i: usize, j: usize) -> f64 {
        self.k1[i] * self.k1[i] + self.k2[j] * self.k2[j]
    }

    /// `ψ̂ = ω̂ / |k|²` of the odd extension of `omega`, in spectral space.
    fn psi_hat(&self, omega: &[f64]) -> Vec<Complex64> {
        let mut w = self.extend(omega, -1.0);
        self.forward(&mut w);
        for j in 0..2 * self.n2 {
            for i in 0..self.n1 {
                let kk = self.kk(i, j);
                let c = &mut w[j * self.n1 + i];
                *c = if kk > 0.0 { *c / kk } else { Complex64::new(0.0, 0.0) };
            }
        }
        w
    }

    /// Stream function on the physical grid and velocity `(−∂₂ψ, ∂₁ψ)` on the extended grid.
    pub(crate) fn stream_and_velocity(&self, omega: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ph = self.psi_hat(omega);
        let n1 = self.n1;
        let mut u1 = ph.clone();
        let mut u2 = ph.clone();
        for j in 0..2 * self.n2 {
            for i in 0..n1 {
                let idx = j * n1 + i;
                u1[idx] = -Complex64::new(0.0, self.d2[j]) * ph[idx];
                u2[idx] = Complex64::new(0.0, self.d1[i]) * ph[idx];
            }
        }
        let mut psi = ph;
        self.inverse(&mut psi);
        self.inverse(&mut u1);
        self.inverse(&mut u2);
        (self.restrict(&psi), u1.iter().map(|c| c.re).collect(), u2.iter().map(|c| c.re).collect())
    }

    /// `−∇·(u ω_e)` for the even extension `ω_e`, 2/3-dealiased, on the physical grid.
    pub(crate) fn advective_tendency(&self, omega: &[f64]) -> (Vec<f64>, f64) {
        let (_, u1, u2) = self.stream_and_velocity(omega);
        let we = self.extend(omega, 1.0);
        let n1 = self.n1;
        let mut f1: Vec<Complex64> = we.iter().zip(&u1).map(|(w, u)| w * u).collect();
        let mut f2: Vec<Complex64> = we.iter().zip(&u2).map(|(w, u)| w * u).collect();
        self.forward(&mut f1);
        self.forward(&mut f2);
        let mut t = f1;
        for j in 0..2 * self.n2 {
            for i in 0..n1 {
                let idx = j * n1 + i;
                t[idx] = if self.keep1[i] && self.keep2[j] {
                    -(Complex64::new(0.0, self.d1[i]) * t[idx] + Complex64::new(0.0, self.d2[j]) * f2[idx])
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
        self.inverse(&mut t);
        let umax1 = u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let umax2 = u2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (self.restrict(&t), umax1 / self.h1 + umax2 / self.h2)
    }

    /// Velocity components restricted to the physical grid.
    pub fn velocity(&self, omega: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (_, u1, u2) = self.stream_and_velocity(omega);
        (self.restrict_real(&u1), self.restrict_real(&u2))
    }
}

impl PoissonSolver for SpectralStrip {
    fn solve(&self, omega: &[f64]) -> Vec<f64> {
        let mut p = self.psi_hat(omega);
        self.inverse(&mut p);
        self.restrict(&p)
    }

    fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let mut w = self.extend(psi, -1.0);
        self.forward(&mut w);
        for j in 0..2 * self.n2 {
            for i in 0..self.n1 {
                w[j * self.n1 + i] *= self.kk(i, j);
            }
        }
        self.inverse(&mut w);
        self.restrict(&w)
    }

    fn dirichlet_energy(&self, psi: &[f64]) -> f64 {
        let mut w = self.extend(psi, -1.0);
        self.forward(&mut w);
        let mut acc = ExactSum::new();
        for j in 0..2 * self.n2 {
            for i in 0..self.n1 {
                acc.add(self.kk(i, j) * w[j * self.n1 + i].norm_sqr());
            }
        }
        // Parseval on the doubled grid, halved back to the physical cells
        let n = self.extended_len() as f64;
        0.5 * acc.value() * self.h1 * self.h2 / n
    }
}

/// Stream function and gradient on a rectangle grid.
#[derive(Clone, Debug)]
pub struct StreamField {
    pub psi: Vec<f64>,
    pub grad1: Vec<f64>,
    pub grad2: Vec<f64>,
}

pub fn poisson_rect(omega: &VorticityField) -> Result<StreamField> {
    let g = match omega.grid() {
        EulerGrid::Rect(g) => g,
        EulerGrid::Disc(_) => return Err(RlabError::Unsupported("poisson_rect needs a rectangle grid".into())),
    };
    let s = SpectralStrip::new(g);
    let (psi, u1, u2) = s.stream_and_velocity(omega.values());
    Ok(StreamField { psi, grad1: s.restrict_real(&u2), grad2: s.restrict_real(&u1).iter().map(|v| -v).collect() })
}

/// Finite volumes in `r` and Fourier modes in `θ` on an equal-area polar grid.
pub struct DiscPoisson {
    nr: usize,
    ntheta: usize,
    dtheta: f64,
    /// Radial transmissibilities at interior edges `1..nr` and at `R`.
    trans: Vec<f64>,
    /// `(b² − a²)/2` per ring.
    vol: Vec<f64>,
    node_sq: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl DiscPoisson {
    pub fn new(grid: &DiscGrid) -> Self {
        let nr = grid.nr;
        let e = &grid.edges;
        let node_sq: Vec<f64> = grid.nodes.iter().map(|r| r * r).collect();
        let mut trans = Vec::with_capacity(nr);
        for k in 0..nr - 1 {
            trans.push(2.0 * e[k + 1] * e[k + 1] / (node_sq[k + 1] - node_sq[k]));
        }
        let rr = grid.radius * grid.radius;
        trans.push(2.0 * rr / (rr - node_sq[nr - 1]));
        let vol = (0..nr).map(|k| 0.5 * (e[k + 1] * e[k + 1] - e[k] * e[k])).collect();
        let mut planner = FftPlanner::new();
        Self {
            nr,
            ntheta: grid.ntheta,
            dtheta: 2.0 * PI / grid.ntheta as f64,
            trans,
            vol,
            node_sq,
            fwd: planner.plan_fft_forward(grid.ntheta),
            inv: planner.plan_fft_inverse(grid.ntheta),
        }
    }

    /// Per-ring FFT; rings holding one value map to an exact zero-mode delta so
    /// that radial data stays bitwise radial through a solve.
    fn to_modes(&self, x: &[f64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for (ring, vals) in out.chunks_mut(self.ntheta).zip(x.chunks(self.ntheta)) {
            if vals.iter().all(|v| v.to_bits() == vals[0].to_bits()) {
                ring.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                ring[0] = Complex64::new(vals[0] * self.ntheta as f64, 0.0);
            } else {
                self.fwd.process(ring);
            }
        }
        out
    }

    fn from_modes(&self, mut x: Vec<Complex64>) -> Vec<f64> {
        let s = 1.0 / self.ntheta as f64;
        let mut out = Vec::with_capacity(x.len());
        for ring in x.chunks_mut(self.ntheta) {
            if ring[1..].iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                let v = ring[0].re * s;
                out.extend(std::iter::repeat_n(v, ring.len()));
            } else {
                self.inv.process(ring);
                out.extend(ring.iter().map(|c| c.re * s));
            }
        }
        out
    }

    fn angular(&self, k: usize, n: usize) -> f64 {
        let m = signed(n, self.ntheta);
        self.vol[k] * m * m / self.node_sq[k]
    }

    fn diag(&self, k: usize, n: usize) -> f64 {
        let inner = if k == 0 { 0.0 } else { self.trans[k - 1] };
        inner + self.trans[k] + self.angular(k, n)
    }
}

impl PoissonSolver for DiscPoisson {
    fn solve(&self, omega: &[f64]) -> Vec<f64> {
        let (nr, nt) = (self.nr, self.ntheta);
        let mut hat = self.to_modes(omega);
        let lower: Vec<f64> = (0..nr).map(|k| if k == 0 { 0.0 } else { -self.trans[k - 1] }).collect();
        let upper: Vec<f64> = (0..nr).map(|k| if k + 1 < nr { -self.trans[k] } else { 0.0 }).collect();
        let mut re = vec![0.0; nr];
        let mut im = vec![0.0; nr];
        for n in 0..nt {
            let diag: Vec<f64> = (0..nr).map(|k| self.diag(k, n)).collect();
            for k in 0..nr {
                let c = hat[k * nt + n] * self.vol[k];
                re[k] = c.re;
                im[k] = c.im;
            }
            solve_tridiagonal(&lower, &diag, &upper, &mut re);
            solve_tridiagonal(&lower, &diag, &upper, &mut im);
            for k in 0..nr {
                hat[k * nt + n] = Complex64::new(re[k], im[k]);
            }
        }
        self.from_modes(hat)
    }

    fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let (nr, nt) = (self.nr, self.ntheta);
        let hat = self.to_modes(psi);
        let mut out = vec![Complex64::new(0.0, 0.0); nr * nt];
        for n in 0..nt {
            for k in 0..nr {
                let mut v = hat[k * nt + n] * self.diag(k, n);
                if k > 0 {
                    v -= hat[(k - 1) * nt + n] * self.trans[k - 1];
                }
                if k + 1 < nr {
                    v -= hat[(k + 1) * nt + n] * self.trans[k];
                }
                out[k * nt + n] = v / self.vol[k];
            }
        }
        self.from_modes(out)
    }

    fn dirichlet_energy(&self, psi: &[f64]) -> f64 {
        let (nr, nt) = (self.nr, self.ntheta);
        let mut acc = ExactSum::new();
        for k in 0..nr {
            for j in 0..nt {
                let here = psi[k * nt + j];
                let next = if k + 1 < nr { psi[(k + 1) * nt + j] } else { 0.0 };
                acc.add(self.dtheta * self.trans[k] * (next - here) * (next - here));
            }
        }
        let hat = self.to_modes(psi);
        for k in 0..nr {
            for n in 0..nt {
                acc.add(self.dtheta * self.angular(k, n) * hat[k * nt + n].norm_sqr() / nt as f64);
            }
        }
        acc.value()
    }
}

/// Piecewise-constant radial profile: `values[k]` on `[edges[k], edges[k+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 || edges.first() != Some(&0.0) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RlabError::InvalidProfile("radial edges must start at 0, increase, and bracket the values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RlabError::InvalidProfile("radial values must be finite".into()));
        }
        Ok(Self { edges, values })
    }

    pub fn radius(&self) -> f64 {
        *self.edges.last().unwrap()
    }
}

/// Exact solution of `−(1/r)(rψ')' = ω(r)`, `ψ(R) = 0`, for piecewise-constant `ω`.
#[derive(Clone, Debug)]
pub struct RadialStream {
    profile: RadialProfile,
    /// `m(r) = ∫₀^r ω(s) s ds` at the edges.
    flux: Vec<f64>,
    /// `ψ` at the edges.
    psi_edges: Vec<f64>,
}

impl RadialStream {
    /// `ψ(r) − ψ(a)` inside the ring starting at `a`.
    fn ring_increment(a: f64, m_a: f64, c: f64, r: f64) -> f64 {
        let log = if a > 0.0 { (m_a - 0.5 * c * a * a) * (r / a).ln() } else { 0.0 };
        -log - 0.25 * c * (r * r - a * a)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let e = &self.profile.edges;
        if r >= self.profile.radius() {
            return 0.0;
        }
        let k = e.partition_point(|&x| x <= r) - 1;
        self.psi_edges[k] + Self::ring_increment(e[k], self.flux[k], self.profile.values[k], r)
    }

    /// `ψ'(r) = −m(r)/r`.
    pub fn derivative(&self, r: f64) -> f64 {
        let e = &self.profile.edges;
        if r <= 0.0 {
            return 0.0;
        }
        let k = (e.partition_point(|&x| x <= r) - 1).min(self.profile.values.len() - 1);
        let m = self.flux[k] + 0.5 * self.profile.values[k] * (r * r - e[k] * e[k]);
        -m / r
    }
}

pub fn poisson_disc_radial(omega: &RadialProfile) -> Result<RadialStream> {
    let r_max = omega.radius();
    if !r_max.is_finite() {
        return Err(RlabError::InvalidDomain("radial Poisson solve needs a finite radius".into()));
    }
    let e = &omega.edges;
    let n = omega.values.len();
    let mut flux = vec![0.0; n + 1];
    for k in 0..n {
        flux[k + 1] = flux[k] + 0.5 * omega.values[k] * (e[k + 1] * e[k + 1] - e[k] * e[k]);
    }
    // ψ(0) is fixed by ψ(R) = 0; accumulate increments outward then shift
    let mut psi_edges = vec![0.0; n + 1];
    for k in 0..n {
        psi_edges[k + 1] = psi_edges[k] + RadialStream::ring_increment(e[k], flux[k], omega.values[k], e[k + 1]);
    }
    let shift = psi_edges[n];
    psi_edges.iter_mut().for_each(|p| *p -= shift);
    Ok(RadialStream { profile: omega.clone(), flux, psi_edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn sine_mode_is_an_exact_eigenfunction() {
        let g = RectGrid::new(2.0, 1.5, 16, 32).unwrap();
        let l2 = g.l2;
        let w = VorticityField::new(EulerGrid::Rect(g.clone()), g.values(|_, y| (PI * y / l2).sin())).unwrap();
        let s = poisson_rect(&w).unwrap();
        let exact = g.values(|_, y| (l2 / PI).powi(2) * (PI * y / l2).sin());
        assert!(max_err(&s.psi, &exact) < 1e-10);
        let dexact = g.values(|_, y| (l2 / PI) * (PI * y / l2).cos());
        assert!(max_err(&s.grad2, &dexact) < 1e-10);
        assert!(s.grad1.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mixed_mode_divides_by_its_eigenvalue() {
        let g = RectGrid::new(1.0, 1.0, 32, 32).unwrap();
        let lam = (2.0 * PI * 3.0).powi(2) + (2.0 * PI).powi(2);
        let omega: Vec<f64> = g.values(|x, y| (6.0 * PI * x).cos() * (2.0 * PI * y).sin());
        let s = SpectralStrip::new(&g);
        let psi = s.solve(&omega);
        let exact: Vec<f64> = omega.iter().map(|v| v / lam).collect();
        assert!(max_err(&psi, &exact) < 1e-12);
        let back = s.apply(&psi);
        assert!(max_err(&back, &omega) < 1e-10);
        assert!(s.solve(&vec![0.0; 32 * 32]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disc_fv_is_exact_for_uniform_vorticity() {
        let g = DiscGrid::new(1.0, 24, 16).unwrap();
        let p = DiscPoisson::new(&g);
        let psi = p.solve(&vec![2.0; g.len()]);
        let exact = g.radial_values(|r| 2.0 * (1.0 - r * r) / 4.0);
        assert!(max_err(&psi, &exact) < 1e-12);
        let back = p.apply(&psi);
        assert!(back.iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn disc_fv_inverse_and_symmetry() {
        let g = DiscGrid::new(1.0, 12, 8).unwrap();
        let p = DiscPoisson::new(&g);
        let a: Vec<f64> = (0..g.len()).map(|i| ((i * 37 % 11) as f64).sin().abs()).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| ((i * 13 % 7) as f64).cos().abs()).collect();
        let ga = p.solve(&a);
        let gb = p.solve(&b);
        let w = g.carrier.weights();
        let ab: f64 = ga.iter().zip(&b).zip(w).map(|((x, y), w)| x * y * w).sum();
        let ba: f64 = gb.iter().zip(&a).zip(w).map(|((x, y), w)| x * y * w).sum();
        assert!((ab - ba).abs() < 1e-12 * ab.abs());
        assert!(max_err(&p.apply(&ga), &a) < 1e-10);
        let e = p.dirichlet_energy(&ga);
        let pw: f64 = ga.iter().zip(&a).zip(w).map(|((x, y), w)| x * y * w).sum();
        assert!((e - pw).abs() < 1e-10 * pw);
    }

    #[test]
    fn radial_quadrature_matches_closed_forms() {
        let prof = RadialProfile::new(vec![0.0, 0.3, 0.7, 1.0], vec![1.0; 3]).unwrap();
        let s = poisson_disc_radial(&prof).unwrap();
        for r in [0.0, 0.1, 0.3, 0.5, 0.99] {
            assert!((s.eval(r) - (1.0 - r * r) / 4.0).abs() < 1e-14);
        }
        let zero = poisson_disc_radial(&RadialProfile::new(vec![0.0, 1.0], vec![0.0]).unwrap()).unwrap();
        assert_eq!(zero.eval(0.4), 0.0);
        // thin shell with m = ∫ω r dr: ψ = −m ln(r/R) outside it
        let shell = RadialProfile::new(vec![0.0, 0.4, 0.41, 2.0], vec![0.0, 50.0, 0.0]).unwrap();
        let s = poisson_disc_radial(&shell).unwrap();
        let m = 0.5 * 50.0 * (0.41f64.powi(2) - 0.4f64.powi(2));
        for r in [0.5, 1.0, 1.7] {
            assert!((s.eval(r) + m * (r / 2.0).ln()).abs() < 1e-13);
        }
        // flat inside the shell
        assert!((s.eval(0.1) - s.eval(0.35)).abs() < 1e-14);
        assert!(poisson_disc_radial(&RadialProfile { edges: vec![0.0, f64::INFINITY], values: vec![1.0] }).is_err());
    }
}
