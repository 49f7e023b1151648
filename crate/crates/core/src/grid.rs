//! Cell grids turned into atom carriers.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, RlabError};
use crate::measure::{Carrier, Cell, Domain};

/// Equal-area polar grid on a disc. Atom `k * ntheta + j` is ring `k`, sector `j`.
#[derive(Clone, Debug)]
pub struct DiscGrid {
    pub radius: f64,
    pub nr: usize,
    pub ntheta: usize,
    /// Ring edges `r_0 = 0 < ... < r_nr = R`.
    pub edges: Vec<f64>,
    /// Node radius per ring: `sqrt((a^2 + b^2) / 2)`, where `|x|^2` equals its ring average.
    pub nodes: Vec<f64>,
    pub carrier: Arc<Carrier>,
}

impl DiscGrid {
    pub fn new(radius: f64, nr: usize, ntheta: usize) -> Result<Self> {
        Self::with_domain(Domain::disc(radius)?, nr, ntheta)
    }

    /// Grid on R^2 cut off at radius `cutoff`.
    pub fn truncated_plane(cutoff: f64, nr: usize, ntheta: usize) -> Result<Self> {
        Self::with_domain(Domain::plane_truncated(cutoff)?, nr, ntheta)
    }

    fn with_domain(domain: Domain, nr: usize, ntheta: usize) -> Result<Self> {
        if nr == 0 || ntheta == 0 {
            return Err(RlabError::OutOfRange("disc grid needs nr, ntheta >= 1".into()));
        }
        let radius = match domain.kind {
            crate::measure::DomainKind::Disc { radius } => radius,
            _ => unreachable!(),
        };
        let edges: Vec<f64> = (0..=nr).map(|k| radius * (k as f64 / nr as f64).sqrt()).collect();
        let nodes: Vec<f64> = edges.windows(2).map(|e| ((e[0] * e[0] + e[1] * e[1]) / 2.0).sqrt()).collect();
        let w = PI * radius * radius / (nr * ntheta) as f64;
        let dt = 2.0 * PI / ntheta as f64;
        let mut positions = Vec::with_capacity(2 * nr * ntheta);
        let mut cells = Vec::with_capacity(nr * ntheta);
        for k in 0..nr {
            for j in 0..ntheta {
                let t = (j as f64 + 0.5) * dt;
                positions.push(nodes[k] * t.cos());
                positions.push(nodes[k] * t.sin());
                cells.push(Cell::Polar { r0: edges[k], r1: edges[k + 1], t0: j as f64 * dt, t1: (j + 1) as f64 * dt });
            }
        }
        let carrier = Carrier::with_cells(domain, 2, positions, vec![w; nr * ntheta], cells)?;
        Ok(Self { radius, nr, ntheta, edges, nodes, carrier })
    }

    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * 2.0 * PI / self.ntheta as f64
    }

    /// Values from a radial profile evaluated at ring nodes.
    pub fn radial_values<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.nr {
            let v = g(self.nodes[k]);
            out.extend(std::iter::repeat_n(v, self.ntheta));
        }
        out
    }
}

/// Cell-centred grid on `]0,l1[ x ]0,l2[`. Atom `j * n1 + i` is column `i`, row `j`.
#[derive(Clone, Debug)]
pub struct RectGrid {
    pub l1: f64,
    pub l2: f64,
    pub n1: usize,
    pub n2: usize,
    pub carrier: Arc<Carrier>,
}

impl RectGrid {
    pub fn new(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        Self::with_domain(Domain::rectangle(l1, l2)?, n1, n2)
    }

    /// Grid on a truncated strip of height `cutoff`.
    pub fn strip(l1: f64, cutoff: f64, n1: usize, n2: usize) -> Result<Self> {
        Self::with_domain(Domain::strip_truncated(l1, cutoff)?, n1, n2)
    }

    fn with_domain(domain: Domain, n1: usize, n2: usize) -> Result<Self> {
        let (l1, l2) = match domain.kind {
            crate::measure::DomainKind::Rectangle { l1, l2 } => (l1, l2),
            _ => unreachable!(),
        };
        if n1 == 0 || n2 == 0 {
            return Err(RlabError::OutOfRange("rectangle grid needs n1, n2 >= 1".into()));
        }
        let (h1, h2) = (l1 / n1 as f64, l2 / n2 as f64);
        let mut positions = Vec::with_capacity(2 * n1 * n2);
        let mut cells = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            for i in 0..n1 {
                positions.push((i as f64 + 0.5) * h1);
                positions.push((j as f64 + 0.5) * h2);
                cells.push(Cell::Rect {
                    x0: i as f64 * h1,
                    x1: (i + 1) as f64 * h1,
                    y0: j as f64 * h2,
                    y1: (j + 1) as f64 * h2,
                });
            }
        }
        let carrier = Carrier::with_cells(domain, 2, positions, vec![h1 * h2; n1 * n2], cells)?;
        Ok(Self { l1, l2, n1, n2, carrier })
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> (f64, f64) {
        (self.l1 / self.n1 as f64, self.l2 / self.n2 as f64)
    }

    pub fn x1(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.l1 / self.n1 as f64
    }

    pub fn x2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.l2 / self.n2 as f64
    }

    pub fn values<F: Fn(f64, f64) -> f64>(&self, g: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                out.push(g(self.x1(i), self.x2(j)));
            }
        }
        out
    }
}

/// Radial phase-space grid: shells in `r = |x|` times shells in `|v|`.
/// Atom `i * nv + j` is `r` cell `i`, `v` cell `j`.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub r_edges: Vec<f64>,
    pub v_edges: Vec<f64>,
    pub r_centres: Vec<f64>,
    pub v_centres: Vec<f64>,
    pub carrier: Arc<Carrier>,
}

/// `(16π²/9)(r1³ − r0³)(v1³ − v0³)`: phase-space volume of a shell pair.
pub fn shell_volume(r0: f64, r1: f64, v0: f64, v1: f64) -> f64 {
    16.0 * PI * PI / 9.0 * (r1.powi(3) - r0.powi(3)) * (v1.powi(3) - v0.powi(3))
}

impl PhaseGrid {
    pub fn new(r_edges: Vec<f64>, v_edges: Vec<f64>) -> Result<Self> {
        let ok = |e: &[f64]| e.len() >= 2 && e[0] >= 0.0 && e.windows(2).all(|w| w[0] < w[1]);
        if !ok(&r_edges) || !ok(&v_edges) {
            return Err(RlabError::OutOfRange("phase grid edges must be increasing and nonnegative".into()));
        }
        let domain = Domain::phase_space_radial(*r_edges.last().unwrap(), *v_edges.last().unwrap())?;
        let r_centres: Vec<f64> = r_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let v_centres: Vec<f64> = v_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let (nr, nv) = (r_centres.len(), v_centres.len());
        let mut positions = Vec::with_capacity(2 * nr * nv);
        let mut weights = Vec::with_capacity(nr * nv);
        let mut cells = Vec::with_capacity(nr * nv);
        for i in 0..nr {
            for j in 0..nv {
                positions.push(r_centres[i]);
                positions.push(v_centres[j]);
                weights.push(shell_volume(r_edges[i], r_edges[i + 1], v_edges[j], v_edges[j + 1]));
                cells.push(Cell::Shell { r0: r_edges[i], r1: r_edges[i + 1], v0: v_edges[j], v1: v_edges[j + 1] });
            }
        }
        let carrier = Carrier::with_cells(domain, 2, positions, weights, cells)?;
        Ok(Self { r_edges, v_edges, r_centres, v_centres, carrier })
    }

    /// `nr_log` log-spaced edges from `r_min` to `r_max` plus the inner cell `[0, r_min]`,
    /// and `nv` uniform cells on `[0, v_max]`.
    pub fn log_uniform(r_min: f64, r_max: f64, nr_log: usize, v_max: f64, nv: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || nr_log < 2 || nv == 0 {
            return Err(RlabError::OutOfRange("invalid phase grid parameters".into()));
        }
        let mut r_edges = vec![0.0];
        let ratio = (r_max / r_min).ln();
        for k in 0..nr_log {
            r_edges.push(r_min * (ratio * k as f64 / (nr_log - 1) as f64).exp());
        }
        *r_edges.last_mut().unwrap() = r_max;
        let v_edges = (0..=nv).map(|j| v_max * j as f64 / nv as f64).collect();
        Self::new(r_edges, v_edges)
    }

    pub fn nr(&self) -> usize {
        self.r_centres.len()
    }

    pub fn nv(&self) -> usize {
        self.v_centres.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_grid_has_equal_weights_and_full_measure() {
        let g = DiscGrid::new(1.0, 16, 32).unwrap();
        let w = g.carrier.weights();
        assert!(w.iter().all(|x| x.to_bits() == w[0].to_bits()));
        assert!((g.carrier.total_weight() - PI).abs() < 1e-12);
        // node radius squared is the ring average of |x|^2
        for k in 0..g.nr {
            let (a, b) = (g.edges[k], g.edges[k + 1]);
            assert!((g.nodes[k].powi(2) - (a * a + b * b) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rect_and_phase_grids_cover_their_domains() {
        let r = RectGrid::new(2.0, 1.0, 8, 4).unwrap();
        assert!((r.carrier.total_weight() - 2.0).abs() < 1e-14);
        assert_eq!(r.carrier.position(9), &[0.375, 0.375]);
        let p = PhaseGrid::log_uniform(1e-3, 2.0, 16, 1.0, 8).unwrap();
        let ball = |x: f64| 4.0 / 3.0 * PI * x.powi(3);
        let total = p.carrier.total_weight();
        assert!((total - ball(2.0) * ball(1.0)).abs() < 1e-12 * total);
    }
}
