//! Atomic representation of nonnegative integrable functions, distribution
//! functions and their pseudo-inverses.
//!
//! A function is a finite list of atoms `(position, weight, value)` living on a
//! shared [`Carrier`]. Every measure-theoretic quantity is then a finite sum
//! and every distribution function is an exact [`StepProfile`].

use std::borrow::Cow;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RlabError};
use crate::numeric::ExactSum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    /// Disc of the given radius. When `truncated` the radius is a cutoff of R^2.
    Disc { radius: f64 },
    /// `]0,l1[ x ]0,l2[`; with `truncated` the height is a cutoff of an infinite strip.
    Rectangle { l1: f64, l2: f64 },
    /// Ball of radius `r_max` in x times ball of radius `v_max` in v (R^6).
    PhaseSpaceRadial { r_max: f64, v_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub total_measure: f64,
    pub truncated: bool,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(RlabError::InvalidDomain(format!("{name} must be positive and finite, got {x}")))
    }
}

impl Domain {
    pub fn disc(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Self { kind: DomainKind::Disc { radius }, total_measure: PI * radius * radius, truncated: false })
    }

    /// R^2 cut off at `cutoff`.
    pub fn plane_truncated(cutoff: f64) -> Result<Self> {
        let mut d = Self::disc(cutoff)?;
        d.truncated = true;
        Ok(d)
    }

    pub fn rectangle(l1: f64, l2: f64) -> Result<Self> {
        positive("l1", l1)?;
        positive("l2", l2)?;
        Ok(Self { kind: DomainKind::Rectangle { l1, l2 }, total_measure: l1 * l2, truncated: false })
    }

    /// Half-infinite strip `]0,l1[ x ]0,inf[` cut off at height `cutoff`.
    pub fn strip_truncated(l1: f64, cutoff: f64) -> Result<Self> {
        let mut d = Self::rectangle(l1, cutoff)?;
        d.truncated = true;
        Ok(d)
    }

    pub fn phase_space_radial(r_max: f64, v_max: f64) -> Result<Self> {
        positive("r_max", r_max)?;
        positive("v_max", v_max)?;
        let ball = |r: f64| 4.0 / 3.0 * PI * r.powi(3);
        Ok(Self {
            kind: DomainKind::PhaseSpaceRadial { r_max, v_max },
            total_measure: ball(r_max) * ball(v_max),
            truncated: true,
        })
    }

    pub fn is_disc(&self) -> bool {
        matches!(self.kind, DomainKind::Disc { .. })
    }

    pub fn is_rectangle(&self) -> bool {
        matches!(self.kind, DomainKind::Rectangle { .. })
    }
}

/// Geometry of the cell an atom stands for. Used for exact cell averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Polar { r0: f64, r1: f64, t0: f64, t1: f64 },
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Shell { r0: f64, r1: f64, v0: f64, v1: f64 },
}

#[derive(Debug)]
struct Refinement {
    base: Arc<Carrier>,
    parent: Vec<u32>,
}

/// Positions and weights shared by all functions defined on the same atoms.
#[derive(Debug)]
pub struct Carrier {
    domain: Domain,
    dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
    cells: Option<Vec<Cell>>,
    refinement: Option<Refinement>,
}

impl Carrier {
    pub fn new(domain: Domain, dim: usize, positions: Vec<f64>, weights: Vec<f64>) -> Result<Arc<Self>> {
        Self::build(domain, dim, positions, weights, None, None)
    }

    pub fn with_cells(
        domain: Domain,
        dim: usize,
        positions: Vec<f64>,
        weights: Vec<f64>,
        cells: Vec<Cell>,
    ) -> Result<Arc<Self>> {
        if cells.len() != weights.len() {
            return Err(RlabError::InvalidFunction("cell count differs from atom count".into()));
        }
        Self::build(domain, dim, positions, weights, Some(cells), None)
    }

    fn build(
        domain: Domain,
        dim: usize,
        positions: Vec<f64>,
        weights: Vec<f64>,
        cells: Option<Vec<Cell>>,
        refinement: Option<Refinement>,
    ) -> Result<Arc<Self>> {
        if dim == 0 || positions.len() != dim * weights.len() {
            return Err(RlabError::InvalidFunction(format!(
                "{} coordinates for {} atoms of dimension {dim}",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(RlabError::InvalidFunction(format!("atom {i} has weight {}", weights[i])));
        }
        let total: f64 = weights.iter().sum();
        if total > domain.total_measure * (1.0 + 1e-12) + 1e-300 {
            return Err(RlabError::InvalidFunction(format!(
                "atom weights sum to {total}, domain measure is {}",
                domain.total_measure
            )));
        }
        Ok(Arc::new(Self { domain, dim, positions, weights, cells, refinement }))
    }

    /// Carrier whose atoms are pieces of the atoms of `base`.
    pub(crate) fn refine(base: &Arc<Carrier>, parent: Vec<u32>, weights: Vec<f64>) -> Result<Arc<Self>> {
        let root = base.root();
        let dim = root.dim;
        let mut positions = Vec::with_capacity(parent.len() * dim);
        let mut cells = root.cells.as_ref().map(|_| Vec::with_capacity(parent.len()));
        for &p in &parent {
            let p = p as usize;
            positions.extend_from_slice(&root.positions[p * dim..(p + 1) * dim]);
            if let (Some(c), Some(rc)) = (cells.as_mut(), root.cells.as_ref()) {
                c.push(rc[p]);
            }
        }
        Self::build(
            root.domain.clone(),
            dim,
            positions,
            weights,
            cells,
            Some(Refinement { base: Arc::clone(root), parent }),
        )
    }

    /// The unrefined carrier this one descends from (itself if unrefined).
    pub fn root(self: &Arc<Self>) -> &Arc<Carrier> {
        match &self.refinement {
            Some(r) => &r.base,
            None => self,
        }
    }

    /// Index of the root atom each atom is a piece of.
    pub fn parent_index(&self) -> Option<&[u32]> {
        self.refinement.as_ref().map(|r| r.parent.as_slice())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }
    pub fn cells(&self) -> Option<&[Cell]> {
        self.cells.as_deref()
    }
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same positions and weights, bit for bit.
    pub fn same_atoms(&self, other: &Carrier) -> bool {
        self.dim == other.dim
            && self.weights.len() == other.weights.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.positions.iter().zip(&other.positions).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub(crate) fn same_carrier(a: &Arc<Carrier>, b: &Arc<Carrier>) -> bool {
    Arc::ptr_eq(a, b) || (a.refinement.is_none() && b.refinement.is_none() && a.same_atoms(b))
}

/// Nonnegative function given by one value per atom of a carrier.
#[derive(Clone, Debug)]
pub struct AtomicFunction {
    carrier: Arc<Carrier>,
    values: Vec<f64>,
}

impl AtomicFunction {
    pub fn new(carrier: Arc<Carrier>, values: Vec<f64>) -> Result<Self> {
        if values.len() != carrier.len() {
            return Err(RlabError::InvalidFunction(format!(
                "{} values for {} atoms",
                values.len(),
                carrier.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(RlabError::InvalidFunction(format!("atom {i} has value {}", values[i])));
        }
        Ok(Self { carrier, values })
    }

    pub fn zero(carrier: Arc<Carrier>) -> Self {
        let n = carrier.len();
        Self { carrier, values: vec![0.0; n] }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(carrier: Arc<Carrier>, f: F) -> Result<Self> {
        let values = (0..carrier.len()).map(|i| f(carrier.position(i))).collect();
        Self::new(carrier, values)
    }

    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn weights(&self) -> &[f64] {
        self.carrier.weights()
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn domain(&self) -> &Domain {
        self.carrier.domain()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Same function with new values on the same carrier.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.carrier), values)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|v| v * lambda).collect())
    }

    /// Values of this function pulled back to `target`, which must be this
    /// carrier or a refinement of it.
    pub fn values_on(&self, target: &Arc<Carrier>) -> Result<Cow<'_, [f64]>> {
        if same_carrier(&self.carrier, target) {
            return Ok(Cow::Borrowed(&self.values));
        }
        if self.carrier.refinement.is_none() {
            if let Some(r) = &target.refinement {
                if same_carrier(&r.base, &self.carrier) {
                    return Ok(Cow::Owned(r.parent.iter().map(|&p| self.values[p as usize]).collect()));
                }
            }
        }
        Err(RlabError::NotCoAtomic)
    }

    /// Integral of `self * g` where `g` is given per root atom.
    pub fn weighted_integral(&self, per_root_atom: &[f64]) -> f64 {
        let w = self.carrier.weights();
        match self.carrier.parent_index() {
            None => self.values.iter().zip(w).zip(per_root_atom).map(|((v, w), g)| v * w * g).sum(),
            Some(parent) => self
                .values
                .iter()
                .zip(w)
                .zip(parent)
                .map(|((v, w), &p)| v * w * per_root_atom[p as usize])
                .sum(),
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.carrier.weights()).map(|(v, w)| v * w).sum()
    }
}

/// Common carrier of two functions and both value vectors on it.
pub fn align<'a>(
    f: &'a AtomicFunction,
    g: &'a AtomicFunction,
) -> Result<(Arc<Carrier>, Cow<'a, [f64]>, Cow<'a, [f64]>)> {
    if same_carrier(&f.carrier, &g.carrier) {
        return Ok((Arc::clone(&f.carrier), Cow::Borrowed(&f.values), Cow::Borrowed(&g.values)));
    }
    if let Ok(fv) = f.values_on(&g.carrier) {
        return Ok((Arc::clone(&g.carrier), fv, Cow::Borrowed(&g.values)));
    }
    let gv = g.values_on(&f.carrier)?;
    Ok((Arc::clone(&f.carrier), Cow::Borrowed(&f.values), gv))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Nonincreasing,
    Nondecreasing,
    /// No monotonicity constraint (used for the beta profiles).
    Unconstrained,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    Right,
    Left,
}

/// Piecewise-constant function on the real line.
///
/// `values[k]` is the plateau between `breakpoints[k-1]` and `breakpoints[k]`,
/// with `values[0]` the left tail and the last entry the right tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    monotonicity: Monotonicity,
    continuity: Continuity,
}

impl StepProfile {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        monotonicity: Monotonicity,
        continuity: Continuity,
    ) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(RlabError::InvalidProfile("need one more plateau than breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RlabError::InvalidProfile("breakpoints must be strictly increasing".into()));
        }
        let ok = match monotonicity {
            Monotonicity::Nonincreasing => values.windows(2).all(|w| w[1] <= w[0]),
            Monotonicity::Nondecreasing => values.windows(2).all(|w| w[1] >= w[0]),
            Monotonicity::Unconstrained => true,
        };
        if !ok {
            return Err(RlabError::InvalidProfile(format!("plateaus are not {monotonicity:?}")));
        }
        Ok(Self { breakpoints, values, monotonicity, continuity })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![c],
            monotonicity: Monotonicity::Nonincreasing,
            continuity: Continuity::Right,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }
    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    fn index(&self, x: f64) -> usize {
        match self.continuity {
            Continuity::Right => self.breakpoints.partition_point(|&b| b <= x),
            Continuity::Left => self.breakpoints.partition_point(|&b| b < x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.index(x)]
    }

    /// Value on the open interval to the right of `x`.
    pub fn eval_right_of(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b <= x)]
    }

    pub fn right_tail(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn last_breakpoint(&self) -> Option<f64> {
        self.breakpoints.last().copied()
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return -self.integral(b, a);
        }
        let mut total = 0.0;
        let mut lo = a;
        let mut k = self.breakpoints.partition_point(|&x| x <= a);
        while lo < b {
            let hi = if k < self.breakpoints.len() { self.breakpoints[k].min(b) } else { b };
            total += self.values[k] * (hi - lo);
            lo = hi;
            k += 1;
        }
        total
    }

    /// Integral over `[0, last breakpoint]`; the right tail is assumed to vanish.
    pub fn integral_from_zero(&self) -> f64 {
        match self.last_breakpoint() {
            Some(b) if b > 0.0 => self.integral(0.0, b),
            _ => 0.0,
        }
    }

    /// Bitwise equality of breakpoints and plateaus.
    pub fn bit_eq(&self, other: &StepProfile) -> bool {
        self.monotonicity == other.monotonicity
            && self.continuity == other.continuity
            && self.breakpoints.len() == other.breakpoints.len()
            && self.values.len() == other.values.len()
            && self.breakpoints.iter().zip(&other.breakpoints).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Integral over `[0, upper]` of `integrand(values of all profiles)`, exact
/// for piecewise-constant integrands.
pub fn integrate_profiles<F: FnMut(&[f64]) -> f64>(profiles: &[&StepProfile], upper: f64, mut integrand: F) -> f64 {
    if !(upper > 0.0) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = vec![0.0, upper];
    for p in profiles {
        cuts.extend(p.breakpoints().iter().copied().filter(|&b| b > 0.0 && b < upper));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut vals = vec![0.0; profiles.len()];
    let mut idx: Vec<usize> = profiles.iter().map(|p| p.breakpoints().partition_point(|&b| b <= 0.0)).collect();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (j, p) in profiles.iter().enumerate() {
            let bps = p.breakpoints();
            while idx[j] < bps.len() && bps[idx[j]] <= a {
                idx[j] += 1;
            }
            vals[j] = p.values()[idx[j]];
        }
        total += (b - a) * integrand(&vals);
    }
    total
}

/// Largest breakpoint over a set of profiles (0 when all are constant).
pub fn support_end(profiles: &[&StepProfile]) -> f64 {
    profiles.iter().filter_map(|p| p.last_breakpoint()).fold(0.0, f64::max)
}

/// Distribution function `t -> meas{f > t}`.
pub fn mu_of(f: &AtomicFunction) -> StepProfile {
    let mut pairs: Vec<(f64, f64)> = f.values.iter().copied().zip(f.weights().iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut acc = ExactSum::new();
    // descending scan: plateau just below each distinct value
    let mut bps_desc = Vec::new();
    let mut plateaus_desc = vec![0.0];
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            acc.add(pairs[i].1);
            i += 1;
        }
        bps_desc.push(v);
        plateaus_desc.push(acc.value());
    }
    bps_desc.reverse();
    plateaus_desc.reverse();
    StepProfile {
        breakpoints: bps_desc,
        values: plateaus_desc,
        monotonicity: Monotonicity::Nonincreasing,
        continuity: Continuity::Right,
    }
}

/// Pseudo-inverse `s -> inf{t >= 0 : mu(t) <= s}` of a distribution function.
pub fn sharp_of(mu: &StepProfile) -> Result<StepProfile> {
    if mu.monotonicity != Monotonicity::Nonincreasing {
        return Err(RlabError::InvalidProfile("pseudo-inverse needs a nonincreasing profile".into()));
    }
    // candidate levels t in {0} U {breakpoints >= 0} with strictly decreasing mu
    let mut cand: Vec<(f64, f64)> = vec![(0.0, mu.eval(0.0))];
    for &b in mu.breakpoints.iter().filter(|&&b| b > 0.0) {
        let m = mu.eval(b);
        if m < cand.last().unwrap().1 {
            cand.push((b, m));
        }
    }
    if cand.last().unwrap().1 > 0.0 {
        return Err(RlabError::InvalidProfile("distribution function does not vanish".into()));
    }
    // s in [m_j, m_{j-1}) maps to t_j
    let n = cand.len();
    let mut bps = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n + 1);
    vals.push(cand[n - 1].0);
    for j in (0..n).rev() {
        bps.push(cand[j].1);
        vals.push(cand[j].0);
    }
    StepProfile::new(bps, vals, Monotonicity::Nonincreasing, Continuity::Right)
}

/// `s -> meas{f <= s < g}` for co-atomic `f`, `g`.
pub fn beta_of(f: &AtomicFunction, g: &AtomicFunction) -> Result<StepProfile> {
    let (carrier, fv, gv) = align(f, g)?;
    let w = carrier.weights();
    let mut events: Vec<(f64, f64)> = Vec::new();
    for i in 0..w.len() {
        if fv[i] < gv[i] {
            events.push((fv[i], w[i]));
            events.push((gv[i], -w[i]));
        }
    }
    Ok(profile_from_events(events))
}

/// Right-continuous profile from `(position, jump)` events, starting at 0.
pub(crate) fn profile_from_events(mut events: Vec<(f64, f64)>) -> StepProfile {
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = ExactSum::new();
    let mut bps = Vec::new();
    let mut vals = vec![0.0];
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            acc.add(events[i].1);
            i += 1;
        }
        let v = acc.value();
        if v != *vals.last().unwrap() {
            bps.push(x);
            vals.push(v);
        }
    }
    StepProfile { breakpoints: bps, values: vals, monotonicity: Monotonicity::Unconstrained, continuity: Continuity::Right }
}

/// Pointwise `(mu_a - mu_b)_+`; equals `beta_{f*,g*}` when `mu_a = mu_g`, `mu_b = mu_f`.
pub fn positive_difference(mu_a: &StepProfile, mu_b: &StepProfile) -> StepProfile {
    let mut cuts: Vec<f64> = mu_a.breakpoints.iter().chain(&mu_b.breakpoints).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let diff = |x: f64| (mu_a.eval(x) - mu_b.eval(x)).max(0.0);
    let left = (mu_a.values[0] - mu_b.values[0]).max(0.0);
    let mut bps = Vec::new();
    let mut vals = vec![left];
    for &c in &cuts {
        let v = diff(c);
        if v != *vals.last().unwrap() {
            bps.push(c);
            vals.push(v);
        }
    }
    StepProfile { breakpoints: bps, values: vals, monotonicity: Monotonicity::Unconstrained, continuity: Continuity::Right }
}

/// `beta_{f*,g*}(s) = meas{f* <= s < g*}` computed from the distribution functions.
pub fn beta_rearranged(f: &AtomicFunction, g: &AtomicFunction) -> StepProfile {
    positive_difference(&mu_of(g), &mu_of(f))
}

/// `||f* - g*||_1 = int |mu_f - mu_g| dt`.
pub fn rearranged_l1_distance(f: &AtomicFunction, g: &AtomicFunction) -> f64 {
    let (mf, mg) = (mu_of(f), mu_of(g));
    let upper = support_end(&[&mf, &mg]);
    integrate_profiles(&[&mf, &mg], upper, |v| (v[0] - v[1]).abs())
}

pub fn lp_norm(f: &AtomicFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(RlabError::OutOfRange(format!("p = {p} < 1")));
    }
    if p.is_infinite() {
        return Ok(f.max_value());
    }
    let s: f64 = f.values.iter().zip(f.weights()).map(|(v, w)| w * v.powf(p)).sum();
    Ok(s.powf(1.0 / p))
}

pub fn l1_distance(f: &AtomicFunction, g: &AtomicFunction) -> Result<f64> {
    let (c, fv, gv) = align(f, g)?;
    Ok(c.weights().iter().zip(fv.iter().zip(gv.iter())).map(|(w, (a, b))| w * (a - b).abs()).sum())
}

/// `int (g - f)_+`.
pub fn positive_part_integral(f: &AtomicFunction, g: &AtomicFunction) -> Result<f64> {
    let (c, fv, gv) = align(f, g)?;
    Ok(c.weights().iter().zip(fv.iter().zip(gv.iter())).map(|(w, (a, b))| w * (b - a).max(0.0)).sum())
}

/// Writes atoms as CSV `x1,x2[,v1,v2,v3],weight,value`.
pub fn write_atoms_csv<W: Write>(f: &AtomicFunction, out: W) -> Result<()> {
    let phase = matches!(f.domain().kind, DomainKind::PhaseSpaceRadial { .. });
    let mut w = csv::Writer::from_writer(out);
    if phase {
        w.write_record(["x1", "x2", "v1", "v2", "v3", "weight", "value"])?;
    } else {
        w.write_record(["x1", "x2", "weight", "value"])?;
    }
    let c = f.carrier();
    for i in 0..f.len() {
        let p = c.position(i);
        let coord = |k: usize| p.get(k).copied().unwrap_or(0.0);
        let mut rec: Vec<String> = Vec::with_capacity(7);
        if phase {
            // radial atoms: representative point (r,0,0), (|v|,0,0)
            rec.extend([coord(0), 0.0, coord(1), 0.0, 0.0].iter().map(|x| format!("{x:e}")));
        } else {
            rec.extend([coord(0), coord(1)].iter().map(|x| format!("{x:e}")));
        }
        rec.push(format!("{:e}", c.weights()[i]));
        rec.push(format!("{:e}", f.values()[i]));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| RlabError::Io { path: "<atoms csv>".into(), source: e })?;
    Ok(())
}

/// Reads the CSV written by [`write_atoms_csv`] onto a fresh carrier.
pub fn read_atoms_csv<R: Read>(domain: Domain, input: R) -> Result<AtomicFunction> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let phase = headers.iter().any(|h| h == "v1");
    let mut positions = Vec::new();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| RlabError::InvalidFunction(format!("missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| RlabError::InvalidFunction(format!("column {k}: {e}")))
        };
        if phase {
            positions.push(num(0)?);
            positions.push(num(2)?);
            weights.push(num(5)?);
            values.push(num(6)?);
        } else {
            positions.push(num(0)?);
            positions.push(num(1)?);
            weights.push(num(2)?);
            values.push(num(3)?);
        }
    }
    let carrier = Carrier::new(domain, 2, positions, weights)?;
    AtomicFunction::new(carrier, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_atoms(values: [f64; 4]) -> AtomicFunction {
        let d = Domain::rectangle(1.0, 2.0).unwrap();
        let pos = vec![0.5, 0.25, 0.5, 0.75, 0.5, 1.25, 0.5, 1.75];
        let c = Carrier::new(d, 2, pos, vec![0.5; 4]).unwrap();
        AtomicFunction::new(c, values.to_vec()).unwrap()
    }

    #[test]
    fn mu_of_four_atom_example() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let mu = mu_of(&f);
        for (t, m) in [(0.0, 1.5), (0.5, 1.5), (1.0, 1.0), (1.9, 1.0), (2.0, 0.5), (2.99, 0.5), (3.0, 0.0), (10.0, 0.0)] {
            assert_eq!(mu.eval(t), m, "mu({t})");
        }
    }

    #[test]
    fn mu_of_zero_and_indicator() {
        let z = four_atoms([0.0; 4]);
        let mu = mu_of(&z);
        assert_eq!(mu.eval(0.0), 0.0);
        assert_eq!(mu.eval(1e-9), 0.0);
        let d = Domain::rectangle(1.0, 2.0).unwrap();
        let c = Carrier::new(d, 2, vec![0.5, 1.0], vec![2.0]).unwrap();
        let ind = AtomicFunction::new(c, vec![1.0]).unwrap();
        let mu = mu_of(&ind);
        assert_eq!(mu.eval(0.0), 2.0);
        assert_eq!(mu.eval(0.999), 2.0);
        assert_eq!(mu.eval(1.0), 0.0);
    }

    #[test]
    fn sharp_of_four_atom_example() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let s = sharp_of(&mu_of(&f)).unwrap();
        for (x, v) in [(0.0, 3.0), (0.49, 3.0), (0.5, 2.0), (0.99, 2.0), (1.0, 1.0), (1.49, 1.0), (1.5, 0.0), (7.0, 0.0)] {
            assert_eq!(s.eval(x), v, "sharp({x})");
        }
        assert_eq!(s.eval(0.0), f.max_value());
        let zero = sharp_of(&mu_of(&four_atoms([0.0; 4]))).unwrap();
        assert_eq!(zero.eval(0.0), 0.0);
        assert_eq!(zero.eval(3.0), 0.0);
    }

    #[test]
    fn sharp_rejects_nondecreasing_profile() {
        let p = StepProfile::new(vec![1.0], vec![0.0, 1.0], Monotonicity::Nondecreasing, Continuity::Right).unwrap();
        assert!(sharp_of(&p).is_err());
    }

    #[test]
    fn zarby_equivalence_at_breakpoint_midpoints() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let mu = mu_of(&f);
        let sh = sharp_of(&mu).unwrap();
        let ts = [0.5, 1.5, 2.5, 3.5];
        let rs = [0.25, 0.75, 1.25, 1.75];
        for &t in &ts {
            for &r in &rs {
                assert_eq!(sh.eval(r) > t, mu.eval(t) > r, "r={r} t={t}");
            }
        }
    }

    #[test]
    fn beta_of_example_pair() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let g = four_atoms([3.0, 2.0, 1.0, 0.0]);
        let b = beta_of(&f, &g).unwrap();
        assert_eq!(b.eval(0.0), 0.5);
        assert_eq!(b.eval(1.5), 0.5);
        assert_eq!(b.eval(2.5), 0.5);
        let bg = beta_of(&g, &f).unwrap();
        let total = b.integral_from_zero() + bg.integral_from_zero();
        assert_eq!(total, 3.0);
        assert_eq!(total, l1_distance(&f, &g).unwrap());
        let same = beta_of(&f, &f).unwrap();
        assert!(same.breakpoints().is_empty());
        assert_eq!(same.eval(1.0), 0.0);
    }

    #[test]
    fn beta_of_rejects_foreign_carrier() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let d = Domain::rectangle(1.0, 2.0).unwrap();
        let c = Carrier::new(d, 2, vec![0.1, 0.1, 0.2, 0.2], vec![0.5, 0.5]).unwrap();
        let g = AtomicFunction::new(c, vec![1.0, 2.0]).unwrap();
        assert!(matches!(beta_of(&f, &g), Err(RlabError::NotCoAtomic)));
    }

    #[test]
    fn lp_norms_of_example() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        assert_eq!(lp_norm(&f, 1.0).unwrap(), 3.0);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
        assert!((lp_norm(&f, 2.0).unwrap() - 7f64.sqrt()).abs() < 1e-15);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn step_profile_integrals_are_exact() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let mu = mu_of(&f);
        assert_eq!(mu.integral_from_zero(), 3.0);
        assert_eq!(mu.integral(0.5, 2.5), 0.75 + 1.0 + 0.25);
        let both = integrate_profiles(&[&mu, &mu], 3.0, |v| v[0] * v[1]);
        assert_eq!(both, 1.5 * 1.5 + 1.0 + 0.25);
    }

    #[test]
    fn beta_rearranged_matches_mu_difference() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let g = four_atoms([0.0, 0.0, 2.0, 0.5]);
        let b = beta_rearranged(&f, &g);
        for t in [0.0, 0.25, 0.75, 1.5, 2.5, 4.0] {
            let expect = (mu_of(&g).eval(t) - mu_of(&f).eval(t)).max(0.0);
            assert_eq!(b.eval(t), expect);
        }
        let d = rearranged_l1_distance(&f, &g);
        assert!((d - 0.5 * ((3.0f64 - 2.0).abs() + (2.0f64 - 0.5).abs() + 1.0 + 0.0)).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip() {
        let f = four_atoms([1.0, 3.0, 0.0, 2.0]);
        let mut buf = Vec::new();
        write_atoms_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,weight,value"));
        let g = read_atoms_csv(f.domain().clone(), buf.as_slice()).unwrap();
        assert_eq!(g.values(), f.values());
        assert_eq!(g.weights(), f.weights());
    }
}
