//! σ-fields, their Jacobians `a_σ`, `b_σ`, `B_σ`, and the σ-rearrangement.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Result, RlabError};
use crate::measure::{same_carrier, AtomicFunction, Carrier, Cell, Continuity, DomainKind, Monotonicity, StepProfile};
use crate::numeric::ExactSum;

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: u32) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Analytic Jacobian data of a σ family.
pub trait Jacobian: Send + Sync + fmt::Debug {
    /// `meas{σ < e}`.
    fn a(&self, e: f64) -> f64;
    /// Pseudo-inverse of `a`.
    fn b(&self, mu: f64) -> f64;
    /// `∫_0^mu b`.
    fn big_b(&self, mu: f64) -> f64;
    /// Convexity modulus; `None` when not available at `mu`.
    fn h(&self, mu: f64) -> Option<f64>;
    fn measure(&self) -> f64;
    /// True when `h` is an exact closed form (as opposed to a tabulated value).
    fn h_is_closed_form(&self) -> bool {
        true
    }
}

/// Closed forms for `|x|^2` on a disc, `x2` on a strip and `|x|^m` on a ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClosedForm {
    RadiusSquared { radius: f64 },
    CoordX2 { l1: f64, l2: f64 },
    PowerLaw { m: f64, d: u32, radius: f64 },
}

impl ClosedForm {
    fn e_max(&self) -> f64 {
        match *self {
            ClosedForm::RadiusSquared { radius } => radius * radius,
            ClosedForm::CoordX2 { l2, .. } => l2,
            ClosedForm::PowerLaw { m, radius, .. } => radius.powf(m),
        }
    }
}

impl Jacobian for ClosedForm {
    fn a(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        match *self {
            ClosedForm::RadiusSquared { radius } => PI * e.min(radius * radius),
            ClosedForm::CoordX2 { l1, l2 } => l1 * e.min(l2),
            ClosedForm::PowerLaw { m, d, radius } => unit_ball_volume(d) * e.min(radius.powf(m)).powf(d as f64 / m),
        }
    }

    fn b(&self, mu: f64) -> f64 {
        let m_tot = self.measure();
        if mu >= m_tot {
            return self.e_max();
        }
        let mu = mu.max(0.0);
        match *self {
            ClosedForm::RadiusSquared { .. } => mu / PI,
            ClosedForm::CoordX2 { l1, .. } => mu / l1,
            ClosedForm::PowerLaw { m, d, .. } => {
                let kd = unit_ball_volume(d);
                kd.powf(-m / d as f64) * mu.powf(m / d as f64)
            }
        }
    }

    fn big_b(&self, mu: f64) -> f64 {
        let m_tot = self.measure();
        let inner = |s: f64| -> f64 {
            match *self {
                ClosedForm::RadiusSquared { .. } => s * s / (2.0 * PI),
                ClosedForm::CoordX2 { l1, .. } => s * s / (2.0 * l1),
                ClosedForm::PowerLaw { m, d, .. } => {
                    let df = d as f64;
                    let kd = unit_ball_volume(d);
                    df / (m + df) * kd.powf(-m / df) * s.powf(1.0 + m / df)
                }
            }
        };
        if mu <= 0.0 {
            0.0
        } else if mu <= m_tot {
            inner(mu)
        } else {
            inner(m_tot) + self.e_max() * (mu - m_tot)
        }
    }

    fn h(&self, mu: f64) -> Option<f64> {
        match *self {
            ClosedForm::RadiusSquared { .. } => Some(1.0 / PI),
            ClosedForm::CoordX2 { l1, .. } => Some(1.0 / l1),
            ClosedForm::PowerLaw { m, d, .. } => {
                if mu <= 0.0 {
                    return None;
                }
                let df = d as f64;
                Some(m / df * unit_ball_volume(d).powf(-m / df) * mu.powf(m / df - 1.0))
            }
        }
    }

    fn measure(&self) -> f64 {
        match *self {
            ClosedForm::RadiusSquared { radius } => PI * radius * radius,
            ClosedForm::CoordX2 { l1, l2 } => l1 * l2,
            ClosedForm::PowerLaw { d, radius, .. } => unit_ball_volume(d) * radius.powi(d as i32),
        }
    }
}

/// Which σ to build on a carrier.
#[derive(Clone, Debug)]
pub enum SigmaSpec {
    /// `|x|^m` on a disc (d = 2).
    PowerLaw { m: f64 },
    /// `x2` on a rectangle.
    CoordX2,
    /// `|x|^2` on a disc.
    RadiusSquared,
    /// Normalized microscopic energy, values precomputed per atom.
    MicroEnergy { values: Vec<f64>, jacobian: Arc<dyn Jacobian> },
    /// σ = ψ0 for a stream function on the same carrier.
    StreamFunction { psi0: AtomicFunction },
    /// Arbitrary per-atom values.
    Empirical { values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaFamily {
    PowerLaw,
    CoordX2,
    RadiusSquared,
    MicroEnergy,
    StreamFunction,
    Empirical,
}

/// Level sets of σ carrying positive measure (the discrete failure of the
/// zero-measure level set hypothesis).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TieReport {
    /// Total measure of atoms whose σ value is shared with another atom.
    pub tie_mass: f64,
    pub tied_levels: usize,
    pub max_multiplicity: usize,
    pub max_level_mass: f64,
    pub max_atom_weight: f64,
    /// True when `tie_mass` exceeds `1e-9` times the carrier measure.
    pub flagged: bool,
}

#[derive(Clone)]
pub struct SigmaField {
    family: SigmaFamily,
    carrier: Arc<Carrier>,
    values: Vec<f64>,
    /// Distinct σ values, ascending.
    levels: Vec<f64>,
    /// Cumulative measure `C_j` below and at `levels[j-1]`, with `C_0 = 0`.
    cumulative: Vec<f64>,
    a_curve: StepProfile,
    b_curve: StepProfile,
    e_min: f64,
    e_max: f64,
    jacobian: Option<Arc<dyn Jacobian>>,
    closed_form: Option<ClosedForm>,
    ties: TieReport,
    knots: Vec<f64>,
}

impl fmt::Debug for SigmaField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmaField")
            .field("family", &self.family)
            .field("atoms", &self.values.len())
            .field("levels", &self.levels.len())
            .field("e_min", &self.e_min)
            .field("e_max", &self.e_max)
            .field("closed_form", &self.closed_form)
            .finish()
    }
}

fn power_average(cell: &Cell, m: f64) -> Option<f64> {
    match *cell {
        Cell::Polar { r0, r1, .. } => {
            let num = 2.0 * (r1.powf(m + 2.0) - r0.powf(m + 2.0));
            let den = (m + 2.0) * (r1 * r1 - r0 * r0);
            Some(num / den)
        }
        _ => None,
    }
}

fn x2_average(cell: &Cell) -> Option<f64> {
    match *cell {
        Cell::Rect { y0, y1, .. } => Some(0.5 * (y0 + y1)),
        _ => None,
    }
}

impl SigmaField {
    pub fn build(spec: SigmaSpec, carrier: &Arc<Carrier>) -> Result<Self> {
        if carrier.is_empty() {
            return Err(RlabError::InvalidDomain("carrier has no atoms".into()));
        }
        let domain = carrier.domain().clone();
        let n = carrier.len();
        let cells = carrier.cells();
        let (family, values, closed, jac, bounds): (_, Vec<f64>, _, Option<Arc<dyn Jacobian>>, _) = match spec {
            SigmaSpec::RadiusSquared | SigmaSpec::PowerLaw { .. } => {
                let radius = match domain.kind {
                    DomainKind::Disc { radius } => radius,
                    _ => return Err(RlabError::Unsupported("radial σ needs a disc domain".into())),
                };
                let (m, family) = match spec {
                    SigmaSpec::PowerLaw { m } => (m, SigmaFamily::PowerLaw),
                    _ => (2.0, SigmaFamily::RadiusSquared),
                };
                if !(m > 0.0 && m <= 2.0) {
                    return Err(RlabError::OutOfRange(format!("power m = {m} outside (0, 2]")));
                }
                let values = (0..n)
                    .map(|i| {
                        cells.and_then(|c| power_average(&c[i], m)).unwrap_or_else(|| {
                            let p = carrier.position(i);
                            (p[0] * p[0] + p[1] * p[1]).sqrt().powf(m)
                        })
                    })
                    .collect();
                let cf = if family == SigmaFamily::RadiusSquared {
                    ClosedForm::RadiusSquared { radius }
                } else {
                    ClosedForm::PowerLaw { m, d: 2, radius }
                };
                (family, values, Some(cf), Some(Arc::new(cf) as Arc<dyn Jacobian>), (0.0, radius.powf(m)))
            }
            SigmaSpec::CoordX2 => {
                let (l1, l2) = match domain.kind {
                    DomainKind::Rectangle { l1, l2 } => (l1, l2),
                    _ => return Err(RlabError::Unsupported("x2 needs a rectangle domain".into())),
                };
                let values = (0..n)
                    .map(|i| cells.and_then(|c| x2_average(&c[i])).unwrap_or_else(|| carrier.position(i)[1]))
                    .collect();
                let cf = ClosedForm::CoordX2 { l1, l2 };
                (SigmaFamily::CoordX2, values, Some(cf), Some(Arc::new(cf) as Arc<dyn Jacobian>), (0.0, l2))
            }
            SigmaSpec::MicroEnergy { values, jacobian } => {
                let hi = values.iter().fold(0.0f64, |m, &v| m.max(v));
                (SigmaFamily::MicroEnergy, values, None, Some(jacobian), (0.0, hi))
            }
            SigmaSpec::StreamFunction { psi0 } => {
                let values = psi0.values_on(carrier)?.into_owned();
                let (lo, hi) = min_max(&values);
                (SigmaFamily::StreamFunction, values, None, None, (lo, hi))
            }
            SigmaSpec::Empirical { values } => {
                let (lo, hi) = min_max(&values);
                (SigmaFamily::Empirical, values, None, None, (lo, hi))
            }
        };
        if values.len() != n {
            return Err(RlabError::InvalidFunction(format!("{} σ values for {n} atoms", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RlabError::InvalidFunction(format!("σ at atom {i} is not finite")));
        }
        Ok(Self::assemble(family, Arc::clone(carrier), values, bounds, jac, closed))
    }

    fn assemble(
        family: SigmaFamily,
        carrier: Arc<Carrier>,
        values: Vec<f64>,
        bounds: (f64, f64),
        jacobian: Option<Arc<dyn Jacobian>>,
        closed_form: Option<ClosedForm>,
    ) -> Self {
        let w = carrier.weights();
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut levels = Vec::new();
        let mut cumulative = vec![0.0];
        let mut acc = ExactSum::new();
        let mut ties = TieReport { max_atom_weight: w.iter().fold(0.0, |m, &x| m.max(x)), ..Default::default() };
        let mut k = 0;
        while k < idx.len() {
            let v = values[idx[k]];
            let mut level = ExactSum::new();
            let mut mult = 0;
            while k < idx.len() && values[idx[k]] == v {
                acc.add(w[idx[k]]);
                level.add(w[idx[k]]);
                mult += 1;
                k += 1;
            }
            if mult > 1 {
                let lm = level.value();
                ties.tie_mass += lm;
                ties.tied_levels += 1;
                ties.max_multiplicity = ties.max_multiplicity.max(mult);
                ties.max_level_mass = ties.max_level_mass.max(lm);
            }
            let c = acc.value();
            // a level whose mass is below the resolution of the running total
            // cannot be a breakpoint of b_σ; it is absorbed into its predecessor
            if levels.is_empty() || c > *cumulative.last().unwrap() {
                levels.push(v);
                cumulative.push(c);
            }
        }
        let total = *cumulative.last().unwrap();
        ties.flagged = ties.tie_mass > 1e-9 * total;
        let e_min = bounds.0.min(levels[0]);
        let e_max = bounds.1.max(*levels.last().unwrap());

        let a_curve = StepProfile::new(
            levels.clone(),
            cumulative.clone(),
            Monotonicity::Nondecreasing,
            Continuity::Left,
        )
        .expect("cumulative measure is nondecreasing");
        // b = e_min for mu < 0, levels[j] on [C_j, C_{j+1}), last level beyond C_n
        let nlev = levels.len();
        let mut b_bps = Vec::with_capacity(nlev);
        let mut b_vals = Vec::with_capacity(nlev + 1);
        b_vals.push(e_min);
        for j in 0..nlev {
            b_bps.push(cumulative[j]);
            b_vals.push(levels[j]);
        }
        let b_curve = StepProfile::new(b_bps, b_vals, Monotonicity::Nondecreasing, Continuity::Right)
            .expect("sorted σ levels are nondecreasing");
        let mut knots = Vec::with_capacity(nlev + 1);
        let mut acc = ExactSum::new();
        knots.push(0.0);
        for j in 0..nlev {
            acc.add(levels[j] * (cumulative[j + 1] - cumulative[j]));
            knots.push(acc.value());
        }
        Self {
            family,
            carrier,
            values,
            levels,
            cumulative,
            a_curve,
            b_curve,
            e_min,
            e_max,
            jacobian,
            closed_form,
            ties,
            knots,
        }
    }

    pub fn family(&self) -> SigmaFamily {
        self.family
    }
    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }
    /// σ value per atom of the carrier.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
    /// `C_0 = 0, C_1, ..., C_n`: cumulative measure by σ level.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }
    pub fn a_curve(&self) -> &StepProfile {
        &self.a_curve
    }
    pub fn b_curve(&self) -> &StepProfile {
        &self.b_curve
    }
    pub fn e_min(&self) -> f64 {
        self.e_min
    }
    pub fn e_max(&self) -> f64 {
        self.e_max
    }
    pub fn jacobian(&self) -> Option<&Arc<dyn Jacobian>> {
        self.jacobian.as_ref()
    }
    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }
    pub fn ties(&self) -> &TieReport {
        &self.ties
    }
    /// Measure of the carrier (sum of atom weights).
    pub fn total_measure(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Empirical `a_σ(e) = meas{σ < e}`.
    pub fn a(&self, e: f64) -> f64 {
        self.a_curve.eval(e)
    }

    /// Empirical `b_σ`, extended beyond the carrier measure by its last level.
    pub fn b(&self, mu: f64) -> f64 {
        self.b_curve.eval(mu)
    }

    /// Empirical `B_σ(mu) = ∫_0^mu b_σ`, exact and piecewise linear.
    pub fn big_b(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        let c = &self.cumulative;
        // j = number of complete levels below mu
        let j = c.partition_point(|&x| x <= mu).saturating_sub(1).min(self.levels.len());
        let base = self.knot_values()[j];
        let slope = self.levels[j.min(self.levels.len() - 1)];
        base + slope * (mu - c[j])
    }

    /// `B_σ` at the cumulative knots `C_j`.
    pub fn knot_values(&self) -> &[f64] {
        &self.knots
    }

    /// σ values on `target`, which must be this carrier or a refinement of it.
    pub fn values_on(&self, target: &Arc<Carrier>) -> Result<Vec<f64>> {
        if same_carrier(&self.carrier, target) {
            return Ok(self.values.clone());
        }
        match target.parent_index() {
            Some(parent) if same_carrier(target.root(), &self.carrier) => {
                Ok(parent.iter().map(|&p| self.values[p as usize]).collect())
            }
            _ => Err(RlabError::NotCoAtomic),
        }
    }

    /// `∫ σ f` as an atom sum.
    pub fn integrate_against(&self, f: &AtomicFunction) -> Result<f64> {
        let sv = self.values_on(f.carrier())?;
        let mut s = ExactSum::new();
        for ((v, w), sg) in f.values().iter().zip(f.weights()).zip(&sv) {
            s.add(v * w * sg);
        }
        Ok(s.value())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["atom_index", "sigma_value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:e}")])?;
        }
        w.flush().map_err(|e| RlabError::Io { path: "<sigma csv>".into(), source: e })?;
        Ok(())
    }

    /// Reads `atom_index,sigma_value` rows into an empirical field on `carrier`.
    pub fn read_csv<R: Read>(carrier: &Arc<Carrier>, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut values = vec![f64::NAN; carrier.len()];
        for rec in r.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<&str> {
                rec.get(k).ok_or_else(|| RlabError::InvalidFunction(format!("missing column {k}")))
            };
            let i: usize = parse(0)?.trim().parse().map_err(|e| RlabError::InvalidFunction(format!("{e}")))?;
            let v: f64 = parse(1)?.trim().parse().map_err(|e| RlabError::InvalidFunction(format!("{e}")))?;
            if i >= values.len() {
                return Err(RlabError::InvalidFunction(format!("atom index {i} out of range")));
            }
            values[i] = v;
        }
        Self::build(SigmaSpec::Empirical { values }, carrier)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// σ-rearrangement of `f`: nonincreasing in σ and equimeasurable with `f`.
///
/// Atoms are stacked by ascending σ (ties: larger value of `f` first, then
/// construction index); values are consumed in descending order with the same
/// tie rule. When weights do not line up, atoms are split and the result lives
/// on a refinement of the carrier.
pub fn sigma_rearrange(f: &AtomicFunction, sigma: &SigmaField) -> Result<AtomicFunction> {
    let carrier = f.carrier();
    let sv = sigma.values_on(carrier)?;
    let fv = f.values();
    let w = carrier.weights();
    let n = fv.len();

    let mut slots: Vec<usize> = (0..n).collect();
    slots.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]).then(fv[b].total_cmp(&fv[a])).then(a.cmp(&b)));
    let mut stream: Vec<usize> = (0..n).collect();
    stream.sort_by(|&a, &b| fv[b].total_cmp(&fv[a]).then(sv[a].total_cmp(&sv[b])).then(a.cmp(&b)));

    let aligned = slots.iter().zip(&stream).all(|(&s, &v)| w[s].to_bits() == w[v].to_bits());
    if aligned {
        let mut out = vec![0.0; n];
        for (&s, &v) in slots.iter().zip(&stream) {
            out[s] = fv[v];
        }
        return f.with_values(out);
    }

    let parent_of = |i: usize| -> u32 {
        match carrier.parent_index() {
            Some(p) => p[i],
            None => i as u32,
        }
    };
    let mut parents: Vec<u32> = Vec::with_capacity(2 * n);
    let mut pieces: Vec<f64> = Vec::with_capacity(2 * n);
    let mut vals: Vec<f64> = Vec::with_capacity(2 * n);
    let mut si = 0;
    let mut cap = w[slots[0]];
    for &v in &stream {
        let value = fv[v];
        let mut rem = w[v];
        while rem > 0.0 {
            if si == n {
                // out of slots: rounding leftover lands in the last slot
                let last = slots[n - 1];
                parents.push(parent_of(last));
                pieces.push(rem);
                vals.push(value);
                break;
            }
            let slot = slots[si];
            let slot_w = w[slot];
            let (piece, rest) = if rem <= cap {
                (rem, 0.0)
            } else {
                let c = cap;
                if c >= rem / 2.0 {
                    (c, rem - c)
                } else {
                    let r = rem - c;
                    if r < rem {
                        (rem - r, r)
                    } else {
                        // c is below the resolution of rem: leave the slot short
                        // by c rather than create mass
                        (0.0, rem)
                    }
                }
            };
            parents.push(parent_of(slot));
            pieces.push(piece);
            vals.push(value);
            rem = rest;
            cap -= piece;
            if piece == 0.0 || cap <= 1e-13 * slot_w {
                si += 1;
                if si < n {
                    cap = w[slots[si]];
                }
            }
        }
    }
    // zero-weight pieces cannot be atoms; they only arise from exact fills
    let keep: Vec<usize> = (0..pieces.len()).filter(|&i| pieces[i] > 0.0).collect();
    let parents: Vec<u32> = keep.iter().map(|&i| parents[i]).collect();
    let weights: Vec<f64> = keep.iter().map(|&i| pieces[i]).collect();
    let values: Vec<f64> = keep.iter().map(|&i| vals[i]).collect();
    let refined = Carrier::refine(carrier, parents, weights)?;
    AtomicFunction::new(refined, values)
}

/// Schwarz symmetrization on a disc: the σ-rearrangement for σ = |x|.
pub fn schwarz_rearrange(f: &AtomicFunction) -> Result<AtomicFunction> {
    if !f.domain().is_disc() {
        return Err(RlabError::Unsupported("Schwarz rearrangement needs a disc domain".into()));
    }
    let sigma = SigmaField::build(SigmaSpec::PowerLaw { m: 1.0 }, f.carrier().root())?;
    sigma_rearrange(f, &sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiscGrid;
    use crate::measure::{mu_of, Domain};

    fn strip_example() -> (AtomicFunction, SigmaField) {
        let d = Domain::rectangle(1.0, 2.0).unwrap();
        let pos = vec![0.5, 0.25, 0.5, 0.75, 0.5, 1.25, 0.5, 1.75];
        let c = Carrier::new(d, 2, pos, vec![0.5; 4]).unwrap();
        let s = SigmaField::build(SigmaSpec::CoordX2, &c).unwrap();
        (AtomicFunction::new(c, vec![1.0, 3.0, 0.0, 2.0]).unwrap(), s)
    }

    #[test]
    fn rectangle_worked_example() {
        let (f, s) = strip_example();
        let r = sigma_rearrange(&f, &s).unwrap();
        assert_eq!(r.values(), &[3.0, 2.0, 1.0, 0.0]);
        assert!(mu_of(&r).bit_eq(&mu_of(&f)));
        let again = sigma_rearrange(&r, &s).unwrap();
        assert_eq!(again.values(), r.values());
    }

    #[test]
    fn sub_resolution_slot_does_not_create_mass() {
        let d = Domain::rectangle(1.0, 3.0).unwrap();
        let pos = vec![0.5, 0.5, 0.5, 1.5, 0.5, 2.5];
        // the first slot is far below the resolution of the largest atom
        let c = Carrier::new(d, 2, pos, vec![4e-17, 1.0, 1.0]).unwrap();
        let s = SigmaField::build(SigmaSpec::CoordX2, &c).unwrap();
        let g = AtomicFunction::new(c, vec![0.5, 1.0, 0.25]).unwrap();
        let r = sigma_rearrange(&g, &s).unwrap();
        for (v, w) in [(1.0, vec![1.0]), (0.5, vec![4e-17]), (0.25, vec![1.0])] {
            let pieces: Vec<f64> =
                r.values().iter().zip(r.weights()).filter(|(x, _)| **x == v).map(|(_, w)| *w).collect();
            assert_eq!(pieces, w, "value {v}");
        }
        assert!(mu_of(&r).bit_eq(&mu_of(&g)));
    }

    #[test]
    fn closed_form_jacobians() {
        let disc = ClosedForm::RadiusSquared { radius: 2.0 };
        assert_eq!(disc.a(1.5), PI * 1.5);
        assert_eq!(disc.a(9.0), PI * 4.0);
        assert_eq!(disc.big_b(3.0), 9.0 / (2.0 * PI));
        let strip = ClosedForm::CoordX2 { l1: 3.0, l2: 2.0 };
        assert_eq!(strip.a(0.5), 1.5);
        assert_eq!(strip.a(5.0), 6.0);
        assert_eq!(strip.h(1.0), Some(1.0 / 3.0));
        let pl = ClosedForm::PowerLaw { m: 1.0, d: 2, radius: 10.0 };
        assert!((pl.a(2.0) - PI * 4.0).abs() < 1e-12);
        assert!((pl.b(pl.a(2.0)) - 2.0).abs() < 1e-12);
        // m = d reduces to a constant 1/K_d
        let md = ClosedForm::PowerLaw { m: 2.0, d: 2, radius: 10.0 };
        assert!((md.h(0.7).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn a_of_b_is_identity_at_knots() {
        let g = DiscGrid::new(1.0, 12, 7).unwrap();
        for spec in [SigmaSpec::RadiusSquared, SigmaSpec::PowerLaw { m: 0.5 }] {
            let s = SigmaField::build(spec, &g.carrier).unwrap();
            let c = s.cumulative();
            for &mu in &c[..c.len() - 1] {
                assert_eq!(s.a(s.b(mu)), mu);
            }
            for &e in s.levels() {
                for &mu in &c[..c.len() - 1] {
                    assert_eq!(s.a(e) <= mu, e <= s.b(mu), "e={e} mu={mu}");
                }
            }
        }
    }

    #[test]
    fn empirical_big_b_matches_analytic_at_knots() {
        let g = DiscGrid::new(1.0, 20, 5).unwrap();
        let s = SigmaField::build(SigmaSpec::RadiusSquared, &g.carrier).unwrap();
        let cf = s.closed_form().unwrap();
        for (&mu, &bb) in s.cumulative().iter().zip(s.knot_values()) {
            assert!((bb - cf.big_b(mu)).abs() < 1e-13);
            assert!((s.big_b(mu) - bb).abs() < 1e-15);
        }
        assert!(s.ties().flagged);
        assert_eq!(s.ties().max_multiplicity, 5);
    }

    #[test]
    fn schwarz_four_atom_disc() {
        let d = Domain::disc(2.0).unwrap();
        let pos = vec![0.25, 0.0, 0.75, 0.0, 1.25, 0.0, 1.75, 0.0];
        let c = Carrier::new(d, 2, pos, vec![0.5; 4]).unwrap();
        let f = AtomicFunction::new(Arc::clone(&c), vec![0.0, 2.0, 1.0, 3.0]).unwrap();
        let r = schwarz_rearrange(&f).unwrap();
        assert_eq!(r.values(), &[3.0, 2.0, 1.0, 0.0]);
        let radial = AtomicFunction::new(c, vec![3.0, 2.0, 2.0, 0.5]).unwrap();
        assert_eq!(schwarz_rearrange(&radial).unwrap().values(), radial.values());
        let (sq, _) = strip_example();
        assert!(schwarz_rearrange(&sq).is_err());
    }

    #[test]
    fn unequal_weights_split_exactly() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let pos = vec![0.5, 0.1, 0.5, 0.3, 0.5, 0.6, 0.5, 0.9];
        let c = Carrier::new(d, 2, pos, vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let s = SigmaField::build(SigmaSpec::CoordX2, &c).unwrap();
        let f = AtomicFunction::new(c, vec![0.5, 1.0, 4.0, 2.0]).unwrap();
        let r = sigma_rearrange(&f, &s).unwrap();
        assert!(r.carrier().parent_index().is_some());
        assert!(mu_of(&r).bit_eq(&mu_of(&f)));
        // nonincreasing along σ of the parent atoms
        let sv = s.values_on(r.carrier()).unwrap();
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
        for w in order.windows(2) {
            if sv[w[0]] < sv[w[1]] {
                assert!(r.values()[w[0]] >= r.values()[w[1]]);
            }
        }
        let hl = s.integrate_against(&f).unwrap() - s.integrate_against(&r).unwrap();
        assert!(hl >= 0.0);
    }

    #[test]
    fn empirical_csv_roundtrip_and_errors() {
        let (f, s) = strip_example();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let e = SigmaField::read_csv(f.carrier(), buf.as_slice()).unwrap();
        assert_eq!(e.values(), s.values());
        assert_eq!(e.family(), SigmaFamily::Empirical);
        assert!(SigmaField::build(SigmaSpec::RadiusSquared, f.carrier()).is_err());
        let g = DiscGrid::new(1.0, 2, 2).unwrap();
        assert!(SigmaField::build(SigmaSpec::PowerLaw { m: 3.0 }, &g.carrier).is_err());
    }
}
