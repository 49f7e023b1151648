//! Experiment pipelines and the run record they produce.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use rlab_core::certify::{
    certify_corollary1, certify_refined, certify_remark3, certify_thm1, oracle_layer_cake, Certificate, Status,
};
use rlab_core::euler2d::{
    build_psi0, certify_euler_domain, certify_euler_symmetric, certify_euler_symmetric_compact, evolve_strip,
    psi0_curve, EulerGrid, EvolveOptions, Psi0Options, SteadyKind, SteadyStateEuler, VorticityField,
};
use rlab_core::grid::{DiscGrid, RectGrid};
use rlab_core::measure::{l1_distance, write_atoms_csv};
use rlab_core::rng::{bump_values, random_function, FunctionFamily, SeedSequencer};
use rlab_core::vlasov::{
    a_e0_curve, build_steady_vp_with, certify_vp_global, certify_vp_h3, certify_vp_z2, interpolation_diag, VpResolution,
};
use rlab_core::{sigma_rearrange, AtomicFunction, Carrier, SigmaField, SigmaSpec};

use crate::config::{DomainConfig, Experiment, ExperimentConfig, SigmaConfig};

/// Carriers up to this size also get the quadratic-cost layer-cake cross-check.
const ORACLE_MAX_ATOMS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialCertificate {
    pub trial: usize,
    pub label: String,
    pub certificate: Certificate,
}

/// One row of the slack-vs-time series of a strip run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    #[serde(rename = "L1_dist_to_q")]
    pub l1_dist_to_q: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InequalityTally {
    pub count: usize,
    pub violations: usize,
    pub inconclusive: usize,
    pub min_slack: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub certificates: usize,
    pub holds: usize,
    pub violations: usize,
    pub inconclusive: usize,
    pub min_slack: Option<f64>,
    /// Smallest `slack / max(|lhs|, |rhs|)`.
    pub min_relative_slack: Option<f64>,
    pub by_inequality: BTreeMap<String, InequalityTally>,
    /// Caveat kinds (text before the first `:` or `;`) and how many certificates carry them.
    pub caveat_tally: BTreeMap<String, usize>,
}

impl Summary {
    pub fn of(certs: &[TrialCertificate]) -> Self {
        let mut s = Summary { certificates: certs.len(), ..Summary::default() };
        let lower = |m: &mut Option<f64>, v: f64| {
            if v.is_finite() {
                *m = Some(m.map_or(v, |x: f64| x.min(v)));
            }
        };
        for tc in certs {
            let c = &tc.certificate;
            let id = serde_json::to_value(c.inequality_id).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let t = s.by_inequality.entry(id).or_default();
            t.count += 1;
            match c.status {
                Status::Holds => s.holds += 1,
                Status::Violated => {
                    s.violations += 1;
                    t.violations += 1;
                }
                Status::Inconclusive => {
                    s.inconclusive += 1;
                    t.inconclusive += 1;
                }
            }
            lower(&mut t.min_slack, c.slack);
            lower(&mut s.min_slack, c.slack);
            if let Some(r) = relative_slack(c) {
                lower(&mut s.min_relative_slack, r);
            }
            let mut kinds: Vec<String> = c.caveats.iter().map(|cv| caveat_kind(cv)).collect();
            kinds.dedup();
            for k in kinds {
                *s.caveat_tally.entry(k).or_default() += 1;
            }
        }
        s
    }
}

fn caveat_kind(text: &str) -> String {
    text.split([':', ';']).next().unwrap_or(text).trim().to_string()
}

/// `slack / max(|lhs|, |rhs|)`, `None` when the slack is not finite.
pub fn relative_slack(c: &Certificate) -> Option<f64> {
    if !c.slack.is_finite() {
        return None;
    }
    let scale = c.lhs.abs().max(c.rhs.abs());
    Some(if scale > 0.0 { c.slack / scale } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub run_dir: PathBuf,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub certificates: Vec<TrialCertificate>,
    pub trajectory: Vec<TrajectoryRow>,
    /// Scalar diagnostics of the pipeline (residuals, constants, drifts).
    pub diagnostics: BTreeMap<String, f64>,
    /// Files written by the run, relative to `run_dir`.
    pub artifacts: Vec<String>,
    pub summary: Summary,
}

impl RunRecord {
    /// Record with no trials, e.g. rebuilt from a config snapshot.
    pub fn empty(config: ExperimentConfig, run_dir: PathBuf) -> Self {
        let now = unix_now();
        RunRecord {
            config,
            run_dir,
            started: now,
            finished: now,
            certificates: Vec::new(),
            trajectory: Vec::new(),
            diagnostics: BTreeMap::new(),
            artifacts: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.certificates.is_empty() && self.trajectory.is_empty()
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).with_context(|| format!("writing {}", path.display()))
}

/// What a pipeline hands back before the record is assembled.
#[derive(Default)]
struct Outcome {
    certificates: Vec<TrialCertificate>,
    trajectory: Vec<TrajectoryRow>,
    diagnostics: BTreeMap<String, f64>,
    artifacts: Vec<String>,
}

impl Outcome {
    fn push(&mut self, trial: usize, label: impl Into<String>, c: Certificate) {
        self.certificates.push(TrialCertificate { trial, label: label.into(), certificate: c });
    }
}

/// Runs the configured pipeline and writes its artifacts under the run
/// directory. With zero trials only the config snapshot is written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let dir = config.run_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("config.json"), config)?;
    let started = unix_now();
    let trial_based = config.experiment != Experiment::EulerStripRun;
    if trial_based && config.trials == 0 {
        return Ok(RunRecord::empty(config.clone(), dir));
    }
    let mut out = match config.experiment {
        Experiment::CertifySweep => certify_sweep(config)?,
        Experiment::Corollary1Sweep => corollary1_sweep(config)?,
        Experiment::EulerStripRun => euler_strip_run(config, &dir)?,
        Experiment::EulerDiscCertify => euler_disc_certify(config)?,
        Experiment::EulerDomainCertify => euler_domain_certify(config)?,
        Experiment::VpBuildAndCertify => vp_build_and_certify(config, &dir)?,
    };
    let tol = config.tolerances.status_rel;
    if tol != rlab_core::certify::STATUS_TOL {
        for tc in &mut out.certificates {
            tc.certificate = tc.certificate.clone().with_status_tolerance(tol);
        }
    }
    write_json(&dir.join("certificates.json"), &out.certificates)?;
    out.artifacts.push("certificates.json".into());
    out.artifacts.push("run.json".into());
    let summary = Summary::of(&out.certificates);
    let record = RunRecord {
        config: config.clone(),
        run_dir: dir.clone(),
        started,
        finished: unix_now(),
        certificates: out.certificates,
        trajectory: out.trajectory,
        diagnostics: out.diagnostics,
        artifacts: out.artifacts,
        summary,
    };
    write_json(&dir.join("run.json"), &record)?;
    Ok(record)
}

fn carrier_for(cfg: &ExperimentConfig) -> Result<Arc<Carrier>> {
    let (n1, n2) = (cfg.resolution.n1, cfg.resolution.n2);
    Ok(match cfg.domain {
        DomainConfig::Disc { radius } => DiscGrid::new(radius, n1, n2)?.carrier,
        DomainConfig::Plane { cutoff } => DiscGrid::truncated_plane(cutoff, n1, n2)?.carrier,
        DomainConfig::Rectangle { l1, l2 } => RectGrid::new(l1, l2, n1, n2)?.carrier,
        DomainConfig::Strip { l1, cutoff } => RectGrid::strip(l1, cutoff, n1, n2)?.carrier,
    })
}

fn disc_grid(cfg: &ExperimentConfig) -> Result<DiscGrid> {
    match cfg.domain {
        DomainConfig::Disc { radius } => Ok(DiscGrid::new(radius, cfg.resolution.n1, cfg.resolution.n2)?),
        _ => bail!("{} needs a disc domain", cfg.experiment.name()),
    }
}

fn certify_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let carrier = carrier_for(cfg)?;
    let spec = match cfg.sigma.as_ref().context("sigma missing")? {
        SigmaConfig::RadiusSquared => SigmaSpec::RadiusSquared,
        SigmaConfig::CoordX2 => SigmaSpec::CoordX2,
        SigmaConfig::PowerLaw { m } => SigmaSpec::PowerLaw { m: *m },
    };
    let sigma = SigmaField::build(spec, &carrier)?;
    let seq = SeedSequencer::new(cfg.seed);
    let with_oracle = carrier.len() <= ORACLE_MAX_ATOMS;
    let mut out = Outcome::default();
    let (mut worst_oracle, mut oracle_misses) = (0.0f64, 0usize);
    for i in 0..cfg.trials {
        let mut rng = seq.stream(i as u64);
        let f = random_function(&mut rng, &carrier, &FunctionFamily::PiecewiseBumps)?;
        let (kind, fam) = match i % 3 {
            0 => ("independent", FunctionFamily::PiecewiseBumps),
            1 => ("perturbation", FunctionFamily::AdditivePerturbationOf { base: f.clone(), amplitude: 0.1 * f.max_value() }),
            _ => ("shuffle", FunctionFamily::EquimeasurableShuffleOf(f.clone())),
        };
        let q = random_function(&mut rng, &carrier, &fam)?;
        out.push(i, format!("{kind}/ineq1"), certify_thm1(&f, &q, &sigma)?);
        out.push(i, format!("{kind}/ineq2"), certify_refined(&f, &sigma)?);
        let mut r = certify_remark3(&f, &q, &sigma)?;
        if with_oracle {
            let o = oracle_layer_cake(&f, &q, &sigma)?.remark3_lhs;
            let rel = (o - r.lhs).abs() / r.lhs.abs().max(o.abs()).max(f64::MIN_POSITIVE);
            worst_oracle = worst_oracle.max(rel);
            if rel > cfg.tolerances.oracle_rel {
                oracle_misses += 1;
                r = r.caveat(format!("layer-cake oracle disagrees: relative difference {rel:e}"));
            }
            r = r.with("oracle_lhs", o).with("oracle_rel_diff", rel);
        }
        out.push(i, format!("{kind}/ineq11"), r);
    }
    out.diagnostics.insert("atoms".into(), carrier.len() as f64);
    if with_oracle {
        out.diagnostics.insert("oracle_max_rel_diff".into(), worst_oracle);
        out.diagnostics.insert("oracle_mismatches".into(), oracle_misses as f64);
    }
    Ok(out)
}

fn corollary1_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = disc_grid(cfg)?;
    let seq = SeedSequencer::new(cfg.seed);
    let mut out = Outcome::default();
    for (j, &m) in cfg.m_values.iter().enumerate() {
        let sigma = SigmaField::build(SigmaSpec::PowerLaw { m }, &grid.carrier)?;
        for i in 0..cfg.trials {
            let mut rng = seq.stream((j * cfg.trials + i) as u64);
            let u = random_function(&mut rng, &grid.carrier, &FunctionFamily::PiecewiseBumps)?;
            out.push(i, format!("m={m}"), certify_corollary1(&u, m)?);
            if i == 0 {
                let u_star = sigma_rearrange(&u, &sigma)?;
                out.push(i, format!("m={m}/rearranged"), certify_corollary1(&u_star, m)?);
            }
        }
    }
    Ok(out)
}

fn euler_strip_run(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let DomainConfig::Rectangle { l1, l2 } = cfg.domain else { bail!("euler_strip_run needs a rectangle") };
    let g = RectGrid::new(l1, l2, cfg.resolution.n1, cfg.resolution.n2)?;
    let q = SteadyStateEuler::shear(&g, |y| (1.0 - y).max(0.0))?;
    let p = cfg.euler;
    let mut rng = SeedSequencer::new(cfg.seed).stream(0);
    let phase = 2.0 * PI * rng.random::<f64>();
    let amp = p.amplitude * q.field.values().iter().fold(0.0f64, |m, v| m.max(*v));
    let v = g.values(|x, y| ((1.0 - y).max(0.0) + amp * (2.0 * PI * x / l1 + phase).sin() * (PI * y / l2).sin()).max(0.0));
    let w_in = VorticityField::new(EulerGrid::Rect(g.clone()), v)?;
    let tr = evolve_strip(&w_in, p.t_final, p.dt, EvolveOptions { sample_every: p.sample_every, cfl_max: p.cfl_max })?;
    let a_in = w_in.as_atoms();
    let qa = q.field.as_atoms();
    let mut out = Outcome::default();
    let (mut mass, mut mom, mut neg) = (0.0f64, 0.0f64, 0.0f64);
    for (k, s) in tr.samples.iter().enumerate() {
        let wt = s.clamped(&tr.grid).as_atoms();
        let c = certify_euler_symmetric(&a_in, &wt, &q)?
            .with("t", s.t)
            .with("negative_mass", s.negative_mass)
            .with("distribution_drift", s.distribution_drift);
        out.trajectory.push(TrajectoryRow {
            t: s.t,
            l1_dist_to_q: l1_distance(&wt, &qa)?,
            lhs: c.lhs,
            rhs: c.rhs,
            slack: c.slack,
            mass_drift: s.mass_drift,
            momentum_drift: s.momentum_drift,
        });
        mass = mass.max(s.mass_drift);
        mom = mom.max(s.momentum_drift);
        neg = neg.max(s.negative_mass);
        out.push(k, format!("t={}", s.t), c);
    }
    out.diagnostics.insert("steps".into(), tr.steps as f64);
    out.diagnostics.insert("max_cfl".into(), tr.max_cfl);
    out.diagnostics.insert("max_mass_drift".into(), mass);
    out.diagnostics.insert("max_momentum_drift".into(), mom);
    out.diagnostics.insert("max_negative_mass".into(), neg);
    crate::report::write_trajectory_csv(&dir.join("trajectory.csv"), &out.trajectory)?;
    out.artifacts.push("trajectory.csv".into());
    Ok(out)
}

/// Permutes values within each ring: preserves the distribution function and `∫|x|²ω` exactly.
fn ring_shuffle<R: Rng>(rng: &mut R, grid: &DiscGrid, f: &AtomicFunction) -> Result<AtomicFunction> {
    let mut v = f.values().to_vec();
    for ring in v.chunks_mut(grid.ntheta) {
        ring.shuffle(rng);
    }
    Ok(f.with_values(v)?)
}

fn euler_disc_certify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = disc_grid(cfg)?;
    let r2 = grid.radius * grid.radius;
    let q = SteadyStateEuler::radial(&grid, |r| (1.0 - r * r / r2).max(0.0))?;
    let qa = q.field.as_atoms();
    let seq = SeedSequencer::new(cfg.seed);
    let mut out = Outcome::default();
    for i in 0..cfg.trials {
        let mut rng = seq.stream(i as u64);
        // blend toward a random non-radial field: ω_in − q changes sign
        let a = (cfg.euler.amplitude * (1 + i % 5) as f64).min(1.0);
        let b = random_function(&mut rng, &grid.carrier, &FunctionFamily::PiecewiseBumps)?;
        let k = qa.max_value() / b.max_value();
        let w_in = qa.with_values(qa.values().iter().zip(b.values()).map(|(q, b)| (1.0 - a) * q + a * k * b).collect())?;
        let w_t = ring_shuffle(&mut rng, &grid, &w_in)?;
        out.push(i, "radial", certify_euler_symmetric(&w_in, &w_t, &q)?);
        out.push(i, "radial/compact", certify_euler_symmetric_compact(&w_in, &w_t, &q)?);
    }
    Ok(out)
}

fn euler_domain_certify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = disc_grid(cfg)?;
    let ss = build_psi0(|p| (1.0 - p).max(0.0), EulerGrid::Disc(grid), Psi0Options::default())?;
    let mut out = Outcome::default();
    if let SteadyKind::StreamMonotone { residual_history, .. } = &ss.kind {
        out.diagnostics.insert("psi0_residual".into(), residual_history.last().copied().unwrap_or(f64::NAN));
        out.diagnostics.insert("psi0_iterations".into(), residual_history.len() as f64);
    }
    let curve = psi0_curve(&ss)?;
    out.diagnostics.insert("psi0_min_slope_increment".into(), curve.report.min_slope_increment);
    out.diagnostics.insert("psi0_strictly_convex".into(), if curve.report.strictly_convex { 1.0 } else { 0.0 });
    let w0 = ss.field.as_atoms();
    let seq = SeedSequencer::new(cfg.seed);
    for i in 0..cfg.trials {
        let mut rng = seq.stream(i as u64);
        let om = random_function(&mut rng, w0.carrier(), &FunctionFamily::EquimeasurableShuffleOf(w0.clone()))?;
        out.push(i, "shuffle", certify_euler_domain(&om, &ss)?);
    }
    Ok(out)
}

fn vp_build_and_certify(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let p = cfg.vp;
    let res = VpResolution { nr: p.nr, nv: p.nv, table_points: p.table_points, ..VpResolution::default() };
    let ss = build_steady_vp_with(p.k, p.kappa, p.e0, res)?;
    let mut out = Outcome::default();
    let k = ss.stability_constant()?;
    let curve = a_e0_curve(&ss)?;
    let d = &mut out.diagnostics;
    d.insert("poisson_residual".into(), ss.potential.poisson_residual);
    d.insert("shooting_residual".into(), ss.potential.shooting_residual);
    d.insert("phi_at_zero".into(), ss.phi_at_zero());
    d.insert("support_radius".into(), ss.potential.support_radius);
    d.insert("support_measure".into(), ss.support_measure);
    d.insert("mass".into(), ss.f0.integral());
    d.insert("hamiltonian_f0".into(), ss.hamiltonian0);
    d.insert("fixed_point_defect".into(), ss.fixed_point_defect()?);
    d.insert("a_e0_max_rel_err".into(), curve.max_rel_err());
    d.insert("k_computed".into(), k.computed.value);
    d.insert("k_bound".into(), k.bound);
    d.insert("k_used".into(), k.used);
    d.insert("interpolation_ratio_f0".into(), interpolation_diag(&ss.f0)?.ratio);

    #[derive(Serialize)]
    struct Bundle<'a> {
        steady_state: rlab_core::vlasov::SteadyBundle,
        resolution: VpResolution,
        diagnostics: &'a BTreeMap<String, f64>,
        a_e0: &'a rlab_core::vlasov::AE0Curve,
    }
    let bundle = Bundle { steady_state: ss.bundle(), resolution: res, diagnostics: &out.diagnostics, a_e0: &curve };
    write_json(&dir.join("vp_bundle.json"), &bundle)?;
    out.artifacts.push("vp_bundle.json".into());
    if p.write_f0_csv {
        let path = dir.join("f0.csv");
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_atoms_csv(&ss.f0, BufWriter::new(f)).with_context(|| format!("writing {}", path.display()))?;
        out.artifacts.push("f0.csv".into());
    }

    let carrier = Arc::clone(ss.f0.carrier());
    let seq = SeedSequencer::new(cfg.seed);
    let scale = ss.f0.max_value();
    for i in 0..cfg.trials {
        let mut rng = seq.stream(i as u64);
        let level = (1 + i % 5) as f64;
        let (kind, f) = match i % 3 {
            0 => {
                let fam = FunctionFamily::AdditivePerturbationOf { base: ss.f0.clone(), amplitude: p.amplitude * level * scale };
                ("additive", random_function(&mut rng, &carrier, &fam)?)
            }
            1 => {
                // transport along a perturbed energy: equimeasurable with f₀
                let strength = 10.0 * p.amplitude * level;
                let b = bump_values(&mut rng, &carrier);
                let e: Vec<f64> = ss.a_e0.values().iter().zip(&b).map(|(s, b)| s + strength * b).collect();
                let sigma = SigmaField::build(SigmaSpec::Empirical { values: e }, &carrier)?;
                ("transport", sigma_rearrange(&ss.f0, &sigma)?)
            }
            _ => ("scaling", ss.f0.scaled((1.0 + 10.0 * p.amplitude * (level - 3.0)).max(0.05))?),
        };
        out.push(i, kind, certify_vp_global(&f, &ss)?);
        out.push(i, kind, certify_vp_h3(&f, &ss)?);
        if i < p.z2_trials {
            out.push(i, kind, certify_vp_z2(&f, &ss)?);
        }
    }
    Ok(out)
}
