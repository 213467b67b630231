//! Verification suites: each check measures one residual against one threshold.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use qrf_core::equivalence::{equivalent, invariant_set};
use qrf_core::framechange::{
    agreement_check, commuting_triangle_check, frame_change_compose_check, frame_change_inverse_check,
    superposition_witness, well_definedness_check, CheckReport, CompetingMap, FrameChangeScenario,
};
use qrf_core::frames::{canonical_frame, check_norm1, verify_covariance, Convention};
use qrf_core::groups::{make_preset, FiniteGroup, GroupPreset};
use qrf_core::operators::{tensor, trace_pair, DensityState, Operator};
use qrf_core::phaselab::{
    build_phase_povm, canonical_coefficients, conditioned_identity_convergence, dirac_convergence_experiment,
    standard_test_sets, TruncatedPhasePOVM,
};
use qrf_core::relativization::{
    cp_spot_check, multiplicativity_defect, predual_relativize, product_relative_state, relative_orientation,
    relativize, restrict, swap_relation_residual, RelativePair,
};
use qrf_core::representations::{inverse_convention_rep, regular_rep, Direction};
use qrf_core::sampling::Sampler;
use serde::{Deserialize, Serialize};

use crate::config::{SuiteConfig, MAX_FRAME_CHANGE_ORDER};
use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Kinematics,
    Relativization,
    Framechange,
    Comparison,
    Phase,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::Kinematics,
        SuiteName::Relativization,
        SuiteName::Framechange,
        SuiteName::Comparison,
        SuiteName::Phase,
    ];
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SuiteName::Kinematics => "kinematics",
            SuiteName::Relativization => "relativization",
            SuiteName::Framechange => "framechange",
            SuiteName::Comparison => "comparison",
            SuiteName::Phase => "phase",
        };
        f.write_str(s)
    }
}

impl FromStr for SuiteName {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| CliError::config("suite", format!("unknown suite `{s}`")))
    }
}

/// Which side of the threshold passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Below,
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub cases: usize,
    pub residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub group: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

struct Measurement {
    cases: usize,
    residual: f64,
}

fn worst(values: impl IntoIterator<Item = f64>) -> Measurement {
    let (mut cases, mut residual) = (0, 0.0f64);
    for v in values {
        cases += 1;
        residual = residual.max(v);
    }
    Measurement { cases, residual }
}

fn single(residual: f64) -> Measurement {
    Measurement { cases: 1, residual }
}

impl From<CheckReport> for Measurement {
    fn from(r: CheckReport) -> Self {
        Measurement { cases: r.cases, residual: r.max_residual }
    }
}

/// Largest step against the required direction; negative iff strictly monotone.
fn monotone_defect(values: &[f64], increasing: bool) -> f64 {
    values.windows(2).map(|w| if increasing { w[0] - w[1] } else { w[1] - w[0] }).fold(f64::NEG_INFINITY, f64::max)
}

struct Recorder {
    checks: Vec<CheckRecord>,
    timings: bool,
}

impl Recorder {
    fn run(
        &mut self,
        id: &str,
        anchor: &str,
        bound: Bound,
        threshold: f64,
        f: impl FnOnce() -> qrf_core::Result<Measurement>,
    ) -> Result<()> {
        let start = Instant::now();
        let m = f()?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let pass = match bound {
            Bound::Below => m.residual < threshold,
            Bound::Above => m.residual > threshold,
        };
        self.checks.push(CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            cases: m.cases,
            residual: m.residual,
            threshold,
            bound,
            pass,
            runtime_ms: self.timings.then_some(elapsed),
        });
        Ok(())
    }
}

/// Run one suite. Deterministic for a fixed config (runtimes aside, which are opt-in).
pub fn run_suite(name: SuiteName, config: &SuiteConfig) -> Result<SuiteReport> {
    let preset = config.validate()?;
    let group = make_preset(preset)?;
    let mut rec = Recorder { checks: Vec::new(), timings: config.timings };
    let mut s = Sampler::new(config.seed);
    match name {
        SuiteName::Kinematics => kinematics(&mut rec, &group, config, &mut s)?,
        SuiteName::Relativization => relativization(&mut rec, &group, config, &mut s)?,
        SuiteName::Framechange => {
            require_small(&group, preset)?;
            framechange(&mut rec, &group, config, &mut s)?
        }
        SuiteName::Comparison => {
            require_small(&group, preset)?;
            comparison(&mut rec, &group, config, &mut s)?
        }
        SuiteName::Phase => phase(&mut rec, config, &mut s)?,
    }
    let pass = rec.checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite: name, group: preset.to_string(), seed: config.seed, checks: rec.checks, pass })
}

fn require_small(group: &FiniteGroup, preset: GroupPreset) -> Result<()> {
    if group.order() > MAX_FRAME_CHANGE_ORDER {
        return Err(CliError::config(
            "group",
            format!(
                "{preset} has order {}; frame-change suites accept order ≤ {MAX_FRAME_CHANGE_ORDER}",
                group.order()
            ),
        ));
    }
    Ok(())
}

fn states(s: &mut Sampler, d: usize, n: usize) -> Vec<Operator> {
    (0..n).map(|_| s.state(d).into_op()).collect()
}

fn kinematics(rec: &mut Recorder, g: &FiniteGroup, c: &SuiteConfig, s: &mut Sampler) -> Result<()> {
    use Bound::*;
    let rep = regular_rep(g);
    let n = g.order();
    let ops: Vec<Operator> = (0..c.batch).map(|_| s.operator(n)).collect();
    let rhos = states(s, n, c.batch);

    rec.run("rep.homomorphism", "representations: unitary homomorphism", Below, c.tol, || {
        Ok(worst(g.elements().flat_map(|a| {
            let rep = &rep;
            g.elements().map(move |b| (&(rep.matrix(a) * rep.matrix(b)) - rep.matrix(g.mul(a, b))).op_norm())
        })))
    })?;
    rec.run("rep.unitary", "representations: unitary homomorphism", Below, c.tol, || {
        Ok(worst(rep.matrices().iter().map(|u| (&(&u.adjoint() * u) - &Operator::identity(n)).op_norm())))
    })?;
    rec.run("twirl.idempotent", "representations: twirl is a projection", Below, c.tol, || {
        let mut r = Vec::new();
        for x in &ops {
            let t = rep.twirl(x, Direction::Observable)?;
            r.push(rep.twirl(&t, Direction::Observable)?.max_abs_diff(&t));
        }
        Ok(worst(r))
    })?;
    rec.run("twirl.duality", "representations: twirl duality", Below, c.tol, || {
        let mut r = Vec::new();
        for (x, rho) in ops.iter().zip(&rhos) {
            let tx = rep.twirl(x, Direction::Observable)?;
            let trho = rep.twirl(rho, Direction::State)?;
            let a = trace_pair(&tx, rho)?;
            r.push((a - trace_pair(x, &trho)?).norm().max((a - trace_pair(&tx, &trho)?).norm()));
        }
        Ok(worst(r))
    })?;
    rec.run("twirl.commutant", "representations: twirl image in commutant", Below, c.tol, || {
        let mut r = Vec::new();
        for x in &ops {
            r.push(rep.commutator_residual(&rep.twirl(x, Direction::Observable)?));
        }
        Ok(worst(r))
    })?;
    rec.run("commutant.dimension", "representations: regular commutant dimension", Below, 0.5, || {
        Ok(single((rep.invariant_commutant().len() as f64 - n as f64).abs()))
    })?;

    let frame = canonical_frame(g, Convention::LeftRegular);
    rec.run("frame.normalization", "frames: POVM normalization", Below, c.tol, || {
        Ok(single(frame.povm().normalization_residual()))
    })?;
    rec.run("frame.covariance", "frames: system of covariance", Below, c.tol, || {
        Ok(single(verify_covariance(&frame).residual))
    })?;
    rec.run("frame.norm1", "frames: norm-1 property", Below, c.tol, || {
        Ok(single(1.0 - check_norm1(frame.povm()).worst_norm))
    })?;
    rec.run("frame.born", "frames: Born rule", Below, c.tol, || {
        let mut r = Vec::new();
        for rho in &rhos {
            let p = frame.povm().born(rho)?;
            let negative = p.iter().fold(0.0f64, |m, &x| m.max(-x));
            r.push((p.iter().sum::<f64>() - 1.0).abs().max(negative));
        }
        Ok(worst(r))
    })?;
    Ok(())
}

fn relativization(rec: &mut Recorder, g: &FiniteGroup, c: &SuiteConfig, s: &mut Sampler) -> Result<()> {
    use Bound::*;
    let pair = RelativePair::new(canonical_frame(g, Convention::LeftRegular), regular_rep(g))?;
    let joint = pair.joint_rep();
    let (n, ds) = (g.order(), pair.system_dim());
    let ops: Vec<Operator> = (0..2 * c.batch).map(|_| s.operator(ds)).collect();
    let e = pair.frame().localized_state(g.identity())?;

    rec.run("restrict.recovery", "relativization: exact recovery for ideal frames", Below, c.tol, || {
        let mut r = Vec::new();
        for a in &ops[..c.batch] {
            r.push((&restrict(&e, &relativize(&pair, a)?)? - a).op_norm());
        }
        Ok(worst(r))
    })?;
    rec.run("relativize.invariance", "relativization: invariant image", Below, c.tol, || {
        let mut r = Vec::new();
        for a in &ops[..c.batch] {
            let image = relativize(&pair, a)?;
            for h in g.elements() {
                r.push((&joint.conjugate(h, &image, Direction::Observable)? - &image).op_norm());
            }
        }
        Ok(worst(r))
    })?;
    rec.run("relativize.isometry", "relativization: isometry on localizable frames", Below, c.tol, || {
        let mut r = Vec::new();
        for a in &ops[..c.batch] {
            r.push((relativize(&pair, a)?.op_norm() - a.op_norm()).abs());
        }
        Ok(worst(r))
    })?;
    rec.run("relativize.multiplicative", "relativization: multiplicative for sharp frames", Below, c.tol, || {
        let mut r = Vec::new();
        for (a, b) in ops[..c.batch].iter().zip(&ops[c.batch..]) {
            r.push(multiplicativity_defect(&pair, a, b)?);
        }
        Ok(worst(r))
    })?;
    let min_eig = cp_spot_check(&pair, s, c.batch)?;
    rec.run("relativize.cp", "relativization: complete positivity", Below, c.tol, || {
        Ok(Measurement { cases: c.batch, residual: (-min_eig).max(0.0) })
    })?;

    let samples: Vec<(DensityState, DensityState, DensityState, usize)> =
        (0..c.batch).map(|_| (s.state(n), s.state(ds), s.state(n * ds), s.index(n))).collect();
    rec.run("predual.duality", "relativization: predual", Below, c.tol, || {
        let mut r = Vec::new();
        for (a, (_, _, omega, _)) in ops.iter().zip(&samples) {
            let lhs = trace_pair(&relativize(&pair, a)?, omega.op())?;
            let rhs = trace_pair(a, predual_relativize(&pair, omega)?.op())?;
            r.push((lhs - rhs).norm());
        }
        Ok(worst(r))
    })?;

    let (fr, sr) = (pair.frame().rep(), pair.system_rep());
    rec.run("conditioning.symmetry", "conditioning: product relative state symmetry", Below, c.tol, || {
        let mut r = Vec::new();
        for (omega, rho, _, h) in &samples {
            let h_omega = DensityState::new_unchecked(fr.conjugate(*h, omega.op(), Direction::State)?);
            let hinv_rho = DensityState::new_unchecked(sr.conjugate(g.inv(*h), rho.op(), Direction::State)?);
            let lhs = product_relative_state(&pair, &h_omega, rho)?;
            r.push(lhs.op().max_abs_diff(product_relative_state(&pair, omega, &hinv_rho)?.op()));
        }
        Ok(worst(r))
    })?;
    rec.run("conditioning.invariant_system", "conditioning: invariant system states are fixed", Below, c.tol, || {
        let mut r = Vec::new();
        for (omega, rho, _, _) in &samples {
            let fixed = DensityState::new_unchecked(sr.twirl(rho.op(), Direction::State)?);
            r.push(product_relative_state(&pair, omega, &fixed)?.op().max_abs_diff(fixed.op()));
        }
        Ok(worst(r))
    })?;
    rec.run("conditioning.invariant_frame", "conditioning: invariant frame states twirl", Below, c.tol, || {
        let mut r = Vec::new();
        for (omega, rho, _, _) in &samples {
            let inv = DensityState::new_unchecked(fr.twirl(omega.op(), Direction::State)?);
            let twirled = sr.twirl(rho.op(), Direction::State)?;
            r.push(product_relative_state(&pair, &inv, rho)?.op().max_abs_diff(&twirled));
        }
        Ok(worst(r))
    })?;
    let g_set = invariant_set(sr);
    rec.run("conditioning.g_class", "conditioning: G-class preserved", Below, c.tol, || {
        let mut r = Vec::new();
        for (omega, rho, _, _) in &samples {
            let out = product_relative_state(&pair, omega, rho)?;
            r.push(equivalent(out.op(), rho.op(), &g_set)?.residual);
        }
        Ok(worst(r))
    })?;

    let frame = pair.frame();
    rec.run("orientation.dirac", "relativization: relative orientation of localized frames", Below, c.tol, || {
        let o = relative_orientation(frame, frame)?;
        let mut r = Vec::new();
        for h in g.elements() {
            let joint = tensor(&Operator::basis_projector(n, g.identity()), &Operator::basis_projector(n, h));
            for (x, p) in o.born(&joint)?.into_iter().enumerate() {
                r.push((p - if x == h { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(worst(r))
    })?;
    rec.run("orientation.swap", "relativization: SWAP relation", Below, c.tol, || {
        Ok(single(swap_relation_residual(frame, frame)?))
    })?;
    Ok(())
}

fn framechange(rec: &mut Recorder, g: &FiniteGroup, c: &SuiteConfig, s: &mut Sampler) -> Result<()> {
    let f = canonical_frame(g, Convention::LeftRegular);
    let sc = FrameChangeScenario::new(f.clone(), f.clone(), regular_rep(g))?.with_third(f)?;
    let n = g.order();
    let pairs = states(s, n * n, c.batch);
    let triples = states(s, n * n * n, c.batch);
    let anchor = "framechange: localized frame transformation";
    rec.run("framechange.inverse", anchor, Bound::Below, c.tol, || {
        frame_change_inverse_check(&sc, &pairs).map(Into::into)
    })?;
    rec.run("framechange.compose", anchor, Bound::Below, c.tol, || {
        frame_change_compose_check(&sc, &triples).map(Into::into)
    })?;
    rec.run("framechange.triangle", anchor, Bound::Below, c.tol, || {
        commuting_triangle_check(&sc, &triples).map(Into::into)
    })?;
    rec.run("framechange.well_defined", anchor, Bound::Below, c.tol, || {
        well_definedness_check(&sc, &pairs, s).map(Into::into)
    })?;
    Ok(())
}

fn comparison(rec: &mut Recorder, g: &FiniteGroup, c: &SuiteConfig, s: &mut Sampler) -> Result<()> {
    use Bound::*;
    let f = canonical_frame(g, Convention::Inverse);
    let sc = FrameChangeScenario::new(f.clone(), f, inverse_convention_rep(g))?;
    let n = g.order();
    let inputs: Vec<Operator> = (0..c.batch).map(|_| tensor(s.state(n).op(), s.state(n).op())).collect();
    let anchor = "framechange: comparison with unitary frame changes";
    rec.run("comparison.unitary", anchor, Below, c.tol, || {
        agreement_check(&sc, &inputs, CompetingMap::Unitary).map(Into::into)
    })?;
    rec.run("comparison.perspective_neutral", anchor, Below, c.tol, || {
        agreement_check(&sc, &inputs, CompetingMap::PerspectiveNeutral).map(Into::into)
    })?;
    let w = superposition_witness(&sc, 0, 1, g.identity())?;
    let witness = "framechange: coherent output versus Lüders mixture";
    rec.run("witness.signature", witness, Below, c.tol, || Ok(single(w.signature_residual)))?;
    rec.run("witness.trace_distance", witness, Above, 0.05, || Ok(single(w.trace_distance)))?;
    rec.run("witness.unitary_negativity", witness, Above, 0.01, || Ok(single(w.unitary_negativity)))?;
    rec.run("witness.representative_negativity", witness, Below, c.tol, || Ok(single(w.representative_negativity)))?;
    Ok(())
}

fn phase(rec: &mut Recorder, c: &SuiteConfig, s: &mut Sampler) -> Result<()> {
    use Bound::*;
    let m = c.grid;
    let povms: Vec<TruncatedPhasePOVM> =
        c.dims.iter().map(|&d| build_phase_povm(d, m, &canonical_coefficients(d))).collect::<qrf_core::Result<_>>()?;
    rec.run("phase.normalization", "phaselab: truncated phase POVM", Below, c.tol, || {
        Ok(worst(povms.iter().map(TruncatedPhasePOVM::normalization_residual)))
    })?;
    rec.run("phase.covariance", "phaselab: grid covariance", Below, c.tol, || {
        Ok(worst(povms.iter().map(TruncatedPhasePOVM::covariance_residual)))
    })?;
    rec.run("phase.dimension_bound", "phaselab: finite-dimension localization bound", Below, c.tol, || {
        let mut r = Vec::new();
        for povm in &povms {
            for _ in 0..c.batch {
                let start = s.index(m);
                let len = 1 + s.index(m / 2);
                let cells: BTreeSet<usize> = (start..start + len).map(|k| k % m).collect();
                let rho = s.state(povm.dim());
                r.push((povm.probability(rho.op(), &cells)? - povm.dim() as f64 * povm.measure(&cells)).max(0.0));
            }
        }
        Ok(worst(r))
    })?;
    rec.run("phase.quarter_norm_increasing", "phaselab: localization improves with dimension", Below, 0.0, || {
        let quarter: BTreeSet<usize> = (0..m / 4).collect();
        let norms =
            povms.iter().map(|p| p.effect_of(&quarter).map(|e| e.op_norm())).collect::<qrf_core::Result<Vec<_>>>()?;
        Ok(Measurement { cases: norms.len(), residual: monotone_defect(&norms, true) })
    })?;
    rec.run("phase.conditioned_decreasing", "phaselab: conditioned relativization converges", Below, 0.0, || {
        let curve = conditioned_identity_convergence(&c.dims, m, &s.operator(3))?;
        let r: Vec<f64> = curve.iter().map(|p| p.residual).collect();
        Ok(Measurement { cases: r.len(), residual: monotone_defect(&r, false) })
    })?;
    rec.run("phase.dirac_half_circle", "phaselab: localizing sequence converges to Dirac", Below, 0.0, || {
        let curve = dirac_convergence_experiment(&c.dims, m, 0.0, &standard_test_sets(m, 0.0))?;
        let devs: Vec<f64> = curve.for_set("half_containing").map(|r| r.deviation).collect();
        Ok(Measurement { cases: devs.len(), residual: monotone_defect(&devs, false) })
    })?;
    Ok(())
}
