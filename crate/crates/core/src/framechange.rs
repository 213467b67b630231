//! Localized frame transformations between finite ideal frames.
//!
//! The total space is ordered `H₁ ⊗ H₂ ⊗ H_S`. An `R₁`-relative state lives on
//! `H₂ ⊗ H_S` and is known up to `E₂`-framed equivalence; the transformed
//! `R₂`-relative state lives on `H₁ ⊗ H_S` up to `E₁`-framed equivalence. For
//! ideal frames the localizing sequence is the constant `ω_e`, so
//! `Φ_{1→2}(Ω) = ¥^{R₂}_*(ω_e ⊗ Ω)` with no limit.

use serde::{Deserialize, Serialize};

use crate::equivalence::{framed_set, signature, ClassSignature, ObservableSet, SIGNATURE_TOL};
use crate::error::{check_dim, Error, Result};
use crate::frames::{canonical_frame, Convention, FrameJson, QuantumFrame};
use crate::operators::{negativity, permute_factors, tensor, DensityState, Operator, C64, ONE, TOL};
use crate::relativization::{predual_relativize_trace_class, weighted_partial_trace, RelativePair};
use crate::representations::{tensor_rep, Direction, RepJson, UnitaryRep};
use crate::sampling::Sampler;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameChangeScenario {
    frame1: QuantumFrame,
    frame2: QuantumFrame,
    frame3: Option<QuantumFrame>,
    system_rep: UnitaryRep,
}

fn same_group(a: &QuantumFrame, rep: &UnitaryRep) -> Result<()> {
    if a.group() != rep.group() {
        return Err(Error::GroupMismatch { left: a.group().order(), right: rep.group().order() });
    }
    Ok(())
}

impl FrameChangeScenario {
    pub fn new(frame1: QuantumFrame, frame2: QuantumFrame, system_rep: UnitaryRep) -> Result<Self> {
        same_group(&frame1, &system_rep)?;
        same_group(&frame2, &system_rep)?;
        Ok(Self { frame1, frame2, frame3: None, system_rep })
    }

    pub fn with_third(mut self, frame3: QuantumFrame) -> Result<Self> {
        same_group(&frame3, &self.system_rep)?;
        self.frame3 = Some(frame3);
        Ok(self)
    }

    pub fn frame1(&self) -> &QuantumFrame {
        &self.frame1
    }

    pub fn frame2(&self) -> &QuantumFrame {
        &self.frame2
    }

    pub fn frame3(&self) -> Option<&QuantumFrame> {
        self.frame3.as_ref()
    }

    pub fn system_rep(&self) -> &UnitaryRep {
        &self.system_rep
    }

    pub fn system_dim(&self) -> usize {
        self.system_rep.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.frame1.dim() * self.frame2.dim() * self.frame3.as_ref().map_or(1, QuantumFrame::dim) * self.system_dim()
    }

    /// The same scenario with the roles of the first two frames exchanged.
    pub fn reversed(&self) -> Self {
        Self {
            frame1: self.frame2.clone(),
            frame2: self.frame1.clone(),
            frame3: self.frame3.clone(),
            system_rep: self.system_rep.clone(),
        }
    }

    /// `E₂`-framed operators on `H₂ ⊗ H_S`: the observables of the input classes.
    pub fn input_set(&self) -> Result<ObservableSet> {
        framed_set(&[self.frame2.povm()], self.system_dim())
    }

    /// `E₁`-framed operators on `H₁ ⊗ H_S`: the observables of the output classes.
    pub fn output_set(&self) -> Result<ObservableSet> {
        framed_set(&[self.frame1.povm()], self.system_dim())
    }
}

/// A lifted state with its class under the invariant observables.
#[derive(Clone, Debug, PartialEq)]
pub struct Lifted {
    pub state: DensityState,
    pub signature: ClassSignature,
}

/// `L_ω(Ω^R) = [ω ⊗ Ω^R]_G`; `invariant` must be `B(H_R ⊗ H_S)^G` for the pair.
pub fn lift(
    pair: &RelativePair,
    omega: &DensityState,
    relative: &DensityState,
    invariant: &ObservableSet,
) -> Result<Lifted> {
    check_dim(pair.frame_dim(), omega.dim())?;
    check_dim(pair.system_dim(), relative.dim())?;
    let state = DensityState::new_unchecked(tensor(omega.op(), relative.op()));
    let signature = signature(state.op(), invariant)?;
    Ok(Lifted { state, signature })
}

/// `¥^{to}_*(ω_e ⊗ Ω)` for `Ω` on `H_to ⊗ H_sys`, returned on `H_from ⊗ H_sys`.
///
/// The system may itself be composite. Uses the product form
/// `Σ_g g.ω_e ⊗ g.tr_to[(E_to({g}) ⊗ I) Ω]`.
pub fn localized_frame_change(
    from: &QuantumFrame,
    to: &QuantumFrame,
    system_rep: &UnitaryRep,
    input: &Operator,
) -> Result<Operator> {
    if !from.is_ideal() {
        return Err(Error::FrameNotIdeal(
            "the exact transformation localizes the initial frame at the identity".into(),
        ));
    }
    same_group(from, system_rep)?;
    same_group(to, system_rep)?;
    let (dt, ds) = (to.dim(), system_rep.dim());
    check_dim(dt * ds, input.dim())?;
    let omega = from.localized_state(from.group().identity())?;
    let mut acc = Operator::zeros(from.dim() * ds);
    for g in from.group().elements() {
        let block = weighted_partial_trace(to.effect(g), input, dt, ds);
        let frame_part = from.rep().conjugate_unchecked(g, omega.op(), Direction::State);
        let sys_part = system_rep.conjugate_unchecked(g, &block, Direction::State);
        acc.add_scaled(ONE, &tensor(&frame_part, &sys_part));
    }
    Ok(acc)
}

/// Output of `Φ_{1→2}` on one input.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameChangeOutput {
    /// `¥^{R₂}_*(ω_e ⊗ Ω)` on `H₁ ⊗ H_S`.
    pub state: Operator,
    pub signature: ClassSignature,
    /// HS projection of `state` onto the framed span.
    pub representative: Operator,
}

/// Projection onto the framed span, rescaled if the trace drifts below `1 − 1e-9`.
pub fn canonical_representative(state: &Operator, framed: &ObservableSet) -> Result<Operator> {
    let p = framed.project(state)?;
    let tr = p.trace().re;
    if tr < 1.0 - TOL && tr > 0.0 {
        return Ok(p.scale_re(1.0 / tr));
    }
    Ok(p)
}

pub fn frame_change(scenario: &FrameChangeScenario, input: &Operator) -> Result<FrameChangeOutput> {
    frame_change_with(scenario, input, &scenario.output_set()?)
}

/// As [`frame_change`] with a prebuilt `E₁`-framed set.
pub fn frame_change_with(
    scenario: &FrameChangeScenario,
    input: &Operator,
    output_set: &ObservableSet,
) -> Result<FrameChangeOutput> {
    let state = localized_frame_change(&scenario.frame1, &scenario.frame2, &scenario.system_rep, input)?;
    Ok(FrameChangeOutput {
        signature: signature(&state, output_set)?,
        representative: canonical_representative(&state, output_set)?,
        state,
    })
}

/// Outcome of a batch check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(name: &str, residuals: impl IntoIterator<Item = f64>, threshold: f64) -> Self {
        let (mut cases, mut worst) = (0, 0.0f64);
        for r in residuals {
            cases += 1;
            worst = worst.max(r);
        }
        Self { name: name.into(), cases, max_residual: worst, threshold, pass: worst < threshold }
    }
}

/// `Φ_{2→1} ∘ Φ_{1→2}` against the identity on `E₂`-framed classes.
pub fn frame_change_inverse_check(scenario: &FrameChangeScenario, inputs: &[Operator]) -> Result<CheckReport> {
    let back = scenario.reversed();
    let input_set = scenario.input_set()?;
    let mut residuals = Vec::with_capacity(inputs.len());
    for x in inputs {
        let out = localized_frame_change(&scenario.frame1, &scenario.frame2, &scenario.system_rep, x)?;
        let round = localized_frame_change(&back.frame1, &back.frame2, &back.system_rep, &out)?;
        residuals.push(signature(&round, &input_set)?.max_deviation(&signature(x, &input_set)?));
    }
    Ok(CheckReport::new("inverse", residuals, SIGNATURE_TOL))
}

/// `π_{E₂} ∘ Φ_{1→3}` against `Φ_{2→3} ∘ Φ_{1→2}` for inputs on `H₂ ⊗ H₃ ⊗ H_S`.
///
/// Both sides are compared on `H₁ ⊗ H₂ ⊗ H_S` under `span{E₁(x) ⊗ E₂(y) ⊗ B(H_S)}`.
pub fn frame_change_compose_check(scenario: &FrameChangeScenario, inputs: &[Operator]) -> Result<CheckReport> {
    let f3 = scenario.frame3.as_ref().ok_or_else(|| Error::Malformed("composition needs a third frame".into()))?;
    let (f1, f2, sys) = (&scenario.frame1, &scenario.frame2, &scenario.system_rep);
    let (d1, d2, d3, ds) = (f1.dim(), f2.dim(), f3.dim(), sys.dim());
    let sys_3s = tensor_rep(f3.rep(), sys)?;
    let sys_1s = tensor_rep(f1.rep(), sys)?;
    let sys_2s = tensor_rep(f2.rep(), sys)?;
    let target = framed_set(&[f1.povm(), f2.povm()], ds)?;

    let mut residuals = Vec::with_capacity(inputs.len());
    for x in inputs {
        check_dim(d2 * d3 * ds, x.dim())?;
        let a = localized_frame_change(f1, f2, &sys_3s, x)?;
        let a = permute_factors(&a, &[d1, d3, ds], &[1, 0, 2])?;
        let b = localized_frame_change(f2, f3, &sys_1s, &a)?;
        let rhs = permute_factors(&b, &[d2, d1, ds], &[1, 0, 2])?;

        let x13 = permute_factors(x, &[d2, d3, ds], &[1, 0, 2])?;
        let lhs = localized_frame_change(f1, f3, &sys_2s, &x13)?;
        residuals.push(signature(&lhs, &target)?.max_deviation(&signature(&rhs, &target)?));
    }
    Ok(CheckReport::new("compose", residuals, SIGNATURE_TOL))
}

/// For total states `Ω` on `H₁ ⊗ H₂ ⊗ H_S`: `Φ_{1→2}(¥^{R₁}_*(Ω))` against `¥^{R₂}_*(Ω)`.
pub fn commuting_triangle_check(scenario: &FrameChangeScenario, totals: &[Operator]) -> Result<CheckReport> {
    let (f1, f2, sys) = (&scenario.frame1, &scenario.frame2, &scenario.system_rep);
    let (d1, d2, ds) = (f1.dim(), f2.dim(), sys.dim());
    let pair1 = RelativePair::new(f1.clone(), tensor_rep(f2.rep(), sys)?)?;
    let pair2 = RelativePair::new(f2.clone(), tensor_rep(f1.rep(), sys)?)?;
    let out_set = scenario.output_set()?;
    let mut residuals = Vec::with_capacity(totals.len());
    for omega in totals {
        let rel1 = predual_relativize_trace_class(&pair1, omega)?;
        let via = localized_frame_change(f1, f2, sys, &rel1)?;
        let rel2 = predual_relativize_trace_class(&pair2, &permute_factors(omega, &[d1, d2, ds], &[1, 0, 2])?)?;
        residuals.push(signature(&via, &out_set)?.max_deviation(&signature(&rel2, &out_set)?));
    }
    Ok(CheckReport::new("commuting_triangle", residuals, SIGNATURE_TOL))
}

/// Inputs differing by a random element of the pre-annihilator of the `E₂`-framed set
/// must have the same transformed class.
pub fn well_definedness_check(
    scenario: &FrameChangeScenario,
    inputs: &[Operator],
    sampler: &mut Sampler,
) -> Result<CheckReport> {
    let input_set = scenario.input_set()?;
    let output_set = scenario.output_set()?;
    let d = input_set.dim();
    let mut residuals = Vec::with_capacity(inputs.len());
    for x in inputs {
        let t = sampler.hermitian(d);
        let perturbation = &t - &input_set.project(&t)?;
        let x2 = x + &perturbation;
        let a = frame_change_with(scenario, x, &output_set)?;
        let b = frame_change_with(scenario, &x2, &output_set)?;
        residuals.push(a.signature.max_deviation(&b.signature));
    }
    Ok(CheckReport::new("well_defined", residuals, SIGNATURE_TOL))
}

fn require_inverse_canonical(frame: &QuantumFrame, which: &str) -> Result<()> {
    let reference = canonical_frame(frame.group(), Convention::Inverse);
    let rep_ok = frame.rep().matrices().iter().zip(reference.rep().matrices()).all(|(a, b)| a.max_abs_diff(b) <= TOL);
    let povm_ok = frame.dim() == reference.dim()
        && frame.povm().effects().iter().zip(reference.povm().effects()).all(|(a, b)| a.max_abs_diff(b) <= TOL);
    if rep_ok && povm_ok {
        Ok(())
    } else {
        Err(Error::FrameNotIdeal(format!(
            "{which} is not the inverse-convention canonical frame required by the unitary frame change"
        )))
    }
}

/// `U_{1→2} = Σ_g |g⁻¹⟩⟨g| ⊗ U_S(g)` from `H₂ ⊗ H_S` to `H₁ ⊗ H_S`.
pub fn unitary_frame_change_operator(scenario: &FrameChangeScenario) -> Result<Operator> {
    require_inverse_canonical(&scenario.frame1, "frame 1")?;
    require_inverse_canonical(&scenario.frame2, "frame 2")?;
    let group = scenario.frame1.group();
    let n = group.order();
    let mut u = Operator::zeros(n * scenario.system_dim());
    for g in group.elements() {
        let shift = Operator::matrix_unit(n, group.inv(g), g);
        u.add_scaled(ONE, &tensor(&shift, scenario.system_rep.matrix(g)));
    }
    Ok(u)
}

pub fn unitary_frame_change(scenario: &FrameChangeScenario, input: &Operator) -> Result<Operator> {
    let u = unitary_frame_change_operator(scenario)?;
    check_dim(u.dim(), input.dim())?;
    Ok(input.conjugated_by(&u))
}

/// Coherent-state orbit `φ(g) = U(g)η` with `η` the unit vector of the rank-one `E({e})`.
fn ideal_coherent_orbit(frame: &QuantumFrame, which: &str) -> Result<Vec<nalgebra::DVector<C64>>> {
    let not = |why: &str| Error::FramesNotIdealCoherent(format!("{which}: {why}"));
    if !frame.is_ideal() {
        return Err(not("frame is not sharp and principal"));
    }
    let (values, vectors) = frame.effect(frame.group().identity()).hermitian_eigen();
    let rank = values.iter().filter(|&&v| v > 0.5).count();
    if rank != 1 {
        return Err(not("identity effect is not a rank-one projection"));
    }
    let eta = vectors.column(values.len() - 1).into_owned();
    Ok(frame.group().elements().map(|g| frame.rep().matrix(g).matrix() * &eta).collect())
}

/// `V_{1→2} = Σ_g |φ₁(g)⟩⟨φ₂(g⁻¹)| ⊗ U_S(g)` for ideal coherent-state frames.
///
/// Counting measure on `G` makes `V` unitary. For inverse-convention canonical
/// frames `φ(g) = |g⁻¹⟩` and `V` equals `U_{1→2}`.
pub fn pn_frame_change_operator(scenario: &FrameChangeScenario) -> Result<Operator> {
    let phi = ideal_coherent_orbit(&scenario.frame1, "frame 1")?;
    let psi = ideal_coherent_orbit(&scenario.frame2, "frame 2")?;
    if phi.len() != phi[0].len() || psi.len() != psi[0].len() {
        return Err(Error::FramesNotIdealCoherent("coherent orbits must form orthonormal bases".into()));
    }
    let group = scenario.frame1.group();
    let mut v = Operator::zeros(phi[0].len() * scenario.system_dim());
    for g in group.elements() {
        let k = Operator::ket_bra(&phi[g], &psi[group.inv(g)]);
        v.add_scaled(ONE, &tensor(&k, scenario.system_rep.matrix(g)));
    }
    Ok(v)
}

pub fn pn_frame_change(scenario: &FrameChangeScenario, input: &Operator) -> Result<Operator> {
    let v = pn_frame_change_operator(scenario)?;
    check_dim(v.dim(), input.dim())?;
    Ok(input.conjugated_by(&v))
}

/// Which competing map to compare against `Φ_{1→2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetingMap {
    Unitary,
    PerspectiveNeutral,
}

/// Signature agreement between `Φ_{1→2}` and a competing map on each input.
pub fn agreement_check(scenario: &FrameChangeScenario, inputs: &[Operator], map: CompetingMap) -> Result<CheckReport> {
    let w = match map {
        CompetingMap::Unitary => unitary_frame_change_operator(scenario)?,
        CompetingMap::PerspectiveNeutral => pn_frame_change_operator(scenario)?,
    };
    let out_set = scenario.output_set()?;
    let mut residuals = Vec::with_capacity(inputs.len());
    for x in inputs {
        let ours = frame_change_with(scenario, x, &out_set)?;
        let theirs = signature(&x.conjugated_by(&w), &out_set)?;
        residuals.push(ours.signature.max_deviation(&theirs));
    }
    let name = match map {
        CompetingMap::Unitary => "unitary_agreement",
        CompetingMap::PerspectiveNeutral => "pn_agreement",
    };
    Ok(CheckReport::new(name, residuals, SIGNATURE_TOL))
}

/// Entangled versus separable representatives of one output class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementWitness {
    pub signature_residual: f64,
    pub trace_distance: f64,
    pub unitary_negativity: f64,
    pub representative_negativity: f64,
}

/// Input `((|h₁⟩ + |h₂⟩)/√2 ⊗ |g⟩)` on `H₂ ⊗ H_S` for canonical frames and a regular-type system.
pub fn superposition_input(scenario: &FrameChangeScenario, h1: usize, h2: usize, g: usize) -> Result<DensityState> {
    let (d2, ds) = (scenario.frame2.dim(), scenario.system_dim());
    if h1 == h2 || h1.max(h2) >= d2 || g >= ds {
        return Err(Error::Malformed(format!("superposition of {h1}, {h2} with system point {g}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let frame_vec =
        nalgebra::DVector::from_fn(d2, |i, _| if i == h1 || i == h2 { C64::new(s, 0.0) } else { C64::new(0.0, 0.0) });
    let sys_vec = nalgebra::DVector::from_fn(ds, |i, _| if i == g { ONE } else { C64::new(0.0, 0.0) });
    DensityState::pure(&crate::operators::tensor_vec(&frame_vec, &sys_vec))
}

pub fn superposition_witness(
    scenario: &FrameChangeScenario,
    h1: usize,
    h2: usize,
    g: usize,
) -> Result<EntanglementWitness> {
    let input = superposition_input(scenario, h1, h2, g)?;
    let out_set = scenario.output_set()?;
    let ours = frame_change_with(scenario, input.op(), &out_set)?;
    let unitary = unitary_frame_change(scenario, input.op())?;
    let dims = [scenario.frame1.dim(), scenario.system_dim()];
    Ok(EntanglementWitness {
        signature_residual: ours.signature.max_deviation(&signature(&unitary, &out_set)?),
        trace_distance: 0.5 * (&unitary - &ours.representative).trace_norm(),
        unitary_negativity: negativity(&unitary, &dims, 1)?,
        representative_negativity: negativity(&ours.representative, &dims, 1)?,
    })
}

/// Scenario JSON: frames and the system representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub frame1: FrameJson,
    pub frame2: FrameJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame3: Option<FrameJson>,
    pub system_rep: RepJson,
}

impl From<&FrameChangeScenario> for ScenarioJson {
    fn from(s: &FrameChangeScenario) -> Self {
        ScenarioJson {
            frame1: (&s.frame1).into(),
            frame2: (&s.frame2).into(),
            frame3: s.frame3.as_ref().map(Into::into),
            system_rep: (&s.system_rep).into(),
        }
    }
}

impl TryFrom<ScenarioJson> for FrameChangeScenario {
    type Error = Error;
    fn try_from(j: ScenarioJson) -> Result<Self> {
        let scenario = FrameChangeScenario::new(j.frame1.try_into()?, j.frame2.try_into()?, j.system_rep.try_into()?)?;
        match j.frame3 {
            Some(f3) => scenario.with_third(f3.try_into()?),
            None => Ok(scenario),
        }
    }
}
