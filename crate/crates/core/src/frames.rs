//! Quantum reference frames as systems of covariance `(U, E, H)` over a finite G-space.
//!
//! A POVM is stored by its values on singletons; `E(X)` is the sum over `X`.
//! Localizability (the norm-1 property) is decided on singletons only: effects
//! are monotone in the set (`X ⊆ Y ⇒ E(X) ≤ E(Y)`), so every nonzero `E(X)`
//! dominates some nonzero singleton effect and inherits norm 1 from it.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::groups::{left_self_space, FiniteGroup, GSpace};
use crate::operators::{
    trace_pair_unchecked, validate, DensityState, Operator, OperatorJson, OperatorKind, C64, ONE, TOL,
};
use crate::representations::{inverse_convention_rep, permutation_rep, regular_rep, Direction, RepJson, UnitaryRep};

/// Rank threshold for deciding whether a coherent-state orbit spans the space.
/// Not fixed by the construction itself; reported alongside coherent frames.
pub const CYCLIC_RANK_TOL: f64 = 1e-8;
/// Allowed deviation of the orbit average from `λ I`.
pub const PROPORTIONALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FinitePOVM {
    space: GSpace,
    effects: Vec<Operator>,
}

impl FinitePOVM {
    /// Checks that every effect is valid and that they sum to the identity.
    pub fn new(space: GSpace, effects: Vec<Operator>) -> Result<Self> {
        let povm = Self::new_unchecked(space, effects)?;
        for e in &povm.effects {
            validate(e, OperatorKind::Effect).into_result()?;
        }
        let r = povm.normalization_residual();
        if r > TOL * povm.dim() as f64 {
            return Err(Error::InvariantViolation { name: "povm_normalization".into(), residual: r });
        }
        Ok(povm)
    }

    /// Only shape checks; for diagnosing malformed inputs.
    pub fn new_unchecked(space: GSpace, effects: Vec<Operator>) -> Result<Self> {
        check_dim(space.n_points(), effects.len())?;
        let dim = effects[0].dim();
        for e in &effects {
            check_dim(dim, e.dim())?;
        }
        Ok(Self { space, effects })
    }

    pub fn space(&self) -> &GSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn effect(&self, x: usize) -> &Operator {
        &self.effects[x]
    }

    /// `E(X) = Σ_{x∈X} E({x})`
    pub fn effect_of(&self, subset: &BTreeSet<usize>) -> Result<Operator> {
        let mut acc = Operator::zeros(self.dim());
        for &x in subset {
            let e = self.effects.get(x).ok_or(Error::UnknownPoint(x))?;
            acc.add_scaled(ONE, e);
        }
        Ok(acc)
    }

    pub fn normalization_residual(&self) -> f64 {
        self.effect_of(&(0..self.effects.len()).collect())
            .expect("all points")
            .max_abs_diff(&Operator::identity(self.dim()))
    }

    /// Born probabilities `tr[ω E({x})]` for every point.
    pub fn born(&self, state: &Operator) -> Result<Vec<f64>> {
        check_dim(self.dim(), state.dim())?;
        Ok(self.effects.iter().map(|e| trace_pair_unchecked(state, e).re).collect())
    }

    pub fn is_projection_valued(&self) -> bool {
        self.effects.iter().all(|e| validate(e, OperatorKind::Projection).pass())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norm1Report {
    pub localizable: bool,
    /// Point whose nonzero singleton effect has the smallest operator norm.
    pub worst_point: usize,
    pub worst_norm: f64,
}

/// Norm-1 property, decided on singleton effects.
pub fn check_norm1(povm: &FinitePOVM) -> Norm1Report {
    let mut worst = (0, f64::INFINITY);
    for (x, e) in povm.effects.iter().enumerate() {
        let n = e.op_norm();
        if n > TOL && n < worst.1 {
            worst = (x, n);
        }
    }
    Norm1Report { localizable: (1.0 - worst.1).abs() <= TOL, worst_point: worst.0, worst_norm: worst.1 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCertificate {
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn covariance_residual(rep: &UnitaryRep, povm: &FinitePOVM) -> f64 {
    let mut worst: f64 = 0.0;
    for g in rep.group().elements() {
        for x in 0..povm.space.n_points() {
            let lhs = &povm.effects[povm.space.act(g, x)];
            let rhs = rep.conjugate_unchecked(g, &povm.effects[x], Direction::Observable);
            worst = worst.max((lhs - &rhs).op_norm());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub complete: bool,
    pub isotropy: Vec<usize>,
}

fn isotropy(rep: &UnitaryRep, povm: &FinitePOVM) -> Vec<usize> {
    rep.group()
        .elements()
        .filter(|&g| {
            povm.effects.iter().all(|e| rep.conjugate_unchecked(g, e, Direction::Observable).max_abs_diff(e) <= TOL)
        })
        .collect()
}

/// Classification flags of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameFlags {
    pub sharp: bool,
    pub principal: bool,
    pub localizable: bool,
    pub complete: bool,
}

/// Every check run on a candidate frame, pass or fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCertificate {
    pub normalization_residual: f64,
    pub covariance: CovarianceCertificate,
    pub norm1: Norm1Report,
    pub completeness: CompletenessReport,
    pub flags: FrameFlags,
    /// Haar-normalized orbit constant, for coherent-state frames.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherent_lambda: Option<f64>,
}

/// Run every frame check on `(rep, povm)` without failing.
pub fn certify(rep: &UnitaryRep, povm: &FinitePOVM) -> Result<FrameCertificate> {
    if rep.group() != povm.space.group() {
        return Err(Error::GroupMismatch { left: rep.group().order(), right: povm.space.group().order() });
    }
    check_dim(rep.dim(), povm.dim())?;
    let residual = covariance_residual(rep, povm);
    let norm1 = check_norm1(povm);
    let iso = isotropy(rep, povm);
    let completeness = CompletenessReport { complete: iso == vec![0], isotropy: iso };
    Ok(FrameCertificate {
        normalization_residual: povm.normalization_residual(),
        covariance: CovarianceCertificate { residual, threshold: TOL, pass: residual < TOL },
        flags: FrameFlags {
            sharp: povm.is_projection_valued(),
            principal: povm.space.is_principal(),
            localizable: norm1.localizable,
            complete: completeness.complete,
        },
        norm1,
        completeness,
        coherent_lambda: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumFrame {
    rep: UnitaryRep,
    povm: FinitePOVM,
    certificate: FrameCertificate,
}

impl QuantumFrame {
    /// Accepts only covariant systems.
    pub fn new(rep: UnitaryRep, povm: FinitePOVM) -> Result<Self> {
        let certificate = certify(&rep, &povm)?;
        if !certificate.covariance.pass {
            return Err(Error::InvariantViolation {
                name: "covariance".into(),
                residual: certificate.covariance.residual,
            });
        }
        Ok(Self { rep, povm, certificate })
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn povm(&self) -> &FinitePOVM {
        &self.povm
    }

    pub fn group(&self) -> &FiniteGroup {
        self.rep.group()
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn effect(&self, g: usize) -> &Operator {
        self.povm.effect(g)
    }

    pub fn flags(&self) -> FrameFlags {
        self.certificate.flags
    }

    pub fn certificate(&self) -> &FrameCertificate {
        &self.certificate
    }

    /// Principal and projection valued.
    pub fn is_ideal(&self) -> bool {
        self.certificate.flags.sharp && self.certificate.flags.principal
    }

    /// A state `ω` with `tr[ω E({g})] = 1`: the top eigenvector of `E({g})`.
    pub fn localized_state(&self, g: usize) -> Result<DensityState> {
        let (values, vectors) = self.povm.effect(g).hermitian_eigen();
        let top = *values.last().expect("non-empty");
        if (1.0 - top).abs() > TOL {
            return Err(Error::FrameNotIdeal(format!(
                "effect at {g} has norm {top}; no state is perfectly localized there"
            )));
        }
        DensityState::pure(&vectors.column(values.len() - 1).into_owned())
    }
}

pub fn verify_covariance(frame: &QuantumFrame) -> CovarianceCertificate {
    frame.certificate.covariance
}

pub fn check_complete(frame: &QuantumFrame) -> CompletenessReport {
    frame.certificate.completeness.clone()
}

/// Convention for the canonical ideal frame on `L²(G)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `U(g)|h⟩ = |gh⟩`, `P(g) = |g⟩⟨g|`.
    LeftRegular,
    /// `U(g)|h⟩ = |hg⁻¹⟩`, `P(g) = |g⁻¹⟩⟨g⁻¹|`.
    Inverse,
}

pub fn canonical_frame(group: &FiniteGroup, convention: Convention) -> QuantumFrame {
    let n = group.order();
    let (rep, effects) = match convention {
        Convention::LeftRegular => {
            (regular_rep(group), group.elements().map(|g| Operator::basis_projector(n, g)).collect())
        }
        Convention::Inverse => (
            inverse_convention_rep(group),
            group.elements().map(|g| Operator::basis_projector(n, group.inv(g))).collect(),
        ),
    };
    let povm = FinitePOVM::new(left_self_space(group), effects).expect("basis projectors resolve the identity");
    QuantumFrame::new(rep, povm).expect("canonical frame is covariant")
}

/// Multiplication-by-indicator frame on `ℓ²(Σ)` with the induced permutation representation.
pub fn classical_soi_frame(space: &GSpace) -> QuantumFrame {
    let n = space.n_points();
    let effects = (0..n).map(|x| Operator::basis_projector(n, x)).collect();
    let povm = FinitePOVM::new(space.clone(), effects).expect("indicator projections resolve the identity");
    QuantumFrame::new(permutation_rep(space), povm).expect("classical system of imprimitivity is covariant")
}

/// Coherent-state frame `E({g}) = |η_g⟩⟨η_g| / (λ|G|)` with `η_g = U(g)η`.
///
/// `λ` is defined by `(1/|G|) Σ_g |η_g⟩⟨η_g| = λ I` and estimated as the trace of the
/// orbit average over the dimension. The counting-measure constant `λ|G|` equals 1
/// exactly when the frame has the norm-1 property.
pub fn coherent_frame(rep: &UnitaryRep, eta: &DVector<C64>) -> Result<QuantumFrame> {
    let d = rep.dim();
    check_dim(d, eta.len())?;
    let nrm = eta.norm();
    if (nrm - 1.0).abs() > TOL {
        return Err(Error::Malformed(format!("seed vector has norm {nrm}, expected 1")));
    }
    let group = rep.group();
    let order = group.order() as f64;
    let orbit: Vec<DVector<C64>> = group.elements().map(|g| rep.matrix(g).matrix() * eta).collect();

    let mut avg = Operator::zeros(d);
    for v in &orbit {
        avg.add_scaled(C64::new(1.0 / order, 0.0), &Operator::projector(v));
    }
    let rank = avg.eigenvalues_hermitian().iter().filter(|&&l| l > CYCLIC_RANK_TOL).count();
    if rank < d {
        return Err(Error::NotCyclic { rank, dim: d });
    }
    let lambda = avg.trace().re / d as f64;
    let residual = (&avg - &Operator::identity(d).scale_re(lambda)).op_norm();
    if residual > PROPORTIONALITY_TOL {
        return Err(Error::NotProportionalToIdentity { residual });
    }
    let effects = orbit.iter().map(|v| Operator::projector(v).scale_re(1.0 / (lambda * order))).collect();
    let povm = FinitePOVM::new(left_self_space(group), effects)?;
    let mut frame = QuantumFrame::new(rep.clone(), povm)?;
    frame.certificate.coherent_lambda = Some(lambda);
    Ok(frame)
}

/// Frame JSON: `{ "group", "rep", "effects", "flags" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameJson {
    pub group: crate::groups::GroupJson,
    pub rep: RepJson,
    pub effects: Vec<OperatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<FrameFlags>,
}

impl From<&QuantumFrame> for FrameJson {
    fn from(f: &QuantumFrame) -> Self {
        FrameJson {
            group: f.group().into(),
            rep: f.rep().into(),
            effects: f.povm.effects.iter().map(Into::into).collect(),
            flags: Some(f.flags()),
        }
    }
}

impl FrameJson {
    /// Decode and certify without rejecting; the principal G-space is assumed.
    pub fn decode(self) -> Result<(UnitaryRep, FinitePOVM, FrameCertificate)> {
        let group = FiniteGroup::try_from(self.group)?;
        let rep = UnitaryRep::try_from(self.rep)?;
        if rep.group() != &group {
            return Err(Error::InvariantViolation {
                name: "group_mismatch".into(),
                residual: (rep.group().order() as f64 - group.order() as f64).abs(),
            });
        }
        let effects = self.effects.into_iter().map(Operator::try_from).collect::<Result<Vec<_>>>()?;
        let povm = FinitePOVM::new_unchecked(left_self_space(&group), effects)?;
        let cert = certify(&rep, &povm)?;
        Ok((rep, povm, cert))
    }
}

impl TryFrom<FrameJson> for QuantumFrame {
    type Error = Error;
    fn try_from(j: FrameJson) -> Result<Self> {
        let (rep, povm, _) = j.decode()?;
        let povm = FinitePOVM::new(povm.space, povm.effects)?;
        QuantumFrame::new(rep, povm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{make_preset, GroupPreset};
    use crate::representations::trivial_rep;
    use crate::sampling::Sampler;

    fn group(p: GroupPreset) -> FiniteGroup {
        make_preset(p).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn canonical_z2_effects_and_flags() {
        let f = canonical_frame(&group(GroupPreset::Cyclic(2)), Convention::LeftRegular);
        assert_eq!(f.effect(0), &Operator::diag(&[1.0, 0.0]));
        assert_eq!(f.effect(1), &Operator::diag(&[0.0, 1.0]));
        assert_eq!(verify_covariance(&f).residual, 0.0);
        assert_eq!(f.flags(), FrameFlags { sharp: true, principal: true, localizable: true, complete: true });
    }

    #[test]
    fn canonical_frames_are_ideal_in_both_conventions() {
        for p in [GroupPreset::Cyclic(3), GroupPreset::Symmetric3, GroupPreset::Quaternion8] {
            for conv in [Convention::LeftRegular, Convention::Inverse] {
                let f = canonical_frame(&group(p), conv);
                assert!(f.is_ideal());
                assert!(f.flags().localizable && f.flags().complete);
                assert_eq!(f.certificate().covariance.residual, 0.0);
            }
        }
        let s3 = group(GroupPreset::Symmetric3);
        let inv = canonical_frame(&s3, Convention::Inverse);
        for g in s3.elements() {
            assert_eq!(inv.effect(g), &Operator::basis_projector(6, s3.inv(g)));
        }
    }

    #[test]
    fn localized_state_is_certain() {
        let s3 = group(GroupPreset::Symmetric3);
        let f = canonical_frame(&s3, Convention::LeftRegular);
        for g in s3.elements() {
            let w = f.localized_state(g).unwrap();
            let born = f.povm().born(w.op()).unwrap();
            assert!((born[g] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn classical_soi_matches_canonical_on_self_space() {
        let z3 = group(GroupPreset::Cyclic(3));
        let soi = classical_soi_frame(&left_self_space(&z3));
        let can = canonical_frame(&z3, Convention::LeftRegular);
        assert_eq!(soi.rep(), can.rep());
        assert_eq!(soi.povm().effects(), can.povm().effects());
        assert_eq!(soi.certificate().covariance.residual, 0.0);
    }

    #[test]
    fn coherent_frame_from_basis_vector_is_canonical() {
        let z2 = group(GroupPreset::Cyclic(2));
        let eta = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let f = coherent_frame(&regular_rep(&z2), &eta).unwrap();
        // orbit average = I/2
        assert!((f.certificate().coherent_lambda.unwrap() - 0.5).abs() < 1e-15);
        assert!(f.effect(0).max_abs_diff(&Operator::diag(&[1.0, 0.0])) < 1e-15);
        assert!(f.effect(1).max_abs_diff(&Operator::diag(&[0.0, 1.0])) < 1e-15);
        assert!(f.is_ideal());
    }

    #[test]
    fn coherent_frame_with_invariant_seed_is_rejected() {
        // orbit of (|0⟩+|1⟩)/√2 under the Z2 swap is a single ray: orbit sum [[.5,.5],[.5,.5]]
        let z2 = group(GroupPreset::Cyclic(2));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let eta = DVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        assert_eq!(coherent_frame(&regular_rep(&z2), &eta), Err(Error::NotCyclic { rank: 1, dim: 2 }));
    }

    #[test]
    fn coherent_frame_rejects_cyclic_but_unbalanced_seed() {
        let z3 = group(GroupPreset::Cyclic(3));
        let eta = DVector::from_vec(vec![c(0.8, 0.0), c(0.6, 0.0), c(0.0, 0.0)]);
        assert!(matches!(coherent_frame(&regular_rep(&z3), &eta), Err(Error::NotProportionalToIdentity { .. })));
    }

    #[test]
    fn unsharp_coherent_frame_on_z3() {
        let f = z3_unsharp_coherent();
        let cert = f.certificate();
        assert!(cert.covariance.residual < 1e-10);
        assert!(!f.flags().sharp && !f.flags().localizable);
        // λ = 1/2 (Haar), counting constant λ|G| = 3/2 > 1, effect norm 1/(λ|G|) = 2/3
        assert!((cert.coherent_lambda.unwrap() - 0.5).abs() < 1e-14);
        assert!((cert.norm1.worst_norm - 2.0 / 3.0).abs() < 1e-12);
        assert!(f.flags().complete);
    }

    pub(crate) fn z3_unsharp_coherent() -> QuantumFrame {
        crate::frames::test_support::z3_unsharp_coherent()
    }

    #[test]
    fn norm1_on_uniform_povm() {
        let z3 = group(GroupPreset::Cyclic(3));
        let povm = FinitePOVM::new(left_self_space(&z3), vec![Operator::identity(2).scale_re(1.0 / 3.0); 3]).unwrap();
        let r = check_norm1(&povm);
        assert!(!r.localizable);
        assert!((r.worst_norm - 1.0 / 3.0).abs() < 1e-14);
        let f = QuantumFrame::new(trivial_rep(&z3, 2), povm).unwrap();
        assert_eq!(check_complete(&f).isotropy, vec![0, 1, 2]);
        assert!(!f.flags().complete);
    }

    #[test]
    fn broken_covariance_is_detected() {
        let z3 = group(GroupPreset::Cyclic(3));
        let mut effects: Vec<Operator> = (0..3).map(|g| Operator::basis_projector(3, g)).collect();
        effects[1] = Operator::identity(3).scale_re(1.0 / 3.0);
        let povm = FinitePOVM::new_unchecked(left_self_space(&z3), effects).unwrap();
        let cert = certify(&regular_rep(&z3), &povm).unwrap();
        assert!(!cert.covariance.pass);
        assert!(cert.covariance.residual > 0.5);
        assert!(QuantumFrame::new(regular_rep(&z3), povm).is_err());
    }

    #[test]
    fn born_measure_is_a_probability() {
        let mut s = Sampler::new(3);
        let f = z3_unsharp_coherent();
        for _ in 0..20 {
            let p = f.povm().born(s.state(2).op()).unwrap();
            assert!(p.iter().all(|&x| x >= -1e-12));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_json_round_trip() {
        let f = canonical_frame(&group(GroupPreset::Symmetric3), Convention::Inverse);
        let text = serde_json::to_string(&FrameJson::from(&f)).unwrap();
        let back = QuantumFrame::try_from(serde_json::from_str::<FrameJson>(&text).unwrap()).unwrap();
        assert_eq!(back.povm().effects(), f.povm().effects());
        assert_eq!(back.flags(), f.flags());
    }
}

/// Frames reused across test modules.
#[doc(hidden)]
pub mod test_support {
    use super::*;
    use crate::groups::{make_preset, GroupPreset};

    /// Z3 acting on C² by `diag(1, e^{2πig/3})` with seed `(|0⟩+|1⟩)/√2`.
    pub fn z3_phase_rep() -> UnitaryRep {
        let z3 = make_preset(GroupPreset::Cyclic(3)).unwrap();
        let mats = z3
            .elements()
            .map(|g| {
                let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * g as f64 / 3.0);
                Operator::from_fn(2, |i, j| {
                    if i != j {
                        C64::new(0.0, 0.0)
                    } else if i == 0 {
                        ONE
                    } else {
                        w
                    }
                })
            })
            .collect();
        UnitaryRep::new(z3, mats).unwrap()
    }

    pub fn z3_unsharp_coherent() -> QuantumFrame {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let eta = DVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
        coherent_frame(&z3_phase_rep(), &eta).unwrap()
    }
}
