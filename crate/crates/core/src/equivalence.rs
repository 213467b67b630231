//! Operational equivalence of trace-class operators relative to a set of observables.
//!
//! `T ~_O T'` iff `tr[TA] = tr[T'A]` for all `A ∈ O`. Since `tr[TA] = ⟨A*, T⟩_HS`,
//! the relation is decided by HS coordinates against an orthonormal basis of
//! `span{A* : A ∈ O}`; for self-adjoint sets this is `span O` itself. The
//! pre-annihilator is never materialized.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::frames::FinitePOVM;
use crate::operators::{tensor_all, Operator, C64};
use crate::representations::{OperatorSpaceBasis, UnitaryRep};

/// Absolute tolerance on signature coordinates.
pub const SIGNATURE_TOL: f64 = 1e-9;

/// Which relation an observable set realizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationLabel {
    Invariant,
    Framed,
    Relative,
    Conditioned,
    FramedRelative,
    Custom(String),
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationLabel::Invariant => f.write_str("G"),
            RelationLabel::Framed => f.write_str("framed"),
            RelationLabel::Relative => f.write_str("relative"),
            RelationLabel::Conditioned => f.write_str("conditioned"),
            RelationLabel::FramedRelative => f.write_str("framed_relative"),
            RelationLabel::Custom(s) => write!(f, "custom({s})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    label: RelationLabel,
    generators: Vec<Operator>,
    span: OperatorSpaceBasis,
}

impl ObservableSet {
    pub fn label(&self) -> &RelationLabel {
        &self.label
    }

    pub fn generators(&self) -> &[Operator] {
        &self.generators
    }

    /// Orthonormal basis of the adjoint span.
    pub fn span(&self) -> &OperatorSpaceBasis {
        &self.span
    }

    pub fn dim(&self) -> usize {
        self.span.ambient_dim()
    }

    /// Dimension of the span, which is also the dimension of the quotient of
    /// the trace class by the pre-annihilator.
    pub fn span_dim(&self) -> usize {
        self.span.len()
    }

    /// Largest reconstruction error of a generator from the span basis.
    pub fn reconstruction_residual(&self) -> f64 {
        self.generators
            .iter()
            .map(|g| self.span.residual(&g.adjoint()).expect("generators share the ambient dimension"))
            .fold(0.0, f64::max)
    }

    /// HS-orthogonal projection onto the adjoint span: a canonical class representative.
    pub fn project(&self, t: &Operator) -> Result<Operator> {
        self.span.project(t)
    }
}

pub fn build_observable_set(label: RelationLabel, generators: Vec<Operator>) -> Result<ObservableSet> {
    let dim = generators.first().map_or(1, Operator::dim);
    let adjoints: Vec<Operator> =
        generators.iter().map(|g| check_dim(dim, g.dim()).map(|_| g.adjoint())).collect::<Result<_>>()?;
    let span = OperatorSpaceBasis::from_generators(dim, &adjoints, &label.to_string())?;
    Ok(ObservableSet { label, generators, span })
}

/// Wrap an already orthonormal, self-adjoint-spanning basis.
fn from_basis(label: RelationLabel, span: OperatorSpaceBasis) -> ObservableSet {
    ObservableSet { label, generators: span.basis().to_vec(), span }
}

/// `B(H)^G` from the invariant commutant.
pub fn invariant_set(rep: &UnitaryRep) -> ObservableSet {
    from_basis(RelationLabel::Invariant, rep.invariant_commutant())
}

/// `span{E₁(x₁) ⊗ … ⊗ E_k(x_k) ⊗ B(H_S)}` on `H₁ ⊗ … ⊗ H_k ⊗ H_S`.
///
/// Built as the tensor product of orthonormal bases of each effect span with the
/// matrix units of `B(H_S)`, which is again orthonormal.
pub fn framed_set(povms: &[&FinitePOVM], system_dim: usize) -> Result<ObservableSet> {
    let mut factors: Vec<Vec<Operator>> = Vec::with_capacity(povms.len() + 1);
    for p in povms {
        let b = OperatorSpaceBasis::from_generators(p.dim(), p.effects(), "effect span")?;
        factors.push(b.basis().to_vec());
    }
    factors.push(OperatorSpaceBasis::full(system_dim).basis().to_vec());
    let dim: usize = factors.iter().map(|f| f[0].dim()).product();

    let mut basis = vec![Vec::<&Operator>::new()];
    for f in &factors {
        basis = basis
            .into_iter()
            .flat_map(|prefix| {
                f.iter().map(move |op| {
                    let mut v = prefix.clone();
                    v.push(op);
                    v
                })
            })
            .collect();
    }
    let ops: Vec<Operator> = basis.iter().map(|parts| tensor_all(parts)).collect();
    Ok(from_basis(RelationLabel::Framed, OperatorSpaceBasis::from_orthonormal(dim, ops, "framed")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// `max_i |tr[(t₁ − t₂) A_i]|` over the span basis.
    pub residual: f64,
}

pub fn equivalent(t1: &Operator, t2: &Operator, o: &ObservableSet) -> Result<Equivalence> {
    check_dim(o.dim(), t1.dim())?;
    let residual = o.span.coefficients(&(t1 - t2))?.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(Equivalence { equivalent: residual < SIGNATURE_TOL, residual })
}

/// Canonical coordinates of an equivalence class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    pub relation: RelationLabel,
    pub span_dim: usize,
    pub coords: Vec<C64>,
}

impl ClassSignature {
    pub fn max_deviation(&self, other: &ClassSignature) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn matches(&self, other: &ClassSignature) -> bool {
        self.relation == other.relation
            && self.coords.len() == other.coords.len()
            && self.max_deviation(other) < SIGNATURE_TOL
    }
}

pub fn signature(t: &Operator, o: &ObservableSet) -> Result<ClassSignature> {
    Ok(ClassSignature { relation: o.label.clone(), span_dim: o.span_dim(), coords: o.span.coefficients(t)? })
}

/// The quotient map realized as the HS-orthogonal projection onto the adjoint span.
pub fn quotient_projector(o: &ObservableSet) -> impl Fn(&Operator) -> Result<Operator> + '_ {
    move |t| o.project(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{canonical_frame, Convention};
    use crate::groups::{make_preset, GroupPreset};
    use crate::operators::{hs_inner, trace_pair};
    use crate::representations::{regular_rep, Direction};
    use crate::sampling::Sampler;
    use crate::Error;

    fn identity_set(d: usize) -> ObservableSet {
        build_observable_set(RelationLabel::Custom("identity".into()), vec![Operator::identity(d)]).unwrap()
    }

    fn full_set(d: usize) -> ObservableSet {
        let gens = (0..d * d).map(|k| Operator::matrix_unit(d, k / d, k % d)).collect();
        build_observable_set(RelationLabel::Custom("full".into()), gens).unwrap()
    }

    #[test]
    fn identity_only_makes_all_states_equivalent() {
        let mut s = Sampler::new(11);
        let o = identity_set(3);
        assert_eq!(o.span_dim(), 1);
        let (a, b) = (s.state(3), s.state(3));
        assert!(equivalent(a.op(), b.op(), &o).unwrap().equivalent);
        let sig = signature(a.op(), &o).unwrap();
        // single coordinate is ⟨I/√3, ρ⟩ = 1/√3
        assert!((sig.coords[0] - C64::new(1.0 / 3f64.sqrt(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn full_set_decides_equality() {
        let mut s = Sampler::new(12);
        let o = full_set(3);
        assert_eq!(o.span_dim(), 9);
        let (a, b) = (s.state(3), s.state(3));
        assert!(equivalent(a.op(), a.op(), &o).unwrap().equivalent);
        assert!(!equivalent(a.op(), b.op(), &o).unwrap().equivalent);
        let p = quotient_projector(&o);
        assert!(p(a.op()).unwrap().max_abs_diff(a.op()) < 1e-14);
    }

    #[test]
    fn invariant_set_for_z2_regular() {
        let z2 = make_preset(GroupPreset::Cyclic(2)).unwrap();
        let o = invariant_set(&regular_rep(&z2));
        assert_eq!(o.span_dim(), 2);
        assert!(o.reconstruction_residual() < 1e-8);
    }

    #[test]
    fn orbit_states_are_g_equivalent() {
        let mut s = Sampler::new(13);
        let s3 = make_preset(GroupPreset::Symmetric3).unwrap();
        let rep = regular_rep(&s3);
        let o = invariant_set(&rep);
        let rho = s.state(6);
        for g in s3.elements() {
            let moved = rep.conjugate(g, rho.op(), Direction::State).unwrap();
            assert!(equivalent(rho.op(), &moved, &o).unwrap().equivalent);
        }
        // twirled state lands in the same class
        let tw = rep.twirl(rho.op(), Direction::State).unwrap();
        assert!(signature(rho.op(), &o).unwrap().matches(&signature(&tw, &o).unwrap()));
    }

    #[test]
    fn equivalence_tracks_trace_pairings() {
        // custom non-self-adjoint generator: relation is tr[TA] for A in O
        let mut s = Sampler::new(14);
        let a = s.operator(3);
        let o = build_observable_set(RelationLabel::Custom("one".into()), vec![a.clone()]).unwrap();
        let (t1, t2) = (s.operator(3), s.operator(3));
        let direct = trace_pair(&(&t1 - &t2), &a).unwrap().norm() / a.frobenius_norm();
        let r = equivalent(&t1, &t2, &o).unwrap().residual;
        assert!((direct - r).abs() < 1e-12);
    }

    #[test]
    fn projector_identity_set_is_trace_component() {
        let mut s = Sampler::new(15);
        let o = identity_set(4);
        let t = s.operator(4);
        let expected = Operator::identity(4).scale(t.trace() / C64::new(4.0, 0.0));
        assert!(o.project(&t).unwrap().max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn projector_is_idempotent_and_class_preserving() {
        let mut s = Sampler::new(16);
        let z3 = make_preset(GroupPreset::Cyclic(3)).unwrap();
        let f = canonical_frame(&z3, Convention::LeftRegular);
        let o = framed_set(&[f.povm()], 2).unwrap();
        for _ in 0..5 {
            let t = s.operator(6);
            let p1 = o.project(&t).unwrap();
            let p2 = o.project(&p1).unwrap();
            assert!(p1.max_abs_diff(&p2) < 1e-10);
            assert!(equivalent(&t, &p1, &o).unwrap().equivalent);
        }
    }

    #[test]
    fn framed_set_matches_generator_construction() {
        let z3 = make_preset(GroupPreset::Cyclic(3)).unwrap();
        let f = canonical_frame(&z3, Convention::LeftRegular);
        let fast = framed_set(&[f.povm()], 2).unwrap();
        let mut gens = Vec::new();
        for e in f.povm().effects() {
            for k in 0..4 {
                gens.push(crate::operators::tensor(e, &Operator::matrix_unit(2, k / 2, k % 2)));
            }
        }
        let slow = build_observable_set(RelationLabel::Framed, gens).unwrap();
        assert_eq!(fast.span_dim(), slow.span_dim());
        assert_eq!(fast.span_dim(), 12);
        for b in slow.span().basis() {
            assert!(fast.span().residual(b).unwrap() < 1e-10);
        }
        assert!(fast.span().orthonormality_residual() < 1e-12);
    }

    #[test]
    fn signature_is_linear() {
        let mut s = Sampler::new(17);
        let o = invariant_set(&regular_rep(&make_preset(GroupPreset::Cyclic(3)).unwrap()));
        let (a, b) = (s.state(3), s.state(3));
        let l = 0.3;
        let mix = &a.op().scale_re(l) + &b.op().scale_re(1.0 - l);
        let (sa, sb, sm) =
            (signature(a.op(), &o).unwrap(), signature(b.op(), &o).unwrap(), signature(&mix, &o).unwrap());
        for i in 0..sm.coords.len() {
            assert!((sm.coords[i] - (sa.coords[i] * l + sb.coords[i] * (1.0 - l))).norm() < 1e-13);
        }
    }

    #[test]
    fn signature_coordinates_are_hs_inner_products() {
        let mut s = Sampler::new(18);
        let o = full_set(2);
        let t = s.operator(2);
        let sig = signature(&t, &o).unwrap();
        for (c, b) in sig.coords.iter().zip(o.span().basis()) {
            assert_eq!(*c, hs_inner(b, &t).unwrap());
        }
    }

    #[test]
    fn mismatched_generators_rejected() {
        let r = build_observable_set(
            RelationLabel::Custom("bad".into()),
            vec![Operator::identity(2), Operator::identity(3)],
        );
        assert_eq!(r, Err(Error::DimensionMismatch { expected: 2, found: 3 }));
        assert!(equivalent(&Operator::identity(3), &Operator::identity(3), &identity_set(2)).is_err());
    }
}
