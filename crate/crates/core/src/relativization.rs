//! Relativization `¥(A) = Σ_g E({g}) ⊗ g.A` and its relatives.
//!
//! The joint space is ordered frame ⊗ system. Observables move by
//! `g.A = U(g) A U(g)*`, states by `g.T = U(g)* T U(g)`.

use nalgebra::DMatrix;

use crate::equivalence::{build_observable_set, ObservableSet, RelationLabel};
use crate::error::{check_dim, Error, Result};
use crate::frames::{FinitePOVM, QuantumFrame};
use crate::groups::left_self_space;
use crate::operators::{tensor, DensityState, Operator, C64, ONE, ZERO};
use crate::representations::{tensor_rep, Direction, UnitaryRep};
use crate::sampling::Sampler;

/// A frame together with the system it relativizes.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativePair {
    frame: QuantumFrame,
    system_rep: UnitaryRep,
}

impl RelativePair {
    pub fn new(frame: QuantumFrame, system_rep: UnitaryRep) -> Result<Self> {
        if frame.group() != system_rep.group() {
            return Err(Error::GroupMismatch { left: frame.group().order(), right: system_rep.group().order() });
        }
        Ok(Self { frame, system_rep })
    }

    pub fn frame(&self) -> &QuantumFrame {
        &self.frame
    }

    pub fn system_rep(&self) -> &UnitaryRep {
        &self.system_rep
    }

    pub fn frame_dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn system_dim(&self) -> usize {
        self.system_rep.dim()
    }

    pub fn joint_dim(&self) -> usize {
        self.frame_dim() * self.system_dim()
    }

    /// Diagonal action `U_R ⊗ U_S`.
    pub fn joint_rep(&self) -> UnitaryRep {
        tensor_rep(self.frame.rep(), &self.system_rep).expect("same group by construction")
    }
}

/// `tr_R[(w ⊗ I) x]` for `x` on `H_R ⊗ H_S`.
pub(crate) fn weighted_partial_trace(w: &Operator, x: &Operator, dr: usize, ds: usize) -> Operator {
    let (w, x) = (w.matrix(), x.matrix());
    let mut out = DMatrix::<C64>::zeros(ds, ds);
    for a in 0..dr {
        for b in 0..dr {
            let wba = w[(b, a)];
            if wba == ZERO {
                continue;
            }
            for i in 0..ds {
                for j in 0..ds {
                    out[(i, j)] += wba * x[(a * ds + i, b * ds + j)];
                }
            }
        }
    }
    Operator::wrap(out)
}

pub fn relativize(pair: &RelativePair, a: &Operator) -> Result<Operator> {
    check_dim(pair.system_dim(), a.dim())?;
    let mut acc = Operator::zeros(pair.joint_dim());
    for g in pair.frame.group().elements() {
        let moved = pair.system_rep.conjugate_unchecked(g, a, Direction::Observable);
        acc.add_scaled(ONE, &tensor(pair.frame.effect(g), &moved));
    }
    Ok(acc)
}

/// `¥_*(Ω) = Σ_g U_S(g)* tr_R[(E({g}) ⊗ I) Ω] U_S(g)` on arbitrary trace-class input.
pub fn predual_relativize_trace_class(pair: &RelativePair, omega: &Operator) -> Result<Operator> {
    check_dim(pair.joint_dim(), omega.dim())?;
    let (dr, ds) = (pair.frame_dim(), pair.system_dim());
    let mut acc = Operator::zeros(ds);
    for g in pair.frame.group().elements() {
        let block = weighted_partial_trace(pair.frame.effect(g), omega, dr, ds);
        acc.add_scaled(ONE, &pair.system_rep.conjugate_unchecked(g, &block, Direction::State));
    }
    Ok(acc)
}

pub fn predual_relativize(pair: &RelativePair, omega: &DensityState) -> Result<DensityState> {
    predual_relativize_trace_class(pair, omega.op()).map(DensityState::new_unchecked)
}

/// `Γ_ω(A)`, the linear extension of `A_R ⊗ A_S ↦ tr[ω A_R] A_S`.
pub fn restrict(omega: &DensityState, a_joint: &Operator) -> Result<Operator> {
    let dr = omega.dim();
    if !a_joint.dim().is_multiple_of(dr) {
        return Err(Error::DimensionMismatch { expected: dr * (a_joint.dim() / dr).max(1), found: a_joint.dim() });
    }
    let ds = a_joint.dim() / dr;
    Ok(weighted_partial_trace(omega.op(), a_joint, dr, ds))
}

/// Born measure `μ_ω(g) = tr[ω E({g})]` of the frame observable.
pub fn born_measure(frame: &QuantumFrame, omega: &DensityState) -> Result<Vec<f64>> {
    frame.povm().born(omega.op())
}

fn weighted_average(rep: &UnitaryRep, weights: &[f64], a: &Operator, direction: Direction) -> Operator {
    let mut acc = Operator::zeros(rep.dim());
    for (g, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            acc.add_scaled(C64::new(w, 0.0), &rep.conjugate_unchecked(g, a, direction));
        }
    }
    acc
}

/// `¥_ω(A) = Σ_g μ_ω(g) g.A`.
pub fn conditioned_relativize(pair: &RelativePair, omega: &DensityState, a: &Operator) -> Result<Operator> {
    check_dim(pair.frame_dim(), omega.dim())?;
    check_dim(pair.system_dim(), a.dim())?;
    let mu = born_measure(&pair.frame, omega)?;
    Ok(weighted_average(&pair.system_rep, &mu, a, Direction::Observable))
}

/// `ρ^(ω) = Σ_g μ_ω(g) g.ρ` with the state action.
pub fn product_relative_state(pair: &RelativePair, omega: &DensityState, rho: &DensityState) -> Result<DensityState> {
    check_dim(pair.frame_dim(), omega.dim())?;
    check_dim(pair.system_dim(), rho.dim())?;
    let mu = born_measure(&pair.frame, omega)?;
    Ok(DensityState::new_unchecked(weighted_average(&pair.system_rep, &mu, rho.op(), Direction::State)))
}

/// `E₂*E₁(X) = ¥^{R₁}(E₂(X))` on `H₁ ⊗ H₂`, indexed by the points of `G`.
pub fn relative_orientation(frame1: &QuantumFrame, frame2: &QuantumFrame) -> Result<FinitePOVM> {
    let pair = RelativePair::new(frame1.clone(), frame2.rep().clone())?;
    let effects = frame2.group().elements().map(|x| relativize(&pair, frame2.effect(x))).collect::<Result<Vec<_>>>()?;
    FinitePOVM::new(left_self_space(frame1.group()), effects)
}

/// Exchange the factors of an operator on `H_a ⊗ H_b`.
pub fn swap_factors(x: &Operator, da: usize, db: usize) -> Result<Operator> {
    crate::operators::permute_factors(x, &[da, db], &[1, 0])
}

/// `max_x ‖E₂*E₁({x}) − SWAP(E₁*E₂({x⁻¹}))‖_op`.
pub fn swap_relation_residual(frame1: &QuantumFrame, frame2: &QuantumFrame) -> Result<f64> {
    let o12 = relative_orientation(frame1, frame2)?;
    let o21 = relative_orientation(frame2, frame1)?;
    let g = frame1.group();
    let mut worst: f64 = 0.0;
    for x in g.elements() {
        let swapped = swap_factors(o21.effect(g.inv(x)), frame2.dim(), frame1.dim())?;
        worst = worst.max((o12.effect(x) - &swapped).op_norm());
    }
    Ok(worst)
}

/// `B(H_S)^R`: span of the relativized matrix units.
pub fn relative_set(pair: &RelativePair) -> Result<ObservableSet> {
    let d = pair.system_dim();
    let gens =
        (0..d * d).map(|k| relativize(pair, &Operator::matrix_unit(d, k / d, k % d))).collect::<Result<Vec<_>>>()?;
    build_observable_set(RelationLabel::Relative, gens)
}

/// `B(H_S)^R_ω`: span of the conditioned relativized matrix units.
pub fn conditioned_set(pair: &RelativePair, omega: &DensityState) -> Result<ObservableSet> {
    let d = pair.system_dim();
    let gens = (0..d * d)
        .map(|k| conditioned_relativize(pair, omega, &Operator::matrix_unit(d, k / d, k % d)))
        .collect::<Result<Vec<_>>>()?;
    build_observable_set(RelationLabel::Conditioned, gens)
}

/// `B(H₂ ⊗ H_S)^{R₁,E₂}` on `H₁ ⊗ H₂ ⊗ H_S`: span of `¥^{R₁}(E₂(x) ⊗ A_S)`.
pub fn framed_relative_set(
    frame1: &QuantumFrame,
    frame2: &QuantumFrame,
    system_rep: &UnitaryRep,
) -> Result<ObservableSet> {
    let pair = RelativePair::new(frame1.clone(), tensor_rep(frame2.rep(), system_rep)?)?;
    let d = system_rep.dim();
    let mut gens = Vec::with_capacity(frame2.group().order() * d * d);
    for e in frame2.povm().effects() {
        for k in 0..d * d {
            gens.push(relativize(&pair, &tensor(e, &Operator::matrix_unit(d, k / d, k % d)))?);
        }
    }
    build_observable_set(RelationLabel::FramedRelative, gens)
}

/// Smallest eigenvalue of `(id₂ ⊗ ¥)(X)` over random positive `X` on `C² ⊗ H_S`.
///
/// A regression guard on complete positivity, not a proof.
pub fn cp_spot_check(pair: &RelativePair, sampler: &mut Sampler, trials: usize) -> Result<f64> {
    let ds = pair.system_dim();
    let dj = pair.joint_dim();
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let x = sampler.state(2 * ds).into_op();
        let mut out = DMatrix::<C64>::zeros(2 * dj, 2 * dj);
        for bi in 0..2 {
            for bj in 0..2 {
                let block = Operator::from_fn(ds, |i, j| x.get(bi * ds + i, bj * ds + j));
                let image = relativize(pair, &block)?;
                out.view_mut((bi * dj, bj * dj), (dj, dj)).copy_from(image.matrix());
            }
        }
        worst = worst.min(Operator::wrap(out).hermitian_part().eigenvalues_hermitian()[0]);
    }
    Ok(worst)
}

/// `‖¥(AB) − ¥(A)¥(B)‖_op`.
pub fn multiplicativity_defect(pair: &RelativePair, a: &Operator, b: &Operator) -> Result<f64> {
    let lhs = relativize(pair, &(a * b))?;
    let rhs = &relativize(pair, a)? * &relativize(pair, b)?;
    Ok((&lhs - &rhs).op_norm())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicativityWitness {
    pub defect: f64,
    pub a: Operator,
    pub b: Operator,
}

/// Largest defect over squared basis projectors and random Hermitian pairs.
pub fn multiplicativity_witness(
    pair: &RelativePair,
    sampler: &mut Sampler,
    trials: usize,
) -> Result<MultiplicativityWitness> {
    let d = pair.system_dim();
    let mut best = MultiplicativityWitness { defect: -1.0, a: Operator::zeros(d), b: Operator::zeros(d) };
    let mut consider = |a: Operator, b: Operator| -> Result<()> {
        let defect = multiplicativity_defect(pair, &a, &b)?;
        if defect > best.defect {
            best = MultiplicativityWitness { defect, a, b };
        }
        Ok(())
    };
    for i in 0..d {
        let p = Operator::basis_projector(d, i);
        consider(p.clone(), p)?;
    }
    for _ in 0..trials {
        consider(sampler.hermitian(d), sampler.hermitian(d))?;
    }
    Ok(best)
}
