//! Unitary representations of finite groups and the operator spaces they fix.
//!
//! Conjugation conventions are global: `g.A = U(g) A U(g)*` on observables and
//! `g.T = U(g)* T U(g)` on states, so that `tr[(g.T) A] = tr[T (g.A)]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::groups::{FiniteGroup, GSpace};
use crate::operators::{hs_inner_unchecked, tensor, validate, Operator, OperatorKind, C64, ONE, TOL, ZERO};

/// Residual below which a Gram–Schmidt candidate is considered dependent,
/// relative to the norm of the candidate.
pub const GS_DROP_TOL: f64 = 1e-10;
/// Relative eigenvalue threshold for the commutator nullspace.
pub const NULLSPACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryRep {
    group: FiniteGroup,
    matrices: Vec<Operator>,
}

impl UnitaryRep {
    /// Verify unitarity, `U(e) = I` and `U(g)U(h) = U(gh)`.
    pub fn new(group: FiniteGroup, matrices: Vec<Operator>) -> Result<Self> {
        check_dim(group.order(), matrices.len())?;
        let dim = matrices[0].dim();
        let tol = TOL * dim as f64;
        for (g, m) in matrices.iter().enumerate() {
            check_dim(dim, m.dim())?;
            if !validate(m, OperatorKind::Unitary).pass() {
                return Err(Error::NotARepresentation(format!("U({g}) is not unitary")));
            }
        }
        if matrices[0].max_abs_diff(&Operator::identity(dim)) > tol {
            return Err(Error::NotARepresentation("U(e) is not the identity".into()));
        }
        for g in group.elements() {
            for h in group.elements() {
                let r = (&matrices[g] * &matrices[h]).max_abs_diff(&matrices[group.mul(g, h)]);
                if r > tol {
                    return Err(Error::NotARepresentation(format!("U({g})U({h}) != U({g}{h}), residual {r:e}")));
                }
            }
        }
        Ok(Self { group, matrices })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn matrix(&self, g: usize) -> &Operator {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[Operator] {
        &self.matrices
    }

    /// `g.A` or `g.T` according to `direction`.
    pub fn conjugate(&self, g: usize, a: &Operator, direction: Direction) -> Result<Operator> {
        check_dim(self.dim(), a.dim())?;
        Ok(self.conjugate_unchecked(g, a, direction))
    }

    pub(crate) fn conjugate_unchecked(&self, g: usize, a: &Operator, direction: Direction) -> Operator {
        let u = &self.matrices[g];
        match direction {
            Direction::Observable => a.conjugated_by(u),
            Direction::State => a.conjugated_by(&u.adjoint()),
        }
    }

    /// Uniform group average of the conjugates of `x`.
    pub fn twirl(&self, x: &Operator, direction: Direction) -> Result<Operator> {
        check_dim(self.dim(), x.dim())?;
        let mut acc = Operator::zeros(self.dim());
        for g in self.group.elements() {
            acc.add_scaled(ONE, &self.conjugate_unchecked(g, x, direction));
        }
        Ok(acc.scale_re(1.0 / self.group.order() as f64))
    }

    /// Largest `‖U(g) A − A U(g)‖_F` over the group.
    pub fn commutator_residual(&self, a: &Operator) -> f64 {
        self.matrices.iter().map(|u| (&(u * a) - &(a * u)).frobenius_norm()).fold(0.0, f64::max)
    }

    /// Orthonormal basis of `{A : U(g) A = A U(g) ∀g}`.
    ///
    /// Solved as the nullspace of the stacked commutator map `A ↦ (U(g)A − AU(g))_g`
    /// through its normal operator `Σ_g C_g* C_g`, whose Kronecker form
    /// `2|G| I − Σ_g (U(g)*⊗U(g)ᵀ + U(g)⊗conj U(g))` is assembled without
    /// materializing the stack.
    pub fn invariant_commutant(&self) -> OperatorSpaceBasis {
        let d = self.dim();
        let n = d * d;
        let order = self.group.order() as f64;
        let mut normal = DMatrix::<C64>::identity(n, n) * C64::new(2.0 * order, 0.0);
        for u in &self.matrices {
            let m = u.matrix();
            normal -= m.adjoint().kronecker(&m.transpose());
            normal -= m.kronecker(&m.map(|z| z.conj()));
        }
        let (values, vectors) = Operator::wrap(normal).hermitian_eigen();
        let scale = 4.0 * order;
        let null: Vec<Operator> = values
            .iter()
            .enumerate()
            .take_while(|(_, &v)| v <= NULLSPACE_TOL * scale)
            .map(|(k, _)| Operator::from_vector(d, &vectors.column(k).into_owned()).expect("square"))
            .collect();
        OperatorSpaceBasis::from_generators(d, &null, "invariant commutant")
            .expect("nullspace vectors share the ambient dimension")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `U A U*`
    Observable,
    /// `U* T U`
    State,
}

fn permutation_matrix(n: usize, image: impl Fn(usize) -> usize) -> Operator {
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        m[(image(x), x)] = ONE;
    }
    Operator::wrap(m)
}

/// Left regular representation, `U(g)|h⟩ = |gh⟩`.
pub fn regular_rep(group: &FiniteGroup) -> UnitaryRep {
    let n = group.order();
    let matrices = group.elements().map(|g| permutation_matrix(n, |h| group.mul(g, h))).collect();
    UnitaryRep::new(group.clone(), matrices).expect("left regular representation is a homomorphism")
}

/// Right translation by the inverse, `U(g)|h⟩ = |h g⁻¹⟩`.
pub fn inverse_convention_rep(group: &FiniteGroup) -> UnitaryRep {
    let n = group.order();
    let matrices = group.elements().map(|g| permutation_matrix(n, |h| group.mul(h, group.inv(g)))).collect();
    UnitaryRep::new(group.clone(), matrices).expect("inverse-convention representation is a homomorphism")
}

/// Permutation representation of a G-space: `(U(g)f)(x) = f(g⁻¹.x)`, i.e. `U(g)|x⟩ = |g.x⟩`.
pub fn permutation_rep(space: &GSpace) -> UnitaryRep {
    let n = space.n_points();
    let matrices = space.group().elements().map(|g| permutation_matrix(n, |x| space.act(g, x))).collect();
    UnitaryRep::new(space.group().clone(), matrices).expect("permutation representation is a homomorphism")
}

pub fn trivial_rep(group: &FiniteGroup, dim: usize) -> UnitaryRep {
    UnitaryRep::new(group.clone(), vec![Operator::identity(dim); group.order()]).expect("trivial representation")
}

/// Diagonal action `U_a ⊗ U_b`.
pub fn tensor_rep(a: &UnitaryRep, b: &UnitaryRep) -> Result<UnitaryRep> {
    if a.group != b.group {
        return Err(Error::GroupMismatch { left: a.group.order(), right: b.group.order() });
    }
    let matrices = a.matrices.iter().zip(&b.matrices).map(|(x, y)| tensor(x, y)).collect();
    Ok(UnitaryRep { group: a.group.clone(), matrices })
}

/// An HS-orthonormal basis of a subspace of `B(H)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpaceBasis {
    dim: usize,
    basis: Vec<Operator>,
    source: String,
}

impl OperatorSpaceBasis {
    /// Two-pass modified Gram–Schmidt under the HS inner product.
    pub fn from_generators(dim: usize, generators: &[Operator], source: &str) -> Result<Self> {
        let mut basis: Vec<DVector<C64>> = Vec::new();
        for gen in generators {
            check_dim(dim, gen.dim())?;
            let mut v = gen.to_vector();
            let norm0 = v.norm();
            if norm0 == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dotc(&v);
                    v.axpy(-c, b, ONE);
                }
            }
            let r = v.norm();
            if r > GS_DROP_TOL * norm0 {
                basis.push(v / C64::new(r, 0.0));
            }
        }
        Ok(Self {
            dim,
            basis: basis.iter().map(|v| Operator::from_vector(dim, v).expect("square")).collect(),
            source: source.to_string(),
        })
    }

    /// Trust `basis` to be HS-orthonormal already.
    pub(crate) fn from_orthonormal(dim: usize, basis: Vec<Operator>, source: &str) -> Self {
        Self { dim, basis, source: source.to_string() }
    }

    /// The whole of `B(H)`, spanned by matrix units.
    pub fn full(dim: usize) -> Self {
        let basis = (0..dim * dim).map(|k| Operator::matrix_unit(dim, k / dim, k % dim)).collect();
        Self { dim, basis, source: "full operator space".into() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Operator] {
        &self.basis
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// HS coefficients `⟨b_i, x⟩`.
    pub fn coefficients(&self, x: &Operator) -> Result<Vec<C64>> {
        check_dim(self.dim, x.dim())?;
        Ok(self.basis.iter().map(|b| hs_inner_unchecked(b, x)).collect())
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, x: &Operator) -> Result<Operator> {
        let coeffs = self.coefficients(x)?;
        let mut out = Operator::zeros(self.dim);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.add_scaled(*c, b);
        }
        Ok(out)
    }

    /// Frobenius norm of the component of `x` orthogonal to the span.
    pub fn residual(&self, x: &Operator) -> Result<f64> {
        Ok((x - &self.project(x)?).frobenius_norm())
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((hs_inner_unchecked(a, b) - target).norm());
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepJson {
    pub group: crate::groups::GroupJson,
    pub dim: usize,
    pub matrices: Vec<crate::operators::OperatorJson>,
}

impl From<&UnitaryRep> for RepJson {
    fn from(r: &UnitaryRep) -> Self {
        RepJson { group: r.group().into(), dim: r.dim(), matrices: r.matrices.iter().map(Into::into).collect() }
    }
}

impl TryFrom<RepJson> for UnitaryRep {
    type Error = Error;
    fn try_from(j: RepJson) -> Result<Self> {
        let group = FiniteGroup::try_from(j.group)?;
        let matrices = j.matrices.into_iter().map(Operator::try_from).collect::<Result<Vec<_>>>()?;
        if let Some(m) = matrices.first() {
            check_dim(j.dim, m.dim())?;
        }
        UnitaryRep::new(group, matrices)
    }
}
