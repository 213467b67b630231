//! Dense complex operators on finite-dimensional Hilbert spaces.
//!
//! Every observable, effect and density state in the crate is an [`Operator`]:
//! a square `dim × dim` complex matrix. Multipartite spaces are handled by
//! passing the list of factor dimensions explicitly; the first factor is the
//! most significant index (Kronecker convention).

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance per unit of dimension for Hermiticity, trace and POVM checks.
pub const TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted for a positive semidefinite operator.
pub const EIGEN_FLOOR: f64 = -1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Malformed(format!(
                "expected a non-empty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    pub(crate) fn wrap(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::wrap(DMatrix::from_fn(dim, dim, f))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    /// Build from row-major real and imaginary parts.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if n == 0 || im.len() != n {
            return Err(Error::Malformed("re/im must be non-empty with equal row counts".into()));
        }
        if re.iter().chain(im.iter()).any(|row| row.len() != n) {
            return Err(Error::Malformed(format!("every row must have {n} entries")));
        }
        Ok(Self::from_fn(n, |i, j| C64::new(re[i][j], im[i][j])))
    }

    /// `|u⟩⟨v|`
    pub fn ket_bra(u: &DVector<C64>, v: &DVector<C64>) -> Self {
        Self::wrap(u * v.adjoint())
    }

    pub fn projector(v: &DVector<C64>) -> Self {
        Self::ket_bra(v, v)
    }

    /// `|i⟩⟨j|` in the computational basis.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = ONE;
        Self::wrap(m)
    }

    pub fn basis_projector(dim: usize, i: usize) -> Self {
        Self::matrix_unit(dim, i, i)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.mat.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::wrap(self.mat.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::wrap(&self.mat * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// In-place `self += s · other`.
    pub fn add_scaled(&mut self, s: C64, other: &Operator) {
        self.mat.zip_apply(&other.mat, |a, b| *a += s * b);
    }

    /// `U A U*`
    pub fn conjugated_by(&self, u: &Operator) -> Self {
        Self::wrap(&u.mat * &self.mat * u.mat.adjoint())
    }

    pub fn hermitian_part(&self) -> Self {
        Self::wrap((&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Largest absolute entry of `A - A*`.
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Eigen-decomposition of the Hermitian part. Eigenvalues ascending.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(self.hermitian_part().mat);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, c| eig.eigenvectors[(i, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        self.hermitian_eigen().0
    }

    /// Singular values in descending order, via the eigenvalues of `A*A`.
    pub fn singular_values(&self) -> Vec<f64> {
        let ata = Self::wrap(self.mat.adjoint() * &self.mat);
        let mut sv: Vec<f64> = ata.eigenvalues_hermitian().into_iter().map(|l| l.max(0.0).sqrt()).collect();
        sv.reverse();
        sv
    }

    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn trace_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// Row-major flattening used for operator-space linear algebra.
    pub fn to_vector(&self) -> DVector<C64> {
        let n = self.dim();
        DVector::from_fn(n * n, |k, _| self.mat[(k / n, k % n)])
    }

    pub fn from_vector(dim: usize, v: &DVector<C64>) -> Result<Self> {
        check_dim(dim * dim, v.len())?;
        Ok(Self::from_fn(dim, |i, j| v[i * dim + j]))
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::wrap(&self.mat + &rhs.mat)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::wrap(&self.mat - &rhs.mat)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::wrap(&self.mat * &rhs.mat)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::wrap(-&self.mat)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator::wrap(a.mat.kronecker(&b.mat))
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all(factors: &[&Operator]) -> Operator {
    let mut iter = factors.iter();
    let first = (*iter.next().expect("tensor_all needs at least one factor")).clone();
    iter.fold(first, |acc, f| tensor(&acc, f))
}

pub fn tensor_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

/// Which factor of a bipartite space is traced out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceOut {
    First,
    Second,
}

pub fn partial_trace(x: &Operator, dims: (usize, usize), which: TraceOut) -> Result<Operator> {
    let (dr, ds) = dims;
    check_dim(dr * ds, x.dim())?;
    let k = match which {
        TraceOut::First => 0,
        TraceOut::Second => 1,
    };
    trace_out(x, &[dr, ds], k)
}

fn split_index(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in digits.iter_mut().zip(dims).rev() {
        *slot = idx % d;
        idx /= d;
    }
    digits
}

fn join_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Trace out factor `k` of a multipartite operator.
pub fn trace_out(x: &Operator, dims: &[usize], k: usize) -> Result<Operator> {
    check_dim(dims.iter().product(), x.dim())?;
    if k >= dims.len() {
        return Err(Error::Malformed(format!("factor {k} out of range for {} factors", dims.len())));
    }
    let rest: Vec<usize> = dims.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &d)| d).collect();
    let n_rest: usize = rest.iter().product();
    let mut out = DMatrix::zeros(n_rest, n_rest);
    for r in 0..n_rest {
        let rd = split_index(r, &rest);
        for c in 0..n_rest {
            let cd = split_index(c, &rest);
            let mut acc = ZERO;
            for t in 0..dims[k] {
                let mut full_r = rd.clone();
                full_r.insert(k, t);
                let mut full_c = cd.clone();
                full_c.insert(k, t);
                acc += x.mat[(join_index(&full_r, dims), join_index(&full_c, dims))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(Operator::wrap(out))
}

/// Reorder tensor factors: factor `i` of the result is factor `perm[i]` of `x`.
pub fn permute_factors(x: &Operator, dims: &[usize], perm: &[usize]) -> Result<Operator> {
    check_dim(dims.iter().product(), x.dim())?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::Malformed(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n = x.dim();
    // index map: new flat index -> old flat index
    let map: Vec<usize> = (0..n)
        .map(|idx| {
            let nd = split_index(idx, &new_dims);
            let mut od = vec![0; dims.len()];
            for (i, &p) in perm.iter().enumerate() {
                od[p] = nd[i];
            }
            join_index(&od, dims)
        })
        .collect();
    Ok(Operator::from_fn(n, |i, j| x.mat[(map[i], map[j])]))
}

/// Partial transpose on factor `k`.
pub fn partial_transpose(x: &Operator, dims: &[usize], k: usize) -> Result<Operator> {
    check_dim(dims.iter().product(), x.dim())?;
    let n = x.dim();
    Ok(Operator::from_fn(n, |i, j| {
        let mut di = split_index(i, dims);
        let mut dj = split_index(j, dims);
        std::mem::swap(&mut di[k], &mut dj[k]);
        x.mat[(join_index(&di, dims), join_index(&dj, dims))]
    }))
}

/// Sum of the absolute values of the negative eigenvalues of the partial transpose.
pub fn negativity(x: &Operator, dims: &[usize], k: usize) -> Result<f64> {
    let pt = partial_transpose(x, dims, k)?;
    Ok(pt.eigenvalues_hermitian().into_iter().filter(|&l| l < 0.0).fold(0.0, |acc, l| acc - l))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub op_norm: f64,
    pub trace_norm: f64,
}

pub fn norms(a: &Operator) -> Norms {
    let sv = a.singular_values();
    Norms { op_norm: sv.first().copied().unwrap_or(0.0), trace_norm: sv.iter().sum() }
}

/// Hilbert–Schmidt pairing `tr[a* b]`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    check_dim(a.dim(), b.dim())?;
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked(a: &Operator, b: &Operator) -> C64 {
    a.mat.iter().zip(b.mat.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `tr[a b]`, the state-observable pairing.
pub fn trace_pair(a: &Operator, b: &Operator) -> Result<C64> {
    check_dim(a.dim(), b.dim())?;
    Ok(trace_pair_unchecked(a, b))
}

pub(crate) fn trace_pair_unchecked(a: &Operator, b: &Operator) -> C64 {
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.mat[(i, j)] * b.mat[(j, i)];
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    State,
    Effect,
    Projection,
    Unitary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Result of [`validate`]: every invariant checked, with residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub kind: OperatorKind,
    pub checks: Vec<InvariantCheck>,
}

impl Validation {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// The first failed invariant, if any.
    pub fn violation(&self) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.violation() {
            Some(c) => Err(Error::InvariantViolation { name: c.name.clone(), residual: c.residual }),
            None => Ok(self),
        }
    }
}

fn check(name: &str, residual: f64, threshold: f64) -> InvariantCheck {
    InvariantCheck { name: name.to_string(), residual, threshold, pass: residual <= threshold }
}

pub fn validate(x: &Operator, kind: OperatorKind) -> Validation {
    let tol = TOL * x.dim() as f64;
    let mut checks = Vec::new();
    match kind {
        OperatorKind::Unitary => {
            let id = Operator::identity(x.dim());
            let r = (&(x * &x.adjoint()) - &id).frobenius_norm().max((&(&x.adjoint() * x) - &id).frobenius_norm());
            checks.push(check("unitarity", r, tol));
        }
        _ => {
            checks.push(check("hermiticity", x.hermiticity_residual(), tol));
            let eig = x.eigenvalues_hermitian();
            let min = eig.first().copied().unwrap_or(0.0);
            let max = eig.last().copied().unwrap_or(0.0);
            checks.push(check("positivity", (-min).max(0.0), -EIGEN_FLOOR));
            match kind {
                OperatorKind::State => {
                    checks.push(check("unit_trace", (x.trace() - ONE).norm(), tol));
                }
                OperatorKind::Effect => {
                    checks.push(check("bounded_by_identity", (max - 1.0).max(0.0), -EIGEN_FLOOR));
                }
                OperatorKind::Projection => {
                    checks.push(check("idempotence", x.max_abs_diff(&(x * x)), tol));
                }
                OperatorKind::Unitary => unreachable!(),
            }
        }
    }
    Validation { kind, checks }
}

/// Density operator: Hermitian, positive, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState(Operator);

impl DensityState {
    pub fn new(op: Operator) -> Result<Self> {
        validate(&op, OperatorKind::State).into_result()?;
        Ok(Self(op))
    }

    /// Wrap without checking; for outputs of maps known to preserve states.
    pub fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::Malformed("zero vector".into()));
        }
        Ok(Self(Operator::projector(&(v / C64::new(n, 0.0)))))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        Self(Operator::basis_projector(dim, i))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim).scale_re(1.0 / dim as f64))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_op(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Effect: Hermitian with spectrum in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect(Operator);

impl Effect {
    pub fn new(op: Operator) -> Result<Self> {
        validate(&op, OperatorKind::Effect).into_result()?;
        Ok(Self(op))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_op(self) -> Operator {
        self.0
    }
}

/// Wire format: `{ "dim": n, "re": [[...]], "im": [[...]] }`, row major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&Operator> for OperatorJson {
    fn from(op: &Operator) -> Self {
        let n = op.dim();
        let rows = |f: fn(&C64) -> f64| (0..n).map(|i| (0..n).map(|j| f(&op.mat[(i, j)])).collect()).collect();
        OperatorJson { dim: n, re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;
    fn try_from(j: OperatorJson) -> Result<Self> {
        let op = Operator::from_parts(&j.re, &j.im)?;
        check_dim(j.dim, op.dim())?;
        Ok(op)
    }
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = OperatorJson::deserialize(d)?;
        Operator::try_from(j).map_err(serde::de::Error::custom)
    }
}
