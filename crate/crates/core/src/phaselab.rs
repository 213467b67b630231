//! Truncated covariant phase observables on `C^d` with the circle cut into `M` cells.
//!
//! Cell `k` is the arc `(θ_k − π/M, θ_k + π/M]` around `θ_k = 2πk/M`, so the grid
//! rotations `e^{iNθ_j}` permute cells exactly and the phase POVM is a frame over `Z_M`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::frames::{FinitePOVM, QuantumFrame};
use crate::groups::{left_self_space, make_preset, GroupPreset};
use crate::operators::{trace_pair_unchecked, DensityState, Operator, C64, ONE, ZERO};
use crate::representations::{Direction, UnitaryRep};

/// `∫_{lo}^{hi} e^{ibθ} dθ/2π`.
fn arc_integral(b: i64, lo: f64, hi: f64) -> C64 {
    if b == 0 {
        return C64::new((hi - lo) / (2.0 * PI), 0.0);
    }
    let b = b as f64;
    let (e_hi, e_lo) = (C64::from_polar(1.0, b * hi), C64::from_polar(1.0, b * lo));
    (e_hi - e_lo) / C64::new(0.0, 2.0 * PI * b)
}

pub fn grid_angle(m: usize, k: usize) -> f64 {
    2.0 * PI * k as f64 / m as f64
}

/// Diagonal unitary `e^{iNθ}` on `C^d`.
pub fn number_rotation(d: usize, theta: f64) -> Operator {
    Operator::from_fn(d, |i, j| if i == j { C64::from_polar(1.0, i as f64 * theta) } else { ZERO })
}

/// `θ_k ↦ e^{iNθ_k}` as a representation of `Z_M` on `C^d`.
pub fn grid_rep(d: usize, m: usize) -> Result<UnitaryRep> {
    let group = make_preset(GroupPreset::Cyclic(m))?;
    let mats = (0..m).map(|k| number_rotation(d, grid_angle(m, k))).collect();
    UnitaryRep::new(group, mats)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPhasePOVM {
    d: usize,
    m: usize,
    c: DMatrix<C64>,
    effects: Vec<Operator>,
}

/// All-ones coefficients: the canonical phase.
pub fn canonical_coefficients(d: usize) -> DMatrix<C64> {
    DMatrix::from_element(d, d, ONE)
}

pub fn build_phase_povm(d: usize, m: usize, c: &DMatrix<C64>) -> Result<TruncatedPhasePOVM> {
    if d == 0 || m < 2 {
        return Err(Error::Malformed(format!("phase observable needs d ≥ 1 and M ≥ 2, got d = {d}, M = {m}")));
    }
    if c.nrows() != d || c.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: c.nrows().max(c.ncols()) });
    }
    let c_op = Operator::from_matrix(c.clone())?;
    if let Some(i) = (0..d).find(|&i| (c[(i, i)] - ONE).norm() > 1e-12) {
        return Err(Error::InvalidCoefficients(format!("diagonal entry {i} is {}", c[(i, i)])));
    }
    let herm = c_op.hermiticity_residual();
    let min_eig = c_op.hermitian_part().eigenvalues_hermitian()[0];
    if herm > 1e-12 || min_eig < -1e-10 {
        return Err(Error::InvalidCoefficients(format!(
            "coefficient matrix is not positive (hermiticity residual {herm}, least eigenvalue {min_eig})"
        )));
    }
    let half = PI / m as f64;
    let effects = (0..m)
        .map(|k| {
            let (lo, hi) = (grid_angle(m, k) - half, grid_angle(m, k) + half);
            Operator::from_fn(d, |r, s| c[(r, s)] * arc_integral(r as i64 - s as i64, lo, hi))
        })
        .collect();
    Ok(TruncatedPhasePOVM { d, m, c: c.clone(), effects })
}

impl TruncatedPhasePOVM {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn coefficients(&self) -> &DMatrix<C64> {
        &self.c
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    /// Normalized Haar measure of a cell union.
    pub fn measure(&self, cells: &BTreeSet<usize>) -> f64 {
        cells.len() as f64 / self.m as f64
    }

    pub fn effect_of(&self, cells: &BTreeSet<usize>) -> Result<Operator> {
        let mut acc = Operator::zeros(self.d);
        for &k in cells {
            acc.add_scaled(ONE, self.effects.get(k).ok_or(Error::UnknownPoint(k))?);
        }
        Ok(acc)
    }

    pub fn normalization_residual(&self) -> f64 {
        self.effect_of(&(0..self.m).collect()).expect("all cells").max_abs_diff(&Operator::identity(self.d))
    }

    /// `max_{j,k} ‖E(cell k + j) − e^{iNθ_j} E(cell k) e^{−iNθ_j}‖_op`.
    pub fn covariance_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.m {
            let u = number_rotation(self.d, grid_angle(self.m, j));
            for k in 0..self.m {
                let moved = self.effects[k].conjugated_by(&u);
                worst = worst.max((&self.effects[(k + j) % self.m] - &moved).op_norm());
            }
        }
        worst
    }

    /// The phase observable as a frame over `Z_M` with the grid rotations.
    pub fn to_frame(&self) -> Result<QuantumFrame> {
        let rep = grid_rep(self.d, self.m)?;
        let povm = FinitePOVM::new(left_self_space(rep.group()), self.effects.clone())?;
        QuantumFrame::new(rep, povm)
    }

    pub fn probability(&self, state: &Operator, cells: &BTreeSet<usize>) -> Result<f64> {
        check_dim(self.d, state.dim())?;
        Ok(trace_pair_unchecked(state, &self.effect_of(cells)?).re)
    }

    /// Born measure of every cell.
    pub fn born(&self, state: &Operator) -> Result<Vec<f64>> {
        check_dim(self.d, state.dim())?;
        Ok(self.effects.iter().map(|e| trace_pair_unchecked(state, e).re).collect())
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(2.0 * PI);
    t.min(2.0 * PI - t)
}

/// Cells whose grid angle lies within `radius` of `center`.
pub fn arc_cells(m: usize, center: f64, radius: f64) -> BTreeSet<usize> {
    (0..m).filter(|&k| circular_distance(grid_angle(m, k), center) <= radius + 1e-12).collect()
}

/// The cell whose grid angle is nearest to `angle`.
pub fn cell_of(m: usize, angle: f64) -> usize {
    let w = 2.0 * PI / m as f64;
    ((angle / w).round() as i64).rem_euclid(m as i64) as usize
}

/// The state maximizing the probability of `cells`, with that probability.
pub fn best_localizer(povm: &TruncatedPhasePOVM, cells: &BTreeSet<usize>) -> Result<(DensityState, f64)> {
    if cells.is_empty() {
        return Err(Error::EmptySet);
    }
    let (values, vectors) = povm.effect_of(cells)?.hermitian_eigen();
    let top = values.len() - 1;
    Ok((DensityState::pure(&vectors.column(top).into_owned())?, values[top]))
}

/// Localizing state `ω_n` for truncation `d`: the best localizer of the ball of radius `π/n`, `n = d`.
pub fn localizing_state(povm: &TruncatedPhasePOVM, center: f64) -> Result<(DensityState, BTreeSet<usize>, f64)> {
    let radius = PI / povm.dim() as f64;
    let mut ball = arc_cells(povm.cells(), center, radius);
    ball.insert(cell_of(povm.cells(), center));
    let (state, p) = best_localizer(povm, &ball)?;
    Ok((state, ball, p))
}

/// A named test set for the convergence experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSet {
    pub id: String,
    pub cells: BTreeSet<usize>,
}

/// Half circle around the center, the opposite half circle, and the full circle.
pub fn standard_test_sets(m: usize, center: f64) -> Vec<TestSet> {
    vec![
        TestSet { id: "half_containing".into(), cells: arc_cells(m, center, PI / 2.0) },
        TestSet { id: "half_opposite".into(), cells: arc_cells(m, center + PI, PI / 2.0 - 2.0 * PI / m as f64) },
        TestSet { id: "full".into(), cells: (0..m).collect() },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    pub d: usize,
    pub n: usize,
    pub set_id: String,
    pub probability: f64,
    pub deviation: f64,
    pub ball_radius: f64,
    pub ball_probability: f64,
    pub set_measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCurve {
    pub grid: usize,
    pub center: f64,
    pub records: Vec<LocalizationRecord>,
}

impl LocalizationCurve {
    pub fn for_set<'a>(&'a self, set_id: &'a str) -> impl Iterator<Item = &'a LocalizationRecord> + 'a {
        self.records.iter().filter(move |r| r.set_id == set_id)
    }

    /// Whether the deviation never increases along the sweep for `set_id`.
    pub fn deviation_nonincreasing(&self, set_id: &str) -> bool {
        let devs: Vec<f64> = self.for_set(set_id).map(|r| r.deviation).collect();
        devs.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

/// `|μ_{ω_n}(X) − δ_center(X)|` across a sweep of truncations.
pub fn dirac_convergence_experiment(
    dims: &[usize],
    m: usize,
    center: f64,
    sets: &[TestSet],
) -> Result<LocalizationCurve> {
    let center_cell = cell_of(m, center);
    let mut records = Vec::new();
    for &d in dims {
        let povm = build_phase_povm(d, m, &canonical_coefficients(d))?;
        let (omega, _, ball_p) = localizing_state(&povm, center)?;
        for set in sets {
            let p = povm.probability(omega.op(), &set.cells)?;
            let dirac = if set.cells.contains(&center_cell) { 1.0 } else { 0.0 };
            records.push(LocalizationRecord {
                d,
                n: d,
                set_id: set.id.clone(),
                probability: p,
                deviation: (p - dirac).abs(),
                ball_radius: PI / d as f64,
                ball_probability: ball_p,
                set_measure: povm.measure(&set.cells),
            });
        }
    }
    Ok(LocalizationCurve { grid: m, center, records })
}

/// `¥_ω(A) = Σ_k μ_ω(cell k) e^{iN_Sθ_k} A e^{−iN_Sθ_k}` for a phase frame state `ω`.
pub fn grid_conditioned(povm: &TruncatedPhasePOVM, omega: &Operator, a: &Operator) -> Result<Operator> {
    let mu = povm.born(omega)?;
    let ds = a.dim();
    let mut acc = Operator::zeros(ds);
    for (k, w) in mu.iter().enumerate() {
        let u = number_rotation(ds, grid_angle(povm.cells(), k));
        acc.add_scaled(C64::new(*w, 0.0), &a.conjugated_by(&u));
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub d: usize,
    pub residual: f64,
}

/// `‖¥_{ω_d}(A) − A‖_op` along the sweep, with `ω_d` localizing at angle 0.
pub fn conditioned_identity_convergence(dims: &[usize], m: usize, a: &Operator) -> Result<Vec<ConvergencePoint>> {
    dims.iter()
        .map(|&d| {
            let povm = build_phase_povm(d, m, &canonical_coefficients(d))?;
            let (omega, _, _) = localizing_state(&povm, 0.0)?;
            let cond = grid_conditioned(&povm, omega.op(), a)?;
            Ok(ConvergencePoint { d, residual: (&cond - a).op_norm() })
        })
        .collect()
}

/// Grid twirl `(1/M) Σ_k e^{iNθ_k} A e^{−iNθ_k}`.
pub fn grid_twirl(a: &Operator, m: usize) -> Result<Operator> {
    grid_rep(a.dim(), m)?.twirl(a, Direction::Observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;

    #[test]
    fn one_dimensional_truncation_is_trivial() {
        let p = build_phase_povm(1, 8, &canonical_coefficients(1)).unwrap();
        for e in p.effects() {
            assert!((e.get(0, 0) - C64::new(1.0 / 8.0, 0.0)).norm() < 1e-15);
        }
        let (_, prob) = best_localizer(&p, &[0].into()).unwrap();
        assert!((prob - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_off_diagonals_match_closed_form() {
        let m = 4;
        let p = build_phase_povm(2, m, &canonical_coefficients(2)).unwrap();
        for k in 0..m {
            let th = grid_angle(m, k);
            // ∫ e^{−iθ} over (θ_k − π/4, θ_k + π/4] / 2π = e^{−iθ_k} sin(π/4)/π
            let expected = C64::from_polar((PI / 4.0).sin() / PI, -th);
            assert!((p.effects()[k].get(0, 1) - expected).norm() < 1e-15);
            assert!((p.effects()[k].get(1, 0) - expected.conj()).norm() < 1e-15);
            assert!((p.effects()[k].get(0, 0).re - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_and_covariant() {
        for (d, m) in [(2, 4), (5, 16), (8, 64)] {
            let p = build_phase_povm(d, m, &canonical_coefficients(d)).unwrap();
            assert!(p.normalization_residual() < 1e-8);
            assert!(p.covariance_residual() < 1e-9);
            let f = p.to_frame().unwrap();
            assert!(!f.flags().sharp && !f.flags().localizable);
        }
    }

    #[test]
    fn invalid_coefficients_rejected() {
        let mut c = canonical_coefficients(2);
        c[(1, 1)] = C64::new(2.0, 0.0);
        assert!(matches!(build_phase_povm(2, 4, &c), Err(Error::InvalidCoefficients(_))));
        let mut c = canonical_coefficients(2);
        c[(0, 1)] = C64::new(2.0, 0.0);
        c[(1, 0)] = C64::new(2.0, 0.0);
        assert!(matches!(build_phase_povm(2, 4, &c), Err(Error::InvalidCoefficients(_))));
        let diag = DMatrix::<C64>::identity(3, 3);
        assert!(build_phase_povm(3, 4, &diag).is_ok());
    }

    #[test]
    fn cells_partition_the_circle() {
        let m = 16;
        for k in 0..m {
            assert_eq!(cell_of(m, grid_angle(m, k)), k);
            assert_eq!(cell_of(m, grid_angle(m, k) + 0.9 * PI / m as f64), k);
            assert_eq!(cell_of(m, grid_angle(m, k) - 0.9 * PI / m as f64 - 2.0 * PI), k);
        }
        assert_eq!(arc_cells(m, 0.0, PI).len(), m);
    }

    #[test]
    fn full_circle_localizes_perfectly() {
        let p = build_phase_povm(6, 12, &canonical_coefficients(6)).unwrap();
        let (_, prob) = best_localizer(&p, &(0..12).collect()).unwrap();
        assert!((prob - 1.0).abs() < 1e-12);
        assert_eq!(best_localizer(&p, &BTreeSet::new()), Err(Error::EmptySet));
    }

    #[test]
    fn dimension_bound() {
        let mut s = Sampler::new(61);
        let m = 32;
        for d in [2, 4, 8] {
            let p = build_phase_povm(d, m, &canonical_coefficients(d)).unwrap();
            for _ in 0..20 {
                let cells: BTreeSet<usize> = (0..1 + s.index(4)).map(|_| s.index(m)).collect();
                let rho = s.state(d);
                assert!(p.probability(rho.op(), &cells).unwrap() <= d as f64 * p.measure(&cells) + 1e-9);
            }
        }
    }

    #[test]
    fn uniform_state_gives_grid_twirl() {
        let mut s = Sampler::new(62);
        let p = build_phase_povm(4, 16, &canonical_coefficients(4)).unwrap();
        let a = s.operator(3);
        let cond = grid_conditioned(&p, DensityState::maximally_mixed(4).op(), &a).unwrap();
        assert!(cond.max_abs_diff(&grid_twirl(&a, 16).unwrap()) < 1e-13);
    }

    #[test]
    fn invariant_operator_has_zero_residual() {
        let a = Operator::diag(&[0.3, -1.0, 2.0]);
        for pt in conditioned_identity_convergence(&[2, 4, 8], 32, &a).unwrap() {
            assert!(pt.residual < 1e-13);
        }
    }

    #[test]
    fn full_circle_deviation_vanishes() {
        let curve = dirac_convergence_experiment(&[2, 4, 8], 32, 0.0, &standard_test_sets(32, 0.0)).unwrap();
        for r in curve.for_set("full") {
            assert!(r.deviation < 1e-12);
        }
        for r in &curve.records {
            assert!((-1e-12..=1.0 + 1e-12).contains(&r.probability));
        }
    }
}
