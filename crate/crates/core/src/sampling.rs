//! Seeded random operators and states.
//!
//! All randomness flows from one ChaCha generator so that a seed fixes every
//! sampled input bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operators::{DensityState, Effect, Operator, C64};

#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn complex_normal(&mut self) -> C64 {
        C64::new(self.normal(), self.normal()) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn ginibre(&mut self, rows: usize, cols: usize) -> DMatrix<C64> {
        DMatrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }

    /// Complex Gaussian matrix; generic (non-Hermitian, full rank).
    pub fn operator(&mut self, dim: usize) -> Operator {
        Operator::from_fn(dim, |_, _| self.complex_normal())
    }

    pub fn hermitian(&mut self, dim: usize) -> Operator {
        self.operator(dim).hermitian_part()
    }

    pub fn unit_vector(&mut self, dim: usize) -> DVector<C64> {
        let v = DVector::from_fn(dim, |_, _| self.complex_normal());
        let n = v.norm();
        v / C64::new(n, 0.0)
    }

    /// Full-rank density operator `G G* / tr[G G*]` with square Ginibre `G`.
    pub fn state(&mut self, dim: usize) -> DensityState {
        self.state_with_rank(dim, dim)
    }

    pub fn state_with_rank(&mut self, dim: usize, rank: usize) -> DensityState {
        let g = self.ginibre(dim, rank.max(1));
        let w = &g * g.adjoint();
        let tr = w.trace().re;
        let op = Operator::from_matrix(w / C64::new(tr, 0.0)).expect("square");
        DensityState::new_unchecked(op.hermitian_part())
    }

    pub fn pure_state(&mut self, dim: usize) -> DensityState {
        DensityState::new_unchecked(Operator::projector(&self.unit_vector(dim)))
    }

    /// Positive operator rescaled so its largest eigenvalue is uniform in `(0, 1]`.
    pub fn effect(&mut self, dim: usize) -> Effect {
        let w = self.state(dim).into_op();
        let top = *w.eigenvalues_hermitian().last().expect("non-empty");
        let target = 1.0 - self.uniform();
        Effect::new(w.scale_re(target / top)).expect("rescaled positive operator is an effect")
    }

    /// Probability vector from normalized exponential weights.
    pub fn probabilities(&mut self, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - self.uniform()).ln()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{validate, OperatorKind};

    #[test]
    fn same_seed_same_samples() {
        let (mut a, mut b) = (Sampler::new(7), Sampler::new(7));
        assert_eq!(a.state(3), b.state(3));
        assert_eq!(a.operator(2), b.operator(2));
    }

    #[test]
    fn sampled_objects_are_valid() {
        let mut s = Sampler::new(1);
        for d in 1..6 {
            assert!(validate(s.state(d).op(), OperatorKind::State).pass());
            assert!(validate(s.pure_state(d).op(), OperatorKind::State).pass());
            assert!(validate(s.effect(d).op(), OperatorKind::Effect).pass());
            assert!((s.unit_vector(d).norm() - 1.0).abs() < 1e-14);
        }
        let p = s.probabilities(5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14 && p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn wishart_states_are_full_rank() {
        let mut s = Sampler::new(2);
        let ev = s.state(6).op().eigenvalues_hermitian();
        assert!(ev[0] > 1e-6);
    }
}
