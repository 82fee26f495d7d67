use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};

/// Known feature map `φ` with `‖φ(x)‖ ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureMap {
    /// `tanh(x₂)`.
    MatchedTanh,
    /// `(sin 4x₁, tanh x₂) / √2`.
    UnmatchedSinTanh,
    /// `cos(αᵢᵀx + βᵢ) / √d`.
    RandomFourier {
        alpha: DMatrix<f64>,
        beta: DVector<f64>,
    },
}

impl FeatureMap {
    /// `d` features on an `n`-dimensional state, `α ~ N(0, I)`, `β ~ U[0, 2π]`.
    pub fn random_fourier<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Self {
        let alpha = DMatrix::from_fn(d, n, |_, _| StandardNormal.sample(rng));
        let beta = DVector::from_fn(d, |_, _| rng.random::<f64>() * std::f64::consts::TAU);
        FeatureMap::RandomFourier { alpha, beta }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::MatchedTanh => 1,
            FeatureMap::UnmatchedSinTanh => 2,
            FeatureMap::RandomFourier { beta, .. } => beta.len(),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            FeatureMap::MatchedTanh => DVector::from_element(1, x[1].tanh()),
            FeatureMap::UnmatchedSinTanh => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                DVector::from_vec(vec![s * (4.0 * x[0]).sin(), s * x[1].tanh()])
            }
            FeatureMap::RandomFourier { alpha, beta } => {
                let scale = 1.0 / (beta.len() as f64).sqrt();
                (alpha * x + beta).map(|v| scale * v.cos())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use nalgebra::dvector;

    #[test]
    fn examples() {
        let phi = FeatureMap::MatchedTanh.eval(&dvector![9.0, 0.3]);
        assert_eq!(phi[0], 0.3f64.tanh());
        assert_eq!(FeatureMap::UnmatchedSinTanh.eval(&dvector![0.0, 0.0]).norm(), 0.0);
        let mut rng = stream(0, Purpose::Features, 0);
        let rff = FeatureMap::random_fourier(20, 6, &mut rng);
        for k in 0..50 {
            let x = DVector::from_fn(6, |i, _| (k * 7 + i) as f64 * 0.37 - 3.0);
            assert!(rff.eval(&x).norm() <= 1.0 + 1e-15);
        }
    }
}
