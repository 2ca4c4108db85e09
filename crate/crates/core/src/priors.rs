//! Priors on the latent embedding and its hyperparameters.
//!
//! Rows of `U` are i.i.d. `N(0, Σ_ρ)` with the exchangeable covariance
//! `Σ_ρ = (1-ρ)I + ρ11ᵀ`. Its inverse and determinant have closed forms,
//! so no matrix factorization is needed:
//!
//! ```text
//! det Σ_ρ      = (1-ρ)^(K-1) (1 + (K-1)ρ)
//! uᵀ Σ_ρ⁻¹ u   = (Σu² - ρ/(1+(K-1)ρ) (Σu)²) / (1-ρ)
//! ```

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::order::LatentEmbedding;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PriorError {
    #[error("correlation must lie in [0, 1), got {0}")]
    InvalidRho(f64),
    #[error("hyperparameter `{name}` out of range: {value}")]
    InvalidHyperparam { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside the prior's support")]
    Domain { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Second shape of the `Beta(1, α_ρ)` prior on ρ.
    pub alpha_rho: f64,
    /// Shape of the Gamma prior on β.
    pub gamma_a: f64,
    /// Rate of the Gamma prior on β.
    pub gamma_b: f64,
    /// Poisson rate for K, truncated to `K >= 1`.
    pub lambda: f64,
    /// ρ proposal window: `δ ~ U(d_r, 1/d_r)`.
    pub rho_step: f64,
    /// Standard deviation of the log-β random walk.
    pub beta_step: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha_rho: 1.0,
            gamma_a: 2.0,
            gamma_b: 1.0,
            lambda: 3.0,
            rho_step: 0.8,
            beta_step: 0.3,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), PriorError> {
        let positive = [
            ("alpha_rho", self.alpha_rho),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("lambda", self.lambda),
            ("beta_step", self.beta_step),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PriorError::InvalidHyperparam { name, value });
            }
        }
        if !(self.rho_step > 0.0 && self.rho_step < 1.0) {
            return Err(PriorError::InvalidHyperparam {
                name: "rho_step",
                value: self.rho_step,
            });
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<(), PriorError> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(PriorError::InvalidRho(rho))
    }
}

/// Dense `Σ_ρ` for dimension `k`.
pub fn sigma_rho(rho: f64, k: usize) -> Result<Vec<Vec<f64>>, PriorError> {
    check_rho(rho)?;
    Ok((0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { rho }).collect())
        .collect())
}

/// `ln N(row; 0, Σ_ρ)`. Caller guarantees `0 <= rho < 1`.
pub fn log_density_row(row: &[f64], rho: f64) -> f64 {
    let k = row.len() as f64;
    let spread = 1.0 + (k - 1.0) * rho;
    let log_det = (k - 1.0) * (-rho).ln_1p() + spread.ln();
    let sum: f64 = row.iter().sum();
    let sum_sq: f64 = row.iter().map(|x| x * x).sum();
    let quad = (sum_sq - rho / spread * sum * sum) / (1.0 - rho);
    -0.5 * (k * (2.0 * PI).ln() + log_det + quad)
}

/// `Σ_j ln N(U_j; 0, Σ_ρ)` over the rows of `u`.
pub fn log_prior_u(u: &LatentEmbedding, rho: f64) -> Result<f64, PriorError> {
    check_rho(rho)?;
    Ok(u.rows().map(|row| log_density_row(row, rho)).sum())
}

/// One draw from `N(0, Σ_ρ)`: `√(1-ρ) z + √ρ s 1` with `z`, `s` standard normal.
pub fn sample_row<R: Rng + ?Sized>(rng: &mut R, rho: f64, k: usize) -> Vec<f64> {
    let shared: f64 = rng.sample(StandardNormal);
    let shared = rho.sqrt() * shared;
    let scale = (1.0 - rho).sqrt();
    (0..k)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal) + shared)
        .collect()
}

/// An `m × k` embedding drawn from the prior.
pub fn sample_embedding<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    k: usize,
    rho: f64,
) -> LatentEmbedding {
    let values = (0..m).flat_map(|_| sample_row(rng, rho, k)).collect();
    LatentEmbedding::new(m, k, values).expect("prior draws are finite")
}

/// Mean and variance of an extra coordinate given the `K` existing ones of
/// the same row under `Σ_ρ(K+1)`.
pub fn conditional_column_params(row: &[f64], rho: f64) -> (f64, f64) {
    let k = row.len() as f64;
    let spread = 1.0 + (k - 1.0) * rho;
    let mean = rho / spread * row.iter().sum::<f64>();
    let var = (spread - k * rho * rho) / spread;
    (mean, var)
}

/// A new column drawn row-wise from the conditional prior.
pub fn sample_conditional_column<R: Rng + ?Sized>(
    rng: &mut R,
    u: &LatentEmbedding,
    rho: f64,
) -> Vec<f64> {
    u.rows()
        .map(|row| {
            let (mean, var) = conditional_column_params(row, rho);
            mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

/// `Beta(1, α_ρ)` log-density.
pub fn log_prior_rho(rho: f64, hp: &Hyperparams) -> Result<f64, PriorError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(PriorError::Domain {
            name: "rho",
            value: rho,
        });
    }
    Ok(hp.alpha_rho.ln() + (hp.alpha_rho - 1.0) * (-rho).ln_1p())
}

/// `Gamma(a, b)` log-density with `b` a rate.
pub fn log_prior_beta(beta: f64, hp: &Hyperparams) -> Result<f64, PriorError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(PriorError::Domain {
            name: "beta",
            value: beta,
        });
    }
    let (a, b) = (hp.gamma_a, hp.gamma_b);
    Ok(a * b.ln() - ln_gamma(a) + (a - 1.0) * beta.ln() - b * beta)
}

/// Poisson(λ) log-mass truncated to `K >= 1`.
pub fn log_prior_k(k: usize, hp: &Hyperparams) -> Result<f64, PriorError> {
    if k == 0 {
        return Err(PriorError::Domain {
            name: "K",
            value: 0.0,
        });
    }
    let lambda = hp.lambda;
    let k = k as f64;
    Ok(k * lambda.ln() - lambda - ln_gamma(k + 1.0) - (-(-lambda).exp()).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_log_pdf(row: &[f64], rho: f64) -> f64 {
        let k = row.len();
        let sigma = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { rho });
        let chol = sigma.cholesky().unwrap();
        let x = DVector::from_column_slice(row);
        let y = chol.l().solve_lower_triangular(&x).unwrap();
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        -0.5 * (k as f64 * (2.0 * PI).ln() + log_det + y.norm_squared())
    }

    #[test]
    fn sigma_rho_examples() {
        assert_eq!(
            sigma_rho(0.0, 3).unwrap(),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        assert_eq!(sigma_rho(0.5, 2).unwrap(), vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(sigma_rho(1.0, 2), Err(PriorError::InvalidRho(1.0)));
        assert_eq!(sigma_rho(-0.1, 2), Err(PriorError::InvalidRho(-0.1)));
    }

    #[test]
    fn sigma_rho_eigenvalues() {
        for (rho, k) in [(0.3, 4), (0.9, 3), (0.0, 5), (0.55, 1)] {
            let s = sigma_rho(rho, k).unwrap();
            let m = DMatrix::from_fn(k, k, |i, j| s[i][j]);
            let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            let mut expected = vec![1.0 - rho; k - 1];
            expected.push(1.0 + (k as f64 - 1.0) * rho);
            expected.sort_by(f64::total_cmp);
            for (a, b) in eig.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_prior_u_examples() {
        let zero = LatentEmbedding::zeros(1, 2);
        let v = log_prior_u(&zero, 0.0).unwrap();
        assert!((v + (2.0 * PI).ln()).abs() < 1e-15);
        let a = [0.3, -1.2, 2.0];
        let b = [2.0, 0.3, -1.2];
        assert!((log_density_row(&a, 0.4) - log_density_row(&b, 0.4)).abs() < 1e-14);
    }

    #[test]
    fn log_prior_u_matches_cholesky_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=6 {
            for _ in 0..20 {
                let rho: f64 = rng.random_range(0.0..0.999);
                let row: Vec<f64> = (0..k).map(|_| rng.random_range(-4.0..4.0)).collect();
                let closed = log_density_row(&row, rho);
                let dense = dense_log_pdf(&row, rho);
                assert!((closed - dense).abs() < 1e-10, "k={k} rho={rho}: {closed} vs {dense}");
            }
        }
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(conditional_column_params(&[1.5, -2.0], 0.0), (0.0, 1.0));
        // Schur complement of [[1, ρ], [ρ, 1]] at ρ = 0.5
        let (mean, var) = conditional_column_params(&[2.0], 0.5);
        assert!((mean - 1.0).abs() < 1e-15);
        assert!((var - 0.75).abs() < 1e-15);
    }

    #[test]
    fn conditional_matches_schur_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in 1..=5 {
            let rho: f64 = rng.random_range(0.0..0.95);
            let row: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { rho });
            let c = DVector::from_element(k, rho);
            let inv = s.try_inverse().unwrap();
            let w = &inv * &c;
            let oracle_mean = w.dot(&DVector::from_column_slice(&row));
            let oracle_var = 1.0 - c.dot(&w);
            let (mean, var) = conditional_column_params(&row, rho);
            assert!((mean - oracle_mean).abs() < 1e-12);
            assert!((var - oracle_var).abs() < 1e-12);
        }
    }

    #[test]
    fn augmented_draws_have_exchangeable_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (rho, k, n) = (0.6, 2, 100_000);
        let mut acc = [[0.0; 3]; 3];
        for _ in 0..n {
            let mut row = sample_row(&mut rng, rho, k);
            let (mean, var) = conditional_column_params(&row, rho);
            row.push(mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal));
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += row[i] * row[j];
                }
            }
        }
        for (i, acc_row) in acc.iter().enumerate() {
            for (j, &a) in acc_row.iter().enumerate() {
                let target = if i == j { 1.0 } else { rho };
                assert!((a / n as f64 - target).abs() < 0.02, "({i},{j})");
            }
        }
    }

    #[test]
    fn hyperprior_examples() {
        let hp = Hyperparams::default();
        let expected = (3.0 * (-3.0f64).exp() / (1.0 - (-3.0f64).exp())).ln();
        assert!((log_prior_k(1, &hp).unwrap() - expected).abs() < 1e-14);
        for rho in [0.0, 0.2, 0.7, 0.999] {
            assert_eq!(log_prior_rho(rho, &hp).unwrap(), 0.0);
        }
        for k in 1..30 {
            let ratio = log_prior_k(k + 1, &hp).unwrap() - log_prior_k(k, &hp).unwrap();
            assert!((ratio - (3.0 / (k as f64 + 1.0)).ln()).abs() < 1e-12);
        }
        // Gamma(2, 1): β e^{-β}
        let b = 1.7;
        assert!((log_prior_beta(b, &hp).unwrap() - (b.ln() - b)).abs() < 1e-14);
        assert!(log_prior_k(0, &hp).is_err());
        assert!(log_prior_rho(1.0, &hp).is_err());
        assert!(log_prior_beta(0.0, &hp).is_err());
    }

    #[test]
    fn truncated_poisson_sums_to_one() {
        for lambda in [0.5, 3.0, 10.0] {
            let hp = Hyperparams {
                lambda,
                ..Hyperparams::default()
            };
            let total: f64 = (1..=200).map(|k| log_prior_k(k, &hp).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-12, "lambda={lambda}");
        }
    }

    #[test]
    fn beta_prior_integrates_to_one() {
        let hp = Hyperparams {
            alpha_rho: 2.5,
            ..Hyperparams::default()
        };
        let n = 200_000;
        let h = 1.0 / n as f64;
        let total: f64 = (0..n)
            .map(|i| log_prior_rho((i as f64 + 0.5) * h, &hp).unwrap().exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hyperparam_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        let bad = Hyperparams {
            rho_step: 1.0,
            ..Hyperparams::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(PriorError::InvalidHyperparam { name: "rho_step", .. })
        ));
        let bad = Hyperparams {
            gamma_b: 0.0,
            ..Hyperparams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn log_prior_u_is_finite_near_singular() {
        let u = LatentEmbedding::from_rows(&[vec![1e3, -1e3, 5.0]]).unwrap();
        assert!(log_prior_u(&u, 1.0 - 1e-9).unwrap().is_finite());
    }
}
