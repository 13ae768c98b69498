//! Scalar uncertainty criteria and monotonicity verification.
//!
//! Because every transition matrix of the propagation has unit determinant
//! and injected noise is positive semidefinite, the determinant of the
//! propagated covariance can never shrink (Minkowski's determinant
//! inequality), and with it any determinant-derived criterion is monotone.
//! [`verify_monotonicity`] checks a concrete chain for that property and
//! reports the first violation.
//!
//! Determinants are accumulated in log-domain from a symmetric
//! eigendecomposition: over long chains `det Σ` spans hundreds of orders of
//! magnitude and would underflow as a plain product.

use serde::{Deserialize, Serialize};

use crate::propagation::Covariance9;

/// Scalar uncertainty criterion of a 9×9 covariance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyCriterion {
    /// `det(Σ)^{1/9}` — the determinant criterion, normalized per dimension.
    DOpt,
    /// Trace of Σ.
    AOpt,
    /// Largest eigenvalue of Σ.
    EOpt,
    /// Rényi entropy of the Gaussian with covariance Σ,
    /// `½ log det(2π α^{1/(α−1)} Σ)`. The parameter must lie in
    /// `[0,1) ∪ (1,∞)`; the Shannon entropy is the α→1 limit.
    RenyiEntropy(f64),
}

/// Log-determinant from a symmetric eigendecomposition; `None` when any
/// eigenvalue is non-positive.
fn log_det(sigma: &Covariance9) -> Option<f64> {
    let eig = sigma.matrix().symmetric_eigen();
    let mut acc = 0.0;
    for v in eig.eigenvalues.iter() {
        if *v <= 0.0 {
            return None;
        }
        acc += v.ln();
    }
    Some(acc)
}

/// Evaluates a criterion. Singular covariances give 0 for the determinant
/// criterion and `-inf` for the Rényi entropy.
pub fn criterion_value(criterion: UncertaintyCriterion, sigma: &Covariance9) -> f64 {
    match criterion {
        UncertaintyCriterion::DOpt => match log_det(sigma) {
            Some(ld) => (ld / 9.0).exp(),
            None => 0.0,
        },
        UncertaintyCriterion::AOpt => sigma.matrix().trace(),
        UncertaintyCriterion::EOpt => sigma.matrix().symmetric_eigen().eigenvalues.max(),
        UncertaintyCriterion::RenyiEntropy(alpha) => {
            debug_assert!(
                (0.0..1.0).contains(&alpha) || alpha > 1.0,
                "Rényi parameter must be in [0,1) ∪ (1,∞)"
            );
            match log_det(sigma) {
                Some(ld) => {
                    let n = 9.0;
                    let tau = 2.0 * std::f64::consts::PI * alpha.powf(1.0 / (alpha - 1.0));
                    0.5 * n * tau.ln() + 0.5 * ld
                }
                None => f64::NEG_INFINITY,
            }
        }
    }
}

/// One detected monotonicity violation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    /// Index of the later element of the offending pair.
    pub index: usize,
    /// How far the log-determinant dropped.
    pub log_det_drop: f64,
}

/// Report of a monotonicity check along a covariance chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub schema_version: u32,
    /// Log-determinant sequence (`-inf` marks singular entries).
    pub log_dets: Vec<f64>,
    pub violations: Vec<MonotonicityViolation>,
    pub pass: bool,
}

/// Absolute slack on log-determinant differences before a drop counts as a
/// violation.
pub const MONOTONICITY_SLACK: f64 = 1e-12;

/// Checks that `det Σ` never decreases along the chain (beyond round-off
/// slack) and reports every violation with its magnitude.
pub fn verify_monotonicity(chain: &[Covariance9]) -> MonotonicityReport {
    let log_dets: Vec<f64> = chain
        .iter()
        .map(|s| log_det(s).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let mut violations = Vec::new();
    for i in 1..log_dets.len() {
        let prev = log_dets[i - 1];
        let cur = log_dets[i];
        if prev == f64::NEG_INFINITY {
            continue; // anything is at least as large as a singular start
        }
        if cur < prev - MONOTONICITY_SLACK {
            violations.push(MonotonicityViolation {
                index: i,
                log_det_drop: prev - cur,
            });
        }
    }
    MonotonicityReport {
        schema_version: 1,
        pass: violations.is_empty(),
        log_dets,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Matrix9;
    use crate::propagation::PerturbationSide;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn cov(m: Matrix9) -> Covariance9 {
        Covariance9::new(m, PerturbationSide::RightLocal).unwrap()
    }

    fn random_spd(rng: &mut ChaCha12Rng, scale: f64) -> Covariance9 {
        let a = Matrix9::from_fn(|_, _| rng.random_range(-1.0..1.0));
        cov(a * a.transpose() * scale + Matrix9::identity() * scale * 1e-3)
    }

    #[test]
    fn unit_covariance_reference_values() {
        let sigma = cov(Matrix9::identity());
        assert_relative_eq!(
            criterion_value(UncertaintyCriterion::DOpt, &sigma),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            criterion_value(UncertaintyCriterion::AOpt, &sigma),
            9.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            criterion_value(UncertaintyCriterion::EOpt, &sigma),
            1.0,
            epsilon = 1e-12
        );
        // α→1 limit approaches the Shannon entropy (9/2)·log(2πe)
        let shannon = 4.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        for alpha in [1.0 - 1e-8, 1.0 + 1e-8] {
            assert_relative_eq!(
                criterion_value(UncertaintyCriterion::RenyiEntropy(alpha), &sigma),
                shannon,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn scaled_identity_d_opt() {
        let c = 3.7e-4;
        let sigma = cov(Matrix9::identity() * c);
        assert_relative_eq!(
            criterion_value(UncertaintyCriterion::DOpt, &sigma),
            c,
            epsilon = 1e-12 * c
        );
    }

    #[test]
    fn singular_covariance_sentinels() {
        let mut m = Matrix9::identity();
        m[(8, 8)] = 0.0;
        let sigma = cov(m);
        assert_eq!(criterion_value(UncertaintyCriterion::DOpt, &sigma), 0.0);
        assert_eq!(
            criterion_value(UncertaintyCriterion::RenyiEntropy(2.0), &sigma),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn renyi_difference_identity() {
        // H_α(Σ_j) − H_α(Σ_i) = ½ log(det Σ_j / det Σ_i), independent of α
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..20 {
            let a = random_spd(&mut rng, 1e-4);
            let b = random_spd(&mut rng, 1e-3);
            let expected = 0.5 * (b.matrix().determinant().ln() - a.matrix().determinant().ln());
            for alpha in [0.5, 2.0, 10.0] {
                let h = UncertaintyCriterion::RenyiEntropy(alpha);
                let diff = criterion_value(h, &b) - criterion_value(h, &a);
                assert_relative_eq!(diff, expected, epsilon = 1e-12 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn d_opt_superadditive_under_unit_determinant_transitions() {
        // det A = 1 and PSD noise: DOpt(AΣAᵀ + N) ≥ DOpt(Σ) + DOpt(N)
        let mut rng = ChaCha12Rng::seed_from_u64(56);
        for _ in 0..20 {
            let sigma = random_spd(&mut rng, 1e-4);
            // unit-determinant transition: identity plus strictly lower nilpotent
            let mut a = Matrix9::identity();
            a[(3, 0)] = rng.random_range(-0.5..0.5);
            a[(6, 3)] = rng.random_range(-0.5..0.5);
            let noise = random_spd(&mut rng, 1e-6);
            let next = cov(a * sigma.matrix() * a.transpose() + noise.matrix());
            let lhs = criterion_value(UncertaintyCriterion::DOpt, &next);
            let rhs = criterion_value(UncertaintyCriterion::DOpt, &sigma)
                + criterion_value(UncertaintyCriterion::DOpt, &noise);
            assert!(lhs >= rhs - 1e-12, "superadditivity broken: {lhs} < {rhs}");
        }
    }

    #[test]
    fn constant_chain_passes_with_equalities() {
        let sigma = cov(Matrix9::identity() * 2.5e-5);
        let chain = vec![sigma; 50];
        let report = verify_monotonicity(&chain);
        assert!(report.pass);
        assert!(report.violations.is_empty());
        let first = report.log_dets[0];
        for ld in &report.log_dets {
            assert_relative_eq!(*ld, first, epsilon = 1e-12);
        }
    }

    #[test]
    fn growing_chain_passes() {
        let mut rng = ChaCha12Rng::seed_from_u64(57);
        let mut chain = vec![random_spd(&mut rng, 1e-6)];
        for _ in 0..200 {
            let prev = chain.last().unwrap();
            let bump = random_spd(&mut rng, 1e-9);
            chain.push(cov(prev.matrix() + bump.matrix()));
        }
        // Σ' = Σ + PSD has det Σ' ≥ det Σ
        assert!(verify_monotonicity(&chain).pass);
    }

    #[test]
    fn corrupted_chain_is_flagged_at_the_right_index() {
        let mut rng = ChaCha12Rng::seed_from_u64(58);
        let mut chain = vec![random_spd(&mut rng, 1e-6)];
        for _ in 0..30 {
            let prev = chain.last().unwrap();
            let bump = random_spd(&mut rng, 1e-9);
            chain.push(cov(prev.matrix() + bump.matrix()));
        }
        let corrupted = cov(chain[15].matrix() * 0.25);
        chain[16] = corrupted;
        let report = verify_monotonicity(&chain);
        assert!(!report.pass);
        assert_eq!(report.violations[0].index, 16);
        assert!(report.violations[0].log_det_drop > 0.0);
    }

    #[test]
    fn report_serializes_to_json() {
        let sigma = cov(Matrix9::identity());
        let report = verify_monotonicity(&[sigma, sigma]);
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("\"schema_version\":1"));
        let back: MonotonicityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
