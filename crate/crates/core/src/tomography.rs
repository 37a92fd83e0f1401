//! Spin Wigner values from projection probabilities and state recovery from a sampled net.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::kernel::EulerPoint;
use crate::foundation::operator::{c, check_square, hermiticity_defect, Operator, C64};
use crate::foundation::special::{lm_index, spherical_harmonics_upto};
use crate::hw::Shots;
use crate::su2::SpinSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub setting: EulerPoint,
    /// p_m for m = j, j-1, ..., -j.
    pub probabilities: Vec<f64>,
    pub shots: Option<u64>,
}

/// W(theta, phi) = sum_m p_m [Pi]_mm.
pub fn wigner_from_projections(rec: &ProjectionRecord, parity_diag: &[f64]) -> Result<f64> {
    if rec.probabilities.len() != parity_diag.len() {
        return Err(PsError::Dimension { expected: parity_diag.len(), got: rec.probabilities.len() });
    }
    let total: f64 = rec.probabilities.iter().sum();
    let tol = match rec.shots {
        None => 1e-9,
        Some(n) => 1e-9 + 1.0 / n.max(1) as f64,
    };
    if (total - 1.0).abs() > tol || rec.probabilities.iter().any(|p| *p < -1e-12) {
        return Err(PsError::Normalization(format!("projection probabilities sum to {total}")));
    }
    Ok(rec.probabilities.iter().zip(parity_diag).map(|(p, d)| p * d).sum())
}

/// p_m = <m| U^dag rho U |m> for the rotation to `setting`; shot mode draws a seeded multinomial.
pub fn simulate_projections(rho: &Operator, setting: EulerPoint, shots: Shots) -> Result<ProjectionRecord> {
    let d = check_square(rho)?;
    let sys = SpinSystem::from_two_j(d as u32 - 1);
    let u = sys.euler_rotation(EulerPoint::sphere(setting.theta, setting.phi));
    let rotated = u.adjoint() * rho * &u;
    let exact: Vec<f64> = (0..d).map(|m| rotated[(m, m)].re.max(0.0)).collect();
    let norm: f64 = exact.iter().sum();
    let exact: Vec<f64> = exact.iter().map(|p| p / norm).collect();
    match shots {
        Shots::Exact => Ok(ProjectionRecord { setting, probabilities: exact, shots: None }),
        Shots::Sampled { shots, seed } => {
            let seed = seed.ok_or(PsError::SeedRequired)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // multinomial as a chain of conditional binomials
            let mut left = shots;
            let mut rest = 1.0;
            let mut counts = Vec::with_capacity(d);
            for (i, p) in exact.iter().enumerate() {
                let k = if i == d - 1 || left == 0 {
                    left
                } else {
                    let q = (p / rest).clamp(0.0, 1.0);
                    Binomial::new(left, q).map_err(|e| PsError::Domain(e.to_string()))?.sample(&mut rng)
                };
                counts.push(k);
                left -= k;
                rest -= p;
            }
            let probabilities = counts.iter().map(|k| *k as f64 / shots as f64).collect();
            Ok(ProjectionRecord { setting, probabilities, shots: Some(shots) })
        }
    }
}

/// The (4j+2)^2 net: theta_a = a pi/(4j+2), a = 1..=4j+2; phi_b = 2 b pi/(4j+2), b = 0..4j+2.
pub fn sample_net(two_j: u32) -> Vec<(f64, f64)> {
    let k = 2 * two_j as usize + 2;
    let mut out = Vec::with_capacity(k * k);
    for a in 1..=k {
        for b in 0..k {
            out.push((a as f64 * PI / k as f64, 2.0 * b as f64 * PI / k as f64));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoefficients {
    pub two_j: u32,
    /// c_lm in the flat (l, m) layout, l <= 2j.
    pub coeffs: Vec<C64>,
}

impl HarmonicCoefficients {
    pub fn get(&self, l: usize, m: i64) -> C64 {
        self.coeffs[lm_index(l, m)]
    }

    /// max |c_{l,-m} - (-1)^m conj(c_lm)|.
    pub fn reality_defect(&self) -> f64 {
        let lmax = self.two_j as usize;
        let mut r: f64 = 0.0;
        for l in 0..=lmax {
            for m in 0..=(l as i64) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                r = r.max((self.get(l, -m) - self.get(l, m).conj() * sign).norm());
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub two_j: u32,
    pub s: f64,
    pub points: usize,
    pub condition_number: f64,
    /// Root-mean-square misfit of the harmonic fit at the samples.
    pub fit_residual: f64,
    pub hermiticity_residual: f64,
    /// |Tr rho - 1| before renormalization.
    pub trace_renormalization: f64,
    pub coefficients: HarmonicCoefficients,
}

const REGULARIZATION: f64 = 1e-12;

/// Least-squares harmonic fit of the samples, then the multipole inverse for ordering s.
/// The result is Hermitized and renormalized to unit trace.
pub fn reconstruct_from_grid(two_j: u32, samples: &[(f64, f64, f64)], s: f64) -> Result<(ReconstructionReport, Operator)> {
    crate::su2::check_s(s)?;
    let lmax = two_j as usize;
    let k = (lmax + 1) * (lmax + 1);
    if samples.len() < k {
        return Err(PsError::RankDeficient(f64::INFINITY));
    }
    let rows: Vec<Vec<C64>> = samples.iter().map(|(t, p, _)| spherical_harmonics_upto(lmax, *t, *p)).collect();
    let a = Operator::from_fn(samples.len(), k, |i, j| rows[i][j]);
    let y = nalgebra::DVector::from_iterator(samples.len(), samples.iter().map(|(_, _, v)| c(*v, 0.0)));
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = smax / smin;
    if !cond.is_finite() || cond > 1e10 {
        return Err(PsError::RankDeficient(cond));
    }
    let ah = a.adjoint();
    let normal = &ah * &a + Operator::identity(k, k) * c(REGULARIZATION, 0.0);
    let rhs = &ah * &y;
    let coeffs = normal.lu().solve(&rhs).ok_or(PsError::RankDeficient(cond))?;
    let fitted = &a * &coeffs;
    let fit_residual = ((fitted - &y).norm_squared() / samples.len() as f64).sqrt();
    let coefficients = HarmonicCoefficients { two_j, coeffs: coeffs.iter().cloned().collect() };
    let sys = SpinSystem::from_two_j(two_j);
    let raw = crate::su2::operator_from_harmonics(&sys, &coefficients.coeffs, s)?;
    let hermiticity_residual = hermiticity_defect(&raw);
    let herm = (&raw + raw.adjoint()) * c(0.5, 0.0);
    let tr = herm.trace().re;
    let rho = &herm / c(tr, 0.0);
    let report = ReconstructionReport {
        two_j,
        s,
        points: samples.len(),
        condition_number: cond,
        fit_residual,
        hermiticity_residual,
        trace_renormalization: (tr - 1.0).abs(),
        coefficients,
    };
    Ok((report, rho))
}

/// Samples F^{(s)} of rho on the net.
pub fn sample_on_net(rho: &Operator, s: f64) -> Result<Vec<(f64, f64, f64)>> {
    let d = check_square(rho)?;
    let sys = SpinSystem::from_two_j(d as u32 - 1);
    let diag = sys.parity_diagonal(s)?;
    Ok(sample_net(sys.two_j)
        .into_iter()
        .map(|(t, p)| (t, p, sys.value_with_diag(rho, &diag, t, p).re))
        .collect())
}
