//! Figures of merit computed from phase-space functions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::kernel::{Domain, Family, SampledFunction};
use crate::foundation::operator::{check_dim, trace_norm, trace_product, Operator};
use crate::foundation::quadrature::{integrate_adaptive, SphereGrid};
use crate::foundation::special::{lm_index, spherical_harmonics_upto};
use crate::wootters::{DiscreteFunction, DiscreteKind};

/// 2j of a spin spec.
fn spin_two_j(f: &SampledFunction) -> Option<u32> {
    match f.spec.family {
        Family::Su2 { two_j } => Some(two_j),
        _ => None,
    }
}

fn require_degree(f: &SampledFunction, need: usize) -> Result<()> {
    if let Domain::Sphere(g) = &f.domain {
        if g.exact_degree < need {
            return Err(PsError::GridDegree { need, have: g.exact_degree });
        }
    }
    Ok(())
}

/// Every factor ordering of a spec, for pairing checks.
fn orderings(spec: &crate::KernelSpec) -> Vec<f64> {
    match &spec.family {
        Family::Composite { factors } => factors.iter().flat_map(orderings).collect(),
        _ => vec![spec.s],
    }
}

/// int F G dOmega on a shared domain.
fn overlap(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    if f.domain != g.domain || !f.spec.same_family(&g.spec) {
        return Err(PsError::Domain("functions must share family and domain".into()));
    }
    let w = f.weights()?;
    Ok(f.values.iter().zip(&g.values).zip(&w).map(|((a, b), w)| (a * b).re * w).sum())
}

/// int W^2 dOmega for an s = 0 function.
pub fn purity(f: &SampledFunction) -> Result<f64> {
    if orderings(&f.spec).iter().any(|s| *s != 0.0) {
        return Err(PsError::Pairing("purity needs the self-dual s = 0 function".into()));
    }
    if let Some(tj) = spin_two_j(f) {
        require_degree(f, 2 * tj as usize)?;
    }
    overlap(f, f)
}

pub fn purity_of(rho: &Operator) -> f64 {
    trace_product(rho, rho).re
}

/// int F~_1 F_2 dOmega with F~_1 at -s and F_2 at s; equals Tr[rho_1 rho_2].
pub fn fidelity_ps(dual_1: &SampledFunction, f_2: &SampledFunction) -> Result<f64> {
    let a = orderings(&dual_1.spec);
    let b = orderings(&f_2.spec);
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| (x + y).abs() > 1e-15) {
        return Err(PsError::Pairing(format!("orderings {a:?} and {b:?} are not an (s, -s) pair")));
    }
    if let Some(tj) = spin_two_j(f_2) {
        require_degree(f_2, 2 * tj as usize)?;
    }
    overlap(dual_1, f_2)
}

/// Values scaled so that sum_k F(k)^2 = Tr rho^2 under the self-dual pairing.
pub fn normalized_discrete(f: &DiscreteFunction) -> Vec<f64> {
    let scale = 0.5f64.powf(f.n_qubits as f64 / 2.0);
    f.values.iter().map(|v| v.re * scale).collect()
}

/// sum_k F_2(k) F~_1(k) with both functions normalized; F~_1 must have unit norm.
pub fn fidelity_discrete(f_2: &DiscreteFunction, dual_1: &DiscreteFunction) -> Result<f64> {
    if f_2.n_qubits != dual_1.n_qubits {
        return Err(PsError::Dimension { expected: dual_1.n_qubits, got: f_2.n_qubits });
    }
    match (f_2.kind, dual_1.kind) {
        (DiscreteKind::Weyl, DiscreteKind::Weyl) => {}
        (DiscreteKind::Wigner { s: a }, DiscreteKind::Wigner { s: b }) if (a + b).abs() < 1e-15 => {}
        _ => return Err(PsError::Pairing("discrete fidelity needs Weyl/Weyl or an (s, -s) Wigner pair".into())),
    }
    let t = normalized_discrete(dual_1);
    let norm: f64 = t.iter().map(|v| v * v).sum();
    let norm_check = match dual_1.kind {
        DiscreteKind::Wigner { s } if s != 0.0 => {
            // the dual of a non-self-dual function has its own normalization; check via the pairing
            let own = crate::wootters::reverse_transform(dual_1)?;
            let partner = crate::wootters::wigner_multi(&own, dual_1.n_qubits, -s)?;
            normalized_discrete(&partner).iter().zip(&t).map(|(a, b)| a * b).sum()
        }
        _ => norm,
    };
    if (norm_check - 1.0).abs() > 1e-8 {
        return Err(PsError::Normalization(format!("sum of squared target values is {norm_check:.3e}, expected 1")));
    }
    Ok(normalized_discrete(f_2).iter().zip(&t).map(|(a, b)| a * b).sum())
}

/// Result of a direct fidelity estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRun {
    pub target: String,
    pub n_qubits: usize,
    pub samples: usize,
    pub seed: u64,
    pub estimate: f64,
    pub standard_error: f64,
    /// Distinct values of |F~_1(k)| among sampled indices.
    pub sampled_weights: Vec<f64>,
}

/// chi(k) = Tr[rho P_k] / sqrt(d) over all Pauli strings, index as in the Weyl lattice.
pub fn pauli_characteristic(rho: &Operator, n: usize) -> Result<Vec<f64>> {
    let d = 1usize << n;
    check_dim(rho, d)?;
    let norm = (d as f64).sqrt();
    Ok((0..1usize << (2 * n))
        .into_par_iter()
        .map(|k| trace_product(rho, &crate::wootters::multi_displacement(n, k)).re / norm)
        .collect())
}

const DFE_CHUNK: usize = 4096;

/// Samples index k with probability chi_1(k)^2 and averages X = chi_2(k) / chi_1(k).
pub fn dfe_sample(target_name: &str, target: &Operator, actual: &Operator, samples: usize, seed: Option<u64>) -> Result<EstimationRun> {
    let seed = seed.ok_or(PsError::SeedRequired)?;
    if samples < 2 {
        return Err(PsError::Domain("need at least two samples".into()));
    }
    let d = target.nrows();
    if !d.is_power_of_two() || d < 2 || d > 256 {
        return Err(PsError::Domain(format!("target dimension {d} is not 2^n with 1 <= n <= 8")));
    }
    let n = d.trailing_zeros() as usize;
    check_dim(actual, d)?;
    let pur = purity_of(target);
    if (pur - 1.0).abs() > 1e-8 {
        return Err(PsError::Normalization(format!("target must be pure, Tr rho^2 = {pur:.6}")));
    }
    let chi1 = pauli_characteristic(target, n)?;
    let chi2 = pauli_characteristic(actual, n)?;
    let mut cum = Vec::with_capacity(chi1.len());
    let mut acc = 0.0;
    for v in &chi1 {
        acc += v * v;
        cum.push(acc);
    }
    let chunks = samples.div_ceil(DFE_CHUNK);
    let parts: Vec<(f64, f64, Vec<usize>)> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ch as u64);
            let count = DFE_CHUNK.min(samples - ch * DFE_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            let mut seen = Vec::new();
            for _ in 0..count {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
                let x = chi2[k] / chi1[k];
                s1 += x;
                s2 += x * x;
                seen.push(k);
            }
            seen.sort_unstable();
            seen.dedup();
            (s1, s2, seen)
        })
        .collect();
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut seen = Vec::new();
    for (a, b, k) in parts {
        s1 += a;
        s2 += b;
        seen.extend(k);
    }
    let m = samples as f64;
    let mean = s1 / m;
    let var = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
    seen.sort_unstable();
    seen.dedup();
    let mut weights: Vec<f64> = seen.iter().map(|&k| chi1[k].abs()).collect();
    weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
    weights.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(EstimationRun {
        target: target_name.into(),
        n_qubits: n,
        samples,
        seed,
        estimate: mean,
        standard_error: (var / m).sqrt(),
        sampled_weights: weights,
    })
}

/// sqrt(int W_{rho1-rho2}^2 dOmega / 2) for a qubit s = 0 function of rho_1 - rho_2.
/// Under the measure of total 2 this equals (1/2)||rho_1 - rho_2||_1.
pub fn trace_distance_qubit(w_diff: &SampledFunction) -> Result<f64> {
    match w_diff.spec.family {
        Family::Su2 { two_j: 1 } | Family::Wootters => {}
        _ => return Err(PsError::Dimension { expected: 2, got: w_diff.spec.dim() }),
    }
    if w_diff.spec.s != 0.0 {
        return Err(PsError::Pairing("trace distance uses the s = 0 function".into()));
    }
    require_degree(w_diff, 2)?;
    Ok((overlap(w_diff, w_diff)?.max(0.0) / 2.0).sqrt())
}

/// (1/2)||rho_1 - rho_2||_1 from the singular values.
pub fn trace_distance(rho1: &Operator, rho2: &Operator) -> Result<f64> {
    check_dim(rho2, rho1.nrows())?;
    Ok(0.5 * trace_norm(&(rho1 - rho2)))
}

/// Band-limited interpolant of a spin function sampled on an exact grid.
struct Expansion {
    lmax: usize,
    coeffs: Vec<crate::C64>,
    total: f64,
}

impl Expansion {
    fn from_sphere(f: &SampledFunction, g: &SphereGrid, two_j: u32) -> Result<Expansion> {
        let lmax = two_j as usize;
        if g.exact_degree < 2 * lmax {
            return Err(PsError::GridDegree { need: 2 * lmax, have: g.exact_degree });
        }
        let unit = 4.0 * PI / g.total;
        let mut coeffs = vec![crate::C64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
        for (n, v) in g.nodes.iter().zip(&f.values) {
            let y = spherical_harmonics_upto(lmax, n.theta, n.phi);
            for (c, yl) in coeffs.iter_mut().zip(&y) {
                *c += v * yl.conj() * (n.weight * unit);
            }
        }
        Ok(Expansion { lmax, coeffs, total: two_j as f64 + 1.0 })
    }

    /// Fourier coefficients a_m(theta), m = -lmax..=lmax, of F(theta, .) = sum a_m e^{i m phi}.
    fn fourier(&self, theta: f64) -> Vec<crate::C64> {
        let pl = crate::foundation::special::normalized_legendre(self.lmax, theta);
        let l = self.lmax as i64;
        let mut a = vec![crate::C64::new(0.0, 0.0); (2 * l + 1) as usize];
        for deg in 0..=self.lmax {
            for m in -(deg as i64)..=(deg as i64) {
                let p = pl[lm_index(deg, m.abs())];
                // Y_{l,-m} = (-1)^m conj(Y_lm)
                let y = if m < 0 && m % 2 != 0 { -p } else { p };
                a[(m + l) as usize] += self.coeffs[lm_index(deg, m)] * y;
            }
        }
        a
    }

    fn eval_fourier(a: &[crate::C64], phi: f64) -> f64 {
        let l = (a.len() / 2) as i64;
        a.iter().enumerate().map(|(i, c)| (c * crate::C64::from_polar(1.0, (i as i64 - l) as f64 * phi)).re).sum()
    }

    /// int_a^b F(theta, phi) dphi, exact for the trigonometric polynomial.
    fn fourier_integral(a: &[crate::C64], lo: f64, hi: f64) -> f64 {
        let l = (a.len() / 2) as i64;
        let mut acc = 0.0;
        for (i, c) in a.iter().enumerate() {
            let m = i as i64 - l;
            if m == 0 {
                acc += c.re * (hi - lo);
            } else {
                let mf = m as f64;
                let diff = crate::C64::from_polar(1.0, mf * hi) - crate::C64::from_polar(1.0, mf * lo);
                acc += (c * diff / crate::C64::new(0.0, mf)).re;
            }
        }
        acc
    }

    /// int_0^{2 pi} |F(theta, phi)| dphi, splitting at the sign changes.
    fn abs_ring(&self, theta: f64) -> f64 {
        let a = self.fourier(theta);
        let k = 64 * (2 * self.lmax + 1);
        let h = 2.0 * PI / k as f64;
        let f = |x: f64| Self::eval_fourier(&a, x);
        let mut cuts = vec![0.0];
        let mut prev = f(0.0);
        for i in 1..=k {
            let x = i as f64 * h;
            let v = f(x);
            if prev != 0.0 && v != 0.0 && (prev < 0.0) != (v < 0.0) {
                let (mut lo, mut hi, mut flo) = (x - h, x, prev);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
            if v != 0.0 {
                prev = v;
            }
        }
        cuts.push(2.0 * PI);
        cuts.windows(2).map(|w| Self::fourier_integral(&a, w[0], w[1]).abs()).sum()
    }

    /// int_0^{2 pi} g(F(theta, phi)) dphi by the periodic trapezoid rule, refined until stable.
    fn ring<G: Fn(f64) -> f64>(&self, theta: f64, g: &G) -> f64 {
        let a = self.fourier(theta);
        let mut k = 16 * (2 * self.lmax + 1);
        let trap = |k: usize| {
            let h = 2.0 * PI / k as f64;
            (0..k).map(|i| g(Self::eval_fourier(&a, i as f64 * h))).sum::<f64>() * h
        };
        let mut last = trap(k);
        while k < 1 << 16 {
            k *= 2;
            let next = trap(k);
            if (next - last).abs() <= 1e-14 * next.abs().max(1.0) {
                return next;
            }
            last = next;
        }
        last
    }

    fn integrate_rings<R: Fn(f64) -> f64>(&self, ring: R, tol: f64) -> f64 {
        integrate_adaptive(|t| ring(t) * t.sin(), 0.0, PI, tol) * self.total / (4.0 * PI)
    }
}

/// Direct weighted sum of g(F); warns when the sampled function changes sign.
fn weighted_sum<G: Fn(f64) -> f64>(f: &SampledFunction, g: G, warn: &mut Vec<String>) -> Result<f64> {
    let w = f.weights()?;
    let vals = f.real_values();
    if vals.iter().any(|v| *v < 0.0) && vals.iter().any(|v| *v > 0.0) && !matches!(f.domain, Domain::Lattice { .. }) {
        warn.push("function changes sign between nodes; the node sum does not resolve the boundary".into());
    }
    Ok(vals.iter().zip(&w).map(|(v, w)| g(*v) * w).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarResult {
    pub value: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// V = (int |W| dOmega - 1) / 2.
pub fn negativity_volume(f: &SampledFunction) -> Result<ScalarResult> {
    if f.spec.s != 0.0 || orderings(&f.spec).iter().any(|s| *s != 0.0) {
        return Err(PsError::Pairing("negativity volume is defined for the s = 0 function".into()));
    }
    let mut warnings = f.warnings.clone();
    let total = match (&f.domain, spin_two_j(f)) {
        (Domain::Sphere(g), Some(tj)) => {
            let e = Expansion::from_sphere(f, g, tj)?;
            e.integrate_rings(|t| e.abs_ring(t), 1e-12)
        },
        _ => weighted_sum(f, f64::abs, &mut warnings)?,
    };
    let v = 0.5 * (total - 1.0);
    if v < -1e-10 {
        warnings.push(format!("negative volume {v:.3e} below zero; the function may not have unit trace"));
    }
    Ok(ScalarResult { value: v, warnings })
}

/// -int Q ln Q dOmega with 0 ln 0 = 0.
pub fn wehrl_entropy(q: &SampledFunction) -> Result<ScalarResult> {
    if q.spec.s != -1.0 || orderings(&q.spec).iter().any(|s| *s != -1.0) {
        return Err(PsError::Pairing("Wehrl entropy is defined for the Q function (s = -1)".into()));
    }
    if let Some(min) = q.real_values().into_iter().reduce(f64::min) {
        if min < -1e-10 {
            return Err(PsError::Domain(format!("Q function takes the negative value {min:.3e}")));
        }
    }
    let h = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    let mut warnings = q.warnings.clone();
    let value = match (&q.domain, spin_two_j(q)) {
        (Domain::Sphere(g), Some(tj)) => {
            let e = Expansion::from_sphere(q, g, tj)?;
            e.integrate_rings(|t| e.ring(t, &h), 1e-12)
        },
        _ => weighted_sum(q, h, &mut warnings)?,
    };
    Ok(ScalarResult { value, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JAxis {
    Jx,
    Jy,
    Jz,
}

/// <J_i> = (2j+1) sqrt(j(j+1)) / (4 pi) int f_i W sin t dt dp with f along the kernel axis.
pub fn expectation_from_moments(f: &SampledFunction, which: JAxis) -> Result<f64> {
    let Some(two_j) = spin_two_j(f) else {
        return Err(PsError::Family("centre-of-mass moments need a spin function".into()));
    };
    if f.spec.s != 0.0 {
        return Err(PsError::Pairing("centre-of-mass moments use the s = 0 function".into()));
    }
    let Domain::Sphere(g) = &f.domain else {
        return Err(PsError::Domain("centre-of-mass moments need a sphere grid".into()));
    };
    require_degree(f, two_j as usize + 1)?;
    let j = two_j as f64 / 2.0;
    let unit = 4.0 * PI / g.total;
    let integral: f64 = g
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(n, v)| {
            let axis = crate::su2::kernel_direction(n.theta, n.phi);
            let fi = match which {
                JAxis::Jx => axis[0],
                JAxis::Jy => axis[1],
                JAxis::Jz => axis[2],
            };
            fi * v.re * n.weight * unit
        })
        .sum();
    Ok((2.0 * j + 1.0) * (j * (j + 1.0)).sqrt() / (4.0 * PI) * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::kernel::KernelSpec;
    use crate::foundation::operator::{random_density, random_pure};
    use crate::foundation::quadrature::sphere_quadrature;
    use crate::foundation::transforms::evaluate_operator;
    use crate::states;
    use crate::su2::SpinSystem;

    fn spin_fn(rho: &Operator, two_j: u32, s: f64, degree: usize) -> SampledFunction {
        let sys = SpinSystem::from_two_j(two_j);
        crate::su2::evaluate(&sys, rho, s, &sphere_quadrature(degree)).unwrap()
    }

    #[test]
    fn purity_and_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((purity(&spin_fn(&states::spin_up(1), 1, 0.0, 2)).unwrap() - 1.0).abs() < 1e-12);
        assert!((purity(&spin_fn(&states::maximally_mixed(2), 1, 0.0, 2)).unwrap() - 0.5).abs() < 1e-12);
        for two_j in 1..=4u32 {
            let d = two_j as usize + 1;
            let a = random_density(d, &mut rng);
            let b = random_density(d, &mut rng);
            let wa = spin_fn(&a, two_j, 0.0, 2 * d);
            assert!((purity(&wa).unwrap() - purity_of(&a)).abs() < 1e-9);
            for s in [-1.0, 0.0, 0.5] {
                let fa = spin_fn(&a, two_j, -s, 2 * d);
                let fb = spin_fn(&b, two_j, s, 2 * d);
                assert!((fidelity_ps(&fa, &fb).unwrap() - trace_product(&a, &b).re).abs() < 1e-9);
            }
            assert!((fidelity_ps(&wa, &wa).unwrap() - purity(&wa).unwrap()).abs() < 1e-12);
        }
        let up = spin_fn(&states::spin_up(1), 1, 0.0, 2);
        let down = spin_fn(&states::spin_down(1), 1, 0.0, 2);
        let right = spin_fn(&states::pauli_eigenstate('x', true).unwrap(), 1, 0.0, 2);
        assert!(fidelity_ps(&up, &down).unwrap().abs() < 1e-12);
        assert!((fidelity_ps(&up, &right).unwrap() - 0.5).abs() < 1e-12);
        let q = spin_fn(&states::spin_up(1), 1, -1.0, 2);
        assert!(matches!(fidelity_ps(&q, &q), Err(PsError::Pairing(_))));
        assert!(matches!(purity(&spin_fn(&states::spin_up(4), 4, 0.0, 4)), Err(PsError::GridDegree { .. })));
    }

    #[test]
    fn discrete_fidelity() {
        let up = states::spin_up(1);
        let wu = crate::wootters::wigner(&up, 0.0).unwrap();
        assert!((fidelity_discrete(&wu, &wu).unwrap() - 1.0).abs() < 1e-12);
        let wd = crate::wootters::wigner(&states::spin_down(1), 0.0).unwrap();
        assert!(fidelity_discrete(&wd, &wu).unwrap().abs() < 1e-12);
        let bell = states::bell(states::BellKind::PhiPlus);
        let wb = crate::wootters::wigner_multi(&bell, 2, 0.0).unwrap();
        assert!((fidelity_discrete(&wb, &wb).unwrap() - 1.0).abs() < 1e-12);
        let x = crate::wootters::discrete_weyl(&up).unwrap();
        assert!((fidelity_discrete(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let mixed = crate::wootters::wigner(&states::maximally_mixed(2), 0.0).unwrap();
        assert!(matches!(fidelity_discrete(&wu, &mixed), Err(PsError::Normalization(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_pure(2, &mut rng);
        let r = random_density(2, &mut rng);
        let ft = crate::wootters::wigner(&t, -1.0).unwrap();
        let fr = crate::wootters::wigner(&r, 1.0).unwrap();
        assert!((fidelity_discrete(&fr, &ft).unwrap() - trace_product(&t, &r).re).abs() < 1e-12);
    }

    #[test]
    fn dfe_examples() {
        let bell = states::bell(states::BellKind::PhiPlus);
        let run = dfe_sample("bell", &bell, &bell, 100_000, Some(3)).unwrap();
        assert!((run.estimate - 1.0).abs() <= 3.0 * run.standard_error + 1e-12);
        assert_eq!(run.sampled_weights.len(), 1);
        assert!((run.sampled_weights[0] - 0.5).abs() < 1e-15);
        let mixed = states::maximally_mixed(4);
        let run = dfe_sample("bell", &bell, &mixed, 100_000, Some(4)).unwrap();
        assert!((run.estimate - 0.25).abs() <= 3.0 * run.standard_error);
        assert_eq!(dfe_sample("bell", &bell, &bell, 10, None), Err(PsError::SeedRequired));
        let again = dfe_sample("bell", &bell, &mixed, 100_000, Some(4)).unwrap();
        assert_eq!(run, again);
    }

    #[test]
    fn trace_distances() {
        let up = states::spin_up(1);
        let down = states::spin_down(1);
        let spec = KernelSpec::su2(0.5, 0.0).unwrap();
        let dom = Domain::Sphere(sphere_quadrature(2));
        let w = evaluate_operator(&(&up - &down), &spec, &dom).unwrap();
        assert!((trace_distance_qubit(&w).unwrap() - 1.0).abs() < 1e-12);
        let z = evaluate_operator(&(&up - &up), &spec, &dom).unwrap();
        assert!(trace_distance_qubit(&z).unwrap().abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_density(2, &mut rng);
            let b = random_density(2, &mut rng);
            let w = evaluate_operator(&(&a - &b), &spec, &dom).unwrap();
            let lat = evaluate_operator(&(&a - &b), &KernelSpec::wootters(0.0).unwrap(), &Domain::Lattice { n_qubits: 1 }).unwrap();
            let oracle = trace_distance(&a, &b).unwrap();
            assert!((trace_distance_qubit(&w).unwrap() - oracle).abs() < 1e-9);
            assert!((trace_distance_qubit(&lat).unwrap() - oracle).abs() < 1e-9);
        }
        let big = spin_fn(&states::spin_up(2), 2, 0.0, 4);
        assert!(trace_distance_qubit(&big).is_err());
    }

    #[test]
    fn negativity() {
        let v = negativity_volume(&spin_fn(&states::spin_up(1), 1, 0.0, 2)).unwrap();
        assert!((v.value - (1.0 / 3f64.sqrt() - 0.5)).abs() < 1e-9, "{}", v.value);
        let m = negativity_volume(&spin_fn(&states::maximally_mixed(2), 1, 0.0, 2)).unwrap();
        assert!(m.value.abs() < 1e-12);
        let lat = evaluate_operator(&states::spin_up(1), &KernelSpec::wootters(0.0).unwrap(), &Domain::Lattice { n_qubits: 1 }).unwrap();
        assert!(negativity_volume(&lat).unwrap().value.abs() < 1e-15);
        // rotation invariance for spin 1
        let sys = SpinSystem::from_two_j(2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_pure(3, &mut rng);
        let u = sys.euler_rotation(crate::EulerPoint::new(0.4, 1.2, -0.3));
        let a = negativity_volume(&spin_fn(&rho, 2, 0.0, 4)).unwrap().value;
        let b = negativity_volume(&spin_fn(&(&u * &rho * u.adjoint()), 2, 0.0, 4)).unwrap().value;
        assert!((a - b).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn wehrl() {
        let q = spin_fn(&states::maximally_mixed(2), 1, -1.0, 2);
        assert!((wehrl_entropy(&q).unwrap().value - 2f64.ln()).abs() < 1e-10);
        let qu = spin_fn(&states::spin_up(1), 1, -1.0, 2);
        let su = wehrl_entropy(&qu).unwrap().value;
        assert!(su < 2f64.ln());
        // |up> is axially symmetric: 1D oracle in theta
        let oracle = integrate_adaptive(|t| {
            let v = (t / 2.0).cos().powi(2);
            if v > 0.0 { -v * v.ln() * t.sin() } else { 0.0 }
        }, 0.0, PI, 1e-14) * 2.0 * PI * 2.0 / (4.0 * PI);
        assert!((su - oracle).abs() < 1e-10);
        let sys = SpinSystem::from_two_j(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(4, &mut rng);
        let u = sys.euler_rotation(crate::EulerPoint::new(1.0, 0.7, 0.2));
        let a = wehrl_entropy(&spin_fn(&rho, 3, -1.0, 6)).unwrap().value;
        let b = wehrl_entropy(&spin_fn(&(&u * &rho * u.adjoint()), 3, -1.0, 6)).unwrap().value;
        assert!((a - b).abs() < 1e-9);
        let w = spin_fn(&states::spin_up(1), 1, 0.0, 2);
        assert!(wehrl_entropy(&w).is_err());
    }

    #[test]
    fn centre_of_mass() {
        let up = spin_fn(&states::spin_up(1), 1, 0.0, 2);
        assert!((expectation_from_moments(&up, JAxis::Jz).unwrap() - 0.5).abs() < 1e-12);
        assert!(expectation_from_moments(&up, JAxis::Jx).unwrap().abs() < 1e-12);
        let right = spin_fn(&states::pauli_eigenstate('x', true).unwrap(), 1, 0.0, 2);
        assert!((expectation_from_moments(&right, JAxis::Jx).unwrap() - 0.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for two_j in 1..=5u32 {
            let sys = SpinSystem::from_two_j(two_j);
            let rho = random_density(sys.dim(), &mut rng);
            let f = spin_fn(&rho, two_j, 0.0, two_j as usize + 1);
            let jz = crate::foundation::operator::diag_real(&(0..sys.dim()).map(|i| sys.m_of(i)).collect::<Vec<_>>());
            assert!((expectation_from_moments(&f, JAxis::Jz).unwrap() - trace_product(&rho, &jz).re).abs() < 1e-9);
        }
    }
}
