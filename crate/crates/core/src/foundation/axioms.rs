//! Numerical check of the five Stratonovich-Weyl conditions for a kernel family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{domain_weights, Domain, EulerPoint, Family, KernelSpec, LatticePoint, RectGrid};
use super::operator::{
    c, hermiticity_defect, identity, kron_all, max_abs, op_norm, random_hermitian, random_unitary, trace_product, Operator,
};
use super::quadrature::sphere_quadrature;
use crate::error::{PsError, Result};
use crate::su2::{direction_angles, kernel_direction, so3_matrix, SpinSystem};
use crate::sun::SunSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VerifyMode {
    /// Exact quadrature or moment calculus where available.
    Auto,
    /// Seeded Monte Carlo over coherent states (SU(N) only).
    MonteCarlo { samples: usize },
    /// Qubit kernel with the parity replaced by bare sigma_z.
    BareParity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub spec: KernelSpec,
    pub mode: String,
    pub trials: usize,
    pub seed: u64,
    /// Round trip A -> W_A -> A together with the superposition defect.
    pub linearity: f64,
    pub hermiticity: f64,
    pub standardization: f64,
    pub traciality: f64,
    pub covariance: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        [self.linearity, self.hermiticity, self.standardization, self.traciality, self.covariance]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn verify_stratonovich_weyl(spec: &KernelSpec, trials: usize, seed: u64) -> Result<AxiomReport> {
    verify_with_mode(spec, trials, seed, VerifyMode::Auto)
}

struct Residuals {
    linearity: f64,
    hermiticity: f64,
    standardization: f64,
    traciality: f64,
    covariance: f64,
}

pub fn verify_with_mode(spec: &KernelSpec, trials: usize, seed: u64, mode: VerifyMode) -> Result<AxiomReport> {
    let trials = trials.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut notes = Vec::new();
    let (label, tolerance, r) = match (mode, &spec.family) {
        (VerifyMode::BareParity, Family::Su2 { two_j: 1 }) => {
            notes.push("parity replaced by bare sigma_z".into());
            let frame = Frame::for_spec(spec, true)?;
            let ops = test_operators(2, trials, &mut rng);
            let (u, pairs) = covariance_pairs(spec, &mut rng, trials, true)?;
            ("bare_parity", 1e-9, frame.check(&ops, &u, &pairs))
        }
        (VerifyMode::BareParity, _) => {
            return Err(PsError::Family("bare-parity diagnostic is defined for the spin-1/2 kernel".into()))
        }
        (VerifyMode::MonteCarlo { samples }, Family::Sun { n }) => {
            ("monte_carlo", 1e-2, sun_monte_carlo(&SunSystem::new(*n)?, spec.s, trials, samples, &mut rng)?)
        }
        (VerifyMode::MonteCarlo { .. }, _) => {
            return Err(PsError::Family("Monte Carlo mode is implemented for SU(N)".into()))
        }
        (VerifyMode::Auto, Family::Sun { n }) => ("moments", 1e-9, sun_moments(&SunSystem::new(*n)?, spec.s, trials, &mut rng)?),
        (VerifyMode::Auto, Family::Hw { n_max }) => {
            notes.push(format!(
                "truncated Fock basis (n_max = {n_max}): operators restricted to the lowest {} levels, phase-space integrals by trapezoid rule",
                HW_BLOCK.min(n_max + 1)
            ));
            if spec.s != 0.0 {
                notes.push("s != 0 kernels have no bounded dual on the Fock basis; checks use s = 0".into());
            }
            ("truncated", 1e-6, hw_checks(*n_max, trials, &mut rng)?)
        }
        (VerifyMode::Auto, _) => {
            let frame = Frame::for_spec(spec, false)?;
            let ops = test_operators(spec.dim(), trials, &mut rng);
            let (u, pairs) = covariance_pairs(spec, &mut rng, trials, false)?;
            ("quadrature", 1e-9, frame.check(&ops, &u, &pairs))
        }
    };
    let mut report = AxiomReport {
        spec: spec.clone(),
        mode: label.into(),
        trials,
        seed,
        linearity: r.linearity,
        hermiticity: r.hermiticity,
        standardization: r.standardization,
        traciality: r.traciality,
        covariance: r.covariance,
        tolerance,
        passed: false,
        notes,
    };
    report.passed = report.max_residual() < tolerance && report.max_residual().is_finite();
    Ok(report)
}

/// Random Hermitian operators of unit Frobenius norm.
fn test_operators(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Operator> {
    (0..count)
        .map(|_| {
            let a = random_hermitian(dim, rng);
            let n = a.norm();
            a / c(n, 0.0)
        })
        .collect()
}

/// Kernels, dual kernels and measure weights on an exact node set.
struct Frame {
    dim: usize,
    kernels: Vec<Operator>,
    duals: Vec<Operator>,
    weights: Vec<f64>,
}

impl Frame {
    fn for_spec(spec: &KernelSpec, bare: bool) -> Result<Frame> {
        match &spec.family {
            Family::Su2 { two_j } => {
                let sys = SpinSystem::from_two_j(*two_j);
                // W_A Pi^{(-s)} has degree 4j
                let grid = sphere_quadrature(2 * *two_j as usize);
                let weights = domain_weights(spec, &Domain::Sphere(grid.clone()))?;
                let (d1, d2) = if bare {
                    (vec![1.0, -1.0], vec![1.0, -1.0])
                } else {
                    (sys.parity_diagonal(spec.s)?, sys.parity_diagonal(-spec.s)?)
                };
                let pts: Vec<EulerPoint> = grid.nodes.iter().map(|n| EulerPoint::sphere(n.theta, n.phi)).collect();
                Ok(Frame {
                    dim: sys.dim(),
                    kernels: pts.iter().map(|p| sys.kernel_from_diag(&d1, *p)).collect(),
                    duals: pts.iter().map(|p| sys.kernel_from_diag(&d2, *p)).collect(),
                    weights,
                })
            }
            Family::Wootters => {
                let pts = LatticePoint::all();
                Ok(Frame {
                    dim: 2,
                    kernels: pts.iter().map(|p| crate::wootters::phase_point_operator(*p, spec.s)).collect::<Result<_>>()?,
                    duals: pts.iter().map(|p| crate::wootters::phase_point_operator(*p, -spec.s)).collect::<Result<_>>()?,
                    weights: vec![0.5; 4],
                })
            }
            Family::Composite { factors } => {
                let frames = factors.iter().map(|f| Frame::for_spec(f, false)).collect::<Result<Vec<_>>>()?;
                let total: usize = frames.iter().map(|f| f.weights.len()).product();
                if total > 200_000 {
                    return Err(PsError::Domain(format!("composite node set of {total} points is too large")));
                }
                let mut out = Frame { dim: 1, kernels: vec![identity(1)], duals: vec![identity(1)], weights: vec![1.0] };
                for f in frames {
                    let mut next = Frame { dim: out.dim * f.dim, kernels: vec![], duals: vec![], weights: vec![] };
                    for i in 0..out.weights.len() {
                        for k in 0..f.weights.len() {
                            next.kernels.push(kron_all(&[out.kernels[i].clone(), f.kernels[k].clone()]));
                            next.duals.push(kron_all(&[out.duals[i].clone(), f.duals[k].clone()]));
                            next.weights.push(out.weights[i] * f.weights[k]);
                        }
                    }
                    out = next;
                }
                Ok(out)
            }
            _ => Err(PsError::Family("no exact node set for this family".into())),
        }
    }

    fn values(&self, a: &Operator, dual: bool) -> Vec<crate::C64> {
        let ks = if dual { &self.duals } else { &self.kernels };
        ks.par_iter().map(|k| trace_product(a, k)).collect()
    }

    fn reconstruct(&self, w: &[crate::C64]) -> Operator {
        let mut acc = Operator::zeros(self.dim, self.dim);
        for ((v, d), wt) in w.iter().zip(&self.duals).zip(&self.weights) {
            acc += d * (v * *wt);
        }
        acc
    }

    fn check(&self, ops: &[Operator], u: &Operator, pairs: &[(Operator, Operator)]) -> Residuals {
        let mut lin: f64 = 0.0;
        let mut herm: f64 = self.kernels.iter().chain(&self.duals).map(hermiticity_defect).fold(0.0, f64::max);
        let mut trac: f64 = 0.0;
        let mut integral = Operator::zeros(self.dim, self.dim);
        for (k, w) in self.kernels.iter().zip(&self.weights) {
            integral += k * c(*w, 0.0);
        }
        let standardization = op_norm(&(integral - identity(self.dim)));
        let fs: Vec<Vec<crate::C64>> = ops.iter().map(|a| self.values(a, false)).collect();
        for (a, f) in ops.iter().zip(&fs) {
            lin = lin.max(op_norm(&(self.reconstruct(f) - a)));
            herm = herm.max(f.iter().map(|v| v.im.abs()).fold(0.0, f64::max));
        }
        // superposition: W_{A + 2B} = W_A + 2 W_B
        let combo = &ops[0] + &ops[1] * c(2.0, 0.0);
        let fc = self.values(&combo, false);
        for (i, v) in fc.iter().enumerate() {
            lin = lin.max((v - fs[0][i] - fs[1][i] * 2.0).norm());
        }
        for w in ops.windows(2) {
            let fa = self.values(&w[0], false);
            let fb = self.values(&w[1], true);
            let ov: crate::C64 = fa.iter().zip(&fb).zip(&self.weights).map(|((x, y), wt)| x * y * *wt).sum();
            trac = trac.max((ov - trace_product(&w[0], &w[1])).norm());
        }
        Residuals { linearity: lin, hermiticity: herm, standardization, traciality: trac, covariance: covariance_residual(u, pairs, ops) }
    }
}

/// max over pairs (Pi(Omega), Pi(g^{-1} Omega)) of the kernel defect and of
/// |W_{U A U^dag}(Omega) - W_A(g^{-1} Omega)|.
fn covariance_residual(u: &Operator, pairs: &[(Operator, Operator)], ops: &[Operator]) -> f64 {
    let mut r: f64 = 0.0;
    let ud = u.adjoint();
    for (k, pulled) in pairs {
        r = r.max(max_abs(&(&ud * k * u - pulled)));
        for a in ops {
            let moved = u * a * &ud;
            r = r.max((trace_product(&moved, k) - trace_product(a, pulled)).norm());
        }
    }
    r
}

fn random_sphere_point(rng: &mut ChaCha8Rng) -> EulerPoint {
    let z: f64 = rng.random_range(-1.0..1.0);
    EulerPoint::sphere(z.acos(), rng.random_range(0.0..std::f64::consts::TAU))
}

/// A random group element U and kernel pairs (Pi(Omega), Pi(g^{-1} Omega)).
fn covariance_pairs(spec: &KernelSpec, rng: &mut ChaCha8Rng, count: usize, bare: bool) -> Result<(Operator, Vec<(Operator, Operator)>)> {
    match &spec.family {
        Family::Su2 { two_j } => {
            let sys = SpinSystem::from_two_j(*two_j);
            let tau = std::f64::consts::TAU;
            let g = EulerPoint::new(rng.random_range(0.0..tau), rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.0..tau));
            let u = sys.euler_rotation(g);
            let r = so3_matrix(g);
            let diag = if bare { vec![1.0, -1.0] } else { sys.parity_diagonal(spec.s)? };
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..count {
                let p = random_sphere_point(rng);
                let n = kernel_direction(p.theta, p.phi);
                // R^T n
                let back = [0, 1, 2].map(|b| (0..3).map(|a| r[a][b] * n[a]).sum::<f64>());
                let (t, f) = direction_angles(back);
                pairs.push((sys.kernel_from_diag(&diag, p), sys.kernel_from_diag(&diag, EulerPoint::sphere(t, f))));
            }
            Ok((u, pairs))
        }
        Family::Wootters => {
            let q = LatticePoint::new(rng.random_range(0..2), rng.random_range(0..2));
            let u = crate::wootters::discrete_displacement(q);
            let all = LatticePoint::all()
                .iter()
                .map(|p| crate::wootters::phase_point_operator(*p, spec.s))
                .collect::<Result<Vec<_>>>()?;
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..count {
                let k = &all[rng.random_range(0..4)];
                let target = u.adjoint() * k * &u;
                // the pulled-back point is the lattice point whose kernel matches
                let best = all
                    .iter()
                    .min_by(|a, b| max_abs(&(*a - &target)).partial_cmp(&max_abs(&(*b - &target))).unwrap())
                    .unwrap();
                pairs.push((k.clone(), best.clone()));
            }
            Ok((u, pairs))
        }
        Family::Sun { n } => {
            let sys = SunSystem::new(*n)?;
            let u = random_unitary(*n, rng);
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..count {
                let psi = crate::sun::haar_vector(*n, rng);
                let back = u.adjoint() * &psi;
                pairs.push((sys.kernel_from_vector(spec.s, &psi)?, sys.kernel_from_vector(spec.s, &back)?));
            }
            Ok((u, pairs))
        }
        Family::Composite { factors } => {
            let cases = factors.iter().map(|f| covariance_pairs(f, rng, count, false)).collect::<Result<Vec<_>>>()?;
            let u = kron_all(&cases.iter().map(|(u, _)| u.clone()).collect::<Vec<_>>());
            let pairs = (0..count)
                .map(|i| {
                    let a = kron_all(&cases.iter().map(|(_, p)| p[i].0.clone()).collect::<Vec<_>>());
                    let b = kron_all(&cases.iter().map(|(_, p)| p[i].1.clone()).collect::<Vec<_>>());
                    (a, b)
                })
                .collect();
            Ok((u, pairs))
        }
        Family::Hw { .. } => Err(PsError::Family("HW covariance is checked by displacement in hw_checks".into())),
    }
}

fn sun_moments(sys: &SunSystem, s: f64, trials: usize, rng: &mut ChaCha8Rng) -> Result<Residuals> {
    use crate::sun::moments;
    let ops = test_operators(sys.n, trials, rng);
    let standardization = op_norm(&(moments::kernel_integral(sys, s) - identity(sys.n)));
    let mut lin: f64 = 0.0;
    let mut trac: f64 = 0.0;
    for a in &ops {
        lin = lin.max(op_norm(&(moments::reverse_transform(sys, a, s) - a)));
    }
    for w in ops.windows(2) {
        trac = trac.max((moments::function_overlap(sys, &w[0], &w[1], s, -s) - trace_product(&w[0], &w[1])).norm());
    }
    let spec = sys.spec(s)?;
    let (u, pairs) = covariance_pairs(&spec, rng, trials, false)?;
    let mut herm: f64 = 0.0;
    for (k, _) in &pairs {
        herm = herm.max(hermiticity_defect(k));
        for a in &ops {
            herm = herm.max(trace_product(a, k).im.abs());
        }
    }
    Ok(Residuals { linearity: lin, hermiticity: herm, standardization, traciality: trac, covariance: covariance_residual(&u, &pairs, &ops) })
}

// a multiple of every supported N up to 8
const MC_CHUNK: usize = 840 * 4;

/// Monte Carlo integrals over coherent states, measure total N. States are drawn as
/// the columns of Haar unitaries; the sample count is rounded up to a multiple of N. Chunks draw from
/// independent streams keyed by (seed, chunk) so the result does not depend on threading.
fn sun_monte_carlo(sys: &SunSystem, s: f64, trials: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<Residuals> {
    let n = sys.n;
    let samples = samples.max(n).div_ceil(n) * n;
    let ops = test_operators(n, trials, rng);
    let base: u64 = rng.random();
    let chunks = samples.div_ceil(MC_CHUNK);
    let nf = n as f64;
    let ntr = ops.len();
    // accumulators: kernel integral, per-operator reconstruction, per-pair overlaps
    type Acc = (Operator, Vec<Operator>, Vec<crate::C64>);
    let zero = || -> Acc { (Operator::zeros(n, n), vec![Operator::zeros(n, n); ntr], vec![c(0.0, 0.0); ntr - 1]) };
    let parts: Vec<Result<Acc>> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(ch as u64);
            let mut acc = zero();
            let count = MC_CHUNK.min(samples - ch * MC_CHUNK);
            let mut frame = Operator::zeros(n, n);
            for i in 0..count {
                // columns of one Haar unitary: each is Haar distributed, together they resolve I
                if i % n == 0 {
                    frame = random_unitary(n, &mut r);
                }
                let psi = frame.column(i % n).into_owned();
                let k = sys.kernel_from_vector(s, &psi)?;
                let kd = sys.kernel_from_vector(-s, &psi)?;
                let fs: Vec<crate::C64> = ops.iter().map(|a| trace_product(a, &k)).collect();
                let fd: Vec<crate::C64> = ops.iter().map(|a| trace_product(a, &kd)).collect();
                acc.0 += &k;
                for (i, f) in fs.iter().enumerate() {
                    acc.1[i] += &kd * *f;
                }
                for i in 0..ntr - 1 {
                    acc.2[i] += fs[i] * fd[i + 1];
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = zero();
    for p in parts {
        let p = p?;
        total.0 += p.0;
        for i in 0..ntr {
            total.1[i] += &p.1[i];
        }
        for i in 0..ntr - 1 {
            total.2[i] += p.2[i];
        }
    }
    let scale = c(nf / samples as f64, 0.0);
    let standardization = op_norm(&(&total.0 * scale - identity(n)));
    let linearity = ops.iter().zip(&total.1).map(|(a, r)| op_norm(&(r * scale - a))).fold(0.0, f64::max);
    let traciality = (0..ntr - 1)
        .map(|i| (total.2[i] * scale - trace_product(&ops[i], &ops[i + 1])).norm())
        .fold(0.0, f64::max);
    let spec = sys.spec(s)?;
    let (u, pairs) = covariance_pairs(&spec, rng, trials, false)?;
    let hermiticity = pairs.iter().map(|(k, _)| hermiticity_defect(k)).fold(0.0, f64::max);
    Ok(Residuals { linearity, hermiticity, standardization, traciality, covariance: covariance_residual(&u, &pairs, &ops) })
}

const HW_BLOCK: usize = 4;

fn hw_checks(n_max: usize, trials: usize, rng: &mut ChaCha8Rng) -> Result<Residuals> {
    let space = crate::hw::FockSpace::new(n_max)?;
    let b = HW_BLOCK.min(space.dim());
    let grid = RectGrid::symmetric(8.0, 81);
    let spec = KernelSpec::hw(n_max, 0.0)?;
    let weights = domain_weights(&spec, &Domain::Rect(grid.clone()))?;
    let blocks: Vec<Operator> = grid.alphas().par_iter().map(|a| crate::hw::displaced_parity(b, *a)).collect();
    let frame = Frame { dim: b, kernels: blocks.clone(), duals: blocks, weights };
    let ops = test_operators(b, trials, rng);

    // covariance under small displacements on the truncated space
    let beta = c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let u = space.displacement(beta, 0.0);
    let embed = |a: &Operator| {
        let mut big = Operator::zeros(space.dim(), space.dim());
        big.view_mut((0, 0), (b, b)).copy_from(a);
        big
    };
    let big_ops: Vec<Operator> = ops.iter().map(embed).collect();
    let mut pairs = Vec::with_capacity(trials);
    for _ in 0..trials {
        let alpha = c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        pairs.push((space.wigner_kernel(alpha), space.wigner_kernel(alpha - beta)));
    }
    let mut cov: f64 = 0.0;
    let ud = u.adjoint();
    for (k, pulled) in &pairs {
        for a in &big_ops {
            cov = cov.max((trace_product(&(&u * a * &ud), k) - trace_product(a, pulled)).norm());
        }
    }
    let mut r = frame.check(&ops, &identity(b), &[]);
    r.covariance = cov;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_s0_seed7() {
        let r = verify_stratonovich_weyl(&KernelSpec::su2(0.5, 0.0).unwrap(), 10, 7).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_residual() < 1e-10);
    }

    #[test]
    fn spins_and_orderings() {
        for j in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5] {
            for s in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let r = verify_stratonovich_weyl(&KernelSpec::su2(j, s).unwrap(), 6, 3).unwrap();
                assert!(r.max_residual() < 1e-9, "j = {j}, s = {s}: {r:?}");
            }
        }
    }

    #[test]
    fn wootters_frame() {
        for s in [-1.0, 0.0, 1.0] {
            let r = verify_stratonovich_weyl(&KernelSpec::wootters(s).unwrap(), 8, 1).unwrap();
            assert!(r.passed, "{r:?}");
        }
        let f = Frame::for_spec(&KernelSpec::wootters(0.0).unwrap(), false).unwrap();
        let mut sum = Operator::zeros(2, 2);
        for (k, w) in f.kernels.iter().zip(&f.weights) {
            sum += k * c(*w, 0.0);
        }
        assert_eq!(sum, identity(2));
    }

    #[test]
    fn bare_sigma_z_misses_identity() {
        let r = verify_with_mode(&KernelSpec::su2(0.5, 0.0).unwrap(), 4, 7, VerifyMode::BareParity).unwrap();
        assert!((r.standardization - 1.0).abs() < 1e-12);
        assert!(!r.passed);
        assert!(r.covariance < 1e-12);
    }

    #[test]
    fn sun_moment_mode() {
        for n in [2, 3, 4] {
            for s in [-1.0, 0.0, 1.0] {
                let r = verify_stratonovich_weyl(&KernelSpec::sun(n, s).unwrap(), 5, 11).unwrap();
                assert!(r.passed, "N = {n}, s = {s}: {r:?}");
            }
        }
    }

    #[test]
    fn sun_monte_carlo_mode() {
        let spec = KernelSpec::sun(3, 0.0).unwrap();
        let a = verify_with_mode(&spec, 3, 2, VerifyMode::MonteCarlo { samples: 400_000 }).unwrap();
        let b = verify_with_mode(&spec, 3, 2, VerifyMode::MonteCarlo { samples: 400_000 }).unwrap();
        assert_eq!(a, b);
        assert!(a.passed, "{a:?}");
    }

    #[test]
    fn composite_and_hw() {
        let q = KernelSpec::su2(0.5, 0.0).unwrap();
        let spec = KernelSpec::composite(vec![q, KernelSpec::wootters(0.0).unwrap()]).unwrap();
        let r = verify_stratonovich_weyl(&spec, 4, 5).unwrap();
        assert!(r.passed, "{r:?}");
        let r = verify_stratonovich_weyl(&KernelSpec::hw(40, 0.0).unwrap(), 4, 5).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(!r.notes.is_empty());
        assert!(verify_with_mode(&KernelSpec::wootters(0.0).unwrap(), 3, 1, VerifyMode::MonteCarlo { samples: 10 }).is_err());
    }
}
