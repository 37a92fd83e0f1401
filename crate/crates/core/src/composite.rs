//! Tensor-product kernels, multi-qubit slices and marginals, hybrid CV (x) qubit points.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::kernel::{Domain, EulerPoint, Family, KernelSpec, LatticePoint, PhasePoint, SampledFunction};
use crate::foundation::operator::{c, check_dim, diag_real, hermiticity_defect, kron_all, partial_trace, trace_product, Operator, C64};
use crate::foundation::quadrature::{sphere_quadrature, SphereGrid};
use crate::hw::FockSpace;
use crate::su2::SpinSystem;
use crate::sun::SunSystem;

/// A constructed single-factor system able to produce kernels at points.
#[derive(Debug, Clone)]
pub enum FactorSystem {
    Hw(FockSpace),
    Su2(SpinSystem),
    Wootters,
    Sun(SunSystem),
}

impl FactorSystem {
    pub fn from_spec(spec: &KernelSpec) -> Result<FactorSystem> {
        Ok(match &spec.family {
            Family::Hw { n_max } => FactorSystem::Hw(FockSpace::new(*n_max)?),
            Family::Su2 { two_j } => FactorSystem::Su2(SpinSystem::from_two_j(*two_j)),
            Family::Wootters => FactorSystem::Wootters,
            Family::Sun { n } => FactorSystem::Sun(SunSystem::new(*n)?),
            Family::Composite { .. } => {
                return Err(PsError::Family("composite specs have no single factor system".into()))
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            FactorSystem::Hw(f) => f.dim(),
            FactorSystem::Su2(s) => s.dim(),
            FactorSystem::Wootters => 2,
            FactorSystem::Sun(s) => s.n,
        }
    }

    pub fn kernel(&self, s: f64, point: &PhasePoint) -> Result<Operator> {
        match (self, point) {
            (FactorSystem::Hw(f), PhasePoint::Cv { re, im }) => f.kernel_at(s, c(*re, *im)),
            (FactorSystem::Su2(sys), PhasePoint::Euler(p)) => sys.kernel_at(s, *p),
            (FactorSystem::Wootters, PhasePoint::Lattice(p)) => crate::wootters::phase_point_operator(*p, s),
            (FactorSystem::Sun(sys), PhasePoint::Sun(p)) => {
                let psi = crate::sun::euler_rotation_sun(sys, p)? * sys.lowest_weight();
                sys.kernel_from_vector(s, &psi)
            }
            _ => Err(PsError::Family(format!("point kind does not match factor system {:?}", self.name()))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            FactorSystem::Hw(_) => "hw",
            FactorSystem::Su2(_) => "su2",
            FactorSystem::Wootters => "wootters",
            FactorSystem::Sun(_) => "sun",
        }
    }
}

/// Kernel of any spec at a point; composite specs take a composite point.
pub fn kernel(spec: &KernelSpec, point: &PhasePoint) -> Result<Operator> {
    match (&spec.family, point) {
        (Family::Composite { factors }, PhasePoint::Composite { factors: pts }) => tensor_kernel(factors, pts),
        (Family::Composite { .. }, _) => Err(PsError::Family("composite spec needs a composite point".into())),
        _ => FactorSystem::from_spec(spec)?.kernel(spec.s, point),
    }
}

/// Kronecker product of factor kernels; each factor spec carries its own s.
pub fn tensor_kernel(specs: &[KernelSpec], points: &[PhasePoint]) -> Result<Operator> {
    if specs.len() != points.len() {
        return Err(PsError::Dimension { expected: specs.len(), got: points.len() });
    }
    if specs.is_empty() {
        return Err(PsError::Domain("composite kernel needs at least one factor".into()));
    }
    let ks = specs.iter().zip(points).map(|(s, p)| kernel(s, p)).collect::<Result<Vec<_>>>()?;
    Ok(kron_all(&ks))
}

/// Points of a single-factor domain, in domain order.
pub fn domain_points(domain: &Domain) -> Result<Vec<PhasePoint>> {
    Ok(match domain {
        Domain::Sphere(g) => g.nodes.iter().map(|n| PhasePoint::Euler(EulerPoint::sphere(n.theta, n.phi))).collect(),
        Domain::Lattice { n_qubits: 1 } => LatticePoint::all().iter().map(|p| PhasePoint::Lattice(*p)).collect(),
        Domain::Rect(r) => r.alphas().into_iter().map(PhasePoint::cv).collect(),
        Domain::CvPoints { alphas } => alphas.iter().map(|(re, im)| PhasePoint::Cv { re: *re, im: *im }).collect(),
        Domain::SunPoints { points } => points.iter().cloned().map(PhasePoint::Sun).collect(),
        _ => return Err(PsError::Domain("domain is not a single-factor point set".into())),
    })
}

/// W(Omega_1, ..., Omega_n) = Tr[rho (x)_i Pi_i(Omega_i)] on the product of factor domains,
/// first factor most significant.
pub fn evaluate_product(rho: &Operator, specs: &[KernelSpec], domains: &[Domain]) -> Result<SampledFunction> {
    if specs.len() != domains.len() {
        return Err(PsError::Dimension { expected: specs.len(), got: domains.len() });
    }
    let dim: usize = specs.iter().map(|s| s.dim()).product();
    check_dim(rho, dim)?;
    let mut tables = Vec::with_capacity(specs.len());
    for (spec, dom) in specs.iter().zip(domains) {
        let sys = FactorSystem::from_spec(spec)?;
        let pts = domain_points(dom)?;
        tables.push(pts.par_iter().map(|p| sys.kernel(spec.s, p)).collect::<Result<Vec<_>>>()?);
    }
    let sizes: Vec<usize> = tables.iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().product();
    let values: Vec<C64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut idx = vec![0; sizes.len()];
            for f in (0..sizes.len()).rev() {
                idx[f] = rem % sizes[f];
                rem /= sizes[f];
            }
            let parts: Vec<Operator> = idx.iter().enumerate().map(|(f, &i)| tables[f][i].clone()).collect();
            trace_product(rho, &kron_all(&parts))
        })
        .collect();
    let real = hermiticity_defect(rho) < 1e-12;
    let values = if real { values.into_iter().map(|v| c(v.re, 0.0)).collect() } else { values };
    let spec = KernelSpec::composite(specs.to_vec())?;
    Ok(SampledFunction::new(spec, Domain::Product { factors: domains.to_vec() }, values, real))
}

/// n-qubit Stratonovich specs with a common s.
pub fn qubit_specs(n: usize, s: f64) -> Result<Vec<KernelSpec>> {
    (0..n).map(|_| KernelSpec::su2(0.5, s)).collect()
}

/// Diagonal of the SU(2^n) lowest-weight s-parity.
pub fn sun_parity_diagonal(dim: usize, s: f64) -> Result<Vec<f64>> {
    crate::su2::check_s(s)?;
    let n = dim as f64;
    let cs = crate::sun::kernel_coefficient(dim, s);
    let mut d = vec![1.0 / n - 2.0 * cs / n; dim];
    d[dim - 1] = 1.0 / n + cs * 2.0 * (n - 1.0) / n;
    Ok(d)
}

/// D(Omega) Pi_{SU(2^n)} D(Omega)^dag with D the product of single-qubit Euler rotations.
pub fn hybrid_multiqubit_kernel(n: usize, points: &[EulerPoint], s: f64) -> Result<Operator> {
    if n == 0 || n > 10 {
        return Err(PsError::Domain(format!("hybrid kernel supports 1..=10 qubits, got {n}")));
    }
    if points.len() != n {
        return Err(PsError::Dimension { expected: n, got: points.len() });
    }
    let half = SpinSystem::from_two_j(1);
    let d = kron_all(&points.iter().map(|p| half.euler_rotation(*p)).collect::<Vec<_>>());
    let parity = diag_real(&sun_parity_diagonal(1 << n, s)?);
    Ok(&d * parity * d.adjoint())
}

/// Angles needed by the hybrid route and by the full SU(2^n) route: (2n, 2(2^n - 1)).
pub fn hybrid_degrees_of_freedom(n: usize) -> (usize, usize) {
    (2 * n, 2 * ((1usize << n) - 1))
}

/// Seeded Monte Carlo estimate of the hybrid kernel integral over (S^2)^n, measure total 2^n.
/// Returns the estimate and its entrywise maximum standard error.
pub fn hybrid_standardization_mc(n: usize, s: f64, samples: usize, seed: u64) -> Result<(Operator, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n;
    let mut sum = Operator::zeros(dim, dim);
    let mut sumsq = vec![0.0; dim * dim];
    for _ in 0..samples {
        let pts: Vec<EulerPoint> = (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                EulerPoint::sphere(z.acos(), rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        let k = hybrid_multiqubit_kernel(n, &pts, s)? * c(dim as f64, 0.0);
        for (i, v) in k.iter().enumerate() {
            sumsq[i] += v.norm_sqr();
        }
        sum += k;
    }
    let m = samples as f64;
    let mean = sum / c(m, 0.0);
    let se = mean
        .iter()
        .zip(&sumsq)
        .map(|(mu, sq)| ((sq / m - mu.norm_sqr()).max(0.0) / m).sqrt())
        .fold(0.0, f64::max);
    Ok((mean, se))
}

/// Source of one slice angle: a sweep variable or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binding {
    Var(usize),
    Fixed(f64),
}

impl Binding {
    fn resolve(&self, coords: &[f64]) -> Result<f64> {
        match self {
            Binding::Fixed(v) => Ok(*v),
            Binding::Var(i) => coords.get(*i).copied().ok_or_else(|| {
                PsError::Domain(format!("slice variable {i} missing from point of arity {}", coords.len()))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceKind {
    EqualAngle,
    Equatorial,
    AxisPair,
    CustomBinding,
}

/// Declarative restriction of a multi-spin phase space to a few sweep variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub kind: SliceKind,
    pub variables: Vec<String>,
    /// Per factor (theta, phi).
    pub bindings: Vec<(Binding, Binding)>,
}

impl SliceSpec {
    /// theta_i = theta, phi_i = phi for every factor.
    pub fn equal_angle(n: usize) -> SliceSpec {
        SliceSpec {
            kind: SliceKind::EqualAngle,
            variables: vec!["theta".into(), "phi".into()],
            bindings: vec![(Binding::Var(0), Binding::Var(1)); n],
        }
    }

    /// theta_i = pi/2, phi_i = phi.
    pub fn equatorial(n: usize) -> SliceSpec {
        SliceSpec {
            kind: SliceKind::Equatorial,
            variables: vec!["phi".into()],
            bindings: vec![(Binding::Fixed(PI / 2.0), Binding::Var(0)); n],
        }
    }

    /// phi_1 = phi_2 = 0, sweeping theta_1 and theta_2.
    pub fn axis_pair() -> SliceSpec {
        SliceSpec {
            kind: SliceKind::AxisPair,
            variables: vec!["theta1".into(), "theta2".into()],
            bindings: vec![(Binding::Var(0), Binding::Fixed(0.0)), (Binding::Var(1), Binding::Fixed(0.0))],
        }
    }

    pub fn custom(variables: Vec<String>, bindings: Vec<(Binding, Binding)>) -> SliceSpec {
        SliceSpec { kind: SliceKind::CustomBinding, variables, bindings }
    }

    fn validate(&self, factors: usize) -> Result<()> {
        if self.bindings.len() != factors {
            return Err(PsError::Domain(format!(
                "slice binds {} factors but the state has {factors}",
                self.bindings.len()
            )));
        }
        for (t, p) in &self.bindings {
            for b in [t, p] {
                if let Binding::Var(i) = b {
                    if *i >= self.variables.len() {
                        return Err(PsError::Domain(format!("binding refers to undeclared variable {i}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Equally spaced sweep of one angle over [0, 2 pi) as slice coordinates.
pub fn circle_coords(count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|k| vec![2.0 * PI * k as f64 / count as f64]).collect()
}

/// Rectangular (theta, phi) coordinates with theta in [0, pi] and phi in [0, 2 pi).
pub fn sphere_coords(n_theta: usize, n_phi: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let t = if n_theta == 1 { 0.0 } else { PI * i as f64 / (n_theta - 1) as f64 };
        for k in 0..n_phi {
            out.push(vec![t, 2.0 * PI * k as f64 / n_phi as f64]);
        }
    }
    out
}

/// Evaluates the spin-factor composite function along a slice at the given coordinates.
pub fn slice_evaluate(rho: &Operator, specs: &[KernelSpec], slice: &SliceSpec, coords: &[Vec<f64>]) -> Result<SampledFunction> {
    slice.validate(specs.len())?;
    let systems = specs
        .iter()
        .map(|s| match s.family {
            Family::Su2 { two_j } => Ok(SpinSystem::from_two_j(two_j)),
            _ => Err(PsError::Family("slices are defined for spin factors".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let dim: usize = systems.iter().map(|s| s.dim()).product();
    check_dim(rho, dim)?;
    let values = coords
        .par_iter()
        .map(|x| {
            let ks = systems
                .iter()
                .zip(specs)
                .zip(&slice.bindings)
                .map(|((sys, spec), (bt, bp))| sys.kernel_at(spec.s, EulerPoint::sphere(bt.resolve(x)?, bp.resolve(x)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(trace_product(rho, &kron_all(&ks)))
        })
        .collect::<Result<Vec<C64>>>()?;
    let real = hermiticity_defect(rho) < 1e-12;
    let values = if real { values.into_iter().map(|v| c(v.re, 0.0)).collect() } else { values };
    Ok(SampledFunction::new(
        KernelSpec::composite(specs.to_vec())?,
        Domain::Points { labels: slice.variables.clone(), coords: coords.to_vec() },
        values,
        real,
    ))
}

/// Sign changes around a closed loop of samples, ignoring values within `tol` of zero.
pub fn count_sign_changes(values: &[f64], periodic: bool, tol: f64) -> usize {
    let signs: Vec<f64> = values.iter().filter(|v| v.abs() > tol).map(|v| v.signum()).collect();
    if signs.len() < 2 {
        return 0;
    }
    let mut n = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if periodic && signs[0] != signs[signs.len() - 1] {
        n += 1;
    }
    n
}

/// Marginal of a composite function on one kept factor, computed two ways.
#[derive(Debug, Clone)]
pub struct MarginalResult {
    /// Function of the reduced state on the kept factor's domain.
    pub function: SampledFunction,
    /// Max deviation between the reduced-state path and direct integration over the other factors.
    pub path_discrepancy: f64,
}

fn integration_domain(spec: &KernelSpec) -> Result<Domain> {
    match spec.family {
        Family::Su2 { two_j } => {
            // W_A Pi products need degree 2j per factor
            let g: SphereGrid = sphere_quadrature(two_j as usize).for_spin(two_j);
            Ok(Domain::Sphere(g))
        }
        Family::Wootters => Ok(Domain::Lattice { n_qubits: 1 }),
        _ => Err(PsError::Family("marginal integration needs spin or lattice factors".into())),
    }
}

/// Integrates out every factor except `keep`.
pub fn marginal_wigner(rho: &Operator, specs: &[KernelSpec], keep: usize, domain: &Domain) -> Result<MarginalResult> {
    if keep >= specs.len() {
        return Err(PsError::Domain(format!("factor index {keep} out of range for {} factors", specs.len())));
    }
    let dims: Vec<usize> = specs.iter().map(|s| s.dim()).collect();
    check_dim(rho, dims.iter().product())?;
    let reduced = partial_trace(rho, &dims, &[keep])?;
    let function = evaluate_product(&reduced, &specs[keep..=keep], std::slice::from_ref(domain))?;
    let mut function = function;
    function.spec = specs[keep].clone();
    function.domain = domain.clone();

    // direct path: sum the full function against the quadrature weights of the discarded factors
    let mut domains = Vec::with_capacity(specs.len());
    for (i, s) in specs.iter().enumerate() {
        domains.push(if i == keep { domain.clone() } else { integration_domain(s)? });
    }
    let full = evaluate_product(rho, specs, &domains)?;
    let sizes: Vec<usize> = domains.iter().map(|d| d.len()).collect();
    let weights: Vec<Vec<f64>> = specs
        .iter()
        .zip(&domains)
        .map(|(s, d)| crate::foundation::kernel::domain_weights(s, d))
        .collect::<Result<_>>()?;
    let mut direct = vec![c(0.0, 0.0); sizes[keep]];
    for (flat, v) in full.values.iter().enumerate() {
        let mut rem = flat;
        let mut w = 1.0;
        let mut kept = 0;
        for f in (0..sizes.len()).rev() {
            let i = rem % sizes[f];
            rem /= sizes[f];
            if f == keep {
                kept = i;
            } else {
                w *= weights[f][i];
            }
        }
        direct[kept] += v * w;
    }
    let path_discrepancy = direct.iter().zip(&function.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(MarginalResult { function, path_discrepancy })
}

/// W(alpha, theta, phi) = Tr[(Pi(alpha) (x) Pi(theta, phi)) rho] with the Fock factor first.
pub fn hybrid_cv_dv_point(space: &FockSpace, rho: &Operator, alpha: C64, p: EulerPoint) -> Result<f64> {
    check_dim(rho, 2 * space.dim())?;
    let half = SpinSystem::from_two_j(1);
    let k = crate::foundation::operator::kron(&space.wigner_kernel(alpha), &half.kernel_at(0.0, p)?);
    Ok(trace_product(rho, &k).re)
}

/// Hybrid function on alphas x sphere nodes plus the per-alpha maximum over the sphere.
pub fn hybrid_cv_dv_grid(space: &FockSpace, rho: &Operator, alphas: &[C64], grid: &SphereGrid) -> Result<(SampledFunction, Vec<f64>)> {
    let specs = vec![space.spec(0.0)?, KernelSpec::su2(0.5, 0.0)?];
    let domains = vec![
        Domain::CvPoints { alphas: alphas.iter().map(|a| (a.re, a.im)).collect() },
        Domain::Sphere(grid.for_spin(1)),
    ];
    let mut f = evaluate_product(rho, &specs, &domains)?;
    let pop = space.top_population(&partial_trace(rho, &[space.dim(), 2], &[0])?);
    if pop > 1e-8 {
        f.warnings.push(format!("state has population {pop:.3e} in the top quarter of the Fock basis"));
    }
    let per = grid.len();
    let maxima = f
        .values
        .chunks(per)
        .map(|ch| ch.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok((f, maxima))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::operator::{identity, max_abs, random_density, random_hermitian};
    use crate::states;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_factor_reduces() {
        let spec = KernelSpec::su2(0.5, 0.0).unwrap();
        let p = PhasePoint::Euler(EulerPoint::sphere(0.4, 1.0));
        let k = tensor_kernel(std::slice::from_ref(&spec), std::slice::from_ref(&p)).unwrap();
        assert!(max_abs(&(k - kernel(&spec, &p).unwrap())) < 1e-15);
    }

    #[test]
    fn two_qubit_origin_kernel() {
        let specs = qubit_specs(2, 0.0).unwrap();
        let o = PhasePoint::Euler(EulerPoint::new(0.0, 0.0, 0.0));
        let k = tensor_kernel(&specs, &[o.clone(), o]).unwrap();
        let s3 = 3f64.sqrt();
        let (a, b) = ((1.0 + s3) / 2.0, (1.0 - s3) / 2.0);
        for (i, v) in [a * a, a * b, b * a, b * b].iter().enumerate() {
            assert!((k[(i, i)].re - v).abs() < 1e-14);
        }
        assert!((k.trace().re - 1.0).abs() < 1e-14);
        assert!(tensor_kernel(&specs, &[PhasePoint::Lattice(LatticePoint::new(0, 0))]).is_err());
    }

    #[test]
    fn bell_axis_pair_against_brute_force() {
        let rho = states::bell(states::BellKind::PhiMinus);
        let specs = qubit_specs(2, 0.0).unwrap();
        let f = slice_evaluate(&rho, &specs, &SliceSpec::axis_pair(), &[vec![PI / 2.0, PI / 2.0]]).unwrap();
        // brute force: each kernel is (I + sqrt3 sx)/2 at theta = pi/2, phi = 0
        let s3 = 3f64.sqrt();
        let k = (identity(2) + crate::foundation::operator::pauli_x() * c(s3, 0.0)) * c(0.5, 0.0);
        let brute = trace_product(&rho, &crate::foundation::operator::kron(&k, &k)).re;
        assert!((f.values[0].re - brute).abs() < 1e-14);
        assert!((brute + 0.5).abs() < 1e-14);
    }

    #[test]
    fn composite_round_trip_and_traciality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3] {
            let g = sphere_quadrature(2);
            let dom = Domain::Sphere(g.for_spin(1));
            let rho = random_density(1 << n, &mut rng);
            for s in [-1.0, 0.0, 1.0] {
                let specs = qubit_specs(n, s).unwrap();
                let duals = qubit_specs(n, -s).unwrap();
                let f = evaluate_product(&rho, &specs, &vec![dom.clone(); n]).unwrap();
                let w = f.weights().unwrap();
                let pts: Vec<Vec<PhasePoint>> = {
                    let single = domain_points(&dom).unwrap();
                    let mut all: Vec<Vec<PhasePoint>> = vec![vec![]];
                    for _ in 0..n {
                        all = all.into_iter().flat_map(|v| single.iter().map(move |p| {
                            let mut v2 = v.clone();
                            v2.push(p.clone());
                            v2
                        })).collect();
                    }
                    all
                };
                let mut back = Operator::zeros(1 << n, 1 << n);
                for ((v, wt), p) in f.values.iter().zip(&w).zip(&pts) {
                    back += tensor_kernel(&duals, p).unwrap() * (v * *wt);
                }
                assert!(max_abs(&(back - &rho)) < 1e-9, "n = {n}, s = {s}");
            }
        }
        let specs = qubit_specs(2, 0.0).unwrap();
        let dom = Domain::Sphere(sphere_quadrature(2).for_spin(1));
        for _ in 0..5 {
            let a = random_hermitian(4, &mut rng);
            let b = random_hermitian(4, &mut rng);
            let fa = evaluate_product(&a, &specs, &[dom.clone(), dom.clone()]).unwrap();
            let fb = evaluate_product(&b, &specs, &[dom.clone(), dom.clone()]).unwrap();
            let w = fa.weights().unwrap();
            let ov: f64 = (0..w.len()).map(|i| w[i] * fa.values[i].re * fb.values[i].re).sum();
            assert!((ov - trace_product(&a, &b).re).abs() < 1e-9);
        }
    }

    #[test]
    fn hybrid_kernel_properties() {
        let z = EulerPoint::new(0.0, 0.0, 0.0);
        let sun2 = SunSystem::new(2).unwrap();
        assert!(max_abs(&(hybrid_multiqubit_kernel(1, &[z], 0.0).unwrap() - crate::sun::parity_sun(&sun2))) < 1e-14);
        let sun4 = SunSystem::new(4).unwrap();
        assert!(max_abs(&(hybrid_multiqubit_kernel(2, &[z, z], 0.0).unwrap() - crate::sun::parity_sun(&sun4))) < 1e-13);
        let p = EulerPoint::new(0.3, 1.1, 0.2);
        let k = hybrid_multiqubit_kernel(1, &[p], 0.0).unwrap();
        let spin = SpinSystem::from_two_j(1);
        let u = spin.euler_rotation(p);
        let x = crate::foundation::operator::pauli_x();
        let expect = &u * &x * spin.parity_s(0.0).unwrap() * &x * u.adjoint();
        assert!(max_abs(&(k - expect)) < 1e-13);
        assert_eq!(hybrid_degrees_of_freedom(3), (6, 14));
        let (est, se) = hybrid_standardization_mc(2, 0.0, 20_000, 5).unwrap();
        for (v, i) in est.iter().zip(identity(4).iter()) {
            assert!((v - i).norm() < 4.0 * se + 1e-12);
        }
        // exact check on a product quadrature
        let g = sphere_quadrature(2).for_spin(1);
        let mut acc = Operator::zeros(4, 4);
        for a in &g.nodes {
            for b in &g.nodes {
                let k = hybrid_multiqubit_kernel(2, &[EulerPoint::sphere(a.theta, a.phi), EulerPoint::sphere(b.theta, b.phi)], 0.0).unwrap();
                acc += k * c(a.weight * b.weight, 0.0);
            }
        }
        assert!(max_abs(&(acc - identity(4))) < 1e-12);
        assert!(hermiticity_defect(&hybrid_multiqubit_kernel(3, &[p, z, p], -0.5).unwrap()) < 1e-14);
    }

    #[test]
    fn ghz_equator_oscillations() {
        for n in 3..=5 {
            let rho = states::ghz(n).unwrap();
            let f = slice_evaluate(&rho, &qubit_specs(n, 0.0).unwrap(), &SliceSpec::equatorial(n), &circle_coords(720)).unwrap();
            assert_eq!(count_sign_changes(&f.real_values(), true, 1e-12), 2 * n);
        }
    }

    #[test]
    fn equal_angle_slices() {
        let up2 = states::product(&[states::spin_up(1), states::spin_up(1)]);
        let specs = qubit_specs(2, 0.0).unwrap();
        let coords = sphere_coords(5, 7);
        let f = slice_evaluate(&up2, &specs, &SliceSpec::equal_angle(2), &coords).unwrap();
        let spin = SpinSystem::from_two_j(1);
        for (x, v) in coords.iter().zip(&f.values) {
            let w = crate::su2::evaluate_point(&spin, &states::spin_up(1), 0.0, x[0], x[1]).unwrap().re;
            assert!((v.re - w * w).abs() < 1e-13);
        }
        let mixed = states::maximally_mixed(4);
        let f = slice_evaluate(&mixed, &specs, &SliceSpec::equal_angle(2), &coords).unwrap();
        assert!(f.values.iter().all(|v| (v.re - 0.25).abs() < 1e-14));
        // permutation covariance
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random_density(4, &mut rng);
        let swap = Operator::from_fn(4, 4, |i, k| {
            let j = ((i & 1) << 1) | (i >> 1);
            if j == k { c(1.0, 0.0) } else { c(0.0, 0.0) }
        });
        let a = slice_evaluate(&rho, &specs, &SliceSpec::equal_angle(2), &coords).unwrap();
        let b = slice_evaluate(&(&swap * &rho * swap.adjoint()), &specs, &SliceSpec::equal_angle(2), &coords).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-12);
        }
        let bad = SliceSpec::custom(vec!["t".into()], vec![(Binding::Var(0), Binding::Var(3)); 2]);
        assert!(slice_evaluate(&rho, &specs, &bad, &coords).is_err());
    }

    #[test]
    fn marginals() {
        let dom = Domain::Sphere(sphere_quadrature(4).for_spin(1));
        let specs = qubit_specs(2, 0.0).unwrap();
        for keep in [0, 1] {
            let m = marginal_wigner(&states::bell(states::BellKind::PhiMinus), &specs, keep, &dom).unwrap();
            assert!(m.function.values.iter().all(|v| (v.re - 0.5).abs() < 1e-12));
            assert!(m.path_discrepancy < 1e-10);
        }
        let g3 = marginal_wigner(&states::ghz(3).unwrap(), &qubit_specs(3, 0.0).unwrap(), 0, &dom).unwrap();
        assert!(g3.function.values.iter().all(|v| (v.re - 0.5).abs() < 1e-12));
        assert!(g3.path_discrepancy < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_density(2, &mut rng);
        let prod = states::product(&[a.clone(), states::spin_up(1)]);
        let m = marginal_wigner(&prod, &specs, 0, &dom).unwrap();
        let own = crate::su2::evaluate(&SpinSystem::from_two_j(1), &a, 0.0, &sphere_quadrature(4)).unwrap();
        for (x, y) in m.function.values.iter().zip(&own.values) {
            assert!((x - y).norm() < 1e-12);
        }
        let lat = marginal_wigner(&states::bell(states::BellKind::PsiPlus), &vec![KernelSpec::wootters(0.0).unwrap(); 2], 1, &Domain::Lattice { n_qubits: 1 }).unwrap();
        assert!(lat.path_discrepancy < 1e-12);
        assert!(marginal_wigner(&prod, &specs, 2, &dom).is_err());
    }

    #[test]
    fn hybrid_points() {
        let f = FockSpace::new(10).unwrap();
        let rho = states::product(&[states::fock_density(10, 0).unwrap(), states::spin_up(1)]);
        let v = hybrid_cv_dv_point(&f, &rho, c(0.0, 0.0), EulerPoint::sphere(0.0, 0.0)).unwrap();
        assert!((v - (1.0 + 3f64.sqrt())).abs() < 1e-12);
        let hb = states::hybrid_bell(10).unwrap();
        let cv = partial_trace(&hb, &[11, 2], &[0]).unwrap();
        let w = crate::hw::wigner(&f, &cv, &[c(0.0, 0.0)]).unwrap();
        assert!(w.values[0].re.abs() < 1e-12);
        let mixed = states::product(&[states::fock_density(10, 1).unwrap(), states::maximally_mixed(2)]);
        let a = hybrid_cv_dv_point(&f, &mixed, c(0.2, 0.1), EulerPoint::sphere(0.3, 0.0)).unwrap();
        let b = hybrid_cv_dv_point(&f, &mixed, c(0.2, 0.1), EulerPoint::sphere(2.0, 4.0)).unwrap();
        assert!((a - b).abs() < 1e-12);
        let (grid_f, maxima) = hybrid_cv_dv_grid(&f, &hb, &[c(0.0, 0.0), c(0.5, 0.0)], &sphere_quadrature(4)).unwrap();
        assert_eq!(maxima.len(), 2);
        assert_eq!(grid_f.values.len(), 2 * sphere_quadrature(4).len());
    }
}
