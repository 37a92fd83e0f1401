//! Generalized Fourier transform between orderings and the triple-kernel convolution.

use rayon::prelude::*;

use super::kernel::{domain_weights, Domain, Family, KernelSpec, SampledFunction};
use super::operator::{c, hermiticity_defect, kron_all, trace_product, Operator, C64};
use crate::error::{PsError, Result};
use crate::su2::SpinSystem;

/// Kernels Pi^{(s)} of a finite family at every node of a domain, in domain order.
/// Composite specs take each factor's own s unless `s` overrides it.
pub fn node_kernels(spec: &KernelSpec, domain: &Domain, s: Option<f64>) -> Result<Vec<Operator>> {
    let s_of = |sp: &KernelSpec| s.unwrap_or(sp.s);
    match (&spec.family, domain) {
        (Family::Su2 { two_j }, Domain::Sphere(g)) => {
            let sys = SpinSystem::from_two_j(*two_j);
            let diag = sys.parity_diagonal(s_of(spec))?;
            Ok(g.nodes
                .par_iter()
                .map(|n| sys.kernel_from_diag(&diag, super::kernel::EulerPoint::sphere(n.theta, n.phi)))
                .collect())
        }
        (Family::Wootters, Domain::Lattice { n_qubits: 1 }) => super::kernel::LatticePoint::all()
            .iter()
            .map(|p| crate::wootters::phase_point_operator(*p, s_of(spec)))
            .collect(),
        (Family::Sun { n }, Domain::SunPoints { points }) => {
            let sys = crate::sun::SunSystem::new(*n)?;
            points
                .par_iter()
                .map(|p| {
                    let psi = crate::sun::euler_rotation_sun(&sys, p)? * sys.lowest_weight();
                    sys.kernel_from_vector(s_of(spec), &psi)
                })
                .collect()
        }
        (Family::Composite { factors }, Domain::Product { factors: doms }) => {
            if factors.len() != doms.len() {
                return Err(PsError::Dimension { expected: factors.len(), got: doms.len() });
            }
            let tables = factors
                .iter()
                .zip(doms)
                .map(|(f, d)| node_kernels(f, d, s))
                .collect::<Result<Vec<_>>>()?;
            let mut out = vec![Operator::identity(1, 1)];
            for t in tables {
                out = out.iter().flat_map(|a| t.iter().map(move |b| kron_all(&[a.clone(), b.clone()]))).collect();
            }
            Ok(out)
        }
        (Family::Hw { .. }, _) => Err(PsError::Family("the truncated HW family has no exact finite reconstruction".into())),
        _ => Err(PsError::Domain("domain does not belong to the kernel family".into())),
    }
}

/// Degree each spin factor needs so that F Pi^{(-s)} is integrated exactly.
fn check_resolution(spec: &KernelSpec, domain: &Domain) -> Result<()> {
    match (&spec.family, domain) {
        (Family::Su2 { two_j }, Domain::Sphere(g)) => {
            let need = 2 * *two_j as usize;
            if g.exact_degree < need {
                return Err(PsError::GridDegree { need, have: g.exact_degree });
            }
            Ok(())
        }
        (Family::Composite { factors }, Domain::Product { factors: doms }) => {
            factors.iter().zip(doms).try_for_each(|(f, d)| check_resolution(f, d))
        }
        (Family::Sun { .. }, Domain::SunPoints { .. }) => Ok(()),
        _ => Ok(()),
    }
}

/// A = int F^{(s)} Pi^{(-s)} dOmega by the domain's quadrature.
pub fn reconstruct(f: &SampledFunction) -> Result<Operator> {
    if let Family::Sun { .. } = f.spec.family {
        return Err(PsError::Domain("SU(N) point sets carry Monte Carlo weights only; use the moment calculus".into()));
    }
    check_resolution(&f.spec, &f.domain)?;
    let duals = dual_kernels(&f.spec, &f.domain)?;
    let w = domain_weights(&f.spec, &f.domain)?;
    if w.len() != f.values.len() {
        return Err(PsError::Dimension { expected: w.len(), got: f.values.len() });
    }
    let d = f.spec.dim();
    let mut acc = Operator::zeros(d, d);
    for ((v, k), wt) in f.values.iter().zip(&duals).zip(&w) {
        acc += k * (v * *wt);
    }
    Ok(acc)
}

fn dual_kernels(spec: &KernelSpec, domain: &Domain) -> Result<Vec<Operator>> {
    match &spec.family {
        Family::Composite { factors } => {
            let duals = factors.iter().map(|f| f.with_s(-f.s)).collect::<Result<Vec<_>>>()?;
            node_kernels(&KernelSpec::composite(duals)?, domain, None)
        }
        _ => node_kernels(spec, domain, Some(-spec.s)),
    }
}

/// F_A^{(s)} = Tr[A Pi^{(s)}] on every node of the domain.
pub fn evaluate_operator(a: &Operator, spec: &KernelSpec, domain: &Domain) -> Result<SampledFunction> {
    super::operator::check_dim(a, spec.dim())?;
    let ks = node_kernels(spec, domain, None)?;
    let values: Vec<C64> = ks.par_iter().map(|k| trace_product(a, k)).collect();
    let real = hermiticity_defect(a) < 1e-12;
    let values = if real { values.into_iter().map(|v| c(v.re, 0.0)).collect() } else { values };
    Ok(SampledFunction::new(spec.clone(), domain.clone(), values, real))
}

/// F^{(s1)} -> F^{(s2)} on the same nodes. Finite families reconstruct and re-evaluate,
/// which equals pairing with the trace kernel Tr[Pi^{(s2)}(Omega') Pi^{(-s1)}(Omega)].
pub fn generalized_fourier(f: &SampledFunction, spec_to: &KernelSpec) -> Result<SampledFunction> {
    if !f.spec.same_family(spec_to) {
        return Err(PsError::Family("target spec belongs to another family".into()));
    }
    if &f.spec == spec_to {
        return Ok(f.clone());
    }
    if let Family::Sun { .. } = f.spec.family {
        return crate::sun::s_transform_sun(f, spec_to.s);
    }
    let a = reconstruct(f)?;
    let mut out = evaluate_operator(&a, spec_to, &f.domain)?;
    if f.real {
        out.real = true;
        for v in out.values.iter_mut() {
            v.im = 0.0;
        }
    }
    out.warnings = f.warnings.clone();
    Ok(out)
}

/// F_{AB}^{(s)}(Omega) = int int F_A^{(s1)} G_B^{(s2)} Tr[Pi^{(s)}(Omega) Pi^{(-s1)}(Omega') Pi^{(-s2)}(Omega'')],
/// evaluated on F's domain by factoring the double integral into the two reconstructions.
pub fn kernel_convolution(f: &SampledFunction, g: &SampledFunction, s: f64) -> Result<SampledFunction> {
    if !f.spec.same_family(&g.spec) {
        return Err(PsError::Family("convolution operands belong to different families".into()));
    }
    let a = reconstruct(f)?;
    let b = reconstruct(g)?;
    let spec = f.spec.with_s(s)?;
    evaluate_operator(&(a * b), &spec, &f.domain)
}
