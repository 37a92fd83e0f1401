//! SU(N) phase space in the fundamental representation.
//!
//! Generators are 1-indexed as in the usual Gell-Mann numbering: block a = 2..N holds
//! symmetric/antisymmetric pairs for (b, a), b < a, followed by the diagonal lambda_{a^2 - 1}.
//! The fiducial state is the lowest-weight vector |N> (last basis element).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{PsError, Result};
use crate::foundation::kernel::{Domain, Family, KernelSpec, SampledFunction, SunPoint};
use crate::foundation::operator::{c, check_dim, expm, identity, projector, trace_product, Ket, Operator, C64};

#[derive(Debug, Clone)]
pub struct SunSystem {
    pub n: usize,
    generators: Vec<Operator>,
}

impl SunSystem {
    pub fn new(n: usize) -> Result<SunSystem> {
        if !(2..=8).contains(&n) {
            return Err(PsError::Domain(format!("SU(N) supported for 2 <= N <= 8, got {n}")));
        }
        let mut generators = Vec::with_capacity(n * n - 1);
        for a in 1..n {
            // zero-based column a pairs with every earlier row b
            for b in 0..a {
                let mut sym = Operator::zeros(n, n);
                sym[(a, b)] = c(1.0, 0.0);
                sym[(b, a)] = c(1.0, 0.0);
                let mut anti = Operator::zeros(n, n);
                anti[(a, b)] = c(0.0, 1.0);
                anti[(b, a)] = c(0.0, -1.0);
                generators.push(sym);
                generators.push(anti);
            }
            let af = (a + 1) as f64;
            let mut diag = Operator::zeros(n, n);
            let upper = (2.0 / (af * (af - 1.0))).sqrt();
            for i in 0..a {
                diag[(i, i)] = c(upper, 0.0);
            }
            diag[(a, a)] = c(-(2.0 * (af - 1.0) / af).sqrt(), 0.0);
            generators.push(diag);
        }
        Ok(SunSystem { n, generators })
    }

    pub fn spec(&self, s: f64) -> Result<KernelSpec> {
        KernelSpec::sun(self.n, s)
    }

    /// lambda_k for 1 <= k <= N^2 - 1.
    pub fn lambda(&self, k: usize) -> &Operator {
        &self.generators[k - 1]
    }

    pub fn generators(&self) -> &[Operator] {
        &self.generators
    }

    /// Number of (phi, theta, Phi) angles: N(N-1)/2, N(N-1)/2, N-1.
    pub fn angle_counts(&self) -> (usize, usize, usize) {
        let m = self.n * (self.n - 1) / 2;
        (m, m, self.n - 1)
    }

    /// J^y(1, a) = lambda_{(a-1)^2 + 1}, 2 <= a <= N.
    pub fn jy(&self, a: usize) -> &Operator {
        self.lambda((a - 1) * (a - 1) + 1)
    }

    /// Cartan element lambda_{a^2 - 1}, 2 <= a <= N.
    pub fn jz(&self, a: usize) -> &Operator {
        self.lambda(a * a - 1)
    }

    pub fn lowest_weight(&self) -> Ket {
        crate::states::basis_ket(self.n, self.n - 1)
    }

    /// Expectation values <psi|lambda_k|psi>, k = 1..N^2-1.
    pub fn bloch_vector(&self, psi: &Ket) -> Vec<f64> {
        self.generators.iter().map(|g| (psi.adjoint() * g * psi)[(0, 0)].re).collect()
    }

    /// Pi^{(s)} = I/N + ((N+1)^{(1+s)/2}/2) sum_k <psi|lambda_k|psi> lambda_k.
    pub fn kernel_from_vector(&self, s: f64, psi: &Ket) -> Result<Operator> {
        crate::su2::check_s(s)?;
        let coeff = kernel_coefficient(self.n, s);
        let mut k = identity(self.n) / c(self.n as f64, 0.0);
        for (g, v) in self.generators.iter().zip(self.bloch_vector(psi)) {
            k += g * c(coeff * v, 0.0);
        }
        Ok(k)
    }
}

/// (N+1)^{(1+s)/2} / 2.
pub fn kernel_coefficient(n: usize, s: f64) -> f64 {
    ((n + 1) as f64).powf((1.0 + s) / 2.0) / 2.0
}

fn pad(v: &[f64], len: usize) -> Result<Vec<f64>> {
    if v.len() > len {
        return Err(PsError::Dimension { expected: len, got: v.len() });
    }
    let mut out = v.to_vec();
    out.resize(len, 0.0);
    Ok(out)
}

/// R(phi, theta) S(Phi). Blocks a = N..2, inner b = 2..a, each contributing
/// exp(i lambda_3 phi_t) exp(i J^y(1, b) theta_t) with t running sequentially;
/// S(Phi) = prod_c exp(i lambda_{(c+1)^2 - 1} Phi_c).
pub fn euler_rotation_sun(sys: &SunSystem, p: &SunPoint) -> Result<Operator> {
    let (m, _, k) = sys.angle_counts();
    for (v, want) in [(&p.phi, m), (&p.theta, m), (&p.big_phi, k)] {
        if v.len() != want {
            return Err(PsError::Dimension { expected: want, got: v.len() });
        }
    }
    let l3 = sys.lambda(3);
    let mut u = identity(sys.n);
    let mut t = 0;
    for a in (2..=sys.n).rev() {
        for b in 2..=a {
            u = u * expm(&(l3 * c(0.0, p.phi[t]))) * expm(&(sys.jy(b) * c(0.0, p.theta[t])));
            t += 1;
        }
    }
    for cc in 1..sys.n {
        u = u * expm(&(sys.jz(cc + 1) * c(0.0, p.big_phi[cc - 1])));
    }
    Ok(u)
}

/// Coherent state R(phi, theta)|N>. Short angle vectors are padded with zeros;
/// only the first N-1 entries of each influence the result.
pub fn coherent_state_sun(sys: &SunSystem, phi: &[f64], theta: &[f64]) -> Result<Ket> {
    let (m, _, k) = sys.angle_counts();
    let p = SunPoint { phi: pad(phi, m)?, theta: pad(theta, m)?, big_phi: vec![0.0; k] };
    Ok(euler_rotation_sun(sys, &p)? * sys.lowest_weight())
}

/// Closed-form column of the coherent state (N >= 3; at N = 2 the lambda_3 phase also
/// reaches the last level and only the moduli agree).
pub fn coherent_column(n: usize, phi: &[f64], theta: &[f64]) -> Ket {
    let mut v = Ket::zeros(n);
    let th = |i: usize| theta.get(i - 1).copied().unwrap_or(0.0);
    let ph = |i: usize| phi.get(i - 1).copied().unwrap_or(0.0);
    let tail = (th(n - 1)).sin();
    v[n - 1] = c(th(n - 1).cos(), 0.0);
    for row in 1..n {
        let mag = if row == 1 {
            (1..=n - 2).map(|i| th(i).cos()).product::<f64>() * tail
        } else {
            th(row - 1).sin() * (row..=n - 2).map(|i| th(i).cos()).product::<f64>() * tail
        };
        let start = row.max(2);
        let mut phase: f64 = (start..n).map(ph).sum();
        if row == 1 {
            phase += ph(1);
        } else if row == 2 {
            phase -= ph(1);
        }
        let sgn = if row == 1 { 1.0 } else { -1.0 };
        v[row - 1] = C64::from_polar(sgn * mag, phase);
    }
    v
}

/// Angles (phi, theta) of the coherent state proportional to `psi`; Phi and unused angles are 0.
pub fn point_from_vector(n: usize, psi: &Ket) -> Result<SunPoint> {
    if psi.len() != n {
        return Err(PsError::Dimension { expected: n, got: psi.len() });
    }
    let nrm = psi.norm();
    if nrm == 0.0 {
        return Err(PsError::Domain("zero vector has no coherent-state angles".into()));
    }
    let mut v = psi / c(nrm, 0.0);
    if v[n - 1].norm() > 0.0 {
        let ph = C64::from_polar(1.0, -v[n - 1].arg());
        v *= ph;
    }
    let m = n * (n - 1) / 2;
    let mut theta = vec![0.0; m];
    let mut phi = vec![0.0; m];
    let mags: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let head = |k: usize| mags[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
    theta[n - 2] = head(n - 1).atan2(mags[n - 1].max(0.0));
    for k in (2..n).rev() {
        // theta_{k-1} from component k (1-indexed) against the components above it
        theta[k - 2] = mags[k - 1].atan2(head(k - 1));
    }
    // phases: arg v_1 = phi_1 + P_2, arg(-v_2) = -phi_1 + P_2, arg(-v_k) = P_k, P_k = sum_{i >= k} phi_i
    let mut p = vec![0.0; n + 1];
    for k in (3..n).rev() {
        p[k] = if mags[k - 1] > 1e-300 { (-v[k - 1]).arg() } else { p[k + 1] };
    }
    if n == 2 {
        p[2] = 0.0;
        // lambda_3 phases both levels: v = (e^{i phi} sin t, e^{-i phi} cos t)
        phi[0] = if mags[0] > 1e-300 { 0.5 * v[0].arg() } else { 0.0 };
    } else {
        let a1 = if mags[0] > 1e-300 { Some(v[0].arg()) } else { None };
        let a2 = if mags[1] > 1e-300 { Some((-v[1]).arg()) } else { None };
        match (a1, a2) {
            (Some(x), Some(y)) => {
                p[2] = 0.5 * (x + y);
                phi[0] = 0.5 * (x - y);
            }
            (Some(x), None) => {
                p[2] = p[3];
                phi[0] = x - p[2];
            }
            (None, Some(y)) => {
                p[2] = p[3];
                phi[0] = p[2] - y;
            }
            (None, None) => p[2] = p[3],
        }
        for k in 2..n {
            phi[k - 1] = p[k] - p[k + 1];
        }
    }
    Ok(SunPoint { phi, theta, big_phi: vec![0.0; n - 1] })
}

/// Kernel at coherent-state angles.
pub fn kernel_sun(sys: &SunSystem, s: f64, phi: &[f64], theta: &[f64]) -> Result<Operator> {
    sys.kernel_from_vector(s, &coherent_state_sun(sys, phi, theta)?)
}

/// (1/N)(I - sqrt((N-1)N(N+1)/2) lambda_{N^2-1}).
pub fn parity_sun(sys: &SunSystem) -> Operator {
    let n = sys.n as f64;
    (identity(sys.n) - sys.jz(sys.n) * c(((n - 1.0) * n * (n + 1.0) / 2.0).sqrt(), 0.0)) / c(n, 0.0)
}

/// F^{(s)} = Tr[rho Pi^{(s)}] at each point.
pub fn evaluate_sun(sys: &SunSystem, rho: &Operator, s: f64, points: &[SunPoint]) -> Result<SampledFunction> {
    check_dim(rho, sys.n)?;
    let values = points
        .par_iter()
        .map(|p| {
            let psi = euler_rotation_sun(sys, p)? * sys.lowest_weight();
            Ok(trace_product(rho, &sys.kernel_from_vector(s, &psi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let real = crate::foundation::operator::hermiticity_defect(rho) < 1e-12;
    let values = if real { values.into_iter().map(|v| c(v.re, 0.0)).collect() } else { values };
    Ok(SampledFunction::new(sys.spec(s)?, Domain::SunPoints { points: points.to_vec() }, values, real))
}

/// Haar-random unit vector in C^N.
pub fn haar_vector<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Ket {
    let v = Ket::from_fn(n, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let nrm = v.norm();
    v / c(nrm, 0.0)
}

/// Haar-distributed coherent-state points, reproducible for a seed.
pub fn haar_points(n: usize, count: usize, seed: u64) -> Result<Vec<SunPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| point_from_vector(n, &haar_vector(n, &mut rng))).collect()
}

/// F^{(s1)} = 1/N + (N+1)^{(s1-s2)/2} (F^{(s2)} - 1/N), pointwise; input is at s2 = F.spec.s.
pub fn s_transform_sun(f: &SampledFunction, s1: f64) -> Result<SampledFunction> {
    let n = match f.spec.family {
        Family::Sun { n } => n,
        Family::Su2 { two_j: 1 } | Family::Wootters => 2,
        _ => return Err(PsError::Family("s_transform_sun needs an SU(N) function".into())),
    };
    crate::su2::check_s(s1)?;
    let s2 = f.spec.s;
    if s1 == s2 {
        return Ok(f.clone());
    }
    let fac = ((n + 1) as f64).powf((s1 - s2) / 2.0);
    let inv = 1.0 / n as f64;
    let values = f.values.iter().map(|v| c(inv, 0.0) + (v - c(inv, 0.0)) * fac).collect();
    let mut out = SampledFunction::new(f.spec.with_s(s1)?, f.domain.clone(), values, f.real);
    out.warnings = f.warnings.clone();
    Ok(out)
}

/// (Tr rho, Tr rho lambda_1, ..., Tr rho lambda_{N^2-1}).
pub fn generator_weyl(sys: &SunSystem, rho: &Operator) -> Result<Vec<f64>> {
    check_dim(rho, sys.n)?;
    let mut out = vec![rho.trace().re];
    out.extend(sys.generators.iter().map(|g| trace_product(rho, g).re));
    Ok(out)
}

/// rho = chi_0 I/N + 1/2 sum_k chi_k lambda_k.
pub fn generator_weyl_inverse(sys: &SunSystem, chi: &[f64]) -> Result<Operator> {
    if chi.len() != sys.n * sys.n {
        return Err(PsError::Dimension { expected: sys.n * sys.n, got: chi.len() });
    }
    let mut rho = identity(sys.n) * c(chi[0] / sys.n as f64, 0.0);
    for (g, v) in sys.generators.iter().zip(&chi[1..]) {
        rho += g * c(0.5 * v, 0.0);
    }
    Ok(rho)
}

/// Haar second moment: E[<psi|a|psi><psi|b|psi>] = (Tr a Tr b + Tr ab) / (N (N + 1)).
pub fn haar_second_moment(a: &Operator, b: &Operator) -> C64 {
    let n = a.nrows() as f64;
    (a.trace() * b.trace() + trace_product(a, b)) / (n * (n + 1.0))
}

/// Exact integrals over CP^{N-1} (measure total N) of kernel expressions, via Haar moments.
pub mod moments {
    use super::*;

    /// int Pi^{(s)} dOmega.
    pub fn kernel_integral(sys: &SunSystem, s: f64) -> Operator {
        // E[<lambda_k>] = Tr lambda_k / N
        let n = sys.n as f64;
        let coeff = kernel_coefficient(sys.n, s);
        let mut acc = identity(sys.n) / c(n, 0.0);
        for g in sys.generators() {
            acc += g * (g.trace() / n * coeff);
        }
        acc * c(n, 0.0)
    }

    /// int F_A^{(s1)} F_B^{(s2)} dOmega.
    pub fn function_overlap(sys: &SunSystem, a: &Operator, b: &Operator, s1: f64, s2: f64) -> C64 {
        let n = sys.n as f64;
        let ca = kernel_coefficient(sys.n, s1);
        let cb = kernel_coefficient(sys.n, s2);
        let av: Vec<C64> = sys.generators().iter().map(|g| trace_product(a, g)).collect();
        let bv: Vec<C64> = sys.generators().iter().map(|g| trace_product(b, g)).collect();
        // F_A = Tr A / N + ca sum_k <lambda_k> a_k, likewise for B; cross terms vanish since Tr lambda_k = 0
        let mut second = c(0.0, 0.0);
        for (k, gk) in sys.generators().iter().enumerate() {
            for (l, gl) in sys.generators().iter().enumerate() {
                let m = haar_second_moment(gk, gl);
                if m.norm() > 0.0 {
                    second += av[k] * bv[l] * m;
                }
            }
        }
        let mean = a.trace() * b.trace() / (n * n);
        (mean + second * (ca * cb)) * n
    }

    /// int F_A^{(s)}(Omega) Pi^{(-s)}(Omega) dOmega.
    pub fn reverse_transform(sys: &SunSystem, a: &Operator, s: f64) -> Operator {
        let n = sys.n as f64;
        let ca = kernel_coefficient(sys.n, s);
        let cb = kernel_coefficient(sys.n, -s);
        let av: Vec<C64> = sys.generators().iter().map(|g| trace_product(a, g)).collect();
        let mut out = identity(sys.n) * (a.trace() / (n * n));
        for (k, gk) in sys.generators().iter().enumerate() {
            for gl in sys.generators() {
                let m = haar_second_moment(gk, gl);
                if m.norm() > 0.0 {
                    out += gl * (av[k] * m * (ca * cb));
                }
            }
        }
        out * c(n, 0.0)
    }
}

/// Coherent projector |psi><psi| for the point's angles.
pub fn coherent_projector(sys: &SunSystem, p: &SunPoint) -> Result<Operator> {
    Ok(projector(&(euler_rotation_sun(sys, p)? * sys.lowest_weight())))
}
