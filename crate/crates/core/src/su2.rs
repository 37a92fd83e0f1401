//! Spin-j (SU(2)) phase space: rotations, multipoles, s-parameterized
//! parities and kernels, and Wigner/Q/P/Weyl evaluation on the sphere.
//!
//! Basis order is |j,j>, |j,j-1>, ..., |j,-j>. Rotations use
//! U(phi, theta, Phi) = exp(i phi Jz) exp(-i theta Jy) exp(i Phi Jz), for which
//! the kernel at (theta, phi) is aligned with n = (sin t cos p, -sin t sin p, cos t).

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{PsError, Result};
use crate::foundation::kernel::{Domain, EulerPoint, KernelSpec, SampledFunction};
use crate::foundation::operator::{c, check_dim, trace_product, Ket, Operator, C64};
use crate::foundation::quadrature::SphereGrid;
use crate::foundation::special::{cg_twice, lm_index, spherical_harmonics_upto};

/// Largest |coefficient| in the s-parity before a conditioning warning is raised.
pub const CONDITIONING_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SpinSystem {
    pub two_j: u32,
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
    pub jp: Operator,
    pub jm: Operator,
    jx_vals: Vec<f64>,
    jx_vecs: DMatrix<f64>,
}

impl SpinSystem {
    pub fn new(j: f64) -> Result<SpinSystem> {
        let t = crate::foundation::special::twice(j)?;
        if t < 0 {
            return Err(PsError::Domain(format!("spin j = {j} is negative")));
        }
        Ok(SpinSystem::from_two_j(t as u32))
    }

    pub fn from_two_j(two_j: u32) -> SpinSystem {
        let d = two_j as usize + 1;
        let j = two_j as f64 / 2.0;
        let mut jp = Operator::zeros(d, d);
        let mut jz = Operator::zeros(d, d);
        for i in 0..d {
            let m = j - i as f64;
            jz[(i, i)] = c(m, 0.0);
            if i > 0 {
                // J+ |j, m> = sqrt(j(j+1) - m(m+1)) |j, m+1>
                jp[(i - 1, i)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
            }
        }
        let jm = jp.adjoint();
        let jx = (&jp + &jm) * c(0.5, 0.0);
        let jy = (&jp - &jm) * c(0.0, -0.5);
        let jx_real = DMatrix::from_fn(d, d, |a, b| jx[(a, b)].re);
        let eig = SymmetricEigen::new(jx_real);
        SpinSystem {
            two_j,
            jx,
            jy,
            jz,
            jp,
            jm,
            jx_vals: eig.eigenvalues.iter().copied().collect(),
            jx_vecs: eig.eigenvectors,
        }
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Magnetic quantum number of basis index i.
    pub fn m_of(&self, i: usize) -> f64 {
        self.j() - i as f64
    }

    pub fn spec(&self, s: f64) -> Result<KernelSpec> {
        KernelSpec::new(crate::foundation::kernel::Family::Su2 { two_j: self.two_j }, s)
    }

    fn z_phase(&self, angle: f64) -> Vec<C64> {
        (0..self.dim()).map(|i| C64::from_polar(1.0, angle * self.m_of(i))).collect()
    }

    /// exp(-i theta Jy), the (real) Wigner small-d matrix.
    pub fn small_d(&self, theta: f64) -> Operator {
        let d = self.dim();
        // exp(-i t Jx) from the real eigenbasis of Jx
        let mut ex = Operator::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut s = c(0.0, 0.0);
                for k in 0..d {
                    s += C64::from_polar(self.jx_vecs[(a, k)] * self.jx_vecs[(b, k)], -theta * self.jx_vals[k]);
                }
                ex[(a, b)] = s;
            }
        }
        // Jy = R Jx R^dag with R = exp(-i pi/2 Jz)
        let r = self.z_phase(-std::f64::consts::FRAC_PI_2);
        Operator::from_fn(d, d, |a, b| r[a] * ex[(a, b)] * r[b].conj())
    }

    /// U = exp(i phi Jz) exp(-i theta Jy) exp(i Phi Jz).
    pub fn euler_rotation(&self, p: EulerPoint) -> Operator {
        let left = self.z_phase(p.phi);
        let right = self.z_phase(p.big_phi);
        let dm = self.small_d(p.theta);
        let d = self.dim();
        Operator::from_fn(d, d, |a, b| left[a] * dm[(a, b)] * right[b])
    }

    /// Spin coherent state U(phi, theta, 0)|j, j>.
    pub fn coherent_state(&self, theta: f64, phi: f64) -> Ket {
        let u = self.euler_rotation(EulerPoint::sphere(theta, phi));
        u.column(0).into_owned()
    }

    /// Fano multipole T_lm.
    pub fn multipole(&self, l: usize, m: i64) -> Result<Operator> {
        if l > self.two_j as usize {
            return Err(PsError::Domain(format!("multipole rank l = {l} exceeds 2j = {}", self.two_j)));
        }
        if m.unsigned_abs() as usize > l {
            return Err(PsError::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        let d = self.dim();
        let tj = self.two_j as i64;
        let norm = ((2 * l + 1) as f64 / d as f64).sqrt();
        let mut t = Operator::zeros(d, d);
        for col in 0..d {
            let tmp = tj - 2 * col as i64; // 2 m'
            for row in 0..d {
                let tn = tj - 2 * row as i64;
                if tmp + 2 * m != tn {
                    continue;
                }
                let cg = cg_twice(tj, tmp, 2 * l as i64, 2 * m, tj, tn)?;
                t[(row, col)] = c(norm * cg, 0.0);
            }
        }
        Ok(t)
    }

    /// C^{jj}_{jj,l0}, positive for every l <= 2j.
    pub fn top_cg(&self, l: usize) -> f64 {
        let tj = self.two_j as i64;
        cg_twice(tj, tj, 2 * l as i64, 0, tj, tj).expect("valid coupling")
    }

    /// Per-rank factors (C^{jj}_{jj,l0})^{-s}.
    pub fn rank_factors(&self, s: f64) -> Vec<f64> {
        (0..=self.two_j as usize).map(|l| self.top_cg(l).powf(-s)).collect()
    }

    /// Diagonal of the generalized parity.
    pub fn parity_diagonal(&self, s: f64) -> Result<Vec<f64>> {
        check_s(s)?;
        let d = self.dim();
        let tj = self.two_j as i64;
        let factors = self.rank_factors(s);
        if let Some(f) = factors.iter().find(|f| f.abs() > CONDITIONING_LIMIT || !f.is_finite()) {
            return Err(PsError::Domain(format!("parity coefficient {f:.3e} beyond conditioning limit")));
        }
        let mut diag = vec![0.0; d];
        for (n, v) in diag.iter_mut().enumerate() {
            let tn = tj - 2 * n as i64;
            for (l, f) in factors.iter().enumerate() {
                let cg = cg_twice(tj, tn, 2 * l as i64, 0, tj, tn)?;
                *v += (2 * l + 1) as f64 / d as f64 * f * cg;
            }
        }
        Ok(diag)
    }

    pub fn parity_s(&self, s: f64) -> Result<Operator> {
        Ok(crate::foundation::operator::diag_real(&self.parity_diagonal(s)?))
    }

    /// U Pi^{(s)} U^dag at the given point.
    pub fn kernel_at(&self, s: f64, p: EulerPoint) -> Result<Operator> {
        let diag = self.parity_diagonal(s)?;
        Ok(self.kernel_from_diag(&diag, p))
    }

    pub fn kernel_from_diag(&self, diag: &[f64], p: EulerPoint) -> Operator {
        let u = self.euler_rotation(EulerPoint::sphere(p.theta, p.phi));
        let d = self.dim();
        let mut k = Operator::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut s = c(0.0, 0.0);
                for (n, w) in diag.iter().enumerate() {
                    s += u[(a, n)] * u[(b, n)].conj() * *w;
                }
                k[(a, b)] = s;
            }
        }
        k
    }

    /// Tr[rho U Pi U^dag] using only the diagonal of U^dag rho U.
    pub fn value_with_diag(&self, rho: &Operator, diag: &[f64], theta: f64, phi: f64) -> C64 {
        let u = self.euler_rotation(EulerPoint::sphere(theta, phi));
        let d = self.dim();
        let mut total = c(0.0, 0.0);
        for (n, w) in diag.iter().enumerate() {
            let col = u.column(n);
            let mut acc = c(0.0, 0.0);
            for a in 0..d {
                let mut ra = c(0.0, 0.0);
                for b in 0..d {
                    ra += rho[(a, b)] * col[b];
                }
                acc += col[a].conj() * ra;
            }
            total += acc * *w;
        }
        total
    }
}

pub fn check_s(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) || !s.is_finite() {
        return Err(PsError::Domain(format!("ordering parameter s = {s} outside [-1, 1]")));
    }
    Ok(())
}

/// Kernel axis for (theta, phi) under the rotation convention of this module.
pub fn kernel_direction(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), -theta.sin() * phi.sin(), theta.cos()]
}

/// Inverse of [`kernel_direction`], theta in [0, pi], phi in [0, 2 pi).
pub fn direction_angles(n: [f64; 3]) -> (f64, f64) {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let theta = (n[2] / r).clamp(-1.0, 1.0).acos();
    let mut phi = (-n[1]).atan2(n[0]);
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    (theta, phi)
}

/// SO(3) matrix R with U Pi(n) U^dag = Pi(R n) for the rotation U(p).
pub fn so3_matrix(p: EulerPoint) -> [[f64; 3]; 3] {
    let half = SpinSystem::from_two_j(1);
    let u = half.euler_rotation(p);
    let paulis = [
        crate::foundation::operator::pauli_x(),
        crate::foundation::operator::pauli_y(),
        crate::foundation::operator::pauli_z(),
    ];
    let mut r = [[0.0; 3]; 3];
    for b in 0..3 {
        let rot = &u * &paulis[b] * u.adjoint();
        for a in 0..3 {
            r[a][b] = 0.5 * trace_product(&paulis[a], &rot).re;
        }
    }
    r
}

fn check_grid_degree(grid: &SphereGrid, need: usize) -> Result<()> {
    if grid.exact_degree < need {
        return Err(PsError::GridDegree { need, have: grid.exact_degree });
    }
    Ok(())
}

/// F^{(s)}(theta, phi) = Tr[rho Pi^{(s)}(theta, phi)] on every node.
pub fn evaluate(sys: &SpinSystem, rho: &Operator, s: f64, grid: &SphereGrid) -> Result<SampledFunction> {
    check_dim(rho, sys.dim())?;
    check_grid_degree(grid, sys.two_j as usize)?;
    let diag = sys.parity_diagonal(s)?;
    let values: Vec<C64> =
        grid.nodes.par_iter().map(|n| sys.value_with_diag(rho, &diag, n.theta, n.phi)).collect();
    let hermitian = crate::foundation::operator::hermiticity_defect(rho) < 1e-12;
    let mut f = SampledFunction::new(sys.spec(s)?, Domain::Sphere(grid.for_spin(sys.two_j)), values, hermitian);
    if hermitian {
        for v in f.values.iter_mut() {
            v.im = 0.0;
        }
    }
    Ok(f)
}

/// Value at a single point.
pub fn evaluate_point(sys: &SpinSystem, rho: &Operator, s: f64, theta: f64, phi: f64) -> Result<C64> {
    check_dim(rho, sys.dim())?;
    let diag = sys.parity_diagonal(s)?;
    Ok(sys.value_with_diag(rho, &diag, theta, phi))
}

/// Husimi function, evaluated directly as <Omega|rho|Omega>.
pub fn q_function(sys: &SpinSystem, rho: &Operator, grid: &SphereGrid) -> Result<SampledFunction> {
    check_dim(rho, sys.dim())?;
    check_grid_degree(grid, sys.two_j as usize)?;
    let values: Vec<C64> = grid
        .nodes
        .par_iter()
        .map(|n| {
            let k = sys.coherent_state(n.theta, n.phi);
            (k.adjoint() * rho * &k)[(0, 0)]
        })
        .collect();
    Ok(SampledFunction::new(sys.spec(-1.0)?, Domain::Sphere(grid.for_spin(sys.two_j)), values, true))
}

/// Multipole coefficients Tr[T_lm rho], flat layout lm_index.
pub fn multipole_moments(sys: &SpinSystem, rho: &Operator) -> Result<Vec<C64>> {
    check_dim(rho, sys.dim())?;
    let lmax = sys.two_j as usize;
    let mut out = vec![c(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            out[lm_index(l, m)] = trace_product(&sys.multipole(l, m)?, rho);
        }
    }
    Ok(out)
}

/// Operator from moments t_lm = Tr[T_lm A]: A = sum (-1)^m t_{l,-m} T_lm.
pub fn operator_from_moments(sys: &SpinSystem, moments: &[C64]) -> Result<Operator> {
    let lmax = sys.two_j as usize;
    let d = sys.dim();
    let mut a = Operator::zeros(d, d);
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            // Tr[T_lm^dag A] = (-1)^m Tr[T_{l,-m} A]
            let coef = moments[lm_index(l, -m)] * sign;
            a += sys.multipole(l, m)? * coef;
        }
    }
    Ok(a)
}

/// Harmonic coefficients of F^{(s)}: F = sum c_lm Y_lm, with
/// c_lm = sqrt(4 pi/(2j+1)) (C^{jj}_{jj,l0})^{-s} Tr[rho T_lm].
pub fn harmonic_coefficients(sys: &SpinSystem, rho: &Operator, s: f64) -> Result<Vec<C64>> {
    check_s(s)?;
    let moments = multipole_moments(sys, rho)?;
    let pref = (4.0 * std::f64::consts::PI / sys.dim() as f64).sqrt();
    let factors = sys.rank_factors(s);
    let lmax = sys.two_j as usize;
    let mut out = moments;
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            out[lm_index(l, m)] *= pref * factors[l];
        }
    }
    Ok(out)
}

/// Inverse of [`harmonic_coefficients`].
pub fn operator_from_harmonics(sys: &SpinSystem, coeffs: &[C64], s: f64) -> Result<Operator> {
    check_s(s)?;
    let pref = (4.0 * std::f64::consts::PI / sys.dim() as f64).sqrt();
    let factors = sys.rank_factors(s);
    let lmax = sys.two_j as usize;
    let mut moments = coeffs.to_vec();
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            moments[lm_index(l, m)] /= pref * factors[l];
        }
    }
    operator_from_moments(sys, &moments)
}

/// Evaluates a harmonic expansion sum c_lm Y_lm at a point.
pub fn eval_harmonics(coeffs: &[C64], lmax: usize, theta: f64, phi: f64) -> C64 {
    let y = spherical_harmonics_upto(lmax, theta, phi);
    coeffs.iter().zip(&y).map(|(a, b)| a * b).sum()
}

/// P function: expands P = sum p_lm Y_lm and solves rho = int P |Omega><Omega| dOmega
/// mode by mode (the system is diagonal in the multipole basis).
pub fn p_reconstruct(sys: &SpinSystem, rho: &Operator, grid: &SphereGrid) -> Result<SampledFunction> {
    check_dim(rho, sys.dim())?;
    check_grid_degree(grid, sys.two_j as usize)?;
    let lmax = sys.two_j as usize;
    let moments = multipole_moments(sys, rho)?;
    // |Omega><Omega| = pref sum C_l Y_lm T_lm; with P = sum p_lm Y_lm and
    // int Y_l'm' Y_lm dS = (-1)^m delta, mode (l,m) of rho fixes p_lm alone.
    let pref = (4.0 * std::f64::consts::PI / sys.dim() as f64).sqrt();
    let meas = sys.dim() as f64 / (4.0 * std::f64::consts::PI);
    let mut p = moments;
    for l in 0..=lmax {
        let cl = sys.top_cg(l);
        for m in -(l as i64)..=(l as i64) {
            p[lm_index(l, m)] /= pref * cl * meas;
        }
    }
    let values: Vec<C64> = grid.nodes.iter().map(|n| eval_harmonics(&p, lmax, n.theta, n.phi)).collect();
    Ok(SampledFunction::new(sys.spec(1.0)?, Domain::Sphere(grid.for_spin(sys.two_j)), values, true))
}

/// Weyl characteristic function Tr[rho U(phi, theta, Phi)].
pub fn weyl(sys: &SpinSystem, rho: &Operator, p: EulerPoint) -> Result<C64> {
    check_dim(rho, sys.dim())?;
    Ok(trace_product(rho, &sys.euler_rotation(p)))
}

/// Product net of (4j+2)^3 Euler points used for Weyl inversion.
pub fn weyl_net(sys: &SpinSystem) -> Vec<EulerPoint> {
    let k = 2 * sys.two_j as usize + 2;
    let mut pts = Vec::with_capacity(k * k * k);
    let two_pi = 2.0 * std::f64::consts::PI;
    for a in 0..k {
        for b in 0..k {
            for g in 0..k {
                pts.push(EulerPoint::new(
                    two_pi * a as f64 / k as f64,
                    std::f64::consts::PI * (b as f64 + 0.5) / k as f64,
                    two_pi * g as f64 / k as f64,
                ));
            }
        }
    }
    pts
}

/// Least-squares inversion chi(p) = Tr[rho U(p)] for rho; returns the operator
/// and the smallest singular value of the design matrix.
pub fn reconstruct_from_weyl(sys: &SpinSystem, samples: &[(EulerPoint, C64)]) -> Result<(Operator, f64)> {
    let d = sys.dim();
    let unknowns = d * d;
    let mut a = DMatrix::<C64>::zeros(samples.len(), unknowns);
    let mut y = DMatrix::<C64>::zeros(samples.len(), 1);
    for (r, (p, v)) in samples.iter().enumerate() {
        let u = sys.euler_rotation(*p);
        // Tr[rho U] = sum_{ab} rho_ab U_ba
        for i in 0..d {
            for k in 0..d {
                a[(r, i * d + k)] = u[(k, i)];
            }
        }
        y[(r, 0)] = *v;
    }
    let svd = a.clone().svd(true, true);
    let smin = svd.singular_values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if smin < 1e-10 {
        return Err(PsError::RankDeficient(svd.singular_values.max() / smin.max(1e-300)));
    }
    let x = svd.solve(&y, 1e-12).map_err(|e| PsError::Domain(e.to_string()))?;
    let rho = Operator::from_fn(d, d, |i, k| x[(i * d + k, 0)]);
    Ok((rho, smin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::operator::{expm, identity, max_abs, random_density};
    use crate::foundation::quadrature::sphere_quadrature;
    use crate::foundation::special::spherical_harmonic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S3: f64 = 1.7320508075688772;

    #[test]
    fn commutators() {
        for tj in 1..6 {
            let s = SpinSystem::from_two_j(tj);
            let comm = &s.jx * &s.jy - &s.jy * &s.jx;
            assert!(max_abs(&(comm - &s.jz * c(0.0, 1.0))) < 1e-12);
        }
    }

    #[test]
    fn small_d_matches_expm() {
        for tj in 1..6 {
            let s = SpinSystem::from_two_j(tj);
            let d = s.small_d(0.83);
            let e = expm(&(&s.jy * c(0.0, -0.83)));
            assert!(max_abs(&(d - e)) < 1e-12);
        }
    }

    #[test]
    fn rotation_examples() {
        let s = SpinSystem::from_two_j(3);
        let u = s.euler_rotation(EulerPoint::new(0.0, 0.0, 0.0));
        assert!(max_abs(&(u - identity(4))) < 1e-14);
        let u = s.euler_rotation(EulerPoint::new(0.0, std::f64::consts::PI, 0.0));
        assert!((u[(3, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_rotation_identity() {
        // U(phi, theta, -phi) = exp(xi J+ - xi* J-) with xi = -theta e^{i phi}/2
        let s = SpinSystem::from_two_j(1);
        let (phi, theta) = (0.7, 1.1);
        let u = s.euler_rotation(EulerPoint::new(phi, theta, -phi));
        let xi = C64::from_polar(-theta / 2.0, phi);
        let gen = &s.jp * xi - &s.jm * xi.conj();
        assert!(max_abs(&(u - expm(&gen))) < 1e-12);
    }

    #[test]
    fn qubit_parities() {
        let s = SpinSystem::from_two_j(1);
        let w = s.parity_diagonal(0.0).unwrap();
        assert!((w[0] - (1.0 + S3) / 2.0).abs() < 1e-14 && (w[1] - (1.0 - S3) / 2.0).abs() < 1e-14);
        let q = s.parity_diagonal(-1.0).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-14 && q[1].abs() < 1e-14);
        let p = s.parity_diagonal(1.0).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-14 && (p[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn q_parity_is_top_projector() {
        for tj in 1..=5 {
            let s = SpinSystem::from_two_j(tj);
            let q = s.parity_diagonal(-1.0).unwrap();
            assert!((q[0] - 1.0).abs() < 1e-12);
            assert!(q[1..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn multipole_orthonormal_and_qubit_t10() {
        let s = SpinSystem::from_two_j(3);
        let mut basis = Vec::new();
        for l in 0..=3 {
            for m in -(l as i64)..=(l as i64) {
                basis.push(s.multipole(l, m).unwrap());
            }
        }
        for (i, a) in basis.iter().enumerate() {
            for (k, b) in basis.iter().enumerate() {
                let ip = trace_product(&a.adjoint(), b);
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((ip - c(e, 0.0)).norm() < 1e-12);
            }
        }
        let q = SpinSystem::from_two_j(1);
        let t10 = q.multipole(1, 0).unwrap();
        let expect = crate::foundation::operator::pauli_z() * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(max_abs(&(t10 - expect)) < 1e-14);
    }

    #[test]
    fn kernel_multipole_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        for tj in 1..=4 {
            let s = SpinSystem::from_two_j(tj);
            let pref = (4.0 * std::f64::consts::PI / s.dim() as f64).sqrt();
            for _ in 0..10 {
                let theta = rng.random::<f64>() * std::f64::consts::PI;
                let phi = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
                let k = s.kernel_at(0.0, EulerPoint::sphere(theta, phi)).unwrap();
                let mut e = Operator::zeros(s.dim(), s.dim());
                for l in 0..=tj as usize {
                    for m in -(l as i64)..=(l as i64) {
                        let y = spherical_harmonic(l, m, theta, phi).unwrap();
                        e += s.multipole(l, m).unwrap() * (y * pref);
                    }
                }
                assert!(max_abs(&(k - e)) < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_phi_independence_and_flip() {
        let s = SpinSystem::from_two_j(1);
        let a = s.kernel_at(0.0, EulerPoint::new(0.4, 1.0, 0.0)).unwrap();
        let b = s.kernel_at(0.0, EulerPoint::new(0.4, 1.0, 1.3)).unwrap();
        assert!(max_abs(&(a - b)) < 1e-12);
        let f = s.kernel_at(0.0, EulerPoint::sphere(std::f64::consts::PI, 0.0)).unwrap();
        assert!((f[(0, 0)].re - (1.0 - S3) / 2.0).abs() < 1e-12);
        assert!((f[(1, 1)].re - (1.0 + S3) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_axis_matches_direction() {
        let s = SpinSystem::from_two_j(1);
        let (theta, phi) = (0.9, 2.2);
        let k = s.kernel_at(0.0, EulerPoint::sphere(theta, phi)).unwrap();
        let n = kernel_direction(theta, phi);
        let paulis = [
            crate::foundation::operator::pauli_x(),
            crate::foundation::operator::pauli_y(),
            crate::foundation::operator::pauli_z(),
        ];
        for (i, p) in paulis.iter().enumerate() {
            let v = trace_product(&k, p).re;
            assert!((v - S3 * n[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_up_wigner_and_q() {
        let s = SpinSystem::from_two_j(1);
        let mut rho = Operator::zeros(2, 2);
        rho[(0, 0)] = c(1.0, 0.0);
        let g = sphere_quadrature(4);
        let w = evaluate(&s, &rho, 0.0, &g).unwrap();
        let q = q_function(&s, &rho, &g).unwrap();
        let qs = evaluate(&s, &rho, -1.0, &g).unwrap();
        for (k, n) in g.nodes.iter().enumerate() {
            assert!((w.values[k].re - 0.5 * (1.0 + S3 * n.theta.cos())).abs() < 1e-12);
            assert!((q.values[k].re - (n.theta / 2.0).cos().powi(2)).abs() < 1e-12);
            assert!((q.values[k] - qs.values[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn p_reconstruct_matches_s_plus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for tj in 1..=4 {
            let s = SpinSystem::from_two_j(tj);
            let rho = random_density(s.dim(), &mut rng);
            let g = sphere_quadrature(2 * tj as usize);
            let p = p_reconstruct(&s, &rho, &g).unwrap();
            let direct = evaluate(&s, &rho, 1.0, &g).unwrap();
            for (a, b) in p.values.iter().zip(&direct.values) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn harmonics_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = SpinSystem::from_two_j(3);
        let rho = random_density(4, &mut rng);
        for sv in [-1.0, 0.0, 1.0] {
            let cf = harmonic_coefficients(&s, &rho, sv).unwrap();
            let back = operator_from_harmonics(&s, &cf, sv).unwrap();
            assert!(max_abs(&(back - &rho)) < 1e-12);
            let v = eval_harmonics(&cf, 3, 0.4, 1.9);
            let direct = evaluate_point(&s, &rho, sv, 0.4, 1.9).unwrap();
            assert!((v - direct).norm() < 1e-11);
        }
    }

    #[test]
    fn weyl_examples() {
        let s = SpinSystem::from_two_j(1);
        let mut up = Operator::zeros(2, 2);
        up[(0, 0)] = c(1.0, 0.0);
        let v = weyl(&s, &up, EulerPoint::new(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 0.0)).unwrap();
        let expect = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_PI_4);
        assert!((v - expect).norm() < 1e-12);
        assert!((weyl(&s, &up, EulerPoint::new(0.0, 0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn weyl_net_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for tj in 1..=3 {
            let s = SpinSystem::from_two_j(tj);
            let rho = random_density(s.dim(), &mut rng);
            let samples: Vec<_> = weyl_net(&s).into_iter().map(|p| (p, weyl(&s, &rho, p).unwrap())).collect();
            let (back, _) = reconstruct_from_weyl(&s, &samples).unwrap();
            assert!(max_abs(&(back - &rho)) < 1e-8);
        }
    }
}
