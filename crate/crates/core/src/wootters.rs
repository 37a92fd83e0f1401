//! Discrete qubit phase space on the 2x2 Wootters lattice.
//!
//! Serialized arrays are row-major with rows indexed by z and columns by x.
//! Multi-qubit lattices use index 2z + x per qubit, first qubit most significant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::kernel::LatticePoint;
use crate::foundation::operator::{c, check_dim, identity, kron_all, pauli_x, pauli_y, pauli_z, trace_product, Operator, C64};

/// Polar angle of the (0,0) phase point: arccos(1/sqrt3).
pub fn theta0() -> f64 {
    (1.0 / 3f64.sqrt()).acos()
}

/// Azimuth of the (0,0) phase point.
pub const PHI0: f64 = -std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DiscreteKind {
    Wigner { s: f64 },
    Weyl,
}

/// Values on the lattice of one or more qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub n_qubits: usize,
    pub kind: DiscreteKind,
    pub values: Vec<C64>,
}

impl DiscreteFunction {
    pub fn get(&self, p: LatticePoint) -> C64 {
        self.values[p.index()]
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// 2x2 layout (rows z, columns x) for a single qubit.
    pub fn as_array(&self) -> Result<[[C64; 2]; 2]> {
        if self.n_qubits != 1 {
            return Err(PsError::Domain("2x2 layout only exists for one qubit".into()));
        }
        Ok([[self.values[0], self.values[1]], [self.values[2], self.values[3]]])
    }
}

fn sign(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Signed Pauli sum (-1)^z sz + (-1)^x sx + (-1)^{z+x} sy.
fn signed_pauli(p: LatticePoint) -> Operator {
    pauli_z() * c(sign(p.z), 0.0) + pauli_x() * c(sign(p.x), 0.0) + pauli_y() * c(sign(p.z ^ p.x), 0.0)
}

/// A^{(s)}(z, x) = I/2 + (3^{s/2}/2) [(-1)^z sz + (-1)^x sx + (-1)^{z+x} sy].
pub fn phase_point_operator(p: LatticePoint, s: f64) -> Result<Operator> {
    crate::su2::check_s(s)?;
    Ok(identity(2) * c(0.5, 0.0) + signed_pauli(p) * c(0.5 * 3f64.powf(s / 2.0), 0.0))
}

/// Kernel change between orderings: Pi^{(s2)} = 3^{(s2-s1)/2} Pi^{(s1)} + (1 - 3^{(s2-s1)/2})/2 I.
pub fn transform_kernel(k: &Operator, s1: f64, s2: f64) -> Operator {
    let f = 3f64.powf((s2 - s1) / 2.0);
    k * c(f, 0.0) + identity(2) * c((1.0 - f) / 2.0, 0.0)
}

/// Same law applied to function values (trace against a unit-trace operator).
pub fn transform_values(values: &[f64], s1: f64, s2: f64) -> Vec<f64> {
    let f = 3f64.powf((s2 - s1) / 2.0);
    values.iter().map(|v| f * v + (1.0 - f) / 2.0).collect()
}

/// (p++, p+-, p-+, p--): signs refer to the z and x alignments.
pub fn feynman_probabilities(rho: &Operator) -> Result<[f64; 4]> {
    check_dim(rho, 2)?;
    let ex = trace_product(rho, &pauli_x()).re;
    let ey = trace_product(rho, &pauli_y()).re;
    let ez = trace_product(rho, &pauli_z()).re;
    let tr = rho.trace().re;
    Ok([
        0.5 * (tr + ex + ey + ez),
        0.5 * (tr - ex - ey + ez),
        0.5 * (tr + ex - ey - ez),
        0.5 * (tr - ex + ey - ez),
    ])
}

/// Discrete Wigner function F^{(s)}(z, x) = Tr[rho A^{(s)}(z, x)] for one qubit.
pub fn wigner(rho: &Operator, s: f64) -> Result<DiscreteFunction> {
    check_dim(rho, 2)?;
    let values = LatticePoint::all()
        .iter()
        .map(|p| Ok(trace_product(rho, &phase_point_operator(*p, s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteFunction { n_qubits: 1, kind: DiscreteKind::Wigner { s }, values })
}

/// Kernel of an n-qubit lattice point given by its flat index.
pub fn multi_phase_point(n: usize, index: usize, s: f64) -> Result<Operator> {
    let mut ops = Vec::with_capacity(n);
    for q in 0..n {
        let local = (index >> (2 * (n - 1 - q))) & 3;
        ops.push(phase_point_operator(LatticePoint::new((local >> 1) as u8, (local & 1) as u8), s)?);
    }
    Ok(kron_all(&ops))
}

/// Tensor-product Wigner function over the 4^n lattice.
pub fn wigner_multi(rho: &Operator, n: usize, s: f64) -> Result<DiscreteFunction> {
    check_dim(rho, 1 << n)?;
    let values = (0..1usize << (2 * n))
        .map(|k| Ok(trace_product(rho, &multi_phase_point(n, k, s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteFunction { n_qubits: n, kind: DiscreteKind::Wigner { s }, values })
}

/// rho = (1/2)^n sum_k W^{(s)}(k) A^{(-s)}(k).
pub fn reverse_transform(f: &DiscreteFunction) -> Result<Operator> {
    let s = match f.kind {
        DiscreteKind::Wigner { s } => s,
        DiscreteKind::Weyl => return Err(PsError::Domain("reverse transform needs a Wigner-type function".into())),
    };
    let n = f.n_qubits;
    let d = 1usize << n;
    let mut rho = Operator::zeros(d, d);
    let w = 0.5f64.powi(n as i32);
    for (k, v) in f.values.iter().enumerate() {
        rho += multi_phase_point(n, k, -s)? * (v * w);
    }
    Ok(rho)
}

/// D2(z, x) = e^{i pi x z/2} sx^x sz^z.
pub fn discrete_displacement(p: LatticePoint) -> Operator {
    let mut d = identity(2);
    if p.x == 1 {
        d = d * pauli_x();
    }
    if p.z == 1 {
        d = d * pauli_z();
    }
    d * C64::from_polar(1.0, PI * (p.x * p.z) as f64 / 2.0)
}

/// Tensor product of single-qubit displacements for a flat n-qubit index.
pub fn multi_displacement(n: usize, index: usize) -> Operator {
    let ops: Vec<Operator> = (0..n)
        .map(|q| {
            let local = (index >> (2 * (n - 1 - q))) & 3;
            discrete_displacement(LatticePoint::new((local >> 1) as u8, (local & 1) as u8))
        })
        .collect();
    kron_all(&ops)
}

/// X(zt, xt) = Tr[rho D2(zt, xt)].
pub fn discrete_weyl(rho: &Operator) -> Result<DiscreteFunction> {
    check_dim(rho, 2)?;
    let values = LatticePoint::all().iter().map(|p| trace_product(rho, &discrete_displacement(*p))).collect();
    Ok(DiscreteFunction { n_qubits: 1, kind: DiscreteKind::Weyl, values })
}

/// rho = 1/2 sum X(zt, xt) D2(zt, xt).
pub fn weyl_inverse(f: &DiscreteFunction) -> Result<Operator> {
    if f.kind != DiscreteKind::Weyl || f.n_qubits != 1 {
        return Err(PsError::Domain("weyl_inverse needs a single-qubit Weyl function".into()));
    }
    let mut rho = Operator::zeros(2, 2);
    for p in LatticePoint::all() {
        rho += discrete_displacement(p) * (f.get(p) * 0.5);
    }
    Ok(rho)
}

/// Discrete Fourier pair between the s = 0 Wigner function and the Weyl function:
/// W(z,x) = 1/2 sum X(zt,xt) (-1)^{z zt + x xt} and its inverse (same kernel).
pub fn dft_wigner_weyl(f: &DiscreteFunction) -> Result<DiscreteFunction> {
    if f.n_qubits != 1 {
        return Err(PsError::Domain("DFT implemented for one qubit".into()));
    }
    let kind = match f.kind {
        DiscreteKind::Weyl => DiscreteKind::Wigner { s: 0.0 },
        DiscreteKind::Wigner { s } if s == 0.0 => DiscreteKind::Weyl,
        DiscreteKind::Wigner { .. } => {
            return Err(PsError::Domain("DFT pairs the Weyl function with the s = 0 Wigner function".into()))
        }
    };
    let mut out = vec![c(0.0, 0.0); 4];
    for a in LatticePoint::all() {
        let mut acc = c(0.0, 0.0);
        for b in LatticePoint::all() {
            acc += f.get(b) * sign((a.z & b.z) ^ (a.x & b.x));
        }
        out[a.index()] = acc * 0.5;
    }
    Ok(DiscreteFunction { n_qubits: 1, kind, values: out })
}

/// Sphere angles (theta, phi) whose Stratonovich kernel equals A^{(s)}(z, x),
/// with theta in [0, pi] and phi in [0, 2 pi).
pub fn stratonovich_embedding(p: LatticePoint) -> (f64, f64) {
    let theta = theta0() + p.z as f64 * PI;
    let phi = PHI0 + (2.0 * p.x as f64 - p.z as f64) * PI / 2.0;
    canonical_angles(theta, phi)
}

/// Reduces (theta, phi) to theta in [0, pi], phi in [0, 2 pi) describing the same axis.
pub fn canonical_angles(theta: f64, phi: f64) -> (f64, f64) {
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    let mut f = phi;
    if t > PI {
        t = two_pi - t;
        f += PI;
    }
    (t, f.rem_euclid(two_pi))
}

/// Bloch vector (n_x, n_y, n_z) of the kernel at a lattice point.
pub fn phase_point_vector(p: LatticePoint) -> [f64; 3] {
    let r = 1.0 / 3f64.sqrt();
    [sign(p.x) * r, sign(p.z ^ p.x) * r, sign(p.z) * r]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::kernel::EulerPoint;
    use crate::foundation::operator::{max_abs, random_density};
    use crate::su2::SpinSystem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn up() -> Operator {
        let mut r = Operator::zeros(2, 2);
        r[(0, 0)] = c(1.0, 0.0);
        r
    }

    #[test]
    fn origin_kernel_spectrum() {
        let a = phase_point_operator(LatticePoint::new(0, 0), 0.0).unwrap();
        let (vals, _) = crate::foundation::operator::hermitian_eigen(&a);
        let s3 = 3f64.sqrt();
        assert!((vals[0] - (1.0 - s3) / 2.0).abs() < 1e-14);
        assert!((vals[1] - (1.0 + s3) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn frame_duality() {
        for p in LatticePoint::all() {
            let m = phase_point_operator(p, -1.0).unwrap();
            let pk = phase_point_operator(p, 1.0).unwrap();
            assert!(max_abs(&(m * c(3.0, 0.0) - identity(2) - &pk)) < 1e-14);
            let t = transform_kernel(&phase_point_operator(p, -1.0).unwrap(), -1.0, 1.0);
            assert!(max_abs(&(t - pk)) < 1e-14);
        }
    }

    #[test]
    fn feynman_examples() {
        assert_eq!(feynman_probabilities(&up()).unwrap(), [1.0, 1.0, 0.0, 0.0]);
        let plus = Operator::from_element(2, 2, c(0.5, 0.0));
        let f = feynman_probabilities(&plus).unwrap();
        for (a, b) in f.iter().zip([1.0, 0.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let f = feynman_probabilities(&(identity(2) * c(0.5, 0.0))).unwrap();
        assert!(f.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn feynman_matches_wigner() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        let f = feynman_probabilities(&rho).unwrap();
        let w = wigner(&rho, 0.0).unwrap();
        for k in 0..4 {
            assert!((w.values[k].re - f[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn weyl_examples_and_inverse() {
        let x = discrete_weyl(&up()).unwrap();
        let expect = [1.0, 0.0, 1.0, 0.0]; // (0,0), (0,1), (1,0), (1,1)
        for (v, e) in x.values.iter().zip(expect) {
            assert!((v - c(e, 0.0)).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(2, &mut rng);
        let back = weyl_inverse(&discrete_weyl(&rho).unwrap()).unwrap();
        assert!(max_abs(&(back - rho)) < 1e-14);
    }

    #[test]
    fn dft_pairs_weyl_and_wigner() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let rho = random_density(2, &mut rng);
            let x = discrete_weyl(&rho).unwrap();
            let w = dft_wigner_weyl(&x).unwrap();
            let direct = wigner(&rho, 0.0).unwrap();
            for k in 0..4 {
                assert!((w.values[k] - direct.values[k]).norm() < 1e-14);
            }
            let back = dft_wigner_weyl(&w).unwrap();
            for k in 0..4 {
                assert!((back.values[k] - x.values[k]).norm() < 1e-14);
            }
        }
        let mixed = wigner(&(identity(2) * c(0.5, 0.0)), 0.0).unwrap();
        assert!(mixed.values.iter().all(|v| (v.re - 0.5).abs() < 1e-15));
    }

    #[test]
    fn embedding_matches_spin_kernel() {
        let spin = SpinSystem::from_two_j(1);
        let (t, f) = stratonovich_embedding(LatticePoint::new(0, 0));
        assert!((t - 0.955316618124509).abs() < 1e-12);
        assert!((f - (2.0 * PI - std::f64::consts::FRAC_PI_4)).abs() < 1e-12);
        for s in [-1.0, 0.0, 1.0] {
            for p in LatticePoint::all() {
                let (t, f) = stratonovich_embedding(p);
                let k = spin.kernel_at(s, EulerPoint::sphere(t, f)).unwrap();
                assert!(max_abs(&(k - phase_point_operator(p, s).unwrap())) < 1e-12);
            }
        }
    }

    #[test]
    fn tetrahedron() {
        let pts = LatticePoint::all();
        for a in 0..4 {
            for b in (a + 1)..4 {
                let u = phase_point_vector(pts[a]);
                let v = phase_point_vector(pts[b]);
                let dot: f64 = (0..3).map(|i| u[i] * v[i]).sum::<f64>();
                assert!((dot + 1.0 / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn displacement_covariance_swaps_labels() {
        let a00 = phase_point_operator(LatticePoint::new(0, 0), 0.0).unwrap();
        for p in LatticePoint::all() {
            let d = discrete_displacement(LatticePoint::new(p.x, p.z));
            let moved = &d * &a00 * d.adjoint();
            assert!(max_abs(&(moved - phase_point_operator(p, 0.0).unwrap())) < 1e-14);
        }
    }

    #[test]
    fn multi_qubit_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(4, &mut rng);
        for s in [-1.0, 0.0, 1.0] {
            let w = wigner_multi(&rho, 2, s).unwrap();
            assert!(max_abs(&(reverse_transform(&w).unwrap() - &rho)) < 1e-13);
        }
    }
}
