//! Dense complex operators and the small amount of linear algebra the
//! phase-space code needs on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{PsError, Result};

pub type C64 = Complex64;
pub type Operator = DMatrix<C64>;
pub type Ket = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIG_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> Operator {
    Operator::identity(d, d)
}

pub fn zeros(d: usize) -> Operator {
    Operator::zeros(d, d)
}

pub fn diag_real(v: &[f64]) -> Operator {
    let mut m = zeros(v.len());
    for (i, x) in v.iter().enumerate() {
        m[(i, i)] = c(*x, 0.0);
    }
    m
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

pub fn kron_all(ops: &[Operator]) -> Operator {
    let mut out = identity(1);
    for o in ops {
        out = out.kronecker(o);
    }
    out
}

pub fn projector(v: &Ket) -> Operator {
    v * v.adjoint()
}

/// Tr[A B] without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn hermiticity_defect(m: &Operator) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Largest singular value.
pub fn op_norm(m: &Operator) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

pub fn trace_norm(m: &Operator) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &Operator) -> (Vec<f64>, Operator) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(m.nrows());
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn expm(m: &Operator) -> Operator {
    m.exp()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

pub fn check_square(m: &Operator) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(PsError::Domain(format!(
            "operator must be square and nonempty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn check_dim(m: &Operator, d: usize) -> Result<()> {
    check_square(m)?;
    if m.nrows() != d {
        return Err(PsError::Dimension { expected: d, got: m.nrows() });
    }
    Ok(())
}

pub fn check_hermitian(m: &Operator) -> Result<()> {
    check_square(m)?;
    let d = hermiticity_defect(m);
    if d > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(PsError::NotHermitian(d));
    }
    Ok(())
}

/// Hermitian, unit trace, eigenvalues above -1e-10.
pub fn check_density(m: &Operator) -> Result<()> {
    check_hermitian(m)?;
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(PsError::NotDensity(format!("trace is {:.12} + {:.3e}i", tr.re, tr.im)));
    }
    let (vals, _) = hermitian_eigen(m);
    if vals[0] < -EIG_TOL {
        return Err(PsError::NotDensity(format!("negative eigenvalue {:.3e}", vals[0])));
    }
    Ok(())
}

/// Partial trace keeping the listed subsystems (in their original order).
pub fn partial_trace(rho: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    let total: usize = dims.iter().product();
    check_dim(rho, total)?;
    for &k in keep {
        if k >= dims.len() {
            return Err(PsError::Domain(format!("subsystem index {k} out of range")));
        }
    }
    let n = dims.len();
    let kept: Vec<usize> = (0..n).filter(|i| keep.contains(i)).collect();
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let dk: usize = kept.iter().map(|&i| dims[i]).product();
    let dt: usize = traced.iter().map(|&i| dims[i]).product();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let unpack = |mut idx: usize, which: &[usize]| -> Vec<usize> {
        let mut digits = vec![0usize; which.len()];
        for pos in (0..which.len()).rev() {
            let d = dims[which[pos]];
            digits[pos] = idx % d;
            idx /= d;
        }
        digits
    };
    let full_index = |kd: &[usize], td: &[usize]| -> usize {
        let mut s = 0;
        for (pos, &i) in kept.iter().enumerate() {
            s += kd[pos] * strides[i];
        }
        for (pos, &i) in traced.iter().enumerate() {
            s += td[pos] * strides[i];
        }
        s
    };
    let mut out = zeros(dk);
    for a in 0..dk {
        let ka = unpack(a, &kept);
        for b in 0..dk {
            let kb = unpack(b, &kept);
            let mut s = C64::new(0.0, 0.0);
            for t in 0..dt {
                let td = unpack(t, &traced);
                s += rho[(full_index(&ka, &td), full_index(&kb, &td))];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Random Hermitian matrix with GUE-like entries, unit Frobenius scale.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = Operator::from_fn(d, d, |_, _| gaussian_c(rng));
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let n = h.norm();
    h / c(n.max(1e-300), 0.0)
}

/// Haar-random unit vector.
pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Ket {
    let v = Ket::from_fn(d, |_, _| gaussian_c(rng));
    let n = v.norm();
    v / c(n, 0.0)
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    projector(&random_ket(d, rng))
}

/// Random mixed state from a square Ginibre matrix (Hilbert-Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = Operator::from_fn(d, d, |_, _| gaussian_c(rng));
    let r = &g * g.adjoint();
    let t = r.trace();
    r / t
}

/// Haar-random unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = Operator::from_fn(d, d, |_, _| gaussian_c(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn pauli_x() -> Operator {
    Operator::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> Operator {
    Operator::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> Operator {
    Operator::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}
