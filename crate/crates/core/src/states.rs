//! Built-in states. Qubit |0> is spin up (first basis vector, m = +1/2).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::operator::{c, identity, kron_all, projector, random_density, Ket, Operator};

pub fn basis_ket(dim: usize, k: usize) -> Ket {
    let mut v = Ket::zeros(dim);
    v[k] = c(1.0, 0.0);
    v
}

pub fn fock_ket(n_max: usize, n: usize) -> Result<Ket> {
    if n > n_max {
        return Err(PsError::Domain(format!("Fock level {n} above cutoff {n_max}")));
    }
    Ok(basis_ket(n_max + 1, n))
}

pub fn fock_density(n_max: usize, n: usize) -> Result<Operator> {
    Ok(projector(&fock_ket(n_max, n)?))
}

/// Truncated coherent state, renormalized on the truncated space.
pub fn coherent_density(n_max: usize, alpha: crate::C64) -> Operator {
    let v = crate::hw::coherent_vector(n_max + 1, alpha);
    let v = &v / c(v.norm(), 0.0);
    projector(&v)
}

/// Random mixed state supported on the lowest `levels` Fock states.
pub fn random_low_energy<R: Rng + ?Sized>(n_max: usize, levels: usize, rng: &mut R) -> Operator {
    let small = random_density(levels, rng);
    let mut out = Operator::zeros(n_max + 1, n_max + 1);
    out.view_mut((0, 0), (levels, levels)).copy_from(&small);
    out
}

/// |j, j>.
pub fn spin_up(two_j: u32) -> Operator {
    projector(&basis_ket(two_j as usize + 1, 0))
}

/// |j, -j>.
pub fn spin_down(two_j: u32) -> Operator {
    projector(&basis_ket(two_j as usize + 1, two_j as usize))
}

pub fn maximally_mixed(dim: usize) -> Operator {
    identity(dim) / c(dim as f64, 0.0)
}

/// Qubit Pauli eigenstate along `axis` ('x', 'y', 'z') with eigenvalue sign `plus`.
pub fn pauli_eigenstate(axis: char, plus: bool) -> Result<Operator> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sgn = if plus { 1.0 } else { -1.0 };
    let v = match axis {
        'z' => basis_ket(2, if plus { 0 } else { 1 }),
        'x' => Ket::from_vec(vec![c(r, 0.0), c(sgn * r, 0.0)]),
        'y' => Ket::from_vec(vec![c(r, 0.0), c(0.0, sgn * r)]),
        _ => return Err(PsError::Domain(format!("unknown Pauli axis '{axis}'"))),
    };
    Ok(projector(&v))
}

/// The six qubit Pauli eigenstates in the order +z, -z, +x, -x, +y, -y.
pub fn pauli_eigenstates() -> Vec<Operator> {
    let mut out = Vec::new();
    for axis in ['z', 'x', 'y'] {
        for plus in [true, false] {
            out.push(pauli_eigenstate(axis, plus).unwrap());
        }
    }
    out
}

/// (|0...0> + |1...1>)/sqrt2 on n qubits.
pub fn ghz(n: usize) -> Result<Operator> {
    check_qubits(n)?;
    let d = 1usize << n;
    let mut v = Ket::zeros(d);
    v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[d - 1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(projector(&v))
}

/// Equal superposition of single-excitation basis states.
pub fn w_state(n: usize) -> Result<Operator> {
    dicke(n, 1)
}

/// Symmetric state with `k` qubits flipped to |1>.
pub fn dicke(n: usize, k: usize) -> Result<Operator> {
    check_qubits(n)?;
    if k > n {
        return Err(PsError::Domain(format!("Dicke excitation {k} exceeds {n} qubits")));
    }
    let d = 1usize << n;
    let mut v = Ket::zeros(d);
    for idx in 0..d {
        if idx.count_ones() as usize == k {
            v[idx] = c(1.0, 0.0);
        }
    }
    let nrm = v.norm();
    Ok(projector(&(v / c(nrm, 0.0))))
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > 12 {
        return Err(PsError::Domain(format!("qubit count {n} outside 1..=12")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

pub fn bell(kind: BellKind) -> Operator {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Ket::zeros(4);
    match kind {
        BellKind::PhiPlus | BellKind::PhiMinus => {
            v[0] = c(r, 0.0);
            v[3] = c(if kind == BellKind::PhiPlus { r } else { -r }, 0.0);
        }
        BellKind::PsiPlus | BellKind::PsiMinus => {
            v[1] = c(r, 0.0);
            v[2] = c(if kind == BellKind::PsiPlus { r } else { -r }, 0.0);
        }
    }
    projector(&v)
}

/// (|0>|down> + |1>|up>)/sqrt2 on Fock(n_max) (x) qubit.
pub fn hybrid_bell(n_max: usize) -> Result<Operator> {
    let f0 = fock_ket(n_max, 0)?;
    let f1 = fock_ket(n_max, 1)?;
    let up = basis_ket(2, 0);
    let down = basis_ket(2, 1);
    let v = (f0.kronecker(&down) + f1.kronecker(&up)) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(projector(&v))
}

/// Product of single-factor density operators.
pub fn product(parts: &[Operator]) -> Operator {
    kron_all(parts)
}

/// Declarative description of a built-in state, as used in state files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum NamedState {
    Fock { n_max: usize, n: usize },
    Coherent { n_max: usize, re: f64, im: f64 },
    SpinUp { j: f64 },
    SpinDown { j: f64 },
    SpinCoherent { j: f64, theta: f64, phi: f64 },
    Pauli { axis: char, plus: bool },
    Ghz { n: usize },
    WState { n: usize },
    Bell { which: BellKind },
    Dicke { n: usize, k: usize },
    MaximallyMixed { dim: usize },
    HybridBell { n_max: usize },
}

impl NamedState {
    pub fn build(&self) -> Result<Operator> {
        let two_j = |j: f64| -> Result<u32> {
            let t = crate::foundation::special::twice(j)?;
            if t < 0 {
                return Err(PsError::Domain(format!("spin j = {j} is negative")));
            }
            Ok(t as u32)
        };
        match self {
            NamedState::Fock { n_max, n } => fock_density(*n_max, *n),
            NamedState::Coherent { n_max, re, im } => Ok(coherent_density(*n_max, c(*re, *im))),
            NamedState::SpinUp { j } => Ok(spin_up(two_j(*j)?)),
            NamedState::SpinDown { j } => Ok(spin_down(two_j(*j)?)),
            NamedState::SpinCoherent { j, theta, phi } => {
                let sys = crate::su2::SpinSystem::from_two_j(two_j(*j)?);
                Ok(projector(&sys.coherent_state(*theta, *phi)))
            }
            NamedState::Pauli { axis, plus } => pauli_eigenstate(*axis, *plus),
            NamedState::Ghz { n } => ghz(*n),
            NamedState::WState { n } => w_state(*n),
            NamedState::Bell { which } => Ok(bell(*which)),
            NamedState::Dicke { n, k } => dicke(*n, *k),
            NamedState::MaximallyMixed { dim } => {
                if *dim == 0 {
                    return Err(PsError::Domain("dimension must be positive".into()));
                }
                Ok(maximally_mixed(*dim))
            }
            NamedState::HybridBell { n_max } => hybrid_bell(*n_max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::operator::{check_density, max_abs, partial_trace};

    #[test]
    fn built_ins_are_densities() {
        let all = vec![
            fock_density(5, 2).unwrap(),
            coherent_density(20, c(0.5, 0.5)),
            spin_up(3),
            ghz(3).unwrap(),
            w_state(3).unwrap(),
            dicke(4, 2).unwrap(),
            bell(BellKind::PsiMinus),
            hybrid_bell(4).unwrap(),
        ];
        for rho in all {
            check_density(&rho).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_marginals_are_mixed() {
        for k in [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus] {
            let r = partial_trace(&bell(k), &[2, 2], &[0]).unwrap();
            assert!(max_abs(&(r - maximally_mixed(2))) < 1e-15);
        }
    }

    #[test]
    fn named_state_json() {
        let s: NamedState = serde_json::from_str(r#"{"kind":"ghz","params":{"n":3}}"#).unwrap();
        assert_eq!(s.build().unwrap(), ghz(3).unwrap());
        let s: NamedState = serde_json::from_str(r#"{"kind":"bell","params":{"which":"phi_minus"}}"#).unwrap();
        assert_eq!(s.build().unwrap(), bell(BellKind::PhiMinus));
        assert!(NamedState::Dicke { n: 2, k: 3 }.build().is_err());
    }
}
