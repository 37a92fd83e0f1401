//! Clebsch-Gordan coefficients, spherical harmonics and Laguerre polynomials.
//!
//! Angular momenta are passed as real numbers at the public surface and
//! handled internally as twice-values so that half-integers stay exact.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::operator::{c, C64};
use crate::error::{PsError, Result};

const LNFAC_MAX: usize = 512;

fn lnfac_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; LNFAC_MAX + 1];
        for n in 2..=LNFAC_MAX {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

/// ln(n!) for 0 <= n <= 512.
pub fn ln_factorial(n: usize) -> f64 {
    assert!(n <= LNFAC_MAX, "ln_factorial: argument {n} beyond table");
    lnfac_table()[n]
}

/// Converts a half-integer to its doubled integer value.
pub fn twice(x: f64) -> Result<i64> {
    let t = 2.0 * x;
    let r = t.round();
    if (t - r).abs() > 1e-9 {
        return Err(PsError::Domain(format!("{x} is not a half-integer")));
    }
    Ok(r as i64)
}

/// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    cg_twice(twice(j1)?, twice(m1)?, twice(j2)?, twice(m2)?, twice(j)?, twice(m)?)
}

/// Same as [`clebsch_gordan`] with every argument doubled.
pub fn cg_twice(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> Result<f64> {
    for (tj_, tm_) in [(tj1, tm1), (tj2, tm2), (tj, tm)] {
        if tj_ < 0 {
            return Err(PsError::Domain(format!("negative angular momentum {}", tj_ as f64 / 2.0)));
        }
        if tm_.abs() > tj_ || (tj_ - tm_) % 2 != 0 {
            return Err(PsError::Domain(format!(
                "projection {} invalid for j = {}",
                tm_ as f64 / 2.0,
                tj_ as f64 / 2.0
            )));
        }
    }
    if tm1 + tm2 != tm {
        return Ok(0.0);
    }
    if tj > tj1 + tj2 || tj < (tj1 - tj2).abs() || (tj1 + tj2 + tj) % 2 != 0 {
        return Ok(0.0);
    }
    // all of the following are integers
    let h = |x: i64| -> usize { (x / 2) as usize };
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tm1);
    let cc = h(tj2 + tm2);
    // these two may be negative; the k range keeps every factorial argument >= 0
    let dd = (tj - tj2 + tm1) / 2;
    let ee = (tj - tj1 - tm2) / 2;
    let kmin = 0.max(-dd).max(-ee) as usize;
    let kmax = a.min(b).min(cc);
    if kmin > kmax {
        return Ok(0.0);
    }
    let lf = ln_factorial;
    let pre = 0.5
        * (((tj + 1) as f64).ln() + lf(h(tj + tj1 - tj2)) + lf(h(tj - tj1 + tj2)) + lf(a)
            - lf(h(tj1 + tj2 + tj) + 1)
            + lf(h(tj + tm))
            + lf(h(tj - tm))
            + lf(h(tj1 - tm1))
            + lf(h(tj1 + tm1))
            + lf(h(tj2 - tm2))
            + lf(h(tj2 + tm2)));
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for k in kmin..=kmax {
        let ki = k as i64;
        let ln_den = lf(k)
            + lf(a - k)
            + lf(b - k)
            + lf(cc - k)
            + lf((dd + ki) as usize)
            + lf((ee + ki) as usize);
        let t = (pre - ln_den).exp();
        if k % 2 == 0 {
            pos.push(t);
        } else {
            neg.push(t);
        }
    }
    pos.sort_by(|x, y| x.partial_cmp(y).unwrap());
    neg.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(pos.iter().sum::<f64>() - neg.iter().sum::<f64>())
}

/// Index of (l, m) in a flat array of harmonics ordered by l then m.
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Orthonormal P-bar_l^m(cos t) for 0 <= m <= l <= lmax, Condon-Shortley phase
/// included, so that Y_lm = Pbar_l^m e^{i m phi}. Flat layout: lm_index(l, m).
pub fn normalized_legendre(lmax: usize, theta: f64) -> Vec<f64> {
    let x = theta.cos();
    let sx = theta.sin().abs();
    let mut out = vec![0.0; (lmax + 1) * (lmax + 1)];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -sx * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        out[lm_index(m, m as i64)] = pmm;
        if m == lmax {
            break;
        }
        let mut p_prev = pmm;
        let mut p = x * ((2 * m + 3) as f64).sqrt() * pmm;
        out[lm_index(m + 1, m as i64)] = p;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = a * (x * p - b * p_prev);
            p_prev = p;
            p = next;
            out[lm_index(l, m as i64)] = p;
        }
    }
    out
}

/// All Y_lm(theta, phi) for l <= lmax, flat layout lm_index(l, m).
pub fn spherical_harmonics_upto(lmax: usize, theta: f64, phi: f64) -> Vec<C64> {
    let pl = normalized_legendre(lmax, theta);
    let mut out = vec![c(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    for l in 0..=lmax {
        for m in 0..=l {
            let v = pl[lm_index(l, m as i64)];
            let e = C64::from_polar(1.0, m as f64 * phi);
            let y = e * v;
            out[lm_index(l, m as i64)] = y;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[lm_index(l, -(m as i64))] = y.conj() * sign;
            }
        }
    }
    out
}

/// Orthonormal spherical harmonic with the Condon-Shortley phase.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Result<C64> {
    if m.unsigned_abs() as usize > l {
        return Err(PsError::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    Ok(spherical_harmonics_upto(l, theta, phi)[lm_index(l, m)])
}

/// Generalized Laguerre polynomials L_n^{(k)}(x) for n = 0..=nmax.
pub fn laguerre_upto(nmax: usize, k: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax == 0 {
        return out;
    }
    out.push(1.0 + k - x);
    for n in 1..nmax {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + k - x) * out[n] - (nf + k) * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_examples() {
        assert!((clebsch_gordan(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let v = clebsch_gordan(0.5, 0.5, 1.0, 0.0, 0.5, 0.5).unwrap();
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(clebsch_gordan(0.5, 0.5, 0.5, 0.5, 0.0, 0.0).unwrap(), 0.0);
        let v = clebsch_gordan(0.5, -0.5, 1.0, 0.0, 0.5, -0.5).unwrap();
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cg_singlet_and_triplet() {
        let s = 0.5f64.sqrt();
        assert!((clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0.0, 0.0).unwrap() - s).abs() < 1e-14);
        assert!((clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0.0, 0.0).unwrap() + s).abs() < 1e-14);
        assert!((clebsch_gordan(0.5, -0.5, 0.5, 0.5, 1.0, 0.0).unwrap() - s).abs() < 1e-14);
    }

    #[test]
    fn cg_domain_errors() {
        assert!(clebsch_gordan(0.3, 0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(clebsch_gordan(1.0, 2.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(clebsch_gordan(1.0, 0.5, 1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn harmonic_examples() {
        let y00 = spherical_harmonic(0, 0, 0.7, 1.1).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15 && y00.im.abs() < 1e-15);
        let y10 = spherical_harmonic(1, 0, 0.0, 0.0).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!(spherical_harmonic(1, 2, 0.0, 0.0).is_err());
    }

    #[test]
    fn harmonic_y11_phase() {
        // Y_11 = -sqrt(3/8pi) sin t e^{i phi}
        let y = spherical_harmonic(1, 1, 0.4, 0.3).unwrap();
        let expect = C64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * 0.4f64.sin(), 0.3);
        assert!((y - expect).norm() < 1e-15);
    }

    #[test]
    fn harmonic_y21_closed_form() {
        let (t, f) = (PI / 3.0, PI / 4.0);
        let y = spherical_harmonic(2, 1, t, f).unwrap();
        let expect = C64::from_polar(-(15.0 / (8.0 * PI)).sqrt() * t.sin() * t.cos(), f);
        assert!((y - expect).norm() < 1e-15);
    }

    #[test]
    fn cg_orthogonality() {
        // sum over m1, m2 of <j1 m1 j2 m2|J M><j1 m1 j2 m2|J' M> = delta_{J J'}
        for tj1 in 0..=8i64 {
            for tj2 in 0..=8i64 {
                let lo = (tj1 - tj2).abs();
                for tj in (lo..=tj1 + tj2).step_by(2) {
                    for tjp in (lo..=tj1 + tj2).step_by(2) {
                        for tm in (-tj.min(tjp)..=tj.min(tjp)).step_by(2) {
                            let mut s = 0.0;
                            for tm1 in (-tj1..=tj1).step_by(2) {
                                let tm2 = tm - tm1;
                                if tm2.abs() > tj2 {
                                    continue;
                                }
                                s += cg_twice(tj1, tm1, tj2, tm2, tj, tm).unwrap() * cg_twice(tj1, tm1, tj2, tm2, tjp, tm).unwrap();
                            }
                            let expect = if tj == tjp { 1.0 } else { 0.0 };
                            assert!((s - expect).abs() < 1e-12, "{tj1} {tj2} {tj} {tjp} {tm}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn laguerre_low_orders() {
        let l = laguerre_upto(3, 2.0, 0.5);
        assert!((l[1] - (3.0 - 0.5)).abs() < 1e-15);
        let l2 = 0.5 * (0.25 - 2.0 * 4.0 * 0.5 + 4.0 * 3.0);
        assert!((l[2] - l2).abs() < 1e-14);
    }
}
