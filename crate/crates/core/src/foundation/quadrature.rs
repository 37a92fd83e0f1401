//! Gauss-Legendre product grids on the sphere and adaptive Gauss-Kronrod
//! integration for integrands that are not band limited (|W|, Q ln Q).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Product rule: Gauss-Legendre in cos(theta) times uniform phi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub nodes: Vec<SphereNode>,
    pub exact_degree: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Sum of the weights.
    pub total: f64,
}

/// Grid exact for spherical harmonics up to degree `l`, weights summing to 4 pi.
pub fn sphere_quadrature(l: usize) -> SphereGrid {
    let n_theta = (l + 2) / 2;
    let n_phi = l + 1;
    SphereGrid::product(n_theta, n_phi)
}

impl SphereGrid {
    /// `n_theta` Gauss-Legendre rings and `n_phi` equispaced meridians; solid-angle weights.
    pub fn product(n_theta: usize, n_phi: usize) -> SphereGrid {
        let (x, w) = gauss_legendre(n_theta.max(1));
        let n_phi = n_phi.max(1);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(x.len() * n_phi);
        // theta ascending
        for i in (0..x.len()).rev() {
            for k in 0..n_phi {
                nodes.push(SphereNode { theta: x[i].acos(), phi: k as f64 * dphi, weight: w[i] * dphi });
            }
        }
        let exact_degree = (2 * x.len() - 1).min(n_phi - 1);
        SphereGrid { nodes, exact_degree, n_theta: x.len(), n_phi, total: 4.0 * PI }
    }

    /// Rescales the weights so they sum to `total`.
    pub fn with_total(&self, total: f64) -> SphereGrid {
        let f = total / self.total;
        let nodes = self.nodes.iter().map(|n| SphereNode { weight: n.weight * f, ..*n }).collect();
        SphereGrid { nodes, total, ..self.clone() }
    }

    /// Spin-j measure (2j+1)/(4 pi) sin t dt dp.
    pub fn for_spin(&self, two_j: u32) -> SphereGrid {
        self.with_total(two_j as f64 + 1.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.nodes.iter().zip(values).map(|(n, v)| n.weight * v).sum()
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) on [a, b].
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, err) = gk15(f, a, b);
        if err <= tol || depth == 0 || (b - a).abs() < 1e-13 {
            return k;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(&mut f, a, b, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        for deg in 0..10 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn kronrod_rule_is_exact_to_degree_22() {
        let mut f = |x: f64| x.powi(22);
        let (k, _) = gk15(&mut f, -1.0, 1.0);
        assert!((k - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kink() {
        let v = integrate_adaptive(|x: f64| (x - 0.3).abs(), -1.0, 1.0, 1e-13);
        let exact = 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn grid_total_and_cos_squared() {
        let g = sphere_quadrature(10).with_total(1.0);
        assert!((g.nodes.iter().map(|n| n.weight).sum::<f64>() - 1.0).abs() < 1e-14);
        let v: Vec<f64> = g.nodes.iter().map(|n| n.theta.cos().powi(2)).collect();
        assert!((g.integrate(&v) - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn degree_zero_grid() {
        let g = sphere_quadrature(0);
        assert_eq!(g.len(), 1);
        assert!((g.integrate(&[1.0]) - 4.0 * PI).abs() < 1e-13);
    }
}
