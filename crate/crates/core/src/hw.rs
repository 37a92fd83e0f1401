//! Heisenberg-Weyl phase space on a truncated Fock basis.
//!
//! alpha = (q + i p)/sqrt2 with hbar = 1; phase-space integrals use d^2 alpha / pi = dq dp / (2 pi).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::kernel::{Domain, KernelSpec, RectGrid, SampledFunction};
use crate::foundation::operator::{c, check_dim, diag_real, expm, identity, kron, pauli_x, pauli_y, trace_product, Operator, C64};
use crate::foundation::special::{laguerre_upto, ln_factorial};

/// Default Fock cutoff.
pub const DEFAULT_N_MAX: usize = 40;

#[derive(Debug, Clone)]
pub struct FockSpace {
    pub n_max: usize,
    pub a: Operator,
    pub adag: Operator,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<FockSpace> {
        if n_max == 0 || n_max > 500 {
            return Err(PsError::Domain(format!("Fock cutoff {n_max} outside 1..=500")));
        }
        let d = n_max + 1;
        let mut a = Operator::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
        }
        let adag = a.adjoint();
        Ok(FockSpace { n_max, a, adag })
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn spec(&self, s: f64) -> Result<KernelSpec> {
        KernelSpec::hw(self.n_max, s)
    }

    pub fn number(&self) -> Operator {
        diag_real(&(0..self.dim()).map(|n| n as f64).collect::<Vec<_>>())
    }

    /// Warning text when |xi| exceeds sqrt(n_max)/3.
    pub fn displacement_warning(&self, xi: C64) -> Option<String> {
        let lim = (self.n_max as f64).sqrt() / 3.0;
        (xi.norm() > lim).then(|| format!("|xi| = {:.4} exceeds sqrt(n_max)/3 = {lim:.4}; truncation may be visible", xi.norm()))
    }

    /// D_s(xi) = exp(xi a^dag - xi^* a) exp(s |xi|^2 / 2), by matrix exponential of the truncated generator.
    pub fn displacement(&self, xi: C64, s: f64) -> Operator {
        let gen = &self.adag * xi - &self.a * xi.conj();
        expm(&gen) * c((s * xi.norm_sqr() / 2.0).exp(), 0.0)
    }

    /// 2 (-1)^{a^dag a}.
    pub fn parity(&self) -> Operator {
        diag_real(&(0..self.dim()).map(|n| if n % 2 == 0 { 2.0 } else { -2.0 }).collect::<Vec<_>>())
    }

    /// Diagonal of the s-ordered parity 2/(1-s) ((s+1)/(s-1))^n, for s < 1.
    pub fn parity_s_diagonal(&self, s: f64, len: usize) -> Result<Vec<f64>> {
        crate::su2::check_s(s)?;
        if s >= 1.0 {
            return Err(PsError::Domain("the s = 1 kernel has no bounded matrix form; use glauber_p_char".into()));
        }
        let r = (s + 1.0) / (s - 1.0);
        Ok((0..len).map(|n| 2.0 / (1.0 - s) * r.powi(n as i32)).collect())
    }

    /// Population in the top quarter of the Fock basis.
    pub fn top_population(&self, rho: &Operator) -> f64 {
        let d = self.dim();
        let start = d - d.div_ceil(4);
        (start..d).map(|n| rho[(n, n)].re.abs()).sum()
    }

    fn truncation_warnings(&self, rho: &Operator) -> Vec<String> {
        let pop = self.top_population(rho);
        if pop > 1e-8 {
            vec![format!("state has population {pop:.3e} in the top quarter of the Fock basis")]
        } else {
            Vec::new()
        }
    }

    /// Kernel 2 D(alpha) P D(alpha)^dag from closed-form matrix elements.
    pub fn wigner_kernel(&self, alpha: C64) -> Operator {
        displaced_parity(self.dim(), alpha)
    }

    /// s-ordered kernel D(alpha) Pi_s D(alpha)^dag for -1 <= s < 1.
    pub fn kernel_at(&self, s: f64, alpha: C64) -> Result<Operator> {
        if s == 0.0 {
            return Ok(self.wigner_kernel(alpha));
        }
        let d = self.dim();
        if s == -1.0 {
            let v = coherent_vector(d, alpha);
            return Ok(&v * v.adjoint());
        }
        // sum over an enlarged intermediate basis so the displaced tail is kept
        let ext = (2 * d + 40).min(500);
        let diag = self.parity_s_diagonal(s, ext)?;
        let dm = displacement_elements(d, ext, alpha);
        let mut scaled = dm.clone();
        for (k, w) in diag.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*w);
        }
        Ok(scaled * dm.adjoint())
    }
}

fn sqrt_factorial_ratio(small: usize, big: usize) -> f64 {
    (0.5 * (ln_factorial(small) - ln_factorial(big))).exp()
}

/// <m|D(beta)|n> for m < rows, n < cols, from the Laguerre closed form.
pub fn displacement_elements(rows: usize, cols: usize, beta: C64) -> Operator {
    let x = beta.norm_sqr();
    let g = (-x / 2.0).exp();
    let top = rows.max(cols);
    let mut out = Operator::zeros(rows, cols);
    for k in 0..top {
        let lag = laguerre_upto(top - k, k as f64, x);
        let below = beta.powu(k as u32);
        let above = (-beta.conj()).powu(k as u32);
        for low in 0..top - k {
            let high = low + k;
            let mag = sqrt_factorial_ratio(low, high) * g * lag[low];
            if high < rows && low < cols {
                out[(high, low)] = below * mag;
            }
            if k > 0 && low < rows && high < cols {
                out[(low, high)] = above * mag;
            }
        }
    }
    out
}

/// <m| 2 D(alpha) P D(alpha)^dag |n> = 2 (-1)^n <m|D(2 alpha)|n>.
pub fn displaced_parity(dim: usize, alpha: C64) -> Operator {
    let mut t = displacement_elements(dim, dim, alpha * 2.0);
    for n in 0..dim {
        let f = if n % 2 == 0 { 2.0 } else { -2.0 };
        t.column_mut(n).scale_mut(f);
    }
    t
}

/// Truncated coherent amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!).
pub fn coherent_vector(dim: usize, alpha: C64) -> crate::foundation::operator::Ket {
    let g = (-alpha.norm_sqr() / 2.0).exp();
    let mut v = crate::foundation::operator::Ket::zeros(dim);
    let mut term = c(g, 0.0);
    for n in 0..dim {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        v[n] = term;
    }
    v
}

/// W(alpha) = Tr[rho D(alpha) Pi D(alpha)^dag] at each point.
pub fn wigner(space: &FockSpace, rho: &Operator, points: &[C64]) -> Result<SampledFunction> {
    evaluate(space, rho, 0.0, points)
}

/// s-ordered quasiprobability at points, -1 <= s < 1.
pub fn evaluate(space: &FockSpace, rho: &Operator, s: f64, points: &[C64]) -> Result<SampledFunction> {
    check_dim(rho, space.dim())?;
    let values: Vec<C64> = points
        .par_iter()
        .map(|a| space.kernel_at(s, *a).map(|k| c(trace_product(rho, &k).re, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let mut f = SampledFunction::new(
        space.spec(s)?,
        Domain::CvPoints { alphas: points.iter().map(|a| (a.re, a.im)).collect() },
        values,
        true,
    );
    f.warnings = space.truncation_warnings(rho);
    Ok(f)
}

/// s-ordered quasiprobability on a rectangular (q, p) grid, q-major.
pub fn evaluate_rect(space: &FockSpace, rho: &Operator, s: f64, grid: &RectGrid) -> Result<SampledFunction> {
    let mut f = evaluate(space, rho, s, &grid.alphas())?;
    f.domain = Domain::Rect(grid.clone());
    Ok(f)
}

/// Q(alpha) = <alpha|rho|alpha>.
pub fn husimi_q(space: &FockSpace, rho: &Operator, alpha: C64) -> Result<f64> {
    check_dim(rho, space.dim())?;
    let v = coherent_vector(space.dim(), alpha);
    Ok((v.adjoint() * rho * &v)[(0, 0)].re)
}

/// chi^{(s)}(xi) = Tr[rho D_s(xi)].
pub fn characteristic(space: &FockSpace, rho: &Operator, xi: C64, s: f64) -> Result<C64> {
    check_dim(rho, space.dim())?;
    crate::su2::check_s(s)?;
    Ok(trace_product(rho, &space.displacement(xi, s)))
}

/// Normally ordered characteristic function chi^{(1)}(xi).
pub fn glauber_p_char(space: &FockSpace, rho: &Operator, xi: C64) -> Result<C64> {
    characteristic(space, rho, xi, 1.0)
}

/// Measurement budget for the ancilla protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Shots {
    Exact,
    /// `shots` repetitions per measured ancilla basis.
    Sampled { shots: u64, seed: Option<u64> },
}

/// Couples |+><+| (x) rho through exp(1/2 sz (x) (alpha a^dag - alpha^* a)) and reads the ancilla
/// in the x and y bases. Returns <sx> - i <sy>, which equals Tr[rho D(alpha)].
pub fn ancilla_weyl_protocol(space: &FockSpace, rho: &Operator, alpha: C64, shots: Shots) -> Result<C64> {
    check_dim(rho, space.dim())?;
    let plus = Operator::from_element(2, 2, c(0.5, 0.0));
    let joint = kron(&plus, rho);
    let gen = (&space.adag * alpha - &space.a * alpha.conj()) * c(0.5, 0.0);
    let sz = diag_real(&[1.0, -1.0]);
    let r = expm(&kron(&sz, &gen));
    let out = &r * joint * r.adjoint();
    let ex = trace_product(&out, &kron(&pauli_x(), &identity(space.dim()))).re;
    let ey = trace_product(&out, &kron(&pauli_y(), &identity(space.dim()))).re;
    match shots {
        Shots::Exact => Ok(c(ex, -ey)),
        Shots::Sampled { shots, seed } => {
            let seed = seed.ok_or(PsError::SeedRequired)?;
            if shots == 0 {
                return Err(PsError::Domain("shot count must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut estimate = |e: f64| -> Result<f64> {
                let p = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
                let b = Binomial::new(shots, p).map_err(|e| PsError::Domain(e.to_string()))?;
                let k = b.sample(&mut rng) as f64;
                Ok(2.0 * k / shots as f64 - 1.0)
            };
            let sx = estimate(ex)?;
            let sy = estimate(ey)?;
            Ok(c(sx, -sy))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Q,
    P,
}

/// Marginal along `axis` of a function sampled on a rectangle: integrates out the other
/// variable with dx/(2 pi), so the result is a density in the kept variable.
pub fn marginal(w: &SampledFunction, axis: Axis) -> Result<Vec<f64>> {
    let r = match &w.domain {
        Domain::Rect(r) => r,
        _ => return Err(PsError::Domain("marginal needs a rectangular grid".into())),
    };
    let vals = w.real_values();
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut edge = 0.0f64;
    for i in 0..r.n_q {
        for k in 0..r.n_p {
            if i == 0 || k == 0 || i == r.n_q - 1 || k == r.n_p - 1 {
                edge = edge.max(vals[i * r.n_p + k].abs());
            }
        }
    }
    if peak > 0.0 && edge > 1e-6 * peak {
        return Err(PsError::GridCoverage(format!(
            "boundary value {edge:.3e} is not negligible against peak {peak:.3e}"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let trap = |n: usize, j: usize| if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
    Ok(match axis {
        Axis::Q => (0..r.n_q)
            .map(|i| (0..r.n_p).map(|k| trap(r.n_p, k) * vals[i * r.n_p + k]).sum::<f64>() * r.dp() / two_pi)
            .collect(),
        Axis::P => (0..r.n_p)
            .map(|k| (0..r.n_q).map(|i| trap(r.n_q, i) * vals[i * r.n_p + k]).sum::<f64>() * r.dq() / two_pi)
            .collect(),
    })
}
