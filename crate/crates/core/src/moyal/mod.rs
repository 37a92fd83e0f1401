//! Moyal dynamics on a uniform (q, p) grid.
//!
//! Functions are Weyl symbols with the normalization of [`crate::hw`]: a state
//! integrates to one under dq dp / (2 pi hbar) and W * W = W for a pure state.
//! The star product is f * g = f exp((i hbar/2)(<d_q d_p> - <d_p d_q>)) g.

pub mod snapshot;

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::foundation::kernel::RectGrid;
use crate::foundation::operator::{c, C64};

/// Spectral energy allowed outside the inner half band of each axis.
pub const ALIASING_TOL: f64 = 1e-8;
/// Largest |lambda dt| on the imaginary axis inside the RK4 stability region.
const RK4_IMAGINARY_LIMIT: f64 = 2.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub rect: RectGrid,
    pub hbar: f64,
    /// Minimum fraction of each axis that must be empty of the state.
    pub padding: f64,
}

impl PhaseGrid {
    pub fn new(rect: RectGrid, hbar: f64) -> Result<PhaseGrid> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(PsError::Domain(format!("hbar must be positive, got {hbar}")));
        }
        if rect.n_q < 4 || rect.n_p < 4 || !(rect.q_max > rect.q_min) || !(rect.p_max > rect.p_min) {
            return Err(PsError::Domain("phase grid needs at least 4 nodes per axis and increasing ranges".into()));
        }
        Ok(PhaseGrid { rect, hbar, padding: 0.25 })
    }

    pub fn symmetric(extent: f64, n: usize, hbar: f64) -> Result<PhaseGrid> {
        PhaseGrid::new(RectGrid::symmetric(extent, n), hbar)
    }

    pub fn len(&self) -> usize {
        self.rect.n_q * self.rect.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node coordinates in q-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let r = &self.rect;
        (0..r.n_q).flat_map(move |i| (0..r.n_p).map(move |k| (r.q(i), r.p(k))))
    }

    /// Cell area divided by 2 pi hbar.
    pub fn cell_measure(&self) -> f64 {
        self.rect.dq() * self.rect.dp() / (2.0 * std::f64::consts::PI * self.hbar)
    }

    fn same(&self, other: &PhaseGrid) -> bool {
        self == other
    }
}

/// Polynomial sum_t c_t q^a p^b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Poly {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Poly {
        let mut p = Poly { terms };
        p.simplify();
        p
    }

    pub fn constant(v: f64) -> Poly {
        Poly::new(vec![(0, 0, v)])
    }

    pub fn q() -> Poly {
        Poly::new(vec![(1, 0, 1.0)])
    }

    pub fn p() -> Poly {
        Poly::new(vec![(0, 1, 1.0)])
    }

    /// (q^2 + p^2)/2.
    pub fn harmonic() -> Poly {
        Poly::new(vec![(2, 0, 0.5), (0, 2, 0.5)])
    }

    /// p^2/2 + q^4/4.
    pub fn quartic() -> Poly {
        Poly::new(vec![(0, 2, 0.5), (4, 0, 0.25)])
    }

    fn simplify(&mut self) {
        self.terms.sort_by_key(|t| (t.0, t.1));
        let mut out: Vec<(u32, u32, f64)> = Vec::new();
        for t in &self.terms {
            match out.last_mut() {
                Some(l) if l.0 == t.0 && l.1 == t.1 => l.2 += t.2,
                _ => out.push(*t),
            }
        }
        out.retain(|t| t.2 != 0.0);
        self.terms = out;
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn derivative(&self, oq: u32, op: u32) -> Poly {
        let falling = |n: u32, k: u32| (0..k).map(|i| (n - i) as f64).product::<f64>();
        Poly::new(
            self.terms
                .iter()
                .filter(|t| t.0 >= oq && t.1 >= op)
                .map(|t| (t.0 - oq, t.1 - op, t.2 * falling(t.0, oq) * falling(t.1, op)))
                .collect(),
        )
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms.iter().map(|t| t.2 * q.powi(t.0 as i32) * p.powi(t.1 as i32)).sum()
    }

    /// Largest |value| over the grid nodes.
    pub fn sup_on(&self, grid: &PhaseGrid) -> f64 {
        grid.nodes().map(|(q, p)| self.eval(q, p).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    State,
    Hamiltonian,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: PhaseGrid,
    /// q-major, index i * n_p + k.
    pub values: Vec<C64>,
    pub provenance: Provenance,
    /// Exact form when the function is a polynomial; used for derivatives.
    pub poly: Option<Poly>,
}

impl GridFunction {
    pub fn new(grid: PhaseGrid, values: Vec<C64>, provenance: Provenance) -> Result<GridFunction> {
        if values.len() != grid.len() {
            return Err(PsError::Dimension { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PsError::Domain("grid function has non-finite values".into()));
        }
        Ok(GridFunction { grid, values, provenance, poly: None })
    }

    pub fn from_real(grid: PhaseGrid, values: Vec<f64>, provenance: Provenance) -> Result<GridFunction> {
        GridFunction::new(grid, values.into_iter().map(|v| c(v, 0.0)).collect(), provenance)
    }

    pub fn from_fn(grid: &PhaseGrid, provenance: Provenance, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = grid.nodes().map(|(q, p)| c(f(q, p), 0.0)).collect();
        GridFunction { grid: grid.clone(), values, provenance, poly: None }
    }

    pub fn polynomial(grid: &PhaseGrid, poly: Poly, provenance: Provenance) -> GridFunction {
        let mut g = GridFunction::from_fn(grid, provenance, |q, p| poly.eval(q, p));
        g.poly = Some(poly);
        g
    }

    pub fn hamiltonian(grid: &PhaseGrid, poly: Poly) -> GridFunction {
        GridFunction::polynomial(grid, poly, Provenance::Hamiltonian)
    }

    /// Wigner function of the coherent state centred at (q0, p0).
    pub fn coherent(grid: &PhaseGrid, q0: f64, p0: f64) -> GridFunction {
        let h = grid.hbar;
        GridFunction::from_fn(grid, Provenance::State, |q, p| 2.0 * (-((q - q0).powi(2) + (p - p0).powi(2)) / h).exp())
    }

    pub fn get(&self, i: usize, k: usize) -> C64 {
        self.values[i * self.grid.rect.n_p + k]
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    /// Integral under dq dp / (2 pi hbar).
    pub fn mass(&self) -> C64 {
        self.values.iter().sum::<C64>() * self.grid.cell_measure()
    }

    /// Integral of |f|^2 under dq dp / (2 pi hbar).
    pub fn purity(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest edge value relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let (nq, np) = (self.grid.rect.n_q, self.grid.rect.n_p);
        let mut edge: f64 = 0.0;
        for i in 0..nq {
            for k in 0..np {
                if i == 0 || k == 0 || i == nq - 1 || k == np - 1 {
                    edge = edge.max(self.get(i, k).norm());
                }
            }
        }
        let peak = self.max_abs();
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }

    /// Fraction of each axis (the smaller of the two) on which |f| stays below 1e-8 of its peak.
    pub fn padding_fraction(&self) -> f64 {
        let (nq, np) = (self.grid.rect.n_q, self.grid.rect.n_p);
        let cut = 1e-8 * self.max_abs();
        let (mut qlo, mut qhi, mut plo, mut phi) = (nq, 0, np, 0);
        for i in 0..nq {
            for k in 0..np {
                if self.get(i, k).norm() > cut {
                    qlo = qlo.min(i);
                    qhi = qhi.max(i);
                    plo = plo.min(k);
                    phi = phi.max(k);
                }
            }
        }
        if qlo > qhi {
            return 1.0;
        }
        let fq = 1.0 - (qhi - qlo + 1) as f64 / nq as f64;
        let fp = 1.0 - (phi - plo + 1) as f64 / np as f64;
        fq.min(fp)
    }

    /// Energy fraction outside the inner half band of either axis.
    pub fn spectral_tail(&self) -> f64 {
        let sp = Spectral::new(&self.grid);
        let hat = sp.fft2(&self.values);
        let (nq, np) = (sp.nq, sp.np);
        let mut total = 0.0;
        let mut tail = 0.0;
        for a in 0..nq {
            for b in 0..np {
                let e = hat[a * np + b].norm_sqr();
                total += e;
                if signed(a, nq).unsigned_abs() as usize > nq / 4 || signed(b, np).unsigned_abs() as usize > np / 4 {
                    tail += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Band-limit and decay precondition for spectral operations.
    pub fn check_spectral(&self) -> Result<()> {
        if self.poly.is_some() {
            return Ok(());
        }
        let edge = self.boundary_ratio();
        if edge > ALIASING_TOL {
            return Err(PsError::Aliasing(format!("boundary value {edge:.3e} of peak exceeds {ALIASING_TOL:e}")));
        }
        let tail = self.spectral_tail();
        if tail > ALIASING_TOL {
            return Err(PsError::Aliasing(format!("spectral tail {tail:.3e} exceeds {ALIASING_TOL:e}")));
        }
        Ok(())
    }
}

fn signed(a: usize, n: usize) -> i64 {
    if a <= n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

/// FFT plans and wavenumbers for a grid; index (a, b) is q-frequency a, p-frequency b.
struct Spectral {
    nq: usize,
    np: usize,
    kq: Vec<f64>,
    kp: Vec<f64>,
    fwd_q: Arc<dyn Fft<f64>>,
    inv_q: Arc<dyn Fft<f64>>,
    fwd_p: Arc<dyn Fft<f64>>,
    inv_p: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(grid: &PhaseGrid) -> Spectral {
        let r = &grid.rect;
        let (nq, np) = (r.n_q, r.n_p);
        let mut planner = FftPlanner::new();
        let wave = |n: usize, d: f64| (0..n).map(|a| 2.0 * std::f64::consts::PI * signed(a, n) as f64 / (n as f64 * d)).collect();
        Spectral {
            nq,
            np,
            kq: wave(nq, r.dq()),
            kp: wave(np, r.dp()),
            fwd_q: planner.plan_fft_forward(nq),
            inv_q: planner.plan_fft_inverse(nq),
            fwd_p: planner.plan_fft_forward(np),
            inv_p: planner.plan_fft_inverse(np),
        }
    }

    fn along_p(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        data.par_chunks_mut(self.np).for_each(|row| plan.process(row));
    }

    fn along_q(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let (nq, np) = (self.nq, self.np);
        let mut cols: Vec<C64> = vec![c(0.0, 0.0); nq * np];
        for i in 0..nq {
            for k in 0..np {
                cols[k * nq + i] = data[i * np + k];
            }
        }
        cols.par_chunks_mut(nq).for_each(|col| plan.process(col));
        for i in 0..nq {
            for k in 0..np {
                data[i * np + k] = cols[k * nq + i];
            }
        }
    }

    /// Coefficients with f = sum hat e^{i (kq x + kp y)}, x, y measured from the grid corner.
    fn fft2(&self, values: &[C64]) -> Vec<C64> {
        let mut d = values.to_vec();
        self.along_p(&mut d, &self.fwd_p);
        self.along_q(&mut d, &self.fwd_q);
        let s = 1.0 / (self.nq * self.np) as f64;
        d.iter_mut().for_each(|v| *v *= s);
        d
    }

    fn synth2(&self, hat: &[C64]) -> Vec<C64> {
        let mut d = hat.to_vec();
        self.along_p(&mut d, &self.inv_p);
        self.along_q(&mut d, &self.inv_q);
        d
    }

    /// d_q^oq d_p^op of the function with coefficients `hat`.
    fn derivative(&self, hat: &[C64], oq: u32, op: u32) -> Vec<C64> {
        if oq == 0 && op == 0 {
            return self.synth2(hat);
        }
        let (nq, np) = (self.nq, self.np);
        let mut d = hat.to_vec();
        for a in 0..nq {
            let nyq_q = nq % 2 == 0 && a == nq / 2 && oq % 2 == 1;
            let fq = c(0.0, self.kq[a]).powu(oq);
            for b in 0..np {
                let nyq_p = np % 2 == 0 && b == np / 2 && op % 2 == 1;
                let idx = a * np + b;
                d[idx] = if nyq_q || nyq_p { c(0.0, 0.0) } else { d[idx] * fq * c(0.0, self.kp[b]).powu(op) };
            }
        }
        self.synth2(&d)
    }
}

/// Source of partial derivatives at the grid nodes.
enum Derivs<'a> {
    Poly(&'a Poly, &'a PhaseGrid),
    Spectral(Vec<C64>),
}

impl Derivs<'_> {
    fn of<'a>(f: &'a GridFunction, sp: &Spectral) -> Derivs<'a> {
        match &f.poly {
            Some(p) => Derivs::Poly(p, &f.grid),
            None => Derivs::Spectral(sp.fft2(&f.values)),
        }
    }

    fn vanishes(&self, oq: u32, op: u32) -> bool {
        matches!(self, Derivs::Poly(p, _) if p.derivative(oq, op).is_zero())
    }

    fn get(&self, sp: &Spectral, oq: u32, op: u32) -> Vec<C64> {
        match self {
            Derivs::Poly(p, g) => {
                let d = p.derivative(oq, op);
                g.nodes().map(|(q, pp)| c(d.eval(q, pp), 0.0)).collect()
            }
            Derivs::Spectral(hat) => sp.derivative(hat, oq, op),
        }
    }
}

fn binomial(n: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// sum over orders n of weight(n) sum_r C(n,r) (-1)^r (d_q^{n-r} d_p^r f)(d_q^r d_p^{n-r} g).
fn bopp_series(f: &Derivs, g: &Derivs, sp: &Spectral, max_n: u32, weight: impl Fn(u32) -> Option<C64>, len: usize) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); len];
    for n in 0..=max_n {
        let Some(w) = weight(n) else { continue };
        for r in 0..=n {
            if f.vanishes(n - r, r) || g.vanishes(r, n - r) {
                continue;
            }
            let coef = w * binomial(n, r) * if r % 2 == 0 { 1.0 } else { -1.0 };
            let a = f.get(sp, n - r, r);
            let b = g.get(sp, r, n - r);
            out.iter_mut().zip(a.iter().zip(&b)).for_each(|(o, (x, y))| *o += coef * x * y);
        }
    }
    out
}

fn check_pair(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if !f.grid.same(&g.grid) {
        return Err(PsError::Domain("star product operands live on different grids".into()));
    }
    f.check_spectral()?;
    g.check_spectral()
}

fn polynomial_degree(f: &GridFunction, g: &GridFunction) -> Option<u32> {
    match (&f.poly, &g.poly) {
        (Some(a), Some(b)) => Some(a.degree().min(b.degree())),
        (Some(a), None) => Some(a.degree()),
        (None, Some(b)) => Some(b.degree()),
        (None, None) => None,
    }
}

/// f * g. A polynomial operand truncates the Bopp series exactly; otherwise the
/// shifted arguments are evaluated by Fourier interpolation.
pub fn star_product(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    check_pair(f, g)?;
    let sp = Spectral::new(&f.grid);
    let h = f.grid.hbar;
    let values = match polynomial_degree(f, g) {
        Some(deg) => {
            let (df, dg) = (Derivs::of(f, &sp), Derivs::of(g, &sp));
            bopp_series(&df, &dg, &sp, deg, |n| Some(c(0.0, h / 2.0).powu(n) / factorial(n)), f.grid.len())
        }
        None => shifted_product(&sp, &f.values, &g.values, h),
    };
    let mut out = GridFunction::new(f.grid.clone(), values, Provenance::Derived)?;
    if let (Some(a), Some(b)) = (&f.poly, &g.poly) {
        if a.degree() == 0 || b.degree() == 0 {
            let (k, other) = if a.degree() == 0 { (a.eval(0.0, 0.0), b) } else { (b.eval(0.0, 0.0), a) };
            out.poly = Some(Poly::new(other.terms.iter().map(|t| (t.0, t.1, t.2 * k)).collect()));
        }
    }
    Ok(out)
}

/// f * g (q, p) = sum_{k,k'} e^{i (k+k') q} f~(k, p + hbar k'/2) g~(k', p - hbar k/2)
/// where f~ is the transform along q only.
fn shifted_product(sp: &Spectral, f: &[C64], g: &[C64], hbar: f64) -> Vec<C64> {
    let (nq, np) = (sp.nq, sp.np);
    let fh = sp.fft2(f);
    let gh = sp.fft2(g);
    // fixed chunking keeps the summation order independent of the thread count
    let chunks = 16.min(nq);
    let per = nq.div_ceil(chunks);
    let partials: Vec<Vec<C64>> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut acc = vec![c(0.0, 0.0); nq * np];
            let mut fr = vec![c(0.0, 0.0); np];
            let mut gr = vec![c(0.0, 0.0); np];
            for cc in (ch * per)..((ch + 1) * per).min(nq) {
                let kc = sp.kq[cc];
                for a in 0..nq {
                    let ka = sp.kq[a];
                    for b in 0..np {
                        let kb = sp.kp[b];
                        fr[b] = fh[a * np + b] * C64::from_polar(1.0, kb * hbar * kc / 2.0);
                        gr[b] = gh[cc * np + b] * C64::from_polar(1.0, -kb * hbar * ka / 2.0);
                    }
                    sp.inv_p.process(&mut fr);
                    sp.inv_p.process(&mut gr);
                    let row = &mut acc[((a + cc) % nq) * np..][..np];
                    row.iter_mut().zip(fr.iter().zip(&gr)).for_each(|(o, (x, y))| *o += x * y);
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![c(0.0, 0.0); nq * np];
    for part in &partials {
        acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    sp.along_q(&mut acc, &sp.inv_q);
    acc
}

/// {{f, g}} = (f * g - g * f) / (i hbar): only odd orders of the series survive.
pub fn moyal_bracket(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    check_pair(f, g)?;
    let sp = Spectral::new(&f.grid);
    let h = f.grid.hbar;
    let real_inputs = f.is_real(0.0) && g.is_real(0.0);
    let mut values = match polynomial_degree(f, g) {
        Some(deg) => bracket_series(&Derivs::of(f, &sp), &Derivs::of(g, &sp), &sp, deg, h, f.grid.len()),
        None => {
            let fg = shifted_product(&sp, &f.values, &g.values, h);
            if real_inputs {
                // conj(f * g) = g * f for real f, g
                fg.iter().map(|v| c(2.0 * v.im / h, 0.0)).collect()
            } else {
                let gf = shifted_product(&sp, &g.values, &f.values, h);
                fg.iter().zip(&gf).map(|(a, b)| (a - b) / c(0.0, h)).collect()
            }
        }
    };
    if real_inputs {
        values.iter_mut().for_each(|v| v.im = 0.0);
    }
    GridFunction::new(f.grid.clone(), values, Provenance::Derived)
}

fn bracket_series(f: &Derivs, g: &Derivs, sp: &Spectral, deg: u32, hbar: f64, len: usize) -> Vec<C64> {
    let weight = |n: u32| {
        (n % 2 == 1).then(|| {
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            c(sign * (hbar / 2.0).powi(n as i32 - 1) / factorial(n), 0.0)
        })
    };
    bopp_series(f, g, sp, deg, weight, len)
}

/// Largest stable RK4 step for dW/dt = {{H, W}} with spectral derivatives.
pub fn step_limit(h: &Poly, grid: &PhaseGrid) -> f64 {
    let kq = std::f64::consts::PI / grid.rect.dq();
    let kp = std::f64::consts::PI / grid.rect.dp();
    let mut lambda = 0.0;
    for n in (1..=h.degree()).step_by(2) {
        let w = (grid.hbar / 2.0).powi(n as i32 - 1) / factorial(n);
        for r in 0..=n {
            let d = h.derivative(n - r, r);
            if !d.is_zero() {
                lambda += w * binomial(n, r) * d.sup_on(grid) * kq.powi(r as i32) * kp.powi((n - r) as i32);
            }
        }
    }
    if lambda == 0.0 {
        f64::INFINITY
    } else {
        RK4_IMAGINARY_LIMIT / lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub function: GridFunction,
    pub time: f64,
    pub steps: usize,
    pub step_limit: f64,
    pub mass_drift: f64,
    pub purity_drift: f64,
    pub padding_fraction: f64,
    pub warnings: Vec<String>,
}

/// RK4 integration of dW/dt = {{H, W}}; H must carry its polynomial form.
pub fn evolve(w0: &GridFunction, h: &GridFunction, dt: f64, steps: usize) -> Result<Evolution> {
    let poly = h
        .poly
        .as_ref()
        .ok_or_else(|| PsError::Domain("evolution needs a polynomial Hamiltonian".into()))?;
    if !w0.grid.same(&h.grid) {
        return Err(PsError::Domain("state and Hamiltonian live on different grids".into()));
    }
    w0.check_spectral()?;
    let grid = &w0.grid;
    let limit = step_limit(poly, grid);
    if !(dt.abs() <= limit) {
        return Err(PsError::StepBound { dt, limit });
    }
    let sp = Spectral::new(grid);
    let dh = Derivs::Poly(poly, grid);
    let deg = poly.degree();
    let len = grid.len();
    let rhs = |w: &[C64]| bracket_series(&dh, &Derivs::Spectral(sp.fft2(w)), &sp, deg, grid.hbar, len);
    let axpy = |x: &[C64], k: &[C64], s: f64| -> Vec<C64> { x.iter().zip(k).map(|(a, b)| a + b * s).collect() };
    let mut w = w0.values.clone();
    for _ in 0..steps {
        let k1 = rhs(&w);
        let k2 = rhs(&axpy(&w, &k1, dt / 2.0));
        let k3 = rhs(&axpy(&w, &k2, dt / 2.0));
        let k4 = rhs(&axpy(&w, &k3, dt));
        for i in 0..len {
            w[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    if w0.is_real(0.0) {
        w.iter_mut().for_each(|v| v.im = 0.0);
    }
    let function = GridFunction { grid: grid.clone(), values: w, provenance: Provenance::State, poly: None };
    let mut warnings = Vec::new();
    let edge = function.boundary_ratio();
    if edge > ALIASING_TOL {
        warnings.push(format!("state reached the grid boundary ({edge:.3e} of peak)"));
    }
    let padding_fraction = function.padding_fraction().min(w0.padding_fraction());
    if padding_fraction < grid.padding {
        warnings.push(format!("padding fraction {padding_fraction:.3} below {}", grid.padding));
    }
    Ok(Evolution {
        time: dt * steps as f64,
        steps,
        step_limit: limit,
        mass_drift: (function.mass() - w0.mass()).norm(),
        purity_drift: (function.purity() - w0.purity()).abs(),
        padding_fraction,
        warnings,
        function,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid64() -> PhaseGrid {
        PhaseGrid::symmetric(7.0, 64, 1.0).unwrap()
    }

    fn gaussian(grid: &PhaseGrid, q0: f64, p0: f64, w: f64) -> GridFunction {
        GridFunction::from_fn(grid, Provenance::State, |q, p| (-((q - q0).powi(2) + (p - p0).powi(2)) / w).exp())
    }

    /// f * g by the convolution-integral form
    /// (1/(pi hbar)^2) int f(x + a) g(x + b) exp((2i/hbar)(a_q b_p - a_p b_q)) da db.
    fn convolution_reference(f: &GridFunction, g: &GridFunction, at: &[(usize, usize)]) -> Vec<C64> {
        let r = &f.grid.rect;
        let h = f.grid.hbar;
        let cell = r.dq() * r.dp();
        let pref = cell * cell / (std::f64::consts::PI * h).powi(2);
        at.iter()
            .map(|&(i0, k0)| {
                let (q0, p0) = (r.q(i0), r.p(k0));
                let mut s = c(0.0, 0.0);
                for i1 in 0..r.n_q {
                    for k1 in 0..r.n_p {
                        let fv = f.get(i1, k1);
                        if fv.norm() < 1e-14 {
                            continue;
                        }
                        let (aq, ap) = (r.q(i1) - q0, r.p(k1) - p0);
                        for i2 in 0..r.n_q {
                            for k2 in 0..r.n_p {
                                let gv = g.get(i2, k2);
                                let (bq, bp) = (r.q(i2) - q0, r.p(k2) - p0);
                                s += fv * gv * C64::from_polar(1.0, 2.0 / h * (aq * bp - ap * bq));
                            }
                        }
                    }
                }
                s * pref
            })
            .collect()
    }

    #[test]
    fn identity_and_commutator() {
        let g = grid64();
        let w = GridFunction::coherent(&g, 1.0, -0.5);
        let one = GridFunction::polynomial(&g, Poly::constant(1.0), Provenance::Derived);
        assert!(star_product(&one, &w).unwrap().sup_distance(&w) < 1e-15);
        assert!(star_product(&w, &one).unwrap().sup_distance(&w) < 1e-15);
        for hbar in [1.0, 0.3] {
            let g = PhaseGrid::symmetric(7.0, 32, hbar).unwrap();
            let q = GridFunction::polynomial(&g, Poly::q(), Provenance::Derived);
            let p = GridFunction::polynomial(&g, Poly::p(), Provenance::Derived);
            let qp = star_product(&q, &p).unwrap();
            let pq = star_product(&p, &q).unwrap();
            for (a, b) in qp.values.iter().zip(&pq.values) {
                assert!((a - b - c(0.0, hbar)).norm() < 1e-8);
            }
            let br = moyal_bracket(&q, &p).unwrap();
            assert!(br.values.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-8));
        }
    }

    #[test]
    fn quadratic_brackets_are_poisson() {
        let g = PhaseGrid::symmetric(3.0, 16, 1.0).unwrap();
        let q2 = GridFunction::polynomial(&g, Poly::new(vec![(2, 0, 1.0)]), Provenance::Derived);
        let p2 = GridFunction::polynomial(&g, Poly::new(vec![(0, 2, 1.0)]), Provenance::Derived);
        let br = moyal_bracket(&q2, &p2).unwrap();
        for ((q, p), v) in g.nodes().zip(&br.values) {
            assert!((v.re - 4.0 * q * p).abs() < 1e-8 && v.im == 0.0);
        }
        // a cubic does pick up a correction: {{q^3, p^3}} = 9 q^2 p^2 - (3/2) hbar^2
        let q3 = GridFunction::polynomial(&g, Poly::new(vec![(3, 0, 1.0)]), Provenance::Derived);
        let p3 = GridFunction::polynomial(&g, Poly::new(vec![(0, 3, 1.0)]), Provenance::Derived);
        let br = moyal_bracket(&q3, &p3).unwrap();
        for ((q, p), v) in g.nodes().zip(&br.values) {
            assert!((v.re - (9.0 * q * q * p * p - 1.5)).abs() < 1e-8);
        }
        let w = GridFunction::coherent(&grid64(), 0.5, 0.5);
        assert!(moyal_bracket(&w, &w).unwrap().values.iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn spectral_path_matches_series() {
        let g = grid64();
        let w = gaussian(&g, 0.7, -0.4, 1.3);
        let mut h = GridFunction::hamiltonian(&g, Poly::quartic());
        let series = moyal_bracket(&h, &w).unwrap();
        // a quartic decays nowhere, so compare through a Gaussian-windowed copy on the interior
        h.poly = None;
        assert!(matches!(moyal_bracket(&h, &w), Err(PsError::Aliasing(_))));
        let a = gaussian(&g, 0.0, 0.0, 2.0);
        let b = gaussian(&g, 0.5, 0.3, 1.5);
        let fast = star_product(&a, &b).unwrap();
        let nodes = [(32, 32), (28, 35), (36, 30), (31, 29)];
        let slow = convolution_reference(&a, &b, &nodes);
        for ((i, k), s) in nodes.iter().zip(&slow) {
            assert!((fast.get(*i, *k) - s).norm() < 1e-6, "{} vs {}", fast.get(*i, *k), s);
        }
        assert!(series.is_real(0.0));
    }

    #[test]
    fn associativity_and_pure_state_projector() {
        let g = grid64();
        let a = gaussian(&g, 0.3, 0.0, 1.2);
        let b = gaussian(&g, -0.4, 0.5, 1.0);
        let d = gaussian(&g, 0.0, -0.6, 1.6);
        let left = star_product(&star_product(&a, &b).unwrap(), &d).unwrap();
        let right = star_product(&a, &star_product(&b, &d).unwrap()).unwrap();
        assert!(left.sup_distance(&right) < 1e-6);
        let w = GridFunction::coherent(&g, 1.0, 0.5);
        assert!(star_product(&w, &w).unwrap().sup_distance(&w) < 1e-8);
    }

    #[test]
    fn star_square_matches_operator_square() {
        use crate::foundation::operator::random_density;
        use crate::hw::{evaluate_rect, FockSpace};
        use rand::SeedableRng;
        let g = PhaseGrid::symmetric(8.0, 96, 1.0).unwrap();
        let space = FockSpace::new(4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(space.dim(), &mut rng);
        let w = GridFunction::from_real(g.clone(), evaluate_rect(&space, &rho, 0.0, &g.rect).unwrap().real_values(), Provenance::State).unwrap();
        let w2 = GridFunction::from_real(g.clone(), evaluate_rect(&space, &(&rho * &rho), 0.0, &g.rect).unwrap().real_values(), Provenance::State).unwrap();
        assert!(star_product(&w, &w).unwrap().sup_distance(&w2) < 1e-5);
        assert!((w.mass().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_and_linear_evolution() {
        let g = grid64();
        let w = GridFunction::coherent(&g, 1.0, 0.0);
        let flat = evolve(&w, &GridFunction::hamiltonian(&g, Poly::constant(3.0)), 0.1, 10).unwrap();
        assert_eq!(flat.function.values, w.values);
        let lin = evolve(&w, &GridFunction::hamiltonian(&g, Poly::q()), 0.01, 100).unwrap();
        let expect = GridFunction::coherent(&g, 1.0, -1.0);
        assert!(lin.function.sup_distance(&expect) < 1e-4);
        assert!(lin.mass_drift < 1e-6);
        let h = GridFunction::hamiltonian(&g, Poly::harmonic());
        let limit = step_limit(&Poly::harmonic(), &g);
        assert!(matches!(evolve(&w, &h, 2.0 * limit, 1), Err(PsError::StepBound { .. })));
        assert!(evolve(&w, &GridFunction::from_fn(&g, Provenance::Hamiltonian, |q, _| q), 0.01, 1).is_err());
    }

    #[test]
    fn harmonic_rotation_and_classical_limit() {
        let g = grid64();
        let w = GridFunction::coherent(&g, 2.0, 0.0);
        let h = GridFunction::hamiltonian(&g, Poly::harmonic());
        let steps = 400;
        let run = evolve(&w, &h, std::f64::consts::FRAC_PI_2 / steps as f64, steps).unwrap();
        assert!(run.function.sup_distance(&GridFunction::coherent(&g, 0.0, -2.0)) < 1e-3);
        assert!(run.mass_drift < 1e-6 && run.purity_drift < 1e-5);

        // near-classical quartic flow against characteristics traced back from each node
        let gc = PhaseGrid::symmetric(7.0, 64, 1e-6).unwrap();
        let w0 = gaussian(&gc, 0.5, 0.0, 1.0);
        let hq = GridFunction::hamiltonian(&gc, Poly::quartic());
        let (t, n) = (0.3, 600);
        let run = evolve(&w0, &hq, t / n as f64, n).unwrap();
        let back = |q: f64, p: f64| {
            let f = |(q, p): (f64, f64)| (-p, q.powi(3));
            let (mut x, m, dt) = ((q, p), 200, t / 200.0);
            for _ in 0..m {
                let k1 = f(x);
                let k2 = f((x.0 + dt / 2.0 * k1.0, x.1 + dt / 2.0 * k1.1));
                let k3 = f((x.0 + dt / 2.0 * k2.0, x.1 + dt / 2.0 * k2.1));
                let k4 = f((x.0 + dt * k3.0, x.1 + dt * k3.1));
                x = (x.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), x.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1));
            }
            (-((x.0 - 0.5).powi(2) + x.1.powi(2))).exp()
        };
        let oracle = GridFunction::from_fn(&gc, Provenance::State, back);
        assert!(run.function.sup_distance(&oracle) < 1e-3, "{}", run.function.sup_distance(&oracle));
    }
}
