//! Kernel specifications, phase-space points and sampled functions.

use serde::{Deserialize, Serialize};

use super::operator::{c, C64};
use super::quadrature::SphereGrid;
use crate::error::{PsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Hw { n_max: usize },
    Su2 { two_j: u32 },
    Wootters,
    Sun { n: usize },
    /// Per-factor ordering parameters live in the factor specs.
    Composite { factors: Vec<KernelSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: Family,
    pub s: f64,
}

impl KernelSpec {
    pub fn new(family: Family, s: f64) -> Result<KernelSpec> {
        if !(-1.0..=1.0).contains(&s) || !s.is_finite() {
            return Err(PsError::Domain(format!("ordering parameter s = {s} outside [-1, 1]")));
        }
        match &family {
            Family::Hw { n_max } if *n_max == 0 => {
                return Err(PsError::Domain("Fock cutoff must be at least 1".into()))
            }
            Family::Sun { n } if *n < 2 => return Err(PsError::Domain(format!("SU(N) needs N >= 2, got {n}"))),
            Family::Composite { factors } if factors.is_empty() => {
                return Err(PsError::Domain("composite spec needs at least one factor".into()))
            }
            _ => {}
        }
        Ok(KernelSpec { family, s })
    }

    pub fn hw(n_max: usize, s: f64) -> Result<KernelSpec> {
        KernelSpec::new(Family::Hw { n_max }, s)
    }

    /// Spin j given as a real number (0, 0.5, 1, ...).
    pub fn su2(j: f64, s: f64) -> Result<KernelSpec> {
        let t = super::special::twice(j)?;
        if t < 0 {
            return Err(PsError::Domain(format!("spin j = {j} is negative")));
        }
        KernelSpec::new(Family::Su2 { two_j: t as u32 }, s)
    }

    pub fn wootters(s: f64) -> Result<KernelSpec> {
        KernelSpec::new(Family::Wootters, s)
    }

    pub fn sun(n: usize, s: f64) -> Result<KernelSpec> {
        KernelSpec::new(Family::Sun { n }, s)
    }

    pub fn composite(factors: Vec<KernelSpec>) -> Result<KernelSpec> {
        KernelSpec::new(Family::Composite { factors }, 0.0)
    }

    pub fn with_s(&self, s: f64) -> Result<KernelSpec> {
        let family = match &self.family {
            Family::Composite { factors } => Family::Composite {
                factors: factors.iter().map(|f| f.with_s(s)).collect::<Result<_>>()?,
            },
            f => f.clone(),
        };
        KernelSpec::new(family, s)
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        match &self.family {
            Family::Hw { n_max } => n_max + 1,
            Family::Su2 { two_j } => *two_j as usize + 1,
            Family::Wootters => 2,
            Family::Sun { n } => *n,
            Family::Composite { factors } => factors.iter().map(|f| f.dim()).product(),
        }
    }

    /// Total measure of the phase space: equals the dimension for finite families.
    pub fn measure_total(&self) -> f64 {
        self.dim() as f64
    }

    pub fn same_family(&self, other: &KernelSpec) -> bool {
        match (&self.family, &other.family) {
            (Family::Composite { factors: a }, Family::Composite { factors: b }) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_family(y))
            }
            (a, b) => a == b,
        }
    }

    pub fn is_finite_family(&self) -> bool {
        match &self.family {
            Family::Hw { .. } => false,
            Family::Composite { factors } => factors.iter().all(|f| f.is_finite_family()),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerPoint {
    pub phi: f64,
    pub theta: f64,
    #[serde(rename = "Phi")]
    pub big_phi: f64,
}

impl EulerPoint {
    pub fn new(phi: f64, theta: f64, big_phi: f64) -> EulerPoint {
        EulerPoint { phi, theta, big_phi }
    }

    /// Point on the sphere (Phi = 0).
    pub fn sphere(theta: f64, phi: f64) -> EulerPoint {
        EulerPoint { phi, theta, big_phi: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub z: u8,
    pub x: u8,
}

impl LatticePoint {
    pub fn new(z: u8, x: u8) -> LatticePoint {
        LatticePoint { z: z & 1, x: x & 1 }
    }

    /// Points in row-major (z, x) order: (0,0), (0,1), (1,0), (1,1).
    pub fn all() -> [LatticePoint; 4] {
        [LatticePoint::new(0, 0), LatticePoint::new(0, 1), LatticePoint::new(1, 0), LatticePoint::new(1, 1)]
    }

    pub fn index(&self) -> usize {
        2 * self.z as usize + self.x as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SunPoint {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(rename = "Phi")]
    pub big_phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhasePoint {
    Cv { re: f64, im: f64 },
    Euler(EulerPoint),
    Lattice(LatticePoint),
    Sun(SunPoint),
    Composite { factors: Vec<PhasePoint> },
}

impl PhasePoint {
    pub fn cv(alpha: C64) -> PhasePoint {
        PhasePoint::Cv { re: alpha.re, im: alpha.im }
    }
}

/// Uniform rectangle in (q, p) with alpha = (q + i p)/sqrt(2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub n_q: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl RectGrid {
    pub fn symmetric(extent: f64, n: usize) -> RectGrid {
        RectGrid { q_min: -extent, q_max: extent, n_q: n, p_min: -extent, p_max: extent, n_p: n }
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, k: usize) -> f64 {
        self.p_min + k as f64 * self.dp()
    }

    /// Points in q-major order.
    pub fn alphas(&self) -> Vec<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = Vec::with_capacity(self.n_q * self.n_p);
        for i in 0..self.n_q {
            for k in 0..self.n_p {
                v.push(c(self.q(i) * r, self.p(k) * r));
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Sphere(SphereGrid),
    /// 4^n lattice points; per qubit index 2z + x, first qubit most significant.
    Lattice { n_qubits: usize },
    Rect(RectGrid),
    CvPoints { alphas: Vec<(f64, f64)> },
    SunPoints { points: Vec<SunPoint> },
    /// Cartesian product of factor domains, first factor most significant.
    Product { factors: Vec<Domain> },
    /// Arbitrary labelled points (slices), no integration weights.
    Points { labels: Vec<String>, coords: Vec<Vec<f64>> },
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Sphere(g) => g.len(),
            Domain::Lattice { n_qubits } => 1usize << (2 * n_qubits),
            Domain::Rect(r) => r.n_q * r.n_p,
            Domain::CvPoints { alphas } => alphas.len(),
            Domain::SunPoints { points } => points.len(),
            Domain::Product { factors } => factors.iter().map(|f| f.len()).product(),
            Domain::Points { coords, .. } => coords.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Values of a phase-space function together with how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub spec: KernelSpec,
    pub domain: Domain,
    pub values: Vec<C64>,
    pub real: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SampledFunction {
    pub fn new(spec: KernelSpec, domain: Domain, values: Vec<C64>, real: bool) -> SampledFunction {
        SampledFunction { spec, domain, values, real, warnings: Vec::new() }
    }

    pub fn from_real(spec: KernelSpec, domain: Domain, values: &[f64]) -> SampledFunction {
        SampledFunction::new(spec, domain, values.iter().map(|v| c(*v, 0.0)).collect(), true)
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Integration weights in the measure of the owning family, if the domain has them.
    pub fn weights(&self) -> Result<Vec<f64>> {
        domain_weights(&self.spec, &self.domain)
    }

    /// Integral of the function over its domain.
    pub fn integral(&self) -> Result<C64> {
        let w = self.weights()?;
        Ok(self.values.iter().zip(&w).map(|(v, w)| v * *w).sum())
    }
}

pub fn domain_weights(spec: &KernelSpec, domain: &Domain) -> Result<Vec<f64>> {
    match (domain, &spec.family) {
        (Domain::Sphere(g), Family::Su2 { two_j }) => {
            let f = (*two_j as f64 + 1.0) / g.total;
            Ok(g.nodes.iter().map(|n| n.weight * f).collect())
        }
        (Domain::Sphere(g), _) => Ok(g.nodes.iter().map(|n| n.weight).collect()),
        (Domain::Lattice { n_qubits }, _) => {
            let w = 0.5f64.powi(*n_qubits as i32);
            Ok(vec![w; 1usize << (2 * n_qubits)])
        }
        (Domain::Rect(r), _) => {
            // trapezoid in q and p, measure dq dp / (2 pi)
            let mut w = Vec::with_capacity(r.n_q * r.n_p);
            let base = r.dq() * r.dp() / (2.0 * std::f64::consts::PI);
            for i in 0..r.n_q {
                let wi = if i == 0 || i == r.n_q - 1 { 0.5 } else { 1.0 };
                for k in 0..r.n_p {
                    let wk = if k == 0 || k == r.n_p - 1 { 0.5 } else { 1.0 };
                    w.push(base * wi * wk);
                }
            }
            Ok(w)
        }
        (Domain::Product { factors }, Family::Composite { factors: specs }) => {
            if factors.len() != specs.len() {
                return Err(PsError::Domain("product domain arity differs from spec".into()));
            }
            let mut w = vec![1.0];
            for (d, s) in factors.iter().zip(specs) {
                let fw = domain_weights(s, d)?;
                let mut next = Vec::with_capacity(w.len() * fw.len());
                for a in &w {
                    for b in &fw {
                        next.push(a * b);
                    }
                }
                w = next;
            }
            Ok(w)
        }
        (Domain::SunPoints { points }, Family::Sun { n }) => {
            // equal-weight Monte Carlo estimate of the measure-N integral
            let w = *n as f64 / points.len().max(1) as f64;
            Ok(vec![w; points.len()])
        }
        _ => Err(PsError::Domain("domain carries no integration weights".into())),
    }
}
