use std::io::Write;
use std::path::{Path, PathBuf};

use phasespace::composite::{circle_coords, count_sign_changes, qubit_specs, slice_evaluate, sphere_coords, SliceSpec};
use phasespace::foundation::axioms::{verify_with_mode, VerifyMode};
use phasespace::foundation::kernel::{Domain, KernelSpec, RectGrid, SampledFunction};
use phasespace::foundation::operator::trace_product;
use phasespace::foundation::quadrature::{sphere_quadrature, SphereGrid};
use phasespace::foundation::transforms::{evaluate_operator, generalized_fourier};
use phasespace::hw::{self, FockSpace, DEFAULT_N_MAX};
use phasespace::metrics::{self, JAxis};
use phasespace::moyal::{self, snapshot, GridFunction, PhaseGrid, Poly, Provenance};
use phasespace::su2::{self, SpinSystem};
use phasespace::sun::{self, SunSystem};
use phasespace::{tomography, wootters, EulerPoint, Operator, PsError};
use serde::Serialize;

use crate::io::{self, fmt_f64, MatrixFile, OutputRecord, RunManifest, StateContext};
use crate::{
    AxisArg, Cli, CliError, Command, DfeArgs, EvalAction, EvalArgs, EvolveArgs, FamilyArg, HamiltonianArg, KernelAction,
    MetricArg, MetricsArgs, ModeArg, ReconstructArgs, ReplayArgs, SliceArgs, SliceKindArg, SystemArgs, TransformArgs,
    VerifyArgs,
};

pub struct Run {
    argv: Vec<String>,
    write_manifest: bool,
    pub outputs: Vec<OutputRecord>,
    seed: Option<u64>,
}

impl Run {
    pub fn new(argv: Vec<String>, write_manifest: bool) -> Run {
        Run { argv, write_manifest, outputs: Vec::new(), seed: None }
    }

    fn file(&mut self, flag: &str, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        let p = io::resolve_out(path);
        io::atomic_write(&p, bytes)?;
        self.outputs.push(OutputRecord { flag: flag.into(), path: p.display().to_string(), sha256: io::sha256_hex(bytes) });
        Ok(())
    }

    /// Writes to `path` when given, otherwise to standard output.
    fn emit(&mut self, flag: &str, path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
        match path {
            Some(p) => self.file(flag, p, bytes),
            None => stdout(bytes),
        }
    }

    pub fn finish(&self, cli: &Cli, wall_time_s: f64) -> Result<(), CliError> {
        let Some(first) = self.outputs.first() else { return Ok(()) };
        if !self.write_manifest {
            return Ok(());
        }
        let m = RunManifest {
            command: self.argv.clone(),
            cwd: std::env::current_dir().map(|p| p.display().to_string()).unwrap_or_default(),
            parameters: serde_json::to_value(cli).map_err(|e| CliError::Io(e.to_string()))?,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            threads: cli.threads,
            wall_time_s,
            outputs: self.outputs.clone(),
        };
        let bytes = json_bytes(&m)?;
        io::atomic_write(&io::manifest_path(Path::new(&first.path)), &bytes)
    }
}

fn stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

pub fn dispatch(cli: &Cli, run: &mut Run) -> Result<(), CliError> {
    match &cli.command {
        Command::Kernel { action: KernelAction::Verify(a) } => verify(a, run),
        Command::Wigner { action: EvalAction::Eval(a) } => eval(a, EvalKind::Wigner, run),
        Command::Qfunc { action: EvalAction::Eval(a) } => eval(a, EvalKind::Q, run),
        Command::Weyl { action: EvalAction::Eval(a) } => eval(a, EvalKind::Weyl, run),
        Command::Transform(a) => transform(a, run),
        Command::Slice(a) => slice(a, run),
        Command::Metrics(a) => metrics_cmd(a, run),
        Command::Dfe(a) => dfe(a, run),
        Command::Reconstruct(a) => reconstruct(a, run),
        Command::Evolve(a) => evolve(a, run),
        Command::Replay(a) => replay(a),
    }
}

fn require<T: Copy>(v: Option<T>, flag: &str, family: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{family} needs {flag}")))
}

fn system_dim(sys: &SystemArgs) -> Option<usize> {
    match sys.family {
        FamilyArg::Su2 => sys.j.map(|j| (2.0 * j).round() as usize + 1),
        FamilyArg::Wootters => Some(1 << sys.qubits.unwrap_or(1)),
        FamilyArg::Sun => sys.n,
        FamilyArg::Hw => Some(sys.cutoff.unwrap_or(DEFAULT_N_MAX) + 1),
    }
}

fn context(sys: &SystemArgs) -> StateContext {
    StateContext { j: sys.j, qubits: sys.qubits, cutoff: sys.cutoff.or(Some(DEFAULT_N_MAX)), dim: system_dim(sys) }
}

fn spin(sys: &SystemArgs) -> Result<SpinSystem, CliError> {
    Ok(SpinSystem::new(require(sys.j, "--j", "su2")?)?)
}

fn wootters_spec(n: usize, s: f64) -> Result<(KernelSpec, Domain), CliError> {
    if n == 1 {
        return Ok((KernelSpec::wootters(s)?, Domain::Lattice { n_qubits: 1 }));
    }
    let spec = KernelSpec::composite(qubit_lattice(n, s)?)?;
    Ok((spec, Domain::Product { factors: vec![Domain::Lattice { n_qubits: 1 }; n] }))
}

fn qubit_lattice(n: usize, s: f64) -> Result<Vec<KernelSpec>, CliError> {
    (0..n).map(|_| Ok(KernelSpec::wootters(s)?)).collect()
}

fn verify(a: &VerifyArgs, run: &mut Run) -> Result<(), CliError> {
    run.seed = Some(a.seed);
    let sys = &a.system;
    let spec = match sys.family {
        FamilyArg::Hw => KernelSpec::hw(sys.cutoff.unwrap_or(DEFAULT_N_MAX), a.s)?,
        FamilyArg::Su2 => KernelSpec::su2(require(sys.j, "--j", "su2")?, a.s)?,
        FamilyArg::Wootters => wootters_spec(sys.qubits.unwrap_or(1), a.s)?.0,
        FamilyArg::Sun => KernelSpec::sun(require(sys.n, "--n", "sun")?, a.s)?,
    };
    let mode = match a.mode {
        ModeArg::Auto => VerifyMode::Auto,
        ModeArg::MonteCarlo => VerifyMode::MonteCarlo { samples: a.samples },
        ModeArg::BareParity => VerifyMode::BareParity,
    };
    let report = verify_with_mode(&spec, a.trials, a.seed, mode)?;
    run.emit("--out", a.out.as_ref(), &json_bytes(&report)?)?;
    if !report.passed {
        return Err(CliError::Tolerance(format!(
            "largest axiom residual {:.3e} exceeds tolerance {:.1e}",
            report.max_residual(),
            report.tolerance
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum EvalKind {
    Wigner,
    Q,
    Weyl,
}

fn parse_grid(g: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("grid `{g}` is not of the form AxB"));
    let (a, b) = g.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn eval(a: &EvalArgs, kind: EvalKind, run: &mut Run) -> Result<(), CliError> {
    let s = match kind {
        EvalKind::Wigner => a.s.unwrap_or(0.0),
        EvalKind::Q => match a.s {
            Some(v) if v != -1.0 => return Err(CliError::Usage("qfunc is fixed at s = -1".into())),
            _ => -1.0,
        },
        EvalKind::Weyl => {
            if a.s.is_some() {
                return Err(CliError::Usage("weyl takes no ordering parameter".into()));
            }
            0.0
        }
    };
    let rho = io::load_state(&a.state, &context(&a.system))?;
    let sys = &a.system;
    let bytes = match sys.family {
        FamilyArg::Su2 => {
            let spin = spin(sys)?;
            phasespace::foundation::operator::check_dim(&rho, spin.dim())?;
            let nodes: Vec<(f64, f64)> = match a.grid.as_deref() {
                Some("net") => tomography::sample_net(spin.two_j),
                Some(g) => {
                    let (t, p) = parse_grid(g)?;
                    SphereGrid::product(t, p).nodes.iter().map(|n| (n.theta, n.phi)).collect()
                }
                None => sphere_quadrature(2 * spin.two_j as usize).nodes.iter().map(|n| (n.theta, n.phi)).collect(),
            };
            if kind == EvalKind::Weyl {
                let rows = nodes
                    .iter()
                    .map(|(t, p)| {
                        let v = su2::weyl(&spin, &rho, EulerPoint::sphere(*t, *p))?;
                        Ok(vec![fmt_f64(*t), fmt_f64(*p), fmt_f64(v.re), fmt_f64(v.im)])
                    })
                    .collect::<Result<Vec<_>, PsError>>()?;
                io::csv_bytes(&["theta", "phi", "value_re", "value_im"], rows)?
            } else {
                let diag = spin.parity_diagonal(s)?;
                let rows = nodes.iter().map(|(t, p)| {
                    vec![fmt_f64(*t), fmt_f64(*p), fmt_f64(spin.value_with_diag(&rho, &diag, *t, *p).re)]
                });
                io::csv_bytes(&["theta", "phi", "value"], rows)?
            }
        }
        FamilyArg::Hw => {
            let space = FockSpace::new(rho.nrows() - 1)?;
            let (nq, np) = parse_grid(a.grid.as_deref().unwrap_or("81x81"))?;
            let e = a.extent;
            let rect = RectGrid { q_min: -e, q_max: e, n_q: nq, p_min: -e, p_max: e, n_p: np };
            let qp: Vec<(f64, f64)> = (0..nq).flat_map(|i| (0..np).map(move |k| (i, k))).map(|(i, k)| (rect.q(i), rect.p(k))).collect();
            if kind == EvalKind::Weyl {
                let alphas = rect.alphas();
                let rows = qp
                    .iter()
                    .zip(&alphas)
                    .map(|((q, p), xi)| {
                        let v = hw::characteristic(&space, &rho, *xi, 0.0)?;
                        Ok(vec![fmt_f64(*q), fmt_f64(*p), fmt_f64(v.re), fmt_f64(v.im)])
                    })
                    .collect::<Result<Vec<_>, PsError>>()?;
                io::csv_bytes(&["q", "p", "value_re", "value_im"], rows)?
            } else {
                let f = hw::evaluate_rect(&space, &rho, s, &rect)?;
                let rows = qp.iter().zip(f.real_values()).map(|((q, p), v)| vec![fmt_f64(*q), fmt_f64(*p), fmt_f64(v)]);
                io::csv_bytes(&["q", "p", "value"], rows)?
            }
        }
        FamilyArg::Wootters => {
            let d = rho.nrows();
            if !d.is_power_of_two() || d < 2 {
                return Err(PsError::Dimension { expected: 2, got: d }.into());
            }
            let n = d.trailing_zeros() as usize;
            let f = if kind == EvalKind::Weyl {
                wootters::discrete_weyl(&rho)?
            } else {
                wootters::wigner_multi(&rho, n, s)?
            };
            let label = |k: usize| {
                let (mut z, mut x) = (0usize, 0usize);
                for q in 0..n {
                    let local = (k >> (2 * (n - 1 - q))) & 3;
                    z = (z << 1) | (local >> 1);
                    x = (x << 1) | (local & 1);
                }
                (z, x)
            };
            if kind == EvalKind::Weyl {
                let rows = f.values.iter().enumerate().map(|(k, v)| {
                    let (z, x) = label(k);
                    vec![z.to_string(), x.to_string(), fmt_f64(v.re), fmt_f64(v.im)]
                });
                io::csv_bytes(&["z", "x", "value_re", "value_im"], rows)?
            } else {
                let rows = f.values.iter().enumerate().map(|(k, v)| {
                    let (z, x) = label(k);
                    vec![z.to_string(), x.to_string(), fmt_f64(v.re)]
                });
                io::csv_bytes(&["z", "x", "value"], rows)?
            }
        }
        FamilyArg::Sun => {
            if kind == EvalKind::Weyl {
                return Err(PsError::Family("weyl eval is not available for sun".into()).into());
            }
            let n = require(sys.n, "--n", "sun")?;
            let seed = a.seed.ok_or(PsError::SeedRequired)?;
            run.seed = Some(seed);
            let system = SunSystem::new(n)?;
            let points = sun::haar_points(n, a.samples, seed)?;
            let f = sun::evaluate_sun(&system, &rho, s, &points)?;
            let k = points.first().map(|p| p.phi.len()).unwrap_or(0);
            let mut header: Vec<String> = Vec::new();
            for name in ["phi", "theta", "Phi"] {
                let count = match name {
                    "phi" => k,
                    "theta" => points.first().map(|p| p.theta.len()).unwrap_or(0),
                    _ => points.first().map(|p| p.big_phi.len()).unwrap_or(0),
                };
                header.extend((1..=count).map(|i| format!("{name}_{i}")));
            }
            header.push("value".into());
            let rows = points.iter().zip(f.real_values()).map(|(p, v)| {
                let mut r: Vec<String> = p.phi.iter().chain(&p.theta).chain(&p.big_phi).map(|x| fmt_f64(*x)).collect();
                r.push(fmt_f64(v));
                r
            });
            let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            io::csv_bytes(&h, rows)?
        }
    };
    run.emit("--out", a.out.as_ref(), &bytes)
}

/// Rebuilds the product quadrature grid a sphere CSV was sampled on.
fn sphere_grid_from(thetas: &[f64], phis: &[f64]) -> Result<SphereGrid, CliError> {
    let mut distinct: Vec<f64> = Vec::new();
    for t in thetas {
        if !distinct.iter().any(|d| (d - t).abs() < 1e-12) {
            distinct.push(*t);
        }
    }
    let nt = distinct.len();
    if nt == 0 || thetas.len() % nt != 0 {
        return Err(PsError::GridCoverage("input rows do not form a product grid".into()).into());
    }
    let grid = SphereGrid::product(nt, thetas.len() / nt);
    let ok = grid.nodes.iter().zip(thetas.iter().zip(phis)).all(|(n, (t, p))| (n.theta - t).abs() < 1e-9 && (n.phi - p).abs() < 1e-9);
    if !ok {
        return Err(PsError::GridCoverage("input rows are not a Gauss-Legendre product grid in eval order".into()).into());
    }
    Ok(grid)
}

fn transform(a: &TransformArgs, run: &mut Run) -> Result<(), CliError> {
    let (header, rows) = io::read_csv(&a.input)?;
    let bytes = match a.system.family {
        FamilyArg::Su2 => {
            let (ct, cp, cv) = (io::column(&header, "theta")?, io::column(&header, "phi")?, io::column(&header, "value")?);
            let thetas: Vec<f64> = rows.iter().map(|r| r[ct]).collect();
            let phis: Vec<f64> = rows.iter().map(|r| r[cp]).collect();
            let values: Vec<f64> = rows.iter().map(|r| r[cv]).collect();
            let grid = sphere_grid_from(&thetas, &phis)?;
            let spec = KernelSpec::su2(require(a.system.j, "--j", "su2")?, a.from_s)?;
            let f = SampledFunction::from_real(spec.clone(), Domain::Sphere(grid), &values);
            let g = generalized_fourier(&f, &spec.with_s(a.to_s)?)?;
            let out = thetas
                .iter()
                .zip(&phis)
                .zip(g.real_values())
                .map(|((t, p), v)| vec![fmt_f64(*t), fmt_f64(*p), fmt_f64(v)]);
            io::csv_bytes(&["theta", "phi", "value"], out)?
        }
        FamilyArg::Wootters => {
            let (cz, cx, cv) = (io::column(&header, "z")?, io::column(&header, "x")?, io::column(&header, "value")?);
            if rows.len() != 4 {
                return Err(PsError::Dimension { expected: 4, got: rows.len() }.into());
            }
            let values: Vec<f64> = rows.iter().map(|r| r[cv]).collect();
            let moved = wootters::transform_values(&values, a.from_s, a.to_s);
            let out = rows.iter().zip(moved).map(|(r, v)| vec![(r[cz] as u8).to_string(), (r[cx] as u8).to_string(), fmt_f64(v)]);
            io::csv_bytes(&["z", "x", "value"], out)?
        }
        _ => return Err(PsError::Family("transform reads su2 or wootters tables".into()).into()),
    };
    run.emit("--out", a.out.as_ref(), &bytes)
}

#[derive(Serialize)]
struct SliceSummary {
    kind: SliceKindArg,
    qubits: usize,
    points: usize,
    min: f64,
    max: f64,
    sign_changes: Option<usize>,
}

fn slice(a: &SliceArgs, run: &mut Run) -> Result<(), CliError> {
    let ctx = StateContext { qubits: Some(a.qubits), dim: Some(1 << a.qubits), ..Default::default() };
    let rho = io::load_state(&a.state, &ctx)?;
    let specs = qubit_specs(a.qubits, a.s)?;
    let (spec, coords) = match a.kind {
        SliceKindArg::Equatorial => (SliceSpec::equatorial(a.qubits), circle_coords(a.points)),
        SliceKindArg::EqualAngle => (SliceSpec::equal_angle(a.qubits), sphere_coords(a.points / 2 + 1, a.points)),
        SliceKindArg::AxisPair => {
            let n = a.points / 2 + 1;
            let t = |i: usize| std::f64::consts::PI * i as f64 / (n - 1) as f64;
            (SliceSpec::axis_pair(), (0..n).flat_map(|i| (0..n).map(move |k| vec![t(i), t(k)])).collect())
        }
    };
    let f = slice_evaluate(&rho, &specs, &spec, &coords)?;
    let values = f.real_values();
    let mut header: Vec<&str> = spec.variables.iter().map(|s| s.as_str()).collect();
    header.push("value");
    let rows = coords.iter().zip(&values).map(|(x, v)| {
        let mut r: Vec<String> = x.iter().map(|c| fmt_f64(*c)).collect();
        r.push(fmt_f64(*v));
        r
    });
    let bytes = io::csv_bytes(&header, rows)?;
    let summary = SliceSummary {
        kind: a.kind,
        qubits: a.qubits,
        points: values.len(),
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        sign_changes: (a.kind == SliceKindArg::Equatorial).then(|| count_sign_changes(&values, true, 1e-12)),
    };
    match &a.out {
        Some(p) => {
            run.file("--out", p, &bytes)?;
            stdout(&json_bytes(&summary)?)
        }
        None => stdout(&bytes),
    }
}

#[derive(Serialize)]
struct MetricOutput {
    metric: MetricArg,
    value: f64,
    warnings: Vec<String>,
}

fn hw_rect() -> RectGrid {
    RectGrid::symmetric(8.0, 161)
}

fn metrics_cmd(a: &MetricsArgs, run: &mut Run) -> Result<(), CliError> {
    let ctx = context(&a.system);
    let rho = io::load_state(&a.state, &ctx)?;
    let second = || -> Result<Operator, CliError> {
        let s = a.state2.as_deref().ok_or_else(|| CliError::Usage("this metric needs --state2".into()))?;
        io::load_state(s, &ctx)
    };
    let mut warnings = Vec::new();
    let sys = &a.system;
    let value = match sys.family {
        FamilyArg::Su2 => {
            let spin = spin(sys)?;
            phasespace::foundation::operator::check_dim(&rho, spin.dim())?;
            let grid = sphere_quadrature(2 * spin.two_j as usize);
            let w = |r: &Operator, s: f64| su2::evaluate(&spin, r, s, &grid);
            match a.metric {
                MetricArg::Purity => metrics::purity(&w(&rho, 0.0)?)?,
                MetricArg::Fidelity => metrics::fidelity_ps(&w(&rho, 0.0)?, &w(&second()?, 0.0)?)?,
                MetricArg::TraceDistance => {
                    let other = second()?;
                    if spin.two_j == 1 {
                        metrics::trace_distance_qubit(&w(&(&rho - &other), 0.0)?)?
                    } else {
                        metrics::trace_distance(&rho, &other)?
                    }
                }
                MetricArg::Negativity => {
                    let r = metrics::negativity_volume(&w(&rho, 0.0)?)?;
                    warnings = r.warnings;
                    r.value
                }
                MetricArg::Wehrl => {
                    let r = metrics::wehrl_entropy(&su2::q_function(&spin, &rho, &grid)?)?;
                    warnings = r.warnings;
                    r.value
                }
                MetricArg::Expect => {
                    let axis = match a.axis.ok_or_else(|| CliError::Usage("expect needs --axis".into()))? {
                        AxisArg::X => JAxis::Jx,
                        AxisArg::Y => JAxis::Jy,
                        AxisArg::Z => JAxis::Jz,
                    };
                    metrics::expectation_from_moments(&w(&rho, 0.0)?, axis)?
                }
            }
        }
        FamilyArg::Wootters => {
            let d = rho.nrows();
            if !d.is_power_of_two() || d < 2 {
                return Err(PsError::Dimension { expected: 2, got: d }.into());
            }
            let n = d.trailing_zeros() as usize;
            let w = |r: &Operator, s: f64| -> Result<SampledFunction, CliError> {
                let (spec, dom) = wootters_spec(n, s)?;
                Ok(evaluate_operator(r, &spec, &dom)?)
            };
            match a.metric {
                MetricArg::Purity => metrics::purity(&w(&rho, 0.0)?)?,
                MetricArg::Fidelity => metrics::fidelity_ps(&w(&rho, 0.0)?, &w(&second()?, 0.0)?)?,
                MetricArg::TraceDistance => {
                    let other = second()?;
                    if n == 1 {
                        metrics::trace_distance_qubit(&w(&(&rho - &other), 0.0)?)?
                    } else {
                        metrics::trace_distance(&rho, &other)?
                    }
                }
                MetricArg::Negativity => {
                    let r = metrics::negativity_volume(&w(&rho, 0.0)?)?;
                    warnings = r.warnings;
                    r.value
                }
                MetricArg::Wehrl => {
                    let r = metrics::wehrl_entropy(&w(&rho, -1.0)?)?;
                    warnings = r.warnings;
                    r.value
                }
                MetricArg::Expect => return Err(PsError::Family("expect needs a spin function".into()).into()),
            }
        }
        FamilyArg::Hw | FamilyArg::Sun => match a.metric {
            MetricArg::Purity => metrics::purity_of(&rho),
            MetricArg::Fidelity => {
                let other = second()?;
                phasespace::foundation::operator::check_dim(&other, rho.nrows())?;
                trace_product(&rho, &other).re
            }
            MetricArg::TraceDistance => metrics::trace_distance(&rho, &second()?)?,
            MetricArg::Negativity | MetricArg::Wehrl if sys.family == FamilyArg::Hw => {
                let space = FockSpace::new(rho.nrows() - 1)?;
                let s = if a.metric == MetricArg::Wehrl { -1.0 } else { 0.0 };
                let f = hw::evaluate_rect(&space, &rho, s, &hw_rect())?;
                let r = if s == 0.0 { metrics::negativity_volume(&f)? } else { metrics::wehrl_entropy(&f)? };
                warnings = r.warnings;
                r.value
            }
            _ => return Err(PsError::Family("metric not available for this family".into()).into()),
        },
    };
    let out = MetricOutput { metric: a.metric, value, warnings };
    run.emit("--out", a.out.as_ref(), &json_bytes(&out)?)
}

fn dfe(a: &DfeArgs, run: &mut Run) -> Result<(), CliError> {
    run.seed = Some(a.seed);
    let ctx = StateContext { qubits: a.qubits, dim: a.qubits.map(|n| 1 << n), ..Default::default() };
    let target = io::load_state(&a.target, &ctx)?;
    let ctx = StateContext { dim: Some(target.nrows()), ..ctx };
    let actual = io::load_state(&a.state, &ctx)?;
    let est = metrics::dfe_sample(&a.target, &target, &actual, a.samples, Some(a.seed))?;
    run.emit("--out", a.out.as_ref(), &json_bytes(&est)?)
}

fn reconstruct(a: &ReconstructArgs, run: &mut Run) -> Result<(), CliError> {
    let (header, rows) = io::read_csv(&a.samples)?;
    let (ct, cp, cv) = (io::column(&header, "theta")?, io::column(&header, "phi")?, io::column(&header, "value")?);
    let samples: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r[ct], r[cp], r[cv])).collect();
    let spin = SpinSystem::new(a.j)?;
    let (report, rho) = tomography::reconstruct_from_grid(spin.two_j, &samples, a.s)?;
    run.emit("--out", a.out.as_ref(), &json_bytes(&MatrixFile::from_operator(&rho))?)?;
    run.emit("--report", a.report.as_ref(), &json_bytes(&report)?)
}

#[derive(Serialize)]
struct EvolveSummary {
    time: f64,
    steps: usize,
    dt: f64,
    step_limit: f64,
    mass_drift: f64,
    purity_drift: f64,
    padding_fraction: f64,
    warnings: Vec<String>,
}

#[derive(serde::Deserialize)]
struct PolyFile {
    terms: Vec<(u32, u32, f64)>,
}

fn evolve(a: &EvolveArgs, run: &mut Run) -> Result<(), CliError> {
    let poly = match a.hamiltonian {
        HamiltonianArg::Harmonic => Poly::harmonic(),
        HamiltonianArg::Linear => Poly::q(),
        HamiltonianArg::Quartic => Poly::quartic(),
        HamiltonianArg::File => {
            let p = a.hamiltonian_file.as_ref().ok_or_else(|| CliError::Usage("--hamiltonian file needs --hamiltonian-file".into()))?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let f: PolyFile = serde_json::from_str(&text).map_err(|e| PsError::Parse(e.to_string()))?;
            Poly::new(f.terms)
        }
    };
    let path = Path::new(&a.state);
    let w0 = match std::fs::read(path) {
        Ok(bytes) if bytes.starts_with(snapshot::MAGIC) => snapshot::decode(&bytes)?,
        _ => {
            let (nq, np) = parse_grid(&a.grid)?;
            let e = a.extent;
            let grid = PhaseGrid::new(RectGrid { q_min: -e, q_max: e, n_q: nq, p_min: -e, p_max: e, n_p: np }, a.hbar)?;
            let ctx = StateContext { cutoff: Some(a.cutoff.unwrap_or(DEFAULT_N_MAX)), ..Default::default() };
            let rho = io::load_state(&a.state, &ctx)?;
            let space = FockSpace::new(rho.nrows() - 1)?;
            // W_hbar(q, p) = W_1(q / sqrt(hbar), p / sqrt(hbar))
            let r = a.hbar.sqrt();
            let scaled = RectGrid { q_min: -e / r, q_max: e / r, n_q: nq, p_min: -e / r, p_max: e / r, n_p: np };
            let values = hw::evaluate_rect(&space, &rho, 0.0, &scaled)?.real_values();
            GridFunction::from_real(grid, values, Provenance::State)?
        }
    };
    let limit = moyal::step_limit(&poly, &w0.grid);
    let dt = a.dt.unwrap_or(if limit.is_finite() { 0.9 * limit } else { 0.01 });
    let h = GridFunction::hamiltonian(&w0.grid, poly);
    let ev = moyal::evolve(&w0, &h, dt, a.steps)?;
    run.file("--out", &a.out, &snapshot::encode(&ev.function))?;
    if let Some(p) = &a.csv {
        let rows = w0.grid.nodes().zip(&ev.function.values).map(|((q, pp), v)| vec![fmt_f64(q), fmt_f64(pp), fmt_f64(v.re)]);
        run.file("--csv", p, &io::csv_bytes(&["q", "p", "value"], rows)?)?;
    }
    let summary = EvolveSummary {
        time: ev.time,
        steps: ev.steps,
        dt,
        step_limit: ev.step_limit,
        mass_drift: ev.mass_drift,
        purity_drift: ev.purity_drift,
        padding_fraction: ev.padding_fraction,
        warnings: ev.warnings,
    };
    stdout(&json_bytes(&summary)?)
}

#[derive(Serialize)]
struct ReplayOutcome {
    flag: String,
    path: String,
    expected: String,
    actual: String,
    matches: bool,
}

#[derive(Serialize)]
struct ReplayReport {
    manifest: String,
    reproduced: bool,
    outputs: Vec<ReplayOutcome>,
}

fn replace_flag(argv: &mut [String], flag: &str, value: &str) -> bool {
    let prefix = format!("{flag}=");
    for i in 0..argv.len() {
        if argv[i] == flag && i + 1 < argv.len() {
            argv[i + 1] = value.into();
            return true;
        }
        if argv[i].starts_with(&prefix) {
            argv[i] = format!("{prefix}{value}");
            return true;
        }
    }
    false
}

fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    use clap::Parser;
    let text = std::fs::read_to_string(&a.manifest).map_err(|e| CliError::Io(format!("{}: {e}", a.manifest.display())))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| PsError::Parse(e.to_string()))?;
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    let dir = std::env::temp_dir().join(format!("phasespace-replay-{}-{nanos}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(e.to_string()))?;
    let mut argv = m.command.clone();
    let mut targets = Vec::new();
    for (i, o) in m.outputs.iter().enumerate() {
        let name = Path::new(&o.path).file_name().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        let target = dir.join(format!("{i}-{name}"));
        if !replace_flag(&mut argv, &o.flag, &target.display().to_string()) {
            return Err(CliError::Usage(format!("manifest command has no {} argument", o.flag)));
        }
        targets.push(target);
    }
    let mut full = vec!["phasespace".to_string()];
    full.extend(argv.iter().cloned());
    let cli = Cli::try_parse_from(&full).map_err(|e| CliError::Usage(e.to_string()))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay a replay".into()));
    }
    let here = std::env::current_dir().map_err(|e| CliError::Io(e.to_string()))?;
    if !m.cwd.is_empty() {
        std::env::set_current_dir(&m.cwd).map_err(|e| CliError::Io(format!("{}: {e}", m.cwd)))?;
    }
    let mut run = Run::new(argv, false);
    // stdout summaries of the replayed command precede the report
    let result = dispatch(&cli, &mut run);
    std::env::set_current_dir(&here).map_err(|e| CliError::Io(e.to_string()))?;
    let outcome = result.and_then(|_| {
        m.outputs
            .iter()
            .zip(&targets)
            .map(|(o, t)| {
                let bytes = std::fs::read(t).map_err(|e| CliError::Io(format!("{}: {e}", t.display())))?;
                let actual = io::sha256_hex(&bytes);
                Ok(ReplayOutcome { flag: o.flag.clone(), path: o.path.clone(), matches: actual == o.sha256, expected: o.sha256.clone(), actual })
            })
            .collect::<Result<Vec<_>, CliError>>()
    });
    let _ = std::fs::remove_dir_all(&dir);
    let outputs = outcome?;
    let reproduced = outputs.iter().all(|o| o.matches);
    stdout(&json_bytes(&ReplayReport { manifest: a.manifest.display().to_string(), reproduced, outputs })?)?;
    if !reproduced {
        return Err(CliError::Tolerance("replayed outputs differ from the manifest hashes".into()));
    }
    Ok(())
}
