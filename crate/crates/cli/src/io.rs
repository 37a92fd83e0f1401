//! State files, CSV tables, atomic output and run manifests.

use std::path::{Path, PathBuf};

use phasespace::foundation::operator::{c, check_density};
use phasespace::states::{BellKind, NamedState};
use phasespace::{Operator, PsError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "PHASESPACE_OUT_DIR";

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl MatrixFile {
    pub fn from_operator(rho: &Operator) -> MatrixFile {
        let d = rho.nrows();
        let matrix = (0..d).map(|i| (0..d).map(|k| [rho[(i, k)].re, rho[(i, k)].im]).collect()).collect();
        MatrixFile { dim: d, matrix }
    }

    pub fn to_operator(&self) -> Result<Operator, PsError> {
        if self.matrix.len() != self.dim {
            return Err(PsError::Dimension { expected: self.dim, got: self.matrix.len() });
        }
        if let Some(row) = self.matrix.iter().find(|r| r.len() != self.dim) {
            return Err(PsError::Dimension { expected: self.dim, got: row.len() });
        }
        Ok(Operator::from_fn(self.dim, self.dim, |i, k| c(self.matrix[i][k][0], self.matrix[i][k][1])))
    }
}

/// Context used to expand short state names such as `spin_up` or `ghz`.
#[derive(Debug, Default, Clone)]
pub struct StateContext {
    pub j: Option<f64>,
    pub qubits: Option<usize>,
    pub cutoff: Option<usize>,
    pub dim: Option<usize>,
}

fn need<T: Copy>(v: Option<T>, what: &str, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("state `{name}` needs {what}")))
}

fn short_name(name: &str, ctx: &StateContext) -> Result<Operator, CliError> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let parse = |a: Option<&str>| -> Result<usize, CliError> {
        a.ok_or_else(|| CliError::Usage(format!("state `{name}` needs an argument")))?
            .parse()
            .map_err(|_| CliError::Usage(format!("bad argument in state `{name}`")))
    };
    let named = match head {
        "spin_up" => NamedState::SpinUp { j: need(ctx.j, "--j", name)? },
        "spin_down" => NamedState::SpinDown { j: need(ctx.j, "--j", name)? },
        "ghz" => NamedState::Ghz { n: need(ctx.qubits, "--qubits", name)? },
        "w_state" => NamedState::WState { n: need(ctx.qubits, "--qubits", name)? },
        "dicke" => NamedState::Dicke { n: need(ctx.qubits, "--qubits", name)?, k: parse(arg)? },
        "bell" | "bell_phi_plus" => NamedState::Bell { which: BellKind::PhiPlus },
        "bell_phi_minus" => NamedState::Bell { which: BellKind::PhiMinus },
        "bell_psi_plus" => NamedState::Bell { which: BellKind::PsiPlus },
        "bell_psi_minus" => NamedState::Bell { which: BellKind::PsiMinus },
        "vacuum" => NamedState::Fock { n_max: need(ctx.cutoff, "--cutoff", name)?, n: 0 },
        "fock" => NamedState::Fock { n_max: need(ctx.cutoff, "--cutoff", name)?, n: parse(arg)? },
        "coherent" => {
            let a = arg.ok_or_else(|| CliError::Usage("coherent needs `coherent:RE,IM`".into()))?;
            let (re, im) = a.split_once(',').ok_or_else(|| CliError::Usage("coherent needs `coherent:RE,IM`".into()))?;
            let f = |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad amplitude in `{name}`")));
            NamedState::Coherent { n_max: need(ctx.cutoff, "--cutoff", name)?, re: f(re)?, im: f(im)? }
        }
        "pauli" => {
            let a = arg.unwrap_or("");
            let mut ch = a.chars();
            match (ch.next(), ch.next()) {
                (Some(axis), Some(sign)) if sign == '+' || sign == '-' => NamedState::Pauli { axis, plus: sign == '+' },
                _ => return Err(CliError::Usage("pauli needs `pauli:x+` style axis and sign".into())),
            }
        }
        "mixed" | "maximally_mixed" => NamedState::MaximallyMixed { dim: need(ctx.dim, "a system dimension", name)? },
        "hybrid_bell" => NamedState::HybridBell { n_max: need(ctx.cutoff, "--cutoff", name)? },
        _ => return Err(CliError::Usage(format!("`{name}` is neither a file nor a built-in state"))),
    };
    Ok(named.build()?)
}

/// A state file path, or a built-in name when no such file exists.
pub fn load_state(arg: &str, ctx: &StateContext) -> Result<Operator, CliError> {
    let path = Path::new(arg);
    let rho = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
        parse_state(&text)?
    } else {
        short_name(arg, ctx)?
    };
    check_density(&rho)?;
    Ok(rho)
}

pub fn parse_state(text: &str) -> Result<Operator, CliError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PsError::Parse(e.to_string()))?;
    if v.get("kind").is_some() {
        let named: NamedState = serde_json::from_value(v).map_err(|e| PsError::Parse(e.to_string()))?;
        Ok(named.build()?)
    } else {
        let m: MatrixFile = serde_json::from_value(v).map_err(|e| PsError::Parse(e.to_string()))?;
        Ok(m.to_operator()?)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Reads a numeric CSV with a header row; returns the header and the rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers().map_err(|e| PsError::Parse(e.to_string()))?.iter().map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| PsError::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| PsError::Parse(format!("row {}: `{f}` is not a number", n + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(PsError::Parse(format!("row {} has {} fields, header has {}", n + 1, row.len(), header.len())).into());
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn column(header: &[String], name: &str) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| PsError::Parse(format!("missing column `{name}`")).into())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Relative output paths land in the output directory from the environment, when set.
pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Flag that named the file, e.g. `--out`.
    pub flag: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub cwd: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}
