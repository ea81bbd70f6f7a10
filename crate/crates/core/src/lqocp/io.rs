//! JSON problem files (`lqocp-1`). Matrices are row-major flat arrays and
//! every number is written with 17 significant digits.

use std::fs;
use std::io;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::{Inequality, LqOcpProblem, Stage, Terminal};
use crate::error::ProblemIoError;

pub const FORMAT_VERSION: &str = "lqocp-1";

#[derive(Debug, Serialize, Deserialize)]
struct ProblemFile {
    version: String,
    nx: usize,
    nu: usize,
    #[serde(rename = "N")]
    horizon: usize,
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    stages: Vec<StageFile>,
    terminal: TerminalFile,
    x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ineq: Option<IneqFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StageFile {
    #[serde(rename = "Q")]
    q: Vec<f64>,
    #[serde(rename = "R")]
    r: Vec<f64>,
    #[serde(rename = "S")]
    s: Vec<f64>,
    #[serde(rename = "q")]
    q_lin: Vec<f64>,
    #[serde(rename = "r")]
    r_lin: Vec<f64>,
    #[serde(rename = "b")]
    offset: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TerminalFile {
    #[serde(rename = "Q")]
    q: Vec<f64>,
    #[serde(rename = "q")]
    q_lin: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IneqFile {
    #[serde(rename = "C")]
    c: Vec<f64>,
    #[serde(rename = "D")]
    d: Vec<f64>,
    #[serde(rename = "d")]
    rhs: Vec<f64>,
}

/// Writes floats as `{:.16e}`, i.e. 17 significant digits.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> ProblemIoError {
    ProblemIoError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn matrix(field: &str, data: &[f64], rows: usize, cols: usize) -> Result<DMatrix<f64>, ProblemIoError> {
    if data.len() != rows * cols {
        return Err(schema(
            field,
            format!("expected {} entries ({rows}×{cols}), found {}", rows * cols, data.len()),
        ));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

fn vector(field: &str, data: &[f64], len: usize) -> Result<DVector<f64>, ProblemIoError> {
    if data.len() != len {
        return Err(schema(field, format!("expected {len} entries, found {}", data.len())));
    }
    Ok(DVector::from_column_slice(data))
}

impl ProblemFile {
    fn from_problem(p: &LqOcpProblem) -> Self {
        ProblemFile {
            version: FORMAT_VERSION.to_string(),
            nx: p.nx,
            nu: p.nu,
            horizon: p.horizon,
            a: row_major(&p.a),
            b: row_major(&p.b),
            stages: p
                .stages
                .iter()
                .map(|st| StageFile {
                    q: row_major(&st.q),
                    r: row_major(&st.r),
                    s: row_major(&st.s),
                    q_lin: st.q_lin.as_slice().to_vec(),
                    r_lin: st.r_lin.as_slice().to_vec(),
                    offset: st.offset.as_slice().to_vec(),
                })
                .collect(),
            terminal: TerminalFile {
                q: row_major(&p.terminal.q),
                q_lin: p.terminal.q_lin.as_slice().to_vec(),
            },
            x0: p.x0.as_slice().to_vec(),
            ineq: p.inequality.as_ref().map(|iq| IneqFile {
                c: row_major(&iq.c),
                d: row_major(&iq.d),
                rhs: iq.rhs.as_slice().to_vec(),
            }),
        }
    }

    fn into_problem(self) -> Result<LqOcpProblem, ProblemIoError> {
        if self.version != FORMAT_VERSION {
            return Err(schema(
                "version",
                format!("expected \"{FORMAT_VERSION}\", found \"{}\"", self.version),
            ));
        }
        let (nx, nu, n) = (self.nx, self.nu, self.horizon);
        if nx == 0 {
            return Err(schema("nx", "nx must be ≥ 1"));
        }
        if nu == 0 {
            return Err(schema("nu", "nu must be ≥ 1"));
        }
        if n == 0 {
            return Err(schema("N", "N must be ≥ 1"));
        }
        if self.stages.len() != n {
            return Err(schema(
                "stages",
                format!("expected N = {n} stages, found {}", self.stages.len()),
            ));
        }
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(k, st)| {
                Ok(Stage {
                    q: matrix(&format!("stages[{k}].Q"), &st.q, nx, nx)?,
                    r: matrix(&format!("stages[{k}].R"), &st.r, nu, nu)?,
                    s: matrix(&format!("stages[{k}].S"), &st.s, nu, nx)?,
                    q_lin: vector(&format!("stages[{k}].q"), &st.q_lin, nx)?,
                    r_lin: vector(&format!("stages[{k}].r"), &st.r_lin, nu)?,
                    offset: vector(&format!("stages[{k}].b"), &st.offset, nx)?,
                })
            })
            .collect::<Result<Vec<_>, ProblemIoError>>()?;
        let inequality = match &self.ineq {
            None => None,
            Some(iq) => {
                let ni = iq.rhs.len();
                Some(Inequality {
                    c: matrix("ineq.C", &iq.c, ni, nx)?,
                    d: matrix("ineq.D", &iq.d, ni, nu)?,
                    rhs: DVector::from_column_slice(&iq.rhs),
                })
            }
        };
        Ok(LqOcpProblem {
            nx,
            nu,
            horizon: n,
            a: matrix("A", &self.a, nx, nx)?,
            b: matrix("B", &self.b, nx, nu)?,
            stages,
            terminal: Terminal {
                q: matrix("terminal.Q", &self.terminal.q, nx, nx)?,
                q_lin: vector("terminal.q", &self.terminal.q_lin, nx)?,
            },
            x0: vector("x0", &self.x0, nx)?,
            inequality,
        })
    }
}

fn first_non_finite(p: &LqOcpProblem) -> Option<String> {
    let bad_m = |m: &DMatrix<f64>| m.iter().any(|v| !v.is_finite());
    let bad_v = |v: &DVector<f64>| v.iter().any(|x| !x.is_finite());
    if bad_m(&p.a) {
        return Some("A".into());
    }
    if bad_m(&p.b) {
        return Some("B".into());
    }
    for (k, st) in p.stages.iter().enumerate() {
        for (name, bad) in [
            ("Q", bad_m(&st.q)),
            ("R", bad_m(&st.r)),
            ("S", bad_m(&st.s)),
            ("q", bad_v(&st.q_lin)),
            ("r", bad_v(&st.r_lin)),
            ("b", bad_v(&st.offset)),
        ] {
            if bad {
                return Some(format!("stages[{k}].{name}"));
            }
        }
    }
    if bad_m(&p.terminal.q) {
        return Some("terminal.Q".into());
    }
    if bad_v(&p.terminal.q_lin) {
        return Some("terminal.q".into());
    }
    if bad_v(&p.x0) {
        return Some("x0".into());
    }
    if let Some(iq) = &p.inequality {
        if bad_m(&iq.c) || bad_m(&iq.d) || bad_v(&iq.rhs) {
            return Some("ineq".into());
        }
    }
    None
}

/// Serializes a problem to the `lqocp-1` JSON text.
pub fn problem_to_json(p: &LqOcpProblem) -> Result<String, ProblemIoError> {
    if let Some(field) = first_non_finite(p) {
        return Err(schema(field, "non-finite values cannot be serialized"));
    }
    let file = ProblemFile::from_problem(p);
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    file.serialize(&mut ser).map_err(io::Error::other)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Parses `lqocp-1` JSON text.
pub fn problem_from_json(text: &str) -> Result<LqOcpProblem, ProblemIoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => {
                let msg = inner.to_string();
                // serde reports missing fields against the parent path
                let field = match missing_field(&msg) {
                    Some(name) if path == "." => name.to_string(),
                    Some(name) => format!("{path}.{name}"),
                    None => path,
                };
                schema(field, msg)
            }
            _ => ProblemIoError::Parse {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            },
        }
    })?;
    file.into_problem()
}

fn missing_field(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("missing field `")?;
    rest.split('`').next()
}

pub fn save_problem(p: &LqOcpProblem, path: impl AsRef<Path>) -> Result<(), ProblemIoError> {
    fs::write(path, problem_to_json(p)?)?;
    Ok(())
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<LqOcpProblem, ProblemIoError> {
    problem_from_json(&fs::read_to_string(path)?)
}
