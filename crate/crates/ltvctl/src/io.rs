//! File formats.
//!
//! Discrete systems, transforms and schedules are JSON documents whose
//! numbers are written as strings: `"p/q"` for rationals, plain decimal for
//! floats. That keeps rational-mode files lossless through load/save round
//! trips. On input, JSON integers are accepted in both modes; non-integer
//! JSON numbers only in float mode (quote them in rational mode).
//! Continuous systems carry expression strings in the grammar of
//! [`crate::expr`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::EquivalenceTransform;
use crate::ct::{CtSystem, SweepReport};
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::matrix::Matrix;
use crate::scalar::{parse_scalar, Scalar, ScalarMode, Tol};
use crate::system::{Extension, FeedbackSchedule, LtvSystem, StepTriple, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
struct SystemDto {
    n: usize,
    k_min: i64,
    k_max: i64,
    extension: Value,
    steps: Vec<StepDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StepDto {
    k: i64,
    #[serde(rename = "A")]
    a: Vec<Vec<Value>>,
    b: Vec<Value>,
    c: Vec<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CtSystemDto {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
    b: Vec<String>,
    c: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformDto {
    range: RangeDto,
    #[serde(rename = "T")]
    t: Vec<TransformEntryDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RangeDto {
    k_min: i64,
    k_max: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformEntryDto {
    k: i64,
    matrix: Vec<Vec<Value>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleDto {
    k_start: i64,
    gains: Vec<Value>,
}

fn scalar_from_value(v: &Value, mode: ScalarMode, context: &str) -> Result<Scalar> {
    match v {
        Value::String(s) => {
            parse_scalar(s, mode).map_err(|e| Error::Schema(format!("{context}: {e}")))
        }
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(Scalar::from_int(i, mode))
            } else if mode == ScalarMode::Float {
                Ok(Scalar::Float(num.as_f64().unwrap_or(f64::NAN)))
            } else {
                Err(Error::Schema(format!(
                    "{context}: non-integer number {num} in rational mode; quote it as a string"
                )))
            }
        }
        other => Err(Error::Schema(format!("{context}: expected a number, found {other}"))),
    }
}

fn scalar_to_value(s: &Scalar) -> Value {
    Value::String(s.to_string())
}

fn vector_from_values(
    vals: &[Value],
    n: usize,
    mode: ScalarMode,
    context: &str,
) -> Result<Vec<Scalar>> {
    if vals.len() != n {
        return Err(Error::Schema(format!(
            "{context} has length {}, expected {n}",
            vals.len()
        )));
    }
    vals.iter()
        .enumerate()
        .map(|(i, v)| scalar_from_value(v, mode, &format!("{context}[{i}]")))
        .collect()
}

fn matrix_from_values(
    rows: &[Vec<Value>],
    n: usize,
    mode: ScalarMode,
    context: &str,
) -> Result<Matrix> {
    if rows.len() != n {
        return Err(Error::Schema(format!("{context} has {} rows, expected {n}", rows.len())));
    }
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        out.push(vector_from_values(row, n, mode, &format!("{context}[{i}]"))?);
    }
    Ok(Matrix::from_rows(out))
}

fn extension_from_value(v: &Value) -> Result<Extension> {
    match v {
        Value::String(s) if s == "none" => Ok(Extension::None),
        Value::Object(map) => match map.get("periodic") {
            Some(Value::Number(p)) if p.as_i64().is_some() => {
                let p = p.as_i64().unwrap();
                if p <= 0 {
                    return Err(Error::Schema(format!("extension: non-positive period {p}")));
                }
                Ok(Extension::Periodic(p))
            }
            _ => Err(Error::Schema("extension: expected {\"periodic\": <int>}".into())),
        },
        other => Err(Error::Schema(format!(
            "extension: expected \"none\" or {{\"periodic\": p}}, found {other}"
        ))),
    }
}

fn extension_to_value(e: Extension) -> Value {
    match e {
        Extension::None => Value::String("none".into()),
        Extension::Periodic(p) => serde_json::json!({ "periodic": p }),
    }
}

pub fn discrete_from_json(text: &str, mode: ScalarMode) -> Result<LtvSystem> {
    let dto: SystemDto =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("system file: {e}")))?;
    let mut steps = BTreeMap::new();
    for step in &dto.steps {
        let ctx = format!("steps[k={}]", step.k);
        let a = matrix_from_values(&step.a, dto.n, mode, &format!("{ctx}.A"))?;
        let b = vector_from_values(&step.b, dto.n, mode, &format!("{ctx}.b"))?;
        let c = vector_from_values(&step.c, dto.n, mode, &format!("{ctx}.c"))?;
        if steps.insert(step.k, StepTriple { a, b, c }).is_some() {
            return Err(Error::Schema(format!("duplicate step for k = {}", step.k)));
        }
    }
    let extension = extension_from_value(&dto.extension)?;
    LtvSystem::new(dto.n, dto.k_min, dto.k_max, steps, extension)
}

pub fn discrete_to_json_string(sys: &LtvSystem) -> String {
    let dto = SystemDto {
        n: sys.dim(),
        k_min: sys.k_min(),
        k_max: sys.k_max(),
        extension: extension_to_value(sys.extension()),
        steps: sys
            .steps()
            .iter()
            .map(|(&k, step)| StepDto {
                k,
                a: (0..sys.dim())
                    .map(|i| step.a.row(i).iter().map(scalar_to_value).collect())
                    .collect(),
                b: step.b.iter().map(scalar_to_value).collect(),
                c: step.c.iter().map(scalar_to_value).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

pub fn ct_from_json(text: &str) -> Result<CtSystem> {
    let dto: CtSystemDto =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("system file: {e}")))?;
    if dto.a.len() != dto.n || dto.b.len() != dto.n || dto.c.len() != dto.n {
        return Err(Error::Schema(format!(
            "A/b/c sizes ({}, {}, {}) do not match n = {}",
            dto.a.len(),
            dto.b.len(),
            dto.c.len(),
            dto.n
        )));
    }
    let mut a = Vec::with_capacity(dto.n);
    for (i, row) in dto.a.iter().enumerate() {
        if row.len() != dto.n {
            return Err(Error::Schema(format!("A[{i}] has length {}, expected {}", row.len(), dto.n)));
        }
        let mut out = Vec::with_capacity(dto.n);
        for (j, src) in row.iter().enumerate() {
            out.push(
                parse_expr(src).map_err(|e| Error::Schema(format!("A[{i}][{j}]: {e}")))?,
            );
        }
        a.push(out);
    }
    let parse_vec = |items: &[String], name: &str| -> Result<Vec<crate::expr::Expr>> {
        items
            .iter()
            .enumerate()
            .map(|(i, src)| parse_expr(src).map_err(|e| Error::Schema(format!("{name}[{i}]: {e}"))))
            .collect()
    };
    CtSystem::new(a, parse_vec(&dto.b, "b")?, parse_vec(&dto.c, "c")?)
}

pub fn ct_to_json_string(ct: &CtSystem) -> String {
    let dto = CtSystemDto {
        n: ct.dim(),
        a: ct.a().iter().map(|row| row.iter().map(|e| e.to_string()).collect()).collect(),
        b: ct.b().iter().map(|e| e.to_string()).collect(),
        c: ct.c().iter().map(|e| e.to_string()).collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

/// Either kind of system file, told apart by schema: discrete files carry a
/// `steps` array, continuous files carry expression strings.
#[derive(Debug)]
pub enum LoadedSystem {
    Discrete(LtvSystem),
    Continuous(CtSystem),
}

pub fn load_system_str(text: &str, mode: ScalarMode) -> Result<LoadedSystem> {
    let probe: Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("system file: {e}")))?;
    let Some(obj) = probe.as_object() else {
        return Err(Error::Schema("system file must be a JSON object".into()));
    };
    if obj.contains_key("steps") {
        Ok(LoadedSystem::Discrete(discrete_from_json(text, mode)?))
    } else if obj.contains_key("A") {
        Ok(LoadedSystem::Continuous(ct_from_json(text)?))
    } else {
        Err(Error::Schema(
            "system file matches neither the discrete schema (steps) nor the continuous schema (A/b/c expressions)".into(),
        ))
    }
}

pub fn load_system(path: &Path, mode: ScalarMode) -> Result<LoadedSystem> {
    let text = std::fs::read_to_string(path)?;
    load_system_str(&text, mode)
}

pub fn transform_to_json_string(transform: &EquivalenceTransform) -> String {
    let dto = TransformDto {
        range: RangeDto { k_min: transform.k_lo(), k_max: transform.k_hi() },
        t: transform
            .iter()
            .map(|(&k, m)| TransformEntryDto {
                k,
                matrix: (0..m.nrows())
                    .map(|i| m.row(i).iter().map(scalar_to_value).collect())
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

pub fn transform_from_json(text: &str, mode: ScalarMode, tol: &Tol) -> Result<EquivalenceTransform> {
    let dto: TransformDto =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("transform file: {e}")))?;
    let mut map = BTreeMap::new();
    for entry in &dto.t {
        let n = entry.matrix.len();
        let m = matrix_from_values(&entry.matrix, n, mode, &format!("T[k={}]", entry.k))?;
        if map.insert(entry.k, m).is_some() {
            return Err(Error::Schema(format!("duplicate transform for k = {}", entry.k)));
        }
    }
    let transform = EquivalenceTransform::new(map, tol)?;
    if transform.k_lo() != dto.range.k_min || transform.k_hi() != dto.range.k_max {
        return Err(Error::Schema(format!(
            "declared range [{}, {}] does not match the entries [{}, {}]",
            dto.range.k_min,
            dto.range.k_max,
            transform.k_lo(),
            transform.k_hi()
        )));
    }
    Ok(transform)
}

pub fn schedule_to_json_string(schedule: &FeedbackSchedule) -> String {
    let dto = ScheduleDto {
        k_start: schedule.k_start,
        gains: schedule.gains.iter().map(scalar_to_value).collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

pub fn schedule_from_json(text: &str, mode: ScalarMode) -> Result<FeedbackSchedule> {
    let dto: ScheduleDto =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("schedule file: {e}")))?;
    let gains = dto
        .gains
        .iter()
        .enumerate()
        .map(|(i, v)| scalar_from_value(v, mode, &format!("gains[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    FeedbackSchedule::new(dto.k_start, gains)
}

/// Trajectory CSV: `k, x_1..x_n, y, <input_label>`. The final row carries
/// the terminal state; its output is included when `c` is still resolvable
/// there and its input cell is empty.
pub fn trajectory_csv(
    sys: &LtvSystem,
    traj: &Trajectory,
    input_label: &str,
    inputs: &[Scalar],
) -> String {
    let n = sys.dim();
    let mut out = String::new();
    out.push('k');
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",y,");
    out.push_str(input_label);
    out.push('\n');
    for (t, state) in traj.states.iter().enumerate() {
        let k = traj.k_start + t as i64;
        out.push_str(&k.to_string());
        for x in state {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push(',');
        if t < traj.outputs.len() {
            out.push_str(&traj.outputs[t].to_string());
        } else if let Some(y) = traj.final_output(sys) {
            out.push_str(&y.to_string());
        }
        out.push(',');
        if t < inputs.len() {
            out.push_str(&inputs[t].to_string());
        }
        out.push('\n');
    }
    out
}

/// Sweep CSV: `delta, k, min_sv, decoupling, verdict` where `verdict` is the
/// per-delta controllability verdict repeated on each of its rows.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("delta,k,min_sv,decoupling,verdict\n");
    for row in &report.rows {
        let verdict = report
            .summaries
            .iter()
            .find(|s| s.delta == row.delta)
            .map(|s| s.controllable)
            .unwrap_or(false);
        out.push_str(&format!(
            "{},{},{:e},{:e},{}\n",
            row.delta, row.k, row.min_singular_value, row.decoupling, verdict
        ));
    }
    out
}
