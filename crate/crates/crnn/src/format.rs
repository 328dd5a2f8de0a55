//! File formats. Every file is a JSON object; matrices are nested row-major
//! arrays.

use std::path::Path;

use crnn_core::certificates::{ActivationClass, ModelKind, TimeDomain};
use crnn_core::linalg::{DiagPosMatrix, Matrix};
use crnn_core::networks::{interconnect, GraphVariant, Interconnection};
use crnn_core::sim::{Activation, PiecewiseConstant, SynapticModel};
use crnn_core::synthesis::GainSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub type Rows = Vec<Vec<f64>>;

/// Checks `rows` against `shape` and builds the matrix.
pub fn matrix(field: &str, rows: &Rows, shape: (usize, usize)) -> Result<Matrix, CliError> {
    if rows.len() != shape.0 {
        return Err(CliError::input(format!(
            "{field}: expected {} rows of {} entries, found {} rows",
            shape.0,
            shape.1,
            rows.len()
        )));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != shape.1) {
        return Err(CliError::input(format!(
            "{field}: expected {} entries per row, row {} has {}",
            shape.1,
            i + 1,
            r.len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::input(format!("{field}: entries must be finite")));
    }
    if shape.0 == 0 {
        return Ok(Matrix::zeros(0, shape.1));
    }
    Ok(Matrix::from_rows(rows))
}

/// Like [`matrix`] with the shape taken from the data.
pub fn matrix_any(field: &str, rows: &Rows) -> Result<Matrix, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    matrix(field, rows, (rows.len(), cols))
}

pub fn rows(m: &Matrix) -> Rows {
    m.to_rows()
}

pub fn parse_arch(tag: &str) -> Result<ModelKind, CliError> {
    match tag {
        "fr" | "firing-rate" => Ok(ModelKind::FiringRate),
        "hopfield" => Ok(ModelKind::Hopfield),
        _ => Err(CliError::input(format!("arch: unknown architecture {tag:?}, expected fr or hopfield"))),
    }
}

pub fn parse_time(tag: &str) -> Result<TimeDomain, CliError> {
    match tag {
        "cts" | "continuous" => Ok(TimeDomain::Continuous),
        "disc" | "discrete" => Ok(TimeDomain::Discrete),
        _ => Err(CliError::input(format!("time: unknown time domain {tag:?}, expected cts or disc"))),
    }
}

pub fn arch_tag(k: ModelKind) -> &'static str {
    match k {
        ModelKind::FiringRate => "fr",
        ModelKind::Hopfield => "hopfield",
    }
}

pub fn time_tag(d: TimeDomain) -> &'static str {
    match d {
        TimeDomain::Continuous => "cts",
        TimeDomain::Discrete => "disc",
    }
}

pub fn parse_nonlin(tag: &str) -> Result<ActivationClass, CliError> {
    match tag {
        "mone" => Ok(ActivationClass::Mone),
        "cone" => Ok(ActivationClass::Cone),
        _ => Err(CliError::input(format!("nonlin: unknown class {tag:?}, expected cone or mone"))),
    }
}

pub fn nonlin_tag(c: ActivationClass) -> String {
    match c {
        ActivationClass::Mone => "mone".into(),
        ActivationClass::Cone => "cone".into(),
        ActivationClass::Slope(a, b) => format!("slope:{a}:{b}"),
    }
}

fn default_arch() -> String {
    "fr".into()
}

fn default_time() -> String {
    "cts".into()
}

fn default_activation() -> String {
    "tanh".into()
}

/// Serialized [`SynapticModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default = "default_arch")]
    pub arch: String,
    #[serde(default = "default_time")]
    pub time: String,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(rename = "W")]
    pub w: Rows,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Rows>,
}

impl ModelFile {
    /// Validates shapes. `B` and `C` default to the identity and `D` to zero;
    /// `B` is required once `m ≠ n`, `C` once `p ≠ n`.
    pub fn to_model(&self) -> Result<SynapticModel, CliError> {
        let n = self.n;
        if n == 0 {
            return Err(CliError::input("n: must be positive"));
        }
        let w = matrix("W", &self.w, (n, n))?;
        let m = self.m.or_else(|| self.b.as_ref().and_then(|b| b.first().map(Vec::len))).unwrap_or(n);
        let p = self.p.or_else(|| self.c.as_ref().map(Vec::len)).unwrap_or(n);
        let b = match &self.b {
            Some(b) => matrix("B", b, (n, m))?,
            None if m == n => Matrix::identity(n),
            None => return Err(CliError::input(format!("B: required when m = {m} differs from n = {n}"))),
        };
        let c = match &self.c {
            Some(c) => matrix("C", c, (p, n))?,
            None if p == n => Matrix::identity(n),
            None => return Err(CliError::input(format!("C: required when p = {p} differs from n = {n}"))),
        };
        let d = match &self.d {
            Some(d) => matrix("D", d, (p, m))?,
            None => Matrix::zeros(p, m),
        };
        let activation = Activation::parse(&self.activation).map_err(|e| CliError::input(format!("activation: {e}")))?;
        let kind = parse_arch(&self.arch)?;
        let domain = parse_time(&self.time)?;
        Ok(SynapticModel::new(kind, domain, w, b, c, d, activation)?)
    }

    pub fn from_model(model: &SynapticModel) -> Self {
        Self {
            n: model.n(),
            m: Some(model.m()),
            p: Some(model.p()),
            arch: arch_tag(model.kind).into(),
            time: time_tag(model.domain).into(),
            activation: model.activation.name(),
            w: rows(&model.w),
            b: Some(rows(&model.b)),
            c: Some(rows(&model.c)),
            d: Some(rows(&model.d)),
        }
    }
}

/// Subsystems coupled through `u_i = Σ_j A_ij y_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub subsystems: Vec<ModelFile>,
    pub coupling: Rows,
}

impl NetworkFile {
    pub fn to_interconnection(&self) -> Result<Interconnection, CliError> {
        let mut subs = Vec::with_capacity(self.subsystems.len());
        for (i, s) in self.subsystems.iter().enumerate() {
            subs.push(s.to_model().map_err(|e| e.context(&format!("subsystems[{i}]")))?);
        }
        let m: usize = subs.iter().map(SynapticModel::m).sum();
        let p: usize = subs.iter().map(SynapticModel::p).sum();
        let coupling = matrix("coupling", &self.coupling, (m, p))?;
        Ok(Interconnection::new(subs, coupling)?)
    }
}

/// Gain file. Absent gains are zero, absent rates one, absent weights the
/// identity, so a partial file still drives an open-loop run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    #[serde(rename = "K_f", default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<Rows>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Rows>,
    #[serde(rename = "K_i", default, skip_serializing_if = "Option::is_none")]
    pub k_i: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "c_K", default, skip_serializing_if = "Option::is_none")]
    pub c_k: Option<f64>,
    #[serde(rename = "c_O", default, skip_serializing_if = "Option::is_none")]
    pub c_o: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_r: Option<f64>,
    #[serde(rename = "P_X", default, skip_serializing_if = "Option::is_none")]
    pub p_x: Option<Rows>,
    #[serde(rename = "P_O", default, skip_serializing_if = "Option::is_none")]
    pub p_o: Option<Rows>,
    #[serde(rename = "P_R", default, skip_serializing_if = "Option::is_none")]
    pub p_r: Option<Rows>,
}

impl GainsFile {
    pub fn to_gain_set(&self, model: &SynapticModel) -> Result<GainSet, CliError> {
        let (n, m, p) = (model.n(), model.m(), model.p());
        let get = |field: &str, r: &Option<Rows>, shape: (usize, usize), default: Matrix| match r {
            Some(r) => matrix(field, r, shape),
            None => Ok(default),
        };
        let scalar = |field: &str, v: Option<f64>, default: f64| {
            let v = v.unwrap_or(default);
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(CliError::input(format!("{field}: must be finite and nonnegative, got {v}")))
            }
        };
        Ok(GainSet {
            k_f: get("K_f", &self.k_f, (m, n), Matrix::zeros(m, n))?,
            l: get("L", &self.l, (n, p), Matrix::zeros(n, p))?,
            k_i: get("K_i", &self.k_i, (m, p), Matrix::zeros(m, p))?,
            epsilon: scalar("epsilon", self.epsilon, 0.0)?,
            c_k: scalar("c_K", self.c_k, 1.0)?,
            c_o: scalar("c_O", self.c_o, 1.0)?,
            c_r: scalar("c_r", self.c_r, 1.0)?,
            p_x: get("P_X", &self.p_x, (n, n), Matrix::identity(n))?,
            p_o: get("P_O", &self.p_o, (n, n), Matrix::identity(n))?,
            p_r: get("P_R", &self.p_r, (m, m), Matrix::identity(m))?,
        })
    }

    pub fn from_gain_set(g: &GainSet) -> Self {
        Self {
            k_f: Some(rows(&g.k_f)),
            l: Some(rows(&g.l)),
            k_i: Some(rows(&g.k_i)),
            epsilon: Some(g.epsilon),
            c_k: Some(g.c_k),
            c_o: Some(g.c_o),
            c_r: Some(g.c_r),
            p_x: Some(rows(&g.p_x)),
            p_o: Some(rows(&g.p_o)),
            p_r: Some(rows(&g.p_r)),
        }
    }
}

/// Piecewise-constant signal: `levels[k]` holds from `starts[k]` on.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFile {
    pub starts: Vec<f64>,
    pub levels: Rows,
}

impl SignalFile {
    pub fn to_signal(&self, dim: usize, field: &str) -> Result<PiecewiseConstant, CliError> {
        if let Some((k, l)) = self.levels.iter().enumerate().find(|(_, l)| l.len() != dim) {
            return Err(CliError::input(format!("{field}: level {} has {} entries, expected {dim}", k + 1, l.len())));
        }
        PiecewiseConstant::new(self.starts.clone(), self.levels.clone()).map_err(|e| CliError::input(format!("{field}: {e}")))
    }
}

/// Initial states; absent entries are zero.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFile {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub xi0: Option<Vec<f64>>,
    #[serde(default)]
    pub u0: Option<Vec<f64>>,
    /// Node states `m × nodes` for graph runs.
    #[serde(rename = "X0", default)]
    pub x0_graph: Option<Rows>,
    /// Node inputs `k × nodes` for graph runs.
    #[serde(rename = "U", default)]
    pub u_graph: Option<Rows>,
}

pub fn vector(field: &str, v: &Option<Vec<f64>>, dim: usize) -> Result<Vec<f64>, CliError> {
    match v {
        None => Ok(vec![0.0; dim]),
        Some(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => Ok(v.clone()),
        Some(v) => Err(CliError::input(format!("{field}: expected {dim} finite entries, found {}", v.len()))),
    }
}

/// Graph coupling. `H` and `degrees` select the symmetrizable variant
/// `A = H·diag(degrees)⁻¹`; `normalize` replaces a raw adjacency by its
/// symmetric normalization.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjacencyFile {
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "H", default)]
    pub h: Option<Rows>,
    #[serde(default)]
    pub degrees: Option<Vec<f64>>,
    #[serde(default)]
    pub normalize: bool,
}

impl AdjacencyFile {
    pub fn to_graph(&self) -> Result<(Matrix, GraphVariant), CliError> {
        let nodes = self.nodes.unwrap_or(self.a.len());
        if nodes == 0 {
            return Err(CliError::input("A: graph has no nodes"));
        }
        let mut a = matrix("A", &self.a, (nodes, nodes))?;
        if self.normalize {
            a = crnn_core::networks::normalize_adjacency(&a)?.into_matrix();
        }
        let variant = match (&self.h, &self.degrees) {
            (None, None) => GraphVariant::Undirected,
            (Some(h), Some(d)) => {
                let h = matrix("H", h, (nodes, nodes))?;
                let d = DiagPosMatrix::new(vector("degrees", &Some(d.clone()), nodes)?)
                    .map_err(|e| CliError::input(format!("degrees: {e}")))?;
                GraphVariant::Symmetrizable { h, d }
            }
            _ => return Err(CliError::input("H: H and degrees must be given together")),
        };
        Ok((a, variant))
    }
}

pub fn read_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn from_value<T: serde::de::DeserializeOwned>(v: Value, path: &Path) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    from_value(read_value(path)?, path)
}

/// `key` of an object that lacks `marker`, e.g. the model embedded in a report.
fn unwrap_embedded(v: Value, key: &str, marker: &str) -> Value {
    match v {
        Value::Object(mut o) if !o.contains_key(marker) && o.contains_key(key) => o.remove(key).unwrap_or(Value::Null),
        other => other,
    }
}

/// A model file, a network file (composed into one model), or a report
/// carrying either under `"model"`.
pub fn load_model(path: &Path) -> Result<SynapticModel, CliError> {
    let v = unwrap_embedded(read_value(path)?, "model", "W");
    if v.get("subsystems").is_some() {
        let net: NetworkFile = from_value(v, path)?;
        let ic = net.to_interconnection().map_err(|e| e.context(&path.display().to_string()))?;
        return Ok(interconnect(&ic)?);
    }
    let mf: ModelFile = from_value(v, path)?;
    mf.to_model().map_err(|e| e.context(&path.display().to_string()))
}

/// A gain file or a report carrying one under `"gains"`.
pub fn load_gains(path: &Path, model: &SynapticModel) -> Result<GainSet, CliError> {
    let v = unwrap_embedded(read_value(path)?, "gains", "K_f");
    let gf: GainsFile = from_value(v, path)?;
    gf.to_gain_set(model).map_err(|e| e.context(&path.display().to_string()))
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
