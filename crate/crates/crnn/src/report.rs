//! Machine-readable reports and their re-verification.

use crnn_core::certificates::{certificate_margin, CertificateSpec};
use crnn_core::linalg::{max_eig, Matrix};
use crnn_core::networks::graph_side_block;
use crnn_core::sim::SynapticModel;
use crnn_core::synthesis::{integral_block_numeric, GainSet};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::format::{matrix, parse_arch, parse_nonlin, parse_time, GainsFile, ModelFile, Rows};

/// Which weight a certificate is about, rebuilt from the model and gains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weight {
    /// `W`.
    Plant,
    /// `W + B·K_f`.
    Feedback,
    /// `W − L·C`.
    Observer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// Incremental-multiplier certificate block.
    Lure,
    /// Reduced-dynamics block of the integral loop; uses `delta` and `Y`.
    Integral,
    /// `[[−4(1−c)P, P], [P, −Q]]` of a graph certificate.
    GraphSide,
}

/// Everything needed to recompute one margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertRecord {
    pub name: String,
    pub inequality: Inequality,
    pub weight: Weight,
    pub arch: String,
    pub time: String,
    pub nonlin: String,
    pub rate: f64,
    #[serde(rename = "P")]
    pub p: Rows,
    /// Diagonal of `Q`.
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Rows>,
}

impl CertRecord {
    pub fn lure(name: &str, weight: Weight, spec: &CertificateSpec, p: &Matrix, q: &[f64], margin: f64) -> Self {
        Self {
            name: name.into(),
            inequality: Inequality::Lure,
            weight,
            arch: crate::format::arch_tag(spec.model).into(),
            time: crate::format::time_tag(spec.domain).into(),
            nonlin: crate::format::nonlin_tag(spec.nonlin),
            rate: spec.rate,
            p: p.to_rows(),
            q: q.to_vec(),
            margin,
            delta: None,
            y: None,
        }
    }

    fn spec(&self) -> Result<CertificateSpec, CliError> {
        Ok(CertificateSpec::new(parse_arch(&self.arch)?, parse_time(&self.time)?, parse_nonlin(&self.nonlin)?, self.rate))
    }

    /// Margin recomputed from the stored matrices.
    pub fn recompute(&self, model: &SynapticModel, gains: &GainSet) -> Result<f64, CliError> {
        let n = model.n();
        let w = match self.weight {
            Weight::Plant => model.w.clone(),
            Weight::Feedback => &model.w + &model.b.matmul(&gains.k_f),
            Weight::Observer => &model.w - &gains.l.matmul(&model.c),
        };
        let q = Matrix::from_diag(&self.q);
        if self.q.len() != n {
            return Err(CliError::input(format!("{}: Q has {} entries, expected {n}", self.name, self.q.len())));
        }
        match self.inequality {
            Inequality::Lure => {
                let p = matrix(&format!("{}: P", self.name), &self.p, (n, n))?;
                Ok(certificate_margin(&w, &self.spec()?, &p, &q)?)
            }
            Inequality::GraphSide => {
                let p = matrix(&format!("{}: P", self.name), &self.p, (n, n))?;
                Ok(-max_eig(&graph_side_block(&p, &q, self.rate))?)
            }
            Inequality::Integral => {
                let (m, pd) = (model.m(), model.p());
                let p = matrix(&format!("{}: P", self.name), &self.p, (m, m))?;
                let y = self.y.as_ref().ok_or_else(|| CliError::input(format!("{}: Y missing", self.name)))?;
                let y = matrix(&format!("{}: Y", self.name), y, (m, pd))?;
                let delta = self.delta.ok_or_else(|| CliError::input(format!("{}: delta missing", self.name)))?;
                let block = integral_block_numeric(&w, &model.b, &model.c, delta, self.rate, &p, &y, &q);
                Ok(-max_eig(&block)?)
            }
        }
    }
}

/// Report written by every certifying subcommand.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Rows>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertRecord>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl Report {
    pub fn new(command: &[String]) -> Self {
        Self { command: command.to_vec(), ..Self::default() }
    }

    /// Adds `rec` and mirrors it at the top level if it is the first.
    pub fn push_certificate(&mut self, rec: CertRecord) {
        if self.certificates.is_empty() {
            self.rate = Some(rec.rate);
            self.margin = Some(rec.margin);
            self.p = Some(rec.p.clone());
            self.q = Some(rec.q.clone());
        }
        self.certificates.push(rec);
    }

    pub fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"));
        s.push('\n');
        s
    }
}
