//! Report records and their JSON / CSV encodings.

use std::collections::BTreeMap;
use std::io::Write;

use resdet::functionals::Report;
use resdet::C64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct DensityOut {
    pub x: Vec<f64>,
    pub value: f64,
    pub value_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftValue {
    pub t: f64,
    pub value_re: f64,
    pub value_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub error: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub task: String,
    pub name: String,
    pub operator: Option<String>,
    pub value_re: f64,
    pub value_im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp_value_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp_value_im: Option<f64>,
    pub density: Vec<DensityOut>,
    pub quad_error: f64,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<ShiftValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
    pub software_version: String,
    pub config_hash: String,
}

impl TaskReport {
    pub fn new(task: &str, name: String, operator: Option<String>, hash: &str) -> Self {
        TaskReport {
            task: task.to_string(),
            name,
            operator,
            value_re: 0.0,
            value_im: 0.0,
            exp_value_re: None,
            exp_value_im: None,
            density: Vec::new(),
            quad_error: 0.0,
            params: BTreeMap::new(),
            coefficients: None,
            values: None,
            checks: None,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hash.to_string(),
        }
    }

    pub fn set_value(&mut self, v: C64) {
        self.value_re = v.re;
        self.value_im = v.im;
    }

    /// Copies value, density, error and parameters from a functional report.
    pub fn absorb(&mut self, r: &Report) {
        self.set_value(r.value);
        if let Some(e) = r.exp_value {
            self.exp_value_re = Some(e.re);
            self.exp_value_im = Some(e.im);
        }
        self.density = r
            .density
            .iter()
            .map(|d| DensityOut {
                x: d.x.clone(),
                value: d.value.re,
                value_im: d.value.im,
            })
            .collect();
        self.quad_error = r.quad_error;
        self.params.extend(r.params.iter().map(|(k, v)| (k.clone(), *v)));
        if let Some(h0) = r.h0 {
            self.params.insert("h0".into(), h0 as f64);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    task: &'a str,
    operator: &'a str,
    t: Option<f64>,
    value_re: f64,
    value_im: f64,
    quad_error: f64,
}

/// One row per report, or one row per `t` for shift sweeps.
pub fn write_csv<W: Write>(reports: &[TaskReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let op = r.operator.as_deref().unwrap_or("");
        match &r.values {
            Some(values) => {
                for v in values {
                    w.serialize(CsvRow {
                        task: &r.name,
                        operator: op,
                        t: Some(v.t),
                        value_re: v.value_re,
                        value_im: v.value_im,
                        quad_error: r.quad_error,
                    })?;
                }
            }
            None => w.serialize(CsvRow {
                task: &r.name,
                operator: op,
                t: None,
                value_re: r.value_re,
                value_im: r.value_im,
                quad_error: r.quad_error,
            })?,
        }
    }
    w.flush()?;
    Ok(())
}
