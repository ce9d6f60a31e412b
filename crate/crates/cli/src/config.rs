//! Task configuration: JSON schema types, loading and validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem located by a JSON pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "ConfigSchemaError at {at}: {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct TaskConfig {
    pub manifold: Manifold,
    #[serde(default)]
    pub operators: Vec<OperatorDef>,
    pub tasks: Vec<TaskDef>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Manifold {
    pub n: usize,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
    #[serde(default)]
    pub metric_fourier: MetricFourier,
}

fn default_x_grid() -> usize {
    resdet::geometry::DEFAULT_X_GRID
}

/// `g = e^{2ω}(I + P)`; `conformal` lists the modes of `ω`, `entries` the
/// modes of the symmetric perturbation `P` (1-based `i <= j`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct MetricFourier {
    #[serde(default)]
    pub conformal: Vec<Mode>,
    #[serde(default)]
    pub entries: Vec<EntryMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub wave: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryMode {
    pub i: usize,
    pub j: usize,
    pub wave: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Either `builder` (+ `params`) or an explicit `terms` list with `order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct OperatorDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BuilderParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermDef>>,
    /// The listed terms are the whole expansion (no implicit zero tail error).
    #[serde(default)]
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct BuilderParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub which: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_dependent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDef {
    pub degree: f64,
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Res,
    Detres,
    Det0,
    Zeta0,
    DetresOnePlus,
    Index,
    ZetaPoly,
    Selfcheck,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Res => "res",
            TaskKind::Detres => "detres",
            TaskKind::Det0 => "det0",
            TaskKind::Zeta0 => "zeta0",
            TaskKind::DetresOnePlus => "detres_one_plus",
            TaskKind::Index => "index",
            TaskKind::ZetaPoly => "zeta_poly",
            TaskKind::Selfcheck => "selfcheck",
        }
    }

    fn needs_operator(self) -> bool {
        self != TaskKind::Selfcheck
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct TaskDef {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    /// Spectral cut in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Shift values for `zeta_poly`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    /// `B_0, B_1, ...` for `zeta_poly` (`null` for a zero term); defaults
    /// to `[null, I]`, i.e. `A + tI`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<Option<String>>>,
    #[serde(default)]
    pub h0: i64,
}

impl TaskDef {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct NumericsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_res: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour_nodes: Option<usize>,
    /// Accepted and echoed; jet orders follow from the slot requirements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet_order: Option<usize>,
    /// Default spectral cut in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_error: Option<bool>,
    /// Per-check tolerance overrides for `selfcheck`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub sphere_res: Option<usize>,
    pub contour_nodes: Option<usize>,
    pub x_grid: Option<usize>,
    pub theta: Option<f64>,
    pub seed: Option<u64>,
}

/// `a.b[3].c` style path to a JSON pointer.
fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => {}
        }
    }
    out
}

pub fn parse_config(text: &str) -> Result<TaskConfig, SchemaError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| SchemaError::new("", format!("invalid JSON: {e}")))?;
    let cfg: TaskConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = pointer_of(e.path());
        SchemaError::new(pointer, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl TaskConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.sphere_res {
            self.numerics.sphere_res = Some(v);
        }
        if let Some(v) = o.contour_nodes {
            self.numerics.contour_nodes = Some(v);
        }
        if let Some(v) = o.x_grid {
            self.manifold.x_grid = v;
        }
        if let Some(v) = o.theta {
            self.numerics.theta = Some(v);
            for t in &mut self.tasks {
                t.theta = None;
            }
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    /// SHA-256 of the canonical JSON form (sorted keys, no whitespace).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let text = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn operator(&self, name: &str) -> Option<(usize, &OperatorDef)> {
        self.operators.iter().enumerate().find(|(_, o)| o.name == name)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let n = self.manifold.n;
        if !(1..=4).contains(&n) {
            return Err(SchemaError::new("/manifold/n", "n must be in 1..=4"));
        }
        if self.manifold.x_grid == 0 {
            return Err(SchemaError::new("/manifold/xGrid", "xGrid must be positive"));
        }
        for (k, m) in self.manifold.metric_fourier.conformal.iter().enumerate() {
            if m.wave.len() != n {
                return Err(SchemaError::new(
                    format!("/manifold/metricFourier/conformal/{k}/wave"),
                    format!("wave vector must have {n} entries"),
                ));
            }
        }
        for (k, m) in self.manifold.metric_fourier.entries.iter().enumerate() {
            let at = format!("/manifold/metricFourier/entries/{k}");
            if m.wave.len() != n {
                return Err(SchemaError::new(
                    format!("{at}/wave"),
                    format!("wave vector must have {n} entries"),
                ));
            }
            if m.i == 0 || m.j == 0 || m.i > n || m.j > n || m.i > m.j {
                return Err(SchemaError::new(at, format!("need 1 <= i <= j <= {n}")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (k, o) in self.operators.iter().enumerate() {
            let at = format!("/operators/{k}");
            if !seen.insert(o.name.as_str()) {
                return Err(SchemaError::new(
                    format!("{at}/name"),
                    format!("duplicate operator name `{}`", o.name),
                ));
            }
            match (&o.builder, &o.terms) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(SchemaError::new(
                        at,
                        "exactly one of `builder` and `terms` is required",
                    ))
                }
                (None, Some(terms)) => {
                    let Some(order) = o.order else {
                        return Err(SchemaError::new(at, "`order` is required with `terms`"));
                    };
                    if terms.is_empty() {
                        return Err(SchemaError::new(format!("{at}/terms"), "no terms"));
                    }
                    for (j, t) in terms.iter().enumerate() {
                        if t.degree != order - j as f64 {
                            return Err(SchemaError::new(
                                format!("{at}/terms/{j}/degree"),
                                format!("expected degree {}", order - j as f64),
                            ));
                        }
                    }
                }
                (Some(_), None) => {}
            }
        }
        if self.tasks.is_empty() {
            return Err(SchemaError::new("/tasks", "no tasks"));
        }
        for (k, t) in self.tasks.iter().enumerate() {
            let at = format!("/tasks/{k}");
            if t.kind.needs_operator() {
                let Some(name) = &t.operator else {
                    return Err(SchemaError::new(at, "`operator` is required"));
                };
                if self.operator(name).is_none() {
                    return Err(SchemaError::new(
                        format!("{at}/operator"),
                        format!("unknown operator `{name}`"),
                    ));
                }
            }
            if let Some(shifts) = &t.shifts {
                for (i, s) in shifts.iter().enumerate() {
                    if let Some(name) = s {
                        if self.operator(name).is_none() {
                            return Err(SchemaError::new(
                                format!("{at}/shifts/{i}"),
                                format!("unknown operator `{name}`"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "manifold": {"n": 2},
        "operators": [{"name": "lap", "builder": "laplace", "params": {"t": 1}}],
        "tasks": [{"kind": "detres", "operator": "lap"}]
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.manifold.x_grid, resdet::geometry::DEFAULT_X_GRID);
        assert_eq!(cfg.tasks[0].kind, TaskKind::Detres);
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let bad = MINIMAL.replace("\"detres\"", "\"detress\"");
        assert_eq!(parse_config(&bad).unwrap_err().pointer, "/tasks/0/kind");
        let bad = MINIMAL.replace("\"operator\": \"lap\"", "\"operator\": \"nope\"");
        assert_eq!(parse_config(&bad).unwrap_err().pointer, "/tasks/0/operator");
        let bad = MINIMAL.replace("\"t\": 1", "\"tt\": 1");
        assert_eq!(parse_config(&bad).unwrap_err().pointer, "/operators/0/params/tt");
        let bad = MINIMAL.replace("\"n\": 2", "\"n\": 7");
        assert_eq!(parse_config(&bad).unwrap_err().pointer, "/manifold/n");
    }

    #[test]
    fn hash_tracks_numeric_knobs() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        let h = cfg.hash();
        assert_eq!(h, parse_config(MINIMAL).unwrap().hash());
        cfg.apply(&Overrides {
            sphere_res: Some(30),
            ..Overrides::default()
        });
        assert_ne!(cfg.hash(), h);
    }
}
