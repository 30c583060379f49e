//! Config documents: an algebra instance and an ordered task list.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use vertexkit::freefield::WickMonomial;
use vertexkit::lattice::LatticeState;
use vertexkit::series::QuadForm;

/// Environment variable overriding every default cap.
pub const CAP_ENV: &str = "VERTEXKIT_CAP";

pub const DEFAULT_WEIGHT_CAP: u32 = 3;
pub const DEFAULT_SERIES_CAP: u32 = 8;
pub const DEFAULT_FIELD_CAP: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path of the offending key, empty for the document itself.
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug)]
pub enum Algebra {
    Lattice {
        gram: Vec<Vec<i64>>,
        weight_cap: u32,
        series_cap: u32,
    },
    FreeField {
        dim: usize,
        form: Option<QuadForm>,
        cap: u32,
    },
}

impl Algebra {
    pub fn kind(&self) -> &'static str {
        match self {
            Algebra::Lattice { .. } => "lattice",
            Algebra::FreeField { .. } => "freefield",
        }
    }

    pub fn cap(&self) -> u32 {
        match self {
            Algebra::Lattice { series_cap, .. } => *series_cap,
            Algebra::FreeField { cap, .. } => *cap,
        }
    }
}

/// A basis state; lattice states use `alpha`/`heis`, free-field states use `factors`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub alpha: Option<Vec<i64>>,
    /// `[generator, depth, multiplicity]`.
    pub heis: Option<Vec<(usize, u32, u32)>>,
    /// `[field, derivative index, multiplicity]`.
    pub factors: Option<Vec<(usize, Vec<u32>, u32)>>,
}

impl StateSpec {
    pub fn lattice(&self, rank: usize) -> Result<LatticeState, String> {
        if self.factors.is_some() {
            return Err("`factors` describes a free-field state".into());
        }
        let alpha = self.alpha.clone().unwrap_or_else(|| vec![0; rank]);
        if alpha.len() != rank {
            return Err(format!("`alpha` has length {}, lattice rank is {rank}", alpha.len()));
        }
        let mut heis = BTreeMap::new();
        for &(k, n, c) in self.heis.iter().flatten() {
            if k >= rank {
                return Err(format!("generator {k} out of range for rank {rank}"));
            }
            if c > 0 {
                *heis.entry((k, n)).or_insert(0) += c;
            }
        }
        LatticeState::new(&alpha, heis).map_err(|e| e.to_string())
    }

    pub fn field(&self, dim: usize) -> Result<WickMonomial, String> {
        if self.alpha.is_some() || self.heis.is_some() {
            return Err("`alpha`/`heis` describe a lattice state".into());
        }
        let mut out = Vec::new();
        for (f, j, c) in self.factors.iter().flatten() {
            if *f != 0 {
                return Err(format!("unknown field {f}; the free scalar has field 0 only"));
            }
            if j.len() != dim {
                return Err(format!("derivative index {j:?} needs {dim} entries"));
            }
            if *c > 0 {
                out.push(((*f, j.clone()), *c));
            }
        }
        Ok(WickMonomial::from_factors(out))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpeTask {
    pub u: StateSpec,
    pub v: StateSpec,
    pub n_min: Option<i64>,
    pub n_max: Option<i64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpointTask {
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BorcherdsTask {
    pub u: Option<StateSpec>,
    pub v: Option<StateSpec>,
    pub w: Option<StateSpec>,
    pub m: Option<i64>,
    pub n: Option<i64>,
    pub q: Option<i64>,
    pub max_weight: Option<u32>,
    pub range: Option<[i64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SievesTask {
    pub n: usize,
    pub d: u32,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YbeTask {
    pub samples: Option<usize>,
    pub max_weight: Option<u32>,
    pub perturb: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CocycleMode {
    #[default]
    Coboundary,
    Contraction,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleTask {
    pub mode: Option<CocycleMode>,
    pub samples: Option<usize>,
    pub tuples: Option<usize>,
    pub max_degree: Option<u32>,
}

#[derive(Clone, Debug)]
pub enum TaskKind {
    Ope(OpeTask),
    Npoint(NpointTask),
    Borcherds(BorcherdsTask),
    Sieves(SievesTask),
    Ybe(YbeTask),
    Cocycle(CocycleTask),
}

pub const TASK_NAMES: [&str; 6] = ["ope", "npoint", "borcherds", "sieves", "ybe", "cocycle"];

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Ope(_) => "ope",
            TaskKind::Npoint(_) => "npoint",
            TaskKind::Borcherds(_) => "borcherds",
            TaskKind::Sieves(_) => "sieves",
            TaskKind::Ybe(_) => "ybe",
            TaskKind::Cocycle(_) => "cocycle",
        }
    }

    /// The task run by a bare subcommand when the config lists none of its kind.
    pub fn default_for(name: &str) -> Option<TaskKind> {
        Some(match name {
            "npoint" => TaskKind::Npoint(NpointTask::default()),
            "borcherds" => TaskKind::Borcherds(BorcherdsTask::default()),
            "sieves" => TaskKind::Sieves(SievesTask { n: 3, d: 2 }),
            "ybe" => TaskKind::Ybe(YbeTask::default()),
            "cocycle" => TaskKind::Cocycle(CocycleTask::default()),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TaskSpec {
    pub id: String,
    pub kind: TaskKind,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub algebra: Option<Algebra>,
    pub seed: Option<u64>,
    pub tasks: Vec<TaskSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    algebra: Option<Value>,
    seed: Option<u64>,
    #[serde(default)]
    tasks: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    #[allow(dead_code)]
    kind: String,
    gram: Vec<Vec<i64>>,
    weight_cap: Option<u32>,
    series_cap: Option<u32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawForm {
    Named(String),
    Matrix(Vec<Vec<i64>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFreeField {
    #[allow(dead_code)]
    kind: String,
    dim: usize,
    form: Option<RawForm>,
    cap: Option<u32>,
}

fn join(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path.is_empty() || path == ".") {
        (_, true) => prefix.to_string(),
        (true, false) => path.to_string(),
        (false, false) if path.starts_with('[') => format!("{prefix}{path}"),
        (false, false) => format!("{prefix}.{path}"),
    }
}

fn decode<T: DeserializeOwned>(v: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        err(join(prefix, &path), e.into_inner().to_string())
    })
}

/// Value of the cap override, if set.
pub fn cap_override() -> Result<Option<u32>, ConfigError> {
    match std::env::var(CAP_ENV) {
        Ok(s) => match s.trim().parse::<u32>() {
            Ok(c) if c > 0 => Ok(Some(c)),
            _ => Err(err(CAP_ENV, format!("expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn positive(key: &str, v: Option<u32>, default: u32) -> Result<u32, ConfigError> {
    match v {
        Some(0) => Err(err(key, "caps must be positive")),
        Some(c) => Ok(c),
        None => Ok(default),
    }
}

fn parse_algebra(v: Value, default_cap: Option<u32>) -> Result<Algebra, ConfigError> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| err("algebra.kind", "missing or not a string; expected `lattice` or `freefield`"))?
        .to_string();
    match kind.as_str() {
        "lattice" => {
            let raw: RawLattice = decode(v, "algebra")?;
            let r = raw.gram.len();
            if r == 0 {
                return Err(err("algebra.gram", "Gram matrix must be nonempty"));
            }
            for (i, row) in raw.gram.iter().enumerate() {
                if row.len() != r {
                    return Err(err(format!("algebra.gram[{i}]"), format!("row has {} entries, expected {r}", row.len())));
                }
            }
            for i in 0..r {
                for j in 0..r {
                    if raw.gram[i][j] != raw.gram[j][i] {
                        return Err(err(format!("algebra.gram[{i}][{j}]"), "Gram matrix is not symmetric"));
                    }
                    if raw.gram[i][j] % 2 != 0 {
                        return Err(err(
                            format!("algebra.gram[{i}][{j}]"),
                            format!("entry {} is not even", raw.gram[i][j]),
                        ));
                    }
                }
            }
            Ok(Algebra::Lattice {
                weight_cap: positive("algebra.weight_cap", raw.weight_cap, default_cap.unwrap_or(DEFAULT_WEIGHT_CAP))?,
                series_cap: positive("algebra.series_cap", raw.series_cap, default_cap.unwrap_or(DEFAULT_SERIES_CAP))?,
                gram: raw.gram,
            })
        }
        "freefield" => {
            let raw: RawFreeField = decode(v, "algebra")?;
            if raw.dim == 0 {
                return Err(err("algebra.dim", "dimension must be positive"));
            }
            let form = match raw.form {
                None => None,
                Some(RawForm::Named(n)) => Some(match n.as_str() {
                    "minkowski" => QuadForm::minkowski(raw.dim),
                    "euclidean" => QuadForm::euclidean(raw.dim),
                    _ => return Err(err("algebra.form", format!("unknown form `{n}`; expected minkowski, euclidean or a matrix"))),
                }),
                Some(RawForm::Matrix(m)) => {
                    if m.len() != raw.dim {
                        return Err(err("algebra.form", format!("matrix must be {0}x{0}", raw.dim)));
                    }
                    Some(QuadForm::new(m).map_err(|e| err("algebra.form", e.to_string()))?)
                }
            };
            if raw.dim == 1 && form.is_some() {
                return Err(err("algebra.form", "the line uses x^-2; omit `form` when dim is 1"));
            }
            Ok(Algebra::FreeField {
                dim: raw.dim,
                form,
                cap: positive("algebra.cap", raw.cap, default_cap.unwrap_or(DEFAULT_FIELD_CAP))?,
            })
        }
        other => Err(err("algebra.kind", format!("unknown kind `{other}`; expected `lattice` or `freefield`"))),
    }
}

fn parse_task(i: usize, v: Value) -> Result<TaskSpec, ConfigError> {
    let key = format!("tasks[{i}]");
    let Value::Object(mut obj) = v else {
        return Err(err(key, "each task must be an object"));
    };
    let name = match obj.remove("task") {
        Some(Value::String(s)) => s,
        _ => return Err(err(format!("{key}.task"), format!("missing or not a string; expected one of {}", TASK_NAMES.join(", ")))),
    };
    let id = match obj.remove("id") {
        None => format!("{name}-{i}"),
        Some(Value::String(s)) => s,
        Some(_) => return Err(err(format!("{key}.id"), "must be a string")),
    };
    let rest = Value::Object(obj);
    let kind = match name.as_str() {
        "ope" => TaskKind::Ope(decode(rest, &key)?),
        "npoint" => TaskKind::Npoint(decode(rest, &key)?),
        "borcherds" => TaskKind::Borcherds(decode(rest, &key)?),
        "sieves" => TaskKind::Sieves(decode(rest, &key)?),
        "ybe" => TaskKind::Ybe(decode(rest, &key)?),
        "cocycle" => TaskKind::Cocycle(decode(rest, &key)?),
        other => return Err(err(format!("{key}.task"), format!("unknown task `{other}`; expected one of {}", TASK_NAMES.join(", ")))),
    };
    Ok(TaskSpec { id, kind })
}

/// Parse and validate a config document. `default_cap` replaces the
/// built-in defaults for caps the document omits.
pub fn parse_config(text: &str, default_cap: Option<u32>) -> Result<Config, ConfigError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    if !doc.is_object() {
        return Err(err("", "top level must be an object"));
    }
    let raw: RawDoc = decode(doc, "")?;
    let algebra = raw.algebra.map(|a| parse_algebra(a, default_cap)).transpose()?;
    let tasks = raw
        .tasks
        .into_iter()
        .enumerate()
        .map(|(i, t)| parse_task(i, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for (i, t) in tasks.iter().enumerate() {
        if !seen.insert(t.id.clone()) {
            return Err(err(format!("tasks[{i}].id"), format!("duplicate task id `{}`", t.id)));
        }
    }
    Ok(Config {
        algebra,
        seed: raw.seed,
        tasks,
    })
}
