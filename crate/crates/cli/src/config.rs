//! Experiment configuration files.
//!
//! A configuration is a JSON object with a required integer `seed`, an
//! optional `kind` that must match the subcommand, and kind-specific fields.
//! Parsing collects every problem it finds instead of stopping at the first.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};
use trpchain::chaining::{parse_metric_space, FiniteMetricSpace};
use trpchain::empirical::{EmpiricalFamily, WeightLaw};
use trpchain::process::ProcessSpec;
use trpchain::sensing::{fourier_unitary, RIP_SUPPORT_BUDGET};
use trpchain::DenseTensor;

pub const MAX_SAMPLES: usize = 10_000_000;
/// Cap on `samples * |T|` for sampled experiments.
pub const MAX_SAMPLE_POINTS: usize = 100_000_000;
/// Cap on `prod J` for dense sensing operators.
pub const MAX_OPERATOR_SIZE: usize = 1024;
/// Cap on stored entries of a generated empirical family.
pub const MAX_FAMILY_ENTRIES: usize = 1 << 24;
/// Cap on the number of rows of a martingale or Bernstein generator.
pub const MAX_GENERATOR_SIZE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Simulate,
    Gamma,
    Rip,
    VerifyAzuma,
    VerifyBernstein,
    Empirical,
    MixedTail,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Simulate,
        Kind::Gamma,
        Kind::Rip,
        Kind::VerifyAzuma,
        Kind::VerifyBernstein,
        Kind::Empirical,
        Kind::MixedTail,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Gamma => "gamma",
            Kind::Rip => "rip",
            Kind::VerifyAzuma => "verify-azuma",
            Kind::VerifyBernstein => "verify-bernstein",
            Kind::Empirical => "empirical",
            Kind::MixedTail => "mixed-tail",
        }
    }

    pub fn from_name(name: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// Dotted path of the offending field; empty for the whole document.
    pub field: String,
    pub message: String,
    /// The request is well-formed but exceeds a resource limit.
    pub capacity: bool,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.capacity { "capacity" } else { "invalid" };
        if self.field.is_empty() {
            write!(f, "{tag}: {}", self.message)
        } else {
            write!(f, "{tag}: {}: {}", self.field, self.message)
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulateConfig {
    pub samples: usize,
    pub process: ProcessSpec,
    pub t0: usize,
    pub u_grid: Option<Vec<f64>>,
    pub survival_levels: Vec<f64>,
    pub moments: Vec<f64>,
    pub increments: Option<IncrementCheck>,
    pub fit: Option<FitConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementCheck {
    pub beta: f64,
    pub u_grid: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "default_fit_grid")]
    pub u_grid: Vec<f64>,
}

/// Ten evenly spaced points on `[1, 5]`.
pub fn default_fit_grid() -> Vec<f64> {
    (0..10).map(|i| 1.0 + 4.0 * i as f64 / 9.0).collect()
}

pub fn default_survival_levels() -> Vec<f64> {
    (0..10).map(|i| 0.5 * (4e-3f64).powf(i as f64 / 9.0)).collect()
}

#[derive(Clone, Debug)]
pub struct GammaConfig {
    pub space: FiniteMetricSpace,
    pub metric_id: String,
    pub beta: f64,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RipConfig {
    pub col_dims: Vec<usize>,
    pub operator: DenseTensor,
    pub operator_label: String,
    pub xi: usize,
    pub tau: f64,
    pub trials: usize,
    pub target_sizes: Vec<usize>,
    pub eta: Option<f64>,
    /// `(C4, C5)`; fitted from the sweep when absent.
    pub constants: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct MatrixConfig {
    pub samples: usize,
    pub modes: Vec<usize>,
    pub steps: usize,
    /// Multiples of `sigma` for the martingale check, raw `u` for Bernstein.
    pub points: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EmpiricalConfig {
    pub samples: usize,
    pub family: EmpiricalFamily,
    pub fit: FitConfig,
    pub moment_samples: usize,
}

#[derive(Clone, Debug)]
pub struct MixedTailConfig {
    pub samples: usize,
    pub process: ProcessSpec,
    pub t0: usize,
    pub fit: FitConfig,
}

#[derive(Clone, Debug)]
pub enum Experiment {
    Simulate(SimulateConfig),
    Gamma(GammaConfig),
    Rip(RipConfig),
    VerifyAzuma(MatrixConfig),
    VerifyBernstein(MatrixConfig),
    Empirical(EmpiricalConfig),
    MixedTail(MixedTailConfig),
}

#[derive(Clone, Debug)]
pub struct Config {
    pub kind: Kind,
    pub seed: u64,
    /// The document as read, echoed into every report.
    pub raw: Value,
    pub experiment: Experiment,
}

impl Config {
    /// Parse a configuration for `kind`. Relative file references resolve
    /// against `base_dir`.
    pub fn parse(kind: Kind, text: &str, base_dir: &Path) -> Result<Config, Vec<Diagnostic>> {
        let raw: Value = serde_json::from_str(text).map_err(|e| {
            vec![Diagnostic { field: String::new(), message: format!("not valid JSON: {e}"), capacity: false }]
        })?;
        let Some(obj) = raw.as_object() else {
            return Err(vec![Diagnostic {
                field: String::new(),
                message: "configuration must be a JSON object".into(),
                capacity: false,
            }]);
        };
        let mut f = Fields::new(obj, base_dir);
        if let Some(name) = f.optional::<String>("kind") {
            f.check(name == kind.name(), "kind", format!("config is for `{name}` but the subcommand is `{kind}`"));
        }
        let seed = f.required::<u64>("seed");
        let experiment = match kind {
            Kind::Simulate => parse_simulate(&mut f).map(Experiment::Simulate),
            Kind::Gamma => parse_gamma(&mut f).map(Experiment::Gamma),
            Kind::Rip => parse_rip(&mut f).map(Experiment::Rip),
            Kind::VerifyAzuma => parse_matrix(&mut f, "multiples").map(Experiment::VerifyAzuma),
            Kind::VerifyBernstein => parse_matrix(&mut f, "u_grid").map(Experiment::VerifyBernstein),
            Kind::Empirical => parse_empirical(&mut f).map(Experiment::Empirical),
            Kind::MixedTail => parse_mixed(&mut f).map(Experiment::MixedTail),
        };
        f.reject_unknown();
        match (seed, experiment) {
            (Some(seed), Some(experiment)) if f.diags.is_empty() => {
                Ok(Config { kind, seed, raw: raw.clone(), experiment })
            }
            _ => Err(f.diags),
        }
    }

    pub fn load(kind: Kind, path: &Path) -> Result<Config, Vec<Diagnostic>> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![Diagnostic { field: String::new(), message: format!("cannot read {}: {e}", path.display()), capacity: false }]
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::parse(kind, &text, &base)
    }
}

/// Every diagnostic for `text`; empty when the configuration is runnable.
pub fn validate(kind: Kind, text: &str, base_dir: &Path) -> Vec<Diagnostic> {
    Config::parse(kind, text, base_dir).err().unwrap_or_default()
}

struct Fields<'a> {
    obj: &'a Map<String, Value>,
    base_dir: PathBuf,
    seen: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

impl<'a> Fields<'a> {
    fn new(obj: &'a Map<String, Value>, base_dir: &Path) -> Self {
        Fields { obj, base_dir: base_dir.to_path_buf(), seen: BTreeSet::new(), diags: Vec::new() }
    }

    fn invalid(&mut self, field: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic { field: field.into(), message: message.into(), capacity: false });
    }

    fn capacity(&mut self, field: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic { field: field.into(), message: message.into(), capacity: true });
    }

    fn check(&mut self, ok: bool, field: &str, message: impl Into<String>) -> bool {
        if !ok {
            self.invalid(field, message);
        }
        ok
    }

    fn value(&mut self, key: &str) -> Option<&'a Value> {
        self.seen.insert(key.to_string());
        self.obj.get(key)
    }

    fn decode<T: DeserializeOwned>(&mut self, key: &str, v: &Value) -> Option<T> {
        match serde_json::from_value(v.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.invalid(key, e.to_string());
                None
            }
        }
    }

    fn required<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        match self.value(key) {
            Some(v) => self.decode(key, v),
            None => {
                self.invalid(key, "required field is missing");
                None
            }
        }
    }

    fn optional<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.value(key)?;
        self.decode(key, v)
    }

    fn reject_unknown(&mut self) {
        let unknown: Vec<String> = self.obj.keys().filter(|k| !self.seen.contains(*k)).cloned().collect();
        for k in unknown {
            self.invalid(&k, "unknown field");
        }
    }

    fn samples(&mut self, key: &str) -> Option<usize> {
        let n = self.required::<usize>(key)?;
        if !self.check(n >= 1, key, "must be at least 1") {
            return None;
        }
        if n > MAX_SAMPLES {
            self.capacity(key, format!("{n} samples exceed the limit of {MAX_SAMPLES}; lower `{key}`"));
            return None;
        }
        Some(n)
    }

    fn positive_grid(&mut self, key: &str, grid: &[f64]) -> bool {
        self.check(!grid.is_empty(), key, "grid must not be empty")
            && self.check(grid.iter().all(|u| u.is_finite() && *u > 0.0), key, "grid points must be finite and positive")
    }
}

fn check_point_budget(f: &mut Fields<'_>, samples: usize, points: usize) {
    if samples.saturating_mul(points) > MAX_SAMPLE_POINTS {
        f.capacity(
            "samples",
            format!(
                "{samples} samples over {points} index points exceed {MAX_SAMPLE_POINTS} sample points; \
                 lower `samples` or shrink the index set"
            ),
        );
    }
}

fn parse_process(f: &mut Fields<'_>) -> Option<(ProcessSpec, usize)> {
    let process: ProcessSpec = f.required("process")?;
    let t0 = f.optional::<usize>("t0").unwrap_or(0);
    if !f.check(t0 < process.size(), "t0", format!("must index a point of T (|T| = {})", process.size())) {
        return None;
    }
    Some((process, t0))
}

fn parse_fit(f: &mut Fields<'_>, key: &str) -> Option<FitConfig> {
    let fit = f.optional::<FitConfig>(key).unwrap_or(FitConfig { u_grid: default_fit_grid() });
    let ok = f.positive_grid(&format!("{key}.u_grid"), &fit.u_grid);
    let ok = ok && f.check(fit.u_grid.iter().all(|u| *u >= 1.0), &format!("{key}.u_grid"), "bound grids need u >= 1");
    ok.then_some(fit)
}

fn parse_simulate(f: &mut Fields<'_>) -> Option<SimulateConfig> {
    let samples = f.samples("samples");
    let process = parse_process(f);
    let u_grid = f.optional::<Vec<f64>>("u_grid");
    if let Some(g) = &u_grid {
        f.check(g.iter().all(|u| u.is_finite() && *u >= 0.0), "u_grid", "grid points must be finite and >= 0");
    }
    let survival_levels = f.optional::<Vec<f64>>("survival_levels").unwrap_or_else(default_survival_levels);
    f.check(
        !survival_levels.is_empty() && survival_levels.iter().all(|q| *q > 0.0 && *q <= 1.0),
        "survival_levels",
        "levels must lie in (0, 1]",
    );
    let moments = f.optional::<Vec<f64>>("moments").unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    f.check(moments.iter().all(|p| p.is_finite() && *p >= 1.0), "moments", "moment orders must be >= 1");
    let increments = f.optional::<IncrementCheck>("increments");
    if let Some(inc) = &increments {
        f.check(inc.beta > 0.0 && inc.beta.is_finite(), "increments.beta", "must be positive");
        f.positive_grid("increments.u_grid", &inc.u_grid);
    }
    let fit = if f.obj.contains_key("fit") { Some(parse_fit(f, "fit")?) } else { None };
    let (process, t0) = process?;
    let samples = samples?;
    check_point_budget(f, samples, process.size());
    Some(SimulateConfig { samples, process, t0, u_grid, survival_levels, moments, increments, fit })
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SpaceSource {
    Line(Vec<f64>),
    Points(Vec<Vec<f64>>),
    Text(String),
    File(PathBuf),
}

fn parse_gamma(f: &mut Fields<'_>) -> Option<GammaConfig> {
    let metric_id = f.optional::<String>("metric_id").unwrap_or_else(|| "d".into());
    let beta = f.required::<f64>("beta");
    if let Some(b) = beta {
        f.check(b > 0.0 && b.is_finite(), "beta", "must be positive");
    }
    let p = f.optional::<Vec<f64>>("p").unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    f.check(p.iter().all(|p| p.is_finite() && *p >= 1.0), "p", "orders must be >= 1");
    let space = match f.required::<SpaceSource>("space")? {
        SpaceSource::Line(xs) => FiniteMetricSpace::from_line(&metric_id, &xs),
        SpaceSource::Points(pts) => FiniteMetricSpace::from_points(&metric_id, &pts),
        SpaceSource::Text(text) => parse_metric_space(&text),
        SpaceSource::File(path) => {
            let full = f.base_dir.join(&path);
            match std::fs::read_to_string(&full) {
                Ok(text) => parse_metric_space(&text),
                Err(e) => {
                    f.invalid("space.file", format!("cannot read {}: {e}", full.display()));
                    return None;
                }
            }
        }
    };
    let space = match space {
        Ok(s) => s,
        Err(e) => {
            f.invalid("space", e.to_string());
            return None;
        }
    };
    if space.metric(&metric_id).is_err() {
        let ids: Vec<&str> = space.metric_ids().collect();
        f.invalid("metric_id", format!("`{metric_id}` is not a metric of the space (have {ids:?})"));
        return None;
    }
    Some(GammaConfig { space, metric_id, beta: beta?, p })
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum OperatorSource {
    Fourier,
    Tensor(DenseTensor),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Constants {
    c4: f64,
    c5: f64,
}

fn binomial_exceeds(n: usize, k: usize, cap: u128) -> bool {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap {
            return true;
        }
    }
    false
}

fn parse_rip(f: &mut Fields<'_>) -> Option<RipConfig> {
    let col_dims = f.required::<Vec<usize>>("col_dims");
    let xi = f.required::<usize>("xi");
    let tau = f.required::<f64>("tau");
    let trials = f.required::<usize>("trials");
    let targets = f.required::<Vec<usize>>("target_sizes");
    let eta = f.optional::<f64>("eta");
    let constants = f.optional::<Constants>("constants");
    let source = f.optional::<OperatorSource>("operator").unwrap_or(OperatorSource::Fourier);
    if let Some(x) = xi {
        f.check(x >= 1, "xi", "must be at least 1");
    }
    if let Some(t) = tau {
        f.check(t > 0.0 && t.is_finite(), "tau", "must be positive");
    }
    if let Some(t) = trials {
        if f.check(t >= 1, "trials", "must be at least 1") && t > MAX_SAMPLES {
            f.capacity("trials", format!("{t} trials exceed the limit of {MAX_SAMPLES}"));
        }
    }
    if let Some(e) = eta {
        f.check(e > 0.0 && e < 1.0, "eta", "must lie in (0, 1)");
    }
    if let Some(c) = &constants {
        f.check(c.c4 > 0.0 && c.c5 > 0.0, "constants", "c4 and c5 must be positive");
        f.check(eta.is_some(), "constants", "constants are only used together with `eta`");
    }
    let col_dims = col_dims?;
    if !f.check(!col_dims.is_empty() && col_dims.iter().all(|&d| d >= 1), "col_dims", "modes must be positive") {
        return None;
    }
    let size = col_dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
    if size > MAX_OPERATOR_SIZE {
        f.capacity("col_dims", format!("prod J = {size} exceeds the dense operator limit of {MAX_OPERATOR_SIZE}"));
        return None;
    }
    if let Some(ts) = &targets {
        f.check(!ts.is_empty(), "target_sizes", "at least one target size is required");
        f.check(ts.iter().all(|&t| (1..=size).contains(&t)), "target_sizes", format!("targets must lie in [1, {size}]"));
    }
    if let Some(x) = xi.filter(|&x| x >= 1) {
        if binomial_exceeds(size, x.min(size), RIP_SUPPORT_BUDGET) {
            f.capacity(
                "xi",
                format!(
                    "C({size}, {}) supports exceed the enumeration budget of {RIP_SUPPORT_BUDGET}; lower `xi` or `col_dims`",
                    x.min(size)
                ),
            );
        }
    }
    let (operator, operator_label) = match source {
        OperatorSource::Fourier => (fourier_unitary(&col_dims).ok()?, "fourier".to_string()),
        OperatorSource::Tensor(t) => {
            let square_ok = t.shape().row_modes() == col_dims.as_slice() && t.shape().col_modes() == col_dims.as_slice();
            if !f.check(square_ok, "operator.tensor", format!("shape must be ({col_dims:?}; {col_dims:?})")) {
                return None;
            }
            if !f.check(t.is_unitary(1e-8), "operator.tensor", "operator must be unitary") {
                return None;
            }
            (t, "tensor".to_string())
        }
    };
    Some(RipConfig {
        col_dims,
        operator,
        operator_label,
        xi: xi?,
        tau: tau?,
        trials: trials?,
        target_sizes: targets?,
        eta,
        constants: constants.map(|c| (c.c4, c.c5)),
    })
}

fn parse_matrix(f: &mut Fields<'_>, points_key: &str) -> Option<MatrixConfig> {
    let samples = f.samples("samples");
    let modes = f.required::<Vec<usize>>("modes");
    let steps = f.required::<usize>("steps");
    let points = f.required::<Vec<f64>>(points_key);
    if let Some(s) = steps {
        f.check(s >= 1, "steps", "must be at least 1");
    }
    if let Some(p) = &points {
        f.positive_grid(points_key, p);
    }
    let modes = modes?;
    if !f.check(!modes.is_empty() && modes.iter().all(|&d| d >= 1), "modes", "modes must be positive") {
        return None;
    }
    let size = modes.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
    if size > MAX_GENERATOR_SIZE {
        f.capacity("modes", format!("prod I = {size} exceeds the generator limit of {MAX_GENERATOR_SIZE}"));
        return None;
    }
    let (samples, steps) = (samples?, steps?);
    check_point_budget(f, samples, steps);
    Some(MatrixConfig { samples, modes, steps, points: points? })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomDiagonal {
    points: usize,
    n: usize,
    dim: usize,
}

fn parse_empirical(f: &mut Fields<'_>) -> Option<EmpiricalConfig> {
    let samples = f.samples("samples");
    let moment_samples = f.optional::<usize>("moment_samples").unwrap_or(5000);
    f.check((1..=MAX_SAMPLES).contains(&moment_samples), "moment_samples", format!("must lie in [1, {MAX_SAMPLES}]"));
    let fit = parse_fit(f, "fit");
    let seed = f.obj.get("seed").and_then(Value::as_u64).unwrap_or(0);
    let raw = f.required::<Value>("family")?;
    let family = match raw.get("random_diagonal") {
        Some(gen) => {
            let law = match raw.get("law") {
                Some(l) => f.decode::<WeightLaw>("family.law", l)?,
                None => WeightLaw::Rademacher,
            };
            let extra: Vec<&String> = raw.as_object()?.keys().filter(|k| *k != "random_diagonal" && *k != "law").collect();
            f.check(extra.is_empty(), "family", format!("unknown fields {extra:?}"));
            let g: RandomDiagonal = f.decode("family.random_diagonal", gen)?;
            let entries = g.points.saturating_mul(g.n).saturating_mul(g.dim.saturating_mul(g.dim));
            if entries > MAX_FAMILY_ENTRIES {
                f.capacity(
                    "family.random_diagonal",
                    format!("{entries} tensor entries exceed the limit of {MAX_FAMILY_ENTRIES}; lower points, n or dim"),
                );
                return None;
            }
            EmpiricalFamily::random_diagonal(g.points, g.n, g.dim, law, seed)
                .map_err(|e| f.invalid("family.random_diagonal", e.to_string()))
                .ok()?
        }
        None => f.decode::<EmpiricalFamily>("family", &raw)?,
    };
    let samples = samples?;
    check_point_budget(f, samples, family.size());
    Some(EmpiricalConfig { samples, family, fit: fit?, moment_samples })
}

fn parse_mixed(f: &mut Fields<'_>) -> Option<MixedTailConfig> {
    let samples = f.samples("samples");
    let fit = parse_fit(f, "fit");
    let (process, t0) = parse_process(f)?;
    if !f.check(
        matches!(process.family, trpchain::process::Family::MixedLinear { .. }),
        "process.family",
        "mixed-tail experiments need the mixed_linear family",
    ) {
        return None;
    }
    let samples = samples?;
    check_point_budget(f, samples, process.size());
    Some(MixedTailConfig { samples, process, t0, fit: fit? })
}
