//! Run configuration: a TOML document, optionally patched by `--override`
//! flags, validated into a [`RunConfig`].
//!
//! ```toml
//! convention = "paper-sol"      # or: lambda = 0.5
//! n = 1
//! phi = "y1^2/2"                # or { builtin = "quadratic", alpha = 1.0 } or { grid = "phi.bin" }
//! initial_data = "x1^2/2"       # or { grid = "g.bin" }
//! derive_phi = false
//!
//! [initial_grid]
//! lower = -4.0
//! upper = 4.0
//! counts = 401
//!
//! [query]
//! points = [[2.0, 1.0]]         # x1..xn then t
//! # grid = { lower = -1.0, upper = 1.0, counts = 21 }
//! # t = [0.5, 1.0]
//!
//! [solver]
//! branch_policy = "min-u"
//!
//! [gates]
//! residual = 1e-4
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "json"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use hodohj_core::hodograph::GridSpec;
use hodohj_core::{Builtin, BranchPolicy, Expression, Field, Grid, Options, Setup};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

impl Scalars {
    fn expand(&self, n: usize, field: &str) -> CliResult<Vec<f64>> {
        match self {
            Scalars::One(v) => Ok(vec![*v; n]),
            Scalars::Many(v) if v.len() == n => Ok(v.clone()),
            Scalars::Many(v) => Err(CliError::validation(field, format!("has {} entries, expected {n}", v.len()))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Counts {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    lower: Scalars,
    upper: Scalars,
    counts: Counts,
}

impl RawGrid {
    fn build(&self, n: usize, field: &str) -> CliResult<Grid> {
        let lower = self.lower.expand(n, &format!("{field}.lower"))?;
        let upper = self.upper.expand(n, &format!("{field}.upper"))?;
        let counts = match &self.counts {
            Counts::One(c) => vec![*c; n],
            Counts::Many(c) if c.len() == n => c.clone(),
            Counts::Many(c) => {
                return Err(CliError::validation(
                    format!("{field}.counts"),
                    format!("has {} entries, expected {n}", c.len()),
                ))
            }
        };
        GridSpec::new(lower, upper, counts).map_err(|e| CliError::validation(field, e.to_string()))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawPhi {
    Expression(String),
    Builtin {
        builtin: String,
        alpha: Option<f64>,
        beta: Option<f64>,
        b: Option<Vec<f64>>,
        c: Option<f64>,
    },
    Grid {
        grid: PathBuf,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Expression(String),
    Grid { grid: PathBuf },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    points: Option<Vec<Vec<f64>>>,
    grid: Option<RawGrid>,
    t: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    newton_tol: Option<f64>,
    max_iter: Option<usize>,
    damping: Option<f64>,
    min_step: Option<f64>,
    multistart_lower: Option<Scalars>,
    multistart_upper: Option<Scalars>,
    multistart_count: Option<usize>,
    dedup_tol: Option<f64>,
    branch_policy: Option<String>,
    rank_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    h: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGates {
    residual: Option<f64>,
    compare_linf: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    sources: Option<Vec<String>>,
    expression: Option<String>,
    cfl: Option<f64>,
    hopf_lattice: Option<RawGrid>,
    hopf_refine: Option<usize>,
    hopf_policy: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    formats: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    convention: Option<String>,
    lambda: Option<f64>,
    n: Option<usize>,
    phi: Option<RawPhi>,
    initial_data: Option<RawInitial>,
    #[serde(default)]
    derive_phi: bool,
    initial_grid: Option<RawGrid>,
    dual_grid: Option<RawGrid>,
    #[serde(default)]
    query: RawQuery,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    gates: RawGates,
    #[serde(default)]
    compare: RawCompare,
    #[serde(default)]
    output: RawOutput,
}

/// Where the parameter function comes from.
#[derive(Clone, Debug)]
pub enum PhiSource {
    Expression(Expression),
    Builtin(Builtin<f64>),
    Grid { path: PathBuf, field: Field },
}

/// Initial data `g(x) = u(x, 0)`.
#[derive(Clone, Debug)]
pub enum InitialSource {
    Expression(Expression),
    Grid { path: PathBuf, field: Field },
}

#[derive(Clone, Debug)]
pub enum Query {
    /// Explicit `(x, t)` pairs.
    Points(Vec<(Vec<f64>, f64)>),
    /// Every node of `grid` at every time in `t`.
    Grid { grid: Grid, t: Vec<f64> },
}

impl Query {
    pub fn len(&self) -> usize {
        match self {
            Query::Points(p) => p.len(),
            Query::Grid { grid, t } => grid.len() * t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All query pairs, t-major for grids.
    pub fn pairs(&self) -> Vec<(Vec<f64>, f64)> {
        match self {
            Query::Points(p) => p.clone(),
            Query::Grid { grid, t } => {
                t.iter().flat_map(|&s| grid.points().into_iter().map(move |x| (x, s))).collect()
            }
        }
    }

    /// Distinct query times in increasing order.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = match self {
            Query::Points(p) => p.iter().map(|(_, s)| *s).collect(),
            Query::Grid { t, .. } => t.clone(),
        };
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Implicit,
    Hopf,
    Characteristics,
    LaxFriedrichs,
    Expression,
}

impl SourceKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "implicit" => SourceKind::Implicit,
            "hopf" => SourceKind::Hopf,
            "characteristics" => SourceKind::Characteristics,
            "lax-friedrichs" => SourceKind::LaxFriedrichs,
            "expression" => SourceKind::Expression,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Implicit => "implicit",
            SourceKind::Hopf => "hopf",
            SourceKind::Characteristics => "characteristics",
            SourceKind::LaxFriedrichs => "lax-friedrichs",
            SourceKind::Expression => "expression",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub sources: Vec<SourceKind>,
    /// Reference `u(x1..xn, t)` for the `expression` source.
    pub expression: Option<Expression>,
    pub cfl: f64,
    pub hopf_lattice: Option<Grid>,
    pub hopf_refine: usize,
    pub hopf_policy: BranchPolicy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Gates {
    pub residual: Option<f64>,
    pub compare_linf: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub grid: bool,
}

#[derive(Clone, Debug)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Formats,
}

/// A fully validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub setup: Setup,
    pub convention: Option<String>,
    /// `None` when no parameter function can be resolved (only initial data
    /// was given); commands that need one report it.
    pub phi: Option<PhiSource>,
    pub initial_data: Option<InitialSource>,
    pub derive_phi: bool,
    pub initial_grid: Option<Grid>,
    pub dual_grid: Option<Grid>,
    pub query: Query,
    pub solver: Options,
    pub verify_h: f64,
    pub gates: Gates,
    pub compare: CompareConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn n(&self) -> usize {
        self.setup.n()
    }

    pub fn lambda(&self) -> f64 {
        self.setup.lambda()
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn parse_error(path: &Path, text: &str, e: &toml::de::Error) -> CliError {
    let line = e.span().map_or(1, |s| line_of(text, s.start));
    CliError::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
}

/// Reads `key=value` as a TOML value, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> CliResult<()> {
    let (key, value) = spec.split_once('=').ok_or_else(|| CliError::Override(spec.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Override(spec.into()));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(CliError::validation(key, format!("cannot override inside non-table '{part}'"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), override_value(value.trim()));
    Ok(())
}

/// Loads and validates a config file; `overrides` are `key=value` strings
/// with dotted keys applied on top of the file.
pub fn load_config(path: &Path, overrides: &[String]) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, path, &base, overrides)
}

/// Parses config text; relative file paths resolve against `base_dir`.
pub fn parse_config(text: &str, path: &Path, base_dir: &Path, overrides: &[String]) -> CliResult<RunConfig> {
    let mut raw: RawConfig = toml::from_str(text).map_err(|e| parse_error(path, text, &e))?;
    if !overrides.is_empty() {
        let mut table: toml::Table = text.parse().map_err(|e| parse_error(path, text, &e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        raw = RawConfig::deserialize(toml::Value::Table(table))
            .map_err(|e| CliError::validation("override", e.message().to_string()))?;
    }
    validate(raw, base_dir)
}

fn positive(v: f64, field: &str) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::validation(field, "must be positive and finite"))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_grid(base: &Path, p: &Path, n: usize, field: &str) -> CliResult<(PathBuf, Field)> {
    let path = resolve(base, p);
    let g = Field::load_binary(&path).map_err(|e| CliError::validation(field, format!("cannot load '{}': {e}", path.display())))?;
    if g.dim() != n {
        return Err(CliError::validation(field, format!("grid has dimension {}, expected n = {n}", g.dim())));
    }
    Ok((path, g))
}

fn setup_of(raw: &RawConfig, n: usize) -> CliResult<Setup> {
    match (&raw.convention, raw.lambda) {
        (Some(_), Some(_)) => Err(CliError::Conflict("give either convention or lambda, not both".into())),
        (None, None) => Err(CliError::validation("convention", "is required (or give lambda)")),
        (Some(name), None) => Setup::from_preset(name, n).map_err(|_| {
            CliError::validation("convention", format!("'{name}' is unknown (expected paper-eq1 or paper-sol)"))
        }),
        (None, Some(l)) => {
            if l == 0.0 {
                return Err(CliError::validation("lambda", "must be nonzero"));
            }
            if !l.is_finite() {
                return Err(CliError::validation("lambda", "must be finite"));
            }
            Setup::new(n, l).map_err(|e| CliError::validation("lambda", e.to_string()))
        }
    }
}

fn phi_of(raw: &RawPhi, n: usize, base: &Path) -> CliResult<PhiSource> {
    match raw {
        RawPhi::Expression(src) => Expression::parse_indexed(src, "y", n)
            .map(PhiSource::Expression)
            .map_err(|e| CliError::validation("phi", e.to_string())),
        RawPhi::Builtin { builtin, alpha, beta, b, c } => {
            let need = |v: Option<f64>, key: &str| {
                v.ok_or_else(|| CliError::validation(format!("phi.{key}"), format!("is required for builtin '{builtin}'")))
            };
            let b = match builtin.as_str() {
                "zero" => Builtin::Zero { n },
                "quadratic" => Builtin::Quadratic { n, alpha: need(*alpha, "alpha")? },
                "quartic" => Builtin::Quartic { n, beta: need(*beta, "beta")? },
                "affine" => {
                    let b = b.clone().ok_or_else(|| CliError::validation("phi.b", "is required for builtin 'affine'"))?;
                    if b.len() != n {
                        return Err(CliError::validation("phi.b", format!("has {} entries, expected {n}", b.len())));
                    }
                    Builtin::Affine { b, c: c.unwrap_or(0.0) }
                }
                other => {
                    return Err(CliError::validation(
                        "phi.builtin",
                        format!("'{other}' is unknown (expected zero, quadratic, quartic or affine)"),
                    ))
                }
            };
            Ok(PhiSource::Builtin(b))
        }
        RawPhi::Grid { grid } => {
            let (path, field) = load_grid(base, grid, n, "phi.grid")?;
            Ok(PhiSource::Grid { path, field })
        }
    }
}

fn initial_of(raw: &RawInitial, n: usize, base: &Path) -> CliResult<InitialSource> {
    match raw {
        RawInitial::Expression(src) => Expression::parse_indexed(src, "x", n)
            .map(InitialSource::Expression)
            .map_err(|e| CliError::validation("initial_data", e.to_string())),
        RawInitial::Grid { grid } => {
            let (path, field) = load_grid(base, grid, n, "initial_data.grid")?;
            Ok(InitialSource::Grid { path, field })
        }
    }
}

fn query_of(raw: &RawQuery, n: usize) -> CliResult<Query> {
    let check_t = |t: f64| {
        if t.is_finite() {
            Ok(t)
        } else {
            Err(CliError::validation("query.t", "must be finite"))
        }
    };
    match (&raw.points, &raw.grid) {
        (Some(_), Some(_)) => Err(CliError::Conflict("query: give either points or grid, not both".into())),
        (None, None) => Err(CliError::validation("query", "needs points or grid")),
        (Some(points), None) => {
            if raw.t.is_some() {
                return Err(CliError::validation("query.t", "is only used with query.grid (points carry their own t)"));
            }
            if points.is_empty() {
                return Err(CliError::validation("query.points", "is empty"));
            }
            points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if p.len() != n + 1 {
                        return Err(CliError::validation(
                            format!("query.points[{i}]"),
                            format!("has {} entries, expected n + 1 = {} (x then t)", p.len(), n + 1),
                        ));
                    }
                    if p.iter().any(|v| !v.is_finite()) {
                        return Err(CliError::validation(format!("query.points[{i}]"), "must be finite"));
                    }
                    Ok((p[..n].to_vec(), p[n]))
                })
                .collect::<CliResult<_>>()
                .map(Query::Points)
        }
        (None, Some(grid)) => {
            let grid = grid.build(n, "query.grid")?;
            let t = raw.t.clone().ok_or_else(|| CliError::validation("query.t", "is required with query.grid"))?;
            if t.is_empty() {
                return Err(CliError::validation("query.t", "is empty"));
            }
            let t: Vec<f64> = t.into_iter().map(check_t).collect::<CliResult<_>>()?;
            if t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::validation("query.t", "must be strictly increasing"));
            }
            Ok(Query::Grid { grid, t })
        }
    }
}

fn solver_of(raw: &RawSolver, n: usize) -> CliResult<Options> {
    let mut o = Options::new(n);
    if let Some(v) = raw.newton_tol {
        o.newton_tol = positive(v, "solver.newton_tol")?;
    }
    if let Some(v) = raw.max_iter {
        o.max_iter = v;
    }
    if let Some(v) = raw.damping {
        o.damping = v;
    }
    if let Some(v) = raw.min_step {
        o.min_step = positive(v, "solver.min_step")?;
    }
    if let Some(v) = &raw.multistart_lower {
        o.multistart_lower = v.expand(n, "solver.multistart_lower")?;
    }
    if let Some(v) = &raw.multistart_upper {
        o.multistart_upper = v.expand(n, "solver.multistart_upper")?;
    }
    if let Some(v) = raw.multistart_count {
        o.multistart_count = v;
    }
    if let Some(v) = raw.dedup_tol {
        o.dedup_tol = positive(v, "solver.dedup_tol")?;
    }
    if let Some(v) = &raw.branch_policy {
        o.branch_policy = v
            .parse()
            .map_err(|_| CliError::validation("solver.branch_policy", format!("'{v}' is unknown (expected all, min-u or max-u)")))?;
    }
    if let Some(v) = raw.rank_tol {
        o.rank_tol = positive(v, "solver.rank_tol")?;
    }
    o.validate(n).map_err(|e| CliError::validation("solver", e.to_string()))?;
    Ok(o)
}

fn compare_of(raw: &RawCompare, n: usize, lambda: f64) -> CliResult<CompareConfig> {
    let sources = raw
        .sources
        .clone()
        .unwrap_or_default()
        .iter()
        .map(|s| {
            SourceKind::parse(s).ok_or_else(|| {
                CliError::validation(
                    "compare.sources",
                    format!("'{s}' is unknown (expected implicit, hopf, characteristics, lax-friedrichs or expression)"),
                )
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let expression = match &raw.expression {
        None => None,
        Some(src) => {
            let mut vars: Vec<String> = (1..=n).map(|a| format!("x{a}")).collect();
            vars.push("t".into());
            Some(Expression::parse(src, &vars).map_err(|e| CliError::validation("compare.expression", e.to_string()))?)
        }
    };
    let cfl = raw.cfl.unwrap_or(0.5);
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(CliError::validation("compare.cfl", "must lie in (0, 1)"));
    }
    let hopf_lattice = raw.hopf_lattice.as_ref().map(|g| g.build(n, "compare.hopf_lattice")).transpose()?;
    let hopf_policy = match &raw.hopf_policy {
        None if lambda > 0.0 => BranchPolicy::MaxU,
        None => BranchPolicy::MinU,
        Some(s) => match s.parse() {
            Ok(BranchPolicy::All) | Err(_) => {
                return Err(CliError::validation("compare.hopf_policy", format!("'{s}' is invalid (expected min-u or max-u)")))
            }
            Ok(p) => p,
        },
    };
    Ok(CompareConfig { sources, expression, cfl, hopf_lattice, hopf_refine: raw.hopf_refine.unwrap_or(2), hopf_policy })
}

fn formats_of(raw: &Option<Vec<String>>) -> CliResult<Formats> {
    let Some(list) = raw else {
        return Ok(Formats { csv: true, json: true, grid: false });
    };
    let mut f = Formats { csv: false, json: false, grid: false };
    for s in list {
        match s.as_str() {
            "csv" => f.csv = true,
            "json" => f.json = true,
            "grid" => f.grid = true,
            other => {
                return Err(CliError::validation("output.formats", format!("'{other}' is unknown (expected csv, json or grid)")))
            }
        }
    }
    Ok(f)
}

fn validate(raw: RawConfig, base: &Path) -> CliResult<RunConfig> {
    let n = raw.n.ok_or_else(|| CliError::validation("n", "is required"))?;
    if n == 0 {
        return Err(CliError::validation("n", "must be at least 1"));
    }
    let setup = setup_of(&raw, n)?;

    match (&raw.phi, &raw.initial_data, raw.derive_phi) {
        (Some(_), Some(_), false) => {
            return Err(CliError::Conflict(
                "phi and initial_data are both given; set derive_phi = true to declare that phi belongs to initial_data"
                    .into(),
            ))
        }
        (_, None, true) => return Err(CliError::validation("derive_phi", "requires initial_data")),
        (None, None, false) => return Err(CliError::validation("phi", "is required (or give initial_data)")),
        _ => {}
    }
    let phi = raw.phi.as_ref().map(|p| phi_of(p, n, base)).transpose()?;
    let initial_data = raw.initial_data.as_ref().map(|g| initial_of(g, n, base)).transpose()?;

    let initial_grid = match (&raw.initial_grid, &initial_data) {
        (Some(_), Some(InitialSource::Grid { .. })) => {
            return Err(CliError::Conflict("initial_grid cannot be combined with an initial_data grid file".into()))
        }
        (Some(g), _) => Some(g.build(n, "initial_grid")?),
        (None, Some(InitialSource::Grid { field, .. })) => Some(field.spec().clone()),
        (None, _) => None,
    };
    if matches!(initial_data, Some(InitialSource::Expression(_))) && initial_grid.is_none() {
        return Err(CliError::validation("initial_grid", "is required with an initial_data expression"));
    }
    let dual_grid = raw.dual_grid.as_ref().map(|g| g.build(n, "dual_grid")).transpose()?;

    let query = query_of(&raw.query, n)?;
    let solver = solver_of(&raw.solver, n)?;
    let verify_h = positive(raw.verify.h.unwrap_or(1e-3), "verify.h")?;
    let gates = Gates {
        residual: raw.gates.residual.map(|v| positive(v, "gates.residual")).transpose()?,
        compare_linf: raw.gates.compare_linf.map(|v| positive(v, "gates.compare_linf")).transpose()?,
    };
    let compare = compare_of(&raw.compare, n, setup.lambda())?;
    let output = OutputConfig {
        dir: resolve(base, raw.output.dir.as_deref().unwrap_or(Path::new("hodohj-out"))),
        formats: formats_of(&raw.output.formats)?,
    };
    Ok(RunConfig {
        setup,
        convention: raw.convention.clone(),
        phi,
        initial_data,
        derive_phi: raw.derive_phi,
        initial_grid,
        dual_grid,
        query,
        solver,
        verify_h,
        gates,
        compare,
        output,
    })
}
