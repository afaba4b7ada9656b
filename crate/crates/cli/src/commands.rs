//! The six batch pipelines behind `hodohj <command>`.

use std::collections::HashMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use hodohj_core::hodograph::{
    conjugate_grid, default_dual_box, h_general, phi_from_initial_data, transformed_pde_residual, x_of_y,
};
use hodohj_core::oracles::{
    characteristics_solve, compare_scattered, hopf_bruteforce, lax_friedrichs_solve, ComparisonReport,
};
use hodohj_core::solver::branch_field;
use hodohj_core::{
    multistart_branches, pde_residual_numeric, select_branch, sweep_grid, BranchPolicy, Branch, Error, Field,
    Grid, ScalarField, SharedField, Solution,
};
use rayon::prelude::*;

use crate::config::{InitialSource, PhiSource, Query, RunConfig, SourceKind};
use crate::error::{CliError, CliResult, EXIT_GATE};
use crate::report::{
    cell, coord_names, csv_text, finite, point_header, point_row, BranchRecord, ComparisonRecord, CsvTable,
    FieldSummary, GateRecord, PointRecord, ResidualStats, RunReport, TransformRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Transform,
    Conjugate,
    Compare,
    RankMap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Transform => "transform",
            Command::Conjugate => "conjugate",
            Command::Compare => "compare",
            Command::RankMap => "rank-map",
        }
    }
}

/// Exit status plus the report that was written.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: RunReport,
}

/// Runs `command` on a validated config and writes its artifacts to
/// `cfg.output.dir`.
pub fn dispatch(command: Command, cfg: &RunConfig) -> CliResult<Outcome> {
    let mut out = Artifacts::new(cfg)?;
    let mut report = match command {
        Command::Solve => solve(cfg, &mut out, false)?,
        Command::Verify => solve(cfg, &mut out, true)?,
        Command::Transform => transform(cfg, &mut out)?,
        Command::Conjugate => conjugate(cfg, &mut out)?,
        Command::Compare => compare(cfg, &mut out)?,
        Command::RankMap => rank_map(cfg, &mut out)?,
    };
    if !report.gates_passed() {
        report.status = "gate-failed".into();
        report.exit_code = EXIT_GATE;
    }
    if cfg.output.formats.json {
        out.names.push(format!("{}.json", command.name()));
        report.artifacts = out.names.clone();
        let path = out.path(&format!("{}.json", command.name()));
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    } else {
        report.artifacts = out.names.clone();
    }
    Ok(Outcome { exit_code: report.exit_code, report })
}

struct Artifacts<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Artifacts<'a> {
    fn new(cfg: &'a RunConfig) -> CliResult<Self> {
        let dir = cfg.output.dir.as_path();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Artifacts { dir, names: Vec::new() })
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.join(name)
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> CliResult<()> {
        let path = self.path(name);
        let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        table.write(BufWriter::new(f)).map_err(|e| CliError::io(&path, e))?;
        self.names.push(name.into());
        Ok(())
    }

    fn field_csv(&mut self, name: &str, field: &Field) -> CliResult<()> {
        let path = self.path(name);
        let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        field.write_csv(BufWriter::new(f))?;
        self.names.push(name.into());
        Ok(())
    }

    fn field_binary(&mut self, name: &str, field: &Field) -> CliResult<()> {
        field.save_binary(&self.path(name))?;
        self.names.push(name.into());
        Ok(())
    }
}

fn need(command: &str, what: &str) -> CliError {
    CliError::validation(what, format!("is required by the '{command}' command"))
}

/// Samples the configured initial data on its grid.
fn initial_field(cfg: &RunConfig) -> CliResult<Option<Field>> {
    match &cfg.initial_data {
        None => Ok(None),
        Some(InitialSource::Grid { field, .. }) => Ok(Some(field.clone())),
        Some(InitialSource::Expression(e)) => {
            let grid = cfg.initial_grid.clone().ok_or_else(|| need("initial_data", "initial_grid"))?;
            Ok(Some(Field::sample_field(grid, e)?))
        }
    }
}

fn dual_grid_for(cfg: &RunConfig, g: &Field) -> CliResult<Grid> {
    match &cfg.dual_grid {
        Some(d) => Ok(d.clone()),
        None => Ok(default_dual_box(g, g.spec().counts())?),
    }
}

fn phi_field(cfg: &RunConfig, command: &str) -> CliResult<SharedField<f64>> {
    Ok(match &cfg.phi {
        Some(PhiSource::Expression(e)) => Arc::new(e.clone()),
        Some(PhiSource::Builtin(b)) => Arc::new(b.clone()),
        Some(PhiSource::Grid { field, .. }) => Arc::new(field.clone()),
        None if cfg.derive_phi => {
            let g = initial_field(cfg)?.ok_or_else(|| need(command, "initial_data"))?;
            let dual = dual_grid_for(cfg, &g)?;
            Arc::new(phi_from_initial_data(&g, &dual)?)
        }
        None => return Err(need(command, "phi")),
    })
}

fn solution(cfg: &RunConfig, command: &str) -> CliResult<Solution> {
    Ok(Solution::new(cfg.setup, phi_field(cfg, command)?)?)
}

/// Branch reported in the per-point row.
fn row_policy(p: BranchPolicy) -> BranchPolicy {
    match p {
        BranchPolicy::All => BranchPolicy::MinU,
        p => p,
    }
}

fn branch_records(branches: &[Branch]) -> Vec<BranchRecord> {
    branches
        .iter()
        .map(|b| BranchRecord { y: b.y.clone(), u: b.u, rank: b.rank, det_j: b.det_j, iterations: b.iterations })
        .collect()
}

fn failed_point(x: &[f64], t: f64, branch_count: usize, caustic: bool, status: String) -> PointRecord {
    PointRecord {
        x: x.to_vec(),
        t,
        u: None,
        y: None,
        rank: None,
        branch_count,
        det_j: None,
        residual: None,
        caustic,
        status,
        branches: Vec::new(),
    }
}

fn branch_residual(sol: &Solution, cfg: &RunConfig, x: &[f64], t: f64, b: &Branch) -> Result<f64, Error> {
    let u = branch_field(sol, b.y.clone(), &cfg.solver);
    pde_residual_numeric(u, sol.setup(), x, t, cfg.verify_h)
}

/// Record for a selected branch; the residual is always attempted.
fn branch_point(
    sol: &Solution,
    cfg: &RunConfig,
    x: &[f64],
    t: f64,
    b: &Branch,
    all: &[Branch],
    caustic: bool,
) -> PointRecord {
    let (residual, status) = match branch_residual(sol, cfg, x, t, b) {
        Ok(r) => (finite(r), "ok".to_string()),
        Err(e) => (None, format!("residual unavailable: {e}")),
    };
    PointRecord {
        x: x.to_vec(),
        t,
        u: finite(b.u),
        y: Some(b.y.clone()),
        rank: Some(b.rank),
        branch_count: all.len(),
        det_j: finite(b.det_j),
        residual,
        caustic,
        status,
        branches: if cfg.solver.branch_policy == BranchPolicy::All { branch_records(all) } else { Vec::new() },
    }
}

fn solve_point(sol: &Solution, cfg: &RunConfig, x: &[f64], t: f64) -> PointRecord {
    let set = match multistart_branches(sol, x, t, &cfg.solver) {
        Ok(s) => s,
        Err(e) => return failed_point(x, t, 0, false, format!("error: {e}")),
    };
    match select_branch(&set, row_policy(cfg.solver.branch_policy)) {
        Ok(b) => branch_point(sol, cfg, x, t, b, &set.branches, b.hess_u.is_singular()),
        Err(_) => failed_point(
            x,
            t,
            0,
            set.singular_failures > 0,
            format!(
                "no branch converged ({} singular, {} domain, {} not converged)",
                set.singular_failures, set.domain_failures, set.not_converged
            ),
        ),
    }
}

fn point_table(points: &[PointRecord], n: usize) -> CsvTable {
    let mut table = CsvTable::new(point_header(n));
    table.rows = points.iter().map(|p| point_row(p, n)).collect();
    table
}

/// Writes one GridField per time slice when every node has a value.
fn slice_fields(
    out: &mut Artifacts,
    report: &mut RunReport,
    grid: &Grid,
    t: &[f64],
    stem: &str,
    value: impl Fn(&PointRecord) -> Option<f64>,
) -> CliResult<()> {
    let m = grid.len();
    for (i, &s) in t.iter().enumerate() {
        let slice = &report.points[i * m..(i + 1) * m];
        let values: Option<Vec<f64>> = slice.iter().map(&value).collect();
        let Some(values) = values else {
            continue;
        };
        let field = Field::new(grid.clone(), values)?;
        let name = format!("{stem}_t{i}.bin");
        out.field_binary(&name, &field)?;
        report.fields.push(summary(&format!("{stem} at t = {s}"), &field));
    }
    Ok(())
}

fn summary(name: &str, f: &Field) -> FieldSummary {
    let (min, max) = f.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    FieldSummary {
        name: name.into(),
        counts: f.spec().counts().to_vec(),
        lower: f.spec().lower().to_vec(),
        upper: f.spec().upper().to_vec(),
        min,
        max,
    }
}

fn new_report(cfg: &RunConfig, command: Command) -> RunReport {
    RunReport::new(command.name(), cfg.n(), cfg.lambda(), cfg.convention.clone(), cfg.query.len())
}

fn solve(cfg: &RunConfig, out: &mut Artifacts, verify: bool) -> CliResult<RunReport> {
    let command = if verify { Command::Verify } else { Command::Solve };
    let sol = solution(cfg, command.name())?;
    let mut report = new_report(cfg, command);
    let pairs = cfg.query.pairs();
    report.points = pairs.par_iter().map(|(x, t)| solve_point(&sol, cfg, x, *t)).collect();
    report.failed_points = report.points.iter().filter(|p| p.u.is_none()).count();
    report.residual_stats = ResidualStats::of(report.points.iter().filter_map(|p| p.residual));
    if cfg.output.formats.csv {
        out.csv(&format!("{}.csv", command.name()), &point_table(&report.points, cfg.n()))?;
    }
    if cfg.output.formats.grid {
        if let Query::Grid { grid, t } = &cfg.query {
            slice_fields(out, &mut report, grid, t, "u", |p| p.u)?;
        }
    }
    if verify {
        if let Some(threshold) = cfg.gates.residual {
            let missing = report.points.iter().filter(|p| p.residual.is_none()).count();
            let value = report.residual_stats.as_ref().map(|s| s.max_abs);
            let passed = missing == 0 && value.is_some_and(|v| v <= threshold);
            let detail = if missing > 0 { format!("{missing} point(s) without a residual") } else { String::new() };
            report.gates.push(GateRecord { name: "residual".into(), threshold, value, passed, detail });
        }
    }
    Ok(report)
}

fn transform_point(sol: &Solution, cfg: &RunConfig, x: &[f64], t: f64) -> TransformRecord {
    let mut rec = TransformRecord {
        x: x.to_vec(),
        t,
        y: None,
        h: None,
        h_general: None,
        transformed_residual: None,
        inverse_error: None,
        status: "ok".into(),
    };
    let branch = multistart_branches(sol, x, t, &cfg.solver)
        .and_then(|set| select_branch(&set, row_policy(cfg.solver.branch_policy)).cloned());
    let b = match branch {
        Ok(b) => b,
        Err(e) => {
            rec.status = format!("no branch: {e}");
            return rec;
        }
    };
    let xy: f64 = x.iter().zip(&b.y).map(|(p, q)| p * q).sum();
    rec.h = finite(xy - b.u);
    let rest = || -> Result<(f64, f64, f64), Error> {
        let hg = h_general(sol, t, &b.y)?;
        let r = transformed_pde_residual(sol, t, &b.y, cfg.verify_h)?;
        let xb = x_of_y(sol, t, &b.y)?;
        let err = x.iter().zip(&xb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        Ok((hg, r, err))
    };
    match rest() {
        Ok((hg, r, err)) => {
            rec.h_general = finite(hg);
            rec.transformed_residual = finite(r);
            rec.inverse_error = finite(err);
        }
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec.y = Some(b.y);
    rec
}

fn transform(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<RunReport> {
    let sol = solution(cfg, "transform")?;
    let mut report = new_report(cfg, Command::Transform);
    let pairs = cfg.query.pairs();
    report.transforms = pairs.par_iter().map(|(x, t)| transform_point(&sol, cfg, x, *t)).collect();
    report.failed_points = report.transforms.iter().filter(|r| r.status != "ok").count();
    report.transformed_residual_stats =
        ResidualStats::of(report.transforms.iter().filter_map(|r| r.transformed_residual));
    if cfg.output.formats.csv {
        let n = cfg.n();
        let header = coord_names("x", n)
            .chain(["t".to_string()])
            .chain(coord_names("y", n))
            .chain(["H", "H_general", "transformed_residual", "inverse_error", "status"].map(String::from))
            .collect();
        let mut table = CsvTable::new(header);
        for r in &report.transforms {
            let mut row: Vec<String> = r.x.iter().map(|&v| cell(Some(v))).collect();
            row.push(cell(Some(r.t)));
            match &r.y {
                Some(y) => row.extend(y.iter().map(|&v| cell(Some(v)))),
                None => row.extend(std::iter::repeat_n("nan".to_string(), n)),
            }
            row.extend([cell(r.h), cell(r.h_general), cell(r.transformed_residual), cell(r.inverse_error)]);
            row.push(csv_text(&r.status));
            table.rows.push(row);
        }
        out.csv("transform.csv", &table)?;
    }
    Ok(report)
}

fn conjugate(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<RunReport> {
    let g = initial_field(cfg)?.ok_or_else(|| need("conjugate", "initial_data"))?;
    let dual = dual_grid_for(cfg, &g)?;
    let conj = conjugate_grid(&g, &dual)?;
    let phi = conj.map(|v| -v)?;
    let mut report = new_report(cfg, Command::Conjugate);
    report.query_count = 0;
    report.fields = vec![summary("initial_data", &g), summary("conjugate", &conj), summary("phi", &phi)];
    if cfg.output.formats.csv {
        out.field_csv("conjugate.csv", &conj)?;
        out.field_csv("phi.csv", &phi)?;
    }
    if cfg.output.formats.grid {
        out.field_binary("conjugate.bin", &conj)?;
        out.field_binary("phi.bin", &phi)?;
    }
    Ok(report)
}

/// A source that can be evaluated at arbitrary `(x, t)`.
enum Evaluator {
    Implicit(Solution),
    Hopf { sol: Solution, lattice: Grid },
    LaxFriedrichs(HashMap<u64, Field>),
    Expression(hodohj_core::Expression),
}

impl Evaluator {
    fn eval(&self, cfg: &RunConfig, x: &[f64], t: f64) -> Result<f64, Error> {
        match self {
            Evaluator::Implicit(sol) => {
                let set = multistart_branches(sol, x, t, &cfg.solver)?;
                Ok(select_branch(&set, row_policy(cfg.solver.branch_policy))?.u)
            }
            Evaluator::Hopf { sol, lattice } => {
                Ok(hopf_bruteforce(sol, x, t, lattice, cfg.compare.hopf_refine, cfg.compare.hopf_policy)?.u)
            }
            Evaluator::LaxFriedrichs(fields) => fields
                .get(&t.to_bits())
                .ok_or_else(|| Error::InvalidInput(format!("no grid solution at t = {t}")))?
                .interpolate(x),
            Evaluator::Expression(e) => {
                let mut p = x.to_vec();
                p.push(t);
                Ok(e.eval(&p)?)
            }
        }
    }
}

fn default_hopf_lattice(cfg: &RunConfig) -> CliResult<Grid> {
    let n = cfg.n();
    let count = match n {
        1 => 401,
        2 => 61,
        _ => 15,
    };
    Ok(Grid::new(cfg.solver.multistart_lower.clone(), cfg.solver.multistart_upper.clone(), vec![count; n])?)
}

fn evaluator(cfg: &RunConfig, kind: SourceKind, times: &[f64]) -> CliResult<Evaluator> {
    Ok(match kind {
        SourceKind::Implicit => Evaluator::Implicit(solution(cfg, "compare")?),
        SourceKind::Hopf => {
            let lattice = match &cfg.compare.hopf_lattice {
                Some(l) => l.clone(),
                None => default_hopf_lattice(cfg)?,
            };
            Evaluator::Hopf { sol: solution(cfg, "compare")?, lattice }
        }
        SourceKind::LaxFriedrichs => {
            let g = initial_field(cfg)?.ok_or_else(|| need("compare", "initial_data"))?;
            let solved: Vec<(u64, Field)> = times
                .par_iter()
                .map(|&t| {
                    let f = if t == 0.0 { g.clone() } else { lax_friedrichs_solve(&g, &cfg.setup, t, cfg.compare.cfl)? };
                    Ok((t.to_bits(), f))
                })
                .collect::<Result<_, Error>>()?;
            Evaluator::LaxFriedrichs(solved.into_iter().collect())
        }
        SourceKind::Expression => Evaluator::Expression(
            cfg.compare.expression.clone().ok_or_else(|| need("compare with an expression source", "compare.expression"))?,
        ),
        SourceKind::Characteristics => unreachable!("characteristics are sampled, not evaluated"),
    })
}

/// Ray endpoints at time `t` that land inside the query box (all of them
/// for point queries).
fn ray_samples(cfg: &RunConfig, g: &Field, t: f64) -> CliResult<Vec<(Vec<f64>, f64)>> {
    let grid = cfg.initial_grid.clone().ok_or_else(|| need("compare", "initial_grid"))?;
    let rays = characteristics_solve(g as &dyn ScalarField<f64>, &cfg.setup, &grid, t)?;
    Ok(rays
        .into_iter()
        .filter(|r| match &cfg.query {
            Query::Grid { grid, .. } => grid.contains(&r.x),
            Query::Points(_) => true,
        })
        .map(|r| (r.x, r.u))
        .collect())
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

fn compare(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<RunReport> {
    let kinds = &cfg.compare.sources;
    if kinds.len() != 2 {
        return Err(CliError::validation("compare.sources", "needs exactly two sources"));
    }
    if kinds[0] == SourceKind::Characteristics && kinds[1] == SourceKind::Characteristics {
        return Err(CliError::validation("compare.sources", "needs two different sources"));
    }
    let times = cfg.query.times();
    // characteristics provide the sample locations when present
    let (sampled, evaluated) = match kinds.iter().position(|k| *k == SourceKind::Characteristics) {
        Some(i) => (Some(kinds[i]), vec![kinds[1 - i]]),
        None => (None, kinds.clone()),
    };
    let evals: Vec<Evaluator> = evaluated.iter().map(|&k| evaluator(cfg, k, &times)).collect::<CliResult<_>>()?;
    let g = if sampled.is_some() {
        Some(initial_field(cfg)?.ok_or_else(|| need("compare", "initial_data"))?)
    } else {
        None
    };
    let all_pairs = cfg.query.pairs();
    let mut report = new_report(cfg, Command::Compare);
    let n = cfg.n();
    let mut table = CsvTable::new(
        coord_names("x", n)
            .chain(["t".to_string(), kinds[0].name().to_string(), kinds[1].name().to_string(), "abs_diff".into()])
            .collect(),
    );
    let mut query_count = 0;
    for &t in &times {
        // (x, value from the first source, value from the second)
        #[allow(clippy::type_complexity)]
        let rows: Vec<(Vec<f64>, Result<f64, String>, Result<f64, String>)> = match &g {
            Some(g) => {
                let samples = ray_samples(cfg, g, t)?;
                samples
                    .into_par_iter()
                    .map(|(x, u)| {
                        let other = evals[0].eval(cfg, &x, t).map_err(|e| e.to_string());
                        if kinds[0] == SourceKind::Characteristics {
                            (x, Ok(u), other)
                        } else {
                            (x, other, Ok(u))
                        }
                    })
                    .collect()
            }
            None => all_pairs
                .par_iter()
                .filter(|(_, s)| *s == t)
                .map(|(x, _)| {
                    let a = evals[0].eval(cfg, x, t).map_err(|e| e.to_string());
                    let b = evals[1].eval(cfg, x, t).map_err(|e| e.to_string());
                    (x.clone(), a, b)
                })
                .collect(),
        };
        query_count += rows.len();
        let lookup: HashMap<Vec<u64>, Result<f64, String>> = rows.iter().map(|(x, a, _)| (key(x), a.clone())).collect();
        let samples: Vec<(Vec<f64>, f64)> =
            rows.iter().filter_map(|(x, _, b)| b.as_ref().ok().map(|&v| (x.clone(), v))).collect();
        let b_failures: Vec<&String> = rows.iter().filter_map(|(_, _, b)| b.as_ref().err()).collect();
        let r: ComparisonReport = compare_scattered(
            |x: &[f64]| match lookup.get(&key(x)) {
                Some(Ok(v)) => Ok(*v),
                Some(Err(e)) => Err(Error::InvalidInput(e.clone())),
                None => Err(Error::InvalidInput("missing value".into())),
            },
            &samples,
        );
        let mut notes = r.notes.clone();
        if let Some(first) = b_failures.first() {
            if !notes.is_empty() {
                notes.push_str("; ");
            }
            notes.push_str(&format!(
                "{} point(s) failed in {}; first: {first}",
                b_failures.len(),
                kinds[1].name()
            ));
        }
        report.comparisons.push(ComparisonRecord {
            a: kinds[0].name().into(),
            b: kinds[1].name().into(),
            t,
            linf: r.linf,
            rms: r.l2,
            points_compared: r.points_compared,
            worst_point: r.worst_point,
            notes,
        });
        for (x, a, b) in &rows {
            let a = a.as_ref().ok().copied();
            let b = b.as_ref().ok().copied();
            let d = a.zip(b).map(|(a, b)| (a - b).abs());
            let mut row: Vec<String> = x.iter().map(|&v| cell(Some(v))).collect();
            row.extend([cell(Some(t)), cell(a), cell(b), cell(d)]);
            table.rows.push(row);
        }
    }
    report.query_count = query_count;
    report.failed_points = query_count - report.comparisons.iter().map(|c| c.points_compared).sum::<usize>();
    if cfg.output.formats.csv {
        out.csv("compare.csv", &table)?;
    }
    if let Some(threshold) = cfg.gates.compare_linf {
        let value = report.comparisons.iter().map(|c| c.linf).fold(0.0, f64::max);
        let compared: usize = report.comparisons.iter().map(|c| c.points_compared).sum();
        let passed = compared > 0 && report.failed_points == 0 && value <= threshold;
        let detail = match (compared, report.failed_points) {
            (0, _) => "no points compared".to_string(),
            (_, 0) => String::new(),
            (_, f) => format!("{f} point(s) could not be compared"),
        };
        report.gates.push(GateRecord { name: "compare_linf".into(), threshold, value: Some(value), passed, detail });
    }
    Ok(report)
}

fn rank_map(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<RunReport> {
    let Query::Grid { grid, t } = &cfg.query else {
        return Err(CliError::validation("query.grid", "is required by the 'rank-map' command"));
    };
    let sol = solution(cfg, "rank-map")?;
    let table = sweep_grid(&sol, grid, t, &cfg.solver)?;
    let mut report = new_report(cfg, Command::RankMap);
    let policy = row_policy(cfg.solver.branch_policy);
    report.points = table
        .points
        .par_iter()
        .map(|p| match select_branch(&p.set, policy) {
            Ok(b) => branch_point(&sol, cfg, p.x(), p.t(), b, &p.set.branches, p.caustic),
            Err(_) => failed_point(
                p.x(),
                p.t(),
                0,
                p.caustic,
                p.failure.clone().unwrap_or_else(|| "no branch".into()),
            ),
        })
        .collect();
    report.failed_points = report.points.iter().filter(|p| p.u.is_none()).count();
    report.residual_stats = ResidualStats::of(report.points.iter().filter_map(|p| p.residual));
    let mut caustic_t: Vec<f64> = Vec::new();
    for (i, &s) in t.iter().enumerate() {
        if (0..grid.len()).any(|k| table.at(i, k).caustic) {
            caustic_t.push(s);
        }
    }
    report.caustic_t = Some(caustic_t);
    let mut hist = vec![0usize; cfg.n() + 1];
    for r in report.points.iter().filter_map(|p| p.rank) {
        hist[r] += 1;
    }
    report.rank_histogram = Some(hist);
    if cfg.output.formats.csv {
        out.csv("rank-map.csv", &point_table(&report.points, cfg.n()))?;
    }
    if cfg.output.formats.grid {
        slice_fields(out, &mut report, grid, t, "rank", |p| Some(p.rank.map_or(-1.0, |r| r as f64)))?;
        slice_fields(out, &mut report, grid, t, "u", |p| p.u)?;
    }
    Ok(report)
}
