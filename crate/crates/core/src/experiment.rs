//! Experiment driver: configuration, single solves, convergence studies,
//! wave-number sweeps and the CSV record format.

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::analysis::{
    compute_errors, interpolation_errors, stability_metrics, ErrorReport, StabilityReport,
};
use crate::analytic::{
    default_plane_wave_direction, multipole_sine_solution, plane_wave_solution,
    ManufacturedSolution,
};
use crate::edge_fem::{EdgeSpace, FeFunction};
use crate::error::{Error, Result};
use crate::forms::{
    assemble_rhs, assemble_system, fmt_complex, paper_gamma, parse_complex, Method, ProblemParams,
};
use crate::geometry::Vec3;
use crate::linalg::{
    solve_gmres, DirectOptions, DirectSolver, GmresOptions, SolveReport, SolverKind,
};
use crate::mesh::{BoxDomain, Mesh};
use crate::sparse::CsrMatrix;

/// Runs above this many unknowns need `allow_large = true`.
pub const DESK_SCALE_DOFS: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Paper,
    Zero,
    Values([C64; 3]),
}

impl GammaSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(GammaSpec::Paper),
            "zero" => Ok(GammaSpec::Zero),
            _ => {
                let parts: Vec<&str> = s.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Config(format!(
                        "gamma needs three values or 'paper'/'zero', got '{s}'"
                    )));
                }
                let mut g = [C64::new(0.0, 0.0); 3];
                for (gi, p) in g.iter_mut().zip(parts) {
                    *gi = parse_complex(p)?;
                }
                Ok(GammaSpec::Values(g))
            }
        }
    }

    pub fn values(&self) -> [C64; 3] {
        match self {
            GammaSpec::Paper => paper_gamma(),
            GammaSpec::Zero => [C64::new(0.0, 0.0); 3],
            GammaSpec::Values(g) => *g,
        }
    }

    fn echo(&self) -> String {
        let v = self.values().map(fmt_complex).join(",");
        match self {
            GammaSpec::Paper => format!("paper({v})"),
            GammaSpec::Zero => format!("zero({v})"),
            GammaSpec::Values(_) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    MultipoleSine,
    PlaneWave,
}

impl SolutionKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multipole-sine" | "multipole" => Ok(Self::MultipoleSine),
            "plane-wave" | "planewave" => Ok(Self::PlaneWave),
            other => Err(Error::Config(format!("unknown solution '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::MultipoleSine => "multipole-sine",
            Self::PlaneWave => "plane-wave",
        }
    }

    pub fn build(self, kappa: f64, lambda: f64) -> Result<ManufacturedSolution> {
        let sol = match self {
            Self::MultipoleSine => multipole_sine_solution(kappa)?,
            Self::PlaneWave => {
                let (d, p) = default_plane_wave_direction();
                plane_wave_solution(kappa, d, p)?
            }
        };
        Ok(sol.with_lambda(lambda))
    }
}

/// Effective settings of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub kappa: f64,
    pub lambda: f64,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub kappa_list: Vec<f64>,
    pub kappa_h0: f64,
    pub methods: Vec<Method>,
    pub gamma: GammaSpec,
    /// γ index for each face class (axis-aligned, diagonal-2d, diagonal-3d).
    pub class_map: [usize; 3],
    pub solution: SolutionKind,
    pub solver: SolverKind,
    pub quad_degree: usize,
    pub box_lo: [f64; 3],
    pub box_hi: [f64; 3],
    pub out: Option<PathBuf>,
    pub vtk: Option<PathBuf>,
    pub matrix_out: Option<PathBuf>,
    pub threads: usize,
    pub allow_large: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            kappa: 5.0,
            lambda: 1.0,
            n: 8,
            n_list: vec![4, 6, 8, 12, 16],
            kappa_list: vec![4.0, 8.0, 12.0, 16.0, 20.0],
            kappa_h0: 1.0,
            methods: vec![Method::Eem],
            gamma: GammaSpec::Paper,
            class_map: [0, 1, 2],
            solution: SolutionKind::MultipoleSine,
            solver: SolverKind::Direct,
            quad_degree: 6,
            box_lo: [1.0; 3],
            box_hi: [2.0; 3],
            out: None,
            vtk: None,
            matrix_out: None,
            threads: 0,
            allow_large: false,
        }
    }
}

/// Sections recognised in config files besides the subcommand names.
const COMMON_SECTION: &str = "common";
pub const SUBCOMMANDS: [&str; 5] = ["solve", "convergence", "ksweep", "validate", "mesh-info"];

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad {key} entry '{s}'")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: '{v}'")))
}

fn parse_triple(key: &str, v: &str) -> Result<[f64; 3]> {
    let l: Vec<f64> = parse_list(key, v)?;
    match l.as_slice() {
        [a] => Ok([*a; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(Error::Config(format!("{key} needs 1 or 3 values"))),
    }
}

fn fmt_list<T: ToString>(l: &[T]) -> String {
    l.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Config {
    /// Defaults for a subcommand.
    pub fn for_command(cmd: &str) -> Self {
        let mut c = Self::default();
        if matches!(cmd, "convergence" | "ksweep") {
            c.methods = vec![Method::Eem, Method::Cip];
        }
        c
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "kappa" => self.kappa = parse_one(&key, v)?,
            "lambda" => self.lambda = parse_one(&key, v)?,
            "n" => self.n = parse_one(&key, v)?,
            "n_list" => self.n_list = parse_list(&key, v)?,
            "kappa_list" => self.kappa_list = parse_list(&key, v)?,
            "kappa_h0" => self.kappa_h0 = parse_one(&key, v)?,
            "method" | "methods" => {
                self.methods = v
                    .split(',')
                    .map(|m| Method::parse(m.trim()))
                    .collect::<Result<_>>()?
            }
            "gamma" => self.gamma = GammaSpec::parse(v)?,
            "class_map" => {
                let l: Vec<usize> = parse_list(&key, v)?;
                self.class_map = l
                    .try_into()
                    .map_err(|_| Error::Config("class_map needs three indices".into()))?;
            }
            "solution" => self.solution = SolutionKind::parse(v)?,
            "solver" => self.solver = SolverKind::parse(v)?,
            "quad_degree" => self.quad_degree = parse_one(&key, v)?,
            "box_lo" => self.box_lo = parse_triple(&key, v)?,
            "box_hi" => self.box_hi = parse_triple(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "vtk" => self.vtk = Some(PathBuf::from(v)),
            "matrix_out" => self.matrix_out = Some(PathBuf::from(v)),
            "threads" => self.threads = parse_one(&key, v)?,
            "allow_large" => self.allow_large = parse_one(&key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Apply a config file: keys before any section header or under
    /// `[common]` first, then those under `[cmd]`.
    pub fn apply_file_text(&mut self, text: &str, cmd: &str) -> Result<()> {
        let mut common = Vec::new();
        let mut specific = Vec::new();
        let mut section = COMMON_SECTION.to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if name != COMMON_SECTION && !SUBCOMMANDS.contains(&name) {
                    return Err(Error::Config(format!(
                        "line {}: unknown section [{name}]",
                        lineno + 1
                    )));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            if section == COMMON_SECTION {
                common.push((k.to_string(), v.to_string()));
            } else if section == cmd {
                specific.push((k.to_string(), v.to_string()));
            }
        }
        for (k, v) in common.iter().chain(&specific) {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path, cmd: &str) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_file_text(&text, cmd)
    }

    /// Defaults, then the file, then `overrides` (CLI flags).
    pub fn resolve(cmd: &str, file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut c = Self::for_command(cmd);
        if let Some(p) = file {
            c.apply_file(p, cmd)?;
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_list.contains(&0) {
            return Err(Error::Config("mesh sizes must be positive".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_list must be strictly ascending".into()));
        }
        if !(self.kappa_h0 > 0.0) {
            return Err(Error::Config("kappa_h0 must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no method selected".into()));
        }
        if self.quad_degree == 0 {
            return Err(Error::Config("quad_degree must be positive".into()));
        }
        self.domain()?;
        self.params(self.kappa)?;
        Ok(())
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        BoxDomain::new(self.box_lo, self.box_hi)
    }

    pub fn params(&self, kappa: f64) -> Result<ProblemParams> {
        ProblemParams::new(kappa, self.lambda)?
            .with_gamma(self.gamma.values())
            .with_class_map(self.class_map)
    }

    /// One line `key=value ...` with every setting, in a fixed order.
    pub fn echo(&self) -> String {
        let p = |o: &Option<PathBuf>| {
            o.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into())
        };
        let mut s = String::new();
        let _ = write!(
            s,
            "kappa={} lambda={} n={} n_list={} kappa_list={} kappa_h0={} methods={} gamma={} class_map={} \
             solution={} solver={} quad_degree={} box_lo={} box_hi={} out={} vtk={} matrix_out={} threads={} allow_large={}",
            self.kappa,
            self.lambda,
            self.n,
            fmt_list(&self.n_list),
            fmt_list(&self.kappa_list),
            self.kappa_h0,
            self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
            self.gamma.echo(),
            fmt_list(&self.class_map),
            self.solution.name(),
            self.solver.name(),
            self.quad_degree,
            fmt_list(&self.box_lo),
            fmt_list(&self.box_hi),
            p(&self.out),
            p(&self.vtk),
            p(&self.matrix_out),
            self.threads,
            self.allow_large,
        );
        s
    }
}

/// One row of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub method: Method,
    pub kappa: f64,
    pub n: usize,
    pub h0: f64,
    pub h: f64,
    pub dofs: usize,
    pub rel_l2: f64,
    pub rel_hcurl: f64,
    pub rel_energy: f64,
    pub interp_rel_hcurl: f64,
    pub interp_rel_l2: f64,
    pub stability_ratio: f64,
    pub solver: String,
    pub iterations: usize,
    pub residual: f64,
    pub wall_time: f64,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "method",
    "kappa",
    "n",
    "h0",
    "h",
    "dofs",
    "rel_l2",
    "rel_hcurl",
    "rel_energy",
    "interp_rel_hcurl",
    "interp_rel_l2",
    "stability_ratio",
    "solver",
    "iterations",
    "residual",
    "wall_time",
];

impl ExperimentRecord {
    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e},{:.3}",
            self.method.name(),
            self.kappa,
            self.n,
            self.h0,
            self.h,
            self.dofs,
            self.rel_l2,
            self.rel_hcurl,
            self.rel_energy,
            self.interp_rel_hcurl,
            self.interp_rel_l2,
            self.stability_ratio,
            self.solver,
            self.iterations,
            self.residual,
            self.wall_time,
        )
    }

    /// Parse a row written by [`Self::to_csv`].
    pub fn from_csv(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(Error::Config(format!(
                "expected {} columns, got {}",
                CSV_COLUMNS.len(),
                f.len()
            )));
        }
        let num = |i: usize| parse_one::<f64>(CSV_COLUMNS[i], f[i]);
        let int = |i: usize| parse_one::<usize>(CSV_COLUMNS[i], f[i]);
        Ok(Self {
            method: Method::parse(f[0])?,
            kappa: num(1)?,
            n: int(2)?,
            h0: num(3)?,
            h: num(4)?,
            dofs: int(5)?,
            rel_l2: num(6)?,
            rel_hcurl: num(7)?,
            rel_energy: num(8)?,
            interp_rel_hcurl: num(9)?,
            interp_rel_l2: num(10)?,
            stability_ratio: num(11)?,
            solver: f[12].to_string(),
            iterations: int(13)?,
            residual: num(14)?,
            wall_time: num(15)?,
        })
    }
}

/// Appending CSV writer: one header per file, one config comment per run.
pub struct CsvSink {
    file: File,
}

impl CsvSink {
    pub fn open(path: &Path, config_echo: &str) -> Result<Self> {
        let header = ExperimentRecord::csv_header();
        let existing = match File::open(path) {
            Ok(f) => BufReader::new(f)
                .lines()
                .map_while(|l| l.ok())
                .find(|l| !l.trim().is_empty() && !l.starts_with('#')),
            Err(_) => None,
        };
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        match existing {
            Some(h) if h.trim() == header => {}
            Some(h) => {
                return Err(Error::Config(format!(
                    "{} has a different header: '{h}'",
                    path.display()
                )));
            }
            None => writeln!(file, "{header}")?,
        }
        writeln!(file, "# config: {config_echo}")?;
        Ok(Self { file })
    }

    pub fn write(&mut self, r: &ExperimentRecord) -> Result<()> {
        writeln!(self.file, "{}", r.to_csv())?;
        self.file.flush()?;
        Ok(())
    }
}

/// Read every record of a CSV file, skipping the header and comments.
pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| {
            !l.trim().is_empty()
                && !l.starts_with('#')
                && l.trim() != ExperimentRecord::csv_header()
        })
        .map(ExperimentRecord::from_csv)
        .collect()
}

/// Rough unknown count of a cub6 mesh with `n` cells per axis.
pub fn estimated_dofs(n: usize) -> usize {
    let m = n + 1;
    // Edges: 3 axis directions, 3 face diagonals, 1 cube diagonal.
    2 * (3 * n * m * m + 3 * n * n * m + n * n * n)
}

/// Everything produced by one solve.
pub struct CaseOutput {
    pub record: ExperimentRecord,
    pub space: EdgeSpace,
    pub params: ProblemParams,
    pub solution: ManufacturedSolution,
    pub matrix: CsrMatrix,
    pub rhs: Vec<C64>,
    pub eh: FeFunction,
    pub errors: ErrorReport,
    pub interpolation: ErrorReport,
    pub stability: StabilityReport,
    pub solve: SolveReport,
}

/// Solve `a x = b` with the configured solver. The direct path uses nested
/// dissection on the DOF locations.
pub fn solve_system(
    space: &EdgeSpace,
    a: &CsrMatrix,
    b: &[C64],
    kind: SolverKind,
) -> Result<(Vec<C64>, SolveReport)> {
    match kind {
        SolverKind::Direct => {
            let coords = space.dof_points();
            DirectSolver::new(
                a,
                &DirectOptions {
                    coords: Some(&coords),
                    ..Default::default()
                },
            )?
            .solve(b)
        }
        SolverKind::Gmres => solve_gmres(a, b, &GmresOptions::default()),
    }
}

pub fn build_space(cfg: &Config, n: usize) -> Result<EdgeSpace> {
    let dofs = estimated_dofs(n);
    if dofs > DESK_SCALE_DOFS {
        if !cfg.allow_large {
            return Err(Error::Config(format!(
                "n = {n} gives about {dofs} unknowns, above the desk-scale cap {DESK_SCALE_DOFS}; set allow_large = true"
            )));
        }
        log::warn!("n = {n}: about {dofs} unknowns, beyond desk scale");
    }
    EdgeSpace::new(Mesh::cub6(n, cfg.domain()?)?)
}

/// Assemble, solve and post-process one `(method, κ, n)` case.
pub fn run_case(cfg: &Config, method: Method, kappa: f64, n: usize) -> Result<CaseOutput> {
    let t0 = Instant::now();
    let space = build_space(cfg, n)?;
    let params = cfg.params(kappa)?;
    if method == Method::Cip {
        for w in params.penalty_warnings() {
            log::debug!("{w}");
        }
    }
    let solution = cfg.solution.build(kappa, cfg.lambda)?;
    let matrix = assemble_system(&space, &params, method)?;
    let rhs = assemble_rhs(
        &space,
        &*solution.f,
        &|x: &Vec3, nu: &Vec3| solution.g_at(x, nu),
        cfg.quad_degree,
    );
    let (x, solve) = solve_system(&space, &matrix, &rhs, cfg.solver)?;
    let eh = FeFunction::from_coeffs(x);
    let errors = compute_errors(&space, &eh, &solution, &params, method, cfg.quad_degree)?;
    let interpolation = interpolation_errors(&space, &solution, &params, method, cfg.quad_degree)?;
    let stability = stability_metrics(&space, &eh, &solution, &params, method, cfg.quad_degree)?;
    let record = ExperimentRecord {
        method,
        kappa,
        n,
        h0: space.mesh.h0,
        h: space.mesh.h,
        dofs: space.num_dofs(),
        rel_l2: errors.rel_l2,
        rel_hcurl: errors.rel_hcurl,
        rel_energy: errors.rel_energy,
        interp_rel_hcurl: interpolation.rel_hcurl,
        interp_rel_l2: interpolation.rel_l2,
        stability_ratio: stability.ratio,
        solver: format!("{}/{}", solve.method.name(), solve.factorization),
        iterations: solve.iterations,
        residual: solve.relative_residual,
        wall_time: t0.elapsed().as_secs_f64(),
    };
    log::info!(
        "{} kappa={} n={} dofs={} rel_hcurl={:.4e} rel_l2={:.4e} residual={:.2e} ({:.1}s)",
        method.name(),
        kappa,
        n,
        record.dofs,
        record.rel_hcurl,
        record.rel_l2,
        record.residual,
        record.wall_time
    );
    Ok(CaseOutput {
        record,
        space,
        params,
        solution,
        matrix,
        rhs,
        eh,
        errors,
        interpolation,
        stability,
        solve,
    })
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_slope(h: &[f64], err: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(err).map(|(h, e)| (h.ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Slope over the last `⌈m/2⌉` points (at least two).
pub fn tail_slope(h: &[f64], err: &[f64]) -> f64 {
    let m = h.len();
    let k = m.div_ceil(2).max(2).min(m);
    fit_slope(&h[m - k..], &err[m - k..])
}

/// Fitted slopes of one method's convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSummary {
    pub method: Method,
    pub rel_l2: f64,
    pub rel_hcurl: f64,
    pub rel_energy: f64,
    pub interp_rel_hcurl: f64,
    pub interp_rel_l2: f64,
}

impl SlopeSummary {
    pub fn from_records(method: Method, rs: &[ExperimentRecord]) -> Self {
        let h: Vec<f64> = rs.iter().map(|r| r.h0).collect();
        let s =
            |f: fn(&ExperimentRecord) -> f64| tail_slope(&h, &rs.iter().map(f).collect::<Vec<_>>());
        Self {
            method,
            rel_l2: s(|r| r.rel_l2),
            rel_hcurl: s(|r| r.rel_hcurl),
            rel_energy: s(|r| r.rel_energy),
            interp_rel_hcurl: s(|r| r.interp_rel_hcurl),
            interp_rel_l2: s(|r| r.interp_rel_l2),
        }
    }
}

fn sink(cfg: &Config) -> Result<Option<CsvSink>> {
    cfg.out
        .as_deref()
        .map(|p| CsvSink::open(p, &cfg.echo()))
        .transpose()
}

/// Single solve per configured method; optional VTK and MatrixMarket export
/// of the first method's result.
pub fn cmd_solve(cfg: &Config) -> Result<Vec<ExperimentRecord>> {
    let mut out = sink(cfg)?;
    let mut records = Vec::new();
    for (i, &method) in cfg.methods.iter().enumerate() {
        let case = run_case(cfg, method, cfg.kappa, cfg.n)?;
        if let Some(s) = out.as_mut() {
            s.write(&case.record)?;
        }
        if i == 0 {
            if let Some(p) = &cfg.vtk {
                let mut w = std::io::BufWriter::new(File::create(p)?);
                let title = format!("E_h {} kappa={} n={}", method.name(), cfg.kappa, cfg.n);
                crate::vtk::write_field_vtk(&mut w, &case.space, &case.eh, &title)?;
            }
            if let Some(p) = &cfg.matrix_out {
                let mut w = std::io::BufWriter::new(File::create(p)?);
                case.matrix.write_matrix_market(&mut w)?;
            }
        }
        records.push(case.record);
    }
    Ok(records)
}

/// One record per `(method, n)` and the fitted slopes per method.
pub fn cmd_convergence(cfg: &Config) -> Result<(Vec<ExperimentRecord>, Vec<SlopeSummary>)> {
    let mut out = sink(cfg)?;
    let mut records = Vec::new();
    let mut slopes = Vec::new();
    for &method in &cfg.methods {
        let mut rs = Vec::new();
        for &n in &cfg.n_list {
            let r = run_case(cfg, method, cfg.kappa, n)?.record;
            if let Some(s) = out.as_mut() {
                s.write(&r)?;
            }
            rs.push(r);
        }
        if rs.len() >= 2 {
            slopes.push(SlopeSummary::from_records(method, &rs));
        }
        records.extend(rs);
    }
    Ok((records, slopes))
}

/// Mesh size for a sweep point: `n = round(κ·side / (κh₀))`, at least 2.
pub fn sweep_n(kappa: f64, side: f64, kappa_h0: f64) -> usize {
    ((kappa * side / kappa_h0).round() as usize).max(2)
}

/// One record per `(method, κ)` at fixed `κh₀`.
pub fn cmd_ksweep(cfg: &Config) -> Result<Vec<ExperimentRecord>> {
    let mut out = sink(cfg)?;
    let side = cfg.domain()?.max_side();
    let mut records = Vec::new();
    for &kappa in &cfg.kappa_list {
        let n = sweep_n(kappa, side, cfg.kappa_h0);
        for &method in &cfg.methods {
            let r = run_case(cfg, method, kappa, n)?.record;
            if let Some(s) = out.as_mut() {
                s.write(&r)?;
            }
            records.push(r);
        }
    }
    Ok(records)
}

/// Mesh statistics as `key = value` lines.
pub fn cmd_mesh_info(cfg: &Config) -> Result<String> {
    let mesh = Mesh::cub6(cfg.n, cfg.domain()?)?;
    let mut s = mesh.stats()?.to_string();
    let _ = writeln!(s, "dofs = {}", 2 * mesh.num_edges());
    if let Some(p) = &cfg.vtk {
        let mut w = std::io::BufWriter::new(File::create(p)?);
        crate::vtk::write_mesh_vtk(&mut w, &mesh)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_spec_parsing() {
        assert_eq!(GammaSpec::parse("paper").unwrap().values(), paper_gamma());
        assert_eq!(
            GammaSpec::parse("ZERO").unwrap().values(),
            [C64::new(0.0, 0.0); 3]
        );
        let g = GammaSpec::parse("1+2i,-0.5-0.01i,3").unwrap().values();
        assert_eq!(
            g,
            [
                C64::new(1.0, 2.0),
                C64::new(-0.5, -0.01),
                C64::new(3.0, 0.0)
            ]
        );
        assert!(GammaSpec::parse("1,2").is_err());
    }

    #[test]
    fn config_precedence() {
        let file = "kappa = 3\nn = 5 # inline comment\n[solve]\nn = 6\ngamma = zero\n[convergence]\nn = 7\n";
        let mut c = Config::for_command("solve");
        c.apply_file_text(file, "solve").unwrap();
        assert_eq!((c.kappa, c.n, c.gamma), (3.0, 6, GammaSpec::Zero));
        let mut c = Config::for_command("convergence");
        c.apply_file_text(file, "convergence").unwrap();
        assert_eq!((c.n, c.gamma), (7, GammaSpec::Paper));
        assert_eq!(c.methods, vec![Method::Eem, Method::Cip]);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        std::fs::write(&p, file).unwrap();
        let c = Config::resolve("solve", Some(&p), &[("n".into(), "9".into())]).unwrap();
        assert_eq!((c.kappa, c.n), (3.0, 9));
    }

    #[test]
    fn config_errors() {
        let mut c = Config::default();
        assert!(c.apply_file_text("bogus = 1", "solve").is_err());
        assert!(c.apply_file_text("[nope]\n", "solve").is_err());
        assert!(c.apply_file_text("kappa 3", "solve").is_err());
        assert!(Config::resolve("solve", None, &[("n_list".into(), "4,4".into())]).is_err());
        assert!(Config::resolve("solve", None, &[("kappa".into(), "-1".into())]).is_err());
    }

    #[test]
    fn echo_is_stable_and_complete() {
        let c = Config::default();
        let e = c.echo();
        assert_eq!(e, Config::default().echo());
        assert!(e.contains("gamma=paper(-0.0589255650988"), "{e}");
        let mut d = Config::default();
        for kv in e.split(' ') {
            let (k, v) = kv.split_once('=').unwrap();
            if matches!(k, "out" | "vtk" | "matrix_out") || k == "gamma" {
                continue;
            }
            d.set(k, v).unwrap();
        }
        assert_eq!(c, d);
    }

    #[test]
    fn record_roundtrip_and_append() {
        let r = ExperimentRecord {
            method: Method::Cip,
            kappa: 5.0,
            n: 4,
            h0: 0.25,
            h: 0.4330127018922193,
            dofs: 1234,
            rel_l2: 0.01,
            rel_hcurl: 0.1,
            rel_energy: 0.05,
            interp_rel_hcurl: 0.09,
            interp_rel_l2: 0.005,
            stability_ratio: 0.7,
            solver: "direct/ldlt".into(),
            iterations: 1,
            residual: 1e-14,
            wall_time: 0.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        for _ in 0..2 {
            let mut s = CsvSink::open(&p, "kappa=5").unwrap();
            s.write(&r).unwrap();
        }
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.matches(&ExperimentRecord::csv_header()).count(), 1);
        assert_eq!(text.matches("# config: kappa=5").count(), 2);
        let back = read_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], r);

        std::fs::write(&p, "a,b,c\n").unwrap();
        assert!(CsvSink::open(&p, "").is_err());
    }

    #[test]
    fn slopes() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        assert!((fit_slope(&h, &e) - 2.0).abs() < 1e-12);
        let mut e2 = e.clone();
        e2[0] = 100.0;
        assert!((tail_slope(&h, &e2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_sizes() {
        assert_eq!(sweep_n(4.0, 1.0, 1.0), 4);
        assert_eq!(sweep_n(1.0, 1.0, 1.0), 2);
        assert_eq!(sweep_n(12.0, 1.0, 2.0), 6);
    }

    #[test]
    fn dof_estimate_is_exact_for_cub6() {
        for n in 1..5 {
            let m = Mesh::cub6(n, BoxDomain::unit()).unwrap();
            assert_eq!(estimated_dofs(n), 2 * m.num_edges());
        }
    }

    #[test]
    fn desk_scale_cap() {
        let c = Config::default();
        assert!(build_space(&c, 80).is_err());
    }

    #[test]
    fn small_solve_record() {
        let mut c = Config::for_command("solve");
        c.n = 3;
        let case = run_case(&c, Method::Eem, 5.0, 3).unwrap();
        let r = &case.record;
        assert!(r.rel_hcurl > 0.0 && r.rel_hcurl < 1.0);
        assert!(r.rel_l2 > 0.0 && r.rel_l2 < 1.0);
        assert!(r.residual <= 1e-10);
        assert!((r.h0 - 1.0 / 3.0).abs() < 1e-15);
    }
}
