//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when a solve or a
//! mesh construction fails numerically, 1 on I/O errors. Every output file is
//! written to a temporary file in the target directory and renamed into place.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    all_cases, case, run_case_with, solve_level, write_level_vtk, CaseSpec, ConvergenceRecord, MeshFamily, RunOptions,
};
use crate::assembly::sparse::write_matrix_market_vector;
use crate::error::{Error, Result};
use crate::geometry::ImplicitSurface;
use crate::mesh::vtk::{sample_mesh, write_legacy_vtk};
use crate::mesh::{build_structured_torus, jiggle_to_unstructured, mesh_quality_report, DiagonalSplit};
use crate::solver::{SolverConfig, SolverMethod};

#[derive(Debug, Parser)]
#[command(name = "surface-darcy", version, about = "Stabilized Darcy flow on a torus: convergence studies")]
pub struct Cli {
    /// TOML file with default values for the flags; flags given on the
    /// command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one convergence case and write its record.
    RunCase(CaseArgs),
    /// Run all eight cases and a summary of the last-pair orders.
    RunAll(CommonArgs),
    /// Print geometry diagnostics of one torus mesh.
    MeshReport(MeshArgs),
    /// Assemble one level and write the matrix and right-hand side in Matrix Market format.
    DumpSystem(DumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Vtk,
    Mtx,
}

#[derive(Debug, Default, Clone, Args)]
pub struct CommonArgs {
    /// Refinement levels as numbers of cells around the major circle.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Base seed of the mesh perturbation
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight of the normal-component penalty.
    #[arg(long = "c-n")]
    pub c_n: Option<f64>,
    /// Linear solver
    #[arg(long)]
    pub solver: Option<SolverMethod>,
    /// Relative residual tolerance of GMRES
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Iteration cap of GMRES
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Krylov dimension between GMRES restarts
    #[arg(long)]
    pub restart: Option<usize>,
    /// Exactness degree of the error quadrature
    #[arg(long)]
    pub quad_degree: Option<usize>,
    #[arg(long)]
    pub split: Option<DiagonalSplit>,
    /// Vertex perturbation of unstructured meshes (fraction of grid spacing).
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Output directory
    #[arg(long = "out", short = 'o')]
    pub out_dir: Option<PathBuf>,
    /// Output formats, comma separated
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct CaseArgs {
    /// Tabulated case 1..=8.
    #[arg(long, conflicts_with_all = ["ku", "kp", "kg", "family"])]
    pub case: Option<usize>,
    /// Velocity polynomial order of a custom case
    #[arg(long)]
    pub ku: Option<usize>,
    /// Pressure polynomial order of a custom case
    #[arg(long)]
    pub kp: Option<usize>,
    /// Geometry order of a custom case
    #[arg(long)]
    pub kg: Option<usize>,
    /// Mesh family of a custom case
    #[arg(long)]
    pub family: Option<MeshFamily>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Cells around the major circle
    #[arg(long)]
    pub n: usize,
    /// Geometry order
    #[arg(long, default_value_t = 1)]
    pub kg: usize,
    /// Mesh family
    #[arg(long, value_enum, default_value_t = MeshFamily::Structured)]
    pub family: MeshFamily,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Cells around the major circle
    #[arg(long)]
    pub n: usize,
}

/// Optional configuration file; keys mirror the long flags.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub case: Option<usize>,
    pub ku: Option<usize>,
    pub kp: Option<usize>,
    pub kg: Option<usize>,
    pub family: Option<MeshFamily>,
    pub levels: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub c_n: Option<f64>,
    pub solver: Option<SolverMethod>,
    pub rel_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub restart: Option<usize>,
    pub quad_degree: Option<usize>,
    pub split: Option<DiagonalSplit>,
    pub amplitude: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved settings of a run, echoed into JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub options: RunOptions,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

fn resolve_common(args: &CommonArgs, file: &FileConfig) -> Result<RunConfig> {
    let defaults = RunOptions::default();
    let solver = SolverConfig {
        method: args.solver.or(file.solver).unwrap_or(defaults.solver.method),
        rel_tol: args.rel_tol.or(file.rel_tol).unwrap_or(defaults.solver.rel_tol),
        max_iters: args.max_iters.or(file.max_iters).unwrap_or(defaults.solver.max_iters),
        restart: args.restart.or(file.restart).unwrap_or(defaults.solver.restart),
    };
    let options = RunOptions {
        levels: args.levels.clone().or_else(|| file.levels.clone()).unwrap_or(defaults.levels),
        c_n: args.c_n.or(file.c_n).unwrap_or(defaults.c_n),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        jiggle_amplitude: args.amplitude.or(file.amplitude).unwrap_or(defaults.jiggle_amplitude),
        split: args.split.or(file.split).unwrap_or(defaults.split),
        solver,
        quad_degree: args.quad_degree.or(file.quad_degree),
        ..defaults
    };
    options.validate()?;
    if let Some(q) = options.quad_degree {
        crate::fespace::quadrature_for(q)?;
    }
    let mut formats = args
        .format
        .clone()
        .or_else(|| file.format.clone())
        .unwrap_or_else(|| vec![Format::Csv, Format::Json]);
    formats.sort();
    formats.dedup();
    Ok(RunConfig {
        options,
        out_dir: args
            .out_dir
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        formats,
    })
}

fn resolve_case(args: &CaseArgs, file: &FileConfig) -> Result<CaseSpec> {
    let explicit = args.ku.is_some() || args.kp.is_some() || args.kg.is_some() || args.family.is_some();
    if let Some(id) = args.case {
        return case(id);
    }
    if explicit {
        return explicit_case(args, file);
    }
    if let Some(id) = file.case {
        return case(id);
    }
    explicit_case(args, file)
}

fn explicit_case(args: &CaseArgs, file: &FileConfig) -> Result<CaseSpec> {
    let need = |flag: Option<usize>, conf: Option<usize>, name: &str| {
        flag.or(conf)
            .ok_or_else(|| Error::Config(format!("either --case or --{name} (with the other orders) is required")))
    };
    CaseSpec::custom(
        need(args.ku, file.ku, "ku")?,
        need(args.kp, file.kp, "kp")?,
        need(args.kg, file.kg, "kg")?,
        args.family.or(file.family).unwrap_or(MeshFamily::Structured),
    )
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRow {
    level: usize,
    n_major: usize,
    h: f64,
    n_dofs: usize,
    e_u: f64,
    eoc_u: Option<f64>,
    e_p: f64,
    eoc_p: Option<f64>,
    e_u_tan: f64,
    eoc_u_tan: Option<f64>,
    e_u_norm: f64,
    eoc_u_norm: Option<f64>,
    energy: f64,
    eoc_energy: Option<f64>,
}

#[derive(Serialize)]
struct JsonOutput<'a> {
    config: &'a RunConfig,
    case: &'a CaseSpec,
    rows: Vec<JsonRow>,
    record: &'a ConvergenceRecord,
}

pub fn record_json(config: &RunConfig, spec: &CaseSpec, record: &ConvergenceRecord) -> Result<String> {
    let prev = |v: &[f64], i: usize| if i == 0 { None } else { v.get(i - 1).copied() };
    let rows = record
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| JsonRow {
            level: i,
            n_major: r.n_major,
            h: r.h,
            n_dofs: r.n_dofs,
            e_u: r.e_u,
            eoc_u: prev(&record.eoc.e_u, i),
            e_p: r.e_p,
            eoc_p: prev(&record.eoc.e_p, i),
            e_u_tan: r.e_u_tan,
            eoc_u_tan: prev(&record.eoc.e_u_tan, i),
            e_u_norm: r.e_u_norm,
            eoc_u_norm: prev(&record.eoc.e_u_norm, i),
            energy: r.energy,
            eoc_energy: prev(&record.eoc.energy, i),
        })
        .collect();
    let out = JsonOutput {
        config,
        case: spec,
        rows,
        record,
    };
    serde_json::to_string_pretty(&out).map_err(|e| Error::Numerical(format!("JSON serialization failed: {e}")))
}

fn run_one(spec: &CaseSpec, config: &RunConfig) -> Result<ConvergenceRecord> {
    let label = spec.label();
    let wants = |f: Format| config.formats.contains(&f);
    let record = run_case_with(spec, &config.options, |n, level| {
        eprintln!(
            "{label} n_major={n} dofs={} iters={} residual={:.1e} solve={:.1}s e_u={:.3e} e_p={:.3e}",
            level.system.layout.size(),
            level.stats.iterations,
            level.residual,
            level.stats.seconds,
            level.norms.e_u,
            level.norms.e_p
        );
        if wants(Format::Vtk) {
            let mut buf = Vec::new();
            write_level_vtk(&mut buf, &format!("{label} n_major={n}"), level)?;
            write_atomic(&config.out_dir.join(format!("{label}_n{n}.vtk")), &buf)?;
        }
        if wants(Format::Mtx) {
            write_system(&config.out_dir, &format!("{label}_n{n}"), level)?;
        }
        Ok(())
    })?;
    if wants(Format::Csv) {
        write_atomic(&config.out_dir.join(format!("{label}.csv")), record.to_csv().as_bytes())?;
    }
    if wants(Format::Json) {
        write_atomic(
            &config.out_dir.join(format!("{label}.json")),
            record_json(config, spec, &record)?.as_bytes(),
        )?;
    }
    Ok(record)
}

fn write_system(dir: &Path, stem: &str, level: &crate::analysis::LevelSolution) -> Result<()> {
    let mut buf = Vec::new();
    level.system.matrix.write_matrix_market(&mut buf)?;
    write_atomic(&dir.join(format!("{stem}_matrix.mtx")), &buf)?;
    let mut buf = Vec::new();
    write_matrix_market_vector(&level.system.rhs, &mut buf)?;
    write_atomic(&dir.join(format!("{stem}_rhs.mtx")), &buf)?;
    Ok(())
}

fn failure_to_error(record: &ConvergenceRecord) -> Result<()> {
    match &record.failure {
        Some(msg) => Err(Error::Numerical(msg.clone())),
        None => Ok(()),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn run_all(config: &RunConfig) -> Result<()> {
    let mut summary = String::from("case,k_u,k_p,k_g,family,eoc_u,expected_u,eoc_p,expected_p,eoc_u_tan,eoc_u_norm,eoc_energy\n");
    let mut failed = None;
    for spec in all_cases() {
        let record = run_one(&spec, config)?;
        let last = record.last_eoc();
        let pick = |i: usize| last.map(|l| l[i]);
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            spec.case_id.unwrap_or(0),
            spec.k_u,
            spec.k_p,
            spec.k_g,
            spec.family,
            fmt_opt(pick(0)),
            fmt_opt(spec.expected_order_u),
            fmt_opt(pick(1)),
            fmt_opt(spec.expected_order_p),
            fmt_opt(pick(2)),
            fmt_opt(pick(3)),
            fmt_opt(pick(4)),
        ));
        if failed.is_none() && record.is_partial() {
            failed = Some(record);
        }
    }
    write_atomic(&config.out_dir.join("summary.csv"), summary.as_bytes())?;
    print!("{summary}");
    match failed {
        Some(r) => failure_to_error(&r),
        None => Ok(()),
    }
}

fn mesh_report(args: &MeshArgs, file: &FileConfig) -> Result<()> {
    let config = resolve_common(&args.common, file)?;
    let opts = &config.options;
    let surface = ImplicitSurface::torus(opts.major_radius, opts.minor_radius)?;
    let structured = build_structured_torus(surface, args.n, args.kg, opts.split)?;
    let mesh = match args.family {
        MeshFamily::Structured => structured,
        MeshFamily::Unstructured => jiggle_to_unstructured(
            &structured,
            opts.jiggle_amplitude,
            crate::analysis::level_seed(opts.seed, args.n),
        )?,
    };
    let report = mesh_quality_report(&mesh)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Numerical(e.to_string()))?;
    println!("{json}");
    if args.common.out_dir.is_some() || file.out_dir.is_some() {
        let stem = format!("mesh_n{}_kg{}_{}", args.n, args.kg, args.family);
        if config.formats.contains(&Format::Json) {
            write_atomic(&config.out_dir.join(format!("{stem}.json")), json.as_bytes())?;
        }
        if config.formats.contains(&Format::Vtk) {
            let mut buf = Vec::new();
            write_legacy_vtk(&mut buf, &stem, &sample_mesh(&mesh), &[])?;
            write_atomic(&config.out_dir.join(format!("{stem}.vtk")), &buf)?;
        }
    }
    Ok(())
}

fn dump_system(args: &DumpArgs, file: &FileConfig) -> Result<()> {
    let spec = resolve_case(&args.case, file)?;
    let mut config = resolve_common(&args.case.common, file)?;
    config.options.levels = vec![args.n];
    config.options.validate()?;
    let level = solve_level(&spec, args.n, &config.options)?;
    write_system(&config.out_dir, &format!("{}_n{}", spec.label(), args.n), &level)?;
    eprintln!(
        "wrote {}_n{} system: {} unknowns, {} nonzeros",
        spec.label(),
        args.n,
        level.system.matrix.nrows(),
        level.system.matrix.nnz()
    );
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::RunCase(args) => {
            let spec = resolve_case(args, &file)?;
            let config = resolve_common(&args.common, &file)?;
            let record = run_one(&spec, &config)?;
            print!("{}", record.to_csv());
            failure_to_error(&record)
        }
        Command::RunAll(args) => run_all(&resolve_common(args, &file)?),
        Command::MeshReport(args) => mesh_report(args, &file),
        Command::DumpSystem(args) => dump_system(args, &file),
    };
    eprintln!("finished in {:.1}s", start.elapsed().as_secs_f64());
    result
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::Value(_) | Error::Domain(_) => 2,
        Error::Io(_) => 1,
        Error::Numerical(_)
        | Error::Convergence { .. }
        | Error::SingularSystem(_)
        | Error::DegenerateMesh(_)
        | Error::DegenerateElement { .. } => 3,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
