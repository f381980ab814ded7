use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cipeem::experiment::{
    cmd_convergence, cmd_ksweep, cmd_mesh_info, cmd_solve, Config, ExperimentRecord,
};
use cipeem::forms::Method;
use cipeem::validation::{run_suite, suite_passed};

#[derive(Parser)]
#[command(
    name = "cipeem",
    version,
    about = "EEM and CIP-EEM solvers for time-harmonic Maxwell equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and report errors.
    Solve(Opts),
    /// Error table over a list of mesh sizes with fitted slopes.
    Convergence(Opts),
    /// Error table over wave numbers at fixed kappa*h0.
    Ksweep(Opts),
    /// Run the property suite.
    Validate(Opts),
    /// Print mesh statistics.
    MeshInfo(Opts),
}

#[derive(Args, Default)]
struct Opts {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_name = "N1,N2,...")]
    n_list: Option<String>,
    #[arg(long, value_name = "K1,K2,...")]
    kappa_list: Option<String>,
    #[arg(long)]
    kappa_h0: Option<f64>,
    /// eem, cip or a comma list of both.
    #[arg(long)]
    method: Option<String>,
    /// c1,c2,c3 (each a+bi), paper or zero.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// gamma index for the axis-aligned, diagonal-2d and diagonal-3d face classes.
    #[arg(long, value_name = "I,J,K")]
    class_map: Option<String>,
    /// multipole-sine or plane-wave.
    #[arg(long)]
    solution: Option<String>,
    /// direct or gmres.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    quad_degree: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    vtk: Option<PathBuf>,
    /// Write the system matrix in MatrixMarket format.
    #[arg(long)]
    matrix_out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Permit runs beyond the desk-scale unknown cap.
    #[arg(long)]
    allow_large: bool,
}

impl Opts {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut push = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k.to_string(), val));
            }
        };
        push("kappa", self.kappa.map(|x| x.to_string()));
        push("lambda", self.lambda.map(|x| x.to_string()));
        push("n", self.n.map(|x| x.to_string()));
        push("n_list", self.n_list.clone());
        push("kappa_list", self.kappa_list.clone());
        push("kappa_h0", self.kappa_h0.map(|x| x.to_string()));
        push("method", self.method.clone());
        push("gamma", self.gamma.clone());
        push("class_map", self.class_map.clone());
        push("solution", self.solution.clone());
        push("solver", self.solver.clone());
        push("quad_degree", self.quad_degree.map(|x| x.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("vtk", self.vtk.as_ref().map(|p| p.display().to_string()));
        push(
            "matrix_out",
            self.matrix_out.as_ref().map(|p| p.display().to_string()),
        );
        push("threads", self.threads.map(|x| x.to_string()));
        if self.allow_large {
            push("allow_large", Some("true".into()));
        }
        v
    }
}

fn print_table(records: &[ExperimentRecord]) {
    println!("{}", ExperimentRecord::csv_header());
    for r in records {
        println!("{}", r.to_csv());
    }
}

fn run(cmd: &str, opts: &Opts) -> cipeem::error::Result<bool> {
    let cfg = Config::resolve(cmd, opts.config.as_deref(), &opts.overrides())?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| cipeem::error::Error::Config(e.to_string()))?;
    }
    println!("# config: {}", cfg.echo());
    if cfg.methods.contains(&Method::Cip) {
        for w in cfg.params(cfg.kappa)?.penalty_warnings() {
            log::warn!("{w}");
        }
    }
    match cmd {
        "solve" => print_table(&cmd_solve(&cfg)?),
        "convergence" => {
            let (records, slopes) = cmd_convergence(&cfg)?;
            print_table(&records);
            for s in slopes {
                println!(
                    "# slopes {}: rel_l2 {:.3} rel_hcurl {:.3} rel_energy {:.3} interp_rel_hcurl {:.3} interp_rel_l2 {:.3}",
                    s.method.name(),
                    s.rel_l2,
                    s.rel_hcurl,
                    s.rel_energy,
                    s.interp_rel_hcurl,
                    s.interp_rel_l2
                );
            }
        }
        "ksweep" => {
            let records = cmd_ksweep(&cfg)?;
            print_table(&records);
            for r in &records {
                let eem = records
                    .iter()
                    .find(|e| e.method == Method::Eem && e.kappa == r.kappa);
                let cmp = match (r.method, eem) {
                    (Method::Cip, Some(e)) => format!(" cip/eem {:.3}", r.rel_hcurl / e.rel_hcurl),
                    _ => String::new(),
                };
                println!(
                    "# {} kappa {} n {}: error/interpolation {:.3}{cmp}",
                    r.method.name(),
                    r.kappa,
                    r.n,
                    r.rel_hcurl / r.interp_rel_hcurl
                );
            }
        }
        "validate" => {
            let checks = run_suite(&cfg);
            for c in &checks {
                println!("{}", c.line());
            }
            let ok = suite_passed(&checks);
            println!(
                "{}",
                if ok {
                    "validate: all checks passed"
                } else {
                    "validate: FAILED"
                }
            );
            return Ok(ok);
        }
        "mesh-info" => print!("{}", cmd_mesh_info(&cfg)?),
        _ => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (cmd, opts) = match &cli.command {
        Command::Solve(o) => ("solve", o),
        Command::Convergence(o) => ("convergence", o),
        Command::Ksweep(o) => ("ksweep", o),
        Command::Validate(o) => ("validate", o),
        Command::MeshInfo(o) => ("mesh-info", o),
    };
    match run(cmd, opts) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
