use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dsm_core::bench::{self, BenchConfig, Method, SolveOptions};
use dsm_core::problems::{load_matrix, load_vector, save_vector, ExactProfile};
use dsm_core::{SolveConfig, Stopping};

#[derive(Parser)]
#[command(name = "dsm", version, about = "Preconditioned DSM solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StoppingArg {
    Discrepancy,
    Apriori,
}

#[derive(clap::Args)]
struct SolverFlags {
    /// Discrepancy constant C in (1, 2)
    #[arg(long = "C", default_value_t = 1.01)]
    c: f64,
    /// Step size h
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// A-priori exponent in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "discrepancy")]
    stopping: StoppingArg,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

impl SolverFlags {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            h: self.h,
            c: self.c,
            gamma: self.gamma,
            stopping: match self.stopping {
                StoppingArg::Discrepancy => Stopping::Discrepancy,
                StoppingArg::Apriori => Stopping::APriori,
            },
            max_iter: self.max_iter,
            ..SolveConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Heat-equation benchmark over sizes, seeds and methods
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90,100")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        delta_rel: f64,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// First seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "dsm,vr_i,vr_n,landweber")]
        methods: Vec<Method>,
        /// Exact solution of the instance (pulse|bump)
        #[arg(long, default_value = "pulse")]
        profile: ExactProfile,
        /// Run VR_i at the initial guess of the parameter search
        #[arg(long)]
        vr_i_initial_a: bool,
        /// Fail if any residual history increases
        #[arg(long)]
        assert_invariants: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Solve A u = f from files
    Solve {
        matrix: PathBuf,
        rhs: PathBuf,
        /// Noise level ‖f - f_δ‖
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "dsm")]
        method: Method,
        /// Fixed regularization parameter (chosen automatically if absent)
        #[arg(long)]
        a: Option<f64>,
        /// Solution vector file; the run report goes to `<out>.report`
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Condition number of the n-point heat matrix
    Cond { n: usize },
    /// Exact, DSM and VR_n solutions as a CSV table
    PlotData {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        delta_rel: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "pulse")]
        profile: ExactProfile,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Bench {
            n_list,
            delta_rel,
            seeds,
            seed,
            methods,
            profile,
            vr_i_initial_a,
            assert_invariants,
            out,
            solver,
        } => {
            let cfg = BenchConfig {
                n_list,
                delta_rel,
                seeds,
                seed,
                methods,
                profile,
                solve: solver.config(),
                assert_invariants,
                vr_i_initial_a,
            };
            let summary = bench::cmd_bench(&cfg, &out).map_err(|e| e.to_string())?;
            print!("{}", bench::format_table(&summary));
            println!(
                "rows: {}  summary: {}",
                out.display(),
                bench::summary_path(&out).display()
            );
        }
        Command::Solve {
            matrix,
            rhs,
            delta,
            method,
            a,
            out,
            solver,
        } => {
            let a_mat = load_matrix(&matrix).map_err(|e| e.to_string())?;
            let f = load_vector(&rhs).map_err(|e| e.to_string())?;
            let opts = SolveOptions {
                method,
                a,
                solve: solver.config(),
            };
            let report = bench::solve_system(&a_mat, &f, delta, &opts).map_err(|e| e.to_string())?;
            save_vector(&out, &report.solution).map_err(|e| e.to_string())?;
            let mut report_path = out.into_os_string();
            report_path.push(".report");
            std::fs::write(&report_path, report.to_text())
                .map_err(|e| format!("{}: {e}", PathBuf::from(&report_path).display()))?;
            print!("{}", report.to_text());
        }
        Command::Cond { n } => {
            let c = bench::cmd_cond(n).map_err(|e| e.to_string())?;
            println!("{c:.4e}");
        }
        Command::PlotData {
            n,
            delta_rel,
            seed,
            profile,
            out,
            solver,
        } => {
            bench::cmd_plot_data(n, delta_rel, seed, profile, &solver.config(), &out)
                .map_err(|e| e.to_string())?;
            println!("wrote {n} rows to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
