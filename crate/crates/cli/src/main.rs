use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use toroflow_cli::{cmd_field, cmd_surface, cmd_verify, emit, fmt17, workers_from_env, CliError, CliResult, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "toroflow", version, about = "Toroidal Euler flows from coordinate charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Level {
    /// Level set Ψ_c.
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    ntheta: Option<usize>,
    #[arg(long)]
    nzeta: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Export one flux surface as a structured CSV mesh.
    Surface {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        level: Level,
    },
    /// Export exact and first-order fields on a level set, one file per ε.
    Field {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        level: Level,
        /// Comma-separated amplitudes.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Run the residual suite and write a JSON Lines report.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(cfg: &RunConfig, level: &Level) -> (f64, usize, usize) {
    (
        level.psi.unwrap_or(cfg.grid.psi_level),
        level.ntheta.unwrap_or(cfg.grid.ntheta),
        level.nzeta.unwrap_or(cfg.grid.nzeta),
    )
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Surface { common, level } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            let (psi, nt, nz) = resolve(&cfg, &level);
            let out = common.out.unwrap_or_else(|| cfg.output.surface.clone());
            let s = cmd_surface(&cfg, psi, nt, nz, &out)?;
            emit(&format!(
                "wrote {} rows to {}\nmax |Ψ - Ψ_c| over vertices: {}\n",
                s.rows,
                out.display(),
                fmt17(s.max_level_error)
            ));
            Ok(0)
        }
        Command::Field { common, level, eps } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            let (psi, nt, nz) = resolve(&cfg, &level);
            let out = common.out.unwrap_or_else(|| cfg.output.field.clone());
            let eps = eps.unwrap_or_else(|| cfg.field.eps_list.clone());
            for s in cmd_field(&cfg, psi, &eps, nt, nz, &out)? {
                emit(&format!(
                    "eps={} rows={} tangency(u1,psi1)={} tangency(u,psi)={} -> {}\n",
                    s.eps,
                    s.rows,
                    fmt17(s.tangency_first_order),
                    fmt17(s.tangency_exact),
                    s.path.display()
                ));
            }
            Ok(0)
        }
        Command::Verify { common } => {
            let cfg = RunConfig::load(common.config.as_deref())?;
            let out = common.out.unwrap_or_else(|| cfg.output.report.clone());
            let (outcome, human) = cmd_verify(&cfg, &out)?;
            emit(&human);
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match workers_from_env() {
        Ok(Some(n)) => rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string())),
        Ok(None) => Ok(()),
        Err(e) => Err(e),
    };
    let result = pool.and_then(|()| run(cli));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
