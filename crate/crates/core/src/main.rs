use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slipflow::acceptance;
use slipflow::harness::{
    self, config, emit, parse_run, parse_study, parse_sweep, project_study, report_dir, run_case, sweep, write_record,
    write_study, write_sweep,
};

#[derive(Parser)]
#[command(name = "slipflow", version, about = "2D Navier-Stokes on the disk with Navier friction walls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single case.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a viscosity sweep and write the uniform-bound, Cauchy and L^p tables.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projector study across n.
    Project {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in acceptance suite; exits nonzero on any failure.
    Verify {
        /// Comma separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Also write the outcomes as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Regenerate the tables from the records stored in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn out_dir(out: Option<PathBuf>, configured: &Path) -> PathBuf {
    out.unwrap_or_else(|| configured.to_path_buf())
}

fn execute(cmd: Command) -> slipflow::Result<bool> {
    match cmd {
        Command::Run { config: path, out } => {
            let cfg = parse_run(&config::read(&path)?)?;
            let dir = out_dir(out, &cfg.output.dir);
            let mut rec = run_case(&cfg)?;
            write_record(&mut rec, &dir, cfg.output.dump_fields)?;
            let s = &rec.summary;
            println!(
                "{}: {} steps to t = {}, ||omega||_p {:.6e} -> {:.6e}, ||u||_2 {:.6e} -> {:.6e}",
                rec.label, s.steps, s.t_reached, s.lp_initial, s.lp_final, s.energy_initial, s.energy_final
            );
            if let Some(p) = &rec.projection {
                println!("projection n = {}: {} iterations, compat residual {:.2e}", p.n, p.iterations, p.compat_residual);
            }
            if let Some(e) = &rec.error {
                eprintln!("{e}");
            }
            println!("record written to {}", dir.display());
            Ok(rec.complete)
        }
        Command::Sweep { config: path, out } => {
            let plan = parse_sweep(&config::read(&path)?)?;
            let dir = out_dir(out, &plan.output.dir);
            let mut rep = sweep(&plan)?;
            write_sweep(&mut rep, &dir)?;
            let mut table = Vec::new();
            emit::write_csv(&mut table, &rep.bounds)?;
            print!("{}", String::from_utf8_lossy(&table));
            if let Some(c) = &rep.cauchy {
                let mut table = Vec::new();
                emit::write_csv(&mut table, &c.rows)?;
                print!("{}", String::from_utf8_lossy(&table));
            }
            for f in &rep.failures {
                eprintln!("failed: {f}");
            }
            println!("sweep written to {}", dir.display());
            Ok(rep.complete)
        }
        Command::Project { config: path, out } => {
            let study = parse_study(&config::read(&path)?)?;
            let dir = out_dir(out, &study.output.dir);
            let rep = project_study(&study)?;
            write_study(&rep, &dir)?;
            match rep.n0 {
                Some(n) => println!("n0 = {n}"),
                None => println!("no candidate reaches contraction factor < {}", study.threshold),
            }
            let mut table = Vec::new();
            emit::write_csv(&mut table, &rep.rows)?;
            print!("{}", String::from_utf8_lossy(&table));
            Ok(rep.n0.is_some())
        }
        Command::Verify { only, json } => {
            println!("running on {} worker thread(s)", harness::worker_threads());
            let outcomes = acceptance::run_selected(&only, |o| println!("{}", o.line()));
            if let Some(path) = json {
                emit::write_json(&path, &outcomes)?;
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
        Command::Report { dir } => {
            let n = report_dir(&dir)?;
            println!("{n} record(s) in {}", dir.display());
            Ok(true)
        }
    }
}
