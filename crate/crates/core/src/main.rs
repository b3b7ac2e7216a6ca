use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpsj::harness::{
    cmd_figure, cmd_sim, cmd_sweep, load_solver_config, parse_grid, render_summary,
    resolve_out_dir, FigureArgs, HarnessError, SimArgs, SweepArgs, SweepTemplate, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "qpsj",
    version,
    about = "QPSJ circuit simulator and neuromorphic templates"
)]
struct Cli {
    /// Solver settings as JSON (any subset of the SolverConfig fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a netlist and write waveforms, detected pulses and a manifest.
    Sim {
        netlist: PathBuf,
        /// Output step in ps (overrides .tran).
        #[arg(long)]
        tstep: Option<f64>,
        /// Stop time in ps (overrides .tran).
        #[arg(long)]
        tstop: Option<f64>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run a named figure scenario and print its summary.
    Figure {
        /// fig2, fig4a, fig4b, fig6, fig6a..fig6d, fig8, fig9, fig8-zero
        id: String,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Sweep one template parameter over a grid.
    Sweep {
        /// neuron, binary, multi or damping
        template: String,
        /// Parameter name; nested fields use dots, e.g. input.period.
        param: String,
        /// `a,b,c` or `start:stop:step`.
        values: String,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), HarnessError> {
    let solver = load_solver_config(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Sim {
            netlist,
            tstep,
            tstop,
            out,
        } => {
            let out = resolve_out_dir(out);
            let m = cmd_sim(&SimArgs {
                netlist,
                tstep,
                tstop,
                out: out.clone(),
                solver,
                argv,
            })?;
            println!(
                "wrote {} files to {} ({:.2} s)",
                m.outputs.len(),
                out.display(),
                m.wall_time_s
            );
        }
        Cmd::Figure { id, out } => {
            let fig = cmd_figure(&FigureArgs {
                id,
                out: resolve_out_dir(out),
                solver,
                argv,
            })?;
            print!("{}", render_summary(&fig));
        }
        Cmd::Sweep {
            template,
            param,
            values,
            out,
        } => {
            let template: SweepTemplate = template.parse()?;
            let out = resolve_out_dir(out);
            let rows = cmd_sweep(&SweepArgs {
                template,
                param: param.clone(),
                values: parse_grid(&values)?,
                out: out.clone(),
                solver,
                argv,
            })?;
            let names = template.metric_names();
            println!("{param} {}", names.join(" "));
            for r in &rows {
                match &r.error {
                    None => println!(
                        "{} {}",
                        r.value,
                        r.metrics
                            .iter()
                            .map(|m| format!("{m:.6}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    ),
                    Some(e) => println!("{} error: {e}", r.value),
                }
            }
            println!("wrote {}", out.join("sweep.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
