//! Command-line front end: `validate`, `groundstate`, `lift`, `moser`,
//! `semiclassical`, configured by one JSON document.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use commands::{Ctx, EXIT_USAGE};
use config::RunConfig;

const USAGE: &str = "usage: kirchhoff <command> [--config <path>] [--out <dir>] [--eps <e1,e2,...>]

commands:
  validate       check the nonlinearity and coefficient hypotheses
  groundstate    solve the limit problem, lift it, and report energies
  lift           solve and report only the dilation to the nonlocal state
  moser          run the two-dimensional criticality scan
  semiclassical  continuation sweep over the configured epsilon list

exit codes: 0 success, 1 domain/solver failure, 2 usage/parse failure";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("{USAGE}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

fn run(args: &[String]) -> Result<i32, String> {
    let mut command = None;
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from(".");
    let mut eps_override = None;

    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let v = it.next().ok_or("--config needs a path")?;
                config_path = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it.next().ok_or("--out needs a directory")?;
                out_dir = PathBuf::from(v);
            }
            "--eps" => {
                let v = it.next().ok_or("--eps needs a comma-separated list")?;
                let list: Result<Vec<f64>, _> =
                    v.split(',').map(|s| s.trim().parse::<f64>()).collect();
                eps_override = Some(list.map_err(|e| format!("bad --eps value: {e}"))?);
            }
            "--help" | "-h" => {
                println!("{USAGE}");
                return Ok(0);
            }
            name if command.is_none() && !name.starts_with('-') => {
                command = Some(name.to_string());
            }
            other => return Err(format!("unknown argument `{other}`")),
        }
    }
    let command = command.ok_or("missing command")?;

    let config: RunConfig = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?
        }
        None => RunConfig::default_3d(),
    };

    let ctx = Ctx {
        config,
        out_dir,
        eps_override,
    };
    let code = match command.as_str() {
        "validate" => commands::cmd_validate(&ctx),
        "groundstate" => commands::cmd_groundstate(&ctx),
        "lift" => commands::cmd_lift(&ctx),
        "moser" => commands::cmd_moser(&ctx),
        "semiclassical" => commands::cmd_semiclassical(&ctx),
        other => return Err(format!("unknown command `{other}`")),
    };
    Ok(code)
}
