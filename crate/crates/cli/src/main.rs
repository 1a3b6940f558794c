mod args;
mod commands;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, Common, Params, Wrapped};
use commands::Failure;

const SCHEMA: &str = "prodset-report/v1";

fn load<T: Params>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::invalid(format!("invalid config {}: {e}", path.display())))
}

fn run<T: Params + clap::Args>(name: &str, w: Wrapped<T>, f: fn(&T) -> Result<Value, Failure>) -> (Common, Value) {
    let start = Instant::now();
    let Wrapped { common, params } = w;
    let (config, outcome) = match load::<T>(common.config.as_deref()) {
        Ok(file) => {
            let p = params.merged(file).resolved();
            let out = f(&p);
            (serde_json::to_value(&p).expect("parameters serialize"), out)
        }
        Err(e) => (Value::Null, Err(e)),
    };
    let (status, code, result, error) = match outcome {
        Ok(r) => ("ok", commands::EXIT_OK, r, Value::Null),
        Err(e) => (
            "error",
            e.code,
            e.result.unwrap_or(Value::Null),
            json!({ "kind": e.kind, "message": e.message }),
        ),
    };
    let report = json!({
        "schema": SCHEMA,
        "command": name,
        "config": config,
        "status": status,
        "exit_code": code,
        "result": result,
        "error": error,
        "timing": { "wall_ms": start.elapsed().as_millis() as u64 },
    });
    (common, report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::FolnerGen(w) => w.common.threads,
        Command::FolnerCheck(w) => w.common.threads,
        Command::SacCert(w) => w.common.threads,
        Command::Density(w) => w.common.threads,
        Command::Thin(w) => w.common.threads,
        Command::Search(w) => w.common.threads,
        Command::VerifyWitness(w) => w.common.threads,
        Command::Counterexample(w) => w.common.threads,
        Command::Extract(w) => w.common.threads,
    };
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: invalid value for `threads`: must be positive");
            return ExitCode::from(commands::EXIT_INVALID as u8);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is built once");
    }
    let (common, report) = match cli.command {
        Command::FolnerGen(w) => run("folner-gen", w, commands::folner_gen),
        Command::FolnerCheck(w) => run("folner-check", w, commands::folner_check),
        Command::SacCert(w) => run("sac-cert", w, commands::sac_cert),
        Command::Density(w) => run("density", w, commands::density),
        Command::Thin(w) => run("thin", w, commands::thin),
        Command::Search(w) => run("search", w, commands::search),
        Command::VerifyWitness(w) => run("verify-witness", w, commands::verify),
        Command::Counterexample(w) => run("counterexample", w, commands::counterexample),
        Command::Extract(w) => run("extract", w, commands::extract),
    };
    let code = report["exit_code"].as_i64().unwrap_or(1) as u8;
    if let Some(msg) = report["error"]["message"].as_str() {
        eprintln!("error: {msg}");
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &common.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(commands::EXIT_INVALID as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
