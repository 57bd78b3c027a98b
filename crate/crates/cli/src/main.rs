//! `chaincert`: batch verification campaigns.
//!
//! Exit codes: 0 success, 2 bound violation, 3 convergence failure,
//! 64 configuration error, 70 resource ceiling, 1 anything else.

mod campaigns;
mod params;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chaincert::{Error, Result};
use clap::Parser;
use serde_json::json;

use params::Params;

#[derive(Parser)]
#[command(name = "chaincert", version, about = "Certified numerics on small quantum spin chains")]
struct Opts {
    /// Campaign to run.
    #[arg(value_parser = ["fnorm", "lr-certify", "split-defects", "corr-decay", "flow", "envelopes", "z2"])]
    command: String,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Built-in model (or MPS for `z2`).
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long)]
    sites: Option<i64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Integer range `lo..hi` (inclusive) for `envelopes`.
    #[arg(long)]
    x: Option<String>,
    /// `key=value` override; dotted keys address tables, bare keys `[run]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BoundViolation { .. } => 2,
        Error::NotConverged(_) | Error::QuadratureFailure(_) | Error::DivergentEnvelope(_) | Error::DivergentSum { .. } => 3,
        Error::Config(_) | Error::InvalidParameter(_) => 64,
        Error::VolumeTooLarge { .. } => 70,
        _ => 1,
    }
}

fn resolve(opts: &Opts) -> Result<Params> {
    let mut p = Params::load(opts.config.as_deref())?;
    if let Some(b) = &opts.builtin {
        let key = if opts.command == "z2" { "mps.builtin" } else { "model.builtin" };
        p.set(key, toml::Value::String(b.clone()))?;
    }
    if let Some(n) = opts.sites {
        p.set("sites", toml::Value::Integer(n))?;
    }
    for (key, v) in [("gamma", opts.gamma), ("beta", opts.beta), ("R", opts.r), ("b", opts.b)] {
        if let Some(v) = v {
            p.set(key, toml::Value::Float(v))?;
        }
    }
    if let Some(x) = &opts.x {
        let (lo, hi) = x.split_once("..").ok_or_else(|| Error::Config(format!("--x expects lo..hi, got `{x}`")))?;
        let parse = |s: &str| s.trim().parse::<i64>().map_err(|_| Error::Config(format!("bad --x bound `{s}`")));
        p.set("x_min", toml::Value::Integer(parse(lo)?))?;
        p.set("x_max", toml::Value::Integer(parse(hi)?))?;
    }
    for s in &opts.set {
        p.set_assignment(s)?;
    }
    Ok(p)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(Error::from)
}

fn run(opts: &Opts) -> Result<Option<Error>> {
    let mut p = resolve(opts)?;
    let outcome = match opts.command.as_str() {
        "fnorm" => campaigns::fnorm(&mut p, opts.seed),
        "lr-certify" => campaigns::lr_certify(&mut p, opts.seed),
        "split-defects" => campaigns::split_defects(&mut p, opts.seed),
        "corr-decay" => campaigns::corr_decay(&mut p, opts.seed),
        "flow" => campaigns::flow(&mut p, opts.seed),
        "envelopes" => campaigns::envelopes(&mut p, opts.seed),
        "z2" => campaigns::z2(&mut p, opts.seed),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let stem = opts.command.replace('-', "_");
    let mut outputs: Vec<String> = outcome.tables.iter().map(|(n, _)| n.clone()).collect();
    outputs.push(format!("{stem}.json"));
    let manifest = json!({
        "command": opts.command,
        "config_digest": p.digest(),
        "seed": opts.seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "outputs": outputs,
        "config": p.to_json(),
    });
    for (name, csv) in &outcome.tables {
        write(&opts.out_dir.join(name), csv)?;
    }
    let status = match &outcome.violation {
        None => json!("pass"),
        Some(e) => json!(format!("{e}")),
    };
    let report = json!({ "manifest": manifest, "status": status, "summary": outcome.summary });
    write(&opts.out_dir.join(format!("{stem}.json")), &serde_json::to_string_pretty(&report).unwrap_or_default())?;
    write(&opts.out_dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest).unwrap_or_default())?;
    println!("{}", serde_json::to_string(&report["summary"]).unwrap_or_default());
    Ok(outcome.violation)
}

fn main() -> ExitCode {
    let opts = match Opts::try_parse() {
        Ok(o) => o,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    chaincert::linalg::use_sequential_kernels();
    if let Some(n) = opts.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(70);
        }
    }
    match run(&opts) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(v)) => {
            eprintln!("error: {v}");
            ExitCode::from(exit_code(&v))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
