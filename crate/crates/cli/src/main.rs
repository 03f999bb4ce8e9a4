//! `material-twin`: file-level front-end for the labeling and LiDAR
//! simulation stages.
//!
//! Exit codes: 0 success, 2 usage or unreadable/malformed input, 3 data that
//! parses but violates an invariant, 1 internal failure. Failures print a
//! single JSON object on stderr.

mod manifest;
mod provenance;
mod stages;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use material_twin::Error;
use serde_json::{json, Value};

use stages::*;

#[derive(Parser, Debug)]
#[command(name = "material-twin", version, about = "Material labeling and LiDAR simulation for reconstructed scenes")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Make each instance in a material mask carry a single class.
    Refine(RefineArgs),
    /// Vote mask labels onto Gaussian splats through every camera.
    Project(ProjectArgs),
    /// Transfer splat labels onto mesh triangles.
    LabelMesh(LabelMeshArgs),
    /// Bind labeled triangles to PBR materials.
    AssignPbr(AssignPbrArgs),
    /// Ray-cast a LiDAR scan along a trajectory.
    Simulate(SimulateArgs),
    /// Compare a simulated cloud with a reference, plus optional image pairs.
    Evaluate(EvaluateArgs),
    /// Run every stage for each scene of a manifest.
    Pipeline(PipelineArgs),
    /// Write the built-in analytic test scene and its manifest.
    SynthScene(SynthSceneArgs),
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Format(_) => "format",
        Error::Data(_) => "data",
        Error::UnsupportedModel(_) => "unsupported_model",
        Error::Reference(_) => "reference",
        Error::Shape(_) => "shape",
        Error::Schema(_) => "schema",
        Error::Range { .. } => "range",
        Error::UnmappedClass(_) => "unmapped_class",
        Error::Input(_) => "input",
        Error::Domain(_) => "domain",
        Error::Internal(_) => "internal",
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_data_violation() {
        3
    } else if matches!(e, Error::Internal(_)) {
        1
    } else {
        2
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let v = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{v}");
    ExitCode::from(code)
}

fn run(cmd: &Command) -> material_twin::Result<Value> {
    match cmd {
        Command::Refine(a) => refine(a),
        Command::Project(a) => project(a),
        Command::LabelMesh(a) => label_mesh(a),
        Command::AssignPbr(a) => assign_pbr(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a),
        Command::SynthScene(a) => synth_scene(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim_end().to_string(), 2),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail("usage", "--threads must be at least 1".into(), 2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("internal", e.to_string(), 1);
        }
    }
    match run(&cli.command) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            fail(error_kind(&e), e.to_string(), code)
        }
    }
}
