//! Command-line front end: construct, verify, rank, and demo.
//!
//! Exit codes: 0 success; 1 failed verification; 2 parse or malformed
//! input; 3 violated precondition; 4 construction failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chainorder::artifact::{self, ArtifactError};
use chainorder::classes::ClassAllocator;
use chainorder::constructor::{realize, BuildError, TraceNode};
use chainorder::order::parse_term;
use chainorder::schedule::EpsSchedule;
use chainorder::systems::resolve;
use chainorder::verifier::{verify_family, Report};

#[derive(Parser)]
#[command(
    name = "chainorder",
    version,
    about = "Build and verify nested chain families realizing scattered order types"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a chain family for a target term and write the artifact
    Construct {
        /// System spec: odometer, rotation:golden, rotation:sqrt2,
        /// rotation:periodic:a,b,...
        #[arg(long)]
        system: String,
        /// Start point (odometer: p/q with odd q; rotation: "(p/q, n)")
        #[arg(long)]
        x: String,
        /// End point
        #[arg(long)]
        y: String,
        /// Target order term, e.g. "sum(w*; ; z)"
        #[arg(long)]
        target: String,
        /// Number of stages to build
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Schedule: recip, dyadic, or list:e1,e2,...
        #[arg(long, default_value = "dyadic")]
        eps: String,
        /// Allocation seed (offsets the fresh-class sequence)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output artifact path
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Re-run the full check suite on an artifact
    Verify {
        artifact: PathBuf,
        /// Emit a machine-readable JSON report
        #[arg(long)]
        json: bool,
    },
    /// Print the rank of a term
    Rank { term: String },
    /// Build, verify, and summarize a small showcase family
    Demo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Construct {
            system,
            x,
            y,
            target,
            depth,
            eps,
            seed,
            out,
            quiet,
        } => cmd_construct(&system, &x, &y, &target, depth, &eps, seed, &out, quiet),
        Cmd::Verify { artifact, json } => cmd_verify(&artifact, json),
        Cmd::Rank { term } => cmd_rank(&term),
        Cmd::Demo => cmd_demo(),
    };
    ExitCode::from(code)
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    system: &str,
    x: &str,
    y: &str,
    target: &str,
    depth: usize,
    eps: &str,
    seed: u64,
    out: &Path,
    quiet: bool,
) -> u8 {
    let sys = match resolve(system) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let x = match sys.parse_point(x) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: --x: {e}");
            return 2;
        }
    };
    let y = match sys.parse_point(y) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: --y: {e}");
            return 2;
        }
    };
    let term = match parse_term(target) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: --target: {e}");
            return 2;
        }
    };
    let sched = match EpsSchedule::parse(eps) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: --eps: {e}");
            return 2;
        }
    };
    if depth == 0 {
        eprintln!("error: --depth must be at least 1");
        return 2;
    }
    if let Err(e) = sched.check_depth(depth) {
        eprintln!("error: --eps: {e}");
        return 2;
    }

    let alloc = ClassAllocator::new(sys.clone(), seed, vec![]);
    let built = match realize(&sys, &x, &y, &term, &sched, depth, &alloc) {
        Ok(b) => b,
        Err(BuildError::Precondition(msg)) => {
            eprintln!("precondition: {msg}");
            return 3;
        }
        Err(e) => {
            eprintln!("construction failed: {e}");
            return 4;
        }
    };

    let report = verify_family(sys.as_ref(), &built.family, &built.trace, &term);
    let doc = artifact::to_doc(sys.as_ref(), &built, &term);
    if let Err(e) = artifact::save(out, &doc) {
        eprintln!("error writing artifact: {e}");
        return 4;
    }
    if !quiet {
        println!("wrote {}", out.display());
        print!("{}", report.lines());
    }
    if report.all_pass() {
        0
    } else {
        eprintln!("self-verification failed");
        4
    }
}

fn report_json(report: &Report) -> String {
    let checks: Vec<serde_json::Value> = report
        .checks
        .iter()
        .map(|c| {
            serde_json::json!({
                "name": c.name,
                "pass": c.pass,
                "detail": c.detail,
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "all_pass": report.all_pass(),
        "checks": checks,
    }))
    .expect("report serializes")
}

fn cmd_verify(path: &Path, json: bool) -> u8 {
    let doc = match artifact::load(path) {
        Ok(d) => d,
        Err(e @ (ArtifactError::Io(_) | ArtifactError::Json(_) | ArtifactError::Malformed(_))) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let loaded = match artifact::from_doc(&doc) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let report = verify_family(
        loaded.system.as_ref(),
        &loaded.family,
        &loaded.trace,
        &loaded.term,
    );
    if json {
        println!("{}", report_json(&report));
    } else {
        print!("{}", report.lines());
    }
    if report.all_pass() {
        0
    } else {
        1
    }
}

fn cmd_rank(term: &str) -> u8 {
    match parse_term(term) {
        Ok(t) => {
            println!("{}", t.vd_rank());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn cmd_demo() -> u8 {
    let sys = resolve("odometer").expect("odometer is registered");
    let x = sys.parse_point("0").expect("valid point");
    let y = sys.parse_point("1/3").expect("valid point");
    let term = parse_term("sum(w; ; w)").expect("valid term");
    let sched = EpsSchedule::dyadic();
    let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
    let built = match realize(&sys, &x, &y, &term, &sched, 4, &alloc) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("demo construction failed: {e}");
            return 4;
        }
    };
    println!("target sum(w; ; w) from 0 to 1/3 on the odometer, depth 4");
    if let TraceNode::Sum { stage_blocks, .. } = &built.trace.root {
        for (n, (stage, spans)) in built.family.stages.iter().zip(stage_blocks).enumerate() {
            let blocks: Vec<String> = spans
                .iter()
                .map(|s| format!("block {} ({} pts)", s.pos, s.len))
                .collect();
            println!(
                "stage {}: eps={}, {} points, {}",
                n + 1,
                stage.eps,
                stage.points.len(),
                blocks.join(", ")
            );
        }
    }
    let report = verify_family(sys.as_ref(), &built.family, &built.trace, &term);
    print!("{}", report.lines());
    if report.all_pass() {
        0
    } else {
        1
    }
}
