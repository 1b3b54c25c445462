//! Batch runner: reads a JSON experiment configuration, runs it on a
//! dedicated thread pool and writes the report, CSV tables and a manifest.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;

pub use config::{validate, Config, Diagnostic, Kind};
pub use experiments::{run, RunOutput};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Unexpected failure while running a valid configuration.
    pub const RUNTIME: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const CAPACITY: i32 = 3;
    /// The run finished but a bound check or constant fit failed.
    pub const VERDICT: i32 = 4;
}

/// Exit code for a non-empty diagnostic list: capacity only when every
/// problem is a resource limit.
pub fn diagnostics_code(diags: &[Diagnostic]) -> i32 {
    if diags.iter().all(|d| d.capacity) {
        exit::CAPACITY
    } else {
        exit::CONFIG
    }
}

/// Validate, run and write one experiment. Nothing is written unless the
/// configuration is valid. `threads = 0` uses one thread per core.
pub fn execute(kind: Kind, config_path: &Path, out_dir: &Path, threads: usize) -> i32 {
    let config = match Config::load(kind, config_path) {
        Ok(c) => c,
        Err(diags) => {
            for d in &diags {
                eprintln!("{d}");
            }
            return diagnostics_code(&diags);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start {threads} worker threads: {e}");
            return exit::RUNTIME;
        }
    };
    let result = pool.install(|| run(&config));
    let out = match result {
        Ok(o) => o,
        Err(trpchain::Error::Capacity(msg)) => {
            eprintln!("capacity: {msg}");
            eprintln!("hint: reduce the problem size in the configuration and rerun");
            return exit::CAPACITY;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return exit::RUNTIME;
        }
    };
    if let Err(e) = output::write_run(out_dir, &config, &out, pool.current_num_threads()) {
        eprintln!("cannot write outputs to {}: {e}", out_dir.display());
        return exit::RUNTIME;
    }
    for line in &out.summary {
        println!("{line}");
    }
    println!("verdict: {}", if out.verdict { "pass" } else { "fail" });
    if out.verdict {
        exit::OK
    } else {
        exit::VERDICT
    }
}
