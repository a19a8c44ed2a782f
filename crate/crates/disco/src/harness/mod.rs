//! Batch experiment harness: scenario execution with per-run CSV series and
//! aggregate JSON reports, seeded generator derivation, the random-instance
//! lemma battery, and bound-shape reporting.

pub mod lemmas;
pub mod report;
pub mod rng;
pub mod scenario;

use std::path::PathBuf;

/// Environment variable that overrides the output directory of every CLI
/// subcommand.
pub const OUT_DIR_ENV: &str = "DISCO_OUT_DIR";

/// Output directory resolution: the environment variable wins, then the
/// explicit flag, then `./out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    flag.unwrap_or_else(|| PathBuf::from("out"))
}
