//! Run every config in a directory and aggregate the outcomes.

use std::path::Path;

use anyhow::Context;
use lyapunov_lab::CheckStatus;

use crate::{run_config, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};

#[derive(Debug, Default)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub refused: usize,
    pub error: usize,
}

/// Nonzero exit when any run fails or errors; refusals do not count
/// against the suite.
pub fn run(dir: &Path, out: Option<&Path>, seed: Option<u64>) -> anyhow::Result<u8> {
    let mut configs: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    if let Some(o) = out {
        std::fs::create_dir_all(o)?;
    }
    let mut summary = Summary::default();
    for path in &configs {
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        match run_config(path, None, seed) {
            Ok(record) => {
                let status = record.results[0].check_status();
                match &status {
                    CheckStatus::Pass => summary.pass += 1,
                    CheckStatus::Fail(_) => summary.fail += 1,
                    CheckStatus::Refused(_) => summary.refused += 1,
                }
                println!("{name}: {} ({:.2}s)", status.label(), record.wall_time_seconds);
                if let Some(o) = out {
                    std::fs::write(o.join(name.as_ref()), record.to_toml()?)?;
                }
            }
            Err(e) => {
                summary.error += 1;
                println!("{name}: error: {e:#}");
            }
        }
    }
    println!(
        "suite: {} runs, {} pass, {} fail, {} refused, {} error",
        configs.len(),
        summary.pass,
        summary.fail,
        summary.refused,
        summary.error
    );
    Ok(if summary.error > 0 {
        EXIT_ERROR
    } else if summary.fail > 0 {
        EXIT_FAIL
    } else {
        EXIT_PASS
    })
}
