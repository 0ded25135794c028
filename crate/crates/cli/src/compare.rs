//! Multi-run learning-curve aggregation.
//!
//! Episode returns from different runs finish at different environment
//! steps, so curves are aligned by binning the step axis: each run
//! contributes its per-bin mean return, carrying the last known value
//! through empty bins. Bins are emitted once every run in an arm group has
//! produced at least one episode, then averaged across runs with the
//! standard error of the mean.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{ensure, Context, Result};

use cmgp_core::agent::{artifacts, RunConfig};

/// One run's arm label and raw (env step, episode return) points.
#[derive(Debug, Clone)]
pub struct RunCurve {
    pub arm: String,
    pub points: Vec<(u64, f64)>,
}

/// Read a run directory's config.json and returns.csv.
pub fn load_run(dir: &Path) -> Result<RunCurve> {
    let config: RunConfig = artifacts::read_json(&dir.join("config.json"))
        .with_context(|| format!("reading {}", dir.join("config.json").display()))?;
    let (header, rows) = artifacts::read_csv(&dir.join("returns.csv"))
        .with_context(|| format!("reading {}", dir.join("returns.csv").display()))?;
    ensure!(
        header == ["step", "episode_return"],
        "unexpected returns.csv header in {}: {:?}",
        dir.display(),
        header
    );
    let points = rows
        .iter()
        .map(|row| {
            let step = row[0].parse::<u64>()?;
            let ret = row[1].parse::<f64>()?;
            Ok((step, ret))
        })
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("parsing {}", dir.join("returns.csv").display()))?;
    Ok(RunCurve {
        arm: config.arm.to_string(),
        points,
    })
}

/// Align runs into per-arm `(bin end step, mean, stderr, arm)` rows,
/// ordered by arm then step.
pub fn aligned_curves(runs: &[RunCurve], bin: u64) -> Vec<(u64, f64, f64, String)> {
    assert!(bin > 0);
    let mut groups: BTreeMap<&str, Vec<&RunCurve>> = BTreeMap::new();
    for run in runs {
        groups.entry(&run.arm).or_default().push(run);
    }

    let mut out = Vec::new();
    for (arm, members) in groups {
        // Per run: mean return of the episodes ending inside each bin.
        let binned: Vec<BTreeMap<u64, f64>> = members
            .iter()
            .map(|run| {
                let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
                for &(step, ret) in &run.points {
                    let end = step.div_ceil(bin) * bin;
                    let slot = sums.entry(end).or_insert((0.0, 0));
                    slot.0 += ret;
                    slot.1 += 1;
                }
                sums.into_iter()
                    .map(|(end, (sum, n))| (end, sum / n as f64))
                    .collect()
            })
            .collect();

        let ends: BTreeSet<u64> = binned.iter().flat_map(|b| b.keys().copied()).collect();
        let mut last: Vec<Option<f64>> = vec![None; binned.len()];
        for end in ends {
            for (i, b) in binned.iter().enumerate() {
                if let Some(&v) = b.get(&end) {
                    last[i] = Some(v);
                }
            }
            // Skip bins that precede some run's first episode.
            let Some(values) = last.iter().copied().collect::<Option<Vec<f64>>>() else {
                continue;
            };
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let stderr = if values.len() < 2 {
                0.0
            } else {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            out.push((end, mean, stderr, arm.to_string()));
        }
    }
    out
}
