//! Run-artifact serialization: atomic file writes, CSV logs, and the JSON
//! records other commands read back.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::Genome;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("artifact io: {0}")]
    Io(#[from] std::io::Error),
    #[error("artifact json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("artifact format: {0}")]
    Format(String),
}

/// Write `bytes` to `path` via a temporary file in the same directory plus
/// an atomic rename, so readers never observe a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| ArtifactError::Io(e.error))?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), ArtifactError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, ArtifactError> {
    let bytes = fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Write a CSV with the given header line (no trailing newline needed) and
/// pre-rendered data rows.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<(), ArtifactError>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut out = String::with_capacity(1024);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row.as_ref());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Parse a simple numeric CSV produced by [`write_csv`]: returns the header
/// fields and one `Vec<String>` per row.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), ArtifactError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ArtifactError::Format(format!("{}: empty csv", path.display())))?;
    let header: Vec<String> = header.split(',').map(str::to_owned).collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_owned).collect();
        if fields.len() != header.len() {
            return Err(ArtifactError::Format(format!(
                "{}: row width {} does not match header width {}",
                path.display(),
                fields.len(),
                header.len()
            )));
        }
        rows.push(fields);
    }
    Ok((header, rows))
}

/// The evolved programs of a run: genes widened to f64 plus the dimensions
/// needed to re-instantiate and render them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramsArtifact {
    pub state_dim: usize,
    pub action_dim: usize,
    /// One genome per action dimension.
    pub genomes: Vec<Vec<f64>>,
}

impl ProgramsArtifact {
    pub fn from_genomes<T: Scalar>(genomes: &[Genome<T>], state_dim: usize) -> Self {
        ProgramsArtifact {
            state_dim,
            action_dim: genomes.len(),
            genomes: genomes
                .iter()
                .map(|g| g.genes().iter().map(|v| v.to_f64_lossless()).collect())
                .collect(),
        }
    }

    pub fn to_genomes<T: Scalar>(&self) -> Vec<Genome<T>> {
        self.genomes
            .iter()
            .map(|genes| Genome::new(genes.iter().map(|&v| T::from_f64_lossy(v)).collect()))
            .collect()
    }
}

/// Final deterministic evaluation summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub episodes: usize,
    pub mean: f64,
    pub stderr: f64,
    pub returns: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_writes_replace_existing_files_completely() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_atomic(&path, b"long old contents that should vanish").unwrap();
        write_atomic(&path, b"new").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"new");
    }

    #[test]
    fn csv_round_trips_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("returns.csv");
        write_csv(
            &path,
            "step,episode_return",
            ["12,0.5", "30,-1.25"].iter(),
        )
        .unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["step", "episode_return"]);
        assert_eq!(rows, vec![vec!["12", "0.5"], vec!["30", "-1.25"]]);
    }

    #[test]
    fn ragged_csv_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "a,b\n1,2\n3\n").unwrap();
        assert!(read_csv(&path).is_err());
    }

    #[test]
    fn programs_artifact_round_trips_genes() {
        let genomes = vec![
            Genome::new(vec![1.5_f32, -3.25, 9.0]),
            Genome::new(vec![-11.5_f32, 0.5, 2.0]),
        ];
        let artifact = ProgramsArtifact::from_genomes(&genomes, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("programs.json");
        write_json(&path, &artifact).unwrap();
        let back: ProgramsArtifact = read_json(&path).unwrap();
        assert_eq!(back.state_dim, 2);
        assert_eq!(back.action_dim, 2);
        let restored: Vec<Genome<f32>> = back.to_genomes();
        assert_eq!(restored, genomes);
    }
}
