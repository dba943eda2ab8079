//! CSV and JSON artifacts, run manifests and atomic output directories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::constants::CTildeEstimate;
use crate::diffusion::{ObservationSet, Trajectory};
use crate::dual::EmpiricalTransition;
use crate::error::{Error, Result};
use crate::filtering::{FilterTrace, MixtureEntry};
use crate::grid::{DensityGrid, MarginalGrid};
use crate::model::{LociShape, MultiIndex};
use crate::smoothing::{SmoothingEntry, SmoothingTrace};

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Columns `m`, `C_tilde`, `std_error`.
pub fn write_constants_csv(path: &Path, rows: &[(MultiIndex, CTildeEstimate)]) -> Result<()> {
    write_rows(
        path,
        &["m", "C_tilde", "std_error"],
        rows.iter()
            .map(|(m, e)| [m.to_string(), e.value().to_string(), e.std_error().to_string()]),
    )
}

/// Columns `origin`, `target`, `probability`, `replicates`.
pub fn write_transition_csv(path: &Path, transition: &EmpiricalTransition) -> Result<()> {
    write_rows(
        path,
        &["origin", "target", "probability", "replicates"],
        transition.mass.iter().map(|(target, p)| {
            [
                transition.origin.to_string(),
                target.to_string(),
                p.to_string(),
                transition.replicates.to_string(),
            ]
        }),
    )
}

/// Coordinate column names `x_<locus>_<allele>`, 1-based.
pub fn coordinate_names(shape: &LociShape) -> Vec<String> {
    shape
        .alleles()
        .iter()
        .enumerate()
        .flat_map(|(l, &k)| (1..=k).map(move |i| format!("x_{}_{i}", l + 1)))
        .collect()
}

pub fn write_trajectory_csv(path: &Path, shape: &LociShape, traj: &Trajectory) -> Result<()> {
    let mut header = vec!["time".to_string()];
    header.extend(coordinate_names(shape));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path,
        &header,
        traj.times.iter().zip(&traj.states).map(|(t, x)| {
            std::iter::once(t.to_string())
                .chain(x.as_slice().iter().map(f64::to_string))
                .collect::<Vec<_>>()
        }),
    )
}

/// Long format: one row per time, locus and allele type (both 1-based).
pub fn write_observations_csv(path: &Path, shape: &LociShape, obs: &ObservationSet) -> Result<()> {
    let mut rows = Vec::new();
    for (t, y) in obs.times.iter().zip(&obs.counts) {
        for (l, range) in shape.ranges().enumerate() {
            for (i, idx) in range.enumerate() {
                rows.push([t.to_string(), (l + 1).to_string(), (i + 1).to_string(), y.get(idx).to_string()]);
            }
        }
    }
    write_rows(path, &["time", "locus", "type", "count"], rows)
}

#[derive(serde::Deserialize)]
struct ObservationRow {
    time: f64,
    locus: usize,
    #[serde(rename = "type")]
    allele: usize,
    count: u32,
}

/// Reads the long format back. Every (time, locus, type) cell must appear exactly once.
pub fn read_observations_csv(path: &Path, shape: &LociShape) -> Result<ObservationSet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut times: Vec<f64> = Vec::new();
    let mut counts: Vec<Vec<Option<u32>>> = Vec::new();
    for (line, row) in reader.deserialize::<ObservationRow>().enumerate() {
        let row = row.map_err(|e| Error::InvalidInput(format!("{} row {}: {e}", path.display(), line + 1)))?;
        if row.locus == 0 || row.locus > shape.num_loci() || row.allele == 0 || row.allele > shape.alleles()[row.locus - 1] {
            return Err(Error::Shape(format!(
                "{} row {}: no allele type {} at locus {}",
                path.display(),
                line + 1,
                row.allele,
                row.locus
            )));
        }
        if times.last() != Some(&row.time) {
            times.push(row.time);
            counts.push(vec![None; shape.total()]);
        }
        let idx = shape.range(row.locus - 1).start + row.allele - 1;
        let cell = &mut counts.last_mut().expect("pushed above")[idx];
        if cell.replace(row.count).is_some() {
            return Err(Error::InvalidInput(format!("{} row {}: duplicate cell", path.display(), line + 1)));
        }
    }
    let counts = counts
        .into_iter()
        .zip(&times)
        .map(|(c, t)| {
            c.into_iter()
                .collect::<Option<Vec<u32>>>()
                .map(MultiIndex::new)
                .ok_or_else(|| Error::InvalidInput(format!("{}: missing cells at time {t}", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationSet::new(shape, times, counts)
}

#[derive(Serialize)]
struct FilterStepJson<'a> {
    index: usize,
    time: f64,
    observation: &'a MultiIndex,
    predictive: Vec<MixtureEntry>,
    filtering: Vec<MixtureEntry>,
}

pub fn write_filter_json(path: &Path, trace: &FilterTrace) -> Result<()> {
    let steps: Vec<FilterStepJson<'_>> = trace
        .steps
        .iter()
        .map(|s| FilterStepJson {
            index: s.index,
            time: s.time,
            observation: &s.observation,
            predictive: s.predictive.entries(),
            filtering: s.filtering.entries(),
        })
        .collect();
    write_json(path, &steps)
}

#[derive(Serialize)]
struct SmoothingStepJson {
    index: usize,
    time: f64,
    components: Vec<SmoothingEntry>,
}

pub fn write_smoothing_json(path: &Path, trace: &SmoothingTrace) -> Result<()> {
    let steps: Vec<SmoothingStepJson> = trace
        .steps
        .iter()
        .map(|s| SmoothingStepJson {
            index: s.index,
            time: s.time,
            components: s.mixture.entries(),
        })
        .collect();
    write_json(path, &steps)
}

/// Columns `x1`, `x2`, `density`; divergent cells are written as `inf`.
pub fn write_grid_csv(path: &Path, grid: &DensityGrid) -> Result<()> {
    write_rows(
        path,
        &["x1", "x2", "density"],
        grid.cells
            .iter()
            .map(|c| [c.x1.to_string(), c.x2.to_string(), c.density.to_string()]),
    )
}

/// Columns `locus` (1-based), `x`, `density`.
pub fn write_marginal_csv(path: &Path, grids: &[MarginalGrid]) -> Result<()> {
    write_rows(
        path,
        &["locus", "x", "density"],
        grids.iter().flat_map(|g| {
            g.bins
                .iter()
                .map(move |(x, d)| [(g.locus + 1).to_string(), x.to_string(), d.to_string()])
        }),
    )
}

pub fn write_filter_diagnostics_csv(path: &Path, trace: &FilterTrace) -> Result<()> {
    write_rows(
        path,
        &[
            "index",
            "time",
            "predictive_components",
            "filtering_components",
            "predictive_pruned_mass",
            "filtering_pruned_mass",
            "log_normalizer",
            "max_rel_std_error",
        ],
        trace.steps.iter().map(|s| {
            let d = &s.diagnostics;
            [
                s.index.to_string(),
                s.time.to_string(),
                d.predictive_components.to_string(),
                d.filtering_components.to_string(),
                d.predictive_pruned_mass.to_string(),
                d.filtering_pruned_mass.to_string(),
                d.log_normalizer.to_string(),
                d.max_rel_std_error.to_string(),
            ]
        }),
    )
}

pub fn write_smoothing_diagnostics_csv(path: &Path, trace: &SmoothingTrace) -> Result<()> {
    write_rows(
        path,
        &["index", "time", "message_components", "message_pruned_mass", "message_log_scale", "components"],
        trace.steps.iter().map(|s| {
            [
                s.index.to_string(),
                s.time.to_string(),
                s.message.len().to_string(),
                s.message.pruned_mass.to_string(),
                s.message.log_scale.to_string(),
                s.mixture.len().to_string(),
            ]
        }),
    )
}

/// Columns `index`, `time`, then one mean per coordinate.
pub fn write_means_csv(path: &Path, shape: &LociShape, rows: &[(usize, f64, Vec<f64>)]) -> Result<()> {
    let mut header = vec!["index".to_string(), "time".to_string()];
    header.extend(coordinate_names(shape));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path,
        &header,
        rows.iter().map(|(i, t, mean)| {
            [i.to_string(), t.to_string()]
                .into_iter()
                .chain(mean.iter().map(f64::to_string))
                .collect::<Vec<_>>()
        }),
    )
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub root_seed: u64,
    pub mc_samples: usize,
    pub replicates: usize,
    pub prune: String,
    pub workers: usize,
    pub started_unix_secs: u64,
    pub wall_clock_secs: f64,
    pub files: Vec<String>,
}

/// Staging directory that replaces `target` only when committed.
#[derive(Debug)]
pub struct StagedDir {
    target: PathBuf,
    staging: PathBuf,
    committed: bool,
}

impl StagedDir {
    /// Refuses to replace an existing non-empty directory that was not
    /// produced by a previous run (no `manifest.json`).
    pub fn create(target: &Path) -> Result<Self> {
        if target.exists() {
            let empty = fs::read_dir(target).map_err(|e| Error::io(target, e))?.next().is_none();
            if !empty && !target.join("manifest.json").exists() {
                return Err(Error::InvalidInput(format!(
                    "output directory {} exists and is not a previous run",
                    target.display()
                )));
            }
        }
        let name = target
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
        Ok(Self {
            target: target.to_path_buf(),
            staging,
            committed: false,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.staging.join(file)
    }

    /// Sorted names of the staged files.
    pub fn files(&self) -> Result<Vec<String>> {
        let mut names = fs::read_dir(&self.staging)
            .map_err(|e| Error::io(&self.staging, e))?
            .map(|e| {
                e.map(|e| e.file_name().to_string_lossy().into_owned())
                    .map_err(|err| Error::io(&self.staging, err))
            })
            .collect::<Result<Vec<_>>>()?;
        names.sort();
        Ok(names)
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| Error::io(&self.target, e))?;
        }
        fs::rename(&self.staging, &self.target).map_err(|e| Error::io(&self.target, e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimplexPoint;

    fn shape() -> LociShape {
        LociShape::new(vec![2, 3]).unwrap()
    }

    #[test]
    fn observations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let obs = ObservationSet::new(
            &shape(),
            vec![0.0, 0.25],
            vec![MultiIndex::new(vec![1, 2, 0, 0, 3]), MultiIndex::new(vec![3, 0, 1, 1, 1])],
        )
        .unwrap();
        write_observations_csv(&path, &shape(), &obs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,locus,type,count\n0,1,1,1\n"));
        assert_eq!(read_observations_csv(&path, &shape()).unwrap(), obs);
    }

    #[test]
    fn observation_reader_rejects_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        fs::write(&path, "time,locus,type,count\n0,1,1,1\n0,1,2,1\n0,2,1,1\n").unwrap();
        assert!(read_observations_csv(&path, &shape()).is_err());
        fs::write(&path, "time,locus,type,count\n0,1,3,1\n").unwrap();
        assert!(matches!(read_observations_csv(&path, &shape()), Err(Error::Shape(_))));
    }

    #[test]
    fn trajectory_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let s = shape();
        let traj = Trajectory {
            times: vec![0.0],
            states: vec![SimplexPoint::barycenter(&s)],
        };
        write_trajectory_csv(&path, &s, &traj).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "time,x_1_1,x_1_2,x_2_1,x_2_2,x_2_3");
    }

    #[test]
    fn staged_dir_promotes_on_commit_only() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("run");
        {
            let staged = StagedDir::create(&target).unwrap();
            fs::write(staged.path("a.txt"), "x").unwrap();
        }
        assert!(!target.exists());
        let staged = StagedDir::create(&target).unwrap();
        fs::write(staged.path("manifest.json"), "{}").unwrap();
        staged.commit().unwrap();
        assert!(target.join("manifest.json").exists());
        // a previous run may be replaced
        let staged = StagedDir::create(&target).unwrap();
        fs::write(staged.path("manifest.json"), "{}").unwrap();
        fs::write(staged.path("b.txt"), "y").unwrap();
        assert_eq!(staged.files().unwrap(), vec!["b.txt", "manifest.json"]);
        staged.commit().unwrap();
        assert!(target.join("b.txt").exists());
        // foreign directories are not
        let foreign = dir.path().join("foreign");
        fs::create_dir(&foreign).unwrap();
        fs::write(foreign.join("keep.txt"), "z").unwrap();
        assert!(StagedDir::create(&foreign).is_err());
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
