//! On-disk formats: `observables.csv`, `density.csv`, `manifest.json` and
//! the sweep `index.json`.
//!
//! CSV files start with `#` comment lines carrying the run summary (crate
//! version, parameters as JSON, schedule, seed, trajectory and failure
//! counts). They hold no timestamps, so re-running a manifest reproduces
//! them byte for byte. Numbers use `{:.16e}` (17 significant digits).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleStatistics;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::{Observable, ObservableSet};
use crate::scaling::SizeCurve;
use crate::trajectory::TrajectorySchedule;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OBSERVABLES_FILE: &str = "observables.csv";
pub const DENSITY_FILE: &str = "density.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub params: ModelParams,
    pub schedule: TrajectorySchedule,
    pub observables: ObservableSet,
    pub master_seed: u64,
    pub n_trajectories: usize,
    pub failures: usize,
    pub wall_clock_seconds: f64,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_header(out: &mut impl Write, stats: &EnsembleStatistics) -> Result<()> {
    writeln!(out, "# feedback-skin {VERSION}")?;
    writeln!(out, "# params {}", serde_json::to_string(&stats.params)?)?;
    writeln!(out, "# schedule {}", serde_json::to_string(&stats.schedule)?)?;
    writeln!(
        out,
        "# master_seed {} trajectories {} failures {}",
        stats.master_seed, stats.n_trajectories, stats.failures
    )?;
    Ok(())
}

pub fn write_observables_csv(path: &Path, stats: &EnsembleStatistics) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_header(&mut file, stats)?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["time".to_string(), "rescaled_time".to_string()];
    for s in &stats.scalars {
        header.push(format!("{}_mean", s.observable.name()));
        header.push(format!("{}_stderr", s.observable.name()));
    }
    w.write_record(&header)?;
    for t in 0..stats.times.len() {
        let mut row = vec![fmt(stats.times[t]), fmt(stats.rescaled_times[t])];
        for s in &stats.scalars {
            row.push(fmt(s.mean[t]));
            row.push(fmt(s.stderr[t]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_density_csv(path: &Path, stats: &EnsembleStatistics) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_header(&mut file, stats)?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["time".to_string()];
    header.extend((0..stats.params.sites).map(|l| format!("site_{l}")));
    w.write_record(&header)?;
    for (t, row) in stats.density_mean.iter().enumerate() {
        let mut rec = vec![fmt(stats.times[t])];
        rec.extend(row.iter().map(|&x| fmt(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the two CSV files and the manifest into `dir`.
pub fn write_run(dir: &Path, stats: &EnsembleStatistics, wall_clock_seconds: f64) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    write_observables_csv(&dir.join(OBSERVABLES_FILE), stats)?;
    write_density_csv(&dir.join(DENSITY_FILE), stats)?;
    let manifest = RunManifest {
        version: VERSION.to_string(),
        params: stats.params.clone(),
        schedule: stats.schedule.clone(),
        observables: stats.observables,
        master_seed: stats.master_seed,
        n_trajectories: stats.n_trajectories,
        failures: stats.failures,
        wall_clock_seconds,
        outputs: vec![OBSERVABLES_FILE.into(), DENSITY_FILE.into(), MANIFEST_FILE.into()],
    };
    manifest.write(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Parsed `observables.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservablesTable {
    pub times: Vec<f64>,
    pub rescaled_times: Vec<f64>,
    /// Observable → (mean, stderr) columns.
    pub columns: BTreeMap<Observable, (Vec<f64>, Vec<f64>)>,
}

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| format_error(path, e.to_string()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| format_error(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| format_error(path, format!("bad number: {e}")))?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_observables_csv(path: &Path) -> Result<ObservablesTable> {
    let (header, rows) = read_table(path)?;
    if header.len() < 2 || header[0] != "time" || header[1] != "rescaled_time" {
        return Err(format_error(path, "expected leading columns time,rescaled_time"));
    }
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let mut columns = BTreeMap::new();
    let mut k = 2;
    while k < header.len() {
        let name = header[k]
            .strip_suffix("_mean")
            .ok_or_else(|| format_error(path, format!("unexpected column {}", header[k])))?;
        let observable = Observable::from_name(name)
            .ok_or_else(|| format_error(path, format!("unknown observable {name}")))?;
        if header.get(k + 1).map(String::as_str) != Some(&format!("{name}_stderr")) {
            return Err(format_error(path, format!("missing {name}_stderr column")));
        }
        columns.insert(observable, (col(k), col(k + 1)));
        k += 2;
    }
    Ok(ObservablesTable {
        times: col(0),
        rescaled_times: col(1),
        columns,
    })
}

/// Parsed `density.csv`: times and the time × site mean density.
pub fn read_density_csv(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (header, rows) = read_table(path)?;
    if header.first().map(String::as_str) != Some("time") {
        return Err(format_error(path, "expected leading column time"));
    }
    let times = rows.iter().map(|r| r[0]).collect();
    let density = rows.iter().map(|r| r[1..].to_vec()).collect();
    Ok((times, density))
}

/// A run directory loaded back for analysis.
#[derive(Clone, Debug)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub observables: ObservablesTable,
}

impl LoadedRun {
    pub fn curve(&self, observable: Observable) -> Result<SizeCurve> {
        let (mean, stderr) = self.observables.columns.get(&observable).ok_or_else(|| {
            format_error(
                &self.dir.join(OBSERVABLES_FILE),
                format!("no {} column", observable.name()),
            )
        })?;
        Ok(SizeCurve {
            sites: self.manifest.params.sites,
            tau: self.manifest.params.tau(),
            rescaled_times: self.observables.rescaled_times.clone(),
            values: mean.clone(),
            stderr: stderr.clone(),
        })
    }
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest = RunManifest::read(&dir.join(MANIFEST_FILE))?;
    let observables = read_observables_csv(&dir.join(OBSERVABLES_FILE))?;
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        manifest,
        observables,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub sites: usize,
    pub tilt: f64,
    pub gamma: f64,
    pub theta: f64,
    /// Run directory relative to the index.
    pub dir: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub version: String,
    pub runs: Vec<SweepEntry>,
}

impl SweepIndex {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| format_error(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Run directories named by an analysis input: a sweep root with
/// `index.json`, a single run directory, or a list of either.
pub fn collect_runs(inputs: &[PathBuf]) -> Result<Vec<LoadedRun>> {
    let mut runs = Vec::new();
    for input in inputs {
        let index = input.join(INDEX_FILE);
        if index.is_file() {
            for entry in SweepIndex::read(&index)?.runs {
                runs.push(load_run(&input.join(&entry.dir))?);
            }
        } else if input.join(MANIFEST_FILE).is_file() {
            runs.push(load_run(input)?);
        } else {
            return Err(Error::InvalidConfig(format!(
                "{} holds neither {INDEX_FILE} nor {MANIFEST_FILE}",
                input.display()
            )));
        }
    }
    Ok(runs)
}
