//! Output formats. Every file starts with a metadata header naming the
//! toolkit version, a hash of the resolved run configuration and the unit
//! convention, so that identical configurations give identical bytes.

pub mod matrix;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rctk_core::specdens::{SpectralDensity, Statistics};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, locale free. Non-finite values print as
/// `NaN`, `inf`, `-inf`; negative zero prints as zero.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Empty field for an absent value.
pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub units: String,
}

impl Meta {
    pub fn new(config: &impl Serialize, units: impl Into<String>) -> Self {
        let bytes = serde_json::to_vec(config).expect("run configurations serialize");
        let hash = Sha256::digest(&bytes);
        let config_sha256 = hash.iter().map(|b| format!("{b:02x}")).collect();
        Self { toolkit: "rctk", version: VERSION, config_sha256, units: units.into() }
    }

    pub fn header_line(&self) -> String {
        format!("# {} {} config_sha256={} units: {}", self.toolkit, self.version, self.config_sha256, self.units)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
    }
    Ok(BufWriter::new(File::create(path).map_err(CliError::io(path))?))
}

/// Writes a CSV table below the metadata header.
pub fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{}", meta.header_line()).map_err(CliError::io(path))?;
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Writes `body` as pretty JSON with a leading `meta` object.
pub fn write_json(path: &Path, meta: &Meta, body: Value) -> Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("meta".into(), serde_json::to_value(meta).expect("meta serializes"));
    match body {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, &Value::Object(obj))
        .map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    writeln!(f).map_err(CliError::io(path))?;
    f.flush().map_err(CliError::io(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

/// Samples of a density file with header `omega,gamma`; `#` lines are
/// comments.
pub fn read_density_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() != 2 || &header[0] != "omega" || &header[1] != "gamma" {
        return Err(CliError::invalid(format!("{}: expected header `omega,gamma`", path.display())));
    }
    let (mut omega, mut gamma) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::invalid(format!("{}: row {}: `{s}` is not a number", path.display(), line + 1)))
        };
        omega.push(parse(&rec[0])?);
        gamma.push(parse(&rec[1])?);
    }
    Ok((omega, gamma))
}

/// Density from a sample file. Statistics default to bosonic when every
/// frequency is nonnegative, fermionic otherwise.
pub fn read_density(path: &Path, statistics: Option<Statistics>) -> Result<SpectralDensity> {
    let (omega, gamma) = read_density_samples(path)?;
    let stats = statistics.unwrap_or(if omega.iter().all(|w| *w >= 0.0) {
        Statistics::BosonicOdd
    } else {
        Statistics::FermionicFullAxis
    });
    Ok(SpectralDensity::grid(omega, gamma, stats)?)
}

/// `omega,gamma` table of `d` at `points`.
pub fn write_density(path: &Path, meta: &Meta, d: &SpectralDensity, points: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = points.iter().map(|&w| vec![num(w), num(d.eval(w))]).collect();
    write_csv(path, meta, &["omega", "gamma"], &rows)
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(!s.contains(','));
        }
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(num(-0.0), num(0.0));
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn hash_tracks_configuration() {
        let a = Meta::new(&serde_json::json!({"x": 1.0}), "eps");
        let b = Meta::new(&serde_json::json!({"x": 1.0}), "eps");
        let c = Meta::new(&serde_json::json!({"x": 1.5}), "eps");
        assert_eq!(a, b);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
        assert!(a.header_line().starts_with("# rctk "));
    }

    #[test]
    fn density_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let meta = Meta::new(&"cfg", "omega_m");
        let d = SpectralDensity::grid(vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 1.0], Statistics::BosonicOdd).unwrap();
        write_density(&p, &meta, &d, &[0.0, 0.5, 1.0]).unwrap();
        let back = read_density(&p, None).unwrap();
        assert_eq!(back.statistics, Statistics::BosonicOdd);
        for w in [0.0, 0.25, 0.5, 0.9] {
            assert_eq!(back.eval(w), d.eval(w));
        }
    }

    #[test]
    fn density_file_needs_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "w,g\n0,1\n1,1\n").unwrap();
        assert!(matches!(read_density(&p, None), Err(CliError::Invalid(_))));
        std::fs::write(&p, "omega,gamma\n-1,1\n1,x\n").unwrap();
        assert!(matches!(read_density(&p, None), Err(CliError::Invalid(_))));
    }
}
