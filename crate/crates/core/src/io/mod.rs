//! File formats: point clouds (LAS, CSV), scene configuration (TOML) and
//! metric reports (JSON, CSV).

pub mod config;
pub mod csv;
pub mod las;
pub mod report;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PointCloud;

pub use config::{parse_config, read_config, SceneConfig};
pub use self::csv::{read_csv, write_csv};
pub use las::{read_las, write_las, LasWriteOptions};
pub use report::{write_report, MetricsReport, ReportFormat};

/// Point cloud file type, picked from the extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Csv,
    Las,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("csv") => Ok(CloudFormat::Csv),
            Some("las") => Ok(CloudFormat::Las),
            _ => Err(Error::Format(format!(
                "cannot tell the point cloud format of {}; expected a .csv or .las extension",
                path.display()
            ))),
        }
    }
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    match CloudFormat::from_path(path)? {
        CloudFormat::Csv => read_csv(path),
        CloudFormat::Las => read_las(path),
    }
}

pub fn write_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    match format {
        CloudFormat::Csv => write_csv(cloud, path),
        CloudFormat::Las => write_las(cloud, path, &LasWriteOptions::default()),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &to_json(value)?)
}

/// Writes `bytes` to a sibling temporary file, then renames it into place
/// so readers never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_from_extension() {
        assert_eq!(CloudFormat::from_path(Path::new("a.LAS")).unwrap(), CloudFormat::Las);
        assert_eq!(CloudFormat::from_path(Path::new("a.csv")).unwrap(), CloudFormat::Csv);
        assert!(CloudFormat::from_path(Path::new("a.laz")).is_err());
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let e = write_atomic(Path::new("/nonexistent-dir/x/out.txt"), b"x").unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
