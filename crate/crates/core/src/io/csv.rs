//! Header-driven CSV point files.
//!
//! Required columns: `x`, `y`, `z`, `pass_id`. Optional: `intensity`,
//! `gps_time` (an empty optional cell means "absent"). Column names are
//! matched case-insensitively and may appear in any order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Point, PointCloud};

struct Columns {
    x: usize,
    y: usize,
    z: usize,
    pass_id: usize,
    intensity: Option<usize>,
    gps_time: Option<usize>,
}

impl Columns {
    fn resolve(headers: &::csv::StringRecord) -> Result<Self> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
        };
        let need = |name: &str| {
            find(name).ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })
        };
        Ok(Columns {
            x: need("x")?,
            y: need("y")?,
            z: need("z")?,
            pass_id: need("pass_id")?,
            intensity: find("intensity"),
            gps_time: find("gps_time"),
        })
    }
}

fn cell<'a>(rec: &'a ::csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<&'a str> {
    rec.get(idx).map(str::trim).ok_or_else(|| Error::Parse {
        row,
        message: format!("missing `{name}` cell"),
    })
}

fn number(rec: &::csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<f64> {
    let s = cell(rec, idx, row, name)?;
    s.parse::<f64>().map_err(|_| Error::Parse {
        row,
        message: format!("`{name}` value {s:?} is not a number"),
    })
}

fn optional(rec: &::csv::StringRecord, idx: Option<usize>, row: usize, name: &str) -> Result<Option<f64>> {
    match idx {
        None => Ok(None),
        Some(i) => match rec.get(i).map(str::trim) {
            None | Some("") => Ok(None),
            Some(_) => number(rec, i, row, name).map(Some),
        },
    }
}

/// Parses CSV from any reader. Row numbers in errors are 1-based file lines.
pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols = Columns::resolve(&headers)?;
    let mut points = Vec::new();
    let mut rec = ::csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut rec).map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let pass = cell(&rec, cols.pass_id, row, "pass_id")?;
        let pass_id = pass.parse::<u32>().map_err(|_| Error::Parse {
            row,
            message: format!("`pass_id` value {pass:?} is not a non-negative integer"),
        })?;
        let p = Point {
            x: number(&rec, cols.x, row, "x")?,
            y: number(&rec, cols.y, row, "y")?,
            z: number(&rec, cols.z, row, "z")?,
            pass_id,
            intensity: optional(&rec, cols.intensity, row, "intensity")?,
            gps_time: optional(&rec, cols.gps_time, row, "gps_time")?,
        };
        if ![p.x, p.y, p.z].iter().all(|v| v.is_finite()) {
            return Err(Error::Parse {
                row,
                message: "coordinates must be finite".into(),
            });
        }
        points.push(p);
    }
    PointCloud::new(points)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(std::io::BufReader::new(file))
}

/// Serialises a cloud. Optional columns are written only when some point
/// carries them; floats use the shortest representation that round-trips.
pub fn encode_csv(cloud: &PointCloud) -> Vec<u8> {
    use std::fmt::Write;
    let with_intensity = cloud.points().iter().any(|p| p.intensity.is_some());
    let with_time = cloud.points().iter().any(|p| p.gps_time.is_some());
    let mut s = String::from("x,y,z,pass_id");
    if with_intensity {
        s.push_str(",intensity");
    }
    if with_time {
        s.push_str(",gps_time");
    }
    s.push('\n');
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for p in cloud.points() {
        let _ = write!(s, "{},{},{},{}", p.x, p.y, p.z, p.pass_id);
        if with_intensity {
            let _ = write!(s, ",{}", opt(p.intensity));
        }
        if with_time {
            let _ = write!(s, ",{}", opt(p.gps_time));
        }
        s.push('\n');
    }
    s.into_bytes()
}

pub fn write_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), &encode_csv(cloud))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<PointCloud> {
        parse_csv(s.as_bytes())
    }

    #[test]
    fn minimal_file() {
        let c = parse("x,y,z,pass_id\n1,2,3,0").unwrap();
        assert_eq!(c.points(), &[Point::new(1.0, 2.0, 3.0, 0)]);
    }

    #[test]
    fn pass_set_and_optional_columns() {
        let c = parse("pass_id,Z,y,x,gps_time\n0,1,1,1,\n3,2,2,2,5.5\n").unwrap();
        assert_eq!(c.pass_ids().iter().copied().collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(c.points()[0].gps_time, None);
        assert_eq!(c.points()[1].gps_time, Some(5.5));
        assert_eq!(c.points()[1].x, 2.0);
    }

    #[test]
    fn missing_column() {
        match parse("x,y,z\n1,2,3") {
            Err(Error::Schema { column }) => assert_eq!(column, "pass_id"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_row() {
        match parse("x,y,z,pass_id\n1,2,3,0\n1,abc,3,0\n") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x,y,z,pass_id\n1,2,3,\n"), Err(Error::Parse { row: 2, .. })));
        assert!(matches!(parse("x,y,z,pass_id\n1,2,3,-1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("x,y,z,pass_id\n1,2,inf,1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn encode_round_trips_exactly() {
        let mut p = Point::new(0.1 + 0.2, -1e-9, 123456.789012345, 4);
        p.intensity = Some(17.0);
        let c = PointCloud::new(vec![p, Point::new(1.0, 2.0, 3.0, 5)]).unwrap();
        assert_eq!(parse_csv(&encode_csv(&c)[..]).unwrap(), c);
    }
}
