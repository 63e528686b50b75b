//! ASCII PCD and CSV point clouds with fields `x y z intensity [ring]`.

use std::fs;
use std::path::Path;

use super::IoError;
use crate::cloud::PointCloud;
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    Pcd,
    Csv,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self, IoError> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pcd") => Ok(CloudFormat::Pcd),
            Some("csv") => Ok(CloudFormat::Csv),
            _ => Err(IoError::UnknownFormat(path.display().to_string())),
        }
    }
}

pub fn read_cloud(path: &Path) -> Result<PointCloud, IoError> {
    let format = CloudFormat::from_path(path)?;
    let text = fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    match format {
        CloudFormat::Pcd => parse_pcd(&text),
        CloudFormat::Csv => parse_csv(&text),
    }
}

pub fn write_cloud(cloud: &PointCloud, path: &Path) -> Result<(), IoError> {
    let text = match CloudFormat::from_path(path)? {
        CloudFormat::Pcd => format_pcd(cloud),
        CloudFormat::Csv => format_csv(cloud),
    };
    fs::write(path, text).map_err(|e| IoError::file(path, e))
}

fn push_row(out: &mut String, cloud: &PointCloud, i: usize, sep: char) {
    use std::fmt::Write;
    let p = cloud.points()[i];
    // `{}` on f64 prints the shortest string that parses back exactly.
    let _ = write!(out, "{}{sep}{}{sep}{}{sep}{}", p.x, p.y, p.z, cloud.intensities()[i]);
    if let Some(r) = cloud.ring() {
        let _ = write!(out, "{sep}{}", r[i]);
    }
    out.push('\n');
}

pub fn format_pcd(cloud: &PointCloud) -> String {
    let ring = cloud.ring().is_some();
    let n = cloud.len();
    let mut out = String::new();
    out.push_str("# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n");
    if ring {
        out.push_str("FIELDS x y z intensity ring\nSIZE 8 8 8 8 2\nTYPE F F F F U\nCOUNT 1 1 1 1 1\n");
    } else {
        out.push_str("FIELDS x y z intensity\nSIZE 8 8 8 8\nTYPE F F F F\nCOUNT 1 1 1 1\n");
    }
    out.push_str(&format!(
        "WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii\n"
    ));
    for i in 0..n {
        push_row(&mut out, cloud, i, ' ');
    }
    out
}

pub fn format_csv(cloud: &PointCloud) -> String {
    let mut out = String::from(if cloud.ring().is_some() {
        "x,y,z,intensity,ring\n"
    } else {
        "x,y,z,intensity\n"
    });
    for i in 0..cloud.len() {
        push_row(&mut out, cloud, i, ',');
    }
    out
}

/// Column positions of the recognised fields.
struct Layout {
    xyz: [usize; 3],
    intensity: usize,
    ring: Option<usize>,
    width: usize,
}

impl Layout {
    fn from_names(names: &[&str], line: usize) -> Result<Self, IoError> {
        let find = |n: &str| names.iter().position(|f| f.eq_ignore_ascii_case(n));
        let missing = |n: &str| IoError::MalformedHeader {
            line,
            message: format!("missing field {n:?}"),
        };
        let xyz = [
            find("x").ok_or_else(|| missing("x"))?,
            find("y").ok_or_else(|| missing("y"))?,
            find("z").ok_or_else(|| missing("z"))?,
        ];
        Ok(Self {
            xyz,
            intensity: find("intensity").ok_or_else(|| missing("intensity"))?,
            ring: find("ring"),
            width: names.len(),
        })
    }
}

struct Rows {
    points: Vec<Vec3>,
    intensities: Vec<f64>,
    ring: Option<Vec<u16>>,
}

fn parse_row(tokens: &[&str], layout: &Layout, line: usize, rows: &mut Rows) -> Result<(), IoError> {
    if tokens.len() != layout.width {
        return Err(IoError::FieldCountMismatch {
            line,
            expected: layout.width,
            found: tokens.len(),
        });
    }
    let num = |k: usize| -> Result<f64, IoError> {
        tokens[k].parse::<f64>().map_err(|_| IoError::NonNumericToken {
            line,
            token: tokens[k].to_string(),
        })
    };
    rows.points
        .push(Vec3::new(num(layout.xyz[0])?, num(layout.xyz[1])?, num(layout.xyz[2])?));
    rows.intensities.push(num(layout.intensity)?);
    if let (Some(k), Some(ring)) = (layout.ring, rows.ring.as_mut()) {
        let r = tokens[k].parse::<u16>().map_err(|_| IoError::NonNumericToken {
            line,
            token: tokens[k].to_string(),
        })?;
        ring.push(r);
    }
    Ok(())
}

fn finish(rows: Rows) -> Result<PointCloud, IoError> {
    Ok(PointCloud::new(rows.points, rows.intensities, rows.ring)?)
}

pub fn parse_pcd(text: &str) -> Result<PointCloud, IoError> {
    let mut layout = None;
    let mut declared_points = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut data_started = false;
    for (line, raw) in lines.by_ref() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        let key = it.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = it.collect();
        match key.as_str() {
            "FIELDS" => layout = Some(Layout::from_names(&rest, line)?),
            "POINTS" => {
                declared_points = Some(rest.first().and_then(|v| v.parse::<usize>().ok()).ok_or_else(
                    || IoError::MalformedHeader {
                        line,
                        message: "POINTS needs a non-negative integer".into(),
                    },
                )?)
            }
            "DATA" => {
                if rest.first().map(|v| v.to_ascii_lowercase()) != Some("ascii".into()) {
                    return Err(IoError::MalformedHeader {
                        line,
                        message: format!("only DATA ascii is supported, got {:?}", rest.join(" ")),
                    });
                }
                data_started = true;
                break;
            }
            "VERSION" | "SIZE" | "TYPE" | "COUNT" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
            other => {
                return Err(IoError::MalformedHeader {
                    line,
                    message: format!("unknown header key {other:?}"),
                })
            }
        }
    }
    let Some(layout) = layout else {
        return Err(IoError::MalformedHeader {
            line: 1,
            message: "no FIELDS line".into(),
        });
    };
    if !data_started {
        return Err(IoError::MalformedHeader {
            line: text.lines().count().max(1),
            message: "no DATA line".into(),
        });
    }
    let mut rows = Rows {
        points: Vec::new(),
        intensities: Vec::new(),
        ring: layout.ring.map(|_| Vec::new()),
    };
    for (line, raw) in lines {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        parse_row(&tokens, &layout, line, &mut rows)?;
    }
    if let Some(n) = declared_points {
        if n != rows.points.len() {
            return Err(IoError::PointCountMismatch {
                declared: n,
                found: rows.points.len(),
            });
        }
    }
    finish(rows)
}

pub fn parse_csv(text: &str) -> Result<PointCloud, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let Some((_, header)) = lines.next() else {
        return Err(IoError::MalformedHeader {
            line: 1,
            message: "empty file".into(),
        });
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: &[&str] = if names.len() == 5 {
        &["x", "y", "z", "intensity", "ring"]
    } else {
        &["x", "y", "z", "intensity"]
    };
    if names.len() < 4 || names.len() > 5 {
        return Err(IoError::FieldCountMismatch {
            line: 1,
            expected: 4,
            found: names.len(),
        });
    }
    if names.iter().zip(expected).any(|(a, b)| !a.eq_ignore_ascii_case(b)) {
        return Err(IoError::MalformedHeader {
            line: 1,
            message: format!("expected header {:?}, got {header:?}", expected.join(",")),
        });
    }
    let layout = Layout::from_names(&names, 1)?;
    let mut rows = Rows {
        points: Vec::new(),
        intensities: Vec::new(),
        ring: layout.ring.map(|_| Vec::new()),
    };
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = raw.split(',').map(str::trim).collect();
        parse_row(&tokens, &layout, line, &mut rows)?;
    }
    finish(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_scan, random_scenario};

    #[test]
    fn single_point_pcd_round_trips_exactly() {
        let c = PointCloud::new(vec![Vec3::new(0.1, -2.5e-7, 3.0)], vec![255.0], Some(vec![7])).unwrap();
        assert_eq!(parse_pcd(&format_pcd(&c)).unwrap(), c);
        let plain = PointCloud::from_points(vec![Vec3::new(1.0 / 3.0, 2.0, -0.0)], 12.5).unwrap();
        assert_eq!(parse_pcd(&format_pcd(&plain)).unwrap(), plain);
        assert_eq!(parse_csv(&format_csv(&plain)).unwrap(), plain);
    }

    #[test]
    fn simulated_cloud_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = generate_scan(&random_scenario(9), 0).unwrap();
        for name in ["a.pcd", "a.csv"] {
            let path = dir.path().join(name);
            write_cloud(&c, &path).unwrap();
            let back = read_cloud(&path).unwrap();
            assert_eq!(back.len(), c.len());
            for (p, q) in back.points().iter().zip(c.points()) {
                assert!((p - q).abs().max() <= 1e-6);
            }
            assert_eq!(back.ring(), c.ring());
        }
        assert!(matches!(
            read_cloud(&dir.path().join("a.ply")),
            Err(IoError::UnknownFormat(_))
        ));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        assert!(matches!(
            parse_csv("x,y,z\n1,2,3\n"),
            Err(IoError::FieldCountMismatch { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("x,y,q,intensity\n"),
            Err(IoError::MalformedHeader { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("x,y,z,intensity\n1,2,3,4\n1,2,3\n"),
            Err(IoError::FieldCountMismatch { line: 3, expected: 4, found: 3 })
        ));
        assert!(matches!(
            parse_csv("x,y,z,intensity\n1,2,abc,4\n"),
            Err(IoError::NonNumericToken { line: 2, .. })
        ));
    }

    #[test]
    fn pcd_errors_carry_line_numbers() {
        let head = "VERSION 0.7\nFIELDS x y z intensity\nPOINTS 1\nDATA ascii\n";
        assert!(matches!(
            parse_pcd(&format!("{head}1 2 3\n")),
            Err(IoError::FieldCountMismatch { line: 5, .. })
        ));
        assert!(matches!(
            parse_pcd(&format!("{head}1 2 x 4\n")),
            Err(IoError::NonNumericToken { line: 5, .. })
        ));
        assert!(matches!(
            parse_pcd("VERSION 0.7\nFIELDS x y z\nDATA ascii\n"),
            Err(IoError::MalformedHeader { line: 2, .. })
        ));
        assert!(matches!(
            parse_pcd("FIELDS x y z intensity\nDATA binary\n"),
            Err(IoError::MalformedHeader { line: 2, .. })
        ));
        assert!(matches!(
            parse_pcd("FIELDS x y z intensity\nBOGUS 1\nDATA ascii\n"),
            Err(IoError::MalformedHeader { line: 2, .. })
        ));
        assert!(matches!(
            parse_pcd(&format!("{head}1 2 3 4\n5 6 7 8\n")),
            Err(IoError::PointCountMismatch { declared: 1, found: 2 })
        ));
    }
}
