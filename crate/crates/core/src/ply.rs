//! ASCII PLY import/export of `x y z` vertices.
//!
//! Coordinates are written with the shortest representation that parses back
//! to the same `f64`, so `read(write(c))` is bit-exact. A known sensor origin
//! travels as a `comment sensor_origin x y z` header line.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::cloud::PointCloud;
use crate::se3::Vec3;

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn perr(line: usize, msg: impl Into<String>) -> PlyError {
    PlyError::Parse { line, msg: msg.into() }
}

pub fn to_string(c: &PointCloud) -> String {
    let mut s = String::with_capacity(64 + c.len() * 48);
    s.push_str("ply\nformat ascii 1.0\n");
    if let Some(o) = c.sensor_origin {
        let _ = writeln!(s, "comment sensor_origin {} {} {}", o.x, o.y, o.z);
    }
    let _ = writeln!(s, "element vertex {}", c.len());
    s.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in &c.points {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

pub fn parse(text: &str) -> Result<PointCloud, PlyError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(perr(1, "missing 'ply' magic")),
    }
    let mut vertex_count: Option<usize> = None;
    let mut in_vertex = false;
    let mut props: Vec<String> = Vec::new();
    let mut saw_end = false;
    let mut sensor_origin = None;
    for (n, raw) in lines.by_ref() {
        let l = raw.trim();
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(perr(n, "only ascii PLY is supported"));
                }
            }
            Some("comment") if tok.next() == Some("sensor_origin") => {
                let v: Vec<f64> = tok.filter_map(|t| t.parse().ok()).collect();
                match v[..] {
                    [x, y, z] if v.iter().all(|c| c.is_finite()) => sensor_origin = Some(Vec3::new(x, y, z)),
                    _ => return Err(perr(n, "sensor_origin needs three finite numbers")),
                }
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok.next().ok_or_else(|| perr(n, "element without name"))?;
                let count: usize = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| perr(n, "bad element count"))?;
                in_vertex = name == "vertex";
                if in_vertex {
                    vertex_count = Some(count);
                } else if count > 0 && vertex_count.is_none() {
                    return Err(perr(n, "elements before 'vertex' are not supported"));
                }
            }
            Some("property") => {
                if in_vertex {
                    let ty = tok.next().ok_or_else(|| perr(n, "property without type"))?;
                    if ty == "list" {
                        return Err(perr(n, "list properties on vertices are not supported"));
                    }
                    let name = tok.next().ok_or_else(|| perr(n, "property without name"))?;
                    props.push(name.to_string());
                }
            }
            Some("end_header") => {
                saw_end = true;
                break;
            }
            Some(other) => return Err(perr(n, format!("unexpected header keyword '{other}'"))),
        }
    }
    if !saw_end {
        return Err(perr(text.lines().count(), "missing end_header"));
    }
    let count = vertex_count.ok_or_else(|| perr(1, "no vertex element"))?;
    let idx = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| perr(1, format!("vertex property '{name}' missing")))
    };
    let (ix, iy, iz) = (idx("x")?, idx("y")?, idx("z")?);

    let mut points = Vec::with_capacity(count);
    for (n, raw) in lines {
        if points.len() == count {
            break;
        }
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        let vals: Vec<&str> = l.split_whitespace().collect();
        if vals.len() < props.len() {
            return Err(perr(n, format!("expected {} values, got {}", props.len(), vals.len())));
        }
        let get = |i: usize| -> Result<f64, PlyError> {
            let v: f64 = vals[i].parse().map_err(|_| perr(n, format!("bad number '{}'", vals[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(n, "non-finite coordinate"))
            }
        };
        points.push(Vec3::new(get(ix)?, get(iy)?, get(iz)?));
    }
    if points.len() != count {
        return Err(perr(text.lines().count(), format!("expected {count} vertices, got {}", points.len())));
    }
    let cloud = PointCloud::from_points(points);
    Ok(match sensor_origin {
        Some(o) => cloud.with_sensor_origin(o),
        None => cloud,
    })
}

pub fn write(path: impl AsRef<Path>, c: &PointCloud) -> Result<(), PlyError> {
    std::fs::write(path, to_string(c))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<PointCloud, PlyError> {
    parse(&std::fs::read_to_string(path)?)
}
