//! Datasets: CSV ingestion, synthetic targets, splits, and manifests.
//!
//! Point CSV formats by manifold:
//! - sphere S²: `lat,lon` in degrees;
//! - torus 𝕋ⁿ: n angle columns in degrees, `(−180, 180]`;
//! - mesh: `face,b0,b1,b2` (face index and barycentric weights);
//! - others: ambient coordinates `x0,x1,...`.
//!
//! Blank lines and lines starting with `#` are skipped, so files may carry
//! a comment header.

mod synthetic;

pub use synthetic::{
    gen_vmf, gen_vmf_mixture, gen_wrapped_gaussian, vmf_entropy, vmf_log_density, vmf_mixture_log_density,
    wrapped_normal_entropy,
    MeshTarget, VmfComponent, WrappedGaussianSpec,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{wrap_angle, wrap_diff, Manifold, ManifoldKind, Point, Space};
use crate::mesh::{MeshManifold, MeshPoint};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<P> {
    pub name: String,
    pub manifold: ManifoldKind,
    pub points: Vec<P>,
    /// Seed of the split that produced this subset, if any.
    pub split_seed: Option<u64>,
}

impl<P: Clone> Dataset<P> {
    pub fn new(name: impl Into<String>, manifold: ManifoldKind, points: Vec<P>) -> Self {
        Dataset {
            name: name.into(),
            manifold,
            points,
            split_seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn subset(&self, idx: &[usize], seed: u64, part: &str) -> Self {
        Dataset {
            name: format!("{}/{part}", self.name),
            manifold: self.manifold.clone(),
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            split_seed: Some(seed),
        }
    }
}

/// Train/valid/test subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits<P> {
    pub train: Dataset<P>,
    pub valid: Dataset<P>,
    pub test: Dataset<P>,
}

/// Shuffle with `seed` and cut 0.8/0.1/0.1 (validation and test sizes
/// rounded, at least one point each).
pub fn split<P: Clone>(data: &Dataset<P>, seed: u64) -> Result<Splits<P>> {
    let n = data.len();
    if n < 10 {
        return Err(Error::Data(format!("need at least 10 points to split, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, 0x5917));
    let n_valid = ((n as f64 * 0.1).round() as usize).max(1);
    let n_test = n_valid;
    let n_train = n - n_valid - n_test;
    Ok(Splits {
        train: data.subset(&idx[..n_train], seed, "train"),
        valid: data.subset(&idx[n_train..n_train + n_valid], seed, "valid"),
        test: data.subset(&idx[n_train + n_valid..], seed, "test"),
    })
}

/// `(lat, lon)` in degrees to a unit vector.
pub fn latlon_to_point(lat: f64, lon: f64) -> Point {
    let (p, l) = (lat.to_radians(), lon.to_radians());
    Point::new([p.cos() * l.cos(), p.cos() * l.sin(), p.sin()])
}

/// Unit vector to `(lat, lon)` in degrees, longitude in `(−180, 180]`.
pub fn point_to_latlon(x: &Point) -> (f64, f64) {
    let c = x.coords();
    let lat = c[2].clamp(-1.0, 1.0).asin().to_degrees();
    let lon = c[1].atan2(c[0]).to_degrees();
    (lat, lon)
}

fn header_and_rows(text: &str) -> Result<(Vec<String>, Vec<(usize, Vec<String>)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Data("empty CSV".into()))?;
    let header = header.split(',').map(|s| s.trim().to_ascii_lowercase()).collect();
    let rows = lines
        .map(|(i, l)| (i + 1, l.split(',').map(|s| s.trim().to_string()).collect()))
        .collect();
    Ok((header, rows))
}

fn number(s: &str, line: usize, col: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: {col} is not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("line {line}: {col} is not finite")));
    }
    Ok(v)
}

/// Parse `lat,lon` CSV text (degrees) into points on S².
pub fn parse_sphere_csv(text: &str, name: &str) -> Result<Dataset<Point>> {
    let (header, rows) = header_and_rows(text)?;
    let lat_i = header.iter().position(|h| h == "lat");
    let lon_i = header.iter().position(|h| h == "lon");
    let (Some(lat_i), Some(lon_i)) = (lat_i, lon_i) else {
        return Err(Error::Data("sphere CSV needs a `lat,lon` header".into()));
    };
    let mut bad = Vec::new();
    let mut points = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if r.len() != header.len() {
            bad.push(format!("line {line}: expected {} fields, got {}", header.len(), r.len()));
            continue;
        }
        match (number(&r[lat_i], line, "lat"), number(&r[lon_i], line, "lon")) {
            (Ok(lat), Ok(lon)) if lat.abs() <= 90.0 => points.push(latlon_to_point(lat, lon)),
            (Ok(lat), Ok(_)) => bad.push(format!("line {line}: latitude {lat} outside [-90, 90]")),
            (Err(e), _) | (_, Err(e)) => bad.push(e.to_string()),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Data(format!("rejected rows: {}", bad.join("; "))));
    }
    Ok(Dataset::new(name, ManifoldKind::Sphere { dim: 2 }, points))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string()
}

pub fn load_sphere_csv(path: &Path) -> Result<Dataset<Point>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    parse_sphere_csv(&text, &file_stem(path))
}

/// Parse `n` angle columns in degrees into points on 𝕋ⁿ (radians in
/// `[0, 2π)`).
pub fn parse_torus_csv(text: &str, n: usize, name: &str) -> Result<Dataset<Point>> {
    let (header, rows) = header_and_rows(text)?;
    if header.len() != n {
        return Err(Error::Data(format!("torus CSV has {} columns, expected {n}", header.len())));
    }
    let mut points = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if r.len() != n {
            return Err(Error::Data(format!("line {line}: expected {n} angles, got {}", r.len())));
        }
        let mut c = Vec::with_capacity(n);
        for (j, s) in r.iter().enumerate() {
            let deg = number(s, line, &header[j])?;
            if !(-180.0..=180.0).contains(&deg) {
                return Err(Error::Data(format!("line {line}: angle {deg} outside (-180, 180]")));
            }
            c.push(wrap_angle(deg.to_radians()));
        }
        points.push(Point::new(c));
    }
    Ok(Dataset::new(name, ManifoldKind::FlatTorus { dim: n }, points))
}

pub fn load_torus_csv(path: &Path, n: usize) -> Result<Dataset<Point>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    parse_torus_csv(&text, n, &file_stem(path))
}

/// CSV text for points of a closed-form space, in the format its loader reads.
pub fn points_to_csv(space: &Space, points: &[Point]) -> String {
    match *space {
        Space::Sphere(2) => latlon_csv(points),
        _ => coords_csv(space, points),
    }
}

fn latlon_csv(points: &[Point]) -> String {
    let mut s = String::from("lat,lon\n");
    for p in points {
        let (lat, lon) = point_to_latlon(p);
        let _ = writeln!(s, "{lat:.15},{lon:.15}");
    }
    s
}

/// Like [`points_to_csv`] but sphere points are written as ambient
/// coordinates, losslessly.
pub fn ambient_csv(space: &Space, points: &[Point]) -> String {
    match *space {
        Space::Sphere(2) => {
            let mut s = String::from("x0,x1,x2\n");
            for p in points {
                let row: Vec<String> = p.coords().iter().map(|c| format!("{c:.17e}")).collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
            s
        }
        _ => coords_csv(space, points),
    }
}

fn coords_csv(space: &Space, points: &[Point]) -> String {
    let mut s = String::new();
    match *space {
        Space::FlatTorus(n) => {
            let cols: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
            let _ = writeln!(s, "{}", cols.join(","));
            for p in points {
                let row: Vec<String> = p.coords().iter().map(|a| format!("{:.15}", wrap_diff(*a).to_degrees())).collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
        }
        _ => {
            let cols: Vec<String> = (0..space.coord_len()).map(|i| format!("x{i}")).collect();
            let _ = writeln!(s, "{}", cols.join(","));
            for p in points {
                let row: Vec<String> = p.coords().iter().map(|c| format!("{c:.17e}")).collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
        }
    }
    s
}

/// Parse points of a closed-form space from [`points_to_csv`] output.
/// Sphere files may use either `lat,lon` or ambient `x0,x1,x2` columns.
pub fn points_from_csv(space: &Space, text: &str) -> Result<Vec<Point>> {
    let latlon = || header_and_rows(text).map(|(h, _)| h.first().map(|c| c != "x0").unwrap_or(true));
    match *space {
        Space::Sphere(2) if latlon()? => Ok(parse_sphere_csv(text, "")?.points),
        Space::FlatTorus(n) => Ok(parse_torus_csv(text, n, "")?.points),
        _ => {
            let (header, rows) = header_and_rows(text)?;
            let n = space.coord_len();
            if header.len() != n {
                return Err(Error::Data(format!("expected {n} coordinate columns, got {}", header.len())));
            }
            rows.into_iter()
                .map(|(line, r)| {
                    if r.len() != n {
                        return Err(Error::Data(format!("line {line}: expected {n} fields")));
                    }
                    let c = r.iter().map(|s| number(s, line, "coordinate")).collect::<Result<Vec<_>>>()?;
                    let p = Point::new(c);
                    space
                        .check_point(&p)
                        .map_err(|e| Error::Data(format!("line {line}: {e}")))?;
                    Ok(p)
                })
                .collect()
        }
    }
}

pub fn mesh_points_to_csv(points: &[MeshPoint]) -> String {
    let mut s = String::from("face,b0,b1,b2\n");
    for p in points {
        let _ = writeln!(s, "{},{:.17e},{:.17e},{:.17e}", p.face, p.bary[0], p.bary[1], p.bary[2]);
    }
    s
}

pub fn mesh_points_from_csv(m: &MeshManifold, text: &str) -> Result<Vec<MeshPoint>> {
    let (header, rows) = header_and_rows(text)?;
    if header != ["face", "b0", "b1", "b2"] {
        return Err(Error::Data("mesh CSV needs a `face,b0,b1,b2` header".into()));
    }
    rows.into_iter()
        .map(|(line, r)| {
            if r.len() != 4 {
                return Err(Error::Data(format!("line {line}: expected 4 fields")));
            }
            let face: usize = r[0]
                .parse()
                .map_err(|_| Error::Data(format!("line {line}: bad face index {:?}", r[0])))?;
            let b = [number(&r[1], line, "b0")?, number(&r[2], line, "b1")?, number(&r[3], line, "b2")?];
            m.mesh
                .point(face, b)
                .map_err(|e| Error::Data(format!("line {line}: {e}")))
        })
        .collect()
}

/// Point CSV reading and writing for any state space.
pub trait PointCsv: Manifold {
    /// Dataset format.
    fn to_csv(&self, points: &[Self::Point]) -> String;
    /// Sample output format (ambient coordinates where they exist).
    fn to_sample_csv(&self, points: &[Self::Point]) -> String {
        self.to_csv(points)
    }
    fn from_csv(&self, text: &str) -> Result<Vec<Self::Point>>;
}

impl PointCsv for Space {
    fn to_csv(&self, points: &[Point]) -> String {
        points_to_csv(self, points)
    }
    fn to_sample_csv(&self, points: &[Point]) -> String {
        ambient_csv(self, points)
    }
    fn from_csv(&self, text: &str) -> Result<Vec<Point>> {
        points_from_csv(self, text)
    }
}

impl PointCsv for MeshManifold {
    fn to_csv(&self, points: &[MeshPoint]) -> String {
        mesh_points_to_csv(points)
    }
    fn from_csv(&self, text: &str) -> Result<Vec<MeshPoint>> {
        mesh_points_from_csv(self, text)
    }
}

/// Sidecar JSON describing a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub manifold: ManifoldKind,
    pub n: usize,
    /// Free-text provenance (generator and parameters, or original source).
    pub source: String,
}

impl Manifest {
    /// `data.csv` → `data.json`.
    pub fn path_for(csv: &Path) -> PathBuf {
        csv.with_extension("json")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

/// Read a closed-form dataset CSV written by [`points_to_csv`] (or a
/// hand-made `lat,lon` / angle file).
pub fn load_points(space: &Space, path: &Path) -> Result<Dataset<Point>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let points = points_from_csv(space, &text)?;
    Ok(Dataset::new(file_stem(path), space.kind(), points))
}

pub fn load_mesh_points(m: &MeshManifold, path: &Path) -> Result<Dataset<MeshPoint>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let points = mesh_points_from_csv(m, &text)?;
    Ok(Dataset::new(file_stem(path), m.kind(), points))
}
