//! ASCII OFF and OBJ readers (triangles only).
//!
//! Loaded meshes are normalized into the unit box.

use std::path::Path;

use super::trimesh::{TriMesh, Vec3};
use crate::error::{Error, Result};

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: expected a number, got {tok:?}")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: expected an index, got {tok:?}")))
}

/// Parse OFF text. Comments start with `#`.
pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, first) = lines.next().ok_or_else(|| Error::Format("empty OFF file".into()))?;
    let mut counts_line = if first == "OFF" {
        None
    } else if let Some(rest) = first.strip_prefix("OFF") {
        Some((ln, rest.trim()))
    } else {
        return Err(Error::Format(format!("line {ln}: missing OFF header")));
    };
    let (ln, counts) = match counts_line.take() {
        Some(c) if !c.1.is_empty() => c,
        _ => lines.next().ok_or_else(|| Error::Format("OFF file ends before counts".into()))?,
    };
    let c: Vec<&str> = counts.split_whitespace().collect();
    if c.len() < 2 {
        return Err(Error::Format(format!("line {ln}: expected vertex and face counts")));
    }
    let (nv, nf) = (parse_usize(c[0], ln)?, parse_usize(c[1], ln)?);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| Error::Format("OFF file ends inside the vertex list".into()))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(Error::Format(format!("line {ln}: vertex needs 3 coordinates")));
        }
        vertices.push([parse_f64(t[0], ln)?, parse_f64(t[1], ln)?, parse_f64(t[2], ln)?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| Error::Format("OFF file ends inside the face list".into()))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(t.first().copied().unwrap_or(""), ln)?;
        if k != 3 {
            return Err(Error::Format(format!("line {ln}: only triangles are supported, got a {k}-gon")));
        }
        if t.len() < 4 {
            return Err(Error::Format(format!("line {ln}: face needs 3 indices")));
        }
        faces.push([parse_usize(t[1], ln)?, parse_usize(t[2], ln)?, parse_usize(t[3], ln)?]);
    }
    TriMesh::new(vertices, faces)?.normalized()
}

/// Parse OBJ text: `v` and `f` records; texture/normal indices after `/` are
/// ignored, negative indices count from the end.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut t = l.split_whitespace();
        match t.next() {
            Some("v") => {
                let c: Vec<&str> = t.collect();
                if c.len() < 3 {
                    return Err(Error::Format(format!("line {ln}: vertex needs 3 coordinates")));
                }
                vertices.push([parse_f64(c[0], ln)?, parse_f64(c[1], ln)?, parse_f64(c[2], ln)?]);
            }
            Some("f") => {
                let idx: Vec<&str> = t.collect();
                if idx.len() != 3 {
                    return Err(Error::Format(format!(
                        "line {ln}: only triangles are supported, got {} indices",
                        idx.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (k, s) in idx.iter().enumerate() {
                    let head = s.split('/').next().unwrap_or("");
                    let v: i64 = head
                        .parse()
                        .map_err(|_| Error::Format(format!("line {ln}: bad face index {s:?}")))?;
                    let n = vertices.len() as i64;
                    let z = if v > 0 { v - 1 } else { n + v };
                    if v == 0 || z < 0 {
                        return Err(Error::Format(format!("line {ln}: face index {v} out of range")));
                    }
                    tri[k] = z as usize;
                }
                faces.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)?.normalized()
}

/// Read an `.off` or `.obj` file, chosen by extension.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("off") => parse_off(&text),
        Some("obj") => parse_obj(&text),
        _ => Err(Error::Format(format!("{}: expected an .off or .obj mesh", path.display()))),
    }
}

/// Write ASCII OFF.
pub fn write_off(mesh: &TriMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.n_vertices(), mesh.n_faces());
    for v in &mesh.vertices {
        s.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
    }
    for f in &mesh.faces {
        s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA_OFF: &str = "OFF\n# tetrahedron\n4 4 6\n0 0 0\n2 0 0\n0 2 0\n0 0 2\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

    #[test]
    fn off_tetrahedron_is_closed_and_normalized() {
        let m = parse_off(TETRA_OFF).unwrap();
        assert!(m.is_closed());
        assert_eq!(m.vertices[1], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn obj_matches_off() {
        let obj = "v 0 0 0\nv 2 0 0\nv 0 2 0\nv 0 0 2\nf 1 3 2\nf 1/1 2/2 4/3\nf -4 -1 -2\nf 2 3 4\n";
        let a = parse_obj(obj).unwrap();
        let b = parse_off(TETRA_OFF).unwrap();
        assert_eq!(a.faces, b.faces);
        assert_eq!(a.vertices, b.vertices);
    }

    #[test]
    fn quads_are_rejected() {
        let e = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap_err();
        assert!(e.to_string().contains("only triangles"), "{e}");
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").is_err());
    }

    #[test]
    fn off_round_trip() {
        let m = TriMesh::square_grid(3).unwrap();
        let back = parse_off(&write_off(&m)).unwrap();
        assert_eq!(back.faces, m.faces);
        assert_eq!(back.vertices, m.vertices);
    }
}
