//! Straight-line motion on a triangle mesh by edge unfolding.

use super::trimesh::{add, cross, dot3, norm3, scale, sub, MeshPoint, TriMesh, Vec3};
use crate::error::{Error, Result};

/// Upper bound on face crossings in one step.
const MAX_CROSSINGS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub point: MeshPoint,
    /// Arc length actually travelled.
    pub travelled: f64,
    /// The step was cut short at a boundary edge.
    pub hit_boundary: bool,
}

/// Barycentric rate of change of an in-plane displacement `v` on `face`.
fn bary_velocity(mesh: &TriMesh, face: usize, v: Vec3) -> [f64; 3] {
    let [p0, p1, p2] = mesh.corners(face);
    let (e1, e2) = (sub(p1, p0), sub(p2, p0));
    let (a, b, c) = (dot3(e1, e1), dot3(e1, e2), dot3(e2, e2));
    let (r1, r2) = (dot3(v, e1), dot3(v, e2));
    let det = a * c - b * b;
    let al = (c * r1 - b * r2) / det;
    let be = (a * r2 - b * r1) / det;
    [-al - be, al, be]
}

/// Remove the normal component of `v` with respect to `face`.
pub fn project_to_face(mesh: &TriMesh, face: usize, v: &[f64]) -> Vec3 {
    let n = mesh.normals[face];
    let w = [v[0], v[1], v[2]];
    sub(w, scale(n, dot3(w, n)))
}

/// Advance `x` by the in-plane vector `v`, rotating the remaining displacement
/// about each crossed edge into the next face. Stops at boundary edges.
pub fn mesh_step(mesh: &TriMesh, x: &MeshPoint, v: &[f64]) -> Result<StepOutcome> {
    if v.len() != 3 || !v.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite(format!("mesh step vector {v:?}")));
    }
    let mut face = x.face;
    let mut bary = x.bary;
    let mut dir = project_to_face(mesh, face, v);
    let total = norm3(dir);
    let mut remaining = total;
    let mut travelled = 0.0;
    if total == 0.0 {
        return Ok(StepOutcome {
            point: x.clone(),
            travelled: 0.0,
            hit_boundary: false,
        });
    }
    dir = scale(dir, 1.0 / total);
    for _ in 0..MAX_CROSSINGS {
        let db = bary_velocity(mesh, face, dir);
        // Arc length until the first barycentric weight reaches zero.
        let mut exit: Option<(usize, f64)> = None;
        for k in 0..3 {
            if db[k] < 0.0 {
                let s = (bary[k] / -db[k]).max(0.0);
                if exit.is_none_or(|(_, e)| s < e) {
                    exit = Some((k, s));
                }
            }
        }
        match exit {
            Some((edge, s)) if s < remaining => {
                for k in 0..3 {
                    bary[k] += s * db[k];
                }
                bary[edge] = 0.0;
                travelled += s;
                remaining -= s;
                let Some(next) = mesh.neighbors[face][edge] else {
                    return Ok(StepOutcome {
                        point: MeshPoint::new(mesh, face, bary),
                        travelled,
                        hit_boundary: true,
                    });
                };
                let (a, b) = (mesh.faces[face][(edge + 1) % 3], mesh.faces[face][(edge + 2) % 3]);
                let (wa, wb) = (bary[(edge + 1) % 3], bary[(edge + 2) % 3]);
                // Rotate the direction about the shared edge.
                let pa = mesh.vertices[a];
                let e = sub(mesh.vertices[b], pa);
                let eu = scale(e, 1.0 / norm3(e));
                let out_old = cross(eu, mesh.normals[face]);
                let out_new = cross(eu, mesh.normals[next]);
                let along = dot3(dir, eu);
                let across = dot3(dir, out_old);
                dir = add(scale(eu, along), scale(out_new, across));
                let nd = norm3(dir);
                dir = scale(dir, 1.0 / nd);
                let tri = mesh.faces[next];
                let mut nb = [0.0; 3];
                for k in 0..3 {
                    if tri[k] == a {
                        nb[k] = wa;
                    } else if tri[k] == b {
                        nb[k] = wb;
                    }
                }
                face = next;
                bary = nb;
                dir = project_to_face(mesh, face, &dir);
                let nd = norm3(dir);
                if nd == 0.0 {
                    break;
                }
                dir = scale(dir, 1.0 / nd);
            }
            _ => {
                for k in 0..3 {
                    bary[k] += remaining * db[k];
                }
                travelled += remaining;
                return Ok(StepOutcome {
                    point: MeshPoint::new(mesh, face, bary),
                    travelled,
                    hit_boundary: false,
                });
            }
        }
    }
    Err(Error::Mesh(format!(
        "mesh step from face {} did not terminate after {MAX_CROSSINGS} crossings",
        x.face
    )))
}
