//! Triangle meshes as manifolds: geometry, cotangent Laplacian spectra, and
//! spectral distances.

mod basis;
mod density;
mod eigen;
pub mod io;
mod laplacian;
mod manifold;
mod step;
mod subdivide;
mod trimesh;

pub use basis::{SpectralBasis, WeightKind, BASIS_MAGIC, MIN_GRAD_NORM};
pub use density::{eigenfunction_density, FaceDensity};
pub use eigen::{residual, smallest_eigenpairs, EigenMethod, EigenPairs, DENSE_LIMIT, EIGEN_RESIDUAL_TOL};
pub use io::load_mesh;
pub use laplacian::{build_laplacian, Csr, Laplacian};
pub use manifold::MeshManifold;
pub use step::{mesh_step, project_to_face, StepOutcome};
pub use subdivide::loop_subdivide;
pub use trimesh::{MeshPoint, TriMesh, Vec3, MIN_FACE_AREA_FRACTION};
