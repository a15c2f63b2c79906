//! Cross-section meshes and the transverse ground state `(λ₁(ω), φ₁)`.

mod ground_state;
mod mesh;
mod shape;

pub use ground_state::{
    circular_identity_residual, scale_eigenvalue_check, section_form, solve_ground_state,
    symmetry_moments, twist_magnitude, GroundState,
};
pub use mesh::{build_mesh, CrossSectionMesh, PINNED};
pub use shape::CrossSectionShape;
