//! The hodograph transformation: pointwise (gradient map and its inverse)
//! and global on grids (discrete Legendre–Fenchel conjugate).

mod conjugate;
mod grid;
mod transform;

pub use conjugate::{
    conjugate_grid, conjugate_grid_bruteforce, default_dual_box, max_affine_sorted, phi_from_initial_data,
};
pub use grid::{format_sig17, GridField, GridSpec, GRID_FORMAT_VERSION, GRID_MAGIC};
pub use transform::{
    forward_point, h_general, inverse_point, transformed_pde_residual, transformed_residual_with, x_of_y,
    HodographImage,
};
