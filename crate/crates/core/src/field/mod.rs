//! Two-layer Allen-Cahn approximation around the dilated minimal surface:
//! Fermi chart, layer approximations, glued quadrant field, its residual
//! and energy.

pub mod approx;
pub mod chart;
pub mod decomp;
pub mod energy;
pub mod quadrant;

pub use approx::{build_heights, cutoff, AcApproximation, InterfaceHeights, Layer};
pub use chart::{FermiChart, FermiPoint};
pub use decomp::{error_far_field, gamma_bar, residual_layer_decomposition, DecompositionOptions, FarFieldReport, LayerDecomposition};
pub use energy::{energy_ball, log_radii, sphere_area, EnergyReport};
pub use quadrant::{residual_grid, residual_point, residual_point_richardson, AxisymmetricField, QuadrantGrid};
