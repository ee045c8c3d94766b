//! Scalar kernels: heteroclinic profile, Lambert W, interaction constant,
//! and the correction kernels used by the improved layer approximation.

pub mod correction;
pub mod heteroclinic;
pub mod interaction;
pub mod lambert;

pub use correction::{build_correction_kernels, ode_residuals, CorrectionKernels};
pub use heteroclinic::heteroclinic_eval;
pub use interaction::{compute_a_star, InteractionConstant};
pub use lambert::{lambert_w, lambert_w_log, shifted_root};
