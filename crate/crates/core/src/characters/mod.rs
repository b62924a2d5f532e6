//! Additive and multiplicative characters, linearization constants and Gauss sums.

pub mod additive;
pub mod alpha;
pub mod gauss;
pub mod mult;
pub mod theta;

pub use additive::{psi, psi_e, psi_exponent};
pub use alpha::{alpha_of_chi, alpha_of_theta, verify_alpha_chi, verify_alpha_theta, BallCheck};
pub use gauss::{gauss_c0_ps, gauss_c0_sc, ShellGeometry};
pub use mult::MultChar;
pub use theta::{ThetaChar, UnitGroupStructure};
