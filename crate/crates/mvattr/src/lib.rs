//! Set-valued dynamics toolkit and implicit-step laboratory for 2D
//! incompressible flow on the torus.

pub mod euler;
pub mod spectral;
