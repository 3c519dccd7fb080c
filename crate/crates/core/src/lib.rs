pub mod acceptance;
pub mod conditioning;
pub mod esprit;
pub mod expmodel;
pub mod interpolation;
pub mod numkernel;
pub mod pde;
pub mod spectral;
