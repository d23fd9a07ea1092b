//! 2D Boltzmann transport on unstructured triangular meshes with two angular
//! discretisations - adaptive non-standard Haar wavelets on the sphere and
//! filtered spherical harmonics - plus a goal-based (dual-weighted) angular
//! adaptivity loop that stays robust in pure-streaming problems where
//! ray effects silence conventional error metrics.
//!
//! The library is organised around the `examples/` directory: each example is
//! a runnable study of one capability (sphere partition, wavelet transforms,
//! filtered harmonics, projection, meshing, fixed-refinement solves, the
//! adaptive driver). A thin `boltwave` binary drives batch runs from TOML
//! configs and writes VTK/CSV artifacts.

pub mod adapt;
pub mod cli;
pub mod config;
pub mod goal;
pub mod haar;
pub mod harmonics;
pub mod mesh;
pub mod oracle;
pub mod projection;
pub mod report;
pub mod quad;
pub mod sphere;
pub mod transport;
pub mod verify;
