//! Dynamics of finitely generated polynomial semigroups.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`]: dense complex polynomials, composition, roots, critical values.
//! * [`semigroup`]: generator sets, words, escape radius and the
//!   postcritical boundedness decision procedure.
//! * [`affine`]: the real-affine shadow semigroup, its M-set and the exact
//!   connectedness criteria.
//! * [`raster`]: planar rasters of the escaping region and of the Julia set,
//!   backward (chaos-game) sampling, image and grid dumps.
//! * [`topology`]: connected components of Julia rasters and the
//!   surrounding order between them.
//! * [`hyperbolicity`]: separation of the postcritical cloud from the Julia
//!   set.
//! * [`families`]: constructors for the explicit example families.
//! * [`analysis`]: the end-to-end report consumed by the `psg` CLI.

pub mod affine;
pub mod analysis;
pub mod families;
pub mod hyperbolicity;
pub mod poly;
pub mod raster;
pub mod semigroup;
pub mod topology;

pub use num_complex::Complex64;

pub use poly::{PolyError, Polynomial};
pub use semigroup::{Generator, GeneratorSet, Word};
