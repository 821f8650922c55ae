//! Truncated Fourier lattice, field representations, norms, action/angle
//! maps, phase rotations and the physical/Fourier transform pair.

mod field;
mod lattice;
mod transform;

pub use field::{ActionVector, FieldRecord, FourierField, PhaseVector};
pub use lattice::{Lattice, LatticeDescriptor, ORDERING_VERSION};
pub use transform::{smooth_size, to_fourier, to_physical, Grid, PhysicalField};
