//! Discretized photon field: momentum modes below the ultraviolet cutoff, the
//! truncated symmetric Fock space over them, ladder operators and the free
//! field energy.

mod fock;
mod modes;

pub use fock::{
    build_fock_basis, field_energy_operator, ladder_matrix, FockBasis, FockCaps, FockState, LadderKind,
    DEFAULT_BASIS_LIMIT,
};
pub use modes::{build_mode_grid, gauss_legendre, make_polarization, Mode, ModeGrid, Vec3};
