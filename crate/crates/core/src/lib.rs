//! Ground states of a minimally coupled atom–photon Hamiltonian on a truncated
//! Fock space: model assembly, Krylov and dense eigensolvers, complex-coupling
//! eigenvalue tracking, perturbation series and scaling checks.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`.

pub mod assembly;
pub mod atom;
pub mod error;
pub mod expansions;
pub mod io;
pub mod models;
pub mod photon;
pub mod scalar;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = scalar::Cx<f64>;
pub type Mode64 = photon::Mode<f64>;
pub type ModeGrid64 = photon::ModeGrid<f64>;
pub type FockBasis64 = photon::FockBasis<f64>;
pub type FockCaps64 = photon::FockCaps<f64>;
pub type SparseOperator64 = sparse::SparseOperator<f64>;
pub type Potential64 = atom::Potential<f64>;
pub type Lattice64 = atom::Lattice<f64>;
pub type AtomConfig64 = atom::AtomConfig<f64>;
pub type AtomModel64 = atom::AtomModel<f64>;
pub type HypothesisReport64 = atom::HypothesisReport<f64>;
pub type PhotonConfig64 = assembly::PhotonConfig<f64>;
pub type ModelConfig64 = assembly::ModelConfig<f64>;
pub type ModelFactors64 = assembly::ModelFactors<f64>;
pub type QedModelSpec64 = assembly::QedModelSpec<f64>;
pub type CouplingTerms64 = assembly::CouplingTerms<f64>;
pub type AssembledHamiltonian64 = assembly::AssembledHamiltonian<f64>;
pub type SpectralResult64 = spectral::SpectralResult<f64>;
pub type RankOneProjection64 = spectral::RankOneProjection<f64>;
pub type Track64 = spectral::Track<f64>;
pub type SeriesCoefficients64 = expansions::SeriesCoefficients<f64>;
pub type IrStudy64 = expansions::IrStudy<f64>;
pub type AlphaScan64 = expansions::AlphaScan<f64>;
pub type BetaScan64 = expansions::BetaScan<f64>;
