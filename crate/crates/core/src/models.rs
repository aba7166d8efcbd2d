//! Reference model configurations shared by the test suites and the runner.

use crate::assembly::{ModelConfig, PhotonConfig};
use crate::atom::{AtomConfig, Lattice, Potential};
use crate::error::Result;
use crate::photon::{FockCaps, Mode};
use crate::scalar::Real;

/// Atom of dimension one at the origin (V = 0, p = 0) coupled to a single mode
/// of energy ω along ẑ with polarization x̂ and quadrature weight w. At β = 0
/// the model is quadratic and solvable in closed form.
pub fn trivial_single_mode<T: Real>(omega: T, weight: T, n_max: usize) -> Result<ModelConfig<T>> {
    let atom = AtomConfig::single(Potential::Zero, Lattice::point());
    let mode = Mode::new([T::zero(), T::zero(), omega], 1, weight)?;
    Ok(ModelConfig::new(atom, PhotonConfig::explicit(vec![mode], omega * T::lit(2.0), T::zero()), FockCaps::total(n_max)))
}

/// E(g) = (√(ω² + 4ω g² c²) − ω)/2 with c² = w/(2ω).
pub fn trivial_single_mode_energy<T: Real>(omega: T, weight: T, g: T) -> T {
    let c2 = weight / (T::lit(2.0) * omega);
    ((omega * omega + T::lit(4.0) * omega * g * g * c2).sqrt() - omega) / T::lit(2.0)
}

/// One electron in the soft-Coulomb well −1/√(x² + 1) on `nodes` sites of
/// [−10, 10], coupled to a quadrature photon field on [ε, Λ).
pub fn hydrogen_like<T: Real>(nodes: usize, photons: PhotonConfig<T>, caps: FockCaps<T>) -> ModelConfig<T> {
    let atom = AtomConfig::single(Potential::soft_coulomb(), Lattice::line(nodes, T::lit(10.0)));
    ModelConfig::new(atom, photons, caps)
}

/// Photon quadrature on [ε, Λ) with four directions per shell (two of which
/// couple to a one-dimensional atom through their second polarization).
pub fn shell_photons<T: Real>(uv_cutoff: T, ir_cutoff: T, n_radial: usize) -> PhotonConfig<T> {
    PhotonConfig::quadrature(uv_cutoff, ir_cutoff, n_radial, 4)
}

/// Fixed-density photon grid for infrared studies: `n_radial` equal shells on
/// [0, Λ); the cutoff only removes shells.
pub fn fixed_shell_photons<T: Real>(uv_cutoff: T, n_radial: usize) -> PhotonConfig<T> {
    let mut p = PhotonConfig::quadrature(uv_cutoff, T::zero(), n_radial, 4);
    p.ir_cutoff = T::zero();
    p
}

/// The reference hydrogen-like model: 41 sites, Λ = 1, one photon shell, at
/// most two photons. Dimension 41 × 45 = 1845.
pub fn reference_model<T: Real>() -> ModelConfig<T> {
    hydrogen_like(41, shell_photons(T::one(), T::zero(), 1), FockCaps::total(2))
}

/// Harmonic well ω = 1 on 21 sites of [−6, 6].
pub fn harmonic<T: Real>(photons: PhotonConfig<T>, caps: FockCaps<T>) -> ModelConfig<T> {
    let atom = AtomConfig::single(Potential::Harmonic { omega: T::one() }, Lattice::line(21, T::lit(6.0)));
    ModelConfig::new(atom, photons, caps)
}

/// Two electrons in a soft-Coulomb well with soft repulsion on 12 sites (wedge dimension 66).
pub fn two_electron<T: Real>(photons: PhotonConfig<T>, caps: FockCaps<T>) -> ModelConfig<T> {
    let atom = AtomConfig {
        potential: Potential::SoftCoulomb { charge: T::lit(2.0), softening: T::one() },
        interaction: Some(Potential::SoftCoulomb { charge: -T::one(), softening: T::one() }),
        lattice: Lattice::line(12, T::lit(6.0)),
        n_electrons: 2,
    };
    ModelConfig::new(atom, photons, caps)
}

/// Small models below the dense cap used by the oracle and structure suites.
pub fn shipped_models<T: Real>() -> Result<Vec<(&'static str, ModelConfig<T>)>> {
    Ok(vec![
        ("trivial-single-mode", trivial_single_mode(T::one(), T::lit(0.5), 40)?),
        ("hydrogen-like", reference_model()),
        ("hydrogen-like-small", hydrogen_like(21, shell_photons(T::one(), T::zero(), 1), FockCaps::total(2))),
        ("harmonic", harmonic(shell_photons(T::one(), T::zero(), 1), FockCaps::total(2))),
        ("two-electron", two_electron(shell_photons(T::one(), T::zero(), 1), FockCaps::total(1))),
    ])
}
