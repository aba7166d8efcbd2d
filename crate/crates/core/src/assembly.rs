//! Minimally coupled Hamiltonians on atom ⊗ Fock.
//!
//! H(g, β) = Σ_j p_j² + V + H_f + g·Σ_{j,c}(p_j^c A_c(βx_j) + A_c(βx_j) p_j^c) + g²·Σ_{j,c} A_c(βx_j)²
//!
//! The tensor index is atom-major, Fock-minor. The field operator is built
//! from its creation half B as A = B + B†, so every term is conjugate-symmetric
//! bit for bit. The g-independent pieces are kept in [`CouplingTerms`] so that
//! families in g share one assembly.

use std::sync::Arc;

use crate::atom::{build_grid_atom, AtomConfig, AtomModel};
use crate::error::{Error, Result};
use crate::photon::{
    build_fock_basis, build_mode_grid, field_energy_operator, ladder_matrix, FockBasis, FockCaps, LadderKind, Mode,
    ModeGrid, DEFAULT_BASIS_LIMIT,
};
use crate::scalar::{modulus, Cx, Real};
use crate::sparse::{Hermiticity, SparseOperator};

/// Default cap on the dimension of atom ⊗ Fock.
pub const DEFAULT_DIM_LIMIT: usize = 400_000;

/// Default bound on |g|.
pub const DEFAULT_G_HARD_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum PhotonSource<T: Real> {
    /// Product quadrature with `n_radial` equal-width shells on [floor, Λ).
    Quadrature { n_radial: usize, n_angular: usize, floor: T },
    /// Explicit mode list.
    Explicit(Vec<Mode<T>>),
}

/// Photon discretization. Modes below `ir_cutoff` are excluded after the
/// quadrature is laid out, so the shell density does not depend on ε.
/// `scale` dilates the finished grid (k → s k, w → s³ w, cutoffs → s·cutoffs).
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonConfig<T: Real> {
    pub source: PhotonSource<T>,
    pub uv_cutoff: T,
    pub ir_cutoff: T,
    pub scale: T,
}

impl<T: Real> PhotonConfig<T> {
    pub fn quadrature(uv_cutoff: T, ir_cutoff: T, n_radial: usize, n_angular: usize) -> Self {
        PhotonConfig {
            source: PhotonSource::Quadrature { n_radial, n_angular, floor: ir_cutoff },
            uv_cutoff,
            ir_cutoff,
            scale: T::one(),
        }
    }

    pub fn explicit(modes: Vec<Mode<T>>, uv_cutoff: T, ir_cutoff: T) -> Self {
        PhotonConfig { source: PhotonSource::Explicit(modes), uv_cutoff, ir_cutoff, scale: T::one() }
    }

    /// Effective Λ after dilation.
    pub fn effective_uv(&self) -> T {
        self.uv_cutoff * self.scale
    }

    /// Effective ε after dilation.
    pub fn effective_ir(&self) -> T {
        self.ir_cutoff * self.scale
    }

    pub fn with_ir_cutoff(&self, ir: T) -> Self {
        PhotonConfig { ir_cutoff: ir, ..self.clone() }
    }

    pub fn build(&self) -> Result<ModeGrid<T>> {
        if !(self.uv_cutoff > self.ir_cutoff) || self.ir_cutoff < T::zero() {
            return Err(Error::InvalidCutoff { uv: self.uv_cutoff.as_f64(), ir: self.ir_cutoff.as_f64() });
        }
        let base = match &self.source {
            PhotonSource::Quadrature { n_radial, n_angular, floor } => {
                let floor = floor.min(self.ir_cutoff);
                build_mode_grid(self.uv_cutoff, floor, *n_radial, *n_angular)?
            }
            PhotonSource::Explicit(modes) => ModeGrid::from_modes(modes.clone(), self.uv_cutoff, T::zero())?,
        };
        let grid = if self.ir_cutoff > base.ir_cutoff() { base.with_ir_cutoff(self.ir_cutoff)? } else { base };
        if self.scale == T::one() {
            Ok(grid)
        } else {
            grid.dilated(self.scale)
        }
    }
}

/// Factor-space description shared by every coupling and β.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig<T: Real> {
    pub atom: AtomConfig<T>,
    pub photons: PhotonConfig<T>,
    pub caps: FockCaps<T>,
    pub basis_limit: usize,
}

impl<T: Real> ModelConfig<T> {
    pub fn new(atom: AtomConfig<T>, photons: PhotonConfig<T>, caps: FockCaps<T>) -> Self {
        ModelConfig { atom, photons, caps, basis_limit: DEFAULT_BASIS_LIMIT }
    }

    pub fn build(&self) -> Result<ModelFactors<T>> {
        let atom = build_grid_atom(self.atom.clone())?;
        let grid = self.photons.build()?;
        let basis = build_fock_basis(&grid, self.caps.clone(), self.basis_limit)?;
        Ok(ModelFactors { atom, grid, basis })
    }
}

/// Built factor spaces.
#[derive(Debug, Clone)]
pub struct ModelFactors<T: Real> {
    pub atom: AtomModel<T>,
    pub grid: ModeGrid<T>,
    pub basis: FockBasis<T>,
}

impl<T: Real> ModelFactors<T> {
    pub fn dim(&self) -> usize {
        self.atom.dim() * self.basis.len()
    }

    /// φ_at ⊗ Ω.
    pub fn reference_state(&self) -> Vec<Cx<T>> {
        let nf = self.basis.len();
        let mut v = vec![Cx::new(T::zero(), T::zero()); self.dim()];
        for (a, &z) in self.atom.ground().iter().enumerate() {
            v[a * nf] = z;
        }
        v
    }

    fn check(&self) -> Result<()> {
        check_factors(&self.grid, &self.basis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// H(g, β, Λ)
    Generic,
    /// H_{α,Λ} = H(α^{3/2}, α, Λ)
    AlphaForm,
    /// H̃_{α,Λ} = (p + √α A_Λ(x))² + α² V(α ·) + H_f
    AlphaTildeForm,
}

impl Flavor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flavor::Generic => "generic",
            Flavor::AlphaForm => "alpha",
            Flavor::AlphaTildeForm => "alpha-tilde",
        }
    }
}

/// Parameter record identifying one assembled Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct QedModelSpec<T: Real> {
    pub g: Cx<T>,
    pub beta: T,
    pub alpha: Option<T>,
    pub flavor: Flavor,
    pub model: ModelConfig<T>,
    pub g_hard_max: T,
    pub dim_limit: usize,
}

/// g = α^{3/2}; every alpha-form path goes through this function.
pub fn alpha_coupling<T: Real>(alpha: T) -> T {
    alpha.powf(T::lit(1.5))
}

impl<T: Real> QedModelSpec<T> {
    pub fn generic(model: ModelConfig<T>, g: Cx<T>, beta: T) -> Self {
        QedModelSpec {
            g,
            beta,
            alpha: None,
            flavor: Flavor::Generic,
            model,
            g_hard_max: T::lit(DEFAULT_G_HARD_MAX),
            dim_limit: DEFAULT_DIM_LIMIT,
        }
    }

    pub fn alpha_form(model: ModelConfig<T>, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) {
            return Err(Error::Domain(format!("alpha = {alpha} must be non-negative")));
        }
        let mut s = Self::generic(model, Cx::new(alpha_coupling(alpha), T::zero()), alpha);
        s.alpha = Some(alpha);
        s.flavor = Flavor::AlphaForm;
        Ok(s)
    }

    /// H̃ with g = √α, β = 1 on a model whose potential already carries the α scaling.
    pub fn alpha_tilde_form(model: ModelConfig<T>, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) {
            return Err(Error::Domain(format!("alpha = {alpha} must be non-negative")));
        }
        let mut s = Self::generic(model, Cx::new(alpha.sqrt(), T::zero()), T::one());
        s.alpha = Some(alpha);
        s.flavor = Flavor::AlphaTildeForm;
        Ok(s)
    }

    pub fn with_coupling(&self, g: Cx<T>) -> Self {
        QedModelSpec { g, flavor: Flavor::Generic, alpha: None, ..self.clone() }
    }

    pub fn uv_cutoff(&self) -> T {
        self.model.photons.effective_uv()
    }

    pub fn ir_cutoff(&self) -> T {
        self.model.photons.effective_ir()
    }

    pub fn validate(&self) -> Result<()> {
        if !(modulus(self.g) < self.g_hard_max) {
            return Err(Error::Domain(format!("|g| = {} exceeds g_hard_max = {}", modulus(self.g), self.g_hard_max)));
        }
        if !self.beta.is_finite() {
            return Err(Error::Domain("beta must be finite".into()));
        }
        let (uv, ir) = (self.uv_cutoff(), self.ir_cutoff());
        if !(uv > ir) || ir < T::zero() {
            return Err(Error::InvalidCutoff { uv: uv.as_f64(), ir: ir.as_f64() });
        }
        match self.flavor {
            Flavor::Generic => Ok(()),
            Flavor::AlphaForm => {
                let a = self.alpha.ok_or_else(|| Error::Domain("alpha form without alpha".into()))?;
                if self.g != Cx::new(alpha_coupling(a), T::zero()) || self.beta != a {
                    return Err(Error::Domain("alpha form requires g = alpha^{3/2} and beta = alpha".into()));
                }
                Ok(())
            }
            Flavor::AlphaTildeForm => {
                let a = self.alpha.ok_or_else(|| Error::Domain("alpha-tilde form without alpha".into()))?;
                if self.g != Cx::new(a.sqrt(), T::zero()) || self.beta != T::one() {
                    return Err(Error::Domain("alpha-tilde form requires g = sqrt(alpha) and beta = 1".into()));
                }
                Ok(())
            }
        }
    }
}

/// Field components A_c(βx_j) for one electron on the product atomic space ⊗ Fock.
fn electron_vector_potential<T: Real>(
    atom: &AtomModel<T>,
    grid: &ModeGrid<T>,
    basis: &FockBasis<T>,
    beta: T,
    electron: usize,
) -> Result<[SparseOperator<T>; 3]> {
    let na = atom.full_dim();
    let nf = basis.len();
    let dim = na * nf;
    let mut trip: [Vec<(usize, usize, Cx<T>)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, mode) in grid.modes().iter().enumerate() {
        let create = ladder_matrix(basis, i, LadderKind::Create)?;
        let k = [mode.k[0] * beta, mode.k[1] * beta, mode.k[2] * beta];
        let phase = atom.phase_diagonal(k, electron);
        let amp = mode.amplitude();
        for c in 0..3 {
            let coef = amp * mode.pol[c];
            if coef == T::zero() {
                continue;
            }
            for (t, s, sq) in create.triplets() {
                let base = sq * coef;
                for (a, &ph) in phase.iter().enumerate() {
                    trip[c].push((a * nf + t, a * nf + s, ph * base));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(3);
    for t in trip {
        let b = SparseOperator::from_triplets(dim, dim, t, Hermiticity::General)?;
        out.push(b.add(&b.adjoint())?.with_hermiticity(Hermiticity::Hermitian));
    }
    Ok([out.remove(0), out.remove(0), out.remove(0)])
}

fn check_factors<T: Real>(grid: &ModeGrid<T>, basis: &FockBasis<T>) -> Result<()> {
    if basis.n_modes() != grid.len() || basis.mode_energies() != grid.energies().as_slice() {
        return Err(Error::Consistency("Fock basis and mode grid do not match".into()));
    }
    Ok(())
}

/// A_c(βx) = Σ_j A_c(βx_j), c = 0, 1, 2, on the reduced atomic space ⊗ Fock.
pub fn vector_potential_components<T: Real>(
    atom: &AtomModel<T>,
    grid: &ModeGrid<T>,
    basis: &FockBasis<T>,
    beta: T,
) -> Result<[SparseOperator<T>; 3]> {
    check_factors(grid, basis)?;
    let mut acc = electron_vector_potential(atom, grid, basis, beta, 0)?;
    for j in 1..atom.n_electrons() {
        let next = electron_vector_potential(atom, grid, basis, beta, j)?;
        for c in 0..3 {
            acc[c] = acc[c].add(&next[c])?.with_hermiticity(Hermiticity::Hermitian);
        }
    }
    if let Some(w) = atom.embedding() {
        let lift = w.kron(&SparseOperator::identity(basis.len()));
        for a in acc.iter_mut() {
            *a = a.compress(&lift)?;
        }
    }
    Ok(acc)
}

/// g-independent pieces of H(g, β) at fixed β.
#[derive(Debug, Clone)]
pub struct CouplingTerms<T: Real> {
    pub beta: T,
    pub kinetic: SparseOperator<T>,
    pub potential: SparseOperator<T>,
    pub field: SparseOperator<T>,
    /// W₁ = Σ_{j,c} (p_j^c A_c(βx_j) + A_c(βx_j) p_j^c)
    pub cross: SparseOperator<T>,
    /// W₂ = Σ_{j,c} A_c(βx_j)²
    pub diamagnetic: SparseOperator<T>,
    pub dim_atom: usize,
    pub dim_fock: usize,
}

impl<T: Real> CouplingTerms<T> {
    pub fn build(factors: &ModelFactors<T>, beta: T) -> Result<Self> {
        factors.check()?;
        let (atom, grid, basis) = (&factors.atom, &factors.grid, &factors.basis);
        let nf = basis.len();
        let id_f = SparseOperator::identity(nf);
        let id_fh = id_f.clone().with_hermiticity(Hermiticity::Hermitian);
        let full = atom.full_dim() * nf;
        let mut cross = SparseOperator::zero(full, full);
        let mut dia = SparseOperator::zero(full, full);
        for j in 0..atom.n_electrons() {
            let a = electron_vector_potential(atom, grid, basis, beta, j)?;
            for c in 0..3 {
                if let Some(p) = atom.momentum(j, c) {
                    let pf = p.kron(&id_fh);
                    let pa = pf.matmul(&a[c])?;
                    let ap = a[c].matmul(&pf)?;
                    cross = cross.add(&pa.add(&ap)?)?;
                }
                dia = dia.add(&a[c].matmul(&a[c])?)?;
            }
        }
        if let Some(w) = atom.embedding() {
            let lift = w.kron(&id_f);
            cross = cross.compress(&lift)?;
            dia = dia.compress(&lift)?;
        }
        let field = SparseOperator::identity(atom.dim()).kron(&field_energy_operator(basis, grid)?);
        Ok(CouplingTerms {
            beta,
            kinetic: atom.kinetic().kron(&id_f).with_hermiticity(Hermiticity::Hermitian),
            potential: atom.potential().kron(&id_f).with_hermiticity(Hermiticity::Hermitian),
            field: field.with_hermiticity(Hermiticity::Hermitian),
            cross: cross.with_hermiticity(Hermiticity::Hermitian),
            diamagnetic: dia.with_hermiticity(Hermiticity::Hermitian),
            dim_atom: atom.dim(),
            dim_fock: nf,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim_atom * self.dim_fock
    }

    /// H₀ = H_at ⊗ 1 + 1 ⊗ H_f.
    pub fn unperturbed(&self) -> Result<SparseOperator<T>> {
        self.hamiltonian(Cx::new(T::zero(), T::zero()))
    }

    /// (coefficient, term) pairs whose sum, in this order, is H(g).
    pub fn terms(&self, g: Cx<T>) -> [(Cx<T>, &SparseOperator<T>); 5] {
        let one = Cx::new(T::one(), T::zero());
        [
            (one, &self.kinetic),
            (one, &self.potential),
            (one, &self.field),
            (g, &self.cross),
            (g * g, &self.diamagnetic),
        ]
    }

    pub fn hamiltonian(&self, g: Cx<T>) -> Result<SparseOperator<T>> {
        let h = SparseOperator::linear_combination(&self.terms(g))?;
        Ok(h.with_hermiticity(if g.im == T::zero() { Hermiticity::Hermitian } else { Hermiticity::General }))
    }
}

/// Assembled H(g, β, Λ) with its term breakdown.
#[derive(Debug, Clone)]
pub struct AssembledHamiltonian<T: Real> {
    pub matrix: SparseOperator<T>,
    pub spec: QedModelSpec<T>,
    pub terms: Arc<CouplingTerms<T>>,
    /// φ_at ⊗ Ω, the deterministic start vector.
    pub reference: Vec<Cx<T>>,
}

impl<T: Real> AssembledHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_hermitian(&self) -> bool {
        self.matrix.hermiticity() == Hermiticity::Hermitian
    }
}

/// Assembles H(g, β, Λ) from built factors.
pub fn assemble_hamiltonian<T: Real>(spec: &QedModelSpec<T>, factors: &ModelFactors<T>) -> Result<AssembledHamiltonian<T>> {
    spec.validate()?;
    let dim = factors.dim();
    if dim > spec.dim_limit {
        return Err(Error::Capacity { what: "Hamiltonian dimension".into(), size: dim, limit: spec.dim_limit });
    }
    let terms = Arc::new(CouplingTerms::build(factors, spec.beta)?);
    assemble_with_terms(spec, terms, factors.reference_state())
}

/// Assembles H(g) from precomputed β-terms (families in g at fixed β).
pub fn assemble_with_terms<T: Real>(
    spec: &QedModelSpec<T>,
    terms: Arc<CouplingTerms<T>>,
    reference: Vec<Cx<T>>,
) -> Result<AssembledHamiltonian<T>> {
    spec.validate()?;
    if terms.beta != spec.beta {
        return Err(Error::Consistency("coupling terms were built for a different beta".into()));
    }
    if terms.dim() > spec.dim_limit {
        return Err(Error::Capacity { what: "Hamiltonian dimension".into(), size: terms.dim(), limit: spec.dim_limit });
    }
    let matrix = terms.hamiltonian(spec.g)?;
    Ok(AssembledHamiltonian { matrix, spec: spec.clone(), terms, reference })
}

/// H_{α,Λ}, delegating to [`assemble_hamiltonian`] with g = α^{3/2}, β = α.
pub fn assemble_alpha_form<T: Real>(alpha: T, model: &ModelConfig<T>, factors: &ModelFactors<T>) -> Result<AssembledHamiltonian<T>> {
    let spec = QedModelSpec::alpha_form(model.clone(), alpha)?;
    assemble_hamiltonian(&spec, factors)
}

/// How quantities of the original model map onto the dilated one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationMap<T: Real> {
    pub alpha: T,
    /// spec(H̃) = energy_scale · spec(H)
    pub energy_scale: T,
    /// y = position_scale · x
    pub position_scale: T,
    /// k' = momentum_scale · k
    pub momentum_scale: T,
    /// w' = weight_scale · w
    pub weight_scale: T,
}

/// Spec of H̃_{α,α²Λ} realizing the unitary equivalence H̃ ≅ α² H_{α,Λ} on
/// transformed grids: the lattice is dilated by 1/α with potential α² V(α ·),
/// photon modes by k → α²k (weights α⁶), the energy cap by α². Basis orderings
/// are unchanged, so the correspondence on states is the identity on indices.
pub fn dilate_model<T: Real>(spec: &QedModelSpec<T>, alpha: T) -> Result<(QedModelSpec<T>, DilationMap<T>)> {
    if !(alpha > T::zero()) {
        return Err(Error::SingularDilation);
    }
    if spec.flavor != Flavor::AlphaForm {
        return Err(Error::Domain("dilation applies to the alpha form".into()));
    }
    if spec.alpha != Some(alpha) {
        return Err(Error::Domain("dilation parameter differs from the model's alpha".into()));
    }
    let a2 = alpha * alpha;
    let m = &spec.model;
    let mut photons = m.photons.clone();
    photons.scale *= a2;
    let caps = FockCaps { energy_cap: m.caps.energy_cap.map(|e| e * a2), ..m.caps.clone() };
    let model = ModelConfig { atom: m.atom.dilated(alpha)?, photons, caps, basis_limit: m.basis_limit };
    let mut tilde = QedModelSpec::alpha_tilde_form(model, alpha)?;
    tilde.g_hard_max = spec.g_hard_max;
    tilde.dim_limit = spec.dim_limit;
    let map = DilationMap {
        alpha,
        energy_scale: a2,
        position_scale: T::one() / alpha,
        momentum_scale: a2,
        weight_scale: a2 * a2 * a2,
    };
    Ok((tilde, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{Lattice, Potential};
    use crate::photon::FockCaps;
    use crate::scalar::{cx, dot};

    fn small_model(nodes: usize, n_max: usize) -> ModelConfig<f64> {
        let atom = AtomConfig::single(Potential::soft_coulomb(), Lattice::line(nodes, 6.0));
        let modes = vec![
            Mode::new([0.3, 0.4, 0.5], 1, 0.2).unwrap(),
            Mode::new([-0.6, 0.1, 0.2], 2, 0.3).unwrap(),
        ];
        ModelConfig::new(atom, PhotonConfig::explicit(modes, 1.0, 0.0), FockCaps::total(n_max))
    }

    #[test]
    fn single_mode_vacuum_field_fluctuation() {
        // ⟨Ω, A_1(0)² Ω⟩ = w/(2ω) with pol = x̂
        let (w, om) = (0.7_f64, 0.5_f64);
        let atom = AtomConfig::single(Potential::Zero, Lattice::line(1, 1.0));
        let modes = vec![Mode::new([0.0, 0.0, om], 1, w).unwrap()];
        let m = ModelConfig::new(atom, PhotonConfig::explicit(modes, 1.0, 0.0), FockCaps::total(4));
        let f = m.build().unwrap();
        let a = vector_potential_components(&f.atom, &f.grid, &f.basis, 0.0).unwrap();
        let dense = a[0].to_dense();
        let sq = &dense * &dense;
        assert!((sq[(0, 0)].re - w / (2.0 * om)).abs() < 1e-15);
        assert!(a[1].nnz() == 0 && a[2].nnz() == 0);
        assert_eq!(a[0].get(0, 0), cx(0.0, 0.0));
    }

    #[test]
    fn beta_zero_field_is_atom_independent() {
        let f = small_model(5, 2).build().unwrap();
        let a = vector_potential_components(&f.atom, &f.grid, &f.basis, 0.0).unwrap();
        let nf = f.basis.len();
        for c in 0..3 {
            for (r, col, v) in a[c].triplets() {
                assert_eq!(r / nf, col / nf);
                let other = a[c].get((r / nf + 1) % 5 * nf + r % nf, (col / nf + 1) % 5 * nf + col % nf);
                assert_eq!(v, other);
            }
        }
    }

    #[test]
    fn hermitian_for_real_g_and_adjoint_for_complex_g() {
        let cfg = small_model(7, 3);
        let f = cfg.build().unwrap();
        let h = assemble_hamiltonian(&QedModelSpec::generic(cfg.clone(), cx(0.3, 0.0), 0.8), &f).unwrap();
        assert_eq!(h.matrix.hermiticity_defect(), 0.0);
        let gp = assemble_hamiltonian(&QedModelSpec::generic(cfg.clone(), cx(0.0, 0.1), 0.8), &f).unwrap();
        let gm = assemble_hamiltonian(&QedModelSpec::generic(cfg, cx(0.0, -0.1), 0.8), &f).unwrap();
        assert_eq!(gp.matrix.hermiticity(), Hermiticity::General);
        assert!(gm.matrix.same_entries(&gp.matrix.adjoint()));
        assert_eq!(h.dim(), 7 * 10);
    }

    #[test]
    fn decoupled_and_term_sum() {
        let cfg = small_model(5, 2);
        let f = cfg.build().unwrap();
        let h0 = assemble_hamiltonian(&QedModelSpec::generic(cfg.clone(), cx(0.0, 0.0), 1.0), &f).unwrap();
        let n = f.basis.photon_numbers();
        let nf = f.basis.len();
        for (r, c, _) in h0.matrix.triplets() {
            assert_eq!(n[r % nf], n[c % nf]);
        }
        let g = cx(0.21, 0.0);
        let h = assemble_hamiltonian(&QedModelSpec::generic(cfg, g, 1.0), &f).unwrap();
        let resum = SparseOperator::linear_combination(&h.terms.terms(g)).unwrap();
        assert!(resum.same_entries(&h.matrix));
    }

    #[test]
    fn photon_parity_maps_g_to_minus_g() {
        let cfg = small_model(5, 3);
        let f = cfg.build().unwrap();
        let hp = assemble_hamiltonian(&QedModelSpec::generic(cfg.clone(), cx(0.4, 0.0), 1.3), &f).unwrap();
        let hm = assemble_hamiltonian(&QedModelSpec::generic(cfg, cx(-0.4, 0.0), 1.3), &f).unwrap();
        let n = f.basis.photon_numbers();
        let nf = f.basis.len();
        let parity: Vec<_> = (0..hp.dim()).map(|i| if n[i % nf] % 2 == 0 { cx(1.0, 0.0) } else { cx(-1.0, 0.0) }).collect();
        let p = SparseOperator::from_diagonal(parity);
        let conj = p.matmul(&hp.matrix).unwrap().matmul(&p).unwrap();
        assert!(conj.same_entries(&hm.matrix));
    }

    #[test]
    fn alpha_form_delegates_bitwise() {
        let cfg = small_model(5, 2);
        let f = cfg.build().unwrap();
        let a = assemble_alpha_form(0.2, &cfg, &f).unwrap();
        let g = assemble_hamiltonian(&QedModelSpec::generic(cfg.clone(), cx(0.2_f64.powf(1.5), 0.0), 0.2), &f).unwrap();
        assert!(a.matrix.same_entries(&g.matrix));
        assert!(matches!(assemble_alpha_form(-0.2, &cfg, &f), Err(Error::Domain(_))));
        let zero = assemble_alpha_form(0.0, &cfg, &f).unwrap();
        assert!(zero.matrix.same_entries(&g.terms.unperturbed().unwrap()));
    }

    #[test]
    fn dilation_identity_at_alpha_one_and_errors() {
        let cfg = small_model(5, 2);
        let spec = QedModelSpec::alpha_form(cfg.clone(), 1.0).unwrap();
        let (tilde, map) = dilate_model(&spec, 1.0).unwrap();
        assert_eq!(map.weight_scale, 1.0);
        let f = cfg.build().unwrap();
        let ft = tilde.model.build().unwrap();
        let a = assemble_hamiltonian(&spec, &f).unwrap();
        let b = assemble_hamiltonian(&tilde, &ft).unwrap();
        assert!(a.matrix.same_entries(&b.matrix));
        let s0 = QedModelSpec::alpha_form(cfg, 0.5).unwrap();
        assert!(matches!(dilate_model(&s0, 0.0), Err(Error::SingularDilation)));
    }

    #[test]
    fn dilation_weights_scale_by_alpha_six() {
        let cfg = small_model(5, 2);
        let spec = QedModelSpec::alpha_form(cfg.clone(), 0.5).unwrap();
        let (tilde, _) = dilate_model(&spec, 0.5).unwrap();
        let g0 = cfg.photons.build().unwrap();
        let g1 = tilde.model.photons.build().unwrap();
        for (m0, m1) in g0.modes().iter().zip(g1.modes()) {
            assert!((m1.weight - m0.weight * 0.5f64.powi(6)).abs() < 1e-16_f64);
            assert!((m1.energy - m0.energy * 0.25).abs() < 1e-15);
        }
        assert!((tilde.uv_cutoff() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn variational_trial_energy_from_terms() {
        let cfg = small_model(7, 2);
        let f = cfg.build().unwrap();
        let g = 0.3;
        let h = assemble_hamiltonian(&QedModelSpec::generic(cfg, cx(g, 0.0), 1.0), &f).unwrap();
        let psi = &h.reference;
        let e = dot(psi, &h.matrix.matvec(psi)).re;
        let a2 = dot(psi, &h.terms.diamagnetic.matvec(psi)).re;
        assert!((e - (f.atom.e_at() + g * g * a2)).abs() < 1e-12);
    }

    #[test]
    fn capacity_and_consistency_errors() {
        let cfg = small_model(5, 2);
        let f = cfg.build().unwrap();
        let mut spec = QedModelSpec::generic(cfg.clone(), cx(0.1, 0.0), 1.0);
        spec.dim_limit = 10;
        assert!(matches!(assemble_hamiltonian(&spec, &f), Err(Error::Capacity { .. })));
        let other = small_model(5, 2);
        let mut other_f = other.build().unwrap();
        other_f.grid = PhotonConfig::<f64>::quadrature(1.0, 0.0, 1, 1).build().unwrap();
        let spec = QedModelSpec::generic(cfg, cx(0.1, 0.0), 1.0);
        assert!(matches!(assemble_hamiltonian(&spec, &other_f), Err(Error::Consistency(_))));
        spec.validate().unwrap();
        let bad = QedModelSpec { g: cx(20.0, 0.0), ..spec };
        assert!(matches!(bad.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn two_electron_assembly_is_hermitian() {
        let atom = AtomConfig {
            potential: Potential::SoftCoulomb { charge: 2.0, softening: 1.0 },
            interaction: Some(Potential::SoftCoulomb { charge: -1.0, softening: 1.0 }),
            lattice: Lattice::line(6, 4.0),
            n_electrons: 2,
        };
        let modes = vec![Mode::new([0.3, 0.4, 0.5], 1, 0.2).unwrap()];
        let cfg = ModelConfig::new(atom, PhotonConfig::explicit(modes, 1.0, 0.0), FockCaps::total(2));
        let f = cfg.build().unwrap();
        let h = assemble_hamiltonian(&QedModelSpec::generic(cfg, cx(0.2, 0.0), 1.0), &f).unwrap();
        assert_eq!(h.dim(), 15 * 3);
        assert!(h.matrix.hermiticity_defect() < 1e-12);
    }
}
