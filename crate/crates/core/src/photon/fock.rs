use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};
use crate::sparse::{Hermiticity, SparseOperator};

use super::ModeGrid;

/// Default hard limit on the number of Fock states.
pub const DEFAULT_BASIS_LIMIT: usize = 2_000_000;

/// Occupation numbers, one per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(pub Vec<u16>);

impl FockState {
    pub fn vacuum(n_modes: usize) -> Self {
        FockState(vec![0; n_modes])
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn occupation(&self, mode: usize) -> u16 {
        self.0[mode]
    }
}

/// Truncation of the symmetric Fock space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockCaps<T: Real> {
    pub n_max_total: usize,
    pub n_max_mode: usize,
    /// Bound on Σ n_i |k_i|.
    pub energy_cap: Option<T>,
}

impl<T: Real> FockCaps<T> {
    pub fn new(n_max_total: usize, n_max_mode: usize, energy_cap: Option<T>) -> Self {
        FockCaps { n_max_total, n_max_mode, energy_cap }
    }

    /// Caps with only a total-occupation bound.
    pub fn total(n_max_total: usize) -> Self {
        FockCaps { n_max_total, n_max_mode: n_max_total, energy_cap: None }
    }
}

/// Occupation-number basis of the truncated Fock space.
///
/// States are ordered by total occupation, then by descending lexicographic
/// order of the occupation vector, so the vacuum is state 0 and for a fixed
/// total the first mode fills first.
#[derive(Debug, Clone)]
pub struct FockBasis<T: Real> {
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
    caps: FockCaps<T>,
    mode_energies: Vec<T>,
}

impl<T: Real> FockBasis<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.mode_energies.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &FockState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Largest n such that every state with at most n photons is in the basis.
    pub fn complete_photon_number(&self) -> usize {
        let mut n = self.caps.n_max_total.min(self.caps.n_max_mode);
        if let Some(cap) = self.caps.energy_cap {
            let top = self.mode_energies.iter().fold(T::zero(), |m, &e| m.max(e));
            if top > T::zero() {
                let fit = (cap * (T::one() + T::lit(1e-12)) / top).floor();
                n = n.min(fit.as_f64().max(0.0) as usize);
            }
        }
        n
    }

    pub fn caps(&self) -> &FockCaps<T> {
        &self.caps
    }

    pub fn mode_energies(&self) -> &[T] {
        &self.mode_energies
    }

    /// Total photon number of every basis state.
    pub fn photon_numbers(&self) -> Vec<usize> {
        self.states.iter().map(FockState::total).collect()
    }

    /// True when the state lies on the subspace where the discrete CCR for
    /// `mode` holds exactly: one more photon in that mode stays inside the caps.
    pub fn has_headroom(&self, state: usize, mode: usize) -> bool {
        let mut s = self.states[state].clone();
        s.0[mode] += 1;
        self.index.contains_key(&s)
    }

    fn check_grid(&self, grid: &ModeGrid<T>) -> Result<()> {
        if grid.len() != self.n_modes() || grid.energies() != self.mode_energies {
            return Err(Error::Consistency(format!(
                "Fock basis over {} modes does not match grid with {} modes",
                self.n_modes(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Enumerates every occupation vector within the caps. `limit` bounds the
/// basis size; exceeding it returns a capacity error naming the caps.
pub fn build_fock_basis<T: Real>(grid: &ModeGrid<T>, caps: FockCaps<T>, limit: usize) -> Result<FockBasis<T>> {
    let energies = grid.energies();
    let m = energies.len();
    if caps.n_max_mode > u16::MAX as usize {
        return Err(Error::Capacity {
            what: "per-mode occupation".into(),
            size: caps.n_max_mode,
            limit: u16::MAX as usize,
        });
    }
    if let Some(cap) = caps.energy_cap {
        if !(cap > T::zero()) {
            return Err(Error::Domain("energy cap must be positive".into()));
        }
    }
    // Relative slack so that caps survive a common rescaling of energies and cap.
    let cap = caps.energy_cap.map(|c| c * (T::one() + T::lit(1e-12)));
    let mut states = Vec::new();
    let mut current = vec![0u16; m];
    for total in 0..=caps.n_max_total {
        if total > 0 && m == 0 {
            break;
        }
        let mut ctx = Enumeration {
            energies: &energies,
            per_mode: caps.n_max_mode,
            cap,
            limit,
            out: &mut states,
        };
        if !ctx.fill(0, total, T::zero(), &mut current) {
            return Err(Error::Capacity {
                what: format!(
                    "Fock basis (n_max_total = {}, n_max_mode = {}, energy_cap = {:?})",
                    caps.n_max_total,
                    caps.n_max_mode,
                    caps.energy_cap.map(|c| c.as_f64())
                ),
                size: limit + 1,
                limit,
            });
        }
    }
    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Ok(FockBasis { states, index, caps, mode_energies: energies })
}

struct Enumeration<'a, T: Real> {
    energies: &'a [T],
    per_mode: usize,
    cap: Option<T>,
    limit: usize,
    out: &'a mut Vec<FockState>,
}

impl<T: Real> Enumeration<'_, T> {
    /// Depth-first fill of modes `i..` with `remaining` photons; false on overflow.
    fn fill(&mut self, i: usize, remaining: usize, energy: T, current: &mut Vec<u16>) -> bool {
        if i == self.energies.len() {
            if remaining == 0 {
                if self.out.len() >= self.limit {
                    return false;
                }
                self.out.push(FockState(current.clone()));
            }
            return true;
        }
        let top = remaining.min(self.per_mode);
        for n in (0..=top).rev() {
            let e = energy + self.energies[i] * T::from_count(n);
            if let Some(cap) = self.cap {
                if e > cap {
                    continue;
                }
            }
            current[i] = n as u16;
            let ok = self.fill(i + 1, remaining - n, e, current);
            current[i] = 0;
            if !ok {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
}

/// Matrix of a(mode) or a†(mode) compressed to the basis. Transitions leaving
/// the basis are dropped; the creation matrix is the exact adjoint of the
/// annihilation matrix.
pub fn ladder_matrix<T: Real>(basis: &FockBasis<T>, mode: usize, kind: LadderKind) -> Result<SparseOperator<T>> {
    if mode >= basis.n_modes() {
        return Err(Error::Index { index: mode, bound: basis.n_modes() });
    }
    let mut triplets = Vec::new();
    for (col, s) in basis.states.iter().enumerate() {
        let n = s.0[mode];
        if n == 0 {
            continue;
        }
        let mut lower = s.clone();
        lower.0[mode] -= 1;
        // Removing a photon never violates a cap, so the target is always present.
        let row = basis.index[&lower];
        triplets.push((row, col, Cx::new(T::from_count(n as usize).sqrt(), T::zero())));
    }
    let a = SparseOperator::from_triplets(basis.len(), basis.len(), triplets, Hermiticity::General)?;
    Ok(match kind {
        LadderKind::Annihilate => a,
        LadderKind::Create => a.adjoint(),
    })
}

/// Diagonal free field energy Σ_i n_i |k_i|.
pub fn field_energy_operator<T: Real>(basis: &FockBasis<T>, grid: &ModeGrid<T>) -> Result<SparseOperator<T>> {
    basis.check_grid(grid)?;
    let diag = basis
        .states
        .iter()
        .map(|s| {
            let e = s
                .0
                .iter()
                .zip(&basis.mode_energies)
                .fold(T::zero(), |acc, (&n, &k)| acc + k * T::from_count(n as usize));
            Cx::new(e, T::zero())
        })
        .collect();
    Ok(SparseOperator::from_diagonal(diag).with_hermiticity(Hermiticity::Hermitian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::{build_mode_grid, Mode};

    fn explicit_grid(energies: &[f64]) -> ModeGrid<f64> {
        let modes = energies
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let mut m = Mode::new([0.0, 0.0, e], 1, 0.1).unwrap();
                m.angular = i;
                m
            })
            .collect();
        ModeGrid::from_modes(modes, 10.0, 0.0).unwrap()
    }

    #[test]
    fn stars_and_bars_count() {
        let g = explicit_grid(&[0.1, 0.2, 0.3, 0.4]);
        let b = build_fock_basis(&g, FockCaps::total(2), DEFAULT_BASIS_LIMIT).unwrap();
        assert_eq!(b.len(), 15);
        assert_eq!(b.state(0), &FockState::vacuum(4));
    }

    #[test]
    fn zero_cap_is_vacuum_only() {
        let g = build_mode_grid(1.0_f64, 0.0, 2, 3).unwrap();
        let b = build_fock_basis(&g, FockCaps::total(0), DEFAULT_BASIS_LIMIT).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.state(0).total(), 0);
    }

    #[test]
    fn energy_cap_enumeration() {
        let g = explicit_grid(&[0.5, 0.9]);
        let b = build_fock_basis(&g, FockCaps::new(2, 2, Some(1.0)), DEFAULT_BASIS_LIMIT).unwrap();
        let got: Vec<Vec<u16>> = b.states().iter().map(|s| s.0.clone()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0]]);
    }

    #[test]
    fn ordering_is_total_major_then_descending_lex() {
        let g = explicit_grid(&[0.1, 0.2, 0.3]);
        let b = build_fock_basis(&g, FockCaps::total(2), DEFAULT_BASIS_LIMIT).unwrap();
        for w in b.states().windows(2) {
            let (a, c) = (&w[0], &w[1]);
            assert!(a.total() < c.total() || (a.total() == c.total() && a.0 > c.0));
        }
    }

    #[test]
    fn capacity_limit_names_caps() {
        let g = build_mode_grid(1.0_f64, 0.0, 4, 4).unwrap();
        let e = build_fock_basis(&g, FockCaps::total(3), 100).unwrap_err();
        match e {
            Error::Capacity { what, limit, .. } => {
                assert!(what.contains("n_max_total = 3"));
                assert_eq!(limit, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_mode_ladder_elements() {
        let g = explicit_grid(&[0.7]);
        let b = build_fock_basis(&g, FockCaps::total(3), DEFAULT_BASIS_LIMIT).unwrap();
        let adag = ladder_matrix(&b, 0, LadderKind::Create).unwrap();
        let two = b.index_of(&FockState(vec![2])).unwrap();
        let three = b.index_of(&FockState(vec![3])).unwrap();
        assert!((adag.get(three, two).re - 3f64.sqrt()).abs() < 1e-15);
        // truncated: a†|3⟩ leaves the basis
        let out = adag.matvec(&crate::scalar::unit(b.len(), three));
        assert!(out.iter().all(|z| z.norm() == 0.0));
        let a = ladder_matrix(&b, 0, LadderKind::Annihilate).unwrap();
        let av = a.matvec(&crate::scalar::unit(b.len(), 0));
        assert!(av.iter().all(|z| z.norm() == 0.0));
        assert!(matches!(ladder_matrix(&b, 1, LadderKind::Create), Err(Error::Index { .. })));
    }

    #[test]
    fn field_energy_diagonal() {
        let g = explicit_grid(&[0.5, 0.9]);
        let b = build_fock_basis(&g, FockCaps::total(2), DEFAULT_BASIS_LIMIT).unwrap();
        let hf = field_energy_operator(&b, &g).unwrap();
        assert_eq!(hf.get(0, 0).re, 0.0);
        let i = b.index_of(&FockState(vec![1, 1])).unwrap();
        assert!((hf.get(i, i).re - 1.4).abs() < 1e-15);
        let other = explicit_grid(&[0.5, 0.8]);
        assert!(matches!(field_energy_operator(&b, &other), Err(Error::Consistency(_))));
    }
}
