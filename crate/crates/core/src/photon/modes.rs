use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

/// Floor on |k| relative to the ultraviolet cutoff when no infrared cutoff is set.
const MIN_MOMENTUM_FRACTION: f64 = 1e-12;

/// One discrete photon mode: a momentum cell and one of its two transverse polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T: Real> {
    pub k: Vec3<T>,
    /// |k|, the photon energy of the mode.
    pub energy: T,
    /// Polarization label, 1 or 2.
    pub polarization: u8,
    /// k-space cell volume represented by the mode.
    pub weight: T,
    pub pol: Vec3<T>,
    pub shell: usize,
    pub angular: usize,
}

impl<T: Real> Mode<T> {
    /// Builds a mode at momentum `k`, deriving the polarization vector from the
    /// fixed convention of [`make_polarization`].
    pub fn new(k: Vec3<T>, polarization: u8, weight: T) -> Result<Self> {
        let energy = norm3(k);
        if !(energy > T::zero()) {
            return Err(Error::InvalidDiscretization("mode momentum must be nonzero".into()));
        }
        if polarization != 1 && polarization != 2 {
            return Err(Error::InvalidDiscretization(format!("polarization label {polarization}")));
        }
        let khat = scale3(k, T::one() / energy);
        let (p1, p2) = make_polarization(khat)?;
        Ok(Mode {
            k,
            energy,
            polarization,
            weight,
            pol: if polarization == 1 { p1 } else { p2 },
            shell: 0,
            angular: 0,
        })
    }

    /// √(w / 2|k|), the field amplitude carried by the mode.
    pub fn amplitude(&self) -> T {
        (self.weight / (T::lit(2.0) * self.energy)).sqrt()
    }
}

/// Discretized photon momenta in the shell ε ≤ |k| < Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid<T: Real> {
    modes: Vec<Mode<T>>,
    uv_cutoff: T,
    ir_cutoff: T,
}

impl<T: Real> ModeGrid<T> {
    /// Wraps an explicit mode list, sorting it by (|k|, angular index, polarization)
    /// and checking the grid invariants.
    pub fn from_modes(mut modes: Vec<Mode<T>>, uv_cutoff: T, ir_cutoff: T) -> Result<Self> {
        check_cutoffs(uv_cutoff, ir_cutoff)?;
        modes.sort_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap_or(Ordering::Equal)
                .then(a.angular.cmp(&b.angular))
                .then(a.polarization.cmp(&b.polarization))
        });
        let grid = ModeGrid { modes, uv_cutoff, ir_cutoff };
        grid.check_invariants()?;
        Ok(grid)
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn uv_cutoff(&self) -> T {
        self.uv_cutoff
    }

    pub fn ir_cutoff(&self) -> T {
        self.ir_cutoff
    }

    pub fn energies(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.energy).collect()
    }

    pub fn total_weight(&self) -> T {
        self.modes.iter().fold(T::zero(), |s, m| s + m.weight)
    }

    /// Smallest photon energy on the grid.
    pub fn min_energy(&self) -> Option<T> {
        self.modes.first().map(|m| m.energy)
    }

    /// Drops every mode with |k| < `ir` and raises the infrared cutoff to `ir`.
    pub fn with_ir_cutoff(&self, ir: T) -> Result<Self> {
        check_cutoffs(self.uv_cutoff, ir)?;
        let modes: Vec<_> = self.modes.iter().filter(|m| m.energy >= ir).cloned().collect();
        if modes.is_empty() {
            return Err(Error::EmptyGrid(ir.as_f64()));
        }
        Ok(ModeGrid { modes, uv_cutoff: self.uv_cutoff, ir_cutoff: ir })
    }

    /// Momentum dilation k → s·k. Cell volumes scale by s³ and the cutoffs by s;
    /// polarization vectors are unchanged.
    pub fn dilated(&self, s: T) -> Result<Self> {
        if !(s > T::zero()) {
            return Err(Error::SingularDilation);
        }
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                k: scale3(m.k, s),
                energy: m.energy * s,
                weight: m.weight * s * s * s,
                ..m.clone()
            })
            .collect();
        Ok(ModeGrid { modes, uv_cutoff: self.uv_cutoff * s, ir_cutoff: self.ir_cutoff * s })
    }

    pub fn check_invariants(&self) -> Result<()> {
        let tol = T::lit(1e-12).max(T::eps() * T::lit(64.0));
        for (i, m) in self.modes.iter().enumerate() {
            if !(m.energy > T::zero()) || m.energy < self.ir_cutoff || m.energy >= self.uv_cutoff {
                return Err(Error::InvalidDiscretization(format!(
                    "mode {i}: |k| = {} outside [{}, {})",
                    m.energy, self.ir_cutoff, self.uv_cutoff
                )));
            }
            if !(m.weight > T::zero()) {
                return Err(Error::InvalidDiscretization(format!("mode {i}: nonpositive weight")));
            }
            let khat = scale3(m.k, T::one() / m.energy);
            if dot3(m.pol, khat).abs() > tol || (norm3(m.pol) - T::one()).abs() > tol {
                return Err(Error::InvalidDiscretization(format!("mode {i}: polarization not transverse unit")));
            }
        }
        for pair in self.modes.windows(2) {
            if pair[0].k == pair[1].k && dot3(pair[0].pol, pair[1].pol).abs() > tol {
                return Err(Error::InvalidDiscretization("polarizations at equal k are not orthogonal".into()));
            }
        }
        Ok(())
    }
}

fn check_cutoffs<T: Real>(uv: T, ir: T) -> Result<()> {
    if !(uv > T::zero()) || !(ir >= T::zero()) || !(ir < uv) {
        return Err(Error::InvalidCutoff { uv: uv.as_f64(), ir: ir.as_f64() });
    }
    Ok(())
}

/// Product quadrature on the shell max(ε, δ) ≤ |k| < Λ: midpoint radial shells
/// times a Gauss–Legendre(cos θ) × uniform-φ angular rule, two polarizations per node.
/// Weights are exact shell volumes times the angular weight fraction, so they
/// sum to the volume of the shell up to rounding. With ε = 0 the inner radius is
/// floored at δ = 1e-12 Λ.
pub fn build_mode_grid<T: Real>(uv_cutoff: T, ir_cutoff: T, n_radial: usize, n_angular: usize) -> Result<ModeGrid<T>> {
    check_cutoffs(uv_cutoff, ir_cutoff)?;
    if n_radial == 0 || n_angular == 0 {
        return Err(Error::InvalidDiscretization(format!(
            "n_radial = {n_radial} and n_angular = {n_angular} must both be at least 1"
        )));
    }
    let r_lo = ir_cutoff.max(uv_cutoff * T::lit(MIN_MOMENTUM_FRACTION));
    let width = (uv_cutoff - r_lo) / T::from_count(n_radial);
    let directions = angular_nodes::<T>(n_angular);
    let four_thirds_pi = T::lit(4.0 / 3.0) * T::pi();
    let mut modes = Vec::with_capacity(2 * n_radial * n_angular);
    for shell in 0..n_radial {
        let inner = r_lo + width * T::from_count(shell);
        let outer = if shell + 1 == n_radial { uv_cutoff } else { r_lo + width * T::from_count(shell + 1) };
        let radius = (inner + outer) * T::lit(0.5);
        let volume = four_thirds_pi * (outer * outer * outer - inner * inner * inner);
        for (angular, (dir, fraction)) in directions.iter().enumerate() {
            let (p1, p2) = make_polarization(*dir)?;
            for (polarization, pol) in [(1u8, p1), (2u8, p2)] {
                modes.push(Mode {
                    k: scale3(*dir, radius),
                    energy: radius,
                    polarization,
                    weight: volume * *fraction,
                    pol,
                    shell,
                    angular,
                });
            }
        }
    }
    let grid = ModeGrid { modes, uv_cutoff, ir_cutoff };
    grid.check_invariants()?;
    Ok(grid)
}

/// Transverse polarization pair for a unit direction: pol1 = ẑ × k̂ / |ẑ × k̂| and
/// pol2 = k̂ × pol1, so (pol1, pol2, k̂) is a right-handed orthonormal frame.
/// Within 1e-8 of the poles the reference axis switches from ẑ to ŷ, which gives
/// pol1 = x̂, pol2 = ŷ at k̂ = ẑ.
pub fn make_polarization<T: Real>(khat: Vec3<T>) -> Result<(Vec3<T>, Vec3<T>)> {
    let n = norm3(khat);
    let tol = T::lit(1e-12).max(T::eps() * T::lit(16.0));
    if !((n - T::one()).abs() < tol) {
        return Err(Error::Normalization(n.as_f64()));
    }
    let (o, l) = (T::zero(), T::one());
    let mut pol1 = cross3([o, o, l], khat);
    if norm3(pol1) < T::lit(1e-8) {
        pol1 = cross3([o, l, o], khat);
    }
    let pol1 = scale3(pol1, T::one() / norm3(pol1));
    let pol2 = cross3(khat, pol1);
    Ok((pol1, pol2))
}

/// Unit directions and weight fractions (summing to one) of the angular rule.
/// `n` nodes factor as n_θ × n_φ with n_θ the largest divisor not above √n.
fn angular_nodes<T: Real>(n: usize) -> Vec<(Vec3<T>, T)> {
    let n_theta = (1..=n).filter(|d| n % d == 0 && d * d <= n).max().unwrap_or(1);
    let n_phi = n / n_theta;
    let (x, w) = gauss_legendre(n_theta);
    let mut out = Vec::with_capacity(n);
    for (cos_t, wt) in x.into_iter().zip(w) {
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        for b in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * b as f64 / n_phi as f64;
            let dir = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t];
            let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            let dir = [T::lit(dir[0] / len), T::lit(dir[1] / len), T::lit(dir[2] / len)];
            out.push((dir, T::lit(wt / (2.0 * n_phi as f64))));
        }
    }
    out
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn dot3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3<T: Real>(a: Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

pub(crate) fn scale3<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn cross3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
