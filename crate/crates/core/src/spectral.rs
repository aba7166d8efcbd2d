//! Ground states, gaps and rank-one eigenprojections.
//!
//! Hermitian problems use Lanczos with full reorthogonalization and explicit
//! restarts, started from the deterministic vector φ_at ⊗ Ω. A dense oracle
//! (hermitian eigendecomposition or complex Schur form) backs every check.
//! Complex couplings are handled by shifted inverse iteration on dense LU
//! factors, continuing the eigenvalue along a path from g = 0.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::assembly::AssembledHamiltonian;
use crate::error::{Error, Result};
use crate::scalar::{axpy, cis, dot, modulus, norm, normalize, quasi_random, re, scale, zeros, Cx, Real};
use crate::sparse::{Hermiticity, SparseOperator};

/// Default cap on dense diagonalization.
pub const DENSE_LIMIT: usize = 4000;

/// Krylov subspace dimension between restarts.
pub const KRYLOV_DIM: usize = 80;

/// Relative gap below which a ground state is flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Scale for relative tolerances: the max-row-sum bound on ‖H‖ (1 for the zero matrix).
pub fn spectral_scale<T: Real>(h: &SparseOperator<T>) -> T {
    let s = h.norm_bound();
    if s > T::zero() {
        s
    } else {
        T::one()
    }
}

/// Rank-one projection P = right · left† with left† right = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneProjection<T: Real> {
    pub right: Vec<Cx<T>>,
    pub left: Vec<Cx<T>>,
}

impl<T: Real> RankOneProjection<T> {
    /// Orthogonal projection onto a normalized vector.
    pub fn orthogonal(v: &[Cx<T>]) -> Self {
        RankOneProjection { right: v.to_vec(), left: v.to_vec() }
    }

    /// Oblique projection; `left` is rescaled so that left† right = 1.
    pub fn oblique(right: Vec<Cx<T>>, left: Vec<Cx<T>>) -> Result<Self> {
        let s = dot(&left, &right);
        if !(modulus(s) > T::zero()) {
            return Err(Error::Consistency("left and right vectors are orthogonal".into()));
        }
        let inv = Cx::new(T::one(), T::zero()) / s.conj();
        let left = left.iter().map(|&z| z * inv).collect();
        Ok(RankOneProjection { right, left })
    }

    pub fn dim(&self) -> usize {
        self.right.len()
    }

    pub fn trace(&self) -> Cx<T> {
        dot(&self.left, &self.right)
    }

    pub fn apply(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let c = dot(&self.left, x);
        self.right.iter().map(|&r| r * c).collect()
    }

    pub fn adjoint(&self) -> Self {
        RankOneProjection { right: self.left.clone(), left: self.right.clone() }
    }

    /// ‖P² − P‖_F = |left† right − 1|·‖right‖·‖left‖.
    pub fn idempotency_defect(&self) -> T {
        modulus(self.trace() - Cx::new(T::one(), T::zero())) * norm(&self.right) * norm(&self.left)
    }

    pub fn entry(&self, r: usize, c: usize) -> Cx<T> {
        self.right[r] * self.left[c].conj()
    }

    /// Largest entrywise modulus of P − Q, evaluated entry by entry.
    pub fn max_entry_distance(&self, other: &Self) -> T {
        let n = self.dim();
        let mut m = T::zero();
        for r in 0..n {
            for c in 0..n {
                m = m.max(modulus(self.entry(r, c) - other.entry(r, c)));
            }
        }
        m
    }

    /// Frobenius norm of P − Q, evaluated entry by entry.
    pub fn frobenius_distance(&self, other: &Self) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for r in 0..n {
            for c in 0..n {
                s += (self.entry(r, c) - other.entry(r, c)).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<Cx<T>> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.entry(r, c))
    }
}

/// Ground eigenpair with gap and solver diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralResult<T: Real> {
    pub energy: Cx<T>,
    /// Unit-norm right eigenvector, phase fixed by the start vector.
    pub vector: Vec<Cx<T>>,
    /// Left eigenvector for general matrices (left† vector = 1); `None` when hermitian.
    pub left: Option<Vec<Cx<T>>>,
    /// E₁ − E₀ (infinite for a one-dimensional space).
    pub gap: T,
    pub residual: T,
    pub iterations: usize,
    /// gap < 1e-10 · spectral scale
    pub degenerate: bool,
}

impl<T: Real> SpectralResult<T> {
    pub fn energy_re(&self) -> T {
        self.energy.re
    }

    pub fn projection(&self) -> RankOneProjection<T> {
        match &self.left {
            None => RankOneProjection::orthogonal(&self.vector),
            Some(l) => RankOneProjection { right: self.vector.clone(), left: l.clone() },
        }
    }
}

struct LanczosOutcome<T: Real> {
    value: T,
    vector: Vec<Cx<T>>,
    residual: T,
    iterations: usize,
}

fn project_out<T: Real>(w: &mut [Cx<T>], against: &[Vec<Cx<T>>]) {
    for q in against {
        let c = dot(q, w);
        axpy(-c, q, w);
    }
}

/// Lowest eigenpair of a hermitian operator restricted to the orthogonal
/// complement of the (orthonormal) `deflate` vectors.
fn lanczos_lowest<T: Real>(
    h: &SparseOperator<T>,
    start: &[Cx<T>],
    deflate: &[Vec<Cx<T>>],
    tol: T,
    max_iter: usize,
) -> Result<LanczosOutcome<T>> {
    let n = h.dim();
    let free = n.saturating_sub(deflate.len());
    if free == 0 {
        return Err(Error::Domain("no room left after deflation".into()));
    }
    let m = KRYLOV_DIM.min(free);
    let hscale = spectral_scale(h);
    let mut v = start.to_vec();
    project_out(&mut v, deflate);
    if norm(&v) < T::lit(1e-8) * norm(start).max(T::one()) {
        v = quasi_random(n, 17);
        project_out(&mut v, deflate);
    }
    normalize(&mut v);
    let mut iterations = 0usize;
    let mut best = T::max_value().unwrap_or_else(T::one);
    let mut w = zeros::<T>(n);
    loop {
        let mut basis: Vec<Vec<Cx<T>>> = vec![v.clone()];
        let mut alphas: Vec<T> = Vec::with_capacity(m);
        let mut betas: Vec<T> = Vec::with_capacity(m);
        for j in 0..m {
            h.matvec_into(&basis[j], &mut w);
            iterations += 1;
            project_out(&mut w, deflate);
            alphas.push(dot(&basis[j], &w).re);
            for _ in 0..2 {
                project_out(&mut w, &basis);
                project_out(&mut w, deflate);
            }
            let b = norm(&w);
            if j + 1 == m || b <= T::lit(1e-14) * hscale {
                break;
            }
            betas.push(b);
            let mut next = w.clone();
            scale(re(T::one() / b), &mut next);
            basis.push(next);
        }
        let k = alphas.len();
        let tri = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alphas[r]
            } else if r == c + 1 {
                betas[c]
            } else if c == r + 1 {
                betas[r]
            } else {
                T::zero()
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, T::max_value().unwrap_or_else(T::one)), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
        let y = eig.eigenvectors.column(imin);
        let mut psi = zeros::<T>(n);
        for (i, b) in basis.iter().enumerate().take(k) {
            axpy(re(y[i]), b, &mut psi);
        }
        project_out(&mut psi, deflate);
        normalize(&mut psi);
        h.matvec_into(&psi, &mut w);
        iterations += 1;
        project_out(&mut w, deflate);
        let value = dot(&psi, &w).re;
        axpy(re(-value), &psi, &mut w);
        let residual = norm(&w);
        best = best.min(residual);
        if residual <= tol * hscale {
            return Ok(LanczosOutcome { value, vector: psi, residual, iterations });
        }
        if iterations >= max_iter {
            return Err(Error::Convergence { iterations, residual: best.as_f64() });
        }
        v = psi;
    }
}

/// Rotates `v` so that ⟨start, v⟩ is real positive; falls back to making the
/// first non-negligible entry real positive when the overlap vanishes.
pub fn fix_phase<T: Real>(v: &mut [Cx<T>], start: &[Cx<T>]) {
    let o = dot(start, v);
    let tiny = T::lit(1e-10);
    let anchor = if modulus(o) > tiny {
        o
    } else {
        match v.iter().find(|z| modulus(**z) > tiny) {
            Some(&z) => z,
            None => return,
        }
    };
    let r = modulus(anchor);
    let rot = anchor.conj() / Cx::new(r, T::zero());
    scale(rot, v);
}

/// Lowest eigenpair and first gap of a hermitian operator, starting from `start`.
pub fn ground_state_operator<T: Real>(
    h: &SparseOperator<T>,
    start: &[Cx<T>],
    tol: T,
    max_iter: usize,
) -> Result<SpectralResult<T>> {
    if h.hermiticity() == Hermiticity::General {
        return Err(Error::NotHermitian("ground_state requires a hermitian operator".into()));
    }
    if h.dim() == 0 {
        return Err(Error::Domain("empty operator".into()));
    }
    if start.len() != h.dim() {
        return Err(Error::Consistency(format!("start vector has length {}, operator {}", start.len(), h.dim())));
    }
    let scale = spectral_scale(h);
    let mut ground = lanczos_lowest(h, start, &[], tol, max_iter)?;
    let mut iterations = ground.iterations;
    let mut found = vec![ground.vector.clone()];
    let mut above: Option<T> = None;
    let mut gap = T::lit(f64::INFINITY);
    // The Krylov space of the start vector can miss a symmetry sector; a
    // deflated solve from a generic vector that lands lower takes over.
    while found.len() < h.dim() {
        let next = lanczos_lowest(h, &quasi_random(h.dim(), found.len()), &found, tol, max_iter)?;
        iterations += next.iterations;
        found.push(next.vector.clone());
        if next.value < ground.value - tol * scale {
            above = Some(above.map_or(ground.value, |a: T| a.min(ground.value)));
            ground = next;
            continue;
        }
        gap = above.map_or(next.value, |a| a.min(next.value)) - ground.value;
        break;
    }
    let mut psi = ground.vector;
    fix_phase(&mut psi, start);
    Ok(SpectralResult {
        energy: Cx::new(ground.value, T::zero()),
        vector: psi,
        left: None,
        gap,
        residual: ground.residual,
        iterations,
        degenerate: gap < T::lit(DEGENERACY_TOL) * scale,
    })
}

/// Ground state of an assembled hermitian Hamiltonian from φ_at ⊗ Ω.
pub fn ground_state<T: Real>(h: &AssembledHamiltonian<T>, tol: T, max_iter: usize) -> Result<SpectralResult<T>> {
    ground_state_operator(&h.matrix, &h.reference, tol, max_iter)
}

/// Sorted dense spectrum, optionally with eigenvectors (hermitian case only).
#[derive(Debug, Clone)]
pub struct DenseSpectrum<T: Real> {
    pub values: Vec<Cx<T>>,
    /// Columns are eigenvectors, in the order of `values`.
    pub vectors: Option<DMatrix<Cx<T>>>,
    pub hermitian: bool,
}

impl<T: Real> DenseSpectrum<T> {
    pub fn real_values(&self) -> Vec<T> {
        self.values.iter().map(|z| z.re).collect()
    }
}

fn is_effectively_hermitian<T: Real>(h: &SparseOperator<T>) -> bool {
    match h.hermiticity() {
        Hermiticity::Hermitian => true,
        Hermiticity::General => false,
        Hermiticity::Unchecked => h.hermiticity_defect() <= T::lit(1e-12) * spectral_scale(h),
    }
}

/// Dense diagonalization of the `k_lowest` eigenvalues (by real part) with the default cap.
pub fn dense_spectrum<T: Real>(h: &SparseOperator<T>, k_lowest: usize, with_vectors: bool) -> Result<DenseSpectrum<T>> {
    dense_spectrum_capped(h, k_lowest, with_vectors, DENSE_LIMIT)
}

pub fn dense_spectrum_capped<T: Real>(
    h: &SparseOperator<T>,
    k_lowest: usize,
    with_vectors: bool,
    limit: usize,
) -> Result<DenseSpectrum<T>> {
    let n = h.dim();
    if n > limit {
        return Err(Error::Capacity { what: "dense diagonalization".into(), size: n, limit });
    }
    if !h.is_square() {
        return Err(Error::Consistency("dense spectrum of a non-square operator".into()));
    }
    let k = k_lowest.min(n);
    if is_effectively_hermitian(h) {
        let eig = if with_vectors {
            SymmetricEigen::new(h.to_dense())
        } else {
            let ev = h.to_dense().symmetric_eigenvalues();
            SymmetricEigen { eigenvalues: ev, eigenvectors: DMatrix::zeros(0, 0) }
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal)
        });
        order.truncate(k);
        let values = order.iter().map(|&i| Cx::new(eig.eigenvalues[i], T::zero())).collect();
        let vectors = with_vectors.then(|| {
            DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])])
        });
        return Ok(DenseSpectrum { values, vectors, hermitian: true });
    }
    if with_vectors {
        return Err(Error::Domain("dense eigenvectors are only provided for hermitian operators".into()));
    }
    let schur = nalgebra::Schur::new(h.to_dense());
    let (_, t) = schur.unpack();
    let mut values: Vec<Cx<T>> = (0..n).map(|i| t[(i, i)]).collect();
    values.sort_by(|a, b| {
        a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal).then(
            a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal),
        )
    });
    values.truncate(k);
    Ok(DenseSpectrum { values, vectors: None, hermitian: false })
}

/// Options for eigenvalue continuation in complex g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions<T: Real> {
    /// Required ratio |μ₂ − σ| / |E − σ| between the nearest other eigenvalue
    /// and the tracked one, measured from the predicted shift σ.
    pub isolation_factor: T,
    /// Maximum number of step halvings per path segment.
    pub max_halvings: usize,
    /// Relative residual tolerance for inverse iteration.
    pub tol: T,
    pub max_inverse_iterations: usize,
    pub dense_limit: usize,
}

impl<T: Real> Default for TrackOptions<T> {
    fn default() -> Self {
        TrackOptions {
            isolation_factor: T::lit(5.0),
            max_halvings: 8,
            tol: T::lit(1e-11),
            max_inverse_iterations: 60,
            dense_limit: DENSE_LIMIT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackPoint<T: Real> {
    pub g: Cx<T>,
    pub energy: Cx<T>,
    pub projection: RankOneProjection<T>,
    /// Measured |μ₂ − σ| / |E − σ|.
    pub isolation: T,
    pub residual: T,
}

/// Tracked path; `error` is set when tracking stopped early (the points up to
/// the last good coupling are kept).
#[derive(Debug, Clone)]
pub struct Track<T: Real> {
    pub points: Vec<TrackPoint<T>>,
    pub error: Option<Error>,
}

impl<T: Real> Track<T> {
    pub fn into_result(self) -> Result<Vec<TrackPoint<T>>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.points),
        }
    }
}

struct Factored<T: Real> {
    h: SparseOperator<T>,
    lu: nalgebra::LU<Cx<T>, nalgebra::Dyn, nalgebra::Dyn>,
    lu_adj: nalgebra::LU<Cx<T>, nalgebra::Dyn, nalgebra::Dyn>,
    shift: Cx<T>,
    scale: T,
}

impl<T: Real> Factored<T> {
    fn new(h: SparseOperator<T>, shift: Cx<T>) -> Self {
        let n = h.dim();
        let scale = spectral_scale(&h);
        let mut m = h.to_dense();
        for i in 0..n {
            m[(i, i)] -= shift;
        }
        let adj = m.adjoint();
        Factored { h, lu: m.lu(), lu_adj: adj.lu(), shift, scale }
    }

    fn solve(&self, x: &[Cx<T>], adjoint: bool) -> Option<Vec<Cx<T>>> {
        let b = DVector::from_column_slice(x);
        let y = if adjoint { self.lu_adj.solve(&b) } else { self.lu.solve(&b) }?;
        let out: Vec<Cx<T>> = y.iter().copied().collect();
        if out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Some(out)
        } else {
            None
        }
    }

    /// Inverse iteration for the eigenvector of H (or H†) nearest the shift.
    fn eigvec(&self, seed: &[Cx<T>], adjoint: bool, tol: T, max_it: usize) -> Option<(Cx<T>, Vec<Cx<T>>, T)> {
        let op = if adjoint { self.h.adjoint() } else { self.h.clone() };
        let mut x = seed.to_vec();
        normalize(&mut x);
        let mut last = None;
        for _ in 0..max_it {
            let mut y = self.solve(&x, adjoint)?;
            normalize(&mut y);
            x = y;
            let hx = op.matvec(&x);
            let e = dot(&x, &hx);
            let mut r = hx;
            axpy(-e, &x, &mut r);
            let res = norm(&r);
            last = Some((e, x.clone(), res));
            if res <= tol * self.scale {
                break;
            }
        }
        last
    }

    /// |μ₂ − shift| from power iteration on the resolvent with the tracked pair deflated.
    fn second_distance(&self, p: &RankOneProjection<T>) -> Option<T> {
        let n = self.h.dim();
        if n == 1 {
            return Some(T::max_value().unwrap_or_else(T::one));
        }
        let deflate = |v: &mut Vec<Cx<T>>| {
            let pv = p.apply(v);
            for (a, b) in v.iter_mut().zip(pv) {
                *a -= b;
            }
        };
        let mut y = quasi_random(n, 3);
        deflate(&mut y);
        normalize(&mut y);
        let mut lambda = Cx::new(T::zero(), T::zero());
        for _ in 0..40 {
            let mut z = self.solve(&y, false)?;
            deflate(&mut z);
            lambda = dot(&y, &z);
            if normalize(&mut z) == T::zero() {
                return Some(T::max_value().unwrap_or_else(T::one));
            }
            y = z;
        }
        let l = modulus(lambda);
        Some(if l > T::zero() { T::one() / l } else { T::max_value().unwrap_or_else(T::one) })
    }
}

/// Continues the isolated eigenvalue from E(0) along `path` (which must start
/// at g = 0) by shifted inverse iteration, seeding each step with the previous
/// eigenvectors and halving the step when isolation drops below the threshold.
/// `start` is the g = 0 eigenvector used as seed and phase reference.
pub fn track_eigenvalue_complex_g<T, F>(family: F, path: &[Cx<T>], start: &[Cx<T>], opts: &TrackOptions<T>) -> Track<T>
where
    T: Real,
    F: Fn(Cx<T>) -> Result<SparseOperator<T>>,
{
    let mut points: Vec<TrackPoint<T>> = Vec::with_capacity(path.len());
    let zero = Cx::new(T::zero(), T::zero());
    match path.first() {
        Some(&g0) if g0 == zero => {}
        _ => {
            return Track { points, error: Some(Error::Domain("tracking path must start at g = 0".into())) };
        }
    }
    let mut right = start.to_vec();
    let mut left = start.to_vec();
    let mut history: Vec<(Cx<T>, Cx<T>)> = Vec::new();
    for &target in path {
        let mut pending = vec![target];
        let mut halvings = 0usize;
        while let Some(&g) = pending.last() {
            let sigma = predict(&history, g);
            let attempt = solve_point(&family, g, sigma, &right, &left, start, opts);
            let accepted = match attempt {
                Ok(pt) if pt.isolation >= opts.isolation_factor => Some(pt),
                Ok(pt) => {
                    if halvings >= opts.max_halvings || history.is_empty() {
                        let last = history.last().map(|h| h.0).unwrap_or(zero);
                        return Track {
                            points,
                            error: Some(Error::TrackingLoss {
                                re: g.re.as_f64(),
                                im: g.im.as_f64(),
                                last_re: last.re.as_f64(),
                                last_im: last.im.as_f64(),
                                isolation: pt.isolation.as_f64(),
                            }),
                        };
                    }
                    None
                }
                Err(e) => {
                    if matches!(e, Error::Capacity { .. }) || halvings >= opts.max_halvings || history.is_empty() {
                        return Track { points, error: Some(e) };
                    }
                    None
                }
            };
            match accepted {
                Some(pt) => {
                    right = pt.projection.right.clone();
                    left = pt.projection.left.clone();
                    history.push((pt.g, pt.energy));
                    points.push(pt);
                    pending.pop();
                    // intermediate halving points are recorded too; the caller
                    // selects the samples it needs by coupling value
                }
                None => {
                    halvings += 1;
                    let prev = history.last().map(|h| h.0).unwrap_or(zero);
                    pending.push(prev + (g - prev) * Cx::new(T::lit(0.5), T::zero()));
                }
            }
        }
    }
    Track { points, error: None }
}

/// Linear extrapolation of E from the last two accepted points.
fn predict<T: Real>(history: &[(Cx<T>, Cx<T>)], g: Cx<T>) -> Option<Cx<T>> {
    match history {
        [] => None,
        [(_, e)] => Some(*e),
        [.., (g1, e1), (g2, e2)] => {
            let dg = *g2 - *g1;
            if modulus(dg) > T::zero() {
                Some(*e2 + (*e2 - *e1) * ((g - *g2) / dg))
            } else {
                Some(*e2)
            }
        }
    }
}

fn solve_point<T, F>(
    family: &F,
    g: Cx<T>,
    sigma: Option<Cx<T>>,
    seed_right: &[Cx<T>],
    seed_left: &[Cx<T>],
    phase_ref: &[Cx<T>],
    opts: &TrackOptions<T>,
) -> Result<TrackPoint<T>>
where
    T: Real,
    F: Fn(Cx<T>) -> Result<SparseOperator<T>>,
{
    let h = family(g)?;
    let n = h.dim();
    if n > opts.dense_limit {
        return Err(Error::Capacity { what: "eigenvalue tracking".into(), size: n, limit: opts.dense_limit });
    }
    if seed_right.len() != n {
        return Err(Error::Consistency("seed vector length differs from the operator".into()));
    }
    let scale = spectral_scale(&h);
    let sigma = match sigma {
        Some(s) => s,
        None => {
            let hx = h.matvec(seed_right);
            dot(seed_right, &hx) / dot(seed_right, seed_right)
        }
    };
    // a tiny offset keeps the factorization regular when σ is an exact eigenvalue
    let offset = Cx::new(T::lit(1e-9), T::lit(1e-9)) * Cx::new(scale, T::zero());
    let f = Factored::new(h, sigma + offset);
    let converge = || Error::Convergence { iterations: opts.max_inverse_iterations, residual: f64::NAN };
    let (_, mut psi, res_r) = f.eigvec(seed_right, false, opts.tol, opts.max_inverse_iterations).ok_or_else(converge)?;
    let (_, chi, res_l) = f.eigvec(seed_left, true, opts.tol, opts.max_inverse_iterations).ok_or_else(converge)?;
    let residual = res_r.max(res_l);
    if !(residual <= opts.tol * scale * T::lit(1e3)) {
        return Err(Error::Convergence { iterations: opts.max_inverse_iterations, residual: residual.as_f64() });
    }
    fix_phase(&mut psi, phase_ref);
    let projection = RankOneProjection::oblique(psi, chi)?;
    let hpsi = f.h.matvec(&projection.right);
    let energy = dot(&projection.left, &hpsi);
    let mu2 = f.second_distance(&projection).ok_or_else(converge)?;
    let near = modulus(energy - f.shift).max(T::eps() * scale);
    Ok(TrackPoint { g, energy, projection, isolation: mu2 / near, residual })
}

/// Real segment 0 → ρ followed by `n_circle` equispaced points on |g| = ρ
/// (starting at θ = 0). The second value indexes the circle samples in the path.
pub fn circle_path<T: Real>(rho: T, n_radial: usize, n_circle: usize) -> (Vec<Cx<T>>, Range<usize>) {
    let mut path = Vec::with_capacity(n_radial + n_circle + 1);
    path.push(Cx::new(T::zero(), T::zero()));
    for k in 1..=n_radial {
        path.push(Cx::new(rho * T::from_count(k) / T::from_count(n_radial), T::zero()));
    }
    let start = path.len() - 1;
    let two_pi = T::two_pi();
    for j in 1..n_circle {
        path.push(cis(two_pi * T::from_count(j) / T::from_count(n_circle)) * Cx::new(rho, T::zero()));
    }
    (path, start..start + n_circle)
}

/// Trapezoid rule for (1/2πi)∮ E(g)/g dg on a circle: the mean of equispaced samples.
pub fn cauchy_mean<T: Real>(samples: &[Cx<T>]) -> Cx<T> {
    let s = samples.iter().fold(Cx::new(T::zero(), T::zero()), |a, &b| a + b);
    s / Cx::new(T::from_count(samples.len()), T::zero())
}

/// Picks the tracked points whose couplings equal `path[range]`, in path order.
pub fn select_points<'a, T: Real>(track: &'a [TrackPoint<T>], wanted: &[Cx<T>]) -> Option<Vec<&'a TrackPoint<T>>> {
    wanted.iter().map(|g| track.iter().find(|p| p.g == *g)).collect()
}

/// Largest ĝ on the grid 0, g_max/n, …, g_max such that gap(g) ≥ gap(0)/2 for every grid g ≤ ĝ.
pub fn isolation_window<T, F>(family: F, start: &[Cx<T>], g_max: T, n: usize, tol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<SparseOperator<T>>,
{
    let gap0 = ground_state_operator(&family(T::zero())?, start, tol, max_iter)?.gap;
    let mut window = T::zero();
    for k in 1..=n {
        let g = g_max * T::from_count(k) / T::from_count(n);
        let r = ground_state_operator(&family(g)?, start, tol, max_iter)?;
        if r.gap < gap0 * T::lit(0.5) {
            break;
        }
        window = g;
    }
    Ok(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_hamiltonian, ModelConfig, PhotonConfig, QedModelSpec};
    use crate::atom::{AtomConfig, Lattice, Potential};
    use crate::photon::{FockCaps, Mode};
    use crate::scalar::cx;

    fn model(nodes: usize, n_max: usize) -> ModelConfig<f64> {
        let atom = AtomConfig::single(Potential::soft_coulomb(), Lattice::line(nodes, 8.0));
        let modes = vec![
            Mode::new([0.3, 0.4, 0.5], 1, 0.2).unwrap(),
            Mode::new([0.3, 0.4, 0.5], 2, 0.2).unwrap(),
            Mode::new([-0.6, 0.1, 0.2], 1, 0.3).unwrap(),
        ];
        ModelConfig::new(atom, PhotonConfig::explicit(modes, 1.0, 0.0), FockCaps::total(n_max))
    }

    fn hermitian_random(n: usize, seed: usize) -> SparseOperator<f64> {
        let v = quasi_random::<f64>(n * n, seed);
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if (r + 2 * c) % 3 == 0 || r == c {
                    t.push((r, c, v[r * n + c]));
                }
            }
        }
        let a = SparseOperator::from_triplets(n, n, t, Hermiticity::General).unwrap();
        a.add(&a.adjoint()).unwrap().with_hermiticity(Hermiticity::Hermitian)
    }

    #[test]
    fn lanczos_matches_dense_on_random_hermitian() {
        for (n, seed) in [(1, 0), (2, 1), (7, 2), (60, 3), (150, 4)] {
            let h = hermitian_random(n, seed);
            let r = ground_state_operator(&h, &quasi_random(n, 9), 1e-12, 20_000).unwrap();
            let d = dense_spectrum(&h, 2, false).unwrap();
            let scale = spectral_scale(&h);
            assert!((r.energy.re - d.values[0].re).abs() <= 1e-9 * scale, "n = {n}");
            if n > 1 {
                assert!((r.gap - (d.values[1].re - d.values[0].re)).abs() <= 1e-8 * scale, "n = {n}");
            }
            assert!((norm(&r.vector) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one_and_diagonal() {
        let h = SparseOperator::from_diagonal(vec![cx(2.5, 0.0)]);
        let d = dense_spectrum(&h, 5, false).unwrap();
        assert_eq!(d.values, vec![cx(2.5, 0.0)]);
        let diag = SparseOperator::from_diagonal(vec![cx(3.0, 0.0), cx(-1.0, 0.0), cx(0.5, 0.0)])
            .with_hermiticity(Hermiticity::Hermitian);
        assert_eq!(dense_spectrum(&diag, 3, false).unwrap().real_values(), vec![-1.0, 0.5, 3.0]);
    }

    #[test]
    fn decoupled_ground_state_is_product() {
        let cfg = model(31, 2);
        let f = cfg.build().unwrap();
        let h = assemble_hamiltonian(&QedModelSpec::generic(cfg, cx(0.0, 0.0), 1.0), &f).unwrap();
        let r = ground_state(&h, 1e-12, 10_000).unwrap();
        assert!((r.energy.re - f.atom.e_at()).abs() < 1e-10);
        let overlap = modulus(dot(&h.reference, &r.vector));
        assert!(overlap > 1.0 - 1e-10);
        assert!(r.gap > 0.0 && !r.degenerate);
    }

    #[test]
    fn evenness_is_bitwise() {
        let cfg = model(21, 3);
        let f = cfg.build().unwrap();
        let hp = assemble_hamiltonian(&QedModelSpec::generic(cfg.clone(), cx(0.3, 0.0), 1.0), &f).unwrap();
        let hm = assemble_hamiltonian(&QedModelSpec::generic(cfg, cx(-0.3, 0.0), 1.0), &f).unwrap();
        let a = ground_state(&hp, 1e-12, 10_000).unwrap();
        let b = ground_state(&hm, 1e-12, 10_000).unwrap();
        assert_eq!(a.energy, b.energy);
    }

    #[test]
    fn projection_algebra() {
        let right = quasi_random::<f64>(12, 1);
        let left = quasi_random::<f64>(12, 2);
        let p = RankOneProjection::oblique(right, left).unwrap();
        assert!((p.trace() - cx(1.0, 0.0)).norm() < 1e-14);
        assert!(p.idempotency_defect() < 1e-13);
        let x = quasi_random::<f64>(12, 5);
        let px = p.apply(&x);
        let ppx = p.apply(&px);
        assert!(px.iter().zip(&ppx).all(|(a, b)| (a - b).norm() < 1e-12));
        let dense = p.to_dense();
        assert!((p.adjoint().to_dense() - dense.adjoint()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn tracking_on_real_path_matches_ground_state() {
        let cfg = model(15, 2);
        let f = cfg.build().unwrap();
        let terms = std::sync::Arc::new(crate::assembly::CouplingTerms::build(&f, 1.0).unwrap());
        let start = f.reference_state();
        let path: Vec<_> = (0..=5).map(|k| cx(0.02 * k as f64, 0.0)).collect();
        let t = terms.clone();
        let track = track_eigenvalue_complex_g(move |g| t.hamiltonian(g), &path, &start, &TrackOptions::default())
            .into_result()
            .unwrap();
        for g in &path {
            let pt = track.iter().find(|p| p.g == *g).unwrap();
            let h = terms.hamiltonian(*g).unwrap();
            let gs = ground_state_operator(&h, &start, 1e-12, 10_000).unwrap();
            assert!((pt.energy - gs.energy).norm() < 1e-9, "g = {g}");
            assert!(pt.isolation >= 5.0);
        }
    }

    #[test]
    fn conjugate_pair_projections_are_adjoint() {
        let cfg = model(11, 2);
        let f = cfg.build().unwrap();
        let terms = std::sync::Arc::new(crate::assembly::CouplingTerms::build(&f, 1.0).unwrap());
        let start = f.reference_state();
        let z = cx(0.05, 0.05) / cx(2f64.sqrt(), 0.0);
        let steps = 4;
        let mut path = vec![cx(0.0, 0.0)];
        path.extend((1..=steps).map(|k| z * cx(k as f64 / steps as f64, 0.0)));
        let mut conj_path = vec![cx(0.0, 0.0)];
        conj_path.extend(path[1..].iter().map(|g| g.conj()));
        let t = terms.clone();
        let a = track_eigenvalue_complex_g(|g| t.hamiltonian(g), &path, &start, &TrackOptions::default()).into_result().unwrap();
        let b = track_eigenvalue_complex_g(|g| t.hamiltonian(g), &conj_path, &start, &TrackOptions::default()).into_result().unwrap();
        let pa = &a.last().unwrap().projection;
        let pb = &b.last().unwrap().projection;
        assert!(pa.adjoint().max_entry_distance(pb) < 1e-8);
        assert!((a.last().unwrap().energy.conj() - b.last().unwrap().energy).norm() < 1e-10);
        assert!(pa.idempotency_defect() < 1e-10);
    }

    #[test]
    fn cauchy_mean_recovers_center() {
        let cfg = model(11, 2);
        let f = cfg.build().unwrap();
        let terms = crate::assembly::CouplingTerms::build(&f, 1.0).unwrap();
        let start = f.reference_state();
        let (path, range) = circle_path(0.05, 4, 24);
        let track = track_eigenvalue_complex_g(|g| terms.hamiltonian(g), &path, &start, &TrackOptions::default())
            .into_result()
            .unwrap();
        let pts = select_points(&track, &path[range]).unwrap();
        let vals: Vec<_> = pts.iter().map(|p| p.energy).collect();
        let e0 = cauchy_mean(&vals);
        assert!((e0 - cx(f.atom.e_at(), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn tracking_requires_start_at_zero() {
        let h = SparseOperator::<f64>::identity(2).with_hermiticity(Hermiticity::Hermitian);
        let t = track_eigenvalue_complex_g(|_| Ok(h.clone()), &[cx(0.1, 0.0)], &quasi_random(2, 0), &TrackOptions::default());
        assert!(matches!(t.error, Some(Error::Domain(_))));
    }

    #[test]
    fn collision_is_reported_as_tracking_loss() {
        // two levels crossing at g = 1: diag(g, 1 - g) plus nothing else
        let family = |g: Cx<f64>| {
            Ok(SparseOperator::from_diagonal(vec![g, cx(1.0, 0.0) - g]).with_hermiticity(Hermiticity::General))
        };
        let path: Vec<_> = (0..=10).map(|k| cx(0.1 * k as f64, 0.0)).collect();
        let start = vec![cx(1.0, 0.0), cx(0.0, 0.0)];
        let t = track_eigenvalue_complex_g(family, &path, &start, &TrackOptions::default());
        assert!(matches!(t.error, Some(Error::TrackingLoss { .. })), "{:?}", t.error);
        assert!(!t.points.is_empty());
    }

    #[test]
    fn general_dense_spectrum_uses_schur() {
        let h = SparseOperator::from_triplets(
            2,
            2,
            vec![(0, 0, cx(1.0, 1.0)), (0, 1, cx(1.0, 0.0)), (1, 1, cx(-1.0, 0.0))],
            Hermiticity::General,
        )
        .unwrap();
        let d = dense_spectrum(&h, 2, false).unwrap();
        assert!((d.values[0] - cx(-1.0, 0.0)).norm() < 1e-12);
        assert!((d.values[1] - cx(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn capacity_error_over_dense_cap() {
        let h = SparseOperator::<f64>::identity(10);
        assert!(matches!(dense_spectrum_capped(&h, 1, false, 5), Err(Error::Capacity { .. })));
    }
}
