//! Series in the coupling: Rayleigh–Schrödinger coefficients, infrared-cutoff
//! studies, least-squares fits in g², α-scans and β-scans.
//!
//! The RS recursion uses intermediate normalization ⟨ψ₀, ψ_n⟩ = 0 (n ≥ 1) with
//! the split H(g) = H₀ + g W₁ + g² W₂:
//!
//!   E_n = ⟨ψ₀, W₁ ψ_{n−1}⟩ + ⟨ψ₀, W₂ ψ_{n−2}⟩
//!   (H₀ − E₀) ψ_n = Q[−W₁ ψ_{n−1} − W₂ ψ_{n−2} + Σ_{k=1}^{n−1} E_k ψ_{n−k}]
//!
//! where Q projects off ψ₀. Each reduced-resolvent system is solved by
//! conjugate gradients on Q(H₀ − E₀)Q, which is positive definite on range(Q).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{alpha_coupling, CouplingTerms, ModelConfig, ModelFactors};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, modulus, norm, re, zeros, Cx, Real};
use crate::sparse::SparseOperator;
use crate::spectral::{dense_spectrum, ground_state_operator, spectral_scale};

/// Default highest RS order.
pub const DEFAULT_ORDER_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesVariable {
    G,
    /// α^{3/2}
    AlphaThreeHalves,
}

impl SeriesVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeriesVariable::G => "g",
            SeriesVariable::AlphaThreeHalves => "alpha^(3/2)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius<T: Real> {
    Finite(T),
    /// Fewer than two nonzero coefficients beyond order zero.
    Infinite,
}

impl<T: Real> Radius<T> {
    pub fn is_positive(&self) -> bool {
        match self {
            Radius::Finite(r) => *r > T::zero() && r.is_finite(),
            Radius::Infinite => true,
        }
    }

    pub fn value(&self) -> Option<T> {
        match self {
            Radius::Finite(r) => Some(*r),
            Radius::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm<T: Real> {
    pub n: usize,
    pub value: T,
    pub error: T,
}

/// Coefficients c_n of E = Σ c_n xⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients<T: Real> {
    pub variable: SeriesVariable,
    pub ir_cutoff: T,
    pub orders: Vec<SeriesTerm<T>>,
    pub radius: Radius<T>,
    /// ‖ψ_n‖ for the RS corrections (empty for fits).
    pub psi_norms: Vec<T>,
    /// Highest order unaffected by the Fock truncation (None for fits). The
    /// radius estimate only uses orders up to it.
    pub exact_order: Option<usize>,
}

impl<T: Real> SeriesCoefficients<T> {
    pub fn get(&self, n: usize) -> Option<T> {
        self.orders.iter().find(|t| t.n == n).map(|t| t.value)
    }

    /// Largest |odd coefficient| relative to the largest |even coefficient| of order ≥ 2.
    pub fn odd_to_even_ratio(&self) -> T {
        let odd = self.orders.iter().filter(|t| t.n % 2 == 1).fold(T::zero(), |m, t| m.max(t.value.abs()));
        let even = self.orders.iter().filter(|t| t.n % 2 == 0 && t.n >= 2).fold(T::zero(), |m, t| m.max(t.value.abs()));
        if even > T::zero() {
            odd / even
        } else {
            odd
        }
    }
}

/// Radius of convergence in x from even coefficients c_2, c_4, … by the ratio
/// test on a_m = c_{2m}, with a Domb–Sykes linear extrapolation in 1/m when
/// three or more coefficients are available.
pub fn ratio_radius<T: Real>(orders: &[SeriesTerm<T>]) -> Radius<T> {
    let mut evens: Vec<(usize, T, T)> =
        orders.iter().filter(|t| t.n >= 2 && t.n % 2 == 0).map(|t| (t.n / 2, t.value, t.error)).collect();
    evens.sort_by_key(|e| e.0);
    let top = evens.iter().fold(T::zero(), |m, e| m.max(e.1.abs()));
    // zero within roundoff or within three standard errors
    let cut = top * T::lit(1e-10);
    let nonzero: Vec<(usize, T)> =
        evens.into_iter().filter(|e| e.1.abs() > cut && e.1.abs() > T::lit(3.0) * e.2).map(|e| (e.0, e.1)).collect();
    if nonzero.len() < 2 {
        return Radius::Infinite;
    }
    // ratios r_m = |a_{m+1} / a_m| → 1/R²
    let ratios: Vec<(T, T)> = nonzero
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| (T::from_count(w[0].0), (w[1].1 / w[0].1).abs()))
        .collect();
    let inv_r2 = match ratios.as_slice() {
        [] => {
            let (m0, a0) = nonzero[0];
            let (m1, a1) = nonzero[nonzero.len() - 1];
            (a1 / a0).abs().powf(T::one() / T::from_count(m1 - m0))
        }
        [.., (m1, r1), (m2, r2)] => {
            let ds = (*m2 * *r2 - *m1 * *r1) / (*m2 - *m1);
            if ds > T::zero() && ds.is_finite() {
                ds
            } else {
                *r2
            }
        }
        [(_, r)] => *r,
    };
    if inv_r2 > T::zero() && inv_r2.is_finite() {
        Radius::Finite(T::one() / inv_r2.sqrt())
    } else {
        Radius::Infinite
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T: Real> {
    /// Relative residual tolerance (eigen solves: ×‖H‖; linear solves: ×‖rhs‖).
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions { tol: T::lit(1e-12), max_iter: 20_000 }
    }
}

/// The g = 0 problem: ψ₀ = φ_at ⊗ Ω, E₀ and the gap of H₀.
#[derive(Debug, Clone)]
pub struct Unperturbed<T: Real> {
    pub psi0: Vec<Cx<T>>,
    pub e0: T,
    pub gap: T,
}

impl<T: Real> Unperturbed<T> {
    pub fn from_factors(factors: &ModelFactors<T>, h0: &SparseOperator<T>) -> Result<Self> {
        let psi0 = factors.reference_state();
        let e0 = dot(&psi0, &h0.matvec(&psi0)).re;
        let atom_gap = factors.atom.gap();
        let photon_gap = factors.grid.min_energy();
        let gap = match (atom_gap, photon_gap) {
            (Some(a), Some(p)) => a.min(p),
            (Some(a), None) => a,
            (None, Some(p)) => p,
            (None, None) => T::lit(f64::INFINITY),
        };
        let scale = spectral_scale(h0);
        if !(gap > T::lit(1e-10) * scale) {
            return Err(Error::IllConditionedGap(gap.as_f64()));
        }
        Ok(Unperturbed { psi0, e0, gap })
    }
}

/// CG for Q(H₀ − E₀)Q x = Q b; returns the solution and its relative residual.
fn reduced_resolvent<T: Real>(
    h0: &SparseOperator<T>,
    u: &Unperturbed<T>,
    rhs: &[Cx<T>],
    opts: &SolveOptions<T>,
) -> Result<(Vec<Cx<T>>, T)> {
    let n = rhs.len();
    let project = |v: &mut Vec<Cx<T>>| {
        let c = dot(&u.psi0, v);
        axpy(-c, &u.psi0, v);
    };
    let apply = |v: &[Cx<T>]| {
        let mut w = h0.matvec(v);
        axpy(re(-u.e0), v, &mut w);
        let mut w = w;
        project(&mut w);
        w
    };
    let mut b = rhs.to_vec();
    project(&mut b);
    let bnorm = norm(&b);
    let mut x = zeros::<T>(n);
    if bnorm == T::zero() {
        return Ok((x, T::zero()));
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let target = opts.tol * bnorm;
    let mut best = T::one();
    for _ in 0..opts.max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap).re;
        if !(pap > T::zero()) {
            return Err(Error::IllConditionedGap(u.gap.as_f64()));
        }
        let a = rr / pap;
        axpy(re(a), &p, &mut x);
        axpy(re(-a), &ap, &mut r);
        let rr_new = dot(&r, &r).re;
        let rel = rr_new.sqrt() / bnorm;
        best = best.min(rel);
        if rr_new.sqrt() <= target {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = *ri + *pi * re(beta);
        }
    }
    project(&mut x);
    // true residual
    let mut res = apply(&x);
    for (a, bb) in res.iter_mut().zip(&b) {
        *a = *bb - *a;
    }
    let rel = norm(&res) / bnorm;
    if !(rel <= T::lit(1e-8).max(T::eps() * T::lit(1e3))) {
        return Err(Error::IllConditionedGap(u.gap.as_f64()));
    }
    Ok((x, rel))
}

/// Rayleigh–Schrödinger coefficients E_0 … E_{order_max} of E(g) at g = 0.
pub fn rs_coefficients<T: Real>(
    terms: &CouplingTerms<T>,
    factors: &ModelFactors<T>,
    order_max: usize,
    opts: &SolveOptions<T>,
) -> Result<SeriesCoefficients<T>> {
    if order_max > DEFAULT_ORDER_CAP {
        return Err(Error::Capacity { what: "RS order".into(), size: order_max, limit: DEFAULT_ORDER_CAP });
    }
    let h0 = terms.unperturbed()?;
    let u = Unperturbed::from_factors(factors, &h0)?;
    let w1 = &terms.cross;
    let w2 = &terms.diamagnetic;
    let w1_psi0 = norm(&w1.matvec(&u.psi0));
    let w2_psi0 = norm(&w2.matvec(&u.psi0));
    let mut psi: Vec<Vec<Cx<T>>> = vec![u.psi0.clone()];
    let mut energies: Vec<T> = vec![u.e0];
    // error bound on each ψ_n from its CG residual: ‖δψ_n‖ ≤ rel·‖rhs‖/gap
    let mut psi_err: Vec<T> = vec![T::zero()];
    let mut orders = vec![SeriesTerm { n: 0, value: u.e0, error: T::zero() }];
    let mut psi_norms = vec![T::one()];
    for n in 1..=order_max {
        let mut e = dot(&u.psi0, &w1.matvec(&psi[n - 1]));
        if n >= 2 {
            e += dot(&u.psi0, &w2.matvec(&psi[n - 2]));
        }
        let mut err = w1_psi0 * psi_err[n - 1];
        if n >= 2 {
            err += w2_psi0 * psi_err[n - 2];
        }
        err += e.im.abs();
        energies.push(e.re);
        orders.push(SeriesTerm { n, value: e.re, error: err });
        if n == order_max {
            break;
        }
        let mut rhs = w1.matvec(&psi[n - 1]);
        for z in rhs.iter_mut() {
            *z = -*z;
        }
        if n >= 2 {
            axpy(re(-T::one()), &w2.matvec(&psi[n - 2]), &mut rhs);
        }
        for k in 1..n {
            axpy(re(energies[k]), &psi[n - k], &mut rhs);
        }
        let (x, rel) = reduced_resolvent(&h0, &u, &rhs, opts)?;
        psi_err.push(rel * norm(&rhs) / u.gap);
        psi_norms.push(norm(&x));
        psi.push(x);
    }
    // ψ_k carries at most k photons, and E_{2k+1} needs ψ_j only up to j = k,
    // so orders through 2n + 1 are those of the untruncated model.
    let exact_order = 2 * factors.basis.complete_photon_number() + 1;
    let kept: Vec<SeriesTerm<T>> = orders.iter().copied().filter(|t| t.n <= exact_order).collect();
    let radius = ratio_radius(&kept);
    Ok(SeriesCoefficients {
        variable: SeriesVariable::G,
        ir_cutoff: factors.grid.ir_cutoff(),
        orders,
        radius,
        psi_norms,
        exact_order: Some(exact_order),
    })
}

/// RS coefficients for a model configuration at coupling argument β.
pub fn rs_for_model<T: Real>(
    config: &ModelConfig<T>,
    beta: T,
    order_max: usize,
    opts: &SolveOptions<T>,
) -> Result<SeriesCoefficients<T>> {
    let factors = config.build()?;
    let terms = CouplingTerms::build(&factors, beta)?;
    rs_coefficients(&terms, &factors, order_max, opts)
}

/// Step of the finite-difference oracle: h = 10⁻³ × spectral scale of H₀.
pub fn fd_step<T: Real>(h0: &SparseOperator<T>) -> T {
    T::lit(1e-3) * spectral_scale(h0)
}

/// E₂ = E''(0)/2 and E₄ = E''''(0)/24 from fourth-order central stencils at
/// steps h and 2h, combined by one Richardson step (error O(h⁶)). Uses
/// E(−g) = E(g), so only g = 0, h, 2h, 3h, 4h, 6h are evaluated.
pub fn fd_even_coefficients<T, F>(energy: F, h: T) -> Result<(T, T)>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    let mut f = Vec::with_capacity(6);
    for j in [0usize, 1, 2, 3, 4, 6] {
        f.push(energy(h * T::from_count(j))?);
    }
    let (e2h, e4h) = fd_stencils(f[0], f[1], f[2], f[3], h);
    let (e2d, e4d) = fd_stencils(f[0], f[2], f[4], f[5], h * T::lit(2.0));
    let sixteen = T::lit(16.0);
    Ok(((sixteen * e2h - e2d) / T::lit(15.0), (sixteen * e4h - e4d) / T::lit(15.0)))
}

/// The plain stencils from f(0), f(h), f(2h), f(3h) of an even function.
pub fn fd_stencils<T: Real>(f0: T, f1: T, f2: T, f3: T, h: T) -> (T, T) {
    let h2 = h * h;
    // f'' ≈ [−f(2h) + 16 f(h) − 30 f(0) + 16 f(−h) − f(−2h)] / 12h²
    let d2 = (T::lit(-2.0) * f2 + T::lit(32.0) * f1 - T::lit(30.0) * f0) / (T::lit(12.0) * h2);
    // f'''' ≈ [−f(3h) + 12 f(2h) − 39 f(h) + 56 f(0) − 39 f(−h) + 12 f(−2h) − f(−3h)] / 6h⁴
    let d4 = (T::lit(-2.0) * f3 + T::lit(24.0) * f2 - T::lit(78.0) * f1 + T::lit(56.0) * f0) / (T::lit(6.0) * h2 * h2);
    (d2 / T::lit(2.0), d4 / T::lit(24.0))
}

/// Lowest eigenvalue by dense diagonalization (the FD oracle's backend).
pub fn dense_ground_energy<T: Real>(h: &SparseOperator<T>) -> Result<T> {
    Ok(dense_spectrum(h, 1, false)?.values[0].re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    NotConvergent,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Convergent => "convergent",
            Verdict::NotConvergent => "not-convergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrOrder<T: Real> {
    pub order: usize,
    /// Coefficient per rung, in ladder order.
    pub values: Vec<T>,
    /// Δ(ε_m) = |c(ε_{m+1}) − c(ε_m)|
    pub increments: Vec<T>,
    pub monotone: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrStudy<T: Real> {
    pub ladder: Vec<T>,
    pub n_modes: Vec<usize>,
    pub orders: Vec<IrOrder<T>>,
}

impl<T: Real> IrStudy<T> {
    pub fn order(&self, n: usize) -> Option<&IrOrder<T>> {
        self.orders.iter().find(|o| o.order == n)
    }
}

/// Convergent iff the last three increments (or all, if fewer) are
/// non-increasing and strictly decreasing wherever nonzero.
pub fn cauchy_verdict<T: Real>(increments: &[T]) -> Verdict {
    let tail = &increments[increments.len().saturating_sub(3)..];
    let ok = tail.windows(2).all(|w| w[1] < w[0] || (w[1] == T::zero() && w[0] == T::zero()));
    if ok {
        Verdict::Convergent
    } else {
        Verdict::NotConvergent
    }
}

/// RS coefficients over a strictly decreasing ε ladder (at least 4 rungs,
/// all below Λ). Modes with |k| < ε are excluded from a fixed quadrature.
pub fn ir_convergence_study<T: Real>(
    config: &ModelConfig<T>,
    beta: T,
    ladder: &[T],
    order_max: usize,
    opts: &SolveOptions<T>,
) -> Result<IrStudy<T>> {
    if ladder.len() < 4 {
        return Err(Error::Domain("the ε ladder needs at least 4 rungs".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain("the ε ladder must be strictly decreasing".into()));
    }
    if ladder.iter().any(|&e| !(e < config.photons.uv_cutoff) || e < T::zero()) {
        return Err(Error::Domain("every ε must lie in [0, Λ)".into()));
    }
    let runs: Vec<Result<(usize, SeriesCoefficients<T>)>> = ladder
        .par_iter()
        .map(|&eps| {
            let cfg = ModelConfig { photons: config.photons.with_ir_cutoff(eps), ..config.clone() };
            let factors = cfg.build()?;
            let terms = CouplingTerms::build(&factors, beta)?;
            Ok((factors.grid.len(), rs_coefficients(&terms, &factors, order_max, opts)?))
        })
        .collect();
    let mut n_modes = Vec::with_capacity(ladder.len());
    let mut series = Vec::with_capacity(ladder.len());
    for r in runs {
        let (m, s) = r?;
        n_modes.push(m);
        series.push(s);
    }
    let mut orders = Vec::new();
    for n in 0..=order_max {
        let values: Vec<T> = series.iter().map(|s| s.get(n).unwrap_or_else(T::zero)).collect();
        let increments: Vec<T> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let up = values.windows(2).all(|w| w[1] >= w[0]);
        let down = values.windows(2).all(|w| w[1] <= w[0]);
        orders.push(IrOrder { order: n, verdict: cauchy_verdict(&increments), monotone: up || down, values, increments });
    }
    Ok(IrStudy { ladder: ladder.to_vec(), n_modes, orders })
}

/// Least-squares fit of E(x) by Σ_k c_k x^k. With `even_only` the basis is
/// {1, x², …, x^{2·degree}}; otherwise {1, x, …, x^{2·degree}}.
pub fn fit_series<T: Real>(
    samples: &[(T, T)],
    degree: usize,
    even_only: bool,
    variable: SeriesVariable,
) -> Result<SeriesCoefficients<T>> {
    let powers: Vec<usize> = if even_only { (0..=degree).map(|k| 2 * k).collect() } else { (0..=2 * degree).collect() };
    let p = powers.len();
    let m = samples.len();
    if m < degree + 3 || m < p {
        return Err(Error::Domain(format!("{m} samples are too few for degree {degree}")));
    }
    let xmax = samples.iter().fold(T::zero(), |a, s| a.max(s.0.abs()));
    if !(xmax > T::zero()) {
        return Err(Error::Domain("fit samples must not all sit at x = 0".into()));
    }
    let (coef, stderr, condition) = least_squares(samples, &powers, xmax)?;
    if condition > T::lit(1e12) {
        return Err(Error::Fit { condition: condition.as_f64() });
    }
    let orders: Vec<SeriesTerm<T>> = powers
        .iter()
        .zip(coef.iter().zip(&stderr))
        .map(|(&n, (&c, &e))| {
            let s = xmax.powi(n as i32);
            SeriesTerm { n, value: c / s, error: e / s }
        })
        .collect();
    let radius = ratio_radius(&orders);
    Ok(SeriesCoefficients { variable, ir_cutoff: T::zero(), orders, radius, psi_norms: Vec::new(), exact_order: None })
}

/// Scaled-basis least squares via SVD: coefficients, standard errors (from
/// the residual variance) and the condition number of the design matrix.
fn least_squares<T: Real>(samples: &[(T, T)], powers: &[usize], xscale: T) -> Result<(Vec<T>, Vec<T>, T)> {
    let m = samples.len();
    let p = powers.len();
    let a = DMatrix::from_fn(m, p, |r, c| (samples[r].0 / xscale).powi(powers[c] as i32));
    let b = DVector::from_fn(m, |r, _| samples[r].1);
    generic_least_squares(a, b)
}

fn generic_least_squares<T: Real>(a: DMatrix<T>, b: DVector<T>) -> Result<(Vec<T>, Vec<T>, T)> {
    let (m, p) = a.shape();
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |x, &s| x.max(s));
    let smin = svd.singular_values.iter().fold(T::max_value().unwrap_or_else(T::one), |x, &s| x.min(s));
    let condition = if smin > T::zero() { smax / smin } else { T::max_value().unwrap_or_else(T::one) };
    if !(smin > T::zero()) {
        return Err(Error::Fit { condition: f64::INFINITY });
    }
    let x = svd.solve(&b, T::zero()).map_err(|_| Error::Fit { condition: condition.as_f64() })?;
    let resid = &a * &x - &b;
    let dof = if m > p { m - p } else { 1 };
    let sigma2 = resid.norm_squared() / T::from_count(dof);
    // cov = σ² V Σ⁻² Vᵀ
    let v_t = svd.v_t.as_ref().ok_or(Error::Fit { condition: condition.as_f64() })?;
    let stderr: Vec<T> = (0..p)
        .map(|j| {
            let mut s = T::zero();
            for (k, &sv) in svd.singular_values.iter().enumerate() {
                let v = v_t[(k, j)];
                s += v * v / (sv * sv);
            }
            (sigma2 * s).sqrt()
        })
        .collect();
    Ok((x.iter().copied().collect(), stderr, condition))
}

/// Result of the log-term fit competition.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTermReport<T: Real> {
    /// Residual sum of squares of the baseline and of the baseline + α³ log α model.
    pub rss_baseline: T,
    pub rss_log: T,
    pub log_coefficient: T,
    pub log_stderr: T,
    /// Log model improves the residual 10× with |coefficient| > 100 × its standard error.
    pub violation: bool,
}

/// Fits (E(α) − E(0))/α³ on α > 0 with the baseline {1, α², α³} (α³, α⁵, α⁶
/// terms: the α² term carries the β-dependence of E^{(2)}_α) against the
/// baseline plus log α.
pub fn log_term_test<T: Real>(alphas: &[T], delta_e: &[T]) -> Result<LogTermReport<T>> {
    let m = alphas.len();
    if m < 6 || delta_e.len() != m {
        return Err(Error::Domain("log-term test needs at least 6 samples".into()));
    }
    if alphas.iter().any(|&a| !(a > T::zero())) {
        return Err(Error::Domain("log-term test needs α > 0".into()));
    }
    let amax = alphas.iter().fold(T::zero(), |x, &a| x.max(a));
    let y = DVector::from_fn(m, |r, _| delta_e[r] / alphas[r].powi(3));
    let base = |r: usize, c: usize| {
        let a = alphas[r] / amax;
        match c {
            0 => T::one(),
            1 => a * a,
            _ => a * a * a,
        }
    };
    let a0 = DMatrix::from_fn(m, 3, base);
    let a1 = DMatrix::from_fn(m, 4, |r, c| if c < 3 { base(r, c) } else { alphas[r].ln() });
    let (x0, _, _) = generic_least_squares(a0.clone(), y.clone())?;
    let (x1, e1, _) = generic_least_squares(a1.clone(), y.clone())?;
    let rss0 = (&a0 * DVector::from_vec(x0) - &y).norm_squared();
    let rss1 = (&a1 * DVector::from_vec(x1.clone()) - &y).norm_squared();
    let (coef, se) = (x1[3], e1[3]);
    let violation = rss1 * T::lit(10.0) < rss0 && coef.abs() > T::lit(100.0) * se;
    Ok(LogTermReport { rss_baseline: rss0, rss_log: rss1, log_coefficient: coef, log_stderr: se, violation })
}

/// Least-squares slope of log|y| against log x.
pub fn log_log_slope<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    let pts: Vec<(T, T)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > T::zero() && b.abs() > T::zero())
        .map(|(a, b)| (a.ln(), b.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain("slope needs two positive samples".into()));
    }
    let n = T::from_count(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxy = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let sxx = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRow<T: Real> {
    pub alpha: T,
    pub energy: T,
    pub gap: T,
    /// |⟨φ_at ⊗ Ω, ψ(α)⟩|
    pub overlap: T,
    pub residual: T,
    /// E^{(2n)}_α: RS coefficients of H(g, β = α) at even orders 2, 4, …
    pub coefficients: Vec<T>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScan<T: Real> {
    pub rows: Vec<AlphaRow<T>>,
    pub e0: T,
    pub gap0: T,
    /// Even fit of E(α) in x = α^{3/2}: coefficients of 1, α³, α⁶.
    pub fit: Option<SeriesCoefficients<T>>,
    /// Slope of log|E(α) − E(0)| against log α over the scan's positive α.
    pub slope: Option<T>,
    pub log_test: Option<LogTermReport<T>>,
    /// Max |d/dα E^{(2n)}_α| by finite differences, per even order.
    pub derivative_sup: Vec<T>,
    /// True when every row converged inside the isolation window.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaScanOptions<T: Real> {
    pub solve: SolveOptions<T>,
    /// Highest even RS order extracted per α (0 disables the coefficient columns).
    pub rs_order: usize,
    /// Rows with gap < gap(0)·gap_fraction or overlap < min_overlap fail.
    pub gap_fraction: T,
    pub min_overlap: T,
    /// Even-fit degree in α³ (coefficients of α³, …, α^{3·degree}).
    pub fit_degree: usize,
}

impl<T: Real> Default for AlphaScanOptions<T> {
    fn default() -> Self {
        AlphaScanOptions {
            solve: SolveOptions::default(),
            rs_order: 4,
            gap_fraction: T::lit(0.5),
            min_overlap: T::lit(0.5),
            fit_degree: 2,
        }
    }
}

/// Ground states of H(α^{3/2}, α, Λ) over an α grid, with coefficient
/// extraction, slope, log-term test and smoothness diagnostics.
pub fn alpha_scan<T: Real>(factors: &ModelFactors<T>, alphas: &[T], opts: &AlphaScanOptions<T>) -> Result<AlphaScan<T>> {
    if alphas.iter().any(|&a| !(a >= T::zero())) {
        return Err(Error::Domain("α must be non-negative".into()));
    }
    let terms0 = CouplingTerms::build(factors, T::zero())?;
    let h0 = terms0.unperturbed()?;
    let start = factors.reference_state();
    let g0 = ground_state_operator(&h0, &start, opts.solve.tol, opts.solve.max_iter)?;
    let (e0, gap0) = (g0.energy.re, g0.gap);
    let rows: Vec<AlphaRow<T>> = alphas
        .par_iter()
        .map(|&alpha| alpha_point(factors, alpha, &start, gap0, opts))
        .collect();
    let complete = rows.iter().all(|r| r.status.is_ok());
    let good: Vec<&AlphaRow<T>> = rows.iter().filter(|r| r.status.is_ok()).collect();
    let positive: Vec<&AlphaRow<T>> = good.iter().copied().filter(|r| r.alpha > T::zero()).collect();
    let xs: Vec<T> = positive.iter().map(|r| r.alpha).collect();
    let ys: Vec<T> = positive.iter().map(|r| r.energy - e0).collect();
    let slope = log_log_slope(&xs, &ys).ok();
    let log_test = log_term_test(&xs, &ys).ok();
    let samples: Vec<(T, T)> = good.iter().map(|r| (alpha_coupling(r.alpha), r.energy)).collect();
    let fit = fit_series(&samples, opts.fit_degree, true, SeriesVariable::AlphaThreeHalves).ok();
    let n_coef = good.first().map_or(0, |r| r.coefficients.len());
    let derivative_sup = (0..n_coef)
        .map(|j| {
            good.windows(2)
                .filter(|w| w[1].alpha > w[0].alpha)
                .map(|w| ((w[1].coefficients[j] - w[0].coefficients[j]) / (w[1].alpha - w[0].alpha)).abs())
                .fold(T::zero(), |a, b| a.max(b))
        })
        .collect();
    Ok(AlphaScan { rows, e0, gap0, fit, slope, log_test, derivative_sup, complete })
}

fn alpha_point<T: Real>(
    factors: &ModelFactors<T>,
    alpha: T,
    start: &[Cx<T>],
    gap0: T,
    opts: &AlphaScanOptions<T>,
) -> AlphaRow<T> {
    let nan = T::lit(f64::NAN);
    let fail = |msg: String| AlphaRow {
        alpha,
        energy: nan,
        gap: nan,
        overlap: nan,
        residual: nan,
        coefficients: Vec::new(),
        status: PointStatus::Failed(msg),
    };
    let terms = match CouplingTerms::build(factors, alpha) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let h = match terms.hamiltonian(Cx::new(alpha_coupling(alpha), T::zero())) {
        Ok(h) => h,
        Err(e) => return fail(e.to_string()),
    };
    let r = match ground_state_operator(&h, start, opts.solve.tol, opts.solve.max_iter) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let overlap = modulus(dot(start, &r.vector));
    let mut row = AlphaRow {
        alpha,
        energy: r.energy.re,
        gap: r.gap,
        overlap,
        residual: r.residual,
        coefficients: Vec::new(),
        status: PointStatus::Ok,
    };
    if r.gap < gap0 * opts.gap_fraction || overlap < opts.min_overlap {
        row.status = PointStatus::Failed(format!(
            "outside the isolation window (gap {} vs {}, overlap {})",
            r.gap, gap0, overlap
        ));
        return row;
    }
    if opts.rs_order >= 2 {
        match rs_coefficients(&terms, factors, opts.rs_order, &opts.solve) {
            Ok(s) => {
                row.coefficients = (1..=opts.rs_order / 2).map(|k| s.get(2 * k).unwrap_or_else(T::zero)).collect();
            }
            Err(e) => row.status = PointStatus::Failed(e.to_string()),
        }
    }
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaScan<T: Real> {
    pub betas: Vec<T>,
    /// E_β(g); NaN where the solve failed.
    pub energies: Vec<T>,
    pub status: Vec<PointStatus>,
    /// derivatives[s−1][i]: central-difference ∂_β^s E at interior point i (NaN at the edges).
    pub derivatives: Vec<Vec<T>>,
    /// sup |∂_β^s E| over the grid, s = 0 … order.
    pub sup: Vec<T>,
    /// max |E_β − E_{−β}| over mirrored grid pairs (None when the grid has no pairs).
    pub parity_defect: Option<T>,
}

impl<T: Real> BetaScan<T> {
    pub fn complete(&self) -> bool {
        self.status.iter().all(PointStatus::is_ok)
    }
}

/// Evaluates `energy(β)` on a uniform grid (in parallel, assembled by index)
/// and estimates β-derivatives up to `order` (≤ 2) by central differences.
pub fn beta_scan<T, F>(energy: F, betas: &[T], order: usize) -> Result<BetaScan<T>>
where
    T: Real,
    F: Fn(T) -> Result<T> + Sync,
{
    if order > 2 {
        return Err(Error::Domain("β-derivatives are estimated up to order 2".into()));
    }
    if betas.len() < 3 {
        return Err(Error::Domain("β grid needs at least 3 points".into()));
    }
    let h = betas[1] - betas[0];
    let uniform_tol = T::lit(1e-9) * (h.abs() + T::one());
    if !(h > T::zero()) || betas.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > uniform_tol) {
        return Err(Error::Domain("β grid must be uniform and increasing".into()));
    }
    let results: Vec<Result<T>> = betas.par_iter().map(|&b| energy(b)).collect();
    let nan = T::lit(f64::NAN);
    let mut energies = Vec::with_capacity(betas.len());
    let mut status = Vec::with_capacity(betas.len());
    for r in results {
        match r {
            Ok(e) => {
                energies.push(e);
                status.push(PointStatus::Ok);
            }
            Err(e) => {
                energies.push(nan);
                status.push(PointStatus::Failed(e.to_string()));
            }
        }
    }
    let n = betas.len();
    let mut derivatives = Vec::new();
    for s in 1..=order {
        let d: Vec<T> = (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    return nan;
                }
                let (a, b, c) = (energies[i - 1], energies[i], energies[i + 1]);
                if s == 1 {
                    (c - a) / (T::lit(2.0) * h)
                } else {
                    (c - T::lit(2.0) * b + a) / (h * h)
                }
            })
            .collect();
        derivatives.push(d);
    }
    let sup_of = |v: &[T]| v.iter().filter(|x| x.is_finite()).fold(T::zero(), |m, x| m.max(x.abs()));
    let mut sup = vec![sup_of(&energies)];
    for d in &derivatives {
        sup.push(sup_of(d));
    }
    let mut parity: Option<T> = None;
    let tol = h * T::lit(1e-6);
    for (i, &b) in betas.iter().enumerate() {
        if b < T::zero() {
            continue;
        }
        if let Some(j) = betas.iter().position(|&x| (x + b).abs() <= tol) {
            if energies[i].is_finite() && energies[j].is_finite() {
                let d = (energies[i] - energies[j]).abs();
                parity = Some(parity.map_or(d, |p: T| p.max(d)));
            }
        }
    }
    Ok(BetaScan { betas: betas.to_vec(), energies, status, derivatives, sup, parity_defect: parity })
}

/// E_β(g) for fixed real g: builds the β-terms and solves by Lanczos from φ_at ⊗ Ω.
pub fn beta_energy<T: Real>(factors: &ModelFactors<T>, g: T, beta: T, opts: &SolveOptions<T>) -> Result<T> {
    let terms = CouplingTerms::build(factors, beta)?;
    let h = terms.hamiltonian(Cx::new(g, T::zero()))?;
    Ok(ground_state_operator(&h, &factors.reference_state(), opts.tol, opts.max_iter)?.energy.re)
}

/// Uniform grid of `n` points on [a, b].
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * T::from_count(i) / T::from_count(n - 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::PhotonConfig;
    use crate::atom::{AtomConfig, Lattice, Potential};
    use crate::photon::{FockCaps, Mode};

    fn bogoliubov(w: f64, om: f64, n_max: usize) -> ModelConfig<f64> {
        let atom = AtomConfig::single(Potential::Zero, Lattice::point());
        let modes = vec![Mode::new([0.0, 0.0, om], 1, w).unwrap()];
        ModelConfig::new(atom, PhotonConfig::explicit(modes, 2.0 * om, 0.0), FockCaps::total(n_max))
    }

    #[test]
    fn rs_matches_bogoliubov_expansion() {
        let (w, om) = (0.8, 1.3);
        let c2 = w / (2.0 * om);
        let s = rs_for_model(&bogoliubov(w, om, 12), 0.0, 8, &SolveOptions::default()).unwrap();
        assert_eq!(s.get(0), Some(0.0));
        assert_eq!(s.get(1), Some(0.0));
        assert!((s.get(2).unwrap() - c2).abs() < 1e-12);
        assert!((s.get(4).unwrap() + c2 * c2 / om).abs() < 1e-12);
        // √(1+x) series: E6 = 2c⁶/ω², E8 = −5c⁸/ω³
        assert!((s.get(6).unwrap() - 2.0 * c2.powi(3) / om.powi(2)).abs() < 1e-11);
        assert!((s.get(8).unwrap() + 5.0 * c2.powi(4) / om.powi(3)).abs() < 1e-11);
        assert!(s.get(3).unwrap() == 0.0 && s.get(5).unwrap() == 0.0 && s.get(7).unwrap() == 0.0);
        let exact = (om / (4.0 * c2)).sqrt();
        let r = s.radius.value().unwrap();
        assert!(r > 0.0 && (r - exact).abs() < 0.5 * exact, "{r} vs {exact}");
    }

    #[test]
    fn quadratic_data_has_infinite_radius() {
        let samples: Vec<(f64, f64)> = linspace::<f64>(-0.3, 0.3, 9).into_iter().map(|g| (g, 1.5 + 0.7 * g * g)).collect();
        let f = fit_series(&samples, 3, true, SeriesVariable::G).unwrap();
        assert!((f.get(0).unwrap() - 1.5).abs() < 1e-12);
        assert!((f.get(2).unwrap() - 0.7).abs() < 1e-10);
        assert_eq!(f.radius, Radius::Infinite);
    }

    #[test]
    fn unconstrained_fit_of_even_data_has_tiny_odd_terms() {
        let samples: Vec<(f64, f64)> =
            linspace::<f64>(-0.2, 0.2, 11).into_iter().map(|g| (g, -0.5 + 0.3 * g * g - 0.1 * g.powi(4))).collect();
        let f = fit_series(&samples, 2, false, SeriesVariable::G).unwrap();
        assert!(f.odd_to_even_ratio() < 1e-10);
    }

    #[test]
    fn fit_rejects_ill_conditioned_or_short_input() {
        let few = vec![(0.1, 1.0), (0.2, 1.0), (0.3, 1.0)];
        assert!(fit_series(&few, 2, true, SeriesVariable::G).is_err());
        let clustered: Vec<(f64, f64)> = (0..12).map(|i| (1.0 + 1e-9 * i as f64, 1.0)).collect();
        assert!(matches!(fit_series(&clustered, 4, true, SeriesVariable::G), Err(Error::Fit { .. })));
    }

    #[test]
    fn log_detector_fires_on_injected_log_and_not_on_polynomials() {
        let alphas = linspace::<f64>(0.01, 0.1, 12);
        let clean: Vec<f64> = alphas.iter().map(|a| 0.4 * a.powi(3) - 0.2 * a.powi(5) + 0.05 * a.powi(6)).collect();
        assert!(!log_term_test(&alphas, &clean).unwrap().violation);
        let logged: Vec<f64> = alphas.iter().map(|a| 0.4 * a.powi(3) * (1.0 + 0.5 * a.ln())).collect();
        assert!(log_term_test(&alphas, &logged).unwrap().violation);
    }

    #[test]
    fn slope_of_cubic_is_three() {
        let x = linspace::<f64>(0.01, 0.1, 10);
        let y: Vec<f64> = x.iter().map(|a| 2.0 * a.powi(3)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn verdicts() {
        assert_eq!(cauchy_verdict(&[0.3, 0.1, 0.05]), Verdict::Convergent);
        assert_eq!(cauchy_verdict(&[0.0, 0.0, 0.0]), Verdict::Convergent);
        assert_eq!(cauchy_verdict(&[0.1, 0.2, 0.05]), Verdict::NotConvergent);
    }

    #[test]
    fn ir_study_single_high_mode_has_zero_increments() {
        let atom = AtomConfig::single(Potential::soft_coulomb(), Lattice::line(21, 8.0));
        let modes = vec![Mode::new([0.0, 0.6, 0.8], 1, 0.1).unwrap()];
        let cfg: ModelConfig<f64> = ModelConfig::new(atom, PhotonConfig::explicit(modes, 1.5, 0.0), FockCaps::total(1));
        let ladder = [0.4, 0.2, 0.1, 0.05];
        let study = ir_convergence_study(&cfg, 1.0, &ladder, 2, &SolveOptions::default()).unwrap();
        let o2 = study.order(2).unwrap();
        assert!(o2.increments.iter().all(|&d| d == 0.0));
        assert_eq!(o2.verdict, Verdict::Convergent);
        let o0 = study.order(0).unwrap();
        let e_at = cfg.build().unwrap().atom.e_at();
        assert!(o0.values.iter().all(|&v| (v - e_at).abs() < 1e-12));
    }

    #[test]
    fn ir_study_rejects_bad_ladders() {
        let cfg = bogoliubov(0.5, 0.5, 2);
        let opts = SolveOptions::default();
        assert!(ir_convergence_study(&cfg, 0.0, &[0.4, 0.2, 0.1], 2, &opts).is_err());
        assert!(ir_convergence_study(&cfg, 0.0, &[0.4, 0.1, 0.2, 0.05], 2, &opts).is_err());
        assert!(matches!(ir_convergence_study(&cfg, 0.0, &[0.9, 0.8, 0.7, 0.6], 2, &opts), Err(Error::EmptyGrid(_))));
    }

    #[test]
    fn beta_scan_parity_and_derivatives() {
        let scan = beta_scan(|b: f64| Ok((2.0 * b).cos()), &linspace::<f64>(-1.0, 1.0, 201), 2).unwrap();
        assert!(scan.parity_defect.unwrap() < 1e-15);
        assert!((scan.sup[1] - 2.0).abs() < 1e-3);
        assert!((scan.sup[2] - 4.0).abs() < 1e-3);
    }
}
