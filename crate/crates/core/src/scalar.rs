//! Scalar abstraction shared by every numerical module.
//!
//! All operators carry complex entries over a real field `T`; the crate root
//! exposes `f64` aliases for the common case.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field usable by the operators and solvers (implemented for `f32` and `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("representable count")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

pub type Cx<T> = Complex<T>;

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// e^{iθ}
#[inline]
pub fn cis<T: Real>(theta: T) -> Cx<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn modulus<T: Real>(z: Cx<T>) -> T {
    z.re.hypot(z.im)
}

/// Square root on the principal branch.
pub fn csqrt<T: Real>(z: Cx<T>) -> Cx<T> {
    let r = modulus(z);
    if r == T::zero() {
        return Cx::new(T::zero(), T::zero());
    }
    let half = T::lit(0.5);
    let a = ((r + z.re) * half).sqrt();
    let b = ((r - z.re) * half).sqrt();
    if z.im < T::zero() {
        Cx::new(a, -b)
    } else {
        Cx::new(a, b)
    }
}

/// Hermitian inner product ⟨u, v⟩ = Σ conj(u_i) v_i.
pub fn dot<T: Real>(u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .fold(Cx::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
}

/// Bilinear product Σ u_i v_i (no conjugation).
pub fn bilinear<T: Real>(u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
    u.iter()
        .zip(v)
        .fold(Cx::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
}

pub fn norm<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// y ← y + a x
pub fn axpy<T: Real>(a: Cx<T>, x: &[Cx<T>], y: &mut [Cx<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale<T: Real>(a: Cx<T>, x: &mut [Cx<T>]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

/// Normalizes in place and returns the former norm.
pub fn normalize<T: Real>(v: &mut [Cx<T>]) -> T {
    let n = norm(v);
    if n > T::zero() {
        let inv = re(T::one() / n);
        scale(inv, v);
    }
    n
}

pub fn zeros<T: Real>(n: usize) -> Vec<Cx<T>> {
    vec![Cx::new(T::zero(), T::zero()); n]
}

pub fn unit<T: Real>(n: usize, i: usize) -> Vec<Cx<T>> {
    let mut v = zeros(n);
    v[i] = Cx::new(T::one(), T::zero());
    v
}

/// Deterministic pseudo-random vector with entries in [-0.5, 0.5) (golden-ratio sequence).
pub fn quasi_random<T: Real>(n: usize, salt: usize) -> Vec<Cx<T>> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    const SQRT2: f64 = 0.414_213_562_373_095_1;
    (0..n)
        .map(|i| {
            let k = (i + 1 + 7919 * salt) as f64;
            let a = (k * PHI).fract() - 0.5;
            let b = (k * SQRT2).fract() - 0.5;
            Cx::new(T::lit(a), T::lit(b))
        })
        .collect()
}
