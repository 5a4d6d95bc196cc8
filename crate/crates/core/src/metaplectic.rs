//! The two-fold metaplectic cover of `GL₂` at a single place and its global
//! splitting over rational matrices, plus the theta multiplier on `Γ₀(4)`.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    eps_d, hilbert_at, kronecker_shimura, prime_divisors, valuation, ArithError, Rational,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetaError {
    #[error("matrix is singular")]
    Singular,
    #[error("cannot multiply elements at different places ({0} and {1})")]
    PlaceMismatch(Place, Place),
    #[error("operation needs a local place, got the global tag")]
    GlobalPlace,
    #[error("matrix is not in Γ₀(4): {0}")]
    NotInGamma04(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Real,
    Padic(u64),
    Global,
}

impl Place {
    fn prime(self) -> Result<Option<u64>, MetaError> {
        match self {
            Place::Real => Ok(None),
            Place::Padic(p) => {
                if crate::arith::is_prime(p) {
                    Ok(Some(p))
                } else {
                    Err(ArithError::NotPrime(p).into())
                }
            }
            Place::Global => Err(MetaError::GlobalPlace),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "real"),
            Place::Padic(p) => write!(f, "{p}-adic"),
            Place::Global => write!(f, "global"),
        }
    }
}

/// A 2×2 matrix `(a b; c d)` with exact rational entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl Matrix2 {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn from_ints(a: i128, b: i128, c: i128, d: i128) -> Self {
        Matrix2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Matrix2::from_ints(1, 0, 0, 1)
    }

    /// `w = (0 1; −1 0)`.
    pub fn weyl() -> Self {
        Matrix2::from_ints(0, 1, -1, 0)
    }

    /// `n(x) = (1 x; 0 1)`.
    pub fn unipotent(x: Rational) -> Self {
        Matrix2::new(One::one(), x, Zero::zero(), One::one())
    }

    /// `a(y) = (y 0; 0 1)`.
    pub fn diag(y: Rational) -> Self {
        Matrix2::new(y, Zero::zero(), Zero::zero(), One::one())
    }

    pub fn det(&self) -> Rational {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Matrix2) -> Matrix2 {
        Matrix2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn entries(&self) -> [Rational; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Integer entries `(a, b, c, d)` if all denominators are 1.
    pub fn as_integers(&self) -> Option<[i128; 4]> {
        let e = self.entries();
        if e.iter().all(|x| x.is_integer()) {
            Some([e[0].to_integer(), e[1].to_integer(), e[2].to_integer(), e[3].to_integer()])
        } else {
            None
        }
    }
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

/// `ℓ(g)`: the lower-left entry when nonzero, else the lower-right.
pub fn ell(g: &Matrix2) -> Rational {
    if g.c.is_zero() {
        g.d
    } else {
        g.c
    }
}

fn check_invertible(g: &Matrix2) -> Result<(), MetaError> {
    if g.det().is_zero() {
        Err(MetaError::Singular)
    } else {
        Ok(())
    }
}

/// The local splitting function: `[c, d·det g]_p` when `cd ≠ 0` and `v_p(c)`
/// is odd at a finite place, `1` otherwise.
pub fn s_local(g: &Matrix2, place: Place) -> Result<i8, MetaError> {
    check_invertible(g)?;
    let Some(p) = place.prime()? else {
        return Ok(1);
    };
    if g.c.is_zero() || g.d.is_zero() || valuation(&g.c, p).rem_euclid(2) == 0 {
        return Ok(1);
    }
    Ok(hilbert_at(&g.c, &(g.d * g.det()), Some(p))?)
}

/// The local cocycle `β(g₁, g₂)`.
pub fn beta_local(g1: &Matrix2, g2: &Matrix2, place: Place) -> Result<i8, MetaError> {
    check_invertible(g1)?;
    check_invertible(g2)?;
    let p = place.prime()?;
    let g12 = g1.mul(g2);
    let l = ell(&g12);
    let x = l / ell(g1);
    let y = l / ell(g2) * g1.det();
    let h = hilbert_at(&x, &y, p)?;
    Ok(h * s_local(g1, place)? * s_local(g2, place)? * s_local(&g12, place)?)
}

/// An element `(g, ε)` of the cover at a tagged place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetaElement {
    pub g: Matrix2,
    pub eps: i8,
    pub place: Place,
}

impl MetaElement {
    pub fn new(g: Matrix2, eps: i8, place: Place) -> Result<Self, MetaError> {
        check_invertible(&g)?;
        assert!(eps == 1 || eps == -1, "sign must be ±1");
        Ok(MetaElement { g, eps, place })
    }

    /// `g* = (g, 1)`.
    pub fn star(g: Matrix2, place: Place) -> Result<Self, MetaError> {
        MetaElement::new(g, 1, place)
    }
}

impl fmt::Display for MetaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {:+}) @ {}", self.g, self.eps, self.place)
    }
}

/// `(g₁, ε₁)(g₂, ε₂) = (g₁g₂, β(g₁, g₂)ε₁ε₂)`.
pub fn meta_mul(x: &MetaElement, y: &MetaElement) -> Result<MetaElement, MetaError> {
    if x.place != y.place {
        return Err(MetaError::PlaceMismatch(x.place, y.place));
    }
    let beta = beta_local(&x.g, &y.g, x.place)?;
    Ok(MetaElement { g: x.g.mul(&y.g), eps: beta * x.eps * y.eps, place: x.place })
}

fn push_primes(set: &mut BTreeSet<u64>, x: &Rational) {
    if x.is_zero() {
        return;
    }
    set.extend(prime_divisors(*x.numer()));
    set.extend(prime_divisors(*x.denom()));
}

/// Places at which the cocycle or the splitting function can be nontrivial
/// for the given matrices: the real place, `2`, and every prime dividing a
/// denominator, a determinant, a lower-left entry or an `ℓ`-value.
pub fn relevant_places(mats: &[Matrix2]) -> Vec<Place> {
    let mut primes = BTreeSet::from([2u64]);
    for g in mats {
        for e in g.entries() {
            primes.extend(prime_divisors(*e.denom()));
        }
        push_primes(&mut primes, &g.det());
        push_primes(&mut primes, &g.c);
        push_primes(&mut primes, &ell(g));
    }
    std::iter::once(Place::Real).chain(primes.into_iter().map(Place::Padic)).collect()
}

/// `s(γ) = ∏_v s_v(γ)` over the relevant places.
pub fn s_global(gamma: &Matrix2) -> Result<i8, MetaError> {
    check_invertible(gamma)?;
    let mut s = 1;
    for place in relevant_places(&[*gamma]) {
        s *= s_local(gamma, place)?;
    }
    Ok(s)
}

/// The diagonal embedding `γ ↦ (γ, s(γ))`.
pub fn lift_global(gamma: &Matrix2) -> Result<MetaElement, MetaError> {
    Ok(MetaElement { g: *gamma, eps: s_global(gamma)?, place: Place::Global })
}

/// `∏_v β_v(γ₁, γ₂)` over the places relevant to both factors and their product.
pub fn beta_global(g1: &Matrix2, g2: &Matrix2) -> Result<i8, MetaError> {
    let mut b = 1;
    for place in relevant_places(&[*g1, *g2, g1.mul(g2)]) {
        b *= beta_local(g1, g2, place)?;
    }
    Ok(b)
}

/// Product of two globally tagged elements using the product of local cocycles.
pub fn global_mul(x: &MetaElement, y: &MetaElement) -> Result<MetaElement, MetaError> {
    if x.place != Place::Global || y.place != Place::Global {
        return Err(MetaError::PlaceMismatch(x.place, y.place));
    }
    let beta = beta_global(&x.g, &y.g)?;
    Ok(MetaElement { g: x.g.mul(&y.g), eps: beta * x.eps * y.eps, place: Place::Global })
}

/// Principal square root with argument in `(−π/2, π/2]`.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.norm().sqrt();
    let mut t = z.arg();
    // arg() lies in (−π, π]; halving keeps us in (−π/2, π/2].
    if t == -std::f64::consts::PI {
        t = std::f64::consts::PI;
    }
    Complex64::from_polar(r, t / 2.0)
}

/// `j_ϑ(γ, z) = ε̄_d (c/d) (cz + d)^{1/2}` for `γ ∈ Γ₀(4)`.
pub fn theta_multiplier(gamma: [i64; 4], z: Complex64) -> Result<Complex64, MetaError> {
    let [a, b, c, d] = gamma;
    if c.rem_euclid(4) != 0 || (a as i128) * (d as i128) - (b as i128) * (c as i128) != 1 {
        return Err(MetaError::NotInGamma04(format!("({a} {b}; {c} {d})")));
    }
    let eps = eps_d(d)?.conj().to_complex();
    let sym = kronecker_shimura(c, d)? as f64;
    let root = principal_sqrt(Complex64::new(c as f64, 0.0) * z + d as f64);
    Ok(eps * sym * root)
}

/// The same multiplier from a rational matrix, for callers holding `Matrix2`.
pub fn theta_multiplier_matrix(gamma: &Matrix2, z: Complex64) -> Result<Complex64, MetaError> {
    let e = gamma
        .as_integers()
        .ok_or_else(|| MetaError::NotInGamma04(gamma.to_string()))?;
    let mut out = [0i64; 4];
    for (o, v) in out.iter_mut().zip(e) {
        *o = i64::try_from(v).map_err(|_| MetaError::NotInGamma04(gamma.to_string()))?;
    }
    theta_multiplier(out, z)
}

/// Sign of a rational, used by callers reasoning about the real place.
pub fn sign_of(x: &Rational) -> i8 {
    if x.is_negative() {
        -1
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn ell_examples() {
        assert_eq!(ell(&Matrix2::identity()), r(1));
        assert_eq!(ell(&Matrix2::weyl()), r(-1));
        assert_eq!(ell(&Matrix2::unipotent(Rational::new(3, 7))), r(1));
    }

    #[test]
    fn s_local_examples() {
        let g = Matrix2::from_ints(5, 2, 12, 5);
        assert_eq!(s_local(&g, Place::Real).unwrap(), 1);
        assert_eq!(s_local(&Matrix2::from_ints(1, 0, 4, 1), Place::Padic(2)).unwrap(), 1);
        let expected = crate::arith::hilbert_padic(&r(12), &r(5), 3).unwrap();
        assert_eq!(s_local(&g, Place::Padic(3)).unwrap(), expected);
        assert!(s_local(&g, Place::Global).is_err());
        assert!(s_local(&g, Place::Padic(9)).is_err());
    }

    #[test]
    fn beta_examples() {
        let w = Matrix2::weyl();
        for place in [Place::Real, Place::Padic(2), Place::Padic(3)] {
            assert_eq!(beta_local(&w, &Matrix2::identity(), place).unwrap(), 1);
            assert_eq!(beta_local(&Matrix2::identity(), &w, place).unwrap(), 1);
        }
        assert_eq!(beta_local(&w, &w, Place::Real).unwrap(), 1);
        assert_eq!(beta_local(&Matrix2::diag(r(-1)), &w, Place::Real).unwrap(), -1);
    }

    #[test]
    fn meta_mul_examples() {
        let w = MetaElement::star(Matrix2::weyl(), Place::Real).unwrap();
        let one = MetaElement::star(Matrix2::identity(), Place::Real).unwrap();
        assert_eq!(meta_mul(&w, &one).unwrap(), w);
        let ww = meta_mul(&w, &w).unwrap();
        assert_eq!(ww.g, Matrix2::from_ints(-1, 0, 0, -1));
        assert_eq!(ww.eps, 1);
        let am = MetaElement::star(Matrix2::diag(r(-1)), Place::Real).unwrap();
        let p = meta_mul(&am, &w).unwrap();
        assert_eq!(p.g, Matrix2::diag(r(-1)).mul(&Matrix2::weyl()));
        assert_eq!(p.eps, -1);
        let w2 = MetaElement::star(Matrix2::weyl(), Place::Padic(2)).unwrap();
        assert!(matches!(meta_mul(&w, &w2), Err(MetaError::PlaceMismatch(..))));
    }

    #[test]
    fn global_examples() {
        assert_eq!(s_global(&Matrix2::unipotent(r(17))).unwrap(), 1);
        assert_eq!(s_global(&Matrix2::from_ints(1, 0, 4, 1)).unwrap(), 1);
        assert_eq!(s_global(&Matrix2::from_ints(5, 2, 12, 5)).unwrap(), -1);
        assert_eq!(kronecker_shimura(12, 5).unwrap(), -1);
        let l = lift_global(&Matrix2::from_ints(5, 2, 12, 5)).unwrap();
        assert_eq!((l.eps, l.place), (-1, Place::Global));
        assert_eq!(lift_global(&Matrix2::identity()).unwrap().eps, 1);
    }

    #[test]
    fn theta_multiplier_examples() {
        let z = Complex64::new(0.3, 1.1);
        assert_eq!(theta_multiplier([1, 0, 0, 1], z).unwrap(), Complex64::new(1.0, 0.0));
        let j = theta_multiplier([1, 0, 4, 1], Complex64::i()).unwrap();
        let expect = Complex64::new(1.0, 4.0).sqrt();
        assert!((j - expect).norm() < 1e-14);
        let g = [5, 2, 12, 5];
        let j = theta_multiplier(g, z).unwrap();
        assert!((j.norm_sqr() - (Complex64::new(12.0, 0.0) * z + 5.0).norm()).abs() < 1e-12);
        assert!(theta_multiplier([1, 1, 1, 2], z).is_err());
        assert!(theta_multiplier([2, 1, 4, 3], z).is_err());
    }

    #[test]
    fn principal_branch() {
        let s = principal_sqrt(Complex64::new(-4.0, 0.0));
        assert!((s - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let s = principal_sqrt(Complex64::new(-4.0, -0.0));
        assert!((s - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }
}
