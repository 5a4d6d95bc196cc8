//! Exact number-theoretic primitives: residue and Hilbert symbols, Dirichlet
//! characters, roots of unity and cusp invariants for `Γ₀(N)`.

use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used for matrix entries and symbol arguments.
pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("expected an odd integer, got {0}")]
    EvenArgument(i64),
    #[error("Hilbert symbol arguments must be nonzero")]
    ZeroArgument,
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("{a} is not invertible modulo {m}")]
    NotInvertible { a: i64, m: i64 },
    #[error("modulus must be positive, got {0}")]
    BadModulus(i64),
    #[error("invalid cusp: {0}")]
    InvalidCusp(String),
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime divisors of `|n|` by trial division (`n != 0`).
pub fn prime_divisors(n: i128) -> Vec<u64> {
    let mut n = n.unsigned_abs();
    let mut out = Vec::new();
    if n % 2 == 0 {
        out.push(2);
        while n % 2 == 0 {
            n /= 2;
        }
    }
    let mut d: u128 = 3;
    while d * d <= n {
        if n % d == 0 {
            out.push(d as u64);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 2;
    }
    if n > 1 {
        out.push(n as u64);
    }
    out
}

/// Jacobi symbol `(a/n)` for odd `n > 0`.
pub fn jacobi(a: i128, n: i128) -> i8 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut result = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// The modified quadratic residue symbol `(c/d)` for odd `d`, extended to
/// negative `d` by `(c/d) = (c/|d|)` for `c > 0` and `-(c/|d|)` for `c < 0`,
/// with `(0/±1) = 1`.
pub fn kronecker_shimura(c: i64, d: i64) -> Result<i8, ArithError> {
    if d % 2 == 0 {
        return Err(ArithError::EvenArgument(d));
    }
    let (c, d) = (c as i128, d as i128);
    let base = jacobi(c, d.abs());
    if d < 0 && c < 0 {
        Ok(-base)
    } else {
        Ok(base)
    }
}

/// The primitive character of conductor 4.
pub fn chi4(x: i64) -> Result<i8, ArithError> {
    match x.rem_euclid(4) {
        1 => Ok(1),
        3 => Ok(-1),
        _ => Err(ArithError::EvenArgument(x)),
    }
}

/// `ε_d`: `1` if `d ≡ 1 (mod 4)`, `i` if `d ≡ 3 (mod 4)`.
pub fn eps_d(d: i64) -> Result<RootOfUnity, ArithError> {
    match chi4(d)? {
        1 => Ok(RootOfUnity::one()),
        _ => Ok(RootOfUnity::new(1, 4)),
    }
}

/// Modular inverse in `[0, m)`.
pub fn inv_mod(a: i64, m: i64) -> Result<i64, ArithError> {
    if m <= 0 {
        return Err(ArithError::BadModulus(m));
    }
    if m == 1 {
        return Ok(0);
    }
    let e = (a as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return Err(ArithError::NotInvertible { a, m });
    }
    Ok(e.x.rem_euclid(m as i128) as i64)
}

fn require_nonzero(a: &Rational, b: &Rational) -> Result<(), ArithError> {
    if a.is_zero() || b.is_zero() {
        Err(ArithError::ZeroArgument)
    } else {
        Ok(())
    }
}

/// Hilbert symbol over `ℝ`.
pub fn hilbert_real(a: &Rational, b: &Rational) -> Result<i8, ArithError> {
    require_nonzero(a, b)?;
    if a.is_negative() && b.is_negative() {
        Ok(-1)
    } else {
        Ok(1)
    }
}

/// `x = p^v · u` with `u` a `p`-adic unit given as `num/den`.
fn split_valuation(x: &Rational, p: u64) -> (i64, i128, i128) {
    let p = p as i128;
    let (mut num, mut den) = (*x.numer(), *x.denom());
    let mut v = 0i64;
    while num % p == 0 {
        num /= p;
        v += 1;
    }
    while den % p == 0 {
        den /= p;
        v -= 1;
    }
    (v, num, den)
}

/// `p`-adic valuation of a nonzero rational.
pub fn valuation(x: &Rational, p: u64) -> i64 {
    split_valuation(x, p).0
}

fn legendre_unit(num: i128, den: i128, p: u64) -> i8 {
    // (num/den | p) = (num·den | p) since den is a unit.
    jacobi(num.rem_euclid(p as i128) * den.rem_euclid(p as i128), p as i128)
}

/// Quadratic Hilbert symbol over `ℚ_p`.
pub fn hilbert_padic(a: &Rational, b: &Rational, p: u64) -> Result<i8, ArithError> {
    require_nonzero(a, b)?;
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    let (alpha, u1, u2) = split_valuation(a, p);
    let (beta, v1, v2) = split_valuation(b, p);
    if p == 2 {
        // ε(u) = (u-1)/2, ω(u) = (u²-1)/8 mod 2, both additive on units.
        let eps = |n: i128| (((n.rem_euclid(4)) - 1) / 2) as i64;
        let omega = |n: i128| {
            let r = n.rem_euclid(8);
            if r == 3 || r == 5 {
                1
            } else {
                0
            }
        };
        let eu = eps(u1) + eps(u2);
        let ev = eps(v1) + eps(v2);
        let ou = omega(u1) + omega(u2);
        let ov = omega(v1) + omega(v2);
        let e = eu * ev + alpha * ov + beta * ou;
        return Ok(if e.rem_euclid(2) == 0 { 1 } else { -1 });
    }
    let mut sign = if (alpha * beta).rem_euclid(2) == 1 && p % 4 == 3 { -1 } else { 1 };
    if beta.rem_euclid(2) == 1 {
        sign *= legendre_unit(u1, u2, p);
    }
    if alpha.rem_euclid(2) == 1 {
        sign *= legendre_unit(v1, v2, p);
    }
    Ok(sign)
}

/// Hilbert symbol at a place; `None` is the real place.
pub fn hilbert_at(a: &Rational, b: &Rational, p: Option<u64>) -> Result<i8, ArithError> {
    match p {
        None => hilbert_real(a, b),
        Some(p) => hilbert_padic(a, b, p),
    }
}

/// An exact root of unity `e(num/den)`, kept in lowest terms with
/// `0 <= num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootOfUnity {
    num: i64,
    den: i64,
}

impl RootOfUnity {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0, "root of unity needs a positive denominator");
        let g = num.gcd(&den);
        let (n, d) = (num / g, den / g);
        RootOfUnity { num: n.rem_euclid(d), den: d }
    }

    pub fn one() -> Self {
        RootOfUnity { num: 0, den: 1 }
    }

    pub fn from_sign(s: i8) -> Self {
        if s < 0 {
            RootOfUnity::new(1, 2)
        } else {
            RootOfUnity::one()
        }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn mul(self, other: Self) -> Self {
        let l = self.den.lcm(&other.den);
        RootOfUnity::new(self.num * (l / self.den) + other.num * (l / other.den), l)
    }

    pub fn pow(self, e: i64) -> Self {
        RootOfUnity::new((self.num as i128 * e as i128).rem_euclid(self.den as i128) as i64, self.den)
    }

    pub fn conj(self) -> Self {
        RootOfUnity::new(-self.num, self.den)
    }

    /// `Some(±1)` when the value is real.
    pub fn as_sign(&self) -> Option<i8> {
        match (self.num, self.den) {
            (0, 1) => Some(1),
            (1, 2) => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        // Exact values for the fourth roots avoid spurious 1e-17 residue.
        match (self.num, self.den) {
            (0, 1) => Complex64::new(1.0, 0.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            (n, d) => Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * n as f64 / d as f64),
        }
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e({}/{})", self.num, self.den)
    }
}

/// A Dirichlet character modulo `N`, stored as a value table on residues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    conductor: u64,
    values: Vec<Option<RootOfUnity>>,
}

impl DirichletCharacter {
    pub fn trivial(modulus: u64) -> Self {
        let values = (0..modulus)
            .map(|x| (x.gcd(&modulus) == 1).then(RootOfUnity::one))
            .collect();
        DirichletCharacter { modulus, conductor: 1, values }
    }

    /// The Kronecker character `x ↦ (D/x)` restricted to residues mod `N`.
    /// `D` must be a fundamental-type discriminant whose conductor divides `N`.
    pub fn kronecker(disc: i64, modulus: u64) -> Result<Self, ArithError> {
        let values = (0..modulus)
            .map(|x| {
                if x.gcd(&modulus) != 1 {
                    None
                } else {
                    Some(RootOfUnity::from_sign(kronecker_symbol(disc as i128, x as i128)))
                }
            })
            .collect();
        Self::from_table(modulus, values)
    }

    /// Build from an explicit table of values on `0..N`; validates
    /// multiplicativity and computes the conductor.
    pub fn from_table(modulus: u64, values: Vec<Option<RootOfUnity>>) -> Result<Self, ArithError> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(ArithError::InvalidCharacter("table length must equal the modulus".into()));
        }
        for x in 0..modulus {
            let unit = x.gcd(&modulus) == 1;
            if unit != values[x as usize].is_some() {
                return Err(ArithError::InvalidCharacter(format!("value at {x} has wrong support")));
            }
        }
        for x in 0..modulus {
            for y in 0..modulus {
                if let (Some(a), Some(b)) = (values[x as usize], values[y as usize]) {
                    if values[((x * y) % modulus) as usize] != Some(a.mul(b)) {
                        return Err(ArithError::InvalidCharacter(format!(
                            "not multiplicative at ({x}, {y})"
                        )));
                    }
                }
            }
        }
        let mut chi = DirichletCharacter { modulus, conductor: modulus, values };
        chi.conductor = chi.compute_conductor();
        Ok(chi)
    }

    fn compute_conductor(&self) -> u64 {
        let n = self.modulus;
        (1..=n)
            .filter(|m| n % m == 0)
            .find(|&m| {
                (0..n).all(|x| {
                    x.gcd(&n) != 1 || x % m != 1 % m || self.values[x as usize] == Some(RootOfUnity::one())
                })
            })
            .unwrap_or(n)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// `χ(x)`, `None` when `gcd(x, N) > 1`.
    pub fn value(&self, x: i64) -> Option<RootOfUnity> {
        self.values[x.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn value_complex(&self, x: i64) -> Complex64 {
        self.value(x).map(RootOfUnity::to_complex).unwrap_or_default()
    }

    pub fn is_even(&self) -> bool {
        self.value(-1) == Some(RootOfUnity::one())
    }

    /// True when every value is `±1`.
    pub fn is_real(&self) -> bool {
        self.values.iter().flatten().all(|v| v.as_sign().is_some())
    }

    pub fn is_trivial(&self) -> bool {
        self.conductor == 1
    }
}

/// Kronecker symbol `(a/n)` for arbitrary `n`.
pub fn kronecker_symbol(a: i128, n: i128) -> i8 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut result = 1i8;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let mut twos = 0;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    result * jacobi(a, n)
}

/// A cusp `a/q` of `Γ₀(N)` with the conductor `M` of the attached character.
/// The cusp `∞` is stored as `1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cusp {
    pub a: i64,
    pub q: u64,
    pub level: u64,
    pub conductor: u64,
}

impl Cusp {
    pub fn new(a: i64, q: u64, level: u64, conductor: u64) -> Result<Self, ArithError> {
        if q == 0 {
            return Err(ArithError::InvalidCusp("denominator must be positive".into()));
        }
        if (a.unsigned_abs()).gcd(&q) != 1 {
            return Err(ArithError::InvalidCusp(format!("{a}/{q} is not in lowest terms")));
        }
        if level == 0 || level % 4 != 0 {
            return Err(ArithError::InvalidCusp(format!("level {level} is not a multiple of 4")));
        }
        if conductor == 0 || level % conductor != 0 {
            return Err(ArithError::InvalidCusp(format!("conductor {conductor} does not divide {level}")));
        }
        Ok(Cusp { a, q, level, conductor })
    }

    pub fn infinity(level: u64, conductor: u64) -> Result<Self, ArithError> {
        Cusp::new(1, level, level, conductor)
    }

    /// Parse `"infinity"`, `"oo"` or `"a/q"`.
    pub fn parse(text: &str, level: u64, conductor: u64) -> Result<Self, ArithError> {
        let t = text.trim();
        if matches!(t, "infinity" | "oo" | "inf" | "∞") {
            return Cusp::infinity(level, conductor);
        }
        let (a, q) = t
            .split_once('/')
            .ok_or_else(|| ArithError::InvalidCusp(format!("cannot parse '{t}'")))?;
        let a: i64 = a.trim().parse().map_err(|_| ArithError::InvalidCusp(t.into()))?;
        let q: u64 = q.trim().parse().map_err(|_| ArithError::InvalidCusp(t.into()))?;
        let g = a.unsigned_abs().gcd(&q) as i64;
        Cusp::new(a / g.max(1), q / g.max(1) as u64, level, conductor)
    }

    /// A `Γ₀(N)`-representative whose denominator divides `N`.
    pub fn reduce(&self) -> Cusp {
        let q = self.q.gcd(&self.level);
        let a = if q == 1 { 0 } else { self.a.rem_euclid(q as i64) };
        Cusp { a, q, ..*self }
    }

    pub fn is_infinity(&self) -> bool {
        self.reduce().q == self.level
    }

    fn checked_q(&self) -> Result<u64, ArithError> {
        if self.level % self.q != 0 {
            return Err(ArithError::InvalidCusp(format!(
                "denominator {} does not divide the level {}; reduce the cusp first",
                self.q, self.level
            )));
        }
        Ok(self.q)
    }
}

/// `w(𝔞) = N / gcd(q², N)`.
pub fn cusp_width(c: &Cusp) -> Result<u64, ArithError> {
    let q = c.checked_q()?;
    Ok(c.level / (q * q).gcd(&c.level))
}

/// `δ(𝔞) = lcm(q², N, qM) / q²`.
pub fn cusp_delta(c: &Cusp) -> Result<u64, ArithError> {
    let q = c.checked_q()?;
    let l = (q * q).lcm(&c.level).lcm(&(q * c.conductor));
    Ok(l / (q * q))
}
