//! Seeded property suites run by the `check` command.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{hilbert_padic, hilbert_real, kronecker_shimura, prime_divisors, Rational};
use crate::bessel::{bessel_j_halfint, bessel_k, gamma, imagarg_k_combo, whittaker_w};
use crate::metaplectic::{meta_mul, s_global, theta_multiplier, Matrix2, MetaElement, Place};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Cocycle,
    Hilbert,
    Splitting,
    ThetaMultiplier,
    Bessel,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Cocycle, Suite::Hilbert, Suite::Splitting, Suite::ThetaMultiplier, Suite::Bessel];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Cocycle => "cocycle",
            Suite::Hilbert => "hilbert",
            Suite::Splitting => "splitting",
            Suite::ThetaMultiplier => "theta-multiplier",
            Suite::Bessel => "bessel",
        }
    }

    /// Sample count used when none is given.
    pub fn default_count(&self) -> usize {
        match self {
            Suite::Cocycle => 10_000,
            Suite::Hilbert | Suite::Splitting => 1_000,
            Suite::ThetaMultiplier => 200,
            Suite::Bessel => 20,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}' (expected one of cocycle, hilbert, splitting, theta-multiplier, bessel)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub seed: u64,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_suite(suite: Suite, seed: u64, count: usize) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (checked, failures) = match suite {
        Suite::Cocycle => cocycle(&mut rng, count),
        Suite::Hilbert => hilbert(&mut rng, count),
        Suite::Splitting => splitting(&mut rng, count),
        Suite::ThetaMultiplier => theta(&mut rng, count),
        Suite::Bessel => bessel(&mut rng, count),
    };
    SuiteOutcome { suite, seed, checked, failures }
}

fn rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.gen_range(-30..=30), rng.gen_range(1..=12))
}

/// A random invertible rational matrix; a quarter have `c = 0`.
pub fn random_gl2(rng: &mut ChaCha8Rng) -> Matrix2 {
    loop {
        let c = if rng.gen_ratio(1, 4) { Rational::from_integer(0) } else { rational(rng) };
        let m = Matrix2::new(rational(rng), rational(rng), c, rational(rng));
        if m.det() != Rational::from_integer(0) {
            return m;
        }
    }
}

fn cocycle(rng: &mut ChaCha8Rng, count: usize) -> (usize, Vec<String>) {
    let places = [Place::Real, Place::Padic(2), Place::Padic(3), Place::Padic(5)];
    let mut failures = Vec::new();
    let mut checked = 0;
    for _ in 0..count {
        let g = [random_gl2(rng), random_gl2(rng), random_gl2(rng)];
        let e: Vec<i8> = (0..3).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        for place in places {
            checked += 1;
            let el = |i: usize| MetaElement::new(g[i], e[i], place);
            let res = (|| -> Result<bool, String> {
                let (x, y, z) = (el(0).map_err(|e| e.to_string())?, el(1).map_err(|e| e.to_string())?, el(2).map_err(|e| e.to_string())?);
                let left = meta_mul(&meta_mul(&x, &y).map_err(|e| e.to_string())?, &z).map_err(|e| e.to_string())?;
                let right = meta_mul(&x, &meta_mul(&y, &z).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                Ok(left == right)
            })();
            match res {
                Ok(true) => {}
                Ok(false) => failures.push(format!("associativity fails at {place:?} for {} | {} | {}", g[0], g[1], g[2])),
                Err(e) => failures.push(format!("error at {place:?} for {} | {} | {}: {e}", g[0], g[1], g[2])),
            }
        }
    }
    (checked, failures)
}

fn nonzero_rational(rng: &mut ChaCha8Rng) -> Rational {
    loop {
        let num: i128 = rng.gen_range(-2000..=2000);
        if num != 0 {
            return Rational::new(num, rng.gen_range(1..=500));
        }
    }
}

/// Existence of a primitive solution of `z² ≡ a x² + b y²` modulo `p^e`,
/// with `e` large enough for integers of valuation at most one.
pub fn solvable_mod_prime_power(a: i64, b: i64, p: u64) -> bool {
    let e = if p == 2 { 5 } else { 3 };
    let m = (p as i64).pow(e);
    let mut square = vec![false; m as usize];
    for z in 0..m {
        square[(z * z % m) as usize] = true;
    }
    let p = p as i64;
    for x in 0..m {
        for y in 0..m {
            if x % p == 0 && y % p == 0 {
                continue;
            }
            let v = (a * x % m * x + b * y % m * y).rem_euclid(m);
            if square[v as usize] {
                return true;
            }
        }
    }
    false
}

fn hilbert(rng: &mut ChaCha8Rng, count: usize) -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    let mut checked = 0;
    for _ in 0..count {
        let (a, b) = (nonzero_rational(rng), nonzero_rational(rng));
        let mut primes: Vec<u64> = [*a.numer(), *a.denom(), *b.numer(), *b.denom()]
            .iter()
            .flat_map(|x| prime_divisors(*x))
            .collect();
        primes.push(2);
        primes.sort_unstable();
        primes.dedup();
        checked += 1;
        let product = (|| -> Result<i8, String> {
            let mut s = hilbert_real(&a, &b).map_err(|e| e.to_string())?;
            for &p in &primes {
                s *= hilbert_padic(&a, &b, p).map_err(|e| e.to_string())?;
            }
            Ok(s)
        })();
        match product {
            Ok(1) => {}
            Ok(_) => failures.push(format!("product formula fails for ({a}, {b})")),
            Err(e) => failures.push(format!("error for ({a}, {b}): {e}")),
        }
        let p = primes[rng.gen_range(0..primes.len())];
        if hilbert_padic(&a, &b, p).ok() != hilbert_padic(&b, &a, p).ok() {
            failures.push(format!("symmetry fails for ({a}, {b}) at {p}"));
        }
    }
    for p in [2u64, 3, 5, 7] {
        let grid: Vec<i64> = [1, 2, 3, 5, p as i64].iter().flat_map(|&v| [v, -v]).collect();
        for &a in &grid {
            for &b in &grid {
                checked += 1;
                let want = if solvable_mod_prime_power(a, b, p) { 1 } else { -1 };
                let got = hilbert_padic(&Rational::from_integer(a as i128), &Rational::from_integer(b as i128), p);
                if got != Ok(want) {
                    failures.push(format!("[{a}, {b}]_{p} = {got:?}, solvability says {want}"));
                }
            }
        }
    }
    (checked, failures)
}

/// A random element of `Γ₁(4)` with entries bounded by `bound`.
pub fn random_gamma1_4(rng: &mut ChaCha8Rng, bound: i64) -> [i64; 4] {
    loop {
        let c = 4 * rng.gen_range(-(bound / 4)..=bound / 4);
        let d = 4 * rng.gen_range(-(bound / 4)..=bound / 4) + 1;
        if c == 0 && d != 1 {
            continue;
        }
        if c.gcd(&d) != 1 {
            continue;
        }
        if c == 0 {
            return [1, rng.gen_range(-bound..=bound), 0, 1];
        }
        // a d − b c = 1 with a ≡ d⁻¹ mod |c|.
        let g = (d as i128).extended_gcd(&(c as i128));
        let mut a = g.x as i64;
        let mut bb = -(g.y as i64);
        if g.gcd < 0 {
            a = -a;
            bb = -bb;
        }
        let cc = c.abs();
        let t = a.div_euclid(cc);
        a -= t * cc;
        bb -= t * cc / c * d;
        debug_assert_eq!(a as i128 * d as i128 - bb as i128 * c as i128, 1);
        return [a, bb, c, d];
    }
}

fn splitting(rng: &mut ChaCha8Rng, count: usize) -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    for _ in 0..count {
        let [a, b, c, d] = random_gamma1_4(rng, 1_000_000);
        let m = Matrix2::from_ints(a as i128, b as i128, c as i128, d as i128);
        let s = s_global(&m).map_err(|e| e.to_string());
        let k = kronecker_shimura(c, d).map_err(|e| e.to_string());
        if s != k {
            failures.push(format!("s(γ) = {s:?} but (c/d) = {k:?} for γ = ({a} {b}; {c} {d})"));
        }
    }
    (count, failures)
}

/// `ϑ(z) = Σ e(n² z)` by direct summation.
pub fn theta_direct(z: Complex64) -> Complex64 {
    let terms = (40.0 / (2.0 * PI * z.im)).sqrt() as i64 + 2;
    let mut s = Complex64::new(1.0, 0.0);
    for n in 1..=terms {
        s += 2.0 * (Complex64::new(0.0, 2.0 * PI * (n * n) as f64) * z).exp();
    }
    s
}

fn random_gamma0_4(rng: &mut ChaCha8Rng, bound: i64) -> [i64; 4] {
    loop {
        let c = 4 * rng.gen_range(-(bound / 4)..=bound / 4);
        let d = 2 * rng.gen_range(-(bound / 2)..=bound / 2) + 1;
        if c.gcd(&d) != 1 {
            continue;
        }
        let g = (d as i128).extended_gcd(&(c as i128));
        let (mut a, mut b) = (g.x as i64, -(g.y as i64));
        if g.gcd < 0 {
            a = -a;
            b = -b;
        }
        return [a, b, c, d];
    }
}

fn mat_mul(x: [i64; 4], y: [i64; 4]) -> [i64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn act(g: [i64; 4], z: Complex64) -> Complex64 {
    (z * g[0] as f64 + g[1] as f64) / (z * g[2] as f64 + g[3] as f64)
}

fn theta(rng: &mut ChaCha8Rng, count: usize) -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    let mut checked = 0;
    for _ in 0..count {
        let z = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.3..1.5));
        let g1 = random_gamma0_4(rng, 24);
        let g2 = random_gamma0_4(rng, 24);
        let lhs = theta_multiplier(mat_mul(g1, g2), z);
        let rhs = theta_multiplier(g1, act(g2, z)).and_then(|a| theta_multiplier(g2, z).map(|b| a * b));
        checked += 1;
        match (lhs, rhs) {
            (Ok(l), Ok(r)) if (l - r).norm() <= 1e-8 * l.norm() => {}
            (l, r) => failures.push(format!("cocycle: j(γ₁γ₂, z) = {l:?}, product = {r:?} for {g1:?}, {g2:?}, z = {z}")),
        }
        let gz = act(g1, z);
        if gz.im < 5e-4 {
            continue;
        }
        checked += 1;
        let ratio = theta_direct(gz) / theta_direct(z);
        match theta_multiplier(g1, z) {
            Ok(j) if (ratio - j).norm() <= 1e-8 * j.norm() => {}
            other => failures.push(format!("ϑ(γz)/ϑ(z) = {ratio} vs j = {other:?} for {g1:?}, z = {z}")),
        }
    }
    (checked, failures)
}

/// `K_s(σiy)` from `√π (z/2)^s / Γ(s + 1/2) ∫₁^∞ e^{−zt} (t² − 1)^{s−1/2} dt`
/// along the ray `t = 1 + r e^{−σiπ/4}`, with `r = e^v` and composite
/// Simpson in `v`. Needs `Re s > −1/2`.
pub fn k_imag_oracle(s: Complex64, y: f64, sigma: i8) -> Complex64 {
    let sg = if sigma >= 0 { 1.0 } else { -1.0 };
    let z = Complex64::new(0.0, sg * y);
    let theta = -sg * PI / 4.0;
    let dir = Complex64::from_polar(1.0, theta);
    let e = s - 0.5;
    let v_lo = -34.0 / (s.re + 0.5);
    let v_hi = (46.0 * std::f64::consts::SQRT_2 / y).ln();
    let m = 60_000;
    let h = (v_hi - v_lo) / m as f64;
    let f = |v: f64| -> Complex64 {
        let w = dir * v.exp();
        (-z * (w + 1.0) + e * Complex64::new(v, theta) + e * (w + 2.0).ln() + v).exp() * dir
    };
    let mut acc = f(v_lo) + f(v_hi);
    for i in 1..m {
        acc += f(v_lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = acc * h / 3.0;
    PI.sqrt() * (z / 2.0).powc(s) / gamma(s + 0.5) * integral
}

fn bessel(rng: &mut ChaCha8Rng, count: usize) -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut check = |ok: bool, msg: String| {
        checked += 1;
        if !ok {
            failures.push(msg);
        }
    };
    for _ in 0..count {
        let x: f64 = rng.gen_range(0.05..60.0);
        let pref = (2.0 / (PI * x)).sqrt();
        let j1 = bessel_j_halfint(1, x);
        let j3 = bessel_j_halfint(3, x);
        check((j1 - pref * x.sin()).abs() < 1e-10, format!("J_1/2({x}) = {j1}"));
        check((j3 - pref * (x.sin() / x - x.cos())).abs() < 1e-10, format!("J_3/2({x}) = {j3}"));
        let k = bessel_k(Complex64::new(0.5, 0.0), x.min(30.0));
        let xe = x.min(30.0);
        let want = (PI / (2.0 * xe)).sqrt() * (-xe).exp();
        check(matches!(k, Ok(v) if (v.re - want).abs() < 1e-10 * want.max(1e-300) + 1e-300), format!("K_1/2({xe}) = {k:?}, want {want}"));

        let kappa: f64 = rng.gen_range(-1.5..1.5);
        let mu = Complex64::new(rng.gen_range(0.0..0.6), rng.gen_range(-3.0..3.0));
        let xw: f64 = rng.gen_range(0.2..20.0);
        let res = whittaker_residual(kappa, mu, xw);
        check(matches!(res, Ok(r) if r < 1e-6), format!("Whittaker residual at κ={kappa}, μ={mu}, x={xw}: {res:?}"));

        let s = Complex64::new(rng.gen_range(0.0..0.45), rng.gen_range(-4.0..4.0));
        let xk: f64 = rng.gen_range(0.001..2.0);
        let parity = rng.gen_range(0..2u32);
        let y = 4.0 * PI * xk.sqrt();
        let sigma: i8 = if parity == 0 { 1 } else { -1 };
        let oracle = k_imag_oracle(s, y, sigma) - Complex64::i() * k_imag_oracle(s, y, -sigma);
        let got = imagarg_k_combo(s, xk, parity);
        check(
            matches!(got, Ok(v) if (v - oracle).norm() < 1e-8 * oracle.norm().max(1.0)),
            format!("K combination at s={s}, x={xk}, parity {parity}: {got:?} vs contour {oracle}"),
        );
    }
    (checked, failures)
}

/// `|W'' + q W| / (max|W| · max(|q|, 1))` with
/// `q = −1/4 + κ/x + (1/4 − μ²)/x²`, from a five-point second difference
/// whose step resolves both the local wavelength `|q|^{−1/2}` and `x`.
pub fn whittaker_residual(kappa: f64, mu: Complex64, x: f64) -> Result<f64, crate::quad::QuadError> {
    let q = Complex64::new(-0.25 + kappa / x, 0.0) + (Complex64::new(0.25, 0.0) - mu * mu) / (x * x);
    let h = (0.02 / q.norm().sqrt().max(0.5)).min(0.01 * x);
    let mut w = [Complex64::new(0.0, 0.0); 5];
    for (i, v) in w.iter_mut().enumerate() {
        *v = whittaker_w(kappa, mu, x + (i as f64 - 2.0) * h)?;
    }
    let d2 = (-w[0] + 16.0 * w[1] - 30.0 * w[2] + 16.0 * w[3] - w[4]) / (12.0 * h * h);
    let scale = w.iter().map(|v| v.norm()).fold(1e-300, f64::max) * q.norm().max(1.0);
    Ok((d2 + q * w[2]).norm() / scale)
}
