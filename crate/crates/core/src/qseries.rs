//! Truncated power series in `q^{1/D}` with exact rational coefficients, and
//! the constructors (eta, theta, eta quotients, Hecke `T_{p²}`) built on them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{jacobi, DirichletCharacter};

#[derive(Debug, Error)]
pub enum QSeriesError {
    #[error("cannot invert or raise to a negative power a series whose leading coefficient vanishes below the truncation order")]
    VanishingLeading,
    #[error("series has non-integral exponents (exponent {0}/{1})")]
    NonIntegral(i64, u64),
    #[error("prime {p} divides the level {level}")]
    PrimeDividesLevel { p: u64, level: u64 },
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("Hecke operator needs a real (±1-valued) character")]
    ComplexCharacter,
    #[error("bad cache file: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `Σ c_e q^{e/D}`, exact for exponents `e < order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracQSeries {
    denom: u64,
    coeffs: BTreeMap<i64, BigRational>,
    order: i64,
    weight: Option<Ratio<i64>>,
}

impl FracQSeries {
    pub fn zero(denom: u64, order: i64) -> Self {
        assert!(denom > 0, "exponent denominator must be positive");
        FracQSeries { denom, coeffs: BTreeMap::new(), order, weight: None }
    }

    pub fn one(denom: u64, order: i64) -> Self {
        let mut s = FracQSeries::zero(denom, order);
        s.set(0, BigRational::one());
        s
    }

    /// Build from `(exponent numerator, coefficient)` pairs; terms at or
    /// beyond `order` are dropped.
    pub fn from_terms<I>(denom: u64, order: i64, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, BigRational)>,
    {
        let mut s = FracQSeries::zero(denom, order);
        for (e, c) in terms {
            let cur = s.coeff(e);
            s.set(e, cur + c);
        }
        s
    }

    pub fn from_int_terms<I>(denom: u64, order: i64, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, i64)>,
    {
        Self::from_terms(denom, order, terms.into_iter().map(|(e, c)| (e, BigRational::from_integer(c.into()))))
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn weight(&self) -> Option<Ratio<i64>> {
        self.weight
    }

    pub fn with_weight(mut self, w: Ratio<i64>) -> Self {
        self.weight = Some(w);
        self
    }

    /// Coefficient of `q^{e/D}`; zero for unknown exponents too, so callers
    /// should respect `order`.
    pub fn coeff(&self, e: i64) -> BigRational {
        self.coeffs.get(&e).cloned().unwrap_or_else(BigRational::zero)
    }

    fn set(&mut self, e: i64, c: BigRational) {
        if e >= self.order || c.is_zero() {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, c);
        }
    }

    /// Nonzero terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Smallest exponent with a nonzero coefficient, or `order` if none is known.
    pub fn valuation(&self) -> i64 {
        self.coeffs.keys().next().copied().unwrap_or(self.order)
    }

    pub fn truncate(mut self, order: i64) -> Self {
        if order < self.order {
            self.order = order;
            self.coeffs.retain(|e, _| *e < order);
        }
        self
    }

    /// Re-express over the denominator `new_denom`, which must be a multiple.
    pub fn rescale(&self, new_denom: u64) -> Self {
        assert!(new_denom % self.denom == 0, "new denominator must be a multiple");
        let f = (new_denom / self.denom) as i64;
        FracQSeries {
            denom: new_denom,
            coeffs: self.coeffs.iter().map(|(e, c)| (e * f, c.clone())).collect(),
            order: self.order * f,
            weight: self.weight,
        }
    }

    /// Re-express over the smallest possible denominator dividing `D`.
    pub fn to_denominator(&self, new_denom: u64) -> Result<Self, QSeriesError> {
        if self.denom % new_denom != 0 {
            return Ok(self.rescale(new_denom.lcm(&self.denom)));
        }
        let f = (self.denom / new_denom) as i64;
        let mut coeffs = BTreeMap::new();
        for (e, c) in &self.coeffs {
            if e % f != 0 {
                return Err(QSeriesError::NonIntegral(*e, self.denom));
            }
            coeffs.insert(e / f, c.clone());
        }
        // e' < order/f for integers e' is the same as e' < ceil(order/f).
        Ok(FracQSeries { denom: new_denom, coeffs, order: -(-self.order).div_euclid(f), weight: self.weight })
    }

    /// The same series over denominator 1; fails on fractional exponents.
    pub fn to_integral(&self) -> Result<Self, QSeriesError> {
        self.to_denominator(1)
    }

    /// `(n, a(n))` pairs for an integral series as `i64`/`f64`.
    pub fn integral_coeffs_f64(&self) -> Result<Vec<(i64, f64)>, QSeriesError> {
        let s = self.to_integral()?;
        Ok(s.coeffs.iter().map(|(e, c)| (*e, c.to_f64().unwrap_or(f64::NAN))).collect())
    }

    pub fn neg(&self) -> Self {
        FracQSeries {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c)).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = FracQSeries::zero(self.denom, self.order);
        for (e, c) in &self.coeffs {
            out.set(*e, c * k);
        }
        out.weight = self.weight;
        out
    }

    /// Multiply by `q^{shift/D}`.
    pub fn shift(&self, shift: i64) -> Self {
        FracQSeries {
            denom: self.denom,
            coeffs: self.coeffs.iter().map(|(e, c)| (e + shift, c.clone())).collect(),
            order: self.order + shift,
            weight: self.weight,
        }
    }
}

fn common(x: &FracQSeries, y: &FracQSeries) -> (FracQSeries, FracQSeries) {
    let d = x.denom.lcm(&y.denom);
    (x.rescale(d), y.rescale(d))
}

pub fn qs_add(x: &FracQSeries, y: &FracQSeries) -> FracQSeries {
    let (x, y) = common(x, y);
    let mut out = FracQSeries::zero(x.denom, x.order.min(y.order));
    for (e, c) in x.coeffs.iter().chain(y.coeffs.iter()) {
        let cur = out.coeff(*e);
        out.set(*e, cur + c);
    }
    if x.weight == y.weight {
        out.weight = x.weight;
    }
    out
}

pub fn qs_sub(x: &FracQSeries, y: &FracQSeries) -> FracQSeries {
    qs_add(x, &y.neg())
}

/// Cauchy product; exact below `min(ord x + val y, ord y + val x)`.
pub fn qs_mul(x: &FracQSeries, y: &FracQSeries) -> FracQSeries {
    let (x, y) = common(x, y);
    let order = (x.order + y.valuation()).min(y.order + x.valuation());
    let mut acc: BTreeMap<i64, BigRational> = BTreeMap::new();
    for (ex, cx) in &x.coeffs {
        for (ey, cy) in &y.coeffs {
            let e = ex + ey;
            if e >= order {
                break;
            }
            let entry = acc.entry(e).or_insert_with(BigRational::zero);
            *entry += cx * cy;
        }
    }
    let mut out = FracQSeries::zero(x.denom, order);
    for (e, c) in acc {
        out.set(e, c);
    }
    if let (Some(a), Some(b)) = (x.weight, y.weight) {
        out.weight = Some(a + b);
    }
    out
}

/// Integer power (negative exponents allowed) by the power-series recurrence
/// `n a₀ f_n = Σ_{k=1}^{n} ((r+1)k − n) a_k f_{n−k}` on the stride lattice of
/// the support.
pub fn qs_pow(x: &FracQSeries, r: i64) -> Result<FracQSeries, QSeriesError> {
    if r == 0 {
        return Ok(FracQSeries::one(x.denom, x.order - x.valuation()));
    }
    let Some((&v, lead)) = x.coeffs.iter().next() else {
        if r > 0 {
            return Ok(FracQSeries::zero(x.denom, x.order.saturating_mul(r)));
        }
        return Err(QSeriesError::VanishingLeading);
    };
    let lead = lead.clone();
    // x = q^v · Σ_j a_j t^j with t = q^{g/D}.
    let g = x.coeffs.keys().fold(0i64, |g, e| g.gcd(&(e - v))).max(1);
    let len = ((x.order - v) + g - 1) / g; // a_j exact for j < len
    let a: Vec<(usize, &BigRational)> = x.coeffs.iter().map(|(e, c)| (((e - v) / g) as usize, c)).collect();
    let f = power_recurrence(&a, &lead, r, len as usize);
    let shift = v * r;
    let mut out = FracQSeries::zero(x.denom, shift + len * g);
    for (j, c) in f.into_iter().enumerate() {
        if !c.is_zero() {
            out.set(shift + j as i64 * g, c);
        }
    }
    if let Some(w) = x.weight {
        out.weight = Some(w * r);
    }
    Ok(out)
}

fn power_recurrence(a: &[(usize, &BigRational)], lead: &BigRational, r: i64, len: usize) -> Vec<BigRational> {
    let all_integer = a.iter().all(|(_, c)| c.is_integer());
    let unit_lead = lead.abs().is_one();
    if all_integer && unit_lead {
        let ints: Vec<(usize, i128)> = a.iter().filter_map(|(j, c)| c.to_integer().to_i128().map(|v| (*j, v))).collect();
        if ints.len() == a.len() {
            if let Some(v) = power_recurrence_i128(&ints, r, len) {
                return v.into_iter().map(|c| BigRational::from_integer(c.into())).collect();
            }
        }
    }
    let r_big = BigRational::from_integer(r.into());
    let mut f: Vec<BigRational> = Vec::with_capacity(len);
    f.push(pow_rational(lead, r));
    for n in 1..len {
        let mut s = BigRational::zero();
        for &(k, ak) in a.iter().skip(1) {
            if k > n {
                break;
            }
            let coef = (&r_big + BigRational::one()) * BigRational::from_integer(k.into())
                - BigRational::from_integer(n.into());
            s += coef * ak * &f[n - k];
        }
        f.push(s / (lead * BigRational::from_integer(n.into())));
    }
    f
}

fn pow_rational(x: &BigRational, r: i64) -> BigRational {
    let p = num_traits::pow(x.clone(), r.unsigned_abs() as usize);
    if r < 0 {
        p.recip()
    } else {
        p
    }
}

fn power_recurrence_i128(a: &[(usize, i128)], r: i64, len: usize) -> Option<Vec<i128>> {
    let lead = a[0].1;
    let mut f: Vec<i128> = Vec::with_capacity(len);
    f.push(if r.rem_euclid(2) == 1 { lead } else { 1 });
    let r1 = r as i128 + 1;
    for n in 1..len {
        let mut s: i128 = 0;
        for &(k, ak) in a.iter().skip(1) {
            if k > n {
                break;
            }
            let fk = f[n - k];
            if fk == 0 {
                continue;
            }
            let coef = r1.checked_mul(k as i128)?.checked_sub(n as i128)?;
            s = s.checked_add(coef.checked_mul(ak)?.checked_mul(fk)?)?;
        }
        let d = lead * n as i128;
        if s % d != 0 {
            return None;
        }
        f.push(s / d);
    }
    Some(f)
}

/// `η(mz) = q^{m/24} ∏_{n≥1} (1 − q^{mn})` over `D = 24`, via the pentagonal
/// number theorem: `η(mz) = Σ_{k∈ℤ} (−1)^k q^{m(6k−1)²/24}`.
pub fn eta_expansion(m: u64, order: i64) -> FracQSeries {
    let m = m as i64;
    let mut terms = Vec::new();
    let mut k: i64 = 0;
    loop {
        let mut any = false;
        for kk in if k == 0 { vec![0] } else { vec![k, -k] } {
            let e = m * (6 * kk - 1) * (6 * kk - 1);
            if e < order {
                any = true;
                terms.push((e, if kk.rem_euclid(2) == 0 { 1 } else { -1 }));
            }
        }
        if !any && k > 0 {
            break;
        }
        k += 1;
    }
    FracQSeries::from_int_terms(24, order, terms).with_weight(Ratio::new(1, 2))
}

/// `θ(mz) = 1 + 2 Σ_{n≥1} q^{mn²}` over `D = 1`.
pub fn theta_expansion(m: u64, order: i64) -> FracQSeries {
    let m = m as i64;
    let mut terms = vec![(0, 1)];
    let mut n = 1i64;
    while m * n * n < order {
        terms.push((m * n * n, 2));
        n += 1;
    }
    FracQSeries::from_int_terms(1, order, terms).with_weight(Ratio::new(1, 2))
}

/// `∏ η(m z)^{r_m}` truncated at `order` (in units of `q^{1/24}`), with the
/// weight `Σ r_m / 2` attached.
pub fn eta_quotient(spec: &[(u64, i64)], order: i64) -> Result<FracQSeries, QSeriesError> {
    let shift: i64 = spec.iter().map(|(m, r)| *m as i64 * r).sum();
    // Powers are taken of the unit-leading products ∏(1 − q^{mn}); the
    // leading q^{m/24} factors are collected into one shift at the end.
    let inner_order = order - shift;
    let mut acc = FracQSeries::one(24, inner_order).with_weight(Ratio::zero());
    for &(m, r) in spec {
        let m = m as i64;
        let base = eta_expansion(m as u64, inner_order + m).shift(-m);
        acc = qs_mul(&acc, &qs_pow(&base, r)?);
    }
    Ok(acc.shift(shift))
}

/// `T_{p²}` in weight `k + 1/2` with a real character:
/// `b(n) = a(p²n) + χ(p)((−1)^k n / p) p^{k−1} a(n) + χ(p²) p^{2k−1} a(n/p²)`.
pub fn hecke_tp2(f: &FracQSeries, k: u32, chi: &DirichletCharacter, p: u64) -> Result<FracQSeries, QSeriesError> {
    if !crate::arith::is_prime(p) {
        return Err(QSeriesError::NotPrime(p));
    }
    if chi.modulus() % p == 0 {
        return Err(QSeriesError::PrimeDividesLevel { p, level: chi.modulus() });
    }
    if !chi.is_real() {
        return Err(QSeriesError::ComplexCharacter);
    }
    let f = f.to_integral()?;
    let p_i = p as i64;
    let p2 = p_i * p_i;
    let chi_p = chi.value(p_i).and_then(|v| v.as_sign()).unwrap_or(0) as i64;
    let chi_p2 = chi_p * chi_p;
    let order_out = (f.order - 1).div_euclid(p2) + 1;
    let lo = f.valuation().min(order_out);
    let pk1 = BigRational::from_integer(BigInt::from(p).pow(k.saturating_sub(1)));
    let pk1 = if k == 0 { pk1 / BigRational::from_integer(p.into()) } else { pk1 };
    let p2k1 = BigRational::from_integer(BigInt::from(p).pow(2 * k)) / BigRational::from_integer(p.into());
    let sgn: i128 = if k % 2 == 0 { 1 } else { -1 };
    let mut out = FracQSeries::zero(1, order_out);
    for n in lo.min(0)..order_out {
        let mut b = f.coeff(p2 * n);
        let an = f.coeff(n);
        if !an.is_zero() {
            let leg = jacobi(sgn * n as i128, p as i128) as i64 * chi_p;
            b += an * &pk1 * BigRational::from_integer(leg.into());
        }
        if n % p2 == 0 {
            let a = f.coeff(n / p2);
            if !a.is_zero() {
                b += a * &p2k1 * BigRational::from_integer(chi_p2.into());
            }
        }
        out.set(n, b);
    }
    out.weight = f.weight;
    Ok(out)
}

/// Whether `T_{p²} f = λ f` on the exact range of `T_{p²} f`, with `λ`.
pub fn eigen_check(
    f: &FracQSeries,
    k: u32,
    chi: &DirichletCharacter,
    p: u64,
) -> Result<(bool, Option<BigRational>), QSeriesError> {
    let tf = hecke_tp2(f, k, chi, p)?;
    let f = f.to_integral()?.truncate(tf.order);
    let Some((n0, a0)) = f.terms().next() else {
        return Ok((false, None));
    };
    let lambda = tf.coeff(n0) / a0;
    let scaled = f.scale(&lambda);
    if qs_sub(&tf, &scaled).is_zero() {
        Ok((true, Some(lambda)))
    } else {
        Ok((false, None))
    }
}

/// Write the cache format: a header `D <tab> d <tab> order <tab> o`, then one
/// `e <tab> numerator <tab> denominator` record per nonzero coefficient.
pub fn write_cache<W: Write>(s: &FracQSeries, mut w: W) -> Result<(), QSeriesError> {
    writeln!(w, "D\t{}\torder\t{}", s.denom, s.order)?;
    let mut buf = String::new();
    for (e, c) in &s.coeffs {
        buf.clear();
        writeln!(buf, "{}\t{}\t{}", e, c.numer(), c.denom()).expect("string write");
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}

pub fn read_cache<R: BufRead>(r: R) -> Result<FracQSeries, QSeriesError> {
    let mut lines = r.lines();
    let header = loop {
        match lines.next() {
            Some(l) => {
                let l = l?;
                if !l.trim().is_empty() && !l.starts_with('#') {
                    break l;
                }
            }
            None => return Err(QSeriesError::Cache("empty file".into())),
        }
    };
    let h: Vec<&str> = header.split('\t').collect();
    if h.len() != 4 || h[0] != "D" || h[2] != "order" {
        return Err(QSeriesError::Cache(format!("bad header '{header}'")));
    }
    let bad = |what: &str| QSeriesError::Cache(what.to_string());
    let denom: u64 = h[1].parse().map_err(|_| bad("bad D"))?;
    let order: i64 = h[3].parse().map_err(|_| bad("bad order"))?;
    if denom == 0 {
        return Err(bad("D must be positive"));
    }
    let mut s = FracQSeries::zero(denom, order);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(QSeriesError::Cache(format!("line {}: expected 3 fields", i + 2)));
        }
        let e: i64 = f[0].parse().map_err(|_| bad("bad exponent"))?;
        let num: BigInt = f[1].parse().map_err(|_| bad("bad numerator"))?;
        let den: BigInt = f[2].parse().map_err(|_| bad("bad denominator"))?;
        if den.is_zero() {
            return Err(bad("zero denominator"));
        }
        if e >= order {
            return Err(QSeriesError::Cache(format!("exponent {e} beyond order {order}")));
        }
        s.set(e, BigRational::new(num, den));
    }
    Ok(s)
}

pub fn save_cache(s: &FracQSeries, path: &Path) -> Result<(), QSeriesError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_cache(s, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<FracQSeries, QSeriesError> {
    let f = std::fs::File::open(path)?;
    read_cache(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn poly(terms: &[(i64, i64)], order: i64) -> FracQSeries {
        FracQSeries::from_int_terms(1, order, terms.iter().copied())
    }

    #[test]
    fn addition_examples() {
        let x = poly(&[(0, 1), (1, 1)], 10);
        let y = poly(&[(0, 1), (1, -1)], 10);
        assert_eq!(qs_add(&x, &FracQSeries::zero(1, 10)), x);
        assert_eq!(qs_add(&x, &y), poly(&[(0, 2)], 10));
        let t = theta_expansion(1, 50);
        assert!(qs_add(&t, &t.neg()).is_zero());
    }

    #[test]
    fn geometric_series() {
        let one_minus_q = poly(&[(0, 1), (1, -1)], 40);
        let geo = poly(&(0..40).map(|n| (n, 1)).collect::<Vec<_>>(), 40);
        let p = qs_mul(&one_minus_q, &geo);
        assert_eq!(p, poly(&[(0, 1)], 40));
        assert_eq!(qs_mul(&geo, &FracQSeries::one(1, 40)), geo);
        let inv = qs_pow(&one_minus_q, -1).unwrap();
        assert_eq!(inv, geo);
    }

    #[test]
    fn delta_from_eta() {
        // q^{-1} η²⁴ begins 1 − 24q + 252q² − 1472q³.
        let d = qs_pow(&eta_expansion(1, 24 * 6), 24).unwrap().to_integral().unwrap();
        assert_eq!(d.coeff(1), q(1));
        assert_eq!(d.coeff(2), q(-24));
        assert_eq!(d.coeff(3), q(252));
        assert_eq!(d.coeff(4), q(-1472));
    }

    #[test]
    fn eta_leading_terms() {
        let e = eta_expansion(1, 24 * 16);
        let expect: Vec<(i64, i64)> = [(0, 1), (1, -1), (2, -1), (5, 1), (7, 1), (12, -1), (15, -1)]
            .iter()
            .map(|&(n, c)| (1 + 24 * n, c))
            .collect();
        let got: Vec<(i64, i64)> = e.terms().map(|(x, c)| (x, c.to_integer().to_i64().unwrap())).collect();
        assert_eq!(got, expect);
        let e8 = eta_expansion(8, 24 * 400);
        assert!(e8.terms().all(|(x, _)| (x - 8) % 192 == 0));
        assert_eq!(e8.weight(), Some(Ratio::new(1, 2)));
    }

    #[test]
    fn theta_examples() {
        let t = theta_expansion(1, 20);
        assert_eq!((t.coeff(0), t.coeff(1), t.coeff(2), t.coeff(4)), (q(1), q(2), q(0), q(2)));
        let t4 = theta_expansion(4, 100);
        assert!(t4.terms().all(|(e, _)| e % 4 == 0 && ((e / 4) as f64).sqrt().fract() == 0.0));
        let t2 = qs_mul(&t, &t);
        let got: Vec<BigRational> = (0..5).map(|n| t2.coeff(n)).collect();
        assert_eq!(got, vec![q(1), q(4), q(4), q(0), q(4)]);
    }

    #[test]
    fn eta_quotient_metadata() {
        let f = eta_quotient(&[(8, 3)], 24 * 200).unwrap();
        assert_eq!(f.weight(), Some(Ratio::new(3, 2)));
        let g = eta_quotient(&[(1, 1)], 24 * 50).unwrap();
        assert_eq!(g, eta_expansion(1, 24 * 50).with_weight(Ratio::new(1, 2)));
        let h = eta_quotient(&[(1, 2), (2, -1)], 24 * 40).unwrap();
        assert_eq!(h.weight(), Some(Ratio::new(1, 2)));
    }

    #[test]
    fn eta_quotient_inverse_roundtrip() {
        let a = eta_quotient(&[(1, 2), (2, -1)], 24 * 60).unwrap();
        let b = eta_quotient(&[(2, 1)], 24 * 60).unwrap();
        let c = eta_quotient(&[(1, 2)], 24 * 60).unwrap();
        let prod = qs_mul(&a, &b);
        assert_eq!(prod.order(), 24 * 60);
        assert!(qs_sub(&prod, &c).is_zero());
    }

    #[test]
    fn inverting_zero_series_fails() {
        let z = FracQSeries::zero(1, 10);
        assert!(matches!(qs_pow(&z, -1), Err(QSeriesError::VanishingLeading)));
    }

    #[test]
    fn hecke_trivial_examples() {
        let chi = DirichletCharacter::trivial(64);
        let z = FracQSeries::zero(1, 1000);
        assert!(hecke_tp2(&z, 1, &chi, 3).unwrap().is_zero());
        assert_eq!(eigen_check(&z, 1, &chi, 3).unwrap(), (false, None));
        assert!(matches!(hecke_tp2(&z, 1, &chi, 2), Err(QSeriesError::PrimeDividesLevel { .. })));
    }

    #[test]
    fn cache_roundtrip_in_memory() {
        let s = qs_add(&eta_expansion(3, 24 * 30), &FracQSeries::from_terms(24, 24 * 30, [(5, BigRational::new(7.into(), (-3).into()))]));
        let mut buf = Vec::new();
        write_cache(&s, &mut buf).unwrap();
        let back = read_cache(buf.as_slice()).unwrap();
        assert_eq!(back.denom(), s.denom());
        assert_eq!(back.order(), s.order());
        assert_eq!(back.terms().collect::<Vec<_>>(), s.terms().collect::<Vec<_>>());
        let mut buf2 = Vec::new();
        write_cache(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert!(read_cache("D\t1\n".as_bytes()).is_err());
        assert!(read_cache("D\t1\torder\t5\n9\t1\t1\n".as_bytes()).is_err());
    }

    #[test]
    fn to_integral_rounds_order_up() {
        let s = FracQSeries::from_int_terms(24, 49, [(24, 3), (48, 1)]);
        let t = s.to_integral().unwrap();
        assert_eq!(t.order(), 3);
        assert_eq!(t.coeff(2), q(1));
        assert!(FracQSeries::from_int_terms(24, 49, [(25, 1)]).to_integral().is_err());
    }
}
