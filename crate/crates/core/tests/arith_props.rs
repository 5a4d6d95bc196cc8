use num_integer::Integer;
use proptest::prelude::*;

use metavoronoi::arith::*;

/// Whether `c` is a nonzero square modulo the odd prime `p`, by enumeration.
fn is_square_mod(c: i64, p: i64) -> bool {
    (1..p).any(|x| (x * x - c).rem_euclid(p) == 0)
}

fn primes_below(n: i64) -> Vec<i64> {
    (3..n).filter(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)).collect()
}

#[test]
fn residue_symbol_matches_square_enumeration_at_primes() {
    for p in primes_below(60) {
        for c in -40..40 {
            let want = if c % p == 0 { 0 } else if is_square_mod(c, p) { 1 } else { -1 };
            assert_eq!(kronecker_shimura(c, p).unwrap(), want, "({c}/{p})");
        }
    }
}

#[test]
fn inverse_by_exhaustion() {
    for m in 1..60i64 {
        for a in -70..70i64 {
            match inv_mod(a, m) {
                Ok(x) => {
                    assert!((0..m).contains(&x));
                    assert_eq!((a * x - 1).rem_euclid(m), 0);
                }
                Err(_) => assert!((0..m).all(|x| (a * x - 1).rem_euclid(m) != 0) || m == 1),
            }
        }
    }
    assert!(inv_mod(4, 6).is_err());
}

fn all_cusps(n: u64) -> Vec<Cusp> {
    let mut out = Vec::new();
    for q in (1..=n).filter(|q| n % q == 0) {
        for a in 0..q as i64 {
            if (a as u64).gcd(&q) == 1 {
                out.push((a, q));
            }
        }
    }
    out.into_iter().map(|(a, q)| Cusp::new(a, q, n, 1).unwrap()).collect()
}

#[test]
fn delta_formulas_agree() {
    for n in [4u64, 8, 12, 16, 24, 48] {
        for m in (1..=n).filter(|m| n % m == 0) {
            for c in all_cusps(n) {
                let c = Cusp { conductor: m, ..c };
                let w = cusp_width(&c).unwrap();
                let alt = w * m / (c.q * w).gcd(&m);
                assert_eq!(cusp_delta(&c).unwrap(), alt, "N={n} M={m} cusp {}/{}", c.a, c.q);
            }
        }
    }
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n as i128, d as i128)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn residue_symbol_multiplicative(c1 in -500i64..500, c2 in -500i64..500, d in 0i64..400) {
        let d = 2 * d + 1;
        prop_assume!(c1.gcd(&d) == 1 && c2.gcd(&d) == 1);
        let lhs = kronecker_shimura(c1 * c2, d).unwrap();
        let rhs = kronecker_shimura(c1, d).unwrap() * kronecker_shimura(c2, d).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn hilbert_symmetric_and_bilinear(
        a in (-300i64..300).prop_filter("nonzero", |x| *x != 0),
        a2 in (-300i64..300).prop_filter("nonzero", |x| *x != 0),
        b in (-300i64..300).prop_filter("nonzero", |x| *x != 0),
        da in 1i64..30, db in 1i64..30,
        pi in 0usize..5,
    ) {
        let p = [2u64, 3, 5, 7, 11][pi];
        let (x, x2, y) = (rat(a, da), rat(a2, 1), rat(b, db));
        prop_assert_eq!(hilbert_padic(&x, &y, p).unwrap(), hilbert_padic(&y, &x, p).unwrap());
        let prod = hilbert_padic(&(x * x2), &y, p).unwrap();
        prop_assert_eq!(prod, hilbert_padic(&x, &y, p).unwrap() * hilbert_padic(&x2, &y, p).unwrap());
    }

    #[test]
    fn product_formula(
        a in (-2000i64..2000).prop_filter("nonzero", |x| *x != 0),
        b in (-2000i64..2000).prop_filter("nonzero", |x| *x != 0),
        da in 1i64..200, db in 1i64..200,
    ) {
        let (x, y) = (rat(a, da), rat(b, db));
        let mut primes: Vec<u64> = [a, da, b, db].iter().flat_map(|v| prime_divisors(*v as i128)).collect();
        primes.push(2);
        primes.sort_unstable();
        primes.dedup();
        let mut s = hilbert_real(&x, &y).unwrap();
        for p in primes {
            s *= hilbert_padic(&x, &y, p).unwrap();
        }
        prop_assert_eq!(s, 1);
    }
}
