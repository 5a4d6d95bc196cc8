//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use thiserror::Error;

/// Default cap on the number of subintervals.
pub const DEFAULT_BUDGET: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {tol:e} within {budget} subintervals (estimate {estimate:e})")]
    Budget { tol: f64, budget: usize, estimate: f64 },
    #[error("integrand produced a non-finite value at {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub subintervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !(fc.re.is_finite() && fc.im.is_finite()) {
        return Err(QuadError::NonFinite(c));
    }
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        if !(f1.re.is_finite() && f1.im.is_finite() && f2.re.is_finite() && f2.im.is_finite()) {
            return Err(QuadError::NonFinite(c - x));
        }
        k += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let value = k * h;
    let error = ((k - g) * h).norm();
    Ok(Segment { a, b, value, error })
}

/// `∫_a^b f` to absolute tolerance `tol`, splitting the worst interval until
/// the summed error estimate drops below `tol` or `budget` intervals exist.
/// `initial` pieces seed the subdivision, which helps oscillatory integrands.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    initial: usize,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, subintervals: 0 });
    }
    let initial = initial.clamp(1, budget.max(1));
    let mut heap = BinaryHeap::with_capacity(initial * 2);
    let step = (b - a) / initial as f64;
    for i in 0..initial {
        let lo = a + step * i as f64;
        let hi = if i + 1 == initial { b } else { a + step * (i + 1) as f64 };
        heap.push(gk15(&f, lo, hi)?);
    }
    let mut value: Complex64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        if error <= tol {
            // Recompute the totals to shed accumulated update drift.
            let v: Complex64 = heap.iter().map(|s| s.value).sum();
            let e: f64 = heap.iter().map(|s| s.error).sum();
            if e <= tol {
                return Ok(QuadResult { value: v, error: e, subintervals: heap.len() });
            }
            value = v;
            error = e;
        }
        if heap.len() >= budget {
            return Err(QuadError::Budget { tol, budget, estimate: error });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if worst.error == 0.0 || mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in double precision.
            return Err(QuadError::Budget { tol, budget, estimate: error });
        }
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, budget: usize) -> Result<(f64, f64), QuadError> {
    let r = integrate(|x| Complex64::new(f(x), 0.0), a, b, tol, 1, budget)?;
    Ok((r.value.re, r.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_real(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 10).unwrap();
        assert!((r.0 - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(|x| Complex64::from_polar(1.0, 50.0 * x), 0.0, 3.0, 1e-12, 4, DEFAULT_BUDGET).unwrap();
        let exact = (Complex64::from_polar(1.0, 150.0) - 1.0) / Complex64::new(0.0, 50.0);
        assert!((r.value - exact).norm() < 1e-11);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate_real(|x| x.sqrt().recip(), 0.0, 1.0, 1e-9, DEFAULT_BUDGET).unwrap();
        assert!((r.0 - 2.0).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(|x| Complex64::new((1.0 / x).sin(), 0.0), 1e-6, 1.0, 1e-15, 1, 20);
        assert!(matches!(r, Err(QuadError::Budget { .. })));
    }

    #[test]
    fn nan_is_reported() {
        let r = integrate_real(|_| f64::NAN, 0.0, 1.0, 1e-9, 10);
        assert!(matches!(r, Err(QuadError::NonFinite(_))));
    }
}
