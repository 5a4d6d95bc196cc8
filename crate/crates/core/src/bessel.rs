//! Archimedean Bessel kernels for weight `k + 1/2` forms and the transform
//! `F ↦ ∫ 𝒥(αy) F(y) dy`.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quad::{integrate, QuadError, QuadResult, DEFAULT_BUDGET};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex gamma function (Lanczos, g = 7, with reflection for `Re z < 1/2`).
pub fn gamma(z: Complex64) -> Complex64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return Complex64::new(PI, 0.0) / (s * gamma(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(C[0], 0.0);
    for (i, c) in C.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// `J_ν(x)` for half-integer `ν = nu_num/2` with `nu_num` odd and `≥ −1`.
pub fn bessel_j_halfint(nu_num: i32, x: f64) -> f64 {
    assert!(nu_num % 2 != 0 && nu_num >= -1, "order must be a half-integer ≥ −1/2");
    assert!(x > 0.0, "argument must be positive");
    let pref = (2.0 / (PI * x)).sqrt();
    let jm = pref * x.cos(); // J_{−1/2}
    let j0 = pref * x.sin(); // J_{1/2}
    if nu_num == -1 {
        return jm;
    }
    if nu_num == 1 {
        return j0;
    }
    let steps = ((nu_num - 1) / 2) as usize;
    let nu = nu_num as f64 / 2.0;
    if x >= nu {
        // Upward recurrence J_{μ+1} = (2μ/x) J_μ − J_{μ−1} is stable here.
        let (mut prev, mut cur) = (jm, j0);
        for i in 0..steps {
            let mu = 0.5 + i as f64;
            let next = 2.0 * mu / x * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    // Miller's downward recurrence, normalised at order ±1/2.
    let start = steps + 20 + (x as usize) + ((40.0 * (steps as f64 + 1.0)).sqrt() as usize);
    let (mut hi, mut cur) = (0.0f64, 1e-300f64);
    let mut target = 0.0;
    let mut half = 0.0;
    for i in (0..=start).rev() {
        // cur holds J_{i+1/2}, hi holds J_{i+3/2}.
        if i == steps {
            target = cur;
        }
        if i == 0 {
            half = cur;
            break;
        }
        let mu = i as f64 + 0.5;
        let lower = 2.0 * mu / x * cur - hi;
        hi = cur;
        cur = lower;
        if cur.abs() > 1e250 {
            hi *= 1e-250;
            cur *= 1e-250;
            target *= 1e-250;
        }
    }
    // half = J_{1/2}, hi = J_{3/2} (unnormalised); J_{−1/2} = (1/x) J_{1/2} − ... via recurrence.
    let minus_half = (1.0 / x) * half - hi; // J_{−1/2} = (2·(1/2)/x) J_{1/2} − J_{3/2}
    let scale = if j0.abs() >= jm.abs() { j0 / half } else { jm / minus_half };
    target * scale
}

/// Integrand scale guard: stop the tails once the exponent is below `−TAIL`.
const TAIL: f64 = 46.0;

/// `K_s(x) = ∫₀^∞ e^{−x cosh t} cosh(st) dt` for real `x > 0`.
pub fn bessel_k(s: Complex64, x: f64) -> Result<Complex64, QuadError> {
    assert!(x > 0.0, "argument must be positive");
    let sr = s.re.abs();
    // e^{−x(cosh t − 1) + |Re s| t} < e^{−TAIL} beyond t_max.
    let mut t_max = 1.0f64;
    while x * (t_max.cosh() - 1.0) - sr * t_max < TAIL {
        t_max *= 1.25;
    }
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (s * t).cosh();
    let r = integrate(f, 0.0, t_max, 1e-15, 8, DEFAULT_BUDGET)?;
    Ok(r.value * (-x).exp())
}

/// `K_s(σ i y)` for `y > 0`, `σ = ±1`, along the contour that first runs
/// vertically to `∓iπ/2` and then horizontally, where the integrand decays
/// like `e^{−y sinh u}`.
pub fn k_imag(s: Complex64, y: f64, sigma: i8) -> Result<Complex64, QuadError> {
    assert!(y > 0.0, "argument must be positive");
    let sg = if sigma >= 0 { 1.0 } else { -1.0 };
    // |cos(sτ)| and |cosh(s(u − iπ/2))| reach about cosh(|Im s|π/2).
    let tol = 2e-14 * (s.im.abs() * FRAC_PI_2).cosh();
    let vertical = integrate(
        |tau: f64| Complex64::from_polar(1.0, -sg * y * tau.cos()) * (s * tau).cos(),
        0.0,
        FRAC_PI_2,
        tol,
        4 + (y / 4.0) as usize,
        DEFAULT_BUDGET,
    )?;
    let sr = s.re.abs();
    let mut u_max = 1.0f64;
    while y * u_max.sinh() - sr * u_max < TAIL {
        u_max *= 1.25;
    }
    let shift = Complex64::new(0.0, -sg * FRAC_PI_2);
    let horizontal = integrate(
        |u: f64| (-y * u.sinh()).exp() * (s * (shift + u)).cosh(),
        0.0,
        u_max,
        tol,
        8,
        DEFAULT_BUDGET,
    )?;
    Ok(Complex64::new(0.0, -sg) * vertical.value + horizontal.value)
}

/// `K_s((−1)^k·4πi√x) − i·K_s(−(−1)^k·4πi√x)`.
pub fn imagarg_k_combo(s: Complex64, x: f64, parity: u32) -> Result<Complex64, QuadError> {
    let y = 4.0 * PI * x.sqrt();
    let sigma: i8 = if parity % 2 == 0 { 1 } else { -1 };
    let a = k_imag(s, y, sigma)?;
    let b = k_imag(s, y, -sigma)?;
    Ok(a - Complex64::i() * b)
}

/// Archimedean type as seen by the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelArch {
    Holomorphic { k: u32 },
    Maass { s: Complex64, k: u32 },
}

/// Selects `𝒥^{ε,+}`; `sign` is `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub arch: KernelArch,
    pub sign: i8,
}

impl KernelSpec {
    pub fn holomorphic(k: u32, sign: i8) -> Self {
        KernelSpec { arch: KernelArch::Holomorphic { k }, sign }
    }

    pub fn maass(s: Complex64, k: u32, sign: i8) -> Self {
        KernelSpec { arch: KernelArch::Maass { s, k }, sign }
    }

    /// True when the kernel is identically zero.
    pub fn is_null(&self) -> bool {
        matches!(self.arch, KernelArch::Holomorphic { .. }) && self.sign < 0
    }

    /// A short unambiguous description, used in CSV headers.
    pub fn describe(&self) -> String {
        let sign = if self.sign >= 0 { '+' } else { '-' };
        match self.arch {
            KernelArch::Holomorphic { k } => format!("holomorphic(k={k}) eps={sign}"),
            KernelArch::Maass { s, k } => format!("maass(s={}{:+}i;k={k}) eps={sign}", s.re, s.im),
        }
    }
}

/// `i^n` exactly.
fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// The holomorphic prefactor `√2(1−i)π e^{−3πik/2}/cos(πk)`, from exact `k`.
pub fn holomorphic_prefactor(k: u32) -> Complex64 {
    // e^{−3πik/2} = i^k and cos(πk) = (−1)^k.
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::new(SQRT_2 * PI, -SQRT_2 * PI) * i_pow(k as i64) * sign
}

/// `𝒥^{ε,+}(x)`.
pub fn kernel_eval(spec: &KernelSpec, x: f64) -> Result<Complex64, QuadError> {
    match spec.arch {
        KernelArch::Holomorphic { k } => {
            if spec.sign < 0 || x <= 0.0 {
                return Ok(ZERO);
            }
            let j = bessel_j_halfint(2 * k as i32 - 1, 4.0 * PI * x.sqrt());
            Ok(holomorphic_prefactor(k) * (j / x.sqrt()))
        }
        KernelArch::Maass { s, k } => {
            if spec.sign >= 0 {
                if x <= 0.0 {
                    return Ok(ZERO);
                }
                Ok(2.0 / x.sqrt() * imagarg_k_combo(s, x, k)?)
            } else {
                if x >= 0.0 {
                    return Ok(ZERO);
                }
                let ax = x.abs();
                Ok(2.0 / ax.sqrt() * maass_minus_factor(s, k) * bessel_k(s, 4.0 * PI * ax.sqrt())?)
            }
        }
    }
}

/// `z^w` with the principal logarithm.
fn cpow(z: Complex64, w: Complex64) -> Complex64 {
    (w * z.ln()).exp()
}

/// The root-of-unity and Gamma-ratio factor of the Maass `−+` kernel, with
/// the Gamma arguments `(1+s)/2 ∓ k/2 ∓ k/4` taken as displayed.
pub fn maass_minus_factor(s: Complex64, k: u32) -> Complex64 {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let kf = k as f64;
    let lo = (one + s) / 2.0 - kf / 2.0 - kf / 4.0;
    let hi = (one + s) / 2.0 + kf / 2.0 + kf / 4.0;
    if k % 2 == 0 {
        (cpow(-i, -s - one) - cpow(i, -s)) * gamma(lo) / gamma(hi)
    } else {
        (cpow(i, -s - one) + cpow(-i, -s)) * gamma(hi) / gamma(lo)
    }
}

/// `∫ 𝒥^{ε,+}(αy) F(y) dy` over the support `[lo, hi]` of `F`, to absolute
/// tolerance `tol`.
pub fn hankel_transform<F: Fn(f64) -> f64>(
    f: F,
    support: (f64, f64),
    spec: &KernelSpec,
    alpha: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    let (lo, hi) = support;
    assert!(lo > 0.0 && hi > lo, "support must be a positive interval");
    if spec.is_null() || alpha == 0.0 {
        return Ok(QuadResult { value: ZERO, error: 0.0, subintervals: 0 });
    }
    // Roughly one starting piece per oscillation of the kernel.
    let cycles = 2.0 * (alpha.abs() * hi).sqrt() - 2.0 * (alpha.abs() * lo).sqrt();
    let initial = (cycles.ceil() as usize).clamp(4, 4096);
    let failure: RefCell<Option<QuadError>> = RefCell::new(None);
    let r = integrate(
        |y| match kernel_eval(spec, alpha * y) {
            Ok(v) => v * f(y),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                ZERO
            }
        },
        lo,
        hi,
        tol,
        initial,
        DEFAULT_BUDGET,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// Tricomi's `U(a, b, x)` for `Re a > 0` from
/// `Γ(a) U = ∫ exp(−x t) t^a (1 + t)^{b−a−1} dt/t` along the ray
/// `t = e^{v + iφ}`. The angle is the one with the smallest integrand peak,
/// which keeps cancellation low when `a` or `b` has a large imaginary part.
fn tricomi_u_integral(a: Complex64, b: Complex64, x: f64) -> Result<Complex64, QuadError> {
    let one = Complex64::new(1.0, 0.0);
    let log_integrand = |phi: f64, v: f64| -> Complex64 {
        let t = Complex64::from_polar(v.exp(), phi);
        -x * t + a * Complex64::new(v, phi) + (b - a - one) * (one + t).ln()
    };
    let window = |phi: f64| -> (f64, f64, f64) {
        let mut hi = (x.recip()).ln().max(0.0) + 1.0;
        while log_integrand(phi, hi).re > -TAIL - 5.0 {
            hi += 1.0;
        }
        let mut lo = -1.0;
        while log_integrand(phi, lo).re > -TAIL - 5.0 || lo > hi - 2.0 {
            lo -= 1.0;
        }
        let peak = (0..=200)
            .map(|i| log_integrand(phi, lo + (hi - lo) * i as f64 / 200.0).re)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi, peak)
    };
    let mut best = (0.0, window(0.0));
    if a.im != 0.0 || b.im != 0.0 {
        for i in 1..=13 {
            for phi in [0.1 * i as f64, -0.1 * i as f64] {
                let w = window(phi);
                if w.2 < best.1 .2 - 0.5 {
                    best = (phi, w);
                }
            }
        }
    }
    let (phi, (lo, hi, peak)) = best;
    let tol = 1e-15 * peak.exp() * (hi - lo);
    let r = integrate(|v| log_integrand(phi, v).exp(), lo, hi, tol, 16, DEFAULT_BUDGET)?;
    Ok(r.value / gamma(a))
}

/// Whittaker's `W_{κ,μ}(x) = e^{−x/2} x^{μ+1/2} U(μ − κ + 1/2, 1 + 2μ, x)`.
/// For `Re(μ − κ + 1/2) ≤ 0`, `U` comes from the integral at two shifted
/// parameters and the recurrence
/// `U(a−1) = (2a − b + x) U(a) − a(a − b + 1) U(a+1)`, run downward.
pub fn whittaker_w(kappa: f64, mu: Complex64, x: f64) -> Result<Complex64, QuadError> {
    assert!(x > 0.0, "argument must be positive");
    let one = Complex64::new(1.0, 0.0);
    let a = mu - kappa + 0.5;
    let b = one + 2.0 * mu;
    let shift = if a.re >= 1.0 { 0 } else { (1.0 - a.re).ceil() as usize };
    let a0 = a + shift as f64;
    let u = if shift == 0 {
        tricomi_u_integral(a, b, x)?
    } else {
        let mut upper = tricomi_u_integral(a0 + 1.0, b, x)?;
        let mut cur = tricomi_u_integral(a0, b, x)?;
        let mut ak = a0;
        for _ in 0..shift {
            let lower = (2.0 * ak - b + x) * cur - ak * (ak - b + one) * upper;
            upper = cur;
            cur = lower;
            ak -= 1.0;
        }
        cur
    };
    Ok((-x / 2.0).exp() * Complex64::new(x, 0.0).powc(mu + 0.5) * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(Complex64::new(5.0, 0.0)).re - 24.0).abs() < 1e-12);
        assert!((gamma(Complex64::new(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(Complex64::new(-0.5, 0.0)).re + 2.0 * PI.sqrt()).abs() < 1e-12);
        // |Γ(iy)|² = π / (y sinh πy).
        let y = 1.3;
        let g = gamma(Complex64::new(0.0, y));
        assert!((g.norm_sqr() - PI / (y * (PI * y).sinh())).abs() < 1e-13);
    }

    #[test]
    fn j_order_minus_half() {
        let x = 2.5;
        assert!((bessel_j_halfint(-1, x) - (2.0 / (PI * x)).sqrt() * x.cos()).abs() < 1e-15);
    }

    #[test]
    fn holomorphic_kernel_k1() {
        let x = 0.37;
        let v = kernel_eval(&KernelSpec::holomorphic(1, 1), x).unwrap();
        let expect = Complex64::new(-SQRT_2 * PI, -SQRT_2 * PI) * (bessel_j_halfint(1, 4.0 * PI * x.sqrt()) / x.sqrt());
        assert!((v - expect).norm() < 1e-14);
        assert_eq!(kernel_eval(&KernelSpec::holomorphic(1, -1), x).unwrap(), ZERO);
        assert_eq!(kernel_eval(&KernelSpec::holomorphic(1, 1), -x).unwrap(), ZERO);
    }

    #[test]
    fn maass_support() {
        let s = Complex64::new(0.0, 2.0);
        assert_eq!(kernel_eval(&KernelSpec::maass(s, 1, 1), -0.3).unwrap(), ZERO);
        assert_eq!(kernel_eval(&KernelSpec::maass(s, 1, -1), 0.3).unwrap(), ZERO);
        assert!(kernel_eval(&KernelSpec::maass(s, 1, -1), -0.3).unwrap().norm() > 0.0);
    }

    #[test]
    fn prefactor_cycles_with_period_four() {
        for k in 0..12 {
            assert_eq!(holomorphic_prefactor(k), holomorphic_prefactor(k + 4));
            assert!((holomorphic_prefactor(k).norm() - 2.0 * PI).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_test_function() {
        let r = hankel_transform(|_| 0.0, (1.0, 3.0), &KernelSpec::holomorphic(1, 1), 2.0, 1e-12).unwrap();
        assert_eq!(r.value, ZERO);
    }
}
