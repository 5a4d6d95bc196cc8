use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use metavoronoi::bessel::*;
use metavoronoi::suites::k_imag_oracle;
use metavoronoi::voronoi::TestFunction;

/// `J_ν` for `ν = nu_num/2 > 0` from 30 terms of the power series, with the
/// magnitude of the first omitted term as a tail bound.
fn j_power_series(nu_num: i32, x: f64) -> (f64, f64) {
    let nu = nu_num as f64 / 2.0;
    let half = x / 2.0;
    let mut term = half.powf(nu) / gamma(Complex64::new(nu + 1.0, 0.0)).re;
    let mut sum = 0.0;
    for m in 0..30 {
        sum += term;
        term *= -half * half / ((m + 1) as f64 * (m as f64 + 1.0 + nu));
    }
    (sum, term.abs())
}

#[test]
fn half_integer_j_against_power_series() {
    for x in [0.5, 1.0, 10.0] {
        for nu_num in [1, 3, 5] {
            let (want, tail) = j_power_series(nu_num, x);
            assert!(tail < 1e-14, "series tail {tail} at x={x}");
            let got = bessel_j_halfint(nu_num, x);
            assert!((got - want).abs() < 1e-10, "J_{nu_num}/2({x}) = {got} vs {want}");
        }
        let p = (2.0 / (PI * x)).sqrt();
        assert!((bessel_j_halfint(1, x) - p * x.sin()).abs() < 1e-12);
        assert!((bessel_j_halfint(3, x) - p * (x.sin() / x - x.cos())).abs() < 1e-12);
    }
}

#[test]
fn small_argument_limit() {
    for nu_num in [1, 3, 5, 7] {
        let nu = nu_num as f64 / 2.0;
        let x: f64 = 1e-4;
        let lead = (x / 2.0).powf(nu) / gamma(Complex64::new(nu + 1.0, 0.0)).re;
        assert!((bessel_j_halfint(nu_num, x) / lead - 1.0).abs() < 1e-7);
    }
}

#[test]
fn three_term_recurrence() {
    for i in 1..200 {
        let x = 0.05 * i as f64;
        for nu_num in [1, 3, 5, 7] {
            let nu = nu_num as f64 / 2.0;
            let lhs = bessel_j_halfint(nu_num - 2, x) + bessel_j_halfint(nu_num + 2, x);
            let rhs = 2.0 * nu / x * bessel_j_halfint(nu_num, x);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(lhs.abs()).max(1e-3), "ν={nu} x={x}: {lhs} {rhs}");
        }
    }
}

/// `∫₀^∞ e^{−x cosh t} cosh(st) dt` by composite Simpson on `[0, 12]`.
fn k_simpson(s: f64, x: f64) -> f64 {
    let n = 100_000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-x * t.cosh()).exp() * (s * t).cosh();
    let mut acc = f(0.0) + f(12.0);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn k_half_closed_form_and_symmetries() {
    for x in [0.1, 0.7, 2.0, 9.0, 25.0] {
        let closed = (PI / (2.0 * x)).sqrt() * (-x).exp();
        assert!((k_simpson(0.5, x) - closed).abs() < 1e-10 * closed.max(1e-3));
        let k = bessel_k(Complex64::new(0.5, 0.0), x).unwrap();
        assert!((k.re - closed).abs() < 1e-10 * closed.max(1e-3) && k.im == 0.0);
        let s = Complex64::new(0.2, 1.7);
        let kp = bessel_k(s, x).unwrap();
        let km = bessel_k(-s, x).unwrap();
        assert!((kp - km).norm() < 1e-14 * kp.norm().max(1e-30));
        let kt = bessel_k(Complex64::new(0.0, 3.1), x).unwrap();
        assert!(kt.im.abs() < 1e-15 * kt.re.abs().max(1e-30));
    }
}

#[test]
fn imaginary_argument_matches_rotated_contour() {
    for (s, x) in [(Complex64::new(0.0, 0.0), 0.01), (Complex64::new(0.0, 0.0), 0.4), (Complex64::new(0.0, 0.0), 3.0)] {
        for parity in [0u32, 1] {
            let y = 4.0 * PI * f64::sqrt(x);
            let sigma: i8 = if parity == 0 { 1 } else { -1 };
            let oracle = k_imag_oracle(s, y, sigma) - Complex64::i() * k_imag_oracle(s, y, -sigma);
            let got = imagarg_k_combo(s, x, parity).unwrap();
            assert!((got - oracle).norm() < 1e-8 * oracle.norm().max(1.0), "s={s} x={x}: {got} vs {oracle}");
        }
    }
}

#[test]
fn parity_swap_for_imaginary_spectral_parameter() {
    // For s ∈ iℝ, K_s(−iy) is the conjugate of K_s(iy), so the two parities
    // are A − i·conj(A) and conj(A) − i·A with A = K_s(iy).
    for t in [0.5, 2.0, 6.0] {
        let s = Complex64::new(0.0, t);
        for x in [0.02, 0.3, 2.5] {
            let y = 4.0 * PI * f64::sqrt(x);
            let a = k_imag_oracle(s, y, 1);
            let p0 = imagarg_k_combo(s, x, 0).unwrap();
            let p1 = imagarg_k_combo(s, x, 1).unwrap();
            let scale = a.norm().max(1.0);
            assert!((p0 - (a - Complex64::i() * a.conj())).norm() < 1e-8 * scale);
            assert!((p1 - (a.conj() - Complex64::i() * a)).norm() < 1e-8 * scale);
        }
    }
}

/// No branch jumps: second differences on a fine grid stay small against
/// the local amplitude.
#[test]
fn combination_is_continuous_on_a_dense_grid() {
    for s in [Complex64::new(0.0, 2.5), Complex64::new(0.3, -1.0)] {
        for parity in [0u32, 1] {
            let mut xs: Vec<f64> = vec![1e-3];
            while *xs.last().unwrap() < 1e3 {
                let x = *xs.last().unwrap();
                xs.push(x + (0.02 * x).min(0.01 * x.sqrt()));
            }
            let v: Vec<Complex64> = xs.iter().map(|&x| imagarg_k_combo(s, x, parity).unwrap()).collect();
            assert!(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            for i in 1..v.len() - 1 {
                let lo = i.saturating_sub(200);
                let hi = (i + 200).min(v.len());
                let amp = v[lo..hi].iter().map(|z| z.norm()).fold(0.0, f64::max);
                let d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]).norm();
                assert!(d2 <= 0.01 * amp + 1e-12, "kink near x={}: {:?}", xs[i], &v[i - 1..=i + 1]);
            }
        }
    }
}

#[test]
fn kernel_support_and_holomorphic_phase() {
    let maass = Complex64::new(0.0, 1.3);
    for x in [0.01, 0.5, 3.0, 40.0] {
        assert_eq!(kernel_eval(&KernelSpec::holomorphic(1, -1), x).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(kernel_eval(&KernelSpec::holomorphic(1, -1), -x).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(kernel_eval(&KernelSpec::holomorphic(2, 1), -x).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(kernel_eval(&KernelSpec::maass(maass, 1, 1), -x).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(kernel_eval(&KernelSpec::maass(maass, 0, -1), x).unwrap(), Complex64::new(0.0, 0.0));
        for k in 0..5u32 {
            let v = kernel_eval(&KernelSpec::holomorphic(k, 1), x).unwrap();
            let real = bessel_j_halfint(2 * k as i32 - 1, 4.0 * PI * x.sqrt()) / x.sqrt();
            assert!((v - holomorphic_prefactor(k) * real).norm() < 1e-13 * v.norm().max(1e-12));
        }
        // k = 1 simplification: −√2 π (1 + i)
        let v = kernel_eval(&KernelSpec::holomorphic(1, 1), x).unwrap();
        let j = (2.0 / (PI * 4.0 * PI * x.sqrt())).sqrt() * (4.0 * PI * x.sqrt()).sin();
        let want = Complex64::new(-SQRT_2 * PI, -SQRT_2 * PI) * j / x.sqrt();
        assert!((v - want).norm() < 1e-12 * want.norm().max(1e-12));
    }
}

/// `∫ 𝒥(αy) F(y) dy` for the `k = 1` holomorphic kernel in closed form,
/// by composite Simpson with a fixed fine step.
fn simpson_transform(test: &TestFunction, alpha: f64) -> Complex64 {
    let (lo, hi) = test.support();
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let g = |y: f64| {
        let x = alpha * y;
        let r = 4.0 * PI * x.sqrt();
        test.eval(y) * (2.0 / (PI * r)).sqrt() * r.sin() / x.sqrt()
    };
    let mut acc = g(lo) + g(hi);
    for i in 1..n {
        acc += g(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    Complex64::new(-SQRT_2 * PI, -SQRT_2 * PI) * (acc * h / 3.0)
}

#[test]
fn hankel_transform_against_simpson() {
    let test = TestFunction::bump(2.0, 1.0).unwrap();
    let spec = KernelSpec::holomorphic(1, 1);
    for alpha in [0.1, 1.0, 10.0] {
        let r = hankel_transform(|y| test.eval(y), test.support(), &spec, alpha, 1e-12).unwrap();
        let want = simpson_transform(&test, alpha);
        assert!((r.value - want).norm() < 1e-8, "α={alpha}: {} vs {want}", r.value);
    }
}

#[test]
fn hankel_transform_is_linear_and_decays() {
    let f = TestFunction::bump(2.0, 1.0).unwrap();
    let g = TestFunction::bump(2.2, 0.6).unwrap();
    let spec = KernelSpec::holomorphic(1, 1);
    let tol = 1e-10;
    for alpha in [0.3, 4.0] {
        let hf = hankel_transform(|y| f.eval(y), (1.0, 3.0), &spec, alpha, tol).unwrap().value;
        let hg = hankel_transform(|y| g.eval(y), (1.0, 3.0), &spec, alpha, tol).unwrap().value;
        let both = hankel_transform(|y| 2.0 * f.eval(y) - 3.0 * g.eval(y), (1.0, 3.0), &spec, alpha, tol).unwrap().value;
        assert!((both - (2.0 * hf - 3.0 * hg)).norm() < 2.0 * tol * 5.0);
    }
    // A bump that is wide on the √y scale the kernel oscillates in; the
    // narrow bump above only reaches its super-polynomial regime at larger α.
    let wide = TestFunction::bump(10.0, 8.0).unwrap();
    let mags: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|&a| hankel_transform(|y| wide.eval(y), wide.support(), &spec, a, 1e-16).unwrap().value.norm())
        .collect();
    for w in mags.windows(2) {
        assert!(w[1] < w[0] / 8.0, "{mags:?}");
    }
}
