//! Weight `k + 1/2` forms: evaluation from the expansion at `∞`, the slash
//! action, the Whittaker profile, and Fourier coefficients at other cusps.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{chi4, eps_d, inv_mod, kronecker_shimura, ArithError, Cusp, DirichletCharacter, RootOfUnity};
use crate::bessel::{whittaker_w, KernelSpec};
use crate::metaplectic::{principal_sqrt, theta_multiplier, MetaError};
use crate::qseries::{load_cache, FracQSeries, QSeriesError};
use crate::quad::QuadError;

#[derive(Debug, Error)]
pub enum FormError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Series(#[from] QSeriesError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("invalid form: {0}")]
    Invalid(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("series tail {tail:e} exceeds the requested precision {wanted:e} at Im z = {im}")]
    Precision { tail: f64, wanted: f64, im: f64 },
    #[error("automorphy routing reached only Im = {reached:e} (< {needed:e})")]
    Routing { reached: f64, needed: f64 },
    #[error("Whittaker profile underflows at n = {n} (κ = {kappa:e})")]
    IllConditioned { n: i64, kappa: f64 },
}

/// Archimedean type of a form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArchType {
    Holomorphic,
    Maass { s: Complex64 },
}

/// `κ_f(y) = W_{sgn(y)(2k+1)/4, s/2}(4π|y|)`; in the holomorphic case
/// `(4πy)^{(2k+1)/4} e^{−2πy}` for `y > 0` and `0` for `y < 0`.
pub fn whittaker_kappa(y: f64, k: u32, arch: ArchType) -> Result<f64, FormError> {
    assert!(y != 0.0, "κ is evaluated at nonzero arguments only");
    let weight = (2 * k + 1) as f64 / 4.0;
    match arch {
        ArchType::Holomorphic => {
            if y < 0.0 {
                Ok(0.0)
            } else {
                Ok((4.0 * PI * y).powf(weight) * (-2.0 * PI * y).exp())
            }
        }
        ArchType::Maass { s } => {
            let w = whittaker_w(weight * y.signum(), s / 2.0, 4.0 * PI * y.abs())?;
            Ok(w.re)
        }
    }
}

/// An integer matrix `(a b; c d)` of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        debug_assert_eq!(a as i128 * d as i128 - b as i128 * c as i128, 1);
        Sl2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Sl2::new(1, 0, 0, 1)
    }

    pub fn mul(&self, o: &Sl2) -> Sl2 {
        Sl2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Sl2 {
        Sl2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn act(&self, z: Complex64) -> Complex64 {
        (z * self.a as f64 + self.b as f64) / (z * self.c as f64 + self.d as f64)
    }

    pub fn as_array(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `σ = (ā, (1 − aā)/q; −q, a)` sending `a/q` to `∞`.
    pub fn scaling(a: i64, q: i64, abar: i64) -> Result<Sl2, FormError> {
        let num = 1 - a as i128 * abar as i128;
        if num % q as i128 != 0 {
            return Err(FormError::Invalid(format!("{abar} is not inverse to {a} mod {q}")));
        }
        Ok(Sl2::new(abar, (num / q as i128) as i64, -q, a))
    }
}

/// Source of exact Fourier coefficients at `∞`. For holomorphic forms these
/// are the coefficients of the holomorphic function `F` with `f = Im^{(2k+1)/4} F`;
/// for Maass forms they are the coefficients against `κ_f`.
#[derive(Debug, Clone)]
pub struct HalfIntegralForm {
    pub label: String,
    pub k: u32,
    pub level: u64,
    pub chi: DirichletCharacter,
    pub arch: ArchType,
    series: FracQSeries,
    sparse: Vec<(i64, f64)>,
    growth: f64,
}

impl HalfIntegralForm {
    pub fn new(
        label: impl Into<String>,
        k: u32,
        level: u64,
        chi: DirichletCharacter,
        arch: ArchType,
        series: FracQSeries,
    ) -> Result<Self, FormError> {
        if level == 0 || level % 4 != 0 {
            return Err(FormError::Invalid(format!("level {level} is not a multiple of 4")));
        }
        if chi.modulus() != level {
            return Err(FormError::Invalid(format!(
                "character modulus {} differs from the level {level}",
                chi.modulus()
            )));
        }
        if !chi.is_even() {
            return Err(FormError::Invalid("the character must satisfy χ(−1) = 1".into()));
        }
        let series = series.to_integral()?;
        let sparse: Vec<(i64, f64)> = series
            .terms()
            .map(|(n, c)| (n, c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        if let ArchType::Holomorphic = arch {
            if sparse.iter().any(|(n, _)| *n < 0) {
                return Err(FormError::Invalid("holomorphic forms have no negative terms".into()));
            }
        }
        // Growth constant C with |a(n)| ≤ C·n^{(2k+1)/4} on the known range.
        let e = (2 * k + 1) as f64 / 4.0;
        let growth = sparse
            .iter()
            .filter(|(n, _)| *n != 0)
            .map(|(n, c)| c.abs() / (n.unsigned_abs() as f64).powf(e))
            .fold(0.0, f64::max);
        Ok(HalfIntegralForm { label: label.into(), k, level, chi, arch, series, sparse, growth })
    }

    /// The zero form of the given type.
    pub fn zero(k: u32, level: u64, arch: ArchType, order: i64) -> Result<Self, FormError> {
        Self::new("zero", k, level, DirichletCharacter::trivial(level), arch, FracQSeries::zero(1, order))
    }

    pub fn series(&self) -> &FracQSeries {
        &self.series
    }

    /// Exponents below this bound have exact coefficients.
    pub fn order(&self) -> i64 {
        self.series.order()
    }

    /// Nonzero `(n, coefficient)` pairs of the source in increasing `n`.
    pub fn nonzero_terms(&self) -> &[(i64, f64)] {
        &self.sparse
    }

    pub fn coeff_exact(&self, n: i64) -> BigRational {
        self.series.coeff(n)
    }

    /// `a_f(n)`: the coefficient against `κ_f(n y) e(n x)`.
    pub fn coeff(&self, n: i64) -> f64 {
        let raw = self.coeff_exact(n).to_f64().unwrap_or(f64::NAN);
        self.normalise(n, raw)
    }

    fn normalise(&self, n: i64, raw: f64) -> f64 {
        match self.arch {
            ArchType::Holomorphic => {
                if n <= 0 {
                    0.0
                } else {
                    raw * (4.0 * PI * n as f64).powf(-self.weight_exponent())
                }
            }
            ArchType::Maass { .. } => raw,
        }
    }

    /// `a_f(n)` for every nonzero source term.
    pub fn normalised_terms(&self) -> Vec<(i64, f64)> {
        self.sparse.iter().map(|&(n, c)| (n, self.normalise(n, c))).filter(|(_, c)| *c != 0.0).collect()
    }

    /// Heuristic bound for `|a_f(n; 𝔞)|` at any cusp: ten times the largest
    /// normalised coefficient seen at `∞`.
    pub fn coefficient_bound(&self) -> f64 {
        match self.arch {
            ArchType::Holomorphic => 10.0 * self.growth.max(1e-300) * (4.0 * PI).powf(-self.weight_exponent()),
            ArchType::Maass { .. } => {
                10.0 * self.sparse.iter().map(|t| t.1.abs()).fold(0.0, f64::max)
            }
        }
    }

    /// `(2k + 1)/4`.
    pub fn weight_exponent(&self) -> f64 {
        (2 * self.k + 1) as f64 / 4.0
    }

    pub fn kernel_spec(&self, sign: i8) -> KernelSpec {
        match self.arch {
            ArchType::Holomorphic => KernelSpec::holomorphic(self.k, sign),
            ArchType::Maass { s } => KernelSpec::maass(s, self.k, sign),
        }
    }

    pub fn kappa(&self, y: f64) -> Result<f64, FormError> {
        whittaker_kappa(y, self.k, self.arch)
    }

    /// A copy with `delta` added to the source coefficient at `n`.
    pub fn perturbed(&self, n: i64, delta: &BigRational) -> Result<Self, FormError> {
        let bump = FracQSeries::from_terms(1, self.order(), [(n, delta.clone())]);
        let series = crate::qseries::qs_add(&self.series, &bump);
        Self::new(format!("{}+perturbed", self.label), self.k, self.level, self.chi.clone(), self.arch, series)
    }

    /// Partial Fourier sum at `∞` with a tail estimate.
    pub fn evaluate(&self, z: Complex64, precision: f64) -> Result<Evaluation, FormError> {
        let y = z.im;
        if y <= 0.0 {
            return Err(FormError::Invalid("evaluation point must lie in the upper half plane".into()));
        }
        match self.arch {
            ArchType::Holomorphic => self.evaluate_holomorphic(z, precision),
            ArchType::Maass { .. } => self.evaluate_maass(z, precision),
        }
    }

    fn evaluate_holomorphic(&self, z: Complex64, precision: f64) -> Result<Evaluation, FormError> {
        let y = z.im;
        let decay = 2.0 * PI * y;
        let e = self.weight_exponent();
        let scale = y.powf(e);
        // Smallest index whose bounded tail is below a tenth of the precision.
        let goal = 0.1 * precision * (1.0 - (-decay).exp()) / (self.growth.max(1e-300) * scale);
        let mut cutoff = (1.0 / goal).ln().max(1.0) / decay;
        for _ in 0..8 {
            cutoff = ((cutoff.max(1.0)).powf(e) / goal).ln().max(1.0) / decay;
        }
        let limit = (cutoff.ceil() as i64 + 1).min(self.order());
        let mut acc = Complex64::new(0.0, 0.0);
        let phase = Complex64::new(0.0, 2.0 * PI) * z;
        for &(n, c) in &self.sparse {
            if n >= limit {
                break;
            }
            acc += c * (phase * n as f64).exp();
        }
        let tail = self.growth * holomorphic_tail(limit, e, decay) * scale;
        if tail > precision {
            return Err(FormError::Precision { tail, wanted: precision, im: y });
        }
        Ok(Evaluation { value: acc * scale, tail, terms: self.sparse.partition_point(|t| t.0 < limit) })
    }

    fn evaluate_maass(&self, z: Complex64, precision: f64) -> Result<Evaluation, FormError> {
        let y = z.im;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut terms = 0;
        for &(n, c) in &self.sparse {
            if n == 0 {
                continue;
            }
            let kap = self.kappa(n as f64 * y)?;
            acc += c * kap * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * z.re);
            terms += 1;
        }
        let n_edge = self.order().max(1) as f64;
        let tail = self.growth * (4.0 * PI * n_edge * y).powf(self.weight_exponent()) * (-2.0 * PI * n_edge * y).exp()
            / (1.0 - (-2.0 * PI * y).exp());
        if tail > precision {
            return Err(FormError::Precision { tail, wanted: precision, im: y });
        }
        Ok(Evaluation { value: acc, tail, terms })
    }
}

/// `Σ_{n ≥ start} n^e e^{−c n}`, bounded by its first terms and a geometric tail.
fn holomorphic_tail(start: i64, e: f64, c: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = start.max(1) as f64;
    for _ in 0..64 {
        let t = n.powf(e) * (-c * n).exp();
        sum += t;
        if t < 1e-30 * sum.max(1e-300) {
            break;
        }
        n += 1.0;
    }
    let t = n.powf(e) * (-c * n).exp();
    let ratio = ((n + 1.0) / n).powf(e) * (-c).exp();
    if ratio < 1.0 {
        sum + t / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub tail: f64,
    pub terms: usize,
}

/// `(|j_ϑ(γ,z)|/j_ϑ(γ,z))^{2k+1} · f(γz)` for `γ ∈ Γ₀(4)`.
pub fn slash_action<F>(f: F, gamma: [i64; 4], z: Complex64, k: u32) -> Result<Complex64, FormError>
where
    F: Fn(Complex64) -> Complex64,
{
    let j = theta_multiplier(gamma, z)?;
    let unit = (j.norm() / j).powu(2 * k + 1);
    let g = Sl2 { a: gamma[0], b: gamma[1], c: gamma[2], d: gamma[3] };
    Ok(unit * f(g.act(z)))
}

/// Moves points of the upper half plane high up by elements of `Γ₀(N)`.
#[derive(Debug, Clone)]
pub struct GammaZeroReducer {
    level: i64,
    class_of: HashMap<(i64, i64), usize>,
    /// `residues[class][c mod N]`: admissible `d mod N` for a bottom row
    /// `(c, d)` in the class.
    residues: Vec<Vec<Vec<i64>>>,
}

impl GammaZeroReducer {
    pub fn new(level: u64) -> Self {
        let n = level as i64;
        let mut class_of = HashMap::new();
        let mut classes: Vec<(i64, i64)> = Vec::new();
        let units: Vec<i64> = (1..n.max(2)).filter(|u| gcd(*u, n) == 1).collect();
        for c in 0..n {
            for d in 0..n {
                if gcd(gcd(c, d), n) != 1 {
                    continue;
                }
                let canon = units
                    .iter()
                    .map(|u| ((u * c).rem_euclid(n), (u * d).rem_euclid(n)))
                    .min()
                    .unwrap_or((c, d));
                let id = match classes.iter().position(|x| *x == canon) {
                    Some(i) => i,
                    None => {
                        classes.push(canon);
                        classes.len() - 1
                    }
                };
                class_of.insert((c, d), id);
            }
        }
        let mut residues = vec![vec![Vec::new(); n as usize]; classes.len()];
        for (&(c, d), &id) in &class_of {
            residues[id][c as usize].push(d);
        }
        for class in &mut residues {
            for r in class.iter_mut() {
                r.sort_unstable();
            }
        }
        GammaZeroReducer { level: n, class_of, residues }
    }

    /// `g ∈ SL₂(ℤ)` with `g·w` in the standard fundamental domain (up to rounding).
    fn to_fundamental(w: Complex64) -> Sl2 {
        let mut g = Sl2::identity();
        let mut z = w;
        for _ in 0..10_000 {
            let t = z.re.round();
            if t != 0.0 {
                let tr = Sl2::new(1, -(t as i64), 0, 1);
                g = tr.mul(&g);
                z = Complex64::new(z.re - t, z.im);
            }
            if z.norm_sqr() < 1.0 - 1e-12 {
                g = Sl2::new(0, -1, 1, 0).mul(&g);
                z = -z.inv();
            } else {
                break;
            }
        }
        g
    }

    /// `γ ∈ Γ₀(N)` maximising `Im(γw)` over the coset `Γ₀(N)·g` reached from
    /// the standard fundamental domain.
    pub fn reduce(&self, w: Complex64) -> Sl2 {
        let n = self.level;
        let g = Self::to_fundamental(w);
        let wf = g.act(w);
        // Bottom rows (c, d) of h with h·g ∈ Γ₀(N): (c, d) ≡ λ(−c_g, a_g) mod N.
        let key = ((-g.c).rem_euclid(n), g.a.rem_euclid(n));
        let class = &self.residues[self.class_of[&key]];
        let mut best = (f64::INFINITY, 0i64, 1i64);
        let im2 = wf.im * wf.im;
        let mut c = 0i64;
        while (c * c) as f64 * im2 < best.0 {
            for &r in &class[(c % n) as usize] {
                // d ≡ r mod N closest to −c·Re(wf).
                let centre = -(c as f64) * wf.re;
                let base = r + n * ((centre - r as f64) / n as f64).round() as i64;
                for d in [base - n, base, base + n] {
                    if gcd(c, d) != 1 {
                        continue;
                    }
                    let v = (wf * c as f64 + d as f64).norm_sqr();
                    if v < best.0 {
                        best = (v, c, d);
                    }
                }
            }
            c += 1;
        }
        let h = complete_row(best.1, best.2);
        h.mul(&g)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    num_integer::Integer::gcd(&a, &b)
}

/// Some `(a b; c d) ∈ SL₂(ℤ)` with the given coprime bottom row.
fn complete_row(c: i64, d: i64) -> Sl2 {
    let e = num_integer::Integer::extended_gcd(&(d as i128), &(c as i128));
    // e.x·d + e.y·c = ±1
    let (mut a, mut b) = (e.x as i64, -(e.y as i64));
    if e.gcd < 0 {
        a = -a;
        b = -b;
    }
    Sl2::new(a, b, c, d)
}

/// Fourier coefficients `a_f(n; 𝔞)` for `n_min ≤ n ≤ n_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuspCoefficients {
    pub cusp: Cusp,
    /// The scaling matrix `σ` with `σ𝔞 = ∞`, lifted as `(σ, (cz+d)^{1/2})`.
    pub scaling: Sl2,
    pub delta: u64,
    pub n_min: i64,
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    /// Largest per-coefficient error bound.
    pub precision: f64,
    pub y0: f64,
    pub samples: usize,
}

impl CuspCoefficients {
    pub fn n_max(&self) -> i64 {
        self.n_min + self.values.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> Option<Complex64> {
        if n < self.n_min {
            return None;
        }
        self.values.get((n - self.n_min) as usize).copied()
    }

    pub fn error(&self, n: i64) -> Option<f64> {
        if n < self.n_min {
            return None;
        }
        self.errors.get((n - self.n_min) as usize).copied()
    }
}

/// Options for numerical extraction; `None` picks the defaults
/// `y0 = 2δ/n_max` and `samples = 6(n_max + 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractOptions {
    pub y0: Option<f64>,
    pub samples: Option<usize>,
    /// Routing must reach at least this height.
    pub y_min: Option<f64>,
}

/// Extract `a_f(n; 𝔞)` for the cusp `a/q` using `σ = (ā, (1−aā)/q; −q, a)` with
/// `ā = inv_mod(a, q)`.
pub fn coeffs_at_cusp_numeric(
    f: &HalfIntegralForm,
    cusp: &Cusp,
    n_range: (i64, i64),
    opts: ExtractOptions,
) -> Result<CuspCoefficients, FormError> {
    let abar = if cusp.q == 1 { 0 } else { inv_mod(cusp.a, cusp.q as i64)? };
    let sigma = Sl2::scaling(cusp.a, cusp.q as i64, abar)?;
    coeffs_with_scaling(f, cusp, sigma, n_range, opts)
}

/// Extraction with an explicitly chosen scaling matrix for the cusp.
pub fn coeffs_with_scaling(
    f: &HalfIntegralForm,
    cusp: &Cusp,
    sigma: Sl2,
    n_range: (i64, i64),
    opts: ExtractOptions,
) -> Result<CuspCoefficients, FormError> {
    let (n_min, n_max) = n_range;
    if n_max < 1 || n_min > n_max {
        return Err(FormError::Invalid(format!("bad coefficient range {n_min}..={n_max}")));
    }
    if sigma.c != -(cusp.q as i64) || sigma.d != cusp.a {
        return Err(FormError::Invalid("scaling matrix does not send the cusp to ∞".into()));
    }
    let delta = crate::arith::cusp_delta(&cusp.reduce())?;
    let span = n_max.max(n_min.abs());
    let y0 = opts.y0.unwrap_or(2.0 * delta as f64 / span as f64);
    let samples = opts.samples.unwrap_or(6 * (span as usize + 1));
    if samples <= 2 * span as usize {
        return Err(FormError::Invalid("too few samples for the coefficient range".into()));
    }
    let reducer = GammaZeroReducer::new(f.level);
    let sigma_inv = sigma.inverse();
    let wexp = 2 * f.k + 1;
    let y_min = opts.y_min.unwrap_or(0.0);
    let sample_precision = 1e-13;

    let values: Vec<Result<(Complex64, f64), FormError>> = (0..samples)
        .into_par_iter()
        .map(|j| {
            sample_slashed(f, &reducer, sigma_inv, delta as i64, j as i64, samples as i64, y0, wexp, y_min, sample_precision)
        })
        .collect();
    let mut data = Vec::with_capacity(samples);
    let mut max_abs: f64 = 0.0;
    let mut max_err: f64 = 0.0;
    for v in values {
        let (val, err) = v?;
        max_abs = max_abs.max(val.norm());
        max_err = max_err.max(err);
        data.push(val);
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(samples).process(&mut data);
    let inv_s = 1.0 / samples as f64;
    // Error in each DFT bin: evaluation error plus rounding of the samples.
    let bin_err = max_err + 4.0 * f64::EPSILON * max_abs * (samples as f64).log2().max(1.0);

    let mut out = Vec::with_capacity((n_max - n_min + 1) as usize);
    let mut errs = Vec::with_capacity(out.capacity());
    for n in n_min..=n_max {
        let idx = n.rem_euclid(samples as i64) as usize;
        let c = data[idx] * inv_s;
        if n == 0 {
            // The constant term is reported as the coefficient against y^{(2k+1)/4}.
            let scale = y0.powf(f.weight_exponent());
            out.push(c / scale);
            errs.push(bin_err / scale);
            continue;
        }
        let kap = f.kappa(n as f64 * y0 / delta as f64)?;
        if kap.abs() < 1e-280 {
            if f.arch == ArchType::Holomorphic && n < 0 {
                // κ vanishes identically; the bin only measures the residual.
                out.push(Complex64::new(0.0, 0.0));
                errs.push(c.norm() + bin_err);
                continue;
            }
            return Err(FormError::IllConditioned { n, kappa: kap });
        }
        // Aliasing from n ± S, bounded by the growth constant.
        let alias = alias_bound(f, n, samples as i64, y0 / delta as f64);
        out.push(c / kap);
        errs.push((bin_err + alias) / kap.abs());
    }
    let precision = errs.iter().copied().fold(0.0, f64::max);
    Ok(CuspCoefficients { cusp: *cusp, scaling: sigma, delta, n_min, values: out, errors: errs, precision, y0, samples })
}

fn alias_bound(f: &HalfIntegralForm, n: i64, s: i64, t: f64) -> f64 {
    // |a_f(m)| ≤ C (4π)^{−(2k+1)/4} with C the growth constant, padded for
    // coefficients beyond the known range.
    let e = f.weight_exponent();
    let g = 10.0 * f.growth.max(1.0) * (4.0 * PI).powf(-e);
    [n + s, n + 2 * s, n + 3 * s, n - s, n - 2 * s]
        .iter()
        .filter(|m| **m != 0)
        .map(|&m| {
            let x = m.unsigned_abs() as f64 * t;
            g * (4.0 * PI * x).powf(e + 1.0) * (-2.0 * PI * x).exp()
        })
        .sum()
}

/// `(f|σ̃⁻¹)(x_j + i y0)` with `x_j = jδ/S`, routed through `Γ₀(N)`.
#[allow(clippy::too_many_arguments)]
fn sample_slashed(
    f: &HalfIntegralForm,
    reducer: &GammaZeroReducer,
    sigma_inv: Sl2,
    delta: i64,
    j: i64,
    s: i64,
    y0: f64,
    wexp: u32,
    y_min: f64,
    precision: f64,
) -> Result<(Complex64, f64), FormError> {
    // z = x + i y0 with x = jδ/S kept as an exact fraction.
    let x_num = j as i128 * delta as i128;
    let x_den = s as i128;
    let z = Complex64::new(x_num as f64 / x_den as f64, y0);
    // j(g, z) = c z + d evaluated with exact real part.
    let auto = |c: i64, d: i64| -> Complex64 {
        let re_num = c as i128 * x_num + d as i128 * x_den;
        Complex64::new(re_num as f64 / x_den as f64, c as f64 * y0)
    };
    let w = sigma_inv.act(z);
    let gamma = reducer.reduce(w);
    let m = gamma.mul(&sigma_inv);
    let jm = auto(m.c, m.d);
    let js = auto(sigma_inv.c, sigma_inv.d);
    // γw = Mz computed as A/C − 1/(C(Cz + D)) with A/C reduced mod 1.
    let target = if m.c == 0 {
        let shift = (m.a as i128 * m.b as i128).rem_euclid(1) as f64;
        Complex64::new((x_num as f64 / x_den as f64) + m.a as f64 * m.b as f64 - shift, y0)
    } else {
        let frac = (m.a as i128).rem_euclid(m.c.unsigned_abs() as i128) as f64 / m.c.abs() as f64;
        let frac = if m.c < 0 { (1.0 - frac).fract() } else { frac };
        Complex64::new(frac, 0.0) - (jm * m.c as f64).inv()
    };
    let target = Complex64::new(target.re - target.re.floor(), y0 / jm.norm_sqr());
    if target.im < y_min {
        return Err(FormError::Routing { reached: target.im, needed: y_min });
    }
    let fw_high = f.evaluate(target, precision)?;
    // c_γ w + d_γ = j(M, z) / j(σ⁻¹, z).
    let jg = if gamma.c == 0 { Complex64::new(gamma.d as f64, 0.0) } else { jm / js };
    let eps = eps_d(gamma.d)?.conj().to_complex();
    let sym = kronecker_shimura(gamma.c, gamma.d)? as f64;
    let jtheta = eps * sym * principal_sqrt(jg);
    let chi = f.chi.value(gamma.d).map(RootOfUnity::conj).map(RootOfUnity::to_complex).unwrap_or_default();
    let unit_theta = (jtheta.norm() / jtheta).powu(wexp);
    // c_σ w + d_σ = 1 / j(σ⁻¹, z).
    let phi = principal_sqrt(js.inv());
    let unit_sigma = (phi / phi.norm()).powu(wexp);
    let value = unit_sigma * chi * unit_theta * fw_high.value;
    Ok((value, fw_high.tail + 1e-15 * fw_high.value.norm() * (1.0 + (m.c.abs() as f64).log2())))
}

/// `ε̄_a (b/ā) χ₄(a)^k χ(a)^{−1}` with `ā = inv_mod(a, b)`.
pub fn cusp_constant_infinity(a: i64, b: i64, k: u32, chi: &DirichletCharacter) -> Result<Complex64, FormError> {
    let n = chi.modulus() as i64;
    if b <= 0 || b % n != 0 {
        return Err(FormError::Invalid(format!("the level {n} must divide b = {b} > 0")));
    }
    let abar = inv_mod(a, b)?;
    let eps = eps_d(a)?.conj();
    let sym = RootOfUnity::from_sign(kronecker_shimura(b, abar)?);
    let c4 = RootOfUnity::from_sign(chi4(a)?).pow(k as i64);
    let chi_inv = chi
        .value(a)
        .ok_or_else(|| FormError::Invalid(format!("χ({a}) vanishes")))?
        .conj();
    Ok(eps.mul(sym).mul(c4).mul(chi_inv).to_complex())
}

/// Parsed `key = value` form manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct FormManifest {
    pub label: String,
    pub k: u32,
    pub level: u64,
    pub character: String,
    pub arch: ArchType,
    pub cache: PathBuf,
}

impl FormManifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self, FormError> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FormError::Manifest(format!("line {}: expected key = value", i + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| map.get(k).cloned().ok_or_else(|| FormError::Manifest(format!("missing key '{k}'")));
        let k: u32 = get("k")?.parse().map_err(|_| FormError::Manifest("k must be a nonnegative integer".into()))?;
        let level: u64 = get("N")?.parse().map_err(|_| FormError::Manifest("N must be a positive integer".into()))?;
        let arch = parse_arch(&get("arch")?)?;
        let cache = base.join(get("cache")?);
        Ok(FormManifest { label: get("label")?, k, level, character: get("character")?, arch, cache })
    }

    pub fn load(path: &Path) -> Result<Self, FormError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FormError::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn character(&self) -> Result<DirichletCharacter, FormError> {
        parse_character(&self.character, self.level)
    }

    pub fn build(&self) -> Result<HalfIntegralForm, FormError> {
        let series = load_cache(&self.cache)?;
        HalfIntegralForm::new(self.label.clone(), self.k, self.level, self.character()?, self.arch, series)
    }
}

/// `trivial` or `kronecker:D`.
pub fn parse_character(text: &str, level: u64) -> Result<DirichletCharacter, FormError> {
    let t = text.trim();
    if t == "trivial" {
        return Ok(DirichletCharacter::trivial(level));
    }
    if let Some(d) = t.strip_prefix("kronecker:") {
        let d: i64 = d.trim().parse().map_err(|_| FormError::Manifest(format!("bad discriminant '{d}'")))?;
        return Ok(DirichletCharacter::kronecker(d, level)?);
    }
    Err(FormError::Manifest(format!("unknown character '{t}'")))
}

/// `holomorphic` or `maass:<re>,<im>`.
pub fn parse_arch(text: &str) -> Result<ArchType, FormError> {
    let t = text.trim();
    if t == "holomorphic" {
        return Ok(ArchType::Holomorphic);
    }
    if let Some(rest) = t.strip_prefix("maass:") {
        let (re, im) = rest.split_once(',').unwrap_or((rest, "0"));
        let re: f64 = re.trim().parse().map_err(|_| FormError::Manifest(format!("bad spectral parameter '{rest}'")))?;
        let im: f64 = im.trim().parse().map_err(|_| FormError::Manifest(format!("bad spectral parameter '{rest}'")))?;
        return Ok(ArchType::Maass { s: Complex64::new(re, im) });
    }
    Err(FormError::Manifest(format!("unknown archimedean type '{t}'")))
}

/// `a_f(n)` for an exact source as `f64`, zero where unknown.
pub fn exact_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        0.0
    } else {
        x.to_f64().unwrap_or(f64::NAN)
    }
}
