//! Both sides of the Voronoi summation formula for a half-integral weight
//! form twisted by `e(an/b)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{cusp_delta, inv_mod, ArithError, Cusp};
use crate::bessel::hankel_transform;
use crate::forms::{
    coeffs_with_scaling, cusp_constant_infinity, ArchType, ExtractOptions, FormError, HalfIntegralForm, Sl2,
};
use crate::quad::QuadError;

#[derive(Debug, Error)]
pub enum VoronoiError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("invalid job: {0}")]
    Invalid(String),
    #[error("coefficients known only below {order}, but the test function reaches {needed}")]
    ShortSource { order: i64, needed: i64 },
}

/// Smooth test function with compact support in `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(−1/(1 − ((y − c)/r)²))` on `(c − r, c + r)`.
    Bump { center: f64, radius: f64 },
    /// Values on a uniform grid over `[lo, hi]`, interpolated by cubic
    /// Catmull–Rom pieces. The endpoints should be zero.
    Sampled { lo: f64, hi: f64, values: Vec<f64> },
}

impl TestFunction {
    pub fn bump(center: f64, radius: f64) -> Result<Self, VoronoiError> {
        if !(radius > 0.0 && center - radius > 0.0 && center.is_finite() && radius.is_finite()) {
            return Err(VoronoiError::Invalid(format!(
                "bump [{}, {}] must lie inside (0, ∞)",
                center - radius,
                center + radius
            )));
        }
        Ok(TestFunction::Bump { center, radius })
    }

    pub fn sampled(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self, VoronoiError> {
        if !(lo > 0.0 && hi > lo && values.len() >= 2) {
            return Err(VoronoiError::Invalid("sampled support must be a positive interval with two or more samples".into()));
        }
        Ok(TestFunction::Sampled { lo, hi, values })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            TestFunction::Bump { center, radius } => (center - radius, center + radius),
            TestFunction::Sampled { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            TestFunction::Bump { center, radius } => {
                let t = (y - center) / radius;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t * t)).exp()
                }
            }
            TestFunction::Sampled { lo, hi, values } => {
                if y <= *lo || y >= *hi {
                    return 0.0;
                }
                let m = values.len() - 1;
                let pos = (y - lo) / (hi - lo) * m as f64;
                let i = (pos.floor() as usize).min(m - 1);
                let t = pos - i as f64;
                let at = |j: isize| -> f64 { values[j.clamp(0, m as isize) as usize] };
                let (p0, p1, p2, p3) = (at(i as isize - 1), at(i as isize), at(i as isize + 1), at(i as isize + 2));
                0.5 * (2.0 * p1
                    + (p2 - p0) * t
                    + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
                    + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
            }
        }
    }

    /// `∫ F`, used for crude bounds.
    pub fn mass(&self) -> f64 {
        let (lo, hi) = self.support();
        let m = 2000;
        let h = (hi - lo) / m as f64;
        (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * self.eval(lo + i as f64 * h).abs()
            })
            .sum::<f64>()
            * h
            / 3.0
    }
}

/// Which right-hand side to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhsPath {
    /// Infinity when `N | b`, general otherwise.
    #[default]
    Auto,
    Infinity,
    General,
}

#[derive(Debug, Clone)]
pub struct VoronoiJob {
    pub form: HalfIntegralForm,
    pub a: i64,
    pub b: i64,
    pub test: TestFunction,
    pub tol: f64,
    pub lhs_n_max: Option<i64>,
    pub rhs_n_max: Option<i64>,
    pub path: RhsPath,
}

impl VoronoiJob {
    pub fn new(form: HalfIntegralForm, a: i64, b: i64, test: TestFunction, tol: f64) -> Self {
        VoronoiJob { form, a, b, test, tol, lhs_n_max: None, rhs_n_max: None, path: RhsPath::Auto }
    }

    fn validate(&self) -> Result<(), VoronoiError> {
        if self.b <= 0 {
            return Err(VoronoiError::Invalid(format!("b = {} must be positive", self.b)));
        }
        let bn = self.b as i128 * self.form.level as i128;
        if (self.a as i128).gcd(&bn) != 1 {
            return Err(VoronoiError::Invalid(format!("gcd(a, bN) = gcd({}, {bn}) ≠ 1", self.a)));
        }
        if !(self.tol > 0.0) {
            return Err(VoronoiError::Invalid("tol must be positive".into()));
        }
        Ok(())
    }

    /// Absolute target `tol · max(|lhs|, 1)`.
    fn absolute_target(&self, lhs: Complex64) -> f64 {
        self.tol * lhs.norm().max(1.0)
    }
}

/// Error contributions carried alongside the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub quadrature: f64,
    pub extraction: f64,
    pub truncation: f64,
    /// Whether the stopping rule fired before the cap.
    pub converged: bool,
}

/// What was run, echoed into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobEcho {
    pub form: String,
    pub k: u32,
    pub level: u64,
    pub a: i64,
    pub b: i64,
    pub a_twisted: i64,
    pub abar: i64,
    pub delta: u64,
    pub path: RhsPath,
    pub test: TestFunction,
    pub tol: f64,
    pub rhs_n_max: Option<i64>,
    pub last_rhs_n: i64,
    pub budget: ErrorBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub lhs_terms: usize,
    pub rhs_terms: usize,
    pub rhs_tail_estimate: f64,
    pub cusp_constant_used: Option<Complex64>,
    pub job: JobEcho,
}

/// `a′ ≡ a mod b` with `gcd(a′, bδ(a/b)) = 1`: `a` itself when already
/// coprime, otherwise `a + b·N/gcd(N, (ab)^∞)`.
pub fn normalize_twist(a: i64, b: i64, level: u64) -> Result<i64, VoronoiError> {
    let n = level as i64;
    if b <= 0 || (a as i128).gcd(&(b as i128 * n as i128)) != 1 {
        return Err(VoronoiError::Invalid(format!("gcd({a}, {b}·{n}) ≠ 1")));
    }
    let delta = delta_for(a, b, level, 1)? as i64;
    if (a as i128).gcd(&(b as i128 * delta as i128)) == 1 {
        return Ok(a);
    }
    // Part of N supported on primes dividing ab.
    let mut g = 1i64;
    let mut rest = n;
    for p in crate::arith::prime_divisors(n as i128) {
        let p = p as i64;
        let mut pk = 1;
        while rest % p == 0 {
            rest /= p;
            pk *= p;
        }
        if a % p == 0 || b % p == 0 {
            g *= pk;
        }
    }
    Ok(a + b * (n / g))
}

fn delta_for(a: i64, b: i64, level: u64, conductor: u64) -> Result<u64, VoronoiError> {
    let g = (a.unsigned_abs()).gcd(&(b as u64));
    let cusp = Cusp::new(a / g as i64, b as u64 / g, level, conductor)?;
    Ok(cusp_delta(&cusp.reduce())?)
}

/// `Σ e(an/b) a_f(n) F(n)` over integers in the support.
pub fn lhs_sum(job: &VoronoiJob) -> Result<(Complex64, usize), VoronoiError> {
    let (lo, hi) = job.test.support();
    let first = lo.floor() as i64 + 1;
    let last = (hi.ceil() as i64 - 1).min(job.lhs_n_max.unwrap_or(i64::MAX));
    if last >= job.form.order() {
        return Err(VoronoiError::ShortSource { order: job.form.order(), needed: last });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut terms = 0;
    for n in first..=last {
        let c = job.form.coeff(n);
        let fv = job.test.eval(n as f64);
        if c == 0.0 || fv == 0.0 {
            continue;
        }
        acc += twist(job.a as i128 * n as i128, job.b as i128) * c * fv;
        terms += 1;
    }
    Ok((acc, terms))
}

/// `e(num/den)` with the fraction reduced exactly first.
fn twist(num: i128, den: i128) -> Complex64 {
    let r = num.rem_euclid(den);
    Complex64::from_polar(1.0, 2.0 * PI * (r as f64 / den as f64))
}

/// Unit by which the dual transform differs from `α ∫ 𝒥(αy) F(y) dy`
/// with the tabulated kernel: `i(−1)^k` for holomorphic forms. For Maass
/// forms no phase is applied.
pub fn dual_phase(form: &HalfIntegralForm) -> Complex64 {
    match form.arch {
        ArchType::Holomorphic => {
            if form.k % 2 == 0 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, -1.0)
            }
        }
        ArchType::Maass { .. } => Complex64::new(1.0, 0.0),
    }
}

/// The dual transform of `F` at `α` with its quadrature error.
pub fn dual_transform(
    form: &HalfIntegralForm,
    test: &TestFunction,
    sign: i8,
    alpha: f64,
    tol: f64,
) -> Result<(Complex64, f64), VoronoiError> {
    let spec = form.kernel_spec(sign);
    let r = hankel_transform(|y| test.eval(y), test.support(), &spec, alpha, tol / alpha.abs())?;
    Ok((dual_phase(form) * alpha.abs() * r.value, alpha.abs() * r.error))
}

/// Measured decay of `α ↦ |α ∫ 𝒥(αy) F(y) dy|` on a geometric grid.
#[derive(Debug, Clone)]
pub struct TransformEnvelope {
    points: Vec<(f64, f64)>,
    /// First grid point after which the bounded contribution stays below
    /// the threshold.
    pub cutoff: f64,
}

impl TransformEnvelope {
    /// Scans from `α = 1/hi` in steps of 1.25 until two consecutive grid
    /// points satisfy `bound · |transform| < threshold`.
    pub fn scan(form: &HalfIntegralForm, test: &TestFunction, bound: f64, threshold: f64) -> Result<Self, VoronoiError> {
        let (_, hi) = test.support();
        let mut alpha = 1.0 / hi;
        let mut points = Vec::new();
        let mut quiet = 0;
        while quiet < 2 {
            let jitter = [alpha, alpha * 1.03, alpha * 1.07, alpha * 1.13];
            let mut m: f64 = 0.0;
            for a in jitter {
                let (v, _) = dual_transform(form, test, 1, a, 1e-3 * threshold / bound.max(1e-300))?;
                m = m.max(v.norm());
            }
            points.push((alpha, m));
            quiet = if m * bound < threshold { quiet + 1 } else { 0 };
            if alpha > 1e12 {
                break;
            }
            alpha *= 1.25;
        }
        let cutoff = points[points.len().saturating_sub(2)].0;
        Ok(TransformEnvelope { points, cutoff })
    }

    /// Upper estimate of the transform at `α`: the largest sampled value at
    /// or beyond the previous grid point.
    pub fn at(&self, alpha: f64) -> f64 {
        self.points
            .iter()
            .filter(|(a, _)| *a * 1.25 >= alpha)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }
}

/// A right-hand side with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsResult {
    pub value: Complex64,
    pub terms: usize,
    pub tail: f64,
    pub last_n: i64,
    pub constant: Option<Complex64>,
    pub a_twisted: i64,
    pub abar: i64,
    pub delta: u64,
    pub budget: ErrorBudget,
}

/// One candidate term of the dual sum: index, coefficient times twist, and
/// the coefficient's error bound.
struct Candidate {
    n: i64,
    weight: Complex64,
    coeff_err: f64,
    alpha: f64,
}

struct DualSum {
    value: Complex64,
    terms: usize,
    tail: f64,
    quad_err: f64,
    extraction_err: f64,
    last_n: i64,
    converged: bool,
}

/// Sums `Σ weight · dual_transform(α_n)` with the stopping rule: three
/// consecutive terms below `target/100`, a ratio-extrapolated tail below
/// `target/10`, and the kernel oscillating across the support.
fn dual_sum(
    form: &HalfIntegralForm,
    test: &TestFunction,
    candidates: &[Candidate],
    target: f64,
) -> Result<DualSum, VoronoiError> {
    const CHUNK: usize = 32;
    let (lo, hi) = test.support();
    let mut out = DualSum {
        value: Complex64::new(0.0, 0.0),
        terms: 0,
        tail: f64::INFINITY,
        quad_err: 0.0,
        extraction_err: 0.0,
        last_n: 0,
        converged: false,
    };
    let mut recent: Vec<f64> = Vec::new();
    for chunk in candidates.chunks(CHUNK) {
        let evaluated: Vec<Result<(Complex64, f64), VoronoiError>> = chunk
            .par_iter()
            .map(|c| {
                let sign = if c.n > 0 { 1 } else { -1 };
                let quad_tol = 1e-4 * target / c.weight.norm().max(1e-300);
                dual_transform(form, test, sign, c.alpha, quad_tol.min(1.0))
            })
            .collect();
        for (c, r) in chunk.iter().zip(evaluated) {
            let (h, herr) = r?;
            let term = c.weight * h;
            out.value += term;
            out.terms += 1;
            out.quad_err += c.weight.norm() * herr;
            out.extraction_err += c.coeff_err * h.norm();
            out.last_n = c.n;
            recent.push(term.norm());
            if recent.len() > 3 {
                recent.remove(0);
            }
            if recent.len() == 3 {
                let (t1, t2, t3) = (recent[0], recent[1], recent[2]);
                let ratio = if t2 > 0.0 { t3 / t2 } else { 0.0 };
                let tail = if ratio < 1.0 { t3 * ratio / (1.0 - ratio) } else { f64::INFINITY };
                out.tail = tail.max(if t3 == 0.0 { 0.0 } else { f64::MIN_POSITIVE });
                let small = t1.max(t2).max(t3) < target / 100.0;
                let cycles = 2.0 * ((c.alpha.abs() * hi).sqrt() - (c.alpha.abs() * lo).sqrt());
                if small && tail < target / 10.0 && cycles >= 4.0 {
                    out.converged = true;
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// Right-hand side for `N | b`, where `a/b` is equivalent to `∞`, with
/// `ā = inv_mod(a, b)`; the value includes the constant.
pub fn rhs_sum_infinity(job: &VoronoiJob) -> Result<RhsResult, VoronoiError> {
    let n = job.form.level as i64;
    if job.b % n != 0 {
        return Err(VoronoiError::Invalid(format!("the infinity path needs N = {n} to divide b = {}", job.b)));
    }
    let (lhs, _) = lhs_sum(job)?;
    let target = job.absolute_target(lhs);
    let abar = inv_mod(job.a, job.b)?;
    let constant = cusp_constant_infinity(job.a, job.b, job.form.k, &job.form.chi)?;
    let cap = job.rhs_n_max.unwrap_or(i64::MAX);
    let b2 = (job.b as f64).powi(2);
    let candidates: Vec<Candidate> = job
        .form
        .normalised_terms()
        .into_iter()
        .filter(|(m, _)| *m != 0 && m.abs() <= cap)
        .filter(|(m, _)| !job.form.kernel_spec(m.signum() as i8).is_null())
        .map(|(m, c)| Candidate {
            n: m,
            weight: constant * twist(-(m as i128) * abar as i128, job.b as i128) * c,
            coeff_err: 0.0,
            alpha: m as f64 / b2,
        })
        .collect();
    let s = dual_sum(&job.form, &job.test, &candidates, target)?;
    let budget = ErrorBudget { quadrature: s.quad_err, extraction: 0.0, truncation: s.tail, converged: s.converged };
    Ok(RhsResult {
        value: s.value,
        terms: s.terms,
        tail: s.tail,
        last_n: s.last_n,
        constant: Some(constant),
        a_twisted: job.a,
        abar,
        delta: 1,
        budget,
    })
}

/// Right-hand side at the cusp `a′/b` with coefficients extracted
/// numerically. The extraction range doubles until the stopping rule fires
/// or `rhs_n_max` is reached.
pub fn rhs_sum_general(job: &VoronoiJob) -> Result<RhsResult, VoronoiError> {
    let (lhs, _) = lhs_sum(job)?;
    let target = job.absolute_target(lhs);
    let a1 = normalize_twist(job.a, job.b, job.form.level)?;
    let conductor = job.form.chi.conductor();
    let cusp = Cusp::new(a1, job.b as u64, job.form.level, conductor)?;
    let delta = cusp_delta(&cusp.reduce())?;
    let bd = job.b as i64 * delta as i64;
    let abar = inv_mod(a1, bd)?;
    let sigma = Sl2::scaling(a1, job.b, abar).map_err(VoronoiError::from)?;
    if job.form.nonzero_terms().is_empty() {
        // zero at every cusp
        return Ok(RhsResult {
            value: Complex64::new(0.0, 0.0),
            terms: 0,
            tail: 0.0,
            last_n: 0,
            constant: None,
            a_twisted: a1,
            abar,
            delta,
            budget: ErrorBudget { converged: true, ..ErrorBudget::default() },
        });
    }
    let scale = delta as f64 * (job.b as f64).powi(2);
    let cap = job.rhs_n_max.unwrap_or(1 << 22);
    let holomorphic = job.form.arch == ArchType::Holomorphic;
    let bound = job.form.coefficient_bound();
    let envelope = TransformEnvelope::scan(&job.form, &job.test, bound, target / 1000.0)?;
    let mut n_max = ((envelope.cutoff * scale).ceil() as i64).max(64).min(cap);
    loop {
        let n_min = if holomorphic { 1 } else { -n_max };
        let coeffs = coeffs_with_scaling(&job.form, &cusp, sigma, (n_min, n_max), ExtractOptions::default())?;
        let order: Vec<i64> = if holomorphic { (1..=n_max).collect() } else { (1..=n_max).flat_map(|m| [m, -m]).collect() };
        let mut candidates = Vec::new();
        let mut dropped = 0.0;
        for m in order {
            let c = coeffs.get(m).unwrap_or_default();
            let err = coeffs.error(m).unwrap_or(0.0);
            let alpha = m as f64 / scale;
            if c.norm() <= 3.0 * err || c.norm() < 1e-14 {
                dropped += (c.norm() + err) * envelope.at(alpha.abs());
                continue;
            }
            let w = twist(-(m as i128) * abar as i128, bd as i128) * c;
            candidates.push(Candidate { n: m, weight: w, coeff_err: err, alpha });
        }
        let s = dual_sum(&job.form, &job.test, &candidates, target)?;
        if s.converged || n_max >= cap {
            let budget = ErrorBudget {
                quadrature: s.quad_err,
                extraction: s.extraction_err + dropped,
                truncation: s.tail,
                converged: s.converged,
            };
            return Ok(RhsResult {
                value: s.value,
                terms: s.terms,
                tail: s.tail,
                last_n: s.last_n,
                constant: None,
                a_twisted: a1,
                abar,
                delta,
                budget,
            });
        }
        n_max = (n_max * 2).min(cap);
    }
}

/// Evaluate both sides and report; disagreement is data, not an error.
pub fn verify(job: &VoronoiJob) -> Result<VoronoiReport, VoronoiError> {
    job.validate()?;
    let (lhs, lhs_terms) = lhs_sum(job)?;
    let level = job.form.level as i64;
    let path = match job.path {
        RhsPath::Auto if job.b % level == 0 => RhsPath::Infinity,
        RhsPath::Auto => RhsPath::General,
        p => p,
    };
    let r = match path {
        RhsPath::Infinity => rhs_sum_infinity(job)?,
        _ => rhs_sum_general(job)?,
    };
    let abs_err = (lhs - r.value).norm();
    let rel_err = abs_err / lhs.norm().max(1.0);
    let form = &job.form;
    Ok(VoronoiReport {
        lhs,
        rhs: r.value,
        abs_err,
        rel_err,
        lhs_terms,
        rhs_terms: r.terms,
        rhs_tail_estimate: r.tail,
        cusp_constant_used: r.constant,
        job: JobEcho {
            form: form.label.clone(),
            k: form.k,
            level: form.level,
            a: job.a,
            b: job.b,
            a_twisted: r.a_twisted,
            abar: r.abar,
            delta: r.delta,
            path,
            test: job.test.clone(),
            tol: job.tol,
            rhs_n_max: job.rhs_n_max,
            last_rhs_n: r.last_n,
            budget: r.budget,
        },
    })
}
