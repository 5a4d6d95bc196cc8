use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};

use metavoronoi::arith::Cusp;
use metavoronoi::bessel::{kernel_eval, KernelSpec};
use metavoronoi::forms::{coeffs_at_cusp_numeric, parse_arch, ArchType, ExtractOptions, FormManifest, HalfIntegralForm};
use metavoronoi::qseries::{eta_quotient, save_cache};
use metavoronoi::suites::{run_suite, Suite};
use metavoronoi::voronoi::{verify, TestFunction, VoronoiJob, VoronoiReport};

/// Exit statuses.
const EXIT_OK: u8 = 0;
const EXIT_INFRA: u8 = 2;
const EXIT_VIOLATED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "metavoronoi", version, about = "Half-integral weight forms and Voronoi summation checks")]
struct Cli {
    /// key = value file whose entries act as flags of the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Emit JSON lines.
    #[arg(long)]
    json: bool,
    /// Emit CSV.
    #[arg(long, conflicts_with = "json")]
    csv: bool,
    /// Write machine output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List Fourier coefficients of a form at a cusp.
    Coeffs {
        #[arg(long)]
        form: PathBuf,
        #[arg(long, default_value_t = 30)]
        n_max: i64,
        /// Cusp `a/q` or `infinity`.
        #[arg(long, default_value = "infinity")]
        cusp: String,
        #[command(flatten)]
        output: Output,
    },
    /// Run a seeded property suite.
    Check {
        /// cocycle, hilbert, splitting, theta-multiplier or bessel.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate both sides of the summation formula.
    Verify {
        #[command(flatten)]
        job: JobArgs,
        /// One job per line as `key=value` tokens; flags supply defaults.
        #[arg(long)]
        batch: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate a Bessel kernel.
    Kernel {
        /// Take the archimedean type and weight from a manifest.
        #[arg(long)]
        form: Option<PathBuf>,
        /// `holomorphic` or `maass:<re>,<im>`.
        #[arg(long, default_value = "holomorphic")]
        arch: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// `+` or `-`.
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
        #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Build a coefficient cache for an eta quotient.
    Cache {
        /// Factor `m:r` meaning η(mz)^r; repeatable.
        #[arg(long = "eta", required = true)]
        eta: Vec<String>,
        /// Exponent bound of the integral expansion.
        #[arg(long)]
        order: i64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct JobArgs {
    #[arg(long)]
    form: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<i64>,
    #[arg(long)]
    b: Option<i64>,
    #[arg(long)]
    bump_center: Option<f64>,
    #[arg(long)]
    bump_radius: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Cap on the dual sum index.
    #[arg(long)]
    n_max: Option<i64>,
    /// `n:delta` added to the source coefficient at n.
    #[arg(long, allow_hyphen_values = true)]
    perturb: Option<String>,
}

impl JobArgs {
    fn overlay(&self, tokens: &HashMap<String, String>) -> Result<JobArgs> {
        let mut j = self.clone();
        for (k, v) in tokens {
            match k.as_str() {
                "form" => j.form = Some(PathBuf::from(v)),
                "a" => j.a = Some(v.parse().with_context(|| format!("a = {v}"))?),
                "b" => j.b = Some(v.parse().with_context(|| format!("b = {v}"))?),
                "bump-center" => j.bump_center = Some(v.parse().with_context(|| format!("bump-center = {v}"))?),
                "bump-radius" => j.bump_radius = Some(v.parse().with_context(|| format!("bump-radius = {v}"))?),
                "tol" => j.tol = Some(v.parse().with_context(|| format!("tol = {v}"))?),
                "n-max" => j.n_max = Some(v.parse().with_context(|| format!("n-max = {v}"))?),
                "perturb" => j.perturb = Some(v.clone()),
                other => bail!("unknown batch key '{other}'"),
            }
        }
        Ok(j)
    }

    fn build(&self) -> Result<VoronoiJob> {
        let path = self.form.as_ref().ok_or_else(|| anyhow!("--form is required"))?;
        let mut form = load_form(path)?;
        if let Some(p) = &self.perturb {
            let (n, d) = p.split_once(':').ok_or_else(|| anyhow!("--perturb expects n:delta"))?;
            let n: i64 = n.trim().parse().context("perturbation index")?;
            let d: BigRational = d.trim().parse().map_err(|_| anyhow!("bad perturbation '{d}'"))?;
            form = form.perturbed(n, &d)?;
        }
        let a = self.a.ok_or_else(|| anyhow!("--a is required"))?;
        let b = self.b.ok_or_else(|| anyhow!("--b is required"))?;
        let test = TestFunction::bump(self.bump_center.unwrap_or(100.0), self.bump_radius.unwrap_or(50.0))?;
        let mut job = VoronoiJob::new(form, a, b, test, self.tol.unwrap_or(1e-6));
        job.rhs_n_max = self.n_max;
        Ok(job)
    }
}

fn load_form(path: &Path) -> Result<HalfIntegralForm> {
    let m = FormManifest::load(path)?;
    Ok(m.build().with_context(|| format!("building form from {}", path.display()))?)
}

/// Parse `key = value` lines, skipping blanks and `#` comments.
fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Rewrites argv so that config entries become flags of the subcommand;
/// flags given on the command line win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| anyhow!("--config needs a path"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let entries = parse_config(&text)?;
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1);
    let Some(sub) = sub else { bail!("--config needs a subcommand") };
    let mut injected = Vec::new();
    for (k, v) in entries {
        let flag = format!("--{k}");
        if rest.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match v.as_str() {
            "true" => injected.push(flag),
            "false" => {}
            _ => injected.push(format!("{flag}={v}")),
        }
    }
    rest.splice(sub + 1..sub + 1, injected);
    Ok(rest)
}

struct Sink {
    file: Option<PathBuf>,
    buf: String,
}

impl Sink {
    fn new(output: &Output) -> Self {
        Sink { file: output.out.clone(), buf: String::new() }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.buf.push_str(s.as_ref());
        self.buf.push('\n');
    }

    fn finish(self) -> Result<()> {
        match self.file {
            Some(p) => fs::write(&p, self.buf).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(self.buf.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn cmd_coeffs(form: &Path, n_max: i64, cusp: &str, output: &Output) -> Result<u8> {
    let f = load_form(form)?;
    let chi = f.chi.conductor();
    let c = Cusp::parse(cusp, f.level, chi)?;
    let mut sink = Sink::new(output);
    if c.is_infinity() {
        if n_max >= f.order() {
            bail!("the cache only reaches n < {}", f.order());
        }
        if output.csv {
            sink.line("n,exact,normalized");
        } else if !output.json {
            sink.line(format!("# {} at infinity (exact source coefficients; normalized against the Whittaker profile)", f.label));
        }
        for (n, _) in f.nonzero_terms().iter().copied().take_while(|t| t.0 <= n_max) {
            let exact = f.coeff_exact(n).to_string();
            let norm = f.coeff(n);
            if output.json {
                sink.line(json!({"n": n, "exact": exact, "normalized": norm}).to_string());
            } else if output.csv {
                sink.line(format!("{n},{exact},{norm:e}"));
            } else {
                sink.line(format!("{n:>8}  {exact:>12}  {norm:>24.16e}"));
            }
        }
        sink.finish()?;
        return Ok(EXIT_OK);
    }
    let coeffs = match coeffs_at_cusp_numeric(&f, &c, (1, n_max), ExtractOptions::default()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("extraction failed: {e}");
            return Ok(EXIT_INFRA);
        }
    };
    if output.csv {
        sink.line("n,re,im,error");
    } else if !output.json {
        sink.line(format!("# {} at {}/{} (delta = {}, normalized, value and error bound)", f.label, c.a, c.q, coeffs.delta));
    }
    for n in 1..=n_max {
        let v = coeffs.get(n).unwrap_or_default();
        let e = coeffs.error(n).unwrap_or(f64::INFINITY);
        if output.json {
            sink.line(json!({"n": n, "value": complex_json(v), "error": e}).to_string());
        } else if output.csv {
            sink.line(format!("{n},{:e},{:e},{e:e}", v.re, v.im));
        } else {
            sink.line(format!("{n:>8}  {:>24.16e} {:>+24.16e}i  ± {e:.1e}", v.re, v.im));
        }
    }
    sink.finish()?;
    Ok(EXIT_OK)
}

fn cmd_check(suite: &str, seed: u64, count: Option<usize>, output: &Output) -> Result<u8> {
    let suite: Suite = suite.parse().map_err(|e: String| anyhow!(e))?;
    let outcome = run_suite(suite, seed, count.unwrap_or(suite.default_count()));
    let mut sink = Sink::new(output);
    if output.json {
        sink.line(serde_json::to_string(&outcome)?);
    } else {
        for f in &outcome.failures {
            sink.line(format!("FAIL {f}"));
        }
        sink.line(format!(
            "{}: {} checks, {} failures (seed {}) {}",
            outcome.suite,
            outcome.checked,
            outcome.failures.len(),
            outcome.seed,
            if outcome.passed() { "pass" } else { "FAIL" }
        ));
    }
    sink.finish()?;
    Ok(if outcome.passed() { EXIT_OK } else { EXIT_VIOLATED })
}

fn report_line(r: &VoronoiReport) -> String {
    format!(
        "lhs = {:+.12e} {:+.12e}i  rhs = {:+.12e} {:+.12e}i  rel_err = {:.3e}  terms {}/{}  tail {:.1e}  {}",
        r.lhs.re,
        r.lhs.im,
        r.rhs.re,
        r.rhs.im,
        r.rel_err,
        r.lhs_terms,
        r.rhs_terms,
        r.rhs_tail_estimate,
        if r.rel_err <= r.job.tol { "holds" } else { "VIOLATED" }
    )
}

fn cmd_verify(job: &JobArgs, batch: Option<&Path>, output: &Output) -> Result<u8> {
    let jobs: Vec<JobArgs> = match batch {
        None => vec![job.clone()],
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading batch {}", p.display()))?;
            let mut v = Vec::new();
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let mut tokens = HashMap::new();
                for t in line.split_whitespace() {
                    let (k, val) = t.split_once('=').ok_or_else(|| anyhow!("batch token '{t}' is not key=value"))?;
                    tokens.insert(k.to_string(), val.to_string());
                }
                v.push(job.overlay(&tokens)?);
            }
            v
        }
    };
    let results: Vec<Result<VoronoiReport>> =
        jobs.par_iter().map(|j| j.build().and_then(|vj| Ok(verify(&vj)?))).collect();
    let mut sink = Sink::new(output);
    let mut status = EXIT_OK;
    if output.csv {
        sink.line("job,lhs_re,lhs_im,rhs_re,rhs_im,abs_err,rel_err,lhs_terms,rhs_terms,rhs_tail_estimate");
    }
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => {
                if rep.rel_err > rep.job.tol && status == EXIT_OK {
                    status = EXIT_VIOLATED;
                }
                if output.json {
                    sink.line(serde_json::to_string(&rep)?);
                } else if output.csv {
                    sink.line(format!(
                        "{i},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e}",
                        rep.lhs.re, rep.lhs.im, rep.rhs.re, rep.rhs.im, rep.abs_err, rep.rel_err, rep.lhs_terms, rep.rhs_terms, rep.rhs_tail_estimate
                    ));
                } else {
                    sink.line(format!("[{i}] a={} b={}  {}", rep.job.a, rep.job.b, report_line(&rep)));
                }
            }
            Err(e) => {
                status = EXIT_INFRA;
                if output.json {
                    sink.line(json!({"job": i, "error": format!("{e:#}")}).to_string());
                } else {
                    eprintln!("[{i}] error: {e:#}");
                }
            }
        }
    }
    sink.finish()?;
    Ok(status)
}

#[allow(clippy::too_many_arguments)]
fn cmd_kernel(
    form: Option<&Path>,
    arch: &str,
    k: u32,
    sign: &str,
    x_min: f64,
    x_max: f64,
    points: usize,
    output: &Output,
) -> Result<u8> {
    let (arch, k) = match form {
        Some(p) => {
            let m = FormManifest::load(p)?;
            (m.arch, m.k)
        }
        None => (parse_arch(arch)?, k),
    };
    let sign: i8 = match sign {
        "+" | "+1" | "1" => 1,
        "-" | "-1" => -1,
        other => bail!("sign must be + or -, got '{other}'"),
    };
    if points < 1 || !(x_max >= x_min) {
        bail!("need points ≥ 1 and x-max ≥ x-min");
    }
    let spec = match arch {
        ArchType::Holomorphic => KernelSpec::holomorphic(k, sign),
        ArchType::Maass { s } => KernelSpec::maass(s, k, sign),
    };
    let xs: Vec<f64> = (0..points)
        .map(|i| if points == 1 { x_min } else { x_min + (x_max - x_min) * i as f64 / (points - 1) as f64 })
        .collect();
    let values: Vec<Result<Complex64, _>> = xs.par_iter().map(|&x| kernel_eval(&spec, x)).collect();
    let mut sink = Sink::new(output);
    let name = spec.describe();
    if output.json {
        for (x, v) in xs.iter().zip(values) {
            let v = v?;
            sink.line(json!({"kernel": name, "x": x, "value": complex_json(v)}).to_string());
        }
    } else {
        sink.line(format!("x,re J[{name}],im J[{name}]"));
        for (x, v) in xs.iter().zip(values) {
            let v = v?;
            sink.line(format!("{x:e},{:e},{:e}", v.re, v.im));
        }
    }
    sink.finish()?;
    Ok(EXIT_OK)
}

fn cmd_cache(eta: &[String], order: i64, out: &Path) -> Result<u8> {
    let mut spec = Vec::new();
    for e in eta {
        let (m, r) = e.split_once(':').ok_or_else(|| anyhow!("--eta expects m:r, got '{e}'"))?;
        spec.push((m.trim().parse::<u64>()?, r.trim().parse::<i64>()?));
    }
    let s = eta_quotient(&spec, 24 * order)?.to_integral()?;
    save_cache(&s, out)?;
    eprintln!("wrote {} nonzero coefficients below {} to {}", s.nnz(), s.order(), out.display());
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Coeffs { form, n_max, cusp, output } => cmd_coeffs(form, *n_max, cusp, output),
        Command::Check { suite, seed, count, output } => cmd_check(suite, *seed, *count, output),
        Command::Verify { job, batch, output } => cmd_verify(job, batch.as_deref(), output),
        Command::Kernel { form, arch, k, sign, x_min, x_max, points, output } => {
            cmd_kernel(form.as_deref(), arch, *k, sign, *x_min, *x_max, *points, output)
        }
        Command::Cache { eta, order, out } => cmd_cache(eta, *order, out),
    }
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INFRA);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INFRA } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INFRA)
        }
    }
}
