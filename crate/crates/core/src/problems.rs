//! Reproducible benchmark instances and long-run reference solutions.
//!
//! All random draws use `ChaCha8Rng::seed_from_u64(seed)` with standard-normal and
//! uniform sampling from `rand_distr`. The fused-lasso stream order is: `A` row-major,
//! then the 20 block values of the ground truth, then the noise vector.
//!
//! # Reference cache format
//!
//! A cached reference is a UTF-8 text file named `<hash>.ref`:
//!
//! ```text
//! pd3o-reference 1
//! hash <hex sha-256 of the instance data and iteration count>
//! iters <usize>
//! gamma <f64>
//! delta <f64>
//! objective <f64>
//! x <dim>
//! <one f64 per line>
//! s <dim>
//! <one f64 per line>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a reload is bit-exact. Files
//! are written to a temporary name and renamed into place.

use std::fs;
use std::io::Write as _;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::algorithms::{solve, AlgorithmId, SolveOptions, SolverState, StepSizes};
use crate::error::{Error, Result};
use crate::linops::{norm_aat_upper_bound, symmetric_eigenvalues, DenseMatrix, DifferenceOp, IdentityOp};
use crate::metrics::{probe_z, Moduli};
use crate::problem::{evaluate_objective, LeastSquares, ProblemSpec, SquaredDistance};
use crate::prox::{Huber, L1Norm};
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Environment variable naming the directory for cached reference solutions.
pub const REFERENCE_CACHE_ENV: &str = "PD3O_REFERENCE_CACHE";

const NORM_TOL: f64 = 1e-6;
const NORM_MAX_ITERS: usize = 100_000;

fn check_size(name: &'static str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::InvalidParameter {
            name,
            value: v as f64,
            reason: "too small",
        });
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<f64> {
    (0..n * p).map(|_| StandardNormal.sample(rng)).collect()
}

/// `½‖Ax − b‖² + μ₁‖x‖₁ + μ₂‖Dx‖₁` with Gaussian `A` and a piecewise-constant truth.
#[derive(Debug, Clone)]
pub struct FusedLassoInstance<T: Scalar> {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub noise_var: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub matrix: Arc<DenseMatrix<T>>,
    pub b: Vector<T>,
    pub x_true: Vector<T>,
    /// Declared cocoercivity constant of `f`: `1/‖AᵀA‖` with the estimate inflated.
    pub beta: T,
    /// `‖DDᵀ‖` in closed form.
    pub norm_aat: T,
    pub spec: ProblemSpec<T>,
}

/// Generates the fused-lasso benchmark.
///
/// The truth has 20 equal blocks (block of coordinate `i` is `⌊20i/p⌋`) with values
/// `−1, 0, 1` drawn with probabilities `1/4, 1/2, 1/4`.
pub fn gen_fused_lasso<T: Scalar>(
    n: usize,
    p: usize,
    seed: u64,
    noise_var: f64,
    mu1: f64,
    mu2: f64,
) -> Result<FusedLassoInstance<T>> {
    check_size("n", n, 2)?;
    check_size("p", p, 2)?;
    check_positive("noise_var", noise_var)?;
    check_positive("mu1", mu1)?;
    check_positive("mu2", mu2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a64 = gaussian_matrix(&mut rng, n, p);
    let blocks: Vec<f64> = (0..20)
        .map(|_| {
            let u: f64 = rng.random();
            if u < 0.25 {
                -1.0
            } else if u < 0.75 {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    let x_true: Vec<f64> = (0..p).map(|i| blocks[i * 20 / p]).collect();
    let sd = noise_var.sqrt();
    let mut b: Vec<f64> = a64
        .chunks_exact(p)
        .map(|row| row.iter().zip(&x_true).map(|(a, x)| a * x).sum())
        .collect();
    for bi in b.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *bi += sd * e;
    }

    let matrix = Arc::new(DenseMatrix::from_row_major(
        n,
        p,
        a64.iter().map(|&v| T::of(v)).collect(),
    )?);
    let norm_ata = norm_aat_upper_bound::<T>(matrix.as_ref(), T::of(NORM_TOL), NORM_MAX_ITERS, seed)?;
    let beta = T::one() / norm_ata;
    let b = Vector::from_f64_slice(&b);
    let d = DifferenceOp::new(p)?;
    let norm_aat = d.norm_aat_closed_form::<T>();
    let f = LeastSquares::new(matrix.clone(), b.clone(), T::zero(), beta)?;
    let spec = ProblemSpec::new(Arc::new(d))
        .with_f(Arc::new(f))?
        .with_g(Arc::new(L1Norm::new(T::of(mu1))?))?
        .with_h(Arc::new(L1Norm::new(T::of(mu2))?))?;

    Ok(FusedLassoInstance {
        n,
        p,
        seed,
        noise_var,
        mu1,
        mu2,
        matrix,
        b,
        x_true: Vector::from_f64_slice(&x_true),
        beta,
        norm_aat,
        spec,
    })
}

impl<T: Scalar> FusedLassoInstance<T> {
    /// Defaults of the full-size benchmark: `n = 500`, `p = 10000`, noise variance `0.01`,
    /// `μ₁ = 20`, `μ₂ = 200`.
    pub fn paper_scale(seed: u64) -> Result<Self> {
        gen_fused_lasso(500, 10_000, seed, 0.01, 20.0, 200.0)
    }

    /// The small instance used in tests: `n = 100`, `p = 500`, same noise and weights.
    pub fn desk_scale(seed: u64) -> Result<Self> {
        gen_fused_lasso(100, 500, seed, 0.01, 20.0, 200.0)
    }

    /// Content hash of the instance data.
    pub fn data_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"fused-lasso");
        for v in [self.n as f64, self.p as f64, self.mu1, self.mu2] {
            h.update(v.to_le_bytes());
        }
        for v in self.matrix.data().iter().chain(self.b.iter()) {
            h.update(v.as_f64().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Strongly convex instance for the linear-rate certificate.
///
/// `f(x) = ½‖Ax − b‖² + μ₂‖x‖²`, `g = 0`, and `h = μ₁·huber_η` applied through `A' = I`.
/// `h*` is `(η/μ₁)`-strongly convex, which supplies `τ_{h*}`; `f` supplies
/// `τ_f = λ_min(AᵀA) + 2μ₂`.
#[derive(Debug, Clone)]
pub struct ElasticNetInstance<T: Scalar> {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub mu1: f64,
    pub mu2: f64,
    pub eta: f64,
    pub matrix: Arc<DenseMatrix<T>>,
    pub b: Vector<T>,
    pub beta: T,
    /// `λ_min(AᵀA) + 2μ₂`, or `2μ₂` when the Gram matrix is too large to diagonalize.
    pub tau_f: f64,
    pub spec: ProblemSpec<T>,
}

/// Largest `p` for which `λ_min(AᵀA)` is computed exactly.
const EIGEN_LIMIT: usize = 200;

pub fn gen_elastic_net_strongly_convex<T: Scalar>(
    n: usize,
    p: usize,
    seed: u64,
    mu1: f64,
    mu2: f64,
) -> Result<ElasticNetInstance<T>> {
    check_size("n", n, 1)?;
    check_size("p", p, 1)?;
    check_positive("mu1", mu1)?;
    if !(mu2 >= 0.0 && mu2.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "mu2",
            value: mu2,
            reason: "must be nonnegative and finite",
        });
    }
    let eta = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a64 = gaussian_matrix(&mut rng, n, p);
    let x_true: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let b: Vec<f64> = a64
        .chunks_exact(p)
        .map(|row| row.iter().zip(&x_true).map(|(a, x)| a * x).sum::<f64>())
        .collect();
    let b: Vec<f64> = b
        .into_iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + 0.1 * e
        })
        .collect();

    let matrix = Arc::new(DenseMatrix::from_row_major(
        n,
        p,
        a64.iter().map(|&v| T::of(v)).collect(),
    )?);
    let dense64 = DenseMatrix::from_row_major(n, p, a64)?;
    let norm_ata = norm_aat_upper_bound(&dense64, NORM_TOL, NORM_MAX_ITERS, seed)?;
    let lambda_min = if p <= EIGEN_LIMIT {
        // Shave a rounding margin so the modulus stays a lower bound.
        let eig = symmetric_eigenvalues(&dense64.gram())?;
        (eig[0] - 1e-10 * eig[eig.len() - 1]).max(0.0)
    } else {
        0.0
    };
    let beta = 1.0 / (norm_ata + 2.0 * mu2);
    let f = LeastSquares::new(
        matrix.clone(),
        Vector::from_f64_slice(&b),
        T::of(mu2),
        T::of(beta),
    )?;
    let spec = ProblemSpec::new(Arc::new(IdentityOp::new(p)))
        .with_f(Arc::new(f))?
        .with_h(Arc::new(Huber::new(T::of(mu1), T::of(eta))?))?;
    Ok(ElasticNetInstance {
        n,
        p,
        seed,
        mu1,
        mu2,
        eta,
        matrix,
        b: Vector::from_f64_slice(&b),
        beta: T::of(beta),
        tau_f: lambda_min + 2.0 * mu2,
        spec,
    })
}

impl<T: Scalar> ElasticNetInstance<T> {
    /// Moduli for `linear_rate_rho` under `steps`.
    ///
    /// With `A' = I`, `‖s‖²_M = (γ/δ)(1 − γδ)‖s‖²`, so the Euclidean modulus `η/μ₁` of
    /// `∂h*` becomes `τ_{h*} = (η/μ₁)/((γ/δ)(1 − γδ))`. Requires `γδ < 1`.
    pub fn moduli(&self, steps: &StepSizes<T>) -> Result<Moduli> {
        let gamma = steps.gamma().as_f64();
        let delta = steps.delta().as_f64();
        let lam = gamma * delta;
        if !(lam < 1.0) {
            return Err(Error::HypothesisViolation(format!(
                "M must be positive definite (gamma * delta = {lam})"
            )));
        }
        Ok(Moduli {
            tau_f: self.tau_f,
            tau_g: 0.0,
            tau_hstar: (self.eta / self.mu1) / (gamma / delta * (1.0 - lam)),
            tau_lstar: 0.0,
            lipschitz_g: 0.0,
        })
    }

    pub fn data_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"elastic-net");
        for v in [self.n as f64, self.p as f64, self.mu1, self.mu2, self.eta] {
            h.update(v.to_le_bytes());
        }
        for v in self.matrix.data().iter().chain(self.b.iter()) {
            h.update(v.as_f64().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// `½‖x − c‖²` over `A = I` with `g = h = 0`; the minimizer is `c`.
#[derive(Debug, Clone)]
pub struct ToyQuadraticInstance<T: Scalar> {
    pub p: usize,
    pub seed: u64,
    pub center: Vector<T>,
    pub spec: ProblemSpec<T>,
}

pub fn gen_toy_quadratic<T: Scalar>(p: usize, seed: u64) -> Result<ToyQuadraticInstance<T>> {
    check_size("p", p, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let center = Vector::from_f64_slice(&c);
    let spec = ProblemSpec::new(Arc::new(IdentityOp::new(p)))
        .with_f(Arc::new(SquaredDistance::new(center.clone())))?;
    Ok(ToyQuadraticInstance {
        p,
        seed,
        center,
        spec,
    })
}

impl<T: Scalar> ToyQuadraticInstance<T> {
    pub fn data_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"toy-quadratic");
        for v in self.center.iter() {
            h.update(v.as_f64().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Final pair of a long PD3O run and its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution<T> {
    pub x: Vector<T>,
    pub s: Vector<T>,
    pub objective: T,
    pub iters: usize,
    pub gamma: T,
    pub delta: T,
}

impl<T: Scalar> ReferenceSolution<T> {
    /// The fixed point `z* = x* − γ∇f(x*) − γAᵀs*` of a run with primal step `gamma`.
    pub fn z_for(&self, spec: &ProblemSpec<T>, gamma: T) -> Vector<T> {
        probe_z(spec, gamma, &self.x, &self.s)
    }
}

/// Step sizes of reference runs: `γ = 1.5β` and `γδ‖AAᵀ‖ = 0.5`.
pub fn reference_steps<T: Scalar>(beta: T, norm_aat: T) -> Result<StepSizes<T>> {
    let gamma = if beta.is_finite() { T::of(1.5) * beta } else { T::one() };
    let lam = if norm_aat > T::zero() {
        T::of(0.5) / norm_aat
    } else {
        T::of(0.5)
    };
    StepSizes::new(gamma, lam / gamma)
}

/// Runs PD3O for exactly `iters` iterations from zero and returns the final pair.
///
/// With `cache_dir` set, a result for the same `key` and `iters` is loaded from disk if
/// present and stored after computing otherwise. `key` should identify the instance
/// data, e.g. its `data_hash()`.
pub fn reference_solution<T: Scalar>(
    spec: &ProblemSpec<T>,
    key: &str,
    iters: usize,
    cache_dir: Option<&Path>,
) -> Result<ReferenceSolution<T>> {
    if iters == 0 {
        return Err(Error::InvalidParameter {
            name: "iters",
            value: 0.0,
            reason: "must be positive",
        });
    }
    let hash = {
        let mut h = Sha256::new();
        h.update(key.as_bytes());
        h.update((iters as u64).to_le_bytes());
        h.update(std::any::type_name::<T>().as_bytes());
        hex::encode(h.finalize())
    };
    let path = cache_dir.map(|d| d.join(format!("{hash}.ref")));
    if let Some(p) = &path {
        if p.exists() {
            return read_reference(p, &hash);
        }
    }

    let norm_aat = norm_aat_upper_bound(spec.operator(), T::of(NORM_TOL), NORM_MAX_ITERS, 0)?;
    let steps = reference_steps(spec.f().beta(), norm_aat)?;
    let init = SolverState::zeros(spec, AlgorithmId::Pd3o, &steps)?;
    let options = SolveOptions {
        max_iters: iters,
        residual_tol: T::zero(),
        force: false,
        log_every: usize::MAX,
        norm_aat: Some(norm_aat),
        reference: None,
    };
    let out = solve(spec, AlgorithmId::Pd3o, &steps, init, &options, |_| ControlFlow::Continue(()))?;
    let x = out.state.x().clone();
    let objective = if spec.lstar().is_zero() {
        evaluate_objective(spec, &x)?
    } else {
        T::nan()
    };
    let reference = ReferenceSolution {
        x,
        s: out.state.s().clone(),
        objective,
        iters,
        gamma: steps.gamma(),
        delta: steps.delta(),
    };
    if let Some(p) = &path {
        write_reference(p, &hash, &reference)?;
    }
    Ok(reference)
}

/// Cache directory from [`REFERENCE_CACHE_ENV`], if set and nonempty.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(REFERENCE_CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn write_reference<T: Scalar>(path: &Path, hash: &str, r: &ReferenceSolution<T>) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "pd3o-reference 1");
    let _ = writeln!(text, "hash {hash}");
    let _ = writeln!(text, "iters {}", r.iters);
    let _ = writeln!(text, "gamma {:?}", r.gamma.as_f64());
    let _ = writeln!(text, "delta {:?}", r.delta.as_f64());
    let _ = writeln!(text, "objective {:?}", r.objective.as_f64());
    for (name, v) in [("x", &r.x), ("s", &r.s)] {
        let _ = writeln!(text, "{name} {}", v.dim());
        for e in v.iter() {
            let _ = writeln!(text, "{:?}", e.as_f64());
        }
    }
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("ref"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_reference<T: Scalar>(path: &Path, hash: &str) -> Result<ReferenceSolution<T>> {
    let text = fs::read_to_string(path)?;
    let bad = |what: &str| Error::Cache(format!("{}: {what}", path.display()));
    let mut lines = text.lines();
    fn field<'a>(
        lines: &mut impl Iterator<Item = &'a str>,
        name: &str,
        bad: &dyn Fn(&str) -> Error,
    ) -> Result<String> {
        let line = lines.next().ok_or_else(|| bad("truncated"))?;
        let (k, v) = line.split_once(' ').ok_or_else(|| bad("malformed header"))?;
        if k != name {
            return Err(bad(&format!("expected {name}, found {k}")));
        }
        Ok(v.to_string())
    }
    if field(&mut lines, "pd3o-reference", &bad)? != "1" {
        return Err(bad("unsupported version"));
    }
    if field(&mut lines, "hash", &bad)? != hash {
        return Err(bad("hash mismatch"));
    }
    let parse_f = |s: String| s.parse::<f64>().map_err(|_| bad("bad number"));
    let iters = field(&mut lines, "iters", &bad)?
        .parse::<usize>()
        .map_err(|_| bad("bad iters"))?;
    let gamma = parse_f(field(&mut lines, "gamma", &bad)?)?;
    let delta = parse_f(field(&mut lines, "delta", &bad)?)?;
    let objective = parse_f(field(&mut lines, "objective", &bad)?)?;
    let mut vectors = Vec::with_capacity(2);
    for name in ["x", "s"] {
        let dim = field(&mut lines, name, &bad)?
            .parse::<usize>()
            .map_err(|_| bad("bad dimension"))?;
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            let line = lines.next().ok_or_else(|| bad("truncated vector"))?;
            v.push(T::of(line.parse::<f64>().map_err(|_| bad("bad number"))?));
        }
        vectors.push(Vector::from(v));
    }
    let s = vectors.pop().expect("two vectors");
    let x = vectors.pop().expect("two vectors");
    Ok(ReferenceSolution {
        x,
        s,
        objective: T::of(objective),
        iters,
        gamma: T::of(gamma),
        delta: T::of(delta),
    })
}
