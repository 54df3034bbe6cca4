//! Flat `key = value` run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pd3o::AlgorithmId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    FusedLasso,
    ElasticNet,
    ToyQuadratic,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::FusedLasso => "fused-lasso",
            ProblemKind::ElasticNet => "elastic-net",
            ProblemKind::ToyQuadratic => "toy-quadratic",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "fused-lasso" => Ok(ProblemKind::FusedLasso),
            "elastic-net" => Ok(ProblemKind::ElasticNet),
            "toy-quadratic" => Ok(ProblemKind::ToyQuadratic),
            _ => Err(format!(
                "unknown problem '{s}' (expected fused-lasso, elastic-net or toy-quadratic)"
            )),
        }
    }
}

/// Everything needed to reproduce one run. Size and regularization fields left unset
/// take per-problem defaults (see [`RunConfig::resolved`]).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub seed: u64,
    pub noise_var: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub algorithm: AlgorithmId,
    /// `γ = gamma_factor·β`.
    pub gamma_factor: f64,
    /// `λ = γδ`.
    pub lambda: f64,
    pub theta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub log_every: usize,
    pub output: PathBuf,
    pub force: bool,
    /// Length of the reference run behind `dist_to_ref` and `gap`; `0` leaves them empty.
    pub reference_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::FusedLasso,
            n: None,
            p: None,
            seed: 0,
            noise_var: None,
            mu1: None,
            mu2: None,
            algorithm: AlgorithmId::Pd3o,
            gamma_factor: 1.0,
            lambda: 0.125,
            theta: 1.0,
            max_iters: 5000,
            tol: 1e-8,
            log_every: 1,
            output: PathBuf::from("pd3o-run.csv"),
            force: false,
            reference_iters: 20_000,
        }
    }
}

/// Problem parameters with defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub n: usize,
    pub p: usize,
    pub noise_var: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl RunConfig {
    pub fn resolved(&self) -> ProblemParams {
        let (n, p, noise_var, mu1, mu2) = match self.problem {
            ProblemKind::FusedLasso => (100, 500, 0.01, 20.0, 200.0),
            ProblemKind::ElasticNet => (50, 50, 0.01, 0.5, 0.5),
            ProblemKind::ToyQuadratic => (10, 10, 0.01, 1.0, 1.0),
        };
        ProblemParams {
            n: self.n.unwrap_or(n),
            p: self.p.unwrap_or(p),
            noise_var: self.noise_var.unwrap_or(noise_var),
            mu1: self.mu1.unwrap_or(mu1),
            mu2: self.mu2.unwrap_or(mu2),
        }
    }

    /// Parses the text form. Unknown keys, duplicates and malformed values are errors.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let column = content.len() - content.trim_start().len() + 1;
                return Err(ParseError::new(line, column, "expected 'key = value'"));
            };
            let key = content[..eq].trim();
            let value = content[eq + 1..].trim();
            let key_col = content.len() - content.trim_start().len() + 1;
            let value_col = eq + 2 + (content[eq + 1..].len() - content[eq + 1..].trim_start().len());
            if key.is_empty() {
                return Err(ParseError::new(line, key_col, "missing key"));
            }
            if seen.iter().any(|k| k == key) {
                return Err(ParseError::new(line, key_col, format!("duplicate key '{key}'")));
            }
            cfg.set(key, value)
                .map_err(|e| match e {
                    SetError::UnknownKey => ParseError::new(line, key_col, format!("unknown key '{key}'")),
                    SetError::BadValue(msg) => ParseError::new(line, value_col, msg),
                })?;
            seen.push(key.to_string());
        }
        Ok(cfg)
    }

    /// Sets one field from its text form, as used by both the file format and the CLI.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, SetError> {
            v.parse()
                .map_err(|_| SetError::BadValue(format!("invalid value '{v}' for {key}")))
        }
        fn positive(key: &str, v: &str) -> Result<f64, SetError> {
            let x: f64 = num(key, v)?;
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(SetError::BadValue(format!("{key} must be positive and finite, got {v}")))
            }
        }
        fn count(key: &str, v: &str) -> Result<usize, SetError> {
            let x: usize = num(key, v)?;
            if x == 0 {
                return Err(SetError::BadValue(format!("{key} must be at least 1")));
            }
            Ok(x)
        }
        match key {
            "problem" => self.problem = value.parse().map_err(SetError::BadValue)?,
            "n" => self.n = Some(count(key, value)?),
            "p" => self.p = Some(count(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "noise-var" => self.noise_var = Some(positive(key, value)?),
            "mu1" => self.mu1 = Some(positive(key, value)?),
            "mu2" => {
                let x: f64 = num(key, value)?;
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(SetError::BadValue(format!("mu2 must be nonnegative, got {value}")));
                }
                self.mu2 = Some(x);
            }
            "algorithm" => self.algorithm = value.parse().map_err(SetError::BadValue)?,
            "gamma-factor" => self.gamma_factor = positive(key, value)?,
            "lambda" => self.lambda = positive(key, value)?,
            "theta" => self.theta = positive(key, value)?,
            "max-iters" => self.max_iters = count(key, value)?,
            "tol" => {
                let x: f64 = num(key, value)?;
                if !(x >= 0.0) {
                    return Err(SetError::BadValue(format!("tol must be nonnegative, got {value}")));
                }
                self.tol = x;
            }
            "log-every" => self.log_every = count(key, value)?,
            "output" => {
                if value.is_empty() {
                    return Err(SetError::BadValue("output must not be empty".into()));
                }
                self.output = PathBuf::from(value);
            }
            "force" => self.force = num(key, value)?,
            "reference-iters" => self.reference_iters = num(key, value)?,
            _ => return Err(SetError::UnknownKey),
        }
        Ok(())
    }

    /// The text form; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("problem", self.problem.to_string());
        if let Some(n) = self.n {
            put("n", n.to_string());
        }
        if let Some(p) = self.p {
            put("p", p.to_string());
        }
        put("seed", self.seed.to_string());
        if let Some(v) = self.noise_var {
            put("noise-var", format!("{v:?}"));
        }
        if let Some(v) = self.mu1 {
            put("mu1", format!("{v:?}"));
        }
        if let Some(v) = self.mu2 {
            put("mu2", format!("{v:?}"));
        }
        put("algorithm", self.algorithm.to_string());
        put("gamma-factor", format!("{:?}", self.gamma_factor));
        put("lambda", format!("{:?}", self.lambda));
        put("theta", format!("{:?}", self.theta));
        put("max-iters", self.max_iters.to_string());
        put("tol", format!("{:?}", self.tol));
        put("log-every", self.log_every.to_string());
        put("output", self.output.display().to_string());
        put("force", self.force.to_string());
        put("reference-iters", self.reference_iters.to_string());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetError {
    UnknownKey,
    BadValue(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn full_roundtrip() {
        let cfg = RunConfig {
            problem: ProblemKind::ElasticNet,
            n: Some(30),
            p: Some(40),
            seed: 99,
            noise_var: Some(0.1),
            mu1: Some(0.1 + 0.2),
            mu2: Some(0.0),
            algorithm: AlgorithmId::CondatVu,
            gamma_factor: 1.99,
            lambda: 1.0 / 80.0,
            theta: 1.5,
            max_iters: 7,
            tol: 0.0,
            log_every: 3,
            output: PathBuf::from("out dir/run.csv"),
            force: true,
            reference_iters: 0,
        };
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::parse("# header\n\nalgorithm = pdfp  # trailing\n  lambda=0.25\n").unwrap();
        assert_eq!(cfg.algorithm, AlgorithmId::Pdfp);
        assert_eq!(cfg.lambda, 0.25);
    }

    #[test]
    fn errors_carry_positions() {
        let e = RunConfig::parse("seed = 1\n  bogus = 2\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = RunConfig::parse("lambda =  abc\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 11));
        let e = RunConfig::parse("seed = 1\nno equals here\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 1));
        let e = RunConfig::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        assert!(RunConfig::parse("gamma-factor = -1\n").is_err());
    }
}
