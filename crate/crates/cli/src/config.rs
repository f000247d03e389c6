//! Experiment configuration: a flat `key = value` text format with section
//! headers, chosen to be language-neutral and diff-friendly.
//!
//! ```text
//! [field]
//! kind = uniform          # uniform | gaussian | two-sided-uniform |
//!                         # uniform-with-atom | degenerate
//! lo = 0.5
//! hi = 1.5
//!
//! [model]
//! m = 0.3
//! epsilon = 0.1
//! rho = 0.5
//! lambda-star = 2
//!
//! [run]
//! task = process
//! n = 20
//! replicates = 500
//! seed = 42
//! out = out
//! ```
//!
//! Parsing is strict: unknown keys and malformed values are errors. The
//! serializer emits every field in a canonical order, so
//! `parse(serialize(c)) == c` holds exactly.

use crate::error::CliError;
use remlab_core::field::FieldSpec;
use remlab_core::fmt_f64;
use std::path::PathBuf;

/// What a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Moments,
    Mgf,
    Solve,
    Tail,
    Process,
    Gibbs,
    Verify,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Moments => "moments",
            Task::Mgf => "mgf",
            Task::Solve => "solve",
            Task::Tail => "tail",
            Task::Process => "process",
            Task::Gibbs => "gibbs",
            Task::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Result<Task, CliError> {
        Ok(match s {
            "moments" => Task::Moments,
            "mgf" => Task::Mgf,
            "solve" => Task::Solve,
            "tail" => Task::Tail,
            "process" => Task::Process,
            "gibbs" => Task::Gibbs,
            "verify" => Task::Verify,
            other => return Err(CliError::config(format!("unknown task '{other}'"))),
        })
    }
}

/// Tail estimator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSel {
    Exact,
    Tilted,
    Sharp,
}

impl MethodSel {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSel::Exact => "exact",
            MethodSel::Tilted => "tilted",
            MethodSel::Sharp => "sharp",
        }
    }

    pub fn parse(s: &str) -> Result<MethodSel, CliError> {
        Ok(match s {
            "exact" => MethodSel::Exact,
            "tilted" => MethodSel::Tilted,
            "sharp" => MethodSel::Sharp,
            other => return Err(CliError::config(format!("unknown method '{other}'"))),
        })
    }
}

/// Full experiment configuration. Downstream parameter constraints are
/// re-validated at parse time where they are statically checkable.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    pub m: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub beta: Option<f64>,
    pub lambda_star: f64,
    pub task: Task,
    pub n: usize,
    /// Optional size sweep; drives the sharp-ratio convergence table of the
    /// tail task.
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub samples: usize,
    pub seed: u64,
    pub window: Option<(f64, f64)>,
    pub bins: usize,
    pub level: Option<f64>,
    pub offset: f64,
    pub a: Option<f64>,
    pub method: MethodSel,
    pub lambda_grid: (f64, f64, usize),
    pub h_file: Option<PathBuf>,
    pub out: PathBuf,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            field: FieldSpec::Uniform { lo: 0.5, hi: 1.5 },
            m: 0.3,
            epsilon: 0.1,
            rho: 0.5,
            beta: None,
            lambda_star: 2.0,
            task: Task::Verify,
            n: 20,
            n_grid: Vec::new(),
            replicates: 500,
            samples: 1_000_000,
            seed: 42,
            window: None,
            bins: 6,
            level: None,
            offset: 0.0,
            a: None,
            method: MethodSel::Exact,
            lambda_grid: (0.0, 3.0, 31),
            h_file: None,
            out: PathBuf::from("out"),
            threads: 0,
        }
    }
}

fn field_to_lines(spec: &FieldSpec, out: &mut String) {
    match *spec {
        FieldSpec::Uniform { lo, hi } => {
            out.push_str("kind = uniform\n");
            out.push_str(&format!("lo = {}\n", fmt_f64(lo)));
            out.push_str(&format!("hi = {}\n", fmt_f64(hi)));
        }
        FieldSpec::Gaussian { mean, stddev } => {
            out.push_str("kind = gaussian\n");
            out.push_str(&format!("mean = {}\n", fmt_f64(mean)));
            out.push_str(&format!("stddev = {}\n", fmt_f64(stddev)));
        }
        FieldSpec::TwoSidedUniform { lo, hi, neg_prob } => {
            out.push_str("kind = two-sided-uniform\n");
            out.push_str(&format!("lo = {}\n", fmt_f64(lo)));
            out.push_str(&format!("hi = {}\n", fmt_f64(hi)));
            out.push_str(&format!("neg-prob = {}\n", fmt_f64(neg_prob)));
        }
        FieldSpec::UniformWithAtom { lo, hi, atom } => {
            out.push_str("kind = uniform-with-atom\n");
            out.push_str(&format!("lo = {}\n", fmt_f64(lo)));
            out.push_str(&format!("hi = {}\n", fmt_f64(hi)));
            out.push_str(&format!("atom = {}\n", fmt_f64(atom)));
        }
        FieldSpec::Degenerate { value } => {
            out.push_str("kind = degenerate\n");
            out.push_str(&format!("value = {}\n", fmt_f64(value)));
        }
    }
}

impl ExperimentConfig {
    /// Canonical text form; every field is written.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[field]\n");
        field_to_lines(&self.field, &mut s);
        s.push_str("\n[model]\n");
        s.push_str(&format!("m = {}\n", fmt_f64(self.m)));
        s.push_str(&format!("epsilon = {}\n", fmt_f64(self.epsilon)));
        s.push_str(&format!("rho = {}\n", fmt_f64(self.rho)));
        if let Some(beta) = self.beta {
            s.push_str(&format!("beta = {}\n", fmt_f64(beta)));
        }
        s.push_str(&format!("lambda-star = {}\n", fmt_f64(self.lambda_star)));
        s.push_str("\n[run]\n");
        s.push_str(&format!("task = {}\n", self.task.name()));
        s.push_str(&format!("n = {}\n", self.n));
        if !self.n_grid.is_empty() {
            let items: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
            s.push_str(&format!("n-grid = {}\n", items.join(",")));
        }
        s.push_str(&format!("replicates = {}\n", self.replicates));
        s.push_str(&format!("samples = {}\n", self.samples));
        s.push_str(&format!("seed = {}\n", self.seed));
        if let Some((lo, hi)) = self.window {
            s.push_str(&format!("window = {}:{}\n", fmt_f64(lo), fmt_f64(hi)));
        }
        s.push_str(&format!("bins = {}\n", self.bins));
        if let Some(level) = self.level {
            s.push_str(&format!("level = {}\n", fmt_f64(level)));
        }
        s.push_str(&format!("offset = {}\n", fmt_f64(self.offset)));
        if let Some(a) = self.a {
            s.push_str(&format!("a = {}\n", fmt_f64(a)));
        }
        s.push_str(&format!("method = {}\n", self.method.name()));
        s.push_str(&format!(
            "lambda-grid = {}:{}:{}\n",
            fmt_f64(self.lambda_grid.0),
            fmt_f64(self.lambda_grid.1),
            self.lambda_grid.2
        ));
        if let Some(h) = &self.h_file {
            s.push_str(&format!("h-file = {}\n", h.display()));
        }
        s.push_str(&format!("out = {}\n", self.out.display()));
        s.push_str(&format!("threads = {}\n", self.threads));
        s
    }

    /// Parse the text form, starting from defaults.
    pub fn from_text(text: &str) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        // Field parameters are collected first because `kind` may come in
        // any position relative to its parameters.
        let mut fkind: Option<String> = None;
        let mut fpar: Vec<(String, f64)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("line {}: expected key = value", idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f = |v: &str| -> Result<f64, CliError> {
                v.parse()
                    .map_err(|_| CliError::config(format!("line {}: bad number '{v}'", idx + 1)))
            };
            let parse_u = |v: &str| -> Result<usize, CliError> {
                v.parse()
                    .map_err(|_| CliError::config(format!("line {}: bad integer '{v}'", idx + 1)))
            };
            match section.as_str() {
                "field" => {
                    if key == "kind" {
                        fkind = Some(value.to_string());
                    } else {
                        fpar.push((key.to_string(), parse_f(value)?));
                    }
                }
                "model" => match key {
                    "m" => cfg.m = parse_f(value)?,
                    "epsilon" => cfg.epsilon = parse_f(value)?,
                    "rho" => cfg.rho = parse_f(value)?,
                    "beta" => cfg.beta = Some(parse_f(value)?),
                    "lambda-star" => cfg.lambda_star = parse_f(value)?,
                    other => return Err(CliError::config(format!("unknown model key '{other}'"))),
                },
                "run" => match key {
                    "task" => cfg.task = Task::parse(value)?,
                    "n" => cfg.n = parse_u(value)?,
                    "n-grid" => {
                        cfg.n_grid = value
                            .split(',')
                            .map(|v| parse_u(v.trim()))
                            .collect::<Result<Vec<_>, _>>()?;
                    }
                    "replicates" => cfg.replicates = parse_u(value)?,
                    "samples" => cfg.samples = parse_u(value)?,
                    "seed" => {
                        cfg.seed = value.parse().map_err(|_| {
                            CliError::config(format!("line {}: bad seed '{value}'", idx + 1))
                        })?
                    }
                    "window" => cfg.window = Some(parse_window(value)?),
                    "bins" => cfg.bins = parse_u(value)?,
                    "level" => cfg.level = Some(parse_f(value)?),
                    "offset" => cfg.offset = parse_f(value)?,
                    "a" => cfg.a = Some(parse_f(value)?),
                    "method" => cfg.method = MethodSel::parse(value)?,
                    "lambda-grid" => cfg.lambda_grid = parse_grid(value)?,
                    "h-file" => cfg.h_file = Some(PathBuf::from(value)),
                    "out" => cfg.out = PathBuf::from(value),
                    "threads" => cfg.threads = parse_u(value)?,
                    other => return Err(CliError::config(format!("unknown run key '{other}'"))),
                },
                other => {
                    return Err(CliError::config(format!("unknown section '[{other}]'")));
                }
            }
        }

        if fkind.is_some() || !fpar.is_empty() {
            cfg.field = build_field(fkind.as_deref(), &fpar)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Static cross-checks of parameter constraints.
    pub fn validate(&self) -> Result<(), CliError> {
        remlab_core::field::SpinBias::new(self.m, self.epsilon)
            .map_err(|e| CliError::config(format!("bias: {e}")))?;
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(CliError::config(format!(
                "rho = {} outside (0,1)",
                self.rho
            )));
        }
        if let Some(beta) = self.beta {
            if !beta.is_finite() || beta < 0.0 {
                return Err(CliError::config(format!("beta = {beta} invalid")));
            }
        }
        if self.n == 0 {
            return Err(CliError::config("n must be positive".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(CliError::config("n-grid entries must be positive".into()));
        }
        if let Some((lo, hi)) = self.window {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(CliError::config(format!("window {lo}:{hi} is empty")));
            }
        }
        if self.bins == 0 {
            return Err(CliError::config("bins must be positive".into()));
        }
        if self.lambda_grid.2 < 2 || self.lambda_grid.1 <= self.lambda_grid.0 {
            return Err(CliError::config(
                "lambda-grid needs lo < hi and >= 2 steps".into(),
            ));
        }
        Ok(())
    }

    pub fn bias(&self) -> Result<remlab_core::field::SpinBias, CliError> {
        remlab_core::field::SpinBias::new(self.m, self.epsilon)
            .map_err(|e| CliError::config(e.to_string()))
    }
}

pub fn parse_window(value: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = value
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("window '{value}' is not lo:hi")))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad window bound '{lo}'")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad window bound '{hi}'")))?;
    Ok((lo, hi))
}

pub fn parse_grid(value: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "grid '{value}' is not lo:hi:steps"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad grid bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad grid bound '{}'", parts[1])))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("bad grid steps '{}'", parts[2])))?;
    Ok((lo, hi, steps))
}

fn build_field(kind: Option<&str>, params: &[(String, f64)]) -> Result<FieldSpec, CliError> {
    let get = |name: &str| -> Result<f64, CliError> {
        params
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| CliError::config(format!("field: missing '{name}'")))
    };
    let kind = kind.ok_or_else(|| CliError::config("field: missing 'kind'".into()))?;
    let spec = match kind {
        "uniform" => FieldSpec::Uniform {
            lo: get("lo")?,
            hi: get("hi")?,
        },
        "gaussian" => FieldSpec::Gaussian {
            mean: get("mean")?,
            stddev: get("stddev")?,
        },
        "two-sided-uniform" => FieldSpec::TwoSidedUniform {
            lo: get("lo")?,
            hi: get("hi")?,
            neg_prob: get("neg-prob")?,
        },
        "uniform-with-atom" => FieldSpec::UniformWithAtom {
            lo: get("lo")?,
            hi: get("hi")?,
            atom: get("atom")?,
        },
        "degenerate" => FieldSpec::Degenerate {
            value: get("value")?,
        },
        other => return Err(CliError::config(format!("unknown field kind '{other}'"))),
    };
    Ok(spec)
}
