//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Command-line overrides use
//! the same keys and are applied after the file, in order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ttda_core::discriminant::{CMDA_MAX_ITER, CMDA_TOL};
use ttda_core::ttda::{DENSE_CEILING, LOOP_ITER, TTDA_MAX_ITER, TTDA_TOL};
use ttda_core::{default_lambda_grid, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::synthetic::SyntheticSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Lda,
    Cmda,
    Dgtda,
    Ttda,
    TwoWay,
    ThreeWay,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Lda, Method::Cmda, Method::Dgtda, Method::Ttda, Method::TwoWay, Method::ThreeWay];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lda => "lda",
            Method::Cmda => "cmda",
            Method::Dgtda => "dgtda",
            Method::Ttda => "ttda",
            Method::TwoWay => "2wttda",
            Method::ThreeWay => "3wttda",
        }
    }

    /// Branch count of the multi-branch methods.
    pub fn branches(self) -> Option<usize> {
        match self {
            Method::TwoWay => Some(2),
            Method::ThreeWay => Some(3),
            _ => None,
        }
    }

    /// Whether the method has a λ to tune.
    pub fn uses_lambda(self) -> bool {
        self != Method::Dgtda
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| CliError::Config(format!("unknown method `{s}` (lda, cmda, dgtda, ttda, 2wttda, 3wttda)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Synthetic,
    /// Directory of `.tten` files with `labels.csv`.
    Tten(PathBuf),
    /// Directory of per-class subdirectories holding PGM images.
    Pgm(PathBuf),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Synthetic => f.write_str("synthetic"),
            Source::Tten(p) => write!(f, "tten:{}", p.display()),
            Source::Pgm(p) => write!(f, "pgm:{}", p.display()),
        }
    }
}

impl FromStr for Source {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s == "synthetic" {
            return Ok(Source::Synthetic);
        }
        match s.split_once(':') {
            Some(("tten", p)) if !p.is_empty() => Ok(Source::Tten(PathBuf::from(p))),
            Some(("pgm", p)) if !p.is_empty() => Ok(Source::Pgm(PathBuf::from(p))),
            _ => Err(CliError::Config(format!("source `{s}` is not synthetic, tten:DIR or pgm:DIR"))),
        }
    }
}

/// Rank selection: a truncation threshold or explicit ranks.
///
/// Explicit ranks are one list per branch, written `2,3;2,3`. LDA takes a
/// single number, CMDA/DGTDA one rank per mode, TTDA the bond ranks
/// `R_1..R_N`.
#[derive(Clone, Debug, PartialEq)]
pub enum RankSpec {
    Tau(f64),
    Explicit(Vec<Vec<usize>>),
}

impl RankSpec {
    pub fn tau(&self) -> Option<f64> {
        match self {
            RankSpec::Tau(t) => Some(*t),
            RankSpec::Explicit(_) => None,
        }
    }
}

pub fn format_rank_lists(lists: &[Vec<usize>]) -> String {
    lists.iter().map(|l| join(l)).collect::<Vec<_>>().join(";")
}

pub fn parse_rank_lists(s: &str) -> CliResult<Vec<Vec<usize>>> {
    let lists = s.split(';').map(parse_list::<usize>).collect::<CliResult<Vec<_>>>()?;
    if lists.iter().any(|l| l.is_empty() || l.contains(&0)) {
        return Err(CliError::Config(format!("ranks `{s}` must be positive and nonempty")));
    }
    Ok(lists)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSpec {
    Fixed(f64),
    /// Chosen by validation over the λ grid.
    Auto,
}

pub fn parse_list<T: FromStr>(s: &str) -> CliResult<Vec<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| CliError::Config(format!("cannot parse `{p}` in `{s}`"))))
        .collect()
}

pub fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim().parse::<T>().map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}`")))
}

fn optional_path(v: &str) -> Option<PathBuf> {
    let v = v.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: Source,
    pub synthetic: SyntheticSpec,
    pub method: Method,
    /// Target sample shape; `None` keeps the loaded shape.
    pub reshape: Option<Vec<usize>>,
    pub ranks: RankSpec,
    /// Branch boundaries for the multi-branch methods; `None` selects them
    /// from the mode sizes.
    pub boundaries: Option<Vec<usize>>,
    pub lambda: LambdaSpec,
    pub max_iter: usize,
    pub tol: f64,
    pub cmda_max_iter: usize,
    pub cmda_tol: f64,
    pub loop_iter: usize,
    pub solver_max_iter: usize,
    pub solver_grad_tol: f64,
    pub dense_ceiling: usize,
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    pub lambda_subset: usize,
    pub lambda_trials: usize,
    /// Parallel sweep points; 0 uses every core.
    pub workers: usize,
    /// Results CSV; stdout when unset.
    pub output: Option<PathBuf>,
    /// Objective-trace CSV of the first repeat.
    pub trace: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverConfig::<f64>::default();
        Self {
            source: Source::Synthetic,
            synthetic: SyntheticSpec::default(),
            method: Method::Ttda,
            reshape: None,
            ranks: RankSpec::Tau(0.5),
            boundaries: None,
            lambda: LambdaSpec::Fixed(1.0),
            max_iter: TTDA_MAX_ITER,
            tol: TTDA_TOL,
            cmda_max_iter: CMDA_MAX_ITER,
            cmda_tol: CMDA_TOL,
            loop_iter: LOOP_ITER,
            solver_max_iter: solver.max_iter,
            solver_grad_tol: solver.grad_tol,
            dense_ceiling: DENSE_CEILING,
            repeats: 10,
            train_fraction: 0.5,
            seed: 0,
            lambda_grid: default_lambda_grid(),
            lambda_subset: 2,
            lambda_trials: 5,
            workers: 0,
            output: None,
            trace: None,
        }
    }
}

impl ExperimentConfig {
    /// Every recognised key, in the order [`entries`](Self::entries) lists them.
    pub const KEYS: [&'static str; 32] = [
        "source",
        "method",
        "reshape",
        "tau",
        "ranks",
        "boundaries",
        "lambda",
        "max_iter",
        "tol",
        "cmda_max_iter",
        "cmda_tol",
        "loop_iter",
        "solver_max_iter",
        "solver_grad_tol",
        "dense_ceiling",
        "repeats",
        "train_fraction",
        "seed",
        "lambda_grid",
        "lambda_subset",
        "lambda_trials",
        "workers",
        "output",
        "trace",
        "synth_shape",
        "synth_classes",
        "synth_per_class",
        "synth_ranks",
        "synth_separation",
        "synth_sigma",
        "synth_seed",
        "synth_margin",
    ];

    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> CliResult<()> {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| CliError::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> CliResult<()> {
        match key {
            "source" => self.source = v.parse()?,
            "method" => self.method = v.parse()?,
            "reshape" => {
                let shape = parse_list::<usize>(v)?;
                self.reshape = (!shape.is_empty()).then_some(shape);
            }
            "tau" => self.ranks = RankSpec::Tau(parse_value(key, v)?),
            "ranks" => self.ranks = RankSpec::Explicit(parse_rank_lists(v)?),
            "boundaries" => {
                let b = parse_list::<usize>(v)?;
                self.boundaries = (!b.is_empty()).then_some(b);
            }
            "lambda" => {
                self.lambda = if v.eq_ignore_ascii_case("auto") {
                    LambdaSpec::Auto
                } else {
                    LambdaSpec::Fixed(parse_value(key, v)?)
                }
            }
            "max_iter" => self.max_iter = parse_value(key, v)?,
            "tol" => self.tol = parse_value(key, v)?,
            "cmda_max_iter" => self.cmda_max_iter = parse_value(key, v)?,
            "cmda_tol" => self.cmda_tol = parse_value(key, v)?,
            "loop_iter" => self.loop_iter = parse_value(key, v)?,
            "solver_max_iter" => self.solver_max_iter = parse_value(key, v)?,
            "solver_grad_tol" => self.solver_grad_tol = parse_value(key, v)?,
            "dense_ceiling" => self.dense_ceiling = parse_value(key, v)?,
            "repeats" => self.repeats = parse_value(key, v)?,
            "train_fraction" => self.train_fraction = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "lambda_grid" => self.lambda_grid = parse_list(v)?,
            "lambda_subset" => self.lambda_subset = parse_value(key, v)?,
            "lambda_trials" => self.lambda_trials = parse_value(key, v)?,
            "workers" => self.workers = parse_value(key, v)?,
            "output" => self.output = optional_path(v),
            "trace" => self.trace = optional_path(v),
            "synth_shape" => self.synthetic.shape = parse_list(v)?,
            "synth_classes" => self.synthetic.classes = parse_value(key, v)?,
            "synth_per_class" => self.synthetic.per_class = parse_value(key, v)?,
            "synth_ranks" => self.synthetic.ranks = parse_list(v)?,
            "synth_separation" => self.synthetic.separation = parse_value(key, v)?,
            "synth_sigma" => self.synthetic.sigma = parse_value(key, v)?,
            "synth_seed" => self.synthetic.seed = parse_value(key, v)?,
            "synth_margin" => self.synthetic.margin = parse_value(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Current value of every key as it would be written to a file. The
    /// inactive one of `tau`/`ranks` is empty.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values = vec![
            self.source.to_string(),
            self.method.to_string(),
            self.reshape.as_deref().map(join).unwrap_or_default(),
            self.ranks.tau().map(|t| t.to_string()).unwrap_or_default(),
            match &self.ranks {
                RankSpec::Explicit(l) => format_rank_lists(l),
                RankSpec::Tau(_) => String::new(),
            },
            self.boundaries.as_deref().map(join).unwrap_or_default(),
            match self.lambda {
                LambdaSpec::Auto => "auto".into(),
                LambdaSpec::Fixed(l) => l.to_string(),
            },
            self.max_iter.to_string(),
            self.tol.to_string(),
            self.cmda_max_iter.to_string(),
            self.cmda_tol.to_string(),
            self.loop_iter.to_string(),
            self.solver_max_iter.to_string(),
            self.solver_grad_tol.to_string(),
            self.dense_ceiling.to_string(),
            self.repeats.to_string(),
            self.train_fraction.to_string(),
            self.seed.to_string(),
            join(&self.lambda_grid),
            self.lambda_subset.to_string(),
            self.lambda_trials.to_string(),
            self.workers.to_string(),
            opt_path(&self.output),
            opt_path(&self.trace),
            join(&self.synthetic.shape),
            self.synthetic.classes.to_string(),
            self.synthetic.per_class.to_string(),
            join(&self.synthetic.ranks),
            self.synthetic.separation.to_string(),
            self.synthetic.sigma.to_string(),
            self.synthetic.seed.to_string(),
            self.synthetic.margin.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries().into_iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    /// The configuration as a file that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            if v.is_empty() {
                continue;
            }
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if let RankSpec::Tau(t) = self.ranks {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("tau = {t} outside (0, 1]"));
            }
        }
        if let LambdaSpec::Fixed(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda = {l} must be finite and non-negative"));
            }
        }
        if self.lambda == LambdaSpec::Auto
            && (self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())))
        {
            return bad("lambda_grid needs finite non-negative values".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction = {} outside (0, 1)", self.train_fraction));
        }
        if self.repeats == 0 || self.max_iter == 0 || self.cmda_max_iter == 0 || self.loop_iter == 0 {
            return bad("repeats and iteration limits must be positive".into());
        }
        if !(self.tol > 0.0) || !(self.cmda_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.boundaries.is_some() && self.method.branches().is_none() {
            return bad(format!("boundaries given for single-structure method {}", self.method));
        }
        if let (Some(b), Some(f)) = (&self.boundaries, self.method.branches()) {
            if b.len() + 1 != f {
                return bad(format!("{} boundaries for {} branches", b.len(), f));
            }
        }
        if let RankSpec::Explicit(lists) = &self.ranks {
            let want = self.method.branches().unwrap_or(1);
            if lists.len() != want {
                return bad(format!("{} rank lists for {} (expected {want})", lists.len(), self.method));
            }
            if self.method == Method::Lda && lists[0].len() != 1 {
                return bad("lda takes a single rank".into());
            }
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig<f64> {
        SolverConfig {
            max_iter: self.solver_max_iter,
            grad_tol: self.solver_grad_tol,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.method = Method::ThreeWay;
        cfg.ranks = RankSpec::Explicit(vec![vec![2], vec![3], vec![2, 3]]);
        cfg.boundaries = Some(vec![1, 2]);
        cfg.lambda = LambdaSpec::Auto;
        cfg.output = Some(PathBuf::from("out.csv"));
        let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_overrides_and_errors() {
        let mut cfg = ExperimentConfig::from_text("# demo\nmethod = cmda  # trailing\n\ntau=0.3\n").unwrap();
        assert_eq!(cfg.method, Method::Cmda);
        assert_eq!(cfg.ranks, RankSpec::Tau(0.3));
        cfg.apply_override("ranks=2,2,2,2").unwrap();
        assert_eq!(cfg.ranks, RankSpec::Explicit(vec![vec![2, 2, 2, 2]]));
        assert!(ExperimentConfig::from_text("nonsense = 1").is_err());
        assert!(ExperimentConfig::from_text("method").is_err());
        assert!(cfg.apply_override("tau=abc").is_err());
        assert!(cfg.apply_override("ranks=2,0").is_err());
    }

    #[test]
    fn source_parsing() {
        assert_eq!("synthetic".parse::<Source>().unwrap(), Source::Synthetic);
        assert_eq!("pgm:/x/y".parse::<Source>().unwrap(), Source::Pgm("/x/y".into()));
        assert!("tten:".parse::<Source>().is_err());
        assert!("png:/x".parse::<Source>().is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.ranks = RankSpec::Tau(1.5);
        assert!(cfg.validate().is_err());
        cfg.ranks = RankSpec::Explicit(vec![vec![2], vec![2]]);
        assert!(cfg.validate().is_err());
        cfg.method = Method::TwoWay;
        assert!(cfg.validate().is_ok());
        cfg.boundaries = Some(vec![1, 2]);
        assert!(cfg.validate().is_err());
    }
}
