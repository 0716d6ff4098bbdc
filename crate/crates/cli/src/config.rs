//! Line-oriented `key=value` run configuration; `#` starts a comment.
//!
//! | key            | default | meaning                                        |
//! |----------------|---------|------------------------------------------------|
//! | dim            | 3       | 2 or 3                                         |
//! | h              | 0.0625  | grid spacing in (0, 1/2]                       |
//! | sigma          |         | +1, 0 or -1 (required)                         |
//! | f              |         | right-hand side expression                     |
//! | f_csv          |         | nodewise right-hand side, `x1,..,xd,f` rows    |
//! | mu             | auto    | start quadratic `(mu/2)(r^2-1)`                |
//! | strict         | false   | enforce solvability hypotheses                 |
//! | newton_tol     | 1e-8    | residual tolerance                             |
//! | t_step         | 0.1     | initial continuation step                      |
//! | seed           | 0       | seed for randomized probes                     |
//! | output_dir     | out     | where CSV and summary files go                 |
//! | case           |         | mms: quadratic, quartic or offcenter           |
//! | a              | 4       | mms: curvature of the quadratic case           |
//! | levels         | 3       | mms: number of grid levels                     |
//! | seeds          | 3       | uniqueness: perturbed restarts                 |
//! | uniqueness_tol | 1e-6    | uniqueness: allowed pairwise sup distance      |
//! | oracle_tol     | 2e-3    | oracle-compare: allowed error at the origin    |

use std::collections::HashSet;
use std::path::PathBuf;

use crate::expr::{self, Expr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Quadratic,
    Quartic,
    Offcenter,
}

/// Located source of a value, kept for diagnostics raised after parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub value: T,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub h: f64,
    pub sigma: f64,
    pub f: Option<Located<Expr>>,
    pub f_csv: Option<Located<PathBuf>>,
    pub mu: Option<f64>,
    pub strict: bool,
    pub newton_tol: f64,
    pub t_step: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub case: Option<CaseName>,
    pub a: f64,
    pub levels: usize,
    pub seeds: usize,
    pub uniqueness_tol: f64,
    pub oracle_tol: f64,
    /// Line just past the end of the input, for "missing key" diagnostics.
    pub end_line: usize,
}

fn number(v: &str) -> Option<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig {
        dim: 3,
        h: 0.0625,
        sigma: f64::NAN,
        f: None,
        f_csv: None,
        mu: None,
        strict: false,
        newton_tol: 1e-8,
        t_step: 0.1,
        seed: 0,
        output_dir: PathBuf::from("out"),
        case: None,
        a: 4.0,
        levels: 3,
        seeds: 3,
        uniqueness_tol: 1e-6,
        oracle_tol: 2e-3,
        end_line: text.lines().count() + 1,
    };
    let mut seen = HashSet::new();
    let mut f_src: Option<(String, usize, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        let Some(eq) = content.find('=') else {
            return Err(ConfigError { line, column: lead + 1, message: "expected key=value".into() });
        };
        let key = content[..eq].trim();
        let value_part = &content[eq + 1..];
        let value = value_part.trim();
        let vcol = eq + 2 + (value_part.len() - value_part.trim_start().len());
        let err = |column: usize, message: String| ConfigError { line, column, message };
        let range = |what: &str| err(vcol, format!("{key} {what}, got '{value}'"));
        if key.is_empty() {
            return Err(err(lead + 1, "missing key before '='".into()));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(lead + 1, format!("duplicate key '{key}'")));
        }
        match key {
            "dim" => {
                cfg.dim = match value {
                    "2" => 2,
                    "3" => 3,
                    _ => return Err(range("must be 2 or 3")),
                }
            }
            "h" => {
                cfg.h = number(value).filter(|h| *h > 0.0 && *h <= 0.5).ok_or_else(|| range("must lie in (0, 0.5]"))?
            }
            "sigma" => {
                cfg.sigma = number(value)
                    .filter(|s| [-1.0, 0.0, 1.0].contains(s))
                    .ok_or_else(|| range("must be +1, 0 or -1"))?
            }
            "f" => {
                let e = expr::parse(value)
                    .map_err(|e| err(vcol + e.column - 1, format!("in expression: {}", e.message)))?;
                cfg.f = Some(Located { value: e, line, column: vcol });
                f_src = Some((value.to_string(), line, vcol));
            }
            "f_csv" => {
                if value.is_empty() {
                    return Err(range("must be a path"));
                }
                cfg.f_csv = Some(Located { value: PathBuf::from(value), line, column: vcol });
            }
            "mu" => cfg.mu = Some(number(value).filter(|m| *m > 0.0).ok_or_else(|| range("must be positive"))?),
            "strict" => {
                cfg.strict = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(range("must be true or false")),
                }
            }
            "newton_tol" => {
                cfg.newton_tol =
                    number(value).filter(|t| *t > 0.0 && *t < 1.0).ok_or_else(|| range("must lie in (0, 1)"))?
            }
            "t_step" => {
                cfg.t_step =
                    number(value).filter(|t| *t > 0.0 && *t <= 1.0).ok_or_else(|| range("must lie in (0, 1]"))?
            }
            "seed" => cfg.seed = value.parse().map_err(|_| range("must be a nonnegative integer"))?,
            "output_dir" => {
                if value.is_empty() {
                    return Err(range("must be a path"));
                }
                cfg.output_dir = PathBuf::from(value);
            }
            "case" => {
                cfg.case = Some(match value {
                    "quadratic" => CaseName::Quadratic,
                    "quartic" => CaseName::Quartic,
                    "offcenter" => CaseName::Offcenter,
                    _ => return Err(range("must be quadratic, quartic or offcenter")),
                })
            }
            "a" => cfg.a = number(value).filter(|a| *a > 0.0).ok_or_else(|| range("must be positive"))?,
            "levels" => {
                cfg.levels = value
                    .parse()
                    .ok()
                    .filter(|l| (1..=6).contains(l))
                    .ok_or_else(|| range("must be an integer in 1..=6"))?
            }
            "seeds" => {
                cfg.seeds = value
                    .parse()
                    .ok()
                    .filter(|s| (1..=100).contains(s))
                    .ok_or_else(|| range("must be an integer in 1..=100"))?
            }
            "uniqueness_tol" => {
                cfg.uniqueness_tol = number(value).filter(|t| *t > 0.0).ok_or_else(|| range("must be positive"))?
            }
            "oracle_tol" => {
                cfg.oracle_tol = number(value).filter(|t| *t > 0.0).ok_or_else(|| range("must be positive"))?
            }
            _ => return Err(err(lead + 1, format!("unknown key '{key}'"))),
        }
    }

    if cfg.sigma.is_nan() {
        return Err(ConfigError { line: cfg.end_line, column: 1, message: "missing required key 'sigma'".into() });
    }
    if let (Some(_), Some(csv)) = (&cfg.f, &cfg.f_csv) {
        return Err(ConfigError {
            line: csv.line,
            column: csv.column,
            message: "f and f_csv are mutually exclusive".into(),
        });
    }
    if let Some((src, line, vcol)) = &f_src {
        if cfg.dim == 2 {
            if let Some(c) = expr::variable_column(src, 2) {
                return Err(ConfigError {
                    line: *line,
                    column: vcol + c - 1,
                    message: "x3 is not available when dim=2".into(),
                });
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = parse_config("dim=3\nh=0.0625\nsigma=+1\nf=48").unwrap();
        assert_eq!((c.dim, c.h, c.sigma), (3, 0.0625, 1.0));
        assert_eq!(c.f.unwrap().value.eval(&[0.0; 3]), 48.0);
        assert_eq!((c.newton_tol, c.t_step), (1e-8, 0.1));
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("# run\n  sigma = -1\n\nf = 1 + x1^2\ndim=2\n").unwrap();
        assert_eq!((c.dim, c.sigma), (2, -1.0));
        assert_eq!(c.f.unwrap().value.eval(&[1.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn rejections_carry_locations() {
        let e = parse_config("dim=3\nsigma=2").unwrap_err();
        assert_eq!((e.line, e.column), (2, 7));
        let e = parse_config("sigma=1\nbogus=1").unwrap_err();
        assert_eq!((e.line, e.column), (2, 1));
        assert!(e.message.contains("unknown key"));
        let e = parse_config("sigma=1\nf = 1 + q").unwrap_err();
        assert_eq!((e.line, e.column), (2, 9));
        let e = parse_config("dim=2\nsigma=1\nf=x1+x3").unwrap_err();
        assert_eq!((e.line, e.column), (3, 6));
        let e = parse_config("sigma=1\nsigma=1").unwrap_err();
        assert!(e.message.contains("duplicate"));
        let e = parse_config("dim=3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_config("sigma=1\nh=0.75").is_err());
        assert!(parse_config("sigma=1\nnoequals").is_err());
        assert!(parse_config("sigma=1\nf=1\nf_csv=data.csv").is_err());
        assert!(parse_config("sigma=1\nlevels=0").is_err());
    }
}
