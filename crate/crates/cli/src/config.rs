//! Flat key-value run configuration: `key = value` lines with `#` comments.
//!
//! Parsing is strict and fail-fast: unknown keys, malformed values, and
//! violated module preconditions are all reported before any computation
//! starts.

use std::collections::BTreeMap;

use krein_core::basis::DomainSpec;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Spectrum,
    Count,
    BoundTable,
    Verify,
    Oracle,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "spectrum" => Some(Mode::Spectrum),
            "count" => Some(Mode::Count),
            "bound-table" => Some(Mode::BoundTable),
            "verify" => Some(Mode::Verify),
            "oracle" => Some(Mode::Oracle),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Count => "count",
            Mode::BoundTable => "bound-table",
            Mode::Verify => "verify",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGridSpec {
    /// Geometric grid from λ₁/2 up to the N/2-th discrete eigenvalue.
    Default {
        ratio: f64,
    },
    Range {
        min: f64,
        max: f64,
        ratio: f64,
    },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub domain: DomainSpec,
    pub order: usize,
    pub degree: usize,
    pub cells: usize,
    pub lambda_grid: LambdaGridSpec,
    pub seed: u64,
    pub oracle_count: usize,
    pub n_range: (usize, usize),
    pub m_range: (usize, usize),
    pub out: Option<String>,
    pub dump: Option<String>,
    /// Normalized key-value pairs for the report echo.
    pub echo: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "dim",
    "a",
    "b",
    "lo",
    "hi",
    "h",
    "cell_coords",
    "m",
    "degree",
    "cells",
    "lambda_min",
    "lambda_max",
    "lambda_ratio",
    "lambda_list",
    "seed",
    "oracle_count",
    "n_min",
    "n_max",
    "m_min",
    "m_max",
    "out",
    "dump",
];

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("unknown key {key:?}"),
            });
        }
        if kv.insert(key.clone(), (line_no, value)).is_some() {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("duplicate key {key:?}"),
            });
        }
    }
    build_config(kv)
}

fn build_config(kv: BTreeMap<String, (usize, String)>) -> Result<RunConfig, ConfigError> {
    let get = |key: &str| kv.get(key).map(|(line, v)| (*line, v.as_str()));
    let parse_f64 = |key: &str| -> Result<Option<f64>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| ConfigError::Parse {
                line,
                msg: format!("{key}: expected a number, got {v:?}"),
            }),
        }
    };
    let parse_usize = |key: &str| -> Result<Option<usize>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError::Parse {
                    line,
                    msg: format!("{key}: expected a nonnegative integer, got {v:?}"),
                }),
        }
    };
    let parse_vec_f64 = |key: &str| -> Result<Option<Vec<f64>>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map(Some)
                .map_err(|_| ConfigError::Parse {
                    line,
                    msg: format!("{key}: expected space-separated numbers, got {v:?}"),
                }),
        }
    };

    let mode = match get("mode") {
        None => None,
        Some((line, v)) => Some(Mode::parse(v).ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("mode: expected spectrum|count|bound-table|verify|oracle, got {v:?}"),
        })?),
    };

    // Domain: a cell union when cell_coords is present, otherwise an
    // interval (dim 1) or box.
    let cell_coords: Option<Vec<Vec<i64>>> = match get("cell_coords") {
        None => None,
        Some((line, v)) => {
            let cells = v
                .split_whitespace()
                .map(|tuple| {
                    tuple
                        .split(',')
                        .map(|t| t.trim().parse::<i64>())
                        .collect::<Result<Vec<i64>, _>>()
                })
                .collect::<Result<Vec<Vec<i64>>, _>>()
                .map_err(|_| ConfigError::Parse {
                    line,
                    msg: format!("cell_coords: expected tuples like `0,1 2,0`, got {v:?}"),
                })?;
            Some(cells)
        }
    };
    let lo = parse_vec_f64("lo")?;
    let hi = parse_vec_f64("hi")?;
    let dim = match parse_usize("dim")? {
        Some(d) => d,
        None => {
            if let Some(cells) = &cell_coords {
                cells.first().map_or(1, |c| c.len())
            } else if let Some(lo) = &lo {
                lo.len()
            } else if let Some(hi) = &hi {
                hi.len()
            } else {
                1
            }
        }
    };
    if dim < 1 {
        return Err(ConfigError::Validation("dim must be at least 1".into()));
    }

    let domain = if let Some(cells) = cell_coords {
        let h = parse_f64("h")?.ok_or_else(|| {
            ConfigError::Validation("cell_coords requires the cell width key `h`".into())
        })?;
        if cells.iter().any(|c| c.len() != dim) {
            return Err(ConfigError::Validation(format!(
                "cell_coords tuples must have dim = {dim} components"
            )));
        }
        DomainSpec::CellUnion { h, cells }
    } else if dim == 1 {
        let a = parse_f64("a")?.unwrap_or(0.0);
        let b = parse_f64("b")?.unwrap_or(1.0);
        DomainSpec::Interval { a, b }
    } else {
        let lo = lo.unwrap_or_else(|| vec![0.0; dim]);
        let hi = hi.unwrap_or_else(|| vec![1.0; dim]);
        if lo.len() != dim || hi.len() != dim {
            return Err(ConfigError::Validation(format!(
                "lo/hi must have dim = {dim} components"
            )));
        }
        DomainSpec::Box { lo, hi }
    };
    domain
        .validate()
        .map_err(|e| ConfigError::Validation(e.to_string()))?;

    let order = parse_usize("m")?.unwrap_or(1);
    if order < 1 {
        return Err(ConfigError::Validation("m must be at least 1".into()));
    }
    let degree = parse_usize("degree")?.unwrap_or(2 * order + 1);
    if degree < 2 * order {
        return Err(ConfigError::Validation(format!(
            "degree < 2m: degree {degree} cannot conform to order m = {order}"
        )));
    }
    let default_cells = match &domain {
        DomainSpec::Interval { .. } => 32,
        DomainSpec::Box { .. } => 8,
        DomainSpec::CellUnion { .. } => 4,
    };
    let cells = parse_usize("cells")?.unwrap_or(default_cells);
    if cells < 1 {
        return Err(ConfigError::Validation("cells must be at least 1".into()));
    }

    let ratio = parse_f64("lambda_ratio")?.unwrap_or(1.2);
    if ratio <= 1.0 {
        return Err(ConfigError::Validation(
            "lambda_ratio must be greater than 1".into(),
        ));
    }
    let lambda_grid = if let Some(list) = parse_vec_f64("lambda_list")? {
        if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) || list[0] <= 0.0 {
            return Err(ConfigError::Validation(
                "lambda_list must be strictly ascending and positive".into(),
            ));
        }
        LambdaGridSpec::Explicit(list)
    } else {
        match (parse_f64("lambda_min")?, parse_f64("lambda_max")?) {
            (Some(min), Some(max)) => {
                if !(min > 0.0 && max > min) {
                    return Err(ConfigError::Validation(
                        "lambda_min/lambda_max must satisfy 0 < min < max".into(),
                    ));
                }
                LambdaGridSpec::Range { min, max, ratio }
            }
            (None, None) => LambdaGridSpec::Default { ratio },
            _ => {
                return Err(ConfigError::Validation(
                    "lambda_min and lambda_max must be given together".into(),
                ))
            }
        }
    };

    let seed = parse_usize("seed")?.unwrap_or(42) as u64;
    let oracle_count = parse_usize("oracle_count")?.unwrap_or(10);
    if oracle_count < 1 {
        return Err(ConfigError::Validation(
            "oracle_count must be at least 1".into(),
        ));
    }
    let n_range = (
        parse_usize("n_min")?.unwrap_or(1),
        parse_usize("n_max")?.unwrap_or(3),
    );
    let m_range = (
        parse_usize("m_min")?.unwrap_or(1),
        parse_usize("m_max")?.unwrap_or(3),
    );
    for (label, (lo, hi)) in [("n", n_range), ("m", m_range)] {
        if lo < 1 || hi < lo {
            return Err(ConfigError::Validation(format!(
                "{label}_min/{label}_max must satisfy 1 <= min <= max"
            )));
        }
    }
    let out = get("out").map(|(_, v)| v.to_string());
    let dump = get("dump").map(|(_, v)| v.to_string());

    let echo: BTreeMap<String, String> = kv.into_iter().map(|(k, (_, v))| (k, v)).collect();

    Ok(RunConfig {
        mode,
        domain,
        order,
        degree,
        cells,
        lambda_grid,
        seed,
        oracle_count,
        n_range,
        m_range,
        out,
        dump,
        echo,
    })
}
