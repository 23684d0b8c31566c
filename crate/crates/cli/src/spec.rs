//! Parsers for the small command-line value languages (orders, α, β, inputs, grids).

use nalgebra::DVector;
use shiftbt::bounds::Orders;
use shiftbt::harness::{AlphaMode, BetaSpec};
use shiftbt::params::{DEFAULT_JMAX, DEFAULT_JMIN};
use shiftbt::rom::Method;
use shiftbt::PiecewiseConstantInput;

use crate::error::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn float(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| usage(format!("'{s}' is not a number")))
}

/// `--order R` for joint methods, `--orders K,L` for separate ones.
pub fn orders(method: Method, order: Option<usize>, orders: Option<&str>) -> Result<Orders, CliError> {
    match (method.is_separate(), order, orders) {
        (false, Some(r), None) => Ok(Orders::Joint(r)),
        (true, None, Some(s)) => {
            let parts: Vec<&str> = s.split(',').collect();
            let [k, l] = parts.as_slice() else {
                return Err(usage(format!("--orders expects K,L, got '{s}'")));
            };
            let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| usage(format!("bad order '{v}'")));
            Ok(Orders::Separate { k: parse(k)?, l: parse(l)? })
        }
        (false, _, _) => Err(usage(format!("{method} needs --order R"))),
        (true, _, _) => Err(usage(format!("{method} needs --orders K,L"))),
    }
}

/// `heur-fro | heur-spec | sample | optimize | VALUE`.
pub fn alpha(s: &str) -> Result<AlphaMode, CliError> {
    Ok(match s {
        "heur-fro" => AlphaMode::HeuristicFro,
        "heur-spec" => AlphaMode::HeuristicSpectral,
        "sample" => AlphaMode::Sample { jmin: DEFAULT_JMIN, jmax: DEFAULT_JMAX },
        "optimize" => AlphaMode::Optimize { jmin: DEFAULT_JMIN, jmax: DEFAULT_JMAX },
        v => {
            let a = float(v)?;
            if !(a > 0.0 && a.is_finite()) {
                return Err(usage(format!("alpha must be positive, got {a}")));
            }
            AlphaMode::Fixed(a)
        }
    })
}

/// Comma-separated list of `VALUE` or `heur`.
pub fn betas(s: &str) -> Result<Vec<BetaSpec>, CliError> {
    s.split(',')
        .map(|v| match v.trim() {
            "heur" => Ok(BetaSpec::Heuristic),
            v => {
                let b = float(v)?;
                if !(b > 0.0 && b.is_finite()) {
                    return Err(usage(format!("beta must be positive, got {b}")));
                }
                Ok(BetaSpec::Value(b))
            }
        })
        .collect()
}

pub fn vector(s: &str) -> Result<DVector<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(DVector::zeros(0));
    }
    Ok(DVector::from_vec(s.split(',').map(float).collect::<Result<_, _>>()?))
}

/// One line `t,u₁,…,u_m` per breakpoint; `#` starts a comment.
pub fn input(text: &str) -> Result<PiecewiseConstantInput, CliError> {
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        breakpoints.push(float(fields.next().unwrap_or(""))?);
        values.push(DVector::from_vec(fields.map(float).collect::<Result<_, _>>()?));
    }
    PiecewiseConstantInput::new(breakpoints, values).map_err(|e| usage(format!("input: {e}")))
}

/// `STEP[,HORIZON]`; the horizon may be `auto`.
pub fn grid(s: &str) -> Result<(f64, Option<f64>), CliError> {
    let mut parts = s.split(',');
    let step = float(parts.next().unwrap_or(""))?;
    let horizon = match parts.next().map(str::trim) {
        None | Some("auto") => None,
        Some(h) => Some(float(h)?),
    };
    if parts.next().is_some() || !(step > 0.0) || horizon.is_some_and(|h| !(h > 0.0)) {
        return Err(usage(format!("--grid expects STEP,HORIZON with positive values, got '{s}'")));
    }
    Ok((step, horizon))
}
