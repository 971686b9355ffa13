//! Named functions, laws and polymer test functions accepted on the command line.

use std::path::Path;
use std::sync::Arc;

use nsens::polymer::{three_point_law, SpaceTimeFunction, TestFunction2D};
use nsens::prob::{FiniteLaw, ProductSpace, TabulatedFunction};
use nsens::rng::Stream;
use serde::Deserialize;

use crate::error::CliError;

fn bad(what: &str, spec: &str) -> CliError {
    CliError::config(format!("cannot parse {what} `{spec}`"))
}

fn split_name(spec: &str) -> (&str, Option<usize>) {
    let cut = spec.find(|c: char| c.is_ascii_digit()).unwrap_or(spec.len());
    let (name, digits) = spec.split_at(cut);
    (name, digits.parse().ok())
}

fn cube(n: usize) -> Result<Arc<ProductSpace>, CliError> {
    Ok(Arc::new(ProductSpace::iid(FiniteLaw::rademacher(), n)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LawFile {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    laws: Vec<LawFile>,
    values: Vec<f64>,
}

/// Functions selected by name:
///
/// * `majN`, `parityN`: ±1 valued on `N` signs;
/// * `dictatorN`, `andN`, `orN`: 0/1 valued;
/// * `tribesWxM`: OR of `M` ANDs of width `W`;
/// * `random-boolean:N`, `random-real:N:K`: random tables drawn from the stream `(seed, index)`;
/// * `file:PATH`: JSON with `laws` and row-major `values`.
pub fn function(spec: &str, seed: u64, index: u64) -> Result<TabulatedFunction, CliError> {
    if let Some(path) = spec.strip_prefix("file:") {
        return function_file(Path::new(path));
    }
    if let Some(rest) = spec.strip_prefix("random-boolean:") {
        let n: usize = rest.parse().map_err(|_| bad("function", spec))?;
        let mut s = Stream::new(seed, index);
        let space = cube(n)?;
        let values = (0..space.check_enumerable()?).map(|_| (s.uniform() < 0.5) as u8 as f64).collect();
        return Ok(TabulatedFunction::from_values(space, values)?);
    }
    if let Some(rest) = spec.strip_prefix("random-real:") {
        let parts: Vec<usize> = rest.split(':').map(|p| p.parse()).collect::<Result<_, _>>().map_err(|_| bad("function", spec))?;
        let [n, k] = parts[..] else { return Err(bad("function", spec)) };
        let mut s = Stream::new(seed, index);
        let laws = (0..n)
            .map(|_| {
                let size = 2 + (s.uniform() * (k.max(2) - 1) as f64) as usize;
                let w: Vec<f64> = (0..size).map(|_| 0.1 + s.uniform()).collect();
                let total: f64 = w.iter().sum();
                FiniteLaw::new((0..size).map(|a| a as f64).collect(), w.iter().map(|x| x / total).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let space = Arc::new(ProductSpace::new(laws)?);
        let values = (0..space.check_enumerable()?).map(|_| 2.0 * s.uniform() - 1.0).collect();
        return Ok(TabulatedFunction::from_values(space, values)?);
    }
    if let Some(rest) = spec.strip_prefix("tribes") {
        let (w, m) = rest.split_once('x').ok_or_else(|| bad("function", spec))?;
        let (w, m): (usize, usize) = (w.parse().map_err(|_| bad("function", spec))?, m.parse().map_err(|_| bad("function", spec))?);
        return Ok(TabulatedFunction::from_fn(cube(w * m)?, |x| {
            x.chunks(w).any(|b| b.iter().all(|&v| v > 0.0)) as u8 as f64
        })?);
    }
    let (name, n) = split_name(spec);
    let n = n.filter(|&n| n > 0).ok_or_else(|| bad("function", spec))?;
    let space = cube(n)?;
    let f = match name {
        "maj" if n % 2 == 1 => TabulatedFunction::from_fn(space, |x| x.iter().sum::<f64>().signum())?,
        "parity" => TabulatedFunction::from_fn(space, |x| x.iter().product())?,
        "dictator" => TabulatedFunction::from_fn(space, |x| (x[0] > 0.0) as u8 as f64)?,
        "and" => TabulatedFunction::from_fn(space, |x| x.iter().all(|&v| v > 0.0) as u8 as f64)?,
        "or" => TabulatedFunction::from_fn(space, |x| x.iter().any(|&v| v > 0.0) as u8 as f64)?,
        _ => return Err(bad("function", spec)),
    };
    Ok(f)
}

fn function_file(path: &Path) -> Result<TabulatedFunction, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let file: FunctionFile = serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let laws = file.laws.into_iter().map(|l| FiniteLaw::new(l.atoms, l.probs)).collect::<Result<Vec<_>, _>>()?;
    Ok(TabulatedFunction::from_values(Arc::new(ProductSpace::new(laws)?), file.values)?)
}

/// Laws: `rademacher`, `three-point`, `binary:P` (±1 with `P(+1) = P`),
/// `uniform:K`, or `custom:a/p,a/p,...`.
pub fn law(spec: &str) -> Result<FiniteLaw, CliError> {
    let law = match spec {
        "rademacher" => FiniteLaw::rademacher(),
        "three-point" => three_point_law(),
        _ => {
            let (kind, arg) = spec.split_once(':').ok_or_else(|| bad("law", spec))?;
            match kind {
                "binary" => FiniteLaw::binary(-1.0, 1.0, arg.parse().map_err(|_| bad("law", spec))?)?,
                "uniform" => FiniteLaw::uniform_range(arg.parse().map_err(|_| bad("law", spec))?)?,
                "custom" => {
                    let mut atoms = Vec::new();
                    let mut probs = Vec::new();
                    for pair in arg.split(',') {
                        let (a, p) = pair.split_once('/').ok_or_else(|| bad("law", spec))?;
                        atoms.push(a.trim().parse().map_err(|_| bad("law", spec))?);
                        probs.push(p.trim().parse().map_err(|_| bad("law", spec))?);
                    }
                    FiniteLaw::new(atoms, probs)?
                }
                _ => return Err(bad("law", spec)),
            }
        }
    };
    Ok(law)
}

fn numbers(spec: &str, arg: &str) -> Result<Vec<f64>, CliError> {
    arg.split(':').map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("test function", spec))
}

/// `bump:R`, `gaussian:SCALE:R` or `square:SIDE:RAMP`.
pub fn test_function(spec: &str) -> Result<TestFunction2D, CliError> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| bad("test function", spec))?;
    let v = numbers(spec, arg)?;
    let positive = v.iter().all(|&x| x > 0.0 && x.is_finite());
    match (kind, &v[..]) {
        ("bump", &[r]) if positive => Ok(TestFunction2D::bump(r)),
        ("gaussian", &[s, r]) if positive => Ok(TestFunction2D::gaussian_bump(s, r)),
        ("square", &[side, ramp]) if positive => Ok(TestFunction2D::smoothed_square(side, ramp)),
        _ => Err(bad("test function", spec)),
    }
}

/// `bump:T0:T1:R`.
pub fn space_time_function(spec: &str) -> Result<SpaceTimeFunction, CliError> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| bad("space-time function", spec))?;
    match (kind, &numbers(spec, arg)?[..]) {
        ("bump", &[t0, t1, r]) if t0 < t1 && r > 0.0 => Ok(SpaceTimeFunction::bump(t0, t1, r)),
        _ => Err(bad("space-time function", spec)),
    }
}

/// `A:B[:K]`: `K` log-spaced points per decade from `A` to `B` (default 4), or a comma list.
pub fn t_grid(spec: &str) -> Result<Vec<u64>, CliError> {
    let err = || bad("t grid", spec);
    if !spec.contains(':') {
        return spec.split(',').map(|p| p.trim().parse::<f64>().map(|v| v as u64).map_err(|_| err())).collect();
    }
    let parts = spec.split(':').map(|p| p.parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| err())?;
    let (a, b, k) = match parts[..] {
        [a, b] => (a, b, 4.0),
        [a, b, k] => (a, b, k),
        _ => return Err(err()),
    };
    if !(a >= 1.0 && b >= a && k >= 1.0) {
        return Err(err());
    }
    let steps = ((b / a).log10() * k).round() as usize;
    let mut out: Vec<u64> = (0..=steps)
        .map(|i| (a * 10f64.powf(i as f64 / k)).round() as u64)
        .collect();
    out.dedup();
    Ok(out)
}
