//! Parsing of state, observable, and initial-data specs, plus CSV import.

use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64;

use phaseobs::{
    coherent_state, hermite_state, k_mode_state, matched_gaussian_state,
    random_band_limited, synthesize, Axis, ExtendedAmplitude, ModelParams,
    ObservableSymbol, PhaseGrid, WaveFunction,
};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone)]
pub enum StateSpec {
    Gaussian,
    Hermite(usize),
    Coherent(f64, f64),
    Random,
    File(String),
}

pub fn parse_state(spec: &str) -> Result<StateSpec, CliError> {
    match spec {
        "gaussian" => return Ok(StateSpec::Gaussian),
        "random" => return Ok(StateSpec::Random),
        _ => {}
    }
    if let Some(rest) = spec.strip_prefix("hermite-") {
        if let Ok(m) = rest.parse() {
            return Ok(StateSpec::Hermite(m));
        }
    }
    if let Some(rest) = spec.strip_prefix("coherent:") {
        if let Some((q0, p0)) = parse_pair(rest) {
            return Ok(StateSpec::Coherent(q0, p0));
        }
    }
    if let Some(rest) = spec.strip_prefix("file:") {
        return Ok(StateSpec::File(rest.to_string()));
    }
    Err(CliError::Usage(format!(
        "unknown state spec {spec:?}; expected gaussian, hermite-N, \
         coherent:Q,P, random, or file:PATH"
    )))
}

fn parse_pair(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn centered_axis(cfg: &RunConfig) -> Result<Axis, CliError> {
    Ok(Axis::centered(cfg.half_width, cfg.points)?)
}

/// Builds the configured state.  Analytic states live on the configured
/// centered grid; a file state brings its own axis and the grid flags are
/// ignored.
pub fn build_state(cfg: &RunConfig, params: &ModelParams) -> Result<WaveFunction, CliError> {
    state_from_spec(&parse_state(&cfg.state)?, cfg, params)
}

fn state_from_spec(
    spec: &StateSpec,
    cfg: &RunConfig,
    params: &ModelParams,
) -> Result<WaveFunction, CliError> {
    match spec {
        StateSpec::Gaussian => Ok(matched_gaussian_state(&centered_axis(cfg)?, params)),
        StateSpec::Hermite(m) => Ok(hermite_state(&centered_axis(cfg)?, params, *m)),
        StateSpec::Coherent(q0, p0) => {
            Ok(coherent_state(&centered_axis(cfg)?, params, *q0, *p0))
        }
        StateSpec::Random => {
            Ok(random_band_limited(&centered_axis(cfg)?, params, cfg.seed))
        }
        StateSpec::File(path) => read_state_csv(Path::new(path)),
    }
}

/// Reads a state from CSV with header `x,re,im`.  The x column must be a
/// uniform even-length lattice; it becomes the state's axis.
pub fn read_state_csv(path: &Path) -> Result<WaveFunction, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read state file {}: {e}", path.display()))
    })?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "x,re,im" => {}
        _ => {
            return Err(CliError::Usage(format!(
                "state file {} must start with the header `x,re,im`",
                path.display()
            )))
        }
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut vs: Vec<Complex64> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(CliError::Usage(format!(
                "state file {} row {row}: expected three columns, got {line:?}",
                path.display()
            )));
        }
        let mut nums = [0.0f64; 3];
        for (slot, col) in nums.iter_mut().zip(&cols) {
            *slot = col.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "state file {} row {row}: {col:?} is not a number",
                    path.display()
                ))
            })?;
        }
        xs.push(nums[0]);
        vs.push(Complex64::new(nums[1], nums[2]));
    }
    if xs.len() < 8 || xs.len() % 2 != 0 {
        return Err(CliError::Usage(format!(
            "state file {} needs an even number of rows, at least 8, got {}",
            path.display(),
            xs.len()
        )));
    }
    let step = xs[1] - xs[0];
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Usage(format!(
            "state file {} x column must increase uniformly",
            path.display()
        )));
    }
    for (i, &x) in xs.iter().enumerate() {
        let expect = xs[0] + i as f64 * step;
        if (x - expect).abs() > 1e-9 * step.max(1.0) {
            return Err(CliError::Usage(format!(
                "state file {} x column is not uniform at row {}",
                path.display(),
                i + 2
            )));
        }
    }
    let axis = Axis::new(xs[0], step, xs.len())?;
    Ok(WaveFunction::new(axis, Array1::from(vs))?)
}

pub fn parse_symbol(spec: &str) -> Result<ObservableSymbol, CliError> {
    let terms: Option<Vec<(f64, u32, u32)>> = match spec {
        "1" => Some(vec![(1.0, 0, 0)]),
        "q" => Some(vec![(1.0, 1, 0)]),
        "p" => Some(vec![(1.0, 0, 1)]),
        "q^2" | "q2" => Some(vec![(1.0, 2, 0)]),
        "p^2" | "p2" => Some(vec![(1.0, 0, 2)]),
        "q^2+p^2" | "q2+p2" => Some(vec![(1.0, 2, 0), (1.0, 0, 2)]),
        _ => None,
    };
    if let Some(terms) = terms {
        return Ok(ObservableSymbol::polynomial(terms)?);
    }
    if let Some(rest) = spec.strip_prefix("harmonic:") {
        if let Some((mass, omega)) = parse_pair(rest) {
            return Ok(ObservableSymbol::harmonic(mass, omega)?);
        }
    }
    if let Some(rest) = spec.strip_prefix("coulomb:") {
        if let Ok(e_sq) = rest.trim().parse::<f64>() {
            return Ok(ObservableSymbol::coulomb(e_sq)?);
        }
    }
    if let Some(rest) = spec.strip_prefix("poly:") {
        let mut terms = Vec::new();
        for term in rest.split(';') {
            let cols: Vec<&str> = term.split(',').collect();
            let parsed = (|| -> Option<(f64, u32, u32)> {
                if cols.len() != 3 {
                    return None;
                }
                Some((
                    cols[0].trim().parse().ok()?,
                    cols[1].trim().parse().ok()?,
                    cols[2].trim().parse().ok()?,
                ))
            })();
            match parsed {
                Some(t) => terms.push(t),
                None => {
                    return Err(CliError::Usage(format!(
                        "polynomial term {term:?} must be COEFF,QPOW,PPOW"
                    )))
                }
            }
        }
        return Ok(ObservableSymbol::polynomial(terms)?);
    }
    Err(CliError::Usage(format!(
        "unknown symbol spec {spec:?}; expected q, p, q^2, p^2, q^2+p^2, 1, \
         harmonic:M,W, coulomb:E2, or poly:C,I,J[;C,I,J...]"
    )))
}

pub fn harmonic_parts(sym: &ObservableSymbol) -> Option<(f64, f64)> {
    match sym {
        ObservableSymbol::Harmonic { mass, omega } => Some((*mass, *omega)),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub enum ModeSpec {
    Fiber { k: i32, m: usize },
    State(StateSpec),
}

/// Initial data for diffusion: a bare fiber mode (`k1-ground`, `k2-m3`,
/// negative k as `k-1-m0`) or any state spec, which is lifted first.
pub fn parse_mode(spec: &str) -> Result<ModeSpec, CliError> {
    if let Some(rest) = spec.strip_prefix('k') {
        // The level separator is the last '-', so signed k survives.
        if let Some(idx) = rest.rfind('-') {
            let (k_str, level) = (&rest[..idx], &rest[idx + 1..]);
            if let Ok(k) = k_str.parse::<i32>() {
                let m = match level {
                    "ground" => Some(0),
                    other => other.strip_prefix('m').and_then(|d| d.parse().ok()),
                };
                if let (Some(m), true) = (m, k != 0) {
                    return Ok(ModeSpec::Fiber { k, m });
                }
            }
        }
    }
    parse_state(spec).map(ModeSpec::State).map_err(|_| {
        CliError::Usage(format!(
            "unknown mode spec {spec:?}; expected kK-ground, kK-mM, or a \
             state spec (gaussian, hermite-N, coherent:Q,P, random, file:PATH)"
        ))
    })
}

/// Builds the initial extended amplitude for a diffusion run.
pub fn build_initial(
    cfg: &RunConfig,
    params: &ModelParams,
) -> Result<ExtendedAmplitude, CliError> {
    match parse_mode(&cfg.mode)? {
        ModeSpec::Fiber { k, m } => {
            let grid = PhaseGrid::conjugate(centered_axis(cfg)?, params.h)?;
            Ok(k_mode_state(&grid, params, k, m, 1.0)?)
        }
        ModeSpec::State(spec) => {
            let psi = state_from_spec(&spec, cfg, params)?;
            let grid = PhaseGrid::conjugate(*psi.axis(), params.h)?;
            Ok(synthesize(&psi, params, &grid)?.into_extended())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_specs_parse_with_signed_k() {
        match parse_mode("k1-ground").unwrap() {
            ModeSpec::Fiber { k: 1, m: 0 } => {}
            other => panic!("unexpected: {other:?}"),
        }
        match parse_mode("k-2-m3").unwrap() {
            ModeSpec::Fiber { k: -2, m: 3 } => {}
            other => panic!("unexpected: {other:?}"),
        }
        match parse_mode("gaussian").unwrap() {
            ModeSpec::State(StateSpec::Gaussian) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(parse_mode("k0-ground").is_err());
    }

    #[test]
    fn state_csv_round_trips_through_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.csv");
        let axis = Axis::centered(4.0, 16).unwrap();
        let mut text = String::from("x,re,im\n");
        for i in 0..axis.len {
            let x = axis.value(i);
            text.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x, x.cos(), x.sin()));
        }
        std::fs::write(&path, text).unwrap();
        let psi = read_state_csv(&path).unwrap();
        assert_eq!(psi.axis().len, 16);
        assert!((psi.axis().step - axis.step).abs() < 1e-15);
        assert!((psi.values()[3].re - axis.value(3).cos()).abs() < 1e-15);
    }

    #[test]
    fn ragged_state_csv_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.csv");
        std::fs::write(&path, "x,re,im\n0.0,1.0\n").unwrap();
        match read_state_csv(&path) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("three columns")),
            other => panic!("expected a usage error, got {other:?}"),
        }
    }
}
