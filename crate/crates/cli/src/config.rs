//! Run configuration: defaults, file loading, flag overlay.

use serde::{Deserialize, Serialize};

use crate::{CliError, Opts};

/// Complete description of one run.  Every field has a default, so partial
/// config files are fine; serializing the effective config and feeding it
/// back reproduces the run exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the config drives; must match the one on the command line.
    pub command: String,
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub half_width: f64,
    pub points: usize,
    pub state: String,
    pub seed: u64,
    pub symbol: String,
    pub route: String,
    pub emit: String,
    pub count: usize,
    pub remove_shift: bool,
    pub mode: String,
    pub integrator: String,
    pub delta_tau: f64,
    pub tau_end: f64,
    pub samples: usize,
    /// 0 picks the library default.
    pub hermite_count: usize,
    pub fit_rate: bool,
    pub de2_mhz: f64,
    pub level: u32,
    pub check_normalization: bool,
    pub wigner: bool,
    pub out: Option<String>,
    pub json_out: Option<String>,
    pub wigner_out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            h: 1.0,
            a: 1.0,
            b: 1.0,
            half_width: 8.0,
            points: 128,
            state: "gaussian".into(),
            seed: 7,
            symbol: "harmonic:1,1".into(),
            route: "auto".into(),
            emit: "kernel".into(),
            count: 6,
            remove_shift: false,
            mode: "k1-ground".into(),
            integrator: "spectral".into(),
            // Comfortably below the finite-difference stability bound on the
            // default 128-point grid.
            delta_tau: 4e-4,
            tau_end: 1.0,
            samples: 5,
            hermite_count: 0,
            fit_rate: false,
            de2_mhz: 1058.0,
            level: 2,
            check_normalization: false,
            wigner: false,
            out: None,
            json_out: None,
            wigner_out: None,
        }
    }
}

/// Loads the config file if given, overlays the set flags, stamps the
/// subcommand name.  A config written for a different subcommand is
/// rejected rather than silently reinterpreted.
pub fn effective(command: &str, opts: Opts) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {path}: {e}"))
            })?;
            let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("config {path} does not parse: {e}"))
            })?;
            if !cfg.command.is_empty() && cfg.command != command {
                return Err(CliError::Usage(format!(
                    "config {path} drives `{}`, not `{command}`",
                    cfg.command
                )));
            }
            cfg
        }
    };
    cfg.command = command.to_string();

    macro_rules! overlay {
        ($($field:ident),* $(,)?) => {
            $(if let Some(v) = opts.$field {
                cfg.$field = v;
            })*
        };
    }
    overlay!(
        h,
        a,
        b,
        half_width,
        points,
        state,
        seed,
        symbol,
        route,
        emit,
        count,
        remove_shift,
        mode,
        integrator,
        delta_tau,
        tau_end,
        samples,
        hermite_count,
        fit_rate,
        de2_mhz,
        level,
        check_normalization,
        wigner,
    );
    if opts.out.is_some() {
        cfg.out = opts.out;
    }
    if opts.json_out.is_some() {
        cfg.json_out = opts.json_out;
    }
    if opts.wigner_out.is_some() {
        cfg.wigner_out = opts.wigner_out;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_flags() -> Opts {
        Opts {
            config: None,
            dump_config: false,
            h: None,
            a: None,
            b: None,
            half_width: None,
            points: None,
            state: None,
            seed: None,
            symbol: None,
            route: None,
            emit: None,
            count: None,
            remove_shift: None,
            mode: None,
            integrator: None,
            delta_tau: None,
            tau_end: None,
            samples: None,
            hermite_count: None,
            fit_rate: None,
            de2_mhz: None,
            level: None,
            check_normalization: None,
            wigner: None,
            out: None,
            json_out: None,
            wigner_out: None,
        }
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = effective("density", no_flags()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(back.command, "density");
    }

    #[test]
    fn flags_override_file_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"command":"density","points":64,"seed":3}"#).unwrap();
        let mut opts = no_flags();
        opts.config = Some(path.to_string_lossy().into_owned());
        opts.seed = Some(11);
        let cfg = effective("density", opts).unwrap();
        assert_eq!(cfg.points, 64);
        assert_eq!(cfg.seed, 11);
    }

    #[test]
    fn config_for_another_subcommand_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"command":"lamb"}"#).unwrap();
        let mut opts = no_flags();
        opts.config = Some(path.to_string_lossy().into_owned());
        match effective("density", opts) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("lamb")),
            other => panic!("expected a usage error, got {other:?}"),
        }
    }
}
