//! `key=value` run files. Keys mirror the long flags without the dashes.

use std::path::Path;

use dce_core::{Error, ParamSpec, Result};

/// Everything a config file may set. Flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub params: ParamSpec,
    pub tau_max: Option<f64>,
    pub samples: Option<usize>,
    pub dt: Option<f64>,
    pub pipeline: Option<String>,
    pub output: Option<String>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
}

pub fn load(path: &Path) -> Result<FileConfig> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn parse(text: &str) -> Result<FileConfig> {
    let mut cfg = FileConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config {
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if cfg.params.set(&key, value).map_err(err)? {
            continue;
        }
        let number = |what: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| err(format!("`{what}`: cannot parse `{value}` ({e})")))
        };
        let count = |what: &str| -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|e| err(format!("`{what}`: cannot parse `{value}` ({e})")))
        };
        match key.as_str() {
            "tau-max" => cfg.tau_max = Some(number("tau-max")?),
            "samples" => cfg.samples = Some(count("samples")?),
            "dt" => cfg.dt = Some(number("dt")?),
            "jobs" => cfg.jobs = Some(count("jobs")?),
            "pipeline" => cfg.pipeline = Some(value.to_string()),
            "output" => cfg.output = Some(value.to_string()),
            "format" => cfg.format = Some(value.to_string()),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = parse("# run\nbeta = 2\nkappa=0.005 # coupling\n\ntau_max=3\nsamples=11\npipeline=numeric\n").unwrap();
        assert_eq!(cfg.params.beta, Some(2.0));
        assert_eq!(cfg.params.kappa, Some(0.005));
        assert_eq!(cfg.tau_max, Some(3.0));
        assert_eq!(cfg.samples, Some(11));
        assert_eq!(cfg.pipeline.as_deref(), Some("numeric"));
    }

    #[test]
    fn reports_line_numbers() {
        match parse("beta=1\nnonsense\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("colour=blue") {
            Err(Error::Config { line: 1, message }) => assert!(message.contains("colour")),
            other => panic!("{other:?}"),
        }
        assert!(parse("kappa=abc").is_err());
    }
}
