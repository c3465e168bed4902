use std::fs;
use std::path::Path;

use polysample::{EdgeLengths, Error, RhoChoice, RiemannWeights, SamplerConfig};

use crate::PolygonArgs;

pub const USAGE: u8 = 2;
pub const SAMPLER: u8 = 3;
pub const BUDGET: u8 = 4;
pub const VERIFICATION: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => BUDGET,
            Error::AbortAfterRedraws { .. } | Error::NonConvergence { .. } | Error::Unstable | Error::ZeroWeightSum => {
                SAMPLER
            }
            _ => USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            // the reader went away; nothing left to report
            return Self {
                code: 0,
                message: String::new(),
            };
        }
        Self::usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_numbers(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::usage(format!("{}: '{t}' is not a number", path.display())))
        })
        .collect()
}

pub fn edgelengths(args: &PolygonArgs) -> CliResult<EdgeLengths> {
    let r = match &args.edgelengths {
        Some(path) => {
            let r = EdgeLengths::new(read_numbers(path)?)?;
            if let Some(n) = args.n.filter(|&n| n != r.len()) {
                return Err(CliError::usage(format!(
                    "--n {n} but {} edgelengths in {}",
                    r.len(),
                    path.display()
                )));
            }
            r
        }
        None => {
            let n = args
                .n
                .ok_or_else(|| CliError::usage("--n is required without --edgelengths"))?;
            EdgeLengths::equilateral(n)?
        }
    };
    Ok(r)
}

pub fn rho(spec: &str) -> CliResult<RhoChoice> {
    Ok(match spec {
        "sqrt-r" => RhoChoice::SqrtR,
        "r" => RhoChoice::R,
        path => RhoChoice::Custom(RiemannWeights::new(read_numbers(Path::new(path))?)?),
    })
}

pub fn sampler_config(args: &PolygonArgs) -> CliResult<SamplerConfig> {
    let config = SamplerConfig::new(edgelengths(args)?, args.d)?
        .with_rho(rho(&args.rho)?)
        .with_seed(args.seed)
        .with_quotient(args.quotient)
        .with_chunk_size(args.chunk_size);
    config.validate()?;
    Ok(config)
}

pub fn init_threads(args: &PolygonArgs) -> CliResult<()> {
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}
