use std::io::{self, BufWriter, Write};
use std::time::Instant;

use polysample::analytic_refs::ReferencePdf;
use polysample::estimator::{HistogramAccumulator, HistogramSpec};
use polysample::oracle::{check_jacobian, random_point, MAX_EDGES};
use polysample::{run_until_ci, Error, EstimateReport, Functional, Sampler, StoppingRule};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::input::{edgelengths, init_threads, rho, sampler_config, CliError, CliResult, VERIFICATION};
use crate::output::{csv_header, write_sample};
use crate::{EstimateArgs, Format, HistogramArgs, SampleArgs, VerifyArgs};

/// Largest problem the finite-difference check accepts from the command line.
const VERIFY_MAX_N: usize = 6;
const VERIFY_MAX_D: usize = 3;
const VERIFY_TOLERANCE: f64 = 1e-5;

fn sampler(args: &crate::PolygonArgs) -> CliResult<Sampler> {
    let config = sampler_config(args)?;
    init_threads(args)?;
    Ok(Sampler::new(config)?)
}

fn parse_functional(text: &str, n: usize) -> CliResult<Functional> {
    let f: Functional = text.parse()?;
    f.validate(n)?;
    Ok(f)
}

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let sampler = sampler(&args.polygon)?;
    let start = Instant::now();
    let (n, d) = (sampler.config().n(), sampler.config().d);
    let mut out = BufWriter::new(io::stdout().lock());
    if args.format == Format::Csv {
        writeln!(out, "{}", csv_header(n, d))?;
    }

    // a few chunks per thread at a time keeps memory bounded for large counts
    let cs = sampler.config().chunk_size;
    let count = args.count;
    let total_chunks = count.div_ceil(cs) as u64;
    let round = 4 * rayon::current_num_threads() as u64;
    let len = |c: u64| cs.min(count - c as usize * cs);
    let mut first = 0;
    while first < total_chunks {
        let last = (first + round).min(total_chunks);
        for chunk in sampler.fold_chunks(first..last, len, Vec::new, |v, s| v.push(s))? {
            for s in &chunk {
                write_sample(&mut out, args.format, s)?;
            }
        }
        first = last;
    }
    out.flush()?;
    if args.polygon.verbose {
        eprintln!("wrote {count} samples in {:.3} s", start.elapsed().as_secs_f64());
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput {
    functional: String,
    mean: f64,
    ci_radius: f64,
    confidence: f64,
    n_samples: u64,
    ess: f64,
    /// Only filled in with --verbose, so default output is reproducible.
    wall_seconds: Option<f64>,
}

impl EstimateOutput {
    fn new(functional: &Functional, report: &EstimateReport, wall_seconds: Option<f64>) -> Self {
        Self {
            functional: functional.to_string(),
            mean: report.mean,
            ci_radius: report.ci_radius,
            confidence: report.confidence,
            n_samples: report.n_samples,
            ess: report.effective_sample_size,
            wall_seconds,
        }
    }
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let sampler = sampler(&args.polygon)?;
    let functional = parse_functional(&args.functional, sampler.config().n())?;
    let rule = StoppingRule {
        confidence: args.confidence,
        rel_radius: args.rel_radius,
        max_samples: args.max_samples,
        ..StoppingRule::default()
    };
    let start = Instant::now();
    let result = run_until_ci(&sampler, &functional, &rule);
    let wall = args.polygon.verbose.then(|| start.elapsed().as_secs_f64());
    let (report, failure) = match result {
        Ok(report) => (report, None),
        Err(Error::BudgetExceeded { max_samples, report }) => {
            let e = CliError::from(Error::BudgetExceeded {
                max_samples,
                report: report.clone(),
            });
            (*report, Some(e))
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, &EstimateOutput::new(&functional, &report, wall)).map_err(io::Error::from)?;
    writeln!(out)?;
    failure.map_or(Ok(()), Err)
}

pub fn histogram(args: &HistogramArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let spec = HistogramSpec::new(args.lo, args.hi, args.bins)?;
    let reference: Option<ReferencePdf> = args.reference.as_deref().map(str::parse).transpose()?;
    let sampler = sampler(&args.polygon)?;
    let functional = parse_functional(&args.functional, sampler.config().n())?;
    let r = sampler.config().r.clone();
    let start = Instant::now();
    let parts = sampler.fold_batch(
        args.count,
        || HistogramAccumulator::new(spec),
        |acc, s| acc.add(functional.eval(&s.y, &r).expect("validated functional"), s.weight),
    )?;
    let mut total = HistogramAccumulator::new(spec);
    parts.iter().for_each(|p| total.merge(p));
    let h = total.finish()?;

    let mut out = BufWriter::new(io::stdout().lock());
    write!(out, "bin_center,density,standard_error")?;
    if reference.is_some() {
        write!(out, ",reference_density")?;
    }
    writeln!(out)?;
    for k in 0..spec.bins {
        let c = spec.center(k);
        write!(out, "{c},{},{}", h.densities[k], h.standard_errors[k])?;
        if let Some(p) = reference {
            write!(out, ",{}", p.density(c))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    if args.polygon.verbose {
        eprintln!(
            "{} samples in {:.3} s; weight fraction below range {}, above range {}",
            h.n_samples,
            start.elapsed().as_secs_f64(),
            h.below_weight / h.total_weight,
            h.above_weight / h.total_weight
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct CaseRecord {
    case: usize,
    relative_error: f64,
    closed_form: f64,
    numeric: f64,
}

#[derive(Serialize)]
struct VerifySummary {
    cases: usize,
    failures: usize,
    max_relative_error: f64,
    median_relative_error: f64,
    tolerance: f64,
}

pub fn verify_jacobian(args: &VerifyArgs) -> CliResult<()> {
    let p = &args.polygon;
    let r = edgelengths(p)?;
    let n = r.len();
    if n > VERIFY_MAX_N.min(MAX_EDGES) {
        return Err(CliError::usage(format!(
            "verification supports at most {VERIFY_MAX_N} edges, got {n}"
        )));
    }
    if !(2..=VERIFY_MAX_D).contains(&p.d) {
        return Err(CliError::usage(format!(
            "verification supports d = 2 or 3, got {}",
            p.d
        )));
    }
    if args.cases == 0 {
        return Err(CliError::usage("--cases must be positive"));
    }
    let rho = rho(&p.rho)?.resolve(&r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut out = BufWriter::new(io::stdout().lock());
    let mut errors = Vec::with_capacity(args.cases);
    let mut failures = 0;
    for case in 0..args.cases {
        let (w, y) = random_point(&mut rng, &r, p.d, 0.8)?;
        let check = check_jacobian(&w, &y, &r, &rho, args.step)?;
        let record = CaseRecord {
            case,
            relative_error: check.relative_error,
            closed_form: check.closed_form,
            numeric: check.numeric,
        };
        serde_json::to_writer(&mut out, &record).map_err(io::Error::from)?;
        writeln!(out)?;
        let within = check.relative_error <= VERIFY_TOLERANCE;
        if !within {
            failures += 1;
            eprintln!("case {case} failed: w = {:?}, y = {:?}", w.coords(), y.as_slice());
        }
        errors.push(check.relative_error);
    }
    errors.sort_by(f64::total_cmp);
    let m = errors.len();
    let median = if m % 2 == 1 {
        errors[m / 2]
    } else {
        0.5 * (errors[m / 2 - 1] + errors[m / 2])
    };
    let summary = VerifySummary {
        cases: m,
        failures,
        max_relative_error: errors[m - 1],
        median_relative_error: median,
        tolerance: VERIFY_TOLERANCE,
    };
    serde_json::to_writer(&mut out, &summary).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    if failures > 0 {
        return Err(CliError {
            code: VERIFICATION,
            message: format!("{failures} of {m} cases exceed relative error {VERIFY_TOLERANCE:e}"),
        });
    }
    Ok(())
}
