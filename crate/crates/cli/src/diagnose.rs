use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use harsanyi_core::dataset::{load_samples, report_rows, write_report, ReportRow, SCHEMA_VERSION};
use harsanyi_core::metrics::{
    aggregate_report, Aspect, Correlation, DiagnosisSide, MetricConfig, SampleDiagnostics, SamplePair, SampleResult,
};
use harsanyi_core::oracles::{MultilinearOracle, PlantConfig, RemoteConfig, RemoteOracle, ToyEmbeddingOracle};
use harsanyi_core::{CachingOracle, Error, EvalBudget, GameOracle, Result};

use crate::{exit, CliError, RunArgs, MAX_SAFE_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Multilinear(u64),
    Toy(u64),
    Remote(String),
}

impl OracleSpec {
    pub fn parse(spec: &str, default_seed: u64) -> std::result::Result<Self, String> {
        let (kind, rest) = match spec.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (spec, None),
        };
        let seed = |rest: Option<&str>| match rest {
            None => Ok(default_seed),
            Some(r) => r.parse::<u64>().map_err(|_| format!("bad oracle seed {r:?}")),
        };
        match kind {
            "multilinear" => Ok(OracleSpec::Multilinear(seed(rest)?)),
            "toy" => Ok(OracleSpec::Toy(seed(rest)?)),
            "remote" => match rest {
                Some(url) if !url.is_empty() => Ok(OracleSpec::Remote(url.to_string())),
                _ => Err("remote oracle needs a URL, e.g. remote:http://127.0.0.1:8000".into()),
            },
            _ => Err(format!(
                "unknown oracle {spec:?}; expected multilinear:<seed>, toy:<seed> or remote:<url>"
            )),
        }
    }
}

/// Builds the oracle for a dataset. Synthetic oracles need the samples to
/// register their games.
pub fn build_oracle(
    spec: &OracleSpec,
    samples: &[SamplePair],
    cache_dir: Option<&Path>,
) -> Result<Box<dyn GameOracle>> {
    Ok(match spec {
        OracleSpec::Multilinear(seed) => Box::new(MultilinearOracle::planted(*seed, samples, PlantConfig::default())),
        OracleSpec::Toy(seed) => Box::new(ToyEmbeddingOracle::from_samples(
            *seed,
            ToyEmbeddingOracle::DEFAULT_DIM,
            samples,
        )),
        OracleSpec::Remote(url) => {
            let mut config = RemoteConfig::new(url.as_str());
            config.cache_dir = cache_dir.map(Path::to_path_buf);
            Box::new(RemoteOracle::connect(config)?)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Text,
    Image,
    CrossModal,
    CorrelateText,
    CorrelateImage,
}

impl Mode {
    fn side(self) -> DiagnosisSide {
        match self {
            Mode::Text | Mode::CorrelateText => DiagnosisSide::Text,
            Mode::Image | Mode::CorrelateImage => DiagnosisSide::Image,
            Mode::CrossModal => DiagnosisSide::CrossModal,
        }
    }

    fn correlates(self) -> bool {
        matches!(self, Mode::CorrelateText | Mode::CorrelateImage)
    }
}

fn model_label(oracle: &dyn GameOracle) -> String {
    let m = oracle.metadata();
    match m.extra.get("masking_mode").or_else(|| m.extra.get("masking")) {
        Some(mode) => format!("{};masking={mode}", m.name),
        None => m.name,
    }
}

pub(crate) fn cmd_diagnose(
    args: &RunArgs,
    mode: Mode,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<i32, CliError> {
    if args.budget > MAX_SAFE_BUDGET && !args.unsafe_budget {
        return Err(CliError::Usage(format!(
            "--budget {} exceeds {MAX_SAFE_BUDGET}; pass --unsafe-budget to allow it",
            args.budget
        )));
    }
    if args.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let spec = OracleSpec::parse(&args.oracle, args.seed).map_err(CliError::Usage)?;
    let start = Instant::now();

    let loaded = load_samples(&args.dataset, SCHEMA_VERSION, args.strict)?;
    if !loaded.skipped.is_empty() {
        writeln!(err, "skipped {} invalid sample(s)", loaded.skipped.len())?;
        for e in &loaded.skipped {
            writeln!(err, "  {e}")?;
        }
    }
    let samples = loaded.samples;
    if mode.correlates() && samples.len() < 2 {
        return Err(Error::SeriesLength {
            left: samples.len(),
            right: samples.len(),
        }
        .into());
    }
    let dataset_name = args.dataset_name.clone().unwrap_or_else(|| {
        args.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });

    let oracle = CachingOracle::new(build_oracle(&spec, &samples, args.cache_dir.as_deref())?);
    let model = model_label(&oracle);
    writeln!(
        err,
        "oracle {model}; {} sample(s) from {}",
        samples.len(),
        args.dataset.display()
    )?;

    let config = MetricConfig {
        include_empty_in_normalizer: args.include_empty_in_normalizer,
        budget: EvalBudget::new(args.budget),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let side = mode.side();
    let results: Vec<Result<SampleResult>> = pool.install(|| {
        samples
            .par_iter()
            .map(|s| SampleDiagnostics::new(s, &oracle, config).diagnose(side))
            .collect()
    });
    let results: Vec<SampleResult> = results.into_iter().collect::<Result<_>>()?;
    writeln!(
        err,
        "diagnosed {} sample(s) with {} oracle call(s) in {:.2?}",
        results.len(),
        oracle.calls(),
        start.elapsed()
    )?;

    let mut by_aspect: BTreeMap<Aspect, Vec<SampleResult>> = BTreeMap::new();
    for r in results {
        by_aspect.entry(r.aspect).or_default().push(r);
    }
    if by_aspect.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for (aspect, results) in &by_aspect {
        let report = aggregate_report(results)?;
        if mode.correlates() {
            for (sel, c) in &report.correlations {
                match c {
                    Correlation::Value { rho, n } => writeln!(out, "{aspect}\trho_{}\t{rho}\t{n}", sel.label())?,
                    Correlation::ZeroVariance { n } => {
                        writeln!(out, "{aspect}\trho_{}\tzero_variance\t{n}", sel.label())?
                    }
                }
            }
        } else {
            for (family, metric) in &report.argmax {
                let mean = report.means[metric].mean;
                writeln!(out, "{aspect}\t{}\t{metric}\t{mean}", family.name())?;
            }
        }
        let all = report_rows(&report, &model, &dataset_name);
        rows.extend(all.into_iter().filter(|r| {
            let xy = r.metric.starts_with("X^") || r.metric.starts_with("Y^") || r.metric.starts_with("rho_");
            xy == mode.correlates()
        }));
    }
    write_report(&rows, &args.out)?;
    writeln!(err, "wrote {} row(s) to {}", rows.len(), args.out.display())?;
    Ok(exit::OK)
}
