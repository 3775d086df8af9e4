//! The four subcommands. Each computes first and writes its files afterwards
//! from the main thread.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use l2boost::boosting::{boost_fit, BoostConfig, Variant};
use l2boost::classification::{
    cv_misclassification, preprocess_microarray, scaled_coefficients, wilcoxon_rank_genes, Classifier, CvScheme,
    ExpressionMatrix, ResponseCoding,
};
use l2boost::data::{standardize, Dataset};
use l2boost::greedy::verify_random_instances;
use l2boost::model_selection::{aicc_stop, bernoulli_aic_stop, HatBackend};
use l2boost::simulation::{run_benchmark, BenchmarkOptions, Method, OracleScope, Setting, RNG_NAME};
use serde::Serialize;

use crate::config::{
    ClassifyConfig, CodingOpt, FitConfig, FormatOpt, GreedyConfig, HatOpt, OracleOpt, SimulateConfig, StoppingOpt,
    VariantOpt,
};
use crate::CliError;

/// Non-error outcomes that still deserve a nonzero exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some benchmark cells failed; the report was still written.
    PartialFailure,
    BoundViolation,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::PartialFailure => 2,
            Status::BoundViolation => 3,
        }
    }
}

fn header<C: Serialize>(command: &str, cfg: &C) -> Result<String, CliError> {
    let body = toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(format!("l2boost {}\nrng: {RNG_NAME}\ncommand: {command}\n{body}", l2boost::VERSION))
}

fn commented(header: &str) -> String {
    header.lines().map(|l| format!("<!-- {l} -->\n")).collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn backend(h: HatOpt) -> HatBackend {
    match h {
        HatOpt::Subspace => HatBackend::Subspace,
        HatOpt::Dense => HatBackend::Dense,
    }
}

fn binary_response(d: &Dataset) -> Result<Vec<f64>, CliError> {
    let y = d.y().to_vec();
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(l2boost::Error::InvalidData("bernoulli stopping needs a 0/1 response".into()).into());
    }
    Ok(y)
}

pub fn fit(cfg: &FitConfig) -> Result<Status, CliError> {
    let d = Dataset::from_csv_path(&cfg.input, &cfg.response)?;
    let g = standardize(&d)?;
    let variant = match cfg.variant {
        VariantOpt::L2boost => Variant::L2Boost,
        VariantOpt::Fslr => Variant::Fslr,
    };
    let bc = BoostConfig { nu: cfg.nu, m_max: cfg.m_max, variant };
    bc.validate()?;
    let mut path = boost_fit(&g, &bc)?;
    let stop = match cfg.stopping {
        StoppingOpt::Aicc => Some(aicc_stop(&mut path, &g, backend(cfg.hat))?),
        StoppingOpt::Bernoulli => {
            let y = binary_response(&d)?;
            Some(bernoulli_aic_stop(&mut path, &g, &y, 0.0, backend(cfg.hat))?)
        }
        StoppingOpt::Fixed => None,
    };
    let m_hat = stop.as_ref().map_or(path.len(), |s| s.m_hat);
    let coef = path.coefficients_at(m_hat)?;
    let theta = path.theta_at(m_hat)?;

    let (label, curve): (&str, Vec<(usize, f64)>) = match &stop {
        Some(s) => (
            if cfg.stopping == StoppingOpt::Aicc { "aicc" } else { "aic_bernoulli" },
            s.criterion_values.iter().enumerate().filter_map(|(m, v)| v.map(|v| (m, v))).collect(),
        ),
        None => ("rss_over_n", (0..=path.len()).map(|m| (m, path.rss_at(m) / g.n() as f64)).collect()),
    };

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir, "coefficients.csv")?);
    w.write_record(["name", "coefficient", "scaled_coefficient"])?;
    w.write_record(["(intercept)", &coef.intercept.to_string(), ""])?;
    for j in 0..d.p() {
        w.write_record([d.column_name(j), coef.beta[j].to_string(), theta[j].to_string()])?;
    }
    w.flush()?;
    path.write_csv(create(&cfg.out_dir, "path.csv")?)?;
    let mut plot = create(&cfg.out_dir, "criterion.dat")?;
    writeln!(plot, "# m {label}")?;
    for (m, v) in &curve {
        writeln!(plot, "{m} {v}")?;
    }
    plot.flush()?;

    let head = header("fit", cfg)?;
    let summary = format!(
        "m_hat: {m_hat}\nstopping: {}\npath_length: {}\nnumerical_stop: {}\nactive: {}\nintercept: {}\n",
        label,
        path.len(),
        path.numerical_stop,
        coef.active_set.len(),
        coef.intercept
    );
    let mut report = create(&cfg.out_dir, "report.md")?;
    write!(report, "{}\n```\n{summary}```\n", commented(&head))?;
    report.flush()?;
    print!("{summary}");
    Ok(Status::Success)
}

pub fn simulate(cfg: &SimulateConfig) -> Result<Status, CliError> {
    if cfg.reps == 0 {
        return Err(l2boost::Error::InvalidConfig("reps must be positive".into()).into());
    }
    let settings = cfg.settings.iter().map(|s| Setting::parse(s)).collect::<l2boost::Result<Vec<_>>>()?;
    let methods = cfg.methods.iter().map(|s| Method::parse(s)).collect::<l2boost::Result<Vec<_>>>()?;
    let opts = BenchmarkOptions {
        boost: BoostConfig { nu: cfg.nu, m_max: cfg.m_max, variant: Variant::L2Boost },
        hat: backend(cfg.hat),
        oracle: match cfg.oracle {
            OracleOpt::PerSetting => OracleScope::PerSetting,
            OracleOpt::PerReplication => OracleScope::PerReplication,
        },
        ..Default::default()
    };
    let report = run_benchmark(&settings, &methods, cfg.reps, cfg.seed, &opts)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    if matches!(cfg.format, FormatOpt::Csv | FormatOpt::Both) {
        report.write_long_csv(create(&cfg.out_dir, "simulate.csv")?)?;
    }
    let md = report.summary_markdown(&header("simulate", cfg)?);
    if matches!(cfg.format, FormatOpt::Markdown | FormatOpt::Both) {
        let mut f = create(&cfg.out_dir, "simulate.md")?;
        f.write_all(md.as_bytes())?;
        f.flush()?;
    }
    print!("{}", md.lines().filter(|l| !l.starts_with("<!--")).collect::<Vec<_>>().join("\n"));
    println!();
    for f in &report.failures {
        eprintln!("warning: {} / {} / rep {}: {}", f.setting, f.method.name(), f.rep, f.error);
    }
    Ok(if report.failures.is_empty() { Status::Success } else { Status::PartialFailure })
}

pub fn classify(cfg: &ClassifyConfig) -> Result<Status, CliError> {
    let e = ExpressionMatrix::from_csv_path(&cfg.expression, &cfg.labels)?;
    let d = if cfg.preprocess {
        preprocess_microarray(&e)?
    } else {
        let y = e.labels.iter().map(|&l| f64::from(l)).collect();
        Dataset::with_names(e.raw.clone(), y, Some(e.gene_names.clone()))?
    };
    let coding = match cfg.coding {
        CodingOpt::ZeroOne => ResponseCoding::ZeroOne,
        CodingOpt::Centered => ResponseCoding::Centered,
    };
    let bc = BoostConfig { nu: cfg.nu, m_max: cfg.m_max, variant: Variant::L2Boost };
    bc.validate()?;
    let scheme = CvScheme { train_fraction: cfg.train_fraction, repeats: cfg.repeats, seed: cfg.seed, stratified: true };
    let cv = cv_misclassification(&d, &scheme, &bc, coding, backend(cfg.hat))?;
    let full = Classifier::fit(&d, &bc, coding, backend(cfg.hat))?;
    let scaled = scaled_coefficients(&full.coefficients, &d)?;
    let ranks = wilcoxon_rank_genes(&d)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir, "repeats.csv")?);
    w.write_record(["repeat", "test_size", "errors", "rate", "m_hat"])?;
    for (r, preds) in cv.predictions.iter().enumerate() {
        let errors = preds.iter().filter(|(i, c)| e.labels[*i] != *c).count();
        w.write_record([
            r.to_string(),
            preds.len().to_string(),
            errors.to_string(),
            cv.per_repeat[r].to_string(),
            cv.m_hats[r].to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir, "scaled_coefficients.csv")?);
    w.write_record(["name", "coefficient", "scaled_coefficient"])?;
    for s in &scaled {
        w.write_record([s.name.clone(), s.coefficient.to_string(), s.scaled.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir, "wilcoxon.csv")?);
    w.write_record(["rank", "name", "score"])?;
    for (k, &j) in ranks.ranking.iter().enumerate() {
        w.write_record([(k + 1).to_string(), d.column_name(j), ranks.scores[j].to_string()])?;
    }
    w.flush()?;

    let summary = format!(
        "misclassification_rate: {}\nrepeats: {}\nfull_data_m_hat: {}\nselected_genes: {}\n",
        cv.rate,
        cv.per_repeat.len(),
        full.stop.m_hat,
        scaled.len()
    );
    let mut report = create(&cfg.out_dir, "report.md")?;
    write!(report, "{}\n```\n{summary}```\n", commented(&header("classify", cfg)?))?;
    report.flush()?;
    print!("{summary}");
    Ok(Status::Success)
}

pub fn greedy_check(cfg: &GreedyConfig) -> Result<Status, CliError> {
    let reports = verify_random_instances(cfg.instances, cfg.b, cfg.nu, cfg.steps, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut w = csv::Writer::from_writer(create(&cfg.out_dir, "greedy.csv")?);
    w.write_record(["instance", "dim", "p", "max_ratio", "worst_step", "status"])?;
    let mut violations = 0;
    let mut first_error = None;
    for r in &reports {
        let (ratio, step, status) = match &r.result {
            Ok(b) => (b.max_ratio.to_string(), b.worst_step.to_string(), "ok"),
            Err(l2boost::Error::BoundViolation { step, norm, bound }) => {
                violations += 1;
                ((norm / bound).to_string(), step.to_string(), "violation")
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
                (String::new(), String::new(), "error")
            }
        };
        w.write_record([r.instance.to_string(), r.dim.to_string(), r.p.to_string(), ratio, step, status.into()])?;
    }
    w.flush()?;
    let worst = reports.iter().filter_map(|r| r.result.as_ref().ok()).map(|b| b.max_ratio).fold(0.0, f64::max);
    let summary = format!("instances: {}\nviolations: {violations}\nmax_ratio: {worst}\n", reports.len());
    let mut report = create(&cfg.out_dir, "report.md")?;
    write!(report, "{}\n```\n{summary}```\n", commented(&header("greedy-check", cfg)?))?;
    report.flush()?;
    print!("{summary}");
    if let Some(e) = first_error {
        return Err(e.into());
    }
    Ok(if violations > 0 { Status::BoundViolation } else { Status::Success })
}
