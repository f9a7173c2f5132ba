use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use mllkm::bench::{run_bench, train_mllkm_observed, BenchConfig, BenchResult, Method, TrainConfig};
use mllkm::data::{
    gen_piecewise, load_csv, load_csv_unlabeled, load_libsvm, load_libsvm_with_dim, write_libsvm, Dataset,
};
use mllkm::mkl::MklConfig;
use mllkm::model::{label_of, MllkmModel};
use mllkm::sdca::SdcaConfig;
use ndarray::Array2;

use crate::{Baseline, BenchCmd, DataArgs, Format, ModelArgs, PredictCmd, SynthCmd, TrainCmd};

fn load_labeled(args: &DataArgs) -> Result<Dataset> {
    let data = match args.format {
        Format::Libsvm => load_libsvm(&args.data)?,
        Format::Csv => load_csv(&args.data, args.label_column.unwrap_or(0))?,
    };
    Ok(data)
}

fn train_config(args: &ModelArgs) -> TrainConfig {
    TrainConfig {
        family: args.family,
        scope: args.scope,
        gammas: args.gammas.clone(),
        mkl: MklConfig {
            sdca: SdcaConfig {
                c: args.c,
                epochs: args.epochs,
                seed: args.seed,
                ..SdcaConfig::default()
            },
            batch_size: args.batch,
            cache_budget: args.budget,
            reprocess: args.reprocess.on(),
            ..MklConfig::default()
        },
        standardize: args.standardize.on(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn train(cmd: &TrainCmd) -> Result<ExitCode> {
    let data = load_labeled(&cmd.data)?;
    let config = train_config(&cmd.model);
    let mut log = cmd.log.as_deref().map(create).transpose()?;
    let mut log_error = None;
    let trained = train_mllkm_observed(&data, &config, |record| {
        if let (Some(out), None) = (log.as_mut(), &log_error) {
            let line = serde_json::to_string(record).expect("records serialize");
            if let Err(e) = writeln!(out, "{line}") {
                log_error = Some(e);
            }
        }
    })?;
    if let Some(e) = log_error {
        return Err(e).context("writing the training log");
    }
    if let Some(mut out) = log {
        out.flush().context("writing the training log")?;
    }
    trained.model.save(&cmd.out)?;

    let result = &trained.result;
    println!("kernels: {}", trained.model.anchors().len());
    println!("objective: {}", result.objective);
    println!("support vectors: {}", trained.model.metadata.support_vectors);
    println!("outer iterations: {}", result.outer_iterations);
    println!("converged: {}", result.converged);
    if result.budget_exhausted {
        println!("note: stopped with a full kernel cache; try a larger --budget");
    }
    if cmd.strict && !result.converged {
        eprintln!("error: the solver did not converge");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn predict(cmd: &PredictCmd) -> Result<ExitCode> {
    let model = MllkmModel::load(&cmd.model)?;
    let (features, labels): (Array2<f64>, Option<Vec<f64>>) = match (cmd.data.format, cmd.data.label_column) {
        (Format::Libsvm, _) => {
            let data = load_libsvm_with_dim(&cmd.data.data, model.dim())?;
            (data.features().clone(), Some(data.labels().to_vec()))
        }
        (Format::Csv, Some(col)) => {
            let data = load_csv(&cmd.data.data, col)?;
            (data.features().clone(), Some(data.labels().to_vec()))
        }
        (Format::Csv, None) => (load_csv_unlabeled(&cmd.data.data)?, None),
    };
    if features.ncols() != model.dim() {
        bail!(
            "the model expects {} features but {} has {}",
            model.dim(),
            cmd.data.data.display(),
            features.ncols()
        );
    }

    let mut out = create(&cmd.out)?;
    let mut correct = 0usize;
    for (i, row) in features.rows().into_iter().enumerate() {
        let score = model.predict_score(&row.to_vec())?;
        let label = label_of(score);
        writeln!(out, "{score}\t{}", if label > 0.0 { "+1" } else { "-1" })?;
        if labels.as_ref().is_some_and(|y| y[i] == label) {
            correct += 1;
        }
    }
    out.flush()?;
    if labels.is_some() {
        let n = features.nrows();
        println!("accuracy: {:.4} ({correct}/{n})", correct as f64 / n as f64);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_table(title: &str, result: &BenchResult) {
    println!("{title}");
    println!(
        "{:>5} {:>9} {:>9} {:>12} {:>8} {:>6}",
        "split", "accuracy", "train_s", "infer_us", "kernels", "svs"
    );
    for r in &result.records {
        println!(
            "{:>5} {:>9.2} {:>9.3} {:>12.3} {:>8} {:>6}",
            r.split,
            100.0 * r.accuracy,
            r.train_s,
            r.infer_us_per_sample,
            r.kernels,
            r.svs
        );
    }
    let (m, s) = (result.mean(), result.std());
    println!(
        "{:>5} {:>9.2} {:>9.3} {:>12.3} {:>8.1} {:>6.1}",
        "mean",
        100.0 * m.accuracy,
        m.train_s,
        m.infer_us_per_sample,
        m.kernels,
        m.svs
    );
    println!(
        "{:>5} {:>9.2} {:>9.3} {:>12.3} {:>8.1} {:>6.1}",
        "std",
        100.0 * s.accuracy,
        s.train_s,
        s.infer_us_per_sample,
        s.kernels,
        s.svs
    );
    if result.unconverged > 0 {
        println!(
            "{} of {} runs stopped without converging",
            result.unconverged,
            result.records.len()
        );
    }
}

fn write_bench_csv(path: &Path, result: &BenchResult) -> Result<()> {
    let out = create(path)?;
    result.write_csv(out)?;
    Ok(())
}

pub fn bench(cmd: &BenchCmd) -> Result<ExitCode> {
    let data = load_labeled(&cmd.data)?;
    let config = train_config(&cmd.model);
    let bench_config = BenchConfig {
        splits: cmd.splits,
        train_fraction: cmd.train_frac,
        seed: cmd.model.seed,
    };
    let result = run_bench(&data, &Method::Mllkm(config.clone()), &bench_config)?;
    print_table(&format!("MLLKM ({} {})", config.family, config.scope), &result);
    if let Some(path) = &cmd.out {
        write_bench_csv(path, &result)?;
    }
    if let Some(Baseline::Linear) = cmd.baseline {
        let baseline = run_bench(&data, &Method::linear_baseline(&config), &bench_config)?;
        println!();
        print_table("linear SVM", &baseline);
        if let Some(path) = &cmd.baseline_out {
            write_bench_csv(path, &baseline)?;
        }
    } else if cmd.baseline_out.is_some() {
        bail!("--baseline-out needs --baseline linear");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn synth(cmd: &SynthCmd) -> Result<ExitCode> {
    let data = gen_piecewise(cmd.n, cmd.segments, cmd.seed)?;
    let mut out = create(&cmd.out)?;
    write_libsvm(&data, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
