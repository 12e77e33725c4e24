use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use driftmix::config::DEFAULT_DIMENSION;
use driftmix::features::{read_features_file, FeatureTable};
use driftmix::harness::{
    generate_stream, run_inter_class, run_intra_class, run_memory_tracking, run_retention,
    DriftData, ExperimentReport, StreamSpec, DEFAULT_PARTS, Z_FACTOR,
};
use driftmix::{
    AdaptiveModel, InitialVariance, ModelConfig, ModelSnapshot, PcaModel, PcaSnapshot, RunTrace,
};

use crate::args::{Command, ExperimentArgs, FitPcaArgs, GenArgs, ModelArgs, Protocol, RunArgs};

/// Capacities compared against the unconstrained mixture when retention runs
/// without `--k`.
const RETENTION_CAPACITIES: [usize; 3] = [4, 5, 6];
const RETENTION_CYCLES: [usize; 2] = [4, 5];

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::FitPca(a) => fit_pca(&a),
        Command::Run(a) => run(&a),
        Command::Experiment(a) => experiment(&a),
        Command::Gen(a) => gen(&a),
    }
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    read_features_file(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Builds the model configuration from the file and flag overrides.
/// `default_z` applies only when no configuration file is given. A
/// `dimension` of `None` means the input carried no feature columns.
fn model_config(
    args: &ModelArgs,
    dimension: Option<usize>,
    default_z: Option<InitialVariance>,
) -> Result<ModelConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ModelConfig::parse_kv(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let mut cfg = ModelConfig::uagmm(dimension.unwrap_or(DEFAULT_DIMENSION));
            if let Some(z) = default_z {
                cfg.z = z;
            }
            cfg
        }
    };
    if let Some(k) = args.k {
        cfg.capacity = Some(k);
        cfg.merge_enabled = false;
    }
    if args.uagmm {
        cfg.capacity = None;
        cfg.merge_enabled = true;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(d) = dimension.filter(|&d| d != cfg.dimension) {
        bail!(
            "model dimension {} does not match the {d}-dimensional input",
            cfg.dimension
        );
    }
    Ok(cfg.validate()?)
}

fn fit_pca(a: &FitPcaArgs) -> Result<()> {
    let table = read_table(&a.input)?;
    let model = PcaModel::fit(&table.values(), a.dims)?;
    let total: f64 = model.explained_variance.iter().sum();
    PcaSnapshot::new(model.clone())
        .save(&a.output)
        .with_context(|| format!("writing {}", a.output.display()))?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "component,explained_variance,ratio,cumulative")?;
    let mut cumulative = 0.0;
    for (i, v) in model.explained_variance.iter().enumerate() {
        let ratio = if total > 0.0 { v / total } else { 0.0 };
        cumulative += ratio;
        writeln!(out, "{},{v:?},{ratio:?},{cumulative:?}", i + 1)?;
    }
    Ok(())
}

fn default_snapshot_path(trace: &Path) -> PathBuf {
    trace.with_extension("snapshot.json")
}

/// Without a configuration file new modes get `Z_FACTOR` times the variance
/// of the first of `DEFAULT_PARTS` parts of the input, the same rule the
/// experiment protocols use.
fn default_run_z(table: &FeatureTable, pca: Option<&PcaModel>) -> Result<Option<InitialVariance>> {
    let head = table.rows.len() / DEFAULT_PARTS;
    if head < 2 {
        return Ok(None);
    }
    let mut rows = Vec::with_capacity(head);
    for (idx, row) in table.rows[..head].iter().enumerate() {
        let values = match pca {
            Some(p) => p
                .transform(&row.values)
                .with_context(|| format!("row {}", idx + 1))?
                .into_inner(),
            None => row.values.clone(),
        };
        rows.push(values);
    }
    Ok(Some(InitialVariance::scaled_sample_variance(
        &rows, Z_FACTOR,
    )?))
}

fn run(a: &RunArgs) -> Result<()> {
    let table = read_table(&a.input)?;
    let pca = match &a.pca {
        Some(p) => Some(
            PcaSnapshot::load(p)
                .with_context(|| format!("loading {}", p.display()))?
                .model,
        ),
        None => None,
    };
    let dimension = match &pca {
        Some(p) => Some(p.output_dimension()),
        None => Some(table.dimension()).filter(|&d| d > 0),
    };
    let mut model = match &a.resume {
        Some(path) => ModelSnapshot::load(path)
            .with_context(|| format!("loading {}", path.display()))?
            .restore()?,
        None => {
            let z = default_run_z(&table, pca.as_ref())?;
            AdaptiveModel::new(model_config(&a.model, dimension, z)?)?
        }
    };
    let expected_in = pca
        .as_ref()
        .map_or(model.config().dimension, PcaModel::input_dimension);

    let mut trace = RunTrace::new();
    for (idx, row) in table.rows.iter().enumerate() {
        let row_no = idx + 1;
        if row.values.len() != expected_in {
            bail!(
                "row {row_no}: expected {expected_in} features, found {}",
                row.values.len()
            );
        }
        let scored = match &pca {
            Some(p) => model.process_sample(&p.transform(&row.values)?),
            None => model.process(&row.values),
        }
        .with_context(|| format!("row {row_no}"))?;
        let id = row.id.clone().unwrap_or_else(|| row_no.to_string());
        trace.push(id, &scored);
        trace.extend_merges(model.take_merge_events());
    }
    log::info!(
        "processed {} samples, {} modes, {} merges",
        trace.len(),
        model.mixture().len(),
        trace.merges().len()
    );

    let mut out = create(&a.output)?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &a.merges {
        let mut out = create(path)?;
        trace.write_merges_csv(&mut out)?;
        out.flush()?;
    }
    let snapshot = a
        .snapshot
        .clone()
        .unwrap_or_else(|| default_snapshot_path(&a.output));
    ModelSnapshot::capture(&model)
        .save(&snapshot)
        .with_context(|| format!("writing {}", snapshot.display()))?;
    Ok(())
}

fn load_spec(path: Option<&Path>, seed: Option<u64>) -> Result<StreamSpec> {
    let mut spec = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => StreamSpec::default(),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    Ok(spec.validate()?)
}

fn gen(a: &GenArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref(), a.seed)?;
    let stream = generate_stream(&spec)?;
    let mut out = create(&a.output)?;
    stream.write_csv(&mut out)?;
    out.flush()?;
    log::info!("wrote {} samples", stream.samples.len());
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let (data, spec) = match &a.input {
        Some(path) => (
            DriftData::from_table(&read_table(path)?, DEFAULT_PARTS)?,
            None,
        ),
        None => {
            let spec = load_spec(a.spec.as_deref(), a.seed)?;
            let stream = generate_stream(&spec)?;
            (
                DriftData::from_generated(&stream, spec.n_parts)?,
                Some(spec),
            )
        }
    };
    let dimension = data.dimension();
    let z_from_parts = data.initial_variance()?;

    let report = match a.protocol {
        Protocol::Intra => {
            let cfg = model_config(&a.model, Some(dimension), Some(z_from_parts))?;
            let parts: Vec<&[Vec<f64>]> = data.parts.iter().map(Vec::as_slice).collect();
            run_intra_class(&parts, || AdaptiveModel::new(cfg.clone()))?
        }
        Protocol::Inter => {
            let cfg = model_config(&a.model, Some(dimension), Some(z_from_parts))?;
            run_inter_class(&data.parts[0], &data.anomalies, a.repeats, &cfg)?
        }
        Protocol::Retention => {
            let configs = retention_configs(&a.model, dimension, z_from_parts)?;
            let cycles: Vec<usize> = a.cycle.map_or(RETENTION_CYCLES.to_vec(), |c| vec![c]);
            let mut report: Option<ExperimentReport> = None;
            for cycle in cycles {
                let r = run_retention(&data.parts[0], &data.anomalies, a.repeats, cycle, &configs)?;
                match &mut report {
                    Some(acc) => acc.append(r),
                    None => report = Some(r),
                }
            }
            report.expect("at least one cycle")
        }
        Protocol::Memory => {
            // A generated stream mixes all identities into the first part,
            // so its variance overstates the within-identity spread.
            let z = match &spec {
                Some(s) => {
                    InitialVariance::Scalar(Z_FACTOR * s.identity_spread * s.identity_spread)
                }
                None => z_from_parts,
            };
            let cfg = model_config(&a.model, Some(dimension), Some(z))?;
            run_memory_tracking(&data.concatenated(), &cfg)?
        }
    };

    let written = report
        .write_to_dir(&a.output)
        .with_context(|| format!("writing to {}", a.output.display()))?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &report.reentries {
        writeln!(
            out,
            "{} cycle {}: re-entry score {:?} ({})",
            r.config,
            r.cycle_len,
            r.score,
            if r.hit { "hit" } else { "miss" }
        )?;
    }
    for p in written {
        writeln!(out, "{}", p.display())?;
    }
    Ok(())
}

/// `--k` or `--uagmm` pick a single configuration; otherwise the capacity
/// sweep runs next to the unconstrained mixture.
fn retention_configs(
    args: &ModelArgs,
    dimension: usize,
    z: InitialVariance,
) -> Result<Vec<(String, ModelConfig)>> {
    if args.k.is_some() || args.uagmm {
        let cfg = model_config(args, Some(dimension), Some(z))?;
        let label = match cfg.capacity {
            Some(k) => format!("k{k}"),
            None => "uagmm".to_owned(),
        };
        return Ok(vec![(label, cfg)]);
    }
    let base = model_config(args, Some(dimension), Some(z))?;
    let mut configs: Vec<(String, ModelConfig)> = RETENTION_CAPACITIES
        .iter()
        .map(|&k| {
            let cfg = ModelConfig {
                capacity: Some(k),
                merge_enabled: false,
                ..base.clone()
            };
            (format!("k{k}"), cfg)
        })
        .collect();
    configs.push((
        "uagmm".to_owned(),
        ModelConfig {
            capacity: None,
            merge_enabled: true,
            ..base
        },
    ));
    Ok(configs)
}
