//! Subcommands. Every command reads its inputs, runs one step and writes
//! its outputs atomically; all randomness comes from `--seed`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seqlab_core::calibration::{self, CalibrationTable};
use seqlab_core::completion::{self, CompletionReport};
use seqlab_core::eval::{self, Metrics};
use seqlab_core::gazetteer::{self, Gazetteer};
use seqlab_core::pipeline::{self, Components, StageEntry};
use seqlab_core::synth::{self, SynthSpec};
use seqlab_core::training::{self, TrainConfig, WslMode};
use seqlab_core::{CrfModel, LabelSeq, Sentence, StrongExample, TagSet, WeakExample};

use crate::conll::{self, RawSentence};
use crate::modelfile::{self, Provenance};
use crate::{bench, config, fsio, gaztsv};

#[derive(Debug, Parser)]
#[command(name = "seqlab", version, about = "Weakly-supervised sequence labeling")]
pub struct Args {
    /// Master seed; overrides `seed` from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `key = value` training configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides one configuration key, e.g. `--set learning_rate=0.5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Comma-separated entity types; default: types found in the inputs.
    #[arg(long, global = true, value_delimiter = ',')]
    pub types: Option<Vec<String>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMode {
    Wsl,
    Weighted,
    Partial,
    Sst,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generates a synthetic corpus and gazetteers.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        /// `key = value` corpus spec; default: the reference benchmark.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Labels sentences by gazetteer matching.
    Weaklabel {
        #[arg(long)]
        gazetteer: PathBuf,
        /// CoNLL sentences; labels are only read for `--report`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep sentences without any match.
        #[arg(long)]
        keep_unmatched: bool,
        #[arg(long)]
        case_insensitive: bool,
        /// Weak-label precision/recall against the input labels (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Trains on strong data.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Train as the pipeline's first stage (`init_epochs`, stage seed).
        #[arg(long)]
        init: bool,
        /// Loss trace JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replaces `O` weak labels by model predictions.
    Complete {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weak: PathBuf,
        /// Corrected CoNLL.
        #[arg(long)]
        out: PathBuf,
        /// Weak labels of the kept sentences, aligned with `--out`.
        #[arg(long)]
        weak_out: Option<PathBuf>,
        #[arg(long)]
        drop_mismatches: bool,
        /// Mismatch report JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fits the score-to-confidence table on labeled data.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Noise-aware training on strong and completed weak data.
    TrainNa {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        strong: PathBuf,
        /// Weak labels, aligned with `--corrected`.
        #[arg(long)]
        weak: PathBuf,
        #[arg(long)]
        corrected: PathBuf,
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        round: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Continues training on strong data.
    Finetune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        strong: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        round: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Trains a weak-supervision baseline.
    Baseline {
        #[arg(long, value_enum)]
        mode: BaselineMode,
        #[arg(long)]
        train: PathBuf,
        /// Weak CoNLL; labels are ignored by `sst`.
        #[arg(long)]
        weak: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Weak-sample weight for `weighted`.
        #[arg(long)]
        gamma: Option<f64>,
        /// Pseudo labels written by `sst`.
        #[arg(long)]
        pseudo_out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Span, token and sentence metrics against gold labels.
    Eval {
        #[arg(long, conflicts_with = "pred", required_unless_present = "pred")]
        model: Option<PathBuf>,
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        gold: PathBuf,
        /// Metrics JSON; default: stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entity span counts per type for each `NAME=PATH` source.
    Stats {
        #[arg(long = "source", value_name = "NAME=PATH", required = true)]
        sources: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs every stage end to end.
    Pipeline {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        weak: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        drop_mismatches: bool,
        /// Ablation: train on raw weak labels.
        #[arg(long)]
        no_completion: bool,
        /// Ablation: weight every weak sentence fully.
        #[arg(long)]
        no_noise_aware: bool,
        /// Writes the model after every stage into this directory.
        #[arg(long)]
        stage_models: Option<PathBuf>,
    },
    /// Every method on the reference benchmark, one corpus per seed.
    Benchmark {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Training configuration: defaults, then `--config`, `--set`, `--seed`.
pub fn train_config(args: &Args) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        cfg = config::train_config(&config::read(path)?, cfg).map_err(|e| crate::IoError::format(path, e))?;
    }
    let mut entries = Vec::new();
    for (k, o) in args.overrides.iter().enumerate() {
        let (key, value) = o
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {o:?}"))?;
        entries.push(config::Entry {
            line: k + 1,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    cfg = config::train_config(&entries, cfg).map_err(|e| anyhow::anyhow!("--set #{}: {}", e.line, e.message))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn tags_for(args: &Args, found: impl IntoIterator<Item = String>) -> Result<TagSet> {
    let types: BTreeSet<String> = match &args.types {
        Some(t) => t.iter().cloned().collect(),
        None => found.into_iter().collect(),
    };
    Ok(TagSet::new(types)?)
}

fn read_all(paths: &[&Path]) -> Result<Vec<Vec<RawSentence>>> {
    paths.iter().map(|p| Ok(conll::read(p)?)).collect()
}

fn strong(raw: &[RawSentence], tags: &TagSet, path: &Path) -> Result<Vec<StrongExample>> {
    Ok(conll::resolve_strong(raw, tags).map_err(|e| crate::IoError::format(path, e))?)
}

fn labeled(raw: &[RawSentence], tags: &TagSet, path: &Path) -> Result<Vec<(Sentence, LabelSeq)>> {
    Ok(conll::resolve(raw, tags).map_err(|e| crate::IoError::format(path, e))?)
}

fn weak_examples(raw: &[RawSentence], tags: &TagSet, path: &Path) -> Result<Vec<WeakExample>> {
    labeled(raw, tags, path)?
        .into_iter()
        .map(|(s, y)| Ok(WeakExample::new(s, y, tags)?))
        .collect()
}

fn provenance(command: &str, cfg: &TrainConfig, stage: &str) -> Provenance {
    Provenance {
        command: command.to_string(),
        config_hash: config::config_hash(cfg),
        seed: cfg.seed,
        stage: stage.to_string(),
    }
}

fn load_model(path: &Path) -> Result<CrfModel> {
    Ok(modelfile::load(path)?.0)
}

#[derive(Serialize)]
struct TrainReport<'a> {
    command: &'a str,
    config: &'a TrainConfig,
    loss_trace: &'a [f64],
}

fn write_train_report(path: Option<&Path>, command: &str, cfg: &TrainConfig, trace: &[f64]) -> Result<()> {
    if let Some(p) = path {
        fsio::write_json(
            p,
            &TrainReport {
                command,
                config: cfg,
                loss_trace: trace,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CompleteReport {
    #[serde(flatten)]
    completion: CompletionReport,
    /// Indices (0-based, input order) of sentences with BIO mismatches.
    mismatched: Vec<usize>,
}

#[derive(Serialize)]
struct CalibrationFile<'a> {
    num_bins_requested: usize,
    table: &'a CalibrationTable,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg = train_config(&args)?;
    match &args.command {
        Command::Synth { out_dir, spec } => {
            let mut s = SynthSpec::reference(cfg.seed);
            if let Some(p) = spec {
                s = config::synth_spec(&config::read(p)?, s).map_err(|e| crate::IoError::format(p, e))?;
                if let Some(seed) = args.seed {
                    s.seed = seed;
                }
            }
            let c = synth::generate(&s)?;
            let degraded = synth::degrade(&c.gazetteer, &c.tags, s.coverage, s.bias, s.seed)?;
            for (name, data) in [
                ("train", &c.train),
                ("dev", &c.dev),
                ("test", &c.test),
                ("pool", &c.pool),
            ] {
                conll::write_strong(&out_dir.join(format!("{name}.conll")), data, &c.tags)?;
            }
            gaztsv::write(&out_dir.join("gazetteer.full.tsv"), &c.gazetteer)?;
            gaztsv::write(&out_dir.join("gazetteer.tsv"), &degraded)?;
            fsio::write_json(&out_dir.join("spec.json"), &s)?;
        }
        Command::Weaklabel {
            gazetteer: gaz_path,
            input,
            out,
            keep_unmatched,
            case_insensitive,
            report,
        } => {
            let entries =
                gaztsv::parse(&fsio::read_text(gaz_path)?).map_err(|e| crate::IoError::format(gaz_path, e))?;
            let raw = conll::read(input)?;
            let mut found = conll::scan_types(&raw);
            found.extend(entries.iter().map(|e| e.ty.clone()));
            let tags = tags_for(&args, found)?;
            let gaz = Gazetteer::new(entries, &tags, *case_insensitive)?;
            let matcher = gazetteer::compile(&gaz, &tags)?;
            let sentences: Vec<Sentence> = raw
                .iter()
                .map(|r| Sentence::new(r.tokens.iter().map(String::as_str)))
                .collect::<Result<_, _>>()?;
            let weak = matcher.annotate_all(&sentences, *keep_unmatched);
            conll::write(out, weak.iter().map(|(k, y)| (&sentences[*k], y)), &tags)?;
            if let Some(p) = report {
                let gold = labeled(&raw, &tags, input)?;
                let all: Vec<LabelSeq> = sentences.iter().map(|s| matcher.annotate(s)).collect();
                let g: Vec<LabelSeq> = gold.into_iter().map(|(_, y)| y).collect();
                fsio::write_json(p, &gazetteer::weak_label_quality(&all, &g, &tags)?)?;
            }
        }
        Command::Train {
            train,
            out,
            init,
            report,
        } => {
            let raw = conll::read(train)?;
            let tags = tags_for(&args, conll::scan_types(&raw))?;
            let data = strong(&raw, &tags, train)?;
            let (run_cfg, stage) = if *init {
                let c = TrainConfig {
                    epochs: cfg.init_epochs,
                    ..cfg.for_stage("stage/init")
                };
                (c, pipeline::STAGE_INIT)
            } else {
                (cfg.clone(), "train")
            };
            let o = training::train_supervised(&tags, &data, &run_cfg)?;
            modelfile::save(out, &o.model, &provenance("train", &cfg, stage))?;
            write_train_report(report.as_deref(), "train", &cfg, &o.loss_trace)?;
        }
        Command::Complete {
            model,
            weak,
            out,
            weak_out,
            drop_mismatches,
            report,
        } => {
            let m = load_model(model)?;
            let ex = weak_examples(&conll::read(weak)?, &m.tags, weak)?;
            let (done, rep) = completion::complete_dataset(&ex, &m, *drop_mismatches || cfg.drop_mismatches)?;
            let corrected: Vec<LabelSeq> = done.iter().map(|e| e.corrected.clone().expect("completed")).collect();
            conll::write(out, done.iter().map(|e| &e.sentence).zip(&corrected), &m.tags)?;
            if let Some(p) = weak_out {
                conll::write(p, done.iter().map(|e| (&e.sentence, &e.weak)), &m.tags)?;
            }
            if let Some(p) = report {
                let mismatched = ex
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| {
                        let pred = m.decode(&e.sentence);
                        completion::complete(&e.weak, &pred)
                            .map(|c| !completion::find_bio_mismatches(&c, &m.tags).is_empty())
                            .unwrap_or(true)
                    })
                    .map(|(k, _)| k)
                    .collect();
                fsio::write_json(
                    p,
                    &CompleteReport {
                        completion: rep,
                        mismatched,
                    },
                )?;
            }
        }
        Command::Calibrate { model, dev, out, bins } => {
            let m = load_model(model)?;
            let data = conll::read_strong(dev, &m.tags)?;
            let b = bins.unwrap_or(cfg.num_bins);
            let table = calibration::fit(&m, &data, b)?;
            fsio::write_json(
                out,
                &CalibrationFile {
                    num_bins_requested: b,
                    table: &table,
                },
            )?;
        }
        Command::TrainNa {
            model,
            strong: strong_path,
            weak,
            corrected,
            calibration: cal_path,
            out,
            round,
            report,
        } => {
            let m = load_model(model)?;
            let tags = m.tags.clone();
            let s = conll::read_strong(strong_path, &tags)?;
            let w = weak_examples(&conll::read(weak)?, &tags, weak)?;
            let c = conll::read_labeled(corrected, &tags)?;
            ensure!(
                w.len() == c.len(),
                "{} has {} sentences but {} has {}",
                weak.display(),
                w.len(),
                corrected.display(),
                c.len()
            );
            let mut examples = Vec::with_capacity(w.len());
            for (k, (mut ex, (sent, y))) in w.into_iter().zip(c).enumerate() {
                if ex.sentence != sent {
                    bail!(
                        "sentence {} differs between {} and {}",
                        k + 1,
                        weak.display(),
                        corrected.display()
                    );
                }
                ex.corrected = Some(y);
                examples.push(ex);
            }
            let table = read_calibration(cal_path)?;
            calibration::attach_confidences(&table, &m, &mut examples);
            let stage_cfg = cfg.for_stage(&format!("stage/{}/round{round}", pipeline::STAGE_NOISE_AWARE));
            let o = training::train_noise_aware(m, &s, &examples, &stage_cfg, cfg.noise_aware_epochs)?;
            modelfile::save(
                out,
                &o.model,
                &provenance("train-na", &cfg, pipeline::STAGE_NOISE_AWARE),
            )?;
            write_train_report(report.as_deref(), "train-na", &cfg, &o.loss_trace)?;
        }
        Command::Finetune {
            model,
            strong: strong_path,
            out,
            round,
            report,
        } => {
            let m = load_model(model)?;
            let s = conll::read_strong(strong_path, &m.tags)?;
            let stage_cfg = cfg.for_stage(&format!("stage/{}/round{round}", pipeline::STAGE_FINETUNE));
            let o = training::continue_supervised(m, &s, &stage_cfg, cfg.finetune_epochs)?;
            modelfile::save(out, &o.model, &provenance("finetune", &cfg, pipeline::STAGE_FINETUNE))?;
            write_train_report(report.as_deref(), "finetune", &cfg, &o.loss_trace)?;
        }
        Command::Baseline {
            mode,
            train,
            weak,
            out,
            gamma,
            pseudo_out,
            report,
        } => {
            let [rt, rw]: [Vec<RawSentence>; 2] = read_all(&[train, weak])?.try_into().expect("two inputs");
            let mut found = conll::scan_types(&rt);
            if *mode != BaselineMode::Sst {
                found.extend(conll::scan_types(&rw));
            }
            let tags = tags_for(&args, found)?;
            let s = strong(&rt, &tags, train)?;
            match (mode, gamma) {
                (BaselineMode::Weighted, Some(g)) => cfg.wsl_weight = Some(*g),
                (BaselineMode::Weighted, None) => {}
                (_, Some(_)) => bail!("--gamma applies only to --mode weighted"),
                (BaselineMode::Wsl, None) => cfg.wsl_weight = Some(1.0),
                (_, None) => cfg.wsl_weight = None,
            }
            let (o, stage) = if *mode == BaselineMode::Sst {
                let sentences: Vec<Sentence> = rw
                    .iter()
                    .map(|r| Sentence::new(r.tokens.iter().map(String::as_str)))
                    .collect::<Result<_, _>>()?;
                let (o, pseudo) = training::self_train(&tags, &s, &sentences, &cfg)?;
                if let Some(p) = pseudo_out {
                    conll::write(p, sentences.iter().zip(&pseudo), &tags)?;
                }
                (o, "sst")
            } else {
                let w = weak_examples(&rw, &tags, weak)?;
                let m = match mode {
                    BaselineMode::Wsl => WslMode::Plain,
                    BaselineMode::Weighted => WslMode::Weighted,
                    _ => WslMode::Partial,
                };
                ensure!(
                    m != WslMode::Weighted || cfg.wsl_weight.is_some(),
                    "--mode weighted needs --gamma (or wsl_weight in the config)"
                );
                (training::train_wsl(&tags, &s, &w, &cfg, m)?, "wsl")
            };
            modelfile::save(out, &o.model, &provenance("baseline", &cfg, stage))?;
            write_train_report(report.as_deref(), "baseline", &cfg, &o.loss_trace)?;
        }
        Command::Eval { model, pred, gold, out } => {
            let metrics: Metrics = if let Some(mp) = model {
                let m = load_model(mp)?;
                let g = conll::read_strong(gold, &m.tags)?;
                pipeline::evaluate_model(&m, &g)?
            } else {
                let pp = pred.as_ref().expect("clap requires --model or --pred");
                let [rp, rg]: [Vec<RawSentence>; 2] = read_all(&[pp, gold])?.try_into().expect("two inputs");
                let mut found = conll::scan_types(&rp);
                found.extend(conll::scan_types(&rg));
                let tags = tags_for(&args, found)?;
                let p = labeled(&rp, &tags, pp)?;
                let g = labeled(&rg, &tags, gold)?;
                ensure!(p.len() == g.len(), "prediction and gold sentence counts differ");
                for (k, ((ps, _), (gs, _))) in p.iter().zip(&g).enumerate() {
                    ensure!(ps == gs, "sentence {} differs between prediction and gold", k + 1);
                }
                let py: Vec<LabelSeq> = p.into_iter().map(|x| x.1).collect();
                let gy: Vec<LabelSeq> = g.into_iter().map(|x| x.1).collect();
                eval::evaluate(&py, &gy, &tags)?
            };
            emit(out.as_deref(), &metrics)?;
        }
        Command::Stats { sources, out } => {
            let mut named = Vec::new();
            for s in sources {
                let (name, path) = s
                    .split_once('=')
                    .with_context(|| format!("--source expects NAME=PATH, got {s:?}"))?;
                named.push((name.to_string(), PathBuf::from(path)));
            }
            let paths: Vec<&Path> = named.iter().map(|(_, p)| p.as_path()).collect();
            let raws = read_all(&paths)?;
            let tags = tags_for(&args, raws.iter().flat_map(|r| conll::scan_types(r)))?;
            let mut labels = Vec::new();
            for (raw, p) in raws.iter().zip(&paths) {
                labels.push(labeled(raw, &tags, p)?.into_iter().map(|x| x.1).collect::<Vec<_>>());
            }
            let rows: Vec<(&str, &[LabelSeq])> = named
                .iter()
                .zip(&labels)
                .map(|((n, _), l)| (n.as_str(), l.as_slice()))
                .collect();
            emit(out.as_deref(), &eval::label_distribution(&rows, &tags))?;
        }
        Command::Pipeline {
            train,
            dev,
            weak,
            out,
            report,
            rounds,
            drop_mismatches,
            no_completion,
            no_noise_aware,
            stage_models,
        } => {
            if let Some(r) = rounds {
                cfg.stage2_rounds = *r;
            }
            cfg.drop_mismatches |= *drop_mismatches;
            let raws = read_all(&[train, dev, weak])?;
            let tags = tags_for(&args, raws.iter().flat_map(|r| conll::scan_types(r)))?;
            let s = strong(&raws[0], &tags, train)?;
            let d = strong(&raws[1], &tags, dev)?;
            let w = weak_examples(&raws[2], &tags, weak)?;
            let components = Components {
                completion: !no_completion,
                noise_aware: !no_noise_aware,
            };
            let mut saved: Result<()> = Ok(());
            let (model, rep) =
                pipeline::run_pipeline_with(&tags, &s, &d, &w, &cfg, components, |e: &StageEntry, m| {
                    if let (Some(dir), Ok(())) = (stage_models, &saved) {
                        let path = dir.join(format!("round{}-{}.model", e.round, e.name));
                        saved = modelfile::save(&path, m, &provenance("pipeline", &cfg, &e.name)).map_err(Into::into);
                    }
                })?;
            saved?;
            modelfile::save(out, &model, &provenance("pipeline", &cfg, pipeline::STAGE_FINETUNE))?;
            fsio::write_json(report, &rep)?;
        }
        Command::Benchmark { seeds, out } => {
            let rep = bench::run(seeds, &cfg)?;
            emit(out.as_deref(), &rep)?;
        }
    }
    Ok(())
}

fn read_calibration(path: &Path) -> Result<CalibrationTable> {
    let v: serde_json::Value = fsio::read_json(path)?;
    let table: CalibrationTable = serde_json::from_value(v.get("table").cloned().unwrap_or(v))
        .with_context(|| format!("{}: not a calibration table", path.display()))?;
    table.validate()?;
    Ok(table)
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => fsio::write_json(p, value)?,
        None => print!("{}", fsio::to_json(value)),
    }
    Ok(())
}
