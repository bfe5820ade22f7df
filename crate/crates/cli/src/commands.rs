use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use contextmix::dataio::{
    generate_synthetic, write_mix_records, write_ppm, Dataset, DatasetManifest, SynthSpec,
};
use contextmix::inspection::{inspect_component, ComponentRecord, Decision, Surface};
use contextmix::metrics::mean_ir;
use contextmix::mixers::{mix_batch, BatchContext, EpsilonRule, LabelVector, MixKind, MixOutcome};
use contextmix::rng::RngStream;
use contextmix::sampling::{simulate_area_distribution, CropBox};
use contextmix::trainer::{evaluate, load_params, save_params, train, TrainConfig, TrainOutcome};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::{
    usage, AreasArgs, AugmentArgs, Cli, Command, EvalArgs, InspectArgs, Preset, SweepArgs, SynthArgs, TrainArgs,
};

pub(crate) fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Augment(args) => augment(cli, args),
        Command::Areas(args) => areas(cli, args),
        Command::Synth(args) => synth(cli, args),
        Command::Train(args) => train_cmd(cli, args),
        Command::Eval(args) => eval(cli, args),
        Command::Inspect(args) => inspect(cli, args),
        Command::Sweep(args) => sweep(cli, args),
    }
}

fn announce_seed(cli: &Cli) {
    eprintln!("seed={}", cli.seed);
}

fn required_out<'a>(cli: &'a Cli, command: &str) -> Result<&'a Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| usage(format!("{command} needs --out <DIR>")))
}

/// Prints `text` and, when `--out` is given, also writes it there.
fn emit(cli: &Cli, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(path) = &cli.out {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn augment(cli: &Cli, args: &AugmentArgs) -> Result<()> {
    let policy = args.policy.build(MixKind::ContextMix)?;
    let out = required_out(cli, "augment")?;
    announce_seed(cli);
    let manifest = DatasetManifest::load(&args.manifest, None)?;
    let k = manifest.n_classes();
    if k < 2 {
        bail!("mixing needs a manifest with at least two classes, found {k}");
    }
    let image_dir = out.join("images");
    fs::create_dir_all(&image_dir).with_context(|| format!("creating {}", image_dir.display()))?;
    let records_path = out.join("records.txt");
    if args.n_batches == 0 {
        eprintln!("warning: --n-batches 0 produces no images");
        write_mix_records(&[], &[], &records_path)?;
        println!("batches=0\nimages=0");
        return Ok(());
    }

    let n = manifest.len();
    let batch_size = args.batch_size as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut RngStream::derive(cli.seed, &[u64::MAX, 2]).rng());

    let mut names = Vec::new();
    let mut outcomes: Vec<MixOutcome> = Vec::new();
    for b in 0..args.n_batches as usize {
        let members: Vec<usize> = (0..batch_size).map(|j| order[(b * batch_size + j) % n]).collect();
        let images = members
            .par_iter()
            .map(|&i| manifest.load_image(i))
            .collect::<contextmix::Result<Vec<_>>>()?;
        let labels: Vec<LabelVector> = members
            .iter()
            .map(|&i| LabelVector::one_hot(manifest.entries[i].class_index, k))
            .collect();
        let ctx = BatchContext::new(cli.seed)
            .at(0, 1, b)
            .with_threads(cli.threads as usize);
        let batch = mix_batch(&images, &labels, &policy, &ctx)?;
        let ext = if images[0].channels() == 3 { "ppm" } else { "pgm" };
        let batch_names: Vec<String> = (0..batch.len())
            .map(|j| format!("images/b{b:04}_{j:03}.{ext}"))
            .collect();
        batch
            .par_iter()
            .zip(&batch_names)
            .try_for_each(|(o, name)| write_ppm(&o.image, out.join(name)))?;
        names.extend(batch_names);
        outcomes.extend(batch);
    }
    write_mix_records(&names, &outcomes, &records_path)?;

    let total = outcomes.len() as f64;
    let mean_lambda = outcomes.iter().map(|o| o.lambda_a).sum::<f64>() / total;
    let nomix = outcomes
        .iter()
        .filter(|o| o.crop.is_none() && o.lambda_b == 0.0)
        .count() as f64
        / total;
    println!(
        "batches={}\nimages={}\nmean_lambda_a={mean_lambda:.6}\nnomix_rate={nomix:.6}",
        args.n_batches,
        outcomes.len()
    );
    Ok(())
}

fn areas(cli: &Cli, args: &AreasArgs) -> Result<()> {
    announce_seed(cli);
    let mut rng = RngStream::new(cli.seed, 0).rng();
    let hist = simulate_area_distribution(
        args.width as usize,
        args.height as usize,
        args.alpha,
        args.samples,
        args.bins as usize,
        &mut rng,
    )
    .map_err(|e| usage(e.to_string()))?;
    eprintln!(
        "pre_clip_mean={:.6} post_clip_mean={:.6}",
        hist.pre_clip_mean, hist.post_clip_mean
    );
    emit(cli, &hist.to_tsv())
}

fn synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let out = required_out(cli, "synth")?;
    announce_seed(cli);
    let mut spec = match args.preset {
        Preset::Desk => SynthSpec::desk(cli.seed),
        Preset::Industrial => SynthSpec::industrial(cli.seed),
    };
    if let Some(counts) = &args.counts {
        spec = SynthSpec::with_counts(counts.clone(), spec.image_size, spec.channels, cli.seed);
    }
    if let Some(size) = args.image_size {
        spec.image_size = size;
    }
    if let Some(channels) = args.channels {
        spec.channels = channels;
    }
    if let Some(noise) = args.noise_std {
        spec.noise_std = noise;
    }
    if let Some(fraction) = args.max_defect_fraction {
        spec.max_defect_fraction = fraction;
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    if !(0.0..=1.0).contains(&args.valid_fraction) {
        return Err(usage("--valid-fraction must lie in [0, 1]"));
    }

    let train_manifest = generate_synthetic(&spec, out.join("train"))?;
    report_split("train", &train_manifest)?;
    if args.valid_fraction > 0.0 {
        let valid_seed = contextmix::rng::splitmix64(cli.seed);
        let valid = spec.validation_split(args.valid_fraction, args.valid_min, valid_seed);
        report_split("valid", &generate_synthetic(&valid, out.join("valid"))?)?;
    }
    Ok(())
}

fn report_split(name: &str, manifest: &DatasetManifest) -> Result<()> {
    let counts = manifest.class_counts();
    let list: Vec<String> = counts.iter().map(u64::to_string).collect();
    println!(
        "{name}: images={} counts={} mean_ir={:.4}",
        manifest.len(),
        list.join(","),
        mean_ir(&counts)?
    );
    Ok(())
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::load(path, None)?;
    Ok(Dataset::from_manifest(&manifest)?)
}

impl TrainArgs {
    fn config(&self, cli: &Cli, default_policy: MixKind) -> Result<TrainConfig> {
        let config = TrainConfig {
            arch: self.arch,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            lr_decay_epochs: self.lr_decay_epochs.clone(),
            lr_decay_factor: self.lr_decay_factor,
            policy: self.policy.build(default_policy)?,
            seed: cli.seed,
            shuffle: !self.no_shuffle,
            standardize: !self.no_standardize,
            threads: cli.threads as usize,
        };
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }

    fn datasets(&self) -> Result<(Dataset, Option<Dataset>)> {
        let train = load_dataset(&self.train)?;
        let valid = self.valid.as_deref().map(load_dataset).transpose()?;
        Ok((train, valid))
    }
}

fn train_cmd(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = args.config(cli, MixKind::None)?;
    announce_seed(cli);
    let (train_set, valid) = args.datasets()?;
    let outcome = train(&train_set, valid.as_ref(), &config)?;
    print!("{}", outcome.log_text());
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        save_params(&outcome.params, dir.join("model.json"))?;
        fs::write(dir.join("train_log.txt"), outcome.log_text())
            .with_context(|| format!("writing {}", dir.join("train_log.txt").display()))?;
    }
    Ok(())
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let params = load_params(&args.model)?;
    let data = load_dataset(&args.manifest)?;
    emit(cli, &evaluate(&params, &data)?.to_key_values())
}

fn inspect(cli: &Cli, args: &InspectArgs) -> Result<()> {
    if args.roi.as_ref().is_some_and(|r| r.len() != 4) {
        return Err(usage("--roi takes four values: xs,ys,xe,ye"));
    }
    let params = load_params(&args.model)?;
    let manifest = DatasetManifest::load(&args.manifest, None)?;
    let per_component = args.surfaces as usize;
    let mut audit = String::new();
    let mut defective = 0;
    let mut components = 0;
    for (c, group) in (0..manifest.len()).collect::<Vec<_>>().chunks(per_component).enumerate() {
        let surfaces = group
            .iter()
            .map(|&i| {
                let raw = manifest.load_image(i)?;
                let roi = match &args.roi {
                    Some(r) => CropBox::new(r[0], r[1], r[2], r[3], raw.width(), raw.height())?,
                    None => CropBox::full(raw.width(), raw.height()),
                };
                Ok(Surface { raw, roi })
            })
            .collect::<contextmix::Result<Vec<_>>>()?;
        let record = ComponentRecord {
            component_id: format!("component{c:05}"),
            surfaces,
        };
        let report = inspect_component(&record, &params, args.normal_class)?;
        if report.decision == Decision::Defective {
            defective += 1;
        }
        components += 1;
        let _ = writeln!(audit, "{}", report.audit_line());
    }
    eprintln!("components={components} defective={defective}");
    emit(cli, &audit)
}

/// Parses and deduplicates the ratio list, keeping first occurrences.
fn parse_epsilons(tokens: &[String]) -> Result<Vec<EpsilonRule>> {
    let mut rules: Vec<EpsilonRule> = Vec::new();
    for token in tokens.iter().map(|t| t.trim()).filter(|t| !t.is_empty()) {
        let rule: EpsilonRule = token.parse().map_err(|e| usage(format!("--epsilons: {e}")))?;
        if rules.contains(&rule) {
            eprintln!("warning: duplicate resize ratio {rule} ignored");
        } else {
            rules.push(rule);
        }
    }
    if rules.is_empty() {
        return Err(usage("--epsilons needs at least one value"));
    }
    Ok(rules)
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let rules = parse_epsilons(&args.epsilons)?;
    if args.train.policy.policy.is_some_and(|k| k != MixKind::ContextMix) {
        return Err(usage("sweep varies the contextmix resize ratio; use --policy contextmix"));
    }
    if args.train.policy.epsilon.is_some() {
        return Err(usage("sweep takes its ratios from --epsilons, not --epsilon"));
    }
    let base = args.train.config(cli, MixKind::ContextMix)?;
    let configs = rules
        .iter()
        .map(|&rule| {
            let mut config = base.clone();
            config.policy.epsilon = Some(rule);
            config.policy.validate().map_err(|e| usage(format!("--epsilons: {e}")))?;
            Ok(config)
        })
        .collect::<Result<Vec<_>>>()?;
    announce_seed(cli);
    let (train_set, valid) = args.train.datasets()?;

    let mut table = String::from("epsilon\tloss\ttop1_error\tmacro_f1\tece\n");
    let mut logs: Vec<(EpsilonRule, TrainOutcome)> = Vec::new();
    for (rule, config) in rules.iter().zip(&configs) {
        let outcome = train(&train_set, valid.as_ref(), config)?;
        let last = outcome.final_epoch();
        let _ = writeln!(
            table,
            "{rule}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            last.loss, last.top1_error, last.macro_f1, last.ece
        );
        logs.push((*rule, outcome));
    }
    print!("{table}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("sweep.tsv"), &table).with_context(|| format!("writing {}", dir.display()))?;
        for (rule, outcome) in &logs {
            let path: PathBuf = dir.join(format!("train_log_eps_{rule}.txt"));
            fs::write(&path, outcome.log_text()).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}
