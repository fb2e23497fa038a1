use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::CommandFactory;
use featforge::context::{Level, ProjectHistory};
use featforge::dataset::{
    assemble, chronological_split, export_table, import_table, smote_balance, Dataset, SmoteConfig, TableFormat,
};
use featforge::eval::evaluate;
use featforge::learn::{train, ClassifierKind, ClassifierSpec, Hyperparameters, Model};
use featforge::metrics::MetricSet;
use featforge::scenarios::{
    feature_file_map, rq1_grid, rq2_file_level, rq3_compare, rq4_incremental, rq5_cross_project, ScenarioOptions,
    ScenarioResult,
};

use crate::config::ProjectConfig;
use crate::workspace::{Loaded, Workspace};
use crate::{Cli, Command, GlobalArgs, ModelArgs, ScenarioName};

fn usage(msg: &str) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, msg).exit()
}

fn workspace(global: &GlobalArgs) -> Result<Workspace> {
    let Some(path) = &global.config else {
        usage("this subcommand needs a project configuration: -c/--config <FILE>");
    };
    let config = ProjectConfig::load(path)?;
    let cache_dir = global.cache.clone().unwrap_or_else(|| config.cache_dir.clone());
    Ok(Workspace { config, cache_dir })
}

fn seed_of(global: &GlobalArgs, ws: Option<&Workspace>) -> u64 {
    global.seed.or(ws.map(|w| w.config.seed)).unwrap_or(1)
}

fn classifier_spec(args: &ModelArgs, base: Hyperparameters, seed: u64) -> Result<ClassifierSpec> {
    let mut spec = ClassifierSpec {
        kind: args.classifier.unwrap_or(ClassifierKind::Forest),
        hyperparameters: base,
        seed,
    };
    for s in &args.settings {
        spec.set(s)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn with_suffix(path: &Path, part: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}.{part}.{ext}"))
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let global = &cli.global;
    match &cli.command {
        Command::Mine { projects } => {
            let ws = workspace(global)?;
            for (name, n) in ws.mine(projects)? {
                println!("{name}: {n} commits");
            }
        }
        Command::Label { projects } => {
            let ws = workspace(global)?;
            for p in ws.load(projects)? {
                println!(
                    "{}: {} commits, {} corrective, {} bug-introducing",
                    p.name,
                    p.history.commits.len(),
                    p.traces.corrective_count(),
                    p.introducers.len()
                );
            }
        }
        Command::Dataset {
            level,
            metric_set,
            format,
            split,
            smote,
            output,
        } => {
            let ws = workspace(global)?;
            let loaded = ws.load(&[])?;
            let level: Level = (*level).into();
            let format: TableFormat = (*format).into();
            let ds = build(&ws, &loaded, level, *metric_set)?;
            let path = output.clone().unwrap_or_else(|| {
                PathBuf::from("out/dataset").join(format!(
                    "{}-{}.{}",
                    level_name(level),
                    metric_set.name().to_lowercase(),
                    format.extension()
                ))
            });
            ensure_parent(&path)?;
            export_table(&ds, format, &path)?;
            println!("{}: {} instances, {} attributes", path.display(), ds.len(), ds.width());
            if *split || *smote {
                let (mut train_ds, test, spec) = chronological_split(&ds, 75.0, &ws.config.ratios())?;
                for p in &spec.projects {
                    println!(
                        "{}: train scopes {:?}, test scopes {:?}, ratio {:.1}%",
                        p.project, p.train_scopes, p.test_scopes, p.achieved_ratio
                    );
                }
                if *smote {
                    let cfg = SmoteConfig {
                        seed: seed_of(global, Some(&ws)),
                        ..Default::default()
                    };
                    let (balanced, report) = smote_balance(&train_ds, cfg)?;
                    println!(
                        "smote: {} {} -> {} (majority {})",
                        report.minority.as_str(),
                        report.minority_before,
                        report.minority_after,
                        report.majority
                    );
                    train_ds = balanced;
                }
                for (part, d) in [("train", &train_ds), ("test", &test)] {
                    let p = with_suffix(&path, part);
                    export_table(d, format, &p)?;
                    println!("{}: {} instances", p.display(), d.len());
                }
            }
        }
        Command::Train { input, model, output } => {
            let ws = global.config.as_ref().map(|_| workspace(global)).transpose()?;
            let base = ws
                .as_ref()
                .map(|w| w.config.hyperparameters.clone())
                .unwrap_or_default();
            let spec = classifier_spec(model, base, seed_of(global, ws.as_ref()))?;
            let ds = import_table(input)?;
            let m = train(&spec, &ds)?;
            ensure_parent(output)?;
            fs::write(output, m.to_json()?).with_context(|| format!("writing {}", output.display()))?;
            println!("{}: {} model on {} instances", output.display(), spec.kind, ds.len());
        }
        Command::Evaluate { model, input, output } => {
            let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
            let m = Model::from_json(&text)?;
            let ds = import_table(input)?;
            let report = evaluate(&ds.targets(), &m.scores(&ds)?)?;
            let auc = report
                .auc
                .map(|a| format!("{a:.4}"))
                .unwrap_or_else(|| "undefined".into());
            println!(
                "auc {auc}  precision {:.4}  recall {:.4}  f {:.4}  fp-rate {:.4}",
                report.weighted.precision,
                report.weighted.recall,
                report.weighted.f,
                report.confusion.fp_rate()
            );
            if let Some(dir) = output {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                fs::write(dir.join("report.json"), report.to_json())?;
                report.write_roc_csv(&dir.join("roc.csv"))?;
            }
        }
        Command::Scenario {
            name,
            level,
            metric_set,
            model,
            out,
        } => {
            let ws = workspace(global)?;
            let seed = seed_of(global, Some(&ws));
            let spec = classifier_spec(model, ws.config.hyperparameters.clone(), seed)?;
            let opts = ScenarioOptions {
                seed,
                ratios: ws.config.ratios(),
                hyperparameters: spec.hyperparameters,
                classifier: spec.kind,
                ..Default::default()
            };
            let default_level = if *name == ScenarioName::Rq4 {
                Level::Commit
            } else {
                Level::Release
            };
            let level = level.map(Level::from).unwrap_or(default_level);
            let result = scenario(&ws, *name, level, *metric_set, model.classifier, &opts)?;
            let dir = out.clone().unwrap_or_else(|| PathBuf::from("out").join(&result.id));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            result.write_dir(&dir)?;
            println!(
                "{}: {} cells written to {}",
                result.id,
                result.cells.len(),
                dir.display()
            );
        }
        Command::Report { paths } => {
            for p in paths {
                let file = if p.is_dir() { p.join("summary.csv") } else { p.clone() };
                let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                println!("== {}", file.display());
                print!("{}", render_table(&text)?);
            }
        }
    }
    Ok(())
}

fn level_name(level: Level) -> &'static str {
    match level {
        Level::Release => "release",
        Level::Commit => "commit",
    }
}

fn build(ws: &Workspace, loaded: &[Loaded], level: Level, set: MetricSet) -> Result<Dataset> {
    let inputs: Vec<_> = loaded.iter().map(Loaded::input).collect();
    assemble(&inputs, level, set, &ws.message_matchers())
        .with_context(|| format!("assembling {} at {} level", set.name(), level_name(level)))
}

fn scenario(
    ws: &Workspace,
    name: ScenarioName,
    level: Level,
    metric_set: Option<MetricSet>,
    classifier: Option<ClassifierKind>,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult> {
    let loaded = ws.load(&[])?;
    let feature_set = metric_set.unwrap_or(MetricSet::ProcStructMet);
    Ok(match name {
        ScenarioName::Rq1 => {
            let mut datasets = Vec::new();
            for set in MetricSet::FEATURE_SETS {
                datasets.push((set, build(ws, &loaded, level, set)?));
            }
            let classifiers = classifier
                .map(|k| vec![k])
                .unwrap_or_else(|| ClassifierKind::ALL.to_vec());
            rq1_grid(&datasets, &classifiers, opts)?
        }
        ScenarioName::Rq2 => {
            let file17 = build(ws, &loaded, level, MetricSet::FileMoser17)?;
            let file32 = build(ws, &loaded, level, MetricSet::FileCombined32)?;
            rq2_file_level(&file17, &file32, opts)?
        }
        ScenarioName::Rq3 => {
            let features = build(ws, &loaded, level, feature_set)?;
            let files = build(ws, &loaded, level, MetricSet::FileMoser17)?;
            let histories: Vec<&ProjectHistory> = loaded.iter().map(|l| &l.history).collect();
            let map = feature_file_map(&histories, level)?;
            rq3_compare(&features, &files, &map, opts)?
        }
        ScenarioName::Rq4 => rq4_incremental(&build(ws, &loaded, level, feature_set)?, opts)?,
        ScenarioName::Rq5 => rq5_cross_project(&build(ws, &loaded, level, feature_set)?, opts)?,
    })
}

fn render_table(csv_text: &str) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes());
    let rows: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..width)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|v| v.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    Ok(out)
}
