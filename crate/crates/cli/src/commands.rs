use std::path::{Path, PathBuf};

use hrrpgraphnet::data::{load_csv, normalize, save_dataset, Dataset, GeneratorSpec};
use hrrpgraphnet::layers::gradcheck::{check_layer, GradReport, LayerKind};
use hrrpgraphnet::model::gradcheck::check_model;
use hrrpgraphnet::model::{load_checkpoint, save_checkpoint, AblationConfig};
use hrrpgraphnet::trainkit::{evaluate, run_ablation_suite, train as fit, write_epoch_log};
use hrrpgraphnet::{Error, Result};
use log::info;

use crate::config::{Layers, RunConfig};
use crate::{AblateArgs, ConfigArgs, EvalArgs, GenDataArgs, GradcheckArgs, TrainArgs};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Usage(format!("{} does not exist", path.display())))
    }
}

pub fn gen_data(a: GenDataArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(path) => {
            require(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            GeneratorSpec::from_json(&text)?
        }
        None => GeneratorSpec::default_benchmark(),
    };
    let (train, test) = spec.generate_split(a.per_class, a.n_cells, a.seed)?;
    create_dir(&a.out)?;
    for (name, d) in [("train", train), ("test", test)] {
        let d = normalize(&d, a.normalize);
        let path = a.out.join(format!("{name}.csv"));
        save_dataset(&d, &path)?;
        info!("wrote {} ({} samples, {} classes, N = {})", path.display(), d.len(), d.classes(), d.n_cells());
    }
    Ok(())
}

fn resolve(c: &ConfigArgs, ablation: Option<&str>) -> Result<RunConfig> {
    let mut layers = Layers::new(c.config.as_deref(), &c.sets)?;
    layers.flag("train", "epochs", c.epochs)?;
    layers.flag("train", "batch_size", c.batch_size)?;
    layers.flag("train", "learning_rate", c.lr)?;
    layers.flag("train", "seed", c.seed)?;
    layers.flag("model", "d_out", c.d_out)?;
    layers.flag("model", "g_out", c.g_out)?;
    layers.flag("model", "seed", c.seed)?;
    if let Some(s) = ablation {
        let parsed: AblationConfig = s.parse()?;
        layers.flag("model", "ablation", Some(parsed))?;
    }
    layers.resolve()
}

/// Shape settings always come from the data.
fn fit_to_data(cfg: &mut RunConfig, d: &Dataset) -> Result<()> {
    if cfg.model.n_cells != d.n_cells() || cfg.model.classes != d.classes() {
        info!("using N = {} and C = {} from the data", d.n_cells(), d.classes());
    }
    cfg.model.n_cells = d.n_cells();
    cfg.model.classes = d.classes();
    cfg.model.validate()
}

fn echo_config(out: &Path, cfg: &RunConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    write_text(&out.join("config.json"), &text)
}

/// `(train, optional test)` from a directory or a single CSV.
fn load_data(path: &Path) -> Result<(Dataset, Option<Dataset>)> {
    require(path)?;
    if path.is_dir() {
        let train_path = path.join("train.csv");
        require(&train_path)?;
        let test_path = path.join("test.csv");
        let test = if test_path.exists() { Some(load_csv(&test_path)?) } else { None };
        Ok((load_csv(&train_path)?, test))
    } else {
        Ok((load_csv(path)?, None))
    }
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = resolve(&a.config, a.ablation.as_deref())?;
    let (train_set, val_set) = load_data(&a.data)?;
    fit_to_data(&mut cfg, &train_set)?;
    create_dir(&a.out)?;
    echo_config(&a.out, &cfg)?;

    let outcome = fit(&train_set, val_set.as_ref(), &cfg.model, &cfg.train)?;
    save_checkpoint(&outcome.model, a.out.join("model.ckpt"))?;
    write_epoch_log(&a.out.join("epochs.csv"), &outcome.log)?;
    if let Some(val) = &val_set {
        let m = evaluate(val, &outcome.model)?;
        m.write_csv(&a.out.join("metrics.csv"), val.class_names())?;
        print!("{}", m.table(val.class_names()));
    }
    let last = outcome.log.last().expect("epoch 0 is always logged");
    println!("final train loss {:.5} after {} epochs; wrote {}", last.train_loss, last.epoch, a.out.display());
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    require(&a.data)?;
    require(&a.checkpoint)?;
    let model = load_checkpoint(&a.checkpoint)?;
    let data = load_csv(&a.data)?;
    if data.n_cells() != model.config.n_cells {
        return Err(Error::Format(format!(
            "{} has {} range cells, the checkpoint expects {}",
            a.data.display(),
            data.n_cells(),
            model.config.n_cells
        )));
    }
    let m = evaluate(&data, &model)?;
    let out = a.out.clone().unwrap_or_else(|| {
        a.checkpoint
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    });
    create_dir(&out)?;
    let stem = a.data.file_stem().unwrap_or_default().to_string_lossy();
    m.write_csv(&out.join(format!("eval_{stem}.csv")), data.class_names())?;
    m.write_confusion_csv(&out.join(format!("eval_{stem}_confusion.csv")), data.class_names())?;
    print!("{}", m.table(data.class_names()));
    println!("overall accuracy {:.2} on {} samples", m.overall_accuracy, m.total());
    Ok(())
}

pub fn ablate(a: AblateArgs) -> Result<()> {
    let mut cfg = resolve(&a.config, None)?;
    let (train_set, test_set) = load_data(&a.data)?;
    let test_set = test_set.ok_or_else(|| Error::Usage(format!("{} has no test.csv", a.data.display())))?;
    fit_to_data(&mut cfg, &train_set)?;
    create_dir(&a.out)?;
    echo_config(&a.out, &cfg)?;

    let table = run_ablation_suite(&train_set, &test_set, &cfg.model, &cfg.train, a.seeds)?;
    table.write_csv(&a.out.join("ablation.csv"))?;
    table.write_runs_csv(&a.out.join("ablation_runs.csv"))?;
    let text = table.to_string();
    write_text(&a.out.join("ablation.txt"), &text)?;
    print!("{text}");
    let failed: Vec<String> = table.rows.iter().flat_map(|r| r.failures.iter().map(move |f| format!("row {}: {f}", r.number))).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{} training run(s) failed: {}", failed.len(), failed.join("; "))))
    }
}

pub fn gradcheck(a: GradcheckArgs) -> Result<()> {
    let mut reports: Vec<GradReport> = Vec::new();
    let model = |reports: &mut Vec<GradReport>| -> Result<()> {
        for ablation in AblationConfig::TABLE_ROWS {
            reports.extend(check_model(ablation, a.seed)?);
        }
        Ok(())
    };
    match a.layer.as_deref() {
        Some("model") => model(&mut reports)?,
        Some(name) => reports.extend(check_layer(name.parse::<LayerKind>()?, a.seed)?),
        None => {
            for kind in LayerKind::ALL {
                reports.extend(check_layer(kind, a.seed)?);
            }
            model(&mut reports)?;
        }
    }
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        println!("all {} gradient checks passed", reports.len());
        Ok(())
    } else {
        Err(Error::Numeric(format!("{failed} of {} gradient checks exceeded the tolerance", reports.len())))
    }
}
