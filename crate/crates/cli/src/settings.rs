//! Experiment config loading: defaults, then the config file, then
//! `--set key=value` overrides, then validation.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use graphnav::harness::ExperimentConfig;
use toml::{Table, Value};

/// Keys that are absent from the serialised defaults because they are unset.
const OPTIONAL_KEYS: [&str; 2] = ["env.spawn_pairs", "embeddings.path"];

pub fn load(config: Option<&Path>, sets: &[String], seed: Option<u64>) -> Result<ExperimentConfig> {
    let reference = Table::try_from(ExperimentConfig::default()).context("serialising defaults")?;
    let mut table = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            check_keys(&file, &reference, "")?;
            merge(Table::try_from(ExperimentConfig::default())?, file)
        }
        None => reference.clone(),
    };
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got `{set}`"))?;
        let key = key.trim();
        if lookup(&reference, key).is_none() && !OPTIONAL_KEYS.contains(&key) {
            bail!("unknown config key `{key}`");
        }
        insert(&mut table, key, parse_value(raw.trim()))?;
    }
    if let Some(seed) = seed {
        table.insert("seed".into(), Value::Integer(seed_value(seed)?));
    }
    let config: ExperimentConfig = table.try_into().context("invalid config")?;
    config.validate().map_err(|e| anyhow!(e))?;
    Ok(config)
}

pub fn to_toml(config: &ExperimentConfig) -> Result<String> {
    toml::to_string_pretty(config).context("serialising config")
}

fn seed_value(seed: u64) -> Result<i64> {
    i64::try_from(seed).map_err(|_| anyhow!("seed {seed} does not fit a TOML integer"))
}

/// A TOML literal when it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn lookup<'a>(table: &'a Table, key: &str) -> Option<&'a Value> {
    let mut parts = key.split('.');
    let mut v = table.get(parts.next()?)?;
    for p in parts {
        v = v.as_table()?.get(p)?;
    }
    Some(v)
}

fn insert(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut t = table;
    for p in path {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("`{p}` in `{key}` is not a section"))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

fn merge(mut base: Table, over: Table) -> Table {
    for (k, v) in over {
        match (base.remove(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => {
                base.insert(k, Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

fn check_keys(file: &Table, reference: &Table, prefix: &str) -> Result<()> {
    for (k, v) in file {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        if OPTIONAL_KEYS.contains(&key.as_str()) {
            continue;
        }
        match (reference.get(k), v) {
            (None, _) => bail!("unknown config key `{key}`"),
            (Some(Value::Table(r)), Value::Table(f)) => check_keys(f, r, &key)?,
            (Some(Value::Table(_)), _) => bail!("`{key}` must be a section"),
            _ => {}
        }
    }
    Ok(())
}
