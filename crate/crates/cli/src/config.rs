//! `key=value` config files with `[section]` headers and `#` comments.
//!
//! Recognized sections: `[camera]` (fx, fy, cx, cy, width, height),
//! `[grid]` (w, h), `[corpus]` (classes, train_instances, test_instances,
//! views, points, model_points, tx_min/tx_max, ty_min/ty_max, tz_min/tz_max),
//! `[training]` (task, loss, lambda, alpha, epochs, batch, lr, momentum,
//! seed, cls_points, detach_align, augment, grid_w, grid_h).
//! Command-line flags override config values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected key=value, got {:?}", lineno + 1, raw);
            };
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config [{section}] {key}={raw}: {e}")),
        }
    }
}

/// `cli.or(config).unwrap_or(default)` for one option.
pub fn resolve<T: std::str::FromStr + Copy>(
    cli: Option<T>,
    config: &ConfigFile,
    section: &str,
    key: &str,
    default: T,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = cli {
        return Ok(v);
    }
    Ok(config.get_parsed(section, key)?.unwrap_or(default))
}
