//! Run configuration shared by the experiments and the CLI.
//!
//! Configs are read from `key = value` text; the canonical form (sorted
//! keys, one per line) and the JSON form embedded in reports are both
//! deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{GftError, Result};
use crate::schwarzian::GridSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Order of series built for generic series work.
    pub order: usize,
    /// Grunsky truncation `N` used by certificates and experiments.
    pub grunsky_order: usize,
    /// Order of closed-form inputs (Koebe, extremal family) evaluated near
    /// the unit circle. Koebe's coefficients grow like `n`, so boundary
    /// geometry at radius 0.999 needs tens of thousands of terms.
    pub eval_order: usize,
    /// Order of the solutions produced from sampled Schwarzians.
    pub experiment_order: usize,
    pub grid: GridSpec,
    pub ladder: Vec<f64>,
    pub curve_points: usize,
    pub tol_radius: f64,
    pub tol_norm: f64,
    pub seed: u64,
    pub trials: usize,
    pub sample_degree: usize,
    pub search_budget: usize,
    /// Where the CLI writes reports; not part of the canonical form.
    #[serde(skip)]
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            order: 32,
            grunsky_order: 16,
            eval_order: 50_000,
            experiment_order: 160,
            grid: GridSpec::canonical(),
            ladder: vec![0.90, 0.99, 0.999],
            curve_points: 2048,
            tol_radius: 1e-3,
            tol_norm: 1e-6,
            seed: 1,
            trials: 200,
            sample_degree: 6,
            search_budget: 256,
            output_dir: "reports".to_owned(),
        }
    }
}

pub const MAX_GRUNSKY_ORDER: usize = 64;

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| GftError::Parse(format!("{key} = {value:?}: {e}")))
}

impl RunConfig {
    pub const KEYS: [&'static str; 16] = [
        "curve.points",
        "eval.order",
        "experiment.order",
        "grid.angles",
        "grid.radii_count",
        "grid.refine",
        "grunsky.order",
        "ladder",
        "order",
        "output_dir",
        "sample.degree",
        "search.budget",
        "seed",
        "tol.norm",
        "tol.radius",
        "trials",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "order" => self.order = parse(key, value)?,
            "grunsky.order" => self.grunsky_order = parse(key, value)?,
            "eval.order" => self.eval_order = parse(key, value)?,
            "experiment.order" => self.experiment_order = parse(key, value)?,
            "grid.radii_count" => self.grid.radii_count = parse(key, value)?,
            "grid.angles" => self.grid.angles = parse(key, value)?,
            "grid.refine" => self.grid.refine = parse(key, value)?,
            "ladder" => {
                self.ladder = value
                    .split(',')
                    .map(|s| parse::<f64>(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "curve.points" => self.curve_points = parse(key, value)?,
            "tol.radius" => self.tol_radius = parse(key, value)?,
            "tol.norm" => self.tol_norm = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "sample.degree" => self.sample_degree = parse(key, value)?,
            "search.budget" => self.search_budget = parse(key, value)?,
            "output_dir" => self.output_dir = value.to_owned(),
            _ => return Err(GftError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                GftError::Parse(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "order" => self.order.to_string(),
            "grunsky.order" => self.grunsky_order.to_string(),
            "eval.order" => self.eval_order.to_string(),
            "experiment.order" => self.experiment_order.to_string(),
            "grid.radii_count" => self.grid.radii_count.to_string(),
            "grid.angles" => self.grid.angles.to_string(),
            "grid.refine" => self.grid.refine.to_string(),
            "ladder" => self
                .ladder
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "curve.points" => self.curve_points.to_string(),
            "tol.radius" => self.tol_radius.to_string(),
            "tol.norm" => self.tol_norm.to_string(),
            "seed" => self.seed.to_string(),
            "trials" => self.trials.to_string(),
            "sample.degree" => self.sample_degree.to_string(),
            "search.budget" => self.search_budget.to_string(),
            "output_dir" => self.output_dir.clone(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Sorted `key = value` lines.
    pub fn canonical_text(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GftError::Usage(msg));
        if self.grunsky_order == 0 || self.grunsky_order > MAX_GRUNSKY_ORDER {
            return bad(format!(
                "grunsky.order must be in 1..={MAX_GRUNSKY_ORDER}, got {}",
                self.grunsky_order
            ));
        }
        if self.ladder.is_empty()
            || self.ladder.windows(2).any(|w| w[0] >= w[1])
            || self.ladder.iter().any(|&r| !(r > 0.0 && r < 1.0))
        {
            return bad(format!(
                "ladder must be increasing radii in (0, 1), got {:?}",
                self.ladder
            ));
        }
        if self.curve_points < 16 {
            return bad(format!("curve.points must be >= 16, got {}", self.curve_points));
        }
        let min_order = 2 * self.grunsky_order + 1;
        if self.experiment_order < min_order || self.eval_order < min_order {
            return bad(format!(
                "experiment.order and eval.order must be >= 2*grunsky.order+1 = {min_order}"
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("seed = 9\nladder = 0.5, 0.75\n# comment\ngrid.refine=false\n")
            .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ladder, vec![0.5, 0.75]);
        assert!(!cfg.grid.refine);
        let mut again = RunConfig::default();
        again.apply_text(&cfg.canonical_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn keys_are_sorted() {
        let mut sorted = RunConfig::KEYS;
        sorted.sort_unstable();
        assert_eq!(sorted, RunConfig::KEYS);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("seed", "-1").is_err());
        cfg.set("ladder", "0.9,0.5").unwrap();
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
