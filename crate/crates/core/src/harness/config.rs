use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::HarnessError;
use crate::asymptotics::FormulaId;
use crate::psi::{CustomTable, PsiFamily, PsiSequence};

/// Serializable description of a ψ-family.
///
/// `gen_poisson` takes `alpha` and `r` (or `q` for `r = 1`); `custom` takes
/// either an inline `table` or `harmonic: k` for the single harmonic `ψ(k) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<u64, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<u64>,
}

impl FamilySpec {
    pub fn named(name: &str) -> Self {
        FamilySpec {
            name: name.to_string(),
            alpha: None,
            r: None,
            q: None,
            table: None,
            harmonic: None,
        }
    }

    pub fn gen_poisson(alpha: f64, r: f64) -> Self {
        FamilySpec {
            alpha: Some(alpha),
            r: Some(r),
            ..Self::named("gen_poisson")
        }
    }

    pub fn build(&self) -> Result<PsiSequence, String> {
        let unused = |fields: &[(&str, bool)]| -> Result<(), String> {
            match fields.iter().find(|(_, present)| *present) {
                Some((f, _)) => Err(format!("field {f} does not apply to family {}", self.name)),
                None => Ok(()),
            }
        };
        let family = match self.name.as_str() {
            "gen_poisson" => {
                unused(&[
                    ("table", self.table.is_some()),
                    ("harmonic", self.harmonic.is_some()),
                ])?;
                let (alpha, r) = match (self.alpha, self.r, self.q) {
                    (Some(a), r, None) => (a, r.unwrap_or(1.0)),
                    (None, r, Some(q)) => {
                        if r.is_some_and(|r| r != 1.0) {
                            return Err("q only describes r = 1".into());
                        }
                        if !(q > 0.0 && q < 1.0) {
                            return Err(format!("q must lie in (0, 1), got {q}"));
                        }
                        (-q.ln(), 1.0)
                    }
                    (Some(_), _, Some(_)) => return Err("give alpha or q, not both".into()),
                    (None, _, None) => return Err("gen_poisson needs alpha (or q)".into()),
                };
                PsiFamily::GeneralizedPoisson { alpha, r }
            }
            "loglog_power" | "exp_log_squared" | "exp_over_log" => {
                unused(&[
                    ("alpha", self.alpha.is_some()),
                    ("r", self.r.is_some()),
                    ("q", self.q.is_some()),
                    ("table", self.table.is_some()),
                    ("harmonic", self.harmonic.is_some()),
                ])?;
                match self.name.as_str() {
                    "loglog_power" => PsiFamily::LogLogPower,
                    "exp_log_squared" => PsiFamily::ExpLogSquared,
                    _ => PsiFamily::ExpOverLog,
                }
            }
            "custom" => {
                unused(&[
                    ("alpha", self.alpha.is_some()),
                    ("r", self.r.is_some()),
                    ("q", self.q.is_some()),
                ])?;
                let table = match (&self.table, self.harmonic) {
                    (Some(t), None) => CustomTable::from_entries(t.iter().map(|(k, v)| (*k, *v))),
                    (None, Some(k)) => CustomTable::from_entries([(k, 1.0)]),
                    _ => return Err("custom needs exactly one of table or harmonic".into()),
                }
                .map_err(|e| e.to_string())?;
                PsiFamily::Custom(table)
            }
            other => return Err(format!("unknown family {other:?}")),
        };
        PsiSequence::new(family).map_err(|e| e.to_string())
    }
}

/// `start..=stop`, either arithmetic (`step`) or geometric (`factor`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NRange {
    pub start: u64,
    pub stop: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

impl NRange {
    pub fn values(&self) -> Result<Vec<u64>, String> {
        if self.start == 0 {
            return Err("start must be at least 1".into());
        }
        if self.stop < self.start {
            return Err(format!("empty range {}..={}", self.start, self.stop));
        }
        let mut out = Vec::new();
        match (self.step, self.factor) {
            (Some(_), Some(_)) => return Err("give step or factor, not both".into()),
            (step, None) => {
                let step = step.unwrap_or(1);
                if step == 0 {
                    return Err("step must be positive".into());
                }
                let mut n = self.start;
                while n <= self.stop {
                    out.push(n);
                    n += step;
                }
            }
            (None, Some(f)) => {
                if !(f > 1.0 && f.is_finite()) {
                    return Err(format!("factor must exceed 1, got {f}"));
                }
                let mut n = self.start;
                while n <= self.stop {
                    out.push(n);
                    n = (n + 1).max((n as f64 * f).round() as u64);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: OutputFormat,
}

/// Worker count: a positive integer or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl Threads {
    /// Zero lets the pool pick the machine's parallelism.
    pub fn pool_size(self) -> usize {
        match self {
            Threads::Auto => 0,
            Threads::Count(n) => n,
        }
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Count(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(format!(
                "threads must be a positive integer or \"auto\", got {s:?}"
            )),
        }
    }
}

impl Serialize for Threads {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Threads;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"auto\"")
            }

            fn visit_u64<E: de::Error>(self, n: u64) -> Result<Threads, E> {
                if n == 0 {
                    return Err(E::custom("threads must be positive"));
                }
                Ok(Threads::Count(n as usize))
            }

            fn visit_i64<E: de::Error>(self, n: i64) -> Result<Threads, E> {
                if n <= 0 {
                    return Err(E::custom("threads must be positive"));
                }
                Ok(Threads::Count(n as usize))
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<Threads, E> {
                s.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// One sweep over `β × n` for a single family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub beta_list: Vec<f64>,
    pub n_range: NRange,
    pub tol: f64,
    #[serde(default)]
    pub formulas: Vec<FormulaId>,
    pub output: OutputSpec,
    #[serde(default)]
    pub threads: Threads,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| HarnessError::Config {
            field: None,
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let field = |f: &str, message: String| HarnessError::Config {
            field: Some(f.to_string()),
            line: None,
            message,
        };
        let psi = self.family.build().map_err(|m| field("family", m))?;
        if self.beta_list.is_empty() {
            return Err(field("beta_list", "at least one beta is required".into()));
        }
        if let Some(b) = self.beta_list.iter().find(|b| !b.is_finite()) {
            return Err(field("beta_list", format!("beta {b} is not finite")));
        }
        self.n_range.values().map_err(|m| field("n_range", m))?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(field(
                "tol",
                format!("tol must be positive, got {}", self.tol),
            ));
        }
        for id in &self.formulas {
            id.check_family(psi.family())
                .map_err(|m| field("formulas", m))?;
        }
        Ok(())
    }

    pub fn psi(&self) -> PsiSequence {
        self.family.build().expect("validated config")
    }

    /// Sorted, deduplicated betas.
    pub fn betas(&self) -> Vec<f64> {
        let mut b = self.beta_list.clone();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}
