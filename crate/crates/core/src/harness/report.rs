use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, OutputFormat};
use crate::asymptotics::{FormulaId, Prediction};
use crate::exact::ErrorEstimate;
use crate::series::CertifiedValue;

pub const CSV_COLUMNS: [&str; 16] = [
    "family",
    "beta",
    "n",
    "e_n",
    "e_n_radius",
    "lower_sandwich",
    "upper_sandwich",
    "witness",
    "formula_id",
    "main_term",
    "remainder_scale",
    "dev",
    "notes",
    "log_e_n",
    "log_main",
    "log_scale",
];

/// `|e_n − main| / remainder_scale`, or the plain difference when the scale
/// vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Deviation {
    Normalized(f64),
    ScaleZero(f64),
}

impl Deviation {
    /// Works in the log domain so that underflowing rows still compare.
    pub fn compute(e_n: &CertifiedValue, p: &Prediction) -> Self {
        let ln_e = e_n.ln_abs();
        let lm = p.log_main;
        let top = ln_e.max(lm);
        if top == f64::NEG_INFINITY {
            return if p.log_remainder == f64::NEG_INFINITY {
                Deviation::ScaleZero(0.0)
            } else {
                Deviation::Normalized(0.0)
            };
        }
        let signed = if e_n.value < 0.0 { -1.0 } else { 1.0 };
        let diff = (signed * (ln_e - top).exp() - (lm - top).exp()).abs();
        if p.log_remainder == f64::NEG_INFINITY {
            Deviation::ScaleZero(diff * top.exp())
        } else {
            Deviation::Normalized(diff * (top - p.log_remainder).exp())
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Deviation::Normalized(v) | Deviation::ScaleZero(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub formula_id: FormulaId,
    pub prediction: Option<Prediction>,
    pub dev: Option<Deviation>,
    pub error: Option<String>,
}

/// One `(β, n)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: String,
    pub beta: f64,
    pub n: u64,
    pub estimate: Option<ErrorEstimate>,
    pub error: Option<String>,
    pub sandwich_holds: Option<bool>,
    pub predictions: Vec<PredictionEntry>,
    pub wall_time_seconds: f64,
}

impl ReportRow {
    /// `lower ≤ e_n ≤ upper` up to the enclosure radii.
    pub fn check_sandwich(est: &ErrorEstimate) -> bool {
        let s = est.e_n.log_scale;
        let e = est.e_n;
        let lo = est.lower_sandwich.rescaled(s);
        let hi = est.upper_sandwich.rescaled(s);
        lo.lower() <= e.upper() && e.lower() <= hi.upper()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

fn linear(v: f64) -> String {
    // Values that flushed to zero from a nonzero log are left empty.
    if v == 0.0 || !v.is_normal() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

fn linear_cv(c: &CertifiedValue) -> String {
    if c.value == 0.0 {
        return "0".into();
    }
    linear(c.absolute())
}

fn log_col(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

impl PredictionReport {
    pub fn csv_records(&self) -> Vec<[String; 16]> {
        let mut out = Vec::new();
        for row in &self.rows {
            let mut base: [String; 16] = Default::default();
            base[0] = row.family.clone();
            base[1] = format!("{}", row.beta);
            base[2] = row.n.to_string();
            let mut row_notes = Vec::new();
            if let Some(est) = &row.estimate {
                base[3] = linear_cv(&est.e_n);
                base[4] = linear(est.e_n.absolute_radius());
                if base[3].is_empty() {
                    base[4].clear();
                }
                base[5] = linear_cv(&est.lower_sandwich);
                base[6] = linear_cv(&est.upper_sandwich);
                base[7] = linear_cv(&est.witness_value);
                base[13] = log_col(est.e_n.ln_abs());
                if !est.witness_converged {
                    row_notes.push("t0 iteration not converged".to_string());
                }
            }
            if let Some(e) = &row.error {
                row_notes.push(e.clone());
            }
            if row.sandwich_holds == Some(false) {
                row_notes.push("sandwich violated".to_string());
            }
            if row.predictions.is_empty() {
                base[12] = row_notes.join("; ");
                out.push(base);
                continue;
            }
            for entry in &row.predictions {
                let mut rec = base.clone();
                let mut notes = row_notes.clone();
                rec[8] = entry.formula_id.as_str().to_string();
                if let Some(p) = &entry.prediction {
                    rec[9] = if p.log_main == f64::NEG_INFINITY {
                        "0".into()
                    } else {
                        linear(p.main_term)
                    };
                    rec[10] = if p.log_remainder == f64::NEG_INFINITY {
                        "0".into()
                    } else {
                        linear(p.remainder_scale)
                    };
                    rec[14] = log_col(p.log_main);
                    rec[15] = log_col(p.log_remainder);
                    notes.extend(p.validity_notes.iter().cloned());
                }
                match entry.dev {
                    Some(Deviation::Normalized(d)) => rec[11] = format!("{d:e}"),
                    Some(Deviation::ScaleZero(d)) => {
                        rec[11] = "scale-zero".into();
                        notes.push(format!("absolute deviation {d:e}"));
                    }
                    None => {}
                }
                if let Some(e) = &entry.error {
                    notes.push(e.clone());
                }
                rec[12] = notes.join("; ");
                out.push(rec);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let enc = |e: csv::Error| HarnessError::Encode(e.to_string());
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_COLUMNS).map_err(enc)?;
        for rec in self.csv_records() {
            wr.write_record(&rec).map_err(enc)?;
        }
        wr.flush().map_err(|e| HarnessError::Encode(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Encode(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::Encode(e.to_string()))
    }

    pub fn write_to(&self, path: &Path, format: OutputFormat) -> Result<(), HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        match format {
            OutputFormat::Csv => {
                let f = std::fs::File::create(path).map_err(io)?;
                self.write_csv(std::io::BufWriter::new(f))
            }
            OutputFormat::Json => std::fs::write(path, self.to_json()? + "\n").map_err(io),
        }
    }
}
