//! JSON and CSV reports.
//!
//! JSON keys appear in a fixed order: `mode`, then `samples` and `seed` for
//! sampled runs, `success_probability`, `labels`, `outcomes`. Each outcome
//! has `values`, `probability` and, when sampled, `count`. Probabilities are
//! decimals with 12 significant digits.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Number, Value as Json};

use crate::error::{Error, Result};
use crate::stats::{Mode, OutcomeStats, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Invalid(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Plain decimal with 12 significant digits, e.g. `0.250000000000`.
pub fn format_probability(p: f64) -> String {
    let sci = format!("{p:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    }
}

fn number(text: &str) -> Json {
    Json::Number(Number::from_str(text).expect("decimal literal"))
}

fn value(v: Value) -> Json {
    number(&v.to_string())
}

fn mode_name(mode: &Mode) -> &'static str {
    match mode {
        Mode::Exact => "exact",
        Mode::Sampled { .. } => "sampled",
    }
}

pub fn to_json(stats: &OutcomeStats) -> Json {
    let mut root = Map::new();
    root.insert("mode".into(), Json::String(mode_name(&stats.mode).into()));
    if let Mode::Sampled { samples, seed } = stats.mode {
        root.insert("samples".into(), Json::from(samples as u64));
        root.insert("seed".into(), Json::from(seed));
    }
    root.insert("success_probability".into(), number(&format_probability(stats.success_probability)));
    root.insert("labels".into(), Json::Array(stats.labels.iter().cloned().map(Json::String).collect()));
    let outcomes = stats
        .outcomes
        .iter()
        .map(|(key, p)| {
            let mut o = Map::new();
            o.insert("values".into(), Json::Array(key.iter().copied().map(value).collect()));
            o.insert("probability".into(), number(&format_probability(*p)));
            if let Some(counts) = &stats.counts {
                o.insert("count".into(), Json::from(counts.get(key).copied().unwrap_or(0) as u64));
            }
            Json::Object(o)
        })
        .collect();
    root.insert("outcomes".into(), Json::Array(outcomes));
    Json::Object(root)
}

/// Header: outcome labels, then `probability, count, mode, samples, seed,
/// success_probability`. One row per outcome.
pub fn to_csv(stats: &OutcomeStats) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Invalid(e.to_string());
    let mut header: Vec<String> = stats.labels.clone();
    header.extend(["probability", "count", "mode", "samples", "seed", "success_probability"].map(String::from));
    w.write_record(&header).map_err(io)?;
    let (samples, seed) = match stats.mode {
        Mode::Exact => (String::new(), String::new()),
        Mode::Sampled { samples, seed } => (samples.to_string(), seed.to_string()),
    };
    let success = format_probability(stats.success_probability);
    for (key, p) in &stats.outcomes {
        let mut row: Vec<String> = key.iter().map(Value::to_string).collect();
        row.push(format_probability(*p));
        row.push(stats.counts.as_ref().map(|c| c.get(key).copied().unwrap_or(0).to_string()).unwrap_or_default());
        row.push(mode_name(&stats.mode).into());
        row.push(samples.clone());
        row.push(seed.clone());
        row.push(success.clone());
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// Serialized report, newline-terminated.
pub fn report(stats: &OutcomeStats, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&to_json(stats)).map_err(|e| Error::Invalid(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => to_csv(stats),
    }
}
