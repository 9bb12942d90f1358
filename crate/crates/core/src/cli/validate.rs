use std::fmt;

use super::config::{Analysis, ExperimentConfig};
use super::run::build_functional;
use crate::dsl::{check_growth, parse_expr};
use crate::error::Error;
use crate::product::predict_cost;
use crate::time::{format_time, is_dyadic_at, parse_time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Config section the message refers to, e.g. `functional` or `analysis[2]`.
    pub section: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        };
        write!(f, "{tag}: [{}] {}", self.section, self.message)
    }
}

#[derive(Debug, Default)]
struct Sink(Vec<Diagnostic>);

impl Sink {
    fn push(&mut self, severity: Severity, section: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic { severity, section: section.into(), message: message.into() });
    }
}

fn describe(e: &Error, text: &str) -> String {
    match e {
        Error::Parse { offset, message } => format!("{message} in '{text}' at byte {offset}"),
        other => other.to_string(),
    }
}

/// Static checks only: parsing, bounds, dyadic times, analysis shapes and predicted cost.
pub fn validate_text(text: &str) -> Vec<Diagnostic> {
    let mut d = Sink::default();
    match ExperimentConfig::from_toml(text) {
        Ok(config) => validate(&config, &mut d),
        Err(e) => d.push(Severity::Error, "config", e.to_string()),
    }
    d.0
}

fn validate(config: &ExperimentConfig, d: &mut Sink) {
    if let Err(e) = config.numerics.validate() {
        d.push(Severity::Error, "numerics", e.to_string());
    }
    if let Some(Err(e)) = config.pde.as_ref().map(|g| g.validate()) {
        d.push(Severity::Error, "pde", e.to_string());
    }
    let lv = config.levels;
    if lv.min == 0 || lv.min > lv.max {
        d.push(Severity::Error, "levels", format!("invalid level range {}..{}", lv.min, lv.max));
    }
    if lv.max > config.numerics.max_level {
        d.push(
            Severity::Warning,
            "levels",
            format!("levels above {} will trip the resource guard", config.numerics.max_level),
        );
    }
    let models = [("models.m", &config.models.m), ("models.n", &config.models.n)].map(|(name, m)| {
        m.build(if name.ends_with('m') { "M" } else { "N" })
            .map_err(|e| d.push(Severity::Error, name, e.to_string()))
            .ok()
    });
    let [Some(mm), Some(mn)] = models else { return };

    let fc = &config.functional;
    let (times, f) = match build_functional(fc, config, &mm, &mn) {
        Ok(v) => v,
        Err(e) => {
            d.push(Severity::Error, "functional", describe(&e, &fc.expr));
            return;
        }
    };
    if let Ok(expr) = parse_expr(&fc.expr, times.len()) {
        if let Ok(g) = check_growth(&expr) {
            d.push(Severity::Note, "functional", format!("growth {g:?}"));
        }
    }
    d.push(
        Severity::Note,
        "functional",
        format!(
            "Lipschitz bound {:.6e}, sup bound {:.6e}",
            f.phi().lipschitz().unwrap_or(f64::NAN),
            f.phi().bound().unwrap_or(f64::NAN)
        ),
    );
    let g_models = config.models.m.g_spec().ok().flatten().is_some()
        && config.models.n.g_spec().ok().flatten().is_some();

    let mut total_cost = 0.0;
    for (i, a) in config.analyses.iter().enumerate() {
        let sec = format!("analysis[{i}] {}", a.name());
        let needs_dyadic: Vec<u32> = match a {
            Analysis::Evaluate { level, .. } | Analysis::Marginal { level, .. } => {
                vec![level.unwrap_or(lv.max)]
            }
            Analysis::Scan { .. } | Analysis::PdeCompare { .. } => vec![lv.min],
            Analysis::Order { level, .. } => vec![level.unwrap_or(lv.min)],
            Analysis::Independence { level, .. } => vec![level.unwrap_or(lv.max)],
            _ => Vec::new(),
        };
        for level in &needs_dyadic {
            if let Some(t) = times.iter().find(|t| !is_dyadic_at(**t, *level)) {
                d.push(
                    Severity::Error,
                    &sec,
                    format!(
                        "time {} is not on the dyadic grid of level {level}; use an 'extend' analysis for non-dyadic times",
                        format_time(*t)
                    ),
                );
            }
        }
        if fc.blocks > 1 && !matches!(a, Analysis::Evaluate { .. }) {
            d.push(Severity::Error, &sec, "times beyond 1 (blocks > 1) are supported by 'evaluate' only");
        }
        match a {
            Analysis::PdeCompare { .. } | Analysis::MomentBound { .. } if !g_models => {
                d.push(Severity::Error, &sec, "needs g-brownian models for both processes");
            }
            Analysis::PdeCompare { .. } if times.len() != 1 => {
                d.push(Severity::Error, &sec, "the PDE solver needs a functional with one observation time");
            }
            Analysis::Marginal { .. } if f.touches(0) && f.touches(1) => {
                d.push(
                    Severity::Error,
                    &sec,
                    "marginal evaluation needs a functional of one coordinate only",
                );
            }
            Analysis::Independence { battery, .. } => {
                for text in battery {
                    if let Err(e) = parse_expr(text, times.len()) {
                        d.push(Severity::Error, &sec, describe(&e, text));
                    }
                }
            }
            Analysis::MomentBound { times, .. } => {
                for t in times {
                    if let Err(e) = parse_time(t) {
                        d.push(Severity::Error, &sec, e.to_string());
                    }
                }
            }
            Analysis::Extend { level_i, level_j, eval_level } => {
                if eval_level.is_some_and(|e| e < *level_i.max(level_j)) {
                    d.push(Severity::Error, &sec, "evaluation level is below the approximation levels");
                }
                if let Err(e) = crate::limit::dyadic_approximants(&times, *level_i.min(level_j)) {
                    d.push(Severity::Error, &sec, e.to_string());
                }
                if f.phi().lipschitz().is_none() {
                    d.push(Severity::Error, &sec, "functional has no Lipschitz bound");
                }
            }
            _ => {}
        }
        let cost_levels: Vec<u32> = match a {
            Analysis::Scan { .. } | Analysis::PdeCompare { .. } => (lv.min..=lv.max).collect(),
            Analysis::Evaluate { .. } | Analysis::Marginal { .. } | Analysis::Order { .. } => {
                needs_dyadic.clone()
            }
            _ => Vec::new(),
        };
        for level in cost_levels {
            if times.iter().any(|t| !is_dyadic_at(*t, level)) {
                continue;
            }
            match predict_cost(&f, level, mm.as_ref(), mn.as_ref(), &config.numerics) {
                Ok((_, c)) => total_cost += c,
                Err(Error::ResourceLimit(msg)) => d.push(
                    Severity::Warning,
                    &sec,
                    format!("level {level}: {msg}; the report will be truncated"),
                ),
                Err(e) => d.push(Severity::Error, &sec, e.to_string()),
            }
        }
    }
    d.push(Severity::Note, "cost", format!("predicted lattice work {total_cost:.3e} multiply-adds"));
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}
