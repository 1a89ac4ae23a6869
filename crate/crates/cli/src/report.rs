//! Report assembly. Every number goes through [`num`] once, and both the
//! table and the JSON renderers print that same value.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use weaktrace::evolution::Scenario;
use weaktrace::trace::{ContinuityVerdict, PresenceMap};
use weaktrace::weakmeas::{Convergence, SweepReport, WeakValue};
use weaktrace::Result;

/// Values below this print as exactly zero.
pub const ZERO_CUTOFF: f64 = 1e-12;

/// Rounds to 15 significant digits and clamps tiny values to zero.
pub fn num(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x.abs() < ZERO_CUTOFF {
        return 0.0;
    }
    format!("{x:.14e}").parse::<f64>().unwrap_or(x) + 0.0
}

pub fn fmt_num(x: f64) -> String {
    format!("{}", num(x))
}

/// `re+imi`, both parts rounded by [`num`].
pub fn fmt_complex(re: f64, im: f64) -> String {
    let (re, im) = (num(re), num(im));
    let sign = if im.is_sign_negative() { '-' } else { '+' };
    format!("{re}{sign}{}i", im.abs())
}

pub fn scenario_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Everything one subcommand run reports. Sections left `None` are omitted.
pub struct RunReport {
    pub scenario: String,
    pub hash: String,
    pub probability: f64,
    pub weak_values: Vec<WeakValue>,
    pub trace: Option<(PresenceMap, ContinuityVerdict)>,
    pub sweeps: Vec<SweepReport>,
}

impl RunReport {
    pub fn new(scenario: &Scenario, canonical: &str, weak_values: Vec<WeakValue>) -> Result<RunReport> {
        Ok(RunReport {
            scenario: scenario.name().to_string(),
            hash: scenario_hash(canonical),
            probability: scenario.postselect_probability()?,
            weak_values,
            trace: None,
            sweeps: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut doc = Map::new();
        doc.insert("scenario".into(), json!(self.scenario));
        doc.insert("scenario_hash".into(), json!(self.hash));
        doc.insert("postselection_probability".into(), json!(num(self.probability)));
        doc.insert(
            "weak_values".into(),
            Value::Array(
                self.weak_values
                    .iter()
                    .map(|w| {
                        json!({
                            "arm": w.arm.clone().unwrap_or_default(),
                            "boundary": w.boundary,
                            "re": num(w.value.re),
                            "im": num(w.value.im),
                        })
                    })
                    .collect(),
            ),
        );
        if let Some((map, verdict)) = &self.trace {
            doc.insert(
                "trace".into(),
                json!({
                    "threshold": map.threshold,
                    "present": map.present_arms(),
                    "absent": map.absent_arms(),
                    "gaps": verdict.gaps,
                    "continuous": verdict.continuous,
                    "components": verdict.components.iter().map(|c| json!({
                        "arms": c.arms,
                        "source": c.source,
                        "detector": c.detector,
                    })).collect::<Vec<_>>(),
                }),
            );
        }
        if !self.sweeps.is_empty() {
            doc.insert("sweeps".into(), Value::Array(self.sweeps.iter().map(sweep_json).collect()));
        }
        let mut out = serde_json::to_string_pretty(&Value::Object(doc)).expect("report is serializable");
        out.push('\n');
        out
    }

    pub fn weak_value_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} ({})", self.scenario, &self.hash[..12]);
        let _ = writeln!(out, "postselection probability {}", fmt_num(self.probability));
        let _ = writeln!(out, "{:<8} {:>8}  weak value", "arm", "boundary");
        for w in &self.weak_values {
            let _ = writeln!(
                out,
                "{:<8} {:>8}  {}",
                w.arm.as_deref().unwrap_or("-"),
                w.boundary,
                fmt_complex(w.value.re, w.value.im)
            );
        }
        out
    }

    pub fn trace_table(&self) -> String {
        let mut out = self.weak_value_table();
        if let Some((map, verdict)) = &self.trace {
            let _ = writeln!(out, "threshold {}", map.threshold);
            for c in &verdict.components {
                let mut ends = Vec::new();
                if c.source {
                    ends.push("source");
                }
                if c.detector {
                    ends.push("detector");
                }
                let _ = writeln!(out, "component {} [{}]", c.arms.join(","), ends.join(","));
            }
            let _ = writeln!(
                out,
                "{}; present: {}; gaps: {}",
                if verdict.continuous { "continuous" } else { "discontinuous" },
                join_or_none(&map.present_arms()),
                join_or_none(&verdict.gaps),
            );
        }
        out
    }

    pub fn sweep_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} ({})", self.scenario, &self.hash[..12]);
        let _ = writeln!(out, "postselection probability {}", fmt_num(self.probability));
        for s in &self.sweeps {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "arm {} boundary {} width {} weak value {}",
                s.arm,
                s.boundary,
                fmt_num(s.width),
                fmt_complex(s.weak_value.re, s.weak_value.im)
            );
            let _ = writeln!(
                out,
                "{:>10} {:>20} {:>20} {:>20} {:>20} {:>20} {:>20}",
                "g", "shift", "momentum", "shift/g", "discrepancy", "P(g)", "|P(g)-P(0)|"
            );
            for p in &s.points {
                let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    out,
                    "{:>10} {:>20} {:>20} {:>20} {:>20} {:>20} {:>20}",
                    fmt_num(p.g),
                    fmt_num(p.position_shift),
                    fmt_num(p.momentum_shift),
                    opt(p.ratio),
                    opt(p.discrepancy),
                    fmt_num(p.probability),
                    fmt_num(p.probability_deviation)
                );
            }
            let _ = writeln!(
                out,
                "shift convergence: {}; probability deviation: {}",
                order_text(s.shift_convergence),
                order_text(s.probability_convergence)
            );
        }
        out
    }
}

fn join_or_none<S: AsRef<str>>(items: &[S]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",")
    }
}

fn order_text(c: Convergence) -> String {
    match c {
        Convergence::Exact => "exact".into(),
        Convergence::Order(o) => format!("order {}", fmt_num(o)),
        Convergence::Undetermined => "undetermined".into(),
    }
}

fn order_json(c: Convergence) -> Value {
    match c {
        Convergence::Exact => json!("exact"),
        Convergence::Order(o) => json!(num(o)),
        Convergence::Undetermined => Value::Null,
    }
}

fn sweep_json(s: &SweepReport) -> Value {
    json!({
        "arm": s.arm,
        "boundary": s.boundary,
        "width": num(s.width),
        "weak_value": {"re": num(s.weak_value.re), "im": num(s.weak_value.im)},
        "baseline_probability": num(s.baseline_probability),
        "shift_order": order_json(s.shift_convergence),
        "probability_order": order_json(s.probability_convergence),
        "points": s.points.iter().map(|p| json!({
            "g": num(p.g),
            "position_shift": num(p.position_shift),
            "momentum_shift": num(p.momentum_shift),
            "ratio": p.ratio.map(num),
            "discrepancy": p.discrepancy.map(num),
            "probability": num(p.probability),
            "probability_deviation": num(p.probability_deviation),
        })).collect::<Vec<_>>(),
    })
}
