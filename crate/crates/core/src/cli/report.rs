use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{Format, OutputArgs};
use crate::error::Result;
use crate::newton::{ConfirmationProbe, IterationRecord, NewtonTrace, StopReason};
use crate::pairspace::BasisSpec;
use crate::representability::ConditionSet;

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e15)`.
pub(super) fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub(super) fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// CSV field quoting for free text.
pub(super) fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

pub(super) struct Output<'a> {
    args: &'a OutputArgs,
    start: Instant,
}

impl<'a> Output<'a> {
    pub fn new(args: &'a OutputArgs, start: Instant) -> Self {
        Self { args, start }
    }

    /// Writes `csv` or `data` as JSON. The timestamp is the first CSV line, or the
    /// `generated` member of the JSON envelope.
    pub fn emit<T: Serialize>(&self, csv: &str, data: &T) -> Result<()> {
        let stamp = (!self.args.no_timestamp).then(|| {
            let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            (unix, self.start.elapsed().as_secs_f64())
        });
        let text = match self.args.format {
            Format::Csv => match stamp {
                Some((unix, wall)) => format!("# generated_unix={unix} wall_seconds={wall:.3}\n{csv}"),
                None => csv.to_string(),
            },
            Format::Json => {
                let mut value = serde_json::json!({ "data": data });
                if let Some((unix, wall)) = stamp {
                    value["generated"] = serde_json::json!({ "unix": unix, "wall_seconds": wall });
                }
                let mut s = serde_json::to_string_pretty(&value).map_err(std::io::Error::other)?;
                s.push('\n');
                s
            }
        };
        match &self.args.output {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub(super) struct SolveReport {
    pub source: String,
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub e_core: f64,
    pub conditions: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub energy: Option<f64>,
    pub mu_star: Option<f64>,
    pub stop: Option<StopReason>,
    pub outer_iterations: usize,
    pub refinements: usize,
    pub inner_iterations: usize,
    pub probe: Option<ConfirmationProbe>,
    pub e_ref_fci: Option<f64>,
    pub e_ref_hf: Option<f64>,
    pub correlation_percent: Option<f64>,
    pub iterations: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn new(source: String, basis: BasisSpec, e_core: f64, conditions: ConditionSet) -> Self {
        Self {
            source,
            n_orbitals: basis.n_orbitals(),
            n_electrons: basis.n_electrons(),
            e_core,
            conditions: conditions.to_string(),
            status: "converged",
            error: None,
            energy: None,
            mu_star: None,
            stop: None,
            outer_iterations: 0,
            refinements: 0,
            inner_iterations: 0,
            probe: None,
            e_ref_fci: None,
            e_ref_hf: None,
            correlation_percent: None,
            iterations: Vec::new(),
        }
    }

    pub fn fill(&mut self, trace: &NewtonTrace) {
        self.energy = trace.energy;
        self.mu_star = trace.mu_star;
        self.stop = trace.stop;
        self.outer_iterations = trace.outer_iterations();
        self.refinements = trace.refinements();
        self.inner_iterations = trace.total_inner_iterations();
        self.probe = trace.probe;
        self.iterations = trace.iterations.clone();
        self.correlation_percent = match (self.e_ref_hf, self.e_ref_fci, self.energy) {
            (Some(hf), Some(fci), Some(e)) if hf != fci => Some((hf - e) / (hf - fci) * 100.0),
            _ => None,
        };
    }

    pub fn csv(&self) -> String {
        let mut s = String::new();
        let mut meta = |k: &str, v: String| s.push_str(&format!("# {k}={v}\n"));
        meta("source", self.source.clone());
        meta("n_orbitals", self.n_orbitals.to_string());
        meta("n_electrons", self.n_electrons.to_string());
        meta("e_core", num(self.e_core));
        meta("conditions", self.conditions.clone());
        meta("status", self.status.to_string());
        if let Some(e) = &self.error {
            meta("error", e.replace('\n', " "));
        }
        meta("energy", opt(self.energy));
        meta("mu_star", opt(self.mu_star));
        meta("stop", self.stop.map(|s| stop_name(s).to_string()).unwrap_or_default());
        meta("outer_iterations", self.outer_iterations.to_string());
        meta("refinements", self.refinements.to_string());
        meta("inner_iterations", self.inner_iterations.to_string());
        if let Some(p) = &self.probe {
            meta("probe_passed", p.passed.to_string());
        }
        if let Some(v) = self.e_ref_fci {
            meta("e_ref_fci", num(v));
        }
        if let Some(v) = self.e_ref_hf {
            meta("e_ref_hf", num(v));
        }
        if let Some(v) = self.correlation_percent {
            meta("correlation_percent", num(v));
        }
        s.push_str("step,kind,mu,delta,derivative,slope,inner_iterations\n");
        for (i, r) in self.iterations.iter().enumerate() {
            let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            s.push_str(&format!(
                "{i},{kind},{},{},{},{},{}\n",
                num(r.mu),
                num(r.delta),
                num(r.derivative),
                opt(r.slope),
                r.inner_iterations
            ));
        }
        s
    }
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::SlopeTest => "slope_test",
        StopReason::ZeroDistance => "zero_distance",
        StopReason::StartAtZero => "start_at_zero",
    }
}
