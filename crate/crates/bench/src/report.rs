//! Markdown, CSV and JSON renderings of a benchmark run.

use std::fmt::Write as _;

use reinsim_kernel::Profile;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Scenario};
use crate::metrics::{reported_reference, Metric, MetricsRow, REFERENCE_LABEL};
use crate::run::SeedValidation;
use crate::sensitivity::{ScenarioResult, Sensitivity};
use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub system: String,
    pub pricing_variance: Option<f64>,
    pub capital_efficiency: Option<f64>,
    pub interpretation_error: Option<f64>,
    pub coordination_rounds: Option<f64>,
    pub human_intervention: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub label: String,
    pub rows: Vec<ReferenceRow>,
}

impl Reference {
    pub fn reported() -> Reference {
        let rows = Profile::ALL
            .into_iter()
            .map(|p| {
                let v = reported_reference(p);
                ReferenceRow {
                    system: p.label().to_string(),
                    pricing_variance: v[0],
                    capital_efficiency: v[1],
                    interpretation_error: v[2],
                    coordination_rounds: v[3],
                    human_intervention: v[4],
                }
            })
            .collect();
        Reference {
            label: REFERENCE_LABEL.to_string(),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_treaties: usize,
    pub seeds: Vec<u64>,
    pub generator_seed: u64,
    pub expense_ratio: f64,
    pub base: ScenarioResult,
    pub reference: Reference,
    pub validation: Vec<SeedValidation>,
    pub sensitivity: Option<Sensitivity>,
}

fn num(x: Option<f64>, digits: usize) -> String {
    match x {
        Some(v) => format!("{v:.digits$}"),
        None => "--".to_string(),
    }
}

fn digits(m: Metric) -> usize {
    if m == Metric::CoordinationRounds {
        2
    } else {
        3
    }
}

fn scenario_line(s: &Scenario) -> String {
    format!(
        "{} correlation, solvency threshold {:.2}",
        s.correlation.label(),
        s.solvency_threshold
    )
}

fn metrics_table(out: &mut String, rows: &[MetricsRow], with_reference: bool) {
    let mut head = String::from("| System |");
    for m in Metric::ALL {
        head.push_str(&format!(" {} |", m.header()));
    }
    if with_reference {
        head.push_str(&format!(" {REFERENCE_LABEL} |"));
    }
    let cols = Metric::ALL.len() + 1 + usize::from(with_reference);
    let _ = writeln!(out, "{head}");
    let _ = writeln!(out, "|{}", "---|".repeat(cols));
    for r in rows {
        let mut line = format!("| {} |", r.system);
        for m in Metric::ALL {
            line.push_str(&format!(" {} |", num(r.value(m), digits(m))));
        }
        if with_reference {
            let refs: Vec<String> = reported_reference(r.profile)
                .iter()
                .map(|v| num(*v, 2))
                .collect();
            line.push_str(&format!(" {} |", refs.join(" / ")));
        }
        let _ = writeln!(out, "{line}");
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl Report {
    pub fn new(
        cfg: &RunConfig,
        base: ScenarioResult,
        validation: Vec<SeedValidation>,
        sensitivity: Option<Sensitivity>,
    ) -> Report {
        Report {
            n_treaties: cfg.n_treaties,
            seeds: cfg.seeds.clone(),
            generator_seed: cfg.generator.seed,
            expense_ratio: cfg.expense_ratio,
            base,
            reference: Reference::reported(),
            validation,
            sensitivity,
        }
    }

    pub fn validation_passes(&self) -> bool {
        self.validation.iter().all(|v| v.report.all_pass())
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "# Benchmark report\n");
        let _ = writeln!(
            out,
            "{} treaties (generator seed {}), run seeds {}, {}, expense ratio {:.2}.\n",
            self.n_treaties,
            self.generator_seed,
            seeds.join(", "),
            scenario_line(&self.base.scenario),
            self.expense_ratio
        );
        let _ = writeln!(out, "## Results\n");
        metrics_table(&mut out, &self.base.rows, true);
        let _ = writeln!(
            out,
            "\nPricing variance is relative to the rule-based pipeline. The last column is reference \
             material measured on LLM agents and is not a target of this simulator.\n"
        );
        validation_markdown(&mut out, &self.validation);
        structural_markdown(&mut out, std::slice::from_ref(&self.base));
        if let Some(s) = &self.sensitivity {
            sensitivity_markdown(&mut out, s);
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let enc = |e: csv::Error| BenchError::Encode(e.to_string());
        let mut head = vec![
            "source".to_string(),
            "scenario".to_string(),
            "system".to_string(),
        ];
        head.extend(Metric::ALL.iter().map(|m| m.key().to_string()));
        w.write_record(&head).map_err(enc)?;
        let mut scenarios = vec![&self.base];
        if let Some(s) = &self.sensitivity {
            scenarios.extend(s.scenarios.iter().skip(1));
        }
        for s in scenarios {
            for r in &s.rows {
                let mut rec = vec![
                    "measured".to_string(),
                    scenario_line(&s.scenario),
                    r.system.clone(),
                ];
                rec.extend(
                    Metric::ALL
                        .iter()
                        .map(|m| r.value(*m).map_or(String::new(), |v| v.to_string())),
                );
                w.write_record(&rec).map_err(enc)?;
            }
        }
        for r in &self.reference.rows {
            let vals = [
                r.pricing_variance,
                r.capital_efficiency,
                r.interpretation_error,
                r.coordination_rounds,
                r.human_intervention,
            ];
            let mut rec = vec![
                self.reference.label.clone(),
                String::new(),
                r.system.clone(),
            ];
            rec.extend(
                vals.iter()
                    .map(|v| v.map_or(String::new(), |v| v.to_string())),
            );
            w.write_record(&rec).map_err(enc)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| BenchError::Encode(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Encode(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, BenchError> {
        serde_json::to_string_pretty(self).map_err(|e| BenchError::Encode(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String, BenchError> {
        match format {
            Format::Md => Ok(self.to_markdown()),
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn validation_markdown(out: &mut String, validation: &[SeedValidation]) {
    if validation.is_empty() {
        return;
    }
    let _ = writeln!(out, "## Generator validation\n");
    let _ = writeln!(out, "| Seed | Quantity | Value | SD | Range | Pass |");
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    for v in validation {
        for c in &v.report.checks {
            let _ = writeln!(
                out,
                "| {} | {} | {:.3} | {} | {:.2} to {:.2} | {} |",
                v.seed,
                c.quantity,
                c.value,
                num(c.sd, 3),
                c.low,
                c.high,
                yes(c.pass)
            );
        }
    }
    let _ = writeln!(out);
}

fn structural_markdown(out: &mut String, results: &[ScenarioResult]) {
    let _ = writeln!(out, "## Structural orderings\n");
    let _ = writeln!(
        out,
        "| Setting | Interp. multi <= nogov | Interp. multi <= single | Escal. multi <= nogov | Escal. multi <= single | Multi rounds | Within cap | Holds |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for r in results {
        let s = &r.structural;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} of {} | {:.3} | {} |",
            scenario_line(&r.scenario),
            yes(s.interpretation_multi_le_nogov),
            yes(s.interpretation_multi_le_single),
            yes(s.escalation_multi_le_nogov),
            yes(s.escalation_multi_le_single),
            num(s.multi_mean_rounds, 2),
            s.max_rounds,
            s.multi_within_cap,
            yes(s.holds())
        );
    }
    let _ = writeln!(out);
}

pub fn sensitivity_markdown(out: &mut String, s: &Sensitivity) {
    let _ = writeln!(out, "## Sensitivity\n");
    for (r, checks) in s.scenarios.iter().zip(&s.orderings).skip(1) {
        let _ = writeln!(out, "### {}\n", scenario_line(&r.scenario));
        metrics_table(out, &r.rows, false);
        let kept: Vec<String> = checks
            .iter()
            .map(|c| {
                if c.preserved {
                    format!("{}: kept", c.metric.header())
                } else {
                    let pairs: Vec<String> =
                        c.swapped.iter().map(|(a, b)| format!("{a}/{b}")).collect();
                    format!("{}: swapped {}", c.metric.header(), pairs.join(", "))
                }
            })
            .collect();
        let _ = writeln!(
            out,
            "\nOrdering against the base run: {}.\n",
            kept.join("; ")
        );
    }
    structural_markdown(out, &s.scenarios);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Md,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Md => "md",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}
