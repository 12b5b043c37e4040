//! Experiment reports as a human-readable table and as a `key=value` file.
//!
//! Key-value schema (one pair per line, keys in the order below):
//!
//! ```text
//! format=wordsub-eval
//! version=1
//! seed=<u64>
//! documents=<n>
//! folds=<count>
//! strategies=<name>,<name>,...
//! <s>.feature=<feature>
//! <s>.mean_accuracy=<real>
//! <s>.std_accuracy=<real>
//! <s>.degenerate=<true|false>
//! <s>.fold.<i>.accuracy=<real>
//! <s>.fold.<i>.correct=<n>
//! <s>.fold.<i>.total=<n>
//! <s>.fold.<i>.unclassifiable=<n>
//! <s>.fold.<i>.validation_accuracy=<real|none>
//! <s>.fold.<i>.params=<mc=..,mq=..|k=..|lambda=..|->
//! <s>.fold.<i>.skipped=<n>
//! ttest.a=<name>            (only with a paired comparison)
//! ttest.b=<name>
//! ttest.t=<real>
//! ttest.p=<real>
//! ttest.dof=<n>
//! ttest.mean_difference=<real>
//! ```
//!
//! Reals use the shortest representation that round-trips.

use std::fmt::Write as _;

use super::experiment::StrategyReport;
use super::ttest::TTest;
use crate::classifiers::Strategy;

pub const REPORT_FORMAT: &str = "wordsub-eval";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: Strategy,
    pub b: Strategy,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub documents: usize,
    pub strategies: Vec<StrategyReport>,
    pub comparison: Option<Comparison>,
}

impl EvalReport {
    pub fn strategy(&self, s: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| r.strategy == s)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "documents: {}  seed: {}", self.documents, self.seed);
        let _ = writeln!(out, "{:<8} {:<9} {:>10} {:>9}", "method", "feature", "accuracy%", "std%");
        for r in &self.strategies {
            let _ = writeln!(
                out,
                "{:<8} {:<9} {:>10.2} {:>9.2}{}",
                r.strategy.name(),
                r.feature.name(),
                100.0 * r.mean_accuracy,
                100.0 * r.std_accuracy,
                if r.degenerate { "  (degenerate setup)" } else { "" }
            );
        }
        for r in &self.strategies {
            let _ = writeln!(out, "\n{} per fold:", r.strategy.name());
            let _ = writeln!(out, "{:>4} {:>9} {:>8} {:>14}  params", "fold", "accuracy", "correct", "unclassifiable");
            for f in &r.folds {
                let _ = writeln!(
                    out,
                    "{:>4} {:>9.4} {:>8} {:>14}  {}",
                    f.fold,
                    f.accuracy,
                    format!("{}/{}", f.correct, f.total),
                    f.unclassifiable,
                    f.selected
                );
                for note in &f.notes {
                    let _ = writeln!(out, "       note: {note}");
                }
            }
        }
        if let Some(c) = &self.comparison {
            let _ = writeln!(
                out,
                "\npaired t-test {} vs {}: t = {:.4}, p = {:.4} ({} d.o.f.)",
                c.a, c.b, c.test.t, c.test.p, c.test.degrees_of_freedom
            );
        }
        out
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("format", &REPORT_FORMAT);
        kv("version", &REPORT_VERSION);
        kv("seed", &self.seed);
        kv("documents", &self.documents);
        kv("folds", &self.strategies.first().map_or(0, |r| r.folds.len()));
        let names: Vec<&str> = self.strategies.iter().map(|r| r.strategy.name()).collect();
        kv("strategies", &names.join(","));
        for r in &self.strategies {
            let s = r.strategy.name();
            kv(&format!("{s}.feature"), &r.feature);
            kv(&format!("{s}.mean_accuracy"), &r.mean_accuracy);
            kv(&format!("{s}.std_accuracy"), &r.std_accuracy);
            kv(&format!("{s}.degenerate"), &r.degenerate);
            for f in &r.folds {
                let p = format!("{s}.fold.{}", f.fold);
                kv(&format!("{p}.accuracy"), &f.accuracy);
                kv(&format!("{p}.correct"), &f.correct);
                kv(&format!("{p}.total"), &f.total);
                kv(&format!("{p}.unclassifiable"), &f.unclassifiable);
                match f.validation_accuracy {
                    Some(v) => kv(&format!("{p}.validation_accuracy"), &v),
                    None => kv(&format!("{p}.validation_accuracy"), &"none"),
                }
                kv(&format!("{p}.params"), &f.selected);
                kv(&format!("{p}.skipped"), &f.notes.iter().filter(|n| n.starts_with("skipped")).count());
            }
        }
        if let Some(c) = &self.comparison {
            kv("ttest.a", &c.a);
            kv("ttest.b", &c.b);
            kv("ttest.t", &c.test.t);
            kv("ttest.p", &c.test.p);
            kv("ttest.dof", &c.test.degrees_of_freedom);
            kv("ttest.mean_difference", &c.test.mean_difference);
        }
        out
    }
}
