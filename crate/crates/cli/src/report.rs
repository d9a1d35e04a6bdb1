//! The run report: a structured key-value document for scripts plus a
//! human-readable Argmax/Tuned/Delta table.
//!
//! Reports are self-consistent by construction: every reported score can be
//! recomputed from the confusion tables embedded next to it, and
//! [`RunReport::verify`] checks that to 1e-9 before anything is written.

use std::fmt::Write as _;

use taumax_core::metrics::{macro_score, ConfusionCounts, ScoreKind, ScoreSpec};

use crate::errors::CliError;

/// Metrics of one split at one threshold: the score plus the one-vs-rest
/// confusion tables it derives from.
#[derive(Debug, Clone)]
pub struct ThresholdMetrics {
    pub score: f64,
    pub confusions: Vec<ConfusionCounts<f64>>,
}

/// One split's entry: the score family, the argmax-threshold metrics, and
/// (when a tuned threshold was applied) the tuned metrics.
#[derive(Debug, Clone)]
pub struct SplitReport {
    pub name: String,
    /// One of "macro-f1", "macro-tss", "overall-accuracy".
    pub score_name: String,
    pub argmax: ThresholdMetrics,
    pub tuned: Option<ThresholdMetrics>,
}

/// A complete invocation record.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub invocation: String,
    pub seed: u64,
    pub timing_ms: u128,
    /// Free-form mode/flag echoes (mode, score, candidate count, tau_star,
    /// ...), serialized in order.
    pub fields: Vec<(String, String)>,
    pub splits: Vec<SplitReport>,
}

/// Recomputes a score from one-vs-rest confusion tables, by score family
/// name as used in reports.
pub fn recompute_score(
    score_name: &str,
    confusions: &[ConfusionCounts<f64>],
) -> Result<f64, CliError> {
    match score_name {
        "macro-f1" => Ok(macro_score(ScoreSpec::new(ScoreKind::F1), confusions)?),
        "macro-tss" => Ok(macro_score(ScoreSpec::new(ScoreKind::Tss), confusions)?),
        "overall-accuracy" => {
            let n = confusions
                .first()
                .map(|c| c.total())
                .ok_or_else(|| CliError::Input("empty confusion table".into()))?;
            let tp: f64 = confusions.iter().map(|c| c.true_pos).sum();
            Ok(tp / n)
        }
        other => Err(CliError::Input(format!("unknown score family {other:?}"))),
    }
}

impl RunReport {
    /// Checks that every reported score reproduces from its embedded
    /// confusion tables to 1e-9.
    pub fn verify(&self) -> Result<(), CliError> {
        for split in &self.splits {
            let check = |tag: &str, metrics: &ThresholdMetrics| -> Result<(), CliError> {
                let recomputed = recompute_score(&split.score_name, &metrics.confusions)?;
                if (recomputed - metrics.score).abs() > 1e-9 {
                    return Err(CliError::Input(format!(
                        "internal report inconsistency: {} {tag} {} = {} but its confusion \
                         tables give {recomputed}",
                        split.name, split.score_name, metrics.score
                    )));
                }
                Ok(())
            };
            check("argmax", &split.argmax)?;
            if let Some(tuned) = &split.tuned {
                check("tuned", tuned)?;
            }
        }
        Ok(())
    }

    /// The machine-readable document.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# taumax run report");
        let _ = writeln!(s, "invocation: {}", self.invocation);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "timing_ms: {}", self.timing_ms);
        for (k, v) in &self.fields {
            let _ = writeln!(s, "{k}: {v}");
        }
        for split in &self.splits {
            let _ = writeln!(s, "split: {}", split.name);
            let _ = writeln!(s, "  score_name: {}", split.score_name);
            let _ = writeln!(s, "  argmax_score: {:.16e}", split.argmax.score);
            write_confusions(&mut s, "argmax", &split.argmax.confusions);
            if let Some(tuned) = &split.tuned {
                let _ = writeln!(s, "  tuned_score: {:.16e}", tuned.score);
                write_confusions(&mut s, "tuned", &tuned.confusions);
                let _ = writeln!(s, "  delta: {:+.16e}", tuned.score - split.argmax.score);
            }
        }
        s
    }

    /// The human-readable block: one row per split/score with Argmax,
    /// Tuned, and Delta columns.
    pub fn table_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:<17} {:>9} {:>9} {:>9}",
            "Split", "Score", "Argmax", "Tuned", "Delta"
        );
        for split in &self.splits {
            match &split.tuned {
                Some(tuned) => {
                    let _ = writeln!(
                        s,
                        "{:<12} {:<17} {:>9.4} {:>9.4} {:>+9.4}",
                        split.name,
                        split.score_name,
                        split.argmax.score,
                        tuned.score,
                        tuned.score - split.argmax.score
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{:<12} {:<17} {:>9.4} {:>9} {:>9}",
                        split.name, split.score_name, split.argmax.score, "-", "-"
                    );
                }
            }
        }
        s
    }
}

fn write_confusions(s: &mut String, tag: &str, confusions: &[ConfusionCounts<f64>]) {
    for (j, c) in confusions.iter().enumerate() {
        let _ = writeln!(
            s,
            "  {tag}_confusion_{}: tn={} fp={} fn={} tp={}",
            j + 1,
            c.true_neg,
            c.false_pos,
            c.false_neg,
            c.true_pos
        );
    }
}
