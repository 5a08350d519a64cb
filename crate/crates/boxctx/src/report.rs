//! Plain-text rendering of metric summaries.

use std::fmt::Write;

use boxctx_core::evaluation::MetricsSummary;

fn marks(beats: &[u8]) -> String {
    if beats.is_empty() {
        String::new()
    } else {
        let v: Vec<String> = beats.iter().map(u8::to_string).collect();
        format!(" [{}]", v.join(","))
    }
}

/// One line per classifier and method: mean, std, rank and the indices of
/// the methods it beats significantly (plain=1, octx=2, rctx=3).
pub fn render_summary(s: &MetricsSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:<6} {:>5} {:>24} {:>5} {:>24} {:>5}",
        "clf", "method", "folds", "ZO mean±std", "rank", "SqCov mean±std", "rank"
    );
    for e in &s.entries {
        let zo = format!("{:.3}±{:.3}{}", e.zo_mean, e.zo_std, marks(&e.zo_beats));
        let sq = format!("{:.3}±{:.3}{}", e.sqcov_mean, e.sqcov_std, marks(&e.sqcov_beats));
        let _ = writeln!(
            out,
            "{:<6} {:<6} {:>5} {:>24} {:>5.2} {:>24} {:>5.2}",
            e.classifier, e.method, e.folds, zo, e.zo_rank, sq, e.sqcov_rank
        );
    }
    let _ = writeln!(
        out,
        "significance: Wilcoxon signed-rank, Holm step-down, alpha = {}",
        s.alpha
    );
    out
}
