//! Text encodings. Series print one row per power of `z`, entries in aligned columns.

use std::fmt::Write;

use slnt_core::hierarchy::HierarchyKind;
use slnt_core::solver::{HierarchySolution, Outcome, ResidualReport, WaveMatrixPair};
use slnt_core::{Complex64, LoopSeries};

use crate::ZcOutput;

fn entry(c: &Complex64) -> String {
    format!("{:>13.6e} {:>13.6e}i", c.re, c.im)
}

fn series(out: &mut String, name: &str, s: &LoopSeries<Complex64>) {
    let _ = writeln!(out, "{name}:");
    for (k, m) in s.terms() {
        for i in 0..s.n() {
            let label = if i == 0 { format!("z^{k}") } else { String::new() };
            let row: Vec<String> = (0..s.n()).map(|j| entry(&m[(i, j)])).collect();
            let _ = writeln!(out, "  {label:>6}  {}", row.join("   "));
        }
    }
}

pub(crate) fn solution_text(provenance: &str, pair: &WaveMatrixPair, sol: &HierarchySolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "provenance  {provenance}");
    let _ = writeln!(out, "kind        {:?}", sol.kind);
    let _ = writeln!(out, "window      [{}, {}]", sol.window.lo, sol.window.hi);
    let _ = writeln!(
        out,
        "residual    {:.3e}   truncation {:.3e}{}   reconstruction {:.3e}",
        pair.residual,
        pair.truncation,
        if pair.truncation_flagged { " (flagged)" } else { "" },
        pair.reconstruction
    );
    for (prefix, family) in [("U", &sol.u), ("V", &sol.v), ("W", &sol.w)] {
        for (a, s) in family.iter().enumerate() {
            series(&mut out, &format!("{prefix}_{}", a + 1), s);
        }
    }
    out
}

pub(crate) fn report_text(
    provenance: &str,
    kind: HierarchyKind,
    tol: f64,
    passed: bool,
    report: &ResidualReport,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "provenance  {provenance}");
    let _ = writeln!(out, "kind        {kind:?}");
    for (check, outcome) in &report.checks {
        let value = match outcome {
            Outcome::Residual(x) => format!("{x:.3e}"),
            Outcome::Inconclusive => "inconclusive".into(),
        };
        let _ = writeln!(out, "  {:<16} {value:>12}", check.to_string());
    }
    let _ = writeln!(out, "{} (tolerance {tol:.1e})", if passed { "PASS" } else { "FAIL" });
    out
}

pub(crate) fn zc_text(z: &ZcOutput) -> String {
    let mut out = String::new();
    if let Some(p) = &z.provenance {
        let _ = writeln!(out, "provenance  {p}");
    }
    let _ = writeln!(out, "kind        {:?}{}", z.kind, if z.symbolic { " (symbolic)" } else { "" });
    for (check, e) in &z.checks {
        let _ = writeln!(out, "  {check:<16} {:>12.3e} {:>6} terms", e.zero_curvature, e.terms);
    }
    out
}
