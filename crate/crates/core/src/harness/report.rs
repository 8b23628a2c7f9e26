use std::io::{self, Write};

use super::experiment::ExperimentReport;

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Tab-separated summary: a method table, then significance and counts
/// tables, each introduced by a `#` line.
pub fn write_tsv<W: Write>(mut w: W, r: &ExperimentReport) -> io::Result<()> {
    writeln!(
        w,
        "# metric={} k={} objective={} beta={} seed={} draws={} folds={}",
        r.metric, r.k, r.objective, r.beta, r.seed, r.draws, r.folds
    )?;
    let fold_cols: Vec<String> = (0..r.folds).map(|i| format!("fold{i}")).collect();
    writeln!(w, "method\tmean\tsd\tfirst_split_mean\t{}", fold_cols.join("\t"))?;
    for s in &r.methods {
        let folds: Vec<String> = s.measurements.iter().map(|&x| f6(x)).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            s.method,
            f6(s.mean),
            f6(s.sd),
            f6(s.first_split_mean),
            folds.join("\t")
        )?;
    }
    writeln!(w, "# significance (two-tailed paired t-test, Bonferroni)")?;
    writeln!(w, "method\treference\tt\tp\tp_bonferroni\tsignificant")?;
    for s in &r.significance {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.method,
            s.reference,
            f6(s.t),
            f6(s.p),
            f6(s.p_bonferroni),
            s.significant
        )?;
    }
    writeln!(w, "# per-query counts vs reference (strict)")?;
    writeln!(w, "method\treference\timproved\tdegraded\tunchanged")?;
    for c in &r.counts {
        writeln!(w, "{}\t{}\t{}\t{}\t{}", c.method, c.reference, c.improved, c.degraded, c.unchanged)?;
    }
    Ok(())
}

pub fn write_markdown<W: Write>(mut w: W, r: &ExperimentReport) -> io::Result<()> {
    writeln!(w, "# Experiment report\n")?;
    writeln!(
        w,
        "Metric `{}`, k = {}, objective {}, beta = {}, seed {}, {} draws x 2 folds.\n",
        r.metric, r.k, r.objective, r.beta, r.seed, r.draws
    )?;
    writeln!(w, "| method | mean | sd | first split |")?;
    writeln!(w, "|---|---:|---:|---:|")?;
    for s in &r.methods {
        let marks: String = r
            .significance
            .iter()
            .filter(|x| x.method == s.method && x.significant)
            .map(|x| format!(" *{}", x.reference))
            .collect();
        writeln!(
            w,
            "| {}{} | {} | {} | {} |",
            s.method,
            marks,
            f6(s.mean),
            f6(s.sd),
            f6(s.first_split_mean)
        )?;
    }
    writeln!(w, "\n`*ref` marks a significant difference from `ref` (p < 0.05 after Bonferroni).\n")?;
    if !r.counts.is_empty() {
        writeln!(w, "| method | reference | improved | degraded | unchanged |")?;
        writeln!(w, "|---|---|---:|---:|---:|")?;
        for c in &r.counts {
            writeln!(w, "| {} | {} | {} | {} | {} |", c.method, c.reference, c.improved, c.degraded, c.unchanged)?;
        }
    }
    Ok(())
}

/// `query<TAB>method<TAB>draw<TAB>score`, one line per test evaluation.
pub fn write_per_query<W: Write>(mut w: W, r: &ExperimentReport) -> io::Result<()> {
    writeln!(w, "query\tmethod\tdraw\tscore")?;
    for s in &r.methods {
        for (q, scores) in &s.per_query {
            for (d, x) in scores.iter().enumerate() {
                writeln!(w, "{q}\t{}\t{d}\t{x}", s.method)?;
            }
        }
    }
    Ok(())
}
