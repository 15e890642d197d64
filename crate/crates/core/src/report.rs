//! Deterministic CSV writers for every emitted artifact. Numbers use
//! the shortest round-trip representation, so identical values always
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::io::Write;

use crate::analysis::{
    CorrelationReport, ForecastCurve, ImportanceReport, ScatterPoint, WeeklyCorrelations,
};
use crate::encode::MotifMatrix;
use crate::graph::{PageRankResult, RankTable};
use crate::learn::EvalReport;
use crate::scalar::Real;
use crate::Result;
use crate::dataset::LabeledDataset;

pub fn write_activity_csv<W: Write>(mut out: W, series: &[(u32, u64)]) -> Result<()> {
    writeln!(out, "week,messages")?;
    for (week, count) in series {
        writeln!(out, "{week},{count}")?;
    }
    Ok(())
}

pub fn write_scatter_csv<F: Real, W: Write>(mut out: W, points: &[ScatterPoint<F>]) -> Result<()> {
    writeln!(out, "user,join_timestamp,pagerank")?;
    for point in points {
        writeln!(
            out,
            "{},{},{}",
            point.user, point.join_timestamp, point.pagerank
        )?;
    }
    Ok(())
}

pub fn write_correlation_csv<F: Real, W: Write>(
    mut out: W,
    report: &CorrelationReport<F>,
) -> Result<()> {
    writeln!(out, "context,rho,p_value,n")?;
    writeln!(
        out,
        "{},{},{:e},{}",
        report.context, report.rho, report.p_value, report.n
    )?;
    Ok(())
}

pub fn write_rank_counts_csv<W: Write>(mut out: W, counts: &BTreeMap<u32, u64>) -> Result<()> {
    writeln!(out, "rank,new_messages")?;
    for (rank, count) in counts {
        writeln!(out, "{rank},{count}")?;
    }
    Ok(())
}

pub fn write_weekly_rho_csv<F: Real, W: Write>(
    mut out: W,
    weekly: &WeeklyCorrelations<F>,
) -> Result<()> {
    writeln!(out, "week,rho,p_value,n")?;
    for (week, report) in &weekly.reports {
        writeln!(
            out,
            "{week},{},{:e},{}",
            report.rho, report.p_value, report.n
        )?;
    }
    Ok(())
}

pub fn write_curve_csv<F: Real, W: Write>(mut out: W, curve: &ForecastCurve<F>) -> Result<()> {
    writeln!(out, "cutoff_week,mae_motifs,mae_totals")?;
    for point in &curve.points {
        writeln!(
            out,
            "{},{},{}",
            point.cutoff_week, point.mae_motifs, point.mae_totals
        )?;
    }
    Ok(())
}

pub fn write_ksweep_csv<F: Real, W: Write>(mut out: W, sweep: &[(usize, F)]) -> Result<()> {
    writeln!(out, "k,mae")?;
    for (k, mae) in sweep {
        writeln!(out, "{k},{mae}")?;
    }
    Ok(())
}

/// Importance rows, most important first.
pub fn write_importance_csv<F: Real, W: Write>(
    mut out: W,
    report: &ImportanceReport<F>,
) -> Result<()> {
    writeln!(out, "kgram,mean_pct_mae_increase")?;
    for (name, importance) in report.ranked() {
        writeln!(out, "{name},{importance}")?;
    }
    Ok(())
}

pub fn write_table_csv<F: Real, W: Write>(mut out: W, rows: &[(String, F)]) -> Result<()> {
    writeln!(out, "model,mae")?;
    for (model, mae) in rows {
        writeln!(out, "{model},{mae}")?;
    }
    Ok(())
}

/// Weekly PageRank listing: one row per ranked user per week.
pub fn write_pagerank_csv<F: Real, W: Write>(
    mut out: W,
    weeks: &[(PageRankResult<F>, RankTable)],
) -> Result<()> {
    writeln!(out, "week,user,score,rank")?;
    for (result, table) in weeks {
        for (user, score) in &result.scores {
            let rank = table.rank[user];
            writeln!(out, "{},{user},{score},{rank}", result.week)?;
        }
    }
    Ok(())
}

pub fn write_motif_matrix_csv<W: Write>(mut out: W, matrix: &MotifMatrix) -> Result<()> {
    write!(out, "user")?;
    for kgram in &matrix.kgrams {
        write!(out, ",{kgram}")?;
    }
    writeln!(out)?;
    for (user, row) in matrix.users.iter().zip(&matrix.counts) {
        write!(out, "{user}")?;
        for count in row {
            write!(out, ",{count}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_dataset_features_csv<F: Real, W: Write>(
    mut out: W,
    dataset: &LabeledDataset<F>,
) -> Result<()> {
    write!(out, "user")?;
    for name in &dataset.feature_names {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (user, row) in dataset.users.iter().zip(&dataset.features) {
        write!(out, "{user}")?;
        for value in row {
            write!(out, ",{value}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_dataset_labels_csv<F: Real, W: Write>(
    mut out: W,
    dataset: &LabeledDataset<F>,
) -> Result<()> {
    writeln!(out, "user,score,bin")?;
    for ((user, score), label) in dataset
        .users
        .iter()
        .zip(&dataset.scores)
        .zip(&dataset.labels)
    {
        writeln!(out, "{user},{score},{label}")?;
    }
    Ok(())
}

pub fn write_eval_csv<F: Real, W: Write>(mut out: W, report: &EvalReport<F>) -> Result<()> {
    writeln!(out, "fold,mae")?;
    for (fold, mae) in report.per_fold.iter().enumerate() {
        writeln!(out, "{fold},{mae}")?;
    }
    writeln!(out, "mean,{}", report.mae)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activity_csv_layout() {
        let mut buf = Vec::new();
        write_activity_csv(&mut buf, &[(1, 3), (2, 0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "week,messages\n1,3\n2,0\n");
    }

    #[test]
    fn importance_csv_is_sorted_descending() {
        let report = ImportanceReport {
            features: vec!["JAS".into(), "SAS".into(), "RCS".into()],
            mean_pct_increase: vec![0.5f64, 20.0, 7.5],
            splits_requested: 25,
            splits_used: 25,
            holdout_fraction: 0.25,
            seed: 0,
        };
        let mut buf = Vec::new();
        write_importance_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "kgram,mean_pct_mae_increase");
        assert_eq!(lines[1], "SAS,20");
        assert_eq!(lines[2], "RCS,7.5");
        assert_eq!(lines[3], "JAS,0.5");
    }

    #[test]
    fn float_formatting_round_trips() {
        let mut buf = Vec::new();
        write_ksweep_csv(&mut buf, &[(3, 0.4907407407407407f64)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let value: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(value, 0.4907407407407407);
    }
}
