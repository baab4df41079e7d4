use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub image: String,
    pub pred: usize,
    pub gt: usize,
    pub fscore: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCounts {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

impl ThresholdCounts {
    fn new(threshold: f64, tp: usize, fp: usize, fn_: usize) -> Self {
        // an empty side is vacuously perfect
        let ratio = |a: usize, b: usize| if a + b == 0 { 1.0 } else { a as f64 / (a + b) as f64 };
        Self {
            threshold,
            tp,
            fp,
            fn_,
            precision: ratio(tp, fp),
            recall: ratio(tp, fn_),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub n_pred: usize,
    pub n_gt: usize,
    pub rows: Vec<ThresholdCounts>,
    pub assignments: Vec<Assignment>,
}

impl EvalReport {
    pub fn from_assignments(
        mode: EvalMode,
        thresholds: &[f64],
        n_pred: usize,
        n_gt: usize,
        assignments: Vec<Assignment>,
    ) -> Self {
        let rows = thresholds
            .iter()
            .map(|&t| {
                let tp = assignments.iter().filter(|a| a.fscore >= t).count();
                ThresholdCounts::new(t, tp, n_pred - tp, n_gt - tp)
            })
            .collect();
        Self {
            mode,
            n_pred,
            n_gt,
            rows,
            assignments,
        }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.threshold).collect()
    }

    /// Tags every assignment with an image name (for merged reports).
    pub fn with_image(mut self, image: &str) -> Self {
        for a in &mut self.assignments {
            a.image = image.to_string();
        }
        self
    }

    /// Pools counts over images. Both reports must share mode and thresholds.
    pub fn merge(&mut self, other: EvalReport) -> crate::Result<()> {
        if self.mode != other.mode || self.thresholds() != other.thresholds() {
            return Err(crate::Error::InvalidArgument(
                "cannot merge reports with different modes or thresholds".into(),
            ));
        }
        self.n_pred += other.n_pred;
        self.n_gt += other.n_gt;
        for (a, b) in self.rows.iter_mut().zip(other.rows) {
            *a = ThresholdCounts::new(a.threshold, a.tp + b.tp, a.fp + b.fp, a.fn_ + b.fn_);
        }
        self.assignments.extend(other.assignments);
        Ok(())
    }

    /// Fixed-width table: one column per threshold, a precision/recall row
    /// in percent, then the raw counts.
    pub fn to_table(&self) -> String {
        const LABEL: usize = 17;
        const CELL: usize = 15;
        let mut out = String::new();
        let mut line = |label: &str, cells: Vec<String>| {
            let mut s = format!("{label:<LABEL$}");
            for c in cells {
                write!(s, " | {c:>CELL$}").expect("write to string");
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(
            "F-score threshold",
            self.rows.iter().map(|r| format!("{}", r.threshold)).collect(),
        );
        line(
            &format!("{} P/R", self.mode.label()),
            self.rows
                .iter()
                .map(|r| format!("{:6.2} / {:6.2}", 100.0 * r.precision, 100.0 * r.recall))
                .collect(),
        );
        line("TP", self.rows.iter().map(|r| r.tp.to_string()).collect());
        line("FP", self.rows.iter().map(|r| r.fp.to_string()).collect());
        line("FN", self.rows.iter().map(|r| r.fn_.to_string()).collect());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(fs: &[f64], n_pred: usize, n_gt: usize) -> EvalReport {
        let a = fs
            .iter()
            .enumerate()
            .map(|(i, &f)| Assignment {
                image: String::new(),
                pred: i,
                gt: i,
                fscore: f,
            })
            .collect();
        EvalReport::from_assignments(EvalMode::Mask, &[0.5, 0.8], n_pred, n_gt, a)
    }

    #[test]
    fn table_layout() {
        let t = report(&[0.95, 0.6], 3, 2).to_table();
        let expected = "\
F-score threshold |             0.5 |             0.8
mask P/R          |  66.67 / 100.00 |  33.33 /  50.00
TP                |               2 |               1
FP                |               1 |               2
FN                |               0 |               1
";
        assert_eq!(t, expected);
    }

    #[test]
    fn merge_pools_counts() {
        let mut a = report(&[0.95], 1, 1);
        a.merge(report(&[0.6], 2, 1)).unwrap();
        assert_eq!((a.rows[1].tp, a.rows[1].fp, a.rows[1].fn_), (1, 2, 1));
        assert_eq!(a.assignments.len(), 2);
        let other = EvalReport::from_assignments(EvalMode::Skeleton, &[0.5, 0.8], 0, 0, vec![]);
        assert!(a.merge(other).is_err());
    }
}
