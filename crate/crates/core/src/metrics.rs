//! Per-run outcomes and aggregate error rates.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    /// t
    pub member: bool,
    /// Δ
    pub delta: f64,
    /// T̂
    pub t_hat: bool,
    pub wall_time_ms: f64,
    pub seed: u64,
}

/// Percentages and AUC rounded to two decimals, plus raw counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fpr: f64,
    pub fnr: f64,
    pub accuracy: f64,
    pub auc: f64,
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub runs: usize,
}

pub fn round2(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

/// Mann–Whitney AUC: `P(Δ_member > Δ_nonmember) + ½ P(tie)`, unrounded.
pub fn auc(records: &[RunRecord]) -> Result<f64> {
    let pos = records.iter().filter(|r| r.member).count();
    let neg = records.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<&RunRecord> = records.iter().collect();
    order.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    // Sum of 1-based mid-ranks of the members.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].delta.total_cmp(&order[i].delta).is_eq() {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|r| r.member).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn compute_metrics(records: &[RunRecord]) -> Result<MetricsReport> {
    let auc = auc(records)?;
    let count = |member: bool, t_hat: bool| records.iter().filter(|r| r.member == member && r.t_hat == t_hat).count();
    let (tp, fnn) = (count(true, true), count(true, false));
    let (tn, fp) = (count(false, false), count(false, true));
    let pct = |a: usize, b: usize| round2(100.0 * a as f64 / b as f64);
    Ok(MetricsReport {
        fpr: pct(fp, fp + tn),
        fnr: pct(fnn, tp + fnn),
        accuracy: pct(tp + tn, records.len()),
        auc: round2(auc),
        true_positives: tp,
        true_negatives: tn,
        false_positives: fp,
        false_negatives: fnn,
        runs: records.len(),
    })
}
