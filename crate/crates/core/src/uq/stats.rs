use serde::Serialize;

use crate::error::{Result, TrafficError};
use crate::field::MacroField;

/// Per-cell statistics of `rho` and `h` over a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSummary {
    pub x: Vec<f64>,
    pub rho: CellStats,
    pub h: CellStats,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CellStats {
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

/// Empirical quantile of sorted data, linear between order statistics
/// (position `p (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let t = pos - lo as f64;
    if t == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + t * (sorted[hi] - sorted[lo])
    }
}

impl CellStats {
    /// `samples[s][cell]`; the mean is summed in sample order.
    fn from_samples(samples: &[&[f64]]) -> Self {
        let n_cells = samples[0].len();
        let n = samples.len() as f64;
        let mut out = CellStats::default();
        let mut column = Vec::with_capacity(samples.len());
        for cell in 0..n_cells {
            column.clear();
            column.extend(samples.iter().map(|s| s[cell]));
            let sum: f64 = column.iter().sum();
            column.sort_by(f64::total_cmp);
            let (lo, hi) = (column[0], column[column.len() - 1]);
            out.mean.push((sum / n).clamp(lo, hi));
            out.median.push(quantile_sorted(&column, 0.5));
            out.q05.push(quantile_sorted(&column, 0.05));
            out.q95.push(quantile_sorted(&column, 0.95));
        }
        out
    }

    /// `q95 - q05` per cell.
    pub fn band_width(&self) -> Vec<f64> {
        self.q95.iter().zip(&self.q05).map(|(a, b)| a - b).collect()
    }
}

impl StatSummary {
    pub fn from_fields(fields: &[MacroField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| TrafficError::Config("no samples to summarise".to_string()))?;
        if fields.iter().any(|f| f.grid != first.grid) {
            return Err(TrafficError::Config(
                "samples live on different grids".to_string(),
            ));
        }
        let rho: Vec<&[f64]> = fields.iter().map(|f| f.rho.as_slice()).collect();
        let h: Vec<&[f64]> = fields.iter().map(|f| f.h.as_slice()).collect();
        Ok(StatSummary {
            x: first.grid.centers(),
            rho: CellStats::from_samples(&rho),
            h: CellStats::from_samples(&h),
            n_samples: fields.len(),
        })
    }
}
