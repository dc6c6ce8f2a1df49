//! Overall label histogram of a dataset.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub label: String,
    pub total: u64,
    pub fraction: f64,
}

/// One row per label with its total vote count and share of all votes.
pub fn report_label_histogram(dataset: &Dataset) -> Vec<HistogramRow> {
    let totals = dataset.label_totals();
    let all: u64 = totals.iter().sum();
    dataset
        .label_space()
        .names()
        .iter()
        .zip(totals)
        .map(|(label, total)| HistogramRow {
            label: label.clone(),
            total,
            fraction: total as f64 / all as f64,
        })
        .collect()
}
