use serde::Serialize;

use enlighten_core::Dataset64;

pub const TUTOR_TEXT: &str = "\
Covariates that are strongly correlated with each other carry almost the same \
information about the output. Including several of them makes coefficient \
estimates unstable and inflates their variance without improving predictions. \
When a suggested covariate is highly correlated with one already in the model, \
prefer to keep only the one most correlated with the output. The heatmap shows \
the pairwise correlations within the collinear group of this dataset.";

/// Explanation shown for a tutoring action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TutorPayload {
    pub text: &'static str,
    pub heatmap: Heatmap,
}

/// Correlation matrix of the collinear group, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub variables: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn tutor_payload(ds: &Dataset64) -> TutorPayload {
    let idx = ds.collinear_idx();
    TutorPayload {
        text: TUTOR_TEXT,
        heatmap: Heatmap {
            variables: idx.iter().map(|i| format!("x{}", i + 1)).collect(),
            values: idx.iter().map(|&i| idx.iter().map(|&j| ds.corr(i, j)).collect()).collect(),
        },
    }
}
