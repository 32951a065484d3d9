use super::{DividendMode, DividendTable};

/// One Shapley value per player of the owning player set; players outside the
/// dividend table's base receive zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyVector {
    pub values: Vec<f64>,
}

impl ShapleyVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Splits every dividend uniformly among the members of its coalition.
pub fn shapley_from_dividends(dividends: &DividendTable) -> ShapleyVector {
    assert_eq!(
        dividends.mode(),
        DividendMode::UnimodalConditional,
        "Shapley values need a single-modality dividend table"
    );
    let mut values = vec![0.0; dividends.base().width()];
    for (coalition, w) in dividends.iter() {
        if coalition.is_empty() {
            continue;
        }
        let share = w / coalition.len() as f64;
        for i in coalition.members() {
            values[i] += share;
        }
    }
    ShapleyVector { values }
}
