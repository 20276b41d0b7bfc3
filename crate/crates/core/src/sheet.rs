//! Per-instance classifier outputs.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::taxonomy::{ClassId, Taxonomy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SheetError {
    #[error("instance `{instance}`: score {score} for {classifier}/{class} is outside [0, 1]")]
    InvalidScore {
        instance: String,
        classifier: String,
        class: ClassId,
        score: f64,
    },
    #[error("instance `{instance}`: classifier `{classifier}` scores unknown class `{class}`")]
    UnknownClass {
        instance: String,
        classifier: String,
        class: ClassId,
    },
    #[error("instance `{instance}`: duplicate score for {classifier}/{class}")]
    Duplicate {
        instance: String,
        classifier: String,
        class: ClassId,
    },
}

/// Scores `y^j(c)` for one instance, keyed by classifier then class.
///
/// Classifiers iterate in identifier order, which fixes the floating-point
/// summation order of everything downstream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSheet {
    pub instance_id: String,
    entries: BTreeMap<String, BTreeMap<ClassId, f64>>,
}

impl ScoreSheet {
    pub fn new(instance_id: impl Into<String>) -> Self {
        ScoreSheet {
            instance_id: instance_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        classifier: impl Into<String>,
        class: ClassId,
        score: f64,
    ) -> Result<(), SheetError> {
        let classifier = classifier.into();
        if !(0.0..=1.0).contains(&score) {
            return Err(SheetError::InvalidScore {
                instance: self.instance_id.clone(),
                classifier,
                class,
                score,
            });
        }
        let slot = self.entries.entry(classifier.clone()).or_default();
        if slot.contains_key(&class) {
            return Err(SheetError::Duplicate {
                instance: self.instance_id.clone(),
                classifier,
                class,
            });
        }
        slot.insert(class, score);
        Ok(())
    }

    pub fn score(&self, classifier: &str, class: &str) -> Option<f64> {
        self.entries.get(classifier)?.get(class).copied()
    }

    pub fn classifiers(&self) -> impl Iterator<Item = (&str, &BTreeMap<ClassId, f64>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// `(classifier, class, score)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ClassId, f64)> {
        self.entries
            .iter()
            .flat_map(|(j, m)| m.iter().map(move |(c, &y)| (j.as_str(), c, y)))
    }

    /// Union of all scored classes.
    pub fn classes(&self) -> BTreeSet<&ClassId> {
        self.entries.values().flat_map(|m| m.keys()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), SheetError> {
        for (classifier, class, _) in self.iter() {
            if !taxonomy.contains(class.as_str()) {
                return Err(SheetError::UnknownClass {
                    instance: self.instance_id.clone(),
                    classifier: classifier.to_string(),
                    class: class.clone(),
                });
            }
        }
        Ok(())
    }

    /// Classifier-wise sum of two sheets, used to check linearity.
    pub fn merged_with(&self, other: &ScoreSheet) -> ScoreSheet {
        let mut out = self.clone();
        for (j, c, y) in other.iter() {
            *out.entries
                .entry(j.to_string())
                .or_default()
                .entry(c.clone())
                .or_insert(0.0) += y;
        }
        out
    }
}
