//! Storage for retained MCMC draws.
//!
//! A [`ChainStore`] holds the post-burn-in, thinned draws of one chain:
//! item parameters (flattened, with a labelled layout), the class
//! distribution `π`, and the attribute profiles (as bitmasks).  Draws are
//! validated on entry — a non-finite parameter or probability is reported
//! as a numerical error carrying the iteration at which it appeared.

use super::{Method, ModelKind};
use crate::error::{Error, Result};
use crate::model::class_label;
use serde::{Deserialize, Serialize};

/// A named contiguous block of the flattened item-parameter vector
/// (e.g. all guessing parameters, or all coefficient values).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySlice {
    /// Family name: `"guess"`, `"slip"`, or `"lambda"`.
    pub name: String,
    /// Offset of the family's first entry in the flattened vector.
    pub start: usize,
    /// Number of entries in the family.
    pub len: usize,
}

/// Shape and labelling of everything a chain records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    /// Number of examinees `N`.
    pub n_examinees: usize,
    /// Number of items `J`.
    pub n_items: usize,
    /// Number of attributes `K`.
    pub n_attrs: usize,
    /// Number of attribute classes `2^K`.
    pub n_classes: usize,
    /// One label per flattened item parameter (`g3`, `s7`, `item2_t5`, …).
    pub item_labels: Vec<String>,
    /// Contiguous per-family blocks covering the item-parameter vector.
    pub families: Vec<FamilySlice>,
}

impl ParamLayout {
    /// Layout of a DINA fit: guesses `g1..gJ` then slips `s1..sJ`.
    pub fn dina(n_examinees: usize, n_items: usize, n_attrs: usize) -> Self {
        let mut item_labels = Vec::with_capacity(2 * n_items);
        for j in 1..=n_items {
            item_labels.push(format!("g{j}"));
        }
        for j in 1..=n_items {
            item_labels.push(format!("s{j}"));
        }
        ParamLayout {
            n_examinees,
            n_items,
            n_attrs,
            n_classes: 1usize << n_attrs,
            item_labels,
            families: vec![
                FamilySlice {
                    name: "guess".into(),
                    start: 0,
                    len: n_items,
                },
                FamilySlice {
                    name: "slip".into(),
                    start: n_items,
                    len: n_items,
                },
            ],
        }
    }

    /// Layout of a G-DINA fit: per-item coefficient blocks labelled
    /// `item{j}_t{t}` in canonical term order.
    pub fn gdina(n_examinees: usize, n_attrs: usize, coefs_per_item: &[usize]) -> Self {
        let mut item_labels = Vec::new();
        for (j, &n) in coefs_per_item.iter().enumerate() {
            for t in 0..n {
                item_labels.push(format!("item{}_t{t}", j + 1));
            }
        }
        let total = item_labels.len();
        ParamLayout {
            n_examinees,
            n_items: coefs_per_item.len(),
            n_attrs,
            n_classes: 1usize << n_attrs,
            item_labels,
            families: vec![FamilySlice {
                name: "lambda".into(),
                start: 0,
                len: total,
            }],
        }
    }

    /// Number of flattened item parameters per draw.
    pub fn n_item_params(&self) -> usize {
        self.item_labels.len()
    }

    /// Labels of the `π` entries: `c1..c{2^K}` in class order.
    pub fn pi_labels(&self) -> Vec<String> {
        (0..self.n_classes as u32)
            .map(|m| format!("c{}", class_label(m)))
            .collect()
    }
}

/// Run counters useful for efficiency checks and benchmarks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Total item-likelihood evaluations performed by attribute updates.
    pub attr_items_touched: u64,
    /// Total single-attribute (or whole-profile) updates performed.
    pub attr_updates: u64,
    /// Wall-clock seconds spent inside the iteration loop.
    pub seconds: f64,
}

/// Retained draws of one chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainStore {
    /// Model that was fitted.
    pub model: ModelKind,
    /// Attribute-update strategy that produced the chain.
    pub method: Method,
    /// Shapes and labels of the recorded parameters.
    pub layout: ParamLayout,
    /// 1-based global iteration number of each retained draw.
    pub kept_iterations: Vec<usize>,
    /// Item-parameter draws, `n_kept × n_item_params`, row-major.
    pub item_draws: Vec<f64>,
    /// Class-distribution draws, `n_kept × 2^K`, row-major.
    pub pi_draws: Vec<f64>,
    /// Attribute-profile draws as bitmasks, `n_kept × N`, row-major.
    pub alpha_draws: Vec<u32>,
    /// Efficiency counters for the whole run.
    pub stats: RunStats,
}

impl ChainStore {
    /// Creates an empty store with capacity for `n_kept` retained draws.
    pub fn with_capacity(
        model: ModelKind,
        method: Method,
        layout: ParamLayout,
        n_kept: usize,
    ) -> Self {
        let n_item = layout.n_item_params();
        let n_classes = layout.n_classes;
        let n = layout.n_examinees;
        ChainStore {
            model,
            method,
            layout,
            kept_iterations: Vec::with_capacity(n_kept),
            item_draws: Vec::with_capacity(n_kept * n_item),
            pi_draws: Vec::with_capacity(n_kept * n_classes),
            alpha_draws: Vec::with_capacity(n_kept * n),
            stats: RunStats::default(),
        }
    }

    /// Appends one retained draw, validating shapes and finiteness.
    pub fn push_iteration(
        &mut self,
        iteration: usize,
        item_params: &[f64],
        pi: &[f64],
        alpha: &[u32],
    ) -> Result<()> {
        if item_params.len() != self.layout.n_item_params() {
            return Err(Error::numerical(
                iteration,
                format!(
                    "item draw has {} entries, expected {}",
                    item_params.len(),
                    self.layout.n_item_params()
                ),
            ));
        }
        if pi.len() != self.layout.n_classes {
            return Err(Error::numerical(
                iteration,
                format!(
                    "π draw has {} entries, expected {}",
                    pi.len(),
                    self.layout.n_classes
                ),
            ));
        }
        if alpha.len() != self.layout.n_examinees {
            return Err(Error::numerical(
                iteration,
                format!(
                    "attribute draw covers {} examinees, expected {}",
                    alpha.len(),
                    self.layout.n_examinees
                ),
            ));
        }
        if let Some(bad) = item_params.iter().find(|v| !v.is_finite()) {
            return Err(Error::numerical(
                iteration,
                format!("non-finite item parameter {bad}"),
            ));
        }
        if let Some(bad) = pi.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::numerical(
                iteration,
                format!("invalid class probability {bad}"),
            ));
        }
        self.kept_iterations.push(iteration);
        self.item_draws.extend_from_slice(item_params);
        self.pi_draws.extend_from_slice(pi);
        self.alpha_draws.extend_from_slice(alpha);
        Ok(())
    }

    /// Number of retained draws.
    pub fn n_kept(&self) -> usize {
        self.kept_iterations.len()
    }

    /// Item-parameter row of retained draw `t`.
    pub fn item_row(&self, t: usize) -> &[f64] {
        let w = self.layout.n_item_params();
        &self.item_draws[t * w..(t + 1) * w]
    }

    /// `π` row of retained draw `t`.
    pub fn pi_row(&self, t: usize) -> &[f64] {
        let w = self.layout.n_classes;
        &self.pi_draws[t * w..(t + 1) * w]
    }

    /// Attribute-profile row of retained draw `t`.
    pub fn alpha_row(&self, t: usize) -> &[u32] {
        let w = self.layout.n_examinees;
        &self.alpha_draws[t * w..(t + 1) * w]
    }

    /// The draws of one flattened item parameter across retained
    /// iterations.
    pub fn item_series(&self, param: usize) -> Vec<f64> {
        let w = self.layout.n_item_params();
        (0..self.n_kept())
            .map(|t| self.item_draws[t * w + param])
            .collect()
    }

    /// The draws of one `π` entry across retained iterations.
    pub fn pi_series(&self, class: usize) -> Vec<f64> {
        let w = self.layout.n_classes;
        (0..self.n_kept())
            .map(|t| self.pi_draws[t * w + class])
            .collect()
    }

    /// The item-parameter block of one family in draw `t`.
    pub fn family_row(&self, family: &FamilySlice, t: usize) -> &[f64] {
        &self.item_row(t)[family.start..family.start + family.len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dina_layout_labels() {
        let l = ParamLayout::dina(5, 3, 2);
        assert_eq!(l.n_item_params(), 6);
        assert_eq!(l.item_labels, vec!["g1", "g2", "g3", "s1", "s2", "s3"]);
        assert_eq!(l.families[0].name, "guess");
        assert_eq!(l.families[1].start, 3);
        assert_eq!(l.pi_labels(), vec!["c1", "c2", "c3", "c4"]);
    }

    #[test]
    fn gdina_layout_labels() {
        let l = ParamLayout::gdina(5, 2, &[2, 4]);
        assert_eq!(
            l.item_labels,
            vec!["item1_t0", "item1_t1", "item2_t0", "item2_t1", "item2_t2", "item2_t3"]
        );
        assert_eq!(l.families.len(), 1);
        assert_eq!(l.families[0].len, 6);
    }

    #[test]
    fn push_validates_shapes_and_values() {
        let layout = ParamLayout::dina(2, 1, 1);
        let mut store =
            ChainStore::with_capacity(ModelKind::Dina, Method::Sequential, layout, 4);
        store
            .push_iteration(5, &[0.2, 0.1], &[0.4, 0.6], &[0b1, 0b0])
            .unwrap();
        assert_eq!(store.n_kept(), 1);
        assert_eq!(store.item_row(0), &[0.2, 0.1]);
        assert_eq!(store.alpha_row(0), &[1, 0]);
        // Wrong shape.
        assert!(store
            .push_iteration(6, &[0.2], &[0.4, 0.6], &[0, 0])
            .is_err());
        // Non-finite parameter reports the iteration.
        let err = store
            .push_iteration(7, &[f64::NAN, 0.1], &[0.4, 0.6], &[0, 0])
            .unwrap_err();
        match err {
            Error::Numerical { iteration, .. } => assert_eq!(iteration, 7),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn series_extraction() {
        let layout = ParamLayout::dina(1, 1, 1);
        let mut store =
            ChainStore::with_capacity(ModelKind::Dina, Method::Sequential, layout, 3);
        for (t, g) in [0.1, 0.2, 0.3].iter().enumerate() {
            store
                .push_iteration(t + 1, &[*g, 0.05], &[0.5, 0.5], &[0])
                .unwrap();
        }
        assert_eq!(store.item_series(0), vec![0.1, 0.2, 0.3]);
        assert_eq!(store.item_series(1), vec![0.05, 0.05, 0.05]);
        assert_eq!(store.pi_series(1), vec![0.5, 0.5, 0.5]);
    }
}
