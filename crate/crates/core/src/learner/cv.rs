use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{Confusion, MetricsReport};
use super::tree::{DecisionTree, TreeConfig};
use super::LearnerError;
use crate::activity::Label;

/// Unit that is kept together when folds are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldGrouping {
    /// Stratify individual windows.
    #[default]
    Window,
    /// Keep all windows of a climb in the same fold. Overlapping windows then
    /// never straddle train and test.
    Climb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossValConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub grouping: FoldGrouping,
}

impl Default for CrossValConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            repetitions: 3,
            seed: 0,
            grouping: FoldGrouping::Window,
        }
    }
}

impl CrossValConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.folds < 2 {
            return Err(LearnerError::InvalidConfig("folds must be >= 2".into()));
        }
        if self.repetitions < 1 {
            return Err(LearnerError::InvalidConfig("repetitions must be >= 1".into()));
        }
        Ok(())
    }

    fn rng(&self, repetition: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_add((repetition as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        )
    }
}

/// Per repetition, the fold index of every sample. Each class is shuffled on
/// its own and dealt round-robin; the dealing position carries over from one
/// class to the next so fold sizes stay balanced too.
pub fn stratified_folds(labels: &[Label], cfg: &CrossValConfig) -> Result<Vec<Vec<usize>>, LearnerError> {
    cfg.validate()?;
    let classes = [Label::NotLowering, Label::Lowering];
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == *c).collect())
        .collect();
    for (class, m) in classes.iter().zip(&members) {
        if m.len() < cfg.folds {
            return Err(LearnerError::Stratification {
                class: *class,
                count: m.len(),
                folds: cfg.folds,
            });
        }
    }
    Ok((0..cfg.repetitions)
        .map(|rep| {
            let mut rng = cfg.rng(rep);
            let mut fold_of = vec![0; labels.len()];
            let mut deal = 0;
            for m in &members {
                let mut m = m.clone();
                m.shuffle(&mut rng);
                for i in m {
                    fold_of[i] = deal % cfg.folds;
                    deal += 1;
                }
            }
            fold_of
        })
        .collect())
}

/// Like [`stratified_folds`] but over whole groups (climbs): groups are
/// shuffled and dealt round-robin, every member follows its group.
pub fn grouped_folds(groups: &[usize], cfg: &CrossValConfig) -> Result<Vec<Vec<usize>>, LearnerError> {
    cfg.validate()?;
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < cfg.folds {
        return Err(LearnerError::TooFewGroups {
            groups: ids.len(),
            folds: cfg.folds,
        });
    }
    Ok((0..cfg.repetitions)
        .map(|rep| {
            let mut rng = cfg.rng(rep);
            let mut order = ids.clone();
            order.shuffle(&mut rng);
            let fold_of_group: std::collections::HashMap<usize, usize> = order
                .into_iter()
                .enumerate()
                .map(|(k, g)| (g, k % cfg.folds))
                .collect();
            groups.iter().map(|g| fold_of_group[g]).collect()
        })
        .collect())
}

/// Repeated k-fold evaluation of the decision tree. Confusion counts are
/// pooled over the folds of each repetition.
pub fn evaluate<R: AsRef<[f64]> + Sync>(
    rows: &[R],
    labels: &[Label],
    groups: Option<&[usize]>,
    tree_cfg: &TreeConfig,
    cv_cfg: &CrossValConfig,
) -> Result<MetricsReport, LearnerError> {
    tree_cfg.validate()?;
    if rows.len() != labels.len() {
        return Err(LearnerError::LabelCount {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    let assignments = match (cv_cfg.grouping, groups) {
        (FoldGrouping::Climb, Some(g)) => grouped_folds(g, cv_cfg)?,
        (FoldGrouping::Climb, None) => {
            return Err(LearnerError::InvalidConfig(
                "climb grouping needs per-row group ids".into(),
            ))
        }
        (FoldGrouping::Window, _) => stratified_folds(labels, cv_cfg)?,
    };
    let jobs: Vec<(usize, usize)> = (0..cv_cfg.repetitions)
        .flat_map(|r| (0..cv_cfg.folds).map(move |f| (r, f)))
        .collect();
    let per_job: Vec<Confusion> = jobs
        .par_iter()
        .map(|&(rep, fold)| -> Result<Confusion, LearnerError> {
            let fold_of = &assignments[rep];
            let (mut train_x, mut train_y) = (Vec::new(), Vec::new());
            let mut test = Vec::new();
            for i in 0..rows.len() {
                if fold_of[i] == fold {
                    test.push(i);
                } else {
                    train_x.push(rows[i].as_ref());
                    train_y.push(labels[i]);
                }
            }
            let mut c = Confusion::default();
            if test.is_empty() || train_x.is_empty() {
                return Ok(c);
            }
            let tree = DecisionTree::fit(&train_x, &train_y, tree_cfg)?;
            for i in test {
                c.record(labels[i], tree.predict(rows[i].as_ref())?);
            }
            Ok(c)
        })
        .collect::<Result<_, _>>()?;
    let reps = per_job
        .chunks(cv_cfg.folds)
        .map(|chunk| {
            let mut c = Confusion::default();
            for x in chunk {
                c.merge(x);
            }
            c
        })
        .collect();
    Ok(MetricsReport::from_repetitions(reps))
}
