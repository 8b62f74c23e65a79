//! Context scoring and context-selector training.
//!
//! Each training task is labeled with the context whose abstraction scores
//! best under the reward-vs-compute objective; a classifier then maps task
//! features to that label, and test-time selection is a single forward pass.
//! Scores are computed on the deterministic expansion channel so labels are
//! reproducible from the seed alone.

use crate::abstraction::{build_camp, Camp};
use crate::contexts::{Context, ContextSpec};
use crate::core::{
    evaluate_objective, rollout, CostChannel, FactoredMdp, Task, Trajectory, Vars,
};
use crate::csi::CsiSet;
use crate::error::{CampError, Result};
use crate::learner::{train_classifier, Classifier, TrainConfig};
use crate::planners::{PlannerConfig, PlannerPolicy};
use crate::rng::derive_rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

/// Score assigned when every evaluation rollout fails: dominated by any
/// context that completes a single rollout.
pub const SCORE_FLOOR: f64 = -1e12;

/// A trained context selector: class `i` of the classifier corresponds to
/// `context_list[i]`, and `context_list[0]` is the universal context.
pub struct Selector {
    pub classifier: Classifier,
    pub context_list: Vec<Context>,
    pub lambda: f64,
    pub planner: PlannerConfig,
}

impl Selector {
    /// The context predicted for a task feature vector.
    pub fn select_context(&self, theta: &[f64]) -> Result<&Context> {
        let class = self.classifier.predict(theta)?;
        Ok(&self.context_list[class])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = SelectorFile {
            version: 1,
            classifier: self.classifier.clone(),
            contexts: self.context_list.iter().map(Context::to_spec).collect(),
            lambda: self.lambda,
            planner: self.planner.clone(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path, vars: &Vars) -> Result<Self> {
        let file: SelectorFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let context_list: Result<Vec<Context>> =
            file.contexts.iter().map(|c| Context::from_spec(vars, c)).collect();
        Ok(Self {
            classifier: file.classifier,
            context_list: context_list?,
            lambda: file.lambda,
            planner: file.planner,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SelectorFile {
    version: u32,
    classifier: Classifier,
    contexts: Vec<ContextSpec>,
    lambda: f64,
    planner: PlannerConfig,
}

/// Outcome of scoring one context on one task.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScoreOutcome {
    pub score: f64,
    /// True when any rollout flagged a planner fallback or every rollout
    /// failed outright.
    pub flagged: bool,
}

/// Builds the context's abstraction, runs seeded evaluation rollouts that
/// plan in the abstraction at every step while executing in the real task,
/// and returns the objective value of the resulting trajectories.
pub fn score_context(
    mdp: &FactoredMdp,
    task: &Task,
    ctx: &Context,
    csis: &CsiSet,
    planner: &PlannerConfig,
    lambda: f64,
    n_rollouts: usize,
    channel: CostChannel,
    seed: u64,
) -> Result<ScoreOutcome> {
    let camp = Arc::new(build_camp(mdp, ctx, csis)?);
    let mut trajs: Vec<Trajectory> = Vec::with_capacity(n_rollouts);
    let mut flagged = false;
    for run in 0..n_rollouts {
        let mut policy = PlannerPolicy::new(camp.clone(), planner.clone());
        let mut rng = derive_rng(seed, &["score", &task.id, &ctx.text(), &run.to_string()]);
        match rollout(mdp, &mut policy, task, &mut rng) {
            Ok(traj) => {
                flagged |= traj.flagged;
                trajs.push(traj);
            }
            Err(_) => flagged = true,
        }
    }
    if trajs.is_empty() {
        return Ok(ScoreOutcome { score: SCORE_FLOOR, flagged: true });
    }
    let score = evaluate_objective(&trajs, lambda, mdp.gamma(), channel)?;
    Ok(ScoreOutcome { score, flagged })
}

/// One row of the label table emitted during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRow {
    pub task_id: String,
    pub features_digest: String,
    pub context: String,
    pub score: f64,
    pub flagged: bool,
    pub chosen: bool,
}

/// On-disk score cache keyed by `(task id, context text)`, so interrupted
/// labeling loops restart where they left off.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ScoreCache {
    entries: HashMap<String, ScoreOutcome>,
}

impl ScoreCache {
    fn key(task_id: &str, ctx_text: &str) -> String {
        format!("{task_id}\u{1f}{ctx_text}")
    }

    pub fn get(&self, task_id: &str, ctx_text: &str) -> Option<ScoreOutcome> {
        self.entries.get(&Self::key(task_id, ctx_text)).copied()
    }

    pub fn insert(&mut self, task_id: &str, ctx_text: &str, outcome: ScoreOutcome) {
        self.entries.insert(Self::key(task_id, ctx_text), outcome);
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.entries)?)?;
        Ok(())
    }
}

/// Training settings for the selector.
pub struct SelectorTrainConfig {
    pub planner: PlannerConfig,
    pub lambda: f64,
    /// Evaluation rollouts per (task, context) score.
    pub n_rollouts: usize,
    pub channel: CostChannel,
    pub seed: u64,
    pub train: TrainConfig,
}

/// A trained selector plus the labeling artifacts.
pub struct SelectorTraining {
    pub selector: Selector,
    pub labels: Vec<usize>,
    pub rows: Vec<LabelRow>,
    pub final_loss: f64,
    pub converged: bool,
    pub train_accuracy: f64,
}

/// Labels every training task with its argmax-scoring context (ties prefer
/// the lower index, i.e. the universal context), trains the classifier on
/// `(features, label)` pairs, and returns the selector with the label table.
///
/// `tasks` pairs each training task with its bound MDP; `contexts` and
/// `all_csis` are aligned, with the universal context first.
pub fn train_selector(
    tasks: &[(FactoredMdp, Task)],
    contexts: &[Context],
    all_csis: &[CsiSet],
    cfg: &SelectorTrainConfig,
    cache: &mut ScoreCache,
) -> Result<SelectorTraining> {
    assert!(!tasks.is_empty(), "need at least one training task");
    assert_eq!(contexts.len(), all_csis.len(), "contexts and CSI sets must align");
    assert!(contexts[0].is_universal(), "context list must start with the universal context");

    // Score every (task, context) pair not already cached; pairs run in
    // parallel, each with a stream derived from (seed, task, context).
    let mut jobs = Vec::new();
    for (ti, (mdp, task)) in tasks.iter().enumerate() {
        for (ci, ctx) in contexts.iter().enumerate() {
            if cache.get(&task.id, &ctx.text()).is_none() {
                jobs.push((ti, ci, mdp, task, ctx));
            }
        }
    }
    let scored: Vec<((usize, usize), ScoreOutcome)> = jobs
        .par_iter()
        .map(|&(ti, ci, mdp, task, ctx)| {
            let outcome = score_context(
                mdp,
                task,
                ctx,
                &all_csis[ci],
                &cfg.planner,
                cfg.lambda,
                cfg.n_rollouts,
                cfg.channel,
                cfg.seed,
            )
            .unwrap_or(ScoreOutcome { score: SCORE_FLOOR, flagged: true });
            ((ti, ci), outcome)
        })
        .collect();
    for ((ti, ci), outcome) in scored {
        cache.insert(&tasks[ti].1.id, &contexts[ci].text(), outcome);
    }

    let mut labels = Vec::with_capacity(tasks.len());
    let mut rows = Vec::new();
    for (mdp, task) in tasks {
        let _ = mdp;
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        let outcomes: Vec<ScoreOutcome> = contexts
            .iter()
            .map(|ctx| cache.get(&task.id, &ctx.text()).expect("scored above"))
            .collect();
        for (ci, outcome) in outcomes.iter().enumerate() {
            if outcome.score > best_score {
                best_score = outcome.score;
                best = ci;
            }
        }
        labels.push(best);
        let digest = features_digest(&task.features);
        for (ci, (ctx, outcome)) in contexts.iter().zip(&outcomes).enumerate() {
            rows.push(LabelRow {
                task_id: task.id.clone(),
                features_digest: digest.clone(),
                context: ctx.text(),
                score: outcome.score,
                flagged: outcome.flagged,
                chosen: ci == best,
            });
        }
    }

    let xs: Vec<Vec<f64>> = tasks.iter().map(|(_, t)| t.features.clone()).collect();
    let mut rng = derive_rng(cfg.seed, &["selector-init"]);
    let classifier = Classifier::new(xs[0].len(), contexts.len(), &mut rng);
    let trained = train_classifier(&xs, &labels, classifier, &cfg.train)?;
    let correct = xs
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| trained.classifier.predict(x).map(|p| p == y).unwrap_or(false))
        .count();
    let train_accuracy = correct as f64 / xs.len() as f64;

    Ok(SelectorTraining {
        selector: Selector {
            classifier: trained.classifier,
            context_list: contexts.to_vec(),
            lambda: cfg.lambda,
            planner: cfg.planner.clone(),
        },
        labels,
        rows,
        final_loss: trained.final_loss,
        converged: trained.converged,
        train_accuracy,
    })
}

pub fn features_digest(features: &[f64]) -> String {
    use std::hash::Hasher;
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for f in features {
        h.write_u64(f.to_bits());
    }
    format!("{:016x}", h.finish())
}

/// Writes the label table in long CSV form:
/// `task_id,features_digest,context,score,flagged,chosen`.
pub fn write_label_table(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let mut out = String::from("task_id,features_digest,context,score,flagged,chosen\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},\"{}\",{},{},{}\n",
            r.task_id, r.features_digest, r.context, r.score, r.flagged, r.chosen
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Convenience wrapper: the CAMP the selector would plan with for a task.
pub fn camp_for_task(
    selector: &Selector,
    mdp: &FactoredMdp,
    theta: &[f64],
    csis_by_text: &HashMap<String, CsiSet>,
) -> Result<Camp> {
    let ctx = selector.select_context(theta)?;
    let csis = csis_by_text
        .get(&ctx.text())
        .ok_or_else(|| CampError::InvalidContext(format!("no CSIs for `{}`", ctx.text())))?;
    build_camp(mdp, ctx, csis)
}
