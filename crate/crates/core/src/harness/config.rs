//! Run configuration: everything that, together with a seed, fully
//! determines a training run.

use serde::{Deserialize, Serialize};

use crate::gap::{ReferenceMode, StaleReturnPolicy};
use crate::policy::Architecture;
use crate::samplers::{
    EasyFirstConfig, HardFirstConfig, MirrorParams, Sampler, SamplerError, SamplerKind,
};

use super::HarnessError;

/// Training method: one of the six samplers, or the objective-reweighting
/// variant that samples uniformly and scales each task's advantages by
/// `k * q_i` with `q` updated exactly like the gap sampler's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Uniform,
    ReturnGap,
    LearningProgress,
    LearningPotential,
    HardFirst,
    EasyFirst,
    ReweightReturnGap,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::ReturnGap => "return_gap",
            Method::LearningProgress => "learning_progress",
            Method::LearningPotential => "learning_potential",
            Method::HardFirst => "hard_first",
            Method::EasyFirst => "easy_first",
            Method::ReweightReturnGap => "reweight_return_gap",
        }
    }

    pub fn parse(name: &str) -> Option<Method> {
        Some(match name {
            "uniform" => Method::Uniform,
            "return_gap" => Method::ReturnGap,
            "learning_progress" => Method::LearningProgress,
            "learning_potential" => Method::LearningPotential,
            "hard_first" => Method::HardFirst,
            "easy_first" => Method::EasyFirst,
            "reweight_return_gap" => Method::ReweightReturnGap,
            _ => return None,
        })
    }

    /// The sampler state backing this method.
    pub fn sampler_kind(self) -> SamplerKind {
        match self {
            Method::Uniform => SamplerKind::Uniform,
            Method::ReturnGap | Method::ReweightReturnGap => SamplerKind::ReturnGap,
            Method::LearningProgress => SamplerKind::LearningProgress,
            Method::LearningPotential => SamplerKind::LearningPotential,
            Method::HardFirst => SamplerKind::HardFirst,
            Method::EasyFirst => SamplerKind::EasyFirst,
        }
    }

    /// True when tasks are drawn uniformly and the objective reweighted.
    pub fn reweights_objective(self) -> bool {
        matches!(self, Method::ReweightReturnGap)
    }
}

/// Sampler hyperparameters. `alpha = alpha_fraction * eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub eta: f64,
    pub alpha_fraction: f64,
    /// Minimum sampling probability; `None` resolves to
    /// `min(0.02, 1 / (4k))`.
    pub eps_min: Option<f64>,
    pub hard_first: HardFirstSettings,
    pub easy_first: EasyFirstSettings,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            eta: 2.0,
            alpha_fraction: 0.5,
            eps_min: None,
            hard_first: HardFirstSettings::default(),
            easy_first: EasyFirstSettings::default(),
        }
    }
}

impl SamplerConfig {
    pub fn resolve_eps(&self, k: usize) -> f64 {
        self.eps_min
            .unwrap_or_else(|| 0.02f64.min(1.0 / (4.0 * k as f64)))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_fraction * self.eta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardFirstSettings {
    pub active_set_size: usize,
    pub b1_fraction: f64,
    pub unsolvable_threshold: f64,
    pub solved_threshold: f64,
    /// `None` resolves to `budget * b1_fraction / k`.
    pub per_task_step_budget: Option<u64>,
}

impl Default for HardFirstSettings {
    fn default() -> Self {
        Self {
            active_set_size: 3,
            b1_fraction: 0.85,
            unsolvable_threshold: 0.0,
            solved_threshold: 0.8,
            per_task_step_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EasyFirstSettings {
    /// Task ids ordered easiest first; required for the easy-first method.
    pub ranking: Option<Vec<usize>>,
    pub advance_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Shared,
    Separate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub architecture: ArchitectureKind,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_learning_rate: f64,
    pub gae_lambda: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            architecture: ArchitectureKind::Shared,
            hidden_size: 64,
            learning_rate: 0.3,
            entropy_coef: 0.005,
            value_learning_rate: 0.5,
            gae_lambda: 0.95,
        }
    }
}

impl LearnerConfig {
    pub fn architecture(&self) -> Architecture {
        match self.architecture {
            ArchitectureKind::Shared => Architecture::SharedMlp {
                hidden: self.hidden_size,
            },
            ArchitectureKind::Separate => Architecture::SeparateTabular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    pub mode: ReferenceMode,
    /// Reference return for every task in fixed mode.
    pub fixed_value: f64,
    /// Success-rate gate for the gated mode.
    pub success_threshold: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            mode: ReferenceMode::FixedKnown,
            fixed_value: 1.0,
            success_threshold: 0.5,
        }
    }
}

fn default_episodes() -> usize {
    40
}

fn default_stale() -> StaleReturnPolicy {
    StaleReturnPolicy::CarryForward
}

fn default_success_window() -> usize {
    10
}

/// Complete specification of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub seed: u64,
    pub budget_env_steps: u64,
    #[serde(default = "default_episodes")]
    pub episodes_per_iteration: usize,
    #[serde(default = "default_stale")]
    pub stale_return_policy: StaleReturnPolicy,
    /// Iterations of episodes pooled into the success-rate estimates.
    #[serde(default = "default_success_window")]
    pub success_window: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
}

impl RunConfig {
    /// Sensible defaults for a method on the standard four-task suite.
    pub fn new(method: Method, seed: u64, budget_env_steps: u64) -> Self {
        Self {
            method,
            seed,
            budget_env_steps,
            episodes_per_iteration: default_episodes(),
            stale_return_policy: default_stale(),
            success_window: default_success_window(),
            sampler: SamplerConfig::default(),
            learner: LearnerConfig::default(),
            reference: ReferenceConfig::default(),
        }
    }

    /// Rejects invalid configurations before any work happens.
    pub fn validate(&self, k: usize) -> Result<(), HarnessError> {
        if self.budget_env_steps == 0 {
            return Err(HarnessError::BadConfig("budget must be positive".into()));
        }
        if self.episodes_per_iteration == 0 {
            return Err(HarnessError::BadConfig(
                "episodes per iteration must be positive".into(),
            ));
        }
        if self.success_window == 0 {
            return Err(HarnessError::BadConfig(
                "success window must be at least one iteration".into(),
            ));
        }
        if !(self.sampler.eta > 0.0) {
            return Err(HarnessError::BadConfig(format!(
                "eta = {} must be positive",
                self.sampler.eta
            )));
        }
        if !(self.sampler.alpha_fraction > 0.0 && self.sampler.alpha_fraction <= 1.0) {
            return Err(HarnessError::BadConfig(format!(
                "alpha fraction = {} must lie in (0, 1]",
                self.sampler.alpha_fraction
            )));
        }
        let eps = self.sampler.resolve_eps(k);
        if k >= 2 && (eps <= 0.0 || eps * k as f64 >= 1.0) {
            return Err(HarnessError::BadConfig(format!(
                "eps_min = {eps} infeasible for {k} tasks"
            )));
        }
        if !(self.learner.learning_rate > 0.0) {
            return Err(HarnessError::BadConfig("learning rate must be positive".into()));
        }
        if self.method == Method::EasyFirst && self.sampler.easy_first.ranking.is_none() {
            return Err(HarnessError::BadConfig(
                "easy_first requires a difficulty ranking".into(),
            ));
        }
        Ok(())
    }

    /// Builds the sampler state for `k` tasks.
    pub fn build_sampler(&self, k: usize) -> Result<Sampler, SamplerError> {
        let eps = self.sampler.resolve_eps(k);
        let mp = MirrorParams {
            eta: self.sampler.eta,
            alpha: self.sampler.alpha(),
        };
        match self.method.sampler_kind() {
            SamplerKind::Uniform => Sampler::uniform(k),
            SamplerKind::ReturnGap => Sampler::return_gap(k, mp, eps),
            SamplerKind::LearningProgress => Sampler::learning_progress(k, mp, eps),
            SamplerKind::LearningPotential => Sampler::learning_potential(k, mp, eps),
            SamplerKind::HardFirst => {
                let hf = &self.sampler.hard_first;
                let budget = hf.per_task_step_budget.unwrap_or_else(|| {
                    ((self.budget_env_steps as f64 * hf.b1_fraction) / k as f64) as u64
                });
                Sampler::hard_first(
                    k,
                    HardFirstConfig {
                        active_set_size: hf.active_set_size,
                        b1_fraction: hf.b1_fraction,
                        unsolvable_thresholds: vec![hf.unsolvable_threshold; k],
                        solved_thresholds: vec![hf.solved_threshold; k],
                        per_task_step_budget: budget,
                    },
                    eps,
                )
            }
            SamplerKind::EasyFirst => {
                let ef = &self.sampler.easy_first;
                let ranking = ef
                    .ranking
                    .clone()
                    .ok_or_else(|| SamplerError::BadConfig("missing difficulty ranking".into()))?;
                Sampler::easy_first(
                    k,
                    EasyFirstConfig {
                        ranking,
                        advance_threshold: if ef.advance_threshold > 0.0 {
                            ef.advance_threshold
                        } else {
                            0.9
                        },
                    },
                    eps,
                )
            }
        }
    }
}
