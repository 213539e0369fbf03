//! Task-conditioned stochastic policy parameterizations.
//!
//! Two architectures sit behind one flat parameter vector:
//!
//! * `SharedMlp` — one hidden tanh layer over `one-hot(state) ⊕
//!   one-hot(task)`. Tasks share every weight, so learning one task can
//!   transfer to others.
//! * `SeparateTabular` — an independent logit table per task, which rules
//!   out transfer entirely.
//!
//! The output layer starts at zero in both cases, so the initial policy is
//! exactly uniform over actions.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::Cell;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("non-finite logit for state {state}, task {task}")]
    NonFiniteLogits { state: usize, task: usize },
    #[error("{what} out of range: {got} >= {bound}")]
    IndexOutOfRange {
        what: &'static str,
        got: usize,
        bound: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("exact gradient is zero; cosine similarity undefined")]
    ZeroExactGradient,
}

/// Which parameterization the flat weight vector encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    SharedMlp { hidden: usize },
    SeparateTabular,
}

/// Flat board index for the one-hot state encoding.
pub fn state_index(board_width: usize, cell: Cell) -> usize {
    cell.row * board_width + cell.col
}

/// Policy parameters over `n_states x n_tasks x n_actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    arch: Architecture,
    n_states: usize,
    n_tasks: usize,
    n_actions: usize,
    weights: Vec<f64>,
}

impl PolicyParams {
    /// Fresh parameters: hidden layer drawn uniformly from ±0.05, output
    /// layer zeroed so the initial policy is uniform.
    pub fn init<R: Rng>(
        arch: Architecture,
        n_states: usize,
        n_tasks: usize,
        n_actions: usize,
        rng: &mut R,
    ) -> Self {
        let weights = match arch {
            Architecture::SharedMlp { hidden } => {
                let input = n_states + n_tasks;
                let mut w = vec![0.0; hidden * input + hidden + n_actions * hidden + n_actions];
                for v in w.iter_mut().take(hidden * input) {
                    *v = rng.gen_range(-0.05..0.05);
                }
                w
            }
            Architecture::SeparateTabular => vec![0.0; n_tasks * n_states * n_actions],
        };
        Self {
            arch,
            n_states,
            n_tasks,
            n_actions,
            weights,
        }
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_params(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Gradient-ascent step `w += lr * grad`.
    pub fn apply_step(&mut self, grad: &[f64], lr: f64) {
        debug_assert_eq!(grad.len(), self.weights.len());
        for (w, g) in self.weights.iter_mut().zip(grad) {
            *w += lr * g;
        }
    }

    fn check_ids(&self, state: usize, task: usize) -> Result<(), PolicyError> {
        if state >= self.n_states {
            return Err(PolicyError::IndexOutOfRange {
                what: "state",
                got: state,
                bound: self.n_states,
            });
        }
        if task >= self.n_tasks {
            return Err(PolicyError::IndexOutOfRange {
                what: "task",
                got: task,
                bound: self.n_tasks,
            });
        }
        Ok(())
    }

    // Layout helpers for the MLP: [W1 | b1 | W2 | b2], W1 row-major
    // hidden x (n_states + n_tasks), W2 row-major n_actions x hidden.
    fn mlp_offsets(&self, hidden: usize) -> (usize, usize, usize) {
        let input = self.n_states + self.n_tasks;
        let b1 = hidden * input;
        let w2 = b1 + hidden;
        let b2 = w2 + self.n_actions * hidden;
        (b1, w2, b2)
    }

    fn tabular_offset(&self, state: usize, task: usize) -> usize {
        (task * self.n_states + state) * self.n_actions
    }

    /// Hidden activations for the MLP. One-hot inputs collapse the first
    /// matmul to two column reads.
    pub(crate) fn hidden_activations(&self, state: usize, task: usize) -> Vec<f64> {
        let Architecture::SharedMlp { hidden } = self.arch else {
            panic!("hidden_activations only applies to the MLP");
        };
        let input = self.n_states + self.n_tasks;
        let (b1, _, _) = self.mlp_offsets(hidden);
        let mut h = Vec::with_capacity(hidden);
        for j in 0..hidden {
            let row = j * input;
            let pre =
                self.weights[row + state] + self.weights[row + self.n_states + task] + self.weights[b1 + j];
            h.push(pre.tanh());
        }
        h
    }

    /// Raw action logits for `(state, task)`.
    pub fn logits(&self, state: usize, task: usize) -> Result<Vec<f64>, PolicyError> {
        self.check_ids(state, task)?;
        let out = match self.arch {
            Architecture::SharedMlp { hidden } => {
                let (_, w2, b2) = self.mlp_offsets(hidden);
                let h = self.hidden_activations(state, task);
                (0..self.n_actions)
                    .map(|a| {
                        let row = w2 + a * hidden;
                        let mut z = self.weights[b2 + a];
                        for j in 0..hidden {
                            z += self.weights[row + j] * h[j];
                        }
                        z
                    })
                    .collect::<Vec<f64>>()
            }
            Architecture::SeparateTabular => {
                let off = self.tabular_offset(state, task);
                self.weights[off..off + self.n_actions].to_vec()
            }
        };
        if out.iter().any(|z| !z.is_finite()) {
            return Err(PolicyError::NonFiniteLogits { state, task });
        }
        Ok(out)
    }

    /// Softmax action distribution; strictly positive by construction.
    pub fn action_probs(&self, state: usize, task: usize) -> Result<Vec<f64>, PolicyError> {
        let logits = self.logits(state, task)?;
        Ok(softmax(&logits))
    }

    /// Adds `weight * d log pi(action | state, task) / d theta` into `grad`.
    pub fn accumulate_log_prob_grad(
        &self,
        state: usize,
        task: usize,
        action: usize,
        weight: f64,
        grad: &mut [f64],
    ) -> Result<(), PolicyError> {
        let probs = self.action_probs(state, task)?;
        let h = match self.arch {
            Architecture::SharedMlp { .. } => Some(self.hidden_activations(state, task)),
            Architecture::SeparateTabular => None,
        };
        self.log_prob_backward(state, task, action, weight, &probs, h.as_deref(), grad);
        Ok(())
    }

    /// Cached-forward variant of [`Self::accumulate_log_prob_grad`]; the
    /// table must have been built from these parameters.
    pub fn accumulate_log_prob_grad_cached(
        &self,
        table: &PolicyTable,
        state: usize,
        task: usize,
        action: usize,
        weight: f64,
        grad: &mut [f64],
    ) {
        let probs = table.probs(state, task);
        let h = match self.arch {
            Architecture::SharedMlp { .. } => Some(table.hidden(state, task)),
            Architecture::SeparateTabular => None,
        };
        self.log_prob_backward(state, task, action, weight, probs, h, grad);
    }

    fn log_prob_backward(
        &self,
        state: usize,
        task: usize,
        action: usize,
        weight: f64,
        probs: &[f64],
        hidden: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        debug_assert!(self.n_actions <= 8);
        let mut dlogits = [0.0; 8];
        let dlogits = &mut dlogits[..self.n_actions];
        for (b, d) in dlogits.iter_mut().enumerate() {
            let indicator = if b == action { 1.0 } else { 0.0 };
            *d = weight * (indicator - probs[b]);
        }
        self.backprop_logits(state, task, dlogits, hidden, grad);
    }

    /// Adds `weight * d H(pi(.|state, task)) / d theta` into `grad`.
    pub fn accumulate_entropy_grad(
        &self,
        state: usize,
        task: usize,
        weight: f64,
        grad: &mut [f64],
    ) -> Result<(), PolicyError> {
        let probs = self.action_probs(state, task)?;
        let h = match self.arch {
            Architecture::SharedMlp { .. } => Some(self.hidden_activations(state, task)),
            Architecture::SeparateTabular => None,
        };
        self.entropy_backward(state, task, weight, &probs, h.as_deref(), grad);
        Ok(())
    }

    /// Cached-forward variant of [`Self::accumulate_entropy_grad`].
    pub fn accumulate_entropy_grad_cached(
        &self,
        table: &PolicyTable,
        state: usize,
        task: usize,
        weight: f64,
        grad: &mut [f64],
    ) {
        let probs = table.probs(state, task);
        let h = match self.arch {
            Architecture::SharedMlp { .. } => Some(table.hidden(state, task)),
            Architecture::SeparateTabular => None,
        };
        self.entropy_backward(state, task, weight, probs, h, grad);
    }

    fn entropy_backward(
        &self,
        state: usize,
        task: usize,
        weight: f64,
        probs: &[f64],
        hidden: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        let entropy: f64 = -probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>();
        debug_assert!(self.n_actions <= 8);
        let mut dlogits = [0.0; 8];
        let dlogits = &mut dlogits[..self.n_actions];
        for (b, d) in dlogits.iter_mut().enumerate() {
            *d = -weight * probs[b] * (probs[b].ln() + entropy);
        }
        self.backprop_logits(state, task, dlogits, hidden, grad);
    }

    fn backprop_logits(
        &self,
        state: usize,
        task: usize,
        dlogits: &[f64],
        hidden_acts: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        match self.arch {
            Architecture::SharedMlp { hidden } => {
                let input = self.n_states + self.n_tasks;
                let (b1, w2, b2) = self.mlp_offsets(hidden);
                let owned;
                let h = match hidden_acts {
                    Some(h) => h,
                    None => {
                        owned = self.hidden_activations(state, task);
                        &owned
                    }
                };
                let mut dh = vec![0.0; hidden];
                for (a, &dz) in dlogits.iter().enumerate() {
                    if dz == 0.0 {
                        continue;
                    }
                    let row = w2 + a * hidden;
                    for j in 0..hidden {
                        grad[row + j] += dz * h[j];
                        dh[j] += dz * self.weights[row + j];
                    }
                    grad[b2 + a] += dz;
                }
                for j in 0..hidden {
                    let dpre = dh[j] * (1.0 - h[j] * h[j]);
                    let row = j * input;
                    grad[row + state] += dpre;
                    grad[row + self.n_states + task] += dpre;
                    grad[b1 + j] += dpre;
                }
            }
            Architecture::SeparateTabular => {
                let off = self.tabular_offset(state, task);
                for (a, &dz) in dlogits.iter().enumerate() {
                    grad[off + a] += dz;
                }
            }
        }
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

/// Precomputed forward passes for every `(state, task)` pair: action
/// distributions, plus hidden activations for the MLP.
///
/// One training iteration samples thousands of actions and accumulates
/// hundreds of gradient terms against an unchanged policy; building this
/// table once per update amortizes all of those forward passes.
#[derive(Debug, Clone)]
pub struct PolicyTable {
    probs: Vec<f64>,
    hidden: Vec<f64>,
    hidden_width: usize,
    n_states: usize,
    n_actions: usize,
}

impl PolicyTable {
    pub fn build(params: &PolicyParams) -> Result<Self, PolicyError> {
        let pairs = params.n_tasks * params.n_states;
        let hidden_width = match params.arch {
            Architecture::SharedMlp { hidden } => hidden,
            Architecture::SeparateTabular => 0,
        };
        let mut probs = Vec::with_capacity(pairs * params.n_actions);
        let mut hidden = Vec::with_capacity(pairs * hidden_width);
        for task in 0..params.n_tasks {
            for state in 0..params.n_states {
                match params.arch {
                    Architecture::SharedMlp { hidden: width } => {
                        let h = params.hidden_activations(state, task);
                        let (_, w2, b2) = params.mlp_offsets(width);
                        let mut logits = Vec::with_capacity(params.n_actions);
                        for a in 0..params.n_actions {
                            let row = w2 + a * width;
                            let mut z = params.weights[b2 + a];
                            for j in 0..width {
                                z += params.weights[row + j] * h[j];
                            }
                            logits.push(z);
                        }
                        if logits.iter().any(|z| !z.is_finite()) {
                            return Err(PolicyError::NonFiniteLogits { state, task });
                        }
                        probs.extend_from_slice(&softmax(&logits));
                        hidden.extend_from_slice(&h);
                    }
                    Architecture::SeparateTabular => {
                        probs.extend_from_slice(&params.action_probs(state, task)?);
                    }
                }
            }
        }
        Ok(Self {
            probs,
            hidden,
            hidden_width,
            n_states: params.n_states,
            n_actions: params.n_actions,
        })
    }

    pub fn probs(&self, state: usize, task: usize) -> &[f64] {
        let off = (task * self.n_states + state) * self.n_actions;
        &self.probs[off..off + self.n_actions]
    }

    fn hidden(&self, state: usize, task: usize) -> &[f64] {
        let off = (task * self.n_states + state) * self.hidden_width;
        &self.hidden[off..off + self.hidden_width]
    }
}

/// Versioned checkpoint artifact for policy parameters.
#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    arch: Architecture,
    n_states: usize,
    n_tasks: usize,
    n_actions: usize,
    weights: Vec<f64>,
}

const CHECKPOINT_VERSION: u32 = 1;

/// Serializes parameters to the JSON checkpoint format.
pub fn save_checkpoint(params: &PolicyParams) -> String {
    let doc = Checkpoint {
        version: CHECKPOINT_VERSION,
        arch: params.arch,
        n_states: params.n_states,
        n_tasks: params.n_tasks,
        n_actions: params.n_actions,
        weights: params.weights.clone(),
    };
    serde_json::to_string(&doc).expect("checkpoint serialization cannot fail")
}

/// Parses a checkpoint, validating version and weight-vector length.
pub fn load_checkpoint(text: &str) -> Result<PolicyParams, PolicyError> {
    let doc: Checkpoint =
        serde_json::from_str(text).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
    if doc.version != CHECKPOINT_VERSION {
        return Err(PolicyError::Checkpoint(format!(
            "unsupported checkpoint version {}",
            doc.version
        )));
    }
    let expected = match doc.arch {
        Architecture::SharedMlp { hidden } => {
            hidden * (doc.n_states + doc.n_tasks) + hidden + doc.n_actions * hidden + doc.n_actions
        }
        Architecture::SeparateTabular => doc.n_tasks * doc.n_states * doc.n_actions,
    };
    if doc.weights.len() != expected {
        return Err(PolicyError::Checkpoint(format!(
            "weight vector has length {} but architecture needs {expected}",
            doc.weights.len()
        )));
    }
    if doc.weights.iter().any(|w| !w.is_finite()) {
        return Err(PolicyError::Checkpoint("non-finite weight".into()));
    }
    Ok(PolicyParams {
        arch: doc.arch,
        n_states: doc.n_states,
        n_tasks: doc.n_tasks,
        n_actions: doc.n_actions,
        weights: doc.weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn zero_mlp(n_states: usize, n_tasks: usize) -> PolicyParams {
        PolicyParams {
            arch: Architecture::SharedMlp { hidden: 8 },
            n_states,
            n_tasks,
            n_actions: 4,
            weights: vec![
                0.0;
                8 * (n_states + n_tasks) + 8 + 4 * 8 + 4
            ],
        }
    }

    #[test]
    fn zero_weights_give_uniform_policy() {
        let mlp = zero_mlp(5, 2);
        let probs = mlp.action_probs(3, 1).unwrap();
        for &p in &probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let mut rng = stream(0, Purpose::PolicyInit, 0, 0);
        let tab = PolicyParams::init(Architecture::SeparateTabular, 5, 2, 4, &mut rng);
        let probs = tab.action_probs(0, 0).unwrap();
        for &p in &probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn logit_shift_leaves_distribution_unchanged() {
        let mut rng = stream(1, Purpose::PolicyInit, 0, 0);
        let mut tab = PolicyParams::init(Architecture::SeparateTabular, 4, 2, 4, &mut rng);
        for w in tab.weights_mut().iter_mut() {
            *w = rng.gen_range(-1.0..1.0);
        }
        let before = tab.action_probs(2, 1).unwrap();
        let off = (1 * 4 + 2) * 4;
        for a in 0..4 {
            tab.weights_mut()[off + a] += 3.7;
        }
        let after = tab.action_probs(2, 1).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a).abs() < 1e-12);
        }
    }

    #[test]
    fn separate_tabular_isolates_tasks() {
        let mut rng = stream(2, Purpose::PolicyInit, 0, 0);
        let mut tab = PolicyParams::init(Architecture::SeparateTabular, 4, 2, 4, &mut rng);
        let task2_before = tab.action_probs(1, 1).unwrap();
        // Perturb every weight belonging to task 0.
        for s in 0..4 {
            let off = tab.tabular_offset(s, 0);
            for a in 0..4 {
                tab.weights_mut()[off + a] += 0.5 * (a as f64 + 1.0);
            }
        }
        let task2_after = tab.action_probs(1, 1).unwrap();
        assert_eq!(task2_before, task2_after);
    }

    #[test]
    fn non_finite_logits_are_reported() {
        let mut mlp = zero_mlp(3, 2);
        let n = mlp.n_params();
        mlp.weights_mut()[n - 1] = f64::NAN;
        assert!(matches!(
            mlp.action_probs(0, 0),
            Err(PolicyError::NonFiniteLogits { .. })
        ));
    }

    #[test]
    fn policy_table_matches_direct_evaluation() {
        let mut rng = stream(3, Purpose::PolicyInit, 0, 0);
        let params = PolicyParams::init(Architecture::SharedMlp { hidden: 8 }, 6, 3, 4, &mut rng);
        let table = PolicyTable::build(&params).unwrap();
        for task in 0..3 {
            for state in 0..6 {
                let direct = params.action_probs(state, task).unwrap();
                assert_eq!(table.probs(state, task), direct.as_slice());
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = stream(4, Purpose::PolicyInit, 0, 0);
        let params = PolicyParams::init(Architecture::SharedMlp { hidden: 16 }, 9, 4, 4, &mut rng);
        let text = save_checkpoint(&params);
        let restored = load_checkpoint(&text).unwrap();
        assert_eq!(params, restored);
    }

    #[test]
    fn checkpoint_rejects_corrupt_payloads() {
        let mut rng = stream(5, Purpose::PolicyInit, 0, 0);
        let params = PolicyParams::init(Architecture::SeparateTabular, 3, 2, 4, &mut rng);
        let text = save_checkpoint(&params);
        let wrong_version = text.replace("\"version\":1", "\"version\":9");
        assert!(load_checkpoint(&wrong_version).is_err());
        let truncated = text.replace("0.0,0.0]", "0.0]");
        assert!(load_checkpoint(&truncated).is_err());
    }
}
