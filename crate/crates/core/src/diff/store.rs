//! Named trainable parameter groups with per-parameter Adam moments.

use rand::Rng;
use std::collections::HashMap;

use super::{DiffError, Real};

pub const DEFAULT_LEARNING_RATE: f64 = 0.0002;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Training group a parameter belongs to. Groups partition the store and are
/// stepped independently, each with its own learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Group {
    /// Value-function parameters: the shared GNN trunk plus the V readout.
    Critic,
    /// Policy parameters: transition feature and transition readout MLPs.
    Actor,
    /// Descent-probability readout.
    Descent,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Critic, Group::Actor, Group::Descent];

    fn index(self) -> usize {
        match self {
            Group::Critic => 0,
            Group::Actor => 1,
            Group::Descent => 2,
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Group::Critic => write!(f, "critic"),
            Group::Actor => write!(f, "actor"),
            Group::Descent => write!(f, "descent"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

pub(crate) struct Param {
    pub name: String,
    pub group: Group,
    pub shape: Vec<usize>,
    pub values: Vec<Real>,
    pub grad: Vec<Real>,
    /// Whether any backward pass deposited a gradient since the last step.
    /// Untouched parameters are skipped by the optimizer so unused parts of
    /// the model (e.g. predicates absent from every sampled state) stay put.
    pub touched: bool,
    m: Vec<Real>,
    v: Vec<Real>,
}

/// Flat storage for every trainable parameter of a model.
#[derive(Default)]
pub struct ParameterStore {
    params: Vec<Param>,
    by_name: HashMap<String, ParamId>,
    adam_step: [u64; 3],
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter; names must be unique within the store.
    pub fn register(
        &mut self,
        name: impl Into<String>,
        group: Group,
        shape: Vec<usize>,
        values: Vec<Real>,
    ) -> ParamId {
        let name = name.into();
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "shape/value mismatch for parameter {name}"
        );
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name {name}"
        );
        let n = values.len();
        let id = ParamId(self.params.len());
        self.params.push(Param {
            name: name.clone(),
            group,
            shape,
            values,
            grad: vec![0.0; n],
            touched: false,
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        self.by_name.insert(name, id);
        id
    }

    pub(crate) fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn group(&self, id: ParamId) -> Group {
        self.params[id.0].group
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.params[id.0].shape
    }

    pub fn values(&self, id: ParamId) -> &[Real] {
        &self.params[id.0].values
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut [Real] {
        &mut self.params[id.0].values
    }

    pub fn grad(&self, id: ParamId) -> &[Real] {
        &self.params[id.0].grad
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, g: &[Real]) {
        let p = &mut self.params[id.0];
        for (slot, v) in p.grad.iter_mut().zip(g) {
            *slot += v;
        }
        p.touched = true;
    }

    /// Scales every accumulated gradient, e.g. to average over a minibatch.
    pub fn scale_gradients(&mut self, factor: Real) {
        for p in &mut self.params {
            if p.touched {
                for g in &mut p.grad {
                    *g *= factor;
                }
            }
        }
    }

    pub fn zero_gradients(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
            p.touched = false;
        }
    }

    /// Euclidean norm of the accumulated gradient of one group.
    pub fn grad_norm(&self, group: Group) -> Real {
        let mut acc = 0.0;
        for p in &self.params {
            if p.group == group {
                for g in &p.grad {
                    acc += g * g;
                }
            }
        }
        acc.sqrt()
    }

    /// One Adam update over the touched parameters of `group`, consuming and
    /// zeroing their gradients. Moments persist across calls.
    pub fn adam_step(
        &mut self,
        group: Group,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<(), DiffError> {
        if !self
            .params
            .iter()
            .any(|p| p.group == group && p.touched)
        {
            return Err(DiffError::MissingGradients(group));
        }
        let slot = group.index();
        self.adam_step[slot] += 1;
        let t = self.adam_step[slot] as f64;
        let corr1 = 1.0 - beta1.powf(t);
        let corr2 = 1.0 - beta2.powf(t);
        let (b1, b2, eps, lr) = (
            beta1 as Real,
            beta2 as Real,
            epsilon as Real,
            learning_rate as Real,
        );
        for p in &mut self.params {
            if p.group != group || !p.touched {
                continue;
            }
            for i in 0..p.values.len() {
                let g = p.grad[i];
                p.m[i] = b1 * p.m[i] + (1.0 - b1) * g;
                p.v[i] = b2 * p.v[i] + (1.0 - b2) * g * g;
                let m_hat = p.m[i] / corr1 as Real;
                let v_hat = p.v[i] / corr2 as Real;
                p.values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.grad.iter_mut().for_each(|g| *g = 0.0);
            p.touched = false;
        }
        Ok(())
    }

    /// Overwrites every parameter with i.i.d. uniform draws from `[lo, hi]`.
    pub fn randomize_uniform(&mut self, rng: &mut impl Rng, lo: Real, hi: Real) {
        for p in &mut self.params {
            for v in &mut p.values {
                *v = rng.gen_range(lo..=hi);
            }
        }
    }

    /// Read-only snapshot of values for later restore or comparison.
    pub fn snapshot(&self) -> Vec<Vec<Real>> {
        self.params.iter().map(|p| p.values.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<Real>]) {
        assert_eq!(snapshot.len(), self.params.len());
        for (p, s) in self.params.iter_mut().zip(snapshot) {
            p.values.copy_from_slice(s);
        }
    }

    /// Resets Adam moments and step counters, e.g. between independent runs.
    pub fn reset_optimizer(&mut self) {
        for p in &mut self.params {
            p.m.iter_mut().for_each(|x| *x = 0.0);
            p.v.iter_mut().for_each(|x| *x = 0.0);
            p.grad.iter_mut().for_each(|x| *x = 0.0);
            p.touched = false;
        }
        self.adam_step = [0; 3];
    }
}
