//! Neural layers used by the relational GNN: linear maps and the
//! residual-block MLP (linear, Mish, linear, skip connection, then a linear
//! reshape to the output size).

use rand::Rng;

use super::store::{Group, ParamId, ParameterStore};
use super::tape::{NodeId, Tape};
use super::{DiffError, Real};

/// A dense layer `y = W·x + b`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

fn glorot(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Real> {
    let bound = (6.0 / (rows + cols) as f64).sqrt() as Real;
    (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect()
}

impl Linear {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        group: Group,
        input: usize,
        output: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let weight = store.register(
            format!("{name}/w"),
            group,
            vec![output, input],
            glorot(rng, output, input),
        );
        let bias = store.register(format!("{name}/b"), group, vec![output], vec![0.0; output]);
        Self { weight, bias }
    }

    pub fn apply(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        x: NodeId,
    ) -> Result<NodeId, DiffError> {
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let wx = tape.matvec(w, x)?;
        tape.add(wx, b)
    }
}

/// Residual-block MLP: `reshape(x + L2(mish(L1(x))))` with hidden width
/// equal to the embedding dimension.
#[derive(Debug, Clone, Copy)]
pub struct Mlp {
    pub inner: Linear,
    pub outer: Linear,
    pub reshape: Linear,
}

impl Mlp {
    pub fn new(
        store: &mut ParameterStore,
        name: &str,
        group: Group,
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            inner: Linear::new(store, &format!("{name}/block1"), group, input, hidden, rng),
            outer: Linear::new(store, &format!("{name}/block2"), group, hidden, input, rng),
            reshape: Linear::new(store, &format!("{name}/out"), group, input, output, rng),
        }
    }

    pub fn apply(
        &self,
        tape: &mut Tape,
        store: &ParameterStore,
        x: NodeId,
    ) -> Result<NodeId, DiffError> {
        let h = self.inner.apply(tape, store, x)?;
        let h = tape.mish(h);
        let h = self.outer.apply(tape, store, h)?;
        let res = tape.add(x, h)?;
        self.reshape.apply(tape, store, res)
    }
}

/// Standalone residual block (no reshape): `x + L2(mish(L1(x)))`.
pub fn residual_block(
    tape: &mut Tape,
    store: &ParameterStore,
    l1: Linear,
    l2: Linear,
    x: NodeId,
) -> Result<NodeId, DiffError> {
    let h = l1.apply(tape, store, x)?;
    let h = tape.mish(h);
    let h = l2.apply(tape, store, h)?;
    tape.add(x, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{Aggregator, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: Real, b: Real, tol: Real) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn mish_at_zero_is_zero() {
        let mut tape = Tape::new();
        let x = tape.constant(vec![1], vec![0.0]);
        let y = tape.mish(x);
        assert_eq!(tape.values(y), &[0.0]);
    }

    #[test]
    fn mish_at_ten_is_nearly_ten() {
        // direct evaluation of x * tanh(ln(1 + e^x))
        let expected = 10.0 * (1.0 + (10.0f64).exp()).ln().tanh();
        let mut tape = Tape::new();
        let x = tape.constant(vec![1], vec![10.0]);
        let y = tape.mish(x);
        assert_close(tape.scalar(y), expected as Real, 1e-9);
        assert_close(tape.scalar(y), 10.0, 1e-3);
    }

    #[test]
    fn residual_block_with_zero_weights_is_identity() {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l1 = Linear::new(&mut store, "l1", Group::Critic, 3, 3, &mut rng);
        let l2 = Linear::new(&mut store, "l2", Group::Critic, 3, 3, &mut rng);
        for id in [l1.weight, l1.bias, l2.weight, l2.bias] {
            store.values_mut(id).iter_mut().for_each(|v| *v = 0.0);
        }
        let mut tape = Tape::new();
        let x = tape.constant(vec![3], vec![1.5, -2.0, 0.25]);
        let y = residual_block(&mut tape, &store, l1, l2, x).unwrap();
        assert_eq!(tape.values(y), tape.values(x));
    }

    #[test]
    fn aggregate_examples() {
        let mut tape = Tape::new();
        let a = tape.constant(vec![2], vec![1.0, 2.0]);
        let b = tape.constant(vec![2], vec![3.0, 4.0]);
        let sum = tape.aggregate(&[a, b], Aggregator::Sum, 2).unwrap();
        assert_eq!(tape.values(sum), &[4.0, 6.0]);

        let c = tape.constant(vec![2], vec![1.0, 5.0]);
        let d = tape.constant(vec![2], vec![3.0, 2.0]);
        let mx = tape.aggregate(&[c, d], Aggregator::Max, 2).unwrap();
        assert_eq!(tape.values(mx), &[3.0, 5.0]);

        let empty = tape.aggregate(&[], Aggregator::Sum, 2).unwrap();
        assert_eq!(tape.values(empty), &[0.0, 0.0]);

        let bad = tape.constant(vec![3], vec![0.0; 3]);
        assert!(matches!(
            tape.aggregate(&[a, bad], Aggregator::Sum, 2),
            Err(DiffError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn softmax_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(vec![2], vec![0.0, 0.0]);
        let p = tape.softmax(x).unwrap();
        assert_eq!(tape.values(p), &[0.5, 0.5]);

        let y = tape.constant(vec![2], vec![(3.0f64).ln() as Real, 0.0]);
        let p = tape.softmax(y).unwrap();
        assert_close(tape.values(p)[0], 0.75, 1e-12);
        assert_close(tape.values(p)[1], 0.25, 1e-12);

        // shift invariance
        let shifted = tape.constant(vec![2], vec![(3.0f64).ln() as Real + 7.5, 7.5]);
        let q = tape.softmax(shifted).unwrap();
        for (a, b) in tape.values(p).to_vec().iter().zip(tape.values(q)) {
            assert_close(*a, *b, 1e-12);
        }

        let empty = tape.constant(vec![0], vec![]);
        assert!(matches!(tape.softmax(empty), Err(DiffError::EmptyInput(_))));
        let inf = tape.constant(vec![2], vec![Real::INFINITY, 0.0]);
        assert!(matches!(tape.softmax(inf), Err(DiffError::NonFiniteInput(_))));
    }

    #[test]
    fn backward_of_square() {
        // f(x) = x^2 at x = 3 -> df/dx = 6
        let mut store = ParameterStore::new();
        let x = store.register("x", Group::Critic, vec![1], vec![3.0]);
        let mut tape = Tape::new();
        let xn = tape.param(&store, x);
        let half = tape.half_square(xn);
        let sq = tape.scale(half, 2.0);
        tape.backward(sq, &mut store).unwrap();
        assert_eq!(store.grad(x), &[6.0]);
    }

    #[test]
    fn backward_through_sum_aggregate_passes_gradient_unchanged() {
        let mut store = ParameterStore::new();
        let a = store.register("a", Group::Critic, vec![2], vec![1.0, 2.0]);
        let b = store.register("b", Group::Critic, vec![2], vec![-1.0, 4.0]);
        let mut tape = Tape::new();
        let an = tape.param(&store, a);
        let bn = tape.param(&store, b);
        let s = tape.sum_vectors(&[an, bn]).unwrap();
        let weights = tape.constant(vec![2], vec![2.0, 3.0]);
        let weighted = tape.mul_elem(s, weights).unwrap();
        let root = tape.sum_elems(weighted);
        tape.backward(root, &mut store).unwrap();
        assert_eq!(store.grad(a), &[2.0, 3.0]);
        assert_eq!(store.grad(b), &[2.0, 3.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let mut store = ParameterStore::new();
        let x = store.register("x", Group::Critic, vec![2], vec![1.0, 2.0]);
        let mut tape = Tape::new();
        let xn = tape.param(&store, x);
        assert!(matches!(
            tape.backward(xn, &mut store),
            Err(DiffError::NonScalarRoot(_))
        ));
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        // closed form for the first step: lr * g / (|g| + eps)
        let mut store = ParameterStore::new();
        let x = store.register("x", Group::Critic, vec![2], vec![1.0, 1.0]);
        store.accumulate_grad(x, &[0.5, -3.0]);
        store
            .adam_step(Group::Critic, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
            .unwrap();
        let v = store.values(x);
        assert_close(v[0], 1.0 - 0.01, 1e-6);
        assert_close(v[1], 1.0 + 0.01, 1e-6);
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters_unchanged() {
        let mut store = ParameterStore::new();
        let x = store.register("x", Group::Critic, vec![2], vec![0.7, -0.2]);
        store.accumulate_grad(x, &[0.0, 0.0]);
        store
            .adam_step(Group::Critic, 0.1, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
            .unwrap();
        assert_eq!(store.values(x), &[0.7, -0.2]);
    }

    #[test]
    fn adam_without_gradients_is_an_error() {
        let mut store = ParameterStore::new();
        store.register("x", Group::Critic, vec![1], vec![0.0]);
        assert!(matches!(
            store.adam_step(Group::Critic, 0.1, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON),
            Err(DiffError::MissingGradients(Group::Critic))
        ));
    }

    #[test]
    fn adam_skips_untouched_parameters() {
        let mut store = ParameterStore::new();
        let x = store.register("x", Group::Critic, vec![1], vec![1.0]);
        let y = store.register("y", Group::Critic, vec![1], vec![1.0]);
        store.accumulate_grad(x, &[1.0]);
        store
            .adam_step(Group::Critic, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
            .unwrap();
        assert!(store.values(x)[0] < 1.0);
        assert_eq!(store.values(y), &[1.0]);
    }

    #[test]
    fn loss_examples() {
        let mut tape = Tape::new();
        let two = tape.constant_scalar(2.0);
        let sq = tape.half_square(two);
        assert_eq!(tape.scalar(sq), 2.0);

        let p = tape.constant_scalar(0.5);
        let bce = tape.bce(p, 0.5).unwrap();
        assert_close(tape.scalar(bce), std::f64::consts::LN_2 as Real, 1e-6);
    }

    #[test]
    fn detach_blocks_gradient() {
        let mut store = ParameterStore::new();
        let x = store.register("x", Group::Critic, vec![1], vec![2.0]);
        let mut tape = Tape::new();
        let xn = tape.param(&store, x);
        let d = tape.detach(xn);
        let y = tape.half_square(d);
        tape.backward(y, &mut store).unwrap();
        assert_eq!(store.grad(x), &[0.0]);
    }

    #[test]
    fn forward_values_are_bitwise_deterministic() {
        let run = || {
            let mut store = ParameterStore::new();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mlp = Mlp::new(&mut store, "m", Group::Critic, 4, 4, 2, &mut rng);
            let mut tape = Tape::new();
            let x = tape.constant(vec![4], vec![0.1, -0.7, 2.0, 0.0]);
            let y = mlp.apply(&mut tape, &store, x).unwrap();
            tape.values(y).to_vec()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }
}
