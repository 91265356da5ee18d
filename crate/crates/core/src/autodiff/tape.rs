use serde::{Deserialize, Serialize};

use super::AutodiffError;
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// A named trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    #[serde(skip, default = "empty_grad")]
    grad: Tensor,
}

fn empty_grad() -> Tensor {
    Tensor::zeros(0, 0)
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn grad(&self) -> &Tensor {
        &self.grad
    }

    pub fn zero_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor::zeros(self.value.rows(), self.value.cols());
        } else {
            self.grad.fill(0.0);
        }
    }

    fn accumulate(&mut self, g: &Tensor) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor::zeros(self.value.rows(), self.value.cols());
        }
        self.grad.add_assign(g);
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Hadamard(Var, Var),
    ConcatCols(Var, Var),
    SliceCols(Var, usize),
    Reshape(Var),
    GatherRows(Var, usize),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Mse(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    live: bool,
}

/// Ordered operation record supporting one backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    gathers: Vec<Vec<usize>>,
    consumed: bool,
}

fn check_same(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), AutodiffError> {
    if a.shape() != b.shape() {
        return Err(AutodiffError::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let live = |v: &Var| self.nodes[v.0].live;
        let live = match &op {
            Op::Constant => false,
            Op::Param(_) => true,
            Op::MatMul(a, b)
            | Op::Add(a, b)
            | Op::AddRow(a, b)
            | Op::Hadamard(a, b)
            | Op::ConcatCols(a, b)
            | Op::Mse(a, b) => live(a) || live(b),
            Op::SliceCols(a, _)
            | Op::Reshape(a)
            | Op::GatherRows(a, _)
            | Op::Scale(a, _)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Relu(a) => live(a),
        };
        self.nodes.push(Node { value, op, live });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Records the current value of a parameter. `slot` is the index of the
    /// parameter in the slice later passed to [`Tape::backward`].
    pub fn param(&mut self, slot: usize, p: &Parameter) -> Var {
        self.push(p.value.clone(), Op::Param(slot))
    }

    /// Binds every parameter in order; slot `i` is `params[i]`.
    pub fn params(&mut self, params: &[Parameter]) -> Vec<Var> {
        params
            .iter()
            .enumerate()
            .map(|(i, p)| self.param(i, p))
            .collect()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: va.shape(),
                right: vb.shape(),
            });
        }
        let out = va.matmul_raw(vb);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        check_same("add", va, vb)?;
        let out = va.zip_map(vb, |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds a `1 x c` row tensor to every row of an `r x c` tensor.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, AutodiffError> {
        let (va, vr) = (self.value(a), self.value(row));
        if vr.rows() != 1 || vr.cols() != va.cols() {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                left: va.shape(),
                right: vr.shape(),
            });
        }
        let bias = vr.data();
        let out = Tensor::from_fn(va.rows(), va.cols(), |i, j| va[(i, j)] + bias[j]);
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        check_same("hadamard", va, vb)?;
        let out = va.zip_map(vb, |x, y| x * y);
        Ok(self.push(out, Op::Hadamard(a, b)))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rows() != vb.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat_cols",
                left: va.shape(),
                right: vb.shape(),
            });
        }
        let ca = va.cols();
        let out = Tensor::from_fn(va.rows(), ca + vb.cols(), |i, j| {
            if j < ca {
                va[(i, j)]
            } else {
                vb[(i, j - ca)]
            }
        });
        Ok(self.push(out, Op::ConcatCols(a, b)))
    }

    /// Columns `from..to` of `a`.
    pub fn slice_cols(&mut self, a: Var, from: usize, to: usize) -> Result<Var, AutodiffError> {
        let va = self.value(a);
        if from >= to || to > va.cols() {
            return Err(AutodiffError::BadSlice {
                from,
                to,
                cols: va.cols(),
            });
        }
        let out = Tensor::from_fn(va.rows(), to - from, |i, j| va[(i, from + j)]);
        Ok(self.push(out, Op::SliceCols(a, from)))
    }

    /// Reinterprets the row-major data of `a` with a new shape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, AutodiffError> {
        let va = self.value(a);
        if va.len() != rows * cols {
            return Err(AutodiffError::ShapeMismatch {
                op: "reshape",
                left: va.shape(),
                right: (rows, cols),
            });
        }
        let out = Tensor::from_vec(rows, cols, va.data().to_vec())?;
        Ok(self.push(out, Op::Reshape(a)))
    }

    /// Row `i` of the result is row `index[i]` of `a`. Indices may repeat.
    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var, AutodiffError> {
        let va = self.value(a);
        if let Some(&bad) = index.iter().find(|&&r| r >= va.rows()) {
            return Err(AutodiffError::ShapeMismatch {
                op: "gather_rows",
                left: va.shape(),
                right: (bad, 0),
            });
        }
        let out = Tensor::from_fn(index.len(), va.cols(), |i, j| va[(index[i], j)]);
        self.gathers.push(index.to_vec());
        Ok(self.push(out, Op::GatherRows(a, self.gathers.len() - 1)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let out = self.value(a).map(|x| x * factor);
        self.push(out, Op::Scale(a, factor))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid_scalar);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(out, Op::Relu(a))
    }

    /// Mean over all elements of the squared difference, as a `1 x 1` tensor.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var, AutodiffError> {
        let (vp, vt) = (self.value(pred), self.value(target));
        check_same("mse_loss", vp, vt)?;
        let n = vp.len() as f64;
        let s: f64 = vp
            .data()
            .iter()
            .zip(vt.data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        Ok(self.push(Tensor::scalar(s / n), Op::Mse(pred, target)))
    }

    /// Accumulates d(loss)/d(param) into each bound parameter's gradient.
    /// The tape cannot be differentiated twice.
    pub fn backward(&mut self, loss: Var, params: &mut [Parameter]) -> Result<(), AutodiffError> {
        if self.consumed {
            return Err(AutodiffError::StaleTape);
        }
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(AutodiffError::NotScalar(shape));
        }
        for node in &self.nodes[..=loss.0] {
            if let Op::Param(slot) = node.op {
                if slot >= params.len() {
                    return Err(AutodiffError::UnknownParameter {
                        slot,
                        available: params.len(),
                    });
                }
            }
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.live {
                continue;
            }
            match node.op {
                Op::Constant => {}
                Op::Param(slot) => params[slot].accumulate(&g),
                Op::MatMul(a, b) => {
                    let va = &self.nodes[a.0].value;
                    let vb = &self.nodes[b.0].value;
                    if self.nodes[a.0].live {
                        accumulate(&mut grads, &self.nodes, a, g.matmul_raw(&vb.transpose()));
                    }
                    if self.nodes[b.0].live {
                        accumulate(&mut grads, &self.nodes, b, va.transpose().matmul_raw(&g));
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, &self.nodes, a, g.clone());
                    accumulate(&mut grads, &self.nodes, b, g);
                }
                Op::AddRow(a, row) => {
                    let mut gr = Tensor::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            gr[(0, j)] += g[(i, j)];
                        }
                    }
                    accumulate(&mut grads, &self.nodes, row, gr);
                    accumulate(&mut grads, &self.nodes, a, g);
                }
                Op::Hadamard(a, b) => {
                    let va = &self.nodes[a.0].value;
                    let vb = &self.nodes[b.0].value;
                    let ga = g.zip_map(vb, |x, y| x * y);
                    let gb = g.zip_map(va, |x, y| x * y);
                    accumulate(&mut grads, &self.nodes, a, ga);
                    accumulate(&mut grads, &self.nodes, b, gb);
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.nodes[a.0].value.cols();
                    let cb = self.nodes[b.0].value.cols();
                    let ga = Tensor::from_fn(g.rows(), ca, |i, j| g[(i, j)]);
                    let gb = Tensor::from_fn(g.rows(), cb, |i, j| g[(i, ca + j)]);
                    accumulate(&mut grads, &self.nodes, a, ga);
                    accumulate(&mut grads, &self.nodes, b, gb);
                }
                Op::SliceCols(a, from) => {
                    let va = &self.nodes[a.0].value;
                    let mut ga = Tensor::zeros(va.rows(), va.cols());
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            ga[(i, from + j)] = g[(i, j)];
                        }
                    }
                    accumulate(&mut grads, &self.nodes, a, ga);
                }
                Op::Reshape(a) => {
                    let (r, c) = self.nodes[a.0].value.shape();
                    let ga = Tensor::from_vec(r, c, g.into_data())?;
                    accumulate(&mut grads, &self.nodes, a, ga);
                }
                Op::GatherRows(a, k) => {
                    let va = &self.nodes[a.0].value;
                    let mut ga = Tensor::zeros(va.rows(), va.cols());
                    for (i, &r) in self.gathers[k].iter().enumerate() {
                        for j in 0..g.cols() {
                            ga[(r, j)] += g[(i, j)];
                        }
                    }
                    accumulate(&mut grads, &self.nodes, a, ga);
                }
                Op::Scale(a, factor) => accumulate(&mut grads, &self.nodes, a, g.map(|x| x * factor)),
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    accumulate(&mut grads, &self.nodes, a, g.zip_map(y, |gi, yi| gi * yi * (1.0 - yi)));
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    accumulate(&mut grads, &self.nodes, a, g.zip_map(y, |gi, yi| gi * (1.0 - yi * yi)));
                }
                Op::Relu(a) => {
                    // Subgradient at exactly zero is taken as zero.
                    let x = &self.nodes[a.0].value;
                    accumulate(
                        &mut grads,
                        &self.nodes,
                        a,
                        g.zip_map(x, |gi, xi| if xi > 0.0 { gi } else { 0.0 }),
                    );
                }
                Op::Mse(pred, target) => {
                    let vp = &self.nodes[pred.0].value;
                    let vt = &self.nodes[target.0].value;
                    let scale = 2.0 * g[(0, 0)] / vp.len() as f64;
                    let gp = vp.zip_map(vt, |p, t| scale * (p - t));
                    let gt = gp.map(|x| -x);
                    accumulate(&mut grads, &self.nodes, pred, gp);
                    accumulate(&mut grads, &self.nodes, target, gt);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Tensor>], nodes: &[Node], v: Var, g: Tensor) {
    if !nodes[v.0].live {
        return;
    }
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(rows)
    }

    #[test]
    fn identity_and_zero_laws() {
        let mut tape = Tape::new();
        let m = tape.constant(t(&[&[1.0, -2.0], &[3.5, 4.0]]));
        let i2 = tape.constant(Tensor::identity(2));
        let z = tape.constant(Tensor::zeros(2, 2));
        let prod = tape.matmul(i2, m).unwrap();
        let sum = tape.add(m, z).unwrap();
        assert_eq!(tape.value(prod), tape.value(m));
        assert_eq!(tape.value(sum), tape.value(m));
    }

    #[test]
    fn matmul_example() {
        let mut tape = Tape::new();
        let a = tape.constant(t(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let b = tape.constant(t(&[&[5.0], &[6.0]]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c), &t(&[&[17.0], &[39.0]]));
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        let err = tape.matmul(a, b).unwrap_err();
        assert_eq!(
            err,
            AutodiffError::ShapeMismatch {
                op: "matmul",
                left: (2, 3),
                right: (2, 3)
            }
        );
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
        let c = tape.constant(Tensor::zeros(3, 2));
        assert!(tape.add(a, c).is_err());
        assert!(tape.hadamard(a, c).is_err());
        assert!(tape.mse_loss(a, c).is_err());
        assert!(tape.slice_cols(a, 2, 4).is_err());
    }

    #[test]
    fn activations_at_reference_points() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[&[0.0, -3.0, 50.0, -50.0]]));
        let s = tape.sigmoid(x);
        let th = tape.tanh(x);
        let r = tape.relu(x);
        assert_eq!(tape.value(s)[(0, 0)], 0.5);
        assert!((tape.value(s)[(0, 2)] - 1.0).abs() < 1e-15);
        assert!(tape.value(s)[(0, 3)] > 0.0);
        assert_eq!(tape.value(th)[(0, 0)], 0.0);
        assert_eq!(tape.value(r)[(0, 1)], 0.0);
        assert_eq!(tape.value(r)[(0, 2)], 50.0);
    }

    #[test]
    fn mse_examples() {
        let mut tape = Tape::new();
        let p = tape.constant(t(&[&[0.0, 0.0]]));
        let y = tape.constant(t(&[&[1.0, 3.0]]));
        let l = tape.mse_loss(p, y).unwrap();
        let l2 = tape.mse_loss(y, p).unwrap();
        let l0 = tape.mse_loss(y, y).unwrap();
        assert_eq!(tape.value(l)[(0, 0)], 5.0);
        assert_eq!(tape.value(l2)[(0, 0)], 5.0);
        assert_eq!(tape.value(l0)[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_chain_rule_hand_value() {
        // loss = mse(w * x, y), w = 1, x = 2, y = 0 -> dL/dw = 2 (w x - y) x = 8
        let mut params = vec![Parameter::new("w", Tensor::scalar(1.0))];
        let mut tape = Tape::new();
        let w = tape.param(0, &params[0]);
        let x = tape.constant(Tensor::scalar(2.0));
        let y = tape.constant(Tensor::scalar(0.0));
        let wx = tape.matmul(w, x).unwrap();
        let loss = tape.mse_loss(wx, y).unwrap();
        tape.backward(loss, &mut params).unwrap();
        assert_eq!(params[0].grad()[(0, 0)], 8.0);
    }

    #[test]
    fn unused_parameter_has_zero_grad() {
        let mut params = vec![
            Parameter::new("used", Tensor::scalar(3.0)),
            Parameter::new("unused", Tensor::filled(2, 2, 1.0)),
        ];
        let mut tape = Tape::new();
        let vars = tape.params(&params);
        let loss = tape.hadamard(vars[0], vars[0]).unwrap();
        tape.backward(loss, &mut params).unwrap();
        assert_eq!(params[0].grad()[(0, 0)], 6.0);
        assert_eq!(params[1].grad(), &Tensor::zeros(2, 2));
    }

    #[test]
    fn backward_errors() {
        let mut params = vec![Parameter::new("w", Tensor::zeros(1, 2))];
        let mut tape = Tape::new();
        let w = tape.param(0, &params[0]);
        assert_eq!(
            tape.backward(w, &mut params),
            Err(AutodiffError::NotScalar((1, 2)))
        );
        let loss = tape.mse_loss(w, w).unwrap();
        tape.backward(loss, &mut params).unwrap();
        assert_eq!(
            tape.backward(loss, &mut params),
            Err(AutodiffError::StaleTape)
        );

        let mut tape = Tape::new();
        let w = tape.param(3, &params[0]);
        let loss = tape.mse_loss(w, w).unwrap();
        assert!(matches!(
            tape.backward(loss, &mut params),
            Err(AutodiffError::UnknownParameter { slot: 3, .. })
        ));
    }

    #[test]
    fn relu_gradient_at_zero_is_zero() {
        let mut params = vec![Parameter::new("x", Tensor::from_rows(&[[0.0, 1.0, -1.0]]))];
        let mut tape = Tape::new();
        let x = tape.param(0, &params[0]);
        let r = tape.relu(x);
        let zero = tape.constant(Tensor::zeros(1, 3));
        let loss = tape.mse_loss(r, zero).unwrap();
        tape.backward(loss, &mut params).unwrap();
        assert_eq!(params[0].grad().data(), &[0.0, 2.0 / 3.0, 0.0]);
    }

    #[test]
    fn zero_grad_resets() {
        let mut p = Parameter::new("w", Tensor::scalar(2.0));
        p.accumulate(&Tensor::scalar(5.0));
        assert_eq!(p.grad()[(0, 0)], 5.0);
        p.zero_grad();
        assert_eq!(p.grad()[(0, 0)], 0.0);
    }

    #[test]
    fn gather_rows_forward_and_gradient() {
        let mut params = vec![Parameter::new("a", t(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]))];
        let mut tape = Tape::new();
        let a = tape.param(0, &params[0]);
        let g = tape.gather_rows(a, &[2, 0, 2]).unwrap();
        assert_eq!(tape.value(g), &t(&[&[5.0, 6.0], &[1.0, 2.0], &[5.0, 6.0]]));
        assert!(tape.gather_rows(a, &[3]).is_err());

        let report = crate::autodiff::finite_diff_check(
            |tape, vars| {
                let g = tape.gather_rows(vars[0], &[2, 0, 2])?;
                let sq = tape.hadamard(g, g)?;
                let z = tape.constant(Tensor::zeros(3, 2));
                tape.mse_loss(sq, z)
            },
            &mut params,
            1e-6,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-7, "{report:?}");
        // row 1 is never gathered
        assert_eq!(params[0].grad().row(1), &[0.0, 0.0]);
    }
}
