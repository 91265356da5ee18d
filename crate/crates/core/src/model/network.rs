use super::params::Slots;
use super::{param_shapes, EncoderMode, HeadMode, ModelError, WestConfig, WestParams};
use crate::autodiff::{AutodiffError, Tape, Var};
use crate::graph::RenormalizedAdjacency;
use crate::tensor::Tensor;

/// Stacks equally shaped samples so that row `i * batch + b` is row `i` of
/// sample `b`.
pub fn stack_node_major(samples: &[&Tensor]) -> Tensor {
    let batch = samples.len();
    let (n, c) = samples.first().map_or((0, 0), |s| s.shape());
    Tensor::from_fn(n * batch, c, |r, j| samples[r % batch][(r / batch, j)])
}

pub fn unstack_node_major(t: &Tensor, batch: usize) -> Vec<Tensor> {
    let n = t.rows() / batch;
    (0..batch)
        .map(|b| Tensor::from_fn(n, t.cols(), |i, j| t[(i * batch + b, j)]))
        .collect()
}

fn check_params(config: &WestConfig, params: &WestParams) -> Result<(), ModelError> {
    let shapes = param_shapes(config);
    let found = params.as_slice();
    if shapes.len() != found.len()
        || shapes
            .iter()
            .zip(found)
            .any(|((name, shape, _), p)| &p.name != name || p.value.shape() != *shape)
    {
        return Err(ModelError::ParamMismatch(
            "parameter layout does not match the model config".into(),
        ));
    }
    Ok(())
}

/// `relu(M h W)` per layer on node-major stacked rows.
fn gcn_layers(
    tape: &mut Tape,
    m: Var,
    mut h: Var,
    weights: &[Var],
    n: usize,
    batch: usize,
) -> Result<Var, AutodiffError> {
    for &w in weights {
        let c = tape.value(h).cols();
        let wide = tape.reshape(h, n, batch * c)?;
        let mixed = tape.matmul(m, wide)?;
        let tall = tape.reshape(mixed, n * batch, c)?;
        let z = tape.matmul(tall, w)?;
        h = tape.relu(z);
    }
    Ok(h)
}

fn lstm(
    tape: &mut Tape,
    vars: &[Var],
    slots: &Slots,
    seq: &[Var],
    lh: usize,
) -> Result<Var, AutodiffError> {
    let cat4 = |tape: &mut Tape, s: [usize; 4]| -> Result<Var, AutodiffError> {
        let a = tape.concat_cols(vars[s[0]], vars[s[1]])?;
        let b = tape.concat_cols(a, vars[s[2]])?;
        tape.concat_cols(b, vars[s[3]])
    };
    let w = cat4(tape, slots.w)?;
    let u = cat4(tape, slots.u)?;
    let bias = match slots.b {
        Some(b) => Some(cat4(tape, b)?),
        None => None,
    };
    let rows = seq.first().map_or(0, |&x| tape.value(x).rows());
    let mut hidden: Option<Var> = None;
    let mut cell: Option<Var> = None;
    for &x in seq {
        let mut pre = tape.matmul(x, w)?;
        // zero initial state contributes nothing at the first step
        if let Some(h) = hidden {
            let hu = tape.matmul(h, u)?;
            pre = tape.add(pre, hu)?;
        }
        if let Some(b) = bias {
            pre = tape.add_row(pre, b)?;
        }
        let f = tape.slice_cols(pre, 0, lh)?;
        let f = tape.sigmoid(f);
        let i = tape.slice_cols(pre, lh, 2 * lh)?;
        let i = tape.sigmoid(i);
        let cbar = tape.slice_cols(pre, 2 * lh, 3 * lh)?;
        let cbar = tape.tanh(cbar);
        let o = tape.slice_cols(pre, 3 * lh, 4 * lh)?;
        let o = tape.sigmoid(o);
        let ic = tape.hadamard(i, cbar)?;
        let c = match cell {
            Some(prev) => {
                let fc = tape.hadamard(f, prev)?;
                tape.add(fc, ic)?
            }
            None => ic,
        };
        let tc = tape.tanh(c);
        hidden = Some(tape.hadamard(o, tc)?);
        cell = Some(c);
    }
    match hidden {
        Some(h) => Ok(h),
        None => Ok(tape.constant(Tensor::zeros(rows, lh))),
    }
}

/// Batched prediction on the tape. `vars` must come from
/// `tape.params(params.as_slice())`. The result is `(n * batch) x u_out` in
/// node-major order (see [`stack_node_major`]), still in scaled units.
pub fn forward_batch(
    tape: &mut Tape,
    vars: &[Var],
    config: &WestConfig,
    a_norm: &RenormalizedAdjacency,
    xs: &[&Tensor],
) -> Result<Var, ModelError> {
    let n = config.n_regions;
    let batch = xs.len();
    if batch == 0 {
        return Err(ModelError::InvalidConfig {
            key: "batch_size",
            reason: "empty batch".into(),
        });
    }
    if a_norm.n() != n {
        return Err(AutodiffError::ShapeMismatch {
            op: "forward",
            left: (n, n),
            right: a_norm.matrix().shape(),
        }
        .into());
    }
    if let Some(x) = xs.iter().find(|x| x.shape() != (n, config.u_in)) {
        return Err(AutodiffError::ShapeMismatch {
            op: "forward",
            left: (n, config.u_in),
            right: x.shape(),
        }
        .into());
    }
    let slots = Slots::new(config);
    let m = tape.constant(a_norm.matrix().clone());
    let weights: Vec<Var> = slots.gcn.iter().map(|&s| vars[s]).collect();
    let stacked = stack_node_major(xs);

    let seq: Vec<Var> = match config.encoder_mode {
        EncoderMode::PerStep => (0..config.u_in)
            .map(|t| {
                let z = tape.constant(Tensor::from_fn(n * batch, 1, |r, _| stacked[(r, t)]));
                gcn_layers(tape, m, z, &weights, n, batch)
            })
            .collect::<Result<_, _>>()?,
        EncoderMode::Block => {
            let z = tape.constant(stacked);
            let h = gcn_layers(tape, m, z, &weights, n, batch)?;
            (0..config.gcn_hidden)
                .map(|j| tape.slice_cols(h, j, j + 1))
                .collect::<Result<_, _>>()?
        }
    };
    let h = lstm(tape, vars, &slots, &seq, config.lstm_hidden)?;

    let (dw, db) = (vars[slots.dense_w], vars[slots.dense_b]);
    let out = match config.head {
        HeadMode::PerNode => {
            let z = tape.matmul(h, dw)?;
            tape.add_row(z, db)?
        }
        HeadMode::Global => {
            let to_sample: Vec<usize> =
                (0..batch * n).map(|r| (r % n) * batch + r / n).collect();
            let to_node: Vec<usize> = (0..n * batch).map(|r| (r % batch) * n + r / batch).collect();
            let hs = tape.gather_rows(h, &to_sample)?;
            let flat = tape.reshape(hs, batch, n * config.lstm_hidden)?;
            let z = tape.matmul(flat, dw)?;
            let z = tape.add_row(z, db)?;
            let zs = tape.reshape(z, batch * n, config.u_out)?;
            tape.gather_rows(zs, &to_node)?
        }
    };
    Ok(out)
}

/// Predicts the `n x u_out` (scaled) targets for one look-back block.
pub fn forward(
    x: &Tensor,
    a_norm: &RenormalizedAdjacency,
    params: &WestParams,
    config: &WestConfig,
) -> Result<Tensor, ModelError> {
    check_params(config, params)?;
    let mut tape = Tape::new();
    let vars = tape.params(params.as_slice());
    let out = forward_batch(&mut tape, &vars, config, a_norm, &[x])?;
    Ok(tape.value(out).clone())
}

/// Applies the first `k` graph-convolution layers of `params` to `z`.
pub fn gcn_encode(
    z: &Tensor,
    a_norm: &RenormalizedAdjacency,
    params: &WestParams,
    k: usize,
) -> Result<Tensor, ModelError> {
    let weights: Vec<&Tensor> = (0..k)
        .map(|l| {
            params
                .get(&format!("gcn_w{l}"))
                .map(|p| &p.value)
                .ok_or_else(|| ModelError::ParamMismatch(format!("no gcn_w{l}")))
        })
        .collect::<Result<_, _>>()?;
    let mut tape = Tape::new();
    let m = tape.constant(a_norm.matrix().clone());
    if z.rows() != a_norm.n() {
        return Err(AutodiffError::ShapeMismatch {
            op: "gcn_encode",
            left: a_norm.matrix().shape(),
            right: z.shape(),
        }
        .into());
    }
    let h = tape.constant(z.clone());
    let wv: Vec<Var> = weights.into_iter().map(|w| tape.constant(w.clone())).collect();
    let out = gcn_layers(&mut tape, m, h, &wv, z.rows(), 1)?;
    Ok(tape.value(out).clone())
}

/// Final LSTM hidden state after consuming `seq` from a zero state.
pub fn lstm_decode(
    seq: &[Tensor],
    params: &WestParams,
    config: &WestConfig,
) -> Result<Tensor, ModelError> {
    check_params(config, params)?;
    let mut tape = Tape::new();
    let vars = tape.params(params.as_slice());
    let xs: Vec<Var> = seq.iter().map(|x| tape.constant(x.clone())).collect();
    let h = lstm(&mut tape, &vars, &Slots::new(config), &xs, config.lstm_hidden)?;
    Ok(tape.value(h).clone())
}
