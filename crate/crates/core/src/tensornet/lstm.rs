use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One LSTM direction. Each gate reads `[h_prev, x]` through an `(n, n+d)`
/// matrix plus a length-`n` bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmParams {
    pub input: ParamId,
    pub forget: ParamId,
    pub output: ParamId,
    pub candidate: ParamId,
    pub input_bias: ParamId,
    pub forget_bias: ParamId,
    pub output_bias: ParamId,
    pub candidate_bias: ParamId,
    pub hidden: usize,
    pub input_dim: usize,
}

const GATES: [&str; 4] = ["input", "forget", "output", "candidate"];

impl LstmParams {
    /// Registers zero-valued, trainable gate parameters under `prefix`.
    pub fn register<T: Scalar>(store: &mut ParamStore<T>, prefix: &str, hidden: usize, input_dim: usize) -> Result<Self> {
        if hidden == 0 || input_dim == 0 {
            return Err(Error::InvalidArgument("LSTM sizes must be positive".into()));
        }
        let mut w = Vec::new();
        let mut b = Vec::new();
        for g in GATES {
            w.push(store.add(&format!("{prefix}.w_{g}"), Tensor::zeros(vec![hidden, hidden + input_dim]), true)?);
            b.push(store.add(&format!("{prefix}.b_{g}"), Tensor::zeros(vec![hidden]), true)?);
        }
        Ok(LstmParams {
            input: w[0],
            forget: w[1],
            output: w[2],
            candidate: w[3],
            input_bias: b[0],
            forget_bias: b[1],
            output_bias: b[2],
            candidate_bias: b[3],
            hidden,
            input_dim,
        })
    }

    /// Looks up parameters previously registered under `prefix`.
    pub fn load<T: Scalar>(store: &ParamStore<T>, prefix: &str) -> Result<Self> {
        let mut w = Vec::new();
        let mut b = Vec::new();
        for g in GATES {
            w.push(store.require(&format!("{prefix}.w_{g}"))?);
            b.push(store.require(&format!("{prefix}.b_{g}"))?);
        }
        let shape = store.value(w[0]).shape().to_vec();
        if shape.len() != 2 || shape[1] <= shape[0] {
            return Err(Error::Checkpoint(format!("`{prefix}` gate shape {shape:?}")));
        }
        let (hidden, input_dim) = (shape[0], shape[1] - shape[0]);
        for id in &w {
            if store.value(*id).shape() != [hidden, hidden + input_dim] {
                return Err(Error::Checkpoint(format!("`{}` shape mismatch", store.name(*id))));
            }
        }
        for id in &b {
            if store.value(*id).shape() != [hidden] {
                return Err(Error::Checkpoint(format!("`{}` shape mismatch", store.name(*id))));
            }
        }
        Ok(LstmParams {
            input: w[0],
            forget: w[1],
            output: w[2],
            candidate: w[3],
            input_bias: b[0],
            forget_bias: b[1],
            output_bias: b[2],
            candidate_bias: b[3],
            hidden,
            input_dim,
        })
    }

    fn gate<T: Scalar>(&self, tape: &mut Tape<'_, T>, w: ParamId, b: ParamId, hx: Var) -> Result<Var> {
        let pre = tape.matvec(w, hx)?;
        let bias = tape.param(b);
        tape.add(pre, bias)
    }

    /// One step on the tape. Returns `(h, c)`.
    pub fn step<T: Scalar>(&self, tape: &mut Tape<'_, T>, h: Var, c: Var, x: Var) -> Result<(Var, Var)> {
        for (what, v, want) in [("h", h, self.hidden), ("c", c, self.hidden), ("x", x, self.input_dim)] {
            if tape.len(v) != want {
                return Err(Error::Shape(format!("LSTM {what} has length {}, expected {want}", tape.len(v))));
            }
        }
        let hx = tape.concat(&[h, x]);
        let i = self.gate(tape, self.input, self.input_bias, hx)?;
        let i = tape.sigmoid(i);
        let f = self.gate(tape, self.forget, self.forget_bias, hx)?;
        let f = tape.sigmoid(f);
        let o = self.gate(tape, self.output, self.output_bias, hx)?;
        let o = tape.sigmoid(o);
        let g = self.gate(tape, self.candidate, self.candidate_bias, hx)?;
        let g = tape.tanh(g);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c = tape.add(fc, ig)?;
        let tc = tape.tanh(c);
        let h = tape.mul(o, tc)?;
        Ok((h, c))
    }

    /// Runs over `xs` from zero state and returns the last hidden state;
    /// right to left when `reverse`.
    pub fn run<T: Scalar>(&self, tape: &mut Tape<'_, T>, xs: &[Var], reverse: bool) -> Result<Var> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let h = tape.input(vec![T::zero(); self.hidden]);
        let c = tape.input(vec![T::zero(); self.hidden]);
        Ok(self.run_from(tape, xs, h, c, reverse)?.0)
    }

    /// Runs over `xs` from the given state; returns the final `(h, c)`.
    pub fn run_from<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        xs: &[Var],
        mut h: Var,
        mut c: Var,
        reverse: bool,
    ) -> Result<(Var, Var)> {
        let order: Box<dyn Iterator<Item = &Var>> = if reverse {
            Box::new(xs.iter().rev())
        } else {
            Box::new(xs.iter())
        };
        for &x in order {
            (h, c) = self.step(tape, h, c, x)?;
        }
        Ok((h, c))
    }
}

/// `[forward last state, backward last state]` on the tape.
pub fn bilstm<T: Scalar>(tape: &mut Tape<'_, T>, xs: &[Var], fwd: &LstmParams, bwd: &LstmParams) -> Result<Var> {
    let hf = fwd.run(tape, xs, false)?;
    let hb = bwd.run(tape, xs, true)?;
    Ok(tape.concat(&[hf, hb]))
}

/// Single LSTM step outside any training graph.
pub fn lstm_step<T: Scalar>(
    store: &ParamStore<T>,
    p: &LstmParams,
    h_prev: &[T],
    c_prev: &[T],
    x: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let mut tape = Tape::new(store);
    let h = tape.input(h_prev.to_vec());
    let c = tape.input(c_prev.to_vec());
    let x = tape.input(x.to_vec());
    let (h, c) = p.step(&mut tape, h, c, x)?;
    Ok((tape.value(h).to_vec(), tape.value(c).to_vec()))
}

/// Bidirectional encoding of a `T × d` matrix, outside any training graph.
pub fn bilstm_encode<T: Scalar>(store: &ParamStore<T>, x: &Tensor<T>, fwd: &LstmParams, bwd: &LstmParams) -> Result<Vec<T>> {
    if x.shape().len() != 2 {
        return Err(Error::Shape(format!("expected a matrix, got shape {:?}", x.shape())));
    }
    let mut tape = Tape::new(store);
    let xs: Vec<Var> = (0..x.rows()).map(|r| tape.input(x.row(r).to_vec())).collect();
    let out = bilstm(&mut tape, &xs, fwd, bwd)?;
    Ok(tape.value(out).to_vec())
}
