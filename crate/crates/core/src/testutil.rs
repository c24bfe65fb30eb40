//! Scalar reference implementations shared by unit tests.

use crate::tensornet::{Encoder, LstmParams, ParamStore, Vocab, BOS_ID, EOS_ID};

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Plain-loop LSTM over rows of `table` indexed by `ids`.
pub fn reference_lstm(store: &ParamStore<f64>, lstm: &LstmParams, rows: &[Vec<f64>]) -> Vec<f64> {
    let n = lstm.hidden;
    let ws = [lstm.input, lstm.forget, lstm.output, lstm.candidate].map(|id| store.value(id).data().to_vec());
    let bs = [lstm.input_bias, lstm.forget_bias, lstm.output_bias, lstm.candidate_bias]
        .map(|id| store.value(id).data().to_vec());
    let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
    for x in rows {
        let hx: Vec<f64> = h.iter().chain(x).copied().collect();
        let pre = |k: usize, r: usize| (0..hx.len()).map(|j| ws[k][r * hx.len() + j] * hx[j]).sum::<f64>() + bs[k][r];
        let mut hn = vec![0.0; n];
        for r in 0..n {
            let (i, f, o, g) = (sig(pre(0, r)), sig(pre(1, r)), sig(pre(2, r)), pre(3, r).tanh());
            c[r] = f * c[r] + i * g;
            hn[r] = o * c[r].tanh();
        }
        h = hn;
    }
    h
}

/// Encoder output for `tokens` without dropout, computed by plain loops.
pub fn reference_encode(store: &ParamStore<f64>, enc: &Encoder, vocab: &Vocab, tokens: &[&str]) -> Vec<f64> {
    let table = enc.emb.table(store);
    let ids: Vec<usize> = std::iter::once(BOS_ID)
        .chain(tokens.iter().map(|t| vocab.get(t)))
        .chain(std::iter::once(EOS_ID))
        .collect();
    let rows: Vec<Vec<f64>> = ids.iter().map(|&i| table.row(i).to_vec()).collect();
    let rev: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
    let mut out = reference_lstm(store, &enc.fwd, &rows);
    out.extend(reference_lstm(store, &enc.bwd, &rev));
    out
}

/// `w · [a, b, a ⊙ b] + bias` by plain loops.
pub fn reference_trilinear(w: &[f64], bias: f64, a: &[f64], b: &[f64]) -> f64 {
    let feats: Vec<f64> = a
        .iter()
        .chain(b)
        .copied()
        .chain(a.iter().zip(b).map(|(x, y)| x * y))
        .collect();
    w.iter().zip(&feats).map(|(x, y)| x * y).sum::<f64>() + bias
}
