//! LSTM and BiLSTM with hand-derived backpropagation through time.
//!
//! Standard gate equations:
//!
//! ```text
//! i = sigmoid(W_i x + U_i h_prev + b_i)      input gate
//! f = sigmoid(W_f x + U_f h_prev + b_f)      forget gate
//! o = sigmoid(W_o x + U_o h_prev + b_o)      output gate
//! g = tanh(W_g x + U_g h_prev + b_g)         candidate
//! c = f * c_prev + i * g
//! h = o * tanh(c)
//! ```
//!
//! Input weights are stored input-major (input × hidden): the batched
//! projection over a whole sequence is then a plain row-major product, and
//! the sparse path ([`lstm_forward_sparse`]) streams one contiguous weight
//! row per nonzero feature. Weight-gradient accumulation is likewise batched
//! over the sequence; only the inherently sequential recurrent matvecs run
//! per step. Sequences are unpadded: a stack of T frames costs exactly T
//! steps.

use rand::Rng;

use crate::nn::tensor::{axpy, gemm, glorot_limit, matvec_add, matvec_t_add, SparseRows, Tensor};

/// Weights for one LSTM direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    // Input-to-hidden weights, one (input × hidden) matrix per gate.
    pub w_i: Tensor,
    pub w_f: Tensor,
    pub w_o: Tensor,
    pub w_g: Tensor,
    // Hidden-to-hidden weights, (hidden × hidden) per gate, stored
    // source-major like the input weights: row j holds unit j's outgoing
    // weights.
    pub u_i: Tensor,
    pub u_f: Tensor,
    pub u_o: Tensor,
    pub u_g: Tensor,
    // Biases, (hidden) per gate.
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_o: Tensor,
    pub b_g: Tensor,
}

impl LstmParams {
    /// Glorot-uniform weights; forget-gate bias starts at 1 so memory is
    /// retained early in training, other biases at 0.
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> LstmParams {
        let mut p = LstmParams::zeros(input, hidden);
        let wl = glorot_limit(input, hidden);
        let ul = glorot_limit(hidden, hidden);
        for w in [&mut p.w_i, &mut p.w_f, &mut p.w_o, &mut p.w_g] {
            w.init_uniform(rng, wl);
        }
        for u in [&mut p.u_i, &mut p.u_f, &mut p.u_o, &mut p.u_g] {
            u.init_uniform(rng, ul);
        }
        p.b_f.fill(1.0);
        p
    }

    pub fn zeros(input: usize, hidden: usize) -> LstmParams {
        LstmParams {
            w_i: Tensor::zeros(&[input, hidden]),
            w_f: Tensor::zeros(&[input, hidden]),
            w_o: Tensor::zeros(&[input, hidden]),
            w_g: Tensor::zeros(&[input, hidden]),
            u_i: Tensor::zeros(&[hidden, hidden]),
            u_f: Tensor::zeros(&[hidden, hidden]),
            u_o: Tensor::zeros(&[hidden, hidden]),
            u_g: Tensor::zeros(&[hidden, hidden]),
            b_i: Tensor::zeros(&[hidden]),
            b_f: Tensor::zeros(&[hidden]),
            b_o: Tensor::zeros(&[hidden]),
            b_g: Tensor::zeros(&[hidden]),
        }
    }

    pub fn zeros_like(&self) -> LstmParams {
        LstmParams::zeros(self.input_dim(), self.hidden_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.w_i.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.b_i.len()
    }

    /// Tensors in a fixed, documented order (weights, recurrences, biases).
    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.w_i, &self.w_f, &self.w_o, &self.w_g,
            &self.u_i, &self.u_f, &self.u_o, &self.u_g,
            &self.b_i, &self.b_f, &self.b_o, &self.b_g,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_i, &mut self.w_f, &mut self.w_o, &mut self.w_g,
            &mut self.u_i, &mut self.u_f, &mut self.u_o, &mut self.u_g,
            &mut self.b_i, &mut self.b_f, &mut self.b_o, &mut self.b_g,
        ]
    }
}

/// Per-step activations kept for backprop, all (T × hidden).
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub i: Tensor,
    pub f: Tensor,
    pub o: Tensor,
    pub g: Tensor,
    pub c: Tensor,
    pub tanh_c: Tensor,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gate_buffers(t_len: usize, h_dim: usize) -> [Tensor; 4] {
    [
        Tensor::zeros(&[t_len, h_dim]),
        Tensor::zeros(&[t_len, h_dim]),
        Tensor::zeros(&[t_len, h_dim]),
        Tensor::zeros(&[t_len, h_dim]),
    ]
}

/// Runs the LSTM over `x` (T × input). Returns hidden states (T × hidden)
/// and the cache needed by [`lstm_backward`].
pub fn lstm_forward(p: &LstmParams, x: &Tensor) -> (Tensor, LstmCache) {
    debug_assert_eq!(x.cols(), p.input_dim());
    // Batched input projections: a_g = x . W_g for every gate.
    let mut a = gate_buffers(x.rows(), p.hidden_dim());
    for (acc, w) in a.iter_mut().zip([&p.w_i, &p.w_f, &p.w_o, &p.w_g]) {
        gemm(1.0, x, false, w, false, 0.0, acc);
    }
    run_steps(p, a)
}

/// [`lstm_forward`] over sparse input rows: input projections touch only the
/// nonzero features. Matches the dense path to rounding error.
pub fn lstm_forward_sparse(p: &LstmParams, x: &SparseRows) -> (Tensor, LstmCache) {
    debug_assert_eq!(x.dim(), p.input_dim());
    let mut a = gate_buffers(x.len(), p.hidden_dim());
    for (acc, w) in a.iter_mut().zip([&p.w_i, &p.w_f, &p.w_o, &p.w_g]) {
        for t in 0..x.len() {
            let row = acc.row_mut(t);
            for &(j, v) in x.row(t) {
                axpy(v, w.row(j as usize), row);
            }
        }
    }
    run_steps(p, a)
}

/// The recurrence itself, given precomputed input projections `a_g = x W_g`.
fn run_steps(p: &LstmParams, mut a: [Tensor; 4]) -> (Tensor, LstmCache) {
    let t_len = a[0].rows();
    let h_dim = p.hidden_dim();
    let mut cache = LstmCache {
        i: Tensor::zeros(&[t_len, h_dim]),
        f: Tensor::zeros(&[t_len, h_dim]),
        o: Tensor::zeros(&[t_len, h_dim]),
        g: Tensor::zeros(&[t_len, h_dim]),
        c: Tensor::zeros(&[t_len, h_dim]),
        tanh_c: Tensor::zeros(&[t_len, h_dim]),
    };
    let mut h = Tensor::zeros(&[t_len, h_dim]);
    let mut h_prev = vec![0.0; h_dim];
    let mut c_prev = vec![0.0; h_dim];

    for t in 0..t_len {
        // Finish the gate pre-activations with the recurrent term and bias.
        for (acc, (u, b)) in a.iter_mut().zip([
            (&p.u_i, &p.b_i),
            (&p.u_f, &p.b_f),
            (&p.u_o, &p.b_o),
            (&p.u_g, &p.b_g),
        ]) {
            let row = acc.row_mut(t);
            axpy(1.0, b.data(), row);
            matvec_t_add(u, &h_prev, row);
        }
        {
            let (ai, af, ao, ag) = (a[0].row(t), a[1].row(t), a[2].row(t), a[3].row(t));
            let ci = cache.i.row_mut(t);
            let cf = cache.f.row_mut(t);
            let co = cache.o.row_mut(t);
            let cg = cache.g.row_mut(t);
            let cc = cache.c.row_mut(t);
            let ctc = cache.tanh_c.row_mut(t);
            let hr = h.row_mut(t);
            for k in 0..h_dim {
                let i = sigmoid(ai[k]);
                let f = sigmoid(af[k]);
                let o = sigmoid(ao[k]);
                let g = ag[k].tanh();
                let c = f * c_prev[k] + i * g;
                let tc = c.tanh();
                ci[k] = i;
                cf[k] = f;
                co[k] = o;
                cg[k] = g;
                cc[k] = c;
                ctc[k] = tc;
                hr[k] = o * tc;
            }
        }
        h_prev.copy_from_slice(h.row(t));
        c_prev.copy_from_slice(cache.c.row(t));
    }
    (h, cache)
}

/// The step-wise part of backprop: turns `d_h` into gate pre-activation
/// gradients, accumulating bias and recurrent-weight gradients on the way.
fn backward_steps(
    p: &LstmParams,
    h: &Tensor,
    cache: &LstmCache,
    d_h: &Tensor,
    grads: &mut LstmParams,
) -> [Tensor; 4] {
    let t_len = h.rows();
    let h_dim = p.hidden_dim();
    let mut da = gate_buffers(t_len, h_dim);

    let mut carry_h = vec![0.0; h_dim];
    let mut carry_c = vec![0.0; h_dim];
    for t in (0..t_len).rev() {
        // Split the four gate buffers so each row can be written in one pass.
        let (d012, d3) = da.split_at_mut(3);
        let (d01, d2) = d012.split_at_mut(2);
        let (d0, d1) = d01.split_at_mut(1);
        let di = d0[0].row_mut(t);
        let df = d1[0].row_mut(t);
        let dod = d2[0].row_mut(t);
        let dg = d3[0].row_mut(t);
        let dh_row = d_h.row(t);
        let (ci, cf, co, cg, ctc) =
            (cache.i.row(t), cache.f.row(t), cache.o.row(t), cache.g.row(t), cache.tanh_c.row(t));
        for k in 0..h_dim {
            let dh = dh_row[k] + carry_h[k];
            let (i, f, o, g, tc) = (ci[k], cf[k], co[k], cg[k], ctc[k]);
            let c_prev = if t > 0 { cache.c.get2(t - 1, k) } else { 0.0 };

            let dc = dh * o * (1.0 - tc * tc) + carry_c[k];
            di[k] = dc * g * i * (1.0 - i);
            df[k] = dc * c_prev * f * (1.0 - f);
            dod[k] = dh * tc * o * (1.0 - o);
            dg[k] = dc * i * (1.0 - g * g);
            carry_c[k] = dc * f;
        }
        for (acc, b) in
            da.iter().zip([&mut grads.b_i, &mut grads.b_f, &mut grads.b_o, &mut grads.b_g])
        {
            axpy(1.0, acc.row(t), b.data_mut());
        }
        if t > 0 {
            carry_h.iter_mut().for_each(|v| *v = 0.0);
            for (acc, u) in da.iter().zip([&p.u_i, &p.u_f, &p.u_o, &p.u_g]) {
                matvec_add(u, acc.row(t), &mut carry_h);
            }
        }
    }

    // dU_g += h_shiftedᵀ . da_g where h_shifted[t] = h[t-1], row 0 zero.
    let mut h_prev_all = Tensor::zeros(&[t_len, h_dim]);
    for t in 1..t_len {
        let src = h.row(t - 1).to_vec();
        h_prev_all.row_mut(t).copy_from_slice(&src);
    }
    for (acc, u) in da.iter().zip([&mut grads.u_i, &mut grads.u_f, &mut grads.u_o, &mut grads.u_g])
    {
        gemm(1.0, &h_prev_all, true, acc, false, 1.0, u);
    }
    da
}

/// Backpropagates `d_h` (T × hidden, gradient w.r.t. the hidden states)
/// through the sequence, accumulating into `grads` and optionally `dx`
/// (T × input).
pub fn lstm_backward(
    p: &LstmParams,
    x: &Tensor,
    h: &Tensor,
    cache: &LstmCache,
    d_h: &Tensor,
    grads: &mut LstmParams,
    mut dx: Option<&mut Tensor>,
) {
    let da = backward_steps(p, h, cache, d_h, grads);
    // dW_g += xᵀ . da_g, batched over the sequence.
    for (acc, w) in da.iter().zip([&mut grads.w_i, &mut grads.w_f, &mut grads.w_o, &mut grads.w_g])
    {
        gemm(1.0, x, true, acc, false, 1.0, w);
    }
    if let Some(dx) = dx.as_deref_mut() {
        for (acc, w) in da.iter().zip([&p.w_i, &p.w_f, &p.w_o, &p.w_g]) {
            gemm(1.0, acc, false, w, true, 1.0, dx);
        }
    }
}

/// [`lstm_backward`] over sparse input rows. Weight gradients touch only the
/// nonzero features; the input gradient is not produced (features are leaves
/// of the graph, nothing upstream consumes it).
pub fn lstm_backward_sparse(
    p: &LstmParams,
    x: &SparseRows,
    h: &Tensor,
    cache: &LstmCache,
    d_h: &Tensor,
    grads: &mut LstmParams,
) {
    let da = backward_steps(p, h, cache, d_h, grads);
    for (acc, w) in da.iter().zip([&mut grads.w_i, &mut grads.w_f, &mut grads.w_o, &mut grads.w_g])
    {
        for t in 0..x.len() {
            for &(j, v) in x.row(t) {
                axpy(v, acc.row(t), w.row_mut(j as usize));
            }
        }
    }
}

/// Bidirectional LSTM: a forward pass over the stack and a backward pass
/// over the reversed stack, with states concatenated per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

/// Hidden states and step caches from both directions.
#[derive(Debug, Clone)]
pub struct BiLstmCache {
    pub h_fwd: Tensor,
    pub h_bwd: Tensor,
    pub fwd: LstmCache,
    pub bwd: LstmCache,
}

impl BiLstm {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> BiLstm {
        BiLstm { fwd: LstmParams::new(input, hidden, rng), bwd: LstmParams::new(input, hidden, rng) }
    }

    pub fn zeros_like(&self) -> BiLstm {
        BiLstm { fwd: self.fwd.zeros_like(), bwd: self.bwd.zeros_like() }
    }

    pub fn input_dim(&self) -> usize {
        self.fwd.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.fwd.hidden_dim()
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut t = self.fwd.tensors();
        t.extend(self.bwd.tensors());
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut f = self.fwd.tensors_mut();
        f.extend(self.bwd.tensors_mut());
        f
    }
}

fn reverse_rows(x: &Tensor) -> Tensor {
    let mut rev = x.zeros_like();
    for t in 0..x.rows() {
        rev.row_mut(x.rows() - 1 - t).copy_from_slice(x.row(t));
    }
    rev
}

fn concat_directions(h_fwd: Tensor, h_bwd: Tensor, fwd: LstmCache, bwd: LstmCache) -> (Tensor, BiLstmCache) {
    let t_len = h_fwd.rows();
    let h_dim = h_fwd.cols();
    let mut out = Tensor::zeros(&[t_len, 2 * h_dim]);
    for t in 0..t_len {
        out.row_mut(t)[..h_dim].copy_from_slice(h_fwd.row(t));
        let src = h_bwd.row(t_len - 1 - t).to_vec();
        out.row_mut(t)[h_dim..].copy_from_slice(&src);
    }
    (out, BiLstmCache { h_fwd, h_bwd, fwd, bwd })
}

/// Returns states (T × 2·hidden): forward state then backward state per frame.
pub fn bilstm_forward(p: &BiLstm, x: &Tensor) -> (Tensor, BiLstmCache) {
    let (h_fwd, fwd) = lstm_forward(&p.fwd, x);
    let (h_bwd, bwd) = lstm_forward(&p.bwd, &reverse_rows(x));
    concat_directions(h_fwd, h_bwd, fwd, bwd)
}

/// [`bilstm_forward`] over sparse input rows.
pub fn bilstm_forward_sparse(p: &BiLstm, x: &SparseRows) -> (Tensor, BiLstmCache) {
    let (h_fwd, fwd) = lstm_forward_sparse(&p.fwd, x);
    let (h_bwd, bwd) = lstm_forward_sparse(&p.bwd, &x.reversed());
    concat_directions(h_fwd, h_bwd, fwd, bwd)
}

fn split_directions(d_out: &Tensor, h_dim: usize) -> (Tensor, Tensor) {
    let t_len = d_out.rows();
    let mut d_fwd = Tensor::zeros(&[t_len, h_dim]);
    let mut d_bwd = Tensor::zeros(&[t_len, h_dim]);
    for t in 0..t_len {
        d_fwd.row_mut(t).copy_from_slice(&d_out.row(t)[..h_dim]);
        d_bwd.row_mut(t_len - 1 - t).copy_from_slice(&d_out.row(t)[h_dim..]);
    }
    (d_fwd, d_bwd)
}

/// Backward for [`bilstm_forward`]; `d_out` is (T × 2·hidden).
pub fn bilstm_backward(
    p: &BiLstm,
    x: &Tensor,
    cache: &BiLstmCache,
    d_out: &Tensor,
    grads: &mut BiLstm,
    dx: Option<&mut Tensor>,
) {
    let (d_fwd, d_bwd) = split_directions(d_out, p.hidden_dim());
    let x_rev = reverse_rows(x);
    match dx {
        Some(dx) => {
            lstm_backward(&p.fwd, x, &cache.h_fwd, &cache.fwd, &d_fwd, &mut grads.fwd, Some(dx));
            let mut dx_rev = Tensor::zeros(&[x.rows(), x.cols()]);
            lstm_backward(
                &p.bwd,
                &x_rev,
                &cache.h_bwd,
                &cache.bwd,
                &d_bwd,
                &mut grads.bwd,
                Some(&mut dx_rev),
            );
            let dx_unrev = reverse_rows(&dx_rev);
            for t in 0..x.rows() {
                axpy(1.0, dx_unrev.row(t), dx.row_mut(t));
            }
        }
        None => {
            lstm_backward(&p.fwd, x, &cache.h_fwd, &cache.fwd, &d_fwd, &mut grads.fwd, None);
            lstm_backward(&p.bwd, &x_rev, &cache.h_bwd, &cache.bwd, &d_bwd, &mut grads.bwd, None);
        }
    }
}

/// Backward for [`bilstm_forward_sparse`]; no input gradient.
pub fn bilstm_backward_sparse(
    p: &BiLstm,
    x: &SparseRows,
    cache: &BiLstmCache,
    d_out: &Tensor,
    grads: &mut BiLstm,
) {
    let (d_fwd, d_bwd) = split_directions(d_out, p.hidden_dim());
    lstm_backward_sparse(&p.fwd, x, &cache.h_fwd, &cache.fwd, &d_fwd, &mut grads.fwd);
    lstm_backward_sparse(&p.bwd, &x.reversed(), &cache.h_bwd, &cache.bwd, &d_bwd, &mut grads.bwd);
}
