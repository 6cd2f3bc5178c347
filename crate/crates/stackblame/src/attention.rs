//! Global soft attention over encoder states and the emission head that
//! feeds the CRF.
//!
//! For states `h_1..h_T` (rows of a T × 2H matrix) and a learned vector `w`:
//!
//! ```text
//! score_t = w . h_t
//! alpha   = softmax(score)            (max-subtracted, so shift-invariant)
//! h*      = tanh(sum_t alpha_t h_t)
//! ```
//!
//! Each frame's emission row is a dense map of `[h_t ; h*]`, giving every
//! per-frame decision a view of the whole stack. Emissions are raw scores;
//! normalization happens inside the CRF.

use rand::Rng;

use crate::error::{shape as shape_err, Result};
use crate::nn::tensor::{axpy, dot, glorot_limit, Tensor};
use crate::nn::Dense;

/// Attention parameters: the scoring vector `w` (length 2H).
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub w: Tensor,
}

impl Attention {
    pub fn new<R: Rng>(state_dim: usize, rng: &mut R) -> Attention {
        let mut w = Tensor::zeros(&[state_dim]);
        w.init_uniform(rng, glorot_limit(state_dim, 1));
        Attention { w }
    }

    pub fn zeros(state_dim: usize) -> Attention {
        Attention { w: Tensor::zeros(&[state_dim]) }
    }

    pub fn state_dim(&self) -> usize {
        self.w.len()
    }
}

/// Everything the forward pass computes, kept for backprop.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// Softmax weights, one per frame; sum to 1.
    pub alpha: Vec<f64>,
    /// Pre-tanh context `sum_t alpha_t h_t`.
    pub context: Vec<f64>,
    /// `tanh(context)` — the stack summary vector.
    pub h_star: Vec<f64>,
}

/// Attention weights and summary vector for one stack of states (T × 2H).
pub fn attend(params: &Attention, states: &Tensor) -> Result<AttentionCache> {
    if states.rank() != 2 || states.rows() == 0 {
        return Err(shape_err(format!(
            "attention needs a (T >= 1) x dim state matrix, got {:?}",
            states.shape()
        )));
    }
    if states.cols() != params.state_dim() {
        return Err(shape_err(format!(
            "state dim {} does not match attention vector length {}",
            states.cols(),
            params.state_dim()
        )));
    }
    let t_len = states.rows();
    let scores: Vec<f64> = (0..t_len).map(|t| dot(params.w.data(), states.row(t))).collect();

    // Max-subtracted softmax: exp never overflows and alpha is invariant to
    // adding a constant to every score.
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let alpha: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let mut context = vec![0.0; states.cols()];
    for (t, a) in alpha.iter().enumerate() {
        axpy(*a, states.row(t), &mut context);
    }
    let h_star = context.iter().map(|x| x.tanh()).collect();
    Ok(AttentionCache { alpha, context, h_star })
}

/// Backward through [`attend`]: given `d_h_star`, accumulates the gradient
/// for `w` into `grad_w` and for the states into `d_states`.
pub fn attend_backward(
    params: &Attention,
    states: &Tensor,
    cache: &AttentionCache,
    d_h_star: &[f64],
    grad_w: &mut Tensor,
    d_states: &mut Tensor,
) {
    let t_len = states.rows();

    // Through tanh: d_context = d_h_star * (1 - h*^2).
    let d_context: Vec<f64> = d_h_star
        .iter()
        .zip(&cache.h_star)
        .map(|(d, h)| d * (1.0 - h * h))
        .collect();

    // context = sum alpha_t h_t.
    let d_alpha: Vec<f64> = (0..t_len).map(|t| dot(&d_context, states.row(t))).collect();
    for t in 0..t_len {
        axpy(cache.alpha[t], &d_context, d_states.row_mut(t));
    }

    // Softmax backward: d_score_t = alpha_t (d_alpha_t - sum_u alpha_u d_alpha_u).
    let mixed: f64 = cache.alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    for t in 0..t_len {
        let d_score = cache.alpha[t] * (d_alpha[t] - mixed);
        if d_score != 0.0 {
            axpy(d_score, states.row(t), grad_w.data_mut());
            axpy(d_score, params.w.data(), d_states.row_mut(t));
        }
    }
}

/// Emission matrix (T × 2): row `t` is the dense head applied to
/// `[states_t ; h_star]`.
pub fn emissions(head: &Dense, states: &Tensor, h_star: &[f64]) -> Result<Tensor> {
    let state_dim = states.cols();
    if head.input_dim() != state_dim + h_star.len() {
        return Err(shape_err(format!(
            "emission head expects input {} but [h_t; h*] has {}",
            head.input_dim(),
            state_dim + h_star.len()
        )));
    }
    let t_len = states.rows();
    let mut p = Tensor::zeros(&[t_len, head.output_dim()]);
    let mut input = vec![0.0; head.input_dim()];
    for t in 0..t_len {
        input[..state_dim].copy_from_slice(states.row(t));
        input[state_dim..].copy_from_slice(h_star);
        p.row_mut(t).copy_from_slice(&head.forward(&input));
    }
    Ok(p)
}

/// Backward through [`emissions`]: accumulates head gradients plus
/// `d_states` and `d_h_star`.
pub fn emissions_backward(
    head: &Dense,
    states: &Tensor,
    h_star: &[f64],
    d_p: &Tensor,
    grad_head: &mut Dense,
    d_states: &mut Tensor,
    d_h_star: &mut [f64],
) {
    let state_dim = states.cols();
    let t_len = states.rows();
    let mut input = vec![0.0; head.input_dim()];
    let mut d_input = vec![0.0; head.input_dim()];
    for t in 0..t_len {
        input[..state_dim].copy_from_slice(states.row(t));
        input[state_dim..].copy_from_slice(h_star);
        d_input.iter_mut().for_each(|v| *v = 0.0);
        head.backward(&input, d_p.row(t), grad_head, Some(&mut d_input));
        axpy(1.0, &d_input[..state_dim], d_states.row_mut(t));
        axpy(1.0, &d_input[state_dim..], d_h_star);
    }
}
