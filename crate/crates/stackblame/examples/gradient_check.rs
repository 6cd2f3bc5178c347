//! Check the hand-derived gradients against central finite differences:
//! first the CRF negative log-likelihood on its own, then the combined
//! blame + class loss through every tensor of the full network.
//!
//! ```sh
//! cargo run --release --example gradient_check
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackblame::crf::{self, CrfParams};
use stackblame::model::{tags_for_blame, SequenceParams};
use stackblame::nn::{grad_check, SparseRows, Tensor};

const LAMBDA: f64 = 0.5;
const EPS: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn flatten(params: &SequenceParams) -> Vec<f64> {
    params.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
}

fn unflatten(theta: &[f64], into: &mut SequenceParams) {
    let mut k = 0;
    for t in into.tensors_mut() {
        let n = t.len();
        t.data_mut().copy_from_slice(&theta[k..k + n]);
        k += n;
    }
}

fn report(name: &str, err: f64) {
    let verdict = if err <= TOLERANCE { "ok" } else { "FAIL" };
    println!("{:<40} {:>12.3e}   {}", name, err, verdict);
}

fn main() -> stackblame::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let depth = 6;
    let blame = 2;
    let tags = tags_for_blame(depth, blame);

    println!("{:<40} {:>12}   verdict  (eps {EPS:.0e})", "check", "max rel err");

    // CRF alone: gradients of the NLL with respect to emissions and
    // transitions, on random emission scores.
    let crf_params = CrfParams::new();
    let p = {
        let mut t = Tensor::zeros(&[depth, crf::N_TAGS]);
        for v in t.data_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        t
    };
    let (_, d_p, d_trans) = crf::nll(&p, &crf_params, &tags)?;

    let nll_of_emissions = |theta: &[f64]| {
        let p = Tensor::from_vec(&[depth, crf::N_TAGS], theta.to_vec()).unwrap();
        crf::nll(&p, &crf_params, &tags).unwrap().0
    };
    report("crf nll / emissions", grad_check(nll_of_emissions, p.data(), d_p.data(), EPS));

    let nll_of_transitions = |theta: &[f64]| {
        let trans = Tensor::from_vec(&[crf::N_STATES, crf::N_STATES], theta.to_vec()).unwrap();
        crf::nll(&p, &CrfParams { trans }, &tags).unwrap().0
    };
    report(
        "crf nll / transitions",
        grad_check(nll_of_transitions, crf_params.trans.data(), d_trans.data(), EPS),
    );

    // The whole network: BiLSTM, attention, emission head, CRF, class head,
    // differentiated through the combined loss at once. Dropout is off so
    // the loss is a deterministic function of the parameters.
    let input_dim = 10;
    let params = SequenceParams::new(input_dim, 5, Some(3), &mut rng);
    let mut x = SparseRows::new(input_dim);
    for _ in 0..depth {
        let mut row = Vec::new();
        for j in 0..input_dim as u32 {
            if rng.random_bool(0.4) {
                row.push((j, rng.random_range(0.1..2.0)));
            }
        }
        x.push_row(row);
    }

    let loss = |theta: &[f64]| {
        let mut candidate = params.clone();
        unflatten(theta, &mut candidate);
        let mut sink = candidate.zeros_like();
        let (blame_nll, class_ce) =
            candidate.loss_and_grads(&x, &tags, Some(1), LAMBDA, 0.0, 0, &mut sink).unwrap();
        blame_nll + LAMBDA * class_ce
    };

    let mut grads = params.zeros_like();
    params.loss_and_grads(&x, &tags, Some(1), LAMBDA, 0.0, 0, &mut grads)?;
    let theta = flatten(&params);
    println!("  ({} parameters, depth-{} stack)", theta.len(), depth);
    report("combined loss / all parameters", grad_check(loss, &theta, &flatten(&grads), EPS));
    Ok(())
}
