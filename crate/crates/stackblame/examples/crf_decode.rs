//! Exercise the linear-chain CRF by hand: score a small lattice, compare the
//! dynamic programs against brute-force enumeration, and show why the
//! one-blame-frame constrained decode exists.
//!
//! ```sh
//! cargo run --release --example crf_decode
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackblame::crf::{self, oracle, CrfParams};
use stackblame::nn::Tensor;

fn tag_string(tags: &[usize]) -> String {
    tags.iter().map(|y| if *y == crf::TAG_BF { 'B' } else { '.' }).collect()
}

fn main() -> stackblame::Result<()> {
    let params = CrfParams::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // Emissions that *like* two different frames: unconstrained Viterbi may
    // happily tag both, but a crash has exactly one blamed frame.
    let mut p = Tensor::zeros(&[6, crf::N_TAGS]);
    for v in p.data_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    p.set2(1, crf::TAG_BF, 2.0);
    p.set2(4, crf::TAG_BF, 2.0);

    let (free, free_score) = crf::viterbi(&p, &params)?;
    let (constrained, c_score) = crf::constrained_decode(&p, &params)?;
    println!("unconstrained viterbi: {}   (score {:.4})", tag_string(&free), free_score);
    println!("constrained decode:    {}   (score {:.4})", tag_string(&constrained), c_score);
    println!(
        "blame index: {}\n",
        crf::blame_index(&constrained).expect("constrained decode emits one blame tag")
    );

    // Both dynamic programs must agree with exhaustive enumeration over all
    // 2^T tag sequences — the correctness oracle used by the tests.
    let (oracle_free, oracle_free_score) = oracle::viterbi(&p, &params);
    let (oracle_con, oracle_con_score) = oracle::constrained(&p, &params);
    assert_eq!(free, oracle_free);
    assert_eq!(constrained, oracle_con);
    println!("oracle agreement over {} sequences:", oracle::all_sequences(6).len());
    println!("  viterbi      {:+.6} vs {:+.6}", free_score, oracle_free_score);
    println!("  constrained  {:+.6} vs {:+.6}", c_score, oracle_con_score);

    let (nll, _, _) = crf::nll(&p, &params, &constrained)?;
    let log_z = oracle::log_partition(&p, &params);
    println!("  log partition {:.6}; constrained-path NLL {:.6}", log_z, nll);
    println!("  (NLL = logZ - path score: {:.6})", log_z - c_score);

    // Marginals from forward-backward match enumeration too; each row sums
    // to one because every sequence tags every frame.
    let marginals = oracle::marginals(&p, &params);
    println!("\nblame marginal per frame:");
    for t in 0..6 {
        let m = marginals.get2(t, crf::TAG_BF);
        println!("  frame {}: {:.4} {}", t, m, "#".repeat((m * 30.0).round() as usize));
    }
    Ok(())
}
