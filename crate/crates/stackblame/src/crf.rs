//! Linear-chain CRF over the two frame tags BF (blamed) and !BF, with BOS
//! and EOS sentinels.
//!
//! The transition table is 4×4 over {BF, !BF, BOS, EOS}. Transitions into
//! BOS and out of EOS are structurally impossible; they are pinned at
//! [`NEG_INF`] and never receive gradient. A tag sequence `y` for emissions
//! `P` (T×2) scores
//!
//! ```text
//! s(y) = A[BOS, y0] + sum_t P[t, y_t] + sum_t A[y_t, y_{t+1}] + A[y_{T-1}, EOS]
//! ```
//!
//! Partition, marginals, and the NLL gradient run in log space via the
//! forward-backward recursions; decoding offers plain Viterbi and a
//! constrained variant that emits exactly one BF tag. The [`oracle`]
//! submodule holds brute-force enumerations of every quantity for testing.

use crate::error::{shape as shape_err, Result};
use crate::nn::tensor::{logsumexp, Tensor};

/// Tag index of the blamed frame.
pub const TAG_BF: usize = 0;
/// Tag index of a non-blamed frame.
pub const TAG_NOT_BF: usize = 1;
/// Number of real tags.
pub const N_TAGS: usize = 2;
/// Begin-of-sequence sentinel state.
pub const BOS: usize = 2;
/// End-of-sequence sentinel state.
pub const EOS: usize = 3;
/// Total states in the transition table.
pub const N_STATES: usize = 4;

/// Finite stand-in for -inf: small enough to never win a max or contribute
/// to a logsumexp, large enough that sums over 255 steps stay finite.
pub const NEG_INF: f64 = -1e30;

/// CRF parameters: the 4×4 transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    pub trans: Tensor,
}

impl CrfParams {
    /// Zero-initialized learnable entries, impossible entries at `NEG_INF`.
    pub fn new() -> CrfParams {
        let mut trans = Tensor::zeros(&[N_STATES, N_STATES]);
        for s in 0..N_STATES {
            trans.set2(s, BOS, NEG_INF); // nothing enters BOS
            trans.set2(EOS, s, NEG_INF); // nothing leaves EOS
        }
        CrfParams { trans }
    }
}

impl Default for CrfParams {
    fn default() -> Self {
        Self::new()
    }
}

fn check_emissions(p: &Tensor) -> Result<usize> {
    if p.rank() != 2 || p.cols() != N_TAGS || p.rows() == 0 {
        return Err(shape_err(format!(
            "emission matrix must be (T >= 1) x {N_TAGS}, got {:?}",
            p.shape()
        )));
    }
    Ok(p.rows())
}

fn check_tags(tags: &[usize], t_len: usize) -> Result<()> {
    if tags.len() != t_len {
        return Err(shape_err(format!(
            "tag sequence length {} does not match T = {t_len}",
            tags.len()
        )));
    }
    if let Some(bad) = tags.iter().find(|y| **y >= N_TAGS) {
        return Err(shape_err(format!("tag {bad} out of range 0..{N_TAGS}")));
    }
    Ok(())
}

/// Unnormalized score of one tag sequence.
pub fn score(p: &Tensor, params: &CrfParams, tags: &[usize]) -> Result<f64> {
    let t_len = check_emissions(p)?;
    check_tags(tags, t_len)?;
    let a = &params.trans;
    let mut s = a.get2(BOS, tags[0]) + p.get2(0, tags[0]);
    for t in 1..t_len {
        s += a.get2(tags[t - 1], tags[t]) + p.get2(t, tags[t]);
    }
    Ok(s + a.get2(tags[t_len - 1], EOS))
}

fn forward_lattice(p: &Tensor, a: &Tensor) -> Vec<[f64; N_TAGS]> {
    let t_len = p.rows();
    let mut fwd = vec![[0.0; N_TAGS]; t_len];
    for y in 0..N_TAGS {
        fwd[0][y] = a.get2(BOS, y) + p.get2(0, y);
    }
    for t in 1..t_len {
        for y2 in 0..N_TAGS {
            let terms: Vec<f64> =
                (0..N_TAGS).map(|y1| fwd[t - 1][y1] + a.get2(y1, y2)).collect();
            fwd[t][y2] = logsumexp(&terms) + p.get2(t, y2);
        }
    }
    fwd
}

fn backward_lattice(p: &Tensor, a: &Tensor) -> Vec<[f64; N_TAGS]> {
    let t_len = p.rows();
    let mut bwd = vec![[0.0; N_TAGS]; t_len];
    for y in 0..N_TAGS {
        bwd[t_len - 1][y] = a.get2(y, EOS);
    }
    for t in (0..t_len - 1).rev() {
        for y1 in 0..N_TAGS {
            let terms: Vec<f64> = (0..N_TAGS)
                .map(|y2| a.get2(y1, y2) + p.get2(t + 1, y2) + bwd[t + 1][y2])
                .collect();
            bwd[t][y1] = logsumexp(&terms);
        }
    }
    bwd
}

/// Log of the partition function (logsumexp over all 2^T tag sequences).
pub fn log_partition(p: &Tensor, params: &CrfParams) -> Result<f64> {
    let t_len = check_emissions(p)?;
    let fwd = forward_lattice(p, &params.trans);
    let finals: Vec<f64> =
        (0..N_TAGS).map(|y| fwd[t_len - 1][y] + params.trans.get2(y, EOS)).collect();
    Ok(logsumexp(&finals))
}

/// Posterior tag marginals per position.
#[derive(Debug, Clone)]
pub struct Marginals {
    /// (T × 2): `node.get2(t, y)` is P(y_t = y | X).
    pub node: Tensor,
    pub log_z: f64,
}

/// Forward-backward node marginals.
pub fn marginals(p: &Tensor, params: &CrfParams) -> Result<Marginals> {
    let t_len = check_emissions(p)?;
    let a = &params.trans;
    let fwd = forward_lattice(p, a);
    let bwd = backward_lattice(p, a);
    let log_z = logsumexp(&(0..N_TAGS).map(|y| fwd[t_len - 1][y] + a.get2(y, EOS)).collect::<Vec<_>>());
    let mut node = Tensor::zeros(&[t_len, N_TAGS]);
    for t in 0..t_len {
        for y in 0..N_TAGS {
            node.set2(t, y, (fwd[t][y] + bwd[t][y] - log_z).exp());
        }
    }
    Ok(Marginals { node, log_z })
}

/// Negative log-likelihood of `tags` plus exact gradients: the emission
/// gradient is `marginal - indicator` per position, and the transition
/// gradient is expected minus observed transition counts. Impossible
/// transitions always get zero gradient.
pub fn nll(p: &Tensor, params: &CrfParams, tags: &[usize]) -> Result<(f64, Tensor, Tensor)> {
    let t_len = check_emissions(p)?;
    check_tags(tags, t_len)?;
    let a = &params.trans;
    let fwd = forward_lattice(p, a);
    let bwd = backward_lattice(p, a);
    let log_z = logsumexp(&(0..N_TAGS).map(|y| fwd[t_len - 1][y] + a.get2(y, EOS)).collect::<Vec<_>>());
    let loss = log_z - score(p, params, tags)?;

    let mut d_p = Tensor::zeros(&[t_len, N_TAGS]);
    for t in 0..t_len {
        for y in 0..N_TAGS {
            let marginal = (fwd[t][y] + bwd[t][y] - log_z).exp();
            let observed = (tags[t] == y) as u8 as f64;
            d_p.set2(t, y, marginal - observed);
        }
    }

    let mut d_a = Tensor::zeros(&[N_STATES, N_STATES]);
    // BOS -> y0 and y_{T-1} -> EOS: the boundary marginals are the node
    // marginals at the ends.
    for y in 0..N_TAGS {
        let first = (fwd[0][y] + bwd[0][y] - log_z).exp();
        d_a.set2(BOS, y, first - (tags[0] == y) as u8 as f64);
        let last = (fwd[t_len - 1][y] + bwd[t_len - 1][y] - log_z).exp();
        d_a.set2(y, EOS, last - (tags[t_len - 1] == y) as u8 as f64);
    }
    // Interior edges: expected pair counts minus observed.
    for t in 0..t_len - 1 {
        for y1 in 0..N_TAGS {
            for y2 in 0..N_TAGS {
                let expected =
                    (fwd[t][y1] + a.get2(y1, y2) + p.get2(t + 1, y2) + bwd[t + 1][y2] - log_z)
                        .exp();
                let observed = (tags[t] == y1 && tags[t + 1] == y2) as u8 as f64;
                let cur = d_a.get2(y1, y2);
                d_a.set2(y1, y2, cur + expected - observed);
            }
        }
    }
    Ok((loss, d_p, d_a))
}

/// True when path `a` is preferred over `b` under the deterministic
/// tie-break: walking to the first differing position, BF wins if no BF
/// appeared in the common prefix, otherwise !BF wins. Equivalently, ties
/// resolve to the earliest first-BF position and the sparsest tail.
pub fn prefer_path(a: &[usize], b: &[usize]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut seen_bf = false;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return if seen_bf { *x == TAG_NOT_BF } else { *x == TAG_BF };
        }
        seen_bf |= *x == TAG_BF;
    }
    false
}

#[derive(Clone)]
struct Cell {
    score: f64,
    path: Vec<usize>,
}

fn better(candidate_score: f64, candidate_path: &[usize], incumbent: &Option<Cell>) -> bool {
    match incumbent {
        None => true,
        Some(cell) => {
            candidate_score > cell.score
                || (candidate_score == cell.score && prefer_path(candidate_path, &cell.path))
        }
    }
}

/// Highest-scoring tag sequence and its score. Exact ties resolve by
/// [`prefer_path`]; an all-zero instance decodes to `[BF, !BF, !BF, ...]`.
pub fn viterbi(p: &Tensor, params: &CrfParams) -> Result<(Vec<usize>, f64)> {
    let t_len = check_emissions(p)?;
    let a = &params.trans;

    let mut cells: Vec<Option<Cell>> = (0..N_TAGS)
        .map(|y| Some(Cell { score: a.get2(BOS, y) + p.get2(0, y), path: vec![y] }))
        .collect();
    for t in 1..t_len {
        let mut next: Vec<Option<Cell>> = vec![None; N_TAGS];
        for y2 in 0..N_TAGS {
            for cell in cells.iter().flatten() {
                let y1 = *cell.path.last().expect("paths are non-empty");
                let s = cell.score + a.get2(y1, y2) + p.get2(t, y2);
                let mut path = cell.path.clone();
                path.push(y2);
                if better(s, &path, &next[y2]) {
                    next[y2] = Some(Cell { score: s, path });
                }
            }
        }
        cells = next;
    }

    let mut best: Option<Cell> = None;
    for cell in cells.into_iter().flatten() {
        let y = *cell.path.last().expect("paths are non-empty");
        let s = cell.score + a.get2(y, EOS);
        if better(s, &cell.path, &best) {
            best = Some(Cell { score: s, path: cell.path });
        }
    }
    let best = best.expect("at least one tag path exists");
    Ok((best.path, best.score))
}

/// Best tag sequence containing exactly one BF tag. The lattice tracks a
/// used-BF bit per state so the constraint is exact, not a rescoring hack.
pub fn constrained_decode(p: &Tensor, params: &CrfParams) -> Result<(Vec<usize>, f64)> {
    let t_len = check_emissions(p)?;
    let a = &params.trans;

    // cells[y][used]: best path ending in tag y having consumed `used` BF tags.
    let mut cells: Vec<Vec<Option<Cell>>> = vec![vec![None, None]; N_TAGS];
    cells[TAG_BF][1] =
        Some(Cell { score: a.get2(BOS, TAG_BF) + p.get2(0, TAG_BF), path: vec![TAG_BF] });
    cells[TAG_NOT_BF][0] =
        Some(Cell { score: a.get2(BOS, TAG_NOT_BF) + p.get2(0, TAG_NOT_BF), path: vec![TAG_NOT_BF] });

    for t in 1..t_len {
        let mut next: Vec<Vec<Option<Cell>>> = vec![vec![None, None]; N_TAGS];
        for y2 in 0..N_TAGS {
            for used in 0..2 {
                // Entering BF consumes the budget; !BF carries it unchanged.
                let prev_used = if y2 == TAG_BF {
                    if used == 0 {
                        continue;
                    }
                    0
                } else {
                    used
                };
                for y1 in 0..N_TAGS {
                    if let Some(cell) = &cells[y1][prev_used] {
                        let s = cell.score + a.get2(y1, y2) + p.get2(t, y2);
                        let mut path = cell.path.clone();
                        path.push(y2);
                        if better(s, &path, &next[y2][used]) {
                            next[y2][used] = Some(Cell { score: s, path });
                        }
                    }
                }
            }
        }
        cells = next;
    }

    let mut best: Option<Cell> = None;
    for y in 0..N_TAGS {
        if let Some(cell) = &cells[y][1] {
            let s = cell.score + a.get2(y, EOS);
            if better(s, &cell.path, &best) {
                best = Some(Cell { score: s, path: cell.path.clone() });
            }
        }
    }
    let best = best.expect("a single-BF path always exists for T >= 1");
    Ok((best.path, best.score))
}

/// Index of the single BF tag in a constrained decode.
pub fn blame_index(tags: &[usize]) -> Option<usize> {
    tags.iter().position(|y| *y == TAG_BF)
}

/// Brute-force reference implementations. Everything here enumerates all
/// 2^T tag sequences, so keep T small; tests compare the fast lattice code
/// against these.
pub mod oracle {
    use super::*;

    /// All tag sequences of length `t_len` in counting order.
    pub fn all_sequences(t_len: usize) -> Vec<Vec<usize>> {
        assert!(t_len <= 20, "oracle enumeration is exponential");
        (0..(1usize << t_len))
            .map(|mask| (0..t_len).map(|t| (mask >> t) & 1).collect())
            .collect()
    }

    pub fn log_partition(p: &Tensor, params: &CrfParams) -> f64 {
        let scores: Vec<f64> = all_sequences(p.rows())
            .iter()
            .map(|y| score(p, params, y).expect("oracle sequences are valid"))
            .collect();
        logsumexp(&scores)
    }

    pub fn marginals(p: &Tensor, params: &CrfParams) -> Tensor {
        let t_len = p.rows();
        let log_z = log_partition(p, params);
        let mut node = Tensor::zeros(&[t_len, N_TAGS]);
        for y in all_sequences(t_len) {
            let w = (score(p, params, &y).expect("valid") - log_z).exp();
            for (t, tag) in y.iter().enumerate() {
                let cur = node.get2(t, *tag);
                node.set2(t, *tag, cur + w);
            }
        }
        node
    }

    /// Argmax with the same tie-break as [`super::viterbi`].
    pub fn viterbi(p: &Tensor, params: &CrfParams) -> (Vec<usize>, f64) {
        best_of(p, params, all_sequences(p.rows()))
    }

    /// Argmax over sequences with exactly one BF tag.
    pub fn constrained(p: &Tensor, params: &CrfParams) -> (Vec<usize>, f64) {
        let seqs = all_sequences(p.rows())
            .into_iter()
            .filter(|y| y.iter().filter(|t| **t == TAG_BF).count() == 1)
            .collect();
        best_of(p, params, seqs)
    }

    fn best_of(p: &Tensor, params: &CrfParams, seqs: Vec<Vec<usize>>) -> (Vec<usize>, f64) {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for y in seqs {
            let s = score(p, params, &y).expect("valid");
            let wins = match &best {
                None => true,
                Some((by, bs)) => s > *bs || (s == *bs && prefer_path(&y, by)),
            };
            if wins {
                best = Some((y, s));
            }
        }
        best.expect("non-empty sequence set")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random instance with integer-valued scores so exact ties occur.
    fn random_instance(rng: &mut ChaCha8Rng, t_len: usize) -> (Tensor, CrfParams) {
        let mut p = Tensor::zeros(&[t_len, N_TAGS]);
        for v in p.data_mut() {
            *v = rng.random_range(-2..=2) as f64;
        }
        let mut params = CrfParams::new();
        for y1 in 0..N_TAGS {
            for y2 in 0..N_TAGS {
                params.trans.set2(y1, y2, rng.random_range(-1..=1) as f64 * 0.5);
            }
        }
        for y in 0..N_TAGS {
            params.trans.set2(BOS, y, rng.random_range(-1..=1) as f64 * 0.5);
            params.trans.set2(y, EOS, rng.random_range(-1..=1) as f64 * 0.5);
        }
        (p, params)
    }

    #[test]
    fn single_frame_partition_by_hand() {
        let p = Tensor::from_vec(&[1, 2], vec![2.0, 1.0]).unwrap();
        let params = CrfParams::new();
        let z = log_partition(&p, &params).unwrap();
        assert!((z - (2f64.exp() + 1f64.exp()).ln()).abs() < 1e-12);
        let (tags, s) = viterbi(&p, &params).unwrap();
        assert_eq!(tags, vec![TAG_BF]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn lattice_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..40 {
            let t_len = rng.random_range(1..=5);
            let (p, params) = random_instance(&mut rng, t_len);

            let z = log_partition(&p, &params).unwrap();
            let z_oracle = oracle::log_partition(&p, &params);
            assert!((z - z_oracle).abs() < 1e-9, "case {case}: {z} vs {z_oracle}");

            let m = marginals(&p, &params).unwrap();
            let m_oracle = oracle::marginals(&p, &params);
            for (a, b) in m.node.data().iter().zip(m_oracle.data()) {
                assert!((a - b).abs() < 1e-9, "case {case}");
            }

            let (path, s) = viterbi(&p, &params).unwrap();
            let (path_o, s_o) = oracle::viterbi(&p, &params);
            assert!((s - s_o).abs() < 1e-9, "case {case}");
            assert_eq!(path, path_o, "case {case}");

            let (cpath, cs) = constrained_decode(&p, &params).unwrap();
            let (cpath_o, cs_o) = oracle::constrained(&p, &params);
            assert!((cs - cs_o).abs() < 1e-9, "case {case}");
            assert_eq!(cpath, cpath_o, "case {case}");
        }
    }

    #[test]
    fn all_zero_instance_breaks_ties_deterministically() {
        let p = Tensor::zeros(&[4, 2]);
        let params = CrfParams::new();
        let (path, _) = viterbi(&p, &params).unwrap();
        assert_eq!(path, vec![TAG_BF, TAG_NOT_BF, TAG_NOT_BF, TAG_NOT_BF]);
        let (cpath, _) = constrained_decode(&p, &params).unwrap();
        assert_eq!(cpath, vec![TAG_BF, TAG_NOT_BF, TAG_NOT_BF, TAG_NOT_BF]);
    }

    #[test]
    fn marginals_sum_to_one_per_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p, params) = random_instance(&mut rng, 6);
        let m = marginals(&p, &params).unwrap();
        for t in 0..6 {
            let total = m.node.get2(t, 0) + m.node.get2(t, 1);
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nll_emission_gradient_equals_marginal_minus_indicator() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (p, params) = random_instance(&mut rng, 5);
        let tags = vec![1, 0, 1, 1, 0];
        let (loss, d_p, _) = nll(&p, &params, &tags).unwrap();
        assert!(loss >= 0.0);
        let m = marginals(&p, &params).unwrap();
        for t in 0..5 {
            for y in 0..N_TAGS {
                let expected = m.node.get2(t, y) - (tags[t] == y) as u8 as f64;
                assert!((d_p.get2(t, y) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nll_gradients_agree_with_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (p, params) = random_instance(&mut rng, 4);
        let tags = vec![1, 0, 1, 1];

        let (_, d_p, d_a) = nll(&p, &params, &tags).unwrap();

        // Emissions.
        let f_p = |theta: &[f64]| {
            let pt = Tensor::from_vec(&[4, 2], theta.to_vec()).unwrap();
            nll(&pt, &params, &tags).unwrap().0
        };
        let err = crate::nn::grad_check(f_p, p.data(), d_p.data(), 1e-5);
        assert!(err < 1e-6, "emission gradient error {err}");

        // Transitions: perturb learnable entries only.
        let f_a = |theta: &[f64]| {
            let mut pa = CrfParams::new();
            pa.trans.data_mut().copy_from_slice(theta);
            for s in 0..N_STATES {
                pa.trans.set2(s, BOS, NEG_INF);
                pa.trans.set2(EOS, s, NEG_INF);
            }
            nll(&p, &pa, &tags).unwrap().0
        };
        let err = crate::nn::grad_check(f_a, params.trans.data(), d_a.data(), 1e-5);
        assert!(err < 1e-6, "transition gradient error {err}");

        // Impossible transitions never receive gradient.
        for s in 0..N_STATES {
            assert_eq!(d_a.get2(s, BOS), 0.0);
            assert_eq!(d_a.get2(EOS, s), 0.0);
        }
    }

    #[test]
    fn constrained_decode_always_emits_one_bf() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let t_len = rng.random_range(1..=7);
            let mut p = Tensor::zeros(&[t_len, N_TAGS]);
            for v in p.data_mut() {
                *v = rng.random_range(-3.0..3.0);
            }
            // Strongly favor !BF everywhere so the constraint has to fight.
            for t in 0..t_len {
                p.set2(t, TAG_NOT_BF, p.get2(t, TAG_NOT_BF) + 10.0);
            }
            let params = CrfParams::new();
            let (tags, _) = constrained_decode(&p, &params).unwrap();
            assert_eq!(tags.iter().filter(|y| **y == TAG_BF).count(), 1);
            assert!(blame_index(&tags).is_some());
        }
    }

    #[test]
    fn shape_errors_are_reported() {
        let params = CrfParams::new();
        let p = Tensor::zeros(&[3, 2]);
        assert!(score(&p, &params, &[0, 1]).is_err());
        assert!(score(&p, &params, &[0, 1, 2]).is_err());
        let bad = Tensor::zeros(&[3, 3]);
        assert!(log_partition(&bad, &params).is_err());
    }

    #[test]
    fn long_sequences_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut p = Tensor::zeros(&[255, N_TAGS]);
        for v in p.data_mut() {
            *v = rng.random_range(-5.0..5.0);
        }
        let params = CrfParams::new();
        let z = log_partition(&p, &params).unwrap();
        assert!(z.is_finite());
        let (tags, s) = constrained_decode(&p, &params).unwrap();
        assert!(s.is_finite());
        assert_eq!(tags.len(), 255);
    }
}
