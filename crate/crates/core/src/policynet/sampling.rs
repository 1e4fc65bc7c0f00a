use ndarray::Array1;
use rand::Rng;

use super::network::MASK_LOGIT;
use super::PolicyError;
use crate::envgen::NodeId;

/// Numerically stable `ln Σ exp(p_i)`.
pub fn logsumexp(p: &Array1<f64>) -> f64 {
    let m = p.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + p.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(p: &Array1<f64>) -> Array1<f64> {
    let lse = logsumexp(p);
    p.mapv(|x| (x - lse).exp())
}

/// `p_node − logsumexp(p)`.
pub fn log_prob(p: &Array1<f64>, node: NodeId) -> f64 {
    p[node] - logsumexp(p)
}

/// Draws a node from `softmax(p)`.
///
/// Masked entries (exactly [`MASK_LOGIT`]) keep their `e^-100` weight in
/// [`log_prob`] but are never returned; their share of the probability
/// mass is far below the resolution of a uniform `f64` draw.
pub fn sample_goal<R: Rng + ?Sized>(p: &Array1<f64>, rng: &mut R) -> Result<NodeId, PolicyError> {
    let open: Vec<NodeId> = (0..p.len()).filter(|&i| p[i] != MASK_LOGIT).collect();
    if open.is_empty() {
        return Err(PolicyError::AllMasked);
    }
    let m = open.iter().map(|&i| p[i]).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = open.iter().map(|&i| (p[i] - m).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (&i, w) in open.iter().zip(&weights) {
        if u < *w {
            return Ok(i);
        }
        u -= w;
    }
    Ok(*open.last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn uniform_logits_give_log_one_over_k() {
        let p = Array1::from(vec![0.7, 0.7, MASK_LOGIT, 0.7, 0.7]);
        for i in [0, 1, 3, 4] {
            assert!((log_prob(&p, i) + 4f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_logit_always_wins() {
        let mut p = Array1::from_elem(10, MASK_LOGIT);
        p[6] = 50.0;
        let mut rng = rng_from_seed(3);
        let hits = (0..10_000).filter(|_| sample_goal(&p, &mut rng).unwrap() == 6).count();
        assert!(hits as f64 / 10_000.0 > 0.999999);
    }

    #[test]
    fn all_masked_is_an_error() {
        let p = Array1::from_elem(4, MASK_LOGIT);
        assert_eq!(sample_goal(&p, &mut rng_from_seed(0)), Err(PolicyError::AllMasked));
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let p = Array1::from(vec![1000.0, 999.0, MASK_LOGIT]);
        let lse = logsumexp(&p);
        assert!(lse.is_finite());
        assert!((softmax(&p).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_frequencies_match_softmax() {
        // Monte-Carlo against the exact softmax, 3 standard errors.
        let p = Array1::from(vec![0.3, -1.0, 2.0, 0.0, 1.1, -0.4, 0.9, -2.5]);
        let probs = softmax(&p);
        let n = 100_000;
        let mut counts = [0usize; 8];
        let mut rng = rng_from_seed(12);
        for _ in 0..n {
            counts[sample_goal(&p, &mut rng).unwrap()] += 1;
        }
        for i in 0..8 {
            let f = counts[i] as f64 / n as f64;
            let se = (probs[i] * (1.0 - probs[i]) / n as f64).sqrt();
            assert!((f - probs[i]).abs() <= 3.0 * se, "node {i}: {f} vs {}", probs[i]);
        }
    }
}
