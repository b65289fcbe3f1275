use rand::Rng;

use crate::error::{Error, Result};

/// Token dropout: each token is removed independently with probability
/// `drop_prob`. If every token would be removed, one uniformly chosen token is
/// kept.
pub fn augment<R: Rng + ?Sized>(doc: &[String], rng: &mut R, drop_prob: f64) -> Result<Vec<String>> {
    if doc.is_empty() {
        return Err(Error::Empty("document"));
    }
    if !(0.0..1.0).contains(&drop_prob) {
        return Err(Error::invalid(format!("drop probability {drop_prob} not in [0, 1)")));
    }
    if drop_prob == 0.0 {
        return Ok(doc.to_vec());
    }
    let kept: Vec<String> = doc.iter().filter(|_| !rng.random_bool(drop_prob)).cloned().collect();
    if kept.is_empty() {
        return Ok(vec![doc[rng.random_range(0..doc.len())].clone()]);
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn doc(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn zero_drop_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(augment(&doc(10), &mut rng, 0.0).unwrap(), doc(10));
    }

    #[test]
    fn fixed_seed_golden() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let out = augment(&doc(10), &mut rng, 0.3).unwrap();
        let mut again = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(out, augment(&doc(10), &mut again, 0.3).unwrap());
        assert_eq!(out, GOLDEN_SEED42);
    }

    const GOLDEN_SEED42: [&str; 7] = ["t0", "t1", "t2", "t3", "t6", "t7", "t8"];

    #[test]
    fn single_token_retained() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [0.0, 0.5, 0.99] {
            assert_eq!(augment(&doc(1), &mut rng, p).unwrap(), doc(1));
        }
    }

    #[test]
    fn errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(augment(&[], &mut rng, 0.3).is_err());
        assert!(augment(&doc(3), &mut rng, 1.0).is_err());
    }
}
