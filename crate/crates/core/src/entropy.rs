//! Plug-in Shannon entropy, in bits.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("probabilities sum to zero")]
    ZeroMass,
    #[error("probability {0} is negative or not finite")]
    InvalidProbability(f64),
}

/// `sum p log2(1/p)` after renormalising the input to sum to one.
pub fn entropy_bits(probabilities: &[f64]) -> Result<f64, EntropyError> {
    if let Some(&bad) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(EntropyError::InvalidProbability(bad));
    }
    let total: f64 = probabilities.iter().sum();
    if total <= 0.0 {
        return Err(EntropyError::ZeroMass);
    }
    Ok(probabilities
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| {
            let q = p / total;
            -q * q.log2()
        })
        .sum())
}

/// Entropy of the empirical distribution given by class counts.
pub fn entropy_from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Result<f64, EntropyError> {
    let probs: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
    entropy_bits(&probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(entropy_bits(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy_bits(&[1.0]).unwrap(), 0.0);
        assert_eq!(entropy_bits(&[0.25; 4]).unwrap(), 2.0);
    }

    #[test]
    fn renormalises() {
        let h = entropy_bits(&[0.2, 0.2]).unwrap();
        assert!((h - 1.0).abs() < 1e-15);
        assert_eq!(entropy_from_counts([3, 3, 0, 3, 3]).unwrap(), 2.0);
    }

    #[test]
    fn zero_mass_is_an_error() {
        assert_eq!(entropy_bits(&[0.0, 0.0]), Err(EntropyError::ZeroMass));
        assert_eq!(entropy_bits(&[]), Err(EntropyError::ZeroMass));
        assert!(matches!(entropy_bits(&[-0.1, 1.0]), Err(EntropyError::InvalidProbability(_))));
    }
}
