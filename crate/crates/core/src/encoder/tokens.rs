/// Token budget estimate for a piece of text.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// `ceil(chars / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharsPerToken(pub usize);

impl Default for CharsPerToken {
    fn default() -> Self {
        Self(4)
    }
}

impl TokenEstimator for CharsPerToken {
    fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(self.0.max(1))
    }
}

/// Estimate with the default four-characters-per-token heuristic.
pub fn estimate_tokens(text: &str) -> usize {
    CharsPerToken::default().estimate(text)
}
