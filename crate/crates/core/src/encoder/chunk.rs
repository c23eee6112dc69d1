use super::{Narrative, TokenEstimator};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChunkError {
    #[error("segment {index} needs {tokens} tokens, over the {limit}-token limit")]
    SegmentTooLarge { index: usize, tokens: usize, limit: usize },
}

/// Greedily pack whole segments into chunks of at most `limit_tokens`,
/// preserving order.
pub fn chunk(
    narrative: &Narrative,
    limit_tokens: usize,
    estimator: &dyn TokenEstimator,
) -> Result<Vec<Narrative>, ChunkError> {
    let mut chunks = Vec::new();
    let mut current = Vec::new();
    let mut used = 0;
    for (index, seg) in narrative.segments.iter().enumerate() {
        let tokens = estimator.estimate(&seg.text);
        if tokens > limit_tokens {
            return Err(ChunkError::SegmentTooLarge {
                index,
                tokens,
                limit: limit_tokens,
            });
        }
        if used + tokens > limit_tokens && !current.is_empty() {
            chunks.push(Narrative::from_ordered(std::mem::take(&mut current)));
            used = 0;
        }
        used += tokens;
        current.push(seg.clone());
    }
    if !current.is_empty() || chunks.is_empty() {
        chunks.push(Narrative::from_ordered(current));
    }
    Ok(chunks)
}
