use super::LlmError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// A text-completion backend. Implementations must not touch the day store
/// and must be shareable across concurrent jobs.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError>;

    fn max_context_tokens(&self) -> usize {
        128_000
    }
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        (**self).complete(prompt)
    }

    fn max_context_tokens(&self) -> usize {
        (**self).max_context_tokens()
    }
}

impl<T: LlmClient + ?Sized> LlmClient for std::sync::Arc<T> {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        (**self).complete(prompt)
    }

    fn max_context_tokens(&self) -> usize {
        (**self).max_context_tokens()
    }
}
