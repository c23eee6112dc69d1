use std::collections::BTreeMap;

use super::EvalError;

/// Lowercased runs of alphanumerics. No stemming, no stop words.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Pairwise cosine similarity of TF-IDF vectors (raw term counts times
/// `ln((1 + N) / (1 + df)) + 1`). The diagonal is exactly 1.
pub fn tfidf_cosine_matrix<S: AsRef<str>>(texts: &[S]) -> Result<Vec<Vec<f64>>, EvalError> {
    if texts.len() < 2 {
        return Err(EvalError::TooFew {
            needed: 2,
            got: texts.len(),
        });
    }
    let n = texts.len() as f64;
    let counts: Vec<BTreeMap<String, f64>> = texts
        .iter()
        .map(|t| {
            let mut m = BTreeMap::new();
            for w in tokenize(t.as_ref()) {
                *m.entry(w).or_insert(0.0) += 1.0;
            }
            m
        })
        .collect();
    if let Some(i) = counts.iter().position(BTreeMap::is_empty) {
        return Err(EvalError::DegenerateCorpus(i));
    }
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for c in &counts {
        for term in c.keys() {
            *df.entry(term.as_str()).or_insert(0.0) += 1.0;
        }
    }
    let vectors: Vec<BTreeMap<&str, f64>> = counts
        .iter()
        .map(|c| {
            c.iter()
                .map(|(term, tf)| (term.as_str(), tf * (((1.0 + n) / (1.0 + df[term.as_str()])).ln() + 1.0)))
                .collect()
        })
        .collect();
    let norms: Vec<f64> = vectors.iter().map(|v| v.values().map(|x| x * x).sum()).collect();

    let k = texts.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let dot: f64 = vectors[i]
                .iter()
                .filter_map(|(t, x)| vectors[j].get(t).map(|y| x * y))
                .sum();
            let c = (dot / (norms[i] * norms[j]).sqrt()).clamp(0.0, 1.0);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    Ok(m)
}
