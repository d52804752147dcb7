//! Character n-gram enumeration and the hash that maps n-grams onto
//! parameter rows.

/// FNV-1a, 32-bit. Fixed and published so models stay portable across
/// implementations.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut hash: u32 = 0x811c9dc5;
    for &b in bytes {
        hash ^= u32::from(b);
        hash = hash.wrapping_mul(16777619);
    }
    hash
}

/// Boundary-marked character n-grams of `word`: all substrings of
/// "<word>" with lengths in `min..=max`, in position-major order.
pub fn boundary_ngrams(word: &str, min: usize, max: usize) -> Vec<String> {
    let marked: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let n = marked.len();
    let mut grams = Vec::new();
    for start in 0..n {
        for len in min..=max {
            if start + len > n {
                break;
            }
            grams.push(marked[start..start + len].iter().collect());
        }
    }
    grams
}

/// Parameter-row indices for `word`'s n-grams: each n-gram hashed into
/// `[0, buckets)`. Empty when `buckets` is zero (whole-word-only models).
pub fn ngram_row_indices(word: &str, min: usize, max: usize, buckets: usize) -> Vec<usize> {
    if buckets == 0 {
        return Vec::new();
    }
    boundary_ngrams(word, min, max)
        .iter()
        .map(|g| fnv1a32(g.as_bytes()) as usize % buckets)
        .collect()
}
