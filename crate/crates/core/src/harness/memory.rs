//! Working-memory accounting in `f64` slots.

use crate::optimizer::Algorithm;

/// Slots needed by one optimizer instance.
///
/// LM-CMA stores `m` pairs `(p, v)`, `λ` candidates and a handful of
/// `n`-vectors plus five scalars per pair: `(2m + λ + 6)·n + 5m`.
/// The dense baseline holds `A` and `A⁻¹`: `2n² + λn + 3n`; `m` is ignored.
pub fn memory_slots(algorithm: Algorithm, n: u64, m: u64, lambda: u64) -> u64 {
    match algorithm {
        Algorithm::Lmcma => (2 * m + lambda + 6) * n + 5 * m,
        Algorithm::Cholcma => 2 * n * n + lambda * n + 3 * n,
    }
}
