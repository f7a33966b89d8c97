//! Constants shared by the algorithm layers. Logarithms are base 2 and
//! clamped below at 1, so `log₂ n` never vanishes for tiny `n`.

/// Largest accuracy the static and decremental solvers accept. Above it the
/// `1 − 40ε` witness threshold would cross zero.
pub const MAX_EPS: f64 = 0.24;

/// Witness slack on the `1 − 40ε` recertification test.
pub const THRESHOLD_SLACK: f64 = 1e-12;

pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `max(log₂ n, 1)`.
pub fn log2_n(n: usize) -> f64 {
    libm::log2(n as f64).max(1.0)
}

pub fn ceil_usize(x: f64) -> usize {
    let c = libm::ceil(x);
    if c < 1.0 {
        1
    } else {
        c as usize
    }
}
