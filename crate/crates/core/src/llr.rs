//! LLR-domain check-node primitives.

/// Largest |tanh(x/2)| kept before inverting, which caps check outputs near ±73.
const TANH_LIMIT: f64 = 1.0 - 1e-16 * 16.0;

#[inline]
pub fn half_tanh(x: f64) -> f64 {
    (0.5 * x).tanh()
}

/// Inverse of [`half_tanh`] with saturation instead of infinities.
#[inline]
pub fn from_half_tanh(t: f64) -> f64 {
    2.0 * t.clamp(-TANH_LIMIT, TANH_LIMIT).atanh()
}

/// Exact two-input check combination `2 atanh(tanh(a/2) tanh(b/2))`.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    from_half_tanh(half_tanh(a) * half_tanh(b))
}

/// Exact combination of every input.
pub fn boxplus_all(inputs: impl IntoIterator<Item = f64>) -> f64 {
    from_half_tanh(inputs.into_iter().map(half_tanh).product())
}

/// Offset min-sum combination of every input.
pub fn offset_min_sum(inputs: impl IntoIterator<Item = f64>, offset: f64) -> f64 {
    let mut sign = 1.0;
    let mut mag = f64::INFINITY;
    for x in inputs {
        if x < 0.0 {
            sign = -sign;
        }
        mag = mag.min(x.abs());
    }
    sign * (mag - offset).max(0.0)
}
