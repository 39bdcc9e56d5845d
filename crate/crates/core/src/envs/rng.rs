/// SplitMix64 (Steele, Lea & Flood), with the reference constants.
///
/// Every draw used by the environments and agent shuffles goes through the
/// three primitives below, so a seed reproduces the same games and orders in
/// any implementation that follows them:
///
/// * `next_u64`: `state += 0x9E3779B97F4A7C15`, then the xor-shift/multiply
///   finalizer with `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`.
/// * `below(n)`: `(next_u64 as u128 * n) >> 64`.
/// * `next_f64`: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates, swapping from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
