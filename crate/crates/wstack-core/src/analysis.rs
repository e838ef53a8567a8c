//! Exact and asymptotic security/capacity mathematics.
//!
//! The oracle's second-preimage work factor is the number of reachable
//! index multisets, `G = C(w + kappa - 1, kappa)`. Security bit counts
//! are taken as exact big-integer binomials followed by a fixed-point
//! binary logarithm, because the interesting parameter boundaries sit
//! within a fraction of a bit of the usual Stirling-form estimate.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigUint;

/// Bits one oracle hash can supply; bounds `kappa * log2(w)`.
pub const ORACLE_BIT_BUDGET: u64 = 512;

/// A binary logarithm with 64 fractional bits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Log2 {
    int: u64,
    frac: u64,
}

impl Log2 {
    pub fn integer_part(&self) -> u64 {
        self.int
    }

    /// Fractional part scaled by 2^64.
    pub fn frac_bits(&self) -> u64 {
        self.frac
    }

    pub fn to_f64(&self) -> f64 {
        self.int as f64 + self.frac as f64 / 18446744073709551616.0
    }

    pub fn cmp_bits(&self, whole_bits: u64) -> Ordering {
        (self.int, self.frac).cmp(&(whole_bits, 0))
    }
}

/// Binary logarithm of a positive big integer, exact to well over 50
/// fractional bits.
///
/// Normalizes `n` to a fixed-point mantissa in `[1, 2)` and extracts 64
/// fraction bits by repeated squaring with 192 working bits, so the
/// accumulated truncation error stays below 2^-120.
pub fn log2_biguint(n: &BigUint) -> Log2 {
    const WORK_BITS: u64 = 192;
    let bits = n.bits();
    assert!(bits > 0, "log2 of zero");
    let int = bits - 1;
    // mantissa = n * 2^WORK_BITS / 2^int, in [2^WORK_BITS, 2^(WORK_BITS+1))
    let mut m = n << WORK_BITS >> int;
    let one = BigUint::from(1u8) << WORK_BITS;
    let two = &one << 1u8;
    let mut frac = 0u64;
    for _ in 0..64 {
        m = (&m * &m) >> WORK_BITS;
        frac <<= 1;
        if m >= two {
            frac |= 1;
            m >>= 1u8;
        }
    }
    Log2 { int, frac }
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u8);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u8);
    for i in 0..k {
        // Every prefix product here is itself a binomial, so the division
        // is exact.
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of cardinality-`kappa` multisets over `[0, w)`.
pub fn multiset_count(w: u64, kappa: u64) -> BigUint {
    binomial(w + kappa - 1, kappa)
}

/// Exact oracle security: `log2 C(w + kappa - 1, kappa)`.
pub fn exact_security_bits(w: u64, kappa: u64) -> Log2 {
    assert!(w >= 1 && kappa >= 1);
    log2_biguint(&multiset_count(w, kappa))
}

/// Stirling-form estimate `kappa*log2(w*e/kappa) - log2(2*pi*kappa)/2`.
/// A lower estimate, accurate to about a percent while `kappa^2` stays
/// small against `w`.
pub fn approx_security_bits(w: u64, kappa: u64) -> f64 {
    let (w, kappa) = (w as f64, kappa as f64);
    kappa * libm::log2(w * core::f64::consts::E / kappa)
        - 0.5 * libm::log2(2.0 * core::f64::consts::PI * kappa)
}

/// Collision ("birthday") parameter `kappa^2 / w`.
pub fn gamma(w: u64, kappa: u64) -> f64 {
    (kappa as f64) * (kappa as f64) / (w as f64)
}

/// Entropy of the chunked-hash oracle: the exact multiset count corrected
/// for the uneven weight of colliding index tuples, to first order in
/// gamma.
pub fn hors_entropy_bits(w: u64, kappa: u64) -> f64 {
    let correction = (core::f64::consts::LOG2_E - 1.0) / 2.0 * gamma(w, kappa);
    exact_security_bits(w, kappa).to_f64() - correction
}

/// Signing capacity of a `(w, N)` fabric at oracle cardinality `kappa`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Capacity {
    /// Mass bound `floor(w*N/kappa)`: no stack can ever be deeper.
    pub d_max: u64,
    /// Depth with six standard deviations of per-chain headroom.
    pub d_safe: u64,
}

pub fn capacity(w: u64, n: u64, kappa: u64) -> Capacity {
    assert!(w >= 1 && n >= 1 && kappa >= 1);
    let d_max = w * n / kappa;
    let slack = n as f64 - 6.0 * libm::sqrt(n as f64);
    let d_safe = if slack <= 0.0 {
        0
    } else {
        libm::floor(w as f64 * slack / kappa as f64) as u64
    };
    Capacity { d_max, d_safe }
}

/// Smallest `kappa` that reaches `target_bits` of exact security at width
/// `w` without overrunning the 512-bit oracle budget. `None` when the
/// width cannot reach the target. `w` must be a power of two.
pub fn min_kappa_for_security(w: u64, target_bits: u64) -> Option<u64> {
    assert!(w >= 2 && w.is_power_of_two(), "width must be a power of two");
    assert!(target_bits > 0);
    let bits_per_index = w.trailing_zeros() as u64;
    let mut kappa = 1u64;
    while kappa * bits_per_index <= ORACLE_BIT_BUDGET {
        if exact_security_bits(w, kappa).cmp_bits(target_bits) != Ordering::Less {
            return Some(kappa);
        }
        kappa += 1;
    }
    None
}

/// One row of the parameter table.
#[derive(Clone, Copy, Debug)]
pub struct SecurityReport {
    pub w: u64,
    pub kappa: u64,
    pub exact_bits: Log2,
    pub approx_bits: f64,
    pub entropy_bits: f64,
    pub gamma: f64,
}

pub fn report(w: u64, kappa: u64) -> SecurityReport {
    SecurityReport {
        w,
        kappa,
        exact_bits: exact_security_bits(w, kappa),
        approx_bits: approx_security_bits(w, kappa),
        entropy_bits: hors_entropy_bits(w, kappa),
        gamma: gamma(w, kappa),
    }
}

/// Standard widths for the 256-bit parameter table.
pub const TABLE_WIDTHS: [u64; 5] = [512, 1024, 2048, 4096, 8192];

/// The 256-bit (128-bit post-quantum) target level.
pub const TARGET_BITS: u64 = 256;

/// `min_kappa_for_security` across [`TABLE_WIDTHS`] at the 256-bit target.
pub fn target_table() -> Vec<(u64, Option<u64>)> {
    TABLE_WIDTHS
        .iter()
        .map(|&w| (w, min_kappa_for_security(w, TARGET_BITS)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    #[test]
    fn log2_is_exact_on_powers_of_two() {
        for e in [0u64, 1, 5, 12, 63, 200] {
            let l = log2_biguint(&(BigUint::from(1u8) << e));
            assert_eq!(l.integer_part(), e);
            assert_eq!(l.frac_bits(), 0);
        }
    }

    #[test]
    fn log2_matches_f64_on_small_values() {
        for n in [3u64, 7, 120, 1000, 999_999_937] {
            let got = log2_biguint(&BigUint::from(n)).to_f64();
            let want = (n as f64).log2();
            assert!((got - want).abs() < 1e-12, "log2({n}): {got} vs {want}");
        }
    }

    #[test]
    fn log2_has_deep_fractional_accuracy() {
        // floor(2^64 * (log2(3) - 1)), computed with 200-bit arithmetic
        // independently of this implementation.
        let l = log2_biguint(&BigUint::from(3u8));
        assert_eq!(l.integer_part(), 1);
        let expected_frac = 0x95c01a39fbd6879fu64;
        let diff = l.frac_bits().abs_diff(expected_frac);
        assert!(diff <= 1, "frac {:#x} vs {:#x}", l.frac_bits(), expected_frac);
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(binomial(5, 0), BigUint::from(1u32));
        assert_eq!(binomial(5, 5), BigUint::from(1u32));
        assert_eq!(binomial(67, 4), BigUint::from(766_480u32));
    }

    #[test]
    fn exact_bits_counts_singletons_at_kappa_one() {
        for w in [2u64, 8, 1024, 4096] {
            let l = exact_security_bits(w, 1);
            assert_eq!(l.integer_part(), w.trailing_zeros() as u64);
            assert_eq!(l.frac_bits(), 0);
        }
    }

    #[test]
    fn exact_bits_for_tiny_oracle_matches_enumeration() {
        // All cardinality-3 multisets over [0, 8), enumerated directly.
        let mut seen = BTreeSet::new();
        for a in 0u8..8 {
            for b in a..8 {
                for c in b..8 {
                    seen.insert((a, b, c));
                }
            }
        }
        assert_eq!(seen.len(), 120);
        let l = exact_security_bits(8, 3);
        assert!((l.to_f64() - (120.0f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn paper_example_security_level() {
        let l = exact_security_bits(4096, 31);
        assert!(l.to_f64() > 259.0 && l.to_f64() < 261.0, "{}", l.to_f64());
    }

    #[test]
    fn stirling_form_is_close_to_exact() {
        for (w, kappa) in [(1024u64, 44u64), (2048, 36), (4096, 31), (8192, 27), (1024, 10)] {
            let exact = exact_security_bits(w, kappa).to_f64();
            let approx = approx_security_bits(w, kappa);
            let rel = (approx - exact).abs() / exact;
            assert!(rel < 0.01, "w={w} kappa={kappa}: rel err {rel}");
        }
    }

    #[test]
    fn exact_dominates_the_truncated_expansion() {
        // C(w+k-1, k) * k! * 2w >= w^k * (2w + k(k-1)), exactly.
        for (w, kappa) in [(64u64, 4u64), (1024, 10), (4096, 31), (8192, 27), (512, 20)] {
            let factorial: BigUint = (1..=kappa).map(BigUint::from).product();
            let lhs = multiset_count(w, kappa) * factorial * BigUint::from(2 * w);
            let rhs = BigUint::from(w).pow(kappa as u32)
                * BigUint::from(2 * w + kappa * (kappa - 1));
            assert!(lhs >= rhs, "w={w} kappa={kappa}");
        }
    }

    #[test]
    fn entropy_correction_is_small_and_negative() {
        let r = report(4096, 31);
        assert!((r.gamma - 0.234619140625).abs() < 1e-12);
        let correction = r.exact_bits.to_f64() - r.entropy_bits;
        assert!(correction > 0.0 && correction < 0.1, "correction {correction}");
        // kappa = 1 leaves no room for collisions.
        let single = report(4096, 1);
        assert!((single.entropy_bits - 12.0).abs() < 1e-3);
    }

    #[test]
    fn capacity_examples() {
        let c = capacity(4096, 8192, 31);
        assert_eq!(c.d_max, 1_082_401);
        assert!(c.d_safe < c.d_max);

        // One document exhausts a fabric whose oracle uses all of it.
        assert_eq!(capacity(4, 4, 16).d_max, 1);

        // Below N = 36 the six-sigma margin swallows everything.
        assert_eq!(capacity(16, 25, 4).d_safe, 0);
        for n in [36u64, 64, 100, 8192] {
            let c = capacity(16, n, 4);
            assert!(c.d_safe < c.d_max, "N={n}");
        }
    }

    #[test]
    fn target_table_matches_expected_levels() {
        assert_eq!(min_kappa_for_security(1024, 256), Some(44));
        assert_eq!(min_kappa_for_security(2048, 256), Some(36));
        assert_eq!(min_kappa_for_security(4096, 256), Some(31));
        assert_eq!(min_kappa_for_security(8192, 256), Some(27));
    }

    #[test]
    fn narrow_width_within_budget() {
        // With exact binomials, w = 512 reaches the target just inside the
        // oracle budget (kappa = 55, 495 bits), which the Stirling-form
        // estimate misses: the expansion breaks down at gamma ~ 6.
        assert_eq!(min_kappa_for_security(512, 256), Some(55));
        assert!(approx_security_bits(512, 55) < 256.0);
        // A genuinely infeasible width.
        assert_eq!(min_kappa_for_security(256, 256), None);
        assert_eq!(min_kappa_for_security(4096, 1), Some(1));
    }

    #[test]
    fn min_kappa_is_monotone_in_width() {
        let table = target_table();
        let mut last: Option<u64> = None;
        for (_, k) in table.into_iter().flat_map(|(w, k)| k.map(|k| (w, k))) {
            if let Some(prev) = last {
                assert!(k <= prev);
            }
            last = Some(k);
        }
    }

    #[test]
    fn table_runs_fast() {
        // The whole table plus reports must be interactive-speed.
        let t = target_table();
        assert_eq!(t.len(), 5);
        let _ = vec![report(4096, 31), report(8192, 27)];
    }
}
