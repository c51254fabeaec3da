//! Radix-2 DFT/IDFT kernels.
//!
//! Convention: the forward transform is unnormalized,
//! `X[k] = sum_l x[l] e^{-j 2 pi k l / L}`, and the inverse carries the `1/L`
//! factor, `x[i] = (1/L) sum_k X[k] e^{+j 2 pi k i / L}`. Only power-of-two
//! lengths are supported.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::{Error, Result, C64};

const MAX_LOG2_LEN: usize = 24;

/// Precomputed twiddles and bit-reversal table for one transform length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    /// `e^{-j 2 pi k / len}` for `k < len / 2`.
    twiddles: Vec<C64>,
    bit_reverse: Vec<usize>,
}

impl FftPlan {
    pub fn new(len: usize) -> Result<Self> {
        check_len(len)?;
        let log2 = len.trailing_zeros();
        // Each twiddle is evaluated directly rather than by recurrence so the
        // table error stays at one ulp regardless of length.
        let twiddles = (0..len / 2)
            .map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
            .collect();
        let bit_reverse = (0..len)
            .map(|i| if log2 == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - log2) })
            .collect();
        Ok(Self {
            len,
            twiddles,
            bit_reverse,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, data: &mut [C64]) -> Result<()> {
        self.check_buffer(data)?;
        self.butterflies(data, false);
        Ok(())
    }

    /// In-place inverse transform including the `1/L` factor.
    pub fn inverse(&self, data: &mut [C64]) -> Result<()> {
        self.check_buffer(data)?;
        self.butterflies(data, true);
        let scale = 1.0 / self.len as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
        Ok(())
    }

    fn check_buffer(&self, data: &[C64]) -> Result<()> {
        if data.len() != self.len {
            return Err(Error::input(format!(
                "buffer of length {} passed to a length-{} transform",
                data.len(),
                self.len
            )));
        }
        Ok(())
    }

    // Iterative decimation-in-time Cooley-Tukey.
    fn butterflies(&self, data: &mut [C64], inverse: bool) {
        let n = self.len;
        for i in 0..n {
            let j = self.bit_reverse[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for chunk in data.chunks_exact_mut(size) {
                let (lo, hi) = chunk.split_at_mut(half);
                let twiddles = self.twiddles.iter().step_by(stride);
                for ((a, b), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(twiddles) {
                    let w = if inverse { w.conj() } else { w };
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            size *= 2;
        }
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::config(format!(
            "transform length {len} is not a power of two"
        )));
    }
    if len.trailing_zeros() as usize > MAX_LOG2_LEN {
        return Err(Error::config(format!("transform length {len} too large")));
    }
    Ok(())
}

/// Shared plan for `len`, built on first use.
pub fn plan(len: usize) -> Result<&'static FftPlan> {
    static PLANS: [OnceLock<FftPlan>; MAX_LOG2_LEN + 1] = [const { OnceLock::new() }; MAX_LOG2_LEN + 1];
    check_len(len)?;
    let slot = &PLANS[len.trailing_zeros() as usize];
    Ok(slot.get_or_init(|| FftPlan::new(len).expect("length validated")))
}

/// Forward DFT of `x` into a new vector.
pub fn dft(x: &[C64]) -> Result<Vec<C64>> {
    let mut out = x.to_vec();
    plan(x.len())?.forward(&mut out)?;
    Ok(out)
}

/// Inverse DFT of `x` into a new vector.
pub fn idft(x: &[C64]) -> Result<Vec<C64>> {
    let mut out = x.to_vec();
    plan(x.len())?.inverse(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_vec(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    // Independent O(L^2) summation.
    fn direct(x: &[C64], sign: f64) -> Vec<C64> {
        let len = x.len();
        (0..len)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(l, &v)| {
                        let phase = sign * 2.0 * PI * ((k * l) % len) as f64 / len as f64;
                        v * C64::from_polar(1.0, phase)
                    })
                    .sum()
            })
            .collect()
    }

    fn max_err(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let x = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(dft(&x).unwrap(), vec![c(1.0, 0.0); 4]);
        let back = idft(&[c(1.0, 0.0); 4]).unwrap();
        assert!(max_err(&back, &x) < 1e-15);
    }

    #[test]
    fn single_tone_lands_in_bin_one() {
        let x = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let spec = dft(&x).unwrap();
        assert!(max_err(&spec, &[c(0.0, 0.0), c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) < 1e-15);
    }

    #[test]
    fn period_two_spectrum_has_even_support() {
        let a = c(0.3, -1.2);
        let b = c(-0.7, 0.4);
        let x = idft(&[a, b, a, b]).unwrap();
        let expected = [(a + b) / 2.0, c(0.0, 0.0), (a - b) / 2.0, c(0.0, 0.0)];
        assert!(max_err(&x, &expected) < 1e-15);
    }

    #[test]
    fn length_eight_matches_direct_sum() {
        let x = random_vec(8, 3);
        assert!(max_err(&dft(&x).unwrap(), &direct(&x, -1.0)) < 1e-12);
    }

    #[test]
    fn length_one_is_identity() {
        let x = [c(2.5, -1.0)];
        assert_eq!(dft(&x).unwrap(), x.to_vec());
        assert_eq!(idft(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn round_trip_512() {
        let x = random_vec(512, 9);
        let back = idft(&dft(&x).unwrap()).unwrap();
        assert!(max_err(&back, &x) < 1e-12);
    }

    #[test]
    fn rejects_non_power_of_two() {
        for len in [0, 3, 6, 100] {
            let x = vec![C64::default(); len];
            assert!(matches!(dft(&x), Err(Error::Config(_))));
            assert!(matches!(idft(&x), Err(Error::Config(_))));
        }
    }

    #[test]
    fn plan_rejects_wrong_buffer() {
        let p = FftPlan::new(8).unwrap();
        let mut buf = vec![C64::default(); 4];
        assert!(matches!(p.forward(&mut buf), Err(Error::Input(_))));
    }

    #[test]
    fn periodicity_lemma() {
        for (total, period) in [(4usize, 2usize), (8, 4), (8, 2), (128, 64), (128, 32)] {
            let m = total / period;
            let one = random_vec(period, total as u64 + period as u64);
            let stacked: Vec<C64> = (0..total).map(|k| one[k % period]).collect();
            let x = idft(&stacked).unwrap();
            let short = idft(&one).unwrap();
            for (i, v) in x.iter().enumerate() {
                if i % m == 0 {
                    assert!((v - short[i / m]).norm() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12, "index {i} of {total}: {v}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec_strategy() -> impl Strategy<Value = Vec<C64>> {
            (0u32..=9).prop_flat_map(|log2| {
                proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1usize << log2)
                    .prop_map(|v| v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
            })
        }

        proptest! {
            #[test]
            fn round_trip(x in vec_strategy()) {
                let back = idft(&dft(&x).unwrap()).unwrap();
                let scale = x.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
                prop_assert!(max_err(&back, &x) <= 1e-12 * scale);
            }

            #[test]
            fn parseval(x in vec_strategy()) {
                let spec = dft(&x).unwrap();
                let time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
                let freq: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
                prop_assert!((time - freq).abs() <= 1e-10 * time.max(1e-300));
            }

            #[test]
            fn linearity(x in vec_strategy(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
                let y: Vec<C64> = x.iter().rev().map(|v| v * C64::new(0.5, -1.0)).collect();
                let combo: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a * alpha + b * beta).collect();
                let lhs = dft(&combo).unwrap();
                let (fx, fy) = (dft(&x).unwrap(), dft(&y).unwrap());
                let rhs: Vec<C64> = fx.iter().zip(&fy).map(|(a, b)| a * alpha + b * beta).collect();
                let scale = rhs.iter().map(|v| v.norm()).fold(1.0, f64::max);
                prop_assert!(max_err(&lhs, &rhs) <= 1e-11 * scale);
            }
        }
    }
}
