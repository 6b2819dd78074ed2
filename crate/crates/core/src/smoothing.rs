//! Windows, normalizers and window-smoothed arrays.
//!
//! A window of radius `w` around an index is the ∞-norm ball of radius `w`
//! clipped to the index box. Smoothing spreads each entry uniformly over
//! its window, so the entry sum is preserved. The lower and upper arrays
//! use windows of radius `w - 1` and `w + 1` with normalizers taken as the
//! minimum and maximum of the smoothing normalizer over a radius-1
//! neighborhood; together they sandwich the smoothed array.
//!
//! All normalizers are products of per-axis window sizes, so every
//! operation here reduces to scaling pointwise and then taking separable
//! box sums along each axis.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::snapshot::{RefinedSnapshotArray, SnapshotMatrix};

/// Floating-point allowance added to both closed bounds in
/// [`check_pointwise_estimate`]. The estimator and the bounds sum the same
/// masses in different orders.
pub const POINTWISE_FP_SLACK: f64 = 1e-12;

/// Which normalization factor to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizerKind {
    Lower,
    Smooth,
    Upper,
}

/// `{i' : |i' - i| <= w}` clipped to `0..len`.
pub fn window_1d(w: usize, len: usize, i: usize) -> RangeInclusive<usize> {
    i.saturating_sub(w)..=(i + w).min(len.saturating_sub(1))
}

fn size_1d(w: usize, len: usize, i: usize) -> usize {
    let r = window_1d(w, len, i);
    r.end() + 1 - r.start()
}

/// Axis-aligned box of indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowBox<const N: usize> {
    pub ranges: [RangeInclusive<usize>; N],
}

impl<const N: usize> WindowBox<N> {
    pub fn contains(&self, idx: &[usize; N]) -> bool {
        self.ranges.iter().zip(idx).all(|(r, x)| r.contains(x))
    }

    pub fn size(&self) -> usize {
        self.ranges.iter().map(|r| r.end() + 1 - r.start()).product()
    }

    /// Whether `self` lies inside `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.ranges
            .iter()
            .zip(&other.ranges)
            .all(|(a, b)| b.start() <= a.start() && a.end() <= b.end())
    }

    /// Members in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = [usize; N]> + '_ {
        let total = self.size();
        (0..total).map(move |mut n| {
            let mut idx = [0; N];
            for ax in (0..N).rev() {
                let r = &self.ranges[ax];
                let len = r.end() + 1 - r.start();
                idx[ax] = r.start() + n % len;
                n /= len;
            }
            idx
        })
    }
}

/// Window of radius `w` around `idx` in a box with the given axis lengths.
pub fn window<const N: usize>(w: usize, dims: [usize; N], idx: [usize; N]) -> WindowBox<N> {
    WindowBox { ranges: std::array::from_fn(|ax| window_1d(w, dims[ax], idx[ax])) }
}

/// Window around a refined-snapshot index `(a, b, i, j)` in a
/// `k x k x l x l` box.
pub fn window_4d(w: usize, k: usize, l: usize, idx: [usize; 4]) -> WindowBox<4> {
    window(w, [k, k, l, l], idx)
}

/// Per-axis factor of a normalizer.
fn axis_factor(kind: NormalizerKind, w: usize, len: usize, i: usize) -> f64 {
    let inv = |x: usize| 1.0 / size_1d(w, len, x) as f64;
    match kind {
        NormalizerKind::Smooth => inv(i),
        NormalizerKind::Lower => window_1d(1, len, i).map(inv).fold(f64::INFINITY, f64::min),
        NormalizerKind::Upper => window_1d(1, len, i).map(inv).fold(0.0, f64::max),
    }
}

/// Normalization factor at `idx`. The smooth factor is one over the window
/// size; lower and upper are its minimum and maximum over the radius-1
/// window around `idx`.
pub fn normalizer<const N: usize>(kind: NormalizerKind, w: usize, dims: [usize; N], idx: [usize; N]) -> f64 {
    (0..N).map(|ax| axis_factor(kind, w, dims[ax], idx[ax])).product()
}

/// Box sum of radius `r` along one axis of a dense row-major array.
fn box_sum_axis(data: &[f64], dims: &[usize], axis: usize, r: usize) -> Vec<f64> {
    let len = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let outer = data.len() / (len * stride).max(1);
    let mut out = vec![0.0; data.len()];
    let mut prefix = vec![0.0; len + 1];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * len * stride + s;
            for x in 0..len {
                prefix[x + 1] = prefix[x] + data[base + x * stride];
            }
            for x in 0..len {
                let win = window_1d(r, len, x);
                out[base + x * stride] = prefix[win.end() + 1] - prefix[*win.start()];
            }
        }
    }
    out
}

/// Scales by the `kind` normalizer of radius `w`, then sums windows of
/// radius `r`. No precondition checks.
pub(crate) fn windowed(data: &[f64], dims: &[usize], kind: NormalizerKind, w: usize, r: usize) -> Vec<f64> {
    let factors: Vec<Vec<f64>> = dims
        .iter()
        .map(|&len| (0..len).map(|i| axis_factor(kind, w, len, i)).collect())
        .collect();
    let mut scaled = data.to_vec();
    for (off, x) in scaled.iter_mut().enumerate() {
        let mut rem = off;
        let mut f = 1.0;
        for ax in (0..dims.len()).rev() {
            f *= factors[ax][rem % dims[ax]];
            rem /= dims[ax];
        }
        *x *= f;
    }
    (0..dims.len()).fold(scaled, |acc, ax| box_sum_axis(&acc, dims, ax, r))
}

fn check_smooth(w: usize, dims: &[usize]) -> Result<()> {
    if dims.iter().any(|&d| w >= d) {
        return Err(invalid(format!("window radius {w} must be below every dimension {dims:?}")));
    }
    Ok(())
}

fn check_bounds(w: usize, dims: &[usize]) -> Result<()> {
    if w == 0 || dims.iter().any(|&d| w + 1 >= d) {
        return Err(invalid(format!(
            "lower/upper arrays need 1 <= w and w + 1 below every dimension; got w = {w}, dims {dims:?}"
        )));
    }
    Ok(())
}

pub fn smooth_matrix(m: &SnapshotMatrix, w: usize) -> Result<SnapshotMatrix> {
    let dims = [m.len(), m.len()];
    check_smooth(w, &dims)?;
    Ok(SnapshotMatrix::from_data(m.len(), windowed(m.data(), &dims, NormalizerKind::Smooth, w, w)))
}

pub fn smooth_array(a: &RefinedSnapshotArray, w: usize) -> Result<RefinedSnapshotArray> {
    check_smooth(w, &a.dims())?;
    Ok(RefinedSnapshotArray::from_data(
        a.k(),
        a.l(),
        windowed(a.data(), &a.dims(), NormalizerKind::Smooth, w, w),
    ))
}

/// Radius `w - 1` window sums with the lower normalizer.
pub fn lower_array(a: &RefinedSnapshotArray, w: usize) -> Result<RefinedSnapshotArray> {
    check_bounds(w, &a.dims())?;
    Ok(RefinedSnapshotArray::from_data(
        a.k(),
        a.l(),
        windowed(a.data(), &a.dims(), NormalizerKind::Lower, w, w - 1),
    ))
}

/// Radius `w + 1` window sums with the upper normalizer.
pub fn upper_array(a: &RefinedSnapshotArray, w: usize) -> Result<RefinedSnapshotArray> {
    check_bounds(w, &a.dims())?;
    Ok(RefinedSnapshotArray::from_data(
        a.k(),
        a.l(),
        windowed(a.data(), &a.dims(), NormalizerKind::Upper, w, w + 1),
    ))
}

/// An entry outside `[lower - delta, upper + delta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: [usize; 4],
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Distance outside the undilated interval `[lower, upper]`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub pass: bool,
    pub delta: f64,
    pub violations: Vec<Violation>,
    /// Smallest `delta` that would pass, ignoring the floating-point slack.
    pub max_excess: f64,
}

/// Checks `lower(A) - delta <= estimate <= upper(A) + delta` entrywise,
/// with both bounds closed and widened by [`POINTWISE_FP_SLACK`].
pub fn check_pointwise_estimate(
    a: &RefinedSnapshotArray,
    estimate: &RefinedSnapshotArray,
    w: usize,
    delta: f64,
) -> Result<PointwiseReport> {
    if a.dims() != estimate.dims() {
        return Err(invalid(format!("dimension mismatch: {:?} vs {:?}", a.dims(), estimate.dims())));
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("delta {delta} must be nonnegative")));
    }
    let lo = lower_array(a, w)?;
    let hi = upper_array(a, w)?;
    let mut violations = Vec::new();
    let mut max_excess: f64 = 0.0;
    for (off, ((&x, &l), &h)) in estimate.data().iter().zip(lo.data()).zip(hi.data()).enumerate() {
        let excess = (l - x).max(x - h).max(0.0);
        max_excess = max_excess.max(excess);
        if excess > delta + POINTWISE_FP_SLACK {
            violations.push(Violation { index: a.index_at(off), value: x, lower: l, upper: h, excess });
        }
    }
    Ok(PointwiseReport { pass: violations.is_empty(), delta, violations, max_excess })
}

/// Entrywise 1-norm of `upper(A) - lower(A)`.
pub fn sandwich_gap(a: &RefinedSnapshotArray, w: usize) -> Result<f64> {
    let lo = lower_array(a, w)?;
    let hi = upper_array(a, w)?;
    Ok(hi.data().iter().zip(lo.data()).map(|(h, l)| (h - l).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::project;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Direct definition: sum over the window, normalizer per source entry.
    fn naive(a: &RefinedSnapshotArray, kind: NormalizerKind, w: usize, r: usize) -> RefinedSnapshotArray {
        let dims = a.dims();
        let mut out = RefinedSnapshotArray::zeros(a.k(), a.l());
        for off in 0..a.data().len() {
            let p = a.index_at(off);
            let s: f64 = window(r, dims, p)
                .iter()
                .map(|q| {
                    let nu = match kind {
                        NormalizerKind::Smooth => 1.0 / window(w, dims, q).size() as f64,
                        NormalizerKind::Lower => window(1, dims, q)
                            .iter()
                            .map(|z| 1.0 / window(w, dims, z).size() as f64)
                            .fold(f64::INFINITY, f64::min),
                        NormalizerKind::Upper => window(1, dims, q)
                            .iter()
                            .map(|z| 1.0 / window(w, dims, z).size() as f64)
                            .fold(0.0, f64::max),
                    };
                    nu * a.get(q)
                })
                .sum();
            out.set(p, s);
        }
        out
    }

    fn random_array(rng: &mut impl Rng, k: usize, l: usize) -> RefinedSnapshotArray {
        let mut a = RefinedSnapshotArray::zeros(k, l);
        a.data_mut().iter_mut().for_each(|x| *x = rng.gen::<f64>());
        let s = a.sum();
        a.scale(1.0 / s);
        a
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_1d(1, 5, 2), 1..=3);
        assert_eq!(window_1d(1, 5, 0), 0..=1);
        assert_eq!(window_1d(0, 5, 4), 4..=4);
        let b = window_4d(1, 3, 5, [0, 1, 4, 2]);
        assert_eq!(b.size(), 2 * 3 * 2 * 3);
        assert_eq!(b.iter().count(), b.size());
        assert!(b.contains(&[1, 2, 3, 1]));
        assert!(!b.contains(&[2, 2, 3, 1]));
    }

    #[test]
    fn normalizer_examples() {
        let s = |idx| normalizer(NormalizerKind::Smooth, 1, [3, 3], idx);
        assert!((s([1, 1]) - 1.0 / 9.0).abs() < 1e-15);
        assert!((s([0, 0]) - 1.0 / 4.0).abs() < 1e-15);
        for off in 0..256usize {
            let idx = [off / 64, off / 16 % 4, off / 4 % 4, off % 4];
            let dims = [4; 4];
            let lo = normalizer(NormalizerKind::Lower, 1, dims, idx);
            let sm = normalizer(NormalizerKind::Smooth, 1, dims, idx);
            let hi = normalizer(NormalizerKind::Upper, 1, dims, idx);
            let nb: Vec<f64> = window(1, dims, idx)
                .iter()
                .map(|q| 1.0 / window(1, dims, q).size() as f64)
                .collect();
            assert_eq!(lo, nb.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(hi, nb.iter().copied().fold(0.0, f64::max));
            assert!(lo <= sm && sm <= hi);
        }
    }

    #[test]
    fn smoothing_a_center_mass() {
        let mut m = SnapshotMatrix::zeros(3);
        m.set(1, 1, 1.0);
        let s = smooth_matrix(&m, 1).unwrap();
        assert!(s.data().iter().all(|&x| (x - 1.0 / 9.0).abs() < 1e-15));
        assert_eq!(smooth_matrix(&m, 0).unwrap(), m);
        assert!(smooth_matrix(&m, 3).is_err());
    }

    #[test]
    fn separable_sums_match_definition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for (k, l, w) in [(3, 5, 1), (5, 4, 2), (6, 6, 2), (4, 7, 1)] {
            let a = random_array(&mut rng, k, l);
            let s = smooth_array(&a, w).unwrap();
            assert!(max_diff(s.data(), naive(&a, NormalizerKind::Smooth, w, w).data()) < 1e-14);
            if w + 1 < k.min(l) {
                let lo = lower_array(&a, w).unwrap();
                let hi = upper_array(&a, w).unwrap();
                assert!(max_diff(lo.data(), naive(&a, NormalizerKind::Lower, w, w - 1).data()) < 1e-14);
                assert!(max_diff(hi.data(), naive(&a, NormalizerKind::Upper, w, w + 1).data()) < 1e-14);
            }
        }
    }

    #[test]
    fn bound_preconditions() {
        let a = RefinedSnapshotArray::zeros(4, 4);
        assert!(lower_array(&a, 0).is_err());
        assert!(upper_array(&a, 3).is_err());
        assert!(lower_array(&a, 2).is_ok());
    }

    #[test]
    fn pointwise_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = random_array(&mut rng, 5, 6);
        let w = 2;
        let delta = 1e-3;
        let s = smooth_array(&a, w).unwrap();
        assert!(check_pointwise_estimate(&a, &s, w, 0.0).unwrap().pass);

        let mut up = upper_array(&a, w).unwrap();
        up.add([1, 2, 3, 4], 2.0 * delta);
        let r = check_pointwise_estimate(&a, &up, w, delta).unwrap();
        assert!(!r.pass);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].index, [1, 2, 3, 4]);
        assert!((r.max_excess - 2.0 * delta).abs() < 1e-15);

        let mut down = lower_array(&a, w).unwrap();
        down.data_mut().iter_mut().for_each(|x| *x -= delta);
        assert!(check_pointwise_estimate(&a, &down, w, delta).unwrap().pass);

        assert!(check_pointwise_estimate(&a, &RefinedSnapshotArray::zeros(5, 5), w, delta).is_err());
    }

    #[test]
    fn sandwich_gap_examples() {
        assert_eq!(sandwich_gap(&RefinedSnapshotArray::zeros(5, 5), 1).unwrap(), 0.0);

        // unit mass at the corner of a 4^4 box, w = 1: the lower array sums
        // a radius-0 window, the upper array a radius-2 window
        let mut a = RefinedSnapshotArray::zeros(4, 4);
        a.set([0, 0, 0, 0], 1.0);
        let dims = [4; 4];
        let lo = normalizer(NormalizerKind::Lower, 1, dims, [0; 4]);
        let hi = normalizer(NormalizerKind::Upper, 1, dims, [0; 4]);
        assert!((lo - 1.0 / 81.0).abs() < 1e-16);
        assert!((hi - 1.0 / 16.0).abs() < 1e-16);
        let upper_support = window(2, dims, [0; 4]).size() as f64;
        let expect = hi * upper_support - lo;
        assert!((sandwich_gap(&a, 1).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn sandwich_gap_shrinks_with_w() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = random_array(&mut rng, 12, 12);
        let gaps: Vec<f64> = (1..=3).map(|w| sandwich_gap(&a, w).unwrap()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    proptest! {
        #[test]
        fn smoothing_preserves_sum(seed in any::<u64>(), l in 2usize..12, w in 0usize..5) {
            prop_assume!(w < l);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = SnapshotMatrix::zeros(l);
            for i in 0..l {
                for j in 0..l {
                    m.set(i, j, rng.gen());
                }
            }
            let s = smooth_matrix(&m, w).unwrap();
            prop_assert!((s.sum() - m.sum()).abs() <= 1e-12 * m.sum().max(1.0));
        }

        #[test]
        fn projection_commutes_with_smoothing(seed in any::<u64>(), k in 2usize..6, l in 2usize..6, w in 0usize..3) {
            prop_assume!(w < k && w < l);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_array(&mut rng, k, l);
            let lhs = project(&smooth_array(&a, w).unwrap());
            let rhs = smooth_matrix(&project(&a), w).unwrap();
            prop_assert!(max_diff(lhs.data(), rhs.data()) <= 1e-12);
        }

        #[test]
        fn sandwich_holds(seed in any::<u64>(), k in 3usize..7, l in 3usize..7, w in 1usize..3) {
            prop_assume!(w + 1 < k.min(l));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_array(&mut rng, k, l);
            let lo = lower_array(&a, w).unwrap();
            let sm = smooth_array(&a, w).unwrap();
            let hi = upper_array(&a, w).unwrap();
            for ((x, y), z) in lo.data().iter().zip(sm.data()).zip(hi.data()) {
                prop_assert!(*x <= *y + 1e-15 && *y <= *z + 1e-15 && *z <= 1.0 + 1e-12);
            }
        }
    }
}
