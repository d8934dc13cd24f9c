//! Finite-window averaging helpers shared by classifiers, verdicts, and
//! certificates.
//!
//! Limits over bi-infinite windows are replaced by the maximum symmetric
//! windowed mean over `k` in `[k_min, k_max]`; `k_min` guards against the
//! degenerate small-`k` averages dominating, `k_max` is forced by the
//! window. Windows that carry no backward part use one-sided means, with
//! the same `k` sweep.

/// Resolved parameters for the windowed-mean sweep.
#[derive(Debug, Clone, Copy)]
pub struct CesaroSweep {
    pub k_min: usize,
    pub k_max: usize,
}

impl CesaroSweep {
    /// Default `k_min` is a quarter of the sample count.
    pub fn for_window(t_first: i64, len: usize, k_min: Option<usize>) -> CesaroSweep {
        let t_last = t_first + len.saturating_sub(1) as i64;
        let k_max = if t_first >= 0 {
            t_last.max(0) as usize
        } else {
            (t_first.unsigned_abs() as usize).max(t_last.max(0) as usize)
        };
        let k_min = k_min.unwrap_or(len / 4).min(k_max);
        CesaroSweep { k_min, k_max }
    }
}

/// Maximum windowed mean of `values` (the value at index `i` sits at time
/// `t_first + i`). Symmetric means `sum_{|t| <= k} v_t / (2k+1)` when the
/// window extends to negative times, one-sided `sum_{0 <= t <= k} v_t /
/// (k+1)` otherwise. Out-of-window terms contribute zero.
pub fn cesaro_max(t_first: i64, values: &[f64], sweep: CesaroSweep) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let t_last = t_first + (values.len() - 1) as i64;
    let at = |t: i64| -> f64 {
        if t < t_first || t > t_last {
            0.0
        } else {
            values[(t - t_first) as usize]
        }
    };
    let one_sided = t_first >= 0;
    let mut best = 0.0f64;
    for k in sweep.k_min..=sweep.k_max {
        let k_i = k as i64;
        let (lo, count) = if one_sided {
            (0i64, (k + 1) as f64)
        } else {
            (-k_i, (2 * k + 1) as f64)
        };
        let mut sum = 0.0;
        let mut t = lo.max(t_first);
        let hi = k_i.min(t_last);
        while t <= hi {
            sum += at(t);
            t += 1;
        }
        best = best.max(sum / count);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spike_symmetric() {
        // window [-50, 49], spike 0.5 at t=0
        let mut v = vec![0.0; 100];
        v[50] = 0.5;
        let sweep = CesaroSweep::for_window(-50, 100, Some(25));
        let m = cesaro_max(-50, &v, sweep);
        assert!((m - 0.5 / 51.0).abs() < 1e-12);
    }

    #[test]
    fn constant_sequence_two_sided() {
        let v = vec![0.2; 100];
        let sweep = CesaroSweep::for_window(-50, 100, Some(25));
        let m = cesaro_max(-50, &v, sweep);
        assert!((m - 0.2).abs() < 1e-12);
    }

    #[test]
    fn one_sided_mean() {
        let v = vec![0.3; 10];
        let sweep = CesaroSweep::for_window(0, 10, Some(2));
        let m = cesaro_max(0, &v, sweep);
        assert!((m - 0.3).abs() < 1e-12);
    }
}
