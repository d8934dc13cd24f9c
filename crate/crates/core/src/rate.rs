//! Accuracy rate functions `phi: Z -> R+` controlling how fast a glued
//! trajectory approaches the two segments it joins, together with the
//! transforms (monotone envelope, symmetrization) and the total sum used
//! by every error bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateFunction {
    /// `phi(k) = lambda^|k|` with `lambda` in (0,1).
    Geometric { lambda: f64 },
    /// Explicit values on `[-half_width, half_width]` with a geometric
    /// tail `tail_scale * tail_lambda^|k|` beyond the table.
    Table {
        half_width: i64,
        values: Vec<f64>,
        tail_scale: f64,
        tail_lambda: f64,
    },
}

impl RateFunction {
    pub fn geometric(lambda: f64) -> RateFunction {
        RateFunction::Geometric { lambda }
    }

    /// Table over `[-half_width, half_width]`; `values[0]` sits at
    /// `k = -half_width`.
    pub fn table(half_width: i64, values: Vec<f64>, tail_scale: f64, tail_lambda: f64) -> Result<RateFunction> {
        if values.len() as i64 != 2 * half_width + 1 {
            return Err(Error::Domain(format!(
                "table needs {} values, got {}",
                2 * half_width + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain("rate values must be finite and non-negative".into()));
        }
        Ok(RateFunction::Table {
            half_width,
            values,
            tail_scale,
            tail_lambda,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Geometric { lambda } => {
                if !(*lambda > 0.0 && *lambda < 1.0) {
                    return Err(Error::Domain(format!(
                        "geometric rate needs lambda in (0,1), got {lambda}"
                    )));
                }
            }
            RateFunction::Table {
                values, tail_scale, ..
            } => {
                if values.iter().any(|v| *v < 0.0 || !v.is_finite()) || *tail_scale < 0.0 {
                    return Err(Error::Domain("rate values must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, k: i64) -> f64 {
        match self {
            RateFunction::Geometric { lambda } => lambda.powi(k.unsigned_abs().min(i32::MAX as u64) as i32),
            RateFunction::Table {
                half_width,
                values,
                tail_scale,
                tail_lambda,
            } => {
                if k.abs() <= *half_width {
                    values[(k + half_width) as usize]
                } else {
                    tail_scale * tail_lambda.powi(k.unsigned_abs().min(i32::MAX as u64) as i32)
                }
            }
        }
    }

    /// The pair `(phi(-2^n), phi(2^n))` entering the round-`n` gap
    /// recursion.
    pub fn round_values(&self, n: u32) -> (f64, f64) {
        let step = 1i64 << n.min(62);
        (self.eval(-step), self.eval(step))
    }

    /// Total sum over all integer offsets. Closed form for the geometric
    /// family, table sum plus a certified tail remainder otherwise.
    pub fn phi_sum(&self) -> Result<f64> {
        match self {
            RateFunction::Geometric { lambda } => {
                self.validate()?;
                Ok((1.0 + lambda) / (1.0 - lambda))
            }
            RateFunction::Table {
                half_width,
                values,
                tail_scale,
                tail_lambda,
            } => {
                let head: f64 = values.iter().sum();
                if *tail_scale == 0.0 {
                    return Ok(head);
                }
                if !(*tail_lambda > 0.0 && *tail_lambda < 1.0) {
                    return Err(Error::Domain(format!(
                        "divergent tail: lambda {tail_lambda} not in (0,1)"
                    )));
                }
                let first = tail_scale * tail_lambda.powi((*half_width + 1) as i32);
                Ok(head + 2.0 * first / (1.0 - tail_lambda))
            }
        }
    }

    /// Sum of `phi(j)` over `|j| >= radius` (the part of the total sum a
    /// point at that offset can still feel).
    pub fn tail_sum(&self, radius: i64) -> Result<f64> {
        if radius <= 0 {
            return self.phi_sum();
        }
        match self {
            RateFunction::Geometric { lambda } => {
                self.validate()?;
                Ok(2.0 * lambda.powi(radius.min(i32::MAX as i64) as i32) / (1.0 - lambda))
            }
            RateFunction::Table { half_width, .. } => {
                let mut sum = 0.0;
                for k in radius..=*half_width {
                    sum += self.eval(k) + self.eval(-k);
                }
                let tail_start = radius.max(*half_width + 1);
                if let RateFunction::Table {
                    tail_scale,
                    tail_lambda,
                    ..
                } = self
                {
                    if *tail_scale > 0.0 {
                        if !(*tail_lambda > 0.0 && *tail_lambda < 1.0) {
                            return Err(Error::Domain("divergent tail".into()));
                        }
                        sum += 2.0 * tail_scale * tail_lambda.powi(tail_start as i32)
                            / (1.0 - tail_lambda);
                    }
                }
                Ok(sum)
            }
        }
    }

    /// Replaces the rate by `sup_{i<=k} phi(i)` for `k < 0` and
    /// `sup_{i>=k} phi(i)` for `k >= 0`, making both tails monotone.
    /// Idempotent; the geometric family is already monotone.
    pub fn monotone_envelope(&self) -> RateFunction {
        match self {
            RateFunction::Geometric { .. } => self.clone(),
            RateFunction::Table {
                half_width,
                values,
                tail_scale,
                tail_lambda,
            } => {
                let k = *half_width as usize;
                let mut out = values.clone();
                // right tail: suffix maxima seeded with the tail head
                let tail_head = tail_scale * tail_lambda.powi((*half_width + 1) as i32);
                let mut running = tail_head;
                for i in (k..out.len()).rev() {
                    running = running.max(out[i]);
                    out[i] = running;
                }
                // left tail: prefix maxima from the far end
                let mut running = tail_head;
                for v in out.iter_mut().take(k) {
                    running = running.max(*v);
                    *v = running;
                }
                RateFunction::Table {
                    half_width: *half_width,
                    values: out,
                    tail_scale: *tail_scale,
                    tail_lambda: *tail_lambda,
                }
            }
        }
    }

    /// Pointwise max with the reflection: `max(phi(-k), phi(k))`. The
    /// result is even; the sum at most doubles.
    pub fn symmetrize(&self) -> RateFunction {
        match self {
            RateFunction::Geometric { .. } => self.clone(),
            RateFunction::Table {
                half_width,
                values,
                tail_scale,
                tail_lambda,
            } => {
                let n = values.len();
                let mut out = values.clone();
                for i in 0..n {
                    out[i] = values[i].max(values[n - 1 - i]);
                }
                RateFunction::Table {
                    half_width: *half_width,
                    values: out,
                    tail_scale: *tail_scale,
                    tail_lambda: *tail_lambda,
                }
            }
        }
    }
}
