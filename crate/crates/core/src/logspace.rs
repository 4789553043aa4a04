//! Log-space arithmetic for Carleman-weighted quantities.
//!
//! The weight factors e^{-2s*phi}, e^{s*phi_hat} and friends have exponents of
//! order 1e4..1e6 for admissible (s, lambda, m), far outside f64 range. Every
//! weighted norm and every weight sample is therefore carried as a logarithm;
//! sums of exponentials accumulate through [`LogSum`] (max-shifted), and the
//! only clamping happens when a caller asks for a plain f64 value.

/// Natural log of a non-negative quantity; `-inf` encodes exact zero.
pub type Ln = f64;

/// Accumulates ln(sum_i e^{t_i}) from term logs `t_i` without leaving
/// log-space. Numerically: tracks the running maximum and a scaled sum.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    /// Adds a term given by its natural log. `-inf` terms are exact zeros.
    pub fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.max {
            self.scaled = self.scaled * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        } else {
            self.scaled += (ln_term - self.max).exp();
        }
    }

    /// Adds `weight * e^{ln_factor}` with `weight >= 0` given in plain scale.
    pub fn add_scaled(&mut self, weight: f64, ln_factor: f64) {
        if weight > 0.0 {
            self.add(weight.ln() + ln_factor);
        }
    }

    /// ln of the accumulated sum (`-inf` when empty).
    pub fn ln_value(&self) -> Ln {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }

    /// Plain value; saturates to `inf`/0 outside f64 range.
    pub fn value(&self) -> f64 {
        self.ln_value().exp()
    }
}

/// e^{ln_x} clamped below at `floor`; the bool reports whether the clamp hit.
/// Exact zeros (ln_x = -inf) pass through unclamped: they are structural, not
/// underflow.
pub fn exp_floored(ln_x: f64, floor: f64) -> (f64, bool) {
    if ln_x == f64::NEG_INFINITY {
        return (0.0, false);
    }
    let v = ln_x.exp();
    if v < floor {
        (floor, true)
    } else {
        (v, false)
    }
}

/// ln(|z|^2) for complex |.|, tolerant of zero.
pub fn ln_abs2(re: f64, im: f64) -> f64 {
    let a2 = re * re + im * im;
    if a2 == 0.0 {
        f64::NEG_INFINITY
    } else {
        a2.ln()
    }
}
