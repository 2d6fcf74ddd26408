//! Compensated and log-domain summation helpers.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Compensated {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Compensated::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<Compensated>().value()
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Running log-sum-exp accumulator.
///
/// Keeps the sum relative to the largest exponent seen so far so that
/// sequences spanning hundreds of orders of magnitude stay representable.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: Compensated,
}

impl Default for LogSum {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: Compensated::new(),
        }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, log_x: f64) {
        if log_x == f64::NEG_INFINITY {
            return;
        }
        if log_x > self.max {
            let rescale = (self.max - log_x).exp();
            let old = self.scaled.value() * rescale;
            self.scaled = Compensated::new();
            self.scaled.add(old);
            self.max = log_x;
        }
        self.scaled.add((log_x - self.max).exp());
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.value().ln()
        }
    }
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = LogSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}
