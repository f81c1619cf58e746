use super::{DomainKind, Scalar};

/// Closed interval `[lo, hi]` with outward-widened endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo: lo.min(hi), hi: lo.max(hi) }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn widened(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() {
            return Interval::ENTIRE;
        }
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }
}

impl Scalar for Interval {
    fn constant(c: f64) -> Self {
        Interval::point(c)
    }

    fn neg(self) -> Self {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    fn add(self, o: Self) -> Self {
        Interval::widened(self.lo + o.lo, self.hi + o.hi)
    }

    fn sub(self, o: Self) -> Self {
        Interval::widened(self.lo - o.hi, self.hi - o.lo)
    }

    fn mul(self, o: Self) -> Self {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi)
    }

    fn div(self, o: Self) -> Result<Self, DomainKind> {
        if o.lo == 0.0 && o.hi == 0.0 {
            return Err(DomainKind::DivisionByZero);
        }
        if o.contains(0.0) {
            return Ok(Interval::ENTIRE);
        }
        let r = Interval::widened(1.0 / o.hi, 1.0 / o.lo);
        Ok(self.mul(r))
    }

    fn exp(self) -> Self {
        Interval::widened(self.lo.exp(), self.hi.exp())
    }

    fn sqrt(self) -> Result<Self, DomainKind> {
        if self.hi < 0.0 {
            return Err(DomainKind::SqrtOfNegative);
        }
        Ok(Interval::widened(self.lo.max(0.0).sqrt(), self.hi.sqrt()).clamp_nonneg())
    }

    fn powi(self, k: u32) -> Self {
        if k == 0 {
            return Interval::point(1.0);
        }
        let (a, b) = (self.lo.powi(k as i32), self.hi.powi(k as i32));
        if k % 2 == 1 {
            Interval::widened(a, b)
        } else if self.contains(0.0) {
            Interval::widened(0.0, a.max(b)).clamp_nonneg()
        } else {
            Interval::widened(a.min(b), a.max(b)).clamp_nonneg()
        }
    }
}

impl Interval {
    fn clamp_nonneg(self) -> Self {
        Interval { lo: self.lo.max(0.0), hi: self.hi }
    }
}
