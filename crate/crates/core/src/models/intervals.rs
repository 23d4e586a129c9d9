//! Finite unions of intervals on the line or on a circle `[0, L)`.

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    /// Sorted, disjoint, non-adjacent open intervals.
    pieces: Vec<(f64, f64)>,
    period: Option<f64>,
}

impl IntervalSet {
    pub fn empty(period: Option<f64>) -> Self {
        IntervalSet {
            pieces: Vec::new(),
            period,
        }
    }

    pub fn full(period: Option<f64>) -> Self {
        let piece = match period {
            Some(l) => (0.0, l),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        IntervalSet {
            pieces: vec![piece],
            period,
        }
    }

    /// The interval `(a, b)`; on a circle it is read modulo the period.
    pub fn interval(a: f64, b: f64, period: Option<f64>) -> Self {
        if !(b > a) {
            return Self::empty(period);
        }
        match period {
            None => IntervalSet {
                pieces: vec![(a, b)],
                period,
            },
            Some(l) => {
                if b - a >= l {
                    return Self::full(period);
                }
                let a0 = a.rem_euclid(l);
                let b0 = a0 + (b - a);
                let raw = if b0 <= l {
                    vec![(a0, b0)]
                } else {
                    vec![(0.0, b0 - l), (a0, l)]
                };
                Self::normalized(raw, period)
            }
        }
    }

    fn normalized(mut raw: Vec<(f64, f64)>, period: Option<f64>) -> Self {
        raw.retain(|(a, b)| b > a);
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalSet { pieces: out, period }
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut raw = self.pieces.clone();
        raw.extend_from_slice(&other.pieces);
        Self::normalized(raw, self.period)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a1, b1) = self.pieces[i];
            let (a2, b2) = other.pieces[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if hi > lo {
                out.push((lo, hi));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet {
            pieces: out,
            period: self.period,
        }
    }

    pub fn complement(&self) -> Self {
        let (lo, hi) = match self.period {
            Some(l) => (0.0, l),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let mut out = Vec::new();
        let mut cur = lo;
        for &(a, b) in &self.pieces {
            if a > cur {
                out.push((cur, a));
            }
            cur = b;
        }
        if hi > cur {
            out.push((cur, hi));
        }
        IntervalSet {
            pieces: out,
            period: self.period,
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        let u = match self.period {
            Some(l) => u.rem_euclid(l),
            None => u,
        };
        if let (Some(l), 0.0) = (self.period, u) {
            // the seam: 0 and L are one point
            let first = self.pieces.first().is_some_and(|p| p.0 == 0.0);
            let last = self.pieces.last().is_some_and(|p| p.1 == l);
            if first && last {
                return true;
            }
        }
        self.pieces.iter().any(|&(a, b)| a < u && u < b)
    }

    /// Lebesgue length (may be infinite).
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(|(a, b)| b - a).sum()
    }

    /// Standard normal measure.
    pub fn gaussian_measure(&self) -> f64 {
        self.pieces.iter().map(|&(a, b)| phi_diff(a, b)).sum()
    }

    /// Finite endpoints of the pieces.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut e = Vec::new();
        for &(a, b) in &self.pieces {
            for v in [a, b] {
                if v.is_finite() {
                    e.push(v);
                }
            }
        }
        if let Some(l) = self.period {
            // 0 and L are the same point; drop the artificial cut.
            let full_wrap = self.pieces.first().is_some_and(|p| p.0 == 0.0)
                && self.pieces.last().is_some_and(|p| p.1 == l);
            if full_wrap {
                e.retain(|&v| v != 0.0 && v != l);
            }
        }
        e
    }
}

/// Standard normal distribution function.
pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 − Φ(x)`.
pub(crate) fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `Φ(b) − Φ(a)` computed on the side of the distribution that avoids cancellation.
pub(crate) fn phi_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}
