//! Truncated Taylor jets with overloaded arithmetic. A jet of length 1 is a
//! plain number, so every equation below is written once and serves both the
//! coefficient recurrences and pointwise residuals.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(c: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = c;
        Jet(v)
    }

    /// The independent variable expanded about `t0`.
    pub fn variable(t0: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = t0;
        if len > 1 {
            v[1] = 1.0;
        }
        Jet(v)
    }

    /// Copies `coeffs`, zero padded or truncated to `len`.
    pub fn from_coeffs(coeffs: &[f64], len: usize) -> Self {
        let mut v = vec![0.0; len];
        let n = coeffs.len().min(len);
        v[..n].copy_from_slice(&coeffs[..n]);
        Jet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn sq(&self) -> Jet {
        self * self
    }

    pub fn at(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }
}

/// Value and first three derivative jets of the series `coeffs`, each of
/// length `len`.
pub(crate) fn derivative_jets(coeffs: &[f64], len: usize) -> [Jet; 4] {
    let mut cur: Vec<f64> = coeffs.to_vec();
    std::array::from_fn(|_| {
        let out = Jet::from_coeffs(&cur, len);
        cur = (1..cur.len()).map(|k| k as f64 * cur[k]).collect();
        out
    })
}

fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len().min(b.len());
    (0..len)
        .map(|n| (0..=n).map(|k| a[k] * b[n - k]).sum())
        .collect()
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Jet(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect()));
binop!(Sub, sub, |a, b| Jet(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect()));
binop!(Mul, mul, |a, b| Jet(conv(&a.0, &b.0)));

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Jet(rhs.0.iter().map(|x| self * x).collect())
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self * &rhs
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.0[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.0[0] -= rhs;
        self
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.clone() + rhs
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.clone() - rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -1.0 * self
    }
}
