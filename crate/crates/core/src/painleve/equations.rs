//! The four differential equations, written over jets.

use super::jet::Jet;

/// Which nonlinear equation: the sigma form of Painlevé V for the gap
/// probability, or its modified form for the spacing density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Nonlinear {
    Gap,
    Spacing,
}

/// Additive terms of the first-order-in-σ″ polynomial form; they sum to zero
/// on a solution.
pub(crate) fn nonlinear_terms(eq: Nonlinear, t: &Jet, v: &Jet, d1: &Jet, d2: &Jet) -> Vec<Jet> {
    let p = t * d2;
    let q = t * d1 - v;
    match eq {
        Nonlinear::Gap => {
            let r = &q + d1.sq();
            vec![p.sq(), 4.0 * (q * r)]
        }
        Nonlinear::Spacing => {
            let r = &q - 4.0 + 4.0 * d1.sq();
            vec![p.sq(), q * r, -16.0 * d1.sq()]
        }
    }
}

/// The derivative of the polynomial form divided by 2σ″ (respectively u″).
/// It is linear in the third derivative with coefficient `lead_factor · t²`,
/// so it can be stepped through points where σ″ vanishes.
pub(crate) fn nonlinear_regular(eq: Nonlinear, t: &Jet, v: &Jet, d1: &Jet, d2: &Jet, d3: &Jet) -> Jet {
    let t2 = t.sq();
    let q = t * d1 - v;
    match eq {
        Nonlinear::Gap => {
            let r = &q + d1.sq();
            &t2 * d3 + t * d2 + 2.0 * (t * r) + 2.0 * (q * (t + 2.0 * d1))
        }
        Nonlinear::Spacing => {
            let r = &q - 4.0 + 4.0 * d1.sq();
            2.0 * (&t2 * d3) + 2.0 * (t * d2) + t * r + q * (t + 8.0 * d1) - 32.0 * d1
        }
    }
}

pub(crate) fn lead_factor(eq: Nonlinear) -> f64 {
    match eq {
        Nonlinear::Gap => 1.0,
        Nonlinear::Spacing => 2.0,
    }
}

/// Coefficients (A, B, C, D) of the linear equation A y″ + B y′ + C y = D for
/// the first correction, built from the base solution's jets.
pub(crate) fn linear_coefficients(eq: Nonlinear, t: &Jet, v: &Jet, d1: &Jet, d2: &Jet) -> [Jet; 4] {
    let t2 = t.sq();
    let q = t * d1 - v;
    match eq {
        Nonlinear::Gap => {
            let a = 2.0 * (&t2 * d2);
            let b = -8.0 * (d1 * v) + 12.0 * (t * d1.sq()) + 8.0 * (t * &q);
            let c = -4.0 * d1.sq() - 8.0 * &q;
            let inner = v - t * d1 - 0.5 * (&t2 * d2);
            let big = 3.0 * v.sq() + 2.0 * (t * v * (t - d1)) - 2.0 * (&t2 * d1 * (t + d1));
            let d = (-4.0 / 3.0) * (&t2 * d2 * inner) - (4.0 / 3.0) * (q * big);
            [a, b, c, d]
        }
        Nonlinear::Spacing => {
            let a = 8.0 * (&t2 * d2);
            let b = 8.0
                * (6.0 * (t * d1.sq()) + &t2 * d1 - 2.0 * t - t * v - 16.0 * d1 - 4.0 * (v * d1));
            let c = 8.0 * (Jet::constant(2.0, t.len()) + v - t * d1 - 2.0 * d1.sq());
            let t3 = &t2 * t;
            let t4 = &t2 * &t2;
            let p = &t2 * d2;
            let bracket = &p * (&p + 2.0 * (t * d1) - 2.0 * v)
                + &t4 * d1.sq()
                + 4.0 * (&t3 * d1.sq() * d1)
                - 2.0 * (&t3 * v * d1)
                - 2.0 * (&t3 * d1)
                + 16.0 * (&t2 * d1.sq())
                + &t2 * v.sq()
                + 2.0 * (&t2 * v)
                - 10.0 * (t * v.sq() * d1)
                - 64.0 * (t * v * d1)
                - 96.0 * (t * d1)
                + 6.0 * (v.sq() * v)
                + 48.0 * v.sq()
                + 96.0 * v;
            let d = (2.0 / 3.0) * bracket;
            [a, b, c, d]
        }
    }
}
