use std::fmt;

use num_integer::Integer;

/// `f(n) = Σ bit_i(n) 2^{-i-1}`: the binary digits of `n` reversed after the point.
pub fn dense_encode(mut n: u64) -> f64 {
    let mut out = 0.0;
    let mut w = 0.5;
    while n > 0 {
        if n & 1 == 1 {
            out += w;
        }
        n >>= 1;
        w *= 0.5;
    }
    out
}

/// Integer polynomial with coefficients in ascending degree order.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct IntPoly {
    pub coeffs: Vec<i64>,
}

impl IntPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &c)| acc * x + (k as i64 * c) as f64)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mag = c.unsigned_abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            }
            first = false;
            match (k, mag) {
                (0, m) => write!(f, "{m}")?,
                (_, 1) => {}
                (_, m) => write!(f, "{m}")?,
            }
            match k {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

const ROOT_TOL: f64 = 1e-6;
const MIN_SLOPE: f64 = 1e-3;

/// Lowest-degree primitive integer polynomial (positive leading coefficient,
/// coefficients bounded by `max_coeff`) vanishing at `value`, preferring the
/// smallest `|p(value)|` within a degree.
pub fn minpoly_probe(value: f64, max_degree: usize, max_coeff: i64) -> Option<IntPoly> {
    let m = max_coeff;
    for deg in 1..=max_degree {
        let mut best: Option<(f64, IntPoly)> = None;
        // coeffs[1..=deg] enumerated; the constant term is fixed by rounding
        let mut upper = vec![-m; deg];
        upper[deg - 1] = 1;
        loop {
            let partial = upper.iter().rev().fold(0.0, |acc, &c| acc * value + c as f64) * value;
            let c0 = (-partial).round();
            if c0.abs() <= m as f64 {
                let mut coeffs = vec![c0 as i64];
                coeffs.extend_from_slice(&upper);
                let content = coeffs.iter().fold(0i64, |g, &c| g.gcd(&c));
                if content == 1 {
                    let p = IntPoly { coeffs };
                    let r = p.eval(value).abs();
                    if r < ROOT_TOL && p.derivative_at(value).abs() > MIN_SLOPE && best.as_ref().is_none_or(|(b, _)| r < *b) {
                        best = Some((r, p));
                    }
                }
            }
            // odometer over coefficients 1..deg-1, then the leading one
            let mut k = 0;
            loop {
                if k == deg {
                    break;
                }
                let top = m;
                if upper[k] < top {
                    upper[k] += 1;
                    break;
                }
                upper[k] = if k == deg - 1 { 1 } else { -m };
                k += 1;
            }
            if k == deg {
                break;
            }
        }
        if let Some((_, p)) = best {
            return Some(p);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(dense_encode(0), 0.0);
        assert_eq!(dense_encode(1), 0.5);
        assert_eq!(dense_encode(2), 0.25);
        assert_eq!(dense_encode(3), 0.75);
    }

    #[test]
    fn display() {
        assert_eq!(IntPoly { coeffs: vec![-2, 0, 1] }.to_string(), "x^2 - 2");
        assert_eq!(IntPoly { coeffs: vec![-1, 2] }.to_string(), "2x - 1");
        assert_eq!(IntPoly { coeffs: vec![-1, -1, 1] }.to_string(), "x^2 - x - 1");
        assert_eq!(IntPoly { coeffs: vec![0, -3, 0, 2] }.to_string(), "2x^3 - 3x");
    }

    #[test]
    fn eval_and_slope() {
        let p = IntPoly { coeffs: vec![-2, 0, 1] };
        assert_eq!(p.eval(3.0), 7.0);
        assert_eq!(p.derivative_at(3.0), 6.0);
    }
}
