//! Analytic test surfaces on the unit cube.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// A deterministic surface `[0,1]^d → ℝ`.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub dims: usize,
    /// Physical range of each input; unit-cube inputs are mapped affinely onto these.
    pub ranges: &'static [(f64, f64)],
    eval: fn(&[f64]) -> f64,
}

impl TestFunction {
    /// Evaluates at a point of the unit cube.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dims, "{} takes {} inputs", self.name, self.dims);
        (self.eval)(x)
    }

    pub fn eval_rows(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let mut row = vec![0.0; x.ncols()];
        (0..x.nrows())
            .map(|i| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = x[(i, k)];
                }
                self.eval(&row)
            })
            .collect()
    }
}

const UNIT8: [(f64, f64); 8] = [(0.0, 1.0); 8];
const UNIT20: [(f64, f64); 20] = [(0.0, 1.0); 20];

/// `r_w, r, T_u, H_u, T_l, H_l, L, K_w`.
pub const BOREHOLE_RANGES: [(f64, f64); 8] = [
    (0.05, 0.15),
    (100.0, 50_000.0),
    (63_070.0, 115_600.0),
    (990.0, 1_110.0),
    (63.1, 116.0),
    (700.0, 820.0),
    (1_120.0, 1_680.0),
    (9_855.0, 12_045.0),
];

/// Columns of the 8-D borehole input kept by the 4-D projection (`r_w, T_u, T_l, L`).
pub const BOREHOLE4_COORDS: [usize; 4] = [0, 2, 4, 6];

const BOREHOLE4_RANGES: [(f64, f64); 4] =
    [BOREHOLE_RANGES[0], BOREHOLE_RANGES[2], BOREHOLE_RANGES[4], BOREHOLE_RANGES[6]];

/// `R_b1, R_b2, R_f, R_c1, R_c2, β`.
pub const OTL_RANGES: [(f64, f64); 6] =
    [(50.0, 150.0), (25.0, 70.0), (0.5, 3.0), (1.2, 2.5), (0.25, 1.2), (50.0, 300.0)];

fn scale(u: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + u * (hi - lo)
}

/// Water flow through a borehole.
pub fn borehole(x: &[f64]) -> f64 {
    let p: Vec<f64> = x.iter().zip(BOREHOLE_RANGES).map(|(&u, r)| scale(u, r)).collect();
    let [rw, r, tu, hu, tl, hl, l, kw] = p[..] else { unreachable!("eight inputs") };
    let log_ratio = (r / rw).ln();
    2.0 * PI * tu * (hu - hl) / (log_ratio * (1.0 + 2.0 * l * tu / (log_ratio * rw * rw * kw) + tu / tl))
}

/// Borehole restricted to `r_w, T_u, T_l, L`, the rest held at mid-range.
pub fn borehole4(x: &[f64]) -> f64 {
    let mut full = [0.5; 8];
    for (&k, &v) in BOREHOLE4_COORDS.iter().zip(x) {
        full[k] = v;
    }
    borehole(&full)
}

/// `V_b1 = 12 R_b2 / (R_b1 + R_b2)`.
pub fn otl_vb1(rb1: f64, rb2: f64) -> f64 {
    12.0 * rb2 / (rb1 + rb2)
}

fn otl_terms(lead: f64, p: &[f64]) -> f64 {
    let [_, _, rf, rc1, rc2, beta] = p[..] else { unreachable!("six inputs") };
    let b = beta * (rc2 + 9.0);
    (lead + 0.74) * b / (b + rf) + 11.35 * rf / (b + rf) + 0.74 * rf * b / ((b + rf) * rc1)
}

fn otl_physical(x: &[f64]) -> Vec<f64> {
    x.iter().zip(OTL_RANGES).map(|(&u, r)| scale(u, r)).collect()
}

/// Midpoint voltage of the OTL push-pull circuit (standard form, `V_b1` in the first term).
pub fn otl(x: &[f64]) -> f64 {
    let p = otl_physical(x);
    otl_terms(otl_vb1(p[0], p[1]), &p)
}

/// OTL variant with `R_b1` in place of `V_b1` in the first term.
pub fn otl_literal(x: &[f64]) -> f64 {
    let p = otl_physical(x);
    otl_terms(p[0], &p)
}

/// Dette-Pepelyshev 8-D curved function (native unit-cube domain).
pub fn dette_pepelyshev(x: &[f64]) -> f64 {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    let mut v = 4.0 * (x1 - 2.0 + 8.0 * x2 - 8.0 * x2 * x2).powi(2)
        + (3.0 - 4.0 * x2).powi(2)
        + 16.0 * (x3 + 1.0).sqrt() * (2.0 * x3 - 1.0).powi(2);
    let mut inner = 0.0;
    for k in 3..=8 {
        inner += x[k - 1];
        if k >= 4 {
            v += k as f64 * (1.0 + inner).ln();
        }
    }
    v
}

/// Morris transformed input `w_i` (1-based `i`).
pub fn morris_w(i: usize, xi: f64) -> f64 {
    if matches!(i, 3 | 5 | 7) {
        2.0 * (1.1 * xi / (xi + 0.1) - 0.5)
    } else {
        2.0 * (xi - 0.5)
    }
}

/// Morris coefficients, 1-based.
pub fn morris_beta1(i: usize) -> f64 {
    if i <= 10 {
        20.0
    } else {
        sign(i)
    }
}

pub fn morris_beta2(i: usize, j: usize) -> f64 {
    if i <= 6 && j <= 6 {
        -15.0
    } else {
        sign(i + j)
    }
}

pub fn morris_beta3(i: usize, j: usize, l: usize) -> f64 {
    if i <= 5 && j <= 5 && l <= 5 {
        10.0
    } else {
        0.0
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Morris 20-D function.
pub fn morris(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().enumerate().map(|(k, &v)| morris_w(k + 1, v)).collect();
    let mut v = 5.0 * w[0] * w[1] * w[2] * w[3];
    for i in 1..=20 {
        v += morris_beta1(i) * w[i - 1];
        for j in (i + 1)..=20 {
            v += morris_beta2(i, j) * w[i - 1] * w[j - 1];
        }
    }
    // only i < j < l ≤ 5 carry a nonzero third-order coefficient
    for i in 1..=5 {
        for j in (i + 1)..=5 {
            for l in (j + 1)..=5 {
                v += morris_beta3(i, j, l) * w[i - 1] * w[j - 1] * w[l - 1];
            }
        }
    }
    v
}

pub static BOREHOLE: TestFunction = TestFunction { name: "borehole", dims: 8, ranges: &BOREHOLE_RANGES, eval: borehole };
pub static BOREHOLE4: TestFunction = TestFunction { name: "borehole4", dims: 4, ranges: &BOREHOLE4_RANGES, eval: borehole4 };
pub static OTL: TestFunction = TestFunction { name: "otl", dims: 6, ranges: &OTL_RANGES, eval: otl };
pub static OTL_LITERAL: TestFunction = TestFunction { name: "otl-literal", dims: 6, ranges: &OTL_RANGES, eval: otl_literal };
pub static DETPEP: TestFunction = TestFunction { name: "detpep", dims: 8, ranges: &UNIT8, eval: dette_pepelyshev };
pub static MORRIS: TestFunction = TestFunction { name: "morris", dims: 20, ranges: &UNIT20, eval: morris };

pub static ALL: [&TestFunction; 6] = [&BOREHOLE, &BOREHOLE4, &OTL, &OTL_LITERAL, &DETPEP, &MORRIS];

/// Looks a function up by name. `borehole` with `d = 4` resolves to the projection.
pub fn lookup(name: &str, d: Option<usize>) -> Option<&'static TestFunction> {
    let f = match (name, d) {
        ("borehole", Some(4)) => &BOREHOLE4,
        _ => *ALL.iter().find(|f| f.name == name)?,
    };
    match d {
        Some(d) if d != f.dims => None,
        _ => Some(f),
    }
}

pub fn names() -> Vec<&'static str> {
    ALL.iter().map(|f| f.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Separate transcription of the borehole formula in physical units.
    fn borehole_oracle(rw: f64, r: f64, tu: f64, hu: f64, tl: f64, hl: f64, l: f64, kw: f64) -> f64 {
        let a = (r / rw).ln();
        let num = 2.0 * std::f64::consts::PI * tu * (hu - hl);
        let den = a * (1.0 + (2.0 * l * tu) / (a * rw.powi(2) * kw) + tu / tl);
        num / den
    }

    #[test]
    fn borehole_midpoint() {
        let expect = borehole_oracle(0.10, 25_050.0, 89_335.0, 1_050.0, 89.55, 760.0, 1_400.0, 10_950.0);
        assert_relative_eq!(borehole(&[0.5; 8]), expect, max_relative = 1e-10);
        assert_relative_eq!(borehole4(&[0.5; 4]), borehole(&[0.5; 8]), max_relative = 0.0);
    }

    #[test]
    fn borehole_shape() {
        assert_ne!(borehole(&[0.2; 8]), borehole(&[0.7; 8]));
        let mut lo = [0.5; 8];
        let mut hi = [0.5; 8];
        lo[3] = 0.2;
        hi[3] = 0.8;
        assert!(borehole(&hi) > borehole(&lo));
        assert_ne!(borehole4(&[0.1, 0.5, 0.5, 0.5]), borehole4(&[0.9, 0.5, 0.5, 0.5]));
    }

    #[test]
    fn otl_examples() {
        // independent transcription at the midpoint
        let (rb1, rb2, rf, rc1, rc2, beta) = (100.0, 47.5, 1.75, 1.85, 0.725, 175.0);
        let vb1 = 12.0 * rb2 / (rb1 + rb2);
        let g = beta * (rc2 + 9.0);
        let expect = (vb1 + 0.74) * g / (g + rf) + 11.35 * rf / (g + rf) + 0.74 * rf * g / ((g + rf) * rc1);
        assert_relative_eq!(otl(&[0.5; 6]), expect, max_relative = 1e-10);
        assert_eq!(otl_vb1(60.0, 60.0), 6.0);
        let literal = (rb1 + 0.74) * g / (g + rf) + 11.35 * rf / (g + rf) + 0.74 * rf * g / ((g + rf) * rc1);
        assert_relative_eq!(otl_literal(&[0.5; 6]), literal, max_relative = 1e-10);
    }

    #[test]
    fn otl_positive_over_sweep() {
        let x = crate::designs::maximin_lhs(1000, 6, 3, 0);
        assert!(OTL.eval_rows(&x).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn dette_pepelyshev_examples() {
        assert_eq!(dette_pepelyshev(&[0.0; 8]), 41.0);
        let mut x = [0.3; 8];
        x[1] = 0.75;
        let mut y = x;
        y[1] = 0.7;
        // second term vanishes at x2 = 0.75
        let first = |x2: f64| 4.0 * (0.3 - 2.0 + 8.0 * x2 - 8.0 * x2 * x2).powi(2);
        assert_relative_eq!(dette_pepelyshev(&x) - first(0.75), dette_pepelyshev(&y) - first(0.7) - (3.0f64 - 2.8).powi(2), max_relative = 1e-12);
        // literal nested sum at 0.5
        let mut expect = 4.0 * (0.5f64 - 2.0 + 4.0 - 2.0).powi(2) + 1.0 + 0.0;
        for k in 4..=8 {
            expect += k as f64 * (1.0 + 0.5 * (k - 2) as f64).ln();
        }
        assert_relative_eq!(dette_pepelyshev(&[0.5; 8]), expect, max_relative = 1e-10);
    }

    /// Naive triple loop over every index with the coefficient rules.
    fn morris_oracle(x: &[f64]) -> f64 {
        let w: Vec<f64> = (1..=20)
            .map(|i| {
                let xi = x[i - 1];
                if i == 3 || i == 5 || i == 7 {
                    2.0 * (1.1 * xi / (xi + 0.1) - 0.5)
                } else {
                    2.0 * (xi - 0.5)
                }
            })
            .collect();
        let b1 = |i: usize| if i <= 10 { 20.0 } else { (-1f64).powi(i as i32) };
        let b2 = |i: usize, j: usize| if i <= 6 && j <= 6 { -15.0 } else { (-1f64).powi((i + j) as i32) };
        let b3 = |i: usize, j: usize, l: usize| if i <= 5 && j <= 5 && l <= 5 { 10.0 } else { 0.0 };
        let mut total = 0.0;
        for i in 1..=20 {
            total += b1(i) * w[i - 1];
            for j in 1..=20 {
                if i < j {
                    total += b2(i, j) * w[i - 1] * w[j - 1];
                }
                for l in 1..=20 {
                    if i < j && j < l {
                        total += b3(i, j, l) * w[i - 1] * w[j - 1] * w[l - 1];
                    }
                }
            }
        }
        total + 5.0 * w[0] * w[1] * w[2] * w[3]
    }

    #[test]
    fn morris_examples() {
        assert_relative_eq!(morris_w(3, 0.5), 5.0 / 6.0, max_relative = 1e-15);
        assert_eq!(morris_beta2(2, 3), -15.0);
        assert_eq!(morris_beta2(2, 7), -1.0);
        let expect = 50.0 - 13.0 * 25.0 / 36.0;
        assert_relative_eq!(morris(&[0.5; 20]), expect, max_relative = 1e-12);
        assert_relative_eq!(morris_oracle(&[0.5; 20]), expect, max_relative = 1e-12);
    }

    #[test]
    fn morris_matches_naive_loop() {
        let x = crate::designs::random_lhs(100, 20, 17);
        for i in 0..100 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let (a, b) = (morris(&row), morris_oracle(&row));
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn registry() {
        assert_eq!(lookup("borehole", Some(4)).unwrap().name, "borehole4");
        assert_eq!(lookup("borehole", None).unwrap().dims, 8);
        assert!(lookup("otl", Some(5)).is_none());
        assert!(lookup("nope", None).is_none());
        for f in ALL {
            let x = crate::designs::random_lhs(20, f.dims, 1);
            assert!(f.eval_rows(&x).iter().all(|v| v.is_finite()));
        }
    }
}
