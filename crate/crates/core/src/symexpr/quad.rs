//! Deterministic adaptive quadrature.
//!
//! One-dimensional integrals use an adaptive Gauss–Kronrod 7/15 pair, boxes
//! of dimension two and more use the Genz–Malik degree 7/5 rule with
//! bisection along the axis of largest fourth difference. Simplices are
//! mapped onto the unit cube by the Duffy (collapsed coordinate) transform.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use super::SymError;

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on integrand evaluations per top-level integral.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Node budget, overridable through `LEAFSPACE_QUAD_BUDGET`.
pub fn default_budget() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var("LEAFSPACE_QUAD_BUDGET")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .filter(|&n| n > 0)
            .unwrap_or(DEFAULT_BUDGET)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub tol: f64,
    pub budget: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol: DEFAULT_TOL,
            budget: default_budget(),
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        QuadConfig {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Piece {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

pub type Integrand<'a> = dyn FnMut(&[f64]) -> Result<f64, SymError> + 'a;

fn gk15(f: &mut Integrand<'_>, a: f64, b: f64, pt: &mut [f64]) -> Result<(f64, f64), SymError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let pts: &[f64] = if x == 0.0 { &[0.0] } else { &[x, -x] };
        for &s in pts {
            pt[0] = c + h * s;
            let v = f(pt)?;
            k += w * v;
            if j % 2 == 1 {
                g += WG[j / 2] * v;
            }
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

struct GenzMalik {
    dim: usize,
    l2: f64,
    l3: f64,
    l4: f64,
    l5: f64,
    w7: [f64; 5],
    w5: [f64; 4],
    ratio: f64,
}

impl GenzMalik {
    fn new(dim: usize) -> Self {
        let d = dim as f64;
        GenzMalik {
            dim,
            l2: (9.0f64 / 70.0).sqrt(),
            l3: (9.0f64 / 10.0).sqrt(),
            l4: (9.0f64 / 10.0).sqrt(),
            l5: (9.0f64 / 19.0).sqrt(),
            w7: [
                (12824.0 - 9120.0 * d + 400.0 * d * d) / 19683.0,
                980.0 / 6561.0,
                (1820.0 - 400.0 * d) / 19683.0,
                200.0 / 19683.0,
                6859.0 / 19683.0 / 2f64.powi(dim as i32),
            ],
            w5: [
                (729.0 - 950.0 * d + 50.0 * d * d) / 729.0,
                245.0 / 486.0,
                (265.0 - 100.0 * d) / 1458.0,
                25.0 / 729.0,
            ],
            ratio: (9.0 / 70.0) / (9.0 / 10.0),
        }
    }

    fn nodes(&self) -> usize {
        let d = self.dim;
        1 + 4 * d + 2 * d * (d - 1) + (1 << d)
    }

    // Returns (value, error, split axis).
    fn apply(
        &self,
        f: &mut Integrand<'_>,
        lo: &[f64],
        hi: &[f64],
        pt: &mut [f64],
    ) -> Result<(f64, f64, usize), SymError> {
        let d = self.dim;
        let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let h: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();

        pt.copy_from_slice(&c);
        let f0 = f(pt)?;
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        let mut best_axis = 0;
        let mut best_diff = -1.0;
        for i in 0..d {
            let mut eval_at = |off: f64, pt: &mut [f64]| -> Result<f64, SymError> {
                pt.copy_from_slice(&c);
                pt[i] += off * h[i];
                f(pt)
            };
            let a2 = eval_at(self.l2, pt)? + eval_at(-self.l2, pt)?;
            let a3 = eval_at(self.l3, pt)? + eval_at(-self.l3, pt)?;
            s2 += a2;
            s3 += a3;
            let diff = ((a2 - 2.0 * f0) - self.ratio * (a3 - 2.0 * f0)).abs();
            if diff > best_diff * (1.0 + 1e-12) {
                best_diff = diff;
                best_axis = i;
            }
        }
        let mut s4 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    pt.copy_from_slice(&c);
                    pt[i] += si * self.l4 * h[i];
                    pt[j] += sj * self.l4 * h[j];
                    s4 += f(pt)?;
                }
            }
        }
        let mut s5 = 0.0;
        for mask in 0..(1usize << d) {
            for i in 0..d {
                let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                pt[i] = c[i] + s * self.l5 * h[i];
            }
            s5 += f(pt)?;
        }
        let r7 = self.w7[0] * f0 + self.w7[1] * s2 + self.w7[2] * s3 + self.w7[3] * s4 + self.w7[4] * s5;
        let r5 = self.w5[0] * f0 + self.w5[1] * s2 + self.w5[2] * s3 + self.w5[3] * s4;
        Ok((vol * r7, (vol * (r7 - r5)).abs(), best_axis))
    }
}

/// Integrates `f` over the box `[lo_i, hi_i]`. Bounds with `hi < lo` are
/// oriented: each reversed axis flips the sign.
pub fn integrate_box(
    f: &mut Integrand<'_>,
    lo: &[f64],
    hi: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadOutcome, SymError> {
    let dim = lo.len();
    let mut sign = 1.0;
    let mut a = lo.to_vec();
    let mut b = hi.to_vec();
    for i in 0..dim {
        if b[i] < a[i] {
            std::mem::swap(&mut a[i], &mut b[i]);
            sign = -sign;
        }
    }
    if dim == 0 {
        let v = f(&[])?;
        return Ok(QuadOutcome {
            value: v,
            error: 0.0,
            evaluations: 1,
        });
    }
    if a.iter().zip(&b).any(|(x, y)| x == y) {
        return Ok(QuadOutcome {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut pt = vec![0.0; dim];
    let gm = (dim >= 2).then(|| GenzMalik::new(dim));
    let per_piece = gm.as_ref().map_or(15, |g| g.nodes());
    let rule = |f: &mut Integrand<'_>, lo: &[f64], hi: &[f64], pt: &mut [f64]| match &gm {
        Some(g) => g.apply(f, lo, hi, pt),
        None => gk15(f, lo[0], hi[0], pt).map(|(v, e)| (v, e, 0)),
    };

    let (v0, e0, ax0) = rule(f, &a, &b, &mut pt)?;
    let mut evaluations = per_piece;
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        lo: a,
        hi: b,
        value: v0,
        error: e0,
        split_axis: ax0,
    });
    let mut finished_value = 0.0;
    let mut finished_error = 0.0;
    loop {
        let total_err: f64 = finished_error + heap.iter().map(|p| p.error).sum::<f64>();
        if total_err <= cfg.tol || heap.is_empty() {
            let value: f64 = finished_value + heap.iter().map(|p| p.value).sum::<f64>();
            return Ok(QuadOutcome {
                value: sign * value,
                error: total_err,
                evaluations,
            });
        }
        if evaluations + 2 * per_piece > cfg.budget {
            return Err(SymError::QuadratureBudget {
                evaluations,
                error: total_err,
                tol: cfg.tol,
            });
        }
        let worst = heap.pop().expect("heap not empty");
        let ax = worst.split_axis;
        let width = worst.hi[ax] - worst.lo[ax];
        let scale = worst.lo[ax].abs().max(worst.hi[ax].abs()).max(1.0);
        if width <= 1e-13 * scale {
            // cannot refine further in floating point
            finished_value += worst.value;
            finished_error += worst.error;
            continue;
        }
        let mid = worst.lo[ax] + 0.5 * width;
        let mut left_hi = worst.hi.clone();
        left_hi[ax] = mid;
        let mut right_lo = worst.lo.clone();
        right_lo[ax] = mid;
        let (vl, mut el, al) = rule(f, &worst.lo, &left_hi, &mut pt)?;
        let (vr, mut er, ar) = rule(f, &right_lo, &worst.hi, &mut pt)?;
        evaluations += 2 * per_piece;
        if gm.is_some() {
            // The embedded degree-5 difference grossly overestimates the
            // degree-7 error; use the parent/children discrepancy instead.
            let e = (worst.value - vl - vr).abs();
            let (wl, wr) = if el + er > 0.0 { (el / (el + er), er / (el + er)) } else { (0.5, 0.5) };
            el = e * wl;
            er = e * wr;
        }
        heap.push(Piece {
            lo: worst.lo,
            hi: left_hi,
            value: vl,
            error: el,
            split_axis: al,
        });
        heap.push(Piece {
            lo: right_lo,
            hi: worst.hi,
            value: vr,
            error: er,
            split_axis: ar,
        });
    }
}

/// Oriented one-dimensional integral `∫_a^b f`.
pub fn integrate_interval(
    f: &mut Integrand<'_>,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadOutcome, SymError> {
    integrate_box(f, &[a], &[b], cfg)
}

/// Integrates over the unit cube `[0,1]^s`.
pub fn integrate_cube(f: &mut Integrand<'_>, s: usize, cfg: &QuadConfig) -> Result<QuadOutcome, SymError> {
    integrate_box(f, &vec![0.0; s], &vec![1.0; s], cfg)
}

/// Maps `u ∈ [0,1]^k` to the standard simplex and returns the Jacobian.
pub fn duffy(u: &[f64], t: &mut [f64]) -> f64 {
    let k = u.len();
    let mut rest = 1.0;
    let mut jac = 1.0;
    for i in 0..k {
        t[i] = rest * u[i];
        if i + 1 < k {
            rest *= 1.0 - u[i];
            jac *= rest;
        }
    }
    jac
}

/// Integrates over the standard simplex `{t_i >= 0, sum t_i <= 1}` in `k`
/// variables. The integrand receives `t_1..t_k`.
pub fn integrate_simplex(
    f: &mut Integrand<'_>,
    k: usize,
    cfg: &QuadConfig,
) -> Result<QuadOutcome, SymError> {
    let mut t = vec![0.0; k];
    let mut g = |u: &[f64]| -> Result<f64, SymError> {
        let jac = duffy(u, &mut t);
        if jac == 0.0 {
            return Ok(0.0);
        }
        Ok(jac * f(&t)?)
    };
    integrate_cube(&mut g, k, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(f: impl Fn(&[f64]) -> f64) -> impl FnMut(&[f64]) -> Result<f64, SymError> {
        move |x| Ok(f(x))
    }

    #[test]
    fn gauss_kronrod_smooth() {
        let cfg = QuadConfig::with_tol(1e-12);
        let r = integrate_interval(&mut ok(|x| x[0].exp()), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let r = integrate_interval(&mut ok(|x| x[0].exp()), 1.0, 0.0, &cfg).unwrap();
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn genz_malik_polynomials() {
        for d in 2..=4 {
            let cfg = QuadConfig::with_tol(1e-12);
            let f = |x: &[f64]| x.iter().map(|v| v.powi(6)).sum::<f64>() + x[0] * x[1].powi(4);
            let r = integrate_cube(&mut ok(f), d, &cfg).unwrap();
            let exact = d as f64 / 7.0 + 0.1;
            assert!((r.value - exact).abs() < 1e-12, "d={d} {}", r.value);
            assert!(r.evaluations < 1000, "d={d} used {}", r.evaluations);
        }
    }

    #[test]
    fn simplex_volume_and_moment() {
        let cfg = QuadConfig::with_tol(1e-12);
        for k in 1..=4usize {
            let r = integrate_simplex(&mut ok(|_| 1.0), k, &cfg).unwrap();
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            assert!((r.value - 1.0 / fact).abs() < 1e-12);
        }
        // ∫_{Δ²} t1 t2 = 1/24
        let r = integrate_simplex(&mut ok(|t| t[0] * t[1]), 2, &cfg).unwrap();
        assert!((r.value - 1.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let cfg = QuadConfig {
            tol: 1e-14,
            budget: 200,
        };
        let err = integrate_cube(&mut ok(|x| (x[0] - 0.3).abs().sqrt() * (x[1] - 0.7).abs()), 2, &cfg)
            .unwrap_err();
        assert!(matches!(err, SymError::QuadratureBudget { .. }));
    }

    #[test]
    fn integrand_errors_propagate() {
        let cfg = QuadConfig::default();
        let err = integrate_interval(
            &mut |_x: &[f64]| Err(SymError::Unassigned("x1".into())),
            0.0,
            1.0,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, SymError::Unassigned(_)));
    }

    #[test]
    fn smooth_rational_3d() {
        let cfg = QuadConfig::with_tol(1e-10);
        // ∫_{[0,1]^3} 1/(1+x+y+z) has closed form
        let r = integrate_cube(&mut ok(|x| 1.0 / (1.0 + x[0] + x[1] + x[2])), 3, &cfg).unwrap();
        let l = |v: f64| if v > 0.0 { v * v * v.ln() } else { 0.0 };
        // third difference of u^2 ln u / 2 (the polynomial part cancels)
        let exact = 0.5 * (-l(1.0) + 3.0 * l(2.0) - 3.0 * l(3.0) + l(4.0));
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn deterministic() {
        let cfg = QuadConfig::with_tol(1e-10);
        let f = |x: &[f64]| (3.0 * x[0] * x[1]).sin() / (1.0 + x[2]);
        let a = integrate_cube(&mut ok(f), 3, &cfg).unwrap();
        let b = integrate_cube(&mut ok(f), 3, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
