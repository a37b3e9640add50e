//! Exponential-kernel convolutions on a uniform grid.
//!
//! Each cell `[t_i, t_{i+1}]` interpolates the integrand, either linearly
//! or by the cubic through `t_{i-1}, .., t_{i+2}`, and integrates it exactly
//! against the kernel, so constants are reproduced to round-off. The linear
//! rule has non-negative weights and so preserves order; the cubic one is
//! fourth-order accurate but does not. Outside
//! the grid the integrand follows an [`ExpPoly`] tail model and its
//! contribution is evaluated in closed form.

/// One term `poly(v) e^{rate v}`, `poly` in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub rate: f64,
    pub poly: Vec<f64>,
}

/// Sum of exponential-polynomial terms in the offset `v = t - anchor`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    pub terms: Vec<Term>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(a: f64) -> Self {
        Self::exp(a, 0.0)
    }

    pub fn exp(a: f64, rate: f64) -> Self {
        Self {
            terms: vec![Term { rate, poly: vec![a] }],
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let p = t.poly.iter().rev().fold(0.0, |acc, &a| acc * v + a);
                p * (t.rate * v).exp()
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            for a in &mut t.poly {
                *a *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut poly = vec![0.0; a.poly.len() + b.poly.len() - 1];
                for (i, x) in a.poly.iter().enumerate() {
                    for (j, y) in b.poly.iter().enumerate() {
                        poly[i + j] += x * y;
                    }
                }
                terms.push(Term {
                    rate: a.rate + b.rate,
                    poly,
                });
            }
        }
        Self { terms }
    }

    /// The same function expressed in `v' = v - delta`, i.e. `g(v') = f(v' + delta)`.
    pub fn translate(&self, delta: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let n = t.poly.len();
                let mut poly = vec![0.0; n];
                for (k, &a) in t.poly.iter().enumerate() {
                    for j in 0..=k {
                        poly[j] += a * binomial(k, j) * delta.powi((k - j) as i32);
                    }
                }
                let s = (t.rate * delta).exp();
                poly.iter_mut().for_each(|a| *a *= s);
                Term { rate: t.rate, poly }
            })
            .collect();
        Self { terms }
    }

    /// `∫_0^∞ v^power e^{-κv} f(v) dv`; every rate must be below `κ`.
    pub fn right_integral(&self, kappa: f64, power: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a = kappa - t.rate;
                t.poly
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * factorial(k + power) / a.powi((k + power + 1) as i32))
                    .sum::<f64>()
            })
            .sum()
    }

    /// `∫_{-∞}^0 e^{κv} f(v) dv`; every rate must exceed `-κ`.
    pub fn left_integral(&self, kappa: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a = kappa + t.rate;
                t.poly
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        sign * c * factorial(k) / a.powi(k as i32 + 1)
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// `m_j = ∫_0^1 s^j e^{-xs} ds` for `j = 0..=4`.
fn moments(x: f64) -> [f64; 5] {
    let mut m = [0.0; 5];
    if x.abs() < 2.0 {
        for (j, mj) in m.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 0..60 {
                if k > 0 {
                    term *= -x / k as f64;
                }
                let add = term / (j + k + 1) as f64;
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *mj = sum;
        }
    } else {
        let e = (-x).exp();
        m[0] = -(-x).exp_m1() / x;
        for j in 1..5 {
            m[j] = (j as f64 * m[j - 1] - e) / x;
        }
    }
    m
}

/// Monomial coefficients of the cubic Lagrange basis on nodes `s = -1, 0, 1, 2`.
const LAGRANGE: [[f64; 4]; 4] = [
    [0.0, -1.0 / 3.0, 0.5, -1.0 / 6.0],
    [1.0, -0.5, -1.0, 0.5],
    [0.0, 1.0, 0.5, -0.5],
    [0.0, -1.0 / 6.0, 0.0, 1.0 / 6.0],
];

/// Interpolation used inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Linear,
    Cubic,
}

/// Cell weights for `∫_0^d u^power e^{-κu} F(t_i + u) du` acting on
/// `F(t_{i-1}), F(t_i), F(t_{i+1}), F(t_{i+2})`.
#[derive(Debug, Clone, Copy)]
pub struct CellWeights {
    pub w: [f64; 4],
    /// `e^{-κd}`
    pub decay: f64,
}

impl CellWeights {
    pub fn new(kappa: f64, d: f64, power: usize, rule: Rule) -> Self {
        let m = moments(kappa * d);
        let scale = d.powi(power as i32 + 1);
        let decay = (-kappa * d).exp();
        if rule == Rule::Linear {
            let w = [0.0, scale * (m[power] - m[power + 1]), scale * m[power + 1], 0.0];
            return Self { w, decay };
        }
        let mut w = [0.0; 4];
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = scale
                * LAGRANGE[k]
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * m[j + power])
                    .sum::<f64>();
        }
        Self { w, decay }
    }

    #[inline]
    fn apply(&self, a: f64, b: f64, c: f64, e: f64) -> f64 {
        self.w[0] * a + self.w[1] * b + self.w[2] * c + self.w[3] * e
    }
}

/// Samples of an integrand on the grid plus one ghost value on each side.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub f: &'a [f64],
    pub ghost_left: f64,
    pub ghost_right: f64,
}

impl Samples<'_> {
    #[inline]
    fn at(&self, i: isize) -> f64 {
        if i < 0 {
            self.ghost_left
        } else if i as usize >= self.f.len() {
            self.ghost_right
        } else {
            self.f[i as usize]
        }
    }
}

/// `R_i = ∫_{t_i}^∞ e^{-κ(s - t_i)} F(s) ds`, given `tail = R_{n-1}`.
pub fn right_conv(s: Samples, kappa: f64, d: f64, tail: f64, rule: Rule) -> Vec<f64> {
    let n = s.f.len();
    let cw = CellWeights::new(kappa, d, 0, rule);
    let mut r = vec![0.0; n];
    r[n - 1] = tail;
    for i in (0..n - 1).rev() {
        let k = i as isize;
        let local = cw.apply(s.at(k - 1), s.at(k), s.at(k + 1), s.at(k + 2));
        r[i] = local + cw.decay * r[i + 1];
    }
    r
}

/// `L_i = ∫_{-∞}^{t_i} e^{-κ(t_i - s)} F(s) ds`, given `tail = L_0`.
pub fn left_conv(s: Samples, kappa: f64, d: f64, tail: f64, rule: Rule) -> Vec<f64> {
    let n = s.f.len();
    let cw = CellWeights::new(kappa, d, 0, rule);
    let mut l = vec![0.0; n];
    l[0] = tail;
    for i in 0..n - 1 {
        let k = i as isize;
        let local = cw.apply(s.at(k + 2), s.at(k + 1), s.at(k), s.at(k - 1));
        l[i + 1] = local + cw.decay * l[i];
    }
    l
}

/// Eight-point Gauss-Legendre nodes and weights on `[0, 1]`.
const GAUSS8: [(f64, f64); 8] = [
    (0.019_855_071_751_231_856, 0.050_614_268_145_188_13),
    (0.101_666_761_293_186_6, 0.111_190_517_226_687_24),
    (0.237_233_795_041_835_5, 0.156_853_322_938_943_64),
    (0.408_282_678_752_175_1, 0.181_341_891_689_180_99),
    (0.591_717_321_247_824_9, 0.181_341_891_689_180_99),
    (0.762_766_204_958_164_5, 0.156_853_322_938_943_64),
    (0.898_333_238_706_813_4, 0.111_190_517_226_687_24),
    (0.980_144_928_248_768_2, 0.050_614_268_145_188_13),
];

/// `(e^{-λu} - e^{-μu}) / (μ - λ)` without cancellation; `u e^{-λu}` when `μ = λ`.
pub fn gap_kernel(lambda: f64, mu: f64, u: f64) -> f64 {
    let delta = mu - lambda;
    if delta * u == 0.0 {
        return u * (-lambda * u).exp();
    }
    -(-lambda * u).exp() * (-delta * u).exp_m1() / delta
}

/// `D_i = ∫_{t_i}^∞ k(s - t_i) F(s) ds` for `k = `[`gap_kernel`]`(λ, μ, ·)`,
/// given `D_{n-1}` and `R^μ_{n-1} = ∫_{t_{n-1}}^∞ e^{-μ(s - t_{n-1})} F(s) ds`.
///
/// Uses `k(d + v) = e^{-λd} k(v) + k(d) e^{-μv}`, so every coefficient of the
/// recursion is non-negative and nothing is formed as a small difference.
pub fn right_conv_gap(
    s: Samples,
    lambda: f64,
    mu: f64,
    d: f64,
    tail: f64,
    tail_mu: f64,
    rule: Rule,
) -> Vec<f64> {
    let n = s.f.len();
    let rmu = right_conv(s, mu, d, tail_mu, rule);
    let mut w = [0.0; 4];
    for &(x, gw) in &GAUSS8 {
        let k = gap_kernel(lambda, mu, x * d) * gw * d;
        match rule {
            Rule::Linear => {
                w[1] += (1.0 - x) * k;
                w[2] += x * k;
            }
            Rule::Cubic => {
                for (j, wj) in w.iter_mut().enumerate() {
                    let basis = LAGRANGE[j].iter().rev().fold(0.0, |acc, &a| acc * x + a);
                    *wj += basis * k;
                }
            }
        }
    }
    let cw = CellWeights {
        w,
        decay: (-lambda * d).exp(),
    };
    let q = gap_kernel(lambda, mu, d);
    let mut out = vec![0.0; n];
    out[n - 1] = tail;
    for i in (0..n - 1).rev() {
        let k = i as isize;
        let local = cw.apply(s.at(k - 1), s.at(k), s.at(k + 1), s.at(k + 2));
        out[i] = local + cw.decay * out[i + 1] + q * rmu[i + 1];
    }
    out
}

/// `P_i = ∫_{t_i}^∞ (s - t_i) e^{-κ(s - t_i)} F(s) ds`, given the tails
/// `P_{n-1}` and the plain convolution `r` from [`right_conv`].
pub fn right_conv_linear(s: Samples, kappa: f64, d: f64, r: &[f64], tail: f64, rule: Rule) -> Vec<f64> {
    let n = s.f.len();
    let cw = CellWeights::new(kappa, d, 1, rule);
    let mut p = vec![0.0; n];
    p[n - 1] = tail;
    for i in (0..n - 1).rev() {
        let k = i as isize;
        let local = cw.apply(s.at(k - 1), s.at(k), s.at(k + 1), s.at(k + 2));
        p[i] = local + cw.decay * (p[i + 1] + d * r[i + 1]);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(x: f64, j: i32) -> f64 {
        // composite Simpson with many panels
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |s: f64| s.powi(j) * (-x * s).exp();
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn moments_match_simpson() {
        for x in [0.0, 1e-6, 0.3, 1.99, 2.0, 5.0, 40.0] {
            let m = moments(x);
            for j in 0..5 {
                assert!((m[j] - brute(x, j as i32)).abs() < 1e-12, "x = {x}, j = {j}");
            }
        }
    }

    #[test]
    fn weights_reproduce_cubics() {
        let (kappa, d) = (1.7, 0.05);
        let cw = CellWeights::new(kappa, d, 0, Rule::Cubic);
        let g = |u: f64| 1.0 - 2.0 * u + 3.0 * u * u - u * u * u;
        let approx = cw.apply(g(-d), g(0.0), g(d), g(2.0 * d));
        let n = 20_000;
        let h = d / n as f64;
        let f = |u: f64| (-kappa * u).exp() * g(u);
        let mut exact = f(0.0) + f(d);
        for i in 1..n {
            exact += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        exact *= h / 3.0;
        assert!((approx - exact).abs() < 1e-15);
    }

    #[test]
    fn constants_are_reproduced() {
        let f = vec![1.0; 500];
        let s = Samples {
            f: &f,
            ghost_left: 1.0,
            ghost_right: 1.0,
        };
        let kappa = 0.4;
        for rule in [Rule::Linear, Rule::Cubic] {
            let r = right_conv(s, kappa, 0.01, 1.0 / kappa, rule);
            let l = left_conv(s, kappa, 0.01, 1.0 / kappa, rule);
            for i in 0..f.len() {
                assert!((r[i] * kappa - 1.0).abs() < 1e-13);
                assert!((l[i] * kappa - 1.0).abs() < 1e-13);
            }
            let p = right_conv_linear(s, kappa, 0.01, &r, 1.0 / (kappa * kappa), rule);
            assert!(p.iter().all(|v| (v * kappa * kappa - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn convolution_of_exponential() {
        // F(s) = e^{-s} on [0, 10]; exact R(t) = e^{-t}/(κ+1).
        let d = 0.01;
        let n = 1001;
        let f: Vec<f64> = (0..n).map(|i| (-(i as f64) * d).exp()).collect();
        let kappa = 3.0;
        let tail = f[n - 1] / (kappa + 1.0);
        let s = Samples {
            f: &f,
            ghost_left: d.exp(),
            ghost_right: f[n - 1] * (-d).exp(),
        };
        let r = right_conv(s, kappa, d, tail, Rule::Cubic);
        for i in 0..n {
            assert!((r[i] - f[i] / (kappa + 1.0)).abs() < 1e-10 * f[i]);
        }
        // second order: error ~ d²/12 relative
        let r = right_conv(s, kappa, d, tail, Rule::Linear);
        for i in 0..n {
            assert!((r[i] - f[i] / (kappa + 1.0)).abs() < 2e-5 * f[i]);
        }
    }

    #[test]
    fn gap_convolution_matches_difference() {
        // F(s) = e^{-s}: ∫_0^∞ k(u) e^{-u} du = 1/((λ+1)(μ+1))
        let d = 0.01;
        let n = 2001;
        let f: Vec<f64> = (0..n).map(|i| (-(i as f64) * d).exp()).collect();
        let s = Samples {
            f: &f,
            ghost_left: d.exp(),
            ghost_right: f[n - 1] * (-d).exp(),
        };
        for (lambda, mu) in [(0.4, 2.5), (1.0, 1.0), (0.999, 1.001)] {
            let exact = 1.0 / ((lambda + 1.0) * (mu + 1.0));
            let tail_mu = f[n - 1] / (mu + 1.0);
            for (rule, tol) in [(Rule::Cubic, 1e-9), (Rule::Linear, 2e-5)] {
                let r = right_conv_gap(s, lambda, mu, d, f[n - 1] * exact, tail_mu, rule);
                for i in (0..n).step_by(97) {
                    assert!((r[i] - f[i] * exact).abs() < tol * f[i], "{lambda} {mu} {i} {}", r[i] / f[i]);
                }
            }
        }
    }

    #[test]
    fn linear_weights_are_non_negative() {
        for kappa in [0.01, 0.4, 1.0, 3.7, 50.0] {
            for power in [0, 1] {
                let cw = CellWeights::new(kappa, 0.01, power, Rule::Linear);
                assert!(cw.w.iter().all(|&w| w >= 0.0), "{kappa} {power} {:?}", cw.w);
            }
        }
    }

    #[test]
    fn exp_poly_integrals() {
        // f(v) = (2 + 3v) e^{-v}
        let e = ExpPoly {
            terms: vec![Term {
                rate: -1.0,
                poly: vec![2.0, 3.0],
            }],
        };
        // ∫_0^∞ e^{-2v}(2+3v)e^{-v} = 2/3 + 3/9
        assert!((e.right_integral(2.0, 0) - (2.0 / 3.0 + 1.0 / 3.0)).abs() < 1e-15);
        // ∫_0^∞ v e^{-3v}(2+3v) = 2/9 + 6/27
        assert!((e.right_integral(2.0, 1) - (2.0 / 9.0 + 6.0 / 27.0)).abs() < 1e-15);
        // ∫_{-∞}^0 e^{2v}(2+3v)e^{-v} = 2 - 3
        assert!((e.left_integral(2.0) + 1.0).abs() < 1e-15);
        let t = e.translate(0.7);
        assert!((t.eval(0.3) - e.eval(1.0)).abs() < 1e-15);
        let sq = e.mul(&e);
        assert!((sq.eval(0.4) - e.eval(0.4).powi(2)).abs() < 1e-14);
    }
}
