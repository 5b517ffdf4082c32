//! Classical orthogonal polynomial families: weights, norms, recurrences, and
//! the difference-operator data of the discrete families.

use crate::error::{domain, param, Error, Result};
use crate::scalar::{idx, lit, Real};
use crate::special::{ln_binomial, ln_factorial, ln_gamma};
use crate::tridiag::SymTridiag;

/// An orthogonal polynomial family with its parameters.
///
/// Continuous families use the weights `e^{−t²}` (Hermite),
/// `t^{β−1}e^{−t}` on `t > 0` (Laguerre), and `(1−t)^a(1+t)^b` on `(−1, 1)`
/// (Jacobi). Discrete families live on `{0..M}` or on `Z≥0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec<T> {
    Hermite,
    Laguerre { beta: T },
    Jacobi { a: T, b: T },
    Charlier { theta: T },
    Meixner { beta: T, xi: T },
    Krawtchouk { p: T, m: usize },
    Hahn { a: T, b: T, m: usize },
    /// Racah polynomials with `α + 1 = −M`, `β = M + a + c`, `γ = a`, `δ = b`.
    Racah { a: T, b: T, m: usize, c: T },
}

impl<T: Real> FamilySpec<T> {
    /// Racah family with the free constant set to 1.
    pub fn racah(a: T, b: T, m: usize) -> Self {
        FamilySpec::Racah { a, b, m, c: T::one() }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, FamilySpec::Hermite | FamilySpec::Laguerre { .. } | FamilySpec::Jacobi { .. })
    }

    /// Number of lattice sites for finite discrete families.
    pub fn support_size(&self) -> Option<usize> {
        match *self {
            FamilySpec::Krawtchouk { m, .. } | FamilySpec::Hahn { m, .. } | FamilySpec::Racah { m, .. } => Some(m + 1),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, msg: String| if cond { Ok(()) } else { param(msg) };
        let m1 = -T::one();
        match *self {
            FamilySpec::Hermite => Ok(()),
            FamilySpec::Laguerre { beta } => ok(beta > T::zero(), format!("Laguerre needs β > 0, got {beta}")),
            FamilySpec::Jacobi { a, b } => ok(a > m1 && b > m1, format!("Jacobi needs a, b > −1, got a={a}, b={b}")),
            FamilySpec::Charlier { theta } => ok(theta > T::zero(), format!("Charlier needs θ > 0, got {theta}")),
            FamilySpec::Meixner { beta, xi } => ok(
                beta > T::zero() && xi > T::zero() && xi < T::one(),
                format!("Meixner needs β > 0 and ξ in (0,1), got β={beta}, ξ={xi}"),
            ),
            FamilySpec::Krawtchouk { p, m } => ok(
                p > T::zero() && p < T::one() && m >= 1,
                format!("Krawtchouk needs p in (0,1) and M ≥ 1, got p={p}, M={m}"),
            ),
            FamilySpec::Hahn { a, b, m } => ok(
                a > m1 && b > m1 && m >= 1,
                format!("Hahn needs a, b > −1 and M ≥ 1, got a={a}, b={b}, M={m}"),
            ),
            FamilySpec::Racah { a, b, m, c } => ok(
                a > m1 && b > m1 && m >= 1 && c > T::zero(),
                format!("Racah needs a, b > −1, M ≥ 1 and const > 0 (so that β > M + γ), got a={a}, b={b}, M={m}, const={c}"),
            ),
        }
    }
}

fn need_continuous<T: Real>(spec: &FamilySpec<T>) -> Result<()> {
    spec.validate()?;
    if spec.is_continuous() {
        Ok(())
    } else {
        param("operation needs a continuous family (Hermite, Laguerre or Jacobi)")
    }
}

fn need_discrete<T: Real>(spec: &FamilySpec<T>) -> Result<()> {
    spec.validate()?;
    if spec.is_continuous() {
        param("operation needs a discrete family")
    } else {
        Ok(())
    }
}

/// `ln W` at a point of the support.
pub fn ln_weight<T: Real>(spec: &FamilySpec<T>, point: T) -> Result<T> {
    spec.validate()?;
    match *spec {
        FamilySpec::Hermite => Ok(-point * point),
        FamilySpec::Laguerre { beta } => {
            if point < T::zero() {
                return domain(format!("Laguerre weight needs t ≥ 0, got {point}"));
            }
            if point == T::zero() {
                return Ok(if beta == T::one() {
                    T::zero()
                } else if beta > T::one() {
                    T::neg_infinity()
                } else {
                    T::infinity()
                });
            }
            Ok((beta - T::one()) * point.ln() - point)
        }
        FamilySpec::Jacobi { a, b } => {
            if point.abs() > T::one() {
                return domain(format!("Jacobi weight needs t in [−1,1], got {point}"));
            }
            let l = |e: T, u: T| if e == T::zero() { T::zero() } else { e * u.ln() };
            Ok(l(a, T::one() - point) + l(b, T::one() + point))
        }
        _ => {
            let x = lattice_point(spec, point)?;
            Ok(ln_weight_site(spec, x))
        }
    }
}

/// `W` at a point of the support.
pub fn weight<T: Real>(spec: &FamilySpec<T>, point: T) -> Result<T> {
    Ok(ln_weight(spec, point)?.exp())
}

fn lattice_point<T: Real>(spec: &FamilySpec<T>, point: T) -> Result<usize> {
    if point < T::zero() || point.fract() != T::zero() {
        return domain(format!("{point} is not a site of Z≥0"));
    }
    let x = point.to_usize().ok_or_else(|| Error::Domain(format!("site {point} too large")))?;
    if let Some(s) = spec.support_size() {
        if x >= s {
            return domain(format!("site {x} outside support {{0..{}}}", s - 1));
        }
    }
    Ok(x)
}

/// `ln W(x)` for a discrete family; the site must be inside the support.
pub fn ln_weight_site<T: Real>(spec: &FamilySpec<T>, x: usize) -> T {
    let xf = idx::<T>(x);
    let one = T::one();
    match *spec {
        FamilySpec::Charlier { theta } => xf * theta.ln() - ln_factorial(x),
        FamilySpec::Meixner { beta, xi } => ln_gamma(beta + xf) - ln_gamma(beta) - ln_factorial(x) + xf * xi.ln(),
        FamilySpec::Krawtchouk { p, m } => {
            ln_binomial(idx(m), xf) + xf * p.ln() + (idx::<T>(m) - xf) * (one - p).ln()
        }
        FamilySpec::Hahn { a, b, m } => {
            let rest = idx::<T>(m) - xf;
            ln_binomial(a + xf, xf) + ln_binomial(b + rest, rest)
        }
        FamilySpec::Racah { a, b, m, c } => {
            // Pochhammer form of the Racah weight, accumulated as successive
            // ratios w(k+1)/w(k); signs of the factors cancel pairwise.
            let alpha = -idx::<T>(m) - one;
            let beta = idx::<T>(m) + a + c;
            let (g, d) = (a, b);
            let two = lit::<T>(2.0);
            let mut acc = T::zero();
            for k in 0..x {
                let kf = idx::<T>(k);
                let half_ratio = if k == 0 {
                    two
                } else {
                    (g + d + one + kf) / ((g + d + one) / two + kf)
                };
                let num = (alpha + one + kf) * (beta + d + one + kf) * (g + one + kf) * ((g + d + lit(3.0)) / two + kf);
                let den = (-alpha + g + d + one + kf) * (-beta + g + one + kf) * (d + one + kf) * (kf + one);
                acc += (num / den * half_ratio).abs().ln();
            }
            acc
        }
        _ => T::nan(),
    }
}

/// Paper-standardized polynomial value by upward recurrence in `n`.
pub fn eval_poly<T: Real>(spec: &FamilySpec<T>, n: usize, t: T) -> Result<T> {
    need_continuous(spec)?;
    Ok(match *spec {
        FamilySpec::Hermite => {
            let (mut p0, mut p1) = (T::one(), lit::<T>(2.0) * t);
            if n == 0 {
                return Ok(p0);
            }
            for k in 1..n {
                let p2 = lit::<T>(2.0) * t * p1 - lit::<T>(2.0) * idx::<T>(k) * p0;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
        FamilySpec::Laguerre { beta } => laguerre(beta, n, t),
        FamilySpec::Jacobi { a, b } => jacobi(a, b, n, t),
        _ => unreachable!(),
    })
}

/// Laguerre polynomial with leading coefficient `1/n!` for weight
/// `t^{β−1}e^{−t}`.
pub(crate) fn laguerre<T: Real>(beta: T, n: usize, t: T) -> T {
    let (mut p0, mut p1) = (T::one(), t - beta);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = idx::<T>(k);
        let p2 = ((t - lit::<T>(2.0) * kf - beta) * p1 - (kf + beta - T::one()) * p0) / (kf + T::one());
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Jacobi polynomial `P_n^{(a,b)}` in the standard normalization.
pub(crate) fn jacobi<T: Real>(a: T, b: T, n: usize, t: T) -> T {
    let two = lit::<T>(2.0);
    let (mut p0, mut p1) = (T::one(), ((a + b + two) * t + a - b) / two);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = idx::<T>(k);
        let s = two * kf + a + b;
        let big_a = two * (kf + T::one()) * (kf + a + b + T::one()) / ((s + T::one()) * (s + two));
        let big_b = (b * b - a * a) / (s * (s + two));
        let big_c = two * (kf + a) * (kf + b) / (s * (s + T::one()));
        let p2 = ((t - big_b) * p1 - big_c * p0) / big_a;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `ln ‖P_n‖²` for a continuous family.
pub fn ln_norm_sq<T: Real>(spec: &FamilySpec<T>, n: usize) -> Result<T> {
    need_continuous(spec)?;
    let nf = idx::<T>(n);
    Ok(match *spec {
        FamilySpec::Hermite => lit::<T>(0.5) * T::PI().ln() + nf * lit::<T>(2.0).ln() + ln_factorial(n),
        FamilySpec::Laguerre { beta } => ln_gamma(nf + beta) - ln_factorial(n),
        FamilySpec::Jacobi { a, b } => jacobi_ln_norm_sq(a, b, n),
        _ => unreachable!(),
    })
}

pub(crate) fn jacobi_ln_norm_sq<T: Real>(a: T, b: T, n: usize) -> T {
    let nf = idx::<T>(n);
    let one = T::one();
    let pre = (a + b + one) * lit::<T>(2.0).ln();
    if n == 0 {
        return pre + ln_gamma(a + one) + ln_gamma(b + one) - ln_gamma(a + b + lit(2.0));
    }
    pre + ln_gamma(nf + a + one) + ln_gamma(nf + b + one)
        - (lit::<T>(2.0) * nf + a + b + one).ln()
        - ln_gamma(nf + a + b + one)
        - ln_factorial(n)
}

/// `‖P_n‖²` for a continuous family.
pub fn norm_sq<T: Real>(spec: &FamilySpec<T>, n: usize) -> Result<T> {
    Ok(ln_norm_sq(spec, n)?.exp())
}

/// Coefficients `(b_x, a_{x+1})` of the orthonormal three-term relation
/// `t P̃_x = a_{x+1} P̃_{x+1} + b_x P̃_x + a_x P̃_{x−1}` of a continuous family.
pub fn recurrence_coefficients<T: Real>(spec: &FamilySpec<T>, x: usize) -> (T, T) {
    let xf = idx::<T>(x);
    let one = T::one();
    let two = lit::<T>(2.0);
    match *spec {
        FamilySpec::Hermite => (T::zero(), ((xf + one) / two).sqrt()),
        FamilySpec::Laguerre { beta } => (two * xf + beta, ((xf + one) * (xf + beta)).sqrt()),
        FamilySpec::Jacobi { a, b } => {
            let s = two * xf + a + b;
            if x == 0 {
                let diag = (b - a) / (a + b + two);
                let off = two / (a + b + two) * ((a + one) * (b + one) / (a + b + lit(3.0))).sqrt();
                (diag, off)
            } else {
                let diag = (b * b - a * a) / (s * (s + two));
                let off = two / (s + two)
                    * ((xf + one) * (xf + a + one) * (xf + b + one) * (xf + a + b + one)
                        / ((s + one) * (s + lit(3.0))))
                    .sqrt();
                (diag, off)
            }
        }
        _ => (T::nan(), T::nan()),
    }
}

/// Orthonormal functions `ψ_n(t) = P̃_n(t)·(W(t)·e^{extra})^{1/2}` for
/// `n = 0..=n_max`.
///
/// The recurrence carries a separate exponent so that values far in the
/// tail of `W` are produced without overflow or premature underflow.
pub fn orthonormal_functions<T: Real>(spec: &FamilySpec<T>, n_max: usize, t: T, ln_extra: T) -> Result<Vec<T>> {
    need_continuous(spec)?;
    let lw = ln_weight(spec, t)?;
    let base = (lw + ln_extra - ln_norm_sq(spec, 0)?) / lit(2.0);
    let coef: Vec<(T, T)> = (0..=n_max).map(|x| recurrence_coefficients(spec, x)).collect();
    Ok(scaled_recurrence(&coef, t, base))
}

/// Runs `t v_n = a_{n+1} v_{n+1} + b_n v_n + a_n v_{n−1}` from `v_0 = 1` and
/// returns `v_n · e^{base}`.
pub(crate) fn scaled_recurrence<T: Real>(coef: &[(T, T)], t: T, base: T) -> Vec<T> {
    let n = coef.len();
    let mut out = Vec::with_capacity(n);
    if base == T::neg_infinity() || base.is_nan() {
        return vec![T::zero(); n];
    }
    let big = lit::<T>(1e100);
    let ln_big = big.ln();
    let mut expo = base;
    let (mut prev, mut cur) = (T::zero(), T::one());
    for k in 0..n {
        out.push(cur * expo.exp());
        if k + 1 == n {
            break;
        }
        let (b, a1) = coef[k];
        let a0 = if k > 0 { coef[k - 1].1 } else { T::zero() };
        let next = ((t - b) * cur - a0 * prev) / a1;
        prev = cur;
        cur = next;
        if cur.abs() > big {
            cur /= big;
            prev /= big;
            expo += ln_big;
        }
    }
    out
}

/// Difference operator `D` of a discrete family with
/// `D P_n = −μ_n P_n`, `(Df)(x) = D(x,x+1)(f(x+1)−f(x)) + D(x,x−1)(f(x−1)−f(x))`.
#[derive(Debug, Clone, Copy)]
pub struct DifferenceOperator<T> {
    spec: FamilySpec<T>,
}

/// Difference-operator data of a discrete family.
pub fn difference_operator<T: Real>(spec: &FamilySpec<T>) -> Result<DifferenceOperator<T>> {
    need_discrete(spec)?;
    Ok(DifferenceOperator { spec: *spec })
}

impl<T: Real> DifferenceOperator<T> {
    pub fn spec(&self) -> &FamilySpec<T> {
        &self.spec
    }

    pub fn support_size(&self) -> Option<usize> {
        self.spec.support_size()
    }

    /// `D(x, x+1)`.
    pub fn up(&self, x: usize) -> T {
        let xf = idx::<T>(x);
        let one = T::one();
        let two = lit::<T>(2.0);
        match self.spec {
            FamilySpec::Charlier { theta } => theta,
            FamilySpec::Meixner { beta, xi } => xi * (xf + beta),
            FamilySpec::Krawtchouk { p, m } => {
                if x >= m {
                    T::zero()
                } else {
                    p * (idx::<T>(m) - xf)
                }
            }
            FamilySpec::Hahn { a, m, .. } => {
                if x >= m {
                    T::zero()
                } else {
                    (idx::<T>(m) - xf) * (xf + a + one)
                }
            }
            FamilySpec::Racah { a, b, m, c } => {
                if x >= m {
                    return T::zero();
                }
                let (g, d) = (a, b);
                let beta = idx::<T>(m) + a + c;
                let s = two * xf + g + d;
                let ratio = if x == 0 { one } else { (xf + g + d + one) / (s + one) };
                (idx::<T>(m) - xf) * (xf + beta + d + one) * (xf + g + one) * ratio / (s + two)
            }
            _ => T::nan(),
        }
    }

    /// `D(x, x−1)`.
    pub fn down(&self, x: usize) -> T {
        if x == 0 {
            return T::zero();
        }
        let xf = idx::<T>(x);
        let one = T::one();
        let two = lit::<T>(2.0);
        match self.spec {
            FamilySpec::Charlier { .. } => xf,
            FamilySpec::Meixner { .. } => xf,
            FamilySpec::Krawtchouk { p, .. } => (one - p) * xf,
            FamilySpec::Hahn { b, m, .. } => xf * (idx::<T>(m) + b + one - xf),
            FamilySpec::Racah { a, b, m, c } => {
                let (g, d) = (a, b);
                let beta = idx::<T>(m) + a + c;
                let s = two * xf + g + d;
                xf * (xf + idx::<T>(m) + g + d + one) * (beta - g - xf) * (xf + d) / (s * (s + one))
            }
            _ => T::nan(),
        }
    }

    /// Eigenvalue `μ_n`.
    pub fn mu(&self, n: usize) -> T {
        let nf = idx::<T>(n);
        match self.spec {
            FamilySpec::Charlier { .. } | FamilySpec::Krawtchouk { .. } => nf,
            FamilySpec::Meixner { xi, .. } => (T::one() - xi) * nf,
            FamilySpec::Hahn { a, b, .. } => nf * (nf + a + b + T::one()),
            FamilySpec::Racah { a, c, .. } => nf * (nf + a + c),
            _ => T::nan(),
        }
    }

    /// Sup of `W(x+1)/W(x)` over `x ≥ from`, used for geometric tail bounds
    /// on infinite supports.
    fn tail_ratio(&self, from: usize) -> T {
        let r = self.up(from) / self.down(from + 1);
        match self.spec {
            FamilySpec::Meixner { xi, .. } => r.max(xi),
            _ => r,
        }
    }
}

/// Number of lattice sites kept for a discrete weight so that the discarded
/// part of the moment `Σ W(x)(1+x)^{2k}` is below `rel_tol` of the whole,
/// certified by a geometric tail bound.
///
/// Returns `(sites, tail_bound_relative)`.
pub fn lattice_truncation<T: Real>(spec: &FamilySpec<T>, rel_tol: T, min_sites: usize, k: usize) -> Result<(usize, T)> {
    need_discrete(spec)?;
    if let Some(s) = spec.support_size() {
        return Ok((s, T::zero()));
    }
    let op = difference_operator(spec)?;
    let pow = idx::<T>(2 * k);
    let mut ln_total = T::neg_infinity();
    let cap = 50_000_000usize;
    let mut x = 0usize;
    loop {
        let xf = idx::<T>(x);
        let lw = ln_weight_site(spec, x) + pow * (T::one() + xf).ln();
        ln_total = log_add(ln_total, lw);
        if x + 1 >= min_sites {
            let r = op.tail_ratio(x) * ((xf + lit(2.0)) / (xf + T::one())).powf(pow);
            if r < T::one() {
                let ln_tail = lw + r.ln() - (T::one() - r).ln();
                let rel = (ln_tail - ln_total).exp();
                if rel < rel_tol {
                    return Ok((x + 1, rel));
                }
            }
        }
        x += 1;
        if x > cap {
            return Err(Error::Accuracy(format!("weight tail not below {rel_tol} within {cap} sites")));
        }
    }
}

pub(crate) fn log_add<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Variable in which the polynomials of a discrete family are polynomials:
/// the site itself, or `x(x+γ+δ+1)` on the quadratic Racah grid.
pub fn lattice_variable<T: Real>(spec: &FamilySpec<T>, x: usize) -> T {
    let xf = idx::<T>(x);
    match *spec {
        FamilySpec::Racah { a, b, .. } => xf * (xf + a + b + T::one()),
        _ => xf,
    }
}

/// Three-term recurrence of the orthonormal polynomials of a discrete weight.
#[derive(Debug, Clone)]
pub struct OrthonormalRecurrence<T> {
    /// `diag[n] = b_n`, `off[n] = a_{n+1}` for `n ≤ n_max`.
    pub jacobi: SymTridiag<T>,
    /// `ln Σ_x W(x)`.
    pub ln_mass: T,
    /// Sites used (the full support or a certified truncation).
    pub sites: usize,
    /// Relative mass of the discarded tail.
    pub tail: T,
}

impl<T: Real> OrthonormalRecurrence<T> {
    /// `φ_n(x) = W(x)^{1/2} p_n(x)` for `n = 0..=n_max`, with `p_n`
    /// orthonormal with respect to `W` and polynomial in
    /// [`lattice_variable`].
    pub fn functions(&self, spec: &FamilySpec<T>, x: usize, n_max: usize) -> Vec<T> {
        let base = (ln_weight_site(spec, x) - self.ln_mass) / lit(2.0);
        let coef: Vec<(T, T)> = (0..=n_max)
            .map(|k| {
                let off = if k < self.jacobi.off.len() { self.jacobi.off[k] } else { T::one() };
                (self.jacobi.diag[k], off)
            })
            .collect();
        scaled_recurrence(&coef, lattice_variable(spec, x), base)
    }
}

/// Recurrence coefficients of the orthonormal polynomials of degree
/// `0..=n_max` for a discrete weight, by Lanczos iteration on the weight
/// vector with reorthogonalization.
pub fn orthonormal_recurrence<T: Real>(spec: &FamilySpec<T>, n_max: usize) -> Result<OrthonormalRecurrence<T>> {
    need_discrete(spec)?;
    let (mut sites, tail) = lattice_truncation(spec, lit(1e-17), n_max + 2, n_max + 1)?;
    if tail > lit(1e-13) {
        return Err(Error::Accuracy(format!("weight truncation tail {tail} exceeds 1e-13")));
    }
    if n_max + 1 > sites {
        return param(format!("n_max={n_max} needs at least {} support sites, have {sites}", n_max + 1));
    }
    if spec.support_size().is_some() {
        return Ok(lanczos(spec, n_max, sites, tail)?.0);
    }
    // the moment bound is only a starting point: grow the window until every
    // orthonormal function is negligible at its edge
    for _ in 0..60 {
        let (rec, edge) = lanczos(spec, n_max, sites, tail)?;
        if edge < lit(1e-32) {
            return Ok(rec);
        }
        sites += sites / 4 + 10;
    }
    Err(Error::Accuracy("orthonormal functions do not decay inside the truncation window".into()))
}

/// Orthonormal recurrence `(b_n, a_{n+1})` of a discrete family from the
/// classical closed forms, in the family's [`lattice_variable`].
///
/// With the usual `A_n`, `C_n` of the hypergeometric families the monic
/// relation is `λ p_n = p_{n+1} + (A_n + C_n) p_n + A_{n−1} C_n p_{n−1}`.
pub fn discrete_recurrence<T: Real>(spec: &FamilySpec<T>, n: usize) -> Result<(T, T)> {
    let one = T::one();
    let two = lit::<T>(2.0);
    // (A_n, C_n) as functions of n
    let ac = |k: usize| -> (T, T) {
        let kf = idx::<T>(k);
        match *spec {
            FamilySpec::Charlier { theta } => (theta, kf),
            FamilySpec::Meixner { beta, xi } => (xi * (kf + beta) / (one - xi), kf / (one - xi)),
            FamilySpec::Krawtchouk { p, m } => (p * (idx::<T>(m) - kf), (one - p) * kf),
            FamilySpec::Hahn { a, b, m } => {
                let mm = idx::<T>(m);
                let s = two * kf + a + b;
                let an = if k == 0 {
                    (a + one) * mm / (a + b + two)
                } else {
                    (kf + a + b + one) * (kf + a + one) * (mm - kf) / ((s + one) * (s + two))
                };
                let cn = if k == 0 { T::zero() } else { kf * (kf + a + b + mm + one) * (kf + b) / (s * (s + one)) };
                (an, cn)
            }
            FamilySpec::Racah { a, b, m, c } => {
                let al = -idx::<T>(m) - one;
                let be = idx::<T>(m) + a + c;
                let (ga, de) = (a, b);
                let s = two * kf + al + be;
                let an = if k == 0 {
                    (al + one) * (be + de + one) * (ga + one) / (al + be + two)
                } else {
                    (kf + al + one) * (kf + al + be + one) * (kf + be + de + one) * (kf + ga + one) / ((s + one) * (s + two))
                };
                let cn = if k == 0 {
                    T::zero()
                } else {
                    kf * (kf + al + be - ga) * (kf + al - de) * (kf + be) / (s * (s + one))
                };
                (an, cn)
            }
            _ => (T::nan(), T::nan()),
        }
    };
    need_discrete(spec)?;
    let (an, cn) = ac(n);
    let (_, cn1) = ac(n + 1);
    // on the quadratic Racah grid the recurrence carries the opposite sign
    let diag = if matches!(spec, FamilySpec::Racah { .. }) { -(an + cn) } else { an + cn };
    if spec.support_size().is_some_and(|s| n + 1 >= s) {
        return Ok((diag, T::zero()));
    }
    let prod = an * cn1;
    if !(prod > T::zero()) {
        return Err(Error::Domain(format!("recurrence coefficient A_n C_(n+1) = {prod} is not positive at n = {n}")));
    }
    Ok((diag, prod.sqrt()))
}

/// [`OrthonormalRecurrence`] from [`discrete_recurrence`] and the weight
/// mass summed over the support or a certified truncation.
pub fn classical_recurrence<T: Real>(spec: &FamilySpec<T>, n_max: usize) -> Result<OrthonormalRecurrence<T>> {
    need_discrete(spec)?;
    if let Some(s) = spec.support_size() {
        if n_max + 1 > s {
            return param(format!("n_max={n_max} needs at least {} support sites, have {s}", n_max + 1));
        }
    }
    let (sites, tail) = lattice_truncation(spec, lit(1e-17), 1, 0)?;
    let ln_mass = (0..sites).fold(T::neg_infinity(), |acc, x| log_add(acc, ln_weight_site(spec, x)));
    let mut diag = Vec::with_capacity(n_max + 1);
    let mut off = Vec::with_capacity(n_max);
    for k in 0..=n_max {
        let (b, a) = discrete_recurrence(spec, k)?;
        diag.push(b);
        if k < n_max {
            off.push(a);
        }
    }
    Ok(OrthonormalRecurrence {
        jacobi: SymTridiag::new(diag, off)?,
        ln_mass,
        sites,
        tail,
    })
}

fn lanczos<T: Real>(spec: &FamilySpec<T>, n_max: usize, sites: usize, tail: T) -> Result<(OrthonormalRecurrence<T>, T)> {
    let lw: Vec<T> = (0..sites).map(|x| ln_weight_site(spec, x)).collect();
    let lmax = lw.iter().copied().fold(T::neg_infinity(), T::max);
    let w: Vec<T> = lw.iter().map(|&l| (l - lmax).exp()).collect();
    let mass_rel: T = w.iter().copied().sum();
    let ln_mass = lmax + mass_rel.ln();
    let xs: Vec<T> = (0..sites).map(|x| lattice_variable(spec, x)).collect();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(n_max + 2);
    let q0: Vec<T> = w.iter().map(|&v| (v / mass_rel).sqrt()).collect();
    q.push(q0);
    let full = sites * (n_max + 1) <= 40_000_000;
    let mut diag = Vec::with_capacity(n_max + 1);
    let mut off = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let qk = &q[k];
        let b: T = qk.iter().zip(&xs).map(|(&v, &x)| x * v * v).sum();
        let mut r: Vec<T> = qk.iter().zip(&xs).map(|(&v, &x)| (x - b) * v).collect();
        if k > 0 {
            let a: T = off[k - 1];
            for (ri, &p) in r.iter_mut().zip(&q[k - 1]) {
                *ri -= a * p;
            }
        }
        let lo = if full { 0 } else { k.saturating_sub(1) };
        for _ in 0..2 {
            for qj in &q[lo..=k] {
                let dot: T = r.iter().zip(qj).map(|(&a, &b)| a * b).sum();
                for (ri, &v) in r.iter_mut().zip(qj) {
                    *ri -= dot * v;
                }
            }
        }
        let a = r.iter().map(|&v| v * v).sum::<T>().sqrt();
        diag.push(b);
        off.push(a);
        if k < n_max {
            if !(a > T::zero()) {
                return Err(Error::Convergence(format!("Lanczos breakdown at degree {k}")));
            }
            q.push(r.into_iter().map(|v| v / a).collect());
        }
    }
    // keep off[n] = a_{n+1} for n < n_max; the last entry is only used when
    // evaluating degree n_max + 1, which callers never request
    off.pop();
    let edge_sites = 3.min(sites);
    let edge = q
        .iter()
        .map(|v| v[sites - edge_sites..].iter().map(|&c| c * c).sum::<T>())
        .fold(T::zero(), T::max);
    let rec = OrthonormalRecurrence {
        jacobi: SymTridiag::new(diag, off)?,
        ln_mass,
        sites,
        tail,
    };
    Ok((rec, edge))
}
