//! Gaussian quadrature rules.

use crate::error::{param, Result};
use crate::orthopoly::{self, FamilySpec};
use crate::scalar::{idx, lit, Real};
use crate::tridiag::{eigen_sym_tridiag, SymTridiag};

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    /// Affine image of a rule on `[−1, 1]` onto `[lo, hi]`.
    pub fn mapped(&self, lo: T, hi: T) -> Rule<T> {
        let half = (hi - lo) / lit(2.0);
        let mid = (hi + lo) / lit(2.0);
        Rule {
            nodes: self.nodes.iter().map(|&t| mid + half * t).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `n`-point Gauss–Legendre rule on `[−1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre<T: Real>(n: usize) -> Result<Rule<T>> {
    if n == 0 {
        return param("quadrature needs at least one node");
    }
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = idx::<T>(n);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::PI() * (idx::<T>(i) + lit(0.75)) / (nf + lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    Ok(Rule { nodes, weights })
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), x);
    for k in 1..n {
        let kf = idx::<T>(k);
        let p2 = ((lit::<T>(2.0) * kf + T::one()) * x * p1 - kf * p0) / (kf + T::one());
        p0 = p1;
        p1 = p2;
    }
    let nf = idx::<T>(n);
    (p1, nf * (x * p1 - p0) / (x * x - T::one()))
}

/// Golub–Welsch rule for the weight of a continuous family.
pub fn gauss_rule<T: Real>(spec: &FamilySpec<T>, n: usize) -> Result<Rule<T>> {
    if !spec.is_continuous() {
        return param("Gauss rules are built for continuous families");
    }
    spec.validate()?;
    if n == 0 {
        return param("quadrature needs at least one node");
    }
    let coef: Vec<(T, T)> = (0..n).map(|x| orthopoly::recurrence_coefficients(spec, x)).collect();
    let diag = coef.iter().map(|c| c.0).collect();
    let off = coef[..n - 1].iter().map(|c| c.1).collect();
    let eig = eigen_sym_tridiag(&SymTridiag::new(diag, off)?)?;
    let mass = orthopoly::norm_sq(spec, 0)?;
    let weights = (0..n).map(|k| mass * eig.vector(k)[0] * eig.vector(k)[0]).collect();
    Ok(Rule {
        nodes: eig.values,
        weights,
    })
}

/// Gauss–Jacobi rule for `(1−t)^a (1+t)^b` on `[−1, 1]`.
pub fn gauss_jacobi<T: Real>(a: T, b: T, n: usize) -> Result<Rule<T>> {
    gauss_rule(&FamilySpec::Jacobi { a, b }, n)
}

/// Composite Gauss–Legendre rule on `[lo, hi]` with `panels` equal panels.
pub fn composite_legendre<T: Real>(lo: T, hi: T, panels: usize, order: usize) -> Result<Rule<T>> {
    if panels == 0 {
        return param("need at least one panel");
    }
    let base = gauss_legendre::<T>(order)?;
    let h = (hi - lo) / idx(panels);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let r = base.mapped(lo + h * idx(p), lo + h * idx(p + 1));
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    Ok(Rule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exact_on_polynomials() {
        let r = gauss_legendre::<f64>(12).unwrap();
        for k in 0..24 {
            let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = r.integrate(|t| t.powi(k));
            assert!((got - want).abs() < 1e-14, "k={k}");
        }
        let r1 = gauss_legendre::<f64>(1).unwrap();
        assert_eq!((r1.nodes[0], r1.weights[0]), (0.0, 2.0));
    }

    #[test]
    fn large_legendre_rule() {
        let r = gauss_legendre::<f64>(400).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!((r.integrate(|t| t.cos()) - 2.0 * 1f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn golub_welsch_matches_newton() {
        let a = gauss_legendre::<f64>(20).unwrap();
        let b = gauss_jacobi::<f64>(0.0, 0.0, 20).unwrap();
        for i in 0..20 {
            assert!((a.nodes[i] - b.nodes[i]).abs() < 1e-13);
            assert!((a.weights[i] - b.weights[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_rule_moment() {
        // ∫(1−t)^a(1+t)^b t dt = 2^{a+b+1} B(a+1,b+1) (b−a)/(a+b+2)
        let (a, b) = (0.5, -0.3);
        let r = gauss_jacobi::<f64>(a, b, 10).unwrap();
        let lb = statrs::function::beta::ln_beta(a + 1.0, b + 1.0);
        let want = 2f64.powf(a + b + 1.0) * lb.exp() * (b - a) / (a + b + 2.0);
        assert!((r.integrate(|t| t) - want).abs() < 1e-13);
    }

    #[test]
    fn hermite_rule_gaussian_moment() {
        let r = gauss_rule::<f64>(&FamilySpec::Hermite, 15).unwrap();
        let want = std::f64::consts::PI.sqrt() * 3.0 / 4.0;
        assert!((r.integrate(|t| t.powi(4)) - want).abs() < 1e-13);
    }

    #[test]
    fn composite_rule() {
        let r = composite_legendre::<f64>(0.0, 3.0, 7, 8).unwrap();
        assert!((r.integrate(|t| t.exp()) - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
