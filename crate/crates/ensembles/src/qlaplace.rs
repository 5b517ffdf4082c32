//! The q-Laplace transform `𝓛_ξ(ζ) = E Π_{i≥0} 1/(1 + ζ q^{ξ+i})` of a
//! random variable on `Z≥0`, its analogue for point configurations, and the
//! contour integrals that recover the law and the q-moments.

use num_complex::Complex;

use crate::error::{domain, param, Error, Result};
use crate::scalar::{idx, lit, Real};

fn check_q<T: Real>(q: T) -> Result<()> {
    if q > T::zero() && q < T::one() {
        Ok(())
    } else {
        param(format!("q must lie in (0, 1), got {q}"))
    }
}

/// `(a; q)_n`, or `(a; q)_∞` when `n` is `None`.
pub fn q_pochhammer<T: Real>(a: Complex<T>, q: T, n: Option<usize>) -> Complex<T> {
    let mut prod = Complex::new(T::one(), T::zero());
    let mut term = a;
    let mut i = 0usize;
    loop {
        if let Some(n) = n {
            if i == n {
                break;
            }
        } else if term.norm() < T::epsilon() * lit(1e-2) {
            break;
        }
        prod = prod * (Complex::new(T::one(), T::zero()) - term);
        term = term * q;
        i += 1;
    }
    prod
}

/// `(q; q)_n`.
pub fn q_factorial<T: Real>(q: T, n: usize) -> T {
    (1..=n).map(|k| T::one() - q.powi(k as i32)).fold(T::one(), |a, b| a * b)
}

/// `Π_{i≥0} 1/(1 + z q^{k+i})`, with a domain error near a pole.
pub fn shifted_factor<T: Real>(z: Complex<T>, q: T, k: usize) -> Result<Complex<T>> {
    let one = Complex::new(T::one(), T::zero());
    let mut term = z * q.powi(k as i32);
    let mut prod = one;
    loop {
        let d = one + term;
        if d.norm() < lit(1e-12) {
            return domain(format!("ζ = {z} is within 1e-12 of a pole"));
        }
        prod = prod / d;
        if term.norm() < T::epsilon() * lit(1e-2) {
            break;
        }
        term = term * q;
    }
    Ok(prod)
}

/// `𝓛_ξ(z)` at complex `z` for `P{ξ = k} = dist[k]`.
pub fn q_laplace_rv_complex<T: Real>(dist: &[T], q: T, z: Complex<T>) -> Result<Complex<T>> {
    check_q(q)?;
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, &p) in dist.iter().enumerate() {
        if p != T::zero() {
            acc = acc + shifted_factor(z, q, k)? * p;
        }
    }
    Ok(acc)
}

/// `𝓛_ξ(ζ)` for a finitely supported law; the masses must sum to one.
pub fn q_laplace_rv<T: Real>(dist: &[T], q: T, zeta: T) -> Result<T> {
    let total: T = dist.iter().copied().sum();
    if (total - T::one()).abs() > lit(1e-12) || dist.iter().any(|&p| p < T::zero()) {
        return param(format!("distribution has total mass {total}"));
    }
    Ok(q_laplace_rv_complex(dist, q, Complex::new(zeta, T::zero()))?.re)
}

/// Partial sum `Σ_{n<terms} (−ζ)^n E q^{nξ} / (q; q)_n` of the series form.
pub fn q_laplace_series<T: Real>(dist: &[T], q: T, zeta: T, terms: usize) -> Result<T> {
    check_q(q)?;
    let mut acc = T::zero();
    let mut qf = T::one();
    let mut pw = T::one();
    for n in 0..terms {
        if n > 0 {
            qf *= T::one() - q.powi(n as i32);
            pw *= -zeta;
        }
        let moment: T = dist.iter().enumerate().map(|(k, &p)| p * q.powi((n * k) as i32)).sum();
        acc += pw * moment / qf;
    }
    Ok(acc)
}

/// `Π_{x∈X} 1/(1 + ζ q^x)` for a finite configuration.
pub fn q_laplace_config<T: Real>(sites: &[usize], q: T, zeta: T) -> Result<T> {
    check_q(q)?;
    let mut prod = T::one();
    for &x in sites {
        let d = T::one() + zeta * q.powi(x as i32);
        if d.abs() < lit(1e-12) {
            return domain(format!("ζ = {zeta} is within 1e-12 of a pole at site {x}"));
        }
        prod /= d;
    }
    Ok(prod)
}

/// Trapezoidal `(1/2πi) ∮_{|z|=r} f(z) dz` with doubling until two
/// successive values agree to `tol`.
fn circle_integral<T: Real>(f: &dyn Fn(Complex<T>) -> Result<Complex<T>>, r: T, tol: T) -> Result<Complex<T>> {
    let eval = |n: usize| -> Result<Complex<T>> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            let th = lit::<T>(2.0) * T::PI() * (idx::<T>(k) + lit(0.5)) / idx(n);
            let z = Complex::from_polar(r, th);
            acc = acc + f(z)? * z;
        }
        Ok(acc / idx::<T>(n))
    };
    let mut n = 64;
    let mut prev = eval(n)?;
    while n < 1 << 18 {
        n *= 2;
        let next = eval(n)?;
        if (next - prev).norm() <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Accuracy(format!("contour integral did not settle to {tol}")))
}

/// `P{ξ = n}` from the transform `l`, by the contour integral over
/// `|z| = (q^{−n} + q^{−n−1})/2` traversed counter-clockwise:
/// `P{ξ = n} = (qⁿ/2πi) ∮ (−q^{n+1}z; q)_∞ 𝓛(z) dz`.
pub fn invert_q_laplace<T: Real>(l: &dyn Fn(Complex<T>) -> Result<Complex<T>>, q: T, n: usize) -> Result<T> {
    check_q(q)?;
    let qn = q.powi(n as i32);
    let r = (T::one() / qn + T::one() / (qn * q)) / lit(2.0);
    let shift = qn * q;
    let f = move |z: Complex<T>| -> Result<Complex<T>> { Ok(q_pochhammer(-z * shift, q, None) * l(z)?) };
    let v = circle_integral(&f, r, lit::<T>(1e-10) / qn)?;
    Ok(v.re * qn)
}

/// `E q^{nξ}` from the transform `l`, via the Taylor coefficient on `|z| = 1/2`.
pub fn q_moment<T: Real>(l: &dyn Fn(Complex<T>) -> Result<Complex<T>>, q: T, n: usize) -> Result<T> {
    check_q(q)?;
    let nn = n as i32;
    let f = move |z: Complex<T>| -> Result<Complex<T>> { Ok(l(z)? * z.powi(-nn - 1)) };
    let qf = q_factorial(q, n);
    let v = circle_integral(&f, lit(0.5), lit::<T>(1e-12) / qf)?;
    let sign = if n % 2 == 0 { T::one() } else { -T::one() };
    Ok(sign * qf * v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_dist(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    }

    #[test]
    fn deterministic_zero() {
        let got = q_laplace_rv(&[1.0], 0.5, 0.5).unwrap();
        let want: f64 = (0..80).map(|i| 1.0 / (1.0 + 0.5 * 0.5f64.powi(i))).product();
        assert!((got - want).abs() < 1e-15);
        assert!((q_laplace_rv::<f64>(&[0.2, 0.8], 0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn series_matches_product() {
        let d = random_dist(8, 3);
        for q in [0.3, 0.6, 0.9] {
            let a = q_laplace_rv(&d, q, 0.5).unwrap();
            let b = q_laplace_series(&d, q, 0.5, 400).unwrap();
            assert!((a - b).abs() < 1e-12, "q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn pole_is_rejected() {
        assert!(q_laplace_rv(&[0.0, 1.0], 0.5, -2.0).is_err());
        assert!(q_laplace_config(&[1], 0.5, -2.0).is_err());
    }

    #[test]
    fn config_transform_and_shift() {
        assert_eq!(q_laplace_config::<f64>(&[], 0.4, 1.0).unwrap(), 1.0);
        let q = 0.4f64;
        let sites: Vec<usize> = (0..200).collect();
        let full = q_laplace_config(&sites, q, 1.3).unwrap();
        assert!((full - q_laplace_rv(&[1.0], 0.4, 1.3).unwrap()).abs() < 1e-14);
        let x = [0usize, 2, 5];
        let shifted: Vec<usize> = x.iter().map(|v| v + 3).collect();
        let a = q_laplace_config(&shifted, q, 1.3).unwrap();
        let b = q_laplace_config(&x, q, 1.3 * q.powi(3)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn inversion_round_trip() {
        for (q, seed) in [(0.3f64, 1), (0.6, 2), (0.9, 3)] {
            let d = random_dist(21, seed);
            let dd = d.clone();
            let l = move |z: Complex<f64>| q_laplace_rv_complex(&dd, q, z);
            for n in 0..24 {
                let got = invert_q_laplace(&l, q, n).unwrap();
                let want = d.get(n).copied().unwrap_or(0.0);
                assert!((got - want).abs() < 1e-8, "q={q} n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn inversion_of_point_mass() {
        let l = |z: Complex<f64>| q_laplace_rv_complex(&[0.0, 0.0, 1.0], 0.6, z);
        for n in 0..6 {
            let got = invert_q_laplace(&l, 0.6, n).unwrap();
            let want = if n == 2 { 1.0 } else { 0.0 };
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn moments_match_direct_sums() {
        let q = 0.6f64;
        let d = random_dist(10, 9);
        let dd = d.clone();
        let l = move |z: Complex<f64>| q_laplace_rv_complex(&dd, q, z);
        let mut prev = f64::INFINITY;
        for n in 0..8 {
            let got = q_moment(&l, q, n).unwrap();
            let want: f64 = d.iter().enumerate().map(|(k, p)| p * q.powi((n * k) as i32)).sum();
            assert!((got - want).abs() < 1e-10, "n={n}: {got} vs {want}");
            assert!(got <= prev + 1e-12);
            prev = got;
        }
    }

    #[test]
    fn geometric_limit() {
        // truncated geometric laws converge to the geometric law uniformly on |ζ| ≤ 0.9
        let (q, r) = (0.5f64, 0.4f64);
        let geo = |len: usize| -> Vec<f64> {
            let mut v: Vec<f64> = (0..len).map(|k| (1.0 - r) * r.powi(k as i32)).collect();
            let tail: f64 = 1.0 - v.iter().sum::<f64>();
            v[len - 1] += tail;
            v
        };
        let limit = geo(200);
        let mut last = f64::INFINITY;
        for len in [5, 10, 20, 40] {
            let d = geo(len);
            let err = (0..=18)
                .map(|i| {
                    let z = Complex::from_polar(0.9, i as f64 * std::f64::consts::PI / 9.0);
                    (q_laplace_rv_complex(&d, q, z).unwrap() - q_laplace_rv_complex(&limit, q, z).unwrap()).norm()
                })
                .fold(0.0, f64::max);
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-12);
    }
}
