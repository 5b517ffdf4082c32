//! Jacobi (symmetric tridiagonal) matrices, their eigendecomposition, and
//! spectral projections onto `(0, ∞)`.

use std::sync::Arc;

use crate::error::{domain, param, Error, Result};
use crate::kernels::{Base, EnsembleSpec, Sign};
use crate::orthopoly::{self, FamilySpec};
use crate::scalar::{idx, lit, Real};

/// Finite symmetric tridiagonal matrix; `off[i]` is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return param(format!(
                "tridiagonal sizes mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            ));
        }
        Ok(SymTridiag { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> T {
        let n = self.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { T::zero() };
                let r = if i + 1 < n { self.off[i].abs() } else { T::zero() };
                self.diag[i].abs() + l + r
            })
            .fold(T::zero(), T::max)
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn scaled(&self, c: T) -> Self {
        SymTridiag {
            diag: self.diag.iter().map(|&d| d * c).collect(),
            off: self.off.iter().map(|&e| e * c).collect(),
        }
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence).
    pub fn count_below(&self, lambda: T) -> usize {
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        for i in 0..self.len() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - lambda - e * e / q;
            }
            if q == T::zero() {
                q = tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }
}

type Generator<T> = Arc<dyn Fn(usize) -> (T, T) + Send + Sync>;

/// Jacobi matrix given by a generator `x ↦ (A(x,x), A(x,x+1))`, finite or
/// semi-infinite.
#[derive(Clone)]
pub struct TridiagMatrix<T> {
    gen: Generator<T>,
    size: Option<usize>,
}

impl<T: Real> std::fmt::Debug for TridiagMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let head: Vec<(T, T)> = (0..3.min(self.size.unwrap_or(3))).map(|x| (self.gen)(x)).collect();
        f.debug_struct("TridiagMatrix")
            .field("size", &self.size)
            .field("head", &head)
            .finish()
    }
}

impl<T: Real> TridiagMatrix<T> {
    pub fn from_generator(size: Option<usize>, gen: impl Fn(usize) -> (T, T) + Send + Sync + 'static) -> Self {
        TridiagMatrix {
            gen: Arc::new(gen),
            size,
        }
    }

    pub fn from_sym(m: SymTridiag<T>) -> Self {
        let n = m.len();
        TridiagMatrix::from_generator(Some(n), move |x| {
            let off = if x + 1 < n { m.off[x] } else { T::zero() };
            (m.diag[x], off)
        })
    }

    pub fn size(&self) -> Option<usize> {
        self.size
    }

    pub fn diag(&self, x: usize) -> T {
        (self.gen)(x).0
    }

    pub fn offdiag(&self, x: usize) -> T {
        (self.gen)(x).1
    }

    /// Top-left `n × n` block.
    pub fn truncate(&self, n: usize) -> Result<SymTridiag<T>> {
        if n == 0 {
            return param("truncation size must be positive");
        }
        if let Some(s) = self.size {
            if n > s {
                return param(format!("truncation {n} exceeds matrix size {s}"));
            }
        }
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n - 1);
        for x in 0..n {
            let (d, e) = (self.gen)(x);
            diag.push(d);
            if x + 1 < n {
                off.push(e);
            }
        }
        SymTridiag::new(diag, off)
    }

    pub fn scaled(&self, c: T) -> Self {
        let g = self.gen.clone();
        TridiagMatrix::from_generator(self.size, move |x| {
            let (d, e) = g(x);
            (d * c, e * c)
        })
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored
/// column by column (`vectors[k * n + i]` is component `i` of vector `k`).
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Real> Eigen<T> {
    pub fn vector(&self, k: usize) -> &[T] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

/// Full eigendecomposition by implicit QL iteration with Wilkinson-type
/// shifts.
pub fn eigen_sym_tridiag<T: Real>(m: &SymTridiag<T>) -> Result<Eigen<T>> {
    let n = m.len();
    let mut d = m.diag.clone();
    let mut e: Vec<T> = m.off.clone();
    e.push(T::zero());
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let mut sweeps = 0usize;
    let cap = 50 * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut mm = l;
        while mm < n {
            if e[mm].abs() <= eps * tst1 {
                break;
            }
            mm += 1;
        }
        if mm == n {
            mm = n - 1;
        }
        if mm > l {
            loop {
                sweeps += 1;
                if sweeps > cap {
                    return Err(Error::Convergence(format!(
                        "tridiagonal QL exceeded {cap} sweeps at size {n}"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (lit::<T>(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[mm];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..mm).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = v.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for k in 0..n {
                        let t = vi1[k];
                        vi1[k] = s * vi[k] + c * t;
                        vi[k] = c * vi[k] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        vectors.extend_from_slice(&v[k * n..(k + 1) * n]);
    }
    Ok(Eigen { values, vectors, n })
}

/// The `k`-th smallest eigenvalue (0-based) by Sturm bisection.
pub fn eigenvalue_bisect<T: Real>(m: &SymTridiag<T>, k: usize) -> T {
    let nb = m.norm_bound();
    let mut lo = -nb - T::one();
    let mut hi = nb + T::one();
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.count_below(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= lit::<T>(2.0) * T::epsilon() * (lo.abs().max(hi.abs())) {
            break;
        }
    }
    (lo + hi) / lit(2.0)
}

/// Solves `(m − λ) x = b` by tridiagonal LU with partial pivoting.
fn solve_shifted<T: Real>(m: &SymTridiag<T>, lambda: T, b: &[T]) -> Vec<T> {
    let n = m.len();
    let tiny = T::epsilon() * (m.norm_bound() + T::one());
    let fix = |v: T| if v.abs() < tiny { if v < T::zero() { -tiny } else { tiny } } else { v };
    let mut x = b.to_vec();
    if n == 1 {
        x[0] = x[0] / fix(m.diag[0] - lambda);
        return x;
    }
    let mut dl: Vec<T> = m.off.clone();
    let mut d: Vec<T> = m.diag.iter().map(|&v| v - lambda).collect();
    let mut du: Vec<T> = m.off.clone();
    let mut du2 = vec![T::zero(); n.saturating_sub(2)];
    let mut swapped = vec![false; n - 1];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let piv = fix(d[i]);
            d[i] = piv;
            let f = dl[i] / piv;
            dl[i] = f;
            d[i + 1] -= f * du[i];
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            let t = du[i];
            du[i] = d[i + 1];
            d[i + 1] = t - f * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    d[n - 1] = fix(d[n - 1]);
    for i in 0..n - 1 {
        if swapped[i] {
            let t = x[i];
            x[i] = x[i + 1];
            x[i + 1] = t - dl[i] * x[i];
        } else {
            x[i + 1] = x[i + 1] - dl[i] * x[i];
        }
    }
    x[n - 1] = x[n - 1] / d[n - 1];
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

/// Eigenpairs with indices `ks` (ascending order positions) by bisection and
/// inverse iteration; vectors of nearby eigenvalues are reorthogonalized.
pub fn eigenpairs_by_index<T: Real>(m: &SymTridiag<T>, ks: &[usize]) -> Result<Eigen<T>> {
    let n = m.len();
    let nb = m.norm_bound() + T::one();
    let mut values: Vec<T> = Vec::with_capacity(ks.len());
    let mut vectors: Vec<T> = Vec::with_capacity(ks.len() * n);
    for (j, &k) in ks.iter().enumerate() {
        let lambda = eigenvalue_bisect(m, k);
        let mut x: Vec<T> = (0..n)
            .map(|i| T::one() + lit::<T>(1e-3) * idx::<T>((i * 7919 + k * 104_729) % 1000))
            .collect();
        for it in 0..4 {
            let mut y = solve_shifted(m, lambda, &x);
            // reorthogonalize against close neighbours already computed
            for jj in (0..j).rev().take(64) {
                if (values[jj] - lambda).abs() > lit::<T>(1e-3) * nb {
                    continue;
                }
                let w = &vectors[jj * n..(jj + 1) * n];
                let dot: T = y.iter().zip(w).map(|(&a, &b)| a * b).sum();
                for (yi, &wi) in y.iter_mut().zip(w) {
                    *yi -= dot * wi;
                }
            }
            let norm = y.iter().map(|&a| a * a).sum::<T>().sqrt();
            if !(norm > T::zero()) || !norm.is_finite() {
                return Err(Error::Convergence(format!("inverse iteration failed at eigenvalue {k}")));
            }
            for yi in y.iter_mut() {
                *yi /= norm;
            }
            x = y;
            if it >= 1 {
                let r = m.matvec(&x);
                let res = r
                    .iter()
                    .zip(&x)
                    .map(|(&a, &b)| (a - lambda * b).abs())
                    .fold(T::zero(), T::max);
                if res <= lit::<T>(1e-12) * nb {
                    break;
                }
            }
        }
        values.push(lambda);
        vectors.extend_from_slice(&x);
    }
    Ok(Eigen {
        values,
        vectors,
        n,
    })
}

/// `[A]_+` restricted to a window: `P = V diag(1_{λ>0}) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SpectralProjection<T> {
    /// Window size; entries are indexed by `[0, window)`.
    pub window: usize,
    /// Row-major `window × window` matrix.
    pub matrix: Vec<T>,
    /// Rank of the projection on the full truncation.
    pub rank: usize,
    /// Eigenvalues within the degeneracy tolerance of zero; they are placed
    /// on the non-positive side.
    pub near_zero: Vec<T>,
}

impl<T: Real> SpectralProjection<T> {
    pub fn get(&self, x: usize, y: usize) -> T {
        self.matrix[x * self.window + y]
    }
}

const DENSE_LIMIT: usize = 1000;

/// Degeneracy tolerance for a zero eigenvalue.
pub fn zero_tolerance<T: Real>(m: &SymTridiag<T>) -> T {
    lit::<T>(1e-9) * (T::one() + m.norm_bound())
}

/// Spectral projection onto `(0, ∞)` of a finite Jacobi matrix, restricted to
/// the top-left `window × window` block.
pub fn projection_block<T: Real>(m: &SymTridiag<T>, window: usize) -> Result<SpectralProjection<T>> {
    let n = m.len();
    if window > n {
        return param(format!("window {window} exceeds matrix size {n}"));
    }
    let tol = zero_tolerance(m);
    let mut p = vec![T::zero(); window * window];
    let accumulate = |p: &mut Vec<T>, v: &[T], sgn: T| {
        for x in 0..window {
            let vx = v[x] * sgn;
            if vx == T::zero() {
                continue;
            }
            for y in 0..window {
                p[x * window + y] += vx * v[y];
            }
        }
    };
    if n <= DENSE_LIMIT {
        let eig = eigen_sym_tridiag(m)?;
        let mut rank = 0;
        let mut near_zero = Vec::new();
        for k in 0..n {
            let l = eig.values[k];
            if l.abs() <= tol {
                near_zero.push(l);
            } else if l > T::zero() {
                rank += 1;
                accumulate(&mut p, eig.vector(k), T::one());
            }
        }
        return Ok(SpectralProjection {
            window,
            matrix: p,
            rank,
            near_zero,
        });
    }
    let below_lo = m.count_below(-tol);
    let below_hi = m.count_below(tol);
    let near: Vec<usize> = (below_lo..below_hi).collect();
    let near_zero: Vec<T> = if near.is_empty() {
        Vec::new()
    } else {
        near.iter().map(|&k| eigenvalue_bisect(m, k)).collect()
    };
    let rank = n - below_hi;
    if rank <= below_hi {
        let ks: Vec<usize> = (below_hi..n).collect();
        let eig = eigenpairs_by_index(m, &ks)?;
        for j in 0..ks.len() {
            accumulate(&mut p, eig.vector(j), T::one());
        }
    } else {
        let ks: Vec<usize> = (0..below_hi).collect();
        let eig = eigenpairs_by_index(m, &ks)?;
        for x in 0..window {
            p[x * window + x] = T::one();
        }
        for j in 0..ks.len() {
            accumulate(&mut p, eig.vector(j), -T::one());
        }
    }
    Ok(SpectralProjection {
        window,
        matrix: p,
        rank,
        near_zero,
    })
}

/// `[A]_+` of the `n × n` truncation of `m`.
pub fn spectral_projection_plus<T: Real>(m: &TridiagMatrix<T>, n: usize) -> Result<SpectralProjection<T>> {
    projection_block(&m.truncate(n)?, n)
}

/// Default truncation size for a semi-infinite projection serving a window
/// ending at `max_index`.
pub fn default_truncation(max_index: usize) -> usize {
    4 * max_index + 200
}

/// Limit Jacobi matrix `A±` of a discrete ensemble: the matrix of `±(T − ρ)`
/// in the orthonormal basis `(±1)^x P̃_x`.
pub fn build_limit_jacobi<T: Real>(spec: &EnsembleSpec<T>) -> TridiagMatrix<T> {
    let fam = spec.family();
    let rho = spec.rho;
    let sgn = match spec.sign {
        Sign::Plus => T::one(),
        Sign::Minus => -T::one(),
    };
    TridiagMatrix::from_generator(None, move |x| {
        let (b, a) = orthopoly::recurrence_coefficients(&fam, x);
        (sgn * (b - rho), a)
    })
}

/// Pre-limit Jacobi matrix `A_N = (D̃ + μ_N)/c_N` of a discrete family,
/// extended by `−1` beyond a finite support.
pub fn build_prelimit_jacobi<T: Real>(spec: &FamilySpec<T>, n: usize, c: T) -> Result<TridiagMatrix<T>> {
    let op = orthopoly::difference_operator(spec)?;
    if n == 0 {
        return param("N must be positive");
    }
    if let Some(s) = op.support_size() {
        if n > s {
            return param(format!("N={n} exceeds support size {s}"));
        }
    }
    if !(c > T::zero()) {
        return param(format!("scale c_N must be positive, got {c}"));
    }
    let mu_n = op.mu(n);
    let last = op.support_size().map(|s| s - 1);
    Ok(TridiagMatrix::from_generator(None, move |x| {
        if let Some(m) = last {
            if x > m {
                return (-T::one(), T::zero());
            }
            if x == m {
                return ((-op.up(x) - op.down(x) + mu_n) / c, T::zero());
            }
        }
        let off = (op.up(x) * op.down(x + 1)).sqrt() / c;
        ((-op.up(x) - op.down(x) + mu_n) / c, off)
    }))
}

/// The scale `c_N` used for each family in its standard limit transition.
pub fn default_scale<T: Real>(spec: &FamilySpec<T>, n: usize) -> T {
    let nn = idx::<T>(n);
    match *spec {
        FamilySpec::Charlier { .. } => (lit::<T>(2.0) * nn).sqrt(),
        FamilySpec::Meixner { .. } => T::one(),
        FamilySpec::Krawtchouk { p, m } => (lit::<T>(2.0) * p * idx::<T>(m)).sqrt(),
        FamilySpec::Hahn { m, .. } => idx(m),
        FamilySpec::Racah { m, .. } => idx::<T>(m) * idx::<T>(m) / lit(2.0),
        _ => T::one(),
    }
}

/// Edge scaling `(σ, τ, c)` taking a discrete ensemble near its leftmost
/// particle to the Airy operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryScaling<T> {
    pub sigma: T,
    pub tau: T,
    pub c: T,
}

/// Scaling constants of a DH or DL ensemble at its soft edge.
pub fn airy_scaling<T: Real>(spec: &EnsembleSpec<T>) -> Result<AiryScaling<T>> {
    let rho = spec.rho;
    match spec.base {
        Base::DH => {
            let ok = match spec.sign {
                Sign::Plus => rho > T::zero(),
                Sign::Minus => rho < T::zero(),
            };
            if !ok {
                return param(format!("DH edge scaling needs ±ρ > 0, got ρ={rho}"));
            }
            let sigma = rho * rho / lit(2.0);
            let tau = sigma.cbrt();
            Ok(AiryScaling {
                sigma,
                tau,
                c: sigma.powf(lit(1.0 / 6.0)),
            })
        }
        Base::DL { beta } => {
            let ok = match spec.sign {
                Sign::Plus => rho > beta,
                Sign::Minus => beta > rho,
            };
            if !ok || !(rho > T::zero()) {
                return param(format!(
                    "DL edge scaling needs ρ/β > 1 (plus) or β/ρ > 1 (minus); got ρ={rho}, β={beta}"
                ));
            }
            let sigma = (rho - beta) * (rho - beta) / (lit::<T>(4.0) * rho);
            let tau = (rho * rho - beta * beta).abs().powf(lit(2.0 / 3.0)) / (lit::<T>(16.0).cbrt() * rho);
            let c = (sigma * (sigma + beta)).sqrt() / (tau * tau);
            Ok(AiryScaling { sigma, tau, c })
        }
        Base::DJ { .. } => param("the Airy edge scaling is defined for DH and DL only"),
    }
}

/// Residuals of the two scaling identities
/// `2√(σ(σ+β)) ± (2σ+β−ρ) = 0` and
/// `√(σ(σ+β)) τ⁻² = τ (2σ+β ± 2√(σ(σ+β))) / √(σ(σ+β))`.
pub fn dl_scaling_residuals<T: Real>(spec: &EnsembleSpec<T>) -> Result<(T, T)> {
    let s = airy_scaling(spec)?;
    let Base::DL { beta } = spec.base else {
        return param("residuals are defined for DL ensembles");
    };
    let pm = match spec.sign {
        Sign::Plus => T::one(),
        Sign::Minus => -T::one(),
    };
    let root = (s.sigma * (s.sigma + beta)).sqrt();
    let r1 = lit::<T>(2.0) * root + pm * (lit::<T>(2.0) * s.sigma + beta - spec.rho);
    let lhs = root / (s.tau * s.tau);
    let rhs = s.tau * (lit::<T>(2.0) * s.sigma + beta + pm * lit::<T>(2.0) * root) / root;
    Ok((r1, lhs - rhs))
}

/// Normalized action of the ensemble's Jacobi difference operator on
/// `f(x) = g((σ − x)/τ)` at the lattice point nearest `σ − τv`.
///
/// Returns `(v_eff, value)` where `v_eff = (σ − x)/τ` is the grid point that
/// was actually used.
pub fn apply_scaled_operator<T: Real>(spec: &EnsembleSpec<T>, g: impl Fn(T) -> T, v: T) -> Result<(T, T)> {
    let s = airy_scaling(spec)?;
    let xr = (s.sigma - s.tau * v).round();
    if xr < T::zero() {
        return domain(format!("lattice point σ−τv = {} is negative", s.sigma - s.tau * v));
    }
    let x = xr.to_usize().unwrap_or(0);
    let f = |y: T| g((s.sigma - y) / s.tau);
    let xf = idx::<T>(x);
    let m = build_limit_jacobi(spec);
    let (d, up) = (m.diag(x), m.offdiag(x));
    let down = if x > 0 { m.offdiag(x - 1) } else { T::zero() };
    let mut act = up * f(xf + T::one()) + d * f(xf);
    if x > 0 {
        act += down * f(xf - T::one());
    }
    let val = match spec.base {
        Base::DH => lit::<T>(2.0).sqrt() * s.c * act,
        _ => act / s.c,
    };
    Ok(((s.sigma - xf) / s.tau, val))
}
