//! Correlation kernels of the discrete Hermite, Laguerre and Jacobi
//! ensembles, Christoffel–Darboux kernels of discrete families, and the
//! Airy kernel.

use rayon::prelude::*;

use crate::error::{domain, param, Error, Result};
use crate::orthopoly::{self, FamilySpec};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::scalar::{idx, lit, Real};
use crate::tridiag::{self, SymTridiag};

pub use crate::special::{airy, airy_kernel};

/// Continuous family underlying a discrete ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Base<T> {
    DH,
    DL { beta: T },
    DJ { a: T, b: T },
}

/// Which side of the cut the ensemble integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// `(ρ, ∞)`.
    Plus,
    /// `(−∞, ρ)`.
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn factor<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

/// One of `DH±(ρ)`, `DL±(ρ; β)`, `DJ±(ρ; a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec<T> {
    pub base: Base<T>,
    pub sign: Sign,
    pub rho: T,
}

impl<T: Real> EnsembleSpec<T> {
    /// Validated constructor. The support endpoints `ρ = 0` (DL) and
    /// `ρ = ±1` (DJ) are accepted and give the trivial kernels `0` and `δ`.
    pub fn new(base: Base<T>, sign: Sign, rho: T) -> Result<Self> {
        let s = EnsembleSpec { base, sign, rho };
        s.validate()?;
        Ok(s)
    }

    pub fn dh(sign: Sign, rho: T) -> Result<Self> {
        Self::new(Base::DH, sign, rho)
    }

    pub fn dl(beta: T, sign: Sign, rho: T) -> Result<Self> {
        Self::new(Base::DL { beta }, sign, rho)
    }

    pub fn dj(a: T, b: T, sign: Sign, rho: T) -> Result<Self> {
        Self::new(Base::DJ { a, b }, sign, rho)
    }

    pub fn validate(&self) -> Result<()> {
        self.family().validate()?;
        if !self.rho.is_finite() {
            return param(format!("ρ must be finite, got {}", self.rho));
        }
        match self.base {
            Base::DH => Ok(()),
            Base::DL { .. } if self.rho < T::zero() => param(format!("DL needs ρ ≥ 0, got {}", self.rho)),
            Base::DJ { .. } if self.rho.abs() > T::one() => param(format!("DJ needs ρ in [−1,1], got {}", self.rho)),
            _ => Ok(()),
        }
    }

    /// Continuous family whose weight defines the ensemble.
    pub fn family(&self) -> FamilySpec<T> {
        match self.base {
            Base::DH => FamilySpec::Hermite,
            Base::DL { beta } => FamilySpec::Laguerre { beta },
            Base::DJ { a, b } => FamilySpec::Jacobi { a, b },
        }
    }

    /// The complementary ensemble with the same cut.
    pub fn complement(&self) -> Self {
        EnsembleSpec {
            sign: self.sign.flip(),
            ..*self
        }
    }
}

/// Symmetric kernel on the window `{0..size−1}`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T> {
    size: usize,
    values: Vec<T>,
}

impl<T: Real> KernelMatrix<T> {
    pub fn new(size: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != size * size {
            return param(format!("kernel of size {size} needs {} entries, got {}", size * size, values.len()));
        }
        Ok(KernelMatrix { size, values })
    }

    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(size * size);
        for x in 0..size {
            for y in 0..size {
                values.push(f(x, y));
            }
        }
        KernelMatrix { size, values }
    }

    pub fn zeros(size: usize) -> Self {
        KernelMatrix {
            size,
            values: vec![T::zero(); size * size],
        }
    }

    pub fn identity(size: usize) -> Self {
        Self::from_fn(size, |x, y| if x == y { T::one() } else { T::zero() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[x * self.size + y]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `δ − K` on the same window.
    pub fn complement(&self) -> Self {
        Self::from_fn(self.size, |x, y| {
            let d = if x == y { T::one() } else { T::zero() };
            d - self.get(x, y)
        })
    }

    /// `(−1)^{x+y} K(x, y)`.
    pub fn conjugated(&self) -> Self {
        Self::from_fn(self.size, |x, y| {
            if (x + y) % 2 == 0 {
                self.get(x, y)
            } else {
                -self.get(x, y)
            }
        })
    }

    /// The leading `size × size` block.
    pub fn restrict(&self, size: usize) -> Result<Self> {
        if size > self.size {
            return param(format!("cannot restrict a size-{} kernel to {size}", self.size));
        }
        Ok(Self::from_fn(size, |x, y| self.get(x, y)))
    }

    /// Entries `K(p_i, p_j)` for the listed sites.
    pub fn principal(&self, points: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(points.len() * points.len());
        for &x in points {
            for &y in points {
                out.push(self.get(x, y));
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> T {
        let mut m = T::zero();
        for x in 0..self.size {
            for y in 0..x {
                m = m.max((self.get(x, y) - self.get(y, x)).abs());
            }
        }
        m
    }

    pub fn trace(&self) -> T {
        (0..self.size).map(|x| self.get(x, x)).sum()
    }
}

/// `δ − K`.
pub fn complement_kernel<T: Real>(k: &KernelMatrix<T>) -> KernelMatrix<T> {
    k.complement()
}

/// Quadrature nodes for integrals `∫_I ψ_x ψ_y dt` over one side of the cut.
///
/// Each node carries `extra = ln` of the factor removed from `ψ_x ψ_y` because
/// the rule already weights it (endpoint powers of Jacobi-type panels).
#[derive(Debug, Clone, Default)]
pub struct SideRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub extra: Vec<T>,
}

impl<T: Real> SideRule<T> {
    fn push_panel(&mut self, rule: &crate::quadrature::Rule<T>, lo: T, hi: T) {
        let r = rule.mapped(lo, hi);
        self.nodes.extend(r.nodes);
        self.weights.extend(r.weights);
        self.extra.extend(std::iter::repeat_n(T::zero(), rule.len()));
    }

    /// Panel on `[lo, hi]` whose rule carries `|t − end|^e` with `end` the
    /// endpoint at `end_is_lo ? lo : hi`.
    fn push_singular_panel(&mut self, rule: &crate::quadrature::Rule<T>, lo: T, hi: T, e: T, end_is_lo: bool) {
        let half = (hi - lo) / lit(2.0);
        let scale = half.powf(e + T::one());
        if scale == T::zero() {
            return;
        }
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let t = lo + half * (s + T::one());
            let dist = if end_is_lo { t - lo } else { hi - t };
            self.nodes.push(t);
            self.weights.push(w * scale);
            self.extra.push(-e * dist.ln());
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

const PANEL_ORDER: usize = 24;

/// Outcome of intersecting a side of the cut with the effective support.
enum Side<T> {
    /// The side misses the support: kernel `0`.
    Empty,
    /// The side is the whole support: kernel `δ`.
    Full,
    Rule(SideRule<T>),
}

/// Quadrature over the side `sign` of the cut that integrates `ψ_x ψ_y`
/// for all `x, y ≤ n_max` to about machine precision.
pub fn side_rule<T: Real>(spec: &EnsembleSpec<T>, n_max: usize) -> Result<SideRule<T>> {
    match build_side(spec, n_max)? {
        Side::Rule(r) => Ok(r),
        Side::Empty => Ok(SideRule::default()),
        Side::Full => Err(Error::Domain("the side covers the whole support; the kernel is the identity".into())),
    }
}

fn build_side<T: Real>(spec: &EnsembleSpec<T>, n_max: usize) -> Result<Side<T>> {
    spec.validate()?;
    let rho = spec.rho;
    let plus = spec.sign == Sign::Plus;
    let nf = idx::<T>(n_max);
    let two = lit::<T>(2.0);
    let legendre = gauss_legendre::<T>(PANEL_ORDER)?;
    let mut rule = SideRule::default();
    match spec.base {
        Base::DH => {
            let t_cut = (rho.abs() + T::one()).max((lit::<T>(4.0) * nf + lit(60.0)).sqrt());
            let (lo, hi) = if plus { (rho.max(-t_cut), t_cut) } else { (-t_cut, rho.min(t_cut)) };
            if lo >= hi {
                return Ok(Side::Empty);
            }
            let k = (two * nf + T::one()).sqrt() + T::one();
            let h = T::PI() / k;
            let panels = ((hi - lo) / h).ceil().to_usize().unwrap_or(1).max(1);
            let w = (hi - lo) / idx(panels);
            for p in 0..panels {
                rule.push_panel(&legendre, lo + w * idx(p), lo + w * idx(p + 1));
            }
        }
        Base::DL { beta } => {
            if rho <= T::zero() {
                return Ok(if plus { Side::Full } else { Side::Empty });
            }
            let s = two * nf + beta;
            let upper_turn = s + (s * s - (beta - T::one()).powi(2)).max(T::zero()).sqrt();
            let lower_turn = (beta - T::one()).powi(2) / upper_turn;
            let margin = lit::<T>(20.0) * upper_turn.sqrt() + lit(60.0);
            let t_lo = (lower_turn - margin).max(T::zero());
            let t_hi = upper_turn + margin;
            let (lo, hi) = if plus { (rho.max(t_lo), t_hi) } else { (t_lo, rho.min(t_hi)) };
            if lo >= hi {
                return Ok(Side::Empty);
            }
            let mut t = lo;
            if lo == T::zero() {
                let t1 = (T::PI() * T::PI() / (nf + T::one())).min(hi);
                let jac = gauss_jacobi::<T>(T::zero(), beta - T::one(), 30)?;
                rule.push_singular_panel(&jac, T::zero(), t1, beta - T::one(), true);
                t = t1;
            }
            let root_u = upper_turn.sqrt().max(T::one());
            let cap = root_u / two;
            while t < hi {
                let h = (two * T::PI() * t.max(T::epsilon()).sqrt() / root_u).min(cap).max(lit(1e-6));
                let next = if t + h > hi || hi - (t + h) < h / lit(4.0) { hi } else { t + h };
                rule.push_panel(&legendre, t, next);
                t = next;
            }
        }
        Base::DJ { a, b } => {
            if rho <= -T::one() {
                return Ok(if plus { Side::Full } else { Side::Empty });
            }
            if rho >= T::one() {
                return Ok(if plus { Side::Empty } else { Side::Full });
            }
            let (lo, hi) = if plus { (rho, T::one()) } else { (-T::one(), rho) };
            let th_hi = hi.acos();
            let th_lo = lo.acos();
            let panels = ((th_lo - th_hi) * (nf + two) / T::PI()).ceil().to_usize().unwrap_or(1) + 1;
            let dth = (th_lo - th_hi) / idx(panels);
            let jac_top = gauss_jacobi::<T>(a, T::zero(), PANEL_ORDER)?;
            let jac_bot = gauss_jacobi::<T>(T::zero(), b, PANEL_ORDER)?;
            for p in 0..panels {
                let right = if p == 0 { hi } else { (th_hi + dth * idx(p)).cos() };
                let left = if p + 1 == panels { lo } else { (th_hi + dth * idx(p + 1)).cos() };
                let at_top = p == 0 && hi == T::one();
                let at_bot = p + 1 == panels && lo == -T::one();
                if at_top && at_bot {
                    // a single panel spanning the whole interval cannot occur: panels ≥ 2
                    unreachable!();
                } else if at_top {
                    rule.push_singular_panel(&jac_top, left, right, a, false);
                } else if at_bot {
                    rule.push_singular_panel(&jac_bot, left, right, b, true);
                } else {
                    rule.push_panel(&legendre, left, right);
                }
            }
        }
    }
    Ok(Side::Rule(rule))
}

/// `G(x, y) = ∫_side ψ_x ψ_y` for `x, y < size`, as a row-major matrix.
fn side_gram<T: Real>(spec: &EnsembleSpec<T>, rule: &SideRule<T>, size: usize) -> Result<Vec<T>> {
    let fam = spec.family();
    if size == 0 {
        return Ok(Vec::new());
    }
    let chunk = 256;
    let partials: Vec<Result<Vec<T>>> = (0..rule.len())
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .map(|ids| {
            let mut g = vec![T::zero(); size * size];
            for &i in ids {
                let psi = orthopoly::orthonormal_functions(&fam, size - 1, rule.nodes[i], rule.extra[i])?;
                let w = rule.weights[i];
                for x in 0..size {
                    let wx = w * psi[x];
                    if wx == T::zero() {
                        continue;
                    }
                    let row = &mut g[x * size..];
                    for y in x..size {
                        row[y] += wx * psi[y];
                    }
                }
            }
            Ok(g)
        })
        .collect();
    let mut g = vec![T::zero(); size * size];
    for part in partials {
        for (a, b) in g.iter_mut().zip(part?) {
            *a += b;
        }
    }
    for x in 0..size {
        for y in 0..x {
            g[x * size + y] = g[y * size + x];
        }
    }
    Ok(g)
}

/// `K±_ρ` on the window `{0..size−1}` by integrating `ψ_x ψ_y` over the side
/// of the cut that defines the ensemble.
pub fn discrete_kernel_window<T: Real>(spec: &EnsembleSpec<T>, size: usize) -> Result<KernelMatrix<T>> {
    match build_side(spec, size.saturating_sub(1))? {
        Side::Empty => Ok(KernelMatrix::zeros(size)),
        Side::Full => Ok(KernelMatrix::identity(size)),
        Side::Rule(rule) => KernelMatrix::new(size, side_gram(spec, &rule, size)?),
    }
}

/// A single kernel entry `K±_ρ(x, y)`.
pub fn discrete_kernel_quadrature<T: Real>(spec: &EnsembleSpec<T>, x: usize, y: usize) -> Result<T> {
    let k = discrete_kernel_window(spec, x.max(y) + 1)?;
    Ok(k.get(x, y))
}

/// Closed-form off-diagonal kernel built from the polynomials of the family
/// and of its parameter-shifted companion.
pub fn discrete_kernel_integrable<T: Real>(spec: &EnsembleSpec<T>, x: usize, y: usize) -> Result<T> {
    spec.validate()?;
    if x == y {
        return domain("the integrable form is undefined on the diagonal");
    }
    let rho = spec.rho;
    let sgn = spec.sign.factor::<T>();
    let (xf, yf) = (idx::<T>(x), idx::<T>(y));
    let one = T::one();
    let two = lit::<T>(2.0);
    // signed product of two values with a log-scale prefactor
    let prod = |u: T, v: T, ln_pre: T| -> T {
        if u == T::zero() || v == T::zero() {
            return T::zero();
        }
        let s = u.signum() * v.signum();
        s * (u.abs().ln() + v.abs().ln() + ln_pre).exp()
    };
    match spec.base {
        Base::DH => {
            let fam = FamilySpec::Hermite;
            let h = |n: usize| orthopoly::eval_poly(&fam, n, rho);
            let ln_pre = -rho * rho
                - (T::PI().ln() + orthopoly_ln_fact(x) + orthopoly_ln_fact(y) + idx::<T>(x + y + 2) * two.ln())
                    / two;
            let num = prod(h(x + 1)?, h(y)?, ln_pre) - prod(h(x)?, h(y + 1)?, ln_pre);
            Ok(-sgn * num / (xf - yf))
        }
        Base::DL { beta } => {
            if rho <= T::zero() {
                return Ok(T::zero());
            }
            let f0 = FamilySpec::Laguerre { beta };
            let f1 = FamilySpec::Laguerre { beta: beta + one };
            let l0 = |n: usize| orthopoly::eval_poly(&f0, n, rho);
            let l1 = |n: usize| if n == 0 { Ok(T::zero()) } else { orthopoly::eval_poly(&f1, n - 1, rho) };
            let ln_pre = (orthopoly_ln_fact::<T>(x) + orthopoly_ln_fact::<T>(y)
                - crate::special::ln_gamma(xf + beta)
                - crate::special::ln_gamma(yf + beta))
                / two
                + beta * rho.ln()
                - rho;
            let num = prod(l1(x)?, l0(y)?, ln_pre) - prod(l0(x)?, l1(y)?, ln_pre);
            Ok(sgn * num / (xf - yf))
        }
        Base::DJ { a, b } => {
            if rho.abs() >= one {
                return Ok(T::zero());
            }
            let f0 = FamilySpec::Jacobi { a, b };
            let f1 = FamilySpec::Jacobi { a: a + one, b: b + one };
            let p0 = |n: usize| orthopoly::eval_poly(&f0, n, rho);
            let p1 = |n: usize| if n == 0 { Ok(T::zero()) } else { orthopoly::eval_poly(&f1, n - 1, rho) };
            let ln_pre = (a + one) * (one - rho).ln() + (b + one) * (one + rho).ln()
                - two.ln()
                - (orthopoly::ln_norm_sq(&f0, x)? + orthopoly::ln_norm_sq(&f0, y)?) / two;
            let sx = xf + a + b + one;
            let sy = yf + a + b + one;
            let num = sx * prod(p1(x)?, p0(y)?, ln_pre) - sy * prod(p0(x)?, p1(y)?, ln_pre);
            Ok(sgn * num / (xf * sx - yf * sy))
        }
    }
}

fn orthopoly_ln_fact<T: Real>(n: usize) -> T {
    crate::special::ln_factorial(n)
}

/// How a Christoffel–Darboux kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdMethod {
    /// `[A_N]_+` of the pre-limit Jacobi matrix.
    Spectral,
    /// `Σ_{n<N} φ_n(x) φ_n(y)` from the orthonormal recurrence.
    Direct,
    /// As `Direct`, with the closed-form recurrence coefficients of the
    /// classical families instead of Lanczos.
    Explicit,
}

/// Rank-`N` Christoffel–Darboux kernel of a discrete family on the window
/// `{0..size−1}`, with respect to counting measure.
pub fn cd_kernel_window<T: Real>(fam: &FamilySpec<T>, n: usize, size: usize, method: CdMethod) -> Result<KernelMatrix<T>> {
    let op = orthopoly::difference_operator(fam)?;
    if n == 0 {
        return param("N must be positive");
    }
    if let Some(s) = op.support_size() {
        if n > s {
            return param(format!("N={n} exceeds support size {s}"));
        }
    }
    match method {
        CdMethod::Direct | CdMethod::Explicit => {
            let rec = if method == CdMethod::Direct {
                orthopoly::orthonormal_recurrence(fam, n - 1)?
            } else {
                orthopoly::classical_recurrence(fam, n - 1)?
            };
            let top = op.support_size().unwrap_or(usize::MAX);
            let phis: Vec<Vec<T>> = (0..size)
                .map(|x| if x < top { rec.functions(fam, x, n - 1) } else { vec![T::zero(); n] })
                .collect();
            Ok(KernelMatrix::from_fn(size, |x, y| {
                phis[x].iter().zip(&phis[y]).map(|(&a, &b)| a * b).sum()
            }))
        }
        CdMethod::Spectral => {
            let c = tridiag::default_scale(fam, n);
            let m = tridiag::build_prelimit_jacobi(fam, n, c)?;
            let sites = match op.support_size() {
                Some(s) => s,
                None => forbidden_region_cut(&m, n)?,
            };
            let truncated = m.truncate(sites)?;
            let proj = tridiag::projection_block(&truncated, sites.min(size))?;
            if proj.rank != n {
                return Err(Error::Accuracy(format!(
                    "projection rank {} differs from N={n} (near-zero eigenvalues {:?})",
                    proj.rank, proj.near_zero
                )));
            }
            if op.support_size().is_none() {
                check_edge_mass(&truncated, n)?;
            }
            let w = proj.window;
            Ok(KernelMatrix::from_fn(size, |x, y| {
                if x < w && y < w {
                    proj.get(x, y)
                } else {
                    T::zero()
                }
            }))
        }
    }
}

/// Single entry of the rank-`N` Christoffel–Darboux kernel.
pub fn cd_kernel<T: Real>(fam: &FamilySpec<T>, n: usize, x: usize, y: usize) -> Result<T> {
    Ok(cd_kernel_window(fam, n, x.max(y) + 1, CdMethod::Spectral)?.get(x, y))
}

/// Truncation point past which every eigenvector of a positive eigenvalue
/// has decayed below `1e−18`: beyond the Gershgorin-forbidden threshold the
/// components shrink at least geometrically.
fn forbidden_region_cut<T: Real>(m: &tridiag::TridiagMatrix<T>, n: usize) -> Result<usize> {
    let mut log_decay = T::zero();
    let target = lit::<T>(1e-18).ln();
    let mut x = n + 1;
    let cap = 20_000_000usize;
    while x < cap {
        let d = m.diag(x);
        let left = m.offdiag(x - 1);
        let right = m.offdiag(x);
        let gap = -d - right;
        if gap > left {
            log_decay += (left / gap).ln();
            if log_decay < target {
                return Ok(x + 10);
            }
        }
        x += 1;
    }
    Err(Error::Accuracy("no forbidden region found for the pre-limit matrix".into()))
}

fn check_edge_mass<T: Real>(m: &SymTridiag<T>, n: usize) -> Result<()> {
    let len = m.len();
    let tail = 5.min(len);
    let ks: Vec<usize> = (len - n..len).collect();
    let eig = tridiag::eigenpairs_by_index(m, &ks)?;
    let mut mass = T::zero();
    for j in 0..ks.len() {
        let v = eig.vector(j);
        for &c in &v[len - tail..] {
            mass += c * c;
        }
    }
    if mass > lit(1e-14) {
        return Err(Error::Accuracy(format!("eigenvector mass {mass} at the truncation edge")));
    }
    Ok(())
}

/// Airy kernel on arbitrary points, row-major.
pub fn airy_kernel_matrix(points: &[f64]) -> Vec<f64> {
    let ai = crate::special::airy_f64();
    let vals: Vec<(f64, f64)> = points.iter().map(|&x| ai.eval(x)).collect();
    let n = points.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = ai.kernel_from(points[i], vals[i], points[j], vals[j]);
            out[i * n + j] = k;
            out[j * n + i] = k;
        }
    }
    out
}
