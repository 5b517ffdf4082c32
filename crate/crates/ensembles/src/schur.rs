//! Partitions, Schur polynomials at principal specializations, the Schur
//! measures `SM` and `SM′` with equal variables on each side, and their
//! images as Meixner and Krawtchouk ensembles.

use num_traits::{FromPrimitive, Num};
use std::collections::BTreeMap;

use crate::dpp::{config_probability, PointConfiguration};
use crate::kernels::{cd_kernel_window, CdMethod};
use crate::error::{param, Result};
use crate::orthopoly::FamilySpec;

/// Weakly decreasing list of positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Trailing zeros are dropped.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) || parts.contains(&0) {
            return param(format!("{parts:?} is not a partition"));
        }
        Ok(Partition { parts })
    }

    pub fn empty() -> Self {
        Partition::default()
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `|λ|`.
    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `λ_i` with the 1-based index convention; zero past the length.
    pub fn part(&self, i: usize) -> usize {
        if i == 0 {
            return 0;
        }
        self.parts.get(i - 1).copied().unwrap_or(0)
    }

    /// Transposed diagram: `λ′_j = #{i : λ_i ≥ j}`.
    pub fn conjugate(&self) -> Self {
        let first = self.part(1);
        let parts = (1..=first).map(|j| self.parts.iter().filter(|&&p| p >= j).count()).collect();
        Partition { parts }
    }
}

/// All partitions with at most `rows` parts, each at most `cols`.
pub fn partitions_in_box(rows: usize, cols: usize) -> Vec<Partition> {
    fn rec(rows: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        out.push(Partition { parts: cur.clone() });
        if cur.len() == rows {
            return;
        }
        for p in 1..=max {
            cur.push(p);
            rec(rows, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(rows, cols, &mut Vec::new(), &mut out);
    out
}

/// `s_λ(x, …, x)` with `a` equal arguments, by the Weyl dimension formula
/// `x^{|λ|} Π_{i<j≤a} (λ_i − i − λ_j + j)/(j − i)`. Exact in any field.
pub fn principal_specialization<T: Num + Clone + FromPrimitive>(lam: &Partition, a: usize, x: T) -> T {
    if lam.len() > a {
        return T::zero();
    }
    let from = |v: i64| T::from_i64(v).expect("integer representable");
    let mut acc = num_traits::pow(x, lam.size());
    for i in 1..=a {
        for j in i + 1..=a {
            let num = lam.part(i) as i64 - i as i64 - lam.part(j) as i64 + j as i64;
            acc = acc * from(num) / from((j - i) as i64);
        }
    }
    acc
}

/// `ln s_λ(xᵃ)`, or `−∞` when the polynomial vanishes.
pub fn ln_principal_specialization(lam: &Partition, a: usize, x: f64) -> f64 {
    if lam.len() > a {
        return f64::NEG_INFINITY;
    }
    let mut acc = lam.size() as f64 * x.ln();
    for i in 1..=a {
        for j in i + 1..=a {
            let num = lam.part(i) as f64 - i as f64 - lam.part(j) as f64 + j as f64;
            acc += num.ln() - ((j - i) as f64).ln();
        }
    }
    acc
}

fn check_measure(a: usize, x: f64, b: usize, y: f64, primed: bool) -> Result<()> {
    if a == 0 || b == 0 {
        return param("Schur measures need a, b ≥ 1");
    }
    if !(x > 0.0 && y > 0.0) {
        return param("specialization variables must be positive");
    }
    if !primed && x * y >= 1.0 {
        return param(format!("SM needs xy < 1, got {}", x * y));
    }
    Ok(())
}

/// `SM(λ) = s_λ(xᵃ) s_λ(y^b) (1 − xy)^{ab}`, or, when `primed`,
/// `SM′(λ) = s_λ(xᵃ) s_{λ′}(y^b) (1 + xy)^{−ab}`.
pub fn schur_measure_weight(lam: &Partition, a: usize, x: f64, b: usize, y: f64, primed: bool) -> Result<f64> {
    check_measure(a, x, b, y, primed)?;
    let ab = (a * b) as f64;
    let ln = if primed {
        ln_principal_specialization(lam, a, x) + ln_principal_specialization(&lam.conjugate(), b, y) - ab * (x * y).ln_1p()
    } else {
        ln_principal_specialization(lam, a, x) + ln_principal_specialization(lam, b, y) + ab * (-x * y).ln_1p()
    };
    Ok(ln.exp())
}

/// `{min(a,b) + λ_i − i}_{i=1..min(a,b)}` for `SM`, `{a + λ_i − i}_{i=1..a}`
/// for `SM′`.
pub fn pushforward_config(lam: &Partition, a: usize, b: usize, primed: bool) -> PointConfiguration {
    let n = if primed { a } else { a.min(b) };
    let sites = (1..=n).map(|i| n + lam.part(i) - i).collect();
    PointConfiguration::new(sites).expect("λ_i − i is strictly decreasing")
}

/// Orthogonal polynomial ensemble that the pushforward should reproduce,
/// with its number of particles.
pub fn pushforward_family(a: usize, x: f64, b: usize, y: f64, primed: bool) -> Result<(FamilySpec<f64>, usize)> {
    check_measure(a, x, b, y, primed)?;
    let xy = x * y;
    Ok(if primed {
        (FamilySpec::Krawtchouk { p: xy / (1.0 + xy), m: a + b - 1 }, a)
    } else {
        (
            FamilySpec::Meixner {
                beta: (a.abs_diff(b) + 1) as f64,
                xi: xy,
            },
            a.min(b),
        )
    })
}

/// Law of the pushforward over partitions with `λ_1 ≤ cols`, and the mass
/// left outside that box.
pub fn pushforward_law(a: usize, x: f64, b: usize, y: f64, primed: bool, cols: usize) -> Result<(BTreeMap<PointConfiguration, f64>, f64)> {
    check_measure(a, x, b, y, primed)?;
    let rows = if primed { a } else { a.min(b) };
    let cols = if primed { cols.min(b) } else { cols };
    let mut law = BTreeMap::new();
    let mut total = 0.0;
    for lam in partitions_in_box(rows, cols) {
        let w = schur_measure_weight(&lam, a, x, b, y, primed)?;
        total += w;
        *law.entry(pushforward_config(&lam, a, b, primed)).or_insert(0.0) += w;
    }
    Ok((law, (1.0 - total).max(0.0)))
}

/// Right-hand side of the Cauchy identity: `(1 − xy)^{−ab}` or `(1 + xy)^{ab}`.
pub fn cauchy_product(a: usize, x: f64, b: usize, y: f64, primed: bool) -> f64 {
    let ab = (a * b) as f64;
    if primed {
        (ab * (x * y).ln_1p()).exp()
    } else {
        (-ab * (-x * y).ln_1p()).exp()
    }
}

/// Number of partitions of `n` with at most `rows` parts; used for tail bounds.
pub fn count_partitions(n: usize, rows: usize) -> f64 {
    let mut p = vec![vec![0f64; rows + 1]; n + 1];
    for r in 0..=rows {
        p[0][r] = 1.0;
    }
    for m in 1..=n {
        for r in 1..=rows {
            p[m][r] = p[m][r - 1] + if m >= r { p[m - r][r] } else { 0.0 };
        }
    }
    p[n][rows]
}

/// All `k`-element subsets of `{0..m−1}`, each sorted.
pub fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for last in k - 1..m {
        for mut s in subsets(last, k - 1) {
            s.push(last);
            out.push(s);
        }
    }
    out
}

/// Exact law of the `n`-point ensemble of a finite family on its support.
pub fn finite_ensemble_law(fam: &FamilySpec<f64>, n: usize) -> Result<BTreeMap<PointConfiguration, f64>> {
    let size = match fam.support_size() {
        Some(s) => s,
        None => return param("finite_ensemble_law needs a finite support"),
    };
    if n == 0 {
        return Ok(BTreeMap::from([(PointConfiguration::default(), 1.0)]));
    }
    let k = cd_kernel_window(fam, n, size, CdMethod::Direct)?;
    subsets(size, n)
        .into_iter()
        .map(|s| {
            let c = PointConfiguration::new(s)?;
            let pr = config_probability(&k, &c)?;
            Ok((c, pr))
        })
        .collect()
}

/// Total-variation distance between two laws on configurations.
pub fn total_variation(a: &BTreeMap<PointConfiguration, f64>, b: &BTreeMap<PointConfiguration, f64>) -> f64 {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0
}

/// TV distance between the hole process of `Krawtchouk(N, (1+√q u)^{−1}, M+N−2)`
/// and `Krawtchouk(M−1, (1+1/(√q u))^{−1}, M+N−2)` on `{0..M+N−2}`.
pub fn krawtchouk_duality_tv(m: usize, n: usize, q: f64, u: f64) -> Result<f64> {
    if m == 0 || n == 0 || m + n < 2 {
        return param("duality needs M, N ≥ 1");
    }
    let top = m + n - 2;
    if top == 0 {
        // one site, occupied on the left, empty on the right
        return Ok(0.0);
    }
    let s = q.sqrt() * u;
    let left = finite_ensemble_law(&FamilySpec::Krawtchouk { p: 1.0 / (1.0 + s), m: top }, n)?;
    let holes: BTreeMap<PointConfiguration, f64> = left.into_iter().map(|(c, p)| (c.complement(top + 1), p)).collect();
    let right = finite_ensemble_law(&FamilySpec::Krawtchouk { p: 1.0 / (1.0 + 1.0 / s), m: top }, m - 1)?;
    Ok(total_variation(&holes, &right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn partitions_basics() {
        let l = p(&[4, 2, 2, 1]);
        assert_eq!(l.size(), 9);
        assert_eq!(l.conjugate().parts(), &[4, 3, 1, 1]);
        assert_eq!(l.conjugate().conjugate(), l);
        assert!(Partition::new(vec![1, 2]).is_err());
        assert_eq!(partitions_in_box(2, 2).len(), 6);
        assert_eq!(count_partitions(5, 5), 7.0);
    }

    #[test]
    fn weyl_formula_exact() {
        let x = Ratio::new(3i64, 7);
        assert_eq!(principal_specialization(&p(&[1]), 2, x), x * Ratio::from_integer(2));
        assert_eq!(principal_specialization(&p(&[2, 1]), 2, x), x * x * x * Ratio::from_integer(2));
        assert_eq!(principal_specialization(&p(&[1, 1, 1]), 2, x), Ratio::from_integer(0));
        // s_{(2)}(x,x,x) = h_2 of three equal variables = 6x²
        assert_eq!(principal_specialization(&p(&[2]), 3, x), x * x * Ratio::from_integer(6));
        let ln = ln_principal_specialization(&p(&[3, 1]), 3, 0.5);
        assert!((ln.exp() - principal_specialization(&p(&[3, 1]), 3, 0.5f64)).abs() < 1e-15);
    }

    #[test]
    fn empty_partition_weight() {
        let w = schur_measure_weight(&Partition::empty(), 2, 0.5, 3, 0.6, false).unwrap();
        assert!((w - (1.0f64 - 0.3).powi(6)).abs() < 1e-15);
        assert!(schur_measure_weight(&Partition::empty(), 2, 2.0, 3, 0.6, false).is_err());
    }

    #[test]
    fn primed_measure_is_finite() {
        let (a, b) = (3, 4);
        let (law, missing) = pushforward_law(a, 0.7, b, 0.9, true, 12).unwrap();
        assert!(missing < 1e-14);
        assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-13);
        assert_eq!(schur_measure_weight(&p(&[5]), a, 0.7, b, 0.9, true).unwrap(), 0.0);
    }

    #[test]
    fn pushforward_examples() {
        assert_eq!(pushforward_config(&Partition::empty(), 2, 3, false).sites(), &[0, 1]);
        assert_eq!(pushforward_config(&p(&[3]), 2, 2, false).sites(), &[0, 4]);
    }

    #[test]
    fn cauchy_partial_sums() {
        let (a, x, b, y) = (2, 0.5, 3, 0.6);
        let mut by_size = vec![0.0; 60];
        for lam in partitions_in_box(2, 59) {
            if lam.size() < 60 {
                by_size[lam.size()] += (ln_principal_specialization(&lam, a, x) + ln_principal_specialization(&lam, b, y)).exp();
            }
        }
        let full = cauchy_product(a, x, b, y, false);
        let mut acc = 0.0;
        let mut prev = f64::INFINITY;
        for s in by_size.iter().take(21) {
            acc += s;
            assert!(full - acc < prev);
            prev = full - acc;
        }
        assert!(prev > 0.0 && prev < 1e-3);
    }

    fn ensemble_law(fam: &FamilySpec<f64>, n: usize, configs: impl Iterator<Item = PointConfiguration>, window: usize) -> BTreeMap<PointConfiguration, f64> {
        let k = cd_kernel_window(fam, n, window, CdMethod::Direct).unwrap();
        configs.map(|c| (c.clone(), config_probability(&k, &c).unwrap())).collect()
    }

    #[test]
    fn schur_to_meixner() {
        for (a, b) in [(1, 1), (2, 3), (3, 2), (2, 2)] {
            let (x, y) = (0.5, 0.6);
            let cols = 70;
            let (law, missing) = pushforward_law(a, x, b, y, false, cols).unwrap();
            let (fam, n) = pushforward_family(a, x, b, y, false).unwrap();
            let target = ensemble_law(&fam, n, law.keys().cloned(), cols + n);
            assert!(total_variation(&law, &target) < 1e-9 + missing, "a={a} b={b}");
        }
    }

    #[test]
    fn schur_to_krawtchouk() {
        for (a, b) in [(1, 1), (2, 3), (3, 2), (4, 4)] {
            let (x, y) = (0.8, 0.7);
            let (law, _) = pushforward_law(a, x, b, y, true, b).unwrap();
            let (fam, n) = pushforward_family(a, x, b, y, true).unwrap();
            let target = ensemble_law(&fam, n, law.keys().cloned(), a + b);
            assert!(total_variation(&law, &target) < 1e-10, "a={a} b={b}");
            assert!((target.values().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn krawtchouk_particle_hole_duality() {
        for m in 1..=5 {
            for n in 1..=5 {
                let tv = krawtchouk_duality_tv(m, n, 0.25, 3.0).unwrap();
                assert!(tv < 1e-10, "M={m} N={n}: {tv}");
            }
        }
    }

    #[test]
    fn subsets_count() {
        assert_eq!(subsets(6, 3).len(), 20);
        assert_eq!(subsets(4, 0), vec![Vec::<usize>::new()]);
    }
}
