//! Exact sampling of determinantal point processes on a finite window and
//! empirical correlation functions.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

use crate::error::{param, Error, Result};
use crate::kernels::KernelMatrix;

/// Independent stream for replica `replica` under `seed`.
///
/// The stream depends only on the pair, so results do not change with the
/// number of worker threads.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Finite set of sites, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PointConfiguration {
    sites: Vec<usize>,
}

impl PointConfiguration {
    pub fn new(mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return param("configuration has a repeated site");
        }
        Ok(PointConfiguration { sites })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.sites.binary_search(&x).is_ok()
    }

    /// Holes of the configuration inside `{0..window−1}`.
    pub fn complement(&self, window: usize) -> Self {
        PointConfiguration {
            sites: (0..window).filter(|&x| !self.contains(x)).collect(),
        }
    }

    /// Parses one line of space-separated sites.
    pub fn parse(line: &str) -> Result<Self> {
        let sites = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parameter(format!("bad site {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }
}

impl fmt::Display for PointConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for x in &self.sites {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
            first = false;
        }
        Ok(())
    }
}

fn to_dmatrix(k: &KernelMatrix<f64>) -> DMatrix<f64> {
    let n = k.size();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (k.get(i, j) + k.get(j, i)))
}

/// Eigen-decomposition of a symmetric kernel, checked to be a valid
/// correlation kernel.
#[derive(Debug, Clone)]
pub struct DppSampler {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl DppSampler {
    pub fn new(k: &KernelMatrix<f64>) -> Result<Self> {
        if k.max_asymmetry() > 1e-10 {
            return Err(Error::KernelValidity(format!("kernel is not symmetric ({:e})", k.max_asymmetry())));
        }
        let eig = SymmetricEigen::new(to_dmatrix(k));
        let mut values = Vec::with_capacity(k.size());
        for &l in eig.eigenvalues.iter() {
            if !(-1e-6..=1.0 + 1e-6).contains(&l) {
                return Err(Error::KernelValidity(format!("eigenvalue {l} outside [0, 1]")));
            }
            values.push(if l < 1e-8 {
                0.0
            } else if l > 1.0 - 1e-8 {
                1.0
            } else {
                l
            });
        }
        Ok(DppSampler {
            values,
            vectors: eig.eigenvectors,
        })
    }

    /// One configuration: Bernoulli selection of eigenvectors, then the
    /// sequential projection sampler on their span.
    pub fn sample(&self, rng: &mut impl Rng) -> PointConfiguration {
        let n = self.values.len();
        let chosen: Vec<usize> = (0..n).filter(|&k| rng.gen::<f64>() < self.values[k]).collect();
        let mut v = self.vectors.select_columns(chosen.iter());
        let mut sites = Vec::with_capacity(chosen.len());
        let mut probs = vec![0.0; n];
        while v.ncols() > 0 {
            let k = v.ncols();
            for (i, p) in probs.iter_mut().enumerate() {
                *p = v.row(i).norm_squared();
            }
            let total: f64 = probs.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &p) in probs.iter().enumerate() {
                if u < p {
                    pick = i;
                    break;
                }
                u -= p;
            }
            while probs[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            sites.push(pick);
            // drop the direction along e_pick and re-orthonormalize
            let j = (0..k).max_by(|&a, &b| v[(pick, a)].abs().total_cmp(&v[(pick, b)].abs())).unwrap_or(0);
            let col = v.column(j).clone_owned();
            let pivot = col[pick];
            let mut rest = v.clone().remove_column(j);
            for c in 0..rest.ncols() {
                let r = rest[(pick, c)] / pivot;
                let mut colc = rest.column_mut(c);
                colc.axpy(-r, &col, 1.0);
            }
            gram_schmidt(&mut rest);
            v = rest;
        }
        sites.sort_unstable();
        PointConfiguration { sites }
    }
}

fn gram_schmidt(v: &mut DMatrix<f64>) {
    for c in 0..v.ncols() {
        for _ in 0..2 {
            for p in 0..c {
                let d = v.column(p).dot(&v.column(c));
                let prev = v.column(p).clone_owned();
                v.column_mut(c).axpy(-d, &prev, 1.0);
            }
        }
        let nrm = v.column(c).norm();
        if nrm > 0.0 {
            v.column_mut(c).unscale_mut(nrm);
        }
    }
}

/// Draws one configuration from the determinantal process of `k`.
pub fn sample_dpp(k: &KernelMatrix<f64>, rng: &mut impl Rng) -> Result<PointConfiguration> {
    Ok(DppSampler::new(k)?.sample(rng))
}

/// `count` samples, replica `i` drawn from `replica_rng(seed, i)`.
pub fn sample_many(k: &KernelMatrix<f64>, seed: u64, count: usize) -> Result<Vec<PointConfiguration>> {
    use rayon::prelude::*;
    let s = DppSampler::new(k)?;
    Ok((0..count).into_par_iter().map(|i| s.sample(&mut replica_rng(seed, i as u64))).collect())
}

/// Fraction of samples containing every site of `points`, with its
/// binomial standard error.
pub fn empirical_correlation(samples: &[PointConfiguration], points: &[usize]) -> Result<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_unstable();
    if p.windows(2).any(|w| w[0] == w[1]) {
        return param("correlation points must be distinct");
    }
    if samples.is_empty() {
        return param("no samples");
    }
    let hits = samples.iter().filter(|c| p.iter().all(|&x| c.contains(x))).count();
    let n = samples.len() as f64;
    let m = hits as f64 / n;
    Ok((m, (m * (1.0 - m) / n).sqrt()))
}

/// Number of eigenvalues above one half.
pub fn kernel_rank(k: &KernelMatrix<f64>) -> usize {
    SymmetricEigen::new(to_dmatrix(k)).eigenvalues.iter().filter(|&&l| l > 0.5).count()
}

/// `P(X = config) = det[K(x_i, x_j)]` for an `N`-point process.
pub fn config_probability(k: &KernelMatrix<f64>, config: &PointConfiguration) -> Result<f64> {
    let n = config.len();
    let rank = kernel_rank(k);
    if rank != n {
        return param(format!("kernel rank {rank} does not match configuration size {n}"));
    }
    if let Some(&x) = config.sites().last() {
        if x >= k.size() {
            return param(format!("site {x} outside the kernel window"));
        }
    }
    Ok(minor(k, config.sites()))
}

/// Principal minor `det[K(x_i, x_j)]`.
pub fn minor(k: &KernelMatrix<f64>, points: &[usize]) -> f64 {
    let n = points.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_row_slice(n, n, &k.principal(points)).lu().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{discrete_kernel_window, EnsembleSpec, Sign};
    use crate::orthopoly::{self, FamilySpec};
    use std::collections::HashMap;

    fn law(samples: &[PointConfiguration]) -> HashMap<PointConfiguration, f64> {
        let mut m = HashMap::new();
        for s in samples {
            *m.entry(s.clone()).or_insert(0.0) += 1.0 / samples.len() as f64;
        }
        m
    }

    #[test]
    fn configuration_basics() {
        let c = PointConfiguration::new(vec![4, 1, 2]).unwrap();
        assert_eq!(c.sites(), &[1, 2, 4]);
        assert_eq!(c.to_string(), "1 2 4");
        assert_eq!(PointConfiguration::parse("1 2 4").unwrap(), c);
        assert_eq!(c.complement(6).sites(), &[0, 3, 5]);
        assert!(PointConfiguration::new(vec![1, 1]).is_err());
    }

    #[test]
    fn rank_one_projection() {
        let k = KernelMatrix::new(2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let s = sample_many(&k, 7, 20_000).unwrap();
        assert!(s.iter().all(|c| c.len() == 1));
        let (p, se) = empirical_correlation(&s, &[0]).unwrap();
        assert!((p - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn identity_gives_full_window() {
        let k = KernelMatrix::<f64>::identity(5);
        let mut rng = replica_rng(1, 0);
        assert_eq!(sample_dpp(&k, &mut rng).unwrap().sites(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn invalid_kernel_rejected() {
        let k = KernelMatrix::new(2, vec![1.5, 0.0, 0.0, 0.2]).unwrap();
        assert!(matches!(sample_dpp(&k, &mut replica_rng(0, 0)), Err(Error::KernelValidity(_))));
    }

    #[test]
    fn streams_are_reproducible() {
        let k = discrete_kernel_window(&EnsembleSpec::<f64>::dh(Sign::Plus, 0.3).unwrap(), 12).unwrap();
        let a = sample_many(&k, 42, 50).unwrap();
        let b = sample_many(&k, 42, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dh_one_and_two_point_functions() {
        let k = discrete_kernel_window(&EnsembleSpec::<f64>::dh(Sign::Plus, 0.0).unwrap(), 41).unwrap();
        let s = sample_many(&k, 3, 100_000).unwrap();
        for x in [0, 5, 20] {
            let (p, se) = empirical_correlation(&s, &[x]).unwrap();
            assert!((p - 0.5).abs() < 3.5 * se, "x={x}: {p}");
        }
        for (x, y) in [(0, 1), (2, 5), (1, 3)] {
            let (p, se) = empirical_correlation(&s, &[x, y]).unwrap();
            let want = minor(&k, &[x, y]);
            assert!((p - want).abs() < 3.5 * se, "({x},{y}): {p} vs {want}");
            assert!(want <= k.get(x, x) * k.get(y, y) + 1e-12);
        }
    }

    #[test]
    fn exact_law_on_small_window() {
        let fam = FamilySpec::Krawtchouk { p: 0.4, m: 7 };
        let k = crate::kernels::cd_kernel_window(&fam, 3, 8, crate::kernels::CdMethod::Direct).unwrap();
        let s = sample_many(&k, 11, 200_000).unwrap();
        let emp = law(&s);
        let mut tv = 0.0;
        let mut total = 0.0;
        for a in 0..8 {
            for b in a + 1..8 {
                for c in b + 1..8 {
                    let cfg = PointConfiguration::new(vec![a, b, c]).unwrap();
                    let p = config_probability(&k, &cfg).unwrap();
                    total += p;
                    tv += (p - emp.get(&cfg).copied().unwrap_or(0.0)).abs();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!(0.5 * tv < 0.01, "tv={}", 0.5 * tv);
    }

    #[test]
    fn meixner_single_point() {
        let (beta, xi) = (2.0, 0.3);
        let fam = FamilySpec::Meixner { beta, xi };
        let k = crate::kernels::cd_kernel_window(&fam, 1, 60, crate::kernels::CdMethod::Direct).unwrap();
        for x in 0..5 {
            let p = config_probability(&k, &PointConfiguration::new(vec![x]).unwrap()).unwrap();
            let w = orthopoly::weight(&fam, x as f64).unwrap();
            assert!((p - w * (1.0 - xi).powf(beta)).abs() < 1e-13);
        }
        assert!(config_probability(&k, &PointConfiguration::new(vec![0, 1]).unwrap()).is_err());
    }

    #[test]
    fn particle_hole_complement() {
        let k = discrete_kernel_window(&EnsembleSpec::<f64>::dh(Sign::Plus, 0.7).unwrap(), 6).unwrap();
        let a = law(&sample_many(&k, 5, 100_000).unwrap());
        let holes: Vec<PointConfiguration> = sample_many(&k.complement(), 6, 100_000).unwrap().iter().map(|c| c.complement(6)).collect();
        let b = law(&holes);
        let keys: std::collections::HashSet<_> = a.keys().chain(b.keys()).cloned().collect();
        let tv: f64 = keys.iter().map(|c| (a.get(c).unwrap_or(&0.0) - b.get(c).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv={tv}");
    }
}
