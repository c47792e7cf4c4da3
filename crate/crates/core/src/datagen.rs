//! Synthetic ground truth: random graphs, block precision matrices with a
//! fixed smallest eigenvalue, and Gaussian samples.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`; each
//! stage draws from its own stream so changing one stage leaves the others
//! untouched.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::eigen::{SymmetricEigensolver, TridiagonalQl};
use crate::error::{bail, Result};
use crate::graph::EdgeSet;
use crate::matrix::{BlockMatrix, Matrix};

/// Smallest eigenvalue of every generated precision matrix.
pub const TARGET_MIN_EIGENVALUE: f64 = 0.5;

const STREAM_GRAPH: u64 = 1;
const STREAM_PRECISION: u64 = 2;
const STREAM_SAMPLES: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    /// Erdős–Rényi with edge probability `p_er`.
    Er { p_er: f64 },
    /// Barabási–Albert preferential attachment.
    Ba { mean_degree: f64 },
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Er { .. } => "er",
            GraphKind::Ba { .. } => "ba",
        }
    }

    pub fn generate(&self, p: usize, seed: u64) -> Result<EdgeSet> {
        match *self {
            GraphKind::Er { p_er } => gen_er_graph(p, p_er, seed),
            GraphKind::Ba { mean_degree } => gen_ba_graph(p, mean_degree, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub omega_star: BlockMatrix,
    pub edges_star: EdgeSet,
    pub p: usize,
    pub m: usize,
    pub seed: u64,
    pub graph_kind: Option<GraphKind>,
    /// Diagonal shift applied to reach the target smallest eigenvalue.
    pub delta: f64,
}

impl GroundTruth {
    /// Graph plus precision matrix from one seed.
    pub fn generate(kind: GraphKind, p: usize, m: usize, seed: u64) -> Result<Self> {
        let edges = kind.generate(p, seed)?;
        let mut truth = build_precision(&edges, p, m, seed)?;
        truth.graph_kind = Some(kind);
        Ok(truth)
    }

    /// `(Ω*)⁻¹`.
    pub fn covariance(&self) -> Result<BlockMatrix> {
        BlockMatrix::symmetric(self.omega_star.matrix().spd_inverse()?, self.p, self.m)
    }
}

/// Each unordered pair independently with probability `p_er`.
pub fn gen_er_graph(p: usize, p_er: f64, seed: u64) -> Result<EdgeSet> {
    if p < 2 {
        bail!(InvalidInput, "ER graph needs p >= 2, got {}", p);
    }
    if !(0.0..=1.0).contains(&p_er) {
        bail!(InvalidInput, "edge probability must lie in [0, 1], got {}", p_er);
    }
    let mut r = rng(seed, STREAM_GRAPH);
    let mut edges = EdgeSet::new(p);
    for a in 0..p {
        for b in a + 1..p {
            if r.random::<f64>() < p_er {
                edges.insert(a, b)?;
            }
        }
    }
    Ok(edges)
}

/// Preferential attachment with `k = mean_degree / 2` edges per arriving
/// node, grown from a complete seed graph on `k + 1` nodes. For
/// `mean_degree = 2` the seed is a single edge and the result a tree with
/// `p − 1` edges.
pub fn gen_ba_graph(p: usize, mean_degree: f64, seed: u64) -> Result<EdgeSet> {
    if p < 3 {
        bail!(InvalidInput, "BA graph needs p >= 3, got {}", p);
    }
    let k = mean_degree / 2.0;
    if !(k >= 1.0) || libm::trunc(k) != k || k as usize + 1 >= p {
        bail!(
            InvalidInput,
            "mean degree {} not achievable: needs an even value in [2, 2(p-2)]",
            mean_degree
        );
    }
    let k = k as usize;
    let mut edges = EdgeSet::new(p);
    // Every edge endpoint, so a uniform draw is degree-proportional.
    let mut endpoints: Vec<usize> = Vec::new();
    for a in 0..=k {
        for b in a + 1..=k {
            edges.insert(a, b)?;
            endpoints.extend([a, b]);
        }
    }
    let mut r = rng(seed, STREAM_GRAPH);
    let mut targets: Vec<usize> = Vec::with_capacity(k);
    for new in k + 1..p {
        targets.clear();
        while targets.len() < k {
            let t = endpoints[r.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.insert(new, t)?;
            endpoints.extend([new, t]);
        }
    }
    Ok(edges)
}

/// Block precision matrix on `edges`: diagonal blocks `0.5^|s−t|`, each
/// connected block with off-diagonal entries uniform on
/// `[−0.4, −0.1] ∪ [0.1, 0.4]` and zero diagonal, mirrored to the lower
/// triangle, then shifted by `δI` so the smallest eigenvalue is 0.5.
///
/// With `m = 1` a connected block has no off-diagonal entry, so its single
/// entry is drawn from the same distribution instead.
pub fn build_precision(edges: &EdgeSet, p: usize, m: usize, seed: u64) -> Result<GroundTruth> {
    build_precision_with(&TridiagonalQl::default(), edges, p, m, seed)
}

pub fn build_precision_with(
    eig: &dyn SymmetricEigensolver,
    edges: &EdgeSet,
    p: usize,
    m: usize,
    seed: u64,
) -> Result<GroundTruth> {
    if p == 0 || m == 0 {
        bail!(InvalidInput, "need p >= 1 and m >= 1");
    }
    if edges.p() != p {
        bail!(Shape, "edge set over {} nodes used with p={}", edges.p(), p);
    }
    let n = p * m;
    let mut om = Matrix::zeros(n, n);
    for k in 0..p {
        for s in 0..m {
            for t in 0..m {
                om[(k * m + s, k * m + t)] = libm::pow(0.5, s.abs_diff(t) as f64);
            }
        }
    }
    let mut r = rng(seed, STREAM_PRECISION);
    for (j, k) in edges.iter() {
        for s in 0..m {
            for t in 0..m {
                if s == t && m > 1 {
                    continue;
                }
                let magnitude = 0.1 + 0.3 * r.random::<f64>();
                let value = if r.random::<bool>() { magnitude } else { -magnitude };
                om[(j * m + s, k * m + t)] = value;
                om[(k * m + t, j * m + s)] = value;
            }
        }
    }
    let min_ev = eig.eigenvalues(&om)?.first().copied().unwrap_or(f64::NAN);
    if !min_ev.is_finite() {
        bail!(Numeric, "eigenvalues of the precision matrix are not finite");
    }
    let delta = TARGET_MIN_EIGENVALUE - min_ev;
    for i in 0..n {
        om[(i, i)] += delta;
    }
    Ok(GroundTruth {
        omega_star: BlockMatrix::symmetric(om, p, m)?,
        edges_star: edges.clone(),
        p,
        m,
        seed,
        graph_kind: None,
        delta,
    })
}

/// Square root factor `Φ = P D^{−1/2}` with `ΦΦᵀ = (Ω*)⁻¹`.
pub fn sampling_factor(eig: &dyn SymmetricEigensolver, omega_star: &BlockMatrix) -> Result<Matrix> {
    let dec = eig.decompose(omega_star.matrix())?;
    if !(dec.min_eigenvalue() > 0.0) {
        bail!(InvalidInput, "precision matrix is not positive definite");
    }
    let scale: Vec<f64> = dec.eigenvalues.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    let n = scale.len();
    Ok(Matrix::from_fn(n, n, |i, j| dec.eigenvectors[(i, j)] * scale[j]))
}

/// `n` rows `x = Φw`, `w ~ N(0, I)`, so each row is `N(0, (Ω*)⁻¹)`.
pub fn sample_data(truth: &GroundTruth, n: usize, seed: u64) -> Result<Matrix> {
    sample_data_with(&TridiagonalQl::default(), truth, n, seed)
}

pub fn sample_data_with(eig: &dyn SymmetricEigensolver, truth: &GroundTruth, n: usize, seed: u64) -> Result<Matrix> {
    let phi = sampling_factor(eig, &truth.omega_star)?;
    sample_with_factor(&phi, n, seed)
}

/// `n` rows `Φw` with `w ~ N(0, I)`.
pub fn sample_with_factor(phi: &Matrix, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        bail!(InvalidInput, "need at least one sample");
    }
    let d = phi.rows();
    let mut r = rng(seed, STREAM_SAMPLES);
    let mut out = Matrix::zeros(n, d);
    let mut w = alloc::vec![0.0; phi.cols()];
    for t in 0..n {
        for x in w.iter_mut() {
            *x = r.sample(StandardNormal);
        }
        for (i, o) in out.row_mut(t).iter_mut().enumerate() {
            *o = phi.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::sym_eig;
    use crate::estimator::sample_covariance;
    use crate::matrix::block_norm_map;

    #[test]
    fn er_extremes() {
        assert!(gen_er_graph(10, 0.0, 1).unwrap().is_empty());
        assert_eq!(gen_er_graph(10, 1.0, 1).unwrap().len(), 45);
        assert!(gen_er_graph(1, 0.5, 1).is_err());
        assert_eq!(gen_er_graph(30, 0.2, 9).unwrap(), gen_er_graph(30, 0.2, 9).unwrap());
    }

    #[test]
    fn er_edge_count_matches_binomial() {
        let seeds = 200;
        let mean = (0..seeds).map(|s| gen_er_graph(100, 0.05, s).unwrap().len() as f64).sum::<f64>() / seeds as f64;
        let sd = libm::sqrt(4950.0 * 0.05 * 0.95 / seeds as f64);
        assert!((mean - 247.5).abs() <= 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn ba_tree() {
        for seed in 0..20 {
            let g = gen_ba_graph(100, 2.0, seed).unwrap();
            assert_eq!(g.len(), 99);
            assert_eq!(g.components(), 1);
        }
        assert!(gen_ba_graph(100, 3.0, 0).is_err());
        assert!(gen_ba_graph(100, 0.0, 0).is_err());
        assert!(gen_ba_graph(2, 2.0, 0).is_err());
        let g = gen_ba_graph(50, 4.0, 3).unwrap();
        assert_eq!(g.len(), 3 + 47 * 2);
        assert_eq!(g.components(), 1);
    }

    #[test]
    fn ba_degrees_heavy_tailed() {
        let mut ratio = 0.0;
        for seed in 0..100 {
            let deg = gen_ba_graph(100, 2.0, seed).unwrap().degrees();
            let max = *deg.iter().max().unwrap() as f64;
            ratio += max / (198.0 / 100.0);
        }
        assert!(ratio / 100.0 > 4.0, "mean max/mean degree ratio {}", ratio / 100.0);
    }

    #[test]
    fn diagonal_blocks() {
        let t = build_precision(&EdgeSet::new(3), 3, 4, 0).unwrap();
        let shift = t.delta;
        let row: Vec<f64> = (0..4).map(|j| t.omega_star.matrix()[(0, j)]).collect();
        assert_eq!(row[1..], [0.5, 0.25, 0.125]);
        assert!((row[0] - shift - 1.0).abs() < 1e-15);

        let t = build_precision(&EdgeSet::new(3), 3, 1, 0).unwrap();
        assert!((t.delta + 0.5).abs() < 1e-12);
        for i in 0..3 {
            assert!((t.omega_star.matrix()[(i, i)] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn precision_invariants() {
        for seed in 0..6 {
            for kind in [GraphKind::Er { p_er: 0.2 }, GraphKind::Ba { mean_degree: 2.0 }] {
                let t = GroundTruth::generate(kind, 12, 3, seed).unwrap();
                let om = t.omega_star.matrix();
                assert_eq!(om.max_asymmetry(), 0.0);
                let min = sym_eig(om).unwrap().min_eigenvalue();
                assert!((min - 0.5).abs() < 1e-6, "{min}");
                let c = block_norm_map(&t.omega_star);
                for j in 0..12 {
                    for k in 0..12 {
                        if j != k {
                            assert_eq!(c.get(j, k) > 0.0, t.edges_star.contains(j, k));
                        }
                    }
                }
                for (j, k) in t.edges_star.iter() {
                    let b = t.omega_star.block(j, k);
                    for s in 0..3 {
                        for u in 0..3 {
                            let x = b[(s, u)].abs();
                            if s == u {
                                assert_eq!(x, 0.0);
                            } else {
                                assert!((0.1..=0.4).contains(&x));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_identity() {
        let t = build_precision(&EdgeSet::new(4), 4, 1, 0).unwrap();
        // Ω* = 0.5 I here, so the covariance is 2 I.
        let n = 20_000;
        let x = sample_data(&t, n, 5).unwrap();
        let s = sample_covariance(&x, 4, 1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((s.matrix()[(i, j)] - want).abs() <= 2.0 * 4.0 / libm::sqrt(n as f64));
            }
        }
    }

    #[test]
    fn sampling_small_instance() {
        let edges = EdgeSet::from_pairs(2, [(0, 1)]).unwrap();
        let t = build_precision(&edges, 2, 2, 3).unwrap();
        let x = sample_data(&t, 100_000, 8).unwrap();
        let s = sample_covariance(&x, 2, 2).unwrap();
        let cov = t.covariance().unwrap();
        assert!((s.matrix() - cov.matrix()).max_abs() <= 0.05);
    }

    #[test]
    fn sampling_determinism() {
        let t = GroundTruth::generate(GraphKind::Er { p_er: 0.3 }, 5, 2, 4).unwrap();
        let a = sample_data(&t, 7, 11).unwrap();
        let b = sample_data(&t, 7, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_data(&t, 7, 12).unwrap());
        let one = sample_data(&t, 1, 0).unwrap();
        assert_eq!(one.rows(), 1);
        assert!(one.is_finite());
        assert!(sample_data(&t, 0, 0).is_err());
    }
}
