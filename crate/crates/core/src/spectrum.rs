//! Lowest eigenpairs of `H(s)` and minimum-gap extraction.
//!
//! Large operators use a block Krylov method with full (twice-applied)
//! Gram-Schmidt reorthogonalization, Rayleigh-Ritz on the projected matrix and
//! thick restarts from the lowest Ritz vectors. Small ones are diagonalized
//! densely, purely diagonal ones are sorted.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::diagnosis::Instance;
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::hamiltonian::{AnnealingHamiltonian, DriverSign, Operator};

/// `gap(1)` below this marks a degenerate ground space.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;
/// Degenerate traces look for the minimum only on `s <= 1 - DEGENERATE_EXCLUSION`.
pub const DEGENERATE_EXCLUSION: f64 = 0.05;
pub const DEFAULT_GRID: usize = 100;

/// Grid points solved in one warm-started chain; fixed so results do not
/// depend on the thread count.
const CHAIN_LEN: usize = 25;
/// Memory budget for the Krylov basis and its image, in f64 entries.
const BASIS_BUDGET: usize = 160 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Diagonal,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    /// Number of eigenvalues wanted.
    pub k: usize,
    /// Residual bound relative to the norm estimate.
    pub tol: f64,
    /// Block size, at least `k`; two or more resolves degenerate pairs.
    pub block: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Dimensions up to this are solved densely.
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            k: 2,
            tol: 1e-8,
            block: 2,
            max_basis: 20,
            max_restarts: 2000,
            dense_limit: 1024,
            seed: 0x5eed,
        }
    }
}

impl EigenOptions {
    pub fn with_k(k: usize, tol: f64) -> Self {
        EigenOptions {
            k,
            tol,
            block: k.max(2),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    /// The `k` lowest eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Lowest `block` (Ritz) vectors; the first `k` belong to `values`.
    pub vectors: Vec<Vec<f64>>,
    /// Largest residual norm among the `k` returned pairs.
    pub residual: f64,
    pub matvecs: usize,
    pub method: SolverMethod,
}

pub fn lowest_eigenpairs<O: Operator>(
    op: &O,
    opts: &EigenOptions,
    start: Option<&[Vec<f64>]>,
) -> Result<Eigenpairs> {
    let dim = op.dim();
    if opts.k == 0 || opts.k > dim {
        return Err(Error::OutOfRange(format!(
            "k = {} for dimension {dim}",
            opts.k
        )));
    }
    let block = opts.block.max(opts.k).min(dim);
    if let Some(d) = op.as_diagonal() {
        return Ok(diagonal_pairs(&d, opts.k, block));
    }
    if dim <= opts.dense_limit {
        return Ok(dense_pairs(op, opts.k, block));
    }
    krylov(op, opts, block, start)
}

/// Convenience wrapper returning only eigenvalues.
pub fn lowest_eigenvalues<O: Operator>(op: &O, k: usize, tol: f64) -> Result<Vec<f64>> {
    Ok(lowest_eigenpairs(op, &EigenOptions::with_k(k, tol), None)?.values)
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

fn diagonal_pairs(d: &[f64], k: usize, block: usize) -> Eigenpairs {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    Eigenpairs {
        values: order[..k].iter().map(|&i| d[i]).collect(),
        vectors: order[..block].iter().map(|&i| unit(d.len(), i)).collect(),
        residual: 0.0,
        matvecs: 0,
        method: SolverMethod::Diagonal,
    }
}

fn dense_pairs<O: Operator>(op: &O, k: usize, block: usize) -> Eigenpairs {
    let dim = op.dim();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut y = vec![0.0; dim];
    for j in 0..dim {
        op.apply(&unit(dim, j), &mut y);
        m.column_mut(j).copy_from_slice(&y);
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Eigenpairs {
        values: order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order[..block]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
        residual: 0.0,
        matvecs: dim,
        method: SolverMethod::Dense,
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalizes `w` against `basis` twice; returns the remaining norm.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> f64 {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
    norm(w)
}

struct Rng(ChaCha8Rng);

impl Rng {
    fn vector(&mut self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|_| (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            .collect()
    }
}

/// Appends orthonormal `x` and its image, extending the projected matrix `t`.
fn push_vector<O: Operator>(
    op: &O,
    v: &mut Vec<Vec<f64>>,
    av: &mut Vec<Vec<f64>>,
    t: &mut Vec<Vec<f64>>,
    x: Vec<f64>,
) {
    let mut y = vec![0.0; x.len()];
    op.apply(&x, &mut y);
    let row: Vec<f64> = v
        .iter()
        .map(|vi| dot(vi, &y))
        .chain([dot(&x, &y)])
        .collect();
    for (ti, &c) in t.iter_mut().zip(&row) {
        ti.push(c);
    }
    t.push(row);
    v.push(x);
    av.push(y);
}

fn krylov<O: Operator>(
    op: &O,
    opts: &EigenOptions,
    block: usize,
    start: Option<&[Vec<f64>]>,
) -> Result<Eigenpairs> {
    let dim = op.dim();
    let max_basis = opts.max_basis.min(BASIS_BUDGET / (2 * dim)).max(3 * block);
    let keep = (max_basis / 3).max(block);
    let mut rng = Rng(ChaCha8Rng::seed_from_u64(opts.seed));

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut av: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut matvecs = 0usize;

    let noise = 1e-3 / (dim as f64).sqrt();
    let mut seeds: Vec<Vec<f64>> = start
        .unwrap_or(&[])
        .iter()
        .filter(|s| s.len() == dim)
        .take(block)
        .map(|s| {
            let r = rng.vector(dim);
            s.iter().zip(&r).map(|(a, b)| a + noise * b).collect()
        })
        .collect();
    while seeds.len() < block {
        seeds.push(rng.vector(dim));
    }
    for mut x in seeds {
        let n = orthogonalize(&v, &mut x);
        if n < 1e-8 {
            x = rng.vector(dim);
            let n = orthogonalize(&v, &mut x);
            x.iter_mut().for_each(|e| *e /= n);
        } else {
            x.iter_mut().for_each(|e| *e /= n);
        }
        push_vector(op, &mut v, &mut av, &mut t, x);
        matvecs += 1;
    }
    let mut frontier: Vec<usize> = (0..block).collect();
    let mut norm_est: f64 = 1.0;

    for restart in 0..=opts.max_restarts {
        // expand the block Krylov space from the frontier
        while v.len() + frontier.len() <= max_basis && !frontier.is_empty() {
            let mut next = Vec::new();
            for &i in &frontier {
                let mut w = av[i].clone();
                let before = norm(&w);
                let n = orthogonalize(&v, &mut w);
                if n > 1e-10 * before.max(1e-300) {
                    w.iter_mut().for_each(|e| *e /= n);
                    next.push(v.len());
                    push_vector(op, &mut v, &mut av, &mut t, w);
                    matvecs += 1;
                }
            }
            frontier = next;
        }
        let m = v.len();

        let tm = DMatrix::from_fn(m, m, |i, j| 0.5 * (t[i][j] + t[j][i]));
        let eig = SymmetricEigen::new(tm);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        norm_est = norm_est
            .max(eig.eigenvalues[order[0]].abs())
            .max(eig.eigenvalues[order[m - 1]].abs());

        let nkeep = keep.min(m);
        let mut x: Vec<Vec<f64>> = Vec::with_capacity(nkeep);
        let mut hx: Vec<Vec<f64>> = Vec::with_capacity(nkeep);
        for &c in &order[..nkeep] {
            let y = eig.eigenvectors.column(c);
            let mut xi = vec![0.0; dim];
            let mut hxi = vec![0.0; dim];
            for (j, &yj) in y.iter().enumerate() {
                axpy(yj, &v[j], &mut xi);
                axpy(yj, &av[j], &mut hxi);
            }
            x.push(xi);
            hx.push(hxi);
        }
        let theta: Vec<f64> = order[..nkeep].iter().map(|&c| eig.eigenvalues[c]).collect();
        let residual = (0..opts.k)
            .map(|i| {
                hx[i]
                    .iter()
                    .zip(&x[i])
                    .map(|(h, xi)| (h - theta[i] * xi).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);

        if residual <= opts.tol * norm_est || (frontier.is_empty() && m < max_basis) {
            x.truncate(block);
            return Ok(Eigenpairs {
                values: theta[..opts.k].to_vec(),
                vectors: x,
                residual,
                matvecs,
                method: SolverMethod::Krylov,
            });
        }
        if restart == opts.max_restarts {
            return Err(Error::NonConvergence {
                s: None,
                residual,
                iterations: matvecs,
            });
        }

        t = (0..nkeep)
            .map(|i| {
                (0..nkeep)
                    .map(|j| if i == j { theta[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        v = x;
        av = hx;
        frontier = (0..block).collect();
    }
    unreachable!("loop returns on its last iteration")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

/// Ground and first excited energies of `H(s)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub samples: Vec<TraceSample>,
    pub driver: DriverSign,
    pub grid: usize,
    pub degenerate: bool,
}

impl SpectrumTrace {
    pub fn new(samples: Vec<TraceSample>, driver: DriverSign) -> Self {
        let degenerate = samples
            .last()
            .is_some_and(|p| p.s == 1.0 && p.gap < DEGENERACY_THRESHOLD);
        SpectrumTrace {
            grid: samples.len(),
            samples,
            driver,
            degenerate,
        }
    }

    /// Gap interpolated linearly between samples.
    pub fn gap_at(&self, s: f64) -> f64 {
        let p = &self.samples;
        let k = p.partition_point(|q| q.s <= s);
        if k == 0 {
            return p[0].gap;
        }
        if k >= p.len() {
            return p[p.len() - 1].gap;
        }
        let (a, b) = (&p[k - 1], &p[k]);
        a.gap + (b.gap - a.gap) * (s - a.s) / (b.s - a.s)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,e0,e1,gap")?;
        for p in &self.samples {
            writeln!(
                w,
                "{},{},{},{}",
                sig12(p.s),
                sig12(p.e0),
                sig12(p.e1),
                sig12(p.gap)
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn from_csv(text: &str, driver: DriverSign) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("s,e0,e1,gap") {
            return Err(Error::Format(
                "trace csv header must be `s,e0,e1,gap`".into(),
            ));
        }
        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("trace row {}: {e}", n + 2)))?;
            if f.len() != 4 {
                return Err(Error::Format(format!(
                    "trace row {}: expected 4 fields",
                    n + 2
                )));
            }
            samples.push(TraceSample {
                s: f[0],
                e0: f[1],
                e1: f[2],
                gap: f[3],
            });
        }
        if samples.windows(2).any(|w| w[1].s <= w[0].s) {
            return Err(Error::Format("trace s values must increase".into()));
        }
        Ok(SpectrumTrace::new(samples, driver))
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        SpectrumTrace::from_csv(&std::fs::read_to_string(path)?, DriverSign::Stoquastic)
    }
}

/// Uniform grid of `n` points on `[0, 1]` with exact endpoints.
pub fn s_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                1.0
            } else {
                k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// `E0`, `E1` of `H(s)` over a uniform grid of `grid` points.
pub fn gap_trace(instance: &Instance, grid: usize, sign: DriverSign) -> Result<SpectrumTrace> {
    let h = AnnealingHamiltonian::new(instance, sign)?;
    gap_trace_with(&h, grid, &EigenOptions::default())
}

pub fn gap_trace_with(
    h: &AnnealingHamiltonian,
    grid: usize,
    opts: &EigenOptions,
) -> Result<SpectrumTrace> {
    if grid < 2 {
        return Err(Error::TraceTooCoarse(grid));
    }
    let opts = EigenOptions {
        k: 2,
        block: opts.block.max(2),
        ..opts.clone()
    };
    let s = s_grid(grid);
    let chains: Vec<&[f64]> = s.chunks(CHAIN_LEN).collect();
    let solve_chain = |chain: &&[f64]| -> Result<Vec<TraceSample>> {
        let mut warm: Option<Vec<Vec<f64>>> = None;
        chain
            .iter()
            .map(|&s| {
                let op = h.at(s)?;
                let r = lowest_eigenpairs(&op, &opts, warm.as_deref()).map_err(|e| match e {
                    Error::NonConvergence {
                        residual,
                        iterations,
                        ..
                    } => Error::NonConvergence {
                        s: Some(s),
                        residual,
                        iterations,
                    },
                    e => e,
                })?;
                let (e0, e1) = (r.values[0], r.values[1]);
                warm = Some(r.vectors);
                Ok(TraceSample {
                    s,
                    e0,
                    e1,
                    gap: (e1 - e0).max(0.0),
                })
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Vec<TraceSample>>> = {
        use rayon::prelude::*;
        chains.par_iter().map(solve_chain).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Vec<TraceSample>>> = chains.iter().map(solve_chain).collect();
    let mut samples = Vec::with_capacity(grid);
    for p in parts {
        samples.extend(p?);
    }
    Ok(SpectrumTrace::new(samples, h.sign))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinGap {
    pub s: f64,
    pub gap: f64,
    pub degenerate: bool,
}

/// Minimum of the sampled gap, refined by a 3-point quadratic fit. Degenerate
/// traces are searched on `s <= 1 - DEGENERATE_EXCLUSION` only.
pub fn min_gap(trace: &SpectrumTrace) -> Result<MinGap> {
    let p: Vec<&TraceSample> = trace
        .samples
        .iter()
        .filter(|q| !trace.degenerate || q.s <= 1.0 - DEGENERATE_EXCLUSION)
        .collect();
    if p.len() < 3 {
        return Err(Error::TraceTooCoarse(p.len()));
    }
    let i = (0..p.len())
        .min_by(|&a, &b| p[a].gap.total_cmp(&p[b].gap))
        .expect("non-empty");
    let mut best = MinGap {
        s: p[i].s,
        gap: p[i].gap,
        degenerate: trace.degenerate,
    };
    if i > 0 && i + 1 < p.len() {
        let (x0, x1, x2) = (p[i - 1].s, p[i].s, p[i + 1].s);
        let (y0, y1, y2) = (p[i - 1].gap, p[i].gap, p[i + 1].gap);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        if a > 0.0 {
            let b = d01 - a * (x0 + x1);
            let xv = (-b / (2.0 * a)).clamp(x0, x2);
            let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
            if yv <= y1 {
                best.s = xv;
                best.gap = yv.max(0.0);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::builtin_topology;
    use crate::hamiltonian::{build_initial, ReducedOperator};
    use crate::instances::generate_instance;

    fn c17(seed: u64) -> Instance {
        generate_instance(&builtin_topology("c17").unwrap(), seed, 0)
    }

    fn synthetic(g: impl Fn(f64) -> f64, n: usize) -> SpectrumTrace {
        SpectrumTrace::new(
            s_grid(n)
                .into_iter()
                .map(|s| TraceSample {
                    s,
                    e0: 0.0,
                    e1: g(s),
                    gap: g(s),
                })
                .collect(),
            DriverSign::Stoquastic,
        )
    }

    #[test]
    fn diagonal_operator_sorted() {
        let op = ReducedOperator::diagonal(vec![3.0, -1.0, 2.0, -1.0, 5.0]);
        let r = lowest_eigenpairs(&op, &EigenOptions::with_k(3, 1e-12), None).unwrap();
        assert_eq!(r.values, vec![-1.0, -1.0, 2.0]);
        assert_eq!(r.method, SolverMethod::Diagonal);
    }

    #[test]
    fn initial_hamiltonian_lowest_pair() {
        let inst = c17(4);
        let hi = build_initial(&inst).unwrap();
        let v = lowest_eigenvalues(&hi, 2, 1e-12).unwrap();
        assert_eq!(v, vec![-34.0, -30.0]);
    }

    #[test]
    fn krylov_matches_dense() {
        let c = (0..)
            .map(|seed| crate::instances::random_circuit(4, 4, 2, seed))
            .find(|c| c.free_wire_count() == 10)
            .unwrap();
        let inst = generate_instance(&c, 1, 0);
        let h = AnnealingHamiltonian::new(&inst, DriverSign::Stoquastic).unwrap();
        for s in [0.3, 0.7, 0.95] {
            let op = h.at(s).unwrap();
            let dense = lowest_eigenpairs(&op, &EigenOptions::default(), None).unwrap();
            let iter = lowest_eigenpairs(
                &op,
                &EigenOptions {
                    dense_limit: 0,
                    ..Default::default()
                },
                None,
            )
            .unwrap();
            assert_eq!(dense.method, SolverMethod::Dense);
            assert_eq!(iter.method, SolverMethod::Krylov);
            for (a, b) in dense.values.iter().zip(&iter.values) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b} at s={s}");
            }
        }
    }

    #[test]
    fn nonconvergence_reported() {
        let inst = c17(2);
        let h = AnnealingHamiltonian::new(&inst, DriverSign::Stoquastic).unwrap();
        let op = h.at(0.5).unwrap();
        let opts = EigenOptions {
            max_restarts: 0,
            max_basis: 9,
            tol: 1e-14,
            ..Default::default()
        };
        assert!(matches!(
            lowest_eigenpairs(&op, &opts, None),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn min_gap_monotone_trace() {
        let m = min_gap(&synthetic(|s| 4.0 - 2.0 * s, 11)).unwrap();
        assert_eq!((m.s, m.gap), (1.0, 2.0));
    }

    #[test]
    fn min_gap_v_shape() {
        let m = min_gap(&synthetic(|s| 0.1 + (s - 0.73).abs(), 101)).unwrap();
        assert!((m.s - 0.73).abs() <= 0.01);
        let q = min_gap(&synthetic(|s| 0.5 + (s - 0.734).powi(2), 11)).unwrap();
        assert!((q.s - 0.734).abs() < 1e-9);
        assert!((q.gap - 0.5).abs() < 1e-9);
    }

    #[test]
    fn min_gap_degenerate_excludes_end() {
        let m = min_gap(&synthetic(|s| 4.0 * (1.0 - s), 101)).unwrap();
        assert!(m.degenerate);
        assert!(m.s <= 0.95 + 1e-12);
        assert!(min_gap(&synthetic(|s| s, 2)).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let tr = synthetic(|s| 4.0 - s / 3.0, 5);
        let text = tr.to_csv();
        assert!(text.starts_with("s,e0,e1,gap\n0,0,4,4\n0.25,0,3.91666666667,3.91666666667\n"));
        let back = SpectrumTrace::from_csv(&text, DriverSign::Stoquastic).unwrap();
        assert_eq!(back.to_csv(), text);
        assert!(SpectrumTrace::from_csv("a,b\n", DriverSign::Stoquastic).is_err());
    }

    #[test]
    fn short_trace_endpoints() {
        let inst = c17(8);
        let mfd = crate::diagnosis::mfd_bruteforce(&inst).unwrap();
        let tr = gap_trace(&inst, 3, DriverSign::NonStoquastic).unwrap();
        assert_eq!(tr.samples[0].gap, 4.0);
        assert_eq!(tr.samples[0].e0, -34.0);
        let last = tr.samples[2];
        assert_eq!(last.e0, 2.0 * mfd.min_faults as f64 - 17.0);
        assert_eq!(tr.degenerate, mfd.degeneracy > 1);
    }
}
