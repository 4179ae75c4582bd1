//! Spectral and Kronecker analysis of the rectangular pencil
//! `-lambda N^0 + N^i k_i`.
//!
//! For each wave covector the pencil's generalized eigenvalues are the
//! rank-drop points; their eigenvectors are the characteristic modes that
//! live in the right kernel of `C^0 N^i k_i`. The kernel-dimension
//! bookkeeping `(d, r, s)` fixes the singular part of the Kronecker
//! structure, and when the geometric multiplicities of the eigenvalues
//! add up to `d` the structure is certified to consist of size-1 Jordan
//! blocks plus `r` L1^T blocks and `s` zero rows. Canonical angles between
//! the left and right characteristic subspaces give the strong-
//! hyperbolicity test.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geroch::GerochBasis;
use crate::linalg::{self, CMat, Mat};
use crate::reduction::{constraint_transport, evolution_symbol, ReductionPair};
use crate::sample::sample_unit_covectors;
use crate::tensor::{GramForm, PrincipalSymbol, WaveCovector};

/// Eigenvalue clustering tolerance, relative to the spectral radius.
const CLUSTER_TOL: f64 = 1e-8;
/// Kernel-membership threshold for eigenvectors.
const KERNEL_MEMBERSHIP_TOL: f64 = 1e-8;
/// Imaginary parts below this (relative) threshold count as real.
const REALNESS_TOL: f64 = 1e-8;

/// Kernel dimensions of `C^0 N^i k_i`: right kernel `d`, rank `r`, left
/// kernel `s`. They satisfy `u = r + d` and `c = r + s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelDims {
    pub d: usize,
    pub r: usize,
    pub s: usize,
}

/// Computes `(d, r, s)` for one wave covector.
pub fn kernel_dims(
    symbol: &PrincipalSymbol,
    geroch: &GerochBasis,
    k: &WaveCovector,
    tol: f64,
) -> Result<KernelDims> {
    let w = geroch.c_time_contraction().dot(&symbol.spatial_contraction(k));
    let r = linalg::rank(&w, tol)?;
    let dims = KernelDims {
        d: symbol.unknowns() - r,
        r,
        s: symbol.constraint_count() - r,
    };
    debug_assert_eq!(dims.r + dims.d, symbol.unknowns());
    debug_assert_eq!(dims.r + dims.s, symbol.constraint_count());
    Ok(dims)
}

/// One generalized eigenvalue of the pencil with its characteristic data.
#[derive(Debug, Clone)]
pub struct EigenRecord {
    /// The eigenvalue (real for hyperbolic systems).
    pub value: f64,
    /// Geometric multiplicity: dimension of the pencil's right kernel.
    pub multiplicity: usize,
    /// Algebraic multiplicity inherited from the evolution symbol.
    pub algebraic: usize,
    /// Orthonormal right-kernel basis of the pencil, `u x multiplicity`.
    pub right_vectors: Mat,
    /// Orthonormal left-kernel basis of the full pencil at this value,
    /// `e x (multiplicity + c)`.
    pub left_vectors: Mat,
}

/// Clustered eigenvalues of the evolution symbol split by whether their
/// eigenvectors lie in the right kernel of `C^0 N^i k_i`.
#[derive(Debug, Clone)]
pub struct EvolutionSpectrum {
    /// Pencil (generalized) eigenvalues with kernel-compatible modes.
    pub physical: Vec<EigenRecord>,
    /// Remaining eigenvalues of `A(k)` (reduction-dependent transport).
    pub inherited: Vec<InheritedEigen>,
}

/// An eigenvalue of `A(k)` whose eigenvectors are not kernel modes; these
/// are the values inherited by the subsidiary symbol.
#[derive(Debug, Clone)]
pub struct InheritedEigen {
    pub value: Complex64,
    pub algebraic: usize,
    /// Eigenvectors of `A(k)` outside the kernel, one column each.
    pub vectors: CMat,
}

fn cluster_values(values: &[Complex64], tol_abs: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .re
            .partial_cmp(&values[b].re)
            .unwrap()
            .then(values[a].im.partial_cmp(&values[b].im).unwrap())
    });
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match clusters.last_mut() {
            Some(cluster) => {
                let rep = cluster.iter().map(|&i| values[i]).sum::<Complex64>()
                    / cluster.len() as f64;
                if (values[idx] - rep).norm() <= tol_abs {
                    cluster.push(idx);
                } else {
                    clusters.push(vec![idx]);
                }
            }
            None => clusters.push(vec![idx]),
        }
    }
    clusters
}

/// Eigen-decomposes `A(k)`, retains the eigenpairs whose eigenvectors lie
/// in the right kernel of `C^0 N^i k_i`, clusters values, and attaches the
/// pencil kernels per eigenvalue.
pub fn generalized_eigens(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    k: &WaveCovector,
    tol: f64,
) -> Result<EvolutionSpectrum> {
    let a = evolution_symbol(pair, symbol, k);
    let w = geroch.c_time_contraction().dot(&symbol.spatial_contraction(k));
    let w_norm = linalg::fro_norm(&w);
    let (values, vectors) = linalg::eig(&a)?;

    let spectral_radius = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol_cluster = CLUSTER_TOL * spectral_radius.max(1.0);

    // Kernel membership per eigenvector of A(k).
    let u = symbol.unknowns();
    let in_kernel: Vec<bool> = (0..u)
        .map(|j| {
            let col = vectors.column(j);
            let mut img_sq = 0.0;
            for i in 0..w.nrows() {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..u {
                    acc += w[(i, l)] * col[l];
                }
                img_sq += acc.norm_sqr();
            }
            let vnorm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            img_sq.sqrt() <= KERNEL_MEMBERSHIP_TOL * w_norm.max(1e-300) * vnorm
        })
        .collect();

    let all: Vec<Complex64> = values.to_vec();
    let clusters = cluster_values(&all, tol_cluster);

    let mut physical = Vec::new();
    let mut inherited = Vec::new();
    for cluster in clusters {
        let rep = cluster.iter().map(|&i| all[i]).sum::<Complex64>() / cluster.len() as f64;
        // Geometric multiplicity and kernels come from the pencil itself,
        // which is robust against eigenvector mixing in degenerate cases.
        let is_real = rep.im.abs() <= REALNESS_TOL * rep.norm().max(1.0);
        let any_kernel = cluster.iter().any(|&i| in_kernel[i]);
        if any_kernel && !is_real {
            return Err(Error::ComplexPhysicalEigenvalue {
                re: rep.re,
                im: rep.im,
            });
        }
        if !is_real {
            // complex transport eigenvalue: reduction-dependent, recorded
            // as inherited with no kernel modes
            let vecs = collect_columns(&vectors, &cluster);
            inherited.push(InheritedEigen {
                value: rep,
                algebraic: cluster.len(),
                vectors: vecs,
            });
            continue;
        }
        let pencil = symbol.pencil(rep.re, k);
        let right = linalg::right_kernel(&pencil, tol)?;
        let geometric = right.ncols();
        if geometric > 0 {
            let left = linalg::left_kernel(&pencil, tol)?;
            physical.push(EigenRecord {
                value: rep.re,
                multiplicity: geometric,
                algebraic: cluster.len(),
                right_vectors: right,
                left_vectors: left,
            });
        } else {
            let vecs = collect_columns(&vectors, &cluster);
            inherited.push(InheritedEigen {
                value: Complex64::new(rep.re, 0.0),
                algebraic: cluster.len(),
                vectors: vecs,
            });
        }
    }
    physical.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    inherited.sort_by(|a, b| {
        (a.value.re, a.value.im)
            .partial_cmp(&(b.value.re, b.value.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(EvolutionSpectrum {
        physical,
        inherited,
    })
}

fn collect_columns(m: &CMat, idx: &[usize]) -> CMat {
    let mut out = CMat::zeros((m.nrows(), idx.len()));
    for (j, &i) in idx.iter().enumerate() {
        out.column_mut(j).assign(&m.column(i));
    }
    out
}

/// Certification status of an emitted Kronecker structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certification {
    /// The multiplicity count matched `d`: the structure is exactly the
    /// one guaranteed by the certification lemma.
    Lemma2Certified,
    /// Some column mass could not be certified as size-1 Jordan blocks;
    /// blocks of higher degree may be present.
    Partial,
}

/// Kronecker block inventory of a pencil.
///
/// `jordan` lists certified size-1 Jordan blocks per eigenvalue;
/// `l_blocks[m]` counts `L_m^T` blocks; `zero_rows` counts vanishing rows
/// (`L_0^T`). `unresolved_columns` is the column mass that could not be
/// certified (zero when certified) so the counting identities hold for
/// every emitted structure:
///
/// * `zero_rows + sum_m l_blocks[m] = c`
/// * `sum jordan + sum_m m * l_blocks[m] + unresolved_columns = u`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KroneckerStructure {
    pub jordan: Vec<(f64, usize)>,
    pub l_blocks: BTreeMap<usize, usize>,
    pub zero_rows: usize,
    pub unresolved_columns: usize,
    pub verified: Certification,
}

impl KroneckerStructure {
    pub fn is_certified(&self) -> bool {
        self.verified == Certification::Lemma2Certified
    }

    pub fn jordan_total(&self) -> usize {
        self.jordan.iter().map(|&(_, n)| n).sum()
    }

    /// Row-count identity: blocks with a row surplus must account for the
    /// full row surplus `rows - cols` of the pencil.
    pub fn check_row_identity(&self, row_surplus: usize) -> bool {
        self.zero_rows + self.l_blocks.values().sum::<usize>() == row_surplus
    }

    /// Column-count identity against the pencil width.
    pub fn check_column_identity(&self, cols: usize) -> bool {
        let l_cols: usize = self.l_blocks.iter().map(|(m, n)| m * n).sum();
        self.jordan_total() + l_cols + self.unresolved_columns == cols
    }
}

/// Classifies the Kronecker structure of the full pencil at one wave
/// covector. Certified when the geometric multiplicities sum to `d`.
pub fn kronecker_structure(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    k: &WaveCovector,
    tol: f64,
) -> Result<KroneckerStructure> {
    let dims = kernel_dims(symbol, geroch, k, tol)?;
    let spectrum = generalized_eigens(symbol, pair, geroch, k, tol)?;
    Ok(structure_from_parts(&spectrum.physical, dims.d, dims.r, dims.s))
}

pub(crate) fn structure_from_parts(
    physical: &[EigenRecord],
    d: usize,
    r: usize,
    s: usize,
) -> KroneckerStructure {
    let jordan: Vec<(f64, usize)> = physical
        .iter()
        .map(|rec| (rec.value, rec.multiplicity))
        .collect();
    let geometric_total: usize = jordan.iter().map(|&(_, n)| n).sum();
    let mut l_blocks = BTreeMap::new();
    if r > 0 {
        l_blocks.insert(1, r);
    }
    let certified = geometric_total == d;
    KroneckerStructure {
        jordan,
        l_blocks,
        zero_rows: s,
        unresolved_columns: d - geometric_total.min(d),
        verified: if certified {
            Certification::Lemma2Certified
        } else {
            Certification::Partial
        },
    }
}

/// Canonical-angle data for one generalized eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenAngles {
    pub value: f64,
    /// Cosines of the canonical angles between the projected left and
    /// right characteristic subspaces, sorted descending.
    pub cosines: Vec<f64>,
}

/// Computes the canonical angles between `Phi_L` and `Phi_R` for every
/// generalized eigenvalue at one wave covector.
///
/// `Phi_R` is the pencil's right kernel. The left kernel at an eigenvalue
/// has dimension `d_i + c`; its `c`-dimensional part shared by all lambda
/// (spanned by the contracted `M` rows through `C^0` and by the constraint
/// rows of the intertwining identity) is removed before projecting with
/// `G N^{0T}` into the unknown fiber.
pub fn canonical_angles(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    gram: &GramForm,
    k: &WaveCovector,
    tol: f64,
) -> Result<Vec<EigenAngles>> {
    let spectrum = generalized_eigens(symbol, pair, geroch, k, tol)?;
    angles_for_spectrum(&spectrum.physical, symbol, pair, geroch, gram, k, tol)
}

pub(crate) fn angles_for_spectrum(
    physical: &[EigenRecord],
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    gram: &GramForm,
    k: &WaveCovector,
    tol: f64,
) -> Result<Vec<EigenAngles>> {
    let c = symbol.constraint_count();
    let c0 = geroch.c_time_contraction();
    let nk = symbol.spatial_contraction(k);
    let w = c0.dot(&nk);
    let mk_c0 = geroch.m_proj_contraction(k).dot(&c0); // m x e
    let b0 = constraint_transport(geroch, pair, k); // c x c
    let n0t = symbol.time_slab().t().to_owned();

    let mut out = Vec::with_capacity(physical.len());
    for rec in physical {
        let d_i = rec.multiplicity;
        if rec.left_vectors.ncols() != d_i + c {
            return Err(Error::SubspaceDimensionMismatch {
                eigenvalue: rec.value,
                context: format!(
                    "left kernel has dimension {}, expected d + c = {}",
                    rec.left_vectors.ncols(),
                    d_i + c
                ),
            });
        }
        // lambda-shared part of the left kernel at this eigenvalue:
        // rows of (M_proj k) C^0 and of -W h + (-lambda I + B0) C^0.
        let mut shifted = b0.clone();
        for i in 0..c {
            shifted[(i, i)] -= rec.value;
        }
        let c_rows = shifted.dot(&c0) - w.dot(pair.h()); // c x e
        let mut common = Mat::zeros((symbol.equations(), mk_c0.nrows() + c));
        common
            .slice_mut(ndarray::s![.., ..mk_c0.nrows()])
            .assign(&mk_c0.t());
        common
            .slice_mut(ndarray::s![.., mk_c0.nrows()..])
            .assign(&c_rows.t());
        let q_common = linalg::column_space(&common, tol)?;
        let extra = linalg::orth_complement_within(&rec.left_vectors, &q_common, tol)?;
        if extra.ncols() != d_i {
            return Err(Error::SubspaceDimensionMismatch {
                eigenvalue: rec.value,
                context: format!(
                    "residual left-kernel part has dimension {}, expected {}",
                    extra.ncols(),
                    d_i
                ),
            });
        }
        let phi_l = linalg::column_space(&gram.matrix().dot(&n0t).dot(&extra), tol)?;
        if phi_l.ncols() != d_i {
            return Err(Error::SubspaceDimensionMismatch {
                eigenvalue: rec.value,
                context: format!(
                    "projected left subspace has dimension {}, expected {}",
                    phi_l.ncols(),
                    d_i
                ),
            });
        }
        let cosines = linalg::principal_cosines(&phi_l, &rec.right_vectors)?;
        out.push(EigenAngles {
            value: rec.value,
            cosines,
        });
    }
    Ok(out)
}

/// Seeded sampling plan for a sweep over unit wave covectors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

/// Per-sample record of the evolution-side sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub k: Vec<f64>,
    pub kernel_dims: KernelDims,
    pub eigenvalues: Vec<(f64, usize)>,
    pub certified: bool,
    pub min_cosine: f64,
    pub max_imag: f64,
    pub real: bool,
}

/// Aggregate result of a strong-hyperbolicity sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub min_cosine_threshold: f64,
    pub records: Vec<SampleRecord>,
    pub all_real: bool,
    pub all_certified: bool,
    pub kernel_dims_constant: bool,
    pub min_cosine: f64,
    pub strongly_hyperbolic: bool,
}

/// Default lower bound on canonical-angle cosines for the SH verdict.
pub const DEFAULT_MIN_COSINE: f64 = 1e-3;

/// Sweeps seeded unit wave covectors and aggregates the SH verdict:
/// real spectrum everywhere, certified structures everywhere, and all
/// canonical-angle cosines above the threshold.
pub fn sh_sweep(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    gram: &GramForm,
    sampling: Sampling,
    tol: f64,
    jobs: usize,
) -> Result<SweepReport> {
    let ks = sample_unit_covectors(symbol.n_space(), sampling.count, sampling.seed);
    let analyze = |(index, k): (usize, &WaveCovector)| -> Result<SampleRecord> {
        let dims = kernel_dims(symbol, geroch, k, tol)?;
        match generalized_eigens(symbol, pair, geroch, k, tol) {
            Ok(spectrum) => {
                let structure = structure_from_parts(&spectrum.physical, dims.d, dims.r, dims.s);
                let angles =
                    angles_for_spectrum(&spectrum.physical, symbol, pair, geroch, gram, k, tol)?;
                let min_cosine = angles
                    .iter()
                    .flat_map(|a| a.cosines.iter().cloned())
                    .fold(f64::INFINITY, f64::min);
                let min_cosine = if min_cosine.is_finite() { min_cosine } else { 1.0 };
                Ok(SampleRecord {
                    index,
                    k: k.spatial().to_vec(),
                    kernel_dims: dims,
                    eigenvalues: spectrum
                        .physical
                        .iter()
                        .map(|r| (r.value, r.multiplicity))
                        .collect(),
                    certified: structure.is_certified(),
                    min_cosine,
                    max_imag: 0.0,
                    real: true,
                })
            }
            Err(Error::ComplexPhysicalEigenvalue { re: _, im }) => Ok(SampleRecord {
                index,
                k: k.spatial().to_vec(),
                kernel_dims: dims,
                eigenvalues: Vec::new(),
                certified: false,
                min_cosine: 0.0,
                max_imag: im.abs(),
                real: false,
            }),
            Err(e) => Err(e),
        }
    };

    let records = run_indexed(&ks, jobs, analyze)?;

    let all_real = records.iter().all(|r| r.real);
    let all_certified = records.iter().all(|r| r.certified);
    let kernel_dims_constant = records
        .windows(2)
        .all(|w| w[0].kernel_dims == w[1].kernel_dims);
    let min_cosine = records
        .iter()
        .map(|r| r.min_cosine)
        .fold(f64::INFINITY, f64::min);
    let min_cosine = if min_cosine.is_finite() { min_cosine } else { 1.0 };
    let strongly_hyperbolic = all_real && all_certified && min_cosine >= DEFAULT_MIN_COSINE;
    Ok(SweepReport {
        samples: sampling.count,
        seed: sampling.seed,
        tol,
        min_cosine_threshold: DEFAULT_MIN_COSINE,
        records,
        all_real,
        all_certified,
        kernel_dims_constant,
        min_cosine,
        strongly_hyperbolic,
    })
}

/// Runs an indexed per-sample analysis, serially or on a bounded rayon
/// pool; results come back ordered by sample index either way.
pub(crate) fn run_indexed<T, F>(ks: &[WaveCovector], jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn((usize, &WaveCovector)) -> Result<T> + Sync,
{
    if jobs <= 1 {
        ks.iter().enumerate().map(|(i, k)| f((i, k))).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            ks.par_iter()
                .enumerate()
                .map(|(i, k)| f((i, k)))
                .collect::<Result<Vec<T>>>()
        })
    }
}

/// Left-kernel dimension of the pencil at a probe value, used by the
/// off-eigenvalue dimension checks.
pub fn pencil_left_kernel_dim(
    symbol: &PrincipalSymbol,
    lambda: f64,
    k: &WaveCovector,
    tol: f64,
) -> Result<usize> {
    Ok(linalg::left_kernel(&symbol.pencil(lambda, k), tol)?.ncols())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering_merges_transitively() {
        let vals = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 + 4e-9, 0.0),
            Complex64::new(1.0 + 8e-9, 0.0),
            Complex64::new(2.0, 0.0),
        ];
        let clusters = cluster_values(&vals, 1e-8 * 2.0);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].len(), 3);
    }

    #[test]
    fn counting_identities_hold_for_partial() {
        // d = 2 but only one certified block: the unresolved column keeps
        // the column identity exact.
        let rec = EigenRecord {
            value: 0.0,
            multiplicity: 1,
            algebraic: 2,
            right_vectors: Mat::zeros((2, 1)),
            left_vectors: Mat::zeros((2, 1)),
        };
        let s = structure_from_parts(&[rec], 2, 0, 0);
        assert!(!s.is_certified());
        assert_eq!(s.unresolved_columns, 1);
        assert!(s.check_row_identity(0));
        assert!(s.check_column_identity(2));
    }
}
