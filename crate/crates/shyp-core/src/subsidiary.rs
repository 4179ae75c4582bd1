//! The subsidiary system: the evolution equations obeyed by the
//! constraints themselves.
//!
//! Its principal symbol is `B(k) = C^i h_delta k_i + N_free (M_proj^i k_i)`
//! with the `c x m` matrix `N_free` free. The part inherited from the
//! evolution symbol (the `pi` eigenvalues) is independent of `N_free`;
//! the remaining `s(k)` velocities can be assigned freely by solving for
//! `N_free`, which is how the subsidiary system is hyperbolized.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geroch::{check_condition_v, GerochBasis};
use crate::linalg::{self, CMat, Mat};
use crate::pencil::{
    generalized_eigens, run_indexed, structure_from_parts, EigenRecord, KroneckerStructure,
    Sampling,
};
use crate::reduction::{constraint_transport, evolution_symbol, ReductionPair};
use crate::sample::sample_unit_covectors;
use crate::tensor::{PrincipalSymbol, WaveCovector};

/// The assembled subsidiary symbol at one wave covector.
#[derive(Debug, Clone)]
pub struct SubsidiarySymbol {
    /// `B(k) = C^i h_delta k_i + N_free M_proj^i k_i`, `c x c`.
    pub b: Mat,
    /// The free matrix used, `c x m`.
    pub n_free: Mat,
    /// Eigenvalues inherited from the evolution symbol.
    pub pi_values: Vec<f64>,
    /// Assigned constraint velocities (empty unless velocities were set).
    pub rho_values: Vec<f64>,
}

/// Assembles `B(k)` for a given `N_free` (a `c x m` matrix; pass a
/// `c x 0` matrix when the system has no `M` fields, in which case the
/// subsidiary symbol is unique).
pub fn subsidiary_symbol(
    geroch: &GerochBasis,
    pair: &ReductionPair,
    n_free: &Mat,
    k: &WaveCovector,
) -> Result<SubsidiarySymbol> {
    let c = geroch.constraint_count();
    let m = geroch.extra_count();
    if n_free.dim() != (c, m) {
        return Err(Error::DimensionMismatch(format!(
            "N_free has shape {:?}, expected ({c}, {m})",
            n_free.dim()
        )));
    }
    let mut b = constraint_transport(geroch, pair, k);
    if m > 0 {
        b += &n_free.dot(&geroch.m_proj_contraction(k));
    }
    Ok(SubsidiarySymbol {
        b,
        n_free: n_free.clone(),
        pi_values: Vec::new(),
        rho_values: Vec::new(),
    })
}

/// Relative residual of the intertwining identity
/// `(k C^0 N)(-lambda I + A(k)) = (-lambda I + B(k))(C^0 N k)`
/// over the given probe values of lambda. Exact for any reduction pair
/// and any `N_free`.
pub fn verify_intertwining(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    n_free: &Mat,
    k: &WaveCovector,
    lambdas: &[f64],
) -> Result<f64> {
    let w = geroch.c_time_contraction().dot(&symbol.spatial_contraction(k));
    let a = evolution_symbol(pair, symbol, k);
    let b = subsidiary_symbol(geroch, pair, n_free, k)?.b;
    let u = symbol.unknowns();
    let c = symbol.constraint_count();
    let w_norm = linalg::fro_norm(&w);
    let op_norm = linalg::fro_norm(&a) + linalg::fro_norm(&b);
    let mut worst = 0.0_f64;
    for &lambda in lambdas {
        let mut lhs_inner = a.clone();
        for i in 0..u {
            lhs_inner[(i, i)] -= lambda;
        }
        let lhs = w.dot(&lhs_inner);
        let mut rhs_outer = b.clone();
        for i in 0..c {
            rhs_outer[(i, i)] -= lambda;
        }
        let rhs = rhs_outer.dot(&w);
        let resid = linalg::fro_norm(&(&lhs - &rhs));
        let scale = w_norm * (lambda.abs() + op_norm + 1.0);
        worst = worst.max(resid / scale.max(1e-300));
    }
    Ok(worst)
}

/// Kronecker classification of the subsidiary (stacked) pencil at one
/// wave covector, plus the condition-v verdict that drove it.
#[derive(Debug, Clone)]
pub struct SubsidiaryKronecker {
    pub structure: KroneckerStructure,
    /// Dimension of the left kernel of `M_proj^i k_i` (count of zero
    /// rows, `y(k)`).
    pub y: usize,
    pub condition_v_satisfied: bool,
    /// True when the pencil had to be extended with deficiency rows.
    pub extended: bool,
}

/// Classifies the stacked pencil `[-lambda I + C^i h_delta k_i ; M_proj^i k_i]`.
///
/// The size-1 Jordan blocks sit at the inherited `pi` values (eigenvalues
/// of `A(k)` whose eigenvectors are not kernel modes), the `L_1^T` count
/// is the rank of the contracted `M` rows, and the zero rows are its left
/// kernel. When condition v fails, the deficiency rows are appended to
/// the pencil (the relaxed construction) and that extended pencil is
/// classified instead.
pub fn subsidiary_kronecker(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    k: &WaveCovector,
    tol: f64,
) -> Result<SubsidiaryKronecker> {
    let c = geroch.constraint_count();
    let spectrum = generalized_eigens(symbol, pair, geroch, k, tol)?;
    let condv = check_condition_v(geroch, symbol, k, tol)?;

    let mut mk = geroch.m_proj_contraction(k); // m x c
    let extended = !condv.satisfied;
    if extended {
        let mut rows = Mat::zeros((mk.nrows() + condv.deficiency.len(), c));
        rows.slice_mut(ndarray::s![..mk.nrows(), ..]).assign(&mk);
        for (i, x) in condv.deficiency.iter().enumerate() {
            rows.row_mut(mk.nrows() + i).assign(x);
        }
        mk = rows;
    }

    let b0 = constraint_transport(geroch, pair, k);
    let rank_mk = linalg::rank(&mk, tol)?;
    let y = mk.nrows() - rank_mk;
    let d_sub = c - rank_mk;

    // Generalized eigenpairs of the stacked pencil: delta-psi vectors at
    // the pi values, with geometric multiplicities from the stacked
    // pencil itself.
    let pis = inherited_values(&spectrum.inherited)?;
    // the shifted block can degenerate to the zero matrix at an inherited
    // value, so kernel membership is decided at the problem scale
    let scale = linalg::fro_norm(&b0)
        .max(linalg::fro_norm(&mk))
        .max(pis.iter().map(|&(v, _)| v.abs()).fold(0.0, f64::max))
        .max(1.0);
    let cutoff = tol * scale;
    let mut records: Vec<EigenRecord> = Vec::new();
    for (value, algebraic) in pis {
        let stacked = stacked_pencil(&b0, &mk, value);
        let right = linalg::right_kernel_abs(&stacked, cutoff)?;
        if right.ncols() > 0 {
            records.push(EigenRecord {
                value,
                multiplicity: right.ncols(),
                algebraic,
                left_vectors: linalg::left_kernel_abs(&stacked, cutoff)?,
                right_vectors: right,
            });
        }
    }
    let structure = structure_from_parts(&records, d_sub, rank_mk, y);
    Ok(SubsidiaryKronecker {
        structure,
        y,
        condition_v_satisfied: condv.satisfied,
        extended,
    })
}

fn stacked_pencil(b0: &Mat, mk: &Mat, lambda: f64) -> Mat {
    let c = b0.nrows();
    let mut out = Mat::zeros((c + mk.nrows(), c));
    let mut top = b0.clone();
    for i in 0..c {
        top[(i, i)] -= lambda;
    }
    out.slice_mut(ndarray::s![..c, ..]).assign(&top);
    out.slice_mut(ndarray::s![c.., ..]).assign(mk);
    out
}

fn inherited_values(
    inherited: &[crate::pencil::InheritedEigen],
) -> Result<Vec<(f64, usize)>> {
    let mut out = Vec::with_capacity(inherited.len());
    for rec in inherited {
        if rec.value.im.abs() > 1e-8 * rec.value.norm().max(1.0) {
            return Err(Error::ComplexPhysicalEigenvalue {
                re: rec.value.re,
                im: rec.value.im,
            });
        }
        out.push((rec.value.re, rec.algebraic));
    }
    Ok(out)
}

/// Chooses `N_free` so that `B(k)` carries the requested constraint
/// velocities on top of the inherited `pi` values.
///
/// The assigned eigenvectors are the right-singular directions of
/// `M_proj^i k_i` complementary to its kernel; the linear system
/// `N_free (M k Psi) = Psi diag(rho) - B0 Psi` is solved in the
/// least-squares sense (minimum norm).
pub fn assign_constraint_velocities(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    k: &WaveCovector,
    rho_targets: &[f64],
    tol: f64,
) -> Result<SubsidiarySymbol> {
    let c = geroch.constraint_count();
    let m = geroch.extra_count();
    let condv = check_condition_v(geroch, symbol, k, tol)?;
    if !condv.satisfied {
        return Err(Error::ConditionVFailure {
            deficit: condv.s - condv.spanned,
        });
    }
    let s = condv.s;
    if rho_targets.len() != s {
        return Err(Error::DimensionMismatch(format!(
            "got {} velocity targets, need s(k) = {s}",
            rho_targets.len()
        )));
    }
    let spectrum = generalized_eigens(symbol, pair, geroch, k, tol)?;
    let pis = inherited_values(&spectrum.inherited)?;
    let b0 = constraint_transport(geroch, pair, k);
    let sep_scale = pis
        .iter()
        .map(|&(v, _)| v.abs())
        .chain(rho_targets.iter().map(|v| v.abs()))
        .fold(1.0, f64::max);
    for (i, &rho) in rho_targets.iter().enumerate() {
        if pis.iter().any(|&(pi, _)| (rho - pi).abs() <= 1e-8 * sep_scale) {
            return Err(Error::SingularVelocityAssignment { value: rho });
        }
        if rho_targets[..i]
            .iter()
            .any(|&other| (rho - other).abs() <= 1e-8 * sep_scale)
        {
            return Err(Error::SingularVelocityAssignment { value: rho });
        }
    }

    if m == 0 {
        // no freedom: the subsidiary symbol is unique
        let sym = subsidiary_symbol(geroch, pair, &Mat::zeros((c, 0)), k)?;
        return Ok(SubsidiarySymbol {
            pi_values: pis.iter().flat_map(|&(v, n)| std::iter::repeat_n(v, n)).collect(),
            rho_values: Vec::new(),
            ..sym
        });
    }

    let mk = geroch.m_proj_contraction(k); // m x c
    let (_, sv, vt) = linalg::svd_full(&mk)?;
    let rank = linalg::rank_from_svals(&sv, tol);
    debug_assert_eq!(rank, s);
    let psi_rho = vt.slice(ndarray::s![..rank, ..]).t().to_owned(); // c x s

    let lhs = mk.dot(&psi_rho); // m x s
    let mut rhs = -b0.dot(&psi_rho); // c x s
    for (j, &rho) in rho_targets.iter().enumerate() {
        let col = psi_rho.column(j).to_owned();
        rhs.column_mut(j).scaled_add(rho, &col);
    }
    // N_free rows solve  row * lhs = rhs_row  =>  N_free = rhs * pinv(lhs)
    let n_free = rhs.dot(&linalg::pinv(&lhs, tol)?);
    let sym = subsidiary_symbol(geroch, pair, &n_free, k)?;
    Ok(SubsidiarySymbol {
        pi_values: pis.iter().flat_map(|&(v, n)| std::iter::repeat_n(v, n)).collect(),
        rho_values: rho_targets.to_vec(),
        ..sym
    })
}

/// Per-wave-vector velocity policy for the subsidiary sweep.
#[derive(Debug, Clone)]
pub enum VelocityPolicy {
    /// `rho_j = (1 + max |pi u lambda|) (1 + j / s(k))`: distinct,
    /// separated from the inherited values, rescaled per sample.
    Default,
    /// Evaluate one constant `N_free` across the sweep and report where
    /// diagonalizability fails.
    Constant(Mat),
}

/// Per-sample record of the subsidiary sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsidiarySample {
    pub index: usize,
    pub k: Vec<f64>,
    pub s: usize,
    pub y: usize,
    pub condition_v: bool,
    pub pi_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub eigenvalues_real: bool,
    pub max_imag: f64,
    pub eigenvector_condition: f64,
    pub diagonalizable: bool,
}

/// Aggregate result of the subsidiary strong-hyperbolicity sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsidiarySweep {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub condition_threshold: f64,
    pub records: Vec<SubsidiarySample>,
    pub all_real: bool,
    pub all_diagonalizable: bool,
    pub condition_v_everywhere: bool,
    pub strongly_hyperbolic: bool,
}

/// Condition-number threshold above which `B(k)` counts as effectively
/// non-diagonalizable.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e8;

/// Sweeps the subsidiary symbol: per sample, assigns velocities by the
/// policy, eigen-decomposes `B(k)` and checks realness and uniform
/// diagonalizability through the eigenvector condition number.
pub fn subsidiary_sh_sweep(
    symbol: &PrincipalSymbol,
    pair: &ReductionPair,
    geroch: &GerochBasis,
    policy: &VelocityPolicy,
    sampling: Sampling,
    tol: f64,
    jobs: usize,
) -> Result<SubsidiarySweep> {
    let ks = sample_unit_covectors(symbol.n_space(), sampling.count, sampling.seed);
    let analyze = |(index, k): (usize, &WaveCovector)| -> Result<SubsidiarySample> {
        let condv = check_condition_v(geroch, symbol, k, tol)?;
        let kron = subsidiary_kronecker(symbol, pair, geroch, k, tol)?;
        let sub = match policy {
            VelocityPolicy::Default => {
                let spectrum = generalized_eigens(symbol, pair, geroch, k, tol)?;
                let pis = inherited_values(&spectrum.inherited)?;
                if condv.satisfied && condv.s > 0 {
                    let lam_max = spectrum
                        .physical
                        .iter()
                        .map(|r| r.value.abs())
                        .chain(pis.iter().map(|&(v, _)| v.abs()))
                        .fold(0.0, f64::max);
                    let rho: Vec<f64> = (1..=condv.s)
                        .map(|j| (1.0 + lam_max) * (1.0 + j as f64 / condv.s as f64))
                        .collect();
                    assign_constraint_velocities(symbol, pair, geroch, k, &rho, tol)?
                } else {
                    let n_free =
                        Mat::zeros((geroch.constraint_count(), geroch.extra_count()));
                    let mut sym = subsidiary_symbol(geroch, pair, &n_free, k)?;
                    sym.pi_values = pis
                        .iter()
                        .flat_map(|&(v, n)| std::iter::repeat_n(v, n))
                        .collect();
                    sym
                }
            }
            VelocityPolicy::Constant(n_free) => {
                let spectrum = generalized_eigens(symbol, pair, geroch, k, tol)?;
                let pis = inherited_values(&spectrum.inherited)?;
                let mut sym = subsidiary_symbol(geroch, pair, n_free, k)?;
                sym.pi_values = pis
                    .iter()
                    .flat_map(|&(v, n)| std::iter::repeat_n(v, n))
                    .collect();
                sym
            }
        };
        let (values, _) = linalg::eig(&sub.b)?;
        let max_imag = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let scale = values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let real = max_imag <= 1e-8 * scale;
        let cond = eigenvector_condition(&values, &sub.b, tol)?;
        Ok(SubsidiarySample {
            index,
            k: k.spatial().to_vec(),
            s: condv.s,
            y: kron.y,
            condition_v: condv.satisfied,
            pi_values: sub.pi_values.clone(),
            rho_values: sub.rho_values.clone(),
            eigenvalues_real: real,
            max_imag,
            eigenvector_condition: cond,
            diagonalizable: cond.is_finite() && cond < DEFAULT_CONDITION_THRESHOLD,
        })
    };
    let records = run_indexed(&ks, jobs, analyze)?;
    let all_real = records.iter().all(|r| r.eigenvalues_real);
    let all_diagonalizable = records.iter().all(|r| r.diagonalizable);
    let condition_v_everywhere = records.iter().all(|r| r.condition_v);
    Ok(SubsidiarySweep {
        samples: sampling.count,
        seed: sampling.seed,
        tol,
        condition_threshold: DEFAULT_CONDITION_THRESHOLD,
        records,
        all_real,
        all_diagonalizable,
        condition_v_everywhere,
        strongly_hyperbolic: all_real && all_diagonalizable,
    })
}

/// Condition number of the best eigenbasis of `b`: per distinct
/// eigenvalue an orthonormal kernel basis of `b - lambda I` is taken, and
/// the stacked basis's condition number measures how uniformly the
/// eigenspaces span. Returns infinity when some geometric multiplicity
/// falls short (defective matrix). The raw eigenvector output of the
/// eigensolver is not used: it can be nearly dependent for a repeated
/// semisimple eigenvalue.
fn eigenvector_condition(
    values: &ndarray::Array1<Complex64>,
    b: &Mat,
    tol: f64,
) -> Result<f64> {
    let n = b.nrows();
    if n == 0 {
        return Ok(1.0);
    }
    let vals: Vec<Complex64> = values.to_vec();
    let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &v in &vals {
        match clusters
            .iter_mut()
            .find(|(rep, _)| (*rep - v).norm() <= 1e-8 * scale)
        {
            Some((_, count)) => *count += 1,
            None => clusters.push((v, 1)),
        }
    }
    let problem_scale = linalg::fro_norm(b).max(scale);
    let mut basis = CMat::zeros((n, n));
    let mut filled = 0usize;
    for &(rep, _) in &clusters {
        let mut shifted = CMat::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                shifted[(i, j)] = Complex64::new(b[(i, j)], 0.0);
            }
            shifted[(i, i)] -= rep;
        }
        let cutoff = tol.max(1e-10) * problem_scale;
        let kernel = linalg::right_kernel_c_abs(&shifted, cutoff)?;
        if filled + kernel.ncols() > n {
            // over-merged clusters; count what fits
            return Ok(f64::INFINITY);
        }
        for j in 0..kernel.ncols() {
            basis.column_mut(filled + j).assign(&kernel.column(j));
        }
        filled += kernel.ncols();
    }
    if filled < n {
        return Ok(f64::INFINITY);
    }
    linalg::cond2_c(&basis)
}

/// Relative residual of the constraint-of-constraints identity
/// `(M_proj^i k_i)(C^0 N^j k_j) = 0`.
pub fn constraint_of_constraints_check(
    symbol: &PrincipalSymbol,
    geroch: &GerochBasis,
    k: &WaveCovector,
) -> f64 {
    if geroch.extra_count() == 0 {
        return 0.0;
    }
    let mk = geroch.m_proj_contraction(k);
    let w = geroch.c_time_contraction().dot(&symbol.spatial_contraction(k));
    let prod = mk.dot(&w);
    let scale = linalg::fro_norm(&mk) * linalg::fro_norm(&w);
    linalg::fro_norm(&prod) / scale.max(1e-300)
}
