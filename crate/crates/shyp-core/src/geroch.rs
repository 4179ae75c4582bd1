//! Geroch fields: the constraint-generating fields of the system.
//!
//! A Geroch field is a covector-valued field `X^a_A` whose symmetrized
//! contraction with the principal symbol vanishes. The full space splits
//! into the constraint fields `C` (whose time contraction `C^0` generates
//! the constraints and must have maximal rank) and the extra fields `M`
//! that additionally annihilate the time slab and parameterize the
//! differential relations among the constraints.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::reduction::ReductionPair;
use crate::tensor::{Foliation, PrincipalSymbol, WaveCovector};

/// Basis of the Geroch-field space, split into constraint fields `C`
/// (indexed by Gamma), extra fields `M` (indexed by Delta-tilde) and,
/// once a reduction is available, the projected fields `M_proj` whose
/// row index runs over the constraints instead of the equations.
///
/// Each field is stored as an `(n+1) x e` matrix (direction, equation);
/// each projected field as `(n+1) x c`.
#[derive(Debug, Clone)]
pub struct GerochBasis {
    n_dirs: usize,
    equations: usize,
    c_fields: Vec<Mat>,
    m_fields: Vec<Mat>,
    m_proj: Vec<Mat>,
}

impl GerochBasis {
    /// Wraps explicitly named fields, validating every invariant against
    /// the symbol: the symmetrization equation for all fields, the time
    /// annihilation for the `M` fields, and Condition 1 for `C`.
    pub fn from_named(
        c_fields: Vec<Mat>,
        m_fields: Vec<Mat>,
        symbol: &PrincipalSymbol,
        tol: f64,
    ) -> Result<Self> {
        let c = symbol.constraint_count();
        if c_fields.len() != c {
            return Err(Error::CountMismatch {
                found: c_fields.len(),
                expected: c,
            });
        }
        let scale = symbol_scale(symbol);
        for (label, fields) in [("C", &c_fields), ("M", &m_fields)] {
            for (idx, x) in fields.iter().enumerate() {
                let res = symmetrization_residual(x, symbol)?;
                if res > 1e-10 * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "named {label} field {idx} violates the Geroch equation (residual {res:.3e})"
                    )));
                }
            }
        }
        let n0 = symbol.time_slab();
        for (idx, m) in m_fields.iter().enumerate() {
            let res = linalg::fro_norm(&m.dot(&n0));
            if res > 1e-10 * scale {
                return Err(Error::DimensionMismatch(format!(
                    "named M field {idx} does not annihilate the time slab (residual {res:.3e})"
                )));
            }
        }
        let basis = Self {
            n_dirs: symbol.n_dirs(),
            equations: symbol.equations(),
            c_fields,
            m_fields,
            m_proj: Vec::new(),
        };
        let rank = linalg::rank(&basis.c_time_contraction(), tol)?;
        if rank != c {
            return Err(Error::Condition1Unsatisfiable { rank, required: c });
        }
        Ok(basis)
    }

    /// Wraps precomputed fields without validation. Useful for assembling
    /// perturbed or synthetic bases whose diagnostics are under test.
    pub fn from_parts_unchecked(
        n_dirs: usize,
        equations: usize,
        c_fields: Vec<Mat>,
        m_fields: Vec<Mat>,
    ) -> Self {
        Self {
            n_dirs,
            equations,
            c_fields,
            m_fields,
            m_proj: Vec::new(),
        }
    }

    pub fn constraint_count(&self) -> usize {
        self.c_fields.len()
    }

    /// Number of space-time directions the fields carry.
    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    /// Number of extra fields `m`.
    pub fn extra_count(&self) -> usize {
        self.m_fields.len()
    }

    pub fn c_fields(&self) -> &[Mat] {
        &self.c_fields
    }

    pub fn m_fields(&self) -> &[Mat] {
        &self.m_fields
    }

    /// Projected extra fields, available after [`project_m`].
    pub fn m_proj(&self) -> &[Mat] {
        &self.m_proj
    }

    /// The `c x e` matrix `C^0` stacking the time contraction of every
    /// constraint field.
    pub fn c_time_contraction(&self) -> Mat {
        let c = self.c_fields.len();
        let e = self.equations;
        let mut out = Mat::zeros((c, e));
        for (i, f) in self.c_fields.iter().enumerate() {
            out.row_mut(i).assign(&f.row(0));
        }
        out
    }

    /// The `c x e` matrix stacking one spatial slab of every `C` field.
    pub fn c_slab(&self, a: usize) -> Mat {
        let c = self.c_fields.len();
        let e = self.equations;
        let mut out = Mat::zeros((c, e));
        for (i, f) in self.c_fields.iter().enumerate() {
            out.row_mut(i).assign(&f.row(a));
        }
        out
    }

    /// The `m x c` contraction `M_proj^i k_i` of the projected extra
    /// fields with a wave covector.
    pub fn m_proj_contraction(&self, k: &WaveCovector) -> Mat {
        let m = self.m_proj.len();
        let c = self.constraint_count();
        let mut out = Mat::zeros((m, c));
        let kc = k.components();
        for (i, f) in self.m_proj.iter().enumerate() {
            for (a, &ka) in kc.iter().enumerate() {
                if ka != 0.0 {
                    out.row_mut(i).scaled_add(ka, &f.row(a));
                }
            }
        }
        out
    }
}

fn symbol_scale(symbol: &PrincipalSymbol) -> f64 {
    symbol
        .coeffs()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1.0)
}

/// Residual of the defining equation `X^{(a} N^{|A| b)} = 0` for one field.
pub fn symmetrization_residual(field: &Mat, symbol: &PrincipalSymbol) -> Result<f64> {
    let nd = symbol.n_dirs();
    if field.dim() != (nd, symbol.equations()) {
        return Err(Error::DimensionMismatch(format!(
            "Geroch field has shape {:?}, expected ({nd}, {})",
            field.dim(),
            symbol.equations()
        )));
    }
    let slabs: Vec<Mat> = (0..nd).map(|a| symbol.slab(a)).collect();
    let mut worst = 0.0_f64;
    for a in 0..nd {
        for b in a..nd {
            // X^a N^b + X^b N^a, each term a (1 x u) row per direction
            let term = field.row(a).dot(&slabs[b]) + field.row(b).dot(&slabs[a]);
            worst = worst.max(term.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
    }
    Ok(worst)
}

/// Computes an orthonormal basis of the space of all Geroch fields: the
/// nullspace of the linear map sending `X^a_A` to the collection of
/// symmetrized contractions `X^{(a} N^{|A| b)}` over `a <= b`.
pub fn solve_geroch_space(symbol: &PrincipalSymbol, tol: f64) -> Result<Vec<Mat>> {
    let nd = symbol.n_dirs();
    let e = symbol.equations();
    let u = symbol.unknowns();
    let n_rows = nd * (nd + 1) / 2 * u;
    let n_cols = nd * e;
    let mut map = Mat::zeros((n_rows, n_cols));
    let mut row = 0;
    for a in 0..nd {
        for b in a..nd {
            let slab_a = symbol.slab(a);
            let slab_b = symbol.slab(b);
            for al in 0..u {
                for big_a in 0..e {
                    map[(row, a * e + big_a)] += slab_b[(big_a, al)];
                    map[(row, b * e + big_a)] += slab_a[(big_a, al)];
                }
                row += 1;
            }
        }
    }
    let kernel = linalg::right_kernel(&map, tol)?;
    let mut fields = Vec::with_capacity(kernel.ncols());
    for j in 0..kernel.ncols() {
        let col = kernel.column(j);
        let mut f = Mat::zeros((nd, e));
        for a in 0..nd {
            for big_a in 0..e {
                f[(a, big_a)] = col[a * e + big_a];
            }
        }
        fields.push(f);
    }
    Ok(fields)
}

/// Splits the Geroch space into `M` fields (those annihilating the time
/// slab) and `C` fields (a complement whose time contraction has full
/// rank), with a deterministic choice.
///
/// The `M` subspace is the nullspace of the map `X -> X N^0` restricted to
/// the space; `C` candidates are the orthogonal complement, re-mixed by the
/// SVD of their stacked time contractions so that `C^0` comes out with
/// orthonormal rows.
pub fn split_basis(
    space: &[Mat],
    symbol: &PrincipalSymbol,
    _foliation: &Foliation,
    tol: f64,
) -> Result<GerochBasis> {
    let g = space.len();
    let c_expected = symbol.constraint_count();
    if g == 0 {
        if c_expected != 0 {
            return Err(Error::CountMismatch {
                found: 0,
                expected: c_expected,
            });
        }
        return Ok(GerochBasis {
            n_dirs: symbol.n_dirs(),
            equations: symbol.equations(),
            c_fields: Vec::new(),
            m_fields: Vec::new(),
            m_proj: Vec::new(),
        });
    }
    let nd = symbol.n_dirs();
    let e = symbol.equations();
    let u = symbol.unknowns();
    let n0 = symbol.time_slab();

    // coefficient-space map: basis element -> vec(X N^0)
    let mut to_n0 = Mat::zeros((nd * u, g));
    for (j, x) in space.iter().enumerate() {
        let image = x.dot(&n0); // (nd x u)
        for a in 0..nd {
            for al in 0..u {
                to_n0[(a * u + al, j)] = image[(a, al)];
            }
        }
    }
    let m_coeffs = linalg::right_kernel(&to_n0, tol)?; // g x m
    let m_count = m_coeffs.ncols();
    let c_count = g - m_count;
    if c_count != c_expected {
        return Err(Error::CountMismatch {
            found: c_count,
            expected: c_expected,
        });
    }

    let combine = |coeffs: ndarray::ArrayView1<f64>| -> Mat {
        let mut f = Mat::zeros((nd, e));
        for (j, &w) in coeffs.iter().enumerate() {
            if w != 0.0 {
                f.scaled_add(w, &space[j]);
            }
        }
        f
    };

    let m_fields: Vec<Mat> = (0..m_count).map(|j| combine(m_coeffs.column(j))).collect();

    // C candidates: orthogonal complement of the M coefficients.
    let c_coeffs = linalg::orth_complement_within(&Mat::eye(g), &m_coeffs, tol)?;
    debug_assert_eq!(c_coeffs.ncols(), c_count);
    let candidates: Vec<Mat> = (0..c_count).map(|j| combine(c_coeffs.column(j))).collect();

    // Re-mix so that the stacked time contraction has orthonormal rows.
    let mut c0 = Mat::zeros((c_count, e));
    for (i, f) in candidates.iter().enumerate() {
        c0.row_mut(i).assign(&f.row(0));
    }
    let (uu, sv, _) = linalg::svd_full(&c0)?;
    let rank = linalg::rank_from_svals(&sv, tol);
    if rank != c_count {
        return Err(Error::Condition1Unsatisfiable {
            rank,
            required: c_count,
        });
    }
    let mut c_fields = Vec::with_capacity(c_count);
    for i in 0..c_count {
        let mut f = Mat::zeros((nd, e));
        for (j, cand) in candidates.iter().enumerate() {
            let w = uu[(j, i)] / sv[i];
            if w != 0.0 {
                f.scaled_add(w, cand);
            }
        }
        c_fields.push(f);
    }

    Ok(GerochBasis {
        n_dirs: symbol.n_dirs(),
        equations: symbol.equations(),
        c_fields,
        m_fields,
        m_proj: Vec::new(),
    })
}

/// Computes the projected extra fields `M_proj^{a} = M^{a}_A h^A_Gamma`
/// and stores them in the basis, checking that every projected time
/// component vanishes and that the projected fields satisfy the Geroch
/// equation through `C^0 N`.
pub fn project_m(basis: &mut GerochBasis, pair: &ReductionPair, symbol: &PrincipalSymbol) -> Result<()> {
    let nd = symbol.n_dirs();
    let scale = symbol_scale(symbol);
    let mut projected = Vec::with_capacity(basis.m_fields.len());
    for m in &basis.m_fields {
        let p = m.dot(pair.h_delta()); // (nd x c)
        let time_res = p.row(0).iter().map(|v| v.abs()).fold(0.0, f64::max);
        if time_res > 1e-12 * scale.max(linalg::fro_norm(&p)) {
            return Err(Error::LemmaM0Violation { residual: time_res });
        }
        projected.push(p);
    }

    // Symmetrized residual of M_proj through C^0 N: the projected field
    // must be a Geroch field of the composed symbol C^0 N^a.
    let c0 = basis.c_time_contraction();
    let composed: Vec<Mat> = (0..nd).map(|a| c0.dot(&symbol.slab(a))).collect();
    for p in &projected {
        let mut worst = 0.0_f64;
        for a in 0..nd {
            for b in a..nd {
                let term = p.row(a).dot(&composed[b]) + p.row(b).dot(&composed[a]);
                worst = worst.max(term.iter().map(|v| v.abs()).fold(0.0, f64::max));
            }
        }
        let norm_scale = scale.max(linalg::fro_norm(p)).max(1.0);
        if worst > 1e-10 * norm_scale {
            return Err(Error::LemmaM0Violation { residual: worst });
        }
    }
    basis.m_proj = projected;
    Ok(())
}

/// Verdict of the spanning condition at one wave covector.
#[derive(Debug, Clone)]
pub struct ConditionV {
    /// True iff the contracted projected `M` fields span the left kernel
    /// of `C^0 N^i k_i`.
    pub satisfied: bool,
    /// Dimension of that left kernel, `s(k)`.
    pub s: usize,
    /// Rank of the contracted `M` rows inside the kernel.
    pub spanned: usize,
    /// Orthonormal kernel directions not reachable from the `M` fields.
    pub deficiency: Vec<Array1<f64>>,
}

/// Checks whether `span{ M_proj^j k_j }` equals the left kernel of
/// `C^0 N^i k_i` (condition v). On failure the missing directions are
/// returned as orthonormal deficiency vectors.
pub fn check_condition_v(
    basis: &GerochBasis,
    symbol: &PrincipalSymbol,
    k: &WaveCovector,
    tol: f64,
) -> Result<ConditionV> {
    let w = basis.c_time_contraction().dot(&symbol.spatial_contraction(k));
    let kernel = linalg::left_kernel(&w, tol)?; // c x s
    let s = kernel.ncols();
    let mk = basis.m_proj_contraction(k); // m x c
    if s == 0 {
        return Ok(ConditionV {
            satisfied: true,
            s: 0,
            spanned: 0,
            deficiency: Vec::new(),
        });
    }
    // Restrict the M rows to kernel coordinates and measure their span.
    let in_kernel = kernel.t().dot(&mk.t()); // s x m
    let spanned = linalg::rank(&in_kernel, tol)?;
    if spanned == s {
        return Ok(ConditionV {
            satisfied: true,
            s,
            spanned,
            deficiency: Vec::new(),
        });
    }
    let reached = linalg::column_space(&in_kernel, tol)?; // s x spanned
    let missing = linalg::orth_complement_within(&Mat::eye(s), &reached, tol)?;
    let deficiency = (0..missing.ncols())
        .map(|j| kernel.dot(&missing.column(j)))
        .collect();
    Ok(ConditionV {
        satisfied: false,
        s,
        spanned,
        deficiency,
    })
}

/// Residual of expanding each element of the full Geroch space in the
/// split basis; small values certify the decomposition is complete.
pub fn decomposition_residual(space: &[Mat], basis: &GerochBasis, tol: f64) -> Result<f64> {
    if space.is_empty() {
        return Ok(0.0);
    }
    let nd = space[0].nrows();
    let e = space[0].ncols();
    let total = basis.c_fields.len() + basis.m_fields.len();
    let mut span = Mat::zeros((nd * e, total));
    for (j, f) in basis.c_fields.iter().chain(basis.m_fields.iter()).enumerate() {
        for a in 0..nd {
            for big_a in 0..e {
                span[(a * e + big_a, j)] = f[(a, big_a)];
            }
        }
    }
    let q = linalg::column_space(&span, tol)?;
    let mut worst = 0.0_f64;
    for x in space {
        let mut v = Array1::zeros(nd * e);
        for a in 0..nd {
            for big_a in 0..e {
                v[a * e + big_a] = x[(a, big_a)];
            }
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let proj = q.dot(&q.t().dot(&v));
        let res = (&v - &proj).iter().map(|t| t * t).sum::<f64>().sqrt();
        worst = worst.max(res / norm.max(1e-300));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    /// e = u system with invertible time slab and generic spatial slab:
    /// no constraints, empty Geroch space.
    #[test]
    fn square_system_has_empty_space() {
        let mut coeffs = Array3::zeros((2, 2, 2));
        coeffs[(0, 0, 0)] = 1.0;
        coeffs[(0, 1, 1)] = 1.0;
        coeffs[(1, 0, 0)] = 0.3;
        coeffs[(1, 0, 1)] = 1.1;
        coeffs[(1, 1, 0)] = -0.7;
        coeffs[(1, 1, 1)] = 0.2;
        let sym = PrincipalSymbol::new("square", 1, 2, 2, coeffs).unwrap();
        let space = solve_geroch_space(&sym, 1e-10).unwrap();
        assert!(space.is_empty());
        let basis = split_basis(&space, &sym, &Foliation::new(1), 1e-10).unwrap();
        assert_eq!(basis.constraint_count(), 0);
        assert_eq!(basis.extra_count(), 0);
    }

    #[test]
    fn split_rejects_wrong_count() {
        // A symbol whose constraints are not Geroch-generated: e - u = 1
        // but the Geroch space is empty (generic rectangular symbol).
        let mut coeffs = Array3::zeros((2, 3, 2));
        coeffs[(0, 0, 0)] = 1.0;
        coeffs[(0, 1, 1)] = 1.0;
        coeffs[(0, 2, 0)] = 0.4;
        coeffs[(0, 2, 1)] = -0.9;
        coeffs[(1, 0, 1)] = 0.8;
        coeffs[(1, 1, 0)] = -0.6;
        coeffs[(1, 2, 1)] = 1.7;
        let sym = PrincipalSymbol::new("nongeroch", 1, 3, 2, coeffs).unwrap();
        let space = solve_geroch_space(&sym, 1e-10).unwrap();
        let err = split_basis(&space, &sym, &Foliation::new(1), 1e-10).unwrap_err();
        assert!(matches!(err, Error::CountMismatch { .. }));
    }
}
