//! The principal symbol, the foliation covectors, and the basic rank
//! conditions a system must satisfy before any of the deeper analysis
//! applies.
//!
//! A system of `e` first-order equations in `u` unknowns over `n` spatial
//! directions (plus time) is described by the constant tensor stored in
//! [`PrincipalSymbol`]: one `e x u` coefficient matrix per space-time
//! direction. Contracting the symbol with a covector yields the matrix
//! whose rank structure drives everything else.

use ndarray::{Array1, Array3, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Constant principal symbol of a first-order system: `e` equations, `u`
/// unknowns, `n_space + 1` space-time directions (index 0 is time).
///
/// Coefficients are indexed `[a][A][alpha]` = (direction, equation,
/// unknown). The constraint count is `c = e - u`.
#[derive(Debug, Clone)]
pub struct PrincipalSymbol {
    name: String,
    n_space: usize,
    e: usize,
    u: usize,
    coeffs: Array3<f64>,
}

impl PrincipalSymbol {
    /// Validates dimensions, finiteness and `e >= u`.
    pub fn new(
        name: impl Into<String>,
        n_space: usize,
        e: usize,
        u: usize,
        coeffs: Array3<f64>,
    ) -> Result<Self> {
        if n_space == 0 || e == 0 || u == 0 {
            return Err(Error::DimensionMismatch(
                "n_space, e and u must all be positive".into(),
            ));
        }
        if e < u {
            return Err(Error::DimensionMismatch(format!(
                "need at least as many equations as unknowns, got e = {e} < u = {u}"
            )));
        }
        let expected = (n_space + 1, e, u);
        if coeffs.dim() != expected {
            return Err(Error::DimensionMismatch(format!(
                "coefficient array has shape {:?}, expected {:?}",
                coeffs.dim(),
                expected
            )));
        }
        if let Some((idx, _)) = coeffs.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteEntry(format!(
                "symbol coefficient at {:?}",
                idx
            )));
        }
        Ok(Self {
            name: name.into(),
            n_space,
            e,
            u,
            coeffs,
        })
    }

    /// Builds from nested vectors indexed `[a][A][alpha]`, as read from a
    /// system-definition file.
    pub fn from_nested(
        name: impl Into<String>,
        n_space: usize,
        e: usize,
        u: usize,
        nested: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let mut coeffs = Array3::zeros((n_space + 1, e, u));
        if nested.len() != n_space + 1 {
            return Err(Error::DimensionMismatch(format!(
                "symbol has {} direction slabs, expected {}",
                nested.len(),
                n_space + 1
            )));
        }
        for (a, slab) in nested.iter().enumerate() {
            if slab.len() != e {
                return Err(Error::DimensionMismatch(format!(
                    "slab {a} has {} rows, expected {e}",
                    slab.len()
                )));
            }
            for (row, entries) in slab.iter().enumerate() {
                if entries.len() != u {
                    return Err(Error::DimensionMismatch(format!(
                        "slab {a} row {row} has {} columns, expected {u}",
                        entries.len()
                    )));
                }
                for (col, &v) in entries.iter().enumerate() {
                    coeffs[(a, row, col)] = v;
                }
            }
        }
        Self::new(name, n_space, e, u, coeffs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_space(&self) -> usize {
        self.n_space
    }

    /// Number of space-time directions, `n_space + 1`.
    pub fn n_dirs(&self) -> usize {
        self.n_space + 1
    }

    pub fn equations(&self) -> usize {
        self.e
    }

    pub fn unknowns(&self) -> usize {
        self.u
    }

    /// Constraint count `c = e - u`.
    pub fn constraint_count(&self) -> usize {
        self.e - self.u
    }

    pub fn coeffs(&self) -> &Array3<f64> {
        &self.coeffs
    }

    /// Coefficient slab for one space-time direction, an `e x u` matrix.
    pub fn slab(&self, a: usize) -> Mat {
        self.coeffs.index_axis(ndarray::Axis(0), a).to_owned()
    }

    /// Contraction `sum_a w_a N^{Aa}_alpha`, an `e x u` matrix.
    pub fn contract(&self, w: ArrayView1<f64>) -> Result<Mat> {
        if w.len() != self.n_dirs() {
            return Err(Error::DimensionMismatch(format!(
                "covector has length {}, expected {}",
                w.len(),
                self.n_dirs()
            )));
        }
        let mut out = Mat::zeros((self.e, self.u));
        for (a, &wa) in w.iter().enumerate() {
            if wa != 0.0 {
                out.scaled_add(wa, &self.coeffs.index_axis(ndarray::Axis(0), a));
            }
        }
        Ok(out)
    }

    /// The time slab `N^0 = N^a n_a`.
    pub fn time_slab(&self) -> Mat {
        self.slab(0)
    }

    /// Spatial contraction `N^i k_i` for a wave covector.
    pub fn spatial_contraction(&self, k: &WaveCovector) -> Mat {
        self.contract(k.components())
            .expect("wave covector length is checked at construction")
    }

    /// The pencil `-lambda N^0 + N^i k_i`.
    pub fn pencil(&self, lambda: f64, k: &WaveCovector) -> Mat {
        let mut m = self.spatial_contraction(k);
        m.scaled_add(-lambda, &self.time_slab());
        m
    }

    /// Condition on the time slab: `N^0` must have maximal (column) rank.
    pub fn check_condition_n0(&self, _foliation: &Foliation, tol: f64) -> Result<RankCheck> {
        let rank = linalg::rank(&self.time_slab(), tol)?;
        Ok(RankCheck {
            holds: rank == self.u,
            rank,
            required: self.u,
        })
    }

    /// True iff the stacked matrix `[N^0 | N^1 | ... | N^n]` has trivial
    /// left kernel, i.e. no covector annihilates every slab and the system
    /// carries no algebraic constraints.
    pub fn check_no_algebraic_constraints(&self, tol: f64) -> Result<bool> {
        let mut stacked = Mat::zeros((self.e, self.n_dirs() * self.u));
        for a in 0..self.n_dirs() {
            stacked
                .slice_mut(ndarray::s![.., a * self.u..(a + 1) * self.u])
                .assign(&self.coeffs.index_axis(ndarray::Axis(0), a));
        }
        Ok(linalg::rank(&stacked, tol)? == self.e)
    }
}

/// Outcome of a rank condition check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RankCheck {
    pub holds: bool,
    pub rank: usize,
    pub required: usize,
}

/// The fixed coordinate foliation: time covector `n_a = (1, 0, ..., 0)`
/// and time vector `t^a = (1, 0, ..., 0)`, satisfying `t . n = 1`.
#[derive(Debug, Clone)]
pub struct Foliation {
    n_cov: Array1<f64>,
    t_vec: Array1<f64>,
}

impl Foliation {
    pub fn new(n_space: usize) -> Self {
        let mut n_cov = Array1::zeros(n_space + 1);
        n_cov[0] = 1.0;
        let t_vec = n_cov.clone();
        Self { n_cov, t_vec }
    }

    pub fn normal(&self) -> ArrayView1<'_, f64> {
        self.n_cov.view()
    }

    pub fn time_vector(&self) -> ArrayView1<'_, f64> {
        self.t_vec.view()
    }

    /// Spatial projector `eta^a_b = delta^a_b - t^a n_b`.
    pub fn projector(&self) -> Mat {
        let n = self.n_cov.len();
        let mut eta = Mat::eye(n);
        for a in 0..n {
            for b in 0..n {
                eta[(a, b)] -= self.t_vec[a] * self.n_cov[b];
            }
        }
        eta
    }
}

/// A spatial wave covector `k_a = (0, k_i)`, orthogonal to the time vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveCovector {
    components: Array1<f64>,
    normalized: bool,
}

impl WaveCovector {
    /// Builds from spatial components; rejects the zero covector and
    /// non-finite entries.
    pub fn from_spatial(spatial: &[f64]) -> Result<Self> {
        if spatial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry("wave covector".into()));
        }
        let norm = spatial.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroWaveVector);
        }
        let mut components = Array1::zeros(spatial.len() + 1);
        for (i, &v) in spatial.iter().enumerate() {
            components[i + 1] = v;
        }
        Ok(Self {
            components,
            normalized: (norm - 1.0).abs() < 1e-14,
        })
    }

    /// Rescales the spatial part to Euclidean unit norm.
    pub fn normalized(&self) -> Self {
        let norm = self.spatial_norm();
        let mut components = self.components.clone();
        components.mapv_inplace(|v| v / norm);
        Self {
            components,
            normalized: true,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn spatial_norm(&self) -> f64 {
        self.components.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Full space-time components `(0, k_1, ..., k_n)`.
    pub fn components(&self) -> ArrayView1<'_, f64> {
        self.components.view()
    }

    pub fn spatial(&self) -> ArrayView1<'_, f64> {
        self.components.slice(ndarray::s![1..])
    }

    /// The line `l_a(lambda) = -lambda n_a + k_a`.
    pub fn line(&self, lambda: f64) -> Array1<f64> {
        let mut l = self.components.clone();
        l[0] = -lambda;
        l
    }

    pub fn n_space(&self) -> usize {
        self.components.len() - 1
    }
}

/// Positive-definite Hermitian form on the unknown fiber, used to project
/// left kernels back into the unknown space for the canonical-angle test.
#[derive(Debug, Clone)]
pub struct GramForm {
    g: Mat,
}

impl GramForm {
    pub fn identity(u: usize) -> Self {
        Self { g: Mat::eye(u) }
    }

    /// Validates symmetry (to 1e-12 relative) and positive definiteness.
    pub fn new(g: Mat) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "Gram form must be square, got {:?}",
                g.dim()
            )));
        }
        let scale = linalg::fro_norm(&g).max(1.0);
        let asym = (&g - &g.t()).iter().map(|v| v.abs()).fold(0.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::DimensionMismatch(format!(
                "Gram form is not symmetric (residual {asym:.3e})"
            )));
        }
        let (vals, _) = linalg::eig(&g)?;
        if vals.iter().any(|v| v.re <= 0.0) {
            return Err(Error::DimensionMismatch(
                "Gram form is not positive definite".into(),
            ));
        }
        Ok(Self { g })
    }

    pub fn matrix(&self) -> &Mat {
        &self.g
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }
}
