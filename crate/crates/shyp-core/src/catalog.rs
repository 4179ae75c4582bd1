//! Built-in systems: flat-space Maxwell, the first-order wave equation,
//! and a weakly hyperbolic negative control.
//!
//! Both physical systems are generated for a constant lapse `N` and a
//! constant shift `beta` on a flat spatial metric. The geometric objects
//! are then constant tensors: the time covector `n_a = (1, 0, 0, 0)`, the
//! unit normal `ntil_a = -N n_a`, its vector version
//! `mtil^a = (1/N)(1, -beta)`, the projector `eta^a_b = delta - p^a n_b`
//! with `p = (1, -beta)`, and the volume form with `sqrt(-g) = N`.
//!
//! Index flattening: Maxwell unknowns are ordered `(E_1..E_3, B_1..B_3)`
//! and its equations `(Q1^0..Q1^3, Q2^0..Q2^3)`. Wave unknowns are
//! `(u0, phi, u_1..u_3)` and its equations `(E, E_0..E_3, E_{ab})` with
//! the antisymmetric pairs enumerated `(0,1), (0,2), (0,3), (1,2), (1,3),
//! (2,3)`; coefficients contracting an antisymmetric pair index carry the
//! antisymmetrized sum over both orderings.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::geroch::GerochBasis;
use crate::linalg::Mat;
use crate::pencil::KernelDims;
use crate::reduction::ReductionPair;
use crate::tensor::{PrincipalSymbol, WaveCovector};

/// Spacetime pairs `(a < b)` indexing antisymmetric equation rows.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
/// Spatial pairs indexing the wave system's second constraint block.
const SPATIAL_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

/// A generated system together with its named fields and oracle values.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub symbol: PrincipalSymbol,
    /// The paper-exact constraint and extra fields, when named.
    pub named_c: Vec<Mat>,
    pub named_m: Vec<Mat>,
    /// The paper-exact reduction, when named (u x e).
    pub named_h: Option<Mat>,
    pub expected: Expected,
}

impl CatalogEntry {
    /// Assembles the named Geroch basis, validated against the symbol.
    pub fn named_basis(&self, tol: f64) -> Result<Option<GerochBasis>> {
        if self.named_c.is_empty() {
            return Ok(None);
        }
        GerochBasis::from_named(
            self.named_c.clone(),
            self.named_m.clone(),
            &self.symbol,
            tol,
        )
        .map(Some)
    }

    /// Assembles the named reduction pair against a Geroch basis.
    pub fn named_pair(&self, geroch: &GerochBasis) -> Result<Option<ReductionPair>> {
        match &self.named_h {
            Some(h) => ReductionPair::from_h(h.clone(), &self.symbol, geroch).map(Some),
            None => Ok(None),
        }
    }
}

/// Closed-form oracle values parameterized by lapse and shift.
#[derive(Debug, Clone)]
pub struct Expected {
    pub lapse: f64,
    pub shift: [f64; 3],
    pub kernel_dims: Option<KernelDims>,
    /// Count of extra Geroch fields.
    pub extra_fields: usize,
    /// Multiplicity of each physical speed `+|k|` and `-|k|` branch.
    pub physical_multiplicity: usize,
    /// Multiplicity of the inherited transport value `-beta . k`.
    pub transport_multiplicity: usize,
}

impl Expected {
    /// The two physical generalized eigenvalues `+-N sqrt(k.k) - beta.k`
    /// for a (not necessarily unit) wave covector.
    pub fn physical_speeds(&self, k: &WaveCovector) -> (f64, f64) {
        let norm = k.spatial_norm();
        let bk = self.beta_dot(k);
        (self.lapse * norm - bk, -self.lapse * norm - bk)
    }

    /// The inherited transport eigenvalue `-beta . k`.
    pub fn transport_speed(&self, k: &WaveCovector) -> f64 {
        -self.beta_dot(k)
    }

    fn beta_dot(&self, k: &WaveCovector) -> f64 {
        self.shift
            .iter()
            .zip(k.spatial().iter())
            .map(|(b, ki)| b * ki)
            .sum()
    }
}

struct Frame {
    lapse: f64,
    /// `g_{ab}`
    metric: [[f64; 4]; 4],
    /// `ntil_a = -N n_a`
    ntil: [f64; 4],
    /// `mtil^a = (1/N)(1, -beta)`
    mtil: [f64; 4],
    /// `eta^a_b = delta^a_b - p^a n_b`
    eta: [[f64; 4]; 4],
}

impl Frame {
    fn new(lapse: f64, shift: [f64; 3]) -> Result<Self> {
        if lapse <= 0.0 || !lapse.is_finite() {
            return Err(Error::InvalidLapse(lapse));
        }
        if shift.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFiniteEntry("shift vector".into()));
        }
        let mut metric = [[0.0; 4]; 4];
        let b2: f64 = shift.iter().map(|b| b * b).sum();
        metric[0][0] = -lapse * lapse + b2;
        for i in 0..3 {
            metric[0][i + 1] = shift[i];
            metric[i + 1][0] = shift[i];
            metric[i + 1][i + 1] = 1.0;
        }
        let ntil = [-lapse, 0.0, 0.0, 0.0];
        let mut mtil = [1.0 / lapse, 0.0, 0.0, 0.0];
        for i in 0..3 {
            mtil[i + 1] = -shift[i] / lapse;
        }
        // p^a = N mtil^a
        let mut eta = [[0.0; 4]; 4];
        for (a, row) in eta.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let delta = if a == b { 1.0 } else { 0.0 };
                let p_a = lapse * mtil[a];
                let n_b = if b == 0 { 1.0 } else { 0.0 };
                *v = delta - p_a * n_b;
            }
        }
        Ok(Self {
            lapse,
            metric,
            ntil,
            mtil,
            eta,
        })
    }

    /// Levi-Civita tensor with all indices up,
    /// `eps^{abcd} = -(1/N) [abcd]`.
    fn eps_up(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        -perm4(a, b, c, d) / self.lapse
    }

    /// `eps^{qsd}_{.b} ntil_d` with the last index lowered by the metric.
    fn eps_nt(&self, q: usize, s: usize, b: usize) -> f64 {
        let mut acc = 0.0;
        for d in 0..4 {
            if self.ntil[d] == 0.0 {
                continue;
            }
            for c in 0..4 {
                acc += self.eps_up(q, s, d, c) * self.metric[c][b] * self.ntil[d];
            }
        }
        acc
    }

    /// Upper spatial projector `eta^{qw} = g^{qw} + mtil^q mtil^w`,
    /// which reduces to `delta^{qw}` on spatial slots.
    fn eta_upper_spatial(&self, q: usize, w_spatial: usize) -> f64 {
        // closed form: zero when q = 0, Kronecker delta otherwise
        if q == 0 {
            0.0
        } else if q == w_spatial {
            1.0
        } else {
            0.0
        }
    }
}

fn perm4(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let idx = [a, b, c, d];
    let mut sign = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            match idx[i].cmp(&idx[j]) {
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Equal => return 0.0,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Maxwell electrodynamics in first order: 8 equations `(Q1^s, Q2^s)` in
/// the 6 unknowns `(E^b, B^b)`, with the two standard divergence
/// constraints and no extra fields.
pub fn maxwell(lapse: f64, shift: [f64; 3]) -> Result<CatalogEntry> {
    let f = Frame::new(lapse, shift)?;
    let n = f.lapse;
    let mut coeffs = Array3::zeros((4, 8, 6));
    for q in 0..4 {
        for s in 0..4 {
            for b in 0..3 {
                let bcol = b + 1;
                let d_e = delta(bcol, s) * f.mtil[q] - delta(bcol, q) * f.mtil[s];
                let eps = f.eps_nt(q, s, bcol);
                coeffs[(q, s, b)] = d_e; // Q1 row, E column
                coeffs[(q, s, 3 + b)] = eps; // Q1 row, B column
                coeffs[(q, 4 + s, b)] = eps; // Q2 row, E column
                coeffs[(q, 4 + s, 3 + b)] = -d_e; // Q2 row, B column
            }
        }
    }
    let symbol = PrincipalSymbol::new("maxwell", 3, 8, 6, coeffs)?;

    // C fields: -N delta_s^z on the Q1 block, +N delta_s^z on Q2.
    let mut c1 = Mat::zeros((4, 8));
    let mut c2 = Mat::zeros((4, 8));
    for z in 0..4 {
        c1[(z, z)] = -n;
        c2[(z, 4 + z)] = n;
    }

    // Reduction: N eta^l_s on Q1, -N eta^l_s on Q2.
    let mut h = Mat::zeros((6, 8));
    for l in 0..3 {
        for s in 0..4 {
            h[(l, s)] = n * f.eta[l + 1][s];
            h[(3 + l, 4 + s)] = -n * f.eta[l + 1][s];
        }
    }

    Ok(CatalogEntry {
        symbol,
        named_c: vec![c1, c2],
        named_m: Vec::new(),
        named_h: Some(h),
        expected: Expected {
            lapse,
            shift,
            kernel_dims: Some(KernelDims { d: 4, r: 2, s: 0 }),
            extra_fields: 0,
            physical_multiplicity: 2,
            transport_multiplicity: 2,
        },
    })
}

/// First-order wave equation: 11 equations `(E, E_c, E_{ab})` in the 5
/// unknowns `(u0, phi, u_w)`, with 6 constraint fields and 4 extra
/// fields coming from the first-order reduction.
pub fn wave(lapse: f64, shift: [f64; 3]) -> Result<CatalogEntry> {
    let f = Frame::new(lapse, shift)?;
    let n = f.lapse;
    let mut coeffs = Array3::zeros((4, 11, 5));
    for q in 0..4 {
        // E row
        coeffs[(q, 0, 0)] = -f.mtil[q];
        for w in 0..3 {
            coeffs[(q, 0, 2 + w)] = f.eta_upper_spatial(q, w + 1);
        }
        // E_c rows
        for c in 0..4 {
            coeffs[(q, 1 + c, 1)] = delta(q, c);
        }
        // E_{ac} rows over pairs a < c
        for (idx, &(a, c)) in PAIRS.iter().enumerate() {
            coeffs[(q, 5 + idx, 0)] =
                -(f.ntil[c] * f.eta[q][a] - f.ntil[a] * f.eta[q][c]) / 2.0;
            for w in 0..3 {
                coeffs[(q, 5 + idx, 2 + w)] =
                    -(delta(q, c) * f.eta[w + 1][a] - delta(q, a) * f.eta[w + 1][c]) / 2.0;
            }
        }
    }
    let symbol = PrincipalSymbol::new("wave", 3, 11, 5, coeffs)?;

    // C block 1: rows indexed by r = 1..3 over the E_g equations,
    // 2N mtil^{[z} eta_r^{g]}.
    let mut named_c = Vec::with_capacity(6);
    for r in 1..4 {
        let mut field = Mat::zeros((4, 11));
        for z in 0..4 {
            for g in 0..4 {
                field[(z, 1 + g)] = n * (f.mtil[z] * f.eta[g][r] - f.mtil[g] * f.eta[z][r]);
            }
        }
        named_c.push(field);
    }
    // C block 2: rows indexed by spatial pairs over the E_{ab} equations,
    // 3N mtil^{[z} eta_g^a eta_h^{b]} (totally antisymmetric in z, a, b);
    // a pair row carries the sum over both orderings.
    for &(g, h) in &SPATIAL_PAIRS {
        let mut field = Mat::zeros((4, 11));
        for z in 0..4 {
            for (idx, &(a, b)) in PAIRS.iter().enumerate() {
                field[(z, 5 + idx)] = 2.0 * antisym3(&f, z, a, b, g, h) * n;
            }
        }
        named_c.push(field);
    }

    // M block 1: rows indexed by spatial pairs over the E_g equations,
    // eta_{[s}^z eta_{r]}^g.
    let mut named_m = Vec::with_capacity(4);
    for &(s, r) in &SPATIAL_PAIRS {
        let mut field = Mat::zeros((4, 11));
        for z in 0..4 {
            for g in 0..4 {
                field[(z, 1 + g)] =
                    (f.eta[z][s] * f.eta[g][r] - f.eta[z][r] * f.eta[g][s]) / 2.0;
            }
        }
        named_m.push(field);
    }
    // M block 2: one row over the E_{ab} equations, ntil_d eps^{dzab}.
    {
        let mut field = Mat::zeros((4, 11));
        for z in 0..4 {
            for (idx, &(a, b)) in PAIRS.iter().enumerate() {
                let mut acc = 0.0;
                for d in 0..4 {
                    if f.ntil[d] != 0.0 {
                        acc += f.ntil[d] * f.eps_up(d, z, a, b);
                    }
                }
                field[(z, 5 + idx)] = 2.0 * acc;
            }
        }
        named_m.push(field);
    }

    // Reduction: diag(-N, N mtil^c, -2N eta_q^{[a} mtil^{c]}).
    let mut h = Mat::zeros((5, 11));
    h[(0, 0)] = -n;
    for c in 0..4 {
        h[(1, 1 + c)] = n * f.mtil[c];
    }
    for qrow in 0..3 {
        for (idx, &(a, c)) in PAIRS.iter().enumerate() {
            h[(2 + qrow, 5 + idx)] =
                -2.0 * n * (f.eta[a][qrow + 1] * f.mtil[c] - f.eta[c][qrow + 1] * f.mtil[a]);
        }
    }

    Ok(CatalogEntry {
        symbol,
        named_c,
        named_m,
        named_h: Some(h),
        expected: Expected {
            lapse,
            shift,
            kernel_dims: Some(KernelDims { d: 2, r: 3, s: 3 }),
            extra_fields: 4,
            physical_multiplicity: 1,
            transport_multiplicity: 3,
        },
    })
}

/// `3 mtil^{[z} eta_g^a eta_h^{b]}`: antisymmetrization over `(z, a, b)`
/// normalized so that three times the antisymmetric part is half the
/// signed permutation sum.
fn antisym3(f: &Frame, z: usize, a: usize, b: usize, g: usize, h: usize) -> f64 {
    let idx = [z, a, b];
    let perms: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([2, 1, 0], -1.0),
    ];
    let mut acc = 0.0;
    for (p, sign) in perms {
        acc += sign * f.mtil[idx[p[0]]] * f.eta[idx[p[1]]][g] * f.eta[idx[p[2]]][h];
    }
    acc / 2.0
}

/// Negative control: a 2-equation, 2-unknown system over one spatial
/// direction whose evolution symbol is a defective Jordan block for every
/// unit wave covector. No constraints, not strongly hyperbolic.
pub fn toy_weak() -> CatalogEntry {
    let mut coeffs = Array3::zeros((2, 2, 2));
    coeffs[(0, 0, 0)] = 1.0;
    coeffs[(0, 1, 1)] = 1.0;
    coeffs[(1, 0, 1)] = 1.0;
    let symbol = PrincipalSymbol::new("toy_weak", 1, 2, 2, coeffs).expect("static shape");
    CatalogEntry {
        symbol,
        named_c: Vec::new(),
        named_m: Vec::new(),
        named_h: None,
        expected: Expected {
            lapse: 1.0,
            shift: [0.0; 3],
            kernel_dims: Some(KernelDims { d: 2, r: 0, s: 0 }),
            extra_fields: 0,
            physical_multiplicity: 0,
            transport_multiplicity: 0,
        },
    }
}

/// Looks up a catalog generator by name.
pub fn by_name(name: &str, lapse: f64, shift: [f64; 3]) -> Result<CatalogEntry> {
    match name {
        "maxwell" => maxwell(lapse, shift),
        "wave" => wave(lapse, shift),
        "toy_weak" => Ok(toy_weak()),
        other => Err(Error::UnknownCatalogName(other.to_string())),
    }
}
