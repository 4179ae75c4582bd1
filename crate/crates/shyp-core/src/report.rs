//! Analysis orchestration and self-describing reports.
//!
//! A report carries every input that produced it (seed, sample count,
//! tolerances) so that identical invocations yield byte-identical output.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geroch::{self, GerochBasis};
use crate::linalg::Mat;
use crate::pencil::{
    canonical_angles, generalized_eigens, kernel_dims, kronecker_structure, sh_sweep, EigenAngles,
    KernelDims, KroneckerStructure, Sampling, SweepReport,
};
use crate::reduction::{base_reduction, ReductionPair};
use crate::subsidiary::{
    constraint_of_constraints_check, subsidiary_kronecker, subsidiary_sh_sweep, subsidiary_symbol,
    verify_intertwining, SubsidiarySweep, VelocityPolicy,
};
use crate::tensor::{Foliation, GramForm, PrincipalSymbol, RankCheck, WaveCovector};

/// Options driving a full analysis.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub gram: Option<Mat>,
    pub velocity_policy: VelocityPolicy,
    pub jobs: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            tol: crate::linalg::DEFAULT_TOL,
            gram: None,
            velocity_policy: VelocityPolicy::Default,
            jobs: 1,
        }
    }
}

/// Structural condition checks performed before the spectral sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionChecks {
    pub time_slab_rank: RankCheck,
    pub no_algebraic_constraints: bool,
    pub geroch_dimension: usize,
    pub constraint_fields: usize,
    pub extra_fields: usize,
    pub condition1_rank: usize,
}

/// Aggregate verdicts of a full analysis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Verdicts {
    pub hyperbolic: bool,
    pub strongly_hyperbolic: bool,
    pub subsidiary_strongly_hyperbolic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemMeta {
    pub name: String,
    pub n_space: usize,
    pub equations: usize,
    pub unknowns: usize,
    pub constraints: usize,
}

/// Dense arrays dumped into reports as nested decimal arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisDump {
    pub c_fields: Vec<Vec<Vec<f64>>>,
    pub m_fields: Vec<Vec<Vec<f64>>>,
    pub m_projected: Vec<Vec<Vec<f64>>>,
}

fn dump_fields(fields: &[Mat]) -> Vec<Vec<Vec<f64>>> {
    fields
        .iter()
        .map(|f| {
            (0..f.nrows())
                .map(|i| f.row(i).to_vec())
                .collect::<Vec<_>>()
        })
        .collect()
}

fn dump_matrix(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionDump {
    pub h: Vec<Vec<f64>>,
    pub h_delta: Vec<Vec<f64>>,
}

/// The full, self-describing analysis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub system: SystemMeta,
    pub seed: u64,
    pub samples: usize,
    pub rank_tolerance: f64,
    pub conditions: ConditionChecks,
    pub geroch_basis: BasisDump,
    pub reduction: ReductionDump,
    pub evolution: SweepReport,
    pub subsidiary: SubsidiarySweep,
    pub verdicts: Verdicts,
}

/// Runs the full pipeline: condition checks, Geroch splitting, base
/// reduction, evolution sweep, subsidiary sweep, verdicts.
pub fn analyze(symbol: &PrincipalSymbol, options: &AnalyzeOptions) -> Result<AnalysisReport> {
    let tol = options.tol;
    let foliation = Foliation::new(symbol.n_space());
    let n0_check = symbol.check_condition_n0(&foliation, tol)?;
    if !n0_check.holds {
        return Err(Error::ConditionN0Failure {
            rank: n0_check.rank,
            required: n0_check.required,
        });
    }
    let no_algebraic = symbol.check_no_algebraic_constraints(tol)?;
    let space = geroch::solve_geroch_space(symbol, tol)?;
    let mut basis = geroch::split_basis(&space, symbol, &foliation, tol)?;
    let pair = base_reduction(symbol, &foliation, &basis)?;
    geroch::project_m(&mut basis, &pair, symbol)?;

    let gram = match &options.gram {
        Some(g) => GramForm::new(g.clone())?,
        None => GramForm::identity(symbol.unknowns()),
    };
    let sampling = Sampling {
        count: options.samples,
        seed: options.seed,
    };
    let evolution = sh_sweep(symbol, &pair, &basis, &gram, sampling, tol, options.jobs)?;
    let subsidiary = subsidiary_sh_sweep(
        symbol,
        &pair,
        &basis,
        &options.velocity_policy,
        sampling,
        tol,
        options.jobs,
    )?;

    let verdicts = Verdicts {
        hyperbolic: evolution.all_real,
        strongly_hyperbolic: evolution.strongly_hyperbolic,
        subsidiary_strongly_hyperbolic: subsidiary.strongly_hyperbolic,
    };
    Ok(AnalysisReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        system: SystemMeta {
            name: symbol.name().to_string(),
            n_space: symbol.n_space(),
            equations: symbol.equations(),
            unknowns: symbol.unknowns(),
            constraints: symbol.constraint_count(),
        },
        seed: options.seed,
        samples: options.samples,
        rank_tolerance: tol,
        conditions: ConditionChecks {
            time_slab_rank: n0_check,
            no_algebraic_constraints: no_algebraic,
            geroch_dimension: space.len(),
            constraint_fields: basis.constraint_count(),
            extra_fields: basis.extra_count(),
            condition1_rank: basis.constraint_count(),
        },
        geroch_basis: BasisDump {
            c_fields: dump_fields(basis.c_fields()),
            m_fields: dump_fields(basis.m_fields()),
            m_projected: dump_fields(basis.m_proj()),
        },
        reduction: ReductionDump {
            h: dump_matrix(pair.h()),
            h_delta: dump_matrix(pair.h_delta()),
        },
        evolution,
        subsidiary,
        verdicts,
    })
}

/// Condition-v summary serialized into single-k records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionVRecord {
    pub satisfied: bool,
    pub s: usize,
    pub spanned: usize,
    pub deficiency_count: usize,
}

/// Deep single-wave-vector record: eigenstructure, kernels, both
/// Kronecker structures, angles, the subsidiary symbol and the residuals
/// of the exact identities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralRecord {
    pub k: Vec<f64>,
    pub kernel_dims: KernelDims,
    pub eigenpairs: Vec<EigenPairRecord>,
    pub inherited: Vec<EigenPairRecord>,
    pub canonical_angles: Vec<EigenAngles>,
    pub evolution_structure: KroneckerStructure,
    pub subsidiary_structure: KroneckerStructure,
    pub subsidiary_zero_rows: usize,
    pub condition_v: ConditionVRecord,
    pub subsidiary_symbol: Vec<Vec<f64>>,
    pub subsidiary_eigenvalues: Vec<(f64, f64)>,
    pub intertwining_residual: f64,
    pub constraint_of_constraints_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPairRecord {
    pub value_re: f64,
    pub value_im: f64,
    pub multiplicity: usize,
    pub algebraic: usize,
}

/// One-wave-vector deep dive through the whole pipeline.
pub fn single_k(
    symbol: &PrincipalSymbol,
    k: &WaveCovector,
    options: &AnalyzeOptions,
) -> Result<SpectralRecord> {
    let tol = options.tol;
    let k = k.normalized();
    let foliation = Foliation::new(symbol.n_space());
    let space = geroch::solve_geroch_space(symbol, tol)?;
    let mut basis = geroch::split_basis(&space, symbol, &foliation, tol)?;
    let pair = base_reduction(symbol, &foliation, &basis)?;
    geroch::project_m(&mut basis, &pair, symbol)?;
    single_k_with(symbol, &basis, &pair, &k, options)
}

/// Same as [`single_k`] but against a caller-supplied basis/reduction
/// (for catalog-named fields).
pub fn single_k_with(
    symbol: &PrincipalSymbol,
    basis: &GerochBasis,
    pair: &ReductionPair,
    k: &WaveCovector,
    options: &AnalyzeOptions,
) -> Result<SpectralRecord> {
    let tol = options.tol;
    let gram = match &options.gram {
        Some(g) => GramForm::new(g.clone())?,
        None => GramForm::identity(symbol.unknowns()),
    };
    let dims = kernel_dims(symbol, basis, k, tol)?;
    let spectrum = generalized_eigens(symbol, pair, basis, k, tol)?;
    let angles = canonical_angles(symbol, pair, basis, &gram, k, tol)?;
    let evo_structure = kronecker_structure(symbol, pair, basis, k, tol)?;
    let sub = subsidiary_kronecker(symbol, pair, basis, k, tol)?;
    let condv = geroch::check_condition_v(basis, symbol, k, tol)?;

    let n_free = Array2::zeros((basis.constraint_count(), basis.extra_count()));
    let sub_sym = subsidiary_symbol(basis, pair, &n_free, k)?;
    let (b_vals, _) = crate::linalg::eig(&sub_sym.b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let lambdas: Vec<f64> = (0..32).map(|_| rng.random_range(-3.0..3.0)).collect();
    let intertwining = verify_intertwining(symbol, pair, basis, &n_free, k, &lambdas)?;
    let cc_residual = constraint_of_constraints_check(symbol, basis, k);

    Ok(SpectralRecord {
        k: k.spatial().to_vec(),
        kernel_dims: dims,
        eigenpairs: spectrum
            .physical
            .iter()
            .map(|r| EigenPairRecord {
                value_re: r.value,
                value_im: 0.0,
                multiplicity: r.multiplicity,
                algebraic: r.algebraic,
            })
            .collect(),
        inherited: spectrum
            .inherited
            .iter()
            .map(|r| EigenPairRecord {
                value_re: r.value.re,
                value_im: r.value.im,
                multiplicity: 0,
                algebraic: r.algebraic,
            })
            .collect(),
        canonical_angles: angles,
        evolution_structure: evo_structure,
        subsidiary_structure: sub.structure,
        subsidiary_zero_rows: sub.y,
        condition_v: ConditionVRecord {
            satisfied: condv.satisfied,
            s: condv.s,
            spanned: condv.spanned,
            deficiency_count: condv.deficiency.len(),
        },
        subsidiary_symbol: dump_matrix(&sub_sym.b),
        subsidiary_eigenvalues: b_vals.iter().map(|v| (v.re, v.im)).collect(),
        intertwining_residual: intertwining,
        constraint_of_constraints_residual: cc_residual,
    })
}

fn fmt_structure(s: &KroneckerStructure) -> String {
    let mut parts: Vec<String> = s
        .jordan
        .iter()
        .map(|(v, n)| format!("{n} x J1({v:+.6})"))
        .collect();
    for (m, n) in &s.l_blocks {
        parts.push(format!("{n} x L{m}^T"));
    }
    if s.zero_rows > 0 {
        parts.push(format!("{} x L0^T", s.zero_rows));
    }
    if s.unresolved_columns > 0 {
        parts.push(format!("{} unresolved columns", s.unresolved_columns));
    }
    if parts.is_empty() {
        parts.push("empty".to_string());
    }
    format!(
        "{} [{}]",
        parts.join(", "),
        if s.is_certified() { "certified" } else { "partial" }
    )
}

/// Human-readable rendering of a report.
pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push(&mut out, format!("system: {}", report.system.name));
    push(
        &mut out,
        format!(
            "  n_space = {}, equations = {}, unknowns = {}, constraints = {}",
            report.system.n_space,
            report.system.equations,
            report.system.unknowns,
            report.system.constraints
        ),
    );
    push(
        &mut out,
        format!(
            "  samples = {}, seed = {}, rank tolerance = {:e}",
            report.samples, report.seed, report.rank_tolerance
        ),
    );
    push(
        &mut out,
        format!(
            "conditions: time-slab rank {}/{} ({}), no algebraic constraints: {}",
            report.conditions.time_slab_rank.rank,
            report.conditions.time_slab_rank.required,
            if report.conditions.time_slab_rank.holds {
                "ok"
            } else {
                "FAIL"
            },
            report.conditions.no_algebraic_constraints
        ),
    );
    push(
        &mut out,
        format!(
            "geroch: space dimension {}, constraint fields {}, extra fields {}",
            report.conditions.geroch_dimension,
            report.conditions.constraint_fields,
            report.conditions.extra_fields
        ),
    );
    push(
        &mut out,
        format!(
            "evolution sweep: all real = {}, all certified = {}, kernel dims constant = {}, min cosine = {:.6}",
            report.evolution.all_real,
            report.evolution.all_certified,
            report.evolution.kernel_dims_constant,
            report.evolution.min_cosine
        ),
    );
    if let Some(first) = report.evolution.records.first() {
        push(
            &mut out,
            format!(
                "  first sample: (d, r, s) = ({}, {}, {})",
                first.kernel_dims.d, first.kernel_dims.r, first.kernel_dims.s
            ),
        );
    }
    push(
        &mut out,
        format!(
            "subsidiary sweep: all real = {}, all diagonalizable = {}, condition v everywhere = {}",
            report.subsidiary.all_real,
            report.subsidiary.all_diagonalizable,
            report.subsidiary.condition_v_everywhere
        ),
    );
    push(
        &mut out,
        format!(
            "verdicts: hyperbolic = {}, strongly hyperbolic = {}, subsidiary strongly hyperbolic = {}",
            report.verdicts.hyperbolic,
            report.verdicts.strongly_hyperbolic,
            report.verdicts.subsidiary_strongly_hyperbolic
        ),
    );
    out
}

/// Human-readable rendering of a single-k record.
pub fn render_spectral_text(record: &SpectralRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("k = {:?}\n", record.k));
    out.push_str(&format!(
        "kernel dims: (d, r, s) = ({}, {}, {})\n",
        record.kernel_dims.d, record.kernel_dims.r, record.kernel_dims.s
    ));
    out.push_str("generalized eigenvalues:\n");
    for p in &record.eigenpairs {
        out.push_str(&format!(
            "  lambda = {:+.8} (multiplicity {})\n",
            p.value_re, p.multiplicity
        ));
    }
    out.push_str("inherited transport values:\n");
    for p in &record.inherited {
        out.push_str(&format!(
            "  pi = {:+.8}{:+.3e}i (algebraic {})\n",
            p.value_re, p.value_im, p.algebraic
        ));
    }
    out.push_str(&format!(
        "evolution structure: {}\n",
        fmt_structure(&record.evolution_structure)
    ));
    out.push_str(&format!(
        "subsidiary structure: {}\n",
        fmt_structure(&record.subsidiary_structure)
    ));
    out.push_str(&format!(
        "condition v: {} (s = {}, spanned = {})\n",
        record.condition_v.satisfied, record.condition_v.s, record.condition_v.spanned
    ));
    for a in &record.canonical_angles {
        out.push_str(&format!(
            "angles at {:+.6}: cosines {:?}\n",
            a.value, a.cosines
        ));
    }
    out.push_str(&format!(
        "intertwining residual: {:.3e}\n",
        record.intertwining_residual
    ));
    out.push_str(&format!(
        "constraint-of-constraints residual: {:.3e}\n",
        record.constraint_of_constraints_residual
    ));
    out
}
