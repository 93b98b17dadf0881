//! Batch front-end: named case studies, the acceptance suite and moduli-grid export.

use crate::endo_space::{isotypic_decompose, normal_decomposition, EndoSpace, IsotypicComponent};
use crate::grassmann_geometry::{
    default_options, evaluate, fit_laplace_eigenvalue, calibrate_metric, point_data, verify_spec_with, FdConfig,
    GeometryReport,
};
use crate::homogeneous_bundle::{check_gauge_condition, eigenspace, standard_map, EigenspaceData, MapSpec, Mode};
use crate::linalg::{self, c, CMat};
use crate::moduli::{
    boundary_analysis, centralizer_action, compare_gauge, constraint_space, image_quotient, map_from_c, membership,
    ImageQuotient, Membership, ModuliBody,
};
use crate::rep_su2::haar_samples;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA: &str = "dcw-report/1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown case '{0}' (see `dcw list`)")]
    UnknownCase(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Pipeline(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub citation: &'static str,
    pub k: i64,
    pub l: usize,
    pub mode: Mode,
}

const CASES: [CaseInfo; 6] = [
    CaseInfo {
        id: "cp1-cpn-rigidity",
        description: "complex projective targets: the moduli space is a point",
        citation: "Theorems BanOhn/Calr",
        k: 3,
        l: 0,
        mode: Mode::Complex,
    },
    CaseInfo {
        id: "quadric-deg1",
        description: "degree-one maps into the real quadric: only the standard map",
        citation: "Theorem mod1",
        k: 1,
        l: 0,
        mode: Mode::Real,
    },
    CaseInfo {
        id: "quadric-deg2",
        description: "degree-two maps into the real quadric: moduli is the unit disk",
        citation: "Theorem mod",
        k: 2,
        l: 0,
        mode: Mode::Real,
    },
    CaseInfo {
        id: "quadric-deg2-boundary",
        description: "boundary of the degree-two disk: real standard maps into Gr1(R^3)",
        citation: "Theorem mod",
        k: 2,
        l: 0,
        mode: Mode::Real,
    },
    CaseInfo {
        id: "quadric-explore",
        description: "higher-degree quadric moduli, computed and reported without reference values",
        citation: "Theorem GenDW",
        k: 3,
        l: 0,
        mode: Mode::Real,
    },
    CaseInfo {
        id: "standard-verify",
        description: "pointwise geometry of a standard map for any (k, l, mode)",
        citation: "Lemma stharm",
        k: 2,
        l: 0,
        mode: Mode::Complex,
    },
];

pub fn list_cases() -> &'static [CaseInfo] {
    &CASES
}

pub fn format_case_list() -> String {
    CASES.iter().map(|c| format!("{:<24}{}  [{}]\n", c.id, c.description, c.citation)).collect()
}

pub fn find_case(id: &str) -> Result<&'static CaseInfo, CliError> {
    CASES.iter().find(|c| c.id == id).ok_or_else(|| CliError::UnknownCase(id.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseConfig {
    pub case_id: String,
    pub k: i64,
    pub l: usize,
    pub mode: Mode,
    pub seed: u64,
    pub n_samples: usize,
    pub fd_step: f64,
    #[serde(skip)]
    pub out_path: Option<PathBuf>,
}

impl CaseConfig {
    pub fn for_case(id: &str) -> Result<Self, CliError> {
        let info = find_case(id)?;
        Ok(CaseConfig {
            case_id: info.id.to_string(),
            k: info.k,
            l: info.l,
            mode: info.mode,
            seed: 42,
            n_samples: 64,
            fd_step: 1e-3,
            out_path: None,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        find_case(&self.case_id)?;
        if self.n_samples < 1 {
            return Err(CliError::InvalidConfig("n_samples must be at least 1".into()));
        }
        if !(self.fd_step > 1e-6 && self.fd_step < 1e-1) {
            return Err(CliError::InvalidConfig(format!("fd_step {} outside (1e-6, 1e-1)", self.fd_step)));
        }
        if self.k == 0 {
            return Err(CliError::InvalidConfig("degree k must be nonzero".into()));
        }
        Ok(())
    }

    fn fd(&self) -> FdConfig {
        FdConfig::with_step(self.fd_step)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub item: String,
    pub computed: Value,
    pub expected: Value,
    pub tolerance: f64,
    pub citation: String,
    pub pass: bool,
}

impl Verdict {
    fn exact<T: Serialize + PartialEq>(item: &str, computed: T, expected: T, citation: &str) -> Self {
        let pass = computed == expected;
        Verdict { item: item.into(), computed: json!(computed), expected: json!(expected), tolerance: 0.0, citation: citation.into(), pass }
    }

    fn bound(item: &str, residual: f64, tolerance: f64, citation: &str) -> Self {
        Verdict {
            item: item.into(),
            computed: json!(residual),
            expected: json!(0.0),
            tolerance,
            citation: citation.into(),
            pass: residual.is_finite() && residual <= tolerance,
        }
    }

    fn near(item: &str, computed: f64, expected: f64, tolerance: f64, citation: &str) -> Self {
        Verdict {
            item: item.into(),
            computed: json!(computed),
            expected: json!(expected),
            tolerance,
            citation: citation.into(),
            pass: (computed - expected).abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub schema: &'static str,
    pub case_id: String,
    pub config: CaseConfig,
    pub computed: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub errors: Vec<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl CaseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn geometry_citation(name: &str) -> &'static str {
    match name {
        "projection" => "projection model of the Grassmannian",
        "gauge_frame" => "Theorem GGenDW",
        "condition_iii" => "Cor. Holsuftf",
        "trace_t2" => "Lemma traceT",
        "takahashi" | "harmonicity" | "eh_condition" => "Lemma stharm",
        "nonpositivity" => "mean curvature operator is non-positive",
        "energy_identity" => "trace A = -e(f)",
        "hk_symmetry" => "Lemma sksymHK",
        "gauss_codazzi" => "Gauss-Codazzi equation",
        "isometry_degree" => "Lemma quadstan",
        _ => "pointwise identity",
    }
}

fn geometry_verdicts(label: &str, rep: &GeometryReport, out: &mut Vec<Verdict>) {
    for (name, r) in &rep.residuals {
        let tol = rep.tolerances.get(name).copied().unwrap_or(f64::INFINITY);
        out.push(Verdict::bound(&format!("{label}.{name}"), *r, tol, geometry_citation(name)));
    }
    out.push(Verdict::exact(&format!("{label}.errors"), rep.errors.len(), 0, "map is regular at every sample"));
}

fn geometry_json(rep: &GeometryReport) -> Value {
    json!({ "residuals": rep.residuals, "measured": rep.measured, "mu": rep.mu, "kappa": rep.calibration_constant, "samples": rep.sample_count })
}

fn verify(spec: &MapSpec, cfg: &CaseConfig) -> Result<GeometryReport, String> {
    let opts = default_options(spec, cfg.fd()).map_err(|e| e.to_string())?;
    Ok(verify_spec_with(spec, cfg.seed, cfg.n_samples, &opts))
}

fn isotypic_table(ed: &EigenspaceData) -> Result<Vec<IsotypicComponent>, String> {
    let space = EndoSpace::new(ed.mode(), ed.dim());
    isotypic_decompose(&space.basis, &ed.generators).map_err(|e| e.to_string())
}

fn table_summary(t: &[IsotypicComponent]) -> Vec<(usize, usize)> {
    t.iter().map(|c| (c.dim, c.multiplicity)).collect()
}

/// Agreement of the membership test with `a² + b² < 1` on a square grid; points
/// within `margin` of the unit circle are skipped.
pub fn disk_grid_misclassifications(body: &ModuliBody, step: f64, margin: f64) -> Result<(usize, usize), String> {
    let n = (2.4 / step).round() as usize + 1;
    let counts: Vec<(usize, usize)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let a = -1.2 + (idx / n) as f64 * step;
            let b = -1.2 + (idx % n) as f64 * step;
            let r2 = a * a + b * b;
            if (r2 - 1.0).abs() <= margin {
                return Ok((0, 0));
            }
            let (class, _) = membership(body, &[a, b]).map_err(|e| e.to_string())?;
            Ok((1, usize::from((class == Membership::Interior) != (r2 < 1.0))))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(counts.iter().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1)))
}

fn centralizer_error(body: &ModuliBody, thetas: &[f64], coords: [f64; 2]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for &theta in thetas {
        let out = centralizer_action(body, theta, &coords).map_err(|e| e.to_string())?;
        let (ct, st) = ((-2.0 * theta).cos(), (-2.0 * theta).sin());
        let expect = [ct * coords[0] - st * coords[1], st * coords[0] + ct * coords[1]];
        worst = worst.max((out[0] - expect[0]).abs()).max((out[1] - expect[1]).abs());
    }
    Ok(worst)
}

/// Pairwise gauge comparison of the quotient representatives; returns the
/// smallest operator gap between distinct classes.
fn representative_separation(body: &ModuliBody) -> Result<(usize, f64), String> {
    let reps = match image_quotient(body).map_err(|e| e.to_string())? {
        ImageQuotient::Interval { representatives, .. } => representatives,
        ImageQuotient::Point => return Ok((1, f64::INFINITY)),
    };
    let specs: Vec<MapSpec> = reps.iter().map(|r| map_from_c(body, r)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut inequivalent = 0;
    let mut gap = f64::INFINITY;
    for i in 0..specs.len() {
        for j in 0..i {
            let cmp = compare_gauge(&specs[i], &specs[j], 1e-9);
            inequivalent += usize::from(!cmp.equivalent);
            gap = gap.min(cmp.operator_gap.max(cmp.range_gap));
        }
    }
    Ok((inequivalent, gap))
}

/// Largest distance of the boundary map's projections from the invariant real form.
fn real_form_residual(bp: &crate::moduli::BoundaryPoint, seed: u64, n: usize) -> Result<f64, String> {
    let real_form = bp.real_form.as_ref().ok_or("boundary element is not an involution")?;
    let pr = linalg::projector(real_form, bp.c.nrows());
    let mut worst: f64 = 0.0;
    for g in haar_samples(seed, n) {
        let p = evaluate(&bp.spec, &g).map_err(|e| e.to_string())?.p_q;
        worst = worst.max((&pr * &p - &p).camax());
    }
    Ok(worst)
}

fn boundary_angle_kernels(body: &ModuliBody, count: usize) -> Result<Vec<usize>, String> {
    (0..count)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / count as f64;
            boundary_analysis(body, &[phi.cos(), phi.sin()]).map(|bp| bp.kernel_dim).map_err(|e| e.to_string())
        })
        .collect()
}

fn run_pipeline(cfg: &CaseConfig, computed: &mut BTreeMap<String, Value>, verdicts: &mut Vec<Verdict>) -> Result<(), String> {
    let info = find_case(&cfg.case_id).map_err(|e| e.to_string())?;
    let ed = eigenspace(cfg.k, cfg.l, cfg.mode).map_err(|e| e.to_string())?;
    let (gauge_ok, gauge_defect) = check_gauge_condition(&ed);
    computed.insert("gauge_condition".into(), json!({ "holds": gauge_ok, "defect": gauge_defect }));
    computed.insert("dim_w".into(), json!(ed.dim()));
    let body = constraint_space(&ed).map_err(|e| e.to_string())?;
    computed.insert("moduli_dim".into(), json!(body.d));
    computed.insert("gh_dims".into(), json!([body.gh_dims.0, body.gh_dims.1]));
    let cite = info.citation;

    match info.id {
        "cp1-cpn-rigidity" => {
            verdicts.push(Verdict::exact("moduli_dim", body.d, 0, cite));
            let rep = verify(&standard_map(&ed), cfg)?;
            computed.insert("standard_map".into(), geometry_json(&rep));
            geometry_verdicts("standard_map", &rep, verdicts);
        }
        "quadric-deg1" => {
            let table = isotypic_table(&ed)?;
            computed.insert("isotypic_table".into(), json!(table));
            verdicts.push(Verdict::exact("moduli_dim", body.d, 0, cite));
            verdicts.push(Verdict::exact("gh_closure_dim", body.gh_dims.1, 9, cite));
            verdicts.push(Verdict::exact("isotypic_table", table_summary(&table), vec![(3, 3), (1, 1)], cite));
            let rep = verify(&standard_map(&ed), cfg)?;
            computed.insert("standard_map".into(), geometry_json(&rep));
            geometry_verdicts("standard_map", &rep, verdicts);
        }
        "quadric-deg2" => {
            let table = isotypic_table(&ed)?;
            let total: usize = table.iter().map(|c| c.dim * c.multiplicity).sum();
            computed.insert("isotypic_table".into(), json!(table));
            verdicts.push(Verdict::exact("moduli_dim", body.d, 2, cite));
            verdicts.push(Verdict::exact("isotypic_table", table_summary(&table), vec![(5, 3), (3, 1), (1, 3)], cite));
            verdicts.push(Verdict::exact("isotypic_total", total, 21, cite));
            if body.d == 2 {
                verdicts.push(Verdict::near("sigma_norm", body.coordinate_basis[0].norm(), 6f64.sqrt(), 1e-12, cite));
                let (checked, wrong) = disk_grid_misclassifications(&body, 0.02, 1e-8)?;
                computed.insert("disk_grid".into(), json!({ "step": 0.02, "checked": checked, "misclassified": wrong }));
                verdicts.push(Verdict::exact("disk_grid_misclassified", wrong, 0, cite));
                let err = centralizer_error(&body, &[PI / 6.0, PI / 4.0, PI / 2.0, PI], [0.4, -0.25])?;
                verdicts.push(Verdict::bound("centralizer_rotation", err, 1e-9, "centraliser acts with weight -2"));
                let (inequivalent, gap) = representative_separation(&body)?;
                computed.insert("quotient_min_gap".into(), json!(gap));
                verdicts.push(Verdict::exact("quotient_representatives_inequivalent", inequivalent, 3, "Theorem GGenDW"));
                for coords in [[0.0, 0.0], [0.5, 0.0], [0.0, 0.9]] {
                    let spec = map_from_c(&body, &coords).map_err(|e| e.to_string())?;
                    let label = format!("interior({},{})", coords[0], coords[1]);
                    let rep = verify(&spec, cfg)?;
                    computed.insert(label.clone(), geometry_json(&rep));
                    geometry_verdicts(&label, &rep, verdicts);
                }
            }
        }
        "quadric-deg2-boundary" => {
            verdicts.push(Verdict::exact("moduli_dim", body.d, 2, cite));
            if body.d == 2 {
                let bp = boundary_analysis(&body, &[1.0, 0.0]).map_err(|e| e.to_string())?;
                computed.insert(
                    "boundary".into(),
                    json!({ "kernel_dim": bp.kernel_dim, "reduced_target": bp.reduced_target, "ambient_target": bp.ambient_target }),
                );
                verdicts.push(Verdict::exact("kernel_dim", bp.kernel_dim, 3, cite));
                verdicts.push(Verdict::exact("reduced_target", bp.reduced_target, (1, 3), cite));
                verdicts.push(Verdict::exact("ambient_target", bp.ambient_target, (4, 6), "Theorem GGenDW"));
                let res = real_form_residual(&bp, cfg.seed, cfg.n_samples)?;
                verdicts.push(Verdict::bound("image_in_real_form", res, 1e-9, cite));
                let kernels = boundary_angle_kernels(&body, 8)?;
                verdicts.push(Verdict::exact("kernel_dim_over_angles", kernels, vec![3; 8], cite));
                let rep = verify(&bp.spec, cfg)?;
                computed.insert("boundary_map".into(), geometry_json(&rep));
                geometry_verdicts("boundary_map", &rep, verdicts);
            }
        }
        "quadric-explore" => {
            let table = isotypic_table(&ed)?;
            computed.insert("isotypic_table".into(), json!(table));
            let (_, lam) = membership(&body, &vec![0.0; body.d]).map_err(|e| e.to_string())?;
            verdicts.push(Verdict::near("origin_lambda_min", lam, 1.0, 1e-12, "Id is the standard map"));
            let trace_defect = body.constraint_basis.iter().map(|m| m.trace().norm()).fold(0.0, f64::max);
            verdicts.push(Verdict::bound("constraint_trace_free", trace_defect, 1e-9, "Cor. traceIT"));
            if body.d > 0 {
                let mut dir = vec![0.0; body.d];
                dir[0] = 1.0;
                let r = body.boundary_radius(&dir).map_err(|e| e.to_string())?;
                computed.insert("first_axis_radius".into(), json!(r));
                dir[0] = 0.5 * r;
                let spec = map_from_c(&body, &dir).map_err(|e| e.to_string())?;
                verdicts.push(Verdict::bound("trace_t2", (spec.trace_t2() - ed.dim() as f64).abs(), 1e-12, "Lemma traceT"));
            }
        }
        "standard-verify" => {
            let rep = verify(&standard_map(&ed), cfg)?;
            computed.insert("mu".into(), json!(rep.mu));
            computed.insert("standard_map".into(), geometry_json(&rep));
            geometry_verdicts("standard_map", &rep, verdicts);
        }
        other => return Err(format!("case '{other}' has no pipeline")),
    }
    Ok(())
}

pub fn run_case(config: &CaseConfig) -> Result<CaseReport, CliError> {
    config.validate()?;
    let mut computed = BTreeMap::new();
    let mut verdicts = Vec::new();
    let mut errors = Vec::new();
    if let Err(e) = run_pipeline(config, &mut computed, &mut verdicts) {
        errors.push(format!("{}: {e}", config.case_id));
    }
    let passed = errors.is_empty() && !verdicts.is_empty() && verdicts.iter().all(|v| v.pass);
    Ok(CaseReport {
        schema: SCHEMA,
        case_id: config.case_id.clone(),
        config: config.clone(),
        computed,
        verdicts,
        errors,
        passed,
        timestamp: None,
    })
}

/// Write through a sibling temporary file so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub rows: usize,
    pub interior: usize,
    pub boundary: usize,
    pub outside: usize,
    /// Interior share of the square's area, each grid vertex weighted by the
    /// part of its cell that lies inside the square.
    pub interior_area_fraction: f64,
}

fn class_name(m: Membership) -> &'static str {
    match m {
        Membership::Interior => "interior",
        Membership::Boundary => "boundary",
        Membership::Outside => "outside",
    }
}

/// Membership of every vertex of a grid over [−1.2, 1.2]^d, as CSV text.
pub fn moduli_grid(config: &CaseConfig, resolution: f64) -> Result<(String, GridSummary), CliError> {
    config.validate()?;
    if !(resolution > 0.0 && resolution <= 2.4) {
        return Err(CliError::InvalidConfig(format!("resolution {resolution} outside (0, 2.4]")));
    }
    let ed = eigenspace(config.k, config.l, config.mode).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let body = constraint_space(&ed).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let d = body.d;
    if d == 0 {
        return Err(CliError::InvalidConfig(format!("case {} has a zero-dimensional moduli space", config.case_id)));
    }
    let n = (2.4 / resolution).round() as usize + 1;
    let total = n.checked_pow(d as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| CliError::InvalidConfig("grid too large".into()))?;
    let rows: Vec<(Vec<f64>, Membership, f64, f64)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut coords = vec![0.0; d];
            let mut weight = 1.0;
            for x in coords.iter_mut().rev() {
                let i = idx % n;
                idx /= n;
                *x = -1.2 + i as f64 * 2.4 / (n - 1) as f64;
                if i == 0 || i == n - 1 {
                    weight *= 0.5;
                }
            }
            let (class, lam) = membership(&body, &coords).map_err(|e| CliError::Pipeline(e.to_string()))?;
            Ok((coords, class, lam, weight))
        })
        .collect::<Result<_, CliError>>()?;
    let mut csv = String::new();
    for i in 1..=d {
        csv.push_str(&format!("c{i},"));
    }
    csv.push_str("lambda_min,class\n");
    let mut summary = GridSummary { rows: rows.len(), interior: 0, boundary: 0, outside: 0, interior_area_fraction: 0.0 };
    let mut inside_weight = 0.0;
    for (coords, class, lam, w) in &rows {
        for x in coords {
            csv.push_str(&format!("{x:.6},"));
        }
        csv.push_str(&format!("{lam:.12e},{}\n", class_name(*class)));
        match class {
            Membership::Interior => {
                summary.interior += 1;
                inside_weight += w;
            }
            Membership::Boundary => summary.boundary += 1,
            Membership::Outside => summary.outside += 1,
        }
    }
    summary.interior_area_fraction = inside_weight / ((n - 1) as f64).powi(d as i32);
    Ok((csv, summary))
}

pub fn export_moduli_grid(config: &CaseConfig, resolution: f64, path: &Path) -> Result<GridSummary, CliError> {
    let (csv, summary) = moduli_grid(config, resolution)?;
    write_atomic(path, &csv)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceSummary {
    pub schema: &'static str,
    pub seed: u64,
    pub fd_step: f64,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

type Check = Result<(bool, String), String>;

struct GeometryRun {
    label: String,
    report: GeometryReport,
}

/// Standard maps k = 1, 2, 3 in both modes plus three interior degree-two maps.
fn geometry_runs(seed: u64, fd: FdConfig, n: usize) -> Result<Vec<GeometryRun>, String> {
    let mut specs: Vec<(String, MapSpec)> = Vec::new();
    for mode in [Mode::Complex, Mode::Real] {
        for k in 1..=3 {
            let ed = eigenspace(k, 0, mode).map_err(|e| e.to_string())?;
            specs.push((format!("standard {mode} k={k}"), standard_map(&ed)));
        }
    }
    let body = constraint_space(&eigenspace(2, 0, Mode::Real).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for coords in [[0.0, 0.0], [0.5, 0.0], [0.0, 0.9]] {
        let spec = map_from_c(&body, &coords).map_err(|e| e.to_string())?;
        specs.push((format!("quadric k=2 ({},{})", coords[0], coords[1]), spec));
    }
    specs
        .into_iter()
        .map(|(label, spec)| {
            let opts = default_options(&spec, fd).map_err(|e| format!("{label}: {e}"))?;
            Ok(GeometryRun { label, report: verify_spec_with(&spec, seed, n, &opts) })
        })
        .collect()
}

fn worst_over(runs: &[GeometryRun], names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let mut worst: f64 = 0.0;
        let mut at = "";
        for r in runs {
            let v = r.report.residual(name);
            ok &= r.report.errors.is_empty() && r.report.passed.get(*name).copied().unwrap_or(false);
            if v > worst || v.is_nan() {
                worst = v;
                at = &r.label;
            }
        }
        parts.push(format!("{name} {worst:.2e} ({at})"));
    }
    (ok, parts.join(", "))
}

fn c1_rigidity() -> Check {
    let dims: Vec<usize> = (1..=6)
        .map(|k| {
            let ed = eigenspace(k, 0, Mode::Complex).map_err(|e| e.to_string())?;
            constraint_space(&ed).map(|b| b.d).map_err(|e| e.to_string())
        })
        .collect::<Result<_, String>>()?;
    Ok((dims.iter().all(|&d| d == 0), format!("moduli dims k=1..6: {dims:?}")))
}

fn c2_degree_one() -> Check {
    let ed = eigenspace(1, 0, Mode::Real).map_err(|e| e.to_string())?;
    let body = constraint_space(&ed).map_err(|e| e.to_string())?;
    let h0 = EndoSpace::new(Mode::Real, 4).traceless_sub.len();
    let table = table_summary(&isotypic_table(&ed)?);
    let ok = body.gh_dims.1 == 9 && h0 == 9 && body.d == 0 && table == vec![(3, 3), (1, 1)];
    Ok((ok, format!("GH closure {} / dim H0 {h0}, moduli dim {}, H(R^4) = {table:?}", body.gh_dims.1, body.d)))
}

fn c3_degree_two() -> Check {
    let ed = eigenspace(2, 0, Mode::Real).map_err(|e| e.to_string())?;
    let body = constraint_space(&ed).map_err(|e| e.to_string())?;
    let table = table_summary(&isotypic_table(&ed)?);
    let total: usize = table.iter().map(|(d, m)| d * m).sum();
    let (checked, wrong) = if body.d == 2 { disk_grid_misclassifications(&body, 0.02, 1e-8)? } else { (0, usize::MAX) };
    let ok = body.d == 2 && table == vec![(5, 3), (3, 1), (1, 3)] && total == 21 && wrong == 0;
    Ok((ok, format!("moduli dim {}, H(R^6) = {table:?} total {total}, grid {wrong}/{checked} misclassified", body.d)))
}

fn c4_boundary(seed: u64) -> Check {
    let body = constraint_space(&eigenspace(2, 0, Mode::Real).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let bp = boundary_analysis(&body, &[1.0, 0.0]).map_err(|e| e.to_string())?;
    let res = real_form_residual(&bp, seed, 32)?;
    let kernels = boundary_angle_kernels(&body, 8)?;
    let ok = bp.kernel_dim == 3 && bp.reduced_target == (1, 3) && res <= 1e-9 && kernels.iter().all(|&k| k == 3);
    Ok((ok, format!("kernel {} target Gr_{}(R^{}), real-form residual {res:.1e}, angle kernels {kernels:?}", bp.kernel_dim, bp.reduced_target.0, bp.reduced_target.1)))
}

fn c5_centralizer() -> Check {
    let body = constraint_space(&eigenspace(2, 0, Mode::Real).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let thetas = [PI / 6.0, PI / 4.0, PI / 2.0, PI];
    let err = [[0.4, -0.25], [0.9, 0.0], [0.0, 0.5]].iter().map(|&x| centralizer_error(&body, &thetas, x)).try_fold(0.0f64, |a, e| e.map(|e| a.max(e)))?;
    let (inequivalent, gap) = representative_separation(&body)?;
    Ok((err <= 1e-9 && inequivalent == 3, format!("rotation error {err:.1e}, {inequivalent}/3 representative pairs inequivalent (min gap {gap:.3})")))
}

fn c6_takahashi(runs: &[GeometryRun]) -> Check {
    Ok(worst_over(runs, &["takahashi", "eh_condition", "energy_identity"]))
}

fn c7_degree(runs: &[GeometryRun]) -> Check {
    let (ok, detail) = worst_over(runs, &["isometry_degree"]);
    let degrees: Vec<String> = runs.iter().map(|r| format!("{:.6}", r.report.measured.get("isometry_degree").copied().unwrap_or(f64::NAN))).collect();
    Ok((ok, format!("{detail}; degrees [{}]", degrees.join(", "))))
}

fn c8_bundle(runs: &[GeometryRun]) -> Check {
    Ok(worst_over(runs, &["hk_symmetry", "gauss_codazzi", "projection", "gauge_frame"]))
}

fn c9_trace(runs: &[GeometryRun]) -> Check {
    let body = constraint_space(&eigenspace(2, 0, Mode::Real).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut worst = runs.iter().map(|r| r.report.residual("trace_t2")).fold(0.0, f64::max);
    let mut count = runs.len();
    for i in 0..=24 {
        for j in 0..=24 {
            let coords = [-1.2 + 0.1 * i as f64, -1.2 + 0.1 * j as f64];
            if let Ok(spec) = map_from_c(&body, &coords) {
                worst = worst.max((spec.trace_t2() - 6.0).abs());
                count += 1;
            }
        }
    }
    let bp = boundary_analysis(&body, &[0.6, 0.8]).map_err(|e| e.to_string())?;
    worst = worst.max((bp.spec.trace_t2() - 6.0).abs());
    Ok((worst <= 1e-12, format!("max |tr T^2 - N| = {worst:.1e} over {} specs", count + 1)))
}

fn c10_normal() -> Check {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut shapes = Vec::new();
    for k in 1..=4 {
        for l in 0..=1 {
            let ed = eigenspace(k, l, Mode::Complex).map_err(|e| e.to_string())?;
            let n = ed.dim();
            let stages = normal_decomposition(n, &ed.v0, &ed.generators).map_err(|e| e.to_string())?;
            let dims: Vec<usize> = stages.iter().map(|s| s.len()).collect();
            ok &= dims.iter().sum::<usize>() == n;
            let projs: Vec<CMat> = stages.iter().map(|s| linalg::projector(s, n)).collect();
            for (i, p) in projs.iter().enumerate() {
                worst = worst.max(linalg::commutator(p, &ed.irrep.h).camax());
                for q in &projs[..i] {
                    worst = worst.max((p * q).camax());
                }
            }
            shapes.push(format!("({k},{l}):{dims:?}"));
        }
    }
    Ok((ok && worst <= 1e-10, format!("weight/orthogonality defect {worst:.1e}; stages {}", shapes.join(" "))))
}

/// Injected non-solution direction: the trace-free part of `H(v, v)`, v ∈ V0.
fn perturbed_spec(ed: &EigenspaceData, eps: f64) -> MapSpec {
    let n = ed.dim();
    let v = &ed.v0[0];
    let h = v * v.adjoint() - linalg::identity(n) * c(1.0 / n as f64, 0.0);
    let d = &h / c(h.norm(), 0.0);
    let t2 = linalg::identity(n) + d * c(eps, 0.0);
    MapSpec::new(ed.clone(), linalg::psd_sqrt(&t2))
}

fn c11_negative(seed: u64) -> Check {
    let ed = eigenspace(2, 0, Mode::Real).map_err(|e| e.to_string())?;
    let spec = perturbed_spec(&ed, 0.3);
    let opts = default_options(&standard_map(&ed), FdConfig::default()).map_err(|e| e.to_string())?;
    let rep = verify_spec_with(&spec, seed, 8, &opts);
    let (eh, frame) = (rep.residual("eh_condition"), rep.residual("gauge_frame"));
    let detected = eh > 1e-2 || frame > 1e-2;

    // Halve the step around a Richardson reference for μ and read off the order.
    let std = standard_map(&eigenspace(2, 0, Mode::Complex).map_err(|e| e.to_string())?);
    let kappa = calibrate_metric();
    let g = haar_samples(seed, 1)[0];
    let mu_ref = fit_laplace_eigenvalue(&std, kappa, seed, 4, FdConfig { h: 1e-3, richardson: true }).map_err(|e| e.to_string())?.mu;
    let r = |h: f64| -> Result<f64, String> {
        let d = point_data(&std, &g, FdConfig::with_step(h)).map_err(|e| e.to_string())?;
        Ok(linalg::op_norm(&(d.laplacian(kappa) - &d.point.p_q * c(mu_ref, 0.0))))
    };
    let order = (r(0.02)? / r(0.01)?).log2();
    Ok((detected && order >= 1.8, format!("perturbed EH {eh:.2e}, gauge frame {frame:.2e}; FD order {order:.2}")))
}

pub const CRITERIA: [&str; 11] = [
    "complex rigidity",
    "quadric degree one",
    "quadric degree two",
    "boundary degeneration",
    "centralizer action",
    "takahashi / einstein-hermitian",
    "isometry degree",
    "bundle geometry identities",
    "trace identity",
    "normal decomposition",
    "negative controls",
];

fn record(id: usize, check: impl FnOnce() -> Check, limit: Option<f64>) -> CriterionResult {
    let start = Instant::now();
    let out = check();
    let seconds = start.elapsed().as_secs_f64();
    let (mut pass, mut detail) = match out {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        if seconds > limit {
            pass = false;
            detail.push_str(&format!("; took {seconds:.1} s, limit {limit} s"));
        }
    }
    CriterionResult { id, name: CRITERIA[id - 1], pass, detail, seconds }
}

/// Run all acceptance criteria. `fd_step` drives the finite-difference checks
/// (criteria 6 to 8); a coarse step is the built-in negative control.
pub fn run_acceptance(seed: u64, fd_step: f64) -> AcceptanceSummary {
    let fd = FdConfig::with_step(fd_step);
    let mut criteria = vec![
        record(1, c1_rigidity, Some(5.0)),
        record(2, c2_degree_one, None),
        record(3, c3_degree_two, None),
        record(4, || c4_boundary(seed), None),
        record(5, c5_centralizer, None),
    ];
    let start = Instant::now();
    let runs = geometry_runs(seed, fd, 32);
    let geometry_seconds = start.elapsed().as_secs_f64();
    let with_runs = |f: fn(&[GeometryRun]) -> Check| -> Check {
        match &runs {
            Ok(r) => f(r),
            Err(e) => Err(e.clone()),
        }
    };
    let mut c6 = record(6, || with_runs(c6_takahashi), None);
    c6.seconds += geometry_seconds;
    if c6.seconds > 60.0 {
        c6.pass = false;
        c6.detail.push_str(&format!("; took {:.1} s, limit 60 s", c6.seconds));
    }
    criteria.push(c6);
    criteria.push(record(7, || with_runs(c7_degree), None));
    criteria.push(record(8, || with_runs(c8_bundle), None));
    criteria.push(record(9, || with_runs(c9_trace), None));
    criteria.push(record(10, c10_normal, None));
    criteria.push(record(11, || c11_negative(seed), None));
    let passed = criteria.iter().all(|c| c.pass);
    AcceptanceSummary { schema: SCHEMA, seed, fd_step, criteria, passed }
}

impl AcceptanceSummary {
    pub fn lines(&self) -> Vec<String> {
        self.criteria
            .iter()
            .map(|c| format!("{} {:>2} {:<30} {:>6.2}s  {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name, c.seconds, c.detail))
            .collect()
    }
}
