//! Registered, reproducible experiments. Each one builds its operators from
//! an `ExperimentConfig`, computes the relevant invariants, and returns a
//! three-valued verdict (pass / fail / skip-with-diagnostic) together with
//! result tables. Everything is deterministic given (config, seed).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::invariants::{
    agc_check, chern_bloch_oracle, chern_real_space, harper_band_edges,
    interface_current, pump_polarization, pump_tk_chern_oracle, spectral_flow_localized,
    spectral_flow_report, Region, TraceWindow,
};
use crate::lattice::{
    build_gauge, diagonal_gauge, flux_operator, indicator_projection,
    interface_unitary_w, projection_from_flux, FluxProjection,
    IndicatorSet, LatticeOperator, LatticeWindow, MagneticField, TAU,
};
use crate::linalg::{self, max_abs_diff, mul, mul_adj};
use crate::operators::{
    corner_asymptotic_families, corner_example_family, harper_hamiltonian,
    pump_family_capped, pump_ring_family, uniform_grid, HamiltonianKind, HamiltonianSpec,
};
use crate::report::{fmt_int, fmt_sig12, InvariantReport, Table};
use crate::spectral::{detect_common_gap, eig, GapSearch, GapWindow};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Magnetic field strength as a rational multiple of 2 pi.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct RationalFlux {
    pub num: i64,
    pub den: i64,
}

impl RationalFlux {
    pub fn new(num: i64, den: i64) -> Self {
        Self { num, den }
    }

    pub fn radians(&self) -> f64 {
        TAU * self.num as f64 / self.den as f64
    }

    /// (p, q) with q > 0 and gcd(|p|, q) = 1
    pub fn reduced(&self) -> (i64, i64) {
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(self.num, self.den).max(1);
        let (mut p, mut q) = (self.num / g, self.den / g);
        if q < 0 {
            p = -p;
            q = -q;
        }
        (p, q)
    }

    /// exact nondegeneracy test on the rational data
    pub fn degenerate_pair(a: RationalFlux, b: RationalFlux) -> bool {
        // a - b in Z exactly
        (a.num * b.den - b.num * a.den) % (a.den * b.den) == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub l: i64,
    pub margin: i64,
    pub random_pairs: usize,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self { l: 24, margin: 2, random_pairs: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma44Config {
    pub l: i64,
    /// sites kept below/left of the corner
    pub negative_extent: i64,
    pub trace: (i64, i64),
    pub transverse_margin: i64,
}

impl Default for Lemma44Config {
    fn default() -> Self {
        Self { l: 32, negative_extent: 8, trace: (4, 20), transverse_margin: 2 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChernConfig {
    pub l: i64,
    pub fluxes: Vec<RationalFlux>,
    pub n_k: usize,
    pub tolerance: f64,
}

impl Default for ChernConfig {
    fn default() -> Self {
        Self {
            l: 48,
            fluxes: vec![
                RationalFlux::new(1, 3),
                RationalFlux::new(1, 4),
                RationalFlux::new(1, 5),
                RationalFlux::new(2, 5),
            ],
            n_k: 32,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GapChoice {
    /// lowest common gap
    Lowest,
    /// n-th common gap counted from the bottom (0-based)
    Index(usize),
}

impl Default for GapChoice {
    fn default() -> Self {
        GapChoice::Lowest
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BulkInterfaceConfig {
    pub l: i64,
    pub bulk_l: i64,
    pub margin: i64,
    pub corner_margin: i64,
    pub gap: GapChoice,
    /// replace the star material by the vacuum (compressed quarter system)
    pub vacuum_star: bool,
    /// extra exclusion between the averaging range and the far window wall,
    /// where the truncation's own edge channel contaminates the columns
    pub wall_margin: i64,
    pub winding_tolerance: f64,
    pub crosscheck_tolerance: f64,
    pub chern_tolerance: f64,
    pub oracle_n_k: usize,
}

impl Default for BulkInterfaceConfig {
    fn default() -> Self {
        Self {
            l: 64,
            bulk_l: 48,
            margin: 6,
            corner_margin: 6,
            gap: GapChoice::Lowest,
            vacuum_star: false,
            wall_margin: 10,
            winding_tolerance: 0.1,
            crosscheck_tolerance: 0.05,
            chern_tolerance: 0.05,
            oracle_n_k: 24,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    pub amplitude: f64,
    pub block: i64,
    pub offset: (i64, i64),
    pub tolerance: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { amplitude: std::f64::consts::PI / 4.0, block: 3, offset: (2, 2), tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ButterflyConfig {
    pub q_max: i64,
    pub n_k: usize,
    pub label_n_k: usize,
    pub min_gap: f64,
}

impl Default for ButterflyConfig {
    fn default() -> Self {
        Self { q_max: 12, n_k: 32, label_n_k: 24, min_gap: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerConfig {
    pub l: i64,
    pub t_samples: usize,
    pub fredholm_margin: i64,
    pub fredholm_threshold: f64,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self { l: 16, t_samples: 101, fredholm_margin: 1, fredholm_threshold: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpConfig {
    pub length: i64,
    pub t_samples: usize,
    pub delta0: f64,
    pub stagger0: f64,
    pub far_end_cap: f64,
    pub trace_margin: i64,
    pub tk_grid: usize,
    /// left-edge localization region: sites 1 ..= length / this divisor
    pub edge_region_divisor: i64,
    pub edge_weight_threshold: f64,
    pub relation_tolerance: f64,
    pub oracle_tolerance: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            length: 60,
            t_samples: 201,
            delta0: 0.6,
            stagger0: 1.0,
            far_end_cap: 1.5,
            trace_margin: 6,
            tk_grid: 48,
            edge_region_divisor: 4,
            edge_weight_threshold: 0.5,
            relation_tolerance: 0.15,
            oracle_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub kind: HamiltonianKind,
    pub l: i64,
    pub interface_distance: i64,
    pub boundary_margin: i64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { kind: HamiltonianKind::Quarter, l: 32, interface_distance: 2, boundary_margin: 4 }
    }
}

/// Root configuration; all fields have documented defaults, unknown JSON
/// fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub b_corner: RationalFlux,
    pub b_star: RationalFlux,
    pub seed: u64,
    pub identities: IdentitiesConfig,
    pub lemma44: Lemma44Config,
    pub chern: ChernConfig,
    pub bulk_interface: BulkInterfaceConfig,
    pub robustness: RobustnessConfig,
    pub butterfly: ButterflyConfig,
    pub corner: CornerConfig,
    pub pump: PumpConfig,
    pub spectrum: SpectrumConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            b_corner: RationalFlux::new(1, 3),
            b_star: RationalFlux::new(1, 5),
            seed: 7,
            identities: IdentitiesConfig::default(),
            lemma44: Lemma44Config::default(),
            chern: ChernConfig::default(),
            bulk_interface: BulkInterfaceConfig::default(),
            robustness: RobustnessConfig::default(),
            butterfly: ButterflyConfig::default(),
            corner: CornerConfig::default(),
            pump: PumpConfig::default(),
            spectrum: SpectrumConfig::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Verdicts and outputs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail(String),
    Skip(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub verdict: Verdict,
    pub reports: Vec<InvariantReport>,
    pub tables: Vec<Table>,
}

pub const EXPERIMENT_NAMES: [&str; 7] = [
    "identities",
    "lemma44",
    "bulk_interface",
    "robustness",
    "butterfly",
    "corner",
    "pump",
];

pub fn run_experiment(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match name {
        "identities" => exp_identities(cfg),
        "lemma44" => exp_lemma44(cfg),
        "bulk_interface" => exp_bulk_interface(cfg),
        "robustness" => exp_robustness(cfg),
        "butterfly" => exp_butterfly(cfg),
        "corner" => exp_corner(cfg),
        "pump" => exp_pump(cfg),
        other => Err(Error::InvalidSpec(format!("unknown experiment '{other}'"))),
    }
}

fn admissible_pair(rng: &mut ChaCha12Rng) -> (f64, f64) {
    loop {
        let a: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let b: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let q = (a - b) / TAU;
        if (q - q.round()).abs() > 0.02 {
            return (a, b);
        }
    }
}

// ---------------------------------------------------------------------------
// identities
// ---------------------------------------------------------------------------

/// Exact identities of the lattice-core layer on the configured window, for
/// the configured field pair and a seeded sweep of random admissible pairs.
pub fn exp_identities(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "identities";
    let mut table = Table::new(
        name,
        &["pair", "b_corner", "b_star", "check", "residual"],
    );
    if RationalFlux::degenerate_pair(cfg.b_corner, cfg.b_star) {
        return Ok(ExperimentOutput {
            name: name.into(),
            verdict: Verdict::Fail(
                "configured pair violates the nondegeneracy condition b_corner - b_star not in 2 pi Z".into(),
            ),
            reports: vec![],
            tables: vec![table],
        });
    }
    let window = LatticeWindow::centered_square(cfg.identities.l)?;
    let margin = cfg.identities.margin;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut pairs = vec![(cfg.b_corner.radians(), cfg.b_star.radians())];
    for _ in 0..cfg.identities.random_pairs {
        pairs.push(admissible_pair(&mut rng));
    }
    let mut worst = 0.0f64;
    for (idx, &(bc, bs)) in pairs.iter().enumerate() {
        let field = MagneticField::quarter(bc, bs)?;
        let mut push = |check: &str, residual: f64| {
            worst = worst.max(residual);
            table.push_row(vec![
                fmt_int(idx as i64),
                fmt_sig12(bc),
                fmt_sig12(bs),
                check.to_string(),
                fmt_sig12(residual),
            ]);
        };

        // commutation s1 s2 s1* s2* = f_B on the interior
        let fb = flux_operator(&field, &window);
        let lhs = crate::lattice::commutation_product(&field, &window);
        let mut resid = 0.0f64;
        for &i in &window.interior_indices(margin) {
            for &j in &window.interior_indices(margin) {
                let want = if i == j { fb.matrix[(i, i)] } else { linalg::ZERO };
                resid = resid.max((lhs[(i, j)] - want).norm());
            }
        }
        push("commutation", resid);

        // gauge circulation reproduces the field
        let gauge = build_gauge(&field, &window);
        let mut resid = 0.0f64;
        for n1 in window.n1_min + 1..=window.n1_max {
            for n2 in window.n2_min + 1..=window.n2_max {
                resid = resid.max((gauge.circulation((n1, n2)) - field.sample((n1, n2))).abs());
            }
        }
        push("circulation", resid);

        // flux-recovered projections match the indicators on the interior
        for (which, set, label) in [
            (FluxProjection::R0, IndicatorSet::R((0, 0)), "projection_r0"),
            (FluxProjection::U0, IndicatorSet::U((0, 0)), "projection_u0"),
            (FluxProjection::Q0, IndicatorSet::Q((0, 0)), "projection_q0"),
        ] {
            let p = projection_from_flux(&window, &field, which)?;
            let ind = indicator_projection(&window, set);
            push(label, p.interior_max_diff(&ind, margin.max(3)));
        }

        // q0 + q0_perp = 1 exactly
        let q0 = indicator_projection(&window, IndicatorSet::Q((0, 0)));
        let q0c = indicator_projection(&window, IndicatorSet::QComplement((0, 0)));
        let sum = &q0.matrix + &q0c.matrix;
        push(
            "q0_plus_q0perp",
            max_abs_diff(&sum, &ndarray::Array2::eye(window.dimension())),
        );

        // w unitarity on interior columns
        let w = interface_unitary_w(&window, &field);
        push("w_unitary", w.interior_isometry_defect(1));

        // gauge covariance: conjugating the translations by diag(e^{iG})
        // conjugates their commutation product, which is diagonal, so the
        // flux operator and every indicator must be left exactly unchanged
        let g = diagonal_gauge(&window, |n| {
            0.45 * (n.0 as f64 * 0.7).sin() + 0.3 * (n.1 as f64 * 1.3).cos()
        });
        let conj = mul(&g, &mul_adj(&lhs, &g));
        let mut resid = 0.0f64;
        for &i in &window.interior_indices(margin) {
            for &j in &window.interior_indices(margin) {
                let want = if i == j { fb.matrix[(i, i)] } else { linalg::ZERO };
                resid = resid.max((conj[(i, j)] - want).norm());
            }
        }
        push("gauge_covariance", resid);
    }
    let verdict = if worst < 1e-10 {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("worst residual {worst:.3e} >= 1e-10"))
    };
    Ok(ExperimentOutput { name: name.into(), verdict, reports: vec![], tables: vec![table] })
}

// ---------------------------------------------------------------------------
// lemma44
// ---------------------------------------------------------------------------

fn lemma44_windows(
    cfg: &ExperimentConfig,
    l: i64,
) -> Result<(LatticeWindow, TraceWindow, TraceWindow)> {
    let neg = cfg.lemma44.negative_extent;
    let window = LatticeWindow::new(-neg, l - 1 - neg, -neg, l - 1 - neg)?;
    let tm = cfg.lemma44.transverse_margin;
    // clip the averaging range to the window (the convergence ladder reuses
    // this with smaller windows)
    let trace = (
        cfg.lemma44.trace.0,
        cfg.lemma44.trace.1.min(window.n1_max - tm),
    );
    let tw1 = TraceWindow::new(1, trace, (window.n2_min + tm, window.n2_max - tm));
    let tw2 = TraceWindow::new(2, trace, (window.n1_min + tm, window.n1_max - tm));
    Ok((window, tw1, tw2))
}

fn lemma44_values(cfg: &ExperimentConfig, l: i64) -> Result<(f64, f64)> {
    let (window, tw1, tw2) = lemma44_windows(cfg, l)?;
    let field = MagneticField::quarter(cfg.b_corner.radians(), cfg.b_star.radians())?;
    let w = interface_unitary_w(&window, &field);
    let w1 = crate::invariants::winding_number(&w, &tw1)?;
    let w2 = crate::invariants::winding_number(&w, &tw2)?;
    Ok((w1.value, w2.value))
}

/// Winding numbers of the interface shift w in both directions:
/// W_1(w) = +1 and W_2(w) = -1 on corner-excluded trace windows. The
/// corner-included direction-2 trace deviates by exactly 1/length and is
/// reported as a diagnostic row.
pub fn exp_lemma44(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "lemma44";
    let l = cfg.lemma44.l;
    let (window, tw1, tw2) = lemma44_windows(cfg, l)?;
    let field = MagneticField::quarter(cfg.b_corner.radians(), cfg.b_star.radians())?;
    let w = interface_unitary_w(&window, &field);
    let w1 = crate::invariants::winding_number(&w, &tw1)?;
    let w2 = crate::invariants::winding_number(&w, &tw2)?;
    // corner-included diagnostic: the direction-2 average picks up the
    // horizontal face through the corner row, shifting the value by 1/len
    let tw2c = TraceWindow::new(2, (0, cfg.lemma44.trace.1), tw2.transverse);
    let w2c = crate::invariants::winding_number(&w, &tw2c)?;
    let corner_term = w2c.value - w2.value * (tw2.along_len() as f64 / tw2c.along_len() as f64)
        - 0.0 * w2.value;

    // window-convergence ladder
    let (w1_prev, w2_prev) = lemma44_values(cfg, l - 8)?;
    let reports = vec![
        w1.clone().with_convergence((w1.value - w1_prev).abs()),
        w2.clone().with_convergence((w2.value - w2_prev).abs()),
    ];
    let mut table = Table::new(name, &["quantity", "value", "expected", "residual"]);
    table.push_row(vec![
        "winding_1".into(),
        fmt_sig12(w1.value),
        fmt_sig12(1.0),
        fmt_sig12((w1.value - 1.0).abs()),
    ]);
    table.push_row(vec![
        "winding_2".into(),
        fmt_sig12(w2.value),
        fmt_sig12(-1.0),
        fmt_sig12((w2.value + 1.0).abs()),
    ]);
    let expected_corner = -1.0 + 1.0 / tw2c.along_len() as f64;
    table.push_row(vec![
        "winding_2_corner_included".into(),
        fmt_sig12(w2c.value),
        fmt_sig12(expected_corner),
        fmt_sig12((w2c.value - expected_corner).abs()),
    ]);
    let _ = corner_term;
    let ok = (w1.value - 1.0).abs() < 1e-6 && (w2.value + 1.0).abs() < 1e-6;
    let verdict = if ok {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("W1 = {}, W2 = {}", w1.value, w2.value))
    };
    Ok(ExperimentOutput { name: name.into(), verdict, reports, tables: vec![table] })
}

// ---------------------------------------------------------------------------
// bulk_interface
// ---------------------------------------------------------------------------

/// A common spectral gap of the two bulk components, with oracle data.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CommonGap {
    pub lo: f64,
    pub hi: f64,
    /// filled corner-component bands below the gap
    pub bands_corner: usize,
    /// filled star-component bands below the gap (0 for the vacuum)
    pub bands_star: usize,
    pub chern_corner: i64,
    pub chern_star: i64,
}

/// Enumerate common gaps of the two bulk Harper spectra (oracle band
/// edges), lowest first, with their Chern labels.
pub fn common_gaps_oracle(
    b_corner: RationalFlux,
    b_star: RationalFlux,
    vacuum_star: bool,
    n_k: usize,
    min_width: f64,
) -> Result<Vec<CommonGap>> {
    let (pc, qc) = b_corner.reduced();
    let edges_c = harper_band_edges(pc, qc, 32)?;
    let mut out = Vec::new();
    if vacuum_star {
        // star spectrum is {0}: common gaps are corner gaps avoiding 0
        for i in 0..edges_c.len() - 1 {
            let (lo, hi) = (edges_c[i].1, edges_c[i + 1].0);
            if hi - lo < min_width || (lo < 0.0 && hi > 0.0) {
                continue;
            }
            let chern_corner = chern_bloch_oracle(pc, qc, i + 1, n_k)?;
            out.push(CommonGap {
                lo,
                hi,
                bands_corner: i + 1,
                bands_star: 0,
                chern_corner,
                chern_star: 0,
            });
        }
        return Ok(out);
    }
    let (ps, qs) = b_star.reduced();
    let edges_s = harper_band_edges(ps, qs, 32)?;
    for i in 0..edges_c.len() - 1 {
        for j in 0..edges_s.len() - 1 {
            let lo = edges_c[i].1.max(edges_s[j].1);
            let hi = edges_c[i + 1].0.min(edges_s[j + 1].0);
            if hi - lo < min_width {
                continue;
            }
            let chern_corner = chern_bloch_oracle(pc, qc, i + 1, n_k)?;
            let chern_star = chern_bloch_oracle(ps, qs, j + 1, n_k)?;
            out.push(CommonGap {
                lo,
                hi,
                bands_corner: i + 1,
                bands_star: j + 1,
                chern_corner,
                chern_star,
            });
        }
    }
    out.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite gap edges"));
    Ok(out)
}

/// Everything exp_bulk_interface computes for one configuration; reused by
/// the robustness experiment.
#[derive(Debug, Clone, Serialize)]
pub struct BulkInterfaceResult {
    pub gap: GapWindow,
    pub oracle: CommonGap,
    pub chern_rs_corner: f64,
    pub chern_rs_star: f64,
    pub winding_1: f64,
    pub winding_2: f64,
    pub current_1: f64,
    pub current_2: f64,
    pub crosscheck_1: f64,
    pub crosscheck_2: f64,
}

/// Bulk side of the correspondence: the certified common gap and the two
/// bulk Chern numbers. Independent of the quarter window and of any
/// compactly supported perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct BulkData {
    pub gap: GapWindow,
    pub oracle: CommonGap,
    pub chern_rs_corner: f64,
    pub chern_rs_star: f64,
}

pub fn bulk_data(cfg: &ExperimentConfig) -> Result<BulkData> {
    let bi = &cfg.bulk_interface;
    let (bc, bs) = (cfg.b_corner.radians(), cfg.b_star.radians());
    if !bi.vacuum_star && RationalFlux::degenerate_pair(cfg.b_corner, cfg.b_star) {
        return Err(Error::DegenerateField);
    }

    // oracle gap structure
    let gaps = common_gaps_oracle(cfg.b_corner, cfg.b_star, bi.vacuum_star, bi.oracle_n_k, 0.05)?;
    let chosen = match bi.gap {
        GapChoice::Lowest => gaps.first(),
        GapChoice::Index(i) => gaps.get(i),
    }
    .copied()
    .ok_or(Error::NoCommonGap(0.0))?;

    // bulk models certify the gap at finite size
    let bulk_window = LatticeWindow::centered_square(bi.bulk_l)?;
    let field = if bi.vacuum_star {
        MagneticField::quarter(bc, if bc == 0.0 { 1.0 } else { 0.0 })?
    } else {
        MagneticField::quarter(bc, bs)?
    };
    let h_corner = harper_hamiltonian(&HamiltonianSpec::new(
        field.clone(),
        bulk_window,
        HamiltonianKind::BulkCorner,
    ))?;
    let es_corner = eig(&h_corner)?;
    let opts = GapSearch { margin: bi.margin, ..GapSearch::default() };
    let slack = 0.2 * (chosen.hi - chosen.lo);
    let candidate = (chosen.lo - slack, chosen.hi + slack);
    let region = Region::central(&bulk_window);
    let (gap, chern_rs_star) = if bi.vacuum_star {
        let gap = detect_common_gap(&es_corner, &es_corner, candidate, &opts)?;
        (gap, 0.0)
    } else {
        let h_star = harper_hamiltonian(&HamiltonianSpec::new(
            field.clone(),
            bulk_window,
            HamiltonianKind::BulkStar,
        ))?;
        let es_star = eig(&h_star)?;
        let gap = detect_common_gap(&es_corner, &es_star, candidate, &opts)?;
        let p_star = crate::spectral::fermi_projection(&es_star, gap.mu)?;
        (gap, chern_real_space(&p_star, &region)?.value)
    };
    let p_corner = crate::spectral::fermi_projection(&es_corner, gap.mu)?;
    let chern_rs_corner = chern_real_space(&p_corner, &region)?.value;
    Ok(BulkData { gap, oracle: chosen, chern_rs_corner, chern_rs_star })
}

/// Interface side: the quarter Hamiltonian's windings and current densities
/// at the certified gap.
pub fn quarter_currents(
    cfg: &ExperimentConfig,
    l: i64,
    bulk: &BulkData,
    perturbation: Option<&std::collections::BTreeMap<(i64, i64), f64>>,
) -> Result<BulkInterfaceResult> {
    let bi = &cfg.bulk_interface;
    let (bc, bs) = (cfg.b_corner.radians(), cfg.b_star.radians());
    let window = LatticeWindow::centered_square(l)?;
    let mut qfield = MagneticField::quarter(bc, bs)?;
    if let Some(pert) = perturbation {
        qfield = qfield.with_perturbation(pert.clone());
    }
    let mut spec = HamiltonianSpec::new(qfield, window, HamiltonianKind::Quarter);
    if bi.vacuum_star {
        spec = spec.with_vacuum_star();
    }
    let h = harper_hamiltonian(&spec)?;
    let es = eig(&h)?;
    let tw1 = TraceWindow::new(
        1,
        (bi.corner_margin, window.n1_max - bi.wall_margin),
        (window.n2_min + bi.margin, window.n2_max - bi.margin),
    );
    let tw2 = TraceWindow::new(
        2,
        (bi.corner_margin, window.n2_max - bi.wall_margin),
        (window.n1_min + bi.margin, window.n1_max - bi.margin),
    );
    let cur1 = interface_current(&h, &es, &bulk.gap, &tw1, bi.crosscheck_tolerance)?;
    let cur2 = interface_current(&h, &es, &bulk.gap, &tw2, bi.crosscheck_tolerance)?;

    Ok(BulkInterfaceResult {
        gap: bulk.gap,
        oracle: bulk.oracle,
        chern_rs_corner: bulk.chern_rs_corner,
        chern_rs_star: bulk.chern_rs_star,
        winding_1: cur1.winding,
        winding_2: cur2.winding,
        current_1: cur1.current_direct,
        current_2: cur2.current_direct,
        crosscheck_1: cur1.crosscheck_difference,
        crosscheck_2: cur2.crosscheck_difference,
    })
}

pub fn bulk_interface_pipeline(
    cfg: &ExperimentConfig,
    l: i64,
    perturbation: Option<&std::collections::BTreeMap<(i64, i64), f64>>,
) -> Result<BulkInterfaceResult> {
    let bulk = bulk_data(cfg)?;
    quarter_currents(cfg, l, &bulk, perturbation)
}

fn bulk_interface_table(name: &str, r: &BulkInterfaceResult) -> Table {
    let mut t = Table::new(name, &["quantity", "value"]);
    let mut row = |k: &str, v: String| t.push_row(vec![k.to_string(), v]);
    row("gap_lo", fmt_sig12(r.gap.lo));
    row("gap_hi", fmt_sig12(r.gap.hi));
    row("mu", fmt_sig12(r.gap.mu));
    row("chern_corner_oracle", fmt_int(r.oracle.chern_corner));
    row("chern_star_oracle", fmt_int(r.oracle.chern_star));
    row("chern_corner_real_space", fmt_sig12(r.chern_rs_corner));
    row("chern_star_real_space", fmt_sig12(r.chern_rs_star));
    row("winding_1", fmt_sig12(r.winding_1));
    row("winding_2", fmt_sig12(r.winding_2));
    row("current_1", fmt_sig12(r.current_1));
    row("current_2", fmt_sig12(r.current_2));
    row("crosscheck_diff_1", fmt_sig12(r.crosscheck_1));
    row("crosscheck_diff_2", fmt_sig12(r.crosscheck_2));
    t
}

/// The bulk-interface correspondence at desk scale: the winding numbers of
/// the gap unitary along the two faces against the difference of the bulk
/// Chern numbers, with the current-density cross-check.
pub fn exp_bulk_interface(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "bulk_interface";
    if !cfg.bulk_interface.vacuum_star
        && RationalFlux::degenerate_pair(cfg.b_corner, cfg.b_star)
    {
        return Ok(ExperimentOutput {
            name: name.into(),
            verdict: Verdict::Fail(
                "degenerate configuration: b_corner - b_star in 2 pi Z".into(),
            ),
            reports: vec![],
            tables: vec![],
        });
    }
    let r = match bulk_interface_pipeline(cfg, cfg.bulk_interface.l, None) {
        Ok(r) => r,
        Err(Error::NoCommonGap(w)) => {
            return Ok(ExperimentOutput {
                name: name.into(),
                verdict: Verdict::Skip(format!(
                    "no common spectral gap for this flux pair (widest candidate {w:.3e})"
                )),
                reports: vec![],
                tables: vec![],
            })
        }
        Err(e) => return Err(e),
    };
    let bi = &cfg.bulk_interface;
    let diff = (r.oracle.chern_corner - r.oracle.chern_star) as f64;
    let mut failures = Vec::new();
    if (r.chern_rs_corner - r.oracle.chern_corner as f64).abs() >= bi.chern_tolerance {
        failures.push(format!(
            "corner Chern real-space {} vs oracle {}",
            r.chern_rs_corner, r.oracle.chern_corner
        ));
    }
    if !bi.vacuum_star
        && (r.chern_rs_star - r.oracle.chern_star as f64).abs() >= bi.chern_tolerance
    {
        failures.push(format!(
            "star Chern real-space {} vs oracle {}",
            r.chern_rs_star, r.oracle.chern_star
        ));
    }
    if (r.winding_1 - diff).abs() >= bi.winding_tolerance {
        failures.push(format!("W1 = {} vs Ch difference {}", r.winding_1, diff));
    }
    if (r.winding_2 + diff).abs() >= bi.winding_tolerance {
        failures.push(format!("W2 = {} vs -(Ch difference) {}", r.winding_2, -diff));
    }
    if r.crosscheck_1 >= bi.crosscheck_tolerance || r.crosscheck_2 >= bi.crosscheck_tolerance {
        failures.push(format!(
            "current/winding identity residues {:.3e}, {:.3e}",
            r.crosscheck_1, r.crosscheck_2
        ));
    }
    let windows = format!("L={} bulk={}", bi.l, bi.bulk_l);
    let reports = vec![
        InvariantReport::new("winding_1", r.winding_1, 0.0, windows.clone()),
        InvariantReport::new("winding_2", r.winding_2, 0.0, windows.clone()),
        InvariantReport::new("current_1", r.current_1, 0.0, windows.clone()),
        InvariantReport::new("current_2", r.current_2, 0.0, windows),
    ];
    let verdict = if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(failures.join("; "))
    };
    Ok(ExperimentOutput {
        name: name.into(),
        verdict,
        reports,
        tables: vec![bulk_interface_table(name, &r)],
    })
}

// ---------------------------------------------------------------------------
// robustness
// ---------------------------------------------------------------------------

/// Interface currents persist under a compactly supported field
/// perturbation: the windings move by less than the configured tolerance
/// from the unperturbed baseline.
pub fn exp_robustness(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "robustness";
    let bulk = match bulk_data(cfg) {
        Ok(b) => b,
        Err(Error::NoCommonGap(w)) => {
            return Ok(ExperimentOutput {
                name: name.into(),
                verdict: Verdict::Skip(format!("no common gap ({w:.3e})")),
                reports: vec![],
                tables: vec![],
            })
        }
        Err(e) => return Err(e),
    };
    let baseline = quarter_currents(cfg, cfg.bulk_interface.l, &bulk, None)?;
    let rc = &cfg.robustness;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x726f6275_73746e65);
    let mut near = std::collections::BTreeMap::new();
    for dx in 0..rc.block {
        for dy in 0..rc.block {
            near.insert(
                (rc.offset.0 + dx, rc.offset.1 + dy),
                rng.gen_range(-rc.amplitude..rc.amplitude),
            );
        }
    }
    // a second perturbation deep inside the corner quadrant
    let l = cfg.bulk_interface.l;
    let deep_at = l / 4;
    let mut deep = std::collections::BTreeMap::new();
    for dx in 0..rc.block {
        for dy in 0..rc.block {
            deep.insert(
                (deep_at + dx, deep_at + dy),
                rng.gen_range(-rc.amplitude..rc.amplitude),
            );
        }
    }
    // zero perturbation reproduces the baseline bitwise
    let zero = std::collections::BTreeMap::new();
    let rezero = quarter_currents(cfg, l, &bulk, Some(&zero))?;
    let bitwise = rezero.winding_1 == baseline.winding_1 && rezero.winding_2 == baseline.winding_2;

    let pert_near = quarter_currents(cfg, l, &bulk, Some(&near))?;
    let pert_deep = quarter_currents(cfg, l, &bulk, Some(&deep))?;

    let mut table = Table::new(name, &["case", "winding_1", "winding_2", "delta_1", "delta_2"]);
    let mut push = |case: &str, r: &BulkInterfaceResult| {
        table.push_row(vec![
            case.to_string(),
            fmt_sig12(r.winding_1),
            fmt_sig12(r.winding_2),
            fmt_sig12((r.winding_1 - baseline.winding_1).abs()),
            fmt_sig12((r.winding_2 - baseline.winding_2).abs()),
        ]);
    };
    push("baseline", &baseline);
    push("zero_perturbation", &rezero);
    push("corner_block", &pert_near);
    push("deep_quadrant_block", &pert_deep);

    let d1 = (pert_near.winding_1 - baseline.winding_1).abs();
    let d2 = (pert_near.winding_2 - baseline.winding_2).abs();
    let d3 = (pert_deep.winding_1 - baseline.winding_1).abs();
    let d4 = (pert_deep.winding_2 - baseline.winding_2).abs();
    let worst = d1.max(d2).max(d3).max(d4);
    let verdict = if !bitwise {
        Verdict::Fail("zero perturbation did not reproduce the baseline bitwise".into())
    } else if worst < rc.tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("winding drift {worst:.3e} >= {}", rc.tolerance))
    };
    let reports = vec![
        InvariantReport::new("winding_1_perturbed", pert_near.winding_1, 0.0, "corner block".into())
            .with_convergence(d1),
        InvariantReport::new("winding_2_perturbed", pert_near.winding_2, 0.0, "corner block".into())
            .with_convergence(d2),
    ];
    Ok(ExperimentOutput { name: name.into(), verdict, reports, tables: vec![table] })
}

// ---------------------------------------------------------------------------
// butterfly
// ---------------------------------------------------------------------------

/// Hofstadter band dataset for all reduced fluxes p/q with q <= q_max:
/// band intervals, per-gap Chern labels, and the admissible flux pairs with
/// a common gap.
pub fn exp_butterfly(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "butterfly";
    let bf = &cfg.butterfly;
    let mut bands = Table::new(
        "butterfly",
        &["p", "q", "band_index", "e_min", "e_max", "gap_chern"],
    );
    let mut fluxes: Vec<(i64, i64)> = vec![(0, 1)];
    for q in 2..=bf.q_max {
        for p in 1..q {
            if num_gcd(p, q) == 1 {
                fluxes.push((p, q));
            }
        }
    }
    let mut edge_map = Vec::new();
    for &(p, q) in &fluxes {
        let edges = harper_band_edges(p, q, bf.n_k)?;
        let labels = crate::invariants::chern_bloch_oracle_all(p, q, bf.label_n_k)?;
        for (i, &(lo, hi)) in edges.iter().enumerate() {
            let label = labels[i].map(fmt_int).unwrap_or_default();
            bands.push_row(vec![
                fmt_int(p),
                fmt_int(q),
                fmt_int(i as i64),
                fmt_sig12(lo),
                fmt_sig12(hi),
                label,
            ]);
        }
        edge_map.push(((p, q), edges, labels));
    }

    // admissible pairs for the interface experiment: distinct fluxes with a
    // common open gap
    let mut pairs = Table::new(
        "butterfly_pairs",
        &[
            "p_corner", "q_corner", "p_star", "q_star", "gap_lo", "gap_hi", "chern_corner",
            "chern_star", "chern_difference",
        ],
    );
    for a in 0..edge_map.len() {
        for b in 0..edge_map.len() {
            if a == b {
                continue;
            }
            let ((pa, qa), ea, la) = &edge_map[a];
            let ((pb, qb), eb, lb) = &edge_map[b];
            // nondegeneracy of the pair
            if (pa * qb - pb * qa) % (qa * qb) == 0 {
                continue;
            }
            for i in 0..ea.len().saturating_sub(1) {
                for j in 0..eb.len().saturating_sub(1) {
                    let lo = ea[i].1.max(eb[j].1);
                    let hi = ea[i + 1].0.min(eb[j + 1].0);
                    if hi - lo < bf.min_gap {
                        continue;
                    }
                    let (Some(ca), Some(cb)) = (la[i], lb[j]) else { continue };
                    pairs.push_row(vec![
                        fmt_int(*pa),
                        fmt_int(*qa),
                        fmt_int(*pb),
                        fmt_int(*qb),
                        fmt_sig12(lo),
                        fmt_sig12(hi),
                        fmt_int(ca),
                        fmt_int(cb),
                        fmt_int(ca - cb),
                    ]);
                }
            }
        }
    }

    // sanity: flux 1/2 central bands touch at E = 0, flux 1/3 has two open
    // gaps, flux 0 is the single free band
    let mut failures = Vec::new();
    let e2 = harper_band_edges(1, 2, 64)?;
    if !(e2[0].1.abs() < 1e-6 && e2[1].0.abs() < 1e-6) {
        failures.push(format!("flux 1/2 central touching violated: {:?}", e2));
    }
    let e3 = harper_band_edges(1, 3, bf.n_k)?;
    if !(e3[1].0 - e3[0].1 > 0.1 && e3[2].0 - e3[1].1 > 0.1) {
        failures.push("flux 1/3 gaps not open".into());
    }
    let e0 = harper_band_edges(0, 1, 64)?;
    if !((e0[0].0 + 4.0).abs() < 1e-2 && (e0[0].1 - 4.0).abs() < 1e-2) {
        failures.push(format!("flux 0 band should fill [-4, 4], got {:?}", e0[0]));
    }
    let verdict = if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(failures.join("; "))
    };
    Ok(ExperimentOutput {
        name: name.into(),
        verdict,
        reports: vec![],
        tables: vec![bands, pairs],
    })
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        num_gcd(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// corner
// ---------------------------------------------------------------------------

/// The corner-state example: spectral flow -1 at mu = 0, the asymptotic gap
/// condition at every grid point, and the exact spectrum {-1, 1-2t, +1}.
pub fn exp_corner(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "corner";
    let cc = &cfg.corner;
    let window = LatticeWindow::centered_square(cc.l)?;
    let field = MagneticField::quarter(cfg.b_corner.radians(), cfg.b_star.radians())?;
    let grid = uniform_grid(cc.t_samples);
    let fam = corner_example_family(&window, &field, &grid)?;

    // spectrum residual against {-1, 1-2t, +1}
    let mut spectrum_residual = 0.0f64;
    for (t, op) in &fam.samples {
        let vals = crate::spectral::eigvals(op)?;
        let mid = 1.0 - 2.0 * t;
        for v in vals {
            let d = (v + 1.0).abs().min((v - 1.0).abs()).min((v - mid).abs());
            spectrum_residual = spectrum_residual.max(d);
        }
    }

    let flow = spectral_flow_report(&fam, 0.0)?;
    let (fam_u, fam_r) = corner_asymptotic_families(&window, &grid)?;
    let agc = agc_check(&fam_u, &fam_r, 0.0, cc.fredholm_margin, cc.fredholm_threshold)?;

    let mut table = Table::new(name, &["quantity", "value"]);
    table.push_row(vec!["spectral_flow".into(), fmt_int(flow.net)]);
    table.push_row(vec!["crossings".into(), fmt_int(flow.crossings.len() as i64)]);
    if let Some(c) = flow.crossings.first() {
        table.push_row(vec!["crossing_t".into(), fmt_sig12(c.t)]);
    }
    table.push_row(vec!["agc_gap_u".into(), fmt_sig12(agc.gap_u)]);
    table.push_row(vec!["agc_gap_r".into(), fmt_sig12(agc.gap_r)]);
    table.push_row(vec!["spectrum_residual".into(), fmt_sig12(spectrum_residual)]);

    let mut failures = Vec::new();
    if flow.net != -1 {
        failures.push(format!("spectral flow {} != -1", flow.net));
    }
    if !agc.is_fredholm {
        failures.push(format!(
            "asymptotic gap condition violated (gaps {:.3e}, {:.3e})",
            agc.gap_u, agc.gap_r
        ));
    }
    if spectrum_residual >= 1e-10 {
        failures.push(format!("spectrum residual {spectrum_residual:.3e} >= 1e-10"));
    }
    let reports = vec![InvariantReport::new(
        "corner_spectral_flow",
        flow.net as f64,
        0.0,
        format!("L={} samples={}", cc.l, cc.t_samples),
    )];
    let verdict = if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(failures.join("; "))
    };
    Ok(ExperimentOutput { name: name.into(), verdict, reports, tables: vec![table] })
}

// ---------------------------------------------------------------------------
// pump
// ---------------------------------------------------------------------------

/// Thouless pump: the polarization of the ring family, the left-edge
/// spectral flow of the truncated chain, and the (t,k)-torus Chern oracle,
/// tied together by Delta P = -2 pi sf.
pub fn exp_pump(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let name = "pump";
    let pc = &cfg.pump;
    let grid = uniform_grid(pc.t_samples);
    let ring = pump_ring_family(pc.length, &grid, pc.delta0, pc.stagger0)?;
    let open = pump_family_capped(pc.length, &grid, pc.delta0, pc.stagger0, pc.far_end_cap)?;
    let delta_p = pump_polarization(&ring, pc.trace_margin)?;
    let oracle = pump_tk_chern_oracle(pc.delta0, pc.stagger0, pc.tk_grid)?;
    let edge = pc.length / pc.edge_region_divisor;
    let flow = spectral_flow_localized(&open, 0.0, |s| s.0 <= edge, pc.edge_weight_threshold)?;

    let mut table = Table::new(name, &["quantity", "value"]);
    table.push_row(vec!["delta_p".into(), fmt_sig12(delta_p)]);
    table.push_row(vec!["spectral_flow_left_edge".into(), fmt_int(flow.net)]);
    table.push_row(vec!["tk_chern_oracle".into(), fmt_int(oracle)]);
    table.push_row(vec![
        "relation_residual".into(),
        fmt_sig12((delta_p + TAU * flow.net as f64).abs()),
    ]);

    let mut failures = Vec::new();
    if (delta_p + TAU * flow.net as f64).abs() >= pc.relation_tolerance {
        failures.push(format!(
            "Delta P = {delta_p} vs -2 pi sf = {}",
            -TAU * flow.net as f64
        ));
    }
    if flow.net.abs() != oracle.abs() {
        failures.push(format!("sf {} vs oracle integer {}", flow.net, oracle));
    }
    if (delta_p.abs() - TAU * oracle.abs() as f64).abs() >= pc.oracle_tolerance {
        failures.push(format!(
            "|Delta P| = {} vs 2 pi |oracle| = {}",
            delta_p.abs(),
            TAU * oracle.abs() as f64
        ));
    }
    let reports = vec![
        InvariantReport::new(
            "pump_polarization",
            delta_p,
            0.0,
            format!("ring L={} samples={}", pc.length, pc.t_samples),
        ),
        InvariantReport::new(
            "pump_spectral_flow",
            flow.net as f64,
            0.0,
            format!("open L={} cap={}", pc.length, pc.far_end_cap),
        ),
    ];
    let verdict = if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(failures.join("; "))
    };
    Ok(ExperimentOutput { name: name.into(), verdict, reports, tables: vec![table] })
}

// ---------------------------------------------------------------------------
// gauge covariance probe (property suite support)
// ---------------------------------------------------------------------------

/// Conjugate the full pipeline by a random diagonal gauge and report the
/// largest deviation of any invariant. Exact gauge covariance at machine
/// precision is the contract.
pub fn gauge_covariance_probe(cfg: &ExperimentConfig, l: i64) -> Result<f64> {
    let window = LatticeWindow::centered_square(l)?;
    let field = MagneticField::quarter(cfg.b_corner.radians(), cfg.b_star.radians())?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x67617567);
    let gvals: Vec<f64> = (0..window.dimension())
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let g = diagonal_gauge(&window, |n| {
        gvals[window.index(n).expect("site of own window")]
    });

    let mut worst = 0.0f64;

    // winding of w
    let w = interface_unitary_w(&window, &field);
    let tm = 2;
    let tw1 = TraceWindow::new(1, (2, window.n1_max - 2), (window.n2_min + tm, window.n2_max - tm));
    let w1 = crate::invariants::winding_number(&w, &tw1)?.value;
    let wc = LatticeOperator::new(window, mul(&g, &mul_adj(&w.matrix, &g)))
        .with_flags(w.flags);
    let w1c = crate::invariants::winding_number(&wc, &tw1)?.value;
    worst = worst.max((w1 - w1c).abs());

    // spectral flow of the corner family under conjugation
    let grid = uniform_grid(21);
    let fam = corner_example_family(&window, &field, &grid)?;
    let sf = crate::invariants::spectral_flow(&fam, 0.0)?;
    let big = fam.samples[0].1.window;
    let mut rng2 = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x63726e72);
    let g2vals: Vec<f64> = (0..big.dimension())
        .map(|_| rng2.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let g2 = diagonal_gauge(&big, |n| g2vals[big.index(n).expect("site of own window")]);
    let conj_samples: Vec<(f64, LatticeOperator)> = fam
        .samples
        .iter()
        .map(|(t, op)| {
            let m = mul(&g2, &mul_adj(&op.matrix, &g2));
            // conjugation by a unitary preserves Hermiticity up to rounding;
            // symmetrize so the family validator's exact check passes
            let mut m = m;
            let dim = m.dim().0;
            for i in 0..dim {
                for j in 0..i {
                    let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                    m[(i, j)] = avg;
                    m[(j, i)] = avg.conj();
                }
                let re = m[(i, i)].re;
                m[(i, i)] = num_complex::Complex64::new(re, 0.0);
            }
            (*t, LatticeOperator::new(big, m).with_flags(op.flags))
        })
        .collect();
    let fam_c = crate::operators::OperatorFamily { samples: conj_samples, periodic: fam.periodic };
    let sf_c = crate::invariants::spectral_flow(&fam_c, 0.0)?;
    worst = worst.max((sf - sf_c).abs() as f64);

    // bulk Chern under conjugation (constant-field window)
    let bfield = MagneticField::constant(cfg.b_corner.radians());
    let h = harper_hamiltonian(&HamiltonianSpec::new(bfield, window, HamiltonianKind::BulkCorner))?;
    let es = eig(&h)?;
    let edges = harper_band_edges(cfg.b_corner.reduced().0, cfg.b_corner.reduced().1, 24)?;
    let mu = 0.5 * (edges[0].1 + edges[1].0);
    let p = crate::spectral::fermi_projection(&es, mu)?;
    let region = Region::central(&window);
    let ch = chern_real_space(&p, &region)?.value;
    let pc_mat = mul(&g, &mul_adj(&p.matrix, &g));
    let pc = LatticeOperator::new(window, pc_mat).with_flags(p.flags);
    let chc = chern_real_space(&pc, &region)?.value;
    worst = worst.max((ch - chc).abs());

    Ok(worst)
}

/// Render an experiment's tables and reports to (filename, bytes) pairs.
pub fn render_output(out: &ExperimentOutput) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for t in &out.tables {
        files.push((format!("{}.csv", t.name), t.to_csv()));
    }
    if !out.reports.is_empty() {
        let mut csv = String::new();
        csv.push_str(InvariantReport::csv_header());
        csv.push('\n');
        for r in &out.reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        files.push((format!("{}_reports.csv", out.name), csv));
    }
    files
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_default_round_trips() {
        let cfg = ExperimentConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        let json2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(json, json2);
    }

    #[test]
    fn unknown_config_fields_rejected() {
        let bad = r#"{ "mystery_knob": 3 }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn rational_flux_reduction_and_degeneracy() {
        assert_eq!(RationalFlux::new(2, 6).reduced(), (1, 3));
        assert_eq!(RationalFlux::new(-2, 4).reduced(), (-1, 2));
        assert!(RationalFlux::degenerate_pair(
            RationalFlux::new(4, 3),
            RationalFlux::new(1, 3)
        ));
        assert!(!RationalFlux::degenerate_pair(
            RationalFlux::new(1, 3),
            RationalFlux::new(1, 5)
        ));
    }

    #[test]
    fn identities_experiment_passes_with_small_window() {
        let mut cfg = ExperimentConfig::default();
        cfg.identities.l = 12;
        cfg.identities.random_pairs = 3;
        let out = exp_identities(&cfg).unwrap();
        assert!(out.verdict.is_pass(), "{:?}", out.verdict);
        // degenerate configuration surfaces as a failure verdict
        let mut bad = cfg.clone();
        bad.b_corner = RationalFlux::new(6, 5);
        bad.b_star = RationalFlux::new(1, 5);
        let out = exp_identities(&bad).unwrap();
        assert!(matches!(out.verdict, Verdict::Fail(_)));
    }

    #[test]
    fn lemma44_small_window_passes() {
        let mut cfg = ExperimentConfig::default();
        cfg.lemma44.l = 20;
        cfg.lemma44.negative_extent = 5;
        cfg.lemma44.trace = (3, 11);
        let out = exp_lemma44(&cfg).unwrap();
        assert!(out.verdict.is_pass(), "{:?}", out.verdict);
    }

    #[test]
    fn corner_experiment_small() {
        let mut cfg = ExperimentConfig::default();
        cfg.corner.l = 10;
        cfg.corner.t_samples = 41;
        let out = exp_corner(&cfg).unwrap();
        assert!(out.verdict.is_pass(), "{:?}", out.verdict);
    }

    #[test]
    fn pump_experiment_small() {
        let mut cfg = ExperimentConfig::default();
        cfg.pump.length = 24;
        cfg.pump.t_samples = 161;
        cfg.pump.tk_grid = 32;
        let out = exp_pump(&cfg).unwrap();
        assert!(out.verdict.is_pass(), "{:?}", out.verdict);
    }

    #[test]
    fn butterfly_small() {
        let mut cfg = ExperimentConfig::default();
        cfg.butterfly.q_max = 5;
        cfg.butterfly.n_k = 16;
        cfg.butterfly.label_n_k = 16;
        let out = exp_butterfly(&cfg).unwrap();
        assert!(out.verdict.is_pass(), "{:?}", out.verdict);
        // the 1/3 vs 1/5 pair appears with a common gap
        let pairs = &out.tables[1];
        let found = pairs.rows.iter().any(|r| {
            r[0] == "1" && r[1] == "3" && r[2] == "1" && r[3] == "5"
        });
        assert!(found, "1/3 x 1/5 admissible pair missing");
    }

    #[test]
    fn gauge_covariance_exact_at_small_scale() {
        let cfg = ExperimentConfig::default();
        let worst = gauge_covariance_probe(&cfg, 12).unwrap();
        assert!(worst < 1e-8, "gauge covariance broke: {worst:.3e}");
    }

    #[test]
    fn determinism_of_rendered_output() {
        let mut cfg = ExperimentConfig::default();
        cfg.identities.l = 10;
        cfg.identities.random_pairs = 2;
        let a = render_output(&exp_identities(&cfg).unwrap());
        let b = render_output(&exp_identities(&cfg).unwrap());
        assert_eq!(a, b);
        // a different seed changes the random sweep
        let mut cfg2 = cfg.clone();
        cfg2.seed = 8;
        let c = render_output(&exp_identities(&cfg2).unwrap());
        assert_ne!(a, c);
    }
}
