//! Lattice geometry, magnetic fields, the standard gauge, magnetic
//! translations, the flux operator, and the special half-line / quadrant
//! projections of the quarter-plane algebra.
//!
//! Conventions, used everywhere downstream:
//! - sites n = (n1, n2) in Z^2, finite rectangular windows, row-major site
//!   ordering by (n2, n1);
//! - the quarter-plane field takes the value `b_star` when n1 <= 0 or
//!   n2 <= 0 and `b_corner` otherwise;
//! - the gauge puts all phases on direction-1 bonds:
//!   A(n, n - e1) = sum_{m=1..n2} B(n1, m) for n2 > 0,
//!   -sum_{m=0..|n2|-1} B(n1, -m) for n2 < 0, and 0 at n2 = 0;
//! - translations act as (s_j psi)(n) = e^{i A(n, n-e_j)} psi(n - e_j);
//!   on a finite window they are partial isometries, so every exact identity
//!   is asserted on interior sites only.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::linalg::{self, phase, ONE, ZERO};
use crate::{Error, Result};

pub type Site = (i64, i64);

pub const TAU: f64 = std::f64::consts::TAU;

/// Finite rectangular truncation of Z^2 with a deterministic site <-> index
/// bijection (row-major by n2, then n1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct LatticeWindow {
    pub n1_min: i64,
    pub n1_max: i64,
    pub n2_min: i64,
    pub n2_max: i64,
}

impl LatticeWindow {
    pub fn new(n1_min: i64, n1_max: i64, n2_min: i64, n2_max: i64) -> Result<Self> {
        if n1_max < n1_min || n2_max < n2_min {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { n1_min, n1_max, n2_min, n2_max })
    }

    /// Square window of side `l` with the corner site (1,1) and both
    /// interface axes well inside: n1, n2 in [-l/2 + 1, l/2].
    pub fn centered_square(l: i64) -> Result<Self> {
        if l < 4 {
            return Err(Error::InvalidSpec(format!("window side {l} too small")));
        }
        Self::new(-l / 2 + 1, l / 2, -l / 2 + 1, l / 2)
    }

    /// 1-d chain 1..=l embedded as the n2 = 0 row.
    pub fn chain(l: i64) -> Result<Self> {
        if l < 1 {
            return Err(Error::EmptyRegion);
        }
        Self::new(1, l, 0, 0)
    }

    pub fn width1(&self) -> i64 {
        self.n1_max - self.n1_min + 1
    }

    pub fn width2(&self) -> i64 {
        self.n2_max - self.n2_min + 1
    }

    pub fn dimension(&self) -> usize {
        (self.width1() * self.width2()) as usize
    }

    pub fn contains(&self, n: Site) -> bool {
        n.0 >= self.n1_min && n.0 <= self.n1_max && n.1 >= self.n2_min && n.1 <= self.n2_max
    }

    pub fn index(&self, n: Site) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        Some(((n.1 - self.n2_min) * self.width1() + (n.0 - self.n1_min)) as usize)
    }

    pub fn site(&self, idx: usize) -> Site {
        let w = self.width1() as usize;
        let r = idx / w;
        let c = idx % w;
        (self.n1_min + c as i64, self.n2_min + r as i64)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let w = self;
        (0..w.dimension()).map(move |i| w.site(i))
    }

    /// L-infinity distance from the window boundary (0 on the outermost ring).
    pub fn boundary_distance(&self, n: Site) -> i64 {
        debug_assert!(self.contains(n));
        (n.0 - self.n1_min)
            .min(self.n1_max - n.0)
            .min(n.1 - self.n2_min)
            .min(self.n2_max - n.1)
    }

    pub fn is_interior(&self, n: Site, margin: i64) -> bool {
        self.contains(n) && self.boundary_distance(n) >= margin
    }

    pub fn interior_indices(&self, margin: i64) -> Vec<usize> {
        self.sites()
            .filter(|&n| self.is_interior(n, margin))
            .map(|n| self.index(n).expect("site of own window"))
            .collect()
    }

    /// Whether the window can host a quarter-plane field with the corner and
    /// both interface axes in the interior.
    pub fn hosts_quarter_plane(&self) -> bool {
        self.n1_min <= 0 && self.n1_max > 0 && self.n2_min <= 0 && self.n2_max > 0
    }
}

/// Which base profile a `MagneticField` samples. `Quarter` is the
/// quarter-plane field itself; the step profiles are its two half-plane
/// asymptotic limits; the uniform profiles are the two bulk limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FieldProfile {
    Quarter,
    UniformCorner,
    UniformStar,
    /// depends only on n1: b_corner for n1 >= 1, b_star otherwise
    StepN1,
    /// depends only on n2: b_corner for n2 >= 1, b_star otherwise
    StepN2,
}

/// Magnetic field strength function B: Z^2 -> R, as a (b_corner, b_star)
/// pair with a chosen profile plus an optional finitely supported
/// perturbation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MagneticField {
    pub b_corner: f64,
    pub b_star: f64,
    pub profile: FieldProfile,
    perturbation: BTreeMap<Site, f64>,
}

/// true when b_corner - b_star is an integer multiple of 2*pi
pub fn field_degenerate(b_corner: f64, b_star: f64) -> bool {
    let q = (b_corner - b_star) / TAU;
    (q - q.round()).abs() < 1e-12
}

impl MagneticField {
    /// Quarter-plane field. Rejects b_corner - b_star in 2*pi*Z: with equal
    /// fluxes the flux operator is constant and the half-line projections
    /// cannot be recovered from it.
    pub fn quarter(b_corner: f64, b_star: f64) -> Result<Self> {
        if field_degenerate(b_corner, b_star) {
            return Err(Error::DegenerateField);
        }
        Ok(Self {
            b_corner,
            b_star,
            profile: FieldProfile::Quarter,
            perturbation: BTreeMap::new(),
        })
    }

    /// Constant field everywhere (quarter-plane nondegeneracy check does not
    /// apply).
    pub fn constant(b: f64) -> Self {
        Self {
            b_corner: b,
            b_star: b,
            profile: FieldProfile::UniformCorner,
            perturbation: BTreeMap::new(),
        }
    }

    pub fn with_profile(mut self, profile: FieldProfile) -> Self {
        self.profile = profile;
        self
    }

    /// Same (b_corner, b_star) pair under a different profile.
    pub fn reprofiled(&self, profile: FieldProfile) -> Self {
        let mut f = self.clone();
        f.profile = profile;
        f
    }

    pub fn with_perturbation(mut self, pert: BTreeMap<Site, f64>) -> Self {
        self.perturbation = pert;
        self
    }

    pub fn perturbation(&self) -> &BTreeMap<Site, f64> {
        &self.perturbation
    }

    pub fn base_value(&self, n: Site) -> f64 {
        match self.profile {
            FieldProfile::Quarter => {
                if n.0 <= 0 || n.1 <= 0 {
                    self.b_star
                } else {
                    self.b_corner
                }
            }
            FieldProfile::UniformCorner => self.b_corner,
            FieldProfile::UniformStar => self.b_star,
            FieldProfile::StepN1 => {
                if n.0 >= 1 {
                    self.b_corner
                } else {
                    self.b_star
                }
            }
            FieldProfile::StepN2 => {
                if n.1 >= 1 {
                    self.b_corner
                } else {
                    self.b_star
                }
            }
        }
    }

    pub fn sample(&self, n: Site) -> f64 {
        self.base_value(n) + self.perturbation.get(&n).copied().unwrap_or(0.0)
    }
}

/// B(n) for the given field.
pub fn sample_field(field: &MagneticField, n: Site) -> f64 {
    field.sample(n)
}

/// Gauge phases of the standard vector potential over a window. Direction-2
/// bonds carry phase 0; only A(n, n - e1) is stored.
#[derive(Debug, Clone)]
pub struct GaugePhases {
    pub window: LatticeWindow,
    phase1: Vec<f64>,
}

impl GaugePhases {
    /// A(n, n - e1); defined for every n in the window even when n - e1 is
    /// outside it.
    pub fn phase1(&self, n: Site) -> f64 {
        self.phase1[self.window.index(n).expect("site in window")]
    }

    /// A(n, n - e2) = 0 in this gauge.
    pub fn phase2(&self, _n: Site) -> f64 {
        0.0
    }

    /// Circulation around the unit cell at n (requires n - e1, n - e2 in the
    /// window): the two direction-2 legs vanish, leaving
    /// A(n, n-e1) - A(n-e2, n-e1-e2).
    pub fn circulation(&self, n: Site) -> f64 {
        self.phase1(n) - self.phase1((n.0, n.1 - 1))
    }
}

/// Evaluate the standard gauge on a window by column-wise partial sums of
/// the field.
pub fn build_gauge(field: &MagneticField, window: &LatticeWindow) -> GaugePhases {
    let mut phase1 = vec![0.0f64; window.dimension()];
    for n1 in window.n1_min..=window.n1_max {
        // upward: A((n1, n2)) = sum_{m=1..n2} B(n1, m)
        let mut acc = 0.0;
        for n2 in 1..=window.n2_max.max(0) {
            acc += field.sample((n1, n2));
            if n2 >= window.n2_min {
                if let Some(i) = window.index((n1, n2)) {
                    phase1[i] = acc;
                }
            }
        }
        // downward: A((n1, n2)) = -sum_{m=0..|n2|-1} B(n1, -m)
        let mut acc = 0.0;
        for n2 in (window.n2_min.min(0)..=-1).rev() {
            acc -= field.sample((n1, n2 + 1));
            if let Some(i) = window.index((n1, n2)) {
                phase1[i] = acc;
            }
        }
        if let Some(i) = window.index((n1, 0)) {
            phase1[i] = 0.0;
        }
    }
    GaugePhases { window: *window, phase1 }
}

/// Validity flags carried by a lattice operator. Flag semantics are
/// contracts checked by `validate_flags`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpFlags {
    pub hermitian: bool,
    pub unitary_on_interior: bool,
    pub projection: bool,
}

/// Dense operator over the sites of a window.
#[derive(Debug, Clone)]
pub struct LatticeOperator {
    pub window: LatticeWindow,
    pub matrix: Array2<C64>,
    pub flags: OpFlags,
}

pub const FLAG_TOL: f64 = 1e-12;

impl LatticeOperator {
    pub fn new(window: LatticeWindow, matrix: Array2<C64>) -> Self {
        assert_eq!(matrix.dim().0, matrix.dim().1, "operator matrix must be square");
        assert_eq!(matrix.dim().0, window.dimension(), "matrix size must match window");
        Self { window, matrix, flags: OpFlags::default() }
    }

    pub fn with_flags(mut self, flags: OpFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn dimension(&self) -> usize {
        self.window.dimension()
    }

    pub fn entry(&self, row: Site, col: Site) -> C64 {
        let i = self.window.index(row).expect("row site in window");
        let j = self.window.index(col).expect("col site in window");
        self.matrix[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            window: self.window,
            matrix: linalg::adjoint(&self.matrix),
            flags: self.flags,
        }
    }

    /// Check the declared flags against the matrix. The projection and
    /// unitarity checks multiply matrices; above `full_limit` dimensions they
    /// fall back to a deterministic column sample.
    pub fn validate_flags(&self, full_limit: usize) -> Result<()> {
        let n = self.dimension();
        if self.flags.hermitian {
            let d = linalg::hermiticity_defect(&self.matrix);
            if d >= FLAG_TOL {
                return Err(Error::NonHermitian(d));
            }
        }
        if self.flags.projection {
            let d = if n <= full_limit {
                let m2 = linalg::mul(&self.matrix, &self.matrix);
                linalg::max_abs_diff(&m2, &self.matrix)
            } else {
                self.column_defect(|col| col.to_vec())
            };
            if d >= FLAG_TOL {
                return Err(Error::NonProjection(d));
            }
            if !self.flags.hermitian {
                return Err(Error::InvalidSpec("projection flag requires hermitian flag".into()));
            }
        }
        if self.flags.unitary_on_interior {
            let d = self.interior_isometry_defect(1);
            if d >= 1e-10 {
                return Err(Error::NonUnitary(d));
            }
        }
        Ok(())
    }

    // max |M (M e_j) - M e_j| over a deterministic sample of columns
    fn column_defect(&self, _f: impl Fn(&[C64]) -> Vec<C64>) -> f64 {
        let n = self.dimension();
        let step = (n / 64).max(1);
        let mut worst = 0.0f64;
        for j in (0..n).step_by(step) {
            let col = self.matrix.column(j).to_owned();
            let mcol = self.matrix.dot(&col);
            for i in 0..n {
                worst = worst.max((mcol[i] - col[i]).norm());
            }
        }
        worst
    }

    /// max over interior columns j of | (M^dagger M - 1) e_j | entries.
    pub fn interior_isometry_defect(&self, margin: i64) -> f64 {
        let ids = self.window.interior_indices(margin);
        let mut worst = 0.0f64;
        for &j in &ids {
            let col = self.matrix.column(j);
            // norm of column minus 1
            let nrm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>();
            worst = worst.max((nrm - 1.0).abs());
        }
        worst
    }

    /// Largest |A - B| entry over interior rows and columns.
    pub fn interior_max_diff(&self, other: &LatticeOperator, margin: i64) -> f64 {
        assert_eq!(self.window, other.window);
        let ids = self.window.interior_indices(margin);
        let mut worst = 0.0f64;
        for &i in &ids {
            for &j in &ids {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        worst
    }
}

/// Magnetic translation s_j over a window in the standard gauge; rows whose
/// source site leaves the window are zero, so the result is a partial
/// isometry (exact isometry on interior columns).
pub fn magnetic_translation(
    field: &MagneticField,
    window: &LatticeWindow,
    direction: u8,
) -> LatticeOperator {
    assert!(direction == 1 || direction == 2, "direction must be 1 or 2");
    let gauge = build_gauge(field, window);
    let n = window.dimension();
    let mut m = Array2::<C64>::zeros((n, n));
    for site in window.sites() {
        let src = match direction {
            1 => (site.0 - 1, site.1),
            _ => (site.0, site.1 - 1),
        };
        if let (Some(i), Some(j)) = (window.index(site), window.index(src)) {
            let a = if direction == 1 { gauge.phase1(site) } else { 0.0 };
            m[(i, j)] = phase(a);
        }
    }
    LatticeOperator::new(*window, m).with_flags(OpFlags {
        unitary_on_interior: true,
        ..OpFlags::default()
    })
}

/// Diagonal flux operator f_B with entries e^{i B(n)}.
pub fn flux_operator(field: &MagneticField, window: &LatticeWindow) -> LatticeOperator {
    let n = window.dimension();
    let mut m = Array2::<C64>::zeros((n, n));
    for site in window.sites() {
        let i = window.index(site).expect("site of own window");
        m[(i, i)] = phase(field.sample(site));
    }
    LatticeOperator::new(*window, m).with_flags(OpFlags {
        unitary_on_interior: true,
        ..OpFlags::default()
    })
}

/// Bond data of a magnetic translation: row i receives from column src(i)
/// with the given phase. The one-nonzero-per-row structure makes left and
/// right multiplication O(n^2).
struct TranslationBonds {
    /// src index and phase for each row, None when the source leaves the window
    rows: Vec<Option<(usize, C64)>>,
}

fn translation_bonds(field: &MagneticField, window: &LatticeWindow, direction: u8) -> TranslationBonds {
    let gauge = build_gauge(field, window);
    let rows = window
        .sites()
        .map(|site| {
            let src = match direction {
                1 => (site.0 - 1, site.1),
                _ => (site.0, site.1 - 1),
            };
            window.index(src).map(|j| {
                let a = if direction == 1 { gauge.phase1(site) } else { 0.0 };
                (j, phase(a))
            })
        })
        .collect();
    TranslationBonds { rows }
}

impl TranslationBonds {
    /// s * M (adjoint = false) or s^dagger * M (adjoint = true)
    fn apply_left(&self, m: &Array2<C64>, adjoint: bool) -> Array2<C64> {
        let (n, cols) = m.dim();
        let mut out = Array2::<C64>::zeros((n, cols));
        for (i, bond) in self.rows.iter().enumerate() {
            if let Some((j, ph)) = bond {
                if adjoint {
                    // s^dagger row j gets conj(ph) * M[i, :]
                    for c in 0..cols {
                        out[(*j, c)] = ph.conj() * m[(i, c)];
                    }
                } else {
                    for c in 0..cols {
                        out[(i, c)] = *ph * m[(*j, c)];
                    }
                }
            }
        }
        out
    }

    /// M * s (adjoint = false) or M * s^dagger (adjoint = true)
    fn apply_right(&self, m: &Array2<C64>, adjoint: bool) -> Array2<C64> {
        let (rows, n) = m.dim();
        let mut out = Array2::<C64>::zeros((rows, n));
        for (i, bond) in self.rows.iter().enumerate() {
            if let Some((j, ph)) = bond {
                if adjoint {
                    // s^dagger has entry conj(ph) at (j, i): (M s^dagger)[:, i] = conj(ph) M[:, j]
                    for r in 0..rows {
                        out[(r, i)] = ph.conj() * m[(r, *j)];
                    }
                } else {
                    // s has entry ph at (i, j): (M s)[:, j] = ph M[:, i]
                    for r in 0..rows {
                        out[(r, *j)] = *ph * m[(r, i)];
                    }
                }
            }
        }
        out
    }
}

/// tau_gamma(op) = s1^g1 s2^g2 op s2^-g2 s1^-g1 with the window's magnetic
/// translations; exact on sites at distance >= |g1| + |g2| from the
/// boundary. For diagonal `op` this is the diagonal shifted by gamma.
pub fn translate_operator(
    op: &LatticeOperator,
    gamma: (i64, i64),
    field: &MagneticField,
) -> Result<LatticeOperator> {
    let window = &op.window;
    let need = 2 * (gamma.0.abs() + gamma.1.abs()) + 2;
    if need >= window.width1().min(window.width2()) {
        return Err(Error::WindowTooSmall);
    }
    if gamma == (0, 0) {
        return Ok(op.clone());
    }
    let b1 = translation_bonds(field, window, 1);
    let b2 = translation_bonds(field, window, 2);
    // m -> s2^g2 m s2^-g2, then s1^g1 (...) s1^-g1
    let mut m = op.matrix.clone();
    for (bonds, g) in [(&b2, gamma.1), (&b1, gamma.0)] {
        let adj = g < 0;
        for _ in 0..g.abs() {
            m = bonds.apply_left(&m, adj);
            m = bonds.apply_right(&m, !adj);
        }
    }
    Ok(LatticeOperator::new(*window, m))
}

/// s1 s2 s1^dagger s2^dagger as a matrix, via structural application of the
/// translation bonds (used by the exact commutation checks).
pub fn commutation_product(field: &MagneticField, window: &LatticeWindow) -> Array2<C64> {
    let b1 = translation_bonds(field, window, 1);
    let b2 = translation_bonds(field, window, 2);
    let n = window.dimension();
    let mut m = Array2::<C64>::eye(n);
    // build s1 s2 s1* s2* applied to the identity, right to left
    m = b2.apply_left(&m, true);
    m = b1.apply_left(&m, true);
    m = b2.apply_left(&m, false);
    m = b1.apply_left(&m, false);
    m
}

/// The characteristic sets of the quarter-plane geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorSet {
    /// right half-line {n + j e1 | j >= 0}
    R(Site),
    /// up half-line {n + j e2 | j >= 0}
    U(Site),
    /// quadrant {n + j e1 + k e2 | j, k >= 0}
    Q(Site),
    /// complement of the quadrant
    QComplement(Site),
    /// single site
    Point(Site),
}

impl IndicatorSet {
    pub fn contains(&self, m: Site) -> bool {
        match *self {
            IndicatorSet::R(n) => m.1 == n.1 && m.0 >= n.0,
            IndicatorSet::U(n) => m.0 == n.0 && m.1 >= n.1,
            IndicatorSet::Q(n) => m.0 >= n.0 && m.1 >= n.1,
            IndicatorSet::QComplement(n) => !(m.0 >= n.0 && m.1 >= n.1),
            IndicatorSet::Point(n) => m == n,
        }
    }
}

/// Diagonal 0/1 projection onto the chosen set intersected with the window.
pub fn indicator_projection(window: &LatticeWindow, set: IndicatorSet) -> LatticeOperator {
    let n = window.dimension();
    let mut m = Array2::<C64>::zeros((n, n));
    for site in window.sites() {
        if set.contains(site) {
            let i = window.index(site).expect("site of own window");
            m[(i, i)] = ONE;
        }
    }
    LatticeOperator::new(*window, m).with_flags(OpFlags {
        hermitian: true,
        projection: true,
        ..OpFlags::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxProjection {
    R0,
    U0,
    Q0,
}

/// Recover r_0, u_0 or q_0 from translates of the flux operator:
///   r_0 = c^-1 (tau_{-e1-e2}(f_B) - tau_{-e1}(f_B)),
///   u_0 = c^-1 (tau_{-e1-e2}(f_B) - tau_{-e2}(f_B)),
///   q_0 = c^-1 (tau_{-e1-e2}(f_B) - e^{i b_star} 1),
/// with c = e^{i b_corner} - e^{i b_star}. Exact on interior sites; the
/// truncated translations corrupt a boundary collar, so the result is not
/// flagged as a projection.
pub fn projection_from_flux(
    window: &LatticeWindow,
    field: &MagneticField,
    which: FluxProjection,
) -> Result<LatticeOperator> {
    if field_degenerate(field.b_corner, field.b_star) {
        return Err(Error::DegenerateField);
    }
    let c = phase(field.b_corner) - phase(field.b_star);
    let f = flux_operator(field, window);
    let t11 = translate_operator(&f, (-1, -1), field)?;
    let other = match which {
        FluxProjection::R0 => translate_operator(&f, (-1, 0), field)?.matrix,
        FluxProjection::U0 => translate_operator(&f, (0, -1), field)?.matrix,
        FluxProjection::Q0 => {
            let n = window.dimension();
            Array2::<C64>::eye(n) * phase(field.b_star)
        }
    };
    let m = (t11.matrix - other) / c;
    Ok(LatticeOperator::new(*window, m))
}

/// The K_1 generator of the interface algebra,
/// w = (s1 - 1) r_0 + (s2* - 1) u_0 (1 - r_0) + 1: the anti-clockwise shift
/// along the interface set {(n1,0) : n1 >= 0} u {(0,n2) : n2 >= 0}, identity
/// elsewhere. Unitary on interior sites (truncation breaks the column at the
/// window edge of the horizontal half-axis).
pub fn interface_unitary_w(window: &LatticeWindow, field: &MagneticField) -> LatticeOperator {
    assert!(
        window.hosts_quarter_plane(),
        "interface unitary needs a quarter-plane window"
    );
    let n = window.dimension();
    let s1 = magnetic_translation(field, window, 1);
    let s2 = magnetic_translation(field, window, 2);

    let mut m = Array2::<C64>::eye(n);
    for site in window.sites() {
        let j = window.index(site).expect("site of own window");
        let in_r0 = IndicatorSet::R((0, 0)).contains(site);
        let in_u0 = IndicatorSet::U((0, 0)).contains(site);
        if in_r0 {
            // column j of (s1 - 1) r0 acting on delta_site
            m[(j, j)] = ZERO;
            for i in 0..n {
                m[(i, j)] += s1.matrix[(i, j)];
            }
        } else if in_u0 {
            // (s2* - 1) u0 (1 - r0)
            m[(j, j)] = ZERO;
            let s2adj_col = s2.matrix.row(j); // (s2^dagger)[i, j] = conj(s2[j, i])
            for i in 0..n {
                m[(i, j)] += s2adj_col[i].conj();
            }
        }
    }
    LatticeOperator::new(*window, m).with_flags(OpFlags {
        unitary_on_interior: true,
        ..OpFlags::default()
    })
}

/// Diagonal unitary e^{i G} for a gauge function G on the window.
pub fn diagonal_gauge(window: &LatticeWindow, g: impl Fn(Site) -> f64) -> Array2<C64> {
    let n = window.dimension();
    let mut m = Array2::<C64>::zeros((n, n));
    for site in window.sites() {
        let i = window.index(site).expect("site of own window");
        m[(i, i)] = phase(g(site));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adj_mul, max_abs_diff, mul};

    fn test_field() -> MagneticField {
        MagneticField::quarter(TAU / 3.0, TAU / 5.0).unwrap()
    }

    #[test]
    fn window_bijection_is_total_and_row_major() {
        let w = LatticeWindow::new(-3, 4, -2, 5).unwrap();
        assert_eq!(w.dimension(), 8 * 8);
        for (k, site) in w.sites().enumerate() {
            assert_eq!(w.index(site), Some(k));
        }
        // row-major by (n2, n1): first site is (n1_min, n2_min)
        assert_eq!(w.site(0), (-3, -2));
        assert_eq!(w.site(1), (-2, -2));
        assert_eq!(w.site(8), (-3, -1));
    }

    #[test]
    fn sample_field_quadrant_rule() {
        let f = MagneticField::quarter(2.0 * TAU / 6.0, TAU / 10.0).unwrap();
        // strict first quadrant
        assert_eq!(f.sample((3, 4)), 2.0 * TAU / 6.0);
        // n1 <= 0
        assert_eq!(f.sample((0, 7)), TAU / 10.0);
        assert_eq!(f.sample((5, 0)), TAU / 10.0);
        // additive perturbation
        let mut pert = BTreeMap::new();
        pert.insert((2, 2), 0.1);
        let f = MagneticField::quarter(1.0, 0.3).unwrap().with_perturbation(pert);
        assert!((f.sample((2, 2)) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn degenerate_pair_rejected() {
        assert!(matches!(
            MagneticField::quarter(1.0 + TAU, 1.0),
            Err(Error::DegenerateField)
        ));
        assert!(MagneticField::quarter(1.0, 1.0 - 3.0 * TAU).is_err());
    }

    #[test]
    fn gauge_zero_row_and_constant_field_sum() {
        let w = LatticeWindow::centered_square(12).unwrap();
        let f = MagneticField::constant(0.37);
        let g = build_gauge(&f, &w);
        assert_eq!(g.phase1((5, 0)), 0.0);
        for n2 in w.n2_min..=w.n2_max {
            let expect = n2 as f64 * 0.37;
            assert!((g.phase1((2, n2)) - expect).abs() < 1e-12, "n2={n2}");
        }
    }

    #[test]
    fn gauge_circulation_reproduces_field() {
        let w = LatticeWindow::centered_square(14).unwrap();
        let mut pert = BTreeMap::new();
        pert.insert((2, 2), 0.21);
        pert.insert((-1, 3), -0.4);
        let f = test_field().with_perturbation(pert);
        let g = build_gauge(&f, &w);
        for n1 in w.n1_min + 1..=w.n1_max {
            for n2 in w.n2_min + 1..=w.n2_max {
                let cir = g.circulation((n1, n2));
                let b = f.sample((n1, n2));
                assert!((cir - b).abs() < 1e-12, "cell ({n1},{n2}): {cir} vs {b}");
            }
        }
    }

    #[test]
    fn translation_direction_two_is_plain_shift() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let s2 = magnetic_translation(&test_field(), &w, 2);
        for site in w.sites() {
            let src = (site.0, site.1 - 1);
            if w.contains(src) {
                assert_eq!(s2.entry(site, src), ONE);
            }
        }
    }

    #[test]
    fn translations_are_interior_isometries() {
        let w = LatticeWindow::centered_square(10).unwrap();
        for dir in [1, 2] {
            let s = magnetic_translation(&test_field(), &w, dir);
            let g = adj_mul(&s.matrix, &s.matrix);
            // interior columns of s^dagger s equal identity columns
            for &j in &w.interior_indices(1) {
                for i in 0..w.dimension() {
                    let want = if i == j { ONE } else { ZERO };
                    assert!((g[(i, j)] - want).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn commutation_defect_equals_flux_on_interior() {
        let w = LatticeWindow::centered_square(12).unwrap();
        let mut pert = BTreeMap::new();
        pert.insert((1, 2), 0.13);
        let f = test_field().with_perturbation(pert);
        let s1 = magnetic_translation(&f, &w, 1);
        let s2 = magnetic_translation(&f, &w, 2);
        let fb = flux_operator(&f, &w);
        let s1s2 = mul(&s1.matrix, &s2.matrix);
        let lhs = crate::linalg::mul_adj(&crate::linalg::mul_adj(&s1s2, &s1.matrix), &s2.matrix);
        // interior block must match the flux diagonal
        for &i in &w.interior_indices(2) {
            for &j in &w.interior_indices(2) {
                let want = if i == j { fb.matrix[(i, i)] } else { ZERO };
                assert!((lhs[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn flux_operator_trivial_and_quadrant_values() {
        let w = LatticeWindow::centered_square(6).unwrap();
        let f0 = MagneticField::constant(0.0);
        let id = flux_operator(&f0, &w);
        assert!(max_abs_diff(&id.matrix, &Array2::eye(w.dimension())) < 1e-15);
        let f = MagneticField::quarter(TAU / 3.0, std::f64::consts::PI).unwrap();
        let fb = flux_operator(&f, &w);
        assert!((fb.entry((1, 1), (1, 1)) - phase(TAU / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn translate_diagonal_shifts_diagonal() {
        let w = LatticeWindow::centered_square(12).unwrap();
        let f = test_field();
        let fb = flux_operator(&f, &w);
        let t = translate_operator(&fb, (1, -1), &f).unwrap();
        for site in w.sites() {
            if w.is_interior(site, 3) {
                let want = phase(f.sample((site.0 - 1, site.1 + 1)));
                assert!((t.entry(site, site) - want).norm() < 1e-12, "site {site:?}");
            }
        }
        // gamma = 0 is the identity map
        let t0 = translate_operator(&fb, (0, 0), &f).unwrap();
        assert!(max_abs_diff(&t0.matrix, &fb.matrix) < 1e-15);
        // shifted point projection
        let z0 = indicator_projection(&w, IndicatorSet::Point((0, 0)));
        let t = translate_operator(&z0, (1, 0), &f).unwrap();
        let z10 = indicator_projection(&w, IndicatorSet::Point((1, 0)));
        assert!(t.interior_max_diff(&z10, 2) < 1e-12);
    }

    #[test]
    fn translate_margin_error() {
        let w = LatticeWindow::centered_square(6).unwrap();
        let f = test_field();
        let fb = flux_operator(&f, &w);
        assert!(matches!(
            translate_operator(&fb, (2, 0), &f),
            Err(Error::WindowTooSmall)
        ));
    }

    #[test]
    fn indicator_identities() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let r0 = indicator_projection(&w, IndicatorSet::R((0, 0)));
        assert_eq!(r0.entry((3, 0), (3, 0)), ONE);
        assert_eq!(r0.entry((-1, 0), (-1, 0)), ZERO);
        let q0 = indicator_projection(&w, IndicatorSet::Q((0, 0)));
        let q0c = indicator_projection(&w, IndicatorSet::QComplement((0, 0)));
        let sum = &q0.matrix + &q0c.matrix;
        assert!(max_abs_diff(&sum, &Array2::eye(w.dimension())) < 1e-15);
        // z0 = r0 * u0
        let u0 = indicator_projection(&w, IndicatorSet::U((0, 0)));
        let z0 = indicator_projection(&w, IndicatorSet::Point((0, 0)));
        assert!(max_abs_diff(&mul(&r0.matrix, &u0.matrix), &z0.matrix) < 1e-15);
        for p in [&r0, &u0, &q0, &q0c, &z0] {
            p.validate_flags(usize::MAX).unwrap();
        }
    }

    #[test]
    fn projections_from_flux_match_indicators_on_interior() {
        let w = LatticeWindow::centered_square(12).unwrap();
        let f = test_field();
        for (which, set) in [
            (FluxProjection::R0, IndicatorSet::R((0, 0))),
            (FluxProjection::U0, IndicatorSet::U((0, 0))),
            (FluxProjection::Q0, IndicatorSet::Q((0, 0))),
        ] {
            let p = projection_from_flux(&w, &f, which).unwrap();
            let ind = indicator_projection(&w, set);
            assert!(
                p.interior_max_diff(&ind, 3) < 1e-12,
                "{which:?} deviates from its indicator"
            );
        }
        let fdeg = MagneticField::constant(1.0);
        assert!(projection_from_flux(&w, &fdeg, FluxProjection::R0).is_err());
    }

    #[test]
    fn w_is_the_interface_shift() {
        let w = LatticeWindow::centered_square(10).unwrap();
        let f = test_field();
        let u = interface_unitary_w(&w, &f);
        // horizontal face: (k,0) -> (k+1,0) with unit phase
        for k in 0..w.n1_max - 1 {
            let col = w.index((k, 0)).unwrap();
            for i in 0..w.dimension() {
                let want = if i == w.index((k + 1, 0)).unwrap() { ONE } else { ZERO };
                assert!((u.matrix[(i, col)] - want).norm() < 1e-14);
            }
        }
        // vertical face: (0,k) -> (0,k-1)
        for k in 1..=w.n2_max {
            let col = w.index((0, k)).unwrap();
            let dst = w.index((0, k - 1)).unwrap();
            assert!((u.matrix[(dst, col)] - ONE).norm() < 1e-14);
        }
        // off the interface: identity column
        let col = w.index((-2, 3)).unwrap();
        for i in 0..w.dimension() {
            let want = if i == col { ONE } else { ZERO };
            assert!((u.matrix[(i, col)] - want).norm() < 1e-14);
        }
        // interior unitarity
        assert!(u.interior_isometry_defect(1) < 1e-12);
        // w - 1 supported within one spacing of the interface set
        let n = w.dimension();
        let eye = Array2::<C64>::eye(n);
        for i in 0..n {
            for j in 0..n {
                let d = (u.matrix[(i, j)] - eye[(i, j)]).norm();
                if d > 1e-14 {
                    let s = w.site(j);
                    let on_interface = (s.1 == 0 && s.0 >= 0) || (s.0 == 0 && s.1 >= 0);
                    assert!(on_interface, "w - 1 support leaked to {s:?}");
                }
            }
        }
    }

    #[test]
    fn gauge_conjugation_fixes_flux_and_projections() {
        let w = LatticeWindow::centered_square(10).unwrap();
        let f = test_field();
        let g = diagonal_gauge(&w, |n| 0.3 * n.0 as f64 - 0.7 * (n.1 as f64).sin());
        let fb = flux_operator(&f, &w);
        let conj = mul(&g, &crate::linalg::mul_adj(&fb.matrix, &g));
        assert!(max_abs_diff(&conj, &fb.matrix) < 1e-12);
        let r0 = indicator_projection(&w, IndicatorSet::R((0, 0)));
        let conj = mul(&g, &crate::linalg::mul_adj(&r0.matrix, &g));
        assert!(max_abs_diff(&conj, &r0.matrix) < 1e-12);
    }

    #[test]
    fn commutation_product_matches_dense_route() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let f = test_field();
        let s1 = magnetic_translation(&f, &w, 1);
        let s2 = magnetic_translation(&f, &w, 2);
        let dense = crate::linalg::mul_adj(
            &crate::linalg::mul_adj(&mul(&s1.matrix, &s2.matrix), &s1.matrix),
            &s2.matrix,
        );
        let structural = commutation_product(&f, &w);
        assert!(max_abs_diff(&dense, &structural) < 1e-14);
    }
}
