//! Hermitian eigendecomposition and functions of operators: Fermi
//! projections, common-gap detection with boundary-state filtering, the
//! smooth gap step g, and the gap unitary e^{2 pi i g(H)}.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::lattice::{LatticeOperator, LatticeWindow, OpFlags, Site};
use crate::linalg::{self, phase, ONE};
use crate::operators::interface_distance;
use crate::{Error, Result};

/// Full eigendecomposition of a Hermitian lattice operator; eigenvalues
/// ascending, eigenvectors as orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
    pub window: LatticeWindow,
}

impl EigenSystem {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// residual |H v - lambda v| relative to |H|, maximized over a
    /// deterministic sample of eigenpairs
    pub fn residual(&self, h: &LatticeOperator) -> f64 {
        let n = self.dimension();
        let scale = linalg::max_abs(&h.matrix).max(1e-300) * n as f64;
        let step = (n / 32).max(1);
        let mut worst = 0.0f64;
        for k in (0..n).step_by(step) {
            let v = self.vectors.column(k).to_owned();
            let hv = h.matrix.dot(&v);
            let mut acc = 0.0f64;
            for i in 0..n {
                acc += (hv[i] - v[i] * self.values[k]).norm_sqr();
            }
            worst = worst.max(acc.sqrt() / scale);
        }
        worst
    }
}

/// Eigendecomposition; rejects operators without the Hermitian flag.
pub fn eig(h: &LatticeOperator) -> Result<EigenSystem> {
    if !h.flags.hermitian {
        let d = linalg::hermiticity_defect(&h.matrix);
        return Err(Error::NonHermitian(d));
    }
    let (values, vectors) = linalg::hermitian_eig(&h.matrix)?;
    Ok(EigenSystem { values, vectors, window: h.window })
}

/// Eigenvalues only.
pub fn eigvals(h: &LatticeOperator) -> Result<Vec<f64>> {
    if !h.flags.hermitian {
        return Err(Error::NonHermitian(linalg::hermiticity_defect(&h.matrix)));
    }
    linalg::hermitian_eigvals(&h.matrix)
}

/// f(H) = V f(lambda) V^dagger from a precomputed eigensystem.
pub fn operator_function_es(es: &EigenSystem, f: impl Fn(f64) -> C64) -> Array2<C64> {
    linalg::spectral_matrix(&es.values, &es.vectors, f)
}

/// f(H) for a Hermitian lattice operator.
pub fn operator_function(
    h: &LatticeOperator,
    f: impl Fn(f64) -> C64,
) -> Result<LatticeOperator> {
    let es = eig(h)?;
    Ok(LatticeOperator::new(h.window, operator_function_es(&es, f)))
}

/// Spectral projection onto eigenvalues <= mu. Errors when mu sits within
/// 1e-9 of the spectrum (ambiguous occupation).
pub fn fermi_projection(es: &EigenSystem, mu: f64) -> Result<LatticeOperator> {
    let dist = es
        .values
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min((v - mu).abs()));
    if dist < 1e-9 {
        return Err(Error::FermiOnSpectrum(dist));
    }
    let m = operator_function_es(es, |x| if x <= mu { ONE } else { C64::new(0.0, 0.0) });
    Ok(LatticeOperator::new(es.window, m).with_flags(OpFlags {
        hermitian: true,
        projection: true,
        ..OpFlags::default()
    }))
}

/// Number of eigenvalues at or below mu.
pub fn count_below(values: &[f64], mu: f64) -> usize {
    values.iter().filter(|&&v| v <= mu).count()
}

/// Weight of a vector on sites within `margin` of the window boundary.
pub fn boundary_weight(window: &LatticeWindow, vec: ndarray::ArrayView1<C64>, margin: i64) -> f64 {
    let mut acc = 0.0;
    for (i, site) in window.sites().enumerate() {
        if window.boundary_distance(site) < margin {
            acc += vec[i].norm_sqr();
        }
    }
    acc
}

/// Weight of a vector on sites within distance `dist` of the interface set.
pub fn interface_weight(window: &LatticeWindow, vec: ndarray::ArrayView1<C64>, dist: i64) -> f64 {
    let mut acc = 0.0;
    for (i, site) in window.sites().enumerate() {
        if interface_distance(site) <= dist {
            acc += vec[i].norm_sqr();
        }
    }
    acc
}

/// An energy interval certified free of bulk spectrum, with a Fermi level
/// inside it.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GapWindow {
    pub lo: f64,
    pub hi: f64,
    pub mu: f64,
}

impl GapWindow {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GapSearch {
    /// boundary collar width used to discard truncation edge states
    pub margin: i64,
    /// an eigenvalue is an edge artifact when at least this fraction of its
    /// weight sits in the collar
    pub boundary_weight_threshold: f64,
    /// smallest acceptable gap width
    pub min_width: f64,
}

impl Default for GapSearch {
    fn default() -> Self {
        Self { margin: 6, boundary_weight_threshold: 0.5, min_width: 0.05 }
    }
}

fn filtered_spectrum(es: &EigenSystem, opts: &GapSearch) -> Vec<f64> {
    (0..es.dimension())
        .filter(|&k| {
            boundary_weight(&es.window, es.vectors.column(k), opts.margin)
                < opts.boundary_weight_threshold
        })
        .map(|k| es.values[k])
        .collect()
}

/// Widest interval inside `candidate` free of the (boundary-filtered)
/// spectra of both operators; the Fermi level is the midpoint.
pub fn detect_common_gap(
    es_a: &EigenSystem,
    es_b: &EigenSystem,
    candidate: (f64, f64),
    opts: &GapSearch,
) -> Result<GapWindow> {
    let (clo, chi) = candidate;
    if !(clo < chi) {
        return Err(Error::InvalidSpec("empty candidate range".into()));
    }
    let mut pts: Vec<f64> = Vec::new();
    for es in [es_a, es_b] {
        pts.extend(
            filtered_spectrum(es, opts)
                .into_iter()
                .filter(|&v| v > clo && v < chi),
        );
    }
    pts.push(clo);
    pts.push(chi);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let mut best = (0.0f64, clo, clo);
    for w in pts.windows(2) {
        let width = w[1] - w[0];
        if width > best.0 {
            best = (width, w[0], w[1]);
        }
    }
    if best.0 < opts.min_width {
        return Err(Error::NoCommonGap(best.0));
    }
    Ok(GapWindow { lo: best.1, hi: best.2, mu: 0.5 * (best.1 + best.2) })
}

/// Nondecreasing C-infinity step: 0 at or below `lo`, 1 at or above `hi`,
/// the standard mollifier bridge sigma(s) = f(s)/(f(s)+f(1-s)) with
/// f(s) = e^{-1/s} in between.
#[derive(Debug, Clone, Copy)]
pub struct SmoothStep {
    pub lo: f64,
    pub hi: f64,
}

fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl SmoothStep {
    pub fn new(gap: &GapWindow) -> Self {
        assert!(gap.lo < gap.hi);
        Self { lo: gap.lo, hi: gap.hi }
    }

    pub fn g(&self, x: f64) -> f64 {
        let s = (x - self.lo) / (self.hi - self.lo);
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else {
            let f = bump(s);
            f / (f + bump(1.0 - s))
        }
    }

    /// analytic derivative of `g`
    pub fn dg(&self, x: f64) -> f64 {
        let w = self.hi - self.lo;
        let s = (x - self.lo) / w;
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let f = bump(s);
        let fc = bump(1.0 - s);
        // f'(s) = f(s)/s^2
        let df = f / (s * s);
        let dfc = fc / ((1.0 - s) * (1.0 - s));
        ((df * fc + f * dfc) / ((f + fc) * (f + fc))) / w
    }
}

pub fn smooth_step(gap: &GapWindow) -> SmoothStep {
    SmoothStep::new(gap)
}

/// Gap unitary u_Delta = e^{2 pi i g(H)}; differs from the identity only on
/// spectrum inside the gap, hence (for an interface system) on states
/// localized near the interface.
pub fn gap_unitary(es: &EigenSystem, gap: &GapWindow) -> LatticeOperator {
    let step = SmoothStep::new(gap);
    let m = operator_function_es(es, |x| phase(crate::lattice::TAU * step.g(x)));
    let op = LatticeOperator::new(es.window, m).with_flags(OpFlags {
        unitary_on_interior: true,
        ..OpFlags::default()
    });
    op
}

/// Selected columns of the gap unitary (sites given by window indices).
pub fn gap_unitary_columns(es: &EigenSystem, gap: &GapWindow, cols: &[usize]) -> Array2<C64> {
    let step = SmoothStep::new(gap);
    linalg::spectral_columns(&es.values, &es.vectors, |x| phase(crate::lattice::TAU * step.g(x)), cols)
}

/// Column-mass profile of (U - 1) against distance from the interface set:
/// entry k is the largest column l2-mass among sites at interface distance
/// k. Used for decay-length fits.
pub fn interface_decay_profile(u: &LatticeOperator, max_dist: i64) -> Vec<f64> {
    let window = &u.window;
    let n = window.dimension();
    let mut prof = vec![0.0f64; (max_dist + 1) as usize];
    for (j, site) in window.sites().enumerate() {
        let d = interface_distance(site);
        if d > max_dist {
            continue;
        }
        let mut mass = 0.0;
        for i in 0..n {
            let delta = u.matrix[(i, j)] - if i == j { ONE } else { C64::new(0.0, 0.0) };
            mass += delta.norm_sqr();
        }
        let e = &mut prof[d as usize];
        *e = e.max(mass.sqrt());
    }
    prof
}

/// Least-squares slope of log(y) against x over entries with y > floor.
pub fn log_linear_slope(ys: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ys
        .iter()
        .enumerate()
        .filter(|(_, &y)| y > floor)
        .map(|(i, &y)| (i as f64, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Smallest singular value of (H - mu) over vectors supported on interior
/// sites: sqrt of the lowest eigenvalue of the interior block of
/// (H - mu)^2. Excludes truncation-boundary artifacts from invertibility
/// verdicts.
pub fn smallest_interior_singular(h: &LatticeOperator, mu: f64, margin: i64) -> Result<f64> {
    let n = h.dimension();
    let ids = h.window.interior_indices(margin);
    if ids.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut shifted = h.matrix.clone();
    for i in 0..n {
        shifted[(i, i)] -= C64::new(mu, 0.0);
    }
    // columns of (H - mu) on the interior index set
    let mut cols = Array2::<C64>::zeros((n, ids.len()));
    for (c, &j) in ids.iter().enumerate() {
        for i in 0..n {
            cols[(i, c)] = shifted[(i, j)];
        }
    }
    let gram = linalg::adj_mul(&cols, &cols);
    let lam = linalg::smallest_eigenvalue(&gram)?;
    Ok(lam.max(0.0).sqrt())
}

/// Per-eigenstate spectrum table: (index, eigenvalue, interface weight,
/// boundary weight).
pub fn spectrum_rows(es: &EigenSystem, interface_dist: i64, margin: i64) -> Vec<(usize, f64, f64, f64)> {
    (0..es.dimension())
        .map(|k| {
            let col = es.vectors.column(k);
            (
                k,
                es.values[k],
                interface_weight(&es.window, col, interface_dist),
                boundary_weight(&es.window, col, margin),
            )
        })
        .collect()
}

/// Diagonal position operator N_i over a window.
pub fn position_diagonal(window: &LatticeWindow, direction: u8) -> Array1<f64> {
    let pick = |s: Site| -> f64 {
        match direction {
            1 => s.0 as f64,
            _ => s.1 as f64,
        }
    };
    Array1::from_iter(window.sites().map(pick))
}
