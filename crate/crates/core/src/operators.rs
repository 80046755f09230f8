//! Physical Hamiltonians: Harper operators for the quarter-plane field and
//! its bulk / half-plane (Iwatsuka-type) limits, the corner-state example
//! family, and the 1-d Rice-Mele pump family.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::lattice::{
    build_gauge, magnetic_translation, FieldProfile, IndicatorSet, LatticeOperator,
    LatticeWindow, MagneticField, OpFlags, Site, TAU,
};
use crate::linalg::{self, max_abs_diff, phase, ONE, ZERO};
#[cfg(test)]
use crate::linalg::{adj_mul, mul};
use crate::{Error, Result};

/// Which field profile feeds the gauge of a Harper operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// full quarter-plane system
    Quarter,
    /// constant b_corner everywhere
    BulkCorner,
    /// constant b_star everywhere
    BulkStar,
    /// n2 -> +inf limit: field depends only on n1
    IwatsukaU,
    /// n1 -> +inf limit: field depends only on n2
    IwatsukaR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    /// Periodic wrap in both directions; only admissible for the bulk kinds
    /// and only when the flux through the seam is an integer number of flux
    /// quanta (b * width2 in 2*pi*Z).
    Torus,
}

/// Assembly recipe for a Harper-type Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub field: MagneticField,
    pub window: LatticeWindow,
    pub kind: HamiltonianKind,
    pub interface_potential: Option<LatticeOperator>,
    /// Quarter kind only: compress to the quadrant Q_0 (the other material
    /// is the vacuum).
    pub vacuum_star: bool,
    pub boundary: Boundary,
    /// admissible distance of the interface potential from the interface set
    pub potential_support: i64,
}

impl HamiltonianSpec {
    pub fn new(field: MagneticField, window: LatticeWindow, kind: HamiltonianKind) -> Self {
        Self {
            field,
            window,
            kind,
            interface_potential: None,
            vacuum_star: false,
            boundary: Boundary::Open,
            potential_support: 3,
        }
    }

    pub fn with_potential(mut self, v: LatticeOperator) -> Self {
        self.interface_potential = Some(v);
        self
    }

    pub fn with_vacuum_star(mut self) -> Self {
        self.vacuum_star = true;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    fn profile(&self) -> FieldProfile {
        match self.kind {
            HamiltonianKind::Quarter => FieldProfile::Quarter,
            HamiltonianKind::BulkCorner => FieldProfile::UniformCorner,
            HamiltonianKind::BulkStar => FieldProfile::UniformStar,
            HamiltonianKind::IwatsukaU => FieldProfile::StepN1,
            HamiltonianKind::IwatsukaR => FieldProfile::StepN2,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.interface_potential.is_some() && self.kind != HamiltonianKind::Quarter {
            return Err(Error::InvalidSpec(
                "interface potential only enters the quarter-plane Hamiltonian".into(),
            ));
        }
        if let Some(v) = &self.interface_potential {
            if v.window != self.window {
                return Err(Error::InvalidSpec("interface potential window mismatch".into()));
            }
            let d = linalg::hermiticity_defect(&v.matrix);
            if d >= 1e-12 {
                return Err(Error::NonHermitian(d));
            }
            for i in 0..v.dimension() {
                for j in 0..v.dimension() {
                    if v.matrix[(i, j)].norm() > 0.0 {
                        let (a, b) = (self.window.site(i), self.window.site(j));
                        if interface_distance(a) > self.potential_support
                            || interface_distance(b) > self.potential_support
                        {
                            return Err(Error::InvalidSpec(format!(
                                "interface potential supported away from the interface at {a:?},{b:?}"
                            )));
                        }
                    }
                }
            }
        }
        if self.vacuum_star && self.kind != HamiltonianKind::Quarter {
            return Err(Error::InvalidSpec("vacuum compression is a quarter-kind option".into()));
        }
        if self.boundary == Boundary::Torus {
            match self.kind {
                HamiltonianKind::BulkCorner | HamiltonianKind::BulkStar => {
                    let b = match self.kind {
                        HamiltonianKind::BulkCorner => self.field.b_corner,
                        _ => self.field.b_star,
                    };
                    let q = b * self.window.width2() as f64 / TAU;
                    if (q - q.round()).abs() > 1e-9 {
                        return Err(Error::InvalidSpec(
                            "torus boundary needs integer flux through the seam".into(),
                        ));
                    }
                    if !self.field.perturbation().is_empty() {
                        return Err(Error::InvalidSpec(
                            "torus boundary incompatible with a perturbation".into(),
                        ));
                    }
                }
                _ => {
                    return Err(Error::InvalidSpec(
                        "torus boundary only defined for the bulk kinds".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// L1 distance from the interface set {(n1,0): n1 >= 0} u {(0,n2): n2 >= 0}.
pub fn interface_distance(n: Site) -> i64 {
    let horiz = n.1.abs() + (-n.0).max(0);
    let vert = n.0.abs() + (-n.1).max(0);
    horiz.min(vert)
}

fn translation_with_boundary(
    field: &MagneticField,
    window: &LatticeWindow,
    direction: u8,
    boundary: Boundary,
) -> LatticeOperator {
    let mut s = magnetic_translation(field, window, direction);
    if boundary == Boundary::Torus {
        let gauge = build_gauge(field, window);
        match direction {
            1 => {
                for n2 in window.n2_min..=window.n2_max {
                    let dst = window.index((window.n1_min, n2)).expect("edge site");
                    let src = window.index((window.n1_max, n2)).expect("edge site");
                    // the standard gauge phase depends only on n2 for the
                    // bulk kinds, so the wrap bond carries the same phase
                    s.matrix[(dst, src)] = phase(gauge.phase1((window.n1_min, n2)));
                }
            }
            _ => {
                for n1 in window.n1_min..=window.n1_max {
                    let dst = window.index((n1, window.n2_min)).expect("edge site");
                    let src = window.index((n1, window.n2_max)).expect("edge site");
                    s.matrix[(dst, src)] = ONE;
                }
            }
        }
    }
    s
}

/// H = s1 + s1^dagger + s2 + s2^dagger (+ v for the quarter kind), with the
/// field profile selected by the kind.
pub fn harper_hamiltonian(spec: &HamiltonianSpec) -> Result<LatticeOperator> {
    spec.validate()?;
    let field = spec.field.reprofiled(spec.profile());
    let s1 = translation_with_boundary(&field, &spec.window, 1, spec.boundary);
    let s2 = translation_with_boundary(&field, &spec.window, 2, spec.boundary);
    let mut h =
        &s1.matrix + &linalg::adjoint(&s1.matrix) + &s2.matrix + &linalg::adjoint(&s2.matrix);
    if let Some(v) = &spec.interface_potential {
        h = h + &v.matrix;
    }
    if spec.vacuum_star {
        let q0 = IndicatorSet::Q((0, 0));
        for (i, row_site) in spec.window.sites().enumerate() {
            for (j, col_site) in spec.window.sites().enumerate() {
                if !(q0.contains(row_site) && q0.contains(col_site)) {
                    h[(i, j)] = ZERO;
                }
            }
        }
    }
    let op = LatticeOperator::new(spec.window, h).with_flags(OpFlags {
        hermitian: true,
        ..OpFlags::default()
    });
    op.validate_flags(0)?;
    Ok(op)
}

/// The two half-plane asymptotic Hamiltonians of a quarter spec:
/// (H_U: n2 -> +inf limit, H_R: n1 -> +inf limit). A compactly supported
/// field perturbation vanishes in both limits and is dropped; a nonzero
/// interface potential has no canonical image and is rejected.
pub fn asymptotic_pair(spec: &HamiltonianSpec) -> Result<(LatticeOperator, LatticeOperator)> {
    if spec.kind != HamiltonianKind::Quarter {
        return Err(Error::InvalidSpec("asymptotic pair is defined for the quarter kind".into()));
    }
    if spec.interface_potential.is_some() {
        return Err(Error::InvalidSpec(
            "asymptotic pair requires a vanishing interface potential".into(),
        ));
    }
    if spec.vacuum_star {
        return Err(Error::InvalidSpec(
            "asymptotic pair not defined for the vacuum-compressed system".into(),
        ));
    }
    let base = MagneticField::quarter(spec.field.b_corner, spec.field.b_star)?;
    let u = HamiltonianSpec::new(
        base.reprofiled(FieldProfile::StepN1),
        spec.window,
        HamiltonianKind::IwatsukaU,
    );
    let r = HamiltonianSpec::new(
        base.reprofiled(FieldProfile::StepN2),
        spec.window,
        HamiltonianKind::IwatsukaR,
    );
    Ok((harper_hamiltonian(&u)?, harper_hamiltonian(&r)?))
}

/// Sampled periodic loop of Hermitian operators over t in [0, 1].
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    pub samples: Vec<(f64, LatticeOperator)>,
    pub periodic: bool,
}

impl OperatorFamily {
    pub fn from_samples(samples: Vec<(f64, LatticeOperator)>, periodic: bool) -> Result<Self> {
        let fam = Self { samples, periodic };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::InvalidSpec("family needs at least two samples".into()));
        }
        if self.samples[0].0 != 0.0 || self.samples[self.samples.len() - 1].0 != 1.0 {
            return Err(Error::InvalidSpec("family grid must start at 0 and end at 1".into()));
        }
        for k in 1..self.samples.len() {
            if self.samples[k].0 <= self.samples[k - 1].0 {
                return Err(Error::InvalidSpec("family grid must be strictly increasing".into()));
            }
        }
        for (_, op) in &self.samples {
            let d = linalg::hermiticity_defect(&op.matrix);
            if d >= 1e-12 {
                return Err(Error::NonHermitian(d));
            }
        }
        if self.periodic {
            let d = max_abs_diff(
                &self.samples[0].1.matrix,
                &self.samples[self.samples.len() - 1].1.matrix,
            );
            if d >= 1e-12 {
                return Err(Error::FamilyNotPeriodic(d));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Orientation-reversed loop t -> 1 - t.
    pub fn reversed(&self) -> Self {
        let mut samples: Vec<(f64, LatticeOperator)> = self
            .samples
            .iter()
            .rev()
            .map(|(t, op)| (1.0 - t, op.clone()))
            .collect();
        if let Some(first) = samples.first_mut() {
            first.0 = 0.0;
        }
        if let Some(last) = samples.last_mut() {
            last.0 = 1.0;
        }
        Self { samples, periodic: self.periodic }
    }

    /// Traverse the loop twice (defined for periodic families).
    pub fn doubled(&self) -> Result<Self> {
        if !self.periodic {
            return Err(Error::InvalidSpec("doubling needs a periodic family".into()));
        }
        Self::concat(self, self)
    }

    /// Concatenate two paths into one over [0, 1]; the seam must be
    /// continuous (last sample of `a` equal to the first of `b` within
    /// 1e-10). The result is periodic when the outer endpoints agree.
    pub fn concat(a: &Self, b: &Self) -> Result<Self> {
        let seam = max_abs_diff(
            &a.samples[a.len() - 1].1.matrix,
            &b.samples[0].1.matrix,
        );
        if seam >= 1e-10 {
            return Err(Error::InvalidSpec(format!(
                "discontinuous concatenation seam ({seam:.3e})"
            )));
        }
        let mut samples = Vec::with_capacity(a.len() + b.len() - 1);
        for (t, op) in &a.samples {
            samples.push((t / 2.0, op.clone()));
        }
        for (t, op) in b.samples.iter().skip(1) {
            samples.push((0.5 + t / 2.0, op.clone()));
        }
        if let Some(last) = samples.last_mut() {
            last.0 = 1.0;
        }
        let periodic = max_abs_diff(
            &a.samples[0].1.matrix,
            &b.samples[b.len() - 1].1.matrix,
        ) < 1e-12;
        Self::from_samples(samples, periodic)
    }
}

pub fn uniform_grid(samples: usize) -> Vec<f64> {
    assert!(samples >= 2);
    (0..samples).map(|k| k as f64 / (samples - 1) as f64).collect()
}

/// exp(t Log C) for the cyclic magnetic shift C of one window row, built
/// from its explicit Fourier eigensystem; branch cut of the logarithm at
/// -pi. `adjoint` selects C^dagger instead. `phases[x]` is the bond phase
/// onto offset x from offset x-1; entry 0 is ignored and replaced by the
/// zero-total-flux wrap.
fn cyclic_shift_power(phases: &[f64], t: f64, adjoint: bool) -> Array2<C64> {
    let l = phases.len();
    let lf = l as f64;
    // diagonal similarity trivializing the bond phases:
    // d(0) = 1, d(x) = d(x-1) e^{-i phi(x)}
    let mut d = vec![ONE; l];
    for x in 1..l {
        d[x] = d[x - 1] * phase(-phases[x]);
    }
    let ks: Vec<i64> = if adjoint {
        // eigenvalues e^{+2 pi i k / L}: principal log needs k in (-L/2, L/2]
        (0..l as i64)
            .map(|k| if k > l as i64 / 2 { k - l as i64 } else { k })
            .collect()
    } else {
        // eigenvalues e^{-2 pi i k / L}: principal log needs k in [-L/2, L/2)
        (0..l as i64)
            .map(|k| if 2 * k >= l as i64 { k - l as i64 } else { k })
            .collect()
    };
    let mut m = Array2::<C64>::zeros((l, l));
    for x in 0..l {
        for y in 0..l {
            let mut acc = ZERO;
            for &k in &ks {
                let arg = if adjoint {
                    TAU * k as f64 * (t + x as f64 - y as f64) / lf
                } else {
                    TAU * k as f64 * (x as f64 - y as f64 - t) / lf
                };
                acc += phase(arg);
            }
            m[(x, y)] = d[x].conj() * d[y] * acc / lf;
        }
    }
    m
}

/// Block operator over l^2(window) + l^2(window).
fn two_block(window: &LatticeWindow, b1: &Array2<C64>, b2: &Array2<C64>) -> Array2<C64> {
    let n = window.dimension();
    let mut m = Array2::<C64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = b1[(i, j)];
            m[(n + i, n + j)] = b2[(i, j)];
        }
    }
    m
}

/// Window standing for l^2(window) + l^2(window): the two copies are stacked
/// in the n2 direction purely as an indexing device.
fn double_window(window: &LatticeWindow) -> Result<LatticeWindow> {
    LatticeWindow::new(
        window.n1_min,
        window.n1_max,
        window.n2_min,
        window.n2_max + window.width2(),
    )
}

/// The corner-state example family
///   h(t) = u(t)^dagger diag(r_{(1,0)} + (1 - 2t) z_0 - r_0^perp, 1) u(t)
/// on l^2(window) + l^2(window), with u(t) = exp(t Log(C1 + C1^dagger))
/// interpolating from the identity to the cyclic completion of
/// (s1, s1^dagger). The loop is closed by setting the final sample to the
/// initial one after checking that the computed h(1) matches h(0) on
/// interior sites; the mismatch is confined to the truncation boundary.
pub fn corner_example_family(
    window: &LatticeWindow,
    field: &MagneticField,
    grid: &[f64],
) -> Result<OperatorFamily> {
    if !window.hosts_quarter_plane() {
        return Err(Error::InvalidSpec("corner family needs a quarter-plane window".into()));
    }
    if grid.len() < 3 || grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
        return Err(Error::InvalidSpec("corner family grid must cover [0,1]".into()));
    }
    let n = window.dimension();
    let l1 = window.width1() as usize;
    let gauge = build_gauge(field, window);

    let row_phases: Vec<Vec<f64>> = (window.n2_min..=window.n2_max)
        .map(|n2| {
            (0..l1)
                .map(|x| gauge.phase1((window.n1_min + x as i64, n2)))
                .collect()
        })
        .collect();

    // diagonal of the first block of M(t): +1 on R_{(1,0)}, 1-2t at the
    // origin, -1 off R_0
    let r10 = IndicatorSet::R((1, 0));
    let diag_m1 = |t: f64| -> Vec<f64> {
        window
            .sites()
            .map(|s| {
                if r10.contains(s) {
                    1.0
                } else if s == (0, 0) {
                    1.0 - 2.0 * t
                } else {
                    -1.0
                }
            })
            .collect()
    };

    let build_sample = |t: f64| -> Array2<C64> {
        let d1 = diag_m1(t);
        let mut b1 = Array2::<C64>::zeros((n, n));
        for (r, phases) in row_phases.iter().enumerate() {
            let u = cyclic_shift_power(phases, t, false);
            // u^dagger diag(d) u on this row block
            for x in 0..l1 {
                for y in 0..l1 {
                    let mut acc = ZERO;
                    for k in 0..l1 {
                        acc += u[(k, x)].conj() * d1[r * l1 + k] * u[(k, y)];
                    }
                    b1[(r * l1 + x, r * l1 + y)] = acc;
                }
            }
        }
        // second block: u2^dagger 1 u2 = 1 exactly
        let b2 = Array2::<C64>::eye(n);
        let mut m = two_block(window, &b1, &b2);
        // symmetrize away rounding noise
        for i in 0..2 * n {
            for j in 0..i {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
            let re = m[(i, i)].re;
            m[(i, i)] = C64::new(re, 0.0);
        }
        m
    };

    let first = build_sample(0.0);
    let last = build_sample(1.0);
    // loop-closure check: h(1) equals h(0) on interior sites; the mismatch
    // of the two operators is confined to the truncation boundary, so the
    // family is periodic as a loop but not entrywise on the full window
    let interior = window.interior_indices(1);
    let mut defect = 0.0f64;
    for &i in &interior {
        for &j in &interior {
            defect = defect.max((first[(i, j)] - last[(i, j)]).norm());
            defect = defect.max((first[(n + i, n + j)] - last[(n + i, n + j)]).norm());
        }
    }
    if defect >= 1e-10 {
        return Err(Error::FamilyNotPeriodic(defect));
    }

    let big = double_window(window)?;
    let flags = OpFlags { hermitian: true, ..OpFlags::default() };
    let mut out = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let m = if k == 0 {
            first.clone()
        } else if k == grid.len() - 1 {
            last.clone()
        } else {
            build_sample(t)
        };
        out.push((t, LatticeOperator::new(big, m).with_flags(flags)));
    }
    OperatorFamily::from_samples(out, false)
}

/// Asymptotic families of the corner example under the two half-plane
/// evaluations: the n2 -> +inf image is diag(-1, 1) and the n1 -> +inf image
/// is diag(2 chi_{n2=0} - 1, 1); both are t-independent.
pub fn corner_asymptotic_families(
    window: &LatticeWindow,
    grid: &[f64],
) -> Result<(OperatorFamily, OperatorFamily)> {
    let n = window.dimension();
    let big = double_window(window)?;
    let mut b1_u = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        b1_u[(i, i)] = -ONE;
    }
    let m_u = two_block(window, &b1_u, &Array2::<C64>::eye(n));
    let mut b1_r = Array2::<C64>::zeros((n, n));
    for (i, site) in window.sites().enumerate() {
        b1_r[(i, i)] = if site.1 == 0 { ONE } else { -ONE };
    }
    let m_r = two_block(window, &b1_r, &Array2::<C64>::eye(n));
    let flags = OpFlags { hermitian: true, ..OpFlags::default() };
    let fam = |m: Array2<C64>| -> Result<OperatorFamily> {
        OperatorFamily::from_samples(
            grid.iter()
                .map(|&t| (t, LatticeOperator::new(big, m.clone()).with_flags(flags)))
                .collect(),
            true,
        )
    };
    Ok((fam(m_u)?, fam(m_r)?))
}

/// Rice-Mele Bloch fiber at cell momentum k: staggered potential `stagger`
/// on the diagonal, intra/inter-cell hoppings 1 +- delta.
pub fn rice_mele_bloch(delta: f64, stagger: f64, k: f64) -> Array2<C64> {
    let rho = C64::new(1.0 + delta, 0.0) + phase(-k) * (1.0 - delta);
    ndarray::array![
        [C64::new(stagger, 0.0), rho],
        [rho.conj(), C64::new(-stagger, 0.0)]
    ]
}

/// Rice-Mele path delta(t) = delta0 sin(2 pi t), stagger(t) = stagger0 cos(2 pi t).
pub fn rice_mele_path(delta0: f64, stagger0: f64, t: f64) -> (f64, f64) {
    (delta0 * (TAU * t).sin(), stagger0 * (TAU * t).cos())
}

fn rice_mele_chain_family(
    length: i64,
    grid: &[f64],
    delta0: f64,
    stagger0: f64,
    ring: bool,
    far_end_cap: f64,
) -> Result<OperatorFamily> {
    if length < 20 || length % 2 != 0 {
        return Err(Error::InvalidSpec("pump chain length must be even and >= 20".into()));
    }
    if grid.len() < 3 || grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
        return Err(Error::InvalidSpec("pump grid must cover [0,1]".into()));
    }
    // admissibility on the Bloch reference, 64 k-points
    let mut min_gap = f64::INFINITY;
    for &t in grid {
        let (delta, stagger) = rice_mele_path(delta0, stagger0, t);
        for kk in 0..64 {
            let k = TAU * kk as f64 / 64.0;
            let h = rice_mele_bloch(delta, stagger, k);
            let e = (stagger * stagger + h[(0, 1)].norm_sqr()).sqrt();
            min_gap = min_gap.min(2.0 * e);
        }
    }
    if min_gap <= 1e-6 {
        return Err(Error::FamilyNotAdmissible(min_gap));
    }

    let window = LatticeWindow::chain(length)?;
    let n = window.dimension();
    let sample = |t: f64| -> Array2<C64> {
        let (delta, stagger) = rice_mele_path(delta0, stagger0, t);
        let mut h = Array2::<C64>::zeros((n, n));
        for j in 1..=length {
            let i = window.index((j, 0)).expect("chain site");
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            h[(i, i)] = C64::new(sign * stagger, 0.0);
            if j < length {
                let ip = window.index((j + 1, 0)).expect("chain site");
                let hop = if j % 2 == 1 { 1.0 + delta } else { 1.0 - delta };
                h[(i, ip)] = C64::new(hop, 0.0);
                h[(ip, i)] = C64::new(hop, 0.0);
            }
        }
        if ring {
            // wrap bond: length is even, so the seam hop closes the
            // dimerization pattern consistently
            let a = window.index((length, 0)).expect("chain site");
            let b = window.index((1, 0)).expect("chain site");
            let hop = 1.0 - delta;
            h[(a, b)] = C64::new(hop, 0.0);
            h[(b, a)] = C64::new(hop, 0.0);
        } else if far_end_cap != 0.0 {
            let a = window.index((length, 0)).expect("chain site");
            h[(a, a)] += C64::new(far_end_cap, 0.0);
        }
        h
    };
    let first = sample(0.0);
    let d = max_abs_diff(&sample(1.0), &first);
    if d >= 1e-12 {
        return Err(Error::FamilyNotPeriodic(d));
    }
    let flags = OpFlags { hermitian: true, ..OpFlags::default() };
    let mut out = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let m = if k == grid.len() - 1 { first.clone() } else { sample(t) };
        out.push((t, LatticeOperator::new(window, m).with_flags(flags)));
    }
    OperatorFamily::from_samples(out, true)
}

/// Open-boundary Rice-Mele pump family on a chain of `length` sites: the
/// truncated system whose edge-state crossings carry the spectral flow.
///
/// On a symmetric finite chain the two edge branches cross zero at the same
/// instant with opposite velocities (the half-line geometry has only one
/// edge); `far_end_cap` adds an on-site potential at the last site to push
/// the far-end branch off that degeneracy.
pub fn pump_family_capped(
    length: i64,
    grid: &[f64],
    delta0: f64,
    stagger0: f64,
    far_end_cap: f64,
) -> Result<OperatorFamily> {
    rice_mele_chain_family(length, grid, delta0, stagger0, false, far_end_cap)
}

/// Open-boundary Rice-Mele family without a far-end cap.
pub fn pump_family(length: i64, grid: &[f64], delta0: f64, stagger0: f64) -> Result<OperatorFamily> {
    rice_mele_chain_family(length, grid, delta0, stagger0, false, 0.0)
}

/// Ring (periodic chain) Rice-Mele family: the bulk reference on which the
/// polarization integral lives; gapped at 0 along the whole path.
pub fn pump_ring_family(
    length: i64,
    grid: &[f64],
    delta0: f64,
    stagger0: f64,
) -> Result<OperatorFamily> {
    rice_mele_chain_family(length, grid, delta0, stagger0, true, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigvals;

    fn quarter_field() -> MagneticField {
        MagneticField::quarter(TAU / 3.0, TAU / 5.0).unwrap()
    }

    #[test]
    fn free_laplacian_torus_spectrum_is_exact() {
        let l = 12i64;
        let w = LatticeWindow::centered_square(l).unwrap();
        let spec =
            HamiltonianSpec::new(MagneticField::constant(0.0), w, HamiltonianKind::BulkCorner)
                .with_boundary(Boundary::Torus);
        let h = harper_hamiltonian(&spec).unwrap();
        let got = hermitian_eigvals(&h.matrix).unwrap();
        let mut want: Vec<f64> = (0..l)
            .flat_map(|a| {
                (0..l).map(move |b| {
                    2.0 * (TAU * a as f64 / l as f64).cos()
                        + 2.0 * (TAU * b as f64 / l as f64).cos()
                })
            })
            .collect();
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, e) in got.iter().zip(want.iter()) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
    }

    #[test]
    fn free_laplacian_open_spectrum_is_exact() {
        // open box: eigenvalues 2cos(pi a/(L+1)) + 2cos(pi b/(L+1))
        let l = 10i64;
        let w = LatticeWindow::centered_square(l).unwrap();
        let spec =
            HamiltonianSpec::new(MagneticField::constant(0.0), w, HamiltonianKind::BulkCorner);
        let h = harper_hamiltonian(&spec).unwrap();
        let got = hermitian_eigvals(&h.matrix).unwrap();
        let mut want: Vec<f64> = (1..=l)
            .flat_map(|a| {
                (1..=l).map(move |b| {
                    2.0 * (std::f64::consts::PI * a as f64 / (l + 1) as f64).cos()
                        + 2.0 * (std::f64::consts::PI * b as f64 / (l + 1) as f64).cos()
                })
            })
            .collect();
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, e) in got.iter().zip(want.iter()) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
        assert!(got[0] >= -4.0 - 1e-9 && *got.last().unwrap() <= 4.0 + 1e-9);
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let w = LatticeWindow::centered_square(10).unwrap();
        for kind in [
            HamiltonianKind::Quarter,
            HamiltonianKind::BulkCorner,
            HamiltonianKind::BulkStar,
            HamiltonianKind::IwatsukaU,
            HamiltonianKind::IwatsukaR,
        ] {
            let spec = HamiltonianSpec::new(quarter_field(), w, kind);
            let h = harper_hamiltonian(&spec).unwrap();
            assert!(linalg::hermiticity_defect(&h.matrix) < 1e-12);
        }
    }

    #[test]
    fn potential_rejected_for_bulk_kind() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let v = LatticeOperator::new(w, Array2::<C64>::zeros((w.dimension(), w.dimension())));
        let spec = HamiltonianSpec::new(quarter_field(), w, HamiltonianKind::BulkCorner)
            .with_potential(v);
        assert!(harper_hamiltonian(&spec).is_err());
    }

    #[test]
    fn potential_support_validated() {
        let w = LatticeWindow::centered_square(12).unwrap();
        let n = w.dimension();
        let mut far = Array2::<C64>::zeros((n, n));
        let i = w.index((-4, -4)).unwrap();
        far[(i, i)] = ONE;
        let spec = HamiltonianSpec::new(quarter_field(), w, HamiltonianKind::Quarter)
            .with_potential(LatticeOperator::new(w, far));
        assert!(harper_hamiltonian(&spec).is_err());

        let mut near = Array2::<C64>::zeros((n, n));
        let i = w.index((3, 1)).unwrap();
        near[(i, i)] = C64::new(0.4, 0.0);
        let spec = HamiltonianSpec::new(quarter_field(), w, HamiltonianKind::Quarter)
            .with_potential(LatticeOperator::new(w, near));
        assert!(harper_hamiltonian(&spec).is_ok());
    }

    #[test]
    fn quarter_agrees_with_asymptotics_in_deep_regions() {
        let w = LatticeWindow::centered_square(12).unwrap();
        let spec = HamiltonianSpec::new(quarter_field(), w, HamiltonianKind::Quarter);
        let h = harper_hamiltonian(&spec).unwrap();
        let (hu, hr) = asymptotic_pair(&spec).unwrap();
        let mut worst_r = 0.0f64;
        let mut worst_u = 0.0f64;
        for (i, a) in w.sites().enumerate() {
            for (j, b) in w.sites().enumerate() {
                if a.0 >= 1 && b.0 >= 1 {
                    worst_r = worst_r.max((h.matrix[(i, j)] - hr.matrix[(i, j)]).norm());
                }
                if a.1 >= 1 && b.1 >= 1 {
                    worst_u = worst_u.max((h.matrix[(i, j)] - hu.matrix[(i, j)]).norm());
                }
            }
        }
        assert!(worst_r < 1e-12, "H vs H_R deep-region defect {worst_r}");
        assert!(worst_u < 1e-12, "H vs H_U deep-region defect {worst_u}");
    }

    #[test]
    fn equal_fields_make_asymptotics_bulk() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let f = MagneticField::constant(0.7);
        let hu = harper_hamiltonian(&HamiltonianSpec::new(
            f.reprofiled(FieldProfile::StepN1),
            w,
            HamiltonianKind::IwatsukaU,
        ))
        .unwrap();
        let hr = harper_hamiltonian(&HamiltonianSpec::new(
            f.reprofiled(FieldProfile::StepN2),
            w,
            HamiltonianKind::IwatsukaR,
        ))
        .unwrap();
        let hb = harper_hamiltonian(&HamiltonianSpec::new(
            f,
            w,
            HamiltonianKind::BulkCorner,
        ))
        .unwrap();
        assert!(max_abs_diff(&hu.matrix, &hb.matrix) < 1e-14);
        assert!(max_abs_diff(&hr.matrix, &hb.matrix) < 1e-14);
    }

    #[test]
    fn iwatsuka_u_gauge_dressed_translation_invariance() {
        // s2 H_U s2^dagger equals H_U after the diagonal dressing e^{iG},
        // G(n) = sum_{m=1..n1} B_U(m), on interior sites
        let w = LatticeWindow::centered_square(12).unwrap();
        let f = quarter_field().reprofiled(FieldProfile::StepN1);
        let spec = HamiltonianSpec::new(f.clone(), w, HamiltonianKind::IwatsukaU);
        let h = harper_hamiltonian(&spec).unwrap();
        let shifted = crate::lattice::translate_operator(&h, (0, 1), &f).unwrap();
        let g = crate::lattice::diagonal_gauge(&w, |n| {
            let mut acc = 0.0;
            if n.0 > 0 {
                for m in 1..=n.0 {
                    acc += f.sample((m, 5));
                }
            } else {
                for m in (n.0 + 1)..=0 {
                    acc -= f.sample((m, 5));
                }
            }
            acc
        });
        let dressed = mul(&g, &crate::linalg::mul_adj(&shifted.matrix, &g));
        let dressed_op = LatticeOperator::new(w, dressed);
        assert!(dressed_op.interior_max_diff(&h, 3) < 1e-12);
    }

    #[test]
    fn corner_family_spectrum_and_interior_closure() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let grid = uniform_grid(11);
        let fam = corner_example_family(&w, &quarter_field(), &grid).unwrap();
        let dim = fam.samples[0].1.dimension();
        for (t, op) in &fam.samples {
            let vals = hermitian_eigvals(&op.matrix).unwrap();
            let mid = 1.0 - 2.0 * t;
            for v in &vals {
                let ok = (v + 1.0).abs() < 1e-10
                    || (v - 1.0).abs() < 1e-10
                    || (v - mid).abs() < 1e-10;
                assert!(ok, "unexpected eigenvalue {v} at t={t}");
            }
            if mid.abs() < 0.9 {
                let hits = vals.iter().filter(|v| (*v - mid).abs() < 1e-10).count();
                assert_eq!(hits, 1, "t={t}");
            }
            assert_eq!(vals.len(), dim);
        }
        // loop closure holds on interior sites; the operator-level defect
        // sits on the truncation boundary only
        let n = w.dimension();
        let first = &fam.samples[0].1;
        let last = &fam.samples[fam.len() - 1].1;
        let interior = w.interior_indices(1);
        for &i in &interior {
            for &j in &interior {
                assert!((first.matrix[(i, j)] - last.matrix[(i, j)]).norm() < 1e-10);
                assert!(
                    (first.matrix[(n + i, n + j)] - last.matrix[(n + i, n + j)]).norm() < 1e-10
                );
            }
        }
        assert!(crate::linalg::max_abs_diff(&first.matrix, &last.matrix) > 0.5);
    }

    #[test]
    fn corner_asymptotics_are_gapped_at_zero() {
        let w = LatticeWindow::centered_square(8).unwrap();
        let grid = uniform_grid(5);
        let (fu, fr) = corner_asymptotic_families(&w, &grid).unwrap();
        for fam in [fu, fr] {
            for (_, op) in &fam.samples {
                let vals = hermitian_eigvals(&op.matrix).unwrap();
                for v in vals {
                    assert!(v.abs() > 0.99);
                }
            }
        }
    }

    #[test]
    fn pump_family_periodic_and_gapped() {
        let fam = pump_family(20, &uniform_grid(21), 0.6, 1.0).unwrap();
        assert!(fam.periodic);
        fam.validate().unwrap();
        assert!(matches!(
            pump_family(20, &uniform_grid(21), 0.0, 0.0),
            Err(Error::FamilyNotAdmissible(_))
        ));
        assert!(pump_family(19, &uniform_grid(5), 0.6, 1.0).is_err());
    }

    #[test]
    fn reversed_and_doubled_grids() {
        let fam = pump_family(20, &uniform_grid(11), 0.6, 1.0).unwrap();
        let rev = fam.reversed();
        rev.validate().unwrap();
        assert_eq!(rev.samples[0].0, 0.0);
        let dbl = fam.doubled().unwrap();
        assert_eq!(dbl.len(), 21);
    }

    #[test]
    fn cyclic_power_endpoints() {
        // at t=1 the fractional power reproduces the cyclic shift itself
        let phases = vec![0.0, 0.3, -0.2, 0.5, 0.1, 0.0];
        let l = phases.len();
        let u1 = cyclic_shift_power(&phases, 1.0, false);
        let total: f64 = phases.iter().skip(1).sum();
        for x in 0..l {
            for y in 0..l {
                let want = if x == 0 && y == l - 1 {
                    phase(-total)
                } else if x > 0 && y == x - 1 {
                    phase(phases[x])
                } else {
                    ZERO
                };
                assert!((u1[(x, y)] - want).norm() < 1e-10, "({x},{y})");
            }
        }
        let u0 = cyclic_shift_power(&phases, 0.0, false);
        assert!(max_abs_diff(&u0, &Array2::eye(l)) < 1e-10);
        let um = cyclic_shift_power(&phases, 0.37, false);
        let g = adj_mul(&um, &um);
        assert!(max_abs_diff(&g, &Array2::eye(l)) < 1e-10);
        let ua = cyclic_shift_power(&phases, 1.0, true);
        assert!(max_abs_diff(&ua, &crate::linalg::adjoint(&u1)) < 1e-10);
    }
}
