//! Born-series terms of the Casimir-Polder potential of an atom near a
//! dielectric body, their microscopic many-atom counterparts, and the
//! verifier comparing the two.
//!
//! For a homogeneous body every term reduces to two geometric traces per
//! imaginary frequency u,
//!
//! ```text
//! T₁(u) = ∫ d³s Tr[G(r_A, s) G(s, r_A)]
//! T₂(u) = PV ∫∫ d³s₁ d³s₂ Tr[G(r_A, s₁) H(s₁, s₂) G(s₂, r_A)]
//! ```
//!
//! which [`BodyKernel`] tabulates on a fixed frequency rule. The
//! macroscopic terms weight them with the susceptibility χ, the
//! microscopic ones with the bare density Σ n α, and the l-channels with the
//! local-field weights n α q^η / (1 − Σnα/3).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::green::{green_coefficients, Background, MIN_SEPARATION};
use crate::potentials::{pair_trace, vdw_many_atom, vdw_pair_general, AtomAt};
use crate::quadrature::{default_scale, Compensated, FrequencyRule, QuadratureSpec, VolumeGrid};
use crate::response::{
    check_convergence, clausius_mosotti, q_factor, BodySpec, Constituent, Geometry,
};
use crate::{Error, Result, Vec3};

/// How χ is obtained from the composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Susceptibility {
    /// χ = Σnα / (1 − Σnα/3).
    #[default]
    ClausiusMosotti,
    /// χ = Σnα.
    Dilute,
}

/// Rule for the six-dimensional pair integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRule {
    /// Symmetric tensor-product Gauss sum over the body grid.
    #[default]
    GaussProduct,
    /// Two independent stratified samples of about `samples` points each.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Discretisation of the volume terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VolumeSpec {
    /// Nodes per axis of the body grid.
    pub grid: usize,
    pub frequency: FrequencyRule,
    /// Frequency map scale u₀; defaults to c/(2 d) with d the atom-body gap.
    pub scale: Option<f64>,
    /// Node pairs closer than this many grid spacings are dropped.
    pub exclusion: f64,
    pub susceptibility: Susceptibility,
    pub pair_rule: PairRule,
    /// Pass threshold of the equivalence check (relative discrepancy).
    pub tolerance: f64,
    /// Adaptive rule used for direct atom sums over point clouds.
    pub quadrature: QuadratureSpec,
}

impl Default for VolumeSpec {
    fn default() -> Self {
        Self {
            grid: 10,
            frequency: FrequencyRule::default(),
            scale: None,
            exclusion: 1.0,
            susceptibility: Susceptibility::ClausiusMosotti,
            pair_rule: PairRule::GaussProduct,
            tolerance: 5e-3,
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl VolumeSpec {
    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_susceptibility(mut self, s: Susceptibility) -> Self {
        self.susceptibility = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::InvalidInput("volume grid needs at least 2 nodes per axis".into()));
        }
        self.frequency.validate()?;
        if let Some(s) = self.scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput("frequency scale must be positive".into()));
            }
        }
        if !(self.exclusion >= 0.0 && self.exclusion.is_finite()) {
            return Err(Error::InvalidInput("exclusion factor must be non-negative".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        if let PairRule::MonteCarlo { samples, .. } = self.pair_rule {
            if samples < 8 {
                return Err(Error::InvalidInput("Monte Carlo rule needs at least 8 samples".into()));
            }
        }
        self.quadrature.validate()
    }
}

/// Per-node data of G(r_A, s) = A I + B r̂r̂ at every tabulated frequency.
struct AtomColumns {
    units: Vec<Vec3>,
    weights: Vec<f64>,
    points: Vec<Vec3>,
    /// [frequency][node]
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl AtomColumns {
    fn new(atom: &Vec3, grid: &VolumeGrid, props: &[(f64, f64)]) -> Result<Self> {
        let mut units = Vec::with_capacity(grid.len());
        let mut dists = Vec::with_capacity(grid.len());
        for s in &grid.points {
            let sep = atom - s;
            let d = sep.norm();
            if d < MIN_SEPARATION {
                return Err(Error::CoincidentPoints(d));
            }
            units.push(sep / d);
            dists.push(d);
        }
        let mut a = Vec::with_capacity(props.len());
        let mut b = Vec::with_capacity(props.len());
        for &(kappa, mu) in props {
            let (ca, cb): (Vec<f64>, Vec<f64>) =
                dists.iter().map(|&d| green_coefficients(d, kappa, mu)).unzip();
            a.push(ca);
            b.push(cb);
        }
        Ok(Self {
            units,
            weights: grid.weights.clone(),
            points: grid.points.clone(),
            a,
            b,
        })
    }
}

/// Geometric traces T₁(u), T₂(u) of one atom position and one body on a
/// fixed frequency rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyKernel {
    /// (u, weight) nodes of the frequency rule.
    pub frequencies: Vec<(f64, f64)>,
    pub t1: Vec<f64>,
    pub t2: Option<Vec<f64>>,
    /// Coefficient of the contact term of G at each frequency.
    pub delta: Vec<f64>,
    /// Volume nodes of the body grid.
    pub nodes: usize,
    /// Σ w₁ w₂ over node pairs dropped from T₂.
    pub excluded_measure: f64,
}

impl BodyKernel {
    /// Tabulate T₁ (and T₂ when `with_pairs`) for an atom at `atom`.
    pub fn new(
        atom: &Vec3,
        geometry: &Geometry,
        background: &Background,
        spec: &VolumeSpec,
        with_pairs: bool,
    ) -> Result<Self> {
        spec.validate()?;
        geometry.validate()?;
        background.validate()?;
        let gap = geometry.distance_to(atom);
        let inside = match geometry {
            Geometry::PointCloud { .. } => gap < MIN_SEPARATION,
            _ => gap <= 0.0,
        };
        if inside {
            return Err(Error::GeometryViolation("atom must lie outside the body".into()));
        }
        let scale = spec.scale.unwrap_or_else(|| default_scale(gap));
        let frequencies = spec.frequency.nodes(scale);
        let props: Vec<(f64, f64)> = frequencies.iter().map(|&(u, _)| background.propagation(u)).collect();
        let delta = frequencies.iter().map(|&(u, _)| background.delta_coefficient(u)).collect();

        let grid = VolumeGrid::for_geometry(geometry, spec.grid);
        let cols = AtomColumns::new(atom, &grid, &props)?;
        let t1 = (0..frequencies.len())
            .map(|k| {
                let mut acc = Compensated::default();
                for i in 0..cols.weights.len() {
                    let (a, b) = (cols.a[k][i], cols.b[k][i]);
                    acc.add(cols.weights[i] * (3.0 * a * a + 2.0 * a * b + b * b));
                }
                acc.value()
            })
            .collect();

        let (t2, excluded_measure) = if with_pairs {
            // the quasi-static part integrates to zero over a ball around any
            // interior point, so it can be subtracted for spheres
            let subtract = matches!(geometry, Geometry::Sphere { .. });
            let statics: Vec<f64> = frequencies
                .iter()
                .map(|&(u, _)| 3.0 * background.delta_coefficient(u) / (4.0 * PI))
                .collect();
            let pairs = match spec.pair_rule {
                PairRule::GaussProduct => {
                    let exclusion = spec.exclusion * grid.spacing;
                    pair_traces(&cols, &cols, true, exclusion, subtract, &props, &statics)
                }
                PairRule::MonteCarlo { samples, seed } => {
                    let m = (samples as f64).cbrt().round().max(2.0) as usize;
                    let outer_grid = VolumeGrid::stratified(geometry, m, seed);
                    let inner_grid = VolumeGrid::stratified(geometry, m, seed.wrapping_add(1));
                    let outer = AtomColumns::new(atom, &outer_grid, &props)?;
                    let inner = AtomColumns::new(atom, &inner_grid, &props)?;
                    let exclusion = spec.exclusion * outer_grid.spacing;
                    pair_traces(&outer, &inner, false, exclusion, subtract, &props, &statics)
                }
            };
            (Some(pairs.0), pairs.1)
        } else {
            (None, 0.0)
        };

        Ok(Self {
            frequencies,
            t1,
            t2,
            delta,
            nodes: grid.len(),
            excluded_measure,
        })
    }

    /// Σ_k w_k f(k, u_k) over the frequency rule.
    pub fn integrate<F: FnMut(usize, f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut acc = Compensated::default();
        for (k, &(u, w)) in self.frequencies.iter().enumerate() {
            acc.add(w * f(k, u)?);
        }
        Ok(acc.value())
    }

    fn t2(&self) -> Result<&[f64]> {
        self.t2
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("kernel was built without the pair integral".into()))
    }
}

/// Σ_ij w_i w_j Tr[a_i H_ij a_j] per frequency, with the quasi-static part
/// H_st(s_i − s_j) a_i subtracted when `subtract` is set. With `same` the two
/// node sets coincide and only i < j is visited.
fn pair_traces(
    outer: &AtomColumns,
    inner: &AtomColumns,
    same: bool,
    exclusion: f64,
    subtract: bool,
    props: &[(f64, f64)],
    statics: &[f64],
) -> (Vec<f64>, f64) {
    let nf = props.len();
    let mut acc = vec![Compensated::default(); nf];
    let mut excluded = Compensated::default();
    let sub = if subtract { 1.0 } else { 0.0 };
    for i in 0..outer.points.len() {
        let start = if same { i + 1 } else { 0 };
        if same {
            excluded.add(outer.weights[i] * outer.weights[i]);
        }
        let (si, ri, wi) = (outer.points[i], outer.units[i], outer.weights[i]);
        let mut row = vec![0.0; nf];
        for j in start..inner.points.len() {
            let sep = si - inner.points[j];
            let d = sep.norm();
            let w = wi * inner.weights[j];
            if d < exclusion || d < MIN_SEPARATION {
                excluded.add(if same { 2.0 * w } else { w });
                continue;
            }
            let unit = sep / d;
            let rj = inner.units[j];
            let c = ri.dot(&rj);
            let pi = ri.dot(&unit);
            let pj = rj.dot(&unit);
            let inv_d3 = 1.0 / (d * d * d);
            for k in 0..nf {
                let (kappa, mu) = props[k];
                let x = kappa * d;
                let pref = mu * (-x).exp() / (4.0 * PI * d * x * x);
                let ha = pref * (x * x + x + 1.0);
                let hb = -pref * (x * x + 3.0 * x + 3.0);
                let (ai, bi) = (outer.a[k][i], outer.b[k][i]);
                let (aj, bj) = (inner.a[k][j], inner.b[k][j]);
                let tr_ij = 3.0 * ai * aj + ai * bj + aj * bi + bi * bj * c * c;
                let proj_ij = ai * aj + ai * bj * pj * pj + bi * aj * pi * pi + bi * bj * pi * pj * c;
                let cross = ha * tr_ij + hb * proj_ij;
                // quasi-static tensor (I − 3R̂R̂)/(4π ε u² d³) contracted with a_i on both sides
                let st = statics[k] * inv_d3;
                let self_i = st * (3.0 * ai * ai + 2.0 * ai * bi + bi * bi)
                    - 3.0 * st * (ai * ai + 2.0 * ai * bi * pi * pi + bi * bi * pi * pi);
                let value = if same {
                    let self_j = st * (3.0 * aj * aj + 2.0 * aj * bj + bj * bj)
                        - 3.0 * st * (aj * aj + 2.0 * aj * bj * pj * pj + bj * bj * pj * pj);
                    2.0 * cross - sub * (self_i + self_j)
                } else {
                    cross - sub * self_i
                };
                row[k] += w * value;
            }
        }
        for k in 0..nf {
            acc[k].add(row[k]);
        }
    }
    (acc.iter().map(|a| a.value()).collect(), excluded.value())
}

fn check_order(k: usize) -> Result<()> {
    if k == 1 || k == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(k))
    }
}

fn is_empty(body: &BodySpec) -> bool {
    body.composition.iter().all(|c| c.density == 0.0)
}

fn density_sum(body: &BodySpec, u: f64) -> f64 {
    body.density_polarizability(u)
}

/// χ(iu) of the body under the chosen susceptibility model.
fn chi(body: &BodySpec, model: Susceptibility, u: f64) -> Result<f64> {
    match model {
        Susceptibility::ClausiusMosotti => clausius_mosotti(&body.composition, u),
        Susceptibility::Dilute => Ok(density_sum(body, u)),
    }
}

/// Macroscopic Born term Δ_kU from a tabulated kernel.
pub fn born_from_kernel(kernel: &BodyKernel, atom: &AtomAt, body: &BodySpec, k: usize, model: Susceptibility) -> Result<f64> {
    check_order(k)?;
    let value = match k {
        1 => kernel.integrate(|i, u| Ok(u.powi(4) * atom.species.alpha(u) * chi(body, model, u)? * kernel.t1[i]))?,
        _ => {
            let t2 = kernel.t2()?;
            kernel.integrate(|i, u| {
                let x = chi(body, model, u)?;
                Ok(u.powi(6) * atom.species.alpha(u) * x * x * (kernel.delta[i] * kernel.t1[i] + t2[i]))
            })?
        }
    };
    let sign = if k == 1 { -1.0 } else { 1.0 };
    Ok(sign * value / (2.0 * PI))
}

/// Δ_k^lU from local-field weights n α q^η / (1 − Σnα/3).
pub fn l_channel_from_kernel(kernel: &BodyKernel, atom: &AtomAt, body: &BodySpec, k: usize, l: usize) -> Result<f64> {
    let comp = &body.composition;
    let local = |u: f64| -> Result<f64> {
        let q = q_factor(comp, u)?;
        // 1/(1 − s) = 1 − q
        Ok(density_sum(body, u) * (1.0 - q))
    };
    match (k, l) {
        (1, 1) => Ok(-kernel.integrate(|i, u| Ok(u.powi(4) * atom.species.alpha(u) * local(u)? * kernel.t1[i]))? / (2.0 * PI)),
        (2, 1) => Ok(-kernel.integrate(|i, u| {
            let q = q_factor(comp, u)?;
            Ok(u.powi(4) * atom.species.alpha(u) * local(u)? * q * kernel.t1[i])
        })? / (2.0 * PI)),
        (2, 2) => {
            let t2 = kernel.t2()?;
            Ok(kernel.integrate(|i, u| {
                let w = local(u)?;
                Ok(u.powi(6) * atom.species.alpha(u) * w * w * t2[i])
            })? / (2.0 * PI))
        }
        _ => Err(Error::UnsupportedOrder(if k > 2 { k } else { l })),
    }
}

/// Microscopic l = 2 term from the kernel: (1/2π) ∫ u⁶ α_A (Σnα)² T₂ du.
pub fn micro_pair_from_kernel(kernel: &BodyKernel, atom: &AtomAt, body: &BodySpec) -> Result<f64> {
    let t2 = kernel.t2()?;
    Ok(kernel.integrate(|i, u| {
        let s = density_sum(body, u);
        Ok(u.powi(6) * atom.species.alpha(u) * s * s * t2[i])
    })? / (2.0 * PI))
}

/// Microscopic l = 1 term: density-weighted volume sum of two-atom
/// integrands, on the same frequency rule and grid as the kernel.
fn micro_single_on_grid(
    kernel: &BodyKernel,
    atom: &AtomAt,
    body: &BodySpec,
    background: &Background,
    grid: &VolumeGrid,
) -> Result<f64> {
    let value = kernel.integrate(|_, u| {
        let mut acc = Compensated::default();
        for (s, w) in grid.points.iter().zip(&grid.weights) {
            acc.add(w * pair_trace(background, &atom.position, s, u)?);
        }
        Ok(atom.species.alpha(u) * density_sum(body, u) * acc.value())
    })?;
    Ok(-value / (2.0 * PI))
}

fn prepare(atom: &AtomAt, body: &BodySpec, background: &Background, spec: &VolumeSpec) -> Result<()> {
    atom.validate()?;
    body.validate()?;
    background.validate()?;
    spec.validate()
}

/// Born-series term Δ_kU (k = 1, 2) of the Casimir-Polder potential.
pub fn born_term(atom: &AtomAt, body: &BodySpec, background: &Background, k: usize, spec: &VolumeSpec) -> Result<f64> {
    check_order(k)?;
    prepare(atom, body, background, spec)?;
    if spec.susceptibility == Susceptibility::ClausiusMosotti {
        clausius_mosotti(&body.composition, 0.0)?;
    }
    if is_empty(body) {
        return Ok(0.0);
    }
    let kernel = BodyKernel::new(&atom.position, &body.geometry, background, spec, k == 2)?;
    born_from_kernel(&kernel, atom, body, k, spec.susceptibility)
}

/// l-atom part Δ_k^lU of the k-th Born term in a vacuum background, for
/// (k, l) ∈ {(1, 1), (2, 1), (2, 2)}.
pub fn born_term_l_channel(atom: &AtomAt, body: &BodySpec, k: usize, l: usize, spec: &VolumeSpec) -> Result<f64> {
    if !matches!((k, l), (1, 1) | (2, 1) | (2, 2)) {
        return Err(Error::UnsupportedOrder(if k > 2 { k } else { l }));
    }
    let background = Background::Vacuum;
    prepare(atom, body, &background, spec)?;
    clausius_mosotti(&body.composition, 0.0)?;
    if is_empty(body) {
        return Ok(0.0);
    }
    let kernel = BodyKernel::new(&atom.position, &body.geometry, &background, spec, l == 2)?;
    l_channel_from_kernel(&kernel, atom, body, k, l)
}

fn point_cloud_atoms(body: &BodySpec) -> Option<Vec<(AtomAt, f64)>> {
    let Geometry::PointCloud { points, weights } = &body.geometry else {
        return None;
    };
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let w = weights.as_ref().map_or(1.0, |w| w[i]);
        for c in &body.composition {
            if c.density * w != 0.0 {
                out.push((AtomAt::new(c.species.clone(), *p), c.density * w));
            }
        }
    }
    Some(out)
}

/// Microscopic l-atom term Δ^lU (l = 1, 2): density-weighted integral of
/// the (l+1)-atom potential over the body, with each unordered set of body
/// atoms counted once.
pub fn micro_term(atom: &AtomAt, body: &BodySpec, l: usize, background: &Background, spec: &VolumeSpec) -> Result<f64> {
    check_order(l)?;
    prepare(atom, body, background, spec)?;
    if is_empty(body) {
        return Ok(0.0);
    }
    if let Some(atoms) = point_cloud_atoms(body) {
        if body.geometry.distance_to(&atom.position) < MIN_SEPARATION {
            return Err(Error::GeometryViolation("atom coincides with a body point".into()));
        }
        let q = &spec.quadrature;
        let mut acc = Compensated::default();
        if l == 1 {
            for (b, n) in &atoms {
                acc.add(n * vdw_pair_general(atom, b, background, q)?.value);
            }
        } else {
            for (i, (b, nb)) in atoms.iter().enumerate() {
                for (c, nc) in &atoms[..i] {
                    if (b.position - c.position).norm() < MIN_SEPARATION {
                        continue;
                    }
                    let trio = [atom.clone(), b.clone(), c.clone()];
                    acc.add(nb * nc * vdw_many_atom(&trio, background, q)?.value);
                }
            }
        }
        return Ok(acc.value());
    }
    let kernel = BodyKernel::new(&atom.position, &body.geometry, background, spec, l == 2)?;
    if l == 1 {
        let grid = VolumeGrid::for_geometry(&body.geometry, spec.grid);
        micro_single_on_grid(&kernel, atom, body, background, &grid)
    } else {
        micro_pair_from_kernel(&kernel, atom, body)
    }
}

/// Partial geometric sums of the local-field factor q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resummation {
    pub q: f64,
    /// Σ_{η ≤ m} q^η for m = 0..=eta_max.
    pub partial_sums: Vec<f64>,
    /// 1/(1 − q).
    pub closed_form: f64,
    pub converged: bool,
}

/// Compare Σ_{η ≤ eta_max} q^η(iu) with 1/(1 − q).
pub fn resummation_check(composition: &[Constituent], u: f64, eta_max: usize, rel_tol: f64) -> Result<Resummation> {
    let gate = check_convergence(composition);
    if !gate.passes {
        return Err(Error::DivergentSeries(gate.value));
    }
    let q = q_factor(composition, u)?;
    if q.abs() >= 1.0 {
        return Err(Error::DivergentSeries(q.abs()));
    }
    let mut partial_sums = Vec::with_capacity(eta_max + 1);
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..=eta_max {
        sum += term;
        partial_sums.push(sum);
        term *= q;
    }
    let closed_form = 1.0 / (1.0 - q);
    Ok(Resummation {
        q,
        converged: (sum - closed_form).abs() <= rel_tol * closed_form.abs(),
        partial_sums,
        closed_form,
    })
}

/// Truncation orders of the macroscopic (K) and microscopic (L) series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orders {
    pub k: usize,
    pub l: usize,
}

impl Default for Orders {
    fn default() -> Self {
        Self { k: 2, l: 2 }
    }
}

impl Orders {
    pub fn validate(&self) -> Result<()> {
        check_order(self.k)?;
        check_order(self.l)
    }
}

/// Both sides of the series at one grid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub grid: usize,
    pub nodes: usize,
    /// Δ_kU for k = 1..=K.
    pub macro_terms: Vec<f64>,
    /// Δ^lU for l = 1..=L.
    pub micro_terms: Vec<f64>,
    /// Δ₂¹U, the one-q channel of the second Born term (K = 2 only).
    pub q_channel: Option<f64>,
    /// Δ₂²U (K = 2 only).
    pub pair_channel: Option<f64>,
    pub macro_total: f64,
    pub micro_total: f64,
    /// (macro − micro)/|macro|.
    pub discrepancy: f64,
    /// The same with both series cut after their first term.
    pub first_order_discrepancy: f64,
    pub excluded_measure: f64,
}

/// Outcome of [`verify_equivalence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub orders: Orders,
    /// Values at the finest grid.
    pub macro_terms: Vec<f64>,
    pub micro_terms: Vec<f64>,
    pub macro_partial_sums: Vec<f64>,
    pub micro_partial_sums: Vec<f64>,
    pub q_channel: Option<f64>,
    pub pair_channel: Option<f64>,
    /// Potential due to the background alone; zero in vacuum.
    pub background_potential: f64,
    /// Σ n α(0).
    pub density_polarizability: f64,
    pub chi0: f64,
    pub q0: f64,
    pub convergence_margin: f64,
    pub refinements: Vec<RefinementRow>,
    pub extrapolated_discrepancy: f64,
    /// Geometric bound |Δ₁U| χ(0)^K / (1 − χ(0)) on the omitted orders.
    pub residual_tail: f64,
    /// max(declared tolerance, χ(0)³ |Δ₁U| / |macro|).
    pub threshold: f64,
    pub passes: bool,
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b) / a.abs().max(b.abs())
    }
}

fn partial_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.16e}"))
}

impl SeriesReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One row per order and refinement.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,order,grid,nodes,value\n");
        for r in &self.refinements {
            for (k, v) in r.macro_terms.iter().enumerate() {
                out += &format!("macro,{},{},{},{v:.16e}\n", k + 1, r.grid, r.nodes);
            }
            for (l, v) in r.micro_terms.iter().enumerate() {
                out += &format!("micro,{},{},{},{v:.16e}\n", l + 1, r.grid, r.nodes);
            }
            if r.q_channel.is_some() {
                out += &format!("q_channel,2,{},{},{}\n", r.grid, r.nodes, fmt_opt(r.q_channel));
                out += &format!("pair_channel,2,{},{},{}\n", r.grid, r.nodes, fmt_opt(r.pair_channel));
            }
            out += &format!("discrepancy,,{},{},{:.16e}\n", r.grid, r.nodes, r.discrepancy);
            out += &format!("first_order_discrepancy,,{},{},{:.16e}\n", r.grid, r.nodes, r.first_order_discrepancy);
            out += &format!("excluded_measure,,{},{},{:.16e}\n", r.grid, r.nodes, r.excluded_measure);
        }
        out += &format!("extrapolated_discrepancy,,,,{:.16e}\n", self.extrapolated_discrepancy);
        out += &format!("residual_tail,,,,{:.16e}\n", self.residual_tail);
        out += &format!("threshold,,,,{:.16e}\n", self.threshold);
        out += &format!("passes,,,,{}\n", u8::from(self.passes));
        out
    }
}

/// Compare the macroscopic Born series with the microscopic many-atom
/// series for an atom near a body in vacuum, at each grid in `refinements`.
///
/// The two sides agree order by order once the Clausius-Mosotti χ is
/// expanded, so the discrepancy of the truncated series is of the order of
/// the omitted terms.
pub fn verify_equivalence(
    atom: &AtomAt,
    body: &BodySpec,
    spec: &VolumeSpec,
    orders: Orders,
    refinements: &[usize],
) -> Result<SeriesReport> {
    orders.validate()?;
    let background = Background::Vacuum;
    prepare(atom, body, &background, spec)?;
    let gate = check_convergence(&body.composition);
    if !gate.passes {
        return Err(Error::ConvergenceGateFailed(gate.value));
    }
    let mut grids: Vec<usize> = if refinements.is_empty() { vec![spec.grid] } else { refinements.to_vec() };
    grids.sort_unstable();
    grids.dedup();

    let s0 = body.density_polarizability(0.0);
    let chi0 = clausius_mosotti(&body.composition, 0.0)?;
    let q0 = q_factor(&body.composition, 0.0)?;
    let empty = is_empty(body);
    let cm = Susceptibility::ClausiusMosotti;

    let mut rows = Vec::with_capacity(grids.len());
    for &n in &grids {
        let local = spec.with_grid(n);
        let row = if empty {
            RefinementRow {
                grid: n,
                nodes: 0,
                macro_terms: vec![0.0; orders.k],
                micro_terms: vec![0.0; orders.l],
                q_channel: (orders.k == 2).then_some(0.0),
                pair_channel: (orders.k == 2).then_some(0.0),
                macro_total: 0.0,
                micro_total: 0.0,
                discrepancy: 0.0,
                first_order_discrepancy: 0.0,
                excluded_measure: 0.0,
            }
        } else {
            let with_pairs = orders.k == 2 || orders.l == 2;
            let kernel = BodyKernel::new(&atom.position, &body.geometry, &background, &local, with_pairs)?;
            let mut macro_terms = vec![born_from_kernel(&kernel, atom, body, 1, cm)?];
            let (mut q_channel, mut pair_channel) = (None, None);
            if orders.k == 2 {
                macro_terms.push(born_from_kernel(&kernel, atom, body, 2, cm)?);
                q_channel = Some(l_channel_from_kernel(&kernel, atom, body, 2, 1)?);
                pair_channel = Some(l_channel_from_kernel(&kernel, atom, body, 2, 2)?);
            }
            let micro_terms = if matches!(body.geometry, Geometry::PointCloud { .. }) {
                (1..=orders.l)
                    .map(|l| micro_term(atom, body, l, &background, &local))
                    .collect::<Result<Vec<_>>>()?
            } else {
                let grid = VolumeGrid::for_geometry(&body.geometry, n);
                let mut m = vec![micro_single_on_grid(&kernel, atom, body, &background, &grid)?];
                if orders.l == 2 {
                    m.push(micro_pair_from_kernel(&kernel, atom, body)?);
                }
                m
            };
            let macro_total: f64 = macro_terms.iter().sum();
            let micro_total: f64 = micro_terms.iter().sum();
            RefinementRow {
                grid: n,
                nodes: kernel.nodes,
                first_order_discrepancy: relative(macro_terms[0], micro_terms[0]),
                discrepancy: relative(macro_total, micro_total),
                macro_terms,
                micro_terms,
                q_channel,
                pair_channel,
                macro_total,
                micro_total,
                excluded_measure: kernel.excluded_measure,
            }
        };
        rows.push(row);
    }

    let finest = rows.last().expect("at least one refinement").clone();
    // discrepancy assumed to approach its limit like 1/n
    let extrapolated = if rows.len() >= 2 {
        let a = &rows[rows.len() - 2];
        let (n1, n2) = (a.grid as f64, finest.grid as f64);
        (n2 * finest.discrepancy - n1 * a.discrepancy) / (n2 - n1)
    } else {
        finest.discrepancy
    };
    let delta1 = finest.macro_terms[0].abs();
    let residual_tail = if chi0 < 1.0 {
        delta1 * chi0.powi(orders.k as i32) / (1.0 - chi0)
    } else {
        f64::INFINITY
    };
    let macro_abs = finest.macro_total.abs();
    let chi_bound = if macro_abs > 0.0 { chi0.powi(3) * delta1 / macro_abs } else { 0.0 };
    let threshold = spec.tolerance.max(chi_bound);

    Ok(SeriesReport {
        orders,
        macro_partial_sums: partial_sums(&finest.macro_terms),
        micro_partial_sums: partial_sums(&finest.micro_terms),
        macro_terms: finest.macro_terms.clone(),
        micro_terms: finest.micro_terms.clone(),
        q_channel: finest.q_channel,
        pair_channel: finest.pair_channel,
        background_potential: 0.0,
        density_polarizability: s0,
        chi0,
        q0,
        convergence_margin: gate.margin,
        refinements: rows,
        passes: extrapolated.abs() < threshold,
        extrapolated_discrepancy: extrapolated,
        residual_tail,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{cp_sphere, g_ee, Sphere};
    use crate::quadrature::integrate_semiaxis;
    use crate::response::{AtomSpecies, MediumModel};
    use approx::assert_relative_eq;

    fn species() -> AtomSpecies {
        AtomSpecies::with_static_polarizability("B", 1.0, 1.0).unwrap()
    }

    fn atom_at(z: f64) -> AtomAt {
        AtomAt::new(species(), Vec3::new(0.0, 0.0, z))
    }

    fn sphere_body(radius: f64, s0: f64) -> BodySpec {
        BodySpec::new(
            Geometry::Sphere {
                center: Vec3::zeros(),
                radius,
            },
            vec![Constituent {
                species: species(),
                density: s0,
            }],
        )
        .unwrap()
    }

    fn small_spec() -> VolumeSpec {
        VolumeSpec::default().with_grid(6)
    }

    #[test]
    fn empty_body_gives_zero() {
        let body = sphere_body(1.0, 0.0);
        let a = atom_at(2.0);
        for k in 1..=2 {
            assert_eq!(born_term(&a, &body, &Background::Vacuum, k, &small_spec()).unwrap(), 0.0);
            assert_eq!(micro_term(&a, &body, k, &Background::Vacuum, &small_spec()).unwrap(), 0.0);
        }
        let report = verify_equivalence(&a, &body, &small_spec(), Orders::default(), &[4, 6]).unwrap();
        assert_eq!(report.macro_partial_sums, vec![0.0, 0.0]);
        assert_eq!(report.micro_partial_sums, vec![0.0, 0.0]);
        assert!(report.passes);
    }

    #[test]
    fn orders_and_geometry_are_checked() {
        let body = sphere_body(1.0, 0.1);
        assert_eq!(
            born_term(&atom_at(2.0), &body, &Background::Vacuum, 3, &small_spec()),
            Err(Error::UnsupportedOrder(3))
        );
        assert_eq!(
            micro_term(&atom_at(2.0), &body, 3, &Background::Vacuum, &small_spec()),
            Err(Error::UnsupportedOrder(3))
        );
        assert_eq!(
            born_term_l_channel(&atom_at(2.0), &body, 1, 2, &small_spec()),
            Err(Error::UnsupportedOrder(2))
        );
        assert!(matches!(
            born_term(&atom_at(0.5), &body, &Background::Vacuum, 1, &small_spec()),
            Err(Error::GeometryViolation(_))
        ));
        let dense = sphere_body(1.0, 3.5);
        assert!(matches!(
            born_term(&atom_at(2.0), &dense, &Background::Vacuum, 1, &small_spec()),
            Err(Error::DenominatorViolation(_))
        ));
    }

    #[test]
    fn frequency_rule_matches_adaptive_quadrature() {
        // T₁ of a single far point reduces to g_ee; compare the fixed rule
        // with the adaptive one on the resulting integrand
        let a = atom_at(2.0);
        let body = BodySpec::new(
            Geometry::PointCloud {
                points: vec![Vec3::zeros()],
                weights: None,
            },
            vec![Constituent {
                species: species(),
                density: 0.3,
            }],
        )
        .unwrap();
        let spec = VolumeSpec::default().with_susceptibility(Susceptibility::Dilute);
        let fixed = born_term(&a, &body, &Background::Vacuum, 1, &spec).unwrap();
        let adaptive = integrate_semiaxis(
            |u| a.species.alpha(u).powi(2) * 0.3 * g_ee(2.0 * u),
            &QuadratureSpec::default().with_scale(0.25),
        )
        .unwrap()
        .value
            * -1.0
            / (32.0 * PI.powi(3) * 64.0);
        assert_relative_eq!(fixed, adaptive, max_relative = 1e-10);
        let micro = micro_term(&a, &body, 1, &Background::Vacuum, &spec).unwrap();
        assert_relative_eq!(micro, adaptive, max_relative = 1e-8);
    }

    #[test]
    fn signs_of_first_two_orders() {
        let body = sphere_body(1.0, 0.3);
        let a = atom_at(2.0);
        assert!(born_term(&a, &body, &Background::Vacuum, 1, &small_spec()).unwrap() < 0.0);
        assert!(born_term(&a, &body, &Background::Vacuum, 2, &small_spec()).unwrap() > 0.0);
    }

    #[test]
    fn small_sphere_matches_closed_form_polarizability() {
        // Δ₁ + Δ₂ of a tiny sphere reproduces the sphere formula with
        // α_e = V χ/(1 + χ/3) up to O(χ³) and O(R²/r²)
        let radius = 0.02;
        let s0 = 0.3;
        let body = sphere_body(radius, s0);
        let a = atom_at(1.0);
        let spec = VolumeSpec::default().with_grid(8);
        let d1 = born_term(&a, &body, &Background::Vacuum, 1, &spec).unwrap();
        let d2 = born_term(&a, &body, &Background::Vacuum, 2, &spec).unwrap();
        // a single-oscillator dielectric with ε − 1 = χ of the body
        let sp = species();
        let volume = 4.0 / 3.0 * PI * radius.powi(3);
        let first_order = integrate_semiaxis(
            |u| sp.alpha(u) * g_ee(u) * volume * clausius_mosotti(&body.composition, u).unwrap(),
            &QuadratureSpec::default().with_scale(0.5),
        )
        .unwrap()
        .value
            * -1.0
            / (32.0 * PI.powi(3));
        assert_relative_eq!(d1, first_order, max_relative = 3e-3);
        let chi0 = clausius_mosotti(&body.composition, 0.0).unwrap();
        // ω_p² = χ(0) ω_T² with ω_T² = 1 − s0/3 reproduces χ(iu) exactly
        let wt2 = 1.0 - s0 / 3.0;
        let medium = MediumModel::dielectric((chi0 * wt2).sqrt(), wt2.sqrt(), 0.0);
        let sphere = Sphere {
            center: Vec3::zeros(),
            radius,
            medium,
        };
        let exact = cp_sphere(&a, &sphere, &QuadratureSpec::default()).unwrap().value;
        let residual = ((d1 + d2) - exact).abs() / exact.abs();
        assert!(residual < chi0.powi(2) / 9.0 + 3e-3, "residual {residual}");
        assert!(residual < ((d1 - exact) / exact).abs());
    }

    #[test]
    fn dilute_terms_scale_with_density_power() {
        let a = atom_at(2.0);
        let spec = small_spec().with_susceptibility(Susceptibility::Dilute);
        for k in 1..=2 {
            let v1 = born_term(&a, &sphere_body(1.0, 0.1), &Background::Vacuum, k, &spec).unwrap();
            let v2 = born_term(&a, &sphere_body(1.0, 0.2), &Background::Vacuum, k, &spec).unwrap();
            assert_relative_eq!(v2 / v1, 2f64.powi(k as i32), max_relative = 1e-12);
        }
        let m1 = micro_term(&a, &sphere_body(1.0, 0.1), 2, &Background::Vacuum, &spec).unwrap();
        let m2 = micro_term(&a, &sphere_body(1.0, 0.2), 2, &Background::Vacuum, &spec).unwrap();
        assert_relative_eq!(m2 / m1, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn l_channels_add_up() {
        let a = atom_at(2.0);
        let body = sphere_body(1.0, 0.4);
        let spec = small_spec();
        let d1 = born_term(&a, &body, &Background::Vacuum, 1, &spec).unwrap();
        let d11 = born_term_l_channel(&a, &body, 1, 1, &spec).unwrap();
        assert_relative_eq!(d1, d11, max_relative = 1e-13);
        let d2 = born_term(&a, &body, &Background::Vacuum, 2, &spec).unwrap();
        let d21 = born_term_l_channel(&a, &body, 2, 1, &spec).unwrap();
        let d22 = born_term_l_channel(&a, &body, 2, 2, &spec).unwrap();
        assert_relative_eq!(d2, d21 + d22, max_relative = 1e-12);
    }

    #[test]
    fn q_channel_ratio_vanishes_with_density() {
        let a = atom_at(2.0);
        let spec = small_spec();
        let ratio = |s0: f64| {
            let body = sphere_body(1.0, s0);
            born_term_l_channel(&a, &body, 2, 1, &spec).unwrap() / born_term_l_channel(&a, &body, 1, 1, &spec).unwrap()
        };
        let (r1, r2, r4) = (ratio(0.08), ratio(0.04), ratio(0.02));
        for (r, s0) in [(r1, 0.08), (r2, 0.04), (r4, 0.02)] {
            assert!(r < 0.0 && r.abs() < s0 / 3.0 / (1.0 - s0 / 3.0));
        }
        // −ratio/density is linear in density at small density
        let slope = |r: f64, s: f64| -r / s;
        let (f1, f2, f4) = (slope(r1, 0.08), slope(r2, 0.04), slope(r4, 0.02));
        assert!((f1 - f2) > 0.0 && (f2 - f4) > 0.0);
        assert_relative_eq!((f2 - f4) / (f1 - f2), 0.5, max_relative = 0.1);
        let extrapolated = 2.0 * f4 - f2;
        assert!(extrapolated > 0.0 && extrapolated < 1.0 / 3.0);
    }

    #[test]
    fn resummation_geometric_series() {
        let comp = |s0: f64| {
            vec![Constituent {
                species: species(),
                density: s0,
            }]
        };
        // Σnα/3 = 0.1 ⇒ q = −1/9 and 1/(1 − q) = 0.9
        let r = resummation_check(&comp(0.3), 0.0, 40, 1e-12).unwrap();
        assert_relative_eq!(r.q, -1.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(r.closed_form, 0.9, max_relative = 1e-14);
        assert!(r.converged);
        assert!(r.partial_sums[..10].windows(3).all(|w| (w[2] - w[1]) * (w[1] - w[0]) < 0.0));
        let zero = resummation_check(&comp(0.0), 0.0, 0, 1e-12).unwrap();
        assert_eq!(zero.partial_sums, vec![1.0]);
        assert!(zero.converged);
        assert!(matches!(resummation_check(&comp(1.6), 0.0, 10, 1e-12), Err(Error::DivergentSeries(_))));
    }

    #[test]
    fn convergence_gate_blocks_verification() {
        let body = sphere_body(1.0, 1.6);
        assert!(matches!(
            verify_equivalence(&atom_at(2.0), &body, &small_spec(), Orders::default(), &[4]),
            Err(Error::ConvergenceGateFailed(_))
        ));
    }

    #[test]
    fn report_serialises() {
        let body = sphere_body(1.0, 0.05);
        let report = verify_equivalence(&atom_at(2.0), &body, &small_spec(), Orders::default(), &[4, 5]).unwrap();
        let json = report.to_json();
        let back: SeriesReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        let csv = report.to_csv();
        assert!(csv.starts_with("quantity,order,grid,nodes,value\n"));
        assert_eq!(csv.lines().filter(|l| l.starts_with("macro,")).count(), 4);
        assert!(report.residual_tail >= 0.0);
        assert_eq!(report.macro_partial_sums.len(), 2);
    }

    #[test]
    fn monte_carlo_pair_rule_is_reproducible_and_close() {
        let a = atom_at(2.0);
        let body = sphere_body(1.0, 0.3);
        let mc = VolumeSpec {
            pair_rule: PairRule::MonteCarlo { samples: 512, seed: 7 },
            ..small_spec()
        };
        let v1 = born_term_l_channel(&a, &body, 2, 2, &mc).unwrap();
        let v2 = born_term_l_channel(&a, &body, 2, 2, &mc).unwrap();
        assert_eq!(v1, v2);
        let gauss = born_term_l_channel(&a, &body, 2, 2, &small_spec().with_grid(8)).unwrap();
        let d2 = born_term(&a, &body, &Background::Vacuum, 2, &small_spec().with_grid(8)).unwrap();
        // the pair channel is a small correction; compare on the scale of Δ₂
        assert!((v1 - gauss).abs() < 0.1 * d2.abs(), "{v1} {gauss} {d2}");
    }

    #[test]
    fn point_cloud_micro_uses_atom_sums() {
        let a = atom_at(2.0);
        let points = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.0, 0.6, 0.1)];
        let body = BodySpec::new(
            Geometry::PointCloud {
                points: points.clone(),
                weights: Some(vec![1.0, 2.0, 0.5]),
            },
            vec![Constituent {
                species: species(),
                density: 0.2,
            }],
        )
        .unwrap();
        let q = QuadratureSpec::default();
        let expected: f64 = points
            .iter()
            .zip([1.0, 2.0, 0.5])
            .map(|(p, w)| {
                0.2 * w * vdw_pair_general(&a, &AtomAt::new(species(), *p), &Background::Vacuum, &q).unwrap().value
            })
            .sum();
        let got = micro_term(&a, &body, 1, &Background::Vacuum, &small_spec()).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-14);
        let born = born_term(
            &a,
            &body,
            &Background::Vacuum,
            1,
            &small_spec().with_susceptibility(Susceptibility::Dilute),
        )
        .unwrap();
        assert_relative_eq!(born, expected, max_relative = 1e-8);
        // l = 2: the three two-atom subsets of the cloud, each once
        let triple = micro_term(&a, &body, 2, &Background::Vacuum, &small_spec()).unwrap();
        let mut brute = 0.0;
        let w = [1.0, 2.0, 0.5];
        for i in 0..3 {
            for j in 0..i {
                let trio = [a.clone(), AtomAt::new(species(), points[i]), AtomAt::new(species(), points[j])];
                brute += 0.04 * w[i] * w[j] * vdw_many_atom(&trio, &Background::Vacuum, &q).unwrap().value;
            }
        }
        assert_relative_eq!(triple, brute, max_relative = 1e-14);
    }
}
