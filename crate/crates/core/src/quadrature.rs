//! Numerical integration over the imaginary frequency axis and over body
//! volumes.
//!
//! Frequency integrals map u ∈ (0, ∞) onto t ∈ (0, 1) through
//! u = u₀ t / (1 − t) and integrate adaptively with a 21-point
//! Gauss-Kronrod pair. Volume integrals use tensor-product Gauss grids
//! (spheres, boxes), weighted point clouds, or stratified random samples.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::response::Geometry;
use crate::{Error, Result, Vec3};

/// Value of an integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out before the tolerance was met.
    pub converged: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error: 0.0,
            evals: 0,
            converged: true,
        }
    }

    /// Fails with [`Error::BudgetExceeded`] unless the tolerance was met.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::BudgetExceeded(self.evals))
        }
    }

    /// Multiply value and error by a constant.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error: self.error * factor.abs(),
            ..self
        }
    }
}

/// Tolerances and transform scale for semi-infinite frequency integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    /// u₀ of the map u = u₀ t/(1 − t). `None` lets the caller pick c/(2 r_char).
    pub scale: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-30,
            max_evals: 200_000,
            scale: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    /// Keep an explicit scale, otherwise use c/(2 r_char).
    pub fn or_scale_for(mut self, characteristic_length: f64) -> Self {
        if self.scale.is_none() {
            self.scale = Some(default_scale(characteristic_length));
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerances must be positive".into()));
        }
        if self.max_evals < 100 {
            return Err(Error::InvalidInput("max_evals must be at least 100".into()));
        }
        if let Some(s) = self.scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput("quadrature scale must be positive".into()));
            }
        }
        Ok(())
    }
}

/// u₀ = c / (2 r_char); the integrands decay like e^{−2 u r / c}.
pub fn default_scale(characteristic_length: f64) -> f64 {
    0.5 / characteristic_length
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn kronrod21<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;
    let mut res_g = 0.0;
    let mut res_k = f_center * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok(Panel { a, b, value, error })
}

/// ∫₀^∞ f(u) du by adaptive Gauss-Kronrod on the mapped variable
/// t = u/(u + u₀).
///
/// Fails with [`Error::NonFinite`] when f returns NaN or ±∞. Running out of
/// evaluations is reported through [`Estimate::converged`] with the best
/// available estimate.
pub fn integrate_semiaxis<F: FnMut(f64) -> f64>(mut f: F, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    let u0 = spec.scale.unwrap_or(1.0);
    let mut mapped = |t: f64| -> Result<f64> {
        let one_minus = 1.0 - t;
        let u = u0 * t / one_minus;
        let value = f(u);
        if !value.is_finite() {
            return Err(Error::NonFinite(u));
        }
        Ok(value * u0 / (one_minus * one_minus))
    };

    let mut panels = vec![kronrod21(&mut mapped, 0.0, 0.5)?, kronrod21(&mut mapped, 0.5, 1.0)?];
    let mut evals = 42usize;
    let mut converged = false;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            converged = true;
            break;
        }
        if evals + 42 > spec.max_evals {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // interval cannot be bisected further in double precision
            panels.push(p);
            break;
        }
        panels.push(kronrod21(&mut mapped, p.a, mid)?);
        panels.push(kronrod21(&mut mapped, mid, p.b)?);
        evals += 42;
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = compensated_sum(panels.iter().map(|p| p.value));
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        evals,
        converged,
    })
}

/// Neumaier-compensated sum; order-dependent but deterministic.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Running Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Gauss-Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed composite Gauss-Legendre rule on the mapped frequency variable,
/// used when a frequency integral wraps a volume sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRule {
    pub panels: usize,
    pub order: usize,
}

impl Default for FrequencyRule {
    fn default() -> Self {
        Self { panels: 4, order: 20 }
    }
}

impl FrequencyRule {
    /// (u, weight) pairs, with the Jacobian folded into the weights.
    pub fn nodes(&self, scale: f64) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(self.order);
        let width = 1.0 / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.order);
        for p in 0..self.panels {
            let a = p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                let t = a + 0.5 * width * (xi + 1.0);
                let one_minus = 1.0 - t;
                let u = scale * t / one_minus;
                out.push((u, 0.5 * width * wi * scale / (one_minus * one_minus)));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels == 0 || self.order < 2 {
            return Err(Error::InvalidInput("frequency rule needs panels >= 1 and order >= 2".into()));
        }
        Ok(())
    }
}

/// How a [`VolumeGrid`] was built, so it can be coarsened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridShape {
    Sphere { center: Vec3, radius: f64, counts: [usize; 3] },
    Box { corner: Vec3, extents: Vec3, counts: [usize; 3] },
    PointCloud,
    Stratified,
}

/// Quadrature nodes over a body; weights sum to the body volume for the
/// deterministic grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrid {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Characteristic node spacing (V/N)^{1/3}; zero for point clouds.
    pub spacing: f64,
    pub shape: GridShape,
}

impl VolumeGrid {
    /// Spherical product grid: Gauss in r (with r² weight), Gauss in cos θ,
    /// uniform midpoints in φ.
    pub fn sphere(center: Vec3, radius: f64, counts: [usize; 3]) -> Self {
        let [nr, nt, np] = counts;
        let (xr, wr) = gauss_legendre(nr);
        let (xt, wt) = gauss_legendre(nt);
        let mut points = Vec::with_capacity(nr * nt * np);
        let mut weights = Vec::with_capacity(nr * nt * np);
        let dphi = 2.0 * PI / np as f64;
        for (x, w) in xr.iter().zip(&wr) {
            let r = 0.5 * radius * (x + 1.0);
            let w_r = 0.5 * radius * w * r * r;
            for (ct, w_t) in xt.iter().zip(&wt) {
                let st = (1.0 - ct * ct).sqrt();
                for k in 0..np {
                    let phi = (k as f64 + 0.5) * dphi;
                    points.push(center + Vec3::new(r * st * phi.cos(), r * st * phi.sin(), r * ct));
                    weights.push(w_r * w_t * dphi);
                }
            }
        }
        let volume = 4.0 / 3.0 * PI * radius.powi(3);
        Self {
            spacing: (volume / points.len() as f64).cbrt(),
            points,
            weights,
            shape: GridShape::Sphere {
                center,
                radius,
                counts,
            },
        }
    }

    /// Tensor-product Gauss grid over an axis-aligned box.
    pub fn cuboid(corner: Vec3, extents: Vec3, counts: [usize; 3]) -> Self {
        let rules: Vec<_> = counts.iter().map(|&n| gauss_legendre(n)).collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (x, wx) in rules[0].0.iter().zip(&rules[0].1) {
            for (y, wy) in rules[1].0.iter().zip(&rules[1].1) {
                for (z, wz) in rules[2].0.iter().zip(&rules[2].1) {
                    let local = Vec3::new(
                        0.5 * extents.x * (x + 1.0),
                        0.5 * extents.y * (y + 1.0),
                        0.5 * extents.z * (z + 1.0),
                    );
                    points.push(corner + local);
                    weights.push(0.125 * extents.x * extents.y * extents.z * wx * wy * wz);
                }
            }
        }
        let volume = extents.x * extents.y * extents.z;
        Self {
            spacing: (volume / points.len() as f64).cbrt(),
            points,
            weights,
            shape: GridShape::Box {
                corner,
                extents,
                counts,
            },
        }
    }

    pub fn point_cloud(points: Vec<Vec3>, weights: Option<Vec<f64>>) -> Self {
        let weights = weights.unwrap_or_else(|| vec![1.0; points.len()]);
        Self {
            points,
            weights,
            spacing: 0.0,
            shape: GridShape::PointCloud,
        }
    }

    /// Default grid for a body at resolution `n`: (n, n, 2n) for spheres,
    /// n³ for boxes, the points themselves for clouds.
    pub fn for_geometry(geometry: &Geometry, n: usize) -> Self {
        let n = n.max(2);
        match geometry {
            Geometry::Sphere { center, radius } => Self::sphere(*center, *radius, [n, n, 2 * n]),
            Geometry::Box { corner, extents } => Self::cuboid(*corner, *extents, [n, n, n]),
            Geometry::PointCloud { points, weights } => Self::point_cloud(points.clone(), weights.clone()),
        }
    }

    /// One random point per cell of an m×m×m stratification of the body,
    /// all with weight V/m³. Point clouds are returned unchanged.
    pub fn stratified(geometry: &Geometry, m: usize, seed: u64) -> Self {
        let m = m.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = m * m * m;
        let mut points = Vec::with_capacity(cells);
        let volume = match geometry.volume() {
            Some(v) => v,
            None => return Self::for_geometry(geometry, m),
        };
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let xi = [
                        (i as f64 + rng.gen::<f64>()) / m as f64,
                        (j as f64 + rng.gen::<f64>()) / m as f64,
                        (k as f64 + rng.gen::<f64>()) / m as f64,
                    ];
                    let p = match geometry {
                        Geometry::Sphere { center, radius } => {
                            let r = radius * xi[0].cbrt();
                            let ct = 2.0 * xi[1] - 1.0;
                            let st = (1.0 - ct * ct).max(0.0).sqrt();
                            let phi = 2.0 * PI * xi[2];
                            center + Vec3::new(r * st * phi.cos(), r * st * phi.sin(), r * ct)
                        }
                        Geometry::Box { corner, extents } => {
                            corner + Vec3::new(extents.x * xi[0], extents.y * xi[1], extents.z * xi[2])
                        }
                        Geometry::PointCloud { .. } => unreachable!(),
                    };
                    points.push(p);
                }
            }
        }
        Self {
            weights: vec![volume / cells as f64; cells],
            spacing: (volume / cells as f64).cbrt(),
            points,
            shape: GridShape::Stratified,
        }
    }

    /// Same rule with roughly three quarters of the nodes per axis; `None`
    /// when the grid cannot be coarsened.
    pub fn coarsened(&self) -> Option<Self> {
        let shrink = |c: [usize; 3]| -> Option<[usize; 3]> {
            let out = c.map(|n| ((3 * n) / 4).max(2));
            (out != c).then_some(out)
        };
        match &self.shape {
            GridShape::Sphere {
                center,
                radius,
                counts,
            } => shrink(*counts).map(|c| Self::sphere(*center, *radius, c)),
            GridShape::Box {
                corner,
                extents,
                counts,
            } => shrink(*counts).map(|c| Self::cuboid(*corner, *extents, c)),
            GridShape::PointCloud | GridShape::Stratified => None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }
}

/// Result of a volume integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Difference to the coarsened rule; zero for exact sums.
    pub error_estimate: f64,
    /// Σ w₁ w₂ over node pairs dropped by the diagonal exclusion.
    pub excluded_measure: f64,
}

fn volume_sum<F: FnMut(&Vec3) -> f64>(f: &mut F, grid: &VolumeGrid) -> Result<f64> {
    let mut acc = Compensated::default();
    for (p, w) in grid.points.iter().zip(&grid.weights) {
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFinite(p.norm()));
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}

fn pair_sum<F: FnMut(&Vec3, &Vec3) -> f64>(f: &mut F, grid: &VolumeGrid, exclusion: f64) -> Result<(f64, f64)> {
    let mut acc = Compensated::default();
    let mut excluded = Compensated::default();
    for (i, (p, wp)) in grid.points.iter().zip(&grid.weights).enumerate() {
        for (j, (q, wq)) in grid.points.iter().zip(&grid.weights).enumerate() {
            if i == j || (p - q).norm() < exclusion {
                excluded.add(wp * wq);
                continue;
            }
            let v = f(p, q);
            if !v.is_finite() {
                return Err(Error::NonFinite((p - q).norm()));
            }
            acc.add(wp * wq * v);
        }
    }
    Ok((acc.value(), excluded.value()))
}

/// ∫ f(s) d³s over the grid.
pub fn integrate_volume<F: FnMut(&Vec3) -> f64>(mut f: F, grid: &VolumeGrid) -> Result<VolumeEstimate> {
    let value = volume_sum(&mut f, grid)?;
    let error_estimate = match grid.coarsened() {
        Some(coarse) => (value - volume_sum(&mut f, &coarse)?).abs(),
        None => 0.0,
    };
    Ok(VolumeEstimate {
        value,
        error_estimate,
        excluded_measure: 0.0,
    })
}

/// ∫∫ f(s₁, s₂) d³s₁ d³s₂ with node pairs closer than `exclusion` dropped.
/// The diagonal i = j is always dropped.
pub fn integrate_volume_pairs<F: FnMut(&Vec3, &Vec3) -> f64>(
    mut f: F,
    grid: &VolumeGrid,
    exclusion: f64,
) -> Result<VolumeEstimate> {
    let (value, excluded_measure) = pair_sum(&mut f, grid, exclusion)?;
    let error_estimate = match grid.coarsened() {
        Some(coarse) => {
            let ratio = if grid.spacing > 0.0 { coarse.spacing / grid.spacing } else { 1.0 };
            (value - pair_sum(&mut f, &coarse, exclusion * ratio)?.0).abs()
        }
        None => 0.0,
    };
    Ok(VolumeEstimate {
        value,
        error_estimate,
        excluded_measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} deg={deg}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn semiaxis_exponential() {
        let est = integrate_semiaxis(|u| (-u).exp(), &QuadratureSpec::default().with_scale(1.0)).unwrap();
        assert!(est.converged);
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-9);
        assert!(est.error <= 1e-9);
    }

    #[test]
    fn semiaxis_gamma() {
        let est = integrate_semiaxis(|u| u * u * (-2.0 * u).exp(), &QuadratureSpec::default().with_scale(1.0)).unwrap();
        assert_relative_eq!(est.value, 0.25, max_relative = 1e-9);
    }

    #[test]
    fn semiaxis_lorentzian_polarizability() {
        // ∫ α(iu) du for one oscillator = (2|d|²/3)·π/2 from arctan(u/ω₀)
        let (omega, d2) = (1.7, 0.9);
        let alpha = |u: f64| 2.0 / 3.0 * omega * d2 / (omega * omega + u * u);
        let est = integrate_semiaxis(alpha, &QuadratureSpec::default().with_scale(1.0)).unwrap();
        assert_relative_eq!(est.value, PI * d2 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn semiaxis_scale_invariance() {
        let f = |u: f64| (u / (1.0 + u * u)) * (-0.3 * u).exp();
        let base = integrate_semiaxis(f, &QuadratureSpec::default().with_scale(1.0)).unwrap().value;
        for s in [0.1, 0.3, 3.0, 10.0] {
            let v = integrate_semiaxis(f, &QuadratureSpec::default().with_scale(s)).unwrap().value;
            assert_relative_eq!(v, base, max_relative = 1e-9);
        }
    }

    #[test]
    fn semiaxis_errors_and_budget() {
        let spec = QuadratureSpec::default().with_scale(1.0);
        assert!(matches!(
            integrate_semiaxis(|u| if u > 2.0 { f64::NAN } else { 1.0 }, &spec),
            Err(Error::NonFinite(_))
        ));
        let tight = QuadratureSpec {
            max_evals: 100,
            rel_tol: 1e-15,
            ..spec
        };
        let est = integrate_semiaxis(|u| (u.sin() / (1.0 + u)).powi(2) * (-0.01 * u).exp(), &tight).unwrap();
        assert!(!est.converged);
        assert!(est.value.is_finite());
        assert!(matches!(est.require_converged(), Err(Error::BudgetExceeded(_))));
        assert!(QuadratureSpec { max_evals: 10, ..spec }.validate().is_err());
    }

    #[test]
    fn frequency_rule_matches_known_integrals() {
        let rule = FrequencyRule::default();
        let sum: f64 = rule.nodes(1.0).iter().map(|(u, w)| w * u * u * (-2.0 * u).exp()).sum();
        assert_relative_eq!(sum, 0.25, max_relative = 1e-10);
    }

    #[test]
    fn sphere_volume_exact() {
        let g = VolumeGrid::sphere(Vec3::new(1.0, 2.0, 3.0), 0.8, [4, 5, 6]);
        let v = integrate_volume(|_| 1.0, &g).unwrap();
        assert_relative_eq!(v.value, 4.0 / 3.0 * PI * 0.8f64.powi(3), max_relative = 1e-12);
        assert!(g.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn unit_box_volume() {
        let g = VolumeGrid::cuboid(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), [3, 3, 3]);
        assert_relative_eq!(integrate_volume(|_| 1.0, &g).unwrap().value, 1.0, max_relative = 1e-13);
    }

    /// ∫_ball d³s / |r − s|⁶ = (4π R³/3) / (D² − R²)³ for |r| = D > R.
    fn inverse_sixth_ball(radius: f64, dist: f64) -> f64 {
        4.0 * PI * radius.powi(3) / 3.0 / (dist * dist - radius * radius).powi(3)
    }

    #[test]
    fn far_sphere_inverse_sixth_power() {
        let radius = 0.5;
        let ra = Vec3::new(0.0, 0.0, 5.0);
        let g = VolumeGrid::sphere(Vec3::zeros(), radius, [8, 8, 16]);
        let v = integrate_volume(|s| (ra - s).norm().powi(-6), &g).unwrap();
        let volume = 4.0 / 3.0 * PI * radius.powi(3);
        // leading multipole term V/r⁶ with an O(R²/r²) correction
        let lead = volume / 5f64.powi(6);
        assert!((v.value / lead - 1.0).abs() < 4.0 * (radius / 5.0).powi(2));
        // brute-force refined grid agrees with the closed form of the ball integral
        let fine = VolumeGrid::sphere(Vec3::zeros(), radius, [16, 16, 32]);
        let vf = integrate_volume(|s| (ra - s).norm().powi(-6), &fine).unwrap();
        assert_relative_eq!(vf.value, inverse_sixth_ball(radius, 5.0), max_relative = 1e-10);
        assert_relative_eq!(v.value, vf.value, max_relative = 1e-8);
    }

    #[test]
    fn grid_refinement_converges() {
        // r⁻⁶ integrand close to the sphere: error shrinks as nodes are doubled
        let ra = Vec3::new(0.0, 0.0, 1.4);
        let exact = inverse_sixth_ball(1.0, 1.4);
        let err = |n: usize| {
            let g = VolumeGrid::sphere(Vec3::zeros(), 1.0, [n, n, 2 * n]);
            (integrate_volume(|s| (ra - s).norm().powi(-6), &g).unwrap().value / exact - 1.0).abs()
        };
        let (e4, e8, e16) = (err(4), err(8), err(16));
        assert!(e8 < e4 / 4.0 && e16 < e8 / 4.0, "{e4} {e8} {e16}");
    }

    #[test]
    fn pair_integral_excludes_diagonal() {
        let g = VolumeGrid::cuboid(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), [4, 4, 4]);
        let all = integrate_volume_pairs(|_, _| 1.0, &g, 0.0).unwrap();
        let diag: f64 = g.weights.iter().map(|w| w * w).sum();
        assert_relative_eq!(all.value + all.excluded_measure, 1.0, max_relative = 1e-12);
        assert_relative_eq!(all.excluded_measure, diag, max_relative = 1e-12);
        let wide = integrate_volume_pairs(|_, _| 1.0, &g, 1.5 * g.spacing).unwrap();
        assert!(wide.excluded_measure > diag);
        assert_relative_eq!(wide.value + wide.excluded_measure, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn stratified_sample_is_reproducible() {
        let geo = Geometry::Sphere {
            center: Vec3::zeros(),
            radius: 1.0,
        };
        let a = VolumeGrid::stratified(&geo, 6, 42);
        let b = VolumeGrid::stratified(&geo, 6, 42);
        assert_eq!(a, b);
        assert!(a.points.iter().all(|p| p.norm() <= 1.0));
        assert_relative_eq!(a.total_weight(), 4.0 / 3.0 * PI, max_relative = 1e-12);
        let mean_r2: f64 = a.points.iter().map(|p| p.norm_squared()).sum::<f64>() / a.len() as f64;
        // ⟨r²⟩ over a unit ball is 3/5
        assert!((mean_r2 - 0.6).abs() < 0.02);
    }
}
