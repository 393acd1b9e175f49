//! Problem dispatch. Every row is computed before anything is written, so
//! a failed run leaves no output files behind.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use casimir_core::born;
use casimir_core::potentials::{self, omega_char, Regime};
use casimir_core::{
    check_convergence, clausius_mosotti, packing_diagnostic, q_factor, AtomAt, AtomSpecies, Background, BodySpec,
    Geometry, MediumModel, QuadratureSpec, Vec3, VolumeSpec,
};
use serde_json::json;

use crate::config::{self, require, ConfigError, Problem, Resolved, RunConfig};

/// Fallback used by the packing diagnostic when the config gives none.
pub const DEFAULT_PACKING_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rel_tol: Option<f64>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(casimir_core::Error),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(e) if is_input_error(e) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

fn is_input_error(e: &casimir_core::Error) -> bool {
    use casimir_core::Error::*;
    matches!(e, InvalidInput(_) | GeometryViolation(_) | UnsupportedOrder(_))
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "error[config]: {e}"),
            Failure::Numerical(e) => write!(f, "error[{}]: {e}", e.name()),
            Failure::Io(msg) => write!(f, "error[io]: {msg}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<casimir_core::Error> for Failure {
    fn from(e: casimir_core::Error) -> Self {
        Failure::Numerical(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Finished computation, ready to be written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: String,
    pub sidecar: serde_json::Value,
    /// Printed to stdout after the files are written.
    pub summary: Option<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out += &r.join(",");
            out.push('\n');
        }
        out
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    res: Resolved,
    quadrature: QuadratureSpec,
    volume: VolumeSpec,
}

/// Unit vector from `from` to `to`, or +z when they coincide.
fn direction(from: &Vec3, to: &Vec3) -> Vec3 {
    let d = to - from;
    let n = d.norm();
    if n > 0.0 {
        d / n
    } else {
        Vec3::z()
    }
}

fn reference_point(geometry: &Geometry) -> Vec3 {
    match geometry {
        Geometry::Sphere { center, .. } => *center,
        Geometry::Box { corner, extents } => corner + extents / 2.0,
        Geometry::PointCloud { points, .. } => points.iter().sum::<Vec3>() / points.len() as f64,
    }
}

impl Context<'_> {
    /// Natural-unit distances to evaluate, or `None` for the configured
    /// positions as given.
    fn sweep(&self) -> Option<Vec<f64>> {
        self.cfg
            .sweep
            .as_ref()
            .map(|s| s.values().into_iter().map(|v| self.res.length(v)).collect())
    }

    fn background_medium(&self) -> MediumModel {
        match &self.res.background {
            Background::Vacuum => MediumModel::vacuum(),
            Background::Bulk(m) => m.clone(),
        }
    }

    fn regime(&self, distance: f64, species: &[&AtomSpecies], media: &[&MediumModel]) -> &'static str {
        let w = omega_char(species.iter().copied(), media.iter().copied());
        Regime::classify(distance, w).as_str()
    }

    fn cp_sphere(&self) -> Outcome<Table> {
        let atom = self.res.atom("atom", require(&self.cfg.atom, "atom")?)?;
        let sphere = self.res.sphere(require(&self.cfg.sphere, "sphere")?)?;
        let dir = direction(&sphere.center, &atom.position);
        let distances = self
            .sweep()
            .unwrap_or_else(|| vec![(atom.position - sphere.center).norm()]);
        let mut t = Table::new(&["distance", "energy", "error", "converged", "nonretarded", "retarded", "regime"]);
        for r in distances {
            let a = AtomAt::new(atom.species.clone(), sphere.center + dir * r);
            let full = potentials::cp_sphere(&a, &sphere, &self.quadrature)?;
            let e = potentials::cp_sphere_nonretarded_e(&a, &sphere, &self.quadrature)?;
            let m = potentials::cp_sphere_nonretarded_m(&a, &sphere, &self.quadrature)?;
            let ret = potentials::cp_sphere_retarded(&a, &sphere)?;
            t.push(vec![
                num(self.res.length_out(r)),
                num(self.res.energy_out(full.value)),
                num(self.res.energy_out(full.error)),
                u8::from(full.converged).to_string(),
                num(self.res.energy_out(e.value + m.value)),
                num(self.res.energy_out(ret)),
                self.regime(r, &[&a.species], &[&sphere.medium]).into(),
            ]);
        }
        Ok(t)
    }

    fn atoms(&self) -> Outcome<Vec<AtomAt>> {
        let defs = require(&self.cfg.atoms, "atoms")?;
        defs.iter()
            .enumerate()
            .map(|(i, d)| self.res.atom(&format!("atoms[{i}]"), d).map_err(Failure::from))
            .collect()
    }

    fn vdw_pair(&self) -> Outcome<Table> {
        let atoms = self.atoms()?;
        if atoms.len() != 2 {
            return Err(ConfigError {
                path: "atoms".into(),
                message: format!("vdw-pair needs exactly 2 atoms, got {}", atoms.len()),
            }
            .into());
        }
        let medium = self.background_medium();
        let (a, b0) = (&atoms[0], &atoms[1]);
        let dir = direction(&a.position, &b0.position);
        let distances = self.sweep().unwrap_or_else(|| vec![(b0.position - a.position).norm()]);
        let mut t = Table::new(&["distance", "energy", "error", "converged", "nonretarded", "retarded", "regime"]);
        for r in distances {
            let b = AtomAt::new(b0.species.clone(), a.position + dir * r);
            let full = potentials::vdw_pair_general(a, &b, &self.res.background, &self.quadrature)?;
            let nonret = potentials::vdw_pair_nonretarded(a, &b, &medium, &self.quadrature)?;
            let ret = potentials::vdw_pair_retarded(a, &b, &medium)?;
            t.push(vec![
                num(self.res.length_out(r)),
                num(self.res.energy_out(full.value)),
                num(self.res.energy_out(full.error)),
                u8::from(full.converged).to_string(),
                num(self.res.energy_out(nonret.value)),
                num(self.res.energy_out(ret)),
                self.regime(r, &[&a.species, &b.species], &[&medium]).into(),
            ]);
        }
        Ok(t)
    }

    fn many_atom(&self) -> Outcome<Table> {
        let atoms = self.atoms()?;
        let medium = self.background_medium();
        let origin = atoms.first().map_or(Vec3::zeros(), |a| a.position);
        let scales = self
            .cfg
            .sweep
            .as_ref()
            .map_or_else(|| vec![1.0], |s| s.values());
        let mut t = Table::new(&["scale", "min_distance", "energy", "error", "converged", "regime"]);
        for s in scales {
            let moved: Vec<AtomAt> = atoms
                .iter()
                .map(|a| AtomAt::new(a.species.clone(), origin + (a.position - origin) * s))
                .collect();
            let est = potentials::vdw_many_atom(&moved, &self.res.background, &self.quadrature)?;
            let mut closest = f64::INFINITY;
            for (i, a) in moved.iter().enumerate() {
                for b in &moved[..i] {
                    closest = closest.min((a.position - b.position).norm());
                }
            }
            let refs: Vec<&AtomSpecies> = moved.iter().map(|a| &a.species).collect();
            t.push(vec![
                num(s),
                num(self.res.length_out(closest)),
                num(self.res.energy_out(est.value)),
                num(self.res.energy_out(est.error)),
                u8::from(est.converged).to_string(),
                self.regime(closest, &refs, &[&medium]).into(),
            ]);
        }
        Ok(t)
    }

    fn atom_and_body(&self) -> Outcome<(AtomAt, BodySpec)> {
        let atom = self.res.atom("atom", require(&self.cfg.atom, "atom")?)?;
        let body = self.res.body(require(&self.cfg.body, "body")?)?;
        Ok((atom, body))
    }

    /// Shared loop of `born` and `micro`: one row per atom distance from
    /// the body's reference point.
    fn body_sweep<F>(&self, mut term: F) -> Outcome<Table>
    where
        F: FnMut(&AtomAt, &BodySpec) -> casimir_core::Result<f64>,
    {
        let (atom, body) = self.atom_and_body()?;
        let centre = reference_point(&body.geometry);
        let dir = direction(&centre, &atom.position);
        let distances = self.sweep().unwrap_or_else(|| vec![(atom.position - centre).norm()]);
        let medium = self.background_medium();
        let mut species: Vec<&AtomSpecies> = body.composition.iter().map(|c| &c.species).collect();
        species.push(&atom.species);
        let mut t = Table::new(&["distance", "gap", "energy", "grid", "regime"]);
        for r in distances {
            let a = AtomAt::new(atom.species.clone(), centre + dir * r);
            let value = term(&a, &body)?;
            let gap = body.geometry.distance_to(&a.position);
            t.push(vec![
                num(self.res.length_out(r)),
                num(self.res.length_out(gap)),
                num(self.res.energy_out(value)),
                self.volume.grid.to_string(),
                self.regime(gap, &species, &[&medium]).into(),
            ]);
        }
        Ok(t)
    }

    fn born(&self) -> Outcome<Table> {
        let k = self.cfg.order.unwrap_or(1);
        match self.cfg.channel {
            Some(l) => {
                if !self.res.background.is_vacuum() {
                    return Err(ConfigError {
                        path: "channel".into(),
                        message: "l-channels are only available in a vacuum background".into(),
                    }
                    .into());
                }
                self.body_sweep(|a, b| born::born_term_l_channel(a, b, k, l, &self.volume))
            }
            None => self.body_sweep(|a, b| born::born_term(a, b, &self.res.background, k, &self.volume)),
        }
    }

    fn micro(&self) -> Outcome<Table> {
        let l = self.cfg.order.unwrap_or(1);
        self.body_sweep(|a, b| born::micro_term(a, b, l, &self.res.background, &self.volume))
    }

    fn verify(&self) -> Outcome<born::SeriesReport> {
        if !self.res.background.is_vacuum() {
            return Err(ConfigError {
                path: "background".into(),
                message: "verify runs in a vacuum background".into(),
            }
            .into());
        }
        let (atom, body) = self.atom_and_body()?;
        let orders = self.cfg.orders.unwrap_or_default();
        let refinements = self.cfg.refinements.clone().unwrap_or_else(|| vec![self.volume.grid]);
        Ok(born::verify_equivalence(&atom, &body, &self.volume, orders, &refinements)?)
    }

    fn check(&self) -> Outcome<Table> {
        let body = self.res.body(require(&self.cfg.body, "body")?)?;
        let comp = &body.composition;
        let gate = check_convergence(comp);
        let f = self.cfg.packing_factor.unwrap_or(DEFAULT_PACKING_FACTOR);
        let packing = packing_diagnostic(comp, f, self.res.bohr_radius())?;
        let mut t = Table::new(&["quantity", "value"]);
        let mut row = |k: &str, v: String| t.push(vec![k.to_string(), v]);
        row("density_polarizability", num(body.density_polarizability(0.0)));
        row("gate_value", num(gate.value));
        row("gate_margin", num(gate.margin));
        row("gate_passes", u8::from(gate.passes).to_string());
        if gate.passes {
            row("chi0", num(clausius_mosotti(comp, 0.0)?));
            row("q0", num(q_factor(comp, 0.0)?));
        }
        row("packing_factor", num(f));
        row("packing_vs_over_va", num(packing.vs_over_va));
        row("packing_threshold", num(packing.threshold));
        row("packing_satisfied", u8::from(packing.satisfied).to_string());
        row("packing_marginal", u8::from(packing.marginal).to_string());
        Ok(t)
    }
}

/// Validate `cfg` for `problem` and compute all outputs in memory.
pub fn run(cfg: &RunConfig, problem: Problem, overrides: &Overrides) -> Outcome<RunOutput> {
    config::validate_for(cfg, problem)?;
    let res = Resolved::build(cfg)?;
    let quadrature = res.quadrature(&cfg.quadrature, overrides.rel_tol)?;
    let volume = res.volume(&cfg.volume, quadrature, overrides.grid, overrides.seed)?;
    if let Some(orders) = cfg.orders {
        orders.validate()?;
    }
    let ctx = Context {
        cfg,
        res,
        quadrature,
        volume,
    };

    let (csv, columns, report, summary) = match problem {
        Problem::Verify => {
            let report = ctx.verify()?;
            let line = format!(
                "verify: {} (K = {}, L = {}, extrapolated discrepancy {:.3e}, threshold {:.3e})",
                if report.passes { "PASS" } else { "FAIL" },
                report.orders.k,
                report.orders.l,
                report.extrapolated_discrepancy,
                report.threshold
            );
            let csv = report.to_csv();
            let columns = vec!["quantity", "order", "grid", "nodes", "value"];
            (csv, columns, Some(serde_json::to_value(&report).expect("report serialises")), Some(line))
        }
        _ => {
            let table = match problem {
                Problem::CpSphere => ctx.cp_sphere()?,
                Problem::VdwPair => ctx.vdw_pair()?,
                Problem::ManyAtom => ctx.many_atom()?,
                Problem::Born => ctx.born()?,
                Problem::Micro => ctx.micro()?,
                Problem::Check => ctx.check()?,
                Problem::Verify => unreachable!(),
            };
            (table.to_csv(), table.columns, None, None)
        }
    };

    let sidecar = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "problem": problem.as_str(),
        "columns": columns,
        "units": {
            "system": ctx.cfg.units,
            "length": ctx.res.length_unit(),
            "energy": ctx.res.energy_unit(),
            "length_scale_m": ctx.res.scale.map(|s| s.length),
        },
        "overrides": {
            "rel_tol": overrides.rel_tol,
            "grid": overrides.grid,
            "seed": overrides.seed,
        },
        "tolerances": {
            "quadrature": ctx.quadrature,
            "volume": ctx.volume,
        },
        "config": ctx.cfg,
        "report": report,
    });
    Ok(RunOutput { csv, sidecar, summary })
}

/// Sidecar path next to the CSV: `run.csv` gets `run.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

pub fn write(out: &Path, result: &RunOutput) -> Outcome<()> {
    let sidecar = serde_json::to_string_pretty(&result.sidecar).expect("sidecar serialises");
    fs::write(out, &result.csv).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let side = sidecar_path(out);
    fs::write(&side, sidecar + "\n").map_err(|e| Failure::Io(format!("{}: {e}", side.display())))?;
    Ok(())
}

/// Read, parse, run and write. Nothing is written unless every step succeeds.
pub fn execute(config_path: &Path, out: &Path, problem: Problem, overrides: &Overrides) -> Outcome<RunOutput> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        Failure::Config(ConfigError {
            path: String::new(),
            message: format!("cannot read {}: {e}", config_path.display()),
        })
    })?;
    let cfg = config::parse(&text)?;
    for target in [out.to_path_buf(), sidecar_path(out)] {
        if same_file(&target, config_path) {
            return Err(Failure::Config(ConfigError {
                path: String::new(),
                message: format!("output {} would overwrite the configuration", target.display()),
            }));
        }
    }
    let result = run(&cfg, problem, overrides)?;
    write(out, &result)?;
    Ok(result)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}
