//! Scenario files.
//!
//! ```text
//! lfvlab-scenario v1
//! # comment
//! [scenario]
//! name = harmonic_baseline
//! experiment = closed_baseline
//!
//! [system]
//! mass = 1
//! potential = harmonic
//! omega = 1
//! hbar = 1
//!
//! [grid]
//! points = 32
//! x_min = -6
//! x_max = 6
//!
//! [mesh]
//! steps = 64
//! t_total = 6.283185307179586
//! ```
//!
//! Sections hold `key = value` lines; lists are comma-separated. See the
//! README for every section and key.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use lfvlab_core::bath::{BathSpec, Temperature};
use lfvlab_core::closed_system::{Potential, SystemSpec};
use lfvlab_core::collision::{CollisionSchedule, DeltaWeight, DEFAULT_MAX_EPSILON_RATIO};
use lfvlab_core::path_sum::{path_pair_count, MAX_PATH_PAIRS};
use lfvlab_core::{PositionGrid, TimeMesh};

use crate::error::ScenarioError;

pub const HEADER: &str = "lfvlab-scenario v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ClosedBaseline,
    InfluenceCl,
    LindbladPlus,
    CollisionExtraction,
    KernelAudit,
    ThermalAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::ClosedBaseline,
        ExperimentKind::InfluenceCl,
        ExperimentKind::LindbladPlus,
        ExperimentKind::CollisionExtraction,
        ExperimentKind::KernelAudit,
        ExperimentKind::ThermalAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ClosedBaseline => "closed_baseline",
            ExperimentKind::InfluenceCl => "influence_cl",
            ExperimentKind::LindbladPlus => "lindblad_plus",
            ExperimentKind::CollisionExtraction => "collision_extraction",
            ExperimentKind::KernelAudit => "kernel_audit",
            ExperimentKind::ThermalAudit => "thermal_audit",
        }
    }

    fn required_sections(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::ClosedBaseline => &["grid", "mesh"],
            ExperimentKind::InfluenceCl | ExperimentKind::LindbladPlus => &["bath", "grid", "mesh"],
            ExperimentKind::CollisionExtraction => &["bath", "grid", "schedule"],
            ExperimentKind::KernelAudit => &["bath", "mesh"],
            ExperimentKind::ThermalAudit => &["bath", "grid"],
        }
    }

    /// Tolerances the experiment checks, with their defaults.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            ExperimentKind::ClosedBaseline => &[("l2", 1e-3)],
            ExperimentKind::InfluenceCl => &[("zero_coupling", 1e-12), ("hermiticity", 1e-10)],
            ExperimentKind::LindbladPlus => &[("trace", 1e-6), ("hermiticity", 1e-10)],
            ExperimentKind::CollisionExtraction => &[("gamma_rel", 0.1)],
            ExperimentKind::KernelAudit => &[("kernel_abs", 1e-8)],
            ExperimentKind::ThermalAudit => &[("gibbs_rel", 1e-3)],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown experiment '{s}', expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Free,
    Harmonic { omega: f64 },
    Polynomial(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSection {
    pub mass: f64,
    pub potential: PotentialKind,
    pub hbar: f64,
}

impl SystemSection {
    pub fn spec(&self) -> lfvlab_core::Result<SystemSpec> {
        let potential = match &self.potential {
            PotentialKind::Free => Potential::Free,
            PotentialKind::Harmonic { omega } => Potential::Harmonic { omega: *omega },
            PotentialKind::Polynomial(c) => Potential::Polynomial(c.clone()),
        };
        SystemSpec::new(self.mass, potential, self.hbar)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSection {
    pub n: usize,
    pub mass: f64,
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub temperature: Temperature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSection {
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSection {
    pub steps: usize,
    pub t_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSection {
    pub tau: f64,
    pub epsilon: f64,
    pub collisions: usize,
    pub omega: f64,
    pub omegas: Option<Vec<f64>>,
    pub max_ratio: f64,
    pub delta_weight: DeltaWeight,
}

impl ScheduleSection {
    pub fn schedule(&self) -> lfvlab_core::Result<CollisionSchedule> {
        let omegas = self.omegas.clone().unwrap_or_else(|| vec![self.omega; self.collisions]);
        CollisionSchedule::with_ratio_limit(self.tau, self.epsilon, omegas, self.max_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSection {
    pub x0: f64,
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { x0: 0.5, width: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSection {
    pub manifest: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub experiment: ExperimentKind,
    pub system: SystemSection,
    pub bath: Option<BathSection>,
    pub grid: Option<GridSection>,
    pub mesh: Option<MeshSection>,
    pub schedule: Option<ScheduleSection>,
    pub initial: InitialSection,
    pub tolerances: BTreeMap<String, f64>,
    pub output: OutputSection,
}

impl Scenario {
    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            self.experiment
                .default_tolerances()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or(0.0)
        })
    }

    pub fn bath_spec(&self) -> Option<lfvlab_core::Result<BathSpec>> {
        self.bath.as_ref().map(|b| {
            BathSpec::new(b.mass, b.omegas.clone(), b.couplings.clone(), b.temperature, self.system.hbar)
        })
    }

    pub fn position_grid(&self) -> Option<lfvlab_core::Result<PositionGrid>> {
        self.grid.map(|g| PositionGrid::new(g.points, g.x_min, g.x_max))
    }

    pub fn time_mesh(&self) -> Option<lfvlab_core::Result<TimeMesh>> {
        self.mesh.map(|m| TimeMesh::new(m.steps, m.t_total))
    }

    /// Canonical text form; parses back to an equal scenario.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "[scenario]\nname = {}\nexperiment = {}", self.name, self.experiment);
        let sys = &self.system;
        let _ = writeln!(s, "\n[system]\nmass = {:?}\nhbar = {:?}", sys.mass, sys.hbar);
        match &sys.potential {
            PotentialKind::Free => s.push_str("potential = free\n"),
            PotentialKind::Harmonic { omega } => {
                let _ = writeln!(s, "potential = harmonic\nomega = {omega:?}");
            }
            PotentialKind::Polynomial(c) => {
                let _ = writeln!(s, "potential = polynomial\ncoefficients = {}", list(c));
            }
        }
        if let Some(b) = &self.bath {
            let kt = match b.temperature {
                Temperature::Zero => "zero".to_string(),
                Temperature::Finite { kt } => format!("{kt:?}"),
            };
            let _ = writeln!(
                s,
                "\n[bath]\nn = {}\nmass = {:?}\nomegas = {}\ncouplings = {}\nkt = {kt}",
                b.n,
                b.mass,
                list(&b.omegas),
                list(&b.couplings)
            );
        }
        if let Some(g) = &self.grid {
            let _ = writeln!(s, "\n[grid]\npoints = {}\nx_min = {:?}\nx_max = {:?}", g.points, g.x_min, g.x_max);
        }
        if let Some(m) = &self.mesh {
            let _ = writeln!(s, "\n[mesh]\nsteps = {}\nt_total = {:?}", m.steps, m.t_total);
        }
        if let Some(c) = &self.schedule {
            let _ = writeln!(
                s,
                "\n[schedule]\ntau = {:?}\nepsilon = {:?}\ncollisions = {}\nomega = {:?}\nmax_ratio = {:?}\ndelta_weight = {}",
                c.tau,
                c.epsilon,
                c.collisions,
                c.omega,
                c.max_ratio,
                c.delta_weight.name()
            );
            if let Some(w) = &c.omegas {
                let _ = writeln!(s, "omegas = {}", list(w));
            }
        }
        let _ = writeln!(s, "\n[initial]\nx0 = {:?}\nwidth = {:?}", self.initial.x0, self.initial.width);
        if !self.tolerances.is_empty() {
            s.push_str("\n[tolerances]\n");
            for (k, v) in &self.tolerances {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        if self.output != OutputSection::default() {
            s.push_str("\n[output]\n");
            if let Some(p) = &self.output.manifest {
                let _ = writeln!(s, "manifest = {}", p.display());
            }
            if let Some(p) = &self.output.csv_dir {
                let _ = writeln!(s, "csv_dir = {}", p.display());
            }
        }
        s
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("scenario", &["name", "experiment"]),
    ("system", &["mass", "potential", "omega", "coefficients", "hbar"]),
    ("bath", &["n", "mass", "omegas", "couplings", "kt"]),
    ("grid", &["points", "x_min", "x_max"]),
    ("mesh", &["steps", "t_total"]),
    ("schedule", &["tau", "epsilon", "collisions", "omega", "omegas", "max_ratio", "delta_weight"]),
    ("initial", &["x0", "width"]),
    ("tolerances", &[]),
    ("output", &["manifest", "csv_dir"]),
];

type Raw = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn lex(text: &str) -> Result<(Raw, Vec<String>), ScenarioError> {
    let mut raw = Raw::new();
    let mut problems = Vec::new();
    let mut header_seen = false;
    let mut section: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != HEADER {
                return Err(ScenarioError::Syntax {
                    line: lineno,
                    message: format!("expected header '{HEADER}', found '{line}'"),
                });
            }
            header_seen = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ScenarioError::Syntax {
                line: lineno,
                message: format!("unterminated section header '{line}'"),
            })?;
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                problems.push(format!("line {lineno}: unknown section [{name}]"));
            }
            if raw.contains_key(name) {
                problems.push(format!("line {lineno}: section [{name}] appears twice"));
            }
            raw.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ScenarioError::Syntax {
            line: lineno,
            message: format!("expected 'key = value', found '{line}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ScenarioError::Syntax {
                line: lineno,
                message: format!("malformed key '{key}'"),
            });
        }
        let Some(sec) = &section else {
            return Err(ScenarioError::Syntax {
                line: lineno,
                message: "key outside any section".into(),
            });
        };
        let known = SECTIONS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k);
        if let Some(keys) = known {
            if sec != "tolerances" && !keys.contains(&key) {
                problems.push(format!("line {lineno}: unknown key '{key}' in [{sec}]"));
            }
        }
        let entries = raw.get_mut(sec).expect("section registered above");
        if entries.insert(key.to_string(), (lineno, value.to_string())).is_some() {
            problems.push(format!("line {lineno}: duplicate key '{key}' in [{sec}]"));
        }
    }
    if !header_seen {
        return Err(ScenarioError::Syntax {
            line: 1,
            message: format!("missing header '{HEADER}'"),
        });
    }
    Ok((raw, problems))
}

struct Reader<'a> {
    raw: &'a Raw,
    problems: Vec<String>,
}

impl Reader<'_> {
    fn has(&self, sec: &str) -> bool {
        self.raw.contains_key(sec)
    }

    fn text(&mut self, sec: &str, key: &str, required: bool) -> Option<(usize, String)> {
        let v = self.raw.get(sec).and_then(|s| s.get(key)).cloned();
        if v.is_none() && required {
            self.problems.push(format!("[{sec}] is missing '{key}'"));
        }
        v
    }

    fn parse<T: FromStr>(&mut self, sec: &str, key: &str, what: &str, required: bool) -> Option<T> {
        let (line, v) = self.text(sec, key, required)?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.problems.push(format!("line {line}: {sec}.{key}: expected {what}, got '{v}'"));
                None
            }
        }
    }

    fn real(&mut self, sec: &str, key: &str) -> Option<f64> {
        self.parse(sec, key, "a number", true)
    }

    fn count(&mut self, sec: &str, key: &str) -> Option<usize> {
        self.parse(sec, key, "a non-negative integer", true)
    }

    fn list(&mut self, sec: &str, key: &str, required: bool) -> Option<Vec<f64>> {
        let (line, v) = self.text(sec, key, required)?;
        let parsed: Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match parsed {
            Ok(x) => Some(x),
            Err(_) => {
                self.problems.push(format!("line {line}: {sec}.{key}: expected a comma-separated list of numbers, got '{v}'"));
                None
            }
        }
    }
}

fn check<T>(problems: &mut Vec<String>, context: &str, r: lfvlab_core::Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            problems.push(format!("{context}: {e}"));
            None
        }
    }
}

/// Parse and validate a scenario document. Every violated constraint is
/// reported, not just the first.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let (raw, lex_problems) = lex(text)?;
    let mut r = Reader { raw: &raw, problems: lex_problems };

    let name = r.text("scenario", "name", true).map(|(_, v)| v);
    let experiment = r
        .text("scenario", "experiment", true)
        .and_then(|(line, v)| match v.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                r.problems.push(format!("line {line}: {e}"));
                None
            }
        });

    let system = if r.has("system") {
        let mass = r.real("system", "mass");
        let hbar = r.real("system", "hbar");
        let potential = match r.text("system", "potential", true) {
            Some((_, p)) if p == "free" => Some(PotentialKind::Free),
            Some((_, p)) if p == "harmonic" => r.real("system", "omega").map(|omega| PotentialKind::Harmonic { omega }),
            Some((_, p)) if p == "polynomial" => r.list("system", "coefficients", true).map(PotentialKind::Polynomial),
            Some((line, p)) => {
                r.problems.push(format!("line {line}: system.potential: expected free, harmonic or polynomial, got '{p}'"));
                None
            }
            None => None,
        };
        match (mass, hbar, potential) {
            (Some(mass), Some(hbar), Some(potential)) => Some(SystemSection { mass, potential, hbar }),
            _ => None,
        }
    } else {
        r.problems.push("missing section [system]".into());
        None
    };

    if let Some(kind) = experiment {
        for sec in kind.required_sections() {
            if !r.has(sec) {
                r.problems.push(format!("experiment {kind} needs section [{sec}]"));
            }
        }
    }

    let bath = if r.has("bath") {
        let n = r.count("bath", "n");
        let mass = r.real("bath", "mass");
        let omegas = r.list("bath", "omegas", true);
        let couplings = r.list("bath", "couplings", true);
        let temperature = match r.text("bath", "kt", true) {
            Some((_, v)) if v == "zero" => Some(Temperature::Zero),
            Some((line, v)) => match v.parse::<f64>() {
                Ok(kt) => Some(Temperature::Finite { kt }),
                Err(_) => {
                    r.problems.push(format!("line {line}: bath.kt: expected a number or 'zero', got '{v}'"));
                    None
                }
            },
            None => None,
        };
        if let Some(n) = n {
            for (key, list) in [("omegas", &omegas), ("couplings", &couplings)] {
                if let Some(l) = list {
                    if l.len() != n {
                        r.problems.push(format!("bath.{key} has {} entries but bath.n = {n}", l.len()));
                    }
                }
            }
        }
        match (n, mass, omegas, couplings, temperature) {
            (Some(n), Some(mass), Some(omegas), Some(couplings), Some(temperature)) => Some(BathSection {
                n,
                mass,
                omegas,
                couplings,
                temperature,
            }),
            _ => None,
        }
    } else {
        None
    };

    let grid = if r.has("grid") {
        match (r.count("grid", "points"), r.real("grid", "x_min"), r.real("grid", "x_max")) {
            (Some(points), Some(x_min), Some(x_max)) => Some(GridSection { points, x_min, x_max }),
            _ => None,
        }
    } else {
        None
    };

    let mesh = if r.has("mesh") {
        match (r.count("mesh", "steps"), r.real("mesh", "t_total")) {
            (Some(steps), Some(t_total)) => Some(MeshSection { steps, t_total }),
            _ => None,
        }
    } else {
        None
    };

    let schedule = if r.has("schedule") {
        let tau = r.real("schedule", "tau");
        let epsilon = r.real("schedule", "epsilon");
        let collisions = r.count("schedule", "collisions");
        let omega = r.real("schedule", "omega");
        let omegas = r.list("schedule", "omegas", false);
        let max_ratio = if r.text("schedule", "max_ratio", false).is_some() {
            r.real("schedule", "max_ratio")
        } else {
            Some(DEFAULT_MAX_EPSILON_RATIO)
        };
        let delta_weight = match r.text("schedule", "delta_weight", false) {
            None => Some(DeltaWeight::Unit),
            Some((_, v)) if v == "unit" => Some(DeltaWeight::Unit),
            Some((_, v)) if v == "mesh_cell" => Some(DeltaWeight::MeshCell),
            Some((line, v)) => {
                r.problems.push(format!("line {line}: schedule.delta_weight: expected unit or mesh_cell, got '{v}'"));
                None
            }
        };
        if let (Some(n), Some(w)) = (collisions, &omegas) {
            if w.len() != n {
                r.problems.push(format!("schedule.omegas has {} entries but schedule.collisions = {n}", w.len()));
            }
        }
        match (tau, epsilon, collisions, omega, max_ratio, delta_weight) {
            (Some(tau), Some(epsilon), Some(collisions), Some(omega), Some(max_ratio), Some(delta_weight)) => {
                Some(ScheduleSection {
                    tau,
                    epsilon,
                    collisions,
                    omega,
                    omegas,
                    max_ratio,
                    delta_weight,
                })
            }
            _ => None,
        }
    } else {
        None
    };

    let initial = if r.has("initial") {
        let d = InitialSection::default();
        let x0 = if r.text("initial", "x0", false).is_some() { r.real("initial", "x0") } else { Some(d.x0) };
        let width = if r.text("initial", "width", false).is_some() { r.real("initial", "width") } else { Some(d.width) };
        InitialSection {
            x0: x0.unwrap_or(d.x0),
            width: width.unwrap_or(d.width),
        }
    } else {
        InitialSection::default()
    };
    if initial.width.is_nan() || initial.width <= 0.0 {
        r.problems.push(format!("initial.width must be > 0, got {}", initial.width));
    }

    let mut tolerances = BTreeMap::new();
    if let Some(entries) = raw.get("tolerances") {
        let known: Vec<&str> = experiment
            .map(|k| k.default_tolerances().iter().map(|(n, _)| *n).collect())
            .unwrap_or_default();
        for (key, (line, v)) in entries {
            if experiment.is_some() && !known.contains(&key.as_str()) {
                r.problems.push(format!("line {line}: tolerance '{key}' is not used by this experiment (known: {})", known.join(", ")));
            }
            match v.parse::<f64>() {
                Ok(x) if x >= 0.0 => {
                    tolerances.insert(key.clone(), x);
                }
                _ => r.problems.push(format!("line {line}: tolerances.{key}: expected a non-negative number, got '{v}'")),
            }
        }
    }

    let output = OutputSection {
        manifest: r.text("output", "manifest", false).map(|(_, v)| PathBuf::from(v)),
        csv_dir: r.text("output", "csv_dir", false).map(|(_, v)| PathBuf::from(v)),
    };

    let mut problems = r.problems;
    let (Some(name), Some(experiment), Some(system)) = (name, experiment, system) else {
        return Err(ScenarioError::Invalid(problems));
    };
    let scenario = Scenario {
        name,
        experiment,
        system,
        bath,
        grid,
        mesh,
        schedule,
        initial,
        tolerances,
        output,
    };
    validate_models(&scenario, &mut problems);
    if problems.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(problems))
    }
}

/// Build every core model the scenario describes and collect their
/// invariant violations, plus the experiment-level constraints.
fn validate_models(s: &Scenario, problems: &mut Vec<String>) {
    let spec = check(problems, "system", s.system.spec());
    let bath = s.bath_spec().and_then(|r| check(problems, "bath", r));
    let grid = s.position_grid().and_then(|r| check(problems, "grid", r));
    let mesh = s.time_mesh().and_then(|r| check(problems, "mesh", r));
    let schedule = s.schedule.as_ref().and_then(|c| check(problems, "schedule", c.schedule()));

    match s.experiment {
        ExperimentKind::ClosedBaseline => {
            if let Some(spec) = &spec {
                if matches!(s.system.potential, PotentialKind::Polynomial(_)) && !spec.potential.is_quadratic() {
                    problems.push("closed_baseline needs a free or harmonic potential".into());
                }
            }
        }
        ExperimentKind::InfluenceCl => {
            if let (Some(g), Some(m)) = (&grid, &mesh) {
                let count = path_pair_count(g.len(), m.n_steps());
                if count > MAX_PATH_PAIRS {
                    problems.push(format!(
                        "influence_cl enumerates {count:e} path pairs ({} grid points, {} steps), limit {MAX_PATH_PAIRS:e}",
                        g.len(),
                        m.n_steps()
                    ));
                }
            }
        }
        ExperimentKind::LindbladPlus => {
            if let Some(g) = &grid {
                if g.len() > 32 {
                    problems.push(format!("lindblad_plus needs at most 32 grid points, got {}", g.len()));
                }
            }
        }
        ExperimentKind::CollisionExtraction => {
            if let Some(g) = &grid {
                if g.len() > 32 {
                    problems.push(format!("collision_extraction needs at most 32 grid points, got {}", g.len()));
                }
            }
            if let (Some(b), Some(c)) = (&bath, &schedule) {
                if b.len() != c.len() {
                    problems.push(format!(
                        "collision_extraction needs one bath oscillator per collision: bath.n = {}, schedule.collisions = {}",
                        b.len(),
                        c.len()
                    ));
                }
                if b.couplings().iter().any(|&x| x != b.couplings()[0]) {
                    problems.push("collision_extraction needs equal couplings for the repeated-interaction channel".into());
                }
                if b.omegas().iter().zip(c.omegas()).any(|(a, w)| a != w) {
                    problems.push("bath.omegas must match the schedule frequencies collision by collision".into());
                }
            }
        }
        ExperimentKind::KernelAudit | ExperimentKind::ThermalAudit => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "lfvlab-scenario v1\n[scenario]\nname = t\nexperiment = closed_baseline\n\
        [system]\nmass = 1\npotential = harmonic\nomega = 1\nhbar = 1\n\
        [grid]\npoints = 8\nx_min = -3\nx_max = 3\n[mesh]\nsteps = 4\nt_total = 1\n";

    #[test]
    fn header_is_required() {
        let err = parse_scenario("[scenario]\nname = x\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Syntax { line: 1, .. }));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "lfvlab-scenario v1\n[scenario]\nname = x\nthis line is wrong\n";
        let ScenarioError::Syntax { line, .. } = parse_scenario(text).unwrap_err() else { panic!() };
        assert_eq!(line, 4);
    }

    #[test]
    fn comments_and_round_trip() {
        let text = MINIMAL.replace("mass = 1\n", "mass = 1   # kg-free units\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(parse_scenario(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn all_violations_are_listed() {
        let text = MINIMAL.replace("points = 8", "points = 1").replace("steps = 4", "steps = zero").replace("mass = 1", "mass = -1");
        let ScenarioError::Invalid(p) = parse_scenario(&text).unwrap_err() else { panic!() };
        assert!(p.iter().any(|m| m.contains("mesh.steps")), "{p:?}");
        assert!(p.iter().any(|m| m.starts_with("grid")), "{p:?}");
        assert!(p.iter().any(|m| m.starts_with("system")), "{p:?}");
    }

    #[test]
    fn unknown_keys_and_experiments() {
        let text = MINIMAL.replace("experiment = closed_baseline", "experiment = nope").replace("x_max = 3", "x_max = 3\ncolour = red");
        let ScenarioError::Invalid(p) = parse_scenario(&text).unwrap_err() else { panic!() };
        assert!(p.iter().any(|m| m.contains("unknown experiment 'nope'")));
        assert!(p.iter().any(|m| m.contains("unknown key 'colour'")));
    }
}
