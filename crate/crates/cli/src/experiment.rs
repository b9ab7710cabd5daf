//! Experiment runners. Each one turns a validated [`Scenario`] into a
//! [`ResultManifest`] with tables and pass/fail checks.

use lfvlab_core::bath::{
    dissipation_kernel, noise_kernel, thermal_density, thermal_density_as_printed, BathSpec,
};
use lfvlab_core::closed_system::{
    evolve_closed, j_closed, position_hamiltonian, position_operator, GridDensityMatrix,
};
use lfvlab_core::collision::{extract_lindblad, DeltaWeight};
use lfvlab_core::influence::{default_kernel, j_fv_matrix, rho_propagate_fv};
use lfvlab_core::lgks::{check_positivity, cl_memory_kernels, integrate_lindblad_plus, LindbladOperatorSet};
use lfvlab_core::numerics::{hermiticity_defect, trace};
use lfvlab_core::oracle::{
    bath_force_correlator, gibbs_position_matrix, repeated_interaction_sim, SystemBasis, TruncatedOscillator,
};
use lfvlab_core::{Complex64, ComplexMatrix, PositionGrid, TimeMesh};

use crate::error::RunError;
use crate::manifest::{Check, ResultManifest, Table, SCHEMA};
use crate::scenario::{ExperimentKind, Scenario};

type Result<T> = std::result::Result<T, RunError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> Stage<T> for lfvlab_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| RunError::Stage { stage, source })
    }
}

fn need<T>(v: Option<T>, stage: &'static str, what: &'static str) -> Result<T> {
    v.ok_or(RunError::Missing { stage, what })
}

fn grid_of(s: &Scenario, stage: &'static str) -> Result<PositionGrid> {
    need(s.position_grid(), stage, "[grid]")?.stage(stage)
}

fn mesh_of(s: &Scenario, stage: &'static str) -> Result<TimeMesh> {
    need(s.time_mesh(), stage, "[mesh]")?.stage(stage)
}

fn bath_of(s: &Scenario, stage: &'static str) -> Result<BathSpec> {
    need(s.bath_spec(), stage, "[bath]")?.stage(stage)
}

fn initial_state(s: &Scenario, grid: &PositionGrid) -> Result<GridDensityMatrix> {
    let (x0, w) = (s.initial.x0, s.initial.width);
    let psi: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&x| Complex64::new((-(x - x0) * (x - x0) / (2.0 * w * w)).exp(), 0.0))
        .collect();
    GridDensityMatrix::pure(*grid, &psi).stage("initial state")
}

fn expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> f64 {
    trace(&(rho * op)).re
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Run the scenario's experiment.
pub fn run_experiment(s: &Scenario) -> Result<ResultManifest> {
    let mut manifest = ResultManifest {
        schema: SCHEMA.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_name: s.name.clone(),
        experiment: s.experiment.name().to_string(),
        scenario_echo: s.to_text(),
        n_delta: None,
        delta_weight: None,
        ancilla_cutoffs: Vec::new(),
        seeds: Vec::new(),
        tables: Vec::new(),
        checks: Vec::new(),
        notes: Vec::new(),
    };
    match s.experiment {
        ExperimentKind::ClosedBaseline => closed_baseline(s, &mut manifest)?,
        ExperimentKind::InfluenceCl => influence_cl(s, &mut manifest)?,
        ExperimentKind::LindbladPlus => lindblad_plus(s, &mut manifest)?,
        ExperimentKind::CollisionExtraction => collision_extraction(s, &mut manifest)?,
        ExperimentKind::KernelAudit => kernel_audit(s, &mut manifest)?,
        ExperimentKind::ThermalAudit => thermal_audit(s, &mut manifest)?,
    }
    Ok(manifest)
}

fn closed_baseline(s: &Scenario, out: &mut ResultManifest) -> Result<()> {
    const STAGE: &str = "closed_baseline";
    let spec = s.system.spec().stage(STAGE)?;
    let grid = grid_of(s, STAGE)?;
    let mesh = mesh_of(s, STAGE)?;
    let rho0 = initial_state(s, &grid)?;
    let h = position_hamiltonian(&spec, &grid);
    let kernel = default_kernel(&spec);
    let mut table = Table::new("closed_diff", &[("t", "time"), ("l2_diff", "1/length"), ("trace_grid", "1")]);
    let mut worst = 0.0f64;
    for (k, t) in mesh.times().into_iter().enumerate() {
        let j = j_closed(&grid, &spec, t, k.max(1), kernel).stage(STAGE)?;
        let by_grid = j.apply(&rho0).stage(STAGE)?;
        let op = evolve_closed(&rho0.to_operator(), &h, t, spec.hbar).stage(STAGE)?;
        let reference = GridDensityMatrix::from_operator(grid, &op).stage(STAGE)?;
        let d = by_grid.l2_distance(&reference).stage(STAGE)?;
        worst = worst.max(d);
        table.push(vec![t, d, by_grid.trace().re]);
    }
    out.tables.push(table);
    out.checks.push(Check::at_most("l2", worst, s.tolerance("l2")));
    Ok(())
}

fn influence_cl(s: &Scenario, out: &mut ResultManifest) -> Result<()> {
    const STAGE: &str = "influence_cl";
    let spec = s.system.spec().stage(STAGE)?;
    let grid = grid_of(s, STAGE)?;
    let mesh = mesh_of(s, STAGE)?;
    let bath = bath_of(s, STAGE)?;
    let rho0 = initial_state(s, &grid)?;
    let kernel = default_kernel(&spec);
    let t = mesh.t_total();

    let j_fv = j_fv_matrix(&grid, &mesh, &spec, &bath).stage(STAGE)?;
    let j_cl = j_closed(&grid, &spec, t, mesh.n_steps(), kernel).stage(STAGE)?;
    let rho_fv = rho_propagate_fv(&rho0, &j_fv).stage(STAGE)?;
    let rho_cl = j_cl.apply(&rho0).stage(STAGE)?;

    let mut density = Table::new(
        "fv_density",
        &[("t", "time"), ("x", "length"), ("rho_fv_diag", "1/length"), ("rho_closed_diag", "1/length")],
    );
    for (j, x) in grid.points().into_iter().enumerate() {
        density.push(vec![t, x, rho_fv.values()[(j, j)].re, rho_cl.values()[(j, j)].re]);
    }
    out.tables.push(density);
    let mut summary = Table::new(
        "fv_summary",
        &[("t", "time"), ("trace_fv_re", "1"), ("trace_fv_im", "1"), ("trace_closed", "1"), ("second_moment_fv", "length^2")],
    );
    let tr = rho_fv.trace();
    summary.push(vec![t, tr.re, tr.im, rho_cl.trace().re, rho_fv.second_moment()]);
    out.tables.push(summary);

    let decoupled = j_fv_matrix(&grid, &mesh, &spec, &bath.scaled_couplings(0.0).stage(STAGE)?).stage(STAGE)?;
    let scale = j_cl.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let zero = decoupled.max_abs_diff(&j_cl).stage(STAGE)? / scale;
    out.checks.push(Check::at_most("zero_coupling", zero, s.tolerance("zero_coupling")));
    out.checks.push(Check::at_most("hermiticity", rho_fv.hermiticity_defect(), s.tolerance("hermiticity")));
    Ok(())
}

fn lindblad_plus(s: &Scenario, out: &mut ResultManifest) -> Result<()> {
    const STAGE: &str = "lindblad_plus";
    let spec = s.system.spec().stage(STAGE)?;
    let grid = grid_of(s, STAGE)?;
    let mesh = mesh_of(s, STAGE)?;
    let bath = bath_of(s, STAGE)?;
    let rho0 = initial_state(s, &grid)?.to_operator();
    let h = position_hamiltonian(&spec, &grid);
    let x = position_operator(&grid);
    let ops = LindbladOperatorSet::new(h.clone(), Vec::new(), spec.hbar).stage(STAGE)?;
    let kernels = cl_memory_kernels(&bath, spec.hbar).stage(STAGE)?.with_coupling(x.clone());
    out.n_delta = Some(kernels.n_delta().name().to_string());
    let states = integrate_lindblad_plus(&ops, &kernels, &rho0, &mesh).stage(STAGE)?;

    let x2 = &x * &x;
    let mut table = Table::new(
        "plus_trajectory",
        &[
            ("t", "time"),
            ("trace_re", "1"),
            ("trace_im", "1"),
            ("purity", "1"),
            ("x_mean", "length"),
            ("x2_mean", "length^2"),
            ("min_eigenvalue", "1"),
            ("distance_to_closed", "1"),
        ],
    );
    let (mut worst_trace, mut worst_herm) = (0.0f64, 0.0f64);
    for (t, rho) in mesh.times().into_iter().zip(&states) {
        let tr = trace(rho);
        let closed = evolve_closed(&rho0, &h, t, spec.hbar).stage(STAGE)?;
        let report = check_positivity(rho, 1e-8).stage(STAGE)?;
        worst_trace = worst_trace.max((tr - 1.0).norm());
        worst_herm = worst_herm.max(hermiticity_defect(rho));
        table.push(vec![
            t,
            tr.re,
            tr.im,
            trace(&(rho * rho)).re,
            expectation(rho, &x),
            expectation(rho, &x2),
            report.min_eigenvalue,
            max_abs(&(rho - closed)),
        ]);
    }
    out.tables.push(table);
    out.checks.push(Check::at_most("trace", worst_trace, s.tolerance("trace")));
    out.checks.push(Check::at_most("hermiticity", worst_herm, s.tolerance("hermiticity")));
    Ok(())
}

fn collision_extraction(s: &Scenario, out: &mut ResultManifest) -> Result<()> {
    const STAGE: &str = "collision_extraction";
    let spec = s.system.spec().stage(STAGE)?;
    let grid = grid_of(s, STAGE)?;
    let bath = bath_of(s, STAGE)?;
    let section = need(s.schedule.as_ref(), STAGE, "[schedule]")?;
    let schedule = section.schedule().stage(STAGE)?;
    let extraction = extract_lindblad(&schedule, &bath, schedule.t_total()).stage(STAGE)?;
    let weight = match section.delta_weight {
        DeltaWeight::Unit => 1.0,
        DeltaWeight::MeshCell => schedule.tau() / schedule.epsilon(),
    };
    out.delta_weight = Some(section.delta_weight.name().to_string());

    let system = SystemBasis::on_grid(&grid, &spec).stage(STAGE)?;
    let rho0 = initial_state(s, &grid)?.to_operator();
    let ancilla = TruncatedOscillator::auto(schedule.omega(1), bath.mass(), bath.temperature(), bath.hbar()).stage(STAGE)?;
    let pair = (0, grid.len() - 1);
    let run = repeated_interaction_sim(&rho0, &system, &ancilla, bath.couplings()[0], &schedule, pair).stage(STAGE)?;
    let mut cutoffs = run.ancilla_dims.clone();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    out.ancilla_cutoffs = cutoffs;

    let mut table = Table::new(
        "gamma",
        &[
            ("i", "1"),
            ("tau_i", "time"),
            ("phi_i", "energy*time"),
            ("gamma_i", "energy*time"),
            ("oracle_gamma_i", "energy*time"),
            ("rel_diff", "1"),
        ],
    );
    let mut worst = 0.0f64;
    for i in 0..schedule.len() {
        let g = extraction.gamma[i] * weight;
        let o = run.decay_rate[i];
        let rel = ((g - o) / o).abs();
        worst = worst.max(rel);
        table.push(vec![(i + 1) as f64, extraction.tau[i], extraction.phi[i] * weight, g, o, rel]);
    }
    out.tables.push(table);
    if !extraction.negative_gamma.is_empty() {
        out.notes.push(format!(
            "gamma_i < 0 at collisions {:?}: the extracted generator is not completely positive there",
            extraction.negative_gamma
        ));
    }
    if extraction.index_pairing_caveat {
        out.notes.push("collisions use different frequencies; the endpoint pairing is not index-aligned".into());
    }
    out.notes.push(format!(
        "channel coherence tracked between grid points {} and {}",
        pair.0, pair.1
    ));
    out.checks.push(Check::at_most("gamma_rel", worst, s.tolerance("gamma_rel")));
    Ok(())
}

fn kernel_audit(s: &Scenario, out: &mut ResultManifest) -> Result<()> {
    const STAGE: &str = "kernel_audit";
    let mesh = mesh_of(s, STAGE)?;
    let bath = bath_of(s, STAGE)?;
    let hbar = bath.hbar();
    let mut kernels = Table::new(
        "kernels",
        &[("s", "time"), ("noise_kernel", "energy/length^2"), ("dissipation_kernel", "energy/length^2")],
    );
    let mut diffs = Table::new(
        "correlator_diff",
        &[("s", "time"), ("noise_diff", "energy/length^2"), ("dissipation_diff", "energy/length^2")],
    );
    let mut worst = 0.0f64;
    for s_k in mesh.times() {
        let (nu, eta) = (noise_kernel(&bath, s_k), dissipation_kernel(&bath, s_k));
        let z = bath_force_correlator(&bath, s_k, 0.0);
        let (dn, de) = ((z.re / hbar - nu).abs(), (-z.im / hbar - eta).abs());
        worst = worst.max(dn).max(de);
        kernels.push(vec![s_k, nu, eta]);
        diffs.push(vec![s_k, dn, de]);
    }
    out.tables.push(kernels);
    out.tables.push(diffs);
    out.checks.push(Check::at_most("kernel_abs", worst, s.tolerance("kernel_abs")));
    Ok(())
}

fn thermal_audit(s: &Scenario, out: &mut ResultManifest) -> Result<()> {
    const STAGE: &str = "thermal_audit";
    let grid = grid_of(s, STAGE)?;
    let bath = bath_of(s, STAGE)?;
    let xs = grid.points();
    let mut table = Table::new(
        "thermal",
        &[
            ("i", "1"),
            ("x", "length"),
            ("rho_diag", "1/length"),
            ("gibbs_diag", "1/length"),
            ("as_printed_diag", "1/length"),
            ("rel_err", "1"),
        ],
    );
    let mut norms = Table::new("thermal_normalization", &[("i", "1"), ("trapezoid_trace", "1"), ("as_printed_factor", "1")]);
    let mut worst = 0.0f64;
    for i in 0..bath.len() {
        let single = BathSpec::new(bath.mass(), vec![bath.omegas()[i]], vec![0.0], bath.temperature(), bath.hbar())
            .stage(STAGE)?;
        let gibbs = gibbs_position_matrix(bath.omegas()[i], bath.mass(), bath.temperature(), bath.hbar(), &xs).stage(STAGE)?;
        let mut tr = 0.0;
        let mut factor = 0.0;
        let mut diff = 0.0f64;
        for (j, &x) in xs.iter().enumerate() {
            for (k, &y) in xs.iter().enumerate() {
                let ours = thermal_density(&single, &[x], &[y]).stage(STAGE)?;
                diff = diff.max((ours - gibbs[(j, k)]).abs());
            }
            let ours = thermal_density(&single, &[x], &[x]).stage(STAGE)?;
            let printed = thermal_density_as_printed(&single, &[x], &[x]).stage(STAGE)?;
            let g = gibbs[(j, j)];
            let rel = if g > 0.0 { ((ours - g) / g).abs() } else { 0.0 };
            let w = if j == 0 || j + 1 == xs.len() { 0.5 } else { 1.0 };
            tr += w * grid.dx() * ours;
            if g > 0.0 && factor == 0.0 {
                factor = printed / g;
            }
            table.push(vec![i as f64, x, ours, g, printed, rel]);
        }
        worst = worst.max(diff / gibbs.amax());
        norms.push(vec![i as f64, tr, factor]);
    }
    out.tables.push(table);
    out.tables.push(norms);
    out.notes.push(
        "as_printed_diag uses the squared sinh prefactor; it differs from the Gibbs density by a position-independent factor per oscillator"
            .into(),
    );
    out.notes.push("gibbs_rel is the largest matrix-element difference over the largest Gibbs element".into());
    out.checks.push(Check::at_most("gibbs_rel", worst, s.tolerance("gibbs_rel")));
    Ok(())
}
