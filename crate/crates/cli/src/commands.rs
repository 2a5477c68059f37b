use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use fy_core::blockops::{flatten, write_matrix, LinearOperator, StrategyRegistry};
use fy_core::combinatorics::{chain_orbit_ids, chain_orbits, enumerate_chains};
use fy_core::faddeev::{faddeev_components, faddeev_residual, solve_faddeev, spectrum_union_check, FewBodySplit};
use fy_core::hardcore::{
    assemble_hardcore3_pencil, assemble_hardcore4_constraints, hardcore4_components, restricted_oracle,
    solve_hardcore3, ConstraintPlacement,
};
use fy_core::lattice::{
    breakup_threshold, build_hamiltonian, build_split, dense_oracle_spectrum, LatticeModel, DENSE_ORACLE_CAP,
};
use fy_core::yakubovsky::{
    assemble_yakubovsky_operator, chain_sum_consistency, solve_fourbody_ground_state, yakubovsky_pattern,
    yakubovsky_residual, YakubovskySystem,
};
use fy_core::FyError;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Cell, Report, Table};

/// Agreement demanded between a solved eigenvalue and the matching oracle
/// eigenvalue.
const ORACLE_TOL: f64 = 1e-8;

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub quiet: bool,
    pub dump_matrix: Option<PathBuf>,
}

impl Context {
    fn warn(&self, msg: &str) {
        if !self.quiet {
            eprintln!("warning: {msg}");
        }
    }

    fn model(&self) -> Result<LatticeModel, CliError> {
        self.config.model()
    }

    fn dump(&self, m: &dyn LinearOperator) -> Result<(), CliError> {
        if let Some(path) = &self.dump_matrix {
            let mut out = BufWriter::new(File::create(path)?);
            write_matrix(&mut out, &m.to_dense())?;
        }
        Ok(())
    }

    /// `solver.target`, or a Gershgorin lower bound of `H` when unset.
    fn target(&self, model: &LatticeModel) -> Result<f64, CliError> {
        match self.config.solver.target {
            Some(t) => Ok(t),
            None => {
                let h = build_hamiltonian(model)?;
                let mut diag = vec![0.0; h.dim()];
                let mut off = vec![0.0; h.dim()];
                h.for_each_entry(&mut |i, j, v| {
                    if i == j {
                        diag[i] += v;
                    } else {
                        off[i] += v.abs();
                    }
                });
                Ok(diag.iter().zip(&off).map(|(d, o)| d - o).fold(f64::INFINITY, f64::min) - 1.0)
            }
        }
    }
}

fn require_particles(model: &LatticeModel, n: usize, command: &str) -> Result<(), CliError> {
    if model.particles() != n {
        return Err(CliError::Config(format!(
            "{command} needs model.N = {n}, got {}",
            model.particles()
        )));
    }
    Ok(())
}

fn nearest(levels: &[f64], z: f64) -> Option<f64> {
    levels
        .iter()
        .copied()
        .min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()))
}

pub fn chains(n: usize) -> Result<Report, CliError> {
    let chains = enumerate_chains(n)?;
    let orbit_ids = chain_orbit_ids(n)?;
    let orbits = chain_orbits(n)?;
    let mut table = Table::new("chains", &["index", "partition", "pair", "kind", "orbit"]);
    for (k, (chain, orbit)) in chains.iter().zip(&orbit_ids).enumerate() {
        table.push(vec![
            k.into(),
            chain.partition().to_string().into(),
            chain.pair().to_string().into(),
            chain.partition().kind().to_string().into(),
            (*orbit).into(),
        ]);
    }
    let sizes: Vec<String> = orbits.iter().map(|o| o.members.len().to_string()).collect();
    let mut report = Report::default();
    report.table(table);
    report.summary(
        "summary",
        vec![
            ("chains", chains.len().into()),
            ("orbits", orbits.len().into()),
            ("orbit_sizes", sizes.join(",").into()),
        ],
    );
    Ok(report)
}

pub fn yak_pattern() -> Result<Report, CliError> {
    let chains = enumerate_chains(4)?;
    let pattern = yakubovsky_pattern()?;
    let mut columns = vec!["row".to_string(), "chain".to_string()];
    columns.extend((0..chains.len()).map(|k| k.to_string()));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("pattern", &column_refs);
    let mut filled = 0;
    for (r, row) in pattern.iter().enumerate() {
        let mut cells: Vec<Cell> = vec![r.into(), chains[r].to_string().into()];
        for (c, cell) in row.iter().enumerate() {
            if cell.is_some() && c != r {
                filled += 1;
            }
            cells.push(cell.map_or_else(|| ".".to_string(), |p| p.to_string()).into());
        }
        table.push(cells);
    }
    let mut report = Report::default();
    report.table(table);
    report.summary(
        "summary",
        vec![
            ("blocks", chains.len().into()),
            ("filled_off_diagonal", filled.into()),
            ("filled_total", (filled + chains.len()).into()),
        ],
    );
    Ok(report)
}

pub struct SpectrumCheckArgs {
    pub n: usize,
    pub dim: usize,
    pub seeds: usize,
    pub hermitian: bool,
}

pub fn spectrum_check(ctx: &Context, args: &SpectrumCheckArgs) -> Result<Report, CliError> {
    if args.n < 2 || args.dim < 1 || args.seeds < 1 {
        return Err(CliError::Config("spectrum-check needs n >= 2, dim >= 1 and seeds >= 1".into()));
    }
    let tol = ctx.config.check.tol;
    let mut table = Table::new("instances", &["seed", "max_distance", "h0_multiplicities", "pass"]);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for k in 0..args.seeds {
        let seed = ctx.seed.wrapping_add(k as u64);
        let split = FewBodySplit::random(args.n, args.dim, args.hermitian, seed)?;
        let check = spectrum_union_check(&split, tol, ctx.config.solver.dense_limit)?;
        let mut mults: Vec<usize> = check.multiplicities.iter().map(|(_, m)| *m).collect();
        mults.sort_unstable();
        mults.dedup();
        let mults: Vec<String> = mults.iter().map(usize::to_string).collect();
        worst = worst.max(check.max_matching_distance);
        if !check.holds() {
            failures += 1;
        }
        table.push(vec![
            Cell::Int(seed as i64),
            Cell::Sci(check.max_matching_distance),
            mults.join(",").into(),
            check.holds().into(),
        ]);
    }
    let mut report = Report::default();
    report.table(table);
    report.summary(
        "summary",
        vec![
            ("instances", args.seeds.into()),
            ("n", args.n.into()),
            ("dim", args.dim.into()),
            ("hermitian", args.hermitian.into()),
            ("tolerance", Cell::Sci(tol)),
            ("worst_distance", Cell::Sci(worst)),
            ("failures", failures.into()),
            ("verdict", if failures == 0 { "PASS" } else { "FAIL" }.into()),
        ],
    );
    if failures > 0 {
        report.fail(3);
    }
    Ok(report)
}

pub fn oracle(ctx: &Context, k: usize) -> Result<Report, CliError> {
    let model = ctx.model()?;
    model.check_dim(DENSE_ORACLE_CAP.min(ctx.config.solver.dense_limit))?;
    ctx.dump(&build_hamiltonian(&model)?)?;
    let levels = dense_oracle_spectrum(&model, k)?;
    let mut report = Report::default();
    let mut table = Table::new("levels", &["k", "eigenvalue", "residual"]);
    for (i, level) in levels.iter().enumerate() {
        table.push(vec![i.into(), Cell::Fixed(level.eigenvalue), Cell::Sci(level.residual_norm)]);
    }
    report.table(table);

    let mut summary = vec![("dim", model.dim().into()), ("ground", Cell::Fixed(levels[0].eigenvalue))];
    if model.identical() && model.particles() >= 2 {
        let threshold = breakup_threshold(&model)?;
        summary.push(("breakup_threshold", Cell::Fixed(threshold)));
        summary.push(("bound", (levels[0].eigenvalue < threshold).into()));
    }
    if model.core_radius().is_some() {
        let restricted = restricted_oracle(&model, k)?;
        let mut t = Table::new("restricted_levels", &["k", "eigenvalue", "residual"]);
        for (i, level) in restricted.levels.iter().enumerate() {
            t.push(vec![i.into(), Cell::Fixed(level.eigenvalue), Cell::Sci(level.residual_norm)]);
        }
        report.table(t);
        summary.push(("restricted_dim", restricted.kept.len().into()));
    }
    report.summary("summary", summary);
    Ok(report)
}

/// Oracle levels when the model is small enough, else `None`.
fn oracle_levels(ctx: &Context, model: &LatticeModel, k: usize) -> Result<Option<Vec<f64>>, CliError> {
    if model.dim() > DENSE_ORACLE_CAP.min(ctx.config.solver.dense_limit) {
        return Ok(None);
    }
    Ok(Some(dense_oracle_spectrum(model, k)?.iter().map(|l| l.eigenvalue).collect()))
}

/// Compares a non-spurious eigenvalue with the oracle and records the
/// outcome.
fn oracle_summary(
    report: &mut Report,
    summary: &mut Vec<(&'static str, Cell)>,
    oracle: Option<Vec<f64>>,
    z: f64,
    spurious: bool,
) {
    match oracle.as_deref().and_then(|levels| nearest(levels, z)) {
        Some(level) => {
            let diff = (z - level).abs();
            summary.push(("oracle_eigenvalue", Cell::Fixed(level)));
            summary.push(("oracle_difference", Cell::Sci(diff)));
            if !spurious && diff > ORACLE_TOL {
                report.fail(3);
            }
        }
        None => summary.push(("oracle_eigenvalue", "unavailable".into())),
    }
}

pub fn solve3(ctx: &Context) -> Result<Report, CliError> {
    let model = ctx.model()?;
    require_particles(&model, 3, "solve3")?;
    let split = build_split(&model)?;
    let solver = &ctx.config.solver;
    let registry = StrategyRegistry::with_defaults();
    let strategy = registry.get(&solver.method).map_err(|e| CliError::Config(e.to_string()))?;
    let target = ctx.target(&model)?;
    if ctx.dump_matrix.is_some() {
        ctx.dump(&flatten(&fy_core::faddeev::assemble_faddeev_operator(&split)?)?)?;
    }
    let sol = solve_faddeev(&split, strategy, target, solver.tol, solver.max_iter, solver.dense_limit)?;
    let spurious = sol.is_spurious();
    if spurious {
        ctx.warn("component sum vanishes: the eigenvalue belongs to the free spectrum");
    }
    let residuals = faddeev_residual(&split, &sol.components)?;
    let mut table = Table::new("components", &["pair", "norm", "residual"]);
    for (alpha, (c, r)) in sol.components.components.iter().zip(&residuals).enumerate() {
        table.push(vec![split.label(alpha).into(), Cell::Sci(c.norm()), Cell::Sci(*r)]);
    }
    let mut report = Report::default();
    report.table(table);
    let mut summary = vec![
        ("eigenvalue", Cell::Fixed(sol.eigen.eigenvalue)),
        ("residual", Cell::Sci(sol.eigen.residual_norm)),
        ("iterations", sol.eigen.iterations.into()),
        ("method", sol.eigen.method.clone().into()),
        ("target", Cell::Fixed(target)),
        ("sum_fraction", Cell::Sci(sol.sum_fraction)),
        ("spurious", spurious.into()),
    ];
    let oracle = oracle_levels(ctx, &model, model.dim())?;
    oracle_summary(&mut report, &mut summary, oracle, sol.eigen.eigenvalue, spurious);
    report.summary("result", summary);
    Ok(report)
}

pub fn solve4(ctx: &Context) -> Result<Report, CliError> {
    let model = ctx.model()?;
    require_particles(&model, 4, "solve4")?;
    let sys = YakubovskySystem::from_model(&model)?;
    let solver = &ctx.config.solver;
    let registry = StrategyRegistry::with_defaults();
    let strategy = registry.get(&solver.method).map_err(|e| CliError::Config(e.to_string()))?;
    let target = ctx.target(&model)?;
    if ctx.dump_matrix.is_some() {
        ctx.dump(&flatten(&assemble_yakubovsky_operator(&sys)?)?)?;
    }
    let sol = solve_fourbody_ground_state(&sys, strategy, target, solver.tol, solver.max_iter, solver.dense_limit)?;
    let spurious = sol.sum_fraction < 1e-8;
    if let Some(w) = &sol.spurious_warning {
        ctx.warn(w);
    }
    let residuals = yakubovsky_residual(&sys, &sol.components)?;
    let orbit_ids = chain_orbit_ids(4)?;
    let mut table = Table::new("chains", &["index", "chain", "orbit", "norm", "residual"]);
    for (k, chain) in sys.chains().iter().enumerate() {
        table.push(vec![
            k.into(),
            chain.to_string().into(),
            orbit_ids[k].into(),
            Cell::Sci(sol.components.components[k].norm()),
            Cell::Sci(residuals[k]),
        ]);
    }
    let mut report = Report::default();
    report.table(table);

    let z = sol.eigen.eigenvalue;
    let mut summary = vec![
        ("eigenvalue", Cell::Fixed(z)),
        ("residual", Cell::Sci(sol.eigen.residual_norm)),
        ("iterations", sol.eigen.iterations.into()),
        ("method", sol.eigen.method.clone().into()),
        ("target", Cell::Fixed(target)),
        ("sum_fraction", Cell::Sci(sol.sum_fraction)),
        ("max_chain_residual", Cell::Sci(residuals.iter().copied().fold(0.0, f64::max))),
        ("spurious_warning", sol.spurious_warning.clone().unwrap_or_else(|| "none".into()).into()),
    ];
    if !spurious {
        let psi = sol.components.sum();
        match faddeev_components(sys.split(), z, &psi) {
            Ok(faddeev) => {
                let consistency = chain_sum_consistency(&sys, &sol.components, &faddeev)?;
                summary.push(("max_chain_sum_defect", Cell::Sci(consistency.max())));
            }
            Err(
                e @ (FyError::SpuriousEnergy { .. }
                | FyError::ChannelEnergy { .. }
                | FyError::PreconditionViolation { .. }),
            ) => {
                summary.push(("max_chain_sum_defect", format!("unavailable ({e})").into()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let oracle = oracle_levels(ctx, &model, model.dim())?;
    oracle_summary(&mut report, &mut summary, oracle, z, spurious);
    report.summary("result", summary);
    Ok(report)
}

pub struct Hardcore3Args {
    /// Core radii to run, negative meaning none.
    pub cores: Vec<i64>,
    pub surface_only: bool,
}

pub fn hardcore3(ctx: &Context, args: &Hardcore3Args) -> Result<Report, CliError> {
    let base = ctx.model()?;
    require_particles(&base, 3, "hardcore3")?;
    let solver = &ctx.config.solver;
    let placement = if args.surface_only {
        ConstraintPlacement::SurfaceOnly
    } else {
        ConstraintPlacement::FullCore
    };
    let target = ctx.target(&base.clone().with_core_radius(None))?;
    let mut cores = args.cores.clone();
    cores.sort_unstable();
    cores.dedup_by_key(|c| (*c).max(-1));

    if ctx.dump_matrix.is_some() {
        let model = base.clone().with_core_radius(usize::try_from(cores[0]).ok());
        ctx.dump(&flatten(&assemble_hardcore3_pencil(&model, placement)?.a)?)?;
    }

    let outcomes: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = cores
            .iter()
            .map(|&c| {
                let model = base.clone().with_core_radius(usize::try_from(c).ok());
                scope.spawn(move || -> Result<_, FyError> {
                    let solution =
                        solve_hardcore3(&model, placement, target, solver.tol, solver.max_iter, solver.dense_limit)?;
                    let oracle = if model.dim() <= DENSE_ORACLE_CAP.min(solver.dense_limit) {
                        Some(restricted_oracle(&model, 1)?.levels.first().map(|l| l.eigenvalue))
                    } else {
                        None
                    };
                    Ok((c, solution, oracle))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });

    let mut table = Table::new(
        "sweep",
        &["core", "eigenvalue", "oracle", "difference", "core_max", "residual", "skipped_roots", "accepted"],
    );
    let mut report = Report::default();
    let mut previous: Option<f64> = None;
    let mut monotone = true;
    for outcome in outcomes {
        let (c, sol, oracle) = outcome?;
        let z = sol.eigen.eigenvalue;
        let accepted = sol.accepted();
        if let (false, Some(w)) = (accepted, &sol.spurious_warning) {
            ctx.warn(&format!("core {c}: {w}"));
        }
        let (oracle_cell, diff_cell) = match oracle {
            Some(Some(e)) => {
                let diff = (z - e).abs();
                if placement == ConstraintPlacement::FullCore {
                    if !accepted {
                        report.fail(1);
                    } else if diff > ORACLE_TOL {
                        report.fail(3);
                    }
                }
                if previous.is_some_and(|p| e < p - 1e-12) {
                    monotone = false;
                }
                previous = Some(e);
                (Cell::Fixed(e), Cell::Sci(diff))
            }
            Some(None) => ("empty".into(), "-".into()),
            None => ("unavailable".into(), "-".into()),
        };
        table.push(vec![
            Cell::Int(c.max(-1)),
            Cell::Fixed(z),
            oracle_cell,
            diff_cell,
            Cell::Sci(sol.core_max),
            Cell::Sci(sol.restricted_residual),
            sol.skipped_roots.into(),
            accepted.into(),
        ]);
    }
    if !monotone {
        report.fail(3);
    }
    report.table(table);
    report.summary(
        "summary",
        vec![
            (
                "placement",
                match placement {
                    ConstraintPlacement::FullCore => "full-core",
                    ConstraintPlacement::SurfaceOnly => "surface-only",
                }
                .into(),
            ),
            ("target", Cell::Fixed(target)),
            ("oracle_monotone", monotone.into()),
        ],
    );
    Ok(report)
}

pub fn hardcore4_check(ctx: &Context, core: Option<i64>) -> Result<Report, CliError> {
    let mut model = ctx.model()?;
    require_particles(&model, 4, "hardcore4-check")?;
    if let Some(c) = core {
        model = model.with_core_radius(usize::try_from(c).ok());
    }
    let sys = YakubovskySystem::from_model(&model)?;
    let constraints = assemble_hardcore4_constraints(&sys, &model)?;
    let level = restricted_oracle(&model, 1)?
        .levels
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Config("every configuration lies inside a core".into()))?;
    let (_, comps) = hardcore4_components(&sys, level.eigenvalue, &level.eigenvector)?;
    let evaluated = constraints.evaluate(&comps)?;

    let mut table = Table::new("chains", &["index", "chain", "sites", "defect"]);
    for (k, chain) in sys.chains().iter().enumerate() {
        let sites = fy_core::hardcore::core_region(&model, &chain.pair())?.sites.len();
        table.push(vec![k.into(), chain.to_string().into(), sites.into(), Cell::Sci(evaluated.per_chain[k])]);
    }
    let mut report = Report::default();
    report.table(table);
    report.summary(
        "summary",
        vec![
            ("core", Cell::Int(model.core_radius().map_or(-1, |c| c as i64))),
            ("restricted_eigenvalue", Cell::Fixed(level.eigenvalue)),
            ("constraint_sites", evaluated.constraint_sites.into()),
            ("max_defect", Cell::Sci(evaluated.max_defect)),
            ("component_norm", Cell::Sci(comps.stacked_norm())),
        ],
    );
    Ok(report)
}
