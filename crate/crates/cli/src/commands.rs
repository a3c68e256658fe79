use rayon::prelude::*;
use serde::Serialize;

use fockshell::fock::Sector;
use fockshell::kspace::Dispersion;
use fockshell::meanfield::{
    applicability_criteria, curie_temperature, linspace, magnetization_sweep, CriteriaReport, MeanFieldParams,
};
use fockshell::model::{build_h_bcs, BcsModel};
use fockshell::ncstates::{build_nc_state_with, NcLabel, PairRecipe};
use fockshell::spectra::{
    certify_commutators, certify_nullification_with, default_xis, ground_level_theorem_check,
    momentum_and_number_report, spectrum_report, CommutatorReport, GroundLevelReport, NullificationReport,
    FULL_SPACE_MODE_CAP,
};
use fockshell::{Amplitude, Error};

use crate::config::{CriteriaConfig, RunConfig};
use crate::report::{Cell, Sink};

pub enum Failure {
    /// Usage or configuration problem (exit 2).
    Config(String),
    /// A check ran and did not pass, or a numerical routine failed (exit 1).
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidFormFactor(_)
            | Error::InvalidFactorization
            | Error::Cap { .. }
            | Error::TooLarge { .. }
            | Error::HypothesisUnmet(_)
            | Error::MissingReference(_)
            | Error::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(format!("i/o error: {e}"))
    }
}

pub type Outcome = Result<bool, Failure>;

fn model(cfg: &RunConfig) -> Result<BcsModel<f64>, Failure> {
    let m = cfg
        .model
        .as_ref()
        .ok_or_else(|| Failure::Config("the `model` section is required for this command".into()))?;
    Ok(m.build::<f64>()?)
}

fn paired_particles(model: &BcsModel<f64>) -> usize {
    2 * model.grid.len() + 2 * model.grid.inner_points.len()
}

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    passed: bool,
}

#[derive(Serialize)]
struct QuantumNumbers {
    labels: usize,
    max_particle_residual: f64,
    max_particle_error: f64,
    max_momentum_residual: f64,
    max_sz_error: f64,
    /// Largest `‖(H - E_label)|NC⟩‖ / max(1, |E_label|)`.
    max_energy_residual: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    points: usize,
    modes: usize,
    labels: Vec<NcLabel>,
    zero_pair_xi: [f64; 2],
    nullification: NullificationReport,
    commutators: Option<Vec<CommutatorReport>>,
    quantum_numbers: QuantumNumbers,
    ground_level: Option<GroundLevelReport>,
    suites: Vec<Suite>,
}

pub fn verify(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let model = model(cfg)?;
    let tol = cfg.verify.tolerance;
    if !(tol > 0.0) {
        return Err(Failure::Config("verify.tolerance must be positive".into()));
    }
    let labels = cfg.labels.resolve(&model.grid, cfg.solver.label_cap)?;
    let xi = cfg.verify.zero_pair_xi.unwrap_or([-1.0, 0.0]);
    let recipe = PairRecipe {
        zero_pair_xi: Amplitude::new(xi[0], xi[1]),
    };
    let mut suites = Vec::new();

    let nullification = certify_nullification_with(&model, &labels, &recipe, tol)?;
    suites.push(Suite {
        name: "nullification",
        passed: nullification.passed,
    });

    let commutators = if model.grid.mode_count() <= FULL_SPACE_MODE_CAP {
        let reports = (0..model.grid.len())
            .map(|k| certify_commutators(&model, k, &default_xis()))
            .collect::<Result<Vec<_>, _>>()?;
        let passed = reports.iter().all(|r| {
            r.checks.iter().all(|c| {
                let triplet = c.operator.starts_with("gamma");
                c.difference_norm <= tol * c.lhs_norm.max(1.0) && (!triplet || c.rhs_on_vacuum <= tol)
            })
        });
        suites.push(Suite {
            name: "commutators",
            passed,
        });
        Some(reports)
    } else {
        log::warn!("{} modes exceed the full-space limit; commutator suite skipped", model.grid.mode_count());
        None
    };

    let h = build_h_bcs(&model);
    let hbar = model.grid.units.hbar;
    let rows = labels
        .par_iter()
        .map(|l| {
            let s = build_nc_state_with(&model, l, &recipe)?;
            let q = momentum_and_number_report(&model, &s.vector)?;
            let e_res = h.apply(&s.vector).axpy(Amplitude::new(-s.energy, 0.0), &s.vector).norm() / s.energy.abs().max(1.0);
            let n_err = (q.particles - s.particles as f64).abs();
            let sz_err = (q.sz - hbar * l.total_q() as f64).abs();
            Ok([q.particles_residual, n_err, q.momentum_residual, sz_err, e_res])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
    let quantum_numbers = QuantumNumbers {
        labels: rows.len(),
        max_particle_residual: col(0),
        max_particle_error: col(1),
        max_momentum_residual: col(2),
        max_sz_error: col(3),
        max_energy_residual: col(4),
        passed: (0..5).all(|i| col(i) <= tol),
    };
    suites.push(Suite {
        name: "quantum_numbers",
        passed: quantum_numbers.passed,
    });

    let flat = matches!(model.grid.dispersion, Dispersion::Flat { .. });
    let ground_level = if flat && model.form_factor.is_constant() {
        let sector = Sector::particles(paired_particles(&model));
        let r = ground_level_theorem_check(&model, &sector, cfg.verify.rayleigh_samples, cfg.verify.seed)?;
        suites.push(Suite {
            name: "ground_level",
            passed: r.passed,
        });
        Some(r)
    } else {
        None
    };

    let passed = suites.iter().all(|s| s.passed);
    for s in &suites {
        println!("{:<16} {}", s.name, if s.passed { "PASS" } else { "FAIL" });
    }
    println!("max ||W|NC>|| = {:.3e} over {} labels", nullification.max_residual, nullification.labels_checked);
    let report = VerifyReport {
        points: model.grid.len(),
        modes: model.grid.mode_count(),
        labels,
        zero_pair_xi: xi,
        nullification,
        commutators,
        quantum_numbers,
        ground_level,
        suites,
    };
    sink.json("verify.json", "verify", Some(passed), &report)?;
    Ok(passed)
}

pub fn spectrum(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let model = model(cfg)?;
    let sc = cfg.solver.sector.clone();
    let mut sector = Sector::particles(sc.as_ref().and_then(|s| s.particles).unwrap_or_else(|| paired_particles(&model)));
    if let Some(s) = sc.as_ref() {
        if let Some(tz) = s.twice_sz {
            sector = sector.with_twice_sz(tz);
        }
        if let Some(k) = s.momentum {
            sector = sector.with_momentum(k);
        }
    }
    let r = spectrum_report(&model, &sector, cfg.solver.mode)?;
    let rows: Vec<Vec<Cell>> = r
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![Cell::I(i as i64), Cell::F(e)])
        .collect();
    sink.csv("eigenvalues.csv", &["index", "eigenvalue"], &rows)?;
    let levels: Vec<Vec<Cell>> = r
        .levels
        .iter()
        .map(|l| vec![Cell::F(l.energy), Cell::I(l.multiplicity as i64)])
        .collect();
    sink.csv("levels.csv", &["energy", "multiplicity"], &levels)?;
    println!(
        "dimension {}, {} levels; NC energy {:?}: observed multiplicity {}{} (lower bound {}), min {} max {}",
        r.dimension,
        r.levels.len(),
        r.nc_energy,
        r.nc_multiplicity_observed,
        if r.nc_multiplicity_complete { "" } else { "+" },
        r.nc_multiplicity_lower_bound,
        r.is_min,
        r.is_max
    );
    sink.json("spectrum.json", "spectrum", None, &r)?;
    Ok(true)
}

#[derive(Serialize)]
struct MagnetizeReport {
    curie_temperature: f64,
    lambda: f64,
    i0: f64,
    j: f64,
    field: f64,
    points: usize,
    criteria: Option<CriteriaOut>,
}

#[derive(Serialize)]
struct CriteriaOut {
    #[serde(flatten)]
    report: CriteriaReport<f64>,
    pair_effective_mass: Option<f64>,
}

fn criteria_report(c: &CriteriaConfig) -> Result<CriteriaOut, Failure> {
    Ok(CriteriaOut {
        report: applicability_criteria(&c.continuum(), &c.spin(), c.reference.energy())?,
        pair_effective_mass: c.pair_effective_mass,
    })
}

pub fn magnetize(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let m = cfg
        .magnet
        .as_ref()
        .ok_or_else(|| Failure::Config("the `magnet` section is required for magnetize".into()))?;
    if m.points == 0 || !(m.t_max >= m.t_min) || m.t_min < 0.0 {
        return Err(Failure::Config("magnet needs points > 0 and 0 <= t_min <= t_max".into()));
    }
    let p = MeanFieldParams {
        lambda: m.lambda,
        i0: m.i0,
        m0: 0.0,
        temperature: 0.0,
        field: m.field,
        j: m.j,
        units: m.units,
    };
    p.validate()?;
    let temps = linspace(m.t_min, m.t_max, m.points);
    let curve = magnetization_sweep(&p, &temps, m.tolerance)?;
    let rows: Vec<Vec<Cell>> = curve
        .iter()
        .map(|c| vec![Cell::F(c.temperature), Cell::F(c.magnetization), Cell::F(c.ratio)])
        .collect();
    sink.csv("magnetization.csv", &["T", "I", "I_over_I0"], &rows)?;
    let tc = curie_temperature(&p);
    println!("T_C = {tc:.16e}; {} points written", curve.len());
    let report = MagnetizeReport {
        curie_temperature: tc,
        lambda: m.lambda,
        i0: m.i0,
        j: m.j,
        field: m.field,
        points: curve.len(),
        criteria: cfg.criteria.as_ref().map(criteria_report).transpose()?,
    };
    sink.json("magnetize.json", "magnetize", None, &report)?;
    Ok(true)
}

pub fn criteria(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let c = cfg
        .criteria
        .as_ref()
        .ok_or_else(|| Failure::Config("the `criteria` section is required".into()))?;
    let out = criteria_report(c)?;
    let r = &out.report;
    println!(
        "stoner {} (margin {:.6e}); combined {} (margin {:.6e}); general {} (margin {:.6e})",
        r.stoner.holds, r.stoner.margin, r.combined.holds, r.combined.margin, r.general.holds, r.general.margin
    );
    sink.json("criteria.json", "criteria", None, &out)?;
    Ok(true)
}

#[derive(Serialize)]
struct SweepSummary {
    points: usize,
    stoner_count: usize,
    combined_count: usize,
    general_count: usize,
}

pub fn sweep(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let (c, s) = match (&cfg.criteria, &cfg.sweep) {
        (Some(c), Some(s)) => (c, s),
        _ => return Err(Failure::Config("sweep needs both `criteria` and `sweep` sections".into())),
    };
    let gs = linspace(s.g_ss.min, s.g_ss.max, s.g_ss.points);
    let ds = linspace(s.delta.min, s.delta.max, s.delta.points);
    let grid: Vec<(f64, f64)> = gs.iter().flat_map(|&g| ds.iter().map(move |&d| (g, d))).collect();
    let reports = grid
        .par_iter()
        .map(|&(g, d)| {
            let cc = CriteriaConfig {
                g_ss: g,
                delta: d,
                ..c.clone()
            };
            applicability_criteria(&cc.continuum(), &cc.spin(), cc.reference.energy())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<Cell>> = grid
        .iter()
        .zip(&reports)
        .map(|(&(g, d), r)| {
            vec![
                Cell::F(g),
                Cell::F(d),
                Cell::B(r.stoner.holds),
                Cell::B(r.combined.holds),
                Cell::B(r.general.holds),
                Cell::F(r.stoner.margin),
                Cell::F(r.combined.margin),
                Cell::F(r.general.margin),
            ]
        })
        .collect();
    sink.csv(
        "criteria_map.csv",
        &["g_ss", "delta", "stoner", "combined", "general", "stoner_margin", "combined_margin", "general_margin"],
        &rows,
    )?;
    let summary = SweepSummary {
        points: reports.len(),
        stoner_count: reports.iter().filter(|r| r.stoner.holds).count(),
        combined_count: reports.iter().filter(|r| r.combined.holds).count(),
        general_count: reports.iter().filter(|r| r.general.holds).count(),
    };
    println!(
        "{} points: stoner {} combined {} general {}",
        summary.points, summary.stoner_count, summary.combined_count, summary.general_count
    );
    sink.json("sweep.json", "sweep", None, &summary)?;
    Ok(true)
}
