//! Exact diagonalization in fixed sectors and the numerical certificates
//! built on it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{observable_expectation, Basis, FockVector, Sector};
use crate::kspace::{Dispersion, Sign, Spin};
use crate::model::{build_h_bcs, build_number, build_spin_ops, build_total_momentum, build_w, flip, layer_vectors, BcsModel};
use crate::ncstates::{b_dagger, build_nc_state, build_nc_state_with, enumerate_labels, gamma_dagger, NcLabel, PairRecipe, DEFAULT_LABEL_CAP};
use crate::opalg::{commutator_matrix, Factor, OperatorExpr, SectorMatrix};
use crate::scalar::{cplx, norm_sqr, LinalgReal, Real};

/// Largest sector handed to the dense solver.
pub const DENSE_DIM_CAP: usize = 20_000;

/// Relative width used to group eigenvalues into levels.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Largest mode count for which full-Fock-space certificates are built.
pub const FULL_SPACE_MODE_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumEnd {
    Lowest,
    Highest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverMode {
    Dense,
    IterativeExtremal { count: usize, end: SpectrumEnd },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions<T> {
    /// Bound on `‖Hv - λv‖` for every returned pair.
    pub tol: T,
    pub max_iter: usize,
    pub seed: u64,
}

impl<T: Real> Default for LanczosOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(1e3)),
            max_iter: 5_000,
            seed: 0x1a2c_05e5,
        }
    }
}

/// Eigenpairs of a sector matrix. Vectors are coordinates in `basis`.
#[derive(Debug, Clone)]
pub struct Eigenpairs<T> {
    pub basis: Basis,
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Eigenpairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> FockVector<T> {
        FockVector::from_dense(&self.basis, &self.vectors[i])
    }

    /// `‖H v_i - λ_i v_i‖`
    pub fn residual(&self, h: &SectorMatrix<T>, i: usize) -> T {
        residual(h, self.values[i], &self.vectors[i])
    }
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).fold(cplx(T::zero()), |s, v| s + v)
}

fn vnorm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| norm_sqr(*x)).fold(T::zero(), |a, b| a + b).sqrt()
}

fn residual<T: Real>(h: &SectorMatrix<T>, lambda: T, v: &[Complex<T>]) -> T {
    let hv = h.matvec(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| norm_sqr(*a - *b * lambda))
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

fn rayleigh<T: Real>(h: &SectorMatrix<T>, v: &[Complex<T>]) -> T {
    dot(v, &h.matvec(v)).re / dot(v, v).re
}

fn orthogonalize<T: Real>(w: &mut [Complex<T>], against: &[Vec<Complex<T>>]) {
    for q in against {
        let c = dot(q, w);
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi -= c * qi;
        }
    }
}

/// Uniformly distributed unit vector on the sphere of `C^n`.
pub fn random_unit_vector<T: Real, R: Rng>(n: usize, rng: &mut R) -> Vec<Complex<T>> {
    loop {
        let mut v: Vec<Complex<T>> = (0..n)
            .map(|_| {
                let (a, b) = gaussian_pair(rng);
                Complex::new(T::lit(a), T::lit(b))
            })
            .collect();
        let nrm = vnorm(&v);
        if nrm > T::zero() {
            v.iter_mut().for_each(|x| *x = *x / nrm);
            return v;
        }
    }
}

fn gaussian_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

fn check_input<T: Real>(h: &SectorMatrix<T>) -> Result<()> {
    if h.is_hermitian() {
        return Ok(());
    }
    let scale = T::one().max(h.max_abs());
    let dev = h.hermitian_deviation();
    if dev <= T::epsilon() * T::lit(1e3) * scale {
        Ok(())
    } else {
        Err(Error::NotHermitian {
            deviation: dev.to_f64_lossy(),
        })
    }
}

pub fn diagonalize<T: LinalgReal>(h: &SectorMatrix<T>, mode: SolverMode) -> Result<Eigenpairs<T>> {
    diagonalize_with(h, mode, &LanczosOptions::default())
}

/// Dense mode returns the full spectrum in ascending order. Iterative mode
/// returns `count` pairs starting from the requested end of the spectrum.
pub fn diagonalize_with<T: LinalgReal>(h: &SectorMatrix<T>, mode: SolverMode, opts: &LanczosOptions<T>) -> Result<Eigenpairs<T>> {
    check_input(h)?;
    match mode {
        SolverMode::Dense => dense(h),
        SolverMode::IterativeExtremal { count, end } => lanczos(h, count, end, opts),
    }
}

fn dense<T: LinalgReal>(h: &SectorMatrix<T>) -> Result<Eigenpairs<T>> {
    let n = h.nrows();
    if n > DENSE_DIM_CAP {
        return Err(Error::TooLarge {
            dim: n,
            cap: DENSE_DIM_CAP,
            solver: "dense",
        });
    }
    let basis = h.domain().clone();
    if n == 0 {
        return Ok(Eigenpairs {
            basis,
            values: vec![],
            vectors: vec![],
        });
    }
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Eigenpairs {
        basis,
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect(),
    })
}

/// Lanczos with full reorthogonalization. Converged vectors are locked and
/// projected out of later Krylov spaces, so degenerate levels are resolved
/// one copy at a time.
fn lanczos<T: LinalgReal>(h: &SectorMatrix<T>, count: usize, end: SpectrumEnd, opts: &LanczosOptions<T>) -> Result<Eigenpairs<T>> {
    let n = h.nrows();
    let sgn = match end {
        SpectrumEnd::Lowest => T::one(),
        SpectrumEnd::Highest => -T::one(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut values = Vec::new();
    let mut locked: Vec<Vec<Complex<T>>> = Vec::new();
    for _ in 0..count.min(n) {
        let (val, vec) = lanczos_one(h, sgn, &locked, &mut rng, opts)?;
        values.push(val);
        locked.push(vec);
    }
    Ok(Eigenpairs {
        basis: h.domain().clone(),
        values,
        vectors: locked,
    })
}

fn lanczos_one<T: LinalgReal>(
    h: &SectorMatrix<T>,
    sgn: T,
    locked: &[Vec<Complex<T>>],
    rng: &mut ChaCha8Rng,
    opts: &LanczosOptions<T>,
) -> Result<(T, Vec<Complex<T>>)> {
    let n = h.nrows();
    let kmax = opts.max_iter.min(n - locked.len()).max(1);
    let mut q0 = random_unit_vector::<T, _>(n, rng);
    orthogonalize(&mut q0, locked);
    orthogonalize(&mut q0, locked);
    let nrm = vnorm(&q0);
    q0.iter_mut().for_each(|x| *x = *x / nrm);

    let tiny = T::epsilon() * T::lit(1e2) * Float::max(T::one(), h.max_abs());
    let mut qs = vec![q0];
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut last_residual = T::infinity();
    for j in 0..kmax {
        let mut w: Vec<Complex<T>> = h.matvec(&qs[j]).into_iter().map(|x| x * sgn).collect();
        let alpha = dot(&qs[j], &w).re;
        for _ in 0..2 {
            orthogonalize(&mut w, &qs);
            orthogonalize(&mut w, locked);
        }
        let beta = vnorm(&w);
        alphas.push(alpha);

        let m = alphas.len();
        let exhausted = beta <= tiny || m == kmax;
        if !(exhausted || m < 20 || m % 5 == 0) {
            betas.push(beta);
            w.iter_mut().for_each(|x| *x = *x / beta);
            qs.push(w);
            continue;
        }
        let mut t = DMatrix::<T>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let s = eig.eigenvectors.column(imin);
        let estimate = Float::abs(beta * s[m - 1]);
        if estimate <= opts.tol * T::lit(0.5) || exhausted {
            let mut y = vec![cplx(T::zero()); n];
            for (i, q) in qs.iter().enumerate() {
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi += *qi * s[i];
                }
            }
            orthogonalize(&mut y, locked);
            let ny = vnorm(&y);
            y.iter_mut().for_each(|x| *x = *x / ny);
            let lambda = rayleigh(h, &y);
            let r = residual(h, lambda, &y);
            last_residual = r;
            if r <= opts.tol {
                return Ok((lambda, y));
            }
            if exhausted {
                break;
            }
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x = *x / beta);
        qs.push(w);
    }
    Err(Error::NoConvergence {
        iterations: alphas.len(),
        residual: last_residual.to_f64_lossy(),
    })
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub multiplicity: usize,
}

/// Groups ascending eigenvalues: a value joins the current level when it
/// lies within `DEGENERACY_RTOL · max(1, |λ|)` of the level's first member.
/// The width never drops below `1e3 ε` of the scalar type.
pub fn group_levels<T: Real>(values: &[T]) -> Vec<Level> {
    let mut out: Vec<(T, T, usize)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((first, sum, count)) if same_level(*first, v) => {
                *sum += v;
                *count += 1;
            }
            _ => out.push((v, v, 1)),
        }
    }
    out.into_iter()
        .map(|(_, sum, count)| Level {
            energy: (sum / T::from_count(count)).to_f64_lossy(),
            multiplicity: count,
        })
        .collect()
}

fn same_level<T: Real>(a: T, b: T) -> bool {
    let rtol = T::lit(DEGENERACY_RTOL).max(T::epsilon() * T::lit(1e3));
    Float::abs(a - b) <= rtol * T::one().max(Float::abs(a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSummary {
    pub particles: usize,
    pub twice_sz: Option<i32>,
    pub momentum: Option<[f64; 3]>,
}

impl SectorSummary {
    fn of<T: Real>(s: &Sector<T>) -> Self {
        Self {
            particles: s.particles,
            twice_sz: s.twice_sz,
            momentum: s.momentum.map(|k| k.map(|x| x.to_f64_lossy())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sector: SectorSummary,
    pub dimension: usize,
    pub solver: SolverMode,
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<Level>,
    /// Energy of the interaction-free states that fit in the sector.
    pub nc_energy: Option<f64>,
    /// Number of such states (each label gives one independent vector).
    pub nc_multiplicity_lower_bound: usize,
    pub nc_multiplicity_observed: usize,
    /// False when an iterative window ends inside the NC level, so more
    /// copies may lie outside it.
    pub nc_multiplicity_complete: bool,
    /// Largest `‖(H - E_NC)|NC⟩‖` over those states.
    pub nc_eigen_residual: Option<f64>,
    pub is_min: bool,
    pub is_max: bool,
}

/// Interaction-free states (every line occupied) whose support lies in
/// `basis`.
pub fn nc_states_in_basis<T: Real>(model: &BcsModel<T>, basis: &Basis) -> Result<Vec<crate::ncstates::NcState<T>>> {
    let explicit = 2 * model.grid.len() + 2 * model.grid.inner_points.len();
    if basis.states().first().map(|s| s.particle_count() as usize) != Some(explicit) {
        return Ok(vec![]);
    }
    let labels: Vec<NcLabel> = enumerate_labels(&model.grid, false, DEFAULT_LABEL_CAP)?.collect();
    let states: Vec<_> = labels
        .par_iter()
        .map(|l| build_nc_state(model, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(states.into_iter().filter(|s| s.vector.to_dense(basis).is_ok()).collect())
}

pub fn spectrum_report<T: LinalgReal>(model: &BcsModel<T>, sector: &Sector<T>, mode: SolverMode) -> Result<SpectrumReport> {
    let basis = Basis::sector(&model.grid, sector);
    let h = build_h_bcs(model).compile(&basis)?;
    let eig = diagonalize(&h, mode)?;
    let mut values = eig.values.clone();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let levels = group_levels(&values);

    let nc = nc_states_in_basis(model, &basis)?;
    let nc_energy = nc.first().map(|s| s.energy);
    let nc_level = nc_energy.and_then(|e| levels.iter().position(|l| same_level(T::lit(l.energy), e)));
    let observed = nc_level.map_or(0, |i| levels[i].multiplicity);
    let complete = values.len() == basis.len()
        || match (mode, nc_level) {
            (SolverMode::IterativeExtremal { end: SpectrumEnd::Lowest, .. }, Some(i)) => i + 1 < levels.len(),
            (SolverMode::IterativeExtremal { end: SpectrumEnd::Highest, .. }, Some(i)) => i > 0,
            _ => false,
        };
    let nc_eigen_residual = nc_energy.map(|e| {
        nc.iter()
            .map(|s| {
                let x = s.vector.to_dense(&basis).expect("support checked");
                residual(&h, e, &x)
            })
            .fold(T::zero(), Float::max)
            .to_f64_lossy()
    });
    let at = |v: Option<&T>| match (nc_energy, v) {
        (Some(e), Some(&v)) => same_level(v, e),
        _ => false,
    };
    let (is_min, is_max) = match mode {
        SolverMode::Dense => (at(values.first()), at(values.last())),
        SolverMode::IterativeExtremal { end: SpectrumEnd::Lowest, .. } => (at(values.first()), false),
        SolverMode::IterativeExtremal { end: SpectrumEnd::Highest, .. } => (false, at(values.last())),
    };
    Ok(SpectrumReport {
        sector: SectorSummary::of(sector),
        dimension: basis.len(),
        solver: mode,
        eigenvalues: values.iter().map(|v| v.to_f64_lossy()).collect(),
        levels,
        nc_energy: nc_energy.map(|e| e.to_f64_lossy()),
        nc_multiplicity_lower_bound: nc.len(),
        nc_multiplicity_observed: observed,
        nc_multiplicity_complete: complete,
        nc_eigen_residual,
        is_min,
        is_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullificationReport {
    pub labels_checked: usize,
    pub max_residual: f64,
    pub worst_label: Option<NcLabel>,
    pub tolerance: f64,
    pub passed: bool,
}

/// `‖W v‖ / ‖v‖`
pub fn nullification_residual<T: Real>(w: &OperatorExpr<T>, v: &FockVector<T>) -> T {
    w.apply(v).norm() / v.norm()
}

pub fn certify_nullification<T: Real>(model: &BcsModel<T>, labels: &[NcLabel], tol: T) -> Result<NullificationReport> {
    certify_nullification_with(model, labels, &PairRecipe::default(), tol)
}

pub fn certify_nullification_with<T: Real>(
    model: &BcsModel<T>,
    labels: &[NcLabel],
    recipe: &PairRecipe<T>,
    tol: T,
) -> Result<NullificationReport> {
    let w = build_w(model);
    let residuals = labels
        .par_iter()
        .map(|l| build_nc_state_with(model, l, recipe).map(|s| nullification_residual(&w, &s.vector)))
        .collect::<Result<Vec<T>>>()?;
    let worst = residuals
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, T)>, (i, &r)| match acc {
            Some((_, best)) if best >= r => acc,
            _ => Some((i, r)),
        });
    let max_residual = worst.map_or(T::zero(), |(_, r)| r);
    Ok(NullificationReport {
        labels_checked: labels.len(),
        max_residual: max_residual.to_f64_lossy(),
        worst_label: worst.map(|(i, _)| labels[i].clone()),
        tolerance: tol.to_f64_lossy(),
        passed: max_residual <= tol,
    })
}

/// `(v + eps·r)/‖·‖` with `r` a seeded random unit vector on `basis`.
pub fn perturb<T: Real>(v: &FockVector<T>, basis: &Basis, eps: T, seed: u64) -> Result<FockVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = FockVector::from_dense(basis, &random_unit_vector::<T, _>(basis.len(), &mut rng));
    v.axpy(cplx(eps), &r).normalized()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundLevelReport {
    pub dimension: usize,
    pub coupling: f64,
    /// `ε̄ N + E_Φ`
    pub bound: f64,
    pub extremum: SpectrumEnd,
    pub extremal_eigenvalue: f64,
    pub bound_deviation: f64,
    pub extremal_multiplicity: usize,
    pub nc_states: usize,
    /// Largest distance of an NC vector from the extremal eigenspace.
    pub nc_projection_residual: f64,
    /// Distance from the bound to the nearest eigenvalue of another level.
    pub gap: Option<f64>,
    pub rayleigh_samples: usize,
    pub rayleigh_seed: u64,
    /// Most extreme Rayleigh quotient seen in the direction of the bound.
    pub rayleigh_extreme: f64,
    /// How far that quotient overshoots the bound (0 when respected).
    pub rayleigh_violation: f64,
    pub passed: bool,
}

/// Checks that the interaction-free level is the bottom (`g > 0`) or top
/// (`g < 0`) of the sector spectrum in the flat model.
pub fn ground_level_theorem_check<T: LinalgReal>(
    model: &BcsModel<T>,
    sector: &Sector<T>,
    samples: usize,
    seed: u64,
) -> Result<GroundLevelReport> {
    let eps_bar = match model.grid.dispersion {
        Dispersion::Flat { energy } => energy,
        Dispersion::Quadratic { .. } => return Err(Error::HypothesisUnmet("dispersion must be flat")),
    };
    if !model.form_factor.is_constant() {
        return Err(Error::HypothesisUnmet("form factor must be identically 1"));
    }
    let basis = Basis::sector(&model.grid, sector);
    let h = build_h_bcs(model).compile(&basis)?;
    let eig = diagonalize(&h, SolverMode::Dense)?;
    let bound = eps_bar * T::from_count(sector.particles) + model.grid.frozen_core_energy();
    let extremum = if model.g >= T::zero() { SpectrumEnd::Lowest } else { SpectrumEnd::Highest };
    let n = eig.len();
    let ext_idx = match extremum {
        SpectrumEnd::Lowest => 0,
        SpectrumEnd::Highest => n - 1,
    };
    let extremal = eig.values[ext_idx];
    let level: Vec<usize> = (0..n).filter(|&i| same_level(eig.values[i], extremal)).collect();
    let gap = (0..n)
        .filter(|i| !level.contains(i))
        .map(|i| match extremum {
            SpectrumEnd::Lowest => eig.values[i] - bound,
            SpectrumEnd::Highest => bound - eig.values[i],
        })
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| Float::min(a, d))));

    let nc = nc_states_in_basis(model, &basis)?;
    let proj = nc
        .iter()
        .map(|s| {
            let mut x = s.vector.to_dense(&basis).expect("support checked");
            let us: Vec<Vec<Complex<T>>> = level.iter().map(|&i| eig.vectors[i].clone()).collect();
            orthogonalize(&mut x, &us);
            vnorm(&x)
        })
        .fold(T::zero(), Float::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quotients: Vec<T> = (0..samples).map(|_| rayleigh(&h, &random_unit_vector::<T, _>(n, &mut rng))).collect();
    let (rq, violation) = match extremum {
        SpectrumEnd::Lowest => {
            let m = quotients.iter().copied().fold(T::infinity(), Float::min);
            (m, Float::max(bound - m, T::zero()))
        }
        SpectrumEnd::Highest => {
            let m = quotients.iter().copied().fold(T::neg_infinity(), Float::max);
            (m, Float::max(m - bound, T::zero()))
        }
    };
    let deviation = Float::abs(extremal - bound);
    let scale = Float::max(T::one(), Float::abs(bound));
    let passed = deviation <= T::lit(1e-11) * scale
        && proj <= T::lit(1e-10)
        && violation <= T::lit(1e-12) * scale
        && gap.map_or(true, |g| g > T::zero());
    Ok(GroundLevelReport {
        dimension: n,
        coupling: model.g.to_f64_lossy(),
        bound: bound.to_f64_lossy(),
        extremum,
        extremal_eigenvalue: extremal.to_f64_lossy(),
        bound_deviation: deviation.to_f64_lossy(),
        extremal_multiplicity: level.len(),
        nc_states: nc.len(),
        nc_projection_residual: proj.to_f64_lossy(),
        gap: gap.map(|g| g.to_f64_lossy()),
        rayleigh_samples: samples,
        rayleigh_seed: seed,
        rayleigh_extreme: if samples == 0 { f64::NAN } else { rq.to_f64_lossy() },
        rayleigh_violation: violation.to_f64_lossy(),
        passed,
    })
}

/// `Σ_{k1} G(k1, k) a†_{↑k1} a†_{↓-k1}` over the full layer.
fn pair_sum<T: Real>(model: &BcsModel<T>, k_line: usize) -> OperatorExpr<T> {
    let grid = &model.grid;
    let terms = layer_vectors(grid).map(|(k1, s1)| {
        OperatorExpr::monomial(
            cplx(model.pair_form_factor((k1, s1), (k_line, Sign::Plus))),
            vec![
                Factor::create(grid.mode(k1, s1, Spin::Up)),
                Factor::create(grid.mode(k1, flip(s1), Spin::Down)),
            ],
        )
    });
    terms.fold(OperatorExpr::zero(), |acc, t| acc + t)
}

fn hop<T: Real>(model: &BcsModel<T>, c: T, to: (Sign, Spin), from: (Sign, Spin), k: usize) -> OperatorExpr<T> {
    let g = &model.grid;
    OperatorExpr::monomial(
        cplx(c),
        vec![Factor::create(g.mode(k, to.0, to.1)), Factor::annihilate(g.mode(k, from.0, from.1))],
    )
}

/// Right-hand side of `[W, b†_k(ξ)]` in normal-ordered form.
pub fn commutator_rhs_b<T: Real>(model: &BcsModel<T>, k: usize, xi: Complex<T>) -> OperatorExpr<T> {
    use Sign::{Minus, Plus};
    use Spin::{Down, Up};
    let n = |sign, spin| hop(model, T::one(), (sign, spin), (sign, spin), k);
    let bracket = OperatorExpr::scalar(cplx(T::one()) + xi)
        - (n(Minus, Up) * xi)
        - (n(Plus, Down) * xi)
        - n(Plus, Up)
        - n(Minus, Down);
    let pre = model.g / (model.volume * T::SQRT_2());
    pair_sum(model, k).multiply(&bracket).scaled_re(pre)
}

/// Right-hand side of `[W, γ†_{q,k}]`.
pub fn commutator_rhs_gamma<T: Real>(model: &BcsModel<T>, q: i8, k: usize) -> OperatorExpr<T> {
    use Sign::{Minus, Plus};
    use Spin::{Down, Up};
    let one = T::one();
    let (bracket, pre) = match q {
        0 => (
            hop(model, one, (Minus, Up), (Minus, Up), k) + hop(model, one, (Plus, Down), (Plus, Down), k)
                - hop(model, one, (Plus, Up), (Plus, Up), k)
                - hop(model, one, (Minus, Down), (Minus, Down), k),
            model.g / (model.volume * T::SQRT_2()),
        ),
        1 => (
            hop(model, -one, (Minus, Up), (Minus, Down), k) + hop(model, one, (Plus, Up), (Plus, Down), k),
            model.g / model.volume,
        ),
        -1 => (
            hop(model, one, (Minus, Down), (Minus, Up), k) + hop(model, -one, (Plus, Down), (Plus, Up), k),
            model.g / model.volume,
        ),
        _ => panic!("pair spin projection must be -1, 0 or +1, got {q}"),
    };
    pair_sum(model, k).multiply(&bracket).scaled_re(pre)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCheck {
    pub operator: String,
    /// Frobenius norm of `[W, X] - RHS` on the full Fock space.
    pub difference_norm: f64,
    pub lhs_norm: f64,
    /// `‖RHS|0⟩‖`
    pub rhs_on_vacuum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub k_line: usize,
    pub dimension: usize,
    pub checks: Vec<CommutatorCheck>,
    pub max_difference: f64,
}

/// `ξ` values at which the general pair commutator is certified.
pub fn default_xis<T: Real>() -> Vec<Complex<T>> {
    vec![
        cplx(-T::one()),
        cplx(T::zero()),
        cplx(T::one()),
        Complex::new(T::lit(0.5), T::lit(-1.5)),
    ]
}

/// Compares `[W, X]`, formed from compiled matrices, with the
/// independently assembled right-hand sides for the three triplet pairs and
/// for `b†(ξ)` at each `ξ` in `xis`.
pub fn certify_commutators<T: Real>(model: &BcsModel<T>, k_line: usize, xis: &[Complex<T>]) -> Result<CommutatorReport> {
    let modes = model.grid.mode_count();
    if modes > FULL_SPACE_MODE_CAP {
        return Err(Error::Cap {
            what: "mode",
            requested: modes as u128,
            cap: FULL_SPACE_MODE_CAP as u128,
        });
    }
    if k_line >= model.grid.len() {
        return Err(Error::Config(format!("k-line {k_line} is not on the grid")));
    }
    let basis = Basis::full(modes);
    let w = build_w(model);
    let mut items: Vec<(String, OperatorExpr<T>, OperatorExpr<T>)> = [-1i8, 0, 1]
        .iter()
        .map(|&q| {
            (
                format!("gamma[q={q}]"),
                gamma_dagger(&model.grid, q, k_line),
                commutator_rhs_gamma(model, q, k_line),
            )
        })
        .collect();
    for &xi in xis {
        items.push((
            format!("b[xi={}{:+}i]", xi.re, xi.im),
            b_dagger(&model.grid, k_line, xi),
            commutator_rhs_b(model, k_line, xi),
        ));
    }
    let checks = items
        .into_iter()
        .map(|(name, x, rhs)| {
            let lhs = commutator_matrix(&w, &x, &basis)?;
            let r = rhs.compile(&basis)?;
            Ok(CommutatorCheck {
                operator: name,
                difference_norm: lhs.sub(&r)?.frobenius_norm().to_f64_lossy(),
                lhs_norm: lhs.frobenius_norm().to_f64_lossy(),
                rhs_on_vacuum: rhs.apply(&FockVector::vacuum()).norm().to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_difference = checks.iter().map(|c| c.difference_norm).fold(0.0, f64::max);
    Ok(CommutatorReport {
        k_line,
        dimension: basis.len(),
        checks,
        max_difference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumNumberReport {
    pub particles: f64,
    pub particles_residual: f64,
    pub momentum: [f64; 3],
    pub momentum_residual: f64,
    pub sz: f64,
    pub s_squared: f64,
    pub energy: f64,
    pub energy_residual: f64,
}

fn eigen_residual<T: Real>(op: &OperatorExpr<T>, v: &FockVector<T>) -> Result<(T, T)> {
    let e = observable_expectation(v, op)?.re;
    let u = v.normalized()?;
    Ok((e, op.apply(&u).axpy(cplx(-e), &u).norm()))
}

/// Expectation values of `N̂`, `P̂`, `S_z`, `S²` and `H` with eigenstate
/// residuals `‖(O - ⟨O⟩)v‖` for the number, momentum and energy.
pub fn momentum_and_number_report<T: Real>(model: &BcsModel<T>, v: &FockVector<T>) -> Result<QuantumNumberReport> {
    let (n, n_res) = eigen_residual(&build_number(&model.grid), v)?;
    let mut p = [0.0; 3];
    let mut p_res = T::zero();
    for (i, op) in build_total_momentum(&model.grid).iter().enumerate() {
        let (pi, ri) = eigen_residual(op, v)?;
        p[i] = pi.to_f64_lossy();
        p_res += ri * ri;
    }
    let spin = build_spin_ops(&model.grid);
    let (e, e_res) = eigen_residual(&build_h_bcs(model), v)?;
    Ok(QuantumNumberReport {
        particles: n.to_f64_lossy(),
        particles_residual: n_res.to_f64_lossy(),
        momentum: p,
        momentum_residual: p_res.sqrt().to_f64_lossy(),
        sz: observable_expectation(v, &spin.s_z)?.re.to_f64_lossy(),
        s_squared: observable_expectation(v, &spin.s_squared)?.re.to_f64_lossy(),
        energy: e.to_f64_lossy(),
        energy_residual: e_res.to_f64_lossy(),
    })
}

/// True when every label yields bit-identical vectors at every coupling.
pub fn coupling_independent<T: Real>(model: &BcsModel<T>, labels: &[NcLabel], couplings: &[T]) -> Result<bool> {
    for l in labels {
        let reference = build_nc_state(model, l)?.vector;
        for &g in couplings {
            if build_nc_state(&model.with_coupling(g), l)?.vector != reference {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub count: usize,
    pub rank: usize,
    /// `max |⟨v_i|v_j⟩ - δ_ij|`
    pub orthonormality_deviation: f64,
}

/// Rank (eigenvalues of the Gram matrix above `tol`) and orthonormality of
/// a set of vectors.
pub fn gram_report<T: LinalgReal>(vectors: &[FockVector<T>], tol: T) -> GramReport {
    let n = vectors.len();
    let mut g = DMatrix::from_element(n, n, cplx(T::zero()));
    let mut dev = T::zero();
    for i in 0..n {
        for j in 0..n {
            let v = vectors[i].inner(&vectors[j]);
            g[(i, j)] = v;
            let target = if i == j { T::one() } else { T::zero() };
            dev = Float::max(dev, (v - cplx(target)).norm());
        }
    }
    let rank = if n == 0 {
        0
    } else {
        SymmetricEigen::new(g).eigenvalues.iter().filter(|&&e| e > tol).count()
    };
    GramReport {
        count: n,
        rank,
        orthonormality_deviation: dev.to_f64_lossy(),
    }
}
