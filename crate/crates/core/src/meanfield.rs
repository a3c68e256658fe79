//! Continuum energetics of the aligned-pair state, the Weiss mean-field
//! magnetization and the applicability criteria.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{observable_expectation, FockVector};
use crate::kspace::Units;
use crate::model::{build_h_fs, build_h_ss, build_spin_ops, BcsModel, SpinCouplings};
use crate::scalar::Real;

/// Bisection iteration limit of the self-consistency solver.
pub const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ContinuumParams<T> {
    pub kf: T,
    pub delta: T,
    /// Total particle number `N`.
    pub n_total: T,
    pub mass: T,
    /// Particle density `n`.
    pub density: T,
    pub volume: T,
    #[serde(default = "one")]
    pub hbar: T,
}

fn one<T: Real>() -> T {
    T::one()
}

impl<T: Real> ContinuumParams<T> {
    /// Quadratic band: `n = kF³/3π²`, `V = N/n`.
    pub fn quadratic(kf: T, delta: T, n_total: T, mass: T) -> Self {
        let density = kf.powi(3) / (T::lit(3.0) * T::PI() * T::PI());
        Self {
            kf,
            delta,
            n_total,
            mass,
            density,
            volume: n_total / density,
            hbar: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero() && self.delta < self.kf) {
            return Err(Error::Config(format!("need 0 < delta < kF, got delta={} kF={}", self.delta, self.kf)));
        }
        if !(self.mass > T::zero() && self.n_total > T::zero() && self.density > T::zero() && self.volume > T::zero()) {
            return Err(Error::Config("mass, N, n and V must be positive".into()));
        }
        Ok(())
    }

    /// `ρ_F = m kF / (π² ħ²)`
    pub fn rho_f(&self) -> T {
        state_density(self.mass, self.kf, self.hbar)
    }

    /// `δN ≈ 3 N Δ / kF`
    pub fn layer_particles(&self) -> T {
        self.n_total * T::lit(3.0) * self.delta / self.kf
    }
}

/// `ρ_F = m kF / (π² ħ²)`
pub fn state_density<T: Real>(mass: T, kf: T, hbar: T) -> T {
    mass * kf / (T::PI() * T::PI() * hbar * hbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumEnergies<T> {
    pub e_f: T,
    pub delta_e_nc: T,
    pub e_nc: T,
    /// `δN / N`
    pub delta_n_ratio: T,
}

pub fn continuum_energies<T: Real>(p: &ContinuumParams<T>) -> ContinuumEnergies<T> {
    let three = T::lit(3.0);
    let hk2 = (p.hbar * p.kf).powi(2);
    let x = p.delta / p.kf;
    let e_f = three * hk2 * p.n_total / (T::lit(10.0) * p.mass);
    let delta_e_nc = three * hk2 * p.n_total / p.mass * x * x * (T::one() + T::lit(0.5) * x * x);
    ContinuumEnergies {
        e_f,
        delta_e_nc,
        e_nc: e_f + delta_e_nc,
        delta_n_ratio: three * x,
    }
}

/// `E(K) = E + N (ħK)² / 2m`
pub fn boosted_energy<T: Real>(e: T, n_total: T, k: T, mass: T, hbar: T) -> T {
    e + n_total * (hbar * k).powi(2) / (T::lit(2.0) * mass)
}

fn check_spin<T: Real>(j: T) -> Result<usize> {
    let twice = j * T::lit(2.0);
    let r = twice.round();
    if j <= T::zero() || (twice - r).abs() > T::epsilon() * T::lit(8.0) {
        return Err(Error::Config(format!("spin j must be a positive multiple of 1/2, got {j}")));
    }
    r.to_usize().ok_or_else(|| Error::Config(format!("spin j={j} out of range")))
}

/// `M/M0 = Σ (m/j) e^{2 m x} / Σ e^{2 m x}` with `m = -j..j`.
pub fn brillouin_ratio<T: Real>(j: T, x: T) -> Result<T> {
    let twice_j = check_spin(j)?;
    let ms = (0..=twice_j).map(|i| T::from_count(i) - j);
    let top = T::lit(2.0) * j * x.abs();
    let (mut num, mut den) = (T::zero(), T::zero());
    for m in ms {
        let w = (T::lit(2.0) * m * x - top).exp();
        num += m / j * w;
        den += w;
    }
    Ok(num / den)
}

/// `f(x) = 2 sinh x / (1 + 2 cosh x)`, the `j = 1` ratio.
pub fn triplet_ratio<T: Real>(x: T) -> T {
    let a = x.abs();
    let e1 = (-a).exp();
    let e2 = e1 * e1;
    let v = (T::one() - e2) / (e1 + T::one() + e2);
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Equilibrium moment of free spins `j` in field `B` at temperature `T`.
/// At `T = 0` the limit `sign(B)·M0` is returned, and `0` when `B = 0`.
pub fn brillouin_magnetization<T: Real>(j: T, b: T, temperature: T, m0: T, units: &Units<T>) -> Result<T> {
    check_spin(j)?;
    if temperature < T::zero() {
        return Err(Error::Config(format!("temperature must be non-negative, got {temperature}")));
    }
    if temperature == T::zero() {
        return Ok(if b == T::zero() { T::zero() } else { m0 * b.signum() });
    }
    Ok(m0 * brillouin_ratio(j, units.mu_b * b / (units.k_b * temperature))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct MeanFieldParams<T> {
    /// Weiss coefficient `λ` of the molecular field `λI`.
    pub lambda: T,
    /// Saturation magnetization `I0`.
    pub i0: T,
    /// Saturation moment `M0`.
    #[serde(default)]
    pub m0: T,
    #[serde(default)]
    pub temperature: T,
    #[serde(default)]
    pub field: T,
    #[serde(default = "one")]
    pub j: T,
    #[serde(default)]
    pub units: Units<T>,
}

impl<T: Real> MeanFieldParams<T> {
    pub fn new(lambda: T, i0: T) -> Self {
        Self {
            lambda,
            i0,
            m0: T::zero(),
            temperature: T::zero(),
            field: T::zero(),
            j: T::one(),
            units: Units::default(),
        }
    }

    pub fn at(mut self, temperature: T) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_field(mut self, field: T) -> Self {
        self.field = field;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_spin(self.j)?;
        if self.temperature < T::zero() || self.i0 < T::zero() || self.m0 < T::zero() {
            return Err(Error::Config("T, I0 and M0 must be non-negative".into()));
        }
        Ok(())
    }

    /// `x = μ_B (B + λI) / (k_B T)`
    fn argument(&self, i: T) -> T {
        self.units.mu_b * (self.field + self.lambda * i) / (self.units.k_b * self.temperature)
    }
}

/// `T_C = 2(j+1) μ_B λ I0 / (3 k_B)`; zero when `λ ≤ 0`.
pub fn curie_temperature<T: Real>(p: &MeanFieldParams<T>) -> T {
    if p.lambda <= T::zero() {
        return T::zero();
    }
    T::lit(2.0) * (p.j + T::one()) * p.units.mu_b * p.lambda * p.i0 / (T::lit(3.0) * p.units.k_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint<T> {
    pub magnetization: T,
    /// `|I - I0 B_j(x(I))|`
    pub residual: T,
    pub iterations: usize,
}

/// Residual of the self-consistency equation at `i`.
pub fn self_consistency_residual<T: Real>(p: &MeanFieldParams<T>, i: T) -> Result<T> {
    if p.temperature == T::zero() {
        return Ok(T::zero());
    }
    Ok(i - p.i0 * brillouin_ratio(p.j, p.argument(i))?)
}

/// Largest non-negative solution of `I = I0 B_j(μ_B(B + λI)/k_B T)`.
///
/// With `B = 0` the result is zero from the Curie temperature up; below it
/// the bisection runs on `1 - I0 B_j(x(I))/I`, which is monotone on
/// `(0, I0]`. Bisection stops when the bracket reaches machine width. A
/// negative field is handled by reflection.
pub fn solve_spontaneous<T: Real>(p: &MeanFieldParams<T>, tol: T) -> Result<FixedPoint<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    p.validate()?;
    if p.field < T::zero() {
        let mirrored = MeanFieldParams { field: -p.field, ..*p };
        let fp = solve_spontaneous(&mirrored, tol)?;
        return Ok(FixedPoint {
            magnetization: -fp.magnetization,
            ..fp
        });
    }
    let zero = FixedPoint {
        magnetization: T::zero(),
        residual: T::zero(),
        iterations: 0,
    };
    if p.i0 == T::zero() {
        return Ok(zero);
    }
    if p.temperature == T::zero() {
        let ordered = p.field > T::zero() || p.lambda > T::zero();
        return Ok(FixedPoint {
            magnetization: if ordered { p.i0 } else { T::zero() },
            ..zero
        });
    }
    if p.field == T::zero() && p.lambda <= T::zero() {
        return Ok(zero);
    }

    if p.field == T::zero() && p.temperature >= curie_temperature(p) {
        return Ok(zero);
    }

    let g = |i: T| self_consistency_residual(p, i);
    let spontaneous = p.field == T::zero();
    // negative below the wanted fixed point, non-negative above it
    let s = |i: T| -> Result<T> {
        if spontaneous {
            Ok(g(i)? / i)
        } else {
            g(i)
        }
    };
    let mut lo = if spontaneous { p.i0 * T::epsilon() } else { T::zero() };
    let mut hi = p.i0;
    if s(lo)? >= T::zero() || s(hi)? < T::zero() {
        return damped_iteration(p, tol);
    }
    let width = p.i0 * T::epsilon() * T::lit(4.0);
    for it in 1..=MAX_BISECTION_STEPS {
        let mid = (lo + hi) * T::lit(0.5);
        if hi - lo <= width || mid == lo || mid == hi {
            let r = g(mid)?.abs();
            if r > tol {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: r.to_f64_lossy(),
                });
            }
            return Ok(FixedPoint {
                magnetization: mid,
                residual: r,
                iterations: it,
            });
        }
        if s(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = (lo + hi) * T::lit(0.5);
    Err(Error::NoConvergence {
        iterations: MAX_BISECTION_STEPS,
        residual: g(mid)?.abs().to_f64_lossy(),
    })
}

/// `I ← (I + I0 B_j(x(I)))/2` from `I0`, which descends onto the largest
/// fixed point.
fn damped_iteration<T: Real>(p: &MeanFieldParams<T>, tol: T) -> Result<FixedPoint<T>> {
    let mut i = p.i0;
    let limit = 100 * MAX_BISECTION_STEPS;
    for it in 1..=limit {
        let target = p.i0 * brillouin_ratio(p.j, p.argument(i))?;
        let r = (i - target).abs();
        if r <= tol {
            return Ok(FixedPoint {
                magnetization: i,
                residual: r,
                iterations: it,
            });
        }
        i = (i + target) * T::lit(0.5);
    }
    Err(Error::NoConvergence {
        iterations: limit,
        residual: self_consistency_residual(p, i)?.abs().to_f64_lossy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub temperature: T,
    pub magnetization: T,
    pub ratio: T,
}

/// `I(T)` on the given temperatures, evaluated in parallel.
pub fn magnetization_sweep<T: Real>(p: &MeanFieldParams<T>, temperatures: &[T], tol: T) -> Result<Vec<SweepPoint<T>>> {
    if p.lambda <= T::zero() && p.field == T::zero() {
        log::warn!("Weiss coefficient {} <= 0: no spontaneous order, the curve is identically zero", p.lambda);
    }
    temperatures
        .par_iter()
        .map(|&t| {
            let fp = solve_spontaneous(&p.at(t), tol)?;
            Ok(SweepPoint {
                temperature: t,
                magnetization: fp.magnetization,
                ratio: if p.i0 > T::zero() { fp.magnetization / p.i0 } else { T::zero() },
            })
        })
        .collect()
}

/// Uniform grid of `count` points on `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * T::from_count(i) / T::from_count(count - 1))
            .collect(),
    }
}

/// Locates the onset of order by bisection in temperature, without the
/// closed form of `T_C`: the paramagnet is unstable while
/// `I0 B_j(x(δ))/δ > 1` at the small probe `δ = 1e-6 I0`.
pub fn bisect_onset<T: Real>(p: &MeanFieldParams<T>, mut lo: T, mut hi: T, rel_tol: T) -> Result<T> {
    let delta = p.i0 * T::lit(1e-6);
    let unstable = |t: T| -> Result<bool> {
        let q = p.at(t);
        Ok(p.i0 * brillouin_ratio(q.j, q.argument(delta))? > delta)
    };
    if !unstable(lo)? || unstable(hi)? {
        return Err(Error::Config("onset is not bracketed".into()));
    }
    while hi - lo > rel_tol * hi {
        let mid = (lo + hi) * T::lit(0.5);
        if unstable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SpinParams<T> {
    pub g_ss: T,
    pub a_fs: T,
    pub j_f: T,
    pub n_f: T,
    #[serde(default)]
    pub field: T,
    #[serde(default)]
    pub units: Units<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinCorrections<T> {
    /// `-G_ss δN² / V`
    pub h_ss_m: T,
    /// `-|A_fs| J_f n_f δN / 2`
    pub h_fs_m: T,
    /// `-μ_B |B| δN`
    pub h_zeeman_m: T,
    /// `μ_B n δN / N`
    pub i0: T,
    /// `μ_B δN`
    pub m0: T,
}

impl<T: Real> SpinCorrections<T> {
    pub fn total(&self) -> T {
        self.h_ss_m + self.h_fs_m + self.h_zeeman_m
    }
}

/// Spin energies of the fully aligned state with `δN` layer particles.
pub fn spin_corrections<T: Real>(s: &SpinParams<T>, delta_n: T, n_total: T, density: T, volume: T) -> SpinCorrections<T> {
    let mu = s.units.mu_b;
    SpinCorrections {
        h_ss_m: T::zero() - s.g_ss * delta_n * delta_n / volume,
        h_fs_m: T::zero() - s.a_fs.abs() * s.j_f * s.n_f * delta_n / T::lit(2.0),
        h_zeeman_m: T::zero() - mu * s.field.abs() * delta_n,
        i0: mu * density * delta_n / n_total,
        m0: mu * delta_n,
    }
}

/// Spin energies evaluated as exact expectation values on a discrete state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpinEnergies<T> {
    pub sz: T,
    pub h_ss: T,
    pub h_fs: T,
}

/// `⟨H_ss⟩` and `⟨H_fs⟩` on `v` with self-consistent mean fields: the
/// electron field is `⟨S_z⟩` of `v` and the ion spins saturate in the
/// direction that lowers the exchange energy.
pub fn discrete_spin_energies<T: Real>(
    model: &BcsModel<T>,
    couplings: &SpinCouplings<T>,
    v: &FockVector<T>,
) -> Result<DiscreteSpinEnergies<T>> {
    let sz = observable_expectation(v, &build_spin_ops(&model.grid).s_z)?.re;
    let h_ss = observable_expectation(v, &build_h_ss(model, couplings, sz))?.re;
    let ion = -couplings.a_fs.signum() * sz.signum() * couplings.saturated_ion_spin(model.volume, model.grid.units.hbar);
    let h_fs = observable_expectation(v, &build_h_fs(model, couplings, ion))?.re;
    Ok(DiscreteSpinEnergies { sz, h_ss, h_fs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion<T> {
    pub holds: bool,
    /// Left side minus right side.
    pub margin: T,
}

fn strict<T: Real>(lhs: T, rhs: T) -> Criterion<T> {
    Criterion {
        holds: lhs > rhs,
        margin: lhs - rhs,
    }
}

/// `G_ss ρ_F > 1`
pub fn stoner_criterion<T: Real>(g_ss: T, rho_f: T) -> Criterion<T> {
    strict(g_ss * rho_f, T::one())
}

/// `(J_f n_f kF |A_fs| / (6 n Δ) + G_ss) ρ_F > 1`
pub fn combined_criterion<T: Real>(s: &SpinParams<T>, p: &ContinuumParams<T>) -> Criterion<T> {
    let fs = s.j_f * s.n_f * p.kf * s.a_fs.abs() / (T::lit(6.0) * p.density * p.delta);
    strict((fs + s.g_ss) * p.rho_f(), T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "energy", rename_all = "snake_case")]
pub enum ReferenceEnergy<T> {
    Fermi,
    Bcs(Option<T>),
}

/// `E_NC + H_S_m < E_ref`; the margin is `E_ref - (E_NC + H_S_m)`.
pub fn general_criterion<T: Real>(e_nc: T, h_s_m: T, e_ref: T) -> Criterion<T> {
    strict(e_ref, e_nc + h_s_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport<T> {
    pub rho_f: T,
    pub energies: ContinuumEnergies<T>,
    pub spin: SpinCorrections<T>,
    pub reference_energy: T,
    pub stoner: Criterion<T>,
    pub combined: Criterion<T>,
    pub general: Criterion<T>,
}

pub fn applicability_criteria<T: Real>(
    p: &ContinuumParams<T>,
    s: &SpinParams<T>,
    reference: ReferenceEnergy<T>,
) -> Result<CriteriaReport<T>> {
    p.validate()?;
    let energies = continuum_energies(p);
    let e_ref = match reference {
        ReferenceEnergy::Fermi => energies.e_f,
        ReferenceEnergy::Bcs(Some(e)) => e,
        ReferenceEnergy::Bcs(None) => {
            return Err(Error::MissingReference("the BCS reference needs a supplied ground-state energy"))
        }
    };
    let spin = spin_corrections(s, p.layer_particles(), p.n_total, p.density, p.volume);
    let rho_f = p.rho_f();
    Ok(CriteriaReport {
        rho_f,
        energies,
        spin,
        reference_energy: e_ref,
        stoner: stoner_criterion(s.g_ss, rho_f),
        combined: combined_criterion(s, p),
        general: general_criterion(energies.e_nc, spin.total(), e_ref),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn continuum_examples() {
        let p = ContinuumParams::<f64>::quadratic(1.0, 0.1, 10.0, 1.0);
        let e = continuum_energies(&p);
        assert!((e.e_f - 3.0).abs() < 1e-15);
        assert!((e.delta_e_nc - 0.3015).abs() < 1e-15);
        assert!((e.e_nc - 3.3015).abs() < 1e-15);
        let q = ContinuumParams::<f64>::quadratic(1.0, 0.01, 10.0, 1.0);
        assert!((continuum_energies(&q).delta_n_ratio - 0.03).abs() < 1e-16);
        assert!(ContinuumParams::<f64>::quadratic(1.0, 1.5, 10.0, 1.0).validate().is_err());
    }

    #[test]
    fn brillouin_examples() {
        let u = Units::<f64>::default();
        assert_eq!(brillouin_magnetization::<f64>(1.0, 0.0, 2.0, 1.0, &u).unwrap(), 0.0);
        let v = brillouin_magnetization::<f64>(1.0, 0.5, 1.0, 1.0, &u).unwrap();
        let e = std::f64::consts::E;
        assert!((v - (e - 1.0 / e) / (1.0 + e + 1.0 / e)).abs() < 1e-15);
        assert!((v - 0.5752104).abs() < 1e-7);
        assert!((brillouin_magnetization::<f64>(1.0, 1.0, 1e-6, 2.0, &u).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(brillouin_magnetization::<f64>(1.0, -1.0, 0.0, 2.0, &u).unwrap(), -2.0);
        assert_eq!(brillouin_magnetization::<f64>(1.0, 0.0, 0.0, 2.0, &u).unwrap(), 0.0);
        assert!(brillouin_magnetization::<f64>(0.7, 1.0, 1.0, 1.0, &u).is_err());
        // no overflow far from the origin
        assert_eq!(brillouin_ratio::<f64>(1.0, 1e6).unwrap(), 1.0);
        assert_eq!(triplet_ratio::<f64>(-1e6), -1.0);
    }

    #[test]
    fn spin_half_is_tanh() {
        for x in [-3.0, -0.2, 0.0, 0.7, 5.0] {
            assert!((brillouin_ratio::<f64>(0.5, x).unwrap() - f64::tanh(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn curie_examples() {
        let p = MeanFieldParams::<f64>::new(1.0, 1.0);
        assert!((curie_temperature(&p) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(curie_temperature(&MeanFieldParams::<f64>::new(0.0, 1.0)), 0.0);
        assert!((curie_temperature(&MeanFieldParams::<f64>::new(2.0, 1.0)) - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spontaneous_examples() {
        let p = MeanFieldParams::<f64>::new(1.0, 1.0);
        let tc = curie_temperature(&p);
        assert_eq!(solve_spontaneous(&p.at(tc), 1e-12).unwrap().magnetization, 0.0);
        assert_eq!(solve_spontaneous(&p.at(2.0 * tc), 1e-12).unwrap().magnetization, 0.0);
        assert_eq!(solve_spontaneous(&p.at(0.0), 1e-12).unwrap().magnetization, 1.0);
        assert!((solve_spontaneous(&p.at(1e-3), 1e-12).unwrap().magnetization - 1.0).abs() < 1e-12);
        let fp = solve_spontaneous(&p.at(0.5 * tc), 1e-12).unwrap();
        assert!(fp.magnetization > 0.5 && fp.magnetization < 1.0);
        assert!(fp.residual <= 1e-12 && fp.iterations <= MAX_BISECTION_STEPS);
        assert!(self_consistency_residual(&p.at(0.5 * tc), fp.magnetization).unwrap().abs() <= 1e-12);
        assert!(matches!(solve_spontaneous(&p.at(0.5), 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn field_breaks_the_symmetry() {
        let p = MeanFieldParams::<f64>::new(1.0, 1.0).with_field(0.1).at(3.0);
        let up = solve_spontaneous(&p, 1e-12).unwrap();
        assert!(up.magnetization > 0.0 && up.residual <= 1e-12);
        let down = solve_spontaneous(&p.with_field(-0.1), 1e-12).unwrap();
        assert_eq!(down.magnetization, -up.magnetization);
        // paramagnet: no Weiss field, plain Brillouin curve
        let para = MeanFieldParams::<f64>::new(0.0, 1.0).with_field(0.5).at(1.0);
        let v = solve_spontaneous(&para, 1e-13).unwrap().magnetization;
        assert!((v - triplet_ratio::<f64>(1.0)).abs() < 1e-12);
    }

    #[test]
    fn onset_matches_curie() {
        let p = MeanFieldParams::<f64>::new(1.0, 1.0);
        let t = bisect_onset(&p, 0.5, 2.0, 1e-9).unwrap();
        assert!((t / (4.0 / 3.0) - 1.0).abs() < 1e-6);
        let p5 = MeanFieldParams { j: 2.5, ..MeanFieldParams::<f64>::new(0.7, 1.3) };
        let t5 = bisect_onset(&p5, 0.1, 10.0, 1e-10).unwrap();
        assert!((t5 / curie_temperature(&p5) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sweep_shape() {
        let p = MeanFieldParams::<f64>::new(1.0, 1.0);
        let ts = linspace(0.0, 2.0, 200);
        let curve = magnetization_sweep(&p, &ts, 1e-12).unwrap();
        assert_eq!(curve[0].magnetization, 1.0);
        for w in curve.windows(2) {
            assert!(w[1].magnetization <= w[0].magnetization);
        }
        for pt in &curve {
            if pt.temperature >= 4.0 / 3.0 {
                assert_eq!(pt.magnetization, 0.0);
            }
        }
        let flat = magnetization_sweep(&MeanFieldParams::<f64>::new(-1.0, 1.0), &ts, 1e-12).unwrap();
        assert!(flat.iter().all(|p| p.magnetization == 0.0));
    }

    #[test]
    fn spin_correction_examples() {
        let s = SpinParams {
            g_ss: 1.0,
            a_fs: 0.0,
            j_f: 1.0,
            n_f: 1.0,
            field: 0.0,
            units: Units::<f64>::default(),
        };
        let c = spin_corrections(&s, 4.0, 100.0, 1.0, 1.0);
        assert_eq!(c.h_ss_m, -16.0);
        assert_eq!(c.h_fs_m, 0.0);
        assert_eq!(c.m0, 4.0);
        let c = spin_corrections(&s, 3.0, 100.0, 1.0, 1.0);
        assert!((c.i0 - 0.03).abs() < 1e-16);
        let neg = SpinParams { a_fs: -2.0, ..s };
        assert_eq!(spin_corrections(&neg, 4.0, 100.0, 1.0, 1.0).h_fs_m, -4.0);
    }

    #[test]
    fn discrete_expectations_match_closed_forms() {
        use crate::kspace::{build_shell, PlacementScheme};
        use crate::ncstates::{build_nc_state, NcLabel};
        let grid = build_shell(1.0, 0.1, 2, PlacementScheme::FibonacciSphere).unwrap();
        let model: BcsModel<f64> = BcsModel::new(grid, 1.0).with_volume(1.0);
        let c = SpinCouplings {
            g_ss: 1.0,
            a_fs: -0.3,
            j_f: 1.5,
            n_f: 0.2,
            ..Default::default()
        };
        let v = build_nc_state(&model, &NcLabel::uniform(2, -1)).unwrap().vector;
        let d = discrete_spin_energies(&model, &c, &v).unwrap();
        let s = SpinParams {
            g_ss: 1.0,
            a_fs: -0.3,
            j_f: 1.5,
            n_f: 0.2,
            field: 0.0,
            units: Units::<f64>::default(),
        };
        let closed = spin_corrections(&s, 4.0, 10.0, 1.0, 1.0);
        assert_eq!(d.sz, -2.0);
        assert!((d.h_ss - -16.0).abs() <= 1e-12);
        assert!((d.h_ss - closed.h_ss_m).abs() <= 1e-12);
        assert!((d.h_fs - closed.h_fs_m).abs() <= 1e-12);
    }

    #[test]
    fn stoner_is_strict() {
        assert!(stoner_criterion(1.5, 1.0).holds);
        assert!(!stoner_criterion(0.5, 1.0).holds);
        let edge = stoner_criterion(1.0, 1.0);
        assert!(!edge.holds);
        assert_eq!(edge.margin, 0.0);
    }

    #[test]
    fn combined_without_contact_coupling() {
        let p = ContinuumParams::<f64>::quadratic(1.0, 0.01, 1e4, 1.0);
        let s = SpinParams {
            g_ss: 0.0,
            a_fs: 0.05,
            j_f: 1.0,
            n_f: 0.5,
            field: 0.0,
            units: Units::<f64>::default(),
        };
        assert!(!stoner_criterion(s.g_ss, p.rho_f()).holds);
        assert!(combined_criterion(&s, &p).holds);
        let wide = ContinuumParams::<f64>::quadratic(1.0, 0.2, 1e4, 1.0);
        assert!(!combined_criterion(&s, &wide).holds);
    }

    #[test]
    fn general_criterion_and_references() {
        assert!(!general_criterion(3.0, -1.0, 2.0).holds);
        assert!(general_criterion(3.0, -1.5, 2.0).holds);
        let p = ContinuumParams::<f64>::quadratic(1.0, 0.01, 1e4, 1.0);
        let s = SpinParams {
            g_ss: 0.0,
            a_fs: 0.0,
            j_f: 0.0,
            n_f: 0.0,
            field: 0.0,
            units: Units::<f64>::default(),
        };
        let r = applicability_criteria(&p, &s, ReferenceEnergy::Fermi).unwrap();
        assert!(!r.general.holds && r.general.margin < 0.0);
        assert!(matches!(
            applicability_criteria(&p, &s, ReferenceEnergy::Bcs(None)),
            Err(Error::MissingReference(_))
        ));
        let r = applicability_criteria(&p, &s, ReferenceEnergy::Bcs(Some(1e9))).unwrap();
        assert!(r.general.holds);
    }

    proptest! {
        #[test]
        fn brillouin_is_odd_monotone_bounded(b in -5.0f64..5.0, db in 1e-3f64..1.0, t in 0.05f64..10.0, j2 in 1usize..8) {
            let u = Units::<f64>::default();
            let j = j2 as f64 / 2.0;
            let m = brillouin_magnetization::<f64>(j, b, t, 1.0, &u).unwrap();
            let m_neg = brillouin_magnetization::<f64>(j, -b, t, 1.0, &u).unwrap();
            let m_up = brillouin_magnetization::<f64>(j, b + db, t, 1.0, &u).unwrap();
            prop_assert!((m + m_neg).abs() <= 1e-15);
            prop_assert!(m_up >= m);
            prop_assert!(m.abs() <= 1.0);
        }

        #[test]
        fn general_j_matches_triplet_form(b in -5.0f64..5.0, t in 0.01f64..10.0) {
            let x = b / t;
            let general = brillouin_ratio::<f64>(1.0, x).unwrap();
            prop_assert!((general - triplet_ratio::<f64>(2.0 * x)).abs() <= 1e-14);
        }

        #[test]
        fn solver_residual(t in 0.01f64..1.33, lambda in 0.1f64..3.0) {
            let p = MeanFieldParams::<f64>::new(lambda, 1.0).at(t * lambda);
            let fp = solve_spontaneous(&p, 1e-12).unwrap();
            prop_assert!(fp.residual <= 1e-12);
            prop_assert!(fp.magnetization > 0.0 && fp.magnetization <= 1.0);
        }
    }
}
