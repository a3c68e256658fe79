//! Discretized Fermi shell, dispersion laws, the pairing form factor and
//! mode indexing.
//!
//! The shell `kF - Δ ≤ |k| ≤ kF + Δ` is represented by `M` explicit k-lines,
//! one point per line in the upper hemisphere (`k_z > 0`). Each line carries
//! four modes: spin up/down at `+k` and at `-k`. Inner Fermi-sphere states are
//! a frozen core unless explicit inner points are requested.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{add3, len3, neg3, Real, Vec3};

/// Largest number of fermionic modes a bitmask state can hold.
pub const MAX_MODES: usize = 64;

/// Unit constants. Formulas always go through these fields; defaults are
/// natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units<T> {
    pub hbar: T,
    pub mu_b: T,
    pub k_b: T,
}

impl<T: Real> Default for Units<T> {
    fn default() -> Self {
        Self {
            hbar: T::one(),
            mu_b: T::one(),
            k_b: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Dispersion<T> {
    /// `(ħk)² / 2m`
    Quadratic { mass: T },
    /// Constant `ε̄` for every mode.
    Flat { energy: T },
}

/// Particles and kinetic energy of the inner sphere, kept only as constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenCore<T> {
    pub count: usize,
    pub energy: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPoint<T> {
    pub id: usize,
    pub vec: Vec3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// `+1` for up, `-1` for down.
    pub fn projection(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

/// Layer mode `(k-line, ±k, spin)`.
///
/// Linear order: `4·k_id + 2·sign + spin` with `Plus = 0`, `Minus = 1`,
/// `Up = 0`, `Down = 1`. Fermionic signs follow this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k_id: usize,
    pub sign: Sign,
    pub spin: Spin,
}

impl ModeIndex {
    pub fn new(k_id: usize, sign: Sign, spin: Spin) -> Self {
        Self { k_id, sign, spin }
    }

    pub fn linear(self) -> usize {
        4 * self.k_id
            + 2 * (self.sign == Sign::Minus) as usize
            + (self.spin == Spin::Down) as usize
    }
}

/// Linear mode number, the bit position in a Fock state. Layer modes come
/// first (`0..4M`), explicit inner modes follow (`4M + 2·i + spin`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(pub usize);

impl From<ModeIndex> for Mode {
    fn from(m: ModeIndex) -> Self {
        Mode(m.linear())
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Which physical single-particle state a mode is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Layer(ModeIndex),
    Inner { point: usize, spin: Spin },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementScheme {
    FibonacciSphere,
    SeededRandom(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct KGrid<T> {
    pub points: Vec<KPoint<T>>,
    pub kf: T,
    pub delta: T,
    pub dispersion: Dispersion<T>,
    #[serde(default = "zero3")]
    pub k_offset: Vec3<T>,
    #[serde(default)]
    pub frozen_core: FrozenCore<T>,
    /// Explicit inner-sphere points, each contributing a `↑,↓` pair of modes.
    #[serde(default)]
    pub inner_points: Vec<Vec3<T>>,
    #[serde(default)]
    pub units: Units<T>,
}

fn zero3<T: Real>() -> Vec3<T> {
    [T::zero(); 3]
}

impl<T: Real> Default for FrozenCore<T> {
    fn default() -> Self {
        Self {
            count: 0,
            energy: T::zero(),
        }
    }
}

/// Places `m` points in the upper half of the shell around `kf`.
pub fn build_shell<T: Real>(
    kf: T,
    delta: T,
    m: usize,
    scheme: PlacementScheme,
) -> Result<KGrid<T>> {
    if m == 0 {
        return Err(Error::Config("a shell needs at least one k-point".into()));
    }
    if !(delta > T::zero()) || !(delta < kf) {
        return Err(Error::Config(format!(
            "shell half-width must satisfy 0 < delta < kF (delta = {delta}, kF = {kf})"
        )));
    }
    let inner = kf - delta;
    let width = delta + delta;
    let half = T::lit(0.5);
    let vecs: Vec<Vec3<T>> = match scheme {
        PlacementScheme::FibonacciSphere => {
            let golden_angle = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
            let golden_frac = (T::lit(5.0).sqrt() - T::one()) * half;
            (0..m)
                .map(|i| {
                    let fi = T::from_count(i);
                    let z = (fi + half) / T::from_count(m);
                    let rho = (T::one() - z * z).sqrt();
                    let phi = golden_angle * fi;
                    let t = ((fi + half) * golden_frac).fract();
                    let r = inner + width * t;
                    [r * rho * phi.cos(), r * rho * phi.sin(), r * z]
                })
                .collect()
        }
        PlacementScheme::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let outer = kf + delta;
            let (lo3, hi3) = (inner.powi(3), outer.powi(3));
            (0..m)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let v: f64 = rng.gen();
                    let w: f64 = rng.gen();
                    let z = T::one() - T::lit(u);
                    let rho = (T::one() - z * z).sqrt();
                    let phi = T::TAU() * T::lit(v);
                    let r = (lo3 + (hi3 - lo3) * T::lit(w)).cbrt();
                    [r * rho * phi.cos(), r * rho * phi.sin(), r * z]
                })
                .collect()
        }
    };
    KGrid::from_vectors(kf, delta, vecs)
}

impl<T: Real> KGrid<T> {
    /// Grid from explicit upper-hemisphere vectors, quadratic dispersion with
    /// unit mass.
    pub fn from_vectors(kf: T, delta: T, vecs: Vec<Vec3<T>>) -> Result<Self> {
        let grid = Self {
            points: vecs
                .into_iter()
                .enumerate()
                .map(|(id, vec)| KPoint { id, vec })
                .collect(),
            kf,
            delta,
            dispersion: Dispersion::Quadratic { mass: T::one() },
            k_offset: zero3(),
            frozen_core: FrozenCore::default(),
            inner_points: Vec::new(),
            units: Units::default(),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_dispersion(mut self, dispersion: Dispersion<T>) -> Self {
        self.dispersion = dispersion;
        self
    }

    pub fn with_offset(mut self, k_offset: Vec3<T>) -> Self {
        self.k_offset = k_offset;
        self
    }

    pub fn with_frozen_core(mut self, count: usize, energy: T) -> Self {
        self.frozen_core = FrozenCore { count, energy };
        self
    }

    pub fn with_units(mut self, units: Units<T>) -> Self {
        self.units = units;
        self
    }

    /// Adds explicit inner-sphere points (`|k| < kF - Δ`).
    pub fn with_inner_points(mut self, points: Vec<Vec3<T>>) -> Result<Self> {
        self.inner_points = points;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Config("a shell needs at least one k-point".into()));
        }
        if !(self.delta > T::zero()) || !(self.delta < self.kf) {
            return Err(Error::Config("shell half-width must satisfy 0 < delta < kF".into()));
        }
        if self.delta > self.kf * T::lit(0.25) {
            log::warn!(
                "shell half-width {} is not small against kF = {}",
                self.delta,
                self.kf
            );
        }
        if self.mode_count() > MAX_MODES {
            return Err(Error::Config(format!(
                "{} modes exceed the bitmask capacity of {MAX_MODES}",
                self.mode_count()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.id != i {
                return Err(Error::Config(format!("k-point ids must be 0..M, found {} at {i}", p.id)));
            }
            if !self.in_layer(&p.vec) {
                return Err(Error::Config(format!("k-point {i} lies outside the shell")));
            }
            if !(p.vec[2] > T::zero()) {
                return Err(Error::Config(format!("k-point {i} is not in the upper hemisphere")));
            }
            for q in &self.points[..i] {
                let same = p.vec.iter().zip(&q.vec).all(|(a, b)| a == b);
                let opposite = p.vec.iter().zip(&q.vec).all(|(a, b)| *a == -*b);
                if same || opposite {
                    return Err(Error::Config(format!(
                        "k-points {} and {i} coincide or are opposite",
                        q.id
                    )));
                }
            }
        }
        for (i, v) in self.inner_points.iter().enumerate() {
            if !(len3(v) < self.kf - self.delta) {
                return Err(Error::Config(format!("inner point {i} is not inside the core sphere")));
            }
        }
        match self.dispersion {
            Dispersion::Quadratic { mass } if !(mass > T::zero()) => {
                Err(Error::Config("mass must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of k-lines `M`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn layer_mode_count(&self) -> usize {
        4 * self.points.len()
    }

    pub fn mode_count(&self) -> usize {
        self.layer_mode_count() + 2 * self.inner_points.len()
    }

    /// Number of particles a fully paired layer holds, `δN = 2M`.
    pub fn layer_pair_capacity(&self) -> usize {
        2 * self.points.len()
    }

    pub fn mode(&self, k_id: usize, sign: Sign, spin: Spin) -> Mode {
        debug_assert!(k_id < self.len());
        ModeIndex::new(k_id, sign, spin).into()
    }

    pub fn inner_mode(&self, point: usize, spin: Spin) -> Mode {
        debug_assert!(point < self.inner_points.len());
        Mode(self.layer_mode_count() + 2 * point + (spin == Spin::Down) as usize)
    }

    pub fn kind(&self, mode: Mode) -> ModeKind {
        let l = self.layer_mode_count();
        if mode.0 < l {
            let k_id = mode.0 / 4;
            let sign = if mode.0 % 4 >= 2 { Sign::Minus } else { Sign::Plus };
            let spin = if mode.0 % 2 == 1 { Spin::Down } else { Spin::Up };
            ModeKind::Layer(ModeIndex { k_id, sign, spin })
        } else {
            let r = mode.0 - l;
            let spin = if r % 2 == 1 { Spin::Down } else { Spin::Up };
            ModeKind::Inner { point: r / 2, spin }
        }
    }

    pub fn spin_of(&self, mode: Mode) -> Spin {
        match self.kind(mode) {
            ModeKind::Layer(m) => m.spin,
            ModeKind::Inner { spin, .. } => spin,
        }
    }

    /// Unshifted layer vector `±k` of a line.
    pub fn layer_vector(&self, k_id: usize, sign: Sign) -> Vec3<T> {
        let v = self.points[k_id].vec;
        match sign {
            Sign::Plus => v,
            Sign::Minus => neg3(&v),
        }
    }

    /// Wavevector of a mode including the Fermi-sphere offset `K`.
    pub fn mode_wavevector(&self, mode: Mode) -> Vec3<T> {
        let base = match self.kind(mode) {
            ModeKind::Layer(m) => self.layer_vector(m.k_id, m.sign),
            ModeKind::Inner { point, .. } => self.inner_points[point],
        };
        add3(&base, &self.k_offset)
    }

    pub fn mode_energy(&self, mode: Mode) -> T {
        dispersion_energy(self, &self.mode_wavevector(mode))
    }

    /// Layer membership with a relative tolerance of a few ulps at `kF + Δ`.
    pub fn in_layer(&self, v: &Vec3<T>) -> bool {
        let r = len3(v);
        let slack = (self.kf + self.delta) * T::epsilon() * T::lit(8.0);
        r >= self.kf - self.delta - slack && r <= self.kf + self.delta + slack
    }

    /// Constant energy carried by the frozen core, including the kinetic
    /// shift `N_Φ (ħK)²/2m` of a displaced quadratic Fermi sphere.
    pub fn frozen_core_energy(&self) -> T {
        let shift = match self.dispersion {
            Dispersion::Quadratic { mass } => {
                let hk = len3(&self.k_offset) * self.units.hbar;
                T::from_count(self.frozen_core.count) * hk * hk / (mass + mass)
            }
            Dispersion::Flat { .. } => T::zero(),
        };
        self.frozen_core.energy + shift
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let grid: Self = serde_json::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }
}

/// Single-particle energy at wavevector `k`.
pub fn dispersion_energy<T: Real>(grid: &KGrid<T>, k: &Vec3<T>) -> T {
    match grid.dispersion {
        Dispersion::Quadratic { mass } => {
            let hk = grid.units.hbar;
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            hk * hk * k2 / (mass + mass)
        }
        Dispersion::Flat { energy } => energy,
    }
}

type FormFn<T> = dyn Fn(&Vec3<T>, &Vec3<T>) -> T + Send + Sync;

/// Pairing form factor `G(k1, k2)`. It vanishes unless both arguments lie in
/// the shell; inside the shell it is either `1` or a registered function.
#[derive(Clone, Default)]
pub enum FormFactor<T> {
    #[default]
    Layer,
    Custom(Arc<FormFn<T>>),
}

impl<T> fmt::Debug for FormFactor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormFactor::Layer => f.write_str("FormFactor::Layer"),
            FormFactor::Custom(_) => f.write_str("FormFactor::Custom(..)"),
        }
    }
}

impl<T: Real> FormFactor<T> {
    /// Registers a user form factor after checking the parity symmetry on
    /// every pair of shell vectors of `grid`.
    pub fn custom<F>(grid: &KGrid<T>, f: F) -> Result<Self>
    where
        F: Fn(&Vec3<T>, &Vec3<T>) -> T + Send + Sync + 'static,
    {
        let tol = T::lit(1e3) * T::epsilon();
        for a in &grid.points {
            for b in &grid.points {
                let g = f(&a.vec, &b.vec);
                let g1 = f(&neg3(&a.vec), &b.vec);
                let g2 = f(&a.vec, &neg3(&b.vec));
                let scale = T::one().max(g.abs());
                if !g.is_finite() || (g - g1).abs() > tol * scale || (g - g2).abs() > tol * scale {
                    return Err(Error::InvalidFormFactor(format!(
                        "G(k{},k{}) = {g}, G(-k{0},k{1}) = {g1}, G(k{0},-k{1}) = {g2}",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(FormFactor::Custom(Arc::new(f)))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FormFactor::Layer)
    }
}

pub fn form_factor<T: Real>(grid: &KGrid<T>, ff: &FormFactor<T>, k1: &Vec3<T>, k2: &Vec3<T>) -> T {
    if !grid.in_layer(k1) || !grid.in_layer(k2) {
        return T::zero();
    }
    match ff {
        FormFactor::Layer => T::one(),
        FormFactor::Custom(f) => f(k1, k2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dot3;
    use rand::Rng;

    #[test]
    fn single_fibonacci_point_in_upper_layer() {
        let g = build_shell(1.0, 0.1, 1, PlacementScheme::FibonacciSphere).unwrap();
        assert_eq!(g.len(), 1);
        let r = len3(&g.points[0].vec);
        assert!((0.9..=1.1).contains(&r));
        assert!(g.points[0].vec[2] > 0.0);
    }

    #[test]
    fn seeded_random_is_deterministic() {
        let a = build_shell(1.0, 0.1, 3, PlacementScheme::SeededRandom(7)).unwrap();
        let b = build_shell(1.0, 0.1, 3, PlacementScheme::SeededRandom(7)).unwrap();
        assert_eq!(a, b);
        let c = build_shell(1.0, 0.1, 3, PlacementScheme::SeededRandom(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fibonacci_points_are_angularly_separated() {
        let g = build_shell(1.0, 0.1, 4, PlacementScheme::FibonacciSphere).unwrap();
        let mut min_angle = f64::INFINITY;
        for i in 0..4 {
            for j in 0..i {
                let a = &g.points[i].vec;
                let b = &g.points[j].vec;
                let c: f64 = dot3(a, b) / (len3(a) * len3(b));
                min_angle = min_angle.min(c.clamp(-1.0, 1.0).acos());
            }
        }
        assert!(min_angle > 0.0, "min separation {min_angle}");
    }

    #[test]
    fn rejects_bad_shell_parameters() {
        assert!(build_shell(1.0, 0.1, 0, PlacementScheme::FibonacciSphere).is_err());
        assert!(build_shell(1.0, 0.0, 2, PlacementScheme::FibonacciSphere).is_err());
        assert!(build_shell(1.0, -0.1, 2, PlacementScheme::FibonacciSphere).is_err());
        assert!(build_shell(1.0, 1.5, 2, PlacementScheme::FibonacciSphere).is_err());
    }

    #[test]
    fn rejects_opposite_points_and_lower_hemisphere() {
        assert!(KGrid::from_vectors(1.0, 0.1, vec![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]).is_err());
        assert!(KGrid::from_vectors(1.0, 0.1, vec![[0.0, 0.0, -1.0]]).is_err());
        assert!(KGrid::from_vectors(1.0, 0.1, vec![[0.0, 0.0, 1.5]]).is_err());
    }

    #[test]
    fn mode_linearization_round_trips() {
        let g = build_shell(1.0, 0.1, 3, PlacementScheme::FibonacciSphere)
            .unwrap()
            .with_inner_points(vec![[0.1, 0.0, 0.0]])
            .unwrap();
        assert_eq!(g.mode_count(), 14);
        for m in 0..g.mode_count() {
            let back = match g.kind(Mode(m)) {
                ModeKind::Layer(idx) => Mode::from(idx),
                ModeKind::Inner { point, spin } => g.inner_mode(point, spin),
            };
            assert_eq!(back, Mode(m));
        }
        assert_eq!(g.mode(1, Sign::Minus, Spin::Down), Mode(7));
    }

    #[test]
    fn quadratic_and_flat_dispersion() {
        let g = KGrid::from_vectors(1.0, 0.1, vec![[0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(dispersion_energy(&g, &[0.0, 0.0, 1.0]), 0.5);
        assert_eq!(dispersion_energy(&g, &[0.0, 0.0, -1.0]), 0.5);
        let flat = g.with_dispersion(Dispersion::Flat { energy: 1.0 });
        assert_eq!(dispersion_energy(&flat, &[0.0, 0.95, 0.0]), 1.0);
    }

    #[test]
    fn dispersion_is_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = build_shell(1.0, 0.1, 2, PlacementScheme::FibonacciSphere)
            .unwrap()
            .with_dispersion(Dispersion::Quadratic { mass: 0.7 });
        for _ in 0..50 {
            let k: Vec3<f64> = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(dispersion_energy(&g, &k), dispersion_energy(&g, &neg3(&k)));
        }
    }

    #[test]
    fn layer_form_factor() {
        let g = build_shell(1.0, 0.1, 2, PlacementScheme::FibonacciSphere).unwrap();
        let ff = FormFactor::Layer;
        let (a, b) = (g.points[0].vec, g.points[1].vec);
        assert_eq!(form_factor(&g, &ff, &a, &b), 1.0);
        assert_eq!(form_factor(&g, &ff, &[0.0, 0.0, 0.5], &b), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let k1: Vec3<f64> = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
            let k2: Vec3<f64> = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
            assert_eq!(form_factor(&g, &ff, &k1, &k2), form_factor(&g, &ff, &neg3(&k1), &k2));
        }
    }

    #[test]
    fn custom_form_factor_symmetry_is_checked() {
        let g = build_shell(1.0, 0.1, 3, PlacementScheme::FibonacciSphere).unwrap();
        let ok = FormFactor::custom(&g, |a: &Vec3<f64>, b: &Vec3<f64>| 1.0 + dot3(a, b).powi(2));
        assert!(ok.is_ok());
        let bad = FormFactor::custom(&g, |a: &Vec3<f64>, b: &Vec3<f64>| 1.0 + dot3(a, b));
        assert!(matches!(bad, Err(Error::InvalidFormFactor(_))));
    }

    #[test]
    fn grid_json_round_trip_revalidates() {
        let g = build_shell(1.0, 0.1, 2, PlacementScheme::SeededRandom(1))
            .unwrap()
            .with_frozen_core(10, 2.5)
            .with_offset([0.0, 0.1, 0.0]);
        let text = g.to_json().unwrap();
        let back = KGrid::<f64>::from_json(&text).unwrap();
        assert_eq!(g, back);
        let broken = text.replace("\"delta\": 0.1", "\"delta\": -0.1");
        assert!(KGrid::<f64>::from_json(&broken).is_err());
    }

    #[test]
    fn frozen_core_energy_shifts_with_offset() {
        let g: KGrid<f64> = KGrid::from_vectors(1.0, 0.1, vec![[0.0, 0.0, 1.0]])
            .unwrap()
            .with_frozen_core(4, 1.0)
            .with_offset([0.0, 0.0, 0.5]);
        assert!((g.frozen_core_energy() - (1.0 + 4.0 * 0.125)).abs() < 1e-15);
    }
}
