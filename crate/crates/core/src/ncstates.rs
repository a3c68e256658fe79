//! Triplet pair operators and the interaction-free product states built from
//! them.
//!
//! Each k-line of the upper hemisphere carries at most one pair operator
//! `γ†_{q,k}` with spin projection `q ∈ {-1, 0, +1}`. Products of these over
//! the lines, applied to the filled core, are annihilated by the pairing
//! interaction for any coupling and any parity-symmetric form factor.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::kspace::{KGrid, Sign, Spin};
use crate::model::{flip, layer_vectors, BcsModel};
use crate::opalg::{Factor, OperatorExpr};
use crate::scalar::{cplx, Real};

/// Default cap on the number of labels an enumeration may produce (`3^12`).
pub const DEFAULT_LABEL_CAP: u128 = 531_441;

/// Pair choice on one k-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineChoice {
    pub q: i8,
    /// `1` keeps the pair operator, `0` leaves the line empty.
    pub l: u8,
}

impl LineChoice {
    pub fn pair(q: i8) -> Self {
        Self { q, l: 1 }
    }

    pub fn skip() -> Self {
        Self { q: 0, l: 0 }
    }

    pub fn is_present(self) -> bool {
        self.l == 1
    }
}

/// One choice per k-line, indexed by line id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NcLabel(pub Vec<LineChoice>);

impl NcLabel {
    pub fn uniform(m: usize, q: i8) -> Self {
        Self(vec![LineChoice::pair(q); m])
    }

    pub fn from_qs(qs: &[i8]) -> Self {
        Self(qs.iter().map(|&q| LineChoice::pair(q)).collect())
    }

    pub fn lines(&self) -> &[LineChoice] {
        &self.0
    }

    pub fn validate<T: Real>(&self, grid: &KGrid<T>) -> Result<()> {
        if self.0.len() != grid.len() {
            return Err(Error::Config(format!(
                "label covers {} lines but the grid has {}",
                self.0.len(),
                grid.len()
            )));
        }
        for (k, c) in self.0.iter().enumerate() {
            if !(-1..=1).contains(&c.q) || c.l > 1 {
                return Err(Error::Config(format!("line {k}: invalid choice q={} l={}", c.q, c.l)));
            }
        }
        Ok(())
    }

    pub fn pair_count(&self) -> usize {
        self.0.iter().filter(|c| c.is_present()).count()
    }

    /// `Σ q_k` over occupied lines.
    pub fn total_q(&self) -> i32 {
        self.0.iter().filter(|c| c.is_present()).map(|c| c.q as i32).sum()
    }
}

/// `b†_k(ξ) = (a†_{↑k} a†_{↓-k} + ξ a†_{↑-k} a†_{↓k}) / √2`
pub fn b_dagger<T: Real>(grid: &KGrid<T>, k_id: usize, xi: Complex<T>) -> OperatorExpr<T> {
    let h = T::FRAC_1_SQRT_2();
    let first = OperatorExpr::monomial(
        cplx(h),
        vec![
            Factor::create(grid.mode(k_id, Sign::Plus, Spin::Up)),
            Factor::create(grid.mode(k_id, Sign::Minus, Spin::Down)),
        ],
    );
    let second = OperatorExpr::monomial(
        xi * h,
        vec![
            Factor::create(grid.mode(k_id, Sign::Minus, Spin::Up)),
            Factor::create(grid.mode(k_id, Sign::Plus, Spin::Down)),
        ],
    );
    first + second
}

/// Triplet pair creator on the line `k_id`, taken at `+k` or at `-k`.
///
/// * `q = 0`: `(a†_{↑k} a†_{↓-k} + a†_{↓k} a†_{↑-k}) / √2`
/// * `q = +1`: `a†_{↑k} a†_{↑-k}`
/// * `q = -1`: `a†_{↓k} a†_{↓-k}`
pub fn gamma_dagger_at<T: Real>(grid: &KGrid<T>, q: i8, k_id: usize, at: Sign) -> OperatorExpr<T> {
    let p = at;
    let m = flip(at);
    let pair = |a, b, c: T| OperatorExpr::monomial(cplx(c), vec![Factor::create(a), Factor::create(b)]);
    match q {
        0 => {
            let h = T::FRAC_1_SQRT_2();
            pair(grid.mode(k_id, p, Spin::Up), grid.mode(k_id, m, Spin::Down), h)
                + pair(grid.mode(k_id, p, Spin::Down), grid.mode(k_id, m, Spin::Up), h)
        }
        1 => pair(grid.mode(k_id, p, Spin::Up), grid.mode(k_id, m, Spin::Up), T::one()),
        -1 => pair(grid.mode(k_id, p, Spin::Down), grid.mode(k_id, m, Spin::Down), T::one()),
        _ => panic!("pair spin projection must be -1, 0 or +1, got {q}"),
    }
}

pub fn gamma_dagger<T: Real>(grid: &KGrid<T>, q: i8, k_id: usize) -> OperatorExpr<T> {
    gamma_dagger_at(grid, q, k_id, Sign::Plus)
}

/// How the `q = 0` pair is assembled. The default is the triplet `b†(-1)`;
/// other `ξ` values exist for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecipe<T> {
    pub zero_pair_xi: Complex<T>,
}

impl<T: Real> Default for PairRecipe<T> {
    fn default() -> Self {
        Self {
            zero_pair_xi: cplx(-T::one()),
        }
    }
}

impl<T: Real> PairRecipe<T> {
    fn pair(&self, grid: &KGrid<T>, q: i8, k_id: usize) -> OperatorExpr<T> {
        if q == 0 && self.zero_pair_xi != cplx(-T::one()) {
            b_dagger(grid, k_id, self.zero_pair_xi)
        } else {
            gamma_dagger(grid, q, k_id)
        }
    }
}

/// `Φ = Π a†_{↑k} a†_{↓k}` over the explicit inner points (identity if none).
pub fn phi_operator<T: Real>(grid: &KGrid<T>) -> OperatorExpr<T> {
    (0..grid.inner_points.len()).fold(OperatorExpr::identity(), |acc, i| {
        acc.multiply(&OperatorExpr::monomial(
            cplx(T::one()),
            vec![
                Factor::create(grid.inner_mode(i, Spin::Up)),
                Factor::create(grid.inner_mode(i, Spin::Down)),
            ],
        ))
    })
}

/// Filled core. Without explicit inner points this is the vacuum and the
/// core lives only in the grid's frozen-core constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreState<T> {
    pub vector: FockVector<T>,
    pub particles: usize,
    pub energy: T,
}

pub fn build_phi_core<T: Real>(grid: &KGrid<T>) -> CoreState<T> {
    let vector = phi_operator(grid).apply(&FockVector::vacuum());
    let explicit: T = (0..grid.inner_points.len())
        .map(|i| grid.mode_energy(grid.inner_mode(i, Spin::Up)) + grid.mode_energy(grid.inner_mode(i, Spin::Down)))
        .fold(T::zero(), |a, b| a + b);
    CoreState {
        vector,
        particles: 2 * grid.inner_points.len() + grid.frozen_core.count,
        energy: explicit + grid.frozen_core_energy(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcState<T> {
    pub label: NcLabel,
    pub vector: FockVector<T>,
    /// Kinetic energy of the construction, including the core.
    pub energy: T,
    /// Total particle number, including the core.
    pub particles: usize,
}

/// Energy of the pair on line `k`: `ε(k + K) + ε(-k + K)`.
pub fn line_energy<T: Real>(grid: &KGrid<T>, k_id: usize) -> T {
    grid.mode_energy(grid.mode(k_id, Sign::Plus, Spin::Up)) + grid.mode_energy(grid.mode(k_id, Sign::Minus, Spin::Up))
}

pub fn build_nc_state<T: Real>(model: &BcsModel<T>, label: &NcLabel) -> Result<NcState<T>> {
    build_nc_state_with(model, label, &PairRecipe::default())
}

/// `Π_k (γ†_{q_k,k})^{l_k} Φ|0⟩`, the product written with ascending line id
/// from the left.
pub fn build_nc_state_with<T: Real>(model: &BcsModel<T>, label: &NcLabel, recipe: &PairRecipe<T>) -> Result<NcState<T>> {
    let grid = &model.grid;
    label.validate(grid)?;
    let core = build_phi_core(grid);
    let mut v = core.vector;
    let mut energy = core.energy;
    for (k, c) in label.lines().iter().enumerate().rev() {
        if c.is_present() {
            v = recipe.pair(grid, c.q, k).apply(&v);
            energy = energy + line_energy(grid, k);
        }
    }
    let vector = v.normalized()?;
    Ok(NcState {
        label: label.clone(),
        vector,
        energy,
        particles: core.particles + 2 * label.pair_count(),
    })
}

fn label_count(m: usize, include_l_variants: bool) -> u128 {
    let base: u128 = if include_l_variants { 4 } else { 3 };
    base.checked_pow(m as u32).unwrap_or(u128::MAX)
}

const CHOICES: [LineChoice; 4] = [
    LineChoice { q: -1, l: 1 },
    LineChoice { q: 0, l: 1 },
    LineChoice { q: 1, l: 1 },
    LineChoice { q: 0, l: 0 },
];

fn label_from_index(m: usize, base: u128, mut idx: u128) -> NcLabel {
    let mut lines = vec![CHOICES[0]; m];
    for slot in lines.iter_mut().rev() {
        *slot = CHOICES[(idx % base) as usize];
        idx /= base;
    }
    NcLabel(lines)
}

/// Every label of the grid in lexicographic order (line 0 most significant,
/// `q = -1, 0, +1`, then the empty line when `include_l_variants`).
pub fn enumerate_labels<T: Real>(
    grid: &KGrid<T>,
    include_l_variants: bool,
    cap: u128,
) -> Result<impl Iterator<Item = NcLabel>> {
    let m = grid.len();
    let total = label_count(m, include_l_variants);
    if total > cap {
        return Err(Error::Cap {
            what: "label",
            requested: total,
            cap,
        });
    }
    let base = if include_l_variants { 4 } else { 3 };
    Ok((0..total).map(move |i| label_from_index(m, base, i)))
}

/// `count` labels drawn uniformly with a seeded generator.
pub fn sample_labels<T: Real>(grid: &KGrid<T>, count: usize, seed: u64, include_l_variants: bool) -> Vec<NcLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if include_l_variants { 4 } else { 3 };
    (0..count)
        .map(|_| NcLabel((0..grid.len()).map(|_| CHOICES[rng.gen_range(0..n)]).collect()))
        .collect()
}

/// `2 μ_B Σ q_k` over occupied lines.
pub fn magnetic_moment<T: Real>(label: &NcLabel, mu_b: T) -> T {
    T::lit(2.0) * mu_b * T::lit(label.total_q() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermiReference<T> {
    pub vector: FockVector<T>,
    pub energy: T,
    pub particles: usize,
    /// Doubly occupied orbitals, `(line, ±)`.
    pub orbitals: Vec<(usize, Sign)>,
}

/// Discrete Fermi-sea stand-in: the `2M` shell fermions doubly occupy the
/// `M` lowest orbitals of the full shell. Ties are broken by line id, then
/// `+k` before `-k`.
pub fn build_fermi_reference<T: Real>(model: &BcsModel<T>) -> FermiReference<T> {
    let grid = &model.grid;
    let mut orbs: Vec<(T, usize, Sign)> = layer_vectors(grid)
        .map(|(k, s)| (grid.mode_energy(grid.mode(k, s, Spin::Up)), k, s))
        .collect();
    orbs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    orbs.truncate(grid.len());
    let core = build_phi_core(grid);
    let mut v = core.vector;
    let mut energy = core.energy;
    for &(e, k, s) in orbs.iter().rev() {
        let op = OperatorExpr::monomial(
            cplx(T::one()),
            vec![Factor::create(grid.mode(k, s, Spin::Up)), Factor::create(grid.mode(k, s, Spin::Down))],
        );
        v = op.apply(&v);
        energy = energy + e + grid.mode_energy(grid.mode(k, s, Spin::Down));
    }
    FermiReference {
        vector: v,
        energy,
        particles: core.particles + 2 * grid.len(),
        orbitals: orbs.into_iter().map(|(_, k, s)| (k, s)).collect(),
    }
}

/// JSON export of a state together with its label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct NcStateRecord<T> {
    pub label: NcLabel,
    pub energy: T,
    pub particles: usize,
    pub vector: FockVector<T>,
}

impl<T: Real> From<&NcState<T>> for NcStateRecord<T> {
    fn from(s: &NcState<T>) -> Self {
        Self {
            label: s.label.clone(),
            energy: s.energy,
            particles: s.particles,
            vector: s.vector.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{observable_expectation, Basis, FockState};
    use crate::kspace::{build_shell, Dispersion, PlacementScheme};
    use crate::model::{build_b, build_h0, build_number, build_spin_ops, build_w};
    use crate::opalg::commutator_matrix;

    fn model(m: usize, disp: Dispersion<f64>, g: f64) -> BcsModel<f64> {
        let grid = build_shell(1.0, 0.1, m, PlacementScheme::FibonacciSphere)
            .unwrap()
            .with_dispersion(disp);
        BcsModel::new(grid, g)
    }

    fn quad() -> Dispersion<f64> {
        Dispersion::Quadratic { mass: 1.0 }
    }

    #[test]
    fn b_dagger_minus_one_is_gamma_zero() {
        let m = model(2, quad(), 1.0);
        let basis = Basis::full(8);
        for k in 0..2 {
            let d = b_dagger(&m.grid, k, Complex::new(-1.0, 0.0)).difference(&gamma_dagger(&m.grid, 0, k));
            assert!(d.compile(&basis).unwrap().max_abs() <= 1e-15);
        }
    }

    #[test]
    fn b_dagger_plus_one_makes_normalized_pair() {
        let m = model(1, quad(), 1.0);
        let v = b_dagger(&m.grid, 0, Complex::new(1.0, 0.0)).apply(&FockVector::vacuum());
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert_eq!(v.definite_particle_count(), Some(2));
    }

    #[test]
    fn pair_annihilator_kills_triplet_keeps_singlet() {
        let m = model(2, quad(), 1.0);
        let b = build_b(&m).unwrap();
        for k in 0..2 {
            let t = b.apply(&gamma_dagger(&m.grid, 0, k).apply(&FockVector::vacuum()));
            assert_eq!(t.norm(), 0.0);
            let s = b.apply(&b_dagger(&m.grid, k, Complex::new(1.0, 0.0)).apply(&FockVector::vacuum()));
            assert_eq!(s.len(), 1);
            assert!((s.amplitude(FockState::VACUUM) - Complex::new(std::f64::consts::SQRT_2, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn generic_b_dagger_is_not_interaction_free() {
        let m = model(2, quad(), 1.0);
        let w = build_w(&m);
        let b0 = b_dagger(&m.grid, 0, Complex::new(0.0, 0.0));
        let r = w.commutator(&b0).apply(&FockVector::vacuum());
        assert!(r.norm() > 0.1);
    }

    #[test]
    fn gamma_parity_relation() {
        let m = model(2, quad(), 1.0);
        let basis = Basis::full(8);
        for q in [-1, 0, 1] {
            let d = gamma_dagger_at(&m.grid, q, 1, Sign::Minus) + gamma_dagger_at(&m.grid, q, 1, Sign::Plus);
            assert!(d.compile(&basis).unwrap().max_abs() <= 1e-15, "q={q}");
        }
    }

    #[test]
    fn gamma_plus_one_on_vacuum() {
        let m = model(1, quad(), 1.0);
        let g = &m.grid;
        let v = gamma_dagger(g, 1, 0).apply(&FockVector::vacuum());
        let expected = FockState::from_modes([g.mode(0, Sign::Plus, Spin::Up), g.mode(0, Sign::Minus, Spin::Up)]);
        assert_eq!(v.basis(), vec![expected]);
        assert!((v.amplitude(expected).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triplet_quantum_numbers() {
        let m = model(2, quad(), 1.0);
        let s = build_spin_ops(&m.grid);
        for q in [-1i8, 0, 1] {
            let v = gamma_dagger(&m.grid, q, 1).apply(&FockVector::vacuum());
            let s2 = s.s_squared.apply(&v);
            let sz = s.s_z.apply(&v);
            assert!(s2.axpy(Complex::new(-2.0, 0.0), &v).norm() < 1e-12);
            assert!(sz.axpy(Complex::new(-(q as f64), 0.0), &v).norm() < 1e-12);
        }
    }

    #[test]
    fn pair_creators_commute() {
        let m = model(2, quad(), 1.0);
        let basis = Basis::full(8);
        for q in [-1, 0, 1] {
            for q2 in [-1, 0, 1] {
                for (k, k2) in [(0, 0), (0, 1), (1, 0)] {
                    let c = commutator_matrix(&gamma_dagger(&m.grid, q, k), &gamma_dagger(&m.grid, q2, k2), &basis).unwrap();
                    assert_eq!(c.max_abs(), 0.0);
                }
            }
        }
    }

    #[test]
    fn single_zero_pair_state() {
        let m = model(1, quad(), 0.4);
        let s = build_nc_state(&m, &NcLabel::from_qs(&[0])).unwrap();
        let g = &m.grid;
        let a = FockState::from_modes([g.mode(0, Sign::Plus, Spin::Up), g.mode(0, Sign::Minus, Spin::Down)]);
        let b = FockState::from_modes([g.mode(0, Sign::Plus, Spin::Down), g.mode(0, Sign::Minus, Spin::Up)]);
        assert_eq!(s.vector.len(), 2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |↑k,↓-k⟩ and |↓k,↑-k⟩ in creation order; the bitmask order of the
        // second pair is (↑-k after ↓k), so no extra sign appears
        assert!((s.vector.amplitude(a) - Complex::new(h, 0.0)).norm() < 1e-15);
        assert!((s.vector.amplitude(b) - Complex::new(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn nullification_small_grids() {
        for mm in 1..=3 {
            for disp in [quad(), Dispersion::Flat { energy: 1.0 }] {
                let m = model(mm, disp, -0.7);
                let w = build_w(&m);
                for label in enumerate_labels(&m.grid, true, DEFAULT_LABEL_CAP).unwrap() {
                    let s = build_nc_state(&m, &label).unwrap();
                    assert!(w.apply(&s.vector).norm() <= 1e-12, "{label:?}");
                }
            }
        }
    }

    #[test]
    fn product_order_does_not_matter() {
        let m = model(3, quad(), 1.0);
        let label = NcLabel::from_qs(&[1, 0, -1]);
        let a = build_nc_state(&m, &label).unwrap().vector;
        // reverse order: γ_2 γ_1 γ_0 |0⟩
        let mut v = FockVector::vacuum();
        for (k, c) in label.lines().iter().enumerate() {
            v = gamma_dagger(&m.grid, c.q, k).apply(&v);
        }
        assert!(a.axpy(Complex::new(-1.0, 0.0), &v).norm() < 1e-15);
    }

    #[test]
    fn degenerate_energy_for_different_labels() {
        let m = model(2, quad(), 1.0);
        let h0 = build_h0(&m);
        let e = |qs: &[i8]| {
            let s = build_nc_state(&m, &NcLabel::from_qs(qs)).unwrap();
            observable_expectation(&s.vector, &h0).unwrap().re
        };
        assert!((e(&[0, 0]) - e(&[1, -1])).abs() < 1e-14);
        let expected = line_energy(&m.grid, 0) + line_energy(&m.grid, 1);
        assert!((e(&[0, 0]) - expected).abs() < 1e-14);
    }

    #[test]
    fn label_enumeration() {
        let g = model(2, quad(), 1.0).grid;
        let labels: Vec<NcLabel> = enumerate_labels(&g, false, DEFAULT_LABEL_CAP).unwrap().collect();
        assert_eq!(labels.len(), 9);
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 9);
        assert_eq!(labels[0], NcLabel::uniform(2, -1));
        let g1 = model(1, quad(), 1.0).grid;
        assert_eq!(enumerate_labels(&g1, true, DEFAULT_LABEL_CAP).unwrap().count(), 4);
        assert!(matches!(enumerate_labels(&g, false, 8), Err(Error::Cap { requested: 9, .. })));
    }

    #[test]
    fn sampled_labels_are_seeded() {
        let g = model(3, quad(), 1.0).grid;
        assert_eq!(sample_labels(&g, 5, 42, true), sample_labels(&g, 5, 42, true));
        assert_ne!(sample_labels(&g, 5, 42, true), sample_labels(&g, 5, 43, true));
    }

    #[test]
    fn moments() {
        assert_eq!(magnetic_moment(&NcLabel::uniform(2, -1), 1.0), -4.0);
        assert_eq!(magnetic_moment(&NcLabel::uniform(2, 0), 1.0), 0.0);
        let g = model(2, quad(), 1.0).grid;
        let mut values: Vec<i64> = enumerate_labels(&g, false, DEFAULT_LABEL_CAP)
            .unwrap()
            .map(|l| magnetic_moment(&l, 1.0) as i64)
            .collect();
        values.sort();
        values.dedup();
        assert_eq!(values, vec![-4, -2, 0, 2, 4]);
        let skip = NcLabel(vec![LineChoice::pair(1), LineChoice { q: 1, l: 0 }]);
        assert_eq!(magnetic_moment(&skip, 1.0), 2.0);
    }

    #[test]
    fn skipped_lines_change_particle_number() {
        let m = model(3, quad(), 1.0);
        let label = NcLabel(vec![LineChoice::pair(0), LineChoice::skip(), LineChoice::pair(-1)]);
        let s = build_nc_state(&m, &label).unwrap();
        assert_eq!(s.particles, 4);
        assert_eq!(s.vector.definite_particle_count(), Some(4));
    }

    #[test]
    fn explicit_core() {
        let grid: KGrid<f64> = build_shell(1.0, 0.1, 1, PlacementScheme::FibonacciSphere)
            .unwrap()
            .with_inner_points(vec![[0.2, 0.1, 0.3]])
            .unwrap();
        let m: BcsModel<f64> = BcsModel::new(grid, 0.9);
        let core = build_phi_core(&m.grid);
        assert_eq!(core.particles, 2);
        let n = observable_expectation(&core.vector, &build_number(&m.grid)).unwrap();
        assert!((n.re - 2.0).abs() < 1e-15);
        let w = build_w(&m);
        assert_eq!(w.apply(&core.vector).norm(), 0.0);
        let basis = Basis::full(m.grid.mode_count());
        assert_eq!(commutator_matrix(&w, &phi_operator(&m.grid), &basis).unwrap().max_abs(), 0.0);
        for q in [-1, 0, 1] {
            let inner = w.commutator(&gamma_dagger(&m.grid, q, 0));
            assert!(commutator_matrix(&inner, &phi_operator(&m.grid), &basis).unwrap().max_abs() <= 1e-12);
        }
        let s = build_nc_state(&m, &NcLabel::from_qs(&[1])).unwrap();
        assert_eq!(s.particles, 4);
        assert!(w.apply(&s.vector).norm() <= 1e-12);
    }

    #[test]
    fn frozen_core_bookkeeping() {
        let grid = build_shell(1.0, 0.1, 2, PlacementScheme::FibonacciSphere)
            .unwrap()
            .with_frozen_core(10, 3.0);
        let m = BcsModel::new(grid, 1.0);
        let core = build_phi_core(&m.grid);
        assert_eq!(core.vector, FockVector::vacuum());
        assert_eq!((core.particles, core.energy), (10, 3.0));
    }

    #[test]
    fn fermi_reference_lies_below_nc_energy() {
        for mm in 1..=3 {
            let m = model(mm, quad(), 1.0);
            let f = build_fermi_reference(&m);
            assert_eq!(f.particles, 2 * mm);
            let n = observable_expectation(&f.vector, &build_number(&m.grid)).unwrap().re;
            assert!((n - 2.0 * mm as f64).abs() < 1e-15);
            let e_f = observable_expectation(&f.vector, &build_h0(&m)).unwrap().re;
            assert!((e_f - f.energy).abs() < 1e-14);
            for label in enumerate_labels(&m.grid, false, DEFAULT_LABEL_CAP).unwrap() {
                assert!(f.energy <= build_nc_state(&m, &label).unwrap().energy + 1e-15);
            }
        }
        let flat = model(3, Dispersion::Flat { energy: 1.0 }, 1.0);
        assert_eq!(build_fermi_reference(&flat).energy, 6.0);
        // tie-break: lowest line ids, +k first
        assert_eq!(build_fermi_reference(&flat).orbitals, vec![(0, Sign::Plus), (0, Sign::Minus), (1, Sign::Plus)]);
    }

    #[test]
    fn record_json() {
        let m = model(1, quad(), 1.0);
        let s = build_nc_state(&m, &NcLabel::from_qs(&[1])).unwrap();
        let text = serde_json::to_string(&NcStateRecord::from(&s)).unwrap();
        assert!(text.starts_with(r#"{"label":[{"q":1,"l":1}]"#));
        let back: NcStateRecord<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.vector, s.vector);
    }
}
