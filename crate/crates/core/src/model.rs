//! Hamiltonian builders: kinetic term, pairing interaction and its
//! factorized form, spin and momentum operators, mean-field spin couplings
//! and the Zeeman term.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::{
    build_shell, form_factor, Dispersion, FormFactor, FrozenCore, KGrid, Mode, PlacementScheme, Sign,
    Spin, Units,
};
use crate::opalg::{Factor, OperatorExpr};
use crate::scalar::{cplx, dot3, len3, Real, Vec3};

/// Pairing model on a grid: coupling `g`, volume `V`, form factor `G`.
#[derive(Debug, Clone)]
pub struct BcsModel<T> {
    pub grid: KGrid<T>,
    pub g: T,
    pub volume: T,
    pub form_factor: FormFactor<T>,
}

impl<T: Real> BcsModel<T> {
    pub fn new(grid: KGrid<T>, g: T) -> Self {
        Self {
            grid,
            g,
            volume: T::one(),
            form_factor: FormFactor::Layer,
        }
    }

    pub fn with_volume(mut self, volume: T) -> Self {
        self.volume = volume;
        self
    }

    pub fn with_form_factor(mut self, ff: FormFactor<T>) -> Self {
        self.form_factor = ff;
        self
    }

    pub fn with_coupling(&self, g: T) -> Self {
        let mut m = self.clone();
        m.g = g;
        m
    }

    /// `G` between two layer vectors `(line, ±)`.
    pub fn pair_form_factor(&self, a: (usize, Sign), b: (usize, Sign)) -> T {
        let ka = self.grid.layer_vector(a.0, a.1);
        let kb = self.grid.layer_vector(b.0, b.1);
        form_factor(&self.grid, &self.form_factor, &ka, &kb)
    }
}

/// All layer vectors of the full shell, `(line, +)` then `(line, -)` per line.
pub(crate) fn layer_vectors<T: Real>(grid: &KGrid<T>) -> impl Iterator<Item = (usize, Sign)> {
    (0..grid.len()).flat_map(|k| [(k, Sign::Plus), (k, Sign::Minus)])
}

pub(crate) fn flip(s: Sign) -> Sign {
    match s {
        Sign::Plus => Sign::Minus,
        Sign::Minus => Sign::Plus,
    }
}

/// Spatial orbitals: every `(line, ±)` of the layer followed by the explicit
/// inner points. Yields the `(up, down)` mode pair of each orbital.
fn orbitals<T: Real>(grid: &KGrid<T>) -> Vec<(Mode, Mode)> {
    let mut out: Vec<(Mode, Mode)> = layer_vectors(grid)
        .map(|(k, s)| (grid.mode(k, s, Spin::Up), grid.mode(k, s, Spin::Down)))
        .collect();
    out.extend((0..grid.inner_points.len()).map(|i| (grid.inner_mode(i, Spin::Up), grid.inner_mode(i, Spin::Down))));
    out
}

fn all_modes<T: Real>(grid: &KGrid<T>) -> impl Iterator<Item = Mode> {
    (0..grid.mode_count()).map(Mode)
}

/// `Σ ε(k + K) a†a` over every explicit mode, plus the frozen-core energy.
pub fn build_h0<T: Real>(model: &BcsModel<T>) -> OperatorExpr<T> {
    let grid = &model.grid;
    let mut h = all_modes(grid).fold(OperatorExpr::zero(), |acc, m| {
        acc + OperatorExpr::number(m).scaled_re(grid.mode_energy(m))
    });
    let core = grid.frozen_core_energy();
    if core != T::zero() {
        h = h + OperatorExpr::scalar(cplx(core));
    }
    h
}

/// `(g/V) Σ_{k1,k2} G(k1,k2) a†_{↑k1} a†_{↓-k1} a_{↓-k2} a_{↑k2}` over the
/// full shell.
pub fn build_w<T: Real>(model: &BcsModel<T>) -> OperatorExpr<T> {
    let grid = &model.grid;
    let pref = model.g / model.volume;
    let vecs: Vec<(usize, Sign)> = layer_vectors(grid).collect();
    let mut terms = Vec::with_capacity(vecs.len() * vecs.len());
    for &(k1, s1) in &vecs {
        for &(k2, s2) in &vecs {
            let gk = model.pair_form_factor((k1, s1), (k2, s2));
            terms.push(crate::opalg::Term {
                coeff: cplx(pref * gk),
                factors: vec![
                    Factor::create(grid.mode(k1, s1, Spin::Up)),
                    Factor::create(grid.mode(k1, flip(s1), Spin::Down)),
                    Factor::annihilate(grid.mode(k2, flip(s2), Spin::Down)),
                    Factor::annihilate(grid.mode(k2, s2, Spin::Up)),
                ],
            });
        }
    }
    OperatorExpr::from_terms(terms)
}

/// `B = V^{-1/2} Σ_k a_{↓-k} a_{↑k}`, so that `W = g B†B` for constant `G`.
pub fn build_b<T: Real>(model: &BcsModel<T>) -> Result<OperatorExpr<T>> {
    if !model.form_factor.is_constant() {
        return Err(Error::InvalidFactorization);
    }
    let grid = &model.grid;
    let pref = T::one() / model.volume.sqrt();
    Ok(layer_vectors(grid).fold(OperatorExpr::zero(), |acc, (k, s)| {
        acc + OperatorExpr::monomial(
            cplx(pref),
            vec![
                Factor::annihilate(grid.mode(k, flip(s), Spin::Down)),
                Factor::annihilate(grid.mode(k, s, Spin::Up)),
            ],
        )
    }))
}

pub fn build_h_bcs<T: Real>(model: &BcsModel<T>) -> OperatorExpr<T> {
    build_h0(model) + build_w(model)
}

/// Total particle number including the frozen core.
pub fn build_number<T: Real>(grid: &KGrid<T>) -> OperatorExpr<T> {
    let n = all_modes(grid).fold(OperatorExpr::zero(), |acc, m| acc + OperatorExpr::number(m));
    if grid.frozen_core.count > 0 {
        n + OperatorExpr::scalar(cplx(T::from_count(grid.frozen_core.count)))
    } else {
        n
    }
}

/// Particle number in the shell only.
pub fn build_layer_number<T: Real>(grid: &KGrid<T>) -> OperatorExpr<T> {
    (0..grid.layer_mode_count()).fold(OperatorExpr::zero(), |acc, m| acc + OperatorExpr::number(Mode(m)))
}

#[derive(Debug, Clone)]
pub struct SpinOps<T> {
    pub s_z: OperatorExpr<T>,
    pub s_plus: OperatorExpr<T>,
    pub s_minus: OperatorExpr<T>,
    pub s_squared: OperatorExpr<T>,
}

impl<T: Real> SpinOps<T> {
    pub fn s_x(&self) -> OperatorExpr<T> {
        (self.s_plus.clone() + self.s_minus.clone()).scaled_re(T::lit(0.5))
    }

    pub fn s_y(&self) -> OperatorExpr<T> {
        (self.s_plus.clone() - self.s_minus.clone()).scaled(Complex::new(T::zero(), -T::lit(0.5)))
    }
}

/// Total spin of the explicit fermions, in units carrying `ħ`.
pub fn build_spin_ops<T: Real>(grid: &KGrid<T>) -> SpinOps<T> {
    let hbar = grid.units.hbar;
    let half = hbar * T::lit(0.5);
    let mut s_z = OperatorExpr::zero();
    let mut s_plus = OperatorExpr::zero();
    for (up, dn) in orbitals(grid) {
        s_z = s_z + OperatorExpr::number(up).scaled_re(half) - OperatorExpr::number(dn).scaled_re(half);
        s_plus = s_plus + OperatorExpr::monomial(cplx(hbar), vec![Factor::create(up), Factor::annihilate(dn)]);
    }
    let s_minus = s_plus.adjoint();
    let s_squared = s_minus.multiply(&s_plus) + s_z.multiply(&s_z) + s_z.scaled_re(hbar);
    SpinOps {
        s_z,
        s_plus,
        s_minus,
        s_squared,
    }
}

/// `P = Σ ħ(k + K) a†a`, plus `N_Φ ħK` from the frozen core.
pub fn build_total_momentum<T: Real>(grid: &KGrid<T>) -> [OperatorExpr<T>; 3] {
    let hbar = grid.units.hbar;
    let core = T::from_count(grid.frozen_core.count);
    std::array::from_fn(|axis| {
        let mut p = all_modes(grid).fold(OperatorExpr::zero(), |acc, m| {
            acc + OperatorExpr::number(m).scaled_re(hbar * grid.mode_wavevector(m)[axis])
        });
        let shift = core * hbar * grid.k_offset[axis];
        if shift != T::zero() {
            p = p + OperatorExpr::scalar(cplx(shift));
        }
        p
    })
}

/// Mean-field spin couplings. `g_ss` and `a_fs` carry energy·volume; `j_f`
/// is the ion spin and `n_f` the ion density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinCouplings<T> {
    #[serde(default)]
    pub g_ss: T,
    #[serde(default)]
    pub a_fs: T,
    #[serde(default)]
    pub j_f: T,
    #[serde(default)]
    pub n_f: T,
    #[serde(default)]
    pub b_ext: Vec3<T>,
    #[serde(default)]
    pub lambda: T,
}

impl<T: Real> Default for SpinCouplings<T> {
    fn default() -> Self {
        Self {
            g_ss: T::zero(),
            a_fs: T::zero(),
            j_f: T::zero(),
            n_f: T::zero(),
            b_ext: [T::zero(); 3],
            lambda: T::zero(),
        }
    }
}

impl<T: Real> SpinCouplings<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.g_ss, self.a_fs, self.j_f, self.n_f, self.lambda]
            .iter()
            .chain(self.b_ext.iter())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("spin couplings must be finite".into()));
        }
        if self.j_f < T::zero() || self.n_f < T::zero() {
            return Err(Error::Config("ion spin and ion density must be non-negative".into()));
        }
        Ok(())
    }

    /// `⟨S_f,z⟩ = ħ J_f n_f V` with every ion spin aligned along `+z`.
    pub fn saturated_ion_spin(&self, volume: T, hbar: T) -> T {
        hbar * self.j_f * self.n_f * volume
    }
}

/// Spin-spin mean-field term `-(4 G_ss / V ħ²) ⟨S_z⟩ S_z`.
pub fn build_h_ss<T: Real>(model: &BcsModel<T>, couplings: &SpinCouplings<T>, mean_sz: T) -> OperatorExpr<T> {
    let hbar = model.grid.units.hbar;
    let f = -T::lit(4.0) * couplings.g_ss * mean_sz / (model.volume * hbar * hbar);
    build_spin_ops(&model.grid).s_z.scaled_re(f)
}

/// Ion-electron mean-field term `(A_fs / V ħ²) ⟨S_f,z⟩ S_z`.
pub fn build_h_fs<T: Real>(model: &BcsModel<T>, couplings: &SpinCouplings<T>, ion_mean_sz: T) -> OperatorExpr<T> {
    let hbar = model.grid.units.hbar;
    let f = couplings.a_fs * ion_mean_sz / (model.volume * hbar * hbar);
    build_spin_ops(&model.grid).s_z.scaled_re(f)
}

/// `2 μ_B (B · S)`.
pub fn build_zeeman<T: Real>(grid: &KGrid<T>, b: &Vec3<T>) -> OperatorExpr<T> {
    let two_mu = T::lit(2.0) * grid.units.mu_b;
    let ops = build_spin_ops(grid);
    let mut h = OperatorExpr::zero();
    if b[0] != T::zero() {
        h = h + ops.s_x().scaled_re(two_mu * b[0]);
    }
    if b[1] != T::zero() {
        h = h + ops.s_y().scaled_re(two_mu * b[1]);
    }
    if b[2] != T::zero() {
        h = h + ops.s_z.scaled_re(two_mu * b[2]);
    }
    h
}

/// `H_ss + H_fs + 2 μ_B B·S` for given mean spins.
pub fn build_spin_hamiltonian<T: Real>(
    model: &BcsModel<T>,
    couplings: &SpinCouplings<T>,
    mean_sz: T,
    ion_mean_sz: T,
) -> OperatorExpr<T> {
    build_h_ss(model, couplings, mean_sz)
        + build_h_fs(model, couplings, ion_mean_sz)
        + build_zeeman(&model.grid, &couplings.b_ext)
}

/// Form factors expressible in a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FormFactorSpec {
    /// `G = 1` inside the shell.
    #[default]
    Layer,
    /// `G = 1 + α (k̂1·k̂2)²` inside the shell.
    Quadrupolar { alpha: f64 },
}

impl FormFactorSpec {
    pub fn build<T: Real>(&self, grid: &KGrid<T>) -> Result<FormFactor<T>> {
        match *self {
            FormFactorSpec::Layer => Ok(FormFactor::Layer),
            FormFactorSpec::Quadrupolar { alpha } => {
                let a = T::lit(alpha);
                FormFactor::custom(grid, move |k1: &Vec3<T>, k2: &Vec3<T>| {
                    let c = dot3(k1, k2) / (len3(k1) * len3(k2));
                    T::one() + a * c * c
                })
            }
        }
    }
}

/// Serializable model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kf: f64,
    pub delta: f64,
    /// Number of k-lines `M`.
    pub points: usize,
    #[serde(default = "default_placement")]
    pub placement: PlacementScheme,
    pub dispersion: Dispersion<f64>,
    pub g: f64,
    #[serde(default = "one")]
    pub volume: f64,
    #[serde(default)]
    pub form_factor: FormFactorSpec,
    #[serde(default)]
    pub k_offset: Vec3<f64>,
    #[serde(default)]
    pub frozen_core: FrozenCore<f64>,
    #[serde(default)]
    pub inner_points: Vec<Vec3<f64>>,
    #[serde(default)]
    pub units: Units<f64>,
    #[serde(default)]
    pub couplings: SpinCouplings<f64>,
}

fn default_placement() -> PlacementScheme {
    PlacementScheme::FibonacciSphere
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn build<T: Real>(&self) -> Result<BcsModel<T>> {
        let conv3 = |v: &Vec3<f64>| v.map(T::lit);
        if !(self.volume > 0.0) {
            return Err(Error::Config("volume must be positive".into()));
        }
        let dispersion = match self.dispersion {
            Dispersion::Quadratic { mass } => Dispersion::Quadratic { mass: T::lit(mass) },
            Dispersion::Flat { energy } => Dispersion::Flat { energy: T::lit(energy) },
        };
        let grid = build_shell(T::lit(self.kf), T::lit(self.delta), self.points, self.placement)?
            .with_dispersion(dispersion)
            .with_offset(conv3(&self.k_offset))
            .with_frozen_core(self.frozen_core.count, T::lit(self.frozen_core.energy))
            .with_units(Units {
                hbar: T::lit(self.units.hbar),
                mu_b: T::lit(self.units.mu_b),
                k_b: T::lit(self.units.k_b),
            })
            .with_inner_points(self.inner_points.iter().map(conv3).collect())?;
        self.couplings.validate()?;
        let ff = self.form_factor.build(&grid)?;
        Ok(BcsModel::new(grid, T::lit(self.g))
            .with_volume(T::lit(self.volume))
            .with_form_factor(ff))
    }

    pub fn couplings<T: Real>(&self) -> SpinCouplings<T> {
        let c = &self.couplings;
        SpinCouplings {
            g_ss: T::lit(c.g_ss),
            a_fs: T::lit(c.a_fs),
            j_f: T::lit(c.j_f),
            n_f: T::lit(c.n_f),
            b_ext: c.b_ext.map(T::lit),
            lambda: T::lit(c.lambda),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
