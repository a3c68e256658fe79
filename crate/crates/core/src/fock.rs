//! Bit-encoded fermionic occupation states, sector bases and sparse state
//! vectors.
//!
//! Sign convention: creating or annihilating a fermion in mode `i` picks up
//! `(-1)^(number of occupied modes j < i)`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::{KGrid, Mode, Spin};
use crate::opalg::OperatorExpr;
use crate::scalar::{norm_sqr, Real, Vec3};

/// Occupation bitmask; bit `i` set means mode `i` is occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FockState(pub u64);

impl FockState {
    pub const VACUUM: FockState = FockState(0);

    pub fn from_modes<I: IntoIterator<Item = Mode>>(modes: I) -> Self {
        FockState(modes.into_iter().fold(0u64, |acc, m| acc | (1u64 << m.0)))
    }

    #[inline]
    pub fn is_occupied(self, mode: Mode) -> bool {
        self.0 >> mode.0 & 1 == 1
    }

    #[inline]
    pub fn particle_count(self) -> u32 {
        self.0.count_ones()
    }

    /// `+1` or `-1`: parity of occupied modes below `mode`.
    #[inline]
    pub fn sign_below(self, mode: Mode) -> i8 {
        let below = self.0 & ((1u64 << mode.0) - 1);
        if below.count_ones() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn occupied(self) -> impl Iterator<Item = Mode> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(Mode(i))
            }
        })
    }

    pub fn to_hex(self) -> String {
        format!("{:#x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        u64::from_str_radix(digits, 16)
            .map(FockState)
            .map_err(|e| Error::Config(format!("bad Fock state '{s}': {e}")))
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{:#x}⟩", self.0)
    }
}

/// `a†_mode |state⟩`, or `None` when the mode is already occupied.
#[inline]
pub fn apply_creation(state: FockState, mode: Mode) -> Option<(i8, FockState)> {
    if state.is_occupied(mode) {
        None
    } else {
        Some((state.sign_below(mode), FockState(state.0 | 1u64 << mode.0)))
    }
}

/// `a_mode |state⟩`, or `None` when the mode is empty.
#[inline]
pub fn apply_annihilation(state: FockState, mode: Mode) -> Option<(i8, FockState)> {
    if state.is_occupied(mode) {
        Some((state.sign_below(mode), FockState(state.0 & !(1u64 << mode.0))))
    } else {
        None
    }
}

/// Conserved quantum numbers selecting a subspace. `twice_sz` is `2 S_z / ħ`;
/// `momentum` is the summed wavevector of the explicit modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sector<T> {
    pub particles: usize,
    #[serde(default)]
    pub twice_sz: Option<i32>,
    #[serde(default)]
    pub momentum: Option<Vec3<T>>,
}

impl<T> Sector<T> {
    pub fn particles(n: usize) -> Self {
        Self {
            particles: n,
            twice_sz: None,
            momentum: None,
        }
    }

    pub fn with_twice_sz(mut self, twice_sz: i32) -> Self {
        self.twice_sz = Some(twice_sz);
        self
    }

    pub fn with_momentum(mut self, k: Vec3<T>) -> Self {
        self.momentum = Some(k);
        self
    }
}

/// All states of the grid's modes matching the sector, ascending bitmask.
pub fn enumerate_sector<T: Real>(grid: &KGrid<T>, sector: &Sector<T>) -> Vec<FockState> {
    let n_modes = grid.mode_count();
    let n = sector.particles;
    if n > n_modes {
        return Vec::new();
    }
    let tol = T::lit(1e-9) * (T::one() + grid.kf);
    let spins: Vec<i32> = (0..n_modes).map(|m| grid.spin_of(Mode(m)).projection()).collect();
    let momenta: Vec<Vec3<T>> = (0..n_modes).map(|m| grid.mode_wavevector(Mode(m))).collect();
    combinations(n_modes, n)
        .filter(|s| match sector.twice_sz {
            Some(tsz) => s.occupied().map(|m| spins[m.0]).sum::<i32>() == tsz,
            None => true,
        })
        .filter(|s| match sector.momentum {
            Some(p) => {
                let mut acc = [T::zero(); 3];
                for m in s.occupied() {
                    for (a, b) in acc.iter_mut().zip(&momenta[m.0]) {
                        *a = *a + *b;
                    }
                }
                acc.iter().zip(&p).all(|(a, b)| (*a - *b).abs() <= tol)
            }
            None => true,
        })
        .collect()
}

/// Bitmasks with `k` of the low `n` bits set, in ascending order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = FockState> {
    let limit: u128 = 1u128 << n;
    let mut next: Option<u128> = if k <= n { Some((1u128 << k) - 1) } else { None };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < limit).then_some(nxt)
        };
        Some(FockState(cur as u64))
    })
}

/// Ordered set of basis states with index lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    states: Vec<FockState>,
}

impl Basis {
    /// Sorts and deduplicates.
    pub fn new(mut states: Vec<FockState>) -> Self {
        states.sort_unstable();
        states.dedup();
        Self { states }
    }

    pub fn sector<T: Real>(grid: &KGrid<T>, sector: &Sector<T>) -> Self {
        Self {
            states: enumerate_sector(grid, sector),
        }
    }

    /// Every occupation pattern of `n_modes` modes.
    pub fn full(n_modes: usize) -> Self {
        assert!(n_modes < 32, "full Fock space of {n_modes} modes is too large");
        Self {
            states: (0..1u64 << n_modes).map(FockState).collect(),
        }
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: FockState) -> Option<usize> {
        self.states.binary_search(&s).ok()
    }
}

/// Sparse state vector `Σ c_s |s⟩`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockVector<T> {
    amps: BTreeMap<FockState, Complex<T>>,
}

impl<T: Real> FockVector<T> {
    pub fn zero() -> Self {
        Self {
            amps: BTreeMap::new(),
        }
    }

    pub fn vacuum() -> Self {
        Self::basis_state(FockState::VACUUM)
    }

    pub fn basis_state(s: FockState) -> Self {
        let mut v = Self::zero();
        v.amps.insert(s, Complex::new(T::one(), T::zero()));
        v
    }

    pub fn from_pairs<I: IntoIterator<Item = (FockState, Complex<T>)>>(pairs: I) -> Self {
        let mut v = Self::zero();
        for (s, c) in pairs {
            v.add(s, c);
        }
        v
    }

    pub fn from_dense(basis: &Basis, amps: &[Complex<T>]) -> Self {
        assert_eq!(basis.len(), amps.len());
        Self::from_pairs(basis.states().iter().copied().zip(amps.iter().copied()))
    }

    #[inline]
    pub fn add(&mut self, s: FockState, c: Complex<T>) {
        *self.amps.entry(s).or_insert_with(|| Complex::new(T::zero(), T::zero())) += c;
    }

    pub fn amplitude(&self, s: FockState) -> Complex<T> {
        self.amps
            .get(&s)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Basis states and amplitudes in ascending bitmask order.
    pub fn iter(&self) -> impl Iterator<Item = (FockState, Complex<T>)> + '_ {
        self.amps.iter().map(|(s, c)| (*s, *c))
    }

    pub fn basis(&self) -> Vec<FockState> {
        self.amps.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.values().map(|c| norm_sqr(*c)).fold(T::zero(), |a, b| a + b)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (s, c) in &self.amps {
            if let Some(d) = other.amps.get(s) {
                acc += c.conj() * d;
            }
        }
        acc
    }

    pub fn scaled(&self, f: Complex<T>) -> Self {
        Self {
            amps: self.amps.iter().map(|(s, c)| (*s, c * f)).collect(),
        }
    }

    /// `self + f·other`
    pub fn axpy(&self, f: Complex<T>, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, c) in &other.amps {
            out.add(*s, c * f);
        }
        out
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Undefined("cannot normalize a zero vector"));
        }
        Ok(self.scaled(Complex::new(T::one() / n, T::zero())))
    }

    /// Drops amplitudes with modulus at or below `tol`.
    pub fn pruned(&self, tol: T) -> Self {
        Self {
            amps: self
                .amps
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(s, c)| (*s, *c))
                .collect(),
        }
    }

    /// Dense amplitudes in `basis` order; errors if weight lies outside.
    pub fn to_dense(&self, basis: &Basis) -> Result<Vec<Complex<T>>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); basis.len()];
        for (s, c) in &self.amps {
            match basis.index_of(*s) {
                Some(i) => out[i] = *c,
                None if c.norm() == T::zero() => {}
                None => return Err(Error::OutsideCodomain { state: s.0 }),
            }
        }
        Ok(out)
    }

    /// Particle count if every component has the same count.
    pub fn definite_particle_count(&self) -> Option<u32> {
        let mut counts = self.amps.keys().map(|s| s.particle_count());
        let first = counts.next()?;
        counts.all(|c| c == first).then_some(first)
    }

    /// Spin projection of one component's occupied modes, `2 S_z / ħ`.
    pub fn twice_sz_of<G: Real>(grid: &KGrid<G>, s: FockState) -> i32 {
        s.occupied()
            .map(|m| match grid.spin_of(m) {
                Spin::Up => 1,
                Spin::Down => -1,
            })
            .sum()
    }
}

/// `⟨v|op|v⟩ / ⟨v|v⟩`
pub fn observable_expectation<T: Real>(v: &FockVector<T>, op: &OperatorExpr<T>) -> Result<Complex<T>> {
    let nsq = v.norm_sqr();
    if v.is_empty() || !(nsq > T::zero()) {
        return Err(Error::Undefined("expectation value in an empty state"));
    }
    let ov = op.apply(v);
    Ok(v.inner(&ov) / Complex::new(nsq, T::zero()))
}

#[derive(Serialize, Deserialize)]
struct Entry<T>(String, T, T);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorJson<T> {
    amplitudes: Vec<Entry<T>>,
}

impl<T: Real + Serialize> Serialize for FockVector<T> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson {
            amplitudes: self.iter().map(|(s, c)| Entry(s.to_hex(), c.re, c.im)).collect(),
        }
        .serialize(ser)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for FockVector<T> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = VectorJson::<T>::deserialize(de)?;
        let mut v = FockVector::zero();
        for Entry(hex, re, im) in raw.amplitudes {
            let s = FockState::from_hex(&hex).map_err(serde::de::Error::custom)?;
            if v.amps.contains_key(&s) {
                return Err(serde::de::Error::custom(format!("duplicate basis state {hex}")));
            }
            v.amps.insert(s, Complex::new(re, im));
        }
        Ok(v)
    }
}
