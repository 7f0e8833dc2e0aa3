//! Truncated Fock-space simulator used to cross-check the phase-space engine.
//!
//! States are dense amplitude tensors over `{0, …, n_max − 1}^N`; mode 0 is
//! the most significant index. Gates are exponentials of their ladder
//! operator generators. Truncating an anti-Hermitian generator keeps it
//! anti-Hermitian, so the truncated gates are exactly unitary and norm is
//! not lost at the edge; instead the population of the top
//! [`GUARD_LEVELS`] levels of every mode is monitored as the leakage
//! indicator.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::Gate;
use crate::error::{Error, Result};

type C = Complex64;

/// Levels at the top of each mode whose population counts as leakage.
pub const GUARD_LEVELS: usize = 4;
/// Smallest cutoff accepted.
pub const MIN_CUTOFF: usize = 8;
/// Largest cutoff at which single-mode gates are built as dense matrix
/// exponentials; above it their action is applied directly.
pub const DENSE_SINGLE_MODE_LIMIT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    /// Levels per mode, `0..cutoff`.
    pub cutoff: usize,
    pub leak_tol: f64,
}

impl FockConfig {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < MIN_CUTOFF {
            return Err(Error::CutoffTooSmall(cutoff));
        }
        Ok(FockConfig {
            cutoff,
            leak_tol: 1e-10,
        })
    }
}

/// Annihilation operator on `n` levels: `a|k⟩ = √k |k−1⟩`.
pub fn build_ladder(n: usize) -> DMatrix<C> {
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &DMatrix<C>) -> DMatrix<C> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.map(|z| z / 2f64.powi(s));
    let id = DMatrix::<C>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let r = |x: f64| C::new(x, 0.0);
    let u_inner = &a6 * (&a6 * r(B[13]) + &a4 * r(B[11]) + &a2 * r(B[9]))
        + &a6 * r(B[7])
        + &a4 * r(B[5])
        + &a2 * r(B[3])
        + &id * r(B[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * r(B[12]) + &a4 * r(B[10]) + &a2 * r(B[8]))
        + &a6 * r(B[6])
        + &a4 * r(B[4])
        + &a2 * r(B[2])
        + &id * r(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut x = q.lu().solve(&p).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

fn dagger(m: &DMatrix<C>) -> DMatrix<C> {
    m.adjoint()
}

/// `exp[½(ζa†² − ζ*a²)]`, `ζ = δe^{iθ}`.
pub fn u_squeeze(delta: f64, theta: f64, n: usize) -> DMatrix<C> {
    let a = build_ladder(n);
    let ad = dagger(&a);
    let z = C::from_polar(delta, theta);
    expm(&((&ad * &ad * z - &a * &a * z.conj()) * C::new(0.5, 0.0)))
}

/// `exp(αa† − α*a)`, `α = amp·e^{iφ}`.
pub fn u_displace(amp: f64, phi: f64, n: usize) -> DMatrix<C> {
    let a = build_ladder(n);
    let al = C::from_polar(amp, phi);
    expm(&(dagger(&a) * al - &a * al.conj()))
}

fn two_mode_ladders(n: usize) -> (DMatrix<C>, DMatrix<C>) {
    let a = build_ladder(n);
    let id = DMatrix::<C>::identity(n, n);
    (a.kronecker(&id), id.kronecker(&a))
}

/// Beam-splitter angle with `cos² = tau`.
fn bs_angle(tau: f64) -> f64 {
    if tau >= 1.0 {
        0.0
    } else if tau <= 0.0 {
        FRAC_PI_2
    } else {
        tau.sqrt().acos()
    }
}

/// Dense beam splitter `exp[ϑ(a₁a₂† − a₁†a₂)]`, `cos ϑ = √τ`, on `n²` levels.
pub fn u_beam_splitter(tau: f64, n: usize) -> DMatrix<C> {
    let (a1, a2) = two_mode_ladders(n);
    let t = C::new(bs_angle(tau), 0.0);
    expm(&((&a1 * dagger(&a2) - dagger(&a1) * &a2) * t))
}

/// Dense two-mode squeezer `exp(ζa₁†a₂† − ζ*a₁a₂)` on `n²` levels.
pub fn u_two_mode_squeeze(delta: f64, theta: f64, n: usize) -> DMatrix<C> {
    let (a1, a2) = two_mode_ladders(n);
    let z = C::from_polar(delta, theta);
    expm(&(dagger(&a1) * dagger(&a2) * z - &a1 * &a2 * z.conj()))
}

/// Dense amplitude tensor of an N-mode truncated state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    cutoff: usize,
    amps: Vec<C>,
}

impl FockState {
    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::NoModes);
        }
        if cutoff < MIN_CUTOFF {
            return Err(Error::CutoffTooSmall(cutoff));
        }
        let len = cutoff
            .checked_pow(modes as u32)
            .filter(|&l| l <= 1 << 24)
            .ok_or(Error::FockTooLarge(usize::MAX))?;
        let mut amps = vec![C::new(0.0, 0.0); len];
        amps[0] = C::new(1.0, 0.0);
        Ok(FockState {
            modes,
            cutoff,
            amps,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.modes - 1 - mode) as u32)
    }

    fn digit(&self, idx: usize, mode: usize) -> usize {
        (idx / self.stride(mode)) % self.cutoff
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &FockState) -> C {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest population held in the top [`GUARD_LEVELS`] levels of any mode.
    pub fn guard_weight(&self) -> f64 {
        let lo = self.cutoff - GUARD_LEVELS;
        (0..self.modes)
            .map(|m| {
                self.amps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| self.digit(*i, m) >= lo)
                    .map(|(_, z)| z.norm_sqr())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `Σⱼ ωⱼ N̂ⱼ |ψ⟩`.
    pub fn apply_energy(&self, omegas: &[f64]) -> Result<FockState> {
        if omegas.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: omegas.len(),
            });
        }
        let mut out = self.clone();
        for (i, z) in out.amps.iter_mut().enumerate() {
            let e: f64 = (0..self.modes)
                .map(|m| omegas[m] * self.digit(i, m) as f64)
                .sum();
            *z *= e;
        }
        Ok(out)
    }

    /// `⟨N̂ⱼ⟩`, `⟨N̂ⱼ²⟩` and `⟨N̂ⱼN̂ₖ⟩`.
    pub fn number_stats(&self) -> NumberStats {
        let n = self.modes;
        let mut mean = vec![0.0; n];
        let mut second = DMatrix::zeros(n, n);
        let mut digits = vec![0.0; n];
        for (i, z) in self.amps.iter().enumerate() {
            let p = z.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (m, d) in digits.iter_mut().enumerate() {
                *d = self.digit(i, m) as f64;
            }
            for j in 0..n {
                mean[j] += p * digits[j];
                for k in 0..n {
                    second[(j, k)] += p * digits[j] * digits[k];
                }
            }
        }
        NumberStats { mean, second }
    }

    /// Applies a gate, or its inverse.
    pub fn apply_gate(&mut self, gate: &Gate, inverse: bool) -> Result<()> {
        let prepared = PreparedGate::new(gate, self.modes, self.cutoff)?;
        self.apply_prepared(&prepared, inverse)
    }

    /// Applies a prebuilt gate, or its adjoint.
    pub fn apply_prepared(&mut self, gate: &PreparedGate, adjoint: bool) -> Result<()> {
        if gate.modes != self.modes || gate.cutoff != self.cutoff {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: gate.modes,
            });
        }
        match &gate.action {
            Action::Dense { mode, u } => {
                let c = self.cutoff;
                let rows: Vec<C> = (0..c)
                    .flat_map(|i| (0..c).map(move |k| (i, k)))
                    .map(|(i, k)| if adjoint { u[(k, i)].conj() } else { u[(i, k)] })
                    .collect();
                self.for_each_fiber(*mode, |buf| {
                    (0..c)
                        .map(|i| {
                            rows[i * c..(i + 1) * c]
                                .iter()
                                .zip(buf)
                                .map(|(u, b)| u * b)
                                .sum()
                        })
                        .collect()
                });
            }
            Action::Banded { mode, gen } => {
                let neg;
                let gen = if adjoint {
                    neg = gen.negated();
                    &neg
                } else {
                    gen
                };
                self.for_each_fiber(*mode, |buf| gen.exp_action(buf));
            }
            Action::Pair { a, b, blocks } => self.apply_blocks(*a, *b, blocks, adjoint),
        }
        Ok(())
    }

    /// Replaces every fibre along `mode` by `f(fibre)`.
    fn for_each_fiber<F: FnMut(&[C]) -> Vec<C>>(&mut self, mode: usize, mut f: F) {
        let c = self.cutoff;
        let stride = self.stride(mode);
        let block = stride * c;
        let mut buf = vec![C::new(0.0, 0.0); c];
        for outer in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = self.amps[base + k * stride];
                }
                for (k, v) in f(&buf).into_iter().enumerate() {
                    self.amps[base + k * stride] = v;
                }
            }
        }
    }

    fn apply_blocks(&mut self, a: usize, b: usize, blocks: &[PairBlock], adjoint: bool) {
        let (sa, sb) = (self.stride(a), self.stride(b));
        let bases: Vec<usize> = (0..self.amps.len())
            .filter(|&i| self.digit(i, a) == 0 && self.digit(i, b) == 0)
            .collect();
        let mut buf = Vec::new();
        for &base in &bases {
            for blk in blocks {
                let k = blk.states.len();
                buf.clear();
                buf.extend(
                    blk.states
                        .iter()
                        .map(|&(na, nb)| self.amps[base + na * sa + nb * sb]),
                );
                for i in 0..k {
                    let mut acc = C::new(0.0, 0.0);
                    for j in 0..k {
                        let u = if adjoint {
                            blk.u[(j, i)].conj()
                        } else {
                            blk.u[(i, j)]
                        };
                        acc += u * buf[j];
                    }
                    let (na, nb) = blk.states[i];
                    self.amps[base + na * sa + nb * sb] = acc;
                }
            }
        }
    }
}

/// A gate turned into its truncated action for a fixed size, so that the
/// gate and its adjoint can be applied without rebuilding it.
pub struct PreparedGate {
    modes: usize,
    cutoff: usize,
    action: Action,
}

enum Action {
    Dense {
        mode: usize,
        u: DMatrix<C>,
    },
    Banded {
        mode: usize,
        gen: Band,
    },
    Pair {
        a: usize,
        b: usize,
        blocks: Vec<PairBlock>,
    },
}

impl PreparedGate {
    pub fn new(gate: &Gate, modes: usize, cutoff: usize) -> Result<Self> {
        for &m in &gate.modes() {
            if m >= modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    num_modes: modes,
                });
            }
        }
        let single = |mode: usize, gen: Band| {
            if cutoff <= DENSE_SINGLE_MODE_LIMIT {
                Action::Dense {
                    mode,
                    u: expm(&gen.dense()),
                }
            } else {
                Action::Banded { mode, gen }
            }
        };
        let action = match *gate {
            Gate::Squeeze { delta, theta, mode } => {
                single(mode, Band::squeeze(C::from_polar(delta, theta), cutoff))
            }
            Gate::Displace { amp, phi, mode } => {
                single(mode, Band::displace(C::from_polar(amp, phi), cutoff))
            }
            Gate::BeamSplitter {
                tau,
                mode_a,
                mode_b,
            } => {
                if mode_a == mode_b {
                    return Err(Error::RepeatedMode(mode_a));
                }
                Action::Pair {
                    a: mode_a,
                    b: mode_b,
                    blocks: beam_splitter_blocks(bs_angle(tau), cutoff),
                }
            }
            Gate::TwoModeSqueeze {
                delta,
                theta,
                mode_a,
                mode_b,
            } => {
                if mode_a == mode_b {
                    return Err(Error::RepeatedMode(mode_a));
                }
                Action::Pair {
                    a: mode_a,
                    b: mode_b,
                    blocks: two_mode_squeeze_blocks(C::from_polar(delta, theta), cutoff),
                }
            }
        };
        Ok(PreparedGate {
            modes,
            cutoff,
            action,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumberStats {
    pub mean: Vec<f64>,
    /// `⟨N̂ⱼN̂ₖ⟩`; the diagonal holds `⟨N̂ⱼ²⟩`.
    pub second: DMatrix<f64>,
}

/// Single-mode generator with nonzeros on the ±`offset` diagonals:
/// `G|k⟩ = up[k]|k+offset⟩ + down[k]|k−offset⟩`.
struct Band {
    offset: usize,
    up: Vec<C>,
    down: Vec<C>,
}

impl Band {
    fn squeeze(z: C, n: usize) -> Band {
        let up = (0..n)
            .map(|k| z * (0.5 * (((k + 1) * (k + 2)) as f64).sqrt()))
            .collect();
        let down = (0..n)
            .map(|k| -z.conj() * (0.5 * ((k * k.saturating_sub(1)) as f64).sqrt()))
            .collect();
        Band {
            offset: 2,
            up,
            down,
        }
    }

    fn displace(al: C, n: usize) -> Band {
        let up = (0..n).map(|k| al * ((k + 1) as f64).sqrt()).collect();
        let down = (0..n).map(|k| -al.conj() * (k as f64).sqrt()).collect();
        Band {
            offset: 1,
            up,
            down,
        }
    }

    fn negated(&self) -> Band {
        Band {
            offset: self.offset,
            up: self.up.iter().map(|z| -z).collect(),
            down: self.down.iter().map(|z| -z).collect(),
        }
    }

    fn dense(&self) -> DMatrix<C> {
        let n = self.up.len();
        let mut g = DMatrix::zeros(n, n);
        for k in 0..n {
            if k + self.offset < n {
                g[(k + self.offset, k)] = self.up[k];
            }
            if k >= self.offset {
                g[(k - self.offset, k)] = self.down[k];
            }
        }
        g
    }

    fn apply(&self, v: &[C], out: &mut [C]) {
        let n = v.len();
        for o in out.iter_mut() {
            *o = C::new(0.0, 0.0);
        }
        for k in 0..n {
            if k + self.offset < n {
                out[k + self.offset] += self.up[k] * v[k];
            }
            if k >= self.offset {
                out[k - self.offset] += self.down[k] * v[k];
            }
        }
    }

    /// `exp(G) v` by a Taylor series on `G/s` applied `s` times, with `s`
    /// chosen so that `‖G/s‖₁ ≤ 1`.
    fn exp_action(&self, v: &[C]) -> Vec<C> {
        let n = v.len();
        let norm1 = (0..n)
            .map(|k| {
                let mut col = 0.0;
                if k + self.offset < n {
                    col += self.up[k].norm();
                }
                if k >= self.offset {
                    col += self.down[k].norm();
                }
                col
            })
            .fold(0.0, f64::max);
        let steps = norm1.ceil().max(1.0) as usize;
        let scale = 1.0 / steps as f64;
        let mut x = v.to_vec();
        let mut term = vec![C::new(0.0, 0.0); n];
        let mut next = vec![C::new(0.0, 0.0); n];
        for _ in 0..steps {
            term.copy_from_slice(&x);
            let mut acc = x.clone();
            let base = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for k in 1..80 {
                self.apply(&term, &mut next);
                let f = scale / k as f64;
                let mut biggest: f64 = 0.0;
                for (t, nx) in term.iter_mut().zip(&next) {
                    *t = nx * f;
                    biggest = biggest.max(t.norm());
                }
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                }
                if biggest <= 1e-18 * base.max(1e-300) {
                    break;
                }
            }
            x = acc;
        }
        x
    }
}

/// A block of two-mode basis states closed under a gate, with the gate's
/// restriction to it.
struct PairBlock {
    states: Vec<(usize, usize)>,
    u: DMatrix<C>,
}

/// Beam splitter `exp[ϑ(a₁a₂† − a₁†a₂)]` split by total photon number.
fn beam_splitter_blocks(angle: f64, n: usize) -> Vec<PairBlock> {
    let mut blocks = Vec::new();
    for total in 0..(2 * n - 1) {
        let states: Vec<(usize, usize)> = (0..=total)
            .map(|n1| (n1, total - n1))
            .filter(|&(a, b)| a < n && b < n)
            .collect();
        let k = states.len();
        let mut g = DMatrix::<C>::zeros(k, k);
        for (j, &(n1, n2)) in states.iter().enumerate() {
            for (i, &(m1, m2)) in states.iter().enumerate() {
                if m1 + 1 == n1 && m2 == n2 + 1 {
                    g[(i, j)] += C::new(angle * ((n1 * (n2 + 1)) as f64).sqrt(), 0.0);
                }
                if m1 == n1 + 1 && m2 + 1 == n2 {
                    g[(i, j)] -= C::new(angle * (((n1 + 1) * n2) as f64).sqrt(), 0.0);
                }
            }
        }
        blocks.push(PairBlock {
            states,
            u: expm(&g),
        });
    }
    blocks
}

/// Two-mode squeezer `exp(ζa₁†a₂† − ζ*a₁a₂)` split by photon-number
/// difference.
fn two_mode_squeeze_blocks(z: C, n: usize) -> Vec<PairBlock> {
    let mut blocks = Vec::new();
    for diff in -(n as i64 - 1)..(n as i64) {
        let states: Vec<(usize, usize)> = (0..n as i64)
            .map(|n2| (n2 + diff, n2))
            .filter(|&(a, _)| a >= 0 && a < n as i64)
            .map(|(a, b)| (a as usize, b as usize))
            .collect();
        let k = states.len();
        let mut g = DMatrix::<C>::zeros(k, k);
        for j in 0..k {
            let (n1, n2) = states[j];
            if j + 1 < k {
                g[(j + 1, j)] = z * (((n1 + 1) * (n2 + 1)) as f64).sqrt();
            }
            if j >= 1 {
                g[(j - 1, j)] = -z.conj() * ((n1 * n2) as f64).sqrt();
            }
        }
        blocks.push(PairBlock {
            states,
            u: expm(&g),
        });
    }
    blocks
}

/// A state preparation followed by a charging step, both as gate lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub num_modes: usize,
    pub preparation: Vec<Gate>,
    pub charger: Vec<Gate>,
    pub omegas: Vec<f64>,
}

impl Scenario {
    /// Splits a scenario without any two-mode gate into independent
    /// single-mode scenarios.
    pub fn split_modes(&self) -> Option<Vec<Scenario>> {
        if self
            .preparation
            .iter()
            .chain(&self.charger)
            .any(|g| g.modes().len() > 1)
        {
            return None;
        }
        let relabel = |g: &Gate| match *g {
            Gate::Squeeze { delta, theta, .. } => Gate::Squeeze {
                delta,
                theta,
                mode: 0,
            },
            Gate::Displace { amp, phi, .. } => Gate::Displace { amp, phi, mode: 0 },
            other => other,
        };
        Some(
            (0..self.num_modes)
                .map(|m| Scenario {
                    num_modes: 1,
                    preparation: self
                        .preparation
                        .iter()
                        .filter(|g| g.modes()[0] == m)
                        .map(relabel)
                        .collect(),
                    charger: self
                        .charger
                        .iter()
                        .filter(|g| g.modes()[0] == m)
                        .map(relabel)
                        .collect(),
                    omegas: vec![self.omegas[m]],
                })
                .collect(),
        )
    }
}

/// Energy statistics of a scenario computed in the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMoments {
    /// `⟨N̂ⱼ⟩` before charging.
    pub n_before: Vec<f64>,
    /// `⟨N̂ⱼ⟩` after charging.
    pub n_after: Vec<f64>,
    /// `⟨N̂ⱼ²⟩` before charging.
    pub n2_before: Vec<f64>,
    pub e0: f64,
    pub e1: f64,
    pub v0: f64,
    pub v1: f64,
    /// `½⟨{Ĥ′, Ĥ}⟩ − ⟨Ĥ′⟩⟨Ĥ⟩` in the initial state.
    pub cov: f64,
    /// `⟨{Ĥ′, Ĥ}⟩` in the initial state.
    pub anticomm: f64,
    /// `Var(Ĥ′ − Ĥ)` in the initial state.
    pub dw2: f64,
    pub guard_weight: f64,
    pub cutoff: usize,
}

impl OracleMoments {
    fn combine(parts: &[OracleMoments]) -> OracleMoments {
        let e0: f64 = parts.iter().map(|p| p.e0).sum();
        let e1: f64 = parts.iter().map(|p| p.e1).sum();
        let cov: f64 = parts.iter().map(|p| p.cov).sum();
        OracleMoments {
            n_before: parts.iter().flat_map(|p| p.n_before.clone()).collect(),
            n_after: parts.iter().flat_map(|p| p.n_after.clone()).collect(),
            n2_before: parts.iter().flat_map(|p| p.n2_before.clone()).collect(),
            e0,
            e1,
            v0: parts.iter().map(|p| p.v0).sum(),
            v1: parts.iter().map(|p| p.v1).sum(),
            cov,
            anticomm: 2.0 * cov + 2.0 * e0 * e1,
            dw2: parts.iter().map(|p| p.dw2).sum(),
            guard_weight: parts.iter().map(|p| p.guard_weight).fold(0.0, f64::max),
            cutoff: parts.iter().map(|p| p.cutoff).max().unwrap_or(0),
        }
    }

    /// Values tracked by the convergence sweep.
    fn tracked(&self) -> Vec<f64> {
        let mut v = self.n_after.clone();
        v.extend_from_slice(&[self.v0, self.v1, self.cov, self.anticomm, self.dw2]);
        v
    }
}

/// Runs a scenario at a fixed cutoff.
pub fn oracle_moments(scn: &Scenario, cutoff: usize) -> Result<OracleMoments> {
    let mut psi0 = FockState::vacuum(scn.num_modes, cutoff)?;
    for g in &scn.preparation {
        psi0.apply_gate(g, false)?;
    }
    let charger = scn
        .charger
        .iter()
        .map(|g| PreparedGate::new(g, scn.num_modes, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let mut psi1 = psi0.clone();
    for g in &charger {
        psi1.apply_prepared(g, false)?;
    }
    let h0 = psi0.apply_energy(&scn.omegas)?;
    let h1 = psi1.apply_energy(&scn.omegas)?;
    let e0 = psi0.inner(&h0).re;
    let e1 = psi1.inner(&h1).re;
    let v0 = h0.norm_sqr() - e0 * e0;
    let v1 = h1.norm_sqr() - e1 * e1;
    let mut chi = h1;
    for g in charger.iter().rev() {
        chi.apply_prepared(g, true)?;
    }
    let e1_heis = psi0.inner(&chi).re;
    let anticomm = 2.0 * chi.inner(&h0).re;
    let cov = 0.5 * anticomm - e1_heis * e0;
    let diff_norm: f64 = chi
        .amps
        .iter()
        .zip(&h0.amps)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let dw2 = diff_norm - (e1_heis - e0).powi(2);
    let before = psi0.number_stats();
    let after = psi1.number_stats();
    Ok(OracleMoments {
        n2_before: (0..scn.num_modes).map(|j| before.second[(j, j)]).collect(),
        n_before: before.mean,
        n_after: after.mean,
        e0,
        e1,
        v0,
        v1,
        cov,
        anticomm,
        dw2,
        guard_weight: psi0.guard_weight().max(psi1.guard_weight()),
        cutoff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Smallest cutoff whose values agree with the doubled cutoff.
    pub certified_cutoff: Option<usize>,
    /// Values at the largest cutoff evaluated.
    pub moments: OracleMoments,
    /// Relative change of the tracked values over the last doubling.
    pub rel_change: f64,
    pub converged: bool,
}

/// Largest cutoff tried for a given number of modes.
pub fn default_cutoff_cap(num_modes: usize) -> usize {
    match num_modes {
        1 => 1024,
        2 => 128,
        _ => 64,
    }
}

/// Doubles the cutoff from [`MIN_CUTOFF`] until every tracked moment changes
/// by less than `rel_tol` and the guard-band population is below
/// `leak_tol`. Scenarios without two-mode gates are run mode by mode.
pub fn convergence_sweep(
    scn: &Scenario,
    rel_tol: f64,
    leak_tol: f64,
    cap: Option<usize>,
) -> Result<ConvergenceReport> {
    if let Some(parts) = scn.split_modes().filter(|p| p.len() > 1) {
        let reports = parts
            .iter()
            .map(|p| convergence_sweep(p, rel_tol, leak_tol, cap))
            .collect::<Result<Vec<_>>>()?;
        let moments = OracleMoments::combine(
            &reports
                .iter()
                .map(|r| r.moments.clone())
                .collect::<Vec<_>>(),
        );
        let converged = reports.iter().all(|r| r.converged);
        return Ok(ConvergenceReport {
            certified_cutoff: if converged {
                reports.iter().filter_map(|r| r.certified_cutoff).max()
            } else {
                None
            },
            moments,
            rel_change: reports.iter().map(|r| r.rel_change).fold(0.0, f64::max),
            converged,
        });
    }
    let cap = cap.unwrap_or_else(|| default_cutoff_cap(scn.num_modes));
    let mut cutoff = MIN_CUTOFF;
    let mut prev = oracle_moments(scn, cutoff)?;
    let mut rel_change = f64::INFINITY;
    while cutoff * 2 <= cap {
        let next = oracle_moments(scn, cutoff * 2)?;
        rel_change = relative_change(&prev, &next);
        if rel_change < rel_tol && next.guard_weight < leak_tol {
            return Ok(ConvergenceReport {
                certified_cutoff: Some(cutoff),
                moments: next,
                rel_change,
                converged: true,
            });
        }
        prev = next;
        cutoff *= 2;
    }
    Ok(ConvergenceReport {
        certified_cutoff: None,
        moments: prev,
        rel_change,
        converged: false,
    })
}

fn relative_change(a: &OracleMoments, b: &OracleMoments) -> f64 {
    let floor = 1e-6;
    a.tracked()
        .iter()
        .zip(b.tracked())
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}
