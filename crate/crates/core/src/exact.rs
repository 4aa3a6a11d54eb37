//! Exact reference solutions.
//!
//! The closed solver works in the symmetric Dicke sector. The interaction
//! `(J+ a + J- a_dag) / sqrt(N)` conserves the excitation number `M = k + n`
//! (`k` excited atoms, `n` photons), so each block is a real symmetric
//! tridiagonal matrix of size at most `N + 1` that is diagonalized once.
//! In the rotating frame at resonance the free Hamiltonian only contributes
//! a phase per block, which drops out of every observable computed here.
//!
//! The open solver integrates the Lindblad equation with independent atomic
//! decay on the full product space `(C^2)^N x Fock`. Both the Hamiltonian and
//! the jump operators `sigma_ge` keep the difference of excitation numbers
//! between bra and ket fixed, so the excitation-diagonal part of the density
//! matrix evolves on its own. That part is stored as one dense block per
//! excitation number; it determines the trace, the populations and every
//! excitation-conserving observable exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::ExactError;
use crate::model::{AtomicInit, ModelParams, C64};

/// Largest photon cutoff the solvers accept.
pub const MAX_CUTOFF: usize = 20_000;

/// Largest atom number of the full Liouville-space solver.
pub const MAX_OPEN_ATOMS: u32 = 6;

/// Photon cutoff for the closed solver, `ceil(n + 12 sqrt(n + 1) + 20)`.
pub fn coherent_cutoff(n_ph: f64) -> usize {
    (n_ph + 12.0 * (n_ph + 1.0).sqrt() + 20.0).ceil() as usize
}

/// Smallest `M` whose Poisson tail `P(n > M)` is provably below `eps`.
pub fn poisson_tail_cutoff(n_ph: f64, eps: f64) -> usize {
    if n_ph == 0.0 {
        return 0;
    }
    let mut log_p = -n_ph; // log P(0)
    let mut m = 0usize;
    loop {
        // P(m + 1) and a geometric bound on the rest once the ratio drops below 1.
        let log_next = log_p + n_ph.ln() - ((m + 1) as f64).ln();
        let ratio = n_ph / (m + 2) as f64;
        if ratio < 1.0 {
            let tail = log_next.exp() / (1.0 - ratio);
            if tail < eps {
                return m;
            }
        }
        log_p = log_next;
        m += 1;
        if m > MAX_CUTOFF {
            return m;
        }
    }
}

/// Coherent-state amplitudes `c_0..=c_cutoff`, renormalized after truncation.
pub fn coherent_amplitudes(n_ph: f64, phase: f64, cutoff: usize) -> Vec<C64> {
    let mut log_mag = Vec::with_capacity(cutoff + 1);
    let mut log_fact = 0.0;
    let log_alpha = if n_ph > 0.0 { 0.5 * n_ph.ln() } else { f64::NEG_INFINITY };
    for n in 0..=cutoff {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let lm = if n == 0 {
            -0.5 * n_ph
        } else {
            -0.5 * n_ph + n as f64 * log_alpha - 0.5 * log_fact
        };
        log_mag.push(lm);
    }
    let mut amps: Vec<C64> = log_mag
        .iter()
        .enumerate()
        .map(|(n, lm)| C64::from_polar(lm.exp(), phase * n as f64))
        .collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amps {
        *c /= norm;
    }
    amps
}

fn validate_grid(taus: &[f64]) -> Result<(), ExactError> {
    let ok = taus.iter().all(|t| t.is_finite() && *t >= 0.0) && taus.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(ExactError::InvalidGrid)
    }
}

/// Per-atom excited population and mean photon number on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSeries {
    pub taus: Vec<f64>,
    pub p_e: Vec<f64>,
    pub photons: Vec<f64>,
    pub cutoff: usize,
}

/// One excitation block of the Dicke-sector Hamiltonian.
#[derive(Debug, Clone)]
pub struct ClosedBlock {
    pub excitation: usize,
    /// Atomic excitation numbers `k = 0..=min(N, M)` labelling the basis.
    pub atomic: Vec<usize>,
    pub hamiltonian: DMatrix<f64>,
}

impl ClosedBlock {
    pub fn new(n_atoms: u32, excitation: usize) -> ClosedBlock {
        let n = n_atoms as usize;
        let k_max = n.min(excitation);
        let atomic: Vec<usize> = (0..=k_max).collect();
        let dim = atomic.len();
        let j = n as f64 / 2.0;
        let g = 1.0 / (n as f64).sqrt();
        let mut h = DMatrix::zeros(dim, dim);
        for k in 0..k_max {
            // <k+1, n-1| J+ a |k, n> with m = k - j.
            let m = k as f64 - j;
            let photons = (excitation - k) as f64;
            let elem = g * ((j - m) * (j + m + 1.0) * photons).sqrt();
            h[(k + 1, k)] = elem;
            h[(k, k + 1)] = elem;
        }
        ClosedBlock {
            excitation,
            atomic,
            hamiltonian: h,
        }
    }
}

/// Closed-system reference with the default cutoff.
pub fn closed_evolve(params: &ModelParams, taus: &[f64]) -> Result<ClosedSeries, ExactError> {
    params.validate()?;
    let cutoff = coherent_cutoff(params.n_ph);
    if cutoff > MAX_CUTOFF {
        return Err(ExactError::CutoffOverflow {
            required: cutoff,
            max: MAX_CUTOFF,
        });
    }
    closed_evolve_with_cutoff(params, taus, cutoff)
}

/// Closed-system reference from the coherent state truncated at `cutoff`.
///
/// Within each excitation block the evolution is exact, so the only
/// approximation is the truncation of the initial state.
pub fn closed_evolve_with_cutoff(
    params: &ModelParams,
    taus: &[f64],
    cutoff: usize,
) -> Result<ClosedSeries, ExactError> {
    params.validate()?;
    validate_grid(taus)?;
    if cutoff > MAX_CUTOFF {
        return Err(ExactError::CutoffOverflow {
            required: cutoff,
            max: MAX_CUTOFF,
        });
    }
    let n = params.n_atoms as usize;
    let amps = coherent_amplitudes(params.n_ph, params.field_phase, cutoff);
    let k0 = match params.atoms_initial {
        AtomicInit::AllGround => 0,
        AtomicInit::AllExcited => n,
    };

    let contributions: Vec<(Vec<f64>, Vec<f64>)> = amps
        .par_iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(photons, &c)| {
            let block = ClosedBlock::new(params.n_atoms, photons + k0);
            let dim = block.atomic.len();
            let eig = SymmetricEigen::new(block.hamiltonian.clone());
            // Overlap of the initial basis vector with each eigenvector, times c.
            let coeffs: Vec<C64> = (0..dim).map(|e| c * eig.eigenvectors[(k0, e)]).collect();
            let mut p_e = Vec::with_capacity(taus.len());
            let mut ph = Vec::with_capacity(taus.len());
            let mut psi = vec![C64::new(0.0, 0.0); dim];
            for &t in taus {
                psi.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for (e, coeff) in coeffs.iter().enumerate() {
                    let phase = C64::from_polar(1.0, -eig.eigenvalues[e] * t) * coeff;
                    for (k, z) in psi.iter_mut().enumerate() {
                        *z += phase * eig.eigenvectors[(k, e)];
                    }
                }
                let mut exc = 0.0;
                let mut phot = 0.0;
                for (k, z) in psi.iter().enumerate() {
                    let pr = z.norm_sqr();
                    exc += pr * k as f64;
                    phot += pr * (block.excitation - k) as f64;
                }
                p_e.push(exc / n as f64);
                ph.push(phot);
            }
            (p_e, ph)
        })
        .collect();

    let mut p_e = vec![0.0; taus.len()];
    let mut photons = vec![0.0; taus.len()];
    for (pe, ph) in &contributions {
        for i in 0..taus.len() {
            p_e[i] += pe[i];
            photons[i] += ph[i];
        }
    }
    Ok(ClosedSeries {
        taus: taus.to_vec(),
        p_e,
        photons,
        cutoff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenOptions {
    /// Multiplies the atom-field coupling; 0 decouples the atoms.
    pub coupling_scale: f64,
    /// Photon cutoff of the initial coherent state; derived from `n_ph`
    /// when `None`.
    pub cutoff: Option<usize>,
    /// Upper bound on the RK4 step.
    pub max_step: f64,
    /// RK4 steps are chosen so that `step * spectral_bound <= step_factor`.
    pub step_factor: f64,
}

impl Default for OpenOptions {
    fn default() -> Self {
        OpenOptions {
            coupling_scale: 1.0,
            cutoff: None,
            max_step: 0.01,
            step_factor: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
struct DensityBlock {
    /// `(atomic bitmask, photons)` of each basis state, sorted by mask.
    states: Vec<(u32, usize)>,
    hamiltonian: DMatrix<C64>,
    /// Number of excited atoms per basis state.
    excited: Vec<f64>,
    /// For each atom, `(index here, index in block M - 1)` of states where
    /// that atom is excited.
    lowering: Vec<Vec<(usize, usize)>>,
}

/// Excitation-diagonal density matrix on the full product space.
#[derive(Debug, Clone)]
pub struct OpenState {
    pub n_atoms: u32,
    blocks: Vec<DensityBlock>,
    pub rho: Vec<DMatrix<C64>>,
}

impl OpenState {
    fn new(params: &ModelParams, options: &OpenOptions, cutoff: usize) -> OpenState {
        let n = params.n_atoms;
        let n_usize = n as usize;
        let k0 = match params.atoms_initial {
            AtomicInit::AllGround => 0,
            AtomicInit::AllExcited => n_usize,
        };
        let max_excitation = cutoff + k0;
        let g = options.coupling_scale / f64::from(n).sqrt();
        let mut blocks: Vec<DensityBlock> = Vec::with_capacity(max_excitation + 1);
        for m in 0..=max_excitation {
            let states: Vec<(u32, usize)> = (0u32..(1 << n))
                .filter(|b| b.count_ones() as usize <= m)
                .map(|b| (b, m - b.count_ones() as usize))
                .collect();
            let index = |mask: u32| states.iter().position(|s| s.0 == mask);
            let dim = states.len();
            let mut h = DMatrix::<C64>::zeros(dim, dim);
            for (col, &(mask, photons)) in states.iter().enumerate() {
                for mu in 0..n {
                    let bit = 1u32 << mu;
                    if mask & bit != 0 {
                        // sigma_ge^mu a_dag: atom decays into the field.
                        let row = index(mask & !bit).expect("state in block");
                        h[(row, col)] += C64::new(g * ((photons + 1) as f64).sqrt(), 0.0);
                    } else if photons > 0 {
                        let row = index(mask | bit).expect("state in block");
                        h[(row, col)] += C64::new(g * (photons as f64).sqrt(), 0.0);
                    }
                }
            }
            let excited = states.iter().map(|s| s.0.count_ones() as f64).collect();
            let lowering = if m == 0 {
                vec![Vec::new(); n_usize]
            } else {
                let lower = &blocks[m - 1].states;
                (0..n)
                    .map(|mu| {
                        let bit = 1u32 << mu;
                        states
                            .iter()
                            .enumerate()
                            .filter(|(_, s)| s.0 & bit != 0)
                            .map(|(i, s)| {
                                let j = lower
                                    .iter()
                                    .position(|t| t.0 == s.0 & !bit)
                                    .expect("lowered state in block M - 1");
                                (i, j)
                            })
                            .collect()
                    })
                    .collect()
            };
            blocks.push(DensityBlock {
                states,
                hamiltonian: h,
                excited,
                lowering,
            });
        }

        let amps = coherent_amplitudes(params.n_ph, params.field_phase, cutoff);
        let init_mask = if k0 == 0 { 0 } else { (1u32 << n) - 1 };
        let rho = blocks
            .iter()
            .enumerate()
            .map(|(m, blk)| {
                let dim = blk.states.len();
                let mut r = DMatrix::<C64>::zeros(dim, dim);
                if m >= k0 {
                    let photons = m - k0;
                    if let Some(i) = blk.states.iter().position(|s| *s == (init_mask, photons)) {
                        r[(i, i)] = C64::new(amps[photons].norm_sqr(), 0.0);
                    }
                }
                r
            })
            .collect();
        OpenState { n_atoms: n, blocks, rho }
    }

    pub fn trace(&self) -> C64 {
        self.rho.iter().map(|r| r.trace()).sum()
    }

    /// Largest entry of `rho - rho_dag`.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.rho
            .iter()
            .map(|r| (r - r.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .iter()
            .map(|r| {
                let herm = (r + r.adjoint()) * C64::new(0.5, 0.0);
                herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn excited_fraction(&self) -> f64 {
        let total: f64 = self
            .rho
            .iter()
            .zip(&self.blocks)
            .map(|(r, b)| (0..r.nrows()).map(|i| r[(i, i)].re * b.excited[i]).sum::<f64>())
            .sum();
        total / f64::from(self.n_atoms)
    }

    pub fn mean_photons(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.blocks)
            .map(|(r, b)| (0..r.nrows()).map(|i| r[(i, i)].re * b.states[i].1 as f64).sum::<f64>())
            .sum()
    }

    /// Upper bound on the modulus of the Liouvillian spectrum.
    fn spectral_bound(&self, gamma: f64) -> f64 {
        let h_norm = self
            .blocks
            .iter()
            .map(|b| {
                (0..b.hamiltonian.nrows())
                    .map(|i| b.hamiltonian.row(i).iter().map(|z| z.norm()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        2.0 * h_norm + 2.0 * gamma * f64::from(self.n_atoms)
    }

    fn liouvillian(&self, rho: &[DMatrix<C64>], gamma: f64) -> Vec<DMatrix<C64>> {
        let minus_i = C64::new(0.0, -1.0);
        (0..rho.len())
            .map(|m| {
                let blk = &self.blocks[m];
                let r = &rho[m];
                let h = &blk.hamiltonian;
                let mut out = (h * r - r * h) * minus_i;
                if gamma > 0.0 {
                    let dim = r.nrows();
                    for i in 0..dim {
                        for j in 0..dim {
                            out[(i, j)] -= r[(i, j)] * (0.5 * gamma * (blk.excited[i] + blk.excited[j]));
                        }
                    }
                    if let Some(upper) = self.blocks.get(m + 1) {
                        let ru = &rho[m + 1];
                        for pairs in &upper.lowering {
                            for &(i, i2) in pairs {
                                for &(j, j2) in pairs {
                                    out[(i2, j2)] += ru[(i, j)] * gamma;
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    fn axpy(base: &[DMatrix<C64>], k: &[DMatrix<C64>], h: f64) -> Vec<DMatrix<C64>> {
        base.iter().zip(k).map(|(b, d)| b + d * C64::new(h, 0.0)).collect()
    }

    fn rk4_step(&mut self, dt: f64, gamma: f64) {
        let k1 = self.liouvillian(&self.rho, gamma);
        let k2 = self.liouvillian(&Self::axpy(&self.rho, &k1, 0.5 * dt), gamma);
        let k3 = self.liouvillian(&Self::axpy(&self.rho, &k2, 0.5 * dt), gamma);
        let k4 = self.liouvillian(&Self::axpy(&self.rho, &k3, dt), gamma);
        let w = C64::new(dt / 6.0, 0.0);
        for (m, r) in self.rho.iter_mut().enumerate() {
            *r += (&k1[m] + &k2[m] * C64::new(2.0, 0.0) + &k3[m] * C64::new(2.0, 0.0) + &k4[m]) * w;
        }
    }
}

/// Open-system reference series with trace and Hermiticity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSeries {
    pub taus: Vec<f64>,
    pub p_e: Vec<f64>,
    pub photons: Vec<f64>,
    pub cutoff: usize,
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
}

pub fn open_evolve(params: &ModelParams, taus: &[f64]) -> Result<OpenSeries, ExactError> {
    open_evolve_with(params, taus, &OpenOptions::default())
}

pub fn open_evolve_with(
    params: &ModelParams,
    taus: &[f64],
    options: &OpenOptions,
) -> Result<OpenSeries, ExactError> {
    params.validate()?;
    validate_grid(taus)?;
    if params.n_atoms > MAX_OPEN_ATOMS {
        return Err(ExactError::UnsupportedSize {
            n_atoms: params.n_atoms,
            max: MAX_OPEN_ATOMS,
        });
    }
    let cutoff = options
        .cutoff
        .unwrap_or_else(|| poisson_tail_cutoff(params.n_ph, 1e-12));
    if cutoff > MAX_CUTOFF {
        return Err(ExactError::CutoffOverflow {
            required: cutoff,
            max: MAX_CUTOFF,
        });
    }
    let gamma = params.gamma_over_f;
    let mut state = OpenState::new(params, options, cutoff);
    let bound = state.spectral_bound(gamma).max(1e-12);
    let max_dt = options.max_step.min(options.step_factor / bound);

    let mut out = OpenSeries {
        taus: taus.to_vec(),
        p_e: Vec::with_capacity(taus.len()),
        photons: Vec::with_capacity(taus.len()),
        cutoff,
        max_trace_deviation: 0.0,
        max_hermiticity_deviation: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    let mut t = 0.0;
    for &target in taus {
        let span = target - t;
        if span > 0.0 {
            let n_sub = (span / max_dt).ceil() as usize;
            let dt = span / n_sub as f64;
            for _ in 0..n_sub {
                state.rk4_step(dt, gamma);
            }
            t = target;
        }
        out.p_e.push(state.excited_fraction());
        out.photons.push(state.mean_photons());
        out.max_trace_deviation = out.max_trace_deviation.max((state.trace() - 1.0).norm());
        out.max_hermiticity_deviation = out.max_hermiticity_deviation.max(state.hermiticity_deviation());
    }
    out.min_eigenvalue = state.min_eigenvalue();
    Ok(out)
}
