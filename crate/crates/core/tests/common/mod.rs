//! Reference implementations used only by the integration tests. None of
//! this calls into the solver code paths it is compared against.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

const I: C64 = C64::new(0.0, 1.0);

/// `[a, a_dag, rho_ee, rho_eg, rho_ge]`
pub type Phase = [C64; 5];

/// Noise-free rotating-frame equations written out independently.
pub fn reference_drift(x: &Phase, gamma: f64) -> Phase {
    let [a, ad, ee, eg, ge] = *x;
    let inv = C64::new(2.0, 0.0) * ee - 1.0;
    [
        -I * eg,
        I * ge,
        -gamma * ee + I * eg * ad - I * ge * a,
        -0.5 * gamma * eg + I * inv * a,
        -0.5 * gamma * ge - I * inv * ad,
    ]
}

fn axpy(x: &Phase, k: &Phase, h: f64) -> Phase {
    let mut out = *x;
    for i in 0..5 {
        out[i] += k[i] * h;
    }
    out
}

/// Classical RK4 with `steps` equal steps over `[0, tau]`.
pub fn rk4_reference(x0: Phase, gamma: f64, tau: f64, steps: usize) -> Phase {
    let h = tau / steps as f64;
    let mut x = x0;
    for _ in 0..steps {
        let k1 = reference_drift(&x, gamma);
        let k2 = reference_drift(&axpy(&x, &k1, 0.5 * h), gamma);
        let k3 = reference_drift(&axpy(&x, &k2, 0.5 * h), gamma);
        let k4 = reference_drift(&axpy(&x, &k3, h), gamma);
        for i in 0..5 {
            x[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }
    x
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let norm: f64 = m.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let scaled = m / C64::new(2f64.powi(squarings as i32), 0.0);
    let n = m.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Tensor-product basis `|mask> (x) |n>`, index `mask * fock + n`; bit `mu`
/// of `mask` set means atom `mu` is excited.
pub struct ProductSpace {
    pub n_atoms: u32,
    pub fock: usize,
}

impl ProductSpace {
    pub fn dim(&self) -> usize {
        (1usize << self.n_atoms) * self.fock
    }

    pub fn index(&self, mask: usize, photons: usize) -> usize {
        mask * self.fock + photons
    }

    /// Annihilation operator of the field.
    pub fn field_lowering(&self) -> DMatrix<C64> {
        let mut op = DMatrix::zeros(self.dim(), self.dim());
        for mask in 0..1usize << self.n_atoms {
            for n in 1..self.fock {
                op[(self.index(mask, n - 1), self.index(mask, n))] = C64::new((n as f64).sqrt(), 0.0);
            }
        }
        op
    }

    /// `|g><e|` on atom `mu`.
    pub fn atom_lowering(&self, mu: u32) -> DMatrix<C64> {
        let mut op = DMatrix::zeros(self.dim(), self.dim());
        let bit = 1usize << mu;
        for mask in 0..1usize << self.n_atoms {
            if mask & bit != 0 {
                for n in 0..self.fock {
                    op[(self.index(mask & !bit, n), self.index(mask, n))] = C64::new(1.0, 0.0);
                }
            }
        }
        op
    }

    /// `(1/sqrt N) sum_mu (sigma_+ a + sigma_- a_dag)`.
    pub fn hamiltonian(&self, coupling: f64) -> DMatrix<C64> {
        let a = self.field_lowering();
        let ad = a.adjoint();
        let g = C64::new(coupling / f64::from(self.n_atoms).sqrt(), 0.0);
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for mu in 0..self.n_atoms {
            let sm = self.atom_lowering(mu);
            let sp = sm.adjoint();
            h += (&sp * &a + &sm * &ad) * g;
        }
        h
    }

    pub fn excitation_fraction_op(&self) -> DMatrix<C64> {
        let mut op = DMatrix::zeros(self.dim(), self.dim());
        for mask in 0..1usize << self.n_atoms {
            let k = mask.count_ones() as f64 / f64::from(self.n_atoms);
            for n in 0..self.fock {
                let i = self.index(mask, n);
                op[(i, i)] = C64::new(k, 0.0);
            }
        }
        op
    }

    pub fn photon_number_op(&self) -> DMatrix<C64> {
        let a = self.field_lowering();
        a.adjoint() * a
    }

    /// Pure product state: all atoms in `mask`, coherent field truncated at
    /// `cutoff` and renormalized.
    pub fn product_state(&self, mask: usize, n_ph: f64, cutoff: usize) -> DMatrix<C64> {
        let mut psi = DMatrix::zeros(self.dim(), 1);
        let alpha = n_ph.sqrt();
        let mut c = 1.0f64;
        let mut norm = 0.0;
        for n in 0..=cutoff {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            psi[(self.index(mask, n), 0)] = C64::new(c, 0.0);
            norm += c * c;
        }
        psi / C64::new(norm.sqrt(), 0.0)
    }
}

pub fn expectation(psi: &DMatrix<C64>, op: &DMatrix<C64>) -> f64 {
    (psi.adjoint() * op * psi)[(0, 0)].re
}

pub fn trace_with(rho: &DMatrix<C64>, op: &DMatrix<C64>) -> f64 {
    (rho * op).trace().re
}

/// Dense Lindblad propagation with RK4 on the full density matrix, atomic
/// decay at rate `gamma` on every atom.
pub fn dense_lindblad(
    space: &ProductSpace,
    rho0: &DMatrix<C64>,
    gamma: f64,
    taus: &[f64],
    dt: f64,
) -> Vec<DMatrix<C64>> {
    let h = space.hamiltonian(1.0);
    let jumps: Vec<DMatrix<C64>> = (0..space.n_atoms).map(|mu| space.atom_lowering(mu)).collect();
    let sum_jdj: DMatrix<C64> = jumps
        .iter()
        .map(|j| j.adjoint() * j)
        .fold(DMatrix::zeros(space.dim(), space.dim()), |acc, m| acc + m);
    let rhs = |rho: &DMatrix<C64>| -> DMatrix<C64> {
        let mut out = (&h * rho - rho * &h) * (-I);
        for j in &jumps {
            out += (j * rho * j.adjoint()) * C64::new(gamma, 0.0);
        }
        out -= (&sum_jdj * rho + rho * &sum_jdj) * C64::new(0.5 * gamma, 0.0);
        out
    };
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt).ceil() as usize;
            let h_step = span / n as f64;
            let c = |x: f64| C64::new(x, 0.0);
            for _ in 0..n {
                let k1 = rhs(&rho);
                let k2 = rhs(&(&rho + &k1 * c(0.5 * h_step)));
                let k3 = rhs(&(&rho + &k2 * c(0.5 * h_step)));
                let k4 = rhs(&(&rho + &k3 * c(h_step)));
                rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h_step / 6.0);
            }
            t = target;
        }
        out.push(rho.clone());
    }
    out
}
