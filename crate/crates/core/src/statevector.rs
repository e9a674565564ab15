//! Minimal dense state-vector simulator.
//!
//! Amplitudes are stored little-endian: qubit 0 is the least significant bit
//! of the basis-state index. Unitaries are dense complex matrices applied to
//! an ordered list of target qubits, where `targets[i]` carries bit `i` of
//! the operator's local index. That is enough for the circuits built here
//! (at most ~17 qubits); there is no gate decomposition or sparsity.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};

/// Dense complex matrix acting on a power-of-two dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl UnitaryMatrix {
    /// Builds a matrix from a row-major entry vector. `dim` must be a power
    /// of two and `entries.len()` must equal `dim * dim`. Unitarity is not
    /// enforced here; composite operators are often built incrementally and
    /// validated with [`UnitaryMatrix::is_unitary`] in tests.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimension {dim} is not a power of two"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |r, c| {
            if r == c {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Column `c` as a vector; column 0 of an operator is its action on |0⟩.
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, c)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = vec![Complex64::ZERO; self.dim * self.dim];
        for r in 0..self.dim {
            for c in 0..self.dim {
                entries[c * self.dim + r] = self.get(r, c).conj();
            }
        }
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.dim, self.dim, rhs.dim, rhs.dim
            )));
        }
        let n = self.dim;
        let mut out = vec![Complex64::ZERO; n * n];
        // ikj order keeps the inner loop contiguous in both operands.
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                let rhs_row = &rhs.entries[k * n..(k + 1) * n];
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            dim: n,
            entries: out,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    /// Checks `U U† = I` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = match self.matmul(&self.adjoint()) {
            Ok(p) => p,
            Err(_) => return false,
        };
        for r in 0..self.dim {
            for c in 0..self.dim {
                let expected = if r == c { 1.0 } else { 0.0 };
                if (prod.get(r, c) - expected).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Embeds this operator on the given target qubits of a larger space,
    /// acting as the identity elsewhere. `targets[i]` carries local bit `i`.
    pub fn embed(&self, targets: &[usize], total_qubits: usize) -> Result<Self> {
        validate_targets(targets, total_qubits, self.dim)?;
        let full_dim = 1usize << total_qubits;
        let offsets = bit_offsets(targets);
        let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
        let mut entries = vec![Complex64::ZERO; full_dim * full_dim];
        for base in 0..full_dim {
            if base & mask != 0 {
                continue;
            }
            for (r, &ro) in offsets.iter().enumerate() {
                for (c, &co) in offsets.iter().enumerate() {
                    entries[(base | ro) * full_dim + (base | co)] = self.get(r, c);
                }
            }
        }
        Self::new(full_dim, entries)
    }
}

/// The t-qubit QFT matrix: |j⟩ → M^{-1/2} Σ_m e^{2πi jm/M} |m⟩.
pub fn qft_matrix(num_qubits: usize) -> Result<UnitaryMatrix> {
    if num_qubits == 0 {
        return Err(Error::QubitIndex("QFT register must be nonempty".into()));
    }
    let m = 1usize << num_qubits;
    UnitaryMatrix::from_fn(m, |row, col| {
        let phase = 2.0 * PI * (row as f64) * (col as f64) / m as f64;
        Complex64::from_polar(1.0 / (m as f64).sqrt(), phase)
    })
}

/// Dense quantum state over `num_qubits` qubits plus named register ranges.
#[derive(Debug, Clone)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
    register_map: BTreeMap<String, Range<usize>>,
}

impl QuantumState {
    /// The all-zeros computational basis state |0…0⟩.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; 1usize << num_qubits];
        amplitudes[0] = Complex64::ONE;
        Self {
            num_qubits,
            amplitudes,
            register_map: BTreeMap::new(),
        }
    }

    /// Builds a state from explicit amplitudes; must be unit norm within 1e-9.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "expected {} amplitudes for {num_qubits} qubits, got {}",
                1usize << num_qubits,
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "state norm² is {norm}, not 1"
            )));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
            register_map: BTreeMap::new(),
        })
    }

    /// Names a contiguous qubit range, e.g. `sample`, `arith`, `phase`.
    pub fn with_register(mut self, name: &str, range: Range<usize>) -> Result<Self> {
        if range.end > self.num_qubits || range.start >= range.end {
            return Err(Error::QubitIndex(format!(
                "register {name} range {range:?} out of bounds for {} qubits",
                self.num_qubits
            )));
        }
        self.register_map.insert(name.to_string(), range);
        Ok(self)
    }

    pub fn register(&self, name: &str) -> Option<Range<usize>> {
        self.register_map.get(name).cloned()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `u` to the target qubits, identity elsewhere.
    pub fn apply_unitary(&mut self, u: &UnitaryMatrix, targets: &[usize]) -> Result<()> {
        self.apply_inner(u, targets, None)
    }

    /// Applies `u` to the target qubits on the subspace where `control` is 1.
    pub fn apply_controlled(
        &mut self,
        u: &UnitaryMatrix,
        targets: &[usize],
        control: usize,
    ) -> Result<()> {
        if control >= self.num_qubits {
            return Err(Error::QubitIndex(format!(
                "control qubit {control} out of range"
            )));
        }
        if targets.contains(&control) {
            return Err(Error::QubitIndex(format!(
                "control qubit {control} is also a target"
            )));
        }
        self.apply_inner(u, targets, Some(control))
    }

    fn apply_inner(
        &mut self,
        u: &UnitaryMatrix,
        targets: &[usize],
        control: Option<usize>,
    ) -> Result<()> {
        validate_targets(targets, self.num_qubits, u.dim())?;
        let dim = u.dim();
        let offsets = bit_offsets(targets);
        let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
        let control_bit = control.map(|c| 1usize << c).unwrap_or(0);
        let mut scratch = vec![Complex64::ZERO; dim];
        for base in 0..self.amplitudes.len() {
            if base & mask != 0 || (base & control_bit) != control_bit {
                continue;
            }
            for (s, &off) in scratch.iter_mut().zip(&offsets) {
                *s = self.amplitudes[base | off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let row = &u.entries[r * dim..(r + 1) * dim];
                let mut acc = Complex64::ZERO;
                for (e, s) in row.iter().zip(&scratch) {
                    acc += e * s;
                }
                self.amplitudes[base | off] = acc;
            }
        }
        Ok(())
    }

    /// Inverse QFT on the phase register (adjoint of [`qft_matrix`]).
    pub fn inverse_qft(&mut self, phase_qubits: &[usize]) -> Result<()> {
        let qft = qft_matrix(phase_qubits.len())?;
        self.apply_unitary(&qft.adjoint(), phase_qubits)
    }

    /// Exact marginal Born distribution over the listed qubits, with
    /// `qubits[i]` as bit `i` of the outcome index.
    pub fn measurement_distribution(&self, qubits: &[usize]) -> Result<DiscreteDistribution> {
        validate_targets(qubits, self.num_qubits, 1usize << qubits.len())?;
        let mut probs = vec![0.0f64; 1usize << qubits.len()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut out = 0usize;
            for (i, &q) in qubits.iter().enumerate() {
                out |= ((idx >> q) & 1) << i;
            }
            probs[out] += p;
        }
        DiscreteDistribution::new(probs)
    }
}

fn validate_targets(targets: &[usize], num_qubits: usize, dim: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::QubitIndex("empty qubit list".into()));
    }
    if dim != 1usize << targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {dim} does not match {} target qubits",
            targets.len()
        )));
    }
    let mut seen = vec![false; num_qubits];
    for &t in targets {
        if t >= num_qubits {
            return Err(Error::QubitIndex(format!(
                "qubit {t} out of range for {num_qubits}-qubit state"
            )));
        }
        if seen[t] {
            return Err(Error::QubitIndex(format!("duplicate qubit {t}")));
        }
        seen[t] = true;
    }
    Ok(())
}

/// For each local index `j`, the global bit pattern of the target qubits.
fn bit_offsets(targets: &[usize]) -> Vec<usize> {
    let dim = 1usize << targets.len();
    (0..dim)
        .map(|j| {
            targets
                .iter()
                .enumerate()
                .filter(|(i, _)| (j >> i) & 1 == 1)
                .map(|(_, &t)| 1usize << t)
                .sum()
        })
        .collect()
}
