//! Gate-level construction of the amplitude-encoding unitary and canonical
//! QAE on the state-vector simulator.
//!
//! Register layout, little-endian: sample qubits `0..n_s`, arithmetic
//! register `n_s..n_s+b`, the amplitude ancilla at `n_s+b`, and for QAE a
//! `t`-qubit phase register above that. The composed operator is
//!
//! ```text
//! A = O_log† · R_y(2 arcsin √g(·)) · O_log · (prep ⊗ I)
//! ```
//!
//! where `O_log` XOR-writes the fixed-point code of the clipped log-ratio
//! into the arithmetic register and the uniformly controlled rotation moves
//! g = (ℓ + L)/(2L) onto the ancilla's |1⟩ probability. The uncomputation
//! step disentangles the arithmetic register exactly, so the ancilla-|1⟩
//! probability of A|0⟩ is E_p[g̃_L] with the codec-quantized values g̃.

use num_complex::Complex64;
use rand::Rng;

use crate::distributions::{ClipParams, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::qae_model::{amplitude_from_outcome, lower_median};
use crate::statevector::{QuantumState, UnitaryMatrix};

/// Fixed-point discretization of [−L, L] into 2^bits levels.
///
/// Codes are round-to-nearest: `encode(v) = round((v + L)/(2L) · 2^b)`
/// clamped to the code range, and `decode(c) = −L + c·2L/2^b`, so the
/// amplitude fraction `g = (decode(c) + L)/(2L)` is exactly `c/2^b`.
/// Worst-case representation error is one step, 2L/2^b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointCodec {
    l: f64,
    bits: u32,
}

impl FixedPointCodec {
    pub fn new(l: f64, bits: u32) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "clip bound must be positive, got {l}"
            )));
        }
        if bits == 0 || bits > 20 {
            return Err(Error::InvalidParameter(format!(
                "arithmetic register width {bits} outside 1..=20"
            )));
        }
        Ok(Self { l, bits })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    /// Quantization step 2L/2^b.
    pub fn step(&self) -> f64 {
        2.0 * self.l / self.levels() as f64
    }

    pub fn encode(&self, value: f64) -> usize {
        let code = ((value + self.l) / self.step()).round();
        (code.max(0.0) as usize).min(self.levels() - 1)
    }

    pub fn decode(&self, code: usize) -> f64 {
        -self.l + code as f64 * self.step()
    }

    /// The rotation fraction g ∈ [0, 1] for a code.
    pub fn g_value(&self, code: usize) -> f64 {
        ((self.decode(code) + self.l) / (2.0 * self.l)).clamp(0.0, 1.0)
    }

    pub fn clip_params(&self) -> ClipParams {
        ClipParams::with_bits(self.l, self.bits).expect("codec params are valid")
    }
}

/// The assembled estimator circuit on sample ⊗ arith ⊗ ancilla.
#[derive(Debug, Clone)]
pub struct QklaCircuit {
    prep_oracle: UnitaryMatrix,
    log_oracle: UnitaryMatrix,
    controlled_rotation: UnitaryMatrix,
    a_operator: UnitaryMatrix,
    grover: UnitaryMatrix,
    codec: FixedPointCodec,
    sample_qubits: usize,
    /// Ancilla-|1⟩ probability of A|0⟩: E_p[g̃_L] with quantized ℓ values.
    amplitude: f64,
    /// The clipped KL the circuit represents: 2L·E_p[g̃_L] − L.
    quantized_target: f64,
}

impl QklaCircuit {
    pub fn prep_oracle(&self) -> &UnitaryMatrix {
        &self.prep_oracle
    }

    pub fn log_oracle(&self) -> &UnitaryMatrix {
        &self.log_oracle
    }

    pub fn controlled_rotation(&self) -> &UnitaryMatrix {
        &self.controlled_rotation
    }

    pub fn a_operator(&self) -> &UnitaryMatrix {
        &self.a_operator
    }

    pub fn grover(&self) -> &UnitaryMatrix {
        &self.grover
    }

    pub fn codec(&self) -> FixedPointCodec {
        self.codec
    }

    pub fn sample_qubits(&self) -> usize {
        self.sample_qubits
    }

    /// Qubits in the sample ⊗ arith ⊗ ancilla block.
    pub fn work_qubits(&self) -> usize {
        self.sample_qubits + self.codec.bits() as usize + 1
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn quantized_target(&self) -> f64 {
        self.quantized_target
    }

    /// Probability mass of A|0⟩ outside the arith = 0 subspace; exact
    /// uncomputation leaves this at numerical zero.
    pub fn uncomputation_residual(&self) -> f64 {
        let n_s = self.sample_qubits;
        let arith_mask = (self.codec.levels() - 1) << n_s;
        self.a_operator
            .column(0)
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & arith_mask != 0)
            .map(|(_, amp)| amp.norm_sqr())
            .sum()
    }
}

/// Extends (√p(x))ₓ to a unitary by Gram–Schmidt against the standard basis.
///
/// The first column is the target state; candidate columns e₀, e₁, … are
/// orthogonalized in order and dropped when their residual norm falls below
/// 1e-9 (degenerate p entries make some candidates dependent).
pub fn build_prep_oracle(p: &DiscreteDistribution) -> Result<UnitaryMatrix> {
    let dim = p.alphabet_size();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "alphabet size {dim} is not a power of two"
        )));
    }
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    cols.push(p.probs().iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect());
    let mut candidate = 0usize;
    while cols.len() < dim {
        if candidate >= dim {
            return Err(Error::InvalidParameter(
                "Gram-Schmidt completion ran out of basis vectors".into(),
            ));
        }
        let mut v = vec![Complex64::ZERO; dim];
        v[candidate] = Complex64::ONE;
        candidate += 1;
        for col in &cols {
            let inner: Complex64 = col.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ci) in v.iter_mut().zip(col) {
                *vi -= inner * ci;
            }
        }
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    UnitaryMatrix::from_fn(dim, |r, c| cols[c][r])
}

/// Reversible XOR table |w⟩|r⟩ → |w⟩|r ⊕ code(ℓ_L(w))⟩ on sample ⊗ arith.
///
/// A permutation matrix and self-inverse; applying it to |r⟩ = |0⟩ writes
/// the fixed-point code of the clipped log-ratio.
pub fn build_log_oracle(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    codec: FixedPointCodec,
) -> Result<UnitaryMatrix> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            left: p.alphabet_size(),
            right: q.alphabet_size(),
        });
    }
    let n_w = p.alphabet_size();
    if !n_w.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "alphabet size {n_w} is not a power of two"
        )));
    }
    let clip = ClipParams::new(codec.l())?;
    let codes: Vec<usize> = (0..n_w)
        .map(|w| Ok(codec.encode(p.clipped_log_ratio(q, w, clip)?)))
        .collect::<Result<_>>()?;
    let dim = n_w * codec.levels();
    let mut entries = vec![Complex64::ZERO; dim * dim];
    for w in 0..n_w {
        for r in 0..codec.levels() {
            let col = w | (r << n_w.trailing_zeros());
            let row = w | ((r ^ codes[w]) << n_w.trailing_zeros());
            entries[row * dim + col] = Complex64::ONE;
        }
    }
    UnitaryMatrix::new(dim, entries)
}

/// Uniformly controlled R_y(2 arcsin √g(v)) on arith ⊗ ancilla: for each
/// arithmetic code v the ancilla rotates |0⟩ → √(1−g)|0⟩ + √g|1⟩.
pub fn build_controlled_rotation(codec: FixedPointCodec) -> UnitaryMatrix {
    let levels = codec.levels();
    let dim = 2 * levels;
    let mut entries = vec![Complex64::ZERO; dim * dim];
    for v in 0..levels {
        let g = codec.g_value(v);
        let (s, c) = (g.sqrt(), (1.0 - g).sqrt());
        // local index: arith bits low, ancilla is the top bit
        let i0 = v;
        let i1 = v | levels;
        entries[i0 * dim + i0] = Complex64::new(c, 0.0);
        entries[i1 * dim + i0] = Complex64::new(s, 0.0);
        entries[i0 * dim + i1] = Complex64::new(-s, 0.0);
        entries[i1 * dim + i1] = Complex64::new(c, 0.0);
    }
    UnitaryMatrix::new(dim, entries).expect("rotation dims are valid")
}

/// Composes A = O_log† · R · O_log · (prep ⊗ I) and the Grover iterate
/// G = −A S₀ A† S_χ on the full sample ⊗ arith ⊗ ancilla space.
pub fn assemble_a_operator(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    codec: FixedPointCodec,
) -> Result<QklaCircuit> {
    let prep = build_prep_oracle(p)?;
    let log_oracle = build_log_oracle(p, q, codec)?;
    let rotation = build_controlled_rotation(codec);

    let n_s = p.alphabet_size().trailing_zeros() as usize;
    let b = codec.bits() as usize;
    let total = n_s + b + 1;
    let sample_targets: Vec<usize> = (0..n_s).collect();
    let sample_arith: Vec<usize> = (0..n_s + b).collect();
    let arith_ancilla: Vec<usize> = (n_s..total).collect();

    let prep_full = prep.embed(&sample_targets, total)?;
    let log_full = log_oracle.embed(&sample_arith, total)?;
    let rot_full = rotation.embed(&arith_ancilla, total)?;

    let a_operator = log_full
        .adjoint()
        .matmul(&rot_full.matmul(&log_full.matmul(&prep_full)?)?)?;

    // amplitude from the actual circuit column, cross-checked in tests
    // against E_p[g̃]
    let ancilla_mask = 1usize << (total - 1);
    let amplitude: f64 = a_operator
        .column(0)
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx & ancilla_mask != 0)
        .map(|(_, amp)| amp.norm_sqr())
        .sum();
    let quantized_target = 2.0 * codec.l() * amplitude - codec.l();

    let grover = build_grover_from(&a_operator, ancilla_mask)?;

    Ok(QklaCircuit {
        prep_oracle: prep,
        log_oracle,
        controlled_rotation: rotation,
        a_operator,
        grover,
        codec,
        sample_qubits: n_s,
        amplitude,
        quantized_target,
    })
}

/// G = −A S₀ A† S_χ with S₀ = I − 2|0⟩⟨0| on the whole work register and
/// S_χ the phase flip on the ancilla-|1⟩ subspace.
pub fn build_grover(circuit: &QklaCircuit) -> UnitaryMatrix {
    circuit.grover.clone()
}

fn build_grover_from(a_op: &UnitaryMatrix, ancilla_mask: usize) -> Result<UnitaryMatrix> {
    let dim = a_op.dim();
    // A† with the S_χ sign folded into its columns, then S₀, then A, negated
    let a_dag = a_op.adjoint();
    let mut right = UnitaryMatrix::from_fn(dim, |r, c| {
        let sign = if c & ancilla_mask != 0 { -1.0 } else { 1.0 };
        a_dag.get(r, c) * sign
    })?;
    // S₀: flip the sign of row 0 (the |0…0⟩ component)
    right = UnitaryMatrix::from_fn(dim, |r, c| {
        let sign = if r == 0 { -1.0 } else { 1.0 };
        right.get(r, c) * sign
    })?;
    Ok(a_op.matmul(&right)?.scale(Complex64::new(-1.0, 0.0)))
}

/// Exact phase-register distribution of canonical QAE with M = 2^t: Hadamards
/// on the phase register, controlled G^{2^j} powers built by repeated
/// squaring, inverse QFT, and the Born distribution of the phase register.
pub fn run_canonical_qae(circuit: &QklaCircuit, t: usize) -> Result<DiscreteDistribution> {
    let mut dists = phase_distributions(circuit, &[t])?;
    Ok(dists.pop().expect("one distribution per t"))
}

/// Phase distributions for several register sizes, sharing the ladder of
/// squared Grover powers across runs.
pub fn phase_distributions(
    circuit: &QklaCircuit,
    ts: &[usize],
) -> Result<Vec<DiscreteDistribution>> {
    const QUBIT_BUDGET: usize = 22;
    let work = circuit.work_qubits();
    let max_t = ts.iter().copied().max().unwrap_or(0);
    if max_t == 0 {
        return Err(Error::InvalidParameter("need t ≥ 1".into()));
    }
    if work + max_t > QUBIT_BUDGET {
        return Err(Error::QubitIndex(format!(
            "{} qubits exceed the simulator budget of {QUBIT_BUDGET}",
            work + max_t
        )));
    }

    // G^(2^j) by repeated squaring
    let mut powers = Vec::with_capacity(max_t);
    powers.push(circuit.grover.clone());
    for j in 1..max_t {
        let prev = &powers[j - 1];
        powers.push(prev.matmul(prev)?);
    }

    let hadamard = UnitaryMatrix::from_fn(2, |r, c| {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(if r == 1 && c == 1 { -h } else { h }, 0.0)
    })?;

    let work_targets: Vec<usize> = (0..work).collect();
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        if t == 0 {
            return Err(Error::InvalidParameter("need t ≥ 1".into()));
        }
        let total = work + t;
        let phase_targets: Vec<usize> = (work..total).collect();
        let mut state = QuantumState::zero(total)
            .with_register("sample", 0..circuit.sample_qubits)?
            .with_register(
                "arith",
                circuit.sample_qubits..circuit.sample_qubits + circuit.codec.bits() as usize,
            )?
            .with_register("ancilla", work - 1..work)?
            .with_register("phase", work..total)?;
        for &q in &phase_targets {
            state.apply_unitary(&hadamard, &[q])?;
        }
        state.apply_unitary(&circuit.a_operator, &work_targets)?;
        for (j, &control) in phase_targets.iter().enumerate() {
            state.apply_controlled(&powers[j], &work_targets, control)?;
        }
        state.inverse_qft(&phase_targets)?;
        out.push(state.measurement_distribution(&phase_targets)?);
    }
    Ok(out)
}

/// Full gate-level estimate: k sampled phase outcomes at M = 2^t, median of
/// the â values, mapped back through 2L·â − L.
pub fn qkla_full_estimate(
    circuit: &QklaCircuit,
    t: usize,
    shots: u32,
    rng: &mut impl Rng,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be ≥ 1".into()));
    }
    let dist = run_canonical_qae(circuit, t)?;
    let sampler = dist.sampler();
    let m = 1u64 << t;
    let mut estimates: Vec<f64> = (0..shots)
        .map(|_| amplitude_from_outcome(sampler.sample(rng) as u64, m))
        .collect();
    let a_hat = lower_median(&mut estimates);
    Ok(2.0 * circuit.codec.l() * a_hat - circuit.codec.l())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qae_model::closed_form_distribution;
    use std::f64::consts::PI;
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;

    fn experiment_distributions() -> (DiscreteDistribution, DiscreteDistribution) {
        let p = DiscreteDistribution::new(vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let q = DiscreteDistribution::uniform(4).unwrap();
        (p, q)
    }

    fn experiment_circuit() -> QklaCircuit {
        let (p, q) = experiment_distributions();
        assemble_a_operator(&p, &q, FixedPointCodec::new(2.0, 6).unwrap()).unwrap()
    }

    #[test]
    fn codec_resolution_and_identities() {
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        assert_eq!(codec.levels(), 64);
        let step = codec.step();
        let mut v = -2.0;
        while v <= 2.0 {
            let err = (codec.decode(codec.encode(v)) - v).abs();
            assert!(err <= step, "round-trip error {err} above one step at {v}");
            v += 0.013;
        }
        // g is exactly code/2^b
        for code in [0usize, 1, 31, 63] {
            assert_abs_diff_eq!(codec.g_value(code), code as f64 / 64.0, epsilon = 1e-15);
        }
        assert!(FixedPointCodec::new(0.0, 6).is_err());
        assert!(FixedPointCodec::new(1.0, 0).is_err());
    }

    #[test]
    fn prep_oracle_columns() {
        let uniform = DiscreteDistribution::uniform(4).unwrap();
        let u = build_prep_oracle(&uniform).unwrap();
        for r in 0..4 {
            assert_abs_diff_eq!(u.get(r, 0).re, 0.5, epsilon = 1e-12);
        }
        assert!(u.is_unitary(1e-12));

        // degenerate distribution: completion skips the dependent basis vector
        let point = DiscreteDistribution::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let u = build_prep_oracle(&point).unwrap();
        assert_abs_diff_eq!(u.get(0, 0).re, 1.0, epsilon = 1e-12);
        assert!(u.is_unitary(1e-12));

        let (p, _) = experiment_distributions();
        let u = build_prep_oracle(&p).unwrap();
        for (r, &expect) in [0.4f64, 0.1, 0.1, 0.4].iter().enumerate() {
            assert_abs_diff_eq!(u.get(r, 0).re, expect.sqrt(), epsilon = 1e-12);
        }
        assert!(u.is_unitary(1e-12));

        let bad = DiscreteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(build_prep_oracle(&bad).is_err());
    }

    #[test]
    fn log_oracle_is_xor_involution_with_correct_codes() {
        let (p, q) = experiment_distributions();
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        let oracle = build_log_oracle(&p, &q, codec).unwrap();
        assert!(oracle.is_unitary(1e-12));

        // applying twice is the identity
        let twice = oracle.matmul(&oracle).unwrap();
        let id = UnitaryMatrix::identity(oracle.dim()).unwrap();
        for r in 0..oracle.dim() {
            for c in 0..oracle.dim() {
                assert!((twice.get(r, c) - id.get(r, c)).norm() < 1e-12);
            }
        }

        // codes on the zeroed arith register match direct quantization
        let clip = ClipParams::new(2.0).unwrap();
        for w in 0..4usize {
            let expected = codec.encode(p.clipped_log_ratio(&q, w, clip).unwrap());
            let col = w; // arith register starts at 0
            let hits: Vec<usize> = (0..oracle.dim())
                .filter(|&r| oracle.get(r, col).norm() > 0.5)
                .collect();
            assert_eq!(hits, vec![w | (expected << 2)]);
        }

        // p = q writes code(0) everywhere
        let same = build_log_oracle(&p, &p, codec).unwrap();
        let zero_code = codec.encode(0.0);
        for w in 0..4usize {
            let hits: Vec<usize> = (0..same.dim())
                .filter(|&r| same.get(r, w).norm() > 0.5)
                .collect();
            assert_eq!(hits, vec![w | (zero_code << 2)]);
        }
    }

    #[test]
    fn rotation_edge_codes() {
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        let rot = build_controlled_rotation(codec);
        assert!(rot.is_unitary(1e-12));
        // code 0 decodes to −L: g = 0, ancilla stays |0⟩
        assert_abs_diff_eq!(rot.get(0, 0).re, 1.0, epsilon = 1e-12);
        // the midpoint code decodes to ℓ = 0: g = 1/2
        let mid = codec.encode(0.0);
        let i0 = mid;
        let i1 = mid | codec.levels();
        assert_abs_diff_eq!(rot.get(i1, i0).re, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(rot.get(i0, i0).re, 0.5f64.sqrt(), epsilon = 1e-12);

        // top code: g = 1 − 2^-b, amplitude √g on |1⟩
        let top = codec.levels() - 1;
        let g_top = 1.0 - 1.0 / codec.levels() as f64;
        assert_abs_diff_eq!(
            rot.get(top | codec.levels(), top).re,
            g_top.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(rot.get(top, top).re, (1.0 - g_top).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn a_operator_amplitude_and_uncomputation() {
        let (p, q) = experiment_distributions();
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        let circuit = experiment_circuit();

        // E_p[g̃] from the codec table
        let clip = ClipParams::new(2.0).unwrap();
        let expected: f64 = (0..4)
            .map(|w| {
                let code = codec.encode(p.clipped_log_ratio(&q, w, clip).unwrap());
                p.prob(w) * codec.g_value(code)
            })
            .sum();
        assert_abs_diff_eq!(circuit.amplitude(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(circuit.amplitude(), 0.571875, epsilon = 1e-12);
        assert!(circuit.uncomputation_residual() < 1e-12);
        assert_abs_diff_eq!(
            circuit.quantized_target(),
            2.0 * 2.0 * 0.571875 - 2.0,
            epsilon = 1e-12
        );
        assert!(circuit.a_operator().is_unitary(1e-10));

        // p = q: every ℓ is 0, so a = 1/2 exactly
        let same = assemble_a_operator(&p, &p, codec).unwrap();
        assert_abs_diff_eq!(same.amplitude(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(same.quantized_target(), 0.0, epsilon = 1e-12);

        // degenerate p with q = p still encodes a = 1/2
        let point = DiscreteDistribution::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let deg = assemble_a_operator(&point, &point, codec).unwrap();
        assert_abs_diff_eq!(deg.amplitude(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn grover_rotates_by_twice_theta() {
        let circuit = experiment_circuit();
        let g = circuit.grover();
        assert!(g.is_unitary(1e-10));

        // On the invariant plane spanned by the good/bad components of
        // A|0⟩, G acts as a rotation by 2θ with sin²θ = a: applying G to
        // A|0⟩ and expanding in that basis must give (cos 2θ, sin 2θ).
        let a = circuit.amplitude();
        let theta = a.sqrt().asin();
        let psi = circuit.a_operator().column(0);
        let ancilla_mask = 1usize << (circuit.work_qubits() - 1);
        let dim = psi.len();
        let mut good = vec![Complex64::ZERO; dim];
        let mut bad = vec![Complex64::ZERO; dim];
        for i in 0..dim {
            if i & ancilla_mask != 0 {
                good[i] = psi[i] / Complex64::new(a.sqrt(), 0.0);
            } else {
                bad[i] = psi[i] / Complex64::new((1.0 - a).sqrt(), 0.0);
            }
        }
        // G(A|0⟩)
        let mut rotated = vec![Complex64::ZERO; dim];
        for r in 0..dim {
            let mut acc = Complex64::ZERO;
            for c in 0..dim {
                acc += g.get(r, c) * psi[c];
            }
            rotated[r] = acc;
        }
        let coeff_good: Complex64 = good.iter().zip(&rotated).map(|(b, v)| b.conj() * v).sum();
        let coeff_bad: Complex64 = bad.iter().zip(&rotated).map(|(b, v)| b.conj() * v).sum();
        // A|0⟩ = cos θ |bad⟩ + sin θ |good⟩ → G A|0⟩ = cos 3θ |bad⟩ + sin 3θ |good⟩
        assert_abs_diff_eq!(coeff_bad.re, (3.0 * theta).cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(coeff_good.re, (3.0 * theta).sin(), epsilon = 1e-10);
        assert!(coeff_bad.im.abs() < 1e-10 && coeff_good.im.abs() < 1e-10);
    }

    #[test]
    fn grover_eigenphase_at_half_amplitude() {
        // a = 1/2 → θ = π/4 → G² has eigenphase π on the invariant plane:
        // G²(A|0⟩) = −A|0⟩.
        let (p, _) = experiment_distributions();
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        let circuit = assemble_a_operator(&p, &p, codec).unwrap();
        let g2 = circuit.grover().matmul(circuit.grover()).unwrap();
        let psi = circuit.a_operator().column(0);
        for r in 0..psi.len() {
            let mut acc = Complex64::ZERO;
            for c in 0..psi.len() {
                acc += g2.get(r, c) * psi[c];
            }
            assert!((acc + psi[r]).norm() < 1e-10, "row {r}");
        }
    }

    #[test]
    fn gate_level_matches_closed_form_law() {
        let circuit = experiment_circuit();
        for t in 3..=5usize {
            let gate = run_canonical_qae(&circuit, t).unwrap();
            let closed = closed_form_distribution(circuit.amplitude(), 1 << t).unwrap();
            let max_dev = gate
                .probs()
                .iter()
                .zip(closed.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_dev < 1e-10, "t={t}: max deviation {max_dev}");
        }
    }

    #[test]
    fn experiment_peaks_at_t5() {
        let circuit = experiment_circuit();
        let dist = run_canonical_qae(&circuit, 5).unwrap();
        let mass = dist.prob(9) + dist.prob(23);
        assert!(
            (0.77..=0.81).contains(&mass),
            "joint peak mass {mass} outside [0.77, 0.81]"
        );
        // m* = round(Mθ/π) and its mirror are the two dominant outcomes
        let mut order: Vec<usize> = (0..32).collect();
        order.sort_by(|&a, &b| dist.prob(b).partial_cmp(&dist.prob(a)).unwrap());
        let mut top = [order[0], order[1]];
        top.sort_unstable();
        assert_eq!(top, [9, 23]);
    }

    #[test]
    fn integer_phase_is_certain_at_gate_level() {
        // No (p, q) pair can encode a ∈ {0, 1} (that would need
        // Σp ≤ 2^{-L}Σq < 1), so the on-grid certainty reachable at gate
        // level is a = 1/2: with M divisible by 4 the phase ω = M/4 is an
        // integer and all mass sits on the two exact outcomes.
        let (p, _) = experiment_distributions();
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        let circuit = assemble_a_operator(&p, &p, codec).unwrap();
        assert_abs_diff_eq!(circuit.amplitude(), 0.5, epsilon = 1e-14);
        let dist = run_canonical_qae(&circuit, 4).unwrap();
        assert_abs_diff_eq!(dist.prob(4), 0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(dist.prob(12), 0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(
            amplitude_from_outcome(4, 16),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn full_estimate_snaps_to_zero_at_half_amplitude() {
        let (p, _) = experiment_distributions();
        let codec = FixedPointCodec::new(2.0, 6).unwrap();
        let circuit = assemble_a_operator(&p, &p, codec).unwrap();
        // a = 1/2 and M divisible by 4: sin²(π m/M) hits 1/2 exactly
        let mut rng = derive_rng(5, &[0]);
        let est = qkla_full_estimate(&circuit, 4, 5, &mut rng).unwrap();
        assert_abs_diff_eq!(est, 0.0, epsilon = 1e-12);

        // determinism
        let mut r1 = derive_rng(6, &[1]);
        let mut r2 = derive_rng(6, &[1]);
        let circuit2 = experiment_circuit();
        assert_eq!(
            qkla_full_estimate(&circuit2, 5, 5, &mut r1).unwrap(),
            qkla_full_estimate(&circuit2, 5, 5, &mut r2).unwrap()
        );
    }

    #[test]
    fn qubit_budget_enforced() {
        let circuit = experiment_circuit();
        assert!(run_canonical_qae(&circuit, 14).is_err());
        assert!(run_canonical_qae(&circuit, 0).is_err());
    }

    #[test]
    fn success_probability_exceeds_benchmark() {
        let circuit = experiment_circuit();
        let a = circuit.amplitude();
        for t in 3..=6usize {
            let m = 1usize << t;
            let dist = run_canonical_qae(&circuit, t).unwrap();
            let hit: f64 = (0..m)
                .filter(|&k| {
                    (amplitude_from_outcome(k as u64, m as u64) - a).abs() <= PI / m as f64
                })
                .map(|k| dist.prob(k))
                .sum();
            assert!(
                hit >= 8.0 / (PI * PI),
                "t={t}: success probability {hit} below 8/π²"
            );
        }
    }
}
