//! Closed-form oracle model of canonical amplitude estimation.
//!
//! Instead of simulating the circuit, this path evaluates the exact outcome
//! law of phase-estimation QAE for a known amplitude `a` and samples from
//! it. With θ = arcsin√a and ω = Mθ/π, the measured phase index m follows
//!
//! ```text
//! P(m) = ½·F_M(m − ω) + ½·F_M(m + ω),   F_M(x) = sin²(πx) / (M² sin²(πx/M)),
//! ```
//!
//! indices mod M and F_M extended by its limit 1 at x ≡ 0 (mod M). The
//! estimate is â = sin²(πm/M). Each run costs M Grover iterations, and a
//! k-run median drives the failure probability below exp(−0.24k).
//!
//! The module also derives the (M, k) schedules used everywhere else and
//! keeps the [`QueryLedger`] that benchmark comparisons are built on.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{ClipParams, DiscreteDistribution, JointTable, Stratum};
use crate::error::{Error, Result};

/// Which estimator a query count belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Classical,
    Quantum,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Quantum => "quantum",
        }
    }
}

/// Running oracle/sample counts keyed by (method, test, stratum).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLedger {
    counts: BTreeMap<(Method, u64, u64), u64>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, method: Method, test_id: u64, stratum_id: u64, queries: u64) {
        *self.counts.entry((method, test_id, stratum_id)).or_insert(0) += queries;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn total_for(&self, method: Method) -> u64 {
        self.counts
            .iter()
            .filter(|((m, _, _), _)| *m == method)
            .map(|(_, &v)| v)
            .sum()
    }

    /// Number of distinct test ids recorded for a method.
    pub fn num_tests(&self, method: Method) -> usize {
        let mut last = None;
        let mut n = 0;
        for &(m, test, _) in self.counts.keys() {
            if m == method && last != Some(test) {
                last = Some(test);
                n += 1;
            }
        }
        n
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Method, u64, u64), &u64)> {
        self.counts.iter()
    }

    /// Folds another ledger into this one (thread-local merge).
    pub fn merge(&mut self, other: &QueryLedger) {
        for (&key, &v) in &other.counts {
            *self.counts.entry(key).or_insert(0) += v;
        }
    }
}

/// The (M, k, L, τ, δ) parameter bundle a single estimator call carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaeSchedule {
    /// Grover iterations per run; always a power of two, ≥ 2.
    pub m: u64,
    /// Median-amplification runs.
    pub k: u32,
    /// Log-ratio clip bound in bits.
    pub l: f64,
    /// Target precision in bits, when the schedule was derived from one.
    pub tau: Option<f64>,
    /// Confidence parameter, when `k` was derived rather than fixed.
    pub delta: Option<f64>,
}

impl QaeSchedule {
    /// Worst-case schedule: M = 2^⌈log₂⌈4πL/τ⌉⌉ (so M ≤ 2⌈4πL/τ⌉) and
    /// k = ⌈5 ln(1/δ)⌉ median rounds.
    pub fn from_precision(tau: f64, delta: f64, l: f64) -> Result<Self> {
        check_positive(tau, "tau")?;
        check_positive(l, "L")?;
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be in (0, 1), got {delta}"
            )));
        }
        let m = next_pow2_at_least((4.0 * PI * l / tau).ceil());
        let k = (5.0 * (1.0 / delta).ln()).ceil().max(1.0) as u32;
        Ok(Self {
            m,
            k,
            l,
            tau: Some(tau),
            delta: Some(delta),
        })
    }

    /// Empirical schedule used by the benchmarks: M = ⌈2πL/τ⌉ rounded up to
    /// the next power of two (half the worst-case bound) with a fixed shot
    /// count instead of a derived one.
    pub fn empirical(tau: f64, l: f64, shots: u32) -> Result<Self> {
        check_positive(tau, "tau")?;
        check_positive(l, "L")?;
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be ≥ 1".into()));
        }
        Ok(Self {
            m: empirical_m(tau, l),
            k: shots,
            l,
            tau: Some(tau),
            delta: None,
        })
    }

    /// Oracle queries consumed by one call: M Grover iterations × k runs.
    pub fn queries(&self) -> u64 {
        self.m * self.k as u64
    }
}

/// ⌈2πL/τ⌉ rounded up to the next power of two.
pub fn empirical_m(tau: f64, l: f64) -> u64 {
    next_pow2_at_least((2.0 * PI * l / tau).ceil())
}

fn next_pow2_at_least(x: f64) -> u64 {
    (x.max(2.0) as u64).next_power_of_two()
}

fn check_positive(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )));
    }
    Ok(())
}

/// F_M(x) = sin²(πx)/(M² sin²(πx/M)), periodic in M, with F_M(0) = 1.
///
/// Both sines are evaluated through the exact distance from x to the
/// nearest multiple of M (and of 1), so the kernel stays precise when the
/// phase lands within an ulp of the outcome grid.
fn phase_kernel(x: f64, m: f64) -> f64 {
    let r = x.rem_euclid(m);
    let dist = r.min(m - r);
    let denom = (PI * dist / m).sin();
    if denom == 0.0 {
        return 1.0;
    }
    let frac = dist.fract();
    let numer = (PI * frac.min(1.0 - frac)).sin();
    (numer * numer) / (m * m * denom * denom)
}

/// Exact outcome distribution of canonical QAE over m ∈ {0..M−1} for a
/// marked-state probability `a`. Any integer M ≥ 2 is accepted; canonical
/// QAE itself uses powers of two, which [`QaeSchedule`] enforces.
pub fn closed_form_distribution(a: f64, m: u64) -> Result<DiscreteDistribution> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!(
            "amplitude a must be in [0, 1], got {a}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("M must be ≥ 2, got {m}")));
    }
    let m_usize = m as usize;
    // a = 0 concentrates on outcome 0; a = 1 with M even on M/2.
    if a == 0.0 || (a == 1.0 && m % 2 == 0) {
        let peak = if a == 0.0 { 0 } else { m_usize / 2 };
        let mut probs = vec![0.0; m_usize];
        probs[peak] = 1.0;
        return DiscreteDistribution::new(probs);
    }
    let mf = m as f64;
    let omega = mf * a.sqrt().asin() / PI;
    let probs: Vec<f64> = (0..m_usize)
        .map(|k| {
            let kf = k as f64;
            0.5 * (phase_kernel(kf - omega, mf) + phase_kernel(kf + omega, mf))
        })
        .collect();
    DiscreteDistribution::new(probs)
}

/// Maps a phase outcome to its amplitude estimate â = sin²(πm/M).
pub fn amplitude_from_outcome(outcome: u64, m: u64) -> f64 {
    let s = (PI * outcome as f64 / m as f64).sin();
    s * s
}

/// Draws `shots` amplitude estimates from the closed-form law.
pub fn sample_amplitude_estimates(
    a: f64,
    m: u64,
    shots: u32,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let dist = closed_form_distribution(a, m)?;
    let sampler = dist.sampler();
    Ok((0..shots)
        .map(|_| amplitude_from_outcome(sampler.sample(rng) as u64, m))
        .collect())
}

/// Lower median of an unsorted value list.
pub(crate) fn lower_median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN"));
    values[(values.len() - 1) / 2]
}

/// One scheduled estimator call: k runs of M-iteration QAE, median of the
/// â values, and the query count k·M.
pub fn sample_estimate(
    a: f64,
    schedule: &QaeSchedule,
    rng: &mut impl Rng,
) -> Result<(f64, u64)> {
    let mut estimates = sample_amplitude_estimates(a, schedule.m, schedule.k, rng)?;
    Ok((lower_median(&mut estimates), schedule.queries()))
}

/// Clipped-KL estimate for a known pair (p, q): encodes a = E_p[g_L]
/// analytically, runs scheduled QAE sampling, and maps back by 2L·â − L.
/// Queries are charged to `(Quantum, test_id, stratum_id)`.
#[allow(clippy::too_many_arguments)]
pub fn qkla_estimate(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    clip: ClipParams,
    schedule: &QaeSchedule,
    rng: &mut impl Rng,
    ledger: &mut QueryLedger,
    test_id: u64,
    stratum_id: u64,
) -> Result<f64> {
    let a = p.amplitude_encoding(q, clip)?;
    let (a_hat, queries) = sample_estimate(a, schedule, rng)?;
    ledger.record(Method::Quantum, test_id, stratum_id, queries);
    Ok(2.0 * clip.l() * a_hat - clip.l())
}

/// Stratified CMI estimator over a 3-variable (X, Y, Z) joint: one QKLA
/// call per positive-mass stratum at confidence δ/|Z₊|, aggregated with the
/// exact stratum weights p(z).
pub fn qcmie_estimate(
    joint: &JointTable,
    clip: ClipParams,
    tau: f64,
    delta: f64,
    rng: &mut impl Rng,
    ledger: &mut QueryLedger,
    test_id: u64,
) -> Result<f64> {
    let strata = joint.strata()?;
    let per_stratum_delta = delta / strata.len() as f64;
    let schedule = QaeSchedule::from_precision(tau, per_stratum_delta, clip.l())?;
    qcmie_over_strata(&strata, clip, &schedule, rng, ledger, test_id)
}

/// CMI estimation over precomputed strata with one shared schedule; this is
/// the engine behind both the confidence-derived mode above and the
/// fixed-shot empirical mode the PC benchmarks use.
pub fn qcmie_over_strata(
    strata: &[Stratum],
    clip: ClipParams,
    schedule: &QaeSchedule,
    rng: &mut impl Rng,
    ledger: &mut QueryLedger,
    test_id: u64,
) -> Result<f64> {
    let mut estimate = 0.0;
    for (idx, stratum) in strata.iter().enumerate() {
        let d_hat = qkla_estimate(
            &stratum.joint_xy,
            &stratum.product_xy,
            clip,
            schedule,
            rng,
            ledger,
            test_id,
            idx as u64,
        )?;
        estimate += stratum.weight * d_hat;
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn schedule_reference_values() {
        // empirical M for L = 3: the per-test M column of the PC benchmark
        for (tau, m) in [
            (0.05, 512),
            (0.03, 1024),
            (0.02, 1024),
            (0.014, 2048),
            (0.01, 2048),
            (0.007, 4096),
            (0.005, 4096),
            (0.003, 8192),
            (0.002, 16384),
            (0.001, 32768),
        ] {
            assert_eq!(empirical_m(tau, 3.0), m, "tau={tau}");
        }

        let s = QaeSchedule::from_precision(0.05, 0.1, 1.0).unwrap();
        assert_eq!((s.m, s.k), (256, 12));
        // M stays below twice the raw bound
        assert!(s.m <= 2 * (4.0 * PI * 1.0 / 0.05).ceil() as u64);

        let e_inv = QaeSchedule::from_precision(0.1, (-1.0f64).exp(), 1.0).unwrap();
        assert_eq!(e_inv.k, 5);

        let emp = QaeSchedule::empirical(0.005, 3.0, 5).unwrap();
        assert_eq!((emp.m, emp.k, emp.queries()), (4096, 5, 20480));

        assert!(QaeSchedule::from_precision(-1.0, 0.5, 1.0).is_err());
        assert!(QaeSchedule::from_precision(0.1, 1.5, 1.0).is_err());
        assert!(QaeSchedule::empirical(0.1, 1.0, 0).is_err());
    }

    #[test]
    fn closed_form_certainty_cases() {
        let d0 = closed_form_distribution(0.0, 32).unwrap();
        assert_eq!(d0.prob(0), 1.0);
        let d1 = closed_form_distribution(1.0, 32).unwrap();
        assert_eq!(d1.prob(16), 1.0);
        assert!(closed_form_distribution(1.2, 32).is_err());
        assert!(closed_form_distribution(0.5, 1).is_err());
    }

    #[test]
    fn closed_form_normalization_and_symmetry() {
        for &m in &[8u64, 32, 67, 256, 1024] {
            for &a in &[0.01, 0.3, 0.5, 0.571875, 0.99] {
                let d = closed_form_distribution(a, m).unwrap();
                let total: f64 = d.probs().iter().sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                // symmetric under m ↔ M−m away from the endpoints
                for k in 1..(m as usize) {
                    assert_abs_diff_eq!(
                        d.prob(k),
                        d.prob(m as usize - k),
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn expected_amplitude_bias_bounded_on_grid() {
        for &m in &[32u64, 128] {
            let bound = 2.0 * PI / m as f64 + (PI / m as f64).powi(2);
            let mut a: f64 = 0.0;
            while a <= 1.0 + 1e-9 {
                let d = closed_form_distribution(a.min(1.0), m).unwrap();
                let mean: f64 = d
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| p * amplitude_from_outcome(k as u64, m))
                    .sum();
                assert!(
                    (mean - a.min(1.0)).abs() <= bound,
                    "M={m}, a={a}: bias {} exceeds {bound}",
                    (mean - a.min(1.0)).abs()
                );
                a += 0.05;
            }
        }
    }

    #[test]
    fn coverage_matches_qae_error_bound() {
        // Pr[|â − a| ≤ 2π√(a(1−a))/M + π²/M²] ≥ 8/π², checked by Monte
        // Carlo at a = 0.3, M = 64.
        let (a, m) = (0.3, 64u64);
        let bound = 2.0 * PI * (a * (1.0 - a) as f64).sqrt() / m as f64
            + PI * PI / (m * m) as f64;
        let mut rng = derive_rng(77, &[0]);
        let dist = closed_form_distribution(a, m).unwrap();
        let sampler = dist.sampler();
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| {
                let est = amplitude_from_outcome(sampler.sample(&mut rng) as u64, m);
                (est - a).abs() <= bound
            })
            .count();
        let coverage = hits as f64 / trials as f64;
        assert!(
            coverage >= 8.0 / (PI * PI),
            "coverage {coverage} below 8/π²"
        );
    }

    #[test]
    fn median_amplification_envelope() {
        // Empirical failure of the k-shot median stays under exp(−0.24 k).
        // At a = 0.5 the phase is exactly on the grid for M divisible by 4,
        // so also exercise an off-grid amplitude.
        let m = 32u64;
        for &a in &[0.5, 0.3] {
            let bound = 2.0 * PI * (a * (1.0 - a) as f64).sqrt() / m as f64
                + PI * PI / (m * m) as f64;
            let dist = closed_form_distribution(a, m).unwrap();
            let sampler = dist.sampler();
            let mut rng = derive_rng(77, &[1]);
            for &k in &[1usize, 3, 5, 9, 15] {
                let trials = 20_000;
                let failures = (0..trials)
                    .filter(|_| {
                        let mut vals: Vec<f64> = (0..k)
                            .map(|_| amplitude_from_outcome(sampler.sample(&mut rng) as u64, m))
                            .collect();
                        (lower_median(&mut vals) - a).abs() > bound
                    })
                    .count();
                let rate = failures as f64 / trials as f64;
                let envelope = (-0.24 * k as f64).exp();
                assert!(
                    rate <= envelope,
                    "a={a}, k={k}: failure rate {rate} above envelope {envelope}"
                );
            }
        }
    }

    #[test]
    fn sample_estimate_basics() {
        let schedule = QaeSchedule {
            m: 32,
            k: 5,
            l: 1.0,
            tau: None,
            delta: None,
        };
        let mut rng = derive_rng(77, &[2]);
        let (est, queries) = sample_estimate(0.0, &schedule, &mut rng).unwrap();
        assert_eq!(est, 0.0);
        assert_eq!(queries, 160);

        // a = 1/2 with M ≡ 0 mod 4: the grid contains 1/2 exactly
        let (est, _) = sample_estimate(0.5, &schedule, &mut rng).unwrap();
        assert_abs_diff_eq!(est, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let run = |seed: u64| {
            let mut rng = derive_rng(seed, &[3]);
            sample_amplitude_estimates(0.37, 1024, 50, &mut rng).unwrap()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn qkla_estimate_zero_divergence_and_coverage() {
        use crate::distributions::DiscreteDistribution;
        let p = DiscreteDistribution::new(vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let clip = ClipParams::new(1.0).unwrap();
        // p = q: a = 1/2; M divisible by 4 snaps the output to exactly 0
        let schedule = QaeSchedule::empirical(0.05, 1.0, 5).unwrap();
        let mut rng = derive_rng(77, &[4]);
        let mut ledger = QueryLedger::new();
        let est = qkla_estimate(&p, &p, clip, &schedule, &mut rng, &mut ledger, 0, 0).unwrap();
        assert_abs_diff_eq!(est, 0.0, epsilon = 1e-12);
        assert_eq!(ledger.total_for(Method::Quantum), schedule.queries());

        // Thm-style coverage: |D̂ − D_KL,L| ≤ τ with frequency ≥ 1 − δ
        let (tau, delta, l) = (0.05, 0.1, 1.0);
        let clip = ClipParams::new(l).unwrap();
        let schedule = QaeSchedule::from_precision(tau, delta, l).unwrap();
        let mut failures = 0;
        let runs = 2000;
        for i in 0..runs {
            let mut rng = derive_rng(78, &[i]);
            let q = DiscreteDistribution::new(vec![0.25, 0.3, 0.25, 0.2]).unwrap();
            let truth = p.clipped_kl(&q, clip).unwrap();
            let mut ledger = QueryLedger::new();
            let est =
                qkla_estimate(&p, &q, clip, &schedule, &mut rng, &mut ledger, 0, 0).unwrap();
            if (est - truth).abs() > tau {
                failures += 1;
            }
        }
        assert!(
            (failures as f64 / runs as f64) <= delta,
            "failure rate {} above {delta}",
            failures as f64 / runs as f64
        );
    }

    #[test]
    fn qcmie_on_conditionally_independent_joint() {
        let pz = [0.4, 0.6];
        let px_z = [[0.3, 0.7], [0.8, 0.2]];
        let py_z = [[0.5, 0.5], [0.1, 0.9]];
        let mut cells = vec![0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    cells[(x * 2 + y) * 2 + z] = pz[z] * px_z[z][x] * py_z[z][y];
                }
            }
        }
        let joint = JointTable::new(cells, vec![2, 2, 2]).unwrap();
        let clip = ClipParams::new(3.0).unwrap();
        let mut rng = derive_rng(77, &[5]);
        let mut ledger = QueryLedger::new();
        let est =
            qcmie_estimate(&joint, clip, 0.01, 0.05, &mut rng, &mut ledger, 0).unwrap();
        assert!(est.abs() < 0.01, "estimate {est} not near 0");

        // ledger arithmetic: |Z₊| strata × k × M each
        let strata = joint.strata().unwrap();
        let schedule =
            QaeSchedule::from_precision(0.01, 0.05 / strata.len() as f64, 3.0).unwrap();
        assert_eq!(
            ledger.total_for(Method::Quantum),
            strata.len() as u64 * schedule.queries()
        );
    }

    #[test]
    fn qcmie_error_bound_monte_carlo() {
        // |Î − I(X;Y|Z)| ≤ τ + max_z |η_L^(z)| with frequency ≥ 1 − δ
        let (tau, delta) = (0.05, 0.1);
        let clip = ClipParams::new(1.0).unwrap();
        let mut failures = 0;
        let runs = 400;
        for i in 0..runs {
            let mut rng = derive_rng(79, &[i]);
            let w: Vec<f64> = (0..8)
                .map(|_| {
                    let u: f64 = rng.random::<f64>();
                    -(1.0 - u).ln() + 1e-3
                })
                .collect();
            let total: f64 = w.iter().sum();
            let joint =
                JointTable::new(w.iter().map(|v| v / total).collect(), vec![2, 2, 2]).unwrap();
            let truth = joint.conditional_mutual_information().unwrap();
            let max_eta = joint
                .strata()
                .unwrap()
                .iter()
                .map(|s| {
                    let kl = s.joint_xy.kl_divergence(&s.product_xy).unwrap();
                    let ckl = s.joint_xy.clipped_kl(&s.product_xy, clip).unwrap();
                    (kl - ckl).abs()
                })
                .fold(0.0f64, f64::max);
            let mut ledger = QueryLedger::new();
            let est =
                qcmie_estimate(&joint, clip, tau, delta, &mut rng, &mut ledger, 0).unwrap();
            if (est - truth).abs() > tau + max_eta {
                failures += 1;
            }
        }
        assert!(
            (failures as f64 / runs as f64) <= delta,
            "failure rate {} above {delta}",
            failures as f64 / runs as f64
        );
    }

    #[test]
    fn ledger_merge_and_counts() {
        let mut a = QueryLedger::new();
        a.record(Method::Quantum, 0, 0, 100);
        a.record(Method::Quantum, 0, 1, 100);
        a.record(Method::Classical, 1, 0, 800);
        let mut b = QueryLedger::new();
        b.record(Method::Quantum, 0, 0, 50);
        a.merge(&b);
        assert_eq!(a.total(), 1050);
        assert_eq!(a.total_for(Method::Quantum), 250);
        assert_eq!(a.num_tests(Method::Quantum), 1);
        assert_eq!(a.num_tests(Method::Classical), 1);
    }
}
