//! Discrete probability machinery: distributions, joint tables, KL and
//! clipped KL, mutual information, plug-in estimators, and random instances.
//!
//! All logarithms are base 2; every information quantity is in bits. The
//! conventions for degenerate cells follow the estimator's definitions:
//! `0·log(0/·) = 0`, a `p>0, q=0` cell sends KL to +∞ and the clipped
//! log-ratio to `+L`, a `p=0, q>0` cell clips to `−L`, and a `p=q=0` cell is
//! fixed at 0.

use rand::Rng;

use crate::error::{Error, Result};

/// Probability vector over a finite indexed alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates nonnegativity and unit mass within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("distribution must have ≥ 1 outcome"));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::EmptyInput("alphabet size must be ≥ 1"));
        }
        Ok(Self {
            probs: vec![1.0 / alphabet_size as f64; alphabet_size],
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    fn check_same_alphabet(&self, other: &Self) -> Result<()> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet_size(),
                right: other.alphabet_size(),
            });
        }
        Ok(())
    }

    /// KL divergence Σ p log₂(p/q) in bits; +∞ iff supp(p) ⊄ supp(q).
    pub fn kl_divergence(&self, q: &Self) -> Result<f64> {
        self.check_same_alphabet(q)?;
        let mut total = 0.0;
        for (&pi, &qi) in self.probs.iter().zip(&q.probs) {
            if pi == 0.0 {
                continue;
            }
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            total += pi * (pi / qi).log2();
        }
        Ok(total)
    }

    /// Clipped log-ratio ℓ_L(x) = clip_L(log₂ p(x)/q(x)) ∈ [−L, L].
    pub fn clipped_log_ratio(&self, q: &Self, x: usize, clip: ClipParams) -> Result<f64> {
        self.check_same_alphabet(q)?;
        Ok(clipped_log_ratio_raw(self.probs[x], q.probs[x], clip.l()))
    }

    /// Clipped KL expectation D_{KL,L}(p‖q) = Σ p(x) ℓ_L(x) in bits.
    ///
    /// Equals `2L·E_p[g_L] − L` exactly; always finite, and can be negative.
    pub fn clipped_kl(&self, q: &Self, clip: ClipParams) -> Result<f64> {
        self.check_same_alphabet(q)?;
        let l = clip.l();
        let mut total = 0.0;
        for (&pi, &qi) in self.probs.iter().zip(&q.probs) {
            if pi == 0.0 {
                continue;
            }
            total += pi * clipped_log_ratio_raw(pi, qi, l);
        }
        Ok(total)
    }

    /// E_p[g_L] where g_L = (ℓ_L + L)/(2L) ∈ [0, 1]: the amplitude the
    /// estimator encodes. The clipped KL is `2L·a − L` for this value `a`.
    pub fn amplitude_encoding(&self, q: &Self, clip: ClipParams) -> Result<f64> {
        self.check_same_alphabet(q)?;
        let l = clip.l();
        let mut total = 0.0;
        for (&pi, &qi) in self.probs.iter().zip(&q.probs) {
            if pi == 0.0 {
                continue;
            }
            total += pi * (clipped_log_ratio_raw(pi, qi, l) + l) / (2.0 * l);
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Upper bound on the clipping difference |D_KL − D_{KL,L}|:
    /// E_p[(|ρ(X)| − L)·1{|ρ(X)| > L}] with ρ = log₂(p/q).
    ///
    /// Requires supp(p) ⊆ supp(q); otherwise the unclipped KL is +∞ and the
    /// comparison is meaningless.
    pub fn clipping_bias_bound(&self, q: &Self, clip: ClipParams) -> Result<f64> {
        self.check_same_alphabet(q)?;
        let l = clip.l();
        let mut total = 0.0;
        for (&pi, &qi) in self.probs.iter().zip(&q.probs) {
            if pi == 0.0 {
                continue;
            }
            if qi == 0.0 {
                return Err(Error::SupportViolation(
                    "supp(p) ⊄ supp(q): unclipped KL is infinite".into(),
                ));
            }
            let rho = (pi / qi).log2();
            if rho.abs() > l {
                total += pi * (rho.abs() - l);
            }
        }
        Ok(total)
    }

    /// Precomputed inverse-CDF sampler over this distribution's outcomes.
    pub fn sampler(&self) -> CdfSampler {
        CdfSampler::new(&self.probs)
    }
}

fn clipped_log_ratio_raw(p: f64, q: f64, l: f64) -> f64 {
    match (p > 0.0, q > 0.0) {
        (true, true) => (p / q).log2().clamp(-l, l),
        (true, false) => l,
        (false, true) => -l,
        // never reached under samples from p; fixed at 0 by convention
        (false, false) => 0.0,
    }
}

/// Clip bound (and optional fixed-point width) for the log-ratio encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipParams {
    l: f64,
    bits: Option<u32>,
}

impl ClipParams {
    pub fn new(l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "clip bound L must be positive, got {l}"
            )));
        }
        Ok(Self { l, bits: None })
    }

    pub fn with_bits(l: f64, bits: u32) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidParameter("fixed-point bits must be ≥ 1".into()));
        }
        let mut params = Self::new(l)?;
        params.bits = Some(bits);
        Ok(params)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn bits(&self) -> Option<u32> {
        self.bits
    }
}

/// Inverse-CDF sampler built once, then O(log n) per draw.
#[derive(Debug, Clone)]
pub struct CdfSampler {
    cdf: Vec<f64>,
}

impl CdfSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cdf.push(acc);
        }
        Self { cdf }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let target = u * self.cdf.last().copied().unwrap_or(1.0);
        self.cdf
            .partition_point(|&c| c < target)
            .min(self.cdf.len() - 1)
    }
}

/// Probability tensor over a tuple of finite variables, row-major with the
/// last variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    probs: Vec<f64>,
    cards: Vec<usize>,
}

impl JointTable {
    pub fn new(probs: Vec<f64>, cards: Vec<usize>) -> Result<Self> {
        let cells: usize = cards.iter().product();
        if cards.is_empty() || cells == 0 {
            return Err(Error::EmptyInput("joint table must have ≥ 1 variable"));
        }
        if probs.len() != cells {
            return Err(Error::DimensionMismatch(format!(
                "expected {cells} cells for cards {cards:?}, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite cell".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "joint mass is {total}, not 1"
            )));
        }
        Ok(Self { probs, cards })
    }

    /// 2-variable table from a nested row matrix `m[x][y]`.
    pub fn from_matrix(m: &[Vec<f64>]) -> Result<Self> {
        let rows = m.len();
        let cols = m.first().map(|r| r.len()).unwrap_or(0);
        if rows == 0 || cols == 0 || m.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged or empty matrix".into()));
        }
        Ok(Self::new(
            m.iter().flatten().copied().collect(),
            vec![rows, cols],
        )?)
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_variables(&self) -> usize {
        self.cards.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cell(&self, assignment: &[usize]) -> f64 {
        self.probs[self.index_of(assignment)]
    }

    fn index_of(&self, assignment: &[usize]) -> usize {
        debug_assert_eq!(assignment.len(), self.cards.len());
        let mut idx = 0;
        for (v, &card) in assignment.iter().zip(&self.cards) {
            debug_assert!(*v < card);
            idx = idx * card + v;
        }
        idx
    }

    fn unpack(&self, mut idx: usize, out: &mut [usize]) {
        for i in (0..self.cards.len()).rev() {
            out[i] = idx % self.cards[i];
            idx /= self.cards[i];
        }
    }

    /// Marginal table over the listed variables, in the listed order.
    pub fn marginal(&self, vars: &[usize]) -> Result<JointTable> {
        for &v in vars {
            if v >= self.cards.len() {
                return Err(Error::InvalidParameter(format!(
                    "variable {v} out of range for {}-variable table",
                    self.cards.len()
                )));
            }
        }
        let out_cards: Vec<usize> = vars.iter().map(|&v| self.cards[v]).collect();
        let mut out = vec![0.0; out_cards.iter().product()];
        let mut full = vec![0usize; self.cards.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            self.unpack(idx, &mut full);
            let mut o = 0usize;
            for (&v, &card) in vars.iter().zip(&out_cards) {
                o = o * card + full[v];
            }
            out[o] += p;
        }
        JointTable::new(out, out_cards)
    }

    /// Regroups a table into three variables (X, Y, Z) where Z is the
    /// mixed-radix flattening, in ascending variable order, of `z_vars`.
    pub fn regroup_xyz(&self, x: usize, y: usize, z_vars: &[usize]) -> Result<JointTable> {
        let mut seen = vec![x, y];
        seen.extend_from_slice(z_vars);
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != 2 + z_vars.len() {
            return Err(Error::InvalidParameter(
                "x, y, and z variables must be disjoint".into(),
            ));
        }
        let mut zs: Vec<usize> = z_vars.to_vec();
        zs.sort_unstable();
        let mut vars = vec![x, y];
        vars.extend_from_slice(&zs);
        let grouped = self.marginal(&vars)?;
        let z_card: usize = zs.iter().map(|&v| self.cards[v]).product::<usize>().max(1);
        JointTable::new(
            grouped.probs,
            vec![self.cards[x], self.cards[y], z_card],
        )
    }

    /// Marginal of a 2-variable table as the product of its marginals,
    /// flattened to the same (x, y) cell order.
    pub fn product_of_marginals(&self) -> Result<DiscreteDistribution> {
        if self.num_variables() != 2 {
            return Err(Error::InvalidParameter(format!(
                "expected a 2-variable table, got {}",
                self.num_variables()
            )));
        }
        let (cx, cy) = (self.cards[0], self.cards[1]);
        let mut px = vec![0.0; cx];
        let mut py = vec![0.0; cy];
        for xv in 0..cx {
            for yv in 0..cy {
                let p = self.probs[xv * cy + yv];
                px[xv] += p;
                py[yv] += p;
            }
        }
        let mut out = Vec::with_capacity(cx * cy);
        for xv in 0..cx {
            for yv in 0..cy {
                out.push(px[xv] * py[yv]);
            }
        }
        DiscreteDistribution::new(out)
    }

    /// Flattens a 2-variable table to a distribution over (x, y) cells.
    pub fn flatten(&self) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.probs.clone())
    }

    /// Mutual information I(X;Y) of a 2-variable table, in bits.
    pub fn mutual_information(&self) -> Result<f64> {
        if self.num_variables() != 2 {
            return Err(Error::InvalidParameter(format!(
                "mutual information needs a 2-variable table, got {} variables",
                self.num_variables()
            )));
        }
        self.flatten()?.kl_divergence(&self.product_of_marginals()?)
    }

    /// Conditional mutual information I(X;Y|Z) of a 3-variable table:
    /// Σ_z p(z) · KL(p(X,Y|z) ‖ p(X|z)p(Y|z)), skipping zero-mass strata.
    pub fn conditional_mutual_information(&self) -> Result<f64> {
        let strata = self.strata()?;
        let mut total = 0.0;
        for s in &strata {
            total += s.weight * s.joint_xy.kl_divergence(&s.product_xy)?;
        }
        Ok(total)
    }

    /// Per-stratum view of a 3-variable table: for each z with p(z) > 0, the
    /// weight p(z), the conditional joint p(X,Y|z), and the product of
    /// conditional marginals p(X|z)p(Y|z), both over flattened (x,y) cells.
    pub fn strata(&self) -> Result<Vec<Stratum>> {
        if self.num_variables() != 3 {
            return Err(Error::InvalidParameter(format!(
                "stratification needs a 3-variable (X, Y, Z) table, got {} variables",
                self.num_variables()
            )));
        }
        let (cx, cy, cz) = (self.cards[0], self.cards[1], self.cards[2]);
        let mut out = Vec::new();
        for z in 0..cz {
            let mut cells = vec![0.0; cx * cy];
            let mut weight = 0.0;
            for xv in 0..cx {
                for yv in 0..cy {
                    let p = self.probs[(xv * cy + yv) * cz + z];
                    cells[xv * cy + yv] = p;
                    weight += p;
                }
            }
            if weight <= 0.0 {
                continue;
            }
            for c in &mut cells {
                *c /= weight;
            }
            let joint_xy = DiscreteDistribution::new(cells)?;
            let as_table = JointTable::new(joint_xy.probs().to_vec(), vec![cx, cy])?;
            out.push(Stratum {
                z_index: z,
                weight,
                product_xy: as_table.product_of_marginals()?,
                joint_xy,
            });
        }
        Ok(out)
    }
}

/// One conditioning stratum of a 3-variable table.
#[derive(Debug, Clone)]
pub struct Stratum {
    pub z_index: usize,
    pub weight: f64,
    pub joint_xy: DiscreteDistribution,
    pub product_xy: DiscreteDistribution,
}

/// Plug-in MI estimate from i.i.d. (x, y) samples: the mutual information of
/// the empirical frequency table, in bits.
pub fn plugin_mi_estimate(samples: &[(usize, usize)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("plug-in MI needs ≥ 1 sample"));
    }
    let cx = samples.iter().map(|&(x, _)| x).max().unwrap() + 1;
    let cy = samples.iter().map(|&(_, y)| y).max().unwrap() + 1;
    let mut counts = vec![0u64; cx * cy];
    for &(x, y) in samples {
        counts[x * cy + y] += 1;
    }
    mi_from_counts(&counts, cx, cy)
}

fn mi_from_counts(counts: &[u64], cx: usize, cy: usize) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut row = vec![0u64; cx];
    let mut col = vec![0u64; cy];
    for xv in 0..cx {
        for yv in 0..cy {
            row[xv] += counts[xv * cy + yv];
            col[yv] += counts[xv * cy + yv];
        }
    }
    let mut total = 0.0;
    for xv in 0..cx {
        for yv in 0..cy {
            let c = counts[xv * cy + yv];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / nf;
            let pp = (row[xv] as f64 / nf) * (col[yv] as f64 / nf);
            total += pxy * (pxy / pp).log2();
        }
    }
    Ok(total)
}

/// Plug-in CMI estimate from i.i.d. (x, y, z) samples: empirical stratum
/// weights times per-stratum plug-in MI; strata with no samples contribute 0.
pub fn plugin_cmi_estimate(samples: &[(usize, usize, usize)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("plug-in CMI needs ≥ 1 sample"));
    }
    let cx = samples.iter().map(|&(x, _, _)| x).max().unwrap() + 1;
    let cy = samples.iter().map(|&(_, y, _)| y).max().unwrap() + 1;
    let cz = samples.iter().map(|&(_, _, z)| z).max().unwrap() + 1;
    let mut counts = vec![0u64; cx * cy * cz];
    for &(x, y, z) in samples {
        counts[(x * cy + y) * cz + z] += 1;
    }
    let n = samples.len() as f64;
    let mut total = 0.0;
    let mut stratum = vec![0u64; cx * cy];
    for z in 0..cz {
        let mut nz = 0u64;
        for xv in 0..cx {
            for yv in 0..cy {
                let c = counts[(xv * cy + yv) * cz + z];
                stratum[xv * cy + yv] = c;
                nz += c;
            }
        }
        if nz == 0 {
            continue;
        }
        total += (nz as f64 / n) * mi_from_counts(&stratum, cx, cy)?;
    }
    Ok(total)
}

/// Maximum attempts for MI-range rejection sampling.
const REJECTION_CAP: usize = 1_000_000;

/// Random 2×2 binary joint with analytical MI inside `[mi_lo, mi_hi]` bits,
/// rejection-sampled from Dirichlet(1,1,1,1) (uniform on the simplex).
pub fn random_binary_joint(
    rng: &mut impl Rng,
    mi_lo: f64,
    mi_hi: f64,
) -> Result<JointTable> {
    if !(0.0 <= mi_lo && mi_lo < mi_hi) {
        return Err(Error::InvalidParameter(format!(
            "MI range [{mi_lo}, {mi_hi}] must satisfy 0 ≤ lo < hi"
        )));
    }
    for _ in 0..REJECTION_CAP {
        // Dirichlet(1,..,1) via normalized exponentials
        let mut cells = [0.0f64; 4];
        let mut total = 0.0;
        for c in &mut cells {
            let u: f64 = rng.random();
            *c = -(1.0 - u).ln();
            total += *c;
        }
        for c in &mut cells {
            *c /= total;
        }
        let table = JointTable::new(cells.to_vec(), vec![2, 2])?;
        let mi = table.mutual_information()?;
        if mi_lo <= mi && mi <= mi_hi {
            return Ok(table);
        }
    }
    Err(Error::RejectionCapExhausted(REJECTION_CAP))
}
