//! Subsample generation for the S-estimator's starting candidates.
//!
//! [`nonsingular_subsample`] builds the subsample one observation at a time
//! inside a column-oriented (Gaxpy) LU factorization of `A = X_sᵀ`. Column
//! `j` of `U` is computed only when the `j`-th observation is tried, so an
//! observation whose working column has no usable pivot is simply dropped
//! and the same step is retried with the next observation in the random
//! order; nothing computed for earlier steps is touched.
//!
//! [`rejection_subsample`] is the plain baseline that draws `p` observations
//! at once and throws the whole draw away when it is singular.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{is_negligible, plu_decompose, Matrix, PluFactors};

/// Largest `C(n, p)` that [`enumerate_subsamples`] will walk.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// A reproducible random stream: the same `(seed, stream_id)` always yields
/// the same observation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Forward Fisher-Yates shuffle of `0..n`, produced one element at a time.
///
/// Drawing all `n` elements gives a uniform permutation; a prefix of length
/// `k` is a uniform ordered sample without replacement.
struct LazyPermutation<R> {
    idx: Vec<usize>,
    next: usize,
    swaps: Vec<usize>,
    rng: R,
}

impl<R: Rng> LazyPermutation<R> {
    fn new(n: usize, rng: R) -> Self {
        LazyPermutation {
            idx: (0..n).collect(),
            next: 0,
            swaps: Vec::new(),
            rng,
        }
    }

    fn draw(&mut self) -> Option<usize> {
        let n = self.idx.len();
        if self.next == n {
            return None;
        }
        let j = self.rng.gen_range(self.next..n);
        self.idx.swap(self.next, j);
        self.swaps.push(j);
        self.next += 1;
        Some(self.idx[self.next - 1])
    }

    /// Restores the identity order in `O(drawn)`, keeping the generator.
    fn reset(&mut self) {
        while let Some(j) = self.swaps.pop() {
            self.next -= 1;
            self.idx.swap(self.next, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsampleStatus {
    Success,
    /// Observations ran out at this (1-based) elimination step.
    Exhausted { step: usize },
}

impl SubsampleStatus {
    /// `0` on success, otherwise the failing step.
    pub fn code(&self) -> usize {
        match self {
            SubsampleStatus::Success => 0,
            SubsampleStatus::Exhausted { step } => *step,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, SubsampleStatus::Success)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleResult {
    pub status: SubsampleStatus,
    /// Observation indices (rows of `X`) in the order they entered the
    /// subsample.
    pub selected: Vec<usize>,
    /// Every observation examined, in random order. For the nonsingular
    /// method this is the consumed prefix of the permutation; for the
    /// rejection method it concatenates all draws.
    pub order: Vec<usize>,
    /// `P·X_sᵀ = L·U` for the selected rows. Partially filled on failure.
    pub factors: PluFactors,
    /// Exact solution of `X_s·β = y_s`; empty on failure.
    pub beta0: Vec<f64>,
    pub observations_examined: usize,
    pub columns_skipped: usize,
    /// Column-elimination steps executed.
    pub elimination_steps: usize,
    /// Draws made (always 1 for the nonsingular method).
    pub tries: u64,
}

impl SubsampleResult {
    pub fn is_success(&self) -> bool {
        self.status.is_success()
    }
}

fn check_inputs(x: &Matrix, y: &[f64]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "X has {} rows but y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::Dimension(format!(
            "need at least p = {} observations, got {}",
            x.ncols(),
            x.nrows()
        )));
    }
    Ok(())
}

/// Incremental LU over observations produced by `next_obs`.
fn gaxpy_select(
    x: &Matrix,
    y: &[f64],
    sing_tol: f64,
    mut next_obs: impl FnMut() -> Option<usize>,
) -> SubsampleResult {
    let p = x.ncols();
    let mut l = Matrix::identity(p);
    let mut u = Matrix::zeros(p, p);
    let mut pivots: Vec<usize> = (0..p).collect();
    // row_of[i]: predictor currently held in row i of the permuted A
    let mut row_of: Vec<usize> = (0..p).collect();
    let mut selected = Vec::with_capacity(p);
    let mut order = Vec::with_capacity(p);
    let mut a = vec![0.0; p];
    let mut v = vec![0.0; p];
    let mut steps = 0;
    let mut skipped = 0;

    for j in 0..p {
        loop {
            let Some(obs) = next_obs() else {
                return SubsampleResult {
                    status: SubsampleStatus::Exhausted { step: j + 1 },
                    selected,
                    observations_examined: order.len(),
                    order,
                    factors: PluFactors { l, u, pivots },
                    beta0: Vec::new(),
                    columns_skipped: skipped,
                    elimination_steps: steps,
                    tries: 1,
                };
            };
            order.push(obs);
            steps += 1;

            let row = x.row(obs);
            for (ai, &src) in a.iter_mut().zip(&row_of) {
                *ai = row[src];
            }
            // U[0..j, j] = L[0..j, 0..j]⁻¹ a[0..j], held in v[0..j]
            for i in 0..j {
                let li = l.row(i);
                let s: f64 = li[..i].iter().zip(&v[..i]).map(|(l, z)| l * z).sum();
                v[i] = a[i] - s;
            }
            // v[j..p] = a[j..p] - L[j..p, 0..j] U[0..j, j]
            for i in j..p {
                let li = l.row(i);
                let s: f64 = li[..j].iter().zip(&v[..j]).map(|(l, z)| l * z).sum();
                v[i] = a[i] - s;
            }

            let mut mu = j;
            let mut best = v[j].abs();
            for (i, vi) in v.iter().enumerate().skip(j + 1) {
                if vi.abs() > best {
                    best = vi.abs();
                    mu = i;
                }
            }
            if is_negligible(best, sing_tol) {
                skipped += 1;
                continue;
            }

            pivots[j] = mu;
            if mu != j {
                v.swap(j, mu);
                row_of.swap(j, mu);
                for k in 0..j {
                    let t = l[(j, k)];
                    l[(j, k)] = l[(mu, k)];
                    l[(mu, k)] = t;
                }
            }
            let pivot = v[j];
            for i in j + 1..p {
                l[(i, j)] = v[i] / pivot;
            }
            for i in 0..=j {
                u[(i, j)] = v[i];
            }
            selected.push(obs);
            break;
        }
    }

    let factors = PluFactors { l, u, pivots };
    let ys: Vec<f64> = selected.iter().map(|&i| y[i]).collect();
    let beta0 = factors.solve_transposed(&ys);
    SubsampleResult {
        status: SubsampleStatus::Success,
        selected,
        observations_examined: order.len(),
        order,
        factors,
        beta0,
        columns_skipped: skipped,
        elimination_steps: steps,
        tries: 1,
    }
}

/// Draws a nonsingular subsample of `p` observations.
///
/// Observations are visited in a random order from `rng`; one whose column
/// is numerically dependent on those already chosen (largest remaining pivot
/// below `sing_tol`) is skipped. The status reports the failing step when the
/// order runs out, which means `rank(X) < p` or a too-large `sing_tol`.
/// `x` is expected to be equilibrated.
pub fn nonsingular_subsample(
    x: &Matrix,
    y: &[f64],
    rng: RngStream,
    sing_tol: f64,
) -> Result<SubsampleResult> {
    check_inputs(x, y)?;
    let mut perm = LazyPermutation::new(x.nrows(), rng.rng());
    Ok(gaxpy_select(x, y, sing_tol, || perm.draw()))
}

/// [`nonsingular_subsample`] over a caller-supplied observation order.
pub fn nonsingular_subsample_in_order(
    x: &Matrix,
    y: &[f64],
    order: &[usize],
    sing_tol: f64,
) -> Result<SubsampleResult> {
    check_inputs(x, y)?;
    if let Some(&bad) = order.iter().find(|&&i| i >= x.nrows()) {
        return Err(Error::Dimension(format!("observation index {bad} out of range")));
    }
    let mut it = order.iter().copied();
    Ok(gaxpy_select(x, y, sing_tol, || it.next()))
}

/// Draws `p` observations at a time and factorizes them, redrawing from
/// scratch after every singular draw. Fails with [`Error::ExhaustedTries`]
/// after `max_tries` singular draws.
pub fn rejection_subsample(
    x: &Matrix,
    y: &[f64],
    rng: RngStream,
    sing_tol: f64,
    max_tries: u64,
) -> Result<SubsampleResult> {
    check_inputs(x, y)?;
    let p = x.ncols();
    let mut perm = LazyPermutation::new(x.nrows(), rng.rng());
    let mut order = Vec::with_capacity(p);
    let mut steps = 0;
    for tries in 1..=max_tries {
        perm.reset();
        let draw: Vec<usize> = (0..p).map(|_| perm.draw().expect("n >= p")).collect();
        order.extend_from_slice(&draw);
        let xs = x.select_rows(&draw);
        match plu_decompose(&xs, Some(sing_tol)) {
            Ok(f) => {
                steps += p;
                let ys: Vec<f64> = draw.iter().map(|&i| y[i]).collect();
                let beta0 = f.solve(&ys);
                return Ok(SubsampleResult {
                    status: SubsampleStatus::Success,
                    selected: draw,
                    observations_examined: order.len(),
                    order,
                    factors: f,
                    beta0,
                    columns_skipped: 0,
                    elimination_steps: steps,
                    tries,
                });
            }
            Err(Error::Singular { step }) => steps += step,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ExhaustedTries { tries: max_tries })
}

/// `C(n, k)` as a float (exact below 2⁵³).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Calls `f` with every size-`k` subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetCount {
    pub total: u64,
    pub nonsingular: u64,
}

impl SubsetCount {
    pub fn ratio(&self) -> f64 {
        self.nonsingular as f64 / self.total as f64
    }
}

/// Counts the size-`p` row subsets of `x` and how many of them are
/// nonsingular.
pub fn enumerate_subsamples(x: &Matrix, sing_tol: f64) -> Result<SubsetCount> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < p {
        return Err(Error::Dimension(format!("need n >= p, got n = {n}, p = {p}")));
    }
    let count = binomial(n, p);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut total = 0;
    let mut nonsingular = 0;
    for_each_subset(n, p, |rows| {
        total += 1;
        if plu_decompose(&x.select_rows(rows), Some(sing_tol)).is_ok() {
            nonsingular += 1;
        }
    });
    Ok(SubsetCount { total, nonsingular })
}

/// Smallest `N` such that `N` random subsamples contain at least one free of
/// contamination with probability `confidence`:
/// `1 − (1 − (1 − contamination)^p)^N ≥ confidence`.
pub fn required_subsamples(p: usize, contamination: f64, confidence: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&contamination) {
        return Err(Error::InvalidArgument(format!(
            "contamination must lie in [0, 1), got {contamination}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let clean = (1.0 - contamination).powi(p as i32);
    if clean <= 0.0 {
        return Err(Error::Overflow);
    }
    if clean >= 1.0 {
        return Ok(1);
    }
    let reaches = |n: f64| 1.0 - (1.0 - clean).powf(n) >= confidence;
    let estimate = ((1.0 - confidence).ln() / (-clean).ln_1p()).ceil().max(1.0);
    if !estimate.is_finite() || estimate >= 9.223_372_036_854_776e18 {
        return Err(Error::Overflow);
    }
    let mut n = estimate;
    while n > 1.0 && reaches(n - 1.0) {
        n -= 1.0;
    }
    while !reaches(n) {
        n += 1.0;
    }
    Ok(n as u64)
}
