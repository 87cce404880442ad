//! Survival-probability operators and threshold certificates.
//!
//! One round of peeling maps per-segment survival probabilities `q` to
//!
//! ```text
//! (P̂q)(i) = 1 - exp(-c * Σ_{j=i-k+1..=i} Π_{j <= i' < j+k, i' != i} q(i'))
//! ```
//!
//! on all of ℤ; [`apply_p`] is the same update restricted to the segments and
//! edge types of a finite fuse graph. On constant sequences P̂ acts like the
//! scalar map `f(x) = 1 - exp(-c k x^(k-1))`.
//!
//! Erosion and consolidation are decided by iterating P̂ on a step function
//! stored on a finite window `[-D, D]`, with the outside rounded so that the
//! window stays an upper bound (erosion) or lower bound (consolidation) of the
//! true iterate. A check succeeds after a finite number of rounds `R`, which is
//! kept as the certificate.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::Serialize;

use crate::exec::Execution;
use crate::{Error, Result};

/// Default half-width of the iteration window.
pub const DEFAULT_HALF_WIDTH: usize = 50;

/// `f(x) = 1 - exp(-c k x^(k-1))`.
#[inline]
pub fn f_eval(x: f64, k: usize, c: f64) -> f64 {
    -(-c * k as f64 * x.powi(k as i32 - 1)).exp_m1()
}

/// `f'(x) = c k (k-1) x^(k-2) exp(-c k x^(k-1))`.
#[inline]
pub fn f_deriv(x: f64, k: usize, c: f64) -> f64 {
    let kf = k as f64;
    c * kf * (kf - 1.0) * x.powi(k as i32 - 2) * (-c * kf * x.powi(k as i32 - 1)).exp()
}

/// The two positive fixed points of `f`: `xi1` is unstable, `xi2` stable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoints {
    pub xi1: f64,
    pub xi2: f64,
}

const GRID_CELLS: usize = 1024;

/// Locates the positive fixed points of `f`, or `None` if `f(x) < x` on `(0, 1]`.
pub fn fixed_points(k: usize, c: f64) -> Option<FixedPoints> {
    let g = |x: f64| f_eval(x, k, c) - x;

    let (mut best, mut best_g) = (1, f64::NEG_INFINITY);
    for i in 1..=GRID_CELLS {
        let gi = g(i as f64 / GRID_CELLS as f64);
        if gi > best_g {
            best = i;
            best_g = gi;
        }
    }
    // Refine the maximum of g around the best grid point (golden section).
    let mut lo = (best - 1) as f64 / GRID_CELLS as f64;
    let mut hi = ((best + 1).min(GRID_CELLS)) as f64 / GRID_CELLS as f64;
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..200 {
        if ga < gb {
            lo = a;
            a = b;
            ga = gb;
            b = lo + INV_PHI * (hi - lo);
            gb = g(b);
        } else {
            hi = b;
            b = a;
            gb = ga;
            a = hi - INV_PHI * (hi - lo);
            ga = g(a);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let (peak, peak_g) = [(best as f64 / GRID_CELLS as f64, best_g), (a, ga), (b, gb)]
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    if peak_g < 0.0 {
        return None;
    }
    // g < 0 just right of 0 and at 1, g >= 0 at the peak.
    let xi1 = bisect(&g, 0.0, peak);
    let xi2 = bisect(&g, 1.0, peak);
    Some(FixedPoints { xi1, xi2 })
}

/// Bisection to full precision between `neg` (g <= 0) and `pos` (g >= 0).
fn bisect(g: &impl Fn(f64) -> f64, mut neg: f64, mut pos: f64) -> f64 {
    loop {
        let mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            return if g(pos).abs() <= g(neg).abs() { pos } else { neg };
        }
        if g(mid) >= 0.0 {
            pos = mid;
        } else {
            neg = mid;
        }
    }
}

/// The smallest density at which `f` has a positive fixed point (the 2-core
/// threshold of `k`-uniform Erdős–Rényi hypergraphs), to about `1e-12`.
pub fn tangency_density(k: usize) -> f64 {
    let (mut lo, mut hi) = (1e-3, 1.0);
    while fixed_points(k, hi).is_none() {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if fixed_points(k, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// How values outside `[-D, D]` are set after applying P̂.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Extension {
    /// Left of the window copies the new value at `-D`; right of it is 1.
    /// Keeps a non-decreasing window an upper bound of the true iterate.
    Erosion,
    /// Left of the window is 0; right of it copies the new value at `D`.
    /// Keeps a non-decreasing window a lower bound of the true iterate.
    Consolidation,
    /// Each outside value `x` becomes `f(x)`, which is what P̂ produces far
    /// enough from the window. Exact on ℤ when the outermost `k - 1` values
    /// on each side equal the outside constants.
    Asymptotic,
}

/// A function `ℤ -> [0, 1]` given by its values on `[-D, D]` and one
/// constant on each side.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbWindow {
    half_width: usize,
    values: Vec<f64>,
    left: f64,
    right: f64,
}

impl ProbWindow {
    pub fn new(half_width: usize, values: Vec<f64>, left: f64, right: f64) -> Result<Self> {
        if values.len() != 2 * half_width + 1 {
            return Err(Error::InvalidParams(format!(
                "window of half-width {half_width} needs {} values, got {}",
                2 * half_width + 1,
                values.len()
            )));
        }
        if let Some(x) = values.iter().chain([&left, &right]).find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParams(format!("value {x} outside [0, 1]")));
        }
        Ok(Self { half_width, values, left, right })
    }

    pub fn from_fn(half_width: usize, left: f64, right: f64, f: impl Fn(i64) -> f64) -> Self {
        let d = half_width as i64;
        Self { half_width, values: (-d..=d).map(f).collect(), left, right }
    }

    pub fn constant(half_width: usize, x: f64) -> Self {
        Self::from_fn(half_width, x, x, |_| x)
    }

    /// `below` on negative indices, `from_zero` on the rest.
    pub fn step(half_width: usize, below: f64, from_zero: f64) -> Self {
        Self::from_fn(half_width, below, from_zero, |i| if i < 0 { below } else { from_zero })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Values on `[-D, D]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn get(&self, i: i64) -> f64 {
        let d = self.half_width as i64;
        if i < -d {
            self.left
        } else if i > d {
            self.right
        } else {
            self.values[(i + d) as usize]
        }
    }

    /// `q(i - s)`: the window contents moved `s` places to the right.
    pub fn shifted(&self, s: i64) -> Self {
        Self::from_fn(self.half_width, self.left, self.right, |i| self.get(i - s))
    }

    /// Pointwise `self <= other + slack` everywhere on ℤ.
    pub fn le(&self, other: &Self, slack: f64) -> bool {
        let d = self.half_width.max(other.half_width) as i64 + 1;
        (-d..=d).all(|i| self.get(i) <= other.get(i) + slack)
    }

    pub fn is_nondecreasing(&self) -> bool {
        let d = self.half_width as i64 + 1;
        (-d..d).all(|i| self.get(i) <= self.get(i + 1))
    }

    fn pad_into(&self, k: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(std::iter::repeat_n(self.left, k - 1));
        buf.extend_from_slice(&self.values);
        buf.extend(std::iter::repeat_n(self.right, k - 1));
    }
}

/// Writes P̂ evaluated at the centre entries of `padded` into `out`.
/// `padded` carries `k - 1` extra entries on each side of `out`.
fn phat_kernel(padded: &[f64], k: usize, c: f64, out: &mut [f64]) {
    debug_assert_eq!(padded.len(), out.len() + 2 * (k - 1));
    for (o, slot) in out.iter_mut().enumerate() {
        let p = o + k - 1;
        let mut sum = 0.0;
        for j in p + 1 - k..=p {
            let mut prod = 1.0;
            for (ip, &q) in padded[j..j + k].iter().enumerate() {
                if j + ip != p {
                    prod *= q;
                }
            }
            sum += prod;
        }
        *slot = -(-c * sum).exp_m1();
    }
}

/// P̂ of a constant sequence, rounded exactly as inside a window.
fn phat_constant(x: f64, k: usize, c: f64) -> f64 {
    let mut out = [0.0];
    phat_kernel(&vec![x; 2 * k - 1], k, c, &mut out);
    out[0]
}

/// One application of P̂ to the window, with the outside set by `ext`.
pub fn apply_phat(q: &ProbWindow, k: usize, c: f64, ext: Extension) -> ProbWindow {
    let mut padded = Vec::new();
    q.pad_into(k, &mut padded);
    let mut values = vec![0.0; q.values.len()];
    phat_kernel(&padded, k, c, &mut values);
    let (left, right) = match ext {
        Extension::Erosion => (values[0], 1.0),
        Extension::Consolidation => (0.0, values[values.len() - 1]),
        Extension::Asymptotic => (phat_constant(q.left, k, c), phat_constant(q.right, k, c)),
    };
    ProbWindow { half_width: q.half_width, values, left, right }
}

/// One application of the finite operator P to `q`, indexed by the segments
/// `0..ell+k-1`. Only edge types `0..ell` contribute.
pub fn apply_p(q: &[f64], k: usize, c: f64, ell: usize) -> Vec<f64> {
    debug_assert_eq!(q.len(), ell + k - 1);
    (0..q.len()).map(|i| -(-c * edge_survival_sum(q, k, ell, i)).exp_m1()).collect()
}

/// `Σ_j Π q(i')` over the types `j` whose edges reach segment `i`.
fn edge_survival_sum(q: &[f64], k: usize, ell: usize, i: usize) -> f64 {
    let first = i.saturating_sub(k - 1);
    let last = i.min(ell - 1);
    let mut sum = 0.0;
    for j in first..=last {
        let mut prod = 1.0;
        for (ip, &x) in q.iter().enumerate().skip(j).take(k) {
            if ip != i {
                prod *= x;
            }
        }
        sum += prod;
    }
    sum
}

/// `P^r 1_I` for `r = 0..=rounds`: the predicted fraction of each segment
/// surviving `r` rounds of its rooted peeling process.
pub fn iterate_p(k: usize, c: f64, ell: usize, rounds: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0; ell + k - 1]];
    for _ in 0..rounds {
        let next = apply_p(out.last().unwrap(), k, c, ell);
        out.push(next);
    }
    out
}

/// Predicted fraction of each segment surviving `r` rounds of ordinary
/// (unrooted) peeling, for `r = 0..=rounds`.
///
/// A vertex survives round `r + 1` iff at least two incident edges survive
/// `r` rounds. With `λ = c Σ_j Π q(i')` built from the rooted survival `q =
/// P^r 1_I`, the surviving edge count is Poisson(λ), so the answer is
/// `1 - e^{-λ}(1 + λ)`.
pub fn iterate_p_unrooted(k: usize, c: f64, ell: usize, rounds: usize) -> Vec<Vec<f64>> {
    let rooted = iterate_p(k, c, ell, rounds);
    let mut out = vec![vec![1.0; ell + k - 1]];
    for q in rooted.iter().take(rounds) {
        out.push(
            (0..q.len())
                .map(|i| {
                    let lambda = c * edge_survival_sum(q, k, ell, i);
                    1.0 - (-lambda).exp() * (1.0 + lambda)
                })
                .collect(),
        );
    }
    out
}

/// `P̂^r 1_I` restricted to `I`, for `r = 0..=rounds`.
pub fn iterate_phat_indicator(k: usize, c: f64, ell: usize, rounds: usize) -> Vec<Vec<f64>> {
    let segments = ell + k - 1;
    // The support grows by one segment per round on each side; keep it inside.
    let d = segments + rounds + k;
    let mut w = ProbWindow::from_fn(d, 0.0, 0.0, |i| {
        if (0..segments as i64).contains(&i) {
            1.0
        } else {
            0.0
        }
    });
    let restrict = |w: &ProbWindow| (0..segments as i64).map(|i| w.get(i)).collect::<Vec<_>>();
    let mut out = vec![restrict(&w)];
    for _ in 0..rounds {
        w = apply_phat(&w, k, c, Extension::Asymptotic);
        out.push(restrict(&w));
    }
    out
}

/// Which bound a [`FrontCheck`] certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    Erosion,
    Consolidation,
}

/// Result of an erosion or consolidation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckOutcome {
    /// The condition held after `rounds` applications; `rounds` is the certificate.
    Verified { rounds: u64 },
    /// The window stopped changing (bitwise) after `rounds` applications.
    Stationary { rounds: u64 },
    /// Gave up after `rounds` applications.
    IterationLimit { rounds: u64 },
}

impl CheckOutcome {
    pub fn is_verified(&self) -> bool {
        matches!(self, CheckOutcome::Verified { .. })
    }

    pub fn rounds(&self) -> u64 {
        match *self {
            CheckOutcome::Verified { rounds }
            | CheckOutcome::Stationary { rounds }
            | CheckOutcome::IterationLimit { rounds } => rounds,
        }
    }
}

/// Resumable iteration of the erosion (`a_r`) or consolidation (`b_r`) recurrence.
///
/// Erosion starts from `a_0 = step(ξ₁/2 | 1)` and succeeds once `a_r(0) < ξ₁/2`.
/// Consolidation starts from `b_0 = step(0 | (ξ₁+ξ₂)/2)` and succeeds once
/// `b_r(-1) > (ξ₁+ξ₂)/2`.
#[derive(Clone, Debug)]
pub struct FrontCheck {
    kind: CheckKind,
    k: usize,
    c: f64,
    half_width: usize,
    target: f64,
    /// Window values with `k - 1` copies of each outside value on either side.
    padded: Vec<f64>,
    next: Vec<f64>,
    rounds: u64,
    outcome: Option<CheckOutcome>,
}

impl FrontCheck {
    pub fn new(kind: CheckKind, k: usize, c: f64, half_width: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParams(format!("k must be >= 3, got {k}")));
        }
        if half_width < 1 {
            return Err(Error::InvalidParams("window half-width must be >= 1".into()));
        }
        let fp = fixed_points(k, c).ok_or(Error::NoFixedPoints { k, c })?;
        let (start, target) = match kind {
            CheckKind::Erosion => (ProbWindow::step(half_width, fp.xi1 / 2.0, 1.0), fp.xi1 / 2.0),
            CheckKind::Consolidation => {
                let mid = (fp.xi1 + fp.xi2) / 2.0;
                (ProbWindow::step(half_width, 0.0, mid), mid)
            }
        };
        let mut padded = Vec::new();
        start.pad_into(k, &mut padded);
        Ok(Self {
            kind,
            k,
            c,
            half_width,
            target,
            padded,
            next: vec![0.0; 2 * half_width + 1],
            rounds: 0,
            outcome: None,
        })
    }

    pub fn kind(&self) -> CheckKind {
        self.kind
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn outcome(&self) -> Option<CheckOutcome> {
        self.outcome
    }

    /// The threshold the probe is compared against.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// `a_r(0)` for erosion, `b_r(-1)` for consolidation.
    pub fn probe(&self) -> f64 {
        let centre = self.k - 1 + self.half_width;
        match self.kind {
            CheckKind::Erosion => self.padded[centre],
            CheckKind::Consolidation => self.padded[centre - 1],
        }
    }

    pub fn window(&self) -> ProbWindow {
        let m = self.k - 1;
        ProbWindow {
            half_width: self.half_width,
            values: self.padded[m..m + self.next.len()].to_vec(),
            left: self.padded[0],
            right: self.padded[self.padded.len() - 1],
        }
    }

    /// Applies one round. Returns the outcome once decided.
    pub fn step(&mut self) -> Option<CheckOutcome> {
        if self.outcome.is_some() {
            return self.outcome;
        }
        let m = self.k - 1;
        let w = self.next.len();
        phat_kernel(&self.padded, self.k, self.c, &mut self.next);
        let (left, right) = match self.kind {
            CheckKind::Erosion => (self.next[0], 1.0),
            CheckKind::Consolidation => (0.0, self.next[w - 1]),
        };
        let stationary = self.padded[0] == left
            && self.padded[m + w] == right
            && self.padded[m..m + w] == self.next[..];
        self.padded[..m].fill(left);
        self.padded[m..m + w].copy_from_slice(&self.next);
        self.padded[m + w..].fill(right);
        self.rounds += 1;

        let probe = self.probe();
        let verified = match self.kind {
            CheckKind::Erosion => probe < self.target,
            CheckKind::Consolidation => probe > self.target,
        };
        if verified {
            self.outcome = Some(CheckOutcome::Verified { rounds: self.rounds });
        } else if stationary {
            self.outcome = Some(CheckOutcome::Stationary { rounds: self.rounds });
        }
        self.outcome
    }

    /// Steps until decided or `rounds` reaches `limit`.
    pub fn run_until(&mut self, limit: u64) -> Option<CheckOutcome> {
        while self.outcome.is_none() && self.rounds < limit {
            self.step();
        }
        self.outcome
    }

    /// Steps until decided, or reports [`CheckOutcome::IterationLimit`] at `max_iter`.
    pub fn run(&mut self, max_iter: u64) -> CheckOutcome {
        self.run_until(max_iter)
            .unwrap_or(CheckOutcome::IterationLimit { rounds: self.rounds })
    }
}

/// Tries to certify that P̂ erodes at density `c`.
pub fn erosion_check(k: usize, c: f64, half_width: usize, max_iter: u64) -> Result<CheckOutcome> {
    Ok(FrontCheck::new(CheckKind::Erosion, k, c, half_width)?.run(max_iter))
}

/// Tries to certify that P̂ consolidates at density `c`.
pub fn consolidation_check(
    k: usize,
    c: f64,
    half_width: usize,
    max_iter: u64,
) -> Result<CheckOutcome> {
    Ok(FrontCheck::new(CheckKind::Consolidation, k, c, half_width)?.run(max_iter))
}

/// Runs a check, reporting `(r, probe)` after every round.
pub fn traced_check(
    kind: CheckKind,
    k: usize,
    c: f64,
    half_width: usize,
    max_iter: u64,
    mut trace: impl FnMut(u64, f64),
) -> Result<CheckOutcome> {
    let mut check = FrontCheck::new(kind, k, c, half_width)?;
    trace(0, check.probe());
    while check.rounds() < max_iter {
        let done = check.step();
        trace(check.rounds(), check.probe());
        if let Some(outcome) = done {
            return Ok(outcome);
        }
    }
    Ok(CheckOutcome::IterationLimit { rounds: check.rounds() })
}

/// Verdict at one density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Eroding { rounds: u64 },
    Consolidating { rounds: u64 },
    Undecided,
}

const RACE_CHUNK: u64 = 4096;

/// Runs the erosion and consolidation checks at `c` side by side and stops
/// both as soon as one is verified. Returns the decision and the total number
/// of rounds spent.
pub fn classify(
    k: usize,
    c: f64,
    half_width: usize,
    max_iter: u64,
    exec: Execution,
) -> Result<(Decision, u64)> {
    let mut erosion = FrontCheck::new(CheckKind::Erosion, k, c, half_width)?;
    let mut consolidation = FrontCheck::new(CheckKind::Consolidation, k, c, half_width)?;

    match exec {
        Execution::Parallel if cfg!(feature = "parallel") => {
            let done = AtomicBool::new(false);
            let drive = |check: &mut FrontCheck| {
                while !done.load(Ordering::Relaxed) && check.rounds() < max_iter {
                    let limit = (check.rounds() + RACE_CHUNK).min(max_iter);
                    if let Some(o) = check.run_until(limit) {
                        if o.is_verified() {
                            done.store(true, Ordering::Relaxed);
                        }
                        return;
                    }
                }
            };
            exec.join(|| drive(&mut erosion), || drive(&mut consolidation));
        }
        _ => loop {
            let mut open = false;
            for check in [&mut erosion, &mut consolidation] {
                let limit = (check.rounds() + RACE_CHUNK).min(max_iter);
                check.run_until(limit);
                open |= check.outcome().is_none() && check.rounds() < max_iter;
            }
            let won = [&erosion, &consolidation]
                .iter()
                .any(|c| c.outcome().is_some_and(|o| o.is_verified()));
            if won || !open {
                break;
            }
        },
    }

    let spent = erosion.rounds() + consolidation.rounds();
    let decision = match (erosion.outcome(), consolidation.outcome()) {
        (Some(CheckOutcome::Verified { rounds }), _) => Decision::Eroding { rounds },
        (_, Some(CheckOutcome::Verified { rounds })) => Decision::Consolidating { rounds },
        _ => Decision::Undecided,
    };
    Ok((decision, spent))
}

/// A verified interval around the peelability threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdBracket {
    pub k: usize,
    /// Largest density verified eroding.
    pub lower: f64,
    /// Smallest density verified consolidating.
    pub upper: f64,
    /// Rounds `R` certifying `lower`.
    pub lower_rounds: u64,
    /// Rounds `R` certifying `upper`.
    pub upper_rounds: u64,
    /// Total rounds over all checks run during the search.
    pub iterations_used: u64,
    pub half_width: usize,
}

impl ThresholdBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, c: f64) -> bool {
        self.lower <= c && c <= self.upper
    }
}

pub fn bracket_threshold(k: usize, half_width: usize, max_iter: u64, tol: f64) -> Result<ThresholdBracket> {
    bracket_threshold_with(k, half_width, max_iter, tol, Execution::default())
}

/// Bisects between a verified eroding and a verified consolidating density
/// until they are at most `tol` apart.
pub fn bracket_threshold_with(
    k: usize,
    half_width: usize,
    max_iter: u64,
    tol: f64,
    exec: Execution,
) -> Result<ThresholdBracket> {
    if k < 3 {
        return Err(Error::InvalidParams(format!("k must be >= 3, got {k}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let mut used = 0;

    // Just above the tangency point the nonzero fixed points are weak and
    // erosion is fast.
    let mut lower = tangency_density(k) + 1e-9;
    let mut upper = 1.0;
    let mut lower_rounds = match erosion_check(k, lower, half_width, max_iter)? {
        CheckOutcome::Verified { rounds } => rounds,
        _ => return Err(Error::Undecided { lower, upper }),
    };
    used += lower_rounds;

    let mut upper_rounds = None;
    for _ in 0..8 {
        let outcome = consolidation_check(k, upper, half_width, max_iter)?;
        used += outcome.rounds();
        if let CheckOutcome::Verified { rounds } = outcome {
            upper_rounds = Some(rounds);
            break;
        }
        upper *= 2.0;
    }
    let Some(mut upper_rounds) = upper_rounds else {
        return Err(Error::Undecided { lower, upper });
    };

    while upper - lower > tol {
        let span = upper - lower;
        let mut moved = false;
        for frac in [0.5, 0.25, 0.75] {
            let c = lower + frac * span;
            let (decision, spent) = classify(k, c, half_width, max_iter, exec)?;
            used += spent;
            match decision {
                Decision::Eroding { rounds } => {
                    lower = c;
                    lower_rounds = rounds;
                }
                Decision::Consolidating { rounds } => {
                    upper = c;
                    upper_rounds = rounds;
                }
                Decision::Undecided => continue,
            }
            moved = true;
            break;
        }
        if !moved {
            return Err(Error::Undecided { lower, upper });
        }
    }

    Ok(ThresholdBracket {
        k,
        lower,
        upper,
        lower_rounds,
        upper_rounds,
        iterations_used: used,
        half_width,
    })
}

/// Reference values for `k = 3..=7`, used only for reporting and
/// tests.
pub mod reference {
    /// Per edge size: verified eroding density `b_k`, orientability threshold
    /// `c*_k`, verified consolidating density `B_k`.
    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct Row {
        pub k: usize,
        pub eroding: f64,
        pub orientability: f64,
        pub consolidating: f64,
    }

    pub const TABLE: [Row; 5] = [
        Row { k: 3, eroding: 0.917_935_246_9, orientability: 0.917_935_276_7, consolidating: 0.917_935_306_5 },
        Row { k: 4, eroding: 0.976_769_211_2, orientability: 0.976_770_164_9, consolidating: 0.976_771_118_6 },
        Row { k: 5, eroding: 0.992_434_576_6, orientability: 0.992_438_391_3, consolidating: 0.992_442_206_7 },
        Row { k: 6, eroding: 0.997_375_738_1, orientability: 0.997_379_552_8, consolidating: 0.997_383_367_5 },
        Row { k: 7, eroding: 0.999_056_129_4, orientability: 0.999_063_758_8, consolidating: 0.999_071_388_2 },
    ];

    /// 2-core threshold of 3-uniform Erdős–Rényi hypergraphs, to three digits.
    pub const ER_CORE_3: f64 = 0.818;

    pub fn row(k: usize) -> Option<Row> {
        TABLE.iter().copied().find(|r| r.k == k)
    }
}
