//! Exact solvers and the separability check.
//!
//! Optimal cells are separated by hyperplanes in posterior space, so for a
//! binary source every optimal cell is an interval of points sorted by
//! `p(X_1 | Y)`. Over the noiseless channel the intervals can be found by
//! dynamic programming; with a general channel the cells are coupled
//! through the outputs and the intervals are enumerated together with their
//! channel-input labels instead.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::objective::{evaluate, CellScorer, ProblemSpec};
use crate::prob::HardQuantizer;
use crate::report::{nearest_violations, NearestViolation, SolveReport};

/// Largest `M * log2(K)` accepted by [`solve_bruteforce`].
pub const BRUTEFORCE_LIMIT_BITS: f64 = 22.0;

/// Largest number of (grouping, labeling) candidates accepted by
/// [`solve_binary_thresholds`].
pub const THRESHOLD_LIMIT: f64 = 5e7;

/// Candidates closer than this to the incumbent do not replace it, which
/// keeps the earliest one in enumeration order.
const TIE_TOL: f64 = 1e-12;

/// Exact minimizer over all `K^M` hard assignments; ties go to the
/// lexicographically smallest label vector.
pub fn solve_bruteforce(spec: &ProblemSpec) -> Result<SolveReport> {
    let (m, k) = (spec.num_points(), spec.num_cells());
    let bits = m as f64 * (k as f64).log2();
    if bits > BRUTEFORCE_LIMIT_BITS {
        return Err(Error::InstanceTooLarge(format!(
            "{k}^{m} assignments (M log2 K = {bits:.1} > {BRUTEFORCE_LIMIT_BITS})"
        )));
    }
    let mut scorer = CellScorer::new(spec);
    let mut cells = vec![0.0; k * spec.num_sources()];
    let mut mass = vec![0.0; k];

    let mut labels = vec![0usize; m];
    let mut best_labels = labels.clone();
    let mut best = scorer.score_labels(&labels, &mut cells, &mut mass);
    // odometer with the last point fastest gives lexicographic order
    'outer: loop {
        let mut pos = m;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
        }
        let value = scorer.score_labels(&labels, &mut cells, &mut mass);
        if value < best - TIE_TOL {
            best = value;
            best_labels.copy_from_slice(&labels);
        }
    }
    SolveReport::from_quantizer(
        spec,
        "bruteforce",
        HardQuantizer::new(best_labels, k)?,
        Vec::new(),
        None,
    )
}

/// Points sorted by `p(X_1 | Y_m)` ascending, ties by index.
pub fn sorted_by_posterior(spec: &ProblemSpec) -> Vec<usize> {
    let post = spec.joint().first_posterior();
    let mut order: Vec<usize> = (0..post.len()).collect();
    order.sort_by(|&a, &b| post[a].total_cmp(&post[b]).then(a.cmp(&b)));
    order
}

/// A convex-cell quantizer for a binary source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdSolution {
    /// Point indices by ascending `p(X_1 | Y)`.
    pub sorted_order: Vec<usize>,
    /// Cut positions: interval `i` covers `sorted_order[cuts[i-1]..cuts[i]]`
    /// with implicit cuts at `0` and `M`.
    pub boundaries: Vec<usize>,
    /// Channel input assigned to each interval; injective.
    pub labeling: Vec<usize>,
}

impl ThresholdSolution {
    /// Cell of every point in original order.
    pub fn labels(&self) -> Vec<usize> {
        let m = self.sorted_order.len();
        let mut labels = vec![0; m];
        let edges: Vec<usize> = std::iter::once(0)
            .chain(self.boundaries.iter().copied())
            .chain(std::iter::once(m))
            .collect();
        for (interval, w) in edges.windows(2).enumerate() {
            for &point in &self.sorted_order[w[0]..w[1]] {
                labels[point] = self.labeling[interval];
            }
        }
        labels
    }
}

fn candidate_labels(order: &[usize], edges: &[usize], labeling: &[usize]) -> Vec<usize> {
    let mut labels = vec![0; order.len()];
    for (w, &cell) in edges.windows(2).zip(labeling) {
        for &p in &order[w[0]..w[1]] {
            labels[p] = cell;
        }
    }
    labels
}

fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn falling(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64)
}

/// Best interval grouping and labeling, with its objective.
pub fn best_threshold_solution(spec: &ProblemSpec) -> Result<(ThresholdSolution, f64)> {
    if spec.num_sources() != 2 {
        return Err(Error::NotBinary(spec.num_sources()));
    }
    let (m, k) = (spec.num_points(), spec.num_cells());
    let max_intervals = k.min(m);
    let candidates: f64 = (1..=max_intervals)
        .map(|j| binomial(m - 1, j - 1) * falling(k, j))
        .sum();
    if candidates > THRESHOLD_LIMIT {
        return Err(Error::InstanceTooLarge(format!(
            "{candidates:.3e} threshold candidates (limit {THRESHOLD_LIMIT:e})"
        )));
    }

    let order = sorted_by_posterior(spec);
    let joint = spec.joint();
    // prefix sums over the sorted order: p(X_1, .), p(X_2, .), p(.)
    let mut prefix = vec![[0.0f64; 3]; m + 1];
    for (i, &p) in order.iter().enumerate() {
        let col = joint.column(p);
        prefix[i + 1] = [
            prefix[i][0] + col[0],
            prefix[i][1] + col[1],
            prefix[i][2] + joint.p_y()[p],
        ];
    }

    let mut scorer = CellScorer::new(spec);
    let mut cells = vec![0.0; 2 * k];
    let mut mass = vec![0.0; k];
    let mut best: Option<(f64, ThresholdSolution, Vec<usize>)> = None;
    for j in 1..=max_intervals {
        for cuts in (1..m).combinations(j - 1) {
            let edges: Vec<usize> = std::iter::once(0)
                .chain(cuts.iter().copied())
                .chain(std::iter::once(m))
                .collect();
            for labeling in (0..k).permutations(j) {
                cells.iter_mut().for_each(|x| *x = 0.0);
                mass.iter_mut().for_each(|x| *x = 0.0);
                for (w, &cell) in edges.windows(2).zip(&labeling) {
                    let (lo, hi) = (prefix[w[0]], prefix[w[1]]);
                    cells[2 * cell] = hi[0] - lo[0];
                    cells[2 * cell + 1] = hi[1] - lo[1];
                    mass[cell] = hi[2] - lo[2];
                }
                let value = scorer.score(&cells, &mass);
                let better = match &best {
                    None => true,
                    Some((b, _, _)) if value < b - TIE_TOL => true,
                    Some((b, _, _)) if value > b + TIE_TOL => false,
                    // tie: the smaller label vector wins, as in brute force
                    Some((_, _, labels)) => {
                        candidate_labels(&order, &edges, &labeling).as_slice() < labels.as_slice()
                    }
                };
                if better {
                    let solution = ThresholdSolution {
                        sorted_order: order.clone(),
                        boundaries: cuts.clone(),
                        labeling,
                    };
                    let labels = solution.labels();
                    best = Some((value, solution, labels));
                }
            }
        }
    }
    let (value, solution, _) = best.expect("at least one candidate");
    Ok((solution, value))
}

/// Exact minimizer among convex-cell quantizers of a binary source, for any
/// channel.
pub fn solve_binary_thresholds(spec: &ProblemSpec) -> Result<SolveReport> {
    let (solution, _) = best_threshold_solution(spec)?;
    SolveReport::from_quantizer(
        spec,
        "thresholds",
        HardQuantizer::new(solution.labels(), spec.num_cells())?,
        Vec::new(),
        None,
    )
}

/// Dynamic program over interval partitions for a binary source sent over
/// the noiseless channel with a cell-independent constraint. `O(K M^2)`.
pub fn solve_dp_identity(spec: &ProblemSpec) -> Result<SolveReport> {
    if spec.num_sources() != 2 {
        return Err(Error::PreconditionViolated(format!(
            "dp needs a binary source, got N = {}",
            spec.num_sources()
        )));
    }
    if !spec.channel().is_identity() {
        return Err(Error::PreconditionViolated(
            "dp needs the identity channel".into(),
        ));
    }
    if !spec.constraint().is_symmetric() {
        return Err(Error::PreconditionViolated(
            "dp needs the same constraint function for every cell".into(),
        ));
    }
    let (m, k) = (spec.num_points(), spec.num_cells());
    let order = sorted_by_posterior(spec);
    let joint = spec.joint();
    let mut p0 = vec![0.0; m + 1];
    let mut p1 = vec![0.0; m + 1];
    let mut w = vec![0.0; m + 1];
    for (i, &p) in order.iter().enumerate() {
        let col = joint.column(p);
        p0[i + 1] = p0[i] + col[0];
        p1[i + 1] = p1[i] + col[1];
        w[i + 1] = w[i] + joint.p_y()[p];
    }
    let f = spec.impurity();
    let g = spec.constraint();
    let beta = spec.beta();
    let cost = |i: usize, j: usize| {
        let mass = (w[j] - w[i]).clamp(0.0, 1.0);
        beta * f.value(&[p0[j] - p0[i], p1[j] - p1[i]]) + g.value(0, mass)
    };

    let max_intervals = k.min(m);
    // best[j][e]: first e sorted points split into j+1 nonempty intervals
    let mut best = vec![vec![f64::INFINITY; m + 1]; max_intervals];
    let mut back = vec![vec![0usize; m + 1]; max_intervals];
    for e in 1..=m {
        best[0][e] = cost(0, e);
    }
    for j in 1..max_intervals {
        for e in (j + 1)..=m {
            let mut b = f64::INFINITY;
            let mut arg = j;
            for s in j..e {
                let v = best[j - 1][s] + cost(s, e);
                if v < b {
                    b = v;
                    arg = s;
                }
            }
            best[j][e] = b;
            back[j][e] = arg;
        }
    }
    let mut intervals = 0;
    for j in 1..max_intervals {
        if best[j][m] < best[intervals][m] - TIE_TOL {
            intervals = j;
        }
    }

    let mut labels = vec![0; m];
    let mut end = m;
    for j in (0..=intervals).rev() {
        let start = if j == 0 { 0 } else { back[j][end] };
        for &p in &order[start..end] {
            labels[p] = j;
        }
        end = start;
    }
    // cells are interchangeable here; number them by first appearance
    let mut rename = vec![usize::MAX; k];
    let mut next = 0;
    for l in labels.iter_mut() {
        if rename[*l] == usize::MAX {
            rename[*l] = next;
            next += 1;
        }
        *l = rename[*l];
    }
    SolveReport::from_quantizer(spec, "dp", HardQuantizer::new(labels, k)?, Vec::new(), None)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeparationViolation {
    /// The point has a strictly nearer cell.
    NotNearest(NearestViolation),
    /// Binary source: the point lies strictly inside the posterior range of
    /// another cell.
    NotContiguous { point: usize, cell: usize, inside: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCheck {
    pub separated: bool,
    pub violations: Vec<SeparationViolation>,
}

/// Checks that every point sits in a nearest cell, which is the pairwise
/// hyperplane condition in posterior space; for a binary source also checks
/// that cells are intervals of the sorted posteriors (equal posteriors may
/// interleave).
pub fn check_hyperplane_separation(spec: &ProblemSpec, q: &HardQuantizer) -> Result<SeparationCheck> {
    let state = evaluate(spec, &q.clone().into())?;
    let labels = q.labels();
    let mut violations: Vec<SeparationViolation> = nearest_violations(spec, &state, labels)?
        .into_iter()
        .map(SeparationViolation::NotNearest)
        .collect();

    if spec.num_sources() == 2 {
        let post = spec.joint().first_posterior();
        let mut span = vec![(f64::INFINITY, f64::NEG_INFINITY); spec.num_cells()];
        for (&p, &k) in post.iter().zip(labels) {
            span[k].0 = span[k].0.min(p);
            span[k].1 = span[k].1.max(p);
        }
        for (point, (&p, &cell)) in post.iter().zip(labels).enumerate() {
            for (inside, &(lo, hi)) in span.iter().enumerate() {
                if inside != cell && lo < p && p < hi {
                    violations.push(SeparationViolation::NotContiguous { point, cell, inside });
                }
            }
        }
    }
    Ok(SeparationCheck {
        separated: violations.is_empty(),
        violations,
    })
}
