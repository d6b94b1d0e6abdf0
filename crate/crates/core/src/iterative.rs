//! Alternating minimization: refresh the cell statistics, then move every
//! point to the cell with the smallest distance `D'`, until nothing moves.
//!
//! The default sequential mode refreshes statistics after every single move.
//! Each accepted move is checked against the exact objective, so the
//! objective trace is non-increasing. Batch mode reassigns all points from
//! one snapshot and stops at the best partition seen if the objective ever
//! goes up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::{nearest_cell, ProblemSpec};
use crate::prob::HardQuantizer;
use crate::report::SolveReport;

/// Slack allowed on the objective increase of a single accepted move.
const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    Batch,
    #[default]
    Sequential,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Batch => "batch",
            SweepMode::Sequential => "sequential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Init {
    #[default]
    Random,
    /// Start the first restart from these labels; later restarts are random.
    Provided(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: Init,
    pub sweep_mode: SweepMode,
    /// A point only leaves its cell for one whose `D'` is lower by more than
    /// this; within it, the lowest cell index wins.
    pub tolerance: f64,
    /// Fill empty cells with the point farthest from its own cell once a
    /// sweep stops changing anything, and never move the last point out of
    /// a cell. Ends with `min(K, M)` populated cells; this can raise the
    /// objective and void the certificate.
    pub reseed_empty: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            restarts: 10,
            seed: 0,
            init: Init::Random,
            sweep_mode: SweepMode::Sequential,
            tolerance: 1e-12,
            reseed_empty: false,
        }
    }
}

impl SolverOptions {
    fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpec("max_iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidSpec("restarts must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidSpec("tolerance must be nonnegative".into()));
        }
        if let Init::Provided(labels) = &self.init {
            HardQuantizer::new(labels.clone(), spec.num_cells())?;
            if labels.len() != spec.num_points() {
                return Err(Error::DimensionMismatch(format!(
                    "initial labels cover {} points, problem has {}",
                    labels.len(),
                    spec.num_points()
                )));
            }
        }
        Ok(())
    }
}

/// Per-point data shared by every restart, laid out point-major.
#[derive(Debug, Clone)]
pub struct PointData {
    n: usize,
    k: usize,
    h: usize,
    joint: Vec<f64>,
    post: Vec<f64>,
    p_y: Vec<f64>,
    channel: Vec<f64>,
}

impl PointData {
    pub fn new(spec: &ProblemSpec) -> Self {
        let joint_m = spec.joint();
        let n = spec.num_sources();
        let m = spec.num_points();
        let mut joint = Vec::with_capacity(n * m);
        let mut post = Vec::with_capacity(n * m);
        for (i, col) in joint_m.entries().columns().into_iter().enumerate() {
            let w = joint_m.p_y()[i];
            joint.extend(col.iter());
            post.extend(col.iter().map(|x| x / w));
        }
        Self {
            n,
            k: spec.num_cells(),
            h: spec.num_outputs(),
            joint,
            post,
            p_y: joint_m.p_y().to_vec(),
            channel: spec.channel().entries().iter().copied().collect(),
        }
    }

    pub fn num_points(&self) -> usize {
        self.p_y.len()
    }
}

/// Counts from one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOutcome {
    pub changed: usize,
    /// Moves undone because the exact objective went up.
    pub rejected: usize,
}

/// Mutable clustering state with incrementally maintained statistics.
#[derive(Debug, Clone)]
pub struct SweepState<'a> {
    spec: &'a ProblemSpec,
    data: &'a PointData,
    labels: Vec<usize>,
    cells: Vec<f64>,
    mass: Vec<f64>,
    outputs: Vec<f64>,
    grads: Vec<f64>,
    f_terms: Vec<f64>,
    d: Vec<f64>,
    g_terms: Vec<f64>,
    proj: Vec<f64>,
    dist: Vec<f64>,
    counts: Vec<usize>,
    keep_nonempty: bool,
}

impl<'a> SweepState<'a> {
    pub fn new(spec: &'a ProblemSpec, data: &'a PointData, labels: Vec<usize>) -> Result<Self> {
        HardQuantizer::new(labels.clone(), data.k)?;
        if labels.len() != data.num_points() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                data.num_points()
            )));
        }
        let (n, k, h) = (data.n, data.k, data.h);
        let mut state = Self {
            spec,
            data,
            labels,
            cells: vec![0.0; k * n],
            mass: vec![0.0; k],
            outputs: vec![0.0; h * n],
            grads: vec![0.0; h * n],
            f_terms: vec![0.0; h],
            d: vec![0.0; k],
            g_terms: vec![0.0; k],
            proj: vec![0.0; h],
            dist: vec![0.0; k],
            counts: vec![0; k],
            keep_nonempty: false,
        };
        state.refresh();
        Ok(state)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Forbid moves that would leave a cell empty.
    pub fn set_keep_nonempty(&mut self, keep: bool) {
        self.keep_nonempty = keep;
    }

    pub fn objective(&self) -> f64 {
        self.spec.beta() * self.f_terms.iter().sum::<f64>() + self.g_terms.iter().sum::<f64>()
    }

    /// Recomputes every statistic from the labels.
    pub fn refresh(&mut self) {
        let n = self.data.n;
        self.cells.iter_mut().for_each(|x| *x = 0.0);
        self.mass.iter_mut().for_each(|x| *x = 0.0);
        self.counts.iter_mut().for_each(|x| *x = 0);
        for (m, &k) in self.labels.iter().enumerate() {
            self.counts[k] += 1;
            let x = &self.data.joint[m * n..(m + 1) * n];
            self.cells[k * n..(k + 1) * n]
                .iter_mut()
                .zip(x)
                .for_each(|(c, &v)| *c += v);
            self.mass[k] += self.data.p_y[m];
        }
        self.outputs.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..self.data.k {
            for h in 0..self.data.h {
                let a = self.data.channel[k * self.data.h + h];
                if a != 0.0 {
                    let (cell, out) = (&self.cells[k * n..(k + 1) * n], &mut self.outputs[h * n..(h + 1) * n]);
                    out.iter_mut().zip(cell).for_each(|(o, &c)| *o += a * c);
                }
            }
        }
        for h in 0..self.data.h {
            self.refresh_output(h);
        }
        for k in 0..self.data.k {
            self.refresh_cell(k);
        }
    }

    fn refresh_output(&mut self, h: usize) {
        let n = self.data.n;
        let f = self.spec.impurity();
        let v = &self.outputs[h * n..(h + 1) * n];
        self.f_terms[h] = f.value(v);
        f.gradient_clamped(v, &mut self.grads[h * n..(h + 1) * n]);
    }

    fn refresh_cell(&mut self, k: usize) {
        let g = self.spec.constraint();
        let p = self.mass[k].max(0.0);
        self.g_terms[k] = g.value(k, p.min(1.0));
        self.d[k] = g.derivative(k, p);
    }

    /// Fills `self.dist` with `D'(Y_m, Z_k)` for all `k`.
    fn compute_distances(&mut self, m: usize) {
        let (n, h_count) = (self.data.n, self.data.h);
        let post = &self.data.post[m * n..(m + 1) * n];
        for (h, p) in self.proj.iter_mut().enumerate() {
            *p = self.grads[h * n..(h + 1) * n]
                .iter()
                .zip(post)
                .map(|(c, x)| c * x)
                .sum();
        }
        let beta = self.spec.beta();
        for (k, dk) in self.dist.iter_mut().enumerate() {
            let row = &self.data.channel[k * h_count..(k + 1) * h_count];
            let acc: f64 = row.iter().zip(&self.proj).map(|(a, p)| a * p).sum();
            *dk = beta * acc + self.d[k];
        }
    }

    /// `D'(Y_m, Z_k)` for every cell at the current statistics.
    pub fn distances(&mut self, m: usize) -> Vec<f64> {
        self.compute_distances(m);
        self.dist.clone()
    }

    /// Moves point `m` to cell `to`, updating only what the move touches.
    pub fn move_point(&mut self, m: usize, to: usize) {
        let from = self.labels[m];
        if from == to {
            return;
        }
        let (n, h_count) = (self.data.n, self.data.h);
        let x = &self.data.joint[m * n..(m + 1) * n];
        for (c, &v) in self.cells[from * n..(from + 1) * n].iter_mut().zip(x) {
            *c -= v;
        }
        for (c, &v) in self.cells[to * n..(to + 1) * n].iter_mut().zip(x) {
            *c += v;
        }
        self.mass[from] -= self.data.p_y[m];
        self.mass[to] += self.data.p_y[m];
        self.counts[from] -= 1;
        self.counts[to] += 1;
        self.labels[m] = to;
        for h in 0..h_count {
            let delta = self.data.channel[to * h_count + h] - self.data.channel[from * h_count + h];
            if delta != 0.0 {
                for (o, &v) in self.outputs[h * n..(h + 1) * n].iter_mut().zip(x) {
                    *o += delta * v;
                }
                self.refresh_output(h);
            }
        }
        self.refresh_cell(from);
        self.refresh_cell(to);
    }

    /// One pass over all points in index order.
    pub fn sweep(&mut self, mode: SweepMode, tolerance: f64) -> SweepOutcome {
        match mode {
            SweepMode::Sequential => self.sweep_sequential(tolerance),
            SweepMode::Batch => self.sweep_batch(tolerance),
        }
    }

    fn sweep_sequential(&mut self, tolerance: f64) -> SweepOutcome {
        let mut outcome = SweepOutcome::default();
        for m in 0..self.labels.len() {
            self.compute_distances(m);
            let best = nearest_cell(&self.dist, tolerance);
            let current = self.labels[m];
            if best == current || (self.keep_nonempty && self.counts[current] == 1) {
                continue;
            }
            let before = self.objective();
            self.move_point(m, best);
            if self.objective() > before + MONOTONE_TOL {
                self.move_point(m, current);
                outcome.rejected += 1;
            } else {
                outcome.changed += 1;
            }
        }
        outcome
    }

    fn sweep_batch(&mut self, tolerance: f64) -> SweepOutcome {
        let mut next = self.labels.clone();
        let mut changed = 0;
        for (m, label) in next.iter_mut().enumerate() {
            self.compute_distances(m);
            let best = nearest_cell(&self.dist, tolerance);
            if best != *label && !(self.keep_nonempty && self.counts[*label] == 1) {
                *label = best;
                changed += 1;
            }
        }
        self.labels = next;
        self.refresh();
        SweepOutcome { changed, rejected: 0 }
    }

    /// True when every point attains its minimal `D'` within `tol`.
    pub fn is_certified(&mut self, tol: f64) -> bool {
        (0..self.labels.len()).all(|m| {
            self.compute_distances(m);
            let min = self.dist.iter().copied().fold(f64::INFINITY, f64::min);
            self.dist[self.labels[m]] <= min + tol
        })
    }

    /// Moves the point farthest from its own (shared) cell into the lowest
    /// empty cell. Returns false when there is nothing to do.
    fn reseed_one_empty(&mut self) -> bool {
        let Some(empty) = self.counts.iter().position(|&c| c == 0) else {
            return false;
        };
        let mut pick: Option<(usize, f64)> = None;
        for m in 0..self.labels.len() {
            if self.counts[self.labels[m]] < 2 {
                continue;
            }
            self.compute_distances(m);
            let own = self.dist[self.labels[m]];
            if pick.is_none_or(|(_, best)| own > best) {
                pick = Some((m, own));
            }
        }
        match pick {
            Some((m, _)) => {
                self.move_point(m, empty);
                true
            }
            None => false,
        }
    }
}

/// One sweep from the given labels. Returns the new labels and how many
/// points changed cell.
pub fn reassign_sweep(
    spec: &ProblemSpec,
    labels: &[usize],
    mode: SweepMode,
    tolerance: f64,
) -> Result<(Vec<usize>, usize)> {
    let data = PointData::new(spec);
    let mut state = SweepState::new(spec, &data, labels.to_vec())?;
    let outcome = state.sweep(mode, tolerance);
    Ok((state.labels, outcome.changed))
}

struct RestartResult {
    labels: Vec<usize>,
    objective: f64,
    trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

fn random_init(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        if k == 1 || m < 2 || labels.iter().any(|&l| l != labels[0]) {
            return labels;
        }
    }
}

fn run_restart(
    spec: &ProblemSpec,
    data: &PointData,
    opts: &SolverOptions,
    labels: Vec<usize>,
) -> Result<RestartResult> {
    let mut state = SweepState::new(spec, data, labels)?;
    state.set_keep_nonempty(opts.reseed_empty);
    if opts.reseed_empty {
        while state.reseed_one_empty() {}
    }
    let mut trace = vec![state.objective()];
    let mut sweeps = 0;
    let mut best = (state.objective(), state.labels.clone());
    let mut converged = spec.num_cells() == 1;

    if !converged {
        while sweeps < opts.max_iterations {
            let outcome = state.sweep(opts.sweep_mode, opts.tolerance);
            sweeps += 1;
            state.refresh();
            let objective = state.objective();
            if opts.sweep_mode == SweepMode::Batch && objective > best.0 + MONOTONE_TOL {
                // cycling or overshooting: fall back to the best partition seen
                state.labels = best.1.clone();
                state.refresh();
                break;
            }
            trace.push(objective);
            if objective <= best.0 {
                best = (objective, state.labels.clone());
            }
            if outcome.changed == 0 {
                if opts.reseed_empty && state.reseed_one_empty() {
                    continue;
                }
                converged = true;
                break;
            }
        }
    }
    Ok(RestartResult {
        objective: state.objective(),
        labels: state.labels,
        trace,
        sweeps,
        converged,
    })
}

/// Best local optimum over `opts.restarts` runs.
pub fn solve_iterative(spec: &ProblemSpec, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate(spec)?;
    let data = PointData::new(spec);
    let (m, k) = (spec.num_points(), spec.num_cells());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut results = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        rng.set_stream(r as u64);
        let init = match (&opts.init, r) {
            (Init::Provided(labels), 0) => labels.clone(),
            _ => random_init(&mut rng, m, k),
        };
        results.push(run_restart(spec, &data, opts, init)?);
    }

    let iterations_used = results.iter().map(|r| r.sweeps).collect();
    let converged: Vec<bool> = results.iter().map(|r| r.converged).collect();
    let winner = results
        .into_iter()
        .reduce(|best, r| if r.objective < best.objective { r } else { best })
        .expect("at least one restart");

    let mut report = SolveReport::from_quantizer(
        spec,
        &format!("iterative-{}", opts.sweep_mode.name()),
        HardQuantizer::new(winner.labels, k)?,
        iterations_used,
        Some(winner.trace),
    )?;
    report.converged = converged;
    Ok(report)
}
