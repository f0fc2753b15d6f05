//! Box-constrained augmented Lagrangian solver for smooth problems with
//! inequality constraints `g(z) <= 0` and variables in `[-1, 1]^n`.
//!
//! Subproblems are minimized by a projected limited-memory BFGS method: the
//! quasi-Newton direction is computed on the variables not held at a bound,
//! followed by a backtracking search along the projection of that direction.

/// A problem evaluated in two passes: `forward` computes the cost and the
/// constraint values, `backward` returns the gradient of
/// `cost + sum(w[i] * g[i])` at the point of the last `forward` call.
pub trait Problem {
    fn dim(&self) -> usize;
    fn n_constraints(&self) -> usize;
    fn forward(&mut self, z: &[f64], g: &mut [f64]) -> f64;
    fn backward(&mut self, w: &[f64], grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Total quasi-Newton iterations across all subproblems.
    pub max_iterations: usize,
    /// Largest tolerated constraint value of an accepted point.
    pub constraint_tol: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    /// Cap on iterations per subproblem before multipliers are updated.
    pub inner_iterations: usize,
    /// Projected-gradient norm (inf-norm) at which a subproblem is converged.
    pub gradient_tol: f64,
    /// Stored correction pairs of the quasi-Newton approximation.
    pub memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            constraint_tol: 1e-3,
            initial_penalty: 30.0,
            penalty_growth: 10.0,
            max_penalty: 1e7,
            inner_iterations: 50,
            gradient_tol: 1e-4,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Best feasible point found, if any.
    pub feasible: Option<Vec<f64>>,
    pub cost: f64,
    pub max_violation: f64,
    pub iterations: usize,
    /// The last subproblem reached the gradient tolerance at a feasible point.
    pub converged: bool,
}

struct Workspace {
    g: Vec<f64>,
    w: Vec<f64>,
    grad: Vec<f64>,
    trial: Vec<f64>,
    trial_grad: Vec<f64>,
    dir: Vec<f64>,
}

struct Tracker {
    best: Option<(f64, Vec<f64>)>,
    last_violation: f64,
    tol: f64,
}

impl Tracker {
    fn offer(&mut self, z: &[f64], cost: f64, g: &[f64]) {
        let violation = g.iter().copied().fold(0.0, f64::max);
        self.last_violation = violation;
        if violation <= self.tol && self.best.as_ref().is_none_or(|(c, _)| cost < *c) {
            self.best = Some((cost, z.to_vec()));
        }
    }
}

fn augmented(cost: f64, g: &[f64], lambda: &[f64], mu: f64, w: &mut [f64]) -> f64 {
    let mut value = cost;
    for ((gi, li), wi) in g.iter().zip(lambda).zip(w.iter_mut()) {
        let shifted = (li + mu * gi).max(0.0);
        *wi = shifted;
        value += (shifted * shifted - li * li) / (2.0 * mu);
    }
    value
}

fn project(z: &mut [f64]) {
    for v in z {
        *v = v.clamp(-1.0, 1.0);
    }
}

pub fn solve<P: Problem>(problem: &mut P, start: &[f64], opts: &SolverOptions) -> Solution {
    let n = problem.dim();
    let m = problem.n_constraints();
    assert_eq!(start.len(), n);
    let mut z = start.to_vec();
    project(&mut z);
    let mut ws = Workspace {
        g: vec![0.0; m],
        w: vec![0.0; m],
        grad: vec![0.0; n],
        trial: vec![0.0; n],
        trial_grad: vec![0.0; n],
        dir: vec![0.0; n],
    };
    let mut tracker = Tracker {
        best: None,
        last_violation: f64::INFINITY,
        tol: opts.constraint_tol,
    };
    let mut lambda = vec![0.0; m];
    let mut mu = opts.initial_penalty;
    let mut used = 0;
    let mut previous_violation = f64::INFINITY;
    let mut converged = false;

    while used < opts.max_iterations {
        let budget = opts.inner_iterations.min(opts.max_iterations - used);
        let (iters, inner_converged) =
            minimize_subproblem(problem, &mut z, &lambda, mu, budget, opts, &mut ws, &mut tracker);
        used += iters;
        let violation = tracker.last_violation;
        if violation <= opts.constraint_tol && inner_converged {
            converged = true;
            break;
        }
        for (li, gi) in lambda.iter_mut().zip(&ws.g) {
            *li = (*li + mu * gi).max(0.0);
        }
        if violation > 0.25 * previous_violation {
            mu = (mu * opts.penalty_growth).min(opts.max_penalty);
        }
        previous_violation = violation;
        if iters == 0 {
            break;
        }
    }

    let max_violation = tracker.last_violation;
    if max_violation > opts.constraint_tol {
        pull_back(problem, &z, &mut ws, &mut tracker);
    }

    let (feasible, cost) = match tracker.best {
        Some((cost, best)) => (Some(best), cost),
        None => (None, f64::NAN),
    };
    Solution {
        feasible,
        cost,
        max_violation,
        iterations: used,
        converged,
    }
}

/// Bisects the segment from the best feasible point toward the infeasible
/// final iterate `z` for the farthest point that still meets the constraints.
fn pull_back<P: Problem>(problem: &mut P, z: &[f64], ws: &mut Workspace, tracker: &mut Tracker) {
    const HALVINGS: usize = 12;
    let Some((_, best)) = tracker.best.clone() else {
        return;
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..HALVINGS {
        let t = 0.5 * (lo + hi);
        for i in 0..z.len() {
            ws.trial[i] = best[i] + t * (z[i] - best[i]);
        }
        let cost = problem.forward(&ws.trial, &mut ws.g);
        tracker.offer(&ws.trial, cost, &ws.g);
        if tracker.last_violation <= tracker.tol {
            lo = t;
        } else {
            hi = t;
        }
    }
}

/// Variable `i` sits on a bound and the gradient pushes it further out.
fn pinned(z: f64, grad: f64) -> bool {
    (z <= -1.0 && grad > 0.0) || (z >= 1.0 && grad < 0.0)
}

/// Two-loop recursion on the free variables: `dir = -H grad`.
fn lbfgs_direction(grad: &[f64], free: &[bool], pairs: &[(Vec<f64>, Vec<f64>, f64)], dir: &mut [f64]) {
    for i in 0..dir.len() {
        dir[i] = if free[i] { -grad[i] } else { 0.0 };
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 { (0..a.len()).filter(|&i| free[i]).map(|i| a[i] * b[i]).sum() };
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, dir);
        for i in 0..dir.len() {
            if free[i] {
                dir[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.last() {
        let yy = dot(y, y);
        if yy > 0.0 {
            let gamma = dot(s, y) / yy;
            if gamma > 0.0 {
                for d in dir.iter_mut() {
                    *d *= gamma;
                }
            }
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, dir);
        for i in 0..dir.len() {
            if free[i] {
                dir[i] += (a - b) * s[i];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn minimize_subproblem<P: Problem>(
    problem: &mut P,
    z: &mut [f64],
    lambda: &[f64],
    mu: f64,
    max_iter: usize,
    opts: &SolverOptions,
    ws: &mut Workspace,
    tracker: &mut Tracker,
) -> (usize, bool) {
    const ARMIJO: f64 = 1e-4;
    /// Largest change of any normalized control in one iteration.
    const MAX_STEP: f64 = 0.5;
    let n = z.len();
    let mut cost = problem.forward(z, &mut ws.g);
    tracker.offer(z, cost, &ws.g);
    let mut value = augmented(cost, &ws.g, lambda, mu, &mut ws.w);
    problem.backward(&ws.w, &mut ws.grad);

    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(opts.memory);
    let mut free = vec![true; n];

    for it in 0..max_iter {
        let mut pg_norm = 0.0f64;
        for i in 0..n {
            pg_norm = pg_norm.max(((z[i] - ws.grad[i]).clamp(-1.0, 1.0) - z[i]).abs());
            free[i] = !pinned(z[i], ws.grad[i]);
        }
        if pg_norm < opts.gradient_tol {
            return (it, true);
        }

        lbfgs_direction(&ws.grad, &free, &pairs, &mut ws.dir);
        let mut slope: f64 = (0..n).map(|i| ws.grad[i] * ws.dir[i]).sum();
        if slope >= 0.0 {
            pairs.clear();
            lbfgs_direction(&ws.grad, &free, &pairs, &mut ws.dir);
            slope = (0..n).map(|i| ws.grad[i] * ws.dir[i]).sum();
        }
        if pairs.is_empty() {
            // no curvature yet: scale the gradient step to a modest length
            let size = ws.dir.iter().fold(0.0f64, |a, d| a.max(d.abs()));
            if size > 0.0 {
                let k = (0.1 / size).min(1.0);
                for d in ws.dir.iter_mut() {
                    *d *= k;
                }
            }
        }
        let size = ws.dir.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if size > MAX_STEP {
            let k = MAX_STEP / size;
            for d in ws.dir.iter_mut() {
                *d *= k;
            }
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut decrease = 0.0;
            for i in 0..n {
                ws.trial[i] = (z[i] + t * ws.dir[i]).clamp(-1.0, 1.0);
                decrease += ws.grad[i] * (ws.trial[i] - z[i]);
            }
            cost = problem.forward(&ws.trial, &mut ws.g);
            let trial_value = augmented(cost, &ws.g, lambda, mu, &mut ws.w);
            if decrease < 0.0 && trial_value <= value + ARMIJO * decrease {
                value = trial_value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted && !pairs.is_empty() {
            // the curvature model misled the search: retry along the gradient
            pairs.clear();
            cost = problem.forward(z, &mut ws.g);
            augmented(cost, &ws.g, lambda, mu, &mut ws.w);
            continue;
        }
        if !accepted {
            // restore the evaluation state at z
            cost = problem.forward(z, &mut ws.g);
            augmented(cost, &ws.g, lambda, mu, &mut ws.w);
            return (it + 1, false);
        }

        tracker.offer(&ws.trial, cost, &ws.g);
        problem.backward(&ws.w, &mut ws.trial_grad);
        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        let (mut sy, mut yy) = (0.0, 0.0);
        for i in 0..n {
            s[i] = ws.trial[i] - z[i];
            y[i] = ws.trial_grad[i] - ws.grad[i];
            sy += s[i] * y[i];
            yy += y[i] * y[i];
        }
        if sy > 1e-10 * yy.max(1e-300) {
            if pairs.len() == opts.memory {
                pairs.remove(0);
            }
            pairs.push((s, y, 1.0 / sy));
        }
        z.copy_from_slice(&ws.trial);
        ws.grad.copy_from_slice(&ws.trial_grad);
    }
    (max_iter, false)
}
