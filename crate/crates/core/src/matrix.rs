//! One-round zero-sum matrix games solved exactly by a dense simplex,
//! plus the convex-separation primitive used to certify optimality.
//!
//! The same tableau code runs in `f64` and in exact rationals; the exact
//! mode is what the oracle tests lean on.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, ToPrimitive, Zero};

use crate::rational::Q;

/// Number field the solvers are generic over. `f64` gets a small comparison
/// slack, rationals compare exactly.
pub trait Field:
    Clone
    + PartialOrd
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_q(x: &Q) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact rational view: the identity for rationals, the binary
    /// rational of the float otherwise.
    fn to_exact(&self) -> Q;
    /// Pivot / comparison slack (zero for exact arithmetic).
    fn eps() -> Self;
    fn abs_val(&self) -> Self;
}

impl Field for f64 {
    fn from_q(x: &Q) -> Self {
        crate::rational::q_to_f64(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_exact(&self) -> Q {
        // Compact approximation: floats carry at most ~16 digits anyway,
        // and strategy rows read far better as 1/3 than as a 2^54-ths.
        let exact = Q::from_float(*self).unwrap_or_else(num_traits::Zero::zero);
        crate::rational::limit_denominator(&exact, 1_000_000_000)
    }
    fn eps() -> Self {
        1e-12
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Field for Q {
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_exact(&self) -> Q {
        self.clone()
    }
    fn eps() -> Self {
        Q::zero()
    }
    fn abs_val(&self) -> Self {
        if *self < Q::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    EmptyMatrix,
    RaggedMatrix { row: usize },
    NonFiniteEntry { row: usize, col: usize },
    NonPositiveTolerance,
    DimensionMismatch { expected: usize, got: usize },
    Numerical(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::EmptyMatrix => write!(f, "payoff matrix must be nonempty"),
            SolveError::RaggedMatrix { row } => {
                write!(f, "payoff matrix row {row} has a different length")
            }
            SolveError::NonFiniteEntry { row, col } => {
                write!(f, "payoff entry at ({row}, {col}) is not finite")
            }
            SolveError::NonPositiveTolerance => write!(f, "tolerance must be positive"),
            SolveError::DimensionMismatch { expected, got } => {
                write!(f, "expected vectors of dimension {expected}, got {got}")
            }
            SolveError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for SolveError {}

/// Solution of a one-round game: the value, an optimal mixed strategy for
/// each player, and how far the returned strategies are from certifying it.
#[derive(Debug, Clone)]
pub struct MatrixSolution<S> {
    pub value: S,
    pub row_strategy: Vec<S>,
    pub col_strategy: Vec<S>,
    /// Row-guarantee violation plus column-guarantee violation; zero in
    /// exact mode.
    pub certificate_gap: S,
}

impl<S: Field> MatrixSolution<S> {
    /// `min_j sum_i x_i f(i,j)` — what the row strategy guarantees.
    pub fn row_guarantee(&self, payoffs: &[Vec<S>]) -> S {
        let mut best: Option<S> = None;
        for j in 0..payoffs[0].len() {
            let mut total = S::zero();
            for (i, row) in payoffs.iter().enumerate() {
                total = total + self.row_strategy[i].clone() * row[j].clone();
            }
            best = Some(match best {
                None => total,
                Some(b) => {
                    if total < b {
                        total
                    } else {
                        b
                    }
                }
            });
        }
        best.expect("nonempty matrix")
    }

    /// `max_i sum_j y_j f(i,j)` — what the column strategy concedes.
    pub fn col_guarantee(&self, payoffs: &[Vec<S>]) -> S {
        let mut best: Option<S> = None;
        for row in payoffs {
            let mut total = S::zero();
            for (j, y) in self.col_strategy.iter().enumerate() {
                total = total + y.clone() * row[j].clone();
            }
            best = Some(match best {
                None => total,
                Some(b) => {
                    if total > b {
                        total
                    } else {
                        b
                    }
                }
            });
        }
        best.expect("nonempty matrix")
    }
}

fn check_shape<S>(payoffs: &[Vec<S>]) -> Result<(usize, usize), SolveError> {
    if payoffs.is_empty() || payoffs[0].is_empty() {
        return Err(SolveError::EmptyMatrix);
    }
    let cols = payoffs[0].len();
    for (i, row) in payoffs.iter().enumerate() {
        if row.len() != cols {
            return Err(SolveError::RaggedMatrix { row: i });
        }
    }
    Ok((payoffs.len(), cols))
}

/// Solve a matrix game in `f64` with the given certificate tolerance.
pub fn solve_matrix(payoffs: &[Vec<f64>], tol: f64) -> Result<MatrixSolution<f64>, SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::NonPositiveTolerance);
    }
    let (rows, cols) = check_shape(payoffs)?;
    for (i, row) in payoffs.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(SolveError::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    let _ = (rows, cols);
    solve_matrix_generic(payoffs)
}

/// Solve a matrix game exactly. The certificate gap is exactly zero.
pub fn solve_matrix_exact(payoffs: &[Vec<Q>]) -> Result<MatrixSolution<Q>, SolveError> {
    check_shape(payoffs)?;
    solve_matrix_generic(payoffs)
}

pub(crate) fn solve_matrix_generic<S: Field>(
    payoffs: &[Vec<S>],
) -> Result<MatrixSolution<S>, SolveError> {
    let rows = payoffs.len();
    let cols = payoffs[0].len();

    // Shift so every entry is at least one; the shifted value is positive
    // and strategies are unchanged.
    let mut min_entry = payoffs[0][0].clone();
    for row in payoffs {
        for v in row {
            if *v < min_entry {
                min_entry = v.clone();
            }
        }
    }
    let shift = S::one() - min_entry;
    let shifted: Vec<Vec<S>> = payoffs
        .iter()
        .map(|row| row.iter().map(|v| v.clone() + shift.clone()).collect())
        .collect();

    // Column player's scaled program: max sum(u) s.t. B u <= 1, u >= 0.
    // The optimum is 1/v, the duals recover the row player's strategy.
    let objective = vec![S::one(); cols];
    let rhs = vec![S::one(); rows];
    let lp = simplex_max(&objective, &shifted, &rhs)?;

    let total: S = lp.solution.iter().fold(S::zero(), |acc, v| acc + v.clone());
    if !(total > S::eps()) {
        return Err(SolveError::Numerical(
            "degenerate game program: zero optimum".into(),
        ));
    }
    let shifted_value = S::one() / total.clone();
    let value = shifted_value.clone() - shift;

    let col_strategy: Vec<S> = lp
        .solution
        .iter()
        .map(|u| u.clone() * shifted_value.clone())
        .collect();
    let row_strategy: Vec<S> = lp
        .duals
        .iter()
        .map(|d| d.clone() * shifted_value.clone())
        .collect();

    let mut solution = MatrixSolution {
        value,
        row_strategy,
        col_strategy,
        certificate_gap: S::zero(),
    };
    normalize_distribution(&mut solution.row_strategy);
    normalize_distribution(&mut solution.col_strategy);
    let row_violation = positive_part(solution.value.clone() - solution.row_guarantee(payoffs));
    let col_violation = positive_part(solution.col_guarantee(payoffs) - solution.value.clone());
    solution.certificate_gap = row_violation + col_violation;
    Ok(solution)
}

fn positive_part<S: Field>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

/// Clamp rounding dust and rescale so the entries sum to exactly one.
fn normalize_distribution<S: Field>(dist: &mut [S]) {
    for v in dist.iter_mut() {
        if *v < S::zero() {
            *v = S::zero();
        }
    }
    let total: S = dist.iter().fold(S::zero(), |acc, v| acc + v.clone());
    if total > S::eps() {
        for v in dist.iter_mut() {
            *v = v.clone() / total.clone();
        }
    }
}

struct LpResult<S> {
    solution: Vec<S>,
    duals: Vec<S>,
}

/// Dense tableau simplex for `max c.x` s.t. `A x <= b`, `x >= 0` with
/// `b >= 0`, so the slack basis is feasible. Bland's rule on both the
/// entering and leaving choices keeps it from cycling and makes ties
/// deterministic.
fn simplex_max<S: Field>(c: &[S], a: &[Vec<S>], b: &[S]) -> Result<LpResult<S>, SolveError> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let rhs = n + m;

    let mut tableau: Vec<Vec<S>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = vec![S::zero(); width];
        for j in 0..n {
            row[j] = a[i][j].clone();
        }
        row[n + i] = S::one();
        row[rhs] = b[i].clone();
        tableau.push(row);
    }
    // Objective row holds reduced costs; entering columns have positive
    // entries while improvement is possible.
    let mut obj = vec![S::zero(); width];
    for j in 0..n {
        obj[j] = c[j].clone();
    }

    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_iters = 64 * (n + m + 1) * (m + 1);

    for _ in 0..max_iters {
        // Bland: smallest-index improving column.
        let mut entering = None;
        for (j, cost) in obj.iter().enumerate().take(n + m) {
            if *cost > S::eps() {
                entering = Some(j);
                break;
            }
        }
        let Some(entering) = entering else {
            // Optimal.
            let mut solution = vec![S::zero(); n];
            for (i, &var) in basis.iter().enumerate() {
                if var < n {
                    solution[var] = tableau[i][rhs].clone();
                }
            }
            // Duals are the negated reduced costs of the slack columns.
            let mut duals = Vec::with_capacity(m);
            for i in 0..m {
                duals.push(positive_part(-obj[n + i].clone()));
            }
            return Ok(LpResult { solution, duals });
        };

        let mut leaving: Option<(usize, S)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if row[entering] > S::eps() {
                let ratio = row[rhs].clone() / row[entering].clone();
                let better = match &leaving {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leaving else {
            return Err(SolveError::Numerical("unbounded program".into()));
        };

        let pivot = tableau[pivot_row][entering].clone();
        for v in tableau[pivot_row].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        for i in 0..m {
            if i == pivot_row {
                continue;
            }
            let factor = tableau[i][entering].clone();
            if factor == S::zero() {
                continue;
            }
            for j in 0..width {
                let delta = factor.clone() * tableau[pivot_row][j].clone();
                tableau[i][j] = tableau[i][j].clone() - delta;
            }
        }
        let factor = obj[entering].clone();
        if factor != S::zero() {
            for j in 0..width {
                let delta = factor.clone() * tableau[pivot_row][j].clone();
                obj[j] = obj[j].clone() - delta;
            }
        }
        basis[pivot_row] = entering;
    }
    Err(SolveError::Numerical("simplex iteration limit".into()))
}

/// Result of testing a point against the convex hull of a point set.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    /// The point lies in the hull (within tolerance).
    Inside,
    /// A unit normal `y` and offset `d` with `y.b > d` and `y.z < d` for
    /// every hull point `z`.
    Separated { normal: Vec<f64>, offset: f64 },
}

/// Separate `b` from the convex hull of `points`, or report that it lies
/// inside. The nearest hull point is found by Wolfe's minimum-norm-point
/// algorithm; the hyperplane bisects the segment from `b` to that point.
pub fn separating_hyperplane(
    points: &[Vec<f64>],
    b: &[f64],
    tol: f64,
) -> Result<Separation, SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::NonPositiveTolerance);
    }
    if points.is_empty() {
        return Err(SolveError::EmptyMatrix);
    }
    let dim = b.len();
    for p in points {
        if p.len() != dim {
            return Err(SolveError::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::Numerical("non-finite point".into()));
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::Numerical("non-finite query point".into()));
    }

    // Shift so we seek the minimum-norm point of conv(points - b).
    let shifted: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();

    let nearest_shifted = min_norm_point(&shifted)?;
    let dist = norm(&nearest_shifted);
    if dist <= tol {
        return Ok(Separation::Inside);
    }
    let nearest: Vec<f64> = nearest_shifted.iter().zip(b).map(|(x, y)| x + y).collect();
    let mut normal: Vec<f64> = b.iter().zip(&nearest).map(|(x, c)| x - c).collect();
    let len = norm(&normal);
    for v in normal.iter_mut() {
        *v /= len;
    }
    let offset = 0.5 * (dot(&normal, b) + dot(&normal, &nearest));
    Ok(Separation::Separated { normal, offset })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Wolfe's algorithm: minimum-norm point in the convex hull of `points`.
fn min_norm_point(points: &[Vec<f64>]) -> Result<Vec<f64>, SolveError> {
    const ZERO_TOL: f64 = 1e-14;
    let dim = points[0].len();

    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if dot(p, p) < dot(&points[best], &points[best]) {
            best = i;
        }
    }
    let mut corral: Vec<usize> = vec![best];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x: Vec<f64> = points[best].clone();

    for _ in 0..64 * (points.len() + dim + 1) {
        let xx = dot(&x, &x);
        if xx <= ZERO_TOL {
            return Ok(vec![0.0; dim]);
        }
        // Linear minimization step: most violating vertex.
        let mut cand = 0;
        let mut cand_val = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            let v = dot(&x, p);
            if v < cand_val - ZERO_TOL {
                cand_val = v;
                cand = i;
            }
        }
        if cand_val >= xx - 1e-12 * (1.0 + xx) || corral.contains(&cand) {
            return Ok(x);
        }
        corral.push(cand);
        weights.push(0.0);

        loop {
            let alpha = affine_minimizer(points, &corral)?;
            if alpha.iter().all(|&a| a > ZERO_TOL) {
                weights = alpha;
                break;
            }
            // Step toward the affine minimizer until a weight hits zero.
            let mut theta = 1.0f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= ZERO_TOL {
                    let t = w / (w - a);
                    if t < theta {
                        theta = t;
                    }
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w = (1.0 - theta) * *w + theta * a;
            }
            let keep: Vec<usize> = (0..corral.len())
                .filter(|&i| weights[i] > ZERO_TOL)
                .collect();
            if keep.len() == corral.len() {
                // Numerical stall; accept the current corral.
                break;
            }
            corral = keep.iter().map(|&i| corral[i]).collect();
            weights = keep.iter().map(|&i| weights[i]).collect();
        }

        x = vec![0.0; dim];
        for (idx, w) in corral.iter().zip(&weights) {
            for (xi, pi) in x.iter_mut().zip(&points[*idx]) {
                *xi += w * pi;
            }
        }
    }
    Ok(x)
}

/// Minimum-norm point of the affine hull of the selected points, returned
/// as affine coordinates. Solves the bordered Gram system.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Result<Vec<f64>, SolveError> {
    let k = corral.len();
    let mut system = vec![vec![0.0; k + 2]; k + 1];
    for i in 0..k {
        for j in 0..k {
            system[i][j] = dot(&points[corral[i]], &points[corral[j]]);
        }
        system[i][k] = 1.0;
        system[i][k + 1] = 0.0;
    }
    for j in 0..k {
        system[k][j] = 1.0;
    }
    system[k][k + 1] = 1.0;

    // Gaussian elimination with partial pivoting.
    let n = k + 1;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if system[row][col].abs() > system[pivot][col].abs() {
                pivot = row;
            }
        }
        if system[pivot][col].abs() < 1e-13 {
            return Err(SolveError::Numerical("singular affine system".into()));
        }
        system.swap(col, pivot);
        let diag = system[col][col];
        for j in col..=n {
            system[col][j] /= diag;
        }
        for row in 0..n {
            if row != col {
                let f = system[row][col];
                if f != 0.0 {
                    for j in col..=n {
                        system[row][j] -= f * system[col][j];
                    }
                }
            }
        }
    }
    Ok((0..k).map(|i| system[i][k + 1]).collect())
}
