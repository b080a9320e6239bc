//! Benchmark problems: analytical solution evaluators, snapshot generation,
//! the interleaved train/validation/test split, and the time-extension
//! transform.
//!
//! The solutions are evaluated analytically; no PDE time-stepper is involved.
//! Times and space coordinates come from endpoint-inclusive uniform grids.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{format_g17, Scalar};

/// Default spatial resolution.
pub const DEFAULT_N: usize = 512;
/// Default number of time samples.
pub const DEFAULT_N_T: usize = 300;

/// Uniform space-time grid with both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid<T> {
    xi: Vec<T>,
    t: Vec<T>,
}

/// Endpoint-exact uniform samples: `a + (b-a) * i/(n-1)`.
fn linspace<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    let denom = T::of((n - 1) as f64);
    (0..n)
        .map(|i| a + (b - a) * (T::of(i as f64) / denom))
        .collect()
}

impl<T: Scalar> SpaceTimeGrid<T> {
    pub fn new(space: (T, T), n: usize, time: (T, T), n_t: usize) -> Result<Self> {
        if n < 2 || n_t < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 2 points per axis, got n={n}, n_t={n_t}"
            )));
        }
        if space.1 <= space.0 || time.1 <= time.0 {
            return Err(Error::InvalidInput("grid bounds must be increasing".into()));
        }
        Ok(SpaceTimeGrid {
            xi: linspace(space.0, space.1, n),
            t: linspace(time.0, time.1, n_t),
        })
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }

    pub fn xi(&self) -> &[T] {
        &self.xi
    }

    pub fn t(&self) -> &[T] {
        &self.t
    }
}

/// Benchmark problem with its constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem<T> {
    Burgers { reynolds: T },
    Advection { speed: T, width: T, offset: T },
}

impl<T: Scalar> Problem<T> {
    /// Viscous Burgers' benchmark at Re = 1000.
    pub fn burgers_default() -> Self {
        Problem::Burgers {
            reynolds: T::of(1000.0),
        }
    }

    /// Advected sawtooth with c = 1, σ = 0.1, β = 0.
    pub fn advection_default() -> Self {
        Problem::Advection {
            speed: T::one(),
            width: T::of(0.1),
            offset: T::zero(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Problem::Burgers { .. } => "burgers",
            Problem::Advection { .. } => "advection",
        }
    }

    /// Default grid: Ω = [0,1] with 512 points; T = [0,4] (Burgers) or
    /// [0,1] (advection) with 300 points.
    pub fn default_grid(&self) -> SpaceTimeGrid<T> {
        let t_end = match self {
            Problem::Burgers { .. } => T::of(4.0),
            Problem::Advection { .. } => T::one(),
        };
        SpaceTimeGrid::new(
            (T::zero(), T::one()),
            DEFAULT_N,
            (T::zero(), t_end),
            DEFAULT_N_T,
        )
        .expect("default grid is valid")
    }

    pub fn solution(&self, t: T, xi: T) -> T {
        match *self {
            Problem::Burgers { reynolds } => burgers_solution(t, xi, reynolds),
            Problem::Advection {
                speed,
                width,
                offset,
            } => advection_solution(t, xi, speed, width, offset),
        }
    }
}

/// Closed-form solution of the viscous Burgers' benchmark,
/// `x(t,ξ) = ξ/(t+1) · (1 + √((t+1)/exp(Re/8)) · exp(Re ξ²/(4t+4)))⁻¹`.
///
/// The two exponentials are combined into a single exponent,
/// `exp(Re ξ²/(4t+4) − Re/16 + ln(t+1)/2)`, which keeps the evaluation
/// accurate near the shock at Re = 1000.
pub fn burgers_solution<T: Scalar>(t: T, xi: T, reynolds: T) -> T {
    let four = T::of(4.0);
    let exponent = reynolds * xi * xi / (four * t + four) - reynolds / T::of(16.0)
        + (t + T::one()).ln() / T::of(2.0);
    xi / (t + T::one()) / (T::one() + exponent.exp())
}

/// Advected sawtooth: `(1/σ)(ξ − ct − β)` on `β ≤ ξ − ct ≤ β + σ`, else 0.
/// Both support boundaries are inclusive.
pub fn advection_solution<T: Scalar>(t: T, xi: T, speed: T, width: T, offset: T) -> T {
    let shifted = xi - speed * t;
    if shifted >= offset && shifted <= offset + width {
        (shifted - offset) / width
    } else {
        T::zero()
    }
}

/// Dense snapshot matrix with its time stamps and grid metadata.
#[derive(Debug, Clone)]
pub struct SnapshotSet<T> {
    pub states: Matrix<T>,
    pub times: Vec<T>,
    pub problem_tag: String,
    pub grid: SpaceTimeGrid<T>,
}

impl<T: Scalar> SnapshotSet<T> {
    pub fn n(&self) -> usize {
        self.states.rows()
    }

    pub fn len(&self) -> usize {
        self.states.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Indices of identically-zero columns. Relative-error evaluations must
    /// skip these; for the default advection setup exactly the final time
    /// t = 1 is affected, where the sawtooth has left the domain.
    pub fn zero_column_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.states.col_norm(j) == T::zero())
            .collect()
    }
}

/// Snapshot matrix with the raw time stamps prepended as row 0.
#[derive(Debug, Clone)]
pub struct ExtendedSnapshotSet<T> {
    pub states_ext: Matrix<T>,
    pub times: Vec<T>,
}

impl<T: Scalar> ExtendedSnapshotSet<T> {
    /// Drops the time row, recovering the plain state matrix bitwise.
    pub fn strip(&self) -> Matrix<T> {
        Matrix::from_fn(self.states_ext.rows() - 1, self.states_ext.cols(), |i, j| {
            self.states_ext.get(i + 1, j)
        })
    }
}

/// Disjoint interleaved index sets over the time columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl DataSplit {
    /// `train = {3i}`, `val = {3i+1}`, `test = {3i+2}` (0-based).
    pub fn interleaved(columns: usize) -> Result<Self> {
        if columns == 0 || columns % 3 != 0 {
            return Err(Error::InvalidInput(format!(
                "interleaved split needs a positive column count divisible by 3, got {columns}"
            )));
        }
        Ok(DataSplit {
            train_idx: (0..columns).step_by(3).collect(),
            val_idx: (1..columns).step_by(3).collect(),
            test_idx: (2..columns).step_by(3).collect(),
        })
    }
}

/// Samples the analytical solution on the grid: `states[i][j] = x(t_j, ξ_i)`.
pub fn generate_snapshots<T: Scalar>(
    problem: &Problem<T>,
    grid: &SpaceTimeGrid<T>,
) -> Result<SnapshotSet<T>> {
    let states = Matrix::from_fn(grid.n(), grid.n_t(), |i, j| {
        problem.solution(grid.t()[j], grid.xi()[i])
    });
    if !states.is_finite() {
        return Err(Error::InvalidInput(format!(
            "{} produced non-finite snapshot entries",
            problem.tag()
        )));
    }
    Ok(SnapshotSet {
        states,
        times: grid.t().to_vec(),
        problem_tag: problem.tag().to_string(),
        grid: grid.clone(),
    })
}

fn select_columns<T: Scalar>(set: &SnapshotSet<T>, idx: &[usize]) -> SnapshotSet<T> {
    let states = Matrix::from_fn(set.n(), idx.len(), |i, j| set.states.get(i, idx[j]));
    SnapshotSet {
        states,
        times: idx.iter().map(|&j| set.times[j]).collect(),
        problem_tag: set.problem_tag.clone(),
        grid: set.grid.clone(),
    }
}

/// Interleaved train/validation/test split; the column count must divide by 3.
pub fn split<T: Scalar>(
    set: &SnapshotSet<T>,
) -> Result<(SnapshotSet<T>, SnapshotSet<T>, SnapshotSet<T>)> {
    let split = DataSplit::interleaved(set.len())?;
    Ok((
        select_columns(set, &split.train_idx),
        select_columns(set, &split.val_idx),
        select_columns(set, &split.test_idx),
    ))
}

/// Prepends the raw (unnormalized) time row; the result has 1+n rows.
///
/// A parameter block would append after the state rows; the experiments fix
/// the parameter, so only time is carried.
pub fn extend<T: Scalar>(set: &SnapshotSet<T>) -> ExtendedSnapshotSet<T> {
    let states_ext = Matrix::from_fn(set.n() + 1, set.len(), |i, j| {
        if i == 0 {
            set.times[j]
        } else {
            set.states.get(i - 1, j)
        }
    });
    ExtendedSnapshotSet {
        states_ext,
        times: set.times.clone(),
    }
}

/// Extends a single ambient column with its time stamp.
pub fn extend_column<T: Scalar>(time: T, state: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(state.len() + 1);
    out.push(time);
    out.extend_from_slice(state);
    out
}

/// Writes a snapshot set as CSV: header `t,<xi_0>,...,<xi_{n-1}>`, one row per
/// time stamp, 17 significant digits throughout.
pub fn write_snapshot_csv<T: Scalar, W: Write>(set: &SnapshotSet<T>, out: &mut W) -> std::io::Result<()> {
    write!(out, "t")?;
    for &x in set.grid.xi() {
        write!(out, ",{}", format_g17(x))?;
    }
    writeln!(out)?;
    for j in 0..set.len() {
        write!(out, "{}", format_g17(set.times[j]))?;
        for i in 0..set.n() {
            write!(out, ",{}", format_g17(set.states.get(i, j)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes an extended snapshot set as CSV: header `t,z_0,...,z_n` where the
/// data columns are the ambient extended vectors (z_0 is the time row).
pub fn write_extended_csv<T: Scalar, W: Write>(
    set: &ExtendedSnapshotSet<T>,
    out: &mut W,
) -> std::io::Result<()> {
    write!(out, "t")?;
    for i in 0..set.states_ext.rows() {
        write!(out, ",z_{i}")?;
    }
    writeln!(out)?;
    for j in 0..set.states_ext.cols() {
        write!(out, "{}", format_g17(set.times[j]))?;
        for i in 0..set.states_ext.rows() {
            write!(out, ",{}", format_g17(set.states_ext.get(i, j)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
